//! Exhaustive searches over orientations and shattering configurations, and
//! the explicit constructions that realize the dimension bounds.

use rayon::prelude::*;

use crate::builder::{self, lift_shared_pair, shared_pair_decomposition, BuildOutcome};
use crate::constraint::{Constraint, ConstraintSet, OrientedSet, Triplet};
use crate::enumerate::{self, Bits, TreeSpace};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::tree::{Arity, HierarchicalTree, NodeId, TreeBuilder};
use crate::tree_ops;
use crate::union_find::{RollbackUnionFind, UnionFind};

/// Caps for the exhaustive searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Orientation vectors examined by an orientation search.
    pub orientations: u64,
    /// Subsets examined by a shattering check.
    pub shatter_subsets: u64,
    /// Points allowed in the subset search for critical sets.
    pub subset_points: usize,
    /// Points allowed in a dimension search.
    pub dimension_points: usize,
    /// Nodes visited by depth-first searches.
    pub search_nodes: u64,
    /// Improving moves tried by the local connection search.
    pub local_steps: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            orientations: 3u64.pow(15),
            shatter_subsets: 1 << 20,
            subset_points: 16,
            dimension_points: 6,
            search_nodes: 50_000_000,
            local_steps: 10_000,
        }
    }
}

fn build_raw(n: usize, cs: &[Constraint], nonbinary: bool) -> BuildOutcome {
    let out = if nonbinary {
        builder::build_nonbinary_raw(n, cs)
    } else {
        builder::build_binary_raw(n, cs)
    };
    out.expect("constraints were validated for the chosen builder")
}

fn checked_space(base: u64, m: usize, cap: u64, what: &'static str) -> Result<u64> {
    let total = u32::try_from(m)
        .ok()
        .and_then(|m| base.checked_pow(m))
        .filter(|&t| t <= cap);
    total.ok_or_else(|| {
        Error::budget(
            what,
            format!("{base}^{m} candidates exceed the cap of {cap}"),
        )
    })
}

/// Mixed-radix digits of `idx`, most significant first, so that ascending
/// indices visit vectors in lexicographic order.
fn digits(mut idx: u64, radix: &[u64]) -> Vec<usize> {
    let mut out = vec![0; radix.len()];
    for i in (0..radix.len()).rev() {
        out[i] = (idx % radix[i]) as usize;
        idx /= radix[i];
    }
    out
}

/// First orientation (lexicographic over per-triplet labels) that no tree satisfies.
pub fn exists_contradictory_orientation(
    set: &ConstraintSet,
    allow_three_way: bool,
    budget: &SearchBudget,
) -> Result<Option<OrientedSet>> {
    let trs = set.triplets()?;
    let base = if allow_three_way { 4 } else { 3 };
    let total = checked_space(base, trs.len(), budget.orientations, "orientation budget")?;
    let n = set.points().len();
    let radix = vec![base; trs.len()];
    let orient = |idx: u64| -> Vec<Constraint> {
        digits(idx, &radix)
            .into_iter()
            .zip(&trs)
            .map(|(o, t)| t.orientation(o))
            .collect()
    };
    let hit = (0..total)
        .into_par_iter()
        .find_first(|&idx| !build_raw(n, &orient(idx), allow_three_way).is_tree());
    hit.map(|idx| OrientedSet::new(set.points().clone(), orient(idx)))
        .transpose()
}

fn for_each_combination(n: usize, s: usize, mut f: impl FnMut(&[usize]) -> bool) {
    if s > n {
        return;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        if f(&idx) {
            return;
        }
        let Some(i) = (0..s).rev().find(|&i| idx[i] < n - s + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn induced_count(masks: &[u32], s: u32) -> usize {
    masks.iter().filter(|&&t| t & !s == 0).count()
}

/// Smallest point subset `S` inducing at least `|S| - 1` triplets; the
/// lexicographically first among equal sizes.
pub fn find_critical_set(set: &ConstraintSet, budget: &SearchBudget) -> Result<Option<Vec<usize>>> {
    let trs = set.triplets()?;
    let n = set.points().len();
    if n > budget.subset_points.min(32) {
        return Err(Error::budget(
            "critical-set point cap",
            format!("{n} points exceed the cap of {}", budget.subset_points),
        ));
    }
    let masks: Vec<u32> = trs
        .iter()
        .map(|t| t.points().iter().fold(0u32, |m, &p| m | 1 << p))
        .collect();
    for s in 3..=n {
        let mut found = None;
        for_each_combination(n, s, |c| {
            let mask = c.iter().fold(0u32, |m, &p| m | 1 << p);
            if induced_count(&masks, mask) + 1 >= s {
                found = Some(c.to_vec());
                true
            } else {
                false
            }
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

/// An orientation of the triplets induced by a critical set whose generated edges connect it.
pub fn connect_critical_set(
    set: &ConstraintSet,
    s: &[usize],
    budget: &SearchBudget,
) -> Result<OrientedSet> {
    let trs = set.triplets()?;
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let n = set.points().len();
    let mut local = vec![usize::MAX; n];
    for (i, &p) in sorted.iter().enumerate() {
        set.points().check_index(p)?;
        local[p] = i;
    }
    let induced: Vec<Triplet> = trs
        .iter()
        .copied()
        .filter(|t| t.points().iter().all(|&p| local[p] != usize::MAX))
        .collect();
    let not_critical = || Error::Invalid("the subset is not a critical set".into());
    if sorted.len() < 3 || induced.len() + 1 < sorted.len() {
        return Err(not_critical());
    }
    if n <= budget.subset_points {
        match find_critical_set(set, budget)? {
            Some(c) if c.len() == sorted.len() => {}
            _ => return Err(not_critical()),
        }
    }
    let edges: Vec<[(usize, usize); 3]> = induced
        .iter()
        .map(|t| {
            let e = |o: usize| {
                let (a, b) = t.orientation(o).generated_edge().expect("split pair");
                (local[a], local[b])
            };
            [e(0), e(1), e(2)]
        })
        .collect();
    let choice = match connect_dfs(sorted.len(), &edges, budget.search_nodes) {
        Some(c) => c,
        None => connect_local(sorted.len(), &edges, budget.local_steps).ok_or_else(|| {
            Error::budget(
                "connection search",
                "no connecting orientation within the step cap".to_string(),
            )
        })?,
    };
    let oriented = induced
        .iter()
        .zip(choice)
        .map(|(t, o)| t.orientation(o))
        .collect();
    OrientedSet::new(set.points().clone(), oriented)
}

/// Depth-first search over edge choices with a rollback union-find. Choices
/// that merge nothing leave the partition unchanged, so only one is explored.
fn connect_dfs(size: usize, edges: &[[(usize, usize); 3]], cap: u64) -> Option<Vec<usize>> {
    struct St<'a> {
        uf: RollbackUnionFind,
        edges: &'a [[(usize, usize); 3]],
        choice: Vec<usize>,
        nodes: u64,
        cap: u64,
        aborted: bool,
    }
    fn go(st: &mut St, i: usize) -> bool {
        if st.uf.set_count() == 1 {
            return true;
        }
        if st.edges.len() - i + 1 < st.uf.set_count() {
            return false;
        }
        st.nodes += 1;
        if st.nodes > st.cap {
            st.aborted = true;
            return false;
        }
        let mut idle_tried = false;
        for o in 0..3 {
            let (a, b) = st.edges[i][o];
            let merges = st.uf.find(a) != st.uf.find(b);
            if !merges {
                if idle_tried {
                    continue;
                }
                idle_tried = true;
            }
            st.uf.union(a, b);
            st.choice[i] = o;
            if go(st, i + 1) {
                return true;
            }
            st.uf.rollback();
            if st.aborted {
                return false;
            }
        }
        false
    }
    let mut st = St {
        uf: RollbackUnionFind::new(size),
        edges,
        choice: vec![0; edges.len()],
        nodes: 0,
        cap,
        aborted: false,
    };
    go(&mut st, 0).then_some(st.choice)
}

fn components_of(size: usize, edges: &[[(usize, usize); 3]], choice: &[usize]) -> usize {
    let mut uf = UnionFind::new(size);
    for (e, &o) in edges.iter().zip(choice) {
        uf.union(e[o].0, e[o].1);
    }
    uf.set_count()
}

/// Improving reorientation of one or two triplets at a time, starting from a
/// greedy spanning choice.
fn connect_local(size: usize, edges: &[[(usize, usize); 3]], steps: usize) -> Option<Vec<usize>> {
    let mut uf = UnionFind::new(size);
    let mut choice: Vec<usize> = edges
        .iter()
        .map(|e| {
            let o = (0..3).find(|&o| !uf.same(e[o].0, e[o].1)).unwrap_or(0);
            uf.union(e[o].0, e[o].1);
            o
        })
        .collect();
    let mut score = components_of(size, edges, &choice);
    for _ in 0..steps {
        if score == 1 {
            return Some(choice);
        }
        let mut improved = false;
        'search: for i in 0..edges.len() {
            for j in i..edges.len() {
                for oi in 0..3 {
                    for oj in 0..3 {
                        if (i == j && oi != oj) || (oi == choice[i] && oj == choice[j]) {
                            continue;
                        }
                        let mut next = choice.clone();
                        next[i] = oi;
                        next[j] = oj;
                        let s = components_of(size, edges, &next);
                        if s < score {
                            choice = next;
                            score = s;
                            improved = true;
                            break 'search;
                        }
                    }
                }
            }
        }
        if !improved {
            return None;
        }
    }
    (score == 1).then_some(choice)
}

type LabelPair = (Constraint, Constraint);

fn check_pairs(
    set: &ConstraintSet,
    pairs: &[LabelPair],
    nonbinary: bool,
) -> Result<Vec<(Vec<Constraint>, Vec<Constraint>)>> {
    if pairs.len() != set.len() {
        return Err(Error::Invalid(format!(
            "{} label pairs for {} tuples",
            pairs.len(),
            set.len()
        )));
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (t, (f1, f2)) in set.tuples().iter().zip(pairs) {
        for f in [f1, f2] {
            let mut pts = f.points();
            pts.sort_unstable();
            if &pts != t {
                return Err(Error::Invalid(
                    "a label does not cover exactly its tuple".into(),
                ));
            }
        }
        if f1 == f2 {
            return Err(Error::Invalid(
                "the two labels of a tuple must differ".into(),
            ));
        }
        let (r1, r2) = (builder::reduce_ktuple(f1)?, builder::reduce_ktuple(f2)?);
        if !nonbinary && r1.iter().chain(&r2).any(Constraint::is_three_way) {
            return Err(Error::Unsupported(
                "three-way label in a binary shattering check".into(),
            ));
        }
        out.push((r1, r2));
    }
    Ok(out)
}

fn labels_for(mask: u64, red: &[(Vec<Constraint>, Vec<Constraint>)]) -> Vec<Constraint> {
    let mut cs = Vec::new();
    for (i, (r1, r2)) in red.iter().enumerate() {
        cs.extend_from_slice(if mask >> i & 1 == 1 { r1 } else { r2 });
    }
    cs
}

/// True when every choice of `f1` on a subset and `f2` elsewhere is satisfiable.
pub fn is_n_shattered(
    set: &ConstraintSet,
    pairs: &[LabelPair],
    nonbinary: bool,
    budget: &SearchBudget,
) -> Result<bool> {
    let red = check_pairs(set, pairs, nonbinary)?;
    let total = checked_space(2, red.len(), budget.shatter_subsets, "shattering budget")?;
    let n = set.points().len();
    Ok((0..total)
        .into_par_iter()
        .all(|mask| build_raw(n, &labels_for(mask, &red), nonbinary).is_tree()))
}

/// One satisfying tree per subset (bit `i` of the index selects `f1` on tuple `i`), or `None`.
pub fn shatter_witnesses(
    set: &ConstraintSet,
    pairs: &[LabelPair],
    nonbinary: bool,
    budget: &SearchBudget,
) -> Result<Option<Vec<HierarchicalTree>>> {
    let red = check_pairs(set, pairs, nonbinary)?;
    let total = checked_space(2, red.len(), budget.shatter_subsets, "shattering budget")?;
    let n = set.points().len();
    let mut out = Vec::with_capacity(total as usize);
    for mask in 0..total {
        match build_raw(n, &labels_for(mask, &red), nonbinary) {
            BuildOutcome::Tree(t) => out.push(t),
            BuildOutcome::Witness(_) => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Largest N-shattered configuration found by the dimension search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NatarajanResult {
    pub dimension: usize,
    /// Tuples of the witness configuration, each with its two labels.
    pub witness: Vec<(Vec<usize>, LabelPair)>,
}

/// Natarajan dimension of trees on `n` points with `k`-tuple labels, by exhaustive search.
pub fn natarajan_dimension(
    n: usize,
    k: usize,
    nonbinary: bool,
    budget: &SearchBudget,
) -> Result<NatarajanResult> {
    if k < 3 {
        return Err(Error::Invalid("tuple size must be at least 3".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { needed: k, got: n });
    }
    if n > budget.dimension_points {
        return Err(Error::budget(
            "dimension point cap",
            format!("{n} points exceed the cap of {}", budget.dimension_points),
        ));
    }
    let arity = if nonbinary {
        Arity::Multiway
    } else {
        Arity::Binary
    };
    let space = TreeSpace::new(n, arity, n)?;
    let shapes: Vec<HierarchicalTree> = if nonbinary {
        enumerate::enumerate_multiway_trees(k, k)?.collect()
    } else {
        enumerate::enumerate_binary_trees(k, k)?.collect()
    };
    let mut tuples = Vec::new();
    for_each_combination(n, k, |c| {
        tuples.push(c.to_vec());
        false
    });
    // Per tuple: its labels and the tree set realizing each.
    let mut labels: Vec<Vec<(Constraint, Bits)>> = Vec::with_capacity(tuples.len());
    for t in &tuples {
        let mut per = Vec::new();
        for s in &shapes {
            let c = if k == 3 {
                builder::reduce_ktuple(&Constraint::ktuple(s.relabel(|p| t[p]))?)?.remove(0)
            } else {
                Constraint::ktuple(s.relabel(|p| t[p]))?
            };
            let bits = space.satisfying(std::slice::from_ref(&c))?;
            per.push((c, bits));
        }
        labels.push(per);
    }
    let mut best = NatarajanResult {
        dimension: 0,
        witness: Vec::new(),
    };
    let mut nodes = 0u64;
    for m in 1..=tuples.len() {
        let mut path = Vec::new();
        // Points are interchangeable, so the first tuple can be fixed.
        let found = shatter_search(
            &labels,
            0,
            1,
            m,
            vec![space.all()],
            &mut path,
            &mut nodes,
            budget.search_nodes,
        )?;
        if !found {
            break;
        }
        best = NatarajanResult {
            dimension: m,
            witness: path
                .iter()
                .map(|&(t, a, b)| {
                    (
                        tuples[t].clone(),
                        (labels[t][a].0.clone(), labels[t][b].0.clone()),
                    )
                })
                .collect(),
        };
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn shatter_search(
    labels: &[Vec<(Constraint, Bits)>],
    start: usize,
    end: usize,
    remaining: usize,
    cells: Vec<Bits>,
    path: &mut Vec<(usize, usize, usize)>,
    nodes: &mut u64,
    cap: u64,
) -> Result<bool> {
    if remaining == 0 {
        return Ok(true);
    }
    for t in start..end.min(labels.len()) {
        let per = &labels[t];
        for a in 0..per.len() {
            for b in a + 1..per.len() {
                *nodes += 1;
                if *nodes > cap {
                    return Err(Error::budget(
                        "dimension search nodes",
                        format!("more than {cap} nodes"),
                    ));
                }
                let mut next = Vec::with_capacity(cells.len() * 2);
                let mut ok = true;
                for c in &cells {
                    for l in [&per[a].1, &per[b].1] {
                        let x = enumerate::bits_and(c, l);
                        if x.iter().all(|&w| w == 0) {
                            ok = false;
                            break;
                        }
                        next.push(x);
                    }
                    if !ok {
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                path.push((t, a, b));
                if shatter_search(
                    labels,
                    t + 1,
                    labels.len(),
                    remaining - 1,
                    next,
                    path,
                    nodes,
                    cap,
                )? {
                    return Ok(true);
                }
                path.pop();
            }
        }
    }
    Ok(false)
}

/// Copy of `t` in which leaf `x` becomes a cherry with the new leaf `b`.
pub fn attach_sibling(t: &HierarchicalTree, x: usize, b: usize) -> Result<HierarchicalTree> {
    if !t.contains(x) {
        return Err(Error::PointNotInTree(x));
    }
    let mut bld = TreeBuilder::with_capacity(t.nodes().len() + 2);
    let root = emit(&mut bld, t, t.root(), &mut |bld, v| {
        (t.node(v).point == Some(x)).then(|| {
            let l = bld.leaf(x);
            let nb = bld.leaf(b);
            bld.join(&[l, nb])
        })
    });
    bld.finish_auto(root)
}

/// Copies the subtree of `t` at `v` into `b`, letting `f` supply replacements for whole subtrees.
fn emit(
    b: &mut TreeBuilder,
    t: &HierarchicalTree,
    v: NodeId,
    f: &mut dyn FnMut(&mut TreeBuilder, NodeId) -> Option<NodeId>,
) -> NodeId {
    if let Some(r) = f(b, v) {
        return r;
    }
    let node = t.node(v);
    if node.is_leaf() {
        return b.leaf(node.point.expect("leaf point"));
    }
    let kids: Vec<NodeId> = node.children.iter().map(|&c| emit(b, t, c, f)).collect();
    b.join(&kids)
}

/// Tuples `A ∪ {b}` over the first `k - 1` points `A`, with labels placing
/// `b` beside the first or the second point of a fixed tree on `A`.
pub fn construct_shattered_set(
    points: &PointSet,
    k: usize,
) -> Result<(ConstraintSet, Vec<LabelPair>)> {
    let n = points.len();
    if k < 3 {
        return Err(Error::Invalid("tuple size must be at least 3".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { needed: k, got: n });
    }
    let a: Vec<usize> = (0..k - 1).collect();
    let ta = tree_ops::ladder(&a)?;
    let mut tuples = Vec::new();
    let mut pairs = Vec::new();
    for b in k - 1..n {
        let mut t = a.clone();
        t.push(b);
        tuples.push(t);
        let label = |x: usize| -> Result<Constraint> {
            let c = Constraint::ktuple(attach_sibling(&ta, x, b)?)?;
            if k == 3 {
                Ok(builder::reduce_ktuple(&c)?.remove(0))
            } else {
                Ok(c)
            }
        };
        pairs.push((label(a[0])?, label(a[1])?));
    }
    Ok((ConstraintSet::new(points.clone(), tuples)?, pairs))
}

/// Number of tuples in the overlapping chain: `ceil((n-1)/(k-2)) - 1`.
pub fn tuple_chain_length(n: usize, k: usize) -> usize {
    (n - 1).div_ceil(k - 2).saturating_sub(1)
}

/// Tuples `t_i` of `k` consecutive points starting at `(i-1)(k-2)`; neighbors share two points.
pub fn construct_tuple_chain(points: &PointSet, k: usize) -> Result<ConstraintSet> {
    let n = points.len();
    if k < 3 {
        return Err(Error::Invalid("tuple size must be at least 3".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { needed: k, got: n });
    }
    let m = tuple_chain_length(n, k);
    if m < 1 {
        return Err(Error::Invalid(format!(
            "a chain needs at least one tuple (n = {n}, k = {k})"
        )));
    }
    let tuples = (0..m)
        .map(|i| (i * (k - 2)..i * (k - 2) + k).collect())
        .collect();
    ConstraintSet::new(points.clone(), tuples)
}

/// Tree satisfying one binary orientation of every chain tuple, merged left to right.
///
/// With `a, b` the points shared by the current tree `A` and the next shape
/// `B`, the subtrees of `B` below `lca_B(a,b)` that hold `a` and `b` replace
/// the leaves `a` and `b` of `A`, and the result replaces `lca_B(a,b)` in `B`.
pub fn merge_chain(chain: &[Vec<usize>], shapes: &[HierarchicalTree]) -> Result<HierarchicalTree> {
    if chain.is_empty() || chain.len() != shapes.len() {
        return Err(Error::Invalid(
            "one shape per chain tuple is required".into(),
        ));
    }
    if shapes.iter().any(|s| !s.is_binary()) {
        return Err(Error::Unsupported("chain merge needs binary shapes".into()));
    }
    let mut cur = shapes[0].clone();
    for i in 1..chain.len() {
        let shared: Vec<usize> = chain[i]
            .iter()
            .copied()
            .filter(|p| chain[i - 1].contains(p))
            .collect();
        let [a, b] = shared[..] else {
            return Err(Error::Invalid(
                "consecutive chain tuples must share exactly two points".into(),
            ));
        };
        let bt = &shapes[i];
        let u = tree_ops::lca(bt, a, b)?;
        let side = |p: usize| -> NodeId {
            let mut v = bt.leaf(p).expect("shared point in shape");
            while bt.parent(v) != Some(u) {
                v = bt.parent(v).expect("below lca");
            }
            v
        };
        let (ca, cb) = (side(a), side(b));
        let mut bld = TreeBuilder::new();
        let a_prime = emit(
            &mut bld,
            &cur,
            cur.root(),
            &mut |bld, v| match cur.node(v).point {
                Some(p) if p == a => Some(emit(bld, bt, ca, &mut |_, _| None)),
                Some(p) if p == b => Some(emit(bld, bt, cb, &mut |_, _| None)),
                _ => None,
            },
        );
        let root = emit(&mut bld, bt, bt.root(), &mut |_, v| {
            (v == u).then_some(a_prime)
        });
        cur = bld.finish(root, Arity::Binary)?;
    }
    Ok(cur)
}

/// Contradictory orientation of k-tuples found through their pivot triplets.
///
/// Each tuple is split into the triplets sharing its two smallest points; a
/// contradictory orientation of those triplets is lifted back to one tree
/// label per tuple.
pub fn tuple_threshold_check(
    set: &ConstraintSet,
    budget: &SearchBudget,
) -> Result<Option<OrientedSet>> {
    let mut owner = Vec::new();
    let mut trs = Vec::new();
    for (i, t) in set.tuples().iter().enumerate() {
        for tr in shared_pair_decomposition(t, (t[0], t[1]))? {
            owner.push(i);
            trs.push(tr);
        }
    }
    let total = checked_space(3, trs.len(), budget.orientations, "orientation budget")?;
    let n = set.points().len();
    let radix = vec![3; trs.len()];
    let orient = |idx: u64| -> Vec<Constraint> {
        digits(idx, &radix)
            .into_iter()
            .zip(&trs)
            .map(|(o, t)| t.orientation(o))
            .collect()
    };
    let Some(idx) = (0..total)
        .into_par_iter()
        .find_first(|&idx| !build_raw(n, &orient(idx), false).is_tree())
    else {
        return Ok(None);
    };
    let labels = orient(idx);
    let mut out = Vec::with_capacity(set.len());
    for (i, t) in set.tuples().iter().enumerate() {
        let mine: Vec<Constraint> = labels
            .iter()
            .zip(&owner)
            .filter(|(_, &o)| o == i)
            .map(|(c, _)| c.clone())
            .collect();
        let tree = lift_shared_pair(t, (t[0], t[1]), &mine)?;
        out.push(if t.len() == 3 {
            mine[0].clone()
        } else {
            Constraint::ktuple(tree)?
        });
    }
    let oriented = OrientedSet::new(set.points().clone(), out)?;
    debug_assert!(!builder::build(&oriented)?.is_tree());
    Ok(Some(oriented))
}

/// First contradictory labeling of the tuples by tree shapes, over all shapes per tuple.
pub fn exists_contradictory_tuple_orientation(
    set: &ConstraintSet,
    nonbinary: bool,
    budget: &SearchBudget,
) -> Result<Option<OrientedSet>> {
    let k = set.k();
    let shapes: Vec<HierarchicalTree> = if nonbinary {
        enumerate::enumerate_multiway_trees(k, k)?.collect()
    } else {
        enumerate::enumerate_binary_trees(k, k)?.collect()
    };
    let mut options: Vec<Vec<(Constraint, Vec<Constraint>)>> = Vec::with_capacity(set.len());
    for t in set.tuples() {
        let mut per = Vec::with_capacity(shapes.len());
        for s in &shapes {
            let c = Constraint::ktuple(s.relabel(|p| t[p]))?;
            let red = builder::reduce_ktuple(&c)?;
            per.push((c, red));
        }
        options.push(per);
    }
    let total = checked_space(
        shapes.len() as u64,
        set.len(),
        budget.orientations,
        "orientation budget",
    )?;
    let n = set.points().len();
    let radix = vec![shapes.len() as u64; set.len()];
    let reduced = |idx: u64| -> Vec<Constraint> {
        digits(idx, &radix)
            .into_iter()
            .zip(&options)
            .flat_map(|(o, per)| per[o].1.iter().cloned())
            .collect()
    };
    let hit = (0..total)
        .into_par_iter()
        .find_first(|&idx| !build_raw(n, &reduced(idx), nonbinary).is_tree());
    hit.map(|idx| {
        let labels = digits(idx, &radix)
            .into_iter()
            .zip(&options)
            .map(|(o, per)| per[o].0.clone())
            .collect();
        OrientedSet::new(set.points().clone(), labels)
    })
    .transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    fn cset(n: usize, tuples: &[&[usize]]) -> ConstraintSet {
        ConstraintSet::new(
            PointSet::numbered(n, "x"),
            tuples.iter().map(|t| t.to_vec()).collect(),
        )
        .unwrap()
    }

    fn sp(a: usize, b: usize, c: usize) -> Constraint {
        Constraint::split_pair(a, b, c).unwrap()
    }

    #[test]
    fn three_triplets_on_four_points_contradict() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3], &[0, 2, 3]]);
        let found = exists_contradictory_orientation(&set, false, &budget())
            .unwrap()
            .unwrap();
        assert!(!builder::build_binary(&found).unwrap().is_tree());
    }

    #[test]
    fn two_overlapping_triplets_cannot_contradict() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3]]);
        let space = TreeSpace::binary(4).unwrap();
        let trs = set.triplets().unwrap();
        let mut any = false;
        for o1 in 0..3 {
            for o2 in 0..3 {
                any |= !space
                    .is_satisfiable(&[trs[0].orientation(o1), trs[1].orientation(o2)])
                    .unwrap();
            }
        }
        assert_eq!(
            exists_contradictory_orientation(&set, false, &budget())
                .unwrap()
                .is_some(),
            any
        );
        assert!(!any);
    }

    #[test]
    fn single_triplet_never_contradicts() {
        let set = cset(3, &[&[0, 1, 2]]);
        assert!(exists_contradictory_orientation(&set, false, &budget())
            .unwrap()
            .is_none());
        assert!(exists_contradictory_orientation(&set, true, &budget())
            .unwrap()
            .is_none());
    }

    #[test]
    fn orientation_budget_is_enforced() {
        let tuples: Vec<Vec<usize>> = (0..16).map(|i| vec![i, i + 1, i + 2]).collect();
        let set = ConstraintSet::new(PointSet::numbered(18, "x"), tuples).unwrap();
        assert!(exists_contradictory_orientation(&set, false, &budget())
            .unwrap_err()
            .is_budget());
    }

    #[test]
    fn critical_set_examples() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3], &[0, 2, 3]]);
        assert_eq!(
            find_critical_set(&set, &budget()).unwrap(),
            Some(vec![0, 1, 2, 3])
        );
        let set = cset(9, &[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]]);
        assert_eq!(find_critical_set(&set, &budget()).unwrap(), None);
        let set = cset(5, &[&[0, 1, 2], &[0, 1, 3], &[2, 3, 4], &[1, 3, 4]]);
        let c = find_critical_set(&set, &budget()).unwrap().unwrap();
        assert!(c.len() <= 5);
    }

    #[test]
    fn connect_triangle() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3], &[0, 2, 3]]);
        let o = connect_critical_set(&set, &[0, 1, 2, 3], &budget()).unwrap();
        assert!(builder::verify_closed(o.constraints(), &[0, 1, 2, 3]));
        assert!(connect_critical_set(&set, &[0, 1, 2], &budget()).is_err());
    }

    #[test]
    fn critical_sets_of_random_sets_connect() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = 8;
            let mut tuples: Vec<Vec<usize>> = Vec::new();
            while tuples.len() < n - 1 {
                let mut t = rand::seq::index::sample(&mut rng, n, 3).into_vec();
                t.sort_unstable();
                if !tuples.contains(&t) {
                    tuples.push(t);
                }
            }
            let set = ConstraintSet::new(PointSet::numbered(n, "x"), tuples).unwrap();
            let s = find_critical_set(&set, &budget()).unwrap().unwrap();
            let o = connect_critical_set(&set, &s, &budget()).unwrap();
            assert!(builder::verify_closed(o.constraints(), &s));
        }
    }

    #[test]
    fn local_search_connects_small_cases() {
        let edges = vec![
            [(0, 1), (0, 2), (1, 2)],
            [(1, 2), (1, 3), (2, 3)],
            [(0, 2), (0, 3), (2, 3)],
        ];
        let c = connect_local(4, &edges, 100).unwrap();
        assert_eq!(components_of(4, &edges, &c), 1);
    }

    #[test]
    fn shattering_two_triplets_with_witnesses() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3]]);
        let pairs = vec![(sp(0, 1, 2), sp(1, 2, 0)), (sp(1, 2, 3), sp(2, 3, 1))];
        assert!(is_n_shattered(&set, &pairs, false, &budget()).unwrap());
        let trees = shatter_witnesses(&set, &pairs, false, &budget())
            .unwrap()
            .unwrap();
        assert_eq!(trees.len(), 4);
        for (mask, t) in trees.iter().enumerate() {
            let want0 = if mask & 1 == 1 {
                &pairs[0].0
            } else {
                &pairs[0].1
            };
            let want1 = if mask & 2 == 2 {
                &pairs[1].0
            } else {
                &pairs[1].1
            };
            assert!(
                tree_ops::satisfies(t, want0).unwrap() && tree_ops::satisfies(t, want1).unwrap()
            );
        }
    }

    #[test]
    fn three_triplets_on_four_points_never_shatter() {
        let set = cset(4, &[&[0, 1, 2], &[1, 2, 3], &[0, 2, 3]]);
        let trs = set.triplets().unwrap();
        let pair_opts = [(0, 1), (0, 2), (1, 2)];
        for a in pair_opts {
            for b in pair_opts {
                for c in pair_opts {
                    let pairs: Vec<LabelPair> = [a, b, c]
                        .iter()
                        .zip(&trs)
                        .map(|(&(x, y), t)| (t.orientation(x), t.orientation(y)))
                        .collect();
                    assert!(!is_n_shattered(&set, &pairs, false, &budget()).unwrap());
                }
            }
        }
        assert!(is_n_shattered(&cset(3, &[]), &[], false, &budget()).unwrap());
    }

    #[test]
    fn small_dimensions() {
        assert_eq!(
            natarajan_dimension(4, 3, false, &budget())
                .unwrap()
                .dimension,
            2
        );
        assert_eq!(
            natarajan_dimension(3, 3, false, &budget())
                .unwrap()
                .dimension,
            1
        );
        let r = natarajan_dimension(4, 3, true, &budget()).unwrap();
        assert_eq!(r.dimension, 2);
        assert_eq!(r.witness.len(), 2);
        assert!(natarajan_dimension(7, 3, false, &budget())
            .unwrap_err()
            .is_budget());
    }

    #[test]
    fn shattered_construction_sizes() {
        for (n, k) in [(5, 3), (6, 4), (4, 4), (6, 3)] {
            let (set, pairs) = construct_shattered_set(&PointSet::numbered(n, "x"), k).unwrap();
            assert_eq!(set.len(), n - k + 1);
            assert!(
                is_n_shattered(&set, &pairs, false, &budget()).unwrap(),
                "n={n} k={k}"
            );
        }
        assert!(construct_shattered_set(&PointSet::numbered(3, "x"), 4).is_err());
    }

    #[test]
    fn chain_layout() {
        let chain = construct_tuple_chain(&PointSet::numbered(6, "x"), 4).unwrap();
        assert_eq!(chain.tuples(), [vec![0, 1, 2, 3], vec![2, 3, 4, 5]]);
        for (n, k) in [(10, 3), (11, 4), (20, 5), (9, 6)] {
            let chain = construct_tuple_chain(&PointSet::numbered(n, "x"), k).unwrap();
            assert_eq!(chain.len(), tuple_chain_length(n, k));
            assert!(chain.tuples().iter().flatten().all(|&p| p < n));
            for w in chain.tuples().windows(2) {
                assert_eq!(w[1].iter().filter(|p| w[0].contains(p)).count(), 2);
            }
        }
        assert_eq!(
            construct_tuple_chain(&PointSet::numbered(4, "x"), 4)
                .unwrap()
                .len(),
            1
        );
        assert!(construct_tuple_chain(&PointSet::numbered(3, "x"), 4).is_err());
    }

    #[test]
    fn chain_orientations_merge() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let chain = construct_tuple_chain(&PointSet::numbered(14, "x"), 5).unwrap();
        for _ in 0..50 {
            let shapes: Vec<HierarchicalTree> = chain
                .tuples()
                .iter()
                .map(|t| {
                    let s = tree_ops::random_binary_tree_with(t.len(), &mut rng).unwrap();
                    s.relabel(|p| t[p])
                })
                .collect();
            let merged = merge_chain(chain.tuples(), &shapes).unwrap();
            assert_eq!(merged.validate(), Ok(()));
            for s in &shapes {
                assert!(
                    tree_ops::satisfies(&merged, &Constraint::ktuple(s.clone()).unwrap()).unwrap()
                );
            }
        }
    }

    #[test]
    fn threshold_on_three_tuples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut all = Vec::new();
        for_each_combination(6, 4, |c| {
            all.push(c.to_vec());
            false
        });
        for _ in 0..10 {
            let pick = rand::seq::index::sample(&mut rng, all.len(), 3).into_vec();
            let set = ConstraintSet::new(
                PointSet::numbered(6, "x"),
                pick.iter().map(|&i| all[i].clone()).collect(),
            )
            .unwrap();
            let found = tuple_threshold_check(&set, &budget()).unwrap().unwrap();
            assert!(!builder::build(&found).unwrap().is_tree());
        }
        let chain = construct_tuple_chain(&PointSet::numbered(6, "x"), 4).unwrap();
        assert!(tuple_threshold_check(&chain, &budget()).unwrap().is_none());
        assert!(
            exists_contradictory_tuple_orientation(&chain, false, &budget())
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn threshold_for_triplets_matches_orientation_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let m = rng.random_range(1..5);
            let tuples: Vec<Vec<usize>> = (0..m)
                .map(|_| rand::seq::index::sample(&mut rng, 5, 3).into_vec())
                .collect();
            let set = ConstraintSet::new(PointSet::numbered(5, "x"), tuples).unwrap();
            let a = tuple_threshold_check(&set, &budget()).unwrap().is_some();
            let b = exists_contradictory_orientation(&set, false, &budget())
                .unwrap()
                .is_some();
            assert_eq!(a, b);
        }
    }
}
