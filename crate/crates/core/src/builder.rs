//! Top-down constructors driven by connected components of generated edges.

use crate::constraint::{Constraint, OrientedSet, Triplet};
use crate::error::{Error, Result};
use crate::mincut::stoer_wagner;
use crate::tree::{Arity, HierarchicalTree, NodeId, TreeBuilder};
use crate::tree_ops;
use crate::union_find::UnionFind;

/// A point subset connected by the edges of its induced constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedSetWitness {
    /// Sorted point indices.
    pub set: Vec<usize>,
    /// The constraints induced by `set`, in input order.
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BuildOutcome {
    Tree(HierarchicalTree),
    Witness(ClosedSetWitness),
}

impl BuildOutcome {
    pub fn is_tree(&self) -> bool {
        matches!(self, BuildOutcome::Tree(_))
    }

    pub fn tree(&self) -> Option<&HierarchicalTree> {
        match self {
            BuildOutcome::Tree(t) => Some(t),
            BuildOutcome::Witness(_) => None,
        }
    }

    pub fn witness(&self) -> Option<&ClosedSetWitness> {
        match self {
            BuildOutcome::Witness(w) => Some(w),
            BuildOutcome::Tree(_) => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Binary,
    Nonbinary,
}

struct Frame {
    node: NodeId,
    points: Vec<usize>,
    constraints: Vec<usize>,
}

/// Connected components of `points` under the constraints' edges, with
/// t-extension closure when `closure` is set. Components are sorted
/// internally and ordered by smallest member.
fn components(
    n: usize,
    points: &[usize],
    constraints: &[usize],
    all: &[Constraint],
    closure: bool,
    local: &mut [usize],
) -> Vec<Vec<usize>> {
    for (i, &p) in points.iter().enumerate() {
        local[p] = i;
    }
    let mut uf = UnionFind::new(points.len());
    let mut pending = Vec::new();
    for &ci in constraints {
        match &all[ci] {
            Constraint::SplitPair { pair, .. } => {
                uf.union(local[pair[0]], local[pair[1]]);
            }
            Constraint::ThreeWay(t) if closure => pending.push(*t),
            _ => {}
        }
    }
    if closure {
        t_extension(&mut uf, &mut pending, |p| local[p]);
    }
    debug_assert!(points.iter().all(|&p| p < n));
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let mut slot = vec![usize::MAX; points.len()];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for p in sorted {
        let r = uf.find(local[p]);
        if slot[r] == usize::MAX {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(p);
    }
    out
}

/// Applies t-extensions until none is left: a three-way constraint with two
/// points already connected joins all three.
fn t_extension(uf: &mut UnionFind, pending: &mut Vec<[usize; 3]>, idx: impl Fn(usize) -> usize) {
    loop {
        let before = pending.len();
        pending.retain(|&[a, b, c]| {
            let (a, b, c) = (idx(a), idx(b), idx(c));
            let (ra, rb, rc) = (uf.find(a), uf.find(b), uf.find(c));
            if ra == rb || rb == rc || ra == rc {
                uf.union(a, b);
                uf.union(b, c);
                false
            } else {
                true
            }
        });
        if pending.len() == before {
            break;
        }
    }
}

fn attach_comb(b: &mut TreeBuilder, at: NodeId, kids: &[NodeId]) {
    let mut cur = at;
    for i in (2..kids.len()).rev() {
        let inner = b.internal();
        b.attach(cur, inner);
        b.attach(cur, kids[i]);
        cur = inner;
    }
    b.attach(cur, kids[0]);
    b.attach(cur, kids[1]);
}

fn run(n: usize, all: &[Constraint], mode: Mode) -> Result<BuildOutcome> {
    if n == 0 {
        return Err(Error::Empty);
    }
    if n == 1 {
        return Ok(BuildOutcome::Tree(HierarchicalTree::singleton(0)));
    }
    let mut b = TreeBuilder::with_capacity(2 * n);
    let root = b.internal();
    let mut local = vec![0usize; n];
    let mut owner = vec![usize::MAX; n];
    let mut stack = vec![Frame {
        node: root,
        points: (0..n).collect(),
        constraints: (0..all.len()).collect(),
    }];
    while let Some(frame) = stack.pop() {
        let comps = components(
            n,
            &frame.points,
            &frame.constraints,
            all,
            mode == Mode::Nonbinary,
            &mut local,
        );
        if comps.len() == 1 {
            let mut set = comps.into_iter().next().unwrap();
            set.sort_unstable();
            let mut idx = frame.constraints;
            idx.sort_unstable();
            return Ok(BuildOutcome::Witness(ClosedSetWitness {
                set,
                constraints: idx.into_iter().map(|i| all[i].clone()).collect(),
            }));
        }
        for (ci, comp) in comps.iter().enumerate() {
            for &p in comp {
                owner[p] = ci;
            }
        }
        let mut child_cons: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
        for ci in frame.constraints {
            let pts = all[ci].points();
            let o = owner[pts[0]];
            if pts.iter().all(|&p| owner[p] == o) {
                child_cons[o].push(ci);
            }
        }
        let mut kids = Vec::with_capacity(comps.len());
        for (comp, cons) in comps.into_iter().zip(child_cons) {
            if comp.len() == 1 {
                kids.push(b.leaf(comp[0]));
            } else {
                let node = b.internal();
                kids.push(node);
                stack.push(Frame {
                    node,
                    points: comp,
                    constraints: cons,
                });
            }
        }
        match mode {
            Mode::Binary => attach_comb(&mut b, frame.node, &kids),
            Mode::Nonbinary => {
                for k in kids {
                    b.attach(frame.node, k);
                }
            }
        }
    }
    let arity = match mode {
        Mode::Binary => Arity::Binary,
        Mode::Nonbinary => Arity::Multiway,
    };
    let t = b.finish(root, arity)?;
    Ok(BuildOutcome::Tree(t.with_detected_arity()))
}

fn require(all: &[Constraint], allow_three_way: bool) -> Result<()> {
    for c in all {
        match c {
            Constraint::SplitPair { .. } => {}
            Constraint::ThreeWay(_) if allow_three_way => {}
            Constraint::ThreeWay(_) => {
                return Err(Error::Unsupported(
                    "three-way constraint in a binary build".into(),
                ))
            }
            Constraint::KTuple(_) => {
                return Err(Error::Unsupported(
                    "k-tuple constraint; reduce it to triplets first".into(),
                ))
            }
        }
    }
    Ok(())
}

/// Binary tree satisfying every split-pair constraint, or a closed set.
pub fn build_binary(set: &OrientedSet) -> Result<BuildOutcome> {
    build_binary_raw(set.n(), set.constraints())
}

/// [`build_binary`] over points `0..n` without a [`PointSet`](crate::PointSet).
pub fn build_binary_raw(n: usize, constraints: &[Constraint]) -> Result<BuildOutcome> {
    require(constraints, false)?;
    run(n, constraints, Mode::Binary)
}

/// Multiway tree satisfying split-pair and three-way constraints, or a closed set.
pub fn build_nonbinary(set: &OrientedSet) -> Result<BuildOutcome> {
    build_nonbinary_raw(set.n(), set.constraints())
}

pub fn build_nonbinary_raw(n: usize, constraints: &[Constraint]) -> Result<BuildOutcome> {
    require(constraints, true)?;
    run(n, constraints, Mode::Nonbinary)
}

/// Reduces k-tuples and dispatches to the binary or the non-binary builder.
///
/// Witness constraints are the reduced triplet constraints.
pub fn build(set: &OrientedSet) -> Result<BuildOutcome> {
    let reduced = reduce_all(set.constraints())?;
    if reduced.iter().any(Constraint::is_three_way) {
        run(set.n(), &reduced, Mode::Nonbinary)
    } else {
        run(set.n(), &reduced, Mode::Binary)
    }
}

/// Triplet constraints equivalent to a k-tuple constraint; other constraints pass through.
pub fn reduce_ktuple(c: &Constraint) -> Result<Vec<Constraint>> {
    match c {
        Constraint::KTuple(k) => tree_ops::triplet_constraints(k.shape()),
        other => Ok(vec![other.clone()]),
    }
}

pub fn reduce_all(cs: &[Constraint]) -> Result<Vec<Constraint>> {
    let mut out = Vec::with_capacity(cs.len());
    for c in cs {
        out.extend(reduce_ktuple(c)?);
    }
    Ok(out)
}

/// The `k - 2` triplets `{p, q, x}` for `x` in the tuple other than the pivots.
pub fn shared_pair_decomposition(tuple: &[usize], pivot: (usize, usize)) -> Result<Vec<Triplet>> {
    let (p, q) = pivot;
    if p == q {
        return Err(Error::NotDistinct { what: "pivot pair" });
    }
    for x in [p, q] {
        if !tuple.contains(&x) {
            return Err(Error::PointNotInTree(x));
        }
    }
    tuple
        .iter()
        .filter(|&&x| x != p && x != q)
        .map(|&x| Triplet::new(p, q, x))
        .collect()
}

/// A tree on the tuple satisfying one orientation of each pivot triplet.
///
/// Points whose triplet keeps them with `p` go under `p`'s side, likewise for
/// `q`; points cut off above the pivots hang off a caterpillar over both sides.
pub fn lift_shared_pair(
    tuple: &[usize],
    pivot: (usize, usize),
    labels: &[Constraint],
) -> Result<HierarchicalTree> {
    let triplets = shared_pair_decomposition(tuple, pivot)?;
    if labels.len() != triplets.len() {
        return Err(Error::Invalid(format!(
            "expected {} labels, got {}",
            triplets.len(),
            labels.len()
        )));
    }
    let (p, q) = pivot;
    let (mut sp, mut sq, mut so) = (vec![p], vec![q], Vec::new());
    for (tr, c) in triplets.iter().zip(labels) {
        let x = tr
            .points()
            .into_iter()
            .find(|&y| y != p && y != q)
            .expect("third point");
        match c {
            Constraint::SplitPair { cut, .. } if *cut == x => so.push(x),
            Constraint::SplitPair { cut, .. } if *cut == q => sp.push(x),
            Constraint::SplitPair { cut, .. } if *cut == p => sq.push(x),
            _ => {
                return Err(Error::Invalid(format!(
                    "label {c:?} is not a split pair on {tr:?}"
                )))
            }
        }
    }
    let mut b = TreeBuilder::with_capacity(2 * tuple.len());
    let side = |b: &mut TreeBuilder, pts: &[usize]| {
        let leaves: Vec<NodeId> = pts.iter().map(|&x| b.leaf(x)).collect();
        leaves[1..]
            .iter()
            .fold(leaves[0], |acc, &l| b.join(&[acc, l]))
    };
    let left = side(&mut b, &sp);
    let right = side(&mut b, &sq);
    let mut top = b.join(&[left, right]);
    for &x in &so {
        let l = b.leaf(x);
        top = b.join(&[top, l]);
    }
    b.finish(top, Arity::Binary)
}

/// True when the induced constraints (with t-extension closure for three-way
/// constraints) connect `set`.
pub fn verify_closed(constraints: &[Constraint], set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let max = *set.iter().max().unwrap();
    let mut local = vec![usize::MAX; max + 1];
    for (i, &p) in set.iter().enumerate() {
        local[p] = i;
    }
    let inside = |p: usize| p <= max && local[p] != usize::MAX;
    let mut uf = UnionFind::new(set.len());
    let mut pending = Vec::new();
    for c in constraints {
        if !c.points().iter().all(|&p| inside(p)) {
            continue;
        }
        match c {
            Constraint::SplitPair { pair, .. } => {
                uf.union(local[pair[0]], local[pair[1]]);
            }
            Constraint::ThreeWay(t) => pending.push(*t),
            Constraint::KTuple(_) => {}
        }
    }
    t_extension(&mut uf, &mut pending, |p| local[p]);
    uf.set_count() == 1
}

/// The closed set found by the builder matching the set's constraint kinds, or
/// `None` when a tree exists.
pub fn find_closed_set(set: &OrientedSet) -> Result<Option<Vec<usize>>> {
    match build(set)? {
        BuildOutcome::Tree(_) => Ok(None),
        BuildOutcome::Witness(w) => {
            debug_assert!(verify_closed(&w.constraints, &w.set));
            Ok(Some(w.set))
        }
    }
}

/// Top-down heuristic for possibly contradictory split-pair sets: split into
/// components, otherwise along a global minimum cut of the edge multigraph.
/// Returns the tree and the number of input constraints it violates.
pub fn build_agnostic(set: &OrientedSet) -> Result<(HierarchicalTree, usize)> {
    build_agnostic_raw(set.n(), set.constraints())
}

pub fn build_agnostic_raw(n: usize, all: &[Constraint]) -> Result<(HierarchicalTree, usize)> {
    require(all, false)?;
    if n == 0 {
        return Err(Error::Empty);
    }
    if n == 1 {
        return Ok((HierarchicalTree::singleton(0), 0));
    }
    let mut b = TreeBuilder::with_capacity(2 * n);
    let root = b.internal();
    let mut local = vec![0usize; n];
    let mut owner = vec![usize::MAX; n];
    let mut stack = vec![Frame {
        node: root,
        points: (0..n).collect(),
        constraints: (0..all.len()).collect(),
    }];
    while let Some(frame) = stack.pop() {
        let mut comps = components(n, &frame.points, &frame.constraints, all, false, &mut local);
        if comps.len() == 1 {
            comps = min_cut_split(&frame.points, &frame.constraints, all, &mut local);
        }
        for (ci, comp) in comps.iter().enumerate() {
            for &p in comp {
                owner[p] = ci;
            }
        }
        let mut child_cons: Vec<Vec<usize>> = vec![Vec::new(); comps.len()];
        for ci in frame.constraints {
            let pts = all[ci].points();
            let o = owner[pts[0]];
            if pts.iter().all(|&p| owner[p] == o) {
                child_cons[o].push(ci);
            }
        }
        let mut kids = Vec::with_capacity(comps.len());
        for (comp, cons) in comps.into_iter().zip(child_cons) {
            if comp.len() == 1 {
                kids.push(b.leaf(comp[0]));
            } else {
                let node = b.internal();
                kids.push(node);
                stack.push(Frame {
                    node,
                    points: comp,
                    constraints: cons,
                });
            }
        }
        attach_comb(&mut b, frame.node, &kids);
    }
    let t = b.finish(root, Arity::Binary)?;
    let bad = tree_ops::count_violations(&t, all)?;
    Ok((t, bad))
}

/// Two sides of a global minimum cut, each sorted, ordered by smallest member.
fn min_cut_split(
    points: &[usize],
    constraints: &[usize],
    all: &[Constraint],
    local: &mut [usize],
) -> Vec<Vec<usize>> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    for (i, &p) in sorted.iter().enumerate() {
        local[p] = i;
    }
    let m = sorted.len();
    let mut w = vec![vec![0u64; m]; m];
    for &ci in constraints {
        if let Some((a, b)) = all[ci].generated_edge() {
            let (a, b) = (local[a], local[b]);
            w[a][b] += 1;
            w[b][a] += 1;
        }
    }
    let (_, side) = stoer_wagner(&w).expect("at least two points");
    let mut inside = vec![false; m];
    for &v in &side {
        inside[v] = true;
    }
    let (mut a, mut b): (Vec<usize>, Vec<usize>) = (Vec::new(), Vec::new());
    for (i, &p) in sorted.iter().enumerate() {
        if inside[i] {
            a.push(p);
        } else {
            b.push(p);
        }
    }
    if a[0] > b[0] {
        std::mem::swap(&mut a, &mut b);
    }
    vec![a, b]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{
        enumerate_binary_trees, enumerate_multiway_trees, TreeSpace, DEFAULT_CAP,
    };
    use crate::format::parse_oriented;
    use crate::newick;
    use crate::points::PointSet;

    fn sp(a: usize, b: usize, c: usize) -> Constraint {
        Constraint::split_pair(a, b, c).unwrap()
    }

    fn tw(a: usize, b: usize, c: usize) -> Constraint {
        Constraint::three_way(a, b, c).unwrap()
    }

    fn satisfies_all(t: &HierarchicalTree, cs: &[Constraint]) -> bool {
        cs.iter().all(|c| tree_ops::satisfies(t, c).unwrap())
    }

    #[test]
    fn contradictory_triangle_is_closed() {
        let set = parse_oriented("a b | c\na c | d\na d | b\n").unwrap();
        let out = build_binary(&set).unwrap();
        let w = out.witness().unwrap();
        assert_eq!(w.set, vec![0, 1, 2, 3]);
        assert_eq!(w.constraints.len(), 3);
        assert!(verify_closed(&w.constraints, &w.set));
        assert_eq!(find_closed_set(&set).unwrap(), Some(vec![0, 1, 2, 3]));
    }

    #[test]
    fn single_split_pair() {
        let set = parse_oriented("a b | c").unwrap();
        let t = build_binary(&set).unwrap().tree().unwrap().clone();
        assert_eq!(newick::write(&t, set.points()), "((a,b),c);");
        assert_eq!(find_closed_set(&set).unwrap(), None);
    }

    #[test]
    fn comb_over_components() {
        let set = OrientedSet::new(PointSet::numbered(5, "p"), vec![sp(3, 4, 0)]).unwrap();
        let t = build_binary(&set).unwrap().tree().unwrap().clone();
        assert_eq!(t.canonical_key(), "(((0,1),2),(3,4))");
    }

    #[test]
    fn extracted_triplets_rebuild() {
        for seed in 0..5 {
            let t = tree_ops::random_binary_tree(64, seed).unwrap();
            let cs = tree_ops::triplet_constraints(&t).unwrap();
            let out = build_binary_raw(64, &cs).unwrap();
            let built = out.tree().unwrap();
            assert!(built.is_binary());
            assert!(satisfies_all(built, &cs));
            assert_eq!(built, &t);
        }
    }

    #[test]
    fn nonbinary_star_and_closure() {
        let out = build_nonbinary_raw(3, &[tw(0, 1, 2)]).unwrap();
        assert_eq!(out.tree().unwrap().canonical_key(), "(0,1,2)");
        let out = build_nonbinary_raw(3, &[sp(0, 1, 2), tw(0, 1, 2)]).unwrap();
        assert_eq!(out.witness().unwrap().set, vec![0, 1, 2]);
        let cs = [sp(0, 1, 2), tw(0, 2, 3)];
        let t = build_nonbinary_raw(4, &cs).unwrap().tree().unwrap().clone();
        assert!(satisfies_all(&t, &cs));
        let brute = enumerate_multiway_trees(4, DEFAULT_CAP)
            .unwrap()
            .any(|t| satisfies_all(&t, &cs));
        assert!(brute);
    }

    #[test]
    fn nonbinary_recovers_multiway_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let t = tree_ops::random_multiway_tree(30, 4, &mut rng).unwrap();
            let cs = tree_ops::triplet_constraints(&t).unwrap();
            let built = build_nonbinary_raw(30, &cs).unwrap();
            assert_eq!(built.tree().unwrap(), &t);
        }
    }

    #[test]
    fn binary_rejects_three_way() {
        assert!(matches!(
            build_binary_raw(3, &[tw(0, 1, 2)]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn reduce_ktuple_examples() {
        let mut p = PointSet::new();
        let shape = newick::parse("((a,b),c);", &mut p).unwrap();
        assert_eq!(
            reduce_ktuple(&Constraint::ktuple(shape).unwrap()).unwrap(),
            vec![sp(0, 1, 2)]
        );
        let mut p = PointSet::new();
        let shape = newick::parse("(((a,b),c),d);", &mut p).unwrap();
        let got = reduce_ktuple(&Constraint::ktuple(shape).unwrap()).unwrap();
        assert_eq!(
            got,
            vec![sp(0, 1, 2), sp(0, 1, 3), sp(0, 2, 3), sp(1, 2, 3)]
        );
        let mut p = PointSet::new();
        let shape = newick::parse("((a,b),(c,d));", &mut p).unwrap();
        let got = reduce_ktuple(&Constraint::ktuple(shape).unwrap()).unwrap();
        assert_eq!(
            got,
            vec![sp(0, 1, 2), sp(0, 1, 3), sp(2, 3, 0), sp(2, 3, 1)]
        );
    }

    #[test]
    fn ktuple_reduction_is_equivalent() {
        let shapes: Vec<HierarchicalTree> =
            enumerate_binary_trees(4, DEFAULT_CAP).unwrap().collect();
        let trees: Vec<HierarchicalTree> =
            enumerate_multiway_trees(6, DEFAULT_CAP).unwrap().collect();
        for shape in shapes.iter().step_by(2) {
            let shape = shape.relabel(|p| [1, 3, 4, 5][p]);
            let c = Constraint::ktuple(shape).unwrap();
            let reduced = reduce_ktuple(&c).unwrap();
            for t in trees.iter().step_by(7) {
                assert_eq!(
                    tree_ops::satisfies(t, &c).unwrap(),
                    satisfies_all(t, &reduced)
                );
            }
        }
    }

    #[test]
    fn shared_pair_examples() {
        let t = shared_pair_decomposition(&[0, 1, 2], (0, 1)).unwrap();
        assert_eq!(t, vec![Triplet::new(0, 1, 2).unwrap()]);
        let t = shared_pair_decomposition(&[0, 1, 2, 3, 4], (0, 1)).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[2], Triplet::new(0, 1, 4).unwrap());
        assert!(shared_pair_decomposition(&[0, 1, 2], (0, 7)).is_err());
    }

    #[test]
    fn every_shared_pair_orientation_lifts() {
        let space = TreeSpace::binary(4).unwrap();
        let tuple = [0, 1, 2, 3];
        let trs = shared_pair_decomposition(&tuple, (0, 1)).unwrap();
        for o1 in 0..3 {
            for o2 in 0..3 {
                let labels = vec![trs[0].orientation(o1), trs[1].orientation(o2)];
                assert!(space.is_satisfiable(&labels).unwrap());
                let t = lift_shared_pair(&tuple, (0, 1), &labels).unwrap();
                assert!(satisfies_all(&t, &labels));
                assert_eq!(t.validate_for(4), Ok(()));
            }
        }
    }

    #[test]
    fn agnostic_on_consistent_input_matches_baseline() {
        let t = tree_ops::random_binary_tree(20, 3).unwrap();
        let cs = tree_ops::triplet_constraints(&t).unwrap();
        let (a, bad) = build_agnostic_raw(20, &cs).unwrap();
        assert_eq!(bad, 0);
        assert_eq!(&a, build_binary_raw(20, &cs).unwrap().tree().unwrap());
    }

    #[test]
    fn agnostic_violation_counts() {
        let (_, bad) = build_agnostic_raw(3, &[sp(0, 1, 2), sp(0, 2, 1)]).unwrap();
        assert_eq!(bad, 1);
        let tri = [sp(0, 1, 2), sp(0, 2, 3), sp(0, 3, 1)];
        let (_, bad) = build_agnostic_raw(4, &tri).unwrap();
        let best = enumerate_binary_trees(4, DEFAULT_CAP)
            .unwrap()
            .map(|t| tree_ops::count_violations(&t, &tri).unwrap())
            .min()
            .unwrap();
        assert_eq!(best, 1);
        assert_eq!(bad, 1);
    }
}
