//! Littlestone trees, online learners, and the adversarial game.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::builder;
use crate::constraint::{Constraint, Triplet};
use crate::enumerate::{self, Bits, TreeSpace};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::tree::HierarchicalTree;
use crate::tree_ops;

pub const DEFAULT_DEPTH_BUDGET: usize = 20;

/// Label carried by a ladder on `order`: none for two points, a split pair for
/// three, a tree label otherwise.
pub fn ladder_label(order: &[usize]) -> Result<Option<Constraint>> {
    match order.len() {
        0 | 1 => Err(Error::TooFewPoints {
            needed: 2,
            got: order.len(),
        }),
        2 => Ok(None),
        3 => Constraint::split_pair(order[1], order[2], order[0]).map(Some),
        _ => Constraint::ktuple(tree_ops::ladder(order)?).map(Some),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LittlestoneNode {
    /// Tuple presented at this node; empty at leaves.
    pub tuple: Vec<usize>,
    /// Ladder orders on the left and right edges; empty at leaves.
    pub ladders: [Vec<usize>; 2],
    pub children: Option<[usize; 2]>,
    /// Parent node and the side this node hangs on.
    pub parent: Option<(usize, usize)>,
    /// Partition `X_1..X_l` recorded where a block starts and at leaves.
    pub partition: Option<Vec<Vec<usize>>>,
}

impl LittlestoneNode {
    fn empty(parent: Option<(usize, usize)>) -> Self {
        Self {
            tuple: Vec::new(),
            ladders: [Vec::new(), Vec::new()],
            children: None,
            parent,
            partition: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Complete binary tree of tuples with two ladder labels per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LittlestoneTree {
    k: usize,
    size: usize,
    block: usize,
    depth: usize,
    nodes: Vec<LittlestoneNode>,
}

impl LittlestoneTree {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of points `n'` the tree is built over (points `0..n'`).
    pub fn size(&self) -> usize {
        self.size
    }

    /// Layers per block, `n'/k`.
    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[LittlestoneNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &LittlestoneNode {
        &self.nodes[id]
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_leaf())
            .collect()
    }

    /// Edges `(node, side)` from the root down to `leaf`.
    pub fn path(&self, leaf: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.depth);
        let mut v = leaf;
        while let Some(p) = self.nodes[v].parent {
            out.push(p);
            v = p.0;
        }
        out.reverse();
        out
    }

    pub fn edge_label(&self, node: usize, side: usize) -> Result<Option<Constraint>> {
        ladder_label(&self.nodes[node].ladders[side])
    }

    /// Points of `0..n'` ordered by the singleton partition recorded at `leaf`.
    pub fn leaf_order(&self, leaf: usize) -> Option<Vec<usize>> {
        let part = self.nodes[leaf].partition.as_ref()?;
        part.iter().map(|s| (s.len() == 1).then(|| s[0])).collect()
    }

    /// Swaps two ranks in one edge ladder; used to build corrupted trees.
    pub fn swap_ladder_ranks(&mut self, node: usize, side: usize, i: usize, j: usize) {
        self.nodes[node].ladders[side].swap(i, j);
    }
}

fn largest_power(n: usize, k: usize) -> (usize, usize) {
    let (mut p, mut e) = (1, 0);
    while p * k <= n {
        p *= k;
        e += 1;
    }
    (p, e)
}

/// Depth of the construction on `n` points with `k`-tuples: `(n'/k) log_k n'`.
pub fn littlestone_depth(n: usize, k: usize) -> usize {
    let (p, e) = largest_power(n, k);
    p / k * e
}

/// Builds the shattered tree on the largest power of `k` not above `points.len()`.
pub fn build_littlestone_tree(
    points: &PointSet,
    k: usize,
    depth_budget: usize,
) -> Result<LittlestoneTree> {
    build_inner(points.len(), k, depth_budget, None)
}

/// Same construction with ranks 1 and 2 swapped during the reassignment after `block`.
#[doc(hidden)]
pub fn build_littlestone_tree_corrupted(
    points: &PointSet,
    k: usize,
    depth_budget: usize,
    block: usize,
) -> Result<LittlestoneTree> {
    build_inner(points.len(), k, depth_budget, Some(block))
}

fn build_inner(
    n: usize,
    k: usize,
    depth_budget: usize,
    corrupt: Option<usize>,
) -> Result<LittlestoneTree> {
    if k < 2 {
        return Err(Error::Invalid("tuple size must be at least 2".into()));
    }
    if n < k {
        return Err(Error::TooFewPoints { needed: k, got: n });
    }
    let (size, levels) = largest_power(n, k);
    let block = size / k;
    let depth = block * levels;
    if depth > depth_budget {
        return Err(Error::budget(
            "depth budget",
            format!("depth {depth} exceeds the budget of {depth_budget}"),
        ));
    }
    let mut b = Bld {
        k,
        size,
        block,
        corrupt,
        nodes: vec![LittlestoneNode::empty(None)],
    };
    b.call(0, vec![(0..size).collect()], 0);
    Ok(LittlestoneTree {
        k,
        size,
        block,
        depth,
        nodes: b.nodes,
    })
}

struct Bld {
    k: usize,
    size: usize,
    block: usize,
    corrupt: Option<usize>,
    nodes: Vec<LittlestoneNode>,
}

impl Bld {
    fn call(&mut self, v: usize, partition: Vec<Vec<usize>>, level: usize) {
        debug_assert!(partition
            .iter()
            .all(|s| s.len() * partition.len() == self.size));
        debug_assert_eq!(partition[0].len(), self.size / self.k.pow(level as u32));
        let done = partition.iter().all(|s| s.len() == 1);
        let tuples: Vec<Vec<usize>> = if done {
            Vec::new()
        } else {
            partition
                .iter()
                .flat_map(|s| {
                    let mut s = s.clone();
                    s.sort_unstable();
                    s.chunks(self.k).map(<[usize]>::to_vec).collect::<Vec<_>>()
                })
                .collect()
        };
        let mut ind = vec![0; self.size];
        for (i, s) in partition.iter().enumerate() {
            for &x in s {
                ind[x] = i;
            }
        }
        self.nodes[v].partition = Some(partition);
        if done {
            return;
        }
        let mut path = Vec::with_capacity(self.block);
        self.layer(v, 0, &tuples, &ind, &mut path, level);
    }

    fn layer(
        &mut self,
        v: usize,
        tau: usize,
        tuples: &[Vec<usize>],
        ind: &[usize],
        path: &mut Vec<Vec<usize>>,
        level: usize,
    ) {
        if tau == self.block {
            let sets = ind.iter().max().map_or(1, |m| m + 1);
            let mut next = vec![Vec::new(); sets * self.k];
            for ladder in path.iter() {
                for (pos, &x) in ladder.iter().enumerate() {
                    let mut r = pos + 1;
                    if self.corrupt == Some(level) && r <= 2 {
                        r = 3 - r;
                    }
                    next[ind[x] * self.k + r - 1].push(x);
                }
            }
            self.call(v, next, level + 1);
            return;
        }
        let t = tuples[tau].clone();
        let mut rev = t.clone();
        rev.reverse();
        self.nodes[v].tuple = t.clone();
        self.nodes[v].ladders = [t.clone(), rev.clone()];
        let kids = [self.nodes.len(), self.nodes.len() + 1];
        self.nodes.push(LittlestoneNode::empty(Some((v, 0))));
        self.nodes.push(LittlestoneNode::empty(Some((v, 1))));
        self.nodes[v].children = Some(kids);
        for (side, lad) in [t, rev].into_iter().enumerate() {
            path.push(lad);
            self.layer(kids[side], tau + 1, tuples, ind, path, level);
            path.pop();
        }
    }
}

/// Every root-to-leaf labeling holds on the ladder ordered by the leaf partition.
pub fn verify_shattered(l: &LittlestoneTree) -> Result<bool> {
    let leaves = l.leaves();
    if leaves.len() > 1 << 24 {
        return Err(Error::budget(
            "path budget",
            format!("{} paths", leaves.len()),
        ));
    }
    let results: Vec<Result<bool>> = leaves
        .par_iter()
        .map(|&leaf| {
            let Some(order) = l.leaf_order(leaf) else {
                return Ok(false);
            };
            let witness = tree_ops::ladder(&order)?;
            for (v, side) in l.path(leaf) {
                if let Some(c) = l.edge_label(v, side)? {
                    if !tree_ops::satisfies(&witness, &c)? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        })
        .collect();
    results.into_iter().try_fold(true, |acc, r| Ok(acc && r?))
}

/// Every root-to-leaf label set is satisfiable, checked with the tree builder alone.
pub fn verify_shattered_by_builder(l: &LittlestoneTree) -> Result<bool> {
    let leaves = l.leaves();
    let results: Vec<Result<bool>> = leaves
        .par_iter()
        .map(|&leaf| {
            let mut labels = Vec::new();
            for (v, side) in l.path(leaf) {
                labels.extend(l.edge_label(v, side)?);
            }
            let reduced = builder::reduce_all(&labels)?;
            Ok(builder::build_binary_raw(l.size(), &reduced)?.is_tree())
        })
        .collect();
    results.into_iter().try_fold(true, |acc, r| Ok(acc && r?))
}

/// For every edge ladder `(x_1..x_k)` and every leaf below it, leaf positions increase along the ladder.
pub fn rank_order_check(l: &LittlestoneTree) -> bool {
    l.leaves().par_iter().all(|&leaf| {
        let Some(order) = l.leaf_order(leaf) else {
            return false;
        };
        let mut pos = vec![0; l.size()];
        for (i, &x) in order.iter().enumerate() {
            pos[x] = i;
        }
        l.path(leaf).iter().all(|&(v, side)| {
            l.node(v).ladders[side]
                .windows(2)
                .all(|w| pos[w[0]] < pos[w[1]])
        })
    })
}

/// At the start of block `s`, every recorded set has `n'/k^s` points.
pub fn set_sizes_check(l: &LittlestoneTree) -> bool {
    (0..l.nodes.len()).all(|v| {
        let Some(part) = &l.nodes[v].partition else {
            return true;
        };
        let mut d = 0;
        let mut u = v;
        while let Some((p, _)) = l.nodes[u].parent {
            d += 1;
            u = p;
        }
        if d % l.block != 0 {
            return false;
        }
        let want = l.size / l.k.pow((d / l.block) as u32);
        part.len() * want == l.size && part.iter().all(|s| s.len() == want)
    })
}

/// An online learner predicting one label per presented tuple.
pub trait Learner {
    fn name(&self) -> &str;
    fn predict(&mut self, tuple: &[usize]) -> Result<Constraint>;
    fn update(&mut self, tuple: &[usize], label: &Constraint) -> Result<()>;
}

/// Always predicts the ladder in ascending point order.
#[derive(Clone, Debug, Default)]
pub struct ConstantLearner;

impl Learner for ConstantLearner {
    fn name(&self) -> &str {
        "constant"
    }

    fn predict(&mut self, tuple: &[usize]) -> Result<Constraint> {
        let mut t = tuple.to_vec();
        t.sort_unstable();
        ladder_label(&t)?
            .ok_or_else(|| Error::Unsupported("two-point tuples carry no label".into()))
    }

    fn update(&mut self, _: &[usize], _: &Constraint) -> Result<()> {
        Ok(())
    }
}

fn label_of(tree: &HierarchicalTree, tuple: &[usize]) -> Result<Constraint> {
    if tuple.len() == 3 {
        tree_ops::classify(tree, Triplet::new(tuple[0], tuple[1], tuple[2])?)
    } else {
        Constraint::ktuple(tree_ops::restrict(tree, tuple)?)
    }
}

/// Predicts from a tree built over every label seen so far.
#[derive(Clone, Debug)]
pub struct ConsistentTreeLearner {
    n: usize,
    seen: Vec<Constraint>,
}

impl ConsistentTreeLearner {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            seen: Vec::new(),
        }
    }
}

impl Learner for ConsistentTreeLearner {
    fn name(&self) -> &str {
        "consistent-tree"
    }

    fn predict(&mut self, tuple: &[usize]) -> Result<Constraint> {
        let reduced = builder::reduce_all(&self.seen)?;
        let built = if reduced.iter().any(Constraint::is_three_way) {
            builder::build_nonbinary_raw(self.n, &reduced)?
        } else {
            builder::build_binary_raw(self.n, &reduced)?
        };
        match built.tree() {
            Some(t) => label_of(t, tuple),
            None => ConstantLearner.predict(tuple),
        }
    }

    fn update(&mut self, _: &[usize], label: &Constraint) -> Result<()> {
        self.seen.push(label.clone());
        Ok(())
    }
}

/// Plurality vote over the trees consistent with every label seen.
#[derive(Clone, Debug)]
pub struct HalvingLearner<'a> {
    space: &'a TreeSpace,
    version: Bits,
}

impl<'a> HalvingLearner<'a> {
    pub fn new(space: &'a TreeSpace) -> Self {
        Self {
            space,
            version: space.all(),
        }
    }

    pub fn version_space(&self) -> &[u64] {
        &self.version
    }

    pub fn version_size(&self) -> u64 {
        enumerate::bits_count(&self.version)
    }
}

/// Plurality label of `tuple` over the trees in `version`; ties go to the lowest outcome code.
fn plurality(space: &TreeSpace, version: &[u64], tuple: &[usize]) -> Result<Constraint> {
    if version.iter().all(|&w| w == 0) {
        return Err(Error::EmptyVersionSpace);
    }
    if tuple.len() == 3 {
        let t = Triplet::new(tuple[0], tuple[1], tuple[2])?;
        let mut best = (0, 0);
        for o in 0..4 {
            let c = enumerate::bits_count(&enumerate::bits_and(version, space.label_set(t, o)?));
            if c > best.1 {
                best = (o, c);
            }
        }
        return Ok(t.orientation(best.0));
    }
    let mut counts: HashMap<String, (usize, Constraint)> = HashMap::new();
    for i in 0..space.len() {
        if version[i / 64] >> (i % 64) & 1 == 1 {
            let r = tree_ops::restrict(&space.tree(i), tuple)?;
            let key = r.canonical_key();
            counts.entry(key).or_insert((0, Constraint::ktuple(r)?)).0 += 1;
        }
    }
    let (_, (_, c)) = counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.0.cmp(&a.0)))
        .expect("nonempty version space");
    Ok(c)
}

impl Learner for HalvingLearner<'_> {
    fn name(&self) -> &str {
        "halving"
    }

    fn predict(&mut self, tuple: &[usize]) -> Result<Constraint> {
        plurality(self.space, &self.version, tuple)
    }

    fn update(&mut self, _: &[usize], label: &Constraint) -> Result<()> {
        self.space.restrict(&mut self.version, label)?;
        if self.version.iter().all(|&w| w == 0) {
            return Err(Error::EmptyVersionSpace);
        }
        Ok(())
    }
}

/// One round of a game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    pub round: usize,
    pub tuple: Vec<usize>,
    pub prediction: Constraint,
    pub label: Constraint,
    pub mistake: bool,
}

/// Walks `l` from the root, always revealing a label that differs from the prediction when one exists.
pub fn adversary_game(l: &LittlestoneTree, learner: &mut dyn Learner) -> Result<Vec<Round>> {
    if l.k() < 3 {
        return Err(Error::Unsupported(
            "two-point ladders carry no label".into(),
        ));
    }
    let mut v = l.root();
    let mut rounds = Vec::with_capacity(l.depth());
    while let Some(kids) = l.node(v).children {
        let tuple = l.node(v).tuple.clone();
        let prediction = learner.predict(&tuple)?;
        let left = l.edge_label(v, 0)?.expect("labeled edge");
        let side = if left != prediction { 0 } else { 1 };
        let label = if side == 0 {
            left
        } else {
            l.edge_label(v, 1)?.expect("labeled edge")
        };
        learner.update(&tuple, &label)?;
        rounds.push(Round {
            round: rounds.len() + 1,
            mistake: prediction != label,
            tuple,
            prediction,
            label,
        });
        v = kids[side];
    }
    Ok(rounds)
}

pub fn mistakes(rounds: &[Round]) -> usize {
    rounds.iter().filter(|r| r.mistake).count()
}

/// Writes a transcript as CSV with columns `round,tuple,prediction,label,mistake`.
pub fn write_transcript<W: Write>(rounds: &[Round], points: &PointSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["round", "tuple", "prediction", "label", "mistake"])
        .map_err(io)?;
    for r in rounds {
        let tuple: Vec<&str> = r.tuple.iter().map(|&p| points.name(p)).collect();
        w.write_record([
            r.round.to_string(),
            tuple.join(" "),
            r.prediction.render(points),
            r.label.render(points),
            u8::from(r.mistake).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// `floor(log_{3/2}((2n-3)!!))`, the guaranteed halving mistake bound.
pub fn halving_bound(n: usize) -> u32 {
    let count = enumerate::binary_tree_count(n) as f64;
    (count.ln() / 1.5f64.ln()).floor() as u32
}

/// Exact worst case of the halving learner over every realizable triplet
/// sequence, by minimax over version spaces.
pub fn halving_worst_case(space: &TreeSpace) -> Result<u32> {
    if space.len() > 1024 {
        return Err(Error::budget(
            "minimax state cap",
            format!("{} trees", space.len()),
        ));
    }
    let triplets: Vec<Triplet> =
        tree_ops::triplets_of(&(0..space.n()).collect::<Vec<_>>()).collect();
    let mut memo = HashMap::new();
    minimax(space, &triplets, space.all(), &mut memo)
}

fn minimax(
    space: &TreeSpace,
    triplets: &[Triplet],
    v: Bits,
    memo: &mut HashMap<Bits, u32>,
) -> Result<u32> {
    if let Some(&x) = memo.get(&v) {
        return Ok(x);
    }
    let size = enumerate::bits_count(&v);
    let mut best = 0;
    for &t in triplets {
        let pred = plurality(space, &v, &t.points())?;
        let pred = t.orientation_index(&pred).expect("own triplet");
        for o in 0..4 {
            let next = enumerate::bits_and(&v, space.label_set(t, o)?);
            let c = enumerate::bits_count(&next);
            if c == 0 || c == size {
                continue;
            }
            let val = u32::from(o != pred) + minimax(space, triplets, next, memo)?;
            best = best.max(val);
        }
    }
    memo.insert(v, best);
    Ok(best)
}

/// Randomized adversary: presents triplets on which some consistent tree
/// disagrees with the prediction and reveals such a label, until the version space is a single tree.
pub fn adversarial_run<R: Rng + ?Sized>(
    space: &TreeSpace,
    learner: &mut dyn Learner,
    rng: &mut R,
) -> Result<Vec<Round>> {
    let triplets: Vec<Triplet> =
        tree_ops::triplets_of(&(0..space.n()).collect::<Vec<_>>()).collect();
    let mut v = space.all();
    let mut rounds = Vec::new();
    loop {
        let mut options = Vec::new();
        for &t in &triplets {
            let pred = learner.predict(&t.points())?;
            for o in 0..4 {
                let next = enumerate::bits_and(&v, space.label_set(t, o)?);
                if t.orientation(o) != pred && next.iter().any(|&w| w != 0) {
                    options.push((t, o, pred.clone()));
                }
            }
        }
        let Some((t, o, pred)) = options.choose(rng).cloned() else {
            return Ok(rounds);
        };
        let label = t.orientation(o);
        space.restrict(&mut v, &label)?;
        learner.update(&t.points(), &label)?;
        rounds.push(Round {
            round: rounds.len() + 1,
            tuple: t.points().to_vec(),
            mistake: pred != label,
            prediction: pred,
            label,
        });
    }
}

/// Outcome of the regret harness.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub rounds: usize,
    pub flip_rate: f64,
    /// Expected mistakes of the weighted-majority forecaster.
    pub learner_loss: f64,
    /// Mistakes of the best single tree in hindsight.
    pub best_loss: usize,
    pub regret: f64,
}

/// Exponentially weighted forecaster over every tree of `space` on a stream
/// labeled by `target` with random label flips at `flip_rate`.
pub fn regret_harness<R: Rng + ?Sized>(
    space: &TreeSpace,
    target: &HierarchicalTree,
    rounds: usize,
    flip_rate: f64,
    rng: &mut R,
) -> Result<RegretReport> {
    let n = space.n();
    let m = space.len();
    let eta = (8.0 * (m as f64).ln() / rounds.max(1) as f64).sqrt();
    let mut logw = vec![0.0f64; m];
    let mut losses = vec![0usize; m];
    let mut learner_loss = 0.0;
    for _ in 0..rounds {
        let idx = rand::seq::index::sample(rng, n, 3).into_vec();
        let t = Triplet::new(idx[0], idx[1], idx[2])?;
        let mut label = tree_ops::outcome(target, t)?;
        if rng.random_bool(flip_rate) {
            let others: Vec<usize> = (0..3).filter(|&o| o != label).collect();
            label = *others.choose(rng).expect("two other labels");
        }
        let right = space.label_set(t, label)?;
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut total, mut good) = (0.0, 0.0);
        for i in 0..m {
            let w = (logw[i] - top).exp();
            total += w;
            if right[i / 64] >> (i % 64) & 1 == 1 {
                good += w;
            } else {
                losses[i] += 1;
                logw[i] -= eta;
            }
        }
        learner_loss += 1.0 - good / total;
    }
    let best_loss = losses.into_iter().min().unwrap_or(0);
    Ok(RegretReport {
        rounds,
        flip_rate,
        learner_loss,
        best_loss,
        regret: learner_loss - best_loss as f64,
    })
}
