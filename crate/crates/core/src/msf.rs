//! Near-linear tree construction from a coupled blue/red multigraph and a
//! decrementally maintained minimum spanning forest.
//!
//! Each split pair `[b,c|a]` contributes a weight-1 blue edge `{b,c}` and a
//! weight-2 red edge `{a,b}`, coupled to each other. Blue edge `i` has id `i`
//! and its red partner id `m + i`, so ascending ids list every blue edge
//! before every red edge. Phase 1 repeatedly deletes the heaviest forest edge
//! while it is red, collecting the coupled blue edges into a list `L_j` that
//! is then deleted as well. Phase 2 replays the lists backwards with a
//! union-find, joining roots under fresh nodes.

use std::collections::BTreeSet;
use std::fmt;

use crate::builder::{self, BuildOutcome};
use crate::constraint::{Constraint, OrientedSet};
use crate::error::{Error, Result};
use crate::tree::{Arity, NodeId, TreeBuilder};
use crate::union_find::UnionFind;

pub type EdgeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Blue,
    Red,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Blue => "blue",
            EdgeKind::Red => "red",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledGraph {
    n: usize,
    m: usize,
    ends: Vec<(usize, usize)>,
}

impl CoupledGraph {
    pub fn new(n: usize, constraints: &[Constraint]) -> Result<Self> {
        let m = constraints.len();
        let mut ends = vec![(0, 0); 2 * m];
        for (i, c) in constraints.iter().enumerate() {
            match c {
                Constraint::SplitPair {
                    pair: [b, c],
                    cut: a,
                } => {
                    for p in [*a, *b, *c] {
                        if p >= n {
                            return Err(Error::PointOutOfRange { index: p, len: n });
                        }
                    }
                    ends[i] = (*b, *c);
                    ends[m + i] = (*a, *b);
                }
                _ => {
                    return Err(Error::Unsupported(
                        "only split pairs drive the coupled graph".into(),
                    ))
                }
            }
        }
        Ok(Self { n, m, ends })
    }

    pub fn from_set(set: &OrientedSet) -> Result<Self> {
        Self::new(set.n(), set.constraints())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of constraints; there are this many blue and this many red edges.
    pub fn constraint_count(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        2 * self.m
    }

    pub fn ends(&self, e: EdgeId) -> (usize, usize) {
        self.ends[e]
    }

    pub fn kind(&self, e: EdgeId) -> EdgeKind {
        if e < self.m {
            EdgeKind::Blue
        } else {
            EdgeKind::Red
        }
    }

    pub fn weight(&self, e: EdgeId) -> u8 {
        match self.kind(e) {
            EdgeKind::Blue => 1,
            EdgeKind::Red => 2,
        }
    }

    pub fn coupled(&self, e: EdgeId) -> EdgeId {
        if e < self.m {
            e + self.m
        } else {
            e - self.m
        }
    }

    pub fn blue_edges(&self) -> impl Iterator<Item = EdgeId> {
        0..self.m
    }
}

/// A minimum spanning forest under deletions. Edges are ordered by
/// `(weight, id)`, which makes the forest unique.
pub trait MsfBackend {
    /// Deletes an edge and returns the edge that replaced it in the forest, if any.
    fn delete_edge(&mut self, e: EdgeId) -> Option<EdgeId>;
    /// Forest edge of maximum weight, lowest id among equals.
    fn heaviest_msf_edge(&self) -> Option<EdgeId>;
    /// Connected components of the surviving graph, isolated vertices included.
    fn component_count(&self) -> usize;
    /// Vertices whose last incident edge was deleted since the previous call.
    fn newly_isolated(&mut self) -> Vec<usize>;
    fn in_forest(&self, e: EdgeId) -> bool;
    fn is_alive(&self, e: EdgeId) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BackendKind {
    #[default]
    Naive,
    Fast,
}

/// Shared liveness and degree bookkeeping.
#[derive(Clone, Debug)]
struct Alive {
    alive: Vec<bool>,
    degree: Vec<usize>,
    isolated: Vec<usize>,
}

impl Alive {
    fn new(g: &CoupledGraph) -> Self {
        let mut degree = vec![0; g.n];
        for &(a, b) in &g.ends {
            degree[a] += 1;
            degree[b] += 1;
        }
        Self {
            alive: vec![true; g.ends.len()],
            degree,
            isolated: Vec::new(),
        }
    }

    fn kill(&mut self, g: &CoupledGraph, e: EdgeId) -> bool {
        if !self.alive[e] {
            return false;
        }
        self.alive[e] = false;
        let (a, b) = g.ends[e];
        for v in [a, b] {
            self.degree[v] -= 1;
            if self.degree[v] == 0 {
                self.isolated.push(v);
            }
        }
        true
    }
}

fn heaviest_key(g: &CoupledGraph, e: EdgeId) -> (u8, EdgeId) {
    (2 - g.weight(e), e)
}

/// Recomputes the forest with Kruskal after every deletion of a forest edge.
#[derive(Clone, Debug)]
pub struct NaiveBackend<'g> {
    g: &'g CoupledGraph,
    live: Alive,
    forest: Vec<bool>,
    forest_size: usize,
}

impl<'g> NaiveBackend<'g> {
    pub fn new(g: &'g CoupledGraph) -> Self {
        let mut s = Self {
            g,
            live: Alive::new(g),
            forest: vec![false; g.ends.len()],
            forest_size: 0,
        };
        s.recompute();
        s
    }

    fn recompute(&mut self) {
        let mut uf = UnionFind::new(self.g.n);
        self.forest.iter_mut().for_each(|f| *f = false);
        self.forest_size = 0;
        // Ids ascending already list weight-1 edges before weight-2 edges.
        for e in 0..self.g.ends.len() {
            if self.live.alive[e] {
                let (a, b) = self.g.ends[e];
                if uf.union(a, b) {
                    self.forest[e] = true;
                    self.forest_size += 1;
                }
            }
        }
    }
}

impl MsfBackend for NaiveBackend<'_> {
    fn delete_edge(&mut self, e: EdgeId) -> Option<EdgeId> {
        if !self.live.kill(self.g, e) || !self.forest[e] {
            return None;
        }
        let before = self.forest.clone();
        self.recompute();
        (0..self.forest.len()).find(|&x| self.forest[x] && !before[x])
    }

    fn heaviest_msf_edge(&self) -> Option<EdgeId> {
        (0..self.forest.len())
            .filter(|&e| self.forest[e])
            .min_by_key(|&e| heaviest_key(self.g, e))
    }

    fn component_count(&self) -> usize {
        self.g.n - self.forest_size
    }

    fn newly_isolated(&mut self) -> Vec<usize> {
        std::mem::take(&mut self.live.isolated)
    }

    fn in_forest(&self, e: EdgeId) -> bool {
        self.forest[e]
    }

    fn is_alive(&self, e: EdgeId) -> bool {
        self.live.alive[e]
    }
}

/// Keeps the forest explicitly. Deleting a forest edge explores the two
/// resulting trees in lockstep until the smaller one is exhausted, then picks
/// the minimum surviving edge leaving it as the replacement.
#[derive(Clone, Debug)]
pub struct ForestBackend<'g> {
    g: &'g CoupledGraph,
    live: Alive,
    forest: Vec<bool>,
    forest_size: usize,
    tree_adj: Vec<Vec<EdgeId>>,
    incident: Vec<Vec<EdgeId>>,
    heaviest: BTreeSet<(u8, EdgeId)>,
    mark: Vec<u32>,
    epoch: u32,
}

impl<'g> ForestBackend<'g> {
    pub fn new(g: &'g CoupledGraph) -> Self {
        let mut incident = vec![Vec::new(); g.n];
        for (e, &(a, b)) in g.ends.iter().enumerate() {
            incident[a].push(e);
            if b != a {
                incident[b].push(e);
            }
        }
        let mut s = Self {
            g,
            live: Alive::new(g),
            forest: vec![false; g.ends.len()],
            forest_size: 0,
            tree_adj: vec![Vec::new(); g.n],
            incident,
            heaviest: BTreeSet::new(),
            mark: vec![0; g.n],
            epoch: 0,
        };
        let mut uf = UnionFind::new(g.n);
        for e in 0..g.ends.len() {
            let (a, b) = g.ends[e];
            if uf.union(a, b) {
                s.link(e);
            }
        }
        s
    }

    fn link(&mut self, e: EdgeId) {
        let (a, b) = self.g.ends[e];
        self.forest[e] = true;
        self.forest_size += 1;
        self.tree_adj[a].push(e);
        self.tree_adj[b].push(e);
        self.heaviest.insert(heaviest_key(self.g, e));
    }

    fn cut(&mut self, e: EdgeId) {
        let (a, b) = self.g.ends[e];
        self.forest[e] = false;
        self.forest_size -= 1;
        for v in [a, b] {
            let pos = self.tree_adj[v]
                .iter()
                .position(|&x| x == e)
                .expect("tree edge listed");
            self.tree_adj[v].swap_remove(pos);
        }
        self.heaviest.remove(&heaviest_key(self.g, e));
    }

    fn other(&self, e: EdgeId, v: usize) -> usize {
        let (a, b) = self.g.ends[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Vertices of the smaller of the two trees containing `a` and `b`, which are already separated.
    fn smaller_side(&mut self, a: usize, b: usize) -> Vec<usize> {
        self.epoch += 2;
        let (ma, mb) = (self.epoch, self.epoch + 1);
        let mut sides = [vec![a], vec![b]];
        let mut heads = [0usize, 0usize];
        self.mark[a] = ma;
        self.mark[b] = mb;
        loop {
            for s in 0..2 {
                let tag = if s == 0 { ma } else { mb };
                if heads[s] == sides[s].len() {
                    return std::mem::take(&mut sides[s]);
                }
                let v = sides[s][heads[s]];
                heads[s] += 1;
                for i in 0..self.tree_adj[v].len() {
                    let u = self.other(self.tree_adj[v][i], v);
                    if self.mark[u] != tag {
                        self.mark[u] = tag;
                        sides[s].push(u);
                    }
                }
            }
        }
    }
}

impl MsfBackend for ForestBackend<'_> {
    fn delete_edge(&mut self, e: EdgeId) -> Option<EdgeId> {
        if !self.live.kill(self.g, e) || !self.forest[e] {
            return None;
        }
        self.cut(e);
        let (a, b) = self.g.ends[e];
        let side = self.smaller_side(a, b);
        let tag = self.mark[side[0]];
        let mut best: Option<EdgeId> = None;
        for &v in &side {
            let list = &mut self.incident[v];
            list.retain(|&x| self.live.alive[x]);
            for &x in list.iter() {
                let u = if self.g.ends[x].0 == v {
                    self.g.ends[x].1
                } else {
                    self.g.ends[x].0
                };
                if self.mark[u] != tag && best.is_none_or(|y| x < y) {
                    best = Some(x);
                }
            }
        }
        if let Some(r) = best {
            self.link(r);
        }
        best
    }

    fn heaviest_msf_edge(&self) -> Option<EdgeId> {
        self.heaviest.first().map(|&(_, e)| e)
    }

    fn component_count(&self) -> usize {
        self.g.n - self.forest_size
    }

    fn newly_isolated(&mut self) -> Vec<usize> {
        std::mem::take(&mut self.live.isolated)
    }

    fn in_forest(&self, e: EdgeId) -> bool {
        self.forest[e]
    }

    fn is_alive(&self, e: EdgeId) -> bool {
        self.live.alive[e]
    }
}

/// The blue lists `L_1..L_r`, one per invocation of [`cut_inter_component_edges`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PhaseLog {
    pub lists: Vec<Vec<EdgeId>>,
}

/// One deletion, in the order performed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Deletion {
    pub edge: EdgeId,
    pub kind: EdgeKind,
    pub replaced: Option<EdgeId>,
}

impl fmt::Display for Deletion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "del {} kind={} replaced=", self.edge, self.kind)?;
        match self.replaced {
            Some(r) => write!(f, "{r}"),
            None => f.write_str("none"),
        }
    }
}

/// Deletes red forest edges while the heaviest forest edge is red, then
/// deletes the blue edges coupled to them and returns those blue edges.
pub fn cut_inter_component_edges(
    backend: &mut dyn MsfBackend,
    g: &CoupledGraph,
    trace: &mut Vec<Deletion>,
) -> Vec<EdgeId> {
    let mut del = Vec::new();
    while let Some(e) = backend.heaviest_msf_edge() {
        if g.kind(e) != EdgeKind::Red {
            break;
        }
        let replaced = backend.delete_edge(e);
        trace.push(Deletion {
            edge: e,
            kind: EdgeKind::Red,
            replaced,
        });
        del.push(g.coupled(e));
    }
    for &b in &del {
        let replaced = backend.delete_edge(b);
        trace.push(Deletion {
            edge: b,
            kind: EdgeKind::Blue,
            replaced,
        });
    }
    del
}

#[derive(Clone, Debug)]
pub struct MsfBuild {
    pub outcome: BuildOutcome,
    pub phases: PhaseLog,
    pub trace: Vec<Deletion>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MsfOptions {
    pub backend: BackendKind,
    /// Asserts the phase-structure and red-deletion invariants while building.
    pub check_invariants: bool,
}

impl Default for MsfOptions {
    fn default() -> Self {
        Self {
            backend: BackendKind::Naive,
            check_invariants: cfg!(debug_assertions),
        }
    }
}

impl MsfOptions {
    pub fn with_backend(backend: BackendKind) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

pub fn build_via_msf(set: &OrientedSet, opts: MsfOptions) -> Result<MsfBuild> {
    build_via_msf_raw(set.n(), set.constraints(), opts)
}

pub fn build_via_msf_raw(
    n: usize,
    constraints: &[Constraint],
    opts: MsfOptions,
) -> Result<MsfBuild> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let g = CoupledGraph::new(n, constraints)?;
    match opts.backend {
        BackendKind::Naive => run(
            &g,
            constraints,
            &mut NaiveBackend::new(&g),
            opts.check_invariants,
        ),
        BackendKind::Fast => run(
            &g,
            constraints,
            &mut ForestBackend::new(&g),
            opts.check_invariants,
        ),
    }
}

/// Groups of points connected by surviving blue edges, as a canonical partition.
fn blue_partition(g: &CoupledGraph, backend: &dyn MsfBackend) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(g.n);
    for e in g.blue_edges() {
        if backend.is_alive(e) {
            let (a, b) = g.ends(e);
            uf.union(a, b);
        }
    }
    uf.groups()
}

fn run(
    g: &CoupledGraph,
    constraints: &[Constraint],
    backend: &mut dyn MsfBackend,
    check: bool,
) -> Result<MsfBuild> {
    let mut phases = PhaseLog::default();
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut blue_left = g.m;
    while blue_left > 0 {
        let start = check.then(|| blue_partition(g, backend));
        let mark = trace.len();
        let list = cut_inter_component_edges(backend, g, &mut trace);
        if let Some(parts) = start {
            let mut owner = vec![0; g.n];
            for (i, p) in parts.iter().enumerate() {
                for &v in p {
                    owner[v] = i;
                }
            }
            for d in &trace[mark..] {
                if d.kind == EdgeKind::Red {
                    let (a, b) = g.ends(d.edge);
                    assert_ne!(
                        owner[a], owner[b],
                        "deleted red edge {} lies inside a blue component",
                        d.edge
                    );
                }
            }
            snapshots.push(parts);
        }
        backend.newly_isolated();
        if list.is_empty() {
            let witness = match builder::build_binary_raw(g.n, constraints)? {
                BuildOutcome::Witness(w) => w,
                BuildOutcome::Tree(_) => {
                    return Err(Error::Invalid(
                        "coupled-graph build rejected a satisfiable set".into(),
                    ))
                }
            };
            return Ok(MsfBuild {
                outcome: BuildOutcome::Witness(witness),
                phases,
                trace,
            });
        }
        blue_left -= list.len();
        phases.lists.push(list);
    }

    let mut b = TreeBuilder::with_capacity(2 * g.n);
    let mut top: Vec<NodeId> = (0..g.n).map(|p| b.leaf(p)).collect();
    let mut uf = UnionFind::new(g.n);
    for (j, list) in phases.lists.iter().enumerate().rev() {
        for &e in list.iter().rev() {
            let (x, y) = g.ends(e);
            let (rx, ry) = (uf.find(x), uf.find(y));
            if rx != ry {
                let node = b.join(&[top[rx], top[ry]]);
                uf.union(rx, ry);
                top[uf.find(rx)] = node;
            }
        }
        if check {
            assert_eq!(
                uf.groups(),
                snapshots[j],
                "union-find sets differ from the blue components before list {}",
                j + 1
            );
        }
    }
    let roots: Vec<NodeId> = uf.groups().iter().map(|grp| top[uf.find(grp[0])]).collect();
    let root = if roots.len() == 1 {
        roots[0]
    } else {
        let mut acc = b.join(&[roots[0], roots[1]]);
        for &r in &roots[2..] {
            acc = b.join(&[acc, r]);
        }
        acc
    };
    let tree = b.finish(root, Arity::Binary)?;
    Ok(MsfBuild {
        outcome: BuildOutcome::Tree(tree),
        phases,
        trace,
    })
}

/// Reduces binary k-tuple constraints to split pairs and builds with the coupled graph.
pub fn build_ktuple_via_msf(set: &OrientedSet, opts: MsfOptions) -> Result<MsfBuild> {
    let mut k = None;
    let mut reduced = Vec::new();
    for c in set.constraints() {
        let Constraint::KTuple(t) = c else {
            return Err(Error::Unsupported("expected k-tuple constraints".into()));
        };
        match k {
            None => k = Some(t.k()),
            Some(k0) if k0 != t.k() => {
                return Err(Error::MixedArity {
                    expected: k0,
                    found: t.k(),
                })
            }
            _ => {}
        }
        if !t.shape().is_binary() {
            return Err(Error::Unsupported("k-tuple with a non-binary shape".into()));
        }
        reduced.extend(builder::reduce_ktuple(c)?);
    }
    build_via_msf_raw(set.n(), &reduced, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_oriented;
    use crate::tree_ops;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(a: usize, b: usize, c: usize) -> Constraint {
        Constraint::split_pair(a, b, c).unwrap()
    }

    #[test]
    fn coupled_graph_layout() {
        // [b,c|a] with a=0, b=1, c=2.
        let g = CoupledGraph::new(3, &[sp(1, 2, 0)]).unwrap();
        assert_eq!(g.ends(0), (1, 2));
        assert_eq!(g.ends(1), (0, 1));
        assert_eq!(g.kind(1), EdgeKind::Red);
        assert_eq!(g.coupled(0), 1);
        let g = CoupledGraph::new(4, &[sp(1, 2, 0), sp(1, 2, 0), sp(2, 3, 0)]).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(g.ends(0), g.ends(1));
    }

    #[test]
    fn single_constraint_walkthrough() {
        let g = CoupledGraph::new(3, &[sp(1, 2, 0)]).unwrap();
        let mut be = NaiveBackend::new(&g);
        assert_eq!(be.heaviest_msf_edge(), Some(1));
        let mut trace = Vec::new();
        let l = cut_inter_component_edges(&mut be, &g, &mut trace);
        assert_eq!(l, vec![0]);
        assert_eq!(
            trace.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
            [
                "del 1 kind=red replaced=none",
                "del 0 kind=blue replaced=none"
            ]
        );
        assert_eq!(be.component_count(), 3);
    }

    #[test]
    fn disjoint_constraints_share_one_list() {
        let g = CoupledGraph::new(6, &[sp(1, 2, 0), sp(4, 5, 3)]).unwrap();
        let mut be = NaiveBackend::new(&g);
        let l = cut_inter_component_edges(&mut be, &g, &mut Vec::new());
        assert_eq!(l, vec![0, 1]);
    }

    #[test]
    fn blue_heaviest_gives_empty_list() {
        let set = parse_oriented("a b | c\na c | d\na d | b\n").unwrap();
        let g = CoupledGraph::from_set(&set).unwrap();
        let mut be = NaiveBackend::new(&g);
        assert!(cut_inter_component_edges(&mut be, &g, &mut Vec::new()).is_empty());
        let out = build_via_msf(&set, MsfOptions::default()).unwrap();
        assert_eq!(out.outcome.witness().unwrap().set, vec![0, 1, 2, 3]);
    }

    #[test]
    fn one_split_pair_tree() {
        let set = parse_oriented("a b | c").unwrap();
        let out = build_via_msf(&set, MsfOptions::default()).unwrap();
        assert_eq!(out.outcome.tree().unwrap().canonical_key(), "((0,1),2)");
        assert_eq!(out.phases.lists, vec![vec![0]]);
    }

    #[test]
    fn naive_backend_contract() {
        let t = tree_ops::random_binary_tree(12, 4).unwrap();
        let cs: Vec<Constraint> = tree_ops::triplet_constraints(&t)
            .unwrap()
            .into_iter()
            .step_by(5)
            .collect();
        let g = CoupledGraph::new(12, &cs).unwrap();
        let mut be = NaiveBackend::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut order: Vec<EdgeId> = (0..g.edge_count()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for e in order {
            let forest_before: Vec<bool> = (0..g.edge_count()).map(|x| be.in_forest(x)).collect();
            let comps_before = be.component_count();
            let was_tree = be.in_forest(e);
            let r = be.delete_edge(e);
            let forest_after: Vec<bool> = (0..g.edge_count()).map(|x| be.in_forest(x)).collect();
            if !was_tree {
                assert_eq!(forest_before, forest_after);
                assert!(r.is_none());
            } else {
                let added = (0..g.edge_count())
                    .filter(|&x| forest_after[x] && !forest_before[x])
                    .count();
                assert!(added <= 1);
                assert_eq!(
                    be.component_count(),
                    comps_before + usize::from(r.is_none())
                );
            }
        }
        assert_eq!(be.component_count(), 12);
        let mut iso = be.newly_isolated();
        iso.sort_unstable();
        iso.dedup();
        assert!(iso.len() <= 12);
    }

    #[test]
    fn backends_agree_on_every_deletion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(3..20);
            let m = rng.random_range(1..3 * n);
            let cs: Vec<Constraint> = (0..m)
                .map(|_| {
                    let idx = rand::seq::index::sample(&mut rng, n, 3).into_vec();
                    sp(idx[0], idx[1], idx[2])
                })
                .collect();
            let g = CoupledGraph::new(n, &cs).unwrap();
            let mut a = NaiveBackend::new(&g);
            let mut b = ForestBackend::new(&g);
            let mut order: Vec<EdgeId> = (0..g.edge_count()).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            for e in order {
                assert_eq!(a.heaviest_msf_edge(), b.heaviest_msf_edge());
                assert_eq!(a.delete_edge(e), b.delete_edge(e));
                assert_eq!(a.component_count(), b.component_count());
            }
        }
    }

    #[test]
    fn matches_baseline_on_random_trees() {
        for (n, seed) in [(8, 1), (64, 2), (256, 3)] {
            let t = tree_ops::random_binary_tree(n, seed).unwrap();
            let all = tree_ops::triplet_constraints(&t).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cs: Vec<Constraint> = (0..4 * n)
                .map(|_| all[rng.random_range(0..all.len())].clone())
                .collect();
            let naive = build_via_msf_raw(n, &cs, MsfOptions::default()).unwrap();
            let fast =
                build_via_msf_raw(n, &cs, MsfOptions::with_backend(BackendKind::Fast)).unwrap();
            assert_eq!(naive.phases, fast.phases);
            assert_eq!(naive.trace, fast.trace);
            let tree = naive.outcome.tree().unwrap();
            assert_eq!(tree_ops::count_violations(tree, &cs).unwrap(), 0);
            assert!(builder::build_binary_raw(n, &cs).unwrap().is_tree());
        }
    }

    #[test]
    fn full_triplet_set_recovers_tree() {
        let t = tree_ops::random_binary_tree(40, 8).unwrap();
        let cs = tree_ops::triplet_constraints(&t).unwrap();
        let out = build_via_msf_raw(40, &cs, MsfOptions::with_backend(BackendKind::Fast)).unwrap();
        assert_eq!(out.outcome.tree().unwrap(), &t);
    }

    #[test]
    fn ktuple_pipeline() {
        let set = parse_oriented("tree: (((a,b),c),d);").unwrap();
        let out = build_ktuple_via_msf(&set, MsfOptions::default()).unwrap();
        let reduced = builder::reduce_all(set.constraints()).unwrap();
        let t = out.outcome.tree().unwrap();
        assert_eq!(tree_ops::count_violations(t, &reduced).unwrap(), 0);
        assert_eq!(
            t,
            builder::build_binary_raw(4, &reduced)
                .unwrap()
                .tree()
                .unwrap()
        );

        let set = parse_oriented("tree: (((a,b),c),d);\ntree: ((a,b),(d,e));\n").unwrap();
        let out = build_ktuple_via_msf(&set, MsfOptions::default()).unwrap();
        let t = out.outcome.tree().unwrap();
        assert!(set
            .constraints()
            .iter()
            .all(|c| tree_ops::satisfies(t, c).unwrap()));

        let set = parse_oriented("tree: (a,b,c);").unwrap();
        assert!(build_ktuple_via_msf(&set, MsfOptions::default()).is_err());
    }
}
