//! Exhaustive tree enumeration and a bitset satisfiability oracle over it.
//!
//! Trees on points `0..n` are generated by sequential insertion. In the binary
//! family leaf `i` subdivides the edge above any existing node; the multiway
//! family may additionally hang leaf `i` directly under an internal node.
//! Both rules produce each tree exactly once.

use crate::constraint::{Constraint, Triplet};
use crate::error::{Error, Result};
use crate::tree::{Arity, HierarchicalTree, Node};
use crate::tree_ops;

pub const DEFAULT_CAP: usize = 8;

const NONE: u8 = u8::MAX;

/// Parent array of a tree; nodes `0..n` are the leaves, higher ids internal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shape {
    parent: Box<[u8]>,
}

impl Shape {
    fn root(&self) -> usize {
        self.parent
            .iter()
            .position(|&p| p == NONE)
            .expect("one root")
    }

    pub fn to_tree(&self, n: usize) -> HierarchicalTree {
        let len = self.parent.len();
        let mut nodes: Vec<Node> = (0..len)
            .map(|i| Node {
                parent: (self.parent[i] != NONE).then_some(self.parent[i] as usize),
                children: Vec::new(),
                point: (i < n).then_some(i),
            })
            .collect();
        for i in 0..len {
            if self.parent[i] != NONE {
                nodes[self.parent[i] as usize].children.push(i);
            }
        }
        let binary = nodes
            .iter()
            .all(|x| x.children.is_empty() || x.children.len() == 2);
        let arity = if binary {
            Arity::Binary
        } else {
            Arity::Multiway
        };
        HierarchicalTree::from_parts_unchecked(nodes, self.root(), arity)
    }

    fn depth(&self, mut v: usize) -> usize {
        let mut d = 0;
        while self.parent[v] != NONE {
            v = self.parent[v] as usize;
            d += 1;
        }
        d
    }

    fn lca(&self, a: usize, b: usize, depth: &[usize]) -> usize {
        let (mut a, mut b) = (a, b);
        while depth[a] > depth[b] {
            a = self.parent[a] as usize;
        }
        while depth[b] > depth[a] {
            b = self.parent[b] as usize;
        }
        while a != b {
            a = self.parent[a] as usize;
            b = self.parent[b] as usize;
        }
        a
    }

    /// Outcome codes (as in [`tree_ops::outcome`]) for every triplet of `0..n`, lexicographic order.
    fn outcomes(&self, n: usize) -> Vec<u8> {
        let depth: Vec<usize> = (0..self.parent.len()).map(|v| self.depth(v)).collect();
        let mut pair = vec![0usize; n * n];
        for a in 0..n {
            for b in a + 1..n {
                pair[a * n + b] = self.lca(a, b, &depth);
            }
        }
        let mut out = Vec::with_capacity(n * n * n / 6);
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let (ab, ac, bc) = (pair[a * n + b], pair[a * n + c], pair[b * n + c]);
                    out.push(if ab == ac && ac == bc {
                        3
                    } else if ac == bc {
                        2
                    } else if ab == bc {
                        1
                    } else {
                        0
                    });
                }
            }
        }
        out
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if n > cap {
        return Err(Error::budget(
            "enumeration cap",
            format!("n = {n} exceeds cap {cap}"),
        ));
    }
    if 2 * n > NONE as usize {
        return Err(Error::budget(
            "enumeration cap",
            format!("n = {n} too large for compact shapes"),
        ));
    }
    Ok(())
}

/// All tree shapes on `0..n` in generation order.
pub fn enumerate_shapes(n: usize, arity: Arity, cap: usize) -> Result<Vec<Shape>> {
    check_cap(n, cap)?;
    if n == 1 {
        return Ok(vec![Shape {
            parent: vec![NONE].into_boxed_slice(),
        }]);
    }
    let mut parent = vec![NONE; 2 * n - 1];
    parent[0] = n as u8;
    parent[1] = n as u8;
    let mut out = Vec::new();
    let mut st = Insert {
        n,
        multiway: arity == Arity::Multiway,
        parent,
        internals: 1,
        out: &mut out,
    };
    st.recurse(2);
    Ok(out)
}

struct Insert<'a> {
    n: usize,
    multiway: bool,
    parent: Vec<u8>,
    internals: usize,
    out: &'a mut Vec<Shape>,
}

impl Insert<'_> {
    fn recurse(&mut self, i: usize) {
        if i == self.n {
            let used = self.n + self.internals;
            self.out.push(Shape {
                parent: self.parent[..used].to_vec().into_boxed_slice(),
            });
            return;
        }
        let existing: Vec<usize> = (0..i).chain(self.n..self.n + self.internals).collect();
        for &v in &existing {
            let w = self.n + self.internals;
            let saved = self.parent[v];
            self.parent[w] = saved;
            self.parent[v] = w as u8;
            self.parent[i] = w as u8;
            self.internals += 1;
            self.recurse(i + 1);
            self.internals -= 1;
            self.parent[v] = saved;
            self.parent[w] = NONE;
            self.parent[i] = NONE;
        }
        if self.multiway {
            for u in self.n..self.n + self.internals {
                self.parent[i] = u as u8;
                self.recurse(i + 1);
                self.parent[i] = NONE;
            }
        }
    }
}

/// Every binary tree on points `0..n`; `(2n-3)!!` of them.
pub fn enumerate_binary_trees(
    n: usize,
    cap: usize,
) -> Result<impl Iterator<Item = HierarchicalTree>> {
    let shapes = enumerate_shapes(n, Arity::Binary, cap)?;
    Ok(shapes.into_iter().map(move |s| s.to_tree(n)))
}

/// Every multiway (including binary) tree on points `0..n`.
pub fn enumerate_multiway_trees(
    n: usize,
    cap: usize,
) -> Result<impl Iterator<Item = HierarchicalTree>> {
    let shapes = enumerate_shapes(n, Arity::Multiway, cap)?;
    Ok(shapes.into_iter().map(move |s| s.to_tree(n)))
}

/// `(2n-3)!!`, the number of binary trees on `n` labeled leaves.
pub fn binary_tree_count(n: usize) -> u128 {
    (1..n.max(2) as u128).map(|i| 2 * i - 1).product()
}

/// Position of `{a,b,c}` in the lexicographic list of 3-subsets of `0..n`.
pub fn triplet_rank(t: Triplet, n: usize) -> usize {
    let [a, b, c] = t.points();
    let before_a: usize = (0..a).map(|i| (n - 1 - i) * (n - 2 - i) / 2).sum();
    let before_b: usize = (a + 1..b).map(|j| n - 1 - j).sum();
    before_a + before_b + (c - b - 1)
}

pub type Bits = Vec<u64>;

pub fn bits_count(b: &[u64]) -> u64 {
    b.iter().map(|w| w.count_ones() as u64).sum()
}

pub fn bits_and(a: &[u64], b: &[u64]) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

pub fn bits_first(b: &[u64]) -> Option<usize> {
    b.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// All trees of one family on `0..n` with, per triplet and label, the set of trees giving that label.
#[derive(Clone, Debug)]
pub struct TreeSpace {
    n: usize,
    arity: Arity,
    shapes: Vec<Shape>,
    triplets: usize,
    /// Index `triplet * 4 + outcome`.
    labels: Vec<Bits>,
}

impl TreeSpace {
    pub fn new(n: usize, arity: Arity, cap: usize) -> Result<Self> {
        let shapes = enumerate_shapes(n, arity, cap)?;
        let triplets = if n < 3 { 0 } else { n * (n - 1) * (n - 2) / 6 };
        let words = shapes.len().div_ceil(64);
        let mut labels = vec![vec![0u64; words]; triplets * 4];
        for (i, s) in shapes.iter().enumerate() {
            if triplets == 0 {
                break;
            }
            for (t, o) in s.outcomes(n).into_iter().enumerate() {
                labels[t * 4 + o as usize][i / 64] |= 1 << (i % 64);
            }
        }
        Ok(Self {
            n,
            arity,
            shapes,
            triplets,
            labels,
        })
    }

    pub fn binary(n: usize) -> Result<Self> {
        Self::new(n, Arity::Binary, DEFAULT_CAP)
    }

    pub fn multiway(n: usize) -> Result<Self> {
        Self::new(n, Arity::Multiway, DEFAULT_CAP)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn triplet_count(&self) -> usize {
        self.triplets
    }

    pub fn tree(&self, i: usize) -> HierarchicalTree {
        self.shapes[i].to_tree(self.n)
    }

    pub fn all(&self) -> Bits {
        let mut b = vec![u64::MAX; self.shapes.len().div_ceil(64)];
        let extra = b.len() * 64 - self.shapes.len();
        if extra > 0 {
            let last = b.len() - 1;
            b[last] >>= extra;
        }
        b
    }

    /// Trees giving `triplet` the label with outcome code `outcome`.
    pub fn label_set(&self, triplet: Triplet, outcome: usize) -> Result<&[u64]> {
        let [_, _, c] = triplet.points();
        if c >= self.n {
            return Err(Error::PointOutOfRange {
                index: c,
                len: self.n,
            });
        }
        Ok(&self.labels[triplet_rank(triplet, self.n) * 4 + outcome])
    }

    pub fn outcome(&self, tree: usize, triplet: Triplet) -> Result<usize> {
        for o in 0..4 {
            let b = self.label_set(triplet, o)?;
            if b[tree / 64] >> (tree % 64) & 1 == 1 {
                return Ok(o);
            }
        }
        unreachable!("every tree labels every triplet")
    }

    /// Trees satisfying every constraint.
    pub fn satisfying(&self, cs: &[Constraint]) -> Result<Bits> {
        let mut acc = self.all();
        for c in cs {
            self.restrict(&mut acc, c)?;
        }
        Ok(acc)
    }

    pub fn restrict(&self, acc: &mut [u64], c: &Constraint) -> Result<()> {
        match c {
            Constraint::KTuple(k) => {
                for tr in tree_ops::triplets_of(k.points()) {
                    let o = tree_ops::outcome(k.shape(), tr)?;
                    and_into(acc, self.label_set(tr, o)?);
                }
            }
            _ => {
                let tr = c.triplet().expect("triplet constraint");
                let o = tr.orientation_index(c).expect("own orientation");
                and_into(acc, self.label_set(tr, o)?);
            }
        }
        Ok(())
    }

    pub fn is_satisfiable(&self, cs: &[Constraint]) -> Result<bool> {
        Ok(self.satisfying(cs)?.iter().any(|&w| w != 0))
    }

    pub fn first_satisfying(&self, cs: &[Constraint]) -> Result<Option<HierarchicalTree>> {
        Ok(bits_first(&self.satisfying(cs)?).map(|i| self.tree(i)))
    }
}

fn and_into(acc: &mut [u64], b: &[u64]) {
    for (x, y) in acc.iter_mut().zip(b) {
        *x &= y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn binary_counts_match_double_factorial() {
        for (n, want) in [
            (1, 1),
            (2, 1),
            (3, 3),
            (4, 15),
            (5, 105),
            (6, 945),
            (7, 10395),
        ] {
            let trees: Vec<_> = enumerate_binary_trees(n, DEFAULT_CAP).unwrap().collect();
            assert_eq!(trees.len(), want, "n = {n}");
            assert_eq!(binary_tree_count(n), want as u128);
            let distinct: HashSet<String> = trees.iter().map(|t| t.canonical_key()).collect();
            assert_eq!(distinct.len(), want);
            assert!(trees
                .iter()
                .all(|t| t.validate_for(n).is_ok() && t.is_binary()));
        }
    }

    #[test]
    fn multiway_counts() {
        // Number of rooted leaf-labeled trees without unary nodes.
        for (n, want) in [(2, 1), (3, 4), (4, 26), (5, 236), (6, 2752)] {
            let trees: Vec<_> = enumerate_multiway_trees(n, DEFAULT_CAP).unwrap().collect();
            assert_eq!(trees.len(), want, "n = {n}");
            let distinct: HashSet<String> = trees.iter().map(|t| t.canonical_key()).collect();
            assert_eq!(distinct.len(), want);
            assert!(trees.iter().all(|t| t.validate_for(n).is_ok()));
        }
    }

    #[test]
    fn cap_is_enforced() {
        assert!(enumerate_shapes(9, Arity::Binary, DEFAULT_CAP)
            .unwrap_err()
            .is_budget());
        assert_eq!(
            enumerate_shapes(9, Arity::Binary, 9).unwrap().len(),
            2_027_025
        );
    }

    #[test]
    fn triplet_rank_is_lexicographic() {
        let n = 7;
        let pts: Vec<usize> = (0..n).collect();
        for (i, t) in tree_ops::triplets_of(&pts).enumerate() {
            assert_eq!(triplet_rank(t, n), i);
        }
    }

    #[test]
    fn oracle_agrees_with_satisfies() {
        let space = TreeSpace::multiway(5).unwrap();
        let pts: Vec<usize> = (0..5).collect();
        for i in 0..space.len() {
            let t = space.tree(i);
            for tr in tree_ops::triplets_of(&pts) {
                assert_eq!(
                    space.outcome(i, tr).unwrap(),
                    tree_ops::outcome(&t, tr).unwrap()
                );
            }
        }
    }

    #[test]
    fn satisfying_set_sizes() {
        let space = TreeSpace::binary(4).unwrap();
        let c = Constraint::split_pair(0, 1, 2).unwrap();
        assert_eq!(bits_count(&space.satisfying(std::slice::from_ref(&c)).unwrap()), 5);
        let tri = [
            Constraint::split_pair(0, 1, 2).unwrap(),
            Constraint::split_pair(0, 2, 3).unwrap(),
            Constraint::split_pair(0, 3, 1).unwrap(),
        ];
        assert!(!space.is_satisfiable(&tri).unwrap());
        assert_eq!(bits_count(&space.all()), 15);
    }
}
