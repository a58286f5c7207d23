//! Tuples, hierarchy constraints on them, and sets of either.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::newick;
use crate::points::PointSet;
use crate::tree::HierarchicalTree;

/// Unordered triple of distinct points, stored sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet([usize; 3]);

impl Triplet {
    pub fn new(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == b || b == c || a == c {
            return Err(Error::NotDistinct { what: "triplet" });
        }
        let mut t = [a, b, c];
        t.sort_unstable();
        Ok(Triplet(t))
    }

    pub fn points(&self) -> [usize; 3] {
        self.0
    }

    pub fn contains(&self, p: usize) -> bool {
        self.0.contains(&p)
    }

    /// The orientation that cuts off `self.points()[i]` (`i < 3`), or the three-way split (`i == 3`).
    pub fn orientation(&self, i: usize) -> Constraint {
        let [a, b, c] = self.0;
        match i {
            0 => Constraint::SplitPair {
                pair: [b, c],
                cut: a,
            },
            1 => Constraint::SplitPair {
                pair: [a, c],
                cut: b,
            },
            2 => Constraint::SplitPair {
                pair: [a, b],
                cut: c,
            },
            3 => Constraint::ThreeWay(self.0),
            _ => panic!("triplet orientation index {i} out of range"),
        }
    }

    /// All labels of this triplet: three split pairs, then optionally the three-way split.
    pub fn orientations(&self, allow_three_way: bool) -> Vec<Constraint> {
        let count = if allow_three_way { 4 } else { 3 };
        (0..count).map(|i| self.orientation(i)).collect()
    }

    /// Inverse of [`orientation`](Self::orientation).
    pub fn orientation_index(&self, c: &Constraint) -> Option<usize> {
        (0..4).find(|&i| &self.orientation(i) == c)
    }
}

/// A k-tuple labeled by a tree shape on exactly its points.
#[derive(Clone, Debug)]
pub struct KTuple {
    points: Vec<usize>,
    shape: HierarchicalTree,
}

impl KTuple {
    pub fn new(shape: HierarchicalTree) -> Result<Self> {
        shape.validate()?;
        let points = shape.points();
        if points.len() < 3 {
            return Err(Error::TooFewPoints {
                needed: 3,
                got: points.len(),
            });
        }
        Ok(KTuple { points, shape })
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn shape(&self) -> &HierarchicalTree {
        &self.shape
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }
}

impl PartialEq for KTuple {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.shape == other.shape
    }
}

impl Eq for KTuple {}

impl Hash for KTuple {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.points.hash(state);
        self.shape.hash(state);
    }
}

/// A label on a tuple of points.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `[a,b|c]`: `c` separates from `a` and `b` strictly above where `a` and `b` separate.
    SplitPair {
        pair: [usize; 2],
        cut: usize,
    },
    /// `[a|b|c]`: all three separate at one node.
    ThreeWay([usize; 3]),
    KTuple(KTuple),
}

impl Constraint {
    /// `[a,b|c]`; symmetric in `a` and `b`.
    pub fn split_pair(a: usize, b: usize, c: usize) -> Result<Self> {
        if a == b || b == c || a == c {
            return Err(Error::NotDistinct {
                what: "split-pair constraint",
            });
        }
        Ok(Constraint::SplitPair {
            pair: [a.min(b), a.max(b)],
            cut: c,
        })
    }

    /// `[a|b|c]`; symmetric in all three.
    pub fn three_way(a: usize, b: usize, c: usize) -> Result<Self> {
        Ok(Constraint::ThreeWay(Triplet::new(a, b, c)?.points()))
    }

    pub fn ktuple(shape: HierarchicalTree) -> Result<Self> {
        Ok(Constraint::KTuple(KTuple::new(shape)?))
    }

    /// Sorted points the constraint talks about.
    pub fn points(&self) -> Vec<usize> {
        match self {
            Constraint::SplitPair { pair, cut } => {
                let mut v = vec![pair[0], pair[1], *cut];
                v.sort_unstable();
                v
            }
            Constraint::ThreeWay(t) => t.to_vec(),
            Constraint::KTuple(k) => k.points.clone(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Constraint::KTuple(k) => k.k(),
            _ => 3,
        }
    }

    /// The unlabeled triplet behind a split-pair or three-way constraint.
    pub fn triplet(&self) -> Option<Triplet> {
        match self {
            Constraint::SplitPair { pair, cut } => Triplet::new(pair[0], pair[1], *cut).ok(),
            Constraint::ThreeWay(t) => Some(Triplet(*t)),
            Constraint::KTuple(_) => None,
        }
    }

    /// Edge `(a,b)` generated by `[a,b|c]`.
    pub fn generated_edge(&self) -> Option<(usize, usize)> {
        match self {
            Constraint::SplitPair { pair, .. } => Some((pair[0], pair[1])),
            _ => None,
        }
    }

    pub fn is_split_pair(&self) -> bool {
        matches!(self, Constraint::SplitPair { .. })
    }

    pub fn is_three_way(&self) -> bool {
        matches!(self, Constraint::ThreeWay(_))
    }

    pub fn max_point(&self) -> usize {
        self.points().into_iter().max().unwrap_or(0)
    }

    pub fn map_points(&self, f: impl Fn(usize) -> usize) -> Result<Constraint> {
        match self {
            Constraint::SplitPair { pair, cut } => {
                Constraint::split_pair(f(pair[0]), f(pair[1]), f(*cut))
            }
            Constraint::ThreeWay([a, b, c]) => Constraint::three_way(f(*a), f(*b), f(*c)),
            Constraint::KTuple(k) => Constraint::ktuple(k.shape.relabel(f)),
        }
    }

    /// One line of the constraint file format, point names sorted within the tuple.
    pub fn render(&self, points: &PointSet) -> String {
        match self {
            Constraint::SplitPair { pair, cut } => {
                let mut pr = [points.name(pair[0]), points.name(pair[1])];
                pr.sort();
                format!("{} {} | {}", pr[0], pr[1], points.name(*cut))
            }
            Constraint::ThreeWay(t) => {
                let mut names: Vec<&str> = t.iter().map(|&p| points.name(p)).collect();
                names.sort();
                names.join(" | ")
            }
            Constraint::KTuple(k) => format!("tree: {}", newick::write_canonical(&k.shape, points)),
        }
    }

    /// Resolves indices to names, giving a representation independent of interning order.
    pub(crate) fn label_key(&self, points: &PointSet) -> String {
        self.render(points)
    }
}

/// An unlabeled multiset of tuples of one common size.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    points: PointSet,
    tuples: Vec<Vec<usize>>,
}

impl ConstraintSet {
    pub fn new(points: PointSet, tuples: Vec<Vec<usize>>) -> Result<Self> {
        let mut norm = Vec::with_capacity(tuples.len());
        let mut k = None;
        for mut t in tuples {
            t.sort_unstable();
            if t.windows(2).any(|w| w[0] == w[1]) {
                let name = t
                    .windows(2)
                    .find(|w| w[0] == w[1])
                    .map(|w| w[0])
                    .filter(|&p| p < points.len())
                    .map(|p| points.name(p).to_string())
                    .unwrap_or_default();
                return Err(Error::DuplicatePoint(name));
            }
            for &p in &t {
                points.check_index(p)?;
            }
            if t.len() < 3 {
                return Err(Error::TooFewPoints {
                    needed: 3,
                    got: t.len(),
                });
            }
            match k {
                None => k = Some(t.len()),
                Some(k) if k != t.len() => {
                    return Err(Error::MixedArity {
                        expected: k,
                        found: t.len(),
                    })
                }
                _ => {}
            }
            norm.push(t);
        }
        Ok(ConstraintSet {
            points,
            tuples: norm,
        })
    }

    pub fn from_triplets(points: PointSet, triplets: &[Triplet]) -> Result<Self> {
        Self::new(
            points,
            triplets.iter().map(|t| t.points().to_vec()).collect(),
        )
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Common tuple size (3 for an empty set).
    pub fn k(&self) -> usize {
        self.tuples.first().map_or(3, |t| t.len())
    }

    pub fn triplets(&self) -> Result<Vec<Triplet>> {
        self.tuples
            .iter()
            .map(|t| {
                if t.len() != 3 {
                    return Err(Error::Unsupported(format!(
                        "{}-tuple where a triplet is required",
                        t.len()
                    )));
                }
                Triplet::new(t[0], t[1], t[2])
            })
            .collect()
    }

    fn line_keys(&self) -> Vec<String> {
        self.tuples
            .iter()
            .map(|t| {
                let mut names: Vec<&str> = t.iter().map(|&p| self.points.name(p)).collect();
                names.sort();
                names.join(" ")
            })
            .collect()
    }
}

/// Structural equality: same named points and the same tuples in the same order.
impl PartialEq for ConstraintSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.line_keys() == other.line_keys()
    }
}

/// A fully labeled set of constraints.
#[derive(Clone, Debug)]
pub struct OrientedSet {
    points: PointSet,
    constraints: Vec<Constraint>,
}

impl OrientedSet {
    pub fn new(points: PointSet, constraints: Vec<Constraint>) -> Result<Self> {
        for c in &constraints {
            for p in c.points() {
                points.check_index(p)?;
            }
        }
        Ok(OrientedSet {
            points,
            constraints,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn push(&mut self, c: Constraint) -> Result<()> {
        for p in c.points() {
            self.points.check_index(p)?;
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn all_split_pairs(&self) -> bool {
        self.constraints.iter().all(Constraint::is_split_pair)
    }

    pub fn has_three_way(&self) -> bool {
        self.constraints.iter().any(Constraint::is_three_way)
    }

    pub fn into_parts(self) -> (PointSet, Vec<Constraint>) {
        (self.points, self.constraints)
    }
}

impl PartialEq for OrientedSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
            && self.constraints.len() == other.constraints.len()
            && self
                .constraints
                .iter()
                .zip(&other.constraints)
                .all(|(a, b)| a.label_key(&self.points) == b.label_key(&other.points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_pair_symmetry() {
        assert_eq!(
            Constraint::split_pair(0, 1, 2).unwrap(),
            Constraint::split_pair(1, 0, 2).unwrap()
        );
        assert_ne!(
            Constraint::split_pair(0, 1, 2).unwrap(),
            Constraint::split_pair(0, 2, 1).unwrap()
        );
        assert!(Constraint::split_pair(0, 0, 2).is_err());
    }

    #[test]
    fn three_way_symmetry() {
        let base = Constraint::three_way(0, 1, 2).unwrap();
        for (a, b, c) in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            assert_eq!(Constraint::three_way(a, b, c).unwrap(), base);
        }
    }

    #[test]
    fn triplet_orientation_round_trip() {
        let t = Triplet::new(5, 1, 3).unwrap();
        assert_eq!(t.points(), [1, 3, 5]);
        for i in 0..4 {
            assert_eq!(t.orientation_index(&t.orientation(i)), Some(i));
        }
        assert_eq!(t.orientation(2), Constraint::split_pair(1, 3, 5).unwrap());
    }

    #[test]
    fn constraint_set_checks() {
        let p = PointSet::numbered(4, "p");
        assert!(matches!(
            ConstraintSet::new(p.clone(), vec![vec![0, 1, 2], vec![0, 1, 2, 3]]),
            Err(Error::MixedArity { .. })
        ));
        assert!(matches!(
            ConstraintSet::new(p.clone(), vec![vec![0, 1, 1]]),
            Err(Error::DuplicatePoint(_))
        ));
        assert!(ConstraintSet::new(p, vec![vec![0, 1, 7]]).is_err());
    }
}
