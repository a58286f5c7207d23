//! Queries and constructions over [`HierarchicalTree`]s.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraint::{Constraint, OrientedSet, Triplet};
use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::tree::{Arity, HierarchicalTree, Node, NodeId, TreeBuilder};

fn leaf_of(t: &HierarchicalTree, p: usize) -> Result<NodeId> {
    t.leaf(p).ok_or(Error::PointNotInTree(p))
}

/// Deepest common ancestor of two leaves, by walking toward the root.
pub fn lca(t: &HierarchicalTree, u: usize, v: usize) -> Result<NodeId> {
    let a = leaf_of(t, u)?;
    let b = leaf_of(t, v)?;
    Ok(lca_nodes(t, a, b))
}

pub fn lca_nodes(t: &HierarchicalTree, mut a: NodeId, mut b: NodeId) -> NodeId {
    while t.depth(a) > t.depth(b) {
        a = t.parent(a).expect("non-root has a parent");
    }
    while t.depth(b) > t.depth(a) {
        b = t.parent(b).expect("non-root has a parent");
    }
    while a != b {
        a = t.parent(a).expect("non-root has a parent");
        b = t.parent(b).expect("non-root has a parent");
    }
    a
}

/// Which label the tree gives the triplet, as an index for [`Triplet::orientation`]:
/// `0..3` names the point cut off first, `3` is the three-way split.
pub fn outcome(t: &HierarchicalTree, triplet: Triplet) -> Result<usize> {
    let [a, b, c] = triplet.points();
    let (la, lb, lc) = (leaf_of(t, a)?, leaf_of(t, b)?, leaf_of(t, c)?);
    let ab = lca_nodes(t, la, lb);
    let ac = lca_nodes(t, la, lc);
    let bc = lca_nodes(t, lb, lc);
    Ok(if ab == ac && ac == bc {
        3
    } else if ac == bc {
        2
    } else if ab == bc {
        1
    } else {
        0
    })
}

/// The unique split-pair or three-way constraint the tree satisfies on three leaves.
pub fn classify(t: &HierarchicalTree, triplet: Triplet) -> Result<Constraint> {
    Ok(triplet.orientation(outcome(t, triplet)?))
}

pub fn satisfies(t: &HierarchicalTree, c: &Constraint) -> Result<bool> {
    match c {
        Constraint::SplitPair { .. } | Constraint::ThreeWay(_) => {
            let tr = c.triplet().expect("triplet-shaped constraint");
            Ok(classify(t, tr)? == *c)
        }
        Constraint::KTuple(k) => {
            for p in k.points() {
                leaf_of(t, *p)?;
            }
            for tr in triplets_of(k.points()) {
                if outcome(k.shape(), tr)? != outcome(t, tr)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Number of constraints in `cs` that `t` violates.
pub fn count_violations(t: &HierarchicalTree, cs: &[Constraint]) -> Result<usize> {
    let mut bad = 0;
    for c in cs {
        if !satisfies(t, c)? {
            bad += 1;
        }
    }
    Ok(bad)
}

/// All 3-subsets of `points` (taken in the given order), lexicographically.
pub fn triplets_of(points: &[usize]) -> impl Iterator<Item = Triplet> + '_ {
    let n = points.len();
    (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| {
            (j + 1..n).map(move |k| {
                Triplet::new(points[i], points[j], points[k]).expect("distinct points")
            })
        })
    })
}

/// Every triplet constraint the tree satisfies, one per 3-subset of leaves, in canonical order.
pub fn triplet_constraints(t: &HierarchicalTree) -> Result<Vec<Constraint>> {
    let pts = t.points();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    triplets_of(&pts).map(|tr| classify(t, tr)).collect()
}

pub fn extract_triplets(t: &HierarchicalTree, points: &PointSet) -> Result<OrientedSet> {
    OrientedSet::new(points.clone(), triplet_constraints(t)?)
}

/// Caterpillar `(x1,(x2,(...,(x_{l-1},x_l))))`; `x_i` has rank `i`.
pub fn ladder(points: &[usize]) -> Result<HierarchicalTree> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let mut b = TreeBuilder::with_capacity(2 * points.len());
    let mut acc = b.leaf(points[points.len() - 1]);
    for &p in points[..points.len() - 1].iter().rev() {
        let l = b.leaf(p);
        acc = b.join(&[l, acc]);
    }
    b.finish(acc, Arity::Binary)
}

/// Uniformly random leaf-labeled binary tree on points `0..n`.
pub fn random_binary_tree(n: usize, seed: u64) -> Result<HierarchicalTree> {
    random_binary_tree_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Sequential insertion: leaf `i` subdivides the edge above a uniformly chosen
/// node (the root included), one of `2i - 1` positions.
pub fn random_binary_tree_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HierarchicalTree> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let items: Vec<usize> = (0..n).collect();
    let (nodes, root) = random_binary_over(&items, rng);
    let t = HierarchicalTree::from_parts_unchecked(nodes, root, Arity::Binary);
    debug_assert_eq!(t.validate(), Ok(()));
    Ok(t)
}

/// Random binary arena whose leaves carry `items` as points.
fn random_binary_over<R: Rng + ?Sized>(items: &[usize], rng: &mut R) -> (Vec<Node>, NodeId) {
    let leaf = |p| Node {
        parent: None,
        children: Vec::new(),
        point: Some(p),
    };
    let mut nodes = vec![leaf(items[0])];
    let mut root = 0;
    for &p in &items[1..] {
        let v = rng.random_range(0..nodes.len());
        let w = nodes.len();
        let l = w + 1;
        nodes.push(Node {
            parent: nodes[v].parent,
            children: vec![v, l],
            point: None,
        });
        nodes.push(Node {
            parent: Some(w),
            ..leaf(p)
        });
        match nodes[v].parent {
            Some(par) => {
                let slot = nodes[par].children.iter().position(|&c| c == v).unwrap();
                nodes[par].children[slot] = w;
            }
            None => root = w,
        }
        nodes[v].parent = Some(w);
    }
    (nodes, root)
}

/// Random multiway tree on `0..n`: each cluster of size `s` splits into a
/// uniformly drawn number of parts in `2..=min(max_children, s)`.
pub fn random_multiway_tree<R: Rng + ?Sized>(
    n: usize,
    max_children: usize,
    rng: &mut R,
) -> Result<HierarchicalTree> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if max_children < 2 {
        return Err(Error::Invalid("max_children must be at least 2".into()));
    }
    let mut pts: Vec<usize> = (0..n).collect();
    pts.shuffle(rng);
    let mut b = TreeBuilder::with_capacity(2 * n);
    let root = b.internal();
    let mut work = vec![(root, pts)];
    while let Some((node, set)) = work.pop() {
        let c = rng.random_range(2..=max_children.min(set.len()));
        let mut cuts = rand::seq::index::sample(rng, set.len() - 1, c - 1).into_vec();
        cuts.iter_mut().for_each(|x| *x += 1);
        cuts.sort_unstable();
        cuts.push(set.len());
        let mut start = 0;
        for end in cuts {
            let part = &set[start..end];
            start = end;
            if part.len() == 1 {
                let l = b.leaf(part[0]);
                b.attach(node, l);
            } else {
                let child = b.internal();
                b.attach(node, child);
                work.push((child, part.to_vec()));
            }
        }
    }
    b.finish_auto(root)
}

/// Replaces every node with more than two children by a random binary tree over those children.
pub fn binarize(t: &HierarchicalTree, seed: u64) -> HierarchicalTree {
    binarize_with(t, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn binarize_with<R: Rng + ?Sized>(t: &HierarchicalTree, rng: &mut R) -> HierarchicalTree {
    if t.is_binary() {
        return t.with_detected_arity();
    }
    let mut b = TreeBuilder::with_capacity(2 * t.nodes().len());
    let mut copy = vec![usize::MAX; t.nodes().len()];
    for v in t.postorder() {
        let node = t.node(v);
        copy[v] = if node.is_leaf() {
            b.leaf(node.point.expect("leaf point"))
        } else if node.children.len() == 2 {
            b.join(&[copy[node.children[0]], copy[node.children[1]]])
        } else {
            let kids: Vec<NodeId> = node.children.iter().map(|&c| copy[c]).collect();
            join_random_binary(&mut b, &kids, rng)
        };
    }
    b.finish(copy[t.root()], Arity::Binary)
        .expect("binarization keeps a valid tree")
}

/// Joins existing subtrees under a uniformly random binary tree; returns its root.
fn join_random_binary<R: Rng + ?Sized>(
    b: &mut TreeBuilder,
    kids: &[NodeId],
    rng: &mut R,
) -> NodeId {
    let slots: Vec<usize> = (0..kids.len()).collect();
    let (shape, root) = random_binary_over(&slots, rng);
    let mut copy = vec![usize::MAX; shape.len()];
    let shape_tree = HierarchicalTree::from_parts_unchecked(shape, root, Arity::Binary);
    for v in shape_tree.postorder() {
        let n = shape_tree.node(v);
        copy[v] = match n.point {
            Some(slot) => kids[slot],
            None => b.join(&[copy[n.children[0]], copy[n.children[1]]]),
        };
    }
    copy[root]
}

/// The tree induced on `keep`: other leaves removed, unary nodes suppressed.
pub fn restrict(t: &HierarchicalTree, keep: &[usize]) -> Result<HierarchicalTree> {
    if keep.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut wanted = vec![false; keep.iter().max().unwrap() + 1];
    for &p in keep {
        leaf_of(t, p)?;
        wanted[p] = true;
    }
    let mut b = TreeBuilder::new();
    let mut copy: Vec<Option<NodeId>> = vec![None; t.nodes().len()];
    for v in t.postorder() {
        let n = t.node(v);
        copy[v] = if n.is_leaf() {
            let p = n.point.expect("leaf point");
            (p < wanted.len() && wanted[p]).then(|| b.leaf(p))
        } else {
            let kept: Vec<NodeId> = n.children.iter().filter_map(|&c| copy[c]).collect();
            match kept.len() {
                0 => None,
                1 => Some(kept[0]),
                _ => Some(b.join(&kept)),
            }
        };
    }
    b.finish_auto(copy[t.root()].expect("at least one kept leaf"))
}
