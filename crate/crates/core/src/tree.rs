//! Rooted hierarchical trees whose leaves are labeled by point indices.
//!
//! A [`HierarchicalTree`] is an immutable arena. Trees are assembled with a
//! [`TreeBuilder`], which accepts nodes in any order (top-down or bottom-up)
//! and checks every structural invariant in [`TreeBuilder::finish`].

use std::collections::HashSet;
use std::fmt;

use crate::error::Result;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Set on leaves only.
    pub point: Option<usize>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arity {
    Binary,
    Multiway,
}

/// The first invariant a tree breaks, by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeViolation {
    Empty,
    Root,
    ParentLink,
    Cycle,
    Disconnected,
    UnaryNode,
    BinaryArity,
    UnlabeledLeaf,
    LabeledInternal,
    LeafBijection,
}

impl TreeViolation {
    pub fn name(self) -> &'static str {
        match self {
            TreeViolation::Empty => "empty",
            TreeViolation::Root => "root",
            TreeViolation::ParentLink => "parent-link",
            TreeViolation::Cycle => "cycle",
            TreeViolation::Disconnected => "disconnected",
            TreeViolation::UnaryNode => "unary-node",
            TreeViolation::BinaryArity => "binary-arity",
            TreeViolation::UnlabeledLeaf => "unlabeled-leaf",
            TreeViolation::LabeledInternal => "labeled-internal",
            TreeViolation::LeafBijection => "leaf-bijection",
        }
    }
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Mutable arena used to assemble a tree.
#[derive(Clone, Debug, Default)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            nodes: Vec::with_capacity(n),
        }
    }

    pub fn leaf(&mut self, point: usize) -> NodeId {
        self.nodes.push(Node {
            parent: None,
            children: Vec::new(),
            point: Some(point),
        });
        self.nodes.len() - 1
    }

    /// A node with no children yet; fill it with [`attach`](Self::attach).
    pub fn internal(&mut self) -> NodeId {
        self.nodes.push(Node {
            parent: None,
            children: Vec::new(),
            point: None,
        });
        self.nodes.len() - 1
    }

    pub fn join(&mut self, children: &[NodeId]) -> NodeId {
        let id = self.internal();
        for &c in children {
            self.attach(id, c);
        }
        id
    }

    pub fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child].parent = Some(parent);
        self.nodes[parent].children.push(child);
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Copies the subtree of `tree` rooted at `at` into this arena.
    pub fn graft(&mut self, tree: &HierarchicalTree, at: NodeId) -> NodeId {
        self.graft_mapped(tree, at, &mut |p| p)
    }

    /// Like [`graft`](Self::graft), relabeling leaf points through `map`.
    pub fn graft_mapped(
        &mut self,
        tree: &HierarchicalTree,
        at: NodeId,
        map: &mut dyn FnMut(usize) -> usize,
    ) -> NodeId {
        let mut copy = vec![usize::MAX; tree.nodes.len()];
        for v in tree.postorder_from(at) {
            let n = &tree.nodes[v];
            copy[v] = match n.point {
                Some(p) if n.children.is_empty() => self.leaf(map(p)),
                _ => {
                    let id = self.internal();
                    for &c in &n.children {
                        self.attach(id, copy[c]);
                    }
                    id
                }
            };
        }
        copy[at]
    }

    pub fn finish(self, root: NodeId, arity: Arity) -> Result<HierarchicalTree> {
        let t = HierarchicalTree::from_parts_unchecked(self.nodes, root, arity);
        t.validate()?;
        Ok(t)
    }

    /// Finishes with [`Arity::Binary`] if every internal node has two children.
    pub fn finish_auto(self, root: NodeId) -> Result<HierarchicalTree> {
        let binary = self
            .nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2);
        let arity = if binary {
            Arity::Binary
        } else {
            Arity::Multiway
        };
        self.finish(root, arity)
    }
}

/// Immutable rooted tree. Leaves carry point indices; internal nodes are unnamed.
#[derive(Clone, Debug)]
pub struct HierarchicalTree {
    nodes: Vec<Node>,
    root: NodeId,
    arity: Arity,
    leaf_of: Vec<Option<NodeId>>,
    depth: Vec<u32>,
}

impl HierarchicalTree {
    /// Wraps raw parts without checking them; call [`validate`](Self::validate) afterwards.
    pub fn from_parts_unchecked(nodes: Vec<Node>, root: NodeId, arity: Arity) -> Self {
        let max_point = nodes.iter().filter_map(|n| n.point).max();
        let mut leaf_of = vec![None; max_point.map_or(0, |m| m + 1)];
        for (id, n) in nodes.iter().enumerate() {
            if let Some(p) = n.point {
                if leaf_of[p].is_none() {
                    leaf_of[p] = Some(id);
                }
            }
        }
        let mut depth = vec![0u32; nodes.len()];
        if root < nodes.len() {
            let mut seen = vec![false; nodes.len()];
            let mut stack = vec![root];
            seen[root] = true;
            while let Some(v) = stack.pop() {
                for &c in &nodes[v].children {
                    if c < nodes.len() && !seen[c] {
                        seen[c] = true;
                        depth[c] = depth[v] + 1;
                        stack.push(c);
                    }
                }
            }
        }
        Self {
            nodes,
            root,
            arity,
            leaf_of,
            depth,
        }
    }

    /// Single-leaf tree.
    pub fn singleton(point: usize) -> Self {
        let mut b = TreeBuilder::new();
        let r = b.leaf(point);
        b.finish(r, Arity::Binary).expect("single leaf is valid")
    }

    /// Reports the first violated invariant.
    pub fn validate(&self) -> std::result::Result<(), TreeViolation> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(TreeViolation::Empty);
        }
        if self.root >= n || self.nodes[self.root].parent.is_some() {
            return Err(TreeViolation::Root);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        let mut points = HashSet::new();
        while let Some(v) = stack.pop() {
            let node = &self.nodes[v];
            match node.children.len() {
                0 => match node.point {
                    None => return Err(TreeViolation::UnlabeledLeaf),
                    Some(p) => {
                        if !points.insert(p) {
                            return Err(TreeViolation::LeafBijection);
                        }
                    }
                },
                1 => return Err(TreeViolation::UnaryNode),
                k => {
                    if node.point.is_some() {
                        return Err(TreeViolation::LabeledInternal);
                    }
                    if k != 2 && self.arity == Arity::Binary {
                        return Err(TreeViolation::BinaryArity);
                    }
                }
            }
            for &c in &node.children {
                if c >= n || self.nodes[c].parent != Some(v) {
                    return Err(TreeViolation::ParentLink);
                }
                if seen[c] {
                    return Err(TreeViolation::Cycle);
                }
                seen[c] = true;
                stack.push(c);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TreeViolation::Disconnected);
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate), also requiring the leaves to be exactly `0..n`.
    pub fn validate_for(&self, n: usize) -> std::result::Result<(), TreeViolation> {
        self.validate()?;
        if self.leaf_count() != n || (0..n).any(|p| self.leaf(p).is_none()) {
            return Err(TreeViolation::LeafBijection);
        }
        Ok(())
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent
    }

    pub fn depth(&self, id: NodeId) -> usize {
        self.depth[id] as usize
    }

    pub fn leaf(&self, point: usize) -> Option<NodeId> {
        self.leaf_of.get(point).copied().flatten()
    }

    pub fn contains(&self, point: usize) -> bool {
        self.leaf(point).is_some()
    }

    /// Leaf points in ascending order.
    pub fn points(&self) -> Vec<usize> {
        (0..self.leaf_of.len())
            .filter(|&p| self.leaf_of[p].is_some())
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_of.iter().filter(|l| l.is_some()).count()
    }

    pub fn is_binary(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.children.is_empty() || n.children.len() == 2)
    }

    /// Nodes of the subtree at `at`, children before parents.
    pub fn postorder_from(&self, at: NodeId) -> Vec<NodeId> {
        let mut order = Vec::new();
        let mut stack = vec![(at, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in self.nodes[v].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    pub fn postorder(&self) -> Vec<NodeId> {
        self.postorder_from(self.root)
    }

    /// Leaf points below `at`, in left-to-right order.
    pub fn leaves_under(&self, at: NodeId) -> Vec<usize> {
        self.postorder_from(at)
            .into_iter()
            .filter_map(|v| {
                let n = &self.nodes[v];
                if n.children.is_empty() {
                    n.point
                } else {
                    None
                }
            })
            .collect()
    }

    /// Order-independent encoding of the shape: children sorted by their smallest leaf.
    pub fn canonical_key(&self) -> String {
        let mut key: Vec<Option<(usize, String)>> = vec![None; self.nodes.len()];
        for v in self.postorder() {
            let n = &self.nodes[v];
            let entry = if n.children.is_empty() {
                let p = n.point.unwrap_or(usize::MAX);
                (p, p.to_string())
            } else {
                let mut parts: Vec<(usize, String)> =
                    n.children.iter().map(|&c| key[c].take().unwrap()).collect();
                parts.sort();
                let min = parts[0].0;
                let body: Vec<String> = parts.into_iter().map(|(_, s)| s).collect();
                (min, format!("({})", body.join(",")))
            };
            key[v] = Some(entry);
        }
        key[self.root].take().map(|(_, s)| s).unwrap_or_default()
    }

    /// Same shape with leaf points renamed through `map`.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> HierarchicalTree {
        let mut nodes = self.nodes.clone();
        for n in &mut nodes {
            if let Some(p) = n.point {
                n.point = Some(map(p));
            }
        }
        HierarchicalTree::from_parts_unchecked(nodes, self.root, self.arity)
    }

    /// Copy with the arity flag recomputed from the shape.
    pub fn with_detected_arity(&self) -> HierarchicalTree {
        let arity = if self.is_binary() {
            Arity::Binary
        } else {
            Arity::Multiway
        };
        HierarchicalTree {
            arity,
            ..self.clone()
        }
    }
}

/// Shape equality: same leaves, same nested clusters. Child order and the arity flag are ignored.
impl PartialEq for HierarchicalTree {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_key() == other.canonical_key()
    }
}

impl Eq for HierarchicalTree {}

impl std::hash::Hash for HierarchicalTree {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical_key().hash(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cherry_plus_one() -> HierarchicalTree {
        let mut b = TreeBuilder::new();
        let a = b.leaf(0);
        let bb = b.leaf(1);
        let c = b.leaf(2);
        let ab = b.join(&[a, bb]);
        let r = b.join(&[ab, c]);
        b.finish(r, Arity::Binary).unwrap()
    }

    #[test]
    fn valid_tree_passes() {
        let t = cherry_plus_one();
        assert_eq!(t.validate(), Ok(()));
        assert_eq!(t.validate_for(3), Ok(()));
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.points(), vec![0, 1, 2]);
        assert_eq!(t.canonical_key(), "((0,1),2)");
    }

    #[test]
    fn unary_node_is_reported() {
        let mut b = TreeBuilder::new();
        let a = b.leaf(0);
        let c = b.leaf(1);
        let u = b.join(&[a]);
        let r = b.join(&[u, c]);
        assert_eq!(
            b.finish(r, Arity::Multiway).unwrap_err(),
            crate::Error::InvalidTree(TreeViolation::UnaryNode)
        );
    }

    #[test]
    fn duplicate_leaf_is_reported() {
        let mut b = TreeBuilder::new();
        let a = b.leaf(0);
        let a2 = b.leaf(0);
        let r = b.join(&[a, a2]);
        let t = HierarchicalTree::from_parts_unchecked(b.nodes, r, Arity::Binary);
        assert_eq!(t.validate(), Err(TreeViolation::LeafBijection));
        assert_eq!(TreeViolation::LeafBijection.name(), "leaf-bijection");
    }

    #[test]
    fn binary_flag_is_enforced() {
        let mut b = TreeBuilder::new();
        let l: Vec<_> = (0..3).map(|p| b.leaf(p)).collect();
        let r = b.join(&l);
        let t = HierarchicalTree::from_parts_unchecked(b.nodes.clone(), r, Arity::Binary);
        assert_eq!(t.validate(), Err(TreeViolation::BinaryArity));
        let t = HierarchicalTree::from_parts_unchecked(b.nodes, r, Arity::Multiway);
        assert_eq!(t.validate(), Ok(()));
    }

    #[test]
    fn missing_point_breaks_bijection() {
        let t = cherry_plus_one();
        assert_eq!(t.validate_for(4), Err(TreeViolation::LeafBijection));
    }

    #[test]
    fn cycle_is_reported() {
        let nodes = vec![
            Node {
                parent: None,
                children: vec![1, 2],
                point: None,
            },
            Node {
                parent: Some(0),
                children: vec![0, 3],
                point: None,
            },
            Node {
                parent: Some(0),
                children: vec![],
                point: Some(0),
            },
            Node {
                parent: Some(1),
                children: vec![],
                point: Some(1),
            },
        ];
        let t = HierarchicalTree::from_parts_unchecked(nodes, 0, Arity::Binary);
        assert!(matches!(
            t.validate(),
            Err(TreeViolation::ParentLink | TreeViolation::Cycle)
        ));
    }

    #[test]
    fn shape_equality_ignores_child_order() {
        let t = cherry_plus_one();
        let mut b = TreeBuilder::new();
        let c = b.leaf(2);
        let bb = b.leaf(1);
        let a = b.leaf(0);
        let ba = b.join(&[bb, a]);
        let r = b.join(&[c, ba]);
        let u = b.finish(r, Arity::Binary).unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn graft_copies_subtrees() {
        let t = cherry_plus_one();
        let mut b = TreeBuilder::new();
        let g = b.graft_mapped(&t, t.root(), &mut |p| p + 10);
        let u = b.finish(g, Arity::Binary).unwrap();
        assert_eq!(u.canonical_key(), "((10,11),12)");
    }
}
