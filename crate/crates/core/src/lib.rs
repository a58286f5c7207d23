//! Hierarchical trees from triplet constraints.
//!
//! Core types live in [`tree`], [`constraint`] and [`points`]; algorithms are
//! grouped by task.

pub mod builder;
pub mod constraint;
pub mod dimension;
pub mod enumerate;
pub mod error;
pub mod format;
pub mod mincut;
pub mod msf;
pub mod newick;
pub mod online;
pub mod pac;
pub mod plot;
pub mod points;
pub mod tree;
pub mod tree_ops;
pub mod union_find;

pub use constraint::{Constraint, ConstraintSet, KTuple, OrientedSet, Triplet};
pub use error::{Error, Result};
pub use points::PointSet;
pub use tree::{Arity, HierarchicalTree, Node, NodeId, TreeBuilder, TreeViolation};
