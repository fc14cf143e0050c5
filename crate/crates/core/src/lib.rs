//! Complete-intersection phylogenetic invariants for group-based models.
//!
//! For a finite abelian group `G` and a leaf-labelled tree `T`, the toric variety of the
//! group-based model meets the torus in a complete intersection. This crate builds an
//! explicit generating set of `codim` binomials for that intersection by gluing tripod
//! invariants along the tree, and checks the result with exact integer linear algebra.

pub mod admissible;
pub mod cli;
pub mod flow;
pub mod group;
pub mod lattice;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod tree;

pub use group::{parse_group_spec, GroupElement, GroupError, GroupSpec};
pub use par::Execution;
pub use tree::{parse_newick, RootedTree, Tree, TreeError};
