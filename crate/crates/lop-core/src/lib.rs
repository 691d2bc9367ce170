//! Workbench for an untyped lambda-calculus with fair binary probabilistic
//! choice: exact-rational operational semantics and the coinductive
//! equivalence checkers built on top of it.

pub mod applicative;
pub mod ciu;
pub mod cli;
pub mod eval;
pub mod flow;
pub mod fs;
pub mod lmc;
pub mod separator;
pub mod syntax;
pub mod trees;
