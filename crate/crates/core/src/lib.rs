//! Symbolic simulation and equivalence checking of quantum circuits on top
//! of matrix-valued Boolean expressions.

pub mod bdd;
pub mod linalg;
pub mod mvbe;
pub mod qsym;
pub mod circuit;
pub mod oracle;
pub mod cli;
