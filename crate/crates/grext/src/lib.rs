//! Exact homological algebra over F_p: filtered and graded algebras, bar
//! complexes and Ext, minimal resolutions, spectral sequences of filtered
//! complexes, and finite-precision models of p-valued matrix groups.

pub mod algebra_core;
pub mod bar_complex;
pub mod cli;
pub mod iwahori;
pub mod lazard;
pub mod linalg;
pub mod minres;
pub mod specseq;
