//! lsl: a symbolic-plus-numeric laboratory for the point symmetries,
//! group-invariant solutions, adjoint equation and conserved currents of a
//! thermal-reservoir master equation, with a finite-difference lab that
//! cross-checks the symbolic results numerically.
//!
//! The crate is organized around the pipeline:
//!
//! - [`expr`]: exact symbolic kernel with jet-space calculus;
//! - [`lang`]: grammar, parser, and printer (also the file formats);
//! - [`model`]: the equation of motion and its solved form;
//! - [`symmetry`]: prolongation, verification, algebra, reduction;
//! - [`conservation`]: the non-Noetherian conserved-vector pipeline;
//! - [`numeric`]: finite-difference integration and monitors;
//! - [`reference`]: published forms the derivations are diffed against;
//! - [`report`]: machine-readable run reports;
//! - [`cli`]: the `lsl` command-line front end.
//!
//! Most capabilities have a runnable demonstration under `examples/`.

pub mod cli;
pub mod conservation;
pub mod expr;
pub mod lang;
pub mod model;
pub mod numeric;
pub mod reference;
pub mod report;
pub mod symmetry;
