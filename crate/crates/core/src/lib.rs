//! Translation of ground weight-constraint programs into tight ordered
//! completion formulas, with a brute-force reference semantics and a bounded
//! model finder to check the translation against.

pub mod ast;
pub mod check;
pub mod depgraph;
pub mod dlcheck;
pub mod emit;
pub mod error;
pub mod formula;
pub mod fuzz;
pub mod normtest;
pub mod oracle;
pub mod parser;
pub mod solver;
pub mod toc;

pub use error::{Error, Result};
