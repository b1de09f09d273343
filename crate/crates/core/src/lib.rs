#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bessel;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod fock;
pub mod metro;
pub mod model;
pub mod observe;
pub mod scan;
