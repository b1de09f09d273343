//! Compiles the code listings of the guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/fock.md")]
pub mod fock {}
#[doc = include_str!("../../../book/src/hamiltonians.md")]
pub mod hamiltonians {}
#[doc = include_str!("../../../book/src/fisher.md")]
pub mod fisher {}
#[doc = include_str!("../../../book/src/scans.md")]
pub mod scans {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
