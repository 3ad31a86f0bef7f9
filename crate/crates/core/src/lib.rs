//! Quantum stochastic completely positive cocycles over matrix algebras.
//!
//! The crate covers the finite-dimensional Itô algebra and its flat
//! involution ([`ito`]), stochastic form-generators and their conditional
//! complete positivity ([`generator`]), Hudson–Parthasarathy dilations
//! ([`dilation`]), four numerical realizations of the cocycle ([`sim`]) and
//! the file formats used by the command line ([`io`]).

pub mod dilation;
pub mod error;
pub mod generator;
pub mod io;
pub mod ito;
pub mod linalg;
pub mod models;
pub mod random;
pub mod sim;
pub mod superop;

pub use dilation::HPParams;
pub use error::{Error, Result};
pub use generator::{assemble_from_hp, check_conditionally_cp, FormGenerator};
pub use superop::SuperOperator;
