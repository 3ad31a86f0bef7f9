//! Dilations of conditionally completely positive form-generators: Kraus
//! factorization of the exchange block, recovery of Hudson–Parthasarathy
//! coefficients, and the pre-Hilbert and pseudo-Hilbert dilations.

mod extract;
mod kraus;
mod params;
mod prehilbert;
mod pseudo;

pub use extract::{extract_hp_params, Extraction};
pub use kraus::{kraus_from_exchange_block, ExchangeKraus};
pub use params::{anti_hermitian_part, HPParams};
pub use prehilbert::{build_pre_hilbert, PreHilbertDilation, PreHilbertReport};
pub use pseudo::{build_pseudo_dilation, PseudoDilation, PseudoReport};
