//! Four realizations of the cocycle: the vacuum semigroup, the
//! repeated-interaction transfer scheme, the coherent matrix-element ODE and
//! the Picard iteration of the vector-cocycle integral equation.

mod checks;
mod expm;
mod grid;
mod ode;
mod picard;
mod transfer;

pub use checks::{
    gram_matrix, gram_positivity_check, martingale_check, random_gram_config, GramConfig, GramReport,
    MartingaleReport, NormalizationClass, NORMALIZATION_TOL,
};
pub use expm::{coherent_form_expm, semigroup_expm, semigroup_propagator};
pub use grid::{CoherentFunction, MatrixElementTrace, TimeGrid, VectorCocycleTrace};
pub use ode::{coherent_form_ode, coherent_form_propagator, coherent_generator, vector_cocycle};
pub use picard::{picard_fixed_end, picard_propagator, picard_solve, PicardOutcome};
pub use transfer::{cocycle_residual, cocycle_residual_with_offset, simulate_transfer, slice_choi, ToyFockModel};
