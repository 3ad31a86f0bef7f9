//! Small reference models used by tests, examples and the command line.

use crate::dilation::HPParams;
use crate::generator::{FormGenerator, GeneratorBlocks};
use crate::linalg::{identity, unit, zeros};
use crate::superop::SuperOperator;

/// `d = 1`, `L^1 = 0`, `L^1_1 = I`, everything else zero: `phi_t = id`.
pub fn trivial_exchange(n: usize) -> HPParams {
    HPParams::new(
        zeros(n, n),
        vec![zeros(n, n)],
        zeros(n, n),
        vec![zeros(n, n)],
        vec![vec![identity(n)]],
    )
    .expect("trivial exchange parameters are well formed")
}

/// Qubit amplitude damping: `L^1 = |0><1|`, `L^1_1 = I`, `K = |1><1| / 2`.
pub fn amplitude_damping() -> HPParams {
    HPParams::new(
        unit(2, 1, 1).scale(0.5),
        vec![zeros(2, 2)],
        zeros(2, 2),
        vec![unit(2, 0, 1)],
        vec![vec![identity(2)]],
    )
    .expect("amplitude damping parameters are well formed")
}

/// `d = 1` generator whose only nonzero block is `lambda^1_1 = transpose`.
/// Flat-symmetric but not conditionally completely positive.
pub fn transpose_block(n: usize) -> FormGenerator {
    FormGenerator::new(GeneratorBlocks {
        n,
        d: 1,
        scalar: SuperOperator::zero(n, n),
        up: vec![SuperOperator::zero(n, n)],
        down: vec![SuperOperator::zero(n, n)],
        exchange: vec![vec![SuperOperator::transpose_map(n)]],
    })
    .expect("transpose block generator is flat symmetric")
}
