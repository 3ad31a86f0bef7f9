//! Seeded random operators for property checks and test batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dilation::HPParams;
use crate::error::Result;
use crate::ito::StructureMatrix;
use crate::linalg::{c, hermitian_part, CMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Complex Ginibre matrix with entries of variance `scale^2`.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex(rng).scale(scale))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMat {
    hermitian_part(&random_matrix(rng, n, n, scale))
}

/// `Y^dagger Y` with `Y` of the given rank.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize, scale: f64) -> CMat {
    let y = random_matrix(rng, rank, n, scale);
    y.adjoint() * y
}

/// Normalization of a random parameter draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalization {
    /// `K + K^dagger = sum_i L^i^dagger L^i`, so `lambda(I) = 0`.
    Martingale,
    /// `lambda(I) = -P` for a random positive `P` of the given scale.
    Submartingale(f64),
}

/// Random Hudson–Parthasarathy coefficients with entries of size `scale`.
pub fn random_hp_params<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    r: usize,
    scale: f64,
    normalization: Normalization,
) -> Result<HPParams> {
    let kraus_l: Vec<CMat> = (0..r).map(|_| random_matrix(rng, n, n, scale)).collect();
    let kraus_lmat: Vec<Vec<CMat>> = (0..r)
        .map(|_| (0..d).map(|_| random_matrix(rng, n, n, scale)).collect())
        .collect();
    let k_row: Vec<CMat> = (0..d).map(|_| random_matrix(rng, n, n, scale)).collect();
    let h = random_hermitian(rng, n, scale);
    let target = match normalization {
        Normalization::Martingale => CMat::zeros(n, n),
        Normalization::Submartingale(s) => -random_psd(rng, n, n, s),
    };
    HPParams::from_hamiltonian(h, &target, k_row, kraus_l, kraus_lmat)
}

/// Random structure matrix: independent entries everywhere except the `+`
/// row and the `-` column.
pub fn random_structure_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, scale: f64) -> Result<StructureMatrix> {
    let mut s = StructureMatrix::zeros(n, d)?;
    let index = s.index();
    for row in 0..index.len() {
        for col in 0..index.len() {
            if row != index.plus() && col != index.minus() {
                s.set(row, col, random_matrix(rng, n, n, scale))?;
            }
        }
    }
    Ok(s)
}
