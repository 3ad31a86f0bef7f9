use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::FormGenerator;
use crate::linalg::{self, max_abs, max_abs_diff, unvec, vec, CMat};
use crate::random::{random_complex, random_matrix};
use crate::sim::{semigroup_expm, CoherentFunction, TimeGrid};

/// Tolerance for `Phi_t(I) = I` and for the PSD order comparisons.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormalizationClass {
    Martingale,
    Submartingale,
    Neither,
}

impl NormalizationClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Martingale => "martingale",
            Self::Submartingale => "submartingale",
            Self::Neither => "neither",
        }
    }
}

#[derive(Clone, Debug)]
pub struct MartingaleReport {
    pub class: NormalizationClass,
    pub times: Vec<f64>,
    /// Ascending eigenvalues of the Hermitian part of `Phi_t(I)` per grid time.
    pub eigenvalues: Vec<Vec<f64>>,
    /// `max_t |Phi_t(I) - I|`.
    pub deviation: f64,
    /// Largest eigenvalue of `D = lambda(I)`.
    pub corner_max_eig: f64,
}

/// Classifies `Phi_t(I) = exp(t lambda)(I)` on the grid: martingale if it
/// stays at `I`, submartingale if `D <= 0` and the values decrease in PSD
/// order from one grid point to the next, neither otherwise.
pub fn martingale_check(gen: &FormGenerator, horizon: f64, steps: usize) -> Result<MartingaleReport> {
    let grid = TimeGrid::new(horizon, steps)?;
    let n = gen.n();
    let id = linalg::identity(n);
    let values: Vec<CMat> = grid
        .times()
        .iter()
        .map(|&t| semigroup_expm(gen, t, &id))
        .collect::<Result<_>>()?;
    let deviation = values.iter().map(|v| max_abs_diff(v, &id)).fold(0.0, f64::max);
    let corner = linalg::hermitian_part(gen.corner());
    let corner_max_eig = linalg::hermitian_eigenvalues(&corner).last().copied().unwrap_or(0.0);
    let monotone = values.windows(2).all(|w| {
        let drop = linalg::hermitian_part(&(&w[0] - &w[1]));
        linalg::min_eigenvalue(&drop) >= -NORMALIZATION_TOL
    });
    let class = if deviation <= NORMALIZATION_TOL {
        NormalizationClass::Martingale
    } else if corner_max_eig <= NORMALIZATION_TOL && monotone {
        NormalizationClass::Submartingale
    } else {
        NormalizationClass::Neither
    };
    let eigenvalues = values
        .iter()
        .map(|v| linalg::hermitian_eigenvalues(&linalg::hermitian_part(v)))
        .collect();
    Ok(MartingaleReport {
        class,
        times: grid.times(),
        eigenvalues,
        deviation,
        corner_max_eig,
    })
}

/// A PSD operator matrix `[X_kl]` and a set of coherent functions.
#[derive(Clone, Debug)]
pub struct GramConfig {
    /// `blocks[k][l] = X_kl`.
    pub blocks: Vec<Vec<CMat>>,
    pub functions: Vec<CoherentFunction>,
}

#[derive(Clone, Debug)]
pub struct GramReport {
    pub size: usize,
    pub min_eig: f64,
    pub max_eig: f64,
}

/// Random `[X_kl] = Y^+ Y` with `Y` of the given rank, and constant coherent
/// functions with entries of size `amplitude`.
#[allow(clippy::too_many_arguments)]
pub fn random_gram_config<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    grid: TimeGrid,
    blocks: usize,
    functions: usize,
    rank: usize,
    amplitude: f64,
) -> Result<GramConfig> {
    let y = random_matrix(rng, rank, blocks * n, 1.0);
    let x = y.adjoint() * y;
    let blocks = (0..blocks)
        .map(|k| (0..blocks).map(|l| linalg::block(&x, k, l, n, n)).collect())
        .collect();
    let functions = (0..functions)
        .map(|_| {
            let v: Vec<_> = (0..d).map(|_| random_complex(rng).scale(amplitude)).collect();
            CoherentFunction::constant(grid, &v)
        })
        .collect::<Result<_>>()?;
    Ok(GramConfig { blocks, functions })
}

/// Gram matrix `G[(k,a,i),(l,b,j)] = Phi^{f_a, f_b}(X_kl)[i, j]` from the
/// final-time propagators returned by `propagator(f, h)`.
pub fn gram_matrix(config: &GramConfig, mut propagator: impl FnMut(&CoherentFunction, &CoherentFunction) -> Result<CMat>) -> Result<CMat> {
    let kk = config.blocks.len();
    let ff = config.functions.len();
    let n = config.blocks.first().and_then(|r| r.first()).map_or(0, |x| x.nrows());
    if kk == 0 || ff == 0 || n == 0 {
        return Err(Error::InvalidArgument("gram configuration is empty".into()));
    }
    if config.blocks.iter().any(|row| row.len() != kk) {
        return Err(Error::Shape("operator matrix must be square".into()));
    }
    let size = kk * ff * n;
    let mut g = CMat::zeros(size, size);
    for (a, fa) in config.functions.iter().enumerate() {
        for (b, fb) in config.functions.iter().enumerate() {
            let prop = propagator(fa, fb)?;
            for k in 0..kk {
                for l in 0..kk {
                    let y = unvec(&(&prop * vec(&config.blocks[k][l])), n, n);
                    linalg::set_block(&mut g, (k * ff + a) * n, (l * ff + b) * n, &y);
                }
            }
        }
    }
    Ok(g)
}

/// Smallest eigenvalue of the Hermitian part of the Gram matrix.
pub fn gram_positivity_check(
    config: &GramConfig,
    propagator: impl FnMut(&CoherentFunction, &CoherentFunction) -> Result<CMat>,
) -> Result<GramReport> {
    let g = gram_matrix(config, propagator)?;
    let eig = linalg::hermitian_eigenvalues(&linalg::hermitian_part(&g));
    if max_abs(&g).is_nan() {
        return Err(Error::Numerical("gram matrix has NaN entries".into()));
    }
    Ok(GramReport {
        size: g.nrows(),
        min_eig: eig[0],
        max_eig: *eig.last().expect("nonempty"),
    })
}
