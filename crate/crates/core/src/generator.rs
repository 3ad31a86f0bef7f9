//! Stochastic form-generators and their conditional complete positivity.
//!
//! A form-generator is the block matrix of structural maps
//!
//! ```text
//!   bold_lambda = [ lambda     lambda_n   ]
//!                 [ lambda^m   lambda^m_n ]
//! ```
//!
//! on `M_n`, where `lambda^m_n = delta^m_n id + alpha^m_n`. It generates a
//! completely positive cocycle iff its dissipator kernel is positive
//! semidefinite.

use rand::Rng;

use crate::dilation::HPParams;
use crate::error::{Error, Result};
use crate::ito::StructureMatrix;
use crate::linalg::{self, c, max_abs, set_block, zeros, CMat, CVec, C64};
use crate::random::{random_complex, random_matrix, seeded};
use crate::superop::SuperOperator;

/// Refuse dissipator kernels with more rows than this.
pub const MAX_KERNEL_ROWS: usize = 10_000;

/// Relative tolerance for the flat symmetry of generator blocks.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Raw generator blocks, shape-checked but not yet symmetry-checked.
///
/// Noise indices are 0-based: `up[m]` is `lambda^{m+1}`, `exchange[m][n]`
/// is `lambda^{m+1}_{n+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorBlocks {
    pub n: usize,
    pub d: usize,
    pub scalar: SuperOperator,
    pub up: Vec<SuperOperator>,
    pub down: Vec<SuperOperator>,
    pub exchange: Vec<Vec<SuperOperator>>,
}

impl GeneratorBlocks {
    pub fn validate_shapes(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument("generator needs n >= 1 and d >= 1".into()));
        }
        let ok = |s: &SuperOperator| s.in_dim() == n && s.out_dim() == n;
        let rows_ok = self.up.len() == d
            && self.down.len() == d
            && self.exchange.len() == d
            && self.exchange.iter().all(|row| row.len() == d);
        if !rows_ok {
            return Err(Error::Shape(format!("generator with d = {d} needs d up/down blocks and a d x d exchange block")));
        }
        let all = std::iter::once(&self.scalar)
            .chain(&self.up)
            .chain(&self.down)
            .chain(self.exchange.iter().flatten());
        for s in all {
            if !ok(s) {
                return Err(Error::Shape(format!("generator block is not a map on M_{n}")));
            }
        }
        Ok(())
    }

    /// Residual of `lambda(X^+) = lambda(X)^+`, `lambda^n(X^+) = lambda_n(X)^+`,
    /// `lambda^m_n(X^+) = lambda^n_m(X)^+` over matrix units.
    pub fn symmetry_residual(&self) -> f64 {
        let mut res = self.scalar.hermiticity_residual();
        for m in 0..self.d {
            res = res.max(self.up[m].max_abs_diff(&self.down[m].adjoint_map()));
            for n in 0..self.d {
                res = res.max(self.exchange[m][n].max_abs_diff(&self.exchange[n][m].adjoint_map()));
            }
        }
        res
    }

    pub fn max_abs(&self) -> f64 {
        std::iter::once(&self.scalar)
            .chain(&self.up)
            .chain(&self.down)
            .chain(self.exchange.iter().flatten())
            .map(|s| max_abs(s.action()))
            .fold(0.0, f64::max)
    }
}

/// Validated form-generator with cached `D = lambda(I)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormGenerator {
    blocks: GeneratorBlocks,
    corner: CMat,
}

impl FormGenerator {
    /// Checks shapes and the flat symmetry (relative tolerance [`SYMMETRY_TOL`]).
    pub fn new(blocks: GeneratorBlocks) -> Result<Self> {
        blocks.validate_shapes()?;
        let residual = blocks.symmetry_residual();
        if residual > SYMMETRY_TOL * blocks.max_abs().max(1.0) {
            return Err(Error::FlatSymmetry { residual });
        }
        let corner = blocks.scalar.apply(&linalg::identity(blocks.n));
        Ok(Self { blocks, corner })
    }

    pub fn n(&self) -> usize {
        self.blocks.n
    }

    pub fn d(&self) -> usize {
        self.blocks.d
    }

    pub fn blocks(&self) -> &GeneratorBlocks {
        &self.blocks
    }

    pub fn into_blocks(self) -> GeneratorBlocks {
        self.blocks
    }

    /// `lambda`, the generator of the vacuum semigroup.
    pub fn scalar(&self) -> &SuperOperator {
        &self.blocks.scalar
    }

    pub fn up(&self, m: usize) -> &SuperOperator {
        &self.blocks.up[m]
    }

    pub fn down(&self, n: usize) -> &SuperOperator {
        &self.blocks.down[n]
    }

    pub fn exchange(&self, m: usize, n: usize) -> &SuperOperator {
        &self.blocks.exchange[m][n]
    }

    /// `D = lambda(I)`.
    pub fn corner(&self) -> &CMat {
        &self.corner
    }

    pub fn symmetry_residual(&self) -> f64 {
        self.blocks.symmetry_residual()
    }

    /// `bold_lambda(X)` as an `n(1+d)` square block matrix, scalar slot first.
    pub fn bold(&self, x: &CMat) -> CMat {
        let (n, d) = (self.n(), self.d());
        let mut out = zeros(n * (d + 1), n * (d + 1));
        set_block(&mut out, 0, 0, &self.scalar().apply(x));
        for m in 0..d {
            set_block(&mut out, 0, (m + 1) * n, &self.down(m).apply(x));
            set_block(&mut out, (m + 1) * n, 0, &self.up(m).apply(x));
            for k in 0..d {
                set_block(&mut out, (m + 1) * n, (k + 1) * n, &self.exchange(m, k).apply(x));
            }
        }
        out
    }

    /// Structure matrix `alpha(X)`: `alpha^-_+ = lambda`, `alpha^m_+ = lambda^m`,
    /// `alpha^-_n = lambda_n`, `alpha^m_n = lambda^m_n - delta^m_n`.
    pub fn structure_at(&self, x: &CMat) -> Result<StructureMatrix> {
        let (n, d) = (self.n(), self.d());
        let mut s = StructureMatrix::zeros(n, d)?;
        s.set(0, d + 1, self.scalar().apply(x))?;
        for m in 0..d {
            s.set(m + 1, d + 1, self.up(m).apply(x))?;
            s.set(0, m + 1, self.down(m).apply(x))?;
            for k in 0..d {
                let mut v = self.exchange(m, k).apply(x);
                if m == k {
                    v -= x;
                }
                s.set(m + 1, k + 1, v)?;
            }
        }
        Ok(s)
    }

    /// The exchange block as one map `M_n -> M_{nd}`, `X -> [lambda^m_n(X)]`.
    pub fn exchange_map(&self) -> SuperOperator {
        let (n, d) = (self.n(), self.d());
        SuperOperator::from_fn(n, n * d, |x| {
            let mut out = zeros(n * d, n * d);
            for m in 0..d {
                for k in 0..d {
                    set_block(&mut out, m * n, k * n, &self.exchange(m, k).apply(x));
                }
            }
            out
        })
    }

    /// Largest action-matrix difference over all blocks.
    pub fn block_residual(&self, other: &Self) -> f64 {
        if self.n() != other.n() || self.d() != other.d() {
            return f64::INFINITY;
        }
        let a = &self.blocks;
        let b = &other.blocks;
        let mut res = a.scalar.max_abs_diff(&b.scalar);
        for m in 0..self.d() {
            res = res.max(a.up[m].max_abs_diff(&b.up[m]));
            res = res.max(a.down[m].max_abs_diff(&b.down[m]));
            for k in 0..self.d() {
                res = res.max(a.exchange[m][k].max_abs_diff(&b.exchange[m][k]));
            }
        }
        res
    }

    /// Copy with the exchange block `lambda^m_n` replaced.
    pub fn with_exchange(&self, m: usize, n: usize, map: SuperOperator) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.exchange[m][n] = map;
        Self::new(blocks)
    }

    /// Copy with the scalar block shifted by `X -> s X`.
    pub fn with_scalar_shift(&self, s: f64) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        let shift = SuperOperator::identity(self.n()).scaled(c(s, 0.0));
        blocks.scalar = blocks.scalar.add(&shift)?;
        Self::new(blocks)
    }
}

/// Degenerate representation `iota(X) = [[X, 0], [0, 0]]` on `h (x) C^{d+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegenerateRep {
    pub n: usize,
    pub d: usize,
}

impl DegenerateRep {
    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = zeros(self.n * (self.d + 1), self.n * (self.d + 1));
        set_block(&mut out, 0, 0, x);
        out
    }
}

/// Assembles `bold_lambda` from Hudson–Parthasarathy coefficients:
///
/// ```text
///   lambda^m_n(X) = sum_i L^i_m^+ X L^i_n
///   lambda^m(X)   = sum_i L^i_m^+ X L^i   - K_m^+ X
///   lambda_n(X)   = sum_i L^i^+   X L^i_n - X K_n
///   lambda(X)     = sum_i L^i^+   X L^i   - K^+ X - X K
/// ```
pub fn assemble_from_hp(params: &HPParams) -> Result<FormGenerator> {
    let (n, d) = (params.n(), params.d());
    let id = linalg::identity(n);
    let sum = |pairs: Vec<(CMat, CMat)>| -> Result<SuperOperator> {
        let mut acc = SuperOperator::zero(n, n);
        for (a, b) in pairs {
            acc = acc.add(&SuperOperator::sandwich(&a, &b)?)?;
        }
        Ok(acc)
    };
    let ls = params.kraus_l();
    let lm = params.kraus_lmat();

    let scalar = sum(ls.iter().map(|l| (l.adjoint(), l.clone())).collect())?
        .sub(&SuperOperator::sandwich(&params.k().adjoint(), &id)?)?
        .sub(&SuperOperator::sandwich(&id, params.k())?)?;
    let mut up = Vec::with_capacity(d);
    let mut down = Vec::with_capacity(d);
    let mut exchange = Vec::with_capacity(d);
    for m in 0..d {
        let km = &params.k_row()[m];
        up.push(
            sum(ls.iter().zip(lm).map(|(l, row)| (row[m].adjoint(), l.clone())).collect())?
                .sub(&SuperOperator::sandwich(&km.adjoint(), &id)?)?,
        );
        down.push(
            sum(ls.iter().zip(lm).map(|(l, row)| (l.adjoint(), row[m].clone())).collect())?
                .sub(&SuperOperator::sandwich(&id, km)?)?,
        );
        let mut ex_row = Vec::with_capacity(d);
        for k in 0..d {
            ex_row.push(sum(lm.iter().map(|row| (row[m].adjoint(), row[k].clone())).collect())?);
        }
        exchange.push(ex_row);
    }
    FormGenerator::new(GeneratorBlocks {
        n,
        d,
        scalar,
        up,
        down,
        exchange,
    })
}

/// Positive-semidefinite-iff-CCP kernel of the stochastic dissipator over
/// the matrix-unit basis.
///
/// Row `((a * (d+1)) + mu) * n + i` holds component `i` of slot `mu` for
/// basis unit `a` (row-major `E_ab`); slot 0 is the identified `-`/`+` slot.
#[derive(Clone, Debug)]
pub struct Dissipator {
    n: usize,
    d: usize,
    kernel: CMat,
}

impl Dissipator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn kernel(&self) -> &CMat {
        &self.kernel
    }

    pub fn rows(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn hermitian_residual(&self) -> f64 {
        linalg::hermitian_residual(&self.kernel)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.kernel)
    }
}

/// Kernel rows for a generator of the given shape.
pub fn kernel_rows(n: usize, d: usize) -> usize {
    n * n * (d + 1) * n
}

pub fn build_dissipator(gen: &FormGenerator) -> Result<Dissipator> {
    let (n, d) = (gen.n(), gen.d());
    let rows = kernel_rows(n, d);
    if rows > MAX_KERNEL_ROWS {
        return Err(Error::TooLarge {
            rows,
            limit: MAX_KERNEL_ROWS,
        });
    }
    let units = linalg::matrix_units(n);
    let dcorner = gen.corner();
    let lam: Vec<CMat> = units.iter().map(|e| gen.scalar().apply(e)).collect();
    let lam_adj: Vec<CMat> = units.iter().map(|e| gen.scalar().apply(&e.adjoint())).collect();
    let lam_down: Vec<Vec<CMat>> = (0..d)
        .map(|k| units.iter().map(|e| gen.down(k).apply(e)).collect())
        .collect();

    // slot-0/noise block Delta^-_n(X, Z) = lambda_n(X^+ Z) - X^+ lambda_n(Z)
    let delta_down = |a: usize, b: usize, k: usize| -> CMat {
        let xa = units[a].adjoint();
        gen.down(k).apply(&(&xa * &units[b])) - &xa * &lam_down[k][b]
    };

    let stride = (d + 1) * n;
    let mut kernel = zeros(rows, rows);
    for a in 0..n * n {
        let xa = units[a].adjoint();
        for b in 0..n * n {
            let xz = &xa * &units[b];
            let (r0, c0) = (a * stride, b * stride);
            let corner_block =
                gen.scalar().apply(&xz) - &xa * &lam[b] - &lam_adj[a] * &units[b] + &xa * dcorner * &units[b];
            set_block(&mut kernel, r0, c0, &corner_block);
            for k in 0..d {
                set_block(&mut kernel, r0, c0 + (k + 1) * n, &delta_down(a, b, k));
                // Delta^m_+(X, Z) = Delta^-_m(Z, X)^+
                set_block(&mut kernel, r0 + (k + 1) * n, c0, &delta_down(b, a, k).adjoint());
                for l in 0..d {
                    set_block(&mut kernel, r0 + (k + 1) * n, c0 + (l + 1) * n, &gen.exchange(k, l).apply(&xz));
                }
            }
        }
    }
    Ok(Dissipator { n, d, kernel })
}

/// One member `(X, eta)` of a witness family; `eta` has `d + 1` slots of
/// length `n`, slot 0 first.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessEntry {
    pub x: CMat,
    pub eta: CVec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CcpVerdict {
    Accepted {
        min_eig: f64,
        max_abs_eig: f64,
    },
    Rejected {
        min_eig: f64,
        max_abs_eig: f64,
        witness: Vec<WitnessEntry>,
    },
}

impl CcpVerdict {
    pub fn accepted(&self) -> bool {
        matches!(self, Self::Accepted { .. })
    }

    pub fn min_eig(&self) -> f64 {
        match self {
            Self::Accepted { min_eig, .. } | Self::Rejected { min_eig, .. } => *min_eig,
        }
    }
}

/// Accepts iff the smallest dissipator eigenvalue is at least
/// `-tol * max(1, max |eigenvalue|)`. Rejections carry the most negative
/// eigenvector reshaped into a family `{(E_a, eta_a)}`.
pub fn check_conditionally_cp(gen: &FormGenerator, tol: f64) -> Result<CcpVerdict> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let diss = build_dissipator(gen)?;
    let (values, vectors) = linalg::hermitian_eigen(diss.kernel());
    let min_eig = values.first().copied().unwrap_or(0.0);
    let max_abs_eig = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if min_eig >= -tol * max_abs_eig.max(1.0) {
        return Ok(CcpVerdict::Accepted { min_eig, max_abs_eig });
    }
    let (n, d) = (gen.n(), gen.d());
    let stride = (d + 1) * n;
    let v = vectors.column(0);
    let witness = (0..n * n)
        .filter_map(|a| {
            let eta = CVec::from_iterator(stride, v.rows(a * stride, stride).iter().copied());
            (eta.norm() > 1e-12).then(|| WitnessEntry {
                x: linalg::unit(n, a / n, a % n),
                eta,
            })
        })
        .collect();
    Ok(CcpVerdict::Rejected {
        min_eig,
        max_abs_eig,
        witness,
    })
}

/// A sampled family `{(X_k, eta_k)}` satisfying `sum_k X_k eta_k^0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFamily {
    pub xs: Vec<CMat>,
    pub etas: Vec<CVec>,
}

#[derive(Clone, Debug)]
pub struct SampleReport {
    pub trials: usize,
    pub min_value: f64,
    /// Family attaining `min_value`.
    pub worst: SampledFamily,
}

/// `sum_{k,l} <eta_k | bold_lambda(X_k^+ X_l) eta_l>`.
pub fn conditional_form(gen: &FormGenerator, family: &SampledFamily) -> C64 {
    let mut acc = c(0.0, 0.0);
    for (xk, ek) in family.xs.iter().zip(&family.etas) {
        for (xl, el) in family.xs.iter().zip(&family.etas) {
            let b = gen.bold(&(xk.adjoint() * xl));
            acc += (ek.adjoint() * b * el)[(0, 0)];
        }
    }
    acc
}

/// Monte Carlo cross-check of conditional complete positivity.
///
/// Each trial draws 2 to `n^2 + 1` unit-norm operators `X_k` and random
/// vectors `eta_k`, then solves the last scalar slot so that
/// `sum_k X_k eta_k^0 = 0`; the family is normalized to unit total norm
/// before the form is evaluated.
pub fn sample_conditional_positivity(gen: &FormGenerator, trials: usize, seed: u64) -> Result<SampleReport> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let mut best: Option<(f64, SampledFamily)> = None;
    let mut done = 0;
    while done < trials {
        let Some(family) = draw_family(gen.n(), gen.d(), &mut rng) else {
            continue;
        };
        done += 1;
        let value = conditional_form(gen, &family).re;
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, family));
        }
    }
    let (min_value, worst) = best.expect("at least one trial");
    Ok(SampleReport {
        trials,
        min_value,
        worst,
    })
}

fn draw_family<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Option<SampledFamily> {
    let size = rng.random_range(2..=n * n + 1);
    let xs: Vec<CMat> = (0..size)
        .map(|_| {
            let x = random_matrix(rng, n, n, 1.0);
            let norm = x.norm();
            x.unscale(norm)
        })
        .collect();
    // independent magnitudes per slot so that both slot types get explored
    let slot_scale: Vec<f64> = (0..=d).map(|_| 10f64.powf(rng.random_range(-1.0..1.0))).collect();
    let mut etas: Vec<CVec> = (0..size)
        .map(|_| CVec::from_fn(n * (d + 1), |i, _| random_complex(rng).scale(slot_scale[i / n])))
        .collect();
    let mut rhs = CVec::zeros(n);
    for k in 0..size - 1 {
        rhs -= &xs[k] * etas[k].rows(0, n);
    }
    let last = xs[size - 1].clone().lu().solve(&rhs)?;
    etas[size - 1].rows_mut(0, n).copy_from(&last);
    let total: f64 = etas.iter().map(|e| e.norm_squared()).sum::<f64>().sqrt();
    if !(total.is_finite() && total > 0.0) {
        return None;
    }
    for e in &mut etas {
        e.unscale_mut(total);
    }
    Some(SampledFamily { xs, etas })
}

/// The scalar block `lambda` as the generator of the vacuum semigroup.
pub fn semigroup_generator(gen: &FormGenerator) -> SuperOperator {
    gen.scalar().clone()
}
