use crate::dilation::HPParams;
use crate::error::{Error, Result};
use crate::linalg::{self, c, kron, unvec, vec, CMat, C64};
use crate::sim::{CoherentFunction, MatrixElementTrace, TimeGrid};

/// Repeated-interaction discretization of the vector cocycle on a uniform
/// grid.
///
/// Each slice carries `C^s`, `s = 1 + max(d, r)`, with basis `e_0` (vacuum)
/// and `e_1 ..`; the step operator acts on `C^s (x) h` with index
/// `p * n + i`:
///
/// ```text
///   M = I - tau I_s (x) K + sum_{i,m} E_im (x) (L^i_m - delta_im I)
///         + sqrt(tau) sum_i E_i0 (x) L^i - sqrt(tau) sum_m E_0m (x) K_m
/// ```
///
/// with Kraus and noise indices zero-padded up to `s - 1`.
#[derive(Clone, Debug)]
pub struct ToyFockModel {
    params: HPParams,
    grid: TimeGrid,
    slice_dim: usize,
    step_op: CMat,
}

impl ToyFockModel {
    pub fn new(params: HPParams, grid: TimeGrid) -> Result<Self> {
        let (n, d, r) = (params.n(), params.d(), params.r());
        let s = 1 + d.max(r);
        let tau = grid.tau();
        let sq = tau.sqrt();
        let slice_unit = |p: usize, q: usize| linalg::unit(s, p, q);
        let id = linalg::identity(n);

        let mut m = linalg::identity(n * s) - kron(&linalg::identity(s), params.k()).scale(tau);
        for i in 1..s {
            for k in 1..s {
                let mut coeff = if i <= r && k <= d {
                    params.kraus_lmat()[i - 1][k - 1].clone()
                } else {
                    CMat::zeros(n, n)
                };
                if i == k {
                    coeff -= &id;
                }
                m += kron(&slice_unit(i, k), &coeff);
            }
        }
        for (i, l) in params.kraus_l().iter().enumerate() {
            m += kron(&slice_unit(i + 1, 0), l).scale(sq);
        }
        for (k, km) in params.k_row().iter().enumerate() {
            m -= kron(&slice_unit(0, k + 1), km).scale(sq);
        }
        if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical("step operator has non-finite entries".into()));
        }
        Ok(Self {
            params,
            grid,
            slice_dim: s,
            step_op: m,
        })
    }

    pub fn params(&self) -> &HPParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn slice_dim(&self) -> usize {
        self.slice_dim
    }

    pub fn step_op(&self) -> &CMat {
        &self.step_op
    }

    /// The same model on `steps` slices of the same width.
    pub fn restricted(&self, steps: usize) -> Result<Self> {
        let grid = self.grid.window(0, steps)?;
        Self::new(self.params.clone(), grid)
    }

    /// Exponential-vector slice `e_0 + sqrt(tau) sum_m f^m e_m`.
    fn slice_vector(&self, f: &[C64]) -> CMat {
        let sq = self.grid.tau().sqrt();
        let mut u = CMat::zeros(self.slice_dim, 1);
        u[(0, 0)] = c(1.0, 0.0);
        for (m, z) in f.iter().enumerate() {
            u[(m + 1, 0)] = z * sq;
        }
        u
    }

    /// Action matrix of `Y -> (I (x) u(f))^+ M^+ (I_s (x) Y) M (I (x) u(h))`.
    pub fn slice_transfer(&self, f: &[C64], h: &[C64]) -> CMat {
        let n = self.params.n();
        let id = linalg::identity(n);
        let b = &self.step_op * kron(&self.slice_vector(f), &id);
        let cmat = &self.step_op * kron(&self.slice_vector(h), &id);
        let mut t = CMat::zeros(n * n, n * n);
        for p in 0..self.slice_dim {
            let bp = b.rows(p * n, n);
            let cp = cmat.rows(p * n, n);
            t += kron(&cp.transpose(), &bp.adjoint());
        }
        t
    }

    /// `T_start ... T_{start + len - 1}` (the first slice is applied last).
    pub fn transfer_product(&self, f: &CoherentFunction, h: &CoherentFunction, start: usize, len: usize) -> Result<CMat> {
        self.check_functions(f, h)?;
        if start + len > self.grid.steps() {
            return Err(Error::InvalidArgument(format!(
                "slices {start}..{} outside grid of {} steps",
                start + len,
                self.grid.steps()
            )));
        }
        let nn = self.params.n() * self.params.n();
        let mut p = linalg::identity(nn);
        for k in start..start + len {
            p *= self.slice_transfer(f.slice(k), h.slice(k));
        }
        Ok(p)
    }

    fn check_functions(&self, f: &CoherentFunction, h: &CoherentFunction) -> Result<()> {
        f.ensure_compatible(&self.grid, self.params.d())?;
        h.ensure_compatible(&self.grid, self.params.d())
    }
}

/// Matrix elements `Phi_k` of the discretized cocycle at every grid time,
/// by forward accumulation of slice transfer maps.
pub fn simulate_transfer(
    model: &ToyFockModel,
    x: &CMat,
    f: &CoherentFunction,
    h: &CoherentFunction,
) -> Result<MatrixElementTrace> {
    let n = model.params.n();
    linalg::check_square(x, n, "observable")?;
    model.check_functions(f, h)?;
    let vx = vec(x);
    let mut p = linalg::identity(n * n);
    let mut values = Vec::with_capacity(model.grid.steps() + 1);
    values.push(x.clone());
    for k in 0..model.grid.steps() {
        p *= model.slice_transfer(f.slice(k), h.slice(k));
        values.push(unvec(&(&p * &vx), n, n));
    }
    Ok(MatrixElementTrace {
        times: model.grid.times(),
        values,
    })
}

/// Cocycle defect `|P_[0,s) P^s_[0,r) - P_[0,s+r)|` over a basis of
/// observables, where `P^s` is the model on the shifted coherent functions.
pub fn cocycle_residual(model: &ToyFockModel, f: &CoherentFunction, h: &CoherentFunction, s: usize, r: usize) -> Result<f64> {
    cocycle_residual_with_offset(model, f, h, s, r, 0)
}

/// [`cocycle_residual`] with the shifted functions read `offset` slices late
/// (cyclically); a nonzero offset is a deliberate misalignment.
pub fn cocycle_residual_with_offset(
    model: &ToyFockModel,
    f: &CoherentFunction,
    h: &CoherentFunction,
    s: usize,
    r: usize,
    offset: usize,
) -> Result<f64> {
    let steps = model.grid.steps();
    if s + r > steps {
        return Err(Error::InvalidArgument(format!("s + r = {} exceeds {steps} steps", s + r)));
    }
    let nn = model.params.n() * model.params.n();
    if r == 0 {
        return Ok(0.0);
    }
    let whole = model.transfer_product(f, h, 0, s + r)?;
    let head = if s == 0 {
        linalg::identity(nn)
    } else {
        model.transfer_product(f, h, 0, s)?
    };
    let shift = |g: &CoherentFunction| -> Result<CoherentFunction> {
        let values = (0..r).map(|j| g.slice((s + j + offset) % steps).to_vec()).collect();
        CoherentFunction::new(g.grid().window(s, r)?, g.d(), values)
    };
    let shifted = model.restricted(r)?;
    let tail = shifted.transfer_product(&shift(f)?, &shift(h)?, 0, r)?;
    Ok(linalg::max_abs_diff(&(head * tail), &whole))
}

/// Choi matrix of the slice transfer map, assembled through the generic
/// superoperator path.
pub fn slice_choi(model: &ToyFockModel, f: &[C64], h: &[C64]) -> Result<CMat> {
    let n = model.params.n();
    let sop = crate::superop::SuperOperator::new(n, n, model.slice_transfer(f, h))?;
    Ok(sop.choi())
}
