use crate::dilation::HPParams;
use crate::error::{Error, Result};
use crate::linalg::{self, kron, max_abs, sandwich_action, unvec, vec, CMat, CVec};
use crate::sim::ode::vector_cocycle_steps;
use crate::sim::{CoherentFunction, MatrixElementTrace};

/// Increments above this fraction of the solution size count as growth.
const GROWTH_FLOOR: f64 = 1e-13;

/// Result of the Picard iteration with the size of every correction.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub trace: MatrixElementTrace,
    /// `increments[j] = max_k |Phi^(j+1)_k - Phi^(j)_k|`.
    pub increments: Vec<f64>,
}

/// Per-slice maps of the discretized integral equation: the free part
/// `Y -> e^{tau f*h} W^f^+ Y W^h` and the structure part
/// `B = phi + sum f^m* phi^m + sum phi_n h^n + sum f^m* (phi^m_n - delta^m_n) h^n`.
struct SliceMaps {
    free: Vec<CMat>,
    kick: Vec<CMat>,
}

fn slice_maps(params: &HPParams, f: &CoherentFunction, h: &CoherentFunction) -> Result<SliceMaps> {
    let (n, d) = (params.n(), params.d());
    f.ensure_compatible(h.grid(), d)?;
    h.ensure_compatible(f.grid(), d)?;
    let tau = f.grid().tau();
    let wf = vector_cocycle_steps(params, f)?;
    let wh = vector_cocycle_steps(params, h)?;

    let sum = |pairs: &mut dyn Iterator<Item = (CMat, CMat)>| -> CMat {
        pairs.fold(CMat::zeros(n * n, n * n), |acc, (a, b)| acc + sandwich_action(&a, &b))
    };
    let ls = params.kraus_l();
    let lm = params.kraus_lmat();
    let phi = sum(&mut ls.iter().map(|l| (l.adjoint(), l.clone())));
    let phi_up: Vec<CMat> = (0..d)
        .map(|m| sum(&mut ls.iter().zip(lm).map(|(l, row)| (row[m].adjoint(), l.clone()))))
        .collect();
    let phi_down: Vec<CMat> = (0..d)
        .map(|m| sum(&mut ls.iter().zip(lm).map(|(l, row)| (l.adjoint(), row[m].clone()))))
        .collect();
    let phi_ex: Vec<Vec<CMat>> = (0..d)
        .map(|m| {
            (0..d)
                .map(|k| sum(&mut lm.iter().map(|row| (row[m].adjoint(), row[k].clone()))))
                .collect()
        })
        .collect();
    let id = linalg::identity(n * n);

    let mut free = Vec::with_capacity(f.grid().steps());
    let mut kick = Vec::with_capacity(f.grid().steps());
    for k in 0..f.grid().steps() {
        let weight = (f.pairing(h, k) * tau).exp();
        free.push(kron(&wh[k].transpose(), &wf[k].adjoint()).map(|z| z * weight));
        let mut b = phi.clone();
        for m in 0..d {
            let fm = f.slice(k)[m].conj();
            b += phi_up[m].map(|z| z * fm);
            b += phi_down[m].map(|z| z * h.slice(k)[m]);
            for (q, ex) in phi_ex[m].iter().enumerate() {
                let w = fm * h.slice(k)[q];
                b += ex.map(|z| z * w);
                if m == q {
                    b -= id.map(|z| z * w);
                }
            }
        }
        kick.push(b.map(|z| z * tau));
    }
    Ok(SliceMaps { free, kick })
}

/// Advances the order-resolved partial products over one slice. The
/// structure factor acts on the form of `[t_q, t)`, which still contains
/// slice `q`, so `p` structure factors split as `i` kicks inside the slice
/// and `p - i` before it: `G'_p = (sum_i G_{p-i} kick^i) free`.
fn advance(orders: &mut [CMat], free: &CMat, kick: &CMat) {
    let mut carry: Option<CMat> = None;
    for g in orders.iter_mut() {
        let s = match carry.take() {
            Some(prev) => &*g + prev * kick,
            None => g.clone(),
        };
        *g = &s * free;
        carry = Some(s);
    }
}

fn check_growth(increments: &[f64], scale: f64) -> Result<()> {
    let floor = GROWTH_FLOOR * scale.max(1.0);
    let mut run = 0;
    for (j, w) in increments.windows(2).enumerate() {
        if w[1] > w[0] && w[1] > floor {
            run += 1;
            if run >= 3 {
                return Err(Error::NonContraction {
                    iteration: j + 2,
                    increments: increments.to_vec(),
                });
            }
        } else {
            run = 0;
        }
    }
    Ok(())
}

/// Picard iteration of the integral equation driven by the vector cocycle
/// `W`, returning the `iters`-th iterate at every grid time.
///
/// The iterate `Phi^(j)` on `[0, t_k)` is the sum of all slice-ordered
/// products with at most `j` structure factors; these partial sums are
/// accumulated forward in time, one product per number of structure
/// factors. Fails with [`Error::NonContraction`] when the correction grows
/// for three consecutive iterations.
pub fn picard_solve(
    params: &HPParams,
    x: &CMat,
    f: &CoherentFunction,
    h: &CoherentFunction,
    iters: usize,
) -> Result<PicardOutcome> {
    if iters == 0 {
        return Err(Error::InvalidArgument("picard iteration needs iters >= 1".into()));
    }
    let n = params.n();
    linalg::check_square(x, n, "observable")?;
    let maps = slice_maps(params, f, h)?;
    let vx = vec(x);
    let mut orders: Vec<CMat> = (0..=iters).map(|_| CMat::zeros(n * n, n * n)).collect();
    orders[0] = linalg::identity(n * n);
    let mut increments = vec![0.0; iters];
    let mut values = Vec::with_capacity(maps.free.len() + 1);
    values.push(x.clone());
    for (free, kick) in maps.free.iter().zip(&maps.kick) {
        advance(&mut orders, free, kick);
        let mut phi = CVec::zeros(n * n);
        for (p, g) in orders.iter().enumerate() {
            let term = g * &vx;
            if p > 0 {
                increments[p - 1] = f64::max(increments[p - 1], term.iter().map(|z| z.norm()).fold(0.0, f64::max));
            }
            phi += term;
        }
        values.push(unvec(&phi, n, n));
    }
    let scale = values.iter().map(max_abs).fold(0.0, f64::max);
    check_growth(&increments, scale)?;
    Ok(PicardOutcome {
        trace: MatrixElementTrace {
            times: f.grid().times(),
            values,
        },
        increments,
    })
}

/// Action matrix of the `iters`-th iterate on the whole horizon.
pub fn picard_propagator(params: &HPParams, f: &CoherentFunction, h: &CoherentFunction, iters: usize) -> Result<CMat> {
    if iters == 0 {
        return Err(Error::InvalidArgument("picard iteration needs iters >= 1".into()));
    }
    let nn = params.n() * params.n();
    let maps = slice_maps(params, f, h)?;
    let mut orders: Vec<CMat> = (0..=iters).map(|_| CMat::zeros(nn, nn)).collect();
    orders[0] = linalg::identity(nn);
    for (free, kick) in maps.free.iter().zip(&maps.kick) {
        advance(&mut orders, free, kick);
    }
    let increments: Vec<f64> = orders[1..].iter().map(max_abs).collect();
    let total = orders.iter().fold(CMat::zeros(nn, nn), |acc, g| acc + g);
    check_growth(&increments, max_abs(&total))?;
    Ok(total)
}

/// The literal iteration for the full horizon: iterates on the forms of all
/// tail intervals `[t_q, T)` and returns `Phi^(iters)` on `[0, T)` together
/// with the increments measured on the tail forms.
pub fn picard_fixed_end(
    params: &HPParams,
    x: &CMat,
    f: &CoherentFunction,
    h: &CoherentFunction,
    iters: usize,
) -> Result<(CMat, Vec<f64>)> {
    if iters == 0 {
        return Err(Error::InvalidArgument("picard iteration needs iters >= 1".into()));
    }
    let n = params.n();
    linalg::check_square(x, n, "observable")?;
    let maps = slice_maps(params, f, h)?;
    let steps = maps.free.len();
    let vx = vec(x);
    // free[q] = form of [t_q, T) without structure factors
    let mut free = vec![CVec::zeros(n * n); steps + 1];
    free[steps] = vx.clone();
    for q in (0..steps).rev() {
        free[q] = &maps.free[q] * &free[q + 1];
    }
    let mut current = free.clone();
    let mut increments = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut next = free.clone();
        let mut tail = CVec::zeros(n * n);
        for q in (0..steps).rev() {
            tail = &maps.kick[q] * &current[q] + &maps.free[q] * &tail;
            next[q] += &tail;
        }
        let inc = next
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        increments.push(inc);
        current = next;
    }
    let scale = current.iter().map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max);
    check_growth(&increments, scale)?;
    Ok((unvec(&current[0], n, n), increments))
}
