use crate::dilation::HPParams;
use crate::error::Result;
use crate::generator::FormGenerator;
use crate::linalg::{self, c, unvec, vec, CMat, C64};
use crate::sim::{CoherentFunction, MatrixElementTrace, TimeGrid, VectorCocycleTrace};

/// Action matrix of `A = lambda + sum f^m* lambda^m + sum h^n lambda_n
/// + sum f^m* h^n lambda^m_n` for one slice.
pub fn coherent_generator(gen: &FormGenerator, f: &[C64], h: &[C64]) -> CMat {
    let mut a = gen.scalar().action().clone();
    for m in 0..gen.d() {
        let fm = f[m].conj();
        a += gen.up(m).action().map(|z| z * fm);
        a += gen.down(m).action().map(|z| z * h[m]);
        for (k, &hk) in h.iter().enumerate().take(gen.d()) {
            let w = fm * hk;
            if w != c(0.0, 0.0) {
                a += gen.exchange(m, k).action().map(|z| z * w);
            }
        }
    }
    a
}

/// One classical Runge–Kutta step of `Y' = Y A` from `Y = I`.
pub(crate) fn rk4_right_factor(a: &CMat, tau: f64) -> CMat {
    let id = linalg::identity(a.nrows());
    let t = c(tau, 0.0);
    let half = c(tau / 2.0, 0.0);
    let k1 = a.clone();
    let k2 = (&id + &k1 * half) * a;
    let k3 = (&id + &k2 * half) * a;
    let k4 = (&id + &k3 * t) * a;
    id + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(tau / 6.0, 0.0)
}

/// One classical Runge–Kutta step of `Y' = B Y` from `Y = I`.
pub(crate) fn rk4_left_factor(b: &CMat, tau: f64) -> CMat {
    rk4_right_factor(&b.transpose(), tau).transpose()
}

/// Integrates `d Psi/dt = Psi o A(t)`, `Psi_0 = id`, with RK4 on the model
/// grid and returns `Psi_{t_k}(X)`.
pub fn coherent_form_ode(
    gen: &FormGenerator,
    x: &CMat,
    f: &CoherentFunction,
    h: &CoherentFunction,
) -> Result<MatrixElementTrace> {
    let n = gen.n();
    linalg::check_square(x, n, "observable")?;
    f.ensure_compatible(h.grid(), gen.d())?;
    h.ensure_compatible(f.grid(), gen.d())?;
    let grid = *f.grid();
    let vx = vec(x);
    let mut psi = linalg::identity(n * n);
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(x.clone());
    for k in 0..grid.steps() {
        let a = coherent_generator(gen, f.slice(k), h.slice(k));
        psi *= rk4_right_factor(&a, grid.tau());
        values.push(unvec(&(&psi * &vx), n, n));
    }
    Ok(MatrixElementTrace {
        times: grid.times(),
        values,
    })
}

/// Action matrix of `Psi_T`.
pub fn coherent_form_propagator(gen: &FormGenerator, f: &CoherentFunction, h: &CoherentFunction) -> Result<CMat> {
    f.ensure_compatible(h.grid(), gen.d())?;
    h.ensure_compatible(f.grid(), gen.d())?;
    let tau = f.grid().tau();
    let mut psi = linalg::identity(gen.n() * gen.n());
    for k in 0..f.grid().steps() {
        psi *= rk4_right_factor(&coherent_generator(gen, f.slice(k), h.slice(k)), tau);
    }
    Ok(psi)
}

/// Per-slice RK4 propagators of `dW/dt = -(K + sum_m K_m h^m) W`.
pub(crate) fn vector_cocycle_steps(params: &HPParams, h: &CoherentFunction) -> Result<Vec<CMat>> {
    h.ensure_compatible(h.grid(), params.d())?;
    let tau = h.grid().tau();
    Ok((0..h.grid().steps())
        .map(|k| {
            let mut gen = -params.k().clone();
            for (m, km) in params.k_row().iter().enumerate() {
                gen -= km.map(|z| z * h.slice(k)[m]);
            }
            rk4_left_factor(&gen, tau)
        })
        .collect())
}

/// `W_t` for the coherent argument `h`.
pub fn vector_cocycle(params: &HPParams, h: &CoherentFunction) -> Result<VectorCocycleTrace> {
    let steps = vector_cocycle_steps(params, h)?;
    let grid: TimeGrid = *h.grid();
    let mut w = linalg::identity(params.n());
    let mut values = Vec::with_capacity(steps.len() + 1);
    values.push(w.clone());
    for s in &steps {
        w = s * w;
        values.push(w.clone());
    }
    Ok(VectorCocycleTrace {
        times: grid.times(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::assemble_from_hp;
    use crate::linalg::max_abs_diff;
    use crate::models;
    use crate::random::{random_hp_params, seeded, Normalization};
    use crate::sim::semigroup_expm;

    #[test]
    fn vacuum_ode_matches_expm() {
        let mut rng = seeded(77);
        let p = random_hp_params(&mut rng, 3, 2, 2, 0.7, Normalization::Submartingale(0.3)).unwrap();
        let gen = assemble_from_hp(&p).unwrap();
        let grid = TimeGrid::new(1.0, 256).unwrap();
        let vac = CoherentFunction::vacuum(grid, 2);
        let x = CMat::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.1, i as f64 - j as f64));
        let trace = coherent_form_ode(&gen, &x, &vac, &vac).unwrap();
        for k in [64, 128, 256] {
            let oracle = semigroup_expm(&gen, grid.time(k), &x).unwrap();
            assert!(max_abs_diff(&trace.values[k], &oracle) < 1e-8);
        }
    }

    #[test]
    fn exchange_only_generator_scales_by_the_overlap_exponential() {
        let gen = assemble_from_hp(&models::trivial_exchange(2)).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let f = CoherentFunction::constant(grid, &[c(0.7, -0.2)]).unwrap();
        let h = CoherentFunction::constant(grid, &[c(0.4, 0.9)]).unwrap();
        let x = CMat::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64));
        let trace = coherent_form_ode(&gen, &x, &f, &h).unwrap();
        let rate = f.pairing(&h, 0);
        for k in [0, 50, 100] {
            let expected = x.map(|z| z * (rate * grid.time(k)).exp());
            assert!(max_abs_diff(&trace.values[k], &expected) < 1e-10);
        }
    }

    #[test]
    fn vector_cocycle_without_annihilation_is_exp_minus_kt() {
        let p = models::amplitude_damping();
        let grid = TimeGrid::new(2.0, 200).unwrap();
        let h = CoherentFunction::constant(grid, &[c(1.0, 0.0)]).unwrap();
        let w = vector_cocycle(&p, &h).unwrap();
        assert_eq!(w.values[0], linalg::identity(2));
        let expected = (-p.k().clone() * c(2.0, 0.0)).exp();
        assert!(max_abs_diff(w.values.last().unwrap(), &expected) < 1e-10);
        assert!((w.values[200][(1, 1)].re - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn hermitian_for_equal_arguments() {
        let mut rng = seeded(78);
        let p = random_hp_params(&mut rng, 2, 1, 2, 0.7, Normalization::Martingale).unwrap();
        let gen = assemble_from_hp(&p).unwrap();
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let f = CoherentFunction::constant(grid, &[c(0.3, 0.8)]).unwrap();
        let x = CMat::from_fn(2, 2, |i, j| if i == j { c(i as f64 + 1.0, 0.0) } else { c(0.2, if i < j { 0.5 } else { -0.5 }) });
        let trace = coherent_form_ode(&gen, &x, &f, &f).unwrap();
        assert!(trace.max_hermitian_residual() < 1e-10);
    }
}
