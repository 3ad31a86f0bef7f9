use crate::error::{Error, Result};
use crate::generator::FormGenerator;
use crate::linalg::{self, c, unvec, vec, CMat};
use crate::sim::{coherent_generator, CoherentFunction, MatrixElementTrace};

/// Action matrix of `exp(t lambda)`, by scaling and squaring with Padé
/// approximants.
pub fn semigroup_propagator(gen: &FormGenerator, t: f64) -> Result<CMat> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
    }
    let scaled = gen.scalar().action().map(|z| z * c(t, 0.0));
    let out = scaled.exp();
    if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numerical("matrix exponential overflowed".into()));
    }
    Ok(out)
}

/// Vacuum expectation `exp(t lambda)(X)`.
pub fn semigroup_expm(gen: &FormGenerator, t: f64, x: &CMat) -> Result<CMat> {
    let n = gen.n();
    crate::linalg::check_square(x, n, "observable")?;
    let prop = semigroup_propagator(gen, t)?;
    Ok(unvec(&(prop * vec(x)), n, n))
}

/// Exact solution of `d Psi/dt = Psi o A(t)` for coherent functions that are
/// constant on each slice: `Psi_{k+1} = Psi_k exp(tau A_k)`. Reduces to the
/// vacuum semigroup when `f = h = 0`.
pub fn coherent_form_expm(
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
    let tau = c(grid.tau(), 0.0);
    let vx = vec(x);
    let mut psi = linalg::identity(n * n);
    let mut values = Vec::with_capacity(grid.steps() + 1);
    values.push(x.clone());
    let mut cached: Option<(usize, CMat)> = None;
    for k in 0..grid.steps() {
        let reuse = cached
            .as_ref()
            .is_some_and(|(j, _)| f.slice(*j) == f.slice(k) && h.slice(*j) == h.slice(k));
        if !reuse {
            let step = (coherent_generator(gen, f.slice(k), h.slice(k)) * tau).exp();
            if step.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Numerical("matrix exponential overflowed".into()));
            }
            cached = Some((k, step));
        }
        psi *= &cached.as_ref().expect("slice exponential").1;
        values.push(unvec(&(&psi * &vx), n, n));
    }
    Ok(MatrixElementTrace {
        times: grid.times(),
        values,
    })
}
