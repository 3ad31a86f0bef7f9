use crate::dilation::PreHilbertDilation;
use crate::error::{Error, Result};
use crate::generator::FormGenerator;
use crate::ito::PseudoMetric;
use crate::linalg::{self, max_abs, max_abs_diff, set_block, zeros, CMat};

/// Relative tolerance for the dilation identities.
pub const DILATION_TOL: f64 = 1e-10;

/// Block representation `j_hat` on `h + K + h` with the metric `G` and the
/// operator `L : h + h^d -> h + K + h`.
#[derive(Clone, Debug)]
pub struct PseudoDilation {
    metric: PseudoMetric,
    pre: PreHilbertDilation,
    lbold: CMat,
    lflat: CMat,
    report: PseudoReport,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PseudoReport {
    /// `j_hat(X^+ Z) = j_hat(X)^flat j_hat(Z)` over unit pairs, and `j_hat(I) = I`.
    pub multiplicativity: f64,
    /// `L^flat = L^+ G`.
    pub lflat: f64,
    /// `L^flat j_hat(X) L = bold_lambda(X)` over units.
    pub generator: f64,
}

impl PseudoReport {
    pub fn max(&self) -> f64 {
        self.multiplicativity.max(self.lflat).max(self.generator)
    }
}

/// Assembles the pseudo-Hilbert dilation and verifies its three identities
/// to `DILATION_TOL * max(1, max |block entry|)`.
pub fn build_pseudo_dilation(pre: &PreHilbertDilation, gen: &FormGenerator) -> Result<PseudoDilation> {
    let (n, d) = (pre.n(), pre.d());
    if gen.n() != n || gen.d() != d {
        return Err(Error::Shape("dilation and generator dimensions differ".into()));
    }
    let kdim = pre.kspace_dim();
    let metric = PseudoMetric::new(n, kdim, pre.corner().clone())?;
    let dim = metric.dim();

    let mut lbold = zeros(dim, n * (d + 1));
    set_block(&mut lbold, n + kdim, 0, &linalg::identity(n));
    for m in 0..d {
        set_block(&mut lbold, 0, (m + 1) * n, &pre.lminus()[m]);
        set_block(&mut lbold, n, (m + 1) * n, &pre.lcirc()[m]);
    }
    let mut lflat = zeros(n * (d + 1), dim);
    set_block(&mut lflat, 0, 0, &linalg::identity(n));
    set_block(&mut lflat, 0, n + kdim, pre.corner());
    for m in 0..d {
        set_block(&mut lflat, (m + 1) * n, n, &pre.lcirc()[m].adjoint());
        set_block(&mut lflat, (m + 1) * n, n + kdim, &pre.lminus()[m].adjoint());
    }

    let mut out = PseudoDilation {
        metric,
        pre: pre.clone(),
        lbold,
        lflat,
        report: PseudoReport::default(),
    };
    let limit = DILATION_TOL * gen.blocks().max_abs().max(1.0);
    let fail = |what: &'static str, residual: f64, at: Option<String>| Error::ResidualTooLarge {
        what,
        residual,
        tol: limit,
        at,
    };

    let mut rep = PseudoReport {
        lflat: max_abs_diff(&out.lflat, &(out.lbold.adjoint() * out.metric.g())),
        multiplicativity: max_abs_diff(&out.jhat(&linalg::identity(n)), &linalg::identity(dim)),
        ..Default::default()
    };
    if rep.lflat > limit {
        return Err(fail("L flat", rep.lflat, None));
    }
    let units = linalg::matrix_units(n);
    for (a, x) in units.iter().enumerate() {
        let label = format!("E_{}{}", a / n, a % n);
        let res = max_abs_diff(&out.compress(x), &gen.bold(x));
        rep.generator = rep.generator.max(res);
        if res > limit {
            return Err(fail("L flat j_hat(X) L = bold lambda(X)", res, Some(label)));
        }
        let xflat = out.metric.flat_operator(&out.jhat(x))?;
        for (b, z) in units.iter().enumerate() {
            let res = max_abs_diff(&out.jhat(&(x.adjoint() * z)), &(&xflat * out.jhat(z)));
            rep.multiplicativity = rep.multiplicativity.max(res);
            if res > limit {
                let at = format!("{label}, E_{}{}", b / n, b % n);
                return Err(fail("j_hat multiplicativity", res, Some(at)));
            }
        }
    }
    out.report = rep;
    Ok(out)
}

impl PseudoDilation {
    pub fn metric(&self) -> &PseudoMetric {
        &self.metric
    }

    pub fn pre(&self) -> &PreHilbertDilation {
        &self.pre
    }

    pub fn lbold(&self) -> &CMat {
        &self.lbold
    }

    pub fn lflat(&self) -> &CMat {
        &self.lflat
    }

    pub fn report(&self) -> PseudoReport {
        self.report
    }

    /// `j_hat(X) = [[X, k*(X), l(X)], [0, j(X), k(X)], [0, 0, X]]`.
    pub fn jhat(&self, x: &CMat) -> CMat {
        let n = self.pre.n();
        let kdim = self.pre.kspace_dim();
        let mut out = zeros(self.metric.dim(), self.metric.dim());
        set_block(&mut out, 0, 0, x);
        set_block(&mut out, 0, n, &self.pre.kstar(x));
        set_block(&mut out, 0, n + kdim, &self.pre.l(x));
        set_block(&mut out, n, n, &self.pre.j(x));
        set_block(&mut out, n, n + kdim, &self.pre.k(x));
        set_block(&mut out, n + kdim, n + kdim, x);
        out
    }

    /// `L^flat j_hat(X) L`.
    pub fn compress(&self, x: &CMat) -> CMat {
        &self.lflat * self.jhat(x) * &self.lbold
    }

    /// Is `j_hat(X)` block-diagonal (no derivation blocks) for this `X`?
    pub fn is_block_diagonal_at(&self, x: &CMat, tol: f64) -> bool {
        let n = self.pre.n();
        let kdim = self.pre.kspace_dim();
        let j = self.jhat(x);
        let off = [
            j.view((0, n), (n, kdim)).into_owned(),
            j.view((0, n + kdim), (n, n)).into_owned(),
            j.view((n, n + kdim), (kdim, n)).into_owned(),
        ];
        off.iter().all(|b| max_abs(b) <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dilation::build_pre_hilbert;
    use crate::generator::assemble_from_hp;
    use crate::models;
    use crate::random::{random_hp_params, seeded, Normalization};

    #[test]
    fn trivial_exchange_is_exact_and_block_diagonal() {
        let p = models::trivial_exchange(2);
        let gen = assemble_from_hp(&p).unwrap();
        let pre = build_pre_hilbert(&p, gen.corner()).unwrap();
        let dil = build_pseudo_dilation(&pre, &gen).unwrap();
        assert_eq!(dil.report().generator, 0.0);
        for x in linalg::matrix_units(2) {
            assert!(dil.is_block_diagonal_at(&x, 0.0));
        }
    }

    #[test]
    fn amplitude_damping_compression() {
        let p = models::amplitude_damping();
        let gen = assemble_from_hp(&p).unwrap();
        let pre = build_pre_hilbert(&p, gen.corner()).unwrap();
        let dil = build_pseudo_dilation(&pre, &gen).unwrap();
        assert!(dil.report().max() <= 1e-10);
    }

    #[test]
    fn random_multiplicativity() {
        for seed in 0..10 {
            let mut rng = seeded(400 + seed);
            let p = random_hp_params(&mut rng, 2, 2, 3, 0.7, Normalization::Submartingale(0.4)).unwrap();
            let gen = assemble_from_hp(&p).unwrap();
            let pre = build_pre_hilbert(&p, gen.corner()).unwrap();
            let dil = build_pseudo_dilation(&pre, &gen).unwrap();
            assert!(dil.report().multiplicativity <= 1e-10);
            assert!(dil.report().generator <= 1e-10);
        }
    }

    #[test]
    fn mismatched_corner_is_reported_with_a_basis_element() {
        let p = models::amplitude_damping();
        let gen = assemble_from_hp(&p).unwrap();
        let pre = build_pre_hilbert(&p, &linalg::identity(2).scale(-1.0)).unwrap();
        match build_pseudo_dilation(&pre, &gen) {
            Err(Error::ResidualTooLarge { at: Some(_), .. }) => {}
            other => panic!("expected a located residual failure, got {other:?}"),
        }
    }
}
