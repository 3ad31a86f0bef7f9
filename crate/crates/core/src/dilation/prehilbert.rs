use crate::dilation::HPParams;
use crate::error::{Error, Result};
use crate::linalg::{self, c, commutator, max_abs_diff, CMat};

/// Spatial dilation on `K = C^r (x) C^n` with Kraus index outer:
/// `j(X) = diag(X, ..., X)`, `L = [L^1; ...; L^r]`, `L_n^o = [L^1_n; ...; L^r_n]`.
#[derive(Clone, Debug)]
pub struct PreHilbertDilation {
    n: usize,
    d: usize,
    r: usize,
    lop: CMat,
    lcirc: Vec<CMat>,
    lminus: Vec<CMat>,
    h: CMat,
    corner: CMat,
}

/// Largest violation of each representation identity over matrix-unit pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PreHilbertReport {
    /// `j(X^+ Z) = j(X)^+ j(Z)` and `j(I) = I`.
    pub representation: f64,
    /// `k(X^+ Z) = j(X)^+ k(Z) + k(X^+) Z`.
    pub derivation: f64,
    /// `l(X^+ Z) = X^+ l(Z) + l(X^+) Z + k*(X^+) k(Z)`.
    pub second_order: f64,
    /// `l*(X) = l(X) + [D, X]`.
    pub adjoint: f64,
}

impl PreHilbertReport {
    pub fn max(&self) -> f64 {
        self.representation.max(self.derivation).max(self.second_order).max(self.adjoint)
    }
}

/// Builds the pre-Hilbert dilation of `params` with corner `D`.
pub fn build_pre_hilbert(params: &HPParams, corner: &CMat) -> Result<PreHilbertDilation> {
    let n = params.n();
    linalg::check_square(corner, n, "D")?;
    linalg::ensure_hermitian(corner, "D", 1e-10)?;
    linalg::ensure_hermitian(params.h(), "H", 1e-10)?;
    let d = params.d();
    let r = params.r();
    let lop = linalg::vstack(params.kraus_l());
    let lcirc = (0..d)
        .map(|m| {
            let parts: Vec<CMat> = params.kraus_lmat().iter().map(|row| row[m].clone()).collect();
            linalg::vstack(&parts)
        })
        .collect();
    let id = linalg::identity(n);
    let lminus = (0..d).map(|m| params.phi_down(m, &id) - &params.k_row()[m]).collect();
    Ok(PreHilbertDilation {
        n,
        d,
        r,
        lop,
        lcirc,
        lminus,
        h: params.h().clone(),
        corner: corner.clone(),
    })
}

impl PreHilbertDilation {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn kspace_dim(&self) -> usize {
        self.n * self.r
    }

    pub fn lop(&self) -> &CMat {
        &self.lop
    }

    pub fn lcirc(&self) -> &[CMat] {
        &self.lcirc
    }

    pub fn lminus(&self) -> &[CMat] {
        &self.lminus
    }

    pub fn corner(&self) -> &CMat {
        &self.corner
    }

    pub fn j(&self, x: &CMat) -> CMat {
        linalg::block_diag(&vec![x.clone(); self.r])
    }

    /// `k(X) = j(X) L - L X`.
    pub fn k(&self, x: &CMat) -> CMat {
        self.j(x) * &self.lop - &self.lop * x
    }

    /// `k*(X) = L^+ j(X) - X L^+`.
    pub fn kstar(&self, x: &CMat) -> CMat {
        self.lop.adjoint() * self.j(x) - x * self.lop.adjoint()
    }

    /// `l(X) = (L^+ k(X) + k*(X) L + [X, D]) / 2 + i[H, X]`.
    pub fn l(&self, x: &CMat) -> CMat {
        let half = (self.lop.adjoint() * self.k(x) + self.kstar(x) * &self.lop + commutator(x, &self.corner)).scale(0.5);
        half + commutator(&self.h, x).map(|z| z * c(0.0, 1.0))
    }

    /// `l*(X) = l(X^+)^+`.
    pub fn lstar(&self, x: &CMat) -> CMat {
        self.l(&x.adjoint()).adjoint()
    }

    /// Checks the four identities on all pairs of matrix units.
    pub fn verify(&self) -> PreHilbertReport {
        let units = linalg::matrix_units(self.n);
        let mut rep = PreHilbertReport {
            representation: max_abs_diff(&self.j(&linalg::identity(self.n)), &linalg::identity(self.kspace_dim())),
            ..Default::default()
        };
        for x in &units {
            let xa = x.adjoint();
            rep.adjoint = rep.adjoint.max(max_abs_diff(&self.lstar(x), &(self.l(x) + commutator(&self.corner, x))));
            for z in &units {
                let xz = &xa * z;
                rep.representation = rep.representation.max(max_abs_diff(&self.j(&xz), &(self.j(x).adjoint() * self.j(z))));
                let k_rhs = self.j(x).adjoint() * self.k(z) + self.k(&xa) * z;
                rep.derivation = rep.derivation.max(max_abs_diff(&self.k(&xz), &k_rhs));
                let l_rhs = &xa * self.l(z) + self.l(&xa) * z + self.kstar(&xa) * self.k(z);
                rep.second_order = rep.second_order.max(max_abs_diff(&self.l(&xz), &l_rhs));
            }
        }
        rep
    }

    /// Like [`verify`](Self::verify) but fails when any identity exceeds `tol`.
    pub fn ensure_valid(&self, tol: f64) -> Result<PreHilbertReport> {
        let rep = self.verify();
        if rep.max().is_nan() || rep.max() > tol {
            return Err(Error::ResidualTooLarge {
                what: "pre-Hilbert identities",
                residual: rep.max(),
                tol,
                at: None,
            });
        }
        Ok(rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::assemble_from_hp;
    use crate::linalg::{max_abs, unit, zeros};
    use crate::models;
    use crate::random::{random_hp_params, random_matrix, seeded, Normalization};

    #[test]
    fn trivial_exchange_has_vanishing_derivations() {
        let p = models::trivial_exchange(2);
        let pre = build_pre_hilbert(&p, &zeros(2, 2)).unwrap();
        for x in linalg::matrix_units(2) {
            assert_eq!(max_abs(&pre.k(&x)), 0.0);
            assert_eq!(max_abs(&pre.kstar(&x)), 0.0);
            assert_eq!(max_abs(&pre.l(&x)), 0.0);
        }
    }

    #[test]
    fn amplitude_damping_l_plus_dx_is_lambda() {
        let p = models::amplitude_damping();
        let gen = assemble_from_hp(&p).unwrap();
        let pre = build_pre_hilbert(&p, gen.corner()).unwrap();
        for x in linalg::matrix_units(2) {
            let lhs = pre.l(&x) + gen.corner() * &x;
            assert!(max_abs_diff(&lhs, &gen.scalar().apply(&x)) < 1e-14);
        }
        let e11 = unit(2, 1, 1);
        assert!(max_abs_diff(&pre.l(&e11), &(-&e11)) < 1e-14);
        assert!(pre.verify().max() < 1e-14);
    }

    #[test]
    fn random_derivation_identity() {
        let mut rng = seeded(31);
        let p = random_hp_params(&mut rng, 3, 2, 3, 0.8, Normalization::Submartingale(0.5)).unwrap();
        let pre = build_pre_hilbert(&p, &p.normalization()).unwrap();
        for _ in 0..20 {
            let x = random_matrix(&mut rng, 3, 3, 1.0);
            let z = random_matrix(&mut rng, 3, 3, 1.0);
            let res = pre.k(&(&x * &z)) - pre.j(&x) * pre.k(&z) - pre.k(&x) * &z;
            assert!(max_abs(&res) < 1e-11);
        }
        assert!(pre.verify().max() < 1e-10);
    }

    #[test]
    fn martingale_l_is_star_symmetric() {
        let mut rng = seeded(5);
        let p = random_hp_params(&mut rng, 2, 1, 2, 0.8, Normalization::Martingale).unwrap();
        let pre = build_pre_hilbert(&p, &zeros(2, 2)).unwrap();
        for x in linalg::matrix_units(2) {
            assert!(max_abs_diff(&pre.lstar(&x), &pre.l(&x)) < 1e-13);
        }
    }

    #[test]
    fn non_hermitian_corner_is_rejected() {
        let p = models::amplitude_damping();
        assert!(build_pre_hilbert(&p, &unit(2, 0, 1)).is_err());
    }
}
