use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, max_abs_diff, trace, CMat};

/// Hudson–Parthasarathy coefficients of the flow
/// `dF + K F dt = sum (L^i_n - delta^i_n) F dA^n_i + sum L^i F dA^+_i - sum K_n F dA^n_-`.
///
/// Noise indices `n` and Kraus indices `i` are 0-based in this API.
#[derive(Clone, Debug, PartialEq)]
pub struct HPParams {
    n: usize,
    d: usize,
    k: CMat,
    k_row: Vec<CMat>,
    h: CMat,
    kraus_l: Vec<CMat>,
    kraus_lmat: Vec<Vec<CMat>>,
}

const HERMITIAN_TOL: f64 = 1e-10;

impl HPParams {
    /// Validates shapes, Hermiticity of `h`, and that `h` is the
    /// anti-Hermitian part of `k` up to a multiple of the identity.
    pub fn new(
        k: CMat,
        k_row: Vec<CMat>,
        h: CMat,
        kraus_l: Vec<CMat>,
        kraus_lmat: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        let n = k.nrows();
        let d = k_row.len();
        let r = kraus_l.len();
        if n == 0 {
            return Err(Error::InvalidArgument("system dimension must be >= 1".into()));
        }
        if d == 0 {
            return Err(Error::InvalidArgument("noise dimension d must be >= 1".into()));
        }
        if r == 0 {
            return Err(Error::InvalidArgument("multiplicity r must be >= 1".into()));
        }
        linalg::check_square(&k, n, "K")?;
        linalg::check_square(&h, n, "H")?;
        for (m, km) in k_row.iter().enumerate() {
            linalg::check_square(km, n, &format!("K_{m}"))?;
        }
        for (i, l) in kraus_l.iter().enumerate() {
            linalg::check_square(l, n, &format!("L^{i}"))?;
        }
        if kraus_lmat.len() != r {
            return Err(Error::Shape(format!(
                "kraus_Lmat has {} rows, expected r = {r}",
                kraus_lmat.len()
            )));
        }
        for (i, row) in kraus_lmat.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Shape(format!("kraus_Lmat[{i}] has {} entries, expected d = {d}", row.len())));
            }
            for (m, l) in row.iter().enumerate() {
                linalg::check_square(l, n, &format!("L^{i}_{m}"))?;
            }
        }
        linalg::ensure_hermitian(&h, "H", HERMITIAN_TOL)?;

        let mismatch = max_abs_diff(&traceless(&anti_hermitian_part(&k)), &traceless(&h));
        if mismatch > HERMITIAN_TOL * max_abs(&k).max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "H must equal the anti-Hermitian part (K - K^dagger)/2i up to a trace shift (mismatch {mismatch:.3e})"
            )));
        }
        Ok(Self {
            n,
            d,
            k,
            k_row,
            h,
            kraus_l,
            kraus_lmat,
        })
    }

    /// Sets `K = (sum_i L^i^dagger L^i - d_target)/2 + iH`, so that the
    /// assembled generator has `lambda(I) = d_target`.
    pub fn from_hamiltonian(
        h: CMat,
        d_target: &CMat,
        k_row: Vec<CMat>,
        kraus_l: Vec<CMat>,
        kraus_lmat: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        let n = h.nrows();
        linalg::check_square(d_target, n, "D target")?;
        linalg::ensure_hermitian(d_target, "D target", HERMITIAN_TOL)?;
        let mut phi_i = CMat::zeros(n, n);
        for l in &kraus_l {
            linalg::check_square(l, n, "L^i")?;
            phi_i += l.adjoint() * l;
        }
        let k = (phi_i - d_target).scale(0.5) + h.map(|z| z * c(0.0, 1.0));
        Self::new(k, k_row, h, kraus_l, kraus_lmat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.kraus_l.len()
    }

    pub fn k(&self) -> &CMat {
        &self.k
    }

    pub fn k_row(&self) -> &[CMat] {
        &self.k_row
    }

    pub fn h(&self) -> &CMat {
        &self.h
    }

    pub fn kraus_l(&self) -> &[CMat] {
        &self.kraus_l
    }

    pub fn kraus_lmat(&self) -> &[Vec<CMat>] {
        &self.kraus_lmat
    }

    /// `phi(X) = sum_i L^i^dagger X L^i`.
    pub fn phi(&self, x: &CMat) -> CMat {
        self.kraus_l.iter().map(|l| l.adjoint() * x * l).sum()
    }

    /// `phi^m(X) = sum_i L^i_m^dagger X L^i`.
    pub fn phi_up(&self, m: usize, x: &CMat) -> CMat {
        self.kraus_l
            .iter()
            .zip(&self.kraus_lmat)
            .map(|(l, row)| row[m].adjoint() * x * l)
            .sum()
    }

    /// `phi_n(X) = sum_i L^i^dagger X L^i_n`.
    pub fn phi_down(&self, n: usize, x: &CMat) -> CMat {
        self.kraus_l
            .iter()
            .zip(&self.kraus_lmat)
            .map(|(l, row)| l.adjoint() * x * &row[n])
            .sum()
    }

    /// `phi^m_n(X) = sum_i L^i_m^dagger X L^i_n`.
    pub fn phi_exchange(&self, m: usize, n: usize, x: &CMat) -> CMat {
        self.kraus_lmat
            .iter()
            .map(|row| row[m].adjoint() * x * &row[n])
            .sum()
    }

    /// `lambda(I) = phi(I) - K - K^dagger`.
    pub fn normalization(&self) -> CMat {
        let id = linalg::identity(self.n);
        self.phi(&id) - &self.k - self.k.adjoint()
    }

    /// Martingale iff `K + K^dagger = phi(I)` to `tol`.
    pub fn is_martingale(&self, tol: f64) -> bool {
        max_abs(&self.normalization()) <= tol
    }

    /// Submartingale condition `phi(I) <= K + K^dagger` in PSD order.
    pub fn is_submartingale(&self, tol: f64) -> bool {
        linalg::hermitian_eigenvalues(&self.normalization())
            .last()
            .is_none_or(|&top| top <= tol)
    }

    /// `K -> K + shift` with Hermitian `shift`; `H` is unchanged.
    pub fn with_k_shift(&self, shift: &CMat) -> Result<Self> {
        linalg::check_square(shift, self.n, "K shift")?;
        linalg::ensure_hermitian(shift, "K shift", HERMITIAN_TOL)?;
        let mut out = self.clone();
        out.k += shift;
        Ok(out)
    }

    /// Rotates the Kraus index: `L'^i = sum_j U_ij L^j`, likewise for `L^i_n`.
    pub fn with_kraus_unitary(&self, u: &CMat) -> Result<Self> {
        let r = self.r();
        linalg::check_square(u, r, "Kraus unitary")?;
        let mix = |ops: &dyn Fn(usize) -> CMat| -> Vec<CMat> {
            (0..r)
                .map(|i| (0..r).map(|j| ops(j).map(|z| z * u[(i, j)])).sum())
                .collect()
        };
        let kraus_l = mix(&|j| self.kraus_l[j].clone());
        let per_noise: Vec<Vec<CMat>> = (0..self.d)
            .map(|m| mix(&|j| self.kraus_lmat[j][m].clone()))
            .collect();
        let kraus_lmat = (0..r).map(|i| (0..self.d).map(|m| per_noise[m][i].clone()).collect()).collect();
        Self::new(self.k.clone(), self.k_row.clone(), self.h.clone(), kraus_l, kraus_lmat)
    }

    /// Largest entry over all coefficients.
    pub fn max_abs(&self) -> f64 {
        let mut m = max_abs(&self.k).max(max_abs(&self.h));
        for x in self.k_row.iter().chain(&self.kraus_l).chain(self.kraus_lmat.iter().flatten()) {
            m = m.max(max_abs(x));
        }
        m
    }
}

/// Hermitian matrix `(K - K^dagger) / 2i`.
pub fn anti_hermitian_part(k: &CMat) -> CMat {
    (k - k.adjoint()).map(|z| z * c(0.0, -0.5))
}

fn traceless(m: &CMat) -> CMat {
    let n = m.nrows();
    let shift = trace(m) / n as f64;
    m - CMat::identity(n, n).map(|z| z * shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, unit, zeros};

    #[test]
    fn hamiltonian_constructor_hits_the_normalization_target() {
        let l = unit(2, 0, 1);
        let target = identity(2).scale(-0.25);
        let p = HPParams::from_hamiltonian(zeros(2, 2), &target, vec![zeros(2, 2)], vec![l], vec![vec![identity(2)]])
            .unwrap();
        assert!(max_abs_diff(&p.normalization(), &target) < 1e-15);
        assert!(p.is_submartingale(1e-12));
        assert!(!p.is_martingale(1e-12));
    }

    #[test]
    fn inconsistent_hamiltonian_is_rejected() {
        let err = HPParams::new(
            zeros(2, 2),
            vec![zeros(2, 2)],
            unit(2, 0, 0),
            vec![zeros(2, 2)],
            vec![vec![identity(2)]],
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn non_hermitian_h_is_rejected() {
        let err = HPParams::new(
            zeros(2, 2),
            vec![zeros(2, 2)],
            unit(2, 0, 1),
            vec![zeros(2, 2)],
            vec![vec![identity(2)]],
        );
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn shape_errors_are_reported() {
        let err = HPParams::new(zeros(2, 2), vec![zeros(3, 3)], zeros(2, 2), vec![zeros(2, 2)], vec![vec![identity(2)]]);
        assert!(matches!(err, Err(Error::Shape(_))));
        let err = HPParams::new(zeros(2, 2), vec![zeros(2, 2)], zeros(2, 2), vec![zeros(2, 2)], vec![]);
        assert!(matches!(err, Err(Error::Shape(_))));
    }
}
