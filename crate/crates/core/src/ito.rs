//! Finite-dimensional Hudson–Parthasarathy Itô algebra.
//!
//! A quantum stochastic increment `dA(alpha) = alpha^mu_nu dA^nu_mu` is
//! represented by its structure matrix `alpha`, a `(d+2) x (d+2)` array of
//! `n x n` operators indexed in the fixed order `(-, 1, ..., d, +)`. With the
//! conventions `alpha^+_nu = 0 = alpha^mu_-` the Itô product of increments is
//! the ordinary block matrix product, and the flat involution is the
//! pseudo-Hermitian conjugation `G^-1 alpha^dagger G` in an indefinite metric.

use crate::error::{Error, Result};
use crate::linalg::{self, block, max_abs, max_abs_diff, set_block, zeros, CMat};

/// Index layout `(-, 1, ..., d, +)` mapped to positions `0 ..= d + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexSet {
    d: usize,
}

impl IndexSet {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("noise dimension d must be >= 1".into()));
        }
        Ok(Self { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.d + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub const fn minus(&self) -> usize {
        0
    }

    pub fn plus(&self) -> usize {
        self.d + 1
    }

    /// Position of noise index `m` (1-based, as in `1..=d`).
    pub fn noise(&self, m: usize) -> usize {
        assert!(m >= 1 && m <= self.d, "noise index {m} out of 1..={}", self.d);
        m
    }

    pub fn label(&self, pos: usize) -> String {
        match pos {
            0 => "-".to_string(),
            p if p == self.d + 1 => "+".to_string(),
            p => p.to_string(),
        }
    }

    /// Reflection `-(-) = +`, `-(+) = -`, identity on noise indices.
    pub fn reflect(&self, pos: usize) -> usize {
        if pos == 0 {
            self.plus()
        } else if pos == self.plus() {
            0
        } else {
            pos
        }
    }
}

/// Operator-valued `(d+2) x (d+2)` structure matrix with zero `+` row and
/// zero `-` column.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureMatrix {
    n: usize,
    index: IndexSet,
    entries: Vec<CMat>,
}

impl StructureMatrix {
    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        let index = IndexSet::new(d)?;
        let len = index.len();
        Ok(Self {
            n,
            index,
            entries: vec![zeros(n, n); len * len],
        })
    }

    /// Builds from row-major entries, validating shapes and the zero row/column.
    pub fn new(n: usize, d: usize, entries: Vec<CMat>) -> Result<Self> {
        let index = IndexSet::new(d)?;
        let len = index.len();
        if entries.len() != len * len {
            return Err(Error::Shape(format!(
                "structure matrix needs {} entries, got {}",
                len * len,
                entries.len()
            )));
        }
        for (k, e) in entries.iter().enumerate() {
            linalg::check_square(e, n, &format!("structure entry {k}"))?;
        }
        let s = Self { n, index, entries };
        s.check_admissible()?;
        Ok(s)
    }

    /// `coeff` placed at `(row, col)`, zero elsewhere.
    pub fn unit(n: usize, d: usize, row: usize, col: usize, coeff: CMat) -> Result<Self> {
        let mut s = Self::zeros(n, d)?;
        s.set(row, col, coeff)?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.index.d()
    }

    pub fn index(&self) -> IndexSet {
        self.index
    }

    pub fn get(&self, row: usize, col: usize) -> &CMat {
        &self.entries[row * self.index.len() + col]
    }

    /// Sets an entry; writing a non-zero value into the `+` row or `-`
    /// column is rejected.
    pub fn set(&mut self, row: usize, col: usize, value: CMat) -> Result<()> {
        linalg::check_square(&value, self.n, "structure entry")?;
        let len = self.index.len();
        if row >= len || col >= len {
            return Err(Error::InvalidArgument(format!("index ({row},{col}) outside {len}x{len}")));
        }
        if (row == self.index.plus() || col == self.index.minus()) && max_abs(&value) != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "entry ({},{}) lies in the structurally zero row/column",
                self.index.label(row),
                self.index.label(col)
            )));
        }
        self.entries[row * len + col] = value;
        Ok(())
    }

    fn check_admissible(&self) -> Result<()> {
        let len = self.index.len();
        for k in 0..len {
            let row_plus = max_abs(self.get(self.index.plus(), k));
            let col_minus = max_abs(self.get(k, self.index.minus()));
            if row_plus != 0.0 || col_minus != 0.0 {
                return Err(Error::InvalidArgument(
                    "structure matrix must vanish on the + row and - column".into(),
                ));
            }
        }
        Ok(())
    }

    /// Dense `(d+2)n x (d+2)n` block matrix.
    pub fn to_block_matrix(&self) -> CMat {
        let len = self.index.len();
        let n = self.n;
        let mut m = zeros(len * n, len * n);
        for i in 0..len {
            for j in 0..len {
                set_block(&mut m, i * n, j * n, self.get(i, j));
            }
        }
        m
    }

    pub fn from_block_matrix(n: usize, d: usize, m: &CMat) -> Result<Self> {
        let index = IndexSet::new(d)?;
        let len = index.len();
        linalg::check_square(m, len * n, "structure block matrix")?;
        let mut entries = Vec::with_capacity(len * len);
        for i in 0..len {
            for j in 0..len {
                entries.push(block(m, i, j, n, n));
            }
        }
        Self::new(n, d, entries)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.d() != other.d() {
            return Err(Error::Shape(format!(
                "structure matrices (n={}, d={}) and (n={}, d={})",
                self.n,
                self.d(),
                other.n,
                other.d()
            )));
        }
        Ok(())
    }
}

/// Indefinite metric `G = [[0,0,I],[0,I,0],[I,0,D]]` on `h + K + h`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoMetric {
    n: usize,
    k: usize,
    corner: CMat,
}

impl PseudoMetric {
    pub fn new(n: usize, k: usize, corner: CMat) -> Result<Self> {
        linalg::check_square(&corner, n, "metric corner D")?;
        Ok(Self { n, k, corner })
    }

    /// Metric matching a structure matrix over `n`, `d`: middle space `h (x) C^d`.
    pub fn for_structure(n: usize, d: usize, corner: CMat) -> Result<Self> {
        Self::new(n, n * d, corner)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn corner(&self) -> &CMat {
        &self.corner
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.k
    }

    pub fn g(&self) -> CMat {
        let (n, k) = (self.n, self.k);
        let mut g = zeros(self.dim(), self.dim());
        set_block(&mut g, 0, n + k, &linalg::identity(n));
        set_block(&mut g, n, n, &linalg::identity(k));
        set_block(&mut g, n + k, 0, &linalg::identity(n));
        set_block(&mut g, n + k, n + k, &self.corner);
        g
    }

    /// Closed-form inverse `[[-D,0,I],[0,I,0],[I,0,0]]`.
    pub fn g_inv(&self) -> CMat {
        let (n, k) = (self.n, self.k);
        let mut g = zeros(self.dim(), self.dim());
        set_block(&mut g, 0, 0, &(-&self.corner));
        set_block(&mut g, 0, n + k, &linalg::identity(n));
        set_block(&mut g, n, n, &linalg::identity(k));
        set_block(&mut g, n + k, 0, &linalg::identity(n));
        g
    }

    /// `max |G G^-1 - I|` using the closed-form inverse.
    pub fn roundtrip_residual(&self) -> f64 {
        max_abs_diff(&(self.g() * self.g_inv()), &linalg::identity(self.dim()))
    }

    /// Pseudo-Hermitian conjugate `G^-1 m^dagger G` of an operator on the
    /// metric space.
    pub fn flat_operator(&self, m: &CMat) -> Result<CMat> {
        linalg::check_square(m, self.dim(), "operator on metric space")?;
        Ok(self.g_inv() * m.adjoint() * self.g())
    }

    fn ensure_hermitian(&self) -> Result<()> {
        linalg::ensure_hermitian(&self.corner, "metric corner D", 1e-12)
    }
}

/// Itô product `beta gamma` of two increments.
pub fn ito_product(beta: &StructureMatrix, gamma: &StructureMatrix) -> Result<StructureMatrix> {
    beta.same_shape(gamma)?;
    let len = beta.index.len();
    let n = beta.n;
    let mut entries = Vec::with_capacity(len * len);
    for mu in 0..len {
        for nu in 0..len {
            let mut acc = zeros(n, n);
            for k in 0..len {
                acc += beta.get(mu, k) * gamma.get(k, nu);
            }
            entries.push(acc);
        }
    }
    Ok(StructureMatrix {
        n,
        index: beta.index,
        entries,
    })
}

/// Flat involution `alpha -> G^-1 alpha^dagger G`.
pub fn flat(alpha: &StructureMatrix, g: &PseudoMetric) -> Result<StructureMatrix> {
    if g.n() != alpha.n() || g.k() != alpha.n() * alpha.d() {
        return Err(Error::Shape(format!(
            "metric (n={}, k={}) incompatible with structure matrix (n={}, d={})",
            g.n(),
            g.k(),
            alpha.n(),
            alpha.d()
        )));
    }
    g.ensure_hermitian()?;
    let m = g.flat_operator(&alpha.to_block_matrix())?;
    StructureMatrix::from_block_matrix(alpha.n(), alpha.d(), &m)
}

/// `max |G G^-1 - I|`.
pub fn metric_roundtrip(g: &PseudoMetric) -> f64 {
    g.roundtrip_residual()
}

/// Index quadruple `(mu, beta, gamma, nu)` of the product
/// `E(mu, beta) E(gamma, nu)`, i.e. `dA^beta_mu dA^nu_gamma`.
pub type IndexQuad = (usize, usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItoTableReport {
    pub d: usize,
    pub checked: usize,
    pub violations: Vec<IndexQuad>,
}

impl ItoTableReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `dA^beta_mu dA^nu_gamma = delta^beta_gamma dA^nu_mu` over every
/// admissible pair of basis increments, in exact integer arithmetic.
pub fn verify_ito_table(d: usize) -> Result<ItoTableReport> {
    verify_ito_table_with(d, None)
}

/// As [`verify_ito_table`], with an optional quadruple whose expected
/// Kronecker delta is flipped (fault injection).
pub fn verify_ito_table_with(d: usize, corrupt: Option<IndexQuad>) -> Result<ItoTableReport> {
    let index = IndexSet::new(d)?;
    let len = index.len();
    // lower indices range over {-, 1..d}, upper over {1..d, +}
    let lower = 0..=d;
    let upper = 1..=d + 1;

    let unit = |row: usize, col: usize| {
        let mut m = vec![0i64; len * len];
        m[row * len + col] = 1;
        m
    };
    let matmul = |a: &[i64], b: &[i64]| {
        let mut out = vec![0i64; len * len];
        for i in 0..len {
            for k in 0..len {
                let aik = a[i * len + k];
                if aik == 0 {
                    continue;
                }
                for j in 0..len {
                    out[i * len + j] += aik * b[k * len + j];
                }
            }
        }
        out
    };

    let mut checked = 0;
    let mut violations = Vec::new();
    for mu in lower.clone() {
        for beta in upper.clone() {
            let first = unit(mu, beta);
            for gamma in lower.clone() {
                for nu in upper.clone() {
                    let product = matmul(&first, &unit(gamma, nu));
                    let mut delta = i64::from(beta == gamma);
                    if corrupt == Some((mu, beta, gamma, nu)) {
                        delta = 1 - delta;
                    }
                    let mut expected = vec![0i64; len * len];
                    expected[mu * len + nu] = delta;
                    checked += 1;
                    if product != expected {
                        violations.push((mu, beta, gamma, nu));
                    }
                }
            }
        }
    }
    Ok(ItoTableReport { d, checked, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, identity};
    use crate::random::{random_matrix, seeded};

    fn random_structure(n: usize, d: usize, seed: u64) -> StructureMatrix {
        let mut rng = seeded(seed);
        let mut s = StructureMatrix::zeros(n, d).unwrap();
        for mu in 0..=d {
            for nu in 1..=d + 1 {
                s.set(mu, nu, random_matrix(&mut rng, n, n, 1.0)).unwrap();
            }
        }
        s
    }

    #[test]
    fn annihilation_times_creation_is_time() {
        let n = 1;
        let beta = StructureMatrix::unit(n, 1, 0, 1, identity(n)).unwrap();
        let gamma = StructureMatrix::unit(n, 1, 1, 2, identity(n)).unwrap();
        let p = ito_product(&beta, &gamma).unwrap();
        let expected = StructureMatrix::unit(n, 1, 0, 2, identity(n)).unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn time_increment_annihilates_everything() {
        let beta = StructureMatrix::unit(2, 2, 0, 3, identity(2)).unwrap();
        let gamma = random_structure(2, 2, 4);
        let p = ito_product(&beta, &gamma).unwrap();
        assert_eq!(p, StructureMatrix::zeros(2, 2).unwrap());
    }

    #[test]
    fn product_is_associative() {
        let (a, b, g) = (random_structure(2, 2, 1), random_structure(2, 2, 2), random_structure(2, 2, 3));
        let left = ito_product(&ito_product(&a, &b).unwrap(), &g).unwrap();
        let right = ito_product(&a, &ito_product(&b, &g).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn product_rejects_shape_mismatch() {
        let a = StructureMatrix::zeros(2, 1).unwrap();
        let b = StructureMatrix::zeros(2, 2).unwrap();
        assert!(matches!(ito_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn writing_into_plus_row_is_rejected() {
        let mut s = StructureMatrix::zeros(1, 1).unwrap();
        assert!(s.set(2, 1, identity(1)).is_err());
        assert!(s.set(1, 0, identity(1)).is_err());
    }

    #[test]
    fn flat_of_zero_is_zero() {
        let z = StructureMatrix::zeros(2, 2).unwrap();
        let g = PseudoMetric::for_structure(2, 2, zeros(2, 2)).unwrap();
        assert_eq!(flat(&z, &g).unwrap(), z);
    }

    #[test]
    fn flat_conjugates_the_time_coefficient() {
        let coeff = CMat::from_element(1, 1, c(0.3, 0.7));
        let alpha = StructureMatrix::unit(1, 1, 0, 2, coeff).unwrap();
        let g = PseudoMetric::for_structure(1, 1, zeros(1, 1)).unwrap();
        let f = flat(&alpha, &g).unwrap();
        let expected = StructureMatrix::unit(1, 1, 0, 2, CMat::from_element(1, 1, c(0.3, -0.7))).unwrap();
        assert!(f.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn flat_with_null_corner_is_index_reflection() {
        let alpha = random_structure(2, 2, 9);
        let g = PseudoMetric::for_structure(2, 2, zeros(2, 2)).unwrap();
        let f = flat(&alpha, &g).unwrap();
        let idx = alpha.index();
        for mu in 0..idx.len() {
            for nu in 0..idx.len() {
                let reflected = alpha.get(idx.reflect(nu), idx.reflect(mu)).adjoint();
                assert!(max_abs_diff(f.get(mu, nu), &reflected) < 1e-14);
            }
        }
    }

    #[test]
    fn flat_rejects_non_hermitian_corner() {
        let alpha = random_structure(2, 1, 5);
        let corner = CMat::from_fn(2, 2, |i, j| c(i as f64, j as f64 + 1.0));
        let g = PseudoMetric::for_structure(2, 1, corner).unwrap();
        assert!(matches!(flat(&alpha, &g), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn metric_roundtrip_examples() {
        let g = PseudoMetric::new(1, 1, zeros(1, 1)).unwrap();
        assert_eq!(metric_roundtrip(&g), 0.0);
        let g = PseudoMetric::new(2, 4, -identity(2)).unwrap();
        assert!(metric_roundtrip(&g) <= 1e-15);
        let mut corner = zeros(2, 2);
        corner[(1, 1)] = c(-2.0, 0.0);
        let g = PseudoMetric::new(2, 2, corner).unwrap();
        assert!(metric_roundtrip(&g) <= 1e-15);
    }

    #[test]
    fn ito_table_passes() {
        for d in 1..=3 {
            let report = verify_ito_table(d).unwrap();
            assert!(report.passed(), "d={d}: {:?}", report.violations);
            assert_eq!(report.checked, ((d + 1) * (d + 1)).pow(2));
        }
    }

    #[test]
    fn ito_table_reports_exactly_the_corrupted_quadruple() {
        let quad = (0, 2, 2, 3);
        let report = verify_ito_table_with(2, Some(quad)).unwrap();
        assert_eq!(report.violations, vec![quad]);
    }
}
