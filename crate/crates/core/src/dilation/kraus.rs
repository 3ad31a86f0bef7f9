use crate::error::{Error, Result};
use crate::generator::FormGenerator;
use crate::linalg::{self, CMat};

/// Kraus factorization `lambda^m_n(X) = sum_i L^i_m^dagger X L^i_n`.
#[derive(Clone, Debug)]
pub struct ExchangeKraus {
    /// Retained Choi rank.
    pub r: usize,
    /// `kraus_lmat[i][n] = L^i_n`.
    pub kraus_lmat: Vec<Vec<CMat>>,
    /// Choi spectrum, ascending.
    pub choi_eigenvalues: Vec<f64>,
    /// Largest reconstruction error over the exchange blocks.
    pub residual: f64,
}

/// Factorizes the exchange block through the Choi matrix of
/// `X -> [lambda^m_n(X)] : M_n -> M_{nd}`.
///
/// Eigenvalues at or below `tol * max eigenvalue` are discarded; an
/// eigenvalue below `-tol * max |eigenvalue|` is reported as
/// [`Error::NotCompletelyPositive`].
pub fn kraus_from_exchange_block(gen: &FormGenerator, tol: f64) -> Result<ExchangeKraus> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (n, d) = (gen.n(), gen.d());
    let nd = n * d;
    let choi = gen.exchange_map().choi();
    let (values, vectors) = linalg::hermitian_eigen(&choi);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = values.first().copied().unwrap_or(0.0);
    if min < -tol * scale {
        return Err(Error::NotCompletelyPositive { eigenvalue: min });
    }
    let top = values.last().copied().unwrap_or(0.0);
    let mut kraus_lmat = Vec::new();
    for (k, &mu) in values.iter().enumerate().rev() {
        if mu <= tol * top || mu <= 0.0 {
            break;
        }
        let v = vectors.column(k) * linalg::c(mu.sqrt(), 0.0);
        // L^i_m[p, s] = conj(v[p * nd + m * n + s])
        let row: Vec<CMat> = (0..d)
            .map(|m| CMat::from_fn(n, n, |p, s| v[p * nd + m * n + s].conj()))
            .collect();
        kraus_lmat.push(row);
    }
    let mut residual: f64 = 0.0;
    for x in linalg::matrix_units(n) {
        for m in 0..d {
            for k in 0..d {
                let rebuilt = kraus_lmat
                    .iter()
                    .fold(CMat::zeros(n, n), |acc, row| acc + row[m].adjoint() * &x * &row[k]);
                residual = residual.max(linalg::max_abs_diff(&rebuilt, &gen.exchange(m, k).apply(&x)));
            }
        }
    }
    Ok(ExchangeKraus {
        r: kraus_lmat.len(),
        kraus_lmat,
        choi_eigenvalues: values,
        residual,
    })
}
