//! Linear maps between matrix algebras as dense action matrices.

use crate::error::{Error, Result};
use crate::linalg::{self, max_abs_diff, unvec, vec, CMat};

/// Linear map `M_n -> M_m`, stored as the `m^2 x n^2` matrix acting on
/// column-stacked inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    in_dim: usize,
    out_dim: usize,
    action: CMat,
}

impl SuperOperator {
    pub fn new(in_dim: usize, out_dim: usize, action: CMat) -> Result<Self> {
        if action.nrows() != out_dim * out_dim || action.ncols() != in_dim * in_dim {
            return Err(Error::Shape(format!(
                "superoperator M_{in_dim} -> M_{out_dim} needs a {}x{} action, got {}x{}",
                out_dim * out_dim,
                in_dim * in_dim,
                action.nrows(),
                action.ncols()
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            action,
        })
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            action: CMat::zeros(out_dim * out_dim, in_dim * in_dim),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            in_dim: n,
            out_dim: n,
            action: linalg::identity(n * n),
        }
    }

    /// `X -> A X B` for `A: m x n`, `B: n x m`.
    pub fn sandwich(a: &CMat, b: &CMat) -> Result<Self> {
        if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
            return Err(Error::Shape(format!(
                "sandwich factors {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        Self::new(a.ncols(), a.nrows(), linalg::sandwich_action(a, b))
    }

    /// `X -> X^T`.
    pub fn transpose_map(n: usize) -> Self {
        Self::from_fn(n, n, |x| x.transpose())
    }

    /// Tabulates an arbitrary linear map on the matrix units of `M_n`.
    pub fn from_fn(in_dim: usize, out_dim: usize, f: impl Fn(&CMat) -> CMat) -> Self {
        let mut action = CMat::zeros(out_dim * out_dim, in_dim * in_dim);
        for col in 0..in_dim * in_dim {
            // column index is the column-stacked position of |i><j|
            let (i, j) = (col % in_dim, col / in_dim);
            let y = f(&linalg::unit(in_dim, i, j));
            assert_eq!(y.shape(), (out_dim, out_dim), "from_fn output shape");
            action.set_column(col, &vec(&y));
        }
        Self {
            in_dim,
            out_dim,
            action,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn action(&self) -> &CMat {
        &self.action
    }

    pub fn into_action(self) -> CMat {
        self.action
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        assert_eq!(x.shape(), (self.in_dim, self.in_dim), "superoperator input shape");
        unvec(&(&self.action * vec(x)), self.out_dim, self.out_dim)
    }

    /// `self o inner`: apply `inner` first.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.out_dim != self.in_dim {
            return Err(Error::Shape(format!(
                "cannot compose M_{} -> M_{} after M_{} -> M_{}",
                self.in_dim, self.out_dim, inner.in_dim, inner.out_dim
            )));
        }
        Ok(Self {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            action: &self.action * &inner.action,
        })
    }

    pub fn scaled(&self, s: crate::linalg::C64) -> Self {
        Self {
            action: self.action.map(|z| z * s),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dims(other)?;
        Ok(Self {
            action: &self.action + &other.action,
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_dims(other)?;
        Ok(Self {
            action: &self.action - &other.action,
            ..self.clone()
        })
    }

    fn same_dims(&self, other: &Self) -> Result<()> {
        if self.in_dim != other.in_dim || self.out_dim != other.out_dim {
            return Err(Error::Shape("superoperator dimensions differ".into()));
        }
        Ok(())
    }

    /// `X -> phi(X^dagger)^dagger`.
    pub fn adjoint_map(&self) -> Self {
        Self::from_fn(self.in_dim, self.out_dim, |x| self.apply(&x.adjoint()).adjoint())
    }

    /// Choi matrix `sum_pq |p><q| (x) phi(|p><q|)`.
    pub fn choi(&self) -> CMat {
        let (n, m) = (self.in_dim, self.out_dim);
        let mut out = CMat::zeros(n * m, n * m);
        for p in 0..n {
            for q in 0..n {
                let y = self.apply(&linalg::unit(n, p, q));
                linalg::set_block(&mut out, p * m, q * m, &y);
            }
        }
        out
    }

    /// `max_X |phi(X^dagger) - phi(X)^dagger|` over matrix units.
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(&self.action, &self.adjoint_map().action)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.action, &other.action)
    }
}
