use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

/// Uniform grid `t_k = k T / N`, `k = 0..=N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be finite and >= 0, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.tau()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Sub-grid covering slices `start..start + steps`.
    pub fn window(&self, start: usize, steps: usize) -> Result<Self> {
        if steps == 0 || start + steps > self.steps {
            return Err(Error::InvalidArgument(format!(
                "window {start}..{} outside grid of {} steps",
                start + steps,
                self.steps
            )));
        }
        Ok(Self {
            horizon: steps as f64 * self.tau(),
            steps,
        })
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self.steps != other.steps || self.horizon != other.horizon {
            return Err(Error::GridMismatch(format!(
                "grid (T={}, N={}) differs from (T={}, N={})",
                self.horizon, self.steps, other.horizon, other.steps
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant coherent function: `values[k][m]` is `f^m` on
/// `[t_k, t_{k+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentFunction {
    grid: TimeGrid,
    d: usize,
    values: Vec<Vec<C64>>,
}

impl CoherentFunction {
    pub fn new(grid: TimeGrid, d: usize, values: Vec<Vec<C64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("coherent function needs d >= 1".into()));
        }
        if values.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "coherent function has {} slices, grid has {}",
                values.len(),
                grid.steps()
            )));
        }
        for row in &values {
            if row.len() != d {
                return Err(Error::Shape(format!("coherent slice has {} components, expected {d}", row.len())));
            }
            if row.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::InvalidArgument("coherent values must be finite".into()));
            }
        }
        Ok(Self { grid, d, values })
    }

    pub fn vacuum(grid: TimeGrid, d: usize) -> Self {
        Self {
            grid,
            d,
            values: vec![vec![C64::new(0.0, 0.0); d]; grid.steps()],
        }
    }

    pub fn constant(grid: TimeGrid, value: &[C64]) -> Result<Self> {
        Self::new(grid, value.len(), vec![value.to_vec(); grid.steps()])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn slice(&self, k: usize) -> &[C64] {
        &self.values[k]
    }

    /// `sum_m conj(f^m) h^m` on slice `k`.
    pub fn pairing(&self, other: &Self, k: usize) -> C64 {
        self.values[k]
            .iter()
            .zip(&other.values[k])
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// The time-shifted function `f(. + t_start)` on slices `start..start + steps`.
    pub fn window(&self, start: usize, steps: usize) -> Result<Self> {
        let grid = self.grid.window(start, steps)?;
        Ok(Self {
            grid,
            d: self.d,
            values: self.values[start..start + steps].to_vec(),
        })
    }

    pub fn ensure_compatible(&self, grid: &TimeGrid, d: usize) -> Result<()> {
        self.grid.ensure_same(grid)?;
        if self.d != d {
            return Err(Error::Shape(format!("coherent function has d = {}, expected {d}", self.d)));
        }
        Ok(())
    }
}

/// Values `Phi_k` of a matrix-element form at the grid times.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixElementTrace {
    pub times: Vec<f64>,
    pub values: Vec<CMat>,
}

impl MatrixElementTrace {
    pub fn n(&self) -> usize {
        self.values.first().map_or(0, |v| v.nrows())
    }

    pub fn last(&self) -> &CMat {
        self.values.last().expect("trace is never empty")
    }

    /// Largest entrywise difference over all grid points.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn max_hermitian_residual(&self) -> f64 {
        self.values.iter().map(linalg::hermitian_residual).fold(0.0, f64::max)
    }
}

/// `W_k` solving `dW/dt = -(K + sum_m K_m h^m) W`, `W_0 = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorCocycleTrace {
    pub times: Vec<f64>,
    pub values: Vec<CMat>,
}
