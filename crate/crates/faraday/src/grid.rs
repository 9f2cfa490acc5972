//! Discretization substrate: Fourier collocation on the periodic
//! cross-section `Sigma = (L1 T) x (L2 T)` and Chebyshev-Lobatto collocation
//! on the vertical interval `[-b, 0]`.
//!
//! Horizontal transforms use the convention
//!
//! ```text
//! f(x) = sum_m fhat(m) exp(i k(m) . x),   k(m) = 2 pi (m1/L1, m2/L2),
//! ```
//!
//! with modes in FFT order `m in [-n/2, n/2)`. Products are dealiased with
//! the 2/3 rule. Vertical differentiation and quadrature use the dense
//! collocation matrix and Clenshaw-Curtis weights.

use crate::error::{Error, Result};
use crate::params::Params;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Hard caps documented for desk-scale runs.
pub const MAX_HORIZONTAL: usize = 512;
pub const MAX_VERTICAL: usize = 257;

/// Immutable discretization of the slab `Sigma x (-b, 0)`.
pub struct Grid {
    pub n1: usize,
    pub n2: usize,
    pub nz: usize,
    pub l1: f64,
    pub l2: f64,
    pub b: f64,
    /// Physical wavenumbers `2 pi m / L` in FFT order, per axis.
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Integer mode numbers in FFT order, per axis.
    pub m1: Vec<i64>,
    pub m2: Vec<i64>,
    /// Vertical collocation nodes, descending from exactly 0 to exactly -b.
    pub z: Vec<f64>,
    /// Collocation differentiation matrix on `z` (dense, nz x nz).
    pub dz: Array2<f64>,
    /// Clenshaw-Curtis quadrature weights for `int_{-b}^0`.
    pub wz: Vec<f64>,
    /// 2/3-rule dealiasing mask, true = mode kept.
    pub dealias: Array2<bool>,
    fft: SpectralPlans,
}

struct SpectralPlans {
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n1", &self.n1)
            .field("n2", &self.n2)
            .field("nz", &self.nz)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("b", &self.b)
            .finish()
    }
}

/// Build a grid for the given parameters and resolution.
///
/// `n1`, `n2` must be even and in `[4, 512]`; `nz` in `[4, 257]`.
pub fn make_grid(params: &Params, n1: usize, n2: usize, nz: usize) -> Result<Grid> {
    params.validate()?;
    Grid::new(params.l1, params.l2, params.b, n1, n2, nz)
}

impl Grid {
    pub fn new(l1: f64, l2: f64, b: f64, n1: usize, n2: usize, nz: usize) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n % 2 != 0 || n < 4 || n > MAX_HORIZONTAL {
                return Err(Error::Config(format!(
                    "grid.{name} must be even and in [4, {MAX_HORIZONTAL}], got {n}"
                )));
            }
        }
        if nz < 4 || nz > MAX_VERTICAL {
            return Err(Error::Config(format!(
                "grid.nz must be in [4, {MAX_VERTICAL}], got {nz}"
            )));
        }
        if !(l1 > 0.0 && l2 > 0.0 && b > 0.0) {
            return Err(Error::Config(format!(
                "grid lengths must be positive: L1={l1}, L2={l2}, b={b}"
            )));
        }

        let modes = |n: usize| -> Vec<i64> {
            (0..n)
                .map(|i| if i < n / 2 { i as i64 } else { i as i64 - n as i64 })
                .collect()
        };
        let m1 = modes(n1);
        let m2 = modes(n2);
        let k_of = |m: &[i64], l: f64| -> Vec<f64> {
            m.iter()
                .map(|&m| std::f64::consts::TAU * m as f64 / l)
                .collect()
        };
        let k1 = k_of(&m1, l1);
        let k2 = k_of(&m2, l2);

        let z = lobatto_nodes(nz, b);
        let dz = diff_matrix(&z);
        let wz = clenshaw_curtis(nz, b);

        // 2/3 rule: keep |m| <= floor(n/3).
        let keep1 = (n1 / 3) as i64;
        let keep2 = (n2 / 3) as i64;
        let mut dealias = Array2::from_elem((n1, n2), false);
        for i in 0..n1 {
            for j in 0..n2 {
                dealias[[i, j]] = m1[i].abs() <= keep1 && m2[j].abs() <= keep2;
            }
        }

        let mut planner = FftPlanner::new();
        let fft = SpectralPlans {
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv2: planner.plan_fft_inverse(n2),
        };

        Ok(Grid {
            n1,
            n2,
            nz,
            l1,
            l2,
            b,
            k1,
            k2,
            m1,
            m2,
            z,
            dz,
            wz,
            dealias,
            fft,
        })
    }

    /// Nodal coordinates of the uniform horizontal mesh.
    pub fn x1(&self, i: usize) -> f64 {
        i as f64 * self.l1 / self.n1 as f64
    }
    pub fn x2(&self, j: usize) -> f64 {
        j as f64 * self.l2 / self.n2 as f64
    }

    /// |k|^2 for the horizontal mode at FFT indices (i, j).
    pub fn k_sq(&self, i: usize, j: usize) -> f64 {
        self.k1[i] * self.k1[i] + self.k2[j] * self.k2[j]
    }

    /// FFT index of integer mode m along axis 1 (None if out of range).
    pub fn index_of_m1(&self, m: i64) -> Option<usize> {
        let n = self.n1 as i64;
        if m >= -n / 2 && m < n / 2 {
            Some(((m + n) % n) as usize)
        } else {
            None
        }
    }
    pub fn index_of_m2(&self, m: i64) -> Option<usize> {
        let n = self.n2 as i64;
        if m >= -n / 2 && m < n / 2 {
            Some(((m + n) % n) as usize)
        } else {
            None
        }
    }

    /// Smallest horizontal mesh spacing (used by the CFL guard).
    pub fn min_dx(&self) -> f64 {
        (self.l1 / self.n1 as f64).min(self.l2 / self.n2 as f64)
    }

    /// Forward 2D transform in place: nodal values -> spectral coefficients.
    ///
    /// `data` has shape (n1, n2); normalization by 1/(n1 n2) so that a
    /// band-limited field recovers its analytic coefficients exactly.
    pub fn fft_forward_2d(&self, data: &mut Array2<Complex64>) {
        self.fft_2d(data, true);
        let scale = 1.0 / (self.n1 as f64 * self.n2 as f64);
        data.mapv_inplace(|c| c * scale);
    }

    /// Inverse 2D transform in place: spectral coefficients -> nodal values.
    pub fn fft_inverse_2d(&self, data: &mut Array2<Complex64>) {
        self.fft_2d(data, false);
    }

    fn fft_2d(&self, data: &mut Array2<Complex64>, forward: bool) {
        assert_eq!(data.shape(), [self.n1, self.n2]);
        let (p1, p2) = if forward {
            (&self.fft.fwd1, &self.fft.fwd2)
        } else {
            (&self.fft.inv1, &self.fft.inv2)
        };
        // Axis 1 (contiguous rows).
        for mut row in data.rows_mut() {
            let slice = row.as_slice_mut().expect("standard layout");
            p2.process(slice);
        }
        // Axis 0 via a scratch column.
        let mut col = vec![Complex64::new(0.0, 0.0); self.n1];
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                col[i] = data[[i, j]];
            }
            p1.process(&mut col);
            for i in 0..self.n1 {
                data[[i, j]] = col[i];
            }
        }
    }

    /// Apply the 2/3-rule mask to a spectral array of shape (n1, n2).
    pub fn apply_dealias_2d(&self, coeffs: &mut Array2<Complex64>) {
        for ((idx, keep), c) in self.dealias.indexed_iter().zip(coeffs.iter_mut()) {
            let _ = idx;
            if !keep {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Apply the collocation derivative along z to a stack of vertical values.
    /// `values` is indexed by vertical node; returns D * values.
    pub fn dz_apply(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.nz;
        assert_eq!(values.len(), n);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.dz[[i, j]] * values[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Vertical quadrature: `int_{-b}^0 v dz` by Clenshaw-Curtis weights.
    pub fn integrate_z(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.wz).map(|(v, w)| v * w).sum()
    }
}

/// Chebyshev-Lobatto nodes mapped to `[-b, 0]`, descending, endpoints exact.
fn lobatto_nodes(nz: usize, b: f64) -> Vec<f64> {
    let n = nz - 1;
    let mut z: Vec<f64> = (0..nz)
        .map(|j| {
            let theta = std::f64::consts::PI * j as f64 / n as f64;
            b * (theta.cos() - 1.0) / 2.0
        })
        .collect();
    z[0] = 0.0;
    z[n] = -b;
    z
}

/// Dense collocation differentiation matrix on arbitrary distinct nodes,
/// with the negative-sum trick for the diagonal.
fn diff_matrix(z: &[f64]) -> Array2<f64> {
    let n = z.len();
    let c: Vec<f64> = (0..n)
        .map(|i| {
            let edge = if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
            edge * if i % 2 == 0 { 1.0 } else { -1.0 }
        })
        .collect();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if i != j {
                let v = c[i] / c[j] / (z[i] - z[j]);
                d[[i, j]] = v;
                row_sum += v;
            }
        }
        d[[i, i]] = -row_sum;
    }
    d
}

/// Clenshaw-Curtis weights for the Lobatto nodes, scaled to `[-b, 0]`.
fn clenshaw_curtis(nz: usize, b: f64) -> Vec<f64> {
    let n = nz - 1;
    let nf = n as f64;
    let mut w = vec![0.0; nz];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let theta = std::f64::consts::PI * j as f64 / nf;
            let mut v = 1.0;
            for k in 1..n / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            v -= (nf * theta).cos() / (nf * nf - 1.0);
            *wj = 2.0 * v / nf;
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let theta = std::f64::consts::PI * j as f64 / nf;
            let mut v = 1.0;
            for k in 1..=(n - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            *wj = 2.0 * v / nf;
        }
    }
    // Scale from [-1, 1] (length 2) to [-b, 0] (length b).
    for wj in &mut w {
        *wj *= b / 2.0;
    }
    w
}

/// An `Array1` view of the vertical nodes (convenience for assembling
/// nodal profiles).
pub fn z_profile<F: Fn(f64) -> f64>(grid: &Grid, f: F) -> Array1<f64> {
    Array1::from_iter(grid.z.iter().map(|&z| f(z)))
}
