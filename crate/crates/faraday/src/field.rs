//! Spectral field types on the cross-section and the slab.
//!
//! [`SurfaceField`] stores complex Fourier coefficients indexed by
//! `(m1, m2)`; [`VolumeField`] stores, per horizontal mode, the vertical
//! collocation values of that mode (horizontal-spectral, vertical-nodal).
//! Real-valued fields keep Hermitian symmetry because every nonlinear
//! operation happens on real nodal values.

use crate::error::{Error, Result};
use crate::grid::Grid;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::Rng;

/// Scalar field on `Sigma`, stored spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceField {
    pub coeffs: Array2<Complex64>,
}

/// Scalar field on `Omega`, horizontal-spectral and vertical-nodal.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    pub coeffs: Array3<Complex64>,
}

/// 3-component fields are plain arrays of scalars.
pub type SurfaceVector = [SurfaceField; 3];
pub type VolumeVector = [VolumeField; 3];

/// Symmetric 3x3 tensor field stored by components (11, 22, 33, 12, 13, 23).
#[derive(Debug, Clone)]
pub struct SymTensorField {
    pub comps: [VolumeField; 6],
}

/// Index pairs for [`SymTensorField::comps`].
pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl SymTensorField {
    pub fn component(&self, i: usize, j: usize) -> &VolumeField {
        let pos = SYM_PAIRS
            .iter()
            .position(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j))
            .expect("indices in 0..3");
        &self.comps[pos]
    }

    /// Frobenius norm squared at each node: sum_ij |T_ij|^2, counting
    /// off-diagonal entries twice.
    pub fn frobenius_sq_nodal(&self, grid: &Grid) -> Array3<f64> {
        let mut acc = Array3::<f64>::zeros((grid.n1, grid.n2, grid.nz));
        for (pos, &(i, j)) in SYM_PAIRS.iter().enumerate() {
            let nodal = self.comps[pos].to_nodal(grid);
            let w = if i == j { 1.0 } else { 2.0 };
            acc.zip_mut_with(&nodal, |a, &v| *a += w * v * v);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// SurfaceField
// ---------------------------------------------------------------------------

impl SurfaceField {
    pub fn zeros(grid: &Grid) -> Self {
        SurfaceField {
            coeffs: Array2::from_elem((grid.n1, grid.n2), Complex64::new(0.0, 0.0)),
        }
    }

    /// Sample a real-valued function on the nodal mesh and transform.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut nodal = Array2::zeros((grid.n1, grid.n2));
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                nodal[[i, j]] = f(grid.x1(i), grid.x2(j));
            }
        }
        Self::from_nodal(grid, &nodal)
    }

    pub fn from_nodal(grid: &Grid, nodal: &Array2<f64>) -> Self {
        let mut c = nodal.mapv(|v| Complex64::new(v, 0.0));
        grid.fft_forward_2d(&mut c);
        SurfaceField { coeffs: c }
    }

    /// Set a single integer mode (and its conjugate partner, keeping the
    /// field real). `value` is the coefficient of `exp(i k(m) . x)`.
    pub fn set_mode(&mut self, grid: &Grid, m1: i64, m2: i64, value: Complex64) {
        let i = grid.index_of_m1(m1).expect("mode in range");
        let j = grid.index_of_m2(m2).expect("mode in range");
        self.coeffs[[i, j]] = value;
        if let (Some(ic), Some(jc)) = (grid.index_of_m1(-m1), grid.index_of_m2(-m2)) {
            if (ic, jc) != (i, j) {
                self.coeffs[[ic, jc]] = value.conj();
            }
        }
    }

    /// `amplitude * cos(k(m) . x + phase)` as a spectral field.
    pub fn cosine_mode(grid: &Grid, m1: i64, m2: i64, amplitude: f64, phase: f64) -> Self {
        let mut f = Self::zeros(grid);
        let half = 0.5 * amplitude * Complex64::new(phase.cos(), phase.sin());
        f.set_mode(grid, m1, m2, half);
        f
    }

    /// Random real band-limited field: independent coefficients on modes
    /// with `|m1|, |m2| <= mmax`, Hermitian-completed, mean zero.
    pub fn random_band_limited(grid: &Grid, rng: &mut impl Rng, mmax: i64, amplitude: f64) -> Self {
        let mut f = Self::zeros(grid);
        for m1 in -mmax..=mmax {
            for m2 in -mmax..=mmax {
                if (m1, m2) <= (0, 0) {
                    continue; // conjugate partner fills the other half-plane
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                f.set_mode(grid, m1, m2, amplitude * c);
            }
        }
        f
    }

    pub fn to_nodal(&self, grid: &Grid) -> Array2<f64> {
        let mut c = self.coeffs.clone();
        grid.fft_inverse_2d(&mut c);
        c.mapv(|v| v.re)
    }

    /// Spectral derivative along horizontal axis 0 or 1.
    pub fn dx(&self, grid: &Grid, axis: usize) -> Self {
        let mut out = self.clone();
        for ((i, j), c) in out.coeffs.indexed_iter_mut() {
            let k = if axis == 0 { grid.k1[i] } else { grid.k2[j] };
            *c *= Complex64::new(0.0, k);
        }
        // The Nyquist column has no conjugate partner; a first derivative
        // would break Hermitian symmetry there, so it is dropped.
        Self::zero_nyquist(grid, &mut out.coeffs);
        out
    }

    fn zero_nyquist(grid: &Grid, coeffs: &mut Array2<Complex64>) {
        let i_nyq = grid.n1 / 2;
        let j_nyq = grid.n2 / 2;
        for j in 0..grid.n2 {
            coeffs[[i_nyq, j]] = Complex64::new(0.0, 0.0);
        }
        for i in 0..grid.n1 {
            coeffs[[i, j_nyq]] = Complex64::new(0.0, 0.0);
        }
    }

    /// Multiplier `-|k|^2` (horizontal Laplacian).
    pub fn laplacian(&self, grid: &Grid) -> Self {
        let mut out = self.clone();
        for ((i, j), c) in out.coeffs.indexed_iter_mut() {
            *c *= -grid.k_sq(i, j);
        }
        out
    }

    /// Pointwise product, evaluated nodally, then dealiased.
    pub fn mul_dealiased(&self, other: &Self, grid: &Grid) -> Self {
        let a = self.to_nodal(grid);
        let b = other.to_nodal(grid);
        let mut out = Self::from_nodal(grid, &(&a * &b));
        grid.apply_dealias_2d(&mut out.coeffs);
        out
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[[0, 0]].re
    }

    /// Zero the (0,0) coefficient exactly.
    pub fn project_mean(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[[0, 0]] = Complex64::new(0.0, 0.0);
        out
    }

    /// Sobolev norm of fractional order `s >= -1` via Fourier multipliers:
    /// `( sum_m (1 + |k|^2)^s |fhat(m)|^2 L1 L2 )^(1/2)`.
    pub fn sobolev_norm(&self, grid: &Grid, s: f64) -> f64 {
        let area = grid.l1 * grid.l2;
        let mut acc = 0.0;
        for ((i, j), c) in self.coeffs.indexed_iter() {
            let mult = (1.0 + grid.k_sq(i, j)).powf(s);
            acc += mult * c.norm_sqr();
        }
        (acc * area).sqrt()
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.sobolev_norm(grid, 0.0)
    }

    /// L2 norm of the horizontal gradient, exact for spectral fields.
    pub fn grad_l2_norm(&self, grid: &Grid) -> f64 {
        let area = grid.l1 * grid.l2;
        let mut acc = 0.0;
        for ((i, j), c) in self.coeffs.indexed_iter() {
            acc += grid.k_sq(i, j) * c.norm_sqr();
        }
        (acc * area).sqrt()
    }

    /// Surface integral `int_Sigma f`, exact from the mean mode.
    pub fn integral(&self, grid: &Grid) -> f64 {
        self.coeffs[[0, 0]].re * grid.l1 * grid.l2
    }

    /// Surface integral of a pointwise product, by Parseval.
    pub fn inner_l2(&self, other: &Self, grid: &Grid) -> f64 {
        let area = grid.l1 * grid.l2;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.coeffs.iter().zip(other.coeffs.iter()) {
            acc += a * b.conj();
        }
        acc.re * area
    }

    pub fn max_abs_nodal(&self, grid: &Grid) -> f64 {
        self.to_nodal(grid)
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Max |imaginary part| over nodes; a Hermitian-symmetry meter.
    pub fn hermitian_defect(&self, grid: &Grid) -> f64 {
        let mut c = self.coeffs.clone();
        grid.fft_inverse_2d(&mut c);
        c.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()))
    }

    /// Harmonic (Poisson) extension into the slab: mode `m` is damped by
    /// `exp(|k(m)| z)`, the zero mode extends constantly.
    pub fn poisson_extend(&self, grid: &Grid) -> VolumeField {
        let mut out = VolumeField::zeros(grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let kabs = grid.k_sq(i, j).sqrt();
                let c = self.coeffs[[i, j]];
                for (l, &z) in grid.z.iter().enumerate() {
                    out.coeffs[[i, j, l]] = c * (kabs * z).exp();
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        SurfaceField {
            coeffs: self.coeffs.mapv(|c| c * s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        SurfaceField {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        SurfaceField {
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    /// Linear combination `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        SurfaceField {
            coeffs: &self.coeffs + &other.coeffs.mapv(|c| c * s),
        }
    }
}

// ---------------------------------------------------------------------------
// VolumeField
// ---------------------------------------------------------------------------

impl VolumeField {
    pub fn zeros(grid: &Grid) -> Self {
        VolumeField {
            coeffs: Array3::from_elem((grid.n1, grid.n2, grid.nz), Complex64::new(0.0, 0.0)),
        }
    }

    /// Sample a real function of `(x1, x2, z)` and transform horizontally.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut nodal = Array3::zeros((grid.n1, grid.n2, grid.nz));
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                for (l, &z) in grid.z.iter().enumerate() {
                    nodal[[i, j, l]] = f(grid.x1(i), grid.x2(j), z);
                }
            }
        }
        Self::from_nodal(grid, &nodal)
    }

    pub fn from_nodal(grid: &Grid, nodal: &Array3<f64>) -> Self {
        let mut out = Self::zeros(grid);
        let mut plane = Array2::zeros((grid.n1, grid.n2));
        for l in 0..grid.nz {
            for i in 0..grid.n1 {
                for j in 0..grid.n2 {
                    plane[[i, j]] = Complex64::new(nodal[[i, j, l]], 0.0);
                }
            }
            grid.fft_forward_2d(&mut plane);
            for i in 0..grid.n1 {
                for j in 0..grid.n2 {
                    out.coeffs[[i, j, l]] = plane[[i, j]];
                }
            }
        }
        out
    }

    pub fn from_nodal_dealiased(grid: &Grid, nodal: &Array3<f64>) -> Self {
        let mut out = Self::from_nodal(grid, nodal);
        out.apply_dealias(grid);
        out
    }

    pub fn apply_dealias(&mut self, grid: &Grid) {
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                if !grid.dealias[[i, j]] {
                    for l in 0..grid.nz {
                        self.coeffs[[i, j, l]] = Complex64::new(0.0, 0.0);
                    }
                }
            }
        }
    }

    pub fn to_nodal(&self, grid: &Grid) -> Array3<f64> {
        let mut out = Array3::zeros((grid.n1, grid.n2, grid.nz));
        let mut plane = Array2::zeros((grid.n1, grid.n2));
        for l in 0..grid.nz {
            for i in 0..grid.n1 {
                for j in 0..grid.n2 {
                    plane[[i, j]] = self.coeffs[[i, j, l]];
                }
            }
            grid.fft_inverse_2d(&mut plane);
            for i in 0..grid.n1 {
                for j in 0..grid.n2 {
                    out[[i, j, l]] = plane[[i, j]].re;
                }
            }
        }
        out
    }

    /// Spectral derivative along a horizontal axis (0 or 1).
    pub fn dx(&self, grid: &Grid, axis: usize) -> Self {
        let mut out = self.clone();
        for ((i, j, _), c) in out.coeffs.indexed_iter_mut() {
            let k = if axis == 0 { grid.k1[i] } else { grid.k2[j] };
            *c *= Complex64::new(0.0, k);
        }
        out.zero_nyquist(grid);
        out
    }

    fn zero_nyquist(&mut self, grid: &Grid) {
        let i_nyq = grid.n1 / 2;
        let j_nyq = grid.n2 / 2;
        for j in 0..grid.n2 {
            for l in 0..grid.nz {
                self.coeffs[[i_nyq, j, l]] = Complex64::new(0.0, 0.0);
            }
        }
        for i in 0..grid.n1 {
            for l in 0..grid.nz {
                self.coeffs[[i, j_nyq, l]] = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Collocation derivative along the vertical.
    pub fn dz(&self, grid: &Grid) -> Self {
        let mut out = Self::zeros(grid);
        let nz = grid.nz;
        let mut col = vec![Complex64::new(0.0, 0.0); nz];
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                for l in 0..nz {
                    col[l] = self.coeffs[[i, j, l]];
                }
                let d = grid.dz_apply(&col);
                for l in 0..nz {
                    out.coeffs[[i, j, l]] = d[l];
                }
            }
        }
        out
    }

    /// Partial derivative by axis index: 0, 1 horizontal; 2 vertical.
    pub fn deriv(&self, grid: &Grid, axis: usize) -> Self {
        match axis {
            0 | 1 => self.dx(grid, axis),
            2 => self.dz(grid),
            _ => panic!("axis must be 0, 1, or 2"),
        }
    }

    /// Trace on the free surface `z = 0` (vertical node 0).
    pub fn trace_top(&self, grid: &Grid) -> SurfaceField {
        let mut out = SurfaceField::zeros(grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                out.coeffs[[i, j]] = self.coeffs[[i, j, 0]];
            }
        }
        out
    }

    /// Trace on the bottom `z = -b` (vertical node nz-1).
    pub fn trace_bottom(&self, grid: &Grid) -> SurfaceField {
        let mut out = SurfaceField::zeros(grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                out.coeffs[[i, j]] = self.coeffs[[i, j, grid.nz - 1]];
            }
        }
        out
    }

    /// Extend a surface field as a constant in z.
    pub fn from_surface_constant(grid: &Grid, f: &SurfaceField) -> Self {
        let mut out = Self::zeros(grid);
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                for l in 0..grid.nz {
                    out.coeffs[[i, j, l]] = f.coeffs[[i, j]];
                }
            }
        }
        out
    }

    /// Multiply by an analytic vertical profile (exact per mode, no
    /// horizontal aliasing).
    pub fn mul_z_profile(&self, grid: &Grid, profile: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for (l, &z) in grid.z.iter().enumerate() {
            let p = profile(z);
            for i in 0..grid.n1 {
                for j in 0..grid.n2 {
                    out.coeffs[[i, j, l]] *= p;
                }
            }
        }
        out
    }

    /// Pointwise product, evaluated nodally, then dealiased.
    pub fn mul_dealiased(&self, other: &Self, grid: &Grid) -> Self {
        let a = self.to_nodal(grid);
        let b = other.to_nodal(grid);
        Self::from_nodal_dealiased(grid, &(&a * &b))
    }

    /// L2(Omega) inner product by horizontal Parseval and vertical quadrature.
    pub fn inner_l2(&self, other: &Self, grid: &Grid) -> f64 {
        let area = grid.l1 * grid.l2;
        let mut acc = 0.0;
        for i in 0..grid.n1 {
            for j in 0..grid.n2 {
                let mut vert = Complex64::new(0.0, 0.0);
                for l in 0..grid.nz {
                    vert += self.coeffs[[i, j, l]] * other.coeffs[[i, j, l]].conj() * grid.wz[l];
                }
                acc += vert.re;
            }
        }
        acc * area
    }

    pub fn l2_norm_sq(&self, grid: &Grid) -> f64 {
        self.inner_l2(self, grid)
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.l2_norm_sq(grid).max(0.0).sqrt()
    }

    /// Integral over Omega, from the horizontal mean mode.
    pub fn integral(&self, grid: &Grid) -> f64 {
        let area = grid.l1 * grid.l2;
        let mut acc = 0.0;
        for l in 0..grid.nz {
            acc += self.coeffs[[0, 0, l]].re * grid.wz[l];
        }
        acc * area
    }

    /// Integer-order Sobolev norm on the slab: sum over all multi-indices
    /// `|alpha| <= k` of squared L2 norms of the derivatives. Capped at
    /// k = 4, which covers every functional evaluated at first order.
    pub fn sobolev_norm(&self, grid: &Grid, k: usize) -> Result<f64> {
        if k > 4 {
            return Err(Error::Config(format!(
                "volume Sobolev order capped at 4, got {k}"
            )));
        }
        let mut acc = 0.0;
        // Horizontal parts are diagonal multipliers; the vertical part is a
        // repeated collocation derivative of the multiplied field.
        for a3 in 0..=k {
            let mut dzk = self.clone();
            for _ in 0..a3 {
                dzk = dzk.dz(grid);
            }
            for a1 in 0..=(k - a3) {
                for a2 in 0..=(k - a3 - a1) {
                    let mut term = dzk.clone();
                    for _ in 0..a1 {
                        term = term.dx(grid, 0);
                    }
                    for _ in 0..a2 {
                        term = term.dx(grid, 1);
                    }
                    acc += term.l2_norm_sq(grid);
                }
            }
        }
        Ok(acc.max(0.0).sqrt())
    }

    /// Max nodal absolute value (discrete sup norm).
    pub fn max_abs_nodal(&self, grid: &Grid) -> f64 {
        self.to_nodal(grid)
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// `C_b^2` norm: nodal max over all derivatives of order <= 2.
    pub fn cb2_norm(&self, grid: &Grid) -> f64 {
        let mut m = 0.0_f64;
        for a3 in 0..=2usize {
            let mut dzk = self.clone();
            for _ in 0..a3 {
                dzk = dzk.dz(grid);
            }
            for a1 in 0..=(2 - a3) {
                for a2 in 0..=(2 - a3 - a1) {
                    let mut term = dzk.clone();
                    for _ in 0..a1 {
                        term = term.dx(grid, 0);
                    }
                    for _ in 0..a2 {
                        term = term.dx(grid, 1);
                    }
                    m = m.max(term.max_abs_nodal(grid));
                }
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        VolumeField {
            coeffs: self.coeffs.mapv(|c| c * s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        VolumeField {
            coeffs: &self.coeffs + &other.coeffs,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        VolumeField {
            coeffs: &self.coeffs - &other.coeffs,
        }
    }

    pub fn add_scaled(&self, s: f64, other: &Self) -> Self {
        VolumeField {
            coeffs: &self.coeffs + &other.coeffs.mapv(|c| c * s),
        }
    }
}

/// Vector helpers used across modules.
pub fn volume_vector_zeros(grid: &Grid) -> VolumeVector {
    [
        VolumeField::zeros(grid),
        VolumeField::zeros(grid),
        VolumeField::zeros(grid),
    ]
}

pub fn surface_vector_zeros(grid: &Grid) -> SurfaceVector {
    [
        SurfaceField::zeros(grid),
        SurfaceField::zeros(grid),
        SurfaceField::zeros(grid),
    ]
}

pub fn volume_vector_scale(v: &VolumeVector, s: f64) -> VolumeVector {
    [v[0].scale(s), v[1].scale(s), v[2].scale(s)]
}

pub fn volume_vector_add(a: &VolumeVector, b: &VolumeVector) -> VolumeVector {
    [a[0].add(&b[0]), a[1].add(&b[1]), a[2].add(&b[2])]
}

pub fn volume_vector_sub(a: &VolumeVector, b: &VolumeVector) -> VolumeVector {
    [a[0].sub(&b[0]), a[1].sub(&b[1]), a[2].sub(&b[2])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::params::Params;

    fn grid(n: usize, nz: usize) -> Grid {
        make_grid(&Params::default(), n, n, nz).unwrap()
    }

    #[test]
    fn transform_round_trip_hits_machine_precision() {
        let g = grid(16, 9);
        let f = SurfaceField::from_fn(&g, |x, y| {
            (std::f64::consts::TAU * x).sin() * (2.0 * std::f64::consts::TAU * y).cos() + 0.3
        });
        let nodal = f.to_nodal(&g);
        let back = SurfaceField::from_nodal(&g, &nodal);
        let diff = (&f.coeffs - &back.coeffs)
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.norm()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn parseval_for_band_limited_fields() {
        let g = grid(16, 9);
        let f = SurfaceField::from_fn(&g, |x, y| {
            1.7 * (std::f64::consts::TAU * x).cos() - 0.4 * (std::f64::consts::TAU * (x + y)).sin()
        });
        // Nodal quadrature of |f|^2 on the uniform mesh.
        let nodal = f.to_nodal(&g);
        let quad: f64 =
            nodal.iter().map(|v| v * v).sum::<f64>() * g.l1 * g.l2 / (g.n1 * g.n2) as f64;
        let spectral = f.l2_norm(&g).powi(2);
        assert!((quad - spectral).abs() < 1e-10 * (1.0 + quad.abs()));
    }

    #[test]
    fn surface_norm_matches_multiplier_formula() {
        let g = grid(16, 9);
        let f = SurfaceField::cosine_mode(&g, 1, 0, 1.0, 0.0);
        assert!((f.sobolev_norm(&g, 0.0) - (0.5_f64).sqrt()).abs() < 1e-12);
        let tau = std::f64::consts::TAU;
        let expect = ((1.0 + tau * tau) / 2.0).sqrt();
        assert!((f.sobolev_norm(&g, 1.0) - expect).abs() < 1e-12);
        // s = 1 equals quadrature of f^2 + |grad f|^2.
        let alt = (f.l2_norm(&g).powi(2) + f.grad_l2_norm(&g).powi(2)).sqrt();
        assert!((f.sobolev_norm(&g, 1.0) - alt).abs() < 1e-12);
        // Zero field.
        assert_eq!(SurfaceField::zeros(&g).sobolev_norm(&g, 1.5), 0.0);
    }

    #[test]
    fn volume_norm_examples() {
        let g = grid(8, 17);
        let one = VolumeField::from_fn(&g, |_, _, _| 1.0);
        assert!((one.sobolev_norm(&g, 0).unwrap() - 1.0).abs() < 1e-12);
        let zf = VolumeField::from_fn(&g, |_, _, z| z);
        // ||z||_0^2 = 1/3, ||dz z||_0^2 = 1 on the unit-volume slab.
        let expect = (1.0 / 3.0 + 1.0_f64).sqrt();
        assert!((zf.sobolev_norm(&g, 1).unwrap() - expect).abs() < 1e-10);
        assert!(VolumeField::zeros(&g).sobolev_norm(&g, 2).unwrap() == 0.0);
        assert!(zf.sobolev_norm(&g, 5).is_err());
    }

    #[test]
    fn vertical_derivative_exact_on_polynomials() {
        let g = grid(8, 9);
        let f = VolumeField::from_fn(&g, |x, _, z| {
            (std::f64::consts::TAU * x).cos() * (z.powi(4) - z)
        });
        let dzf = f.dz(&g);
        let expect = VolumeField::from_fn(&g, |x, _, z| {
            (std::f64::consts::TAU * x).cos() * (4.0 * z.powi(3) - 1.0)
        });
        let err = dzf.sub(&expect).max_abs_nodal(&g);
        assert!(err < 1e-10, "dz error {err}");
    }

    #[test]
    fn poisson_extension_of_single_mode() {
        let g = grid(16, 17);
        let f = SurfaceField::cosine_mode(&g, 1, 0, 1.0, 0.0);
        let ext = f.poisson_extend(&g);
        let expect = VolumeField::from_fn(&g, |x, _, z| {
            (std::f64::consts::TAU * x).cos() * (std::f64::consts::TAU * z).exp()
        });
        let err = ext.sub(&expect).max_abs_nodal(&g);
        assert!(err < 1e-12, "poisson error {err}");
        // Constant extends constantly.
        let c = SurfaceField::from_fn(&g, |_, _| 2.5);
        let cext = c.poisson_extend(&g);
        let cerr = cext
            .sub(&VolumeField::from_fn(&g, |_, _, _| 2.5))
            .max_abs_nodal(&g);
        assert!(cerr < 1e-13);
    }

    #[test]
    fn poisson_extension_is_linear_in_coefficients() {
        let g = grid(8, 9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        use rand::SeedableRng;
        let f1 = SurfaceField::random_band_limited(&g, &mut rng, 2, 1.0);
        let f2 = SurfaceField::random_band_limited(&g, &mut rng, 2, 1.0);
        let lhs = f1.add_scaled(-3.25, &f2).poisson_extend(&g);
        let rhs = f1.poisson_extend(&g).add_scaled(-3.25, &f2.poisson_extend(&g));
        // Mode-wise multiplication commutes with linear combination up to
        // one rounding of the combination itself.
        let diff = (&lhs.coeffs - &rhs.coeffs)
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.norm()));
        assert!(diff < 1e-14, "extension must be linear per mode, diff {diff}");
    }

    #[test]
    fn dealiased_product_of_band_limited_fields_is_exact() {
        let g = grid(32, 5);
        let tau = std::f64::consts::TAU;
        let a = SurfaceField::from_fn(&g, |x, _| (tau * x).cos());
        let b = SurfaceField::from_fn(&g, |x, _| (2.0 * tau * x).sin());
        let prod = a.mul_dealiased(&b, &g);
        // cos(t) sin(2t) = (sin(3t) + sin(t)) / 2, all modes inside the mask
        let expect =
            SurfaceField::from_fn(&g, |x, _| 0.5 * ((3.0 * tau * x).sin() + (tau * x).sin()));
        let diff = prod
            .coeffs
            .iter()
            .zip(expect.coeffs.iter())
            .fold(0.0_f64, |m, (p, e)| m.max((p - e).norm()));
        assert!(diff < 1e-13);
    }

    #[test]
    fn project_mean_examples() {
        let g = grid(8, 5);
        let c = SurfaceField::from_fn(&g, |_, _| 3.0);
        assert!(c.project_mean().max_abs_nodal(&g) < 1e-13);
        let f = SurfaceField::from_fn(&g, |x, _| 1.0 + (std::f64::consts::TAU * x).cos());
        let p = f.project_mean();
        let expect = SurfaceField::from_fn(&g, |x, _| (std::f64::consts::TAU * x).cos());
        assert!(p.sub(&expect).max_abs_nodal(&g) < 1e-13);
    }
}
