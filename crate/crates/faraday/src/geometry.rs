//! Geometry of the flattening map.
//!
//! Everything derived from the surface function `eta`: the harmonic
//! extension `eta_hat = P eta`, the flattening map
//! `Phi(x) = (x1, x2, x3 + eta_hat (1 + x3/b))`, the matrix
//!
//! ```text
//!         | 1  0  -a1 K |
//!     A = | 0  1  -a2 K |,    a_i = d_i eta_hat * btilde,
//!         | 0  0     K  |     J = 1 + eta_hat/b + d3 eta_hat * btilde,  K = 1/J,
//! ```
//!
//! the non-unit normal `N = (-d1 eta, -d2 eta, 1)`, the mean-curvature
//! operator, and the `A`-twisted differential operators. Products are
//! formed nodal-wise (with K held at its exact nodal values) and the
//! results dealiased, so `K J = 1` holds at every node to rounding.

use crate::error::{Error, Result};
use crate::field::{SurfaceField, SurfaceVector, SymTensorField, VolumeField, VolumeVector};
use crate::grid::Grid;
use ndarray::Array3;

/// Default guard on the Jacobian: construction fails when `min J` falls to
/// or below this floor.
pub const JACOBIAN_FLOOR: f64 = 0.1;

/// Snapshot of all flattening-derived quantities for one `eta`.
#[derive(Debug, Clone)]
pub struct GeometryState {
    pub eta: SurfaceField,
    /// Harmonic extension `P eta`.
    pub eta_hat: VolumeField,
    /// `a1 = d1 eta_hat * btilde`, spectral-exact (btilde is polynomial).
    pub a1: VolumeField,
    pub a2: VolumeField,
    /// Jacobian `J`, spectral-exact (linear in eta_hat).
    pub j: VolumeField,
    /// `K = 1/J` as a dealiased spectral field.
    pub k_field: VolumeField,
    /// Non-unit normal `(-d1 eta, -d2 eta, 1)`.
    pub normal: SurfaceVector,
    /// `P(dt eta)` when a time derivative was supplied.
    pub dt_eta_hat: Option<VolumeField>,
    pub dt_eta: Option<SurfaceField>,
    /// Exact nodal values used by the twisted operators.
    pub j_nodal: Array3<f64>,
    pub k_nodal: Array3<f64>,
    pub a1_nodal: Array3<f64>,
    pub a2_nodal: Array3<f64>,
    pub min_j: f64,
}

/// Coefficient view of a matrix of the shape
/// `{alpha, 0, c1; 0, alpha, c2; 0, 0, c3}` used for `A`, `I - A`, `A - I`
/// and `dt A`. The `c_i` are nodal coefficient fields.
pub struct Twist {
    pub alpha: f64,
    pub c: [Array3<f64>; 3],
}

/// Split of the mean-curvature operator used by the boundary forcing.
#[derive(Debug, Clone)]
pub struct CurvatureSplit {
    /// `H(eta) = div(grad eta / sqrt(1 + |grad eta|^2))`, dealiased.
    pub full: SurfaceField,
    /// Linear part `Delta eta` (spectral-exact).
    pub linear: SurfaceField,
    /// `H(eta) - Delta eta` (cubic-order remainder).
    pub remainder: SurfaceField,
}

/// Build the geometry snapshot for `eta` (mean-zero, real), with the
/// default Jacobian floor. Supplying `deta_dt` also populates the
/// time-derivative extension needed by forcing terms.
pub fn build_geometry(
    eta: &SurfaceField,
    deta_dt: Option<&SurfaceField>,
    grid: &Grid,
    b: f64,
) -> Result<GeometryState> {
    build_geometry_with_floor(eta, deta_dt, grid, b, JACOBIAN_FLOOR)
}

pub fn build_geometry_with_floor(
    eta: &SurfaceField,
    deta_dt: Option<&SurfaceField>,
    grid: &Grid,
    b: f64,
    floor: f64,
) -> Result<GeometryState> {
    if eta.mean().abs() > 1e-10 {
        return Err(Error::Contract(format!(
            "eta must be mean-zero, got mean {:.3e}",
            eta.mean()
        )));
    }
    let eta_hat = eta.poisson_extend(grid);
    let btilde = |z: f64| 1.0 + z / b;
    let a1 = eta_hat.dx(grid, 0).mul_z_profile(grid, btilde);
    let a2 = eta_hat.dx(grid, 1).mul_z_profile(grid, btilde);
    let mut j = eta_hat
        .scale(1.0 / b)
        .add(&eta_hat.dz(grid).mul_z_profile(grid, btilde));
    for l in 0..grid.nz {
        j.coeffs[[0, 0, l]] += 1.0;
    }

    let j_nodal = j.to_nodal(grid);
    let min_j = j_nodal.iter().copied().fold(f64::INFINITY, f64::min);
    if min_j <= floor {
        return Err(Error::DegenerateFlattening { min_j, floor });
    }
    let k_nodal = j_nodal.mapv(|v| 1.0 / v);
    let k_field = VolumeField::from_nodal_dealiased(grid, &k_nodal);

    let normal = [
        eta.dx(grid, 0).scale(-1.0),
        eta.dx(grid, 1).scale(-1.0),
        {
            let mut one = SurfaceField::zeros(grid);
            one.coeffs[[0, 0]] = 1.0.into();
            one
        },
    ];

    let (dt_eta, dt_eta_hat) = match deta_dt {
        Some(d) => (Some(d.clone()), Some(d.poisson_extend(grid))),
        None => (None, None),
    };

    Ok(GeometryState {
        eta: eta.clone(),
        a1_nodal: a1.to_nodal(grid),
        a2_nodal: a2.to_nodal(grid),
        a1,
        a2,
        k_field,
        normal,
        dt_eta_hat,
        dt_eta,
        j_nodal,
        k_nodal,
        min_j,
        j,
        eta_hat,
    })
}

impl GeometryState {
    /// The matrix `A` itself.
    pub fn twist_a(&self) -> Twist {
        Twist {
            alpha: 1.0,
            c: [
                -&(&self.a1_nodal * &self.k_nodal),
                -&(&self.a2_nodal * &self.k_nodal),
                self.k_nodal.clone(),
            ],
        }
    }

    /// `I - A`.
    pub fn twist_i_minus_a(&self) -> Twist {
        Twist {
            alpha: 0.0,
            c: [
                &self.a1_nodal * &self.k_nodal,
                &self.a2_nodal * &self.k_nodal,
                self.k_nodal.mapv(|k| 1.0 - k),
            ],
        }
    }

    /// `A - I`.
    pub fn twist_a_minus_i(&self) -> Twist {
        Twist {
            alpha: 0.0,
            c: [
                -&(&self.a1_nodal * &self.k_nodal),
                -&(&self.a2_nodal * &self.k_nodal),
                self.k_nodal.mapv(|k| k - 1.0),
            ],
        }
    }

    /// `dt A` built from the supplied `dt eta`. Errors if the geometry was
    /// constructed without a time derivative.
    pub fn twist_dt_a(&self, grid: &Grid, b: f64) -> Result<Twist> {
        let dt_eta_hat = self.dt_eta_hat.as_ref().ok_or_else(|| {
            Error::Contract("geometry has no time derivative of eta; build with deta_dt".into())
        })?;
        let btilde = |z: f64| 1.0 + z / b;
        let dt_a1 = dt_eta_hat
            .dx(grid, 0)
            .mul_z_profile(grid, btilde)
            .to_nodal(grid);
        let dt_a2 = dt_eta_hat
            .dx(grid, 1)
            .mul_z_profile(grid, btilde)
            .to_nodal(grid);
        let dt_j = self.dt_j_nodal(grid, b)?;
        // dt K = -K^2 dt J;  dt(a_i K) = dt a_i K + a_i dt K.
        let dt_k = -&(&(&self.k_nodal * &self.k_nodal) * &dt_j);
        let c1 = -&(&(&dt_a1 * &self.k_nodal) + &(&self.a1_nodal * &dt_k));
        let c2 = -&(&(&dt_a2 * &self.k_nodal) + &(&self.a2_nodal * &dt_k));
        Ok(Twist {
            alpha: 0.0,
            c: [c1, c2, dt_k],
        })
    }

    /// `dt J` as a nodal field (linear in `dt eta_hat`).
    pub fn dt_j_nodal(&self, grid: &Grid, b: f64) -> Result<Array3<f64>> {
        let dt_eta_hat = self.dt_eta_hat.as_ref().ok_or_else(|| {
            Error::Contract("geometry has no time derivative of eta; build with deta_dt".into())
        })?;
        let btilde = |z: f64| 1.0 + z / b;
        Ok(dt_eta_hat
            .scale(1.0 / b)
            .add(&dt_eta_hat.dz(grid).mul_z_profile(grid, btilde))
            .to_nodal(grid))
    }

    /// Residual of the Piola identity `d_k (J A_ik) = 0`.
    ///
    /// The entries of `J A` are formed nodal-wise from the exact nodal
    /// factors (the same convention every twisted operator uses) and the
    /// results dealiased, so the residual isolates the differentiation
    /// error of the pipeline: zero in the continuum, rounding-level for
    /// resolved geometry.
    pub fn check_piola(&self, grid: &Grid) -> f64 {
        // J A = {J, 0, -a1 K J; 0, J, -a2 K J; 0, 0, K J}.
        let kj = &self.k_nodal * &self.j_nodal;
        let ja13 = VolumeField::from_nodal_dealiased(grid, &(-&(&self.a1_nodal * &kj)));
        let ja23 = VolumeField::from_nodal_dealiased(grid, &(-&(&self.a2_nodal * &kj)));
        let ja33 = VolumeField::from_nodal_dealiased(grid, &kj);
        let r1 = self.j.dx(grid, 0).add(&ja13.dz(grid));
        let r2 = self.j.dx(grid, 1).add(&ja23.dz(grid));
        let r3 = ja33.dz(grid);
        r1.max_abs_nodal(grid)
            .max(r2.max_abs_nodal(grid))
            .max(r3.max_abs_nodal(grid))
    }

    /// Variant of the Piola residual that routes every factor through
    /// truncated spectral intermediates (`K` dealiased, pairwise dealiased
    /// products). Unlike [`GeometryState::check_piola`] this picks up the
    /// horizontal truncation tail of `1/J`, so it decays spectrally under
    /// horizontal refinement and serves as a resolution meter for the
    /// product pipeline.
    pub fn check_piola_cascade(&self, grid: &Grid) -> f64 {
        let ja13 = self
            .j
            .mul_dealiased(&self.a1.scale(-1.0).mul_dealiased(&self.k_field, grid), grid);
        let ja23 = self
            .j
            .mul_dealiased(&self.a2.scale(-1.0).mul_dealiased(&self.k_field, grid), grid);
        let ja33 = self.j.mul_dealiased(&self.k_field, grid);
        let r1 = self.j.dx(grid, 0).add(&ja13.dz(grid));
        let r2 = self.j.dx(grid, 1).add(&ja23.dz(grid));
        let r3 = ja33.dz(grid);
        r1.max_abs_nodal(grid)
            .max(r2.max_abs_nodal(grid))
            .max(r3.max_abs_nodal(grid))
    }
}

impl Twist {
    /// `(grad_B f)_i = B_ij d_j f`, nodally formed, dealiased.
    pub fn grad(&self, f: &VolumeField, grid: &Grid) -> VolumeVector {
        let d1 = f.dx(grid, 0).to_nodal(grid);
        let d2 = f.dx(grid, 1).to_nodal(grid);
        let d3 = f.dz(grid).to_nodal(grid);
        let g1 = d1.mapv(|v| self.alpha * v) + &(&self.c[0] * &d3);
        let g2 = d2.mapv(|v| self.alpha * v) + &(&self.c[1] * &d3);
        let g3 = &self.c[2] * &d3;
        [
            VolumeField::from_nodal_dealiased(grid, &g1),
            VolumeField::from_nodal_dealiased(grid, &g2),
            VolumeField::from_nodal_dealiased(grid, &g3),
        ]
    }

    /// `div_B X = B_ij d_j X_i`.
    pub fn div_vec(&self, x: &VolumeVector, grid: &Grid) -> VolumeField {
        let h = x[0].dx(grid, 0).add(&x[1].dx(grid, 1)).to_nodal(grid);
        let d3 = [
            x[0].dz(grid).to_nodal(grid),
            x[1].dz(grid).to_nodal(grid),
            x[2].dz(grid).to_nodal(grid),
        ];
        let out = h.mapv(|v| self.alpha * v)
            + &(&self.c[0] * &d3[0])
            + &(&self.c[1] * &d3[1])
            + &(&self.c[2] * &d3[2]);
        VolumeField::from_nodal_dealiased(grid, &out)
    }

    /// Symmetric twisted gradient `(D_B u)_ij = B_ik d_k u_j + B_jk d_k u_i`.
    pub fn sym_grad(&self, u: &VolumeVector, grid: &Grid) -> SymTensorField {
        // g[j][i] = (grad_B u_j)_i, nodal
        let mut g: Vec<[Array3<f64>; 3]> = Vec::with_capacity(3);
        for uj in u.iter() {
            let d1 = uj.dx(grid, 0).to_nodal(grid);
            let d2 = uj.dx(grid, 1).to_nodal(grid);
            let d3 = uj.dz(grid).to_nodal(grid);
            g.push([
                d1.mapv(|v| self.alpha * v) + &(&self.c[0] * &d3),
                d2.mapv(|v| self.alpha * v) + &(&self.c[1] * &d3),
                &self.c[2] * &d3,
            ]);
        }
        let pairs = crate::field::SYM_PAIRS;
        let comps = pairs.map(|(i, j)| {
            let sym = &g[j][i] + &g[i][j];
            VolumeField::from_nodal_dealiased(grid, &sym)
        });
        SymTensorField { comps }
    }

    /// `(div_B T)_i = B_jk d_k T_ij` for a symmetric tensor `T`.
    pub fn div_tensor(&self, t: &SymTensorField, grid: &Grid) -> VolumeVector {
        let mut out: Vec<VolumeField> = Vec::with_capacity(3);
        for i in 0..3 {
            let ti = [t.component(i, 0), t.component(i, 1), t.component(i, 2)];
            let h = ti[0].dx(grid, 0).add(&ti[1].dx(grid, 1)).to_nodal(grid);
            let acc = h.mapv(|v| self.alpha * v)
                + &(&self.c[0] * &ti[0].dz(grid).to_nodal(grid))
                + &(&self.c[1] * &ti[1].dz(grid).to_nodal(grid))
                + &(&self.c[2] * &ti[2].dz(grid).to_nodal(grid));
            out.push(VolumeField::from_nodal_dealiased(grid, &acc));
        }
        out.try_into().unwrap()
    }
}

/// Flat (untwisted) operators, the `eta = 0` specialization; used by the
/// constant-coefficient form and the forcing terms.
pub mod flat {
    use super::*;

    pub fn grad(f: &VolumeField, grid: &Grid) -> VolumeVector {
        [f.dx(grid, 0), f.dx(grid, 1), f.dz(grid)]
    }

    pub fn div_vec(x: &VolumeVector, grid: &Grid) -> VolumeField {
        x[0].dx(grid, 0).add(&x[1].dx(grid, 1)).add(&x[2].dz(grid))
    }

    /// `(D u)_ij = d_i u_j + d_j u_i`.
    pub fn sym_grad(u: &VolumeVector, grid: &Grid) -> SymTensorField {
        let d = |j: usize, i: usize| u[j].deriv(grid, i);
        let comps = crate::field::SYM_PAIRS.map(|(i, j)| d(j, i).add(&d(i, j)));
        SymTensorField { comps }
    }

    /// Flat stress `S(u, p) = p I - mu D u`.
    pub fn stress(u: &VolumeVector, p: &VolumeField, mu: f64, grid: &Grid) -> SymTensorField {
        let mut s = sym_grad(u, grid);
        for c in s.comps.iter_mut() {
            *c = c.scale(-mu);
        }
        for d in 0..3 {
            s.comps[d] = s.comps[d].add(p);
        }
        s
    }

    pub fn div_tensor(t: &SymTensorField, grid: &Grid) -> VolumeVector {
        let row = |i: usize| {
            t.component(i, 0)
                .dx(grid, 0)
                .add(&t.component(i, 1).dx(grid, 1))
                .add(&t.component(i, 2).dz(grid))
        };
        [row(0), row(1), row(2)]
    }
}

/// Twisted stress `S_A(u, p) = p I - mu D_A u`.
pub fn stress_a(
    geom: &GeometryState,
    u: &VolumeVector,
    p: &VolumeField,
    mu: f64,
    grid: &Grid,
) -> SymTensorField {
    let mut s = geom.twist_a().sym_grad(u, grid);
    for c in s.comps.iter_mut() {
        *c = c.scale(-mu);
    }
    for d in 0..3 {
        s.comps[d] = s.comps[d].add(p);
    }
    s
}

/// Mean curvature `H(eta)` split into its linearization and remainder.
pub fn mean_curvature(eta: &SurfaceField, grid: &Grid) -> CurvatureSplit {
    let d1 = eta.dx(grid, 0);
    let d2 = eta.dx(grid, 1);
    let g1 = d1.to_nodal(grid);
    let g2 = d2.to_nodal(grid);
    let denom = ndarray::Zip::from(&g1)
        .and(&g2)
        .map_collect(|&a, &b| 1.0 / (1.0 + a * a + b * b).sqrt());
    let mut q1 = SurfaceField::from_nodal(grid, &(&g1 * &denom));
    let mut q2 = SurfaceField::from_nodal(grid, &(&g2 * &denom));
    grid.apply_dealias_2d(&mut q1.coeffs);
    grid.apply_dealias_2d(&mut q2.coeffs);
    let full = q1.dx(grid, 0).add(&q2.dx(grid, 1));
    let linear = eta.laplacian(grid);
    let remainder = full.sub(&linear);
    CurvatureSplit {
        full,
        linear,
        remainder,
    }
}
