//! Covariant derivatives, curvature, constraint residuals, gauge
//! transformations, and the Coulomb projection.
//!
//! Conventions, used verbatim everywhere in this crate:
//!
//! * covariant derivative `D_j f = d_j f + i A_j f`,
//! * curvature `F_12 = d_1 A_2 - d_2 A_1`,
//! * gauge freedom `psi -> exp(-i theta) psi`, `A -> A + d theta`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{
    l2_norm, l2_norm_c, map_into, partial, partial_decay, zip_map, Axis, ComplexField, RealField,
};
use crate::grid::{Grid2D, StencilOrder};
use crate::poisson::solve_composed_wide;

/// Sign of the target curvature: +1 for the sphere, -1 for the hyperbolic
/// plane.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Mu {
    Sphere,
    Hyperbolic,
}

impl Mu {
    pub fn sign(self) -> f64 {
        match self {
            Mu::Sphere => 1.0,
            Mu::Hyperbolic => -1.0,
        }
    }

    pub fn from_sign(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Mu::Sphere),
            -1 => Ok(Mu::Hyperbolic),
            other => Err(Error::validation(format!("mu must be +1 or -1, got {other}"))),
        }
    }
}

impl std::str::FromStr for Mu {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+1" | "1" | "sphere" => Ok(Mu::Sphere),
            "-1" | "hyperbolic" => Ok(Mu::Hyperbolic),
            other => Err(Error::validation(format!("unknown mu `{other}`"))),
        }
    }
}

/// Derivative fields and connection of a gauged map state.
///
/// `a0` is representationally optional: `None` means temporal gauge,
/// `A_0 == 0`, which is the only gauge the evolutions run in.
#[derive(Clone, Debug)]
pub struct GaugedState {
    pub grid: Grid2D,
    pub mu: Mu,
    pub psi1: ComplexField,
    pub psi2: ComplexField,
    pub a1: RealField,
    pub a2: RealField,
    pub a0: Option<RealField>,
    pub t: f64,
}

impl GaugedState {
    pub fn zeros(grid: Grid2D, mu: Mu) -> Self {
        GaugedState {
            grid,
            mu,
            psi1: ComplexField::zeros(grid),
            psi2: ComplexField::zeros(grid),
            a1: RealField::zeros(grid),
            a2: RealField::zeros(grid),
            a0: None,
            t: 0.0,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.psi1.all_finite()
            && self.psi2.all_finite()
            && self.a1.all_finite()
            && self.a2.all_finite()
            && self.a0.as_ref().map_or(true, |a| a.all_finite())
    }

    /// Connection component along the given axis.
    pub fn a(&self, axis: Axis) -> &RealField {
        match axis {
            Axis::X1 => &self.a1,
            Axis::X2 => &self.a2,
        }
    }
}

/// Residuals of the two constraints that distinguish gauge data coming from
/// a map: `Theta = D_1 psi_2 - D_2 psi_1` and
/// `Psi = F_12 - mu Im(conj(psi_2) psi_1)`.
#[derive(Clone, Debug)]
pub struct ConstraintResiduals {
    pub theta: ComplexField,
    pub psi_curv: RealField,
    pub theta_norm: f64,
    pub psi_norm: f64,
}

/// `D_axis f = d_axis f + i A_axis f` for an arbitrary complex field and
/// connection component.
pub fn cov_derivative(
    f: &ComplexField,
    a: &RealField,
    axis: Axis,
    order: StencilOrder,
) -> ComplexField {
    let df = partial_decay(f, axis, order);
    let mut out = df;
    out.data_mut()
        .iter_mut()
        .zip(f.data().iter().zip(a.data().iter()))
        .for_each(|(o, (fv, av))| *o += Complex64::new(0.0, *av) * fv);
    out
}

/// Covariant derivative with the state's own connection.
pub fn covariant_derivative(
    s: &GaugedState,
    axis: Axis,
    f: &ComplexField,
    order: StencilOrder,
) -> ComplexField {
    cov_derivative(f, s.a(axis), axis, order)
}

/// `F_12 = d_1 A_2 - d_2 A_1`.
pub fn curvature_f12(s: &GaugedState, order: StencilOrder) -> RealField {
    curvature_of(&s.a1, &s.a2, order)
}

pub fn curvature_of(a1: &RealField, a2: &RealField, order: StencilOrder) -> RealField {
    zip_map(
        &partial_decay(a2, Axis::X1, order),
        &partial_decay(a1, Axis::X2, order),
        |p, q| p - q,
    )
}

/// Both constraint residual fields and their L2 norms.
pub fn constraint_residuals(s: &GaugedState, order: StencilOrder) -> ConstraintResiduals {
    let d1psi2 = covariant_derivative(s, Axis::X1, &s.psi2, order);
    let d2psi1 = covariant_derivative(s, Axis::X2, &s.psi1, order);
    let theta = zip_map(&d1psi2, &d2psi1, |a, b| a - b);

    let f12 = curvature_f12(s, order);
    let mu = s.mu.sign();
    let im = zip_map(&s.psi2, &s.psi1, |p2, p1| (p2.conj() * p1).im);
    let psi_curv = zip_map(&f12, &im, move |f, m| f - mu * m);

    ConstraintResiduals {
        theta_norm: l2_norm_c(&theta),
        psi_norm: l2_norm(&psi_curv),
        theta,
        psi_curv,
    }
}

/// Largest |theta| within `rings` cells of the boundary.
pub fn boundary_magnitude(theta: &RealField, rings: usize) -> f64 {
    let n = theta.grid().n();
    let mut m = 0.0f64;
    for iy in 0..n {
        for ix in 0..n {
            if ix < rings || iy < rings || ix >= n - rings || iy >= n - rings {
                m = m.max(theta.at(ix, iy).abs());
            }
        }
    }
    m
}

/// `psi_k -> exp(-i theta) psi_k`, `A_k -> A_k + d_k theta` with a
/// time-independent rotation. Warns (but proceeds) when `theta` is not
/// compactly supported inside the grid.
pub fn gauge_transform(s: &GaugedState, theta: &RealField, order: StencilOrder) -> GaugedState {
    let support = boundary_magnitude(theta, 2);
    if support > 1e-12 {
        eprintln!(
            "warning: gauge rotation is not compactly supported (boundary magnitude {support:.3e}); \
             gauge invariants may pick up boundary error"
        );
    }
    let phase = map_into(theta, |t| Complex64::from_polar(1.0, -t));
    GaugedState {
        grid: s.grid,
        mu: s.mu,
        psi1: zip_map(&phase, &s.psi1, |p, v| p * v),
        psi2: zip_map(&phase, &s.psi2, |p, v| p * v),
        a1: zip_map(&s.a1, &partial_decay(theta, Axis::X1, order), |a, d| a + d),
        a2: zip_map(&s.a2, &partial_decay(theta, Axis::X2, order), |a, d| a + d),
        a0: s.a0.clone(),
        t: s.t,
    }
}

/// Divergence of the connection, with the same derivative the rest of the
/// calculus uses.
pub fn divergence_a(s: &GaugedState, order: StencilOrder) -> RealField {
    zip_map(
        &partial_decay(&s.a1, Axis::X1, order),
        &partial_decay(&s.a2, Axis::X2, order),
        |a, b| a + b,
    )
}

/// Ghost-closure divergence: the flavor the Coulomb projection is defined
/// against (its gradient/divergence pair is exactly adjoint, making the
/// projected divergence vanish to solver tolerance).
pub fn divergence_a_ghost(s: &GaugedState) -> RealField {
    zip_map(
        &partial(&s.a1, Axis::X1, StencilOrder::Two),
        &partial(&s.a2, Axis::X2, StencilOrder::Two),
        |a, b| a + b,
    )
}

/// Gauge-rotate into the discrete Coulomb gauge: solve
/// `(d_1 d_1 + d_2 d_2) theta = -div A` with ghost closures everywhere, so
/// the output divergence (same closures) is zero to solver tolerance
/// rather than to O(h^2). For connections that have not decayed at the
/// truncation boundary this gauge develops a boundary layer; that is a
/// property of the truncated Coulomb condition, not of the solver.
pub fn coulomb_project(s: &GaugedState) -> Result<GaugedState> {
    let div = divergence_a_ghost(s);
    let theta = solve_composed_wide(&div.scale(-1.0))?;
    let phase = map_into(&theta, |t| Complex64::from_polar(1.0, -t));
    Ok(GaugedState {
        grid: s.grid,
        mu: s.mu,
        psi1: zip_map(&phase, &s.psi1, |p, v| p * v),
        psi2: zip_map(&phase, &s.psi2, |p, v| p * v),
        a1: zip_map(&s.a1, &partial(&theta, Axis::X1, StencilOrder::Two), |a, d| a + d),
        a2: zip_map(&s.a2, &partial(&theta, Axis::X2, StencilOrder::Two), |a, d| a + d),
        a0: s.a0.clone(),
        t: s.t,
    })
}

/// Relative L2 norm of the ghost-closure `div A` against the connection
/// magnitude; the quantity the Coulomb postcondition bounds.
pub fn relative_divergence(s: &GaugedState) -> f64 {
    let div = divergence_a_ghost(s);
    let scale = (l2_norm(&s.a1).powi(2) + l2_norm(&s.a2).powi(2)).sqrt();
    if scale == 0.0 {
        l2_norm(&div)
    } else {
        l2_norm(&div) / scale
    }
}
