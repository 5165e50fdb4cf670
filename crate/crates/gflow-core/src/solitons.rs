//! Closed-form soliton fixtures and self-duality residuals.
//!
//! Fixtures are generated from closed forms, never from files, so they are
//! resolution-independent and auditable. The degree-1 sphere soliton is the
//! "S1" fixture used throughout the test suite.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{l2_norm_c, linf_norm, zip_map, Axis, ComplexField, RealField};
use crate::flows::CssState;
use crate::gauge::{constraint_residuals, covariant_derivative, curvature_f12, GaugedState, Mu};
use crate::grid::{Grid2D, StencilOrder};

/// Which self-dual branch `(D_1 +/- i D_2)` a residual is checked against.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SelfDualSign {
    Plus,
    Minus,
}

impl SelfDualSign {
    fn factor(self) -> Complex64 {
        match self {
            SelfDualSign::Plus => Complex64::new(0.0, 1.0),
            SelfDualSign::Minus => Complex64::new(0.0, -1.0),
        }
    }
}

/// Degree-`n` self-dual soliton data for the sphere target, sampled from the
/// closed forms for the map `w = z^n` in conformal coordinates:
///
/// `psi_j = lambda(w) d_j w`, `A_j = -2 Im(conj(w) d_j w) / (1 + |w|^2)`,
/// `lambda = 2 / (1 + |w|^2)`.
///
/// Analytic facts: energy `4 pi n`, charge `-2n`, `psi_1 = -i psi_2`.
/// `n = 0` yields the zero state. Finite-energy data of this kind do not
/// exist for the hyperbolic target, so `mu = -1` is rejected.
pub fn self_dual_data(grid: Grid2D, n: u32, mu: Mu) -> Result<GaugedState> {
    if mu == Mu::Hyperbolic {
        return Err(Error::validation(
            "self-dual soliton data exist only for the sphere target (mu = +1); \
             finite-energy harmonic maps from the plane to the hyperbolic plane \
             are all constant",
        ));
    }
    let mut s = GaugedState::zeros(grid, mu);
    if n == 0 {
        return Ok(s);
    }
    let nf = n as f64;

    s.psi1 = ComplexField::from_fn(grid, |x, y| {
        let z = Complex64::new(x, y);
        let w = z.powu(n);
        let lambda = 2.0 / (1.0 + w.norm_sqr());
        z.powu(n - 1) * (nf * lambda)
    });
    s.psi2 = s.psi1.map(|v| Complex64::new(0.0, 1.0) * v);

    let a = |x: f64, y: f64, axis: Axis| {
        let z = Complex64::new(x, y);
        let w = z.powu(n);
        let dw = match axis {
            Axis::X1 => z.powu(n - 1) * nf,
            Axis::X2 => z.powu(n - 1) * Complex64::new(0.0, nf),
        };
        -2.0 * (w.conj() * dw).im / (1.0 + w.norm_sqr())
    };
    s.a1 = RealField::from_fn(grid, |x, y| a(x, y, Axis::X1));
    s.a2 = RealField::from_fn(grid, |x, y| a(x, y, Axis::X2));
    Ok(s)
}

/// Residual norms of the self-dual system on the chosen branch:
/// `r_j = ||(D_1 +/- i D_2) psi_j||_2` plus the relation residual
/// `||psi_1 + i psi_2||_2`.
#[derive(Clone, Copy, Debug)]
pub struct SelfDualResidual {
    pub r1: f64,
    pub r2: f64,
    pub relation: f64,
}

pub fn self_duality_residual(
    s: &GaugedState,
    sign: SelfDualSign,
    order: StencilOrder,
) -> SelfDualResidual {
    let fac = sign.factor();
    let op = |f: &ComplexField| {
        let d1 = covariant_derivative(s, Axis::X1, f, order);
        let d2 = covariant_derivative(s, Axis::X2, f, order);
        zip_map(&d1, &d2, move |a, b| a + fac * b)
    };
    let relation = zip_map(&s.psi1, &s.psi2, |a, b| a + Complex64::new(0.0, 1.0) * b);
    SelfDualResidual {
        r1: l2_norm_c(&op(&s.psi1)),
        r2: l2_norm_c(&op(&s.psi2)),
        relation: l2_norm_c(&relation),
    }
}

/// Self-duality conclusions only apply when the curvature actually shows up
/// above the constraint noise floor.
pub fn f12_dominates_residuals(s: &GaugedState, order: StencilOrder) -> bool {
    let f12 = curvature_f12(s, order);
    let res = constraint_residuals(s, order);
    let floor = crate::field::linf_norm_c(&res.theta).max(linf_norm(&res.psi_curv));
    linf_norm(&f12) >= 10.0 * floor
}

/// The N = 1 self-dual Chern-Simons vortex ("JP" fixture):
///
/// `phi = 2 sqrt(2) / (1 + r^2)` (real), `A_1 = 2 x_2 / (1 + r^2)`,
/// `A_2 = -2 x_1 / (1 + r^2)`, `A_0 = 4 / (1 + r^2)^2`.
///
/// The amplitude is pinned by the curvature constraint
/// `F_12 = -|phi|^2 / 2` and the profile satisfies `(D_1 + i D_2) phi = 0`.
/// With this normalization of the action the coupling at which the state is
/// a genuine zero-energy stationary solution is `g = 1`, and that is the
/// coupling the fixture carries.
pub fn jackiw_pi_data(grid: Grid2D, vortex_number: u32) -> Result<CssState> {
    if vortex_number != 1 {
        return Err(Error::validation(format!(
            "only the N = 1 vortex is implemented, got N = {vortex_number}"
        )));
    }
    let amp = 2.0 * std::f64::consts::SQRT_2;
    Ok(CssState {
        grid,
        phi: ComplexField::from_fn(grid, |x, y| {
            Complex64::new(amp / (1.0 + x * x + y * y), 0.0)
        }),
        a0: RealField::from_fn(grid, |x, y| {
            let d = 1.0 + x * x + y * y;
            4.0 / (d * d)
        }),
        a1: RealField::from_fn(grid, |x, y| 2.0 * y / (1.0 + x * x + y * y)),
        a2: RealField::from_fn(grid, |x, y| -2.0 * x / (1.0 + x * x + y * y)),
        g: 1.0,
        t: 0.0,
    })
}

/// `||(D_1 +/- i D_2) phi||_2` for a Chern-Simons-Schrödinger state.
pub fn css_self_duality_residual(s: &CssState, sign: SelfDualSign, order: StencilOrder) -> f64 {
    let fac = sign.factor();
    let d1 = crate::gauge::cov_derivative(&s.phi, &s.a1, Axis::X1, order);
    let d2 = crate::gauge::cov_derivative(&s.phi, &s.a2, Axis::X2, order);
    l2_norm_c(&zip_map(&d1, &d2, move |a, b| a + fac * b))
}
