//! Discrete space-time actions and derivative checks: verifies numerically
//! that the flows are the Euler-Lagrange / gradient systems of the stated
//! functionals.
//!
//! The Euler-Lagrange pairing is the *exact transpose* of the discrete
//! action: every summation-by-parts move uses the fact that central
//! differences (dirichlet-ghosted or periodic) are exactly skew-adjoint, and
//! product-rule steps that only hold to O(h^2) are avoided by keeping
//! density gradients in `d_j |psi|^2` form. For the connection directions
//! the resulting residuals are the preliminary curvature equations, which
//! collapse to the constitutive ones only on the constraint set.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{partial_decay, zip_map, Axis, ComplexField, RealField};
use crate::flows::{rhs_gauged, CssState, System};
use crate::gauge::{cov_derivative, curvature_of, GaugedState, Mu};
use crate::grid::{Grid2D, StencilOrder};

/// A uniformly spaced, time-ordered run of gauged states.
#[derive(Clone)]
pub struct GaugedHistory {
    pub states: Vec<GaugedState>,
    pub dt: f64,
}

/// A uniformly spaced, time-ordered run of css states.
#[derive(Clone)]
pub struct CssHistory {
    pub states: Vec<CssState>,
    pub dt: f64,
}

fn check_history_len(len: usize) -> Result<()> {
    if len < 3 {
        return Err(Error::validation(format!(
            "a history needs at least 3 slices, got {len}"
        )));
    }
    Ok(())
}

fn a0_or_zero(s: &GaugedState) -> RealField {
    s.a0.clone().unwrap_or_else(|| RealField::zeros(s.grid))
}

/// Space-time quadrature: grid sum times `h^2 dt` with the same pairwise
/// reduction as the spatial integral.
fn st_quad(slices: &[RealField], dt: f64) -> f64 {
    let per: Vec<f64> = slices.iter().map(crate::field::integrate).collect();
    crate::field::pairwise_sum(&per) * dt
}

struct SchSlice {
    t1: RealField,
    t2: RealField,
    t3: RealField,
    t4: RealField,
}

fn sch_slice(hist: &GaugedHistory, n: usize, order: StencilOrder) -> SchSlice {
    let s = &hist.states[n];
    let (prev, next) = (&hist.states[n - 1], &hist.states[n + 1]);
    let dt = hist.dt;
    let a0 = a0_or_zero(s);
    let i = Complex64::new(0.0, 1.0);

    let dt_psi1 = {
        let diff = zip_map(&next.psi1, &prev.psi1, move |a, b| (a - b) / (2.0 * dt));
        zip_map(&diff, &zip_map(&a0, &s.psi1, |a, p| p * a), move |d, ap| d + i * ap)
    };
    let t1 = zip_map(&s.psi2, &dt_psi1, |p2, d| (p2.conj() * d).re);

    let d1p1 = cov_derivative(&s.psi1, &s.a1, Axis::X1, order);
    let d2p1 = cov_derivative(&s.psi1, &s.a2, Axis::X2, order);
    let d1p2 = cov_derivative(&s.psi2, &s.a1, Axis::X1, order);
    let d2p2 = cov_derivative(&s.psi2, &s.a2, Axis::X2, order);
    let t2 = zip_map(
        &zip_map(&d1p2, &d1p1, |a, b| (a.conj() * b).im),
        &zip_map(&d2p2, &d2p1, |a, b| (a.conj() * b).im),
        |x, y| -(x + y),
    );

    let f12 = curvature_of(&s.a1, &s.a2, order);
    let dens = zip_map(&s.psi1, &s.psi2, |a, b| a.norm_sqr() + b.norm_sqr());
    let t3 = zip_map(&dens, &f12, |d, f| 0.5 * d * f);

    let f0 = |aj_p: &RealField, aj_n: &RealField, aj_axis: Axis| {
        let diff = zip_map(aj_n, aj_p, move |a, b| (a - b) / (2.0 * dt));
        zip_map(&diff, &partial_decay(&a0, aj_axis, order), |d, g| d - g)
    };
    let f01 = f0(&prev.a1, &next.a1, Axis::X1);
    let f02 = f0(&prev.a2, &next.a2, Axis::X2);
    let mu = s.mu.sign();
    let t4 = {
        let a0f = zip_map(&a0, &f12, |a, f| a * f);
        let a1f = zip_map(&s.a1, &f02, |a, f| a * f);
        let a2f = zip_map(&s.a2, &f01, |a, f| a * f);
        zip_map(&zip_map(&a0f, &a1f, |x, y| x - y), &a2f, move |x, y| {
            0.5 * mu * (x + y)
        })
    };
    SchSlice { t1, t2, t3, t4 }
}

/// The Schrödinger-map action over the interior time slices of a history.
pub fn action_sch(hist: &GaugedHistory, order: StencilOrder) -> Result<f64> {
    check_history_len(hist.states.len())?;
    let m = hist.states.len();
    let slices: Vec<RealField> = (1..m - 1)
        .map(|n| {
            let s = sch_slice(hist, n, order);
            zip_map(&zip_map(&s.t1, &s.t2, |a, b| a + b), &zip_map(&s.t3, &s.t4, |a, b| a + b), |x, y| x + y)
        })
        .collect();
    Ok(st_quad(&slices, hist.dt))
}

/// The Chern-Simons-Schrödinger action over interior slices.
pub fn action_css(hist: &CssHistory, order: StencilOrder) -> Result<f64> {
    check_history_len(hist.states.len())?;
    let m = hist.states.len();
    let dt = hist.dt;
    let i = Complex64::new(0.0, 1.0);
    let slices: Vec<RealField> = (1..m - 1)
        .map(|n| {
            let s = &hist.states[n];
            let (prev, next) = (&hist.states[n - 1], &hist.states[n + 1]);
            let dt_phi = {
                let diff = zip_map(&next.phi, &prev.phi, move |a, b| (a - b) / (2.0 * dt));
                zip_map(&diff, &zip_map(&s.a0, &s.phi, |a, p| p * a), move |d, ap| d + i * ap)
            };
            let t_t = zip_map(&s.phi, &dt_phi, |p, d| (p.conj() * d).im);
            let d1 = cov_derivative(&s.phi, &s.a1, Axis::X1, order);
            let d2 = cov_derivative(&s.phi, &s.a2, Axis::X2, order);
            let grad = zip_map(&d1, &d2, |a, b| a.norm_sqr() + b.norm_sqr());
            let g = s.g;
            let quart = crate::field::map_into(&s.phi, move |p| {
                0.5 * g * p.norm_sqr() * p.norm_sqr()
            });
            let matter = zip_map(&zip_map(&t_t, &grad, |a, b| a + b), &quart, |x, q| 0.5 * (x - q));

            let f12 = curvature_of(&s.a1, &s.a2, order);
            let f0 = |aj_p: &RealField, aj_n: &RealField, axis: Axis| {
                let diff = zip_map(aj_n, aj_p, move |a, b| (a - b) / (2.0 * dt));
                zip_map(&diff, &partial_decay(&s.a0, axis, order), |d, gg| d - gg)
            };
            let f01 = f0(&prev.a1, &next.a1, Axis::X1);
            let f02 = f0(&prev.a2, &next.a2, Axis::X2);
            let cs = {
                let a0f = zip_map(&s.a0, &f12, |a, f| a * f);
                let a1f = zip_map(&s.a1, &f02, |a, f| a * f);
                let a2f = zip_map(&s.a2, &f01, |a, f| a * f);
                zip_map(&zip_map(&a0f, &a1f, |x, y| x - y), &a2f, |x, y| 0.5 * (x + y))
            };
            zip_map(&matter, &cs, |a, b| a + b)
        })
        .collect();
    Ok(st_quad(&slices, dt))
}

/// Space-time perturbation of a gauged history, one direction field per
/// state component per slice. Must be compactly supported: at least 4 cells
/// clear of the spatial boundary and one slice clear of the temporal ends.
#[derive(Clone)]
pub struct GaugedPerturbation {
    pub dpsi1: Vec<ComplexField>,
    pub dpsi2: Vec<ComplexField>,
    pub da0: Vec<RealField>,
    pub da1: Vec<RealField>,
    pub da2: Vec<RealField>,
}

#[derive(Clone)]
pub struct CssPerturbation {
    pub dphi: Vec<ComplexField>,
    pub da0: Vec<RealField>,
    pub da1: Vec<RealField>,
    pub da2: Vec<RealField>,
}

/// Which state component a generated perturbation excites.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Psi1,
    Psi2,
    A0,
    A1,
    A2,
}

const SPATIAL_MARGIN: usize = 4;

fn spatially_supported_r(f: &RealField) -> bool {
    crate::gauge::boundary_magnitude(f, SPATIAL_MARGIN) == 0.0
}

fn spatially_supported_c(f: &ComplexField) -> bool {
    let re = crate::field::map_into(f, |v| v.norm());
    spatially_supported_r(&re)
}

impl GaugedPerturbation {
    pub fn zeros(grid: Grid2D, slices: usize) -> Self {
        GaugedPerturbation {
            dpsi1: vec![ComplexField::zeros(grid); slices],
            dpsi2: vec![ComplexField::zeros(grid); slices],
            da0: vec![RealField::zeros(grid); slices],
            da1: vec![RealField::zeros(grid); slices],
            da2: vec![RealField::zeros(grid); slices],
        }
    }

    pub fn check_admissible(&self) -> Result<()> {
        let m = self.dpsi1.len();
        for (n, ((p1, p2), ((a0, a1), a2))) in self
            .dpsi1
            .iter()
            .zip(&self.dpsi2)
            .zip(self.da0.iter().zip(&self.da1).zip(&self.da2))
            .enumerate()
        {
            let temporal_ok = n != 0 && n != m - 1;
            let zero = crate::field::linf_norm_c(p1) == 0.0
                && crate::field::linf_norm_c(p2) == 0.0
                && crate::field::linf_norm(a0) == 0.0
                && crate::field::linf_norm(a1) == 0.0
                && crate::field::linf_norm(a2) == 0.0;
            if !temporal_ok && !zero {
                return Err(Error::validation(format!(
                    "perturbation touches temporal end slice {n}"
                )));
            }
            if !(spatially_supported_c(p1)
                && spatially_supported_c(p2)
                && spatially_supported_r(a0)
                && spatially_supported_r(a1)
                && spatially_supported_r(a2))
            {
                return Err(Error::validation(format!(
                    "perturbation slice {n} violates the {SPATIAL_MARGIN}-cell spatial margin"
                )));
            }
        }
        Ok(())
    }

    pub fn applied(&self, hist: &GaugedHistory, eps: f64) -> GaugedHistory {
        let states = hist
            .states
            .iter()
            .enumerate()
            .map(|(n, s)| GaugedState {
                grid: s.grid,
                mu: s.mu,
                psi1: s.psi1.add_scaled(&self.dpsi1[n], eps),
                psi2: s.psi2.add_scaled(&self.dpsi2[n], eps),
                a1: s.a1.add_scaled(&self.da1[n], eps),
                a2: s.a2.add_scaled(&self.da2[n], eps),
                a0: Some(a0_or_zero(s).add_scaled(&self.da0[n], eps)),
                t: s.t,
            })
            .collect();
        GaugedHistory {
            states,
            dt: hist.dt,
        }
    }
}

impl CssPerturbation {
    pub fn zeros(grid: Grid2D, slices: usize) -> Self {
        CssPerturbation {
            dphi: vec![ComplexField::zeros(grid); slices],
            da0: vec![RealField::zeros(grid); slices],
            da1: vec![RealField::zeros(grid); slices],
            da2: vec![RealField::zeros(grid); slices],
        }
    }

    pub fn applied(&self, hist: &CssHistory, eps: f64) -> CssHistory {
        let states = hist
            .states
            .iter()
            .enumerate()
            .map(|(n, s)| CssState {
                grid: s.grid,
                phi: s.phi.add_scaled(&self.dphi[n], eps),
                a0: s.a0.add_scaled(&self.da0[n], eps),
                a1: s.a1.add_scaled(&self.da1[n], eps),
                a2: s.a2.add_scaled(&self.da2[n], eps),
                g: s.g,
                t: s.t,
            })
            .collect();
        CssHistory {
            states,
            dt: hist.dt,
        }
    }
}

/// Finite-difference derivative of the action, the Euler-Lagrange pairing,
/// and their relative disagreement.
#[derive(Clone, Copy, Debug)]
pub struct CheckReport {
    pub fd_derivative: f64,
    pub el_pairing: f64,
    pub rel_err: f64,
}

fn rel_err(fd: f64, el: f64) -> f64 {
    (fd - el).abs() / fd.abs().max(el.abs()).max(1e-12)
}

fn field_scale_gauged(hist: &GaugedHistory) -> f64 {
    let mut m: f64 = 1.0;
    for s in &hist.states {
        m = m
            .max(crate::field::linf_norm_c(&s.psi1))
            .max(crate::field::linf_norm_c(&s.psi2))
            .max(crate::field::linf_norm(&s.a1))
            .max(crate::field::linf_norm(&s.a2));
    }
    m
}

/// EL residual fields of the Schrödinger-map action at an interior slice.
/// The connection residuals are the preliminary curvature equations.
struct SchResiduals {
    r_psi1: ComplexField,
    r_psi2: ComplexField,
    r_a0: RealField,
    r_a1: RealField,
    r_a2: RealField,
}

fn sch_residuals(hist: &GaugedHistory, n: usize, order: StencilOrder) -> SchResiduals {
    let s = &hist.states[n];
    let (prev, next) = (&hist.states[n - 1], &hist.states[n + 1]);
    let dt = hist.dt;
    let a0 = a0_or_zero(s);
    let i = Complex64::new(0.0, 1.0);

    let cov_t = |f_p: &ComplexField, f_c: &ComplexField, f_n: &ComplexField| {
        let diff = zip_map(f_n, f_p, move |a, b| (a - b) / (2.0 * dt));
        zip_map(&diff, &zip_map(&a0, f_c, |a, p| p * a), move |d, ap| d + i * ap)
    };
    let dt_psi1 = cov_t(&prev.psi1, &s.psi1, &next.psi1);
    let dt_psi2 = cov_t(&prev.psi2, &s.psi2, &next.psi2);

    let lap = |f: &ComplexField| {
        let d1 = cov_derivative(f, &s.a1, Axis::X1, order);
        let d2 = cov_derivative(f, &s.a2, Axis::X2, order);
        zip_map(
            &cov_derivative(&d1, &s.a1, Axis::X1, order),
            &cov_derivative(&d2, &s.a2, Axis::X2, order),
            |a, b| a + b,
        )
    };
    let f12 = curvature_of(&s.a1, &s.a2, order);

    let r_psi1 = zip_map(
        &zip_map(&dt_psi2, &lap(&s.psi2), move |d, l| -d + i * l),
        &zip_map(&f12, &s.psi1, |f, p| p * f),
        |a, b| a + b,
    );
    let r_psi2 = zip_map(
        &zip_map(&dt_psi1, &lap(&s.psi1), move |d, l| d - i * l),
        &zip_map(&f12, &s.psi2, |f, p| p * f),
        |a, b| a + b,
    );

    let mu = s.mu.sign();
    let r_a0 = zip_map(&f12, &zip_map(&s.psi2, &s.psi1, |p2, p1| (p2.conj() * p1).im), move |f, m| {
        mu * f - m
    });

    let f0 = |aj_p: &RealField, aj_n: &RealField, axis: Axis| {
        let diff = zip_map(aj_n, aj_p, move |a, b| (a - b) / (2.0 * dt));
        zip_map(&diff, &partial_decay(&a0, axis, order), |d, g| d - g)
    };
    let f01 = f0(&prev.a1, &next.a1, Axis::X1);
    let f02 = f0(&prev.a2, &next.a2, Axis::X2);

    let d1p1 = cov_derivative(&s.psi1, &s.a1, Axis::X1, order);
    let d2p1 = cov_derivative(&s.psi1, &s.a2, Axis::X2, order);
    let d1p2 = cov_derivative(&s.psi2, &s.a1, Axis::X1, order);
    let d2p2 = cov_derivative(&s.psi2, &s.a2, Axis::X2, order);
    let dens = zip_map(&s.psi1, &s.psi2, |a, b| a.norm_sqr() + b.norm_sqr());

    // coefficient of dA1: Re(conj(psi2) D1 psi1) - Re(conj(D1 psi2) psi1)
    //                      + d2 |psi|^2 / 2 - mu F02
    let r_a1 = {
        let bilin = zip_map(
            &zip_map(&s.psi2, &d1p1, |p, d| (p.conj() * d).re),
            &zip_map(&d1p2, &s.psi1, |d, p| (d.conj() * p).re),
            |a, b| a - b,
        );
        let grad = partial_decay(&dens, Axis::X2, order);
        zip_map(
            &zip_map(&bilin, &grad, |b, g| b + 0.5 * g),
            &f02,
            move |x, f| x - mu * f,
        )
    };
    // coefficient of dA2: Re(conj(psi2) D2 psi1) - Re(conj(D2 psi2) psi1)
    //                      - d1 |psi|^2 / 2 + mu F01
    let r_a2 = {
        let bilin = zip_map(
            &zip_map(&s.psi2, &d2p1, |p, d| (p.conj() * d).re),
            &zip_map(&d2p2, &s.psi1, |d, p| (d.conj() * p).re),
            |a, b| a - b,
        );
        let grad = partial_decay(&dens, Axis::X1, order);
        zip_map(
            &zip_map(&bilin, &grad, |b, g| b - 0.5 * g),
            &f01,
            move |x, f| x + mu * f,
        )
    };

    SchResiduals {
        r_psi1,
        r_psi2,
        r_a0,
        r_a1,
        r_a2,
    }
}

/// Compare the finite-difference derivative of the Schrödinger-map action
/// along `pert` against the Euler-Lagrange pairing.
pub fn variational_check(
    hist: &GaugedHistory,
    pert: &GaugedPerturbation,
    order: StencilOrder,
) -> Result<CheckReport> {
    check_history_len(hist.states.len())?;
    pert.check_admissible()?;
    let eps = 1e-5 * field_scale_gauged(hist);
    let plus = action_sch(&pert.applied(hist, eps), order)?;
    let minus = action_sch(&pert.applied(hist, -eps), order)?;
    let fd = (plus - minus) / (2.0 * eps);

    let m = hist.states.len();
    let slices: Vec<RealField> = (1..m - 1)
        .map(|n| {
            let r = sch_residuals(hist, n, order);
            let pair_c = |rf: &ComplexField, df: &ComplexField| {
                zip_map(rf, df, |a, b| (a.conj() * b).re)
            };
            let pair_r = |rf: &RealField, df: &RealField| zip_map(rf, df, |a, b| a * b);
            let psi_part = zip_map(
                &pair_c(&r.r_psi1, &pert.dpsi1[n]),
                &pair_c(&r.r_psi2, &pert.dpsi2[n]),
                |a, b| a + b,
            );
            let a_part = zip_map(
                &pair_r(&r.r_a0, &pert.da0[n]),
                &zip_map(
                    &pair_r(&r.r_a1, &pert.da1[n]),
                    &pair_r(&r.r_a2, &pert.da2[n]),
                    |a, b| a + b,
                ),
                |a, b| a + b,
            );
            zip_map(&psi_part, &a_part, |a, b| a + b)
        })
        .collect();
    let el = st_quad(&slices, hist.dt);
    Ok(CheckReport {
        fd_derivative: fd,
        el_pairing: el,
        rel_err: rel_err(fd, el),
    })
}

/// Same check for the Chern-Simons-Schrödinger action.
pub fn variational_check_css(
    hist: &CssHistory,
    pert: &CssPerturbation,
    order: StencilOrder,
) -> Result<CheckReport> {
    check_history_len(hist.states.len())?;
    let mut scale: f64 = 1.0;
    for s in &hist.states {
        scale = scale
            .max(crate::field::linf_norm_c(&s.phi))
            .max(crate::field::linf_norm(&s.a1))
            .max(crate::field::linf_norm(&s.a2));
    }
    let eps = 1e-5 * scale;
    let plus = action_css(&pert.applied(hist, eps), order)?;
    let minus = action_css(&pert.applied(hist, -eps), order)?;
    let fd = (plus - minus) / (2.0 * eps);

    let m = hist.states.len();
    let dt = hist.dt;
    let i = Complex64::new(0.0, 1.0);
    let slices: Vec<RealField> = (1..m - 1)
        .map(|n| {
            let s = &hist.states[n];
            let (prev, next) = (&hist.states[n - 1], &hist.states[n + 1]);
            let dt_phi = {
                let diff = zip_map(&next.phi, &prev.phi, move |a, b| (a - b) / (2.0 * dt));
                zip_map(&diff, &zip_map(&s.a0, &s.phi, |a, p| p * a), move |d, ap| d + i * ap)
            };
            let d1 = cov_derivative(&s.phi, &s.a1, Axis::X1, order);
            let d2 = cov_derivative(&s.phi, &s.a2, Axis::X2, order);
            let lap = zip_map(
                &cov_derivative(&d1, &s.a1, Axis::X1, order),
                &cov_derivative(&d2, &s.a2, Axis::X2, order),
                |a, b| a + b,
            );
            let g = s.g;
            let r_phi = zip_map(
                &zip_map(&dt_phi, &lap, move |d, l| -i * d - l),
                &crate::field::map_into(&s.phi, move |p| p * (g * p.norm_sqr())),
                |a, b| a - b,
            );
            let f12 = curvature_of(&s.a1, &s.a2, order);
            let r_a0 = zip_map(&s.phi, &f12, |p, f| 0.5 * p.norm_sqr() + f);
            let f0 = |aj_p: &RealField, aj_n: &RealField, axis: Axis| {
                let diff = zip_map(aj_n, aj_p, move |a, b| (a - b) / (2.0 * dt));
                zip_map(&diff, &partial_decay(&s.a0, axis, order), |d, gg| d - gg)
            };
            let f01 = f0(&prev.a1, &next.a1, Axis::X1);
            let f02 = f0(&prev.a2, &next.a2, Axis::X2);
            let r_a1 = zip_map(&zip_map(&s.phi, &d1, |p, d| (p.conj() * d).im), &f02, |m, f| m - f);
            let r_a2 = zip_map(&zip_map(&s.phi, &d2, |p, d| (p.conj() * d).im), &f01, |m, f| m + f);

            let pair = zip_map(
                &zip_map(&r_phi, &pert.dphi[n], |a, b| (a.conj() * b).re),
                &zip_map(
                    &zip_map(&r_a0, &pert.da0[n], |a, b| a * b),
                    &zip_map(
                        &zip_map(&r_a1, &pert.da1[n], |a, b| a * b),
                        &zip_map(&r_a2, &pert.da2[n], |a, b| a * b),
                        |a, b| a + b,
                    ),
                    |a, b| a + b,
                ),
                |a, b| a + b,
            );
            pair
        })
        .collect();
    let el = st_quad(&slices, dt);
    Ok(CheckReport {
        fd_derivative: fd,
        el_pairing: el,
        rel_err: rel_err(fd, el),
    })
}

// ---------------------------------------------------------------------------
// seeded random states, histories, perturbations
// ---------------------------------------------------------------------------

fn random_bump_sum(grid: Grid2D, rng: &mut ChaCha8Rng, amp: f64) -> RealField {
    let l = grid.half_width();
    let mut out = RealField::zeros(grid);
    for _ in 0..3 {
        let a = rng.random_range(-amp..amp);
        let cx = rng.random_range(-0.5 * l..0.5 * l);
        let cy = rng.random_range(-0.5 * l..0.5 * l);
        let w = rng.random_range(0.15 * l..0.3 * l);
        let bump = RealField::from_fn(grid, move |x, y| {
            a * (-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w)).exp()
        });
        out = out.add_scaled(&bump, 1.0);
    }
    out
}

fn random_smooth_complex(grid: Grid2D, rng: &mut ChaCha8Rng, amp: f64) -> ComplexField {
    let re = random_bump_sum(grid, rng, amp);
    let im = random_bump_sum(grid, rng, amp);
    zip_map(&re, &im, Complex64::new)
}

/// A random gauged history that is also smooth in time: every field is a
/// fixed random bump profile modulated by slow per-bump oscillations. Used
/// where a check is only meaningful on temporally resolved data (gauge
/// invariance of the action).
pub fn random_smooth_history_gauged(
    grid: Grid2D,
    slices: usize,
    dt: f64,
    mu: Mu,
    seed: u64,
) -> GaugedHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = |amp: f64| {
        let base = random_bump_sum(grid, &mut rng, amp);
        let wob = random_bump_sum(grid, &mut rng, amp);
        let om1 = rng.random_range(0.5..3.0);
        let om2 = rng.random_range(0.5..3.0);
        move |t: f64| {
            base.scale((om1 * t).cos())
                .add_scaled(&wob, (om2 * t).sin())
        }
    };
    let (p1r, p1i, p2r, p2i) = (part(0.6), part(0.6), part(0.6), part(0.6));
    let (a1f, a2f, a0f) = (part(0.4), part(0.4), part(0.3));
    let states = (0..slices)
        .map(|n| {
            let t = n as f64 * dt;
            GaugedState {
                grid,
                mu,
                psi1: zip_map(&p1r(t), &p1i(t), Complex64::new),
                psi2: zip_map(&p2r(t), &p2i(t), Complex64::new),
                a1: a1f(t),
                a2: a2f(t),
                a0: Some(a0f(t)),
                t,
            }
        })
        .collect();
    GaugedHistory { states, dt }
}

/// A random smooth gauged history, for transpose checks. The slices are
/// independent; nothing requires a history to solve the flow.
pub fn random_history_gauged(
    grid: Grid2D,
    slices: usize,
    dt: f64,
    mu: Mu,
    seed: u64,
) -> GaugedHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..slices)
        .map(|n| GaugedState {
            grid,
            mu,
            psi1: random_smooth_complex(grid, &mut rng, 0.6),
            psi2: random_smooth_complex(grid, &mut rng, 0.6),
            a1: random_bump_sum(grid, &mut rng, 0.4),
            a2: random_bump_sum(grid, &mut rng, 0.4),
            a0: Some(random_bump_sum(grid, &mut rng, 0.3)),
            t: n as f64 * dt,
        })
        .collect();
    GaugedHistory { states, dt }
}

pub fn random_history_css(grid: Grid2D, slices: usize, dt: f64, g: f64, seed: u64) -> CssHistory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = (0..slices)
        .map(|n| CssState {
            grid,
            phi: random_smooth_complex(grid, &mut rng, 0.6),
            a0: random_bump_sum(grid, &mut rng, 0.3),
            a1: random_bump_sum(grid, &mut rng, 0.4),
            a2: random_bump_sum(grid, &mut rng, 0.4),
            g,
            t: n as f64 * dt,
        })
        .collect();
    CssHistory { states, dt }
}

fn masked_bump(grid: Grid2D, rng: &mut ChaCha8Rng) -> RealField {
    let mut f = random_bump_sum(grid, rng, 1.0);
    let n = grid.n();
    for iy in 0..n {
        for ix in 0..n {
            if ix < SPATIAL_MARGIN
                || iy < SPATIAL_MARGIN
                || ix >= n - SPATIAL_MARGIN
                || iy >= n - SPATIAL_MARGIN
            {
                f.set(ix, iy, 0.0);
            }
        }
    }
    f
}

/// A random admissible perturbation exciting one direction. Two slices at
/// each temporal end stay clear so every summation-by-parts move in the
/// pairing is exact.
pub fn random_perturbation_gauged(
    grid: Grid2D,
    slices: usize,
    direction: Direction,
    seed: u64,
) -> GaugedPerturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut p = GaugedPerturbation::zeros(grid, slices);
    for n in 2..slices.saturating_sub(2) {
        match direction {
            Direction::Psi1 => {
                let re = masked_bump(grid, &mut rng);
                let im = masked_bump(grid, &mut rng);
                p.dpsi1[n] = zip_map(&re, &im, Complex64::new);
            }
            Direction::Psi2 => {
                let re = masked_bump(grid, &mut rng);
                let im = masked_bump(grid, &mut rng);
                p.dpsi2[n] = zip_map(&re, &im, Complex64::new);
            }
            Direction::A0 => p.da0[n] = masked_bump(grid, &mut rng),
            Direction::A1 => p.da1[n] = masked_bump(grid, &mut rng),
            Direction::A2 => p.da2[n] = masked_bump(grid, &mut rng),
        }
    }
    p
}

pub fn random_perturbation_css(
    grid: Grid2D,
    slices: usize,
    direction: Direction,
    seed: u64,
) -> CssPerturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x51ed_270b));
    let mut p = CssPerturbation::zeros(grid, slices);
    for n in 2..slices.saturating_sub(2) {
        match direction {
            Direction::Psi1 | Direction::Psi2 => {
                let re = masked_bump(grid, &mut rng);
                let im = masked_bump(grid, &mut rng);
                p.dphi[n] = zip_map(&re, &im, Complex64::new);
            }
            Direction::A0 => p.da0[n] = masked_bump(grid, &mut rng),
            Direction::A1 => p.da1[n] = masked_bump(grid, &mut rng),
            Direction::A2 => p.da2[n] = masked_bump(grid, &mut rng),
        }
    }
    p
}

// ---------------------------------------------------------------------------
// gradient check for the harmonic-map energy
// ---------------------------------------------------------------------------

/// Compare the `HmhfAppendix` right-hand side against central
/// finite differences of the harmonic-map energy at `probes` random interior
/// nodes. The psi part must match the downward gradient; the connection
/// part matches mu times the gradient (the sign that keeps the curvature
/// heat equation forward).
pub fn gradient_check_har(
    s: &GaugedState,
    order: StencilOrder,
    seed: u64,
    probes: usize,
) -> Result<(f64, f64)> {
    let rhs = rhs_gauged(s, System::HmhfAppendix, order)?;
    let grid = s.grid;
    let h2 = grid.cell_area();
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-5;
    let energy = |st: &GaugedState| crate::diag::energy_har(st, order);
    let scale_h = energy(s).abs().max(1.0);

    let mut err_psi = 0.0f64;
    let mut err_a = 0.0f64;
    for _ in 0..probes {
        let ix = rng.random_range(SPATIAL_MARGIN..n - SPATIAL_MARGIN);
        let iy = rng.random_range(SPATIAL_MARGIN..n - SPATIAL_MARGIN);

        // psi directions: real and imaginary bumps on both components
        for (which, im_dir) in [(0, false), (0, true), (1, false), (1, true)] {
            let mut plus = s.clone();
            let mut minus = s.clone();
            let delta = if im_dir {
                Complex64::new(0.0, eps)
            } else {
                Complex64::new(eps, 0.0)
            };
            {
                let f = if which == 0 { &mut plus.psi1 } else { &mut plus.psi2 };
                let v = f.at(ix, iy);
                f.set(ix, iy, v + delta);
            }
            {
                let f = if which == 0 { &mut minus.psi1 } else { &mut minus.psi2 };
                let v = f.at(ix, iy);
                f.set(ix, iy, v - delta);
            }
            let fd = (energy(&plus) - energy(&minus)) / (2.0 * eps);
            let r = if which == 0 {
                rhs.psi1.at(ix, iy)
            } else {
                rhs.psi2.at(ix, iy)
            };
            // downward flow: rhs = -grad H
            let expected = if im_dir { -r.im } else { -r.re } * h2;
            // probes far outside the data's support see gradients at the
            // round-off floor; compare those absolutely
            let denom = fd.abs().max(expected.abs()).max(1e-6 * scale_h);
            err_psi = err_psi.max((fd - expected).abs() / denom);
        }

        // connection directions
        for which in [0, 1] {
            let mut plus = s.clone();
            let mut minus = s.clone();
            {
                let f = if which == 0 { &mut plus.a1 } else { &mut plus.a2 };
                let v = f.at(ix, iy);
                f.set(ix, iy, v + eps);
            }
            {
                let f = if which == 0 { &mut minus.a1 } else { &mut minus.a2 };
                let v = f.at(ix, iy);
                f.set(ix, iy, v - eps);
            }
            let fd = (energy(&plus) - energy(&minus)) / (2.0 * eps);
            let r = if which == 0 {
                rhs.a1.at(ix, iy)
            } else {
                rhs.a2.at(ix, iy)
            };
            let expected = s.mu.sign() * r * h2;
            let denom = fd.abs().max(expected.abs()).max(1e-6 * scale_h);
            err_a = err_a.max((fd - expected).abs() / denom);
        }
    }
    Ok((err_psi, err_a))
}

// ---------------------------------------------------------------------------
// constraint propagation
// ---------------------------------------------------------------------------

/// Least-squares fit of `log(|Theta| + |Psi|)` growth along a run against
/// the Gronwall budget `sup(|psi_1|^2 + |psi_2|^2) + 1/2`.
#[derive(Clone, Copy, Debug)]
pub struct GrowthReport {
    pub slope: f64,
    pub bound: f64,
    pub within: bool,
}

pub fn constraint_propagation_check(rows: &[crate::diag::DiagRow]) -> GrowthReport {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.res_theta + r.res_psi > 0.0)
        .map(|r| (r.t, (r.res_theta + r.res_psi).ln()))
        .collect();
    let bound = rows.iter().map(|r| 2.0 * r.sup_t00).fold(0.0f64, f64::max) + 0.5;
    if pts.len() < 2 {
        return GrowthReport {
            slope: 0.0,
            bound,
            within: true,
        };
    }
    // worst secant slope from t = 0, which is exactly the exponential
    // envelope condition c(t) <= c(0) exp(slope * t)
    let (t0, y0) = pts[0];
    let slope = pts[1..]
        .iter()
        .filter(|p| p.0 > t0)
        .map(|p| (p.1 - y0) / (p.0 - t0))
        .fold(f64::NEG_INFINITY, f64::max);
    let slope = if slope.is_finite() { slope } else { 0.0 };
    GrowthReport {
        slope,
        bound,
        within: slope <= bound,
    }
}
