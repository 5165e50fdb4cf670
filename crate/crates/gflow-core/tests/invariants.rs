//! Property tests over the public API: serialization round trips, gauge
//! invariance, and reduction determinism on randomized inputs.

use num_complex::Complex64;
use proptest::prelude::*;

use gflow_core::field::{integrate, linf_norm_c, zip_map, ComplexField, RealField};
use gflow_core::gauge::{gauge_transform, GaugedState, Mu};
use gflow_core::grid::{Boundary, Grid2D, StencilOrder};
use gflow_core::io::{snapshot_bytes, snapshot_from_bytes, Snapshot};

fn small_grid() -> Grid2D {
    Grid2D::new(4.0, 16, Boundary::DirichletZero).unwrap()
}

/// A handful of smooth bump parameters fully determine a test state.
#[derive(Debug, Clone)]
struct BumpParams {
    amp: f64,
    cx: f64,
    cy: f64,
    width: f64,
    phase: f64,
}

fn bump_strategy() -> impl Strategy<Value = BumpParams> {
    (
        -1.0f64..1.0,
        -1.5f64..1.5,
        -1.5f64..1.5,
        0.4f64..1.2,
        0.0f64..std::f64::consts::TAU,
    )
        .prop_map(|(amp, cx, cy, width, phase)| BumpParams {
            amp,
            cx,
            cy,
            width,
            phase,
        })
}

fn state_from(params: &[BumpParams]) -> GaugedState {
    let g = small_grid();
    let mut s = GaugedState::zeros(g, Mu::Sphere);
    for (k, p) in params.iter().enumerate() {
        let bump = RealField::from_fn(g, move |x, y| {
            p.amp * (-((x - p.cx).powi(2) + (y - p.cy).powi(2)) / (p.width * p.width)).exp()
        });
        let cbump = zip_map(
            &bump,
            &RealField::from_fn(g, move |_, _| p.phase),
            |a, ph| Complex64::from_polar(a.abs() + 1e-12, ph),
        );
        match k % 4 {
            0 => s.psi1 = s.psi1.add_scaled(&cbump, 1.0),
            1 => s.psi2 = s.psi2.add_scaled(&cbump, 1.0),
            2 => s.a1 = s.a1.add_scaled(&bump, 1.0),
            _ => s.a2 = s.a2.add_scaled(&bump, 1.0),
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn snapshot_round_trip_is_bit_exact(params in proptest::collection::vec(bump_strategy(), 1..6)) {
        let s = state_from(&params);
        let bytes = snapshot_bytes(&Snapshot::Gauged(s));
        let back = snapshot_from_bytes(&bytes).unwrap();
        prop_assert_eq!(bytes, snapshot_bytes(&back));
    }

    #[test]
    fn charge_and_energy_are_gauge_invariant(
        params in proptest::collection::vec(bump_strategy(), 1..6),
        theta_amp in -0.8f64..0.8,
        theta_w in 0.4f64..0.9,
    ) {
        let s = state_from(&params);
        let g = *s.psi1.grid();
        // compactly supported rotation: the margin keeps the boundary rings at zero
        let theta = RealField::from_fn(g, move |x, y| {
            let r2 = (x * x + y * y) / (theta_w * theta_w);
            if r2 > 9.0 { 0.0 } else { theta_amp * (-r2).exp() * (1.0 - (r2 / 9.0)).powi(2) }
        });
        let s2 = gauge_transform(&s, &theta, StencilOrder::Two);
        let dq = (gflow_core::diag::charge(&s, StencilOrder::Two)
            - gflow_core::diag::charge(&s2, StencilOrder::Two)).abs();
        prop_assert!(dq < 1e-9, "charge moved by {}", dq);
        let de = (gflow_core::diag::energy_sm(&s) - gflow_core::diag::energy_sm(&s2)).abs();
        prop_assert!(de < 1e-10, "energy moved by {}", de);
        // |psi| itself is pointwise invariant
        let m1 = gflow_core::field::map_into(&s.psi1, |v| Complex64::new(v.norm(), 0.0));
        let m2 = gflow_core::field::map_into(&s2.psi1, |v| Complex64::new(v.norm(), 0.0));
        prop_assert!(linf_norm_c(&zip_map(&m1, &m2, |a, b| a - b)) < 1e-12);
    }

    #[test]
    fn quadrature_is_linear_and_deterministic(
        p in bump_strategy(),
        q in bump_strategy(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let g = small_grid();
        let f = RealField::from_fn(g, |x, y| {
            p.amp * (-((x - p.cx).powi(2) + (y - p.cy).powi(2)) / (p.width * p.width)).exp()
        });
        let h = RealField::from_fn(g, |x, y| {
            q.amp * (-((x - q.cx).powi(2) + (y - q.cy).powi(2)) / (q.width * q.width)).exp()
        });
        let lhs = integrate(&f.scale(a).add_scaled(&h, b));
        let rhs = a * integrate(&f) + b * integrate(&h);
        prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + lhs.abs()));
        prop_assert_eq!(integrate(&f).to_bits(), integrate(&f).to_bits());
    }

    #[test]
    fn covariant_derivative_reduces_to_partial_without_connection(
        p in bump_strategy(),
    ) {
        let g = small_grid();
        let s = GaugedState::zeros(g, Mu::Sphere);
        let f = ComplexField::from_fn(g, move |x, y| {
            Complex64::from_polar(
                p.amp.abs() * (-((x - p.cx).powi(2) + y * y) / (p.width * p.width)).exp(),
                p.phase,
            )
        });
        for order in [StencilOrder::Two, StencilOrder::Four] {
            let d = gflow_core::gauge::covariant_derivative(
                &s,
                gflow_core::field::Axis::X1,
                &f,
                order,
            );
            let e = gflow_core::field::partial_decay(&f, gflow_core::field::Axis::X1, order);
            prop_assert!(linf_norm_c(&zip_map(&d, &e, |a, b| a - b)) == 0.0);
        }
    }
}
