//! Quick manual probes: residual magnitudes, convergence behavior, and a
//! full soliton evolution, printed to stdout. Handy when adjusting stencils
//! or tolerances; not part of the test suite.
//!
//! Usage: `cargo run -p gflow-core --example probe -- <grad|gron|law|s1run|s1rhs>`

use gflow_core::diag;
use gflow_core::field::{l2_norm_c, ComplexField, RealField};
use gflow_core::flows::{self, evolve, FlowSpec, System};
use gflow_core::gauge::{GaugedState, Mu};
use gflow_core::grid::{Boundary, Grid2D, StencilOrder};
use gflow_core::maps;
use num_complex::Complex64;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "grad" => grad_probe(),
        "gron" => gronwall_probe(),
        "s1rhs" => s1_rhs_probe(),
        "law" => law_probe(),
        "s1run" => s1_run_probe(),
        _ => {
            grad_probe();
        }
    }
}

fn grad_probe() {
    let g = Grid2D::new(8.0, 64, Boundary::DirichletZero).unwrap();
    let order = StencilOrder::Two;
    // same state construction as the failing test
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let w = {
        use rand::Rng;
        let l = g.half_width();
        let mut re = RealField::zeros(g);
        let mut im = RealField::zeros(g);
        for part in [&mut re, &mut im] {
            for _ in 0..3 {
                let a = rng.random_range(-0.3..0.3);
                let cx = rng.random_range(-0.5 * l..0.5 * l);
                let cy = rng.random_range(-0.5 * l..0.5 * l);
                let wd = rng.random_range(0.15 * l..0.3 * l);
                let bump = RealField::from_fn(g, move |x, y| {
                    a * (-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (wd * wd)).exp()
                });
                *part = part.add_scaled(&bump, 1.0);
            }
        }
        gflow_core::field::zip_map(&re, &im, Complex64::new)
    };
    let m = maps::MapField::new(g, w, Mu::Sphere).unwrap();
    let s = maps::gauge_from_map(&m).unwrap();
    let rhs = flows::rhs_gauged(&s, System::HmhfAppendix, order).unwrap();
    let h2 = g.cell_area();
    let eps = 1e-5;
    let energy = |st: &GaugedState| diag::energy_har(st, order);

    for (ix, iy) in [(10usize, 12usize), (30, 30), (45, 20)] {
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
            let expected = if im_dir { -r.im } else { -r.re } * h2;
            println!(
                "psi{} {} at ({ix},{iy}): fd {:.6e} expected {:.6e} ratio {:.6}",
                which + 1,
                if im_dir { "im" } else { "re" },
                fd,
                expected,
                fd / expected
            );
        }
    }
}

fn gronwall_probe() {
    for (n, amp) in [(128usize, 0.25), (128, 0.15), (192, 0.15)] {
        let g = Grid2D::new(8.0, n, Boundary::DirichletZero).unwrap();
        let mut s = maps::bump_state(g, amp, Mu::Sphere);
        let seed_bump = ComplexField::from_fn(g, |x, y| {
            Complex64::new(
                (-(x * x + y * y) * 2.0).exp(),
                0.5 * (-(x - 1.0) * (x - 1.0) - y * y).exp(),
            )
        });
        let norm = l2_norm_c(&seed_bump);
        s.psi1 = s
            .psi1
            .add_scaled(&seed_bump.map(move |v| v * (1e-4 / norm)), 1.0);
        for system in [System::Sm, System::HmhfAppendix] {
            let dt = 0.15 * g.spacing() * g.spacing();
            let steps = (0.2 / dt).ceil();
            let dt = 0.2 / steps;
            let spec = FlowSpec::new(system, dt, 0.2);
            let (_, rows) = evolve(&s, &spec, (steps as usize / 20).max(1)).unwrap();
            let c0t = rows[0].res_theta + rows[0].res_psi;
            let c0 = rows[0].res_theta;
            let bound = rows.iter().map(|r| 2.0 * r.sup_t00).fold(0.0f64, f64::max) + 0.5;
            let mut worst_t = f64::NEG_INFINITY;
            let mut worst_tot = f64::NEG_INFINITY;
            for r in rows.iter().skip(1) {
                worst_t = worst_t.max((r.res_theta / c0).ln() / r.t);
                worst_tot = worst_tot.max(((r.res_theta + r.res_psi) / c0t).ln() / r.t);
            }
            println!(
                "n {n} {}: theta secant {:.3} total secant {:.3} bound {:.3} (c0 theta {:.3e} total {:.3e})",
                system.name(),
                worst_t,
                worst_tot,
                bound,
                c0,
                c0t
            );
        }
    }
}

fn s1_run_probe() {
    let t0 = std::time::Instant::now();
    let g = Grid2D::new(8.0, 256, Boundary::DirichletZero).unwrap();
    let s = gflow_core::solitons::self_dual_data(g, 1, Mu::Sphere).unwrap();
    let spec = FlowSpec::new(System::Sm, 5e-5, 0.1);
    let (fin, rows) = evolve(&s, &spec, 200).unwrap();
    let psi0 = (l2_norm_c(&s.psi1).powi(2) + l2_norm_c(&s.psi2).powi(2)).sqrt();
    let dpsi = (l2_norm_c(&gflow_core::field::zip_map(&fin.psi1, &s.psi1, |a, b| a - b)).powi(2)
        + l2_norm_c(&gflow_core::field::zip_map(&fin.psi2, &s.psi2, |a, b| a - b)).powi(2))
    .sqrt();
    println!("relative psi drift over T=0.1: {:.4e}", dpsi / psi0);
    let c0 = rows[0].charge;
    let cdrift = rows.iter().map(|r| (r.charge - c0).abs()).fold(0.0f64, f64::max);
    println!("charge drift: {:.4e}", cdrift);
    let e0 = rows[0].energy;
    let edrift = rows.iter().map(|r| (r.energy - e0).abs() / e0).fold(0.0f64, f64::max);
    println!("energy drift (rel): {:.4e}", edrift);
    for r in &rows {
        println!("t {:.3}: H_Sch {:.4e} (energy {:.6})", r.t, r.hamiltonian, r.energy);
    }
    println!("elapsed: {:.1}s", t0.elapsed().as_secs_f64());
}

fn law_probe() {
    for n in [128usize, 256] {
        let g = Grid2D::new(8.0, n, Boundary::DirichletZero).unwrap();
        let s = gflow_core::solitons::self_dual_data(g, 1, Mu::Sphere).unwrap();
        let (l1, l2) = diag::law_residuals(&s, &s, &s, 1e-3, System::Sm, StencilOrder::Two);
        println!("frozen S1 n {n}: law1 {l1:.4e} law2 {l2:.4e}");
        let b = maps::bump_state(g, 0.5, Mu::Sphere);
        let (l1, l2) = diag::law_residuals(&b, &b, &b, 1e-3, System::Sm, StencilOrder::Two);
        println!("frozen B1 n {n}: law1 {l1:.4e} law2 {l2:.4e}");
    }
}

fn s1_rhs_probe() {
    let g = Grid2D::new(8.0, 256, Boundary::DirichletZero).unwrap();
    let s = gflow_core::solitons::self_dual_data(g, 1, Mu::Sphere).unwrap();
    for order in [StencilOrder::Two, StencilOrder::Four] {
        for system in [System::Sm, System::HmhfMain, System::HmhfAppendix] {
            let d = flows::rhs_gauged(&s, system, order).unwrap();
            let n = (l2_norm_c(&d.psi1).powi(2)
                + l2_norm_c(&d.psi2).powi(2)
                + gflow_core::field::l2_norm(&d.a1).powi(2)
                + gflow_core::field::l2_norm(&d.a2).powi(2))
            .sqrt();
            println!("{:?} {}: rhs norm {:.6e}", order, system.name(), n);
        }
    }
    let res2 = gflow_core::gauge::constraint_residuals(&s, StencilOrder::Two);
    let res4 = gflow_core::gauge::constraint_residuals(&s, StencilOrder::Four);
    println!("theta2 {:.4e} psi2 {:.4e}", res2.theta_norm, res2.psi_norm);
    println!("theta4 {:.4e} psi4 {:.4e}", res4.theta_norm, res4.psi_norm);
}
