//! `gflow` — drive, snapshot, and diagnose gauged geometric flows.

mod config;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{FileConfig, GaugeChoice, InitSpec, RunConfig};
use gflow_core::diag::{self, DiagRow};
use gflow_core::field::{l2_norm, l2_norm_c, zip_map};
use gflow_core::flows::{self, CssGaugeMode, FlowSpec, System};
use gflow_core::gauge::{constraint_residuals, coulomb_project, GaugedState, Mu};
use gflow_core::grid::StencilOrder;
use gflow_core::io::{self, Snapshot};
use gflow_core::maps::{self, FrameScheme};
use gflow_core::solitons::{self, SelfDualSign};
use gflow_core::variational;
use gflow_core::CssState;

#[derive(Parser)]
#[command(name = "gflow", version, about = "gauged Schrödinger map / heat flow / Chern-Simons-Schrödinger simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an initial state and export diagnostics.
    Evolve(EvolveArgs),
    /// Print the diagnostics of a snapshot file.
    Diagnose(DiagnoseArgs),
    /// Build a closed-form soliton fixture and check its residuals.
    Soliton(SolitonArgs),
    /// Reconstruct the frame field of a snapshot through the Mayer-Lie system.
    Reconstruct(ReconstructArgs),
    /// Check the discrete action derivative against the Euler-Lagrange pairing.
    Varcheck(VarcheckArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// sm | hmhf_main | hmhf_appendix | css
    #[arg(long, default_value = "sm")]
    system: String,
    /// Domain half-width L.
    #[arg(long, default_value_t = 8.0)]
    l: f64,
    /// Points per axis (even, >= 8).
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// dirichlet_zero | periodic
    #[arg(long, default_value = "dirichlet_zero")]
    boundary: String,
    /// Target sign: +1 sphere, -1 hyperbolic plane.
    #[arg(long, default_value_t = 1)]
    mu: i8,
    #[arg(long, default_value_t = 5e-5)]
    dt: f64,
    /// Final time (integer multiple of dt).
    #[arg(long, default_value_t = 0.1)]
    t: f64,
    /// Diagnostics sampling stride in steps (0: first and last only).
    #[arg(long, default_value_t = 50)]
    diag_every: usize,
    /// Stencil order: 2 | 4.
    #[arg(long, default_value_t = 2)]
    order: u8,
    /// soliton:n=… | bump:amp=… | jackiw_pi | file:path
    #[arg(long, default_value = "soliton:n=1")]
    init: String,
    /// temporal | coulomb_reproject (diagnostic reprojection of the output)
    #[arg(long, default_value = "temporal")]
    gauge: String,
    #[arg(long, default_value = "runs/evolve")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Snapshot stride in steps (0: initial and final only).
    #[arg(long, default_value_t = 0)]
    snap_every: usize,
    /// JSON config file; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    snapshot: PathBuf,
    /// Constitutive system for the F_0j terms of a gauged snapshot.
    #[arg(long, default_value = "sm")]
    system: String,
    #[arg(long, default_value_t = 2)]
    order: u8,
}

#[derive(Args)]
struct SolitonArgs {
    /// sphere_degree_n | jackiw_pi
    #[arg(long, default_value = "sphere_degree_n")]
    family: String,
    /// Degree / vortex number.
    #[arg(long, default_value_t = 1)]
    n: u32,
    #[arg(long, default_value_t = 8.0)]
    l: f64,
    #[arg(long, default_value_t = 256, value_name = "N")]
    grid_n: usize,
    #[arg(long, default_value_t = 2)]
    order: u8,
    /// Run the residual table (always on; accepted for scripting clarity).
    #[arg(long, default_value_t = true)]
    check: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    snapshot: PathBuf,
    /// midpoint | cf4
    #[arg(long, default_value = "cf4")]
    scheme: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VarcheckArgs {
    /// sm | css
    #[arg(long, default_value = "sm")]
    system: String,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 2)]
    order: u8,
    #[arg(long, default_value_t = 32)]
    grid_n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Soliton(a) => cmd_soliton(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Varcheck(a) => cmd_varcheck(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            // validation problems exit 2, numerical aborts exit 3
            let code = match e.downcast_ref::<gflow_core::Error>() {
                Some(gflow_core::Error::Validation(_)) | Some(gflow_core::Error::Cfl { .. }) => 2,
                Some(_) => 3,
                None => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn stencil(order: u8) -> Result<StencilOrder> {
    Ok(order.to_string().parse::<StencilOrder>()?)
}

enum State {
    Gauged(GaugedState),
    Css(CssState),
}

fn build_config(a: &EvolveArgs) -> Result<RunConfig> {
    let file = match &a.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    // flags win: clap fills defaults, so "flag set" is detected against the
    // default values only when the file provides an alternative
    let pick_f64 = |flag: f64, default: f64, file_v: Option<f64>| {
        if (flag - default).abs() > 0.0 {
            flag
        } else {
            file_v.unwrap_or(default)
        }
    };
    let pick_usize = |flag: usize, default: usize, file_v: Option<usize>| {
        if flag != default {
            flag
        } else {
            file_v.unwrap_or(default)
        }
    };
    let pick_str = |flag: &str, default: &str, file_v: Option<String>| {
        if flag != default {
            flag.to_string()
        } else {
            file_v.unwrap_or_else(|| default.to_string())
        }
    };
    Ok(RunConfig {
        system: pick_str(&a.system, "sm", file.system),
        half_width: pick_f64(a.l, 8.0, file.half_width),
        n: pick_usize(a.n, 256, file.n),
        boundary: pick_str(&a.boundary, "dirichlet_zero", file.boundary),
        mu: if a.mu != 1 { a.mu } else { file.mu.unwrap_or(1) },
        dt: pick_f64(a.dt, 5e-5, file.dt),
        t_final: pick_f64(a.t, 0.1, file.t_final),
        diag_every: pick_usize(a.diag_every, 50, file.diag_every),
        order: if a.order != 2 { a.order } else { file.order.unwrap_or(2) },
        init: pick_str(&a.init, "soliton:n=1", file.init),
        gauge: pick_str(&a.gauge, "temporal", file.gauge),
        out_dir: if a.out != Path::new("runs/evolve") {
            a.out.clone()
        } else {
            file.out_dir.unwrap_or_else(|| a.out.clone())
        },
        seed: if a.seed != 0 { a.seed } else { file.seed.unwrap_or(0) },
        snap_every: pick_usize(a.snap_every, 0, file.snap_every),
    })
}

fn build_initial(cfg: &RunConfig) -> Result<State> {
    let system = cfg.system()?;
    match cfg.init()? {
        InitSpec::Soliton { n } => {
            if system == System::Css {
                bail!(gflow_core::Error::validation(
                    "soliton:n=… builds gauged data; use jackiw_pi for css",
                ));
            }
            Ok(State::Gauged(solitons::self_dual_data(
                cfg.grid()?,
                n,
                cfg.mu()?,
            )?))
        }
        InitSpec::Bump { amp } => {
            if system == System::Css {
                bail!(gflow_core::Error::validation(
                    "bump:amp=… builds gauged data; use jackiw_pi for css",
                ));
            }
            if !(amp.is_finite() && amp.abs() < 1.0) {
                bail!(gflow_core::Error::validation(format!(
                    "bump amplitude must satisfy |amp| < 1, got {amp}"
                )));
            }
            Ok(State::Gauged(maps::bump_state(cfg.grid()?, amp, cfg.mu()?)))
        }
        InitSpec::JackiwPi => {
            if system != System::Css {
                bail!(gflow_core::Error::validation(
                    "jackiw_pi builds css data; pick --system css",
                ));
            }
            let mut s = solitons::jackiw_pi_data(cfg.grid()?, 1)?;
            // temporal gauge for evolution; the discrete curvature
            // constraint must hold at t = 0
            s.a0 = gflow_core::RealField::zeros(s.grid);
            Ok(State::Css(flows::css_prepare_constraint(&s)?))
        }
        InitSpec::File { path } => match io::read_snapshot(&path)? {
            Snapshot::Gauged(s) => {
                if system == System::Css {
                    bail!(gflow_core::Error::validation(
                        "snapshot holds a gauged state but --system css was given",
                    ));
                }
                Ok(State::Gauged(s))
            }
            Snapshot::Css(s) => {
                if system != System::Css {
                    bail!(gflow_core::Error::validation(
                        "snapshot holds a css state; pick --system css",
                    ));
                }
                Ok(State::Css(s))
            }
        },
    }
}

fn snap_name(step: usize) -> String {
    format!("snap_{step:08}.gf")
}

fn cmd_evolve(a: EvolveArgs) -> Result<ExitCode> {
    let cfg = build_config(&a)?;
    let system = cfg.system()?;
    let order = cfg.order()?;
    let gauge = cfg.gauge()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    cfg.echo_to(&cfg.out_dir)?;

    let mut spec = FlowSpec::new(system, cfg.dt, cfg.t_final);
    spec.order = order;
    let state = build_initial(&cfg)?;
    let nsteps = spec.steps()?;
    let out = cfg.out_dir.clone();
    let snap_every = cfg.snap_every;

    let (rows, final_snapshot) = match state {
        State::Gauged(s) => {
            let mut io_err: Option<gflow_core::Error> = None;
            let (fin, rows) = flows::evolve_observed(&s, &spec, cfg.diag_every, |step, st| {
                let due = step == 0
                    || step == nsteps
                    || (snap_every > 0 && step % snap_every == 0);
                if due && io_err.is_none() {
                    if let Err(e) =
                        io::write_snapshot(out.join(snap_name(step)), &Snapshot::Gauged(st.clone()))
                    {
                        io_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            let fin = match gauge {
                GaugeChoice::Temporal => fin,
                GaugeChoice::CoulombReproject => {
                    let projected = coulomb_project(&fin)?;
                    io::write_snapshot(
                        out.join("snap_final_coulomb.gf"),
                        &Snapshot::Gauged(projected.clone()),
                    )?;
                    projected
                }
            };
            (rows, Snapshot::Gauged(fin))
        }
        State::Css(s) => {
            if gauge == GaugeChoice::CoulombReproject {
                bail!(gflow_core::Error::validation(
                    "coulomb_reproject applies to gauged systems",
                ));
            }
            let mut io_err: Option<gflow_core::Error> = None;
            let (fin, rows) = flows::evolve_observed(&s, &spec, cfg.diag_every, |step, st| {
                let due = step == 0
                    || step == nsteps
                    || (snap_every > 0 && step % snap_every == 0);
                if due && io_err.is_none() {
                    if let Err(e) =
                        io::write_snapshot(out.join(snap_name(step)), &Snapshot::Css(st.clone()))
                    {
                        io_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            (rows, Snapshot::Css(fin))
        }
    };

    io::write_timeseries(cfg.out_dir.join("diag.csv"), &rows)?;
    let last = rows.last().expect("at least one diagnostics row");
    let first = rows.first().expect("at least one diagnostics row");
    println!(
        "evolve {} t={} steps={} energy {:.6e} -> {:.6e} (drift {:.2e}) charge drift {:.2e} -> {}",
        cfg.system,
        last.t,
        nsteps,
        first.energy,
        last.energy,
        (last.energy - first.energy).abs() / first.energy.abs().max(1e-300),
        (last.charge - first.charge).abs(),
        cfg.out_dir.join("diag.csv").display(),
    );
    let _ = final_snapshot;
    Ok(ExitCode::SUCCESS)
}

fn print_row(r: &DiagRow) {
    println!(
        "t {:.6} | energy {:.8e} | charge {:.6} | H_Sch {:.3e} | H_Har {:.6e} | V {:.4e} | M {:.4e} | theta {:.3e} | psi {:.3e}",
        r.t, r.energy, r.charge, r.hamiltonian, r.h_har, r.virial, r.morawetz, r.res_theta, r.res_psi
    );
}

fn cmd_diagnose(a: DiagnoseArgs) -> Result<ExitCode> {
    let order = stencil(a.order)?;
    let snap = io::read_snapshot(&a.snapshot)?;
    let row = match &snap {
        Snapshot::Gauged(s) => diag::diag_row_gauged(s, a.system.parse()?, order),
        Snapshot::Css(s) => diag::diag_row_css(s, order),
    };
    print_row(&row);
    Ok(ExitCode::SUCCESS)
}

fn cmd_soliton(a: SolitonArgs) -> Result<ExitCode> {
    let order = stencil(a.order)?;
    let grid = gflow_core::Grid2D::new(a.l, a.grid_n, gflow_core::Boundary::DirichletZero)?;
    let mut lines: Vec<(String, f64)> = Vec::new();
    match a.family.as_str() {
        "sphere_degree_n" => {
            let s = solitons::self_dual_data(grid, a.n, Mu::Sphere)?;
            let res = constraint_residuals(&s, order);
            lines.push(("theta_norm".into(), res.theta_norm));
            lines.push(("psi_norm".into(), res.psi_norm));
            let sd = solitons::self_duality_residual(&s, SelfDualSign::Plus, order);
            lines.push(("self_dual_plus_r1".into(), sd.r1));
            lines.push(("self_dual_plus_r2".into(), sd.r2));
            lines.push(("relation_residual".into(), sd.relation));
            for system in [System::Sm, System::HmhfMain, System::HmhfAppendix] {
                let d = flows::rhs_gauged(&s, system, order)?;
                let n = (l2_norm_c(&d.psi1).powi(2)
                    + l2_norm_c(&d.psi2).powi(2)
                    + l2_norm(&d.a1).powi(2)
                    + l2_norm(&d.a2).powi(2))
                .sqrt();
                lines.push((format!("rhs_norm_{}", system.name()), n));
            }
            lines.push(("charge".into(), diag::charge(&s, order)));
            lines.push(("energy".into(), diag::energy_sm(&s)));
            lines.push(("hamiltonian".into(), diag::hamiltonian_sch(&s, order).0));
        }
        "jackiw_pi" => {
            let s = solitons::jackiw_pi_data(grid, a.n)?;
            lines.push((
                "self_dual_plus".into(),
                solitons::css_self_duality_residual(&s, SelfDualSign::Plus, order),
            ));
            lines.push((
                "curvature_constraint".into(),
                s.curvature_residual(order),
            ));
            let d = flows::rhs_css(&s, order, CssGaugeMode::StoredA0);
            lines.push(("stationarity_dphi".into(), l2_norm_c(&d.phi)));
            let f01 = zip_map(
                &gflow_core::field::partial_decay(&s.a0, gflow_core::field::Axis::X1, order),
                &d.a1,
                |g, c| -g - c,
            );
            let f02 = zip_map(
                &gflow_core::field::partial_decay(&s.a0, gflow_core::field::Axis::X2, order),
                &d.a2,
                |g, c| -g - c,
            );
            lines.push(("f01_equation".into(), l2_norm(&f01)));
            lines.push(("f02_equation".into(), l2_norm(&f02)));
            let (e, trace) = diag::energy_css(&s, order);
            lines.push(("energy".into(), e));
            lines.push(("energy_trace_form".into(), trace));
        }
        other => bail!(gflow_core::Error::validation(format!(
            "unknown family `{other}` (want sphere_degree_n or jackiw_pi)"
        ))),
    }
    let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &lines {
        println!("{k:width$}  {v:+.6e}");
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let mut csv = String::from("quantity,value\n");
        for (k, v) in &lines {
            csv.push_str(&format!("{k},{v}\n"));
        }
        std::fs::write(dir.join("soliton_check.csv"), csv)?;
    }
    let worst = lines
        .iter()
        .filter(|(k, _)| k.contains("residual") || k.contains("norm") || k.contains("equation"))
        .map(|(_, v)| v.abs())
        .fold(0.0f64, f64::max);
    println!(
        "soliton {} n={} at N={}: worst residual {:.3e}",
        a.family, a.n, a.grid_n, worst
    );
    let _ = a.check;
    Ok(ExitCode::SUCCESS)
}

fn cmd_reconstruct(a: ReconstructArgs) -> Result<ExitCode> {
    let scheme = match a.scheme.as_str() {
        "midpoint" => FrameScheme::MidpointExp,
        "cf4" => FrameScheme::CommutatorFree4,
        other => bail!(gflow_core::Error::validation(format!(
            "unknown scheme `{other}` (want midpoint or cf4)"
        ))),
    };
    let snap = io::read_snapshot(&a.snapshot)?;
    let s = match snap {
        Snapshot::Gauged(s) => s,
        Snapshot::Css(_) => bail!(gflow_core::Error::validation(
            "frame reconstruction applies to gauged states",
        )),
    };
    let frame = maps::reconstruct_frame(&s, gflow_core::mat3::Mat3::identity(), scheme)?;
    let group = frame.group_residual_max();
    let path_res = maps::path_independence_residual(&s, scheme);
    let (p1, p2) = maps::extract_psi(&frame);
    let rt = (l2_norm_c(&zip_map(&p1, &s.psi1, |a, b| a - b)).powi(2)
        + l2_norm_c(&zip_map(&p2, &s.psi2, |a, b| a - b)).powi(2))
    .sqrt();
    println!(
        "reconstruct {}: group residual {:.3e}, path independence {:.3e}, psi round-trip {:.3e}",
        a.snapshot.display(),
        group,
        path_res,
        rt
    );
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("reconstruct.csv"),
            format!(
                "quantity,value\ngroup_residual,{group}\npath_independence,{path_res}\npsi_round_trip,{rt}\n"
            ),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_varcheck(a: VarcheckArgs) -> Result<ExitCode> {
    let order = stencil(a.order)?;
    let grid = gflow_core::Grid2D::new(8.0, a.grid_n, gflow_core::Boundary::DirichletZero)?;
    let tol = match order {
        StencilOrder::Two => 1e-4,
        StencilOrder::Four => 1e-5,
    };
    let slices = 7;
    let mut rows = String::from("seed,direction,fd,el,rel_err\n");
    let mut worst: f64 = 0.0;
    use variational::Direction::*;
    match a.system.as_str() {
        "sm" => {
            for seed in 0..a.seeds {
                let hist = variational::random_history_gauged(grid, slices, 1e-3, Mu::Sphere, seed);
                for dir in [Psi1, Psi2, A0, A1, A2] {
                    let p = variational::random_perturbation_gauged(grid, slices, dir, seed + 1000);
                    let r = variational::variational_check(&hist, &p, order)?;
                    worst = worst.max(r.rel_err);
                    rows.push_str(&format!(
                        "{seed},{dir:?},{},{},{}\n",
                        r.fd_derivative, r.el_pairing, r.rel_err
                    ));
                }
            }
        }
        "css" => {
            for seed in 0..a.seeds {
                let hist = variational::random_history_css(grid, slices, 1e-3, 0.5, seed);
                for dir in [Psi1, A0, A1, A2] {
                    let p = variational::random_perturbation_css(grid, slices, dir, seed + 1000);
                    let r = variational::variational_check_css(&hist, &p, order)?;
                    worst = worst.max(r.rel_err);
                    rows.push_str(&format!(
                        "{seed},{dir:?},{},{},{}\n",
                        r.fd_derivative, r.el_pairing, r.rel_err
                    ));
                }
            }
        }
        other => bail!(gflow_core::Error::validation(format!(
            "varcheck system must be sm or css, got `{other}`"
        ))),
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("varcheck.csv"), &rows)?;
    }
    println!(
        "varcheck {}: {} seeds x directions, worst rel_err {:.3e} (tolerance {:.0e})",
        a.system, a.seeds, worst, tol
    );
    if worst <= tol {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(3))
    }
}
