//! Poisson solves on the grid.
//!
//! Periodic grids diagonalize with the FFT. Dirichlet-zero grids
//! diagonalize too, in sine bases: the compact 5-point Laplacian under a
//! plain DST-I, and the "wide" composition of central first differences
//! `D1 D1 + D2 D2` under a DST-I on each parity sublattice (central
//! differences couple cells two apart). Both dirichlet solves are direct
//! and exact to round-off.
//!
//! The Coulomb projection inverts the composition of ghost-closure central
//! differences (`solve_composed_wide`), an SPD operator handled by
//! conjugate gradients with the sine-diagonalized skeleton as
//! preconditioner.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::{integrate, l2_norm, pairwise_sum, partial, zip_map, Axis, RealField};
use crate::grid::{Boundary, StencilOrder};

pub const POISSON_TOL: f64 = 1e-10;

/// Which discrete Laplacian a solve targets.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Operator {
    /// 5-point compact stencil, zero ghosts.
    Compact,
    /// Wide second difference `(f(x+2h) - 2 f(x) + f(x-2h)) / 4h^2` per
    /// axis, zero ghosts on the field. This is the sine-diagonalizable
    /// skeleton of the central-difference composition; the two agree except
    /// on the outermost cells.
    Wide,
}

#[cfg(test)]
fn apply_ghost(op: Operator, f: &RealField) -> RealField {
    match op {
        Operator::Compact => crate::field::laplacian(f, StencilOrder::Two),
        Operator::Wide => {
            let grid = *f.grid();
            let n = grid.n();
            let c = 1.0 / (4.0 * grid.spacing() * grid.spacing());
            let get = |ix: isize, iy: isize| -> f64 {
                if ix < 0 || iy < 0 || ix >= n as isize || iy >= n as isize {
                    0.0
                } else {
                    f.at(ix as usize, iy as usize)
                }
            };
            let mut out = RealField::zeros(grid);
            for iy in 0..n as isize {
                for ix in 0..n as isize {
                    let v = get(ix + 2, iy) + get(ix - 2, iy) + get(ix, iy + 2)
                        + get(ix, iy - 2)
                        - 4.0 * get(ix, iy);
                    out.set(ix as usize, iy as usize, v * c);
                }
            }
            out
        }
    }
}

fn dot(a: &RealField, b: &RealField) -> f64 {
    let prods: Vec<f64> = a
        .data()
        .iter()
        .zip(b.data().iter())
        .map(|(x, y)| x * y)
        .collect();
    pairwise_sum(&prods)
}

// ---------------------------------------------------------------------------
// DST-I machinery
// ---------------------------------------------------------------------------

/// Unnormalized DST-I of each row of a `rows x m` buffer (in place):
/// `X_k = sum_j x_j sin(pi (j+1)(k+1) / (m+1))`. Applying it twice
/// multiplies by `(m+1)/2`.
fn dst1_rows(data: &mut [f64], rows: usize, m: usize) {
    let ext = 2 * (m + 1);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(ext);
    let mut buf = vec![Complex64::new(0.0, 0.0); ext];
    for r in 0..rows {
        let row = &mut data[r * m..(r + 1) * m];
        buf[0] = Complex64::new(0.0, 0.0);
        buf[m + 1] = Complex64::new(0.0, 0.0);
        for j in 0..m {
            buf[j + 1] = Complex64::new(row[j], 0.0);
            buf[ext - 1 - j] = Complex64::new(-row[j], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..m {
            row[k] = -0.5 * buf[k + 1].im;
        }
    }
}

fn transpose_square(data: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Direct solve of the compact 5-point dirichlet Laplacian by 2D DST-I.
fn solve_compact_dst(f: &RealField) -> RealField {
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let mut data = f.data().to_vec();
    dst1_rows(&mut data, n, n);
    transpose_square(&mut data, n);
    dst1_rows(&mut data, n, n);
    let lam: Vec<f64> = (0..n)
        .map(|k| (2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos() - 2.0) / (h * h))
        .collect();
    // buffer is transposed: fast index is the original row index
    for k1 in 0..n {
        for k2 in 0..n {
            data[k1 * n + k2] /= lam[k1] + lam[k2];
        }
    }
    dst1_rows(&mut data, n, n);
    transpose_square(&mut data, n);
    dst1_rows(&mut data, n, n);
    let scale = 4.0 / (((n + 1) * (n + 1)) as f64);
    for v in &mut data {
        *v *= scale;
    }
    RealField::from_data(grid, data).expect("dst output length")
}

/// Direct solve of the ghost-closure wide operator: split into the four
/// parity sublattices (central differences couple cells two apart), each of
/// which is a dirichlet chain of length N/2 under the shift-by-two, and
/// apply DST-I there.
fn solve_wide_dst(f: &RealField) -> RealField {
    let grid = *f.grid();
    let n = grid.n();
    let m = n / 2;
    let h = grid.spacing();
    let lam: Vec<f64> = (0..m)
        .map(|q| {
            (2.0 * (std::f64::consts::PI * (q + 1) as f64 / (m + 1) as f64).cos() - 2.0)
                / (4.0 * h * h)
        })
        .collect();
    let mut out = vec![0.0f64; n * n];
    let mut block = vec![0.0f64; m * m];
    for px in 0..2 {
        for py in 0..2 {
            for by in 0..m {
                for bx in 0..m {
                    block[by * m + bx] = f.data()[(2 * by + py) * n + (2 * bx + px)];
                }
            }
            dst1_rows(&mut block, m, m);
            transpose_square(&mut block, m);
            dst1_rows(&mut block, m, m);
            for k1 in 0..m {
                for k2 in 0..m {
                    block[k1 * m + k2] /= lam[k1] + lam[k2];
                }
            }
            dst1_rows(&mut block, m, m);
            transpose_square(&mut block, m);
            dst1_rows(&mut block, m, m);
            let scale = 4.0 / (((m + 1) * (m + 1)) as f64);
            for by in 0..m {
                for bx in 0..m {
                    out[(2 * by + py) * n + (2 * bx + px)] = block[by * m + bx] * scale;
                }
            }
        }
    }
    RealField::from_data(grid, out).expect("dst output length")
}

/// Solve `Lap u = f` with the given ghost-closure operator.
///
/// Periodic grids subtract the operator's null modes and return the
/// zero-mean solution; dirichlet grids are solved directly in sine bases.
pub fn solve_poisson_op(f: &RealField, op: Operator) -> Result<RealField> {
    match f.grid().boundary() {
        Boundary::Periodic => Ok(solve_fft(f, op)),
        Boundary::DirichletZero => Ok(match op {
            Operator::Compact => solve_compact_dst(f),
            Operator::Wide => solve_wide_dst(f),
        }),
    }
}

/// Solve `Lap u = f` with the compact 5-point Laplacian.
pub fn solve_poisson(f: &RealField) -> Result<RealField> {
    solve_poisson_op(f, Operator::Compact)
}

fn solve_fft(f: &RealField, op: Operator) -> RealField {
    let grid = *f.grid();
    let n = grid.n();
    let h = grid.spacing();
    let mean = integrate(f) / (4.0 * grid.half_width() * grid.half_width());

    let mut buf: Vec<Complex64> = f
        .data()
        .iter()
        .map(|&v| Complex64::new(v - mean, 0.0))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    for row in buf.chunks_mut(n) {
        fwd.process(row);
    }
    transpose_c(&mut buf, n);
    for row in buf.chunks_mut(n) {
        fwd.process(row);
    }

    let symbol_1d: Vec<f64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            match op {
                Operator::Compact => (2.0 * theta.cos() - 2.0) / (h * h),
                Operator::Wide => -(theta.sin() * theta.sin()) / (h * h),
            }
        })
        .collect();
    for k2 in 0..n {
        for k1 in 0..n {
            let s = symbol_1d[k1] + symbol_1d[k2];
            let v = &mut buf[k2 * n + k1];
            if s.abs() < 1e-14 {
                *v = Complex64::new(0.0, 0.0); // null modes removed
            } else {
                *v /= s;
            }
        }
    }

    for row in buf.chunks_mut(n) {
        inv.process(row);
    }
    transpose_c(&mut buf, n);
    for row in buf.chunks_mut(n) {
        inv.process(row);
    }

    let scale = 1.0 / (n * n) as f64;
    let data: Vec<f64> = buf.iter().map(|z| z.re * scale).collect();
    RealField::from_data(grid, data).expect("fft output length")
}

fn transpose_c(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

// ---------------------------------------------------------------------------
// composed wide solve (Coulomb projection backend)
// ---------------------------------------------------------------------------

/// `d_1(d_1 f) + d_2(d_2 f)` with ghost-closure central differences at every
/// application (the intermediate derivative field is ghosted too). This is
/// the exact operator produced by taking the central divergence of a
/// central gradient, so solving against it makes the Coulomb projection
/// close discretely. Symmetric positive definite up to sign: the central
/// difference with zero ghosts is exactly skew-adjoint.
pub fn apply_composed_wide(f: &RealField) -> RealField {
    let d1 = partial(f, Axis::X1, StencilOrder::Two);
    let d2 = partial(f, Axis::X2, StencilOrder::Two);
    zip_map(
        &partial(&d1, Axis::X1, StencilOrder::Two),
        &partial(&d2, Axis::X2, StencilOrder::Two),
        |a, b| a + b,
    )
}

/// Solve `(d_1 d_1 + d_2 d_2) u = f` (ghost closures) by conjugate
/// gradients preconditioned with the sine-diagonalized wide skeleton, which
/// differs only on the outermost cells.
pub fn solve_composed_wide(f: &RealField) -> Result<RealField> {
    if f.grid().boundary() == Boundary::Periodic {
        return Ok(solve_fft(f, Operator::Wide));
    }
    let grid = *f.grid();
    let scale = l2_norm(f);
    let mut u = RealField::zeros(grid);
    if scale == 0.0 {
        return Ok(u);
    }
    // CG on the SPD operator -L with preconditioner -P^-1.
    let apply = |v: &RealField| apply_composed_wide(v).scale(-1.0);
    let prec = |v: &RealField| solve_wide_dst(v).scale(-1.0);
    let b = f.scale(-1.0);
    let mut r = b.add_scaled(&apply(&u), -1.0);
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for iter in 0..500 {
        if l2_norm(&r) <= POISSON_TOL * scale {
            return Ok(u);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::PoissonDiverged {
                iters: iter,
                residual: l2_norm(&r) / scale,
            });
        }
        let alpha = rz / pap;
        u = u.add_scaled(&p, alpha);
        r = r.add_scaled(&ap, -alpha);
        z = prec(&r);
        let rz_new = dot(&r, &z);
        p = z.add_scaled(&p, rz_new / rz);
        rz = rz_new;
    }
    if l2_norm(&r) <= 1e-8 * scale {
        Ok(u)
    } else {
        Err(Error::PoissonDiverged {
            iters: 500,
            residual: l2_norm(&r) / scale,
        })
    }
}
