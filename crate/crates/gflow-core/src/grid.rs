//! Uniform cell-centered truncation of the plane.
//!
//! The domain is the square `[-L, L]^2` sampled at `N x N` cell centers
//! `x_i = -L + (i + 1/2) h`, `h = 2L/N`. With `N` even no node sits at the
//! origin; "the value at the origin" always means the average over the four
//! center nodes straddling it.

use crate::error::{Error, Result};

/// Ghost-value policy outside the truncated square.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Fields are treated as identically zero outside the square. This is the
    /// default: every state of interest decays at infinity.
    DirichletZero,
    /// Wraparound. Used for convergence tests with compactly supported data
    /// and for the FFT Poisson backend.
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet_zero" | "dirichlet" => Ok(Boundary::DirichletZero),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::validation(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Finite-difference stencil order for first and second derivatives.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    Two,
    Four,
}

impl StencilOrder {
    /// Number of neighbor cells a stencil reaches on each side.
    pub fn reach(self) -> usize {
        match self {
            StencilOrder::Two => 1,
            StencilOrder::Four => 2,
        }
    }
}

impl std::str::FromStr for StencilOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" => Ok(StencilOrder::Two),
            "4" => Ok(StencilOrder::Four),
            other => Err(Error::validation(format!(
                "stencil order must be 2 or 4, got `{other}`"
            ))),
        }
    }
}

/// Uniform `N x N` cell-centered grid on `[-L, L]^2`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Grid2D {
    half_width: f64,
    n: usize,
    spacing: f64,
    boundary: Boundary,
}

impl Grid2D {
    /// Build a grid. `N` must be even and at least 8, `L` positive.
    pub fn new(half_width: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::validation(format!(
                "half-width L must be positive and finite, got {half_width}"
            )));
        }
        if n % 2 != 0 || n < 8 {
            return Err(Error::validation(format!(
                "N must be even and >= 8, got {n}"
            )));
        }
        Ok(Grid2D {
            half_width,
            n,
            spacing: 2.0 * half_width / n as f64,
            boundary,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of nodes, `N^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight per cell, `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Coordinate of the i-th cell center along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing
    }

    /// Row-major linear index; `ix` runs along x1, `iy` along x2.
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    /// The four nodes straddling the origin, as `(ix, iy)` pairs.
    pub fn center_nodes(&self) -> [(usize, usize); 4] {
        let lo = self.n / 2 - 1;
        let hi = self.n / 2;
        [(lo, lo), (hi, lo), (lo, hi), (hi, hi)]
    }

    /// Same spacing, node layout, and boundary policy.
    pub fn compatible(&self, other: &Grid2D) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_spacing() {
        let g = Grid2D::new(8.0, 256, Boundary::DirichletZero).unwrap();
        assert_eq!(g.spacing(), 0.0625);
        assert_eq!(g.len(), 256 * 256);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid2D::new(8.0, 7, Boundary::DirichletZero).is_err());
        assert!(Grid2D::new(8.0, 100, Boundary::DirichletZero).is_ok());
        assert!(Grid2D::new(8.0, 6, Boundary::DirichletZero).is_err());
        assert!(Grid2D::new(-1.0, 256, Boundary::DirichletZero).is_err());
        assert!(Grid2D::new(0.0, 256, Boundary::DirichletZero).is_err());
        let msg = Grid2D::new(8.0, 7, Boundary::DirichletZero)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("even") && msg.contains(">= 8"));
    }

    #[test]
    fn nodes_are_cell_centered() {
        let g = Grid2D::new(1.0, 8, Boundary::DirichletZero).unwrap();
        assert!((g.coord(0) - (-0.875)).abs() < 1e-15);
        assert!((g.coord(7) - 0.875).abs() < 1e-15);
        // no node at the origin; center nodes straddle it symmetrically
        for (ix, iy) in g.center_nodes() {
            assert!((g.coord(ix).abs() - 0.125).abs() < 1e-15);
            assert!((g.coord(iy).abs() - 0.125).abs() < 1e-15);
        }
    }
}
