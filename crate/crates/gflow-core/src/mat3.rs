//! Small dense 3x3 matrices for frame fields on SO(3) and SO(2,1).

/// Row-major 3x3 real matrix.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

/// Minkowski signature matrix diag(1, 1, -1).
pub const ETA: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);

impl Mat3 {
    pub fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn identity() -> Self {
        Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn mul(&self, other: &Mat3) -> Mat3 {
        let (a, b) = (&self.0, &other.0);
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Mat3(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut out = self.0;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += other.0[i][j];
            }
        }
        Mat3(out)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        let mut out = self.0;
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] -= other.0[i][j];
            }
        }
        Mat3(out)
    }

    pub fn scale(&self, c: f64) -> Mat3 {
        let mut out = self.0;
        for row in &mut out {
            for v in row {
                *v *= c;
            }
        }
        Mat3(out)
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for row in &self.0 {
            for v in row {
                s += v * v;
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn column(&self, j: usize) -> [f64; 3] {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    /// Matrix exponential by scaling-and-squaring with a Taylor series.
    /// Accurate to round-off for the step sizes used here (norm << 1 after
    /// scaling), and exactly group-preserving for algebra arguments up to
    /// that accuracy.
    pub fn exp(&self) -> Mat3 {
        let norm = self.frobenius();
        let mut k = 0u32;
        let mut scaled = *self;
        if norm > 0.0625 {
            k = (norm / 0.0625).log2().ceil().max(0.0) as u32;
            scaled = self.scale(0.5f64.powi(k as i32));
        }
        // Taylor to order 12: error ~ (1/16)^13 / 13! — below round-off.
        let mut term = Mat3::identity();
        let mut sum = Mat3::identity();
        for i in 1..=12 {
            term = term.mul(&scaled).scale(1.0 / i as f64);
            sum = sum.add(&term);
        }
        for _ in 0..k {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// Deviation from the group defined by `eta_signed`: ||Phi^T G Phi - G||
    /// with G = I (SO(3)) or G = eta (SO(2,1)).
    pub fn group_residual(&self, minkowski: bool) -> f64 {
        let g = if minkowski { ETA } else { Mat3::identity() };
        self.transpose().mul(&g).mul(self).sub(&g).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_is_identity() {
        assert!(Mat3::zeros().exp().sub(&Mat3::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn exp_of_so3_generator_is_rotation() {
        // exp(theta * J) with J the z-rotation generator
        let theta = 0.7;
        let j = Mat3([[0.0, -theta, 0.0], [theta, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = j.exp();
        let expect = Mat3([
            [theta.cos(), -theta.sin(), 0.0],
            [theta.sin(), theta.cos(), 0.0],
            [0.0, 0.0, 1.0],
        ]);
        assert!(r.sub(&expect).max_abs() < 1e-14);
        assert!(r.group_residual(false) < 1e-14);
    }

    #[test]
    fn exp_of_so21_generator_preserves_eta() {
        // boost generator: eta-antisymmetric
        let b = Mat3([[0.0, 0.3, 1.1], [-0.3, 0.0, 0.4], [1.1, 0.4, 0.0]]);
        // check algebra condition B^T eta + eta B = 0
        let c = b.transpose().mul(&ETA).add(&ETA.mul(&b));
        assert!(c.max_abs() < 1e-15);
        assert!(b.exp().group_residual(true) < 1e-13);
    }

    #[test]
    fn exp_handles_larger_arguments() {
        let j = Mat3([[0.0, -2.5, 0.0], [2.5, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = j.exp();
        assert!((r.0[0][0] - 2.5f64.cos()).abs() < 1e-13);
        assert!(r.group_residual(false) < 1e-13);
    }
}
