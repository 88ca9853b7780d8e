//! Truncated Taylor series ("jets") used to differentiate rational
//! functions of z = ℘(x) without symbolic algebra.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Number of Taylor coefficients carried: value plus three derivatives.
pub const ORDER: usize = 4;

/// `Jet([a0, a1, a2, a3])` represents a0 + a1 t + a2 t² + a3 t³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [Complex64; ORDER]);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Jet {
    pub fn constant(c: Complex64) -> Self {
        Jet([c, ZERO, ZERO, ZERO])
    }

    /// The identity function expanded at `z`.
    pub fn var(z: Complex64) -> Self {
        Jet([z, Complex64::new(1.0, 0.0), ZERO, ZERO])
    }

    pub fn value(&self) -> Complex64 {
        self.0[0]
    }

    /// k-th derivative.
    pub fn deriv(&self, k: usize) -> Complex64 {
        const FACT: [f64; ORDER] = [1.0, 1.0, 2.0, 6.0];
        self.0[k] * FACT[k]
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let mut b = [ZERO; ORDER];
        b[0] = 1.0 / a[0];
        for k in 1..ORDER {
            let s: Complex64 = (1..=k).map(|j| a[j] * b[k - j]).sum();
            b[k] = -s * b[0];
        }
        Jet(b)
    }

    pub fn powi(&self, n: u32) -> Self {
        (0..n).fold(Jet::constant(Complex64::new(1.0, 0.0)), |acc, _| acc * *self)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Jet(self.0.map(|c| c * s))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut out = self.0;
        for (o, r) in out.iter_mut().zip(rhs.0) {
            *o += r;
        }
        Jet(out)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|c| -c))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [ZERO; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                out[i + j] += self.0[i] * rhs.0[j];
            }
        }
        Jet(out)
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Complex64) -> Jet {
        self.0[0] += rhs;
        self
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_of_rational_function() {
        // f(z) = z² / (z − 1) at z = 3
        let z = Jet::var(Complex64::new(3.0, 0.0));
        let f = z * z * (z + Complex64::new(-1.0, 0.0)).recip();
        // f = z + 1 + 1/(z−1)
        assert!((f.deriv(0) - 4.5).norm() < 1e-14);
        assert!((f.deriv(1) - (1.0 - 0.25)).norm() < 1e-14);
        assert!((f.deriv(2) - 0.25).norm() < 1e-14);
        assert!((f.deriv(3) - (-6.0 / 16.0)).norm() < 1e-14);
    }
}
