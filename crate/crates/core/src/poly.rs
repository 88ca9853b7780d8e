//! Dense univariate polynomials with complex coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients in ascending order: `c[0] + c[1] z + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![])
    }

    pub fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    /// `z − a`
    pub fn linear_root(a: Complex64) -> Self {
        Poly(vec![-a, Complex64::new(1.0, 0.0)])
    }

    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(Complex64::new(1.0, 0.0)), |acc, &r| &acc * &Poly::linear_root(r))
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    /// Degree after dropping exact-zero leading terms; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| *c != c0())
    }

    pub fn leading(&self) -> Complex64 {
        self.degree().map(|d| self.0[d]).unwrap_or_else(c0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.0.iter().rev().fold(c0(), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(Complex64::new(1.0, 0.0)), |acc, _| &acc * self)
    }

    pub fn monic(&self) -> Poly {
        self.scale(1.0 / self.leading())
    }

    /// Drops leading coefficients below `tol · max|c|`.
    pub fn trimmed(&self, tol: f64) -> Poly {
        let scale = self.0.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut v = self.0.clone();
        while v.last().is_some_and(|c| c.norm() <= tol * scale) {
            v.pop();
        }
        Poly(v)
    }

    /// Synthetic division by `z − a`, discarding the remainder.
    pub fn deflate(&self, a: Complex64) -> Poly {
        let n = match self.degree() {
            Some(d) if d > 0 => d,
            _ => return Poly::zero(),
        };
        let mut out = vec![c0(); n];
        let mut carry = c0();
        for k in (1..=n).rev() {
            carry = carry * a + self.0[k];
            out[k - 1] = carry;
        }
        Poly(out)
    }

    /// All roots (with multiplicity) by Aberth–Ehrlich iteration followed by
    /// Newton polishing of the simple ones.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let deg = match self.degree() {
            None => return Err(Error::InvalidParameter("roots of the zero polynomial".into())),
            Some(d) => d,
        };
        if deg == 0 {
            return Ok(vec![]);
        }
        let p = Poly(self.0[..=deg].to_vec()).monic();
        let dp = p.derivative();
        // Cauchy bound for the initial circle.
        let radius = 1.0 + p.0[..deg].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let r0 = radius.min(
            // a tighter guess keeps the iteration well scaled
            p.0[0].norm().powf(1.0 / deg as f64).max(1e-3),
        );
        let mut z: Vec<Complex64> = (0..deg)
            .map(|k| Complex64::from_polar(r0, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4))
            .collect();
        let mut converged = false;
        for _ in 0..1000 {
            let mut max_step = 0.0f64;
            for k in 0..deg {
                let f = p.eval(z[k]);
                if f == c0() {
                    continue;
                }
                let ratio = f / dp.eval(z[k]);
                let s: Complex64 = (0..deg)
                    .filter(|&j| j != k)
                    .map(|j| 1.0 / (z[k] - z[j]))
                    .sum();
                let step = ratio / (1.0 - ratio * s);
                if step.re.is_finite() && step.im.is_finite() {
                    z[k] -= step;
                    max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
                }
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            // Multiple roots stall the step size; accept if residuals are small.
            let scale: f64 = p.0.iter().map(|c| c.norm()).sum();
            let bad = z.iter().any(|&r| p.eval(r).norm() > 1e-8 * scale * (1.0 + r.norm()).powi(deg as i32));
            if bad {
                return Err(Error::RootConditioning(format!("Aberth iteration did not converge for degree {deg}")));
            }
        }
        for r in z.iter_mut() {
            for _ in 0..3 {
                let d = dp.eval(*r);
                if d.norm() == 0.0 {
                    break;
                }
                let step = p.eval(*r) / d;
                if step.norm() > 1e-6 * (1.0 + r.norm()) {
                    break;
                }
                *r -= step;
            }
        }
        z.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        Ok(z)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly(
            (0..n)
                .map(|k| self.0.get(k).copied().unwrap_or_else(c0) + rhs.0.get(k).copied().unwrap_or_else(c0))
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly(self.0.iter().map(|&c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![c0(); self.0.len() + rhs.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

/// Groups values that lie within `tol · (1 + |z|)` of each other.
pub fn cluster(values: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    for &v in values {
        match out
            .iter_mut()
            .find(|(c, _)| (*c - v).norm() <= tol * (1.0 + v.norm()))
        {
            Some((c, members)) => {
                members.push(v);
                *c = members.iter().sum::<Complex64>() / members.len() as f64;
            }
            None => out.push((v, vec![v])),
        }
    }
    out.into_iter().map(|(c, m)| (c, m.len())).collect()
}
