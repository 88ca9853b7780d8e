//! Fuchsian equations with extra apparent singularities in algebraic,
//! elliptic and gauge form, and the Frobenius test for apparency.
//!
//! The algebraic form in `z` has singular points `e₁, e₂, e₃, b_{i'}, ∞`.
//! With `z = ℘(x)` it becomes `(H − E) f = 0`,
//!
//! ```text
//! H = −d²/dx² + v(x)
//! v = Σ l_i(l_i+1) ℘(x+ω_i) + Σ (r/2)(r/2+1)(℘(x−δ)+℘(x+δ)) + s/(℘(x)−b)
//! ```
//!
//! and conjugating by `Ψ_g = Π (℘(x)−b)^{r/2}` gives the gauge form
//! `(H_g − E − C_g) f_g = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::{wp_sum_pair, CPoint, Lattice};
use crate::error::{check_finite, Error, Result};
use crate::jet::Jet;
use crate::poly::Poly;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// `4b³ − g₂b − g₃`
pub fn cubic(lat: &Lattice, b: C) -> C {
    4.0 * b * b * b - lat.g2 * b - lat.g3
}

/// Parameters of one equation, kept in both algebraic and elliptic coordinates.
#[derive(Debug, Clone)]
pub struct FuchsianData {
    pub lattice: Lattice,
    pub l: [u32; 4],
    pub r: Vec<u32>,
    pub b: Vec<C>,
    pub delta: Vec<CPoint>,
    pub s: Vec<C>,
    pub s_tilde: Vec<C>,
    pub o: Vec<C>,
    pub e: C,
    pub p: C,
    pub cg: C,
}

/// Outcome of the Frobenius test at one singular point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Apparency {
    pub apparent: bool,
    /// Left-hand side of the compatibility condition at `j = n`.
    pub witness: C,
    /// Sum of the magnitudes of the terms entering the witness.
    pub scale: f64,
}

impl FuchsianData {
    /// Builds the data from elliptic-form parameters `(s, E)`.
    pub fn new(lattice: Lattice, l: [u32; 4], r: Vec<u32>, b: Vec<C>, s: Vec<C>, e: C) -> Result<Self> {
        validate(&lattice, &r, &b)?;
        if s.len() != r.len() {
            return Err(Error::InvalidParameter(format!("{} values of s for M = {}", s.len(), r.len())));
        }
        for &si in &s {
            check_finite(si, "s")?;
        }
        check_finite(e, "E")?;
        let shift = shifts(&lattice, &r, &b);
        let lsum = l_quadratic(&lattice, &l, &b);
        let s_tilde: Vec<C> = s.iter().zip(&shift).map(|(&si, &sh)| si - sh).collect();
        let o: Vec<C> = (0..r.len())
            .map(|k| -s[k] + shift[k] + c(r[k] as f64) * 2.0 * lsum[k])
            .collect();
        let cg = gauge_constant(&r, &b);
        let p = e + p_offset(&lattice, &l, &r, &b);
        let delta = b
            .iter()
            .map(|&bk| lattice.wp_inverse(bk, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(FuchsianData { lattice, l, r, b, delta, s, s_tilde, o, e, p, cg })
    }

    /// Builds the data from algebraic-form parameters `(o, p)`.
    pub fn from_algebraic(lattice: Lattice, l: [u32; 4], r: Vec<u32>, b: Vec<C>, o: Vec<C>, p: C) -> Result<Self> {
        validate(&lattice, &r, &b)?;
        if o.len() != r.len() {
            return Err(Error::InvalidParameter(format!("{} values of o for M = {}", o.len(), r.len())));
        }
        check_finite(p, "p")?;
        let shift = shifts(&lattice, &r, &b);
        let lsum = l_quadratic(&lattice, &l, &b);
        let s: Vec<C> = (0..r.len())
            .map(|k| -o[k] + shift[k] + c(r[k] as f64) * 2.0 * lsum[k])
            .collect();
        let e = p - p_offset(&lattice, &l, &r, &b);
        FuchsianData::new(lattice, l, r, b, s, e)
    }

    /// The `M = 1`, `r₁ = 1` equation parametrised by `(b₁, μ₁)` with `p`
    /// fixed by the apparency condition.
    pub fn painleve_form(lattice: Lattice, l: [u32; 4], b1: C, mu1: C) -> Result<Self> {
        check_finite(mu1, "mu1")?;
        validate(&lattice, &[1], &[b1])?;
        let f = cubic(&lattice, b1);
        let lsum: C = (1..=3).map(|i| c(l[i] as f64) / (2.0 * (b1 - lattice.e_(i)))).sum();
        let s_tilde = -f * (mu1 - lsum);
        let s = s_tilde + (12.0 * b1 * b1 - lattice.g2) / 8.0;
        let p = apparency_p_of_mu(&l, b1, mu1, &lattice)?;
        let e = p - p_offset(&lattice, &l, &[1], &[b1]);
        FuchsianData::new(lattice, l, vec![1], vec![b1], vec![s], e)
    }

    pub fn m(&self) -> usize {
        self.r.len()
    }

    /// `N = Σ l_i + Σ r_{i'}`.
    pub fn n_total(&self) -> u32 {
        self.l.iter().sum::<u32>() + self.r.iter().sum::<u32>()
    }

    /// `μ_{i'} = −s̃_{i'}/(4b³−g₂b−g₃) + Σ l_i/(2(b−e_i))`.
    pub fn mu(&self, k: usize) -> C {
        let b = self.b[k];
        let lsum: C = (1..=3).map(|i| c(self.l[i] as f64) / (2.0 * (b - self.lattice.e_(i)))).sum();
        -self.s_tilde[k] / cubic(&self.lattice, b) + lsum
    }

    /// `℘(x + ω_i)` as a function of `z = ℘(x)`.
    pub fn shifted_wp_jet(&self, i: usize, z: Jet) -> Jet {
        shifted_wp(&self.lattice, i, z)
    }

    /// The potential `v` as a function of `z = ℘(x)`, with z-derivatives.
    pub fn potential_jet(&self, z: C) -> Jet {
        let lat = &self.lattice;
        let zj = Jet::var(z);
        let mut v = Jet::constant(c(0.0));
        for i in 0..4 {
            let li = self.l[i] as f64;
            if li != 0.0 {
                v = v + shifted_wp(lat, i, zj) * c(li * (li + 1.0));
            }
        }
        for k in 0..self.m() {
            let rk = self.r[k] as f64;
            let b = self.b[k];
            let inv = (zj + (-b)).recip();
            // ℘(x+δ) + ℘(x−δ) = [2(z+b)(zb − g₂/4) − g₃]/(z−b)²
            let num = (zj + b) * (zj * b + (-lat.g2 / 4.0)) * c(2.0) + (-lat.g3);
            v = v + num * inv * inv * c(rk / 2.0 * (rk / 2.0 + 1.0)) + inv * self.s[k];
        }
        v
    }

    /// `v(x)`.
    pub fn potential(&self, x: C) -> Result<C> {
        let z = self.lattice.wp(x)?;
        Ok(self.potential_jet(z).value())
    }

    /// `v(x)` and `v'(x)`.
    pub fn potential_with_derivative(&self, x: C) -> Result<(C, C)> {
        let (z, zp) = self.lattice.wp_pair(x)?;
        let j = self.potential_jet(z);
        Ok((j.value(), j.deriv(1) * zp))
    }

    /// Cross-check of `℘(x+δ)+℘(x−δ)` through the addition formula.
    pub fn pair_potential(&self, k: usize, x: C) -> Result<C> {
        let z = self.lattice.wp(x)?;
        Ok(wp_sum_pair(self.lattice.g2, self.lattice.g3, z, self.b[k]).0)
    }

    /// `Ψ_g(x)²  = Π (℘(x) − b)^{r}`, single-valued.
    pub fn psi_g_squared(&self, x: C) -> Result<C> {
        let z = self.lattice.wp(x)?;
        Ok(self.psi_g_squared_z(z))
    }

    pub fn psi_g_squared_z(&self, z: C) -> C {
        self.r
            .iter()
            .zip(&self.b)
            .map(|(&rk, &bk)| (z - bk).powu(rk))
            .product()
    }

    /// `Ψ_g(x)` on the principal branch of each factor.
    pub fn psi_g(&self, x: C) -> Result<C> {
        let z = self.lattice.wp(x)?;
        Ok(self
            .r
            .iter()
            .zip(&self.b)
            .map(|(&rk, &bk)| (z - bk).powf(rk as f64 / 2.0))
            .product())
    }

    /// `Ψ_g'/Ψ_g` and `Ψ_g''/Ψ_g`.
    pub fn psi_g_log_derivs(&self, x: C) -> Result<(C, C)> {
        let (z, zp) = self.lattice.wp_pair(x)?;
        let zpp = 6.0 * z * z - self.lattice.g2 / 2.0;
        let mut l1 = c(0.0);
        let mut dl1 = c(0.0);
        for (&rk, &bk) in self.r.iter().zip(&self.b) {
            let h = rk as f64 / 2.0;
            let u = 1.0 / (z - bk);
            l1 += h * zp * u;
            dl1 += h * (zpp * u - zp * zp * u * u);
        }
        Ok((l1, dl1 + l1 * l1))
    }

    /// Coefficients of the gauge equation written as
    /// `f'' = A(x) f' + (V(x) − E − C_g) f`; returns `(A, V − E − C_g)`.
    pub fn gauge_coeffs(&self, x: C) -> Result<(C, C)> {
        let lat = &self.lattice;
        let (z, zp) = lat.wp_pair(x)?;
        let zj = Jet::var(z);
        let rtot: u32 = self.r.iter().sum();
        let l0 = self.l[0] as f64;
        let rt = rtot as f64;
        let mut a = c(0.0);
        let mut v = c((l0 + rt) * (l0 + 1.0 - rt)) * z;
        for i in 1..4 {
            let li = self.l[i] as f64;
            if li != 0.0 {
                v += li * (li + 1.0) * shifted_wp(lat, i, zj).value();
            }
        }
        for k in 0..self.m() {
            let u = 1.0 / (z - self.b[k]);
            a += self.r[k] as f64 * zp * u;
            v += self.s_tilde[k] * u;
        }
        Ok((a, v - self.e - self.cg))
    }

    /// Coefficients of the algebraic form `f'' + P(z) f' + R(z) f = 0`.
    pub fn algebraic_coeffs(&self, z: C) -> (C, C) {
        let lat = &self.lattice;
        let n = self.n_total() as f64;
        let l0 = self.l[0] as f64;
        let mut pz = c(0.0);
        for i in 1..4 {
            pz += (0.5 - self.l[i] as f64) / (z - lat.e_(i));
        }
        let mut num = n * (n - 2.0 * l0 - 1.0) * z + self.p;
        for k in 0..self.m() {
            pz -= self.r[k] as f64 / (z - self.b[k]);
            num += self.o[k] / (z - self.b[k]);
        }
        let den = 4.0 * (z - lat.e[0]) * (z - lat.e[1]) * (z - lat.e[2]);
        (pz, num / den)
    }

    fn algebraic_radius(&self, k: usize) -> f64 {
        let b = self.b[k];
        let mut d = self.lattice.e.iter().map(|&e| (b - e).norm()).fold(f64::INFINITY, f64::min);
        for (j, &bj) in self.b.iter().enumerate() {
            if j != k {
                d = d.min((b - bj).norm());
            }
        }
        d / 3.0
    }

    /// Laurent data of the algebraic form at `z = b_k`.
    pub fn local_expansion_algebraic(&self, k: usize) -> Result<LocalExpansion> {
        let b = self.b[k];
        let rad = self.algebraic_radius(k);
        let need = self.r[k] as usize + 2;
        LocalExpansion::from_functions(b, rad, need, |z| {
            let (pz, rz) = self.algebraic_coeffs(z);
            Ok((pz * (z - b), rz * (z - b) * (z - b)))
        })
    }

    /// Laurent data of the gauge form at `x = δ_k`.
    pub fn local_expansion_gauge(&self, k: usize) -> Result<LocalExpansion> {
        let lat = &self.lattice;
        let d = self.delta[k].value();
        let mut dist = lat.distance_mod(2.0 * d, c(0.0));
        for i in 0..4 {
            dist = dist.min(lat.distance_mod(d, lat.omega(i)));
        }
        for (j, dj) in self.delta.iter().enumerate() {
            if j != k {
                dist = dist.min(lat.distance_mod(d, dj.value())).min(lat.distance_mod(d, -dj.value()));
            }
        }
        let need = self.r[k] as usize + 2;
        LocalExpansion::from_functions(d, dist / 3.0, need, |x| {
            let (a, w) = self.gauge_coeffs(x)?;
            Ok((-a * (x - d), -w * (x - d) * (x - d)))
        })
    }

    /// Frobenius test at `z = b_k`.
    pub fn apparency(&self, k: usize) -> Result<Apparency> {
        frobenius_is_apparent(&self.local_expansion_algebraic(k)?)
    }

    /// Errors with `NotApparent` unless every `b_k` passes the Frobenius test.
    pub fn check_apparent(&self) -> Result<()> {
        for k in 0..self.m() {
            let a = self.apparency(k)?;
            if !a.apparent {
                return Err(Error::NotApparent { index: k + 1, witness: a.witness });
            }
        }
        Ok(())
    }

    /// Value of `p` required for apparency when `M = 1`, `r₁ = 1`
    /// (the recursion is linear in `p` when everything else is fixed).
    pub fn p_required(&self) -> Result<C> {
        if self.m() != 1 || self.r[0] != 1 {
            return Err(Error::InvalidParameter("p_required needs M = 1, r1 = 1".into()));
        }
        apparency_p_of_mu(&self.l, self.b[0], self.mu(0), &self.lattice)
    }

    /// Monodromy of the gauge equation along a circle of `radius` around
    /// `center`, as the matrix acting on the standard fundamental system
    /// (columns `(f, f')` with initial values `e₁`, `e₂`).
    pub fn gauge_local_monodromy(&self, center: C, radius: f64, sides: usize) -> Result<[[C; 2]; 2]> {
        let pts: Vec<C> = (0..=sides)
            .map(|k| center + C::from_polar(radius, 2.0 * PI * k as f64 / sides as f64))
            .collect();
        let rhs = |x: C, y: &[C; 2]| -> Result<[C; 2]> {
            let (a, w) = self.gauge_coeffs(x)?;
            Ok([y[1], a * y[1] + w * y[0]])
        };
        let col0 = crate::quad::ode_path(rhs, &pts, [c(1.0), c(0.0)], 1e-12)?;
        let col1 = crate::quad::ode_path(rhs, &pts, [c(0.0), c(1.0)], 1e-12)?;
        Ok([[col0[0], col1[0]], [col0[1], col1[1]]])
    }
}

fn validate(lat: &Lattice, r: &[u32], b: &[C]) -> Result<()> {
    if r.len() != b.len() {
        return Err(Error::InvalidParameter(format!("{} exponents r for {} points b", r.len(), b.len())));
    }
    if r.contains(&0) {
        return Err(Error::InvalidParameter("exponent gaps r must be positive".into()));
    }
    let scale = 1.0 + lat.e.iter().map(|e| e.norm()).fold(0.0, f64::max);
    for (k, &bk) in b.iter().enumerate() {
        check_finite(bk, "b")?;
        for (i, &ei) in lat.e.iter().enumerate() {
            if (bk - ei).norm() < 1e-10 * scale {
                return Err(Error::SingularCollision(format!("b{} = {bk} coincides with e{}", k + 1, i + 1)));
            }
        }
        for (j, &bj) in b.iter().enumerate().skip(k + 1) {
            if (bk - bj).norm() < 1e-10 * scale {
                return Err(Error::SingularCollision(format!("b{} and b{} coincide", k + 1, j + 1)));
            }
        }
    }
    Ok(())
}

// r{ r(12b²−g₂)/8 + f(b)/2 Σ_{j≠k} r_j/(b−b_j) }
fn shifts(lat: &Lattice, r: &[u32], b: &[C]) -> Vec<C> {
    (0..r.len())
        .map(|k| {
            let rk = r[k] as f64;
            let bk = b[k];
            let others: C = (0..r.len())
                .filter(|&j| j != k)
                .map(|j| r[j] as f64 / (bk - b[j]))
                .sum();
            rk * (rk * (12.0 * bk * bk - lat.g2) / 8.0 + cubic(lat, bk) / 2.0 * others)
        })
        .collect()
}

// l₁(b−e₂)(b−e₃) + l₂(b−e₁)(b−e₃) + l₃(b−e₁)(b−e₂)
fn l_quadratic(lat: &Lattice, l: &[u32; 4], b: &[C]) -> Vec<C> {
    let [e1, e2, e3] = lat.e;
    b.iter()
        .map(|&bk| {
            l[1] as f64 * (bk - e2) * (bk - e3) + l[2] as f64 * (bk - e1) * (bk - e3) + l[3] as f64 * (bk - e1) * (bk - e2)
        })
        .collect()
}

fn gauge_constant(r: &[u32], b: &[C]) -> C {
    let rsum: f64 = r.iter().map(|&x| x as f64).sum();
    let br: C = r.iter().zip(b).map(|(&rk, &bk)| bk * rk as f64).sum();
    let br2: C = r.iter().zip(b).map(|(&rk, &bk)| bk * (rk * rk) as f64).sum();
    -0.5 * br2 + 2.0 * br * rsum
}

// p − E
fn p_offset(lat: &Lattice, l: &[u32; 4], r: &[u32], b: &[C]) -> C {
    let [e1, e2, e3] = lat.e;
    let lf = l.map(|x| x as f64);
    let mut out = e1 * lf[1] * lf[1] + e2 * lf[2] * lf[2] + e3 * lf[3] * lf[3]
        - 2.0 * (lf[1] * lf[2] * e3 + lf[2] * lf[3] * e1 + lf[3] * lf[1] * e2);
    for (&rk, &bk) in r.iter().zip(b) {
        for i in 1..4 {
            out += 2.0 * lf[i] * rk as f64 * (lat.e_(i) + bk);
        }
    }
    out + gauge_constant(r, b)
}

fn shifted_wp(lat: &Lattice, i: usize, z: Jet) -> Jet {
    if i == 0 {
        return z;
    }
    let ei = lat.e_(i);
    let (ej, ek) = match i {
        1 => (lat.e[1], lat.e[2]),
        2 => (lat.e[0], lat.e[2]),
        _ => (lat.e[0], lat.e[1]),
    };
    (z + (-ei)).recip() * ((ei - ej) * (ei - ek)) + ei
}

/// Value of `p` making `z = b₁` apparent for `M = 1`, `r₁ = 1`:
///
/// ```text
/// p = f(b₁){−μ₁² + Σ (l_i+½)/(b₁−e_i) μ₁} − b₁(l₁+l₂+l₃−l₀)(l₁+l₂+l₃+l₀+1)
/// ```
pub fn apparency_p_of_mu(l: &[u32; 4], b1: C, mu1: C, lat: &Lattice) -> Result<C> {
    validate(lat, &[1], &[b1])?;
    let lf = l.map(|x| x as f64);
    let f = cubic(lat, b1);
    let lin: C = (1..=3).map(|i| (lf[i] + 0.5) / (b1 - lat.e_(i))).sum();
    let l123 = lf[1] + lf[2] + lf[3];
    Ok(f * (-mu1 * mu1 + lin * mu1) - b1 * (l123 - lf[0]) * (l123 + lf[0] + 1.0))
}

/// Coefficients `[f₀(b), f₁(b) + 4f(b)E, 12b² − g₂, 1]` (ascending) of the
/// cubic in `s₁` whose roots make `M = 1`, `r₁ = 2` apparent.
pub fn apparency_cubic_r2(l: &[u32; 4], b1: C, e: C, lat: &Lattice) -> [C; 4] {
    let (f0, f1) = f0_f1_polys(l, lat);
    [
        f0.eval(b1),
        4.0 * cubic(lat, b1) * e + f1.eval(b1),
        12.0 * b1 * b1 - lat.g2,
        c(1.0),
    ]
}

/// The polynomials `f₀(b)` and `f₁(b)` of the `r₁ = 2` apparency cubic.
pub fn f0_f1_polys(l: &[u32; 4], lat: &Lattice) -> (Poly, Poly) {
    let lf = l.map(|x| x as f64);
    let [e1, e2, e3] = lat.e;
    let x = Poly(vec![c(0.0), c(1.0)]);
    let lin = |a: C| Poly::linear_root(a);
    let k = |v: C| Poly::constant(v);
    let fb = Poly(vec![-lat.g3, -lat.g2, c(0.0), c(4.0)]);
    let h = Poly(vec![-lat.g2 / 2.0, c(0.0), c(6.0)]);
    let others = [(e2, e3), (e1, e3), (e1, e2)];

    let mut f1 = &(&x * &fb).scale(c(-2.0 * (2.0 * lf[0] * lf[0] + 2.0 * lf[0] + 5.0))) + &(&h * &h);
    for i in 0..3 {
        let ei = lat.e[i];
        let (ej, ek) = others[i];
        let li = lf[i + 1];
        let w = 2.0 * li * li + 2.0 * li + 1.0;
        let term = &(&lin(ej) * &lin(ek)) * &(&x.scale(ei) + &k(ei * ei + ej * ek));
        f1 = &f1 - &term.scale(c(8.0 * w));
    }

    let mut f0 = (&fb * &fb).scale(c((2.0 * lf[0] + 1.0).powi(2)));
    for i in 0..3 {
        let ei = lat.e[i];
        let (ej, ek) = others[i];
        let w = (2.0 * lf[i + 1] + 1.0).powi(2);
        let sq = &(&lin(ej) * &lin(ej)) * &(&lin(ek) * &lin(ek));
        f0 = &f0 - &sq.scale(16.0 * w * (ei - ej) * (ei - ek));
    }
    (f0, f1)
}

/// Local data of `f'' + Σ p_j (x−a)^{j−1} f' + Σ q_j (x−a)^{j−2} f = 0`.
#[derive(Debug, Clone)]
pub struct LocalExpansion {
    pub a: C,
    /// Exponent gap `α₂ − α₁`.
    pub n: usize,
    pub alpha1: C,
    pub p: Vec<C>,
    pub q: Vec<C>,
    /// Frobenius coefficients `c₀ = 1, c₁, …, c_{n−1}`.
    pub c: Vec<C>,
}

impl LocalExpansion {
    /// From Laurent coefficients; the exponents come from `F(t) = t² + (p₀−1)t + q₀`.
    pub fn from_laurent(a: C, p: Vec<C>, q: Vec<C>) -> Result<Self> {
        if p.is_empty() || q.is_empty() {
            return Err(Error::InsufficientCoefficients { need: 1, have: 0 });
        }
        let b = p[0] - 1.0;
        let disc = (b * b - 4.0 * q[0]).sqrt();
        let (mut t1, mut t2) = ((-b - disc) / 2.0, (-b + disc) / 2.0);
        if (t2 - t1).re < 0.0 {
            std::mem::swap(&mut t1, &mut t2);
        }
        let gap = t2 - t1;
        let n = gap.re.round();
        if (gap - n).norm() > 1e-6 * (1.0 + gap.norm()) || n < 1.0 {
            return Err(Error::InvalidParameter(format!("exponent gap {gap} is not a positive integer")));
        }
        let n = n as usize;
        if p.len() <= n || q.len() <= n {
            return Err(Error::InsufficientCoefficients { need: n + 1, have: p.len().min(q.len()) });
        }
        let mut le = LocalExpansion { a, n, alpha1: t1, p, q, c: vec![c(1.0)] };
        for j in 1..n {
            let s: C = (0..j).map(|jp| le.term(j, jp)).sum();
            let cj = -s / le.indicial(t1 + j as f64);
            le.c.push(cj);
        }
        Ok(le)
    }

    /// Samples `(x−a)P(x)` and `(x−a)²Q(x)` on a circle of `radius` and
    /// extracts `count` Laurent coefficients by a 64-point DFT.
    pub fn from_functions<F>(a: C, radius: f64, count: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(C) -> Result<(C, C)>,
    {
        const K: usize = 64;
        let mut pc = vec![c(0.0); count];
        let mut qc = vec![c(0.0); count];
        for k in 0..K {
            let u = C::from_polar(1.0, 2.0 * PI * k as f64 / K as f64);
            let (pv, qv) = f(a + radius * u)?;
            let mut w = c(1.0);
            let uc = u.conj();
            for j in 0..count {
                pc[j] += pv * w;
                qc[j] += qv * w;
                w *= uc;
            }
        }
        for j in 0..count {
            let s = 1.0 / (K as f64 * radius.powi(j as i32));
            pc[j] *= s;
            qc[j] *= s;
        }
        LocalExpansion::from_laurent(a, pc, qc)
    }

    pub fn indicial(&self, t: C) -> C {
        t * t + (self.p[0] - 1.0) * t + self.q[0]
    }

    fn term(&self, j: usize, jp: usize) -> C {
        ((self.alpha1 + jp as f64) * self.p[j - jp] + self.q[j - jp]) * self.c[jp]
    }
}

/// Evaluates the compatibility condition at `j = n` of the Frobenius recursion.
pub fn frobenius_is_apparent(le: &LocalExpansion) -> Result<Apparency> {
    let n = le.n;
    if le.p.len() <= n || le.q.len() <= n {
        return Err(Error::InsufficientCoefficients { need: n + 1, have: le.p.len().min(le.q.len()) });
    }
    let mut witness = c(0.0);
    let mut scale = 0.0;
    for jp in 0..n {
        let a = (le.alpha1 + jp as f64) * le.p[n - jp] * le.c[jp];
        let b = le.q[n - jp] * le.c[jp];
        witness += a + b;
        scale += a.norm() + b.norm();
    }
    // All witness terms can be tiny at once; the local coefficients give the floor.
    let floor: f64 = (0..=n).map(|j| (le.alpha1 * le.p[j]).norm() + le.q[j].norm()).sum();
    let scale = scale.max(floor).max(f64::MIN_POSITIVE);
    Ok(Apparency { apparent: witness.norm() <= 1e-9 * scale, witness, scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn lat() -> Lattice {
        Lattice::new(cc(0.5, 0.0), cc(0.13, 0.61)).unwrap()
    }

    #[test]
    fn no_extra_singularities() {
        let lattice = lat();
        let l = [2, 1, 0, 3];
        let e = cc(0.7, -0.2);
        let d = FuchsianData::new(lattice.clone(), l, vec![], vec![], vec![], e).unwrap();
        let [e1, e2, e3] = lattice.e;
        let expect = e + e1 + e3 * 9.0 - 2.0 * (3.0 * e2);
        assert!((d.p - expect).norm() < 1e-12);
        assert_eq!(d.cg, cc(0.0, 0.0));
        assert!(d.o.is_empty() && d.s_tilde.is_empty());
        let zero = FuchsianData::new(lattice, [0; 4], vec![], vec![], vec![], e).unwrap();
        assert_eq!(zero.p, e);
        assert_eq!(zero.potential(cc(0.2, 0.1)).unwrap(), cc(0.0, 0.0));
    }

    #[test]
    fn gauge_constant_single_point() {
        let b = cc(0.3, 0.4);
        let d = FuchsianData::new(lat(), [0; 4], vec![1], vec![b], vec![cc(1.0, 0.0)], cc(0.0, 0.0)).unwrap();
        assert!((d.cg - 1.5 * b).norm() < 1e-14);
    }

    #[test]
    fn algebraic_roundtrip() {
        let lattice = lat();
        let d = FuchsianData::new(
            lattice.clone(),
            [1, 0, 2, 1],
            vec![1, 2],
            vec![cc(0.3, 0.4), cc(-1.1, 0.2)],
            vec![cc(0.5, -0.5), cc(2.0, 1.0)],
            cc(-0.4, 0.9),
        )
        .unwrap();
        let back = FuchsianData::from_algebraic(lattice, d.l, d.r.clone(), d.b.clone(), d.o.clone(), d.p).unwrap();
        for k in 0..2 {
            assert!((back.s[k] - d.s[k]).norm() < 1e-10);
        }
        assert!((back.e - d.e).norm() < 1e-10);
    }

    #[test]
    fn collisions_are_rejected() {
        let lattice = lat();
        let e1 = lattice.e[0];
        let err = FuchsianData::new(lattice.clone(), [0; 4], vec![1], vec![e1], vec![cc(0.0, 0.0)], cc(0.0, 0.0));
        assert!(matches!(err, Err(Error::SingularCollision(_))));
        let err = FuchsianData::new(lattice, [0; 4], vec![0], vec![cc(0.3, 0.0)], vec![cc(0.0, 0.0)], cc(0.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn painleve_form_is_apparent_and_perturbation_is_not() {
        let lattice = lat();
        for l in [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 2, 0]] {
            let d = FuchsianData::painleve_form(lattice.clone(), l, cc(0.37, -0.21), cc(0.8, 0.3)).unwrap();
            let a = d.apparency(0).unwrap();
            assert!(a.apparent, "l = {l:?}: witness {}", a.witness);
            let g = frobenius_is_apparent(&d.local_expansion_gauge(0).unwrap()).unwrap();
            assert!(g.apparent, "gauge form l = {l:?}: witness {}", g.witness);
            let bad = FuchsianData::from_algebraic(lattice.clone(), l, d.r.clone(), d.b.clone(), d.o.clone(), d.p + 1e-3).unwrap();
            assert!(!bad.apparency(0).unwrap().apparent);
        }
    }

    #[test]
    fn printed_specialisations_of_p() {
        let lattice = lat();
        let (b, mu) = (cc(0.2, 0.5), cc(-0.3, 0.7));
        let f = cubic(&lattice, b);
        let base = -f * mu * mu + (6.0 * b * b - lattice.g2 / 2.0) * mu;
        let p0 = apparency_p_of_mu(&[0; 4], b, mu, &lattice).unwrap();
        let p1 = apparency_p_of_mu(&[1, 0, 0, 0], b, mu, &lattice).unwrap();
        assert!((p0 - base).norm() < 1e-12);
        assert!((p1 - base - 2.0 * b).norm() < 1e-12);
        assert_eq!(apparency_p_of_mu(&[0; 4], b, cc(0.0, 0.0), &lattice).unwrap(), cc(0.0, 0.0));
    }

    #[test]
    fn first_order_gap_condition() {
        // n = 1: condition is q₁ + α₁ p₁ = 0
        let le = LocalExpansion::from_laurent(cc(0.0, 0.0), vec![cc(0.0, 0.0), cc(2.0, 0.0)], vec![cc(0.0, 0.0), cc(0.0, 0.0)]).unwrap();
        assert_eq!(le.n, 1);
        let a = frobenius_is_apparent(&le).unwrap();
        assert!(a.apparent);
        let le = LocalExpansion::from_laurent(cc(0.0, 0.0), vec![cc(0.0, 0.0), cc(2.0, 0.0)], vec![cc(0.0, 0.0), cc(0.5, 0.0)]).unwrap();
        let a = frobenius_is_apparent(&le).unwrap();
        assert!(!a.apparent);
        assert!((a.witness - 0.5).norm() < 1e-15);
    }

    #[test]
    fn r2_cubic_roots_are_apparent() {
        let lattice = lat();
        let (b, e) = (cc(0.41, 0.17), cc(1.3, -0.6));
        let l = [1, 0, 1, 0];
        let cubic_s = Poly(apparency_cubic_r2(&l, b, e, &lattice).to_vec());
        for s in cubic_s.roots().unwrap() {
            let d = FuchsianData::new(lattice.clone(), l, vec![2], vec![b], vec![s], e).unwrap();
            let a = d.apparency(0).unwrap();
            assert!(a.apparent, "s = {s}: witness {:e}", a.witness.norm() / a.scale);
        }
    }

    #[test]
    fn f0_has_degree_six_and_matches_printed_form() {
        let lattice = lat();
        let l = [1, 2, 0, 1];
        let (f0, f1) = f0_f1_polys(&l, &lattice);
        assert_eq!(f0.degree(), Some(6));
        assert!((f0.leading() - 16.0 * 9.0).norm() < 1e-12);
        let [e1, e2, e3] = lattice.e;
        let b = cc(0.3, -0.8);
        let fb = cubic(&lattice, b);
        let direct = 9.0 * fb * fb
            - 16.0 * 25.0 * (e1 - e2) * (e1 - e3) * (b - e2).powi(2) * (b - e3).powi(2)
            - 16.0 * 1.0 * (e2 - e1) * (e2 - e3) * (b - e1).powi(2) * (b - e3).powi(2)
            - 16.0 * 9.0 * (e3 - e1) * (e3 - e2) * (b - e1).powi(2) * (b - e2).powi(2);
        assert!((f0.eval(b) - direct).norm() < 1e-10 * direct.norm());
        let h = 6.0 * b * b - lattice.g2 / 2.0;
        let direct1 = -2.0 * 9.0 * b * fb + h * h
            - 8.0 * 13.0 * (b - e2) * (b - e3) * (e1 * b + e1 * e1 + e2 * e3)
            - 8.0 * 1.0 * (b - e1) * (b - e3) * (e2 * b + e2 * e2 + e1 * e3)
            - 8.0 * 5.0 * (b - e1) * (b - e2) * (e3 * b + e3 * e3 + e1 * e2);
        assert!((f1.eval(b) - direct1).norm() < 1e-10 * direct1.norm());
    }
}
