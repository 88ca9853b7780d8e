//! Closed-form Painlevé VI solutions built from Hermite–Krichever data, and
//! numerical checks of them against the equation in rational and elliptic form.
//!
//! Throughout `ω₁ = 1/2`, `ω₃ = τ/2`, `t = (e₃−e₁)/(e₂−e₁)` and
//! `λ = (b₁−e₁)/(e₂−e₁)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::fuchsian::{apparency_p_of_mu, cubic, FuchsianData};
use crate::hk::{reduce_mod2, IntegralSolution};
use crate::xi::{build_xi, XiOptions};

type C = Complex64;

/// The two families with printed closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `l = (0,0,0,0)`: `κ = (½, ½, ½, ½)`.
    L0000,
    /// `l = (1,0,0,0)`: `κ∞ = 3/2`, others `½`.
    L1000,
}

impl Family {
    pub fn l(self) -> [u32; 4] {
        match self {
            Family::L0000 => [0; 4],
            Family::L1000 => [1, 0, 0, 0],
        }
    }
}

/// The `Q = 0` sub-families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Degenerate {
    /// `μ₁ = 0` for `L0000`; `μ₁` a root of `2fμ³ − (12b²−g₂)μ² + 4` for `L1000`.
    Zero,
    E1,
    E2,
    E3,
}

impl Degenerate {
    fn index(self) -> Option<usize> {
        match self {
            Degenerate::Zero => None,
            Degenerate::E1 => Some(1),
            Degenerate::E2 => Some(2),
            Degenerate::E3 => Some(3),
        }
    }
}

/// `ω = C₁ω₃ − C₃ω₁` and `η = C₁η₃ − C₃η₁`.
pub fn selector(lat: &Lattice, c1: C, c3: C) -> (C, C) {
    (c1 * lat.omega(3) - c3 * lat.omega1, c1 * lat.eta_(3) - c3 * lat.eta_(1))
}

fn check_denominator(d: C, scale: f64, what: &str) -> Result<()> {
    if !d.is_finite() || d.norm() <= 1e-13 * scale.max(1.0) {
        return Err(Error::DegenerateSelector(format!("{what} vanishes")));
    }
    Ok(())
}

fn generic_selector(lat: &Lattice, c1: C, c3: C) -> Result<(C, C, C, C)> {
    let (w, eta) = selector(lat, c1, c3);
    if lat.distance_to_lattice(w) < 1e-10 * lat.omega1.norm() {
        return Err(Error::DegenerateSelector(format!("omega = {w} lies on the lattice")));
    }
    let (p, pp) = lat.wp_pair(w)?;
    let k = lat.zeta(w)? - eta;
    Ok((p, pp, k, w))
}

/// Hitchin's solution: `b₁ = ℘(ω) + ℘'(ω)/(2(ζ(ω) − η))`.
pub fn hitchin_b1(c1: C, c3: C, tau: C) -> Result<C> {
    let lat = Lattice::from_tau(tau)?;
    let (p, pp, k, _) = generic_selector(&lat, c1, c3)?;
    check_denominator(k, p.norm(), "zeta(omega) - eta")?;
    Ok(p + pp / (2.0 * k))
}

/// The `Q = 0` solutions of the `l = 0` family.
pub fn riccati_b1(d1: C, d3: C, tau: C, family: Degenerate) -> Result<C> {
    let lat = Lattice::from_tau(tau)?;
    let (w, h) = selector(&lat, d1, d3);
    match family.index() {
        None => {
            check_denominator(w, h.norm(), "D1 omega3 - D3 omega1")?;
            Ok(-h / w)
        }
        Some(i) => {
            let ei = lat.e_(i);
            let den = ei * w + h;
            check_denominator(den, (ei * w).norm() + h.norm(), "e_i W + H")?;
            Ok(((lat.g2 / 4.0 - 2.0 * ei * ei) * w + ei * h) / den)
        }
    }
}

/// The generic solution of the `l = (1,0,0,0)` family.
pub fn l01_b1(c1: C, c3: C, tau: C) -> Result<C> {
    let lat = Lattice::from_tau(tau)?;
    let (p, pp, k, _) = generic_selector(&lat, c1, c3)?;
    let num = 2.0 * p * k.powi(3) + 3.0 * pp * k * k + (6.0 * p * p - lat.g2) * k + p * pp;
    let den = 2.0 * (k.powi(3) - 3.0 * p * k - pp);
    check_denominator(den, 2.0 * (k.norm().powi(3) + 3.0 * (p * k).norm() + pp.norm()), "K^3 - 3 wp K - wp'")?;
    Ok(num / den)
}

/// The `Q = 0` solutions of the `l = (1,0,0,0)` family.
pub fn l01_degenerate(d1: C, d3: C, tau: C, family: Degenerate) -> Result<C> {
    let lat = Lattice::from_tau(tau)?;
    let (w, h) = selector(&lat, d1, d3);
    let (g2, g3) = (lat.g2, lat.g3);
    match family.index() {
        None => {
            let den = w * (g2 * w * w - 12.0 * h * h);
            check_denominator(den, (w * g2 * w * w).norm() + 12.0 * (w * h * h).norm(), "omega (g2 omega^2 - 12 eta^2)")?;
            Ok((4.0 * h.powi(3) + g2 * w * w * h - 2.0 * g3 * w.powi(3)) / den)
        }
        Some(i) => {
            let ei = lat.e_(i);
            let a = 6.0 * ei * ei - g2;
            let den = a * w - 6.0 * ei * h;
            check_denominator(den, (a * w).norm() + 6.0 * (ei * h).norm(), "(6e_i^2 - g2) omega - 6 e_i eta")?;
            Ok((-g2 * ei * w / 2.0 + a * h) / den)
        }
    }
}

/// `μ₁` values that go with a degenerate-family `b₁`.
pub fn degenerate_mu(family: Family, kind: Degenerate, b1: C, lat: &Lattice) -> Result<Vec<C>> {
    match (family, kind.index()) {
        (Family::L0000, None) => Ok(vec![C::new(0.0, 0.0)]),
        (Family::L0000, Some(i)) => Ok(vec![1.0 / (2.0 * (b1 - lat.e_(i)))]),
        (Family::L1000, None) => {
            let f = cubic(lat, b1);
            let p = crate::poly::Poly(vec![C::new(4.0, 0.0), C::new(0.0, 0.0), -(12.0 * b1 * b1 - lat.g2), 2.0 * f]);
            p.roots()
        }
        (Family::L1000, Some(i)) => {
            let ei = lat.e_(i);
            Ok(vec![(2.0 * b1 + ei) / (2.0 * (b1 * b1 + ei * b1 + ei * ei - lat.g2 / 4.0))])
        }
    }
}

/// `(t, λ)` for a given `b₁` on the lattice `(1, τ)`.
pub fn t_lambda(lat: &Lattice, b1: C) -> (C, C) {
    let [e1, e2, e3] = lat.e;
    ((e3 - e1) / (e2 - e1), (b1 - e1) / (e2 - e1))
}

/// `κ_i = l_i + ½` in the order `(κ₀, κ₁, κ_t, κ∞)`.
pub fn kappas(l: [u32; 4]) -> [f64; 4] {
    [l[1] as f64 + 0.5, l[2] as f64 + 0.5, l[3] as f64 + 0.5, l[0] as f64 + 0.5]
}

/// Right-hand side of the rational form given `(t, λ, λ')`.
pub fn p6_rhs(k: [f64; 4], t: C, lam: C, dlam: C) -> C {
    let [k0, k1, kt, kinf] = k;
    let one = C::new(1.0, 0.0);
    let a = 0.5 * (1.0 / lam + 1.0 / (lam - one) + 1.0 / (lam - t)) * dlam * dlam;
    let b = -(1.0 / t + 1.0 / (t - one) + 1.0 / (lam - t)) * dlam;
    let pre = lam * (lam - one) * (lam - t) / (t * t * (t - one) * (t - one));
    let brace = kinf * kinf / 2.0 - k0 * k0 / 2.0 * t / (lam * lam) + k1 * k1 / 2.0 * (t - one) / ((lam - one) * (lam - one))
        + (1.0 - kt * kt) / 2.0 * t * (t - one) / ((lam - t) * (lam - t));
    a + b + pre * brace
}

/// Residuals of a candidate solution `τ ↦ b₁(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P6Check {
    pub tau: C,
    pub t: C,
    pub lambda: C,
    /// Rational form, normalised by `max(1, |λ''|)`.
    pub residual: f64,
}

const STENCIL: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

fn d1(f: &[C; 5], h: C) -> C {
    (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h)
}

fn d2(f: &[C; 5], h: C) -> C {
    (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
}

/// Default finite-difference step `1e−4·|τ₀|`.
pub fn default_step(tau0: C) -> f64 {
    1e-4 * tau0.norm()
}

/// Checks the rational form of PVI with five-point stencils in `τ`.
pub fn verify_p6<F>(b1_of_tau: F, k: [f64; 4], tau0: C, h: f64) -> Result<P6Check>
where
    F: Fn(C) -> Result<C>,
{
    let hc = C::new(h, 0.0);
    let mut ts = [C::new(0.0, 0.0); 5];
    let mut ls = [C::new(0.0, 0.0); 5];
    for (n, s) in STENCIL.iter().enumerate() {
        let tau = tau0 + hc * *s;
        let lat = Lattice::from_tau(tau)?;
        let (t, l) = t_lambda(&lat, b1_of_tau(tau)?);
        let bad = !l.is_finite() || [l, l - 1.0, l - t].iter().any(|v| v.norm() < 1e-8);
        if bad {
            return Err(Error::StencilThroughSingularity { tau });
        }
        ts[n] = t;
        ls[n] = l;
    }
    let (t_d, t_dd) = (d1(&ts, hc), d2(&ts, hc));
    let (l_d, l_dd) = (d1(&ls, hc), d2(&ls, hc));
    let dl = l_d / t_d;
    let ddl = (l_dd - dl * t_dd) / (t_d * t_d);
    let rhs = p6_rhs(k, ts[2], ls[2], dl);
    Ok(P6Check { tau: tau0, t: ts[2], lambda: ls[2], residual: (ddl - rhs).norm() / ddl.norm().max(1.0) })
}

/// Checks `δ'' = −(1/8π²) Σ (l_i+½)² ℘'(δ + ω_i)` along the same stencil.
/// `δ` is taken on the branch continuous with the central point.
pub fn verify_p6_elliptic<F>(b1_of_tau: F, l: [u32; 4], tau0: C, h: f64) -> Result<f64>
where
    F: Fn(C) -> Result<C>,
{
    let hc = C::new(h, 0.0);
    let lat0 = Lattice::from_tau(tau0)?;
    let center = lat0.wp_inverse(b1_of_tau(tau0)?, None)?.value();
    let mut ds = [C::new(0.0, 0.0); 5];
    for (n, s) in STENCIL.iter().enumerate() {
        let tau = tau0 + hc * *s;
        let lat = Lattice::from_tau(tau)?;
        let d = lat.wp_inverse(b1_of_tau(tau)?, None)?.value();
        let mut best = (d, f64::INFINITY);
        for sign in [1.0, -1.0] {
            for m in -2..=2 {
                for k in -2..=2 {
                    let cand = sign * d + m as f64 + k as f64 * tau;
                    let dist = (cand - center).norm();
                    if dist < best.1 {
                        best = (cand, dist);
                    }
                }
            }
        }
        if best.1 > 100.0 * h.max(1e-6) * (1.0 + center.norm()) {
            return Err(Error::BranchTrackingLost(format!("delta jumped by {:e} at tau = {tau}", best.1)));
        }
        ds[n] = best.0;
    }
    let dd = d2(&ds, hc);
    let rhs: C = (0..4)
        .map(|i| {
            let c = l[i] as f64 + 0.5;
            Ok(c * c * lat0.wp_prime(ds[2] + lat0.omega(i))?)
        })
        .sum::<Result<C>>()?
        * (-1.0 / (8.0 * PI * PI));
    Ok((dd - rhs).norm() / dd.norm().max(1.0))
}

/// The Painlevé VI data attached to `(b₁, μ₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P6State {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappat: f64,
    pub kappainf: f64,
    pub tau: C,
    pub b1: C,
    pub mu1: C,
    pub lambda: C,
    pub t: C,
    pub mu: C,
    pub hvi: C,
    pub kappa_prod: C,
}

impl P6State {
    pub fn new(l: [u32; 4], b1: C, mu1: C, tau: C) -> Result<Self> {
        let lat = Lattice::from_tau(tau)?;
        let [e1, e2, e3] = lat.e;
        let (t, lambda) = t_lambda(&lat, b1);
        let mu = (e2 - e1) * mu1;
        let l123 = (l[1] + l[2] + l[3]) as f64;
        let kappa_prod = (l123 + l[0] as f64 + 1.0) * (l123 - l[0] as f64);
        let p = apparency_p_of_mu(&l, b1, mu1, &lat)?;
        let hvi = ((p + kappa_prod * e3) / (4.0 * (e2 - e1)) + lambda * (1.0 - lambda) * mu) / (t * (1.0 - t));
        let [kappa0, kappa1, kappat, kappainf] = kappas(l);
        Ok(P6State { kappa0, kappa1, kappat, kappainf, tau, b1, mu1, lambda, t, mu, hvi, kappa_prod: C::new(kappa_prod, 0.0) })
    }

    /// The Hamiltonian in canonical form with constant `κ` in its last term.
    pub fn hamiltonian(&self, kappa: f64) -> C {
        let (l, t, mu) = (self.lambda, self.t, self.mu);
        let one = C::new(1.0, 0.0);
        (l * (l - one) * (l - t) * mu * mu
            - (self.kappa0 * (l - one) * (l - t) + self.kappa1 * l * (l - t) + (self.kappat - 1.0) * l * (l - one)) * mu
            + kappa * (l - t))
            / (t * (t - one))
    }

    /// `((κ₀+κ₁+κ_t−1)² − κ∞²)/4`.
    pub fn canonical_kappa(&self) -> f64 {
        ((self.kappa0 + self.kappa1 + self.kappat - 1.0).powi(2) - self.kappainf.powi(2)) / 4.0
    }
}

/// `(℘(α), ℘'(α), κ)` for one of the closed-form families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HkClosedForm {
    pub wp_alpha: C,
    pub wp_prime_alpha: C,
    pub kappa: C,
    pub q: C,
    pub sqrt_mq: C,
}

/// `Q(b₁, μ₁)` for the closed-form families (with `Ξ` normalised as printed).
pub fn closed_form_q(family: Family, b1: C, mu1: C, lat: &Lattice) -> C {
    match family {
        Family::L0000 => 2.0 * mu1 * (1..4).map(|i| 2.0 * mu1 * (lat.e_(i) - b1) + 1.0).product::<C>(),
        Family::L1000 => {
            let f = cubic(lat, b1);
            let den = 2.0 * f * mu1.powi(3) - (12.0 * b1 * b1 - lat.g2) * mu1 * mu1 + 4.0;
            -den * (1..4)
                .map(|i| {
                    let ei = lat.e_(i);
                    2.0 * (b1 * b1 + ei * b1 + ei * ei - lat.g2 / 4.0) * mu1 - 2.0 * b1 - ei
                })
                .product::<C>()
        }
    }
}

fn nonzero(d: C, scale: f64, what: &str) -> Result<C> {
    if !d.is_finite() || d.norm() <= 1e-14 * scale.max(1.0) {
        return Err(Error::DenominatorZero(what.into()));
    }
    Ok(d)
}

/// Forward map `(b₁, μ₁) ↦ (℘(α), ℘'(α), κ)` with the principal `√(−Q)`.
pub fn hk_state_forward(family: Family, b1: C, mu1: C, lat: &Lattice) -> Result<HkClosedForm> {
    let q = closed_form_q(family, b1, mu1, lat);
    let sq = (-q).sqrt();
    let g2 = lat.g2;
    let (wp_alpha, wp_prime_alpha, kappa) = match family {
        Family::L0000 => {
            let m = nonzero(mu1, 1.0, "mu1")?;
            (b1 - 1.0 / (2.0 * m), -sq / (2.0 * m * m), sq / (2.0 * m))
        }
        Family::L1000 => {
            let f = cubic(lat, b1);
            let den = 2.0 * f * mu1.powi(3) - (12.0 * b1 * b1 - g2) * mu1 * mu1 + 4.0;
            let den = nonzero(den, 4.0, "2 f mu^3 - (12 b^2 - g2) mu^2 + 4")?;
            let p = (2.0 * f * b1 * mu1.powi(3) + (-24.0 * b1.powi(3) + 4.0 * g2 * b1 + 3.0 * lat.g3) * mu1 * mu1
                + (24.0 * b1 * b1 - 2.0 * g2) * mu1
                - 8.0 * b1)
                / den;
            let pp = -4.0 * (f * mu1.powi(3) - (12.0 * b1 * b1 - g2) * mu1 * mu1 + 12.0 * b1 * mu1 - 4.0) / (den * den) * sq;
            (p, pp, 2.0 * mu1 * sq / den)
        }
    };
    Ok(HkClosedForm { wp_alpha, wp_prime_alpha, kappa, q, sqrt_mq: sq })
}

/// Inverse map `(℘(α), ℘'(α), κ) ↦ (b₁, μ₁)`.
pub fn hk_state_inverse(family: Family, wp_alpha: C, wp_prime_alpha: C, kappa: C, lat: &Lattice) -> Result<(C, C)> {
    let (p, pp, k, g2) = (wp_alpha, wp_prime_alpha, kappa, lat.g2);
    match family {
        Family::L0000 => {
            let pp = nonzero(pp, 1.0, "wp'(alpha)")?;
            let k = nonzero(k, 1.0, "kappa")?;
            Ok((p - pp / (2.0 * k), -k / pp))
        }
        Family::L1000 => {
            let c = k.powi(3) - 3.0 * p * k + pp;
            let cden = nonzero(c, k.norm().powi(3) + pp.norm(), "kappa^3 - 3 wp kappa + wp'")?;
            let b = (2.0 * p * k.powi(3) - 3.0 * pp * k * k + (6.0 * p * p - g2) * k - p * pp) / (2.0 * cden);
            let mden = -2.0 * pp * k.powi(3) + (12.0 * p * p - g2) * k * k - 6.0 * p * pp * k + pp * pp;
            let mden = nonzero(mden, pp.norm_sqr() + (pp * k.powi(3)).norm(), "mu1 denominator")?;
            Ok((b, 2.0 * c * k / mden))
        }
    }
}

/// `(b₁, μ₁)` whose monodromy exponents are `(C₁, C₃)` on the lattice `(1, τ)`.
pub fn state_from_selector(family: Family, c1: C, c3: C, tau: C) -> Result<(C, C)> {
    let lat = Lattice::from_tau(tau)?;
    let alpha = c3 * lat.omega1 - c1 * lat.omega(3);
    if lat.distance_to_lattice(alpha) < 1e-10 {
        return Err(Error::DegenerateSelector(format!("alpha = {alpha} lies on the lattice")));
    }
    let (p, pp) = lat.wp_pair(alpha)?;
    let k = lat.zeta(-alpha)? + c3 * lat.eta_(1) - c1 * lat.eta_(3);
    hk_state_inverse(family, p, pp, k, &lat)
}

/// One grid point of an isomonodromy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoPoint {
    pub tau: C,
    pub b1: C,
    pub mu1: C,
    pub m1: C,
    pub m3: C,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoReport {
    pub points: Vec<IsoPoint>,
    /// Largest deviation of `(m₁, m₃)` (mod 2, up to the overall sign
    /// fixed by the branch of `√(−Q)`) from the first grid point.
    pub spread: f64,
}

fn mod2_distance(a: C, b: C) -> f64 {
    reduce_mod2(a - b).norm()
}

/// Multipliers measured along a `τ` grid for given `(b₁(τ), μ₁(τ))`.
pub fn isomonodromy_sweep<F>(family: Family, state: F, tau_grid: &[C], seed: u64) -> Result<IsoReport>
where
    F: Fn(C) -> Result<(C, C)>,
{
    let mut points = Vec::with_capacity(tau_grid.len());
    let mut spread = 0.0f64;
    for (n, &tau) in tau_grid.iter().enumerate() {
        let (b1, mu1) = state(tau)?;
        let lat = Lattice::from_tau(tau)?;
        let d = FuchsianData::painleve_form(lat, family.l(), b1, mu1)?;
        let xi = build_xi(&d, XiOptions { seed, ..XiOptions::default() })?;
        let sol = IntegralSolution::new(xi)?;
        let (mut m1, mut m3) = sol.monodromy_multipliers()?;
        if let Some(first) = points.first() {
            let first: &IsoPoint = first;
            let same = mod2_distance(m1, first.m1).max(mod2_distance(m3, first.m3));
            let flip = mod2_distance(-m1, first.m1).max(mod2_distance(-m3, first.m3));
            if flip < same {
                m1 = reduce_mod2(-m1);
                m3 = reduce_mod2(-m3);
            }
            let dev = mod2_distance(m1, first.m1).max(mod2_distance(m3, first.m3));
            if dev > 0.25 {
                return Err(Error::BranchJump { from: n - 1, to: n });
            }
            spread = spread.max(dev);
        }
        points.push(IsoPoint { tau, b1, mu1, m1, m3 });
    }
    Ok(IsoReport { points, spread })
}

/// Isomonodromy check for the generic member of `family` with selectors `(C₁, C₃)`.
pub fn isomonodromy_check(c1: C, c3: C, tau_grid: &[C], family: Family) -> Result<IsoReport> {
    isomonodromy_sweep(family, |tau| state_from_selector(family, c1, c3, tau), tau_grid, crate::xi::DEFAULT_SEED)
}
