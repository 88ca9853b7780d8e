//! Spectral polynomials of Treibich–Verdier potentials (`M = 0`) and of the
//! `M = 1`, `r₁ = 2`, `s₁ = 0` potentials.
//!
//! `Ξ` is computed by collocation at each sampled `E` and normalised so that
//! `Ξ̂(x*) = 1`. The polynomial dependence on `E` is then recovered by fitting
//! `σ(E)·ĉ_k(E) = P_k(E)` with `deg σ = deg P_k = g`, which is linear in the
//! unknown coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::fuchsian::{f0_f1_polys, FuchsianData};
use crate::hk::IntegralSolution;
use crate::linalg::{lstsq, nullspace, CMatrix, CVector};
use crate::poly::Poly;
use crate::xi::{build_xi, q_value, random_points, structural_points, XiFunction, XiOptions};

type C = Complex64;

/// Largest gap number tried by the degree detection.
pub const G_MAX: usize = 10;

/// Relative singular-value floor below which a degree is accepted.
const FIT_TOL: f64 = 1e-9;

/// Spectral data of a finite-gap potential.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub g: usize,
    /// `xi_poly[i]` holds the basis-term coefficients of `E^i` in `Ξ`.
    pub xi_poly: Vec<Vec<C>>,
    /// Monic `Q(E)`, ascending coefficients, degree `2g+1`.
    pub q_poly: Poly,
    pub band_edges: Vec<C>,
    /// Worst relative residual of the two fits.
    pub fit_residual: f64,
    base: FuchsianData,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    pub g: usize,
    #[serde(rename = "Q_coeffs")]
    pub q_coeffs: Vec<C>,
    pub band_edges: Vec<C>,
    pub fit_residual: f64,
}

impl SpectralData {
    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            g: self.g,
            q_coeffs: self.q_poly.coeffs().to_vec(),
            band_edges: self.band_edges.clone(),
            fit_residual: self.fit_residual,
        }
    }

    pub fn data_at(&self, e: C) -> Result<FuchsianData> {
        let b = &self.base;
        FuchsianData::new(b.lattice.clone(), b.l, b.r.clone(), b.b.clone(), b.s.clone(), e)
    }

    /// `Ξ` at a fixed `E`, with the monic-in-`E` normalisation.
    pub fn xi_at(&self, e: C) -> Result<XiFunction> {
        let mut coeffs = vec![C::new(0.0, 0.0); self.xi_poly[0].len()];
        let mut pow = C::new(1.0, 0.0);
        for row in &self.xi_poly {
            for (c, v) in coeffs.iter_mut().zip(row) {
                *c += v * pow;
            }
            pow *= e;
        }
        XiFunction::from_coeffs(self.data_at(e)?, &coeffs)
    }

    /// Largest gap between `Q_poly(E)` and the invariant of `Ξ(E)` over
    /// `count` random `E`, relative to `Σ|q_j||E|^j`.
    pub fn spot_check(&self, count: usize, seed: u64) -> Result<f64> {
        let radius = sample_radius(&self.base);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..count {
            let e = C::from_polar(radius * rng.random_range(0.1..0.9), rng.random_range(0.0..2.0 * PI));
            let direct = q_value(&self.xi_at(e)?)?;
            let poly = self.q_poly.eval(e);
            let size: f64 = self.q_poly.coeffs().iter().enumerate().map(|(j, c)| c.norm() * e.norm().powi(j as i32)).sum();
            worst = worst.max((direct - poly).norm() / size.max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }

    /// `Λ_g(x+2ω_j)/Λ_g(x)` for `j = 1, 3` at each band edge.
    pub fn band_edge_multipliers(&self) -> Result<Vec<[C; 2]>> {
        self.band_edges
            .iter()
            .map(|&e| {
                let sol = IntegralSolution::new(self.xi_at(e)?)?;
                let x = sol.basepoint;
                Ok([sol.direct_multiplier(x, 1)?, sol.direct_multiplier(x, 3)?])
            })
            .collect()
    }
}

fn sample_radius(d: &FuchsianData) -> f64 {
    let emax = d.lattice.e.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let bmax = d.b.iter().map(|b| b.norm()).fold(emax, f64::max);
    let weight: f64 = d.l.iter().map(|&l| (l * (l + 1)) as f64).sum::<f64>()
        + d.r.iter().map(|&r| (2 * r * (r + 1)) as f64).sum::<f64>();
    2.0 * (1.0 + weight) * bmax.max(1e-3)
}

fn circle(n: usize, radius: f64) -> Vec<C> {
    (0..n).map(|k| C::from_polar(radius, 2.0 * PI * (k as f64 + 0.1) / n as f64)).collect()
}

fn horner(coeffs: &[C], u: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * u + c)
}

/// `Ξ̂` at each sample, normalised by its value at `x*`.
fn normalised_samples(base: &FuchsianData, es: &[C], xstar_z: C, seed: u64) -> Result<Vec<Vec<C>>> {
    es.iter()
        .map(|&e| {
            let d = FuchsianData::new(base.lattice.clone(), base.l, base.r.clone(), base.b.clone(), base.s.clone(), e)?;
            let xi = build_xi(&d, XiOptions { seed, ..XiOptions::default() })?;
            let v = xi.jet_z(xstar_z).value();
            if v.norm() < 1e-12 {
                return Err(Error::RootConditioning(format!("Xi vanishes at the reference point for E = {e}")));
            }
            Ok(xi.coefficients().iter().map(|c| c / v).collect())
        })
        .collect()
}

/// Solves `σ(u)ĉ_k(u) = P_k(u)` for degree `g`; returns `P` (per power of `u`)
/// and the relative size of the smallest singular value.
fn rational_fit(us: &[C], chat: &[Vec<C>], g: usize) -> Result<(Vec<Vec<C>>, f64)> {
    let k = chat[0].len();
    let n = g + 1;
    let mut a = CMatrix::zeros(us.len() * k, n * (k + 1));
    for (s, &u) in us.iter().enumerate() {
        let pows: Vec<C> = (0..n).map(|j| u.powi(j as i32)).collect();
        for t in 0..k {
            let row = s * k + t;
            for j in 0..n {
                a[(row, j)] = pows[j] * chat[s][t];
                a[(row, n * (t + 1) + j)] = -pows[j];
            }
        }
    }
    let ns = nullspace(&a, 1.0)?;
    let ratio = ns.smallest_ratio();
    let v = ns.basis.last().ok_or_else(|| Error::NoConvergence("empty rational fit".into()))?;
    let p = (0..n).map(|j| (0..k).map(|t| v[n * (t + 1) + j]).collect()).collect();
    Ok((p, ratio))
}

fn spectral_poly(base: FuchsianData, seed: u64) -> Result<SpectralData> {
    let lat = base.lattice.clone();
    let radius = sample_radius(&base);
    let xstar = random_points(&lat, &structural_points(&base), 1, 0.1 * lat.omega1.norm(), seed ^ 0x5eed)[0];
    let xstar_z = lat.wp(xstar)?;
    let mut best = f64::INFINITY;
    for g in 0..=G_MAX {
        let es = circle(4 * g + 6, radius);
        let us: Vec<C> = es.iter().map(|e| e / radius).collect();
        let chat = normalised_samples(&base, &es, xstar_z, seed)?;
        let (p_u, ratio) = rational_fit(&us, &chat, g)?;
        best = best.min(ratio);
        if ratio > FIT_TOL {
            continue;
        }
        // Q at the samples from the polynomial Ξ, then a degree 2g+1 fit in u.
        let nq = 2 * g + 2;
        let mut a = CMatrix::zeros(es.len(), nq);
        let mut rhs = CVector::zeros(es.len());
        for (s, (&e, &u)) in es.iter().zip(&us).enumerate() {
            let coeffs: Vec<C> = (0..p_u[0].len())
                .map(|t| horner(&p_u.iter().map(|row| row[t]).collect::<Vec<_>>(), u))
                .collect();
            let d = FuchsianData::new(lat.clone(), base.l, base.r.clone(), base.b.clone(), base.s.clone(), e)?;
            rhs[s] = q_value(&XiFunction::from_coeffs(d, &coeffs)?)?;
            for j in 0..nq {
                a[(s, j)] = u.powi(j as i32);
            }
        }
        let (qu, qres) = lstsq(&a, &rhs)?;
        if qres > 1e-8 {
            return Err(Error::FitResidualTooLarge { residual: qres, tolerance: 1e-8 });
        }
        let q_e: Vec<C> = qu.iter().enumerate().map(|(j, c)| c / radius.powi(j as i32)).collect();
        let lead = q_e[nq - 1];
        if qu[nq - 1].norm() < 1e-10 * qu.iter().map(|c| c.norm()).fold(0.0, f64::max) {
            return Err(Error::RootConditioning("Q(E) lost its leading coefficient".into()));
        }
        let q_poly = Poly(q_e.iter().map(|c| c / lead).collect());
        let s = 1.0 / lead.sqrt();
        let xi_poly = p_u
            .iter()
            .enumerate()
            .map(|(j, row)| row.iter().map(|c| c * s / radius.powi(j as i32)).collect())
            .collect();
        let band_edges = q_poly.roots()?;
        return Ok(SpectralData { g, xi_poly, q_poly, band_edges, fit_residual: ratio.max(qres), base });
    }
    Err(Error::DegreeDetectionFailed { g_max: G_MAX, residual: best })
}

/// Spectral data of `v = Σ l_i(l_i+1)℘(x+ω_i)`.
pub fn spectral_poly_m0(l: [u32; 4], lattice: &Lattice, seed: u64) -> Result<SpectralData> {
    let base = FuchsianData::new(lattice.clone(), l, vec![], vec![], vec![], C::new(0.0, 0.0))?;
    spectral_poly(base, seed)
}

/// Roots of `f₀(b₁)`, each checked for apparency at three random `E`.
pub fn treibich_b1_roots(l: [u32; 4], lattice: &Lattice, seed: u64) -> Result<Vec<C>> {
    let (f0, _) = f0_f1_polys(&l, lattice);
    let roots = f0.roots()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = lattice.e.iter().map(|e| e.norm()).fold(1.0, f64::max);
    for &b in &roots {
        for _ in 0..3 {
            let e = C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            if !apparent_with_s0(l, b, e, lattice)? {
                return Err(Error::RootConditioning(format!("b1 = {b} fails the apparency test at E = {e}")));
            }
        }
    }
    Ok(roots)
}

/// Whether `x = ±δ₁` is apparent for `r₁ = 2`, `s₁ = 0`.
pub fn apparent_with_s0(l: [u32; 4], b1: C, e: C, lattice: &Lattice) -> Result<bool> {
    let d = FuchsianData::new(lattice.clone(), l, vec![2], vec![b1], vec![C::new(0.0, 0.0)], e)?;
    Ok(d.apparency(0)?.apparent)
}

/// Spectral data of the `r₁ = 2`, `s₁ = 0` potential at a root of `f₀`.
pub fn spectral_poly_m1r2(l: [u32; 4], b1: C, lattice: &Lattice, seed: u64) -> Result<SpectralData> {
    let base = FuchsianData::new(lattice.clone(), l, vec![2], vec![b1], vec![C::new(0.0, 0.0)], C::new(0.0, 0.0))?;
    spectral_poly(base, seed)
}
