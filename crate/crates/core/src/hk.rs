//! Hermite–Krichever data of the solution `Λ` built from Ξ:
//!
//! ```text
//! Λ(x) = √Ξ(x) · exp ∫ √(−Q)/Ξ(x) dx,      Λ_g = Ψ_g Λ.
//! ```
//!
//! `Λ` is evaluated by integrating its logarithmic derivative from a fixed
//! basepoint along a polyline that detours around the singular set
//! (lattice points, `±δ_k` and the zeros of Ξ).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, normalize_max, CMatrix, CVector};
use crate::quad::{integrate_path, integrate_segment, ode_path};
use crate::xi::{q_report, XiFunction, DEFAULT_SEED};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const RTOL: f64 = 1e-12;
const ATOL: f64 = 1e-13;

/// Ξ together with a chosen branch of `√(−Q)` and the geometry needed to
/// continue `Λ` analytically.
#[derive(Debug, Clone)]
pub struct IntegralSolution {
    pub xi: XiFunction,
    pub q: C,
    pub sqrt_mq: C,
    /// `Q` vanished to working precision and was set to zero.
    pub q_is_zero: bool,
    pub q_spread: f64,
    pub basepoint: C,
    /// Singular points of the integrand (mod lattice).
    pub singular: Vec<C>,
    pub guard: f64,
}

fn unit(lat: &Lattice) -> f64 {
    lat.omega1.norm().min(lat.omega(3).norm()).min(lat.omega(2).norm())
}

impl IntegralSolution {
    pub fn new(xi: XiFunction) -> Result<Self> {
        let rep = q_report(&xi, DEFAULT_SEED)?;
        if rep.spread > 1e-8 {
            return Err(Error::NonConstantQ { spread: rep.spread });
        }
        let q_is_zero = rep.relative_size < 1e-10;
        let q = if q_is_zero { C::new(0.0, 0.0) } else { rep.q };
        let lat = xi.lattice().clone();
        let d = &xi.data;
        let mut singular = vec![C::new(0.0, 0.0)];
        for i in 1..4 {
            if d.l[i] > 0 {
                singular.push(lat.omega(i));
            }
        }
        for dk in &d.delta {
            singular.push(dk.value());
            singular.push(-dk.value());
        }
        let np = xi.numerator_poly().trimmed(1e-13);
        if np.degree().is_some_and(|n| n > 0) {
            for z in np.roots()? {
                if let Ok(t) = lat.wp_inverse(z, None) {
                    singular.push(t.value());
                    singular.push(-t.value());
                }
            }
        }
        let u = unit(&lat);
        let mut sep = f64::INFINITY;
        for (a, &s) in singular.iter().enumerate() {
            for &t in &singular[a + 1..] {
                let dist = lat.distance_mod(s, t);
                if dist > 1e-9 * u {
                    sep = sep.min(dist);
                }
            }
        }
        let guard = (0.03 * u).min(0.3 * sep);
        let mut sol = IntegralSolution {
            xi,
            q,
            sqrt_mq: (-q).sqrt(),
            q_is_zero,
            q_spread: rep.spread,
            basepoint: C::new(0.0, 0.0),
            singular,
            guard,
        };
        sol.basepoint = sol.pick_basepoint();
        Ok(sol)
    }

    pub fn lattice(&self) -> &Lattice {
        self.xi.lattice()
    }

    /// The solution with the opposite branch of `√(−Q)` (i.e. `Λ(−x)`).
    pub fn flipped(&self) -> Self {
        let mut s = self.clone();
        s.sqrt_mq = -s.sqrt_mq;
        s
    }

    /// Distance from `x` to the singular set.
    pub fn clearance(&self, x: C) -> f64 {
        let lat = self.lattice();
        self.singular.iter().map(|&s| lat.distance_mod(x, s)).fold(f64::INFINITY, f64::min)
    }

    fn pick_basepoint(&self) -> C {
        let lat = self.lattice();
        let mut best = (lat.from_coords(0.21, 0.17), -1.0);
        for a in 0..18 {
            for b in 0..18 {
                let x = lat.from_coords(-0.45 + 0.05 * a as f64 + 0.0123, -0.45 + 0.05 * b as f64 + 0.0071);
                let c = self.clearance(x);
                if c > best.1 + 1e-12 {
                    best = (x, c);
                }
            }
        }
        best.0
    }

    /// Up to `n` points of the period cell with clearance at least
    /// `min_clear`, spread over a regular grid.
    pub fn sample_grid(&self, n: usize, min_clear: f64) -> Vec<C> {
        let lat = self.lattice();
        let m = 14;
        let mut cand: Vec<(C, f64)> = Vec::new();
        for a in 0..m {
            for b in 0..m {
                let x = lat.from_coords(-0.5 + (a as f64 + 0.37) / m as f64, -0.5 + (b as f64 + 0.61) / m as f64);
                cand.push((x, self.clearance(x)));
            }
        }
        let good: Vec<C> = cand.iter().filter(|c| c.1 >= min_clear).map(|c| c.0).collect();
        if good.len() >= n {
            let step = good.len() as f64 / n as f64;
            return (0..n).map(|k| good[(k as f64 * step) as usize]).collect();
        }
        cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        cand.into_iter().take(n).map(|c| c.0).collect()
    }

    // Closest lattice translate of a singular point within `guard` of [a, b].
    fn closest_hit(&self, a: C, b: C) -> Option<(C, f64, f64)> {
        let lat = self.lattice();
        let (w1, w3) = (2.0 * lat.omega1, 2.0 * lat.omega(3));
        let (a1, a2) = lat.coords(a);
        let (b1, b2) = lat.coords(b);
        let dir = b - a;
        let len2 = dir.norm_sqr();
        let mut best: Option<(C, f64, f64)> = None;
        for &s in &self.singular {
            let (s1, s2) = lat.coords(s);
            let m_lo = (a1.min(b1) - s1).floor() as i64 - 1;
            let m_hi = (a1.max(b1) - s1).ceil() as i64 + 1;
            let n_lo = (a2.min(b2) - s2).floor() as i64 - 1;
            let n_hi = (a2.max(b2) - s2).ceil() as i64 + 1;
            for m in m_lo..=m_hi {
                for n in n_lo..=n_hi {
                    let p = s + w1 * m as f64 + w3 * n as f64;
                    let t = if len2 > 0.0 { (((p - a) * dir.conj()).re / len2).clamp(0.0, 1.0) } else { 0.0 };
                    let dist = (a + dir * t - p).norm();
                    if dist < self.guard && best.is_none_or(|bb| dist < bb.1) {
                        best = Some((p, dist, t));
                    }
                }
            }
        }
        best
    }

    /// A polyline from `from` to `to` staying `guard` away from the singular set.
    pub fn plan_path(&self, from: C, to: C) -> Result<Vec<C>> {
        for &x in &[from, to] {
            let c = self.clearance(x);
            if c < 0.5 * self.guard {
                return Err(Error::PathThroughSingularity { near: x, distance: c });
            }
        }
        let mut pts = vec![from, to];
        for _ in 0..64 {
            let mut changed = false;
            let mut out = vec![pts[0]];
            for w in pts.windows(2) {
                if let Some((p, dist, t)) = self.closest_hit(w[0], w[1]) {
                    if t > 0.0 && t < 1.0 {
                        let dir = w[1] - w[0];
                        let foot = w[0] + dir * t;
                        let side = if dist > 1e-6 * self.guard { (foot - p) / dist } else { I * dir / dir.norm() };
                        out.push(p + side * (2.0 * self.guard));
                        changed = true;
                    }
                }
                out.push(w[1]);
            }
            pts = out;
            if !changed {
                return Ok(pts);
            }
        }
        Err(Error::PathThroughSingularity { near: from, distance: 0.0 })
    }

    /// `(Λ'/Λ, Λ_g'/Λ_g)` at `x`.
    pub fn log_derivatives(&self, x: C) -> Result<(C, C)> {
        let lat = self.lattice();
        let (z, zp) = lat.wp_pair(x)?;
        let [x0, x1, ..] = self.xi.eval_from(z, zp);
        if x0.norm() == 0.0 {
            return Err(Error::PoleProximity { z: x, distance: 0.0 });
        }
        let g = x1 / (2.0 * x0) + self.sqrt_mq / x0;
        let d = &self.xi.data;
        let psi: C = d.r.iter().zip(&d.b).map(|(&r, &b)| r as f64 * 0.5 * zp / (z - b)).sum();
        Ok((g, g + psi))
    }

    fn start_logs(&self) -> Result<(C, C)> {
        let x0 = self.basepoint;
        let xi0 = self.xi.eval(x0)?[0];
        let g0 = xi0 * self.xi.data.psi_g_squared(x0)?;
        Ok((xi0.ln() * 0.5, g0.ln() * 0.5))
    }

    /// `(log Λ, log Λ_g)` continued along `path`, which must start at the basepoint.
    pub fn log_lambda_on_path(&self, path: &[C]) -> Result<(C, C)> {
        if path.first().is_none_or(|&p| (p - self.basepoint).norm() > 1e-14 * (1.0 + p.norm())) {
            return Err(Error::InvalidParameter("path must start at the basepoint".into()));
        }
        let (l0, lg0) = self.start_logs()?;
        let a = integrate_path(|x| Ok(self.log_derivatives(x)?.0), path, RTOL, ATOL)?;
        let b = integrate_path(|x| Ok(self.log_derivatives(x)?.1), path, RTOL, ATOL)?;
        Ok((l0 + a, lg0 + b))
    }

    /// `(Λ(x), Λ_g(x))` continued from the basepoint along a planned path.
    pub fn lambda_eval(&self, x: C) -> Result<(C, C)> {
        let path = self.plan_path(self.basepoint, x)?;
        let (a, b) = self.log_lambda_on_path(&path)?;
        Ok((a.exp(), b.exp()))
    }

    /// `Λ_g(x)` only.
    pub fn lambda_g(&self, x: C) -> Result<C> {
        let path = self.plan_path(self.basepoint, x)?;
        let (l0, lg0) = self.start_logs()?;
        let _ = l0;
        let b = integrate_path(|x| Ok(self.log_derivatives(x)?.1), &path, RTOL, ATOL)?;
        Ok((lg0 + b).exp())
    }

    // Λ(x + k h)/Λ(x) for k = −2..=2.
    fn local_ratios(&self, x: C, h: C) -> Result<[C; 5]> {
        let mut out = [C::new(1.0, 0.0); 5];
        for (slot, k) in [(0usize, -2.0), (1, -1.0), (3, 1.0), (4, 2.0)] {
            let v = integrate_segment(|y| Ok(self.log_derivatives(y)?.0), x, x + h * k, RTOL, ATOL)?;
            out[slot] = v.exp();
        }
        Ok(out)
    }

    fn fd_step(&self) -> f64 {
        2e-3 * unit(self.lattice())
    }

    /// `|Λ''/Λ − (v − E)| / (1 + |Λ''/Λ|)` with `Λ''` from a five-point stencil.
    pub fn ode_residual(&self, x: C) -> Result<f64> {
        let h = C::new(self.fd_step(), 0.0);
        let r = self.local_ratios(x, h)?;
        let second = (-r[0] + 16.0 * r[1] - 30.0 * r[2] + 16.0 * r[3] - r[4]) / (12.0 * h * h);
        let v = self.xi.data.potential(x)?;
        Ok((second - (v - self.xi.data.e)).norm() / (1.0 + second.norm()))
    }

    /// Relative defect of `Λ(−x)Λ'(x) − Λ(x)·d/dx[Λ(−x)] = 2√(−Q) Λ(x)Λ(−x)/Ξ(x)`,
    /// with both derivatives taken by finite differences.
    pub fn wronskian_residual(&self, x: C) -> Result<f64> {
        let h = C::new(self.fd_step(), 0.0);
        let d1 = |r: [C; 5]| (r[0] - 8.0 * r[1] + 8.0 * r[3] - r[4]) / (12.0 * h);
        let lp = d1(self.local_ratios(x, h)?);
        let lm = d1(self.local_ratios(-x, h)?);
        // divided by Λ(x)Λ(−x): Λ'(x)/Λ(x) + Λ'(−x)/Λ(−x)
        let lhs = lp + lm;
        let rhs = 2.0 * self.sqrt_mq / self.xi.eval(x)?[0];
        Ok((lhs - rhs).norm() / (lp.norm() + lm.norm()).max(f64::MIN_POSITIVE))
    }

    /// `(m₁, m₃)` with `Λ_g(x + 2ω_j) = e^{πi m_j} Λ_g(x)`, real parts reduced into `[−1, 1]`.
    pub fn monodromy_multipliers(&self) -> Result<(C, C)> {
        let lat = self.lattice();
        let mut m = [C::new(0.0, 0.0); 2];
        for (slot, j) in [(0usize, 1usize), (1, 3)] {
            let x0 = self.basepoint;
            let path = self.plan_path(x0, x0 + 2.0 * lat.omega(j))?;
            let v = integrate_path(|x| Ok(self.log_derivatives(x)?.1), &path, RTOL, ATOL)?;
            m[slot] = reduce_mod2(v / (PI * I));
        }
        Ok((m[0], m[1]))
    }

    /// `Λ_g(x + 2ω_j)/Λ_g(x)` by integrating the gauge-form equation.
    ///
    /// A decaying `Λ_g` is swamped by the growing partner `Λ_g(−x)`, so when
    /// the forward ratio is below one the period is traversed backwards.
    pub fn direct_multiplier(&self, x: C, j: usize) -> Result<C> {
        let step = 2.0 * self.lattice().omega(j);
        let forward = self.transport_ratio(x, x + step)?;
        if forward.norm() >= 1.0 {
            return Ok(forward);
        }
        Ok(1.0 / self.transport_ratio(x, x - step)?)
    }

    fn transport_ratio(&self, from: C, to: C) -> Result<C> {
        let lg = self.lambda_g(from)?;
        let dlg = lg * self.log_derivatives(from)?.1;
        let path = self.plan_path(from, to)?;
        let d = &self.xi.data;
        let end = ode_path(
            |y, s: &[C; 2]| {
                let (a, b) = d.gauge_coeffs(y)?;
                Ok([s[1], a * s[1] + b * s[0]])
            },
            &path,
            [lg, dlg],
            1e-12,
        )?;
        Ok(end[0] / lg)
    }

    /// Fits `Λ_g` to the Hermite–Krichever ansatz.
    pub fn hk_decompose(&self, hk: &HkData) -> Result<Decomposition> {
        let lat = self.lattice();
        let d = &self.xi.data;
        let lt = [d.l[0] + d.r.iter().sum::<u32>(), d.l[1], d.l[2], d.l[3]];
        let mut labels = Vec::new();
        let mut funcs: Vec<Box<dyn Fn(C) -> Result<C> + '_>> = Vec::new();
        match hk.branch {
            Branch::Generic => {
                let (alpha, kappa) = (hk.alpha, hk.kappa.unwrap_or_default());
                for (i, &li) in lt.iter().enumerate() {
                    for j in 0..li as usize {
                        labels.push(format!("Phi_{i}^({j})"));
                        funcs.push(Box::new(move |x| Ok(lat.phi(i, alpha, x, j)?[j] * (kappa * x).exp())));
                    }
                }
            }
            Branch::Degenerate => {
                let kb = hk.kappa_bar.unwrap_or_default();
                labels.push("1".into());
                funcs.push(Box::new(move |x| Ok((kb * x).exp())));
                for (i, &li) in lt.iter().enumerate() {
                    for j in 0..li.saturating_sub(1) as usize {
                        labels.push(format!("wp^({j})(x+omega_{i})"));
                        funcs.push(Box::new(move |x| Ok(lat.wp_derivs(x + lat.omega(i), j)?[j] * (kb * x).exp())));
                    }
                }
                for i in 1..4 {
                    labels.push(format!("wp'/(wp-e_{i})"));
                    funcs.push(Box::new(move |x| {
                        let (p, pp) = lat.wp_pair(x)?;
                        Ok(pp / (p - lat.e_(i)) * (kb * x).exp())
                    }));
                }
            }
        }
        let k = funcs.len();
        let pts = self.sample_grid((3 * k).max(16), 0.15 * unit(lat));
        let mut a = CMatrix::zeros(pts.len(), k);
        let mut b = CVector::zeros(pts.len());
        for (r, &x) in pts.iter().enumerate() {
            b[r] = self.lambda_g(x)?;
            for (c, f) in funcs.iter().enumerate() {
                a[(r, c)] = f(x)?;
            }
        }
        let (coef, residual) = lstsq(&a, &b)?;
        if residual > 1e-6 {
            return Err(Error::FitResidualTooLarge { residual, tolerance: 1e-6 });
        }
        Ok(Decomposition {
            labels,
            raw: coef.as_slice().to_vec(),
            normalized: normalize_max(&coef).as_slice().to_vec(),
            residual,
        })
    }

    /// Zeros `t_j` of `Λ`, the exponent `c` and the constant `C₀` of the product form.
    pub fn bethe_roots(&self) -> Result<BetheData> {
        let lat = self.lattice();
        let d = &self.xi.data;
        let np = self.xi.numerator_poly().trimmed(1e-13);
        let zs = match np.degree() {
            Some(n) if n > 0 => np.roots()?,
            _ => vec![],
        };
        let mut t = Vec::with_capacity(zs.len());
        let mut sign_residual = 0.0f64;
        for &z in &zs {
            let near_b = d.b.iter().position(|&b| (z - b).norm() < 1e-5 * (1.0 + b.norm()));
            let tj = match near_b {
                Some(k) => self.zero_at_apparent_point(k)?,
                None => {
                    let xz = self.xi.jet_z(z).deriv(1);
                    let hint = 2.0 * self.sqrt_mq / xz;
                    let tj = lat.wp_inverse(z, if self.q_is_zero { None } else { Some(hint) })?.value();
                    if !self.q_is_zero {
                        let pp = lat.wp_prime(tj)?;
                        sign_residual = sign_residual.max((xz * pp - 2.0 * self.sqrt_mq).norm() / (2.0 * self.sqrt_mq).norm());
                    }
                    tj
                }
            };
            t.push(tj);
        }
        let mut c: C = t.iter().map(|&tj| lat.zeta(tj)).sum::<Result<C>>()?;
        if d.l[0] == 0 {
            let xi_at_0 = self.xi.c0
                + (1..4)
                    .flat_map(|i| {
                        let li = d.l[i];
                        self.xi.bcoef[i].iter().enumerate().map(move |(j, &b)| b * lat.e_(i).powu(li - j as u32))
                    })
                    .sum::<C>();
            c += self.sqrt_mq / xi_at_0;
        }
        let alpha_sum = t.iter().sum::<C>() - (1..4).map(|i| d.l[i] as f64 * lat.omega(i)).sum::<C>();
        let mut out = BetheData { z: zs, t, c, c0: C::new(0.0, 0.0), sign_residual, alpha_sum };
        let x0 = self.basepoint;
        out.c0 = self.lambda_g(x0)? / out.product_form(lat, d.l, d.r.iter().sum(), x0)?;
        Ok(out)
    }

    // Which of ±δ_k carries the zero of Λ_g.
    fn zero_at_apparent_point(&self, k: usize) -> Result<C> {
        let delta = self.xi.data.delta[k].value();
        let rho = 0.5 * self.guard;
        let u = C::new(0.6, 0.8);
        let mut best = (delta, f64::INFINITY);
        for cand in [delta, -delta] {
            let near = self.lambda_g(cand + u * rho)?.norm();
            let far = self.lambda_g(cand + u * (2.0 * rho))?.norm();
            let ratio = near / far;
            if ratio < best.1 {
                best = (cand, ratio);
            }
        }
        Ok(best.0)
    }
}

/// Reduces the real part into `[−1, 1]` modulo 2.
pub fn reduce_mod2(m: C) -> C {
    m - 2.0 * (m.re / 2.0).round()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `α` off the lattice: `Λ_g = e^{κx} Σ b̃ Φ^{(j)}_i(x, α)`.
    Generic,
    /// `α` on the lattice: `Λ_g = e^{κ̄x} × (elliptic function)`.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HkData {
    pub q: C,
    pub sqrt_mq: C,
    pub m1: C,
    pub m3: C,
    pub alpha: C,
    pub kappa: Option<C>,
    pub kappa_bar: Option<C>,
    pub branch: Branch,
}

impl HkData {
    /// Predicted `Λ_g(x + 2ω_j)/Λ_g(x)`.
    pub fn multiplier(&self, lat: &Lattice, j: usize) -> Result<C> {
        let wj = lat.omega(j);
        match self.branch {
            Branch::Generic => {
                let e = -2.0 * lat.eta_(j) * self.alpha + 2.0 * wj * lat.zeta(self.alpha)? + 2.0 * self.kappa.unwrap() * wj;
                Ok(e.exp())
            }
            Branch::Degenerate => Ok((2.0 * self.kappa_bar.unwrap() * wj).exp()),
        }
    }
}

/// `α` and `κ` (or `κ̄`) from the monodromy exponents.
pub fn hk_parameters(m1: C, m3: C, lat: &Lattice) -> Result<HkData> {
    let (w1, w3) = (lat.omega1, lat.omega(3));
    let (h1, h3) = (lat.eta_(1), lat.eta_(3));
    let alpha = -m1 * w3 + m3 * w1;
    let mut out = HkData {
        q: C::new(0.0, 0.0),
        sqrt_mq: C::new(0.0, 0.0),
        m1,
        m3,
        alpha,
        kappa: None,
        kappa_bar: None,
        branch: Branch::Generic,
    };
    if lat.distance_to_lattice(alpha) < 1e-7 * unit(lat) {
        out.branch = Branch::Degenerate;
        out.kappa_bar = Some(-m1 * h3 + m3 * h1);
    } else {
        out.kappa = Some(lat.zeta(m1 * w3 - m3 * w1)? - m1 * h3 + m3 * h1);
    }
    Ok(out)
}

/// Full pipeline: multipliers, then `α, κ`.
pub fn hk_data(sol: &IntegralSolution) -> Result<HkData> {
    let (m1, m3) = sol.monodromy_multipliers()?;
    let mut hk = hk_parameters(m1, m3, sol.lattice())?;
    hk.q = sol.q;
    hk.sqrt_mq = sol.sqrt_mq;
    Ok(hk)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub labels: Vec<String>,
    pub raw: Vec<C>,
    /// Largest coefficient scaled to one.
    pub normalized: Vec<C>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetheData {
    /// Roots in `z = ℘(t)`.
    pub z: Vec<C>,
    pub t: Vec<C>,
    pub c: C,
    pub c0: C,
    /// Worst relative defect of `Ξ'(t_j) = 2√(−Q)`.
    pub sign_residual: f64,
    /// `Σ t_j − Σ l_i ω_i`, congruent to `α`.
    pub alpha_sum: C,
}

impl BetheData {
    fn product_form(&self, lat: &Lattice, l: [u32; 4], n: u32, x: C) -> Result<C> {
        let mut v = (self.c * x).exp();
        for &tj in &self.t {
            v *= lat.sigma(x - tj)?;
        }
        v /= lat.sigma(x)?.powu(l[0] + n);
        for i in 1..4 {
            v /= lat.co_sigma(i, x)?.powu(l[i]);
        }
        Ok(v)
    }

    /// `C₀ Π σ(x − t_j) / (σ(x)^{l̃₀} Π σ_i(x)^{l_i}) e^{cx}`.
    pub fn lambda_g(&self, lat: &Lattice, l: [u32; 4], n: u32, x: C) -> Result<C> {
        Ok(self.c0 * self.product_form(lat, l, n, x)?)
    }
}
