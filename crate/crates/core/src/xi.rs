//! The even doubly-periodic solution Ξ of the symmetric-square equation
//!
//! ```text
//! Ξ''' − 4(v − E) Ξ' − 2 v' Ξ = 0
//! ```
//!
//! sought in the finite basis `1, ℘(x+ω_i)^k (1 ≤ k ≤ l_i), (℘(x)−b)^{−k} (1 ≤ k ≤ r)`.
//! All basis functions are rational in `z = ℘(x)`, so the equation is
//! collocated in `z` (after dividing by `℘'`):
//!
//! ```text
//! f Ξ_zzz + (3/2) f_z Ξ_zz + 12 z Ξ_z − 4(v − E) Ξ_z − 2 v_z Ξ = 0,   f = 4z³ − g₂z − g₃.
//! ```

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::fuchsian::FuchsianData;
use crate::jet::Jet;
use crate::linalg::{normalize_max, nullspace_with_scales, CMatrix, CVector};
use crate::poly::Poly;

type C = Complex64;

pub const DEFAULT_SEED: u64 = 1;

/// Knobs of the collocation solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiOptions {
    pub seed: u64,
    /// Relative singular value below which a direction counts as null.
    pub threshold: f64,
    /// Skip the Frobenius pre-check (used when apparency holds by construction).
    pub skip_apparency_check: bool,
}

impl Default for XiOptions {
    fn default() -> Self {
        XiOptions { seed: DEFAULT_SEED, threshold: 1e-10, skip_apparency_check: false }
    }
}

/// One basis function of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Const,
    /// `℘(x + ω_i)^power`
    Shifted { i: usize, power: u32 },
    /// `(℘(x) − b_k)^{−power}`
    Pole { k: usize, power: u32 },
}

/// Basis in the storage order `c₀, b^(0)_·, …, b^(3)_·, d^(1)_·, …`.
pub fn terms(l: &[u32; 4], r: &[u32]) -> Vec<Term> {
    let mut t = vec![Term::Const];
    for (i, &li) in l.iter().enumerate() {
        for j in 0..li {
            t.push(Term::Shifted { i, power: li - j });
        }
    }
    for (k, &rk) in r.iter().enumerate() {
        for j in 0..rk {
            t.push(Term::Pole { k, power: rk - j });
        }
    }
    t
}

/// Ξ with its coefficients and the diagnostics of the solve.
#[derive(Debug, Clone)]
pub struct XiFunction {
    pub data: FuchsianData,
    pub c0: C,
    /// `bcoef[i][j]` multiplies `℘(x+ω_i)^{l_i − j}`.
    pub bcoef: [Vec<C>; 4],
    /// `dcoef[k][j]` multiplies `(℘(x) − b_k)^{−(r_k − j)}`.
    pub dcoef: Vec<Vec<C>>,
    pub nullspace_dim: usize,
    /// All nullspace vectors (flattened, storage order).
    pub basis: Vec<Vec<C>>,
    pub singular_values: Vec<f64>,
    /// Worst relative residual at held-out points.
    pub heldout_residual: f64,
}

impl XiFunction {
    /// Wraps a flattened coefficient vector.
    pub fn from_coeffs(data: FuchsianData, coeffs: &[C]) -> Result<Self> {
        let t = terms(&data.l, &data.r);
        if coeffs.len() != t.len() {
            return Err(Error::InvalidParameter(format!("{} coefficients for {} basis terms", coeffs.len(), t.len())));
        }
        let mut bcoef: [Vec<C>; 4] = Default::default();
        let mut dcoef = vec![Vec::new(); data.m()];
        for (term, &v) in t.iter().zip(coeffs) {
            match *term {
                Term::Const => {}
                Term::Shifted { i, .. } => bcoef[i].push(v),
                Term::Pole { k, .. } => dcoef[k].push(v),
            }
        }
        Ok(XiFunction {
            c0: coeffs[0],
            bcoef,
            dcoef,
            nullspace_dim: 1,
            basis: vec![coeffs.to_vec()],
            singular_values: vec![],
            heldout_residual: 0.0,
            data,
        })
    }

    pub fn coefficients(&self) -> Vec<C> {
        let mut v = vec![self.c0];
        for b in &self.bcoef {
            v.extend_from_slice(b);
        }
        for d in &self.dcoef {
            v.extend_from_slice(d);
        }
        v
    }

    pub fn lattice(&self) -> &Lattice {
        &self.data.lattice
    }

    /// Same function multiplied by `s`.
    pub fn scaled(&self, s: C) -> Self {
        let coeffs: Vec<C> = self.coefficients().iter().map(|&v| v * s).collect();
        let mut out = XiFunction::from_coeffs(self.data.clone(), &coeffs).expect("same layout");
        out.nullspace_dim = self.nullspace_dim;
        out.singular_values = self.singular_values.clone();
        out.heldout_residual = self.heldout_residual;
        out.basis = self.basis.clone();
        out
    }

    /// The function spanned by the `k`-th nullspace vector.
    pub fn basis_function(&self, k: usize) -> Result<Self> {
        let v = self
            .basis
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("nullspace has dimension {}", self.basis.len())))?;
        let mut out = XiFunction::from_coeffs(self.data.clone(), v)?;
        out.nullspace_dim = self.nullspace_dim;
        Ok(out)
    }

    /// Ξ as a function of `z = ℘(x)`.
    pub fn jet_z(&self, z: C) -> Jet {
        let zj = Jet::var(z);
        let t = terms(&self.data.l, &self.data.r);
        t.iter()
            .zip(self.coefficients())
            .fold(Jet::constant(C::new(0.0, 0.0)), |acc, (term, cf)| acc + basis_jet(&self.data, *term, zj) * cf)
    }

    /// `[Ξ, Ξ', Ξ'', Ξ''']` at `x`.
    pub fn eval(&self, x: C) -> Result<[C; 4]> {
        let (z, zp) = self.lattice().wp_pair(x)?;
        Ok(self.eval_from(z, zp))
    }

    pub(crate) fn eval_from(&self, z: C, zp: C) -> [C; 4] {
        let j = self.jet_z(z);
        let lat = self.lattice();
        let f = 4.0 * z * z * z - lat.g2 * z - lat.g3;
        let fz = 12.0 * z * z - lat.g2;
        let (x0, x1, x2, x3) = (j.deriv(0), j.deriv(1), j.deriv(2), j.deriv(3));
        [x0, x1 * zp, x2 * f + x1 * fz / 2.0, zp * (x3 * f + 1.5 * fz * x2 + 12.0 * z * x1)]
    }

    /// Relative residual of the third-order equation at `z`.
    pub fn residual_at(&self, z: C) -> f64 {
        let t = terms(&self.data.l, &self.data.r);
        let row = residual_row(&self.data, &t, z);
        let mut num = C::new(0.0, 0.0);
        let mut den = 0.0;
        for ((a, mag), cf) in row.iter().zip(self.coefficients()) {
            num += a * cf;
            den += mag * cf.norm();
        }
        num.norm() / den.max(f64::MIN_POSITIVE)
    }

    /// `Q` at `z` together with the magnitude of its three terms.
    pub fn q_at_z(&self, z: C) -> (C, f64) {
        let lat = self.lattice();
        let j = self.jet_z(z);
        let v = self.data.potential_jet(z).value();
        let f = 4.0 * z * z * z - lat.g2 * z - lat.g3;
        let h = 6.0 * z * z - lat.g2 / 2.0;
        let (x0, x1, x2) = (j.deriv(0), j.deriv(1), j.deriv(2));
        let a = x0 * x0 * (self.data.e - v);
        let b = 0.5 * x0 * (x2 * f + x1 * h);
        let c = -0.25 * x1 * x1 * f;
        (a + b + c, a.norm() + b.norm() + c.norm())
    }

    /// `Ξ(x)·Ψ_g(x)²·Π(℘(x)−e_i)^{l_i}` as a polynomial in `z = ℘(x)`.
    pub fn numerator_poly(&self) -> Poly {
        let lat = self.lattice();
        let d = &self.data;
        let one = Poly::constant(C::new(1.0, 0.0));
        let lin = Poly::linear_root;
        let z = Poly(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]);
        let rest_b = |skip: Option<(usize, u32)>| -> Poly {
            d.r.iter().zip(&d.b).enumerate().fold(one.clone(), |acc, (k, (&rk, &bk))| {
                let pw = match skip {
                    Some((kk, p)) if kk == k => rk - p,
                    _ => rk,
                };
                &acc * &lin(bk).pow(pw)
            })
        };
        let rest_e = |skip: Option<(usize, u32)>| -> Poly {
            (1..4).fold(one.clone(), |acc, i| {
                let li = d.l[i];
                let pw = match skip {
                    Some((ii, p)) if ii == i => li - p,
                    _ => li,
                };
                &acc * &lin(lat.e_(i)).pow(pw)
            })
        };
        let t = terms(&d.l, &d.r);
        let mut out = Poly::zero();
        for (term, cf) in t.iter().zip(self.coefficients()) {
            let p = match *term {
                Term::Const => &rest_b(None) * &rest_e(None),
                Term::Shifted { i: 0, power } => &(&z.pow(power) * &rest_b(None)) * &rest_e(None),
                Term::Shifted { i, power } => {
                    let ei = lat.e_(i);
                    let ci = shifted_residue(lat, i);
                    let top = Poly(vec![ci - ei * ei, ei]).pow(power);
                    &(&top * &rest_b(None)) * &rest_e(Some((i, power)))
                }
                Term::Pole { k, power } => &rest_b(Some((k, power))) * &rest_e(None),
            };
            out = &out + &p.scale(cf);
        }
        out
    }
}

/// `(e_i − e_j)(e_i − e_k)`: `℘(x+ω_i) = e_i + that/(℘(x) − e_i)`.
pub(crate) fn shifted_residue(lat: &Lattice, i: usize) -> C {
    let ei = lat.e_(i);
    let others: Vec<C> = (1..4).filter(|&j| j != i).map(|j| lat.e_(j)).collect();
    (ei - others[0]) * (ei - others[1])
}

fn basis_jet(d: &FuchsianData, term: Term, zj: Jet) -> Jet {
    match term {
        Term::Const => Jet::constant(C::new(1.0, 0.0)),
        Term::Shifted { i, power } => d.shifted_wp_jet(i, zj).powi(power),
        Term::Pole { k, power } => (zj + (-d.b[k])).recip().powi(power),
    }
}

// Each entry comes with the size of its individual terms, so that entries
// which vanish by cancellation are recognisable as such.
fn residual_row(d: &FuchsianData, t: &[Term], z: C) -> Vec<(C, f64)> {
    let lat = &d.lattice;
    let zj = Jet::var(z);
    let v = d.potential_jet(z);
    let (v0, v1) = (v.deriv(0), v.deriv(1));
    let f = 4.0 * z * z * z - lat.g2 * z - lat.g3;
    let fz = 12.0 * z * z - lat.g2;
    t.iter()
        .map(|&term| {
            let b = basis_jet(d, term, zj);
            let parts = [
                f * b.deriv(3),
                1.5 * fz * b.deriv(2),
                12.0 * z * b.deriv(1),
                -4.0 * (v0 - d.e) * b.deriv(1),
                -2.0 * v1 * b.deriv(0),
            ];
            (parts.iter().sum(), parts.iter().map(|p| p.norm()).sum())
        })
        .collect()
}

/// Points `x` of the period cell at least `min_dist` away from every point of
/// `avoid` (modulo the lattice), drawn from a seeded ChaCha stream.
pub fn random_points(lat: &Lattice, avoid: &[C], count: usize, min_dist: f64, seed: u64) -> Vec<C> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        let a: f64 = rng.random_range(-0.5..0.5);
        let b: f64 = rng.random_range(-0.5..0.5);
        let x = lat.from_coords(a, b);
        let ok = avoid.iter().all(|&s| lat.distance_mod(x, s) >= min_dist);
        if ok || tries > 1000 * count {
            out.push(x);
        }
    }
    out
}

/// Lattice half-periods and `±δ_k`.
pub fn structural_points(d: &FuchsianData) -> Vec<C> {
    let mut pts: Vec<C> = (0..4).map(|i| d.lattice.omega(i)).collect();
    for dk in &d.delta {
        pts.push(dk.value());
        pts.push(-dk.value());
    }
    pts
}

/// Solves for Ξ by oversampled collocation and an SVD nullspace.
pub fn build_xi(d: &FuchsianData, opts: XiOptions) -> Result<XiFunction> {
    if !opts.skip_apparency_check {
        d.check_apparent()?;
    }
    let t = terms(&d.l, &d.r);
    let k = t.len();
    let lat = &d.lattice;
    let avoid = structural_points(d);
    let pts = random_points(lat, &avoid, 6 * k, 0.05 * lat.omega1.norm(), opts.seed);
    let zs: Vec<C> = pts.iter().map(|&x| lat.wp(x)).collect::<Result<_>>()?;
    let (fit, held) = zs.split_at(4 * k);
    let mut a = CMatrix::zeros(fit.len(), k);
    let mut col_mag = vec![0.0f64; k];
    for (row, &z) in fit.iter().enumerate() {
        let r = residual_row(d, &t, z);
        let m = r.iter().map(|c| c.1).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for (col, (v, mag)) in r.into_iter().enumerate() {
            a[(row, col)] = v / m;
            col_mag[col] = col_mag[col].max(mag / m);
        }
    }
    let scales: Vec<f64> = col_mag.iter().map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 }).collect();
    let ns = nullspace_with_scales(&a, &scales, opts.threshold)?;
    if ns.dim() == 0 {
        return Err(Error::EmptyNullspace { ratio: ns.smallest_ratio() });
    }
    let lead: CVector = normalize_max(&ns.basis[0]);
    let mut xi = XiFunction::from_coeffs(d.clone(), lead.as_slice())?;
    xi.nullspace_dim = ns.dim();
    xi.basis = ns.basis.iter().map(|v| normalize_max(v).as_slice().to_vec()).collect();
    xi.singular_values = ns.singular_values.clone();
    let mut worst = 0.0f64;
    for k in 0..xi.basis.len() {
        let f = xi.basis_function(k)?;
        for &z in held {
            worst = worst.max(f.residual_at(z));
        }
    }
    xi.heldout_residual = worst;
    Ok(xi)
}

/// `Q` sampled at ten random points, with its relative spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QReport {
    pub q: C,
    pub spread: f64,
    /// `|Q|` relative to the size of its individual terms.
    pub relative_size: f64,
}

pub fn q_report(xi: &XiFunction, seed: u64) -> Result<QReport> {
    let d = &xi.data;
    let lat = &d.lattice;
    let pts = random_points(lat, &structural_points(d), 10, 0.2 * lat.omega1.norm(), seed.wrapping_add(0x9e37_79b9));
    let vals = pts
        .iter()
        .map(|&x| Ok(xi.q_at_z(lat.wp(x)?)))
        .collect::<Result<Vec<(C, f64)>>>()?;
    // Q is constant, so the point with the least cancellation gives the best value.
    let &(q, scale) = vals
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("ten sample points");
    let spread = vals
        .iter()
        .map(|(v, s)| (v - q).norm() / s.max(scale).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(QReport { q, spread, relative_size: q.norm() / scale.max(f64::MIN_POSITIVE) })
}

/// The invariant `Q`; fails with `NonConstantQ` if its relative spread exceeds 1e−8.
pub fn q_value(xi: &XiFunction) -> Result<C> {
    let rep = q_report(xi, DEFAULT_SEED)?;
    if rep.spread > 1e-8 {
        return Err(Error::NonConstantQ { spread: rep.spread });
    }
    Ok(rep.q)
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
    fn lame_one_gap() {
        let lattice = lat();
        let e = cc(0.4, -0.3);
        let d = FuchsianData::new(lattice.clone(), [1, 0, 0, 0], vec![], vec![], vec![], e).unwrap();
        let xi = build_xi(&d, XiOptions::default()).unwrap();
        assert_eq!(xi.nullspace_dim, 1);
        // ℘ + E
        let ratio = xi.c0 / xi.bcoef[0][0];
        assert!((ratio - e).norm() < 1e-10, "ratio {ratio}");
        let q = q_value(&xi).unwrap() / (xi.bcoef[0][0] * xi.bcoef[0][0]);
        let [e1, e2, e3] = lattice.e;
        assert!((q - (e + e1) * (e + e2) * (e + e3)).norm() < 1e-9);
    }

    #[test]
    fn one_apparent_point() {
        let lattice = lat();
        let (b, mu) = (cc(0.37, -0.21), cc(0.8, 0.3));
        let d = FuchsianData::painleve_form(lattice.clone(), [0; 4], b, mu).unwrap();
        let xi = build_xi(&d, XiOptions::default()).unwrap();
        assert_eq!(xi.nullspace_dim, 1);
        let ratio = xi.c0 / xi.dcoef[0][0];
        assert!((ratio - 2.0 * mu).norm() < 1e-9, "ratio {ratio}");
        let xin = xi.scaled(1.0 / xi.dcoef[0][0]);
        let q = q_value(&xin).unwrap();
        let [e1, e2, e3] = lattice.e;
        let expect = 2.0 * mu * (2.0 * mu * (e1 - b) + 1.0) * (2.0 * mu * (e2 - b) + 1.0) * (2.0 * mu * (e3 - b) + 1.0);
        assert!((q - expect).norm() < 1e-9 * expect.norm());
        let np = xin.numerator_poly();
        assert_eq!(np.trimmed(1e-14).degree(), Some(1));
    }

    #[test]
    fn not_apparent_is_reported() {
        let lattice = lat();
        let d = FuchsianData::new(lattice, [0; 4], vec![1], vec![cc(0.3, 0.1)], vec![cc(1.0, 0.0)], cc(0.2, 0.0)).unwrap();
        assert!(matches!(build_xi(&d, XiOptions::default()), Err(Error::NotApparent { index: 1, .. })));
    }

    #[test]
    fn numerator_matches_direct_product() {
        let lattice = lat();
        let d = FuchsianData::painleve_form(lattice.clone(), [1, 1, 0, 2], cc(0.2, 0.45), cc(-0.4, 0.2)).unwrap();
        let xi = build_xi(&d, XiOptions::default()).unwrap();
        let np = xi.numerator_poly();
        assert_eq!(np.trimmed(1e-13).degree(), Some(5));
        let z = cc(0.7, -1.1);
        let direct = xi.jet_z(z).value()
            * (z - d.b[0])
            * (z - lattice.e[0])
            * (z - lattice.e[2]).powi(2);
        assert!((np.eval(z) - direct).norm() < 1e-10 * direct.norm());
    }
}
