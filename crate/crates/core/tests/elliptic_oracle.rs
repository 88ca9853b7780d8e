//! Weierstrass functions against q-expansions: Eisenstein series for the
//! invariants and the Fourier series of ℘.

use std::f64::consts::PI;

use heunhk::elliptic::Lattice;
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn divisor_sum(n: u64, k: i32) -> f64 {
    (1..=n).filter(|&d| n.is_multiple_of(d)).map(|d| (d as f64).powi(k)).sum()
}

/// `(g₂, g₃, η₁)` from `E₄`, `E₆`, `E₂` in `q = e^{iπτ}`.
fn eisenstein(omega1: C, omega3: C) -> (C, C, C) {
    let tau = omega3 / omega1;
    let q2 = (C::new(0.0, 2.0 * PI) * tau).exp();
    let (mut e2, mut e4, mut e6) = (C::new(1.0, 0.0), C::new(1.0, 0.0), C::new(1.0, 0.0));
    let mut qn = C::new(1.0, 0.0);
    for n in 1..200u64 {
        qn *= q2;
        if qn.norm() < 1e-22 {
            break;
        }
        e2 -= 24.0 * divisor_sum(n, 1) * qn;
        e4 += 240.0 * divisor_sum(n, 3) * qn;
        e6 -= 504.0 * divisor_sum(n, 5) * qn;
    }
    let k = PI / (2.0 * omega1);
    (k.powi(4) * (4.0 / 3.0) * e4, k.powi(6) * (8.0 / 27.0) * e6, PI * PI / (12.0 * omega1) * e2)
}

/// ℘ from its Fourier series in `v = πz/(2ω₁)`, valid for `|Im v| < π Im τ`.
fn wp_fourier(omega1: C, omega3: C, eta1: C, z: C) -> C {
    let tau = omega3 / omega1;
    let k = PI / (2.0 * omega1);
    let v = k * z;
    let q2 = (C::new(0.0, 2.0 * PI) * tau).exp();
    let mut sum = C::new(0.0, 0.0);
    let mut qn = C::new(1.0, 0.0);
    for n in 1..400 {
        qn *= q2;
        let term = n as f64 * qn / (1.0 - qn) * (2.0 * n as f64 * v).cos();
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1.0) && n > 3 {
            break;
        }
    }
    -eta1 / omega1 + k * k * (1.0 / v.sin().powi(2) - 8.0 * sum)
}

fn lattice_strategy() -> impl Strategy<Value = (C, C)> {
    (0.3f64..2.0, -PI..PI, -0.5f64..0.5, 0.6f64..2.5).prop_map(|(r, th, tr, ti)| {
        let w1 = C::from_polar(r, th);
        (w1, w1 * C::new(tr, ti))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn invariants_match_eisenstein_series((w1, w3) in lattice_strategy()) {
        let lat = Lattice::new(w1, w3).unwrap();
        let (g2, g3, eta1) = eisenstein(w1, w3);
        let s2 = g2.norm().max((w1.norm()).powi(-4));
        let s3 = g3.norm().max((w1.norm()).powi(-6));
        prop_assert!((lat.g2 - g2).norm() < 1e-10 * s2, "g2 {} vs {}", lat.g2, g2);
        prop_assert!((lat.g3 - g3).norm() < 1e-10 * s3, "g3 {} vs {}", lat.g3, g3);
        prop_assert!((lat.eta_(1) - eta1).norm() < 1e-10 * eta1.norm().max(1.0 / w1.norm()));
        prop_assert!(lat.legendre_residual() < 1e-12);
    }

    #[test]
    fn wp_matches_fourier_series((w1, w3) in lattice_strategy(), a in 0.0f64..1.0, b in -0.5f64..0.5) {
        let lat = Lattice::new(w1, w3).unwrap();
        let z = lat.from_coords(a, b);
        prop_assume!(lat.distance_to_lattice(z) > 0.05 * w1.norm().min(w3.norm()));
        let (_, _, eta1) = eisenstein(w1, w3);
        let p = lat.wp(z).unwrap();
        let o = wp_fourier(w1, w3, eta1, z);
        let scale = p.norm().max(w1.norm().powi(-2));
        prop_assert!((p - o).norm() < 1e-10 * scale, "z = {z}: {p} vs {o}");
    }

    #[test]
    fn differential_equation_and_periodicity((w1, w3) in lattice_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let lat = Lattice::new(w1, w3).unwrap();
        let z = lat.from_coords(a, b);
        prop_assume!(lat.distance_to_lattice(z) > 1e-3 * w1.norm());
        let (p, pp) = lat.wp_pair(z).unwrap();
        let rhs: C = lat.e.iter().map(|e| p - e).product::<C>() * 4.0;
        prop_assert!((pp * pp - rhs).norm() < 1e-9 * (pp * pp).norm().max(rhs.norm()));
        for j in [1, 3] {
            let shifted = lat.wp(z + 2.0 * lat.omega(j)).unwrap();
            prop_assert!((shifted - p).norm() < 1e-9 * p.norm().max(1.0));
            let dz = lat.zeta(z + 2.0 * lat.omega(j)).unwrap() - lat.zeta(z).unwrap();
            prop_assert!((dz - 2.0 * lat.eta_(j)).norm() < 1e-9 * lat.eta_(j).norm().max(1.0));
        }
    }
}

#[test]
fn square_lattice_constants() {
    // ω₁ = 1/2, ω₃ = i/2: g₃ = 0 and η₁ = π (Legendre with η₃ = −iη₁).
    let lat = Lattice::new(C::new(0.5, 0.0), C::new(0.0, 0.5)).unwrap();
    assert!(lat.g3.norm() < 1e-10);
    assert!((lat.eta_(1) - C::new(PI / 2.0, 0.0)).norm() < 1e-12);
    assert!(lat.e[1].norm() < 1e-12);
}
