use heunhk::elliptic::Lattice;
use heunhk::finite_gap::spectral_poly_m0;
use heunhk::fuchsian::FuchsianData;
use heunhk::hk::{hk_data, reduce_mod2, IntegralSolution};
use heunhk::painleve::{hk_state_forward, hk_state_inverse, Family};
use heunhk::xi::{build_xi, XiOptions};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn complex(r: f64) -> impl Strategy<Value = C> {
    (-r..r, -r..r).prop_map(|(a, b)| C::new(a, b))
}

fn tau() -> impl Strategy<Value = C> {
    (-0.4f64..0.4, 0.8f64..1.5).prop_map(|(a, b)| C::new(a, b))
}

fn l_vector() -> impl Strategy<Value = [u32; 4]> {
    prop::array::uniform4(0u32..2)
}

fn unit(lat: &Lattice) -> f64 {
    (1..4).map(|i| lat.omega(i).norm()).fold(f64::INFINITY, f64::min)
}

fn solution(lat: Lattice, l: [u32; 4], b: C, mu: C) -> Option<IntegralSolution> {
    let d = FuchsianData::painleve_form(lat, l, b, mu).ok()?;
    IntegralSolution::new(build_xi(&d, XiOptions::default()).ok()?).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_maps_are_inverse(t in tau(), b in complex(1.2), mu in complex(1.0), fam in prop::bool::ANY) {
        let family = if fam { Family::L1000 } else { Family::L0000 };
        let lat = Lattice::from_tau(t).unwrap();
        prop_assume!(mu.norm() > 0.05);
        if let Ok(fw) = hk_state_forward(family, b, mu, &lat) {
            if let Ok((b2, m2)) = hk_state_inverse(family, fw.wp_alpha, fw.wp_prime_alpha, fw.kappa, &lat) {
                prop_assert!((b2 - b).norm() < 1e-9 * (1.0 + b.norm()), "b1 {b} -> {b2}");
                prop_assert!((m2 - mu).norm() < 1e-9 * (1.0 + mu.norm()), "mu1 {mu} -> {m2}");
            }
        }
    }

    #[test]
    fn xi_is_even_and_solves_the_product_equation(t in tau(), l in l_vector(), b in complex(1.0), mu in complex(0.8)) {
        let lat = Lattice::from_tau(t).unwrap();
        let d = FuchsianData::painleve_form(lat.clone(), l, b, mu);
        prop_assume!(d.is_ok());
        let xi = build_xi(&d.unwrap(), XiOptions::default());
        prop_assume!(xi.is_ok());
        let xi = xi.unwrap();
        prop_assert!(xi.heldout_residual < 1e-8);
        let x = lat.from_coords(0.137, 0.291);
        let (p, m) = (xi.eval(x).unwrap(), xi.eval(-x).unwrap());
        prop_assert!((p[0] - m[0]).norm() < 1e-10 * p[0].norm().max(1.0));
        prop_assert!((p[1] + m[1]).norm() < 1e-9 * p[1].norm().max(1.0));
    }

    #[test]
    fn flipping_the_root_negates_the_exponents(t in tau(), l in l_vector(), b in complex(1.0), mu in complex(0.8)) {
        let lat = Lattice::from_tau(t).unwrap();
        let sol = solution(lat, l, b, mu);
        prop_assume!(sol.is_some());
        let sol = sol.unwrap();
        prop_assume!(!sol.q_is_zero);
        let (a, f) = (hk_data(&sol), hk_data(&sol.flipped()));
        prop_assume!(a.is_ok() && f.is_ok());
        let (a, f) = (a.unwrap(), f.unwrap());
        prop_assert!(reduce_mod2(a.m1 + f.m1).norm() < 1e-8, "{} vs {}", a.m1, f.m1);
        prop_assert!(reduce_mod2(a.m3 + f.m3).norm() < 1e-8, "{} vs {}", a.m3, f.m3);
    }

    #[test]
    fn lambda_satisfies_the_equation(t in tau(), l in l_vector(), b in complex(1.0), mu in complex(0.8)) {
        let lat = Lattice::from_tau(t).unwrap();
        let sol = solution(lat.clone(), l, b, mu);
        prop_assume!(sol.is_some());
        let sol = sol.unwrap();
        for x in sol.sample_grid(4, 0.15 * unit(&lat)) {
            prop_assert!(sol.ode_residual(x).unwrap() < 1e-7);
            prop_assert!(sol.wronskian_residual(x).unwrap() < 1e-7);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn spectral_polynomial_matches_direct_invariant(t in tau(), l in prop::array::uniform4(0u32..3), seed in 0u64..1000) {
        prop_assume!(l.iter().sum::<u32>() > 0 && l.iter().sum::<u32>() <= 4);
        let lat = Lattice::from_tau(t).unwrap();
        let sd = spectral_poly_m0(l, &lat, seed).unwrap();
        let n = sd.q_poly.coeffs().len();
        prop_assert_eq!(n, 2 * sd.g + 2);
        prop_assert!((sd.q_poly.leading() - 1.0).norm() < 1e-12);
        prop_assert!(sd.spot_check(5, seed + 1).unwrap() < 1e-7);
    }
}
