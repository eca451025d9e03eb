//! Generative cross-checks of the public algebra: scalar field axioms, the
//! homomorphism and commutation laws of the semilinear operators, truncation
//! coherence across windows, the Leibniz rule for the X-derivative, and the
//! near-identity factorization round trip.

use phitau_core::{
    factor_near_identity_traced, Mat, ModelElement, PadicNumber, Sampler, Truncation,
};
use proptest::prelude::*;

fn window() -> Truncation {
    Truncation::new(3, -12, 32, 8, 12).unwrap()
}

/// An element reconstructible at any precision: terms carry exact integer
/// coefficients `digit * p^v` with slope-bounded exponents, so pipelines
/// over it stay interior to every window used by the coherence test.
fn integer_element(s: &mut Sampler, t: Truncation, terms: usize) -> ModelElement {
    let mut e = ModelElement::zero(t);
    for _ in 0..terms {
        let v = s.range_i64(0, 6);
        // Supports stay within |x| <= 2 so every pipeline stage (Frobenius
        // triples exponents, products add them) lands interior to each of
        // the compared windows.
        let x = s.range_i64(-2, 2);
        let y = s.range_i64(0, 2);
        let digit = s.range_i64(1, t.p as i64 - 1);
        let coeff = digit * (t.p as i64).pow(v as u32);
        e.insert(x, y, PadicNumber::from_i64(t.p, coeff, t.prec as i64));
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn scalar_field_axioms_hold_exactly(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let a = s.padic(3, 12, 0, 6);
        let b = s.padic(3, 12, 0, 6);
        let c = s.padic(3, 12, 0, 6);
        prop_assert!(a.mul(&b).mul(&c).sub(&a.mul(&b.mul(&c))).is_zero());
        prop_assert!(a.add(&b).add(&c).sub(&a.add(&b.add(&c))).is_zero());
        prop_assert!(a.mul(&b.add(&c)).sub(&a.mul(&b).add(&a.mul(&c))).is_zero());
        prop_assert!(a.mul(&b).sub(&b.mul(&a)).is_zero());
        let inv = a.inv().unwrap();
        prop_assert!(a.mul(&inv).sub(&PadicNumber::one(3, 12)).is_zero());
    }

    #[test]
    fn scalar_valuations_obey_the_ultrametric_laws(seed in any::<u64>()) {
        let mut s = Sampler::new(seed);
        let a = s.padic(3, 12, 0, 5);
        let b = s.padic(3, 12, 0, 5);
        prop_assert_eq!(a.mul(&b).valuation(), a.valuation() + b.valuation());
        let sum = a.add(&b);
        let floor = a.valuation().min(b.valuation());
        prop_assert!(sum.valuation() >= floor);
        if a.valuation() != b.valuation() {
            prop_assert_eq!(sum.valuation(), floor);
        }
    }

    #[test]
    fn scalar_binomials_match_the_integer_oracle(s0 in 0i64..12, k in 0u64..8) {
        let s_padic = PadicNumber::from_i64(3, s0, 12);
        let got = s_padic.binomial(k).unwrap();
        // Exact integer binomial coefficient, zero for k > s0.
        let mut oracle = 1i64;
        for i in 0..k as i64 {
            oracle = oracle * (s0 - i) / (i + 1);
        }
        let want = PadicNumber::from_i64(3, oracle, 12);
        prop_assert!(got.sub(&want).is_zero());
    }

    #[test]
    fn operators_are_ring_homomorphisms(seed in any::<u64>(), c in 2u64..=4) {
        let t = window();
        let mut s = Sampler::new(seed);
        // Frobenius scales X-exponents by p, so its homomorphism law is
        // exact on nonnegative supports, where the dropped monomials form
        // an ideal.
        let a = s.element_in(t, 5, 0, 5, 0, t.x_hi, 0, t.y_hi);
        let b = s.element_in(t, 5, 0, 5, 0, t.x_hi, 0, t.y_hi);
        let sum = a.add(&b).unwrap();
        let prod = a.mul(&b).unwrap();
        prop_assert!(sum.apply_phi().sub(&a.apply_phi().add(&b.apply_phi()).unwrap()).unwrap().is_zero());
        prop_assert!(prod.apply_phi().sub(&a.apply_phi().mul(&b.apply_phi()).unwrap()).unwrap().is_zero());

        // The X-preserving operators are homomorphisms on the full window.
        let a = s.element(t, 5, 0, 5);
        let b = s.element(t, 5, 0, 5);
        let sum = a.add(&b).unwrap();
        let prod = a.mul(&b).unwrap();
        prop_assert!(sum.apply_tau().sub(&a.apply_tau().add(&b.apply_tau()).unwrap()).unwrap().is_zero());
        prop_assert!(prod.apply_tau().sub(&a.apply_tau().mul(&b.apply_tau()).unwrap()).unwrap().is_zero());
        prop_assert!(sum.apply_gamma_int(c).sub(&a.apply_gamma_int(c).add(&b.apply_gamma_int(c)).unwrap()).unwrap().is_zero());
        prop_assert!(prod.apply_gamma_int(c).sub(&a.apply_gamma_int(c).mul(&b.apply_gamma_int(c)).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn operator_group_relations_hold(seed in any::<u64>(), c in 2u64..=4) {
        let t = window();
        let mut s = Sampler::new(seed);
        let a = s.element(t, 6, 0, 5);

        let pt = a.apply_tau().apply_phi();
        let tp = a.apply_phi().apply_tau();
        prop_assert!(pt.sub(&tp).unwrap().is_zero());

        let pg = a.apply_gamma_int(c).apply_phi();
        let gp = a.apply_phi().apply_gamma_int(c);
        prop_assert!(pg.sub(&gp).unwrap().is_zero());

        // gamma_c tau = tau^c gamma_c, the cyclotomic twist of tau.
        let lhs = a.apply_tau().apply_gamma_int(c);
        let rhs = a.apply_gamma_int(c).apply_tau_power(c as i64);
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn pipelines_cohere_across_truncations(seed in any::<u64>()) {
        let base = window();
        let bigger = [
            Truncation::new(3, -18, 40, 8, 12).unwrap(),
            Truncation::new(3, -12, 32, 10, 12).unwrap(),
            Truncation::new(3, -12, 32, 8, 16).unwrap(),
        ];
        let run = |t: Truncation, seed: u64| {
            let mut s = Sampler::new(seed);
            let f = integer_element(&mut s, t, 4);
            let g = integer_element(&mut s, t, 4);
            let h = f.mul(&g).unwrap().apply_gamma_int(2);
            h.add(&f.apply_phi().mul(&g.apply_tau()).unwrap()).unwrap()
        };
        let small = run(base, seed);
        for big in bigger {
            let wide = run(big, seed);
            prop_assert!(wide.restrict_to(base).unwrap().sub(&small).unwrap().is_zero());
        }
    }

    #[test]
    fn derivative_satisfies_leibniz(seed in any::<u64>()) {
        let t = window();
        let mut s = Sampler::new(seed);
        // Nonpositive supports keep products inside the window, so both
        // sides drop exactly the same boundary monomials.
        let f = s.element_in(t, 4, 0, 5, t.x_lo / 2, 1, 0, t.y_hi);
        let g = s.element_in(t, 4, 0, 5, t.x_lo / 2, 1, 0, t.y_hi);
        let lhs = f.mul(&g).unwrap().d_dx();
        let rhs = f.d_dx().mul(&g).unwrap().add(&f.mul(&g.d_dx()).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn near_identity_factorization_round_trips(seed in any::<u64>()) {
        let t = Truncation::new(3, -36, 37, 1, 12).unwrap();
        let mut s = Sampler::new(seed);
        let mut u = Mat::identity(2, t);
        for i in 0..2 {
            for j in 0..2 {
                let bump = s.element_slope_bounded(t, 3, 3, 1);
                *u.entry_mut(i, j) = u.entry(i, j).add(&bump).unwrap();
            }
        }
        let (u1, u2, passes) = factor_near_identity_traced(&u).unwrap();
        prop_assert!(passes <= 5);
        prop_assert!(u1.entries().all(|e| e.min_x_exponent().map_or(true, |x| x >= 0)));
        prop_assert!(u2.entries().all(|e| e.max_x_exponent().map_or(true, |x| x <= 0)));
        prop_assert!(u1.mul(&u2).unwrap().sub(&u).unwrap().is_zero());
    }
}
