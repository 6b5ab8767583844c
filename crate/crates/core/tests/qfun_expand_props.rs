mod common;

use std::collections::BTreeMap;

use adelic_core::expand::{expand_adelic, expand_at_one};
use adelic_core::qfun::{omega_pair, partial_fractions, project_plus, LaurentPoly, PairingSpec, RationalQ};
use adelic_core::scalars::rat;
use adelic_core::LambdaElement;
use proptest::prelude::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn partial_fractions_recombine(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_rational(&mut rng, 6);
        let pf = partial_fractions(&f).unwrap();
        let s = 2;
        let n = (f.numerator().max_exponent().unwrap_or(0) + s) as usize + f.denominator_poly().len() + 4;
        let want = taylor_at_zero(&f, s, n);
        let mut got = taylor_at_zero(&RationalQ::from_laurent(pf.plus.clone()), s, n);
        for part in pf.polar.values() {
            for (i, x) in polar_taylor(&part.eta(), &part.coeffs, s, n).into_iter().enumerate() {
                got[i] = got[i].add(&x);
            }
        }
        for i in 0..n {
            prop_assert!(got[i].sub(&want[i]).is_zero(), "coefficient {} of {}", i, f);
        }
    }

    #[test]
    fn projection_is_idempotent_and_kills_polar_parts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_rational(&mut rng, 6);
        let p = project_plus(&f);
        prop_assert_eq!(project_plus(&RationalQ::from_laurent(p.clone())), p.clone());
        let minus = f.sub(&RationalQ::from_laurent(p));
        prop_assert!(project_plus(&minus).is_zero());
        if !minus.is_zero() {
            prop_assert!(minus.value_at_infinity().unwrap().is_zero());
        }
    }

    #[test]
    fn pairing_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_rational(&mut rng, 4);
        let g = random_rational(&mut rng, 4);
        let pairing = PairingSpec::point(D);
        let fg = omega_pair(&f, &g, &pairing).unwrap();
        let gf = omega_pair(&g, &f, &pairing).unwrap();
        prop_assert_eq!(fg.add(&gf), LambdaElement::zero(D));
    }

    #[test]
    fn expansion_at_one_is_multiplicative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_rational(&mut rng, 4), random_rational(&mut rng, 4));
        let prec = 6;
        prop_assert_eq!(expand_at_one(&f.mul(&g), prec), expand_at_one(&f, prec).mul(&expand_at_one(&g, prec)));
    }

    #[test]
    fn adelic_expansion_is_multiplicative(seed in any::<u64>(), m in 2u32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_rational(&mut rng, 4), random_rational(&mut rng, 4));
        let a = if m == 4 { 3 } else { 1 };
        let prec = 5;
        let lhs = expand_adelic(&f.mul(&g), m, a, prec).unwrap();
        let rhs = expand_adelic(&f, m, a, prec).unwrap().mul(&expand_adelic(&g, m, a, prec).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn adelic_expansion_has_a_pole_exactly_when_m_divides_a_factor(seed in any::<u64>(), m in 1u32..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut den = BTreeMap::new();
        for _ in 0..rng.gen_range(1..=2) {
            den.insert(rng.gen_range(1..=6u32), 1);
        }
        let num = LaurentPoly::monomial(rng.gen_range(-2..=2), LambdaElement::rational(rat(rng.gen_range(1..=5), 1), D));
        let f = RationalQ::new(num, den.clone());
        let s = expand_adelic(&f, m, 1, 4).unwrap();
        let divides = den.keys().any(|k| k % m == 0);
        prop_assert_eq!(s.polar_depth() > 0, divides);
    }
}

#[test]
fn positive_space_is_isotropic() {
    let pairing = PairingSpec::point(D);
    for a in -6..=6 {
        for b in -6..=6 {
            let f = RationalQ::from_laurent(LaurentPoly::q_power(a, D));
            let g = RationalQ::from_laurent(LaurentPoly::q_power(b, D));
            assert!(omega_pair(&f, &g, &pairing).unwrap().is_zero(), "a={a} b={b}");
        }
    }
    let one = RationalQ::one(D);
    let pole = RationalQ::inv_one_minus_q_pow(1, 1, D);
    assert_eq!(omega_pair(&one, &pole, &pairing).unwrap(), LambdaElement::integer(-1, D));
}

#[test]
fn roots_of_q_recover_q() {
    let q = RationalQ::from_laurent(LaurentPoly::q_power(1, D));
    for m in 1..=6u32 {
        for a in (1..=m as i64).filter(|a| num_integer::gcd(*a, m as i64) == 1) {
            let s = expand_adelic(&q, m, a, 6).unwrap();
            let mut p = s.clone();
            for _ in 1..m {
                p = p.mul(&s);
            }
            assert_eq!(p, expand_at_one(&q, 6), "m={m} a={a}");
        }
    }
}
