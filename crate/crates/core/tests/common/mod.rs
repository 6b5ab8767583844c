#![allow(dead_code)]

use std::collections::BTreeMap;

use adelic_core::config::EngineConfig;
use adelic_core::lambda::sample::random_element;
use adelic_core::loopspace::SequencePoint;
use adelic_core::qfun::{LaurentPoly, RationalQ};
use adelic_core::scalars::{binomial, int};
use adelic_core::{Cyclotomic, LambdaElement};
use rand::Rng;

pub fn config(d: u32, e: i64, r: u32, m_max: u32) -> EngineConfig {
    EngineConfig { d, e, r, m_max, g: 2, seed: 0 }
}

/// `f` with `ε q^j / (1 - q^k)` added to entry `r`, `ε` a generator used nowhere else.
pub fn polar_mutant(f: &SequencePoint, r: u32, j: i64, k: u32) -> SequencePoint {
    let d = f.config.d;
    let eps = LambdaElement::tau(97, d);
    let bump = RationalQ::new(LaurentPoly::monomial(j, eps), BTreeMap::from([(k, 1)]));
    let mut entries = f.entries.clone();
    entries[r as usize - 1] = entries[r as usize - 1].add(&bump);
    SequencePoint::new(entries, f.config).unwrap()
}

pub fn random_string_shift<R: Rng>(rng: &mut R, config: &EngineConfig) -> BTreeMap<u32, LambdaElement> {
    let mut out = BTreeMap::new();
    for k in 1..=config.r {
        if rng.gen_bool(0.6) {
            out.insert(k, random_element(rng, config.d, config.r, 2, true));
        }
    }
    out
}

fn random_plus_laurent<R: Rng>(rng: &mut R, config: &EngineConfig) -> LaurentPoly {
    let mut p = LaurentPoly::zero(config.d);
    for e in -1..=1 {
        if rng.gen_bool(0.5) {
            p = p.add(&LaurentPoly::monomial(e, random_element(rng, config.d, config.r, 1, true)));
        }
    }
    p
}

/// Operators `D_r` with `D_r - 1` in `Λ₊[q, q^{-1}]`.
pub fn random_dq_ops<R: Rng>(rng: &mut R, config: &EngineConfig) -> BTreeMap<u32, LaurentPoly> {
    random_flow_ops(rng, config).into_iter().map(|(r, p)| (r, LaurentPoly::one(config.d).add(&p))).collect()
}

/// Operators with small free terms.
pub fn random_flow_ops<R: Rng>(rng: &mut R, config: &EngineConfig) -> BTreeMap<u32, LaurentPoly> {
    let mut out = BTreeMap::new();
    for r in 1..=config.r {
        if rng.gen_bool(0.6) {
            out.insert(r, random_plus_laurent(rng, config));
        }
    }
    out
}

pub const D: u32 = 2;

pub fn random_laurent(rng: &mut impl Rng, lo: i64, hi: i64, plus_only: bool) -> LaurentPoly {
    let mut p = LaurentPoly::zero(D);
    for e in lo..=hi {
        if rng.gen_bool(0.5) {
            p = p.add(&LaurentPoly::monomial(e, random_element(rng, D, 2, 2, plus_only)));
        }
    }
    p
}

pub fn random_rational(rng: &mut impl Rng, max_k: u32) -> RationalQ {
    let mut den = BTreeMap::new();
    for _ in 0..rng.gen_range(1..=3) {
        *den.entry(rng.gen_range(1..=max_k)).or_insert(0) += rng.gen_range(1..=2);
    }
    RationalQ::new(random_laurent(rng, -2, 4, false), den)
}

/// Taylor coefficients at `q = 0` of `q^s f`, the first `n` of them.
pub fn taylor_at_zero(f: &RationalQ, s: i64, n: usize) -> Vec<LambdaElement> {
    let den = f.denominator_poly();
    let inv = adelic_core::qfun::series_inverse(&den, n);
    let mut out = vec![LambdaElement::zero(D); n];
    for (e, c) in f.numerator().terms() {
        for (i, r) in inv.iter().enumerate() {
            let idx = e + s + i as i64;
            if (0..n as i64).contains(&idx) {
                out[idx as usize] = out[idx as usize].add(&c.scale_rational(r));
            }
        }
    }
    out
}

/// Taylor coefficients at `q = 0` of `q^s Σ_j c_j / (1 - q/η)^j`.
pub fn polar_taylor(eta: &Cyclotomic, coeffs: &[LambdaElement], s: i64, n: usize) -> Vec<LambdaElement> {
    let eta_inv = eta.inv().unwrap();
    let mut out = vec![LambdaElement::zero(D); n];
    for (j0, c) in coeffs.iter().enumerate() {
        let j = j0 as i64 + 1;
        for i in 0..n as i64 {
            let idx = i + s;
            if !(0..n as i64).contains(&idx) {
                continue;
            }
            let w = Cyclotomic::from_rational(binomial(&int(i + j - 1), (j - 1) as usize)).mul(&eta_inv.pow(i as u32));
            out[idx as usize] = out[idx as usize].add(&c.scale(&w));
        }
    }
    out
}

