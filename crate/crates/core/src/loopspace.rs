//! Sequences `f = (f_1, …, f_R)` of rational functions, their adelic expansions and
//! the sequence-level pairing.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::EngineConfig;
use crate::error::{EngineError, Result};
use crate::expand::{expand_adelic, QSeries};
use crate::lambda::LambdaElement;
use crate::qfun::{omega_pair, project_plus, LaurentPoly, PairingSpec, RationalQ};
use crate::scalars::{gcd, rat};

/// A candidate point `(f_1, …, f_R)` of the loop space.
#[derive(Clone, Debug)]
pub struct SequencePoint {
    pub entries: Vec<RationalQ>,
    pub config: EngineConfig,
}

impl SequencePoint {
    pub fn new(entries: Vec<RationalQ>, config: EngineConfig) -> Result<Self> {
        if entries.len() != config.r as usize {
            return Err(EngineError::Precondition(format!("expected {} entries, got {}", config.r, entries.len())));
        }
        Ok(SequencePoint { entries, config })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `f_r`, 1-based.
    pub fn entry(&self, r: u32) -> &RationalQ {
        &self.entries[r as usize - 1]
    }

    pub fn to_json(&self) -> Value {
        json!({
            "config": self.config.to_json(),
            "entries": self.entries.iter().map(RationalQ::to_json).collect::<Vec<_>>(),
        })
    }

    /// Reads a point; the stored config is overridden by `config`, whose `R` must match.
    pub fn from_json(v: &Value, config: &EngineConfig) -> Result<Self> {
        let bad = || EngineError::Parse("point must have an `entries` list".into());
        let items = v.get("entries").and_then(Value::as_array).ok_or_else(bad)?;
        let entries = items.iter().map(|x| RationalQ::from_json(x, config.d)).collect::<Result<Vec<_>>>()?;
        SequencePoint::new(entries, *config)
    }
}

/// `v = (1 - q)(1, 1, …)`.
pub fn dilaton_point(config: &EngineConfig) -> SequencePoint {
    let one_minus_q = RationalQ::from_laurent(LaurentPoly::one(config.d).sub(&LaurentPoly::q_power(1, config.d)));
    SequencePoint { entries: vec![one_minus_q; config.r as usize], config: *config }
}

/// Primitive roots `ζ_m^a` with `m ≤ m_max`, as `(m, a)`.
pub fn primitive_roots(m_max: u32) -> Vec<(u32, u32)> {
    (1..=m_max).flat_map(|m| (0..m).filter(move |a| gcd(*a as i64, m as i64) == 1).map(move |a| (m, a))).collect()
}

/// Cells `(r, m, a)` holding the expansion of `Ψ^r(f_r(q^{1/m}/ζ_m^a))` near `q = 1`.
#[derive(Clone, Debug)]
pub struct AdelicTable {
    pub cells: BTreeMap<(u32, u32, u32), QSeries>,
}

impl AdelicTable {
    pub fn key(r: u32, m: u32, a: u32) -> String {
        format!("r{r}_zeta{m}_{a}")
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for ((r, m, a), s) in &self.cells {
            map.insert(Self::key(*r, *m, *a), s.to_json());
        }
        Value::Object(map)
    }
}

/// The adelic map. `Ψ^r` acts on the Λ-coefficients and fixes the roots of unity
/// introduced by the expansion.
pub fn adelic_map(f: &SequencePoint) -> Result<AdelicTable> {
    let keys: Vec<(u32, u32, u32)> = (1..=f.len() as u32)
        .flat_map(|r| primitive_roots(f.config.m_max).into_iter().map(move |(m, a)| (r, m, a)))
        .collect();
    let cells = keys
        .par_iter()
        .map(|&(r, m, a)| {
            let s = expand_adelic(f.entry(r), m, a as i64, f.config.e)?;
            Ok(((r, m, a), s.map_coeffs(|c| c.adams_linear(r)).with_root_order(m)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdelicTable { cells: cells.into_iter().collect() })
}

/// `(Ψ^r a, Ψ^r b)^{(r)} = r Ψ^r (a, b)`.
pub fn twisted_pair(r: u32, a: &LambdaElement, b: &LambdaElement, pairing: &PairingSpec) -> Result<LambdaElement> {
    if pairing.rank != 1 {
        return Err(EngineError::Precondition("scalar classes need a rank-one pairing".into()));
    }
    let ab = a.mul(b).mul(&pairing.gram[0][0]);
    Ok(ab.adams(r).scale_rational(&rat(r as i64, 1)))
}

/// Componentwise projection to `K_+^∞`.
pub fn project_plus_seq(f: &SequencePoint) -> Vec<LaurentPoly> {
    f.entries.iter().map(project_plus).collect()
}

/// `Ω^∞(f, g) = Σ_r Ψ^r(Ω(f_r, g_r)) / r`.
pub fn omega_infinity(f: &SequencePoint, g: &SequencePoint, pairing: &PairingSpec) -> Result<LambdaElement> {
    if f.len() != g.len() {
        return Err(EngineError::Precondition(format!("sequence lengths differ: {} vs {}", f.len(), g.len())));
    }
    let mut acc = LambdaElement::zero(f.config.d.min(g.config.d));
    for (i, (a, b)) in f.entries.iter().zip(&g.entries).enumerate() {
        let r = i as u32 + 1;
        acc = acc.add(&omega_pair(a, b, pairing)?.adams(r).scale_rational(&rat(1, r as i64)));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{binomial_series, expand_at_one};
    use crate::scalars::Cyclotomic;

    fn cfg(r: u32) -> EngineConfig {
        EngineConfig { d: 2, e: 6, r, m_max: 3, g: 1, seed: 0 }
    }

    #[test]
    fn dilaton() {
        let v = dilaton_point(&cfg(3));
        assert_eq!(v.len(), 3);
        let one_minus_q = LaurentPoly::parse("1 - q", 2).unwrap();
        assert!(project_plus_seq(&v).iter().all(|p| *p == one_minus_q));
    }

    #[test]
    fn adelic_cells_of_the_dilaton() {
        let t = adelic_map(&dilaton_point(&cfg(2))).unwrap();
        assert_eq!(t.cells[&(1, 1, 0)], QSeries::monomial(1, LambdaElement::integer(-1, 2), 6));
        // 1 - q^{1/2}/(-1) = 1 + (1+u)^{1/2}
        let b: Vec<Cyclotomic> = binomial_series(&rat(1, 2), 7).into_iter().map(Cyclotomic::from_rational).collect();
        let expected = QSeries::from_scalars(0, &b, 6, 2).add(&QSeries::one(6, 2));
        assert_eq!(t.cells[&(1, 2, 1)], expected);
        assert_eq!(t.cells[&(1, 3, 1)].root_order(), 3);
        assert_eq!(t.to_json().as_object().unwrap().len(), 2 * 4);
    }

    #[test]
    fn untwisted_cells_are_adams_images() {
        let c = cfg(2);
        let f1 = RationalQ::parse("tau1 / (1-q)", 2).unwrap();
        let f2 = RationalQ::parse("tau1*q^2 / (1-q^2)", 2).unwrap();
        let t = adelic_map(&SequencePoint::new(vec![f1.clone(), f2.clone()], c).unwrap()).unwrap();
        assert_eq!(t.cells[&(1, 1, 0)], QSeries::monomial(-1, LambdaElement::tau(1, 2).neg(), 6));
        assert_eq!(t.cells[&(2, 1, 0)], expand_at_one(&f2, 6).map_coeffs(|x| x.adams(2)));
    }

    #[test]
    fn conjugate_cells() {
        let c = cfg(1);
        let f = RationalQ::parse("(2 + q^3) / (1-q)^2 (1-q^3)", 2).unwrap();
        let t = adelic_map(&SequencePoint::new(vec![f], c).unwrap()).unwrap();
        let (x, y) = (&t.cells[&(1, 3, 1)], &t.cells[&(1, 3, 2)]);
        assert_eq!(x.map_coeffs(conj), *y);
    }

    fn conj(x: &LambdaElement) -> LambdaElement {
        let mut out = LambdaElement::zero(x.order());
        for (m, c) in x.terms() {
            out = out.add(&LambdaElement::monomial(m.clone(), c.conj(), x.order()));
        }
        out
    }

    #[test]
    fn twisted_pairing() {
        let pt = PairingSpec::point(3);
        let one = LambdaElement::one(3);
        let tau = LambdaElement::tau(1, 3);
        assert_eq!(twisted_pair(1, &tau, &one, &pt).unwrap(), tau);
        assert_eq!(twisted_pair(2, &one, &one, &pt).unwrap(), LambdaElement::integer(2, 3));
        assert_eq!(twisted_pair(2, &tau, &one, &pt).unwrap(), LambdaElement::generator(2, 1, 3).scale_rational(&rat(2, 1)));
    }

    #[test]
    fn sequence_pairing() {
        let pt = PairingSpec::point(2);
        let c = cfg(3);
        let zero = SequencePoint::new(vec![RationalQ::zero(2); 3], c).unwrap();
        assert!(omega_infinity(&zero, &zero, &pt).unwrap().is_zero());
        let v = dilaton_point(&c);
        assert!(omega_infinity(&v, &v, &pt).unwrap().is_zero());
        let mut f = zero.clone();
        f.entries[0] = RationalQ::one(2);
        let mut g = zero.clone();
        g.entries[0] = RationalQ::parse("1 / (1-q)", 2).unwrap();
        assert_eq!(omega_infinity(&f, &g, &pt).unwrap(), LambdaElement::integer(-1, 2));
        let short = SequencePoint { entries: vec![RationalQ::zero(2)], config: cfg(1) };
        assert!(omega_infinity(&short, &f, &pt).is_err());
    }
}
