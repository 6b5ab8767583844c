//! Quantum K-theory of the point: the explicit family of points of the cone, the
//! adelic membership checker, flows that preserve the cone, and reconstruction of a
//! point from its projection to `K_+^∞`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::EngineConfig;
use crate::error::{EngineError, Result};
use crate::expand::{expand_adelic, expand_at_one, series_exp, series_log, QSeries};
use crate::lambda::{sample::random_element, LambdaElement};
use crate::loopspace::{primitive_roots, project_plus_seq, SequencePoint};
use crate::qfun::{LaurentPoly, RationalQ};
use crate::scalars::rat;

/// Parameters `τ_k ∈ Λ₊` and scalar Laurent polynomials `t_r` with `t_r - 1 ∈ Λ₊`.
/// Missing `τ_k` are zero and missing `t_r` are one.
#[derive(Clone, Debug, PartialEq)]
pub struct PtParams {
    pub tau: BTreeMap<u32, LambdaElement>,
    pub t: BTreeMap<u32, LaurentPoly>,
}

impl PtParams {
    pub fn empty() -> Self {
        PtParams { tau: BTreeMap::new(), t: BTreeMap::new() }
    }

    pub fn tau(&self, k: u32, order: u32) -> LambdaElement {
        self.tau.get(&k).cloned().unwrap_or_else(|| LambdaElement::zero(order))
    }

    pub fn t(&self, r: u32, order: u32) -> LaurentPoly {
        self.t.get(&r).cloned().unwrap_or_else(|| LaurentPoly::one(order))
    }

    pub fn validate(&self) -> Result<()> {
        for (k, x) in &self.tau {
            if *k == 0 {
                return Err(EngineError::Precondition("τ indices start at 1".into()));
            }
            if !x.in_lambda_plus() {
                return Err(EngineError::Precondition(format!("τ_{k} = {x} is not in Λ₊")));
            }
        }
        for (r, x) in &self.t {
            if *r == 0 {
                return Err(EngineError::Precondition("t indices start at 1".into()));
            }
            if !x.sub(&LaurentPoly::one(x.order())).in_lambda_plus() {
                return Err(EngineError::Precondition(format!("t_{r} - 1 is not in Λ₊")));
            }
        }
        Ok(())
    }

    /// Drops zero `τ_k` and trivial `t_r`.
    pub fn canonical(&self) -> Self {
        PtParams {
            tau: self.tau.iter().filter(|(_, x)| !x.is_zero()).map(|(k, x)| (*k, x.clone())).collect(),
            t: self.t.iter().filter(|(_, x)| **x != LaurentPoly::one(x.order())).map(|(k, x)| (*k, x.clone())).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let c = self.canonical();
        let tau: Map<String, Value> = c.tau.iter().map(|(k, x)| (k.to_string(), x.to_json())).collect();
        let t: Map<String, Value> = c.t.iter().map(|(k, x)| (k.to_string(), x.to_json())).collect();
        json!({"tau": tau, "t": t})
    }

    pub fn from_json(v: &Value, order: u32) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| EngineError::Parse("params must be an object".into()))?;
        let mut out = PtParams::empty();
        for (key, val) in obj {
            let entries = val.as_object().ok_or_else(|| EngineError::Parse(format!("`{key}` must be an object")))?;
            for (idx, x) in entries {
                let i: u32 = idx.parse().map_err(|_| EngineError::Parse(format!("bad index `{idx}`")))?;
                match key.as_str() {
                    "tau" => {
                        out.tau.insert(i, LambdaElement::from_json(x, order)?);
                    }
                    "t" => {
                        out.t.insert(i, LaurentPoly::from_json(x, order)?);
                    }
                    _ => return Err(EngineError::Parse(format!("unknown params key `{key}`"))),
                }
            }
        }
        Ok(out)
    }

    /// Random parameters: `τ_k` for `k ≤ max_index` built from generators `τ_j`, `j ≤ max_index`,
    /// and `t_r = 1 + (Λ₊ terms)·q^j` with `|j| ≤ 1`.
    pub fn random<R: Rng>(rng: &mut R, config: &EngineConfig, max_index: u32) -> Self {
        let d = config.d;
        let mut p = PtParams::empty();
        for k in 1..=max_index {
            if rng.gen_bool(0.75) {
                let x = random_element(rng, d, max_index, 2, true);
                p.tau.insert(k, x);
            }
            if rng.gen_bool(0.5) {
                let mut t = LaurentPoly::one(d);
                for j in -1..=1 {
                    if rng.gen_bool(0.4) {
                        t = t.add(&LaurentPoly::monomial(j, random_element(rng, d, max_index, 1, true)));
                    }
                }
                p.t.insert(k, t);
            }
        }
        p.canonical()
    }
}

fn one_minus_q(order: u32) -> LaurentPoly {
    LaurentPoly::one(order).sub(&LaurentPoly::q_power(1, order))
}

/// `(1 - q) f`, cancelling against a `(1 - q)` denominator factor when present.
fn times_one_minus_q(f: &RationalQ) -> RationalQ {
    let mut den = f.denominator().clone();
    match den.get_mut(&1) {
        Some(e) => {
            *e -= 1;
            RationalQ::new(f.numerator().clone(), den)
        }
        None => RationalQ::new(f.numerator().mul(&one_minus_q(f.order())), den),
    }
}

/// `Σ_{k ≥ 1} Ψ^k(D_{kr}) / k(1 - q^k)`, where `Ψ^k` also sends `q ↦ q^k`.
/// Terms with `Ψ^k(D_{kr}) = 0` (in particular all `k > order`) are skipped.
fn flow_exponent(r: u32, coeff: impl Fn(u32) -> Option<LaurentPoly>, order: u32) -> RationalQ {
    let mut acc = RationalQ::zero(order);
    for k in 1..=order {
        let Some(x) = coeff(k * r) else { continue };
        let image = x.adams(k);
        if image.is_zero() {
            continue;
        }
        let term = RationalQ::new(image.scale_rational(&rat(1, k as i64)), BTreeMap::from([(k, 1)]));
        acc = acc.add(&term);
    }
    acc
}

/// `exp(x)` for a rational function whose numerator coefficients lie in `Λ₊`.
fn exp_rational(x: &RationalQ) -> Result<RationalQ> {
    if !x.numerator().in_lambda_plus() {
        return Err(EngineError::Precondition("exponent is not in Λ₊".into()));
    }
    let order = x.order();
    let mut acc = RationalQ::one(order);
    let mut power = RationalQ::one(order);
    for n in 1..=order as i64 {
        power = power.mul(x).scale_rational(&rat(1, n));
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    Ok(acc)
}

/// `e^{Σ_k Ψ^k(τ_{kr}) / k(1 - q^k)}` for each `r ≤ R`.
fn string_multipliers(tau: &BTreeMap<u32, LambdaElement>, config: &EngineConfig) -> Result<Vec<RationalQ>> {
    (1..=config.r)
        .into_par_iter()
        .map(|r| {
            let x = flow_exponent(r, |k| tau.get(&k).map(|t| LaurentPoly::constant(t.truncate(config.d))), config.d);
            exp_rational(&x)
        })
        .collect()
}

/// `f_r = (1 - q) e^{Σ_k Ψ^k(τ_{kr}) / k(1 - q^k)} t_r(q)`.
pub fn theorem2_generate(p: &PtParams, config: &EngineConfig) -> Result<SequencePoint> {
    p.validate()?;
    let mult = string_multipliers(&p.tau, config)?;
    let entries = mult
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let t = p.t(i as u32 + 1, config.d).truncate(config.d);
            times_one_minus_q(&e.mul(&RationalQ::from_laurent(t))).reduce()
        })
        .collect();
    SequencePoint::new(entries, *config)
}

/// Multiplies every `f_r` by `e^{Σ_k Ψ^k(τ'_{kr}) / k(1 - q^k)}`.
pub fn string_flow(f: &SequencePoint, tau_prime: &BTreeMap<u32, LambdaElement>) -> Result<SequencePoint> {
    for (k, x) in tau_prime {
        if !x.in_lambda_plus() {
            return Err(EngineError::Precondition(format!("τ'_{k} is not in Λ₊")));
        }
    }
    let mult = string_multipliers(tau_prime, &f.config)?;
    let entries = f.entries.iter().zip(mult).map(|(x, e)| x.mul(&e).reduce()).collect();
    SequencePoint::new(entries, f.config)
}

/// Multiplies `f_r` by `D_r` (one when missing).
pub fn dq_multiply(f: &SequencePoint, ops: &BTreeMap<u32, LaurentPoly>) -> Result<SequencePoint> {
    let entries = f
        .entries
        .iter()
        .enumerate()
        .map(|(i, x)| match ops.get(&(i as u32 + 1)) {
            Some(dr) => x.mul(&RationalQ::from_laurent(dr.clone())).reduce(),
            None => x.clone(),
        })
        .collect();
    SequencePoint::new(entries, f.config)
}

/// Multiplies `f_r` by `e^{Σ_k Ψ^k(D_{kr}) / k(1 - q^k)}`; every coefficient of every `D_k`
/// must lie in `Λ₊`.
pub fn generalized_flow(f: &SequencePoint, ops: &BTreeMap<u32, LaurentPoly>) -> Result<SequencePoint> {
    for (k, x) in ops {
        if !x.in_lambda_plus() {
            return Err(EngineError::Precondition(format!("free term of D_{k} is not in Λ₊")));
        }
    }
    let order = f.config.d;
    let entries = f
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let r = i as u32 + 1;
            let e = exp_rational(&flow_exponent(r, |k| ops.get(&k).map(|p| p.truncate(order)), order))?;
            Ok(x.mul(&e).reduce())
        })
        .collect::<Result<Vec<_>>>()?;
    SequencePoint::new(entries, f.config)
}

/// Writes `g = (1 - q) e^{T/(1 - q)} t` with `T ∈ Λ₊` and `t - 1 ∈ Λ₊`, or explains why not.
pub fn fake_cone_membership(g: &QSeries) -> Result<(LambdaElement, QSeries)> {
    // g / (1 - q) = -g / u
    let y = g.shift(-1).neg();
    let (prefix, h) = series_log(&y).map_err(|e| EngineError::NotOnCone(format!("g/(1-q) has no logarithm: {e}")))?;
    if prefix.power != 0 || !prefix.scalar.is_one() {
        return Err(EngineError::NotOnCone(format!(
            "scalar part of g/(1-q) starts with ({})·u^{}, not 1",
            prefix.scalar, prefix.power
        )));
    }
    if h.polar_depth() > 1 {
        return Err(EngineError::NotOnCone(format!("log(g/(1-q)) has a pole of order {}", h.polar_depth())));
    }
    // T/(1-q) = -T u^{-1}
    let t_elem = h.coeff(-1).neg();
    if !t_elem.in_lambda_plus() {
        return Err(EngineError::NotOnCone("polar coefficient is not in Λ₊".into()));
    }
    let regular = h.filter_nonnegative_powers();
    if let Some((n, _)) = regular.coeffs().find(|(_, c)| !c.in_lambda_plus()) {
        return Err(EngineError::NotOnCone(format!("coefficient of u^{n} in log(g/(1-q)) is not in Λ₊")));
    }
    Ok((t_elem, series_exp(&regular)?))
}

/// `e^{-T/(1-q^m)} g`, with the exponent expanded at `q = 1`.
fn untwisted_product(g: &QSeries, t_elem: &LambdaElement, m: u32) -> Result<QSeries> {
    let depth = g.polar_depth() as i64 + t_elem.order() as i64 + 1;
    let pole = expand_at_one(&RationalQ::inv_one_minus_q_pow(m, 1, t_elem.order()), g.prec() + depth);
    let mult = series_exp(&pole.scale(&t_elem.neg()))?;
    Ok(mult.mul(g))
}

/// `true` iff `e^{-T/(1-q)} g` is a power series (to the precision of `g`).
pub fn tangent_membership(g: &QSeries, t_elem: &LambdaElement) -> bool {
    match untwisted_product(g, t_elem, 1) {
        Ok(p) => p.prec() >= 0 && p.is_power_series(),
        Err(_) => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Fail,
    Unchecked,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Unchecked => "unchecked",
        }
    }
}

/// Criterion (i) for one `f_r`.
#[derive(Clone, Debug)]
pub struct RowVerdict {
    pub verdict: Verdict,
    pub t_elem: Option<LambdaElement>,
    pub t_series: Option<QSeries>,
    pub reason: Option<String>,
}

/// Criterion (ii) for one `(r, ζ_m^a)`.
#[derive(Clone, Debug)]
pub struct CellVerdict {
    pub verdict: Verdict,
    pub in_window: bool,
    pub witness: Option<QSeries>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ConeCertificate {
    pub rows: BTreeMap<u32, RowVerdict>,
    pub cells: BTreeMap<(u32, u32, u32), CellVerdict>,
}

impl ConeCertificate {
    pub fn failed_rows(&self) -> Vec<u32> {
        self.rows.iter().filter(|(_, v)| v.verdict == Verdict::Fail).map(|(r, _)| *r).collect()
    }

    pub fn failed_cells(&self) -> Vec<(u32, u32, u32)> {
        self.cells.iter().filter(|(_, v)| v.verdict == Verdict::Fail).map(|(k, _)| *k).collect()
    }

    /// Cells inside the configured window that could not be checked.
    pub fn unchecked_in_window(&self) -> Vec<(u32, u32, u32)> {
        self.cells
            .iter()
            .filter(|(_, v)| v.in_window && v.verdict == Verdict::Unchecked)
            .map(|(k, _)| *k)
            .collect()
    }

    /// No failed row or cell.
    pub fn passed(&self) -> bool {
        self.failed_rows().is_empty() && self.failed_cells().is_empty()
    }

    /// Passed, with every cell of the window checked.
    pub fn accepted(&self) -> bool {
        self.passed() && self.unchecked_in_window().is_empty()
    }

    /// Identifiers of the failures: `r{r}_zeta1_0` for rows, `r{r}_zeta{m}_{a}` for cells.
    pub fn failure_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.failed_rows().into_iter().map(|r| format!("r{r}_zeta1_0")).collect();
        ids.extend(self.failed_cells().into_iter().map(|(r, m, a)| format!("r{r}_zeta{m}_{a}")));
        ids
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|(r, v)| {
                let mut o = Map::new();
                o.insert("r".into(), json!(r));
                o.insert("status".into(), json!(v.verdict.as_str()));
                if let Some(t) = &v.t_elem {
                    o.insert("T".into(), t.to_json());
                }
                if let Some(t) = &v.t_series {
                    o.insert("t".into(), t.to_json());
                }
                if let Some(s) = &v.reason {
                    o.insert("reason".into(), json!(s));
                }
                Value::Object(o)
            })
            .collect();
        let mut cells = Map::new();
        for ((r, m, a), v) in &self.cells {
            let mut o = Map::new();
            o.insert("status".into(), json!(v.verdict.as_str()));
            o.insert("in_window".into(), json!(v.in_window));
            if let Some(w) = &v.witness {
                o.insert("witness".into(), w.to_json());
            }
            if let Some(s) = &v.reason {
                o.insert("reason".into(), json!(s));
            }
            cells.insert(format!("r{r}_zeta{m}_{a}"), Value::Object(o));
        }
        json!({
            "passed": self.passed(),
            "accepted": self.accepted(),
            "failures": self.failure_ids(),
            "unchecked_in_window": self.unchecked_in_window().iter().map(|(r, m, a)| format!("r{r}_zeta{m}_{a}")).collect::<Vec<_>>(),
            "rows": rows,
            "cells": cells,
        })
    }
}

/// Working precision for the checker: room for poles of order up to `D` on both factors.
fn work_precision(config: &EngineConfig) -> i64 {
    config.e + 2 * config.d as i64 + 2
}

/// Checks both adelic criteria for `X = pt`, where `Δ_ζ = 1`.
///
/// Row `r` tests that the expansion of `f_r` at `q = 1` lies on the fake cone, yielding
/// `T_r`. Cell `(r, ζ)` with `ζ` of order `m ≥ 2` tests that
/// `e^{-Ψ^m(T_{rm})/(1-q^m)} f_r(q^{1/m}/ζ)` is a power series; it needs `rm ≤ R`.
pub fn check_theorem1_pt(f: &SequencePoint) -> ConeCertificate {
    let config = f.config;
    let prec = work_precision(&config);
    let rows: BTreeMap<u32, RowVerdict> = (1..=config.r)
        .into_par_iter()
        .map(|r| {
            let g = expand_at_one(f.entry(r), prec);
            let v = match fake_cone_membership(&g) {
                Ok((t_elem, t_series)) => RowVerdict {
                    verdict: Verdict::Pass,
                    t_elem: Some(t_elem),
                    t_series: Some(t_series.truncate(config.e)),
                    reason: None,
                },
                Err(e) => RowVerdict { verdict: Verdict::Fail, t_elem: None, t_series: None, reason: Some(e.to_string()) },
            };
            (r, v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let window = config.window_rows();
    let keys: Vec<(u32, u32, u32)> = (1..=config.r)
        .flat_map(|r| primitive_roots(config.m_max).into_iter().filter(|(m, _)| *m >= 2).map(move |(m, a)| (r, m, a)))
        .collect();
    let cells: BTreeMap<(u32, u32, u32), CellVerdict> = keys
        .par_iter()
        .map(|&(r, m, a)| {
            let in_window = r <= window;
            let v = if r * m > config.r {
                CellVerdict {
                    verdict: Verdict::Unchecked,
                    in_window,
                    witness: None,
                    reason: Some(format!("needs T_{} beyond R = {}", r * m, config.r)),
                }
            } else {
                check_cell(f.entry(r), &rows[&(r * m)], r * m, m, a, prec, in_window, config.e)
            };
            ((r, m, a), v)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    ConeCertificate { rows, cells }
}

#[allow(clippy::too_many_arguments)]
fn check_cell(fr: &RationalQ, row: &RowVerdict, rm: u32, m: u32, a: u32, prec: i64, in_window: bool, e: i64) -> CellVerdict {
    let fail = |reason: String, witness: Option<QSeries>| CellVerdict { verdict: Verdict::Fail, in_window, witness, reason: Some(reason) };
    let Some(t_rm) = &row.t_elem else {
        return fail(format!("row {rm} is not on the fake cone"), None);
    };
    let g = match expand_adelic(fr, m, a as i64, prec) {
        Ok(g) => g,
        Err(err) => return fail(err.to_string(), None),
    };
    match untwisted_product(&g, &t_rm.adams(m), m) {
        Ok(p) if p.prec() >= 0 && p.is_power_series() => CellVerdict { verdict: Verdict::Pass, in_window, witness: None, reason: None },
        Ok(p) if p.prec() < 0 => fail("insufficient precision".into(), None),
        Ok(p) => fail(format!("pole of order {}", p.polar_depth()), Some(p.truncate(e))),
        Err(err) => fail(err.to_string(), None),
    }
}

/// Finds parameters whose point projects onto `targets`, order by order in `Λ₊`.
pub fn reconstruct(targets: &[LaurentPoly], config: &EngineConfig) -> Result<(PtParams, SequencePoint)> {
    if targets.len() != config.r as usize {
        return Err(EngineError::Precondition(format!("expected {} targets, got {}", config.r, targets.len())));
    }
    let d = config.d;
    let targets: Vec<LaurentPoly> = targets.iter().map(|t| t.truncate(d)).collect();
    for (i, t) in targets.iter().enumerate() {
        if !t.sub(&one_minus_q(d)).in_lambda_plus() {
            return Err(EngineError::Precondition(format!("target {} is not Λ₊-close to 1 - q", i + 1)));
        }
    }
    let mut params = PtParams::empty();
    for _ in 1..=d {
        let f = theorem2_generate(&params, config)?;
        let proj = project_plus_seq(&f);
        for (i, (target, got)) in targets.iter().zip(&proj).enumerate() {
            let r = i as u32 + 1;
            let rho = target.sub(got);
            if rho.is_zero() {
                continue;
            }
            let d_tau = rho.eval_at_one();
            let d_t = rho.sub(&LaurentPoly::constant(d_tau.clone())).div_one_minus_q()?;
            let tau = params.tau(r, d).add(&d_tau);
            let t = params.t(r, d).add(&d_t);
            params.tau.insert(r, tau);
            params.t.insert(r, t);
        }
        params = params.canonical();
    }
    let f = theorem2_generate(&params, config)?;
    Ok((params, f))
}

/// `Σ_{k ≥ 1} Ψ^k(τ_{kr}) / k²`, the polar coefficient of the string multiplier at `q = 1`.
pub fn expected_t(p: &PtParams, r: u32, order: u32) -> LambdaElement {
    let mut acc = LambdaElement::zero(order);
    for k in 1..=order {
        acc = acc.add(&p.tau(k * r, order).adams(k).scale_rational(&rat(1, (k * k) as i64)));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopspace::dilaton_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(d: u32, r: u32, m_max: u32) -> EngineConfig {
        EngineConfig { d, e: d as i64 + 4, r, m_max, g: 1, seed: 0 }
    }

    fn lam(s: &str, d: u32) -> LambdaElement {
        LambdaElement::parse(s, d).unwrap()
    }

    fn rq(s: &str, d: u32) -> RationalQ {
        RationalQ::parse(s, d).unwrap()
    }

    #[test]
    fn generator_examples() {
        let c = cfg(1, 2, 2);
        let p = PtParams { tau: BTreeMap::from([(1, lam("tau1", 1))]), t: BTreeMap::new() };
        let f = theorem2_generate(&p, &c).unwrap();
        assert_eq!(f.entries[0], rq("1 - q + tau1", 1));
        assert_eq!(f.entries[1], rq("1 - q", 1));
        assert!(f.entries[0].is_laurent());

        let c = cfg(2, 3, 2);
        let t = BTreeMap::from([(2, LaurentPoly::parse("1 + tau1*q^-1", 2).unwrap())]);
        let f = theorem2_generate(&PtParams { tau: BTreeMap::new(), t: t.clone() }, &c).unwrap();
        assert_eq!(f.entries[1], RationalQ::from_laurent(one_minus_q(2).mul(&t[&2])));
        let v = theorem2_generate(&PtParams::empty(), &c).unwrap();
        assert!(v.entries.iter().zip(&dilaton_point(&c).entries).all(|(a, b)| a == b));
    }

    #[test]
    fn membership_examples() {
        let d = 1;
        let g = expand_at_one(&rq("1 - q", d), 6);
        let (t, s) = fake_cone_membership(&g).unwrap();
        assert!(t.is_zero());
        assert_eq!(s, QSeries::one(5, d));
        let g = expand_at_one(&rq("1 - q + tau1", d), 6);
        let (t, s) = fake_cone_membership(&g).unwrap();
        assert_eq!(t, lam("tau1", d));
        assert_eq!(s, QSeries::one(5, d));
        assert!(fake_cone_membership(&QSeries::one(6, d)).is_err());
    }

    #[test]
    fn tangent_examples() {
        let d = 2;
        let minus_u = QSeries::monomial(1, LambdaElement::integer(-1, d), 8);
        assert!(tangent_membership(&minus_u, &LambdaElement::zero(d)));
        let polar = QSeries::monomial(-1, lam("tau1", d).neg(), 8);
        assert!(!tangent_membership(&polar, &LambdaElement::zero(d)));
        // e^{τ_1/(1-q)} q^2
        let e = exp_rational(&rq("tau1 / (1-q)", d)).unwrap().mul(&rq("q^2", d));
        assert!(tangent_membership(&expand_at_one(&e, 8), &lam("tau1", d)));
        assert!(!tangent_membership(&expand_at_one(&e, 8), &LambdaElement::zero(d)));
    }

    #[test]
    fn dilaton_passes_with_zero_t() {
        let c = cfg(2, 4, 2);
        let cert = check_theorem1_pt(&dilaton_point(&c));
        assert!(cert.accepted());
        assert!(cert.rows.values().all(|v| v.t_elem.as_ref().unwrap().is_zero()));
    }

    #[test]
    fn polar_perturbation_at_minus_one_fails() {
        let c = cfg(1, 2, 2);
        let mut f = dilaton_point(&c);
        f.entries[0] = rq("1 - q", 1).add(&rq("tau1 / (1-q^2)", 1)).sub(&rq("tau1 / (1-q)", 1).scale_rational(&rat(1, 2)));
        // f_1 = (1-q) + τ_1/(2(1+q)), regular at q = 1
        let cert = check_theorem1_pt(&f);
        assert_eq!(cert.failed_cells(), vec![(1, 2, 1)]);
        assert!(cert.failed_rows().is_empty(), "{:?}", cert.rows[&1].reason);
        let witness = cert.cells[&(1, 2, 1)].witness.as_ref().unwrap();
        assert!(!witness.coeff(-1).is_zero());
    }

    #[test]
    fn random_points_pass_and_t_matches_formula() {
        let c = EngineConfig { d: 2, e: 6, r: 4, m_max: 2, g: 1, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let p = PtParams::random(&mut rng, &c, c.r);
            let f = theorem2_generate(&p, &c).unwrap();
            let cert = check_theorem1_pt(&f);
            assert!(cert.accepted(), "{:?}", cert.failure_ids());
            for r in 1..=c.r {
                assert_eq!(cert.rows[&r].t_elem.clone().unwrap(), expected_t(&p, r, c.d));
            }
        }
    }

    #[test]
    fn window_reports_unchecked() {
        let c = EngineConfig { d: 1, e: 3, r: 2, m_max: 3, g: 1, seed: 0 };
        let cert = check_theorem1_pt(&dilaton_point(&c));
        assert!(cert.passed());
        assert!(!cert.accepted());
        assert_eq!(cert.unchecked_in_window(), vec![(1, 3, 1), (1, 3, 2)]);
    }

    #[test]
    fn flows() {
        let c = cfg(2, 3, 3);
        let p = PtParams { tau: BTreeMap::from([(1, lam("tau1", 2))]), t: BTreeMap::new() };
        let f = theorem2_generate(&p, &c).unwrap();
        let tp = BTreeMap::from([(1, lam("tau2", 2)), (3, lam("tau1", 2))]);
        let g = string_flow(&f, &tp).unwrap();
        let mut sum = p.clone();
        sum.tau.insert(1, lam("tau1 + tau2", 2));
        sum.tau.insert(3, lam("tau1", 2));
        let h = theorem2_generate(&sum, &c).unwrap();
        assert!(g.entries.iter().zip(&h.entries).all(|(a, b)| a == b));
        assert!(check_theorem1_pt(&g).accepted());

        let same = string_flow(&f, &BTreeMap::new()).unwrap();
        assert!(same.entries.iter().zip(&f.entries).all(|(a, b)| a == b));

        let ops = BTreeMap::from([(1, LaurentPoly::parse("1 + tau1*q", 2).unwrap())]);
        let m = dq_multiply(&dilaton_point(&c), &ops).unwrap();
        assert_eq!(m.entries[0], rq("(1 - q)*(1 + tau1*q)", 2));
        assert!(check_theorem1_pt(&m).accepted());

        let gen = BTreeMap::from([(1, LaurentPoly::parse("tau1*q", 2).unwrap())]);
        let gf = generalized_flow(&dilaton_point(&c), &gen).unwrap();
        assert!(check_theorem1_pt(&gf).accepted());
        let consts: BTreeMap<u32, LaurentPoly> = tp.iter().map(|(k, x)| (*k, LaurentPoly::constant(x.clone()))).collect();
        let a = generalized_flow(&f, &consts).unwrap();
        assert!(a.entries.iter().zip(&g.entries).all(|(x, y)| x == y));
        let bad = BTreeMap::from([(1, LaurentPoly::parse("1 + tau1", 2).unwrap())]);
        assert!(generalized_flow(&f, &bad).is_err());
    }

    #[test]
    fn reconstruction() {
        let c = cfg(1, 3, 1);
        let targets: Vec<LaurentPoly> = (1..=3).map(|r| LaurentPoly::parse(&format!("1 - q + tau{r}"), 1).unwrap()).collect();
        let (p, f) = reconstruct(&targets, &c).unwrap();
        for r in 1..=3 {
            assert_eq!(p.tau(r, 1), lam(&format!("tau{r}"), 1));
        }
        assert_eq!(project_plus_seq(&f), targets);

        let c = EngineConfig { d: 3, e: 7, r: 4, m_max: 2, g: 1, seed: 0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p0 = PtParams::random(&mut rng, &c, c.r);
        let f0 = theorem2_generate(&p0, &c).unwrap();
        let (p, f) = reconstruct(&project_plus_seq(&f0), &c).unwrap();
        assert_eq!(p, p0);
        assert!(f.entries.iter().zip(&f0.entries).all(|(a, b)| a == b));
        assert!(reconstruct(&vec![LaurentPoly::one(3); 4], &c).is_err());
    }
}
