//! The ground ring Λ: a truncated free λ-algebra on generators `τ_1, τ_2, …`.
//!
//! As a commutative ring Λ is polynomial in the symbols `Ψ^j(τ_k)`, `j, k ≥ 1`.
//! The Adams operations act by `Ψ^m(Ψ^j(τ_k)) = Ψ^{jm}(τ_k)`. The generator
//! `Ψ^j(τ_k)` has filtration degree `j`, so `Ψ^m` with `m > 1` raises the
//! filtration. Elements are truncated at a fixed order `D`: every monomial of
//! degree above `D` is dropped, i.e. `Λ₊^{D+1} = 0`.
//!
//! Coefficients live in cyclotomic fields so that Λ can be tensored with
//! `Q(ζ_m)` when expanding at roots of unity.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{EngineError, Result};
use crate::ring::Ring;
use crate::scalars::{rat, split_signed_terms, Cyclotomic, Rational};

/// The symbol `Ψ^j(τ_k)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct LambdaGenerator {
    pub adams_index: u32,
    pub tau_index: u32,
}

impl LambdaGenerator {
    pub fn new(adams_index: u32, tau_index: u32) -> Self {
        assert!(adams_index >= 1 && tau_index >= 1);
        LambdaGenerator { adams_index, tau_index }
    }

    pub fn degree(&self) -> u32 {
        self.adams_index
    }

    pub fn render(&self) -> String {
        format!("Psi{}(tau{})", self.adams_index, self.tau_index)
    }
}

/// A monomial in the generators; ordered by degree first.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Monomial {
    degree: u32,
    factors: Vec<(LambdaGenerator, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn from_factors(mut factors: Vec<(LambdaGenerator, u32)>) -> Self {
        factors.retain(|(_, e)| *e > 0);
        factors.sort();
        let mut merged: Vec<(LambdaGenerator, u32)> = Vec::with_capacity(factors.len());
        for (g, e) in factors {
            match merged.last_mut() {
                Some((h, f)) if *h == g => *f += e,
                _ => merged.push((g, e)),
            }
        }
        let degree = merged.iter().map(|(g, e)| g.degree() * e).sum();
        Monomial { degree, factors: merged }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn factors(&self) -> &[(LambdaGenerator, u32)] {
        &self.factors
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_one() {
            return other.clone();
        }
        if other.is_one() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ea) = self.factors[i];
            let (b, eb) = other.factors[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { degree: self.degree + other.degree, factors: out }
    }

    pub fn adams(&self, m: u32) -> Self {
        let factors = self
            .factors
            .iter()
            .map(|(g, e)| (LambdaGenerator::new(g.adams_index * m, g.tau_index), *e))
            .collect();
        Monomial::from_factors(factors)
    }

    pub fn render(&self) -> String {
        self.factors
            .iter()
            .map(|(g, e)| if *e == 1 { g.render() } else { format!("{}^{}", g.render(), e) })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// An element of Λ ⊗ Q(ζ), truncated at filtration order `order` (the `D` of the engine).
#[derive(Clone)]
pub struct LambdaElement {
    terms: BTreeMap<Monomial, Cyclotomic>,
    order: u32,
}

impl LambdaElement {
    pub fn zero(order: u32) -> Self {
        LambdaElement { terms: BTreeMap::new(), order }
    }

    pub fn one(order: u32) -> Self {
        Self::constant(Cyclotomic::one(), order)
    }

    pub fn constant(c: Cyclotomic, order: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        LambdaElement { terms, order }
    }

    pub fn rational(r: Rational, order: u32) -> Self {
        Self::constant(Cyclotomic::from_rational(r), order)
    }

    pub fn integer(n: i64, order: u32) -> Self {
        Self::rational(rat(n, 1), order)
    }

    /// `Ψ^j(τ_k)`; zero when `j` exceeds the truncation order.
    pub fn generator(adams_index: u32, tau_index: u32, order: u32) -> Self {
        Self::monomial(Monomial::from_factors(vec![(LambdaGenerator::new(adams_index, tau_index), 1)]), Cyclotomic::one(), order)
    }

    pub fn tau(k: u32, order: u32) -> Self {
        Self::generator(1, k, order)
    }

    pub fn monomial(m: Monomial, c: Cyclotomic, order: u32) -> Self {
        let mut out = Self::zero(order);
        if m.degree() <= order && !c.is_zero() {
            out.terms.insert(m, c);
        }
        out
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Cyclotomic)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Re-truncate at a (smaller) order.
    pub fn truncate(&self, order: u32) -> Self {
        LambdaElement {
            terms: self.terms.iter().filter(|(m, _)| m.degree() <= order).map(|(m, c)| (m.clone(), c.clone())).collect(),
            order: order.min(self.order),
        }
    }

    /// Same terms, with the truncation order replaced (dropping terms above it).
    pub fn with_order(&self, order: u32) -> Self {
        LambdaElement {
            terms: self.terms.iter().filter(|(m, _)| m.degree() <= order).map(|(m, c)| (m.clone(), c.clone())).collect(),
            order,
        }
    }

    /// The coefficient of the empty monomial.
    pub fn scalar_part(&self) -> Cyclotomic {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Cyclotomic::zero)
    }

    pub fn homogeneous_part(&self, degree: u32) -> Self {
        LambdaElement {
            terms: self.terms.iter().filter(|(m, _)| m.degree() == degree).map(|(m, c)| (m.clone(), c.clone())).collect(),
            order: self.order,
        }
    }

    /// Minimal degree of a stored monomial; `None` stands for `+∞` (the zero element).
    pub fn filtration_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    /// `filtration_degree ≥ 1`, i.e. membership in `Λ₊`.
    pub fn in_lambda_plus(&self) -> bool {
        self.filtration_degree().is_none_or(|d| d >= 1)
    }

    /// Largest root-of-unity order among the coefficients (1 if all rational).
    pub fn coefficient_order(&self) -> u32 {
        self.terms.values().map(Cyclotomic::order).fold(1, crate::scalars::lcm)
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut terms = if order == self.order { self.terms.clone() } else { self.truncate(order).terms };
        for (m, c) in &other.terms {
            if m.degree() > order {
                continue;
            }
            match terms.get_mut(m) {
                Some(x) => {
                    *x = x.add(c);
                    if x.is_zero() {
                        terms.remove(m);
                    }
                }
                None => {
                    terms.insert(m.clone(), c.clone());
                }
            }
        }
        LambdaElement { terms, order }
    }

    pub fn neg(&self) -> Self {
        LambdaElement { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(), order: self.order }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut terms: BTreeMap<Monomial, Cyclotomic> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.degree() + mb.degree() > order {
                    // terms are sorted by degree
                    break;
                }
                let m = ma.mul(mb);
                let c = ca.mul(cb);
                match terms.get_mut(&m) {
                    Some(x) => *x = x.add(&c),
                    None => {
                        terms.insert(m, c);
                    }
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        LambdaElement { terms, order }
    }

    pub fn scale(&self, c: &Cyclotomic) -> Self {
        if c.is_zero() {
            return Self::zero(self.order);
        }
        LambdaElement { terms: self.terms.iter().map(|(m, x)| (m.clone(), x.mul(c))).collect(), order: self.order }
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero(self.order);
        }
        LambdaElement { terms: self.terms.iter().map(|(m, x)| (m.clone(), x.scale(r))).collect(), order: self.order }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.order);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// The Adams operation `Ψ^m`: `Ψ^j(τ_k) ↦ Ψ^{jm}(τ_k)` and `ζ ↦ ζ^m` on coefficients.
    ///
    /// On coefficients of order `n` with `gcd(m, n) > 1` the root-of-unity action is not
    /// multiplicative; use [`LambdaElement::adams_linear`] where `Q(ζ)` is a scalar extension.
    pub fn adams(&self, m: u32) -> Self {
        assert!(m >= 1, "Adams index must be positive");
        if m == 1 {
            return self.clone();
        }
        self.map_terms(|mono, c| (mono.adams(m), c.galois(m as i64)))
    }

    /// `Ψ^m` acting on the generators only, `Q(ζ)`-linearly.
    pub fn adams_linear(&self, m: u32) -> Self {
        assert!(m >= 1, "Adams index must be positive");
        if m == 1 {
            return self.clone();
        }
        self.map_terms(|mono, c| (mono.adams(m), c.clone()))
    }

    fn map_terms(&self, f: impl Fn(&Monomial, &Cyclotomic) -> (Monomial, Cyclotomic)) -> Self {
        let mut out = Self::zero(self.order);
        for (mono, c) in &self.terms {
            let (m2, c2) = f(mono, c);
            out = out.add(&Self::monomial(m2, c2, self.order));
        }
        out
    }

    /// Truncated exponential; requires `x ∈ Λ₊`.
    pub fn exp(&self) -> Result<Self> {
        if !self.in_lambda_plus() {
            return Err(EngineError::Precondition("exp needs an argument in Λ₊".into()));
        }
        Ok(crate::ring::nilpotent_exp(self, self.order as usize + 1))
    }

    /// Truncated logarithm; requires `y - 1 ∈ Λ₊`.
    pub fn log(&self) -> Result<Self> {
        let w = self.sub(&Self::one(self.order));
        if !w.in_lambda_plus() {
            return Err(EngineError::Precondition("log needs an argument in 1 + Λ₊".into()));
        }
        let mut acc = Self::zero(self.order);
        let mut power = Self::one(self.order);
        for n in 1..=self.order as i64 {
            power = power.mul(&w);
            if power.is_zero() {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&power.scale_rational(&rat(sign, n)));
        }
        Ok(acc)
    }

    /// Text form such as `1/2*Psi1(tau1) + (1 + z4)*Psi2(tau3)^2`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (m, c) in &self.terms {
            let (neg, c) = match c.as_rational() {
                Some(r) if r < Rational::zero() => (true, Cyclotomic::from_rational(-r)),
                _ => (false, c.clone()),
            };
            let cs = c.render();
            let composite = c.as_rational().is_none();
            let body = if m.is_one() {
                if composite { format!("({cs})") } else { cs }
            } else if c.is_one() {
                m.render()
            } else if composite {
                format!("({cs})*{}", m.render())
            } else {
                format!("{cs}*{}", m.render())
            };
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            out.push_str(&body);
        }
        out
    }

    /// Parses text written with `tau{k}`, `Psi{j}(tau{k})`, rationals, `z{m}` and
    /// parenthesised cyclotomic coefficients, joined by `+`, `-`, `*` and `^`.
    pub fn parse(s: &str, order: u32) -> Result<Self> {
        let mut acc = Self::zero(order);
        for (sign, term) in split_signed_terms(s)? {
            let mut val = Self::integer(sign, order);
            for factor in split_factors(&term)? {
                val = val.mul(&parse_factor(&factor, order)?);
            }
            acc = acc.add(&val);
        }
        Ok(acc)
    }

    /// JSON: a list of `{monomial: [[j, k, exponent], …], coeff: "…"}`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| {
                    let mono: Vec<Value> = m
                        .factors()
                        .iter()
                        .map(|(g, e)| json!([g.adams_index, g.tau_index, e]))
                        .collect();
                    json!({"monomial": mono, "coeff": c.render()})
                })
                .collect(),
        )
    }

    /// Accepts the structured JSON list or a text string.
    pub fn from_json(v: &Value, order: u32) -> Result<Self> {
        match v {
            Value::String(s) => Self::parse(s, order),
            Value::Number(n) => Self::parse(&n.to_string(), order),
            Value::Array(items) => {
                let mut acc = Self::zero(order);
                for item in items {
                    let bad = || EngineError::Parse(format!("bad lambda term {item}"));
                    let mono = item.get("monomial").and_then(Value::as_array).ok_or_else(bad)?;
                    let coeff = item.get("coeff").ok_or_else(bad)?;
                    let coeff = match coeff {
                        Value::String(s) => Cyclotomic::parse(s)?,
                        Value::Number(n) => Cyclotomic::parse(&n.to_string())?,
                        _ => return Err(bad()),
                    };
                    let mut factors = Vec::new();
                    for f in mono {
                        let t = f.as_array().filter(|t| t.len() == 3).ok_or_else(bad)?;
                        let nums: Vec<u64> = t.iter().map(|x| x.as_u64().ok_or_else(bad)).collect::<Result<_>>()?;
                        if nums[0] == 0 || nums[1] == 0 {
                            return Err(EngineError::Parse("generator indices must be positive".into()));
                        }
                        factors.push((LambdaGenerator::new(nums[0] as u32, nums[1] as u32), nums[2] as u32));
                    }
                    acc = acc.add(&Self::monomial(Monomial::from_factors(factors), coeff, order));
                }
                Ok(acc)
            }
            _ => Err(EngineError::Parse(format!("bad lambda element {v}"))),
        }
    }
}

fn split_factors(term: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in term.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch == '*' && depth == 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(ch);
        }
    }
    out.push(cur);
    let out: Vec<String> = out.into_iter().map(|s| s.trim().to_string()).collect();
    if out.iter().any(String::is_empty) {
        return Err(EngineError::Parse(format!("empty factor in `{term}`")));
    }
    Ok(out)
}

fn parse_factor(f: &str, order: u32) -> Result<LambdaElement> {
    let bad = || EngineError::Parse(format!("bad factor `{f}`"));
    // optional trailing ^e outside parentheses
    let (base, exp) = match f.rfind('^') {
        Some(i) if !f[i..].contains(')') && (f.starts_with("tau") || f.starts_with("Psi") || f.starts_with('(')) => {
            (&f[..i], f[i + 1..].trim().parse::<u32>().map_err(|_| bad())?)
        }
        _ => (f, 1),
    };
    let base = base.trim();
    let val = if let Some(k) = base.strip_prefix("tau") {
        LambdaElement::tau(k.parse().map_err(|_| bad())?, order)
    } else if let Some(rest) = base.strip_prefix("Psi") {
        let (j, inner) = rest.split_once('(').ok_or_else(bad)?;
        let inner = inner.strip_suffix(')').ok_or_else(bad)?;
        let j: u32 = j.parse().map_err(|_| bad())?;
        let k: u32 = inner.trim().strip_prefix("tau").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if j == 0 || k == 0 {
            return Err(bad());
        }
        LambdaElement::generator(j, k, order)
    } else if let Some(inner) = base.strip_prefix('(').and_then(|b| b.strip_suffix(')')) {
        LambdaElement::parse(inner, order)?
    } else {
        LambdaElement::constant(Cyclotomic::parse(base)?, order)
    };
    if val.is_zero() && base.starts_with("tau") && base[3..].parse::<u32>().ok() == Some(0) {
        return Err(bad());
    }
    Ok(val.pow(exp))
}

impl PartialEq for LambdaElement {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl fmt::Debug for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [D={}]", self.render(), self.order)
    }
}

impl fmt::Display for LambdaElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Ring for LambdaElement {
    fn zero_like(&self) -> Self {
        Self::zero(self.order)
    }
    fn one_like(&self) -> Self {
        Self::one(self.order)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        LambdaElement::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        LambdaElement::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        LambdaElement::mul(self, other)
    }
    fn neg(&self) -> Self {
        LambdaElement::neg(self)
    }
    fn scale_rational(&self, r: &Rational) -> Self {
        LambdaElement::scale_rational(self, r)
    }
}

/// Random elements for property tests and randomized suites.
pub mod sample {
    use super::*;
    use rand::Rng;

    /// A random element with small rational coefficients, using generators
    /// `Ψ^j(τ_k)` with `k ≤ max_tau`. With `plus_only` the constant term is zero.
    pub fn random_element<R: Rng>(rng: &mut R, order: u32, max_tau: u32, n_terms: usize, plus_only: bool) -> LambdaElement {
        let mut acc = LambdaElement::zero(order);
        for _ in 0..n_terms {
            let nfac = rng.gen_range(if plus_only { 1 } else { 0 }..=2usize);
            let mut factors = Vec::new();
            for _ in 0..nfac {
                let j = rng.gen_range(1..=order.clamp(1, 2));
                let k = rng.gen_range(1..=max_tau.max(1));
                factors.push((LambdaGenerator::new(j, k), 1));
            }
            let num = rng.gen_range(-3i64..=3);
            let den = rng.gen_range(1i64..=3);
            if num == 0 {
                continue;
            }
            let c = Cyclotomic::from_rational(rat(num, den));
            acc = acc.add(&LambdaElement::monomial(Monomial::from_factors(factors), c, order));
        }
        acc
    }
}
