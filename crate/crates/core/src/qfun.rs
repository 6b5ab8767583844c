//! Functions of `q` with coefficients in Λ: Laurent polynomials, rational functions
//! whose denominators are products of `(1 - q^k)`, partial fractions and the
//! residue pairing.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{EngineError, Result};
use crate::lambda::LambdaElement;
use crate::ring::Ring;
use crate::scalars::{gcd, int, Cyclotomic, Rational};

/// `Σ_e c_e q^e` with finitely many nonzero `c_e ∈ Λ`.
#[derive(Clone)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, LambdaElement>,
    order: u32,
}

impl LaurentPoly {
    pub fn zero(order: u32) -> Self {
        LaurentPoly { terms: BTreeMap::new(), order }
    }

    pub fn one(order: u32) -> Self {
        Self::constant(LambdaElement::one(order))
    }

    pub fn constant(c: LambdaElement) -> Self {
        Self::monomial(0, c)
    }

    /// `c q^e`.
    pub fn monomial(e: i64, c: LambdaElement) -> Self {
        let order = c.order();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        LaurentPoly { terms, order }
    }

    /// `q^e`.
    pub fn q_power(e: i64, order: u32) -> Self {
        Self::monomial(e, LambdaElement::one(order))
    }

    /// A Laurent polynomial with rational coefficients `coeffs[i] q^{shift + i}`.
    pub fn from_rationals(shift: i64, coeffs: &[Rational], order: u32) -> Self {
        let mut out = Self::zero(order);
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                out.terms.insert(shift + i as i64, LambdaElement::rational(c.clone(), order));
            }
        }
        out
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &LambdaElement)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: i64) -> LambdaElement {
        self.terms.get(&e).cloned().unwrap_or_else(|| LambdaElement::zero(self.order))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    fn insert_add(&mut self, e: i64, c: LambdaElement) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut out = LaurentPoly { terms: BTreeMap::new(), order };
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            out.insert_add(*e, c.truncate(order));
        }
        out
    }

    pub fn neg(&self) -> Self {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (*e, c.neg())).collect(), order: self.order }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let mut out = LaurentPoly { terms: BTreeMap::new(), order };
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                out.insert_add(ea + eb, ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &LambdaElement) -> Self {
        let mut out = LaurentPoly { terms: BTreeMap::new(), order: self.order.min(c.order()) };
        for (e, x) in &self.terms {
            out.insert_add(*e, x.mul(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        let mut out = Self::zero(self.order);
        for (e, x) in &self.terms {
            out.insert_add(*e, x.scale_rational(r));
        }
        out
    }

    /// Multiply by a polynomial with rational coefficients (low to high).
    pub fn mul_rational_poly(&self, p: &[Rational]) -> Self {
        let mut out = Self::zero(self.order);
        for (e, c) in &self.terms {
            for (i, r) in p.iter().enumerate() {
                if !r.is_zero() {
                    out.insert_add(e + i as i64, c.scale_rational(r));
                }
            }
        }
        out
    }

    pub fn shift(&self, s: i64) -> Self {
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (e + s, c.clone())).collect(), order: self.order }
    }

    /// `f(q^s)`; a negative `s` is allowed and gives `f(q^{-|s|})`.
    pub fn substitute_power(&self, s: i64) -> Self {
        assert!(s != 0);
        LaurentPoly { terms: self.terms.iter().map(|(e, c)| (e * s, c.clone())).collect(), order: self.order }
    }

    /// `Ψ^m`: Adams on coefficients combined with `q ↦ q^m`.
    pub fn adams(&self, m: u32) -> Self {
        let mut out = Self::zero(self.order);
        for (e, c) in &self.terms {
            out.insert_add(e * m as i64, c.adams(m));
        }
        out
    }

    /// `Ψ^m` with root-of-unity coefficients held fixed.
    pub fn adams_linear(&self, m: u32) -> Self {
        let mut out = Self::zero(self.order);
        for (e, c) in &self.terms {
            out.insert_add(e * m as i64, c.adams_linear(m));
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&LambdaElement) -> LambdaElement) -> Self {
        let mut out = Self::zero(self.order);
        for (e, c) in &self.terms {
            out.insert_add(*e, f(c));
        }
        out
    }

    pub fn truncate(&self, order: u32) -> Self {
        let mut out = Self::zero(order.min(self.order));
        for (e, c) in &self.terms {
            out.insert_add(*e, c.truncate(order));
        }
        out
    }

    /// Value at `q = 1`.
    pub fn eval_at_one(&self) -> LambdaElement {
        self.terms.values().fold(LambdaElement::zero(self.order), |acc, c| acc.add(c))
    }

    /// Exact quotient by `(1 - q)`; fails unless the value at `q = 1` vanishes.
    pub fn div_one_minus_q(&self) -> Result<Self> {
        if !self.eval_at_one().is_zero() {
            return Err(EngineError::Domain("not divisible by 1-q".into()));
        }
        // f = (1-q) g  ⇔  g_e = Σ_{i ≤ e} f_i
        let mut out = Self::zero(self.order);
        let mut running = LambdaElement::zero(self.order);
        let (Some(lo), Some(hi)) = (self.min_exponent(), self.max_exponent()) else {
            return Ok(out);
        };
        for e in lo..hi {
            running = running.add(&self.coeff(e));
            out.insert_add(e, running.clone());
        }
        Ok(out)
    }

    /// Coefficient of every monomial in `q` lies in `Λ₊`.
    pub fn in_lambda_plus(&self) -> bool {
        self.terms.values().all(LambdaElement::in_lambda_plus)
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (e, c) in &self.terms {
            let qpart = match e {
                0 => String::new(),
                1 => "q".into(),
                _ => format!("q^{e}"),
            };
            let single = c.len() == 1;
            let cs = c.render();
            let (neg, cs) = match cs.strip_prefix('-') {
                Some(rest) if single => (true, rest.to_string()),
                _ => (false, cs),
            };
            let body = if qpart.is_empty() {
                if single { cs } else { format!("({cs})") }
            } else if cs == "1" {
                qpart
            } else if single {
                format!("{cs}*{qpart}")
            } else {
                format!("({cs})*{qpart}")
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

    /// Parses sums of products of Λ factors and `q`, `q^e` factors.
    pub fn parse(s: &str, order: u32) -> Result<Self> {
        let s = s.trim();
        let s = strip_outer_parens(s);
        let mut acc = Self::zero(order);
        for (sign, term) in crate::scalars::split_signed_terms(s)? {
            let mut e = 0i64;
            let mut coeff = LambdaElement::integer(sign, order);
            let mut poly = LaurentPoly::one(order);
            for factor in split_top_level(&term, '*') {
                let f = factor.trim();
                if f == "q" {
                    e += 1;
                } else if let Some(x) = f.strip_prefix("q^") {
                    let x = x.trim().trim_start_matches('(').trim_end_matches(')');
                    e += x.parse::<i64>().map_err(|_| EngineError::Parse(format!("bad exponent in `{f}`")))?;
                } else if f.starts_with('(') && f.contains('q') {
                    poly = poly.mul(&LaurentPoly::parse(f, order)?);
                } else {
                    coeff = coeff.mul(&LambdaElement::parse(f, order)?);
                }
            }
            acc = acc.add(&poly.mul(&Self::monomial(e, coeff)));
        }
        Ok(acc)
    }

    /// JSON: `[[exponent, lambda], …]`.
    pub fn to_json(&self) -> Value {
        Value::Array(self.terms.iter().map(|(e, c)| json!([e, c.to_json()])).collect())
    }

    pub fn from_json(v: &Value, order: u32) -> Result<Self> {
        match v {
            Value::String(s) => Self::parse(s, order),
            Value::Number(_) => Self::parse(&v.to_string(), order),
            Value::Array(items) => {
                let mut acc = Self::zero(order);
                for item in items {
                    let bad = || EngineError::Parse(format!("bad Laurent term {item}"));
                    let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                    let e = pair[0].as_i64().ok_or_else(bad)?;
                    acc.insert_add(e, LambdaElement::from_json(&pair[1], order)?);
                }
                Ok(acc)
            }
            _ => Err(EngineError::Parse(format!("bad Laurent polynomial {v}"))),
        }
    }
}

pub(crate) fn strip_outer_parens(s: &str) -> &str {
    let s = s.trim();
    if s.starts_with('(') && s.ends_with(')') {
        let mut depth = 0;
        for (i, ch) in s.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i != s.len() - 1 {
                        return s;
                    }
                }
                _ => {}
            }
        }
        return strip_outer_parens(&s[1..s.len() - 1]);
    }
    s
}

pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if ch == sep && depth == 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(ch);
        }
    }
    out.push(cur);
    out
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Ring for LaurentPoly {
    fn zero_like(&self) -> Self {
        Self::zero(self.order)
    }
    fn one_like(&self) -> Self {
        Self::one(self.order)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        LaurentPoly::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        LaurentPoly::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        LaurentPoly::mul(self, o)
    }
    fn neg(&self) -> Self {
        LaurentPoly::neg(self)
    }
    fn scale_rational(&self, r: &Rational) -> Self {
        LaurentPoly::scale_rational(self, r)
    }
}

// ---------------------------------------------------------------------------
// rational polynomial helpers (coefficients low to high)

/// `(1 - q^k)^e` expanded.
fn one_minus_q_pow(k: u32, e: u32) -> Vec<Rational> {
    let mut p = vec![Rational::one()];
    for _ in 0..e {
        let mut next = vec![Rational::zero(); p.len() + k as usize];
        for (i, c) in p.iter().enumerate() {
            next[i] += c;
            next[i + k as usize] -= c;
        }
        p = next;
    }
    p
}

fn rpoly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `∏_k (1 - q^k)^{e_k}` as a dense polynomial.
pub fn denominator_poly(den: &BTreeMap<u32, u32>) -> Vec<Rational> {
    den.iter().fold(vec![Rational::one()], |acc, (k, e)| rpoly_mul(&acc, &one_minus_q_pow(*k, *e)))
}

/// First `n` coefficients of `1/p` as a power series; needs `p(0) ≠ 0`.
pub fn series_inverse(p: &[Rational], n: usize) -> Vec<Rational> {
    let p0_inv = p[0].recip();
    let mut out: Vec<Rational> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = if i == 0 { Rational::one() } else { Rational::zero() };
        for j in 1..=i.min(p.len() - 1) {
            acc -= &p[j] * &out[i - j];
        }
        out.push(acc * &p0_inv);
    }
    out
}

/// Divides a polynomial with Λ coefficients (all exponents ≥ 0) by a rational polynomial.
fn lpoly_divrem(a: &LaurentPoly, b: &[Rational]) -> (LaurentPoly, LaurentPoly) {
    let order = a.order;
    let db = b.len() - 1;
    let lead_inv = b[db].recip();
    let mut rem = a.clone();
    let mut quo = LaurentPoly::zero(order);
    while let Some(top) = rem.max_exponent() {
        if top < db as i64 {
            break;
        }
        let c = rem.coeff(top).scale_rational(&lead_inv);
        let shift = top - db as i64;
        for (i, r) in b.iter().enumerate() {
            if !r.is_zero() {
                rem.insert_add(shift + i as i64, c.scale_rational(&-r));
            }
        }
        quo.insert_add(shift, c);
    }
    (quo, rem)
}

// ---------------------------------------------------------------------------

/// `numerator / ∏_k (1 - q^k)^{e_k}`; not necessarily reduced.
#[derive(Clone)]
pub struct RationalQ {
    numerator: LaurentPoly,
    denominator: BTreeMap<u32, u32>,
}

impl RationalQ {
    pub fn new(numerator: LaurentPoly, denominator: BTreeMap<u32, u32>) -> Self {
        let denominator = denominator.into_iter().filter(|(k, e)| *e > 0 && *k > 0).collect();
        RationalQ { numerator, denominator }
    }

    pub fn from_laurent(p: LaurentPoly) -> Self {
        RationalQ { numerator: p, denominator: BTreeMap::new() }
    }

    pub fn zero(order: u32) -> Self {
        Self::from_laurent(LaurentPoly::zero(order))
    }

    pub fn one(order: u32) -> Self {
        Self::from_laurent(LaurentPoly::one(order))
    }

    pub fn constant(c: LambdaElement) -> Self {
        Self::from_laurent(LaurentPoly::constant(c))
    }

    /// `1 / (1 - q^k)^e`.
    pub fn inv_one_minus_q_pow(k: u32, e: u32, order: u32) -> Self {
        Self::new(LaurentPoly::one(order), BTreeMap::from([(k, e)]))
    }

    pub fn numerator(&self) -> &LaurentPoly {
        &self.numerator
    }

    pub fn denominator(&self) -> &BTreeMap<u32, u32> {
        &self.denominator
    }

    pub fn order(&self) -> u32 {
        self.numerator.order()
    }

    pub fn is_laurent(&self) -> bool {
        self.denominator.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn denominator_poly(&self) -> Vec<Rational> {
        denominator_poly(&self.denominator)
    }

    /// Total pole order `Σ_k e_k` counted with multiplicity at `q = 1`.
    pub fn pole_order_bound(&self) -> u32 {
        self.denominator.values().sum()
    }

    fn rescaled_numerator(&self, target: &BTreeMap<u32, u32>) -> LaurentPoly {
        let mut extra = BTreeMap::new();
        for (k, e) in target {
            let have = self.denominator.get(k).copied().unwrap_or(0);
            if *e > have {
                extra.insert(*k, e - have);
            }
        }
        if extra.is_empty() {
            self.numerator.clone()
        } else {
            self.numerator.mul_rational_poly(&denominator_poly(&extra))
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut den = self.denominator.clone();
        for (k, e) in &other.denominator {
            let slot = den.entry(*k).or_insert(0);
            *slot = (*slot).max(*e);
        }
        let num = self.rescaled_numerator(&den).add(&other.rescaled_numerator(&den));
        RationalQ { numerator: num, denominator: den }
    }

    pub fn neg(&self) -> Self {
        RationalQ { numerator: self.numerator.neg(), denominator: self.denominator.clone() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut den = self.denominator.clone();
        for (k, e) in &other.denominator {
            *den.entry(*k).or_insert(0) += e;
        }
        RationalQ { numerator: self.numerator.mul(&other.numerator), denominator: den }
    }

    pub fn scale(&self, c: &LambdaElement) -> Self {
        RationalQ { numerator: self.numerator.scale(c), denominator: self.denominator.clone() }
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        RationalQ { numerator: self.numerator.scale_rational(r), denominator: self.denominator.clone() }
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(self.order()), |acc, _| acc.mul(self))
    }

    /// `f(q^s)`.
    pub fn substitute_power(&self, s: u32) -> Self {
        assert!(s >= 1);
        RationalQ {
            numerator: self.numerator.substitute_power(s as i64),
            denominator: self.denominator.iter().map(|(k, e)| (k * s, *e)).collect(),
        }
    }

    /// `f(q^{-1})`, using `1 - q^{-k} = -q^{-k}(1 - q^k)`.
    pub fn invert_q(&self) -> Self {
        let mut num = self.numerator.substitute_power(-1);
        let mut shift = 0i64;
        let mut sign = 1i64;
        for (k, e) in &self.denominator {
            shift += (*k as i64) * (*e as i64);
            if e % 2 == 1 {
                sign = -sign;
            }
        }
        num = num.shift(shift).scale_rational(&int(sign));
        RationalQ { numerator: num, denominator: self.denominator.clone() }
    }

    /// `Ψ^m(f)`: Adams on coefficients together with `q ↦ q^m`.
    pub fn adams(&self, m: u32) -> Self {
        RationalQ {
            numerator: self.numerator.adams(m),
            denominator: self.denominator.iter().map(|(k, e)| (k * m, *e)).collect(),
        }
    }

    /// Cancels factors `(1 - q^k)` that divide the numerator exactly.
    pub fn reduce(&self) -> Self {
        let mut num = self.numerator.clone();
        let mut den = self.denominator.clone();
        if num.is_zero() {
            return Self::zero(self.order());
        }
        let keys: Vec<u32> = den.keys().rev().copied().collect();
        for k in keys {
            let factor = one_minus_q_pow(k, 1);
            while den.get(&k).copied().unwrap_or(0) > 0 {
                let lo = num.min_exponent().unwrap_or(0);
                let (quo, rem) = lpoly_divrem(&num.shift(-lo), &factor);
                if !rem.is_zero() {
                    break;
                }
                num = quo.shift(lo);
                let e = den.get_mut(&k).unwrap();
                *e -= 1;
                if *e == 0 {
                    den.remove(&k);
                }
            }
        }
        RationalQ { numerator: num, denominator: den }
    }

    /// Reduced form as a Laurent polynomial, if it is one.
    pub fn as_laurent(&self) -> Option<LaurentPoly> {
        let r = self.reduce();
        r.is_laurent().then_some(r.numerator)
    }

    /// Coefficient of `q^{-1}` in the expansion at `q = 0`.
    pub fn residue_at_zero(&self) -> LambdaElement {
        let order = self.order();
        let Some(lo) = self.numerator.min_exponent() else {
            return LambdaElement::zero(order);
        };
        if lo >= 0 {
            return LambdaElement::zero(order);
        }
        let n = (-lo) as usize;
        let inv = series_inverse(&self.denominator_poly(), n);
        let mut acc = LambdaElement::zero(order);
        for (e, c) in self.numerator.terms() {
            let need = -1 - e;
            if need < 0 {
                break;
            }
            let r = &inv[need as usize];
            if !r.is_zero() {
                acc = acc.add(&c.scale_rational(r));
            }
        }
        acc
    }

    /// `Res_{q=∞} f(q) dq = -Res_{w=0} f(1/w) w^{-2} dw`.
    pub fn residue_at_infinity(&self) -> LambdaElement {
        let g = self.invert_q();
        let g = RationalQ { numerator: g.numerator.shift(-2), denominator: g.denominator };
        g.residue_at_zero().neg()
    }

    /// Value at `q = 0` when finite.
    pub fn value_at_zero(&self) -> Option<LambdaElement> {
        let r = self.reduce();
        match r.numerator.min_exponent() {
            None => Some(LambdaElement::zero(self.order())),
            Some(lo) if lo < 0 => None,
            Some(_) => Some(r.numerator.coeff(0)),
        }
    }

    /// Value at `q = ∞` when finite.
    pub fn value_at_infinity(&self) -> Option<LambdaElement> {
        self.invert_q().value_at_zero()
    }

    pub fn render(&self) -> String {
        if self.denominator.is_empty() {
            return self.numerator.render();
        }
        let den: Vec<String> = self
            .denominator
            .iter()
            .map(|(k, e)| {
                let base = if *k == 1 { "(1-q)".to_string() } else { format!("(1-q^{k})") };
                if *e == 1 { base } else { format!("{base}^{e}") }
            })
            .collect();
        format!("({}) / {}", self.numerator.render(), den.join(" "))
    }

    /// Parses `num` or `num / (1-q)^a (1-q^k)^b …`.
    pub fn parse(s: &str, order: u32) -> Result<Self> {
        let parts = split_top_level(s, '/');
        // a rational coefficient like `1/2*tau1` also contains '/', so only split at the last
        // top-level slash whose right side starts with a `(1-q` factor
        let mut split_at = None;
        let mut acc = 0;
        for (i, p) in parts.iter().enumerate() {
            if i > 0 && p.trim_start().starts_with("(1-q") {
                split_at = Some(acc);
            }
            acc += p.len() + 1;
        }
        let Some(pos) = split_at else {
            return Ok(Self::from_laurent(LaurentPoly::parse(s, order)?));
        };
        let num = LaurentPoly::parse(&s[..pos - 1], order)?;
        let mut den = BTreeMap::new();
        let bad = || EngineError::Parse(format!("bad denominator in `{s}`"));
        let mut rest = s[pos..].trim();
        while !rest.is_empty() {
            let body = rest.strip_prefix("(1-q").ok_or_else(bad)?;
            let close = body.find(')').ok_or_else(bad)?;
            let k: u32 = if close == 0 { 1 } else { body[..close].strip_prefix('^').ok_or_else(bad)?.parse().map_err(|_| bad())? };
            rest = body[close + 1..].trim_start();
            let mut e = 1u32;
            if let Some(r) = rest.strip_prefix('^') {
                let end = r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len());
                e = r[..end].parse().map_err(|_| bad())?;
                rest = r[end..].trim_start();
            }
            rest = rest.trim_start_matches('*').trim_start();
            if k == 0 {
                return Err(bad());
            }
            *den.entry(k).or_insert(0) += e;
        }
        Ok(Self::new(num, den))
    }

    /// JSON: `{num, den: [[k, multiplicity], …], text}`.
    pub fn to_json(&self) -> Value {
        let den: Vec<Value> = self.denominator.iter().map(|(k, e)| json!([k, e])).collect();
        json!({"num": self.numerator.to_json(), "den": den, "text": self.render()})
    }

    pub fn from_json(v: &Value, order: u32) -> Result<Self> {
        match v {
            Value::String(s) => Self::parse(s, order),
            Value::Object(obj) => {
                let bad = || EngineError::Parse(format!("bad rational function {v}"));
                let num = LaurentPoly::from_json(obj.get("num").ok_or_else(bad)?, order)?;
                let mut den = BTreeMap::new();
                if let Some(d) = obj.get("den") {
                    for item in d.as_array().ok_or_else(bad)? {
                        let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
                        let k = pair[0].as_u64().filter(|k| *k > 0).ok_or_else(bad)? as u32;
                        let e = pair[1].as_u64().ok_or_else(bad)? as u32;
                        *den.entry(k).or_insert(0) += e;
                    }
                }
                Ok(Self::new(num, den))
            }
            _ => Ok(Self::from_laurent(LaurentPoly::from_json(v, order)?)),
        }
    }
}

impl PartialEq for RationalQ {
    fn eq(&self, other: &Self) -> bool {
        let a = self.numerator.mul_rational_poly(&other.denominator_poly());
        let b = other.numerator.mul_rational_poly(&self.denominator_poly());
        a == b
    }
}

impl fmt::Debug for RationalQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for RationalQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Ring for RationalQ {
    fn zero_like(&self) -> Self {
        RationalQ::zero(self.order())
    }
    fn one_like(&self) -> Self {
        RationalQ::one(self.order())
    }
    fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        RationalQ::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        RationalQ::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        RationalQ::mul(self, o)
    }
    fn neg(&self) -> Self {
        RationalQ::neg(self)
    }
    fn scale_rational(&self, r: &Rational) -> Self {
        RationalQ::scale_rational(self, r)
    }
}

// ---------------------------------------------------------------------------
// partial fractions

/// The principal part of a rational function at `q = η`, `η = ζ_m^a`:
/// `Σ_{j=1}^{n} c_j / (1 - q/η)^j` with `coeffs[j-1] = c_j ∈ Λ ⊗ Q(ζ_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarPart {
    pub m: u32,
    pub a: u32,
    pub coeffs: Vec<LambdaElement>,
}

impl PolarPart {
    pub fn eta(&self) -> Cyclotomic {
        Cyclotomic::zeta_pow(self.m, self.a as i64)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "a": self.a,
            "coeffs": self.coeffs.iter().map(LambdaElement::to_json).collect::<Vec<_>>(),
        })
    }
}

/// `f = plus + Σ_η polar[η]`, with `remainder / denominator` the proper part.
#[derive(Clone, Debug)]
pub struct PartialFractions {
    pub plus: LaurentPoly,
    pub polar: BTreeMap<(u32, u32), PolarPart>,
    pub remainder: LaurentPoly,
    pub denominator: BTreeMap<u32, u32>,
}

/// Splits `f = L + B/Den` with `L` Laurent and `deg B < deg Den`.
fn split_plus(f: &RationalQ) -> (LaurentPoly, LaurentPoly) {
    let order = f.order();
    if f.is_laurent() {
        return (f.numerator.clone(), LaurentPoly::zero(order));
    }
    let den = f.denominator_poly();
    let s = (-f.numerator.min_exponent().unwrap_or(0)).max(0);
    let n0 = f.numerator.shift(s);
    // P_low = N0 / Den mod q^s
    let mut p_low = LaurentPoly::zero(order);
    if s > 0 {
        let inv = series_inverse(&den, s as usize);
        for (e, c) in n0.terms() {
            if *e >= s {
                break;
            }
            for (i, r) in inv.iter().enumerate().take((s - e) as usize) {
                if !r.is_zero() {
                    p_low.insert_add(e + i as i64, c.scale_rational(r));
                }
            }
        }
    }
    let h = n0.sub(&p_low.mul_rational_poly(&den)).shift(-s);
    let (p_high, rem) = lpoly_divrem(&h, &den);
    (p_low.shift(-s).add(&p_high), rem)
}

/// The Laurent-polynomial part of `f`, i.e. its projection to `K_+` along `K_-`.
pub fn project_plus(f: &RationalQ) -> LaurentPoly {
    split_plus(f).0
}

pub(crate) fn cyc_series_mul(a: &[Cyclotomic], b: &[Cyclotomic], n: usize) -> Vec<Cyclotomic> {
    let mut out = vec![Cyclotomic::zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

pub(crate) fn cyc_series_inverse(p: &[Cyclotomic], n: usize) -> Result<Vec<Cyclotomic>> {
    let p0_inv = p[0].inv()?;
    let mut out: Vec<Cyclotomic> = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = if i == 0 { Cyclotomic::one() } else { Cyclotomic::zero() };
        for j in 1..=i.min(p.len() - 1) {
            acc = acc.sub(&p[j].mul(&out[i - j]));
        }
        out.push(acc.mul(&p0_inv));
    }
    Ok(out)
}

/// Coefficients in `w` of `(1 - w)^i`, up to `w^{n-1}`.
fn one_minus_w_pow(i: u64, n: usize) -> Vec<Rational> {
    crate::scalars::binomial_row(i, n).into_iter().enumerate().map(|(j, c)| if j % 2 == 1 { -c } else { c }).collect()
}

fn divisors(k: u32) -> Vec<u32> {
    (1..=k).filter(|d| k.is_multiple_of(*d)).collect()
}

/// Principal part at `η = ζ_m^a` of `rem / ∏(1 - q^k)^{e_k}`.
fn polar_part_at(rem: &LaurentPoly, den: &BTreeMap<u32, u32>, m: u32, a: u32) -> Result<PolarPart> {
    let eta = Cyclotomic::zeta_pow(m, a as i64);
    let mu: u32 = den.iter().filter(|(k, _)| *k % m == 0).map(|(_, e)| e).sum();
    let n = mu as usize;
    let order = rem.order();
    if n == 0 {
        return Ok(PolarPart { m, a, coeffs: vec![] });
    }
    // Den(η(1-w)) = w^μ U(w)
    let mut u = vec![Cyclotomic::one()];
    for (k, e) in den {
        let row = one_minus_w_pow(*k as u64, n + 1);
        let factor: Vec<Cyclotomic> = if k % m == 0 {
            // (1 - (1-w)^k) / w
            row.iter().skip(1).map(|c| Cyclotomic::from_rational(-c)).collect()
        } else {
            let ek = eta.pow(*k);
            let mut f: Vec<Cyclotomic> = row.iter().map(|c| ek.scale(&-c)).collect();
            f[0] = f[0].add(&Cyclotomic::one());
            f
        };
        for _ in 0..*e {
            u = cyc_series_mul(&u, &factor, n);
        }
    }
    let u_inv = cyc_series_inverse(&u, n)?;
    // rem(η(1-w)) to order n
    let mut b = vec![LambdaElement::zero(order); n];
    for (i, c) in rem.terms() {
        let scaled = c.scale(&eta.pow(*i as u32));
        for (j, r) in one_minus_w_pow(*i as u64, n).iter().enumerate() {
            if !r.is_zero() {
                b[j] = b[j].add(&scaled.scale_rational(r));
            }
        }
    }
    let mut coeffs = vec![LambdaElement::zero(order); n];
    for t in 0..n {
        let mut acc = LambdaElement::zero(order);
        for j in 0..=t {
            if !u_inv[t - j].is_zero() {
                acc = acc.add(&b[j].scale(&u_inv[t - j]));
            }
        }
        coeffs[n - 1 - t] = acc;
    }
    Ok(PolarPart { m, a, coeffs })
}

/// Decomposes `f` into its Laurent part and principal parts at the roots of unity.
pub fn partial_fractions(f: &RationalQ) -> Result<PartialFractions> {
    let (plus, rem) = split_plus(f);
    let mut polar = BTreeMap::new();
    let mut orders: Vec<u32> = f.denominator.keys().flat_map(|k| divisors(*k)).collect();
    orders.sort_unstable();
    orders.dedup();
    if !rem.is_zero() {
        for m in orders {
            for a in 0..m {
                if gcd(a as i64, m as i64) != 1 {
                    continue;
                }
                let part = polar_part_at(&rem, &f.denominator, m, a)?;
                if part.coeffs.iter().any(|c| !c.is_zero()) {
                    polar.insert((m, a), part);
                }
            }
        }
    }
    Ok(PartialFractions { plus, polar, remainder: rem, denominator: f.denominator.clone() })
}

// ---------------------------------------------------------------------------
// residue pairing

/// A K-theoretic Poincaré pairing on a free coefficient module.
#[derive(Clone, Debug)]
pub struct PairingSpec {
    pub rank: usize,
    pub gram: Vec<Vec<LambdaElement>>,
}

impl PairingSpec {
    /// The pairing of the point: rank one, Gram matrix `(1)`.
    pub fn point(order: u32) -> Self {
        PairingSpec { rank: 1, gram: vec![vec![LambdaElement::one(order)]] }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.rank).all(|i| (0..self.rank).all(|j| self.gram[i][j] == self.gram[j][i]))
    }
}

/// `Ω(f, g) = -[Res_{q=0} + Res_{q=∞}] (f(q^{-1}), g(q)) dq/q`.
///
/// Functions are scalar-valued, so only rank-one pairings apply.
pub fn omega_pair(f: &RationalQ, g: &RationalQ, pairing: &PairingSpec) -> Result<LambdaElement> {
    if pairing.rank != 1 {
        return Err(EngineError::Precondition("scalar functions need a rank-one pairing".into()));
    }
    let h = f.invert_q().mul(g);
    let h = RationalQ { numerator: h.numerator.shift(-1), denominator: h.denominator };
    let res = h.residue_at_zero().add(&h.residue_at_infinity());
    Ok(res.neg().mul(&pairing.gram[0][0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rat;

    const D: u32 = 3;

    fn lp(s: &str) -> LaurentPoly {
        LaurentPoly::parse(s, D).unwrap()
    }

    fn rq(s: &str) -> RationalQ {
        RationalQ::parse(s, D).unwrap()
    }

    fn lam(s: &str) -> LambdaElement {
        LambdaElement::parse(s, D).unwrap()
    }

    /// `Σ_j c_j Den / (1 - q/η)^j` over `Q(ζ)`, by synthetic division.
    fn recombine_polar(part: &PolarPart, den: &BTreeMap<u32, u32>) -> Vec<LambdaElement> {
        let eta_inv = part.eta().inv().unwrap();
        let mut cur: Vec<Cyclotomic> = denominator_poly(den).into_iter().map(Cyclotomic::from_rational).collect();
        let mut out = vec![LambdaElement::zero(D); cur.len()];
        for c in &part.coeffs {
            // divide cur by (1 - q/η)
            let mut quo = vec![Cyclotomic::zero(); cur.len() - 1];
            let mut carry = Cyclotomic::zero();
            for i in 0..quo.len() {
                carry = cur[i].add(&carry.mul(&eta_inv));
                quo[i] = carry.clone();
            }
            let last = cur[cur.len() - 1].add(&quo[quo.len() - 1].mul(&eta_inv));
            assert!(last.is_zero(), "factor does not divide");
            cur = quo;
            for (i, x) in cur.iter().enumerate() {
                out[i] = out[i].add(&c.scale(x));
            }
        }
        out
    }

    fn check_recombination(f: &RationalQ) -> PartialFractions {
        let pf = partial_fractions(f).unwrap();
        let den_len = denominator_poly(&pf.denominator).len();
        let mut total = vec![LambdaElement::zero(D); den_len];
        for part in pf.polar.values() {
            for (i, x) in recombine_polar(part, &pf.denominator).into_iter().enumerate() {
                total[i] = total[i].add(&x);
            }
        }
        for (i, x) in total.iter().enumerate() {
            assert_eq!(*x, pf.remainder.coeff(i as i64), "coefficient {i} of {f}");
        }
        let rebuilt = RationalQ::from_laurent(pf.plus.clone()).add(&RationalQ::new(pf.remainder.clone(), pf.denominator.clone()));
        assert_eq!(rebuilt, *f);
        pf
    }

    #[test]
    fn rational_arithmetic() {
        let a = RationalQ::inv_one_minus_q_pow(1, 1, D);
        assert_eq!(a.add(&a), rq("2 / (1-q)"));
        assert_eq!(RationalQ::from_laurent(lp("1 - q")).mul(&a), RationalQ::one(D));
        assert_eq!(a.mul(&RationalQ::inv_one_minus_q_pow(2, 1, D)), rq("1 / (1-q) (1-q^2)"));
        assert_eq!(RationalQ::from_laurent(lp("1 - q")).mul(&a).as_laurent(), Some(LaurentPoly::one(D)));
    }

    #[test]
    fn substitution() {
        assert_eq!(RationalQ::from_laurent(lp("q")).substitute_power(3), RationalQ::from_laurent(lp("q^3")));
        assert_eq!(rq("1 / (1-q)").substitute_power(2), rq("1 / (1-q^2)"));
        assert_eq!(rq("1 / (1-q^2)").substitute_power(2), rq("1 / (1-q^4)"));
    }

    #[test]
    fn partial_fractions_of_one_over_one_minus_q_squared() {
        let pf = check_recombination(&rq("1 / (1-q^2)"));
        assert!(pf.plus.is_zero());
        assert_eq!(pf.polar.len(), 2);
        assert_eq!(pf.polar[&(1, 0)].coeffs, vec![LambdaElement::rational(rat(1, 2), D)]);
        assert_eq!(pf.polar[&(2, 1)].coeffs, vec![LambdaElement::rational(rat(1, 2), D)]);
    }

    #[test]
    fn partial_fractions_examples() {
        let pf = check_recombination(&rq("1 - q").add(&rq("tau1 / (1-q)")));
        assert_eq!(pf.plus, lp("1 - q"));
        assert_eq!(pf.polar[&(1, 0)].coeffs, vec![lam("tau1")]);

        let pf = check_recombination(&rq("q^2 / (1-q)"));
        assert_eq!(pf.plus, lp("-q - 1"));
        assert_eq!(pf.polar[&(1, 0)].coeffs, vec![LambdaElement::one(D)]);

        let pf = check_recombination(&rq("(q^-2 + tau1*q^5) / (1-q)^2 (1-q^3) (1-q^4)"));
        for ((m, a), part) in &pf.polar {
            if *a != 0 {
                let conj = &pf.polar[&(*m, m - a)];
                for (x, y) in part.coeffs.iter().zip(&conj.coeffs) {
                    assert_eq!(conj_coeffs(x), *y);
                }
            }
        }
    }

    fn conj_coeffs(x: &LambdaElement) -> LambdaElement {
        let mut out = LambdaElement::zero(x.order());
        for (m, c) in x.terms() {
            out = out.add(&LambdaElement::monomial(m.clone(), c.conj(), x.order()));
        }
        out
    }

    #[test]
    fn projection_to_laurent_part() {
        // (1 - q) exp(τ_1/(1-q)) truncated at D = 1
        let f = RationalQ::from_laurent(LaurentPoly::parse("1 - q", 1).unwrap()).mul(
            &RationalQ::one(1).add(&RationalQ::parse("tau1 / (1-q)", 1).unwrap()),
        );
        assert_eq!(project_plus(&f), LaurentPoly::parse("1 - q + tau1", 1).unwrap());
        let p = lp("q^-3 + tau2*q + 5");
        assert_eq!(project_plus(&RationalQ::from_laurent(p.clone())), p);
        assert!(project_plus(&rq("1 / (1-q)")).is_zero());
        let g = rq("(q^-2 + 3*q^4) / (1-q)^2 (1-q^3)");
        let once = project_plus(&g);
        assert_eq!(project_plus(&RationalQ::from_laurent(once.clone())), once);
    }

    #[test]
    fn polar_parts_vanish_at_infinity() {
        let pf = partial_fractions(&rq("(q^-1 + q^6) / (1-q)^2 (1-q^2)")).unwrap();
        let proper = RationalQ::new(pf.remainder.clone(), pf.denominator.clone());
        assert_eq!(proper.value_at_infinity(), Some(LambdaElement::zero(D)));
        assert!(proper.value_at_zero().is_some());
        assert!(project_plus(&proper).is_zero());
    }

    #[test]
    fn pairing_examples() {
        let pt = PairingSpec::point(D);
        for a in -6..=6 {
            for b in -6..=6 {
                let f = RationalQ::from_laurent(LaurentPoly::q_power(a, D));
                let g = RationalQ::from_laurent(LaurentPoly::q_power(b, D));
                assert!(omega_pair(&f, &g, &pt).unwrap().is_zero(), "Ω(q^{a}, q^{b})");
            }
        }
        let one = RationalQ::one(D);
        let g = rq("1 / (1-q)");
        assert_eq!(omega_pair(&one, &g, &pt).unwrap(), LambdaElement::integer(-1, D));
        assert!(omega_pair(&RationalQ::zero(D), &g, &pt).unwrap().is_zero());
    }

    /// Ω(f, g) as the sum of residues at the roots of unity, read off the simple-pole
    /// coefficients of the partial fractions of `f(1/q) g(q)/q`.
    fn omega_by_roots(f: &RationalQ, g: &RationalQ) -> LambdaElement {
        let h = f.invert_q().mul(g).mul(&RationalQ::from_laurent(LaurentPoly::q_power(-1, D)));
        let pf = partial_fractions(&h).unwrap();
        let mut acc = LambdaElement::zero(D);
        for part in pf.polar.values() {
            // c/(1 - q/η) = -η c/(q - η)
            acc = acc.add(&part.coeffs[0].scale(&part.eta().neg()));
        }
        acc
    }

    #[test]
    fn pairing_matches_root_of_unity_residues() {
        let pt = PairingSpec::point(D);
        let samples = [
            ("1", "1 / (1-q)"),
            ("q^2 + tau1", "(1 + q^-1) / (1-q)^2"),
            ("1 / (1-q^2)", "q / (1-q^3)"),
            ("tau1*q^-1 / (1-q)", "(2 - q) / (1-q)^2 (1-q^2)"),
        ];
        for (a, b) in samples {
            let (f, g) = (rq(a), rq(b));
            let direct = omega_pair(&f, &g, &pt).unwrap();
            assert_eq!(direct, omega_by_roots(&f, &g), "Ω({a}, {b})");
            assert_eq!(direct.add(&omega_pair(&g, &f, &pt).unwrap()), LambdaElement::zero(D));
        }
    }

    #[test]
    fn text_and_json_round_trip() {
        let f = rq("(1/2*tau1*q^-1 - 3 + q^2) / (1-q)^2 (1-q^3)");
        assert_eq!(RationalQ::parse(&f.render(), D).unwrap(), f);
        assert_eq!(RationalQ::from_json(&f.to_json(), D).unwrap(), f);
        let p = lp("(tau1 + 2)*q^-1 - q^3");
        assert_eq!(LaurentPoly::parse(&p.render(), D).unwrap(), p);
        assert_eq!(LaurentPoly::from_json(&p.to_json(), D).unwrap(), p);
    }

    #[test]
    fn division_by_one_minus_q() {
        let p = lp("tau1*q^-2 - tau1*q^3");
        let g = p.div_one_minus_q().unwrap();
        assert_eq!(g.mul(&lp("1 - q")), p);
        assert!(lp("q").div_one_minus_q().is_err());
    }
}
