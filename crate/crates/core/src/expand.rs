//! Laurent series in `u = q - 1` with coefficients in Λ ⊗ Q(ζ_m), expansions of
//! rational functions at `q = 1` and at `q = ζ` (after `q ↦ q^{1/m}/ζ`), and the
//! exponential and logarithm of such series.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{EngineError, Result};
use crate::lambda::LambdaElement;
use crate::qfun::{cyc_series_inverse, cyc_series_mul, RationalQ};
use crate::ring::Ring;
use crate::scalars::{binomial_row, gcd, int, lcm, rat, Cyclotomic, Rational};

/// `Σ_{n ≤ prec} c_n u^n`, known modulo `u^{prec+1}`.
#[derive(Clone)]
pub struct QSeries {
    coeffs: BTreeMap<i64, LambdaElement>,
    prec: i64,
    root_order: u32,
    order: u32,
}

impl QSeries {
    pub fn zero(prec: i64, order: u32) -> Self {
        QSeries { coeffs: BTreeMap::new(), prec, root_order: 1, order }
    }

    pub fn one(prec: i64, order: u32) -> Self {
        Self::monomial(0, LambdaElement::one(order), prec)
    }

    pub fn constant(c: LambdaElement, prec: i64) -> Self {
        Self::monomial(0, c, prec)
    }

    /// `c u^n`.
    pub fn monomial(n: i64, c: LambdaElement, prec: i64) -> Self {
        let mut out = Self::zero(prec, c.order());
        out.insert_add(n, c);
        out
    }

    /// `Σ_i coeffs[i] u^{shift+i}` with scalar coefficients.
    pub fn from_scalars(shift: i64, coeffs: &[Cyclotomic], prec: i64, order: u32) -> Self {
        let mut out = Self::zero(prec, order);
        for (i, c) in coeffs.iter().enumerate() {
            out.insert_add(shift + i as i64, LambdaElement::constant(c.clone(), order));
        }
        out
    }

    pub fn prec(&self) -> i64 {
        self.prec
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Order `m` of the cyclotomic field holding the coefficients.
    pub fn root_order(&self) -> u32 {
        self.root_order
    }

    pub fn with_root_order(mut self, m: u32) -> Self {
        self.root_order = lcm(self.root_order, m);
        self
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&i64, &LambdaElement)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, n: i64) -> LambdaElement {
        self.coeffs.get(&n).cloned().unwrap_or_else(|| LambdaElement::zero(self.order))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power with a nonzero coefficient, or `prec + 1` for a series known to be zero.
    pub fn valuation(&self) -> i64 {
        self.coeffs.keys().next().copied().unwrap_or(self.prec + 1)
    }

    pub fn min_order(&self) -> i64 {
        self.valuation().min(0)
    }

    /// Depth of the pole at `u = 0` (zero for power series).
    pub fn polar_depth(&self) -> u32 {
        (-self.valuation()).max(0) as u32
    }

    /// No nonzero coefficient at a negative power of `u`.
    pub fn is_power_series(&self) -> bool {
        self.coeffs.keys().all(|n| *n >= 0)
    }

    fn insert_add(&mut self, n: i64, c: LambdaElement) {
        if n > self.prec || c.is_zero() {
            return;
        }
        self.root_order = lcm(self.root_order, c.coefficient_order());
        match self.coeffs.get_mut(&n) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.coeffs.remove(&n);
                }
            }
            None => {
                self.coeffs.insert(n, c);
            }
        }
    }

    pub fn truncate(&self, prec: i64) -> Self {
        let mut out = Self::zero(prec.min(self.prec), self.order);
        out.root_order = self.root_order;
        for (n, c) in &self.coeffs {
            out.insert_add(*n, c.clone());
        }
        out
    }

    pub fn truncate_lambda(&self, order: u32) -> Self {
        let mut out = Self::zero(self.prec, order.min(self.order));
        out.root_order = self.root_order;
        for (n, c) in &self.coeffs {
            out.insert_add(*n, c.truncate(order));
        }
        out
    }

    /// Terms with powers `≤ 0`.
    pub fn nonpositive_part(&self) -> Self {
        self.filter(|n| n <= 0)
    }

    /// Terms with positive powers.
    pub fn positive_part(&self) -> Self {
        self.filter(|n| n > 0)
    }

    /// Terms with powers `≥ 0`.
    pub fn filter_nonnegative_powers(&self) -> Self {
        self.filter(|n| n >= 0)
    }

    /// Terms with negative powers.
    pub fn polar_part(&self) -> Self {
        self.filter(|n| n < 0)
    }

    fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        let mut out = Self::zero(self.prec, self.order);
        out.root_order = self.root_order;
        for (n, c) in &self.coeffs {
            if keep(*n) {
                out.coeffs.insert(*n, c.clone());
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.prec.min(other.prec), self.order.min(other.order));
        out.root_order = lcm(self.root_order, other.root_order);
        for (n, c) in self.coeffs.iter().chain(other.coeffs.iter()) {
            out.insert_add(*n, c.truncate(out.order));
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (va, vb) = (self.valuation(), other.valuation());
        let prec = (self.prec + vb).min(other.prec + va);
        let mut out = Self::zero(prec, self.order.min(other.order));
        out.root_order = lcm(self.root_order, other.root_order);
        for (na, ca) in &self.coeffs {
            for (nb, cb) in &other.coeffs {
                if na + nb > prec {
                    break;
                }
                out.insert_add(na + nb, ca.mul(cb));
            }
        }
        out
    }

    pub fn scale(&self, c: &LambdaElement) -> Self {
        let mut out = Self::zero(self.prec, self.order.min(c.order()));
        out.root_order = self.root_order;
        for (n, x) in &self.coeffs {
            out.insert_add(*n, x.mul(c));
        }
        out
    }

    pub fn scale_scalar(&self, c: &Cyclotomic) -> Self {
        let mut out = Self::zero(self.prec, self.order);
        out.root_order = lcm(self.root_order, c.order());
        for (n, x) in &self.coeffs {
            out.insert_add(*n, x.scale(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        let mut out = Self::zero(self.prec, self.order);
        out.root_order = self.root_order;
        for (n, x) in &self.coeffs {
            out.insert_add(*n, x.scale_rational(r));
        }
        out
    }

    /// `u^s · self`.
    pub fn shift(&self, s: i64) -> Self {
        QSeries {
            coeffs: self.coeffs.iter().map(|(n, c)| (n + s, c.clone())).collect(),
            prec: self.prec + s,
            root_order: self.root_order,
            order: self.order,
        }
    }

    /// Applies `f` to each coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&LambdaElement) -> LambdaElement) -> Self {
        let mut out = Self::zero(self.prec, self.order);
        out.root_order = self.root_order;
        for (n, c) in &self.coeffs {
            out.insert_add(*n, f(c));
        }
        out
    }

    /// The nonzero degree-zero (scalar) parts of the coefficients.
    fn scalar_parts(&self) -> BTreeMap<i64, Cyclotomic> {
        self.coeffs
            .iter()
            .filter_map(|(n, c)| {
                let s = c.scalar_part();
                (!s.is_zero()).then_some((*n, s))
            })
            .collect()
    }

    /// Multiplicative inverse; the lowest scalar coefficient must be nonzero.
    pub fn inverse(&self) -> Result<Self> {
        let LogPrefix { power: k, scalar: c } = self.lowest_scalar()?;
        // self = c u^k (1 + s)(1 + w)
        let unit = self.scalar_unit(k, &c);
        let unit_inv = unit.unit_inverse();
        let w = self.mul(&unit_inv.shift(-k).scale_scalar(&c.inv()?)).sub(&Self::one(self.prec, self.order));
        let w_inv = geometric_nilpotent(&w);
        Ok(unit_inv.mul(&w_inv).shift(-k).scale_scalar(&c.inv()?))
    }

    /// `(1 + s)` where `self`'s scalar part is `c u^k (1 + s)`.
    fn scalar_unit(&self, k: i64, c: &Cyclotomic) -> Self {
        let c_inv = c.inv().expect("nonzero scalar");
        let mut out = Self::zero(self.prec - k, self.order);
        for (n, s) in self.scalar_parts() {
            out.insert_add(n - k, LambdaElement::constant(s.mul(&c_inv), self.order));
        }
        out
    }

    /// Inverse of a scalar series `1 + s` with `s` of positive valuation.
    fn unit_inverse(&self) -> Self {
        let n = (self.prec + 1).max(0) as usize;
        let scal: Vec<Cyclotomic> = (0..n as i64).map(|i| self.coeff(i).scalar_part()).collect();
        let inv = cyc_series_inverse(&scal, n).expect("unit");
        Self::from_scalars(0, &inv, self.prec, self.order)
    }

    /// The lowest scalar term `c u^k`.
    fn lowest_scalar(&self) -> Result<LogPrefix> {
        let scal = self.scalar_parts();
        let Some((k, c)) = scal.into_iter().next() else {
            return Err(EngineError::Domain("series has no invertible scalar part".into()));
        };
        Ok(LogPrefix { power: k, scalar: c })
    }

    /// `f(q^r)` for a series in `u = q - 1`: substitutes `u ↦ (1 + u)^r - 1`.
    pub fn substitute_q_power(&self, r: u32) -> Self {
        assert!(r >= 1);
        if r == 1 {
            return self.clone();
        }
        let depth = self.polar_depth() as i64;
        let n = (self.prec + 2 * depth + 1).max(1) as usize;
        // (1+u)^r - 1 = r u V(u), V(0) = 1
        let row = binomial_row(r as u64, n + 1);
        let v: Vec<Cyclotomic> = row[1..].iter().map(|c| Cyclotomic::from_rational(c / int(r as i64))).collect();
        let r_c = Cyclotomic::from_int(r as i64);
        let sub = QSeries::from_scalars(1, &v, n as i64, self.order).scale_scalar(&r_c);
        let sub_inv = if depth > 0 { Some(sub.inverse().expect("invertible")) } else { None };
        let mut acc = Self::zero(self.prec, self.order);
        let mut pos_pow = Self::one(n as i64, self.order);
        let mut neg_pow = Self::one(n as i64, self.order);
        for (p, c) in self.coeffs.iter().filter(|(p, _)| **p < 0).rev() {
            while neg_pow.valuation() > *p {
                neg_pow = neg_pow.mul(sub_inv.as_ref().unwrap());
            }
            acc = acc.add(&neg_pow.scale(c));
        }
        for (p, c) in self.coeffs.iter().filter(|(p, _)| **p >= 0) {
            while pos_pow.valuation() < *p {
                pos_pow = pos_pow.mul(&sub);
            }
            acc = acc.add(&pos_pow.scale(c));
        }
        let mut out = acc.truncate(self.prec);
        out.prec = self.prec;
        out.root_order = self.root_order;
        out
    }
}

/// `Σ_n (-w)^n` for `w` with coefficients in `Λ₊` (a finite sum).
fn geometric_nilpotent(w: &QSeries) -> QSeries {
    let mut acc = QSeries::one(w.prec, w.order);
    let mut power = QSeries::one(w.prec, w.order);
    for _ in 0..=w.order {
        power = power.mul(&w.neg());
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    acc
}

/// The factor `c·u^k` split off by [`series_log`].
#[derive(Clone, Debug, PartialEq)]
pub struct LogPrefix {
    pub power: i64,
    pub scalar: Cyclotomic,
}

/// `(1 + u)^α` for rational `α`, coefficients of `u^0 … u^{n-1}`.
pub fn binomial_series(alpha: &Rational, n: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n);
    let mut c = Rational::from_integer(1.into());
    for j in 0..n {
        out.push(c.clone());
        c = c * (alpha - int(j as i64)) / int(j as i64 + 1);
    }
    out
}

/// Expansion of `f(q^{1/m}/ζ)` near `q = 1`, `ζ = ζ_m^a`, to order `u^prec`.
///
/// With `s = (1 + u)^{1/m}` on its principal branch, a numerator term `c q^e` becomes
/// `c ζ^{-e} s^e`, and a factor `(1 - q^k)` becomes `1 - ζ^{-k} s^k`, which vanishes at
/// `u = 0` exactly when `m | k`.
pub fn expand_adelic(f: &RationalQ, m: u32, a: i64, prec: i64) -> Result<QSeries> {
    if m == 0 {
        return Err(EngineError::Precondition("root order must be positive".into()));
    }
    let a = a.rem_euclid(m as i64);
    if gcd(a, m as i64) != 1 {
        return Err(EngineError::Precondition(format!("{a} is not coprime to {m}")));
    }
    let order = f.order();
    let mu: i64 = f.denominator().iter().filter(|(k, _)| *k % m == 0).map(|(_, e)| *e as i64).sum();
    // scalar series are needed up to u^{prec + mu}
    let n = (prec + mu + 1).max(0) as usize;
    let mut w = vec![Cyclotomic::zero(); n];
    if n > 0 {
        w[0] = Cyclotomic::one();
        for (k, e) in f.denominator() {
            let sk = binomial_series(&rat(*k as i64, m as i64), n + 1);
            let factor: Vec<Cyclotomic> = if k % m == 0 {
                // (1 - s^k) / u = -(s^k - 1)/u
                sk[1..].iter().map(|c| Cyclotomic::from_rational(-c)).collect()
            } else {
                let zk = Cyclotomic::zeta_pow(m, -a * *k as i64);
                let mut v: Vec<Cyclotomic> = sk[..n].iter().map(|c| zk.scale(&-c)).collect();
                v[0] = v[0].add(&Cyclotomic::one());
                v
            };
            let inv = cyc_series_inverse(&factor, n)?;
            for _ in 0..*e {
                w = cyc_series_mul(&w, &inv, n);
            }
        }
    }
    let mut out = QSeries::zero(prec, order).with_root_order(m);
    let all_rational = w.iter().all(|c| c.order() == 1);
    for (e, c) in f.numerator().terms() {
        let se = binomial_series(&rat(*e, m as i64), n);
        let ze = Cyclotomic::zeta_pow(m, -a * e);
        let series: Vec<Cyclotomic> = if all_rational {
            let wr: Vec<Rational> = w.iter().map(|x| x.as_rational().unwrap()).collect();
            rational_series_mul(&se, &wr, n).into_iter().map(|r| ze.scale(&r)).collect()
        } else {
            let sc: Vec<Cyclotomic> = se.into_iter().map(Cyclotomic::from_rational).collect();
            cyc_series_mul(&sc, &w, n).into_iter().map(|x| x.mul(&ze)).collect()
        };
        for (i, x) in series.iter().enumerate() {
            if !x.is_zero() {
                out.insert_add(i as i64 - mu, c.scale(x));
            }
        }
    }
    Ok(out)
}

fn rational_series_mul(a: &[Rational], b: &[Rational], n: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); n];
    for (i, x) in a.iter().enumerate().take(n) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(n - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Laurent expansion of `f` near `q = 1` in `u = q - 1`, to order `u^prec`.
pub fn expand_at_one(f: &RationalQ, prec: i64) -> QSeries {
    expand_adelic(f, 1, 0, prec).expect("m = 1 is always admissible")
}

/// `exp(x)`; the coefficients at powers `≤ 0` must lie in `Λ₊`.
pub fn series_exp(x: &QSeries) -> Result<QSeries> {
    let head = x.nonpositive_part();
    if let Some((n, _)) = head.coeffs().find(|(_, c)| !c.in_lambda_plus()) {
        return Err(EngineError::Precondition(format!(
            "coefficient of u^{n} is not in Λ₊; the exponential would not terminate"
        )));
    }
    let tail = x.positive_part();
    // exp(head) terminates since head^{D+1} = 0
    let mut e_head = QSeries::one(x.prec, x.order);
    let mut power = QSeries::one(x.prec, x.order);
    for n in 1..=x.order as i64 + 1 {
        power = power.mul(&head).scale_rational(&rat(1, n));
        if power.is_zero() {
            break;
        }
        e_head = e_head.add(&power);
    }
    // exp(tail) is u-adically convergent
    let mut e_tail = QSeries::one(x.prec, x.order);
    let mut power = QSeries::one(x.prec, x.order);
    for n in 1..=x.prec.max(0) {
        power = power.mul(&tail).scale_rational(&rat(1, n));
        if power.is_zero() {
            break;
        }
        e_tail = e_tail.add(&power);
    }
    Ok(e_head.mul(&e_tail))
}

/// `log(y)` for `y = c u^k (1 + s)(1 + w)`, `s` scalar of positive valuation and `w`
/// with coefficients in `Λ₊`. Returns the prefix `(k, c)` and `log(1 + s) + log(1 + w)`.
pub fn series_log(y: &QSeries) -> Result<(LogPrefix, QSeries)> {
    let prefix = y.lowest_scalar()?;
    let (k, c) = (prefix.power, prefix.scalar.clone());
    let unit = y.scalar_unit(k, &c);
    let s = unit.sub(&QSeries::one(unit.prec, y.order));
    let unit_inv = unit.unit_inverse();
    let w = y.mul(&unit_inv.shift(-k).scale_scalar(&c.inv()?)).sub(&QSeries::one(y.prec, y.order));
    let mut acc = QSeries::zero(y.prec - k, y.order);
    // log(1+s), u-adic
    let mut power = QSeries::one(s.prec, y.order);
    for n in 1..=s.prec.max(0) {
        power = power.mul(&s);
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power.scale_rational(&rat(if n % 2 == 1 { 1 } else { -1 }, n)));
    }
    // log(1+w), nilpotent
    let mut power = QSeries::one(w.prec, y.order);
    for n in 1..=y.order as i64 {
        power = power.mul(&w);
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power.scale_rational(&rat(if n % 2 == 1 { 1 } else { -1 }, n)));
    }
    Ok((prefix, acc))
}

/// `true` iff `x` has no nonzero coefficient at a negative power of `u`.
pub fn is_power_series(x: &QSeries) -> bool {
    x.is_power_series()
}

impl QSeries {
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(n, c)| {
                let u = match n {
                    0 => String::new(),
                    1 => "*u".into(),
                    _ => format!("*u^{n}"),
                };
                format!("({}){u}", c.render())
            })
            .collect();
        parts.push(format!("O(u^{})", self.prec + 1));
        parts.join(" + ")
    }

    /// JSON: `{m, min_order, E, coeffs: [[power, lambda], …]}`.
    pub fn to_json(&self) -> Value {
        let coeffs: Vec<Value> = self.coeffs.iter().map(|(n, c)| json!([n, c.to_json()])).collect();
        json!({"m": self.root_order, "min_order": self.min_order(), "E": self.prec, "coeffs": coeffs})
    }

    pub fn from_json(v: &Value, order: u32) -> Result<Self> {
        let bad = || EngineError::Parse(format!("bad series {v}"));
        let prec = v.get("E").and_then(Value::as_i64).ok_or_else(bad)?;
        let m = v.get("m").and_then(Value::as_u64).unwrap_or(1) as u32;
        let mut out = QSeries::zero(prec, order).with_root_order(m.max(1));
        for item in v.get("coeffs").and_then(Value::as_array).ok_or_else(bad)? {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
            let n = pair[0].as_i64().ok_or_else(bad)?;
            out.insert_add(n, LambdaElement::from_json(&pair[1], order)?);
        }
        Ok(out)
    }
}

impl PartialEq for QSeries {
    /// Equality of coefficients up to the common precision.
    fn eq(&self, other: &Self) -> bool {
        let p = self.prec.min(other.prec);
        self.truncate(p).sub(&other.truncate(p)).is_zero()
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Ring for QSeries {
    fn zero_like(&self) -> Self {
        QSeries::zero(self.prec, self.order)
    }
    fn one_like(&self) -> Self {
        QSeries::one(self.prec, self.order)
    }
    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        QSeries::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        QSeries::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        QSeries::mul(self, o)
    }
    fn neg(&self) -> Self {
        QSeries::neg(self)
    }
    fn scale_rational(&self, r: &Rational) -> Self {
        QSeries::scale_rational(self, r)
    }
}
