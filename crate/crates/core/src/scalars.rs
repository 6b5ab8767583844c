//! Exact scalars: arbitrary-precision rationals and cyclotomic fields `Q(ζ_m)`.
//!
//! A cyclotomic number of order `m` is stored as a polynomial in `ζ_m` of degree
//! below `deg Φ_m`, reduced modulo the cyclotomic polynomial `Φ_m`. Numbers of
//! different orders are combined by embedding both into the field of order
//! `lcm(m, n)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{EngineError, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Canonical text form `p/q` (or `p` when the denominator is one).
pub fn render_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || EngineError::Parse(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Binomial coefficient `C(alpha, n)` for rational `alpha`.
pub fn binomial(alpha: &Rational, n: usize) -> Rational {
    let mut acc = Rational::one();
    for i in 0..n {
        acc = acc * (alpha - int(i as i64)) / int(i as i64 + 1);
    }
    acc
}

/// `C(i, j)` for `j = 0..n`.
pub fn binomial_row(i: u64, n: usize) -> Vec<Rational> {
    let mut out = Vec::with_capacity(n);
    let mut c = Rational::one();
    for j in 0..n as u64 {
        out.push(c.clone());
        c = c * int(i as i64 - j as i64) / int(j as i64 + 1);
    }
    out
}

pub fn factorial(n: usize) -> Rational {
    (1..=n).fold(Rational::one(), |acc, i| acc * int(i as i64))
}

pub fn lcm(a: u32, b: u32) -> u32 {
    a.lcm(&b)
}

pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

pub fn euler_phi(n: u32) -> usize {
    (1..=n).filter(|&k| k.gcd(&n) == 1).count()
}

// ---------------------------------------------------------------------------
// dense univariate polynomials over Q (coefficients low to high)

fn trim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out: Vec<Rational> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

/// Division with remainder; `b` must be nonzero.
fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r: Vec<Rational> = a.to_vec();
    trim(&mut r);
    let mut b = b.to_vec();
    trim(&mut b);
    assert!(!b.is_empty(), "polynomial division by zero");
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![Rational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let c = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &c * bc;
        }
        q[shift] = c;
        r.pop();
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

/// Reduce `a` modulo a monic polynomial `m` in place.
fn reduce_monic(a: &mut Vec<Rational>, m: &[Rational]) {
    let d = m.len() - 1;
    while a.len() > d {
        let top = a.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let shift = a.len() - d;
        for i in 0..d {
            a[shift + i] -= &top * &m[i];
        }
    }
}

/// The `n`-th cyclotomic polynomial `Φ_n`, low-to-high coefficients.
///
/// Computed as `(q^n - 1) / ∏_{d | n, d < n} Φ_d`.
pub fn cyclotomic_poly(n: u32) -> Arc<Vec<Rational>> {
    assert!(n >= 1, "cyclotomic_poly needs n >= 1");
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Rational>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    let mut num = vec![Rational::zero(); n as usize + 1];
    num[0] = int(-1);
    num[n as usize] = int(1);
    for d in (1..n).filter(|d| n.is_multiple_of(*d)) {
        let (q, r) = poly_divrem(&num, &cyclotomic_poly(d));
        debug_assert!(r.is_empty());
        num = q;
    }
    let p = Arc::new(num);
    cache.lock().unwrap().insert(n, p.clone());
    p
}

// ---------------------------------------------------------------------------

/// An element of `Q(ζ_m)`.
#[derive(Clone)]
pub struct Cyclotomic {
    order: u32,
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    /// Builds `Σ coeffs[i] ζ_m^i`, reducing modulo `Φ_m`.
    pub fn new(order: u32, coeffs: Vec<Rational>) -> Self {
        assert!(order >= 1);
        let phi = cyclotomic_poly(order);
        let mut coeffs = coeffs;
        reduce_monic(&mut coeffs, &phi);
        trim(&mut coeffs);
        Cyclotomic { order, coeffs }
    }

    pub fn zero() -> Self {
        Cyclotomic { order: 1, coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        let coeffs = if r.is_zero() { Vec::new() } else { vec![r] };
        Cyclotomic { order: 1, coeffs }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(int(n))
    }

    /// `ζ_m^j` for any integer `j`.
    pub fn zeta_pow(m: u32, j: i64) -> Self {
        let e = j.rem_euclid(m as i64) as usize;
        let mut c = vec![Rational::zero(); e + 1];
        c[e] = Rational::one();
        Self::new(m, c)
    }

    pub fn zeta(m: u32) -> Self {
        Self::zeta_pow(m, 1)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Coefficients in the power basis `1, ζ, …, ζ^{φ(m)-1}` (trailing zeros trimmed).
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// The rational value, if the number lies in `Q`.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.coeffs[0].clone()),
            // 1, ζ, …, ζ^{φ(m)-1} is a Q-basis
            _ => None,
        }
    }

    /// Rewrite in `Q(ζ_n)` via `ζ_m = ζ_n^{n/m}`.
    pub fn embed(&self, n: u32) -> Result<Self> {
        if !n.is_multiple_of(self.order) {
            return Err(EngineError::Domain(format!(
                "cannot embed order {} into order {}",
                self.order, n
            )));
        }
        if n == self.order {
            return Ok(self.clone());
        }
        let step = (n / self.order) as usize;
        if self.coeffs.len() <= 1 {
            return Ok(Cyclotomic { order: n, coeffs: self.coeffs.clone() });
        }
        let mut c = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            c[i * step] = x.clone();
        }
        Ok(Self::new(n, c))
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        if a.order == b.order {
            return (a.clone(), b.clone());
        }
        let n = lcm(a.order, b.order);
        (a.embed(n).unwrap(), b.embed(n).unwrap())
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.order == other.order || self.coeffs.len() <= 1 && other.coeffs.len() <= 1 {
            let order = lcm(self.order, other.order);
            let n = self.coeffs.len().max(other.coeffs.len());
            let mut c: Vec<Rational> = (0..n)
                .map(|i| match (self.coeffs.get(i), other.coeffs.get(i)) {
                    (Some(x), Some(y)) => x + y,
                    (Some(x), None) => x.clone(),
                    (None, Some(y)) => y.clone(),
                    (None, None) => unreachable!(),
                })
                .collect();
            trim(&mut c);
            return Cyclotomic { order, coeffs: c };
        }
        let (a, b) = Self::common(self, other);
        a.add(&b)
    }

    pub fn neg(&self) -> Self {
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Cyclotomic { order: lcm(self.order, other.order), coeffs: Vec::new() };
        }
        // scalar fast paths
        if self.coeffs.len() == 1 {
            let order = lcm(self.order, other.order);
            let b = if other.order == order { other.clone() } else { other.embed(order).unwrap() };
            return b.scale(&self.coeffs[0]);
        }
        if other.coeffs.len() == 1 {
            return other.mul(self);
        }
        if self.order != other.order {
            let (a, b) = Self::common(self, other);
            return a.mul(&b);
        }
        let mut c = poly_mul(&self.coeffs, &other.coeffs);
        reduce_monic(&mut c, &cyclotomic_poly(self.order));
        trim(&mut c);
        Cyclotomic { order: self.order, coeffs: c }
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Cyclotomic { order: self.order, coeffs: Vec::new() };
        }
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    /// Multiplicative inverse by the extended Euclidean algorithm against `Φ_m`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(EngineError::Domain("inversion of zero in Q(ζ)".into()));
        }
        if self.coeffs.len() == 1 {
            return Ok(Cyclotomic { order: self.order, coeffs: vec![self.coeffs[0].recip()] });
        }
        let phi = cyclotomic_poly(self.order);
        // invariant: s * self ≡ r (mod Φ)
        let (mut r0, mut r1) = (phi.to_vec(), self.coeffs.clone());
        let (mut s0, mut s1) = (Vec::<Rational>::new(), vec![Rational::one()]);
        while r1.len() != 1 {
            let (q, r) = poly_divrem(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            debug_assert!(!r1.is_empty(), "Φ_m is irreducible");
        }
        let c = r1[0].recip();
        let out: Vec<Rational> = s1.iter().map(|x| x * &c).collect();
        Ok(Self::new(self.order, out))
    }

    /// Complex conjugation `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        self.galois(-1)
    }

    /// The map `ζ_m ↦ ζ_m^k` applied to the reduced representative.
    ///
    /// A field automorphism when `gcd(k, m) = 1`; otherwise only `Q`-linear.
    pub fn galois(&self, k: i64) -> Self {
        if self.coeffs.len() <= 1 {
            return self.clone();
        }
        let m = self.order as i64;
        let mut c = vec![Rational::zero(); m as usize];
        for (i, x) in self.coeffs.iter().enumerate() {
            let e = (i as i64 * k).rem_euclid(m) as usize;
            c[e] += x;
        }
        Self::new(self.order, c)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Cyclotomic { order: self.order, coeffs: vec![Rational::one()] };
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Canonical text: a polynomial in the symbol `z{m}`, e.g. `1/2 + 3*z4`.
    pub fn render(&self) -> String {
        if self.coeffs.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let a = c.abs();
            let body = match i {
                0 => render_rational(&a),
                _ => {
                    let sym = if i == 1 {
                        format!("z{}", self.order)
                    } else {
                        format!("z{}^{}", self.order, i)
                    };
                    if a.is_one() {
                        sym
                    } else {
                        format!("{}*{}", render_rational(&a), sym)
                    }
                }
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

    /// Parses the canonical text form (and a few looser spellings).
    pub fn parse(s: &str) -> Result<Self> {
        let mut acc = Cyclotomic::zero();
        for (sign, term) in split_signed_terms(s)? {
            let mut val = Cyclotomic::from_int(sign);
            for factor in term.split('*') {
                let f = factor.trim();
                if f.is_empty() {
                    return Err(EngineError::Parse(format!("empty factor in `{s}`")));
                }
                if let Some(rest) = f.strip_prefix('z') {
                    let (m, e) = match rest.split_once('^') {
                        Some((m, e)) => (m, e),
                        None => (rest, "1"),
                    };
                    let m: u32 = m.trim().parse().map_err(|_| EngineError::Parse(format!("bad root symbol `{f}`")))?;
                    let e: i64 = e.trim().parse().map_err(|_| EngineError::Parse(format!("bad exponent in `{f}`")))?;
                    if m == 0 {
                        return Err(EngineError::Parse("root order must be positive".into()));
                    }
                    val = val.mul(&Cyclotomic::zeta_pow(m, e));
                } else {
                    val = val.mul(&Cyclotomic::from_rational(parse_rational(f)?));
                }
            }
            acc = acc.add(&val);
        }
        Ok(acc)
    }
}

/// Splits `a + b - c` into signed terms, respecting parentheses.
pub(crate) fn split_signed_terms(s: &str) -> Result<Vec<(i64, String)>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut sign = 1i64;
    let mut prev_significant: Option<char> = None;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch)
            }
            ')' => {
                depth -= 1;
                cur.push(ch)
            }
            '+' | '-' if depth == 0 && !matches!(prev_significant, Some('^') | Some('*') | Some('/')) => {
                if !cur.trim().is_empty() {
                    out.push((sign, cur.trim().to_string()));
                    cur.clear();
                    sign = 1;
                }
                if ch == '-' {
                    sign = -sign;
                }
            }
            _ => cur.push(ch),
        }
        if !ch.is_whitespace() {
            prev_significant = Some(ch);
        }
    }
    if depth != 0 {
        return Err(EngineError::Parse(format!("unbalanced parentheses in `{s}`")));
    }
    if !cur.trim().is_empty() {
        out.push((sign, cur.trim().to_string()));
    }
    if out.is_empty() {
        out.push((1, "0".into()));
    }
    Ok(out)
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl fmt::Debug for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}
