//! Novikov variables `Q_1, …, Q_s`, finite-difference operators in the translations
//! `P_i q^{Q_i ∂_{Q_i}}`, the Adams action on operators, and the operator transforms of
//! points of the cone.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{EngineError, Result};
use crate::lambda::LambdaElement;
use crate::qfun::{LaurentPoly, RationalQ};
use crate::ring::nilpotent_exp;
use crate::scalars::{rat, Rational};
use crate::toyk::ToyK;

/// Coefficients of series and operators: rational functions of `q` with values in the toy K-ring.
pub type KCoeff = ToyK<RationalQ>;

/// Shape data shared by series and operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NovikovShape {
    /// Nilpotency orders `N_i`; the number of Novikov variables is `nil.len()`.
    pub nil: Vec<u32>,
    /// Bound on the total Novikov degree.
    pub g: u32,
    /// Λ₊ truncation order.
    pub order: u32,
}

impl NovikovShape {
    pub fn s(&self) -> usize {
        self.nil.len()
    }

    pub fn proto(&self) -> RationalQ {
        RationalQ::zero(self.order)
    }

    pub fn zero(&self) -> KCoeff {
        ToyK::zero(self.nil.clone(), &self.proto())
    }

    pub fn one(&self) -> KCoeff {
        ToyK::one(self.nil.clone(), &self.proto())
    }

    /// A scalar rational function as a coefficient.
    pub fn scalar(&self, f: RationalQ) -> KCoeff {
        ToyK::scalar(self.nil.clone(), f)
    }

    pub fn lambda(&self, c: LambdaElement) -> KCoeff {
        self.scalar(RationalQ::constant(c))
    }

    pub fn q_power(&self, e: i64) -> KCoeff {
        self.scalar(RationalQ::from_laurent(LaurentPoly::q_power(e, self.order)))
    }

    /// `P^a` for an integer vector `a`.
    pub fn p_monomial(&self, a: &[i64]) -> KCoeff {
        ToyK::p_monomial(self.nil.clone(), a, &self.proto())
    }
}

fn total(d: &[u32]) -> u32 {
    d.iter().sum()
}

fn dot(a: &[u32], b: &[u32]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (*x as i64) * (*y as i64)).sum()
}

fn vec_add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `Σ_d c_d Q^d` with total degree `≤ G`.
#[derive(Clone, Debug)]
pub struct NovikovSeries {
    pub shape: NovikovShape,
    terms: BTreeMap<Vec<u32>, KCoeff>,
}

impl NovikovSeries {
    pub fn zero(shape: &NovikovShape) -> Self {
        NovikovSeries { shape: shape.clone(), terms: BTreeMap::new() }
    }

    /// `c Q^d` (zero when `|d| > G`).
    pub fn monomial(shape: &NovikovShape, d: Vec<u32>, c: KCoeff) -> Self {
        let mut out = Self::zero(shape);
        out.insert_add(d, c);
        out
    }

    pub fn constant(shape: &NovikovShape, c: KCoeff) -> Self {
        Self::monomial(shape, vec![0; shape.s()], c)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &KCoeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, d: &[u32]) -> KCoeff {
        self.terms.get(d).cloned().unwrap_or_else(|| self.shape.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, d: Vec<u32>, c: KCoeff) {
        if total(&d) > self.shape.g || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&d) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.terms.remove(&d);
                }
            }
            None => {
                self.terms.insert(d, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (d, c) in &other.terms {
            out.insert_add(d.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale_rational(&rat(-1, 1)))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        let mut out = Self::zero(&self.shape);
        for (d, c) in &self.terms {
            out.insert_add(d.clone(), c.scale_rational(r));
        }
        out
    }

    /// Multiplies every coefficient by `c` (which does not involve `Q`).
    pub fn scale(&self, c: &KCoeff) -> Self {
        let mut out = Self::zero(&self.shape);
        for (d, x) in &self.terms {
            out.insert_add(d.clone(), x.mul(c));
        }
        out
    }

    /// Cancels common `(1 - q^k)` factors in every coefficient.
    pub fn reduce(&self) -> Self {
        let mut out = Self::zero(&self.shape);
        for (d, c) in &self.terms {
            out.insert_add(d.clone(), c.map_coeffs(RationalQ::reduce));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.terms.iter().map(|(d, c)| json!([d, c.to_json(RationalQ::to_json)])).collect())
    }

    /// `[[d, coeff], …]`, see [`coeff_from_json`].
    pub fn from_json(v: &Value, shape: &NovikovShape) -> Result<Self> {
        let items = v.as_array().ok_or_else(|| EngineError::Parse("series must be a list of [d, coeff]".into()))?;
        let mut out = Self::zero(shape);
        for item in items {
            let pair = item.as_array().filter(|p| p.len() == 2).ok_or_else(|| EngineError::Parse(format!("bad series term {item}")))?;
            out.insert_add(degree_from_json(&pair[0], shape)?, coeff_from_json(&pair[1], shape)?);
        }
        Ok(out)
    }
}

impl PartialEq for NovikovSeries {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

/// `Σ c_{a,b} T^a Q^b` in normal order, `T_i = P_i q^{tag·Q_i ∂_{Q_i}}`.
#[derive(Clone, Debug)]
pub struct DiffOp {
    pub shape: NovikovShape,
    /// The translation scale `s` of `T_i = P_i q^{s Q_i ∂_{Q_i}}`.
    pub tag: u32,
    terms: BTreeMap<(Vec<u32>, Vec<u32>), KCoeff>,
}

impl DiffOp {
    pub fn zero(shape: &NovikovShape, tag: u32) -> Self {
        assert!(tag >= 1, "translation tag must be positive");
        DiffOp { shape: shape.clone(), tag, terms: BTreeMap::new() }
    }

    pub fn identity(shape: &NovikovShape) -> Self {
        Self::term(shape, 1, vec![0; shape.s()], vec![0; shape.s()], shape.one())
    }

    /// `c T^a Q^b`.
    pub fn term(shape: &NovikovShape, tag: u32, a: Vec<u32>, b: Vec<u32>, c: KCoeff) -> Self {
        let mut out = Self::zero(shape, tag);
        out.insert_add(a, b, c);
        out
    }

    /// Multiplication by `c`.
    pub fn scalar(shape: &NovikovShape, c: KCoeff) -> Self {
        Self::term(shape, 1, vec![0; shape.s()], vec![0; shape.s()], c)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<u32>, Vec<u32>), &KCoeff)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn insert_add(&mut self, a: Vec<u32>, b: Vec<u32>, c: KCoeff) {
        if c.is_zero() {
            return;
        }
        let key = (a, b);
        match self.terms.get_mut(&key) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    /// Same coefficients, read with `T_i = P_i q^{tag Q_i ∂_{Q_i}}`.
    pub fn retag(&self, tag: u32) -> Self {
        assert!(tag >= 1);
        DiffOp { shape: self.shape.clone(), tag, terms: self.terms.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.tag != other.tag && !self.is_zero() && !other.is_zero() {
            return Err(EngineError::Precondition(format!("cannot add operators with tags {} and {}", self.tag, other.tag)));
        }
        let mut out = if self.is_zero() { other.clone() } else { self.clone() };
        let src = if self.is_zero() { self } else { other };
        for ((a, b), c) in &src.terms {
            out.insert_add(a.clone(), b.clone(), c.clone());
        }
        Ok(out)
    }

    /// Left multiplication by a coefficient.
    pub fn scale(&self, c: &KCoeff) -> Self {
        let mut out = Self::zero(&self.shape, self.tag);
        for ((a, b), x) in &self.terms {
            out.insert_add(a.clone(), b.clone(), c.mul(x));
        }
        out
    }

    /// `D(1, 0, q)`: the `Q`-free part with `T` and `P` set to one.
    pub fn free_term(&self) -> RationalQ {
        let mut acc = self.shape.proto();
        for ((_, b), c) in &self.terms {
            if b.iter().all(|x| *x == 0) {
                acc = acc.add(&c.at_p_one());
            }
        }
        acc
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self.terms.iter().map(|((a, b), c)| json!([a, b, c.to_json(RationalQ::to_json)])).collect();
        json!({"tag": self.tag, "terms": terms})
    }

    /// Terms `[[a, b, coeff], …]`, with `coeff` a list of `[toyk-exponent, rational function]`.
    pub fn from_json(v: &Value, shape: &NovikovShape) -> Result<Self> {
        let bad = |what: &str| EngineError::Parse(format!("bad operator: {what}"));
        let tag = v.get("tag").and_then(Value::as_u64).ok_or_else(|| bad("missing `tag`"))? as u32;
        if tag == 0 {
            return Err(bad("tag must be positive"));
        }
        let mut out = Self::zero(shape, tag);
        for term in v.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing `terms`"))? {
            let t = term.as_array().filter(|t| t.len() == 3).ok_or_else(|| bad("term must be [a, b, coeff]"))?;
            let (a, b) = (degree_from_json(&t[0], shape)?, degree_from_json(&t[1], shape)?);
            out.insert_add(a, b, coeff_from_json(&t[2], shape)?);
        }
        Ok(out)
    }
}

fn degree_from_json(v: &Value, shape: &NovikovShape) -> Result<Vec<u32>> {
    let bad = || EngineError::Parse(format!("bad exponent vector {v}"));
    let arr = v.as_array().ok_or_else(bad)?;
    let out: Vec<u32> = arr.iter().map(|n| n.as_u64().map(|n| n as u32).ok_or_else(bad)).collect::<Result<_>>()?;
    if out.len() != shape.s() {
        return Err(bad());
    }
    Ok(out)
}

/// A coefficient: either a rational function of `q`, or `[[e, f], …]` meaning `Σ f x^e`.
pub fn coeff_from_json(v: &Value, shape: &NovikovShape) -> Result<KCoeff> {
    let is_parts = v.as_array().and_then(|a| a.first()).and_then(|p| p.as_array()).and_then(|p| p.first()).is_some_and(Value::is_array);
    if !is_parts {
        return Ok(shape.scalar(RationalQ::from_json(v, shape.order)?));
    }
    let mut c = shape.zero();
    for part in v.as_array().into_iter().flatten() {
        let p = part.as_array().filter(|p| p.len() == 2).ok_or_else(|| EngineError::Parse(format!("bad coefficient part {part}")))?;
        let e = degree_from_json(&p[0], shape)?;
        c = c.add(&ToyK::basis(shape.nil.clone(), e, RationalQ::from_json(&p[1], shape.order)?));
    }
    Ok(c)
}

/// Applies `D` to `F`: `T_i` acts on `Q^d` by `P_i q^{tag·d_i} Q^d`, `Q_i` raises `d_i`.
pub fn op_apply(op: &DiffOp, f: &NovikovSeries) -> NovikovSeries {
    let shape = &f.shape;
    let mut out = NovikovSeries::zero(shape);
    for ((a, b), c) in &op.terms {
        let pa = shape.p_monomial(&a.iter().map(|x| *x as i64).collect::<Vec<_>>());
        let cp = c.mul(&pa);
        for (d, x) in &f.terms {
            let nd = vec_add(d, b);
            if total(&nd) > shape.g {
                continue;
            }
            let shift = op.tag as i64 * dot(a, &nd);
            out.insert_add(nd, cp.mul(&shape.q_power(shift)).mul(x));
        }
    }
    out
}

/// `D_1 ∘ D_2` in normal order, using `Q^b T^a = q^{-tag·a·b} T^a Q^b`.
pub fn op_compose(d1: &DiffOp, d2: &DiffOp) -> Result<DiffOp> {
    if d1.tag != d2.tag {
        return Err(EngineError::Precondition(format!("cannot compose operators with tags {} and {}", d1.tag, d2.tag)));
    }
    let shape = &d1.shape;
    let mut out = DiffOp::zero(shape, d1.tag);
    for ((a1, b1), c1) in &d1.terms {
        for ((a2, b2), c2) in &d2.terms {
            let shift = -(d1.tag as i64) * dot(a2, b1);
            let c = c1.mul(c2).mul(&shape.q_power(shift));
            out.insert_add(vec_add(a1, a2), vec_add(b1, b2), c);
        }
    }
    Ok(out)
}

/// `Ψ^k` on an operator whose translation slots are `T_i = P_i q^{s Q_i ∂_{Q_i}}`, `s = tag`.
///
/// `Ψ^k` fixes `q^{Q∂_Q}`, sends `P ↦ P^k`, `Q ↦ Q^k` and acts on coefficients by Adams
/// on Λ and the toy K-ring together with `q ↦ q^k`. Hence
/// `c T_s^a Q^b ↦ Ψ^k(c) P^{(k-s)a} T^{sa} Q^{kb}` with `T = P q^{Q∂_Q}`, and the
/// tag-`k` slot `P q^{kQ∂_Q}` becomes `T^k`.
pub fn adams_on_operator(k: u32, op: &DiffOp) -> DiffOp {
    assert!(k >= 1);
    let shape = &op.shape;
    let s = op.tag as i64;
    let mut out = DiffOp::zero(shape, 1);
    for ((a, b), c) in &op.terms {
        let image = c.adams_with(k, |f| f.adams(k));
        let p_exp: Vec<i64> = a.iter().map(|x| (k as i64 - s) * *x as i64).collect();
        let coeff = image.mul(&shape.p_monomial(&p_exp));
        let na: Vec<u32> = a.iter().map(|x| x * op.tag).collect();
        let nb: Vec<u32> = b.iter().map(|x| x * k).collect();
        out.insert_add(na, nb, coeff);
    }
    out
}

/// Bound on the number of terms of `e^A v` for an operator that is nilpotent on the
/// truncated space: every factor raises the Λ-, Novikov- or `P - 1`-degree.
fn exp_step_bound(shape: &NovikovShape) -> usize {
    let nil: u32 = shape.nil.iter().sum();
    ((shape.order + 1) * (shape.g + 1) * (nil + 1)) as usize + 1
}

/// `e^A v = Σ_n A^n v / n!`; fails if the series does not terminate.
pub fn exp_apply(op: &DiffOp, v: &NovikovSeries) -> Result<NovikovSeries> {
    let mut acc = v.clone();
    let mut term = v.clone();
    for n in 1..=exp_step_bound(&v.shape) {
        term = op_apply(op, &term).scale_rational(&rat(1, n as i64)).reduce();
        if term.is_zero() {
            return Ok(acc);
        }
        acc = acc.add(&term);
    }
    Err(EngineError::Precondition("operator exponential does not terminate on the truncated space".into()))
}

/// The exponent `Σ_k Ψ^k(D_{kr}(P q^{kQ∂_Q}, Q, q)) / k(1 - q^k)` for entry `r`.
///
/// The translation slot of each `D_{kr}` is read as `P q^{kQ∂_Q}`; the tag it carries
/// is replaced.
pub fn theorem3_exponent(r: u32, ops: &BTreeMap<u32, DiffOp>, shape: &NovikovShape) -> Result<DiffOp> {
    let mut acc = DiffOp::zero(shape, 1);
    for k in 1..=shape.order {
        let Some(dk) = ops.get(&(k * r)) else { continue };
        let image = adams_on_operator(k, &dk.retag(k));
        let weight = RationalQ::inv_one_minus_q_pow(k, 1, shape.order).scale_rational(&rat(1, k as i64));
        acc = acc.add(&image.scale(&shape.scalar(weight)))?;
    }
    Ok(acc)
}

/// `f_r ↦ e^{Σ_k Ψ^k(D_{kr}(P q^{kQ∂_Q}, Q, q)) / k(1 - q^k)} f_r` for every entry.
pub fn theorem3_transform(f: &[NovikovSeries], ops: &BTreeMap<u32, DiffOp>) -> Result<Vec<NovikovSeries>> {
    let Some(first) = f.first() else {
        return Ok(Vec::new());
    };
    let shape = first.shape.clone();
    for (k, d) in ops {
        let free = d.free_term();
        let ok = free.as_laurent().is_some_and(|p| p.in_lambda_plus());
        if !ok {
            return Err(EngineError::Precondition(format!("free term of D_{k} is not in Λ₊[q, q^-1]")));
        }
    }
    f.iter()
        .enumerate()
        .map(|(i, fr)| {
            let a = theorem3_exponent(i as u32 + 1, ops, &shape)?;
            exp_apply(&a, fr)
        })
        .collect()
}

/// Data of the explicit reconstruction: `f_r`, coefficients `c_{α,r}`, parameters `τ_{α,k}`
/// and monomials `m_α` whose `P^{m_α}` span the toy K-ring.
#[derive(Clone, Debug)]
pub struct Theorem4Input {
    pub shape: NovikovShape,
    pub f: Vec<NovikovSeries>,
    /// `(α, r) ↦ c_{α,r}(q)`.
    pub c: BTreeMap<(usize, u32), LaurentPoly>,
    /// `(α, k) ↦ τ_{α,k} ∈ Λ₊`.
    pub tau: BTreeMap<(usize, u32), LambdaElement>,
    pub basis: Vec<Vec<u32>>,
}

/// Coordinates of `P^m` in the basis `x^e`, `x = P - 1`.
fn p_monomial_coords(nil: &[u32], m: &[u32]) -> Vec<Rational> {
    let mut exps: Vec<Vec<u32>> = vec![vec![]];
    for n in nil {
        exps = exps.into_iter().flat_map(|e| (0..=*n).map(move |j| [e.clone(), vec![j]].concat())).collect();
    }
    exps.iter()
        .map(|e| e.iter().zip(m).fold(rat(1, 1), |acc, (j, mi)| acc * crate::scalars::binomial(&rat(*mi as i64, 1), *j as usize)))
        .collect()
}

fn rational_rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..rows.len()).find(|i| !rows[*i][col].is_zero()) else { continue };
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && !row[col].is_zero() {
                let f = row[col].clone() / pivot_row[col].clone();
                for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= p.clone() * f.clone();
                }
            }
        }
        rank += 1;
    }
    rank
}

impl Theorem4Input {
    pub fn validate(&self) -> Result<()> {
        let s = self.shape.s();
        if self.basis.iter().any(|m| m.len() != s) {
            return Err(EngineError::Precondition("basis monomial has the wrong length".into()));
        }
        let rows: Vec<Vec<Rational>> = self.basis.iter().map(|m| p_monomial_coords(&self.shape.nil, m)).collect();
        if rational_rank(rows) != self.basis.len() {
            return Err(EngineError::Precondition("basis monomials P^m are linearly dependent".into()));
        }
        for ((alpha, k), t) in &self.tau {
            if *alpha >= self.basis.len() || *k == 0 {
                return Err(EngineError::Precondition(format!("τ index ({alpha}, {k}) out of range")));
            }
            if !t.in_lambda_plus() {
                return Err(EngineError::Precondition(format!("τ_({alpha},{k}) is not in Λ₊")));
            }
        }
        if self.c.keys().any(|(alpha, r)| *alpha >= self.basis.len() || *r == 0) {
            return Err(EngineError::Precondition("c index out of range".into()));
        }
        Ok(())
    }

    fn c_coeff(&self, alpha: usize, r: u32) -> Option<KCoeff> {
        self.c.get(&(alpha, r)).map(|p| self.shape.scalar(RationalQ::from_laurent(p.truncate(self.shape.order))))
    }

    fn tau_image(&self, alpha: usize, k: u32, r: u32) -> Option<LambdaElement> {
        self.tau.get(&(alpha, r * k)).map(|t| t.adams(k).truncate(self.shape.order))
    }
}

/// `g_r = Σ_d f_{r,d} Q^d e^{Σ_k Σ_α Ψ^k(τ_{α,rk}) P^{k m_α} q^{k(m_α,d)} / k(1 - q^k)}
/// Σ_α c_{α,r}(q) P^{m_α} q^{(m_α,d)}`.
pub fn theorem4_transform(input: &Theorem4Input) -> Result<Vec<NovikovSeries>> {
    input.validate()?;
    let shape = &input.shape;
    let order = shape.order;
    let mut out = Vec::with_capacity(input.f.len());
    for (i, fr) in input.f.iter().enumerate() {
        let r = i as u32 + 1;
        let mut g = NovikovSeries::zero(shape);
        for (d, fd) in fr.terms() {
            let mut exponent = shape.zero();
            for k in 1..=order {
                let weight = RationalQ::inv_one_minus_q_pow(k, 1, order).scale_rational(&rat(1, k as i64));
                for (alpha, m) in input.basis.iter().enumerate() {
                    let Some(t) = input.tau_image(alpha, k, r) else { continue };
                    let pm: Vec<i64> = m.iter().map(|x| (k * x) as i64).collect();
                    let term = shape
                        .p_monomial(&pm)
                        .mul(&shape.q_power(k as i64 * dot(m, d)))
                        .mul(&shape.scalar(weight.scale(&t)));
                    exponent = exponent.add(&term);
                }
            }
            let mut tail = shape.zero();
            for (alpha, m) in input.basis.iter().enumerate() {
                let Some(c) = input.c_coeff(alpha, r) else { continue };
                let pm: Vec<i64> = m.iter().map(|x| *x as i64).collect();
                tail = tail.add(&c.mul(&shape.p_monomial(&pm)).mul(&shape.q_power(dot(m, d))));
            }
            let e = nilpotent_exp(&exponent, order as usize + 1);
            let coeff = fd.mul(&e).mul(&tail).map_coeffs(RationalQ::reduce);
            g = g.add(&NovikovSeries::monomial(shape, d.clone(), coeff));
        }
        out.push(g);
    }
    Ok(out)
}

/// The same `g_r` as an operator expression:
/// `(Σ_α c_{α,r} T^{m_α}) e^{Σ_k Σ_α Ψ^k(τ_{α,rk}) T^{k m_α} / k(1 - q^k)} f_r`, `T = P q^{Q∂_Q}`.
pub fn theorem4_operator_form(input: &Theorem4Input) -> Result<Vec<NovikovSeries>> {
    input.validate()?;
    let shape = &input.shape;
    let order = shape.order;
    let zero_b = vec![0; shape.s()];
    input
        .f
        .iter()
        .enumerate()
        .map(|(i, fr)| {
            let r = i as u32 + 1;
            let mut a = DiffOp::zero(shape, 1);
            for k in 1..=order {
                let weight = RationalQ::inv_one_minus_q_pow(k, 1, order).scale_rational(&rat(1, k as i64));
                for (alpha, m) in input.basis.iter().enumerate() {
                    let Some(t) = input.tau_image(alpha, k, r) else { continue };
                    let km: Vec<u32> = m.iter().map(|x| k * x).collect();
                    a = a.add(&DiffOp::term(shape, 1, km, zero_b.clone(), shape.scalar(weight.scale(&t))))?;
                }
            }
            let mut c = DiffOp::zero(shape, 1);
            for (alpha, m) in input.basis.iter().enumerate() {
                let Some(cc) = input.c_coeff(alpha, r) else { continue };
                c = c.add(&DiffOp::term(shape, 1, m.clone(), zero_b.clone(), cc))?;
            }
            Ok(op_apply(&c, &exp_apply(&a, fr)?).reduce())
        })
        .collect()
}

/// Random operators, series and reconstruction data for tests.
pub mod sample {
    use rand::Rng;

    use super::*;
    use crate::lambda::sample::random_element;

    /// A coefficient `Σ c x^e q^j` with small Λ₊ (or scalar, when `lambda` is false) parts.
    pub fn random_coeff<R: Rng>(rng: &mut R, shape: &NovikovShape, lambda: bool) -> KCoeff {
        let mut out = shape.zero();
        for _ in 0..rng.gen_range(1..=2) {
            let e: Vec<u32> = shape.nil.iter().map(|n| rng.gen_range(0..=*n)).collect();
            let c = if lambda {
                random_element(rng, shape.order, 2, 1, true)
            } else {
                LambdaElement::rational(rat(rng.gen_range(-3..=3), rng.gen_range(1..=2)), shape.order)
            };
            let poly = LaurentPoly::monomial(rng.gen_range(-1..=1), c);
            out = out.add(&ToyK::basis(shape.nil.clone(), e, RationalQ::from_laurent(poly)));
        }
        out
    }

    pub fn random_op<R: Rng>(rng: &mut R, shape: &NovikovShape, tag: u32, n_terms: usize) -> DiffOp {
        let mut out = DiffOp::zero(shape, tag);
        for _ in 0..n_terms {
            let a: Vec<u32> = (0..shape.s()).map(|_| rng.gen_range(0..=2)).collect();
            let b: Vec<u32> = (0..shape.s()).map(|_| rng.gen_range(0..=1)).collect();
            let lambda = rng.gen_bool(0.5);
            let c = random_coeff(rng, shape, lambda);
            out.insert_add(a, b, c);
        }
        out
    }

    pub fn random_series<R: Rng>(rng: &mut R, shape: &NovikovShape) -> NovikovSeries {
        let mut out = NovikovSeries::zero(shape);
        for _ in 0..3 {
            let d: Vec<u32> = (0..shape.s()).map(|_| rng.gen_range(0..=shape.g)).collect();
            let lambda = rng.gen_bool(0.5);
            out = out.add(&NovikovSeries::monomial(shape, d, random_coeff(rng, shape, lambda)));
        }
        out
    }

    /// Random data for the explicit reconstruction with `r_count` entries and basis
    /// `{P^0, P^1, …, P^N}` in one variable (or the product basis in several).
    pub fn random_theorem4_input<R: Rng>(rng: &mut R, shape: &NovikovShape, r_count: u32) -> Theorem4Input {
        let mut basis: Vec<Vec<u32>> = vec![vec![]];
        for n in &shape.nil {
            basis = basis.into_iter().flat_map(|m| (0..=*n).map(move |j| [m.clone(), vec![j]].concat())).collect();
        }
        let f = (0..r_count).map(|_| random_series(rng, shape)).collect();
        let mut c = BTreeMap::new();
        let mut tau = BTreeMap::new();
        for alpha in 0..basis.len() {
            for r in 1..=r_count {
                if rng.gen_bool(0.7) {
                    let mut p = LaurentPoly::zero(shape.order);
                    for j in 0..=1 {
                        let x = LambdaElement::rational(rat(rng.gen_range(-2..=2), 1), shape.order)
                            .add(&random_element(rng, shape.order, 2, 1, true));
                        p = p.add(&LaurentPoly::monomial(j, x));
                    }
                    c.insert((alpha, r), p);
                }
            }
            for k in 1..=r_count * shape.order {
                if rng.gen_bool(0.6) {
                    tau.insert((alpha, k), random_element(rng, shape.order, 3, 2, true));
                }
            }
        }
        Theorem4Input { shape: shape.clone(), f, c, tau, basis }
    }
}
