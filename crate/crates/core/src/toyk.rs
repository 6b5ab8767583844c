//! A toy K-ring: polynomials in line classes `P_i^{±1}` modulo `(P_i - 1)^{N_i + 1}`,
//! with coefficients in any [`Ring`].

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::ring::Ring;
use crate::scalars::{binomial, int, Rational};

/// `Σ_e c_e ∏_i x_i^{e_i}` with `x_i = P_i - 1` and `e_i ≤ N_i`.
#[derive(Clone, Debug)]
pub struct ToyK<C: Ring> {
    nil: Vec<u32>,
    terms: BTreeMap<Vec<u32>, C>,
    proto: C,
}

impl<C: Ring> ToyK<C> {
    /// Zero; `proto` is any coefficient, used only to build zeros and ones.
    pub fn zero(nil: Vec<u32>, proto: &C) -> Self {
        ToyK { nil, terms: BTreeMap::new(), proto: proto.zero_like() }
    }

    pub fn scalar(nil: Vec<u32>, c: C) -> Self {
        let mut out = Self::zero(nil, &c);
        let e = vec![0; out.nil.len()];
        out.insert_add(e, c);
        out
    }

    pub fn one(nil: Vec<u32>, proto: &C) -> Self {
        Self::scalar(nil, proto.one_like())
    }

    /// `c · x^e`.
    pub fn basis(nil: Vec<u32>, e: Vec<u32>, c: C) -> Self {
        let mut out = Self::zero(nil, &c);
        if e.iter().zip(&out.nil).all(|(a, n)| a <= n) {
            out.insert_add(e, c);
        }
        out
    }

    /// `P_i^k = Σ_j C(k, j) x_i^j`, for any integer `k`.
    pub fn p_power(nil: Vec<u32>, i: usize, k: i64, proto: &C) -> Self {
        let mut out = Self::zero(nil, proto);
        for j in 0..=out.nil[i] {
            let c = binomial(&int(k), j as usize);
            let mut e = vec![0; out.nil.len()];
            e[i] = j;
            out.insert_add(e, proto.one_like().scale_rational(&c));
        }
        out
    }

    /// `P^a = ∏_i P_i^{a_i}`.
    pub fn p_monomial(nil: Vec<u32>, a: &[i64], proto: &C) -> Self {
        let mut out = Self::one(nil.clone(), proto);
        for (i, k) in a.iter().enumerate() {
            if *k != 0 {
                out = out.mul(&Self::p_power(nil.clone(), i, *k, proto));
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.nil.len()
    }

    pub fn nilpotency(&self) -> &[u32] {
        &self.nil
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &C)> {
        self.terms.iter()
    }

    pub fn proto(&self) -> &C {
        &self.proto
    }

    fn insert_add(&mut self, e: Vec<u32>, c: C) {
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

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `x^0`, i.e. the value at `P = 1`.
    pub fn at_p_one(&self) -> C {
        self.terms.get(&vec![0; self.nil.len()]).cloned().unwrap_or_else(|| self.proto.zero_like())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nil.clone(), &self.proto);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if e.iter().zip(&self.nil).all(|(a, n)| a <= n) {
                    out.insert_add(e, ca.mul(cb));
                }
            }
        }
        out
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &C) -> Self {
        self.map_coeffs(|x| x.mul(c))
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.map_coeffs(|x| x.scale_rational(r))
    }

    pub fn map_coeffs(&self, f: impl Fn(&C) -> C) -> Self {
        let mut out = Self::zero(self.nil.clone(), &self.proto);
        for (e, c) in &self.terms {
            out.insert_add(e.clone(), f(c));
        }
        out
    }

    /// `P_i ↦ P_i^k` combined with `f` on coefficients.
    pub fn adams_with(&self, k: u32, f: impl Fn(&C) -> C) -> Self {
        let s = self.nil.len();
        let one = Self::one(self.nil.clone(), &self.proto);
        // images of x_i = P_i - 1
        let images: Vec<Self> = (0..s).map(|i| Self::p_power(self.nil.clone(), i, k as i64, &self.proto).sub(&one)).collect();
        let mut out = Self::zero(self.nil.clone(), &self.proto);
        for (e, c) in &self.terms {
            let mut m = Self::scalar(self.nil.clone(), f(c));
            for (i, p) in e.iter().enumerate() {
                for _ in 0..*p {
                    m = m.mul(&images[i]);
                }
            }
            out = out.add(&m);
        }
        out
    }

    pub fn to_json(&self, coeff: impl Fn(&C) -> Value) -> Value {
        Value::Array(self.terms.iter().map(|(e, c)| json!([e, coeff(c)])).collect())
    }
}

impl<C: Ring + PartialEq> PartialEq for ToyK<C> {
    fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }
}

impl<C: Ring> Ring for ToyK<C> {
    fn zero_like(&self) -> Self {
        Self::zero(self.nil.clone(), &self.proto)
    }
    fn one_like(&self) -> Self {
        Self::one(self.nil.clone(), &self.proto)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, o: &Self) -> Self {
        ToyK::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        ToyK::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        ToyK::mul(self, o)
    }
    fn neg(&self) -> Self {
        ToyK::neg(self)
    }
    fn scale_rational(&self, r: &Rational) -> Self {
        ToyK::scale_rational(self, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::LambdaElement;

    fn proto() -> LambdaElement {
        LambdaElement::zero(2)
    }

    #[test]
    fn line_class_powers() {
        let nil = vec![2];
        let p = ToyK::p_power(nil.clone(), 0, 1, &proto());
        let p_inv = ToyK::p_power(nil.clone(), 0, -1, &proto());
        assert_eq!(p.mul(&p_inv), ToyK::one(nil.clone(), &proto()));
        let p3 = ToyK::p_power(nil.clone(), 0, 3, &proto());
        assert_eq!(p.mul(&p).mul(&p), p3);
        // (P - 1)^3 = 0
        let x = p.sub(&ToyK::one(nil.clone(), &proto()));
        assert!(x.mul(&x).mul(&x).is_zero());
    }

    #[test]
    fn adams_on_line_classes() {
        let nil = vec![1, 2];
        let p = ToyK::p_monomial(nil.clone(), &[1, 2], &proto());
        let img = p.adams_with(3, |c| c.adams(3));
        assert_eq!(img, ToyK::p_monomial(nil.clone(), &[3, 6], &proto()));
        let tau = ToyK::scalar(nil.clone(), LambdaElement::tau(1, 2)).mul(&p);
        let a = tau.mul(&p).adams_with(2, |c| c.adams(2));
        let b = tau.adams_with(2, |c| c.adams(2)).mul(&p.adams_with(2, |c| c.adams(2)));
        assert_eq!(a, b);
    }
}
