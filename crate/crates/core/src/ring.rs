use crate::scalars::Rational;

/// Commutative ring operations shared by the coefficient types of the engine.
///
/// Elements carry their own truncation data, so zero and one are produced from an
/// existing element rather than from nothing.
pub trait Ring: Clone {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale_rational(&self, r: &Rational) -> Self;
}

/// `Σ_{n=0}^{terms-1} x^n / n!`, for `x` nilpotent of index at most `terms`.
pub fn nilpotent_exp<R: Ring>(x: &R, terms: usize) -> R {
    let mut acc = x.one_like();
    let mut power = x.one_like();
    for n in 1..terms {
        power = power.mul(x).scale_rational(&crate::scalars::rat(1, n as i64));
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    acc
}
