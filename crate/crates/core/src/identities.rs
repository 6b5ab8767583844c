//! Certified identities: Euler characteristics of cyclic covers, the Todd twisting
//! identity, the multipliers `Δ_ζ` and `□_{ζ,r}`, Adams operation identities and the
//! expansion of `1/(1 - q^k)` at `q = 1`.

use std::collections::BTreeMap;

use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::EngineConfig;
use crate::error::{EngineError, Result};
use crate::expand::{binomial_series, expand_at_one, QSeries};
use crate::lambda::sample::random_element;
use crate::lambda::LambdaElement;
use crate::novikov::{adams_on_operator, op_apply, op_compose, sample::random_op, DiffOp, NovikovSeries, NovikovShape};
use crate::qfun::{series_inverse, RationalQ};
use crate::ring::nilpotent_exp;
use crate::scalars::{binomial, factorial, int, rat, Cyclotomic, Rational};
use crate::toyk::ToyK;

/// A branched cyclic cover of degree `M` of a genus-`g` curve, ramified over points of
/// orders `m_1, …, m_n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RamificationProfile {
    pub degree: u32,
    pub genus: u32,
    pub orders: Vec<u32>,
}

impl RamificationProfile {
    pub fn new(degree: u32, genus: u32, orders: Vec<u32>) -> Result<Self> {
        if degree == 0 || orders.iter().any(|m| *m == 0 || !degree.is_multiple_of(*m)) {
            return Err(EngineError::Precondition("ramification orders must divide the degree".into()));
        }
        Ok(RamificationProfile { degree, genus, orders })
    }
}

/// `eu = M(2 - 2g - n) + Σ M/m_i`.
pub fn hurwitz_euler(p: &RamificationProfile) -> i64 {
    let m = p.degree as i64;
    let n = p.orders.len() as i64;
    m * (2 - 2 * p.genus as i64 - n) + p.orders.iter().map(|o| m / *o as i64).sum::<i64>()
}

/// A realizable genus-0 profile with positive Euler characteristic, with a witness monodromy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RealizedProfile {
    pub profile: RamificationProfile,
    pub euler: i64,
    /// Elements of `Z_M` of the prescribed orders summing to zero and generating `Z_M`.
    pub monodromy: Vec<u32>,
}

impl RealizedProfile {
    /// Two points of full order `M` with inverse monodromies (or no points when `M = 1`).
    pub fn is_a_type(&self) -> bool {
        let m = self.profile.degree;
        match self.profile.orders.as_slice() {
            [] => m == 1,
            [a, b] => *a == m && *b == m && (self.monodromy[0] + self.monodromy[1]).is_multiple_of(m),
            _ => false,
        }
    }
}

fn order_in_cyclic(g: u32, m: u32) -> u32 {
    m / g.gcd(&m)
}

fn find_monodromy(m: u32, orders: &[u32]) -> Option<Vec<u32>> {
    let candidates: Vec<Vec<u32>> = orders.iter().map(|o| (0..m).filter(|g| order_in_cyclic(*g, m) == *o).collect()).collect();
    let mut choice = vec![0u32; orders.len()];
    fn search(i: usize, m: u32, cands: &[Vec<u32>], choice: &mut Vec<u32>) -> bool {
        if i == cands.len() {
            let sum: u32 = choice.iter().sum();
            let gen = choice.iter().fold(m, |acc, g| acc.gcd(g));
            return sum.is_multiple_of(m) && gen == 1;
        }
        for g in &cands[i] {
            choice[i] = *g;
            if search(i + 1, m, cands, choice) {
                return true;
            }
        }
        false
    }
    search(0, m, &candidates, &mut choice).then_some(choice)
}

/// Every genus-0 profile of degree `M ≤ bound` with `eu > 0` that is realized by a
/// connected cyclic cover.
pub fn ade_enumerate(bound: u32) -> Vec<RealizedProfile> {
    let mut out = Vec::new();
    for m in 1..=bound {
        let divisors: Vec<u32> = (2..=m).filter(|d| m % d == 0).collect();
        // eu > 0 forces n ≤ 3
        let mut profiles: Vec<Vec<u32>> = vec![vec![]];
        let mut frontier: Vec<Vec<u32>> = vec![vec![]];
        for _ in 0..3 {
            let next: Vec<Vec<u32>> = frontier
                .iter()
                .flat_map(|p| divisors.iter().filter(|d| p.last().is_none_or(|l| *d >= l)).map(move |d| [p.clone(), vec![*d]].concat()))
                .collect();
            profiles.extend(next.iter().cloned());
            frontier = next;
        }
        for orders in profiles {
            let profile = RamificationProfile { degree: m, genus: 0, orders };
            let euler = hurwitz_euler(&profile);
            if euler <= 0 {
                continue;
            }
            if let Some(monodromy) = find_monodromy(m, &profile.orders) {
                out.push(RealizedProfile { profile, euler, monodromy });
            }
        }
    }
    out
}

/// Bernoulli numbers `B_0, …, B_n` with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = vec![Rational::one()];
    for k in 1..=n {
        let s = (0..k).fold(Rational::zero(), |acc, j| acc + binomial(&int(k as i64 + 1), j) * b[j].clone());
        b.push(-s / int(k as i64 + 1));
    }
    b
}

fn rseries_mul(a: &[Rational], b: &[Rational], n: usize) -> Vec<Rational> {
    (0..n).map(|i| (0..=i).fold(Rational::zero(), |acc, j| acc + a[j].clone() * b[i - j].clone())).collect()
}

/// `x / (1 - e^{-x}) · (1 - e^{-x}) / (1 - e^{-rx})` against `td(L^r) / r` through `x^N`;
/// `perturb` adds one to the right side at `x^N`.
pub fn todd_twist_identity(r: u32, n: usize, perturb: bool) -> bool {
    assert!(r >= 1 && n >= 1);
    let len = n + 1;
    let r_q = int(r as i64);
    // S(x) = (1 - e^{-x}) / x
    let s: Vec<Rational> = (0..len).map(|i| rat(if i % 2 == 0 { 1 } else { -1 }, 1) / factorial(i + 1)).collect();
    let s_r: Vec<Rational> = s.iter().enumerate().map(|(i, c)| c * num_traits::pow(r_q.clone(), i)).collect();
    let todd = series_inverse(&s, len);
    let ratio = rseries_mul(&s, &series_inverse(&s_r, len), len);
    let lhs: Vec<Rational> = rseries_mul(&todd, &ratio, len).into_iter().map(|c| c / r_q.clone()).collect();
    // td(L^r) = rx / (1 - e^{-rx}) = Σ B_i (-rx)^i / i!
    let b = bernoulli(n);
    let mut rhs: Vec<Rational> = (0..len)
        .map(|i| b[i].clone() * num_traits::pow(-r_q.clone(), i) / factorial(i) / r_q.clone())
        .collect();
    if perturb {
        rhs[n] += Rational::one();
    }
    lhs == rhs
}

/// A class `Σ c_e x^e` in the toy K-ring, `x_i = P_i - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalClass {
    pub nil: Vec<u32>,
    pub coeffs: BTreeMap<Vec<u32>, Rational>,
}

impl FormalClass {
    /// The class of a point: zero.
    pub fn point() -> Self {
        FormalClass { nil: vec![], coeffs: BTreeMap::new() }
    }

    /// `c · x^e`.
    pub fn basis(nil: Vec<u32>, e: Vec<u32>, c: Rational) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(e, c);
        }
        FormalClass { nil, coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            let v = out.coeffs.remove(e).unwrap_or_default() + c;
            if !v.is_zero() {
                out.coeffs.insert(e.clone(), v);
            }
        }
        out
    }

    /// The rank (augmentation) part.
    pub fn rank(&self) -> Rational {
        self.coeffs.get(&vec![0; self.nil.len()]).cloned().unwrap_or_default()
    }

    fn to_toyk(&self, proto: &QSeries) -> ToyK<QSeries> {
        let mut out = ToyK::zero(self.nil.clone(), proto);
        for (e, c) in &self.coeffs {
            out = out.add(&ToyK::basis(self.nil.clone(), e.clone(), QSeries::one(proto.prec(), 0).scale_rational(c)));
        }
        out
    }

    /// `Ψ^k` of the class, with constant series coefficients.
    fn adams(&self, k: u32, proto: &QSeries) -> ToyK<QSeries> {
        self.to_toyk(proto).adams_with(k, QSeries::clone)
    }

    fn top_nilpotent(&self) -> Self {
        Self::basis(self.nil.clone(), self.nil.clone(), Rational::one())
    }
}

/// `1 / (1 - ζ_m^{-a·j} (1 + u)^α)` to order `u^prec`.
fn inverse_twisted_factor(m: u32, aj: i64, alpha: &Rational, prec: i64) -> Result<QSeries> {
    let n = (prec + 3) as usize;
    let zeta = Cyclotomic::zeta_pow(m, -aj);
    let coeffs: Vec<Cyclotomic> = binomial_series(alpha, n)
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let t = Cyclotomic::from_rational(c).mul(&zeta).neg();
            if i == 0 {
                t.add(&Cyclotomic::one())
            } else {
                t
            }
        })
        .collect();
    QSeries::from_scalars(0, &coeffs, prec + 2, 0).inverse()
}

fn class_term(c: &FormalClass, j: u32, factor: &QSeries, k: u32) -> ToyK<QSeries> {
    c.adams(j, factor).map_coeffs(|x| x.mul(factor).scale_rational(&rat(1, k as i64)))
}

fn require_nilpotent(c: &FormalClass) -> Result<()> {
    if !c.rank().is_zero() {
        return Err(EngineError::Precondition("class has a rank part; the k-sum does not truncate".into()));
    }
    Ok(())
}

fn zero_multiplier(c: &FormalClass, prec: i64) -> ToyK<QSeries> {
    ToyK::zero(c.nil.clone(), &QSeries::zero(prec, 0))
}

/// `Σ_{k ≤ K} (Ψ^k(c) / k(1 - ζ^{-k} q^{k/m}) - Ψ^{km}(c) / k(1 - q^{km}))`, `ζ = ζ_m^a`.
pub fn delta_zeta_exponent(c: &FormalClass, m: u32, a: i64, k_bound: u32, e: i64) -> Result<ToyK<QSeries>> {
    require_nilpotent(c)?;
    let mut acc = zero_multiplier(c, e);
    for k in 1..=k_bound {
        let twisted = inverse_twisted_factor(m, a * k as i64, &rat(k as i64, m as i64), e)?;
        let plain = inverse_twisted_factor(1, 0, &int((k * m) as i64), e)?;
        acc = acc.add(&class_term(c, k, &twisted, k)).sub(&class_term(c, k * m, &plain, k));
    }
    Ok(acc.map_coeffs(|x| x.truncate(e)))
}

/// `Δ_ζ`, the exponential of [`delta_zeta_exponent`].
pub fn delta_zeta(c: &FormalClass, m: u32, a: i64, k_bound: u32, e: i64) -> Result<ToyK<QSeries>> {
    let x = delta_zeta_exponent(c, m, a, k_bound, e)?;
    let terms = c.nil.iter().sum::<u32>() as usize + 2;
    Ok(nilpotent_exp(&x, terms))
}

/// `Σ_{k ≤ K} (Ψ^{kr}(c) / k(1 - ζ^{-k} q^{kr/m}) - Ψ^k(c) / k(1 - q^k))`, `ζ = ζ_m^a`.
pub fn box_exponent(c: &FormalClass, m: u32, a: i64, r: u32, k_bound: u32, e: i64) -> Result<ToyK<QSeries>> {
    require_nilpotent(c)?;
    let mut acc = zero_multiplier(c, e);
    for k in 1..=k_bound {
        let twisted = inverse_twisted_factor(m, a * k as i64, &rat((k * r) as i64, m as i64), e)?;
        let plain = inverse_twisted_factor(1, 0, &int(k as i64), e)?;
        acc = acc.add(&class_term(c, k * r, &twisted, k)).sub(&class_term(c, k, &plain, k));
    }
    Ok(acc.map_coeffs(|x| x.truncate(e)))
}

/// Compares the exponent of `□_{ζ,r} □_{1,rm}^{-1}` with that of `Ψ^r(Δ_ζ)` through `u^E`,
/// where `Ψ^r` fixes `ζ`, acts on the class and sends `q ↦ q^r`. With `perturb`, the left
/// side uses the class shifted by its top nilpotent monomial.
pub fn box_delta_identity(c: &FormalClass, m: u32, a: i64, r: u32, k_bound: u32, e: i64, perturb: bool) -> Result<bool> {
    let lhs_class = if perturb { c.add(&c.top_nilpotent()) } else { c.clone() };
    let lhs = box_exponent(&lhs_class, m, a, r, k_bound, e)?.sub(&box_exponent(&lhs_class, 1, 0, r * m, k_bound, e)?);
    let rhs = delta_zeta_exponent(c, m, a, k_bound, e)?.adams_with(r, |x| x.substitute_q_power(r));
    let lhs = lhs.map_coeffs(|x| x.truncate(e));
    let rhs = rhs.map_coeffs(|x| x.truncate(e));
    Ok(lhs.sub(&rhs).is_zero())
}

/// `expand_at_one(1/(1 - q^k))` has polar part `-u^{-1}/k` and constant term `(k-1)/2k`
/// for every `k ≤ k_max`.
pub fn expansion_lemma_check(k_max: u32) -> bool {
    (1..=k_max).all(expansion_lemma_holds)
}

fn expansion_lemma_holds(k: u32) -> bool {
    let s = expand_at_one(&RationalQ::inv_one_minus_q_pow(k, 1, 0), 2);
    let polar_ok = s.polar_part() == QSeries::monomial(-1, LambdaElement::rational(rat(-1, k as i64), 0), s.prec());
    polar_ok && s.coeff(0) == LambdaElement::rational(rat(k as i64 - 1, 2 * k as i64), 0)
}

/// One line of a suite report.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl IdentityResult {
    fn new(suite: &str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        IdentityResult { suite: suite.into(), name: name.into(), passed, detail: detail.into() }
    }

    pub fn to_json(&self) -> Value {
        json!({"suite": self.suite, "name": self.name, "passed": self.passed, "detail": self.detail})
    }
}

pub const SUITES: [&str; 5] = ["hurwitz", "todd", "box-delta", "adams-ops", "expansion-lemma"];

/// Runs one suite (or `all`); `perturb` injects a detectable error into the Todd and
/// `□`/`Δ` comparisons.
pub fn run_suite(name: &str, config: &EngineConfig, perturb: bool) -> Result<Vec<IdentityResult>> {
    match name {
        "hurwitz" => Ok(hurwitz_suite()),
        "todd" => Ok(todd_suite(perturb)),
        "box-delta" => box_delta_suite(config, perturb),
        "adams-ops" => Ok(adams_suite(config)),
        "expansion-lemma" => Ok(expansion_suite(config)),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, config, perturb)?);
            }
            Ok(out)
        }
        other => Err(EngineError::Parse(format!("unknown suite `{other}`"))),
    }
}

fn hurwitz_suite() -> Vec<IdentityResult> {
    let s = "hurwitz";
    let cases = [((3, 0, vec![3, 3]), 2), ((5, 1, vec![]), 0), ((2, 0, vec![2, 2, 2]), 1), ((6, 0, vec![2, 3, 6]), 0)];
    let mut out: Vec<IdentityResult> = cases
        .into_iter()
        .map(|((m, g, orders), want)| {
            let p = RamificationProfile { degree: m, genus: g, orders: orders.clone() };
            let got = hurwitz_euler(&p);
            IdentityResult::new(s, format!("euler M={m} g={g} {orders:?}"), got == want, format!("eu = {got}"))
        })
        .collect();
    let found = ade_enumerate(12);
    let only_a = found.iter().all(RealizedProfile::is_a_type);
    let complete = (2..=12u32).all(|m| found.iter().any(|p| p.profile.orders == vec![m, m]));
    out.push(IdentityResult::new(s, "positive euler covers are A-type for M <= 12", only_a && complete, format!("{} profiles", found.len())));
    out
}

fn todd_suite(perturb: bool) -> Vec<IdentityResult> {
    (1..=5u32).map(|r| IdentityResult::new("todd", format!("todd twist r={r} N=12"), todd_twist_identity(r, 12, perturb), "")).collect()
}

fn box_delta_suite(config: &EngineConfig, perturb: bool) -> Result<Vec<IdentityResult>> {
    let s = "box-delta";
    let e = config.e;
    let k_bound = 4;
    let x = FormalClass::basis(vec![1], vec![1], Rational::one());
    let classes = [("0", FormalClass::basis(vec![1], vec![0], Rational::zero())), ("P-1", x.clone()), ("2(P-1)", x.add(&x))];
    let mut out = Vec::new();
    for (label, c) in &classes {
        for m in 2..=3u32 {
            for a in (1..m as i64).filter(|a| a.gcd(&(m as i64)) == 1) {
                for r in 1..=2u32 {
                    let ok = box_delta_identity(c, m, a, r, k_bound, e, perturb)?;
                    out.push(IdentityResult::new(s, format!("box/delta c={label} zeta={m}_{a} r={r}"), ok, ""));
                }
            }
        }
        let one = delta_zeta(c, 1, 0, k_bound, e)?;
        let trivial = one.sub(&ToyK::one(c.nil.clone(), &QSeries::one(e, 0))).is_zero();
        out.push(IdentityResult::new(s, format!("delta at m=1 is one, c={label}"), trivial, ""));
    }
    Ok(out)
}

fn adams_suite(config: &EngineConfig) -> Vec<IdentityResult> {
    let s = "adams-ops";
    let d = config.d.min(4);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();
    let mut compose_ok = true;
    let mut mult_ok = true;
    for _ in 0..5 {
        let x = random_element(&mut rng, d, 3, 3, false);
        let y = random_element(&mut rng, d, 3, 3, false);
        for k in 1..=3 {
            mult_ok &= x.mul(&y).adams(k) == x.adams(k).mul(&y.adams(k));
            for l in 1..=3 {
                compose_ok &= x.adams(l).adams(k) == x.adams(k * l);
            }
        }
    }
    out.push(IdentityResult::new(s, "lambda: adams composes", compose_ok, ""));
    out.push(IdentityResult::new(s, "lambda: adams is multiplicative", mult_ok, ""));

    let proto = RationalQ::zero(d);
    let p = ToyK::p_power(vec![2], 0, 1, &proto);
    let toy_ok = (1..=3u32).all(|k| (1..=3u32).all(|l| p.adams_with(l, Clone::clone).adams_with(k, Clone::clone) == p.adams_with(k * l, Clone::clone)));
    out.push(IdentityResult::new(s, "toy K-ring: adams composes", toy_ok, ""));

    let sh = NovikovShape { nil: vec![1], g: 6, order: d };
    let one = NovikovSeries::constant(&sh, sh.one());
    let mut fixes = true;
    for k in 1..=3u32 {
        for dd in 0..=(sh.g / k) {
            let bare = DiffOp::term(&sh, 1, vec![1], vec![dd], sh.p_monomial(&[-1]));
            let got = op_apply(&adams_on_operator(k, &bare), &one);
            fixes &= got == NovikovSeries::monomial(&sh, vec![k * dd], sh.q_power((k * dd) as i64));
        }
    }
    out.push(IdentityResult::new(s, "operators: translation q^{Q d/dQ} is fixed", fixes, ""));

    let mut op_mult = true;
    for tag in 1..=2 {
        for k in 1..=3u32 {
            let (a, b) = (random_op(&mut rng, &sh, tag, 2), random_op(&mut rng, &sh, tag, 2));
            let lhs = adams_on_operator(k, &op_compose(&a, &b).expect("same tag"));
            let rhs = op_compose(&adams_on_operator(k, &a), &adams_on_operator(k, &b)).expect("same tag");
            for dd in 0..=(sh.g / k) {
                let f = NovikovSeries::monomial(&sh, vec![k * dd], sh.one());
                op_mult &= op_apply(&lhs, &f).reduce() == op_apply(&rhs, &f).reduce();
            }
        }
    }
    out.push(IdentityResult::new(s, "operators: adams is multiplicative", op_mult, ""));
    out
}

fn expansion_suite(config: &EngineConfig) -> Vec<IdentityResult> {
    let k_max = config.m_max.max(5);
    (1..=k_max)
        .map(|k| IdentityResult::new("expansion-lemma", format!("1/(1-q^{k}) at q=1"), expansion_lemma_holds(k), ""))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_characteristics() {
        assert_eq!(hurwitz_euler(&RamificationProfile::new(7, 0, vec![7, 7]).unwrap()), 2);
        assert_eq!(hurwitz_euler(&RamificationProfile::new(4, 1, vec![]).unwrap()), 0);
        assert_eq!(hurwitz_euler(&RamificationProfile::new(2, 0, vec![2, 2, 2]).unwrap()), 1);
        assert!(RamificationProfile::new(6, 0, vec![4]).is_err());
    }

    #[test]
    fn small_degree_covers() {
        let found = ade_enumerate(2);
        let orders: Vec<_> = found.iter().map(|p| (p.profile.degree, p.profile.orders.clone())).collect();
        assert_eq!(orders, vec![(1, vec![]), (2, vec![2, 2])]);
        assert_eq!(found[0].euler, 2);
    }

    #[test]
    fn positive_euler_covers_are_a_type() {
        let found = ade_enumerate(12);
        assert!(found.iter().all(RealizedProfile::is_a_type));
        assert!(found.iter().all(|p| p.profile.orders.len() < 3));
        for m in 2..=12 {
            assert!(found.iter().any(|p| p.profile.degree == m && p.profile.orders == vec![m, m]));
        }
    }

    #[test]
    fn todd_twist() {
        for r in 1..=5 {
            assert!(todd_twist_identity(r, 12, false), "r={r}");
        }
        assert!(!todd_twist_identity(2, 12, true));
        assert!(!todd_twist_identity(1, 4, true));
    }

    #[test]
    fn bernoulli_numbers() {
        let b = bernoulli(6);
        assert_eq!(b[1], rat(-1, 2));
        assert_eq!(b[2], rat(1, 6));
        assert_eq!(b[4], rat(-1, 30));
        assert_eq!(b[6], rat(1, 42));
        assert!(b[3].is_zero() && b[5].is_zero());
    }

    #[test]
    fn delta_is_trivial_for_the_point_and_for_m_one() {
        let pt = FormalClass::point();
        let one = ToyK::one(vec![], &QSeries::one(6, 0));
        assert!(delta_zeta(&pt, 2, 1, 4, 6).unwrap().sub(&one).is_zero());
        let x = FormalClass::basis(vec![1], vec![1], rat(3, 2));
        assert!(delta_zeta_exponent(&x, 1, 0, 5, 6).unwrap().is_zero());
        assert!(!delta_zeta_exponent(&x, 2, 1, 5, 6).unwrap().is_zero());
    }

    #[test]
    fn rank_part_is_rejected() {
        let c = FormalClass::basis(vec![1], vec![0], rat(1, 1));
        assert!(delta_zeta(&c, 2, 1, 3, 6).is_err());
    }

    #[test]
    fn box_relation_holds_and_detects_perturbation() {
        let x = FormalClass::basis(vec![1], vec![1], rat(1, 1));
        for m in 2..=3 {
            for r in 1..=2 {
                assert!(box_delta_identity(&x, m, 1, r, 4, 6, false).unwrap(), "m={m} r={r}");
                assert!(!box_delta_identity(&x, m, 1, r, 4, 6, true).unwrap(), "m={m} r={r}");
            }
        }
        let two = FormalClass::basis(vec![2], vec![2], rat(1, 1)).add(&FormalClass::basis(vec![2], vec![1], rat(-1, 3)));
        assert!(box_delta_identity(&two, 3, 2, 2, 3, 5, false).unwrap());
    }

    #[test]
    fn expansion_lemma_constants() {
        assert!(expansion_lemma_check(8));
        let s = expand_at_one(&RationalQ::inv_one_minus_q_pow(5, 1, 0), 2);
        assert_eq!(s.coeff(0), LambdaElement::rational(rat(2, 5), 0));
    }

    #[test]
    fn full_suite_passes() {
        let config = EngineConfig::default();
        let results = run_suite("all", &config, false).unwrap();
        let failed: Vec<_> = results.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
        assert!(failed.is_empty(), "{failed:?}");
        let perturbed = run_suite("box-delta", &config, true).unwrap();
        assert!(perturbed.iter().any(|r| !r.passed));
        assert!(run_suite("nope", &config, false).is_err());
    }
}
