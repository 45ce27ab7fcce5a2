//! Exact arithmetic in cyclotomic fields `Q(ζ_N)`.
//!
//! Values are kept in canonical form: the representing polynomial in `ζ_N`
//! is reduced modulo the cyclotomic polynomial `Φ_N`, so the stored
//! coefficient vector has length `φ(N)` and two values of the same order are
//! equal iff their vectors are. Mixed-order arithmetic lifts both operands to
//! the lcm of their orders.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{divisors, euler_phi, gcd, lcm, modulo};

static PHI_CACHE: OnceLock<RwLock<HashMap<u64, Arc<Vec<i64>>>>> = OnceLock::new();

/// Coefficients (constant term first) of the n-th cyclotomic polynomial.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<i64>> {
    assert!(n >= 1);
    let cache = PHI_CACHE.get_or_init(Default::default);
    if let Some(p) = cache.read().expect("cyclotomic cache poisoned").get(&n) {
        return Arc::clone(p);
    }
    // X^n - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in divisors(n).into_iter().filter(|&d| d < n) {
        num = exact_div_monic(&num, &cyclotomic_polynomial(d));
    }
    let poly = Arc::new(num);
    cache
        .write()
        .expect("cyclotomic cache poisoned")
        .entry(n)
        .or_insert_with(|| Arc::clone(&poly));
    poly
}

fn exact_div_monic(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut rem = num.to_vec();
    let mut quot = vec![0i64; num.len() - dn];
    for i in (dn..num.len()).rev() {
        let c = rem[i];
        if c != 0 {
            quot[i - dn] = c;
            for (j, &d) in den.iter().enumerate() {
                rem[i - dn + j] -= c * d;
            }
        }
    }
    debug_assert!(rem.iter().all(|&r| r == 0), "inexact cyclotomic division");
    quot
}

pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("bad rational {text:?}"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(text.parse().map_err(|_| bad())?)),
    }
}

pub fn rational_to_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Clone)]
pub struct Cyclo {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl Cyclo {
    /// Builds `Σ c · ζ_N^e`, reducing exponents mod `N` and the result mod `Φ_N`.
    pub fn from_terms<I>(order: u64, terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, BigRational)>,
    {
        assert!(order >= 1, "cyclotomic order must be positive");
        let mut dense = vec![BigRational::zero(); order as usize];
        for (e, c) in terms {
            dense[modulo(e, order) as usize] += c;
        }
        Self::reduce(order, dense)
    }

    fn reduce(order: u64, dense: Vec<BigRational>) -> Self {
        let mut out = Self::reduce_at(order, dense);
        out.shrink_if_rational();
        out
    }

    /// Canonical form at exactly this order.
    fn reduce_at(order: u64, mut dense: Vec<BigRational>) -> Self {
        let phi = cyclotomic_polynomial(order);
        let deg = phi.len() - 1;
        for i in (deg..dense.len()).rev() {
            if dense[i].is_zero() {
                continue;
            }
            let c = std::mem::take(&mut dense[i]);
            for (j, &p) in phi.iter().enumerate().take(deg) {
                if p != 0 {
                    dense[i - deg + j] -= &c * BigInt::from(p);
                }
            }
        }
        dense.truncate(deg);
        dense.resize(deg, BigRational::zero());
        Self {
            order,
            coeffs: dense,
        }
    }

    fn shrink_if_rational(&mut self) {
        if self.order > 1 && self.coeffs[1..].iter().all(Zero::is_zero) {
            let c = std::mem::take(&mut self.coeffs[0]);
            self.order = 1;
            self.coeffs = vec![c];
        }
    }

    pub fn rational(q: BigRational) -> Self {
        Self {
            order: 1,
            coeffs: vec![q],
        }
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Self::rational(BigRational::new(p.into(), q.into()))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    /// Nonzero terms of the canonical form, exponents ascending.
    pub fn terms(&self) -> Vec<(u64, BigRational)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| (e as u64, c.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.coeffs[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| self.coeffs[0].clone())
    }

    /// Re-expresses the value in `Q(ζ_m)`; `m` must be a multiple of the order.
    pub fn lift(&self, m: u64) -> Self {
        assert!(m.is_multiple_of(self.order), "cannot lift order {} to {m}", self.order);
        if m == self.order {
            return self.clone();
        }
        let step = (m / self.order) as usize;
        let mut dense = vec![BigRational::zero(); m as usize];
        for (e, c) in self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            dense[e * step] = c.clone();
        }
        Self::reduce_at(m, dense)
    }

    fn common(&self, other: &Self) -> (Self, Self) {
        if self.order == other.order {
            return (self.clone(), other.clone());
        }
        let m = lcm(self.order, other.order);
        (self.lift(m), other.lift(m))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        let mut out = Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        };
        if q.is_zero() {
            out = Self::zero();
        }
        out
    }

    /// The Galois automorphism `ζ ↦ ζ^a`, `gcd(a, N) = 1`.
    pub fn galois(&self, a: u64) -> Self {
        debug_assert_eq!(gcd(a, self.order), 1);
        Self::from_terms(
            self.order,
            self.coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| ((e as u64 * a % self.order) as i64, c.clone())),
        )
    }

    /// Complex conjugation `ζ_N^e ↦ ζ_N^{N−e}`.
    pub fn conj(&self) -> Self {
        if self.order <= 2 {
            return self.clone();
        }
        self.galois(self.order - 1)
    }

    /// Multiplicative inverse, via the product of the non-identity Galois
    /// conjugates divided by the (rational) field norm.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let mut cofactor = Self::one().lift(self.order);
        for a in 2..self.order {
            if gcd(a, self.order) == 1 {
                cofactor = &cofactor * &self.galois(a);
            }
        }
        let norm = (self * &cofactor)
            .as_rational()
            .expect("field norm is rational");
        Some(cofactor.scale(&norm.recip()))
    }

    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// Floating-point value. Each term costs one rounding of `cos`/`sin` and
    /// one of the coefficient, so the absolute error is at most about
    /// `terms · max|c| · 2^{-52}`; `precision` above 53 bits is not honoured.
    pub fn eval_complex(&self, _precision: u32) -> Complex64 {
        let n = self.order as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, c)| {
                let c = c.to_f64().unwrap_or(f64::NAN);
                if e == 0 {
                    Complex64::new(c, 0.0)
                } else {
                    Complex64::from_polar(c, 2.0 * std::f64::consts::PI * e as f64 / n)
                }
            })
            .sum()
    }

    pub fn abs(&self) -> f64 {
        self.eval_complex(53).norm()
    }
}

pub fn root_of_unity(k: i64, n: u64) -> Cyclo {
    Cyclo::from_terms(n, [(k, BigRational::one())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycloOp {
    Add,
    Mul,
    Conj,
    Scale,
}

/// Operand for [`cyclo_arith`]: a field element or a rational scalar.
#[derive(Debug, Clone)]
pub enum CycloOperand {
    Value(Cyclo),
    Rational(BigRational),
}

pub fn cyclo_arith(op: CycloOp, a: &Cyclo, b: Option<&CycloOperand>) -> Result<Cyclo> {
    let as_value = |b: &CycloOperand| match b {
        CycloOperand::Value(v) => v.clone(),
        CycloOperand::Rational(q) => Cyclo::rational(q.clone()),
    };
    match (op, b) {
        (CycloOp::Conj, _) => Ok(a.conj()),
        (CycloOp::Add, Some(b)) => Ok(a + &as_value(b)),
        (CycloOp::Mul, Some(b)) => Ok(a * &as_value(b)),
        (CycloOp::Scale, Some(CycloOperand::Rational(q))) => Ok(a.scale(q)),
        (CycloOp::Scale, Some(CycloOperand::Value(v))) => v
            .as_rational()
            .map(|q| a.scale(&q))
            .ok_or_else(|| Error::Invalid("scale needs a rational factor".into())),
        (op, None) => Err(Error::Invalid(format!("{op:?} needs two operands"))),
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = self.common(other);
        a.coeffs == b.coeffs
    }
}

impl Eq for Cyclo {}

impl fmt::Debug for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = terms
            .iter()
            .map(|(e, c)| match e {
                0 => rational_to_string(c),
                _ => format!("{}*z{}^{e}", rational_to_string(c), self.order),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'b> Add<&'b Cyclo> for &Cyclo {
    type Output = Cyclo;
    fn add(self, rhs: &'b Cyclo) -> Cyclo {
        let (a, b) = self.common(rhs);
        let mut out = Cyclo {
            order: a.order,
            coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect(),
        };
        out.shrink_if_rational();
        out
    }
}

impl<'b> Sub<&'b Cyclo> for &Cyclo {
    type Output = Cyclo;
    fn sub(self, rhs: &'b Cyclo) -> Cyclo {
        self + &(-rhs)
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl<'b> Mul<&'b Cyclo> for &Cyclo {
    type Output = Cyclo;
    fn mul(self, rhs: &'b Cyclo) -> Cyclo {
        if self.order == 1 {
            return rhs.scale(&self.coeffs[0]);
        }
        if rhs.order == 1 {
            return self.scale(&rhs.coeffs[0]);
        }
        let (a, b) = self.common(rhs);
        let n = a.order as usize;
        let mut dense = vec![BigRational::zero(); n];
        for (i, x) in a.coeffs.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.coeffs.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                dense[(i + j) % n] += x * y;
            }
        }
        Cyclo::reduce(a.order, dense)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Cyclo> for Cyclo {
            type Output = Cyclo;
            fn $m(self, rhs: Cyclo) -> Cyclo {
                (&self).$m(&rhs)
            }
        }
        impl<'b> $tr<&'b Cyclo> for Cyclo {
            type Output = Cyclo;
            fn $m(self, rhs: &'b Cyclo) -> Cyclo {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        -&self
    }
}

impl std::iter::Sum for Cyclo {
    fn sum<I: Iterator<Item = Cyclo>>(iter: I) -> Cyclo {
        iter.fold(Cyclo::zero(), |acc, x| &acc + &x)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCyclo {
    order: u64,
    terms: Vec<(u64, String)>,
}

impl Serialize for Cyclo {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawCyclo {
            order: self.order,
            terms: self
                .terms()
                .into_iter()
                .map(|(e, c)| (e, rational_to_string(&c)))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cyclo {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawCyclo::deserialize(d)?;
        if raw.order == 0 {
            return Err(D::Error::custom("order must be positive"));
        }
        let mut terms = Vec::with_capacity(raw.terms.len());
        for (e, c) in raw.terms {
            if e >= raw.order {
                return Err(D::Error::custom(format!("exponent {e} not below order {}", raw.order)));
            }
            terms.push((e as i64, parse_rational(&c).map_err(D::Error::custom)?));
        }
        Ok(Cyclo::from_terms(raw.order, terms))
    }
}

/// Largest absolute value of a rational coefficient; used for error bounds.
pub fn max_abs_coeff(a: &Cyclo) -> BigRational {
    a.coeffs
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(BigRational::zero)
}

/// `φ(N)`, the dimension of `Q(ζ_N)` over `Q`.
pub fn field_degree(n: u64) -> u64 {
    euler_phi(n)
}
