//! The polynomial Bunce-Deddens algebra.
//!
//! Elements are finite sums `Σ_n U^n M_{f_n}` with every `f_n` locally
//! constant of one common period `l | S`. The shift `U` and the
//! multiplication operators satisfy
//!
//! ```text
//! M_f U = U M_{f∘β},   equivalently   U^{-n} M_f U^n = M_{f∘β^n},
//! ```
//!
//! so `(U^m M_f)(U^n M_g) = U^{m+n} M_{(f∘β^n) g}`.
//!
//! On `ℓ²(Z)` with `U E_k = E_{k+1}` and `M_f E_k = f(q(k)) E_k`, grouping
//! basis vectors by residue mod `l` identifies the period-`l` part with
//! `l × l` matrices of Laurent polynomials in `z`: the matrix symbol.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use faer::complex_native::c64;
use faer::Mat;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{root_of_unity, Cyclo};
use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::numtheory::{binomial, lcm, modulo};
use crate::odometer_fn::{haar_integral, pullback, LocConstFn};
use crate::supernatural::{sn_divides, SupernaturalNumber};

/// Equality compares `S` and the Fourier coefficients as functions, so the
/// presentation period does not matter.
#[derive(Debug, Clone)]
pub struct BDElement {
    s: SupernaturalNumber,
    period: u64,
    coeffs: BTreeMap<i64, LocConstFn>,
}

impl BDElement {
    /// Validates the period against `S`, lifts every coefficient to it and
    /// drops zero coefficients.
    pub fn new(s: SupernaturalNumber, period: u64, coeffs: BTreeMap<i64, LocConstFn>) -> Result<Self> {
        if period == 0 || !sn_divides(period, &s) {
            return Err(Error::PeriodNotInS { period });
        }
        let mut out = BTreeMap::new();
        for (n, f) in coeffs {
            if !period.is_multiple_of(f.period()) {
                return Err(Error::Invalid(format!(
                    "coefficient period {} does not divide {period}",
                    f.period()
                )));
            }
            if !f.is_zero() {
                out.insert(n, f.lift(period));
            }
        }
        Ok(Self {
            s,
            period,
            coeffs: out,
        })
    }

    pub fn zero(s: &SupernaturalNumber) -> Self {
        Self {
            s: s.clone(),
            period: 1,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn identity(s: &SupernaturalNumber) -> Self {
        Self::shift(s, 0)
    }

    /// `U^n`.
    pub fn shift(s: &SupernaturalNumber, n: i64) -> Self {
        Self {
            s: s.clone(),
            period: 1,
            coeffs: BTreeMap::from([(n, LocConstFn::constant(Cyclo::one()))]),
        }
    }

    /// `M_f`.
    pub fn multiplication(s: &SupernaturalNumber, f: &LocConstFn) -> Result<Self> {
        Self::monomial(s, 0, f)
    }

    /// `U^n M_f`.
    pub fn monomial(s: &SupernaturalNumber, n: i64, f: &LocConstFn) -> Result<Self> {
        Self::new(s.clone(), f.period(), BTreeMap::from([(n, f.clone())]))
    }

    pub fn ambient(&self) -> &SupernaturalNumber {
        &self.s
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, LocConstFn> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The same element presented at a multiple period `m | S`.
    pub fn lift_period(&self, m: u64) -> Result<Self> {
        if !m.is_multiple_of(self.period) {
            return Err(Error::Invalid(format!("cannot lift period {} to {m}", self.period)));
        }
        Self::new(self.s.clone(), m, self.coeffs.clone())
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.s != other.s {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }

    fn from_parts(s: &SupernaturalNumber, period: u64, coeffs: BTreeMap<i64, LocConstFn>) -> Self {
        Self::new(s.clone(), period, coeffs).expect("period already validated")
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        let period = lcm(self.period, other.period);
        let mut coeffs = self.coeffs.clone();
        for (&n, g) in &other.coeffs {
            let sum = match coeffs.get(&n) {
                Some(f) => f + g,
                None => g.clone(),
            };
            coeffs.insert(n, sum);
        }
        Ok(Self::from_parts(&self.s, period, coeffs))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        Ok(bd_mul_unchecked(self, other))
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        let coeffs = self.coeffs.iter().map(|(&n, f)| (n, f.scale(c))).collect();
        Self::from_parts(&self.s, self.period, coeffs)
    }

    /// Same element with the smallest common period of its coefficients.
    pub fn reduce_period(&self) -> Self {
        let period = self
            .coeffs
            .values()
            .map(|f| f.minimal_period().period())
            .fold(1, lcm);
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&n, f)| (n, f.minimal_period()))
            .collect();
        Self::from_parts(&self.s, period, coeffs)
    }
}

impl PartialEq for BDElement {
    fn eq(&self, other: &Self) -> bool {
        self.s == other.s && self.coeffs == other.coeffs
    }
}

impl Eq for BDElement {}

fn bd_mul_unchecked(a: &BDElement, b: &BDElement) -> BDElement {
    let period = lcm(a.period, b.period);
    let mut coeffs: BTreeMap<i64, LocConstFn> = BTreeMap::new();
    for (&m, f) in &a.coeffs {
        for (&n, g) in &b.coeffs {
            let term = &pullback(f, n) * g;
            let entry = coeffs.entry(m + n).or_insert_with(|| LocConstFn::zero(1));
            *entry = &*entry + &term;
        }
    }
    BDElement::from_parts(&a.s, period, coeffs)
}

/// Product in the crossed product; mixed periods are lifted to their lcm.
pub fn bd_mul(a: &BDElement, b: &BDElement) -> Result<BDElement> {
    a.try_mul(b)
}

/// `(U^n M_f)^* = U^{-n} M_{conj(f)∘β^{-n}}`.
pub fn bd_adjoint(a: &BDElement) -> BDElement {
    let coeffs = a
        .coeffs
        .iter()
        .map(|(&n, f)| (-n, pullback(&f.conj(), -n)))
        .collect();
    BDElement::from_parts(&a.s, a.period, coeffs)
}

/// The label derivation `δ_L(U^n M_f) = n U^n M_f`.
pub fn delta_l(a: &BDElement) -> BDElement {
    let coeffs = a
        .coeffs
        .iter()
        .map(|(&n, f)| (n, f.scale(&Cyclo::integer(n))))
        .collect();
    BDElement::from_parts(&a.s, a.period, coeffs)
}

/// Circle action at the rational angle `θ = p/q`: `U^n ↦ ζ_q^{np} U^n`.
pub fn rho_theta(a: &BDElement, p: i64, q: i64) -> Result<BDElement> {
    if q <= 0 {
        return Err(Error::Invalid(format!("angle {p}/{q} needs a positive denominator")));
    }
    let q = q as u64;
    let coeffs = a
        .coeffs
        .iter()
        .map(|(&n, f)| {
            let e = modulo(n, q) * modulo(p, q) % q;
            (n, f.scale(&root_of_unity(e as i64, q)))
        })
        .collect();
    Ok(BDElement::from_parts(&a.s, a.period, coeffs))
}

/// `b_n = E(U^{-n} b)`; `fourier_coeff(b, 0)` is the conditional expectation.
pub fn fourier_coeff(a: &BDElement, n: i64) -> LocConstFn {
    a.coeffs
        .get(&n)
        .cloned()
        .unwrap_or_else(|| LocConstFn::zero(a.period))
}

/// Tracial state normalized by `trace(1) = 1`.
pub fn trace(a: &BDElement) -> Cyclo {
    haar_integral(&fourier_coeff(a, 0))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSymbol {
    size: usize,
    entries: Vec<Vec<Laurent>>,
}

impl MatrixSymbol {
    pub fn zero(size: usize) -> Self {
        Self {
            size,
            entries: vec![vec![Laurent::zero(); size]; size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> &Laurent {
        &self.entries[i][j]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.size, other.size);
        let mut out = Self::zero(self.size);
        for i in 0..self.size {
            for k in 0..self.size {
                if self.entries[i][k].is_zero() {
                    continue;
                }
                for j in 0..self.size {
                    let t = &self.entries[i][k] * &other.entries[k][j];
                    out.entries[i][j] = &out.entries[i][j] + &t;
                }
            }
        }
        out
    }

    /// Conjugate transpose with `z ↦ z^{-1}`.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.size);
        for i in 0..self.size {
            for j in 0..self.size {
                out.entries[j][i] = self.entries[i][j].star();
            }
        }
        out
    }

    fn numeric(&self) -> NumericSymbol {
        let mut by_degree: BTreeMap<i64, Mat<c64>> = BTreeMap::new();
        for i in 0..self.size {
            for j in 0..self.size {
                for (&d, c) in self.entries[i][j].terms() {
                    let m = by_degree
                        .entry(d)
                        .or_insert_with(|| Mat::zeros(self.size, self.size));
                    let v = c.eval_complex(53);
                    m[(i, j)] += c64::new(v.re, v.im);
                }
            }
        }
        NumericSymbol {
            size: self.size,
            terms: by_degree.into_iter().collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Mat<c64> {
        self.numeric().eval(z)
    }
}

struct NumericSymbol {
    size: usize,
    terms: Vec<(i64, Mat<c64>)>,
}

impl NumericSymbol {
    fn eval(&self, z: Complex64) -> Mat<c64> {
        let mut out = Mat::zeros(self.size, self.size);
        for (d, m) in &self.terms {
            let w = z.powi(*d as i32);
            out += faer::scale(c64::new(w.re, w.im)) * m;
        }
        out
    }
}

/// Symbol of `a` at its own period.
pub fn matrix_symbol(a: &BDElement) -> MatrixSymbol {
    let l = a.period;
    let size = l as usize;
    let mut sym = MatrixSymbol::zero(size);
    // U^n M_f sends E_{i + lm} to f(i) E_{i + n + lm}; in the residue-block
    // picture that is entry ((i+n) mod l, i) = f(i) z^{floor((i+n)/l)}.
    for (&n, f) in &a.coeffs {
        for i in 0..l as i64 {
            let target = (i + n).rem_euclid(l as i64) as usize;
            let degree = (i + n).div_euclid(l as i64);
            sym.entries[target][i as usize].add_term(degree, &f.values()[i as usize]);
        }
    }
    sym
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Exact,
    GridEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub kind: NormKind,
    pub grid: u64,
    /// Certified `(max_n ‖f_n‖_∞, Σ_n ‖f_n‖_∞)` for the base norm, combined
    /// with the same binomial weights for `M > 0`.
    pub window: (f64, f64),
}

fn grid_point(t: u64, grid: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / grid as f64)
}

fn largest_singular_value(m: &Mat<c64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    m.singular_values().into_iter().fold(0.0, f64::max)
}

/// `‖a‖`, estimated as the largest singular value of the symbol over `grid`
/// equispaced points of the circle. Elements with a single Fourier mode are
/// evaluated exactly: `‖U^n M_f‖ = ‖f‖_∞`.
pub fn base_norm(a: &BDElement, grid: u64) -> NormReport {
    let sups: Vec<f64> = a.coeffs.values().map(LocConstFn::sup_norm).collect();
    let lower = sups.iter().copied().fold(0.0, f64::max);
    let upper = exact_sum(sups.iter().map(|&x| (1, x)));
    if a.coeffs.len() <= 1 {
        return NormReport {
            value: lower,
            kind: NormKind::Exact,
            grid,
            window: (lower, upper),
        };
    }
    let numeric = matrix_symbol(a).numeric();
    let value = (0..grid)
        .into_par_iter()
        .map(|t| largest_singular_value(&numeric.eval(grid_point(t, grid))))
        .reduce(|| 0.0, f64::max);
    NormReport {
        value,
        kind: NormKind::GridEstimate,
        grid,
        window: (lower, upper),
    }
}

fn to_exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite norm")
}

/// `Σ w · x` evaluated exactly, rounded once.
fn exact_sum<I: IntoIterator<Item = (u64, f64)>>(terms: I) -> f64 {
    let total = terms
        .into_iter()
        .fold(BigRational::zero(), |acc, (w, x)| acc + to_exact(x) * BigInt::from(w));
    total.to_f64().expect("finite sum")
}

fn derivative_reports(a: &BDElement, m: u32, grid: u64) -> Vec<NormReport> {
    let mut reports = Vec::with_capacity(m as usize + 1);
    let mut d = a.clone();
    for _ in 0..=m {
        reports.push(base_norm(&d, grid));
        d = delta_l(&d);
    }
    reports
}

fn combine(reports: &[NormReport], weights: &[u64], grid: u64) -> NormReport {
    let pick = |f: fn(&NormReport) -> f64| exact_sum(weights.iter().zip(reports).map(|(&w, r)| (w, f(r))));
    let kind = if reports.iter().all(|r| r.kind == NormKind::Exact) {
        NormKind::Exact
    } else {
        NormKind::GridEstimate
    };
    NormReport {
        value: pick(|r| r.value),
        kind,
        grid,
        window: (pick(|r| r.window.0), pick(|r| r.window.1)),
    }
}

/// `‖a‖_M = Σ_j C(M, j) ‖δ_L^j(a)‖`.
///
/// The weighted sum of the (floating-point) base norms is formed in exact
/// rational arithmetic and rounded once, so any grouping of the same terms
/// gives the same `f64`.
pub fn op_norm(a: &BDElement, m: u32, grid: u64) -> NormReport {
    let reports = derivative_reports(a, m, grid);
    let weights: Vec<u64> = (0..=m as u64).map(|j| binomial(m as u64, j)).collect();
    combine(&reports, &weights, grid)
}

/// `‖a‖_M` through `‖a‖_{M+1} = ‖a‖_M + ‖δ_L(a)‖_M`, unrolled to base norms.
pub fn op_norm_recursive(a: &BDElement, m: u32, grid: u64) -> NormReport {
    fn visit(j: usize, m: u32, counts: &mut [u64]) {
        if m == 0 {
            counts[j] += 1;
        } else {
            visit(j, m - 1, counts);
            visit(j + 1, m - 1, counts);
        }
    }
    let reports = derivative_reports(a, m, grid);
    let mut counts = vec![0u64; m as usize + 1];
    visit(0, m, &mut counts);
    combine(&reports, &counts, grid)
}

/// Eigenvalues of the evaluated symbol over `grid` points of the circle.
/// A sample of the spectrum for normal elements, not a certified enclosure.
pub fn spectrum_sample(a: &BDElement, grid: u64) -> Vec<Complex64> {
    let numeric = matrix_symbol(a).numeric();
    let per_point: Vec<Vec<Complex64>> = (0..grid)
        .into_par_iter()
        .map(|t| {
            let m = numeric.eval(grid_point(t, grid));
            let eig: Vec<c64> = if m.nrows() == 1 {
                vec![m[(0, 0)]]
            } else {
                m.eigenvalues()
            };
            eig.into_iter().map(|v| Complex64::new(v.re, v.im)).collect::<Vec<_>>()
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

impl<'b> Add<&'b BDElement> for &BDElement {
    type Output = BDElement;
    fn add(self, rhs: &'b BDElement) -> BDElement {
        self.try_add(rhs).expect("ambient supernatural numbers differ")
    }
}

impl Neg for &BDElement {
    type Output = BDElement;
    fn neg(self) -> BDElement {
        self.scale(&Cyclo::integer(-1))
    }
}

impl<'b> Sub<&'b BDElement> for &BDElement {
    type Output = BDElement;
    fn sub(self, rhs: &'b BDElement) -> BDElement {
        self + &(-rhs)
    }
}

impl<'b> Mul<&'b BDElement> for &BDElement {
    type Output = BDElement;
    fn mul(self, rhs: &'b BDElement) -> BDElement {
        self.try_mul(rhs).expect("ambient supernatural numbers differ")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    #[serde(rename = "S")]
    s: SupernaturalNumber,
    period: u64,
    coeffs: BTreeMap<String, LocConstFn>,
}

impl Serialize for BDElement {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        // numeric order of n, not the lexicographic order of its string key
        use serde::ser::SerializeMap;
        struct Coeffs<'a>(&'a BTreeMap<i64, LocConstFn>);
        impl Serialize for Coeffs<'_> {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = ser.serialize_map(Some(self.0.len()))?;
                for (n, f) in self.0 {
                    map.serialize_entry(&n.to_string(), f)?;
                }
                map.end()
            }
        }
        use serde::ser::SerializeStruct;
        let mut st = ser.serialize_struct("BDElement", 3)?;
        st.serialize_field("S", &self.s)?;
        st.serialize_field("period", &self.period)?;
        st.serialize_field("coeffs", &Coeffs(&self.coeffs))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for BDElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawElement::deserialize(d)?;
        let mut coeffs = BTreeMap::new();
        for (k, f) in raw.coeffs {
            let n: i64 = k
                .parse()
                .map_err(|_| D::Error::custom(format!("bad Fourier index {k:?}")))?;
            coeffs.insert(n, f);
        }
        BDElement::new(raw.s, raw.period, coeffs).map_err(D::Error::custom)
    }
}
