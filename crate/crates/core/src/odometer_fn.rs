//! Locally constant functions on `Z/SZ`, stored as one period of values.
//!
//! A function of period `l` is `f(x) = values[π_l(x)]`; entry `k` is
//! `f(q(k))`. Lifting to a multiple period repeats the cycle and represents
//! the same function.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{root_of_unity, Cyclo};
use crate::error::{Error, Result};
use crate::numtheory::{divisors, lcm, modulo};
use crate::profinite::{residue, ProfiniteInt};

#[derive(Debug, Clone, Serialize)]
pub struct LocConstFn {
    period: u64,
    values: Vec<Cyclo>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFn {
    period: u64,
    values: Vec<Cyclo>,
}

impl<'de> Deserialize<'de> for LocConstFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFn::deserialize(d)?;
        LocConstFn::new(raw.period, raw.values).map_err(serde::de::Error::custom)
    }
}

impl LocConstFn {
    pub fn new(period: u64, values: Vec<Cyclo>) -> Result<Self> {
        if period == 0 || values.len() as u64 != period {
            return Err(Error::Invalid(format!(
                "period {period} with {} values",
                values.len()
            )));
        }
        Ok(Self { period, values })
    }

    pub fn from_fn(period: u64, f: impl FnMut(u64) -> Cyclo) -> Self {
        assert!(period >= 1);
        Self {
            period,
            values: (0..period).map(f).collect(),
        }
    }

    pub fn constant(c: Cyclo) -> Self {
        Self {
            period: 1,
            values: vec![c],
        }
    }

    pub fn zero(period: u64) -> Self {
        Self::from_fn(period, |_| Cyclo::zero())
    }

    /// Indicator of the residue class `j mod l`.
    pub fn indicator(l: u64, j: i64) -> Self {
        let j = modulo(j, l);
        Self::from_fn(l, |k| if k == j { Cyclo::one() } else { Cyclo::zero() })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn values(&self) -> &[Cyclo] {
        &self.values
    }

    /// `f(q(k))` for any integer `k`.
    pub fn at(&self, k: i64) -> &Cyclo {
        &self.values[modulo(k, self.period) as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Cyclo::is_zero)
    }

    /// Same function presented at period `m`, a multiple of the period.
    pub fn lift(&self, m: u64) -> Self {
        assert!(m.is_multiple_of(self.period), "cannot lift period {} to {m}", self.period);
        if m == self.period {
            return self.clone();
        }
        Self::from_fn(m, |k| self.values[(k % self.period) as usize].clone())
    }

    /// Smallest period `d | l` under which the value cycle repeats.
    pub fn minimal_period(&self) -> Self {
        let l = self.period;
        for d in divisors(l) {
            if (0..l).all(|k| self.values[k as usize] == self.values[(k % d) as usize]) {
                return Self {
                    period: d,
                    values: self.values[..d as usize].to_vec(),
                };
            }
        }
        unreachable!("l itself is a period")
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Cyclo, &Cyclo) -> Cyclo) -> Self {
        let m = lcm(self.period, other.period);
        Self::from_fn(m, |k| {
            f(
                &self.values[(k % self.period) as usize],
                &other.values[(k % other.period) as usize],
            )
        })
    }

    pub fn map(&self, f: impl Fn(&Cyclo) -> Cyclo) -> Self {
        Self {
            period: self.period,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(Cyclo::conj)
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        self.map(|v| v * c)
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        self.map(|v| v.scale(q))
    }

    /// Pointwise inverse, if no value vanishes.
    pub fn inv(&self) -> Option<Self> {
        let values = self.values.iter().map(Cyclo::inv).collect::<Option<Vec<_>>>()?;
        Some(Self {
            period: self.period,
            values,
        })
    }

    /// `max_k |f(k)|`, which is the sup norm over `Z/SZ` by density of `q(Z)`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(Cyclo::abs).fold(0.0, f64::max)
    }
}

impl PartialEq for LocConstFn {
    fn eq(&self, other: &Self) -> bool {
        let m = lcm(self.period, other.period);
        (0..m).all(|k| {
            self.values[(k % self.period) as usize] == other.values[(k % other.period) as usize]
        })
    }
}

impl Eq for LocConstFn {}

impl<'b> Add<&'b LocConstFn> for &LocConstFn {
    type Output = LocConstFn;
    fn add(self, rhs: &'b LocConstFn) -> LocConstFn {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl<'b> Sub<&'b LocConstFn> for &LocConstFn {
    type Output = LocConstFn;
    fn sub(self, rhs: &'b LocConstFn) -> LocConstFn {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl<'b> Mul<&'b LocConstFn> for &LocConstFn {
    type Output = LocConstFn;
    fn mul(self, rhs: &'b LocConstFn) -> LocConstFn {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &LocConstFn {
    type Output = LocConstFn;
    fn neg(self) -> LocConstFn {
        self.map(|v| -v)
    }
}

/// `χ_l^k`, with `χ_l^k(q(j)) = ζ_l^{jk}`.
pub fn character(l: u64, k: i64) -> LocConstFn {
    assert!(l >= 1);
    let k = modulo(k, l);
    LocConstFn::from_fn(l, |j| root_of_unity(((j * k) % l) as i64, l))
}

pub fn evaluate(f: &LocConstFn, x: &ProfiniteInt) -> Result<Cyclo> {
    let r = residue(x, f.period)?;
    Ok(f.values[r as usize].clone())
}

/// `f ∘ β^m`: `values'[k] = values[(k + m) mod l]`.
pub fn pullback(f: &LocConstFn, m: i64) -> LocConstFn {
    let l = f.period;
    let shift = modulo(m, l);
    LocConstFn::from_fn(l, |k| f.values[((k + shift) % l) as usize].clone())
}

/// Haar mean: the average over one period.
pub fn haar_integral(f: &LocConstFn) -> Cyclo {
    let total: Cyclo = f.values.iter().cloned().sum();
    total.scale(&BigRational::new(1.into(), (f.period as i64).into()))
}

/// Exact discrete Fourier coefficients: `f = Σ_k c_k χ_l^k`.
pub fn char_decompose(f: &LocConstFn) -> BTreeMap<u64, Cyclo> {
    let l = f.period;
    let inv_l = BigRational::new(1.into(), (l as i64).into());
    (0..l)
        .filter_map(|k| {
            let c: Cyclo = (0..l)
                .filter(|&j| !f.values[j as usize].is_zero())
                .map(|j| &f.values[j as usize] * &root_of_unity(-((j * k % l) as i64), l))
                .sum();
            let c = c.scale(&inv_l);
            (!c.is_zero()).then_some((k, c))
        })
        .collect()
}

/// Inverse of [`char_decompose`] at period `l`.
pub fn char_synthesize(l: u64, coeffs: &BTreeMap<u64, Cyclo>) -> LocConstFn {
    LocConstFn::from_fn(l, |j| {
        coeffs
            .iter()
            .map(|(&k, c)| c * &root_of_unity((j * k % l) as i64, l))
            .sum()
    })
}
