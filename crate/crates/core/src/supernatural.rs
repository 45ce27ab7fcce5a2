//! Supernatural numbers `S = ∏ p^{ε_p}` with `ε_p ∈ {0, 1, …, ∞}`.
//!
//! Only finitely many primes are ever listed. That covers every computation
//! here, since each one touches finitely many divisors of `S` at a time.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::{factorize, is_prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Exponent {
    Finite(u32),
    Inf,
}

impl Exponent {
    fn add(self, other: Exponent) -> Exponent {
        match (self, other) {
            (Exponent::Finite(a), Exponent::Finite(b)) => Exponent::Finite(a + b),
            _ => Exponent::Inf,
        }
    }

    fn min_with(self, n: u32) -> u32 {
        match self {
            Exponent::Finite(e) => e.min(n),
            Exponent::Inf => n,
        }
    }

    fn admits(self, n: u32) -> bool {
        match self {
            Exponent::Finite(e) => n <= e,
            Exponent::Inf => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SupernaturalNumber {
    factors: BTreeMap<u64, Exponent>,
}

impl SupernaturalNumber {
    /// The empty product.
    pub fn one() -> Self {
        Self::default()
    }

    pub fn new<I: IntoIterator<Item = (u64, Exponent)>>(factors: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, e) in factors {
            if !is_prime(p) {
                return Err(Error::Invalid(format!("{p} is not prime")));
            }
            if e == Exponent::Finite(0) {
                continue;
            }
            if map.insert(p, e).is_some() {
                return Err(Error::Invalid(format!("prime {p} listed twice")));
            }
        }
        Ok(Self { factors: map })
    }

    /// `∏ p^∞` over the given primes.
    pub fn infinite(primes: &[u64]) -> Result<Self> {
        Self::new(primes.iter().map(|&p| (p, Exponent::Inf)))
    }

    pub fn from_integer(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("0 is not a supernatural number".into()));
        }
        Ok(Self {
            factors: factorize(n)
                .into_iter()
                .map(|(p, e)| (p, Exponent::Finite(e)))
                .collect(),
        })
    }

    pub fn exponent(&self, p: u64) -> Exponent {
        self.factors.get(&p).copied().unwrap_or(Exponent::Finite(0))
    }

    pub fn factors(&self) -> impl Iterator<Item = (u64, Exponent)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    pub fn primes(&self) -> Vec<u64> {
        self.factors.keys().copied().collect()
    }

    pub fn is_infinite(&self) -> bool {
        self.factors.values().any(|e| *e == Exponent::Inf)
    }

    /// The ordinary integer when every exponent is finite.
    pub fn as_integer(&self) -> Option<u64> {
        self.factors.iter().try_fold(1u64, |acc, (&p, &e)| match e {
            Exponent::Finite(e) => acc.checked_mul(p.checked_pow(e)?),
            Exponent::Inf => None,
        })
    }
}

pub fn sn_product(a: &SupernaturalNumber, b: &SupernaturalNumber) -> SupernaturalNumber {
    let mut factors = a.factors.clone();
    for (&p, &e) in &b.factors {
        factors
            .entry(p)
            .and_modify(|x| *x = x.add(e))
            .or_insert(e);
    }
    SupernaturalNumber { factors }
}

pub fn sn_divides(l: u64, s: &SupernaturalNumber) -> bool {
    assert!(l >= 1, "sn_divides: l must be positive");
    factorize(l)
        .into_iter()
        .all(|(p, e)| s.exponent(p).admits(e))
}

/// `gcd(n, S)`: always a finite divisor of `n`; `n / gcd` avoids every prime
/// of infinite exponent in `S`.
pub fn sn_gcd_finite(n: u64, s: &SupernaturalNumber) -> u64 {
    assert!(n >= 1, "sn_gcd_finite: n must be positive");
    factorize(n)
        .into_iter()
        .map(|(p, e)| p.pow(s.exponent(p).min_with(e)))
        .product()
}

/// Canonical divisor chain `l_1 | l_2 | … | l_depth` of `S`.
///
/// With the listed primes `p_1 < … < p_r`, the n-th raw term is
/// `∏_{i ≤ min(n, r)} p_i^{min(n − i + 1, ε_{p_i})}`, so each prime enters
/// one step after the previous one and then grows by one power per step.
/// Terms equal to 1 and repeats are dropped.
pub fn divisor_chain(s: &SupernaturalNumber, depth: usize) -> Result<Vec<u64>> {
    if depth == 0 {
        return Err(Error::Chain("depth must be at least 1".into()));
    }
    let primes: Vec<(u64, Exponent)> = s.factors().collect();
    let mut chain: Vec<u64> = Vec::with_capacity(depth);
    let mut n: u32 = 1;
    loop {
        let mut term: u64 = 1;
        let mut saturated = true;
        for (i, &(p, e)) in primes.iter().enumerate() {
            let i = i as u32 + 1;
            let want = if n >= i { n - i + 1 } else { 0 };
            let k = e.min_with(want);
            if e.admits(want + 1) || want == 0 {
                saturated = false;
            }
            term = p
                .checked_pow(k)
                .and_then(|x| term.checked_mul(x))
                .ok_or_else(|| Error::Chain("chain level overflows u64".into()))?;
        }
        if term > 1 && chain.last() != Some(&term) {
            chain.push(term);
            if chain.len() == depth {
                return Ok(chain);
            }
        }
        if saturated {
            return Err(Error::Chain(format!(
                "S admits only {} strictly increasing schedule terms, {depth} requested",
                chain.len()
            )));
        }
        n += 1;
    }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(p, e)| match e {
                Exponent::Finite(1) => p.to_string(),
                Exponent::Finite(k) => format!("{p}^{k}"),
                Exponent::Inf => format!("{p}^inf"),
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

impl Serialize for SupernaturalNumber {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.factors.len()))?;
        for (&p, &e) in &self.factors {
            match e {
                Exponent::Finite(k) => seq.serialize_element(&(p, k))?,
                Exponent::Inf => seq.serialize_element(&(p, "inf"))?,
            }
        }
        seq.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawExponent {
    Int(u32),
    Text(String),
}

impl<'de> Deserialize<'de> for SupernaturalNumber {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<(u64, RawExponent)> = Vec::deserialize(deserializer)?;
        let mut last = 0;
        let mut factors = Vec::with_capacity(raw.len());
        for (p, e) in raw {
            if p <= last {
                return Err(de::Error::custom("primes must be strictly ascending"));
            }
            last = p;
            let e = match e {
                RawExponent::Int(0) => return Err(de::Error::custom("exponent 0 is not stored")),
                RawExponent::Int(k) => Exponent::Finite(k),
                RawExponent::Text(t) if t == "inf" => Exponent::Inf,
                RawExponent::Text(t) => {
                    return Err(de::Error::custom(format!("bad exponent {t:?}")))
                }
            };
            factors.push((p, e));
        }
        SupernaturalNumber::new(factors).map_err(de::Error::custom)
    }
}
