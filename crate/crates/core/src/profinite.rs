//! Truncated elements of the odometer ring `Z/SZ`.
//!
//! An element is carried at a declared depth `N` of a divisor chain
//! `1 = l_0 | l_1 | … | l_N` as mixed-radix digits `a_n ∈ [0, l_n / l_{n-1})`,
//! representing `x_n = Σ_{k ≤ n} a_k l_{k-1}` at level `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numtheory::modulo;
use crate::supernatural::{divisor_chain, sn_divides, SupernaturalNumber};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct DivisorChain {
    levels: Vec<u64>,
}

impl DivisorChain {
    /// Validates `l_1 | l_2 | …`, strictly increasing, all `> 1`.
    pub fn new(levels: Vec<u64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Chain("empty chain".into()));
        }
        let mut prev = 1u64;
        for &l in &levels {
            if l <= prev || l % prev != 0 {
                return Err(Error::Chain(format!("{prev} -> {l} is not a proper divisor step")));
            }
            prev = l;
        }
        Ok(Self { levels })
    }

    /// Like [`DivisorChain::new`], additionally checking every level divides `S`.
    pub fn within(s: &SupernaturalNumber, levels: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = levels.iter().find(|&&l| !sn_divides(l, s)) {
            return Err(Error::Chain(format!("{bad} does not divide {s}")));
        }
        Self::new(levels)
    }

    /// The canonical chain of `S` at the given depth.
    pub fn canonical(s: &SupernaturalNumber, depth: usize) -> Result<Self> {
        Self::new(divisor_chain(s, depth)?)
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn top(&self) -> u64 {
        *self.levels.last().expect("chain is nonempty")
    }

    /// `l_{n-1}` for 1-based level `n`, with `l_0 = 1`.
    fn below(&self, n: usize) -> u64 {
        if n == 0 {
            1
        } else {
            self.levels[n - 1]
        }
    }

    pub fn radices(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.levels.len()).map(|i| self.levels[i] / self.below(i))
    }
}

impl<'de> Deserialize<'de> for DivisorChain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let levels = Vec::<u64>::deserialize(d)?;
        DivisorChain::new(levels).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ProfiniteInt {
    chain: DivisorChain,
    digits: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfinite {
    chain: DivisorChain,
    digits: Vec<u64>,
}

impl<'de> Deserialize<'de> for ProfiniteInt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawProfinite::deserialize(d)?;
        ProfiniteInt::from_digits(raw.chain, raw.digits).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZsOp {
    Add,
    Neg,
    Mul,
}

impl ProfiniteInt {
    pub fn from_digits(chain: DivisorChain, digits: Vec<u64>) -> Result<Self> {
        if digits.len() != chain.depth() {
            return Err(Error::Invalid(format!(
                "{} digits for a chain of depth {}",
                digits.len(),
                chain.depth()
            )));
        }
        for (a, radix) in digits.iter().zip(chain.radices()) {
            if *a >= radix {
                return Err(Error::Invalid(format!("digit {a} out of range [0, {radix})")));
            }
        }
        Ok(Self { chain, digits })
    }

    pub fn zero(chain: &DivisorChain) -> Self {
        Self {
            chain: chain.clone(),
            digits: vec![0; chain.depth()],
        }
    }

    pub fn chain(&self) -> &DivisorChain {
        &self.chain
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// `x_N`, the residue at the top level.
    pub fn top_residue(&self) -> u64 {
        let mut x = 0u64;
        for (i, a) in self.digits.iter().enumerate() {
            x += a * self.chain.below(i);
        }
        x
    }

    /// Residue at the 1-based chain level `n` (level 0 is always 0).
    pub fn level_residue(&self, n: usize) -> u64 {
        (0..n).map(|i| self.digits[i] * self.chain.below(i)).sum()
    }
}

/// The dense embedding `q: Z → Z/SZ`, truncated to the chain.
pub fn q_embed(x: i64, chain: &DivisorChain) -> ProfiniteInt {
    let r = modulo(x, chain.top());
    from_residue(r as i64, chain.top(), chain).expect("reduced residue is in range")
}

/// Greedy mixed-radix conversion of a top-level residue.
pub fn from_residue(r: i64, l: u64, chain: &DivisorChain) -> Result<ProfiniteInt> {
    if l != chain.top() {
        return Err(Error::Invalid(format!("modulus {l} is not the chain top {}", chain.top())));
    }
    if r < 0 || r as u64 >= l {
        return Err(Error::Invalid(format!("residue {r} not in [0, {l})")));
    }
    let mut rest = r as u64;
    let digits = chain
        .radices()
        .map(|radix| {
            let a = rest % radix;
            rest /= radix;
            a
        })
        .collect();
    Ok(ProfiniteInt {
        chain: chain.clone(),
        digits,
    })
}

/// `π_l(x)` for `l | l_N`.
pub fn residue(x: &ProfiniteInt, l: u64) -> Result<u64> {
    let top = x.chain.top();
    if l == 0 || !top.is_multiple_of(l) {
        return Err(Error::NotADivisor { l, top });
    }
    Ok(x.top_residue() % l)
}

pub fn zs_arith(op: ZsOp, x: &ProfiniteInt, y: Option<&ProfiniteInt>) -> Result<ProfiniteInt> {
    let top = x.chain.top() as u128;
    let a = x.top_residue() as u128;
    let value = match (op, y) {
        (ZsOp::Neg, _) => (top - a) % top,
        (ZsOp::Add, Some(y)) | (ZsOp::Mul, Some(y)) => {
            if y.chain != x.chain {
                return Err(Error::ChainMismatch(
                    x.chain.levels.clone(),
                    y.chain.levels.clone(),
                ));
            }
            let b = y.top_residue() as u128;
            if op == ZsOp::Add {
                (a + b) % top
            } else {
                (a * b) % top
            }
        }
        (_, None) => return Err(Error::Invalid(format!("{op:?} needs two operands"))),
    };
    from_residue(value as i64, x.chain.top(), &x.chain)
}

/// `x + q(m)`; `m = 1` is the odometer map β.
pub fn beta_shift(x: &ProfiniteInt, m: i64) -> ProfiniteInt {
    let top = x.chain.top();
    let r = (x.top_residue() + modulo(m, top)) % top;
    from_residue(r as i64, top, &x.chain).expect("reduced residue is in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numtheory::factorize;
    use proptest::prelude::*;

    fn chain(levels: &[u64]) -> DivisorChain {
        DivisorChain::new(levels.to_vec()).unwrap()
    }

    #[test]
    fn q_embed_examples() {
        let c = chain(&[2, 4]);
        assert_eq!(q_embed(7, &c).digits(), &[1, 1]);
        assert_eq!(q_embed(0, &c).digits(), &[0, 0]);
        // -1 ≡ 3 (mod 4)
        assert_eq!(q_embed(-1, &c).digits(), &[1, 1]);
        assert_eq!(residue(&q_embed(7, &c), 2).unwrap(), 1);
        assert_eq!(residue(&q_embed(7, &c), 4).unwrap(), 3);
        assert_eq!(residue(&q_embed(7, &c), 1).unwrap(), 0);
    }

    #[test]
    fn from_residue_examples() {
        let c = chain(&[2, 6, 24]);
        assert_eq!(from_residue(11, 24, &c).unwrap().digits(), &[1, 2, 1]);
        assert_eq!(from_residue(0, 24, &c).unwrap().digits(), &[0, 0, 0]);
        assert_eq!(from_residue(23, 24, &c).unwrap().digits(), &[1, 2, 3]);
        assert!(from_residue(3, 12, &c).is_err());
        assert!(from_residue(24, 24, &c).is_err());
    }

    #[test]
    fn residue_needs_divisor() {
        let x = q_embed(5, &chain(&[2, 4]));
        assert_eq!(residue(&x, 3), Err(Error::NotADivisor { l: 3, top: 4 }));
    }

    #[test]
    fn arithmetic_examples() {
        let c = chain(&[2, 4, 8]);
        let q = |k| q_embed(k, &c);
        assert_eq!(zs_arith(ZsOp::Add, &q(3), Some(&q(5))).unwrap(), q(8));
        assert_eq!(zs_arith(ZsOp::Mul, &q(3), Some(&q(5))).unwrap(), q(15));
        assert_eq!(zs_arith(ZsOp::Add, &q(-1), Some(&q(1))).unwrap(), q(0));
        assert_eq!(zs_arith(ZsOp::Neg, &q(3), None).unwrap(), q(-3));
        let other = q_embed(1, &chain(&[2, 4]));
        assert!(zs_arith(ZsOp::Add, &q(1), Some(&other)).is_err());
    }

    #[test]
    fn beta_examples() {
        let c = chain(&[3, 9]);
        for k in -3..=3 {
            assert_eq!(beta_shift(&q_embed(k, &c), 1), q_embed(k + 1, &c));
        }
        let x = q_embed(5, &c);
        assert_eq!(beta_shift(&x, 9).digits(), x.digits());
        for l in [1, 3, 9] {
            assert_eq!(
                residue(&beta_shift(&x, 1), l).unwrap(),
                (residue(&x, l).unwrap() + 1) % l
            );
        }
    }

    #[test]
    fn level_residues_are_compatible() {
        let c = chain(&[2, 6, 24]);
        for r in 0..24 {
            let x = from_residue(r, 24, &c).unwrap();
            for n in 1..=3 {
                for m in 1..=n {
                    let lm = c.levels()[m - 1];
                    assert_eq!(x.level_residue(n) % lm, x.level_residue(m));
                }
            }
        }
    }

    #[test]
    fn crt_reconstruction() {
        // residue mod l is determined by residues mod its prime powers
        let c = chain(&[2, 6, 12, 24]);
        for r in 0..24 {
            let x = from_residue(r, 24, &c).unwrap();
            for l in (1..=24u64).filter(|l| 24 % l == 0) {
                let parts: Vec<(u64, u64)> = factorize(l)
                    .into_iter()
                    .map(|(p, e)| {
                        let m = p.pow(e);
                        (m, residue(&x, m).unwrap())
                    })
                    .collect();
                let rebuilt: Vec<u64> = (0..l)
                    .filter(|y| parts.iter().all(|&(m, a)| y % m == a))
                    .collect();
                assert_eq!(rebuilt, vec![residue(&x, l).unwrap()]);
            }
        }
    }

    #[test]
    fn dense_range_at_truncation() {
        for levels in [vec![2, 4, 8, 16, 48], vec![3, 6, 12, 24, 48], vec![2, 6, 18], vec![5, 10]] {
            let c = chain(&levels);
            let top = c.top();
            for r in 0..top {
                assert!((0..=top as i64).any(|x| q_embed(x, &c).top_residue() == r));
            }
        }
    }

    #[test]
    fn orbit_visits_every_residue_once() {
        let c = chain(&[2, 6, 12]);
        let mut x = ProfiniteInt::zero(&c);
        let mut seen = [false; 12];
        for _ in 0..12 {
            let r = x.top_residue() as usize;
            assert!(!seen[r]);
            seen[r] = true;
            x = beta_shift(&x, 1);
        }
        assert_eq!(x, ProfiniteInt::zero(&c));
    }

    #[test]
    fn serialization() {
        let x = from_residue(11, 24, &chain(&[2, 6, 24])).unwrap();
        let text = serde_json::to_string(&x).unwrap();
        assert_eq!(text, r#"{"chain":[2,6,24],"digits":[1,2,1]}"#);
        assert_eq!(serde_json::from_str::<ProfiniteInt>(&text).unwrap(), x);
        assert!(serde_json::from_str::<ProfiniteInt>(r#"{"chain":[2,6],"digits":[2,0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn q_is_ring_homomorphism(a in -500i64..500, b in -500i64..500) {
            let c = chain(&[2, 6, 12, 36]);
            let q = |k| q_embed(k, &c);
            prop_assert_eq!(zs_arith(ZsOp::Add, &q(a), Some(&q(b))).unwrap(), q(a + b));
            prop_assert_eq!(zs_arith(ZsOp::Mul, &q(a), Some(&q(b))).unwrap(), q(a * b));
        }

        #[test]
        fn residue_round_trip(r in 0i64..72) {
            let c = chain(&[2, 4, 12, 72]);
            let x = from_residue(r, 72, &c).unwrap();
            let back = from_residue(residue(&x, 72).unwrap() as i64, 72, &c).unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
