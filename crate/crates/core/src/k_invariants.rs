//! K-theory bookkeeping: κ projections, K₀ classes in `G_S`, the
//! homomorphism obstruction, and the Φ/R/τ/ρ/ψ machinery at finite depth.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bd_algebra::{bd_adjoint, trace, BDElement};
use crate::error::{Error, Result};
use crate::odometer_fn::LocConstFn;
use crate::profinite::{from_residue, DivisorChain, ProfiniteInt};
use crate::supernatural::{sn_divides, SupernaturalNumber};

/// An element `k/l` of `G_S ⊂ Q`, stored reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GSRational(Ratio<i64>);

impl GSRational {
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Invalid("zero denominator".into()));
        }
        Ok(Self(Ratio::new(num, den as i64)))
    }

    pub fn integer(n: i64) -> Self {
        Self(Ratio::from_integer(n))
    }

    pub fn num(&self) -> i64 {
        *self.0.numer()
    }

    pub fn den(&self) -> u64 {
        *self.0.denom() as u64
    }

    pub fn lies_in(&self, s: &SupernaturalNumber) -> bool {
        sn_divides(self.den(), s)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Display for GSRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num(), self.den())
    }
}

impl FromStr for GSRational {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a rational: {text:?}"));
        let (n, d) = match text.trim().split_once('/') {
            Some((n, d)) => (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => (text.trim().parse().map_err(|_| bad())?, 1u64),
        };
        Self::new(n, d)
    }
}

impl Serialize for GSRational {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GSRational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl Add for GSRational {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for GSRational {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for GSRational {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl std::iter::Sum for GSRational {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::integer(0), |a, b| a + b)
    }
}

/// `M_{κ_{l,j}}`, the indicator of the residue class `j mod l`.
pub fn kappa(s: &SupernaturalNumber, l: u64, j: i64) -> Result<BDElement> {
    BDElement::multiplication(s, &LocConstFn::indicator(l, j))
}

/// The K₀ class of a projection, read off through the trace.
pub fn k0_class(p: &BDElement) -> Result<GSRational> {
    if &p.try_mul(p)? != p {
        return Err(Error::NotAProjection("p·p ≠ p".into()));
    }
    if &bd_adjoint(p) != p {
        return Err(Error::NotAProjection("p* ≠ p".into()));
    }
    let t = trace(p)
        .as_rational()
        .ok_or_else(|| Error::NotAProjection("irrational trace".into()))?;
    let (num, den) = (t.numer().to_i64(), t.denom().to_u64());
    let (Some(num), Some(den)) = (num, den) else {
        return Err(Error::Invalid(format!("trace {t} out of range")));
    };
    let class = GSRational::new(num, den)?;
    debug_assert_eq!(p.period() % class.den(), 0);
    Ok(class)
}

/// First chain level `l_i` (with `l | l_i`) such that `(l_i/l) ∤ a`.
///
/// Any homomorphism `G_S → Z` sending `1/l` to `a` would need
/// `(l_i/l)·h(1/l_i) = a`, so such a level rules it out.
pub fn hom_obstruction(l: u64, a: i64, chain: &DivisorChain) -> Result<u64> {
    if a == 0 || l == 0 {
        return Err(Error::Invalid("l and a must be nonzero".into()));
    }
    chain
        .levels()
        .iter()
        .copied()
        .filter(|li| li % l == 0)
        .find(|li| a % (li / l) as i64 != 0)
        .ok_or(Error::NoWitness { l, a })
}

/// Convention for `Rφ(l, l')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RMode {
    /// `Σ_{a=1}^{l'/l − 1} Σ_{j=0}^{al−1} φ(l', j)`.
    Def,
    /// `Σ_{j=0}^{l'−2} (j+1) φ(l', j)`, defined for `l = 1`.
    Lin,
}

/// A compatible family `φ(l, k)` for `l | l_N`, determined by its top level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhiFn {
    chain: DivisorChain,
    top: Vec<i64>,
}

impl PhiFn {
    pub fn new(chain: DivisorChain, top: Vec<i64>) -> Result<Self> {
        if top.len() as u64 != chain.top() {
            return Err(Error::Invalid(format!(
                "top vector has length {}, expected {}",
                top.len(),
                chain.top()
            )));
        }
        Ok(Self { chain, top })
    }

    pub fn zero(chain: &DivisorChain) -> Self {
        Self {
            chain: chain.clone(),
            top: vec![0; chain.top() as usize],
        }
    }

    pub fn chain(&self) -> &DivisorChain {
        &self.chain
    }

    pub fn top(&self) -> &[i64] {
        &self.top
    }

    /// The level-`l` vector `(φ(l, 0), …, φ(l, l−1))`.
    pub fn level(&self, l: u64) -> Result<Vec<i64>> {
        let top = self.chain.top();
        if l == 0 || !top.is_multiple_of(l) {
            return Err(Error::NotADivisor { l, top });
        }
        let mut out = vec![0i64; l as usize];
        for (k, v) in self.top.iter().enumerate() {
            out[k % l as usize] += v;
        }
        Ok(out)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhi {
    chain: DivisorChain,
    top: Vec<i64>,
}

impl<'de> Deserialize<'de> for PhiFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPhi::deserialize(d)?;
        PhiFn::new(raw.chain, raw.top).map_err(serde::de::Error::custom)
    }
}

pub fn phi_value(phi: &PhiFn, l: u64, k: i64) -> Result<i64> {
    let level = phi.level(l)?;
    Ok(level[k.rem_euclid(l as i64) as usize])
}

pub fn r_value(phi: &PhiFn, l: u64, lp: u64, mode: RMode) -> Result<i64> {
    if l == 0 || !lp.is_multiple_of(l) {
        return Err(Error::NotADivisor { l, top: lp });
    }
    let level = phi.level(lp)?;
    match mode {
        RMode::Def => {
            let mut prefix = vec![0i64; lp as usize + 1];
            for (j, v) in level.iter().enumerate() {
                prefix[j + 1] = prefix[j] + v;
            }
            Ok((1..lp / l).map(|a| prefix[(a * l) as usize]).sum())
        }
        RMode::Lin => {
            if l != 1 {
                return Err(Error::Invalid("the linear form is defined for l = 1".into()));
            }
            Ok(level
                .iter()
                .take(lp.saturating_sub(1) as usize)
                .enumerate()
                .map(|(j, v)| (j as i64 + 1) * v)
                .sum())
        }
    }
}

/// `τ(φ) = φ(1, 0)` and `ρ(φ)` with residue `Rφ(1, l_i)` at every level.
pub fn tau_rho(phi: &PhiFn) -> (i64, ProfiniteInt) {
    let tau = phi.top.iter().sum();
    let top = phi.chain.top();
    let r = r_value(phi, 1, top, RMode::Def).expect("top level divides itself");
    let rho = from_residue(r.rem_euclid(top as i64), top, &phi.chain).expect("reduced residue");
    debug_assert!(phi.chain.levels().iter().all(|&l| {
        r_value(phi, 1, l, RMode::Def).unwrap().rem_euclid(l as i64) as u64 == rho.top_residue() % l
    }));
    (tau, rho)
}

/// `(1 − β*)ψ`, i.e. `φ(l, k) = ψ(l, k) − ψ(l, k+1)`.
pub fn coboundary(psi: &PhiFn) -> PhiFn {
    let n = psi.top.len();
    let top = (0..n).map(|k| psi.top[k] - psi.top[(k + 1) % n]).collect();
    PhiFn {
        chain: psi.chain.clone(),
        top,
    }
}

/// Solves `(1 − β*)ψ = φ` for `τ(φ) = 0`, normalized by `ψ(1,0) = −Rφ(1, l_N)`.
pub fn psi_construct(phi: &PhiFn) -> Result<PhiFn> {
    let (tau, _) = tau_rho(phi);
    if tau != 0 {
        return Err(Error::NonzeroTau(tau));
    }
    let top_level = phi.chain.top();
    let psi_10 = -r_value(phi, 1, top_level, RMode::Def)?;
    let level_zero = |l: u64| -> Result<i64> {
        let numer = r_value(phi, 1, l, RMode::Def)? + psi_10;
        if numer % l as i64 != 0 {
            return Err(Error::Invalid(format!("R(1,{l}) + ψ(1,0) = {numer} is not divisible by {l}")));
        }
        Ok(numer / l as i64)
    };
    let mut top = Vec::with_capacity(top_level as usize);
    let mut acc = level_zero(top_level)?;
    for v in &phi.top {
        top.push(acc);
        acc -= v;
    }
    let psi = PhiFn {
        chain: phi.chain.clone(),
        top,
    };
    for &l in phi.chain.levels() {
        if phi_value(&psi, l, 0)? != level_zero(l)? {
            return Err(Error::Invalid(format!("ψ({l}, 0) is inconsistent")));
        }
    }
    Ok(psi)
}

/// The surjectivity certificate: a `φ` with `Rφ(1, l_n, lin) ≡ x (mod l_n)`.
pub fn digit_phi(x: &ProfiniteInt) -> PhiFn {
    let chain = x.chain();
    let digits = x.digits();
    let mut top = vec![0i64; chain.top() as usize];
    top[0] = digits.first().map_or(0, |&a| a as i64) - digits.iter().skip(1).map(|&a| a as i64).sum::<i64>();
    for (k, &lk) in chain.levels().iter().enumerate().take(digits.len().saturating_sub(1)) {
        top[lk as usize] += digits[k + 1] as i64;
    }
    PhiFn {
        chain: chain.clone(),
        top,
    }
}

/// `Rφ(1,l') − Rφ(1,l) = l·Rφ(l,l')`; exposed for the verification suites.
pub fn consistency_gap(phi: &PhiFn, l: u64, lp: u64) -> Result<i64> {
    let lhs = r_value(phi, 1, lp, RMode::Def)? - r_value(phi, 1, l, RMode::Def)?;
    Ok(lhs - l as i64 * r_value(phi, l, lp, RMode::Def)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bd_algebra::tests::s23;
    use crate::profinite::{q_embed, residue};
    use proptest::prelude::*;

    fn chain(levels: &[u64]) -> DivisorChain {
        DivisorChain::new(levels.to_vec()).unwrap()
    }

    fn phi(levels: &[u64], top: &[i64]) -> PhiFn {
        PhiFn::new(chain(levels), top.to_vec()).unwrap()
    }

    #[test]
    fn kappa_examples() {
        let s = s23();
        assert_eq!(kappa(&s, 1, 0).unwrap(), BDElement::identity(&s));
        let sum = &kappa(&s, 4, 0).unwrap() + &kappa(&s, 4, 2).unwrap();
        assert_eq!(kappa(&s, 2, 0).unwrap(), sum);
        assert!((&kappa(&s, 4, 1).unwrap() * &kappa(&s, 4, 2).unwrap()).is_zero());
        let k = kappa(&s, 6, 5).unwrap();
        assert_eq!(&k * &k, k);
        assert_eq!(bd_adjoint(&k), k);
        assert!(kappa(&s, 5, 0).is_err());
    }

    #[test]
    fn k0_examples() {
        let s = s23();
        for l in (1..=12).filter(|&l| sn_divides(l, &s)) {
            for j in 0..l as i64 {
                assert_eq!(k0_class(&kappa(&s, l, j).unwrap()).unwrap(), GSRational::new(1, l).unwrap());
            }
        }
        assert_eq!(k0_class(&BDElement::identity(&s)).unwrap(), GSRational::integer(1));
        assert!(matches!(k0_class(&BDElement::shift(&s, 1)), Err(Error::NotAProjection(_))));
        let p = &kappa(&s, 4, 1).unwrap() + &kappa(&s, 6, 0).unwrap();
        assert_eq!(k0_class(&p).unwrap(), GSRational::new(5, 12).unwrap());
    }

    #[test]
    fn k0_pushforward() {
        let s = s23();
        for (l, lp) in [(1, 2), (2, 4), (2, 12), (3, 18), (6, 72)] {
            let coarse = k0_class(&kappa(&s, l, 0).unwrap()).unwrap();
            let fine: GSRational = (0..lp / l)
                .map(|j| k0_class(&kappa(&s, lp, (j * l) as i64).unwrap()).unwrap())
                .sum();
            assert_eq!(coarse, fine);
        }
    }

    #[test]
    fn gs_rational_text() {
        let q: GSRational = "6/8".parse().unwrap();
        assert_eq!((q.num(), q.den()), (3, 4));
        assert_eq!(serde_json::to_string(&q).unwrap(), r#""3/4""#);
        assert_eq!("5".parse::<GSRational>().unwrap().to_string(), "5/1");
        assert!(q.lies_in(&s23()));
        assert!(!GSRational::new(1, 5).unwrap().lies_in(&s23()));
        assert!("1/0".parse::<GSRational>().is_err());
    }

    #[test]
    fn hom_obstruction_examples() {
        let c = chain(&[2, 4, 8, 16]);
        assert_eq!(hom_obstruction(1, 4, &c).unwrap(), 8);
        assert_eq!(hom_obstruction(1, 1, &c).unwrap(), 2);
        // ratios 1, 2, 4: the first one not dividing 6 is 4, at level 8
        assert_eq!(hom_obstruction(2, 6, &chain(&[2, 4, 8, 16, 32])).unwrap(), 8);
        assert_eq!(hom_obstruction(1, 16, &c), Err(Error::NoWitness { l: 1, a: 16 }));
        assert_eq!(hom_obstruction(3, 1, &c), Err(Error::NoWitness { l: 3, a: 1 }));
        assert_eq!(hom_obstruction(3, -2, &chain(&[2, 12, 72])).unwrap(), 12);
        assert_eq!(hom_obstruction(3, 12, &chain(&[2, 12, 72])).unwrap(), 72);
    }

    #[test]
    fn phi_and_r_examples() {
        let p = phi(&[2, 4], &[1, 0, 2, 0]);
        assert_eq!(phi_value(&p, 2, 0).unwrap(), 3);
        assert_eq!(phi_value(&p, 1, 0).unwrap(), 3);
        assert_eq!(phi_value(&p, 4, 3).unwrap(), 0);
        assert!(phi_value(&p, 3, 0).is_err());
        assert_eq!(r_value(&p, 1, 4, RMode::Def).unwrap(), 5);
        assert_eq!(r_value(&p, 1, 2, RMode::Def).unwrap(), 3);
        assert_eq!(r_value(&p, 2, 4, RMode::Def).unwrap(), 1);
        assert_eq!(r_value(&p, 4, 4, RMode::Def).unwrap(), 0);
        assert_eq!(r_value(&p, 1, 4, RMode::Lin).unwrap(), 7);
        assert_eq!((7i64 + 5).rem_euclid(4), 0);
        assert!(r_value(&p, 2, 4, RMode::Lin).is_err());
        assert!(r_value(&p, 4, 2, RMode::Def).is_err());
    }

    #[test]
    fn tau_rho_examples() {
        let (tau, rho) = tau_rho(&phi(&[2, 4], &[1, 0, 2, 0]));
        assert_eq!(tau, 3);
        assert_eq!((residue(&rho, 2).unwrap(), residue(&rho, 4).unwrap()), (1, 1));
        let (tau, rho) = tau_rho(&PhiFn::zero(&chain(&[2, 4])));
        assert_eq!((tau, rho), (0, ProfiniteInt::zero(&chain(&[2, 4]))));
    }

    #[test]
    fn coboundary_and_psi_examples() {
        let psi = phi(&[2, 4], &[0, -1, 0, -2]);
        let f = coboundary(&psi);
        assert_eq!(f.top(), &[1, -1, 2, -2]);
        assert!(coboundary(&phi(&[2, 4], &[5, 5, 5, 5])).top().iter().all(|&v| v == 0));
        for l in [2, 4] {
            let lhs = r_value(&f, 1, l, RMode::Def).unwrap();
            assert_eq!(lhs, l as i64 * phi_value(&psi, l, 0).unwrap() - phi_value(&psi, 1, 0).unwrap());
        }
        let built = psi_construct(&f).unwrap();
        assert_eq!(built, psi);
        assert_eq!(phi_value(&built, 1, 0).unwrap(), -3);
        assert_eq!((phi_value(&built, 2, 0).unwrap(), phi_value(&built, 2, 1).unwrap()), (0, -3));
        assert_eq!(psi_construct(&PhiFn::zero(&chain(&[2, 4]))).unwrap(), PhiFn::zero(&chain(&[2, 4])));
        assert_eq!(psi_construct(&phi(&[2], &[1, 0])), Err(Error::NonzeroTau(1)));
    }

    #[test]
    fn digit_phi_examples() {
        let c = chain(&[2, 4, 8]);
        let p = digit_phi(&q_embed(3, &c));
        assert_eq!(p.top(), &[0, 0, 1, 0, 0, 0, 0, 0]);
        assert_eq!(r_value(&p, 1, 8, RMode::Lin).unwrap(), 3);
        assert!(digit_phi(&ProfiniteInt::zero(&c)).top().iter().all(|&v| v == 0));
        for x in 0..8 {
            let p = digit_phi(&q_embed(x, &c));
            for (n, &l) in c.levels().iter().enumerate() {
                let r = r_value(&p, 1, l, RMode::Lin).unwrap();
                assert_eq!(r.rem_euclid(l as i64), x % l as i64, "x={x} level {}", n + 1);
            }
        }
    }

    #[test]
    fn digit_phi_level_sums() {
        let c = chain(&[2, 12, 72]);
        let x = q_embed(61, &c);
        let p = digit_phi(&x);
        let a: Vec<i64> = x.digits().iter().map(|&d| d as i64).collect();
        assert_eq!(phi_value(&p, 2, 0).unwrap(), a[0]);
        assert_eq!(phi_value(&p, 12, 0).unwrap(), a[0] - a[1]);
        assert_eq!(phi_value(&p, 72, 0).unwrap(), a[0] - a[1] - a[2]);
        assert_eq!(phi_value(&p, 72, 2).unwrap(), a[1]);
        assert_eq!(phi_value(&p, 72, 12).unwrap(), a[2]);
    }

    #[test]
    fn compatibility_is_exhaustive() {
        for levels in [vec![2, 4, 8, 24], vec![2, 6, 12, 24], vec![3, 9], vec![2, 12]] {
            let c = chain(&levels);
            let n = c.top() as usize;
            let p = PhiFn::new(c.clone(), (0..n as i64).map(|k| (k * 7919) % 11 - 5).collect()).unwrap();
            let top = c.top();
            for lp in (1..=top).filter(|d| top.is_multiple_of(*d)) {
                for l in (1..=lp).filter(|d| lp % d == 0) {
                    for k in 0..l as i64 {
                        let sum: i64 = (0..(lp / l) as i64).map(|j| phi_value(&p, lp, k + j * l as i64).unwrap()).sum();
                        assert_eq!(phi_value(&p, l, k).unwrap(), sum);
                    }
                }
            }
        }
    }

    #[test]
    fn sign_bridge_brute_force() {
        for levels in [vec![2], vec![3], vec![2, 4], vec![5], vec![2, 6], vec![3, 6]] {
            let c = chain(&levels);
            let n = c.top() as u32;
            for code in 0..5i64.pow(n) {
                let top: Vec<i64> = (0..n).map(|i| (code / 5i64.pow(i)) % 5 - 2).collect();
                let p = PhiFn::new(c.clone(), top).unwrap();
                for &l in c.levels() {
                    let lin = r_value(&p, 1, l, RMode::Lin).unwrap();
                    let def = r_value(&p, 1, l, RMode::Def).unwrap();
                    assert_eq!((lin + def).rem_euclid(l as i64), 0);
                }
            }
        }
    }

    #[test]
    fn serialization() {
        let p = phi(&[2, 4], &[1, 0, 2, 0]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"chain":[2,4],"top":[1,0,2,0]}"#);
        assert_eq!(serde_json::from_str::<PhiFn>(&text).unwrap(), p);
        assert!(serde_json::from_str::<PhiFn>(r#"{"chain":[2,4],"top":[1]}"#).is_err());
        assert!(serde_json::from_str::<PhiFn>(r#"{"chain":[2],"top":[1,1],"x":1}"#).is_err());
    }

    fn arb_phi() -> impl Strategy<Value = PhiFn> {
        prop_oneof![Just(vec![2u64, 4, 8, 16]), Just(vec![2, 6, 12]), Just(vec![3, 9, 27])].prop_flat_map(|levels| {
            let n = *levels.last().unwrap() as usize;
            proptest::collection::vec(-50i64..=50, n)
                .prop_map(move |top| PhiFn::new(DivisorChain::new(levels.clone()).unwrap(), top).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn consistency_condition(p in arb_phi()) {
            let levels: Vec<u64> = std::iter::once(1).chain(p.chain().levels().iter().copied()).collect();
            for (i, &l) in levels.iter().enumerate() {
                for &lp in &levels[i..] {
                    prop_assert_eq!(consistency_gap(&p, l, lp).unwrap(), 0);
                    let (a, b) = (r_value(&p, 1, l, RMode::Def).unwrap(), r_value(&p, 1, lp, RMode::Def).unwrap());
                    prop_assert_eq!((b - a).rem_euclid(l as i64), 0);
                }
            }
        }

        #[test]
        fn kernel_equals_image(p in arb_phi(), shift in -20i64..=20) {
            let psi0 = PhiFn::new(p.chain().clone(), p.top().iter().map(|v| v + shift).collect()).unwrap();
            let phi = coboundary(&psi0);
            prop_assert_eq!(tau_rho(&phi).0, 0);
            let psi = psi_construct(&phi).unwrap();
            prop_assert_eq!(coboundary(&psi), phi);
            let diff: Vec<i64> = psi.top().iter().zip(psi0.top()).map(|(a, b)| a - b).collect();
            prop_assert!(diff.windows(2).all(|w| w[0] == w[1]));
            prop_assert_eq!(tau_rho(&coboundary(&p)).0, 0);
        }

        #[test]
        fn digit_phi_certifies_surjectivity(p in arb_phi(), x in 0i64..100_000) {
            let xi = q_embed(x, p.chain());
            let d = digit_phi(&xi);
            for &l in p.chain().levels() {
                prop_assert_eq!(r_value(&d, 1, l, RMode::Lin).unwrap().rem_euclid(l as i64) as u64, residue(&xi, l).unwrap());
            }
        }
    }
}
