//! Derivations of the smooth Bunce-Deddens algebra, carried by their
//! classification data.
//!
//! A derivation is stored as `(C, G, {F_n})` and acts as
//! `δ = C·δ_L + [M_G, ·] + Σ_{n≠0} [U^n M_{F_n}, ·]`. The pair `(C, G)` is
//! the invariant (0-th Fourier) component; `F_n` is the n-covariant one.
//! `G` is normalized to Haar mean zero, which makes the data unique.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bd_algebra::{delta_l, fourier_coeff, BDElement};
use crate::cyclotomic::{parse_rational, rational_to_string, root_of_unity, Cyclo};
use crate::error::{Error, Result};
use crate::laurent::Laurent;
use crate::numtheory::{ext_gcd, modulo};
use crate::odometer_fn::{char_decompose, char_synthesize, haar_integral, LocConstFn};
use crate::supernatural::{divisor_chain, sn_divides, sn_gcd_finite, SupernaturalNumber};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationData {
    c: Cyclo,
    g: LocConstFn,
    covariant: BTreeMap<i64, LocConstFn>,
}

impl DerivationData {
    pub fn new(c: Cyclo, g: LocConstFn, covariant: BTreeMap<i64, LocConstFn>) -> Result<Self> {
        if !haar_integral(&g).is_zero() {
            return Err(Error::Invalid("G must have Haar mean zero".into()));
        }
        if covariant.contains_key(&0) {
            return Err(Error::Invalid("covariant components are indexed by n != 0".into()));
        }
        let covariant = covariant.into_iter().filter(|(_, f)| !f.is_zero()).collect();
        Ok(Self { c, g, covariant })
    }

    pub fn zero() -> Self {
        Self {
            c: Cyclo::zero(),
            g: LocConstFn::zero(1),
            covariant: BTreeMap::new(),
        }
    }

    /// `c·δ_L`.
    pub fn label(c: Cyclo) -> Self {
        Self {
            c,
            ..Self::zero()
        }
    }

    /// `[U^n M_F, ·]` for `n ≠ 0`.
    pub fn covariant_inner(n: i64, f: LocConstFn) -> Result<Self> {
        Self::new(Cyclo::zero(), LocConstFn::zero(1), BTreeMap::from([(n, f)]))
    }

    pub fn c(&self) -> &Cyclo {
        &self.c
    }

    pub fn g(&self) -> &LocConstFn {
        &self.g
    }

    pub fn covariant(&self) -> &BTreeMap<i64, LocConstFn> {
        &self.covariant
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_zero() && self.g.is_zero() && self.covariant.is_empty()
    }
}

fn commutator(x: &BDElement, b: &BDElement) -> Result<BDElement> {
    Ok(&x.try_mul(b)? - &b.try_mul(x)?)
}

pub fn der_apply(d: &DerivationData, b: &BDElement) -> Result<BDElement> {
    let s = b.ambient();
    let mut out = delta_l(b).scale(&d.c);
    if !d.g.is_zero() {
        out = &out + &commutator(&BDElement::multiplication(s, &d.g)?, b)?;
    }
    for (&n, f) in &d.covariant {
        out = &out + &commutator(&BDElement::monomial(s, n, f)?, b)?;
    }
    Ok(out)
}

/// Projection onto the n-th Fourier component.
pub fn fourier_component(d: &DerivationData, n: i64) -> DerivationData {
    if n == 0 {
        return DerivationData {
            c: d.c.clone(),
            g: d.g.clone(),
            covariant: BTreeMap::new(),
        };
    }
    match d.covariant.get(&n) {
        Some(f) => DerivationData {
            c: Cyclo::zero(),
            g: LocConstFn::zero(1),
            covariant: BTreeMap::from([(n, f.clone())]),
        },
        None => DerivationData::zero(),
    }
}

/// Solves `G∘β − G = F̃` with `∫G = 0` through the character expansion:
/// the coefficient of `χ_l^k` is divided by `ζ_l^k − 1`.
pub fn solve_cocycle(ft: &LocConstFn) -> Result<LocConstFn> {
    let l = ft.period();
    let mut coeffs = char_decompose(ft);
    if coeffs.remove(&0).is_some() {
        return Err(Error::NonzeroMean);
    }
    let solved: BTreeMap<u64, Cyclo> = coeffs
        .into_iter()
        .map(|(k, c)| {
            let denom = &root_of_unity(k as i64, l) - &Cyclo::one();
            let inv = denom.inv().expect("ζ^k ≠ 1 for 0 < k < l");
            (k, &c * &inv)
        })
        .collect();
    Ok(char_synthesize(l, &solved))
}

/// Splits the invariant derivation `U ↦ U·M_F` as `C·δ_L + [M_G, ·]`.
pub fn invariant_decompose(f: &LocConstFn) -> (Cyclo, LocConstFn) {
    let c = haar_integral(f);
    let centred = f.map(|v| v - &c);
    let g = solve_cocycle(&centred).expect("centred function has mean zero");
    (c, g)
}

/// Recovers `F` from `δ(M_χ)` for `δ = [U^n M_F, ·]`, `χ = χ_l^k`:
/// `M_F = (1 − χ(q(n)))^{-1} U^{-n} δ(M_χ) M_χ^{-1}`.
pub fn recover_covariant_f(n: i64, l: u64, k: i64, delta_of_chi: &BDElement) -> Result<LocConstFn> {
    let phase = modulo(n, l) * modulo(k, l) % l;
    if phase == 0 {
        return Err(Error::CharacterFixesShift { n });
    }
    let s = delta_of_chi.ambient();
    let chi_inv = BDElement::multiplication(s, &crate::odometer_fn::character(l, -k))?;
    let shifted = BDElement::shift(s, -n).try_mul(delta_of_chi)?.try_mul(&chi_inv)?;
    let factor = (&Cyclo::one() - &root_of_unity(phase as i64, l))
        .inv()
        .expect("phase is nontrivial");
    Ok(fourier_coeff(&shifted, 0).scale(&factor))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterChoice {
    pub l: u64,
    pub j: u64,
    /// The auxiliary divisor `h` with `l = gcd(n, S)·h`.
    pub h: u64,
    /// `|1 − χ_l^j(q(n))|`.
    pub bound: f64,
}

/// Picks `χ = χ_l^j` with `|1 − χ(q(n))|` bounded away from zero.
///
/// With `g = gcd(|n|, S)` and `n' = |n|/g`, take `h = 2` when `2g | S` and
/// otherwise the smallest odd `h ≥ 3` with `gh | S`. Then `l = gh`,
/// `p·n' + q·h = 1`, `γ = h/2` or `(h+1)/2`, and `j = pγ mod l`, so that
/// `χ(q(|n|)) = ζ_h^γ`: exactly `−1` for even `h`, and `|1 − ζ_h^γ| =
/// 2cos(π/2h) ≥ √3` for odd `h`.
pub fn pick_character(n: i64, s: &SupernaturalNumber) -> Result<CharacterChoice> {
    if n == 0 {
        return Err(Error::Invalid("n must be nonzero".into()));
    }
    if !s.is_infinite() {
        return Err(Error::NoAdmissibleCharacter(format!("{s} is finite")));
    }
    let abs_n = n.unsigned_abs();
    let g = sn_gcd_finite(abs_n, s);
    let n_prime = abs_n / g;
    let h = if sn_divides(2 * g, s) {
        2
    } else {
        s.primes()
            .into_iter()
            .filter(|&p| p % 2 == 1)
            .find(|&p| sn_divides(g * p, s))
            .ok_or_else(|| {
                Error::NoAdmissibleCharacter(format!("no h with {g}·h dividing {s}"))
            })?
    };
    let l = g * h;
    let (one, p, _) = ext_gcd(n_prime as i64, h as i64);
    debug_assert_eq!(one, 1, "n' and h are coprime");
    let gamma = if h % 2 == 0 { h / 2 } else { h.div_ceil(2) };
    let j = modulo(p * gamma as i64, l);
    // χ_l^j(q(n)) = ζ_l^{jn}; the sign of n only conjugates the value
    let value = root_of_unity(modulo(j as i64 * n, l) as i64, l);
    let bound = (&Cyclo::one() - &value).abs();
    Ok(CharacterChoice { l, j, h, bound })
}

/// `F(z) − F(ζ_l^k z)` for the truncation `F(z) = Σ_{n=0}^{N} z^{l_n}` along
/// the canonical chain of `S` (with `l_0 = 1`, coefficients all 1).
pub fn nonsmooth_commutator(
    s: &SupernaturalNumber,
    chain_depth: usize,
    n_terms: usize,
    l: u64,
    k: i64,
) -> Result<Laurent> {
    if !sn_divides(l, s) {
        return Err(Error::PeriodNotInS { period: l });
    }
    if n_terms > chain_depth {
        return Err(Error::Invalid(format!(
            "truncation {n_terms} exceeds the chain depth {chain_depth}"
        )));
    }
    let mut levels = vec![1u64];
    if n_terms > 0 {
        levels.extend(divisor_chain(s, chain_depth)?.into_iter().take(n_terms));
    }
    let k = modulo(k, l);
    let mut out = Laurent::zero();
    for ln in levels {
        let e = (k * (ln % l)) % l;
        let c = &Cyclo::one() - &root_of_unity(e as i64, l);
        out.add_term(ln as i64, &c);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Rational(String),
    Value(Cyclo),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDerivation {
    #[serde(rename = "C")]
    c: RawScalar,
    #[serde(rename = "G")]
    g: LocConstFn,
    covariant: BTreeMap<String, LocConstFn>,
}

impl Serialize for DerivationData {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let c = match self.c.as_rational() {
            Some(q) => RawScalar::Rational(rational_to_string(&q)),
            None => RawScalar::Value(self.c.clone()),
        };
        let mut ordered: Vec<_> = self.covariant.iter().collect();
        ordered.sort_by_key(|(n, _)| **n);
        use serde::ser::{SerializeMap, SerializeStruct};
        struct Cov<'a>(Vec<(&'a i64, &'a LocConstFn)>);
        impl Serialize for Cov<'_> {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                let mut m = ser.serialize_map(Some(self.0.len()))?;
                for (n, f) in &self.0 {
                    m.serialize_entry(&n.to_string(), f)?;
                }
                m.end()
            }
        }
        let mut st = ser.serialize_struct("DerivationData", 3)?;
        st.serialize_field("C", &c)?;
        st.serialize_field("G", &self.g)?;
        st.serialize_field("covariant", &Cov(ordered))?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for DerivationData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawDerivation::deserialize(d)?;
        let c = match raw.c {
            RawScalar::Rational(t) => Cyclo::rational(parse_rational(&t).map_err(D::Error::custom)?),
            RawScalar::Value(v) => v,
        };
        let mut covariant = BTreeMap::new();
        for (k, f) in raw.covariant {
            let n: i64 = k.parse().map_err(|_| D::Error::custom(format!("bad index {k:?}")))?;
            covariant.insert(n, f);
        }
        DerivationData::new(c, raw.g, covariant).map_err(D::Error::custom)
    }
}

impl Default for DerivationData {
    fn default() -> Self {
        Self::zero()
    }
}
