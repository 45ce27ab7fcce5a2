//! Seeded property batteries, one per identity, runnable from the CLI.
//!
//! Every suite draws its cases from a ChaCha8 stream keyed by the seed and
//! the suite's position in [`SUITES`], so a suite's output does not depend on
//! which other suites ran. Cases are checked in parallel; the reported
//! counterexample is the one with the lowest case index.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bd_algebra::{op_norm, op_norm_recursive, BDElement};
use crate::cyclotomic::{root_of_unity, Cyclo};
use crate::derivations::{der_apply, pick_character, recover_covariant_f, solve_cocycle, DerivationData};
use crate::error::{Error, Result};
use crate::homalg::{ext1_hom, smith_normal_form, FGAbelianGroup, IntMatrix};
use crate::k_invariants::{
    coboundary, consistency_gap, digit_phi, k0_class, kappa, phi_value, psi_construct, r_value, tau_rho,
    GSRational, PhiFn, RMode,
};
use crate::odometer_fn::{character, haar_integral, pullback, LocConstFn};
use crate::profinite::{q_embed, residue, DivisorChain};
use crate::supernatural::{Exponent, SupernaturalNumber};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// One tenth of the full sample counts; exhaustive batteries are unchanged.
    Small,
    #[default]
    Full,
}

impl Scale {
    fn count(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Small => full.div_ceil(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    /// The identity under test.
    pub checks: String,
    pub seed: u64,
    pub scale: Scale,
    pub cases_run: usize,
    pub cases_passed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub suites: Vec<VerifyReport>,
    /// Wall-clock time; kept out of the JSON so reports are reproducible.
    #[serde(skip)]
    pub duration: Duration,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.cases_passed == self.cases_run
    }
}

pub const SUITES: [&str; 10] = [
    "mnorm",
    "covariance",
    "cocycle",
    "covariant-roundtrip",
    "charpick",
    "consistency",
    "kernel-image",
    "rho-onto",
    "k0",
    "ext",
];

pub fn verify_suite(name: &str, seed: u64, scale: Scale) -> Result<VerifyReport> {
    let start = Instant::now();
    if name == "all" {
        let suites = SUITES
            .iter()
            .map(|s| verify_suite(s, seed, scale))
            .collect::<Result<Vec<_>>>()?;
        return Ok(VerifyReport {
            suite: "all".into(),
            checks: "every suite".into(),
            seed,
            scale,
            cases_run: suites.iter().map(|r| r.cases_run).sum(),
            cases_passed: suites.iter().map(|r| r.cases_passed).sum(),
            counterexample: suites
                .iter()
                .find_map(|r| r.counterexample.as_ref().map(|c| json!({"suite": r.suite, "case": c}))),
            suites,
            duration: start.elapsed(),
        });
    }
    let index = SUITES
        .iter()
        .position(|s| *s == name)
        .ok_or_else(|| Error::Invalid(format!("unknown suite {name:?}; expected one of {SUITES:?} or all")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let (checks, outcome) = match name {
        "mnorm" => mnorm(&mut rng, scale),
        "covariance" => covariance(&mut rng, scale),
        "cocycle" => cocycle(&mut rng, scale),
        "covariant-roundtrip" => covariant_roundtrip(&mut rng, scale),
        "charpick" => charpick(&mut rng, scale),
        "consistency" => consistency(&mut rng, scale),
        "kernel-image" => kernel_image(&mut rng, scale),
        "rho-onto" => rho_onto(),
        "k0" => k0(),
        "ext" => ext(&mut rng, scale),
        _ => unreachable!("name validated above"),
    };
    Ok(VerifyReport {
        suite: name.into(),
        checks: checks.into(),
        seed,
        scale,
        cases_run: outcome.run,
        cases_passed: outcome.passed,
        counterexample: outcome.counterexample,
        suites: Vec::new(),
        duration: start.elapsed(),
    })
}

struct Outcome {
    run: usize,
    passed: usize,
    counterexample: Option<Value>,
}

/// Checks all cases in parallel; `describe` is only called on the first failure.
fn run_cases<T: Sync>(cases: &[T], check: impl Fn(&T) -> bool + Sync, describe: impl Fn(&T) -> Value) -> Outcome {
    let failures: Vec<usize> = cases
        .par_iter()
        .enumerate()
        .filter(|(_, c)| !check(c))
        .map(|(i, _)| i)
        .collect();
    Outcome {
        run: cases.len(),
        passed: cases.len() - failures.len(),
        counterexample: failures.first().map(|&i| describe(&cases[i])),
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn s23() -> SupernaturalNumber {
    SupernaturalNumber::infinite(&[2, 3]).expect("primes")
}

const PERIODS_24: [u64; 8] = [1, 2, 3, 4, 6, 8, 12, 24];

fn random_value(rng: &mut ChaCha8Rng) -> Cyclo {
    match rng.gen_range(0..3) {
        0 => Cyclo::integer(rng.gen_range(-4..=4)),
        1 => Cyclo::ratio(rng.gen_range(-3..=3), rng.gen_range(1..4)),
        _ => {
            let n = *[2u64, 3, 4, 6, 12].choose(rng).expect("nonempty");
            let c = BigRational::from_integer(BigInt::from(rng.gen_range(-3..=3)));
            root_of_unity(rng.gen_range(0..12), n).scale(&c)
        }
    }
}

fn random_fn(rng: &mut ChaCha8Rng, periods: &[u64]) -> LocConstFn {
    let l = *periods.choose(rng).expect("nonempty");
    let values = (0..l).map(|_| random_value(rng)).collect();
    LocConstFn::new(l, values).expect("length matches")
}

fn random_element(rng: &mut ChaCha8Rng) -> BDElement {
    let s = s23();
    let l = *[1u64, 2, 3, 4, 6, 12].choose(rng).expect("nonempty");
    (0..rng.gen_range(1..4)).fold(BDElement::zero(&s), |acc, _| {
        let n = rng.gen_range(-3..=3);
        let f = random_fn(rng, &[l]);
        &acc + &BDElement::monomial(&s, n, &f).expect("l divides S")
    })
}

fn mean_zero(f: LocConstFn) -> LocConstFn {
    let c = haar_integral(&f);
    f.map(|v| v - &c)
}

fn mnorm(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    const GRID: u64 = 256;
    let cases: Vec<BDElement> = (0..scale.count(100)).map(|_| random_element(rng)).collect();
    let outcome = run_cases(
        &cases,
        |a| (0..=6).all(|m| op_norm(a, m, GRID).value.to_bits() == op_norm_recursive(a, m, GRID).value.to_bits()),
        |a| json!({"element": to_json(a), "grid": GRID}),
    );
    ("‖a‖_M by binomial weights equals the recursion ‖a‖_{M+1} = ‖a‖_M + ‖δ_L a‖_M, bit for bit, M ≤ 6", outcome)
}

fn covariance(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let s = s23();
    let cases: Vec<LocConstFn> = (0..scale.count(500)).map(|_| random_fn(rng, &PERIODS_24)).collect();
    let outcome = run_cases(
        &cases,
        |f| {
            let lhs = &BDElement::multiplication(&s, f).expect("period") * &BDElement::shift(&s, 1);
            let rhs = &BDElement::shift(&s, 1) * &BDElement::multiplication(&s, &pullback(f, 1)).expect("period");
            lhs == rhs
        },
        |f| json!({"f": to_json(f)}),
    );
    ("M_f U = U M_{f∘β}", outcome)
}

fn cocycle(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let cases: Vec<LocConstFn> = (0..scale.count(500))
        .map(|_| mean_zero(random_fn(rng, &PERIODS_24)))
        .collect();
    let outcome = run_cases(
        &cases,
        |ft| match solve_cocycle(ft) {
            Ok(g) => &pullback(&g, 1) - &g == *ft && haar_integral(&g).is_zero(),
            Err(_) => false,
        },
        |ft| json!({"Ft": to_json(ft)}),
    );
    ("G∘β − G = F̃ with ∫G = 0, via G = Σ c_k χ^k/(χ^k(q(1)) − 1)", outcome)
}

fn covariant_roundtrip(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let s = s23();
    let cases: Vec<(i64, LocConstFn)> = (0..scale.count(200))
        .map(|_| {
            let n = rng.gen_range(1..=6) * if rng.gen() { 1 } else { -1 };
            (n, random_fn(rng, &[1, 2, 3, 4, 6, 12]))
        })
        .collect();
    let outcome = run_cases(
        &cases,
        |(n, f)| {
            let run = || -> Result<bool> {
                let c = pick_character(*n, &s)?;
                let chi = BDElement::multiplication(&s, &character(c.l, c.j as i64))?;
                let delta = der_apply(&DerivationData::covariant_inner(*n, f.clone())?, &chi)?;
                Ok(recover_covariant_f(*n, c.l, c.j as i64, &delta)? == *f)
            };
            run().unwrap_or(false)
        },
        |(n, f)| json!({"n": n, "F": to_json(f)}),
    );
    ("F = (1 − χ(q(n)))^{-1} U^{-n} δ(M_χ) M_χ^{-1} for δ = [U^n M_F, ·]", outcome)
}

fn random_infinite_s(rng: &mut ChaCha8Rng) -> SupernaturalNumber {
    let primes = [2u64, 3, 5, 7];
    let forced = *primes.choose(rng).expect("nonempty");
    let factors = primes.iter().filter_map(|&p| {
        if p == forced {
            return Some((p, Exponent::Inf));
        }
        match rng.gen_range(0..4) {
            0 => None,
            1 => Some((p, Exponent::Inf)),
            _ => Some((p, Exponent::Finite(rng.gen_range(1..=3)))),
        }
    });
    let factors: Vec<_> = factors.collect();
    SupernaturalNumber::new(factors).expect("primes")
}

fn charpick(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let cases: Vec<(i64, SupernaturalNumber)> = (0..scale.count(200))
        .map(|_| {
            let n = rng.gen_range(1..=10_000) * if rng.gen() { 1 } else { -1 };
            (n, random_infinite_s(rng))
        })
        .collect();
    let outcome = run_cases(
        &cases,
        |(n, s)| match pick_character(*n, s) {
            Ok(c) => {
                let value = root_of_unity((c.j as i64 * n).rem_euclid(c.l as i64), c.l);
                let even_exact = c.h % 2 != 0 || value == Cyclo::integer(-1);
                c.bound >= 1.5 - 1e-12 && even_exact
            }
            Err(_) => false,
        },
        |(n, s)| json!({"n": n, "S": to_json(s)}),
    );
    ("|1 − χ(q(n))| ≥ 3/2, with χ(q(n)) = −1 exactly when h is even", outcome)
}

fn random_phi(rng: &mut ChaCha8Rng, chains: &[DivisorChain], bound: i64) -> PhiFn {
    let chain = chains.choose(rng).expect("nonempty").clone();
    let top = (0..chain.top()).map(|_| rng.gen_range(-bound..=bound)).collect();
    PhiFn::new(chain, top).expect("length matches")
}

fn phi_chains() -> Vec<DivisorChain> {
    [vec![2, 4, 8, 16], vec![2, 6, 12], vec![3, 9, 27]]
        .into_iter()
        .map(|l| DivisorChain::new(l).expect("valid chain"))
        .collect()
}

fn consistency(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let chains = phi_chains();
    let cases: Vec<PhiFn> = (0..scale.count(1000)).map(|_| random_phi(rng, &chains, 50)).collect();
    let outcome = run_cases(
        &cases,
        |phi| {
            let levels: Vec<u64> = std::iter::once(1).chain(phi.chain().levels().iter().copied()).collect();
            levels.iter().enumerate().all(|(i, &l)| {
                levels[i..].iter().all(|&lp| {
                    let r = |x| r_value(phi, 1, x, RMode::Def).expect("divides");
                    consistency_gap(phi, l, lp) == Ok(0) && (r(lp) - r(l)).rem_euclid(l as i64) == 0
                })
            })
        },
        |phi| json!({"phi": to_json(phi)}),
    );
    ("Rφ(1,l') − Rφ(1,l) = l·Rφ(l,l') and Rφ(1,l) ≡ Rφ(1,l') (mod l)", outcome)
}

fn kernel_image(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let chains = phi_chains();
    let cases: Vec<(PhiFn, PhiFn)> = (0..scale.count(1000))
        .map(|_| {
            let psi0 = random_phi(rng, &chains, 50);
            let other = random_phi(rng, &chains, 50);
            (psi0, other)
        })
        .collect();
    let outcome = run_cases(
        &cases,
        |(psi0, other)| {
            let phi = coboundary(psi0);
            let Ok(psi) = psi_construct(&phi) else {
                return false;
            };
            let r_identity = psi0.chain().levels().iter().all(|&l| {
                let lhs = r_value(&phi, 1, l, RMode::Def).expect("divides");
                let p = |l, k| phi_value(psi0, l, k).expect("divides");
                lhs == l as i64 * p(l, 0) - p(1, 0)
            });
            tau_rho(&phi).0 == 0 && coboundary(&psi) == phi && tau_rho(&coboundary(other)).0 == 0 && r_identity
        },
        |(psi0, other)| json!({"psi0": to_json(psi0), "phi": to_json(other)}),
    );
    ("(1 − β*)∘ψ = id on Ker τ, τ∘(1 − β*) = 0, Rφ(1,l) = lψ(l,0) − ψ(1,0)", outcome)
}

fn rho_onto() -> (&'static str, Outcome) {
    let cases: Vec<(DivisorChain, i64)> = [vec![2, 4, 8], vec![2, 6, 12], vec![3, 9, 27]]
        .into_iter()
        .flat_map(|levels| {
            let chain = DivisorChain::new(levels).expect("valid chain");
            (0..chain.top() as i64).map(move |x| (chain.clone(), x))
        })
        .collect();
    let outcome = run_cases(
        &cases,
        |(chain, x)| {
            let xi = q_embed(*x, chain);
            let phi = digit_phi(&xi);
            chain.levels().iter().all(|&l| {
                let r = r_value(&phi, 1, l, RMode::Lin).expect("divides");
                residue(&xi, l).is_ok_and(|res| r.rem_euclid(l as i64) as u64 == res)
            })
        },
        |(chain, x)| json!({"chain": to_json(chain), "x": x}),
    );
    ("R(digit_phi(x))(1, l_n) ≡ x (mod l_n) for every residue x", outcome)
}

enum K0Case {
    Class(u64, i64),
    Decomposition(u64, u64),
}

fn k0() -> (&'static str, Outcome) {
    let s = s23();
    let divisors: Vec<u64> = (1..=72u64).filter(|d| 72 % d == 0).collect();
    let mut cases = Vec::new();
    for &l in divisors.iter().filter(|&&l| l <= 12) {
        for j in 0..l as i64 {
            cases.push(K0Case::Class(l, j));
        }
    }
    for &l in &divisors {
        for &lp in divisors.iter().filter(|&&lp| lp % l == 0 && lp <= 36) {
            cases.push(K0Case::Decomposition(l, lp));
        }
    }
    let outcome = run_cases(
        &cases,
        |case| match *case {
            K0Case::Class(l, j) => kappa(&s, l, j)
                .and_then(|p| k0_class(&p))
                .is_ok_and(|c| Ok(c) == GSRational::new(1, l)),
            K0Case::Decomposition(l, lp) => {
                let run = || -> Result<bool> {
                    let parts: Vec<BDElement> = (0..lp / l)
                        .map(|b| kappa(&s, lp, (b * l) as i64))
                        .collect::<Result<_>>()?;
                    let sum = parts.iter().fold(BDElement::zero(&s), |acc, p| &acc + p);
                    let classes: GSRational = parts.iter().map(k0_class).collect::<Result<Vec<_>>>()?.into_iter().sum();
                    let coarse = kappa(&s, l, 0)?;
                    Ok(sum == coarse && classes == k0_class(&coarse)?)
                };
                run().unwrap_or(false)
            }
        },
        |case| match *case {
            K0Case::Class(l, j) => json!({"kappa": [l, j]}),
            K0Case::Decomposition(l, lp) => json!({"l": l, "l'": lp}),
        },
    );
    ("[κ_{l,j}] = 1/l and κ_{l,0} = Σ_b κ_{l',bl} with 1/l = (l'/l)(1/l')", outcome)
}

enum ExtCase {
    Cyclic(u64),
    Snf(IntMatrix),
}

fn ext(rng: &mut ChaCha8Rng, scale: Scale) -> (&'static str, Outcome) {
    let mut cases: Vec<ExtCase> = (2..=100).map(ExtCase::Cyclic).collect();
    for _ in 0..scale.count(500) {
        let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let entries: Vec<i64> = (0..r * c).map(|_| rng.gen_range(-20..=20)).collect();
        cases.push(ExtCase::Snf(IntMatrix::from_i64(r, c, &entries).expect("shape")));
    }
    let outcome = run_cases(
        &cases,
        |case| match case {
            ExtCase::Cyclic(n) => {
                let a = IntMatrix::from_i64(1, 1, &[*n as i64]).expect("shape");
                ext1_hom(&a).is_ok_and(|(hom, ext)| {
                    hom == FGAbelianGroup { rank: 0, torsion: vec![] } && ext == FGAbelianGroup { rank: 0, torsion: vec![*n] }
                })
            }
            ExtCase::Snf(a) => snf_certified(a),
        },
        |case| match case {
            ExtCase::Cyclic(n) => json!({"n": n}),
            ExtCase::Snf(a) => json!({"A": to_json(a)}),
        },
    );
    ("Ext¹(Z/nZ, Z) ≅ Z/nZ, and U·A·V = D with U, V unimodular and d_1 | d_2 | …", outcome)
}

/// `U·A·V = D`, `|det U| = |det V| = 1`, `D` diagonal with a divisibility chain.
pub fn snf_certified(a: &IntMatrix) -> bool {
    use num_traits::{One, Signed, Zero};
    let (u, d, v) = smith_normal_form(a);
    let Ok(product) = u.mul(a).and_then(|ua| ua.mul(&v)) else {
        return false;
    };
    let unimodular = |m: &IntMatrix| m.determinant().is_ok_and(|x| x.abs().is_one());
    let diagonal = (0..d.rows()).all(|i| (0..d.cols()).all(|j| i == j || d.get(i, j).is_zero()));
    let n = d.rows().min(d.cols());
    let chain = (0..n).all(|i| {
        let x = d.get(i, i);
        !x.is_negative()
            && (i + 1 == n || {
                let y = d.get(i + 1, i + 1);
                if x.is_zero() {
                    y.is_zero()
                } else {
                    (y % x).is_zero()
                }
            })
    });
    product == d && unimodular(&u) && unimodular(&v) && diagonal && chain
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_scale() {
        for name in SUITES {
            let r = verify_suite(name, 7, Scale::Small).unwrap();
            assert!(r.passed(), "{name}: {:?}", r.counterexample);
            assert!(r.cases_run > 0);
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let a = serde_json::to_string(&verify_suite("consistency", 7, Scale::Full).unwrap()).unwrap();
        let b = serde_json::to_string(&verify_suite("consistency", 7, Scale::Full).unwrap()).unwrap();
        assert_eq!(a, b);
        let r = verify_suite("consistency", 7, Scale::Full).unwrap();
        assert_eq!((r.cases_run, r.cases_passed), (1000, 1000));
        assert!(r.counterexample.is_none());
    }

    #[test]
    fn ext_covers_cyclic_groups() {
        let r = verify_suite("ext", 1, Scale::Small).unwrap();
        assert_eq!(r.cases_run, 99 + 50);
    }

    #[test]
    fn unknown_suite() {
        assert!(verify_suite("nope", 0, Scale::Small).is_err());
    }

    #[test]
    fn failing_cases_are_reported() {
        let cases = [1, 2, 3, 4];
        let o = run_cases(&cases, |&x| x % 2 == 1, |&x| json!(x));
        assert_eq!((o.run, o.passed, o.counterexample), (4, 2, Some(json!(2))));
    }
}
