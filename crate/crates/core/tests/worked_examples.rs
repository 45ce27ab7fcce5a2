//! Hand-checked values that cross module boundaries, through the public API only.

use std::collections::BTreeMap;

use bdcalc::bd_algebra::{bd_mul, delta_l, op_norm, trace, BDElement};
use bdcalc::cyclotomic::{root_of_unity, Cyclo};
use bdcalc::derivations::{
    der_apply, nonsmooth_commutator, pick_character, recover_covariant_f, solve_cocycle, DerivationData,
};
use bdcalc::homalg::{ext1_hom, smith_normal_form, FGAbelianGroup, IntMatrix};
use bdcalc::k_invariants::{
    coboundary, digit_phi, k0_class, kappa, psi_construct, r_value, tau_rho, GSRational, PhiFn, RMode,
};
use bdcalc::laurent::Laurent;
use bdcalc::odometer_fn::{character, evaluate, pullback, LocConstFn};
use bdcalc::profinite::{beta_shift, q_embed, residue, DivisorChain};
use bdcalc::supernatural::{divisor_chain, SupernaturalNumber};
use bdcalc::Error;

fn s2() -> SupernaturalNumber {
    SupernaturalNumber::infinite(&[2]).unwrap()
}

fn s23() -> SupernaturalNumber {
    SupernaturalNumber::infinite(&[2, 3]).unwrap()
}

fn chain(levels: &[u64]) -> DivisorChain {
    DivisorChain::new(levels.to_vec()).unwrap()
}

fn i() -> Cyclo {
    root_of_unity(1, 4)
}

#[test]
fn chain_feeds_odometer_and_characters() {
    let levels = divisor_chain(&s23(), 3).unwrap();
    assert_eq!(levels, vec![2, 12, 72]);
    let c = chain(&levels);
    let x = q_embed(-1, &c);
    assert_eq!(residue(&x, 72).unwrap(), 71);
    assert_eq!(residue(&beta_shift(&x, 1), 72).unwrap(), 0);
    // χ_4(q(1)) = i, and the character moves by its own value under β
    let chi = character(4, 1);
    let one = q_embed(1, &chain(&[2, 4, 8]));
    assert_eq!(evaluate(&chi, &one).unwrap(), i());
    assert_eq!(pullback(&chi, 1), chi.scale(&i()));
}

#[test]
fn crossed_product_relations() {
    let s = s23();
    let chi2 = BDElement::monomial(&s, 1, &character(2, 1)).unwrap();
    let minus_u2 = -&BDElement::shift(&s, 2);
    assert_eq!(bd_mul(&chi2, &chi2).unwrap(), minus_u2);
    assert_eq!(delta_l(&BDElement::shift(&s, 1)), BDElement::shift(&s, 1));
    let kappa41 = kappa(&s, 4, 1).unwrap();
    assert_eq!(trace(&kappa41), Cyclo::ratio(1, 4));
    // ‖U‖_M = 2^M
    for m in 0..5 {
        assert_eq!(op_norm(&BDElement::shift(&s, 1), m, 64).value, f64::from(1u32 << m));
    }
}

#[test]
fn invariant_and_covariant_derivations() {
    let s = s2();
    // Ft = χ_4 → G = χ_4/(i − 1)
    let g = solve_cocycle(&character(4, 1)).unwrap();
    assert_eq!(&pullback(&g, 1) - &g, character(4, 1));
    let inv = (&i() - &Cyclo::integer(1)).inv().unwrap();
    assert_eq!(g, character(4, 1).scale(&inv));

    // n = 2, χ = χ_4, F = χ_4
    let d = DerivationData::covariant_inner(2, character(4, 1)).unwrap();
    let m_chi = BDElement::multiplication(&s, &character(4, 1)).unwrap();
    let delta = der_apply(&d, &m_chi).unwrap();
    let expected = BDElement::monomial(&s, 2, &character(4, 2)).unwrap().scale(&Cyclo::integer(2));
    assert_eq!(delta, expected);
    assert_eq!(recover_covariant_f(2, 4, 1, &delta).unwrap(), character(4, 1));
    assert_eq!(recover_covariant_f(4, 4, 1, &delta), Err(Error::CharacterFixesShift { n: 4 }));

    let c = pick_character(2, &s23()).unwrap();
    assert_eq!((c.l, c.h, c.bound), (4, 2, 2.0));
}

#[test]
fn nonsmooth_series_truncation() {
    let got = nonsmooth_commutator(&s2(), 3, 3, 4, 1).unwrap();
    let one_minus_i = &Cyclo::integer(1) - &i();
    let expected = Laurent::from_terms([(1, one_minus_i), (2, Cyclo::integer(2))]);
    assert_eq!(got, expected);
    assert_eq!(
        nonsmooth_commutator(&s2(), 3, 3, 2, 1).unwrap(),
        Laurent::monomial(Cyclo::integer(2), 1)
    );
}

#[test]
fn k_theory_bookkeeping() {
    let s = s23();
    for (l, j) in [(1, 0), (4, 3), (12, 5)] {
        assert_eq!(k0_class(&kappa(&s, l, j).unwrap()).unwrap(), GSRational::new(1, l).unwrap());
    }
    assert!(matches!(k0_class(&BDElement::shift(&s, 1)), Err(Error::NotAProjection(_))));

    let phi = PhiFn::new(chain(&[2, 4]), vec![1, 0, 2, 0]).unwrap();
    assert_eq!(r_value(&phi, 1, 4, RMode::Def).unwrap(), 5);
    assert_eq!(r_value(&phi, 1, 4, RMode::Lin).unwrap(), 7);
    let (tau, rho) = tau_rho(&phi);
    assert_eq!(tau, 3);
    assert_eq!(residue(&rho, 4).unwrap(), 1);

    let psi0 = PhiFn::new(chain(&[2, 4]), vec![0, -1, 0, -2]).unwrap();
    let cob = coboundary(&psi0);
    assert_eq!(cob.top(), &[1, -1, 2, -2]);
    assert_eq!(coboundary(&psi_construct(&cob).unwrap()), cob);

    let d = digit_phi(&q_embed(3, &chain(&[2, 4, 8])));
    assert_eq!(d.top(), &[0, 0, 1, 0, 0, 0, 0, 0]);
}

#[test]
fn smith_form_and_ext() {
    let a = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]).unwrap();
    let (_, d, _) = smith_normal_form(&a);
    assert_eq!(d, IntMatrix::from_rows(&[vec![2, 0], vec![0, 4]]).unwrap());
    let (hom, ext) = ext1_hom(&IntMatrix::zeros(2, 2)).unwrap();
    assert_eq!(hom, FGAbelianGroup { rank: 2, torsion: vec![] });
    assert_eq!(ext, FGAbelianGroup { rank: 0, torsion: vec![] });
    let (_, ext) = ext1_hom(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]).unwrap()).unwrap();
    assert_eq!(ext.torsion, vec![6]);
}

#[test]
fn serialized_forms_reparse() {
    let s = s23();
    let mut coeffs = BTreeMap::new();
    coeffs.insert(-2, character(6, 5));
    coeffs.insert(1, LocConstFn::new(2, vec![Cyclo::ratio(-3, 7), root_of_unity(1, 8)]).unwrap());
    let b = BDElement::new(s, 6, coeffs).unwrap();
    let text = serde_json::to_string(&b).unwrap();
    assert_eq!(serde_json::from_str::<BDElement>(&text).unwrap(), b);

    let d = DerivationData::covariant_inner(-3, character(3, 1)).unwrap();
    let text = serde_json::to_string(&d).unwrap();
    assert_eq!(serde_json::from_str::<DerivationData>(&text).unwrap(), d);
}
