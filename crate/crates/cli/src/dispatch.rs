//! Verb table: each verb deserializes its own argument struct (unknown
//! fields rejected) and returns a JSON value in the library formats.

use std::collections::BTreeMap;

use bdcalc::bd_algebra::{
    bd_adjoint, bd_mul, delta_l, fourier_coeff, matrix_symbol, op_norm, rho_theta, spectrum_sample, trace, BDElement,
};
use bdcalc::cyclotomic::{cyclo_arith, parse_rational, root_of_unity, Cyclo, CycloOp, CycloOperand};
use bdcalc::derivations::{
    der_apply, fourier_component, invariant_decompose, nonsmooth_commutator, pick_character, recover_covariant_f,
    solve_cocycle, DerivationData,
};
use bdcalc::homalg::{ext1_hom, smith_normal_form, IntMatrix};
use bdcalc::k_invariants::{
    coboundary, digit_phi, hom_obstruction, k0_class, kappa, phi_value, psi_construct, r_value, tau_rho, PhiFn, RMode,
};
use bdcalc::odometer_fn::{char_decompose, character, evaluate, haar_integral, pullback, LocConstFn};
use bdcalc::profinite::{beta_shift, from_residue, q_embed, residue, zs_arith, DivisorChain, ProfiniteInt, ZsOp};
use bdcalc::supernatural::{divisor_chain, sn_divides, sn_gcd_finite, sn_product, SupernaturalNumber};
use num_traits::ToPrimitive;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::Globals;
use crate::CliError;

const DEFAULT_GRID: u64 = 256;
const DEFAULT_DEPTH: u64 = 8;

fn parse<T: DeserializeOwned>(doc: &Value) -> Result<T, CliError> {
    serde_json::from_value(doc.clone()).map_err(|e| CliError::Usage(format!("arguments: {e}")))
}

fn out<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(x)?)
}

pub const VERBS: &[(&str, &[&str])] = &[
    ("sn", &["product", "divides", "gcd", "chain"]),
    ("zs", &["embed", "from-residue", "residue", "arith", "shift"]),
    ("cyclo", &["root", "arith", "is-zero", "eval"]),
    ("fn", &["character", "evaluate", "pullback", "haar", "decompose"]),
    ("bd", &["mul", "adjoint", "delta", "rho", "fourier", "symbol", "norm", "trace", "spectrum"]),
    ("der", &["apply", "component", "cocycle", "decompose", "recover", "pickchar", "nonsmooth"]),
    ("k", &["kappa", "k0", "homobs", "phi", "r", "taurho", "coboundary", "psi", "digitphi"]),
    ("homalg", &["snf", "ext"]),
];

pub fn run(group: &str, verb: &str, doc: &Value, g: &Globals) -> Result<Value, CliError> {
    match group {
        "sn" => sn(verb, doc, g),
        "zs" => zs(verb, doc),
        "cyclo" => cyclo(verb, doc),
        "fn" => func(verb, doc),
        "bd" => bd(verb, doc, g),
        "der" => der(verb, doc, g),
        "k" => k(verb, doc),
        "homalg" => homalg(verb, doc),
        _ => Err(CliError::Usage(format!("unknown group {group:?}"))),
    }
}

fn unknown(group: &str, verb: &str) -> CliError {
    let verbs = VERBS.iter().find(|(g, _)| *g == group).map(|(_, v)| v.join(", ")).unwrap_or_default();
    CliError::Usage(format!("unknown verb {group} {verb:?}; expected one of: {verbs}"))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Pair<A, B> {
    a: A,
    b: B,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WithS<T> {
    #[serde(rename = "S")]
    s: SupernaturalNumber,
    #[serde(flatten)]
    rest: T,
}

fn sn(verb: &str, doc: &Value, g: &Globals) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Divides {
        l: u64,
        #[serde(rename = "S")]
        s: SupernaturalNumber,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Gcd {
        n: u64,
        #[serde(rename = "S")]
        s: SupernaturalNumber,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Chain {
        #[serde(rename = "S")]
        s: SupernaturalNumber,
        depth: Option<usize>,
    }
    match verb {
        "product" => {
            let p: Pair<SupernaturalNumber, SupernaturalNumber> = parse(doc)?;
            out(&sn_product(&p.a, &p.b))
        }
        "divides" => {
            let a: Divides = parse(doc)?;
            out(&sn_divides(a.l, &a.s))
        }
        "gcd" => {
            let a: Gcd = parse(doc)?;
            out(&sn_gcd_finite(a.n, &a.s))
        }
        "chain" => {
            let a: Chain = parse(doc)?;
            let depth = a.depth.unwrap_or(g.depth.unwrap_or(DEFAULT_DEPTH) as usize);
            out(&divisor_chain(&a.s, depth)?)
        }
        _ => Err(unknown("sn", verb)),
    }
}

fn zs_op(name: &str) -> Result<ZsOp, CliError> {
    match name {
        "add" => Ok(ZsOp::Add),
        "neg" => Ok(ZsOp::Neg),
        "mul" => Ok(ZsOp::Mul),
        _ => Err(CliError::Usage(format!("unknown op {name:?}; expected add, neg or mul"))),
    }
}

fn zs(verb: &str, doc: &Value) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Embed {
        x: i64,
        chain: DivisorChain,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct FromResidue {
        r: i64,
        l: u64,
        chain: DivisorChain,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Residue {
        x: ProfiniteInt,
        l: u64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Arith {
        op: String,
        x: ProfiniteInt,
        y: Option<ProfiniteInt>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Shift {
        x: ProfiniteInt,
        m: i64,
    }
    match verb {
        "embed" => {
            let a: Embed = parse(doc)?;
            out(&q_embed(a.x, &a.chain))
        }
        "from-residue" => {
            let a: FromResidue = parse(doc)?;
            out(&from_residue(a.r, a.l, &a.chain)?)
        }
        "residue" => {
            let a: Residue = parse(doc)?;
            out(&residue(&a.x, a.l)?)
        }
        "arith" => {
            let a: Arith = parse(doc)?;
            out(&zs_arith(zs_op(&a.op)?, &a.x, a.y.as_ref())?)
        }
        "shift" => {
            let a: Shift = parse(doc)?;
            out(&beta_shift(&a.x, a.m))
        }
        _ => Err(unknown("zs", verb)),
    }
}

/// A cyclotomic value, a rational string such as `"-3/4"`, or an integer.
#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Text(String),
    Value(Cyclo),
}

impl Scalar {
    fn operand(self) -> Result<CycloOperand, CliError> {
        Ok(match self {
            Scalar::Int(n) => CycloOperand::Rational(parse_rational(&n.to_string())?),
            Scalar::Text(t) => CycloOperand::Rational(parse_rational(&t)?),
            Scalar::Value(v) => CycloOperand::Value(v),
        })
    }

    fn value(self) -> Result<Cyclo, CliError> {
        Ok(match self.operand()? {
            CycloOperand::Rational(q) => Cyclo::rational(q),
            CycloOperand::Value(v) => v,
        })
    }
}

fn complex_pair(z: num_complex::Complex64) -> Value {
    json!([z.re, z.im])
}

fn cyclo(verb: &str, doc: &Value) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Root {
        k: i64,
        #[serde(rename = "N")]
        n: u64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Arith {
        op: String,
        a: Scalar,
        b: Option<Scalar>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct One {
        a: Scalar,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Eval {
        a: Scalar,
        precision: Option<u32>,
    }
    match verb {
        "root" => {
            let a: Root = parse(doc)?;
            if a.n == 0 {
                return Err(CliError::Usage("N must be positive".into()));
            }
            out(&root_of_unity(a.k, a.n))
        }
        "arith" => {
            let a: Arith = parse(doc)?;
            let op = match a.op.as_str() {
                "add" => CycloOp::Add,
                "mul" => CycloOp::Mul,
                "conj" => CycloOp::Conj,
                "scale" => CycloOp::Scale,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown op {other:?}; expected add, mul, conj or scale"
                    )))
                }
            };
            let b = a.b.map(Scalar::operand).transpose()?;
            out(&cyclo_arith(op, &a.a.value()?, b.as_ref())?)
        }
        "is-zero" => {
            let a: One = parse(doc)?;
            out(&a.a.value()?.is_zero())
        }
        "eval" => {
            let a: Eval = parse(doc)?;
            Ok(complex_pair(a.a.value()?.eval_complex(a.precision.unwrap_or(53))))
        }
        _ => Err(unknown("cyclo", verb)),
    }
}

fn func(verb: &str, doc: &Value) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Character {
        l: u64,
        k: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Evaluate {
        f: LocConstFn,
        x: ProfiniteInt,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Pullback {
        f: LocConstFn,
        m: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct One {
        f: LocConstFn,
    }
    match verb {
        "character" => {
            let a: Character = parse(doc)?;
            if a.l == 0 {
                return Err(CliError::Usage("l must be positive".into()));
            }
            out(&character(a.l, a.k))
        }
        "evaluate" => {
            let a: Evaluate = parse(doc)?;
            out(&evaluate(&a.f, &a.x)?)
        }
        "pullback" => {
            let a: Pullback = parse(doc)?;
            out(&pullback(&a.f, a.m))
        }
        "haar" => {
            let a: One = parse(doc)?;
            out(&haar_integral(&a.f))
        }
        "decompose" => {
            let a: One = parse(doc)?;
            let map: BTreeMap<String, Cyclo> = char_decompose(&a.f)
                .into_iter()
                .map(|(k, c)| (k.to_string(), c))
                .collect();
            out(&map)
        }
        _ => Err(unknown("fn", verb)),
    }
}

fn bd(verb: &str, doc: &Value, g: &Globals) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct One {
        a: BDElement,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Rho {
        a: BDElement,
        theta: Scalar,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Fourier {
        a: BDElement,
        n: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Norm {
        a: BDElement,
        #[serde(rename = "M", default)]
        m: u32,
        grid: Option<u64>,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Spectrum {
        a: BDElement,
        grid: Option<u64>,
    }
    let grid = |x: Option<u64>| -> Result<u64, CliError> {
        match x.or(g.grid).unwrap_or(DEFAULT_GRID) {
            0 => Err(CliError::Usage("grid must be positive".into())),
            n => Ok(n),
        }
    };
    match verb {
        "mul" => {
            let p: Pair<BDElement, BDElement> = parse(doc)?;
            out(&bd_mul(&p.a, &p.b)?)
        }
        "adjoint" => out(&bd_adjoint(&parse::<One>(doc)?.a)),
        "delta" => out(&delta_l(&parse::<One>(doc)?.a)),
        "rho" => {
            let a: Rho = parse(doc)?;
            let q = match a.theta.operand()? {
                CycloOperand::Rational(q) => q,
                CycloOperand::Value(_) => return Err(CliError::Usage("theta must be a rational p/q".into())),
            };
            let (Some(p), Some(d)) = (q.numer().to_i64(), q.denom().to_i64()) else {
                return Err(CliError::Usage("theta out of range".into()));
            };
            out(&rho_theta(&a.a, p, d)?)
        }
        "fourier" => {
            let a: Fourier = parse(doc)?;
            out(&fourier_coeff(&a.a, a.n))
        }
        "symbol" => out(&matrix_symbol(&parse::<One>(doc)?.a)),
        "norm" => {
            let a: Norm = parse(doc)?;
            out(&op_norm(&a.a, a.m, grid(a.grid)?))
        }
        "trace" => out(&trace(&parse::<One>(doc)?.a)),
        "spectrum" => {
            let a: Spectrum = parse(doc)?;
            let points = spectrum_sample(&a.a, grid(a.grid)?);
            Ok(Value::Array(points.into_iter().map(complex_pair).collect()))
        }
        _ => Err(unknown("bd", verb)),
    }
}

fn der(verb: &str, doc: &Value, g: &Globals) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Apply {
        d: DerivationData,
        b: BDElement,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Component {
        d: DerivationData,
        n: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Cocycle {
        #[serde(rename = "Ft")]
        ft: LocConstFn,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Decompose {
        #[serde(rename = "F")]
        f: LocConstFn,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    #[serde(rename_all = "camelCase")]
    struct Recover {
        n: i64,
        l: u64,
        k: i64,
        delta_of_chi: BDElement,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PickChar {
        n: i64,
        #[serde(rename = "S")]
        s: SupernaturalNumber,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Nonsmooth {
        #[serde(rename = "S")]
        s: SupernaturalNumber,
        #[serde(rename = "chainDepth")]
        chain_depth: Option<usize>,
        #[serde(rename = "N")]
        n: usize,
        l: u64,
        k: i64,
    }
    match verb {
        "apply" => {
            let a: Apply = parse(doc)?;
            out(&der_apply(&a.d, &a.b)?)
        }
        "component" => {
            let a: Component = parse(doc)?;
            out(&fourier_component(&a.d, a.n))
        }
        "cocycle" => out(&solve_cocycle(&parse::<Cocycle>(doc)?.ft)?),
        "decompose" => {
            let (c, gf) = invariant_decompose(&parse::<Decompose>(doc)?.f);
            let d = DerivationData::new(c, gf, BTreeMap::new())?;
            let v = out(&d)?;
            Ok(json!({"C": v["C"], "G": v["G"]}))
        }
        "recover" => {
            let a: Recover = parse(doc)?;
            out(&recover_covariant_f(a.n, a.l, a.k, &a.delta_of_chi)?)
        }
        "pickchar" => {
            let a: PickChar = parse(doc)?;
            out(&pick_character(a.n, &a.s)?)
        }
        "nonsmooth" => {
            let a: Nonsmooth = parse(doc)?;
            let depth = a
                .chain_depth
                .unwrap_or_else(|| (g.depth.unwrap_or(DEFAULT_DEPTH) as usize).max(a.n));
            let laurent = nonsmooth_commutator(&a.s, depth, a.n, a.l, a.k)?;
            out(&laurent)
        }
        _ => Err(unknown("der", verb)),
    }
}

fn k(verb: &str, doc: &Value) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Kappa {
        l: u64,
        j: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct K0 {
        p: BDElement,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct HomObs {
        l: u64,
        a: i64,
        chain: DivisorChain,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct PhiAt {
        phi: PhiFn,
        l: u64,
        k: i64,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct R {
        phi: PhiFn,
        l: u64,
        lp: u64,
        #[serde(default = "def_mode")]
        mode: RMode,
    }
    fn def_mode() -> RMode {
        RMode::Def
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Phi {
        phi: PhiFn,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Psi {
        psi: PhiFn,
    }
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Digits {
        x: ProfiniteInt,
    }
    match verb {
        "kappa" => {
            let a: WithS<Kappa> = parse(doc)?;
            out(&kappa(&a.s, a.rest.l, a.rest.j)?)
        }
        "k0" => out(&k0_class(&parse::<K0>(doc)?.p)?),
        "homobs" => {
            let a: HomObs = parse(doc)?;
            out(&hom_obstruction(a.l, a.a, &a.chain)?)
        }
        "phi" => {
            let a: PhiAt = parse(doc)?;
            out(&phi_value(&a.phi, a.l, a.k)?)
        }
        "r" => {
            let a: R = parse(doc)?;
            out(&r_value(&a.phi, a.l, a.lp, a.mode)?)
        }
        "taurho" => {
            let (tau, rho) = tau_rho(&parse::<Phi>(doc)?.phi);
            Ok(json!({"tau": tau, "rho": out(&rho)?}))
        }
        "coboundary" => out(&coboundary(&parse::<Psi>(doc)?.psi)),
        "psi" => out(&psi_construct(&parse::<Phi>(doc)?.phi)?),
        "digitphi" => out(&digit_phi(&parse::<Digits>(doc)?.x)),
        _ => Err(unknown("k", verb)),
    }
}

fn homalg(verb: &str, doc: &Value) -> Result<Value, CliError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Matrix {
        #[serde(rename = "A")]
        a: IntMatrix,
    }
    let a = parse::<Matrix>(doc)?.a;
    match verb {
        "snf" => {
            let (u, d, v) = smith_normal_form(&a);
            Ok(json!({"U": out(&u)?, "D": out(&d)?, "V": out(&v)?}))
        }
        "ext" => {
            let (hom, ext) = ext1_hom(&a)?;
            Ok(json!({"hom": out(&hom)?, "ext": out(&ext)?}))
        }
        _ => Err(unknown("homalg", verb)),
    }
}
