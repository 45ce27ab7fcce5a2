//! Laurent polynomials in one variable `z` with cyclotomic coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::Cyclo;

#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Laurent {
    terms: BTreeMap<i64, Cyclo>,
}

impl Laurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(c: Cyclo, degree: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(degree, c);
        }
        Self { terms }
    }

    pub fn constant(c: Cyclo) -> Self {
        Self::monomial(c, 0)
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Cyclo)>>(terms: I) -> Self {
        let mut out = Self::zero();
        for (d, c) in terms {
            out.add_term(d, &c);
        }
        out
    }

    pub fn add_term(&mut self, degree: i64, c: &Cyclo) {
        let sum = match self.terms.get(&degree) {
            Some(old) => old + c,
            None => c.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&degree);
        } else {
            self.terms.insert(degree, sum);
        }
    }

    pub fn terms(&self) -> &BTreeMap<i64, Cyclo> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, degree: i64) -> Cyclo {
        self.terms.get(&degree).cloned().unwrap_or_else(Cyclo::zero)
    }

    /// The adjoint on the unit circle: conjugate coefficients and `z ↦ z^{-1}`.
    pub fn star(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(&d, c)| (-d, c.conj())).collect(),
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&d, c)| c.eval_complex(53) * z.powi(d as i32))
            .sum()
    }
}

impl fmt::Debug for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(d, c)| format!("({c})z^{d}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<'b> Add<&'b Laurent> for &Laurent {
    type Output = Laurent;
    fn add(self, rhs: &'b Laurent) -> Laurent {
        let mut out = self.clone();
        for (&d, c) in &rhs.terms {
            out.add_term(d, c);
        }
        out
    }
}

impl Neg for &Laurent {
    type Output = Laurent;
    fn neg(self) -> Laurent {
        Laurent {
            terms: self.terms.iter().map(|(&d, c)| (d, -c)).collect(),
        }
    }
}

impl<'b> Sub<&'b Laurent> for &Laurent {
    type Output = Laurent;
    fn sub(self, rhs: &'b Laurent) -> Laurent {
        self + &(-rhs)
    }
}

impl<'b> Mul<&'b Laurent> for &Laurent {
    type Output = Laurent;
    fn mul(self, rhs: &'b Laurent) -> Laurent {
        let mut out = Laurent::zero();
        for (&d1, c1) in &self.terms {
            for (&d2, c2) in &rhs.terms {
                out.add_term(d1 + d2, &(c1 * c2));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclotomic::root_of_unity;

    #[test]
    fn arithmetic() {
        let z = Laurent::monomial(Cyclo::one(), 1);
        let zinv = Laurent::monomial(Cyclo::one(), -1);
        assert_eq!(&z * &zinv, Laurent::constant(Cyclo::one()));
        let p = &z + &Laurent::constant(root_of_unity(1, 4));
        assert_eq!(p.star(), &zinv + &Laurent::constant(root_of_unity(3, 4)));
        assert!((&p - &p).is_zero());
        let v = p.eval(Complex64::new(0.0, 1.0));
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }
}
