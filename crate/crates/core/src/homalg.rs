//! Smith normal form over `Z` and `Hom`/`Ext¹` into `Z` for finitely
//! generated Abelian groups given by a presentation matrix.
//!
//! Entries are arbitrary-precision: the unimodular transforms of even a
//! small matrix routinely leave the 64-bit range. In JSON an entry is a
//! number when it fits in `i64` and a decimal string otherwise.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawEntry {
    Small(i64),
    Big(String),
}

impl From<&BigInt> for RawEntry {
    fn from(x: &BigInt) -> Self {
        match x.to_i64() {
            Some(v) => RawEntry::Small(v),
            None => RawEntry::Big(x.to_string()),
        }
    }
}

impl TryFrom<RawEntry> for BigInt {
    type Error = Error;

    fn try_from(raw: RawEntry) -> Result<Self> {
        match raw {
            RawEntry::Small(v) => Ok(BigInt::from(v)),
            RawEntry::Big(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("not an integer: {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RawEntry>,
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        RawMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(RawEntry::from).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawMatrix::deserialize(d)?;
        let entries = raw
            .entries
            .into_iter()
            .map(BigInt::try_from)
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        IntMatrix::new(raw.rows, raw.cols, entries).map_err(D::Error::custom)
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "{} entries for a {rows}×{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&v| BigInt::from(v)).collect())
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Invalid("ragged rows".into()));
        }
        Self::from_i64(rows.len(), cols, &rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[BigInt]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.set(i, i, d.clone());
        }
        m
    }

    /// `[[a, 0], [0, b]]`.
    pub fn block_diagonal(a: &Self, b: &Self) -> Self {
        let mut m = Self::zeros(a.rows + b.rows, a.cols + b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                m.set(i, j, a.get(i, j).clone());
            }
        }
        for i in 0..b.rows {
            for j in 0..b.cols {
                m.set(a.rows + i, a.cols + j, b.get(i, j).clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    fn to_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| self.entries[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Invalid(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: BigInt = (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum();
                out.set(i, j, s);
            }
        }
        Ok(out)
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn determinant(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::Invalid("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a = self.to_rows();
        let mut negate = false;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                    Some(i) => {
                        a.swap(i, k);
                        negate = !negate;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i][j] = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        let det = a[n - 1][n - 1].clone();
        Ok(if negate { -det } else { det })
    }
}

/// Finitely generated Abelian group `Z^rank ⊕ ⊕ Z/d_i` with `d_1 | d_2 | …`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FGAbelianGroup {
    pub rank: usize,
    pub torsion: Vec<u64>,
}

impl FGAbelianGroup {
    /// Normalizes arbitrary cyclic orders to invariant factors; orders 0
    /// and 1 are dropped.
    pub fn from_cyclic(rank: usize, orders: &[u64]) -> Self {
        let diag: Vec<BigInt> = orders.iter().filter(|&&d| d > 1).map(|&d| BigInt::from(d)).collect();
        let n = diag.len();
        let (_, d, _) = smith_normal_form(&IntMatrix::diagonal(n, n, &diag));
        let torsion = (0..n)
            .filter_map(|i| d.get(i, i).to_u64())
            .filter(|&t| t > 1)
            .collect();
        Self { rank, torsion }
    }
}

/// Working state with the invariant `u·a·v = d`.
struct Snf {
    d: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
}

impl Snf {
    fn swap_rows(&mut self, i: usize, j: usize) {
        self.d.swap(i, j);
        self.u.swap(i, j);
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for row in self.d.iter_mut().chain(self.v.iter_mut()) {
            row.swap(i, j);
        }
    }

    /// row_i += c·row_j
    fn add_row(&mut self, i: usize, j: usize, c: &BigInt) {
        for m in [&mut self.d, &mut self.u] {
            let src = m[j].clone();
            for (x, y) in m[i].iter_mut().zip(&src) {
                *x += c * y;
            }
        }
    }

    /// col_i += c·col_j
    fn add_col(&mut self, i: usize, j: usize, c: &BigInt) {
        for m in [&mut self.d, &mut self.v] {
            for row in m.iter_mut() {
                let y = row[j].clone();
                row[i] += c * y;
            }
        }
    }

    fn negate_row(&mut self, i: usize) {
        for m in [&mut self.d, &mut self.u] {
            for x in m[i].iter_mut() {
                *x = -&*x;
            }
        }
    }
}

/// `q` with `|a − q·b| ≤ |b|/2`.
fn nearest_quotient(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_mod_floor(b);
    if BigInt::from(2) * &r > b.abs() {
        q + b.signum()
    } else {
        q
    }
}

fn from_rows(m: Vec<Vec<BigInt>>, rows: usize, cols: usize) -> IntMatrix {
    IntMatrix {
        rows,
        cols,
        entries: m.into_iter().flatten().collect(),
    }
}

/// Returns `(U, D, V)` with `U·A·V = D`, `U` and `V` unimodular and `D`
/// diagonal with nonnegative `d_1 | d_2 | …`.
///
/// Pivoting rule: at step `t` the pivot is the entry of least absolute value
/// in the remaining block, first in row-major order.
pub fn smith_normal_form(a: &IntMatrix) -> (IntMatrix, IntMatrix, IntMatrix) {
    let (rows, cols) = (a.rows, a.cols);
    let mut st = Snf {
        d: a.to_rows(),
        u: IntMatrix::identity(rows).to_rows(),
        v: IntMatrix::identity(cols).to_rows(),
    };
    if rows == 0 || cols == 0 {
        return (IntMatrix::identity(rows), IntMatrix::zeros(rows, cols), IntMatrix::identity(cols));
    }

    for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| !st.d[i][j].is_zero())
                .min_by(|&(i, j), &(k, l)| st.d[i][j].abs().cmp(&st.d[k][l].abs()));
            let Some((pi, pj)) = pivot else {
                break;
            };
            st.swap_rows(t, pi);
            st.swap_cols(t, pj);
            let p = st.d[t][t].clone();

            let mut clean = true;
            for i in t + 1..rows {
                let q = nearest_quotient(&st.d[i][t], &p);
                if !q.is_zero() {
                    st.add_row(i, t, &-q);
                }
                clean &= st.d[i][t].is_zero();
            }
            for j in t + 1..cols {
                let q = nearest_quotient(&st.d[t][j], &p);
                if !q.is_zero() {
                    st.add_col(j, t, &-q);
                }
                clean &= st.d[t][j].is_zero();
            }
            if !clean {
                continue;
            }
            // the pivot must divide the rest of the block
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !(&st.d[i][j] % &p).is_zero());
            match offender {
                Some((i, _)) => st.add_row(t, i, &BigInt::one()),
                None => break,
            }
        }
        if st.d[t][t].is_negative() {
            st.negate_row(t);
        }
    }

    (
        from_rows(st.u, rows, rows),
        from_rows(st.d, rows, cols),
        from_rows(st.v, cols, cols),
    )
}

/// `Hom(G, Z)` and `Ext¹(G, Z)` for `G = coker(A: Z^cols → Z^rows)`.
pub fn ext1_hom(a: &IntMatrix) -> Result<(FGAbelianGroup, FGAbelianGroup)> {
    let (_, d, _) = smith_normal_form(a);
    let diag: Vec<&BigInt> = (0..a.rows.min(a.cols)).map(|i| d.get(i, i)).collect();
    let rank = diag.iter().filter(|x| !x.is_zero()).count();
    let torsion = diag
        .into_iter()
        .filter(|x| **x >= BigInt::from(2))
        .map(|x| {
            x.to_u64()
                .ok_or_else(|| Error::Invalid(format!("elementary divisor {x} exceeds 64 bits")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        FGAbelianGroup {
            rank: a.rows - rank,
            torsion: Vec::new(),
        },
        FGAbelianGroup { rank: 0, torsion },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows).unwrap()
    }

    fn int(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn check(a: &IntMatrix) -> IntMatrix {
        let (u, d, v) = smith_normal_form(a);
        assert_eq!(u.mul(a).unwrap().mul(&v).unwrap(), d, "U·A·V ≠ D for {a:?}");
        assert_eq!(u.determinant().unwrap().abs(), int(1));
        assert_eq!(v.determinant().unwrap().abs(), int(1));
        let n = a.rows().min(a.cols());
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                if i != j {
                    assert!(d.get(i, j).is_zero());
                }
            }
        }
        for i in 0..n {
            assert!(!d.get(i, i).is_negative());
            if i + 1 < n {
                let (x, y) = (d.get(i, i), d.get(i + 1, i + 1));
                assert!(if x.is_zero() { y.is_zero() } else { (y % x).is_zero() }, "{x} ∤ {y}");
            }
        }
        d
    }

    #[test]
    fn snf_examples() {
        assert_eq!(check(&m(&[vec![6]])), m(&[vec![6]]));
        assert_eq!(check(&m(&[vec![2, 0], vec![0, 3]])), m(&[vec![1, 0], vec![0, 6]]));
        assert_eq!(check(&m(&[vec![2, 4], vec![6, 8]])), m(&[vec![2, 0], vec![0, 4]]));
        assert_eq!(check(&m(&[vec![-3]])), m(&[vec![3]]));
        check(&m(&[vec![0, 0, 0], vec![0, 0, 0]]));
        check(&m(&[vec![4, 6, 10], vec![6, 9, 15]]));
        check(&IntMatrix::zeros(0, 3));
    }

    #[test]
    fn snf_is_deterministic() {
        let a = m(&[vec![3, 5, -7], vec![2, 8, 1], vec![0, 4, 12]]);
        assert_eq!(smith_normal_form(&a), smith_normal_form(&a));
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(m(&[vec![2, 4], vec![6, 8]]).determinant().unwrap(), int(-8));
        assert_eq!(m(&[vec![0, 1], vec![1, 0]]).determinant().unwrap(), int(-1));
        assert_eq!(m(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]).determinant().unwrap(), int(0));
        assert_eq!(m(&[vec![2, 0, 1], vec![1, 3, 2], vec![1, 1, 2]]).determinant().unwrap(), int(6));
    }

    #[test]
    fn ext_examples() {
        for n in [2i64, 5, 12] {
            let (hom, ext) = ext1_hom(&m(&[vec![n]])).unwrap();
            assert_eq!(hom, FGAbelianGroup { rank: 0, torsion: vec![] });
            assert_eq!(ext, FGAbelianGroup { rank: 0, torsion: vec![n as u64] });
        }
        let (hom, ext) = ext1_hom(&IntMatrix::zeros(2, 2)).unwrap();
        assert_eq!((hom.rank, ext.torsion.len()), (2, 0));
        let (_, ext) = ext1_hom(&m(&[vec![2, 0], vec![0, 3]])).unwrap();
        assert_eq!(ext.torsion, vec![6]);
        // Z ⊕ Z/4 presented by a 2×1 matrix
        let (hom, ext) = ext1_hom(&m(&[vec![0], vec![4]])).unwrap();
        assert_eq!((hom.rank, ext.torsion), (1, vec![4]));
        assert_eq!(FGAbelianGroup::from_cyclic(0, &[4, 6, 1]).torsion, vec![2, 12]);
    }

    #[test]
    fn serialization() {
        let a = m(&[vec![1, 2], vec![3, 4]]);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":2,"entries":[1,2,3,4]}"#);
        assert_eq!(serde_json::from_str::<IntMatrix>(&text).unwrap(), a);
        assert!(serde_json::from_str::<IntMatrix>(r#"{"rows":2,"cols":2,"entries":[1]}"#).is_err());
        let big = IntMatrix::new(1, 1, vec![BigInt::from(i64::MAX) * 4]).unwrap();
        let text = serde_json::to_string(&big).unwrap();
        assert_eq!(text, r#"{"rows":1,"cols":1,"entries":["36893488147419103228"]}"#);
        assert_eq!(serde_json::from_str::<IntMatrix>(&text).unwrap(), big);
        let g = FGAbelianGroup { rank: 1, torsion: vec![2, 4] };
        assert_eq!(serde_json::to_string(&g).unwrap(), r#"{"rank":1,"torsion":[2,4]}"#);
    }

    fn arb_matrix(max: usize) -> impl Strategy<Value = IntMatrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-20i64..=20, r * c).prop_map(move |e| IntMatrix::from_i64(r, c, &e).unwrap())
        })
    }

    /// A product of random elementary operations.
    fn arb_unimodular(n: usize) -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec((0..n, 0..n, -3i64..=3, any::<bool>()), 0..8).prop_map(move |ops| {
            let mut u = IntMatrix::identity(n);
            for (i, j, c, swap) in ops {
                let mut e = IntMatrix::identity(n);
                if swap && i != j {
                    e.set(i, i, int(0));
                    e.set(j, j, int(0));
                    e.set(i, j, int(1));
                    e.set(j, i, int(1));
                } else if i != j {
                    e.set(i, j, int(c));
                }
                u = e.mul(&u).unwrap();
            }
            u
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn snf_certificate(a in arb_matrix(6)) {
            check(&a);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn ext_of_direct_sum(a in arb_matrix(3), b in arb_matrix(3)) {
            let (ha, ea) = ext1_hom(&a).unwrap();
            let (hb, eb) = ext1_hom(&b).unwrap();
            let (h, e) = ext1_hom(&IntMatrix::block_diagonal(&a, &b)).unwrap();
            let joined: Vec<u64> = ea.torsion.iter().chain(&eb.torsion).copied().collect();
            prop_assert_eq!(e, FGAbelianGroup::from_cyclic(0, &joined));
            prop_assert_eq!(h.rank, ha.rank + hb.rank);
        }

        #[test]
        fn ext_is_stable(
            (a, u, v) in arb_matrix(4).prop_flat_map(|a| {
                let (r, c) = (a.rows(), a.cols());
                (Just(a), arb_unimodular(r), arb_unimodular(c))
            })
        ) {
            let moved = u.mul(&a).unwrap().mul(&v).unwrap();
            prop_assert_eq!(ext1_hom(&moved).unwrap(), ext1_hom(&a).unwrap());
        }
    }
}
