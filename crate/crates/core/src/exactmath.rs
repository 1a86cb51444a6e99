//! Exact rational scalars, vectors and matrices, and l_p norm powers.
//!
//! Every quantity in the workbench is an arbitrary-precision rational. Lengths
//! are compared through their p-th powers, which stay rational for integer p.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest finite exponent accepted by [`PNorm::finite`].
pub const P_MAX: u32 = 10;

/// An exact rational number kept in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar(BigRational::one())
    }

    pub fn from_int(value: i64) -> Self {
        ExactScalar(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn from_bigint(value: BigInt) -> Self {
        ExactScalar(BigRational::from_integer(value))
    }

    /// `numer / denom`, reduced. Panics when `denom` is zero.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        ExactScalar(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_parts(numer: BigInt, denom: BigInt) -> Result<Self> {
        if denom.is_zero() {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        Ok(ExactScalar(BigRational::new(numer, denom)))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        ExactScalar(self.0.abs())
    }

    pub fn pow(&self, exp: u32) -> Self {
        ExactScalar(num_traits::pow(self.0.clone(), exp as usize))
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Nearest integer, halves rounded away from zero.
    pub fn round(&self) -> BigInt {
        self.0.round().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Smallest rational of the form `k / 2^bits` whose `p`-th power is at least
    /// `self`. Used wherever an irrational root has to be over-approximated.
    pub fn root_upper_bound(&self, p: u32, bits: u32) -> Self {
        assert!(p >= 1, "root index must be positive");
        if !self.is_positive() {
            return ExactScalar::zero();
        }
        if p == 1 {
            return self.clone();
        }
        let scale = BigInt::one() << (bits as usize * p as usize);
        let scaled = &self.0 * BigRational::from_integer(scale);
        let ceil = scaled.ceil().to_integer();
        let mut k = ceil.nth_root(p);
        while num_traits::pow(k.clone(), p as usize) < ceil {
            k += 1u32;
        }
        ExactScalar(BigRational::new(k, BigInt::one() << bits as usize))
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                ExactScalar::from_parts(n, d)
            }
            None => parse_decimal(s).ok_or_else(bad),
        }
    }
}

/// Parses `123`, `-1.25` or `1e-6` exactly.
fn parse_decimal(s: &str) -> Option<ExactScalar> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.trim_start_matches(['-', '+']).is_empty() && frac_part.is_empty() {
        return None;
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let shift = exponent.checked_sub(i32::try_from(frac_part.len()).ok()?)?;
    let ten = BigInt::from(10);
    let power = num_traits::pow(ten, shift.unsigned_abs() as usize);
    let value = if shift >= 0 {
        BigRational::from_integer(digits * power)
    } else {
        BigRational::new(digits, power)
    };
    Some(ExactScalar(value))
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ScalarVisitor;

        impl Visitor<'_> for ScalarVisitor {
            type Value = ExactScalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational as \"num/den\", \"num\", or an integer")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExactScalar, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExactScalar, E> {
                Ok(ExactScalar::from_int(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExactScalar, E> {
                Ok(ExactScalar::from_bigint(BigInt::from(v)))
            }
        }

        deserializer.deserialize_any(ScalarVisitor)
    }
}

impl From<i64> for ExactScalar {
    fn from(value: i64) -> Self {
        ExactScalar::from_int(value)
    }
}

impl From<BigInt> for ExactScalar {
    fn from(value: BigInt) -> Self {
        ExactScalar::from_bigint(value)
    }
}

impl From<BigRational> for ExactScalar {
    fn from(value: BigRational) -> Self {
        ExactScalar(value)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $assign_trait:ident, $assign_method:ident) => {
        impl $trait<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'a ExactScalar) -> ExactScalar {
                ExactScalar(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b ExactScalar> for &'a ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &'b ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(&rhs.0))
            }
        }
        impl $assign_trait<ExactScalar> for ExactScalar {
            fn $assign_method(&mut self, rhs: ExactScalar) {
                self.0.$assign_method(rhs.0);
            }
        }
        impl<'a> $assign_trait<&'a ExactScalar> for ExactScalar {
            fn $assign_method(&mut self, rhs: &'a ExactScalar) {
                self.0.$assign_method(&rhs.0);
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign);
forward_binop!(Sub, sub, SubAssign, sub_assign);
forward_binop!(Mul, mul, MulAssign, mul_assign);

impl Div<ExactScalar> for ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: ExactScalar) -> ExactScalar {
        ExactScalar(self.0 / rhs.0)
    }
}

impl<'a> Div<&'a ExactScalar> for ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &'a ExactScalar) -> ExactScalar {
        ExactScalar(self.0 / &rhs.0)
    }
}

impl<'b> Div<&'b ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn div(self, rhs: &'b ExactScalar) -> ExactScalar {
        ExactScalar(&self.0 / &rhs.0)
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

impl Sum for ExactScalar {
    fn sum<I: Iterator<Item = ExactScalar>>(iter: I) -> Self {
        iter.fold(ExactScalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a ExactScalar> for ExactScalar {
    fn sum<I: Iterator<Item = &'a ExactScalar>>(iter: I) -> Self {
        iter.fold(ExactScalar::zero(), |acc, x| acc + x)
    }
}

/// The l_p norm in use: an integer exponent `1 <= p <= P_MAX`, or the max norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PNorm {
    Finite(u32),
    Infinity,
}

impl PNorm {
    pub fn finite(p: u32) -> Result<Self> {
        if (1..=P_MAX).contains(&p) {
            Ok(PNorm::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "finite p must lie in 1..={P_MAX}, got {p}"
            )))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, PNorm::Finite(_))
    }

    /// The exponent, or `None` for the max norm.
    pub fn exponent(self) -> Option<u32> {
        match self {
            PNorm::Finite(p) => Some(p),
            PNorm::Infinity => None,
        }
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Finite(p) => write!(f, "{p}"),
            PNorm::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" => Ok(PNorm::Infinity),
            other => {
                let p: u32 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad norm exponent {other:?}")))?;
                PNorm::finite(p)
            }
        }
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PNorm::Finite(p) => serializer.serialize_u32(*p),
            PNorm::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PNorm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct PVisitor;

        impl Visitor<'_> for PVisitor {
            type Value = PNorm;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<PNorm, E> {
                let p = u32::try_from(v).map_err(E::custom)?;
                PNorm::finite(p).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<PNorm, E> {
                let p = u32::try_from(v).map_err(E::custom)?;
                PNorm::finite(p).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<PNorm, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(PVisitor)
    }
}

/// A fixed-length vector of exact scalars.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExactVector(Vec<ExactScalar>);

impl ExactVector {
    pub fn new(entries: Vec<ExactScalar>) -> Self {
        ExactVector(entries)
    }

    pub fn zeros(len: usize) -> Self {
        ExactVector(vec![ExactScalar::zero(); len])
    }

    pub fn from_ints(entries: &[i64]) -> Self {
        ExactVector(entries.iter().map(|&x| ExactScalar::from_int(x)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[ExactScalar] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<ExactScalar> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ExactScalar> {
        self.0.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(ExactScalar::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(ExactScalar::is_integer)
    }

    pub fn dot(&self, other: &ExactVector) -> ExactScalar {
        assert_eq!(self.len(), other.len(), "dot product of unequal lengths");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, c: &ExactScalar) -> ExactVector {
        ExactVector(self.0.iter().map(|x| x * c).collect())
    }

    pub fn sub(&self, other: &ExactVector) -> ExactVector {
        assert_eq!(self.len(), other.len(), "difference of unequal lengths");
        ExactVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &ExactVector) -> ExactVector {
        assert_eq!(self.len(), other.len(), "sum of unequal lengths");
        ExactVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Append one coordinate, producing a vector one longer.
    pub fn extended(&self, last: ExactScalar) -> ExactVector {
        let mut entries = self.0.clone();
        entries.push(last);
        ExactVector(entries)
    }
}

impl std::ops::Index<usize> for ExactVector {
    type Output = ExactScalar;
    fn index(&self, i: usize) -> &ExactScalar {
        &self.0[i]
    }
}

impl fmt::Debug for ExactVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl fmt::Display for ExactVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

impl FromIterator<ExactScalar> for ExactVector {
    fn from_iter<I: IntoIterator<Item = ExactScalar>>(iter: I) -> Self {
        ExactVector(iter.into_iter().collect())
    }
}

/// A dense `rows x cols` matrix of exact scalars, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<ExactScalar>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix {
            rows,
            cols,
            data: vec![ExactScalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ExactMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ExactScalar::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<ExactScalar>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(ExactMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_columns(columns: &[ExactVector]) -> Result<Self> {
        let rows = columns.first().map_or(0, ExactVector::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        let mut m = ExactMatrix::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                m.data[i * m.cols + j] = x.clone();
            }
        }
        Ok(m)
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        ExactMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| ExactScalar::from_int(x)).collect())
                .collect(),
        )
        .expect("ragged integer rows")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &ExactScalar {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> ExactVector {
        ExactVector(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn column(&self, j: usize) -> ExactVector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<ExactVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> ExactMatrix {
        let mut t = ExactMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j).clone();
            }
        }
        t
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(ExactScalar::is_integer)
    }

    pub fn mul_vec(&self, v: &ExactVector) -> ExactVector {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v.iter())
                    .filter(|(a, _)| !a.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `B * z` for an integer coefficient vector.
    pub fn mul_int_vec(&self, z: &[i64]) -> ExactVector {
        assert_eq!(self.cols, z.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = ExactScalar::zero();
                for (j, &c) in z.iter().enumerate() {
                    if c != 0 {
                        let a = self.get(i, j);
                        if !a.is_zero() {
                            acc += a * &ExactScalar::from_int(c);
                        }
                    }
                }
                acc
            })
            .collect()
    }

    pub fn mul(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ExactMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `B^T B`.
    pub fn gram(&self) -> ExactMatrix {
        let cols = self.columns();
        let n = self.cols;
        let mut g = ExactMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = cols[i].dot(&cols[j]);
                g.data[j * n + i] = x.clone();
                g.data[i * n + j] = x;
            }
        }
        g
    }

    /// Integer matrix obtained by multiplying each row by the lcm of its
    /// denominators. Row scaling preserves rank.
    fn integral_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter().map(|x| x.numer() * (&l / x.denom())).collect()
            })
            .collect()
    }

    /// Reduced row echelon form over the rationals, with the pivot columns.
    fn rref(&self) -> (Vec<Vec<ExactScalar>>, Vec<usize>) {
        let mut a: Vec<Vec<ExactScalar>> = (0..self.rows).map(|i| self.row(i).0).collect();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(r, p);
            let inv = ExactScalar::one() / &a[r][c];
            for x in a[r].iter_mut() {
                *x *= &inv;
            }
            for i in 0..self.rows {
                if i != r && !a[i][c].is_zero() {
                    let f = a[i][c].clone();
                    for j in c..self.cols {
                        let delta = &f * &a[r][j];
                        a[i][j] -= delta;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    /// A nonzero integer vector `z` with `self * z = 0`, or `None` when the
    /// columns are independent.
    pub fn kernel_vector(&self) -> Option<ExactVector> {
        let (a, pivots) = self.rref();
        let free = (0..self.cols).find(|c| !pivots.contains(c))?;
        let mut z = vec![ExactScalar::zero(); self.cols];
        z[free] = ExactScalar::one();
        for (row, &pc) in pivots.iter().enumerate() {
            z[pc] = -&a[row][free];
        }
        let l = z.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let l = ExactScalar::from_bigint(l);
        Some(z.iter().map(|x| x * &l).collect())
    }

    /// Solve `self * x = b`. Returns `None` when the system is inconsistent;
    /// when several solutions exist the free variables are set to zero.
    pub fn solve(&self, b: &ExactVector) -> Option<ExactVector> {
        assert_eq!(self.rows, b.len(), "right-hand side length mismatch");
        let mut cols = self.columns();
        cols.push(b.clone());
        let augmented = ExactMatrix::from_columns(&cols).expect("consistent shape");
        let (a, pivots) = augmented.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![ExactScalar::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = a[row][self.cols].clone();
        }
        Some(ExactVector(x))
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<_> = (0..self.rows).map(|i| self.row(i)).collect();
        f.debug_list().entries(rows).finish()
    }
}

/// `sum |v_i|^p` for finite p; `max |v_i|` for the max norm.
pub fn norm_power(v: &ExactVector, p: PNorm) -> ExactScalar {
    match p {
        PNorm::Finite(p) => v
            .iter()
            .filter(|x| !x.is_zero())
            .map(|x| x.abs().pow(p))
            .sum(),
        PNorm::Infinity => v
            .iter()
            .map(ExactScalar::abs)
            .max()
            .unwrap_or_else(ExactScalar::zero),
    }
}

/// Rank by fraction-free (Bareiss) elimination on the row-scaled integer matrix.
pub fn rank(m: &ExactMatrix) -> usize {
    let mut a = m.integral_rows();
    bareiss(&mut a, m.cols).0
}

/// Runs Bareiss elimination in place. Returns the rank and, for a square
/// matrix, the determinant (zero when singular).
fn bareiss(a: &mut [Vec<BigInt>], cols: usize) -> (usize, BigInt) {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut sign = 1;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            a.swap(r, p);
            sign = -sign;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    let det = if rows == cols && r == rows {
        if rows == 0 {
            BigInt::one()
        } else {
            prev * sign
        }
    } else {
        BigInt::zero()
    };
    (r, det)
}

/// Exact determinant of a square matrix.
pub fn determinant(m: &ExactMatrix) -> Result<ExactScalar> {
    if m.rows != m.cols {
        return Err(Error::Dimension(format!(
            "determinant of non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    // Scaling row i by l_i multiplies the determinant by l_i.
    let mut scale = BigInt::one();
    for i in 0..m.rows {
        let row = &m.data[i * m.cols..(i + 1) * m.cols];
        scale *= row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    }
    let mut a = m.integral_rows();
    let (_, det) = bareiss(&mut a, m.cols);
    ExactScalar::from_parts(det, scale)
}

/// `det(B^T B)`, the squared determinant of the lattice spanned by the columns.
pub fn gram_determinant(b: &ExactMatrix) -> Result<ExactScalar> {
    if let Some(kernel) = b.kernel_vector() {
        return Err(Error::RankDeficient { kernel });
    }
    determinant(&b.gram())
}

/// Incrementally tests linear independence of rational vectors.
#[derive(Clone, Debug, Default)]
pub struct SpanTracker {
    dim: usize,
    // Rows in echelon form; each has a leading 1 at `pivot`.
    rows: Vec<(usize, Vec<ExactScalar>)>,
}

impl SpanTracker {
    pub fn new(dim: usize) -> Self {
        SpanTracker {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    /// Adds `v` if it is independent of the vectors seen so far and reports
    /// whether it was.
    pub fn insert(&mut self, v: &[ExactScalar]) -> bool {
        let mut w = self.reduce(v);
        let Some(pivot) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = ExactScalar::one() / &w[pivot];
        for x in w.iter_mut() {
            *x *= &inv;
        }
        self.rows.push((pivot, w));
        true
    }

    pub fn insert_ints(&mut self, v: &[i64]) -> bool {
        let v: Vec<ExactScalar> = v.iter().map(|&x| ExactScalar::from_int(x)).collect();
        self.insert(&v)
    }

    /// Whether `v` lies in the span (the zero vector always does).
    pub fn contains(&self, v: &[ExactScalar]) -> bool {
        self.reduce(v).iter().all(ExactScalar::is_zero)
    }

    pub fn contains_ints(&self, v: &[i64]) -> bool {
        if self.is_full() {
            return true;
        }
        let v: Vec<ExactScalar> = v.iter().map(|&x| ExactScalar::from_int(x)).collect();
        self.contains(&v)
    }

    /// `v` minus its component along the echelon rows.
    fn reduce(&self, v: &[ExactScalar]) -> Vec<ExactScalar> {
        assert_eq!(v.len(), self.dim, "vector length does not match tracker");
        let mut w = v.to_vec();
        for (pivot, row) in &self.rows {
            if !w[*pivot].is_zero() {
                let f = w[*pivot].clone();
                for (x, r) in w.iter_mut().zip(row).skip(*pivot) {
                    if !r.is_zero() {
                        *x -= &f * r;
                    }
                }
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactScalar {
        ExactScalar::ratio(n, d)
    }

    #[test]
    fn scalar_is_reduced_with_positive_denominator() {
        let x = q(6, -4);
        assert_eq!(x.numer(), &BigInt::from(-3));
        assert_eq!(x.denom(), &BigInt::from(2));
        assert_eq!(x.to_string(), "-3/2");
        assert_eq!(q(8, 4).to_string(), "2");
    }

    #[test]
    fn scalar_parses_and_serializes_as_strings() {
        let x: ExactScalar = "21/20".parse().unwrap();
        assert_eq!(x, q(21, 20));
        assert_eq!(serde_json::to_string(&x).unwrap(), "\"21/20\"");
        let y: ExactScalar = serde_json::from_str("\"-4/2\"").unwrap();
        assert_eq!(y, ExactScalar::from_int(-2));
        let z: ExactScalar = serde_json::from_str("7").unwrap();
        assert_eq!(z, ExactScalar::from_int(7));
        assert!("1/0".parse::<ExactScalar>().is_err());
        assert!("abc".parse::<ExactScalar>().is_err());
    }

    #[test]
    fn scalar_parses_decimals_exactly() {
        let p = |s: &str| s.parse::<ExactScalar>().unwrap();
        assert_eq!(p("1e-6"), q(1, 1_000_000));
        assert_eq!(p("-1.25"), q(-5, 4));
        assert_eq!(p("2.5E2"), ExactScalar::from_int(250));
        assert_eq!(p(".5"), q(1, 2));
        assert_eq!(p("0.1"), q(1, 10));
        for bad in ["1e", "e5", "-", "1.2.3", "1.-2", ""] {
            assert!(bad.parse::<ExactScalar>().is_err(), "{bad}");
        }
    }

    #[test]
    fn pnorm_json_forms() {
        assert_eq!(serde_json::to_string(&PNorm::Finite(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&PNorm::Infinity).unwrap(), "\"inf\"");
        assert_eq!(
            serde_json::from_str::<PNorm>("2").unwrap(),
            PNorm::Finite(2)
        );
        assert_eq!(
            serde_json::from_str::<PNorm>("\"inf\"").unwrap(),
            PNorm::Infinity
        );
        assert!(serde_json::from_str::<PNorm>("0").is_err());
        assert!(serde_json::from_str::<PNorm>("11").is_err());
    }

    #[test]
    fn norm_power_examples() {
        assert_eq!(
            norm_power(&ExactVector::from_ints(&[-1, 1]), PNorm::Finite(2)),
            ExactScalar::from_int(2)
        );
        assert_eq!(
            norm_power(&ExactVector::from_ints(&[2, -2, 0]), PNorm::Finite(1)),
            ExactScalar::from_int(4)
        );
        assert_eq!(
            norm_power(&ExactVector::from_ints(&[2, 2]), PNorm::Infinity),
            ExactScalar::from_int(2)
        );
        assert!(norm_power(&ExactVector::zeros(3), PNorm::Finite(3)).is_zero());
        assert!(norm_power(&ExactVector::zeros(0), PNorm::Infinity).is_zero());
        let v = ExactVector::new(vec![q(1, 2), q(-1, 3)]);
        assert_eq!(norm_power(&v, PNorm::Finite(3)), q(1, 8) + q(1, 27));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&ExactMatrix::identity(3)), 3);
        let dup = ExactMatrix::from_int_rows(&[&[1, 1, 2], &[3, 3, 0], &[5, 5, 1]]);
        assert!(rank(&dup) < 3);
        assert_eq!(rank(&ExactMatrix::from_int_rows(&[&[2, 2], &[-2, 2]])), 2);
        assert_eq!(rank(&ExactMatrix::zeros(2, 3)), 0);
        let rational = ExactMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 3)],
            vec![q(3, 2), ExactScalar::one()],
        ])
        .unwrap();
        assert_eq!(rank(&rational), 1);
    }

    #[test]
    fn gram_determinant_examples() {
        assert_eq!(
            gram_determinant(&ExactMatrix::identity(2)).unwrap(),
            ExactScalar::one()
        );
        let diag = ExactMatrix::from_int_rows(&[&[1, 0], &[0, 2]]);
        assert_eq!(gram_determinant(&diag).unwrap(), ExactScalar::from_int(4));
        // B^T B = [[4, 2], [2, 5]], det = 20 - 4 = 16.
        let b = ExactMatrix::from_int_rows(&[&[2, 1], &[0, 2]]);
        assert_eq!(gram_determinant(&b).unwrap(), ExactScalar::from_int(16));
        // Non-square: columns (1,0,1), (0,1,1): gram [[2,1],[1,2]] -> 3.
        let tall = ExactMatrix::from_int_rows(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(gram_determinant(&tall).unwrap(), ExactScalar::from_int(3));
    }

    #[test]
    fn gram_determinant_rejects_dependent_columns() {
        let b = ExactMatrix::from_int_rows(&[&[1, 2], &[2, 4]]);
        match gram_determinant(&b) {
            Err(Error::RankDeficient { kernel }) => {
                assert!(!kernel.is_zero());
                assert!(b.mul_vec(&kernel).is_zero());
            }
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn determinant_of_rational_matrix() {
        let m = ExactMatrix::from_rows(vec![
            vec![q(1, 2), q(1, 3)],
            vec![q(1, 4), ExactScalar::one()],
        ])
        .unwrap();
        assert_eq!(determinant(&m).unwrap(), q(1, 2) - q(1, 12));
        let m3 = ExactMatrix::from_int_rows(&[&[0, 1, 2], &[1, 0, 3], &[4, -3, 8]]);
        assert_eq!(determinant(&m3).unwrap(), ExactScalar::from_int(-2));
    }

    #[test]
    fn solve_and_kernel() {
        let b = ExactMatrix::from_int_rows(&[&[2, 2], &[-2, 2]]);
        let x = b.solve(&ExactVector::from_ints(&[4, 0])).unwrap();
        assert_eq!(x, ExactVector::from_ints(&[1, 1]));
        let tall = ExactMatrix::from_int_rows(&[&[1], &[1]]);
        assert!(tall.solve(&ExactVector::from_ints(&[1, 2])).is_none());
        assert!(b.kernel_vector().is_none());
    }

    #[test]
    fn root_upper_bound_is_tight() {
        let two = ExactScalar::from_int(2);
        let r = two.root_upper_bound(2, 20);
        assert!(r.pow(2) >= two);
        let below = &r - &ExactScalar::ratio(1, 1 << 20);
        assert!(below.pow(2) < two);
        assert_eq!(
            ExactScalar::from_int(27).root_upper_bound(3, 4),
            ExactScalar::from_int(3)
        );
    }

    #[test]
    fn span_tracker_detects_dependence() {
        let mut t = SpanTracker::new(3);
        assert!(t.insert_ints(&[1, 2, 0]));
        assert!(!t.insert_ints(&[2, 4, 0]));
        assert!(t.insert_ints(&[0, 1, 1]));
        assert!(!t.insert_ints(&[1, 3, 1]));
        assert!(!t.insert_ints(&[0, 0, 0]));
        assert!(t.contains_ints(&[1, 3, 1]));
        assert!(!t.contains_ints(&[0, 0, 1]));
        assert_eq!(t.rank(), 2);
        assert!(t.insert_ints(&[0, 0, 5]));
        assert!(t.is_full());
    }
}
