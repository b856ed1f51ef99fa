//! Lexicographic order on vectors of extended reals.
//!
//! Every objective value, bound and reduced cost in this crate is a
//! [`LexValue`]: a fixed-length vector compared entry by entry, the first
//! differing entry deciding. Entries are [`ExtReal`]s so that the "no
//! solution yet" cost `(-inf, ..., -inf)` is represented exactly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Default absolute tolerance for lexicographic sign tests.
pub const DEFAULT_EPS: f64 = 1e-6;

/// A real number or one of the two symbolic infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// The finite value, or `None` for an infinity.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    fn rank(self) -> u8 {
        match self {
            ExtReal::NegInf => 0,
            ExtReal::Finite(_) => 1,
            ExtReal::PosInf => 2,
        }
    }

    /// Total order; NaN finite values are a contract violation.
    pub fn total_cmp(self, other: ExtReal) -> Ordering {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => {
                debug_assert!(!a.is_nan() && !b.is_nan(), "NaN in lexicographic value");
                a.total_cmp(&b)
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }

    /// Extended addition. Panics on `inf + (-inf)`.
    pub fn checked_add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            (ExtReal::NegInf, ExtReal::PosInf) | (ExtReal::PosInf, ExtReal::NegInf) => {
                panic!("indeterminate extended-real sum: inf + (-inf)")
            }
            (ExtReal::NegInf, _) | (_, ExtReal::NegInf) => ExtReal::NegInf,
            _ => ExtReal::PosInf,
        }
    }

    /// Multiplication by a finite scalar, with `0 * inf` taken as 0.
    pub fn scale(self, k: f64) -> ExtReal {
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a * k),
            _ if k == 0.0 => ExtReal::Finite(0.0),
            ExtReal::NegInf if k > 0.0 => ExtReal::NegInf,
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf if k > 0.0 => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(a) => ExtReal::Finite(-a),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::Finite(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}

/// A vector of extended reals under the lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LexValue(Vec<ExtReal>);

impl LexValue {
    pub fn new(entries: Vec<ExtReal>) -> Self {
        LexValue(entries)
    }

    pub fn from_finite(entries: &[f64]) -> Self {
        LexValue(entries.iter().map(|&x| ExtReal::Finite(x)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        LexValue(vec![ExtReal::Finite(0.0); len])
    }

    pub fn neg_inf(len: usize) -> Self {
        LexValue(vec![ExtReal::NegInf; len])
    }

    pub fn pos_inf(len: usize) -> Self {
        LexValue(vec![ExtReal::PosInf; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[ExtReal] {
        &self.0
    }

    pub fn is_all_neg_inf(&self) -> bool {
        self.0.iter().all(|e| *e == ExtReal::NegInf)
    }

    /// Finite entries as plain floats; `None` if any entry is infinite.
    pub fn to_finite(&self) -> Option<Vec<f64>> {
        self.0.iter().map(|e| e.finite()).collect()
    }

    /// Exact lexicographic comparison. Panics on a length mismatch.
    pub fn lex_cmp(&self, other: &LexValue) -> Ordering {
        assert_eq!(
            self.len(),
            other.len(),
            "comparing lexicographic values of different lengths"
        );
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(*b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// Lexicographic comparison where finite entries within `eps` of each
    /// other count as equal. With `eps = 0` this is [`LexValue::lex_cmp`].
    pub fn lex_cmp_eps(&self, other: &LexValue, eps: f64) -> Ordering {
        assert_eq!(
            self.len(),
            other.len(),
            "comparing lexicographic values of different lengths"
        );
        for (a, b) in self.0.iter().zip(&other.0) {
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    if (x - y).abs() <= eps {
                        continue;
                    }
                    return x.total_cmp(y);
                }
                _ => match a.total_cmp(*b) {
                    Ordering::Equal => continue,
                    ord => return ord,
                },
            }
        }
        Ordering::Equal
    }

    /// True iff the first entry with magnitude above `eps` is positive.
    pub fn is_positive(&self, eps: f64) -> bool {
        debug_assert!(eps >= 0.0);
        for e in &self.0 {
            match *e {
                ExtReal::Finite(x) if x.abs() <= eps => continue,
                ExtReal::Finite(x) => return x > 0.0,
                ExtReal::PosInf => return true,
                ExtReal::NegInf => return false,
            }
        }
        false
    }

    /// Entrywise sum. Panics on a length mismatch or `inf + (-inf)`.
    pub fn lex_add(&self, other: &LexValue) -> LexValue {
        assert_eq!(
            self.len(),
            other.len(),
            "adding lexicographic values of different lengths"
        );
        LexValue(self.0.iter().zip(&other.0).map(|(a, b)| a.checked_add(*b)).collect())
    }

    pub fn lex_scale(&self, k: f64) -> LexValue {
        LexValue(self.0.iter().map(|a| a.scale(k)).collect())
    }

    /// Entrywise approximate equality (relative to `max(1, |b|)`).
    pub fn approx_eq(&self, other: &LexValue, eps: f64) -> bool {
        self.len() == other.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs() <= eps * y.abs().max(1.0),
                _ => a == b,
            })
    }
}

impl Index<usize> for LexValue {
    type Output = ExtReal;
    fn index(&self, i: usize) -> &ExtReal {
        &self.0[i]
    }
}

impl Add for &LexValue {
    type Output = LexValue;
    fn add(self, rhs: &LexValue) -> LexValue {
        self.lex_add(rhs)
    }
}

impl Sub for &LexValue {
    type Output = LexValue;
    fn sub(self, rhs: &LexValue) -> LexValue {
        self.lex_add(&-rhs)
    }
}

impl Neg for &LexValue {
    type Output = LexValue;
    fn neg(self) -> LexValue {
        LexValue(self.0.iter().map(|a| -*a).collect())
    }
}

impl fmt::Display for LexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// `a` compared with `b` in the lexicographic order.
pub fn lex_compare(a: &LexValue, b: &LexValue) -> Ordering {
    a.lex_cmp(b)
}

pub fn lex_add(a: &LexValue, b: &LexValue) -> LexValue {
    a.lex_add(b)
}

pub fn lex_scale(a: &LexValue, k: f64) -> LexValue {
    a.lex_scale(k)
}

pub fn lex_is_positive(a: &LexValue, eps: f64) -> bool {
    a.is_positive(eps)
}

/// Lexicographic comparison of plain float slices with an `eps` snap.
pub(crate) fn cmp_slices_eps(a: &[f64], b: &[f64], eps: f64) -> Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() <= eps {
            continue;
        }
        return x.total_cmp(y);
    }
    Ordering::Equal
}
