//! Truncated power series with exact rational (or floating) coefficients.
//!
//! All series carry an explicit truncation order: a series of order `d`
//! stores coefficients for `z^0 ..= z^d`. Arithmetic never silently drops
//! below the requested order; binary operations truncate to the minimum of
//! the two input orders.

use std::fmt::Write as _;
use std::ops::{Div, Neg, Sub};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{FromPrimitive, One, ToPrimitive, Zero};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("operation requires a zero constant term")]
    NonzeroConstantTerm,
    #[error("substitution power must be at least 1")]
    ZeroSubstitutionPower,
    #[error("evaluation point {0} outside [0, 1)")]
    EvalOutOfRange(f64),
    #[error("malformed series text: {0}")]
    Parse(String),
}

/// Coefficient ring for series arithmetic. Implemented by `BigRational`
/// (exact) and `f64` (explicit-conversion-only float carrier).
pub trait Coeff:
    Clone
    + PartialEq
    + std::fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
    + FromPrimitive
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + std::fmt::Debug
        + Zero
        + One
        + Neg<Output = Self>
        + Sub<Output = Self>
        + Div<Output = Self>
        + FromPrimitive
{
}

/// A power series truncated at `z^order`, generic over the coefficient
/// scalar. `coeffs.len() == order + 1` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<C: Coeff> {
    coeffs: Vec<C>,
}

pub type ExactSeries = Series<BigRational>;
pub type FloatSeries = Series<f64>;

impl<C: Coeff> Series<C> {
    pub fn from_coeffs(mut coeffs: Vec<C>, order: usize) -> Self {
        coeffs.resize(order + 1, C::zero());
        Series { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Series { coeffs: vec![C::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = C::one();
        s
    }

    /// The monomial z (order must be >= 1 for the coefficient to survive).
    pub fn monomial_z(order: usize) -> Self {
        let mut s = Self::zero(order);
        if order >= 1 {
            s.coeffs[1] = C::one();
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> C {
        self.coeffs.get(n).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, C::zero());
        Series { coeffs }
    }

    fn min_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    /// Coefficientwise sum at order `min(self.order, other.order)`.
    pub fn add(&self, other: &Self) -> Self {
        let d = self.min_order(other);
        let coeffs = (0..=d)
            .map(|n| self.coeff(n) + other.coeff(n))
            .collect();
        Series { coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let d = self.min_order(other);
        let coeffs = (0..=d)
            .map(|n| self.coeff(n) - other.coeff(n))
            .collect();
        Series { coeffs }
    }

    /// Cauchy product truncated at `min(self.order, other.order)`.
    /// Schoolbook convolution; orders at desk scale keep this cheap.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.min_order(other);
        let mut coeffs = vec![C::zero(); d + 1];
        for i in 0..=d {
            let a = &self.coeffs[i];
            if a.is_zero() {
                continue;
            }
            for j in 0..=(d - i) {
                let b = &other.coeffs[j];
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        Series { coeffs }
    }

    pub fn scale(&self, c: &C) -> Self {
        let coeffs = self.coeffs.iter().map(|x| x.clone() * c.clone()).collect();
        Series { coeffs }
    }

    pub fn scale_div_usize(&self, k: usize) -> Self {
        let d = C::from_usize(k).expect("scalar conversion");
        let coeffs = self.coeffs.iter().map(|x| x.clone() / d.clone()).collect();
        Series { coeffs }
    }

    pub fn neg(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|x| -x.clone()).collect();
        Series { coeffs }
    }

    /// Multiply by z, keeping the truncation order (the previous top
    /// coefficient falls off the end).
    pub fn mul_z(&self) -> Self {
        let d = self.order();
        let mut coeffs = vec![C::zero(); d + 1];
        for n in 1..=d {
            coeffs[n] = self.coeffs[n - 1].clone();
        }
        Series { coeffs }
    }

    /// Formal derivative, order drops by one (derivative of a degree-d
    /// truncation is only trustworthy to degree d-1).
    pub fn derivative(&self) -> Self {
        let d = self.order();
        if d == 0 {
            return Series { coeffs: vec![C::zero()] };
        }
        let coeffs = (1..=d)
            .map(|n| self.coeffs[n].clone() * C::from_usize(n).unwrap())
            .collect();
        Series { coeffs }
    }

    /// exp of a series with zero constant term, by the standard derivative
    /// recurrence: n b_n = sum_{k=1..n} k a_k b_{n-k}.
    pub fn exp_series(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let d = self.order();
        let mut b = vec![C::zero(); d + 1];
        b[0] = C::one();
        for n in 1..=d {
            let mut acc = C::zero();
            for k in 1..=n {
                if self.coeffs[k].is_zero() || b[n - k].is_zero() {
                    continue;
                }
                acc = acc
                    + self.coeffs[k].clone()
                        * C::from_usize(k).unwrap()
                        * b[n - k].clone();
            }
            b[n] = acc / C::from_usize(n).unwrap();
        }
        Ok(Series { coeffs: b })
    }

    /// a(z^i) at the same order; coefficients at non-multiples of i vanish.
    pub fn substitute_power(&self, i: usize) -> Result<Self, SeriesError> {
        if i == 0 {
            return Err(SeriesError::ZeroSubstitutionPower);
        }
        let d = self.order();
        let mut coeffs = vec![C::zero(); d + 1];
        let mut n = 0;
        while n * i <= d {
            coeffs[n * i] = self.coeffs[n].clone();
            n += 1;
        }
        Ok(Series { coeffs })
    }

    /// exp(sum_{i >= i_min} a(z^i)/i), the operator behind Polya's
    /// functional equation. The sum over i is finite: a has no constant
    /// term, so a(z^i) contributes nothing once i exceeds the order.
    pub fn polya_exp(&self, i_min: usize) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        assert!(i_min >= 1, "i_min must be positive");
        let d = self.order();
        let mut arg = Series::zero(d);
        for i in i_min..=d.max(i_min) {
            if i > d {
                break;
            }
            let term = self.substitute_power(i)?.scale_div_usize(i);
            arg = arg.add(&term);
        }
        arg.exp_series()
    }

    /// Generating series of unordered k-multisets of self-structures:
    /// MSET_k(a)(z) = [t^k] exp(sum_i t^i a(z^i)/i).
    pub fn mset_slice(&self, k: usize) -> Result<Self, SeriesError> {
        Ok(self.mset_slices(k)?.pop().unwrap())
    }

    /// MSET_0 ..= MSET_kmax in one pass, via the recurrence
    /// k M_k = sum_{i=1..k} a(z^i) M_{k-i}.
    pub fn mset_slices(&self, k_max: usize) -> Result<Vec<Self>, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let d = self.order();
        let mut powers = Vec::with_capacity(k_max + 1);
        for i in 1..=k_max.max(1) {
            if i > k_max {
                break;
            }
            powers.push(if i <= d {
                self.substitute_power(i)?
            } else {
                Series::zero(d)
            });
        }
        let mut slices: Vec<Series<C>> = vec![Series::one(d)];
        for k in 1..=k_max {
            let mut acc = Series::zero(d);
            for i in 1..=k {
                acc = acc.add(&powers[i - 1].mul(&slices[k - i]));
            }
            slices.push(acc.scale_div_usize(k));
        }
        Ok(slices)
    }

    /// outer(inner(z)) truncated to the minimum of the two orders. The
    /// inner series must have zero constant term.
    pub fn compose(outer: &Self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::NonzeroConstantTerm);
        }
        let d = outer.order().min(inner.order());
        let inner = inner.truncate(d);
        let mut acc = Series::zero(d);
        for n in (0..=d.min(outer.order())).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] = acc.coeffs[0].clone() + outer.coeff(n);
        }
        Ok(acc)
    }
}

/// Result of a numeric series evaluation: the truncated sum together with
/// a heuristic tail estimate.
#[derive(Debug, Clone, Copy)]
pub struct EvalReal {
    pub value: f64,
    /// Heuristic tail bound |last coeff| * x^order / (1 - 3x), using the
    /// known coefficient growth rate 1/rho < 3 of the tree series handled
    /// here. Not certified; infinite when 3x >= 1.
    pub tail_estimate: f64,
}

impl FloatSeries {
    pub fn eval_real(&self, x: f64) -> Result<EvalReal, SeriesError> {
        if !(0.0..1.0).contains(&x) {
            return Err(SeriesError::EvalOutOfRange(x));
        }
        let mut value = 0.0;
        for c in self.coeffs.iter().rev() {
            value = value * x + c;
        }
        let last = self.coeffs[self.order()].abs();
        let tail_estimate = if 1.0 - 3.0 * x > 0.0 {
            last * x.powi(self.order() as i32) / (1.0 - 3.0 * x)
        } else {
            f64::INFINITY
        };
        Ok(EvalReal { value, tail_estimate })
    }
}

impl ExactSeries {
    /// Convert to floats, reporting the largest absolute rounding error
    /// bound over all coefficients (half an ulp of each converted value).
    pub fn to_float(&self) -> (FloatSeries, f64) {
        let mut max_err: f64 = 0.0;
        let coeffs: Vec<f64> = self
            .coeffs
            .iter()
            .map(|c| {
                let v = c.to_f64().unwrap_or(f64::NAN);
                let ulp = if v == 0.0 { 0.0 } else { (v.abs() * f64::EPSILON) / 2.0 };
                max_err = max_err.max(ulp);
                v
            })
            .collect();
        (Series { coeffs }, max_err)
    }

    pub fn eval_real(&self, x: f64) -> Result<EvalReal, SeriesError> {
        self.to_float().0.eval_real(x)
    }

    /// True when every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn integer_coeffs(&self) -> Option<Vec<BigInt>> {
        if !self.is_integral() {
            return None;
        }
        Some(self.coeffs.iter().map(|c| c.to_integer()).collect())
    }

    pub fn from_integer_coeffs(coeffs: &[BigInt], order: usize) -> Self {
        Series::from_coeffs(
            coeffs.iter().map(|c| BigRational::from_integer(c.clone())).collect(),
            order,
        )
    }

    /// Line-oriented text format: `n<TAB>numerator/denominator`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (n, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "{}\t{}/{}", n, c.numer(), c.denom()).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SeriesError> {
        let mut coeffs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let idx: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| SeriesError::Parse(format!("line {}", lineno + 1)))?;
            if idx != coeffs.len() {
                return Err(SeriesError::Parse(format!(
                    "non-contiguous index {} at line {}",
                    idx,
                    lineno + 1
                )));
            }
            let frac = parts
                .next()
                .ok_or_else(|| SeriesError::Parse(format!("line {}", lineno + 1)))?;
            let c = BigRational::from_str(frac)
                .map_err(|e| SeriesError::Parse(format!("line {}: {}", lineno + 1, e)))?;
            coeffs.push(c);
        }
        if coeffs.is_empty() {
            return Err(SeriesError::Parse("empty input".into()));
        }
        let order = coeffs.len() - 1;
        Ok(Series::from_coeffs(coeffs, order))
    }
}

/// Convenience constructor for tests and small fixtures.
pub fn exact_from_i64(coeffs: &[i64]) -> ExactSeries {
    let order = coeffs.len().saturating_sub(1);
    Series::from_coeffs(
        coeffs.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect(),
        order,
    )
}
