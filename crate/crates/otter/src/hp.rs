//! Thin high-precision float layer over `astro-float`, used where double
//! precision is not enough (rho to many digits, rho^-n at n in the
//! hundreds). Fixed working precision, round-to-even everywhere.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num::bigint::BigInt;

/// Working precision in bits (~77 decimal digits).
pub const PREC: usize = 256;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("consts cache"));
}

pub type Hp = BigFloat;

pub fn from_f64(x: f64) -> Hp {
    BigFloat::from_f64(x, PREC)
}

pub fn from_u64(x: u64) -> Hp {
    BigFloat::from_u64(x, PREC)
}

pub fn from_bigint(x: &BigInt) -> Hp {
    parse_dec(&x.to_string())
}

pub fn parse_dec(s: &str) -> Hp {
    CONSTS.with(|cc| BigFloat::parse(s, Radix::Dec, PREC, RM, &mut cc.borrow_mut()))
}

pub fn add(a: &Hp, b: &Hp) -> Hp {
    a.add(b, PREC, RM)
}

pub fn sub(a: &Hp, b: &Hp) -> Hp {
    a.sub(b, PREC, RM)
}

pub fn mul(a: &Hp, b: &Hp) -> Hp {
    a.mul(b, PREC, RM)
}

pub fn div(a: &Hp, b: &Hp) -> Hp {
    a.div(b, PREC, RM)
}

pub fn exp(a: &Hp) -> Hp {
    CONSTS.with(|cc| a.exp(PREC, RM, &mut cc.borrow_mut()))
}

pub fn sqrt(a: &Hp) -> Hp {
    a.sqrt(PREC, RM)
}

pub fn powi(a: &Hp, n: usize) -> Hp {
    a.powi(n, PREC, RM)
}

pub fn pi() -> Hp {
    CONSTS.with(|cc| cc.borrow_mut().pi(PREC, RM))
}

pub fn e() -> Hp {
    CONSTS.with(|cc| cc.borrow_mut().e(PREC, RM))
}

pub fn neg(a: &Hp) -> Hp {
    a.neg()
}

pub fn abs(a: &Hp) -> Hp {
    a.abs()
}

pub fn is_negative(a: &Hp) -> bool {
    a.is_negative()
}

pub fn lt(a: &Hp, b: &Hp) -> bool {
    matches!(a.cmp(b), Some(c) if c < 0)
}

/// Conversion through the decimal formatter; exact enough since the
/// formatter emits the full mantissa and Rust's f64 parser rounds
/// correctly.
pub fn to_f64(a: &Hp) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    format!("{}", a).parse::<f64>().unwrap_or(f64::NAN)
}

/// Horner evaluation of a polynomial with BigInt coefficients
/// (c[0] + c[1] x + ...).
pub fn eval_bigint_poly(coeffs: &[BigInt], x: &Hp) -> Hp {
    let mut acc = from_f64(0.0);
    for c in coeffs.iter().rev() {
        acc = add(&mul(&acc, x), &from_bigint(c));
    }
    acc
}

/// Horner evaluation with pre-converted coefficients (much cheaper when
/// the same polynomial is evaluated many times).
pub fn eval_poly(coeffs: &[Hp], x: &Hp) -> Hp {
    let mut acc = from_f64(0.0);
    for c in coeffs.iter().rev() {
        acc = add(&mul(&acc, x), c);
    }
    acc
}
