//! Small numeric helpers shared across modules: rational parsing, exact
//! conversion of doubles, compensated summation and integer roots.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses `p/q`, a plain integer, or a finite decimal such as `0.125`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let den: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::Parse(format!("bad decimal `{s}`")));
        }
        let mut num: BigInt = digits.parse().expect("checked digits");
        if negative {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(num, den));
    }
    let num: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    Ok(BigRational::from_integer(num))
}

/// The exact rational value of a finite double (every double is dyadic).
pub fn f64_to_ratio(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Very large numerators/denominators: shift both down to fit.
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    let shift_n = (nb - 1000).max(0) as usize;
    let shift_d = (db - 1000).max(0) as usize;
    let n = (r.numer() >> shift_n).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d).to_f64().unwrap_or(1.0);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

pub fn unit_fraction(den: &BigUint) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(den.clone()))
}

/// Sum of unit fractions `1/d` where equal consecutive denominators are
/// batched, and batches are combined by balanced binary splitting over
/// unreduced fractions.
#[derive(Debug, Default)]
pub struct UnitFractionSum {
    /// Unreduced partial sums `(num, den, terms)`, with `terms` strictly
    /// decreasing from bottom to top.
    stack: Vec<(BigInt, BigInt, u64)>,
    pending_den: Option<BigUint>,
    pending_count: u64,
}

impl UnitFractionSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, den: &BigUint) {
        match &self.pending_den {
            Some(d) if d == den => self.pending_count += 1,
            _ => {
                self.flush();
                self.pending_den = Some(den.clone());
                self.pending_count = 1;
            }
        }
    }

    fn flush(&mut self) {
        if let Some(d) = self.pending_den.take() {
            self.stack
                .push((BigInt::from(self.pending_count), BigInt::from(d), 1));
            self.pending_count = 0;
            while self.stack.len() >= 2 {
                let n = self.stack.len();
                if self.stack[n - 2].2 > self.stack[n - 1].2 {
                    break;
                }
                self.merge_top();
            }
        }
    }

    fn merge_top(&mut self) {
        let (b_num, b_den, b_terms) = self.stack.pop().expect("two entries");
        let (a_num, a_den, a_terms) = self.stack.pop().expect("two entries");
        let (num, den) = if a_den == b_den {
            (a_num + b_num, a_den)
        } else {
            (&a_num * &b_den + &b_num * &a_den, a_den * b_den)
        };
        self.stack.push((num, den, a_terms + b_terms));
    }

    pub fn finish(mut self) -> BigRational {
        self.flush();
        while self.stack.len() >= 2 {
            self.merge_top();
        }
        match self.stack.pop() {
            Some((num, den, _)) => BigRational::new(num, den),
            None => BigRational::zero(),
        }
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Largest `r` with `r^k <= x`.
pub fn integer_root(x: u64, k: u32) -> u64 {
    if x < 2 || k == 1 {
        return x;
    }
    let mut r = (x as f64).powf(1.0 / k as f64).round() as u64;
    while r > 0 && (r as u128).checked_pow(k).is_none_or(|v| v > x as u128) {
        r -= 1;
    }
    while (r as u128 + 1).checked_pow(k).is_some_and(|v| v <= x as u128) {
        r += 1;
    }
    r
}

pub fn ratio_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
