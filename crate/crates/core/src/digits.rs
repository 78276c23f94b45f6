//! Digit streams relative to a basic sequence.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::sequences::BasicSequence;

/// Default window for the "not eventually all `q_i - 1`" advisory check.
pub const DEFAULT_TOP_WINDOW: usize = 64;

/// A finite prefix `a_1..a_N` of a Cantor series expansion with
/// `0 <= a_i < q_i`. Bases are cached alongside the digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitStream {
    seq: BasicSequence,
    bases: Vec<u64>,
    digits: Vec<u64>,
}

impl DigitStream {
    /// Builds a stream, rejecting any digit outside its base.
    pub fn new(seq: BasicSequence, digits: Vec<u64>) -> Result<Self> {
        let bases = seq.bases(digits.len());
        if let Some(i) = digits.iter().zip(&bases).position(|(a, q)| a >= q) {
            return Err(Error::Domain(format!(
                "digit {} at position {} is not below base {}",
                digits[i],
                i + 1,
                bases[i]
            )));
        }
        Ok(Self { seq, bases, digits })
    }

    pub(crate) fn from_parts(seq: BasicSequence, bases: Vec<u64>, digits: Vec<u64>) -> Self {
        debug_assert_eq!(bases.len(), digits.len());
        debug_assert!(digits.iter().zip(&bases).all(|(a, q)| a < q));
        Self { seq, bases, digits }
    }

    pub fn seq(&self) -> &BasicSequence {
        &self.seq
    }

    /// Digits, 0-based: `digits()[i - 1]` is `a_i`.
    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Bases matching [`digits`](Self::digits) position for position.
    pub fn bases(&self) -> &[u64] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.digits
    }

    /// The stream truncated to its first `n` digits.
    pub fn truncated(&self, n: usize) -> Result<DigitStream> {
        if n > self.len() {
            return Err(Error::Range {
                requested: n,
                available: self.len(),
                required: n,
            });
        }
        Ok(Self::from_parts(
            self.seq.clone(),
            self.bases[..n].to_vec(),
            self.digits[..n].to_vec(),
        ))
    }

    /// `sum_{i<=n} a_i / (q_1 ... q_i)`, exact.
    pub fn prefix_value(&self, n: usize) -> Result<BigRational> {
        if n > self.len() {
            return Err(Error::Range {
                requested: n,
                available: self.len(),
                required: n,
            });
        }
        Ok(horner(&self.digits[..n], &self.bases[..n]))
    }

    /// The value of the stored digits after position `n`, exactly.
    pub fn stored_tail(&self, n: usize) -> BigRational {
        horner(&self.digits[n..], &self.bases[n..])
    }

    /// Number of digits after position `n` needed for the truncation bound
    /// `1/(q_{n+1} ... q_{n+j})` to drop below `tol`, if the stream has them.
    pub fn tail_length_for(&self, n: usize, tol: &BigRational) -> Option<usize> {
        if !tol.is_positive() {
            return None;
        }
        let mut product = BigInt::one();
        let (num, den) = (tol.numer(), tol.denom());
        let mut j = 0;
        // Need 1/product < num/den, i.e. den < num * product.
        while den >= &(num * &product) {
            if n + j >= self.len() {
                return None;
            }
            product *= self.bases[n + j];
            j += 1;
        }
        Some(j)
    }

    /// Approximation of the orbit value `T_{Q,n}` read from the digits after
    /// position `n`, with truncation error below `tol`.
    pub fn tail_value(&self, n: usize, tol: &BigRational) -> Result<BigRational> {
        if !tol.is_positive() {
            return Err(Error::Domain("tolerance must be positive".into()));
        }
        match self.tail_length_for(n, tol) {
            Some(j) => Ok(horner(&self.digits[n..n + j], &self.bases[n..n + j])),
            None => Err(self.precision_error(n, tol)),
        }
    }

    fn precision_error(&self, n: usize, tol: &BigRational) -> Error {
        // Extend the stored bases with the rule to name the required length.
        let mut product = BigInt::one();
        let mut j = 0u64;
        while tol.denom() >= &(tol.numer() * &product) {
            j += 1;
            product *= self.seq.base_at(n as u64 + j);
        }
        Error::Precision {
            position: n,
            required_length: n + j as usize,
            available: self.len(),
        }
    }

    /// Fixed-point orbit values for `n = 0..count`: each entry approximates
    /// the tail after `n` digits as `v / 2^bits` with absolute error below
    /// `3 / 2^bits`.
    pub fn tail_points_fixed(&self, count: usize, bits: u32) -> Result<Vec<u128>> {
        assert!((1..=62).contains(&bits));
        let scale = 1u128 << bits;
        let mut out = Vec::with_capacity(count);
        let mut end = 0usize;
        let mut log_product = 0f64;
        for n in 0..count {
            // Maintain the window (n, end] whose base product exceeds 2^bits.
            if end < n {
                end = n;
                log_product = 0.0;
            } else if n > 0 && end > n - 1 {
                log_product -= (self.bases[n - 1] as f64).log2();
            }
            while log_product <= bits as f64 + 1.0 {
                if end >= self.len() {
                    let tol = BigRational::new(BigInt::one(), BigInt::from(scale));
                    return Err(self.precision_error(n, &tol));
                }
                log_product += (self.bases[end] as f64).log2();
                end += 1;
            }
            let mut v: u128 = 0;
            for i in (n..end).rev() {
                let q = self.bases[i] as u128;
                v = (self.digits[i] as u128 * scale + v) / q;
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Like [`tail_points_fixed`](Self::tail_points_fixed), but returns as
    /// many leading points as the stored digits determine.
    pub fn tail_points_available(&self, bits: u32) -> Vec<u128> {
        let mut product_log = 0f64;
        let mut end = self.len();
        // Find the last n whose window reaches past 2^bits within the stream.
        while end > 0 && product_log <= bits as f64 + 1.0 {
            end -= 1;
            product_log += (self.bases[end] as f64).log2();
        }
        if product_log <= bits as f64 + 1.0 {
            return Vec::new();
        }
        // Tails starting at offsets <= end are determined; step back if the
        // forward window sum rounds differently at the edge.
        let mut count = end + 1;
        loop {
            match self.tail_points_fixed(count, bits) {
                Ok(points) => return points,
                Err(_) if count > 0 => count -= 1,
                Err(_) => return Vec::new(),
            }
        }
    }

    /// The advisory check that the stream does not end in a run of length
    /// `window` of top digits `q_i - 1`.
    pub fn validate(&self, window: usize) -> ValidityReport {
        validate_digits(&self.seq, &self.digits, window)
    }
}

fn horner(digits: &[u64], bases: &[u64]) -> BigRational {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (&a, &q) in digits.iter().zip(bases).rev() {
        // value = (a + num/den) / q
        num = BigInt::from(a) * &den + num;
        den *= q;
    }
    BigRational::new(num, den)
}

/// Greedy expansion of `x` in `[0,1)`: `a_i = floor(q_i * r_{i-1})`, where
/// `r_i` is the fractional remainder, kept as an exact numerator.
pub fn digits_of_rational(x: &BigRational, seq: &BasicSequence, n: usize) -> Result<DigitStream> {
    if x.is_negative() || x >= &BigRational::one() {
        return Err(Error::Domain(format!("x = {x} is not in [0,1)")));
    }
    let den: BigUint = x.denom().to_biguint().expect("positive denominator");
    let mut rem: BigUint = x.numer().to_biguint().expect("non-negative numerator");
    let bases = seq.bases(n);
    let mut digits = Vec::with_capacity(n);
    for &q in &bases {
        if rem.is_zero() {
            digits.push(0);
            continue;
        }
        let (a, r) = (rem * q).div_rem(&den);
        digits.push(a.to_u64().expect("digit below base"));
        rem = r;
    }
    Ok(DigitStream::from_parts(seq.clone(), bases, digits))
}

/// `psi_{P,Q}`: clamps each `P`-digit to `q_i - 1`.
pub fn psi_map(d: &DigitStream, target: &BasicSequence) -> DigitStream {
    let bases = target.bases(d.len());
    let digits = d
        .digits()
        .iter()
        .zip(&bases)
        .map(|(&a, &q)| a.min(q - 1))
        .collect();
    DigitStream::from_parts(target.clone(), bases, digits)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    /// 1-based positions with `a_i >= q_i`.
    pub violations: Vec<usize>,
    /// Starting positions (1-based) of windows consisting only of top digits.
    pub top_runs: Vec<usize>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_warnings(&self) -> bool {
        !self.top_runs.is_empty()
    }
}

/// Report-style validation of raw digits against `seq`.
pub fn validate_digits(seq: &BasicSequence, digits: &[u64], window: usize) -> ValidityReport {
    let mut report = ValidityReport::default();
    let mut run = 0usize;
    for (idx, &a) in digits.iter().enumerate() {
        let q = seq.base_at(idx as u64 + 1);
        if a >= q {
            report.violations.push(idx + 1);
            run = 0;
            continue;
        }
        if a == q - 1 {
            run += 1;
            if window > 0 && run >= window {
                report.top_runs.push(idx + 2 - window);
            }
        } else {
            run = 0;
        }
    }
    report
}

/// Exact digit-ratio points `a_i / q_i` for the first `n` positions.
pub fn digit_ratio_points(d: &DigitStream, n: usize) -> Vec<Ratio<i128>> {
    d.digits()[..n]
        .iter()
        .zip(&d.bases()[..n])
        .map(|(&a, &q)| Ratio::new(a as i128, q as i128))
        .collect()
}
