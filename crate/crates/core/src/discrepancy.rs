//! Exact star and extreme discrepancy of finite point sets in `[0,1)`.

use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub type Point = Ratio<i128>;

fn sorted(points: &[Point]) -> Result<Vec<Point>> {
    if points.is_empty() {
        return Err(Error::Domain("discrepancy of an empty point set".into()));
    }
    let mut u = points.to_vec();
    u.sort_unstable();
    Ok(u)
}

/// `D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N)` over the sorted points.
pub fn star_discrepancy(points: &[Point]) -> Result<Point> {
    let u = sorted(points)?;
    Ok(star_of_sorted(&u))
}

fn star_of_sorted(u: &[Point]) -> Point {
    let n = u.len() as i128;
    let mut best = Point::zero();
    for (idx, v) in u.iter().enumerate() {
        let i = idx as i128 + 1;
        let above = Point::new(i, n) - v;
        let below = v - Point::new(i - 1, n);
        best = best.max(above).max(below);
    }
    best
}

/// Whether the extremal interval holds too many or too few points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Excess {
    /// The closed interval `[a, b]` (the limit of open intervals shrinking
    /// onto it) carries more mass than its length.
    OverCount,
    /// The open interval `(a, b)` carries less mass than its length.
    UnderCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtremeDiscrepancy {
    pub value: Point,
    pub a: Point,
    pub b: Point,
    pub excess: Excess,
}

/// `D_N = sup_J |A(J)/N - len(J)|` over subintervals of the unit interval,
/// with a witness interval attaining it.
pub fn extreme_discrepancy(points: &[Point]) -> Result<ExtremeDiscrepancy> {
    let u = sorted(points)?;
    Ok(extreme_of_sorted(&u))
}

fn extreme_of_sorted(u: &[Point]) -> ExtremeDiscrepancy {
    let n = u.len();
    let nn = n as i128;

    // Over-count: max_{i<=j} (j/N - u_j) - ((i-1)/N - u_i).
    let mut over = None::<(Point, usize, usize)>;
    let mut min_d: Option<(Point, usize)> = None;
    for j in 1..=n {
        let d_j = Point::new(j as i128 - 1, nn) - u[j - 1];
        if min_d.as_ref().is_none_or(|(m, _)| d_j < *m) {
            min_d = Some((d_j, j));
        }
        let c_j = Point::new(j as i128, nn) - u[j - 1];
        let (m, i) = min_d.as_ref().expect("set above");
        let v = c_j - m;
        if over.as_ref().is_none_or(|(best, _, _)| v > *best) {
            over = Some((v, *i, j));
        }
    }

    // Under-count over open gaps, with virtual endpoints u_0 = 0 and
    // u_{N+1} = 1: max_{i<j} g_j - g_i + 1/N where g_i = u_i - i/N.
    let at = |i: usize| -> Point {
        if i == 0 {
            Point::zero()
        } else if i == n + 1 {
            Point::one()
        } else {
            u[i - 1]
        }
    };
    let g = |i: usize| at(i) - Point::new(i as i128, nn);
    let mut under = None::<(Point, usize, usize)>;
    let mut min_g = (g(0), 0usize);
    for j in 1..=n + 1 {
        let gj = g(j);
        let v = gj - min_g.0 + Point::new(1, nn);
        if under.as_ref().is_none_or(|(best, _, _)| v > *best) {
            under = Some((v, min_g.1, j));
        }
        if gj < min_g.0 {
            min_g = (gj, j);
        }
    }

    let (ov, oi, oj) = over.expect("nonempty");
    let (uv, ui, uj) = under.expect("nonempty");
    if ov >= uv {
        ExtremeDiscrepancy {
            value: ov,
            a: u[oi - 1],
            b: u[oj - 1],
            excess: Excess::OverCount,
        }
    } else {
        ExtremeDiscrepancy {
            value: uv,
            a: at(ui),
            b: at(uj),
            excess: Excess::UnderCount,
        }
    }
}

/// `|#{u < 1/k}/N - 1/k|` for each `k` in `ks`.
pub fn bin_errors(points: &[Point], ks: &[u64]) -> Vec<(u64, Point)> {
    let n = points.len() as i128;
    ks.iter()
        .map(|&k| {
            let edge = Point::new(1, k as i128);
            let inside = points.iter().filter(|p| **p < edge).count() as i128;
            let freq = Point::new(inside, n.max(1));
            let err = if freq > edge { freq - edge } else { edge - freq };
            (k, err)
        })
        .collect()
}

/// Outcome of a weak distribution normality check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WdnOutcome {
    Pass {
        /// Number of prefixes whose discrepancy was computed explicitly.
        evaluated: usize,
    },
    Fail {
        n: usize,
        witness: ExtremeDiscrepancy,
    },
}

impl WdnOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, WdnOutcome::Pass { .. })
    }
}

/// Checks `D_N <= eps` for every prefix length `N` in `[ell, n_max]`.
///
/// Adding one point moves the extreme discrepancy by at most `1/(N+1)`,
/// so after a prefix with slack `eps - D_N` the next
/// `floor((eps - D_N)(N+1))` prefixes are certified without evaluation.
pub fn weak_distribution_check(
    points: &[Point],
    eps: &Point,
    ell: usize,
    n_max: usize,
) -> Result<WdnOutcome> {
    if ell == 0 || ell > n_max {
        return Err(Error::Domain(format!("empty prefix range [{ell}, {n_max}]")));
    }
    if n_max > points.len() {
        return Err(Error::Range {
            requested: n_max,
            available: points.len(),
            required: n_max,
        });
    }
    let mut evaluated = 0;
    let mut n = ell;
    let mut prefix = sorted(&points[..n])?;
    loop {
        let d = extreme_of_sorted(&prefix);
        evaluated += 1;
        if d.value > *eps {
            return Ok(WdnOutcome::Fail { n, witness: d });
        }
        let slack = (*eps - d.value) * Point::from_integer(n as i128 + 1);
        let skip = slack.to_integer() as usize;
        let next = n + skip + 1;
        if next > n_max {
            return Ok(WdnOutcome::Pass { evaluated });
        }
        let mut fresh = points[n..next].to_vec();
        fresh.sort_unstable();
        prefix = merge_sorted(&prefix, &fresh);
        n = next;
    }
}

fn merge_sorted(a: &[Point], b: &[Point]) -> Vec<Point> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    fn p(n: i128, d: i128) -> Point {
        Point::new(n, d)
    }

    #[test]
    fn star_examples() {
        assert_eq!(star_discrepancy(&[p(1, 2)]).unwrap(), p(1, 2));
        assert_eq!(star_discrepancy(&[p(1, 4), p(3, 4)]).unwrap(), p(1, 4));
        assert_eq!(star_discrepancy(&[p(0, 1), p(1, 2)]).unwrap(), p(1, 2));
        assert!(star_discrepancy(&[]).is_err());
    }

    #[test]
    fn extreme_examples() {
        assert_eq!(extreme_discrepancy(&[p(1, 2)]).unwrap().value, p(1, 1));
        assert_eq!(extreme_discrepancy(&[p(1, 4), p(3, 4)]).unwrap().value, p(1, 2));
        for n in 1..20 {
            let pts: Vec<Point> = (0..n).map(|i| p(2 * i + 1, 2 * n)).collect();
            assert_eq!(extreme_discrepancy(&pts).unwrap().value, p(1, n));
        }
    }

    #[test]
    fn witness_interval_attains_value() {
        let pts = [p(1, 10), p(1, 10), p(1, 3), p(9, 10)];
        let d = extreme_discrepancy(&pts).unwrap();
        let n = pts.len() as i128;
        let mass = match d.excess {
            Excess::OverCount => pts.iter().filter(|u| **u >= d.a && **u <= d.b).count(),
            Excess::UnderCount => pts.iter().filter(|u| **u > d.a && **u < d.b).count(),
        } as i128;
        let dev = (p(mass, n) - (d.b - d.a)).abs();
        assert_eq!(dev, d.value);
    }

    #[test]
    fn all_zero_points() {
        let pts = vec![p(0, 1); 100];
        assert_eq!(star_discrepancy(&pts).unwrap(), p(1, 1));
        let eps = p(1, 10);
        let out = weak_distribution_check(&pts, &eps, 1, 100).unwrap();
        match out {
            WdnOutcome::Fail { n, witness } => {
                assert_eq!(n, 1);
                assert_eq!(witness.a, p(0, 1));
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn wdn_eps_one_always_passes() {
        let pts = vec![p(0, 1); 50];
        assert!(weak_distribution_check(&pts, &p(1, 1), 1, 50).unwrap().passed());
    }

    #[test]
    fn bins() {
        let pts = [p(0, 1), p(1, 4), p(1, 2), p(3, 4)];
        let errs = bin_errors(&pts, &[2, 4]);
        assert_eq!(errs, vec![(2, p(0, 1)), (4, p(0, 1))]);
    }
}
