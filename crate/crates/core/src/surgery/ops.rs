use crate::blocks::Block;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaOutcome {
    /// 0-based window offsets changed from 0 to 1, ascending.
    pub changed: Vec<usize>,
    /// Occurrences of `0_k` fully inside the window before the change.
    pub before: usize,
    /// The same count after the change.
    pub after: usize,
}

fn zero_run_starts(window: &[u64], k: usize) -> Vec<usize> {
    let mut starts = Vec::new();
    let mut run = 0usize;
    for (i, &d) in window.iter().enumerate() {
        if d == 0 {
            run += 1;
            if run >= k {
                starts.push(i + 1 - k);
            }
        } else {
            run = 0;
        }
    }
    starts
}

/// `Theta_{k,ell}`: among the starts `A` of `0_k` occurrences inside the
/// window, the last `floor(|A| / ell)` have their first digit set to 1.
pub fn theta_op(window: &mut [u64], k: usize, ell: usize) -> ThetaOutcome {
    assert!(k >= 1 && ell >= 1);
    let starts = zero_run_starts(window, k);
    let before = starts.len();
    let take = before / ell;
    let changed = starts[before - take..].to_vec();
    for &j in &changed {
        window[j] = 1;
    }
    let after = zero_run_starts(window, k).len();
    ThetaOutcome {
        changed,
        before,
        after,
    }
}

/// `Xi_k`: every digit `d` with `d >= k/(k+1) * q` becomes `q - 1`.
/// Returns the changed offsets.
pub fn xi_op(window: &mut [u64], bases: &[u64], k: u64) -> Vec<usize> {
    assert_eq!(window.len(), bases.len());
    let mut changed = Vec::new();
    for (j, (d, &q)) in window.iter_mut().zip(bases).enumerate() {
        let top = q - 1;
        if *d != top && (*d as u128) * (k as u128 + 1) >= (k as u128) * (q as u128) {
            *d = top;
            changed.push(j);
        }
    }
    changed
}

/// The digit map `r` attached to a pivot block: `0 -> 1` when the pivot
/// starts with 0, otherwise `e -> e - 1` for the pivot's first digit `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RMap {
    first: u64,
}

impl RMap {
    pub fn for_pivot(pivot: &Block) -> Self {
        Self { first: pivot.at(1) }
    }

    pub fn apply(&self, d: u64) -> u64 {
        if self.first == 0 {
            if d == 0 {
                1
            } else {
                d
            }
        } else if d == self.first {
            d - 1
        } else {
            d
        }
    }

    /// Whether `window` maps onto `target` when `r` is applied to some
    /// subset of its positions (including the empty subset).
    pub fn maps_onto(&self, window: &[u64], target: &[u64]) -> bool {
        window.len() == target.len()
            && window
                .iter()
                .zip(target)
                .all(|(&w, &t)| w == t || self.apply(w) == t)
    }
}
