//! Two-sided Wilcoxon signed-rank test on paired rationals.
//!
//! Zero differences are dropped and tied magnitudes share their average
//! rank. Fewer than [`EXACT_BELOW`] non-zero differences use the exact null
//! distribution; larger samples use the normal approximation with tie and
//! continuity corrections.

use num_traits::Signed;
use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rational::Rational;

pub const EXACT_BELOW: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub statistic: f64,
    pub p_value: f64,
    /// Non-zero differences that entered the test.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Ranks of `|d|` doubled so that average ranks stay integral, paired with
/// the sign of `d`. Zero differences must already be removed.
pub fn doubled_signed_ranks(diffs: &[Rational]) -> Vec<(u64, bool)> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&a, &b| diffs[a].abs().cmp(&diffs[b].abs()));
    let mut ranks = vec![(0u64, false); diffs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && diffs[order[j + 1]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = (doubled, diffs[k] > Rational::from_integer(0));
        }
        i = j + 1;
    }
    ranks
}

fn nonzero_differences(pairs: &[(Rational, Rational)]) -> Vec<Rational> {
    pairs
        .iter()
        .map(|(a, b)| a - b)
        .filter(|d| *d != Rational::from_integer(0))
        .collect()
}

/// Exact two-sided p-value from the full null distribution of the signed
/// rank sum (all `2^n` sign patterns equally likely), computed by counting
/// subset sums.
pub fn exact_test(diffs: &[Rational]) -> Option<WilcoxonResult> {
    if diffs.is_empty() {
        return None;
    }
    let ranks = doubled_signed_ranks(diffs);
    let total: u64 = ranks.iter().map(|(r, _)| r).sum();
    let observed: u64 = ranks.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();

    // ways[s] = number of sign patterns whose doubled positive-rank sum is s
    let mut ways = vec![0f64; total as usize + 1];
    ways[0] = 1.0;
    for (r, _) in &ranks {
        let r = *r as usize;
        for s in (r..ways.len()).rev() {
            ways[s] += ways[s - r];
        }
    }
    let patterns = 2f64.powi(ranks.len() as i32);
    let dist_obs = (2 * observed as i64 - total as i64).abs();
    let extreme: f64 = ways
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total as i64).abs() >= dist_obs)
        .map(|(_, w)| w)
        .sum();
    Some(WilcoxonResult {
        statistic: observed as f64 / 2.0,
        p_value: (extreme / patterns).min(1.0),
        n: ranks.len(),
        method: WilcoxonMethod::Exact,
    })
}

/// Normal approximation with tie-corrected variance and a 0.5 continuity
/// correction.
pub fn normal_test(diffs: &[Rational]) -> Option<WilcoxonResult> {
    if diffs.is_empty() {
        return None;
    }
    let ranks = doubled_signed_ranks(diffs);
    let n = ranks.len() as f64;
    let w_plus: f64 = ranks.iter().filter(|(_, p)| *p).map(|(r, _)| *r as f64 / 2.0).sum();

    let mut tie_term = 0.0;
    let mut sorted: Vec<u64> = ranks.iter().map(|(r, _)| *r).collect();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }

    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return None;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let p = erfc(z / std::f64::consts::SQRT_2).min(1.0);
    Some(WilcoxonResult {
        statistic: w_plus,
        p_value: p,
        n: ranks.len(),
        method: WilcoxonMethod::Normal,
    })
}

/// `Ok(None)` means no decision: every difference was zero.
pub fn wilcoxon_signed_rank(pairs: &[(Rational, Rational)]) -> Result<Option<WilcoxonResult>> {
    if pairs.is_empty() {
        return Err(Error::contract("wilcoxon test needs at least one pair"));
    }
    let diffs = nonzero_differences(pairs);
    Ok(if diffs.len() < EXACT_BELOW {
        exact_test(&diffs)
    } else {
        normal_test(&diffs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    /// Brute force over all sign patterns.
    fn enumerate_p(diffs: &[Rational]) -> f64 {
        let ranks = doubled_signed_ranks(diffs);
        let total: i64 = ranks.iter().map(|(r, _)| *r as i64).sum();
        let obs: i64 = ranks.iter().filter(|(_, p)| *p).map(|(r, _)| *r as i64).sum();
        let n = ranks.len();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let s: i64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| ranks[i].0 as i64)
                .sum();
            if (2 * s - total).abs() >= (2 * obs - total).abs() {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn six_positive_differences() {
        let pairs: Vec<_> = (1..=6).map(|i| (r(i, 1), r(0, 1))).collect();
        let res = wilcoxon_signed_rank(&pairs).unwrap().unwrap();
        assert_eq!(res.method, WilcoxonMethod::Exact);
        assert_eq!(res.p_value, 0.03125);
        assert_eq!(res.statistic, 21.0);
    }

    #[test]
    fn symmetric_pairs_are_not_significant() {
        let base = [(r(1, 1), r(1, 2)), (r(1, 3), r(0, 1)), (r(1, 4), r(1, 1))];
        let pairs: Vec<_> = base.iter().flat_map(|&(x, y)| [(x, y), (y, x)]).collect();
        let res = wilcoxon_signed_rank(&pairs).unwrap().unwrap();
        assert!(res.p_value >= 0.99, "{res:?}");
    }

    #[test]
    fn all_zero_differences_give_no_decision() {
        let pairs = vec![(r(1, 2), r(1, 2)); 5];
        assert_eq!(wilcoxon_signed_rank(&pairs).unwrap(), None);
        assert!(wilcoxon_signed_rank(&[]).is_err());
    }

    #[test]
    fn ties_share_average_rank() {
        let ranks = doubled_signed_ranks(&[r(1, 1), r(-1, 1), r(2, 1)]);
        assert_eq!(ranks, vec![(3, true), (3, false), (6, true)]);
    }

    #[test]
    fn dp_distribution_matches_enumeration() {
        let cases: Vec<Vec<Rational>> = vec![
            vec![r(1, 1), r(-2, 1), r(3, 1)],
            vec![r(1, 2), r(1, 2), r(-1, 2), r(1, 3), r(-1, 1), r(2, 1)],
            (1..=9).map(|i| r(if i % 3 == 0 { -i } else { i }, 4)).collect(),
            vec![r(1, 1); 7],
        ];
        for diffs in cases {
            let exact = exact_test(&diffs).unwrap().p_value;
            assert!((exact - enumerate_p(&diffs)).abs() < 1e-12, "{diffs:?}");
        }
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let pairs: Vec<_> = (1..=12).map(|i| (r(i, 1), r(0, 1))).collect();
        let res = wilcoxon_signed_rank(&pairs).unwrap().unwrap();
        assert_eq!(res.method, WilcoxonMethod::Normal);
        assert!(res.p_value < 0.01);
    }
}
