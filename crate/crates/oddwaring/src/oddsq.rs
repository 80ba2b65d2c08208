//! Sums of odd squares of integers: the rank-1 theory.
//!
//! Every odd square is 1 mod 8, so a sum of `r` odd squares is congruent to
//! `r` mod 8.  Together with classical square-counting theorems this pins the
//! minimal `r` down to a closed form, which [`min_odd_squares`] implements;
//! the value never exceeds 10.  [`decompose_odd_squares`] produces an explicit
//! decomposition, deterministically the lexicographically greatest one.

use serde::Serialize;

use crate::parallel;

/// A decomposition `M = t_1^2 + ... + t_r^2` into odd parts, sorted descending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OddSquareDecomposition {
    pub target: i64,
    pub parts: Vec<i64>,
}

fn isqrt(v: i64) -> i64 {
    if v < 0 {
        return 0;
    }
    let mut r = (v as f64).sqrt() as i64;
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    while r * r > v {
        r -= 1;
    }
    r
}

fn is_square(v: i64) -> bool {
    v >= 0 && {
        let r = isqrt(v);
        r * r == v
    }
}

/// Legendre: `M` is a sum of three squares iff it is not `4^a (8b+7)`.
pub fn is_sum_of_three_squares(m: i64) -> bool {
    debug_assert!(m >= 1);
    let mut m = m;
    while m % 4 == 0 {
        m /= 4;
    }
    m % 8 != 7
}

/// Two-square test by trial-division factorization: every prime factor
/// congruent to 3 mod 4 must occur to an even power.
pub fn is_sum_of_two_squares(m: i64) -> bool {
    debug_assert!(m >= 1);
    let mut m = m;
    let mut p = 2i64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if p % 4 == 3 && e % 2 == 1 {
                return false;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 && m % 4 == 3 {
        return false;
    }
    true
}

/// Decompose `M` as a sum of exactly `r` odd squares, if possible.
///
/// Deterministic: of all part vectors sorted descending, returns the
/// lexicographically greatest.  Exists iff `M = r (mod 8)` and `M >= r`.
pub fn decompose_odd_squares(m: i64, r: i64) -> Option<OddSquareDecomposition> {
    assert!(m >= 1 && r >= 1);
    if (m - r).rem_euclid(8) != 0 || m < r {
        return None;
    }
    let mut parts = Vec::with_capacity(r as usize);
    if descend(m, r, i64::MAX, &mut parts) {
        Some(OddSquareDecomposition { target: m, parts })
    } else {
        None
    }
}

/// Greedy descent on the largest part with backtracking; the first solution
/// found is the lexicographically greatest.  `cap` bounds the next part.
fn descend(m: i64, r: i64, cap: i64, parts: &mut Vec<i64>) -> bool {
    // Existence for the tail is decidable outright in the small cases, which
    // short-circuits almost all backtracking.
    match r {
        1 => {
            let t = isqrt(m);
            if t * t == m && t % 2 == 1 && t <= cap {
                parts.push(t);
                return true;
            }
            return false;
        }
        2 => {
            let mut a = isqrt(m - 1).min(cap);
            if a % 2 == 0 {
                a -= 1;
            }
            while a >= 1 && a * a >= m - a * a {
                let rest = m - a * a;
                if is_square(rest) {
                    let b = isqrt(rest);
                    // rest = 2 - 1 = 1 mod 8 forces b odd.
                    debug_assert!(b % 2 == 1);
                    parts.push(a);
                    parts.push(b);
                    return true;
                }
                a -= 2;
            }
            return false;
        }
        _ => {}
    }
    if r >= 3 && !exists(m, r) {
        return false;
    }
    let mut t = isqrt(m - (r - 1)).min(cap);
    if t % 2 == 0 {
        t -= 1;
    }
    while t >= 1 {
        let rest = m - t * t;
        if rest >= r - 1 && rest <= (r - 1) * t * t {
            parts.push(t);
            if descend(rest, r - 1, t, parts) {
                return true;
            }
            parts.pop();
        }
        t -= 2;
    }
    false
}

/// Existence of a sum of exactly `r >= 3` odd squares equal to `m`, given the
/// congruence `m = r (mod 8)`: strip `r - 3` ones and apply Legendre to the
/// remainder, which is 3 mod 8 and hence automatically three odd squares.
fn exists(m: i64, r: i64) -> bool {
    debug_assert!(r >= 3 && (m - r).rem_euclid(8) == 0);
    if m < r {
        return false;
    }
    let rest = m - (r - 3);
    debug_assert!(rest.rem_euclid(8) == 3);
    // rest = 3 mod 8 is never of the form 4^a(8b+7), and any three-square
    // decomposition of a 3 mod 8 number has all parts odd.
    debug_assert!(is_sum_of_three_squares(rest));
    true
}

/// Smallest `r` with `decompose_odd_squares(M, r)` defined; always at most 10.
pub fn min_odd_squares(m: i64) -> i64 {
    assert!(m >= 1);
    match m.rem_euclid(8) {
        1 => {
            let t = isqrt(m);
            if t * t == m {
                1
            } else {
                9
            }
        }
        2 => {
            // Both squares in a two-square decomposition of a 2 mod 8 number
            // are forced odd.
            if is_sum_of_two_squares(m) {
                2
            } else {
                10
            }
        }
        k => {
            // m = k (mod 8) with 3 <= k <= 8 (0 meaning 8) and m >= k, so
            // exactly k odd squares always work and fewer never do.
            if k == 0 {
                8
            } else {
                k
            }
        }
    }
}

/// Result of sweeping `min_odd_squares` over `1..=max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub max: i64,
    pub max_min_r: i64,
    /// Smallest `M` attaining the maximal minimal `r`.
    pub first_extremal: Option<i64>,
    pub extremal_count: u64,
}

/// Sweep `min_odd_squares` over `1..=max` (data-parallel when enabled).
pub fn sweep_min_odd_squares(max: i64) -> SweepReport {
    assert!(max >= 1);
    let chunk = 4096u64;
    let n_chunks = (max as u64).div_ceil(chunk);
    let partial = parallel::ordered_map_range(0..n_chunks, |c| {
        let lo = (c * chunk + 1) as i64;
        let hi = ((c + 1) * chunk).min(max as u64) as i64;
        let mut best = 0;
        let mut first = None;
        let mut count = 0u64;
        for m in lo..=hi {
            let r = min_odd_squares(m);
            if r > best {
                best = r;
                first = Some(m);
                count = 1;
            } else if r == best {
                count += 1;
            }
        }
        (best, first, count)
    });
    let mut report = SweepReport {
        max,
        max_min_r: 0,
        first_extremal: None,
        extremal_count: 0,
    };
    for (best, first, count) in partial {
        if best > report.max_min_r {
            report.max_min_r = best;
            report.first_extremal = first;
            report.extremal_count = count;
        } else if best == report.max_min_r {
            report.extremal_count += count;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_square_examples() {
        assert!(!is_sum_of_three_squares(7));
        assert!(is_sum_of_three_squares(3));
        assert!(!is_sum_of_three_squares(28));
    }

    #[test]
    fn two_square_examples() {
        assert!(is_sum_of_two_squares(2));
        assert!(is_sum_of_two_squares(50));
        assert!(!is_sum_of_two_squares(42));
        assert!(!is_sum_of_two_squares(3));
    }

    #[test]
    fn decompose_examples() {
        let d = decompose_odd_squares(42, 10).unwrap();
        assert_eq!(d.parts, vec![5, 3, 1, 1, 1, 1, 1, 1, 1, 1]);
        assert_eq!(decompose_odd_squares(1, 1).unwrap().parts, vec![1]);
        assert!(decompose_odd_squares(42, 2).is_none());
    }

    #[test]
    fn min_examples() {
        assert_eq!(min_odd_squares(42), 10);
        assert_eq!(min_odd_squares(1), 1);
        assert_eq!(min_odd_squares(4), 4);
        assert_eq!(min_odd_squares(2), 2);
        assert_eq!(min_odd_squares(8), 8);
        assert_eq!(min_odd_squares(17), 9);
        assert_eq!(min_odd_squares(25), 1);
    }

    /// Independent oracle: dynamic programming over reachable sums.
    fn oracle_reachable(max_m: usize, max_r: usize) -> Vec<Vec<bool>> {
        let mut reach = vec![vec![false; max_m + 1]; max_r + 1];
        reach[0][0] = true;
        for r in 1..=max_r {
            for m in 1..=max_m {
                let mut t = 1;
                while t * t <= m {
                    if reach[r - 1][m - t * t] {
                        reach[r][m] = true;
                        break;
                    }
                    t += 2;
                }
            }
        }
        reach
    }

    #[test]
    fn oracle_agreement_small() {
        let max_m = 5000;
        let max_r = 16;
        let reach = oracle_reachable(max_m, max_r);
        for m in 1..=max_m as i64 {
            let mut oracle_min = None;
            for r in 1..=max_r as i64 {
                let dec = decompose_odd_squares(m, r);
                let expected = r <= max_r as i64 && reach[r as usize][m as usize];
                assert_eq!(dec.is_some(), expected, "M={m} r={r}");
                if let Some(d) = dec {
                    assert_eq!(d.parts.len(), r as usize);
                    assert!(d.parts.iter().all(|&t| t >= 1 && t % 2 == 1));
                    assert!(d.parts.windows(2).all(|p| p[0] >= p[1]));
                    assert_eq!(d.parts.iter().map(|&t| t * t).sum::<i64>(), m);
                    if oracle_min.is_none() {
                        oracle_min = Some(r);
                    }
                }
            }
            if let Some(r0) = oracle_min {
                assert_eq!(min_odd_squares(m), r0, "M={m}");
            } else {
                // Minimum above 16 never happens in range.
                panic!("no decomposition found for M={m} with r <= {max_r}");
            }
        }
    }

    #[test]
    fn sweep_small() {
        let report = sweep_min_odd_squares(100);
        assert_eq!(report.max_min_r, 10);
        assert_eq!(report.first_extremal, Some(42));
    }
}
