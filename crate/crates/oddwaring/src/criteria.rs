//! Filters for representability by sums of odd squares.
//!
//! The necessary conditions are: the diagonal parity congruences
//! `m_ii = B(w, d_i) (mod 2)`, the residue condition `r = Q(w) (mod 8)` with
//! `r <= Q(w)`, and the cap `r <= r_{K,w}`.  On the sufficient side,
//! [`find_split`] searches for non-negative parts on the w indices summing to
//! the residue `k` whose removal from the diagonal keeps the form positive
//! definite; success forces representability by `Sigma_{k+8}`.

use serde::Serialize;

use crate::gram::GramMatrix;
use crate::{CosetSpec, Error, Result};

/// Outcome of evaluating the necessary conditions on a coset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NecessaryReport {
    /// Diagonal parity congruences `m_ii = B(w, d_i) (mod 2)` for all `i`.
    pub parity_ok: bool,
    /// `Q(w)`.
    pub q_w: i64,
    /// The cap `r <= Q(w)`.
    pub r_cap_qw: i64,
    /// `r_{K,w}`: largest positive integer `<= sum of m_ii over w` congruent
    /// to `Q(w)` mod 8; `None` when no positive such integer exists.
    pub r_kw: Option<i64>,
    /// All admissible `r` values: `r = Q(w) (mod 8)`, `1 <= r <= min(Q(w), r_{K,w})`.
    pub admissible_r: Vec<i64>,
}

/// Evaluate the necessary conditions for a positive definite coset.
pub fn necessary_conditions(coset: &CosetSpec) -> Result<NecessaryReport> {
    if !coset.gram().is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let q_w = coset.q_w();
    let parity_ok = crate::gram::diag_parity_ok(coset.gram(), coset.w_indices());
    let cap = coset.w_diag_sum();
    let r_kw = largest_congruent_le(cap, q_w);
    let mut admissible_r = Vec::new();
    if let Some(r_kw) = r_kw {
        let top = r_kw.min(q_w);
        let mut r = q_w.rem_euclid(8);
        if r == 0 {
            r = 8;
        }
        while r <= top {
            admissible_r.push(r);
            r += 8;
        }
    }
    Ok(NecessaryReport {
        parity_ok,
        q_w,
        r_cap_qw: q_w,
        r_kw,
        admissible_r,
    })
}

/// Largest positive integer `<= cap` congruent to `target` mod 8.
pub(crate) fn largest_congruent_le(cap: i64, target: i64) -> Option<i64> {
    if cap < 1 {
        return None;
    }
    let mut r = cap - (cap - target).rem_euclid(8);
    if r > cap {
        r -= 8;
    }
    (r >= 1).then_some(r)
}

/// `r = Q(w) (mod 8)`, the congruence consequence of the 2-adic lemma.
pub fn lemma1_congruence_filter(coset: &CosetSpec, r: i64) -> bool {
    (r - coset.q_w()).rem_euclid(8) == 0
}

/// The Minkowski lower-bound constants: `Q(x) >= C(n) m_ii x_i^2` with
/// `C(2) = 3/4`, `C(3) = 1/2`, `C(4) = 1/5`.
///
/// Returns true iff `C(n) m_ii > k` (exact fraction comparison), the
/// sufficient condition for `Q(x) - k x_i^2` to stay positive definite.
pub fn minkowski_lower_bound_ok(gram: &GramMatrix, i: usize, k: i64) -> Result<bool> {
    let m_ii = gram.entry(i, i);
    match gram.n() {
        2 => Ok(3 * m_ii > 4 * k),
        3 => Ok(m_ii > 2 * k),
        4 => Ok(m_ii > 5 * k),
        n => Err(Error::UnsupportedDimension {
            n,
            what: "Minkowski lower-bound constant",
        }),
    }
}

/// Residue of `Q(w)` mod 8 mapped into `1..=8`.
pub fn split_residue(q_w: i64) -> i64 {
    let k = q_w.rem_euclid(8);
    if k == 0 {
        8
    } else {
        k
    }
}

/// Certificate that removing `parts` from the diagonal on the w indices keeps
/// the form positive definite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitCertificate {
    /// Residue `k` of `Q(w)` mod 8, in `1..=8`.
    pub k: i64,
    /// Non-negative parts on the w indices, summing to `k`.
    pub parts: Vec<i64>,
    /// `M - sum of parts[i] E_ii`, positive definite.
    pub reduced: GramMatrix,
}

/// Search all compositions of `k` into parts on the w indices, in
/// lexicographically smallest parts order, returning the first one whose
/// reduced matrix stays positive definite.
///
/// Requires `Q(w) > 8`: below that the coset is already handled by the small
/// admissible `r` directly.
pub fn find_split(coset: &CosetSpec) -> Result<Option<SplitCertificate>> {
    if !coset.gram().is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let q_w = coset.q_w();
    if q_w <= 8 {
        return Err(Error::Precondition(format!(
            "find_split requires Q(w) > 8, got {q_w}"
        )));
    }
    let k = split_residue(q_w);
    let t = coset.w_indices().len();
    let mut parts = vec![0i64; t];
    Ok(
        search_compositions(coset.gram(), coset.w_indices(), k, &mut parts, 0).map(|parts| {
            let reduced = coset.gram().minus_diagonal(coset.w_indices(), &parts);
            SplitCertificate { k, parts, reduced }
        }),
    )
}

fn search_compositions(
    gram: &GramMatrix,
    indices: &[usize],
    remaining: i64,
    parts: &mut Vec<i64>,
    pos: usize,
) -> Option<Vec<i64>> {
    if pos + 1 == parts.len() {
        parts[pos] = remaining;
        let reduced = gram.minus_diagonal(indices, parts);
        if reduced.is_positive_definite() {
            return Some(parts.clone());
        }
        return None;
    }
    for v in 0..=remaining {
        parts[pos] = v;
        if let Some(found) = search_compositions(gram, indices, remaining - v, parts, pos + 1) {
            return Some(found);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GramMatrix;

    fn g(rows: &[&[i64]]) -> GramMatrix {
        GramMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn necessary_rank1() {
        let c = CosetSpec::new(GramMatrix::identity(1), &[0]).unwrap();
        let rep = necessary_conditions(&c).unwrap();
        assert!(rep.parity_ok);
        assert_eq!(rep.q_w, 1);
        assert_eq!(rep.r_kw, Some(1));
        assert_eq!(rep.admissible_r, vec![1]);
    }

    #[test]
    fn necessary_witness_rank2() {
        let c = CosetSpec::new(g(&[&[8, 2], &[2, 12]]), &[1]).unwrap();
        let rep = necessary_conditions(&c).unwrap();
        assert_eq!(rep.q_w, 12);
        assert_eq!(rep.r_kw, Some(12));
        assert_eq!(rep.admissible_r, vec![4, 12]);
    }

    #[test]
    fn necessary_witness_rank3() {
        let c = CosetSpec::new(GramMatrix::diagonal(&[3, 3, 23]).unwrap(), &[0, 1, 2]).unwrap();
        let rep = necessary_conditions(&c).unwrap();
        assert_eq!(rep.q_w, 29);
        assert_eq!(rep.r_kw, Some(29));
        assert_eq!(rep.admissible_r, vec![5, 13, 21, 29]);
    }

    #[test]
    fn lower_bound_examples() {
        let g2 = GramMatrix::diagonal(&[13, 13]).unwrap();
        assert!(minkowski_lower_bound_ok(&g2, 0, 4).unwrap());
        let g4 = GramMatrix::diagonal(&[31, 31, 31, 31]).unwrap();
        assert!(minkowski_lower_bound_ok(&g4, 3, 6).unwrap());
        let g3 = GramMatrix::diagonal(&[10, 10, 10]).unwrap();
        assert!(!minkowski_lower_bound_ok(&g3, 1, 5).unwrap());
        assert!(minkowski_lower_bound_ok(&GramMatrix::identity(5), 0, 1).is_err());
    }

    #[test]
    fn split_single_index() {
        let c = CosetSpec::new(GramMatrix::diagonal(&[20, 20]).unwrap(), &[0]).unwrap();
        let cert = find_split(&c).unwrap().unwrap();
        assert_eq!(cert.k, 4);
        assert_eq!(cert.parts, vec![4]);
        assert_eq!(cert.reduced, GramMatrix::diagonal(&[16, 20]).unwrap());
    }

    #[test]
    fn split_fails_on_exceptional_matrix() {
        let m = g(&[
            &[9, 3, 3, 2],
            &[3, 9, 3, -4],
            &[3, 3, 9, -4],
            &[2, -4, -4, 9],
        ]);
        let c = CosetSpec::new(m, &[0, 3]).unwrap();
        assert!(find_split(&c).unwrap().is_none());
    }

    #[test]
    fn split_guards_small_qw() {
        let c = CosetSpec::new(GramMatrix::identity(2), &[0, 1]).unwrap();
        assert!(matches!(find_split(&c), Err(Error::Precondition(_))));
    }

    #[test]
    fn congruence_filter() {
        let c = CosetSpec::new(g(&[&[8, 2], &[2, 12]]), &[1]).unwrap();
        assert!(lemma1_congruence_filter(&c, 4));
        assert!(!lemma1_congruence_filter(&c, 5));
        let c3 = CosetSpec::new(GramMatrix::diagonal(&[3, 3, 23]).unwrap(), &[0, 1, 2]).unwrap();
        assert!(lemma1_congruence_filter(&c3, 13));
    }
}
