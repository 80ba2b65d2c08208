//! Exhaustive search for integer matrices `T` with `M = T T^t` whose columns
//! have odd coordinate sum over the w indices, plus coset isometry testing.
//!
//! The search fills `T` column by column.  Candidate columns are bounded
//! entrywise by `|t_ij| <= isqrt(m_ii)` and must satisfy the parity clause, so
//! the tree is finite; running budgets on the remaining diagonal and
//! off-diagonal targets prune it.  In canonical mode the column multiset is
//! quotiented by requiring columns in non-increasing lexicographic order with
//! a positive leading entry, which negation and column permutation always
//! allow.  A completed tree with no hit is a proof of non-representability.

use serde::Serialize;

use crate::criteria;
use crate::gram::GramMatrix;
use crate::{CosetSpec, Error, Result};

/// Integer certificate `T` for a representation by a sum of `cols` odd squares.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub entries: Vec<i64>,
}

impl RepMatrix {
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.cols + j]
    }

    /// Exact post-hoc verification of both clauses: `M = T T^t` and odd
    /// column sums over the w indices.
    pub fn verify(&self, coset: &CosetSpec) -> bool {
        let m = coset.gram();
        if self.rows != m.n() {
            return false;
        }
        for i in 0..self.rows {
            for k in i..self.rows {
                let dot: i128 = (0..self.cols)
                    .map(|j| self.entry(i, j) as i128 * self.entry(k, j) as i128)
                    .sum();
                if dot != m.entry(i, k) as i128 {
                    return false;
                }
            }
        }
        (0..self.cols).all(|j| {
            let s: i64 = coset.w_indices().iter().map(|&i| self.entry(i, j)).sum();
            s.rem_euclid(2) == 1
        })
    }
}

/// Node budget and symmetry-reduction switches for the search.
#[derive(Debug, Clone)]
pub struct SearchBudget {
    /// Optional cap on visited search nodes.  `None` means run to completion,
    /// which is required for non-representability proofs.
    pub max_nodes: Option<u64>,
    /// Quotient the column permutation and sign symmetry (default).
    pub canonicalize_columns: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: None,
            canonicalize_columns: true,
        }
    }
}

impl SearchBudget {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn with_max_nodes(max_nodes: u64) -> Self {
        SearchBudget {
            max_nodes: Some(max_nodes),
            canonicalize_columns: true,
        }
    }
}

/// Search outcome.  `NotRepresentable` is only returned after the tree has
/// been explored completely, so it is a proof.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(RepMatrix),
    NotRepresentable,
    Exhausted,
}

impl SearchOutcome {
    pub fn found(&self) -> Option<&RepMatrix> {
        match self {
            SearchOutcome::Found(t) => Some(t),
            _ => None,
        }
    }
}

/// Search statistics reported alongside the outcome.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    pub nodes: u64,
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

/// All candidate columns: entrywise bounded, odd coordinate sum on the w
/// indices, optionally sign-canonical, sorted in decreasing lexicographic
/// order.
fn candidate_columns(coset: &CosetSpec, canonical: bool) -> Vec<Vec<i64>> {
    let m = coset.gram();
    let n = m.n();
    let bounds: Vec<i64> = (0..n).map(|i| isqrt(m.entry(i, i))).collect();
    let mut cols = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(
        pos: usize,
        n: usize,
        bounds: &[i64],
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
        w: &[usize],
        canonical: bool,
    ) {
        if pos == n {
            let s: i64 = w.iter().map(|&i| cur[i]).sum();
            if s.rem_euclid(2) == 1 {
                if canonical {
                    if let Some(&first) = cur.iter().find(|&&v| v != 0) {
                        if first < 0 {
                            return;
                        }
                    }
                }
                out.push(cur.clone());
            }
            return;
        }
        for v in -bounds[pos]..=bounds[pos] {
            cur[pos] = v;
            rec(pos + 1, n, bounds, cur, out, w, canonical);
        }
        cur[pos] = 0;
    }
    rec(
        0,
        n,
        &bounds,
        &mut cur,
        &mut cols,
        coset.w_indices(),
        canonical,
    );
    cols.sort_by(|a, b| b.cmp(a));
    cols
}

struct SearchCtx<'a> {
    cols: &'a [Vec<i64>],
    n: usize,
    w: &'a [usize],
    canonical: bool,
    max_nodes: Option<u64>,
    nodes: u64,
    /// Chosen column indices along the current path.
    path: Vec<usize>,
}

enum Walk {
    Found(Vec<usize>),
    Done,
    Budget,
}

impl<'a> SearchCtx<'a> {
    /// `rem[i]`: remaining diagonal budget; `off`: remaining off-diagonal
    /// targets (upper triangle, row-major); `r_left`: columns still to place;
    /// `start`: minimum candidate index in canonical mode.
    fn walk(&mut self, rem: &mut [i64], off: &mut [i64], r_left: usize, start: usize) -> Walk {
        self.nodes += 1;
        if let Some(cap) = self.max_nodes {
            if self.nodes > cap {
                return Walk::Budget;
            }
        }
        if r_left == 0 {
            if rem.iter().all(|&v| v == 0) && off.iter().all(|&v| v == 0) {
                return Walk::Found(self.path.clone());
            }
            return Walk::Done;
        }
        // Each remaining column has an odd w-sum, hence contributes at least
        // one to the w diagonal budget.
        let w_budget: i64 = self.w.iter().map(|&i| rem[i]).sum();
        if w_budget < r_left as i64 {
            return Walk::Done;
        }
        let lo = if self.canonical { start } else { 0 };
        'cand: for s in lo..self.cols.len() {
            let c = &self.cols[s];
            for i in 0..self.n {
                if c[i] * c[i] > rem[i] {
                    continue 'cand;
                }
            }
            // Apply the column.
            for i in 0..self.n {
                rem[i] -= c[i] * c[i];
            }
            let mut t = 0;
            let mut feasible = true;
            for i in 0..self.n {
                for j in (i + 1)..self.n {
                    off[t] -= c[i] * c[j];
                    // Cauchy-Schwarz on the remaining columns.
                    if (off[t] as i128) * (off[t] as i128) > (rem[i] as i128) * (rem[j] as i128) {
                        feasible = false;
                    }
                    t += 1;
                }
            }
            let next_left = r_left - 1;
            let per_row_ok = (0..self.n).all(|i| {
                let b = isqrt(rem[i]);
                rem[i] <= next_left as i64 * b * b
            });
            if feasible && per_row_ok {
                self.path.push(s);
                match self.walk(rem, off, next_left, s) {
                    Walk::Found(p) => return Walk::Found(p),
                    Walk::Budget => {
                        self.path.pop();
                        // Undo before propagating.
                        undo(rem, off, c, self.n);
                        return Walk::Budget;
                    }
                    Walk::Done => {}
                }
                self.path.pop();
            }
            undo(rem, off, c, self.n);
        }
        Walk::Done
    }
}

fn undo(rem: &mut [i64], off: &mut [i64], c: &[i64], n: usize) {
    for i in 0..n {
        rem[i] += c[i] * c[i];
    }
    let mut t = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            off[t] += c[i] * c[j];
            t += 1;
        }
    }
}

/// Decide `K + w/2 -> Sigma_r` by exhaustive pruned search.
///
/// Returns `Found` with a certificate, `NotRepresentable` only after complete
/// exhaustion, or `Exhausted` when the node budget ran out first.
pub fn find_representation(
    coset: &CosetSpec,
    r: usize,
    budget: &SearchBudget,
) -> Result<(SearchOutcome, SearchStats)> {
    if r == 0 {
        return Err(Error::InvalidInput("r must be positive".into()));
    }
    if !coset.gram().is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    let m = coset.gram();
    let n = m.n();
    let cols = candidate_columns(coset, budget.canonicalize_columns);
    let mut rem: Vec<i64> = (0..n).map(|i| m.entry(i, i)).collect();
    let mut off: Vec<i64> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            off.push(m.entry(i, j));
        }
    }
    let mut ctx = SearchCtx {
        cols: &cols,
        n,
        w: coset.w_indices(),
        canonical: budget.canonicalize_columns,
        max_nodes: budget.max_nodes,
        nodes: 0,
        path: Vec::new(),
    };
    let walk = ctx.walk(&mut rem, &mut off, r, 0);
    let stats = SearchStats { nodes: ctx.nodes };
    let outcome = match walk {
        Walk::Found(path) => {
            let mut entries = vec![0i64; n * r];
            for (j, &s) in path.iter().enumerate() {
                for i in 0..n {
                    entries[i * r + j] = cols[s][i];
                }
            }
            let t = RepMatrix {
                rows: n,
                cols: r,
                entries,
            };
            debug_assert!(t.verify(coset));
            SearchOutcome::Found(t)
        }
        Walk::Done => SearchOutcome::NotRepresentable,
        Walk::Budget => SearchOutcome::Exhausted,
    };
    Ok((outcome, stats))
}

/// Minimal-rank search outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinRepOutcome {
    Found { r: usize, rep: RepMatrix },
    NoneAdmissible,
    Exhausted { r: usize },
}

/// Smallest admissible `r <= r_max` with a representation, trying admissible
/// values (`r = Q(w) mod 8`, `r <= min(Q(w), r_{K,w})`) in increasing order.
pub fn min_representation(
    coset: &CosetSpec,
    r_max: usize,
    budget: &SearchBudget,
) -> Result<(MinRepOutcome, SearchStats)> {
    if r_max == 0 {
        return Err(Error::InvalidInput("r_max must be positive".into()));
    }
    let report = criteria::necessary_conditions(coset)?;
    let mut total = SearchStats::default();
    if !report.parity_ok {
        return Ok((MinRepOutcome::NoneAdmissible, total));
    }
    for &r in &report.admissible_r {
        if r as usize > r_max {
            break;
        }
        let (outcome, stats) = find_representation(coset, r as usize, budget)?;
        total.nodes += stats.nodes;
        match outcome {
            SearchOutcome::Found(rep) => {
                return Ok((MinRepOutcome::Found { r: r as usize, rep }, total))
            }
            SearchOutcome::Exhausted => {
                return Ok((MinRepOutcome::Exhausted { r: r as usize }, total))
            }
            SearchOutcome::NotRepresentable => {}
        }
    }
    Ok((MinRepOutcome::NoneAdmissible, total))
}

/// All lattice vectors of a given norm, found by exact bounded box search.
fn vectors_of_norm(m: &GramMatrix, norm: i64) -> Vec<Vec<i64>> {
    let n = m.n();
    let det = m.determinant().expect("determinant overflow");
    debug_assert!(det > 0);
    // x_i^2 <= Q(x) * (M^{-1})_ii = norm * cof_ii / det.
    let mut bounds = vec![0i64; n];
    for i in 0..n {
        let idx: Vec<usize> = (0..n).filter(|&k| k != i).collect();
        let cof = principal_minor(m, &idx);
        let num = norm as i128 * cof;
        let mut b = ((num / det) as f64).sqrt() as i64 + 2;
        while (b as i128) * (b as i128) * det > num {
            b -= 1;
        }
        bounds[i] = b.max(0);
    }
    let mut out = Vec::new();
    let mut x = vec![0i64; n];
    fn rec(
        pos: usize,
        x: &mut Vec<i64>,
        bounds: &[i64],
        m: &GramMatrix,
        norm: i64,
        out: &mut Vec<Vec<i64>>,
    ) {
        if pos == x.len() {
            if m.quadratic_value(x).ok() == Some(norm) {
                out.push(x.clone());
            }
            return;
        }
        for v in -bounds[pos]..=bounds[pos] {
            x[pos] = v;
            rec(pos + 1, x, bounds, m, norm, out);
        }
        x[pos] = 0;
    }
    rec(0, &mut x, &bounds, m, norm, &mut out);
    out
}

fn principal_minor(m: &GramMatrix, idx: &[usize]) -> i128 {
    if idx.is_empty() {
        return 1;
    }
    let rows: Vec<Vec<i64>> = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| m.entry(i, j)).collect())
        .collect();
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    GramMatrix::from_rows(&refs)
        .expect("principal submatrix is symmetric")
        .determinant()
        .expect("determinant overflow")
}

/// Decide whether two cosets are isometric: an integer basis transform `U`
/// with `U M_b U^t = M_a` mapping the half-vector correctly mod 2.
pub fn cosets_isometric(a: &CosetSpec, b: &CosetSpec) -> Result<bool> {
    let (ma, mb) = (a.gram(), b.gram());
    if ma.n() != mb.n() {
        return Err(Error::DimensionMismatch {
            expected: ma.n(),
            got: mb.n(),
        });
    }
    if ma.n() > 4 {
        return Err(Error::UnsupportedDimension {
            n: ma.n(),
            what: "coset isometry testing",
        });
    }
    if !ma.is_positive_definite() || !mb.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    if ma.determinant()? != mb.determinant()? {
        return Ok(false);
    }
    if a.q_w().rem_euclid(8) != b.q_w().rem_euclid(8) {
        // Q(w) mod 8 is an isometry invariant of the coset.
        return Ok(false);
    }
    let n = ma.n();
    // Candidate images per basis vector, by norm.
    let mut images: Vec<Vec<Vec<i64>>> = Vec::with_capacity(n);
    for i in 0..n {
        let v = vectors_of_norm(mb, ma.entry(i, i));
        if v.is_empty() {
            return Ok(false);
        }
        images.push(v);
    }
    let wa = a.w_vector();
    let wb = b.w_vector();
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(n);
    fn rec(
        pos: usize,
        n: usize,
        ma: &GramMatrix,
        mb: &GramMatrix,
        images: &[Vec<Vec<i64>>],
        rows: &mut Vec<Vec<i64>>,
        wa: &[i64],
        wb: &[i64],
    ) -> bool {
        if pos == n {
            // U integral with U M_b U^t = M_a and equal determinants is
            // automatically unimodular; only the half-vector class remains.
            for j in 0..n {
                let s: i64 = (0..n).map(|i| wa[i] * rows[i][j]).sum();
                if (s - wb[j]).rem_euclid(2) != 0 {
                    return false;
                }
            }
            return true;
        }
        'cand: for cand in &images[pos] {
            for (k, row) in rows.iter().enumerate() {
                let dot = mb.bilinear(cand, row).expect("dimension checked");
                if dot != ma.entry(pos, k) as i128 {
                    continue 'cand;
                }
            }
            rows.push(cand.clone());
            if rec(pos + 1, n, ma, mb, images, rows, wa, wb) {
                return true;
            }
            rows.pop();
        }
        false
    }
    Ok(rec(0, n, ma, mb, &images, &mut rows, &wa, &wb))
}
