//! Case-by-case candidate surveys over Minkowski-reduced Gram matrices for
//! ranks 2 to 4, plus the lower-bound witness suite.
//!
//! Each case fixes the rank `n`, a family of w index sets, and enumeration
//! bounds that make the candidate set finite.  Candidates pass through the
//! filter chain: diagonal parity, the case assumption (`Q(w) > n+10`,
//! `r_{K,w} >= n+10`, residue `k <= n+2`), the `C(n)` large-diagonal
//! discharge on the top w index, the split search, and a direct
//! representation search at the admissible `r` below the target.  Survivors
//! are exactly the candidates failing every discharge; the expected survivor
//! lists are empty except for rank 4 with its four exceptional matrices,
//! which are representable only at `r = 14` exactly.
//!
//! Cases whose top w index is below `n` leave the last diagonal entry
//! unbounded; those run the raising loop: for each fixed prefix the last
//! diagonal starts at its smallest admissible value and increases by 2 until
//! a split appears.  Termination is certified up front by finding parts that
//! make the leading principal block of the reduced form positive definite,
//! since then the full determinant grows linearly in the raised entry.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criteria;
use crate::gram::{self, GramMatrix};
use crate::parallel;
use crate::repsearch::{self, RepMatrix, SearchBudget, SearchOutcome};
use crate::{CosetSpec, Error, Result};

/// Hard cap on raising iterations per prefix; hitting it is reported as a
/// resource error, never silently truncated.
const MAX_RAISES: u64 = 100_000;

/// One survey case: rank, label, w subcases and bounds.
#[derive(Debug, Clone, Serialize)]
pub struct CaseSpec {
    pub label: String,
    pub n: usize,
    /// Subcase w index sets, 0-based internally.
    w_sets: Vec<Vec<usize>>,
    pub scaled: bool,
    /// Apply the C(n) shortcut before the split search (candidate counts
    /// change, survivors never do).
    pub use_discharge: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CaseKind {
    /// Assumption and discharge bounds contradict outright.
    Analytic,
    /// All diagonal entries bounded by `cap`; plain enumeration.
    Direct { cap: i64 },
    /// First `n-1` diagonals bounded by `cap`; last diagonal raised.
    IterateLast { cap: i64 },
    /// Rank 4, top w index 2: `m22 <= cap`, `m33` bounded per tuple by the
    /// `(8/3)C0` square-completion rule, `m44` raised.
    TailBounded { cap: i64 },
    /// Rank 4, `w = {1}`: `m11 <= cap`, `m22` bounded by the
    /// `2 m234^2 / m11'` rule, `m33` by a Schur-complement envelope, `m44`
    /// raised.
    HeadBounded { cap: i64 },
}

fn all_labels(n: usize) -> &'static [&'static str] {
    match n {
        2 => &["1-i", "1-ii"],
        3 => &["2-i", "2-ii", "2-iii"],
        4 => &["3-i", "3-ii", "3-iii", "3-iv"],
        _ => &[],
    }
}

impl CaseSpec {
    /// The case with the given label, at full or scaled bounds.
    pub fn by_label(label: &str, scaled: bool) -> Result<CaseSpec> {
        let (n, w_sets): (usize, Vec<Vec<usize>>) = match label {
            "1-i" => (2, vec![vec![0], vec![1]]),
            "1-ii" => (2, vec![vec![0, 1]]),
            "2-i" => (3, vec![vec![0], vec![1], vec![2]]),
            "2-ii" => (3, vec![vec![0, 1]]),
            "2-iii" => (3, vec![vec![2], vec![0, 2], vec![1, 2], vec![0, 1, 2]]),
            "3-i" => (
                4,
                vec![
                    vec![3],
                    vec![0, 3],
                    vec![1, 3],
                    vec![2, 3],
                    vec![0, 1, 3],
                    vec![0, 2, 3],
                    vec![1, 2, 3],
                    vec![0, 1, 2, 3],
                ],
            ),
            "3-ii" => (4, vec![vec![2], vec![0, 2], vec![1, 2], vec![0, 1, 2]]),
            "3-iii" => (4, vec![vec![1], vec![0, 1]]),
            "3-iv" => (4, vec![vec![0]]),
            other => return Err(Error::InvalidInput(format!("unknown case label: {other}"))),
        };
        Ok(CaseSpec {
            label: label.to_string(),
            n,
            w_sets,
            scaled,
            use_discharge: true,
        })
    }

    /// All cases for a rank.
    pub fn standard(n: usize, scaled: bool) -> Result<Vec<CaseSpec>> {
        let labels = all_labels(n);
        if labels.is_empty() {
            return Err(Error::UnsupportedDimension {
                n,
                what: "survey cases",
            });
        }
        labels.iter().map(|l| Self::by_label(l, scaled)).collect()
    }

    /// Restrict to a single w subcase, given with 1-based indices.
    pub fn restrict_w(mut self, w_one_based: &[usize]) -> Result<CaseSpec> {
        let w: Vec<usize> = w_one_based.iter().map(|&i| i.wrapping_sub(1)).collect();
        if !self.w_sets.contains(&w) {
            return Err(Error::InvalidInput(format!(
                "w={w_one_based:?} is not a subcase of case {}",
                self.label
            )));
        }
        self.w_sets = vec![w];
        Ok(self)
    }

    pub fn w_sets_one_based(&self) -> Vec<Vec<usize>> {
        self.w_sets
            .iter()
            .map(|w| w.iter().map(|&i| i + 1).collect())
            .collect()
    }

    fn kind(&self) -> CaseKind {
        let full = |cap: i64, small: i64| if self.scaled { small } else { cap };
        match self.label.as_str() {
            "1-i" | "2-i" => CaseKind::Analytic,
            "1-ii" => CaseKind::Direct { cap: 5 },
            "2-ii" => CaseKind::IterateLast { cap: 9 },
            "2-iii" => CaseKind::Direct { cap: 9 },
            "3-i" => CaseKind::Direct { cap: full(30, 9) },
            "3-ii" => CaseKind::IterateLast { cap: full(30, 9) },
            "3-iii" => CaseKind::TailBounded { cap: full(30, 9) },
            "3-iv" => CaseKind::HeadBounded { cap: 30 },
            _ => unreachable!("labels validated in by_label"),
        }
    }
}

/// Per-filter rejection counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub parity: u64,
    pub assumption: u64,
    pub discharged: u64,
    pub split_found: u64,
    /// Candidates with no split but a direct representation at an admissible
    /// `r` strictly below the target `n + 10`.
    #[serde(default)]
    pub direct: u64,
    /// Candidates with no split and no representation at any admissible `r`;
    /// such cosets lie outside the representable family altogether.
    #[serde(default)]
    pub unrepresentable: u64,
    /// Raising-loop prefixes where no composition keeps the reduced leading
    /// block positive definite, so no completion ever splits; discharged as a
    /// whole because their necessity cap pins every completion to the target.
    #[serde(default)]
    pub capped_prefixes: u64,
}

impl FilterCounts {
    fn merge(&mut self, other: &FilterCounts) {
        self.parity += other.parity;
        self.assumption += other.assumption;
        self.discharged += other.discharged;
        self.split_found += other.split_found;
        self.direct += other.direct;
        self.unrepresentable += other.unrepresentable;
        self.capped_prefixes += other.capped_prefixes;
    }
}

/// Result of one work unit; also the snapshot payload.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Partial {
    scanned: u64,
    counts: FilterCounts,
    survivors: Vec<CosetSpec>,
}

impl Partial {
    fn merge(&mut self, other: &Partial) {
        self.scanned += other.scanned;
        self.counts.merge(&other.counts);
        self.survivors.extend(other.survivors.iter().cloned());
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotLine {
    unit: u64,
    partial: Partial,
}

/// Full report of one case run.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub case: String,
    pub n: usize,
    pub scaled: bool,
    pub w_sets: Vec<Vec<usize>>,
    pub candidates_scanned: u64,
    pub filtered_by: FilterCounts,
    pub survivors: Vec<CosetSpec>,
    /// Parallel to `survivors`; filled by [`certify_all`].
    pub certificates: Vec<Option<RepMatrix>>,
}

fn q_of_w(flat: &[i64], n: usize, w: &[usize]) -> i64 {
    let mut q = 0;
    for &i in w {
        for &j in w {
            q += flat[i * n + j];
        }
    }
    q
}

/// `B(w, d_j) mod 2`.
fn b_col_parity(flat: &[i64], n: usize, w: &[usize], j: usize) -> i64 {
    w.iter()
        .map(|&i| flat[i * n + j])
        .sum::<i64>()
        .rem_euclid(2)
}

/// Strict `C(n) m > k`.
fn discharge_fires(n: usize, m_diag: i64, k: i64) -> bool {
    match n {
        2 => 3 * m_diag > 4 * k,
        3 => m_diag > 2 * k,
        4 => m_diag > 5 * k,
        _ => unreachable!("survey ranks are 2..=4"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Parity,
    Assumption,
    Discharged,
    SplitFound,
    Direct,
    Unrepresentable,
    Survivor,
}

/// Classify a candidate that passed every filter but has no split: search
/// every admissible `r` in ascending order.  A hit below the target
/// discharges the candidate outright; a hit at or above the target makes it
/// a survivor (above the target, certification will raise the contradiction
/// flag).  No hit at any admissible `r` proves the coset lies outside the
/// representable family, which also discharges it.
fn no_split_verdict(coset: &CosetSpec, target: i64) -> Result<Verdict> {
    let q_w = coset.q_w();
    let cap = criteria::largest_congruent_le(coset.w_diag_sum(), q_w)
        .unwrap_or(0)
        .min(q_w);
    let mut r = q_w.rem_euclid(8);
    if r == 0 {
        r = 8;
    }
    let budget = SearchBudget::unbounded();
    while r <= cap {
        let (outcome, _) = repsearch::find_representation(coset, r as usize, &budget)?;
        if matches!(outcome, SearchOutcome::Found(_)) {
            return Ok(if r < target {
                Verdict::Direct
            } else {
                Verdict::Survivor
            });
        }
        r += 8;
    }
    Ok(Verdict::Unrepresentable)
}

/// Filter chain on a complete candidate matrix.
fn decide(m: &GramMatrix, w: &[usize], use_discharge: bool) -> Result<Verdict> {
    let n = m.n();
    if !gram::diag_parity_ok(m, w) {
        return Ok(Verdict::Parity);
    }
    let flat = flatten(m);
    let q_w = q_of_w(&flat, n, w);
    let k = criteria::split_residue(q_w);
    let target = n as i64 + 10;
    let diag_sum: i64 = w.iter().map(|&i| m.entry(i, i)).sum();
    let r_kw = criteria::largest_congruent_le(diag_sum, q_w);
    if q_w <= target || r_kw.is_none_or(|r| r < target) || k > n as i64 + 2 {
        return Ok(Verdict::Assumption);
    }
    let i_t = *w.iter().max().expect("w non-empty");
    if use_discharge && discharge_fires(n, m.entry(i_t, i_t), k) {
        return Ok(Verdict::Discharged);
    }
    let coset = CosetSpec::new(m.clone(), w)?;
    if criteria::find_split(&coset)?.is_some() {
        Ok(Verdict::SplitFound)
    } else {
        no_split_verdict(&coset, target)
    }
}

fn flatten(m: &GramMatrix) -> Vec<i64> {
    let n = m.n();
    let mut flat = vec![0i64; n * n];
    for i in 0..n {
        for j in 0..n {
            flat[i * n + j] = m.entry(i, j);
        }
    }
    flat
}

fn record(verdict: Verdict, m: &GramMatrix, w: &[usize], out: &mut Partial) -> Result<()> {
    out.scanned += 1;
    match verdict {
        Verdict::Parity => out.counts.parity += 1,
        Verdict::Assumption => out.counts.assumption += 1,
        Verdict::Discharged => out.counts.discharged += 1,
        Verdict::SplitFound => out.counts.split_found += 1,
        Verdict::Direct => out.counts.direct += 1,
        Verdict::Unrepresentable => out.counts.unrepresentable += 1,
        Verdict::Survivor => out.survivors.push(CosetSpec::new(m.clone(), w)?),
    }
    Ok(())
}

/// Run one case to completion, optionally resuming from / appending to a
/// JSON-lines snapshot file.
pub fn run_case(case: &CaseSpec, snapshot: Option<&Path>) -> Result<SurveyReport> {
    let kind = case.kind();
    let units: Vec<Unit> = plan_units(case, kind);
    let done: HashMap<u64, Partial> = match snapshot {
        Some(path) if path.exists() => load_snapshot(path)?,
        _ => HashMap::new(),
    };
    let mut writer = match snapshot {
        Some(path) => Some(std::io::BufWriter::new(
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::InvalidInput(format!("snapshot open: {e}")))?,
        )),
        None => None,
    };
    let mut total = Partial::default();
    // Units are processed in chunks: enumeration within a chunk is
    // data-parallel, snapshot lines are appended by this single writer in
    // unit order.
    const CHUNK: usize = 16;
    let mut idx = 0usize;
    while idx < units.len() {
        let hi = (idx + CHUNK).min(units.len());
        let pending: Vec<(u64, Unit)> = (idx..hi)
            .map(|u| (u as u64, units[u].clone()))
            .filter(|(u, _)| !done.contains_key(u))
            .collect();
        let results =
            parallel::ordered_map(pending.clone(), |(_, unit)| run_unit(case, kind, &unit));
        let mut fresh = HashMap::new();
        for ((u, _), res) in pending.into_iter().zip(results) {
            let partial = res?;
            if let Some(w) = writer.as_mut() {
                let line = serde_json::to_string(&SnapshotLine {
                    unit: u,
                    partial: partial.clone(),
                })
                .expect("snapshot serialization");
                writeln!(w, "{line}")
                    .map_err(|e| Error::InvalidInput(format!("snapshot write: {e}")))?;
                w.flush().ok();
            }
            fresh.insert(u, partial);
        }
        for u in idx..hi {
            let u64u = u as u64;
            if let Some(p) = done.get(&u64u).or_else(|| fresh.get(&u64u)) {
                total.merge(p);
            }
        }
        idx = hi;
    }
    let n_surv = total.survivors.len();
    Ok(SurveyReport {
        case: case.label.clone(),
        n: case.n,
        scaled: case.scaled,
        w_sets: case.w_sets_one_based(),
        candidates_scanned: total.scanned,
        filtered_by: total.counts,
        survivors: total.survivors,
        certificates: vec![None; n_surv],
    })
}

fn load_snapshot(path: &Path) -> Result<HashMap<u64, Partial>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("snapshot read: {e}")))?;
    let mut map = HashMap::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::InvalidInput(format!("snapshot read: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SnapshotLine = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("snapshot parse: {e}")))?;
        map.insert(parsed.unit, parsed.partial);
    }
    Ok(map)
}

/// A work unit: one leading diagonal prefix (padded per kind).
#[derive(Debug, Clone)]
struct Unit {
    diag: Vec<i64>,
}

fn plan_units(case: &CaseSpec, kind: CaseKind) -> Vec<Unit> {
    match kind {
        CaseKind::Analytic => Vec::new(),
        CaseKind::Direct { cap } => gram::diagonal_tuples(case.n, cap)
            .into_iter()
            .map(|diag| Unit { diag })
            .collect(),
        CaseKind::IterateLast { cap } => gram::diagonal_tuples(case.n - 1, cap)
            .into_iter()
            .map(|diag| Unit { diag })
            .collect(),
        CaseKind::TailBounded { cap } => gram::diagonal_tuples(2, cap)
            .into_iter()
            .map(|diag| Unit { diag })
            .collect(),
        CaseKind::HeadBounded { cap } => (15..=cap).map(|d| Unit { diag: vec![d] }).collect(),
    }
}

fn run_unit(case: &CaseSpec, kind: CaseKind, unit: &Unit) -> Result<Partial> {
    let mut out = Partial::default();
    match kind {
        CaseKind::Analytic => {}
        CaseKind::Direct { .. } => {
            let mut err = None;
            gram::for_each_reduced_with_diag(&unit.diag, &mut |m| {
                if err.is_some() {
                    return;
                }
                for w in &case.w_sets {
                    match decide(m, w, case.use_discharge) {
                        Ok(v) => {
                            if let Err(e) = record(v, m, w, &mut out) {
                                err = Some(e);
                            }
                        }
                        Err(e) => err = Some(e),
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        CaseKind::IterateLast { .. } => run_iterate_unit(case, unit, &mut out)?,
        CaseKind::TailBounded { .. } => run_tail_unit(case, unit, &mut out)?,
        CaseKind::HeadBounded { .. } => run_head_unit(case, unit, &mut out)?,
    }
    Ok(out)
}

/// Integer bound helpers for the reduction inequalities on hand-rolled loops.
/// Lower bound for `m_2j` (`j = 3, 4`): the cross inequality
/// `m_2j >= -(m11 + m22)/2 + m12 + m_1j` together with `|2 m_2j| <= m22`.
fn m2j_lower(m11: i64, m22: i64, m12: i64, m1j: i64) -> i64 {
    gram::div_ceil_i64(-(m11 + m22) + 2 * (m12 + m1j), 2).max(gram::div_ceil_i64(-m22, 2))
}

/// Valid `m34` range from the rank-4 inequality lists (free of `m44`).
#[allow(clippy::too_many_arguments)]
fn m34_range(
    m11: i64,
    m22: i64,
    m33: i64,
    m12: i64,
    m13: i64,
    m14: i64,
    m23: i64,
    m24: i64,
) -> (i64, i64) {
    let lo_list = [
        -(m11 + m33) + 2 * (m13 + m14),
        -m33,
        -(m22 + m33) - 2 * (m23 + m24),
        -(m22 + m33) + 2 * (m23 + m24),
        -(m11 + m22 + m33) + 2 * (m12 + m13 + m14 - m23 - m24),
        -(m11 + m22 + m33) + 2 * (-m12 + m13 + m14 + m23 + m24),
    ];
    let hi_list = [
        m33,
        (m22 + m33) - 2 * m23 + 2 * m24,
        (m22 + m33) + 2 * m23 - 2 * m24,
        (m11 + m22 + m33) + 2 * (-m12 + m13 - m14 - m23 + m24),
        (m11 + m22 + m33) + 2 * (-m12 - m13 + m14 + m23 - m24),
    ];
    let lo = lo_list
        .iter()
        .map(|&v| gram::div_ceil_i64(v, 2))
        .max()
        .expect("non-empty");
    let hi = hi_list
        .iter()
        .map(|&v| gram::div_floor_i64(v, 2))
        .min()
        .expect("non-empty");
    (lo, hi)
}

/// Prefix-level filter state shared by the raising runners.
struct Prefix {
    n: usize,
    /// Full flat matrix with the last diagonal entry unset (zero).
    flat: Vec<i64>,
}

impl Prefix {
    fn entry(&self, i: usize, j: usize) -> i64 {
        self.flat[i * self.n + j]
    }

    fn with_last(&self, v: i64) -> GramMatrix {
        let n = self.n;
        let mut flat = self.flat.clone();
        flat[n * n - 1] = v;
        GramMatrix::from_flat(n, flat).expect("prefix flat is symmetric")
    }

    fn leading(&self) -> GramMatrix {
        let n = self.n;
        let mut rows = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            rows.push(self.flat[i * n..i * n + n - 1].to_vec());
        }
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        GramMatrix::from_rows(&refs).expect("leading block is symmetric")
    }
}

/// Run the raising loop for one prefix with `w` contained in the leading
/// indices.  Prefix-level filters must already have passed.
fn raise_last_diag(
    case: &CaseSpec,
    prefix: &Prefix,
    w: &[usize],
    _k: i64,
    out: &mut Partial,
) -> Result<()> {
    let n = prefix.n;
    debug_assert!(w.iter().all(|&i| i < n - 1));
    let leading = prefix.leading();
    if !leading.is_positive_definite() {
        // No positive definite completion exists; not a candidate family.
        return Ok(());
    }
    // Termination certificate: some composition of k keeps the leading block
    // positive definite, so the reduced determinant, linear and increasing in
    // the raised entry, eventually goes positive.
    let lead_coset = CosetSpec::new(leading.clone(), w)?;
    if criteria::find_split(&lead_coset)?.is_none() {
        // No completion of this prefix can ever split (the leading minor of
        // the reduced form stays non-positive).  The family is still fine
        // when the necessity cap min(Q(w), r_{K,w}) — fixed by the prefix —
        // does not exceed the target: every representable completion then
        // needs at most the target by the necessary conditions alone.
        let q_w = q_of_w(&prefix.flat, n, w);
        let diag_sum: i64 = w.iter().map(|&i| prefix.entry(i, i)).sum();
        let cap = criteria::largest_congruent_le(diag_sum, q_w)
            .unwrap_or(0)
            .min(q_w);
        if cap <= n as i64 + 10 {
            out.counts.capped_prefixes += 1;
            return Ok(());
        }
        return Err(Error::Contradiction(format!(
            "case {}: no split composition keeps the leading block of {} positive definite \
             and the necessity cap {} exceeds the target; the raising loop for w={:?} cannot \
             terminate",
            case.label,
            leading,
            cap,
            w.iter().map(|&i| i + 1).collect::<Vec<_>>()
        )));
    }
    let parity = b_col_parity(&prefix.flat, n, w, n - 1);
    let mut v = prefix.entry(n - 2, n - 2);
    if v.rem_euclid(2) != parity {
        v += 1;
    }
    for _ in 0..MAX_RAISES {
        let m = prefix.with_last(v);
        if !m.is_positive_definite() {
            v += 2;
            continue;
        }
        out.scanned += 1;
        let coset = CosetSpec::new(m.clone(), w)?;
        if criteria::find_split(&coset)?.is_some() {
            out.counts.split_found += 1;
            return Ok(());
        }
        match no_split_verdict(&coset, n as i64 + 10)? {
            Verdict::Direct => out.counts.direct += 1,
            Verdict::Unrepresentable => out.counts.unrepresentable += 1,
            _ => out.survivors.push(coset),
        }
        v += 2;
    }
    Err(Error::ResourceCap(format!(
        "case {}: raising loop exceeded {MAX_RAISES} iterations",
        case.label
    )))
}

/// Prefix filters common to the raising runners: parity on the leading rows,
/// the case assumption, and the discharge shortcut.  Returns `Some(k)` when
/// the prefix must go through the raising loop.
fn prefix_filters(case: &CaseSpec, prefix: &Prefix, w: &[usize], out: &mut Partial) -> Option<i64> {
    let n = prefix.n;
    let target = n as i64 + 10;
    for i in 0..n - 1 {
        if prefix.entry(i, i).rem_euclid(2) != b_col_parity(&prefix.flat, n, w, i) {
            out.scanned += 1;
            out.counts.parity += 1;
            return None;
        }
    }
    let q_w = q_of_w(&prefix.flat, n, w);
    let k = criteria::split_residue(q_w);
    let diag_sum: i64 = w.iter().map(|&i| prefix.entry(i, i)).sum();
    let r_kw = criteria::largest_congruent_le(diag_sum, q_w);
    if q_w <= target || r_kw.is_none_or(|r| r < target) || k > n as i64 + 2 {
        out.scanned += 1;
        out.counts.assumption += 1;
        return None;
    }
    let i_t = *w.iter().max().expect("w non-empty");
    if case.use_discharge && discharge_fires(n, prefix.entry(i_t, i_t), k) {
        out.scanned += 1;
        out.counts.discharged += 1;
        return None;
    }
    Some(k)
}

/// Raising runner over prefixes whose leading block is enumerated directly.
fn run_iterate_unit(case: &CaseSpec, unit: &Unit, out: &mut Partial) -> Result<()> {
    let n = case.n;
    let mut err = None;
    gram::for_each_reduced_with_diag(&unit.diag, &mut |lead: &GramMatrix| {
        if err.is_some() {
            return;
        }
        // Extend the leading block by the last column (bounded independently
        // of the raised diagonal entry).
        let mut flat = vec![0i64; n * n];
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                flat[i * n + j] = lead.entry(i, j);
            }
        }
        let mut visit = |prefix: &Prefix| -> bool {
            for w in &case.w_sets {
                if let Some(k) = prefix_filters(case, prefix, w, out) {
                    if let Err(e) = raise_last_diag(case, prefix, w, k, out) {
                        err = Some(e);
                        return true;
                    }
                }
            }
            false
        };
        match n {
            3 => {
                let (m11, m22) = (flat[0], flat[4]);
                let (m12,) = (flat[1],);
                for m13 in 0..=m11 / 2 {
                    for m23 in m2j_lower(m11, m22, m12, m13)..=m22 / 2 {
                        flat[2] = m13;
                        flat[6] = m13;
                        flat[5] = m23;
                        flat[7] = m23;
                        let prefix = Prefix {
                            n,
                            flat: flat.clone(),
                        };
                        if visit(&prefix) {
                            return;
                        }
                    }
                }
            }
            4 => {
                let (m11, m22, m33) = (flat[0], flat[5], flat[10]);
                let (m12, m13, m23) = (flat[1], flat[2], flat[6]);
                for m14 in 0..=m11 / 2 {
                    for m24 in m2j_lower(m11, m22, m12, m14)..=m22 / 2 {
                        let (lo, hi) = m34_range(m11, m22, m33, m12, m13, m14, m23, m24);
                        for m34 in lo..=hi {
                            flat[3] = m14;
                            flat[12] = m14;
                            flat[7] = m24;
                            flat[13] = m24;
                            flat[11] = m34;
                            flat[14] = m34;
                            let prefix = Prefix {
                                n,
                                flat: flat.clone(),
                            };
                            if visit(&prefix) {
                                return;
                            }
                        }
                    }
                }
            }
            _ => unreachable!("raising cases have rank 3 or 4"),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Exact rational as numerator over positive denominator.
#[derive(Debug, Clone, Copy)]
struct Rat {
    num: i128,
    den: i128,
}

impl Rat {
    fn new(num: i128, den: i128) -> Rat {
        debug_assert!(den != 0);
        if den < 0 {
            Rat {
                num: -num,
                den: -den,
            }
        } else {
            Rat { num, den }
        }
    }

    fn max(self, other: Rat) -> Rat {
        if self.num * other.den >= other.num * self.den {
            self
        } else {
            other
        }
    }
}

/// Rank 4, top w index 2 (`w = {2}` or `{1, 2}`): per-tuple
/// checks bound `m33`, then `m44` is raised.
fn run_tail_unit(case: &CaseSpec, unit: &Unit, out: &mut Partial) -> Result<()> {
    let (m11, m22) = (unit.diag[0], unit.diag[1]);
    let m1j_cap = m11 / 2;
    for m12 in 0..=m1j_cap {
        for m13 in 0..=m1j_cap {
            for m14 in 0..=m1j_cap {
                for m23 in m2j_lower(m11, m22, m12, m13)..=m22 / 2 {
                    for m24 in m2j_lower(m11, m22, m12, m14)..=m22 / 2 {
                        for w in &case.w_sets {
                            tail_tuple(case, (m11, m12, m13, m14, m22, m23, m24), w, out)?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn tail_tuple(
    case: &CaseSpec,
    tuple: (i64, i64, i64, i64, i64, i64, i64),
    w: &[usize],
    out: &mut Partial,
) -> Result<()> {
    let (m11, m12, m13, m14, m22, m23, m24) = tuple;
    let n = 4usize;
    let mut flat = vec![0i64; 16];
    let set = |flat: &mut Vec<i64>, i: usize, j: usize, v: i64| {
        flat[i * 4 + j] = v;
        flat[j * 4 + i] = v;
    };
    set(&mut flat, 0, 0, m11);
    set(&mut flat, 1, 1, m22);
    set(&mut flat, 0, 1, m12);
    set(&mut flat, 0, 2, m13);
    set(&mut flat, 0, 3, m14);
    set(&mut flat, 1, 2, m23);
    set(&mut flat, 1, 3, m24);

    // Tuple-level parity on the w rows.
    for &i in w {
        if flat[i * n + i].rem_euclid(2) != b_col_parity(&flat, n, w, i) {
            out.scanned += 1;
            out.counts.parity += 1;
            return Ok(());
        }
    }
    let target = n as i64 + 10;
    let q_w = q_of_w(&flat, n, w);
    let k = criteria::split_residue(q_w);
    let diag_sum: i64 = w.iter().map(|&i| flat[i * n + i]).sum();
    let r_kw = criteria::largest_congruent_le(diag_sum, q_w);
    if q_w <= target || r_kw.is_none_or(|r| r < target) || k > n as i64 + 2 {
        out.scanned += 1;
        out.counts.assumption += 1;
        return Ok(());
    }
    if case.use_discharge && discharge_fires(n, m22, k) {
        out.scanned += 1;
        out.counts.discharged += 1;
        return Ok(());
    }
    // Per-tuple facts: the top-left 2x2 of the reduced form is
    // positive definite and C > 0; both must always hold here.
    let m22p = m22 - k;
    if m22p <= 0 || m11 * m22p <= m12 * m12 {
        return Err(Error::Contradiction(format!(
            "case {}: reduced 2x2 block not positive definite for tuple {tuple:?}",
            case.label
        )));
    }
    let c = Rat::new((2 * m11 * m22p - 5 * m12 * m12) as i128, (2 * m22p) as i128);
    if c.num <= 0 {
        return Err(Error::Contradiction(format!(
            "case {}: C <= 0 for tuple {tuple:?}",
            case.label
        )));
    }
    // C0 = max over j of (10/3) m_2j / m22' + m_1j (m13 + m14) / C.
    let c0_term = |m2j: i64, m1j: i64| -> Rat {
        // 10 m2j / (3 m22') + m1j (m13 + m14) (2 m22') / (2 m11 m22' - 5 m12^2)
        let a = Rat::new(10 * m2j as i128, 3 * m22p as i128);
        let b = Rat::new(
            (m1j * (m13 + m14)) as i128 * 2 * m22p as i128,
            2 * m11 as i128 * m22p as i128 - 5 * m12 as i128 * m12 as i128,
        );
        Rat::new(a.num * b.den + b.num * a.den, a.den * b.den)
    };
    let c0 = c0_term(m23, m13).max(c0_term(m24, m14));
    let parity33 = b_col_parity(&flat, n, w, 2);
    let mut m33 = m22;
    if m33.rem_euclid(2) != parity33 {
        m33 += 1;
    }
    // Above (8/3) C0 the reduced form is positive definite by the
    // square completion, so the tuple is discharged for all larger m33.
    while 3 * (m33 as i128) * c0.den <= 8 * c0.num {
        let (lo, hi) = m34_range(m11, m22, m33, m12, m13, m14, m23, m24);
        for m34 in lo..=hi {
            set(&mut flat, 2, 2, m33);
            set(&mut flat, 2, 3, m34);
            let prefix = Prefix {
                n,
                flat: flat.clone(),
            };
            if let Some(kk) = prefix_filters(case, &prefix, w, out) {
                debug_assert_eq!(kk, k);
                raise_last_diag(case, &prefix, w, kk, out)?;
            }
        }
        m33 += 2;
    }
    Ok(())
}

/// Rank 4, `w = {1}`: `m11` is pinned by the discharge arithmetic; `m22` is
/// bounded by the cross-term rule, `m33` by a Schur-complement envelope, and
/// `m44` is raised.
fn run_head_unit(case: &CaseSpec, unit: &Unit, out: &mut Partial) -> Result<()> {
    let n = 4usize;
    let m11 = unit.diag[0];
    let w: &[usize] = &[0];
    debug_assert_eq!(case.w_sets, vec![vec![0]]);
    let target = n as i64 + 10;
    // w = {1}: Q(w) = r_{K,w} = m11 and the row-1 parity is trivial.
    let q_w = m11;
    let k = criteria::split_residue(q_w);
    if q_w <= target || k > n as i64 + 2 {
        out.scanned += 1;
        out.counts.assumption += 1;
        return Ok(());
    }
    if case.use_discharge && discharge_fires(n, m11, k) {
        out.scanned += 1;
        out.counts.discharged += 1;
        return Ok(());
    }
    let m11p = m11 - k;
    let m1j_cap = if case.scaled {
        (m11 / 2).min(4)
    } else {
        m11 / 2
    };
    for m12 in 0..=m1j_cap {
        for m13 in 0..=m1j_cap {
            for m14 in 0..=m1j_cap {
                let m234 = m12 + m13 + m14;
                if m234 == 0 {
                    // Block-diagonal reduced form; positive definite outright.
                    out.scanned += 1;
                    out.counts.discharged += 1;
                    continue;
                }
                // Discharge rule: m22 > 2 m234^2 / m11' never reaches the scan.
                let m22_cap = gram::div_floor_i64(2 * m234 * m234, m11p);
                for m22 in m11..=m22_cap {
                    if m22.rem_euclid(2) != m12.rem_euclid(2) {
                        out.scanned += 1;
                        out.counts.parity += 1;
                        continue;
                    }
                    head_tuple(case, (m11, m12, m13, m14, m22), k, w, out)?;
                }
            }
        }
    }
    Ok(())
}

fn head_tuple(
    case: &CaseSpec,
    tuple: (i64, i64, i64, i64, i64),
    k: i64,
    w: &[usize],
    out: &mut Partial,
) -> Result<()> {
    let (m11, m12, m13, m14, m22) = tuple;
    let n = 4usize;
    let m11p = m11 - k;
    let mut flat = vec![0i64; 16];
    let set = |flat: &mut Vec<i64>, i: usize, j: usize, v: i64| {
        flat[i * 4 + j] = v;
        flat[j * 4 + i] = v;
    };
    set(&mut flat, 0, 0, m11);
    set(&mut flat, 1, 1, m22);
    set(&mut flat, 0, 1, m12);
    set(&mut flat, 0, 2, m13);
    set(&mut flat, 0, 3, m14);
    for m23 in m2j_lower(m11, m22, m12, m13)..=m22 / 2 {
        for m24 in m2j_lower(m11, m22, m12, m14)..=m22 / 2 {
            // Schur data of the reduced form's leading 2x2 block
            // A = [[m11', m12], [m12, m22]] against columns 3 and 4.
            let d2 = m11p as i128 * m22 as i128 - (m12 as i128).pow(2);
            if d2 <= 0 {
                return Err(Error::Contradiction(format!(
                    "case {}: leading reduced 2x2 block degenerate at {tuple:?}",
                    case.label
                )));
            }
            let (m13i, m14i, m23i, m24i) = (m13 as i128, m14 as i128, m23 as i128, m24 as i128);
            let (m12i, m22i) = (m12 as i128, m22 as i128);
            let m11pi = m11p as i128;
            let n33 = m22i * m13i * m13i - 2 * m12i * m13i * m23i + m11pi * m23i * m23i;
            let n44 = m22i * m14i * m14i - 2 * m12i * m14i * m24i + m11pi * m24i * m24i;
            let n34 = m22i * m13i * m14i - m12i * (m13i * m24i + m14i * m23i) + m11pi * m23i * m24i;
            let max_num = n33.max(n44).max(n34.abs());
            // For m33 > 4 max(e33, e44, |e34|) the Schur complement is
            // positive definite for every admissible m34 and m44 >= m33, so
            // everything above this envelope is discharged.
            set(&mut flat, 1, 2, m23);
            set(&mut flat, 1, 3, m24);
            let mut m33 = m22;
            if m33.rem_euclid(2) != m13.rem_euclid(2) {
                m33 += 1;
            }
            while (m33 as i128) * d2 <= 4 * max_num {
                let (lo, hi) = m34_range(m11, m22, m33, m12, m13, m14, m23, m24);
                for m34 in lo..=hi {
                    set(&mut flat, 2, 2, m33);
                    set(&mut flat, 2, 3, m34);
                    let prefix = Prefix {
                        n,
                        flat: flat.clone(),
                    };
                    if let Some(kk) = prefix_filters(case, &prefix, w, out) {
                        debug_assert_eq!(kk, k);
                        raise_last_diag(case, &prefix, w, kk, out)?;
                    }
                }
                m33 += 2;
            }
        }
    }
    Ok(())
}

/// Search a representation certificate for a survivor; a proof of
/// non-representability here contradicts the expected survey outcome.
pub fn certify_survivor(gram: &GramMatrix, w_indices: &[usize], r: usize) -> Result<RepMatrix> {
    let coset = CosetSpec::new(gram.clone(), w_indices)?;
    let (outcome, _) = repsearch::find_representation(&coset, r, &SearchBudget::unbounded())?;
    match outcome {
        SearchOutcome::Found(t) => Ok(t),
        SearchOutcome::NotRepresentable => Err(Error::Contradiction(format!(
            "survivor {gram} with w={:?} is not representable at r={r}",
            w_indices.iter().map(|&i| i + 1).collect::<Vec<_>>()
        ))),
        SearchOutcome::Exhausted => unreachable!("unbounded search cannot exhaust"),
    }
}

/// Certify every survivor in a report at rank target `r`.
pub fn certify_all(report: &mut SurveyReport, r: usize) -> Result<()> {
    let mut certs = Vec::with_capacity(report.survivors.len());
    for s in &report.survivors {
        certs.push(Some(certify_survivor(s.gram(), s.w_indices(), r)?));
    }
    report.certificates = certs;
    Ok(())
}

/// One lower-bound witness verdict.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub coset: CosetSpec,
    pub r_pos: usize,
    pub r_neg: usize,
    pub representable_at_pos: bool,
    /// None when the slow refutation was skipped.
    pub refuted_at_neg: Option<bool>,
    pub nodes: u64,
}

/// The witness list: Gram matrix, w (0-based), representable r, refuted r,
/// and whether the refutation is slow (release-gate scale).
fn witness_list() -> Vec<(GramMatrix, Vec<usize>, usize, usize, bool)> {
    vec![
        (
            GramMatrix::from_rows(&[&[8, 2], &[2, 12]]).expect("static"),
            vec![1],
            12,
            4,
            false,
        ),
        (
            GramMatrix::diagonal(&[3, 3, 23]).expect("static"),
            vec![0, 1, 2],
            13,
            5,
            false,
        ),
        (
            GramMatrix::diagonal(&[1, 3, 3, 23]).expect("static"),
            vec![0, 1, 2, 3],
            14,
            6,
            false,
        ),
        (
            GramMatrix::diagonal(&[2, 2, 2, 2, 16]).expect("static"),
            vec![4],
            16,
            8,
            true,
        ),
    ]
}

/// Verify the lower-bound witnesses by exhaustive search.  Any mismatch with
/// the expected verdicts is a hard contradiction.  Slow refutations run only
/// when `include_slow` is set.
pub fn run_witnesses(include_slow: bool) -> Result<Vec<WitnessReport>> {
    let mut reports = Vec::new();
    for (gram, w, r_pos, r_neg, slow) in witness_list() {
        let coset = CosetSpec::new(gram, &w)?;
        let budget = SearchBudget::unbounded();
        let (pos, stats_pos) = repsearch::find_representation(&coset, r_pos, &budget)?;
        let pos_ok = matches!(pos, SearchOutcome::Found(_));
        if !pos_ok {
            return Err(Error::Contradiction(format!(
                "witness {} expected representable at r={r_pos}",
                coset.gram()
            )));
        }
        let mut nodes = stats_pos.nodes;
        let refuted = if slow && !include_slow {
            None
        } else {
            let (neg, stats_neg) = repsearch::find_representation(&coset, r_neg, &budget)?;
            nodes += stats_neg.nodes;
            match neg {
                SearchOutcome::NotRepresentable => Some(true),
                SearchOutcome::Found(_) => {
                    return Err(Error::Contradiction(format!(
                        "witness {} expected non-representable at r={r_neg}",
                        coset.gram()
                    )))
                }
                SearchOutcome::Exhausted => unreachable!("unbounded search cannot exhaust"),
            }
        };
        reports.push(WitnessReport {
            coset,
            r_pos,
            r_neg,
            representable_at_pos: pos_ok,
            refuted_at_neg: refuted,
            nodes,
        });
    }
    Ok(reports)
}

/// The four exceptional rank-4 matrices, in canonical enumeration order.
pub fn exceptional_matrices() -> Vec<GramMatrix> {
    [
        [[9, 3, 3, 2], [3, 9, 3, -4], [3, 3, 9, -4], [2, -4, -4, 9]],
        [[9, 3, 4, 2], [3, 9, 3, -4], [4, 3, 9, -3], [2, -4, -3, 9]],
        [[9, 4, 3, 2], [4, 9, 3, -3], [3, 3, 9, -4], [2, -3, -4, 9]],
        [[9, 4, 4, 2], [4, 9, 3, -3], [4, 3, 9, -3], [2, -3, -3, 9]],
    ]
    .iter()
    .map(|rows| {
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        GramMatrix::from_rows(&refs).expect("static")
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_cases_are_empty() {
        for label in ["1-i", "2-i"] {
            let case = CaseSpec::by_label(label, false).unwrap();
            let report = run_case(&case, None).unwrap();
            assert_eq!(report.candidates_scanned, 0);
            assert!(report.survivors.is_empty());
        }
    }

    #[test]
    fn rank2_full_survey_empty() {
        let case = CaseSpec::by_label("1-ii", false).unwrap();
        let report = run_case(&case, None).unwrap();
        assert!(report.survivors.is_empty());
        assert!(report.candidates_scanned > 0);
        // Everything dies at the assumption: bounded diagonals cannot reach
        // Q(w) > 12 with the admissible cap above 12.
        assert_eq!(report.filtered_by.split_found, 0);
    }

    #[test]
    fn rank3_iterate_survey_empty() {
        let case = CaseSpec::by_label("2-ii", false).unwrap();
        let report = run_case(&case, None).unwrap();
        assert!(report.survivors.is_empty(), "{report:?}");
    }

    #[test]
    fn rank3_direct_survey_empty() {
        let case = CaseSpec::by_label("2-iii", false).unwrap();
        let report = run_case(&case, None).unwrap();
        assert!(report.survivors.is_empty(), "{report:?}");
    }

    #[test]
    fn exceptional_matrices_survive_filters() {
        let w = vec![0usize, 3];
        for m in exceptional_matrices() {
            assert!(m.is_minkowski_reduced().unwrap());
            assert_eq!(decide(&m, &w, true).unwrap(), Verdict::Survivor);
        }
    }

    #[test]
    fn m34_range_matches_reduction_conditions() {
        // Cross-check the hand-rolled bound lists against the full condition
        // checker on assembled matrices.
        let (m11, m22, m33, m44) = (6, 7, 9, 50);
        for m12 in 0..=3 {
            for m13 in 0..=3 {
                for m14 in 0..=3 {
                    for m23 in -3..=3 {
                        for m24 in -3..=3 {
                            let (lo, hi) = m34_range(m11, m22, m33, m12, m13, m14, m23, m24);
                            for m34 in -10..=10 {
                                let m = GramMatrix::from_rows(&[
                                    &[m11, m12, m13, m14],
                                    &[m12, m22, m23, m24],
                                    &[m13, m23, m33, m34],
                                    &[m14, m24, m34, m44],
                                ])
                                .unwrap();
                                let reduced = m.is_minkowski_reduced().unwrap();
                                let other_ok = 2 * m23.abs() <= m22
                                    && 2 * m24.abs() <= m22
                                    && m23 >= gram::div_ceil_i64(-(m11 + m22) + 2 * (m12 + m13), 2)
                                    && m24 >= gram::div_ceil_i64(-(m11 + m22) + 2 * (m12 + m14), 2);
                                if other_ok {
                                    assert_eq!(
                                        reduced,
                                        (lo..=hi).contains(&m34),
                                        "m34={m34} bounds=({lo},{hi})"
                                    );
                                } else if reduced {
                                    panic!("conditions outside m34 should already fail");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn witness_rank2_fast() {
        // Only the cheap rank-2 witness here; the full suite runs in the
        // acceptance tests.
        let coset =
            CosetSpec::new(GramMatrix::from_rows(&[&[8, 2], &[2, 12]]).unwrap(), &[1]).unwrap();
        let budget = SearchBudget::unbounded();
        let (pos, _) = repsearch::find_representation(&coset, 12, &budget).unwrap();
        assert!(matches!(pos, SearchOutcome::Found(_)));
        let (neg, _) = repsearch::find_representation(&coset, 4, &budget).unwrap();
        assert_eq!(neg, SearchOutcome::NotRepresentable);
    }

    #[test]
    fn certify_rank3_witness() {
        let t =
            certify_survivor(&GramMatrix::diagonal(&[3, 3, 23]).unwrap(), &[0, 1, 2], 13).unwrap();
        let coset = CosetSpec::new(GramMatrix::diagonal(&[3, 3, 23]).unwrap(), &[0, 1, 2]).unwrap();
        assert!(t.verify(&coset));
    }
}
