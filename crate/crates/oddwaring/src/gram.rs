//! Exact integer linear algebra for Gram matrices and coset specifications.
//!
//! Everything here is integer arithmetic; determinants are computed in 128-bit
//! fraction-free elimination so that no rounding can change a sign.  The
//! Minkowski reduction predicate implements the explicit inequality lists for
//! rank at most 4, and [`enumerate_reduced`] walks all reduced positive
//! definite matrices below a diagonal bound in a fixed lexicographic order.

use serde::{Deserialize, Serialize};

use crate::{parallel, Error, Result};

/// Symmetric integer Gram matrix of a lattice basis, rank 1 to 5.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GramMatrixRepr", into = "GramMatrixRepr")]
pub struct GramMatrix {
    n: usize,
    /// Row-major `n x n` entries.
    m: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct GramMatrixRepr {
    n: usize,
    m: Vec<Vec<i64>>,
}

impl From<GramMatrix> for GramMatrixRepr {
    fn from(g: GramMatrix) -> Self {
        GramMatrixRepr {
            n: g.n,
            m: g.rows(),
        }
    }
}

impl TryFrom<GramMatrixRepr> for GramMatrix {
    type Error = Error;
    fn try_from(r: GramMatrixRepr) -> Result<Self> {
        GramMatrix::from_rows(&r.m.iter().map(|row| row.as_slice()).collect::<Vec<_>>()).and_then(
            |g| {
                if g.n == r.n {
                    Ok(g)
                } else {
                    Err(Error::DimensionMismatch {
                        expected: r.n,
                        got: g.n,
                    })
                }
            },
        )
    }
}

impl GramMatrix {
    /// Build from row slices; rejects non-square or asymmetric input.
    pub fn from_rows(rows: &[&[i64]]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > 5 {
            return Err(Error::UnsupportedDimension {
                n,
                what: "Gram matrices of rank 1..=5",
            });
        }
        let mut m = vec![0i64; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m[i * n + j] = v;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i * n + j] != m[j * n + i] {
                    return Err(Error::Asymmetric { i, j });
                }
            }
        }
        Ok(GramMatrix { n, m })
    }

    /// Build from the flat row-major entry vector.
    pub fn from_flat(n: usize, m: Vec<i64>) -> Result<Self> {
        if m.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: m.len(),
            });
        }
        let rows: Vec<&[i64]> = m.chunks(n).collect();
        GramMatrix::from_rows(&rows)
    }

    pub fn diagonal(d: &[i64]) -> Result<Self> {
        let n = d.len();
        let mut m = vec![0i64; n * n];
        for (i, &v) in d.iter().enumerate() {
            m[i * n + i] = v;
        }
        GramMatrix::from_flat(n, m)
    }

    pub fn identity(n: usize) -> Self {
        GramMatrix::diagonal(&vec![1; n]).expect("identity is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.m.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    /// `x^t M x`, exact.  The factor 4 of the polynomial normalization is
    /// deliberately not applied here.
    pub fn quadratic_value(&self, x: &[i64]) -> Result<i64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut acc: i128 = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc
                    .checked_add(
                        (self.entry(i, j) as i128)
                            .checked_mul(x[i] as i128)
                            .and_then(|v| v.checked_mul(x[j] as i128))
                            .ok_or(Error::Overflow)?,
                    )
                    .ok_or(Error::Overflow)?;
            }
        }
        i64::try_from(acc).map_err(|_| Error::Overflow)
    }

    /// Bilinear value `x^t M y`, exact, in 128 bits.
    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> Result<i128> {
        if x.len() != self.n || y.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len().max(y.len()),
            });
        }
        let mut acc: i128 = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.entry(i, j) as i128 * x[i] as i128 * y[j] as i128;
            }
        }
        Ok(acc)
    }

    /// Leading principal minor of order `k` (1-based), exact.
    pub fn leading_minor(&self, k: usize) -> Result<i128> {
        if k == 0 || k > self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: k,
            });
        }
        let mut a = [[0i128; 5]; 5];
        for i in 0..k {
            for j in 0..k {
                a[i][j] = self.entry(i, j) as i128;
            }
        }
        bareiss_det(&mut a, k).ok_or(Error::Overflow)
    }

    pub fn determinant(&self) -> Result<i128> {
        self.leading_minor(self.n)
    }

    /// Exact positive-definiteness: all leading principal minors positive.
    pub fn is_positive_definite(&self) -> bool {
        (1..=self.n).all(|k| match self.leading_minor(k) {
            Ok(d) => d > 0,
            Err(_) => panic!("overflow while testing positive definiteness"),
        })
    }

    /// Copy with `parts[idx]` subtracted from the corresponding diagonal
    /// entries; used by the split certificate search.
    pub fn minus_diagonal(&self, indices: &[usize], parts: &[i64]) -> GramMatrix {
        let mut out = self.clone();
        for (&i, &p) in indices.iter().zip(parts) {
            out.m[i * self.n + i] -= p;
        }
        out
    }

    /// Minkowski reduction test via the explicit inequality lists, rank <= 4.
    ///
    /// Requires the ordering and off-diagonal size conditions, the sign
    /// normalization `m_{1j} >= 0`, the rank-3 lower bounds on `m_{ij}`, and
    /// for rank 4 the eight two-sided bounds on `m_{34}`.
    pub fn is_minkowski_reduced(&self) -> Result<bool> {
        if self.n > 4 {
            return Err(Error::UnsupportedDimension {
                n: self.n,
                what: "Minkowski reduction test",
            });
        }
        Ok(self.cond_ordering() && self.cond_signs() && self.cond_rank3() && self.cond_rank4())
    }

    /// `0 < m_11 <= ... <= m_nn` and `|2 m_ij| <= m_ii` for `i < j`.
    fn cond_ordering(&self) -> bool {
        if self.entry(0, 0) <= 0 {
            return false;
        }
        for i in 1..self.n {
            if self.entry(i - 1, i - 1) > self.entry(i, i) {
                return false;
            }
        }
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if 2 * self.entry(i, j).abs() > self.entry(i, i) {
                    return false;
                }
            }
        }
        true
    }

    /// Sign normalization: `m_{1j} >= 0` for `j >= 2`.
    fn cond_signs(&self) -> bool {
        (1..self.n).all(|j| self.entry(0, j) >= 0)
    }

    /// For `2 <= i < j`: `2 m_ij >= -(m_11 + m_ii) + 2 m_1i + 2 m_1j`.
    fn cond_rank3(&self) -> bool {
        for i in 1..self.n {
            for j in (i + 1)..self.n {
                if 2 * self.entry(i, j)
                    < -(self.entry(0, 0) + self.entry(i, i))
                        + 2 * (self.entry(0, i) + self.entry(0, j))
                {
                    return false;
                }
            }
        }
        true
    }

    /// The eight rank-4 inequalities on `m_34` (stated with doubled sides to
    /// stay in integers).
    fn cond_rank4(&self) -> bool {
        if self.n < 4 {
            return true;
        }
        let m = |i: usize, j: usize| self.entry(i - 1, j - 1);
        let (m11, m22, m33) = (m(1, 1), m(2, 2), m(3, 3));
        let (m12, m13, m14, m23, m24, m34) = (m(1, 2), m(1, 3), m(1, 4), m(2, 3), m(2, 4), m(3, 4));
        let lowers = [
            -(m22 + m33) - 2 * (m23 + m24),
            -(m22 + m33) + 2 * (m23 + m24),
            -(m11 + m22 + m33) + 2 * (m12 + m13 + m14 - m23 - m24),
            -(m11 + m22 + m33) + 2 * (-m12 + m13 + m14 + m23 + m24),
        ];
        let uppers = [
            (m22 + m33) + 2 * (-m23 + m24),
            (m22 + m33) + 2 * (m23 - m24),
            (m11 + m22 + m33) + 2 * (-m12 + m13 - m14 - m23 + m24),
            (m11 + m22 + m33) + 2 * (-m12 - m13 + m14 + m23 - m24),
        ];
        lowers.iter().all(|&lo| 2 * m34 >= lo) && uppers.iter().all(|&hi| 2 * m34 <= hi)
    }
}

/// Fraction-free Bareiss determinant for `k <= 5`, `None` on overflow.
fn bareiss_det(a: &mut [[i128; 5]; 5], k: usize) -> Option<i128> {
    let mut sign = 1i128;
    let mut prev = 1i128;
    for col in 0..k {
        if a[col][col] == 0 {
            match (col + 1..k).find(|&r| a[r][col] != 0) {
                Some(pivot) => {
                    a.swap(col, pivot);
                    sign = -sign;
                }
                // Zero column below the diagonal: singular.
                None => return Some(0),
            }
        }
        for r in (col + 1)..k {
            for c in (col + 1)..k {
                let t = a[col][col]
                    .checked_mul(a[r][c])?
                    .checked_sub(a[r][col].checked_mul(a[col][c])?)?;
                a[r][c] = t / prev;
            }
            a[r][col] = 0;
        }
        prev = a[col][col];
    }
    Some(sign * a[k - 1][k - 1])
}

impl std::fmt::Display for GramMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// A Gram matrix together with the index set of the half-vector
/// `w = d_{i_1} + ... + d_{i_t}`.  Indices are 0-based in memory and 1-based
/// in the JSON schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "CosetSpecRepr", into = "CosetSpecRepr")]
pub struct CosetSpec {
    gram: GramMatrix,
    w_indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CosetSpecRepr {
    n: usize,
    m: Vec<Vec<i64>>,
    /// 1-based indices.
    w: Vec<usize>,
}

impl From<CosetSpec> for CosetSpecRepr {
    fn from(c: CosetSpec) -> Self {
        CosetSpecRepr {
            n: c.gram.n(),
            m: c.gram.rows(),
            w: c.w_indices.iter().map(|&i| i + 1).collect(),
        }
    }
}

impl TryFrom<CosetSpecRepr> for CosetSpec {
    type Error = Error;
    fn try_from(r: CosetSpecRepr) -> Result<Self> {
        let gram = GramMatrix::try_from(GramMatrixRepr { n: r.n, m: r.m })?;
        if r.w.iter().any(|&i| i == 0) {
            return Err(Error::InvalidInput(
                "w indices are 1-based and must be positive".into(),
            ));
        }
        CosetSpec::new(gram, &r.w.iter().map(|&i| i - 1).collect::<Vec<_>>())
    }
}

impl CosetSpec {
    /// `w_indices` are 0-based, strictly increasing, nonempty, within range.
    pub fn new(gram: GramMatrix, w_indices: &[usize]) -> Result<Self> {
        if w_indices.is_empty() {
            return Err(Error::InvalidInput("w index set must be nonempty".into()));
        }
        if !w_indices.windows(2).all(|p| p[0] < p[1]) {
            return Err(Error::InvalidInput(
                "w indices must be strictly increasing".into(),
            ));
        }
        if *w_indices.last().unwrap() >= gram.n() {
            return Err(Error::InvalidInput("w index out of range".into()));
        }
        Ok(CosetSpec {
            gram,
            w_indices: w_indices.to_vec(),
        })
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn w_indices(&self) -> &[usize] {
        &self.w_indices
    }

    /// Indicator vector of the w index set.
    pub fn w_vector(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.gram.n()];
        for &i in &self.w_indices {
            v[i] = 1;
        }
        v
    }

    /// `Q(w) = sum over i,j in w of m_ij`.
    pub fn q_w(&self) -> i64 {
        let mut acc: i64 = 0;
        for &i in &self.w_indices {
            for &j in &self.w_indices {
                acc += self.gram.entry(i, j);
            }
        }
        acc
    }

    /// `B(w, d_i) = sum over j in w of m_ij`.
    pub fn b_w_basis(&self, i: usize) -> i64 {
        self.w_indices.iter().map(|&j| self.gram.entry(i, j)).sum()
    }

    /// `sum over i in w of m_ii`, the diagonal cap entering `r_{K,w}`.
    pub fn w_diag_sum(&self) -> i64 {
        self.w_indices.iter().map(|&i| self.gram.entry(i, i)).sum()
    }
}

/// Specification for the bounded enumerator of reduced matrices.
pub struct ReducedEnumSpec {
    pub n: usize,
    /// Upper bound on the last diagonal entry `m_nn`.
    pub diag_max: i64,
    /// When set, keep only matrices with `m_ii = B(w, d_i) (mod 2)` for all
    /// `i` (the diagonal form of necessary condition (i)) for this 0-based
    /// index set.
    pub parity_filter: Option<Vec<usize>>,
    /// Extra predicates applied to each fully assembled candidate.
    pub extra: Vec<Box<dyn Fn(&GramMatrix) -> bool + Sync + Send>>,
}

impl ReducedEnumSpec {
    pub fn new(n: usize, diag_max: i64) -> Self {
        ReducedEnumSpec {
            n,
            diag_max,
            parity_filter: None,
            extra: Vec::new(),
        }
    }
}

/// Diagonal parity form of necessary condition (i): `m_ii = B(w, d_i) mod 2`
/// for every basis index `i`.
pub fn diag_parity_ok(gram: &GramMatrix, w_indices: &[usize]) -> bool {
    (0..gram.n()).all(|i| {
        let b: i64 = w_indices.iter().map(|&j| gram.entry(i, j)).sum();
        (gram.entry(i, i) - b) % 2 == 0
    })
}

/// Enumerate all positive definite Minkowski-reduced matrices with
/// `m_nn <= diag_max`, in lexicographic order of
/// `(m_11, ..., m_nn, m_12, m_13, ..., m_34)`.
///
/// The walk is split over the diagonal tuples and may run on the rayon pool;
/// chunks are merged back in order, so the output is deterministic.
pub fn enumerate_reduced(spec: &ReducedEnumSpec) -> Result<Vec<GramMatrix>> {
    if spec.n == 0 || spec.n > 4 {
        return Err(Error::UnsupportedDimension {
            n: spec.n,
            what: "reduced enumeration",
        });
    }
    if spec.diag_max < 1 {
        return Err(Error::InvalidInput("diag_max must be >= 1".into()));
    }
    let diags = diagonal_tuples(spec.n, spec.diag_max);
    let chunks = parallel::ordered_map(diags, |diag| {
        let mut found = Vec::new();
        for_each_reduced_with_diag(&diag, &mut |g| {
            let parity_ok = match &spec.parity_filter {
                Some(w) => diag_parity_ok(g, w),
                None => true,
            };
            if parity_ok && spec.extra.iter().all(|p| p(g)) {
                found.push(g.clone());
            }
        });
        found
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// All non-decreasing positive diagonal tuples bounded by `diag_max`,
/// lexicographically ordered.
pub(crate) fn diagonal_tuples(n: usize, diag_max: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; n];
    fn rec(cur: &mut Vec<i64>, pos: usize, lo: i64, diag_max: i64, out: &mut Vec<Vec<i64>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in lo..=diag_max {
            cur[pos] = v;
            rec(cur, pos + 1, v, diag_max, out);
        }
    }
    rec(&mut cur, 0, 1, diag_max, &mut out);
    out
}

/// Enumerate reduced positive definite matrices with the given fixed diagonal,
/// visiting off-diagonals in lexicographic order `m_12, m_13, ..., m_34`.
pub(crate) fn for_each_reduced_with_diag(diag: &[i64], f: &mut dyn FnMut(&GramMatrix)) {
    let n = diag.len();
    let mut m = vec![0i64; n * n];
    for i in 0..n {
        m[i * n + i] = diag[i];
    }
    // Off-diagonal positions in canonical order.
    let mut positions = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            positions.push((i, j));
        }
    }
    positions.sort(); // row-major upper triangle: (0,1),(0,2),...,(2,3)
    rec_offdiag(&mut m, n, diag, &positions, 0, f);
}

fn rec_offdiag(
    m: &mut Vec<i64>,
    n: usize,
    diag: &[i64],
    positions: &[(usize, usize)],
    pos: usize,
    f: &mut dyn FnMut(&GramMatrix),
) {
    if pos == positions.len() {
        let g = GramMatrix { n, m: m.clone() };
        if g.is_positive_definite() {
            f(&g);
        }
        return;
    }
    let (i, j) = positions[pos];
    let (lo, hi) = offdiag_range(m, n, diag, i, j);
    for v in lo..=hi {
        m[i * n + j] = v;
        m[j * n + i] = v;
        // Cheap minor pruning at the points where a leading block completes.
        if (i, j) == (1, 2) {
            let g = GramMatrix { n, m: m.clone() };
            if g.leading_minor(3).map(|d| d <= 0).unwrap_or(true) {
                continue;
            }
        }
        rec_offdiag(m, n, diag, positions, pos + 1, f);
    }
    m[i * n + j] = 0;
    m[j * n + i] = 0;
}

/// Admissible range of the off-diagonal entry at `(i, j)` given the entries
/// already fixed (everything earlier in the canonical order).
fn offdiag_range(m: &[i64], n: usize, diag: &[i64], i: usize, j: usize) -> (i64, i64) {
    let e = |a: usize, b: usize| m[a * n + b];
    let (mut lo, mut hi) = if i == 0 {
        // Sign normalization plus |2 m_1j| <= m_11.
        (0, diag[0] / 2)
    } else {
        (-(diag[i] / 2), diag[i] / 2)
    };
    if i >= 1 {
        // 2 m_ij >= -(m_11 + m_ii) + 2 m_1i + 2 m_1j, halved upward.
        let bound2 = -(diag[0] + diag[i]) + 2 * (e(0, i) + e(0, j));
        lo = lo.max(div_ceil_i64(bound2, 2));
    }
    if n == 4 && (i, j) == (2, 3) {
        let (m11, m22, m33) = (diag[0], diag[1], diag[2]);
        let (m12, m13, m14, m23, m24) = (e(0, 1), e(0, 2), e(0, 3), e(1, 2), e(1, 3));
        let lowers = [
            -(m22 + m33) - 2 * (m23 + m24),
            -(m22 + m33) + 2 * (m23 + m24),
            -(m11 + m22 + m33) + 2 * (m12 + m13 + m14 - m23 - m24),
            -(m11 + m22 + m33) + 2 * (-m12 + m13 + m14 + m23 + m24),
        ];
        let uppers = [
            (m22 + m33) + 2 * (-m23 + m24),
            (m22 + m33) + 2 * (m23 - m24),
            (m11 + m22 + m33) + 2 * (-m12 + m13 - m14 - m23 + m24),
            (m11 + m22 + m33) + 2 * (-m12 - m13 + m14 + m23 - m24),
        ];
        for l in lowers {
            lo = lo.max(div_ceil_i64(l, 2));
        }
        for u in uppers {
            hi = hi.min(div_floor_i64(u, 2));
        }
    }
    (lo, hi)
}

pub(crate) fn div_ceil_i64(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    if a >= 0 {
        (a + b - 1) / b
    } else {
        -((-a) / b)
    }
}

pub(crate) fn div_floor_i64(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    if a >= 0 {
        a / b
    } else {
        -((-a + b - 1) / b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: &[&[i64]]) -> GramMatrix {
        GramMatrix::from_rows(rows).unwrap()
    }

    fn exceptional1() -> GramMatrix {
        g(&[
            &[9, 3, 3, 2],
            &[3, 9, 3, -4],
            &[3, 3, 9, -4],
            &[2, -4, -4, 9],
        ])
    }

    #[test]
    fn quadratic_value_examples() {
        assert_eq!(GramMatrix::identity(2).quadratic_value(&[1, 1]).unwrap(), 2);
        let m = g(&[&[8, 2], &[2, 12]]);
        assert_eq!(m.quadratic_value(&[0, 1]).unwrap(), 12);
        assert_eq!(m.quadratic_value(&[1, -1]).unwrap(), 16);
        assert!(matches!(
            m.quadratic_value(&[1, 2, 3]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn positive_definite_examples() {
        assert!(GramMatrix::identity(3).is_positive_definite());
        assert!(!g(&[&[2, 2], &[2, 2]]).is_positive_definite());
        assert!(exceptional1().is_positive_definite());
    }

    #[test]
    fn minkowski_reduced_examples() {
        assert!(GramMatrix::identity(4).is_minkowski_reduced().unwrap());
        assert!(!g(&[&[2, 2], &[2, 2]]).is_minkowski_reduced().unwrap());
        assert!(exceptional1().is_minkowski_reduced().unwrap());
        assert!(matches!(
            GramMatrix::identity(5).is_minkowski_reduced(),
            Err(Error::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn enumerate_rank1() {
        let out = enumerate_reduced(&ReducedEnumSpec::new(1, 3)).unwrap();
        let expected: Vec<GramMatrix> = (1..=3)
            .map(|v| GramMatrix::diagonal(&[v]).unwrap())
            .collect();
        assert_eq!(out, expected);
    }

    #[test]
    fn enumerate_rank2_small() {
        let out = enumerate_reduced(&ReducedEnumSpec::new(2, 2)).unwrap();
        let expected = vec![
            g(&[&[1, 0], &[0, 1]]),
            g(&[&[1, 0], &[0, 2]]),
            g(&[&[2, 0], &[0, 2]]),
            g(&[&[2, 1], &[1, 2]]),
        ];
        assert_eq!(out, expected);
    }

    #[test]
    fn enumerate_with_case1_filter_is_empty() {
        // Case 1 assumption on w = d1 + d2: Q(w) > 12 and r_{K,w} > 12.
        let mut spec = ReducedEnumSpec::new(2, 5);
        spec.extra.push(Box::new(|gm: &GramMatrix| {
            let coset = CosetSpec::new(gm.clone(), &[0, 1]).unwrap();
            let report = crate::criteria::necessary_conditions(&coset).unwrap();
            coset.q_w() > 12 && report.r_kw.map(|r| r > 12).unwrap_or(false)
        }));
        assert!(enumerate_reduced(&spec).unwrap().is_empty());
    }

    /// Brute-force cross check: every symmetric matrix within bounds that is
    /// positive definite and reduced must appear, and nothing else.
    #[test]
    fn enumerate_matches_brute_force_rank3() {
        for diag_max in [3i64, 4] {
            let enumerated = enumerate_reduced(&ReducedEnumSpec::new(3, diag_max)).unwrap();
            let mut brute = Vec::new();
            for a in 1..=diag_max {
                for b in 1..=diag_max {
                    for c in 1..=diag_max {
                        for p in -diag_max..=diag_max {
                            for q in -diag_max..=diag_max {
                                for r in -diag_max..=diag_max {
                                    let m = g(&[&[a, p, q], &[p, b, r], &[q, r, c]]);
                                    if m.is_minkowski_reduced().unwrap() && m.is_positive_definite()
                                    {
                                        brute.push(m);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(enumerated.len(), brute.len());
            let set: std::collections::HashSet<_> = brute.into_iter().collect();
            for m in &enumerated {
                assert!(set.contains(m));
            }
        }
    }

    #[test]
    fn enumerate_is_strictly_increasing_and_pd() {
        let out = enumerate_reduced(&ReducedEnumSpec::new(3, 4)).unwrap();
        let key = |m: &GramMatrix| {
            let mut k = vec![m.entry(0, 0), m.entry(1, 1), m.entry(2, 2)];
            k.extend([m.entry(0, 1), m.entry(0, 2), m.entry(1, 2)]);
            k
        };
        for w in out.windows(2) {
            assert!(key(&w[0]) < key(&w[1]));
        }
        for m in &out {
            assert!(m.is_positive_definite());
            assert!(m.is_minkowski_reduced().unwrap());
        }
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let c = CosetSpec::new(g(&[&[8, 2], &[2, 12]]), &[1]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"n":2,"m":[[8,2],[2,12]],"w":[2]}"#);
        let back: CosetSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        let bad = r#"{"n":2,"m":[[8,2],[3,12]],"w":[2]}"#;
        assert!(serde_json::from_str::<CosetSpec>(bad).is_err());
    }

    #[test]
    fn coset_derived_quantities() {
        let c = CosetSpec::new(g(&[&[8, 2], &[2, 12]]), &[1]).unwrap();
        assert_eq!(c.q_w(), 12);
        assert_eq!(c.w_diag_sum(), 12);
        assert_eq!(c.b_w_basis(0), 2);
    }
}
