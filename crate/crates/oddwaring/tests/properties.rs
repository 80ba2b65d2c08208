//! Property-based invariants for the search, the filters, and the rank-1
//! closed form.

use proptest::prelude::*;

use oddwaring::repsearch::{self, SearchOutcome};
use oddwaring::{criteria, oddsq, CosetSpec, GramMatrix, SearchBudget};

/// A positive definite coset built from an explicit integer factor `T`, so it
/// is representable at `r = ncols(T)` by construction whenever every column
/// has odd w-sum.
#[derive(Debug, Clone)]
struct BuiltCoset {
    coset: CosetSpec,
    r: usize,
}

fn built_coset(n: usize, r: usize) -> impl Strategy<Value = BuiltCoset> {
    let cols = prop::collection::vec(prop::collection::vec(-2i64..=2, n), r);
    let w = prop::collection::vec(any::<bool>(), n);
    (cols, w).prop_filter_map("degenerate coset", move |(mut cols, w)| {
        let mut w_indices: Vec<usize> = (0..n).filter(|&i| w[i]).collect();
        if w_indices.is_empty() {
            w_indices.push(0);
        }
        for col in &mut cols {
            let s: i64 = w_indices.iter().map(|&i| col[i]).sum();
            if s.rem_euclid(2) == 0 {
                col[w_indices[0]] += 1;
            }
        }
        let mut m = vec![0i64; n * n];
        for col in &cols {
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] += col[i] * col[j];
                }
            }
        }
        let gram = GramMatrix::from_flat(n, m).ok()?;
        if !gram.is_positive_definite() {
            return None;
        }
        let coset = CosetSpec::new(gram, &w_indices).ok()?;
        Some(BuiltCoset { coset, r })
    })
}

fn any_built_coset() -> impl Strategy<Value = BuiltCoset> {
    // `r >= n` so the factor can have full rank; anything less is never
    // positive definite and would starve the filter.
    (1usize..=3).prop_flat_map(|n| (n..=6usize).prop_flat_map(move |r| built_coset(n, r)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The search must find every coset that is representable by
    /// construction, and canonicalization must not change the verdict.
    #[test]
    fn search_finds_constructed_representations(bc in any_built_coset()) {
        let canon = SearchBudget::unbounded();
        let plain = SearchBudget { max_nodes: None, canonicalize_columns: false };
        let (a, _) = repsearch::find_representation(&bc.coset, bc.r, &canon).unwrap();
        let (b, _) = repsearch::find_representation(&bc.coset, bc.r, &plain).unwrap();
        let t = a.found().expect("constructed coset must be representable");
        prop_assert!(t.verify(&bc.coset));
        prop_assert!(b.found().is_some());
        prop_assert!(b.found().unwrap().verify(&bc.coset));
    }

    /// Canonicalization on/off agree on negative verdicts too.
    #[test]
    fn canonicalization_preserves_refutations(bc in any_built_coset(), r in 1usize..=6) {
        let canon = SearchBudget::unbounded();
        let plain = SearchBudget { max_nodes: None, canonicalize_columns: false };
        let (a, _) = repsearch::find_representation(&bc.coset, r, &canon).unwrap();
        let (b, _) = repsearch::find_representation(&bc.coset, r, &plain).unwrap();
        prop_assert_eq!(
            matches!(a, SearchOutcome::Found(_)),
            matches!(b, SearchOutcome::Found(_))
        );
    }

    /// Isometry is reflexive, and symmetric on same-rank pairs.
    #[test]
    fn isometry_reflexive_symmetric(a in built_coset(3, 4), b in built_coset(3, 4)) {
        prop_assert!(repsearch::cosets_isometric(&a.coset, &a.coset).unwrap());
        let ab = repsearch::cosets_isometric(&a.coset, &b.coset).unwrap();
        let ba = repsearch::cosets_isometric(&b.coset, &a.coset).unwrap();
        prop_assert_eq!(ab, ba);
    }

    /// A split certificate is sound: parts are a composition of the residue,
    /// the reduced form matches, stays positive definite, and its Q(w) drops
    /// to a multiple of 8.
    #[test]
    fn split_certificate_sound(bc in any_built_coset()) {
        let q_w = bc.coset.q_w();
        prop_assume!(q_w > 8);
        if let Some(cert) = criteria::find_split(&bc.coset).unwrap() {
            prop_assert_eq!(cert.k, criteria::split_residue(q_w));
            prop_assert_eq!(cert.parts.iter().sum::<i64>(), cert.k);
            prop_assert!(cert.parts.iter().all(|&p| p >= 0));
            let reduced = bc
                .coset
                .gram()
                .minus_diagonal(bc.coset.w_indices(), &cert.parts);
            prop_assert_eq!(&cert.reduced, &reduced);
            prop_assert!(reduced.is_positive_definite());
            let reduced_coset = CosetSpec::new(reduced, bc.coset.w_indices()).unwrap();
            prop_assert_eq!((q_w - cert.k).rem_euclid(8), 0);
            prop_assert_eq!(reduced_coset.q_w(), q_w - cert.k);
        }
    }

    /// The necessary-condition report is internally consistent.
    #[test]
    fn necessary_report_consistent(bc in any_built_coset()) {
        let rep = criteria::necessary_conditions(&bc.coset).unwrap();
        prop_assert_eq!(rep.q_w, bc.coset.q_w());
        if let Some(r_kw) = rep.r_kw {
            prop_assert!(r_kw >= 1);
            prop_assert!(r_kw <= bc.coset.w_diag_sum());
            prop_assert_eq!((r_kw - rep.q_w).rem_euclid(8), 0);
        }
        for &r in &rep.admissible_r {
            prop_assert!(r >= 1);
            prop_assert!(r <= rep.q_w);
            prop_assert!(rep.r_kw.is_some_and(|cap| r <= cap));
            prop_assert_eq!((r - rep.q_w).rem_euclid(8), 0);
        }
        // A coset representable by construction must pass every filter.
        prop_assert!(rep.parity_ok);
        prop_assert!(rep.admissible_r.contains(&(bc.r as i64)));
    }

    /// Rank-1 closed form: `decompose_odd_squares(m, r)` succeeds exactly for
    /// `r = m (mod 8)` with `min_odd_squares(m) <= r <= m`, and the witness
    /// is exact.
    #[test]
    fn oddsq_decompose_iff_admissible(m in 1i64..=3000) {
        let rmin = oddsq::min_odd_squares(m);
        prop_assert!((1..=10).contains(&rmin));
        prop_assert_eq!((m - rmin).rem_euclid(8), 0);
        for r in 1..=m.min(40) {
            let dec = oddsq::decompose_odd_squares(m, r);
            let admissible = (m - r).rem_euclid(8) == 0 && r >= rmin;
            prop_assert_eq!(dec.is_some(), admissible, "m={} r={}", m, r);
            if let Some(dec) = dec {
                prop_assert_eq!(dec.parts.len(), r as usize);
                prop_assert!(dec.parts.iter().all(|&p| p > 0 && p % 2 == 1));
                prop_assert_eq!(dec.parts.iter().map(|&p| p * p).sum::<i64>(), m);
            }
        }
    }
}
