//! Exhaustive generation of rooted and free unlabelled trees — the
//! brute-force oracle behind every counting claim — plus the symmetry
//! census Sym_k by direct summation of fixed-point polynomials.
//!
//! Rooted trees are produced by the classical successor algorithm on
//! canonical level sequences (lexicographically decreasing order); free
//! trees are the rooted trees whose level sequence coincides with the
//! canonical center-rooted code of their underlying free tree, so each
//! free tree appears exactly once.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use thiserror::Error;

use crate::counting::SymTable;
use crate::degree::DegreeSet;
use crate::tree::{canonicalize_free_adj, FreeTree, RootedTree};

/// Guard on the census cost (the free stream at n = 12 has 551 trees,
/// at n = 18 already 123867).
pub const CENSUS_CAP: usize = 12;

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error("census size n = {0} exceeds the cap {1}")]
    CensusCapExceeded(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    Rooted,
    Free,
}

/// Stream of all canonical rooted trees on n vertices, level sequences
/// in lexicographically decreasing order, each exactly once.
#[derive(Debug)]
pub struct RootedStream {
    levels: Option<Vec<u32>>,
}

/// Restriction mode for a degree filter on the rooted stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeMode {
    /// All outdegrees in Omega* (the class A^{Omega*}).
    AllStar,
    /// Root outdegree in Omega, all others in Omega* (the tilde class).
    Tilde,
}

pub fn gen_rooted(n: usize) -> RootedStream {
    assert!(n >= 1, "need at least one vertex");
    RootedStream { levels: Some((1..=n as u32).collect()) }
}

/// Rooted stream restricted by outdegrees; mode AllStar and Tilde as in
/// module degree.
pub fn gen_rooted_restricted(n: usize, d: &DegreeSet, mode: DegreeMode) -> impl Iterator<Item = RootedTree> + '_ {
    let d = d.clone();
    gen_rooted(n).filter(move |t| outdegrees_allowed(t, &d, mode))
}

fn outdegrees_allowed(t: &RootedTree, d: &DegreeSet, mode: DegreeMode) -> bool {
    t.outdegrees().iter().enumerate().all(|(v, &deg)| {
        if v == 0 && mode == DegreeMode::Tilde {
            d.contains(deg)
        } else {
            d.star_contains(deg)
        }
    })
}

impl Iterator for RootedStream {
    type Item = RootedTree;

    fn next(&mut self) -> Option<RootedTree> {
        let levels = self.levels.as_mut()?;
        let out = RootedTree::from_levels(levels.clone()).expect("successor output is valid");
        debug_assert!(out.is_canonical());
        // Successor: find the last entry above 2, clip it by copying the
        // block that starts at its most recent shallower ancestor
        // position; the star (1,2,...,2) has no successor.
        match levels.iter().rposition(|&l| l > 2) {
            None => self.levels = None,
            Some(p) => {
                let q = levels[..p]
                    .iter()
                    .rposition(|&l| l == levels[p] - 1)
                    .expect("parent level present to the left");
                let d = p - q;
                for i in p..levels.len() {
                    levels[i] = levels[i - d];
                }
            }
        }
        Some(out)
    }
}

/// Stream of all canonical free trees on n vertices, each exactly once:
/// keep the rooted trees that are the canonical code of their own free
/// tree.
pub struct FreeStream {
    inner: RootedStream,
}

pub fn gen_free(n: usize) -> FreeStream {
    FreeStream { inner: gen_rooted(n) }
}

/// Free stream restricted to vertex degrees in Omega.
pub fn gen_free_restricted(n: usize, d: &DegreeSet) -> impl Iterator<Item = FreeTree> + '_ {
    let d = d.clone();
    gen_free(n).filter(move |f| f.degrees().iter().all(|&deg| d.contains(deg)))
}

impl Iterator for FreeStream {
    type Item = FreeTree;

    fn next(&mut self) -> Option<FreeTree> {
        loop {
            let rooted = self.inner.next()?;
            let free = canonicalize_free_adj(&rooted.adjacency()).expect("stream trees are trees");
            if free.code() == &rooted {
                return Some(free);
            }
        }
    }
}

/// Exact census of Sym_k at size n by direct summation over all free
/// trees: entry[k] = sum_F #{sigma in Aut(F) : fix(sigma) = k} / |Aut(F)|.
pub fn symmetry_census(n: usize) -> Result<SymTable, EnumerateError> {
    symmetry_census_with_cap(n, CENSUS_CAP)
}

pub fn symmetry_census_with_cap(n: usize, cap: usize) -> Result<SymTable, EnumerateError> {
    if n > cap {
        return Err(EnumerateError::CensusCapExceeded(n, cap));
    }
    let mut entries = std::collections::BTreeMap::new();
    for free in gen_free(n) {
        let aut = free.aut_size();
        let fix = free.fix_polynomial();
        for k in 0..=n {
            let c = fix.coeff(k);
            if c.is_zero() {
                continue;
            }
            let mass = BigRational::new(c, aut.clone());
            *entries.entry(k).or_insert_with(BigRational::zero) += mass;
        }
    }
    Ok(SymTable { n, entries })
}

/// Convenience: the number of trees the stream yields.
pub fn count_rooted(n: usize) -> BigInt {
    BigInt::from(gen_rooted(n).count())
}

pub fn count_free(n: usize) -> BigInt {
    BigInt::from(gen_free(n).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting;
    use num::traits::{One, ToPrimitive};

    #[test]
    fn rooted_small_streams() {
        assert_eq!(gen_rooted(1).count(), 1);
        assert_eq!(gen_rooted(3).count(), 2);
        assert_eq!(gen_rooted(10).count(), 719);
    }

    #[test]
    fn free_small_streams() {
        assert_eq!(gen_free(2).count(), 1);
        assert_eq!(gen_free(5).count(), 3);
        assert_eq!(gen_free(10).count(), 106);
    }

    #[test]
    fn rooted_stream_matches_counting_table() {
        let t = counting::rooted_counts(13).unwrap();
        for n in 1..=13 {
            assert_eq!(
                BigInt::from(gen_rooted(n).count()),
                t.get(n).clone(),
                "a_{} mismatch",
                n
            );
        }
    }

    #[test]
    fn free_stream_matches_counting_table() {
        let t = counting::free_counts_dissymmetry(13).unwrap();
        for n in 1..=13 {
            assert_eq!(
                BigInt::from(gen_free(n).count()),
                t.get(n).clone(),
                "f_{} mismatch",
                n
            );
        }
    }

    #[test]
    fn streams_yield_canonical_trees_without_repeats() {
        for n in 1..=9 {
            let rooted: Vec<_> = gen_rooted(n).collect();
            let mut seen = std::collections::HashSet::new();
            for t in &rooted {
                assert!(t.is_canonical());
                assert!(seen.insert(t.clone()), "duplicate rooted tree at n={}", n);
            }
            let free: Vec<_> = gen_free(n).collect();
            let mut seen = std::collections::HashSet::new();
            for f in &free {
                // idempotence under re-canonicalization
                let again = canonicalize_free_adj(&f.adjacency()).unwrap();
                assert_eq!(&again, f);
                assert!(seen.insert(f.clone()), "duplicate free tree at n={}", n);
            }
        }
    }

    #[test]
    fn free_five_vertex_shapes() {
        let trees: Vec<_> = gen_free(5).collect();
        let mut orbit_counts: Vec<usize> = trees.iter().map(|t| t.orbit_count()).collect();
        orbit_counts.sort_unstable();
        // path, star, spider have 3, 2, 4 rootings
        assert_eq!(orbit_counts, vec![2, 3, 4]);
    }

    #[test]
    fn census_hand_values() {
        let c1 = symmetry_census(1).unwrap();
        assert_eq!(c1.entries.len(), 1);
        assert_eq!(c1.entries[&1], BigRational::one());

        let c2 = symmetry_census(2).unwrap();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        assert_eq!(c2.entries[&0], half);
        assert_eq!(c2.entries[&2], half);
    }

    #[test]
    fn census_row_sums_are_free_counts() {
        let t = counting::free_counts_dissymmetry(8).unwrap();
        for n in 1..=8 {
            let c = symmetry_census(n).unwrap();
            assert_eq!(
                c.row_sum(),
                BigRational::from_integer(t.get(n).clone()),
                "row sum at n={}",
                n
            );
        }
    }

    #[test]
    fn census_cap_enforced() {
        assert!(matches!(
            symmetry_census(13),
            Err(EnumerateError::CensusCapExceeded(13, CENSUS_CAP))
        ));
    }

    #[test]
    fn census_matches_series_decomposition() {
        // The sharpest end-to-end check of the Sym_k split: census over
        // automorphisms equals the (k^{k-2}/k!) s^k coefficients.
        let d = counting::shared_decomposition(10).unwrap();
        for n in 1..=10usize {
            let census = symmetry_census(n).unwrap();
            for k in 0..=n {
                let expect = d.sym_k_coeff(k, n);
                let got = census.entries.get(&k).cloned().unwrap_or_else(BigRational::zero);
                assert_eq!(got, expect, "Sym_{} at n={}", k, n);
            }
        }
    }

    #[test]
    fn degree_restricted_streams() {
        let d: DegreeSet = "1,3".parse().unwrap();
        // A^{Omega*} with Omega*={0,2}: only odd sizes occur, one tree
        // each at n = 1, 3, 5 (leaf; cherry over two leaves; root whose
        // children are a leaf and a cherry).
        let counts: Vec<usize> = (1..=6)
            .map(|n| gen_rooted_restricted(n, &d, DegreeMode::AllStar).count())
            .collect();
        assert_eq!(counts, vec![1, 0, 1, 0, 1, 0]);
        // free degree-restricted: n=4 star only, n=6 double-star only
        let f4: Vec<_> = gen_free_restricted(4, &d).collect();
        assert_eq!(f4.len(), 1);
        let f6: Vec<_> = gen_free_restricted(6, &d).collect();
        assert_eq!(f6.len(), 1);
        assert_eq!(gen_free_restricted(5, &d).count(), 0);
    }

    #[test]
    fn mean_rounds_ratio_components() {
        // a_n/f_n from streams at a mid scale used by the sampler tests.
        let a = gen_rooted(12).count();
        let f = gen_free(12).count();
        let table_a = counting::rooted_counts(12).unwrap();
        let table_f = counting::free_counts_dissymmetry(12).unwrap();
        assert_eq!(a as u64, table_a.get(12).to_u64().unwrap());
        assert_eq!(f as u64, table_f.get(12).to_u64().unwrap());
    }
}
