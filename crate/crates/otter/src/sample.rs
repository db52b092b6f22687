//! Random generation: exactly uniform Polya trees by the recursive
//! (RANRUT-style) method on the divisor-sum recurrence, exactly uniform
//! free trees by orbit-count rejection, and the cheap approximate free
//! sampler whose bias is exactly the total-variation distance computed
//! in module stochastics.
//!
//! Every categorical choice is made with exact integer arithmetic
//! against the BigInt weight tables, so uniformity is exact at every
//! size, not just below a float-precision cutoff.

use num::bigint::{BigInt, Sign};
use num::traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::counting::{self, CountingError};
use crate::tree::{canonicalize_free_adj, canonicalize_rooted_adj, FreeTree, RootedTree};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("requested size {0} outside context range 1..={1}")]
    OutOfRange(usize, usize),
    #[error("counting error: {0}")]
    Counting(#[from] CountingError),
}

/// One entry of the categorical table at size n: attach `copies` copies
/// of a uniform tree on `part` vertices; weight = part * a_part *
/// a_{n - copies*part}.
#[derive(Debug, Clone)]
struct PairEntry {
    copies: usize,
    part: usize,
    cumulative: BigInt,
}

/// Reproducible sampler: identical seed and n_max give identical sample
/// sequences.
pub struct SamplerContext {
    pub seed: u64,
    pub n_max: usize,
    /// Total rejection rounds spent in sample_free_exact so far.
    pub rounds_total: u64,
    rng: ChaCha12Rng,
    counts: Vec<BigInt>,
    tables: Vec<Vec<PairEntry>>,
}

impl SamplerContext {
    pub fn new(n_max: usize, seed: u64) -> Result<Self, SampleError> {
        assert!(n_max >= 1);
        let table = counting::rooted_counts(n_max)?;
        let mut counts = vec![BigInt::zero()];
        counts.extend(table.iter().map(|(_, v)| v.clone()));
        // (n-1) a_n = sum_{j d <= n-1} d a_d a_{n - j d}; the cumulative
        // sums drive the exact categorical draw at each recursion step.
        let mut tables = vec![Vec::new(), Vec::new()];
        for n in 2..=n_max {
            let mut entries = Vec::new();
            let mut acc = BigInt::zero();
            for d in 1..=n - 1 {
                for j in 1..=(n - 1) / d {
                    let w = BigInt::from(d) * &counts[d] * &counts[n - j * d];
                    if w.is_zero() {
                        continue;
                    }
                    acc += w;
                    entries.push(PairEntry { copies: j, part: d, cumulative: acc.clone() });
                }
            }
            debug_assert_eq!(acc, BigInt::from(n - 1) * &counts[n], "recurrence total at n={}", n);
            tables.push(entries);
        }
        Ok(SamplerContext {
            seed,
            n_max,
            rounds_total: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            counts,
            tables,
        })
    }

    pub fn rooted_count(&self, n: usize) -> &BigInt {
        &self.counts[n]
    }

    /// Uniform integer in [0, bound) by bit-masked rejection; exact.
    fn uniform_below(&mut self, bound: &BigInt) -> BigInt {
        debug_assert!(*bound > BigInt::zero());
        if bound.is_one() {
            return BigInt::zero();
        }
        let bits = bound.bits();
        let bytes = ((bits + 7) / 8) as usize;
        let mask_shift = (8 - (bits % 8)) % 8;
        let mut buf = vec![0u8; bytes];
        loop {
            self.rng.fill_bytes(&mut buf);
            buf[0] &= 0xffu8 >> mask_shift;
            let x = BigInt::from_bytes_be(Sign::Plus, &buf);
            if &x < bound {
                return x;
            }
        }
    }

    /// Exactly uniform canonical rooted tree on n vertices.
    pub fn sample_rooted(&mut self, n: usize) -> Result<RootedTree, SampleError> {
        if n < 1 || n > self.n_max {
            return Err(SampleError::OutOfRange(n, self.n_max));
        }
        let levels = self.sample_levels(n);
        let t = RootedTree::from_levels(levels).expect("sampled levels are a valid tree");
        Ok(canonicalize_rooted_adj(&t.adjacency(), 0).expect("tree input"))
    }

    /// Raw recursive sampler, returning an (uncanonicalized) level
    /// sequence: draw (j, d) by weight, build a uniform tree on
    /// n - j d vertices, attach j copies of a uniform d-vertex tree to
    /// its root.
    fn sample_levels(&mut self, n: usize) -> Vec<u32> {
        if n == 1 {
            return vec![1];
        }
        let total = BigInt::from(n - 1) * &self.counts[n];
        let x = self.uniform_below(&total);
        let idx = self.tables[n].partition_point(|e| e.cumulative <= x);
        let (copies, part) = (self.tables[n][idx].copies, self.tables[n][idx].part);
        let mut levels = self.sample_levels(n - copies * part);
        let branch = self.sample_levels(part);
        for _ in 0..copies {
            levels.extend(branch.iter().map(|&l| l + 1));
        }
        levels
    }

    /// Exactly uniform free tree on n vertices via rejection: forget the
    /// root of a uniform rooted tree and accept with probability
    /// 1/orbit_count, cancelling the size-biasing by rooting multiplicity.
    pub fn sample_free_exact(&mut self, n: usize) -> Result<FreeTree, SampleError> {
        loop {
            self.rounds_total += 1;
            let rooted = self.sample_rooted(n)?;
            let free = canonicalize_free_adj(&rooted.adjacency()).expect("tree input");
            let orbits = BigInt::from(free.orbit_count());
            if self.uniform_below(&orbits).is_zero() {
                return Ok(free);
            }
        }
    }

    /// Forget-root sampler without rejection; its law differs from
    /// uniform by exactly the total-variation distance that module
    /// stochastics computes.
    pub fn sample_free_approx(&mut self, n: usize) -> Result<FreeTree, SampleError> {
        let rooted = self.sample_rooted(n)?;
        Ok(canonicalize_free_adj(&rooted.adjacency()).expect("tree input"))
    }
}

/// Chi-square goodness-of-fit statistic against the uniform law over
/// `categories` cells, plus the critical value at the given significance.
pub fn chi_square_uniform(observed: &[u64], significance: f64) -> (f64, f64) {
    let k = observed.len();
    assert!(k >= 2);
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / k as f64;
    let stat: f64 = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    let dist = statrs::distribution::ChiSquared::new((k - 1) as f64).expect("df >= 1");
    let critical = statrs::distribution::ContinuousCDF::inverse_cdf(&dist, 1.0 - significance);
    (stat, critical)
}

/// Observed mean rejection rounds of sample_free_exact over `runs` runs.
pub fn mean_rounds(ctx: &mut SamplerContext, n: usize, runs: usize) -> Result<f64, SampleError> {
    let before = ctx.rounds_total;
    for _ in 0..runs {
        ctx.sample_free_exact(n)?;
    }
    Ok((ctx.rounds_total - before) as f64 / runs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate;
    use num::traits::ToPrimitive;
    use std::collections::HashMap;

    #[test]
    fn single_vertex_and_edge() {
        let mut ctx = SamplerContext::new(4, 7).unwrap();
        assert_eq!(ctx.sample_rooted(1).unwrap().n(), 1);
        let f = ctx.sample_free_exact(2).unwrap();
        assert_eq!(f.n(), 2);
        assert!(f.is_bicentral());
    }

    #[test]
    fn out_of_range_rejected() {
        let mut ctx = SamplerContext::new(6, 0).unwrap();
        assert!(matches!(ctx.sample_rooted(7), Err(SampleError::OutOfRange(7, 6))));
        assert!(matches!(ctx.sample_rooted(0), Err(SampleError::OutOfRange(0, 6))));
    }

    #[test]
    fn reproducible_streams() {
        let draw = |seed: u64| -> Vec<String> {
            let mut ctx = SamplerContext::new(10, seed).unwrap();
            (0..50).map(|_| ctx.sample_rooted(10).unwrap().to_string()).collect()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn sampled_trees_are_canonical() {
        let mut ctx = SamplerContext::new(12, 5).unwrap();
        for n in [1usize, 2, 5, 9, 12] {
            for _ in 0..20 {
                let t = ctx.sample_rooted(n).unwrap();
                assert_eq!(t.n(), n);
                assert!(t.is_canonical());
            }
        }
    }

    #[test]
    fn rooted_uniformity_chi_square_n4() {
        let trees: Vec<RootedTree> = enumerate::gen_rooted(4).collect();
        assert_eq!(trees.len(), 4);
        let index: HashMap<&RootedTree, usize> =
            trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut ctx = SamplerContext::new(4, 20240811).unwrap();
        let mut observed = vec![0u64; trees.len()];
        for _ in 0..40_000 {
            let t = ctx.sample_rooted(4).unwrap();
            observed[index[&t]] += 1;
        }
        let (stat, critical) = chi_square_uniform(&observed, 0.001);
        assert!(stat < critical, "chi2 {} >= {}", stat, critical);
    }

    #[test]
    fn free_exact_uniformity_chi_square_n6() {
        let trees: Vec<FreeTree> = enumerate::gen_free(6).collect();
        assert_eq!(trees.len(), 6);
        let index: HashMap<&FreeTree, usize> =
            trees.iter().enumerate().map(|(i, t)| (t, i)).collect();
        let mut ctx = SamplerContext::new(6, 7_654_321).unwrap();
        let mut observed = vec![0u64; trees.len()];
        for _ in 0..30_000 {
            let t = ctx.sample_free_exact(6).unwrap();
            observed[index[&t]] += 1;
        }
        let (stat, critical) = chi_square_uniform(&observed, 0.001);
        assert!(stat < critical, "chi2 {} >= {}", stat, critical);
    }

    #[test]
    fn approx_sampler_bias_at_n5() {
        // Forget-root frequencies must approach (3/9, 2/9, 4/9) by
        // orbit count, not uniform.
        let mut ctx = SamplerContext::new(5, 99).unwrap();
        let mut freq: HashMap<usize, u64> = HashMap::new();
        let draws = 30_000u64;
        for _ in 0..draws {
            let f = ctx.sample_free_approx(5).unwrap();
            *freq.entry(f.orbit_count()).or_insert(0) += 1;
        }
        for (orbits, expected) in [(3usize, 3.0 / 9.0), (2, 2.0 / 9.0), (4, 4.0 / 9.0)] {
            let got = freq[&orbits] as f64 / draws as f64;
            assert!((got - expected).abs() < 0.02, "orbit {}: {} vs {}", orbits, got, expected);
        }
    }

    #[test]
    fn mean_rounds_tracks_count_ratio() {
        let mut ctx = SamplerContext::new(30, 1234).unwrap();
        let a = counting::rooted_counts(30).unwrap();
        let f = counting::free_counts_dissymmetry(30).unwrap();
        let exact = (a.get(30) * 1_000_000u64 / f.get(30)).to_f64().unwrap() / 1e6;
        let got = mean_rounds(&mut ctx, 30, 2_000).unwrap();
        assert!((got - exact).abs() / exact < 0.1, "rounds {} vs {}", got, exact);
    }
}
