//! The probabilistic layer: laws of the step X, the root counts N and
//! N-tilde, the random walk S_k, exact total-variation distances between
//! the two uniform tree models, the conditional fixed-point law, and the
//! concentration checks behind the main theorem.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, Zero};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::asymptotics::{self, AsymptoticsError};
use crate::counting::{self, CountingError};
use crate::enumerate;
use crate::hp;
use crate::sample::{SampleError, SamplerContext};

/// Truncation order used when a caller does not supply one; high enough
/// for every desk-scale n in the test suite.
pub const DEFAULT_ORDER: usize = 400;

/// Exact-TV enumeration cap (f_18 = 123867 trees is the largest fiber
/// walked exhaustively).
pub const TV_CAP: usize = 18;

#[derive(Debug, Error)]
pub enum StochasticsError {
    #[error("step-law normalization failed: |sum - 1| = {0:e}")]
    Normalization(f64),
    #[error("n = {0} exceeds the exact-TV cap {1}")]
    TvCapExceeded(usize, usize),
    #[error("counting error: {0}")]
    Counting(#[from] CountingError),
    #[error("asymptotics error: {0}")]
    Asymptotics(#[from] AsymptoticsError),
    #[error("sampling error: {0}")]
    Sample(#[from] SampleError),
}

// ---- step distribution ------------------------------------------------

/// Law of the step X: P(X = m) = e s_m rho^m.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    pub rho: f64,
    /// pmf[m] = P(X = m); pmf[0] = 0.
    pub pmf: Vec<f64>,
    pub mean: f64,
}

pub fn step_law(order: usize) -> Result<StepDistribution, StochasticsError> {
    let consts = asymptotics::constants_hp(order.max(50))?;
    let s = counting::s_series(order)?;
    let e = hp::e();
    let mut pmf = vec![0.0f64; order + 1];
    let mut rho_m = hp::from_u64(1);
    for m in 1..=order {
        rho_m = hp::mul(&rho_m, &consts.rho);
        let sm = s.coeff(m);
        if sm.is_zero() {
            continue;
        }
        let smh = hp::div(&hp::from_bigint(sm.numer()), &hp::from_bigint(sm.denom()));
        pmf[m] = hp::to_f64(&hp::mul(&hp::mul(&e, &smh), &rho_m));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(StochasticsError::Normalization((total - 1.0).abs()));
    }
    let mean = pmf.iter().enumerate().map(|(m, &p)| m as f64 * p).sum();
    Ok(StepDistribution { rho: hp::to_f64(&consts.rho), pmf, mean })
}

// ---- root-count laws --------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    /// N: P(N = k) = 2 k^{k-2} e^{-k} / k!  (PGF 2U(z/e)).
    N,
    /// N-tilde: P(~N = k) = k^{k-1} e^{-k} / k!  (PGF T(z/e)).
    NTilde,
}

#[derive(Debug, Clone)]
pub struct RootCountLaw {
    pub kind: RootKind,
    /// pmf[k] = P(kind = k); pmf[0] = 0.
    pub pmf: Vec<f64>,
}

/// log of the k-th mass, via ln Gamma; stable at any k.
fn root_mass(kind: RootKind, k: usize) -> f64 {
    let kf = k as f64;
    let (log_lead, log_pow) = match kind {
        RootKind::N => ((2.0f64).ln(), (kf - 2.0) * kf.ln()),
        RootKind::NTilde => (0.0, (kf - 1.0) * kf.ln()),
    };
    if k == 1 {
        // k^... with k = 1 is 1; avoid 0 * ln 1 noise
        return match kind {
            RootKind::N => 2.0 * (-1.0f64).exp(),
            RootKind::NTilde => (-1.0f64).exp(),
        };
    }
    (log_lead + log_pow - kf - ln_gamma(kf + 1.0)).exp()
}

pub fn root_count_law(kind: RootKind) -> RootCountLaw {
    root_count_law_to(kind, 400)
}

pub fn root_count_law_to(kind: RootKind, k_max: usize) -> RootCountLaw {
    let mut pmf = vec![0.0; k_max + 1];
    for k in 1..=k_max {
        pmf[k] = root_mass(kind, k);
    }
    RootCountLaw { kind, pmf }
}

/// Euler-Maclaurin value of sum_{k > K} k^{-s}.
fn zeta_tail(s: f64, big_k: f64) -> f64 {
    let a = big_k + 1.0;
    a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

/// sum_{k > K} k^{-s} R(k) where R is the reciprocal Stirling series
/// sqrt(2 pi k) (k/e)^k / k! = 1 - 1/12k + 1/288k^2 + 139/51840k^3 - ...
fn borel_tail(s: f64, big_k: f64) -> f64 {
    zeta_tail(s, big_k) - zeta_tail(s + 1.0, big_k) / 12.0
        + zeta_tail(s + 2.0, big_k) / 288.0
        + 139.0 * zeta_tail(s + 3.0, big_k) / 51840.0
}

/// sum_k k^moment P(kind = k), summed directly to K = 10^5 and closed
/// off with the Euler-Maclaurin tail of the Stirling form. The masses
/// decay only polynomially (k^{-5/2} resp. k^{-3/2}), so naive partial
/// sums cannot reach 1e-10 accuracy; the analytic tail can.
pub fn root_count_moment(kind: RootKind, moment: u32) -> f64 {
    const BIG_K: usize = 100_000;
    let mut total = 0.0f64;
    // small terms first for rounding hygiene
    for k in (1..=BIG_K).rev() {
        total += (k as f64).powi(moment as i32) * root_mass(kind, k);
    }
    let (lead, s) = match kind {
        RootKind::N => (2.0, 2.5),
        RootKind::NTilde => (1.0, 1.5),
    };
    let sqrt_2pi = (2.0 * std::f64::consts::PI).sqrt();
    total + lead / sqrt_2pi * borel_tail(s - moment as f64, BIG_K as f64)
}

// ---- generic distribution table ---------------------------------------

#[derive(Debug, Clone)]
pub enum Mass {
    Exact(BigRational),
    Real(f64),
}

impl Mass {
    pub fn to_f64(&self) -> f64 {
        match self {
            Mass::Real(x) => *x,
            Mass::Exact(q) => rational_to_f64(q),
        }
    }
}

/// f64 value of a rational with possibly huge numerator/denominator.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    hp::to_f64(&hp::div(&hp::from_bigint(q.numer()), &hp::from_bigint(q.denom())))
}

/// Distribution over integer keys; `exact` flags whether every mass is
/// an exact rational.
#[derive(Debug, Clone)]
pub struct DistTable {
    pub exact: bool,
    pub entries: BTreeMap<usize, Mass>,
}

impl DistTable {
    pub fn prob(&self, k: usize) -> f64 {
        self.entries.get(&k).map(|m| m.to_f64()).unwrap_or(0.0)
    }

    pub fn exact_prob(&self, k: usize) -> Option<&BigRational> {
        match self.entries.get(&k) {
            Some(Mass::Exact(q)) => Some(q),
            _ => None,
        }
    }

    pub fn total_f64(&self) -> f64 {
        self.entries.values().map(|m| m.to_f64()).sum()
    }

    pub fn total_exact(&self) -> Option<BigRational> {
        if !self.exact {
            return None;
        }
        let mut acc = BigRational::zero();
        for m in self.entries.values() {
            if let Mass::Exact(q) = m {
                acc += q;
            }
        }
        Some(acc)
    }
}

// ---- walk law ---------------------------------------------------------

/// Exact coefficient [z^n] s(z)^k.
pub fn walk_coeff(k: usize, n: usize) -> Result<BigRational, StochasticsError> {
    if k == 0 {
        return Ok(if n == 0 { BigRational::one() } else { BigRational::zero() });
    }
    let d = counting::shared_decomposition(n.max(k).max(1))?;
    Ok(d.s_power_coeff(k, n))
}

/// Law of S_k = X_1 + ... + X_k up to n_max:
/// P(S_k = n) = e^k rho^n [z^n] s(z)^k, evaluated in high precision
/// from the exact coefficients.
pub fn walk_law(k: usize, n_max: usize) -> Result<DistTable, StochasticsError> {
    let mut entries = BTreeMap::new();
    if k == 0 {
        entries.insert(0, Mass::Real(1.0));
        return Ok(DistTable { exact: false, entries });
    }
    let consts = asymptotics::constants_hp(DEFAULT_ORDER.max(n_max))?;
    let d = counting::shared_decomposition(n_max.max(k))?;
    let ek = hp::powi(&hp::e(), k);
    for n in k..=n_max {
        let c = d.s_power_coeff(k, n);
        if c.is_zero() {
            continue;
        }
        let ch = hp::div(&hp::from_bigint(c.numer()), &hp::from_bigint(c.denom()));
        let p = hp::mul(&hp::mul(&ek, &hp::powi(&consts.rho, n)), &ch);
        entries.insert(n, Mass::Real(hp::to_f64(&p)));
    }
    Ok(DistTable { exact: false, entries })
}

// ---- mixed walk identity ----------------------------------------------

/// The two exact sides of [z^n](F - Sym_0) = [z^n]U(s), plus the
/// probabilistic evaluation (1/2) P(S_N = n) rho^{-n} computed by an
/// independent floating-point convolution over the step law.
#[derive(Debug, Clone)]
pub struct MixedWalkCheck {
    pub n: usize,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub numeric: f64,
    pub numeric_relative_gap: f64,
}

pub fn mixed_walk_identity_check(n: usize) -> Result<MixedWalkCheck, StochasticsError> {
    let d = counting::shared_decomposition(n.max(1))?;
    let lhs = d.f.coeff(n) - d.sym0.coeff(n);
    let rhs = d.u_of_s.coeff(n);
    let numeric = half_walk_mass_numeric(n)?;
    let exact_f64 = rational_to_f64(&rhs);
    let gap = if exact_f64 == 0.0 { 0.0 } else { (numeric - exact_f64).abs() / exact_f64 };
    Ok(MixedWalkCheck { n, lhs, rhs, numeric, numeric_relative_gap: gap })
}

/// (1/2) P(S_N = n) rho^{-n} by direct f64 convolution: no series
/// composition, no rationals — a genuinely independent route.
fn half_walk_mass_numeric(n: usize) -> Result<f64, StochasticsError> {
    let step = step_law(n.max(50))?;
    let consts = asymptotics::constants_hp(DEFAULT_ORDER.max(n))?;
    let mut dist = vec![0.0f64; n + 1];
    dist[0] = 1.0;
    let mut mix = 0.0f64;
    for k in 1..=n {
        let mut next = vec![0.0f64; n + 1];
        for (j, &dj) in dist.iter().enumerate() {
            if dj == 0.0 {
                continue;
            }
            for m in 1..=n.saturating_sub(j) {
                let p = step.pmf[m];
                if p != 0.0 {
                    next[j + m] += dj * p;
                }
            }
        }
        dist = next;
        mix += root_mass(RootKind::N, k) * dist[n];
    }
    let rho_neg_n = hp::to_f64(&hp::powi(&hp::div(&hp::from_u64(1), &consts.rho), n));
    Ok(0.5 * mix * rho_neg_n)
}

// ---- conditional fixed points ------------------------------------------

/// P(N = k | S_N = n) = [z^n]Sym_k / (f_n - [z^n]Sym_0), exact.
pub fn conditional_fixed_points(n: usize) -> Result<DistTable, StochasticsError> {
    let d = counting::shared_decomposition(n.max(1))?;
    let fact_n = crate::tree::factorial(n);
    let denom = d.free_count(n) * &fact_n - d.sym_k_weight(0, n);
    let mut entries = BTreeMap::new();
    for k in 1..=n {
        let w = d.sym_k_weight(k, n);
        if w.is_zero() {
            continue;
        }
        entries.insert(k, Mass::Exact(BigRational::new(w, denom.clone())));
    }
    Ok(DistTable { exact: true, entries })
}

// ---- total variation ---------------------------------------------------

/// Exact d_TV(F(A_n), F_n) = (1/2) sum_F |o(F)/a_n - 1/f_n| by walking
/// every free tree.
pub fn tv_exact(n: usize) -> Result<BigRational, StochasticsError> {
    if n > TV_CAP {
        return Err(StochasticsError::TvCapExceeded(n, TV_CAP));
    }
    let a_n = counting::rooted_counts(n)?.get(n).clone();
    let f_n = counting::free_counts_dissymmetry(n)?.get(n).clone();
    let mut acc = BigRational::zero();
    for tree in enumerate::gen_free(n) {
        let o = BigInt::from(tree.orbit_count());
        let diff = BigRational::new(o, a_n.clone()) - BigRational::new(BigInt::one(), f_n.clone());
        acc += diff.abs();
    }
    Ok(acc / BigRational::from_integer(BigInt::from(2)))
}

#[derive(Debug, Clone)]
pub struct TvEstimate {
    pub n: usize,
    pub tv: f64,
    /// Half-width of the 95% normal confidence interval.
    pub ci_half_width: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Monte-Carlo estimate of d_TV via the identity
/// d_TV = E_{F ~ F(A_n)}[ max(0, 1 - a_n/(f_n o(F))) ].
pub fn tv_mc(n: usize, samples: usize, seed: u64) -> Result<TvEstimate, StochasticsError> {
    let a_n = counting::rooted_counts(n)?.get(n).clone();
    let f_n = counting::free_counts_dissymmetry(n)?.get(n).clone();
    let ratio = rational_to_f64(&BigRational::new(a_n, f_n));
    let mut ctx = SamplerContext::new(n, seed)?;
    let mut sum = 0.0f64;
    let mut sum_sq = 0.0f64;
    for _ in 0..samples {
        let f = ctx.sample_free_approx(n)?;
        let o = f.orbit_count() as f64;
        let v = (1.0 - ratio / o).max(0.0);
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    Ok(TvEstimate {
        n,
        tv: mean,
        ci_half_width: 1.96 * (var / samples as f64).sqrt(),
        samples,
        seed,
    })
}

// ---- concentration ------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub n: usize,
    pub alpha: f64,
    pub center: f64,
    pub radius: f64,
    pub tail_mass: f64,
    /// -log(tail)/n^{2 alpha - 1}; infinite when the tail is empty.
    pub bound_exponent: f64,
}

/// Mass of the conditional fixed-point law outside
/// |k - n/E[X]| <= n^alpha, with the fitted decay exponent.
pub fn concentration_check(n: usize, alpha: f64) -> Result<ConcentrationReport, StochasticsError> {
    assert!(alpha > 0.5 && alpha < 1.0, "alpha in (0.5, 1)");
    let consts = asymptotics::constants_hp(DEFAULT_ORDER.max(n))?;
    let center = n as f64 / hp::to_f64(&consts.mean_x);
    let radius = (n as f64).powf(alpha);
    let law = conditional_fixed_points(n)?;
    let mut tail = BigRational::zero();
    for (&k, mass) in &law.entries {
        if (k as f64 - center).abs() >= radius {
            if let Mass::Exact(q) = mass {
                tail += q;
            }
        }
    }
    let tail_mass = rational_to_f64(&tail);
    let scale = (n as f64).powf(2.0 * alpha - 1.0);
    let bound_exponent =
        if tail_mass > 0.0 { -tail_mass.ln() / scale } else { f64::INFINITY };
    Ok(ConcentrationReport { n, alpha, center, radius, tail_mass, bound_exponent })
}

#[derive(Debug, Clone)]
pub struct AppendixCheck {
    pub k: usize,
    pub x: f64,
    /// P(|S_k - k E[X]| >= x), from the exact walk coefficients.
    pub exact_tail: f64,
    /// inf over the lambda sweep of 2 exp(c k lambda^2 - lambda x).
    pub best_bound: f64,
    /// Computed cumulant constant (max of psi'' on [0, delta]).
    pub c: f64,
    pub delta: f64,
    pub holds: bool,
}

/// Medium-deviation check: the exact two-sided tail of S_k against the
/// appendix-lemma bound 2 exp(c k lambda^2 - lambda x), with c the
/// maximum second derivative of the cumulant generating function of X
/// on [0, delta] and delta half the fitted geometric decay rate of the
/// step pmf. Both c and delta are computed here, not assumed.
pub fn appendix_lemma_check(k: usize, x: f64) -> Result<AppendixCheck, StochasticsError> {
    let order = 200usize;
    let step = step_law(order)?;
    let consts = asymptotics::constants_hp(DEFAULT_ORDER)?;
    let mean = hp::to_f64(&consts.mean_x);

    // fitted geometric decay r of the step pmf, then delta = ln(1/r)/2
    let r = (step.pmf[150] / step.pmf[100]).powf(1.0 / 50.0);
    assert!(r > 0.0 && r < 1.0);
    let delta = (1.0 / r).ln() / 2.0;

    // c = max of psi''(lambda) over [0, delta] via tilted moments
    let psi_dd = |lambda: f64| -> f64 {
        let (mut z, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for (m, &p) in step.pmf.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let w = p * (lambda * m as f64).exp();
            z += w;
            m1 += m as f64 * w;
            m2 += (m as f64) * (m as f64) * w;
        }
        m2 / z - (m1 / z) * (m1 / z)
    };
    let grid = 200usize;
    let c = (0..=grid)
        .map(|i| psi_dd(delta * i as f64 / grid as f64))
        .fold(f64::NEG_INFINITY, f64::max);

    // exact central mass over |n - k mean| < x, in high precision
    let lo = ((k as f64 * mean - x).ceil().max(k as f64)) as usize;
    let hi = (k as f64 * mean + x).floor() as usize;
    let d = counting::shared_decomposition(hi.max(k))?;
    let ek = hp::powi(&hp::e(), k);
    let mut center_mass = hp::from_u64(0);
    for n in lo..=hi {
        if (n as f64 - k as f64 * mean).abs() >= x {
            continue;
        }
        let cf = d.s_power_coeff(k, n);
        if cf.is_zero() {
            continue;
        }
        let ch = hp::div(&hp::from_bigint(cf.numer()), &hp::from_bigint(cf.denom()));
        let p = hp::mul(&hp::mul(&ek, &hp::powi(&consts.rho, n)), &ch);
        center_mass = hp::add(&center_mass, &p);
    }
    let exact_tail = hp::to_f64(&hp::sub(&hp::from_u64(1), &center_mass));

    let best_bound = (1..=grid)
        .map(|i| {
            let lambda = delta * i as f64 / grid as f64;
            2.0 * (c * k as f64 * lambda * lambda - lambda * x).exp()
        })
        .fold(f64::INFINITY, f64::min);

    Ok(AppendixCheck {
        k,
        x,
        exact_tail,
        best_bound,
        c,
        delta,
        holds: exact_tail <= best_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_law_basics() {
        let step = step_law(200).unwrap();
        assert!((step.pmf[1] - step.rho * std::f64::consts::E).abs() < 1e-12);
        assert_eq!(step.pmf[2], 0.0, "[z^2]s = 0");
        let total: f64 = step.pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "total {}", total);
        let mean_ref = asymptotics::constants(DEFAULT_ORDER).unwrap().mean_x;
        assert!((step.mean - mean_ref).abs() < 1e-8, "{} vs {}", step.mean, mean_ref);
    }

    #[test]
    fn step_tail_geometric() {
        let step = step_law(200).unwrap();
        // fitted ratio r < 1 with pmf[m] <= pmf[1] r^{m-1} for all m
        let r = (2..=200)
            .filter(|&m| step.pmf[m] > 0.0)
            .map(|m| (step.pmf[m] / step.pmf[1]).powf(1.0 / (m as f64 - 1.0)))
            .fold(0.0f64, f64::max);
        assert!(r < 0.7, "fitted decay {}", r);
        for m in 2..=200 {
            assert!(step.pmf[m] <= step.pmf[1] * r.powi(m as i32 - 1) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn root_count_first_masses() {
        let n = root_count_law(RootKind::N);
        let nt = root_count_law(RootKind::NTilde);
        assert!((n.pmf[1] - 2.0 / std::f64::consts::E).abs() < 1e-12);
        assert!((nt.pmf[1] - 1.0 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn root_count_normalization_and_mean() {
        // partial sums only converge like K^{-3/2}/K^{-1/2}; the
        // Euler-Maclaurin closure must land on U(1/e)=1/2 and T(1/e)=1.
        let total_n = root_count_moment(RootKind::N, 0);
        assert!((total_n - 1.0).abs() < 1e-10, "sum P(N=k) = {}", total_n);
        let total_nt = root_count_moment(RootKind::NTilde, 0);
        assert!((total_nt - 1.0).abs() < 1e-10, "sum P(~N=k) = {}", total_nt);
        let mean_n = root_count_moment(RootKind::N, 1);
        assert!((mean_n - 2.0).abs() < 1e-8, "E[N] = {}", mean_n);
    }

    #[test]
    fn walk_law_cases() {
        let w0 = walk_law(0, 5).unwrap();
        assert_eq!(w0.prob(0), 1.0);
        let w1 = walk_law(1, 50).unwrap();
        let step = step_law(50).unwrap();
        for n in 1..=50 {
            assert!((w1.prob(n) - step.pmf[n]).abs() < 1e-12, "at {}", n);
        }
        let w2 = walk_law(2, 10).unwrap();
        let p11 = step.pmf[1] * step.pmf[1];
        assert!((w2.prob(2) - p11).abs() < 1e-12);
        assert!((w2.prob(2) - 0.846).abs() < 1e-3);
    }

    #[test]
    fn mixed_walk_small_values() {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let c1 = mixed_walk_identity_check(1).unwrap();
        assert_eq!(c1.lhs, BigRational::one());
        assert_eq!(c1.rhs, BigRational::one());
        let c2 = mixed_walk_identity_check(2).unwrap();
        assert_eq!(c2.lhs, half);
        assert_eq!(c2.rhs, half);
    }

    #[test]
    fn mixed_walk_numeric_agreement() {
        for n in [10usize, 40, 100] {
            let c = mixed_walk_identity_check(n).unwrap();
            assert_eq!(c.lhs, c.rhs, "exact identity at n={}", n);
            assert!(c.numeric_relative_gap < 1e-6, "gap {} at n={}", c.numeric_relative_gap, n);
        }
    }

    #[test]
    fn conditional_law_small() {
        let t1 = conditional_fixed_points(1).unwrap();
        assert_eq!(t1.exact_prob(1), Some(&BigRational::one()));
        let t2 = conditional_fixed_points(2).unwrap();
        assert_eq!(t2.exact_prob(2), Some(&BigRational::one()));
        let t12 = conditional_fixed_points(12).unwrap();
        assert_eq!(t12.total_exact().unwrap(), BigRational::one());
        // mode near n/E[X] ~ 9.9
        let mode = t12
            .entries
            .iter()
            .max_by(|a, b| a.1.to_f64().partial_cmp(&b.1.to_f64()).unwrap())
            .map(|(&k, _)| k)
            .unwrap();
        assert!((9..=11).contains(&mode), "mode {}", mode);
    }

    #[test]
    fn conditional_matches_census() {
        for n in 1..=9usize {
            let series = conditional_fixed_points(n).unwrap();
            let census = enumerate::symmetry_census(n).unwrap();
            let f_n = counting::free_counts_dissymmetry(n).unwrap().get(n).clone();
            let sym0 = census.entries.get(&0).cloned().unwrap_or_else(BigRational::zero);
            let denom = BigRational::from_integer(f_n) - sym0;
            for k in 1..=n {
                let expect = census
                    .entries
                    .get(&k)
                    .cloned()
                    .unwrap_or_else(BigRational::zero)
                    / denom.clone();
                let got = series
                    .exact_prob(k)
                    .cloned()
                    .unwrap_or_else(BigRational::zero);
                assert_eq!(got, expect, "n={} k={}", n, k);
            }
        }
    }

    #[test]
    fn tv_exact_small_values() {
        assert_eq!(tv_exact(3).unwrap(), BigRational::zero());
        assert_eq!(tv_exact(4).unwrap(), BigRational::zero());
        assert_eq!(
            tv_exact(5).unwrap(),
            BigRational::new(BigInt::one(), BigInt::from(9))
        );
    }

    #[test]
    fn tv_profile_shape() {
        // The exact curve rises to its peak at n = 6 (3/20) and decays
        // from there; in particular d_TV(8) > d_TV(5), and the decay is
        // clear by n = 16.
        let t5 = tv_exact(5).unwrap();
        let t6 = tv_exact(6).unwrap();
        let t8 = tv_exact(8).unwrap();
        let t12 = tv_exact(12).unwrap();
        let t16 = tv_exact(16).unwrap();
        assert_eq!(t6, BigRational::new(BigInt::from(3), BigInt::from(20)));
        assert!(t6 > t5 && t8 > t5, "peak at 6: {} {} {}", t5, t6, t8);
        assert!(t16 < t12 && t12 < t8 && t8 < t6, "decay: {} {} {} {}", t6, t8, t12, t16);
    }

    #[test]
    fn tv_upper_bound_structural() {
        for n in 3..=12usize {
            let tv = tv_exact(n).unwrap();
            let a_n = counting::rooted_counts(n).unwrap().get(n).clone();
            let f_n = counting::free_counts_dissymmetry(n).unwrap().get(n).clone();
            let bound = BigRational::one() - BigRational::new(f_n, a_n);
            assert!(tv >= BigRational::zero() && tv <= bound, "n={}", n);
        }
    }

    #[test]
    fn tv_cap_enforced() {
        assert!(matches!(tv_exact(19), Err(StochasticsError::TvCapExceeded(19, TV_CAP))));
    }

    #[test]
    fn tv_mc_agrees_with_exact_at_n8() {
        let exact = rational_to_f64(&tv_exact(8).unwrap());
        let est = tv_mc(8, 20_000, 31337).unwrap();
        assert!(
            (est.tv - exact).abs() < est.ci_half_width.max(0.01),
            "mc {} vs exact {}",
            est.tv,
            exact
        );
    }

    #[test]
    fn concentration_tail_nested_in_alpha() {
        let t6 = concentration_check(60, 0.6).unwrap();
        let t75 = concentration_check(60, 0.75).unwrap();
        let t9 = concentration_check(60, 0.9).unwrap();
        assert!(t75.tail_mass <= t6.tail_mass);
        assert!(t9.tail_mass <= t75.tail_mass);
    }

    #[test]
    fn appendix_bound_holds() {
        let chk = appendix_lemma_check(100, 40.0).unwrap();
        assert!(chk.exact_tail > 0.0 && chk.exact_tail < 1.0);
        assert!(chk.holds, "tail {} vs bound {}", chk.exact_tail, chk.best_bound);
        assert!(chk.c > 0.0 && chk.delta > 0.0);
    }
}
