//! The invariant suite behind `otter verify`: every check recomputes a
//! quantity by an independent route and compares it against either an
//! exact identity or a frozen threshold from `fixtures/thresholds.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num::rational::BigRational;
use serde::Deserialize;

use otter::degree::{self, DegreeSet, RestrictedKind};
use otter::enumerate::{self, DegreeMode};
use otter::sample::{chi_square_uniform, mean_rounds, SamplerContext};
use otter::{asymptotics, counting, stochastics};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

// ---- thresholds --------------------------------------------------------

#[derive(Deserialize)]
pub struct Thresholds {
    pub order: usize,
    pub constants: ConstantsFixture,
    pub asymptotic_ratio: RatioFixture,
    pub second_order: SecondOrderFixture,
    pub local_limit: LocalLimitFixture,
    pub tv_exact: BTreeMap<String, String>,
    pub tv_restricted_13: BTreeMap<String, String>,
    pub concentration: ConcentrationFixture,
    pub appendix_grid: Vec<AppendixPoint>,
    pub sampler: SamplerFixture,
}

#[derive(Deserialize)]
pub struct ConstantsFixture {
    pub rho: f64,
    pub mean_x: f64,
    pub c_a: f64,
    pub c_f: f64,
    pub tol: f64,
    pub cf_identity_tol: f64,
    pub residual_tol: f64,
}

#[derive(Deserialize)]
pub struct RatioFixture {
    pub grid: Vec<usize>,
    pub rooted_gap_n400: f64,
    pub free_gap_n400: f64,
}

#[derive(Deserialize)]
pub struct SecondOrderFixture {
    pub bound: f64,
    pub fluctuation_200_400: f64,
}

#[derive(Deserialize)]
pub struct LocalLimitFixture {
    pub n: usize,
    pub rel_tol: f64,
}

#[derive(Deserialize)]
pub struct ConcentrationFixture {
    pub n: usize,
    pub alpha: f64,
    pub tail_bound: f64,
}

#[derive(Deserialize)]
pub struct AppendixPoint {
    pub k: usize,
    pub x_over_sqrt_k: f64,
}

#[derive(Deserialize)]
pub struct SamplerFixture {
    pub chi_square_significance: f64,
    pub draws: usize,
    pub rooted_n8_categories: usize,
    pub free_n8_categories: usize,
    pub mean_rounds_n: usize,
    pub mean_rounds_runs: usize,
    pub mean_rounds_rel_tol: f64,
}

impl Thresholds {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Locate thresholds.json: an explicit path wins, then the fixture
/// relative to the working directory, then the checked-in copy next to
/// the crate sources.
pub fn thresholds_path(explicit: Option<&str>) -> PathBuf {
    if let Some(p) = explicit {
        return PathBuf::from(p);
    }
    for candidate in ["fixtures/thresholds.json", "crates/otter/fixtures/thresholds.json"] {
        let p = PathBuf::from(candidate);
        if p.exists() {
            return p;
        }
    }
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/thresholds.json"))
}

fn fixture_rational(map: &BTreeMap<String, String>, n: usize) -> Result<BigRational, String> {
    let s = map
        .get(&n.to_string())
        .ok_or_else(|| format!("no fixture entry for n={n}"))?;
    BigRational::from_str(s).map_err(|e| format!("bad fixture rational {s:?}: {e}"))
}

// ---- runner ------------------------------------------------------------

type Check = Result<String, String>;

fn outcome(name: &'static str, r: Check) -> Outcome {
    match r {
        Ok(detail) => Outcome { name, pass: true, detail },
        Err(detail) => Outcome { name, pass: false, detail },
    }
}

pub fn run(level: Level, th: &Thresholds) -> Vec<Outcome> {
    let full = level == Level::Full;
    let mut out = Vec::new();
    out.push(outcome("constants", check_constants(th, full)));
    out.push(outcome("counts-vs-enumeration", check_counts_vs_enumeration(full)));
    out.push(outcome("dissymmetry-vs-symmetry", check_dissymmetry_vs_symmetry(full)));
    out.push(outcome("census-closed-form", check_census(full)));
    out.push(outcome("sym0-bound", check_sym0_bound(full)));
    out.push(outcome("asymptotic-ratio", check_asymptotic_ratio(th, full)));
    out.push(outcome("second-order-ratio", check_second_order(th, full)));
    if full {
        out.push(outcome("local-limit-ratio", check_local_limit(th)));
    }
    out.push(outcome("root-count-law", check_root_law()));
    out.push(outcome("step-law", check_step_law(th)));
    out.push(outcome("tv-profile", check_tv_profile(th, full)));
    out.push(outcome("mixed-walk-identity", check_mixed_walk(full)));
    out.push(outcome("sampler-uniformity", check_sampler(th, full)));
    if full {
        out.push(outcome("sampler-mean-rounds", check_mean_rounds(th)));
        out.push(outcome("concentration", check_concentration(th)));
    }
    out.push(outcome("appendix-lemma", check_appendix(th, full)));
    out.push(outcome("degree-hand-values", check_degree_hand_values()));
    out.push(outcome("degree-vs-enumeration", check_degree_vs_enumeration(full)));
    out.push(outcome("degree-tv", check_degree_tv(th, full)));
    out.push(outcome("degree-negative-control", check_negative_control()));
    out
}

fn err<E: std::fmt::Display>(e: E) -> String {
    format!("errored: {e}")
}

// ---- individual checks -------------------------------------------------

fn check_constants(th: &Thresholds, full: bool) -> Check {
    let order = if full { th.order } else { 100 };
    let c = asymptotics::constants(order).map_err(err)?;
    let f = &th.constants;
    for (name, got, want) in [
        ("rho", c.rho, f.rho),
        ("mean_x", c.mean_x, f.mean_x),
        ("c_a", c.c_a, f.c_a),
        ("c_f", c.c_f, f.c_f),
    ] {
        if (got - want).abs() > f.tol {
            return Err(format!("{name} = {got:.9}, fixture {want:.9}, tol {:.1e}", f.tol));
        }
    }
    let ident = (c.c_f - 2.0 * std::f64::consts::PI * c.c_a.powi(3)).abs();
    if ident > f.cf_identity_tol {
        return Err(format!("c_f - 2 pi c_a^3 = {ident:.3e} > {:.1e}", f.cf_identity_tol));
    }
    if c.residual > f.residual_tol {
        return Err(format!("residual {:.3e} > {:.1e}", c.residual, f.residual_tol));
    }
    Ok(format!("order {order}: rho={:.9}, c_a={:.9}, identity gap {ident:.1e}", c.rho, c.c_a))
}

fn check_counts_vs_enumeration(full: bool) -> Check {
    let (rooted_to, free_to) = if full { (13, 14) } else { (10, 10) };
    let rooted = counting::rooted_counts(rooted_to).map_err(err)?;
    let free = counting::free_counts_dissymmetry(free_to).map_err(err)?;
    for n in 1..=rooted_to {
        if &enumerate::count_rooted(n) != rooted.get(n) {
            return Err(format!("rooted stream count differs from series at n={n}"));
        }
    }
    for n in 1..=free_to {
        if &enumerate::count_free(n) != free.get(n) {
            return Err(format!("free stream count differs from series at n={n}"));
        }
    }
    Ok(format!("rooted n<={rooted_to}, free n<={free_to} match exactly"))
}

fn check_dissymmetry_vs_symmetry(full: bool) -> Check {
    let n_max = if full { 200 } else { 60 };
    let d = counting::shared_decomposition(n_max).map_err(err)?;
    let dis = counting::free_series_from(&counting::rooted_series(n_max).map_err(err)?)
        .map_err(err)?;
    for n in 1..=n_max {
        let sym = d.sym0.coeff(n) + d.u_of_s.coeff(n);
        if dis.coeff(n) != sym {
            return Err(format!("dissymmetry f_{n} differs from Sym_0 + U(s)"));
        }
    }
    Ok(format!("f_n routes agree exactly for n<={n_max}"))
}

fn check_census(full: bool) -> Check {
    let n_max = if full { 10 } else { 8 };
    let d = counting::shared_decomposition(n_max).map_err(err)?;
    for n in 1..=n_max {
        let census = enumerate::symmetry_census(n).map_err(err)?;
        for k in 0..=n {
            let from_census =
                census.entries.get(&k).cloned().unwrap_or_else(num::Zero::zero);
            if from_census != d.sym_k_coeff(k, n) {
                return Err(format!("census Sym_{k} at n={n} differs from closed form"));
            }
        }
        if census.row_sum() != d.f.coeff(n) {
            return Err(format!("census row sum at n={n} differs from f_{n}"));
        }
    }
    Ok(format!("census equals (k^(k-2)/k!) s^k slices for n<={n_max}"))
}

fn check_sym0_bound(full: bool) -> Check {
    let n_max = if full { 200 } else { 60 };
    let d = counting::shared_decomposition(n_max).map_err(err)?;
    let a_sq = d.a.substitute_power(2).map_err(err)?;
    for n in 1..=n_max {
        if d.sym0.coeff(n) > a_sq.coeff(n) {
            return Err(format!("[z^{n}] Sym_0 exceeds [z^{n}] A(z^2)"));
        }
        if d.sym0.coeff(n) != d.f.coeff(n) - d.u_of_s.coeff(n) {
            return Err(format!("Sym_0 differs from F - U(s) at n={n}"));
        }
    }
    Ok(format!("Sym_0 = F - U(s) and Sym_0 <= A(z^2) coefficientwise for n<={n_max}"))
}

fn check_asymptotic_ratio(th: &Thresholds, full: bool) -> Check {
    let order = if full { th.order } else { 100 };
    let grid: Vec<usize> = if full {
        th.asymptotic_ratio.grid.clone()
    } else {
        vec![50, 100]
    };
    let mut prev_rooted = f64::INFINITY;
    let mut prev_free = f64::INFINITY;
    let mut last = (0.0, 0.0);
    for &n in &grid {
        let r = asymptotics::asymptotic_ratio(n, asymptotics::RatioKind::Rooted, order)
            .map_err(err)?;
        let f =
            asymptotics::asymptotic_ratio(n, asymptotics::RatioKind::Free, order).map_err(err)?;
        let (gr, gf) = ((r - 1.0).abs(), (f - 1.0).abs());
        if gr > prev_rooted || gf > prev_free {
            return Err(format!("|ratio - 1| not decreasing at n={n}: rooted {gr:.2e}, free {gf:.2e}"));
        }
        prev_rooted = gr;
        prev_free = gf;
        last = (gr, gf);
    }
    if full {
        if last.0 > th.asymptotic_ratio.rooted_gap_n400 {
            return Err(format!("rooted gap at 400 = {:.2e} > fixture {:.2e}", last.0, th.asymptotic_ratio.rooted_gap_n400));
        }
        if last.1 > th.asymptotic_ratio.free_gap_n400 {
            return Err(format!("free gap at 400 = {:.2e} > fixture {:.2e}", last.1, th.asymptotic_ratio.free_gap_n400));
        }
    }
    Ok(format!(
        "gaps decrease along {:?}; final rooted {:.2e}, free {:.2e}",
        grid, last.0, last.1
    ))
}

fn check_second_order(th: &Thresholds, full: bool) -> Check {
    let order = if full { th.order } else { 100 };
    let top = if full { 400 } else { 100 };
    let mut max_abs = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for n in (10..=top).step_by(10) {
        let r = asymptotics::second_order_ratio(n, order).map_err(err)?;
        max_abs = max_abs.max(r.abs());
        if n >= 200 {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if max_abs > th.second_order.bound {
        return Err(format!("|a_n/f_n - n/E[X]| reaches {max_abs:.3} > bound {}", th.second_order.bound));
    }
    if full && hi - lo > th.second_order.fluctuation_200_400 {
        return Err(format!("fluctuation {:.3} on [200,400] > {}", hi - lo, th.second_order.fluctuation_200_400));
    }
    Ok(if full {
        format!("max {max_abs:.3} <= {}, fluctuation {:.4} on [200,400]", th.second_order.bound, hi - lo)
    } else {
        format!("max {max_abs:.3} <= {} for n<={top}", th.second_order.bound)
    })
}

fn check_local_limit(th: &Thresholds) -> Check {
    let r = asymptotics::local_limit_ratio(th.local_limit.n, th.order).map_err(err)?;
    if (r - 1.0).abs() > th.local_limit.rel_tol {
        return Err(format!("local limit ratio at n={} is {r:.4}, off by more than {}", th.local_limit.n, th.local_limit.rel_tol));
    }
    Ok(format!("ratio at n={} is {r:.4}", th.local_limit.n))
}

fn check_root_law() -> Check {
    for kind in [stochastics::RootKind::N, stochastics::RootKind::NTilde] {
        let total = stochastics::root_count_moment(kind, 0);
        if (total - 1.0).abs() > 1e-10 {
            return Err(format!("{kind:?} total mass {total:.12} off 1 by more than 1e-10"));
        }
    }
    let mean = stochastics::root_count_moment(stochastics::RootKind::N, 1);
    if (mean - 2.0).abs() > 1e-8 {
        return Err(format!("E[N] = {mean:.10} off 2 by more than 1e-8"));
    }
    Ok(format!("masses sum to 1 and E[N] = {mean:.10}"))
}

fn check_step_law(th: &Thresholds) -> Check {
    let step = stochastics::step_law(200).map_err(err)?;
    let expect_p1 = std::f64::consts::E * step.rho;
    if (step.pmf[1] - expect_p1).abs() > 1e-12 {
        return Err(format!("P(X=1) = {:.12} differs from e rho = {expect_p1:.12}", step.pmf[1]));
    }
    if (step.mean - th.constants.mean_x).abs() > 1e-8 {
        return Err(format!("step mean {:.10} differs from E[X] fixture {:.10}", step.mean, th.constants.mean_x));
    }
    Ok(format!("P(X=1) = e rho = {expect_p1:.6}, mean = {:.9}", step.mean))
}

fn check_tv_profile(th: &Thresholds, full: bool) -> Check {
    let n_max = if full { 14 } else { 8 };
    for n in 3..=n_max {
        let tv = stochastics::tv_exact(n).map_err(err)?;
        let want = fixture_rational(&th.tv_exact, n)?;
        if tv != want {
            return Err(format!("d_TV({n}) = {tv} differs from fixture {want}"));
        }
    }
    Ok(format!("exact profile matches fixtures for 3<=n<={n_max}"))
}

fn check_mixed_walk(full: bool) -> Check {
    let grid: &[usize] = if full { &[10, 40, 120] } else { &[10, 40] };
    for &n in grid {
        let c = stochastics::mixed_walk_identity_check(n).map_err(err)?;
        if c.lhs != c.rhs {
            return Err(format!("[z^{n}](F - Sym_0) differs from [z^{n}] U(s)"));
        }
        if c.numeric_relative_gap > 1e-6 {
            return Err(format!("numeric walk mass at n={n} off by {:.2e}", c.numeric_relative_gap));
        }
    }
    Ok(format!("exact equality and numeric agreement at n in {grid:?}"))
}

fn chi_square_rooted(n: usize, draws: usize, seed: u64, sig: f64) -> Result<(f64, f64, usize), String> {
    let cats: BTreeMap<_, usize> =
        enumerate::gen_rooted(n).enumerate().map(|(i, t)| (t, i)).collect();
    let mut counts = vec![0u64; cats.len()];
    let mut ctx = SamplerContext::new(n, seed).map_err(err)?;
    for _ in 0..draws {
        let t = ctx.sample_rooted(n).map_err(err)?;
        counts[cats[&t]] += 1;
    }
    let (stat, crit) = chi_square_uniform(&counts, sig);
    Ok((stat, crit, cats.len()))
}

fn chi_square_free(n: usize, draws: usize, seed: u64, sig: f64) -> Result<(f64, f64, usize), String> {
    let cats: BTreeMap<_, usize> =
        enumerate::gen_free(n).enumerate().map(|(i, t)| (t, i)).collect();
    let mut counts = vec![0u64; cats.len()];
    let mut ctx = SamplerContext::new(n, seed).map_err(err)?;
    for _ in 0..draws {
        let t = ctx.sample_free_exact(n).map_err(err)?;
        counts[cats[&t]] += 1;
    }
    let (stat, crit) = chi_square_uniform(&counts, sig);
    Ok((stat, crit, cats.len()))
}

fn check_sampler(th: &Thresholds, full: bool) -> Check {
    let sig = th.sampler.chi_square_significance;
    if !full {
        let (stat, crit, cats) = chi_square_rooted(6, 20_000, 7, sig)?;
        if stat >= crit {
            return Err(format!("rooted n=6 chi2 {stat:.2} >= critical {crit:.2}"));
        }
        return Ok(format!("rooted n=6, {cats} categories: chi2 {stat:.2} < {crit:.2}"));
    }
    let draws = th.sampler.draws;
    let (rs, rc, rcats) = chi_square_rooted(8, draws, 7, sig)?;
    if rcats != th.sampler.rooted_n8_categories {
        return Err(format!("rooted n=8 has {rcats} categories, fixture {}", th.sampler.rooted_n8_categories));
    }
    if rs >= rc {
        return Err(format!("rooted n=8 chi2 {rs:.2} >= critical {rc:.2}"));
    }
    let (fs, fc, fcats) = chi_square_free(8, draws, 11, sig)?;
    if fcats != th.sampler.free_n8_categories {
        return Err(format!("free n=8 has {fcats} categories, fixture {}", th.sampler.free_n8_categories));
    }
    if fs >= fc {
        return Err(format!("free n=8 chi2 {fs:.2} >= critical {fc:.2}"));
    }
    Ok(format!(
        "n=8, {draws} draws: rooted chi2 {rs:.1} < {rc:.1} ({rcats} cats), free chi2 {fs:.1} < {fc:.1} ({fcats} cats)"
    ))
}

fn check_mean_rounds(th: &Thresholds) -> Check {
    let n = th.sampler.mean_rounds_n;
    let runs = th.sampler.mean_rounds_runs;
    let mut ctx = SamplerContext::new(n, 13).map_err(err)?;
    let observed = mean_rounds(&mut ctx, n, runs).map_err(err)?;
    let a = counting::rooted_counts(n).map_err(err)?.get(n).clone();
    let f = counting::free_counts_dissymmetry(n).map_err(err)?.get(n).clone();
    let expected = stochastics::rational_to_f64(&BigRational::new(a, f));
    let rel = (observed - expected).abs() / expected;
    if rel > th.sampler.mean_rounds_rel_tol {
        return Err(format!("mean rounds {observed:.2} vs a_{n}/f_{n} = {expected:.2} (rel {rel:.3})"));
    }
    Ok(format!("mean rounds {observed:.2} vs exact {expected:.2} over {runs} runs (rel {rel:.3})"))
}

fn check_concentration(th: &Thresholds) -> Check {
    let r = stochastics::concentration_check(th.concentration.n, th.concentration.alpha)
        .map_err(err)?;
    if r.tail_mass >= th.concentration.tail_bound {
        return Err(format!("tail mass {:.3e} >= bound {:.1e}", r.tail_mass, th.concentration.tail_bound));
    }
    Ok(format!(
        "n={}, alpha={}: tail {:.2e} < {:.0e}, exponent {:.3}",
        r.n, r.alpha, r.tail_mass, th.concentration.tail_bound, r.bound_exponent
    ))
}

fn check_appendix(th: &Thresholds, full: bool) -> Check {
    let grid: &[AppendixPoint] =
        if full { &th.appendix_grid } else { &th.appendix_grid[..1] };
    for p in grid {
        let x = p.x_over_sqrt_k * (p.k as f64).sqrt();
        let a = stochastics::appendix_lemma_check(p.k, x).map_err(err)?;
        if !a.holds {
            return Err(format!(
                "bound fails at k={}, x={x:.2}: exact {:.3e} > bound {:.3e}",
                p.k, a.exact_tail, a.best_bound
            ));
        }
    }
    Ok(format!("exact tails under the cumulant bound at {} grid points", grid.len()))
}

fn check_degree_hand_values() -> Check {
    let d: DegreeSet = "1,3".parse().map_err(err)?;
    let rooted = degree::restricted_rooted_series(&d, 8).map_err(err)?;
    let expect_rooted = [1i64, 0, 1, 0, 1, 0, 2, 0];
    for (i, &want) in expect_rooted.iter().enumerate() {
        if rooted.coeff(i + 1) != BigRational::from_integer(want.into()) {
            return Err(format!("restricted rooted count at n={} differs from hand value {want}", i + 1));
        }
    }
    let free = degree::restricted_free_series(&d, 10).map_err(err)?;
    let expect_free = [0i64, 1, 0, 1, 0, 1, 0, 1, 0, 2];
    for (i, &want) in expect_free.iter().enumerate() {
        if free.coeff(i + 1) != BigRational::from_integer(want.into()) {
            return Err(format!("restricted free count at n={} differs from hand value {want}", i + 1));
        }
    }
    Ok("Omega={1,3} rooted and free hand values reproduce".into())
}

fn check_degree_vs_enumeration(full: bool) -> Check {
    let n_max = if full { 11 } else { 9 };
    for spec in ["1,3", "1,2,4"] {
        let d: DegreeSet = spec.parse().map_err(err)?;
        let rooted = degree::restricted_rooted_series(&d, n_max).map_err(err)?;
        let free = degree::restricted_free_series(&d, n_max).map_err(err)?;
        for n in 1..=n_max {
            let rs = enumerate::gen_rooted_restricted(n, &d, DegreeMode::AllStar).count();
            if rooted.coeff(n) != BigRational::from_integer(rs.into()) {
                return Err(format!("Omega={{{spec}}} rooted series vs enumeration at n={n}"));
            }
            let fs = enumerate::gen_free_restricted(n, &d).count();
            if free.coeff(n) != BigRational::from_integer(fs.into()) {
                return Err(format!("Omega={{{spec}}} free series vs enumeration at n={n}"));
            }
        }
    }
    Ok(format!("series match filtered enumeration for n<={n_max}, Omega in {{1,3}}, {{1,2,4}}"))
}

fn check_degree_tv(th: &Thresholds, full: bool) -> Check {
    let d: DegreeSet = "1,3".parse().map_err(err)?;
    let generic_to = if full { 12 } else { 10 };
    for n in (10..=generic_to).step_by(2) {
        let tv = degree::tv_exact_restricted(&d, n).map_err(err)?;
        let want = fixture_rational(&th.tv_restricted_13, n)?;
        if tv != want {
            return Err(format!("restricted d_TV({n}) = {tv} differs from fixture {want}"));
        }
        let cubic = degree::tv_exact_cubic(n).map_err(err)?;
        if cubic != tv {
            return Err(format!("skeleton-route d_TV({n}) differs from generic route"));
        }
    }
    if full {
        // decay beyond the n = 16 peak, via the fast skeleton route
        for n in [16usize, 28] {
            let tv = degree::tv_exact_cubic(n).map_err(err)?;
            let want = fixture_rational(&th.tv_restricted_13, n)?;
            if tv != want {
                return Err(format!("cubic d_TV({n}) = {tv} differs from fixture {want}"));
            }
        }
        let peak = fixture_rational(&th.tv_restricted_13, 16)?;
        let late = fixture_rational(&th.tv_restricted_13, 28)?;
        if late >= peak {
            return Err("restricted TV does not decay past its n=16 peak".into());
        }
    }
    Ok(format!("restricted profile matches fixtures (generic route n<={generic_to})"))
}

fn check_negative_control() -> Check {
    let d: DegreeSet = "1,3".parse().map_err(err)?;
    if !degree::admissible(11, RestrictedKind::Rooted, &d).map_err(err)? {
        return Err("n=11 unexpectedly inadmissible for rooted Omega={1,3}".into());
    }
    let nc = degree::negative_control(&d, 11).map_err(err)?;
    if nc.forbidden_mass <= num::Zero::zero() {
        return Err("no root-degree mass outside Omega at n=11".into());
    }
    Ok(format!(
        "root outdegrees {:?} outside Omega carry mass {:.4}",
        nc.forbidden_degrees,
        stochastics::rational_to_f64(&nc.forbidden_mass)
    ))
}
