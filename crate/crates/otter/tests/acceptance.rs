//! Acceptance gate: one criterion per numbered check, each printing a
//! single PASS/FAIL line. Lines are written straight to stdout (not the
//! captured test buffer) so the report is visible in a plain test run.
//!
//! Criterion 5 deliberately reports FAIL: its asserted ordering
//! d_TV(8) < d_TV(5) contradicts the exact values (the curve peaks at
//! n = 6, so d_TV(8) = 3/23 > d_TV(5) = 1/9). The exact profile itself
//! is verified against the frozen fixtures; only the literal chain is
//! reported as failed.

use std::collections::BTreeMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use num::rational::BigRational;
use num::traits::Zero;

use otter::degree::{self, DegreeSet};
use otter::enumerate::{self, DegreeMode};
use otter::sample::{chi_square_uniform, mean_rounds, SamplerContext};
use otter::{asymptotics, counting, stochastics};

const ORDER: usize = 400;

fn fixtures() -> serde_json::Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/thresholds.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("fixtures present"))
        .expect("fixtures parse")
}

fn fixture_rational(fx: &serde_json::Value, table: &str, n: usize) -> BigRational {
    let s = fx[table][n.to_string()]
        .as_str()
        .unwrap_or_else(|| panic!("no fixture {table}[{n}]"));
    BigRational::from_str(s).expect("fixture rational parses")
}

fn report(line: &str) {
    // bypass libtest's print capture so the report always shows
    writeln!(std::io::stdout(), "{line}").unwrap();
}

type Criterion = fn(&serde_json::Value) -> Result<String, String>;

#[test]
fn acceptance() {
    let fx = fixtures();
    let criteria: [(usize, &str, Criterion); 10] = [
        (1, "constants", criterion_constants),
        (2, "oracle equivalence", criterion_oracle_equivalence),
        (3, "dissymmetry vs symmetry", criterion_dissymmetry),
        (4, "symmetry census", criterion_census),
        (5, "TV curve", criterion_tv_curve),
        (6, "asymptotic ratios", criterion_ratios),
        (7, "second-order ratio", criterion_second_order),
        (8, "sampler uniformity", criterion_sampler),
        (9, "fixed-point concentration", criterion_concentration),
        (10, "degree-restricted", criterion_degree),
    ];
    let mut unexpected = Vec::new();
    for (num, name, f) in criteria {
        let result = catch_unwind(AssertUnwindSafe(|| f(&fx)))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        match result {
            Ok(detail) => report(&format!("criterion {num} ({name}): PASS — {detail}")),
            Err(detail) => {
                report(&format!("criterion {num} ({name}): FAIL — {detail}"));
                if num != 5 {
                    unexpected.push(num);
                }
            }
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria failed beyond the documented TV-ordering one: {unexpected:?}"
    );
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "non-string panic".into())
}

// ---- criterion 1 -------------------------------------------------------

fn criterion_constants(_fx: &serde_json::Value) -> Result<String, String> {
    let c = asymptotics::constants(ORDER).map_err(|e| e.to_string())?;
    if (c.rho - 0.338321).abs() >= 1e-5 {
        return Err(format!("rho = {:.7} not within 1e-5 of 0.338321", c.rho));
    }
    if (c.c_a - 0.439924).abs() >= 1e-5 {
        return Err(format!("c_a = {:.7} not within 1e-5 of 0.439924", c.c_a));
    }
    let gap = (c.c_f - 2.0 * std::f64::consts::PI * c.c_a.powi(3)).abs();
    if gap > 1e-12 {
        return Err(format!("c_f identity gap {gap:.2e} > 1e-12"));
    }
    if (c.c_f - 0.53495).abs() >= 1e-5 {
        return Err(format!("c_f = {:.7} not within 1e-5 of 0.53495", c.c_f));
    }
    Ok(format!(
        "rho = {:.6}, c_a = {:.6}, c_f = {:.6}, identity gap {gap:.1e}",
        c.rho, c.c_a, c.c_f
    ))
}

// ---- criterion 2 -------------------------------------------------------

fn criterion_oracle_equivalence(_fx: &serde_json::Value) -> Result<String, String> {
    let rooted = counting::rooted_counts(16).map_err(|e| e.to_string())?;
    for n in 1..=16 {
        if &enumerate::count_rooted(n) != rooted.get(n) {
            return Err(format!("rooted count differs from enumeration at n={n}"));
        }
    }
    let free = counting::free_counts_dissymmetry(18).map_err(|e| e.to_string())?;
    for n in 1..=18 {
        if &enumerate::count_free(n) != free.get(n) {
            return Err(format!("free count differs from enumeration at n={n}"));
        }
    }
    Ok("rooted n<=16 and free n<=18 match exhaustive enumeration exactly".into())
}

// ---- criterion 3 -------------------------------------------------------

fn criterion_dissymmetry(_fx: &serde_json::Value) -> Result<String, String> {
    let d = counting::shared_decomposition(200).map_err(|e| e.to_string())?;
    let dis = counting::shared_free_series(200).map_err(|e| e.to_string())?;
    for n in 1..=200 {
        if dis.coeff(n) != d.sym0.coeff(n) + d.u_of_s.coeff(n) {
            return Err(format!("f_{n} differs between dissymmetry and Sym_0 + U(s)"));
        }
    }
    Ok("f_n identical along both routes for all n <= 200".into())
}

// ---- criterion 4 -------------------------------------------------------

fn criterion_census(_fx: &serde_json::Value) -> Result<String, String> {
    let d = counting::shared_decomposition(200).map_err(|e| e.to_string())?;
    for n in 1..=12 {
        let census = enumerate::symmetry_census(n).map_err(|e| e.to_string())?;
        for k in 0..=n {
            let got = census.entries.get(&k).cloned().unwrap_or_else(BigRational::zero);
            if got != d.sym_k_coeff(k, n) {
                return Err(format!("census Sym_{k} differs from closed form at n={n}"));
            }
        }
        if census.row_sum() != d.f.coeff(n) {
            return Err(format!("census row sum differs from f_{n}"));
        }
    }
    let a_sq = d.a.substitute_power(2).map_err(|e| e.to_string())?;
    for n in 1..=200 {
        if d.sym0.coeff(n) != d.f.coeff(n) - d.u_of_s.coeff(n) {
            return Err(format!("Sym_0 differs from F - U(s) at n={n}"));
        }
        if d.sym0.coeff(n) > a_sq.coeff(n) {
            return Err(format!("[z^{n}] Sym_0 exceeds [z^{n}] A(z^2)"));
        }
    }
    Ok("census equals (k^(k-2)/k!) s^k for k<=n<=12; Sym_0 = F - U(s) <= A(z^2) to n=200".into())
}

// ---- criterion 5 -------------------------------------------------------

fn criterion_tv_curve(fx: &serde_json::Value) -> Result<String, String> {
    let mut tv = BTreeMap::new();
    for n in 3..=18usize {
        let v = stochastics::tv_exact(n).expect("tv_exact in range");
        let frozen = fixture_rational(fx, "tv_exact", n);
        assert_eq!(v, frozen, "d_TV({n}) deviates from the frozen fixture");
        tv.insert(n, v);
    }
    assert!(tv[&3].is_zero() && tv[&4].is_zero(), "d_TV(3) and d_TV(4) must be 0");
    assert_eq!(
        tv[&5],
        BigRational::from_str("1/9").unwrap(),
        "d_TV(5) must be exactly 1/9"
    );
    let chain_left = tv[&16] < tv[&8];
    let chain_right = tv[&8] < tv[&5];
    if chain_left && chain_right {
        return Ok("profile matches fixtures; d_TV(16) < d_TV(8) < d_TV(5)".into());
    }
    Err(format!(
        "profile matches fixtures and d_TV(16) = 5729398/81206445 < d_TV(8), but the asserted \
         chain breaks at its middle link: d_TV(8) = 3/23 ~ 0.1304 > d_TV(5) = 1/9 ~ 0.1111 \
         (the exact curve peaks at n = 6 with d_TV(6) = 3/20 and decays monotonically only \
         beyond the peak)"
    ))
}

// ---- criterion 6 -------------------------------------------------------

fn criterion_ratios(fx: &serde_json::Value) -> Result<String, String> {
    let mut prev = (f64::INFINITY, f64::INFINITY);
    let mut last = (0.0, 0.0);
    for n in [50usize, 100, 200, 400] {
        let r = asymptotics::asymptotic_ratio(n, asymptotics::RatioKind::Rooted, ORDER)
            .map_err(|e| e.to_string())?;
        let f = asymptotics::asymptotic_ratio(n, asymptotics::RatioKind::Free, ORDER)
            .map_err(|e| e.to_string())?;
        let gaps = ((r - 1.0).abs(), (f - 1.0).abs());
        if gaps.0 > prev.0 || gaps.1 > prev.1 {
            return Err(format!("|ratio - 1| fails to decrease at n={n}"));
        }
        prev = gaps;
        last = gaps;
    }
    let rooted_thresh = fx["asymptotic_ratio"]["rooted_gap_n400"].as_f64().unwrap();
    let free_thresh = fx["asymptotic_ratio"]["free_gap_n400"].as_f64().unwrap();
    if last.0 > rooted_thresh || last.1 > free_thresh {
        return Err(format!(
            "gaps at n=400 ({:.2e}, {:.2e}) exceed fixtures ({rooted_thresh:.2e}, {free_thresh:.2e})",
            last.0, last.1
        ));
    }
    Ok(format!(
        "both ratios approach 1 monotonically over {{50,100,200,400}}; gaps at 400: rooted {:.2e}, free {:.2e}",
        last.0, last.1
    ))
}

// ---- criterion 7 -------------------------------------------------------

fn criterion_second_order(fx: &serde_json::Value) -> Result<String, String> {
    let bound = fx["second_order"]["bound"].as_f64().unwrap();
    let mut max_abs = 0.0f64;
    for n in 10..=400usize {
        let r = asymptotics::second_order_ratio(n, ORDER).map_err(|e| e.to_string())?;
        max_abs = max_abs.max(r.abs());
    }
    if max_abs > bound {
        return Err(format!("|a_n/f_n - n/E[X]| reaches {max_abs:.3} > fixture bound {bound}"));
    }
    Ok(format!("|a_n/f_n - n/E[X]| <= {max_abs:.3} for every 10 <= n <= 400 (bound {bound})"))
}

// ---- criterion 8 -------------------------------------------------------

fn criterion_sampler(fx: &serde_json::Value) -> Result<String, String> {
    let sig = fx["sampler"]["chi_square_significance"].as_f64().unwrap();
    let draws = fx["sampler"]["draws"].as_u64().unwrap() as usize;

    let rooted_cats: BTreeMap<_, usize> =
        enumerate::gen_rooted(8).enumerate().map(|(i, t)| (t, i)).collect();
    if rooted_cats.len() != 115 {
        return Err(format!("expected 115 rooted categories at n=8, got {}", rooted_cats.len()));
    }
    let mut counts = vec![0u64; rooted_cats.len()];
    let mut ctx = SamplerContext::new(8, 2024).map_err(|e| e.to_string())?;
    for _ in 0..draws {
        counts[rooted_cats[&ctx.sample_rooted(8).unwrap()]] += 1;
    }
    let (rs, rc) = chi_square_uniform(&counts, sig);
    if rs >= rc {
        return Err(format!("rooted n=8 chi2 {rs:.2} >= critical {rc:.2}"));
    }

    let free_cats: BTreeMap<_, usize> =
        enumerate::gen_free(8).enumerate().map(|(i, t)| (t, i)).collect();
    if free_cats.len() != 23 {
        return Err(format!("expected 23 free categories at n=8, got {}", free_cats.len()));
    }
    let mut counts = vec![0u64; free_cats.len()];
    let mut ctx = SamplerContext::new(8, 4048).map_err(|e| e.to_string())?;
    for _ in 0..draws {
        counts[free_cats[&ctx.sample_free_exact(8).unwrap()]] += 1;
    }
    let (fs, fc) = chi_square_uniform(&counts, sig);
    if fs >= fc {
        return Err(format!("free n=8 chi2 {fs:.2} >= critical {fc:.2}"));
    }

    let n = fx["sampler"]["mean_rounds_n"].as_u64().unwrap() as usize;
    let runs = fx["sampler"]["mean_rounds_runs"].as_u64().unwrap() as usize;
    let mut ctx = SamplerContext::new(n, 77).map_err(|e| e.to_string())?;
    let observed = mean_rounds(&mut ctx, n, runs).map_err(|e| e.to_string())?;
    let expected = stochastics::rational_to_f64(&BigRational::new(
        counting::rooted_counts(n).unwrap().get(n).clone(),
        counting::free_counts_dissymmetry(n).unwrap().get(n).clone(),
    ));
    let rel = (observed - expected).abs() / expected;
    if rel > 0.1 {
        return Err(format!(
            "mean rounds {observed:.2} vs a_{n}/f_{n} = {expected:.2}: off by {rel:.1}"
        ));
    }
    Ok(format!(
        "chi2 at 0.001: rooted {rs:.1} < {rc:.1} (115 cats), free {fs:.1} < {fc:.1} (23 cats), {draws} draws; \
         mean rounds {observed:.1} vs exact {expected:.1} (rel {rel:.3})"
    ))
}

// ---- criterion 9 -------------------------------------------------------

fn criterion_concentration(fx: &serde_json::Value) -> Result<String, String> {
    let n = fx["concentration"]["n"].as_u64().unwrap() as usize;
    let alpha = fx["concentration"]["alpha"].as_f64().unwrap();
    let bound = fx["concentration"]["tail_bound"].as_f64().unwrap();
    let r = stochastics::concentration_check(n, alpha).map_err(|e| e.to_string())?;
    if r.tail_mass >= bound {
        return Err(format!("tail mass {:.3e} >= {bound:.0e}", r.tail_mass));
    }
    for point in fx["appendix_grid"].as_array().unwrap() {
        let k = point["k"].as_u64().unwrap() as usize;
        let x = point["x_over_sqrt_k"].as_f64().unwrap() * (k as f64).sqrt();
        let a = stochastics::appendix_lemma_check(k, x).map_err(|e| e.to_string())?;
        if !a.holds {
            return Err(format!(
                "appendix bound fails at k={k}, x={x:.1}: exact {:.2e} > bound {:.2e}",
                a.exact_tail, a.best_bound
            ));
        }
    }
    Ok(format!(
        "tail outside |k - n/E[X]| <= n^{alpha} at n={n} is {:.2e} < {bound:.0e}; \
         appendix bound holds at all grid points",
        r.tail_mass
    ))
}

// ---- criterion 10 ------------------------------------------------------

fn criterion_degree(fx: &serde_json::Value) -> Result<String, String> {
    let d: DegreeSet = "1,3".parse().unwrap();
    let rooted = degree::restricted_rooted_series(&d, 16).map_err(|e| e.to_string())?;
    let free = degree::restricted_free_series(&d, 16).map_err(|e| e.to_string())?;
    for n in 1..=16 {
        let rs = enumerate::gen_rooted_restricted(n, &d, DegreeMode::AllStar).count();
        if rooted.coeff(n) != BigRational::from_integer(rs.into()) {
            return Err(format!("restricted rooted count differs from enumeration at n={n}"));
        }
        let fs = enumerate::gen_free_restricted(n, &d).count();
        if free.coeff(n) != BigRational::from_integer(fs.into()) {
            return Err(format!("restricted free count differs from enumeration at n={n}"));
        }
    }

    // trend of the restricted TV along admissible n: zero through n=8,
    // peak at n=16, decay beyond (deep values via the skeleton route)
    for n in [10usize, 12] {
        let tv = degree::tv_exact_restricted(&d, n).map_err(|e| e.to_string())?;
        if tv != fixture_rational(fx, "tv_restricted_13", n) {
            return Err(format!("restricted d_TV({n}) deviates from fixture"));
        }
        if tv != degree::tv_exact_cubic(n).map_err(|e| e.to_string())? {
            return Err(format!("skeleton route disagrees with generic route at n={n}"));
        }
    }
    let mut curve = Vec::new();
    for n in (16..=28usize).step_by(4) {
        let tv = degree::tv_exact_cubic(n).map_err(|e| e.to_string())?;
        if tv != fixture_rational(fx, "tv_restricted_13", n) {
            return Err(format!("cubic d_TV({n}) deviates from fixture"));
        }
        curve.push((n, stochastics::rational_to_f64(&tv)));
    }
    let peak = curve[0].1;
    let tail = curve.last().unwrap().1;
    if tail >= peak {
        return Err("restricted TV does not decay past its n=16 peak".into());
    }

    let nc = degree::negative_control(&d, 11).map_err(|e| e.to_string())?;
    if nc.forbidden_mass <= BigRational::zero() {
        return Err("no forbidden root-degree mass in the negative control".into());
    }
    Ok(format!(
        "counts match enumeration to n=16; TV profile matches fixtures and decays \
         {peak:.3} -> {tail:.3} over n=16..28; forbidden root-degree mass {:.2} at n=11",
        stochastics::rational_to_f64(&nc.forbidden_mass)
    ))
}
