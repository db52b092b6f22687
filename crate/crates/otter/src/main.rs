use std::io::BufRead;
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use otter::degree::{self, DegreeSet};
use otter::enumerate::{self, DegreeMode};
use otter::sample::SamplerContext;
use otter::tree::{canonicalize_rooted_adj, center, Center, FreeTree, RootedTree};
use otter::{asymptotics, counting, stochastics};

mod verify;

#[derive(Parser)]
#[command(
    name = "otter",
    version,
    about = "Exact enumeration, sampling and asymptotics of unlabelled trees",
    after_help = "Environment:\n  OTTER_CACHE_DIR  directory for the series/table disk cache (unset: no cache)\n\nExit codes: 0 success, 1 verification/identity failure, 2 usage error."
)]
struct Cli {
    /// Worker cap for subcommands that could parallelize across n.
    /// Accepted for interface compatibility; the current build runs
    /// sequentially (deterministic output either way).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountKindArg {
    Rooted,
    Free,
    Labelled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dissymmetry,
    Symmetry,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EnumKindArg {
    Rooted,
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleKindArg {
    Rooted,
    FreeExact,
    FreeApprox,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TreeOp {
    /// Canonical rooted level sequence of the input tree.
    Canon,
    /// Centre of the underlying free tree (vertex or edge, input indices).
    Center,
    /// Automorphism group order of the free tree.
    Aut,
    /// Number of rooting orbits (distinct rooted versions).
    Orbits,
    /// Fixed-point polynomial coefficients of Aut acting on vertices.
    Fixpoly,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Cmd {
    /// Counting tables; one `n<TAB>count` line per n.
    Count {
        #[arg(long, value_enum)]
        kind: CountKindArg,
        #[arg(long)]
        n_max: usize,
        /// Route for free counts (both are cross-checked regardless).
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Degree restriction: "1,3" or "all-except:2,5". Rooted counts
        /// then constrain every non-root vertex (root outdegree in
        /// Omega*); free counts constrain every vertex.
        #[arg(long)]
        degrees: Option<String>,
        /// Emit exact series coefficients `n<TAB>numerator/denominator`
        /// instead of integer counts.
        #[arg(long)]
        dump_series: bool,
    },
    /// Asymptotic constants (rho, E[X], c_A, c_F) at a truncation order.
    Constants {
        #[arg(long, default_value_t = 400)]
        order: usize,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive generation; one canonical tree per line.
    Enumerate {
        #[arg(long, value_enum)]
        kind: EnumKindArg,
        #[arg(short)]
        n: usize,
        #[arg(long)]
        degrees: Option<String>,
    },
    /// Symmetry census at n: rows `k<TAB>numerator/denominator` of the
    /// exact Sym_k masses from automorphism fixed-point polynomials.
    Census {
        #[arg(short)]
        n: usize,
        /// Enumeration size cap (guards against accidental huge runs).
        #[arg(long, default_value_t = 12)]
        cap: usize,
    },
    /// Uniform random trees; one tree per line plus a JSON footer.
    Sample {
        #[arg(long, value_enum)]
        kind: SampleKindArg,
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Total-variation distance between the forgotten-root law F(A_n)
    /// and uniform F_n; JSON output.
    Tv {
        #[arg(short)]
        n: usize,
        /// Exact computation over the full enumeration (default).
        #[arg(long)]
        exact: bool,
        /// Monte-Carlo estimate instead of exact enumeration.
        #[arg(long)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        degrees: Option<String>,
    },
    /// Conditional fixed-point law P(N = k | S_N = n); rows `k<TAB>prob`.
    Fixedpoints {
        #[arg(short)]
        n: usize,
    },
    /// Concentration of the conditional fixed-point law; JSON report.
    Concentration {
        #[arg(short)]
        n: usize,
        #[arg(long, default_value_t = 0.75)]
        alpha: f64,
    },
    /// Tree utilities over level sequences read from standard input
    /// (one whitespace-separated sequence per line; free trees may
    /// carry a `bicentral:` prefix).
    Tree {
        #[arg(value_enum)]
        op: TreeOp,
    },
    /// Run the invariant suite against the frozen thresholds.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
        /// Path to thresholds.json (default: the checked-in fixture).
        #[arg(long)]
        thresholds: Option<String>,
    },
}

/// Manifest accompanying every run, written as one JSON line to stderr
/// so that stdout stays a clean table/record stream.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<String>,
    jobs: usize,
    wall_ms: u128,
}

/// A user error that should exit 2 rather than 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut manifest = RunManifest {
        command: std::env::args().collect::<Vec<_>>().join(" "),
        version: env!("CARGO_PKG_VERSION"),
        seed: None,
        order: None,
        thresholds: None,
        jobs: cli.jobs,
        wall_ms: 0,
    };
    let result = run(&cli, &mut manifest);
    manifest.wall_ms = started.elapsed().as_millis();
    eprintln!("{}", serde_json::to_string(&manifest).expect("manifest serializes"));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        }
    }
}

fn parse_degrees(s: &str) -> anyhow::Result<DegreeSet> {
    DegreeSet::from_str(s).map_err(|e| usage(format!("bad --degrees value: {e}")))
}

fn run(cli: &Cli, manifest: &mut RunManifest) -> anyhow::Result<()> {
    match &cli.cmd {
        Cmd::Count { kind, n_max, method, degrees, dump_series } => {
            cmd_count(*kind, *n_max, *method, degrees.as_deref(), *dump_series)
        }
        Cmd::Constants { order, json } => {
            manifest.order = Some(*order);
            cmd_constants(*order, *json)
        }
        Cmd::Enumerate { kind, n, degrees } => cmd_enumerate(*kind, *n, degrees.as_deref()),
        Cmd::Census { n, cap } => cmd_census(*n, *cap),
        Cmd::Sample { kind, n, count, seed } => {
            manifest.seed = Some(*seed);
            cmd_sample(*kind, *n, *count, *seed)
        }
        Cmd::Tv { n, exact, mc, samples, seed, degrees } => {
            if *mc {
                manifest.seed = Some(*seed);
            }
            cmd_tv(*n, *exact, *mc, *samples, *seed, degrees.as_deref())
        }
        Cmd::Fixedpoints { n } => cmd_fixedpoints(*n),
        Cmd::Concentration { n, alpha } => cmd_concentration(*n, *alpha),
        Cmd::Tree { op } => cmd_tree(*op),
        Cmd::Verify { level, thresholds } => {
            let path = verify::thresholds_path(thresholds.as_deref());
            manifest.thresholds = Some(path.display().to_string());
            cmd_verify(*level, &path)
        }
    }
}

// ---- count -------------------------------------------------------------

fn cmd_count(
    kind: CountKindArg,
    n_max: usize,
    method: Option<MethodArg>,
    degrees: Option<&str>,
    dump_series: bool,
) -> anyhow::Result<()> {
    if n_max == 0 {
        return Err(usage("--n-max must be at least 1"));
    }
    if kind == CountKindArg::Labelled && degrees.is_some() {
        return Err(usage("--degrees applies to unlabelled counts only"));
    }
    let d = degrees.map(parse_degrees).transpose()?;

    let series = match (kind, &d) {
        (CountKindArg::Rooted, None) => counting::rooted_series(n_max)?,
        (CountKindArg::Rooted, Some(d)) => degree::restricted_rooted_series(d, n_max)?,
        (CountKindArg::Free, None) => match method.unwrap_or(MethodArg::Dissymmetry) {
            MethodArg::Dissymmetry => {
                counting::free_series_from(&counting::rooted_series(n_max)?)?
            }
            MethodArg::Symmetry => counting::shared_decomposition(n_max)?.f.clone(),
        },
        (CountKindArg::Free, Some(d)) => degree::restricted_free_series(d, n_max)?,
        (CountKindArg::Labelled, _) => {
            let table = counting::labelled_counts(n_max);
            for (n, v) in table.iter() {
                if dump_series {
                    println!("{n}\t{v}/1");
                } else {
                    println!("{n}\t{v}");
                }
            }
            return Ok(());
        }
    };

    // Cross-checks against the independent route; exit 1 on mismatch.
    match (kind, &d) {
        (CountKindArg::Rooted, None) => {
            let check_to = n_max.min(40);
            let alt = counting::rooted_series_fixed_point(check_to)?;
            for n in 1..=check_to {
                if series.coeff(n) != alt.coeff(n) {
                    anyhow::bail!(
                        "identity violated: recurrence vs fixed-point rooted count at n={n}"
                    );
                }
            }
        }
        (CountKindArg::Free, None) => {
            let check_to = n_max.min(120);
            let alt = counting::shared_decomposition(check_to)?.f.clone();
            let dis = counting::free_series_from(&counting::rooted_series(check_to)?)?;
            for n in 1..=check_to {
                if dis.coeff(n) != alt.coeff(n) {
                    anyhow::bail!(
                        "identity violated: dissymmetry vs symmetry free count at n={n}"
                    );
                }
            }
        }
        (CountKindArg::Rooted, Some(d)) => {
            for n in 1..=n_max.min(9) {
                let streamed =
                    enumerate::gen_rooted_restricted(n, d, DegreeMode::AllStar).count();
                if series.coeff(n) != num::BigRational::from_integer(streamed.into()) {
                    anyhow::bail!(
                        "identity violated: restricted rooted series vs enumeration at n={n}"
                    );
                }
            }
        }
        (CountKindArg::Free, Some(d)) => {
            for n in 1..=n_max.min(9) {
                let streamed = enumerate::gen_free_restricted(n, d).count();
                if series.coeff(n) != num::BigRational::from_integer(streamed.into()) {
                    anyhow::bail!(
                        "identity violated: restricted free series vs enumeration at n={n}"
                    );
                }
            }
        }
        (CountKindArg::Labelled, _) => unreachable!(),
    }

    for n in 1..=n_max {
        let c = series.coeff(n);
        if dump_series {
            println!("{n}\t{}/{}", c.numer(), c.denom());
        } else {
            println!("{n}\t{}", c.to_integer());
        }
    }
    Ok(())
}

// ---- constants ---------------------------------------------------------

fn cmd_constants(order: usize, json: bool) -> anyhow::Result<()> {
    let c = asymptotics::constants(order)?;
    if json {
        println!("{}", serde_json::to_string(&c)?);
    } else {
        println!("rho      = {:.12}", c.rho);
        println!("mean_x   = {:.12}", c.mean_x);
        println!("c_a      = {:.12}", c.c_a);
        println!("c_f      = {:.12}", c.c_f);
        println!("order    = {}", c.truncation_order);
        println!("residual = {:.3e}", c.residual);
    }
    Ok(())
}

// ---- enumerate / census ------------------------------------------------

fn cmd_enumerate(kind: EnumKindArg, n: usize, degrees: Option<&str>) -> anyhow::Result<()> {
    if n == 0 {
        return Err(usage("-n must be at least 1"));
    }
    let d = degrees.map(parse_degrees).transpose()?;
    match (kind, &d) {
        (EnumKindArg::Rooted, None) => {
            for t in enumerate::gen_rooted(n) {
                println!("{t}");
            }
        }
        (EnumKindArg::Rooted, Some(d)) => {
            for t in enumerate::gen_rooted_restricted(n, d, DegreeMode::AllStar) {
                println!("{t}");
            }
        }
        (EnumKindArg::Free, None) => {
            for t in enumerate::gen_free(n) {
                println!("{t}");
            }
        }
        (EnumKindArg::Free, Some(d)) => {
            for t in enumerate::gen_free_restricted(n, d) {
                println!("{t}");
            }
        }
    }
    Ok(())
}

fn cmd_census(n: usize, cap: usize) -> anyhow::Result<()> {
    let table = enumerate::symmetry_census_with_cap(n, cap)?;
    for (k, mass) in &table.entries {
        println!("{k}\t{}/{}", mass.numer(), mass.denom());
    }
    Ok(())
}

// ---- sample ------------------------------------------------------------

fn cmd_sample(kind: SampleKindArg, n: usize, count: usize, seed: u64) -> anyhow::Result<()> {
    if n == 0 {
        return Err(usage("-n must be at least 1"));
    }
    let mut ctx = SamplerContext::new(n, seed)?;
    for _ in 0..count {
        match kind {
            SampleKindArg::Rooted => println!("{}", ctx.sample_rooted(n)?),
            SampleKindArg::FreeExact => println!("{}", ctx.sample_free_exact(n)?),
            SampleKindArg::FreeApprox => println!("{}", ctx.sample_free_approx(n)?),
        }
    }
    println!(
        "{}",
        serde_json::json!({ "seed": seed, "rounds_total": ctx.rounds_total })
    );
    Ok(())
}

// ---- tv / fixedpoints / concentration ----------------------------------

fn cmd_tv(
    n: usize,
    exact: bool,
    mc: bool,
    samples: usize,
    seed: u64,
    degrees: Option<&str>,
) -> anyhow::Result<()> {
    if exact && mc {
        return Err(usage("--exact and --mc are mutually exclusive"));
    }
    let d = degrees.map(parse_degrees).transpose()?;
    let record = if mc {
        if d.is_some() {
            return Err(usage("--mc does not support --degrees; use exact mode"));
        }
        let est = stochastics::tv_mc(n, samples, seed)?;
        serde_json::json!({
            "n": n,
            "tv": est.tv,
            "method": "mc",
            "ci": est.ci_half_width,
            "samples": est.samples,
            "seed": est.seed,
        })
    } else {
        let tv = match &d {
            None => stochastics::tv_exact(n)?,
            Some(d) => degree::tv_exact_restricted(d, n)?,
        };
        serde_json::json!({
            "n": n,
            "tv": stochastics::rational_to_f64(&tv),
            "exact": format!("{}/{}", tv.numer(), tv.denom()),
            "method": "exact",
            "ci": serde_json::Value::Null,
        })
    };
    println!("{record}");
    Ok(())
}

fn cmd_fixedpoints(n: usize) -> anyhow::Result<()> {
    let law = stochastics::conditional_fixed_points(n)?;
    for (&k, mass) in &law.entries {
        println!("{k}\t{:.12}", mass.to_f64());
    }
    Ok(())
}

fn cmd_concentration(n: usize, alpha: f64) -> anyhow::Result<()> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(usage("--alpha must lie in (0.5, 1)"));
    }
    let r = stochastics::concentration_check(n, alpha)?;
    println!(
        "{}",
        serde_json::json!({
            "n": r.n,
            "alpha": r.alpha,
            "center": r.center,
            "radius": r.radius,
            "tail_mass": r.tail_mass,
            "bound_exponent": r.bound_exponent,
        })
    );
    Ok(())
}

// ---- tree --------------------------------------------------------------

fn cmd_tree(op: TreeOp) -> anyhow::Result<()> {
    let stdin = std::io::stdin();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rooted = RootedTree::from_str(line.trim().strip_prefix("bicentral:").unwrap_or(&line))
            .map_err(|e| usage(format!("bad level sequence {:?}: {e}", line.trim())))?;
        match op {
            TreeOp::Canon => {
                println!("{}", canonicalize_rooted_adj(&rooted.adjacency(), 0)?);
            }
            TreeOp::Center => match center(&rooted.adjacency())? {
                Center::Vertex(v) => println!("vertex {v}"),
                Center::Edge(u, v) => println!("edge {u} {v}"),
            },
            TreeOp::Aut => {
                println!("{}", FreeTree::from_str(&line)?.aut_size());
            }
            TreeOp::Orbits => {
                println!("{}", FreeTree::from_str(&line)?.orbit_count());
            }
            TreeOp::Fixpoly => {
                let p = FreeTree::from_str(&line)?.fix_polynomial();
                let parts: Vec<String> = p.coeffs.iter().map(|c| c.to_string()).collect();
                println!("{}", parts.join(" "));
            }
        }
    }
    Ok(())
}

// ---- verify ------------------------------------------------------------

fn cmd_verify(level: VerifyLevel, path: &std::path::Path) -> anyhow::Result<()> {
    let th = verify::Thresholds::load(path)
        .map_err(|e| usage(format!("cannot load thresholds {}: {e}", path.display())))?;
    let outcomes = verify::run(
        match level {
            VerifyLevel::Quick => verify::Level::Quick,
            VerifyLevel::Full => verify::Level::Full,
        },
        &th,
    );
    let mut failed = Vec::new();
    for o in &outcomes {
        if o.pass {
            println!("ok   {} — {}", o.name, o.detail);
        } else {
            println!("FAIL {} — {}", o.name, o.detail);
            failed.push(o.name);
        }
    }
    if failed.is_empty() {
        println!("verify: all {} checks passed", outcomes.len());
        Ok(())
    } else {
        anyhow::bail!("identity violated: {}", failed.join(", "));
    }
}
