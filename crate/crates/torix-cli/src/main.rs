//! Command-line front end: validate a fan, describe its derived structures,
//! count rational points in a moving height window, compute the predicted
//! leading constant, and compare the two.
//!
//! All report output (JSON or CSV) goes to stdout or `--out` and is
//! byte-deterministic for a fixed configuration; timings go to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use torix::{
    ample_basis, build_section_basis, builtin_fan, compile_region, compute_picard,
    default_unit_box, enumerate_points, mobius_table, parse_fan, parse_region, predict, rat,
    validate_direction, validate_fan, CompiledRegion, CountReport, DensityReport, EnumOptions,
    Error, Fan, GrowthDirection, GrowthSpec, PicardData, PredictConfig, Rat, Result, SectionBasis,
};

#[derive(Parser)]
#[command(
    name = "torix",
    version,
    about = "Count rational points of bounded height on split toric varieties and compare \
             the counts against the predicted leading constant"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a fan document: primitive rays, smoothness, completeness, and a
    /// projectivity certificate (an ample basis).
    Validate(FanArgs),
    /// Print the structures derived from a fan: divisor classes, wall
    /// relations, the ample basis, primitive collections.
    Describe(DescribeArgs),
    /// Exactly count points with heights in the window, one row per scale B.
    Count(RunArgs),
    /// Assemble the predicted leading constant and growth exponent.
    Predict(RunArgs),
    /// Exact counts against predictions, as CSV.
    Compare(RunArgs),
}

#[derive(Args)]
struct FanArgs {
    /// Fan source: `builtin:NAME` or a path to a fan JSON document.
    #[arg(long)]
    fan: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DescribeArgs {
    #[command(flatten)]
    fan: FanArgs,
    /// Include the monomial bases of the ample basis classes.
    #[arg(long)]
    sections: bool,
    /// Include the local Möbius table.
    #[arg(long)]
    mobius: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Fan source: `builtin:NAME` or a path to a fan JSON document.
    #[arg(long)]
    fan: String,
    /// Region document path; default is the unit window `1 ≤ H_k < 2` on
    /// every ample basis class.
    #[arg(long)]
    region: Option<PathBuf>,
    /// Growth direction: comma list of per-ray pairings `⟨[D_ρ], u⟩`
    /// (rationals, e.g. `1,1,1,2`); built-in fans have a default.
    #[arg(long)]
    u: Option<String>,
    /// Comma list of window scales, ≥ 1 and strictly increasing.
    #[arg(long = "B")]
    b: Option<String>,
    /// ε in the reported error exponent (1 − 1/f − ε)·minᵨ⟨[D_ρ], u⟩.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Float tolerance for window-boundary comparisons during enumeration.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Monte Carlo sample count for the archimedean density.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Seed for every Monte Carlo stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest prime in the Euler product.
    #[arg(long, default_value_t = 100_000)]
    pmax: u64,
    /// Worker threads (default: TORIX_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Resolve window-boundary hits by exact integer comparison instead of
    /// the float tolerance.
    #[arg(long)]
    exact_boundary: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let started = Instant::now();
    let outcome = match cli.cmd {
        Cmd::Validate(a) => cmd_validate(&a),
        Cmd::Describe(a) => cmd_describe(&a),
        Cmd::Count(a) => with_pool(&a, |a| cmd_count(a)),
        Cmd::Predict(a) => with_pool(&a, |a| cmd_predict(a)),
        Cmd::Compare(a) => with_pool(&a, |a| cmd_compare(a)),
    };
    eprintln!("wall-clock seconds: {:.3}", started.elapsed().as_secs_f64());
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_budget_or_tolerance() { 2 } else { 1 })
        }
    }
}

/// Run a command inside a Rayon pool of the requested width; with no request
/// the global default pool is used.
fn with_pool(
    args: &RunArgs,
    f: impl FnOnce(&RunArgs) -> Result<ExitCode> + Send,
) -> Result<ExitCode> {
    let threads = args.threads.or_else(|| {
        std::env::var("TORIX_THREADS").ok().and_then(|s| s.parse().ok())
    });
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build a {n}-thread pool: {e}")))?
            .install(|| f(args)),
        Some(_) => Err(Error::InvalidConfig("--threads must be positive".into())),
        None => f(args),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Document(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Load a fan from `builtin:NAME` or a JSON file, along with the registered
/// default growth direction when there is one.
fn load_fan(src: &str) -> Result<(Fan, Option<Vec<i64>>)> {
    if let Some(name) = src.strip_prefix("builtin:") {
        let b = builtin_fan(name)?;
        return Ok((b.fan, Some(b.default_u)));
    }
    let text = fs::read_to_string(src)
        .map_err(|e| Error::Document(format!("cannot read {src}: {e}")))?;
    Ok((parse_fan(&text)?, None))
}

/// Everything derived from a validated fan.
struct Problem {
    fan: Fan,
    pd: PicardData,
    sb: SectionBasis,
    default_u: Option<Vec<i64>>,
}

fn load_problem(src: &str) -> Result<Problem> {
    let (fan, default_u) = load_fan(src)?;
    torix::require_valid(&fan)?;
    let pd = compute_picard(&fan)?;
    let ab = ample_basis(&pd, None)?;
    let sb = build_section_basis(&pd, ab)?;
    Ok(Problem { fan, pd, sb, default_u })
}

fn load_region(p: &Problem, path: &Option<PathBuf>) -> Result<CompiledRegion> {
    let region = match path {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Document(format!("cannot read {}: {e}", path.display())))?;
            parse_region(&text)?
        }
        None => default_unit_box(&p.pd, &p.sb.basis)?,
    };
    compile_region(&p.pd, &p.sb.basis, &region)
}

fn parse_direction(p: &Problem, args: &RunArgs) -> Result<Option<GrowthDirection>> {
    let pairings: Vec<Rat> = match (&args.u, &p.default_u) {
        (Some(text), _) => text
            .split(',')
            .map(|s| {
                s.trim().parse::<Rat>().map_err(|_| {
                    Error::InvalidConfig(format!("--u entry {s:?} is not a rational number"))
                })
            })
            .collect::<Result<_>>()?,
        (None, Some(d)) => d.iter().map(|&x| rat(x)).collect(),
        (None, None) => return Ok(None),
    };
    validate_direction(&p.pd, &pairings).map(Some)
}

fn parse_scales(args: &RunArgs, default: &[f64]) -> Result<Vec<f64>> {
    let bs: Vec<f64> = match &args.b {
        Some(text) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("--B entry {s:?} is not a number")))
            })
            .collect::<Result<_>>()?,
        None => default.to_vec(),
    };
    if bs.is_empty() {
        return Err(Error::InvalidConfig("--B list is empty".into()));
    }
    for b in &bs {
        if !b.is_finite() || *b < 1.0 {
            return Err(Error::InvalidConfig(format!("scale B = {b} must be at least 1")));
        }
    }
    if bs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("--B values must be strictly increasing".into()));
    }
    Ok(bs)
}

fn check_budgets(args: &RunArgs) -> Result<()> {
    if args.samples < 1_000 {
        return Err(Error::InvalidConfig(format!(
            "--samples must be at least 1000, got {}",
            args.samples
        )));
    }
    if !(args.tol >= 0.0 && args.tol < 1.0) {
        return Err(Error::InvalidConfig(format!("--tol must lie in [0, 1), got {}", args.tol)));
    }
    if args.pmax < 11 {
        return Err(Error::InvalidConfig(format!(
            "--pmax must be at least 11, got {}",
            args.pmax
        )));
    }
    Ok(())
}

fn enum_options(args: &RunArgs, collect_embeddings: bool) -> EnumOptions {
    EnumOptions {
        eps: args.tol,
        exact_boundary: args.exact_boundary,
        collect_embeddings,
        ..EnumOptions::default()
    }
}

/// Growth spec at scale B, or none when B = 1 and no direction is available.
fn growth_at(dir: &Option<GrowthDirection>, b: f64) -> Result<Option<GrowthSpec>> {
    match dir {
        Some(d) => Ok(Some(GrowthSpec::new(d.clone(), b)?)),
        None if b == 1.0 => Ok(None),
        None => Err(Error::InvalidConfig(
            "--u is required to scale the window beyond B = 1 \
             (built-in fans carry a default direction)"
                .into(),
        )),
    }
}

fn rat_list_json(v: &[Rat]) -> serde_json::Value {
    json!(v.iter().map(|x| x.to_string()).collect::<Vec<_>>())
}

fn cmd_validate(args: &FanArgs) -> Result<ExitCode> {
    let (fan, _) = load_fan(&args.fan)?;
    let report = validate_fan(&fan);
    let structural = report.all_pass();
    // projectivity certificate: an ample basis of the class lattice
    let certificate = if structural {
        let pd = compute_picard(&fan)?;
        match ample_basis(&pd, None) {
            Ok(ab) => Ok(ab.classes),
            Err(e) => Err(e.to_string()),
        }
    } else {
        Err("skipped: structural checks failed".to_string())
    };
    let doc = json!({
        "fan": fan.name,
        "checks": serde_json::to_value(&report.checks)
            .map_err(|e| Error::Internal(format!("report serialization: {e}")))?,
        "projective": certificate.is_ok(),
        "ample_basis": match &certificate {
            Ok(classes) => json!(classes),
            Err(reason) => json!({ "error": reason }),
        },
    });
    let pass = structural && certificate.is_ok();
    emit(&args.out, &format!("{:#}\n", doc))?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_describe(args: &DescribeArgs) -> Result<ExitCode> {
    let p = load_problem(&args.fan.fan)?;
    let pcs = torix::primitive_collections(&p.fan);
    let mut doc = json!({
        "fan": p.fan.name,
        "dim": p.fan.dim,
        "rays": p.fan.rays,
        "max_cones": serde_json::to_value(&p.fan.max_cones)
            .map_err(|e| Error::Internal(format!("serialization: {e}")))?,
        "picard_rank": p.pd.t,
        "ray_classes": p.pd.ray_classes,
        "anticanonical_class": p.pd.anticanonical,
        "wall_relations": p.pd.wall_relations,
        "ample_basis": p.sb.basis.classes,
        "primitive_collections": serde_json::to_value(&pcs)
            .map_err(|e| Error::Internal(format!("serialization: {e}")))?,
        "min_collection_size": torix::min_collection_size(&p.fan)?,
        "default_direction": p.default_u,
        "fan_hash": torix::fan_hash(&p.fan),
    });
    let obj = doc.as_object_mut().expect("document is an object");
    if args.sections {
        obj.insert("sections".into(), json!(p.sb.monomials));
    }
    if args.mobius {
        let table = mobius_table(&p.fan)?;
        let entries: Vec<_> = table
            .entries
            .iter()
            .map(|(a, v)| json!({ "rays": serde_json::to_value(a).unwrap(), "value": v }))
            .collect();
        obj.insert("mobius_table".into(), json!(entries));
    }
    emit(&args.fan.out, &format!("{:#}\n", doc))?;
    Ok(ExitCode::SUCCESS)
}

/// Verify the orbit-size identity on a finished count: the torsor count is a
/// multiple of 2^t and normalized embeddings are counted exactly once per
/// rational point.
fn check_fibers(rep: &CountReport, t: usize) -> Result<()> {
    let orbit = 1u64 << t;
    if rep.torsor_count % orbit != 0 {
        return Err(Error::Internal(format!(
            "torsor count {} is not a multiple of 2^{t}",
            rep.torsor_count
        )));
    }
    if let Some(d) = rep.distinct_embeddings {
        if d != rep.rational_count {
            return Err(Error::Internal(format!(
                "{d} distinct embeddings for {} rational points",
                rep.rational_count
            )));
        }
    }
    Ok(())
}

fn cmd_count(args: &RunArgs) -> Result<ExitCode> {
    check_budgets(args)?;
    let p = load_problem(&args.fan)?;
    let cr = load_region(&p, &args.region)?;
    let dir = parse_direction(&p, args)?;
    let bs = parse_scales(args, &[1.0])?;
    let opts = enum_options(args, true);

    let mut csv = String::from(
        "B,torsor_count,torus_count,boundary_count,rational_count,distinct_embeddings\n",
    );
    for &b in &bs {
        let t0 = Instant::now();
        let gs = growth_at(&dir, b)?;
        let rep = enumerate_points(&p.fan, &p.pd, &p.sb, &cr, gs.as_ref(), &opts)?;
        check_fibers(&rep, p.pd.t)?;
        eprintln!(
            "B={b}: {} torsor points in {:.3}s",
            rep.torsor_count,
            t0.elapsed().as_secs_f64()
        );
        writeln!(
            csv,
            "{b},{},{},{},{},{}",
            rep.torsor_count,
            rep.torus_count,
            rep.boundary_count,
            rep.rational_count,
            rep.distinct_embeddings.expect("embeddings were collected"),
        )
        .expect("write to string");
    }
    emit(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn predict_report(p: &Problem, cr: &CompiledRegion, dir: &GrowthDirection, args: &RunArgs) -> Result<DensityReport> {
    let cfg = PredictConfig {
        samples: args.samples,
        seed: args.seed,
        p_max: args.pmax,
        epsilon: args.eps,
    };
    predict(&p.fan, &p.pd, &p.sb, cr, dir, &cfg)
}

fn require_direction(dir: Option<GrowthDirection>) -> Result<GrowthDirection> {
    dir.ok_or_else(|| {
        Error::InvalidConfig(
            "--u is required (built-in fans carry a default direction)".into(),
        )
    })
}

fn estimate_json(e: &torix::Estimate) -> serde_json::Value {
    json!({ "value": e.value, "sigma": e.sigma })
}

fn cmd_predict(args: &RunArgs) -> Result<ExitCode> {
    check_budgets(args)?;
    let p = load_problem(&args.fan)?;
    let cr = load_region(&p, &args.region)?;
    let dir = require_direction(parse_direction(&p, args)?)?;
    let report = predict_report(&p, &cr, &dir, args)?;

    let mut doc = json!({
        "fan": p.fan.name,
        "fan_hash": report.fan_hash,
        "nu": estimate_json(&report.nu),
        "torsor_volume": estimate_json(&report.torsor_volume),
        "real_density": estimate_json(&report.real_density),
        "euler_product": {
            "value": report.euler.value,
            "tail": [report.euler.tail.0, report.euler.tail.1],
            "p_max": report.euler.p_max,
        },
        "tamagawa": estimate_json(&report.tamagawa),
        "growth_exponent": report.growth_exponent.to_string(),
        "min_pairing": report.min_pairing.to_string(),
        "f_min": report.f_min,
        "epsilon": report.epsilon,
        "error_exponent": report.error_exponent,
        "samples": report.samples,
        "seed": report.seed,
        "direction": rat_list_json(&dir.pairings),
    });
    if args.b.is_some() {
        let rows: Vec<_> = parse_scales(args, &[])?
            .iter()
            .map(|&b| {
                let (lo, hi) = report.prediction_interval(b);
                json!({ "B": b, "prediction": report.prediction(b), "interval": [lo, hi] })
            })
            .collect();
        doc.as_object_mut().expect("object").insert("predictions".into(), json!(rows));
    }
    emit(&args.out, &format!("{:#}\n", doc))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: &RunArgs) -> Result<ExitCode> {
    check_budgets(args)?;
    let p = load_problem(&args.fan)?;
    let cr = load_region(&p, &args.region)?;
    let dir = require_direction(parse_direction(&p, args)?)?;
    let bs = parse_scales(args, &[2.0, 4.0, 8.0, 16.0])?;
    let opts = enum_options(args, false);
    let report = predict_report(&p, &cr, &dir, args)?;
    eprintln!(
        "prediction: {} · B^{} (error exponent {:.4})",
        report.nu.value * report.tamagawa.value,
        report.growth_exponent,
        report.error_exponent
    );

    let mut csv = String::from(
        "B,rational_count,torus_count,boundary_count,prediction,prediction_lo,prediction_hi,\
         ratio,residual_scale\n",
    );
    for &b in &bs {
        let t0 = Instant::now();
        let gs = growth_at(&Some(dir.clone()), b)?;
        let rep = enumerate_points(&p.fan, &p.pd, &p.sb, &cr, gs.as_ref(), &opts)?;
        let prediction = report.prediction(b);
        let (lo, hi) = report.prediction_interval(b);
        let ratio = rep.rational_count as f64 / prediction;
        let residual = b.powf(-report.error_exponent);
        eprintln!(
            "B={b}: {} rational points, ratio {ratio:.6}, {:.3}s",
            rep.rational_count,
            t0.elapsed().as_secs_f64()
        );
        writeln!(
            csv,
            "{b},{},{},{},{prediction},{lo},{hi},{ratio},{residual}",
            rep.rational_count, rep.torus_count, rep.boundary_count,
        )
        .expect("write to string");
    }
    emit(&args.out, &csv)?;
    Ok(ExitCode::SUCCESS)
}
