//! Batch front door: configuration, dataset ingestion, command dispatch,
//! and report emission. Subcommands: analyze (pointwise order
//! classification), verify (inequality suites), solve (poly-Laplacian
//! Dirichlet problem), demo (built-in signal generation).
//!
//! Exit codes — analyze: 0 complete, 2 any inconclusive point, 1 failure;
//! verify: 0 pass, 3 inequality violation, 1 misuse; every failure prints
//! structured JSON on stderr with a stable `code` field.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use jetscope::classify;
use jetscope::demo::DemoSignal;
use jetscope::distribution::{Atom, DistributionRep};
use jetscope::field::SampledField;
use jetscope::grid::{Ball, Grid};
use jetscope::io::{self, FieldFormat};
use jetscope::multi_index::MultiIndex;
use jetscope::norms::{self, DualMethod, NormSpec};
use jetscope::pde::{self, Rhs};
use jetscope::report;
use jetscope::rescale;
use jetscope::testfn::TestFunction;
use jetscope::whitney;
use jetscope::{JetscopeError, Result};

#[derive(Parser)]
#[command(
    name = "jetscope",
    version,
    about = "Pointwise differentials of distributions"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the pointwise (k, α) order of a field at given points.
    Analyze(CommonArgs),
    /// Run a named inequality-verification suite.
    Verify {
        /// poincare | zero_boundary | interpolation | deformation |
        /// apriori | duality | criterion | rademacher | whitney
        suite: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the zero-boundary poly-Laplacian problem Δ^i u = f.
    Solve(CommonArgs),
    /// Generate a built-in demo signal and write it as a field file.
    Demo {
        /// absx | xabsx | heaviside | weierstrass(beta,m_max) | smooth | bump
        signal: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key=value config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input field file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Field file format: text | bin.
    #[arg(long)]
    format: Option<String>,
    /// Built-in demo signal to use instead of --input.
    #[arg(long)]
    demo: Option<String>,
    /// Query points, e.g. "0.0;0.25,0.5" (`;` between points, `,` between
    /// coordinates).
    #[arg(long)]
    points: Option<String>,
    /// Largest jet degree tried by the classifier.
    #[arg(long = "k-max")]
    k_max: Option<i64>,
    /// Negative-norm derivative order i.
    #[arg(long)]
    i: Option<usize>,
    /// Integrability exponent p.
    #[arg(long)]
    p: Option<f64>,
    /// Scale-ladder depth (number of dyadic halvings).
    #[arg(long)]
    ladder: Option<usize>,
    /// RNG seed for sampled points and random families.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results are independent of this value.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory (analyze/verify) or file (solve/demo).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid cells per axis for generated demo fields.
    #[arg(long)]
    cells: Option<usize>,
    /// Grid dimension for generated demo fields.
    #[arg(long)]
    dim: Option<usize>,
}

/// Fully resolved run configuration: CLI flag, else config-file entry, else
/// default.
struct RunConfig {
    input: Option<PathBuf>,
    format: FieldFormat,
    demo: Option<String>,
    points: Option<String>,
    k_max: i64,
    i: usize,
    p: f64,
    ladder: usize,
    seed: u64,
    jobs: usize,
    out: PathBuf,
    cells: usize,
    dim: usize,
}

fn load_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (lineno, line) in fs::read_to_string(path)?.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| {
            JetscopeError::InvalidInput(format!(
                "config line {} is not key=value: '{t}'",
                lineno + 1
            ))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn cfg_get<T: FromStr>(cfg: &HashMap<String, String>, key: &str) -> Result<Option<T>> {
    match cfg.get(key) {
        None => Ok(None),
        Some(v) => v.parse::<T>().map(Some).map_err(|_| {
            JetscopeError::InvalidInput(format!("config key '{key}' has bad value '{v}'"))
        }),
    }
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let cfg = match &self.config {
            Some(p) => load_config_file(p)?,
            None => HashMap::new(),
        };
        let format_name = self
            .format
            .clone()
            .or(cfg_get::<String>(&cfg, "format")?)
            .unwrap_or_else(|| "text".into());
        Ok(RunConfig {
            input: self.input.clone().or(cfg_get::<PathBuf>(&cfg, "input")?),
            format: format_name.parse()?,
            demo: self.demo.clone().or(cfg_get::<String>(&cfg, "demo")?),
            points: self.points.clone().or(cfg_get::<String>(&cfg, "points")?),
            k_max: self.k_max.or(cfg_get(&cfg, "k_max")?).unwrap_or(3),
            i: self.i.or(cfg_get(&cfg, "i")?).unwrap_or(0),
            p: self.p.or(cfg_get(&cfg, "p")?).unwrap_or(2.0),
            ladder: self
                .ladder
                .or(cfg_get(&cfg, "ladder")?)
                .unwrap_or(rescale::LADDER_DEPTH),
            seed: self.seed.or(cfg_get(&cfg, "seed")?).unwrap_or(1),
            jobs: self.jobs.or(cfg_get(&cfg, "jobs")?).unwrap_or(1),
            out: self
                .out
                .clone()
                .or(cfg_get::<PathBuf>(&cfg, "out")?)
                .unwrap_or_else(|| PathBuf::from("out")),
            cells: self.cells.or(cfg_get(&cfg, "cells")?).unwrap_or(4096),
            dim: self.dim.or(cfg_get(&cfg, "dim")?).unwrap_or(1),
        })
    }
}

fn parse_points(s: &str, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for part in s.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let coords = part
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| JetscopeError::InvalidInput(format!("bad point '{part}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if coords.len() != dim {
            return Err(JetscopeError::InvalidInput(format!(
                "point '{part}' has {} coordinates, grid has dimension {dim}",
                coords.len()
            )));
        }
        out.push(coords);
    }
    if out.is_empty() {
        return Err(JetscopeError::InvalidInput("no points supplied".into()));
    }
    Ok(out)
}

fn load_field(cfg: &RunConfig) -> Result<SampledField> {
    match (&cfg.input, &cfg.demo) {
        (Some(path), _) => io::read_field(path, cfg.format),
        (None, Some(name)) => {
            let signal: DemoSignal = name.parse()?;
            let grid = Grid::symmetric(cfg.dim, 1.0, cfg.cells)?;
            signal.sample(&grid)
        }
        (None, None) => Err(JetscopeError::InvalidInput(
            "either --input or --demo is required".into(),
        )),
    }
}

fn emit_error(e: &JetscopeError) {
    eprintln!("{}", json!({ "code": e.code(), "message": e.to_string() }));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Analyze(common) => cmd_analyze(&common),
        Cmd::Verify { suite, common } => cmd_verify(suite.as_deref(), &common),
        Cmd::Solve(common) => cmd_solve(&common),
        Cmd::Demo { signal, common } => cmd_demo(signal.as_deref(), &common),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            emit_error(&e);
            ExitCode::from(1)
        }
    }
}

fn cmd_analyze(common: &CommonArgs) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let field = load_field(&cfg)?;
    let grid = field.grid.clone();
    let t = DistributionRep::from_field(field);
    let spec = NormSpec::new(cfg.i, cfg.p)?;
    let points = match &cfg.points {
        Some(s) => parse_points(s, grid.dim)?,
        None => classify::sample_interior_points(&grid, 5, cfg.seed, 0.2),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| JetscopeError::InvalidInput(format!("thread pool: {e}")))?;
    let reports: Vec<Result<classify::OrderReport>> = pool.install(|| {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|a| classify::classify_at_depth(&t, a, &spec, cfg.k_max, cfg.ladder))
            .collect()
    });

    fs::create_dir_all(&cfg.out)?;
    let mut ok_reports = Vec::new();
    for (idx, r) in reports.into_iter().enumerate() {
        let rep = r?;
        fs::write(
            cfg.out.join(format!("profile_{idx}.csv")),
            report::profile_csv(&rep),
        )?;
        ok_reports.push(rep);
    }
    let doc = report::to_json(&ok_reports)?;
    fs::write(cfg.out.join("analyze.json"), &doc)?;
    println!("{doc}");
    let inconclusive = ok_reports.iter().any(|r| r.inconclusive);
    Ok(ExitCode::from(if inconclusive { 2 } else { 0 }))
}

fn cmd_solve(common: &CommonArgs) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let f = load_field(&cfg)?;
    let grid = f.grid.clone();
    let center: Vec<f64> = (0..grid.dim)
        .map(|j| (grid.min[j] + grid.max[j]) / 2.0)
        .collect();
    let radius = 0.9
        * (0..grid.dim)
            .map(|j| (grid.max[j] - grid.min[j]) / 2.0)
            .fold(f64::INFINITY, f64::min);
    let region = Ball::closed(center, radius);
    let i = cfg.i.max(1);
    let u = pde::solve_polylaplacian(Rhs::Field(&f), &grid, &region, i)?;
    let out = if cfg.out.extension().is_some() {
        cfg.out.clone()
    } else {
        fs::create_dir_all(&cfg.out)?;
        cfg.out.join("solution.txt")
    };
    io::write_field(&u, &out, cfg.format)?;
    println!(
        "{}",
        json!({ "i": i, "nodes": grid.node_count(), "output": out.display().to_string(), "radius": radius })
    );
    Ok(ExitCode::from(0))
}

fn cmd_demo(signal: Option<&str>, common: &CommonArgs) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let name = signal
        .map(str::to_string)
        .or(cfg.demo.clone())
        .ok_or_else(|| JetscopeError::InvalidInput("demo requires a signal name".into()))?;
    let sig: DemoSignal = name.parse()?;
    let grid = Grid::symmetric(cfg.dim, 1.0, cfg.cells)?;
    let f = sig.sample(&grid)?;
    let out = if cfg.out.extension().is_some() {
        cfg.out.clone()
    } else {
        fs::create_dir_all(&cfg.out)?;
        let ext = match cfg.format {
            FieldFormat::Text => "txt",
            FieldFormat::Bin => "bin",
        };
        cfg.out.join(format!("demo.{ext}"))
    };
    io::write_field(&f, &out, cfg.format)?;
    println!(
        "{}",
        json!({ "cells": cfg.cells, "dim": cfg.dim, "output": out.display().to_string(), "signal": name })
    );
    Ok(ExitCode::from(0))
}

const SUITES: &[&str] = &[
    "poincare",
    "zero_boundary",
    "interpolation",
    "deformation",
    "apriori",
    "duality",
    "criterion",
    "rademacher",
    "whitney",
];

fn cmd_verify(suite: Option<&str>, common: &CommonArgs) -> Result<ExitCode> {
    let cfg = common.resolve()?;
    let Some(name) = suite else {
        return verify_usage("missing suite name");
    };
    if !SUITES.contains(&name) {
        return verify_usage(&format!("unknown suite '{name}'"));
    }
    let (pass, detail) = match name {
        "poincare" => suite_poincare(&cfg)?,
        "zero_boundary" => suite_zero_boundary()?,
        "interpolation" => suite_interpolation(&cfg)?,
        "deformation" => suite_deformation()?,
        "apriori" => suite_apriori()?,
        "duality" => suite_duality()?,
        "criterion" => suite_criterion(&cfg)?,
        "rademacher" => suite_rademacher(&cfg)?,
        "whitney" => suite_whitney(&cfg)?,
        _ => unreachable!(),
    };
    let doc = report::to_json(&json!({ "detail": detail, "pass": pass, "suite": name }))?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join(format!("verify_{name}.json")), &doc)?;
    println!("{doc}");
    Ok(ExitCode::from(if pass { 0 } else { 3 }))
}

fn verify_usage(msg: &str) -> Result<ExitCode> {
    eprintln!("usage: jetscope verify <suite>");
    eprintln!("suites: {}", SUITES.join(", "));
    emit_error(&JetscopeError::InvalidInput(msg.into()));
    Ok(ExitCode::from(1))
}

fn trig_field(grid: &Grid, rng: &mut ChaCha8Rng) -> SampledField {
    let n = grid.dim;
    let mut terms: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for _ in 0..4 {
        let amp = rng.gen_range(-1.0..1.0);
        let freqs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..3.0)).collect();
        let phase = rng.gen_range(0.0..6.28);
        terms.push((amp, freqs, phase));
    }
    SampledField::from_fn(grid.clone(), move |x| {
        terms
            .iter()
            .map(|(a, fr, ph)| {
                a * (x.iter().zip(fr.iter()).map(|(xi, fi)| xi * fi).sum::<f64>() + ph).sin()
            })
            .sum()
    })
    .expect("trig sampling cannot fail")
}

fn suite_poincare(cfg: &RunConfig) -> Result<(bool, serde_json::Value)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for dim in [1usize, 2] {
        let cells = if dim == 1 { 512 } else { 64 };
        let grid = Grid::symmetric(dim, 1.0, cells)?;
        let ball = Ball::closed(vec![0.0; dim], 0.7);
        for _ in 0..10 {
            let f = trig_field(&grid, &mut rng);
            for k in 1..=3usize {
                let rep = norms::verify_poincare(&f, &ball, k, cfg.p)?;
                checked += 1;
                if !rep.pass {
                    violations += 1;
                }
            }
        }
    }
    Ok((
        violations == 0,
        json!({ "checked": checked, "violations": violations }),
    ))
}

fn suite_zero_boundary() -> Result<(bool, serde_json::Value)> {
    let mut violations = 0usize;
    let mut checked = 0usize;
    for dim in [1usize, 2] {
        for &r in &[0.5f64, 1.0] {
            let theta = TestFunction::bump_in(vec![0.1; dim], r);
            for k in 1..=3usize {
                for j in 0..k {
                    let rep = norms::verify_zero_boundary_poincare(&theta, k, j, 2.0);
                    checked += 1;
                    if !rep.pass {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok((
        violations == 0,
        json!({ "checked": checked, "violations": violations }),
    ))
}

fn suite_interpolation(cfg: &RunConfig) -> Result<(bool, serde_json::Value)> {
    let ball = Ball::closed(vec![0.0], 0.7);
    let mut cs = Vec::new();
    for cells in [512usize, 1024] {
        let grid = Grid::symmetric(1, 1.0, cells)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let family: Vec<SampledField> = (0..10).map(|_| trig_field(&grid, &mut rng)).collect();
        let rep = norms::verify_interpolation(&family, &ball, 1, 2, 2.0, 0.5)?;
        cs.push(rep.measured_c);
    }
    let stable = cs.iter().all(|c| c.is_finite())
        && (cs[0] - cs[1]).abs() <= 0.10 * cs[1].max(cs[0]).max(1e-12);
    Ok((stable, json!({ "constants": cs })))
}

fn suite_deformation() -> Result<(bool, serde_json::Value)> {
    let grid = Grid::symmetric(1, 1.0, 2048)?;
    let f = SampledField::from_fn(grid, |x| x[0] * x[0])?;
    let t = DistributionRep::from_field(f);
    let theta = TestFunction::standard_bump(1);
    let mut residuals = Vec::new();
    for nodes in [8usize, 16, 32, 64] {
        residuals.push(rescale::deformation_residual(
            &t,
            &[0.0],
            0.5,
            0.25,
            &theta,
            nodes,
        )?);
    }
    // Monotone up to the quadrature floor: values at machine scale count as
    // converged.
    let monotone = residuals
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
    let small = *residuals.last().unwrap() <= 1e-6;
    Ok((
        monotone && small,
        json!({ "max_allowed": 1e-6, "residuals": residuals }),
    ))
}

fn suite_apriori() -> Result<(bool, serde_json::Value)> {
    let region = Ball::closed(vec![0.0], 0.5);
    let zb_region = Ball::closed(vec![0.0], 1.0);
    let mut interior = Vec::new();
    let mut zero_boundary = Vec::new();
    for cells in [256usize, 512] {
        let grid = Grid::symmetric(1, 1.0, cells)?;
        let family: Vec<SampledField> = (0..8)
            .map(|m| {
                let omega = 1.0 + m as f64;
                SampledField::from_fn(grid.clone(), move |x| {
                    (omega * x[0] + 0.37 * m as f64).sin()
                })
            })
            .collect::<Result<_>>()?;
        interior.push(pde::apriori_probe_interior(&family, &region, 1, 0, 2.0)?.empirical_c);
        let bumps: Vec<SampledField> = (0..3)
            .map(|m| {
                let b = TestFunction::bump_in(vec![0.0], 0.9);
                let c = 0.4 * m as f64 - 0.3;
                SampledField::from_fn(grid.clone(), move |x| b.eval(x) * (1.0 + c * x[0]))
            })
            .collect::<Result<_>>()?;
        zero_boundary
            .push(pde::apriori_probe_zero_boundary(&bumps, &zb_region, 1, 0, 2.0)?.empirical_c);
    }
    let stable = |v: &[f64]| (v[0] - v[1]).abs() <= 0.10 * v[1].max(v[0]);
    Ok((
        stable(&interior) && stable(&zero_boundary),
        json!({ "interior": interior, "zero_boundary": zero_boundary }),
    ))
}

fn suite_duality() -> Result<(bool, serde_json::Value)> {
    let grid = Grid::symmetric(1, 1.0, 4096)?;
    let f = SampledField::from_fn(grid.clone(), |x| (3.0 * x[0]).cos())?;
    let ball = Ball::closed(vec![0.0], 1.0);
    let spec0 = NormSpec::new(0, 2.0)?;
    let t = DistributionRep::from_field(f.clone());
    let dual = norms::dual_norm(&t, &ball, &spec0, DualMethod::Optimization)?;
    let direct = norms::lp_norm(&f, &ball, 2.0)?;
    let rel = (dual - direct).abs() / direct;

    let spec1 = NormSpec::new(1, 2.0)?;
    let mut dirac = Vec::new();
    let mut dirac_pass = true;
    for &r in &[0.25f64, 0.5] {
        let atom = DistributionRep::from_atom(
            grid.clone(),
            Atom {
                location: vec![0.0],
                weight: 1.0,
                derivative: MultiIndex::zero(1),
            },
        );
        let ball_r = Ball::closed(vec![0.0], r);
        let riesz = norms::dual_norm(&atom, &ball_r, &spec1, DualMethod::Riesz)?;
        let opt = norms::dual_norm(&atom, &ball_r, &spec1, DualMethod::Optimization)?;
        let oracle = (r / 2.0).sqrt();
        dirac_pass &=
            (riesz - oracle).abs() <= 0.02 * oracle && (opt - riesz).abs() <= 0.02 * riesz;
        dirac.push(json!({ "optimization": opt, "oracle": oracle, "r": r, "riesz": riesz }));
    }
    Ok((
        rel <= 1e-4 && dirac_pass,
        json!({ "dirac": dirac, "i0_relative_error": rel }),
    ))
}

fn suite_criterion(cfg: &RunConfig) -> Result<(bool, serde_json::Value)> {
    let grid = Grid::symmetric(1, 1.0, 4096)?;
    let f = DemoSignal::XAbsX.sample(&grid)?;
    let t = DistributionRep::from_field(f);
    let spec = NormSpec::new(cfg.i, cfg.p)?;
    let points = classify::sample_interior_points(&grid, 5, cfg.seed, 0.25);
    let mut all = true;
    let mut rows = Vec::new();
    for a in &points {
        if a[0].abs() < 0.05 {
            continue;
        }
        let rep = classify::verify_criterion(&t, a, 2, 0, &spec)?;
        all &= rep.pass;
        rows.push(json!({ "pass": rep.pass, "point": a }));
    }
    Ok((all, json!({ "points": rows })))
}

fn suite_rademacher(cfg: &RunConfig) -> Result<(bool, serde_json::Value)> {
    let grid = Grid::symmetric(1, 1.0, 4096)?;
    let f = DemoSignal::AbsX.sample(&grid)?;
    let t = DistributionRep::from_field(f);
    let spec = NormSpec::new(cfg.i, cfg.p)?;
    let pts = classify::sample_interior_points(&grid, 40, cfg.seed, 0.2);
    let rep = classify::verify_rademacher(&t, &pts, 1, &spec, 0.95)?;
    Ok((
        rep.pass,
        json!({ "eligible": rep.eligible, "fraction": rep.fraction, "upgraded": rep.upgraded }),
    ))
}

fn suite_whitney(cfg: &RunConfig) -> Result<(bool, serde_json::Value)> {
    let grid = Grid::symmetric(1, 1.0, 512)?;
    let mut mask = vec![false; grid.node_count()];
    let origin = grid.nearest_node(&[0.0]);
    mask[origin] = true;
    let cover = whitney::build_cover(&grid, &mask, 0.5)?;
    let mut disjoint = true;
    for a in 0..cover.centers.len() {
        for b in (a + 1)..cover.centers.len() {
            let d: f64 = cover.centers[a]
                .iter()
                .zip(cover.centers[b].iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            disjoint &= d >= cover.radii[a] + cover.radii[b];
        }
    }
    let part = whitney::build_partition(cover)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut max_dev = 0.0f64;
    let mut max_card = 0usize;
    for _ in 0..1000 {
        let x = [rng.gen_range(-0.95..0.95)];
        let total: f64 = part.active(&x).iter().map(|(_, z)| z).sum();
        max_dev = max_dev.max((total - 1.0).abs());
        max_card = max_card.max(part.cover.members_near(&x).len());
    }
    let pass = disjoint && max_dev <= 1e-10 && max_card <= 129;
    Ok((
        pass,
        json!({
            "balls": part.cover.centers.len(),
            "disjoint": disjoint,
            "max_active_count": max_card,
            "max_partition_deviation": max_dev,
            "v_constants": part.v_constants
        }),
    ))
}
