//! Command-line driver: classification, sphericalization and verification
//! runs from one TOML configuration, emitting JSON reports and CSV plot
//! data into an output directory.
//!
//! Exit codes: 0 — verdicts obtained (pass or fail), 2 — any verdict
//! inconclusive, 1 — configuration, prerequisite or IO errors.

use clap::{Parser, Subcommand, ValueEnum};
use sphericalize::config::RunConfig;
use sphericalize::density::{
    check_equivalence, classify, decay_exponent, h_and_inverse, DensityFn, DensityReport, Verdict,
};
use sphericalize::error::Error;
use sphericalize::grid::GeoGrid;
use sphericalize::poincare;
use sphericalize::report::{write_json, Csv};
use sphericalize::space::{build_halfplane, io as space_io, MetricTag, SpaceModel};
use sphericalize::sphere::{check_condition_c, sphericalize, SphereView};
use sphericalize::verify;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "sphericalize", version, about = "Sphericalization toolkit for unbounded metric measure spaces")]
struct Cli {
    /// Run configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports and plot data
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the configured random seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Sphericalize even when the density fails classification
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the density against the admissibility conditions
    CheckDensity,
    /// Build the sphericalized overlay and export its summary
    Sphericalize,
    /// Run numerical verifiers
    Verify {
        #[arg(value_enum)]
        which: Which,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Which {
    Uniformity,
    Doubling,
    Brackets,
    Poincare,
    Counterexamples,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(config_path)?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(cli.out.join("run_config.toml"), cfg.to_toml())?;

    match cli.command {
        Command::CheckDensity => cmd_check_density(&cfg, &cli.out),
        Command::Sphericalize => cmd_sphericalize(&cfg, &cli.out, cli.force),
        Command::Verify { which } => cmd_verify(&cfg, &cli.out, cli.force, which),
    }
}

fn classify_tolerant(cfg: &RunConfig, f: &DensityFn) -> Option<DensityReport> {
    classify(f, &cfg.grid.to_grid(), cfg.density.safety, cfg.density.quad_tol).ok()
}

fn build_space(cfg: &RunConfig) -> Result<SpaceModel, Error> {
    match cfg.space.builder.as_str() {
        "halfplane" => build_halfplane(cfg.space.mesh_rel, cfg.space.r_max),
        "import" => {
            let path = cfg
                .space
                .import_path
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("space.import_path missing".into()))?;
            let file = std::fs::File::open(path)?;
            space_io::import(std::io::BufReader::new(file))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown space builder '{other}' (halfplane | import)"
        ))),
    }
}

fn build_view(cfg: &RunConfig, force: bool) -> Result<SphereView, Error> {
    let f = cfg.density_fn()?;
    let report = classify_tolerant(cfg, &f);
    let space = Arc::new(build_space(cfg)?);
    sphericalize(space, f, report, cfg.sphericalize.sigma, force)
}

fn cmd_check_density(cfg: &RunConfig, out: &Path) -> Result<ExitCode, Error> {
    let f = cfg.density_fn()?;
    let grid = cfg.grid.to_grid();
    let report = classify(&f, &grid, cfg.density.safety, cfg.density.quad_tol)?;
    write_json(&out.join("density_report.json"), &report)?;

    let equivalence = check_equivalence(&f, &grid, cfg.density.quad_tol)?;
    write_json(&out.join("equivalence_report.json"), &equivalence)?;

    if report.both_pass() {
        let decay = decay_exponent(&f, &report, &grid)?;
        write_json(&out.join("decay_report.json"), &decay)?;
        let (htable, hcheck) = h_and_inverse(&f, &report, &grid)?;
        write_json(&out.join("h_inverse_check.json"), &hcheck)?;
        let mut csv = Csv::new(&["t", "h"]);
        for (t, h) in htable.grid.iter().zip(&htable.h) {
            csv.row(&[format!("{t:.12e}"), format!("{h:.12e}")]);
        }
        csv.write(&out.join("h_table.csv"))?;
    }

    println!(
        "density {}: A = {:?}, B = {:?}, C_A_hat = {:?}, C_B_hat = {:?}",
        report.family, report.verdict_a, report.verdict_b, report.c_a_hat, report.c_b_hat
    );
    let inconclusive = report.verdict_a == Verdict::Inconclusive
        || report.verdict_b == Verdict::Inconclusive
        || equivalence.verdict == Verdict::Inconclusive;
    Ok(ExitCode::from(if inconclusive { 2 } else { 0 }))
}

fn cmd_sphericalize(cfg: &RunConfig, out: &Path, force: bool) -> Result<ExitCode, Error> {
    let view = build_view(cfg, force)?;
    write_json(&out.join("sphere_summary.json"), &summary(&view))?;

    if let Some(br) = &view.infinity {
        let mut csv = Csv::new(&["node_id", "radial", "lower", "point", "upper"]);
        for (i, b) in br.iter().enumerate() {
            csv.row(&[
                i.to_string(),
                format!("{:.9e}", view.space.nodes[i].radial),
                format!("{:.9e}", b.lower),
                format!("{:.9e}", b.point),
                format!("{:.9e}", b.upper),
            ]);
        }
        csv.write(&out.join("infinity_distances.csv"))?;
    }
    println!(
        "sphericalized: {} nodes, mu_rho(X) = {:.6e}, diam ~ {:.6e}",
        view.space.node_count(),
        view.mu_rho_total,
        view.diam_rho_hat
    );
    Ok(ExitCode::from(0))
}

fn summary(view: &SphereView) -> serde_json::Value {
    let mut weights = view.edge_rho.clone();
    weights.sort_by(f64::total_cmp);
    let q = |f: f64| weights[((weights.len() - 1) as f64 * f) as usize];
    let bracket_width = view.infinity.as_ref().map(|br| {
        br.iter()
            .map(|b| (b.upper - b.lower) / b.point.max(1e-300))
            .fold(0.0f64, f64::max)
    });
    serde_json::json!({
        "sigma": view.sigma,
        "node_count": view.space.node_count(),
        "edge_count": view.space.edges.len(),
        "mu_rho_total": view.mu_rho_total,
        "diam_rho_hat": view.diam_rho_hat,
        "edge_rho_weight_quantiles": {
            "min": q(0.0), "q25": q(0.25), "median": q(0.5), "q75": q(0.75), "max": q(1.0)
        },
        "infinity_bracket_max_relative_width": bracket_width,
        "density": view.report,
    })
}

fn cmd_verify(cfg: &RunConfig, out: &Path, force: bool, which: Which) -> Result<ExitCode, Error> {
    let mut inconclusive = false;
    let all = which == Which::All;

    if all || matches!(which, Which::Uniformity) {
        let view = build_view(cfg, force)?;
        verify_uniformity(cfg, out, &view)?;
    }
    if all || matches!(which, Which::Brackets) {
        let view = build_view(cfg, force)?;
        let checks = verify::verify_bracket_bounds(&view, cfg.run.samples, cfg.run.seed)?;
        write_json(&out.join("verify_brackets.json"), &checks)?;
        for rep in &checks.reports {
            println!("{}: {:?} (worst ratio {:.4})", rep.check, rep.verdict, rep.worst_ratio);
        }
    }
    if all || matches!(which, Which::Doubling) {
        let view = build_view(cfg, force)?;
        inconclusive |= verify_doubling(cfg, out, &view)?;
    }
    if all || matches!(which, Which::Poincare) {
        let view = build_view(cfg, force)?;
        verify_poincare(cfg, out, &view)?;
    }
    if all || matches!(which, Which::Counterexamples) {
        verify_counterexamples(cfg, out)?;
    }
    Ok(ExitCode::from(if inconclusive { 2 } else { 0 }))
}

fn verify_uniformity(cfg: &RunConfig, out: &Path, view: &SphereView) -> Result<(), Error> {
    let pairs = verify::stratified_pairs(view, cfg.run.samples.max(100), cfg.run.seed);
    let outcome = verify::estimate_uniformity(view, &pairs)?;
    write_json(&out.join("verify_uniformity.json"), &outcome)?;

    let mut csv = Csv::new(&["x", "y", "best_functional", "winner", "d_rho", "family_limited"]);
    for p in &outcome.pairs {
        csv.row(&[
            p.x.to_string(),
            p.y.to_string(),
            format!("{:.9e}", p.best_functional),
            p.winner.to_string(),
            format!("{:.9e}", p.d_rho),
            p.family_limited.to_string(),
        ]);
    }
    csv.write(&out.join("uniformity_pairs.csv"))?;

    if let Some((x, y)) = outcome.worst_pair {
        let boundary = verify::boundary_rho_field(view);
        let (family, path) = verify::witness_curve(view, &boundary, x, y)?;
        let mut csv = Csv::new(&["node_id", "x", "y"]);
        for &v in &path {
            let p = view.space.nodes[v].xy;
            csv.row(&[v.to_string(), format!("{:.9e}", p[0]), format!("{:.9e}", p[1])]);
        }
        csv.write(&out.join("witness_curve.csv"))?;
        println!("uniformity: C_hat = {:.4} (worst pair {x}-{y}, family {family})", outcome.c_hat);
    }
    Ok(())
}

fn verify_doubling(cfg: &RunConfig, out: &Path, view: &SphereView) -> Result<bool, Error> {
    let cc = check_condition_c(view, &GeoGrid::new(1e-2, view.space.r_max, 8))?;
    write_json(&out.join("condition_c.json"), &cc)?;
    let mut csv = Csv::new(&["radius", "log_ratio"]);
    for &(r, v) in &cc.samples {
        csv.row(&[format!("{r:.9e}"), format!("{v:.9e}")]);
    }
    csv.write(&out.join("condition_c_trend.csv"))?;
    println!("condition C: {:?}, C_C_hat = {:?}", cc.verdict, cc.c_c_hat);
    let mut inconclusive = cc.verdict == Verdict::Inconclusive;

    match verify::verify_doubling_rho(view, cfg.run.samples.max(200), cfg.run.seed) {
        Ok(sweep) => {
            let verdict = verify::doubling_verdict(view, &sweep);
            write_json(&out.join("verify_doubling.json"), &sweep)?;
            write_json(&out.join("doubling_verdict.json"), &verdict)?;
            let mut csv = Csv::new(&["radius", "ratio"]);
            for s in &sweep.infinity_sweep {
                csv.row(&[format!("{:.9e}", s.radius), format!("{:.9e}", s.ratio)]);
            }
            csv.write(&out.join("infinity_doubling_trend.csv"))?;
            println!(
                "doubling: C_murho_hat = {:.4}, verdict {:?}",
                sweep.c_murho_hat, verdict.verdict
            );
        }
        Err(Error::Prereq(msg)) => {
            println!("doubling sweep skipped: {msg}");
            inconclusive = true;
        }
        Err(e) => return Err(e),
    }
    Ok(inconclusive)
}

fn verify_poincare(cfg: &RunConfig, out: &Path, view: &SphereView) -> Result<(), Error> {
    let suite = poincare::test_function_suite(view, cfg.poincare.suite_version, cfg.run.seed)?;
    let p = cfg.poincare.p;
    let lambda_max = cfg.poincare.lambda.iter().copied().fold(1.0f64, f64::max);

    let mut csv = Csv::new(&[
        "metric", "center", "radius", "field", "p", "lambda", "lhs", "rhs", "ratio",
    ]);
    let mut summary = Vec::new();
    for metric in [MetricTag::Original, MetricTag::Sphericalized] {
        let balls =
            poincare::sample_balls(view, metric, cfg.poincare.balls, lambda_max, cfg.run.seed);
        for &lambda in &cfg.poincare.lambda {
            let sweep = poincare::poincare_sweep(view, metric, &suite, &balls, p, lambda)?;
            for s in &sweep.samples {
                csv.row(&[
                    format!("{:?}", s.metric),
                    s.center.to_string(),
                    format!("{:.9e}", s.radius),
                    s.field_tag.clone(),
                    format!("{}", s.p),
                    format!("{}", s.lambda),
                    format!("{:.9e}", s.lhs),
                    format!("{:.9e}", s.rhs),
                    format!("{:.9e}", s.ratio),
                ]);
            }
            println!(
                "poincare {:?} lambda={}: C_P_hat = {:.4} ({} samples, {} skipped)",
                metric,
                lambda,
                sweep.c_p_hat,
                sweep.samples.len(),
                sweep.skipped
            );
            summary.push(sweep);
        }
    }
    csv.write(&out.join("poincare_samples.csv"))?;

    let pick = |m: MetricTag, l: f64| {
        summary.iter().find(|s| s.metric == m && s.lambda == l).map(|s| s.c_p_hat)
    };
    let preservation = match (pick(MetricTag::Original, 2.0), pick(MetricTag::Sphericalized, 2.0)) {
        (Some(base), Some(rho)) if base > 0.0 => Some(rho / base),
        _ => None,
    };
    let identity = {
        let g = poincare::local_upper_gradient(view, &suite[7], MetricTag::Sphericalized);
        let mut paths = Vec::new();
        let pairs = verify::stratified_pairs(view, 40, cfg.run.seed ^ 0xf00d);
        for &(x, y) in &pairs {
            let field = sphericalize::space::dijkstra::dijkstra(
                &view.space,
                sphericalize::space::EdgeWeights::Length,
                &[(x, 0.0)],
            );
            paths.push(field.path_to(y));
        }
        poincare::transform_identity_check(view, &paths, &g)?
    };
    let ug = poincare::ug_transform_check(view, &suite[7], &[1.0, 2.0]);
    // interior-clearance sanity: every sampled ball holds a point whose
    // boundary clearance is a fixed share of the radius
    let c_hat = {
        let pairs = verify::stratified_pairs(view, 80, cfg.run.seed ^ 0xbeef);
        verify::estimate_uniformity(view, &pairs)?.c_hat
    };
    let deep = poincare::deep_point_check(view, c_hat, 40, cfg.run.seed);
    write_json(
        &out.join("poincare_summary.json"),
        &serde_json::json!({
            "per_sweep": summary.iter().map(|s| serde_json::json!({
                "metric": format!("{:?}", s.metric),
                "p": s.p, "lambda": s.lambda, "c_p_hat": s.c_p_hat,
                "samples": s.samples.len(), "skipped": s.skipped,
            })).collect::<Vec<_>>(),
            "preservation_factor_lambda2": preservation,
            "path_identity_worst_rel_error": identity,
            "gradient_transform": ug,
            "deep_point_check": deep,
            "uniformity_constant_used": c_hat,
        }),
    )?;
    if let Some(f) = preservation {
        println!("poincare preservation factor (lambda=2): {f:.4}");
    }
    Ok(())
}

fn verify_counterexamples(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let grid = cfg.grid.to_grid();
    let tol = cfg.density.quad_tol;
    let space = Arc::new(build_space(cfg)?);
    let ladder = [1.0, 2.0, 4.0, 8.0, 16.0];

    // oscillation failure: exponential density, certificates refute every C
    let f = DensityFn::exponential(1.0);
    let report = classify(&f, &grid, 1.0, tol)?;
    let view = sphericalize(space.clone(), f, Some(report), cfg.sphericalize.sigma, true)?;
    let certs = verify::refute_ladder(&view, &ladder)?;
    let all_refuted = certs.iter().all(|c| c.refuted);
    println!("counterexample (oscillation): refuted all of {ladder:?}: {all_refuted}");

    // tail-domination failure: log density, certificate bounds exceed the ladder
    let f = DensityFn::powlog(-1.0, -2.0);
    let report = classify(&f, &grid, 1.0, tol)?;
    let view_b = sphericalize(space.clone(), f, Some(report), cfg.sphericalize.sigma, true)?;
    let mut b_bounds = Vec::new();
    for &target in &ladder {
        // lower bound grows like ln(r+2)/π: pick r past the target scale
        let r = ((target * std::f64::consts::PI * 1.25).exp() - 2.0).max(10.0);
        let (r1, r2) = verify::certificate_b_radii(&view_b.density, r, tol)?;
        let cert = verify::certificate_fails_b(&view_b, r1, r, r2)?;
        b_bounds.push((target, cert.lower_bound));
    }
    let b_ok = b_bounds.iter().all(|&(t, b)| b > t);
    println!("counterexample (tail domination): bounds exceed ladder: {b_ok}");

    // measure concentration failure: critical exponent with log correction
    let f = DensityFn::powlog(-2.0, -2.0);
    let report = classify(&f, &grid, 1.0, tol)?;
    let view_c = sphericalize(space, f, Some(report), 1.0, true)?;
    let cc = check_condition_c(&view_c, &GeoGrid::new(1e-2, view_c.space.r_max, 8))?;
    let sweep = verify::verify_doubling_rho(&view_c, cfg.run.samples.min(300), cfg.run.seed)?;
    let trend_up = verify::trend_strictly_increasing(&sweep.infinity_trend, 3);
    println!(
        "counterexample (measure concentration): condition C {:?}, infinity-trend increasing: {trend_up}",
        cc.verdict
    );

    write_json(
        &out.join("counterexamples.json"),
        &serde_json::json!({
            "oscillation_certificates": certs,
            "oscillation_all_refuted": all_refuted,
            "tail_domination_bounds": b_bounds,
            "tail_domination_exceeds_ladder": b_ok,
            "condition_c_verdict": cc.verdict,
            "infinity_trend": sweep.infinity_trend,
            "infinity_trend_increasing": trend_up,
            "near_infinity_chain": sweep.near_infinity_chain,
        }),
    )?;
    Ok(())
}
