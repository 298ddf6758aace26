//! Command-line surface: configuration, dispatch, reproducible run manifests
//! and plot-ready tabular outputs.
//!
//! Every command resolves a flat configuration (defaults < config file <
//! flags), runs inside a thread pool of the configured size, writes CSV/JSON
//! outputs whose bytes depend only on (command, config, master seed), and
//! records their SHA-256 digests in a run manifest. Exit codes: 0 success,
//! 2 validation error, 3 runtime failure.

pub mod config;
pub mod manifest;
pub mod outputs;

use std::path::PathBuf;
use std::str::FromStr;

use serde_json::json;
use thiserror::Error;

use crate::engine::{run_replications, EngineConfig, Retention};
use crate::extreme_stats::{
    decoration_gaps, fit_log_correction, laplace_shape, localization_fraction, Ensemble,
    Provenance, StatsError, WindowSpec,
};
use crate::fkpp::{
    front_series, front_speed, solve_coupled, traveling_wave_residual, Field, PdeConfig,
};
use crate::martingale::{additive_w, derivative_z};
use crate::oracles::{
    bridge_prob, bridge_prob_mc, expected_transform_count, identity_residuals, l_limit_check,
    solve_speed_optimization, try_integrate, try_integrate_to_inf,
};
use crate::phase_atlas::{
    classify_with_tol, derived_constants, ApproxFamily, Family, Params, PhaseError,
};
pub use config::RunConfig;
pub use manifest::RunManifest;
pub use outputs::{write_csv, write_json, Column, Schema};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status: 2 for validation errors, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            _ => 3,
        }
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::InsufficientRetention { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    Classify,
    Constants,
    Approx,
    Centering,
    Simulate,
    Fit,
    Localize,
    Decorate,
    Laplace,
    Martingale,
    Fkpp,
    Oracle,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Classify => "classify",
            CommandName::Constants => "constants",
            CommandName::Approx => "approx",
            CommandName::Centering => "centering",
            CommandName::Simulate => "simulate",
            CommandName::Fit => "fit",
            CommandName::Localize => "localize",
            CommandName::Decorate => "decorate",
            CommandName::Laplace => "laplace",
            CommandName::Martingale => "martingale",
            CommandName::Fkpp => "fkpp",
            CommandName::Oracle => "oracle",
        }
    }
}

impl FromStr for CommandName {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "classify" => CommandName::Classify,
            "constants" => CommandName::Constants,
            "approx" => CommandName::Approx,
            "centering" => CommandName::Centering,
            "simulate" => CommandName::Simulate,
            "fit" => CommandName::Fit,
            "localize" => CommandName::Localize,
            "decorate" => CommandName::Decorate,
            "laplace" => CommandName::Laplace,
            "martingale" => CommandName::Martingale,
            "fkpp" => CommandName::Fkpp,
            "oracle" => CommandName::Oracle,
            other => return Err(format!("unknown command {other:?}")),
        })
    }
}

/// Result handed back to the binary: where the manifest went and what to
/// print.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub stdout: Vec<String>,
}

struct Emitter {
    dir: PathBuf,
    prefix: String,
    manifest: RunManifest,
    stdout: Vec<String>,
}

impl Emitter {
    fn csv(&mut self, name: &str, rows: &[Vec<f64>], schema: &Schema) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}_{name}.csv", self.prefix));
        let digest = write_csv(rows, schema, &path)?;
        self.manifest.record(&path, digest);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let path = self.dir.join(format!("{}_{name}.json", self.prefix));
        let digest = write_json(value, &path)?;
        self.manifest.record(&path, digest);
        Ok(())
    }

    fn say(&mut self, line: String) {
        self.stdout.push(line);
    }
}

fn params_of(cfg: &RunConfig) -> Result<Params, CliError> {
    Ok(Params::new(cfg.beta, cfg.sigma2)?)
}

fn family_of(cfg: &RunConfig) -> Result<Option<ApproxFamily>, CliError> {
    match &cfg.family {
        None => Ok(None),
        Some(tag) => {
            let family = Family::from_str(tag).map_err(CliError::Validation)?;
            Ok(Some(ApproxFamily::new(params_of(cfg)?, family, cfg.h)?))
        }
    }
}

fn require_family(cfg: &RunConfig) -> Result<ApproxFamily, CliError> {
    family_of(cfg)?.ok_or_else(|| {
        CliError::Validation("this command needs a family (e.g. family = B23_plus)".into())
    })
}

fn in_pool<T: Send>(threads: u64, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values[(values.len().max(1) + 1) / 2 - 1]
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Runs one command against a resolved configuration.
pub fn run_command(
    name: CommandName,
    oracle_target: Option<&str>,
    cfg: &RunConfig,
) -> Result<RunOutcome, CliError> {
    let dir = PathBuf::from(&cfg.out_dir);
    let command_label = match (name, oracle_target) {
        (CommandName::Oracle, Some(t)) => format!("oracle {t}"),
        _ => name.as_str().to_string(),
    };
    let mut em = Emitter {
        dir: dir.clone(),
        prefix: match oracle_target {
            Some(t) => format!("oracle_{t}"),
            None => name.as_str().to_string(),
        },
        manifest: RunManifest::begin(&command_label, cfg.resolved(), cfg.seed),
        stdout: Vec::new(),
    };

    in_pool(cfg.threads, || -> Result<(), CliError> {
        match name {
            CommandName::Classify => cmd_classify(cfg, &mut em),
            CommandName::Constants => cmd_constants(cfg, &mut em),
            CommandName::Approx => cmd_approx(cfg, &mut em),
            CommandName::Centering => cmd_centering(cfg, &mut em),
            CommandName::Simulate => cmd_simulate(cfg, &mut em),
            CommandName::Fit => cmd_fit(cfg, &mut em),
            CommandName::Localize => cmd_localize(cfg, &mut em),
            CommandName::Decorate => cmd_decorate(cfg, &mut em),
            CommandName::Laplace => cmd_laplace(cfg, &mut em),
            CommandName::Martingale => cmd_martingale(cfg, &mut em),
            CommandName::Fkpp => cmd_fkpp(cfg, &mut em),
            CommandName::Oracle => {
                let target = oracle_target.ok_or_else(|| {
                    CliError::Validation(
                        "oracle needs a target: speed|bridge|transform|lfun|identity|quad".into(),
                    )
                })?;
                cmd_oracle(target, cfg, &mut em)
            }
        }
    })?;

    em.manifest.finish();
    let manifest_path = em.manifest.save(&dir)?;
    Ok(RunOutcome {
        manifest_path,
        stdout: em.stdout,
    })
}

fn star_or_nan(p: Params) -> [f64; 4] {
    match derived_constants(p).starred {
        Some(st) => [st.b_star, st.a_star, st.p_star, st.v_star],
        None => [f64::NAN; 4],
    }
}

fn cmd_classify(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let region = classify_with_tol(p, cfg.tol);
    let d = derived_constants(p);
    let [b_star, a_star, p_star, v_star] = star_or_nan(p);
    em.say(format!("{region}"));
    em.say(format!("v = {:.12}  theta = {:.12}", d.v, d.theta));
    if let Some(st) = d.starred {
        em.say(format!(
            "b* = {:.12}  a* = {:.12}  p* = {:.12}  v* = {:.12}",
            st.b_star, st.a_star, st.p_star, st.v_star
        ));
    }
    let schema = Schema::new(vec![
        Column::new("beta", "rate"),
        Column::new("sigma2", "diffusion"),
        Column::new("v", "speed"),
        Column::new("theta", "tilt"),
        Column::new("b_star", "speed"),
        Column::new("a_star", "speed"),
        Column::new("p_star", "fraction"),
        Column::new("v_star", "speed"),
    ]);
    em.csv(
        "constants",
        &[vec![
            p.beta, p.sigma2, d.v, d.theta, b_star, a_star, p_star, v_star,
        ]],
        &schema,
    )?;
    em.json(
        "summary",
        &json!({
            "region": region.to_string(),
            "beta": p.beta,
            "sigma2": p.sigma2,
            "v": d.v,
            "theta": d.theta,
            "b_star": b_star,
            "a_star": a_star,
            "p_star": p_star,
            "v_star": v_star,
        }),
    )
}

fn cmd_constants(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let d = derived_constants(p);
    let mut summary = json!({
        "beta": p.beta,
        "sigma2": p.sigma2,
        "v": d.v,
        "theta": d.theta,
    });
    if let Some(fam) = family_of(cfg)? {
        let c = fam.c_constant();
        let centering = fam.centering(cfg.t)?;
        em.say(format!("C({}, h = {}) = {:.12}", fam.family, fam.h, c));
        summary["family"] = json!(fam.family.to_string());
        summary["h"] = json!(fam.h);
        summary["c_constant"] = json!(c);
        summary["leading"] = json!(centering.leading);
        summary["log_coeff"] = json!(centering.log_coeff);
        let schema = Schema::new(vec![
            Column::new("h", "exponent"),
            Column::new("c_constant", "dimensionless"),
            Column::new("leading", "speed"),
            Column::new("log_coeff", "position_per_log_time"),
        ]);
        em.csv(
            "values",
            &[vec![fam.h, c, centering.leading, centering.log_coeff]],
            &schema,
        )?;
    } else {
        em.say(format!("v = {:.12}  theta = {:.12}", d.v, d.theta));
    }
    em.json("summary", &summary)
}

fn cmd_approx(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let fam = require_family(cfg)?;
    let schema = Schema::new(vec![
        Column::new("t", "time"),
        Column::new("beta_t", "rate"),
        Column::new("sigma2_t", "diffusion"),
        Column::new("constraint_residual", "dimensionless"),
    ]);
    let mut rows = Vec::new();
    let mut regions = Vec::new();
    for &t in &cfg.ts {
        let pt = fam.params_at(t)?;
        let eps = crate::phase_atlas::t_pow_neg_h(t, fam.h);
        let residual = match fam.family {
            Family::B13Plus | Family::P11F3 => 1.0 / pt.beta + 1.0 / pt.sigma2 - 2.0 - eps,
            Family::B13Minus | Family::P11F1 => 1.0 / pt.beta + 1.0 / pt.sigma2 - 2.0 + eps,
            Family::B23Plus => pt.beta + pt.sigma2 - 2.0 - eps,
            Family::B23Minus | Family::P11F2 => pt.beta + pt.sigma2 - 2.0 + eps,
        };
        regions.push(classify_with_tol(pt, cfg.tol).to_string());
        rows.push(vec![t, pt.beta, pt.sigma2, residual]);
        em.say(format!(
            "t = {t}: ({:.12}, {:.12}) residual {:.3e}",
            pt.beta, pt.sigma2, residual
        ));
    }
    em.csv("params", &rows, &schema)?;
    em.json(
        "summary",
        &json!({
            "family": fam.family.to_string(),
            "h": fam.h,
            "regions": regions,
        }),
    )
}

fn cmd_centering(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let fam = require_family(cfg)?;
    let schema = Schema::new(vec![
        Column::new("t", "time"),
        Column::new("leading", "speed"),
        Column::new("log_coeff", "position_per_log_time"),
        Column::new("m_t", "position"),
    ]);
    let mut rows = Vec::new();
    for &t in &cfg.ts {
        let c = fam.centering(t)?;
        rows.push(vec![t, c.leading, c.log_coeff, c.value(t)]);
        em.say(format!(
            "t = {t}: m(t) = {:.12} (l = {:.12}, s = {:.12})",
            c.value(t),
            c.leading,
            c.log_coeff
        ));
    }
    em.csv("values", &rows, &schema)?;
    em.json(
        "summary",
        &json!({ "family": fam.family.to_string(), "h": fam.h }),
    )
}

fn engine_config(cfg: &RunConfig) -> Result<EngineConfig, CliError> {
    let p = params_of(cfg)?;
    let mut engine = EngineConfig::new(p, cfg.t, cfg.seed)
        .map_err(|e| CliError::Validation(e.to_string()))?
        .with_retention(Retention::Summary)
        .with_max_population(cfg.max_population)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    if cfg.prune_depth > 0.0 {
        engine = engine
            .with_pruning(cfg.prune_depth)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    Ok(engine)
}

fn cmd_simulate(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let engine = engine_config(cfg)?;
    let two_type = cfg.mode == "two";
    let snaps = run_replications(&engine, two_type, cfg.reps);
    if snaps.iter().any(|s| !s.valid) {
        return Err(CliError::Runtime(format!(
            "{} replication(s) exceeded the particle-event budget",
            snaps.iter().filter(|s| !s.valid).count()
        )));
    }
    let schema = Schema::new(vec![
        Column::new("rep", "index"),
        Column::new("max", "position"),
        Column::new("count_type1", "particles"),
        Column::new("count_type2", "particles"),
        Column::new("transform_births", "particles"),
        Column::new("pruned_subtrees", "count"),
        Column::new("events", "count"),
    ]);
    let rows: Vec<Vec<f64>> = snaps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            vec![
                i as f64,
                s.max_position,
                s.count_type1 as f64,
                s.count_type2 as f64,
                s.transform_births as f64,
                s.pruned_subtrees as f64,
                s.events as f64,
            ]
        })
        .collect();
    em.csv("replications", &rows, &schema)?;
    let maxima: Vec<f64> = snaps.iter().map(|s| s.max_position).collect();
    let counts1: Vec<f64> = snaps.iter().map(|s| s.count_type1 as f64).collect();
    let births: Vec<f64> = snaps.iter().map(|s| s.transform_births as f64).collect();
    let (c1_mean, c1_se) = mean_and_se(&counts1);
    let (b_mean, b_se) = mean_and_se(&births);
    let mut sorted = maxima.clone();
    let med = median(&mut sorted);
    em.say(format!(
        "reps = {}  median max = {med:.6}  mean type-1 count = {c1_mean:.4} (se {c1_se:.4})",
        cfg.reps
    ));
    em.json(
        "summary",
        &json!({
            "mode": cfg.mode,
            "reps": cfg.reps,
            "median_max": med,
            "mean_count_type1": c1_mean,
            "se_count_type1": c1_se,
            "mean_transform_births": b_mean,
            "se_transform_births": b_se,
        }),
    )
}

fn cmd_fit(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let mut points = Vec::new();
    for (k, &t) in cfg.ts.iter().enumerate() {
        let engine = EngineConfig::new(p, t, cfg.seed.wrapping_add(k as u64))
            .map_err(|e| CliError::Validation(e.to_string()))?
            .with_retention(Retention::Summary);
        let snaps = run_replications(&engine, false, cfg.reps);
        let mut maxima: Vec<f64> = snaps.iter().map(|s| s.max_position).collect();
        points.push((t, median(&mut maxima)));
    }
    let fit = fit_log_correction(&points, cfg.pin_l)?;
    let schema = Schema::new(vec![
        Column::new("t", "time"),
        Column::new("median_max", "position"),
    ]);
    let rows: Vec<Vec<f64>> = points.iter().map(|&(t, m)| vec![t, m]).collect();
    em.csv("medians", &rows, &schema)?;
    em.say(format!(
        "fit: l = {:.6}, s = {:.6}, c = {:.6} (rms {:.3e})",
        fit.leading, fit.log_coeff, fit.offset, fit.residual_rms
    ));
    em.json(
        "summary",
        &json!({
            "leading": fit.leading,
            "log_coeff": fit.log_coeff,
            "offset": fit.offset,
            "residual_rms": fit.residual_rms,
            "pinned": cfg.pin_l,
            "reps": cfg.reps,
        }),
    )
}

fn cmd_localize(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let provenance = match family_of(cfg)? {
        Some(fam) => Provenance::Family(fam),
        None => Provenance::Plain(params_of(cfg)?),
    };
    let window_family = match provenance {
        Provenance::Family(fam) => fam.family,
        // interior anomalous points use the C_III-side window anchored at
        // their own (p*, a*)
        Provenance::Plain(_) => Family::B23Plus,
    };
    let pruning = (cfg.prune_depth > 0.0).then_some(cfg.prune_depth);
    // retain exactly the records localization reads: everything above m(t) − A
    let m_pre = match provenance {
        Provenance::Family(fam) => fam.centering(cfg.t)?.value(cfg.t),
        Provenance::Plain(p) => crate::phase_atlas::table_centering(p).value(cfg.t),
    };
    let ensemble = Ensemble::simulate(
        provenance,
        true,
        cfg.t,
        cfg.reps,
        cfg.seed,
        pruning,
        Retention::AboveLevel(m_pre - cfg.offset_a),
        cfg.max_population,
    )?;
    let m = ensemble.centering()?.value(cfg.t);
    let schema = Schema::new(vec![
        Column::new("r", "scale"),
        Column::new("fraction", "probability"),
    ]);
    let mut rows = Vec::new();
    for &r in &cfg.rs {
        let spec = WindowSpec::new(window_family, cfg.h, r)?;
        let fraction = localization_fraction(&ensemble, &spec, cfg.offset_a)?;
        em.say(format!("R = {r}: escape fraction {fraction:.4}"));
        rows.push(vec![r, fraction]);
    }
    em.csv("fractions", &rows, &schema)?;
    em.json(
        "summary",
        &json!({
            "window_family": window_family.to_string(),
            "h": cfg.h,
            "m_t": m,
            "offset_a": cfg.offset_a,
            "reps": cfg.reps,
            "prune_depth": cfg.prune_depth,
        }),
    )
}

fn cmd_decorate(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let stats = decoration_gaps(
        p,
        cfg.t,
        cfg.rho,
        cfg.budget,
        cfg.seed,
        cfg.a_keep,
        cfg.bins as usize,
    )?;
    let schema = Schema::new(vec![
        Column::new("bin_lo", "gap"),
        Column::new("bin_hi", "gap"),
        Column::new("count", "gaps"),
    ]);
    let rows: Vec<Vec<f64>> = stats
        .histogram
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            vec![
                i as f64 * stats.bin_width,
                (i + 1) as f64 * stats.bin_width,
                count as f64,
            ]
        })
        .collect();
    em.csv("gap_histogram", &rows, &schema)?;
    em.say(format!(
        "accepted {}/{} (rate {:.4}), mean points {:.3}{}",
        stats.accepted,
        stats.attempts,
        stats.acceptance_rate,
        stats.mean_points,
        if stats.low_confidence {
            "  [low confidence]"
        } else {
            ""
        }
    ));
    em.json(
        "summary",
        &json!({
            "accepted": stats.accepted,
            "attempts": stats.attempts,
            "acceptance_rate": stats.acceptance_rate,
            "mean_points": stats.mean_points,
            "low_confidence": stats.low_confidence,
            "rho": cfg.rho,
            "t": cfg.t,
        }),
    )
}

fn cmd_laplace(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let rows = laplace_shape(
        p, cfg.t, cfg.rho, &cfg.xs, cfg.phi_a, cfg.eps, cfg.reps, cfg.seed,
    )?;
    let schema = Schema::new(vec![
        Column::new("x", "position"),
        Column::new("phi", "probability"),
        Column::new("std_error", "probability"),
        Column::new("shape", "dimensionless"),
        Column::new("ratio", "dimensionless"),
    ]);
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.x, r.phi, r.std_error, r.shape, r.ratio])
        .collect();
    em.csv("table", &table, &schema)?;
    let confident: Vec<&crate::extreme_stats::LaplaceRow> =
        rows.iter().filter(|r| !r.low_confidence).collect();
    let spread = if confident.len() >= 2 {
        let max = confident.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = confident
            .iter()
            .map(|r| r.ratio)
            .fold(f64::INFINITY, f64::min);
        max / min
    } else {
        f64::NAN
    };
    em.say(format!(
        "ratio spread over {} confident rows: {spread:.3}",
        confident.len()
    ));
    em.json(
        "summary",
        &json!({
            "rho": cfg.rho,
            "t": cfg.t,
            "phi_a": cfg.phi_a,
            "reps": cfg.reps,
            "ratio_spread": spread,
            "confident_rows": confident.len(),
        }),
    )
}

fn cmd_martingale(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let engine =
        EngineConfig::new(p, cfg.t, cfg.seed).map_err(|e| CliError::Validation(e.to_string()))?;
    let snaps = run_replications(&engine, false, cfg.reps);
    let schema = Schema::new(vec![
        Column::new("lambda", "tilt"),
        Column::new("w_mean", "dimensionless"),
        Column::new("w_se", "dimensionless"),
    ]);
    let mut rows = Vec::new();
    for &lambda in &cfg.lambdas {
        let ws: Vec<f64> = snaps
            .iter()
            .map(|s| additive_w(s, lambda))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let (mean, se) = mean_and_se(&ws);
        em.say(format!("W({lambda}) mean = {mean:.6} (se {se:.6})"));
        rows.push(vec![lambda, mean, se]);
    }
    em.csv("additive", &rows, &schema)?;
    let zs: Vec<f64> = snaps
        .iter()
        .map(derivative_z)
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let (z_mean, z_se) = mean_and_se(&zs);
    let z_pos = zs.iter().filter(|&&z| z > 0.0).count() as f64 / zs.len() as f64;
    em.say(format!(
        "Z mean = {z_mean:.6} (se {z_se:.6}), P(Z > 0) = {z_pos:.4}"
    ));
    em.json(
        "summary",
        &json!({
            "t": cfg.t,
            "reps": cfg.reps,
            "z_mean": z_mean,
            "z_se": z_se,
            "p_z_positive": z_pos,
        }),
    )
}

fn cmd_fkpp(cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    let p = params_of(cfg)?;
    let mut pde = PdeConfig::auto(p, cfg.pde_t, cfg.dx);
    if cfg.residual {
        pde.store_profiles_from = cfg.window_s1;
    }
    let run = solve_coupled(&pde).map_err(|e| CliError::Runtime(e.to_string()))?;
    let schema = Schema::new(vec![
        Column::new("s", "time"),
        Column::new("front_u", "position"),
        Column::new("front_v", "position"),
        Column::new("mass_u", "field_integral"),
        Column::new("mass_v", "field_integral"),
    ]);
    let rows: Vec<Vec<f64>> = run
        .series
        .iter()
        .map(|s| {
            vec![
                s.time,
                s.front_u.unwrap_or(f64::NAN),
                s.front_v.unwrap_or(f64::NAN),
                s.mass_u,
                s.mass_v,
            ]
        })
        .collect();
    em.csv("fronts", &rows, &schema)?;
    // full-field dump of the final state
    let fields = Schema::new(vec![
        Column::new("x", "position"),
        Column::new("u", "probability"),
        Column::new("v", "probability"),
    ]);
    let state = &run.final_state;
    let field_rows: Vec<Vec<f64>> = (0..state.u.len())
        .map(|i| vec![state.x(i), state.u[i], state.v[i]])
        .collect();
    em.csv("final_fields", &field_rows, &fields)?;
    let speed_u = front_speed(&front_series(&run, Field::U), cfg.window_s1, cfg.window_s2)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let speed_v = front_speed(&front_series(&run, Field::V), cfg.window_s1, cfg.window_s2)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    em.say(format!(
        "u-front speed {speed_u:.6}, v-front speed {speed_v:.6} over [{}, {}]",
        cfg.window_s1, cfg.window_s2
    ));
    let mut summary = json!({
        "beta": p.beta,
        "sigma2": p.sigma2,
        "dx": cfg.dx,
        "speed_u": speed_u,
        "speed_v": speed_v,
    });
    if cfg.refine {
        let fine = PdeConfig::auto(p, cfg.pde_t, cfg.dx / 2.0);
        let fine_run = solve_coupled(&fine).map_err(|e| CliError::Runtime(e.to_string()))?;
        let fine_speed = front_speed(
            &front_series(&fine_run, Field::U),
            cfg.window_s1,
            cfg.window_s2,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        let change = ((speed_u - fine_speed) / fine_speed).abs();
        em.say(format!(
            "refinement dx -> dx/2 moves the u speed by {:.4}%",
            100.0 * change
        ));
        summary["speed_u_refined"] = json!(fine_speed);
        summary["refinement_rel_change"] = json!(change);
    }
    if cfg.residual {
        let res = traveling_wave_residual(&run, p, cfg.window_s1, cfg.window_s2, 15.0)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        em.say(format!(
            "traveling-wave residual: L2_u = {:.4e}, L2_v = {:.4e}",
            res.l2_u, res.l2_v
        ));
        summary["residual_l2_u"] = json!(res.l2_u);
        summary["residual_l2_v"] = json!(res.l2_v);
    }
    em.json("summary", &summary)
}

fn cmd_oracle(target: &str, cfg: &RunConfig, em: &mut Emitter) -> Result<(), CliError> {
    match target {
        "speed" => {
            let p = params_of(cfg)?;
            let sol = solve_speed_optimization(p, cfg.grid_n as usize)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            em.say(format!(
                "value = {:.6} at p = {:.4}, a = {:.4}, b = {:.4}",
                sol.value, sol.p, sol.a, sol.b
            ));
            let schema = Schema::new(vec![
                Column::new("p", "fraction"),
                Column::new("a", "speed"),
                Column::new("b", "speed"),
                Column::new("value", "speed"),
                Column::new("slack_early", "rate"),
                Column::new("slack_total", "rate"),
            ]);
            em.csv(
                "solution",
                &[vec![
                    sol.p,
                    sol.a,
                    sol.b,
                    sol.value,
                    sol.slack_early,
                    sol.slack_total,
                ]],
                &schema,
            )?;
            let closed = derived_constants(p)
                .starred
                .map(|st| st.v_star)
                .unwrap_or(f64::NAN);
            em.json(
                "summary",
                &json!({ "value": sol.value, "closed_form_v_star": closed }),
            )
        }
        "bridge" => {
            let closed = bridge_prob(cfg.x1, cfg.x2, cfg.t);
            let mc = bridge_prob_mc(cfg.x1, cfg.x2, cfg.t, cfg.bridge_steps, cfg.reps, cfg.seed);
            em.say(format!(
                "closed form {closed:.6}, MC {:.6} (se {:.6})",
                mc.estimate, mc.std_error
            ));
            em.json(
                "summary",
                &json!({
                    "x1": cfg.x1, "x2": cfg.x2, "t": cfg.t,
                    "closed": closed,
                    "mc": mc.estimate,
                    "std_error": mc.std_error,
                    "bridges": mc.bridges,
                    "steps": mc.steps,
                }),
            )
        }
        "transform" => {
            let p = params_of(cfg)?;
            let expected = expected_transform_count(p.beta, cfg.t);
            let engine = engine_config(cfg)?;
            let snaps = run_replications(&engine, true, cfg.reps);
            let births: Vec<f64> = snaps.iter().map(|s| s.transform_births as f64).collect();
            let (mean, se) = mean_and_se(&births);
            em.say(format!(
                "expected {expected:.6}, MC mean {mean:.6} (se {se:.6})"
            ));
            em.json(
                "summary",
                &json!({ "expected": expected, "mc_mean": mean, "se": se, "reps": cfg.reps }),
            )
        }
        "lfun" => {
            let fam = require_family(cfg)?;
            let schema = Schema::new(vec![
                Column::new("xi", "dimensionless"),
                Column::new("t", "time"),
                Column::new("l_value", "rate"),
                Column::new("limit_stated", "rate"),
                Column::new("limit_exact", "rate"),
                Column::new("residual_stated", "rate"),
                Column::new("residual_exact", "rate"),
            ]);
            let mut rows = Vec::new();
            for &xi in &cfg.xis {
                let table = l_limit_check(xi, &cfg.lfun_ts, &fam)
                    .map_err(|e| CliError::Validation(e.to_string()))?;
                for row in table {
                    rows.push(vec![
                        xi,
                        row.t,
                        row.l_value,
                        row.limit_stated,
                        row.limit_exact,
                        row.residual_stated,
                        row.residual_exact,
                    ]);
                }
            }
            em.csv("values", &rows, &schema)?;
            em.say(format!("{} rows across xi sweep", rows.len()));
            em.json(
                "summary",
                &json!({ "family": fam.family.to_string(), "h": fam.h }),
            )
        }
        "identity" => {
            let p = params_of(cfg)?;
            let (r1, r2) =
                identity_residuals(p).map_err(|e| CliError::Validation(e.to_string()))?;
            em.say(format!("residuals: {r1:.3e}, {r2:.3e}"));
            em.json("summary", &json!({ "residual_1": r1, "residual_2": r2 }))
        }
        "quad" => {
            let unit = try_integrate(|_| 1.0, 0.0, 1.0, cfg.quad_tol)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let exp_tail = try_integrate_to_inf(|x| (-x).exp(), 0.0, cfg.quad_tol)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let gauss = try_integrate_to_inf(|z| z * z * (-z * z / 2.0).exp(), 0.0, cfg.quad_tol)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            em.say(format!(
                "unit = {unit:.12}, exp tail = {exp_tail:.12}, Gaussian moment = {gauss:.12}"
            ));
            em.json(
                "summary",
                &json!({ "unit": unit, "exp_tail": exp_tail, "gaussian_second_moment": gauss }),
            )
        }
        other => Err(CliError::Validation(format!(
            "unknown oracle target {other:?} (expected speed|bridge|transform|lfun|identity|quad)"
        ))),
    }
}
