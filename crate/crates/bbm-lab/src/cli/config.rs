//! Flat `key = value` run configuration.
//!
//! The file format is UTF-8 text, one `key = value` pair per line, `#`
//! comments, blank lines ignored. Unknown keys are errors. Lists are
//! comma-separated. `h = inf` denotes the unperturbed family; `pin_l = none`
//! leaves the leading coefficient free. Values merge over built-in defaults,
//! and command-line flags merge over the file.

use std::collections::BTreeMap;

use crate::cli::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: f64,
    pub sigma2: f64,
    pub t: f64,
    pub reps: u64,
    pub seed: u64,
    pub threads: u64,
    pub out_dir: String,
    pub mode: String,
    pub family: Option<String>,
    pub h: f64,
    pub tol: f64,
    pub prune_depth: f64,
    pub max_population: u64,
    pub a_keep: f64,
    pub offset_a: f64,
    pub rs: Vec<f64>,
    pub rho: f64,
    pub budget: u64,
    pub xs: Vec<f64>,
    pub phi_a: f64,
    pub eps: f64,
    pub lambdas: Vec<f64>,
    pub ts: Vec<f64>,
    pub pin_l: Option<f64>,
    pub dx: f64,
    pub pde_t: f64,
    pub window_s1: f64,
    pub window_s2: f64,
    pub level: f64,
    pub refine: bool,
    pub residual: bool,
    pub quad_tol: f64,
    pub grid_n: u64,
    pub bridge_steps: u64,
    pub x1: f64,
    pub x2: f64,
    pub xis: Vec<f64>,
    pub lfun_ts: Vec<f64>,
    pub bins: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            beta: 1.0,
            sigma2: 1.0,
            t: 10.0,
            reps: 1000,
            seed: 42,
            threads: 0,
            out_dir: std::env::var("BBM_OUT_DIR").unwrap_or_else(|_| "out".to_string()),
            mode: "two".to_string(),
            family: None,
            h: f64::INFINITY,
            tol: 1e-12,
            prune_depth: 0.0,
            max_population: crate::engine::DEFAULT_MAX_POPULATION,
            a_keep: crate::extreme_stats::DEFAULT_A_KEEP,
            offset_a: 2.0,
            rs: vec![2.0, 4.0, 8.0],
            rho: 1.6,
            budget: 2000,
            xs: vec![-3.0, -2.0, -1.0, 0.0, 1.0],
            phi_a: 1.0,
            eps: 0.1,
            lambdas: vec![0.0, 0.5, 1.0],
            ts: vec![6.0, 8.0, 10.0, 12.0],
            pin_l: None,
            dx: 0.1,
            pde_t: 60.0,
            window_s1: 30.0,
            window_s2: 60.0,
            level: 0.5,
            refine: false,
            residual: false,
            quad_tol: 1e-10,
            grid_n: 100,
            bridge_steps: 512,
            x1: 1.0,
            x2: 1.0,
            xis: vec![0.5, 1.0, 2.0],
            lfun_ts: vec![1e4, 1e6, 1e8],
            bins: 16,
        }
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, CliError> {
    let v = value.trim();
    if v.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    v.parse::<f64>().map_err(|_| {
        CliError::Validation(format!(
            "line {line}: key '{key}' expects a number, got {value:?}"
        ))
    })
}

fn parse_u64(key: &str, value: &str, line: usize) -> Result<u64, CliError> {
    value.trim().parse::<u64>().map_err(|_| {
        CliError::Validation(format!(
            "line {line}: key '{key}' expects a nonnegative integer, got {value:?}"
        ))
    })
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::Validation(format!(
            "line {line}: key '{key}' expects true/false, got {other:?}"
        ))),
    }
}

fn parse_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|piece| parse_f64(key, piece, line))
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` assignment (line number for error messages).
    pub fn apply(&mut self, key: &str, value: &str, line: usize) -> Result<(), CliError> {
        match key {
            "beta" => self.beta = parse_f64(key, value, line)?,
            "sigma2" => self.sigma2 = parse_f64(key, value, line)?,
            "t" => self.t = parse_f64(key, value, line)?,
            "reps" => self.reps = parse_u64(key, value, line)?,
            "seed" => self.seed = parse_u64(key, value, line)?,
            "threads" => self.threads = parse_u64(key, value, line)?,
            "out_dir" => self.out_dir = value.trim().to_string(),
            "mode" => {
                let v = value.trim();
                if v != "single" && v != "two" {
                    return Err(CliError::Validation(format!(
                        "line {line}: mode must be 'single' or 'two', got {v:?}"
                    )));
                }
                self.mode = v.to_string();
            }
            "family" => {
                let v = value.trim();
                self.family = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(v.to_string())
                };
            }
            "h" => self.h = parse_f64(key, value, line)?,
            "tol" => self.tol = parse_f64(key, value, line)?,
            "prune_depth" => self.prune_depth = parse_f64(key, value, line)?,
            "max_population" => self.max_population = parse_u64(key, value, line)?,
            "a_keep" => self.a_keep = parse_f64(key, value, line)?,
            "offset_a" => self.offset_a = parse_f64(key, value, line)?,
            "rs" => self.rs = parse_list(key, value, line)?,
            "rho" => self.rho = parse_f64(key, value, line)?,
            "budget" => self.budget = parse_u64(key, value, line)?,
            "xs" => self.xs = parse_list(key, value, line)?,
            "phi_a" => self.phi_a = parse_f64(key, value, line)?,
            "eps" => self.eps = parse_f64(key, value, line)?,
            "lambdas" => self.lambdas = parse_list(key, value, line)?,
            "ts" => self.ts = parse_list(key, value, line)?,
            "pin_l" => {
                let v = value.trim();
                self.pin_l = if v == "none" {
                    None
                } else {
                    Some(parse_f64(key, value, line)?)
                };
            }
            "dx" => self.dx = parse_f64(key, value, line)?,
            "pde_t" => self.pde_t = parse_f64(key, value, line)?,
            "window_s1" => self.window_s1 = parse_f64(key, value, line)?,
            "window_s2" => self.window_s2 = parse_f64(key, value, line)?,
            "level" => self.level = parse_f64(key, value, line)?,
            "refine" => self.refine = parse_bool(key, value, line)?,
            "residual" => self.residual = parse_bool(key, value, line)?,
            "quad_tol" => self.quad_tol = parse_f64(key, value, line)?,
            "grid_n" => self.grid_n = parse_u64(key, value, line)?,
            "bridge_steps" => self.bridge_steps = parse_u64(key, value, line)?,
            "x1" => self.x1 = parse_f64(key, value, line)?,
            "x2" => self.x2 = parse_f64(key, value, line)?,
            "xis" => self.xis = parse_list(key, value, line)?,
            "lfun_ts" => self.lfun_ts = parse_list(key, value, line)?,
            "bins" => self.bins = parse_u64(key, value, line)?,
            other => {
                return Err(CliError::Validation(format!(
                    "line {line}: unknown key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Parses a config document over the current values.
    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "line {line}: expected 'key = value', got {content:?}"
                )));
            };
            self.apply(key.trim(), value, line)?;
        }
        Ok(())
    }

    /// Fully resolved key-value view, recorded in the run manifest.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        let list = |v: &Vec<f64>| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut m = BTreeMap::new();
        m.insert("beta".into(), format!("{}", self.beta));
        m.insert("sigma2".into(), format!("{}", self.sigma2));
        m.insert("t".into(), format!("{}", self.t));
        m.insert("reps".into(), format!("{}", self.reps));
        m.insert("seed".into(), format!("{}", self.seed));
        m.insert("threads".into(), format!("{}", self.threads));
        m.insert("out_dir".into(), self.out_dir.clone());
        m.insert("mode".into(), self.mode.clone());
        m.insert(
            "family".into(),
            self.family.clone().unwrap_or_else(|| "none".into()),
        );
        m.insert("h".into(), format!("{}", self.h));
        m.insert("tol".into(), format!("{}", self.tol));
        m.insert("prune_depth".into(), format!("{}", self.prune_depth));
        m.insert("max_population".into(), format!("{}", self.max_population));
        m.insert("a_keep".into(), format!("{}", self.a_keep));
        m.insert("offset_a".into(), format!("{}", self.offset_a));
        m.insert("rs".into(), list(&self.rs));
        m.insert("rho".into(), format!("{}", self.rho));
        m.insert("budget".into(), format!("{}", self.budget));
        m.insert("xs".into(), list(&self.xs));
        m.insert("phi_a".into(), format!("{}", self.phi_a));
        m.insert("eps".into(), format!("{}", self.eps));
        m.insert("lambdas".into(), list(&self.lambdas));
        m.insert("ts".into(), list(&self.ts));
        m.insert(
            "pin_l".into(),
            self.pin_l.map_or("none".into(), |v| format!("{v}")),
        );
        m.insert("dx".into(), format!("{}", self.dx));
        m.insert("pde_t".into(), format!("{}", self.pde_t));
        m.insert("window_s1".into(), format!("{}", self.window_s1));
        m.insert("window_s2".into(), format!("{}", self.window_s2));
        m.insert("level".into(), format!("{}", self.level));
        m.insert("refine".into(), format!("{}", self.refine));
        m.insert("residual".into(), format!("{}", self.residual));
        m.insert("quad_tol".into(), format!("{}", self.quad_tol));
        m.insert("grid_n".into(), format!("{}", self.grid_n));
        m.insert("bridge_steps".into(), format!("{}", self.bridge_steps));
        m.insert("x1".into(), format!("{}", self.x1));
        m.insert("x2".into(), format!("{}", self.x2));
        m.insert("xis".into(), list(&self.xis));
        m.insert("lfun_ts".into(), list(&self.lfun_ts));
        m.insert("bins".into(), format!("{}", self.bins));
        m
    }
}
