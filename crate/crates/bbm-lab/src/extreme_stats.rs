//! Estimators over snapshot ensembles: maximum quantiles, log-correction
//! fits, localization-window checks, decoration-gap statistics and
//! Laplace-functional shape verification.
//!
//! A localization window `Ω^R_{t,h}` is the space-time region in which the
//! transform points `(T_u, X_u(T_u))` of extremal type-2 particles
//! concentrate; each approximation family carries its own window geometry,
//! nested in the scale parameter `R`. The windows are proof devices with no
//! canonical `R`, so `R` is exposed as a sweep parameter throughout.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    run_replications, EngineConfig, ParticleRecord, ParticleType, Retention, Snapshot,
    SnapshotSummary,
};
use crate::phase_atlas::{
    starred_constants, table_centering, ApproxFamily, Centering, Family, Params, PhaseError,
};
use std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("ensemble is empty")]
    EmptyEnsemble,
    #[error("quantile {0} outside (0, 1)")]
    BadQuantile(f64),
    #[error("need at least 3 distinct horizons (got {0})")]
    TooFewPoints(usize),
    #[error("design is rank-deficient: horizons too close")]
    RankDeficient,
    #[error("window scale R must exceed 1 (got {0})")]
    BadWindowScale(f64),
    #[error("window family {window} does not match ensemble family {ensemble}")]
    WindowFamilyMismatch { window: Family, ensemble: Family },
    #[error(
        "extremal retention too shallow in replication {rep}: records reach {reach} but the \
         membership threshold is {threshold}; retain deeper records"
    )]
    InsufficientRetention {
        rep: usize,
        reach: f64,
        threshold: f64,
    },
    #[error("x = {x} outside the validity strip for rho = {rho} at t = {t}")]
    StripViolation { x: f64, rho: f64, t: f64 },
    #[error("rho must be at least sqrt(2) (got {0})")]
    BadRho(f64),
    #[error("replication budget must be positive")]
    EmptyBudget,
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

/// Where an ensemble's parameters came from: an approximation family at its
/// horizon, or a plain parameter pair (a "surrogate" for interior points).
#[derive(Debug, Clone, Copy)]
pub enum Provenance {
    Family(ApproxFamily),
    Plain(Params),
}

/// A set of replications sharing `(params, horizon)`, with per-replication
/// summaries and the extremal records the retention policy kept (within a
/// depth of the maximum, or above an absolute floor).
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub provenance: Provenance,
    pub horizon: f64,
    /// Parameters the engine actually ran (perturbed for family provenance).
    pub params_t: Params,
    pub summaries: Vec<SnapshotSummary>,
    pub records: Vec<Vec<ParticleRecord>>,
    pub retention: Retention,
}

/// Default extremal record retention depth.
pub const DEFAULT_A_KEEP: f64 = 8.0;

impl Ensemble {
    /// Simulates `reps` replications and retains extremal records under the
    /// given policy (`WithinOfMax` depth or `AboveLevel` floor).
    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        provenance: Provenance,
        two_type: bool,
        horizon: f64,
        reps: u64,
        seed: u64,
        pruning: Option<f64>,
        retention: Retention,
        max_population: u64,
    ) -> Result<Ensemble, StatsError> {
        if reps == 0 {
            return Err(StatsError::EmptyBudget);
        }
        let params_t = match provenance {
            Provenance::Family(fam) => fam.params_at(horizon)?,
            Provenance::Plain(p) => p,
        };
        let mut cfg = EngineConfig::new(params_t, horizon, seed)
            .expect("validated horizon")
            .with_retention(retention)
            .with_max_population(max_population)
            .expect("positive cap");
        if let Some(depth) = pruning {
            cfg = cfg.with_pruning(depth).expect("positive depth");
        }
        let snaps = run_replications(&cfg, two_type, reps);
        Ok(Ensemble {
            provenance,
            horizon,
            params_t,
            summaries: snaps.iter().map(Snapshot::summary).collect(),
            records: snaps.into_iter().map(|s| s.particles).collect(),
            retention,
        })
    }

    /// Builds an ensemble from externally supplied members (synthetic data or
    /// deserialized snapshots).
    pub fn from_parts(
        provenance: Provenance,
        horizon: f64,
        params_t: Params,
        summaries: Vec<SnapshotSummary>,
        records: Vec<Vec<ParticleRecord>>,
        retention: Retention,
    ) -> Result<Ensemble, StatsError> {
        if summaries.is_empty() || summaries.len() != records.len() {
            return Err(StatsError::EmptyEnsemble);
        }
        Ok(Ensemble {
            provenance,
            horizon,
            params_t,
            summaries,
            records,
            retention,
        })
    }

    /// The centering `m(t)` for this ensemble: the family formula at the
    /// horizon, or the phase-table entry for plain parameters.
    pub fn centering(&self) -> Result<Centering, StatsError> {
        Ok(match self.provenance {
            Provenance::Family(fam) => fam.centering(self.horizon)?,
            Provenance::Plain(p) => table_centering(p),
        })
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.summaries.iter().map(|s| s.max).collect()
    }
}

/// Empirical quantiles of the per-replication maximum, by order statistic
/// (index `ceil(q·n)` in 1-based terms).
pub fn max_quantiles(e: &Ensemble, qs: &[f64]) -> Result<Vec<f64>, StatsError> {
    if e.summaries.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    for &q in qs {
        if !(q > 0.0 && q < 1.0) {
            return Err(StatsError::BadQuantile(q));
        }
    }
    let mut maxima = e.maxima();
    maxima.sort_by(f64::total_cmp);
    let n = maxima.len() as f64;
    Ok(qs
        .iter()
        .map(|&q| maxima[((q * n).ceil() as usize).max(1) - 1])
        .collect())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogFit {
    pub leading: f64,
    pub log_coeff: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

/// Least-squares fit of `median ≈ l·t − s·log t + c`, optionally with `l`
/// pinned to a theoretical speed.
pub fn fit_log_correction(points: &[(f64, f64)], pin_l: Option<f64>) -> Result<LogFit, StatsError> {
    let mut ts: Vec<f64> = points.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if ts.len() < 3 {
        return Err(StatsError::TooFewPoints(ts.len()));
    }

    let (l, s, c) = if let Some(l) = pin_l {
        // regress y − l·t on [−ln t, 1]
        let mut a = [[0.0f64; 2]; 2];
        let mut b = [0.0f64; 2];
        for &(t, y) in points {
            let row = [-t.ln(), 1.0];
            let resid = y - l * t;
            for i in 0..2 {
                for j in 0..2 {
                    a[i][j] += row[i] * row[j];
                }
                b[i] += row[i] * resid;
            }
        }
        let sol = solve2(a, b).ok_or(StatsError::RankDeficient)?;
        (l, sol[0], sol[1])
    } else {
        let mut a = [[0.0f64; 3]; 3];
        let mut b = [0.0f64; 3];
        for &(t, y) in points {
            let row = [t, -t.ln(), 1.0];
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] += row[i] * row[j];
                }
                b[i] += row[i] * y;
            }
        }
        let sol = solve3(a, b).ok_or(StatsError::RankDeficient)?;
        (sol[0], sol[1], sol[2])
    };

    let mse = points
        .iter()
        .map(|&(t, y)| (y - (l * t - s * t.ln() + c)).powi(2))
        .sum::<f64>()
        / points.len() as f64;
    Ok(LogFit {
        leading: l,
        log_coeff: s,
        offset: c,
        residual_rms: mse.sqrt(),
    })
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(1e-300);
    if det.abs() < 1e-12 * scale * scale {
        return None;
    }
    Some([
        (b[0] * a[1][1] - b[1] * a[0][1]) / det,
        (a[0][0] * b[1] - a[1][0] * b[0]) / det,
    ])
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Which localization-window geometry applies, with its scale `R > 1`. The
/// family tag and `h` select the window shape; the anchor quantities come
/// from the parameters the window is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSpec {
    pub family: Family,
    pub h: f64,
    pub r: f64,
}

impl WindowSpec {
    pub fn new(family: Family, h: f64, r: f64) -> Result<Self, StatsError> {
        if !(r > 1.0) {
            return Err(StatsError::BadWindowScale(r));
        }
        Ok(Self { family, h, r })
    }
}

/// A window instantiated at concrete parameters and horizon.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    spec: WindowSpec,
    t: f64,
    v_t: f64,
    theta_t: f64,
    sigma2_t: f64,
    a_t: f64,
    b_t: f64,
    p_t: f64,
}

impl Window {
    pub fn for_params(
        spec: WindowSpec,
        params_t: Params,
        horizon: f64,
    ) -> Result<Self, StatsError> {
        let needs_star = matches!(
            spec.family,
            Family::B13Plus | Family::B23Plus | Family::P11F3
        );
        let (a_t, b_t, p_t) = if needs_star {
            let st = starred_constants(params_t)?;
            (st.a_star, st.b_star, st.p_star)
        } else {
            (0.0, 0.0, 0.0)
        };
        Ok(Window {
            spec,
            t: horizon,
            v_t: params_t.speed(),
            theta_t: params_t.tilt(),
            sigma2_t: params_t.sigma2,
            a_t,
            b_t,
            p_t,
        })
    }

    /// Membership of the transform point `(s, x)`; interval bounds inclusive.
    pub fn contains(&self, s: f64, x: f64) -> bool {
        let (t, h, r) = (self.t, self.spec.h, self.spec.r);
        let in_band = |value: f64, lo: f64, hi: f64| value >= lo && value <= hi;
        match self.spec.family {
            // t−s ∈ [t^{h'}/R, R t^{h'}],  |x − v_t s + (θ_t−v_t)(t−s)| ≤ R√(t−s)
            Family::B13Minus => {
                let hp = h.min(0.5);
                let delta = x - self.v_t * s + (self.theta_t - self.v_t) * (t - s);
                in_band(t - s, t.powf(hp) / r, r * t.powf(hp))
                    && delta.abs() <= r * (t - s).max(0.0).sqrt()
            }
            // h<1: t−s ∈ [t^h/R, Rt^h], v_t s − x ∈ [√(t−s)/R, R√(t−s)]
            // h≥1: t−s ∈ [t/R, (1−1/R)t], v_t s − x ∈ [√t/R, R√t]
            Family::P11F1 => {
                let depth = self.v_t * s - x;
                if h < 1.0 {
                    let w = (t - s).max(0.0).sqrt();
                    in_band(t - s, t.powf(h) / r, r * t.powf(h)) && in_band(depth, w / r, r * w)
                } else {
                    in_band(t - s, t / r, (1.0 - 1.0 / r) * t)
                        && in_band(depth, t.sqrt() / r, r * t.sqrt())
                }
            }
            // h<1/2: |s − p_t t| ≤ R√t, |x − a_t s| ≤ R√s
            // h≥1/2: s ∈ [√t/R, R√t],  |x − a_t s| ≤ R√s
            Family::B23Plus => {
                let spatial = (x - self.a_t * s).abs() <= r * s.max(0.0).sqrt();
                if h < 0.5 {
                    (s - self.p_t * t).abs() <= r * t.sqrt() && spatial
                } else {
                    in_band(s, t.sqrt() / r, r * t.sqrt()) && spatial
                }
            }
            // h<1: |s − t/2| ≤ R t^{(1+h)/2}, |x − a_t s| ≤ R√s
            // h≥1: s ∈ [t/R, (1−1/R)t], √2 s − x ∈ [√t/R, R√t]
            Family::P11F3 => {
                if h < 1.0 {
                    (s - t / 2.0).abs() <= r * t.powf((1.0 + h) / 2.0)
                        && (x - self.a_t * s).abs() <= r * s.max(0.0).sqrt()
                } else {
                    in_band(s, t / r, (1.0 - 1.0 / r) * t)
                        && in_band(SQRT_2 * s - x, t.sqrt() / r, r * t.sqrt())
                }
            }
            // δ = x − a_t s + (b_t−a_t)(p_t t − s)
            // h<1/2: |s − p_t t| ≤ R√t, |δ| ≤ R√(t−s)
            // h≥1/2: t−s ∈ [√t/R, R√t], |δ| ≤ R√(t−s)
            Family::B13Plus => {
                let delta = x - self.a_t * s + (self.b_t - self.a_t) * (self.p_t * t - s);
                let spatial = delta.abs() <= r * (t - s).max(0.0).sqrt();
                if h < 0.5 {
                    (s - self.p_t * t).abs() <= r * t.sqrt() && spatial
                } else {
                    in_band(t - s, t.sqrt() / r, r * t.sqrt()) && spatial
                }
            }
            // s ∈ [t^{h'}/R, R t^{h'}], |x − √2 σ_t² s| ≤ R√s
            Family::B23Minus => {
                let hp = h.min(0.5);
                in_band(s, t.powf(hp) / r, r * t.powf(hp))
                    && (x - SQRT_2 * self.sigma2_t * s).abs() <= r * s.max(0.0).sqrt()
            }
            // h<1: s ∈ [t^h/R, Rt^h], √2 σ_t² s − x ∈ [√s/R, R√s]
            // h≥1: s ∈ [t/R, (1−1/R)t], same spatial band
            Family::P11F2 => {
                let depth = SQRT_2 * self.sigma2_t * s - x;
                let w = s.max(0.0).sqrt();
                let time_ok = if h < 1.0 {
                    in_band(s, t.powf(h) / r, r * t.powf(h))
                } else {
                    in_band(s, t / r, (1.0 - 1.0 / r) * t)
                };
                time_ok && in_band(depth, w / r, r * w)
            }
        }
    }
}

/// Fraction of replications containing a type-2 particle above `m(t) − A`
/// whose transform point falls outside the window.
pub fn localization_fraction(
    e: &Ensemble,
    spec: &WindowSpec,
    a_offset: f64,
) -> Result<f64, StatsError> {
    if e.summaries.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    if let Provenance::Family(fam) = e.provenance {
        if fam.family != spec.family {
            return Err(StatsError::WindowFamilyMismatch {
                window: spec.family,
                ensemble: fam.family,
            });
        }
    }
    let window = Window::for_params(*spec, e.params_t, e.horizon)?;
    let threshold = e.centering()?.value(e.horizon) - a_offset;
    let mut bad = 0usize;
    for (rep, (summary, records)) in e.summaries.iter().zip(&e.records).enumerate() {
        // the records must be complete at and above the threshold
        let reach = match e.retention {
            Retention::Full => f64::NEG_INFINITY,
            Retention::WithinOfMax(depth) => summary.max - depth,
            Retention::AboveLevel(floor) => floor,
            Retention::Summary => f64::INFINITY,
        };
        if reach > threshold {
            return Err(StatsError::InsufficientRetention {
                rep,
                reach,
                threshold,
            });
        }
        let escaped = records.iter().any(|p| {
            p.kind == ParticleType::Two
                && p.position >= threshold
                && !window.contains(p.transform_time, p.transform_position)
        });
        if escaped {
            bad += 1;
        }
    }
    Ok(bad as f64 / e.summaries.len() as f64)
}

/// Positions relative to the maximum within `[−window, 0]`, sorted
/// descending (the maximum itself first, at 0). Invariant under global
/// translation of the records.
pub fn relative_extremes(records: &[ParticleRecord], max: f64, window: f64) -> Vec<f64> {
    let mut rel: Vec<f64> = records
        .iter()
        .map(|p| p.position - max)
        .filter(|&d| d >= -window && d <= 0.0)
        .collect();
    rel.sort_by(|a, b| b.total_cmp(a));
    rel
}

#[derive(Debug, Clone, Serialize)]
pub struct GapStats {
    pub attempts: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Mean number of points per accepted sample within the window.
    pub mean_points: f64,
    /// Pooled gaps between consecutive ordered points, all accepted samples.
    pub gaps: Vec<f64>,
    /// Gap between the maximum and the runner-up, one entry per accepted
    /// sample with at least two points in the window.
    pub leading_gaps: Vec<f64>,
    /// Gap histogram over [0, window] with `histogram.len()` uniform bins.
    pub histogram: Vec<u64>,
    pub bin_width: f64,
    /// Set when fewer than 10 samples were accepted.
    pub low_confidence: bool,
}

/// Rejection-sampled decoration statistics: simulate single-type BBM, keep
/// snapshots with `M_t ≥ ρt`, record the population seen from the maximum
/// within `[−window, 0]`.
#[allow(clippy::too_many_arguments)]
pub fn decoration_gaps(
    params: Params,
    horizon: f64,
    rho: f64,
    budget: u64,
    seed: u64,
    window: f64,
    bins: usize,
) -> Result<GapStats, StatsError> {
    if rho < SQRT_2 - 1e-12 {
        return Err(StatsError::BadRho(rho));
    }
    if budget == 0 {
        return Err(StatsError::EmptyBudget);
    }
    let cfg = EngineConfig::new(params, horizon, seed)
        .expect("valid horizon")
        .with_retention(Retention::WithinOfMax(window));
    let snaps = run_replications(&cfg, false, budget);
    let cutoff = rho * horizon;
    let mut accepted = 0u64;
    let mut points_total = 0u64;
    let mut gaps = Vec::new();
    let mut leading_gaps = Vec::new();
    let mut histogram = vec![0u64; bins.max(1)];
    let bin_width = window / bins.max(1) as f64;
    for snap in &snaps {
        if snap.max_position < cutoff {
            continue;
        }
        accepted += 1;
        let rel = relative_extremes(&snap.particles, snap.max_position, window);
        points_total += rel.len() as u64;
        for (k, pair) in rel.windows(2).enumerate() {
            let gap = pair[0] - pair[1];
            if k == 0 {
                leading_gaps.push(gap);
            }
            gaps.push(gap);
            let idx = ((gap / bin_width) as usize).min(histogram.len() - 1);
            histogram[idx] += 1;
        }
    }
    Ok(GapStats {
        attempts: budget,
        accepted,
        acceptance_rate: accepted as f64 / budget as f64,
        mean_points: if accepted == 0 {
            0.0
        } else {
            points_total as f64 / accepted as f64
        },
        gaps,
        leading_gaps,
        histogram,
        bin_width,
        low_confidence: accepted < 10,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaplaceRow {
    pub x: f64,
    /// Monte Carlo estimate of `Φ_ρ(t, x) = 1 − E e^{−Σ_u φ(x + X_u(t) − ρt)}`.
    pub phi: f64,
    pub std_error: f64,
    /// The x-dependent shape factor the estimate is divided by.
    pub shape: f64,
    pub ratio: f64,
    pub rel_se: f64,
    /// Set when the relative standard error exceeds 50%.
    pub low_confidence: bool,
}

/// The x-dependent factor of the Laplace-functional asymptotics:
/// `(−x)/t^{3/2} · e^{√2 x − x²/2t}` at the critical `ρ = √2`, and
/// `e^{(1−ρ²/2)t}/√t · e^{ρx − x²/2t}` for `ρ > √2`. The decoration-dependent
/// prefactor `γ_ρ(φ)` has no computable closed form and cancels in
/// x-flatness checks of the ratio.
pub fn laplace_shape_factor(rho: f64, t: f64, x: f64) -> f64 {
    if (rho - SQRT_2).abs() <= 1e-9 {
        (-x) / t.powf(1.5) * (SQRT_2 * x - x * x / (2.0 * t)).exp()
    } else {
        ((1.0 - rho * rho / 2.0) * t).exp() / t.sqrt() * (rho * x - x * x / (2.0 * t)).exp()
    }
}

/// Monte Carlo table of `Φ_ρ(t, x)` over an `x` grid with the step test
/// function `φ(y) = 1_{y ≥ −a}` (the simplest admissible test function; set
/// `a = −∞` for `φ ≡ 0`).
#[allow(clippy::too_many_arguments)]
pub fn laplace_shape(
    params: Params,
    horizon: f64,
    rho: f64,
    xs: &[f64],
    a: f64,
    eps: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<LaplaceRow>, StatsError> {
    if rho < SQRT_2 - 1e-12 {
        return Err(StatsError::BadRho(rho));
    }
    if reps == 0 {
        return Err(StatsError::EmptyBudget);
    }
    if horizon > 0.0 {
        for &x in xs {
            let ok = if (rho - SQRT_2).abs() <= 1e-9 {
                x <= -horizon.powf(eps) && x >= -horizon.powf(1.0 - eps)
            } else {
                x.abs() <= horizon.powf(1.0 - eps)
            };
            if !ok {
                return Err(StatsError::StripViolation { x, rho, t: horizon });
            }
        }
    }
    // φ counts particles at or above ρt − x − a; retain down to the loosest cutoff
    let floor = xs
        .iter()
        .map(|&x| rho * horizon - x - a)
        .fold(f64::INFINITY, f64::min);
    let cfg = EngineConfig::new(params, horizon, seed)
        .expect("valid horizon")
        .with_retention(Retention::AboveLevel(floor));
    let snaps = run_replications(&cfg, false, reps);
    let rows: Vec<LaplaceRow> = xs
        .par_iter()
        .map(|&x| {
            let cutoff = rho * horizon - x - a;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for snap in &snaps {
                let count = snap
                    .particles
                    .iter()
                    .filter(|p| p.position >= cutoff)
                    .count();
                let value = -(-(count as f64)).exp_m1();
                sum += value;
                sum_sq += value * value;
            }
            let n = reps as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            let se = (var / n).sqrt();
            let shape = laplace_shape_factor(rho, horizon, x);
            let rel_se = if mean > 0.0 { se / mean } else { f64::INFINITY };
            LaplaceRow {
                x,
                phi: mean,
                std_error: se,
                shape,
                ratio: mean / shape,
                rel_se,
                low_confidence: rel_se > 0.5,
            }
        })
        .collect();
    Ok(rows)
}
