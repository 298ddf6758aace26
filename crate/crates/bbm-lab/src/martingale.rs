//! Single-type BBM functionals: additive and derivative martingales and the
//! Gibbs-measure CLT functionals, with exact quadrature companions.
//!
//! ```text
//!   W_t(λ) = Σ_u exp{λ X_u(t) − (β + λ²σ²/2) t}          (unit mean)
//!   Z_t    = Σ_u [v t − X_u(t)] exp{θ X_u(t) − 2β t}      (zero mean)
//! ```
//!
//! The Gibbs functionals weight particles by a profile `F_t(z) = G((z−r_t)/h_t)`
//! of the rescaled depth `z = (λt − X_u(t))/√t` and converge, after
//! normalization by `⟨F_t, μ⟩`, to the martingale limits `W_∞(λ)` (Gaussian
//! reference measure, subcritical tilt) or `Z_∞` (measure `z e^{−z²/2} dz` on
//! `z > 0`, critical tilt). Profiles are piecewise-linear tables with exact
//! breakpoints so the reference integrals are closed-form, keeping quadrature
//! error out of the ratio checks.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use thiserror::Error;

use crate::engine::{Retention, Snapshot};

#[derive(Debug, Error, PartialEq)]
pub enum MartingaleError {
    #[error("snapshot contains type-2 particles; martingale functionals are single-type")]
    NotSingleType,
    #[error("snapshot must retain all particles (retention {0:?})")]
    NeedsFullRetention(Retention),
    #[error("Gibbs functionals require the standard parameters beta = sigma2 = 1 (got beta={beta}, sigma2={sigma2})")]
    NotStandard { beta: f64, sigma2: f64 },
    #[error("Gibbs functionals require a positive horizon")]
    ZeroHorizon,
    #[error("profile scale h_t must be nonzero")]
    ZeroScale,
    #[error("piecewise-linear profile is invalid: {0}")]
    BadProfile(String),
}

fn check_single_full(s: &Snapshot) -> Result<(), MartingaleError> {
    if s.count_type2 > 0 {
        return Err(MartingaleError::NotSingleType);
    }
    if s.retention != Retention::Full {
        return Err(MartingaleError::NeedsFullRetention(s.retention));
    }
    Ok(())
}

/// Additive martingale `W_t(λ)`; exact sum over the snapshot.
pub fn additive_w(s: &Snapshot, lambda: f64) -> Result<f64, MartingaleError> {
    check_single_full(s)?;
    let rate = s.params.beta + lambda * lambda * s.params.sigma2 / 2.0;
    Ok(s.particles
        .iter()
        .map(|p| (lambda * p.position - rate * s.horizon).exp())
        .sum())
}

/// Derivative martingale `Z_t`; exact sum over the snapshot.
pub fn derivative_z(s: &Snapshot) -> Result<f64, MartingaleError> {
    check_single_full(s)?;
    let v = s.params.speed();
    let theta = s.params.tilt();
    let rate = 2.0 * s.params.beta;
    Ok(s.particles
        .iter()
        .map(|p| (v * s.horizon - p.position) * (theta * p.position - rate * s.horizon).exp())
        .sum())
}

/// One linear piece on `[x0, x1)`; the profile is zero off its segments.
/// Jumps (indicators) are represented by segment endpoints with unequal
/// values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// A bounded compact-support piecewise-linear profile `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    segments: Vec<Segment>,
}

impl PiecewiseLinear {
    pub fn new(segments: Vec<Segment>) -> Result<Self, MartingaleError> {
        for w in segments.windows(2) {
            if w[0].x1 > w[1].x0 {
                return Err(MartingaleError::BadProfile(format!(
                    "segments overlap at x = {}",
                    w[1].x0
                )));
            }
        }
        for s in &segments {
            if !(s.x0 < s.x1) || !s.y0.is_finite() || !s.y1.is_finite() {
                return Err(MartingaleError::BadProfile(format!("bad segment {s:?}")));
            }
        }
        Ok(Self { segments })
    }

    /// Indicator `1_{[a, b)}`.
    pub fn indicator(a: f64, b: f64) -> Self {
        Self {
            segments: vec![Segment {
                x0: a,
                x1: b,
                y0: 1.0,
                y1: 1.0,
            }],
        }
    }

    /// Continuous table through the given `(x, y)` breakpoints.
    pub fn from_table(points: &[(f64, f64)]) -> Result<Self, MartingaleError> {
        if points.len() < 2 {
            return Err(MartingaleError::BadProfile(
                "need at least two breakpoints".into(),
            ));
        }
        let segments = points
            .windows(2)
            .map(|w| Segment {
                x0: w[0].0,
                x1: w[1].0,
                y0: w[0].1,
                y1: w[1].1,
            })
            .collect();
        Self::new(segments)
    }

    pub fn eval(&self, x: f64) -> f64 {
        for s in &self.segments {
            if x >= s.x0 && x < s.x1 {
                return s.y0 + (s.y1 - s.y0) * (x - s.x0) / (s.x1 - s.x0);
            }
        }
        0.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.y0.abs(), s.y1.abs()])
            .fold(0.0, f64::max)
    }

    /// Profile scaled by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    y0: c * s.y0,
                    y1: c * s.y1,
                    ..*s
                })
                .collect(),
        }
    }
}

/// Test profile `F_t(z) = G((z − r_t)/h_t)` with shift and scale sequences
/// frozen at the evaluation horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub g: PiecewiseLinear,
    pub r_t: f64,
    pub h_t: f64,
}

impl GibbsSpec {
    pub fn new(g: PiecewiseLinear, r_t: f64, h_t: f64) -> Result<Self, MartingaleError> {
        if h_t == 0.0 {
            return Err(MartingaleError::ZeroScale);
        }
        Ok(Self { g, r_t, h_t })
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.g.eval((z - self.r_t) / self.h_t)
    }

    /// Segments of `F_t` in the `z` coordinate, as `(z0, z1, a, b)` with
    /// `F_t(z) = a z + b` on `[z0, z1)`.
    fn z_segments(&self) -> Vec<(f64, f64, f64, f64)> {
        self.g
            .segments
            .iter()
            .map(|s| {
                let za = self.r_t + self.h_t * s.x0;
                let zb = self.r_t + self.h_t * s.x1;
                let a = (s.y1 - s.y0) / (self.h_t * (s.x1 - s.x0));
                let b = s.y0 - a * za;
                if za <= zb {
                    (za, zb, a, b)
                } else {
                    (zb, za, a, b)
                }
            })
            .collect()
    }
}

/// Subcritical tilt `λ = √2 (1 − 1/α)` from the sequence value `α ≥ 1`.
pub fn tilt_from_alpha(alpha: f64) -> f64 {
    SQRT_2 * (1.0 - 1.0 / alpha)
}

fn check_standard(s: &Snapshot) -> Result<(), MartingaleError> {
    check_single_full(s)?;
    if (s.params.beta - 1.0).abs() > 1e-12 || (s.params.sigma2 - 1.0).abs() > 1e-12 {
        return Err(MartingaleError::NotStandard {
            beta: s.params.beta,
            sigma2: s.params.sigma2,
        });
    }
    if s.horizon <= 0.0 {
        return Err(MartingaleError::ZeroHorizon);
    }
    Ok(())
}

/// Gibbs functional at a (sub)critical tilt on a standard snapshot:
/// `W^{F_t}_t(λ) = Σ_u F_t((λt − X_u(t))/√t) · e^{λX_u(t) − (λ²/2 + 1)t}`.
pub fn gibbs_gaussian(s: &Snapshot, spec: &GibbsSpec, lambda: f64) -> Result<f64, MartingaleError> {
    check_standard(s)?;
    let t = s.horizon;
    let rate = lambda * lambda / 2.0 + 1.0;
    let sqrt_t = t.sqrt();
    Ok(s.particles
        .iter()
        .map(|p| {
            spec.eval((lambda * t - p.position) / sqrt_t) * (lambda * p.position - rate * t).exp()
        })
        .sum())
}

/// Critical-tilt Gibbs functional on a standard snapshot:
/// `W^{F_t}_t(√2) = Σ_u F_t((√2 t − X_u(t))/√t) · e^{−√2(√2 t − X_u(t))}`.
pub fn gibbs_mea(s: &Snapshot, spec: &GibbsSpec) -> Result<f64, MartingaleError> {
    check_standard(s)?;
    let t = s.horizon;
    let sqrt_t = t.sqrt();
    Ok(s.particles
        .iter()
        .map(|p| {
            let depth = SQRT_2 * t - p.position;
            spec.eval(depth / sqrt_t) * (-SQRT_2 * depth).exp()
        })
        .sum())
}

fn norm_pdf(x: f64) -> f64 {
    (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
}

fn norm_cdf(x: f64) -> f64 {
    0.5 * (1.0 + statrs::function::erf::erf(x / SQRT_2))
}

/// `⟨F_t, μ_Gau⟩ = (1/√(2π)) ∫ F_t(z) e^{−z²/2} dz`, piecewise closed form.
pub fn mu_gau_inner(spec: &GibbsSpec) -> f64 {
    spec.z_segments()
        .iter()
        .map(|&(z0, z1, a, b)| {
            a * (norm_pdf(z0) - norm_pdf(z1)) + b * (norm_cdf(z1) - norm_cdf(z0))
        })
        .sum()
}

/// `⟨F_t, μ_Mea⟩ = ∫_0^∞ F_t(z) z e^{−z²/2} dz`, piecewise closed form.
pub fn mu_mea_inner(spec: &GibbsSpec) -> f64 {
    spec.z_segments()
        .iter()
        .map(|&(z0, z1, a, b)| {
            let (c, d) = (z0.max(0.0), z1.max(0.0));
            if d <= c {
                return 0.0;
            }
            let linear = |z: f64| -(-z * z / 2.0).exp();
            let quad = |z: f64| -z * (-z * z / 2.0).exp() + (2.0 * PI).sqrt() * norm_cdf(z);
            a * (quad(d) - quad(c)) + b * (linear(d) - linear(c))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_replications, simulate_single_type, EngineConfig};
    use crate::phase_atlas::Params;

    fn assert_close(value: f64, expected: f64, tol: f64) {
        assert!(
            (value - expected).abs() <= tol,
            "value {value} differed from {expected} (tol {tol})"
        );
    }

    fn standard() -> Params {
        Params::new(1.0, 1.0).unwrap()
    }

    fn mean_and_se(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn additive_at_horizon_zero_is_one() {
        let snap = simulate_single_type(standard(), 0.0, 3);
        assert_close(additive_w(&snap, 0.7).unwrap(), 1.0, 0.0);
    }

    #[test]
    fn additive_at_lambda_zero_counts_particles() {
        let snap = simulate_single_type(standard(), 3.0, 5);
        let expected = snap.count_type1 as f64 * (-3.0f64).exp();
        assert_close(additive_w(&snap, 0.0).unwrap(), expected, 1e-12);
    }

    #[test]
    fn derivative_at_horizon_zero_is_zero() {
        let snap = simulate_single_type(standard(), 0.0, 3);
        assert_close(derivative_z(&snap).unwrap(), 0.0, 0.0);
    }

    #[test]
    fn rejects_two_type_and_partial_snapshots() {
        let cfg = EngineConfig::new(standard(), 2.0, 1).unwrap();
        let two = crate::engine::simulate_two_type(&cfg);
        assert!(matches!(
            additive_w(&two, 0.5),
            Err(MartingaleError::NotSingleType)
        ));
        let partial = crate::engine::simulate_single_type_cfg(
            &cfg.with_retention(crate::engine::Retention::Summary),
        );
        assert!(matches!(
            derivative_z(&partial),
            Err(MartingaleError::NeedsFullRetention(_))
        ));
    }

    #[test]
    fn martingale_means_at_t4_and_t6() {
        for (t, reps, seed) in [(4.0, 10_000u64, 2025u64), (6.0, 6_000, 2026)] {
            let cfg = EngineConfig::new(standard(), t, seed).unwrap();
            let snaps = run_replications(&cfg, false, reps);
            for lambda in [0.0, 0.5, 1.0] {
                let ws: Vec<f64> = snaps
                    .iter()
                    .map(|s| additive_w(s, lambda).unwrap())
                    .collect();
                let (mean, se) = mean_and_se(&ws);
                assert!(
                    (mean - 1.0).abs() <= 3.0 * se,
                    "W(λ={lambda}) at t={t}: mean {mean} se {se}"
                );
                assert!(ws.iter().all(|&w| w > 0.0));
            }
            let zs: Vec<f64> = snaps.iter().map(|s| derivative_z(s).unwrap()).collect();
            let (mean, se) = mean_and_se(&zs);
            assert!(
                (mean - 0.0).abs() <= 3.0 * se,
                "Z at t={t}: mean {mean} se {se}"
            );
        }
    }

    #[test]
    fn derivative_takes_both_signs_early_and_goes_positive_late() {
        let reps = 10_000;
        let cfg = EngineConfig::new(standard(), 1.0, 77).unwrap();
        let snaps = run_replications(&cfg, false, reps);
        let zs: Vec<f64> = snaps.iter().map(|s| derivative_z(s).unwrap()).collect();
        assert!(zs.iter().any(|&z| z > 0.0));
        assert!(zs.iter().any(|&z| z < 0.0));

        let reps = 2_000;
        let cfg = EngineConfig::new(standard(), 10.0, 78).unwrap();
        let snaps = run_replications(&cfg, false, reps);
        let positive = snaps
            .iter()
            .filter(|s| derivative_z(s).unwrap() > 0.0)
            .count() as f64;
        assert!(
            positive / reps as f64 > 0.95,
            "P(Z_10 > 0) = {}",
            positive / reps as f64
        );
    }

    #[test]
    fn profile_eval_and_jumps() {
        let g = PiecewiseLinear::indicator(-1.0, 1.0);
        assert_eq!(g.eval(-1.0), 1.0);
        assert_eq!(g.eval(0.999), 1.0);
        assert_eq!(g.eval(1.0), 0.0);
        assert_eq!(g.eval(-1.0001), 0.0);
        assert_eq!(g.sup_norm(), 1.0);

        let tent = PiecewiseLinear::from_table(&[(-1.0, 0.0), (0.0, 2.0), (1.0, 0.0)]).unwrap();
        assert_close(tent.eval(-0.5), 1.0, 1e-15);
        assert_close(tent.eval(0.5), 1.0, 1e-15);
        assert_eq!(tent.sup_norm(), 2.0);

        assert!(PiecewiseLinear::from_table(&[(0.0, 1.0)]).is_err());
        assert!(GibbsSpec::new(tent, 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_inner_product_examples() {
        // G = 1_[-1,1], r = 0, h = 1 → Φ(1) − Φ(−1)
        // erf backend is good to ~4e-11 here
        let spec = GibbsSpec::new(PiecewiseLinear::indicator(-1.0, 1.0), 0.0, 1.0).unwrap();
        assert_close(mu_gau_inner(&spec), 0.6826894921370859, 1e-9);
        // linearity in G
        let spec2 =
            GibbsSpec::new(PiecewiseLinear::indicator(-1.0, 1.0).scaled(3.0), 0.0, 1.0).unwrap();
        assert_close(mu_gau_inner(&spec2), 3.0 * mu_gau_inner(&spec), 1e-12);
        assert!(mu_gau_inner(&spec) >= 0.0);
    }

    #[test]
    fn mea_inner_product_closed_form() {
        // G = 1_[0,1], r_t = t^{-1/4}, h_t = r_t/2 → e^{−a²/2} − e^{−b²/2}
        let t: f64 = 10.0;
        let r = t.powf(-0.25);
        let spec = GibbsSpec::new(PiecewiseLinear::indicator(0.0, 1.0), r, r / 2.0).unwrap();
        let expected = (-r * r / 2.0).exp() - (-(1.5 * r) * (1.5 * r) / 2.0).exp();
        assert_close(mu_mea_inner(&spec), expected, 1e-12);
        assert!(mu_mea_inner(&spec) >= 0.0);

        // F ≡ 0 → 0
        let zero =
            GibbsSpec::new(PiecewiseLinear::indicator(0.0, 1.0).scaled(0.0), 0.0, 1.0).unwrap();
        assert_eq!(mu_mea_inner(&zero), 0.0);
    }

    #[test]
    fn gaussian_functional_definitional_collapse() {
        // F ≡ 1 on a huge support at λ = 0 reduces to |N_t| e^{−t}
        let snap = simulate_single_type(standard(), 4.0, 9);
        let spec = GibbsSpec::new(PiecewiseLinear::indicator(-1e6, 1e6), 0.0, 1.0).unwrap();
        let value = gibbs_gaussian(&snap, &spec, 0.0).unwrap();
        assert_close(value, snap.count_type1 as f64 * (-4.0f64).exp(), 1e-12);
    }

    #[test]
    fn gibbs_is_dominated_by_sup_norm_times_additive() {
        let snaps = run_replications(&EngineConfig::new(standard(), 5.0, 31).unwrap(), false, 50);
        let g = PiecewiseLinear::from_table(&[(-2.0, 0.0), (0.0, 1.7), (2.0, 0.0)]).unwrap();
        let spec = GibbsSpec::new(g, 0.3, 0.8).unwrap();
        for s in &snaps {
            let lambda = 0.6;
            let lhs = gibbs_gaussian(s, &spec, lambda).unwrap();
            let rhs = spec.g.sup_norm() * additive_w(s, lambda).unwrap();
            assert!(lhs <= rhs + 1e-12, "lhs {lhs} rhs {rhs}");
            assert!(lhs >= 0.0);
        }
    }

    #[test]
    fn gaussian_ratio_tends_to_one() {
        // W^{F_t}_t(λ) / (⟨F_t,μ_Gau⟩ · W_t(λ)) → 1 in probability
        let lambda = 0.5;
        let g = PiecewiseLinear::indicator(-1.0, 1.0);
        let spec = GibbsSpec::new(g, 0.0, 1.0).unwrap();
        let inner = mu_gau_inner(&spec);
        let mut medians = Vec::new();
        for (t, seed) in [(6.0, 51u64), (10.0, 52)] {
            let reps = 3_000;
            let cfg = EngineConfig::new(standard(), t, seed).unwrap();
            let snaps = run_replications(&cfg, false, reps);
            let mut ratios: Vec<f64> = snaps
                .iter()
                .map(|s| {
                    gibbs_gaussian(s, &spec, lambda).unwrap()
                        / (inner * additive_w(s, lambda).unwrap())
                })
                .collect();
            ratios.sort_by(f64::total_cmp);
            medians.push(ratios[ratios.len() / 2]);
        }
        for m in &medians {
            assert!(*m > 0.5 && *m < 2.0, "ratio median {m}");
        }
        // tightening toward 1 with t, with slack for Monte Carlo noise
        assert!(
            (medians[1] - 1.0).abs() <= (medians[0] - 1.0).abs() + 0.05,
            "medians {medians:?}"
        );
    }

    #[test]
    fn mea_functional_tracks_derivative_martingale() {
        // rank correlation of √t · W^{F_t}(√2)/⟨F_t,μ_Mea⟩ against √(2/π) Z_t
        // at t = 10. The moment correlation is outlier-dominated here (both
        // statistics are heavy-tailed and anti-aligned in the extremes), while
        // the in-probability pairing is a bulk statement; ranks capture it.
        let t: f64 = 10.0;
        let spec = GibbsSpec::new(PiecewiseLinear::indicator(0.0, 1.0), 0.3, 1.0).unwrap();
        let inner = mu_mea_inner(&spec);
        let reps = 3_000;
        let cfg = EngineConfig::new(standard(), t, 53).unwrap();
        let snaps = run_replications(&cfg, false, reps);
        let xs: Vec<f64> = snaps
            .iter()
            .map(|s| t.sqrt() * gibbs_mea(s, &spec).unwrap() / inner)
            .collect();
        let ys: Vec<f64> = snaps
            .iter()
            .map(|s| (2.0 / PI).sqrt() * derivative_z(s).unwrap())
            .collect();
        fn ranks(xs: &[f64]) -> Vec<f64> {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
            let mut out = vec![0.0; xs.len()];
            for (rank, &i) in idx.iter().enumerate() {
                out[i] = rank as f64;
            }
            out
        }
        let (rx, ry) = (ranks(&xs), ranks(&ys));
        let (mx, _) = mean_and_se(&rx);
        let (my, _) = mean_and_se(&ry);
        let cov: f64 = rx
            .iter()
            .zip(&ry)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>();
        let vx: f64 = rx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let vy: f64 = ry.iter().map(|y| (y - my).powi(2)).sum::<f64>();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr > 0.5, "rank correlation {corr}");
    }

    #[test]
    fn tilt_sequence() {
        assert_close(tilt_from_alpha(1.0), 0.0, 0.0);
        assert_close(tilt_from_alpha(2.0), SQRT_2 / 2.0, 1e-15);
        let alpha_t = 10.0f64.powf(0.25); // representative α_t = t^{1/4} at t = 10
        assert!(tilt_from_alpha(alpha_t) < SQRT_2);
    }
}
