//! Explicit finite-difference solver for the coupled F-KPP system
//!
//! ```text
//!   ∂_s u = (σ²/2) Δu − β u(1−u) − u(1−v),
//!   ∂_s v = (1/2) Δv − v(1−v),
//! ```
//!
//! with front tracking. The `v` equation is autonomous, so the second field
//! evolves identically whether or not `u` is present; `u` feels `v` through
//! the coupling term `−u(1−v)`.
//!
//! With ramp initial data rising from 0 to 1 left-to-right, both fields are
//! nondecreasing in `x` for all time and the level-½ crossing travels right
//! at the spreading speed of the regime — `max(v, √2)` in the normal phases
//! and `v* > max(v, √2)` in the anomalous wedge, which is the fast,
//! quantitative signature this solver exists to measure. The complementary
//! fields `w = 1−u`, `1−v` are the population-front profiles; at level ½ the
//! crossing of `u` and of `1−u` coincide, and the traveling-wave residual is
//! evaluated on the canonical decreasing orientation after reflection.

use serde::Serialize;
use thiserror::Error;

use crate::phase_atlas::{derived_constants, Params};
use std::f64::consts::SQRT_2;

#[derive(Debug, Error, PartialEq)]
pub enum PdeError {
    #[error("grid spacing and time step must be positive and horizon nonnegative")]
    BadGrid,
    #[error("time step {dt} violates the stability bound {bound} = 0.4·dx²/max(σ², 1)")]
    UnstableStep { dt: f64, bound: f64 },
    #[error("domain too small: x_hi = {have} but the front needs {needed} (1.2·v_max·T + 20 past the step)")]
    DomainTooSmall { needed: f64, have: f64 },
    #[error("total variation grew at s = {time}; the scheme went unstable")]
    VariationGrowth { time: f64 },
    #[error("field overshot [0,1] by {excess} at s = {time}")]
    Overshoot { excess: f64, time: f64 },
    #[error("field does not cross the level inside the domain")]
    NoCrossing,
    #[error("front-speed window holds only {0} samples (need at least 10)")]
    WindowTooShort(usize),
    #[error("aligned profile leaves the computational domain")]
    OutOfDomain,
}

/// Step-like initial data; both fields are clamped ramps
/// `ramp(x) = clamp((x − center ± A)/(2A), 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitialData {
    /// 0 on the far left, 1 on the far right; fronts travel right.
    RampUp {
        center_u: f64,
        center_v: f64,
        halfwidth: f64,
    },
    /// 1 on the far left, 0 on the far right (mirror image).
    RampDown {
        center_u: f64,
        center_v: f64,
        halfwidth: f64,
    },
    /// Constant fields (fixed-point checks).
    Uniform { u: f64, v: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeConfig {
    pub params: Params,
    pub x_lo: f64,
    pub x_hi: f64,
    pub dx: f64,
    pub dt: f64,
    pub horizon: f64,
    pub init: InitialData,
    /// Cadence (in time units) of front samples and stored profiles.
    pub sample_every: f64,
    /// Keep full profiles from this time on (for residual checks).
    pub store_profiles_from: f64,
}

pub const STABILITY_SAFETY: f64 = 0.4;

impl PdeConfig {
    /// Stability and domain checks.
    pub fn validate(&self) -> Result<(), PdeError> {
        if !(self.dx > 0.0 && self.dt > 0.0 && self.horizon >= 0.0 && self.x_hi > self.x_lo) {
            return Err(PdeError::BadGrid);
        }
        let bound = STABILITY_SAFETY * self.dx * self.dx / self.params.sigma2.max(1.0);
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(PdeError::UnstableStep { dt: self.dt, bound });
        }
        let v_max = self.v_max();
        match self.init {
            InitialData::RampUp { center_u, .. } => {
                let needed = center_u + 1.2 * v_max * self.horizon + 20.0;
                if self.x_hi < needed {
                    return Err(PdeError::DomainTooSmall {
                        needed,
                        have: self.x_hi,
                    });
                }
            }
            InitialData::RampDown { center_u, .. } => {
                let needed = center_u - 1.2 * v_max * self.horizon - 20.0;
                if self.x_lo > needed {
                    return Err(PdeError::DomainTooSmall {
                        needed,
                        have: self.x_lo,
                    });
                }
            }
            InitialData::Uniform { .. } => {}
        }
        Ok(())
    }

    fn v_max(&self) -> f64 {
        let d = derived_constants(self.params);
        let mut v_max = d.v.max(SQRT_2);
        if let Some(st) = d.starred {
            if st.v_star.is_finite() {
                v_max = v_max.max(st.v_star);
            }
        }
        v_max
    }

    /// A ready-to-run configuration: rising ramps at the origin (halfwidth 2),
    /// grid `dx`, time step at the stability bound, domain sized for the
    /// regime's spreading speed.
    pub fn auto(params: Params, horizon: f64, dx: f64) -> PdeConfig {
        let cfg = PdeConfig {
            params,
            x_lo: -40.0,
            x_hi: 0.0,
            dx,
            dt: STABILITY_SAFETY * dx * dx / params.sigma2.max(1.0),
            horizon,
            init: InitialData::RampUp {
                center_u: 0.0,
                center_v: 0.0,
                halfwidth: 2.0,
            },
            sample_every: 0.5,
            store_profiles_from: f64::INFINITY,
        };
        PdeConfig {
            x_hi: 1.2 * cfg.v_max() * horizon + 25.0,
            ..cfg
        }
    }
}

/// Discretized fields at one instant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeState {
    pub time: f64,
    pub x_lo: f64,
    pub dx: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PdeState {
    pub fn x(&self, i: usize) -> f64 {
        self.x_lo + self.dx * i as f64
    }

    fn interpolate(field: &[f64], x_lo: f64, dx: f64, x: f64) -> Option<f64> {
        let pos = (x - x_lo) / dx;
        if pos < 0.0 || pos > (field.len() - 1) as f64 {
            return None;
        }
        let i = (pos.floor() as usize).min(field.len() - 2);
        let frac = pos - i as f64;
        Some(field[i] * (1.0 - frac) + field[i + 1] * frac)
    }

    pub fn sample(&self, field: Field, x: f64) -> Option<f64> {
        let data = match field {
            Field::U => &self.u,
            Field::V => &self.v,
        };
        Self::interpolate(data, self.x_lo, self.dx, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Field {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontSample {
    pub time: f64,
    pub front_u: Option<f64>,
    pub front_v: Option<f64>,
    /// Discrete integrals `Σ field·dx` (mass diagnostics).
    pub mass_u: f64,
    pub mass_v: f64,
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub series: Vec<FrontSample>,
    pub profiles: Vec<PdeState>,
    pub final_state: PdeState,
    /// Level used for the bundled front series.
    pub level: f64,
}

const OVERSHOOT_TOL: f64 = 1e-12;

fn initial_fields(cfg: &PdeConfig, n: usize) -> (Vec<f64>, Vec<f64>) {
    let ramp = |x: f64, center: f64, halfwidth: f64, rising: bool| {
        let y = ((x - center + halfwidth) / (2.0 * halfwidth)).clamp(0.0, 1.0);
        if rising {
            y
        } else {
            1.0 - y
        }
    };
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let x = cfg.x_lo + cfg.dx * i as f64;
        match cfg.init {
            InitialData::RampUp {
                center_u,
                center_v,
                halfwidth,
            } => {
                u[i] = ramp(x, center_u, halfwidth, true);
                v[i] = ramp(x, center_v, halfwidth, true);
            }
            InitialData::RampDown {
                center_u,
                center_v,
                halfwidth,
            } => {
                u[i] = ramp(x, center_u, halfwidth, false);
                v[i] = ramp(x, center_v, halfwidth, false);
            }
            InitialData::Uniform { u: u0, v: v0 } => {
                u[i] = u0;
                v[i] = v0;
            }
        }
    }
    (u, v)
}

fn total_variation(field: &[f64]) -> f64 {
    field.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

fn step_field(
    out: &mut [f64],
    field: &[f64],
    reaction: impl Fn(usize, f64) -> f64,
    half_diff: f64,
    dx: f64,
    dt: f64,
    time: f64,
) -> Result<(), PdeError> {
    let n = field.len();
    let inv_dx2 = 1.0 / (dx * dx);
    for i in 0..n {
        // zero-flux boundaries via ghost mirroring
        let left = field[if i == 0 { 0 } else { i - 1 }];
        let right = field[if i + 1 == n { n - 1 } else { i + 1 }];
        let lap = (left - 2.0 * field[i] + right) * inv_dx2;
        let next = field[i] + dt * (half_diff * lap + reaction(i, field[i]));
        if !(-OVERSHOOT_TOL..=1.0 + OVERSHOOT_TOL).contains(&next) {
            return Err(PdeError::Overshoot {
                excess: if next < 0.0 { -next } else { next - 1.0 },
                time,
            });
        }
        out[i] = next.clamp(0.0, 1.0);
    }
    Ok(())
}

fn run(cfg: &PdeConfig, couple_u: bool) -> Result<PdeRun, PdeError> {
    cfg.validate()?;
    let n = ((cfg.x_hi - cfg.x_lo) / cfg.dx).round() as usize + 1;
    let (mut u, mut v) = initial_fields(cfg, n);
    let mut u_next = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    let steps = (cfg.horizon / cfg.dt).round() as u64;
    let sample_stride = ((cfg.sample_every / cfg.dt).round() as u64).max(1);
    let tv0 = total_variation(&u).max(total_variation(&v));

    let mut series = Vec::new();
    let mut profiles = Vec::new();
    let make_state = |time: f64, u: &[f64], v: &[f64]| PdeState {
        time,
        x_lo: cfg.x_lo,
        dx: cfg.dx,
        u: u.to_vec(),
        v: v.to_vec(),
    };
    let record = |time: f64,
                  u: &[f64],
                  v: &[f64],
                  series: &mut Vec<FrontSample>,
                  profiles: &mut Vec<PdeState>| {
        let state = make_state(time, u, v);
        series.push(FrontSample {
            time,
            front_u: front_position(&state, Field::U, 0.5).ok(),
            front_v: front_position(&state, Field::V, 0.5).ok(),
            mass_u: u.iter().sum::<f64>() * cfg.dx,
            mass_v: v.iter().sum::<f64>() * cfg.dx,
        });
        if time >= cfg.store_profiles_from {
            profiles.push(state);
        }
    };

    record(0.0, &u, &v, &mut series, &mut profiles);
    for step in 1..=steps {
        let time = step as f64 * cfg.dt;
        // v first, from the previous instant only: the subsystem is
        // autonomous and must match a standalone v run bit-for-bit
        step_field(
            &mut v_next,
            &v,
            |i, val| -val * (1.0 - v[i]),
            0.5,
            cfg.dx,
            cfg.dt,
            time,
        )?;
        if couple_u {
            let beta = cfg.params.beta;
            step_field(
                &mut u_next,
                &u,
                |i, val| -beta * val * (1.0 - u[i]) - val * (1.0 - v[i]),
                0.5 * cfg.params.sigma2,
                cfg.dx,
                cfg.dt,
                time,
            )?;
            std::mem::swap(&mut u, &mut u_next);
        }
        std::mem::swap(&mut v, &mut v_next);

        if step % 256 == 0 {
            let tv = total_variation(&u).max(total_variation(&v));
            if tv > tv0 + 1.0 {
                return Err(PdeError::VariationGrowth { time });
            }
        }
        if step % sample_stride == 0 {
            record(time, &u, &v, &mut series, &mut profiles);
        }
    }
    let final_state = make_state(steps as f64 * cfg.dt, &u, &v);
    Ok(PdeRun {
        series,
        profiles,
        final_state,
        level: 0.5,
    })
}

/// Solve the coupled system.
pub fn solve_coupled(cfg: &PdeConfig) -> Result<PdeRun, PdeError> {
    run(cfg, true)
}

/// Solve the autonomous `v` subsystem alone (the `u` field stays at its
/// initial data). The `v` component matches the coupled run exactly.
pub fn solve_v_only(cfg: &PdeConfig) -> Result<PdeRun, PdeError> {
    run(cfg, false)
}

/// Position of the rightmost crossing of `level`, linearly interpolated.
/// Works for both orientations; at level ½ the crossing of a field and of
/// its complement coincide.
pub fn front_position(state: &PdeState, field: Field, level: f64) -> Result<f64, PdeError> {
    let data = match field {
        Field::U => &state.u,
        Field::V => &state.v,
    };
    for i in (0..data.len() - 1).rev() {
        let (a, b) = (data[i] - level, data[i + 1] - level);
        if a == 0.0 && b == 0.0 {
            continue; // flat at the level; keep scanning for a real crossing
        }
        if a * b <= 0.0 {
            let frac = a / (a - b);
            return Ok(state.x(i) + state.dx * frac);
        }
    }
    Err(PdeError::NoCrossing)
}

/// Least-squares slope of front position against time over `[s1, s2]`.
pub fn front_speed(series: &[(f64, f64)], s1: f64, s2: f64) -> Result<f64, PdeError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(s, _)| *s >= s1 && *s <= s2)
        .copied()
        .collect();
    if pts.len() < 10 {
        return Err(PdeError::WindowTooShort(pts.len()));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

/// Front series of a run for one field, as `(time, position)` pairs.
pub fn front_series(run: &PdeRun, field: Field) -> Vec<(f64, f64)> {
    run.series
        .iter()
        .filter_map(|s| {
            let f = match field {
                Field::U => s.front_u,
                Field::V => s.front_v,
            };
            f.map(|x| (s.time, x))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WaveResidual {
    /// Discrete L² residual of the first (coupled) wave equation.
    pub l2_u: f64,
    /// Discrete L² residual of the second (autonomous) wave equation.
    pub l2_v: f64,
    pub speed: f64,
    pub samples: usize,
}

/// Rigid-shift alignment of the stored profiles over `[s1, s2]`, followed by
/// evaluation of the traveling-wave equations on the averaged profile
/// (reflected to the canonical decreasing orientation `w(−∞) = 1`):
///
/// ```text
///   (σ²/2) w₁'' − c w₁' − β w₁(1−w₁) − w₁(1−w₂) = 0
///   (1/2)  w₂'' − c w₂' − w₂(1−w₂) = 0
/// ```
pub fn traveling_wave_residual(
    run: &PdeRun,
    params: Params,
    s1: f64,
    s2: f64,
    half_width: f64,
) -> Result<WaveResidual, PdeError> {
    let states: Vec<&PdeState> = run
        .profiles
        .iter()
        .filter(|p| p.time >= s1 && p.time <= s2)
        .collect();
    if states.len() < 10 {
        return Err(PdeError::WindowTooShort(states.len()));
    }
    let dz = states[0].dx;
    let m = (2.0 * half_width / dz).round() as usize + 1;
    let mut w1 = vec![0.0; m];
    let mut w2 = vec![0.0; m];
    for state in &states {
        let xf = front_position(state, Field::U, run.level)?;
        for j in 0..m {
            let z = -half_width + dz * j as f64;
            let uu = state
                .sample(Field::U, xf + z)
                .ok_or(PdeError::OutOfDomain)?;
            let vv = state
                .sample(Field::V, xf + z)
                .ok_or(PdeError::OutOfDomain)?;
            w1[j] += uu;
            w2[j] += vv;
        }
    }
    let count = states.len() as f64;
    for j in 0..m {
        w1[j] /= count;
        w2[j] /= count;
    }
    // reflect to the decreasing orientation
    w1.reverse();
    w2.reverse();

    let c = front_speed(&front_series(run, Field::U), s1, s2)?;
    let beta = params.beta;
    let half_sigma2 = params.sigma2 / 2.0;
    let mut sum_u = 0.0;
    let mut sum_v = 0.0;
    for j in 1..m - 1 {
        let d1 = (w1[j + 1] - w1[j - 1]) / (2.0 * dz);
        let dd1 = (w1[j + 1] - 2.0 * w1[j] + w1[j - 1]) / (dz * dz);
        let r1 = half_sigma2 * dd1 - c * d1 - beta * w1[j] * (1.0 - w1[j]) - w1[j] * (1.0 - w2[j]);
        sum_u += r1 * r1;
        let d2 = (w2[j + 1] - w2[j - 1]) / (2.0 * dz);
        let dd2 = (w2[j + 1] - 2.0 * w2[j] + w2[j - 1]) / (dz * dz);
        let r2 = 0.5 * dd2 - c * d2 - w2[j] * (1.0 - w2[j]);
        sum_v += r2 * r2;
    }
    Ok(WaveResidual {
        l2_u: (sum_u * dz).sqrt(),
        l2_v: (sum_v * dz).sqrt(),
        speed: c.abs(),
        samples: states.len(),
    })
}
