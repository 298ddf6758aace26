//! A simulation and verification laboratory for two-type reducible branching
//! Brownian motion (BBM).
//!
//! Type 1 particles diffuse with coefficient `σ²` and branch at rate `β` into
//! two type-1 children, while also giving birth to type-2 particles at rate 1;
//! type 2 particles are standard BBM (diffusion 1, binary branching at rate 1)
//! and never produce type-1 offspring. The maximum of this system exhibits a
//! phase transition in its logarithmic centering as `(β, σ²)` crosses the
//! boundary of the anomalous spreading region, and horizon-dependent parameter
//! families `(β_t, σ_t²)` interpolate smoothly between the surrounding phases.
//!
//! The crate is organized around that phenomenon:
//!
//! - [`phase_atlas`] — pure analytic layer: region classification, derived
//!   speeds and tilts, `h`-admissible approximation families, centering
//!   formulas `l·t − s·log t`, and the closed-form limit constants.
//! - [`engine`] — exact event-driven simulation of single-type and two-type
//!   BBM with deterministic per-particle random streams, optional
//!   front-pruning, and immutable snapshots.
//! - [`extreme_stats`] — estimators over snapshot ensembles: maximum
//!   quantiles, log-correction fits, localization-window checks, decoration
//!   gap statistics and Laplace-functional shape verification.
//! - [`martingale`] — additive and derivative martingales and the Gibbs-measure
//!   CLT functionals, with quadrature companions.
//! - [`fkpp`] — finite-difference solver for the coupled F-KPP system with
//!   front tracking and traveling-wave residual checks.
//! - [`oracles`] — independent brute-force and closed-form oracles: the speed
//!   optimization problem, the Brownian bridge formula, many-to-one expected
//!   counts, the `L`-function limits, and adaptive quadrature.
//! - [`cli`] — configuration, reproducible run manifests and tabular outputs
//!   behind the `bbm` binary.
//!
//! Start with the runnable examples (`cargo run --release --example
//! phase_atlas_tour`) or the `bbm` binary (`cargo run --release --bin bbm --
//! classify --beta 2 --sigma2 0.5`).

pub mod cli;
pub mod engine;
pub mod extreme_stats;
pub mod fkpp;
pub mod martingale;
pub mod oracles;
pub mod phase_atlas;

pub use phase_atlas::{ApproxFamily, Centering, DerivedConstants, Family, Params, Region};
