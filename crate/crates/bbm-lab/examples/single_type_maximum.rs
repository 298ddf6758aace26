//! The maximum of single-type BBM: empirical medians against the centering
//! √2·t − (3/(2√2))·log t, and the fitted log-correction.
//!
//! ```text
//! cargo run --release --example single_type_maximum
//! ```

use bbm_lab::engine::{run_replications, EngineConfig, Retention};
use bbm_lab::extreme_stats::fit_log_correction;
use bbm_lab::phase_atlas::Params;
use std::f64::consts::SQRT_2;

fn main() {
    let p = Params::new(1.0, 1.0).unwrap();
    let reps = 2_000;
    let mut points = Vec::new();
    println!("{:>4} {:>10} {:>10} {:>8}", "t", "median", "m(t)", "offset");
    for t in [6.0, 8.0, 10.0, 12.0] {
        let cfg = EngineConfig::new(p, t, 7 + t as u64)
            .unwrap()
            .with_retention(Retention::Summary);
        let snaps = run_replications(&cfg, false, reps);
        let mut maxima: Vec<f64> = snaps.iter().map(|s| s.max_position).collect();
        maxima.sort_by(f64::total_cmp);
        let median = maxima[maxima.len() / 2];
        let m = SQRT_2 * t - 1.5 / SQRT_2 * t.ln();
        println!("{t:>4} {median:>10.4} {m:>10.4} {:>8.4}", median - m);
        points.push((t, median));
    }
    let fit = fit_log_correction(&points, Some(SQRT_2)).unwrap();
    println!(
        "\npinned fit: median ≈ √2·t − {:.4}·log t + {:.4}   (3/(2√2) ≈ {:.4})",
        fit.log_coeff,
        fit.offset,
        1.5 / SQRT_2
    );
}
