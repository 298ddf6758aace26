//! Shape verification of the Laplace functional: the ratio of the Monte
//! Carlo estimate to the x-dependent shape factor is flat in x, the unknown
//! decoration prefactor cancelling.
//!
//! ```text
//! cargo run --release --example laplace_shape
//! ```

use bbm_lab::extreme_stats::laplace_shape;
use bbm_lab::phase_atlas::Params;

fn main() {
    let p = Params::new(1.0, 1.0).unwrap();
    let rows = laplace_shape(
        p,
        8.0,
        1.6,
        &[-3.0, -2.0, -1.0, 0.0, 1.0],
        0.0,
        0.1,
        150_000,
        13,
    )
    .unwrap();
    println!("{:>5} {:>12} {:>12} {:>10}", "x", "phi", "shape", "ratio");
    for r in &rows {
        println!(
            "{:>5.1} {:>12.5e} {:>12.5e} {:>10.4}{}",
            r.x,
            r.phi,
            r.shape,
            r.ratio,
            if r.low_confidence { "  (noisy)" } else { "" }
        );
    }
    let confident: Vec<f64> = rows
        .iter()
        .filter(|r| !r.low_confidence)
        .map(|r| r.ratio)
        .collect();
    let spread = confident.iter().fold(0.0f64, |m, &r| m.max(r))
        / confident.iter().fold(f64::INFINITY, |m, &r| m.min(r));
    println!("\nratio spread (max/min): {spread:.3}");
}
