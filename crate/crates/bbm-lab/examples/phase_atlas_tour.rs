//! Tour of the phase atlas: region classification, derived speeds, and the
//! centering table.
//!
//! ```text
//! cargo run --release --example phase_atlas_tour
//! ```

use bbm_lab::phase_atlas::{classify, derived_constants, table_centering, Params};

fn main() {
    let points = [
        (2.0, 1.0),
        (0.5, 0.5),
        (2.0, 0.5),
        (2.0, 2.0 / 3.0),
        (1.5, 0.5),
        (0.5, 2.0),
        (1.0, 1.0),
    ];
    println!(
        "{:>6} {:>7} | {:>9} | {:>8} {:>8} {:>8} {:>8} | centering",
        "beta", "sigma2", "region", "v", "theta", "p*", "v*"
    );
    for (beta, sigma2) in points {
        let p = Params::new(beta, sigma2).unwrap();
        let region = classify(p);
        let d = derived_constants(p);
        let (p_star, v_star) = d
            .starred
            .map_or((f64::NAN, f64::NAN), |s| (s.p_star, s.v_star));
        let c = table_centering(p);
        println!(
            "{beta:>6.3} {sigma2:>7.3} | {:>9} | {:>8.4} {:>8.4} {:>8.4} {:>8.4} | {:.4}·t − {:.4}·log t",
            region.to_string(),
            d.v,
            d.theta,
            p_star,
            v_star,
            c.leading,
            c.log_coeff
        );
    }

    // the anomalous wedge sits between the two boundary curves for beta > 1
    println!("\nwedge cross-section at beta = 2:");
    for k in 0..=10 {
        let sigma2 = 0.4 + 0.04 * k as f64;
        let p = Params::new(2.0, sigma2).unwrap();
        println!("  sigma2 = {sigma2:.2}: {}", classify(p));
    }
}
