//! Localization of extremal transform points: the fraction of replications
//! with an extremal type-2 particle whose birth point escapes the window
//! shrinks as the window scale R grows.
//!
//! ```text
//! cargo run --release --example localization_windows
//! ```

use bbm_lab::engine::Retention;
use bbm_lab::extreme_stats::{localization_fraction, Ensemble, Provenance, WindowSpec};
use bbm_lab::phase_atlas::{table_centering, Family, Params};

fn main() {
    let p = Params::new(2.0, 0.5).unwrap();
    let t = 8.0;
    let offset_a = 2.0;
    let m = table_centering(p).value(t);
    println!("anomalous surrogate (2, 0.5) at t = {t}: m(t) = {m:.3}");
    let ensemble = Ensemble::simulate(
        Provenance::Plain(p),
        true,
        t,
        60,
        2024,
        Some(10.0),
        Retention::AboveLevel(m - offset_a),
        500_000_000,
    )
    .unwrap();
    println!("{:>6} {:>10}", "R", "fraction");
    for r in [1.5, 2.0, 4.0, 8.0, 16.0] {
        let spec = WindowSpec::new(Family::B23Plus, 0.25, r).unwrap();
        let fraction = localization_fraction(&ensemble, &spec, offset_a).unwrap();
        println!("{r:>6.1} {fraction:>10.4}");
    }
    println!("\nescape fractions are nonincreasing in R by window nesting");
}
