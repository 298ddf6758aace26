//! Coupled reaction-diffusion fronts: the level-1/2 crossing of the first
//! field travels at the two-type spreading speed of the regime.
//!
//! ```text
//! cargo run --release --example fkpp_fronts
//! ```

use bbm_lab::fkpp::{
    front_series, front_speed, solve_coupled, traveling_wave_residual, Field, PdeConfig,
};
use bbm_lab::phase_atlas::{classify, derived_constants, Params};
use std::f64::consts::SQRT_2;

fn main() {
    for (beta, sigma2) in [(2.0, 0.5), (2.0, 1.0), (0.5, 0.5)] {
        let p = Params::new(beta, sigma2).unwrap();
        let d = derived_constants(p);
        let expected = match d.starred {
            Some(st) if st.v_star > d.v.max(SQRT_2) => st.v_star,
            _ => d.v.max(SQRT_2),
        };
        let mut cfg = PdeConfig::auto(p, 60.0, 0.1);
        cfg.store_profiles_from = 30.0;
        let run = solve_coupled(&cfg).unwrap();
        let speed_u = front_speed(&front_series(&run, Field::U), 30.0, 60.0).unwrap();
        let speed_v = front_speed(&front_series(&run, Field::V), 30.0, 60.0).unwrap();
        let res = traveling_wave_residual(&run, p, 30.0, 60.0, 15.0).unwrap();
        println!(
            "({beta}, {sigma2}) in {:<7}: u-front {speed_u:.4} (expected {expected:.4}), v-front {speed_v:.4}, wave residual {:.2e}",
            classify(p).to_string(),
            res.l2_u
        );
    }
    println!("\nanomalous coupling pushes the first front past both pulled speeds");
}
