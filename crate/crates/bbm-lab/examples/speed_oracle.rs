//! Independent oracles against the closed forms: the brute-force speed
//! optimization, the Brownian-bridge staying probability, and the L-function
//! limits.
//!
//! ```text
//! cargo run --release --example speed_oracle
//! ```

use bbm_lab::oracles::{bridge_prob, bridge_prob_mc, l_limit_check, solve_speed_optimization};
use bbm_lab::phase_atlas::{derived_constants, ApproxFamily, Family, Params};

fn main() {
    println!("grid-search speed optimization vs closed forms:");
    for (beta, sigma2) in [(2.0, 1.0), (0.5, 0.5), (2.0, 0.5), (1.5, 0.6)] {
        let p = Params::new(beta, sigma2).unwrap();
        let sol = solve_speed_optimization(p, 100).unwrap();
        let closed = derived_constants(p).starred.map_or(f64::NAN, |s| s.v_star);
        println!(
            "  ({beta}, {sigma2}): grid {:.5} at (p, a, b) = ({:.3}, {:.3}, {:.3}); closed v* {closed:.5}",
            sol.value, sol.p, sol.a, sol.b
        );
    }

    println!("\nBrownian bridge below a line, closed form vs Monte Carlo:");
    for (x1, x2, t) in [(1.0, 1.0, 2.0), (2.0, 1.0, 4.0)] {
        let exact = bridge_prob(x1, x2, t);
        let mc = bridge_prob_mc(x1, x2, t, 512, 50_000, 7);
        println!(
            "  ({x1}, {x2}, {t}): exact {exact:.5}, MC {:.5} ± {:.5}",
            mc.estimate,
            3.0 * mc.std_error
        );
    }

    println!("\nL-function limits along t (xi = 1):");
    let fam = ApproxFamily::new(Params::new(1.5, 0.5).unwrap(), Family::B23Plus, 0.25).unwrap();
    for row in l_limit_check(1.0, &[1e4, 1e6, 1e8], &fam).unwrap() {
        println!(
            "  boundary family, t = {:>5.0e}: L = {:.5} -> {:.5} (residual {:.1e})",
            row.t, row.l_value, row.limit_exact, row.residual_exact
        );
    }
    let fam = ApproxFamily::new(Params::new(1.0, 1.0).unwrap(), Family::P11F3, 0.5).unwrap();
    for row in l_limit_check(1.0, &[1e4, 1e6, 1e8], &fam).unwrap() {
        println!(
            "  diagonal family, t = {:>5.0e}: L = {:.5} -> exact {:.5} (customary constant {:.5} is off by the cross-term)",
            row.t, row.l_value, row.limit_exact, row.limit_stated
        );
    }
}
