//! The seven h-admissible approximation families: perturbed parameters,
//! defining-equation residuals, and the smooth interpolation of the
//! log-correction coefficient in h.
//!
//! ```text
//! cargo run --release --example approximation_families
//! ```

use bbm_lab::phase_atlas::{ApproxFamily, Family, Params};

fn main() {
    let b13 = Params::new(2.0, 2.0 / 3.0).unwrap();
    let b23 = Params::new(1.5, 0.5).unwrap();
    let p11 = Params::new(1.0, 1.0).unwrap();
    let families = [
        (Family::B13Plus, b13),
        (Family::B13Minus, b13),
        (Family::B23Plus, b23),
        (Family::B23Minus, b23),
        (Family::P11F1, p11),
        (Family::P11F2, p11),
        (Family::P11F3, p11),
    ];

    println!("perturbed parameters at t = 1e4 (h = 0.5):");
    for (family, target) in families {
        let fam = ApproxFamily::new(target, family, 0.5).unwrap();
        let pt = fam.params_at(1e4).unwrap();
        println!(
            "  {:<10} target ({:.4}, {:.4}) -> ({:.6}, {:.6})",
            family.to_string(),
            target.beta,
            target.sigma2,
            pt.beta,
            pt.sigma2
        );
    }

    // the log coefficient s(h) interpolates smoothly and saturates at the
    // family threshold (1/2 for boundary targets, 1 for the corner point)
    println!("\nlog-correction coefficient s(h) at t = 1e6:");
    print!("{:>6}", "h");
    for (family, _) in &families[..4] {
        print!(" {:>10}", family.to_string());
    }
    println!(" {:>10}", "P11_f3");
    for h in [0.1, 0.25, 0.4, 0.5, 0.75, 1.0, 2.0, f64::INFINITY] {
        print!("{h:>6.2}");
        for (family, target) in families[..4].iter().chain(&families[6..]) {
            let fam = ApproxFamily::new(*target, *family, h).unwrap();
            let c = fam.centering(1e6).unwrap();
            print!(" {:>10.6}", c.log_coeff);
        }
        println!();
    }

    println!("\nlimit constants (decoration prefactors excluded):");
    for h in [0.25, 0.5, 0.75] {
        let c: Vec<String> = families
            .iter()
            .map(|(family, target)| {
                let fam = ApproxFamily::new(*target, *family, h).unwrap();
                format!("{}={:.4}", family, fam.c_constant())
            })
            .collect();
        println!("  h = {h}: {}", c.join("  "));
    }
}
