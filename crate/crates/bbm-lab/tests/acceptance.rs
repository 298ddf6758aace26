//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance below is pinned in code. One check is expected to fail by
//! design and is reported rather than asserted: the diagonal-family L-limit
//! against the customary constant −(√2+1)ξ² (criterion 11, case ii). Exact
//! algebra collapses that L to −t^{−h}u²/((1−p*)t − u), whose limit is −2ξ²;
//! the companion check against the exact constant passes and is asserted,
//! and `stated_constant_is_unattainable` locks the analysis in as a
//! regression test.

use std::f64::consts::SQRT_2;
use std::sync::OnceLock;
use std::time::Instant;

use bbm_lab::cli::{run_command, CommandName, RunConfig};
use bbm_lab::engine::rng::StreamRng;
use bbm_lab::engine::{run_replications, EngineConfig, Retention};
use bbm_lab::extreme_stats::{
    fit_log_correction, laplace_shape, localization_fraction, Ensemble, Provenance, WindowSpec,
};
use bbm_lab::fkpp::{
    front_series, front_speed, solve_coupled, traveling_wave_residual, Field, PdeConfig,
};
use bbm_lab::martingale::{additive_w, derivative_z};
use bbm_lab::oracles::{
    bridge_prob, bridge_prob_mc, expected_transform_count, identity_residuals, l_limit_check,
    solve_speed_optimization,
};
use bbm_lab::phase_atlas::{classify, derived_constants, ApproxFamily, Family, Params, Region};
use rand::Rng;

fn status(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn params(beta: f64, sigma2: f64) -> Params {
    Params::new(beta, sigma2).unwrap()
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn sample_region(region: Region, n: usize, seed: u64) -> Vec<Params> {
    let mut rng = StreamRng::from_stream(seed, 17);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let beta = 0.2 + 3.3 * rng.random::<f64>();
        let sigma2 = 0.05 + 2.5 * rng.random::<f64>();
        if let Ok(p) = Params::new(beta, sigma2) {
            if classify(p) == region {
                out.push(p);
            }
        }
    }
    out
}

#[test]
fn criterion_01_identity_suite() {
    let start = Instant::now();
    let points = sample_region(Region::CIII, 10_000, 101);
    let mut worst: f64 = 0.0;
    for p in &points {
        let (r1, r2) = identity_residuals(*p).unwrap();
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst < 1e-10 && elapsed < 1.0;
    println!(
        "criterion 01 identity suite: {} (worst residual {worst:.2e} over 10000 points, {elapsed:.3}s)",
        status(ok)
    );
    assert!(ok, "worst residual {worst:.2e}, elapsed {elapsed:.3}s");
}

#[test]
fn criterion_02_speed_oracle_equivalence() {
    let start = Instant::now();
    let labeled = [
        (params(2.0, 1.0), 2.0),
        (params(0.5, 0.5), SQRT_2),
        (params(2.0, 0.5), 1.5),
    ];
    let mut worst: f64 = 0.0;
    for (p, expected) in labeled {
        let sol = solve_speed_optimization(p, 100).unwrap();
        worst = worst.max((sol.value - expected).abs());
    }
    for (region, seed) in [(Region::CI, 1u64), (Region::CII, 2), (Region::CIII, 3)] {
        for p in sample_region(region, 50, seed) {
            let d = derived_constants(p);
            let expected = match region {
                Region::CI => d.v,
                Region::CII => SQRT_2,
                Region::CIII => d.starred.unwrap().v_star,
                _ => unreachable!(),
            };
            let sol = solve_speed_optimization(p, 100).unwrap();
            worst = worst.max((sol.value - expected).abs());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-3 && elapsed < 60.0;
    println!(
        "criterion 02 speed oracle equivalence: {} (worst gap {worst:.2e} over 153 points, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "worst gap {worst:.2e}, elapsed {elapsed:.1}s");
}

#[test]
fn criterion_03_bridge_formula() {
    let start = Instant::now();
    let cases = [(1.0, 1.0, 2.0), (2.0, 1.0, 4.0), (0.5, 0.5, 1.0)];
    let mut ok = true;
    let mut detail = String::new();
    for (i, (x1, x2, t)) in cases.into_iter().enumerate() {
        let exact = bridge_prob(x1, x2, t);
        let mc = bridge_prob_mc(x1, x2, t, 512, 100_000, 90 + i as u64);
        let allowance = 3.0 * mc.std_error + 0.01;
        let gap = (mc.estimate - exact).abs();
        ok &= gap <= allowance;
        detail.push_str(&format!(" ({x1},{x2},{t}): |Δ|={gap:.4}≤{allowance:.4}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 60.0;
    println!(
        "criterion 03 bridge formula: {} ({detail}, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "{detail}, elapsed {elapsed:.1}s");
}

#[test]
fn criterion_04_many_to_one_count() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (beta, t, seed) in [(1.0, 2.0, 40u64), (2.0, 1.0, 41)] {
        let expected = expected_transform_count(beta, t);
        let cfg = EngineConfig::new(params(beta, 1.0), t, seed)
            .unwrap()
            .with_retention(Retention::Summary);
        let snaps = run_replications(&cfg, true, 10_000);
        let births: Vec<f64> = snaps.iter().map(|s| s.transform_births as f64).collect();
        let (mean, se) = mean_and_se(&births);
        let pass = (mean - expected).abs() <= 3.0 * se;
        ok &= pass;
        detail.push_str(&format!(
            " (β={beta},T={t}): {mean:.4} vs {expected:.4} ±{:.4}",
            3.0 * se
        ));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 120.0;
    println!(
        "criterion 04 many-to-one count: {} ({detail}, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_05_martingale_means() {
    let start = Instant::now();
    let cfg = EngineConfig::new(params(1.0, 1.0), 4.0, 50).unwrap();
    let snaps = run_replications(&cfg, false, 10_000);
    let mut ok = true;
    let mut detail = String::new();
    for lambda in [0.0, 0.5, 1.0] {
        let ws: Vec<f64> = snaps
            .iter()
            .map(|s| additive_w(s, lambda).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&ws);
        let pass = (mean - 1.0).abs() <= 3.0 * se;
        ok &= pass;
        detail.push_str(&format!(" W({lambda})={mean:.4}±{:.4}", 3.0 * se));
    }
    let zs: Vec<f64> = snaps.iter().map(|s| derivative_z(s).unwrap()).collect();
    let (z_mean, z_se) = mean_and_se(&zs);
    ok &= z_mean.abs() <= 3.0 * z_se;
    detail.push_str(&format!(" Z={z_mean:.4}±{:.4}", 3.0 * z_se));
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 120.0;
    println!(
        "criterion 05 martingale means: {} ({detail}, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "{detail}");
}

/// Shared single-type runs for criteria 6 and 7: medians of M_t at
/// t ∈ {6, 8, 10, 12}, 5000 replications each.
fn singletype_medians() -> &'static Vec<(f64, f64)> {
    static MEDIANS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    MEDIANS.get_or_init(|| {
        [6.0, 8.0, 10.0, 12.0]
            .iter()
            .map(|&t| {
                let cfg = EngineConfig::new(params(1.0, 1.0), t, 60 + t as u64)
                    .unwrap()
                    .with_retention(Retention::Summary);
                let snaps = run_replications(&cfg, false, 5_000);
                let mut maxima: Vec<f64> = snaps.iter().map(|s| s.max_position).collect();
                maxima.sort_by(f64::total_cmp);
                (t, maxima[maxima.len() / 2])
            })
            .collect()
    })
}

#[test]
fn criterion_06_single_type_centering_band() {
    let start = Instant::now();
    let medians = singletype_medians();
    let m = |t: f64| SQRT_2 * t - 1.5 / SQRT_2 * t.ln();
    let mut ok = true;
    let mut detail = String::new();
    let mut offsets = Vec::new();
    for &(t, med) in medians.iter().filter(|(t, _)| *t >= 8.0) {
        let offset = med - m(t);
        offsets.push(offset);
        ok &= (-2.0..=2.0).contains(&offset);
        detail.push_str(&format!(" t={t}: {offset:+.3}"));
    }
    let drift = (offsets[offsets.len() - 1] - offsets[0]).abs();
    ok &= drift < 0.5;
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 900.0;
    println!(
        "criterion 06 centering band: {} ({detail}, drift {drift:.3}, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "{detail}, drift {drift}");
}

#[test]
fn criterion_07_log_correction_fit() {
    let start = Instant::now();
    let medians = singletype_medians();
    let fit = fit_log_correction(medians, Some(SQRT_2)).unwrap();
    let ok = (0.5..=1.7).contains(&fit.log_coeff);
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 07 log-correction fit: {} (s = {:.4} in [0.5, 1.7], brackets 3/(2√2) ≈ 1.0607, {elapsed:.1}s)",
        status(ok),
        fit.log_coeff
    );
    assert!(ok, "fitted s = {}", fit.log_coeff);
}

struct PdeOutcome {
    speed: f64,
    refined_change: f64,
    residual_u: f64,
    dx: f64,
}

fn pde_case(beta: f64, sigma2: f64, with_residual: bool) -> PdeOutcome {
    let p = params(beta, sigma2);
    let dx = 0.1;
    let mut cfg = PdeConfig::auto(p, 60.0, dx);
    if with_residual {
        cfg.store_profiles_from = 30.0;
    }
    let run = solve_coupled(&cfg).unwrap();
    let speed = front_speed(&front_series(&run, Field::U), 30.0, 60.0).unwrap();
    let fine = PdeConfig::auto(p, 60.0, dx / 2.0);
    let fine_run = solve_coupled(&fine).unwrap();
    let fine_speed = front_speed(&front_series(&fine_run, Field::U), 30.0, 60.0).unwrap();
    let residual_u = if with_residual {
        traveling_wave_residual(&run, p, 30.0, 60.0, 15.0)
            .unwrap()
            .l2_u
    } else {
        f64::NAN
    };
    PdeOutcome {
        speed,
        refined_change: ((speed - fine_speed) / fine_speed).abs(),
        residual_u,
        dx,
    }
}

fn pde_results() -> &'static Vec<(f64, f64, f64, PdeOutcome)> {
    static RESULTS: OnceLock<Vec<(f64, f64, f64, PdeOutcome)>> = OnceLock::new();
    RESULTS.get_or_init(|| {
        vec![
            (2.0, 0.5, 1.5, pde_case(2.0, 0.5, true)),
            (2.0, 1.0, 2.0, pde_case(2.0, 1.0, false)),
            (0.5, 0.5, SQRT_2, pde_case(0.5, 0.5, false)),
        ]
    })
}

#[test]
fn criterion_08_anomalous_spreading_pde() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = String::new();
    for (beta, sigma2, expected, outcome) in pde_results() {
        let rel = (outcome.speed - expected).abs() / expected;
        ok &= rel <= 0.03;
        ok &= outcome.refined_change < 0.005;
        detail.push_str(&format!(
            " ({beta},{sigma2}): {:.4} vs {expected:.4} ({:.2}%), refine {:.3}%",
            outcome.speed,
            100.0 * rel,
            100.0 * outcome.refined_change
        ));
    }
    // the anomalous case strictly exceeds the type-2 speed
    let anomalous = &pde_results()[0].3;
    ok &= anomalous.speed > SQRT_2 + 0.02;
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 600.0;
    println!(
        "criterion 08 anomalous spreading: {} ({detail}, anomalous > √2+0.02: {:.4}, {elapsed:.1}s)",
        status(ok),
        anomalous.speed
    );
    assert!(ok, "{detail}");
}

#[test]
fn criterion_09_traveling_wave_residual() {
    let start = Instant::now();
    let outcome = &pde_results()[0].3;
    let budget = 10.0 * outcome.dx * outcome.dx;
    let ok = outcome.residual_u < budget;
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 09 traveling-wave residual: {} (L2 {:.3e} < {budget:.3e}, {elapsed:.1}s)",
        status(ok),
        outcome.residual_u
    );
    assert!(ok, "residual {:.3e} vs {budget:.3e}", outcome.residual_u);
}

#[test]
fn criterion_10_localization_window() {
    let start = Instant::now();
    let p = params(2.0, 0.5);
    let t = 10.0;
    let m = bbm_lab::phase_atlas::table_centering(p).value(t);
    let offset_a = 2.0;
    let ensemble = Ensemble::simulate(
        Provenance::Plain(p),
        true,
        t,
        80,
        1010,
        Some(10.0),
        Retention::AboveLevel(m - offset_a),
        2_000_000_000,
    )
    .unwrap();
    assert!(
        ensemble.summaries.iter().all(|s| s.valid),
        "replication exceeded the particle-event budget"
    );
    let mut fractions = Vec::new();
    for r in [2.0, 4.0, 8.0] {
        let spec = WindowSpec::new(Family::B23Plus, 0.25, r).unwrap();
        fractions.push(localization_fraction(&ensemble, &spec, offset_a).unwrap());
    }
    let monotone = fractions[0] >= fractions[1] && fractions[1] >= fractions[2];
    let small = fractions[2] < 0.2;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = monotone && small && elapsed < 1200.0;
    println!(
        "criterion 10 localization: {} (fractions {:?} at R = 2/4/8, {elapsed:.1}s)",
        status(ok),
        fractions
    );
    assert!(ok, "fractions {fractions:?}, elapsed {elapsed:.1}s");
}

#[test]
fn criterion_11_l_function_limits() {
    let start = Instant::now();
    let case_one = ApproxFamily::new(params(1.5, 0.5), Family::B23Plus, 0.25).unwrap();
    let case_two = ApproxFamily::new(params(1.0, 1.0), Family::P11F3, 0.5).unwrap();
    let ts = [1e4, 1e6, 1e8];
    let mut ok_one = true;
    let mut ok_two_stated = true;
    let mut ok_two_exact = true;
    for &xi in &[0.5, 1.0, 2.0] {
        let rows = l_limit_check(xi, &ts, &case_one).unwrap();
        ok_one &= rows[0].residual_stated > rows[1].residual_stated
            && rows[1].residual_stated > rows[2].residual_stated;
        let rows = l_limit_check(xi, &ts, &case_two).unwrap();
        ok_two_stated &= rows[0].residual_stated > rows[1].residual_stated
            && rows[1].residual_stated > rows[2].residual_stated;
        ok_two_exact &= rows[0].residual_exact > rows[1].residual_exact
            && rows[1].residual_exact > rows[2].residual_exact;
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 11 L-limits case (i) [−(1−σ²)²ξ²]: {} ({elapsed:.3}s)",
        status(ok_one)
    );
    println!(
        "criterion 11 L-limits case (ii) [stated constant −(√2+1)ξ²]: {} — unattainable: \
         exact algebra gives L = −t^{{−h}}u²/((1−p*)t−u) → −2ξ², so the residual against \
         −(√2+1)ξ² converges to (√2−1)ξ² instead of shrinking",
        status(ok_two_stated)
    );
    println!(
        "criterion 11 L-limits case (ii) [exact constant −2ξ²]: {}",
        status(ok_two_exact)
    );
    assert!(ok_one, "case (i) residuals not monotone");
    assert!(
        ok_two_exact,
        "case (ii) exact-constant residuals not monotone"
    );
    assert!(elapsed < 1.0, "elapsed {elapsed:.3}s");
}

#[test]
fn criterion_11_case_two_stated_constant_is_unattainable() {
    // regression lock on the analysis: against −(√2+1)ξ² the residual grows
    // toward (√2−1)ξ² along the horizon grid
    let fam = ApproxFamily::new(params(1.0, 1.0), Family::P11F3, 0.5).unwrap();
    for &xi in &[0.5, 1.0, 2.0] {
        let rows = l_limit_check(xi, &[1e4, 1e6, 1e8, 1e12], &fam).unwrap();
        let last = rows.last().unwrap();
        assert!(
            (last.residual_stated - (SQRT_2 - 1.0) * xi * xi).abs() < 0.1 * xi * xi,
            "xi={xi}: stated-constant residual {:.4} should approach {:.4}",
            last.residual_stated,
            (SQRT_2 - 1.0) * xi * xi
        );
        assert!(
            rows[1].residual_stated >= rows[0].residual_stated
                || rows[2].residual_stated >= rows[1].residual_stated,
            "xi={xi}: residuals unexpectedly shrink toward the stated constant"
        );
    }
    println!("criterion 11 regression lock: PASS (stated constant confirmed unattainable)");
}

#[test]
fn criterion_12_constant_evaluators() {
    let start = Instant::now();
    let c_h1 = ApproxFamily::new(params(1.0, 1.0), Family::P11F1, 1.0)
        .unwrap()
        .c_constant();
    let gap1 = (c_h1 - (1.0 - (-1.0f64).exp())).abs();
    let c_b13 = ApproxFamily::new(params(2.0, 2.0 / 3.0), Family::B13Minus, 0.25)
        .unwrap()
        .c_constant();
    let gap2 = (c_b13 - 0.75).abs();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = gap1 < 1e-12 && gap2 < 1e-10 && elapsed < 1.0;
    println!(
        "criterion 12 constant evaluators: {} (C_h1(1) off by {gap1:.2e}, boundary C_h off by {gap2:.2e}, {elapsed:.3}s)",
        status(ok)
    );
    assert!(ok, "gaps {gap1:.2e}, {gap2:.2e}");
}

#[test]
fn criterion_13_laplace_shape_flatness() {
    let start = Instant::now();
    let rows = laplace_shape(
        params(1.0, 1.0),
        8.0,
        1.6,
        &[-3.0, -2.0, -1.0, 0.0, 1.0],
        0.0, // step test function 1_{y ≥ 0}
        0.1,
        1_200_000,
        130,
    )
    .unwrap();
    let all_confident = rows.iter().all(|r| !r.low_confidence);
    let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let spread = max / min;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = all_confident && spread < 3.0 && elapsed < 900.0;
    println!(
        "criterion 13 Laplace-shape flatness: {} (ratio spread {spread:.3} < 3, {elapsed:.1}s)",
        status(ok)
    );
    assert!(ok, "spread {spread:.3}, confident {all_confident}");
}

#[test]
fn criterion_14_reproducibility_across_threads() {
    let start = Instant::now();
    let digests = |threads: u64, dir: &tempfile::TempDir| {
        let mut cfg = RunConfig::default();
        cfg.out_dir = dir.path().display().to_string();
        cfg.t = 4.0;
        cfg.reps = 256;
        cfg.threads = threads;
        let out = run_command(CommandName::Simulate, None, &cfg).unwrap();
        let text = std::fs::read_to_string(out.manifest_path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["sha256"].as_str().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d8 = tempfile::tempdir().unwrap();
    let h1 = digests(1, &d1);
    let h8 = digests(8, &d8);
    let ok = h1 == h8 && !h1.is_empty();
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "criterion 14 reproducibility: {} ({} outputs bit-identical across 1 and 8 threads, {elapsed:.1}s)",
        status(ok),
        h1.len()
    );
    assert!(ok);
}
