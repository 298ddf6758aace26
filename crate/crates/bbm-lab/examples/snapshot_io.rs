//! Snapshot serialization: columnar CSV and the compact binary format.
//!
//! ```text
//! cargo run --release --example snapshot_io
//! ```

use bbm_lab::engine::io::{read_binary, read_csv, write_binary, write_csv};
use bbm_lab::engine::{simulate_two_type, EngineConfig};
use bbm_lab::phase_atlas::Params;

fn main() {
    let cfg = EngineConfig::new(Params::new(1.2, 0.8).unwrap(), 3.0, 2718).unwrap();
    let snap = simulate_two_type(&cfg);
    println!(
        "snapshot: {} type-1 + {} type-2 particles, max {:.4}",
        snap.count_type1, snap.count_type2, snap.max_position
    );

    let mut csv = Vec::new();
    write_csv(&snap.particles, &mut csv).unwrap();
    println!("\nfirst CSV rows:");
    for line in String::from_utf8_lossy(&csv).lines().take(4) {
        println!("  {line}");
    }
    let back = read_csv(csv.as_slice()).unwrap();
    assert_eq!(back, snap.particles);

    let mut bin = Vec::new();
    write_binary(&snap.particles, &mut bin).unwrap();
    let back = read_binary(bin.as_slice()).unwrap();
    assert_eq!(back, snap.particles);
    println!(
        "\nbinary form: {} bytes (16-byte magic + count + 4 little-endian f64 per particle)",
        bin.len()
    );
    println!("round trips are exact in both formats");
}
