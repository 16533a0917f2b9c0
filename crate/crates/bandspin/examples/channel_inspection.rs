//! Inspect the channel model: free-space path loss, steering vectors,
//! per-link norms, UE-UE gains, and the JSON channel dump.
//!
//! ```bash
//! cargo run --release --example channel_inspection
//! ```

use bandspin::channel::{array_response, path_loss, vec_norm, ArrayGeometry, ChannelSet};
use bandspin::harness::channel_dump_json;
use bandspin::prelude::*;
use bandspin::scenario::SPEED_OF_LIGHT;

fn main() -> Result<()> {
    // Path loss at the paper's geometry.
    for (d, f, label) in [
        (500e3, 2.4e9, "nadir satellite, band 1"),
        (500e3 / 60f64.to_radians().sin(), 2.4e9, "60 deg elevation, band 1"),
        (500e3 / 60f64.to_radians().sin(), 1.9e9, "60 deg elevation, band 2"),
        (100.0, 2.4e9, "UE to UE at 100 m, band 1"),
    ] {
        let g = path_loss(d, f)?;
        println!("path loss {label:<28}: {:.3e}  ({:.1} dB)", g, 10.0 * g.log10());
    }
    println!();

    // Steering vector entries are pure phases; nadir steering is flat.
    let array = ArrayGeometry::upa(16, 16, SPEED_OF_LIGHT / (2.0 * 2.4e9));
    let nadir = array_response(&array, 2.4e9, 0.0, std::f64::consts::FRAC_PI_2)?;
    println!("nadir steering entry 0:   {:.3}", nadir[0]);
    let slant = array_response(&array, 2.4e9, 0.4, 1.0)?;
    println!("slant steering entry 17:  {:.3} (|.| = {:.6})", slant[17], slant[17].norm());
    println!();

    // Full snapshot: channel norms bundle path loss and array gain.
    let mut config = paper_default_config(2);
    config.ue_count = 4;
    let scenario = build_scenario(&config, 3)?;
    let channels = ChannelSet::synthesize(&scenario)?;
    println!("per-link channel norms (band 1):");
    for k in 0..scenario.ue_count() {
        for j in 0..scenario.sat_count() {
            let n = vec_norm(channels.sat_ue(k, j, 0));
            print!("  h[{k}][{j}] = {n:.3e}");
        }
        println!();
    }
    println!();

    let json = channel_dump_json(&scenario, &channels);
    println!("channel dump: {} bytes of JSON; first entries:", json.len());
    for line in json.lines().take(12) {
        println!("  {line}");
    }
    Ok(())
}
