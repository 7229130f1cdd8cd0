//! Config-driven runs with manifests, and the binary measure format.
//!
//! ```bash
//! cargo run --release --example config_runs
//! ```

use sumprodlab::lab::{
    load_measure, run_experiment, store_measure, synth_measure, ExperimentConfig, ExperimentKind, Family, MeasureSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("sumprodlab-config-runs");
    let spec = MeasureSpec::new(1, 12, Family::Cantor { ratio: 1.0 / 3.0, depth: 8 });

    let mu = synth_measure(&spec)?;
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("cantor.gmes");
    store_measure(&mu, &path)?;
    assert_eq!(load_measure(&path)?, mu);
    println!("stored {} cells to {}", mu.len(), path.display());

    let mut cfg = ExperimentConfig::new(ExperimentKind::Nonconc);
    cfg.measure = Some(spec);
    cfg.scales = Some((3..=9).map(|j| 2f64.powi(-j)).collect());
    println!("config:\n{}", cfg.to_json());
    let out = run_experiment(&cfg, dir.join("nonconc"))?;
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!("summary: {}", serde_json::to_string(&out.summary)?);
    Ok(())
}
