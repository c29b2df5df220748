#![no_main]

use libfuzzer_sys::fuzz_target;
use tmdp::harness::{ConfigFile, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(file) = ConfigFile::parse(text) else {
        return;
    };
    // Keep pathological grids from exhausting memory.
    let points: usize = file
        .sweeps
        .iter()
        .map(|a| a.points.len())
        .fold(1usize, |acc, n| acc.saturating_mul(n));
    if points > 256 {
        return;
    }
    let vars: Vec<String> = file.sweeps.iter().flat_map(|a| a.names.clone()).collect();
    if let Ok(expanded) = file.expand() {
        assert_eq!(expanded.len(), points);
        for point in &expanded {
            let _ = ExperimentConfig::from_map(point, &vars);
        }
    }
});
