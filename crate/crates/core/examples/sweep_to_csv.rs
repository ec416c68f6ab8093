//! Run an experiment configuration in-process and write its CSV outputs.
use critsense::experiment::{parse_config, run, write_outputs};

fn main() {
    let config = r#"{
        "scenario": "channel_sweep",
        "channel": { "kind": "bitflip_x" },
        "probes": ["critical", "ghz"],
        "sizes": [4, 6],
        "p_values": [0.1, 0.3],
        "seed": 1
    }"#;
    let resolved = parse_config(config).and_then(|c| c.resolve(None, None)).unwrap_or_else(|e| panic!("{e}"));
    let rows = run(&resolved).unwrap_or_else(|e| panic!("{e}"));
    for r in &rows {
        println!("{:>6} L={} p={:?}: QFI {:.6} (formula {:.6})", r.probe, r.l, r.p, r.value, r.reference.unwrap_or(f64::NAN));
    }
    let dir = std::env::temp_dir().join("critsense-example");
    let files = write_outputs(&rows, resolved.scenario, &dir).unwrap_or_else(|e| panic!("{e}"));
    println!("wrote {}", files.csv.display());
}
