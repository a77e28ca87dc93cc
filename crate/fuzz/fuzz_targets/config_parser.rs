#![no_main]

use libfuzzer_sys::fuzz_target;
use paradiag_harness::config::parse_config_text;
use paradiag_harness::{Experiment, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_config_text(text);
    // Anything accepted must survive a describe/resolve round trip.
    if let Ok(cfg) = ExperimentConfig::resolve(Experiment::AdeWr, Some(text), &[]) {
        let back = ExperimentConfig::resolve(Experiment::AdeWr, Some(&cfg.describe()), &[])
            .expect("described configuration parses");
        assert_eq!(back, cfg);
    }
});
