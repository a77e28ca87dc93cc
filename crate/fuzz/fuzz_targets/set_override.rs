#![no_main]

use libfuzzer_sys::fuzz_target;
use paradiag_harness::config::parse_override;
use paradiag_harness::{Experiment, ExperimentConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((key, value)) = parse_override(text) else { return };
    let mut cfg = ExperimentConfig::defaults(Experiment::WaveGmres);
    if cfg.set(&key, &value).is_ok() {
        // The printed form of an accepted value sets the same state.
        let printed = cfg.get(&key).expect("settable keys are readable");
        let mut again = ExperimentConfig::defaults(Experiment::WaveGmres);
        again.set(&key, &printed).expect("printed value parses");
        assert_eq!(again, cfg);
    }
});
