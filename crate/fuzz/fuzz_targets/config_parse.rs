#![no_main]

use libfuzzer_sys::fuzz_target;

use anilap_cli::ExperimentConfig;

// Arbitrary text must yield a config or an error, never a panic. Accepted
// configs must also survive the derived accessors the runner calls first.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let _ = cfg.kernel();
        let _ = cfg.exterior();
        let _ = cfg.q();
        let _ = cfg.experiment.name();
    }
});
