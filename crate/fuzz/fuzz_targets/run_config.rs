#![no_main]

use clab_cli::config::{parse, BoundConfig, DiscreteConfig, NormsConfig, SampleConfig, VerifyConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse::<NormsConfig>(text);
    let _ = parse::<SampleConfig>(text);
    let _ = parse::<VerifyConfig>(text);
    let _ = parse::<DiscreteConfig>(text);
    if let Ok(BoundConfig::Tail { setting, grid, .. }) = parse::<BoundConfig>(text) {
        let _ = setting.build();
        let _ = grid.build();
    }
});
