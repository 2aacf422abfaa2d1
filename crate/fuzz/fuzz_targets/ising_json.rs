#![no_main]

use clab::discrete::IsingSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<IsingSpec>(data) {
        if spec.fields.len() <= 10 {
            let _ = spec.build();
        }
    }
});
