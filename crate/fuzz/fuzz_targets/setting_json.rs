#![no_main]

use clab::bounds::{self, LevelCoefficients, Setting};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<Setting>(data) {
        if s.validate().is_ok() && s.d <= 16 {
            let k = LevelCoefficients::new(vec![1.0; s.d as usize]).unwrap();
            if let Ok(b) = bounds::tail_bound(&s, &k, 1.0) {
                assert!((0.0..=1.0).contains(&b));
            }
        }
    }
});
