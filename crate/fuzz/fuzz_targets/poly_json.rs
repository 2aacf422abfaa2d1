#![no_main]

use clab::calculus::PolyFunction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(f) = serde_json::from_slice::<PolyFunction>(data) {
        if f.nvars() <= 64 {
            let x = vec![0.5; f.nvars()];
            let _ = f.eval(&x);
            let _ = f.gradient(&x);
        }
    }
});
