#![no_main]

use clab::discrete::FiniteProductSpace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = serde_json::from_slice::<FiniteProductSpace>(data) {
        let total: f64 = s.joint().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
        for i in 0..s.n() {
            let _ = s.marginal(i);
        }
    }
});
