#![no_main]

use clab::tensor::{self, Tensor};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = serde_json::from_slice::<Tensor>(data) {
        assert_eq!(t.entries().len(), t.dim().pow(t.order() as u32));
        let _ = tensor::hs_norm(&t);
    }
});
