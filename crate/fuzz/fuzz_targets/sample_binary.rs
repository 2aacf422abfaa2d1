#![no_main]

use clab::samplers::decode_binary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_binary(data) {
        assert_eq!(m.data.len(), m.count * m.dim);
    }
});
