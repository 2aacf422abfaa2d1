#![no_main]

use clab::samplers::read_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_csv(data) {
        assert_eq!(m.data.len(), m.count * m.dim);
    }
});
