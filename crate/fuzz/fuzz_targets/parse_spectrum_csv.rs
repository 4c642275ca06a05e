#![no_main]

use feitsim_core::spectroscopy::parse_spectrum_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_spectrum_csv(text);
    }
});
