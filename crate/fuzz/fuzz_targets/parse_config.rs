#![no_main]

use feitsim_core::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(config) = parse_config(text) {
        // anything accepted must render to text that parses again
        let _ = parse_config(&config.render());
    }
});
