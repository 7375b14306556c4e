#![no_main]

use ftgap_cli::config::FileConfig;
use libfuzzer_sys::fuzz_target;

// First byte picks the syntax: odd for a JSON manifest, even for TOML.
fuzz_target!(|data: &[u8]| {
    let Some((&mode, rest)) = data.split_first() else { return };
    let Ok(text) = std::str::from_utf8(rest) else { return };
    let _ = FileConfig::parse(text, mode % 2 == 1);
});
