#![no_main]

use ftgap::behavior::{load_trials, write_trials};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = load_trials(data) {
        // Anything accepted must survive a write and re-read unchanged.
        let mut buf = Vec::new();
        write_trials(&records, &mut buf).unwrap();
        assert_eq!(load_trials(buf.as_slice()).unwrap(), records);
    }
});
