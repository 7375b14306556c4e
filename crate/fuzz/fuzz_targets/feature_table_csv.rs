#![no_main]

use ftgap::decoder::FeatureTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = FeatureTable::read_csv(data) {
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        FeatureTable::read_csv(buf.as_slice()).unwrap();
        let _ = t.zscore();
    }
});
