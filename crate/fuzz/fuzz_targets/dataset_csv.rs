#![no_main]

use ftgap::memprobe::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(d) = Dataset::read_csv(data) {
        assert_eq!(d.x.len(), d.y.len());
        assert!(d.y.iter().all(|&c| c < d.n_classes));
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        Dataset::read_csv(buf.as_slice()).unwrap();
    }
});
