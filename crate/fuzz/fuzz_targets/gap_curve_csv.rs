#![no_main]

use ftgap::metrics::{aug_norm, aug_pos, onset_t, AugPosConfig, GapCurve, OnsetConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(c) = GapCurve::read_csv(data) {
        let _ = aug_pos(&c, &AugPosConfig::default());
        let _ = aug_norm(&c);
        let _ = onset_t(&c, &OnsetConfig::default());
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        GapCurve::read_csv(buf.as_slice()).unwrap();
    }
});
