#![no_main]

use cfplan_core::eval::{parse_response, StageStatus};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let r = parse_response(&text);
    assert_eq!(r.raw_text, text);
    assert_eq!(r.stage3.is_some(), r.status[2] == StageStatus::Ok);
    assert!(r.stage4.is_empty() || r.stage4.len() == 9);
});
