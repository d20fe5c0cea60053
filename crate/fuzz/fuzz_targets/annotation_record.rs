#![no_main]

use cfplan_core::annotator::{AnnotationRecord, DatasetManifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(r) = AnnotationRecord::from_json(data) {
        let again = AnnotationRecord::from_json(&r.to_json()).expect("record reloads");
        assert_eq!(again.to_json(), r.to_json());
    }
    if let Ok(m) = DatasetManifest::from_json(data) {
        let again = DatasetManifest::from_json(&m.to_json()).expect("manifest reloads");
        assert_eq!(again, m);
    }
});
