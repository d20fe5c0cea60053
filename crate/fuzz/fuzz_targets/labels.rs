#![no_main]

use cfplan_core::annotator::PredictedBehavior;
use cfplan_core::kinematics::{Behavior, MetaAction};
use cfplan_core::risk::RiskClass;
use cfplan_core::scenario::{AgentCategory, CameraName};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for line in text.lines() {
        if let Some(a) = MetaAction::parse(line) {
            assert_eq!(MetaAction::parse(&a.key()), Some(a));
        }
        if let Some(b) = Behavior::parse(line) {
            assert_eq!(Behavior::parse(b.as_str()), Some(b));
        }
        if let Some(p) = PredictedBehavior::parse(line) {
            assert_eq!(PredictedBehavior::parse(p.as_str()), Some(p));
        }
        if let Some(r) = RiskClass::parse(line) {
            assert_eq!(RiskClass::parse(r.as_str()), Some(r));
        }
        if let Some(c) = AgentCategory::parse(line) {
            assert_eq!(AgentCategory::parse(c.as_str()), Some(c));
        }
        if let Some(c) = CameraName::parse(line) {
            assert_eq!(CameraName::parse(c.as_str()), Some(c));
        }
    }
});
