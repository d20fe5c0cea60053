#![no_main]

use cfplan_core::scenario::{load_scenario, write_scenario, LoadOptions, ScenarioFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    for strict in [false, true] {
        let Ok(loaded) = load_scenario(data, ScenarioFormat::Canonical, LoadOptions { strict }) else {
            continue;
        };
        // A loaded scenario must survive its own canonical form unchanged.
        let bytes = write_scenario(&loaded.scenario);
        let again = load_scenario(&bytes, ScenarioFormat::Canonical, LoadOptions { strict: true })
            .expect("canonical output reloads");
        assert_eq!(again.scenario, loaded.scenario);
    }
});
