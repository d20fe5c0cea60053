#![no_main]

use cfplan_core::scenario::{load_scenario, write_scenario, LoadOptions, ScenarioFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(loaded) = load_scenario(data, ScenarioFormat::DeepaccidentLog, LoadOptions::default()) else {
        return;
    };
    let bytes = write_scenario(&loaded.scenario);
    let again = load_scenario(&bytes, ScenarioFormat::Canonical, LoadOptions { strict: true })
        .expect("converted log reloads as canonical");
    assert_eq!(again.scenario, loaded.scenario);
});
