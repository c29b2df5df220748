#![no_main]

use libfuzzer_sys::fuzz_target;
use tmdp::harness::AgentSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<AgentSpec>() {
        let again: AgentSpec = spec.to_string().parse().expect("display output parses");
        assert_eq!(again, spec);
    }
});
