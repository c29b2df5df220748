#![no_main]

use libfuzzer_sys::fuzz_target;
use tmdp::envs::{Environment, GridWorld, GridWorldSpec, RewardScaling};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(spec) = GridWorldSpec::parse(text) else {
        return;
    };
    let again = GridWorldSpec::parse(&spec.to_string()).expect("rendered layout parses");
    assert_eq!(again, spec);
    if let Ok(mut world) = GridWorld::new(spec, RewardScaling::Minimax) {
        world.reset();
        for (i, b) in data.iter().enumerate().take(64) {
            let e = world
                .step(usize::from(*b % 4), &[i % 2])
                .expect("valid moves step");
            if e.terminal {
                world.reset();
            }
        }
    }
});
