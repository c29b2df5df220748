#![no_main]

use libfuzzer_sys::fuzz_target;
use tmdp::harness::{read_csv_from, write_csv_to};

fuzz_target!(|data: &[u8]| {
    let Ok(records) = read_csv_from(data) else {
        return;
    };
    let finite = records.iter().all(|r| {
        r.rewards
            .iter()
            .chain(&r.cum_rewards)
            .chain(&r.epsilons)
            .chain(r.weights.iter().flatten())
            .all(|x| x.is_finite())
    });
    let mut buf = Vec::new();
    write_csv_to(&records, &mut buf).expect("writing to memory succeeds");
    let again = read_csv_from(buf.as_slice()).expect("own output parses");
    if finite {
        assert_eq!(again, records);
    }
});
