use super::run::RunRecord;

/// Centered simple moving average; windows shrink at the edges.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let before = (window - 1) / 2;
    let after = window - 1 - before;
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    for x in series {
        prefix.push(prefix.last().unwrap() + x);
    }
    (0..series.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after + 1).min(series.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Rewards of `player` for one seed, in step order.
pub fn reward_series(records: &[RunRecord], seed: u64, player: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.seed == seed)
        .map(|r| r.rewards[player])
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Mean reward of `player` over the final `last` records of every seed, in
/// the order seeds first appear.
pub fn tail_means(records: &[RunRecord], player: usize, last: usize) -> Vec<f64> {
    let mut seeds: Vec<u64> = Vec::new();
    for r in records {
        if !seeds.contains(&r.seed) {
            seeds.push(r.seed);
        }
    }
    seeds
        .into_iter()
        .map(|s| {
            let series = reward_series(records, s, player);
            mean(&series[series.len().saturating_sub(last)..])
        })
        .collect()
}
