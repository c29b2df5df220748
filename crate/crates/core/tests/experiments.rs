//! Shorter end-to-end behaviours that complement the acceptance suite.

use tmdp::harness::{mean, run, tail_means, ExperimentConfig};

fn dm_and_opponent(text: &str, last: usize) -> (f64, f64) {
    let out = run(&ExperimentConfig::parse(text).unwrap()).unwrap();
    (
        mean(&tail_means(&out.records, 0, last)),
        mean(&tail_means(&out.records, 1, last)),
    )
}

#[test]
fn wolf_exploits_fpq_in_chicken() {
    let (fpq, wolf) = dm_and_opponent(
        "env = ic\nagent_a = fpq:alpha=0.3,gamma=0.96,eps=0.1,decay=0.995,every=10\nagent_b = wolf\nsteps = 20000\nseeds = 0..5\n",
        2000,
    );
    assert!(wolf >= fpq, "wolf {wolf} vs fpq {fpq}");
}

#[test]
fn independent_q_is_exploited_in_the_room() {
    let (q, _) = dm_and_opponent(
        "env = fof-grid\nagent_a = q:alpha=0.05,gamma=0.8,eps=0.99,decay=0.995,every=10\nagent_b = smoother\nepisodes = 3000\nseeds = 0..3\n",
        300,
    );
    let (level2, _) = dm_and_opponent(
        "env = fof-grid\nagent_a = level2:alpha=0.1,inner_alpha=0.05,gamma=0.8,eps=0.01,inner_eps=0.01,forget=0.8\nagent_b = smoother\nepisodes = 3000\nseeds = 0..3\n",
        300,
    );
    assert!(q < 0.0, "independent q {q}");
    assert!(level2 > 30.0, "level-2 {level2}");
}

#[test]
fn mixture_stays_positive_in_the_room() {
    let (mix, _) = dm_and_opponent(
        "env = fof-grid\nagent_a = mixture:alpha=0.1,inner_alpha=0.05,gamma=0.8,eps=0.01,inner_eps=0.01,forget=0.8,levels=1+2\nagent_b = smoother\nepisodes = 5000\nseeds = 0..3\n",
        500,
    );
    assert!(mix > 0.0, "mixture {mix}");
}

#[test]
fn per_step_opponent_view_fails_in_the_room() {
    // Modelling the adversary as re-choosing its target in every cell makes
    // the decision maker chase a target that keeps moving.
    let (stepwise, _) = dm_and_opponent(
        "env = fof-grid\nagent_a = level2:alpha=0.1,inner_alpha=0.05,gamma=0.8,eps=0.01,inner_eps=0.01,forget=0.8,view=step\nagent_b = smoother\nepisodes = 3000\nseeds = 0..3\n",
        300,
    );
    assert!(stepwise < 0.0, "step view {stepwise}");
}

#[test]
fn memory_one_state_lets_fpq_cooperate_with_tft() {
    let (mem1, _) = dm_and_opponent(
        "env = ipd-mem1\nagent_a = fpq:alpha=0.05,gamma=0.96,eps=0.1,decay=0.995,every=10,belief=conditioned\nagent_b = tft\nsteps = 10000\nseeds = 0..3\n",
        1000,
    );
    assert!((mem1 + 1.0).abs() < 0.15, "memory-one {mem1}");
}
