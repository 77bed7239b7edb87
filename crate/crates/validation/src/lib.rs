//! Independent reference implementations and synthetic corpora.
//!
//! Everything here is written without calling into the code it checks:
//! the Pressure Index formula is transcribed term by term, transition
//! counts are recounted with plain nested loops, and the synthetic chains
//! have known order and known phase behaviour. The published tables that
//! the acceptance run compares against are transcribed here too.

use std::collections::BTreeMap;

use chasepi_core::ingest::PiSequence;
use chasepi_core::pi::ResourceTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wicket weights by batting position, typed in separately from the core crate.
pub const WEIGHTS: [f64; 11] = [1.30, 1.35, 1.40, 1.45, 1.38, 1.18, 0.98, 0.79, 0.59, 0.39, 0.19];

/// PI for a full twenty-over chase, straight from the formula:
/// `(CRRR / IRRR) * (exp(RU / 100) + exp(sum w / 11)) / 2`, floored at 0.
/// `None` once every ball has been bowled.
pub fn literal_pi(target: u32, runs: u32, balls: u32, dismissed: &[u8], table: &ResourceTable) -> Option<f64> {
    if runs >= target {
        return Some(0.0);
    }
    if balls >= 120 {
        return None;
    }
    let irrr = target as f64 / 20.0;
    let overs_left = (120 - balls) as f64 / 6.0;
    let crrr = (target - runs) as f64 / overs_left;
    let ru = 100.0 - table.remaining_pct(120 - balls, dismissed.len());
    let mut w = 0.0;
    for &p in dismissed {
        w += WEIGHTS[p as usize - 1];
    }
    let pi = crrr / irrr * ((ru / 100.0).exp() + (w / 11.0).exp()) / 2.0;
    Some(if pi < 0.0 { 0.0 } else { pi })
}

/// Grid cell of `x`, with every value after the first zero cell forced to zero.
pub fn naive_cells(values: &[f64], delta: f64) -> Vec<u32> {
    let mut out = Vec::new();
    let mut dead = false;
    for &x in values {
        let c = if dead { 0 } else { (x / delta + 0.5 + 1e-9).floor() as u32 };
        if c == 0 {
            dead = true;
        }
        out.push(c);
    }
    out
}

/// `(state tuple, next) -> count` by looping over every start position.
pub fn naive_counts(seqs: &[PiSequence], k: usize, delta: f64) -> BTreeMap<(Vec<u32>, u32), u64> {
    let mut counts = BTreeMap::new();
    for s in seqs {
        let c = naive_cells(&s.values, delta);
        let mut start = 0;
        while start + k < c.len() {
            let mut state = Vec::new();
            for j in 0..k {
                state.push(c[start + j]);
            }
            *counts.entry((state, c[start + k])).or_insert(0) += 1;
            start += 1;
        }
    }
    counts
}

/// Sequences from an order-`k` chain on `n_states` values `0.1, 0.2, ...`.
/// With probability `signal` the next state is `(sum of the last k + 1) mod
/// n_states`, otherwise it is uniform; dropping any lag loses the signal.
pub fn order_k_corpus(k: usize, n: usize, len: usize, n_states: u32, signal: f64, seed: u64) -> Vec<PiSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut st: Vec<u32> = (0..k).map(|_| rng.random_range(0..n_states)).collect();
            while st.len() < len {
                let next = if rng.random_bool(signal) {
                    (st[st.len() - k..].iter().sum::<u32>() + 1) % n_states
                } else {
                    rng.random_range(0..n_states)
                };
                st.push(next);
            }
            let values = st.iter().map(|&s| (s + 1) as f64 / 10.0).collect();
            PiSequence::from_values(format!("k{k}-{i}"), values)
        })
        .collect()
}

/// Integer random walks in steps of 0.1 that drift up in the powerplay,
/// down through the middle overs and sharply up at the death.
pub fn phase_corpus(n: usize, seed: u64, prefix: &str) -> Vec<PiSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut x: i64 = 10;
            let values = (1..=20u32)
                .map(|over| {
                    let drift = match over {
                        1..=6 => 1,
                        7..=16 => -1,
                        _ => 3,
                    };
                    x = (x + drift + rng.random_range(-1..=1)).clamp(1, 60);
                    x as f64 / 10.0
                })
                .collect();
            PiSequence::from_values(format!("{prefix}{i}"), values)
        })
        .collect()
}

/// Continuous multiplicative random walks, occasionally absorbed at zero.
pub fn continuous_corpus(n: usize, seed: u64) -> Vec<PiSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut x = 1.0f64;
            let mut values = Vec::with_capacity(20);
            for _ in 0..20 {
                if x > 0.0 {
                    x *= (rng.random_range(-0.18..0.2f64)).exp();
                    if x < 0.45 && rng.random_bool(0.3) {
                        x = 0.0;
                    }
                }
                values.push(x);
            }
            PiSequence::from_values(format!("c{i}"), values)
        })
        .collect()
}

/// Over, cumulative runs, cumulative wickets and published actual PI
/// (two-decimal column) of the Pakistan chase against West Indies, 3 April 2018.
pub const PAK_V_WI: [(u32, u32, u32, f64); 17] = [
    (1, 5, 0, 1.04),
    (2, 15, 0, 1.04),
    (3, 32, 0, 0.99),
    (4, 51, 0, 0.91),
    (5, 57, 0, 0.93),
    (6, 62, 1, 1.04),
    (7, 71, 1, 1.03),
    (8, 79, 1, 1.03),
    (9, 86, 1, 1.05),
    (10, 89, 1, 1.13),
    (11, 98, 1, 1.11),
    (12, 107, 1, 1.08),
    (13, 114, 2, 1.15),
    (14, 120, 2, 1.17),
    (15, 132, 2, 0.83),
    (16, 139, 2, 0.62),
    (17, 154, 2, 0.0),
];

/// The same for Chennai Super Kings against Delhi Capitals, 10 October 2021.
pub const CSK_V_DC: [(u32, u32, u32, f64); 20] = [
    (1, 8, 1, 1.08),
    (2, 16, 1, 1.11),
    (3, 20, 1, 1.24),
    (4, 34, 1, 1.13),
    (5, 39, 1, 1.19),
    (6, 59, 1, 1.14),
    (7, 64, 1, 1.21),
    (8, 68, 1, 1.30),
    (9, 75, 1, 1.36),
    (10, 81, 1, 1.45),
    (11, 94, 1, 1.43),
    (12, 99, 1, 1.56),
    (13, 111, 1, 1.51),
    (14, 117, 3, 1.69),
    (15, 121, 4, 2.29),
    (16, 129, 4, 2.49),
    (17, 138, 4, 2.68),
    (18, 149, 4, 2.85),
    (19, 160, 5, 3.39),
    (20, 173, 6, 0.0),
];

/// Published gamma shape and rate per phase.
pub const GAMMA_PARAMS: [(&str, f64, f64); 3] = [
    ("powerplay", 38.276, 28.931),
    ("middle", 18.447, 10.62),
    ("death", 3.667, 1.286),
];

/// Published mean PI per phase.
pub const PHASE_MEANS: [f64; 3] = [1.323, 1.740, 2.859];

/// Zone recommendations per phase and PI band:
/// `(phase, lo, hi, home win %, home zone, away win %, away zone)`, `hi < 0` meaning unbounded.
pub const ZONE_TABLE: [(&str, f64, f64, f64, &str, f64, &str); 15] = [
    ("powerplay", 0.0, 0.5, 100.0, "target", 100.0, "target"),
    ("powerplay", 0.5, 1.0, 73.7, "acceptable", 62.2, "acceptable"),
    ("powerplay", 1.0, 1.5, 42.7, "risky", 36.6, "avoid"),
    ("powerplay", 1.5, 2.5, 13.9, "avoid", 10.5, "avoid"),
    ("powerplay", 2.5, -1.0, 0.0, "avoid", 0.0, "avoid"),
    ("middle", 0.0, 0.5, 100.0, "target", 100.0, "target"),
    ("middle", 0.5, 1.0, 100.0, "target", 98.4, "target"),
    ("middle", 1.0, 1.5, 75.7, "acceptable", 70.7, "acceptable"),
    ("middle", 1.5, 2.5, 43.6, "risky", 35.9, "avoid"),
    ("middle", 2.5, -1.0, 6.9, "avoid", 3.7, "avoid"),
    ("death", 0.0, 0.5, 100.0, "target", 100.0, "target"),
    ("death", 0.5, 1.0, 100.0, "target", 96.8, "target"),
    ("death", 1.0, 1.5, 87.3, "acceptable", 70.2, "acceptable"),
    ("death", 1.5, 2.5, 75.9, "acceptable", 68.2, "acceptable"),
    ("death", 2.5, -1.0, 11.2, "avoid", 8.1, "avoid"),
];
