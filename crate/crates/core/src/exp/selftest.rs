//! Invariant suites runnable from the command line: gradient checks,
//! aggregation algebra, wire round trips and simulator conservation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::ActionSpace;
use crate::federation::{aggregate_mean, aggregate_soft};
use crate::nn::gradcheck::{check, random_case};
use crate::nn::{deserialize, serialize, NetSpec, ParamSet};
use crate::sim::{SimConfig, World};

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// Finite-difference check on `cases` random networks (up to 3 layers,
/// width 16), central step 1e-3, tolerance 1e-4.
pub fn gradcheck(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for _ in 0..cases {
        let (spec, p, x, up) = random_case(&mut rng, 3, 16);
        let r = check(&spec, &p, &x, &up, 1e-3);
        worst = worst.max(r.max_rel_error);
        params += r.checked;
    }
    Check::new(
        "gradcheck",
        worst <= 1e-4,
        format!("{cases} networks, {params} parameters, max relative error {worst:.3e}"),
    )
}

fn random_params(rng: &mut ChaCha8Rng) -> ParamSet {
    let width = rng.random_range(1..=8);
    let spec = NetSpec::new(rng.random_range(1..=8), &[width], rng.random_range(1..=4), crate::nn::Head::Values);
    let mut p = ParamSet::zeros(&spec);
    for v in p.values_mut() {
        *v = f32::from_bits(rng.random::<u32>());
    }
    p
}

/// Soft-blend endpoints and bounds, a hand-computed three-agent chain and
/// the mean against a duplicate evaluation.
pub fn aggregation(trials: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = NetSpec::new(3, &[4], 2, crate::nn::Head::Values);
    let mut failures = Vec::new();
    for _ in 0..trials {
        let mut g = ParamSet::zeros(&spec);
        let mut l = ParamSet::zeros(&spec);
        for (a, b) in g.values_mut().iter_mut().zip(l.values_mut()) {
            *a = rng.random_range(-10.0..10.0);
            *b = rng.random_range(-10.0..10.0);
        }
        let eps = rng.random_range(0.0..=1.0);
        let Ok(one) = aggregate_soft(&g, &l, 1.0) else {
            return Check::new("aggregation", false, "layout error".into());
        };
        let zero = aggregate_soft(&g, &l, 0.0).expect("same layout");
        let mid = aggregate_soft(&g, &l, eps).expect("same layout");
        if !one.bit_eq(&l) || !zero.bit_eq(&g) {
            failures.push("endpoint");
        }
        let bounded = mid
            .values()
            .iter()
            .zip(g.values().iter().zip(l.values()))
            .all(|(&m, (&a, &b))| a.min(b) <= m && m <= a.max(b));
        if !bounded {
            failures.push("bounds");
        }
        let locals = [&g, &l, &mid];
        let mean = aggregate_mean(&locals).expect("same layout");
        let again = aggregate_mean(&locals).expect("same layout");
        let exact = mean.values().iter().enumerate().all(|(i, &m)| {
            let s = f64::from(g.values()[i]) + f64::from(l.values()[i]) + f64::from(mid.values()[i]);
            m == (s / 3.0) as f32
        });
        if !(exact && mean.bit_eq(&again)) {
            failures.push("mean");
        }
    }
    // scalar chain: global 0, locals 1, 2, 3 in id order at eps 0.5
    let scalar = NetSpec::new(1, &[], 1, crate::nn::Head::Values);
    let mut glob = ParamSet::zeros(&scalar);
    for local in [1.0f32, 2.0, 3.0] {
        let mut l = ParamSet::zeros(&scalar);
        l.values_mut().fill(local);
        glob = aggregate_soft(&glob, &l, 0.5).expect("same layout");
    }
    if glob.values() != [2.125, 2.125] {
        failures.push("chain");
    }
    failures.dedup();
    Check::new(
        "aggregation",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{trials} trials and the 3-agent chain")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

/// Serialize then deserialize `n` random parameter sets, comparing bits.
pub fn wire(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..n {
        let p = random_params(&mut rng);
        match deserialize(&serialize(&p)) {
            Ok(q) if q.bit_eq(&p) => {}
            _ => bad += 1,
        }
    }
    Check::new("wire", bad == 0, format!("{n} parameter sets, {bad} mismatches"))
}

/// Runs the default topology for `ticks` ticks per seed with random
/// actions, checking packet conservation after every tick.
pub fn conservation(ticks: usize, seeds: &[u64]) -> Check {
    let cfg = SimConfig::default();
    let actions = ActionSpace::new(&cfg).size();
    let mut violations = 0u64;
    let mut generated = 0u64;
    for &seed in seeds {
        let mut world = match World::new(cfg.clone(), seed) {
            Ok(w) => w,
            Err(e) => return Check::new("conservation", false, e.to_string()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
        for _ in 0..ticks {
            if let Err(e) = world.simulate_tick(&mut |_, _, _| rng.random_range(0..actions)) {
                return Check::new("conservation", false, e.to_string());
            }
            if !world.conserved() {
                violations += 1;
            }
        }
        generated += world.counters().generated;
    }
    Check::new(
        "conservation",
        violations == 0,
        format!(
            "{} seeds x {ticks} ticks, {generated} packets, {violations} violations",
            seeds.len()
        ),
    )
}

/// Every suite at its command-line size.
pub fn all(seed: u64) -> Vec<Check> {
    vec![
        gradcheck(50, seed),
        aggregation(200, seed),
        wire(10_000, seed),
        conservation(2_000, &[seed, seed + 1]),
    ]
}
