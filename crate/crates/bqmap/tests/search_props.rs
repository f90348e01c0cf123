//! Search-level properties that cut across modules: soundness of the
//! pruning certificates, uniqueness of the sink, stability of acceptance
//! under budget growth, and the growth rate of explored values.

use bqmap::algebra::{
    apply_theta, derived_constants, vertex_residual, Color, MarkoffTriple, MuParams,
};
use bqmap::bq::{bq_search, descend, BqVerdict, DescentOutcome, SearchBudget, Tolerances};
use bqmap::quartic::solve_quadratic;
use bqmap::realcase::construct_real_seed_auto;
use bqmap::tree::{base_state, fibonacci_weight, step};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn solve_z(x: Complex64, y: Complex64, mu: MuParams, second: bool) -> Complex64 {
    let b = x * y - mu.r;
    let c = x * x + y * y - mu.p * x - mu.q * y - mu.s;
    solve_quadratic(b, c)[if second { 1 } else { 0 }]
}

/// Exhaustively expand the subtree beyond a directed edge to the given
/// depth, asserting that every (finite) region value stays above `level`.
/// Branches whose values overflow the float range are past any threshold
/// and stop there.
fn assert_nothing_small_beyond(
    triple: MarkoffTriple,
    mu: MuParams,
    color: Color,
    level: f64,
    depth: usize,
) {
    let crossed = apply_theta(triple, mu, color);
    let v = crossed.coord(color);
    if !v.re.is_finite() || !v.im.is_finite() {
        return;
    }
    assert!(
        v.norm() > level,
        "value {v} at modulus <= {level} found beyond a certified edge"
    );
    if depth == 0 {
        return;
    }
    for out in Color::ALL {
        if out != color {
            assert_nothing_small_beyond(crossed, mu, out, level, depth - 1);
        }
    }
}

#[test]
fn certified_pruning_is_sound() {
    // At p = q = r = 0 the thresholds reduce to the plain case 2 + alpha = 2.
    // s stays outside [4, 20]: that band is the ergodic one and admits no
    // accepted maps to sample.
    let mu = MuParams::real(0.0, 0.0, 0.0, 200.0);
    let level = derived_constants(mu).unwrap().big_l;
    let mut rng = ChaCha8Rng::seed_from_u64(211);
    let budget = SearchBudget {
        max_descent_steps: 2_000,
        max_vertices: 4_000,
    };
    let mut accepted = 0;
    let mut tried = 0;
    while accepted < 100 {
        tried += 1;
        assert!(tried < 10_000, "not enough accepted samples");
        let sx = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let sy = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let x = cx(sx * rng.gen_range(4.0..8.0), rng.gen_range(-0.5..0.5));
        let y = cx(sy * rng.gen_range(4.0..8.0), rng.gen_range(-0.5..0.5));
        let z = solve_z(x, y, mu, false);
        let t = MarkoffTriple::new(x, y, z);
        if vertex_residual(t, mu).norm() > 1e-8 {
            continue;
        }
        let report = match bq_search(t, mu, Tolerances::default(), budget, 0.0) {
            Ok(r) => r,
            Err(_) => continue,
        };
        if !matches!(report.verdict, BqVerdict::Accepted { .. }) {
            continue;
        }
        accepted += 1;
        // spot check a handful of certificates per run
        let mut edges: Vec<_> = report.pruned_edges.clone();
        while edges.len() > 5 {
            let k = rng.gen_range(0..edges.len());
            edges.swap_remove(k);
        }
        for (state, color) in &edges {
            assert_nothing_small_beyond(state.triple, mu, *color, level, 12);
        }
    }
}

#[test]
fn sink_is_unique_across_starting_vertices() {
    // A map whose region values all exceed 2 + alpha has a unique sink;
    // descents from scattered starting vertices must agree on it.
    let mu = MuParams::real(0.0, 0.0, 0.0, 200.0);
    let t = MarkoffTriple::real(5.0, 5.0, 5.0);
    let mut rng = ChaCha8Rng::seed_from_u64(223);
    let mut sink_slopes = None;
    let mut starts = 0;
    while starts < 10 {
        // wander up the tree to a random distinct vertex
        let mut s = base_state(t, mu);
        let walk_len = rng.gen_range(1..8);
        for _ in 0..walk_len {
            s = step(&s, Color::ALL[rng.gen_range(0..3)]);
        }
        if s.slopes == base_state(t, mu).slopes {
            continue;
        }
        starts += 1;
        match descend(&s, Tolerances::default(), SearchBudget::default()).unwrap() {
            DescentOutcome::Sink(v, _) => match &sink_slopes {
                None => sink_slopes = Some(v.slopes),
                Some(expected) => assert_eq!(&v.slopes, expected, "two different sinks"),
            },
            other => panic!("descent did not reach a sink: {other:?}"),
        }
    }
    assert!(sink_slopes.is_some());
}

#[test]
fn acceptance_is_stable_under_budget_doubling() {
    let fixtures = [
        MuParams::real(0.0, -1.0, -1.0, 4.0),
        MuParams::real(0.0, -1.0, 0.0, 20.0),
        MuParams::real(3.0, -2.0, -2.0, -5.0),
    ];
    for mu in fixtures {
        let seed = construct_real_seed_auto(mu).unwrap();
        let base = SearchBudget::default();
        let doubled = SearchBudget {
            max_descent_steps: base.max_descent_steps * 2,
            max_vertices: base.max_vertices * 2,
        };
        let omega = |budget: SearchBudget| {
            match bq_search(seed.triple, seed.mu, Tolerances::default(), budget, 0.0)
                .unwrap()
                .verdict
            {
                BqVerdict::Accepted { omega_l, .. } => omega_l
                    .iter()
                    .map(|r| r.slope)
                    .collect::<Vec<_>>(),
                other => panic!("expected acceptance, got {other:?}"),
            }
        };
        assert_eq!(omega(base), omega(doubled));
    }
}

#[test]
fn explored_values_grow_with_fibonacci_weight() {
    let mut cases: Vec<(MarkoffTriple, MuParams)> = [
        MuParams::real(0.0, -1.0, -1.0, 4.0),
        MuParams::real(3.0, -2.0, -2.0, -5.0),
    ]
    .into_iter()
    .map(|mu| {
        let s = construct_real_seed_auto(mu).unwrap();
        (s.triple, s.mu)
    })
    .collect();
    cases.push((
        MarkoffTriple::real(5.0, 5.0, 5.0),
        MuParams::real(0.0, 0.0, 0.0, 200.0),
    ));
    for (t, mu) in cases {
        let report =
            bq_search(t, mu, Tolerances::default(), SearchBudget::default(), 0.0).unwrap();
        assert!(matches!(report.verdict, BqVerdict::Accepted { .. }));
        let mut min_ratio = f64::INFINITY;
        let mut checked = 0;
        for r in &report.explored_regions {
            let weight = fibonacci_weight(r.slope);
            if weight < 3 {
                continue;
            }
            let log_plus = r.value.norm().ln().max(0.0);
            min_ratio = min_ratio.min(log_plus / weight as f64);
            checked += 1;
        }
        assert!(checked > 0, "no deep regions explored");
        assert!(
            min_ratio > 0.0,
            "log-growth ratio dropped to {min_ratio} for mu = {mu:?}"
        );
    }
}
