//! End-to-end acceptance checks, one test per numbered criterion.
//!
//! Every check runs at its stated tolerance; exact claims use rational
//! arithmetic with zero tolerance. On the 4x4 torus the even boundary
//! freezes a neighbor of every odd vertex, so no configuration cuts the
//! probe vertex off and the flow-related criteria hold vacuously there;
//! each such test records the vacuity and repeats the check with real
//! content on the 6x6 torus.

use std::collections::HashSet;
use std::str::FromStr;
use std::time::Instant;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hardcore::approx::{cover_structure, legal_cover_search, lovasz_stein_cover, pi, Bigraph, Slack};
use hardcore::contour::{build_contour, in_j0};
use hardcore::ensemble::{Activity, Boundary, Ensemble};
use hardcore::flow::{
    defect_audit, landing_set, recover, resolve_flow, shift_image, FlowKind, FlowPolicy,
};
use hardcore::iso::{
    bl_lower_bound, count_connected_induced, external_boundary_size, f_ratio,
    grow_connected_set, rooted_subtree_count, sphere_count, stratified_count,
    subgraph_count_bound, tq_bound_check, SimpleGraph,
};
use hardcore::lattice::{Torus, Vertex, VertexSet};
use hardcore::sampler::{estimate_occupation, gap_scan, ChainState};

fn torus(m: usize) -> Torus {
    Torus::new(2, m).unwrap()
}

fn probe(e: &Ensemble) -> Vertex {
    e.torus().vertex(&[1, 0]).unwrap()
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("fits in f64")
}

/// Every configuration that cuts the probe vertex off, by exhaustive
/// enumeration.
fn cut_configurations(e: &Ensemble, v0: Vertex) -> Vec<VertexSet> {
    let mut out = Vec::new();
    e.for_each_configuration(|s| {
        if in_j0(e.torus(), s, v0) {
            out.push(s.clone());
        }
    })
    .unwrap();
    out
}

/// Draws `count` cutting configurations from the equilibrium dynamics, one
/// per sweep whenever the current state cuts the probe vertex off.
fn sampled_cut_configurations(
    e: &Ensemble,
    v0: Vertex,
    lambda: f64,
    count: usize,
    seed: u64,
) -> Vec<VertexSet> {
    let t = e.torus();
    let mut chain = ChainState::new(e, seed, 0);
    for _ in 0..1_000 {
        chain.sweep(t, lambda);
    }
    let mut out = Vec::with_capacity(count);
    let mut sweeps = 0u64;
    while out.len() < count {
        chain.sweep(t, lambda);
        sweeps += 1;
        assert!(sweeps < 5_000_000, "cutting configurations too rare to sample");
        if in_j0(t, chain.occupancy(), v0) {
            out.push(chain.occupancy().clone());
        }
    }
    out
}

/// Number of lattice points at each (l1 norm, support size) by direct
/// enumeration of the box.
fn l1_census(d: usize, q_max: usize) -> Vec<Vec<u64>> {
    fn descend(
        axis: usize,
        d: usize,
        q_max: usize,
        coords: &mut Vec<i64>,
        counts: &mut Vec<Vec<u64>>,
    ) {
        if axis == d {
            let q: i64 = coords.iter().map(|c| c.abs()).sum();
            if (q as usize) <= q_max {
                let t = coords.iter().filter(|&&c| c != 0).count();
                counts[q as usize][t] += 1;
            }
            return;
        }
        for c in -(q_max as i64)..=q_max as i64 {
            coords[axis] = c;
            descend(axis + 1, d, q_max, coords, counts);
        }
    }
    let mut counts = vec![vec![0u64; d + 1]; q_max + 1];
    descend(0, d, q_max, &mut vec![0i64; d], &mut counts);
    counts
}

fn ball_points(d: usize, r: usize) -> Vec<Vec<i64>> {
    fn descend(axis: usize, d: usize, r: usize, coords: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if axis == d {
            let q: i64 = coords.iter().map(|c| c.abs()).sum();
            if (q as usize) <= r {
                out.push(coords.clone());
            }
            return;
        }
        for c in -(r as i64)..=r as i64 {
            coords[axis] = c;
            descend(axis + 1, d, r, coords, out);
        }
    }
    let mut out = Vec::new();
    descend(0, d, r, &mut vec![0i64; d], &mut out);
    out
}

#[test]
fn criterion_01_sampled_estimates_match_exact_probabilities() {
    let lambdas = [("1/2", 0.5), ("1", 1.0), ("2", 2.0), ("5", 5.0)];
    let mut worst = 0.0f64;
    for boundary in [Boundary::Even, Boundary::Odd] {
        for (point, (exact_lambda, lambda)) in lambdas.iter().enumerate() {
            let e = Ensemble::new(torus(2), boundary);
            let v0 = e.torus().vertex(&[0, 0]).unwrap();
            let exact = to_f64(
                &e.occupation_probability(&Activity::from_str(exact_lambda).unwrap(), v0)
                    .unwrap(),
            );
            let start = Instant::now();
            let report =
                estimate_occupation(&e, *lambda, v0, 1_100_000, 100_000, 4100 + point as u64);
            let elapsed = start.elapsed();
            assert!(
                elapsed.as_secs() < 60,
                "point ({boundary:?}, {lambda}) took {elapsed:?}"
            );
            let error = (report.estimate - exact).abs();
            worst = worst.max(error);
            assert!(
                error <= 0.01,
                "boundary {boundary:?}, lambda {lambda}: estimate {} vs exact {exact}",
                report.estimate
            );
        }
    }
    println!(
        "criterion 1 PASS: 10^6-sweep estimates within 0.01 of exact on 4x4 \
         (worst error {worst:.5}), each point well under 60 s"
    );
}

#[test]
fn criterion_02_flow_row_sums_are_exactly_one() {
    let activity = Activity::from_str("2").unwrap();
    let mut sources_4x4 = 0;
    let mut sources_6x6 = 0;
    // Row sums are asserted exactly, source by source, inside the audit.
    for (m, sources) in [(2usize, &mut sources_4x4), (3, &mut sources_6x6)] {
        let e = Ensemble::new(torus(m), Boundary::Even);
        let v0 = probe(&e);
        for policy in [FlowPolicy::always_small(), FlowPolicy::always_large()] {
            let report = defect_audit(&e, &activity, v0, &policy).unwrap();
            *sources = report.source_count;
        }
    }
    assert_eq!(sources_4x4, 0);
    assert!(sources_6x6 > 0);
    println!(
        "criterion 2 PASS: every row sums to one exactly under tau=inf and tau=0; \
         4x4 vacuous ({sources_4x4} sources, every odd vertex borders a frozen even one), \
         6x6 checked with {sources_6x6} sources"
    );
}

#[test]
fn criterion_03_telescoping_and_cut_probability_agree_exactly() {
    // The audit verifies, in exact arithmetic: the mass identity
    // sum_J w(J) defect(J) = sum_{I in J0} w(I), the telescoping bound
    // cut_mass <= max_defect * Z, and agreement of cut_mass / Z with the
    // enumeration's direct cut probability.
    for lambda in ["1", "2", "5"] {
        let activity = Activity::from_str(lambda).unwrap();
        for m in [2usize, 3] {
            let e = Ensemble::new(torus(m), Boundary::Even);
            let v0 = probe(&e);
            let report = defect_audit(&e, &activity, v0, &FlowPolicy::for_dimension(2)).unwrap();
            assert!(report.telescoping_holds);
            if m == 2 {
                assert!(report.max_defect.is_zero());
                assert!(report.cut_probability.is_zero());
            } else {
                assert!(report.max_defect > BigRational::zero());
            }
        }
    }
    println!(
        "criterion 3 PASS: telescoping bound and two-way cut probability exact for \
         lambda in {{1, 2, 5}} on 4x4 (vacuously, zero mass) and 6x6 (positive mass)"
    );
}

#[test]
fn criterion_04_contour_properties_hold_everywhere() {
    // Exhaustive on 4x4: the cut event is empty, which the enumeration
    // confirms.
    let e4 = Ensemble::new(torus(2), Boundary::Even);
    let exhaustive = cut_configurations(&e4, probe(&e4));
    assert!(exhaustive.is_empty());

    let e6 = Ensemble::new(torus(3), Boundary::Even);
    let t = e6.torus();
    let v0 = probe(&e6);
    let samples = sampled_cut_configurations(&e6, v0, 2.0, 10_000, 424242);
    for i in &samples {
        let trace = build_contour(t, i, v0).unwrap();
        assert!(trace.check_properties(t).all_hold());
        assert!(t.is_c_clustered(&trace.g0, 2));
    }
    println!(
        "criterion 4 PASS: all structural properties and 2-clusteredness of the rim hold \
         on 100% of cutting configurations (4x4 exhaustive: none exist; 6x6: {} sampled)",
        samples.len()
    );
}

#[test]
fn criterion_05_every_flow_target_recovers_its_source() {
    let mut triples = 0u64;
    for m in [2usize, 3] {
        let e = Ensemble::new(torus(m), Boundary::Even);
        let t = e.torus();
        let v0 = probe(&e);
        let sources = cut_configurations(&e, v0);
        if m == 2 {
            assert!(sources.is_empty());
            continue;
        }
        assert!(!sources.is_empty());
        for i in &sources {
            let pair = build_contour(t, i, v0).unwrap().ga_pair();
            for j in t.directions() {
                let landing = landing_set(t, &pair, j);
                let base = shift_image(t, &pair.w, i, j);
                assert!(base.is_disjoint(&landing));
                let slots: Vec<Vertex> = landing.iter().collect();
                let mut seen = HashSet::new();
                for mask in 0u64..1 << slots.len() {
                    let mut target = base.clone();
                    for (bit, &v) in slots.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            target.insert(v);
                        }
                    }
                    assert!(e.is_configuration(&target));
                    assert_eq!(&recover(t, &pair.w, &landing, j, &target), i);
                    assert!(seen.insert(target.to_hex()));
                    triples += 1;
                }
                assert_eq!(seen.len(), 1 << landing.len());
            }
        }
    }
    println!(
        "criterion 5 PASS: recovery inverts the flow on 100% of (source, direction, target) \
         triples and each direction offers exactly 2^landing targets \
         (4x4 vacuous, 6x6 exhaustive: {triples} triples)"
    );
}

#[test]
fn criterion_06_approximation_pipeline_brackets_and_saturates() {
    // 4x4 exhaustive: no pairs exist to audit.
    let e4 = Ensemble::new(torus(2), Boundary::Even);
    assert!(cut_configurations(&e4, probe(&e4)).is_empty());

    let e6 = Ensemble::new(torus(3), Boundary::Even);
    let t = e6.torus();
    let v0 = probe(&e6);
    let slack = Slack::SqrtDim;
    let samples = sampled_cut_configurations(&e6, v0, 2.0, 10_000, 62626);
    let mut audited: HashSet<String> = HashSet::new();
    let mut degeneracies = 0usize;
    for i in &samples {
        let pair = build_contour(t, i, v0).unwrap().ga_pair();
        let key = format!("{}:{}", pair.g.to_hex(), pair.a.to_hex());
        if !audited.insert(key) {
            continue;
        }
        let outcome = pi(t, &pair, &slack).unwrap();
        assert!(outcome.build.six_clustered, "cover set must be 6-clustered");
        degeneracies += outcome.build.degeneracies.len();
        assert!(outcome.first.pair.brackets(&pair));
        assert!(outcome.refined.pair.brackets(&pair));
        assert!(outcome.refined.pair.degree_saturated(t, &slack));
        assert!(
            outcome.refined.coarse_bounds_hold,
            "coarse deficits must stay below twice the excess"
        );
    }
    println!(
        "criterion 6 PASS: bracketing, degree saturation, coarse bounds < 2t, cover-set \
         reach, and 6-clusteredness hold for every audited pair (4x4 exhaustive: none; \
         6x6: {} distinct shapes over 10000 samples, {} threshold degeneracies recorded)",
        audited.len(),
        degeneracies
    );
}

#[test]
fn criterion_07_cover_constructions_verify_their_guarantees() {
    // Greedy covers on seeded random bigraphs; the size bound
    // |cover| <= (|Y|/a)(1 + ln b) is asserted inside the call.
    let mut rng = ChaCha8Rng::seed_from_u64(7001);
    for _ in 0..100 {
        let left = rng.random_range(1..=9usize);
        let right = rng.random_range(1..=9usize);
        let mut edges = Vec::new();
        for x in 0..left {
            for y in 0..right {
                if rng.random_bool(0.4) {
                    edges.push((x, y));
                }
            }
        }
        let mut covered = vec![false; left];
        for &(x, _) in &edges {
            covered[x] = true;
        }
        for (x, seen) in covered.iter().enumerate() {
            if !seen {
                edges.push((x, rng.random_range(0..right)));
            }
        }
        let g = Bigraph::new(left, right, &edges);
        let a = (0..left).map(|x| g.left_neighbors(x).len()).min().unwrap();
        let b = (0..right).map(|y| g.right_neighbors(y).len()).max().unwrap();
        lovasz_stein_cover(&g, a, b).unwrap();
    }

    // Legal covers on seeded instances of at most 16 vertices; the Hall
    // properties (every K' sees enough of U minus L, every L' sees enough
    // outside K) are asserted inside the search.
    for _ in 0..100 {
        let left = rng.random_range(0..=8usize);
        let right = rng.random_range(0..=8usize);
        let mut edges = Vec::new();
        for x in 0..left {
            for y in 0..right {
                if rng.random_bool(0.4) {
                    edges.push((x, y));
                }
            }
        }
        let g = Bigraph::new(left, right, &edges);
        let u: Vec<usize> = (0..right).filter(|_| rng.random_bool(0.5)).collect();
        legal_cover_search(&g, &u).unwrap();
    }

    // Canonical covers on every forced-large triple; minimality and
    // K = N(U minus L) are asserted inside.
    let mut large_triples = 0u64;
    let mut fallback_shapes = 0u64;
    for m in [2usize, 3] {
        let e = Ensemble::new(torus(m), Boundary::Even);
        let t = e.torus();
        let v0 = probe(&e);
        let sources = cut_configurations(&e, v0);
        if m == 2 {
            assert!(sources.is_empty());
            continue;
        }
        for i in &sources {
            let pair = build_contour(t, i, v0).unwrap().ga_pair();
            let resolution = resolve_flow(t, &pair, &FlowPolicy::always_large()).unwrap();
            if resolution.kind != FlowKind::Large {
                fallback_shapes += 1;
                continue;
            }
            let approx = resolution.approx.as_ref().unwrap();
            let j = resolution.direction;
            let base = shift_image(t, &pair.w, i, j);
            let slots: Vec<Vertex> = resolution.landing.iter().collect();
            for mask in 0u64..1 << slots.len() {
                let mut target = base.clone();
                for (bit, &v) in slots.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        target.insert(v);
                    }
                }
                cover_structure(t, &pair, approx, j, &target).unwrap();
                large_triples += 1;
            }
        }
        assert!(large_triples > 0);
    }
    println!(
        "criterion 7 PASS: greedy cover bound on 100 seeded bigraphs, legal-cover Hall \
         properties on 100 seeded instances, canonical-cover minimality and K = N(U \\ L) \
         on all forced-large triples (4x4 vacuous; 6x6: {large_triples} triples, \
         {fallback_shapes} sources fell back to the small rule)"
    );
}

#[test]
fn criterion_08_isoperimetry_tables_match_brute_force() {
    for d in 1..=5usize {
        let census = l1_census(d, 8);
        for q in 0..=8usize {
            for t in 0..=d {
                assert_eq!(
                    BigUint::from(census[q][t]),
                    stratified_count(d, q, t),
                    "stratified count at d={d}, q={q}, t={t}"
                );
            }
            for t in 1..q.min(d) {
                f_ratio(q, t, d).unwrap();
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8001);
    for _ in 0..1_000 {
        let size = rng.random_range(1..=64usize);
        let c = grow_connected_set(3, size, &mut rng);
        let boundary = BigUint::from(external_boundary_size(&c) as u64);
        assert!(boundary >= bl_lower_bound(size as u64, 3));
    }
    for r in 0..=3usize {
        let ball = ball_points(3, r);
        let boundary = BigUint::from(external_boundary_size(&ball) as u64);
        assert_eq!(boundary, sphere_count(3, r + 1));
        assert_eq!(boundary, bl_lower_bound(ball.len() as u64, 3));
    }

    for (d, q) in [(20usize, 19usize), (10, 100), (30, 28)] {
        let report = tq_bound_check(d, q).unwrap();
        assert!(
            report.main_holds
                && report.ratio_checks_hold
                && report.within_cutoff_plus_two
                && report.top_ratio_identity
                && report.gap_holds,
            "average-support report for d={d}, q={q}: {report:?}"
        );
    }
    println!(
        "criterion 8 PASS: stratified counts match brute force for d <= 5, q <= 8; \
         support-ratio identity exact; boundary bound holds on 1000 random connected \
         sets with ball equality; average-support bound holds at (20,19), (10,100), (30,28)"
    );
}

#[test]
fn criterion_09_subgraph_counts_respect_the_tree_bound() {
    let petersen = SimpleGraph::petersen();
    let grid = SimpleGraph::from_torus(&torus(2));
    for (graph, degree) in [(&petersen, 3usize), (&grid, 4)] {
        for n in 1..=6usize {
            let count = count_connected_induced(graph, 0, n).unwrap();
            assert!(
                (count as f64) <= subgraph_count_bound(degree, n),
                "order {n}: {count} exceeds the bound"
            );
        }
    }
    for branching in 2..=3usize {
        for n in 1..=5usize {
            let tree = SimpleGraph::branching_tree(branching, n.saturating_sub(1));
            let direct = count_connected_induced(&tree, 0, n).unwrap();
            assert_eq!(BigUint::from(direct), rooted_subtree_count(branching, n));
        }
    }
    println!(
        "criterion 9 PASS: connected induced counts stay below (e*degree)^n on the \
         Petersen graph and the 4x4 torus for n <= 6; rooted-subtree formula exact \
         for branching <= 3, n <= 5"
    );
}

#[test]
fn criterion_10_boundary_gap_grows_with_activity() {
    let scan = gap_scan(2, 8, &[0.5, 5.0], &[0, 0], 200_000, 20_000, 1010).unwrap();
    let low = &scan.rows[0];
    let high = &scan.rows[1];
    let diff = high.gap - low.gap;
    let combined = (low.even_stderr.powi(2)
        + low.odd_stderr.powi(2)
        + high.even_stderr.powi(2)
        + high.odd_stderr.powi(2))
    .sqrt();
    assert!(
        diff > 5.0 * combined,
        "gap difference {diff} not above 5 combined stderr {combined}"
    );

    // Exact desk-scale anchors from the enumeration.
    let mut exact_gaps = Vec::new();
    for lambda in ["1/2", "5"] {
        let activity = Activity::from_str(lambda).unwrap();
        let even = Ensemble::new(torus(2), Boundary::Even);
        let odd = Ensemble::new(torus(2), Boundary::Odd);
        let v0 = even.torus().vertex(&[0, 0]).unwrap();
        let gap = to_f64(&even.occupation_probability(&activity, v0).unwrap())
            - to_f64(&odd.occupation_probability(&activity, v0).unwrap());
        exact_gaps.push(gap);
    }
    assert!(exact_gaps[1] > exact_gaps[0]);
    println!(
        "criterion 10 PASS: on 16x16 the even/odd gap at lambda=5 ({:.4}) exceeds the gap \
         at lambda=0.5 ({:.4}) by {:.1} combined standard errors; exact 4x4 anchors \
         {:.4} (lambda=1/2) and {:.4} (lambda=5)",
        high.gap,
        low.gap,
        diff / combined,
        exact_gaps[0],
        exact_gaps[1]
    );
}
