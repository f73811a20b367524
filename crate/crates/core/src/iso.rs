//! Lattice-ball counting and discrete isoperimetry on `Z^d`.
//!
//! Spheres `S(q)` and balls `B(r)` in the l1 metric are counted exactly,
//! stratified by support size, with arbitrary-precision integers. On top of
//! the tables sit the boundary lower bound [`bl_lower_bound`], the per-trace
//! skeleton check [`delta_lower_check`], connected-subgraph counting for
//! arbitrary small graphs, and the exact average-support bound
//! [`tq_bound_check`].

use num::bigint::BigInt;
use num::integer::binomial;
use num::rational::BigRational;
use num::{BigUint, One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;
use std::collections::HashSet;

use crate::contour::ContourTrace;
use crate::lattice::Torus;
use crate::{Error, Result};

/// Points of the sphere `S(q)` with exactly `t` nonzero coordinates.
///
/// Zero unless `1 <= t <= min(q, d)`, except for the origin case `q = 0`,
/// `t = 0`.
pub fn stratified_count(d: usize, q: usize, t: usize) -> BigUint {
    if q == 0 || t == 0 {
        return if q == 0 && t == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    if t > d || t > q {
        return BigUint::zero();
    }
    let signs = BigUint::one() << t;
    let axes = binomial(BigUint::from(d), BigUint::from(t));
    let magnitudes = binomial(BigUint::from(q - 1), BigUint::from(t - 1));
    signs * axes * magnitudes
}

/// Size of the l1 sphere `S(q)` in `Z^d`.
pub fn sphere_count(d: usize, q: usize) -> BigUint {
    (0..=q.min(d)).map(|t| stratified_count(d, q, t)).sum()
}

/// Size of the l1 ball `B(r)` in `Z^d`.
pub fn ball_count(d: usize, r: usize) -> BigUint {
    (0..=r).map(|q| sphere_count(d, q)).sum()
}

/// Points of the ball `B(r)` with exactly `t` nonzero coordinates.
pub fn ball_stratified_count(d: usize, r: usize, t: usize) -> BigUint {
    if t == 0 {
        return BigUint::one();
    }
    if t > d || t > r {
        return BigUint::zero();
    }
    let signs = BigUint::one() << t;
    let axes = binomial(BigUint::from(d), BigUint::from(t));
    let magnitudes = binomial(BigUint::from(r), BigUint::from(t));
    signs * axes * magnitudes
}

/// Exact sphere and ball tables for one dimension.
#[derive(Clone, Debug)]
pub struct BallCounts {
    d: usize,
    s_qt: Vec<Vec<BigUint>>,
}

impl BallCounts {
    /// Tabulates spheres up to radius `r_max`, stratified by support size.
    pub fn new(d: usize, r_max: usize) -> BallCounts {
        let s_qt = (0..=r_max)
            .map(|q| (0..=d.min(q)).map(|t| stratified_count(d, q, t)).collect())
            .collect();
        BallCounts { d, s_qt }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r_max(&self) -> usize {
        self.s_qt.len() - 1
    }

    /// Tabulated `s(q, t)`.
    pub fn stratified(&self, q: usize, t: usize) -> BigUint {
        self.s_qt[q].get(t).cloned().unwrap_or_else(BigUint::zero)
    }

    /// Tabulated `s(q)`.
    pub fn sphere(&self, q: usize) -> BigUint {
        self.s_qt[q].iter().sum()
    }

    /// Tabulated `b(r)`.
    pub fn ball(&self, r: usize) -> BigUint {
        (0..=r).map(|q| self.sphere(q)).sum()
    }

    /// Average support size `t(q)` over the sphere, as an exact rational.
    pub fn support_average(&self, q: usize) -> BigRational {
        let weighted: BigUint = self.s_qt[q]
            .iter()
            .enumerate()
            .map(|(t, s)| s * BigUint::from(t))
            .sum();
        BigRational::new(BigInt::from(weighted), BigInt::from(self.sphere(q)))
    }

    /// Edges from `S(q)` to `S(q+1)`: every point has one norm-increasing
    /// move per nonzero coordinate and two per zero coordinate.
    pub fn outward_edge_count(&self, q: usize) -> BigUint {
        self.s_qt[q]
            .iter()
            .enumerate()
            .map(|(t, s)| s * BigUint::from(2 * self.d - t))
            .sum()
    }

    /// Measured `s(r) / b(r)^{1 - 1/d}`, the sphere-to-ball isoperimetric
    /// ratio, reported rather than asserted.
    pub fn sphere_ball_ratio(&self, r: usize) -> f64 {
        let s = self.sphere(r).to_f64().unwrap_or(f64::INFINITY);
        let b = self.ball(r).to_f64().unwrap_or(f64::INFINITY);
        s / b.powf(1.0 - 1.0 / self.d as f64)
    }

    /// Rows of the stratified CSV table.
    pub fn stratified_rows(&self) -> Vec<StratifiedRow> {
        let mut rows = Vec::new();
        for q in 0..=self.r_max() {
            for (t, s) in self.s_qt[q].iter().enumerate() {
                rows.push(StratifiedRow {
                    d: self.d,
                    q,
                    t,
                    s_qt: s.to_string(),
                });
            }
        }
        rows
    }

    /// Rows of the per-radius CSV table.
    pub fn ball_rows(&self) -> Vec<BallRow> {
        (0..=self.r_max())
            .map(|r| BallRow {
                d: self.d,
                r,
                b_r: self.ball(r).to_string(),
                s_r: self.sphere(r).to_string(),
                bl_ratio: self.sphere_ball_ratio(r),
            })
            .collect()
    }
}

/// One row of the stratified sphere table.
#[derive(Clone, Debug, Serialize)]
pub struct StratifiedRow {
    pub d: usize,
    pub q: usize,
    pub t: usize,
    pub s_qt: String,
}

/// One row of the per-radius ball table.
#[derive(Clone, Debug, Serialize)]
pub struct BallRow {
    pub d: usize,
    pub r: usize,
    pub b_r: String,
    pub s_r: String,
    pub bl_ratio: f64,
}

/// The ratio `s(q, t+1) / s(q, t)`, computed from the table and from the
/// closed form `2(d-t)(q-t) / ((t+1)t)`, with the two checked against each
/// other.
pub fn f_ratio(q: usize, t: usize, d: usize) -> Result<BigRational> {
    if t < 1 || t >= q.min(d) {
        return Err(Error::Precondition(format!(
            "support ratio needs 1 <= t < min(q, d), got q={q}, t={t}, d={d}"
        )));
    }
    let table = BigRational::new(
        BigInt::from(stratified_count(d, q, t + 1)),
        BigInt::from(stratified_count(d, q, t)),
    );
    let formula = BigRational::new(
        BigInt::from(2 * (d - t) * (q - t)),
        BigInt::from((t + 1) * t),
    );
    if table != formula {
        return Err(Error::Invariant(format!(
            "support ratio mismatch at q={q}, t={t}, d={d}: table {table}, formula {formula}"
        )));
    }
    Ok(table)
}

/// Lower bound on the outer vertex boundary of any `C` in `Z^d` with `|C| =
/// size`.
///
/// Writes `size = b(r) + alpha * s(r+1)` with `0 <= alpha < 1` and returns
/// the ceiling of `(1 - alpha) s(r+1) + alpha s(r+2)`. Balls achieve it
/// exactly.
pub fn bl_lower_bound(size: u64, d: usize) -> BigUint {
    assert!(size >= 1, "boundary bound needs a nonempty set");
    let size = BigUint::from(size);
    let mut r = 0usize;
    while ball_count(d, r + 1) <= size {
        r += 1;
    }
    let excess = &size - ball_count(d, r);
    let s1 = sphere_count(d, r + 1);
    let s2 = sphere_count(d, r + 2);
    let step = &s2 - &s1;
    &s1 + (excess * step + &s1 - BigUint::one()) / &s1
}

/// Report of the boundary-bound skeleton evaluated on one contour trace.
#[derive(Clone, Debug, Serialize)]
pub struct DeltaLowerReport {
    pub g0_size: usize,
    pub a_size: usize,
    pub t: usize,
    pub d: usize,
    /// Exactly `t * 2d` edges leave the island.
    pub cut_matches: bool,
    /// `|G0| <= t * d`.
    pub g0_within_td: bool,
    /// The outer boundary of `(G minus G0) union A` is exactly `G0`.
    pub boundary_identity: bool,
    /// Whether the ball bound was applicable (`|G0| <= |A|`).
    pub bl_checked: bool,
    pub bl_bound: Option<String>,
    pub bl_holds: bool,
    /// Measured `delta * d * g^{1/d}`, the excess against its floor scale.
    pub delta_ratio: f64,
}

/// Evaluates the boundary-bound proof skeleton on a trace whose island stays
/// clear of the boundary layer.
///
/// Clearance matters: away from the layer the island sits in a box, where
/// ball bounds for `Z^d` apply verbatim.
pub fn delta_lower_check(torus: &Torus, trace: &ContourTrace) -> Result<DeltaLowerReport> {
    if !trace.w.is_disjoint(torus.delta_set()) {
        return Err(Error::Precondition(
            "island touches the boundary layer; box reduction invalid".into(),
        ));
    }
    let d = torus.d();
    let t = trace.t();
    let g0_size = trace.g0.len();
    let a_size = trace.a_size();
    let cut_matches =
        torus.edge_boundary(&trace.w, &trace.w.complement()) == t * torus.degree();
    let g0_within_td = g0_size <= t * d;
    let interior = trace.g.minus(&trace.g0).union(&trace.a);
    let boundary_identity = torus.external_boundary(&interior) == trace.g0;

    let (bl_checked, bl_bound, bl_holds) = if g0_size <= a_size {
        let bound = bl_lower_bound(interior.len() as u64, d);
        let holds = BigUint::from(g0_size) >= bound;
        (true, Some(bound.to_string()), holds)
    } else {
        (false, None, true)
    };

    let g = trace.g_size() as f64;
    let delta_ratio = (t as f64 / g) * d as f64 * g.powf(1.0 / d as f64);
    Ok(DeltaLowerReport {
        g0_size,
        a_size,
        t,
        d,
        cut_matches,
        g0_within_td,
        boundary_identity,
        bl_checked,
        bl_bound,
        bl_holds,
        delta_ratio,
    })
}

/// A small undirected graph with adjacency lists.
#[derive(Clone, Debug)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    /// Builds from an edge list on vertices `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> SimpleGraph {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        SimpleGraph { adj }
    }

    /// The torus as a plain graph.
    pub fn from_torus(t: &Torus) -> SimpleGraph {
        let mut edges = Vec::new();
        for v in 0..t.vertex_count() {
            for &w in t.neighbors(crate::lattice::Vertex(v as u32)) {
                if (w.0 as usize) > v {
                    edges.push((v, w.0 as usize));
                }
            }
        }
        SimpleGraph::from_edges(t.vertex_count(), &edges)
    }

    /// The Petersen graph: outer 5-cycle, inner 5-cycle with step 2, spokes.
    pub fn petersen() -> SimpleGraph {
        let mut edges = Vec::new();
        for k in 0..5 {
            edges.push((k, (k + 1) % 5));
            edges.push((5 + k, 5 + (k + 2) % 5));
            edges.push((k, 5 + k));
        }
        SimpleGraph::from_edges(10, &edges)
    }

    /// The tree in which every vertex has exactly `branching` children,
    /// truncated at the given depth. Vertex 0 is the root.
    pub fn branching_tree(branching: usize, depth: usize) -> SimpleGraph {
        let mut edges = Vec::new();
        let mut level = vec![0usize];
        let mut next_id = 1usize;
        for _ in 0..depth {
            let mut next_level = Vec::new();
            for &parent in &level {
                for _ in 0..branching {
                    edges.push((parent, next_id));
                    next_level.push(next_id);
                    next_id += 1;
                }
            }
            level = next_level;
        }
        SimpleGraph::from_edges(next_id, &edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }
}

const SUBGRAPH_VERTEX_BUDGET: usize = 128;
const SUBGRAPH_ORDER_BUDGET: usize = 8;

/// Number of connected induced subgraphs of order `n` containing `x0`.
///
/// Enumerates by canonical extension: a vertex may join only through its
/// first neighbor already inside, so each subgraph is generated once.
pub fn count_connected_induced(g: &SimpleGraph, x0: usize, n: usize) -> Result<u64> {
    if g.vertex_count() > SUBGRAPH_VERTEX_BUDGET || n > SUBGRAPH_ORDER_BUDGET {
        return Err(Error::EnumerationBudget {
            vertices: g.vertex_count().max(n),
            budget: SUBGRAPH_VERTEX_BUDGET,
        });
    }
    if n == 0 {
        return Ok(0);
    }
    let masks: Vec<u128> = (0..g.vertex_count())
        .map(|v| g.neighbors(v).iter().fold(0u128, |m, &w| m | 1 << w))
        .collect();

    fn extend(masks: &[u128], sub: u128, ext: u128, size: usize, n: usize, count: &mut u64) {
        if size == n {
            *count += 1;
            return;
        }
        let mut ext = ext;
        while ext != 0 {
            let w = ext.trailing_zeros() as usize;
            ext &= ext - 1;
            let seen = sub | neighborhood(masks, sub);
            let ext_w = ext | (masks[w] & !seen & !(1 << w));
            extend(masks, sub | 1 << w, ext_w, size + 1, n, count);
        }
    }

    fn neighborhood(masks: &[u128], sub: u128) -> u128 {
        let mut m = sub;
        let mut bits = sub;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            m |= masks[v];
        }
        m
    }

    let mut count = 0;
    extend(&masks, 1 << x0, masks[x0], 1, n, &mut count);
    debug_assert!(
        n == 1 || count as f64 <= subgraph_count_bound(g.max_degree(), n),
        "connected subgraph count exceeded the degree-based bound"
    );
    Ok(count)
}

/// The bound `(e * max_degree)^n` on connected induced subgraph counts.
pub fn subgraph_count_bound(max_degree: usize, n: usize) -> f64 {
    (std::f64::consts::E * max_degree as f64).powi(n as i32)
}

/// Number of `n`-vertex subtrees containing the root of the infinite tree in
/// which every vertex has `branching` children: `C(branching*n, n) /
/// ((branching-1)*n + 1)`.
pub fn rooted_subtree_count(branching: usize, n: usize) -> BigUint {
    assert!(branching >= 2 && n >= 1);
    binomial(BigUint::from(branching * n), BigUint::from(n))
        / BigUint::from((branching - 1) * n + 1)
}

/// Report of the exact average-support bound for one `(d, q)`.
#[derive(Clone, Debug, Serialize)]
pub struct TqBoundReport {
    pub d: usize,
    pub q: usize,
    pub t_avg: String,
    pub bound: String,
    /// `t(q) < (1 - 1/(20 beta)) d` with `beta = q/d`.
    pub main_holds: bool,
    /// Which intermediate argument applied: moderate ratios or the top
    /// stratum.
    pub branch: &'static str,
    /// Moderate branch: every `f(q, t) < 1/2` for `t` from the cutoff up.
    pub ratio_checks_hold: bool,
    /// Moderate branch: `t(q) < t0 + 2`.
    pub within_cutoff_plus_two: bool,
    /// Top-stratum branch: `s(q, d-1)/s(q, d) = d(d-1)/(2(q-d+1))` exactly.
    pub top_ratio_identity: bool,
    /// Top-stratum branch: `d - t(q) >= d(d-1)/(2q + d(d-1))`.
    pub gap_holds: bool,
}

/// Checks the average-support bound `t(q) < (1 - 1/(20 beta)) d` exactly,
/// together with the intermediate inequalities of whichever argument covers
/// the given `beta = q/d`.
pub fn tq_bound_check(d: usize, q: usize) -> Result<TqBoundReport> {
    if 10 * q <= 9 * d {
        return Err(Error::Precondition(format!(
            "average-support bound needs q/d > 0.9, got q={q}, d={d}"
        )));
    }
    let counts = BallCounts::new(d, q);
    let t_avg = counts.support_average(q);
    let bound = BigRational::from(BigInt::from(d))
        - BigRational::new(BigInt::from(d * d), BigInt::from(20 * q));
    let main_holds = t_avg < bound;

    // beta <= d/15 is where the ratio argument applies.
    let moderate = 15 * q <= d * d;
    let mut ratio_checks_hold = true;
    let mut within_cutoff_plus_two = true;
    let mut top_ratio_identity = true;
    let mut gap_holds = true;
    let branch;
    if moderate {
        branch = "moderate";
        // t0 = ceil((1 - 1/(4 beta)) d) = ceil(d - d^2/(4q)).
        let t0 = {
            let num = 4 * q * d - d * d;
            num / (4 * q) + usize::from(num % (4 * q) != 0)
        };
        for t in t0..q.min(d) {
            if t < 1 {
                continue;
            }
            let half = BigRational::new(BigInt::from(1), BigInt::from(2));
            if f_ratio(q, t, d)? >= half {
                ratio_checks_hold = false;
            }
        }
        within_cutoff_plus_two = t_avg < BigRational::from(BigInt::from(t0 + 2));
    } else {
        branch = "top-stratum";
        let table = BigRational::new(
            BigInt::from(stratified_count(d, q, d - 1)),
            BigInt::from(stratified_count(d, q, d)),
        );
        let closed = BigRational::new(BigInt::from(d * (d - 1)), BigInt::from(2 * (q - d + 1)));
        top_ratio_identity = table == closed;
        let gap = BigRational::from(BigInt::from(d)) - &t_avg;
        let floor = BigRational::new(BigInt::from(d * (d - 1)), BigInt::from(2 * q + d * (d - 1)));
        gap_holds = gap >= floor;
    }

    Ok(TqBoundReport {
        d,
        q,
        t_avg: t_avg.to_string(),
        bound: bound.to_string(),
        main_holds,
        branch,
        ratio_checks_hold,
        within_cutoff_plus_two,
        top_ratio_identity,
        gap_holds,
    })
}

/// Grows a random connected subset of `Z^d` of the given size by repeatedly
/// attaching a uniform random neighbor of a uniform random member.
pub fn grow_connected_set(d: usize, size: usize, rng: &mut impl Rng) -> Vec<Vec<i64>> {
    let mut points: Vec<Vec<i64>> = vec![vec![0; d]];
    let mut seen: HashSet<Vec<i64>> = points.iter().cloned().collect();
    while points.len() < size {
        let base = &points[rng.random_range(0..points.len())];
        let axis = rng.random_range(0..d);
        let step: i64 = if rng.random_range(0..2) == 0 { 1 } else { -1 };
        let mut candidate = base.clone();
        candidate[axis] += step;
        if seen.insert(candidate.clone()) {
            points.push(candidate);
        }
    }
    points
}

/// Size of the outer vertex boundary of a finite subset of `Z^d`.
pub fn external_boundary_size(points: &[Vec<i64>]) -> usize {
    let inside: HashSet<&[i64]> = points.iter().map(Vec::as_slice).collect();
    let mut boundary: HashSet<Vec<i64>> = HashSet::new();
    for p in points {
        for axis in 0..p.len() {
            for step in [-1i64, 1] {
                let mut q = p.clone();
                q[axis] += step;
                if !inside.contains(q.as_slice()) {
                    boundary.insert(q);
                }
            }
        }
    }
    boundary.len()
}
