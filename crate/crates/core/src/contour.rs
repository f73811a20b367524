//! Contour extraction for configurations that cut the marked odd vertex off
//! from the boundary layer.
//!
//! Given an even-boundary configuration whose occupied odd vertices separate
//! `v0` from the boundary layer, [`build_contour`] carves the torus into an
//! exterior region containing the boundary layer and an island `W` around
//! `v0`, split into its even part `G`, odd part `A`, and inner rim `G0`.
//! Every intermediate set is retained on the [`ContourTrace`] so audits can
//! re-check each step. [`GaPair`] captures the `(G, A)` shape of an island
//! independent of any particular configuration: `G` is exactly the
//! neighborhood of `A`, and `A` is exactly the set of odd vertices whose whole
//! neighborhood lies in `G`.

use serde::Serialize;

use crate::lattice::{Parity, Torus, Vertex, VertexSet};
use crate::{Error, Result};

/// True iff `v0` is unreachable from the boundary layer once the occupied odd
/// vertices of `i` are removed from the torus.
///
/// The reachability region is seeded from the smallest boundary-layer vertex
/// that survives the removal. In debug builds the seed choice is verified to
/// be irrelevant: every surviving boundary-layer vertex must land in the same
/// component.
pub fn in_j0(t: &Torus, i: &VertexSet, v0: Vertex) -> bool {
    let odd_occupied = i.inter(t.odd_class());
    if odd_occupied.contains(v0) {
        return true;
    }
    let surviving = t.delta_set().minus(&odd_occupied);
    let Some(seed) = surviving.first() else {
        return true;
    };
    let z = t.component(&odd_occupied, seed);
    debug_assert!(
        surviving.is_subset(&z),
        "boundary layer split across components; seed choice would matter"
    );
    !z.contains(v0)
}

/// Every region produced while carving the island of `v0` out of the torus.
///
/// The chain runs: `z` is the region reachable from the boundary layer after
/// deleting the occupied odd vertices; `z0` is its inner rim; `w_component`
/// is the piece containing `v0` once the rim is added back; `w_closure` adds
/// the odd vertices swallowed by that piece; `c` is the exterior grown back
/// from the boundary layer; and `w` is the final island, the complement of
/// the exterior's strict interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourTrace {
    pub i: VertexSet,
    pub v0: Vertex,
    pub z: VertexSet,
    pub z0: VertexSet,
    pub w_component: VertexSet,
    pub w_closure: VertexSet,
    pub c: VertexSet,
    pub w: VertexSet,
    pub g: VertexSet,
    pub a: VertexSet,
    pub g0: VertexSet,
}

impl ContourTrace {
    /// Number of even island vertices.
    pub fn g_size(&self) -> usize {
        self.g.len()
    }

    /// Number of odd island vertices.
    pub fn a_size(&self) -> usize {
        self.a.len()
    }

    /// Size excess of the even side, `|G| - |A|`.
    pub fn t(&self) -> usize {
        self.g.len() - self.a.len()
    }

    /// Even vertices outside the island.
    pub fn h(&self, t: &Torus) -> VertexSet {
        t.even_class().minus(&self.g)
    }

    /// Odd vertices outside the island.
    pub fn b(&self, t: &Torus) -> VertexSet {
        t.odd_class().minus(&self.a)
    }

    /// Outside odd vertices that touch the island's even part.
    pub fn b0(&self, t: &Torus) -> VertexSet {
        self.b(t).inter(&t.neighborhood(&self.g))
    }

    /// The island shape with the configuration forgotten.
    pub fn ga_pair(&self) -> GaPair {
        GaPair {
            g: self.g.clone(),
            a: self.a.clone(),
            w: self.w.clone(),
            g0: self.g0.clone(),
            t: self.t(),
            g_parity: Parity::Even,
        }
    }

    /// Re-derives every structural property of the trace from scratch.
    pub fn check_properties(&self, torus: &Torus) -> ContourProperties {
        let odd_closure = VertexSet::collect(
            torus.vertex_count(),
            torus
                .odd_class()
                .iter()
                .filter(|&x| torus.neighbors(x).iter().all(|&y| self.g.contains(y))),
        );
        let occupied_a = self.a.inter(&self.i);
        let near_g0 = torus.neighborhood(&self.g0).inter(&self.i);
        let outside_odd = torus.odd_class().minus(&self.a);
        let exterior_side = self.w.minus(&self.g0).complement();
        ContourProperties {
            v0_in_a: self.a.contains(self.v0),
            w_avoids_delta: self.w.is_disjoint(torus.delta_set()),
            c_connected: is_connected(torus, &self.c),
            w_connected: is_connected(torus, &self.w),
            g0_is_inner_boundary_of_c: self.g0 == torus.internal_boundary(&self.c),
            g_is_neighborhood_of_a: self.g == torus.neighborhood(&self.a),
            a_is_odd_closure_of_g: self.a == odd_closure,
            g0_unoccupied: self.g0.is_disjoint(&self.i),
            occupied_near_g0_lies_in_a: near_g0.is_subset(&self.a),
            g0_inside_neighborhood_of_occupied_a: self
                .g0
                .is_subset(&torus.neighborhood(&occupied_a)),
            g0_two_clustered: torus.is_c_clustered(&self.g0, 2),
            g0_two_clustered_within_w: torus.is_c_clustered_within(&self.g0, 2, &self.w),
            g0_two_clustered_avoiding_island_interior: torus.is_c_clustered_within(
                &self.g0,
                2,
                &exterior_side,
            ),
            cut_edges_equal_t_times_degree: torus.edge_boundary(&self.g0, &outside_odd)
                == self.t() * torus.degree(),
        }
    }

    /// One audit line for this trace.
    pub fn audit_record(&self, t: &Torus) -> ContourAuditRecord {
        ContourAuditRecord {
            i_mask: self.i.to_hex(),
            g: self.g_size(),
            a: self.a_size(),
            t: self.t(),
            properties: self.check_properties(t),
        }
    }
}

/// Structural properties of a trace, each re-derived independently of the
/// construction that is supposed to guarantee it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ContourProperties {
    /// The marked vertex sits in the island's odd part.
    pub v0_in_a: bool,
    /// The island misses the boundary layer entirely.
    pub w_avoids_delta: bool,
    /// The exterior region is connected.
    pub c_connected: bool,
    /// The island is connected.
    pub w_connected: bool,
    /// The island rim equals the exterior's inner boundary.
    pub g0_is_inner_boundary_of_c: bool,
    /// `G` is exactly the neighborhood of `A`.
    pub g_is_neighborhood_of_a: bool,
    /// `A` is exactly the odd vertices with all neighbors in `G`.
    pub a_is_odd_closure_of_g: bool,
    /// No rim vertex is occupied.
    pub g0_unoccupied: bool,
    /// Occupied vertices adjacent to the rim all lie in `A`.
    pub occupied_near_g0_lies_in_a: bool,
    /// Every rim vertex has an occupied neighbor in `A`.
    pub g0_inside_neighborhood_of_occupied_a: bool,
    /// Rim vertices chain together with hops of length at most 2.
    pub g0_two_clustered: bool,
    /// The same chain exists using paths inside the island.
    pub g0_two_clustered_within_w: bool,
    /// The same chain exists avoiding the island's strict interior.
    pub g0_two_clustered_avoiding_island_interior: bool,
    /// Exactly `t * 2d` edges leave the island.
    pub cut_edges_equal_t_times_degree: bool,
}

impl ContourProperties {
    /// True iff every property holds.
    pub fn all_hold(&self) -> bool {
        self.v0_in_a
            && self.w_avoids_delta
            && self.c_connected
            && self.w_connected
            && self.g0_is_inner_boundary_of_c
            && self.g_is_neighborhood_of_a
            && self.a_is_odd_closure_of_g
            && self.g0_unoccupied
            && self.occupied_near_g0_lies_in_a
            && self.g0_inside_neighborhood_of_occupied_a
            && self.g0_two_clustered
            && self.g0_two_clustered_within_w
            && self.g0_two_clustered_avoiding_island_interior
            && self.cut_edges_equal_t_times_degree
    }
}

/// One JSON line of contour audit output.
#[derive(Clone, Debug, Serialize)]
pub struct ContourAuditRecord {
    pub i_mask: String,
    pub g: usize,
    pub a: usize,
    pub t: usize,
    pub properties: ContourProperties,
}

/// Carves the island of `v0` out of the torus.
///
/// Requires `v0` odd, outside the boundary layer, and cut off from it by the
/// occupied odd vertices of `i`.
pub fn build_contour(t: &Torus, i: &VertexSet, v0: Vertex) -> Result<ContourTrace> {
    if t.parity(v0) != Parity::Odd {
        return Err(Error::Precondition(format!(
            "contour vertex {v0:?} must be odd"
        )));
    }
    if t.delta_set().contains(v0) {
        return Err(Error::Precondition(format!(
            "contour vertex {v0:?} lies in the boundary layer"
        )));
    }
    if !in_j0(t, i, v0) {
        return Err(Error::Precondition(
            "configuration does not cut v0 off from the boundary layer".into(),
        ));
    }

    let odd_occupied = i.inter(t.odd_class());
    let seed = t
        .delta_set()
        .minus(&odd_occupied)
        .first()
        .ok_or_else(|| Error::Invariant("boundary layer entirely occupied".into()))?;
    let z = t.component(&odd_occupied, seed);
    let z0 = t.internal_boundary(&z);

    let w_component = t.component(&z.minus(&z0), v0);
    let swallowed = VertexSet::collect(
        t.vertex_count(),
        t.odd_class()
            .iter()
            .filter(|&x| t.neighbors(x).iter().all(|&y| w_component.contains(y))),
    );
    let w_closure = w_component.union(&swallowed);

    let closure_interior = w_closure.minus(&t.internal_boundary(&w_closure));
    let c_seed = t
        .delta_set()
        .minus(&closure_interior)
        .first()
        .ok_or_else(|| Error::Invariant("island closure swallowed the boundary layer".into()))?;
    let c = t.component(&closure_interior, c_seed);
    debug_assert!(
        t.delta_set().minus(&closure_interior).is_subset(&c),
        "boundary layer split across exterior components"
    );

    let w = c.minus(&t.internal_boundary(&c)).complement();
    let g = w.inter(t.even_class());
    let a = w.inter(t.odd_class());
    let g0 = t.internal_boundary(&w);
    debug_assert!(w_component.contains(v0) && a.contains(v0));

    Ok(ContourTrace {
        i: i.clone(),
        v0,
        z,
        z0,
        w_component,
        w_closure,
        c,
        w,
        g,
        a,
        g0,
    })
}

/// An island shape: a pair `(G, A)` on opposite parity classes where each
/// side determines the other.
///
/// `G` must equal the neighborhood of `A`, and `A` must equal the set of
/// `G`-parity-opposite vertices whose whole neighborhood lies in `G`. The
/// cached `w`, `g0`, and `t` are derived; `g_parity` records which class `G`
/// lives on so that dual pairs can be represented too.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaPair {
    pub g: VertexSet,
    pub a: VertexSet,
    pub w: VertexSet,
    pub g0: VertexSet,
    pub t: usize,
    pub g_parity: Parity,
}

impl GaPair {
    /// Validates the mutual-determination conditions and caches the derived
    /// sets.
    pub fn new(t: &Torus, g: VertexSet, a: VertexSet, g_parity: Parity) -> Result<GaPair> {
        if !g.is_subset(t.class(g_parity)) || !a.is_subset(t.class(g_parity.flip())) {
            return Err(Error::Precondition(
                "pair sides must lie on opposite parity classes".into(),
            ));
        }
        if g != t.neighborhood(&a) {
            return Err(Error::Precondition(
                "even side must be exactly the neighborhood of the odd side".into(),
            ));
        }
        let closure = VertexSet::collect(
            t.vertex_count(),
            t.class(g_parity.flip())
                .iter()
                .filter(|&x| t.neighbors(x).iter().all(|&y| g.contains(y))),
        );
        if a != closure {
            return Err(Error::Precondition(
                "odd side must be exactly the closure of the even side".into(),
            ));
        }
        if g.len() < a.len() {
            return Err(Error::Invariant(
                "neighborhood smaller than its source on a regular bipartite graph".into(),
            ));
        }
        let w = g.union(&a);
        let g0 = t.internal_boundary(&w);
        let excess = g.len() - a.len();
        debug_assert_eq!(
            t.edge_boundary(&g0, &t.class(g_parity.flip()).minus(&a)),
            excess * t.degree()
        );
        Ok(GaPair {
            g,
            a,
            w,
            g0,
            t: excess,
            g_parity,
        })
    }

    /// The complementary pair on swapped parity classes, sharing the same
    /// size excess.
    pub fn dual(&self, t: &Torus) -> Result<GaPair> {
        let b = t.class(self.g_parity.flip()).minus(&self.a);
        let h = t.class(self.g_parity).minus(&self.g);
        GaPair::new(t, b, h, self.g_parity.flip())
    }
}

/// All island shapes with `|G| = g_size`, `|A| = a_size`, and the marked
/// vertex on the odd side.
///
/// Candidates are subsets of the odd class containing `v0`; the budget caps
/// how many candidate subsets the scan may visit.
pub fn enumerate_ga_pairs(
    t: &Torus,
    v0: Vertex,
    g_size: usize,
    a_size: usize,
    budget: u64,
) -> Result<Vec<GaPair>> {
    if t.parity(v0) != Parity::Odd {
        return Err(Error::Precondition(format!(
            "marked vertex {v0:?} must be odd"
        )));
    }
    if a_size == 0 || a_size > t.odd_class().len() {
        return Ok(Vec::new());
    }
    let pool: Vec<Vertex> = t.odd_class().iter().filter(|&x| x != v0).collect();
    let candidates = binomial(pool.len() as u64, (a_size - 1) as u64);
    if candidates > budget {
        return Err(Error::EnumerationBudget {
            vertices: pool.len(),
            budget: budget as usize,
        });
    }

    let mut out = Vec::new();
    let mut chosen = vec![v0];
    enumerate_subsets(&pool, 0, a_size - 1, &mut chosen, &mut |members| {
        let a = VertexSet::collect(t.vertex_count(), members.iter().copied());
        let g = t.neighborhood(&a);
        if g.len() != g_size {
            return;
        }
        if let Ok(pair) = GaPair::new(t, g, a, Parity::Even) {
            out.push(pair);
        }
    });
    Ok(out)
}

fn enumerate_subsets(
    pool: &[Vertex],
    from: usize,
    remaining: usize,
    chosen: &mut Vec<Vertex>,
    f: &mut impl FnMut(&[Vertex]),
) {
    if remaining == 0 {
        f(chosen);
        return;
    }
    if pool.len() - from < remaining {
        return;
    }
    for k in from..=pool.len() - remaining {
        chosen.push(pool[k]);
        enumerate_subsets(pool, k + 1, remaining - 1, chosen, f);
        chosen.pop();
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn is_connected(t: &Torus, s: &VertexSet) -> bool {
    let Some(seed) = s.first() else {
        return true;
    };
    let excluded = s.complement();
    t.component(&excluded, seed) == *s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{Boundary, Ensemble};
    use proptest::prelude::*;

    fn torus_6x6() -> Torus {
        Torus::new(2, 3).unwrap()
    }

    fn even_frozen(t: &Torus) -> VertexSet {
        t.delta_set().inter(t.even_class())
    }

    #[test]
    fn cut_detection_matches_reachability_oracle() {
        let t = Torus::new(2, 2).unwrap();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let e = Ensemble::new(t, Boundary::Even);
        let t = e.torus();

        let mut any_cut = false;
        e.for_each_configuration(|i| {
            let odd_occupied = i.inter(t.odd_class());
            let mut reach = t.delta_set().minus(&odd_occupied);
            let mut frontier: Vec<Vertex> = reach.iter().collect();
            while let Some(u) = frontier.pop() {
                for &w in t.neighbors(u) {
                    if !odd_occupied.contains(w) && reach.insert(w) {
                        frontier.push(w);
                    }
                }
            }
            assert_eq!(in_j0(t, i, v0), !reach.contains(v0));
            any_cut |= !reach.contains(v0);
        })
        .unwrap();

        // On the 4x4 torus every odd vertex neighbors a frozen even vertex of
        // the boundary layer, so no valid configuration can occupy any odd
        // vertex, let alone cut v0 off.
        assert!(!any_cut);
        for x in t.odd_class().iter() {
            assert!(t
                .neighbors(x)
                .iter()
                .any(|&y| t.delta_set().contains(y) && t.parity(y) == Parity::Even));
        }
    }

    #[test]
    fn occupying_only_the_boundary_cuts_nothing() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        assert!(!in_j0(&t, &even_frozen(&t), v0));
        assert!(build_contour(&t, &even_frozen(&t), v0).is_err());
    }

    #[test]
    fn occupied_v0_is_always_cut_off() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let i = even_frozen(&t).union(&VertexSet::singleton(t.vertex_count(), v0));
        assert!(t.is_independent(&i));
        assert!(in_j0(&t, &i, v0));
    }

    #[test]
    fn singleton_island() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let i = even_frozen(&t).union(&VertexSet::singleton(t.vertex_count(), v0));
        let trace = build_contour(&t, &i, v0).unwrap();

        let neighbors = VertexSet::collect(t.vertex_count(), t.neighbors(v0).iter().copied());
        assert_eq!(trace.a, VertexSet::singleton(t.vertex_count(), v0));
        assert_eq!(trace.g, neighbors);
        assert_eq!(trace.g0, neighbors);
        assert_eq!(trace.t(), 2 * t.d() - 1);
        assert!(trace.check_properties(&t).all_hold());
    }

    #[test]
    fn two_vertex_island() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let v1 = t.vertex(&[-1, 0]).unwrap();
        let mut i = even_frozen(&t);
        i.insert(v0);
        i.insert(v1);
        assert!(t.is_independent(&i));
        let trace = build_contour(&t, &i, v0).unwrap();

        let pair = VertexSet::collect(t.vertex_count(), [v0, v1]);
        assert_eq!(trace.a, pair);
        assert_eq!(trace.g, t.neighborhood(&pair));
        assert_eq!(trace.g_size(), 7);
        assert_eq!(trace.t(), 5);
        assert!(trace.check_properties(&t).all_hold());
    }

    #[test]
    fn distant_even_occupation_leaves_the_island_alone() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let spectator = t.vertex(&[0, 2]).unwrap();
        let mut i = even_frozen(&t);
        i.insert(v0);
        i.insert(spectator);
        assert!(t.is_independent(&i));

        let trace = build_contour(&t, &i, v0).unwrap();
        let mut bare = even_frozen(&t);
        bare.insert(v0);
        let reference = build_contour(&t, &bare, v0).unwrap();
        assert_eq!(trace.w, reference.w);
        assert_eq!(trace.g0, reference.g0);
        assert!(trace.check_properties(&t).all_hold());
    }

    #[test]
    fn preconditions_are_enforced() {
        let t = torus_6x6();
        let even_v = t.vertex(&[0, 0]).unwrap();
        let layer_v = t.vertex(&[3, 0]).unwrap();
        let i = even_frozen(&t);
        assert!(build_contour(&t, &i, even_v).is_err());
        assert!(build_contour(&t, &i, layer_v).is_err());
    }

    #[test]
    fn pair_validation_requires_mutual_determination() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let a = VertexSet::singleton(t.vertex_count(), v0);
        let g = t.neighborhood(&a);
        let pair = GaPair::new(&t, g.clone(), a.clone(), Parity::Even).unwrap();
        assert_eq!(pair.t, 3);
        assert_eq!(pair.g0, pair.g);

        // Dropping one neighbor breaks the neighborhood condition.
        let mut short = g.clone();
        short.remove(g.first().unwrap());
        assert!(GaPair::new(&t, short, a.clone(), Parity::Even).is_err());

        // Padding the even side captures no new odd vertices but breaks
        // exactness.
        let mut padded = g.clone();
        padded.insert(t.vertex(&[0, 2]).unwrap());
        assert!(GaPair::new(&t, padded, a, Parity::Even).is_err());
    }

    #[test]
    fn duality_swaps_classes_and_preserves_excess() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let v1 = t.vertex(&[-1, 0]).unwrap();
        let a = VertexSet::collect(t.vertex_count(), [v0, v1]);
        let pair = GaPair::new(&t, t.neighborhood(&a), a, Parity::Even).unwrap();
        let dual = pair.dual(&t).unwrap();
        assert_eq!(dual.g_parity, Parity::Odd);
        assert_eq!(dual.t, pair.t);
        assert_eq!(dual.dual(&t).unwrap(), pair);
    }

    #[test]
    fn enumeration_matches_direct_filter() {
        let t = Torus::new(2, 2).unwrap();
        let v0 = t.vertex(&[1, 0]).unwrap();

        // Singleton odd sides: one pair for the marked vertex, with the full
        // neighborhood as the even side.
        let singles = enumerate_ga_pairs(&t, v0, 4, 1, 1 << 20).unwrap();
        assert_eq!(singles.len(), 1);
        assert_eq!(singles[0].a, VertexSet::singleton(t.vertex_count(), v0));
        assert_eq!(singles[0].t, 3);

        // The full parity classes always pair up with no excess.
        let full = enumerate_ga_pairs(&t, v0, 8, 8, 1 << 20).unwrap();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].g, *t.even_class());
        assert_eq!(full[0].t, 0);

        // Oracle: filter every odd subset of each size directly.
        for a_size in 1..=4usize {
            let mut oracle = 0usize;
            let odd: Vec<Vertex> = t.odd_class().iter().collect();
            for mask in 0u32..1 << odd.len() {
                if mask.count_ones() as usize != a_size {
                    continue;
                }
                let a = VertexSet::collect(
                    t.vertex_count(),
                    odd.iter()
                        .enumerate()
                        .filter(|(k, _)| mask >> k & 1 == 1)
                        .map(|(_, &x)| x),
                );
                if !a.contains(v0) {
                    continue;
                }
                let g = t.neighborhood(&a);
                if GaPair::new(&t, g, a, Parity::Even).is_ok() {
                    oracle += 1;
                }
            }
            let mut enumerated = 0usize;
            for g_size in 1..=8usize {
                enumerated += enumerate_ga_pairs(&t, v0, g_size, a_size, 1 << 20)
                    .unwrap()
                    .len();
            }
            assert_eq!(enumerated, oracle, "size {a_size}");
        }
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        assert!(matches!(
            enumerate_ga_pairs(&t, v0, 10, 9, 10),
            Err(Error::EnumerationBudget { .. })
        ));
    }

    #[test]
    fn audit_record_serializes_with_mask_and_sizes() {
        let t = torus_6x6();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let i = even_frozen(&t).union(&VertexSet::singleton(t.vertex_count(), v0));
        let record = build_contour(&t, &i, v0).unwrap().audit_record(&t);
        assert_eq!(record.g, 4);
        assert_eq!(record.a, 1);
        assert_eq!(record.t, 3);
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains("\"i_mask\""));
        assert!(json.contains("\"g0_two_clustered\":true"));
    }

    proptest! {
        // Components of the graph minus a set's strict interior never grow
        // new boundary: their rims sit inside the set's own rim.
        #[test]
        fn component_rims_stay_inside_the_original_rim(bits in prop::collection::vec(any::<bool>(), 36)) {
            let t = torus_6x6();
            let s = VertexSet::collect(
                t.vertex_count(),
                bits.iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(k, _)| Vertex(k as u32)),
            );
            let interior = s.minus(&t.internal_boundary(&s));
            let rim = t.internal_boundary(&s);
            for part in t.components_excluding(&interior) {
                prop_assert!(t.internal_boundary(&part).is_subset(&rim));
            }
        }

        // A contour built from a random valid configuration that happens to
        // cut v0 off must satisfy every structural property.
        #[test]
        fn random_cutting_configurations_audit_clean(bits in prop::collection::vec(any::<bool>(), 18)) {
            let t = torus_6x6();
            let v0 = t.vertex(&[1, 0]).unwrap();
            let odds: Vec<Vertex> = t.odd_class().iter().collect();
            let mut i = even_frozen(&t);
            for (k, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
                let v = odds[k];
                if t.neighbors(v).iter().all(|&y| !i.contains(y)) {
                    i.insert(v);
                }
            }
            prop_assume!(in_j0(&t, &i, v0));
            let trace = build_contour(&t, &i, v0).unwrap();
            prop_assert!(trace.check_properties(&t).all_hold());
        }
    }
}
