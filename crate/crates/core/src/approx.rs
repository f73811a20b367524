//! Coarse descriptions of contour pairs.
//!
//! A pair (G, A) is compressed to an approximating pair (F, S) with F inside
//! G and A inside S, built in three steps: a small cover set U whose
//! neighborhood separates the island from its exterior, a first
//! approximation read off the components of the complement, and a
//! deterministic refinement that enforces degree saturation on both sides.
//! The module also provides the covering tools the compression leans on:
//! greedy bipartite covers with the Lovasz-Stein size guarantee, and legal
//! covers of the uncertainty graph.

use num::bigint::BigInt;
use num::rational::BigRational;
use serde::Serialize;

use crate::contour::GaPair;
use crate::iso::SimpleGraph;
use crate::lattice::{Direction, Torus, Vertex, VertexSet};
use crate::{Error, Result};

/// Degree-slack parameter for refinement and direction selection.
///
/// The default is the square root of the dimension, kept symbolic so that
/// comparisons against integers and ratios stay exact.
#[derive(Clone, Debug)]
pub enum Slack {
    SqrtDim,
    Exact(BigRational),
}

impl Slack {
    /// Is the slack strictly greater than the integer `x`?
    pub fn exceeds(&self, x: i64, d: usize) -> bool {
        match self {
            Slack::SqrtDim => x < 0 || (d as i64) > x * x,
            Slack::Exact(r) => *r > BigRational::from(BigInt::from(x)),
        }
    }

    /// Is the slack strictly greater than `num/den`? Requires `den > 0`.
    pub fn exceeds_ratio(&self, num: u64, den: u64, d: usize) -> bool {
        assert!(den > 0);
        match self {
            Slack::SqrtDim => {
                let num = num as u128;
                let den = den as u128;
                (d as u128) * den * den > num * num
            }
            Slack::Exact(r) => *r > BigRational::new(BigInt::from(num), BigInt::from(den)),
        }
    }
}

/// An approximating pair (F, S): F on the even side, S on the odd side.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ApproxPair {
    pub f: VertexSet,
    pub s: VertexSet,
}

impl ApproxPair {
    pub fn new(t: &Torus, f: VertexSet, s: VertexSet) -> ApproxPair {
        assert!(f.is_subset(t.even_class()), "F lives on the even side");
        assert!(s.is_subset(t.odd_class()), "S lives on the odd side");
        ApproxPair { f, s }
    }

    /// Even vertices outside F.
    pub fn e_set(&self, t: &Torus) -> VertexSet {
        t.even_class().minus(&self.f)
    }

    /// Odd vertices outside S.
    pub fn t_set(&self, t: &Torus) -> VertexSet {
        t.odd_class().minus(&self.s)
    }

    /// S-vertices with a neighbor outside F.
    pub fn s_core(&self, t: &Torus) -> VertexSet {
        self.s.inter(&t.neighborhood(&self.e_set(t)))
    }

    /// Vertices outside F with a neighbor in S.
    pub fn e_core(&self, t: &Torus) -> VertexSet {
        self.e_set(t).inter(&t.neighborhood(&self.s))
    }

    /// The uncertainty region: both cores together.
    pub fn q_set(&self, t: &Torus) -> VertexSet {
        self.s_core(t).union(&self.e_core(t))
    }

    /// Does this pair bracket the contour pair, F ⊆ G and A ⊆ S?
    pub fn brackets(&self, pair: &GaPair) -> bool {
        self.f.is_subset(&pair.g) && pair.a.is_subset(&self.s)
    }

    /// Degree saturation: every S-vertex has more than `degree - slack`
    /// neighbors in F, and every vertex outside F that many neighbors
    /// outside S.
    pub fn degree_saturated(&self, t: &Torus, slack: &Slack) -> bool {
        let l = t.degree() as i64;
        let d = t.d();
        let t_side = self.t_set(t);
        self.s
            .iter()
            .all(|v| slack.exceeds(l - t.degree_in(v, &self.f) as i64, d))
            && self
                .e_set(t)
                .iter()
                .all(|v| slack.exceeds(l - t.degree_in(v, &t_side) as i64, d))
    }
}

/// The island rim and its exterior counterpart, each split by anchor degree.
#[derive(Clone, Debug)]
pub struct BoundarySplit {
    /// Rim vertices with at most `degree/2` neighbors in A.
    pub rim_near: VertexSet,
    /// The rest of the rim.
    pub rim_far: VertexSet,
    /// Exterior odd vertices adjacent to G with at most `degree/2`
    /// neighbors outside G.
    pub dual_near: VertexSet,
    /// The rest of the exterior boundary.
    pub dual_far: VertexSet,
}

/// Splits the rim and its dual by anchor degree, then verifies that the two
/// far parts span no edge and that the near parts separate the island from
/// the exterior.
pub fn boundary_split(t: &Torus, pair: &GaPair) -> Result<BoundarySplit> {
    let n = t.vertex_count();
    let half = t.d();
    let h = t.even_class().minus(&pair.g);
    let b = t.odd_class().minus(&pair.a);
    let b0 = b.inter(&t.neighborhood(&pair.g));

    let rim_near = VertexSet::collect(
        n,
        pair.g0.iter().filter(|&v| t.degree_in(v, &pair.a) <= half),
    );
    let rim_far = pair.g0.minus(&rim_near);
    let dual_near = VertexSet::collect(n, b0.iter().filter(|&v| t.degree_in(v, &h) <= half));
    let dual_far = b0.minus(&dual_near);

    if t.edge_boundary(&rim_far, &dual_far) != 0 {
        return Err(Error::Invariant(
            "far rim and far dual span an edge".into(),
        ));
    }
    let blockers = rim_near.union(&dual_near);
    let outside = pair.w.complement();
    for comp in t.components_excluding(&blockers) {
        if !comp.is_disjoint(&pair.w) && !comp.is_disjoint(&outside) {
            return Err(Error::Invariant(
                "near rim and near dual fail to separate the island".into(),
            ));
        }
    }
    Ok(BoundarySplit {
        rim_near,
        rim_far,
        dual_near,
        dual_far,
    })
}

/// The neighborhood-matching property: for every edge v~w and every set L of
/// neighbors of v, the neighborhood of L meets at least |L| neighbors of w.
pub fn check_quad_graph(g: &SimpleGraph) -> bool {
    for v in 0..g.vertex_count() {
        let nv = g.neighbors(v);
        if nv.len() > 20 {
            return false;
        }
        for &w in nv {
            for mask in 0u32..1 << nv.len() {
                let members: Vec<usize> = nv
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &x)| x)
                    .collect();
                let mut hit = 0usize;
                for &y in g.neighbors(w) {
                    if members.iter().any(|&x| g.neighbors(x).contains(&y)) {
                        hit += 1;
                    }
                }
                if hit < members.len() {
                    return false;
                }
            }
        }
    }
    true
}

/// [`check_quad_graph`] on the torus.
pub fn check_quad(t: &Torus) -> bool {
    check_quad_graph(&SimpleGraph::from_torus(t))
}

/// A bipartite graph with explicit sides.
#[derive(Clone, Debug)]
pub struct Bigraph {
    left_adj: Vec<Vec<usize>>,
    right_adj: Vec<Vec<usize>>,
}

impl Bigraph {
    pub fn new(left: usize, right: usize, edges: &[(usize, usize)]) -> Bigraph {
        let mut left_adj = vec![Vec::new(); left];
        let mut right_adj = vec![Vec::new(); right];
        for &(x, y) in edges {
            left_adj[x].push(y);
            right_adj[y].push(x);
        }
        for list in left_adj.iter_mut().chain(right_adj.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Bigraph {
            left_adj,
            right_adj,
        }
    }

    pub fn left_count(&self) -> usize {
        self.left_adj.len()
    }

    pub fn right_count(&self) -> usize {
        self.right_adj.len()
    }

    pub fn left_neighbors(&self, x: usize) -> &[usize] {
        &self.left_adj[x]
    }

    pub fn right_neighbors(&self, y: usize) -> &[usize] {
        &self.right_adj[y]
    }
}

/// Greedy cover of the left side by right vertices.
///
/// Requires every left degree at least `a` and every right degree at most
/// `b`; the greedy output is then guaranteed to use at most
/// `(right_count / a)(1 + ln b)` vertices, which is asserted.
pub fn lovasz_stein_cover(g: &Bigraph, a: usize, b: usize) -> Result<Vec<usize>> {
    if a == 0 || b == 0 {
        return Err(Error::Precondition(
            "cover degree bounds must be positive".into(),
        ));
    }
    for x in 0..g.left_count() {
        if g.left_neighbors(x).len() < a {
            return Err(Error::Precondition(format!(
                "left vertex {x} has degree {} below the bound {a}",
                g.left_neighbors(x).len()
            )));
        }
    }
    for y in 0..g.right_count() {
        if g.right_neighbors(y).len() > b {
            return Err(Error::Precondition(format!(
                "right vertex {y} has degree {} above the bound {b}",
                g.right_neighbors(y).len()
            )));
        }
    }

    let mut uncovered = vec![true; g.left_count()];
    let mut remaining = g.left_count();
    let mut chosen = Vec::new();
    while remaining > 0 {
        let mut best = None;
        let mut best_gain = 0usize;
        for y in 0..g.right_count() {
            let gain = g.right_neighbors(y).iter().filter(|&&x| uncovered[x]).count();
            if gain > best_gain {
                best_gain = gain;
                best = Some(y);
            }
        }
        let y = best.ok_or_else(|| {
            Error::Invariant("uncovered vertices remain but no right vertex helps".into())
        })?;
        chosen.push(y);
        for &x in g.right_neighbors(y) {
            if uncovered[x] {
                uncovered[x] = false;
                remaining -= 1;
            }
        }
    }
    let bound = g.right_count() as f64 / a as f64 * (1.0 + (b as f64).ln());
    assert!(
        chosen.len() as f64 <= bound + 1e-9,
        "greedy cover of size {} exceeds the bound {bound}",
        chosen.len()
    );
    Ok(chosen)
}

/// The cover set produced by [`build_u`], with audit annotations.
#[derive(Clone, Debug)]
pub struct UBuild {
    pub u: VertexSet,
    pub six_clustered: bool,
    /// |U| divided by its expected scale `t * sqrt(ln(degree) / degree)`;
    /// absent when the pair has no excess.
    pub size_ratio: Option<f64>,
    pub degeneracies: Vec<String>,
}

/// Builds a small set whose neighborhood covers both near boundaries.
///
/// High-anchor rim vertices are covered greedily from the exterior; the
/// low-anchor part is covered structurally through its anchor neighbors.
/// Targets the greedy pool misses are covered by a direct neighbor, and all
/// such degeneracies are recorded.
pub fn build_u(t: &Torus, pair: &GaPair) -> Result<UBuild> {
    let n = t.vertex_count();
    let l = t.degree();
    let split = boundary_split(t, pair)?;
    let h = t.even_class().minus(&pair.g);
    let b = t.odd_class().minus(&pair.a);
    let b0 = b.inter(&t.neighborhood(&pair.g));

    let x = (l as f64 * (l as f64).ln()).sqrt();
    let thresh = (x + 0.5).floor() as usize;
    let mut degeneracies = Vec::new();
    if thresh >= t.d() {
        degeneracies.push("anchor_threshold_reaches_half_degree".to_string());
    }

    let mut u = VertexSet::new(n);
    let sides = [
        (&pair.g0, &pair.a, &split.rim_near, &b0),
        (&b0, &h, &split.dual_near, &pair.g0),
    ];
    for (side, (rim, anchors, near, pool_src)) in sides.into_iter().enumerate() {
        let label = if side == 0 { "rim" } else { "dual" };
        let low = VertexSet::collect(
            n,
            rim.iter().filter(|&v| t.degree_in(v, anchors) <= thresh),
        );
        let high = rim.minus(&low);
        if high.is_empty() && !rim.is_empty() {
            degeneracies.push(format!("{label}_entirely_low_anchor"));
        }
        let props = anchors.inter(&t.neighborhood(&low));
        let strong = VertexSet::collect(
            n,
            props.iter().filter(|&v| t.degree_in(v, &high) >= t.d()),
        );
        let weak = props.minus(&strong);
        let low_strongly_covered = low.inter(&t.neighborhood(&strong));
        let low_weak = low.minus(&low_strongly_covered);
        u = u.union(&weak);

        let pool = VertexSet::collect(
            n,
            pool_src
                .inter(&t.neighborhood(near))
                .iter()
                .filter(|&v| t.degree_in(v, rim) > thresh),
        );
        let targets = near.minus(&low_weak);
        let (cover, fallbacks) = cover_targets(t, &targets, &pool)?;
        u = u.union(&cover);
        for v in fallbacks {
            degeneracies.push(format!("{label}_target_covered_by_direct_neighbor:{}", v.0));
        }
    }

    let wanted = split.rim_near.union(&split.dual_near);
    if !wanted.is_subset(&t.neighborhood(&u)) {
        return Err(Error::Invariant(
            "cover set neighborhood misses part of the near boundary".into(),
        ));
    }
    let six_clustered = t.is_c_clustered(&u, 6);
    let size_ratio = if pair.t > 0 {
        let scale = pair.t as f64 * ((l as f64).ln() / l as f64).sqrt();
        Some(u.len() as f64 / scale)
    } else {
        None
    };
    Ok(UBuild {
        u,
        six_clustered,
        size_ratio,
        degeneracies,
    })
}

/// Greedy cover of `targets` from `pool`, with a direct-neighbor fallback
/// for targets the pool cannot see.
fn cover_targets(
    t: &Torus,
    targets: &VertexSet,
    pool: &VertexSet,
) -> Result<(VertexSet, Vec<Vertex>)> {
    let mut chosen = VertexSet::new(t.vertex_count());
    let mut fallbacks = Vec::new();
    let lefts: Vec<Vertex> = targets
        .iter()
        .filter(|&v| t.degree_in(v, pool) > 0)
        .collect();
    for v in targets.iter() {
        if t.degree_in(v, pool) == 0 {
            let nb = t.neighbors(v).iter().copied().min().expect("positive degree");
            chosen.insert(nb);
            fallbacks.push(v);
        }
    }
    if lefts.is_empty() {
        return Ok((chosen, fallbacks));
    }
    let rights: Vec<Vertex> = pool.iter().collect();
    let mut edges = Vec::new();
    for (xi, &x) in lefts.iter().enumerate() {
        for (yi, &y) in rights.iter().enumerate() {
            if t.neighbors(x).contains(&y) {
                edges.push((xi, yi));
            }
        }
    }
    let graph = Bigraph::new(lefts.len(), rights.len(), &edges);
    let a = (0..lefts.len())
        .map(|x| graph.left_neighbors(x).len())
        .min()
        .expect("nonempty");
    let b = (0..rights.len())
        .map(|y| graph.right_neighbors(y).len())
        .max()
        .expect("nonempty");
    for y in lovasz_stein_cover(&graph, a, b)? {
        chosen.insert(rights[y]);
    }
    Ok((chosen, fallbacks))
}

/// First approximation of a pair from a cover set, with its audit sizes.
#[derive(Clone, Debug)]
pub struct FirstApprox {
    pub pair: ApproxPair,
    /// |G ∖ F|.
    pub f_deficit: usize,
    /// |S ∖ A|.
    pub s_excess: usize,
    /// Both sizes divided by their expected scale `t * sqrt(d ln d)`;
    /// absent when the pair has no excess.
    pub deficit_ratio: Option<f64>,
    pub excess_ratio: Option<f64>,
}

/// Reads an approximating pair off the components of the complement of
/// N(U): components larger than `d` that meet the island keep their even
/// part; everything small or in N(U) is conceded to the odd side.
pub fn first_approximation(t: &Torus, u: &VertexSet, pair: &GaPair) -> Result<FirstApprox> {
    let n = t.vertex_count();
    let l_set = t.neighborhood(u);
    let outside = pair.w.complement().minus(&l_set);
    let mut p_union = VertexSet::new(n);
    let mut q_union = VertexSet::new(n);
    for comp in t.components_excluding(&l_set) {
        let meets_island = !comp.is_disjoint(&pair.w);
        if meets_island && !comp.is_disjoint(&outside) {
            return Err(Error::Precondition(
                "cover set neighborhood fails to separate the island".into(),
            ));
        }
        if comp.len() > t.d() {
            if meets_island {
                p_union = p_union.union(&comp);
            }
        } else {
            q_union = q_union.union(&comp);
        }
    }
    let f = p_union.inter(t.even_class());
    let s = p_union.union(&q_union).union(&l_set).inter(t.odd_class());
    let approx = ApproxPair::new(t, f, s);
    if !approx.brackets(pair) {
        return Err(Error::Invariant(
            "first approximation fails to bracket the pair".into(),
        ));
    }
    let f_deficit = pair.g.minus(&approx.f).len();
    let s_excess = approx.s.minus(&pair.a).len();
    let d = t.d() as f64;
    let scale = pair.t as f64 * (d * d.ln()).sqrt();
    let ratios = if pair.t > 0 && t.d() > 1 {
        (
            Some(f_deficit as f64 / scale),
            Some(s_excess as f64 / scale),
        )
    } else {
        (None, None)
    };
    Ok(FirstApprox {
        pair: approx,
        f_deficit,
        s_excess,
        deficit_ratio: ratios.0,
        excess_ratio: ratios.1,
    })
}

/// Outcome of the two-stage refinement.
#[derive(Clone, Debug)]
pub struct Refined {
    pub pair: ApproxPair,
    /// The vertices chosen by the greedy loops, in order, with the phase
    /// that chose them.
    pub steps: Vec<(&'static str, Vertex)>,
    /// |G ∖ F| after the coarse stage.
    pub coarse_f_deficit: usize,
    /// |S ∖ A| after the coarse stage.
    pub coarse_s_excess: usize,
    /// Whether both coarse sizes are below twice the excess.
    pub coarse_bounds_hold: bool,
}

/// Refines a bracketing pair until it is degree-saturated.
///
/// The coarse stage uses the threshold `xi`, the fine stage the slack; each
/// stage prunes S around high-degree vertices outside the island, then grows
/// F around high-degree anchors. Scans go by ascending vertex index and
/// restart after every mutation, so the output is determined by the chosen
/// vertex sequence.
pub fn stage_refine(
    t: &Torus,
    start: &ApproxPair,
    pair: &GaPair,
    xi: usize,
    slack: &Slack,
) -> Result<Refined> {
    if !start.brackets(pair) {
        return Err(Error::Precondition(
            "refinement input must bracket the pair".into(),
        ));
    }
    let d = t.d();
    let h = t.even_class().minus(&pair.g);
    let mut f = start.f.clone();
    let mut s = start.s.clone();
    let mut steps: Vec<(&'static str, Vertex)> = Vec::new();
    let mut coarse_sizes = None;

    for (pass, phase_names) in [
        (0usize, ["prune_s_coarse", "grow_f_coarse"]),
        (1, ["prune_s_fine", "grow_f_fine"]),
    ] {
        let reaches = |deg: usize| -> bool {
            if pass == 0 {
                deg >= xi
            } else {
                !slack.exceeds(deg as i64, d)
            }
        };

        // Prune S around eligible vertices outside the island, then absorb
        // every even vertex that still sees many S-neighbors into F. The
        // loop exhausts the outside, so the batch only adds G-vertices.
        loop {
            let Some(w) = h.iter().find(|&w| reaches(t.degree_in(w, &s))) else {
                break;
            };
            let before = s.len();
            for &x in t.neighbors(w) {
                s.remove(x);
            }
            debug_assert!(before - s.len() >= usize::from(pass == 0) * xi);
            debug_assert!(pair.a.is_subset(&s));
            steps.push((phase_names[0], w));
        }
        let grown = VertexSet::collect(
            t.vertex_count(),
            t.even_class()
                .iter()
                .filter(|&w| reaches(t.degree_in(w, &s))),
        );
        f = f.union(&grown);
        debug_assert!(f.is_subset(&pair.g));

        // Grow F around eligible anchors, then drop every odd vertex that
        // still sees many non-F neighbors from S. The loop exhausts the
        // anchors, so the batch removes no A-vertex.
        loop {
            let e = t.even_class().minus(&f);
            let Some(w) = pair.a.iter().find(|&w| reaches(t.degree_in(w, &e))) else {
                break;
            };
            for &x in t.neighbors(w) {
                f.insert(x);
            }
            debug_assert!(f.is_subset(&pair.g));
            steps.push((phase_names[1], w));
        }
        let e = t.even_class().minus(&f);
        let dropped = VertexSet::collect(
            t.vertex_count(),
            s.iter().filter(|&w| reaches(t.degree_in(w, &e))),
        );
        s = s.minus(&dropped);
        debug_assert!(pair.a.is_subset(&s));

        if pass == 0 {
            coarse_sizes = Some((pair.g.minus(&f).len(), s.minus(&pair.a).len()));
        }
    }

    let refined = ApproxPair {
        f: f.clone(),
        s: s.clone(),
    };
    if !refined.brackets(pair) {
        return Err(Error::Invariant("refinement broke the bracketing".into()));
    }
    if !refined.degree_saturated(t, slack) {
        return Err(Error::Invariant(
            "refinement output is not degree-saturated".into(),
        ));
    }
    let (coarse_f_deficit, coarse_s_excess) = coarse_sizes.expect("coarse pass ran");
    let coarse_bounds_hold = coarse_f_deficit < 2 * pair.t && coarse_s_excess < 2 * pair.t;
    Ok(Refined {
        pair: refined,
        steps,
        coarse_f_deficit,
        coarse_s_excess,
        coarse_bounds_hold,
    })
}

/// The full compression pipeline applied to one pair.
#[derive(Clone, Debug)]
pub struct PiOutcome {
    pub build: UBuild,
    pub first: FirstApprox,
    pub refined: Refined,
}

impl PiOutcome {
    pub fn approx(&self) -> &ApproxPair {
        &self.refined.pair
    }

    pub fn audit_record(&self, pair: &GaPair, distinct_outputs_so_far: usize) -> ApproxAuditRecord {
        ApproxAuditRecord {
            g: pair.g.len(),
            a: pair.a.len(),
            t: pair.t,
            u_size: self.build.u.len(),
            u_size_ratio: self.build.size_ratio,
            f_size: self.refined.pair.f.len(),
            s_size: self.refined.pair.s.len(),
            degree_saturated: true,
            distinct_outputs_so_far,
        }
    }
}

/// One audit line of the approximation pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct ApproxAuditRecord {
    pub g: usize,
    pub a: usize,
    pub t: usize,
    pub u_size: usize,
    pub u_size_ratio: Option<f64>,
    pub f_size: usize,
    pub s_size: usize,
    pub degree_saturated: bool,
    pub distinct_outputs_so_far: usize,
}

/// Compresses a pair: cover set, first approximation, refinement with the
/// coarse threshold `d` and the given slack.
pub fn pi(t: &Torus, pair: &GaPair, slack: &Slack) -> Result<PiOutcome> {
    let build = build_u(t, pair)?;
    let first = first_approximation(t, &build.u, pair)?;
    let refined = stage_refine(t, &first.pair, pair, t.d(), slack)?;
    Ok(PiOutcome {
        build,
        first,
        refined,
    })
}

/// A legal cover of a bigraph with a distinguished right subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegalCover {
    pub k: Vec<usize>,
    pub l: Vec<usize>,
    pub m: Vec<usize>,
}

const COVER_SEARCH_BUDGET: usize = 20;

/// Exhaustive search for a legal cover minimizing |K| + |L|.
///
/// A cover K ∪ L ∪ M with K on the left, L inside the distinguished set U,
/// and M in the rest of the right side is legal when it is minimal and K is
/// exactly the neighborhood of U ∖ L. Ties are broken by the numerically
/// smallest K mask, then L mask. Hall-type properties of the minimizer are
/// asserted: every subset of K has at least as many neighbors in U ∖ L, and
/// every subset of L at least as many neighbors outside K.
pub fn legal_cover_search(g: &Bigraph, u: &[usize]) -> Result<LegalCover> {
    let left = g.left_count();
    let right = g.right_count();
    if left + right > COVER_SEARCH_BUDGET {
        return Err(Error::CoverBudget {
            vertices: left + right,
            budget: COVER_SEARCH_BUDGET,
        });
    }
    let left_mask_of_right: Vec<u32> = (0..right)
        .map(|y| g.right_neighbors(y).iter().fold(0u32, |m, &x| m | 1 << x))
        .collect();
    let right_mask_of_left: Vec<u32> = (0..left)
        .map(|x| g.left_neighbors(x).iter().fold(0u32, |m, &y| m | 1 << y))
        .collect();
    let umask: u32 = u.iter().fold(0, |m, &y| m | 1 << y);

    let neighborhood_of_rights = |rmask: u32| -> u32 {
        (0..right)
            .filter(|&y| rmask >> y & 1 == 1)
            .fold(0u32, |m, y| m | left_mask_of_right[y])
    };

    let mut best: Option<(usize, u32, u32, LegalCover)> = None;
    for kmask in 0u32..1 << left {
        for rmask in 0u32..1 << right {
            let covers = (0..left)
                .all(|x| kmask >> x & 1 == 1 || right_mask_of_left[x] & !rmask == 0);
            if !covers {
                continue;
            }
            let minimal = (0..left)
                .all(|x| kmask >> x & 1 == 0 || right_mask_of_left[x] & !rmask != 0)
                && (0..right)
                    .all(|y| rmask >> y & 1 == 0 || left_mask_of_right[y] & !kmask != 0);
            if !minimal {
                continue;
            }
            let lmask = rmask & umask;
            if neighborhood_of_rights(umask & !lmask) != kmask {
                continue;
            }
            let size = (kmask.count_ones() + lmask.count_ones()) as usize;
            let candidate_key = (size, kmask, lmask);
            let better = match &best {
                None => true,
                Some((s, k, l, _)) => candidate_key < (*s, *k, *l),
            };
            if better {
                let cover = LegalCover {
                    k: (0..left).filter(|&x| kmask >> x & 1 == 1).collect(),
                    l: (0..right).filter(|&y| lmask >> y & 1 == 1).collect(),
                    m: (0..right)
                        .filter(|&y| rmask >> y & 1 == 1 && umask >> y & 1 == 0)
                        .collect(),
                };
                best = Some((size, kmask, lmask, cover));
            }
        }
    }
    let (_, kmask, lmask, cover) =
        best.ok_or_else(|| Error::Invariant("no legal cover exists".into()))?;

    let mut sub = kmask;
    loop {
        let image = (0..left)
            .filter(|&x| sub >> x & 1 == 1)
            .fold(0u32, |m, x| m | right_mask_of_left[x]);
        if (image & umask & !lmask).count_ones() < sub.count_ones() {
            return Err(Error::Invariant(
                "a subset of K has too small a neighborhood in U minus L".into(),
            ));
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & kmask;
    }
    let mut sub = lmask;
    loop {
        let image = neighborhood_of_rights(sub);
        if (image & !kmask).count_ones() < sub.count_ones() {
            return Err(Error::Invariant(
                "a subset of L has too small a neighborhood outside K".into(),
            ));
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & lmask;
    }
    Ok(cover)
}

/// The uncertainty graph of an approximating pair as an explicit bigraph.
pub struct QGraph {
    pub graph: Bigraph,
    pub evens: Vec<Vertex>,
    pub odds: Vec<Vertex>,
}

impl QGraph {
    pub fn new(t: &Torus, approx: &ApproxPair) -> QGraph {
        let evens: Vec<Vertex> = approx.e_core(t).iter().collect();
        let odds: Vec<Vertex> = approx.s_core(t).iter().collect();
        let mut edges = Vec::new();
        for (xi, &x) in evens.iter().enumerate() {
            for (yi, &y) in odds.iter().enumerate() {
                if t.neighbors(x).contains(&y) {
                    edges.push((xi, yi));
                }
            }
        }
        QGraph {
            graph: Bigraph::new(evens.len(), odds.len(), &edges),
            evens,
            odds,
        }
    }

    pub fn even_indices(&self, set: &VertexSet) -> Vec<usize> {
        self.evens
            .iter()
            .enumerate()
            .filter(|(_, v)| set.contains(**v))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn odd_indices(&self, set: &VertexSet) -> Vec<usize> {
        self.odds
            .iter()
            .enumerate()
            .filter(|(_, v)| set.contains(**v))
            .map(|(i, _)| i)
            .collect()
    }
}

/// The canonical cover of the uncertainty graph induced by a flow target.
#[derive(Clone, Debug)]
pub struct CoverStructure {
    pub u: VertexSet,
    pub k: VertexSet,
    pub l: VertexSet,
    pub m: VertexSet,
}

/// Computes the canonical cover K = G ∩ e_core, L = U ∖ A, M = (s_core ∖ U)
/// ∖ A, where U is the pullback of the flow target into the S-core, and
/// verifies that it is a minimal cover of the uncertainty graph with K
/// exactly the uncertainty-neighborhood of U ∖ L.
pub fn cover_structure(
    t: &Torus,
    pair: &GaPair,
    approx: &ApproxPair,
    j: Direction,
    target: &VertexSet,
) -> Result<CoverStructure> {
    let s0 = approx.s_core(t);
    let e0 = approx.e_core(t);
    let u = t.shift_set(target, j.reverse()).inter(&s0);
    let k = pair.g.inter(&e0);
    let l = u.minus(&pair.a);
    let m = s0.minus(&u).minus(&pair.a);

    let cover = k.union(&l).union(&m);
    let q_edge = |x: Vertex, y: Vertex| -> bool { e0.contains(x) && s0.contains(y) };
    for x in e0.iter() {
        for &y in t.neighbors(x) {
            if q_edge(x, y) && !cover.contains(x) && !cover.contains(y) {
                return Err(Error::Invariant(format!(
                    "uncertainty edge {}-{} is uncovered",
                    x.0, y.0
                )));
            }
        }
    }
    for v in cover.iter() {
        let private = if e0.contains(v) {
            t.neighbors(v)
                .iter()
                .any(|&y| q_edge(v, y) && !cover.contains(y))
        } else {
            t.neighbors(v)
                .iter()
                .any(|&x| q_edge(x, v) && !cover.contains(x))
        };
        if !private {
            return Err(Error::Invariant(format!(
                "cover vertex {} is redundant",
                v.0
            )));
        }
    }

    let anchored = u.inter(&pair.a);
    let expected_k = t.neighborhood(&anchored).inter(&e0);
    if expected_k != k {
        return Err(Error::Invariant(
            "K is not the uncertainty-neighborhood of U minus L".into(),
        ));
    }
    Ok(CoverStructure { u, k, l, m })
}
