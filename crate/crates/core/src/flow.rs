//! Single-site flows from cutting configurations to their shifted images.
//!
//! A configuration whose island has even-side excess `t` is pushed one
//! lattice step along a chosen direction; the vertices of the inner rim that
//! become free to occupy form the landing set, and the flow spreads the
//! source weight over all subsets of that landing set. Two spreading rules
//! are provided: a plain geometric rule for small islands, and a two-class
//! rule for large islands that prices landing vertices by the occupancy
//! class of their preimage under an approximating pair. Both rules have
//! exact unit row sums. [`defect_audit`] runs the whole flow over every
//! cutting configuration of an ensemble and verifies the resulting weight
//! identities exactly.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{pi, ApproxPair, Slack};
use crate::contour::{build_contour, in_j0, GaPair};
use crate::ensemble::{Activity, Ensemble};
use crate::lattice::{Direction, Torus, Vertex, VertexSet};
use crate::{Error, Result};

fn power(base: &BigRational, exp: usize) -> BigRational {
    num::pow::pow(base.clone(), exp)
}

/// Rim vertices whose preimage under the step `j` lies outside the island's
/// odd part; these are exactly the vertices left free over the shifted
/// island.
pub fn landing_set(t: &Torus, pair: &GaPair, j: Direction) -> VertexSet {
    VertexSet::collect(
        t.vertex_count(),
        pair.g0
            .iter()
            .filter(|&v| !pair.a.contains(t.shift(v, j.reverse()))),
    )
}

/// The shifted image of a configuration: the island part moves one step
/// along `j`, the rest stays put.
pub fn shift_image(t: &Torus, w: &VertexSet, i: &VertexSet, j: Direction) -> VertexSet {
    i.minus(w).union(&t.shift_set(&i.inter(w), j))
}

/// Inverts [`shift_image`] plus any landing subset: strips the landing
/// vertices and shifts the island part back.
pub fn recover(
    t: &Torus,
    w: &VertexSet,
    landing: &VertexSet,
    j: Direction,
    target: &VertexSet,
) -> VertexSet {
    target
        .minus(w)
        .union(&t.shift_set(&target.inter(&w.minus(landing)), j.reverse()))
}

/// Picks the direction with the strictly largest landing set, first in the
/// direction order on ties. The landing sizes over all directions must sum
/// to `t * degree`, so the chosen set has at least `t` vertices.
pub fn choose_direction_small(t: &Torus, pair: &GaPair) -> Result<(Direction, VertexSet)> {
    let mut best: Option<(Direction, VertexSet)> = None;
    let mut total = 0usize;
    for j in t.directions() {
        let landing = landing_set(t, pair, j);
        total += landing.len();
        match &best {
            Some((_, held)) if landing.len() <= held.len() => {}
            _ => best = Some((j, landing)),
        }
    }
    let (j, landing) = best.expect("positive dimension");
    let expected = pair.t * t.degree();
    if total != expected {
        return Err(Error::Invariant(format!(
            "landing sizes sum to {total}, expected {expected}"
        )));
    }
    assert!(landing.len() >= pair.t, "largest landing set below the excess");
    Ok((j, landing))
}

/// Picks the first direction whose landing set is large relative to the
/// excess and whose shifted S-core barely meets the E-core: the landing
/// size `b` must satisfy `5b > 4t`, and the overlap `a` must satisfy
/// `a * degree < 10 * b * slack`.
pub fn choose_direction_large(
    t: &Torus,
    pair: &GaPair,
    approx: &ApproxPair,
    slack: &Slack,
) -> Result<(Direction, VertexSet)> {
    let s0 = approx.s_core(t);
    let e0 = approx.e_core(t);
    for j in t.directions() {
        let landing = landing_set(t, pair, j);
        let b = landing.len();
        if 5 * b <= 4 * pair.t {
            continue;
        }
        let a = t.shift_set(&s0, j).inter(&e0).len();
        if !slack.exceeds_ratio((a * t.degree()) as u64, (10 * b) as u64, t.d()) {
            continue;
        }
        return Ok((j, landing));
    }
    Err(Error::NoAdmissibleDirection(format!(
        "no direction passes both landing tests for an island with excess {}",
        pair.t
    )))
}

/// The two recurring constants of the large-island rule.
#[derive(Clone, Debug)]
pub struct FlowConstants {
    /// `lambda / (1 + lambda)^2`.
    pub alpha: BigRational,
    /// `(1 + 2 lambda) / (1 + lambda)^2`, equal to `1 - alpha * lambda`.
    pub beta: BigRational,
}

impl FlowConstants {
    pub fn new(activity: &Activity) -> FlowConstants {
        let lambda = activity.value();
        let one_plus = BigRational::one() + lambda;
        let denom = &one_plus * &one_plus;
        let alpha = lambda / &denom;
        let beta = (BigRational::one() + lambda + lambda) / &denom;
        debug_assert_eq!(beta, BigRational::one() - &alpha * lambda);
        FlowConstants { alpha, beta }
    }
}

/// The landing set split by the occupancy class of each vertex's preimage:
/// `c` holds the vertices priced by the saturated rule, `d` the rest.
#[derive(Clone, Debug)]
pub struct LargeFlowSplit {
    pub c: VertexSet,
    pub d: VertexSet,
}

/// Splits the landing set: `c` is the part inside F whose preimage lies in
/// the S-core, `d` is the part whose preimage lies outside S or whose image
/// falls in the E-core. The two parts must partition the landing set.
pub fn large_flow_split(
    t: &Torus,
    pair: &GaPair,
    approx: &ApproxPair,
    j: Direction,
    landing: &VertexSet,
) -> Result<LargeFlowSplit> {
    let s0 = approx.s_core(t);
    let e0 = approx.e_core(t);
    let shifted_core = t.shift_set(&s0, j);
    let c = landing.inter(&approx.f).inter(&shifted_core);
    debug_assert_eq!(
        c,
        landing
            .inter(&approx.f)
            .inter(&t.shift_set(&s0.minus(&pair.a), j)),
        "landing vertices never have anchored preimages"
    );
    let d = landing.inter(
        &t.shift_set(&approx.t_set(t), j)
            .union(&shifted_core.inter(&e0)),
    );
    if c.union(&d) != *landing || !c.is_disjoint(&d) {
        return Err(Error::Invariant(
            "occupancy classes fail to partition the landing set".into(),
        ));
    }
    Ok(LargeFlowSplit { c, d })
}

/// `lambda^{|J| - |I|} (1 + lambda)^{-|landing|}`.
pub fn nu_small(
    activity: &Activity,
    source: &VertexSet,
    target: &VertexSet,
    landing_size: usize,
) -> BigRational {
    debug_assert!(target.len() >= source.len());
    let one_plus = BigRational::one() + activity.value();
    activity.weight(target.len() - source.len()) / power(&one_plus, landing_size)
}

/// The two-class rule: landing vertices in `c` are priced `alpha * lambda`
/// when occupied and `beta` when not, those in `d` are priced
/// `lambda / (1 + lambda)` and `1 / (1 + lambda)`.
pub fn nu_large(
    activity: &Activity,
    constants: &FlowConstants,
    split: &LargeFlowSplit,
    source: &VertexSet,
    target: &VertexSet,
) -> BigRational {
    let lambda = activity.value();
    let one_plus = BigRational::one() + lambda;
    let c_in = split.c.inter(target).len();
    let c_out = split.c.len() - c_in;
    let d_in = split.d.inter(target).len();
    let d_out = split.d.len() - d_in;
    let value = power(&(&constants.alpha * lambda), c_in)
        * power(&constants.beta, c_out)
        * power(&(lambda / &one_plus), d_in)
        / power(&one_plus, d_out);
    debug_assert_eq!(
        value,
        activity.weight(target.len() - source.len())
            * power(&constants.alpha, c_in)
            * power(&constants.beta, c_out)
            / power(&one_plus, split.d.len()),
        "the two forms of the large rule disagree"
    );
    value
}

/// How the flow spreads the weight of one island shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    Small,
    Large,
    /// The large rule was requested but no direction was admissible; the
    /// small rule is used instead.
    SmallFallback,
}

/// Which rule to apply, as a function of the island excess.
#[derive(Clone, Debug)]
pub struct FlowPolicy {
    /// Excess threshold: islands with `t <= tau` use the small rule.
    pub tau: usize,
    pub slack: Slack,
}

impl FlowPolicy {
    /// The default threshold `d^3`.
    pub fn for_dimension(d: usize) -> FlowPolicy {
        FlowPolicy {
            tau: d * d * d,
            slack: Slack::SqrtDim,
        }
    }

    pub fn always_small() -> FlowPolicy {
        FlowPolicy {
            tau: usize::MAX,
            slack: Slack::SqrtDim,
        }
    }

    pub fn always_large() -> FlowPolicy {
        FlowPolicy {
            tau: 0,
            slack: Slack::SqrtDim,
        }
    }
}

/// The per-shape data of a flow: rule, direction, landing set, and for the
/// large rule the landing split and the approximating pair behind it.
#[derive(Clone, Debug)]
pub struct FlowResolution {
    pub kind: FlowKind,
    pub direction: Direction,
    pub landing: VertexSet,
    pub split: Option<LargeFlowSplit>,
    pub approx: Option<ApproxPair>,
}

/// Resolves the flow for one island shape under the given policy.
pub fn resolve_flow(t: &Torus, pair: &GaPair, policy: &FlowPolicy) -> Result<FlowResolution> {
    if pair.t <= policy.tau {
        let (direction, landing) = choose_direction_small(t, pair)?;
        return Ok(FlowResolution {
            kind: FlowKind::Small,
            direction,
            landing,
            split: None,
            approx: None,
        });
    }
    let outcome = pi(t, pair, &policy.slack)?;
    match choose_direction_large(t, pair, outcome.approx(), &policy.slack) {
        Ok((direction, landing)) => {
            let split = large_flow_split(t, pair, outcome.approx(), direction, &landing)?;
            Ok(FlowResolution {
                kind: FlowKind::Large,
                direction,
                landing,
                split: Some(split),
                approx: Some(outcome.approx().clone()),
            })
        }
        Err(Error::NoAdmissibleDirection(_)) => {
            let (direction, landing) = choose_direction_small(t, pair)?;
            Ok(FlowResolution {
                kind: FlowKind::SmallFallback,
                direction,
                landing,
                split: None,
                approx: Some(outcome.approx().clone()),
            })
        }
        Err(e) => Err(e),
    }
}

/// All flow targets of one source with their exact weights. The targets are
/// the shifted image joined with each subset of the landing set; the weights
/// sum to one exactly.
pub fn flow_distribution(
    t: &Torus,
    activity: &Activity,
    pair: &GaPair,
    resolution: &FlowResolution,
    source: &VertexSet,
) -> Result<Vec<(VertexSet, BigRational)>> {
    let base = shift_image(t, &pair.w, source, resolution.direction);
    if !base.is_disjoint(&resolution.landing) {
        return Err(Error::Invariant(
            "shifted image meets its own landing set".into(),
        ));
    }
    let landing: Vec<Vertex> = resolution.landing.iter().collect();
    assert!(landing.len() < 64, "landing set too large to enumerate");
    let constants = match resolution.kind {
        FlowKind::Large => Some(FlowConstants::new(activity)),
        _ => None,
    };
    let mut out = Vec::with_capacity(1 << landing.len());
    for mask in 0u64..1 << landing.len() {
        let mut target = base.clone();
        for (bit, &v) in landing.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                target.insert(v);
            }
        }
        let weight = match resolution.kind {
            FlowKind::Small | FlowKind::SmallFallback => {
                nu_small(activity, source, &target, landing.len())
            }
            FlowKind::Large => nu_large(
                activity,
                constants.as_ref().expect("large constants"),
                resolution.split.as_ref().expect("large split"),
                source,
                &target,
            ),
        };
        out.push((target, weight));
    }
    Ok(out)
}

/// One audited flow target.
#[derive(Clone, Debug, Serialize)]
pub struct DefectRow {
    /// Hex mask of the target configuration.
    pub target_mask: String,
    /// The defect at this target, as an exact fraction.
    pub defect_num: String,
    pub defect_den: String,
    /// Hex mask of the source contributing the most weight here.
    pub argmax_source_mask: String,
}

/// Outcome of a full flow audit over every cutting configuration.
#[derive(Clone, Debug)]
pub struct DefectReport {
    pub rows: Vec<DefectRow>,
    /// Largest defect over all touched targets; zero when nothing cuts.
    pub max_defect: BigRational,
    /// Total weight of the cutting configurations.
    pub cut_mass: BigRational,
    pub partition_function: BigRational,
    /// `cut_mass / partition_function`, cross-checked against the
    /// ensemble's direct computation.
    pub cut_probability: BigRational,
    pub source_count: usize,
    pub group_count: usize,
    pub small_count: usize,
    pub large_count: usize,
    pub fallback_count: usize,
    /// `cut_mass <= max_defect * partition_function`, verified exactly.
    pub telescoping_holds: bool,
}

struct DefectCell {
    target_size: usize,
    sum: BigRational,
    best: BigRational,
    best_source: String,
}

struct GroupAudit {
    cells: BTreeMap<String, DefectCell>,
    cut_mass: BigRational,
    small: usize,
    large: usize,
    fallback: usize,
}

/// Pushes every cutting configuration of the ensemble through the flow and
/// audits the result exactly: unit row sums per source, the mass identity
/// `sum_J w(J) defect(J) = cut_mass`, the telescoping bound
/// `cut_mass <= max_defect * Z`, and agreement of `cut_mass / Z` with the
/// ensemble's own cut probability.
pub fn defect_audit(
    ensemble: &Ensemble,
    activity: &Activity,
    v0: Vertex,
    policy: &FlowPolicy,
) -> Result<DefectReport> {
    let t = ensemble.torus();
    ensemble.check_cut_vertex(v0)?;

    // Configurations sharing an odd part share their whole contour, so the
    // flow is resolved once per odd mask.
    let mut groups: BTreeMap<String, Vec<VertexSet>> = BTreeMap::new();
    ensemble.for_each_configuration(|s| {
        if in_j0(t, s, v0) {
            groups
                .entry(s.inter(t.odd_class()).to_hex())
                .or_default()
                .push(s.clone());
        }
    })?;
    let groups: Vec<(String, Vec<VertexSet>)> = groups.into_iter().collect();
    let source_count: usize = groups.iter().map(|(_, members)| members.len()).sum();
    let group_count = groups.len();

    let audits: Vec<GroupAudit> = groups
        .par_iter()
        .map(|(_, members)| -> Result<GroupAudit> {
            let trace = build_contour(t, &members[0], v0)?;
            let pair = trace.ga_pair();
            let resolution = resolve_flow(t, &pair, policy)?;
            let mut audit = GroupAudit {
                cells: BTreeMap::new(),
                cut_mass: BigRational::zero(),
                small: 0,
                large: 0,
                fallback: 0,
            };
            match resolution.kind {
                FlowKind::Small => audit.small += members.len(),
                FlowKind::Large => audit.large += members.len(),
                FlowKind::SmallFallback => audit.fallback += members.len(),
            }
            for source in members {
                let source_weight = activity.weight(source.len());
                audit.cut_mass += &source_weight;
                let distribution = flow_distribution(t, activity, &pair, &resolution, source)?;
                let row_sum: BigRational =
                    distribution.iter().map(|(_, weight)| weight).sum();
                if !row_sum.is_one() {
                    return Err(Error::Invariant(format!(
                        "flow row sums to {row_sum}, not one"
                    )));
                }
                let source_hex = source.to_hex();
                for (target, weight) in distribution {
                    if !ensemble.is_configuration(&target) {
                        return Err(Error::Invariant(
                            "flow target is not a configuration".into(),
                        ));
                    }
                    let contribution =
                        &source_weight * &weight / activity.weight(target.len());
                    let key = target.to_hex();
                    match audit.cells.get_mut(&key) {
                        Some(cell) => {
                            cell.sum += &contribution;
                            if contribution > cell.best {
                                cell.best = contribution;
                                cell.best_source = source_hex.clone();
                            }
                        }
                        None => {
                            audit.cells.insert(
                                key,
                                DefectCell {
                                    target_size: target.len(),
                                    sum: contribution.clone(),
                                    best: contribution,
                                    best_source: source_hex.clone(),
                                },
                            );
                        }
                    }
                }
            }
            Ok(audit)
        })
        .collect::<Result<Vec<GroupAudit>>>()?;

    let mut cells: BTreeMap<String, DefectCell> = BTreeMap::new();
    let mut cut_mass = BigRational::zero();
    let (mut small_count, mut large_count, mut fallback_count) = (0, 0, 0);
    for audit in audits {
        cut_mass += audit.cut_mass;
        small_count += audit.small;
        large_count += audit.large;
        fallback_count += audit.fallback;
        for (key, cell) in audit.cells {
            match cells.get_mut(&key) {
                Some(held) => {
                    held.sum += cell.sum;
                    if cell.best > held.best
                        || (cell.best == held.best && cell.best_source < held.best_source)
                    {
                        held.best = cell.best;
                        held.best_source = cell.best_source;
                    }
                }
                None => {
                    cells.insert(key, cell);
                }
            }
        }
    }

    let partition_function = ensemble.partition_function(activity)?;
    let mut max_defect = BigRational::zero();
    let mut target_mass = BigRational::zero();
    for cell in cells.values() {
        if cell.sum > max_defect {
            max_defect = cell.sum.clone();
        }
        target_mass += activity.weight(cell.target_size) * &cell.sum;
    }
    if target_mass != cut_mass {
        return Err(Error::Invariant(format!(
            "target mass {target_mass} differs from cut mass {cut_mass}"
        )));
    }
    if cut_mass > &max_defect * &partition_function {
        return Err(Error::Invariant(
            "cut mass exceeds max defect times the partition function".into(),
        ));
    }
    let cut_probability = &cut_mass / &partition_function;
    let direct = ensemble.boundary_cut_probability(activity, v0)?;
    if cut_probability != direct {
        return Err(Error::Invariant(format!(
            "cut probability {cut_probability} differs from the direct value {direct}"
        )));
    }

    let rows = cells
        .into_iter()
        .map(|(target_mask, cell)| DefectRow {
            target_mask,
            defect_num: cell.sum.numer().to_string(),
            defect_den: cell.sum.denom().to_string(),
            argmax_source_mask: cell.best_source,
        })
        .collect();
    Ok(DefectReport {
        rows,
        max_defect,
        cut_mass,
        partition_function,
        cut_probability,
        source_count,
        group_count,
        small_count,
        large_count,
        fallback_count,
        telescoping_holds: true,
    })
}
