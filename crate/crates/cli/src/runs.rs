//! One function per subcommand. Each builds its tables, writes the
//! artifact, and only then reports any detected violation, so the rows
//! describing a failure always reach the output.

use num::ToPrimitive;
use serde_json::json;

use hardcore::contour::{build_contour, in_j0};
use hardcore::ensemble::Ensemble;
use hardcore::flow::defect_audit;
use hardcore::iso::{ball_count, sphere_count, stratified_count, tq_bound_check};
use hardcore::lattice::{Vertex, VertexSet};
use hardcore::sampler::{estimate_occupation_with_stream, gap_scan, ChainState};

use crate::config::Resolved;
use crate::error::CliError;
use crate::output::{Artifact, Section};

fn coord_label(coords: &[i64]) -> String {
    coords
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

pub fn exact(r: &Resolved) -> Result<(), CliError> {
    let e = r.ensemble()?;
    let v0 = e.torus().vertex(r.v0_coords())?;
    let mut rows = Vec::new();
    for lambda in r.lambdas_exact() {
        let z = e.partition_function(&lambda)?;
        let p = e.occupation_probability(&lambda, v0)?;
        rows.push(json!({
            "d": r.d(),
            "M": r.cfg.m,
            "boundary": e.boundary().name(),
            "lambda": lambda.value().to_string(),
            "v0": coord_label(r.v0_coords()),
            "z_num": z.numer().to_string(),
            "z_den": z.denom().to_string(),
            "p_num": p.numer().to_string(),
            "p_den": p.denom().to_string(),
            "p_float": p.to_f64(),
        }));
    }
    Artifact::new(r, vec![Section::new("rows", rows)]).write()
}

pub fn sample(r: &Resolved) -> Result<(), CliError> {
    if r.cfg.gap == Some(true) {
        let scan = gap_scan(
            r.d(),
            r.cfg.m.unwrap(),
            &r.lambdas_float(),
            r.v0_coords(),
            r.sweeps(),
            r.burn_in(),
            r.seed(),
        )?;
        let rows = scan
            .rows
            .iter()
            .map(|row| serde_json::to_value(row).expect("gap row serializes"))
            .collect();
        let reports = scan
            .reports
            .iter()
            .map(|rep| serde_json::to_value(rep).expect("report serializes"))
            .collect();
        return Artifact::new(
            r,
            vec![Section::new("rows", rows), Section::new("reports", reports)],
        )
        .write();
    }
    let e = r.ensemble()?;
    let v0 = e.torus().vertex(r.v0_coords())?;
    let mut rows = Vec::new();
    for (stream, lambda) in r.lambdas_float().into_iter().enumerate() {
        let report = estimate_occupation_with_stream(
            &e,
            lambda,
            v0,
            r.sweeps(),
            r.burn_in(),
            r.seed(),
            stream as u64,
        );
        rows.push(serde_json::to_value(&report).expect("report serializes"));
    }
    Artifact::new(r, vec![Section::new("rows", rows)]).write()
}

/// All cutting configurations, exhaustively or by Monte Carlo according to
/// the `samples` field.
fn cutting_configurations(r: &Resolved, e: &Ensemble, v0: Vertex) -> Result<Vec<VertexSet>, CliError> {
    let t = e.torus();
    match r.cfg.samples {
        None => {
            let mut out = Vec::new();
            e.for_each_configuration(|i| {
                if in_j0(t, i, v0) {
                    out.push(i.clone());
                }
            })?;
            Ok(out)
        }
        Some(count) => {
            let lambda = r.lambdas_float()[0];
            let mut chain = ChainState::new(e, r.seed(), 0);
            for _ in 0..r.burn_in() {
                chain.sweep(t, lambda);
            }
            let mut out = Vec::with_capacity(count);
            let mut sweeps = 0u64;
            while out.len() < count {
                chain.sweep(t, lambda);
                sweeps += 1;
                if sweeps >= 5_000_000 {
                    return Err(CliError::Usage(format!(
                        "drew {} cutting configurations in {sweeps} sweeps; raise lambda \
                         or lower samples",
                        out.len()
                    )));
                }
                if in_j0(t, chain.occupancy(), v0) {
                    out.push(chain.occupancy().clone());
                }
            }
            Ok(out)
        }
    }
}

pub fn contour_audit(r: &Resolved) -> Result<(), CliError> {
    let e = r.ensemble()?;
    let t = e.torus();
    let v0 = t.vertex(r.v0_coords())?;
    e.check_cut_vertex(v0)?;
    let configs = cutting_configurations(r, &e, v0)?;
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for i in &configs {
        let record = build_contour(t, i, v0)?.audit_record(t);
        let ok = record.properties.all_hold();
        if !ok {
            violations += 1;
        }
        rows.push(json!({
            "i_mask": record.i_mask,
            "g": record.g,
            "a": record.a,
            "t": record.t,
            "all_hold": ok,
            "detail": if ok {
                String::new()
            } else {
                serde_json::to_string(&record.properties).expect("properties serialize")
            },
        }));
    }
    let summary = vec![json!({
        "instances": configs.len(),
        "violations": violations,
    })];
    Artifact::new(
        r,
        vec![Section::new("rows", rows), Section::new("summary", summary)],
    )
    .write()?;
    if violations > 0 {
        return Err(CliError::Invariant(format!(
            "{violations} of {} contour traces violated structural properties",
            configs.len()
        )));
    }
    Ok(())
}

pub fn flow_audit(r: &Resolved) -> Result<(), CliError> {
    let e = r.ensemble()?;
    let v0 = e.torus().vertex(r.v0_coords())?;
    let policy = r.policy();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    let mut broken = Vec::new();
    for lambda in r.lambdas_exact() {
        let report = defect_audit(&e, &lambda, v0, &policy)?;
        let label = lambda.value().to_string();
        if !report.telescoping_holds {
            broken.push(label.clone());
        }
        summary.push(json!({
            "lambda": label.clone(),
            "source_count": report.source_count,
            "group_count": report.group_count,
            "small_count": report.small_count,
            "large_count": report.large_count,
            "fallback_count": report.fallback_count,
            "cut_mass": report.cut_mass.to_string(),
            "partition_function": report.partition_function.to_string(),
            "cut_probability": report.cut_probability.to_string(),
            "max_defect": report.max_defect.to_string(),
            "telescoping_holds": report.telescoping_holds,
        }));
        for row in &report.rows {
            rows.push(json!({
                "lambda": label.clone(),
                "target_mask": row.target_mask,
                "defect_num": row.defect_num,
                "defect_den": row.defect_den,
                "argmax_source_mask": row.argmax_source_mask,
            }));
        }
    }
    Artifact::new(
        r,
        vec![Section::new("summary", summary), Section::new("rows", rows)],
    )
    .write()?;
    if !broken.is_empty() {
        return Err(CliError::Invariant(format!(
            "telescoping bound failed at lambda {}",
            broken.join(", ")
        )));
    }
    Ok(())
}

pub fn approx_audit(r: &Resolved) -> Result<(), CliError> {
    let e = r.ensemble()?;
    let t = e.torus();
    let v0 = t.vertex(r.v0_coords())?;
    e.check_cut_vertex(v0)?;
    let slack = r.slack();
    let configs = cutting_configurations(r, &e, v0)?;
    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    let mut violations = 0usize;
    for i in &configs {
        let pair = build_contour(t, i, v0)?.ga_pair();
        if !seen.insert((pair.g.to_hex(), pair.a.to_hex())) {
            continue;
        }
        let outcome = hardcore::approx::pi(t, &pair, &slack)?;
        let brackets = outcome.refined.pair.brackets(&pair);
        let saturated = outcome.refined.pair.degree_saturated(t, &slack);
        let ok = brackets
            && saturated
            && outcome.build.six_clustered
            && outcome.refined.coarse_bounds_hold;
        if !ok {
            violations += 1;
        }
        rows.push(json!({
            "g_mask": pair.g.to_hex(),
            "a_mask": pair.a.to_hex(),
            "t": pair.t,
            "u_size": outcome.build.u.len(),
            "u_size_ratio": outcome.build.size_ratio,
            "f_size": outcome.refined.pair.f.len(),
            "s_size": outcome.refined.pair.s.len(),
            "f_deficit": outcome.first.f_deficit,
            "s_excess": outcome.first.s_excess,
            "six_clustered": outcome.build.six_clustered,
            "brackets": brackets,
            "saturated": saturated,
            "coarse_bounds_hold": outcome.refined.coarse_bounds_hold,
            "degeneracies": outcome.build.degeneracies.join(";"),
        }));
    }
    let summary = vec![json!({
        "configurations": configs.len(),
        "distinct_pairs": rows.len(),
        "violations": violations,
    })];
    Artifact::new(
        r,
        vec![Section::new("rows", rows), Section::new("summary", summary)],
    )
    .write()?;
    if violations > 0 {
        return Err(CliError::Invariant(format!(
            "{violations} approximating pairs violated their guarantees"
        )));
    }
    Ok(())
}

pub fn iso(r: &Resolved) -> Result<(), CliError> {
    let d = r.d();
    let q_max = r.cfg.q_max.unwrap();
    let r_max = r.cfg.r_max.unwrap();
    let mut stratified = Vec::new();
    for q in 0..=q_max {
        for t in 0..=q.min(d) {
            stratified.push(json!({
                "d": d,
                "q": q,
                "t": t,
                "s_qt": stratified_count(d, q, t).to_string(),
            }));
        }
    }
    let mut balls = Vec::new();
    for radius in 0..=r_max {
        let b = ball_count(d, radius);
        let s = sphere_count(d, radius);
        let ratio = b.to_f64().unwrap_or(f64::INFINITY) / s.to_f64().unwrap_or(f64::INFINITY);
        balls.push(json!({
            "d": d,
            "r": radius,
            "b_r": b.to_string(),
            "s_r": s.to_string(),
            "bl_ratio": ratio,
        }));
    }
    let mut tq = Vec::new();
    for (dd, qq) in r.tq_pairs() {
        let report = tq_bound_check(dd, qq)?;
        tq.push(serde_json::to_value(&report).expect("report serializes"));
    }
    Artifact::new(
        r,
        vec![
            Section::new("stratified", stratified),
            Section::new("balls", balls),
            Section::new("tq", tq),
        ],
    )
    .write()
}
