//! Run configuration: a JSON file plus flag overrides, per-subcommand
//! defaults, and a stable hash echoed in every output header.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use num::rational::BigRational;
use serde::{Deserialize, Serialize};

use hardcore::approx::Slack;
use hardcore::ensemble::{Activity, Boundary, Ensemble};
use hardcore::flow::FlowPolicy;
use hardcore::lattice::Torus;

use crate::error::CliError;

/// One experiment's full parameter set.
///
/// Every field is optional so that a config file and command-line flags can
/// each supply any subset; [`Resolved::from_args`] merges them, fills
/// defaults, and validates before dispatch. Unknown keys in a config file
/// are rejected.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Activities: `"p"` or `"p/q"` rationals for exact runs, decimal
    /// floats for sampling runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Smallness threshold: islands with excess at most `tau` flow by the
    /// small rule. Defaults to `d^3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_large: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_small: Option<bool>,
    /// Exact saturation slack as a rational; defaults to `sqrt(d)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<String>,
    /// Enumeration budget in vertices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    /// Audit this many Monte Carlo samples instead of enumerating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Scan both boundaries and report even/odd gaps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<usize>,
    /// Average-support check instances, each as `"d,q"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tq: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Flags shared by every subcommand; each one overrides the matching config
/// file field.
#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// JSON config file; flags given here override its fields.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Torus dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Half side length: the torus has side 2M.
    #[arg(long, alias = "M", value_name = "M")]
    pub m: Option<usize>,
    /// Activities: "p" or "p/q" rationals for exact runs, decimal floats
    /// for sampling runs. Comma-separated or repeated.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    pub lambda: Option<Vec<String>>,
    /// Probe vertex coordinates, e.g. "1,0" or "(1,0)".
    #[arg(long, value_name = "COORDS")]
    pub v0: Option<String>,
    /// Boundary condition: even, odd, or free.
    #[arg(long)]
    pub boundary: Option<String>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total sweeps, including burn-in.
    #[arg(long)]
    pub sweeps: Option<u64>,
    /// Sweeps discarded before measuring.
    #[arg(long)]
    pub burn_in: Option<u64>,
    /// Smallness threshold for the flow; default d^3.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Force the large rule on every island (tau = 0).
    #[arg(long, value_name = "BOOL")]
    pub force_large: Option<bool>,
    /// Force the small rule on every island.
    #[arg(long, value_name = "BOOL")]
    pub force_small: Option<bool>,
    /// Exact saturation slack as a rational; default sqrt(d).
    #[arg(long, value_name = "P/Q")]
    pub psi: Option<String>,
    /// Enumeration budget in vertices.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Audit this many Monte Carlo samples instead of enumerating.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Scan both boundaries and report even/odd gaps.
    #[arg(long, value_name = "BOOL")]
    pub gap: Option<bool>,
    /// Largest l1 norm tabulated.
    #[arg(long)]
    pub q_max: Option<usize>,
    /// Largest ball radius tabulated.
    #[arg(long)]
    pub r_max: Option<usize>,
    /// Average-support check instance as "d,q"; repeatable.
    #[arg(long, value_name = "D,Q")]
    pub tq: Option<Vec<String>>,
    /// Output file; a ".csv" suffix selects CSV, anything else JSON.
    /// Default: JSON to stdout.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_coords(s: &str) -> Result<Vec<i64>, CliError> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    inner
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<i64>()
                .map_err(|_| usage(format!("bad coordinate list {s:?}")))
        })
        .collect()
}

fn parse_pair(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || usage(format!("bad d,q pair {s:?}"));
    let (d, q) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        d.trim().parse().map_err(|_| bad())?,
        q.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn parse_boundary(s: &str) -> Result<Boundary, CliError> {
    match s {
        "even" => Ok(Boundary::Even),
        "odd" => Ok(Boundary::Odd),
        "free" => Ok(Boundary::Free),
        other => Err(usage(format!(
            "boundary must be even, odd, or free, got {other:?}"
        ))),
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Whether the subcommand reads activities as exact rationals (as opposed
/// to sampling floats).
fn exact_lambdas(subcommand: &str) -> bool {
    matches!(subcommand, "exact" | "flow-audit")
}

/// A validated configuration with every field the subcommand uses filled
/// in, ready to echo into output headers.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub subcommand: &'static str,
    pub cfg: RunConfig,
}

impl Resolved {
    pub fn from_args(subcommand: &'static str, args: &CommonArgs) -> Result<Resolved, CliError> {
        let mut cfg = match &args.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(named) = &cfg.subcommand {
            if named != subcommand {
                return Err(usage(format!(
                    "config file names subcommand {named:?} but {subcommand:?} was invoked"
                )));
            }
        }
        overlay(&mut cfg, args)?;
        cfg.subcommand = Some(subcommand.to_string());
        let mut resolved = Resolved { subcommand, cfg };
        resolved.validate()?;
        Ok(resolved)
    }

    fn validate(&mut self) -> Result<(), CliError> {
        if self.cfg.force_large == Some(true) && self.cfg.force_small == Some(true) {
            return Err(usage("force_large and force_small are mutually exclusive"));
        }
        if self.cfg.tau.is_some()
            && (self.cfg.force_large == Some(true) || self.cfg.force_small == Some(true))
        {
            return Err(usage("tau conflicts with the force_large/force_small flags"));
        }
        let audit = matches!(
            self.subcommand,
            "contour-audit" | "flow-audit" | "approx-audit"
        );
        if audit {
            match self.cfg.boundary.as_deref() {
                None => self.cfg.boundary = Some("even".to_string()),
                Some("even") => {}
                Some(other) => {
                    return Err(usage(format!(
                        "boundary audits run under the even boundary, got {other:?}"
                    )));
                }
            }
        }
        match self.subcommand {
            "iso" => {
                self.cfg.d.get_or_insert(3);
                self.cfg.q_max.get_or_insert(8);
                self.cfg.r_max.get_or_insert(8);
                let tq = self.cfg.tq.get_or_insert_with(|| {
                    vec!["20,19".into(), "10,100".into(), "30,28".into()]
                });
                for pair in tq.iter() {
                    parse_pair(pair)?;
                }
                return Ok(());
            }
            "exact" => {
                self.fill_torus(0)?;
            }
            "sample" => {
                self.fill_torus(0)?;
                self.cfg.seed.get_or_insert(1);
                self.cfg.sweeps.get_or_insert(200_000);
                self.cfg.burn_in.get_or_insert(20_000);
                self.cfg.gap.get_or_insert(false);
                let (sweeps, burn) = (self.sweeps(), self.burn_in());
                if burn >= sweeps {
                    return Err(usage(format!(
                        "burn_in {burn} must be below sweeps {sweeps}"
                    )));
                }
            }
            "contour-audit" | "approx-audit" => {
                self.fill_torus(1)?;
                if self.cfg.samples.is_some() {
                    self.cfg.seed.get_or_insert(1);
                    self.cfg.burn_in.get_or_insert(1_000);
                }
            }
            "flow-audit" => {
                self.fill_torus(1)?;
            }
            _ => unreachable!("unknown subcommand"),
        }
        self.cfg.boundary.get_or_insert_with(|| "even".to_string());
        parse_boundary(self.cfg.boundary.as_deref().unwrap())?;
        self.canonicalize_lambdas()?;
        if let Some(psi) = &self.cfg.psi {
            parse_slack(psi)?;
        }
        Ok(())
    }

    /// Fills d, M, and v0, putting the probe at the origin shifted by
    /// `offset` along the first axis.
    fn fill_torus(&mut self, offset: i64) -> Result<(), CliError> {
        let d = *self.cfg.d.get_or_insert(2);
        self.cfg.m.get_or_insert(2);
        let v0 = self.cfg.v0.get_or_insert_with(|| {
            let mut coords = vec![0; d];
            coords[0] = offset;
            coords
        });
        if v0.len() != d {
            return Err(usage(format!(
                "v0 has {} coordinates but d = {d}",
                v0.len()
            )));
        }
        Ok(())
    }

    /// Parses, sorts, and deduplicates the activity list so that the echoed
    /// config and the output rows share one canonical order.
    fn canonicalize_lambdas(&mut self) -> Result<(), CliError> {
        let raw = self.cfg.lambda.get_or_insert_with(|| vec!["1".to_string()]);
        if raw.is_empty() {
            return Err(usage("lambda list is empty"));
        }
        if exact_lambdas(self.subcommand) {
            let mut parsed = raw
                .iter()
                .map(|s| Activity::from_str(s).map_err(CliError::from))
                .collect::<Result<Vec<_>, _>>()?;
            parsed.sort_by(|a, b| a.value().cmp(b.value()));
            parsed.dedup_by(|a, b| a.value() == b.value());
            *raw = parsed.iter().map(|a| a.value().to_string()).collect();
        } else {
            let mut parsed = raw
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite() && *x >= 0.0)
                        .ok_or_else(|| {
                            usage(format!(
                                "sampling activities are decimal floats, got {s:?}"
                            ))
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            parsed.sort_by(|a, b| a.partial_cmp(b).unwrap());
            parsed.dedup();
            *raw = parsed.iter().map(f64::to_string).collect();
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.cfg.d.unwrap()
    }

    pub fn v0_coords(&self) -> &[i64] {
        self.cfg.v0.as_deref().unwrap()
    }

    pub fn boundary(&self) -> Boundary {
        parse_boundary(self.cfg.boundary.as_deref().unwrap()).unwrap()
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(1)
    }

    pub fn sweeps(&self) -> u64 {
        self.cfg.sweeps.unwrap_or(200_000)
    }

    pub fn burn_in(&self) -> u64 {
        self.cfg.burn_in.unwrap_or(20_000)
    }

    pub fn ensemble(&self) -> Result<Ensemble, CliError> {
        let torus = Torus::new(self.d(), self.cfg.m.unwrap())?;
        let mut e = Ensemble::new(torus, self.boundary());
        if let Some(budget) = self.cfg.budget {
            e = e.with_enumeration_budget(budget);
        }
        Ok(e)
    }

    pub fn lambdas_exact(&self) -> Vec<Activity> {
        self.cfg
            .lambda
            .as_ref()
            .unwrap()
            .iter()
            .map(|s| Activity::from_str(s).unwrap())
            .collect()
    }

    pub fn lambdas_float(&self) -> Vec<f64> {
        self.cfg
            .lambda
            .as_ref()
            .unwrap()
            .iter()
            .map(|s| s.parse().unwrap())
            .collect()
    }

    pub fn slack(&self) -> Slack {
        match &self.cfg.psi {
            Some(psi) => parse_slack(psi).unwrap(),
            None => Slack::SqrtDim,
        }
    }

    pub fn policy(&self) -> FlowPolicy {
        let tau = match (self.cfg.tau, self.cfg.force_large, self.cfg.force_small) {
            (Some(tau), _, _) => tau,
            (None, Some(true), _) => 0,
            (None, _, Some(true)) => usize::MAX,
            _ => {
                let d = self.d();
                d * d * d
            }
        };
        FlowPolicy {
            tau,
            slack: self.slack(),
        }
    }

    pub fn tq_pairs(&self) -> Vec<(usize, usize)> {
        self.cfg
            .tq
            .as_ref()
            .unwrap()
            .iter()
            .map(|s| parse_pair(s).unwrap())
            .collect()
    }

    pub fn output(&self) -> Option<&Path> {
        self.cfg.output.as_deref()
    }

    /// The resolved config as JSON, exactly as echoed in output headers.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(&self.cfg).expect("config serializes")
    }

    /// FNV-1a hash of the compact echoed config.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_string(&self.echo()).expect("config serializes");
        format!("{:#018x}", fnv1a(compact.as_bytes()))
    }
}

fn parse_slack(s: &str) -> Result<Slack, CliError> {
    let r = BigRational::from_str(s)
        .map_err(|_| usage(format!("psi must be a rational like 3/2, got {s:?}")))?;
    if r < BigRational::from_integer(0.into()) {
        return Err(usage(format!("psi must be nonnegative, got {s}")));
    }
    Ok(Slack::Exact(r))
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("cannot parse {}: {e}", path.display())))
}

fn overlay(cfg: &mut RunConfig, args: &CommonArgs) -> Result<(), CliError> {
    if let Some(d) = args.d {
        cfg.d = Some(d);
    }
    if let Some(m) = args.m {
        cfg.m = Some(m);
    }
    if let Some(lambda) = &args.lambda {
        cfg.lambda = Some(lambda.clone());
    }
    if let Some(v0) = &args.v0 {
        cfg.v0 = Some(parse_coords(v0)?);
    }
    if let Some(boundary) = &args.boundary {
        cfg.boundary = Some(boundary.clone());
    }
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(sweeps) = args.sweeps {
        cfg.sweeps = Some(sweeps);
    }
    if let Some(burn_in) = args.burn_in {
        cfg.burn_in = Some(burn_in);
    }
    if let Some(tau) = args.tau {
        cfg.tau = Some(tau);
    }
    if let Some(force_large) = args.force_large {
        cfg.force_large = Some(force_large);
    }
    if let Some(force_small) = args.force_small {
        cfg.force_small = Some(force_small);
    }
    if let Some(psi) = &args.psi {
        cfg.psi = Some(psi.clone());
    }
    if let Some(budget) = args.budget {
        cfg.budget = Some(budget);
    }
    if let Some(samples) = args.samples {
        cfg.samples = Some(samples);
    }
    if let Some(gap) = args.gap {
        cfg.gap = Some(gap);
    }
    if let Some(q_max) = args.q_max {
        cfg.q_max = Some(q_max);
    }
    if let Some(r_max) = args.r_max {
        cfg.r_max = Some(r_max);
    }
    if let Some(tq) = &args.tq {
        cfg.tq = Some(tq.clone());
    }
    if let Some(output) = &args.output {
        cfg.output = Some(output.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args() -> CommonArgs {
        CommonArgs {
            config: None,
            d: None,
            m: None,
            lambda: None,
            v0: None,
            boundary: None,
            seed: None,
            sweeps: None,
            burn_in: None,
            tau: None,
            force_large: None,
            force_small: None,
            psi: None,
            budget: None,
            samples: None,
            gap: None,
            q_max: None,
            r_max: None,
            tq: None,
            output: None,
        }
    }

    #[test]
    fn defaults_fill_a_bare_exact_run() {
        let r = Resolved::from_args("exact", &args()).unwrap();
        assert_eq!(r.d(), 2);
        assert_eq!(r.v0_coords(), &[0, 0]);
        assert_eq!(r.cfg.lambda.as_deref().unwrap(), ["1"]);
        assert_eq!(r.boundary(), Boundary::Even);
    }

    #[test]
    fn lambdas_are_sorted_and_deduplicated() {
        let mut a = args();
        a.lambda = Some(vec!["5".into(), "1/2".into(), "5".into(), "2".into()]);
        let r = Resolved::from_args("exact", &a).unwrap();
        assert_eq!(r.cfg.lambda.as_deref().unwrap(), ["1/2", "2", "5"]);
    }

    #[test]
    fn sampling_rejects_rational_activities() {
        let mut a = args();
        a.lambda = Some(vec!["1/2".into()]);
        let err = Resolved::from_args("sample", &a).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn audits_insist_on_the_even_boundary() {
        let mut a = args();
        a.boundary = Some("odd".into());
        let err = Resolved::from_args("flow-audit", &a).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn force_flags_conflict_with_each_other_and_with_tau() {
        let mut a = args();
        a.force_large = Some(true);
        a.force_small = Some(true);
        assert_eq!(
            Resolved::from_args("flow-audit", &a).unwrap_err().exit_code(),
            2
        );
        let mut a = args();
        a.force_large = Some(true);
        a.tau = Some(3);
        assert_eq!(
            Resolved::from_args("flow-audit", &a).unwrap_err().exit_code(),
            2
        );
    }

    #[test]
    fn the_policy_reflects_tau_and_the_force_flags() {
        let r = Resolved::from_args("flow-audit", &args()).unwrap();
        assert_eq!(r.policy().tau, 8);
        let mut a = args();
        a.force_large = Some(true);
        let r = Resolved::from_args("flow-audit", &a).unwrap();
        assert_eq!(r.policy().tau, 0);
        let mut a = args();
        a.force_small = Some(true);
        let r = Resolved::from_args("flow-audit", &a).unwrap();
        assert_eq!(r.policy().tau, usize::MAX);
    }

    #[test]
    fn coordinate_strings_accept_optional_parentheses() {
        assert_eq!(parse_coords("(1,0)").unwrap(), vec![1, 0]);
        assert_eq!(parse_coords("1, -2").unwrap(), vec![1, -2]);
        assert!(parse_coords("1;0").is_err());
    }

    #[test]
    fn the_hash_is_stable_and_sensitive() {
        let r1 = Resolved::from_args("exact", &args()).unwrap();
        let r2 = Resolved::from_args("exact", &args()).unwrap();
        assert_eq!(r1.hash(), r2.hash());
        let mut a = args();
        a.m = Some(3);
        let r3 = Resolved::from_args("exact", &a).unwrap();
        assert_ne!(r1.hash(), r3.hash());
    }
}
