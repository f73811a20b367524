//! Exact boundary-conditioned ensembles.
//!
//! A configuration is an independent set `I` that contains the frozen
//! vertices dictated by the boundary condition: the even (odd) boundary
//! freezes the even (odd) vertices of the boundary layer `delta` to occupied,
//! the free boundary freezes nothing. Configuration `I` has weight
//! `lambda^|I|`, and all probabilities here are exact rationals obtained by
//! exhaustive enumeration.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};

use crate::lattice::{Parity, Torus, Vertex, VertexSet};
use crate::{Error, Result};

/// Largest torus (in vertices) the exhaustive enumerations accept by default.
pub const DEFAULT_ENUMERATION_BUDGET: usize = 36;

/// A nonnegative rational activity.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Activity(BigRational);

impl Activity {
    pub fn new(value: BigRational) -> Result<Activity> {
        if value.is_negative() {
            return Err(Error::BadActivity(value.to_string()));
        }
        Ok(Activity(value))
    }

    pub fn from_ratio(num: i64, den: i64) -> Result<Activity> {
        if den == 0 {
            return Err(Error::BadActivity(format!("{num}/{den}")));
        }
        Activity::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(&self.0).expect("activity fits in f64")
    }

    /// `lambda^size`, the weight of a configuration with `size` particles.
    pub fn weight(&self, size: usize) -> BigRational {
        num::pow::pow(self.0.clone(), size)
    }
}

impl FromStr for Activity {
    type Err = Error;

    /// Parses `"p"` or `"p/q"` with nonnegative integer parts.
    fn from_str(s: &str) -> Result<Activity> {
        let bad = || Error::BadActivity(s.to_string());
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Activity::new(BigRational::new(num, den))
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Boundary condition: which side of the boundary layer is frozen occupied.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Boundary {
    Even,
    Odd,
    Free,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Even => "even",
            Boundary::Odd => "odd",
            Boundary::Free => "free",
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Boundary> {
        match s {
            "even" => Ok(Boundary::Even),
            "odd" => Ok(Boundary::Odd),
            "free" => Ok(Boundary::Free),
            other => Err(Error::Precondition(format!("unknown boundary {other:?}"))),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A torus together with a boundary condition.
pub struct Ensemble {
    torus: Torus,
    boundary: Boundary,
    frozen: VertexSet,
    budget: usize,
}

impl Ensemble {
    pub fn new(torus: Torus, boundary: Boundary) -> Ensemble {
        let frozen = match boundary {
            Boundary::Even => torus.delta_set().inter(torus.even_class()),
            Boundary::Odd => torus.delta_set().inter(torus.odd_class()),
            Boundary::Free => VertexSet::new(torus.vertex_count()),
        };
        Ensemble { torus, boundary, frozen, budget: DEFAULT_ENUMERATION_BUDGET }
    }

    pub fn with_enumeration_budget(mut self, budget: usize) -> Ensemble {
        self.budget = budget;
        self
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// The vertices every configuration must contain.
    pub fn frozen(&self) -> &VertexSet {
        &self.frozen
    }

    /// Whether `s` is a configuration of this ensemble.
    pub fn is_configuration(&self, s: &VertexSet) -> bool {
        self.frozen.is_subset(s) && self.torus.is_independent(s)
    }

    /// Visits every configuration exactly once, in ascending bitmask order.
    ///
    /// Runs a depth-first scan deciding vertices from the highest index down,
    /// pruning branches that occupy a neighbor of an occupied vertex or skip
    /// a frozen vertex.
    pub fn for_each_configuration(&self, mut f: impl FnMut(&VertexSet)) -> Result<()> {
        let n = self.torus.vertex_count();
        if n > self.budget {
            return Err(Error::EnumerationBudget { vertices: n, budget: self.budget });
        }
        let mut current = VertexSet::new(n);
        self.descend(n, &mut current, &mut f);
        Ok(())
    }

    fn descend(&self, undecided: usize, current: &mut VertexSet, f: &mut impl FnMut(&VertexSet)) {
        if undecided == 0 {
            f(current);
            return;
        }
        let v = Vertex(undecided as u32 - 1);
        if !self.frozen.contains(v) {
            self.descend(undecided - 1, current, f);
        }
        let blocked = self
            .torus
            .neighbors(v)
            .iter()
            .any(|w| w.index() >= undecided && current.contains(*w));
        if !blocked {
            current.insert(v);
            self.descend(undecided - 1, current, f);
            current.remove(v);
        }
    }

    pub fn configurations(&self) -> Result<Vec<VertexSet>> {
        let mut out = Vec::new();
        self.for_each_configuration(|s| out.push(s.clone()))?;
        Ok(out)
    }

    /// Number of configurations of each size. Entry `k` counts the
    /// configurations with exactly `k` occupied vertices, so the partition
    /// function is the value of this polynomial at `lambda`.
    pub fn size_counts(&self) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; self.torus.vertex_count() + 1];
        self.for_each_configuration(|s| counts[s.len()] += 1)?;
        while counts.len() > 1 && *counts.last().unwrap() == 0 {
            counts.pop();
        }
        Ok(counts)
    }

    pub fn configuration_count(&self) -> Result<u64> {
        Ok(self.size_counts()?.iter().sum())
    }

    /// The partition function: the total weight of all configurations.
    pub fn partition_function(&self, lambda: &Activity) -> Result<BigRational> {
        Ok(evaluate_counts(&self.size_counts()?, lambda))
    }

    /// Exact probability that `v0` is occupied.
    pub fn occupation_probability(&self, lambda: &Activity, v0: Vertex) -> Result<BigRational> {
        let mut hit = vec![0u64; self.torus.vertex_count() + 1];
        let mut all = vec![0u64; self.torus.vertex_count() + 1];
        self.for_each_configuration(|s| {
            all[s.len()] += 1;
            if s.contains(v0) {
                hit[s.len()] += 1;
            }
        })?;
        Ok(evaluate_counts(&hit, lambda) / evaluate_counts(&all, lambda))
    }

    /// Exact probability that `v0` is occupied given all its neighbors are
    /// vacant. Equals `lambda / (1 + lambda)` for any unfrozen `v0` whose
    /// neighbors are all unfrozen.
    pub fn conditional_occupation(&self, lambda: &Activity, v0: Vertex) -> Result<BigRational> {
        let mut open = vec![0u64; self.torus.vertex_count() + 1];
        let mut occupied = vec![0u64; self.torus.vertex_count() + 1];
        self.for_each_configuration(|s| {
            if self.torus.degree_in(v0, s) == 0 {
                open[s.len()] += 1;
                if s.contains(v0) {
                    occupied[s.len()] += 1;
                }
            }
        })?;
        Ok(evaluate_counts(&occupied, lambda) / evaluate_counts(&open, lambda))
    }

    /// Exact probability that `v0` is cut off from the boundary layer: the
    /// total weight of configurations `I` with `v0` outside the component of
    /// `delta` in the graph minus `I`'s odd occupied vertices, over the
    /// partition function. Requires the even boundary and an odd `v0` outside
    /// `delta`.
    pub fn boundary_cut_probability(
        &self,
        lambda: &Activity,
        v0: Vertex,
    ) -> Result<BigRational> {
        self.check_cut_vertex(v0)?;
        let mut cut = vec![0u64; self.torus.vertex_count() + 1];
        let mut all = vec![0u64; self.torus.vertex_count() + 1];
        self.for_each_configuration(|s| {
            all[s.len()] += 1;
            if crate::contour::in_j0(&self.torus, s, v0) {
                cut[s.len()] += 1;
            }
        })?;
        Ok(evaluate_counts(&cut, lambda) / evaluate_counts(&all, lambda))
    }

    /// Validates that the boundary-cut event at `v0` is well posed: even
    /// boundary, odd `v0`, and `v0` outside the boundary layer.
    pub fn check_cut_vertex(&self, v0: Vertex) -> Result<()> {
        if self.boundary != Boundary::Even {
            return Err(Error::Precondition(format!(
                "boundary-cut event needs the even boundary, ensemble has {}",
                self.boundary
            )));
        }
        if self.torus.parity(v0) != Parity::Odd {
            return Err(Error::Precondition(format!("vertex {v0} is not odd")));
        }
        if self.torus.delta_set().contains(v0) {
            return Err(Error::Precondition(format!(
                "vertex {v0} lies in the boundary layer"
            )));
        }
        Ok(())
    }
}

fn evaluate_counts(counts: &[u64], lambda: &Activity) -> BigRational {
    let mut acc = BigRational::zero();
    for &c in counts.iter().rev() {
        acc = acc * lambda.value() + BigRational::from(BigInt::from(c));
    }
    acc
}

/// One exact value with enough context to reproduce it.
#[derive(serde::Serialize, Debug)]
pub struct ExactValueRecord {
    pub d: usize,
    pub m: usize,
    pub boundary: String,
    pub lambda: String,
    pub v0: Vec<i64>,
    pub quantity: String,
    pub value_num: String,
    pub value_den: String,
}

impl ExactValueRecord {
    pub fn new(
        e: &Ensemble,
        lambda: &Activity,
        v0: Vertex,
        quantity: &str,
        value: &BigRational,
    ) -> ExactValueRecord {
        ExactValueRecord {
            d: e.torus().d(),
            m: e.torus().m(),
            boundary: e.boundary().name().to_string(),
            lambda: lambda.to_string(),
            v0: e.torus().coords(v0),
            quantity: quantity.to_string(),
            value_num: value.numer().to_string(),
            value_den: value.denom().to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::One;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    /// Counts configurations the slow way: test every subset of the torus.
    fn brute_force_count(e: &Ensemble) -> u64 {
        let n = e.torus().vertex_count();
        assert!(n <= 20, "brute force oracle only for tiny tori");
        let mut count = 0;
        for mask in 0u32..1 << n {
            let s = VertexSet::collect(
                n,
                (0..n).filter(|&v| mask >> v & 1 == 1).map(|v| Vertex(v as u32)),
            );
            if e.is_configuration(&s) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn enumeration_matches_brute_force_on_4x4() {
        let t = || Torus::new(2, 2).unwrap();
        for boundary in [Boundary::Free, Boundary::Even, Boundary::Odd] {
            let e = Ensemble::new(t(), boundary);
            assert_eq!(
                e.configuration_count().unwrap(),
                brute_force_count(&e),
                "{boundary}"
            );
        }
    }

    #[test]
    fn enumeration_is_ascending_and_valid() {
        let e = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Even);
        let configs = e.configurations().unwrap();
        for s in &configs {
            assert!(e.is_configuration(s));
        }
        let hexes: Vec<String> = configs.iter().map(|s| s.len().to_string() + &s.to_hex()).collect();
        let masks: Vec<u64> = configs
            .iter()
            .map(|s| u64::from_str_radix(s.to_hex().trim_start_matches("0x"), 16).unwrap())
            .collect();
        assert!(masks.windows(2).all(|w| w[0] < w[1]), "not ascending: {hexes:?}");
    }

    #[test]
    fn partition_function_matches_per_configuration_sum() {
        let e = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Even);
        let lambda = Activity::from_str("2/3").unwrap();
        let mut total = BigRational::zero();
        e.for_each_configuration(|s| total += lambda.weight(s.len())).unwrap();
        assert_eq!(e.partition_function(&lambda).unwrap(), total);
        assert_eq!(
            e.partition_function(&Activity::from_ratio(1, 1).unwrap()).unwrap(),
            BigRational::from(BigInt::from(e.configuration_count().unwrap()))
        );
    }

    #[test]
    fn free_boundary_is_vertex_transitive() {
        let e = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Free);
        let lambda = Activity::from_str("3/2").unwrap();
        let p0 = e.occupation_probability(&lambda, Vertex(0)).unwrap();
        for v in 1..16 {
            assert_eq!(e.occupation_probability(&lambda, Vertex(v)).unwrap(), p0);
        }
    }

    #[test]
    fn conditional_occupation_identity() {
        // The identity needs a vertex whose whole neighborhood is unfrozen:
        // any vertex under the free boundary, an even one under the even
        // boundary.
        let free = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Free);
        let odd_v = free.torus().vertex(&[1, 0]).unwrap();
        let even = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Even);
        let even_v = even.torus().vertex(&[0, 0]).unwrap();
        for lambda in ["1/2", "1", "7/3", "5"] {
            let lambda = Activity::from_str(lambda).unwrap();
            let want = lambda.value() / (lambda.value() + BigRational::one());
            assert_eq!(free.conditional_occupation(&lambda, odd_v).unwrap(), want);
            assert_eq!(even.conditional_occupation(&lambda, even_v).unwrap(), want);
        }
    }

    #[test]
    fn frozen_vertices_follow_boundary() {
        let t = Torus::new(2, 2).unwrap();
        let even = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Even);
        let odd = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Odd);
        assert_eq!(even.frozen().len(), 3);
        assert_eq!(odd.frozen().len(), 4);
        assert_eq!(
            even.frozen().union(odd.frozen()),
            t.delta_set().clone()
        );
        let lambda = Activity::from_str("2").unwrap();
        let frozen_v = even.frozen().first().unwrap();
        assert_eq!(
            even.occupation_probability(&lambda, frozen_v).unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn boundary_cut_probability_matches_brute_force() {
        let t = Torus::new(2, 2).unwrap();
        let v0 = t.vertex(&[1, 0]).unwrap();
        let e = Ensemble::new(t, Boundary::Even);
        let lambda = Activity::from_str("2").unwrap();

        // Oracle: re-derive the cut event per configuration with a fresh
        // reachability scan, independent of the contour module.
        let t = e.torus();
        let mut cut_weight = BigRational::zero();
        let mut total = BigRational::zero();
        e.for_each_configuration(|s| {
            let odd_occupied = s.inter(t.odd_class());
            let mut reach = t.delta_set().minus(&odd_occupied);
            let mut frontier: Vec<Vertex> = reach.iter().collect();
            while let Some(u) = frontier.pop() {
                for &w in t.neighbors(u) {
                    if !odd_occupied.contains(w) && reach.insert(w) {
                        frontier.push(w);
                    }
                }
            }
            let w = lambda.weight(s.len());
            if !reach.contains(v0) {
                cut_weight += w.clone();
            }
            total += w;
        })
        .unwrap();

        assert_eq!(
            e.boundary_cut_probability(&lambda, v0).unwrap(),
            cut_weight / total
        );
    }

    #[test]
    fn boundary_cut_preconditions() {
        let t = Torus::new(2, 2).unwrap();
        let even_v = t.vertex(&[0, 0]).unwrap();
        let odd_v = t.vertex(&[1, 0]).unwrap();
        let e = Ensemble::new(t, Boundary::Even);
        let lambda = Activity::from_str("1").unwrap();
        assert!(e.boundary_cut_probability(&lambda, even_v).is_err());
        let free = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Free);
        assert!(free.boundary_cut_probability(&lambda, odd_v).is_err());
    }

    #[test]
    fn enumeration_budget_is_enforced() {
        let e = Ensemble::new(Torus::new(2, 4).unwrap(), Boundary::Free);
        assert!(matches!(
            e.configuration_count(),
            Err(Error::EnumerationBudget { vertices: 64, budget: 36 })
        ));
        let e = Ensemble::new(Torus::new(2, 2).unwrap(), Boundary::Free)
            .with_enumeration_budget(10);
        assert!(matches!(
            e.size_counts(),
            Err(Error::EnumerationBudget { vertices: 16, budget: 10 })
        ));
        let e = e.with_enumeration_budget(16);
        assert!(e.size_counts().is_ok());
    }

    #[test]
    fn activity_parsing() {
        assert_eq!(Activity::from_str("5").unwrap().value(), &rat(5, 1));
        assert_eq!(Activity::from_str("1/2").unwrap().value(), &rat(1, 2));
        assert!(Activity::from_str("-1").is_err());
        assert!(Activity::from_str("1/0").is_err());
        assert!(Activity::from_str("x").is_err());
        assert_eq!(Activity::from_str("7/2").unwrap().weight(3), rat(343, 8));
    }
}
