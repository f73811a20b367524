//! Glauber-dynamics sampling of the conditioned hard-core measures.
//!
//! Single-site heat-bath updates: a uniformly chosen unfrozen vertex is
//! vacated if a neighbor is occupied, and otherwise occupied with probability
//! `lambda / (1 + lambda)`. This is the single-site conditional law of the
//! measure, so the chain is reversible with respect to it. Estimates carry
//! batch-means standard errors; replicas are reproducible through
//! counter-based RNG streams keyed by seed and replica id.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{Boundary, Ensemble};
use crate::lattice::{Torus, Vertex, VertexSet};

/// One Markov chain over configurations of a fixed ensemble.
pub struct ChainState {
    occupancy: VertexSet,
    frozen: VertexSet,
    free: Vec<Vertex>,
    rng: ChaCha8Rng,
    sweeps_done: u64,
}

impl ChainState {
    /// A chain for the given ensemble, started from the frozen set.
    pub fn new(e: &Ensemble, seed: u64, stream: u64) -> ChainState {
        ChainState::with_frozen(e.torus(), e.frozen().clone(), seed, stream)
    }

    /// A chain over independent sets containing `frozen`, started there.
    pub fn with_frozen(t: &Torus, frozen: VertexSet, seed: u64, stream: u64) -> ChainState {
        assert!(t.is_independent(&frozen), "frozen set must be independent");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let free = (0..t.vertex_count() as u32)
            .map(Vertex)
            .filter(|v| !frozen.contains(*v))
            .collect();
        ChainState {
            occupancy: frozen.clone(),
            frozen,
            free,
            rng,
            sweeps_done: 0,
        }
    }

    pub fn occupancy(&self) -> &VertexSet {
        &self.occupancy
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps_done
    }

    /// Number of unfrozen vertices, the length of one sweep.
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// Heat-bath update of one vertex with an externally supplied coin.
    ///
    /// Public so that coupled chains can share randomness.
    pub fn apply_update(&mut self, t: &Torus, v: Vertex, coin: f64, lambda: f64) {
        debug_assert!(!self.frozen.contains(v), "frozen vertices are never updated");
        let blocked = t.neighbors(v).iter().any(|&w| self.occupancy.contains(w));
        if !blocked && coin < lambda / (1.0 + lambda) {
            self.occupancy.insert(v);
        } else {
            self.occupancy.remove(v);
        }
    }

    /// One heat-bath update at a uniformly chosen unfrozen vertex.
    ///
    /// Always draws one index and one coin, so the consumed randomness per
    /// step is fixed regardless of the outcome.
    pub fn glauber_step(&mut self, t: &Torus, lambda: f64) {
        assert!(lambda > 0.0);
        let idx = self.rng.random_range(0..self.free.len());
        let coin: f64 = self.rng.random();
        self.apply_update(t, self.free[idx], coin, lambda);
    }

    /// One update per unfrozen vertex.
    pub fn sweep(&mut self, t: &Torus, lambda: f64) {
        for _ in 0..self.free.len() {
            self.glauber_step(t, lambda);
        }
        self.sweeps_done += 1;
        debug_assert!(t.is_independent(&self.occupancy));
        debug_assert!(self.frozen.is_subset(&self.occupancy));
    }
}

/// Point estimate of an occupation probability with batch-means error bars.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub lambda: f64,
    pub boundary: String,
    pub v0: String,
    pub estimate: f64,
    pub stderr: f64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
}

/// Space-free coordinate label used in CSV output.
fn coord_label(t: &Torus, v: Vertex) -> String {
    t.coords(v)
        .iter()
        .map(i64::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// Estimates the probability that `v0` is occupied, measuring once per sweep
/// after `burn_in` of the `sweeps` total sweeps.
pub fn estimate_occupation(
    e: &Ensemble,
    lambda: f64,
    v0: Vertex,
    sweeps: u64,
    burn_in: u64,
    seed: u64,
) -> EstimateReport {
    estimate_occupation_with_stream(e, lambda, v0, sweeps, burn_in, seed, 0)
}

/// As [`estimate_occupation`], on an explicit RNG stream (replica id).
pub fn estimate_occupation_with_stream(
    e: &Ensemble,
    lambda: f64,
    v0: Vertex,
    sweeps: u64,
    burn_in: u64,
    seed: u64,
    stream: u64,
) -> EstimateReport {
    assert!(lambda > 0.0);
    assert!(sweeps > burn_in, "need at least one measured sweep");
    let t = e.torus();
    let mut chain = ChainState::new(e, seed, stream);
    for _ in 0..burn_in {
        chain.sweep(t, lambda);
    }
    let measured = sweeps - burn_in;
    let mut hits: Vec<u64> = Vec::with_capacity(measured as usize);
    let mut total = 0u64;
    for _ in 0..measured {
        chain.sweep(t, lambda);
        let hit = u64::from(chain.occupancy().contains(v0));
        total += hit;
        hits.push(hit);
    }
    let estimate = total as f64 / measured as f64;

    let batches = measured.min(100);
    let stderr = if batches >= 2 {
        let base = (measured / batches) as usize;
        let extra = (measured % batches) as usize;
        let mut start = 0usize;
        let mut sum_sq = 0.0f64;
        for b in 0..batches as usize {
            let len = base + usize::from(b < extra);
            let mean =
                hits[start..start + len].iter().sum::<u64>() as f64 / len as f64;
            sum_sq += (mean - estimate) * (mean - estimate);
            start += len;
        }
        (sum_sq / (batches as f64 * (batches as f64 - 1.0))).sqrt()
    } else {
        0.0
    };

    EstimateReport {
        d: t.d(),
        m: t.m(),
        lambda,
        boundary: e.boundary().name().to_string(),
        v0: coord_label(t, v0),
        estimate,
        stderr,
        sweeps,
        burn_in,
        seed,
    }
}

/// Paired even/odd estimates at one activity.
#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub lambda: f64,
    pub even_estimate: f64,
    pub even_stderr: f64,
    pub odd_estimate: f64,
    pub odd_stderr: f64,
    pub gap: f64,
}

/// Result of scanning a grid of activities under both boundary conditions.
pub struct GapScan {
    pub rows: Vec<GapRow>,
    pub reports: Vec<EstimateReport>,
}

/// Estimates the even/odd occupation gap at `v0` across an activity grid.
///
/// Replicas run concurrently with no shared state: replica ids (and hence
/// RNG streams) are assigned by grid position, so the output is independent
/// of scheduling.
pub fn gap_scan(
    d: usize,
    m: usize,
    lambdas: &[f64],
    v0_coords: &[i64],
    sweeps: u64,
    burn_in: u64,
    seed: u64,
) -> crate::Result<GapScan> {
    let probe = Torus::new(d, m)?;
    let v0 = probe.vertex(v0_coords)?;
    if probe.parity(v0) != crate::lattice::Parity::Even {
        return Err(crate::Error::Precondition(format!(
            "gap scans probe an even vertex; {v0_coords:?} is odd"
        )));
    }
    let jobs: Vec<(usize, Boundary)> = (0..lambdas.len())
        .flat_map(|i| [(i, Boundary::Even), (i, Boundary::Odd)])
        .collect();
    let reports: Vec<EstimateReport> = jobs
        .par_iter()
        .map(|&(i, boundary)| {
            let t = Torus::new(d, m).expect("validated above");
            let v0 = t.vertex(v0_coords).expect("validated above");
            let e = Ensemble::new(t, boundary);
            let stream = (2 * i + usize::from(boundary == Boundary::Odd)) as u64;
            estimate_occupation_with_stream(&e, lambdas[i], v0, sweeps, burn_in, seed, stream)
        })
        .collect();
    let rows = (0..lambdas.len())
        .map(|i| {
            let even = &reports[2 * i];
            let odd = &reports[2 * i + 1];
            GapRow {
                lambda: lambdas[i],
                even_estimate: even.estimate,
                even_stderr: even.stderr,
                odd_estimate: odd.estimate,
                odd_stderr: odd.stderr,
                gap: even.estimate - odd.estimate,
            }
        })
        .collect();
    Ok(GapScan { rows, reports })
}
