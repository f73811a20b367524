//! Even-sided discrete tori and dense bitmask vertex sets.
//!
//! `Torus::new(d, m)` builds the graph on coordinate vectors in
//! `{-(m-1), ..., m}^d` with arithmetic modulo `2m`, so `m + 1` wraps to
//! `-(m-1)`. Every vertex has degree `2d` and the graph is bipartite under
//! coordinate-sum parity. The boundary layer `delta` collects the vertices
//! with some coordinate equal to `m`.
//!
//! Vertices are addressed by row-major index over coordinates shifted to
//! `{0, ..., 2m-1}`, axis 0 most significant. `VertexSet` is a plain bitmask
//! over those indices with a cached cardinality.

use std::collections::VecDeque;
use std::fmt;

use crate::{Error, Result};

/// Default ceiling on torus size; everything in this crate stays far below it.
pub const DEFAULT_VERTEX_BUDGET: usize = 1 << 20;

/// A torus vertex, identified by its row-major index.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Vertex(pub u32);

impl Vertex {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Coordinate-sum parity class.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// A signed axis direction: the unit step `+e_axis` or `-e_axis`.
///
/// Directions are ordered `+e_1, -e_1, +e_2, -e_2, ...`, which is the
/// tie-break order used whenever a direction must be chosen canonically.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Direction {
    axis: u16,
    positive: bool,
}

impl Direction {
    pub fn new(axis: usize, positive: bool) -> Direction {
        Direction { axis: axis as u16, positive }
    }

    /// Zero-based axis.
    pub fn axis(self) -> usize {
        self.axis as usize
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    pub fn reverse(self) -> Direction {
        Direction { axis: self.axis, positive: !self.positive }
    }

    /// Signed 1-based label: `+e_2` is `2`, `-e_2` is `-2`.
    pub fn signed(self) -> i32 {
        let j = self.axis as i32 + 1;
        if self.positive {
            j
        } else {
            -j
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.signed())
    }
}

/// Dense bitmask set over the vertices of one torus.
///
/// Stores its universe size so complements are well defined; the cardinality
/// is kept in sync with the mask by every operation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: u32,
    blocks: Vec<u64>,
    count: u32,
}

impl VertexSet {
    pub fn new(n: usize) -> VertexSet {
        VertexSet { n: n as u32, blocks: vec![0; n.div_ceil(64)], count: 0 }
    }

    pub fn full(n: usize) -> VertexSet {
        let mut s = VertexSet::new(n);
        for b in s.blocks.iter_mut() {
            *b = !0;
        }
        s.trim();
        s.count = n as u32;
        s
    }

    pub fn singleton(n: usize, v: Vertex) -> VertexSet {
        let mut s = VertexSet::new(n);
        s.insert(v);
        s
    }

    pub fn collect(n: usize, vs: impl IntoIterator<Item = Vertex>) -> VertexSet {
        let mut s = VertexSet::new(n);
        for v in vs {
            s.insert(v);
        }
        s
    }

    /// Size of the universe the set lives in.
    pub fn universe(&self) -> usize {
        self.n as usize
    }

    pub fn len(&self) -> usize {
        self.count as usize
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, v: Vertex) -> bool {
        debug_assert!(v.0 < self.n);
        self.blocks[v.index() / 64] >> (v.index() % 64) & 1 == 1
    }

    /// Inserts `v`; returns whether the set changed.
    pub fn insert(&mut self, v: Vertex) -> bool {
        debug_assert!(v.0 < self.n);
        let b = &mut self.blocks[v.index() / 64];
        let bit = 1u64 << (v.index() % 64);
        if *b & bit == 0 {
            *b |= bit;
            self.count += 1;
            true
        } else {
            false
        }
    }

    /// Removes `v`; returns whether the set changed.
    pub fn remove(&mut self, v: Vertex) -> bool {
        debug_assert!(v.0 < self.n);
        let b = &mut self.blocks[v.index() / 64];
        let bit = 1u64 << (v.index() % 64);
        if *b & bit != 0 {
            *b &= !bit;
            self.count -= 1;
            true
        } else {
            false
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.blocks.iter().enumerate().flat_map(|(i, &b)| {
            let mut b = b;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let tz = b.trailing_zeros();
                b &= b - 1;
                Some(Vertex(i as u32 * 64 + tz))
            })
        })
    }

    /// Smallest member by index.
    pub fn first(&self) -> Option<Vertex> {
        self.iter().next()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn inter(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn minus(&self, other: &VertexSet) -> VertexSet {
        self.zip_with(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> VertexSet {
        let mut s = VertexSet {
            n: self.n,
            blocks: self.blocks.iter().map(|b| !b).collect(),
            count: 0,
        };
        s.trim();
        s.count = s.popcount();
        s
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        debug_assert_eq!(self.n, other.n);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & b == 0)
    }

    /// The mask as a hex numeral (bit `v` set iff vertex `v` is a member).
    pub fn to_hex(&self) -> String {
        let mut out = String::from("0x");
        let mut seen = false;
        for &b in self.blocks.iter().rev() {
            if seen {
                out.push_str(&format!("{b:016x}"));
            } else if b != 0 {
                out.push_str(&format!("{b:x}"));
                seen = true;
            }
        }
        if !seen {
            out.push('0');
        }
        out
    }

    pub fn from_hex(n: usize, hex: &str) -> Result<VertexSet> {
        let digits = hex.strip_prefix("0x").unwrap_or(hex);
        let mut s = VertexSet::new(n);
        for (pos, ch) in digits.chars().rev().enumerate() {
            let val = ch
                .to_digit(16)
                .ok_or_else(|| Error::Precondition(format!("bad hex digit {ch:?} in mask")))?
                as u64;
            for bit in 0..4 {
                if val >> bit & 1 == 1 {
                    let idx = pos * 4 + bit;
                    if idx >= n {
                        return Err(Error::Precondition(format!(
                            "mask {hex} has bit {idx} set outside universe of {n}"
                        )));
                    }
                    s.insert(Vertex(idx as u32));
                }
            }
        }
        Ok(s)
    }

    fn zip_with(&self, other: &VertexSet, f: impl Fn(u64, u64) -> u64) -> VertexSet {
        debug_assert_eq!(self.n, other.n);
        let mut s = VertexSet {
            n: self.n,
            blocks: self.blocks.iter().zip(&other.blocks).map(|(&a, &b)| f(a, b)).collect(),
            count: 0,
        };
        s.count = s.popcount();
        s
    }

    fn popcount(&self) -> u32 {
        self.blocks.iter().map(|b| b.count_ones()).sum()
    }

    fn trim(&mut self) {
        let extra = self.blocks.len() * 64 - self.n as usize;
        if extra > 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= !0 >> extra;
            }
        }
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|v| v.0)).finish()
    }
}

/// The discrete torus graph.
pub struct Torus {
    d: usize,
    m: usize,
    side: usize,
    n: usize,
    /// Flat neighbor table, stride `2d`; slots `2*axis` and `2*axis + 1`
    /// hold the `+e_axis` and `-e_axis` neighbors.
    nbrs: Vec<Vertex>,
    even: VertexSet,
    odd: VertexSet,
    delta: VertexSet,
}

impl Torus {
    pub fn new(d: usize, m: usize) -> Result<Torus> {
        Torus::with_budget(d, m, DEFAULT_VERTEX_BUDGET)
    }

    pub fn with_budget(d: usize, m: usize, budget: usize) -> Result<Torus> {
        if d == 0 {
            return Err(Error::DimensionZero);
        }
        if m < 2 {
            return Err(Error::SideTooSmall(m));
        }
        let side = 2 * m;
        let mut n: usize = 1;
        for _ in 0..d {
            n = n
                .checked_mul(side)
                .ok_or(Error::TorusBudget { vertices: usize::MAX, budget })?;
        }
        if n > budget {
            return Err(Error::TorusBudget { vertices: n, budget });
        }

        let mut nbrs = Vec::with_capacity(n * 2 * d);
        let mut even = VertexSet::new(n);
        let mut odd = VertexSet::new(n);
        let mut delta = VertexSet::new(n);
        let mut shifted = vec![0usize; d];
        for v in 0..n {
            let mut rest = v;
            for axis in (0..d).rev() {
                shifted[axis] = rest % side;
                rest /= side;
            }
            let mut sum = 0usize;
            for axis in 0..d {
                sum += shifted[axis];
                let stride = side.pow((d - 1 - axis) as u32);
                let plus = if shifted[axis] + 1 == side {
                    v - (side - 1) * stride
                } else {
                    v + stride
                };
                let minus = if shifted[axis] == 0 {
                    v + (side - 1) * stride
                } else {
                    v - stride
                };
                nbrs.push(Vertex(plus as u32));
                nbrs.push(Vertex(minus as u32));
                if shifted[axis] == side - 1 {
                    delta.insert(Vertex(v as u32));
                }
            }
            // Shifting every coordinate by m - 1 changes the sum by d*(m - 1),
            // a constant, so parity classes only need a consistent convention:
            // tie it to the true coordinate sum.
            if (sum + d * (m - 1)) % 2 == 0 {
                even.insert(Vertex(v as u32));
            } else {
                odd.insert(Vertex(v as u32));
            }
        }

        Ok(Torus { d, m, side, n, nbrs, even, odd, delta })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Side length `2m`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Vertex degree, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.d
    }

    pub fn parity(&self, v: Vertex) -> Parity {
        if self.odd.contains(v) {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn even_class(&self) -> &VertexSet {
        &self.even
    }

    pub fn odd_class(&self) -> &VertexSet {
        &self.odd
    }

    pub fn class(&self, p: Parity) -> &VertexSet {
        match p {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }

    /// Vertices with some coordinate equal to `m`.
    pub fn delta_set(&self) -> &VertexSet {
        &self.delta
    }

    pub fn directions(&self) -> impl Iterator<Item = Direction> {
        (0..self.d).flat_map(|axis| {
            [Direction::new(axis, true), Direction::new(axis, false)]
        })
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        let s = v.index() * 2 * self.d;
        &self.nbrs[s..s + 2 * self.d]
    }

    /// The vertex one unit step from `v` along `dir`.
    pub fn shift(&self, v: Vertex, dir: Direction) -> Vertex {
        self.nbrs[v.index() * 2 * self.d + 2 * dir.axis() + usize::from(!dir.is_positive())]
    }

    pub fn shift_set(&self, s: &VertexSet, dir: Direction) -> VertexSet {
        VertexSet::collect(self.n, s.iter().map(|v| self.shift(v, dir)))
    }

    /// Vertex with the given coordinates, each in `{-(m-1), ..., m}`.
    pub fn vertex(&self, coords: &[i64]) -> Result<Vertex> {
        if coords.len() != self.d {
            return Err(Error::BadCoordinates(format!("{coords:?}")));
        }
        let mut idx = 0usize;
        for &c in coords {
            if c < -(self.m as i64 - 1) || c > self.m as i64 {
                return Err(Error::BadCoordinates(format!("{coords:?}")));
            }
            idx = idx * self.side + (c + self.m as i64 - 1) as usize;
        }
        Ok(Vertex(idx as u32))
    }

    pub fn coords(&self, v: Vertex) -> Vec<i64> {
        let mut out = vec![0i64; self.d];
        let mut rest = v.index();
        for axis in (0..self.d).rev() {
            out[axis] = (rest % self.side) as i64 - (self.m as i64 - 1);
            rest /= self.side;
        }
        out
    }

    /// Graph distance (wrapped `l1` distance).
    pub fn distance(&self, u: Vertex, v: Vertex) -> usize {
        let (cu, cv) = (self.coords(u), self.coords(v));
        let mut total = 0usize;
        for axis in 0..self.d {
            let raw = (cu[axis] - cv[axis]).unsigned_abs() as usize;
            total += raw.min(self.side - raw);
        }
        total
    }

    /// Number of neighbors of `v` inside `s`.
    pub fn degree_in(&self, v: Vertex, s: &VertexSet) -> usize {
        self.neighbors(v).iter().filter(|&&w| s.contains(w)).count()
    }

    /// Whether no two members of `s` are adjacent.
    pub fn is_independent(&self, s: &VertexSet) -> bool {
        s.iter().all(|v| self.neighbors(v).iter().all(|w| !s.contains(*w)))
    }

    /// `N(s)`: all vertices adjacent to a member of `s`.
    pub fn neighborhood(&self, s: &VertexSet) -> VertexSet {
        let mut out = VertexSet::new(self.n);
        for v in s.iter() {
            for &w in self.neighbors(v) {
                out.insert(w);
            }
        }
        out
    }

    /// `N(s) \ s`.
    pub fn external_boundary(&self, s: &VertexSet) -> VertexSet {
        self.neighborhood(s).minus(s)
    }

    /// Members of `s` with a neighbor outside `s`.
    pub fn internal_boundary(&self, s: &VertexSet) -> VertexSet {
        VertexSet::collect(
            self.n,
            s.iter().filter(|&v| self.neighbors(v).iter().any(|w| !s.contains(*w))),
        )
    }

    /// Number of edges with one endpoint in `s` and the other in `t`.
    pub fn edge_boundary(&self, s: &VertexSet, t: &VertexSet) -> usize {
        let mut count = 0usize;
        for u in 0..self.n {
            let u = Vertex(u as u32);
            for &v in self.neighbors(u) {
                if v > u
                    && ((s.contains(u) && t.contains(v)) || (t.contains(u) && s.contains(v)))
                {
                    count += 1;
                }
            }
        }
        count
    }

    /// Connected component of `seed` in the graph with `excluded` removed.
    pub fn component(&self, excluded: &VertexSet, seed: Vertex) -> VertexSet {
        assert!(!excluded.contains(seed), "component seed is excluded");
        let mut comp = VertexSet::singleton(self.n, seed);
        let mut queue = VecDeque::from([seed]);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if !excluded.contains(w) && comp.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        comp
    }

    /// All connected components of the graph with `excluded` removed.
    pub fn components_excluding(&self, excluded: &VertexSet) -> Vec<VertexSet> {
        let mut seen = excluded.clone();
        let mut out = Vec::new();
        for v in 0..self.n {
            let v = Vertex(v as u32);
            if !seen.contains(v) {
                let comp = self.component(excluded, v);
                seen = seen.union(&comp);
                out.push(comp);
            }
        }
        out
    }

    /// Whether any two members of `t` are linked by a chain of members with
    /// consecutive (ambient) distances at most `c`.
    pub fn is_c_clustered(&self, t: &VertexSet, c: usize) -> bool {
        let verts: Vec<Vertex> = t.iter().collect();
        let mut dsu = Dsu::new(verts.len());
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                if self.distance(verts[i], verts[j]) <= c {
                    dsu.union(i, j);
                }
            }
        }
        dsu.component_count() <= 1
    }

    /// Like [`Torus::is_c_clustered`], but distances are measured inside the
    /// subgraph induced by `within` (which must contain `t`).
    pub fn is_c_clustered_within(&self, t: &VertexSet, c: usize, within: &VertexSet) -> bool {
        debug_assert!(t.is_subset(within));
        let verts: Vec<Vertex> = t.iter().collect();
        let mut dsu = Dsu::new(verts.len());
        for (i, &start) in verts.iter().enumerate() {
            let mut dist = vec![usize::MAX; self.n];
            dist[start.index()] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                if dist[u.index()] == c {
                    continue;
                }
                for &w in self.neighbors(u) {
                    if within.contains(w) && dist[w.index()] == usize::MAX {
                        dist[w.index()] = dist[u.index()] + 1;
                        queue.push_back(w);
                    }
                }
            }
            for (j, &other) in verts.iter().enumerate().skip(i + 1) {
                if dist[other.index()] != usize::MAX {
                    dsu.union(i, j);
                }
            }
        }
        dsu.component_count() <= 1
    }

    /// Smallest `c` for which `t` is c-clustered (0 for at most one vertex).
    pub fn clusteredness(&self, t: &VertexSet) -> usize {
        let verts: Vec<Vertex> = t.iter().collect();
        if verts.len() <= 1 {
            return 0;
        }
        let mut pairs = Vec::new();
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                pairs.push((self.distance(verts[i], verts[j]), i, j));
            }
        }
        pairs.sort_unstable();
        let mut dsu = Dsu::new(verts.len());
        for (dist, i, j) in pairs {
            dsu.union(i, j);
            if dsu.component_count() == 1 {
                return dist;
            }
        }
        unreachable!("sorted pair list always connects the set")
    }
}

struct Dsu {
    parent: Vec<usize>,
    components: usize,
}

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu { parent: (0..n).collect(), components: n }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            self.parent[i] = self.find(self.parent[i]);
        }
        self.parent[i]
    }

    fn union(&mut self, i: usize, j: usize) {
        let (ri, rj) = (self.find(i), self.find(j));
        if ri != rj {
            self.parent[ri] = rj;
            self.components -= 1;
        }
    }

    fn component_count(&self) -> usize {
        self.components
    }
}
