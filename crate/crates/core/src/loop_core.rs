//! Loop configurations on hexagonal-lattice domains: validation, loop
//! decomposition, weights, surrounding and connectivity predicates, exact
//! enumeration of even and odd-parity configurations, and critical constants.
//!
//! Configurations are exchanged as sets of [`HexEdge`]s ([`LoopConfig`]); the
//! hot paths work on boolean masks over the window edges of a [`HexDomain`].

use crate::error::{bail, Error, Result};
use crate::lattice::{Hex, HexDomain, HexEdge, ShiftDir, NONE};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};

/// Occupation mask indexed by window edge id.
pub type EdgeMask = Vec<bool>;

/// A loop configuration: an edge set in which every vertex has even degree.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LoopConfig {
    edges: BTreeSet<HexEdge>,
}

/// One loop, as cyclically ordered window vertex ids and the edges joining
/// consecutive vertices (`edges[i]` joins `vertices[i]` and `vertices[i+1]`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Loop {
    pub vertices: Vec<u32>,
    pub edges: Vec<u32>,
}

impl Loop {
    pub fn len(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

impl LoopConfig {
    pub fn empty() -> LoopConfig {
        LoopConfig::default()
    }
    /// Unchecked construction from an edge set (see [`validate`]).
    pub fn from_edges_unchecked(edges: impl IntoIterator<Item = HexEdge>) -> LoopConfig {
        LoopConfig { edges: edges.into_iter().collect() }
    }
    pub fn edges(&self) -> &BTreeSet<HexEdge> {
        &self.edges
    }
    /// o(ω): number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
    pub fn contains(&self, e: &HexEdge) -> bool {
        self.edges.contains(e)
    }
    pub fn from_mask(d: &HexDomain, mask: &[bool]) -> LoopConfig {
        LoopConfig { edges: mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| d.edge(i as u32)).collect() }
    }
    /// Window mask; fails if an edge is not an edge of H.
    pub fn to_mask(&self, d: &HexDomain) -> Result<EdgeMask> {
        let mut m = vec![false; d.n_window_edges()];
        for e in &self.edges {
            match d.domain_edge_id(e) {
                Some(i) => m[i as usize] = true,
                None => bail!(InvalidArgument, "edge {e:?} is not an edge of the domain"),
            }
        }
        Ok(m)
    }
    /// ω △ ∂z.
    pub fn flip_face(&self, z: Hex) -> LoopConfig {
        let mut edges = self.edges.clone();
        for e in z.edges() {
            if !edges.remove(&e) {
                edges.insert(e);
            }
        }
        LoopConfig { edges }
    }
    pub fn shift(&self, dir: ShiftDir) -> LoopConfig {
        LoopConfig { edges: self.edges.iter().map(|e| e.shift(dir)).collect() }
    }
    pub fn union(&self, other: &LoopConfig) -> LoopConfig {
        LoopConfig { edges: self.edges.union(&other.edges).copied().collect() }
    }
    /// (o(ω), L(ω)) — requires the edges to lie in the domain window.
    pub fn counts(&self, d: &HexDomain) -> Result<(usize, usize)> {
        let m = self.to_window_mask(d)?;
        Ok((self.len(), count_loops(d, &m)))
    }
    /// Loop decomposition in window ids.
    pub fn loops(&self, d: &HexDomain) -> Result<Vec<Loop>> {
        let m = self.to_window_mask(d)?;
        Ok(loop_decomposition(d, &m))
    }
    fn to_window_mask(&self, d: &HexDomain) -> Result<EdgeMask> {
        let mut m = vec![false; d.n_window_edges()];
        for e in &self.edges {
            match d.edge_id(e) {
                Some(i) => m[i as usize] = true,
                None => bail!(InvalidArgument, "edge {e:?} lies outside the domain window"),
            }
        }
        Ok(m)
    }
}

/// Degree of window vertex v in the mask.
#[inline]
pub fn degree(d: &HexDomain, mask: &[bool], v: u32) -> usize {
    d.vert_edges(v).iter().filter(|&&e| e != NONE && mask[e as usize]).count()
}

/// Window vertices of odd degree.
pub fn odd_vertices(d: &HexDomain, mask: &[bool]) -> Vec<u32> {
    let mut out = BTreeSet::new();
    for (e, &b) in mask.iter().enumerate() {
        if b {
            for v in d.edge_verts(e as u32) {
                if degree(d, mask, v) % 2 == 1 {
                    out.insert(v);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Decomposes an even mask into loops (ℍ is 3-regular, so even-degree vertices
/// have degree 0 or 2 and loops are vertex-disjoint). Loops are returned in
/// increasing order of their smallest edge id.
pub fn loop_decomposition(d: &HexDomain, mask: &[bool]) -> Vec<Loop> {
    let mut seen = vec![false; mask.len()];
    let mut loops = Vec::new();
    for e0 in 0..mask.len() {
        if !mask[e0] || seen[e0] {
            continue;
        }
        let [start, mut cur] = d.edge_verts(e0 as u32);
        let mut vertices = vec![start];
        let mut edges = vec![e0 as u32];
        seen[e0] = true;
        let mut prev_e = e0 as u32;
        while cur != start {
            vertices.push(cur);
            let next = d
                .vert_edges(cur)
                .iter()
                .copied()
                .find(|&e| e != NONE && e != prev_e && mask[e as usize]);
            let Some(ne) = next else { break };
            seen[ne as usize] = true;
            edges.push(ne);
            let [a, b] = d.edge_verts(ne);
            cur = if a == cur { b } else { a };
            prev_e = ne;
        }
        loops.push(Loop { vertices, edges });
    }
    loops
}

/// L(ω).
pub fn count_loops(d: &HexDomain, mask: &[bool]) -> usize {
    loop_decomposition(d, mask).len()
}

/// Validates a raw edge set: edges must be edges of H and every degree even.
pub fn validate(edges: &[HexEdge], d: &HexDomain) -> Result<LoopConfig> {
    let cfg = LoopConfig::from_edges_unchecked(edges.iter().copied());
    let mask = cfg.to_mask(d)?;
    let odd = odd_vertices(d, &mask);
    if !odd.is_empty() {
        return Err(Error::OddDegree(odd.iter().map(|&v| format!("{:?}", d.vertex(v))).collect()));
    }
    Ok(cfg)
}

/// Edge fugacity x ∈ (0, ∞].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Fugacity {
    Finite(f64),
    Infinite,
}

impl Fugacity {
    pub fn parse(x: f64) -> Result<Fugacity> {
        if x == f64::INFINITY {
            Ok(Fugacity::Infinite)
        } else if x > 0.0 && x.is_finite() {
            Ok(Fugacity::Finite(x))
        } else {
            bail!(InvalidArgument, "edge weight x must lie in (0, ∞], got {x}")
        }
    }
}

/// Log-weight of a configuration. For x = ∞ the weight is the lexicographic
/// key (o, L·ln n): configurations with fewer edges have zero relative weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LoopWeight {
    Log(f64),
    Infinite { o: usize, log_n_l: f64 },
}

impl PartialOrd for LoopWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (LoopWeight::Log(a), LoopWeight::Log(b)) => a.partial_cmp(b),
            (LoopWeight::Infinite { o: a, log_n_l: x }, LoopWeight::Infinite { o: b, log_n_l: y }) => {
                Some(a.cmp(b).then(x.partial_cmp(y)?))
            }
            _ => None,
        }
    }
}

/// o(ω)·ln x + L(ω)·ln n.
pub fn loop_weight(o: usize, l: usize, n: f64, x: Fugacity) -> Result<LoopWeight> {
    if !(n > 0.0) {
        bail!(InvalidArgument, "loop weight n must be positive, got {n}");
    }
    Ok(match x {
        Fugacity::Finite(x) => {
            if !(x > 0.0) {
                bail!(InvalidArgument, "x must be positive");
            }
            LoopWeight::Log(o as f64 * x.ln() + l as f64 * n.ln())
        }
        Fugacity::Infinite => LoopWeight::Infinite { o, log_n_l: l as f64 * n.ln() },
    })
}

/// Hexagons enclosed by a loop: flood fill over 𝕋 from the window border
/// without crossing loop edges; the unreached hexagons are inside.
pub fn loop_interior_hexes(d: &HexDomain, lp: &Loop) -> Vec<u32> {
    let nh = d.n_window_hexes();
    let mut blocked = vec![false; d.n_window_edges()];
    for &e in &lp.edges {
        blocked[e as usize] = true;
    }
    let mut outside = vec![false; nh];
    let mut q = VecDeque::new();
    for h in 0..nh as u32 {
        if d.hex_nbrs(h).contains(&NONE) {
            outside[h as usize] = true;
            q.push_back(h);
        }
    }
    while let Some(h) = q.pop_front() {
        for (k, &g) in d.hex_nbrs(h).iter().enumerate() {
            if g == NONE || outside[g as usize] {
                continue;
            }
            let e = d.hex_edges(h)[k];
            if e != NONE && blocked[e as usize] {
                continue;
            }
            outside[g as usize] = true;
            q.push_back(g);
        }
    }
    (0..nh as u32).filter(|&h| !outside[h as usize]).collect()
}

/// Whether the loop surrounds window vertex u: u is on the loop or lies in its
/// interior (equivalently, one of u's hexagons is enclosed).
pub fn loop_surrounds(d: &HexDomain, lp: &Loop, u: u32) -> bool {
    if lp.vertices.contains(&u) {
        return true;
    }
    let inside = loop_interior_hexes(d, lp);
    (0..3u8).any(|c| inside.binary_search(&d.vert_hex(u, c)).is_ok())
}

/// Loops of ω surrounding vertex u, with their lengths.
pub fn loops_surrounding(cfg: &LoopConfig, d: &HexDomain, u: &crate::lattice::Vertex) -> Result<Vec<(Loop, usize)>> {
    let ui = d
        .vertex_id(u)
        .filter(|&i| d.in_domain_vertex(i))
        .ok_or_else(|| Error::InvalidArgument(format!("{u:?} is not a vertex of the domain")))?;
    Ok(cfg
        .loops(d)?
        .into_iter()
        .filter(|lp| loop_surrounds(d, lp, ui))
        .map(|lp| {
            let k = lp.len();
            (lp, k)
        })
        .collect())
}

/// Fast surrounding test by crossing parity along the vertical dual ray from
/// u's class-0 hexagon upward to the window border. Returns the loops (as
/// smallest-edge-id representatives with lengths) crossed an odd number of
/// times, i.e. the loops surrounding u that do not pass through u, plus the
/// loop through u if any.
pub fn surrounding_loop_lengths(d: &HexDomain, mask: &[bool], u: u32) -> Vec<usize> {
    let mut out = Vec::new();
    let mut seen_loops: Vec<(u32, usize, usize)> = Vec::new(); // (min edge, len, crossings)
    let trace = |e0: u32| -> (u32, usize) {
        let [start, mut cur] = d.edge_verts(e0);
        let (mut min_e, mut len, mut prev) = (e0, 1usize, e0);
        while cur != start {
            let Some(ne) = d.vert_edges(cur).iter().copied().find(|&e| e != NONE && e != prev && mask[e as usize]) else {
                break;
            };
            min_e = min_e.min(ne);
            len += 1;
            let [a, b] = d.edge_verts(ne);
            cur = if a == cur { b } else { a };
            prev = ne;
        }
        (min_e, len)
    };
    if let Some(&e) = d.vert_edges(u).iter().find(|&&e| e != NONE && mask[e as usize]) {
        let (m, len) = trace(e);
        seen_loops.push((m, len, 1)); // the loop through u surrounds it by definition
        out.push(len);
        let _ = m;
    }
    let through_u = seen_loops.first().map(|x| x.0);
    let mut h = d.vert_hex(u, 0);
    seen_loops.clear();
    loop {
        let up = d.hex_up(h);
        if up == NONE {
            break;
        }
        let k = crate::lattice::HEX_DIRS.iter().position(|&x| x == (0, 2)).unwrap();
        let e = d.hex_edges(h)[k];
        if e != NONE && mask[e as usize] {
            let (m, len) = trace(e);
            if Some(m) != through_u {
                match seen_loops.iter_mut().find(|x| x.0 == m) {
                    Some(x) => x.2 += 1,
                    None => seen_loops.push((m, len, 1)),
                }
            }
        }
        h = up;
    }
    out.extend(seen_loops.iter().filter(|x| x.2 % 2 == 1).map(|x| x.1));
    out
}

/// Connectivity mode for [`connectivity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectivityMode {
    /// Path of vertices each lying on a loop of ω.
    Loop,
    /// Path of vertices each lying on a trivial loop of ω around a class-c hexagon.
    Ground(u8),
}

/// Marks the window vertices allowed by the connectivity mode.
pub fn connectivity_vertices(d: &HexDomain, mask: &[bool], mode: ConnectivityMode) -> Vec<bool> {
    let mut on = vec![false; d.n_window_verts()];
    match mode {
        ConnectivityMode::Loop => {
            for (e, &b) in mask.iter().enumerate() {
                if b {
                    for v in d.edge_verts(e as u32) {
                        on[v as usize] = true;
                    }
                }
            }
        }
        ConnectivityMode::Ground(c) => {
            for h in 0..d.n_window_hexes() as u32 {
                if d.hex(h).color() == c && is_flower(d, mask, h) {
                    for &v in d.hex_verts(h) {
                        if v != NONE {
                            on[v as usize] = true;
                        }
                    }
                }
            }
        }
    }
    on
}

/// Whether all six edges of window hexagon h are occupied (a trivial loop).
#[inline]
pub fn is_flower(d: &HexDomain, mask: &[bool], h: u32) -> bool {
    d.hex_edges(h).iter().all(|&e| e != NONE && mask[e as usize])
}

/// Fraction of the class-c inner faces of H surrounded by a trivial loop.
pub fn trivial_loop_fraction(d: &HexDomain, mask: &[bool], c: u8) -> f64 {
    let faces: Vec<u32> = d.faces().iter().copied().filter(|&f| d.hex(f).color() == c).collect();
    if faces.is_empty() {
        return 0.0;
    }
    faces.iter().filter(|&&f| is_flower(d, mask, f)).count() as f64 / faces.len() as f64
}

/// Fraction of the vertices of H lying on a loop (degree 2 in ω).
pub fn vertex_loop_fraction(d: &HexDomain, mask: &[bool]) -> f64 {
    let vs = d.domain_vertices();
    vs.iter().filter(|&&v| degree(d, mask, v) == 2).count() as f64 / vs.len().max(1) as f64
}

/// Whether u and v are joined by a path of ℍ inside H whose vertices all lie
/// on loops (loop mode) or on trivial class-c loops (ground mode).
pub fn connectivity(cfg: &LoopConfig, d: &HexDomain, u: u32, v: u32, mode: ConnectivityMode) -> Result<bool> {
    if !d.in_domain_vertex(u) || !d.in_domain_vertex(v) {
        bail!(InvalidArgument, "connectivity endpoints must be domain vertices");
    }
    let mask = cfg.to_mask(d)?;
    let on = connectivity_vertices(d, &mask, mode);
    Ok(connected_within(d, &on, u, v))
}

fn connected_within(d: &HexDomain, on: &[bool], u: u32, v: u32) -> bool {
    if !on[u as usize] || !on[v as usize] {
        return false;
    }
    let mut seen = vec![false; on.len()];
    let mut q = VecDeque::from([u]);
    seen[u as usize] = true;
    while let Some(x) = q.pop_front() {
        if x == v {
            return true;
        }
        for &w in d.vert_nbrs(x) {
            if w != NONE && d.in_domain_vertex(w) && on[w as usize] && !seen[w as usize] {
                seen[w as usize] = true;
                q.push_back(w);
            }
        }
    }
    false
}

/// x_c(n) = 1/√(2+√(2−n)) for 0 ≤ n ≤ 2.
pub fn critical_x(n: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&n) {
        bail!(InvalidArgument, "x_c(n) is defined for 0 <= n <= 2 (got n={n})");
    }
    Ok(1.0 / (2.0 + (2.0 - n).sqrt()).sqrt())
}

/// Critical hard-hexagon fugacity λ_c = (2cos(π/5))⁵ = (11+5√5)/2.
pub fn hard_hexagon_lambda_c() -> f64 {
    (11.0 + 5.0 * 5f64.sqrt()) / 2.0
}

/// Parity class of an enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    /// Odd degree exactly at the two (distinct) window vertices u, v.
    Odd(u32, u32),
}

/// One enumerated configuration. `mask` bit i refers to `domain_edges[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumeratedConfig {
    pub mask: u64,
    pub o: u32,
    /// L(ω) for even parity; loops left after removing a u–v path for odd parity.
    pub loops: u32,
    /// Odd parity: whether ω contains three internally disjoint u–v paths.
    pub three_paths: bool,
    /// Odd parity: whether every simple u–v path inside ω gives the same L′.
    pub path_independent: bool,
}

/// Full enumeration of LoopConf(H) or LoopConf(H, u, v).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopEnumeration {
    pub parity: Parity,
    /// Window ids of E(H), in the bit order of the masks.
    pub domain_edges: Vec<u32>,
    pub configs: Vec<EnumeratedConfig>,
}

/// Default cap on |E(H)| for exhaustive enumeration.
pub const ENUMERATION_EDGE_CAP: usize = 36;

impl LoopEnumeration {
    pub fn window_mask(&self, n_window_edges: usize, mask: u64) -> EdgeMask {
        let mut m = vec![false; n_window_edges];
        for (i, &e) in self.domain_edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                m[e as usize] = true;
            }
        }
        m
    }

    /// Log-weights o ln x + L ln n (L′ and J for odd parity when `with_j`).
    pub fn log_weights(&self, n: f64, x: Fugacity, with_j: bool) -> Vec<f64> {
        let jv = (3.0 * n / (n + 2.0)).ln();
        let omax = self.configs.iter().map(|c| c.o).max().unwrap_or(0);
        self.configs
            .iter()
            .map(|c| {
                let base = match x {
                    Fugacity::Finite(x) => c.o as f64 * x.ln(),
                    Fugacity::Infinite => {
                        if c.o == omax {
                            0.0
                        } else {
                            f64::NEG_INFINITY
                        }
                    }
                };
                let j = if with_j && c.three_paths { jv } else { 0.0 };
                base + c.loops as f64 * n.ln() + j
            })
            .collect()
    }

    /// Normalised probabilities under the loop O(n) measure.
    pub fn probabilities(&self, n: f64, x: Fugacity) -> Vec<f64> {
        normalize_log(&self.log_weights(n, x, false))
    }

    /// Σ_ω x^{o} n^{L} (with the J factor for odd parity when `with_j`).
    pub fn partition_function(&self, n: f64, x: Fugacity, with_j: bool) -> f64 {
        self.log_weights(n, x, with_j).iter().map(|w| w.exp()).sum()
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.configs.binary_search_by_key(&mask, |c| c.mask).ok()
    }
}

/// exp-normalises a vector of log-weights.
pub fn normalize_log(lw: &[f64]) -> Vec<f64> {
    let m = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lw.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Enumerates every configuration of the given parity on H. Even
/// configurations are the span of the inner face boundaries (they generate the
/// cycle space of a simply connected domain); odd ones are a fixed u–v path
/// plus an even configuration.
pub fn enumerate(d: &HexDomain, parity: Parity, cap: usize) -> Result<LoopEnumeration> {
    let domain_edges: Vec<u32> = d.domain_edges().to_vec();
    if domain_edges.len() > cap.min(63) {
        bail!(CapExceeded, "|E(H)| = {} exceeds the enumeration cap {}", domain_edges.len(), cap.min(63));
    }
    let pos = |e: u32| domain_edges.binary_search(&e).ok();
    let face_masks: Vec<u64> = d
        .faces()
        .iter()
        .map(|&f| d.hex_edges(f).iter().fold(0u64, |m, &e| m | 1u64 << pos(e).expect("face edges lie in H")))
        .collect();
    let base: u64 = match parity {
        Parity::Even => 0,
        Parity::Odd(u, v) => {
            if u == v || !d.in_domain_vertex(u) || !d.in_domain_vertex(v) {
                bail!(InvalidArgument, "odd parity needs two distinct domain vertices");
            }
            let path = bfs_path(d, u, v).ok_or_else(|| Error::InvalidDomain("domain is disconnected".into()))?;
            path.iter().fold(0u64, |m, &e| m ^ 1u64 << pos(e).unwrap())
        }
    };
    let f = face_masks.len();
    let mut masks = Vec::with_capacity(1 << f);
    let mut cur = base;
    masks.push(cur);
    for i in 1u64..(1u64 << f) {
        let bit = i.trailing_zeros() as usize; // Gray code step
        cur ^= face_masks[bit];
        masks.push(cur);
    }
    masks.sort_unstable();
    let ne = d.n_window_edges();
    let mut configs = Vec::with_capacity(masks.len());
    for mask in masks {
        let mut wm = vec![false; ne];
        for (i, &e) in domain_edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                wm[e as usize] = true;
            }
        }
        let o = mask.count_ones();
        let c = match parity {
            Parity::Even => EnumeratedConfig {
                mask,
                o,
                loops: count_loops(d, &wm) as u32,
                three_paths: false,
                path_independent: true,
            },
            Parity::Odd(u, v) => {
                let paths = simple_paths(d, &wm, u, v);
                let lprimes: Vec<usize> = paths
                    .iter()
                    .map(|p| {
                        let mut rest = wm.clone();
                        for &e in &p.1 {
                            rest[e as usize] = false;
                        }
                        count_loops(d, &rest)
                    })
                    .collect();
                // lexicographically least vertex sequence
                let lex = (0..paths.len()).min_by(|&a, &b| paths[a].0.cmp(&paths[b].0)).expect("odd configs contain a u–v path");
                EnumeratedConfig {
                    mask,
                    o,
                    loops: lprimes[lex] as u32,
                    three_paths: has_three_disjoint_paths(d, &wm, u, v),
                    path_independent: lprimes.iter().all(|&x| x == lprimes[lex]),
                }
            }
        };
        configs.push(c);
    }
    Ok(LoopEnumeration { parity, domain_edges, configs })
}

/// Shortest path in H between two domain vertices (edge ids), BFS in id order.
pub fn bfs_path(d: &HexDomain, u: u32, v: u32) -> Option<Vec<u32>> {
    let mut prev: Vec<(u32, u32)> = vec![(NONE, NONE); d.n_window_verts()];
    let mut q = VecDeque::from([u]);
    prev[u as usize] = (u, NONE);
    while let Some(x) = q.pop_front() {
        if x == v {
            break;
        }
        for (k, &w) in d.vert_nbrs(x).iter().enumerate() {
            if w != NONE && d.in_domain_vertex(w) && prev[w as usize].0 == NONE {
                prev[w as usize] = (x, d.vert_edges(x)[k]);
                q.push_back(w);
            }
        }
    }
    if prev[v as usize].0 == NONE {
        return None;
    }
    let mut path = Vec::new();
    let mut x = v;
    while x != u {
        let (p, e) = prev[x as usize];
        path.push(e);
        x = p;
    }
    path.reverse();
    Some(path)
}

/// All simple u–v paths using only occupied edges: (vertex sequence, edges).
pub fn simple_paths(d: &HexDomain, mask: &[bool], u: u32, v: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    let mut verts = vec![u];
    let mut edges = Vec::new();
    let mut on_path = vec![false; d.n_window_verts()];
    on_path[u as usize] = true;
    fn rec(
        d: &HexDomain,
        mask: &[bool],
        v: u32,
        verts: &mut Vec<u32>,
        edges: &mut Vec<u32>,
        on_path: &mut [bool],
        out: &mut Vec<(Vec<u32>, Vec<u32>)>,
    ) {
        let x = *verts.last().unwrap();
        if x == v {
            out.push((verts.clone(), edges.clone()));
            return;
        }
        for (k, &w) in d.vert_nbrs(x).iter().enumerate() {
            let e = d.vert_edges(x)[k];
            if w == NONE || e == NONE || !mask[e as usize] || on_path[w as usize] {
                continue;
            }
            on_path[w as usize] = true;
            verts.push(w);
            edges.push(e);
            rec(d, mask, v, verts, edges, on_path, out);
            verts.pop();
            edges.pop();
            on_path[w as usize] = false;
        }
    }
    rec(d, mask, v, &mut verts, &mut edges, &mut on_path, &mut out);
    out
}

/// Whether ω contains three internally vertex-disjoint u–v paths. In a
/// subgraph of ℍ with odd degree exactly at u and v this holds iff u has
/// degree 3 and each of the three chains leaving u ends at v.
pub fn has_three_disjoint_paths(d: &HexDomain, mask: &[bool], u: u32, v: u32) -> bool {
    if degree(d, mask, u) != 3 {
        return false;
    }
    for (k, &e0) in d.vert_edges(u).iter().enumerate() {
        let mut prev_e = e0;
        let mut cur = d.vert_nbrs(u)[k];
        while cur != u && cur != v {
            let Some(ne) = d.vert_edges(cur).iter().copied().find(|&e| e != NONE && e != prev_e && mask[e as usize]) else {
                return false;
            };
            let [a, b] = d.edge_verts(ne);
            cur = if a == cur { b } else { a };
            prev_e = ne;
        }
        if cur != v {
            return false;
        }
    }
    true
}
