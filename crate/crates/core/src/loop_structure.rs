//! Large-n machinery: ground states, flowers, gardens and clusters, the
//! boundary deviation set V(ω,γ), the repair map with its exact counting
//! identities, the breakup, and generic map-counting checks.
//!
//! A c-garden is determined by a set S of class-c hexagons that is connected in
//! the class-c sublattice, has no holes, and whose sublattice-boundary
//! hexagons are all c-flowers; its edge set is every edge of ℍ touching the
//! vertices of S (interior edges plus the edges crossing its circuit). The
//! maximal c-gardens are the hole-fillings of the sublattice components of
//! the c-flowers, and one garden contains another exactly when its vertex set
//! does. Clusters are the fillings not contained in a filling of any class.

use crate::error::{bail, Error, Result};
use crate::lattice::{enclosing_circuit, Circuit, HexDomain, ShiftDir, Vertex, NONE};
use crate::loop_core::{is_flower, loop_decomposition, odd_vertices, EdgeMask, LoopConfig};
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// The fully packed ground state ω_gnd^c: trivial loops around every class-c hexagon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundState {
    pub class: u8,
}

impl GroundState {
    pub fn new(class: u8) -> Result<GroundState> {
        if class > 2 {
            bail!(InvalidArgument, "colour class must be 0, 1 or 2");
        }
        Ok(GroundState { class })
    }
    /// Whether an edge of ℍ belongs to ω_gnd^c (it borders a class-c hexagon).
    pub fn contains(&self, e: &crate::lattice::HexEdge) -> bool {
        e.0.iter().any(|h| h.color() == self.class)
    }
    /// ω_gnd^c on the whole window.
    pub fn window_mask(&self, d: &HexDomain) -> EdgeMask {
        (0..d.n_window_edges() as u32).map(|e| self.contains(&d.edge(e))).collect()
    }
    /// ω_gnd^c ∩ E(H) (a loop configuration when H has type c).
    pub fn domain_mask(&self, d: &HexDomain) -> EdgeMask {
        (0..d.n_window_edges() as u32).map(|e| d.in_domain_edge(e) && self.contains(&d.edge(e))).collect()
    }
    pub fn config(&self, d: &HexDomain) -> LoopConfig {
        LoopConfig::from_mask(d, &self.domain_mask(d))
    }
}

/// One cluster: the class, its class-c hexagons S, its vertex set V(S) and its
/// edge set (edges touching V(S)), all as window ids, and its circuit σ.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub class: u8,
    pub hexes: Vec<u32>,
    pub vertices: Vec<u32>,
    pub edges: Vec<u32>,
    pub circuit: Option<Circuit>,
}

/// Cluster decomposition of ω ∩ IntEdge(γ) together with the derived edge and
/// vertex sets (window masks).
#[derive(Clone, Debug)]
pub struct ClusterDecomposition {
    pub clusters: Vec<Cluster>,
    /// E^c(ω): union of the c-clusters.
    pub e_class: [Vec<bool>; 3],
    /// Ē(ω) = (IntEdge γ ∪ γ*) ∖ (E⁰ ∪ E¹ ∪ E²).
    pub e_bar: Vec<bool>,
    /// E^bad(ω) = (IntEdge γ ∪ γ*) ∖ (E⁰ ∪ E¹↓ ∪ E²↑).
    pub e_bad: Vec<bool>,
    /// V(ω, γ).
    pub deviation: Vec<u32>,
}

/// Precondition: γ vacant in ω (no occupied edge on γ*).
fn check_vacant(d: &HexDomain, mask: &[bool]) -> Result<()> {
    if mask.len() != d.n_window_edges() {
        bail!(InvalidArgument, "mask length does not match the domain window");
    }
    if let Some(&e) = d.boundary_edges().iter().find(|&&e| mask[e as usize]) {
        bail!(Precondition, "circuit is not vacant: edge {:?} is occupied", d.edge(e));
    }
    Ok(())
}

/// Restricts a window mask to E(H).
fn restrict(d: &HexDomain, mask: &[bool]) -> EdgeMask {
    mask.iter().enumerate().map(|(e, &b)| b && d.in_domain_edge(e as u32)).collect()
}

/// Sublattice components of the class-c flowers, each filled with its holes.
fn filled_flower_components(d: &HexDomain, mask: &[bool], c: u8) -> Vec<Vec<u32>> {
    let nh = d.n_window_hexes();
    let flower: Vec<bool> = (0..nh as u32).map(|h| d.hex(h).color() == c && is_flower(d, mask, h)).collect();
    // component labels of flowers
    let mut comp = vec![u32::MAX; nh];
    let mut comps: Vec<Vec<u32>> = Vec::new();
    for h in 0..nh as u32 {
        if !flower[h as usize] || comp[h as usize] != u32::MAX {
            continue;
        }
        let id = comps.len() as u32;
        let mut members = vec![h];
        comp[h as usize] = id;
        let mut i = 0;
        while i < members.len() {
            let x = members[i];
            i += 1;
            for &g in d.hex_sub_nbrs(x) {
                if g != NONE && flower[g as usize] && comp[g as usize] == u32::MAX {
                    comp[g as usize] = id;
                    members.push(g);
                }
            }
        }
        comps.push(members);
    }
    if comps.is_empty() {
        return comps;
    }
    // class-c hexagons reachable from the window border without entering flowers
    let mut outside = vec![false; nh];
    let mut q = VecDeque::new();
    for h in 0..nh as u32 {
        if d.hex(h).color() == c && !flower[h as usize] && d.hex_sub_nbrs(h).contains(&NONE) {
            outside[h as usize] = true;
            q.push_back(h);
        }
    }
    while let Some(h) = q.pop_front() {
        for &g in d.hex_sub_nbrs(h) {
            if g != NONE && !flower[g as usize] && !outside[g as usize] {
                outside[g as usize] = true;
                q.push_back(g);
            }
        }
    }
    // each hole (component of enclosed non-flower class-c hexagons) is
    // attached to the flower component that borders it
    let mut seen = vec![false; nh];
    for h in 0..nh as u32 {
        if d.hex(h).color() != c || flower[h as usize] || outside[h as usize] || seen[h as usize] {
            continue;
        }
        let mut hole = vec![h];
        seen[h as usize] = true;
        let mut owner = u32::MAX;
        let mut i = 0;
        while i < hole.len() {
            let x = hole[i];
            i += 1;
            for &g in d.hex_sub_nbrs(x) {
                if g == NONE {
                    continue;
                }
                if flower[g as usize] {
                    owner = owner.min(comp[g as usize]);
                } else if !seen[g as usize] && !outside[g as usize] {
                    seen[g as usize] = true;
                    hole.push(g);
                }
            }
        }
        // a hole is bordered by the innermost component surrounding it; all
        // flowers adjacent to a hole belong to one component since the outer
        // boundary of a hole in the triangular lattice is connected
        if owner != u32::MAX {
            comps[owner as usize].extend(hole);
        }
    }
    for c in comps.iter_mut() {
        c.sort_unstable();
    }
    comps
}

/// Finds all clusters of ω ∩ IntEdge(γ) for the domain H = Int γ. When
/// `with_circuits` is set, each cluster's circuit σ is computed and the garden
/// condition (σ avoids class c) is verified.
pub fn find_clusters(d: &HexDomain, mask: &[bool], with_circuits: bool) -> Result<ClusterDecomposition> {
    check_vacant(d, mask)?;
    let mask = restrict(d, mask);
    let nv = d.n_window_verts();
    let ne = d.n_window_edges();
    // candidate regions for all classes, as vertex sets
    let mut cands: Vec<(u8, Vec<u32>, Vec<u32>)> = Vec::new(); // (class, hexes, vertices)
    for c in 0..3u8 {
        for hexes in filled_flower_components(d, &mask, c) {
            let mut verts: Vec<u32> = Vec::with_capacity(6 * hexes.len());
            for &h in &hexes {
                for &v in d.hex_verts(h) {
                    if v == NONE {
                        bail!(InvalidDomain, "garden reaches the window border");
                    }
                    verts.push(v);
                }
            }
            verts.sort_unstable();
            verts.dedup();
            cands.push((c, hexes, verts));
        }
    }
    // owner of each vertex per class (regions of one class are vertex-disjoint)
    let mut owner: [Vec<u32>; 3] = [vec![u32::MAX; nv], vec![u32::MAX; nv], vec![u32::MAX; nv]];
    for (i, (c, _, vs)) in cands.iter().enumerate() {
        for &v in vs {
            owner[*c as usize][v as usize] = i as u32;
        }
    }
    // a candidate is contained in another iff all its vertices lie in one region
    let mut is_cluster = vec![true; cands.len()];
    for (i, (c, _, vs)) in cands.iter().enumerate() {
        for oc in 0..3u8 {
            if oc == *c {
                continue;
            }
            let first = owner[oc as usize][vs[0] as usize];
            if first != u32::MAX && vs.iter().all(|&v| owner[oc as usize][v as usize] == first) {
                is_cluster[i] = false;
            }
        }
    }
    let mut clusters = Vec::new();
    let mut e_class: [Vec<bool>; 3] = [vec![false; ne], vec![false; ne], vec![false; ne]];
    let mut in_cluster_v = vec![false; nv];
    for (i, (c, hexes, vs)) in cands.into_iter().enumerate() {
        if !is_cluster[i] {
            continue;
        }
        let mut edges = Vec::new();
        for &v in &vs {
            if !d.in_domain_vertex(v) {
                bail!(InvalidDomain, "cluster vertex {:?} lies outside the domain", d.vertex(v));
            }
            in_cluster_v[v as usize] = true;
            for &e in d.vert_edges(v) {
                if e != NONE && !e_class[c as usize][e as usize] {
                    e_class[c as usize][e as usize] = true;
                    edges.push(e);
                }
            }
        }
        edges.sort_unstable();
        let circuit = if with_circuits {
            let set: FxHashSet<Vertex> = vs.iter().map(|&v| d.vertex(v)).collect();
            let sigma = enclosing_circuit(&set)?;
            if !sigma.avoids_class(c) {
                bail!(IdentityViolation, "cluster circuit of class {c} meets its own class");
            }
            Some(sigma)
        } else {
            None
        };
        clusters.push(Cluster { class: c, hexes, vertices: vs, edges, circuit });
    }
    let region: Vec<bool> = (0..ne as u32).map(|e| d.in_domain_edge(e)).collect();
    let mut region = region;
    for &e in d.boundary_edges() {
        region[e as usize] = true;
    }
    let mut e_bar = vec![false; ne];
    let mut e_bad = vec![false; ne];
    let mut shifted = vec![false; ne];
    for e in 0..ne {
        if e_class[0][e] {
            shifted[e] = true;
        }
        if e_class[1][e] {
            let s = d.edge_shift(e as u32, ShiftDir::Down);
            if s == NONE {
                bail!(InvalidDomain, "shifted cluster edge leaves the window");
            }
            shifted[s as usize] = true;
        }
        if e_class[2][e] {
            let s = d.edge_shift(e as u32, ShiftDir::Up);
            if s == NONE {
                bail!(InvalidDomain, "shifted cluster edge leaves the window");
            }
            shifted[s as usize] = true;
        }
    }
    for e in 0..ne {
        if region[e] {
            e_bar[e] = !(e_class[0][e] || e_class[1][e] || e_class[2][e]);
            e_bad[e] = !shifted[e];
        }
    }
    let deviation: Vec<u32> = d.domain_vertices().iter().copied().filter(|&v| !in_cluster_v[v as usize]).collect();
    Ok(ClusterDecomposition { clusters, e_class, e_bar, e_bad, deviation })
}

/// V(ω, γ): interior vertices whose three edges are not all in one cluster.
pub fn boundary_deviation(d: &HexDomain, mask: &[bool]) -> Result<Vec<u32>> {
    Ok(find_clusters(d, mask, false)?.deviation)
}

/// The repair map R(ω) for a type-0 domain (window mask), together with the
/// three pieces ω∩E⁰, (ω∩E¹)↓ ∪ (ω∩E²)↑ and ω_gnd⁰ ∩ E^bad.
#[derive(Clone, Debug)]
pub struct Repair {
    pub result: EdgeMask,
    pub pieces: [EdgeMask; 3],
    pub decomposition: ClusterDecomposition,
}

pub fn repair(d: &HexDomain, mask: &[bool]) -> Result<Repair> {
    if !d.is_type(0) {
        bail!(Precondition, "the repair map needs a circuit avoiding class 0");
    }
    let dec = find_clusters(d, mask, false)?;
    let mask = restrict(d, mask);
    let ne = d.n_window_edges();
    let gnd = GroundState { class: 0 };
    let mut p0 = vec![false; ne];
    let mut p12 = vec![false; ne];
    let mut pbad = vec![false; ne];
    for e in 0..ne {
        if !mask[e] {
            if dec.e_bad[e] && gnd.contains(&d.edge(e as u32)) {
                pbad[e] = true;
            }
            continue;
        }
        if dec.e_class[0][e] {
            p0[e] = true;
        } else if dec.e_class[1][e] {
            p12[d.edge_shift(e as u32, ShiftDir::Down) as usize] = true;
        } else if dec.e_class[2][e] {
            p12[d.edge_shift(e as u32, ShiftDir::Up) as usize] = true;
        }
        if dec.e_bad[e] && gnd.contains(&d.edge(e as u32)) {
            pbad[e] = true;
        }
    }
    let result: Vec<bool> = (0..ne).map(|e| p0[e] || p12[e] || pbad[e]).collect();
    Ok(Repair { result, pieces: [p0, p12, pbad], decomposition: dec })
}

/// Quantities of the repair identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairIdentities {
    pub delta_o: i64,
    pub delta_l: i64,
    pub v: usize,
    pub omega_ebar: usize,
    pub loops_ebar: usize,
    /// Δo = |V| − |ω∩Ē| and ΔL = |V|/6 − L(ω∩Ē).
    pub identities_hold: bool,
    /// 0 ≤ Δo ≤ |V| and ΔL ≥ |V|/15 + |Δo|/10.
    pub inequalities_hold: bool,
    /// R(ω) ∈ LoopConf(H) with pairwise disjoint pieces.
    pub repaired_valid: bool,
}

/// Serialized state for counterexample dumps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CounterexampleDump {
    pub circuit: Circuit,
    pub edges: Vec<crate::lattice::HexEdge>,
    pub repaired: Vec<crate::lattice::HexEdge>,
    pub identities: RepairIdentities,
}

/// Computes (and checks) the repair identities for ω on H = Int γ. Returns an
/// `IdentityViolation` error carrying a JSON counterexample if any identity,
/// inequality or validity check fails.
pub fn repair_identities(d: &HexDomain, mask: &[bool]) -> Result<RepairIdentities> {
    let r = repair(d, mask)?;
    let mask = restrict(d, mask);
    let o0 = mask.iter().filter(|&&b| b).count() as i64;
    let l0 = loop_decomposition(d, &mask).len() as i64;
    let o1 = r.result.iter().filter(|&&b| b).count() as i64;
    let l1 = loop_decomposition(d, &r.result).len() as i64;
    let v = r.decomposition.deviation.len();
    let ebar_mask: Vec<bool> = mask.iter().zip(&r.decomposition.e_bar).map(|(a, b)| *a && *b).collect();
    let omega_ebar = ebar_mask.iter().filter(|&&b| b).count();
    let loops_ebar = loop_decomposition(d, &ebar_mask).len();
    let delta_o = o1 - o0;
    let delta_l = l1 - l0;
    let identities_hold =
        v % 6 == 0 && delta_o == v as i64 - omega_ebar as i64 && delta_l == (v / 6) as i64 - loops_ebar as i64;
    let inequalities_hold = delta_o >= 0
        && delta_o <= v as i64
        && 30 * delta_l >= 2 * v as i64 + 3 * delta_o.abs();
    let pieces_disjoint = (0..mask.len()).all(|e| r.pieces.iter().filter(|p| p[e]).count() <= 1);
    let pieces_even = r.pieces.iter().all(|p| odd_vertices(d, p).is_empty());
    let inside = r.result.iter().enumerate().all(|(e, &b)| !b || d.in_domain_edge(e as u32));
    let repaired_valid = pieces_disjoint && pieces_even && inside && odd_vertices(d, &r.result).is_empty();
    let q = RepairIdentities { delta_o, delta_l, v, omega_ebar, loops_ebar, identities_hold, inequalities_hold, repaired_valid };
    if !(identities_hold && inequalities_hold && repaired_valid) {
        let dump = CounterexampleDump {
            circuit: d.circuit().clone(),
            edges: LoopConfig::from_mask(d, &mask).edges().iter().copied().collect(),
            repaired: LoopConfig::from_mask(d, &r.result).edges().iter().copied().collect(),
            identities: q.clone(),
        };
        return Err(Error::IdentityViolation(serde_json::to_string(&dump)?));
    }
    Ok(q)
}

/// Checks x^{Δo} n^{ΔL} ≥ (n·min{x⁶,1})^{|V|/15} in log space. Requires n ≥ 1
/// and n x⁶ ≥ 1. Returns (holds, margin in log units).
pub fn weight_gain_check(id: &RepairIdentities, n: f64, x: f64) -> Result<(bool, f64)> {
    if !(n >= 1.0 && n * x.powi(6) >= 1.0) {
        bail!(Precondition, "weight gain bound needs n >= 1 and n x^6 >= 1");
    }
    let lhs = id.delta_o as f64 * x.ln() + id.delta_l as f64 * n.ln();
    let rhs = id.v as f64 / 15.0 * (n * x.powi(6).min(1.0)).ln();
    let margin = lhs - rhs;
    Ok((margin >= -1e-9, margin))
}

/// The breakup of u in a type-0 domain: the component of u in ℍ ∖ B(ω), where
/// B(ω) is the unbounded component of (vertices on trivial loops around class-0
/// hexagons) ∪ (vertices outside H). Returns its enclosing circuit, or `None`
/// if u ∈ B(ω).
pub fn find_breakup(d: &HexDomain, mask: &[bool], u: u32) -> Result<Option<Circuit>> {
    if !d.is_type(0) {
        bail!(Precondition, "breakup needs a type-0 domain");
    }
    if !d.in_domain_vertex(u) {
        bail!(InvalidArgument, "u must be a domain vertex");
    }
    let mask = restrict(d, mask);
    let nv = d.n_window_verts();
    let mut a = vec![false; nv];
    for h in 0..d.n_window_hexes() as u32 {
        if d.hex(h).color() == 0 && is_flower(d, &mask, h) {
            for &v in d.hex_verts(h) {
                a[v as usize] = true;
            }
        }
    }
    for v in 0..nv as u32 {
        if !d.in_domain_vertex(v) {
            a[v as usize] = true;
        }
    }
    // B: component of A containing the window border
    let mut b = vec![false; nv];
    let mut q: VecDeque<u32> = d.window_boundary_verts().iter().copied().collect();
    for &v in &q {
        b[v as usize] = true;
    }
    while let Some(v) = q.pop_front() {
        for &w in d.vert_nbrs(v) {
            if w != NONE && a[w as usize] && !b[w as usize] {
                b[w as usize] = true;
                q.push_back(w);
            }
        }
    }
    if b[u as usize] {
        return Ok(None);
    }
    let mut comp: FxHashSet<Vertex> = FxHashSet::default();
    let mut seen = vec![false; nv];
    seen[u as usize] = true;
    let mut q = VecDeque::from([u]);
    while let Some(v) = q.pop_front() {
        comp.insert(d.vertex(v));
        for &w in d.vert_nbrs(v) {
            if w != NONE && !b[w as usize] && !seen[w as usize] {
                seen[w as usize] = true;
                q.push_back(w);
            }
        }
    }
    Ok(Some(enclosing_circuit(&comp)?))
}

/// Transfers a configuration given on one domain window onto another domain
/// (edges of E(H′) only).
pub fn transfer_mask(from: &HexDomain, mask: &[bool], to: &HexDomain) -> EdgeMask {
    let mut m = vec![false; to.n_window_edges()];
    for (e, &b) in mask.iter().enumerate() {
        if b {
            if let Some(i) = to.edge_id(&from.edge(e as u32)) {
                m[i as usize] = true;
            }
        }
    }
    m
}

/// Result of checking the three breakup guarantees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakupCheck {
    pub vacant: bool,
    pub avoids_class0: bool,
    pub boundary_in_deviation: bool,
    pub interior_size: usize,
}

/// Checks Γ vacant in ω, Γ ⊂ 𝕋 ∖ 𝕋⁰ and ∂IntVert(Γ) ⊂ V(ω, Γ).
pub fn check_breakup(d: &HexDomain, mask: &[bool], gamma: &Circuit) -> Result<BreakupCheck> {
    let inner = HexDomain::from_circuit(gamma)?;
    let vacant = gamma.dual_edges().iter().all(|e| d.edge_id(e).map_or(true, |i| !mask[i as usize]));
    let avoids_class0 = gamma.avoids_class(0);
    let m = transfer_mask(d, mask, &inner);
    let m: Vec<bool> = m.iter().enumerate().map(|(e, &b)| b && inner.in_domain_edge(e as u32)).collect();
    let dev: FxHashSet<u32> = boundary_deviation(&inner, &m)?.into_iter().collect();
    let boundary_in_deviation = inner.boundary_vertices().iter().all(|v| dev.contains(v));
    Ok(BreakupCheck { vacant, avoids_class0, boundary_in_deviation, interior_size: inner.domain_vertices().len() })
}

/// Left and right turns (m, m′) along a loop traversed counterclockwise.
pub fn loop_turns(d: &HexDomain, lp: &crate::loop_core::Loop) -> (usize, usize) {
    let pts: Vec<(f64, f64)> = lp.vertices.iter().map(|&v| d.vertex(v).center()).collect();
    let k = pts.len();
    let area: f64 = (0..k).map(|i| pts[i].0 * pts[(i + 1) % k].1 - pts[(i + 1) % k].0 * pts[i].1).sum();
    let (mut left, mut right) = (0, 0);
    for i in 0..k {
        let (a, b, c) = (pts[(i + k - 1) % k], pts[i], pts[(i + 1) % k]);
        let cross = (b.0 - a.0) * (c.1 - b.1) - (b.1 - a.1) * (c.0 - b.0);
        // counterclockwise orientation: positive cross product is a left turn
        if (cross > 0.0) == (area > 0.0) {
            left += 1;
        } else {
            right += 1;
        }
    }
    (left, right)
}

/// Outcome of a map-counting (Lemma-type) inequality check on a finite space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCountingReport {
    pub hypotheses_hold: bool,
    pub first_violation: Option<String>,
    pub pr_e: f64,
    pub pr_f: f64,
    pub bound: f64,
    pub conclusion_holds: bool,
}

/// Given probabilities on a finite space, an event E, an event F and a map
/// T: E → F with Pr(T(ω)) ≥ p·Pr(ω) and |T⁻¹(ω′)| ≤ q, checks the hypotheses
/// and the conclusion Pr(E) ≤ (q/p)·Pr(F).
pub fn map_counting_check<T>(probs: &[f64], e: &[usize], f: &[usize], t: T, p: f64, q: f64) -> MapCountingReport
where
    T: Fn(usize) -> usize,
{
    let in_f: FxHashSet<usize> = f.iter().copied().collect();
    let mut pre: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    let mut violation = None;
    for &w in e {
        let tw = t(w);
        if !in_f.contains(&tw) {
            violation.get_or_insert(format!("T({w}) = {tw} is not in F"));
        }
        if probs[tw] < p * probs[w] * (1.0 - 1e-12) {
            violation.get_or_insert(format!("Pr(T({w})) = {} < p·Pr({w}) = {}", probs[tw], p * probs[w]));
        }
        *pre.entry(tw).or_default() += 1;
    }
    if let Some((k, c)) = pre.iter().find(|(_, &c)| c as f64 > q) {
        violation.get_or_insert(format!("{c} preimages of {k} exceed q = {q}"));
    }
    let pr_e: f64 = e.iter().map(|&i| probs[i]).sum();
    let pr_f: f64 = f.iter().map(|&i| probs[i]).sum();
    let bound = q / p * pr_f;
    MapCountingReport {
        hypotheses_hold: violation.is_none(),
        first_violation: violation,
        pr_e,
        pr_f,
        bound,
        conclusion_holds: pr_e <= bound * (1.0 + 1e-12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Hex;
    use crate::loop_core::Fugacity;
    use crate::loop_samplers::LoopChain;
    use crate::rng::make_rng;

    #[test]
    fn ground_state_shift_and_type() {
        let d = HexDomain::hexagon(3).unwrap();
        for c in 0..3u8 {
            let g = GroundState::new(c).unwrap();
            let up = GroundState::new((c + 1) % 3).unwrap();
            for e in 0..d.n_window_edges() as u32 {
                let s = d.edge_shift(e, ShiftDir::Up);
                if s != NONE {
                    assert_eq!(g.contains(&d.edge(e)), up.contains(&d.edge(s)));
                }
            }
            let typed = d.is_type(c);
            let boundary_hit = d.boundary_edges().iter().any(|&e| g.contains(&d.edge(e)));
            assert_eq!(typed, !boundary_hit);
        }
        let m = GroundState::new(0).unwrap().domain_mask(&d);
        assert!(odd_vertices(&d, &m).is_empty());
    }

    #[test]
    fn ground_state_is_fixed_point_with_no_deviation() {
        let d = HexDomain::rectangle(8, 8).unwrap();
        let m = GroundState::new(0).unwrap().domain_mask(&d);
        let dec = find_clusters(&d, &m, true).unwrap();
        assert_eq!(dec.clusters.len(), 1);
        assert_eq!(dec.clusters[0].class, 0);
        assert!(dec.deviation.is_empty());
        assert!(dec.e_bar.iter().all(|&b| !b));
        let r = repair(&d, &m).unwrap();
        assert_eq!(r.result, m);
        let id = repair_identities(&d, &m).unwrap();
        assert_eq!((id.delta_o, id.delta_l, id.v, id.omega_ebar, id.loops_ebar), (0, 0, 0, 0, 0));
    }

    #[test]
    fn ground_state_vertices_ground_connected_to_boundary() {
        let d = HexDomain::rectangle(6, 6).unwrap();
        let cfg = GroundState::new(0).unwrap().config(&d);
        let b = d.boundary_vertices()[0];
        for &v in d.domain_vertices() {
            assert!(crate::loop_core::connectivity(&cfg, &d, v, b, crate::loop_core::ConnectivityMode::Ground(0)).unwrap());
        }
    }

    #[test]
    fn empty_configuration_deviates_everywhere() {
        let d = HexDomain::hexagon(2).unwrap();
        let m = vec![false; d.n_window_edges()];
        assert_eq!(boundary_deviation(&d, &m).unwrap().len(), d.domain_vertices().len());
        let id = repair_identities(&d, &m).unwrap();
        assert_eq!(id.delta_o as usize, d.domain_vertices().len());
        assert_eq!(id.delta_l as usize, d.domain_vertices().len() / 6);
        let u = d.center_vertex();
        let gamma = find_breakup(&d, &m, u).unwrap().unwrap();
        assert_eq!(gamma, d.circuit().canonical());
    }

    #[test]
    fn boundary_defect_hand_count() {
        let d = HexDomain::hexagon(2).unwrap();
        let mut m = GroundState::new(0).unwrap().domain_mask(&d);
        // a class-0 face on the boundary of the domain
        let z = d
            .faces()
            .iter()
            .copied()
            .find(|&f| d.hex(f).color() == 0 && d.hex_verts(f).iter().any(|v| d.boundary_vertices().contains(v)))
            .unwrap();
        for &e in d.hex_edges(z) {
            m[e as usize] = false;
        }
        let id = repair_identities(&d, &m).unwrap();
        assert_eq!((id.v, id.delta_o, id.delta_l, id.omega_ebar, id.loops_ebar), (6, 6, 1, 0, 0));
        let (ok, margin) = weight_gain_check(&id, 8.0, 2.0).unwrap();
        assert!(ok && margin > 0.0);
        let r = repair(&d, &m).unwrap();
        assert_eq!(r.result, GroundState::new(0).unwrap().domain_mask(&d));
    }

    #[test]
    fn interior_defect_is_hidden_in_cluster() {
        let d = HexDomain::hexagon(3).unwrap();
        let mut m = GroundState::new(0).unwrap().domain_mask(&d);
        let z = d.hex_id(Hex::ORIGIN).unwrap();
        for &e in d.hex_edges(z) {
            m[e as usize] = false;
        }
        let id = repair_identities(&d, &m).unwrap();
        assert_eq!(id.v, 0);
        assert_eq!(repair(&d, &m).unwrap().result, m);
    }

    fn class1_defect(d: &HexDomain, z: u32) -> EdgeMask {
        let mut m = GroundState::new(0).unwrap().domain_mask(d);
        for &g in d.hex_nbrs(z) {
            if d.hex(g).color() == 0 {
                for &e in d.hex_edges(g) {
                    m[e as usize] = false;
                }
            }
        }
        for &e in d.hex_edges(z) {
            m[e as usize] = true;
        }
        assert!(odd_vertices(d, &m).is_empty());
        m
    }

    #[test]
    fn interior_class1_loop_is_absorbed_by_class0_cluster() {
        let d = HexDomain::hexagon(4).unwrap();
        let z = d.hex_id(Hex::new(0, 2).unwrap()).unwrap();
        assert_eq!(d.hex(z).color(), 1);
        let m = class1_defect(&d, z);
        let dec = find_clusters(&d, &m, true).unwrap();
        assert!(dec.clusters.iter().all(|c| c.class == 0));
        assert!(dec.deviation.is_empty());
        repair_identities(&d, &m).unwrap();
    }

    #[test]
    fn boundary_class1_loop_forms_its_own_cluster() {
        let d = HexDomain::hexagon(4).unwrap();
        let bv = d.boundary_vertices();
        let z = d
            .faces()
            .iter()
            .copied()
            .find(|&f| {
                d.hex(f).color() == 1
                    && d.hex_nbrs(f).iter().filter(|&&g| d.hex(g).color() == 0).all(|&g| d.is_face(g))
                    && d.hex_nbrs(f).iter().any(|&g| d.hex(g).color() == 0 && d.hex_verts(g).iter().any(|v| bv.contains(v)))
            })
            .unwrap();
        let m = class1_defect(&d, z);
        let dec = find_clusters(&d, &m, true).unwrap();
        let ones: Vec<&Cluster> = dec.clusters.iter().filter(|c| c.class == 1).collect();
        assert_eq!(ones.len(), 1);
        assert_eq!(ones[0].hexes, vec![z]);
        let mut used = vec![false; d.n_window_edges()];
        for c in &dec.clusters {
            for &e in &c.edges {
                assert!(!used[e as usize], "clusters must be edge-disjoint");
                used[e as usize] = true;
            }
        }
        let id = repair_identities(&d, &m).unwrap();
        assert!(id.v > 0);
    }

    #[test]
    fn all_class1_loops_shift_down() {
        let d = HexDomain::hexagon(3).unwrap();
        let g1 = GroundState::new(1).unwrap();
        // trivial loops around class-1 faces well inside the domain
        let mut m = vec![false; d.n_window_edges()];
        for &f in d.faces() {
            if d.hex(f).color() == 1 && d.hex_nbrs(f).iter().all(|&g| d.is_face(g)) {
                for &e in d.hex_edges(f) {
                    m[e as usize] = true;
                }
            }
        }
        assert!(odd_vertices(&d, &m).is_empty());
        let r = repair(&d, &m).unwrap();
        for (e, &b) in m.iter().enumerate() {
            if b {
                assert!(g1.contains(&d.edge(e as u32)));
                let s = d.edge_shift(e as u32, ShiftDir::Down);
                let dec = &r.decomposition;
                if dec.e_class[1][e] {
                    assert!(r.result[s as usize]);
                }
            }
        }
        repair_identities(&d, &m).unwrap();
    }

    #[test]
    fn sampled_states_satisfy_identities_and_breakup_guarantees() {
        let d = HexDomain::hexagon(4).unwrap();
        let u = d.center_vertex();
        for (n, x, seed) in [(8.0, 0.5, 1u64), (8.0, 2.0, 2), (1.4, 0.6, 3)] {
            let init = if x > 1.0 { GroundState::new(0).unwrap().config(&d) } else { LoopConfig::empty() };
            let mut chain = LoopChain::new(&d, &init, n, Fugacity::Finite(x)).unwrap();
            let mut r = make_rng(seed, 0);
            for k in 0..200 {
                for _ in 0..50 {
                    chain.step(&mut r);
                }
                let id = repair_identities(&d, chain.mask()).unwrap();
                if n >= 1.0 && n * x.powi(6) >= 1.0 {
                    assert!(weight_gain_check(&id, n, x).unwrap().0);
                }
                if k % 10 == 0 {
                    if let Some(gamma) = find_breakup(&d, chain.mask(), u).unwrap() {
                        let c = check_breakup(&d, chain.mask(), &gamma).unwrap();
                        assert!(c.vacant && c.avoids_class0 && c.boundary_in_deviation, "{c:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn turns_differ_by_six() {
        let d = HexDomain::hexagon(3).unwrap();
        let mut chain = LoopChain::new(&d, &LoopConfig::empty(), 1.0, Fugacity::Finite(1.0)).unwrap();
        let mut r = make_rng(9, 0);
        for _ in 0..100 {
            for _ in 0..20 {
                chain.step(&mut r);
            }
            for lp in loop_decomposition(&d, chain.mask()) {
                let (m, mp) = loop_turns(&d, &lp);
                assert_eq!(m, mp + 6);
            }
        }
    }

    #[test]
    fn map_counting_identity() {
        let probs = [0.2, 0.3, 0.5];
        let rep = map_counting_check(&probs, &[0, 1], &[0, 1, 2], |w| w, 1.0, 1.0);
        assert!(rep.hypotheses_hold && rep.conclusion_holds);
        let bad = map_counting_check(&probs, &[2], &[0], |_| 0, 1.0, 1.0);
        assert!(!bad.hypotheses_hold);
    }
}
