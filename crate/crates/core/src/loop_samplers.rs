//! Dynamics for the loop O(n) model: single-face symmetric-difference moves
//! (with an optional two-face compound move) and the n = 1 Ising-interface
//! sampler.

use crate::error::{bail, Result};
use crate::lattice::{HexDomain, NONE};
use crate::loop_core::{loop_decomposition, EdgeMask, Fugacity, LoopConfig};
use crate::rng::Rng;
use rand::Rng as _;

/// Number of distinct loops through the given window vertices.
fn loops_through(d: &HexDomain, mask: &[bool], verts: &[u32]) -> usize {
    let mut done = [false; 16];
    debug_assert!(verts.len() <= 16);
    let mut count = 0;
    for i in 0..verts.len() {
        if done[i] {
            continue;
        }
        let v = verts[i];
        let first = d.vert_edges(v).iter().copied().find(|&e| e != NONE && mask[e as usize]);
        let Some(e0) = first else {
            done[i] = true;
            continue;
        };
        count += 1;
        done[i] = true;
        // walk the loop through v, marking every listed vertex we meet
        let [a, b] = d.edge_verts(e0);
        let mut cur = if a == v { b } else { a };
        let mut prev = e0;
        while cur != v {
            if let Some(k) = verts.iter().position(|&w| w == cur) {
                done[k] = true;
            }
            let Some(ne) = d.vert_edges(cur).iter().copied().find(|&e| e != NONE && e != prev && mask[e as usize]) else {
                break;
            };
            let [a, b] = d.edge_verts(ne);
            cur = if a == cur { b } else { a };
            prev = ne;
        }
    }
    count
}

fn toggle_faces(d: &HexDomain, mask: &mut [bool], faces: &[u32]) {
    for &z in faces {
        for &e in d.hex_edges(z) {
            mask[e as usize] ^= true;
        }
    }
}

fn face_vertices(d: &HexDomain, faces: &[u32]) -> Vec<u32> {
    let mut vs: Vec<u32> = faces.iter().flat_map(|&z| d.hex_verts(z).iter().copied()).collect();
    vs.sort_unstable();
    vs.dedup();
    vs
}

/// (Δo, ΔL) of ω ↦ ω △ ∂z for an inner face z (window hexagon id). ΔL is
/// obtained by re-traversing only the loops through the vertices of z before
/// and after the flip.
pub fn delta_counts(d: &HexDomain, mask: &mut [bool], z: u32) -> (i64, i64) {
    delta_counts_multi(d, mask, &[z])
}

/// (Δo, ΔL) for flipping several faces at once; `mask` is restored on return.
pub fn delta_counts_multi(d: &HexDomain, mask: &mut [bool], faces: &[u32]) -> (i64, i64) {
    let verts = face_vertices(d, faces);
    let o_before: i64 = faces.iter().flat_map(|&z| d.hex_edges(z).iter()).map(|&e| mask[e as usize] as i64).sum();
    let l_before = loops_through(d, mask, &verts) as i64;
    toggle_faces(d, mask, faces);
    let o_after: i64 = faces.iter().flat_map(|&z| d.hex_edges(z).iter()).map(|&e| mask[e as usize] as i64).sum();
    let l_after = loops_through(d, mask, &verts) as i64;
    toggle_faces(d, mask, faces);
    (o_after - o_before, l_after - l_before)
}

/// Metropolis acceptance probability min(1, x^{Δo} n^{ΔL}); at x = ∞ moves
/// with Δo > 0 are accepted, Δo = 0 with min(1, n^{ΔL}), Δo < 0 rejected.
pub fn acceptance_probability(delta_o: i64, delta_l: i64, n: f64, x: Fugacity) -> f64 {
    match x {
        Fugacity::Finite(x) => (delta_o as f64 * x.ln() + delta_l as f64 * n.ln()).exp().min(1.0),
        Fugacity::Infinite => {
            if delta_o > 0 {
                1.0
            } else if delta_o == 0 {
                (delta_l as f64 * n.ln()).exp().min(1.0)
            } else {
                0.0
            }
        }
    }
}

/// Per-chain counters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopChainStats {
    pub proposals: u64,
    pub accepted: u64,
    pub compound_proposals: u64,
    pub compound_accepted: u64,
}

/// A loop O(n) Markov chain on a domain. Owns its configuration; o and L are
/// tracked incrementally.
#[derive(Clone, Debug)]
pub struct LoopChain<'a> {
    d: &'a HexDomain,
    mask: EdgeMask,
    o: i64,
    l: i64,
    n: f64,
    x: Fugacity,
    /// Probability of attempting a two-face compound move instead of a single flip.
    pub compound_probability: f64,
    pub stats: LoopChainStats,
}

impl<'a> LoopChain<'a> {
    pub fn new(d: &'a HexDomain, init: &LoopConfig, n: f64, x: Fugacity) -> Result<LoopChain<'a>> {
        if !(n > 0.0) {
            bail!(InvalidArgument, "n must be positive");
        }
        if let Fugacity::Finite(v) = x {
            if !(v > 0.0) {
                bail!(InvalidArgument, "x must be positive");
            }
        }
        if d.faces().is_empty() {
            bail!(InvalidDomain, "domain has no inner face");
        }
        let mask = init.to_mask(d)?;
        let odd = crate::loop_core::odd_vertices(d, &mask);
        if !odd.is_empty() {
            bail!(InvalidArgument, "initial configuration has {} odd-degree vertices", odd.len());
        }
        let o = mask.iter().filter(|&&b| b).count() as i64;
        let l = loop_decomposition(d, &mask).len() as i64;
        Ok(LoopChain { d, mask, o, l, n, x, compound_probability: 0.0, stats: LoopChainStats::default() })
    }

    pub fn domain(&self) -> &HexDomain {
        self.d
    }
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
    pub fn o(&self) -> usize {
        self.o as usize
    }
    pub fn loops(&self) -> usize {
        self.l as usize
    }
    pub fn config(&self) -> LoopConfig {
        LoopConfig::from_mask(self.d, &self.mask)
    }

    /// Attempts ω △ ∂z for window hexagon z. Hexagons that are not inner faces
    /// are skipped and count as rejections.
    pub fn face_flip_step(&mut self, z: u32, rng: &mut Rng) -> bool {
        self.stats.proposals += 1;
        if (z as usize) >= self.d.n_window_hexes() || !self.d.is_face(z) {
            return false;
        }
        self.try_flip(&[z], rng)
    }

    fn try_flip(&mut self, faces: &[u32], rng: &mut Rng) -> bool {
        let (dobj, dl) = delta_counts_multi(self.d, &mut self.mask, faces);
        let p = acceptance_probability(dobj, dl, self.n, self.x);
        let accept = p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p);
        if accept {
            toggle_faces(self.d, &mut self.mask, faces);
            self.o += dobj;
            self.l += dl;
        }
        accept
    }

    /// One step: a uniform face flip, or (with `compound_probability`) a
    /// simultaneous flip of a uniform face and a uniform adjacent face.
    pub fn step(&mut self, rng: &mut Rng) -> bool {
        let faces = self.d.faces();
        let z = faces[rng.gen_range(0..faces.len())];
        if self.compound_probability > 0.0 && rng.gen::<f64>() < self.compound_probability {
            self.stats.compound_proposals += 1;
            self.stats.proposals += 1;
            let nb: Vec<u32> = self.d.hex_nbrs(z).iter().copied().filter(|&g| g != NONE && self.d.is_face(g)).collect();
            if nb.is_empty() {
                return false;
            }
            let g = nb[rng.gen_range(0..nb.len())];
            let acc = self.try_flip(&[z, g], rng);
            if acc {
                self.stats.accepted += 1;
                self.stats.compound_accepted += 1;
            }
            return acc;
        }
        let acc = self.face_flip_step(z, rng);
        if acc {
            self.stats.accepted += 1;
        }
        acc
    }

    /// Length of the longest loop (full decomposition).
    pub fn longest_loop(&self) -> usize {
        loop_decomposition(self.d, &self.mask).iter().map(|l| l.len()).max().unwrap_or(0)
    }
}

/// Ising spins on the hexagons of a domain: inner faces carry ±1, every other
/// hexagon is fixed to +1. Heat-bath dynamics for the triangular-lattice Ising
/// model at β = −ln(x)/2, whose domain walls are distributed as the loop O(1)
/// model with edge weight x.
#[derive(Clone, Debug)]
pub struct IsingInterfaceSampler<'a> {
    d: &'a HexDomain,
    spins: Vec<i8>,
    beta: f64,
}

impl<'a> IsingInterfaceSampler<'a> {
    pub fn new(d: &'a HexDomain, x: f64) -> Result<IsingInterfaceSampler<'a>> {
        if !(x > 0.0 && x.is_finite()) {
            bail!(InvalidArgument, "interface sampler needs x in (0, ∞)");
        }
        Ok(IsingInterfaceSampler { d, spins: vec![1; d.n_window_hexes()], beta: -x.ln() / 2.0 })
    }
    pub fn spins(&self) -> &[i8] {
        &self.spins
    }
    /// One heat-bath sweep over the inner faces in a fixed order.
    pub fn sweep(&mut self, rng: &mut Rng) {
        for &h in self.d.faces() {
            let f: i32 = self.d.hex_nbrs(h).iter().map(|&g| if g == NONE { 1 } else { self.spins[g as usize] as i32 }).sum();
            let p_plus = 1.0 / (1.0 + (-2.0 * self.beta * f as f64).exp());
            self.spins[h as usize] = if rng.gen::<f64>() < p_plus { 1 } else { -1 };
        }
    }
    /// Domain walls: edges between hexagons of unequal spin.
    pub fn interfaces(&self) -> EdgeMask {
        let d = self.d;
        (0..d.n_window_edges() as u32)
            .map(|e| {
                let [p, q] = d.edge_hexes(e);
                p != NONE && q != NONE && self.spins[p as usize] != self.spins[q as usize]
            })
            .collect()
    }
}

/// Spins of inner faces ↦ domain-wall loop configuration (non-faces fixed +).
pub fn interfaces_of_spins(d: &HexDomain, face_spins: &[i8]) -> EdgeMask {
    let mut spins = vec![1i8; d.n_window_hexes()];
    for (i, &f) in d.faces().iter().enumerate() {
        spins[f as usize] = face_spins[i];
    }
    (0..d.n_window_edges() as u32)
        .map(|e| {
            let [p, q] = d.edge_hexes(e);
            p != NONE && q != NONE && spins[p as usize] != spins[q as usize]
        })
        .collect()
}

/// Runs `sweeps` heat-bath sweeps from the all-plus state and returns the
/// domain walls.
pub fn ising_interface_sample(d: &HexDomain, x: f64, sweeps: usize, rng: &mut Rng) -> Result<LoopConfig> {
    let mut s = IsingInterfaceSampler::new(d, x)?;
    for _ in 0..sweeps {
        s.sweep(rng);
    }
    Ok(LoopConfig::from_mask(d, &s.interfaces()))
}
