//! Self-avoiding walks on the hexagonal lattice: exact counts s_k,
//! connective-constant estimates and the two-edge SAW partition function of a
//! domain.

use crate::error::{bail, Result};
use crate::lattice::{HexDomain, Vertex, NONE};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest supported walk length for exact enumeration.
pub const SAW_MAX_LENGTH: usize = 30;

/// √(2+√2), the connective constant of the hexagonal lattice.
pub fn hexagonal_connective_constant() -> f64 {
    (2.0 + 2f64.sqrt()).sqrt()
}

/// Exact counts s_k of k-step self-avoiding walks from a fixed vertex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SawCountTable {
    /// counts[k] = s_k, k = 0..=k_max.
    pub counts: Vec<BigUint>,
}

impl SawCountTable {
    pub fn k_max(&self) -> usize {
        self.counts.len() - 1
    }
    pub fn s(&self, k: usize) -> &BigUint {
        &self.counts[k]
    }
    /// s_{k+m} ≤ s_k s_m for all k + m ≤ k_max; returns the first violating pair.
    pub fn submultiplicativity_violation(&self) -> Option<(usize, usize)> {
        let km = self.k_max();
        for k in 1..=km {
            for m in 1..=km - k {
                if self.counts[k + m] > &self.counts[k] * &self.counts[m] {
                    return Some((k, m));
                }
            }
        }
        None
    }
    /// 2^{k/2} ≤ s_k ≤ 3·2^{k−1} for all 1 ≤ k ≤ k_max; returns the first violation.
    pub fn bounds_violation(&self) -> Option<usize> {
        (1..=self.k_max()).find(|&k| {
            let s = &self.counts[k];
            let upper = BigUint::from(3u32) << (k - 1);
            // s_k ≥ 2^{k/2} ⇔ s_k² ≥ 2^k
            let lower_ok = s * s >= BigUint::from(1u32) << k;
            !(lower_ok && s <= &upper)
        })
    }
}

/// The brick-wall embedding of ℍ used for fast enumeration: vertices are
/// (x, y) ∈ ℤ², horizontal neighbours (x±1, y) and one vertical neighbour,
/// (x, y+1) when x+y is even and (x, y−1) otherwise (`mirror` swaps the rule,
/// i.e. reflects the lattice).
#[derive(Clone, Copy, Debug)]
struct BrickWall {
    mirror: bool,
}

impl BrickWall {
    #[inline]
    fn neighbors(self, x: i32, y: i32) -> [(i32, i32); 3] {
        let up = ((x + y).rem_euclid(2) == 0) != self.mirror;
        [(x + 1, y), (x - 1, y), (x, if up { y + 1 } else { y - 1 })]
    }
}

struct Dfs {
    lat: BrickWall,
    side: i32,
    centre: (i32, i32),
    visited: Vec<bool>,
    counts: Vec<u64>,
    k_max: usize,
}

impl Dfs {
    fn new(lat: BrickWall, centre: (i32, i32), k_max: usize) -> Dfs {
        let side = 2 * k_max as i32 + 5;
        Dfs { lat, side, centre, visited: vec![false; (side * side) as usize], counts: vec![0; k_max + 1], k_max }
    }
    #[inline]
    fn idx(&self, x: i32, y: i32) -> usize {
        ((x - self.centre.0 + self.side / 2) * self.side + (y - self.centre.1 + self.side / 2)) as usize
    }
    fn run(&mut self, x: i32, y: i32, len: usize) {
        self.counts[len] += 1;
        if len == self.k_max {
            return;
        }
        for (nx, ny) in self.lat.neighbors(x, y) {
            let i = self.idx(nx, ny);
            if !self.visited[i] {
                self.visited[i] = true;
                self.run(nx, ny, len + 1);
                self.visited[i] = false;
            }
        }
    }
}

fn check_budget(k_max: usize) -> Result<()> {
    if k_max > SAW_MAX_LENGTH {
        bail!(CapExceeded, "k_max = {k_max} exceeds the exact DFS budget {SAW_MAX_LENGTH}");
    }
    Ok(())
}

/// Exact s_k for k ≤ k_max from the origin (x0, y0) of the brick-wall
/// embedding, enumerated in parallel over the two-step prefixes.
fn enumerate_from(x0: i32, y0: i32, mirror: bool, k_max: usize) -> Result<SawCountTable> {
    check_budget(k_max)?;
    let lat = BrickWall { mirror };
    let mut prefixes = Vec::new();
    for a in lat.neighbors(x0, y0) {
        for b in lat.neighbors(a.0, a.1) {
            if b != (x0, y0) {
                prefixes.push((a, b));
            }
        }
    }
    let mut counts: Vec<BigUint> = vec![BigUint::zero(); k_max + 1];
    counts[0] = BigUint::from(1u32);
    if k_max >= 1 {
        counts[1] = BigUint::from(3u32);
    }
    if k_max >= 2 {
        let partial: Vec<Vec<u64>> = prefixes
            .par_iter()
            .map(|&(a, b)| {
                let mut dfs = Dfs::new(lat, (x0, y0), k_max);
                for (px, py) in [(x0, y0), a, b] {
                    let i = dfs.idx(px, py);
                    dfs.visited[i] = true;
                }
                dfs.run(b.0, b.1, 2);
                dfs.counts
            })
            .collect();
        for p in partial {
            for (k, c) in p.into_iter().enumerate().skip(2) {
                counts[k] += c;
            }
        }
    }
    Ok(SawCountTable { counts })
}

/// Exact counts s_k, 0 ≤ k ≤ k_max, of self-avoiding walks from a vertex of ℍ.
pub fn enumerate_saw(k_max: usize) -> Result<SawCountTable> {
    enumerate_from(0, 0, false, k_max)
}

/// Counts from another origin and/or the reflected lattice (used to witness
/// vertex-transitivity).
pub fn enumerate_saw_from(origin: (i32, i32), mirror: bool, k_max: usize) -> Result<SawCountTable> {
    enumerate_from(origin.0, origin.1, mirror, k_max)
}

/// Counts using the three-fold rotation symmetry: only walks whose first step
/// is horizontal to the right are enumerated, then multiplied by 3.
pub fn enumerate_saw_reduced(k_max: usize) -> Result<SawCountTable> {
    check_budget(k_max)?;
    let lat = BrickWall { mirror: false };
    let mut counts: Vec<BigUint> = vec![BigUint::zero(); k_max + 1];
    counts[0] = BigUint::from(1u32);
    if k_max >= 1 {
        let mut dfs = Dfs::new(lat, (0, 0), k_max);
        let (i0, i1) = (dfs.idx(0, 0), dfs.idx(1, 0));
        dfs.visited[i0] = true;
        dfs.visited[i1] = true;
        dfs.run(1, 0, 1);
        for (k, c) in dfs.counts.into_iter().enumerate().skip(1) {
            counts[k] = BigUint::from(c) * 3u32;
        }
    }
    Ok(SawCountTable { counts })
}

/// Independent brute force on the native vertex representation: all 3^k
/// neighbour sequences are generated and the self-avoiding ones counted.
pub fn brute_force_saw(origin: Vertex, k: usize) -> Result<u64> {
    if k > 14 {
        bail!(CapExceeded, "brute force limited to k ≤ 14");
    }
    let total = 3u64.pow(k as u32);
    let mut count = 0;
    let mut path: Vec<Vertex> = Vec::with_capacity(k + 1);
    for code in 0..total {
        path.clear();
        path.push(origin);
        let mut c = code;
        let mut ok = true;
        for _ in 0..k {
            let next = path.last().unwrap().neighbors()[(c % 3) as usize];
            c /= 3;
            if path.contains(&next) {
                ok = false;
                break;
            }
            path.push(next);
        }
        if ok {
            count += 1;
        }
    }
    Ok(count)
}

/// s_k^{1/k}, its running infimum and the gap to √(2+√2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectiveEstimates {
    /// (k, s_k^{1/k}) for k ≥ 1.
    pub roots: Vec<(usize, f64)>,
    /// Running infimum min_{j ≤ k} s_j^{1/j}: an upper bound on μ.
    pub running_inf: Vec<f64>,
    pub upper_bound: f64,
    pub gap_to_exact: f64,
}

pub fn connective_estimates(table: &SawCountTable) -> Result<ConnectiveEstimates> {
    if table.k_max() < 10 {
        bail!(InvalidArgument, "connective estimates need k_max ≥ 10");
    }
    let mut roots = Vec::new();
    let mut running_inf = Vec::new();
    let mut inf = f64::INFINITY;
    for k in 1..=table.k_max() {
        let s = table.counts[k].to_f64().expect("finite");
        let r = (s.ln() / k as f64).exp();
        inf = inf.min(r);
        roots.push((k, r));
        running_inf.push(inf);
    }
    Ok(ConnectiveEstimates { roots, running_inf, upper_bound: inf, gap_to_exact: inf - hexagonal_connective_constant() })
}

/// Truncated two-edge SAW partition function of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SawPartition {
    /// counts[k]: self-avoiding paths in H of k edges joining the inner
    /// endpoints of e1 and e2.
    pub counts: Vec<u64>,
    pub x: f64,
    /// Σ_k counts[k] x^k.
    pub z: f64,
    /// Whether the cap k_max cut off any path.
    pub truncated: bool,
}

/// Z^saw_{H,x,e1,e2}: sum over self-avoiding paths inside H from e1 to e2 of
/// x^{length}, where e1, e2 are boundary edges (edges leaving H) and the
/// length counts the edges of H used between their inner endpoints.
pub fn saw_two_edge_partition(d: &HexDomain, x: f64, e1: u32, e2: u32, k_max: usize) -> Result<SawPartition> {
    if !(x >= 0.0) {
        bail!(InvalidArgument, "x must be non-negative");
    }
    let inner = |e: u32| -> Result<u32> {
        if !d.boundary_edges().contains(&e) {
            bail!(InvalidArgument, "edge {e} is not a boundary edge of the domain");
        }
        let [a, b] = d.edge_verts(e);
        Ok(if a != NONE && d.in_domain_vertex(a) { a } else { b })
    };
    let (u, v) = (inner(e1)?, inner(e2)?);
    let mut counts = vec![0u64; k_max + 1];
    let mut visited = vec![false; d.n_window_verts()];
    let mut truncated = false;
    fn rec(d: &HexDomain, w: u32, target: u32, len: usize, k_max: usize, visited: &mut Vec<bool>, counts: &mut Vec<u64>, truncated: &mut bool) {
        if w == target {
            counts[len] += 1;
            return;
        }
        if len == k_max {
            *truncated = true;
            return;
        }
        for &y in d.vert_nbrs(w) {
            if y != NONE && d.in_domain_vertex(y) && !visited[y as usize] {
                visited[y as usize] = true;
                rec(d, y, target, len + 1, k_max, visited, counts, truncated);
                visited[y as usize] = false;
            }
        }
    }
    visited[u as usize] = true;
    rec(d, u, v, 0, k_max, &mut visited, &mut counts, &mut truncated);
    let z = counts.iter().enumerate().map(|(k, &c)| c as f64 * if k == 0 { 1.0 } else { x.powi(k as i32) }).sum();
    Ok(SawPartition { counts, x, z, truncated })
}
