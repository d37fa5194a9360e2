//! Brute-force exact computations on tiny systems: partition functions,
//! correlations and exact verifications of the identities and inequalities
//! that back every statistical test.

use crate::error::{bail, Result};
use crate::lattice::{HexDomain, TorusLattice};
use crate::loop_core::{enumerate, normalize_log, Fugacity, LoopEnumeration, Parity, ENUMERATION_EDGE_CAP};
use crate::loop_samplers::interfaces_of_spins;
use crate::loop_structure::{map_counting_check, MapCountingReport};
use crate::representations::{count_clusters, Graph, UnionFind};
use crate::spin_core::{Potential, SpinConfig};
use crate::spin_observables::{gaussian_domination_ratio, TauField};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

/// Largest graph handled by the Ising enumeration.
pub const ISING_VERTEX_CAP: usize = 24;
/// Largest graph handled by the FK enumeration.
pub const FK_EDGE_CAP: usize = 20;
/// Largest number of clock states M^{N−1} in an angle quadrature.
pub const QUADRATURE_STATE_CAP: f64 = 6.7e7;

/// Full enumeration of a tiny system: state ids with log-weights, the
/// partition function and named exact observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactTable {
    pub model: String,
    pub params: serde_json::Value,
    pub ids: Vec<u64>,
    pub log_weights: Vec<f64>,
    /// ln Σ exp(log_weight) (normalisation of the measure used by `model`).
    pub log_z: f64,
    pub observables: BTreeMap<String, f64>,
}

impl ExactTable {
    fn new(model: &str, params: serde_json::Value, ids: Vec<u64>, log_weights: Vec<f64>) -> ExactTable {
        let m = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = m + log_weights.iter().map(|w| (w - m).exp()).sum::<f64>().ln();
        ExactTable { model: model.to_string(), params, ids, log_weights, log_z, observables: BTreeMap::new() }
    }
    pub fn len(&self) -> usize {
        self.ids.len()
    }
    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
    pub fn probabilities(&self) -> Vec<f64> {
        normalize_log(&self.log_weights)
    }
    /// Exact expectation of f(state id).
    pub fn expect<F: Fn(u64) -> f64>(&self, f: F) -> f64 {
        self.probabilities().iter().zip(&self.ids).map(|(p, &id)| p * f(id)).sum()
    }
    /// Position of a state id (ids are sorted).
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
    /// χ² goodness of fit of observed state counts against the table.
    pub fn chi_square(&self, counts: &HashMap<u64, u64>, min_expected: f64) -> Result<crate::stats::ChiSquare> {
        let mut observed = vec![0u64; self.len()];
        for (&id, &c) in counts {
            match self.index_of(id) {
                Some(i) => observed[i] += c,
                None => bail!(IdentityViolation, "sampled state {id:#x} has zero exact weight"),
            }
        }
        crate::stats::chi_square_gof(&observed, &self.probabilities(), min_expected)
    }
    /// Total-variation distance to another probability vector over the same ids.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        self.probabilities().iter().zip(other).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
    }
}

// ---------------------------------------------------------------------------
// Ising
// ---------------------------------------------------------------------------

/// σ_v for state id `s`: bit v set ⇔ σ_v = −1.
#[inline]
pub fn ising_spin(s: u64, v: usize) -> f64 {
    if s >> v & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// State id of an n = 1 spin configuration.
pub fn ising_id(cfg: &SpinConfig) -> u64 {
    (0..cfg.len()).fold(0u64, |m, v| if cfg.spin(v)[0] < 0.0 { m | 1 << v } else { m })
}

/// Exact Ising model with weight exp(Σ_e J_e σ_u σ_v) on a graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingExact {
    pub graph: Graph,
    pub couplings: Vec<f64>,
    pub table: ExactTable,
    /// rho[x][y] = E(σ_x σ_y).
    pub rho: Vec<Vec<f64>>,
}

impl IsingExact {
    /// E(Π_{x∈A} σ_x) for a vertex bitmask A.
    pub fn moment(&self, a: u64) -> f64 {
        self.table.expect(|s| if (s & a).count_ones() % 2 == 1 { -1.0 } else { 1.0 })
    }
    /// Σ_σ exp(Σ J σσ) over {±1}^V (counting measure).
    pub fn z_counting(&self) -> f64 {
        self.table.log_z.exp()
    }
}

/// Full 2^{|V|} enumeration of the Ising model with per-edge couplings.
pub fn exact_ising(g: &Graph, couplings: &[f64]) -> Result<IsingExact> {
    if g.n > ISING_VERTEX_CAP {
        bail!(CapExceeded, "|V| = {} exceeds the Ising enumeration cap {ISING_VERTEX_CAP}", g.n);
    }
    if couplings.len() != g.edges.len() {
        bail!(InvalidArgument, "one coupling per edge required");
    }
    let n = g.n;
    let ids: Vec<u64> = (0..1u64 << n).collect();
    let lw: Vec<f64> = ids
        .par_iter()
        .map(|&s| g.edges.iter().zip(couplings).map(|(&(u, v), j)| j * ising_spin(s, u as usize) * ising_spin(s, v as usize)).sum())
        .collect();
    let table = ExactTable::new("ising", serde_json::json!({ "n_vertices": n, "couplings": couplings }), ids, lw);
    let probs = table.probabilities();
    let mut rho = vec![vec![1.0; n]; n];
    for x in 0..n {
        for y in x + 1..n {
            let mask = (1u64 << x) | (1u64 << y);
            let r: f64 = probs.iter().enumerate().map(|(s, p)| if (s as u64 & mask).count_ones() == 1 { -p } else { *p }).sum();
            rho[x][y] = r;
            rho[y][x] = r;
        }
    }
    let mut ex = IsingExact { graph: g.clone(), couplings: couplings.to_vec(), table, rho };
    let m2: f64 = ex.table.expect(|s| {
        let m: f64 = (0..n).map(|v| ising_spin(s, v)).sum();
        m * m
    });
    let mabs: f64 = ex.table.expect(|s| (0..n).map(|v| ising_spin(s, v)).sum::<f64>().abs());
    ex.table.observables.insert("m2_per_site2".into(), m2 / (n * n) as f64);
    ex.table.observables.insert("abs_m_per_site".into(), mabs / n as f64);
    Ok(ex)
}

/// The Ising model on a torus at inverse temperature β (uniform couplings).
pub fn exact_ising_torus(lat: &TorusLattice, beta: f64) -> Result<IsingExact> {
    let g = Graph::from_torus(lat);
    let j = vec![beta; g.edges.len()];
    exact_ising(&g, &j)
}

// ---------------------------------------------------------------------------
// Clock-model quadrature for n = 2
// ---------------------------------------------------------------------------

/// Exact M-angle clock discretisation of the n = 2 model with pair potential U.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyQuadrature {
    pub m: usize,
    /// Normalised partition function (uniform probability reference measure).
    pub z: f64,
    /// rho[x][y] = E cos(θ_x − θ_y).
    pub rho: Vec<Vec<f64>>,
    /// E[cos(θ_x−θ_y) cos(θ_z−θ_w)] for the pair list `pairs`.
    pub pair_products: Vec<Vec<f64>>,
    pub pairs: Vec<(usize, usize)>,
}

fn xy_at(g: &Graph, weight: &(dyn Fn(usize, f64) -> f64 + Sync), m: usize) -> Result<XyQuadrature> {
    let n = g.n;
    if n == 0 || (m as f64).powi(n as i32 - 1) > QUADRATURE_STATE_CAP {
        bail!(CapExceeded, "clock quadrature with M = {m} on {n} vertices exceeds the state cap");
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let np = pairs.len();
    let total = m.pow(n as u32 - 1);
    let cos_table: Vec<f64> = (0..m).map(|k| (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos()).collect();
    let chunk = 4096usize;
    let (z, c1, c2) = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut z = 0.0;
            let mut c1 = vec![0.0; np];
            let mut c2 = vec![0.0; np * np];
            let mut theta = vec![0usize; n];
            let mut cosv = vec![0.0; np];
            for idx in c * chunk..((c + 1) * chunk).min(total) {
                let mut r = idx;
                for t in theta.iter_mut().skip(1) {
                    *t = r % m;
                    r /= m;
                }
                let mut w = 1.0;
                for (e, &(u, v)) in g.edges.iter().enumerate() {
                    w *= weight(e, cos_table[(theta[u as usize] + m - theta[v as usize]) % m]);
                    if w == 0.0 {
                        break;
                    }
                }
                if w == 0.0 {
                    continue;
                }
                z += w;
                for (i, &(x, y)) in pairs.iter().enumerate() {
                    cosv[i] = cos_table[(theta[x] + m - theta[y]) % m];
                    c1[i] += w * cosv[i];
                }
                for i in 0..np {
                    for j in 0..np {
                        c2[i * np + j] += w * cosv[i] * cosv[j];
                    }
                }
            }
            (z, c1, c2)
        })
        .reduce(
            || (0.0, vec![0.0; np], vec![0.0; np * np]),
            |a, b| (a.0 + b.0, a.1.iter().zip(&b.1).map(|(x, y)| x + y).collect(), a.2.iter().zip(&b.2).map(|(x, y)| x + y).collect()),
        );
    if !(z > 0.0) {
        bail!(Numerical, "clock quadrature found zero total weight (M = {m})");
    }
    let mut rho = vec![vec![1.0; n]; n];
    for (i, &(x, y)) in pairs.iter().enumerate() {
        rho[x][y] = c1[i] / z;
        rho[y][x] = c1[i] / z;
    }
    let pair_products = (0..np).map(|i| (0..np).map(|j| c2[i * np + j] / z).collect()).collect();
    Ok(XyQuadrature { m, z: z / total as f64, rho, pair_products, pairs })
}

/// Result of a doubled clock quadrature with its convergence certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyExact {
    pub fine: XyQuadrature,
    pub z_coarse: f64,
    pub relative_change: f64,
    pub max_rho_change: f64,
    pub converged: bool,
}

/// Clock quadrature of the n = 2 model with potential U on G, with M doubled
/// from `m0` until Z changes by less than `tol` (relative) between M and 2M.
pub fn exact_xy_quadrature(g: &Graph, pot: &Potential, m0: usize, tol: f64) -> Result<XyExact> {
    let w = |_e: usize, r: f64| pot.eval(r).map(|u| (-u).exp()).unwrap_or(0.0);
    xy_doubling(g, &w, m0, tol)
}

/// As [`exact_xy_quadrature`] with per-edge ferromagnetic couplings exp(J_e cos).
pub fn exact_xy_couplings(g: &Graph, couplings: &[f64], m0: usize, tol: f64) -> Result<XyExact> {
    if couplings.len() != g.edges.len() {
        bail!(InvalidArgument, "one coupling per edge required");
    }
    let c = couplings.to_vec();
    let w = move |e: usize, r: f64| (c[e] * r).exp();
    xy_doubling(g, &w, m0, tol)
}

fn xy_doubling(g: &Graph, w: &(dyn Fn(usize, f64) -> f64 + Sync), m0: usize, tol: f64) -> Result<XyExact> {
    if !m0.is_power_of_two() || m0 < 4 {
        bail!(InvalidArgument, "M must be a power of two ≥ 4");
    }
    let mut coarse = xy_at(g, w, m0)?;
    let mut m = m0;
    loop {
        let fine = match xy_at(g, w, 2 * m) {
            Ok(f) => f,
            Err(e) => bail!(Numerical, "quadrature did not converge before the cap: {e}"),
        };
        let rel = (fine.z - coarse.z).abs() / fine.z;
        let drho = fine.rho.iter().flatten().zip(coarse.rho.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if rel < tol && drho < tol.max(1e-12) * 10.0 {
            return Ok(XyExact { z_coarse: coarse.z, fine, relative_change: rel, max_rho_change: drho, converged: true });
        }
        coarse = fine;
        m *= 2;
    }
}

// ---------------------------------------------------------------------------
// Loop model and FK
// ---------------------------------------------------------------------------

/// Exact loop O(n) table (ids are the enumeration bitmasks over E(H)).
#[derive(Clone, Debug)]
pub struct LoopExact {
    pub enumeration: LoopEnumeration,
    pub table: ExactTable,
}

pub fn exact_loop(d: &HexDomain, n: f64, x: Fugacity) -> Result<LoopExact> {
    let en = enumerate(d, Parity::Even, ENUMERATION_EDGE_CAP)?;
    let lw = en.log_weights(n, x, false);
    let ids = en.configs.iter().map(|c| c.mask).collect();
    let xv = match x {
        Fugacity::Finite(v) => serde_json::json!(v),
        Fugacity::Infinite => serde_json::json!("inf"),
    };
    let mut table = ExactTable::new("loop", serde_json::json!({ "n": n, "x": xv, "edges": en.domain_edges.len() }), ids, lw);
    let p = table.probabilities();
    table.observables.insert("mean_o".into(), en.configs.iter().zip(&p).map(|(c, p)| c.o as f64 * p).sum());
    table.observables.insert("mean_loops".into(), en.configs.iter().zip(&p).map(|(c, p)| c.loops as f64 * p).sum());
    Ok(LoopExact { enumeration: en, table })
}

/// Exact FK random-cluster model q^{N(E)} p^{|E|} (1−p)^{|E(G)∖E|}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkExact {
    pub table: ExactTable,
    /// connect[x][y] = Pr(x ↔ y).
    pub connect: Vec<Vec<f64>>,
}

pub fn exact_fk(g: &Graph, p: f64, q: f64) -> Result<FkExact> {
    if g.edges.len() > FK_EDGE_CAP {
        bail!(CapExceeded, "|E(G)| = {} exceeds the FK enumeration cap {FK_EDGE_CAP}", g.edges.len());
    }
    if !(0.0..=1.0).contains(&p) || !(q > 0.0) {
        bail!(InvalidArgument, "need p ∈ [0,1] and q > 0");
    }
    let m = g.edges.len();
    let n = g.n;
    let rows: Vec<(u64, f64, Vec<u32>)> = (0..1u64 << m)
        .into_par_iter()
        .filter_map(|mask| {
            let k = mask.count_ones() as f64;
            let open: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
            let lw = count_clusters(g, &open) as f64 * q.ln()
                + if k > 0.0 { k * p.ln() } else { 0.0 }
                + if (m as f64 - k) > 0.0 { (m as f64 - k) * (1.0 - p).ln() } else { 0.0 };
            if lw == f64::NEG_INFINITY {
                return None;
            }
            let mut uf = UnionFind::new(n);
            for (i, &(u, v)) in g.edges.iter().enumerate() {
                if open[i] {
                    uf.union(u as usize, v as usize);
                }
            }
            let roots = (0..n).map(|v| uf.find(v) as u32).collect();
            Some((mask, lw, roots))
        })
        .collect();
    let ids = rows.iter().map(|r| r.0).collect();
    let lw = rows.iter().map(|r| r.1).collect();
    let table = ExactTable::new("fk", serde_json::json!({ "p": p, "q": q, "edges": m }), ids, lw);
    let probs = table.probabilities();
    let mut connect = vec![vec![0.0; n]; n];
    for (row, pr) in rows.iter().zip(&probs) {
        for x in 0..n {
            for y in 0..n {
                if row.2[x] == row.2[y] {
                    connect[x][y] += pr;
                }
            }
        }
    }
    Ok(FkExact { table, connect })
}

// ---------------------------------------------------------------------------
// Loop ↔ spin identities on hexagonal domains
// ---------------------------------------------------------------------------

/// The hexagonal-lattice graph (V(H), E(H)); vertex i is `verts[i]`.
pub fn domain_graph(d: &HexDomain) -> (Graph, Vec<u32>) {
    let verts: Vec<u32> = d.domain_vertices().to_vec();
    let pos: HashMap<u32, u32> = verts.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let edges = d
        .domain_edges()
        .iter()
        .map(|&e| {
            let [a, b] = d.edge_verts(e);
            (pos[&a], pos[&b])
        })
        .collect();
    (Graph { n: verts.len(), edges }, verts)
}

/// Both sides of the n = 1 high-temperature identity
/// Σ_{σ∈{±1}^V} e^{βΣσσ} = cosh(β)^{|E|} 2^{|V|} Σ_{ω even} tanh(β)^{o(ω)}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HtCheck {
    pub loop_sum: f64,
    pub spin_side: f64,
    pub relative_error: f64,
}

pub fn ht_expansion_check(d: &HexDomain, beta: f64) -> Result<HtCheck> {
    let (g, _) = domain_graph(d);
    let ising = exact_ising(&g, &vec![beta; g.edges.len()])?;
    let x = beta.tanh();
    let en = enumerate(d, Parity::Even, ENUMERATION_EDGE_CAP)?;
    let loop_sum: f64 = en.configs.iter().map(|c| x.powi(c.o as i32)).sum();
    let spin_side = ising.z_counting() / (beta.cosh().powi(g.edges.len() as i32) * 2f64.powi(g.n as i32));
    Ok(HtCheck { loop_sum, spin_side, relative_error: (loop_sum - spin_side).abs() / spin_side })
}

/// Both sides of the n = 1 spin–loop correlation identity
/// E(σ_u σ_v) = Σ_{ω∈LoopConf(H,u,v)} x^{o} / Σ_{ω∈LoopConf(H)} x^{o}, x = tanh β.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationCheck {
    pub spin_correlation: f64,
    pub loop_ratio: f64,
    pub abs_error: f64,
}

pub fn relation_check_n1(d: &HexDomain, beta: f64, u: u32, v: u32) -> Result<RelationCheck> {
    let (g, verts) = domain_graph(d);
    let iu = verts.iter().position(|&w| w == u);
    let iv = verts.iter().position(|&w| w == v);
    let (Some(iu), Some(iv)) = (iu, iv) else {
        bail!(InvalidArgument, "u and v must be vertices of the domain");
    };
    let ising = exact_ising(&g, &vec![beta; g.edges.len()])?;
    let rho = ising.rho[iu][iv];
    let loop_ratio = if u == v {
        1.0
    } else {
        let x = Fugacity::Finite(beta.tanh());
        let even = enumerate(d, Parity::Even, ENUMERATION_EDGE_CAP)?;
        let odd = enumerate(d, Parity::Odd(u, v), ENUMERATION_EDGE_CAP)?;
        if beta == 0.0 {
            0.0
        } else {
            odd.partition_function(1.0, x, true) / even.partition_function(1.0, x, false)
        }
    };
    Ok(RelationCheck { spin_correlation: rho, loop_ratio, abs_error: (rho - loop_ratio).abs() })
}

/// Law of the domain walls of the triangular-lattice Ising model on the inner
/// faces (non-faces fixed +) at β, as probabilities over the even enumeration
/// of H, together with the loop O(1) law at x = e^{−2β}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceDuality {
    pub interface_law: Vec<f64>,
    pub loop_law: Vec<f64>,
    pub tv_distance: f64,
    /// Whether spins ↦ walls is a bijection onto LoopConf(H).
    pub bijective: bool,
}

pub fn interface_duality(d: &HexDomain, beta: f64) -> Result<InterfaceDuality> {
    let en = enumerate(d, Parity::Even, ENUMERATION_EDGE_CAP)?;
    let f = d.faces().len();
    if f > 24 {
        bail!(CapExceeded, "too many faces for spin enumeration");
    }
    let mut law = vec![0.0; en.configs.len()];
    let mut hits = vec![0u32; en.configs.len()];
    let mut lw = Vec::with_capacity(1 << f);
    let mut idxs = Vec::with_capacity(1 << f);
    for s in 0u64..1 << f {
        let spins: Vec<i8> = (0..f).map(|i| if s >> i & 1 == 1 { -1 } else { 1 }).collect();
        let walls = interfaces_of_spins(d, &spins);
        let bits = en.domain_edges.iter().enumerate().fold(0u64, |m, (i, &e)| if walls[e as usize] { m | 1 << i } else { m });
        let o = bits.count_ones() as f64;
        let Some(idx) = en.index_of(bits) else {
            bail!(IdentityViolation, "domain walls of face spins {s:#x} are not a loop configuration");
        };
        // e^{β Σ σσ} ∝ e^{−2β·#disagreeing pairs}
        lw.push(-2.0 * beta * o);
        idxs.push(idx);
        hits[idx] += 1;
    }
    for (p, idx) in normalize_log(&lw).into_iter().zip(idxs) {
        law[idx] += p;
    }
    let loop_law = en.probabilities(1.0, Fugacity::Finite((-2.0 * beta).exp()));
    let tv = law.iter().zip(&loop_law).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
    Ok(InterfaceDuality { interface_law: law, loop_law, tv_distance: tv, bijective: hits.iter().all(|&h| h == 1) })
}

/// Exact check of Pr(A ⊂ ω) ≤ n^{L(A)} x^{o(A)} for every A ∈ LoopConf(H),
/// through the loop-removal map ω ↦ ω ∖ A. Returns the worst ratio
/// Pr(A ⊂ ω)/(n^{L(A)}x^{o(A)}) and the map-counting report attaining it.
pub fn loop_removal_check(d: &HexDomain, n: f64, x: f64) -> Result<(f64, MapCountingReport)> {
    let ex = exact_loop(d, n, Fugacity::Finite(x))?;
    let probs = ex.table.probabilities();
    let all: Vec<usize> = (0..probs.len()).collect();
    let mut worst: Option<(f64, MapCountingReport)> = None;
    for a in &ex.enumeration.configs {
        if a.mask == 0 {
            continue;
        }
        let bound = n.powi(a.loops as i32) * x.powi(a.o as i32);
        let e: Vec<usize> = ex.enumeration.configs.iter().enumerate().filter(|(_, c)| c.mask & a.mask == a.mask).map(|(i, _)| i).collect();
        let en = &ex.enumeration;
        let rep = map_counting_check(&probs, &e, &all, |w| en.index_of(en.configs[w].mask ^ a.mask).unwrap_or(usize::MAX), 1.0 / bound, 1.0);
        if !rep.hypotheses_hold || !rep.conclusion_holds {
            bail!(IdentityViolation, "loop-removal inequality fails for A = {:#x}: {:?}", a.mask, rep);
        }
        let ratio = rep.pr_e / bound;
        if worst.as_ref().is_none_or(|w| ratio > w.0) {
            worst = Some((ratio, rep));
        }
    }
    worst.ok_or_else(|| crate::Error::InvalidArgument("domain has no non-empty loop configuration".into()))
}

// ---------------------------------------------------------------------------
// Inequalities at oracle scale
// ---------------------------------------------------------------------------

/// Griffiths I/II for the Ising model: min over A of E(Π_A σ), and min over
/// x, y, z, w of Cov(σ_xσ_y, σ_zσ_w).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriffithsReport {
    pub min_moment: f64,
    pub min_covariance: f64,
}

pub fn griffiths_ising(g: &Graph, couplings: &[f64]) -> Result<GriffithsReport> {
    if couplings.iter().any(|&j| j < 0.0) {
        bail!(InvalidArgument, "Griffiths inequalities need non-negative couplings");
    }
    let ex = exact_ising(g, couplings)?;
    let n = g.n;
    let min_moment = (0..1u64 << n).map(|a| ex.moment(a)).fold(f64::INFINITY, f64::min);
    let mut min_cov = f64::INFINITY;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let a = (1u64 << x) ^ (1u64 << y);
                    let b = (1u64 << z) ^ (1u64 << w);
                    let cov = ex.moment(a ^ b) - ex.moment(a) * ex.moment(b);
                    min_cov = min_cov.min(cov);
                }
            }
        }
    }
    Ok(GriffithsReport { min_moment, min_covariance: min_cov })
}

/// Griffiths II for n = 2 by clock quadrature: min over pairs of
/// E[cos·cos] − E[cos]E[cos] (pairs with x = y give a zero covariance).
pub fn griffiths_xy(g: &Graph, couplings: &[f64], m0: usize, tol: f64) -> Result<(f64, XyExact)> {
    if couplings.iter().any(|&j| j < 0.0) {
        bail!(InvalidArgument, "Griffiths inequalities need non-negative couplings");
    }
    let ex = exact_xy_couplings(g, couplings, m0, tol)?;
    let q = &ex.fine;
    let mut min_cov = 0.0f64;
    for (i, &(x, y)) in q.pairs.iter().enumerate() {
        for (j, &(z, w)) in q.pairs.iter().enumerate() {
            min_cov = min_cov.min(q.pair_products[i][j] - q.rho[x][y] * q.rho[z][w]);
        }
    }
    Ok((min_cov, ex))
}

/// Minimum over exponent choices k, ℓ ∈ {0,…,max_power}^{pairs} of
/// ∫∫ Π (⟨σ_i,σ_j⟩ − ⟨σ′_i,σ′_j⟩)^k (⟨σ_i,σ_j⟩ + ⟨σ′_i,σ′_j⟩)^ℓ dσ dσ′
/// for N spins. n = 1 is summed exactly; for n = 2 the M-point clock rule
/// with M > 2·Σ(k+ℓ) integrates the trigonometric polynomial exactly.
pub fn ginibre_minimum(n: usize, n_spins: usize, max_power: u32) -> Result<f64> {
    if n_spins < 2 || n_spins > 4 {
        bail!(InvalidArgument, "Ginibre check supports 2 ≤ N ≤ 4");
    }
    let pairs: Vec<(usize, usize)> = (0..n_spins).flat_map(|x| (x + 1..n_spins).map(move |y| (x, y))).collect();
    let np = pairs.len();
    // base values (a_p, b_p) = (r_p − r′_p, r_p + r′_p) at every quadrature node
    let mut nodes: Vec<Vec<(f64, f64)>> = Vec::new();
    match n {
        1 => {
            for s in 0u64..1 << (2 * n_spins) {
                let sg = |i: usize| if s >> i & 1 == 1 { -1.0 } else { 1.0 };
                nodes.push(
                    pairs
                        .iter()
                        .map(|&(i, j)| {
                            let r = sg(i) * sg(j);
                            let rp = sg(n_spins + i) * sg(n_spins + j);
                            (r - rp, r + rp)
                        })
                        .collect(),
                );
            }
        }
        2 => {
            let degree = 2 * max_power as usize * np;
            let m = (degree + 1).next_power_of_two().max(8);
            let free = 2 * (n_spins - 1);
            if (m as f64).powi(free as i32) > QUADRATURE_STATE_CAP {
                bail!(CapExceeded, "Ginibre quadrature too large");
            }
            let c: Vec<f64> = (0..m).map(|k| (2.0 * std::f64::consts::PI * k as f64 / m as f64).cos()).collect();
            for idx in 0..m.pow(free as u32) {
                let mut r = idx;
                let mut th = vec![0usize; 2 * n_spins];
                for (t, slot) in th.iter_mut().enumerate() {
                    if t == 0 || t == n_spins {
                        continue;
                    }
                    *slot = r % m;
                    r /= m;
                }
                nodes.push(
                    pairs
                        .iter()
                        .map(|&(i, j)| {
                            let a = c[(th[i] + m - th[j]) % m];
                            let b = c[(th[n_spins + i] + m - th[n_spins + j]) % m];
                            (a - b, a + b)
                        })
                        .collect(),
                );
            }
        }
        _ => bail!(InvalidArgument, "Ginibre's inequality is checked for n ∈ {{1,2}}"),
    }
    let base = max_power as usize + 1;
    let combos = base.pow(2 * np as u32);
    let min = (0..combos)
        .into_par_iter()
        .map(|code| {
            let mut r = code;
            let mut ks = vec![0i32; 2 * np];
            for k in ks.iter_mut() {
                *k = (r % base) as i32;
                r /= base;
            }
            let s: f64 = nodes
                .iter()
                .map(|node| node.iter().enumerate().map(|(p, &(a, b))| a.powi(ks[p]) * b.powi(ks[np + p])).product::<f64>())
                .sum();
            s / nodes.len() as f64
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(min)
}

/// Peierls bound Pr(γ is an interface) ≤ e^{−2β|γ|} checked for every
/// contour γ = ∂A (A, Aᶜ connected) of a small graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeierlsReport {
    pub contours: usize,
    /// max over γ of Pr(all edges of γ disagree) · e^{2β|γ|}.
    pub max_ratio: f64,
    pub violations: usize,
}

pub fn peierls_check(g: &Graph, beta: f64) -> Result<PeierlsReport> {
    if g.edges.len() > 64 || g.n > 20 {
        bail!(CapExceeded, "Peierls enumeration limited to 20 vertices and 64 edges");
    }
    let ex = exact_ising(g, &vec![beta; g.edges.len()])?;
    let probs = ex.table.probabilities();
    // aggregate the Boltzmann measure by disagreement set
    let mut by_d: HashMap<u64, f64> = HashMap::new();
    for (s, p) in probs.iter().enumerate() {
        let d = g.edges.iter().enumerate().fold(0u64, |m, (i, &(u, v))| if (s >> u ^ s >> v) & 1 == 1 { m | 1 << i } else { m });
        *by_d.entry(d).or_default() += p;
    }
    let by_d: Vec<(u64, f64)> = by_d.into_iter().collect();
    let adj = g.adjacency();
    let connected = |set: u64| -> bool {
        let Some(start) = (0..g.n).find(|&v| set >> v & 1 == 1) else { return false };
        let mut seen = 1u64 << start;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if set >> w & 1 == 1 && seen >> w & 1 == 0 {
                    seen |= 1 << w;
                    stack.push(w as usize);
                }
            }
        }
        seen == set
    };
    let full = (1u64 << g.n) - 1;
    let mut contours: Vec<u64> = (0..1u64 << (g.n - 1))
        .map(|a| a << 1 | 1)
        .filter(|&a| a != full && connected(a) && connected(full ^ a))
        .map(|a| g.edges.iter().enumerate().fold(0u64, |m, (i, &(u, v))| if (a >> u ^ a >> v) & 1 == 1 { m | 1 << i } else { m }))
        .collect();
    contours.sort_unstable();
    contours.dedup();
    let ratios: Vec<f64> = contours
        .par_iter()
        .map(|&gamma| {
            let pr: f64 = by_d.iter().filter(|(d, _)| d & gamma == gamma).map(|(_, p)| p).sum();
            pr * (2.0 * beta * gamma.count_ones() as f64).exp()
        })
        .collect();
    Ok(PeierlsReport {
        contours: contours.len(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        violations: ratios.iter().filter(|&&r| r > 1.0 + 1e-12).count(),
    })
}

/// Exact Z(τ)/Z(0) = E[W(σ+τ)/W(σ)] for the n = 1 model on a torus.
pub fn gaussian_domination_exact(lat: &TorusLattice, beta: f64, tau: &TauField) -> Result<f64> {
    if tau.n != 1 || tau.values.len() != lat.len() {
        bail!(InvalidArgument, "exact Gaussian domination is enumerated for n = 1");
    }
    let ex = exact_ising_torus(lat, beta)?;
    let n = lat.len();
    let probs = ex.table.probabilities();
    Ok(probs
        .par_iter()
        .enumerate()
        .map(|(s, p)| {
            let cfg = SpinConfig::from_values(1, (0..n).map(|v| ising_spin(s as u64, v)).collect()).expect("unit spins");
            p * gaussian_domination_ratio(&cfg, lat, beta, tau)
        })
        .sum())
}

// ---------------------------------------------------------------------------
// Content-hashed result cache
// ---------------------------------------------------------------------------

/// Directory cache of JSON oracle results keyed by the SHA-256 of the
/// serialised key (model, parameters, graph).
#[derive(Clone, Debug)]
pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<OracleCache> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(OracleCache { dir: dir.as_ref().to_path_buf() })
    }
    pub fn key<K: Serialize>(key: &K) -> Result<String> {
        let bytes = serde_json::to_vec(key)?;
        Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
    }
    pub fn path_for<K: Serialize>(&self, key: &K) -> Result<PathBuf> {
        Ok(self.dir.join(format!("{}.json", Self::key(key)?)))
    }
    /// Returns the cached value for `key`, computing and storing it if absent.
    pub fn get_or_compute<K, T, F>(&self, key: &K, compute: F) -> Result<T>
    where
        K: Serialize,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let path = self.path_for(key)?;
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok(v);
            }
        }
        let v = compute()?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_vec_pretty(&v)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(v)
    }
}
