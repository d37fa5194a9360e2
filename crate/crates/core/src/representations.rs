//! Exact representations and dualities: the Edwards–Sokal / Fortuin–Kasteleyn
//! coupling, Fourier weights and the flow↔height bijection on planar graphs,
//! Perron–Frobenius spin representations of the loop model, the discrete
//! Gaussian free field, and the hard-hexagon model.

use crate::error::{bail, Result};
use crate::lattice::{Hex, HexDomain, TorusLattice, HEX_DIRS, NONE};
use crate::loop_core::{EdgeMask, LoopConfig};
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

// ---------------------------------------------------------------------------
// Finite graphs and union-find
// ---------------------------------------------------------------------------

/// A finite simple (multi-edges allowed) undirected graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(u32, u32)>) -> Result<Graph> {
        if edges.iter().any(|&(u, v)| u as usize >= n || v as usize >= n || u == v) {
            bail!(InvalidArgument, "edge endpoint out of range or self-loop");
        }
        Ok(Graph { n, edges })
    }
    pub fn from_torus(lat: &TorusLattice) -> Graph {
        Graph { n: lat.len(), edges: lat.edges().iter().map(|&[u, v]| (u, v)).collect() }
    }
    pub fn cycle(m: usize) -> Graph {
        Graph { n: m, edges: (0..m).map(|i| (i as u32, ((i + 1) % m) as u32)).collect() }
    }
    pub fn path(m: usize) -> Graph {
        Graph { n: m, edges: (1..m).map(|i| ((i - 1) as u32, i as u32)).collect() }
    }
    /// Complete graph K_m.
    pub fn complete(m: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                edges.push((i as u32, j as u32));
            }
        }
        Graph { n: m, edges }
    }
    /// Star graph with centre 0 and leaves 1..=q.
    pub fn star(q: usize) -> Graph {
        Graph { n: q + 1, edges: (1..=q).map(|i| (0, i as u32)).collect() }
    }
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut a = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            a[u as usize].push(v);
            a[v as usize].push(u);
        }
        a
    }
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut uf = UnionFind::new(self.n);
        for &(u, v) in &self.edges {
            uf.union(u as usize, v as usize);
        }
        uf.components() == 1
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    count: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n], count: n }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        self.count -= 1;
        true
    }
    pub fn components(&self) -> usize {
        self.count
    }
}

// ---------------------------------------------------------------------------
// Edwards–Sokal / FK
// ---------------------------------------------------------------------------

/// p = 1 − e^{−2β}.
pub fn fk_p(beta: f64) -> f64 {
    1.0 - (-2.0 * beta).exp()
}

/// An FK edge configuration with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkState {
    pub open: Vec<bool>,
    pub n_clusters: usize,
    pub q: f64,
    pub p: f64,
}

impl FkState {
    pub fn new(g: &Graph, open: Vec<bool>, q: f64, p: f64) -> Result<FkState> {
        if open.len() != g.edges.len() {
            bail!(InvalidArgument, "edge mask length mismatch");
        }
        let n_clusters = count_clusters(g, &open);
        Ok(FkState { open, n_clusters, q, p })
    }
    /// ln(q^{N(E)} p^{|E|} (1−p)^{|E(G)∖E|}).
    pub fn log_weight(&self) -> f64 {
        let k = self.open.iter().filter(|&&b| b).count() as f64;
        let m = self.open.len() as f64;
        let lp = if k > 0.0 { k * self.p.ln() } else { 0.0 };
        let lq = if m - k > 0.0 { (m - k) * (1.0 - self.p).ln() } else { 0.0 };
        self.n_clusters as f64 * self.q.ln() + lp + lq
    }
    /// Bitmask of open edges (graphs with ≤ 64 edges).
    pub fn mask(&self) -> u64 {
        self.open.iter().enumerate().fold(0u64, |m, (i, &b)| if b { m | 1 << i } else { m })
    }
}

/// N(E): number of connected components of (V(G), E).
pub fn count_clusters(g: &Graph, open: &[bool]) -> usize {
    let mut uf = UnionFind::new(g.n);
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        if open[i] {
            uf.union(u as usize, v as usize);
        }
    }
    uf.components()
}

/// Whether x and y are connected by open edges.
pub fn fk_connected(g: &Graph, open: &[bool], x: usize, y: usize) -> bool {
    let mut uf = UnionFind::new(g.n);
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        if open[i] {
            uf.union(u as usize, v as usize);
        }
    }
    uf.find(x) == uf.find(y)
}

/// One step of the Edwards–Sokal coupling chain for the Ising model (q = 2):
/// given spins, open each edge with agreeing endpoints with probability
/// p = 1 − e^{−2β}; then give every cluster of the open subgraph a fresh
/// uniform sign. Returns the intermediate FK state; `spins` is updated.
pub fn edwards_sokal_step(g: &Graph, beta: f64, spins: &mut [i8], rng: &mut Rng) -> Result<FkState> {
    if !(beta >= 0.0) {
        bail!(InvalidArgument, "β must be non-negative");
    }
    if spins.len() != g.n {
        bail!(InvalidArgument, "spin vector length mismatch");
    }
    let p = fk_p(beta);
    let open: Vec<bool> = g.edges.iter().map(|&(u, v)| spins[u as usize] == spins[v as usize] && rng.gen::<f64>() < p).collect();
    let mut uf = UnionFind::new(g.n);
    for (i, &(u, v)) in g.edges.iter().enumerate() {
        if open[i] {
            uf.union(u as usize, v as usize);
        }
    }
    let mut sign = vec![0i8; g.n];
    for v in 0..g.n {
        let r = uf.find(v);
        if sign[r] == 0 {
            sign[r] = if rng.gen::<bool>() { 1 } else { -1 };
        }
        spins[v] = sign[r];
    }
    let n_clusters = uf.components();
    Ok(FkState { open, n_clusters, q: 2.0, p })
}

// ---------------------------------------------------------------------------
// Fourier weights
// ---------------------------------------------------------------------------

/// Models whose edge weight g has a closed-form Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum FourierModel {
    /// g(t) = exp(β cos 2πt).
    Xy { beta: f64 },
    /// g(t) = Σ_k exp(−β (t+k)²/2).
    Villain { beta: f64 },
}

impl FourierModel {
    /// The edge weight g(t) (1-periodic).
    pub fn g(&self, t: f64) -> f64 {
        match *self {
            FourierModel::Xy { beta } => (beta * (2.0 * std::f64::consts::PI * t).cos()).exp(),
            FourierModel::Villain { beta } => {
                let t0 = t - t.round();
                (-40..=40).map(|k| (-beta * (t0 + k as f64).powi(2) / 2.0).exp()).sum()
            }
        }
    }
}

/// The modified Bessel function I_k(x) by its power series
/// Σ_m (x/2)^{k+2m} / (m!(m+k)!), summed to 1e−16 relative with a term cap.
pub fn bessel_i_series(k: i64, x: f64) -> Result<f64> {
    let k = k.unsigned_abs() as usize;
    if x == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    let h = x / 2.0;
    // first term (x/2)^k / k!
    let mut term = (k as f64 * h.ln() - statrs::function::factorial::ln_factorial(k as u64)).exp();
    let mut sum = term;
    for m in 1..2000usize {
        term *= h * h / (m as f64 * (m + k) as f64);
        sum += term;
        if term <= 1e-16 * sum && m as f64 > h {
            return Ok(sum);
        }
    }
    bail!(Numerical, "Bessel series for I_{k}({x}) did not converge within 2000 terms (last term {term:e}, sum {sum:e})")
}

/// ĝ(k) for the XY or Villain model.
pub fn fourier_weight(model: FourierModel, k: i64) -> Result<f64> {
    match model {
        FourierModel::Xy { beta } => {
            if !(beta > 0.0) {
                bail!(InvalidArgument, "β must be positive");
            }
            bessel_i_series(k, beta)
        }
        FourierModel::Villain { beta } => {
            if !(beta > 0.0) {
                bail!(InvalidArgument, "β must be positive");
            }
            let pi = std::f64::consts::PI;
            Ok((2.0 * pi / beta).sqrt() * (-2.0 * pi * pi * (k * k) as f64 / beta).exp())
        }
    }
}

// ---------------------------------------------------------------------------
// Planar graphs, flows and height functions
// ---------------------------------------------------------------------------

/// A planar graph with a fixed embedding: every (directed u→v) edge records
/// the face on its left and on its right; face `outer` is the unbounded one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanarGraph {
    pub n_vertices: usize,
    pub edges: Vec<(u32, u32)>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub n_faces: usize,
    pub outer: u32,
}

impl PlanarGraph {
    /// Two vertices joined by one edge (a single face).
    pub fn single_edge() -> PlanarGraph {
        PlanarGraph { n_vertices: 2, edges: vec![(0, 1)], left: vec![0], right: vec![0], n_faces: 1, outer: 0 }
    }
    /// The m-cycle drawn counterclockwise: inner face 1 on the left of each edge.
    pub fn cycle(m: usize) -> PlanarGraph {
        PlanarGraph {
            n_vertices: m,
            edges: (0..m).map(|i| (i as u32, ((i + 1) % m) as u32)).collect(),
            left: vec![1; m],
            right: vec![0; m],
            n_faces: 2,
            outer: 0,
        }
    }
    /// The w×h grid graph (vertices (i,j), 0 ≤ i < w, 0 ≤ j < h); inner face
    /// (i,j) is the unit square with lower-left corner (i,j), index 1 + i + j(w−1).
    pub fn grid(w: usize, h: usize) -> PlanarGraph {
        let vid = |i: usize, j: usize| (i + j * w) as u32;
        let fid = |i: isize, j: isize| -> u32 {
            if i < 0 || j < 0 || i >= w as isize - 1 || j >= h as isize - 1 {
                0
            } else {
                1 + i as u32 + j as u32 * (w as u32 - 1)
            }
        };
        let (mut edges, mut left, mut right) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..h {
            for i in 0..w {
                if i + 1 < w {
                    // horizontal edge pointing east: left face above, right face below
                    edges.push((vid(i, j), vid(i + 1, j)));
                    left.push(fid(i as isize, j as isize));
                    right.push(fid(i as isize, j as isize - 1));
                }
                if j + 1 < h {
                    // vertical edge pointing north: left face to the west
                    edges.push((vid(i, j), vid(i, j + 1)));
                    left.push(fid(i as isize - 1, j as isize));
                    right.push(fid(i as isize, j as isize));
                }
            }
        }
        PlanarGraph { n_vertices: w * h, edges, left, right, n_faces: 1 + (w - 1) * (h - 1), outer: 0 }
    }
    /// Divergence k_u = Σ_{(u,v)} k_{(u,v)} at every vertex.
    pub fn divergence(&self, flow: &[i64]) -> Vec<i64> {
        let mut div = vec![0i64; self.n_vertices];
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            div[u as usize] += flow[i];
            div[v as usize] -= flow[i];
        }
        div
    }
    /// Graph distance (in the dual) from the outer face to the farthest face.
    pub fn dual_diameter_from_outer(&self) -> usize {
        let mut dist = vec![usize::MAX; self.n_faces];
        dist[self.outer as usize] = 0;
        let mut q = VecDeque::from([self.outer]);
        while let Some(f) = q.pop_front() {
            for i in 0..self.edges.len() {
                for (a, b) in [(self.left[i], self.right[i]), (self.right[i], self.left[i])] {
                    if a == f && dist[b as usize] == usize::MAX {
                        dist[b as usize] = dist[f as usize] + 1;
                        q.push_back(b);
                    }
                }
            }
        }
        dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
    }
}

/// k^f_e = f(left(e)) − f(right(e)) for the directed edge e = (u, v).
pub fn flow_from_height(g: &PlanarGraph, f: &[i64]) -> Result<Vec<i64>> {
    if f.len() != g.n_faces || f[g.outer as usize] != 0 {
        bail!(InvalidArgument, "height function must cover all faces and vanish on the outer face");
    }
    Ok((0..g.edges.len()).map(|i| f[g.left[i] as usize] - f[g.right[i] as usize]).collect())
}

/// Inverse of [`flow_from_height`]: integrates the flow along dual paths from
/// the outer face. Errors if the input is not a flow.
pub fn height_from_flow(g: &PlanarGraph, flow: &[i64]) -> Result<Vec<i64>> {
    if flow.len() != g.edges.len() {
        bail!(InvalidArgument, "flow length mismatch");
    }
    if let Some((v, d)) = g.divergence(flow).iter().enumerate().find(|(_, &d)| d != 0) {
        bail!(InvalidArgument, "input violates the flow condition at vertex {v} (divergence {d})");
    }
    let mut f: Vec<Option<i64>> = vec![None; g.n_faces];
    f[g.outer as usize] = Some(0);
    let mut q = VecDeque::from([g.outer]);
    while let Some(face) = q.pop_front() {
        let hf = f[face as usize].expect("visited");
        for i in 0..g.edges.len() {
            let (l, r) = (g.left[i], g.right[i]);
            let next = if l == face {
                Some((r, hf - flow[i]))
            } else if r == face {
                Some((l, hf + flow[i]))
            } else {
                None
            };
            if let Some((nf, val)) = next {
                match f[nf as usize] {
                    None => {
                        f[nf as usize] = Some(val);
                        q.push_back(nf);
                    }
                    Some(existing) if existing != val => {
                        bail!(InvalidArgument, "dual cycle sum is non-zero: the input is not a flow");
                    }
                    _ => {}
                }
            }
        }
    }
    f.into_iter().map(|x| x.ok_or_else(|| crate::Error::InvalidArgument("dual graph is disconnected".into()))).collect()
}

/// Result of the truncated flow (height) partition function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPartition {
    pub z: f64,
    /// The same sum with truncation K − 1.
    pub z_previous: f64,
    /// |z − z_previous| / z: estimate of the truncation remainder.
    pub truncation_estimate: f64,
    pub configurations: u64,
}

/// Z = Σ_{flows k} Π_e ĝ(k_e), enumerated in height coordinates with
/// |f(face)| ≤ K on every inner face.
pub fn flow_partition<W>(g: &PlanarGraph, weight: W, k_max: i64) -> Result<FlowPartition>
where
    W: Fn(i64) -> Result<f64>,
{
    let inner: Vec<usize> = (0..g.n_faces).filter(|&f| f != g.outer as usize).collect();
    let states = (2 * k_max + 1) as f64;
    if states.powi(inner.len() as i32) > 5e7 {
        bail!(InvalidArgument, "graph too large for height enumeration ({} inner faces, K = {k_max})", inner.len());
    }
    let span = 2 * k_max.unsigned_abs() as usize + 1;
    let w: Vec<f64> = (-2 * k_max..=2 * k_max).map(&weight).collect::<Result<_>>()?;
    let wt = |d: i64| w[(d + 2 * k_max) as usize];
    let mut f = vec![0i64; g.n_faces];
    let (mut z, mut z_prev, mut count) = (0.0, 0.0, 0u64);
    let total = span.pow(inner.len() as u32);
    for idx in 0..total {
        let mut r = idx;
        let mut inside_prev = true;
        for &face in &inner {
            let h = (r % span) as i64 - k_max;
            r /= span;
            f[face] = h;
            if h.abs() == k_max {
                inside_prev = false;
            }
        }
        let mut prod = 1.0;
        for i in 0..g.edges.len() {
            prod *= wt(f[g.left[i] as usize] - f[g.right[i] as usize]);
        }
        z += prod;
        if inside_prev || k_max == 0 {
            z_prev += prod;
        }
        count += 1;
    }
    Ok(FlowPartition { z, z_previous: z_prev, truncation_estimate: ((z - z_prev) / z).abs(), configurations: count })
}

/// Direct angle quadrature of Z = ∫_{[0,1)^V} Π_e g(θ_u − θ_v) dθ with an
/// M-point uniform rule (exact for trigonometric polynomials of degree < M),
/// M doubled until the relative change is below `tol`.
pub fn angle_quadrature_partition(g: &PlanarGraph, model: FourierModel, tol: f64) -> Result<(f64, usize)> {
    let n = g.n_vertices;
    let mut m = 8usize;
    let mut prev = f64::NAN;
    loop {
        if (m as f64).powi(n as i32) > 2e8 {
            bail!(Numerical, "angle quadrature did not converge before the grid cap (M = {m})");
        }
        let table: Vec<f64> = (0..m).map(|d| model.g(d as f64 / m as f64)).collect();
        let total = m.pow(n as u32);
        let mut z = 0.0;
        let mut theta = vec![0usize; n];
        for idx in 0..total {
            let mut r = idx;
            for t in theta.iter_mut() {
                *t = r % m;
                r /= m;
            }
            let mut prod = 1.0;
            for &(u, v) in &g.edges {
                prod *= table[(theta[u as usize] + m - theta[v as usize]) % m];
            }
            z += prod;
        }
        z /= total as f64;
        if (z - prev).abs() <= tol * z.abs() {
            return Ok((z, m));
        }
        prev = z;
        m *= 2;
    }
}

// ---------------------------------------------------------------------------
// Perron–Frobenius spin representations of the loop model
// ---------------------------------------------------------------------------

/// Spin representation built from a graph G on the spin set S: h_a = 1 and
/// h_{a,b} = x (ψ_a/ψ_b)^{1/6} for adjacent a, b (0 otherwise).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinRepresentation {
    pub graph: Graph,
    pub psi: Vec<f64>,
    pub lambda: f64,
    pub x: f64,
    adjacent: Vec<Vec<bool>>,
}

/// Computes the Perron–Frobenius eigenpair of the adjacency matrix by power
/// iteration on A + I (which removes the ±λ degeneracy of bipartite graphs).
pub fn perron_eigen(g: &Graph) -> Result<(f64, Vec<f64>)> {
    if g.n == 0 || !g.is_connected() {
        bail!(InvalidArgument, "the spin graph must be non-empty and connected");
    }
    if g.edges.is_empty() {
        return Ok((0.0, vec![1.0]));
    }
    let adj = g.adjacency();
    let mut psi = vec![1.0; g.n];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let mut next: Vec<f64> = (0..g.n).map(|a| psi[a] + adj[a].iter().map(|&b| psi[b as usize]).sum::<f64>()).collect();
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        next.iter_mut().for_each(|v| *v /= norm);
        let apsi: Vec<f64> = (0..g.n).map(|a| adj[a].iter().map(|&b| next[b as usize]).sum()).collect();
        lambda = apsi.iter().zip(&next).map(|(a, b)| a * b).sum::<f64>();
        let resid = apsi.iter().zip(&next).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        psi = next;
        if resid < 1e-13 {
            let mx = psi.iter().cloned().fold(f64::MIN, f64::max);
            // normalize so that the smallest entry is 1 (matches closed forms)
            let mn = psi.iter().cloned().fold(f64::MAX, f64::min);
            let _ = mx;
            return Ok((lambda, psi.iter().map(|v| v / mn).collect()));
        }
    }
    bail!(Numerical, "power iteration did not reach residual 1e-13 (λ ≈ {lambda})")
}

impl SpinRepresentation {
    pub fn new(graph: Graph, x: f64) -> Result<SpinRepresentation> {
        if !(x > 0.0) {
            bail!(InvalidArgument, "x must be positive");
        }
        let (lambda, psi) = perron_eigen(&graph)?;
        let mut adjacent = vec![vec![false; graph.n]; graph.n];
        for &(a, b) in &graph.edges {
            adjacent[a as usize][b as usize] = true;
            adjacent[b as usize][a as usize] = true;
        }
        Ok(SpinRepresentation { graph, psi, lambda, x, adjacent })
    }
    /// The dilute Potts (star graph) representation with q leaves (n = √q).
    pub fn star(q: usize, x: f64) -> Result<SpinRepresentation> {
        SpinRepresentation::new(Graph::star(q), x)
    }
    /// The two-point tree T_1 = {+,−} (n = 1, the Ising interface map).
    pub fn ising(x: f64) -> Result<SpinRepresentation> {
        SpinRepresentation::new(Graph::path(2), x)
    }
    pub fn n_spins(&self) -> usize {
        self.graph.n
    }
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacent[a][b]
    }
    /// h_{a,b} = h(a, b, b).
    pub fn h(&self, a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else if self.adjacent[a][b] {
            self.x * (self.psi[a] / self.psi[b]).powf(1.0 / 6.0)
        } else {
            0.0
        }
    }
    /// Triangle weight h(a, b, c) (0 when three distinct values occur).
    pub fn triangle(&self, a: usize, b: usize, c: usize) -> f64 {
        if a == b && b == c {
            1.0
        } else if a == b {
            self.h(c, a)
        } else if a == c {
            self.h(b, a)
        } else if b == c {
            self.h(a, b)
        } else {
            0.0
        }
    }
    /// Σ_b h_{b,a}^m h_{a,b}^{m′}: contribution of one loop with exterior value a.
    pub fn single_loop_sum(&self, a: usize, m: i32, m_prime: i32) -> f64 {
        (0..self.n_spins()).filter(|&b| b != a).map(|b| self.h(b, a).powi(m) * self.h(a, b).powi(m_prime)).sum()
    }
    /// Weight of a face assignment φ (window hexagon ids → spin, non-faces
    /// fixed to `s0`): the product of triangle weights over V(H).
    pub fn weight(&self, d: &HexDomain, phi: &[u32], s0: u32) -> f64 {
        let val = |h: u32| if d.is_face(h) { phi[h as usize] as usize } else { s0 as usize };
        let mut w = 1.0;
        for &v in d.domain_vertices() {
            let hx = d.vertex(v).hexes();
            let ids: Vec<u32> = hx.iter().map(|h| d.hex_id(*h).expect("window hexagon")).collect();
            w *= self.triangle(val(ids[0]), val(ids[1]), val(ids[2]));
            if w == 0.0 {
                return 0.0;
            }
        }
        w
    }
}

/// Domain walls ω_φ: edges of H separating hexagons with different values
/// (non-faces carry the boundary value s0).
pub fn spins_to_loops(d: &HexDomain, phi: &[u32], s0: u32) -> LoopConfig {
    let val = |h: u32| if d.is_face(h) { phi[h as usize] } else { s0 };
    let mut mask: EdgeMask = vec![false; d.n_window_edges()];
    for &e in d.domain_edges() {
        let [a, b] = d.edge_hexes(e);
        mask[e as usize] = val(a) != val(b);
    }
    LoopConfig::from_mask(d, &mask)
}

/// Enumerates every face assignment of positive weight (backtracking over the
/// faces, pruning by the Lipschitz condition); returns (φ, weight) pairs.
pub fn enumerate_spin_representation(d: &HexDomain, rep: &SpinRepresentation, s0: u32, cap: usize) -> Result<Vec<(Vec<u32>, f64)>> {
    let faces: Vec<u32> = d.faces().to_vec();
    let s = rep.n_spins() as u32;
    if (s as f64).powi(faces.len() as i32) > 1e9 {
        bail!(CapExceeded, "too many face assignments to enumerate");
    }
    let mut phi = vec![s0; d.n_window_hexes()];
    let mut out = Vec::new();
    fn rec(
        i: usize,
        faces: &[u32],
        d: &HexDomain,
        rep: &SpinRepresentation,
        s0: u32,
        s: u32,
        phi: &mut Vec<u32>,
        out: &mut Vec<(Vec<u32>, f64)>,
        cap: usize,
    ) -> Result<()> {
        if i == faces.len() {
            let w = rep.weight(d, phi, s0);
            if w > 0.0 {
                if out.len() >= cap {
                    bail!(CapExceeded, "more than {cap} configurations");
                }
                out.push((phi.clone(), w));
            }
            return Ok(());
        }
        let f = faces[i];
        for a in 0..s {
            // Lipschitz pruning against already assigned or boundary neighbours
            let ok = d.hex_nbrs(f).iter().all(|&g| {
                if g == NONE {
                    return true;
                }
                let known = if d.is_face(g) { faces[..i].contains(&g) } else { true };
                if !known {
                    return true;
                }
                let b = if d.is_face(g) { phi[g as usize] } else { s0 };
                a == b || rep.adjacent(a as usize, b as usize)
            });
            if ok {
                phi[f as usize] = a;
                rec(i + 1, faces, d, rep, s0, s, phi, out, cap)?;
            }
        }
        phi[f as usize] = s0;
        Ok(())
    }
    rec(0, &faces, d, rep, s0, s, &mut phi, &mut out, cap)?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Discrete Gaussian free field
// ---------------------------------------------------------------------------

/// Exact sampler of the DGFF with density ∝ exp(−(β/2)Σ_{u∼v}(h_u − h_v)²) on
/// a two-dimensional torus, pinned to 0 at the vertex with digits (0,0).
pub struct Dgff {
    lat: TorusLattice,
    beta: f64,
    scale: Vec<f64>,
    fft: crate::spin_observables::TorusFft,
    variance: Vec<f64>,
}

impl Dgff {
    pub fn new(lat: &TorusLattice, beta: f64) -> Result<Dgff> {
        if lat.d() != 2 || lat.l() < 2 {
            bail!(InvalidArgument, "the DGFF sampler runs on two-dimensional tori with L ≥ 2");
        }
        if !(beta > 0.0) {
            bail!(InvalidArgument, "β must be positive");
        }
        let vol = lat.len();
        let lam: Vec<f64> = (0..vol)
            .map(|i| crate::spin_observables::laplacian_eigenvalue(&crate::spin_observables::mode_wavevector(lat, i)))
            .collect();
        let scale: Vec<f64> = lam.iter().enumerate().map(|(i, &l)| if i == 0 { 0.0 } else { 1.0 / (beta * l).sqrt() }).collect();
        // Var(h_x − h_0) = (2/(β|Λ|)) Σ_{k≠0} (1 − cos⟨k,x⟩)/λ_k
        let mut variance = vec![0.0; vol];
        for (x, var) in variance.iter_mut().enumerate() {
            let dx: Vec<f64> = lat.digits(x).iter().map(|&v| v as f64).collect();
            let mut s = 0.0;
            for k in 1..vol {
                let kv = crate::spin_observables::mode_wavevector(lat, k);
                let phase: f64 = kv.iter().zip(&dx).map(|(a, b)| a * b).sum();
                s += (1.0 - phase.cos()) / lam[k];
            }
            *var = 2.0 * s / (beta * vol as f64);
        }
        Ok(Dgff { lat: lat.clone(), beta, scale, fft: crate::spin_observables::TorusFft::new(lat), variance })
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    /// Exact Var(h_x) of the pinned field.
    pub fn variance(&self, x: usize) -> f64 {
        self.variance[x]
    }
    /// One exact sample (pinned at site 0).
    pub fn sample(&mut self, rng: &mut Rng) -> Vec<f64> {
        let vol = self.lat.len();
        let mut data: Vec<Complex64> = (0..vol).map(|_| Complex64::new(rng.sample(StandardNormal), 0.0)).collect();
        self.fft.transform(&mut data, false);
        for (z, s) in data.iter_mut().zip(&self.scale) {
            *z *= s;
        }
        self.fft.transform(&mut data, true);
        let h0 = data[0].re;
        data.iter().map(|z| (z.re - h0) / vol as f64).collect()
    }
}

// ---------------------------------------------------------------------------
// Hard hexagons
// ---------------------------------------------------------------------------

/// A patch of the triangular lattice 𝕋 on which hard hexagons live.
#[derive(Clone, Debug)]
pub struct HardHexLattice {
    pub sites: Vec<Hex>,
    pub colors: Vec<u8>,
    nbrs: Vec<Vec<u32>>,
}

impl HardHexLattice {
    /// Periodic m×m rhombus spanned by the directions (1,1) and (0,2); m must
    /// be a multiple of 3 so that the 3-colouring is periodic.
    pub fn torus(m: usize) -> Result<HardHexLattice> {
        if m == 0 || m % 3 != 0 {
            bail!(InvalidArgument, "periodic patch side must be a positive multiple of 3");
        }
        let id = |i: i64, j: i64| (i.rem_euclid(m as i64) + m as i64 * j.rem_euclid(m as i64)) as u32;
        let mut sites = Vec::with_capacity(m * m);
        let mut nbrs = Vec::with_capacity(m * m);
        for j in 0..m as i64 {
            for i in 0..m as i64 {
                sites.push(Hex::new_unchecked(i as i32, (i + 2 * j) as i32));
                let dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];
                let mut nb: Vec<u32> = dirs.iter().map(|&(di, dj)| id(i + di, j + dj)).collect();
                nb.sort_unstable();
                nb.dedup();
                nbrs.push(nb);
            }
        }
        let colors = sites.iter().map(|h| h.color()).collect();
        Ok(HardHexLattice { sites, colors, nbrs })
    }
    /// Free-boundary patch on an explicit set of hexagons.
    pub fn from_hexes(hexes: &[Hex]) -> HardHexLattice {
        let index: std::collections::HashMap<Hex, u32> = hexes.iter().enumerate().map(|(i, &h)| (h, i as u32)).collect();
        let nbrs = hexes
            .iter()
            .map(|h| HEX_DIRS.iter().filter_map(|&dir| index.get(&h.offset(dir)).copied()).collect())
            .collect();
        HardHexLattice { sites: hexes.to_vec(), colors: hexes.iter().map(|h| h.color()).collect(), nbrs }
    }
    pub fn len(&self) -> usize {
        self.sites.len()
    }
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.nbrs[i]
    }
    /// Number of sites of each colour class.
    pub fn class_sizes(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for &k in &self.colors {
            c[k as usize] += 1;
        }
        c
    }
}

/// Hard-hexagon configuration (an independent set) with fugacity λ.
#[derive(Clone, Debug)]
pub struct HardHexState {
    pub occupied: Vec<bool>,
    pub lambda: f64,
    blocked: Vec<u8>,
}

impl HardHexState {
    pub fn empty(lat: &HardHexLattice, lambda: f64) -> Result<HardHexState> {
        if !(lambda > 0.0) {
            bail!(InvalidArgument, "λ must be positive");
        }
        Ok(HardHexState { occupied: vec![false; lat.len()], lambda, blocked: vec![0; lat.len()] })
    }
    /// Every site of colour class c occupied (a maximal ordered packing).
    pub fn ordered(lat: &HardHexLattice, lambda: f64, c: u8) -> Result<HardHexState> {
        let mut s = HardHexState::empty(lat, lambda)?;
        for i in 0..lat.len() {
            if lat.colors[i] == c && s.blocked[i] == 0 && !s.occupied[i] {
                s.insert(lat, i);
            }
        }
        Ok(s)
    }
    pub fn from_occupied(lat: &HardHexLattice, lambda: f64, occupied: &[bool]) -> Result<HardHexState> {
        let mut s = HardHexState::empty(lat, lambda)?;
        for (i, &o) in occupied.iter().enumerate() {
            if o {
                if s.blocked[i] > 0 || s.occupied[i] {
                    bail!(InvalidArgument, "occupied set is not independent");
                }
                s.insert(lat, i);
            }
        }
        Ok(s)
    }
    fn insert(&mut self, lat: &HardHexLattice, i: usize) {
        self.occupied[i] = true;
        for &j in lat.neighbors(i) {
            self.blocked[j as usize] += 1;
        }
    }
    fn remove(&mut self, lat: &HardHexLattice, i: usize) {
        self.occupied[i] = false;
        for &j in lat.neighbors(i) {
            self.blocked[j as usize] -= 1;
        }
    }
    /// One single-site insert/delete Metropolis update at a uniform site.
    pub fn step(&mut self, lat: &HardHexLattice, rng: &mut Rng) -> bool {
        let i = rng.gen_range(0..lat.len());
        if self.occupied[i] {
            if self.lambda >= 1.0 && rng.gen::<f64>() >= 1.0 / self.lambda {
                return false;
            }
            self.remove(lat, i);
            true
        } else if self.blocked[i] == 0 {
            if self.lambda < 1.0 && rng.gen::<f64>() >= self.lambda {
                return false;
            }
            self.insert(lat, i);
            true
        } else {
            false
        }
    }
    pub fn sweep(&mut self, lat: &HardHexLattice, rng: &mut Rng) {
        for _ in 0..lat.len() {
            self.step(lat, rng);
        }
    }
    /// Occupation fraction of each colour class.
    pub fn sublattice_densities(&self, lat: &HardHexLattice) -> [f64; 3] {
        let sizes = lat.class_sizes();
        let mut c = [0usize; 3];
        for (i, &o) in self.occupied.iter().enumerate() {
            if o {
                c[lat.colors[i] as usize] += 1;
            }
        }
        [0, 1, 2].map(|k| if sizes[k] > 0 { c[k] as f64 / sizes[k] as f64 } else { 0.0 })
    }
    /// Bitmask over sites (patches with ≤ 64 sites).
    pub fn mask(&self) -> u64 {
        self.occupied.iter().enumerate().fold(0u64, |m, (i, &b)| if b { m | 1 << i } else { m })
    }
    pub fn is_independent(&self, lat: &HardHexLattice) -> bool {
        (0..lat.len()).all(|i| !self.occupied[i] || lat.neighbors(i).iter().all(|&j| !self.occupied[j as usize]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    #[test]
    fn es_zero_beta_is_free() {
        let g = Graph::cycle(6);
        let mut r = make_rng(1, 0);
        let mut s = vec![1i8; 6];
        for _ in 0..50 {
            let fk = edwards_sokal_step(&g, 0.0, &mut s, &mut r).unwrap();
            assert!(fk.open.iter().all(|&b| !b));
            assert_eq!(fk.n_clusters, 6);
        }
        assert!(fk_p(0.3) < fk_p(0.5));
    }

    #[test]
    fn fk_cluster_count_matches_recount() {
        let g = Graph::from_torus(&TorusLattice::new(2, 2).unwrap());
        let mut r = make_rng(2, 0);
        let mut s = vec![1i8; g.n];
        for _ in 0..100 {
            let fk = edwards_sokal_step(&g, 0.6, &mut s, &mut r).unwrap();
            let recount = FkState::new(&g, fk.open.clone(), 2.0, fk.p).unwrap();
            assert_eq!(recount.n_clusters, fk.n_clusters);
            assert!(fk.log_weight().is_finite());
            // spins are constant on clusters
            for (i, &(u, v)) in g.edges.iter().enumerate() {
                if fk.open[i] {
                    assert_eq!(s[u as usize], s[v as usize]);
                }
            }
        }
    }

    #[test]
    fn bessel_series_values() {
        assert_eq!(bessel_i_series(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i_series(3, 0.0).unwrap(), 0.0);
        assert!((bessel_i_series(1, 2.0).unwrap() - 1.590636854637329).abs() < 1e-14);
        assert_eq!(bessel_i_series(2, 1.5).unwrap(), bessel_i_series(-2, 1.5).unwrap());
        let scaled = crate::stats::bessel_i_scaled(4, 3.0) * 3f64.exp();
        assert!((bessel_i_series(4, 3.0).unwrap() - scaled).abs() / scaled < 1e-13);
        let v = FourierModel::Villain { beta: 2.0 };
        let r = fourier_weight(v, 1).unwrap() / fourier_weight(v, 0).unwrap();
        assert!((r - (-std::f64::consts::PI.powi(2)).exp()).abs() < 1e-15);
    }

    #[test]
    fn flow_height_round_trips() {
        let g = PlanarGraph::grid(3, 3);
        assert_eq!(height_from_flow(&g, &vec![0; g.edges.len()]).unwrap(), vec![0; g.n_faces]);
        // unit height on one inner face = unit circulation around its boundary
        let mut f = vec![0i64; g.n_faces];
        f[1] = 1;
        let k = flow_from_height(&g, &f).unwrap();
        assert_eq!(k.iter().filter(|&&x| x != 0).count(), 4);
        assert!(g.divergence(&k).iter().all(|&x| x == 0));
        let mut r = make_rng(3, 0);
        for _ in 0..1000 {
            let mut f: Vec<i64> = (0..g.n_faces).map(|_| r.gen_range(-3..=3)).collect();
            f[0] = 0;
            let k = flow_from_height(&g, &f).unwrap();
            assert_eq!(height_from_flow(&g, &k).unwrap(), f);
        }
        let mut bad = vec![0i64; g.edges.len()];
        bad[0] = 1;
        assert!(height_from_flow(&g, &bad).is_err());
    }

    #[test]
    fn flow_partition_single_edge_and_cycle() {
        let xy = FourierModel::Xy { beta: 1.0 };
        let z = flow_partition(&PlanarGraph::single_edge(), |k| fourier_weight(xy, k), 4).unwrap();
        assert!((z.z - fourier_weight(xy, 0).unwrap()).abs() < 1e-15);
        let c4 = PlanarGraph::cycle(4);
        let zf = flow_partition(&c4, |k| fourier_weight(xy, k), 8).unwrap();
        let (zq, _) = angle_quadrature_partition(&c4, xy, 1e-12).unwrap();
        assert!((zf.z - zq).abs() < 1e-6 * zq, "{} vs {}", zf.z, zq);
        let vil = FourierModel::Villain { beta: 2.0 };
        let zv = flow_partition(&c4, |k| fourier_weight(vil, k), 8).unwrap();
        let (zvq, _) = angle_quadrature_partition(&c4, vil, 1e-12).unwrap();
        assert!((zv.z - zvq).abs() < 1e-6 * zvq, "{} vs {}", zv.z, zvq);
    }

    #[test]
    fn perron_closed_forms() {
        let star = SpinRepresentation::star(4, 0.5).unwrap();
        assert!((star.lambda - 2.0).abs() < 1e-12);
        assert!((star.psi[0] - 2.0).abs() < 1e-10 && (star.psi[1] - 1.0).abs() < 1e-10);
        let ising = SpinRepresentation::ising(0.7).unwrap();
        assert!((ising.lambda - 1.0).abs() < 1e-12);
        // single-loop identity Σ_b h_{b,a}^m h_{a,b}^{m'} = x^{|ℓ|} λ with m = m' + 6
        for rep in [&star, &ising] {
            for a in 0..rep.n_spins() {
                for mp in 0..6 {
                    let m = mp + 6;
                    let lhs = rep.single_loop_sum(a, m, mp);
                    let rhs = rep.x.powi(m + mp) * rep.lambda;
                    assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1e-300), "a={a} m'={mp}: {lhs} vs {rhs}");
                }
            }
        }
        assert!(perron_eigen(&Graph { n: 3, edges: vec![(0, 1)] }).is_err());
    }

    #[test]
    fn star_representation_pushes_forward_to_loop_measure() {
        let d = HexDomain::type0_region(&[Hex::new(0, 0).unwrap(), Hex::new(2, 0).unwrap(), Hex::new(1, 3).unwrap()]).unwrap();
        let rep = SpinRepresentation::star(4, 0.5).unwrap();
        let en = crate::loop_core::enumerate(&d, crate::loop_core::Parity::Even, 63).unwrap();
        let probs = en.probabilities(2.0, crate::loop_core::Fugacity::Finite(0.5));
        for s0 in [0u32, 1] {
            let phis = enumerate_spin_representation(&d, &rep, s0, 1_000_000).unwrap();
            let total: f64 = phis.iter().map(|p| p.1).sum();
            let mut push = vec![0.0; en.configs.len()];
            for (phi, w) in &phis {
                let wm = spins_to_loops(&d, phi, s0).to_mask(&d).unwrap();
                let bits = en.domain_edges.iter().enumerate().fold(0u64, |m, (i, &e)| if wm[e as usize] { m | 1 << i } else { m });
                let idx = en.index_of(bits).expect("domain walls form a loop configuration");
                push[idx] += w / total;
            }
            let tv: f64 = push.iter().zip(&probs).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            assert!(tv < 1e-12, "s0={s0}: tv={tv}");
        }
    }

    #[test]
    fn dgff_pinning_and_identity() {
        let lat = TorusLattice::new(2, 4).unwrap();
        let mut g = Dgff::new(&lat, 1.0).unwrap();
        assert_eq!(g.variance(0), 0.0);
        let mut r = make_rng(4, 0);
        let x = lat.index_of_digits(&[2, 1]);
        let n = 4000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let h = g.sample(&mut r);
            assert_eq!(h[0], 0.0);
            s += h[x];
            s2 += h[x] * h[x];
        }
        let var = s2 / n as f64 - (s / n as f64).powi(2);
        let exact = g.variance(x);
        assert!((var - exact).abs() < 5.0 * exact * (2.0 / n as f64).sqrt(), "{var} vs {exact}");
    }

    #[test]
    fn hard_hex_moves_keep_independence() {
        let lat = HardHexLattice::torus(6).unwrap();
        assert_eq!(lat.class_sizes(), [12, 12, 12]);
        for i in 0..lat.len() {
            assert_eq!(lat.neighbors(i).len(), 6);
            assert!(lat.neighbors(i).iter().all(|&j| lat.colors[j as usize] != lat.colors[i]));
        }
        let mut r = make_rng(5, 0);
        let mut s = HardHexState::ordered(&lat, 3.0, 1).unwrap();
        assert_eq!(s.sublattice_densities(&lat), [0.0, 1.0, 0.0]);
        for _ in 0..200 {
            s.sweep(&lat, &mut r);
            assert!(s.is_independent(&lat));
        }
        let mut e = HardHexState::empty(&lat, 1e-9).unwrap();
        for _ in 0..50 {
            e.sweep(&lat, &mut r);
        }
        assert!(e.occupied.iter().all(|&b| !b));
    }
}
