//! Lattice geometry: the discrete torus 𝕋_L^d, the hexagonal lattice ℍ and its
//! triangular dual 𝕋 (hexagons), circuits, domains, the proper 3-colouring and
//! the shift automorphisms.
//!
//! Hexagons are the points of (0,2)ℤ + (√3,1)ℤ. We store the point (p·√3, b)
//! as the integer pair `Hex { a: p, b }`, so `a + b` is always even. Vertices of
//! ℍ are triangles of three mutually adjacent hexagons and edges of ℍ are
//! pairs of adjacent hexagons (an edge is identified with its dual edge).

use crate::error::{bail, Error, Result};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Sentinel index for "outside the indexed window".
pub const NONE: u32 = u32::MAX;

// ---------------------------------------------------------------------------
// Discrete torus
// ---------------------------------------------------------------------------

/// The torus 𝕋_L^d with vertex set {−L+1,…,L}^d and nearest-neighbour edges
/// modulo 2L. Sites are indexed row-major by the digits `x_j + L − 1`.
///
/// For L = 1 the two neighbours ±1 of a coordinate coincide; the edge set is a
/// set of unordered pairs, so each vertex then has d (not 2d) neighbours.
#[derive(Clone, Debug)]
pub struct TorusLattice {
    d: usize,
    l: usize,
    side: usize,
    n_sites: usize,
    degree: usize,
    nbrs: Vec<u32>,
    edges: Vec<[u32; 2]>,
}

impl TorusLattice {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        if d == 0 || l == 0 {
            bail!(InvalidArgument, "torus needs d >= 1 and L >= 1 (got d={d}, L={l})");
        }
        let side = 2 * l;
        let n_sites = side
            .checked_pow(d as u32)
            .filter(|&n| n <= u32::MAX as usize / 2)
            .ok_or_else(|| Error::InvalidArgument(format!("torus too large: d={d}, L={l}")))?;
        let degree = if l == 1 { d } else { 2 * d };
        let mut nbrs = Vec::with_capacity(n_sites * degree);
        let mut edges = Vec::with_capacity(n_sites * d);
        let mut stride = 1usize;
        let mut strides = vec![0usize; d];
        for j in (0..d).rev() {
            strides[j] = stride;
            stride *= side;
        }
        for i in 0..n_sites {
            for (j, &s) in strides.iter().enumerate() {
                let digit = (i / s) % side;
                let up = i - digit * s + ((digit + 1) % side) * s;
                let down = i - digit * s + ((digit + side - 1) % side) * s;
                let _ = j;
                nbrs.push(up as u32);
                if l > 1 {
                    nbrs.push(down as u32);
                }
                // each edge is recorded from its lower-digit endpoint in direction +1,
                // except the wrap edge which is recorded once as well.
                if l > 1 || digit == 0 {
                    edges.push([i as u32, up as u32]);
                }
            }
        }
        Ok(TorusLattice { d, l, side, n_sites, degree, nbrs, edges })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn l(&self) -> usize {
        self.l
    }
    /// Side length 2L.
    pub fn side(&self) -> usize {
        self.side
    }
    /// Number of vertices (2L)^d.
    pub fn len(&self) -> usize {
        self.n_sites
    }
    pub fn is_empty(&self) -> bool {
        self.n_sites == 0
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.nbrs[i * self.degree..(i + 1) * self.degree]
    }
    /// Each undirected edge exactly once.
    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    /// Site index of a coordinate vector in {−L+1,…,L}^d.
    pub fn index(&self, v: &[i64]) -> Result<usize> {
        if v.len() != self.d {
            bail!(OutOfRange, "vertex {v:?} has dimension {} but torus has d={}", v.len(), self.d);
        }
        let l = self.l as i64;
        let mut idx = 0usize;
        for &x in v {
            if x < -l + 1 || x > l {
                bail!(OutOfRange, "coordinate {x} of {v:?} outside {{{}..{}}}", -l + 1, l);
            }
            idx = idx * self.side + (x + l - 1) as usize;
        }
        Ok(idx)
    }

    /// Coordinates in {−L+1,…,L}^d of a site index.
    pub fn coords(&self, mut i: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.d];
        for j in (0..self.d).rev() {
            c[j] = (i % self.side) as i64 - self.l as i64 + 1;
            i /= self.side;
        }
        c
    }

    /// Digits in {0,…,2L−1}^d of a site index.
    pub fn digits(&self, mut i: usize) -> Vec<usize> {
        let mut c = vec![0usize; self.d];
        for j in (0..self.d).rev() {
            c[j] = i % self.side;
            i /= self.side;
        }
        c
    }

    pub fn index_of_digits(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &x| acc * self.side + (x % self.side))
    }

    /// The neighbours of a vertex given by coordinates.
    pub fn torus_neighbors(&self, v: &[i64]) -> Result<Vec<Vec<i64>>> {
        let i = self.index(v)?;
        Ok(self.neighbors(i).iter().map(|&j| self.coords(j as usize)).collect())
    }

    /// Graph (ℓ¹ torus) distance ‖x−y‖₁.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.digits(i), self.digits(j));
        a.iter()
            .zip(&b)
            .map(|(&x, &y)| {
                let d = x.abs_diff(y);
                d.min(self.side - d)
            })
            .sum()
    }

    /// ⊠-adjacency on the two-dimensional torus: nearest neighbours or diagonal
    /// next-nearest neighbours (differing by ±1 in both coordinates).
    pub fn box_adjacent(&self, u: &[i64], v: &[i64]) -> Result<bool> {
        if self.d != 2 {
            bail!(InvalidArgument, "box adjacency is defined on the two-dimensional torus");
        }
        let (iu, iv) = (self.index(u)?, self.index(v)?);
        let (du, dv) = (self.digits(iu), self.digits(iv));
        let s = self.side;
        let step = |a: usize, b: usize| -> Option<bool> {
            // Some(true) = differ by ±1, Some(false) = equal, None = otherwise
            if a == b {
                Some(false)
            } else if (a + 1) % s == b || (b + 1) % s == a {
                Some(true)
            } else {
                None
            }
        };
        Ok(match (step(du[0], dv[0]), step(du[1], dv[1])) {
            (Some(x), Some(y)) => x || y,
            _ => false,
        })
    }
}

// ---------------------------------------------------------------------------
// Hexagons (vertices of 𝕋)
// ---------------------------------------------------------------------------

/// A hexagon of ℍ, i.e. a vertex of the triangular lattice 𝕋.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[i32; 2]", try_from = "[i32; 2]")]
pub struct Hex {
    pub a: i32,
    pub b: i32,
}

/// Neighbour offsets in counter-clockwise order, starting at angle 30°.
pub const HEX_DIRS: [(i32, i32); 6] = [(1, 1), (0, 2), (-1, 1), (-1, -1), (0, -2), (1, -1)];
/// Offsets to the six nearest hexagons of the same colour class.
pub const SUBLATTICE_DIRS: [(i32, i32); 6] = [(2, 0), (1, 3), (-1, 3), (-2, 0), (-1, -3), (1, -3)];

/// Direction of a shift of 𝕋.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftDir {
    Up,
    Down,
}

impl From<Hex> for [i32; 2] {
    fn from(h: Hex) -> Self {
        [h.a, h.b]
    }
}
impl TryFrom<[i32; 2]> for Hex {
    type Error = Error;
    fn try_from(v: [i32; 2]) -> Result<Self> {
        Hex::new(v[0], v[1])
    }
}

impl Hex {
    pub fn new(a: i32, b: i32) -> Result<Hex> {
        if (a + b).rem_euclid(2) != 0 {
            bail!(InvalidArgument, "({a},{b}) is not a hexagon: a+b must be even");
        }
        Ok(Hex { a, b })
    }
    #[inline]
    pub const fn new_unchecked(a: i32, b: i32) -> Hex {
        Hex { a, b }
    }
    pub const ORIGIN: Hex = Hex { a: 0, b: 0 };

    #[inline]
    pub fn offset(self, d: (i32, i32)) -> Hex {
        Hex { a: self.a + d.0, b: self.b + d.1 }
    }
    #[inline]
    pub fn neighbor(self, i: usize) -> Hex {
        self.offset(HEX_DIRS[i % 6])
    }
    pub fn neighbors(self) -> [Hex; 6] {
        std::array::from_fn(|i| self.neighbor(i))
    }
    pub fn sublattice_neighbors(self) -> [Hex; 6] {
        std::array::from_fn(|i| self.offset(SUBLATTICE_DIRS[i]))
    }
    /// Index i with `self.neighbor(i) == other`.
    pub fn direction_to(self, other: Hex) -> Option<usize> {
        let d = (other.a - self.a, other.b - self.b);
        HEX_DIRS.iter().position(|&x| x == d)
    }
    pub fn is_adjacent(self, other: Hex) -> bool {
        self.direction_to(other).is_some()
    }
    /// Colour class in {0,1,2}; (0,0) has colour 0 and (0,2) colour 1.
    #[inline]
    pub fn color(self) -> u8 {
        ((self.b - 3 * self.a) / 2).rem_euclid(3) as u8
    }
    /// ↑: (a,b) ↦ (a,b+2), mapping class c to class c+1 (mod 3).
    #[inline]
    pub fn up(self) -> Hex {
        Hex { a: self.a, b: self.b + 2 }
    }
    /// ↓ = ↑⁻¹.
    #[inline]
    pub fn down(self) -> Hex {
        Hex { a: self.a, b: self.b - 2 }
    }
    pub fn shift(self, dir: ShiftDir) -> Hex {
        match dir {
            ShiftDir::Up => self.up(),
            ShiftDir::Down => self.down(),
        }
    }
    /// Physical centre (a·√3, b); neighbouring centres are at distance 2.
    pub fn center(self) -> (f64, f64) {
        (self.a as f64 * 3f64.sqrt(), self.b as f64)
    }
    /// The six vertices of the hexagon in counter-clockwise order; vertex i lies
    /// between neighbours i and i+1.
    pub fn vertices(self) -> [Vertex; 6] {
        std::array::from_fn(|i| Vertex::from_sorted(sort3(self, self.neighbor(i), self.neighbor(i + 1))))
    }
    /// The six edges; edge i is shared with neighbour i and joins vertices i−1 and i.
    pub fn edges(self) -> [HexEdge; 6] {
        std::array::from_fn(|i| HexEdge::from_sorted(sort2(self, self.neighbor(i))))
    }
}

fn sort2(x: Hex, y: Hex) -> [Hex; 2] {
    if x <= y {
        [x, y]
    } else {
        [y, x]
    }
}

fn sort3(x: Hex, y: Hex, z: Hex) -> [Hex; 3] {
    let mut v = [x, y, z];
    v.sort_unstable();
    v
}

/// Hexagonal-sublattice distance between two hexagons of the same colour.
pub fn sublattice_distance(h: Hex, g: Hex) -> Option<i32> {
    if h.color() != g.color() {
        return None;
    }
    // basis e1=(2,0), e2=(1,3): (da,db) = i·e1 + j·e2
    let (da, db) = (g.a - h.a, g.b - h.b);
    let j = db / 3;
    let i = (da - j) / 2;
    Some(i.abs().max(j.abs()).max((i + j).abs()))
}

// ---------------------------------------------------------------------------
// Vertices and edges of ℍ
// ---------------------------------------------------------------------------

/// A vertex of ℍ: a triangle of three mutually adjacent hexagons, sorted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub [Hex; 3]);

impl Vertex {
    pub fn new(x: Hex, y: Hex, z: Hex) -> Result<Vertex> {
        if !(x.is_adjacent(y) && y.is_adjacent(z) && x.is_adjacent(z)) {
            bail!(InvalidArgument, "{x:?},{y:?},{z:?} are not mutually adjacent");
        }
        Ok(Vertex(sort3(x, y, z)))
    }
    #[inline]
    fn from_sorted(h: [Hex; 3]) -> Vertex {
        Vertex(h)
    }
    pub fn hexes(&self) -> [Hex; 3] {
        self.0
    }
    /// The unique hexagon of colour class `c` at this vertex.
    pub fn hex_of_color(&self, c: u8) -> Hex {
        *self.0.iter().find(|h| h.color() == c).expect("each vertex meets every colour once")
    }
    /// The three neighbouring vertices, in the order of `edges()`.
    pub fn neighbors(&self) -> [Vertex; 3] {
        let [p, q, r] = self.0;
        [
            Vertex(sort3(q, r, Hex { a: q.a + r.a - p.a, b: q.b + r.b - p.b })),
            Vertex(sort3(p, r, Hex { a: p.a + r.a - q.a, b: p.b + r.b - q.b })),
            Vertex(sort3(p, q, Hex { a: p.a + q.a - r.a, b: p.b + q.b - r.b })),
        ]
    }
    /// The three incident edges; edge k joins `self` and `neighbors()[k]`.
    pub fn edges(&self) -> [HexEdge; 3] {
        let [p, q, r] = self.0;
        [HexEdge([q, r]), HexEdge([p, r]), HexEdge([p, q])]
    }
    pub fn center(&self) -> (f64, f64) {
        let c: Vec<(f64, f64)> = self.0.iter().map(|h| h.center()).collect();
        ((c[0].0 + c[1].0 + c[2].0) / 3.0, (c[0].1 + c[1].1 + c[2].1) / 3.0)
    }
    pub fn shift(&self, dir: ShiftDir) -> Vertex {
        Vertex(self.0.map(|h| h.shift(dir)))
    }
}

/// An edge of ℍ, stored as the sorted pair of the two hexagons it separates.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexEdge(pub [Hex; 2]);

impl HexEdge {
    pub fn new(x: Hex, y: Hex) -> Result<HexEdge> {
        if !x.is_adjacent(y) {
            bail!(InvalidArgument, "{x:?} and {y:?} are not adjacent hexagons");
        }
        Ok(HexEdge(sort2(x, y)))
    }
    #[inline]
    fn from_sorted(h: [Hex; 2]) -> HexEdge {
        HexEdge(h)
    }
    pub fn hexes(&self) -> [Hex; 2] {
        self.0
    }
    /// The two endpoint vertices (the triangles on either side of the dual edge).
    pub fn endpoints(&self) -> [Vertex; 2] {
        let [p, q] = self.0;
        let i = p.direction_to(q).expect("edge hexagons are adjacent");
        [
            Vertex(sort3(p, q, p.neighbor(i + 5))),
            Vertex(sort3(p, q, p.neighbor(i + 1))),
        ]
    }
    pub fn shift(&self, dir: ShiftDir) -> HexEdge {
        HexEdge(self.0.map(|h| h.shift(dir)))
    }
}

// ---------------------------------------------------------------------------
// Circuits
// ---------------------------------------------------------------------------

/// A simple closed path (γ_0,…,γ_{m−1}, γ_m = γ_0) in 𝕋 with m ≥ 3, stored
/// without repeating the first hexagon.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(rename = "circuit")]
    hexes: Vec<Hex>,
}

impl Circuit {
    pub fn new(hexes: Vec<Hex>) -> Result<Circuit> {
        let mut hexes = hexes;
        if hexes.len() >= 2 && hexes.first() == hexes.last() {
            hexes.pop();
        }
        let m = hexes.len();
        if m < 3 {
            bail!(NotACircuit, "a circuit needs at least 3 hexagons, got {m}");
        }
        for h in &hexes {
            Hex::new(h.a, h.b).map_err(|e| Error::NotACircuit(e.to_string()))?;
        }
        for i in 0..m {
            if !hexes[i].is_adjacent(hexes[(i + 1) % m]) {
                bail!(NotACircuit, "consecutive hexagons {:?} and {:?} are not adjacent", hexes[i], hexes[(i + 1) % m]);
            }
        }
        let mut seen = FxHashSet::default();
        for h in &hexes {
            if !seen.insert(*h) {
                bail!(NotACircuit, "hexagon {h:?} repeats");
            }
        }
        Ok(Circuit { hexes })
    }
    pub fn hexes(&self) -> &[Hex] {
        &self.hexes
    }
    pub fn len(&self) -> usize {
        self.hexes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.hexes.is_empty()
    }
    /// γ*: the edges of ℍ dual to the edges {γ_i, γ_{i+1}}.
    pub fn dual_edges(&self) -> Vec<HexEdge> {
        let m = self.hexes.len();
        (0..m).map(|i| HexEdge(sort2(self.hexes[i], self.hexes[(i + 1) % m]))).collect()
    }
    /// Whether γ ⊂ 𝕋 ∖ 𝕋^c.
    pub fn avoids_class(&self, c: u8) -> bool {
        self.hexes.iter().all(|h| h.color() != c)
    }
    /// Twice the signed area enclosed by the polygon of hexagon centres.
    pub fn signed_area2(&self) -> f64 {
        let m = self.hexes.len();
        (0..m)
            .map(|i| {
                let (x0, y0) = self.hexes[i].center();
                let (x1, y1) = self.hexes[(i + 1) % m].center();
                x0 * y1 - x1 * y0
            })
            .sum()
    }
    /// Counter-clockwise orientation, starting at the smallest hexagon.
    pub fn canonical(&self) -> Circuit {
        let mut h = self.hexes.clone();
        if self.signed_area2() < 0.0 {
            h.reverse();
        }
        let k = (0..h.len()).min_by_key(|&i| h[i]).unwrap();
        h.rotate_left(k);
        Circuit { hexes: h }
    }
    pub fn shift(&self, dir: ShiftDir) -> Circuit {
        Circuit { hexes: self.hexes.iter().map(|h| h.shift(dir)).collect() }
    }
    fn bounds(&self) -> (i32, i32, i32, i32) {
        let amin = self.hexes.iter().map(|h| h.a).min().unwrap();
        let amax = self.hexes.iter().map(|h| h.a).max().unwrap();
        let bmin = self.hexes.iter().map(|h| h.b).min().unwrap();
        let bmax = self.hexes.iter().map(|h| h.b).max().unwrap();
        (amin, amax, bmin, bmax)
    }
}

/// The finite side of a circuit: interior vertices, edges and hexagons.
#[derive(Clone, Debug)]
pub struct CircuitInterior {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<HexEdge>,
    pub hexagons: Vec<Hex>,
}

/// Rectangular window of hexagons [amin,amax]×[bmin,bmax].
#[derive(Clone, Copy, Debug)]
struct HexBox {
    amin: i32,
    amax: i32,
    bmin: i32,
    bmax: i32,
}

impl HexBox {
    fn around(bounds: (i32, i32, i32, i32), margin: i32) -> HexBox {
        HexBox { amin: bounds.0 - margin, amax: bounds.1 + margin, bmin: bounds.2 - 2 * margin, bmax: bounds.3 + 2 * margin }
    }
    #[inline]
    fn contains(&self, h: Hex) -> bool {
        h.a >= self.amin && h.a <= self.amax && h.b >= self.bmin && h.b <= self.bmax
    }
    fn contains_vertex(&self, v: &Vertex) -> bool {
        v.0.iter().all(|&h| self.contains(h))
    }
    fn hexes(&self) -> Vec<Hex> {
        let mut out = Vec::new();
        for a in self.amin..=self.amax {
            for b in self.bmin..=self.bmax {
                if (a + b).rem_euclid(2) == 0 {
                    out.push(Hex { a, b });
                }
            }
        }
        out
    }
}

/// Computes the interior of a circuit by flood fill from the outside of a
/// bounding window, never crossing γ*.
pub fn circuit_interior(gamma: &Circuit) -> Result<CircuitInterior> {
    let win = HexBox::around(gamma.bounds(), 2);
    let blocked: FxHashSet<HexEdge> = gamma.dual_edges().into_iter().collect();
    let mut all: FxHashSet<Vertex> = FxHashSet::default();
    for h in win.hexes() {
        for v in h.vertices() {
            if win.contains_vertex(&v) {
                all.insert(v);
            }
        }
    }
    let start = *all
        .iter()
        .filter(|v| v.0.iter().any(|h| h.a == win.amin))
        .min()
        .ok_or_else(|| Error::NotACircuit("empty window".into()))?;
    let outside = flood(&start, |v| all.contains(v), |e| !blocked.contains(e));
    let interior: FxHashSet<Vertex> = all.iter().filter(|v| !outside.contains(*v)).copied().collect();
    if interior.is_empty() {
        bail!(NotACircuit, "circuit encloses no vertex");
    }
    // the interior must form a single component
    let first = *interior.iter().min().unwrap();
    let comp = flood(&first, |v| interior.contains(v), |e| !blocked.contains(e));
    if comp.len() != interior.len() {
        bail!(NotACircuit, "removing γ* leaves more than two components");
    }
    for e in &blocked {
        let [x, y] = e.endpoints();
        if interior.contains(&x) == interior.contains(&y) {
            bail!(NotACircuit, "dual edge {e:?} does not separate interior from exterior");
        }
    }
    let mut vertices: Vec<Vertex> = interior.iter().copied().collect();
    vertices.sort_unstable();
    let mut edges: Vec<HexEdge> = Vec::new();
    for v in &vertices {
        for (e, w) in v.edges().into_iter().zip(v.neighbors()) {
            if interior.contains(&w) && *v < w {
                edges.push(e);
            }
        }
    }
    edges.sort_unstable();
    let hexagons: Vec<Hex> = win
        .hexes()
        .into_iter()
        .filter(|h| h.vertices().iter().all(|v| interior.contains(v)))
        .collect();
    Ok(CircuitInterior { vertices, edges, hexagons })
}

fn flood(start: &Vertex, allowed: impl Fn(&Vertex) -> bool, passable: impl Fn(&HexEdge) -> bool) -> FxHashSet<Vertex> {
    let mut seen = FxHashSet::default();
    let mut queue = VecDeque::new();
    seen.insert(*start);
    queue.push_back(*start);
    while let Some(v) = queue.pop_front() {
        for (e, w) in v.edges().into_iter().zip(v.neighbors()) {
            if allowed(&w) && passable(&e) && seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen
}

/// The enclosing circuit of a finite vertex set U: the cycle of hexagons that
/// meet both U and its complement, linked through the edges leaving U. Fails
/// unless U is connected, has no holes and meets every boundary hexagon in a
/// single arc.
pub fn enclosing_circuit(u: &FxHashSet<Vertex>) -> Result<Circuit> {
    if u.is_empty() {
        bail!(InvalidDomain, "empty vertex set has no enclosing circuit");
    }
    let mut crossing: FxHashMap<Hex, Vec<Hex>> = FxHashMap::default();
    for v in u {
        for (e, w) in v.edges().into_iter().zip(v.neighbors()) {
            if !u.contains(&w) {
                let [p, q] = e.0;
                crossing.entry(p).or_default().push(q);
                crossing.entry(q).or_default().push(p);
            }
        }
    }
    for (h, c) in &crossing {
        if c.len() != 2 {
            bail!(InvalidDomain, "boundary hexagon {h:?} is met by the vertex set in {} arcs", c.len() / 2);
        }
    }
    let h0 = *crossing.keys().min().unwrap();
    let mut cycle = vec![h0];
    let mut prev = h0;
    let mut cur = crossing[&h0][0];
    while cur != h0 {
        cycle.push(cur);
        let c = &crossing[&cur];
        let next = if c[0] != prev { c[0] } else { c[1] };
        prev = cur;
        cur = next;
        if cycle.len() > crossing.len() {
            bail!(InvalidDomain, "boundary walk does not close");
        }
    }
    if cycle.len() != crossing.len() {
        bail!(InvalidDomain, "vertex set is disconnected or has holes ({} boundary cycles)", 2);
    }
    Ok(Circuit::new(cycle)?.canonical())
}

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// A domain H = Int γ together with an index of a window of ℍ around it (the
/// domain plus a margin). All "infinite lattice" notions used by the analysis
/// code are evaluated inside that window.
///
/// Window vertices, edges and hexagons are numbered; `NONE` marks objects
/// outside the window.
#[derive(Clone, Debug)]
pub struct HexDomain {
    circuit: Circuit,
    hexes: Vec<Hex>,
    hex_index: FxHashMap<Hex, u32>,
    hex_verts: Vec<[u32; 6]>,
    hex_edges: Vec<[u32; 6]>,
    hex_nbrs: Vec<[u32; 6]>,
    hex_sub_nbrs: Vec<[u32; 6]>,
    hex_up: Vec<u32>,
    hex_down: Vec<u32>,
    verts: Vec<Vertex>,
    vert_index: FxHashMap<Vertex, u32>,
    vert_nbrs: Vec<[u32; 3]>,
    vert_edges: Vec<[u32; 3]>,
    vert_hex_by_color: Vec<[u32; 3]>,
    edges: Vec<HexEdge>,
    edge_index: FxHashMap<HexEdge, u32>,
    edge_verts: Vec<[u32; 2]>,
    edge_hexes: Vec<[u32; 2]>,
    edge_up: Vec<u32>,
    edge_down: Vec<u32>,
    in_v: Vec<bool>,
    in_e: Vec<bool>,
    is_face: Vec<bool>,
    dom_verts: Vec<u32>,
    dom_edges: Vec<u32>,
    faces: Vec<u32>,
    boundary: Vec<u32>,
    window_boundary_verts: Vec<u32>,
}

/// Margin (in hexagons) of the indexed window around a domain.
pub const WINDOW_MARGIN: i32 = 3;

impl HexDomain {
    /// The domain Int γ.
    pub fn from_circuit(gamma: &Circuit) -> Result<HexDomain> {
        let int = circuit_interior(gamma)?;
        Self::build(gamma.canonical(), &int)
    }

    /// The domain induced by a vertex set (connected, without holes).
    pub fn from_vertices(u: &FxHashSet<Vertex>) -> Result<HexDomain> {
        let gamma = enclosing_circuit(u)?;
        let int = circuit_interior(&gamma)?;
        if int.vertices.len() != u.len() || !int.vertices.iter().all(|v| u.contains(v)) {
            bail!(InvalidDomain, "vertex set is not the interior of its enclosing circuit");
        }
        Self::build(gamma, &int)
    }

    /// The domain spanned by the vertices of a set of hexagons.
    pub fn from_faces(hexes: &[Hex]) -> Result<HexDomain> {
        let u: FxHashSet<Vertex> = hexes.iter().flat_map(|h| h.vertices()).collect();
        Self::from_vertices(&u)
    }

    /// A type-0 domain: the vertices of a set of class-0 hexagons.
    pub fn type0_region(hexes: &[Hex]) -> Result<HexDomain> {
        if let Some(h) = hexes.iter().find(|h| h.color() != 0) {
            bail!(InvalidDomain, "hexagon {h:?} is not in class 0");
        }
        let d = Self::from_faces(hexes)?;
        debug_assert!(d.is_type(0));
        Ok(d)
    }

    /// Type-0 hexagon-shaped domain: all class-0 hexagons within sublattice
    /// distance r of the origin.
    pub fn hexagon(r: i32) -> Result<HexDomain> {
        if r < 0 {
            bail!(InvalidArgument, "radius must be non-negative");
        }
        let mut hs = Vec::new();
        for i in -r..=r {
            for j in -r..=r {
                if (i + j).abs() <= r {
                    hs.push(Hex { a: 2 * i + j, b: 3 * j });
                }
            }
        }
        Self::type0_region(&hs)
    }

    /// Type-0 rectangular domain: the class-0 hexagons with centres in columns
    /// 0 ≤ a < w and rows 0 ≤ b < 2h (a window of about w×h hexagons).
    pub fn rectangle(w: i32, h: i32) -> Result<HexDomain> {
        if w < 3 || h < 3 {
            bail!(InvalidArgument, "rectangle needs w, h >= 3");
        }
        let mut hs = Vec::new();
        for a in 0..w {
            for b in 0..2 * h {
                let x = Hex { a, b };
                if (a + b) % 2 == 0 && x.color() == 0 {
                    hs.push(x);
                }
            }
        }
        Self::type0_region(&hs)
    }

    fn build(circuit: Circuit, int: &CircuitInterior) -> Result<HexDomain> {
        let win = HexBox::around(circuit.bounds(), WINDOW_MARGIN);
        let hexes = win.hexes();
        let hex_index: FxHashMap<Hex, u32> = hexes.iter().enumerate().map(|(i, h)| (*h, i as u32)).collect();
        let mut verts: Vec<Vertex> = Vec::new();
        let mut vert_index: FxHashMap<Vertex, u32> = FxHashMap::default();
        for h in &hexes {
            for v in h.vertices() {
                if win.contains_vertex(&v) && !vert_index.contains_key(&v) {
                    vert_index.insert(v, verts.len() as u32);
                    verts.push(v);
                }
            }
        }
        let mut edges: Vec<HexEdge> = Vec::new();
        let mut edge_index: FxHashMap<HexEdge, u32> = FxHashMap::default();
        let mut edge_verts = Vec::new();
        for v in &verts {
            for (e, w) in v.edges().into_iter().zip(v.neighbors()) {
                if let Some(&wi) = vert_index.get(&w) {
                    if !edge_index.contains_key(&e) {
                        edge_index.insert(e, edges.len() as u32);
                        edges.push(e);
                        edge_verts.push([vert_index[v], wi]);
                    }
                }
            }
        }
        let look_h = |h: Hex| hex_index.get(&h).copied().unwrap_or(NONE);
        let look_v = |v: &Vertex| vert_index.get(v).copied().unwrap_or(NONE);
        let look_e = |e: &HexEdge| edge_index.get(e).copied().unwrap_or(NONE);
        let hex_verts: Vec<[u32; 6]> = hexes.iter().map(|h| h.vertices().map(|v| look_v(&v))).collect();
        let hex_edges: Vec<[u32; 6]> = hexes.iter().map(|h| h.edges().map(|e| look_e(&e))).collect();
        let hex_nbrs: Vec<[u32; 6]> = hexes.iter().map(|h| h.neighbors().map(look_h)).collect();
        let hex_sub_nbrs: Vec<[u32; 6]> = hexes.iter().map(|h| h.sublattice_neighbors().map(look_h)).collect();
        let hex_up: Vec<u32> = hexes.iter().map(|h| look_h(h.up())).collect();
        let hex_down: Vec<u32> = hexes.iter().map(|h| look_h(h.down())).collect();
        let vert_nbrs: Vec<[u32; 3]> = verts.iter().map(|v| v.neighbors().map(|w| look_v(&w))).collect();
        let vert_edges: Vec<[u32; 3]> = verts.iter().map(|v| v.edges().map(|e| look_e(&e))).collect();
        let vert_hex_by_color: Vec<[u32; 3]> = verts
            .iter()
            .map(|v| std::array::from_fn(|c| look_h(v.hex_of_color(c as u8))))
            .collect();
        let edge_hexes: Vec<[u32; 2]> = edges.iter().map(|e| e.0.map(look_h)).collect();
        let edge_up: Vec<u32> = edges.iter().map(|e| look_e(&e.shift(ShiftDir::Up))).collect();
        let edge_down: Vec<u32> = edges.iter().map(|e| look_e(&e.shift(ShiftDir::Down))).collect();

        let mut in_v = vec![false; verts.len()];
        for v in &int.vertices {
            let i = look_v(v);
            if i == NONE {
                bail!(InvalidDomain, "interior vertex outside window");
            }
            in_v[i as usize] = true;
        }
        let in_e: Vec<bool> = edge_verts.iter().map(|[x, y]| in_v[*x as usize] && in_v[*y as usize]).collect();
        let is_face: Vec<bool> = hex_verts
            .iter()
            .map(|vs| vs.iter().all(|&v| v != NONE && in_v[v as usize]))
            .collect();
        let dom_verts: Vec<u32> = (0..verts.len() as u32).filter(|&i| in_v[i as usize]).collect();
        let dom_edges: Vec<u32> = (0..edges.len() as u32).filter(|&i| in_e[i as usize]).collect();
        let faces: Vec<u32> = (0..hexes.len() as u32).filter(|&i| is_face[i as usize]).collect();
        let mut boundary: Vec<u32> = circuit.dual_edges().iter().map(look_e).collect();
        if boundary.contains(&NONE) {
            bail!(InvalidDomain, "dual circuit edge outside window");
        }
        boundary.sort_unstable();
        let window_boundary_verts: Vec<u32> = (0..verts.len() as u32)
            .filter(|&i| vert_nbrs[i as usize].contains(&NONE))
            .collect();
        Ok(HexDomain {
            circuit,
            hexes,
            hex_index,
            hex_verts,
            hex_edges,
            hex_nbrs,
            hex_sub_nbrs,
            hex_up,
            hex_down,
            verts,
            vert_index,
            vert_nbrs,
            vert_edges,
            vert_hex_by_color,
            edges,
            edge_index,
            edge_verts,
            edge_hexes,
            edge_up,
            edge_down,
            in_v,
            in_e,
            is_face,
            dom_verts,
            dom_edges,
            faces,
            boundary,
            window_boundary_verts,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }
    /// Whether H is of type c, i.e. its circuit lies in 𝕋 ∖ 𝕋^c.
    pub fn is_type(&self, c: u8) -> bool {
        self.circuit.avoids_class(c)
    }

    // --- window accessors -------------------------------------------------
    pub fn n_window_hexes(&self) -> usize {
        self.hexes.len()
    }
    pub fn n_window_verts(&self) -> usize {
        self.verts.len()
    }
    pub fn n_window_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn hex(&self, i: u32) -> Hex {
        self.hexes[i as usize]
    }
    pub fn vertex(&self, i: u32) -> Vertex {
        self.verts[i as usize]
    }
    pub fn edge(&self, i: u32) -> HexEdge {
        self.edges[i as usize]
    }
    pub fn hex_id(&self, h: Hex) -> Option<u32> {
        self.hex_index.get(&h).copied()
    }
    pub fn vertex_id(&self, v: &Vertex) -> Option<u32> {
        self.vert_index.get(v).copied()
    }
    pub fn edge_id(&self, e: &HexEdge) -> Option<u32> {
        self.edge_index.get(e).copied()
    }
    #[inline]
    pub fn hex_verts(&self, h: u32) -> &[u32; 6] {
        &self.hex_verts[h as usize]
    }
    #[inline]
    pub fn hex_edges(&self, h: u32) -> &[u32; 6] {
        &self.hex_edges[h as usize]
    }
    #[inline]
    pub fn hex_nbrs(&self, h: u32) -> &[u32; 6] {
        &self.hex_nbrs[h as usize]
    }
    #[inline]
    pub fn hex_sub_nbrs(&self, h: u32) -> &[u32; 6] {
        &self.hex_sub_nbrs[h as usize]
    }
    #[inline]
    pub fn hex_up(&self, h: u32) -> u32 {
        self.hex_up[h as usize]
    }
    #[inline]
    pub fn hex_down(&self, h: u32) -> u32 {
        self.hex_down[h as usize]
    }
    #[inline]
    pub fn vert_nbrs(&self, v: u32) -> &[u32; 3] {
        &self.vert_nbrs[v as usize]
    }
    #[inline]
    pub fn vert_edges(&self, v: u32) -> &[u32; 3] {
        &self.vert_edges[v as usize]
    }
    /// Window index of the class-c hexagon at vertex v.
    #[inline]
    pub fn vert_hex(&self, v: u32, c: u8) -> u32 {
        self.vert_hex_by_color[v as usize][c as usize]
    }
    #[inline]
    pub fn edge_verts(&self, e: u32) -> [u32; 2] {
        self.edge_verts[e as usize]
    }
    #[inline]
    pub fn edge_hexes(&self, e: u32) -> [u32; 2] {
        self.edge_hexes[e as usize]
    }
    #[inline]
    pub fn edge_shift(&self, e: u32, dir: ShiftDir) -> u32 {
        match dir {
            ShiftDir::Up => self.edge_up[e as usize],
            ShiftDir::Down => self.edge_down[e as usize],
        }
    }
    /// Window vertices with a neighbour outside the window.
    pub fn window_boundary_verts(&self) -> &[u32] {
        &self.window_boundary_verts
    }

    // --- domain accessors -------------------------------------------------
    #[inline]
    pub fn in_domain_vertex(&self, v: u32) -> bool {
        self.in_v[v as usize]
    }
    #[inline]
    pub fn in_domain_edge(&self, e: u32) -> bool {
        self.in_e[e as usize]
    }
    #[inline]
    pub fn is_face(&self, h: u32) -> bool {
        self.is_face[h as usize]
    }
    /// V(H) as window indices.
    pub fn domain_vertices(&self) -> &[u32] {
        &self.dom_verts
    }
    /// E(H) as window indices.
    pub fn domain_edges(&self) -> &[u32] {
        &self.dom_edges
    }
    /// Hexagons all of whose vertices lie in H (the inner faces).
    pub fn faces(&self) -> &[u32] {
        &self.faces
    }
    /// γ*: edges of ℍ leaving H.
    pub fn boundary_edges(&self) -> &[u32] {
        &self.boundary
    }
    /// ∂V(H): domain vertices with a neighbour outside H.
    pub fn boundary_vertices(&self) -> Vec<u32> {
        self.dom_verts
            .iter()
            .copied()
            .filter(|&v| self.vert_nbrs[v as usize].iter().any(|&w| w == NONE || !self.in_v[w as usize]))
            .collect()
    }
    /// The domain vertex closest to the centroid of V(H).
    pub fn center_vertex(&self) -> u32 {
        let n = self.dom_verts.len() as f64;
        let (sx, sy) = self.dom_verts.iter().fold((0.0, 0.0), |acc, &v| {
            let c = self.verts[v as usize].center();
            (acc.0 + c.0, acc.1 + c.1)
        });
        let (cx, cy) = (sx / n, sy / n);
        *self
            .dom_verts
            .iter()
            .min_by(|&&x, &&y| {
                let d = |v: u32| {
                    let c = self.verts[v as usize].center();
                    (c.0 - cx).powi(2) + (c.1 - cy).powi(2)
                };
                d(x).partial_cmp(&d(y)).unwrap().then(x.cmp(&y))
            })
            .unwrap()
    }
    /// Vertex set as a hash set (for the geometric helpers).
    pub fn vertex_set(&self) -> FxHashSet<Vertex> {
        self.dom_verts.iter().map(|&v| self.verts[v as usize]).collect()
    }
    /// Maps a hexagonal-lattice edge into E(H) (window index), if it lies in H.
    pub fn domain_edge_id(&self, e: &HexEdge) -> Option<u32> {
        self.edge_id(e).filter(|&i| self.in_e[i as usize])
    }
}
