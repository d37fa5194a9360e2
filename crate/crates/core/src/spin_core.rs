//! Spin O(n) configurations, potentials, coupling constants, energies and the
//! embedded-Ising conditioning map.

use crate::error::{bail, Result};
use crate::lattice::TorusLattice;
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Per-vertex unit vectors in S^{n−1}, stored flattened (vertex-major).
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfig {
    n: usize,
    values: Vec<f64>,
}

impl SpinConfig {
    /// All spins equal to the first basis vector e₁.
    pub fn constant(n: usize, sites: usize) -> SpinConfig {
        assert!(n >= 1, "spin dimension must be at least 1");
        let mut values = vec![0.0; n * sites];
        for i in 0..sites {
            values[i * n] = 1.0;
        }
        SpinConfig { n, values }
    }

    /// Independent uniform spins.
    pub fn random(n: usize, sites: usize, rng: &mut Rng) -> SpinConfig {
        let mut c = SpinConfig::constant(n, sites);
        for i in 0..sites {
            let v = random_unit(n, rng);
            c.values[i * n..(i + 1) * n].copy_from_slice(&v);
        }
        c
    }

    /// From flattened values; vectors are normalised unless already of unit
    /// norm to within rounding (n=1 values must be ±1).
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<SpinConfig> {
        if n == 0 || values.len() % n != 0 {
            bail!(InvalidArgument, "values length {} is not a multiple of n={n}", values.len());
        }
        let mut c = SpinConfig { n, values };
        for i in 0..c.len() {
            let s = c.spin(i);
            let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                bail!(InvalidArgument, "spin {i} has zero or non-finite norm");
            }
            if n == 1 && (s[0].abs() - 1.0).abs() > 1e-12 {
                bail!(InvalidArgument, "Ising spin {i} is {} (must be ±1)", s[0]);
            }
            // already-unit vectors are kept bit-exact (snapshot round trips)
            if (norm - 1.0).abs() > 4.0 * f64::EPSILON {
                c.normalize(i);
            }
        }
        Ok(c)
    }

    /// n = 2 configuration from angles θ_v (σ_v = (cos θ_v, sin θ_v)).
    pub fn from_angles(angles: &[f64]) -> SpinConfig {
        let mut values = Vec::with_capacity(2 * angles.len());
        for &t in angles {
            values.push(t.cos());
            values.push(t.sin());
        }
        SpinConfig { n: 2, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.values.len() / self.n
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    #[inline]
    pub fn spin(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
    /// Overwrites spin i and renormalises it.
    pub fn set(&mut self, i: usize, v: &[f64]) {
        let n = self.n;
        self.values[i * n..(i + 1) * n].copy_from_slice(v);
        self.normalize(i);
    }
    #[inline]
    pub(crate) fn spin_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n..(i + 1) * self.n]
    }
    /// Renormalises spin i to unit length (exact ±1 for n = 1).
    pub fn normalize(&mut self, i: usize) {
        let n = self.n;
        let s = &mut self.values[i * n..(i + 1) * n];
        if n == 1 {
            s[0] = if s[0] >= 0.0 { 1.0 } else { -1.0 };
            return;
        }
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in s.iter_mut() {
            *x /= norm;
        }
    }
    #[inline]
    pub fn dot(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        let (a, b) = (&self.values[i * n..(i + 1) * n], &self.values[j * n..(j + 1) * n]);
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
    /// Angles in [0, 2π) for n = 2.
    pub fn angles(&self) -> Option<Vec<f64>> {
        (self.n == 2).then(|| {
            (0..self.len())
                .map(|i| {
                    let s = self.spin(i);
                    s[1].atan2(s[0]).rem_euclid(std::f64::consts::TAU)
                })
                .collect()
        })
    }
    /// Σ_v σ_v.
    pub fn magnetization(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for i in 0..self.len() {
            for (a, b) in m.iter_mut().zip(self.spin(i)) {
                *a += b;
            }
        }
        m
    }
    /// |Σ_v σ_v| / |V|.
    pub fn magnetization_norm(&self) -> f64 {
        let m = self.magnetization();
        m.iter().map(|x| x * x).sum::<f64>().sqrt() / self.len() as f64
    }
    /// Applies an n×n matrix (row-major) to every spin.
    pub fn rotate(&self, o: &[f64]) -> SpinConfig {
        let n = self.n;
        assert_eq!(o.len(), n * n);
        let mut out = self.clone();
        for i in 0..self.len() {
            let s = self.spin(i);
            let t = out.spin_mut(i);
            for r in 0..n {
                t[r] = (0..n).map(|c| o[r * n + c] * s[c]).sum();
            }
        }
        out
    }
    /// Largest deviation of |σ_v| from 1.
    pub fn max_norm_error(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.spin(i).iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Uniform random unit vector in S^{n−1}.
pub fn random_unit(n: usize, rng: &mut Rng) -> Vec<f64> {
    if n == 1 {
        return vec![if rng.gen::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// A general pair potential U: [−1,1] → ℝ ∪ {∞} with declared analytic flags.
#[derive(Clone)]
pub struct GeneralPotential {
    u: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// U is non-increasing on [−1,1].
    pub non_increasing: bool,
    /// U(r) = ∞ exactly for r < r₀.
    pub hard_threshold: Option<f64>,
    pub name: String,
}

impl fmt::Debug for GeneralPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralPotential")
            .field("name", &self.name)
            .field("non_increasing", &self.non_increasing)
            .field("hard_threshold", &self.hard_threshold)
            .finish()
    }
}

/// Pair interaction of the spin model.
#[derive(Clone, Debug)]
pub enum Potential {
    /// U(r) = −βr.
    Ferromagnetic(f64),
    /// U(r) = +βr.
    AntiFerromagnetic(f64),
    General(GeneralPotential),
}

impl Potential {
    pub fn general<F>(name: &str, u: F, non_increasing: bool, hard_threshold: Option<f64>) -> Potential
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Potential::General(GeneralPotential { u: Arc::new(u), non_increasing, hard_threshold, name: name.to_string() })
    }

    /// Hard-support potential: U(r) = ∞ for r < r₀ and U(r) = −βr otherwise.
    pub fn hard_support(beta: f64, r0: f64) -> Potential {
        Potential::general(&format!("hard-support(beta={beta}, r0={r0})"), move |r| -beta * r, true, Some(r0))
    }

    /// U(r), or `None` for U(r) = ∞ (the rejection sentinel).
    #[inline]
    pub fn eval(&self, r: f64) -> Option<f64> {
        match self {
            Potential::Ferromagnetic(b) => Some(-b * r),
            Potential::AntiFerromagnetic(b) => Some(b * r),
            Potential::General(g) => {
                if let Some(r0) = g.hard_threshold {
                    if r < r0 {
                        return None;
                    }
                }
                let v = (g.u)(r);
                v.is_finite().then_some(v)
            }
        }
    }

    /// β if the potential is the ferromagnetic one.
    pub fn ferromagnetic_beta(&self) -> Option<f64> {
        match self {
            Potential::Ferromagnetic(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_non_increasing(&self) -> bool {
        match self {
            Potential::Ferromagnetic(b) => *b >= 0.0,
            Potential::AntiFerromagnetic(b) => *b <= 0.0,
            Potential::General(g) => g.non_increasing,
        }
    }

    pub fn hard_threshold(&self) -> Option<f64> {
        match self {
            Potential::General(g) => g.hard_threshold,
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Potential::Ferromagnetic(b) => format!("ferromagnetic(beta={b})"),
            Potential::AntiFerromagnetic(b) => format!("antiferromagnetic(beta={b})"),
            Potential::General(g) => g.name.clone(),
        }
    }
}

/// Symmetric sparse coupling constants J_{u,v}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CouplingConstants {
    map: BTreeMap<(u32, u32), f64>,
    signed: bool,
}

impl CouplingConstants {
    /// Non-negative couplings; rejects negative entries.
    pub fn new(entries: impl IntoIterator<Item = ((u32, u32), f64)>) -> Result<CouplingConstants> {
        let mut c = CouplingConstants::default();
        for ((u, v), j) in entries {
            if !(j >= 0.0) {
                bail!(InvalidArgument, "coupling J_({u},{v}) = {j} is negative");
            }
            c.map.insert((u.min(v), u.max(v)), j);
        }
        Ok(c)
    }
    /// Couplings of arbitrary sign (flagged as such).
    pub fn new_signed(entries: impl IntoIterator<Item = ((u32, u32), f64)>) -> CouplingConstants {
        let mut c = CouplingConstants { map: BTreeMap::new(), signed: true };
        for ((u, v), j) in entries {
            c.map.insert((u.min(v), u.max(v)), j);
        }
        c
    }
    pub fn get(&self, u: u32, v: u32) -> f64 {
        self.map.get(&(u.min(v), u.max(v))).copied().unwrap_or(0.0)
    }
    pub fn is_signed(&self) -> bool {
        self.signed
    }
    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &f64)> {
        self.map.iter()
    }
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Total energy Σ_{edges} U(⟨σ_u,σ_v⟩); `f64::INFINITY` if a hard constraint is violated.
pub fn energy(cfg: &SpinConfig, lat: &TorusLattice, pot: &Potential) -> Result<f64> {
    if cfg.len() != lat.len() {
        bail!(InvalidArgument, "configuration has {} sites, torus has {}", cfg.len(), lat.len());
    }
    let mut e = 0.0;
    for &[u, v] in lat.edges() {
        match pot.eval(cfg.dot(u as usize, v as usize)) {
            Some(x) => e += x,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(e)
}

/// Flips every spin on the odd sublattice of an even torus (σ_v ↦ −σ_v when the
/// digit sum of v is odd). Maps ferromagnetic energies at β to those at −β.
pub fn flip_odd_sublattice(cfg: &SpinConfig, lat: &TorusLattice) -> SpinConfig {
    let mut out = cfg.clone();
    for i in 0..cfg.len() {
        if lat.digits(i).iter().sum::<usize>() % 2 == 1 {
            for x in out.spin_mut(i) {
                *x = -*x;
            }
        }
    }
    out
}

/// Couplings of the Ising model obtained by conditioning on |σ¹| and σ^{2..n}:
/// J_{u,v} = −½U(|σ_u¹||σ_v¹| + s) + ½U(−|σ_u¹||σ_v¹| + s), s = Σ_{j≥2} σ_u^j σ_v^j.
///
/// J = +∞ (forced alignment) is reported as `f64::INFINITY`. For potentials not
/// declared non-increasing the couplings may be negative and are flagged signed.
pub fn embedded_ising_couplings(cfg: &SpinConfig, lat: &TorusLattice, pot: &Potential) -> Result<CouplingConstants> {
    if cfg.n() < 2 {
        bail!(Precondition, "embedded Ising couplings need n >= 2");
    }
    if cfg.len() != lat.len() {
        bail!(InvalidArgument, "configuration/torus size mismatch");
    }
    let mut entries = Vec::with_capacity(lat.edges().len());
    for &[u, v] in lat.edges() {
        let (su, sv) = (cfg.spin(u as usize), cfg.spin(v as usize));
        let a = su[0].abs() * sv[0].abs();
        let s: f64 = su[1..].iter().zip(&sv[1..]).map(|(x, y)| x * y).sum();
        let j = match (pot.eval(a + s), pot.eval(-a + s)) {
            (Some(p), Some(m)) => -0.5 * p + 0.5 * m,
            (Some(_), None) => f64::INFINITY,
            (None, Some(_)) => f64::NEG_INFINITY,
            (None, None) => bail!(Precondition, "U is infinite at both arguments on edge ({u},{v})"),
        };
        entries.push(((u, v), j));
    }
    if pot.is_non_increasing() {
        CouplingConstants::new(entries)
    } else {
        Ok(CouplingConstants::new_signed(entries))
    }
}
