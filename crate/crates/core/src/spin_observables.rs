//! Observables of the spin O(n) model: two-point functions, Fourier modes and
//! the infra-red bound, Gaussian domination ratios, vortices, the d-dimensional
//! infra-red integral, Aizenman's crossing experiment and decay-law fits.

use crate::error::{bail, Result};
use crate::lattice::TorusLattice;
use crate::spin_core::SpinConfig;
use crate::spin_samplers::ChainEstimate;
use crate::stats::{aic_least_squares, bessel_i_scaled, linear_fit, BlockAccumulator};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

// ---------------------------------------------------------------------------
// Two-point function
// ---------------------------------------------------------------------------

/// ρ_{x,y} = E⟨σ_x, σ_y⟩ from a sequence of samples (autocorrelation-aware
/// error bar).
pub fn two_point(samples: &[SpinConfig], x: usize, y: usize, seed: u64, sweeps: u64) -> Result<ChainEstimate> {
    if samples.is_empty() {
        bail!(InvalidArgument, "empty sample set");
    }
    let sites = samples[0].len();
    if x >= sites || y >= sites {
        bail!(OutOfRange, "vertex index out of range");
    }
    let series: Vec<f64> = samples.iter().map(|c| c.dot(x, y)).collect();
    ChainEstimate::from_series(&series, seed, sweeps)
}

// ---------------------------------------------------------------------------
// Fourier transforms on the torus
// ---------------------------------------------------------------------------

/// Multi-dimensional FFT over the (2L)^d torus in site-index order.
pub struct TorusFft {
    side: usize,
    d: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    line: Vec<Complex64>,
}

impl TorusFft {
    pub fn new(lat: &TorusLattice) -> TorusFft {
        let mut planner = FftPlanner::new();
        let side = lat.side();
        TorusFft {
            side,
            d: lat.d(),
            fwd: planner.plan_fft_forward(side),
            inv: planner.plan_fft_inverse(side),
            line: vec![Complex64::new(0.0, 0.0); side],
        }
    }

    /// In-place unnormalized transform: forward computes Σ_v f_v e^{−i⟨k,v⟩}.
    pub fn transform(&mut self, data: &mut [Complex64], inverse: bool) {
        let side = self.side;
        let total = side.pow(self.d as u32);
        assert_eq!(data.len(), total);
        let plan = if inverse { self.inv.clone() } else { self.fwd.clone() };
        for axis in 0..self.d {
            let stride = side.pow((self.d - 1 - axis) as u32);
            for base in 0..total {
                if (base / stride) % side != 0 {
                    continue;
                }
                for t in 0..side {
                    self.line[t] = data[base + t * stride];
                }
                plan.process(&mut self.line);
                for t in 0..side {
                    data[base + t * stride] = self.line[t];
                }
            }
        }
    }
}

/// The wave vector k ∈ Λ* = (π/L)·{−L+1,…,L}^d of a mode index (same layout as
/// site indices; digit m ↦ πm/L folded into (−π, π]).
pub fn mode_wavevector(lat: &TorusLattice, idx: usize) -> Vec<f64> {
    let l = lat.l() as f64;
    lat.digits(idx)
        .into_iter()
        .map(|m| {
            let k = PI * m as f64 / l;
            if k > PI + 1e-12 {
                k - 2.0 * PI
            } else {
                k
            }
        })
        .collect()
}

/// λ_k = 2 Σ_j (1 − cos k_j).
pub fn laplacian_eigenvalue(k: &[f64]) -> f64 {
    2.0 * k.iter().map(|kj| 1.0 - kj.cos()).sum::<f64>()
}

/// (Δf)_u = Σ_{v∼u} (f_v − f_u).
pub fn apply_laplacian(lat: &TorusLattice, f: &[Complex64]) -> Vec<Complex64> {
    (0..lat.len())
        .map(|u| lat.neighbors(u).iter().map(|&v| f[v as usize] - f[u]).sum())
        .collect()
}

/// The Fourier basis element F^k_u = e^{i⟨k,u⟩} with u in coordinates {−L+1,…,L}^d.
pub fn fourier_basis(lat: &TorusLattice, k: &[f64]) -> Vec<Complex64> {
    (0..lat.len())
        .map(|u| {
            let phase: f64 = lat.coords(u).iter().zip(k).map(|(&x, &kj)| x as f64 * kj).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Fourier coefficients σ̂^j_k for every component j (outer) and mode index k.
/// Coefficients use coordinates {−L+1,…,L}^d, so they differ from the raw
/// transform over digits by the phase e^{i⟨k,(L−1)·1⟩}.
pub fn fourier_modes(cfg: &SpinConfig, lat: &TorusLattice, fft: &mut TorusFft) -> Vec<Vec<Complex64>> {
    let n = cfg.n();
    let shift = lat.l() as f64 - 1.0;
    (0..n)
        .map(|j| {
            let mut data: Vec<Complex64> = (0..lat.len()).map(|v| Complex64::new(cfg.spin(v)[j], 0.0)).collect();
            fft.transform(&mut data, false);
            for (idx, z) in data.iter_mut().enumerate() {
                let k = mode_wavevector(lat, idx);
                let phase: f64 = k.iter().map(|kj| kj * shift).sum();
                *z *= Complex64::from_polar(1.0, phase);
            }
            data
        })
        .collect()
}

/// Relative deviation from Parseval's identity Σ_{j,k}|σ̂^j_k|² = |Λ|·Σ_v‖σ_v‖².
pub fn parseval_error(cfg: &SpinConfig, lat: &TorusLattice, fft: &mut TorusFft) -> f64 {
    let modes = fourier_modes(cfg, lat, fft);
    let lhs: f64 = modes.iter().flatten().map(|z| z.norm_sqr()).sum();
    let rhs: f64 = lat.len() as f64 * cfg.values().iter().map(|v| v * v).sum::<f64>();
    (lhs - rhs).abs() / rhs
}

/// |σ̂^j_k|² for every component and mode, flattened as j·|Λ| + k.
fn mode_powers(cfg: &SpinConfig, lat: &TorusLattice, fft: &mut TorusFft) -> Vec<f64> {
    let mut out = Vec::with_capacity(cfg.n() * lat.len());
    for j in 0..cfg.n() {
        let mut data: Vec<Complex64> = (0..lat.len()).map(|v| Complex64::new(cfg.spin(v)[j], 0.0)).collect();
        fft.transform(&mut data, false);
        out.extend(data.iter().map(|z| z.norm_sqr()));
    }
    out
}

// ---------------------------------------------------------------------------
// Correlation profiles via FFT
// ---------------------------------------------------------------------------

/// Translation-averaged correlation C(r) = |Λ|⁻¹ Σ_v ⟨σ_v, σ_{v+r}⟩ for every
/// displacement r (indexed like sites, digit offsets), accumulated in blocks.
pub struct CorrelationAccumulator {
    lat: TorusLattice,
    fft: TorusFft,
    acc: BlockAccumulator,
}

impl CorrelationAccumulator {
    pub fn new(lat: &TorusLattice, block_size: usize) -> CorrelationAccumulator {
        CorrelationAccumulator { lat: lat.clone(), fft: TorusFft::new(lat), acc: BlockAccumulator::new(lat.len(), block_size) }
    }

    /// C(r) for one configuration.
    pub fn profile_of(&mut self, cfg: &SpinConfig) -> Vec<f64> {
        let vol = self.lat.len();
        let mut total = vec![Complex64::new(0.0, 0.0); vol];
        for j in 0..cfg.n() {
            let mut data: Vec<Complex64> = (0..vol).map(|v| Complex64::new(cfg.spin(v)[j], 0.0)).collect();
            self.fft.transform(&mut data, false);
            for (t, z) in total.iter_mut().zip(&data) {
                *t += z.norm_sqr();
            }
        }
        self.fft.transform(&mut total, true);
        let norm = (vol as f64).powi(2);
        total.iter().map(|z| z.re / norm).collect()
    }

    pub fn push(&mut self, cfg: &SpinConfig) {
        let p = self.profile_of(cfg);
        self.acc.push(&p);
    }

    pub fn samples(&self) -> usize {
        self.acc.count() as usize
    }

    /// Mean and jackknife error of C(r) for every displacement index.
    pub fn profile(&self) -> (Vec<f64>, Vec<f64>) {
        self.acc.mean_stderr()
    }

    /// Axis profile (r, ρ(r), stderr) for r = 0..=max_r, averaging the d axis
    /// directions and both orientations of each.
    pub fn axis_profile(&self, max_r: usize) -> Vec<(usize, f64, f64)> {
        let side = self.lat.side();
        let d = self.lat.d();
        let max_r = max_r.min(side / 2);
        // derived observable per block: average of the 2d entries at distance r
        let idx_for = |r: usize| -> Vec<usize> {
            let mut v = Vec::new();
            for axis in 0..d {
                for &m in &[r % side, (side - r) % side] {
                    let mut digits = vec![0usize; d];
                    digits[axis] = m;
                    v.push(self.lat.index_of_digits(&digits));
                }
            }
            v
        };
        (0..=max_r)
            .map(|r| {
                let ids = idx_for(r);
                let blocks: Vec<(Vec<f64>, f64)> = self
                    .acc
                    .blocks()
                    .iter()
                    .map(|(s, c)| (vec![ids.iter().map(|&i| s[i]).sum::<f64>() / ids.len() as f64], *c))
                    .collect();
                let (m, se) = crate::stats::jackknife(&blocks, |s, c| s[0] / c);
                (r, m, se)
            })
            .collect()
    }

    /// max over displacements with ‖r‖₁ ≥ ℓ of the mean correlation, with its
    /// error and the displacement index.
    pub fn max_at_distance(&self, ell: usize) -> (f64, f64, usize) {
        let (m, se) = self.profile();
        let mut best = (f64::NEG_INFINITY, 0.0, 0usize);
        for r in 0..self.lat.len() {
            if self.lat.distance(0, r) >= ell && m[r] > best.0 {
                best = (m[r], se[r], r);
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Infra-red bound
// ---------------------------------------------------------------------------

/// Per-mode infra-red report entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfraredEntry {
    pub k: Vec<f64>,
    pub component: usize,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub z_score: f64,
    pub flagged: bool,
}

/// Full infra-red check result.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InfraredReport {
    pub beta: f64,
    pub samples: usize,
    pub entries: Vec<InfraredEntry>,
    pub n_flagged: usize,
    pub max_z: f64,
}

/// Accumulates |σ̂^j_k|² over samples in contiguous blocks.
pub struct InfraredAccumulator {
    lat: TorusLattice,
    n: usize,
    fft: TorusFft,
    acc: BlockAccumulator,
}

impl InfraredAccumulator {
    pub fn new(lat: &TorusLattice, n: usize, block_size: usize) -> InfraredAccumulator {
        InfraredAccumulator { lat: lat.clone(), n, fft: TorusFft::new(lat), acc: BlockAccumulator::new(n * lat.len(), block_size) }
    }
    pub fn push(&mut self, cfg: &SpinConfig) {
        let p = mode_powers(cfg, &self.lat, &mut self.fft);
        self.acc.push(&p);
    }
    /// Compares E|σ̂^j_k|² to |Λ|/(βλ_k) for every k ≠ 0 and component j;
    /// entries exceeding the bound by more than 4σ are flagged.
    pub fn report(&self, beta: f64) -> Result<InfraredReport> {
        if !(beta > 0.0) {
            bail!(InvalidArgument, "the infra-red bound needs β > 0");
        }
        let (m, se) = self.acc.mean_stderr();
        let vol = self.lat.len();
        let mut entries = Vec::new();
        for j in 0..self.n {
            for idx in 1..vol {
                let k = mode_wavevector(&self.lat, idx);
                let lam = laplacian_eigenvalue(&k);
                let bound = vol as f64 / (beta * lam);
                let est = m[j * vol + idx];
                let s = se[j * vol + idx];
                let z = if s > 0.0 {
                    (est - bound) / s
                } else if est > bound {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
                entries.push(InfraredEntry { k, component: j, estimate: est, std_error: s, bound, z_score: z, flagged: z > 4.0 });
            }
        }
        let n_flagged = entries.iter().filter(|e| e.flagged).count();
        let max_z = entries.iter().map(|e| e.z_score).fold(f64::NEG_INFINITY, f64::max);
        Ok(InfraredReport { beta, samples: self.acc.count() as usize, entries, n_flagged, max_z })
    }
}

// ---------------------------------------------------------------------------
// Gaussian domination
// ---------------------------------------------------------------------------

/// A real n-vector field τ on the torus (flattened, n entries per vertex).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauField {
    pub n: usize,
    pub values: Vec<f64>,
}

impl TauField {
    pub fn constant(n: usize, sites: usize, v: &[f64]) -> TauField {
        TauField { n, values: (0..sites).flat_map(|_| v.iter().copied()).collect() }
    }
    /// τ = v at one vertex, 0 elsewhere.
    pub fn delta(n: usize, sites: usize, site: usize, v: &[f64]) -> TauField {
        let mut values = vec![0.0; n * sites];
        values[site * n..(site + 1) * n].copy_from_slice(v);
        TauField { n, values }
    }
    /// τ_u = a·cos⟨k,u⟩·e_j (real part of a single Fourier mode).
    pub fn fourier_mode(lat: &TorusLattice, n: usize, k: &[f64], j: usize, a: f64) -> TauField {
        let mut values = vec![0.0; n * lat.len()];
        for u in 0..lat.len() {
            let phase: f64 = lat.coords(u).iter().zip(k).map(|(&x, &kj)| x as f64 * kj).sum();
            values[u * n + j] = a * phase.cos();
        }
        TauField { n, values }
    }
    /// Independent uniform entries in [−a, a].
    pub fn random(n: usize, sites: usize, a: f64, rng: &mut crate::rng::Rng) -> TauField {
        use rand::Rng as _;
        TauField { n, values: (0..n * sites).map(|_| rng.gen_range(-a..=a)).collect() }
    }
    pub fn at(&self, v: usize) -> &[f64] {
        &self.values[v * self.n..(v + 1) * self.n]
    }
}

/// W(σ+τ)/W(σ) = exp[−β Σ_{u∼v} (⟨σ_u−σ_v, τ_u−τ_v⟩ + ½‖τ_u−τ_v‖²)].
pub fn gaussian_domination_ratio(cfg: &SpinConfig, lat: &TorusLattice, beta: f64, tau: &TauField) -> f64 {
    let n = cfg.n();
    let mut s = 0.0;
    for &[u, v] in lat.edges() {
        let (u, v) = (u as usize, v as usize);
        let (su, sv, tu, tv) = (cfg.spin(u), cfg.spin(v), tau.at(u), tau.at(v));
        for j in 0..n {
            let dt = tu[j] - tv[j];
            s += (su[j] - sv[j]) * dt + 0.5 * dt * dt;
        }
    }
    (-beta * s).exp()
}

/// Estimate of E[W(σ+τ)/W(σ)] (≤ 1 by Gaussian domination).
pub fn gaussian_domination_estimate(
    samples: &[SpinConfig],
    lat: &TorusLattice,
    beta: f64,
    tau: &TauField,
    seed: u64,
    sweeps: u64,
) -> Result<ChainEstimate> {
    if samples.is_empty() {
        bail!(InvalidArgument, "empty sample set");
    }
    if tau.n != samples[0].n() || tau.values.len() != tau.n * lat.len() {
        bail!(InvalidArgument, "τ field does not match the configuration shape");
    }
    let series: Vec<f64> = samples.iter().map(|c| gaussian_domination_ratio(c, lat, beta, tau)).collect();
    ChainEstimate::from_series(&series, seed, sweeps)
}

// ---------------------------------------------------------------------------
// Vortices
// ---------------------------------------------------------------------------

/// Folds an angle into [−π, π).
pub fn fold_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y >= PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Vorticity s_P/2π ∈ {−1, 0, 1} per plaquette; plaquette p has lower-left
/// corner at site p (coordinates (x, y) ↦ corners (x,y),(x,y+1),(x+1,y+1),(x+1,y)
/// traversed clockwise).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VortexField {
    pub side: usize,
    pub values: Vec<i8>,
}

impl VortexField {
    pub fn n_vortices(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }
    pub fn total(&self) -> i64 {
        self.values.iter().map(|&v| v as i64).sum()
    }
}

/// Computes the vortex field of a two-dimensional O(2) configuration.
pub fn vortex_field(cfg: &SpinConfig, lat: &TorusLattice) -> Result<VortexField> {
    if cfg.n() != 2 || lat.d() != 2 {
        bail!(InvalidArgument, "vortices are defined for n = 2 on two-dimensional tori");
    }
    let angles = cfg.angles().expect("n = 2");
    let side = lat.side();
    let id = |x: usize, y: usize| lat.index_of_digits(&[x % side, y % side]);
    let mut values = vec![0i8; lat.len()];
    for x in 0..side {
        for y in 0..side {
            let cyc = [id(x, y), id(x, y + 1), id(x + 1, y + 1), id(x + 1, y)];
            let s: f64 = (0..4).map(|i| fold_angle(angles[cyc[(i + 1) % 4]] - angles[cyc[i]])).sum();
            let w = (s / (2.0 * PI)).round();
            if (s - w * 2.0 * PI).abs() > 1e-6 || w.abs() > 1.0 {
                bail!(Numerical, "plaquette sum {s} is not a multiple of 2π in {{−2π, 0, 2π}}");
            }
            values[id(x, y)] = w as i8;
        }
    }
    Ok(VortexField { side, values })
}

// ---------------------------------------------------------------------------
// The d-dimensional infra-red integral
// ---------------------------------------------------------------------------

/// Result of evaluating ∫_{[0,1]^d} dt / Σ_j (1 − cos πt_j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrIntegral {
    pub d: usize,
    pub value: f64,
    pub divergent: bool,
    pub coarse: f64,
    pub fine: f64,
    pub convergence: f64,
    pub method: String,
}

/// Evaluates the infra-red integral through 1/a = ∫_0^∞ e^{−sa} ds, which
/// factorizes it into I(d) = ∫_0^∞ (e^{−s} I_0(s))^d ds. The one-dimensional
/// integral is computed by the trapezoid rule in log s with `grid` and
/// 2·`grid` nodes (reported as coarse/fine) plus an asymptotic tail.
pub fn ir_integral(d: usize, grid: usize) -> Result<IrIntegral> {
    if d == 0 {
        bail!(InvalidArgument, "dimension must be positive");
    }
    if grid < 64 {
        bail!(InvalidArgument, "grid must be at least 64");
    }
    if d <= 2 {
        return Ok(IrIntegral {
            d,
            value: f64::INFINITY,
            divergent: true,
            coarse: f64::INFINITY,
            fine: f64::INFINITY,
            convergence: f64::NAN,
            method: "divergent for d <= 2".into(),
        });
    }
    let (y0, y1) = (-40.0f64, 40.0f64);
    let df = d as f64;
    let integrate = |nodes: usize| -> f64 {
        let h = (y1 - y0) / nodes as f64;
        let mut sum = 0.0;
        for i in 0..=nodes {
            let y = y0 + i as f64 * h;
            let s = y.exp();
            let f = s * bessel_i_scaled(0, s).powf(df);
            sum += if i == 0 || i == nodes { 0.5 * f } else { f };
        }
        // tail beyond S: (2πs)^{−d/2}(1 + d/(8s)) integrated analytically
        let big_s = y1.exp();
        let c = (2.0 * PI).powf(-df / 2.0);
        let tail = c * (big_s.powf(1.0 - df / 2.0) / (df / 2.0 - 1.0) + df / 8.0 * big_s.powf(-df / 2.0) / (df / 2.0));
        sum * h + tail
    };
    let coarse = integrate(grid * 16);
    let fine = integrate(grid * 32);
    Ok(IrIntegral {
        d,
        value: fine,
        divergent: false,
        coarse,
        fine,
        convergence: (fine - coarse).abs(),
        method: "laplace-transform bessel quadrature".into(),
    })
}

/// Direct product midpoint rule on a grid^d mesh with Richardson
/// extrapolation (error ∝ h for the 1/‖t‖² singularity); feasible for small d.
pub fn ir_integral_midpoint(d: usize, grid: usize) -> Result<f64> {
    if d < 3 {
        bail!(InvalidArgument, "the midpoint rule needs d >= 3");
    }
    if (grid as f64).powi(d as i32) > 5e8 {
        bail!(InvalidArgument, "grid too large for direct quadrature");
    }
    let rule = |g: usize| -> f64 {
        let h = 1.0 / g as f64;
        let c: Vec<f64> = (0..g).map(|i| 1.0 - (PI * (i as f64 + 0.5) * h).cos()).collect();
        let total = g.pow(d as u32);
        let mut sum = 0.0;
        for idx in 0..total {
            let mut r = idx;
            let mut den = 0.0;
            for _ in 0..d {
                den += c[r % g];
                r /= g;
            }
            sum += 1.0 / den;
        }
        sum * h.powi(d as i32)
    };
    let a = rule(grid / 2);
    let b = rule(grid);
    Ok(2.0 * b - a)
}

// ---------------------------------------------------------------------------
// Aizenman's crossing experiment
// ---------------------------------------------------------------------------

/// Aggregated result of the crossing experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AizenmanReport {
    pub ell: usize,
    pub samples: usize,
    pub p_e: f64,
    pub p_f: f64,
    pub p_e_or_f: f64,
    /// Samples in which neither crossing occurred (must be zero).
    pub duality_failures: usize,
    pub max_correlation: f64,
    pub max_correlation_stderr: f64,
    pub max_correlation_displacement: Vec<i64>,
    pub bound: f64,
    pub vortices: usize,
}

/// Crossing indicators (E, F) for one configuration: E = top–bottom crossing
/// of R = {1..ℓ}² by V₀ = {|σ¹| ≥ 1/√2} in ⊠-adjacency, F = left–right
/// crossing by R ∖ V₀ in nearest-neighbour adjacency.
pub fn crossing_events(cfg: &SpinConfig, lat: &TorusLattice, ell: usize) -> Result<(bool, bool)> {
    if lat.d() != 2 || cfg.n() < 1 {
        bail!(InvalidArgument, "crossing events live on two-dimensional tori");
    }
    if ell == 0 || ell > lat.l() {
        bail!(InvalidArgument, "ℓ must satisfy 1 ≤ ℓ ≤ L");
    }
    let thr = 0.5f64.sqrt();
    let site = |a: usize, b: usize| lat.index(&[a as i64, b as i64]).expect("inside R");
    let in_v0 = |a: usize, b: usize| cfg.spin(site(a, b))[0].abs() >= thr - 1e-12;
    let cross = |member: &dyn Fn(usize, usize) -> bool, diag: bool, vertical: bool| -> bool {
        let mut seen = vec![false; ell * ell];
        let mut stack = Vec::new();
        for t in 1..=ell {
            let (a, b) = if vertical { (t, 1) } else { (1, t) };
            if member(a, b) {
                seen[(a - 1) * ell + (b - 1)] = true;
                stack.push((a, b));
            }
        }
        while let Some((a, b)) = stack.pop() {
            if (vertical && b == ell) || (!vertical && a == ell) {
                return true;
            }
            for da in -1i64..=1 {
                for db in -1i64..=1 {
                    if (da == 0 && db == 0) || (!diag && da != 0 && db != 0) {
                        continue;
                    }
                    let (na, nb) = (a as i64 + da, b as i64 + db);
                    if na < 1 || nb < 1 || na > ell as i64 || nb > ell as i64 {
                        continue;
                    }
                    let (na, nb) = (na as usize, nb as usize);
                    if !seen[(na - 1) * ell + (nb - 1)] && member(na, nb) {
                        seen[(na - 1) * ell + (nb - 1)] = true;
                        stack.push((na, nb));
                    }
                }
            }
        }
        false
    };
    let e = cross(&in_v0, true, true);
    let f = cross(&|a, b| !in_v0(a, b), false, false);
    Ok((e, f))
}

/// Streams samples of the hard-support XY model through the crossing and
/// correlation diagnostics.
pub struct AizenmanAccumulator {
    lat: TorusLattice,
    ell: usize,
    corr: CorrelationAccumulator,
    n: usize,
    e: usize,
    f: usize,
    e_or_f: usize,
    failures: usize,
    vortices: usize,
}

impl AizenmanAccumulator {
    pub fn new(lat: &TorusLattice, ell: usize, block_size: usize) -> Result<AizenmanAccumulator> {
        if lat.d() != 2 || ell == 0 || ell > lat.l() {
            bail!(InvalidArgument, "need a two-dimensional torus and 1 ≤ ℓ ≤ L");
        }
        Ok(AizenmanAccumulator {
            lat: lat.clone(),
            ell,
            corr: CorrelationAccumulator::new(lat, block_size),
            n: 0,
            e: 0,
            f: 0,
            e_or_f: 0,
            failures: 0,
            vortices: 0,
        })
    }
    pub fn push(&mut self, cfg: &SpinConfig) -> Result<()> {
        let (e, f) = crossing_events(cfg, &self.lat, self.ell)?;
        self.n += 1;
        self.e += e as usize;
        self.f += f as usize;
        self.e_or_f += (e || f) as usize;
        self.failures += (!e && !f) as usize;
        self.vortices += vortex_field(cfg, &self.lat)?.n_vortices();
        self.corr.push(cfg);
        Ok(())
    }
    pub fn report(&self) -> Result<AizenmanReport> {
        if self.n == 0 {
            bail!(InvalidArgument, "empty sample set");
        }
        let (m, se, r) = self.corr.max_at_distance(self.ell);
        let l = self.lat.l() as i64;
        let disp: Vec<i64> = self.lat.digits(r).iter().map(|&x| if x as i64 > l { x as i64 - 2 * l } else { x as i64 }).collect();
        let n = self.n as f64;
        Ok(AizenmanReport {
            ell: self.ell,
            samples: self.n,
            p_e: self.e as f64 / n,
            p_f: self.f as f64 / n,
            p_e_or_f: self.e_or_f as f64 / n,
            duality_failures: self.failures,
            max_correlation: m,
            max_correlation_stderr: se,
            max_correlation_displacement: disp,
            bound: 1.0 / (2.0 * (self.ell as f64).powi(2)),
            vortices: self.vortices,
        })
    }
}

// ---------------------------------------------------------------------------
// Decay-law model selection
// ---------------------------------------------------------------------------

/// Exponential (ρ ≈ A e^{−r/ξ}) versus power-law (ρ ≈ A r^{−η}) fit of a
/// correlation profile, by weighted least squares on log ρ and AIC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub points: usize,
    pub exp_amplitude: f64,
    pub exp_length: f64,
    pub exp_aic: f64,
    pub pow_amplitude: f64,
    pub pow_exponent: f64,
    pub pow_aic: f64,
    /// "exponential" or "power".
    pub preferred: String,
}

/// Points whose value is below this many standard errors are noise: the
/// linearisation ln ρ ± stderr/ρ behind the weights no longer holds.
pub const DECAY_MIN_SIGNIFICANCE: f64 = 3.0;

/// Fits profile points (r, ρ, stderr) ordered by r. The fit window is the
/// contiguous run from r = 1 of points with ρ ≥ 3·stderr (and ρ > 0); it
/// ends at the first point lost in the noise.
pub fn decay_fit(profile: &[(usize, f64, f64)]) -> Result<DecayFit> {
    let pts: Vec<&(usize, f64, f64)> = profile
        .iter()
        .filter(|p| p.0 >= 1)
        .take_while(|p| p.1 > 0.0 && p.1 >= DECAY_MIN_SIGNIFICANCE * p.2)
        .collect();
    if pts.len() < 3 {
        bail!(InvalidArgument, "need at least three positive profile points");
    }
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let w: Vec<f64> = pts.iter().map(|p| if p.2 > 0.0 { (p.1 / p.2).powi(2) } else { 1e12 }).collect();
    let xr: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
    let xl: Vec<f64> = xr.iter().map(|r| r.ln()).collect();
    let (a1, b1, rss1) = linear_fit(&xr, &y, &w);
    let (a2, b2, rss2) = linear_fit(&xl, &y, &w);
    let n = pts.len();
    let exp_aic = aic_least_squares(rss1, n, 2);
    let pow_aic = aic_least_squares(rss2, n, 2);
    Ok(DecayFit {
        points: n,
        exp_amplitude: a1.exp(),
        exp_length: -1.0 / b1,
        exp_aic,
        pow_amplitude: a2.exp(),
        pow_exponent: -b2,
        pow_aic,
        preferred: if exp_aic < pow_aic { "exponential".into() } else { "power".into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    #[test]
    fn eigenvalue_endpoints() {
        assert_eq!(laplacian_eigenvalue(&[0.0, 0.0, 0.0]), 0.0);
        assert!((laplacian_eigenvalue(&[PI, PI, PI]) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_basis_is_laplacian_eigenvector() {
        let lat = TorusLattice::new(3, 3).unwrap();
        let mut r = make_rng(4, 0);
        use rand::Rng as _;
        for _ in 0..5 {
            let idx = r.gen_range(0..lat.len());
            let k = mode_wavevector(&lat, idx);
            let f = fourier_basis(&lat, &k);
            let lf = apply_laplacian(&lat, &f);
            let lam = laplacian_eigenvalue(&k);
            let err = lf.iter().zip(&f).map(|(a, b)| (a + b * lam).norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "err={err}");
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let mut r = make_rng(5, 0);
        let cfg = SpinConfig::random(2, lat.len(), &mut r);
        let mut fft = TorusFft::new(&lat);
        let modes = fourier_modes(&cfg, &lat, &mut fft);
        for idx in 0..lat.len() {
            let k = mode_wavevector(&lat, idx);
            let f = fourier_basis(&lat, &k);
            for j in 0..2 {
                let direct: Complex64 = (0..lat.len()).map(|v| f[v].conj() * cfg.spin(v)[j]).sum();
                assert!((direct - modes[j][idx]).norm() < 1e-9);
            }
        }
        assert!(parseval_error(&cfg, &lat, &mut fft) < 1e-12);
    }

    #[test]
    fn correlation_profile_matches_direct() {
        let lat = TorusLattice::new(2, 3).unwrap();
        let mut r = make_rng(6, 0);
        let cfg = SpinConfig::random(3, lat.len(), &mut r);
        let mut acc = CorrelationAccumulator::new(&lat, 1);
        let p = acc.profile_of(&cfg);
        assert!((p[0] - 1.0).abs() < 1e-12);
        let disp = lat.index_of_digits(&[1, 2]);
        let direct: f64 = (0..lat.len())
            .map(|v| {
                let dv = lat.digits(v);
                let w = lat.index_of_digits(&[dv[0] + 1, dv[1] + 2]);
                cfg.dot(v, w)
            })
            .sum::<f64>()
            / lat.len() as f64;
        assert!((p[disp] - direct).abs() < 1e-12);
    }

    #[test]
    fn gaussian_ratio_constant_tau_is_one() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let mut r = make_rng(7, 0);
        let cfg = SpinConfig::random(2, lat.len(), &mut r);
        let tau = TauField::constant(2, lat.len(), &[0.3, -1.2]);
        assert!((gaussian_domination_ratio(&cfg, &lat, 1.3, &tau) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vortex_examples() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let cfg = SpinConfig::from_angles(&vec![0.3; lat.len()]);
        assert_eq!(vortex_field(&cfg, &lat).unwrap().n_vortices(), 0);
        // angles 0, π/2, π, 3π/2 clockwise around the plaquette at digits (1,1)
        // (generic background angle: an exact difference of π is tie-broken to
        // −π in both orientations, which breaks antisymmetry on that edge)
        let mut ang = vec![0.1; lat.len()];
        let id = |x: usize, y: usize| lat.index_of_digits(&[x, y]);
        ang[id(1, 1)] = 0.0;
        ang[id(1, 2)] = PI / 2.0;
        ang[id(2, 2)] = PI;
        ang[id(2, 1)] = 1.5 * PI;
        let v = vortex_field(&SpinConfig::from_angles(&ang), &lat).unwrap();
        assert_eq!(v.values[id(1, 1)], 1);
        assert_eq!(v.total(), 0);
        assert_eq!(v.values.iter().filter(|&&x| x == 1).count(), 1);
        assert_eq!(v.values.iter().filter(|&&x| x == -1).count(), 1);
        // random configurations are neutral
        let mut r = make_rng(8, 0);
        for _ in 0..20 {
            let c = SpinConfig::random(2, lat.len(), &mut r);
            assert_eq!(vortex_field(&c, &lat).unwrap().total(), 0);
        }
        assert_eq!(fold_angle(PI), -PI);
        assert_eq!(fold_angle(-PI), -PI);
    }

    #[test]
    fn ir_integral_values() {
        assert!(ir_integral(2, 64).unwrap().divergent);
        let i3 = ir_integral(3, 256).unwrap();
        assert!((i3.value - 0.505462).abs() < 1e-5, "{i3:?}");
        assert!(i3.convergence < 1e-8);
        let i50 = ir_integral(50, 256).unwrap();
        assert!((i50.value * 50.0 - 1.0).abs() < 0.1, "{i50:?}");
    }

    #[test]
    fn crossing_duality_random_sets() {
        let lat = TorusLattice::new(2, 5).unwrap();
        let mut r = make_rng(9, 0);
        for _ in 0..200 {
            let cfg = SpinConfig::random(2, lat.len(), &mut r);
            for ell in 1..=5 {
                let (e, f) = crossing_events(&cfg, &lat, ell).unwrap();
                assert!(e || f);
            }
        }
    }

    #[test]
    fn decay_fit_recovers_laws() {
        let exp: Vec<(usize, f64, f64)> = (1..20).map(|r| (r, 2.0 * (-(r as f64) / 3.0).exp(), 1e-3)).collect();
        let f = decay_fit(&exp).unwrap();
        assert_eq!(f.preferred, "exponential");
        assert!((f.exp_length - 3.0).abs() < 1e-6);
        let pw: Vec<(usize, f64, f64)> = (1..20).map(|r| (r, 0.9 * (r as f64).powf(-0.25), 1e-3)).collect();
        let g = decay_fit(&pw).unwrap();
        assert_eq!(g.preferred, "power");
        assert!((g.pow_exponent - 0.25).abs() < 1e-6);
        // a noisy tail is cut at the first insignificant point
        let mut noisy = exp.clone();
        noisy[10].1 = 1e-4;
        assert_eq!(decay_fit(&noisy).unwrap().points, 10);
    }
}
