//! Markov-chain Monte Carlo for the spin O(n) model: single-site Metropolis,
//! Wolff cluster updates and a deterministic chain driver.

use crate::error::{bail, Error, Result};
use crate::lattice::TorusLattice;
use crate::rng::{make_rng, Rng, RNG_ALGORITHM};
use crate::spin_core::{energy, random_unit, Potential, SpinConfig};
use crate::stats::mean_stderr_tau;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Monte Carlo estimate of a scalar observable together with chain metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub autocorrelation_time_estimate: f64,
    pub seed: u64,
    pub sweeps: u64,
}

impl ChainEstimate {
    /// Estimate from a time series with autocorrelation-inflated error bars.
    pub fn from_series(series: &[f64], seed: u64, sweeps: u64) -> Result<ChainEstimate> {
        if series.is_empty() {
            bail!(InvalidArgument, "empty sample set");
        }
        let (mean, std_error, tau) = mean_stderr_tau(series);
        Ok(ChainEstimate { mean, std_error, n_samples: series.len(), autocorrelation_time_estimate: tau, seed, sweeps })
    }

    /// |a − b| / √(σ_a² + σ_b²).
    pub fn z_distance(&self, other: &ChainEstimate) -> f64 {
        let s = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        if s == 0.0 {
            if self.mean == other.mean {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - other.mean).abs() / s
        }
    }
}

/// Proposal for spin v: sign flip (n = 1) or a rotation by a uniform angle in
/// [−θ, θ] within a uniformly random 2-plane (n ≥ 2).
fn propose(cfg: &SpinConfig, v: usize, angle: f64, rng: &mut Rng, out: &mut Vec<f64>) {
    let n = cfg.n();
    let s = cfg.spin(v);
    out.clear();
    if n == 1 {
        out.push(-s[0]);
        return;
    }
    // random orthonormal pair (a, b) spanning the rotation plane
    let a: Vec<f64> = random_unit(n, rng);
    let mut b: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    loop {
        let p: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        for (bi, ai) in b.iter_mut().zip(&a) {
            *bi -= p * ai;
        }
        let norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            for bi in b.iter_mut() {
                *bi /= norm;
            }
            break;
        }
        b = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    }
    let phi = angle * (2.0 * rng.gen::<f64>() - 1.0);
    let (c, sn) = (phi.cos(), phi.sin());
    let pa: f64 = a.iter().zip(s).map(|(x, y)| x * y).sum();
    let pb: f64 = b.iter().zip(s).map(|(x, y)| x * y).sum();
    // rotate the (a,b) components of s
    let na = c * pa - sn * pb;
    let nb = sn * pa + c * pb;
    for i in 0..n {
        out.push(s[i] + (na - pa) * a[i] + (nb - pb) * b[i]);
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in out.iter_mut() {
        *x /= norm;
    }
}

/// Energy change of replacing σ_v by `new`; `None` if the proposal violates a
/// hard constraint.
fn delta_energy(cfg: &SpinConfig, lat: &TorusLattice, pot: &Potential, v: usize, new: &[f64]) -> Option<f64> {
    let old = cfg.spin(v);
    if let Some(beta) = pot.ferromagnetic_beta() {
        let mut d = 0.0;
        for &w in lat.neighbors(v) {
            let sw = cfg.spin(w as usize);
            d += sw.iter().zip(new.iter().zip(old)).map(|(a, (x, y))| a * (x - y)).sum::<f64>();
        }
        return Some(-beta * d);
    }
    let mut d = 0.0;
    for &w in lat.neighbors(v) {
        let sw = cfg.spin(w as usize);
        let rn: f64 = sw.iter().zip(new).map(|(a, b)| a * b).sum();
        let ro: f64 = sw.iter().zip(old).map(|(a, b)| a * b).sum();
        let un = pot.eval(rn)?;
        // an already-violated edge contributes "∞ − ∞"; treat leaving it as an improvement
        match pot.eval(ro) {
            Some(uo) => d += un - uo,
            None => d += un,
        }
    }
    Some(d)
}

/// One Metropolis proposal at site v. Returns whether it was accepted.
pub fn metropolis_site(cfg: &mut SpinConfig, lat: &TorusLattice, pot: &Potential, rng: &mut Rng, v: usize, proposal_angle: f64) -> bool {
    let mut buf = Vec::with_capacity(cfg.n());
    metropolis_site_buf(cfg, lat, pot, rng, v, proposal_angle, &mut buf)
}

fn metropolis_site_buf(
    cfg: &mut SpinConfig,
    lat: &TorusLattice,
    pot: &Potential,
    rng: &mut Rng,
    v: usize,
    proposal_angle: f64,
    buf: &mut Vec<f64>,
) -> bool {
    propose(cfg, v, proposal_angle, rng, buf);
    let accept = match delta_energy(cfg, lat, pot, v, buf) {
        None => false,
        Some(d) if d <= 0.0 => true,
        Some(d) => rng.gen::<f64>() < (-d).exp(),
    };
    if accept {
        cfg.set(v, buf);
    }
    accept
}

/// |V| single-site Metropolis proposals in a uniformly random order. Returns
/// the acceptance fraction.
pub fn metropolis_sweep(cfg: &mut SpinConfig, lat: &TorusLattice, pot: &Potential, rng: &mut Rng, proposal_angle: f64) -> f64 {
    let mut order: Vec<usize> = (0..lat.len()).collect();
    order.shuffle(rng);
    let mut buf = Vec::with_capacity(cfg.n());
    let mut acc = 0usize;
    for v in order {
        if metropolis_site_buf(cfg, lat, pot, rng, v, proposal_angle, &mut buf) {
            acc += 1;
        }
    }
    acc as f64 / lat.len() as f64
}

/// Reusable scratch space for Wolff updates.
#[derive(Clone, Debug)]
pub struct Wolff {
    in_cluster: Vec<bool>,
    stack: Vec<u32>,
    members: Vec<u32>,
}

impl Wolff {
    pub fn new(sites: usize) -> Wolff {
        Wolff { in_cluster: vec![false; sites], stack: Vec::new(), members: Vec::new() }
    }

    /// One cluster update for the ferromagnetic potential at β. The reflection
    /// hyperplane normal r is uniform on S^{n−1}; a neighbour w joins the cluster
    /// of u with probability 1 − exp(min(0, −2β⟨r,σ_u⟩⟨r,σ_w⟩)). Returns the
    /// cluster size.
    pub fn step(&mut self, cfg: &mut SpinConfig, lat: &TorusLattice, beta: f64, rng: &mut Rng) -> usize {
        let n = cfg.n();
        let r = random_unit(n, rng);
        let proj = |cfg: &SpinConfig, v: usize| -> f64 { cfg.spin(v).iter().zip(&r).map(|(a, b)| a * b).sum() };
        let seed = rng.gen_range(0..lat.len());
        self.members.clear();
        self.stack.clear();
        self.in_cluster[seed] = true;
        self.stack.push(seed as u32);
        // projections are taken before reflection; reflect members only at the end
        while let Some(u) = self.stack.pop() {
            let u = u as usize;
            self.members.push(u as u32);
            let pu = proj(cfg, u);
            for &w in lat.neighbors(u) {
                let w = w as usize;
                if self.in_cluster[w] {
                    continue;
                }
                let x = -2.0 * beta * pu * proj(cfg, w);
                if x < 0.0 && rng.gen::<f64>() < 1.0 - x.exp() {
                    self.in_cluster[w] = true;
                    self.stack.push(w as u32);
                }
            }
        }
        for &u in &self.members {
            let u = u as usize;
            let pu = proj(cfg, u);
            let s = cfg.spin_mut(u);
            for (si, ri) in s.iter_mut().zip(&r) {
                *si -= 2.0 * pu * ri;
            }
            cfg.normalize(u);
            self.in_cluster[u] = false;
        }
        self.members.len()
    }
}

/// One Wolff update (allocating convenience wrapper).
pub fn wolff_step(cfg: &mut SpinConfig, lat: &TorusLattice, beta: f64, rng: &mut Rng) -> usize {
    Wolff::new(lat.len()).step(cfg, lat, beta, rng)
}

/// Update schedule of one "sweep" of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    /// One Metropolis sweep; the proposal angle is tuned during burn-in when
    /// `auto_tune` is set (target acceptance 40–60%) and frozen afterwards.
    Metropolis { proposal_angle: f64, auto_tune: bool },
    /// `steps` Wolff cluster updates (ferromagnetic potentials only).
    Wolff { steps: usize },
    /// One Metropolis sweep followed by `wolff_steps` Wolff updates.
    Mixed { proposal_angle: f64, auto_tune: bool, wolff_steps: usize },
}

/// Chain schedule and seeding.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub sampler: Sampler,
    pub potential: Potential,
    pub burn_in: usize,
    pub thinning: usize,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
}

/// Output of [`run_chain`].
#[derive(Clone, Debug)]
pub struct ChainRun {
    /// Column names: sweep, energy, magnetization_norm, observable_1, …
    pub columns: Vec<String>,
    /// One row per recorded sample, in column order.
    pub rows: Vec<Vec<f64>>,
    /// Estimates for every column except `sweep`.
    pub estimates: Vec<ChainEstimate>,
    pub acceptance: f64,
    pub mean_cluster_size: f64,
    pub proposal_angle: f64,
    pub sweeps: u64,
    pub final_config: SpinConfig,
    pub rng_algorithm: &'static str,
}

impl ChainRun {
    /// Estimate for a named column.
    pub fn estimate(&self, column: &str) -> Option<&ChainEstimate> {
        let i = self.columns.iter().position(|c| c == column)?;
        i.checked_sub(1).and_then(|k| self.estimates.get(k))
    }
}

/// Runs a chain: `burn_in` sweeps, then `samples` recordings every `thinning`
/// sweeps. `extract` returns extra observables per recorded sample; `sink`
/// receives every row as it is produced. Deterministic in (seed, stream).
pub fn run_chain<F>(
    lat: &TorusLattice,
    init: SpinConfig,
    spec: &ChainSpec,
    mut extract: F,
    mut sink: Option<&mut dyn FnMut(&[f64]) -> Result<()>>,
) -> Result<ChainRun>
where
    F: FnMut(&SpinConfig) -> Result<Vec<f64>>,
{
    if spec.samples == 0 || spec.thinning == 0 {
        bail!(InvalidArgument, "chain needs samples > 0 and thinning > 0");
    }
    if init.len() != lat.len() {
        bail!(InvalidArgument, "initial configuration does not match the torus");
    }
    let beta = spec.potential.ferromagnetic_beta();
    let (angle0, tune, wolff_steps, metro) = match spec.sampler {
        Sampler::Metropolis { proposal_angle, auto_tune } => (proposal_angle, auto_tune, 0, true),
        Sampler::Wolff { steps } => (std::f64::consts::PI, false, steps, false),
        Sampler::Mixed { proposal_angle, auto_tune, wolff_steps } => (proposal_angle, auto_tune, wolff_steps, true),
    };
    if metro && !(angle0 > 0.0 && angle0 <= std::f64::consts::PI) {
        bail!(InvalidArgument, "proposal angle must lie in (0, π]");
    }
    if wolff_steps > 0 && beta.map_or(true, |b| b < 0.0) {
        bail!(Precondition, "Wolff updates require a ferromagnetic potential with β ≥ 0");
    }
    let mut rng = make_rng(spec.seed, spec.stream);
    let mut cfg = init;
    let mut wolff = Wolff::new(lat.len());
    let mut angle = angle0;
    let (mut acc_sum, mut acc_n) = (0.0, 0usize);
    let (mut cl_sum, mut cl_n) = (0usize, 0usize);
    let mut sweeps: u64 = 0;
    let mut do_sweep = |cfg: &mut SpinConfig, angle: f64, rng: &mut Rng, record: bool| -> f64 {
        let mut acc = f64::NAN;
        if metro {
            acc = metropolis_sweep(cfg, lat, &spec.potential, rng, angle);
        }
        for _ in 0..wolff_steps {
            let c = wolff.step(cfg, lat, beta.unwrap_or(0.0), rng);
            if record {
                cl_sum += c;
                cl_n += 1;
            }
        }
        acc
    };
    for _ in 0..spec.burn_in {
        let acc = do_sweep(&mut cfg, angle, &mut rng, false);
        sweeps += 1;
        if tune && cfg.n() >= 2 {
            if acc > 0.6 {
                angle = (angle * 1.1).min(std::f64::consts::PI);
            } else if acc < 0.4 {
                angle *= 0.9;
            }
        }
    }
    let mut columns = vec!["sweep".to_string(), "energy".to_string(), "magnetization_norm".to_string()];
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(spec.samples);
    for s in 0..spec.samples {
        for _ in 0..spec.thinning {
            let acc = do_sweep(&mut cfg, angle, &mut rng, true);
            sweeps += 1;
            if metro {
                acc_sum += acc;
                acc_n += 1;
            }
        }
        let obs = extract(&cfg).map_err(|e| {
            Error::Observable(format!("extractor failed at sample {s} (sweep {sweeps}, {} rows recorded): {e}", rows.len()))
        })?;
        if s == 0 {
            columns.extend((1..=obs.len()).map(|i| format!("observable_{i}")));
        } else if columns.len() != 3 + obs.len() {
            bail!(Observable, "extractor returned {} values at sample {s}, expected {}", obs.len(), columns.len() - 3);
        }
        let mut row = Vec::with_capacity(columns.len());
        row.push(sweeps as f64);
        row.push(energy(&cfg, lat, &spec.potential)?);
        row.push(cfg.magnetization_norm());
        row.extend(obs);
        if let Some(f) = sink.as_mut() {
            f(&row)?;
        }
        rows.push(row);
    }
    let mut estimates = Vec::with_capacity(columns.len() - 1);
    for c in 1..columns.len() {
        let series: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        estimates.push(ChainEstimate::from_series(&series, spec.seed, sweeps)?);
    }
    Ok(ChainRun {
        columns,
        rows,
        estimates,
        acceptance: if acc_n > 0 { acc_sum / acc_n as f64 } else { f64::NAN },
        mean_cluster_size: if cl_n > 0 { cl_sum as f64 / cl_n as f64 } else { f64::NAN },
        proposal_angle: angle,
        sweeps,
        final_config: cfg,
        rng_algorithm: RNG_ALGORITHM,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_beta_accepts_everything() {
        let lat = TorusLattice::new(2, 3).unwrap();
        let mut r = make_rng(1, 0);
        for n in [1, 2, 3] {
            let mut c = SpinConfig::random(n, lat.len(), &mut r);
            let a = metropolis_sweep(&mut c, &lat, &Potential::Ferromagnetic(0.0), &mut r, 1.0);
            assert_eq!(a, 1.0);
            assert!(c.max_norm_error() < 1e-12);
        }
    }

    #[test]
    fn wolff_zero_beta_cluster_is_single_site() {
        let lat = TorusLattice::new(2, 4).unwrap();
        let mut r = make_rng(2, 0);
        let mut c = SpinConfig::random(2, lat.len(), &mut r);
        let mut w = Wolff::new(lat.len());
        for _ in 0..200 {
            assert_eq!(w.step(&mut c, &lat, 0.0, &mut r), 1);
        }
    }

    #[test]
    fn hard_support_chain_stays_in_support() {
        let lat = TorusLattice::new(2, 4).unwrap();
        let r0 = 0.5f64.sqrt();
        let pot = Potential::hard_support(0.0, r0);
        let mut r = make_rng(3, 0);
        let mut c = SpinConfig::constant(2, lat.len());
        for _ in 0..200 {
            metropolis_sweep(&mut c, &lat, &pot, &mut r, 1.0);
            for &[u, v] in lat.edges() {
                assert!(c.dot(u as usize, v as usize) >= r0 - 1e-12);
            }
        }
    }

    #[test]
    fn zero_length_chain_is_error() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let spec = ChainSpec {
            sampler: Sampler::Metropolis { proposal_angle: 1.0, auto_tune: false },
            potential: Potential::Ferromagnetic(0.3),
            burn_in: 0,
            thinning: 1,
            samples: 0,
            seed: 1,
            stream: 0,
        };
        assert!(run_chain(&lat, SpinConfig::constant(1, 16), &spec, |_| Ok(vec![]), None).is_err());
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let lat = TorusLattice::new(2, 3).unwrap();
        let spec = ChainSpec {
            sampler: Sampler::Mixed { proposal_angle: 1.0, auto_tune: true, wolff_steps: 2 },
            potential: Potential::Ferromagnetic(0.8),
            burn_in: 20,
            thinning: 2,
            samples: 50,
            seed: 99,
            stream: 3,
        };
        let a = run_chain(&lat, SpinConfig::constant(2, lat.len()), &spec, |c| Ok(vec![c.dot(0, 1)]), None).unwrap();
        let b = run_chain(&lat, SpinConfig::constant(2, lat.len()), &spec, |c| Ok(vec![c.dot(0, 1)]), None).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.estimates, b.estimates);
    }

    #[test]
    fn extractor_failure_aborts_with_context() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let spec = ChainSpec {
            sampler: Sampler::Wolff { steps: 1 },
            potential: Potential::Ferromagnetic(0.3),
            burn_in: 0,
            thinning: 1,
            samples: 10,
            seed: 1,
            stream: 0,
        };
        let mut k = 0;
        let err = run_chain(
            &lat,
            SpinConfig::constant(1, 16),
            &spec,
            |_| {
                k += 1;
                if k > 3 {
                    Err(Error::Numerical("boom".into()))
                } else {
                    Ok(vec![1.0])
                }
            },
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Observable(_)));
        assert!(err.to_string().contains("3 rows"));
    }

    #[test]
    fn rotation_proposal_preserves_norm_and_respects_angle() {
        let lat = TorusLattice::new(2, 2).unwrap();
        let mut r = make_rng(5, 0);
        let c = SpinConfig::random(4, lat.len(), &mut r);
        let mut out = Vec::new();
        for _ in 0..1000 {
            propose(&c, 0, 0.3, &mut r, &mut out);
            let norm: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            let cos: f64 = out.iter().zip(c.spin(0)).map(|(a, b)| a * b).sum();
            assert!(cos >= 0.3f64.cos() - 1e-12);
        }
    }
}
