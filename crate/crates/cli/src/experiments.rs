//! Experiment runners. Each writes its tables and snapshots into the run
//! directory and returns a JSON summary that ends up in `summary.json`.

use crate::config::*;
use crate::output::{fmt_f64, RunDir};
use anyhow::{anyhow, bail, Context, Result};
use onmodel::lattice::{HexDomain, TorusLattice};
use onmodel::loop_core::{surrounding_loop_lengths, trivial_loop_fraction, vertex_loop_fraction, Fugacity, LoopConfig};
use onmodel::loop_samplers::LoopChain;
use onmodel::loop_structure::{repair_identities, weight_gain_check};
use onmodel::oracle::{exact_fk, exact_ising_torus, exact_loop, ExactTable, OracleCache};
use onmodel::representations::{Dgff, Graph, HardHexLattice, HardHexState};
use onmodel::rng::{make_rng, RNG_ALGORITHM};
use onmodel::saw::{connective_estimates, enumerate_saw};
use onmodel::snapshot::{export_snapshot, HardHexPatch, HardHexSnapshot, LoopSnapshot, Snapshot, SpinSnapshot};
use onmodel::spin_core::{Potential, SpinConfig};
use onmodel::spin_observables::{crossing_events, ir_integral, vortex_field, AizenmanAccumulator};
use onmodel::spin_samplers::{run_chain, ChainRun, ChainSpec, Sampler};
use onmodel::stats::mean_stderr_tau;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Stream offset for initial-state randomness, kept apart from chain streams.
const INIT_STREAM: u64 = 1 << 32;

pub fn run(cfg: &Config, out: &RunDir) -> Result<Value> {
    let seed = cfg.seed;
    match &cfg.experiment {
        Experiment::SpinSample(c) => spin_sample(c, seed, out),
        Experiment::LoopSample(c) => loop_sample(c, seed, out),
        Experiment::Saw(c) => saw(c, out),
        Experiment::Oracle(c) => oracle(c, out),
        Experiment::IrIntegral(c) => ir(c, out),
        Experiment::Hardhex(c) => hardhex(c, seed, out),
        Experiment::RepairAudit(c) => repair_audit(c, seed, out),
        Experiment::Dgff(c) => dgff(c, seed, out),
        Experiment::Aizenman(c) => aizenman(c, seed, out),
    }
}

fn io_err(e: anyhow::Error) -> onmodel::Error {
    onmodel::Error::Io(std::io::Error::other(e.to_string()))
}

fn estimate_json(series: &[f64]) -> Value {
    let (m, se, tau) = mean_stderr_tau(series);
    json!({"mean": m, "std_error": se, "tau": tau, "n": series.len()})
}

// ---------------------------------------------------------------------------
// spin-sample
// ---------------------------------------------------------------------------

fn potential(kind: PotentialKind, beta: f64, r0: Option<f64>) -> Potential {
    match kind {
        PotentialKind::Ferromagnetic => Potential::Ferromagnetic(beta),
        PotentialKind::Antiferromagnetic => Potential::AntiFerromagnetic(beta),
        PotentialKind::HardSupport => Potential::hard_support(beta, r0.unwrap_or(0.0)),
    }
}

fn spin_sample(c: &SpinSample, seed: u64, out: &RunDir) -> Result<Value> {
    let lat = TorusLattice::new(c.d, c.l)?;
    let (angle, tune) = (c.proposal_angle.unwrap_or(1.0), c.proposal_angle.is_none());
    let sampler = match c.sampler {
        SamplerKind::Metropolis => Sampler::Metropolis { proposal_angle: angle, auto_tune: tune },
        SamplerKind::Wolff => Sampler::Wolff { steps: c.wolff_steps },
        SamplerKind::Mixed => Sampler::Mixed { proposal_angle: angle, auto_tune: tune, wolff_steps: c.wolff_steps },
    };
    let pot = potential(c.potential, c.beta, c.r0);
    let with_vortices = c.n == 2 && c.d == 2;
    let params = serde_json::to_value(c)?;
    out.log(&format!("spin-sample: {} chain(s) on a {}-dimensional torus of side {}", c.chains, c.d, 2 * c.l));
    let runs: Vec<Result<ChainRun>> = (0..c.chains)
        .into_par_iter()
        .map(|i| -> Result<ChainRun> {
            let init = match c.init {
                InitKind::Ordered => SpinConfig::constant(c.n, lat.len()),
                InitKind::Random => SpinConfig::random(c.n, lat.len(), &mut make_rng(seed, INIT_STREAM + i as u64)),
            };
            let spec = ChainSpec {
                sampler: sampler.clone(),
                potential: pot.clone(),
                burn_in: c.burn_in,
                thinning: c.thinning,
                samples: c.samples,
                seed,
                stream: i as u64,
            };
            let mut header = vec!["sweep", "energy", "magnetization_norm"];
            if with_vortices {
                header.push("observable_1");
            }
            let mut csv = out.csv(&format!("chain_{i}.csv"), &header)?;
            let mut sink = |row: &[f64]| csv.floats(row).map_err(io_err);
            let run = run_chain(
                &lat,
                init,
                &spec,
                |s| {
                    if with_vortices {
                        Ok(vec![vortex_field(s, &lat)?.n_vortices() as f64])
                    } else {
                        Ok(vec![])
                    }
                },
                Some(&mut sink),
            )
            .with_context(|| format!("chain {i}"))?;
            csv.finish()?;
            let snap = Snapshot::Spin(SpinSnapshot::new(&run.final_config, &lat, json!({"chain": i, "run": params}))?);
            export_snapshot(&snap, &out.path(&format!("snapshot_{i}.json")))?;
            out.log(&format!("chain {i}: {} sweeps", run.sweeps));
            Ok(run)
        })
        .collect();
    let mut chains = Vec::new();
    for (i, r) in runs.into_iter().enumerate() {
        let r = r?;
        let est: serde_json::Map<String, Value> =
            r.columns[1..].iter().cloned().zip(r.estimates.iter().map(|e| serde_json::to_value(e).unwrap())).collect();
        chains.push(json!({
            "chain": i,
            "sweeps": r.sweeps,
            "acceptance": r.acceptance,
            "mean_cluster_size": r.mean_cluster_size,
            "proposal_angle": r.proposal_angle,
            "estimates": est,
        }));
    }
    Ok(json!({
        "observables": if with_vortices { json!({"observable_1": "vortex_count"}) } else { json!({}) },
        "chains": chains,
    }))
}

// ---------------------------------------------------------------------------
// loop-sample
// ---------------------------------------------------------------------------

/// Longest loop surrounding vertex u (0 if none).
fn max_surrounding(d: &HexDomain, mask: &[bool], u: u32) -> usize {
    surrounding_loop_lengths(d, mask, u).into_iter().max().unwrap_or(0)
}

fn loop_sample(c: &LoopSample, seed: u64, out: &RunDir) -> Result<Value> {
    let d = c.domain.build()?;
    let x = c.x.fugacity()?;
    let centre = d.center_vertex();
    let params = serde_json::to_value(c)?;
    out.log(&format!("loop-sample: {} chain(s), {} faces, {} steps", c.chains, d.faces().len(), c.steps));
    let runs: Vec<Result<Value>> = (0..c.chains)
        .into_par_iter()
        .map(|i| -> Result<Value> {
            let mut rng = make_rng(seed, i as u64);
            let mut chain = LoopChain::new(&d, &LoopConfig::empty(), c.n, x)?;
            chain.compound_probability = c.compound_probability;
            for _ in 0..c.burn_in {
                chain.step(&mut rng);
            }
            let header = ["step", "o", "loops", "longest", "trivial_fraction", "vertex_fraction", "max_surrounding"];
            let mut csv = out.csv(&format!("chain_{i}.csv"), &header)?;
            let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len() - 1];
            let mut max_surr = 0usize;
            let accepted0 = chain.stats.accepted;
            for t in 1..=c.steps {
                chain.step(&mut rng);
                if t % c.record_every == 0 {
                    let m = chain.mask();
                    let surr = max_surrounding(&d, m, centre);
                    max_surr = max_surr.max(surr);
                    let row = [
                        chain.o() as f64,
                        chain.loops() as f64,
                        chain.longest_loop() as f64,
                        trivial_loop_fraction(&d, m, 0),
                        vertex_loop_fraction(&d, m),
                        surr as f64,
                    ];
                    for (col, v) in cols.iter_mut().zip(row) {
                        col.push(v);
                    }
                    csv.row(std::iter::once(t.to_string()).chain(row.iter().map(|v| fmt_f64(*v))))?;
                }
            }
            csv.finish()?;
            let snap = Snapshot::Loop(LoopSnapshot::new(&d, &chain.config(), json!({"chain": i, "run": params}))?);
            export_snapshot(&snap, &out.path(&format!("snapshot_{i}.json")))?;
            let est: serde_json::Map<String, Value> = header[1..]
                .iter()
                .zip(&cols)
                .filter(|(_, col)| !col.is_empty())
                .map(|(h, col)| (h.to_string(), estimate_json(col)))
                .collect();
            out.log(&format!("chain {i}: done"));
            Ok(json!({
                "chain": i,
                "acceptance": (chain.stats.accepted - accepted0) as f64 / c.steps.max(1) as f64,
                "max_surrounding_center": max_surr,
                "estimates": est,
            }))
        })
        .collect();
    let chains = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(json!({"faces": d.faces().len(), "vertices": d.domain_vertices().len(), "chains": chains}))
}

// ---------------------------------------------------------------------------
// saw
// ---------------------------------------------------------------------------

fn saw(c: &Saw, out: &RunDir) -> Result<Value> {
    let table = enumerate_saw(c.k_max)?;
    let mut csv = out.csv("saw.csv", &["k", "s_k", "s_k_root"])?;
    for k in 1..=c.k_max {
        let s = table.s(k);
        let root = (s.to_string().parse::<f64>()?).powf(1.0 / k as f64);
        csv.row([k.to_string(), s.to_string(), fmt_f64(root)])?;
    }
    csv.finish()?;
    let est = if c.k_max >= 10 { Some(connective_estimates(&table)?) } else { None };
    Ok(json!({
        "k_max": c.k_max,
        "submultiplicativity_violation": table.submultiplicativity_violation(),
        "bounds_violation": table.bounds_violation(),
        "connective": est,
    }))
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn compute_oracle(model: &OracleModel) -> onmodel::Result<ExactTable> {
    match model {
        OracleModel::IsingTorus { d, l, beta } => Ok(exact_ising_torus(&TorusLattice::new(*d, *l)?, *beta)?.table),
        OracleModel::Loop { domain, n, x } => {
            let d = domain.build().map_err(|e| onmodel::Error::InvalidArgument(e.0))?;
            Ok(exact_loop(&d, *n, Fugacity::parse(*x)?)?.table)
        }
        OracleModel::FkTorus { d, l, p, q } => Ok(exact_fk(&Graph::from_torus(&TorusLattice::new(*d, *l)?), *p, *q)?.table),
    }
}

fn oracle(c: &Oracle, out: &RunDir) -> Result<Value> {
    let table = match &c.cache {
        Some(dir) => {
            let cache = OracleCache::new(dir)?;
            out.log(&format!("oracle cache key {}", OracleCache::key(&c.model)?));
            cache.get_or_compute(&c.model, || compute_oracle(&c.model))?
        }
        None => compute_oracle(&c.model)?,
    };
    let probs = table.probabilities();
    let mut csv = out.csv("table.csv", &["id", "log_weight", "probability"])?;
    for ((id, lw), p) in table.ids.iter().zip(&table.log_weights).zip(&probs) {
        csv.row([id.to_string(), fmt_f64(*lw), fmt_f64(*p)])?;
    }
    csv.finish()?;
    Ok(json!({
        "model": table.model,
        "params": table.params,
        "states": table.len(),
        "log_z": table.log_z,
        "observables": table.observables,
    }))
}

// ---------------------------------------------------------------------------
// ir-integral
// ---------------------------------------------------------------------------

fn ir(c: &IrIntegralCfg, out: &RunDir) -> Result<Value> {
    let mut csv = out.csv("ir.csv", &["d", "value", "divergent", "coarse", "fine", "convergence", "inverse_d"])?;
    let mut rows = Vec::new();
    for &d in &c.d {
        let r = ir_integral(d, c.grid)?;
        csv.row([
            d.to_string(),
            fmt_f64(r.value),
            r.divergent.to_string(),
            fmt_f64(r.coarse),
            fmt_f64(r.fine),
            fmt_f64(r.convergence),
            fmt_f64(1.0 / d as f64),
        ])?;
        rows.push(r);
    }
    csv.finish()?;
    Ok(json!({"integrals": rows}))
}

// ---------------------------------------------------------------------------
// hardhex
// ---------------------------------------------------------------------------

fn hardhex(c: &Hardhex, seed: u64, out: &RunDir) -> Result<Value> {
    let lat = HardHexLattice::torus(c.m)?;
    let mut st = match c.init {
        HardhexInit::Empty => HardHexState::empty(&lat, c.lambda)?,
        HardhexInit::Ordered => HardHexState::ordered(&lat, c.lambda, 0)?,
    };
    let mut rng = make_rng(seed, 0);
    for _ in 0..c.burn_in {
        st.sweep(&lat, &mut rng);
    }
    let mut csv = out.csv("densities.csv", &["sweep", "rho_0", "rho_1", "rho_2", "density"])?;
    let mut series: [Vec<f64>; 4] = Default::default();
    for t in 1..=c.sweeps {
        st.sweep(&lat, &mut rng);
        if t % c.record_every == 0 {
            let r = st.sublattice_densities(&lat);
            let total = (r[0] + r[1] + r[2]) / 3.0;
            let row = [t as f64, r[0], r[1], r[2], total];
            csv.floats(&row)?;
            for (s, v) in series.iter_mut().zip(&row[1..]) {
                s.push(*v);
            }
        }
    }
    csv.finish()?;
    if !st.is_independent(&lat) {
        bail!("hard-hexagon state lost independence");
    }
    let snap = Snapshot::Hardhex(HardHexSnapshot::new(&lat, HardHexPatch::Torus { m: c.m }, &st, serde_json::to_value(c)?));
    export_snapshot(&snap, &out.path("snapshot.json"))?;
    let names = ["rho_0", "rho_1", "rho_2", "density"];
    let est: serde_json::Map<String, Value> =
        names.iter().zip(&series).filter(|(_, s)| !s.is_empty()).map(|(n, s)| (n.to_string(), estimate_json(s))).collect();
    Ok(json!({"sites": lat.len(), "lambda_c": onmodel::loop_core::hard_hexagon_lambda_c(), "estimates": est}))
}

// ---------------------------------------------------------------------------
// repair-audit
// ---------------------------------------------------------------------------

fn repair_audit(c: &RepairAudit, seed: u64, out: &RunDir) -> Result<Value> {
    let d = c.domain.build()?;
    let mut rng = make_rng(seed, 0);
    let mut chain = LoopChain::new(&d, &LoopConfig::empty(), c.n, Fugacity::parse(c.x)?)?;
    for _ in 0..c.burn_in {
        chain.step(&mut rng);
    }
    let header = ["step", "delta_o", "delta_l", "v", "omega_ebar", "loops_ebar", "weight_gain_margin", "ok"];
    let mut csv = out.csv("audit.csv", &header)?;
    let gain_applicable = c.n >= 1.0 && c.n * c.x.powi(6) >= 1.0;
    let (mut audited, mut violations, mut dumps, mut nontrivial, mut gain_failures) = (0u64, 0u64, 0usize, 0u64, 0u64);
    for t in 1..=c.steps {
        chain.step(&mut rng);
        if t % c.audit_every != 0 {
            continue;
        }
        audited += 1;
        match repair_identities(&d, chain.mask()) {
            Ok(id) => {
                nontrivial += (id.v > 0) as u64;
                let margin = if gain_applicable {
                    let (holds, m) = weight_gain_check(&id, c.n, c.x)?;
                    gain_failures += (!holds) as u64;
                    fmt_f64(m)
                } else {
                    String::new()
                };
                csv.row([
                    t.to_string(),
                    id.delta_o.to_string(),
                    id.delta_l.to_string(),
                    id.v.to_string(),
                    id.omega_ebar.to_string(),
                    id.loops_ebar.to_string(),
                    margin,
                    "1".to_string(),
                ])?;
            }
            Err(onmodel::Error::IdentityViolation(dump)) => {
                violations += 1;
                if dumps < c.max_dumps {
                    let v: Value = serde_json::from_str(&dump).unwrap_or(Value::String(dump));
                    out.write_json(&format!("counterexamples/step_{t}.json"), &v)?;
                    dumps += 1;
                }
                csv.row([t.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), "0".into()])?;
            }
            Err(e) => return Err(anyhow!(e).context(format!("repair audit at step {t}"))),
        }
    }
    csv.finish()?;
    out.log(&format!("audited {audited} states, {violations} identity violations"));
    Ok(json!({
        "audited": audited,
        "nontrivial": nontrivial,
        "identity_violations": violations,
        "counterexamples_written": dumps,
        "weight_gain_applicable": gain_applicable,
        "weight_gain_failures": gain_failures,
    }))
}

// ---------------------------------------------------------------------------
// dgff
// ---------------------------------------------------------------------------

fn dgff(c: &DgffCfg, seed: u64, out: &RunDir) -> Result<Value> {
    let lat = TorusLattice::new(c.d, c.l)?;
    let mut g = Dgff::new(&lat, c.beta)?;
    let mut rng = make_rng(seed, 0);
    let mut header = vec!["sample".to_string()];
    header.extend(c.probes.iter().map(|p| format!("h_{p}")));
    let hdr: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = out.csv("dgff.csv", &hdr)?;
    let mut sq = vec![0.0; c.probes.len()];
    for s in 0..c.samples {
        let h = g.sample(&mut rng);
        let vals: Vec<f64> = c.probes.iter().map(|&p| h[p]).collect();
        for (a, v) in sq.iter_mut().zip(&vals) {
            *a += v * v;
        }
        csv.row(std::iter::once(s.to_string()).chain(vals.iter().map(|v| fmt_f64(*v))))?;
    }
    csv.finish()?;
    let probes: Vec<Value> = c
        .probes
        .iter()
        .zip(&sq)
        .map(|(&p, s)| json!({"site": p, "empirical_variance": s / c.samples as f64, "exact_variance": g.variance(p)}))
        .collect();
    Ok(json!({"pinned_site": 0, "probes": probes}))
}

// ---------------------------------------------------------------------------
// aizenman
// ---------------------------------------------------------------------------

fn aizenman(c: &Aizenman, seed: u64, out: &RunDir) -> Result<Value> {
    let lat = TorusLattice::new(2, c.l)?;
    let ell = c.ell.unwrap_or(c.l);
    let mut acc = AizenmanAccumulator::new(&lat, ell, (c.samples / 50).max(1))?;
    let spec = ChainSpec {
        sampler: Sampler::Metropolis { proposal_angle: c.proposal_angle.unwrap_or(1.0), auto_tune: c.proposal_angle.is_none() },
        potential: Potential::hard_support(c.beta, c.r0),
        burn_in: c.burn_in,
        thinning: c.thinning,
        samples: c.samples,
        seed,
        stream: 0,
    };
    let mut csv = out.csv("crossings.csv", &["sweep", "energy", "magnetization_norm", "observable_1", "observable_2", "observable_3"])?;
    let mut sink = |row: &[f64]| csv.floats(row).map_err(io_err);
    let run = run_chain(
        &lat,
        SpinConfig::constant(2, lat.len()),
        &spec,
        |s| {
            let (e, f) = crossing_events(s, &lat, ell)?;
            let v = vortex_field(s, &lat)?.n_vortices();
            acc.push(s)?;
            Ok(vec![e as u8 as f64, f as u8 as f64, v as f64])
        },
        Some(&mut sink),
    )?;
    csv.finish()?;
    let snap = Snapshot::Spin(SpinSnapshot::new(&run.final_config, &lat, serde_json::to_value(c)?)?);
    export_snapshot(&snap, &out.path("snapshot.json"))?;
    Ok(json!({
        "observables": {"observable_1": "E", "observable_2": "F", "observable_3": "vortex_count"},
        "acceptance": run.acceptance,
        "proposal_angle": run.proposal_angle,
        "report": acc.report()?,
        "rng": RNG_ALGORITHM,
    }))
}
