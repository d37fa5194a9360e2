//! Versioned JSON snapshots of model states (schema "v1"), consumed by the
//! renderer and re-importable for analysis.

use crate::error::{bail, Result};
use crate::lattice::{Circuit, Hex, HexDomain, HexEdge, TorusLattice};
use crate::loop_core::{validate, LoopConfig};
use crate::representations::{HardHexLattice, HardHexState};
use crate::spin_core::SpinConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: &str = "v1";

/// Spin configuration on the torus with side 2L; `values` is row-major with
/// n components per site; `angles` (radians) is present when n = 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSnapshot {
    pub schema: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub n: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Loop configuration on a domain given by its enclosing circuit. `faces`
/// lists the inner faces and `longest` the edges of the longest loop (for
/// highlighting); both are derived data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSnapshot {
    pub schema: String,
    pub circuit: Vec<Hex>,
    pub faces: Vec<Hex>,
    pub edges: Vec<HexEdge>,
    #[serde(default)]
    pub longest: Vec<HexEdge>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Hard-hexagon occupancy on a patch of 𝕋.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardHexSnapshot {
    pub schema: String,
    pub patch: HardHexPatch,
    pub occupied: Vec<Hex>,
    pub lambda: f64,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Patch description sufficient to rebuild a [`HardHexLattice`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HardHexPatch {
    Torus { m: usize },
    Hexes { sites: Vec<Hex> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Snapshot {
    Spin(SpinSnapshot),
    Loop(LoopSnapshot),
    Hardhex(HardHexSnapshot),
}

impl SpinSnapshot {
    pub fn new(cfg: &SpinConfig, lat: &TorusLattice, params: serde_json::Value) -> Result<SpinSnapshot> {
        if cfg.len() != lat.len() {
            bail!(InvalidArgument, "configuration does not match the torus");
        }
        Ok(SpinSnapshot {
            schema: SCHEMA_VERSION.into(),
            d: lat.d(),
            l: lat.l(),
            n: cfg.n(),
            values: cfg.values().to_vec(),
            angles: cfg.angles(),
            params,
        })
    }
    pub fn restore(&self) -> Result<(TorusLattice, SpinConfig)> {
        let lat = TorusLattice::new(self.d, self.l)?;
        if self.values.len() != lat.len() * self.n {
            bail!(InvalidArgument, "snapshot has {} values, expected {}", self.values.len(), lat.len() * self.n);
        }
        Ok((lat, SpinConfig::from_values(self.n, self.values.clone())?))
    }
}

impl LoopSnapshot {
    pub fn new(d: &HexDomain, cfg: &LoopConfig, params: serde_json::Value) -> Result<LoopSnapshot> {
        let loops = cfg.loops(d)?;
        let longest = loops.iter().max_by_key(|l| l.len()).map(|l| l.edges.iter().map(|&e| d.edge(e)).collect()).unwrap_or_default();
        Ok(LoopSnapshot {
            schema: SCHEMA_VERSION.into(),
            circuit: d.circuit().hexes().to_vec(),
            faces: d.faces().iter().map(|&f| d.hex(f)).collect(),
            edges: cfg.edges().iter().copied().collect(),
            longest,
            params,
        })
    }
    pub fn restore(&self) -> Result<(HexDomain, LoopConfig)> {
        let d = HexDomain::from_circuit(&Circuit::new(self.circuit.clone())?)?;
        let cfg = validate(&self.edges, &d)?;
        Ok((d, cfg))
    }
}

impl HardHexSnapshot {
    pub fn new(lat: &HardHexLattice, patch: HardHexPatch, state: &HardHexState, params: serde_json::Value) -> HardHexSnapshot {
        HardHexSnapshot {
            schema: SCHEMA_VERSION.into(),
            patch,
            occupied: state.occupied.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| lat.sites[i]).collect(),
            lambda: state.lambda,
            params,
        }
    }
    pub fn restore(&self) -> Result<(HardHexLattice, HardHexState)> {
        let lat = match &self.patch {
            HardHexPatch::Torus { m } => HardHexLattice::torus(*m)?,
            HardHexPatch::Hexes { sites } => HardHexLattice::from_hexes(sites),
        };
        let index: std::collections::HashMap<Hex, usize> = lat.sites.iter().enumerate().map(|(i, &h)| (h, i)).collect();
        let mut occ = vec![false; lat.len()];
        for h in &self.occupied {
            match index.get(h) {
                Some(&i) => occ[i] = true,
                None => bail!(InvalidArgument, "occupied hexagon {h:?} is not a site of the patch"),
            }
        }
        let state = HardHexState::from_occupied(&lat, self.lambda, &occ)?;
        Ok((lat, state))
    }
}

impl Snapshot {
    pub fn schema(&self) -> &str {
        match self {
            Snapshot::Spin(s) => &s.schema,
            Snapshot::Loop(s) => &s.schema,
            Snapshot::Hardhex(s) => &s.schema,
        }
    }
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
    pub fn from_json(text: &str) -> Result<Snapshot> {
        let s: Snapshot = serde_json::from_str(text)?;
        if s.schema() != SCHEMA_VERSION {
            bail!(InvalidArgument, "unsupported snapshot schema {:?}", s.schema());
        }
        Ok(s)
    }
}

/// Writes a snapshot atomically (temporary file + rename).
pub fn export_snapshot(snap: &Snapshot, path: &Path) -> Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, snap.to_json()?)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn import_snapshot(path: &Path) -> Result<Snapshot> {
    Snapshot::from_json(&std::fs::read_to_string(path)?)
}
