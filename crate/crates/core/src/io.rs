//! On-disk formats: the trace CSV, raw field dumps with a JSON sidecar, and
//! the run manifest.
//!
//! Field dumps are little-endian 64-bit floats in x1-fastest order, one
//! contiguous block per named field; the sidecar records dims, spacings,
//! names, byte offsets, and endianness. Reads round-trip bit-exactly.

use crate::dynamics::{FlowState, Termination};
use crate::energies::EnergyReport;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Write the trace with the fixed column set
/// `t,E,EN,BN,CN,DN,TEN,Jmin,Jmax,Adev`.
pub fn write_trace(path: &Path, reports: &[EnergyReport]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", EnergyReport::CSV_HEADER)?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub fields: Vec<String>,
    /// Byte offset of each field's block in the payload.
    pub offsets: Vec<u64>,
    pub endianness: String,
}

/// Write named scalar fields to `<stem>.bin` + `<stem>.json`.
pub fn write_fields(stem: &Path, grid: &Grid, fields: &[(&str, &ScalarField)]) -> Result<(PathBuf, PathBuf)> {
    let bin_path = stem.with_extension("bin");
    let json_path = stem.with_extension("json");
    let block = grid.len() * 8;
    let mut names = Vec::with_capacity(fields.len());
    let mut offsets = Vec::with_capacity(fields.len());
    {
        let mut out = BufWriter::new(std::fs::File::create(&bin_path)?);
        for (k, (name, field)) in fields.iter().enumerate() {
            field.check_shape(grid)?;
            names.push(name.to_string());
            offsets.push((k * block) as u64);
            for v in field.as_slice() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()?;
    }
    let sidecar = FieldSidecar {
        dims: grid.n,
        spacing: grid.h,
        fields: names,
        offsets,
        endianness: "little".into(),
    };
    std::fs::write(&json_path, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok((bin_path, json_path))
}

/// Read a dump written by [`write_fields`]; validates the sidecar against
/// the payload size.
pub fn read_fields(stem: &Path) -> Result<(Grid, Vec<(String, ScalarField)>)> {
    let bin_path = stem.with_extension("bin");
    let json_path = stem.with_extension("json");
    let sidecar: FieldSidecar = serde_json::from_slice(&std::fs::read(&json_path)?)?;
    if sidecar.endianness != "little" {
        return Err(Error::Schema(format!(
            "unsupported endianness {:?}",
            sidecar.endianness
        )));
    }
    if sidecar.fields.len() != sidecar.offsets.len() {
        return Err(Error::Schema(format!(
            "{} field names vs {} offsets",
            sidecar.fields.len(),
            sidecar.offsets.len()
        )));
    }
    let grid = Grid::new(sidecar.dims[0], sidecar.dims[1], sidecar.dims[2])?;
    let payload = std::fs::read(&bin_path)?;
    let block = grid.len() * 8;
    if payload.len() != block * sidecar.fields.len() {
        return Err(Error::Schema(format!(
            "payload holds {} bytes but sidecar dims {:?} with {} fields need {}",
            payload.len(),
            sidecar.dims,
            sidecar.fields.len(),
            block * sidecar.fields.len()
        )));
    }
    let mut fields = Vec::with_capacity(sidecar.fields.len());
    for (name, &offset) in sidecar.fields.iter().zip(&sidecar.offsets) {
        let offset = offset as usize;
        if offset % 8 != 0 || offset + block > payload.len() {
            return Err(Error::Schema(format!(
                "field {name:?} offset {offset} out of bounds"
            )));
        }
        let mut data = Vec::with_capacity(grid.len());
        for chunk in payload[offset..offset + block].chunks_exact(8) {
            data.push(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")));
        }
        fields.push((name.clone(), ScalarField::from_vec(&grid, data)?));
    }
    Ok((grid, fields))
}

/// Dump a full state as six scalar blocks.
pub fn write_state(stem: &Path, grid: &Grid, state: &FlowState) -> Result<(PathBuf, PathBuf)> {
    write_fields(
        stem,
        grid,
        &[
            ("disp1", &state.disp.comps[0]),
            ("disp2", &state.disp.comps[1]),
            ("disp3", &state.disp.comps[2]),
            ("v1", &state.vel.comps[0]),
            ("v2", &state.vel.comps[1]),
            ("v3", &state.vel.comps[2]),
        ],
    )
}

/// Rebuild a state from a dump produced by [`write_state`].
pub fn read_state(stem: &Path, t: f64) -> Result<(Grid, FlowState)> {
    let (grid, fields) = read_fields(stem)?;
    let lookup = |name: &str| -> Result<ScalarField> {
        fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f.clone())
            .ok_or_else(|| Error::Schema(format!("dump is missing field {name:?}")))
    };
    let disp = VectorField {
        comps: [lookup("disp1")?, lookup("disp2")?, lookup("disp3")?],
    };
    let vel = VectorField {
        comps: [lookup("v1")?, lookup("v2")?, lookup("v3")?],
    };
    Ok((grid, FlowState::new(disp, vel, t)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreachRecord {
    pub t: f64,
    pub node: [usize; 3],
    pub a_dev: f64,
    pub j_min: f64,
    pub j_max: f64,
}

/// Run provenance: config echo, code version, wall-clock bounds, how the run
/// ended, and every artifact it produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: serde_json::Value,
    pub version: String,
    pub started_unix: f64,
    pub ended_unix: f64,
    pub termination: String,
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breach: Option<BreachRecord>,
}

impl RunManifest {
    pub fn new(config: serde_json::Value, started_unix: f64) -> Self {
        RunManifest {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            ended_unix: started_unix,
            termination: "completed".into(),
            artifacts: Vec::new(),
            breach: None,
        }
    }

    pub fn record_termination(&mut self, termination: &Termination) {
        self.termination = termination.as_str().to_string();
        if let Termination::GuardrailBreach {
            t,
            node,
            a_dev,
            j_min,
            j_max,
        } = termination
        {
            self.breach = Some(BreachRecord {
                t: *t,
                node: [node.0, node.1, node.2],
                a_dev: *a_dev,
                j_min: *j_min,
                j_max: *j_max,
            });
        }
    }

    pub fn push_artifact(&mut self, path: &Path) {
        self.artifacts.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{smooth_random_scalar, SplitMix64};

    #[test]
    fn field_dump_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join(format!("vacflow-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::new(6, 5, 8).unwrap();
        let mut rng = SplitMix64::new(9);
        let f = smooth_random_scalar(&g, &mut rng, 3.0);
        let h = smooth_random_scalar(&g, &mut rng, 0.5);
        let stem = dir.join("dump");
        write_fields(&stem, &g, &[("f", &f), ("h", &h)]).unwrap();
        let (g2, fields) = read_fields(&stem).unwrap();
        assert_eq!(g2.n, g.n);
        assert_eq!(fields[0].0, "f");
        assert_eq!(fields[0].1.as_slice(), f.as_slice());
        assert_eq!(fields[1].1.as_slice(), h.as_slice());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn sidecar_payload_mismatch_is_a_schema_error() {
        let dir = std::env::temp_dir().join(format!("vacflow-io2-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = Grid::new(6, 5, 8).unwrap();
        let f = ScalarField::constant(&g, 1.0);
        let stem = dir.join("dump");
        write_fields(&stem, &g, &[("f", &f)]).unwrap();
        // Corrupt the sidecar dims.
        let json_path = stem.with_extension("json");
        let mut sidecar: FieldSidecar =
            serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
        sidecar.dims = [6, 5, 9];
        std::fs::write(&json_path, serde_json::to_vec(&sidecar).unwrap()).unwrap();
        assert!(matches!(read_fields(&stem), Err(Error::Schema(_))));
        std::fs::remove_dir_all(&dir).ok();
    }
}
