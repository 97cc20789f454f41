//! TOML system documents.
//!
//! ```toml
//! schema_version = 1
//! name = "two-bus"
//! curtailment_penalty_per_mwh = 1000.0
//! frp_shortfall_penalty_per_mw = 250.0
//!
//! [[buses]]
//! id = "b1"
//! slack = true
//!
//! [[lines]]
//! id = "l1"
//! from = "b1"
//! to = "b2"
//! reactance_pu = 0.1
//! flow_min_mw = -100.0
//! flow_max_mw = 100.0
//!
//! [[generators]]
//! id = "g1"
//! bus = "b1"
//! # ... see Generator for the full field list
//!
//! [[isf]]            # optional, overrides reactance-derived values
//! line = "l1"
//! factors = [0.0, -1.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bus, Generator, IsfMatrix, Line, PowerSystem, SystemError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    schema_version: u32,
    name: String,
    curtailment_penalty_per_mwh: f64,
    frp_shortfall_penalty_per_mw: f64,
    buses: Vec<Bus>,
    #[serde(default)]
    lines: Vec<Line>,
    #[serde(default)]
    generators: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    isf: Option<Vec<IsfRowDoc>>,
}

#[derive(Serialize, Deserialize)]
struct IsfRowDoc {
    line: String,
    factors: Vec<f64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<u32>,
}

pub fn parse_system(text: &str) -> Result<PowerSystem, SystemError> {
    let probe: VersionProbe =
        toml::from_str(text).map_err(|e| SystemError::Parse(e.message().to_string()))?;
    match probe.schema_version {
        None => return Err(SystemError::MissingField("schema_version".into())),
        Some(v) if v != SCHEMA_VERSION => {
            return Err(SystemError::UnsupportedVersion {
                found: v,
                supported: SCHEMA_VERSION,
            })
        }
        Some(_) => {}
    }
    let doc: SystemDoc = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        if msg.contains("missing field") {
            SystemError::MissingField(msg)
        } else {
            SystemError::Parse(msg)
        }
    })?;

    let isf = match doc.isf {
        None => None,
        Some(rows) => {
            let mut ordered = Vec::with_capacity(doc.lines.len());
            for line in &doc.lines {
                let row = rows.iter().find(|r| r.line == line.id).ok_or_else(|| {
                    SystemError::MissingField(format!("isf row for line `{}`", line.id))
                })?;
                if row.factors.len() != doc.buses.len() {
                    return Err(SystemError::IsfShape {
                        rows: rows.len(),
                        cols: row.factors.len(),
                        lines: doc.lines.len(),
                        buses: doc.buses.len(),
                    });
                }
                ordered.push(row.factors.clone());
            }
            Some(IsfMatrix::from_rows(ordered, doc.buses.len()))
        }
    };
    PowerSystem::new(
        doc.name,
        doc.buses,
        doc.lines,
        doc.generators,
        doc.curtailment_penalty_per_mwh,
        doc.frp_shortfall_penalty_per_mw,
        isf,
    )
}

pub fn load_system(path: impl AsRef<Path>) -> Result<PowerSystem, SystemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_system(&text)
}

/// Serialises a system, ISFs included, so that reloading reproduces it exactly.
pub fn to_toml(system: &PowerSystem) -> String {
    let isf = (!system.lines.is_empty()).then(|| {
        system
            .lines
            .iter()
            .zip(system.isf.rows())
            .map(|(l, r)| IsfRowDoc {
                line: l.id.clone(),
                factors: r.clone(),
            })
            .collect()
    });
    let doc = SystemDoc {
        schema_version: SCHEMA_VERSION,
        name: system.name.clone(),
        curtailment_penalty_per_mwh: system.curtailment_penalty,
        frp_shortfall_penalty_per_mw: system.frp_shortfall_penalty,
        buses: system.buses.clone(),
        lines: system.lines.clone(),
        generators: system.generators.clone(),
        isf,
    };
    toml::to_string_pretty(&doc).expect("system documents always serialise")
}

pub fn save_system(system: &PowerSystem, path: impl AsRef<Path>) -> Result<(), SystemError> {
    let path = path.as_ref();
    std::fs::write(path, to_toml(system)).map_err(|source| SystemError::Io {
        path: path.display().to_string(),
        source,
    })
}
