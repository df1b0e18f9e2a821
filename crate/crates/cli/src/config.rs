//! Configuration files: flat, sectioned TOML with explicit a.u. suffixes on
//! every physical quantity. Unknown keys are hard errors with a
//! nearest-key suggestion; the canonical re-serialization (defaults filled,
//! keys in struct order) is what gets hashed into `config_hash`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use trefoil_core::field::{
    DriveConfig, EnvelopeSpec, FluctuationAxis, FluctuationKind, FluctuationSpec, SqueezedQuadrature,
    TargetMode,
};
use trefoil_core::sfa::AtomSpec;
use trefoil_core::spectra::WindowSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub atom: AtomSection,
    pub drive: DriveSection,
    #[serde(default)]
    pub fluctuation: FluctuationSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSection {
    pub ip_au: f64,
    #[serde(default = "default_dme")]
    pub dme_model: String,
}

fn default_dme() -> String {
    "hydrogenic_1s".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub omega_au: f64,
    pub e0_au: f64,
    #[serde(default = "default_ramp")]
    pub ramp_cycles: u32,
    #[serde(default = "default_flat")]
    pub flat_cycles: u32,
    #[serde(default = "default_spc")]
    pub samples_per_cycle: usize,
}

fn default_ramp() -> u32 {
    1
}
fn default_flat() -> u32 {
    5
}
fn default_spc() -> usize {
    1536
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctuationSection {
    pub kind: String,
    pub target_mode: String,
    pub axis: String,
    pub quadrature: String,
    pub intensity_au: f64,
}

impl Default for FluctuationSection {
    fn default() -> Self {
        FluctuationSection {
            kind: "none".into(),
            target_mode: "two_omega".into(),
            axis: "parallel".into(),
            quadrature: "amplitude".into(),
            intensity_au: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub start_cycle: f64,
    pub cycles: u32,
}

impl Default for WindowSection {
    fn default() -> Self {
        WindowSection { start_cycle: 2.5, cycles: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub scheme: String,
    pub nodes: usize,
    pub seed: u64,
    pub q_max: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { scheme: "gauss_hermite_1d".into(), nodes: 21, seed: 0, q_max: 30 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub intensities_au: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub dir: String,
    #[serde(default)]
    pub dump_dipole: bool,
    #[serde(default)]
    pub dump_dense_spectrum: bool,
}

/// Validated, resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub atom: AtomSpec,
    pub drive: DriveConfig,
    pub window: WindowSpec,
    pub scheme: String,
    pub nodes: usize,
    pub seed: u64,
    pub q_max: usize,
    pub sweep: Option<Vec<f64>>,
    pub outputs: OutputsSection,
    /// Canonical serialization of the parsed config (defaults filled).
    pub canonical: String,
    /// SHA-256 of the canonical serialization.
    pub config_hash: String,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["atom", "drive", "fluctuation", "window", "ensemble", "sweep", "outputs"]),
    ("atom", &["ip_au", "dme_model"]),
    ("drive", &["omega_au", "e0_au", "ramp_cycles", "flat_cycles", "samples_per_cycle"]),
    ("fluctuation", &["kind", "target_mode", "axis", "quadrature", "intensity_au"]),
    ("window", &["start_cycle", "cycles"]),
    ("ensemble", &["scheme", "nodes", "seed", "q_max"]),
    ("sweep", &["intensities_au"]),
    ("outputs", &["dir", "dump_dipole", "dump_dense_spectrum"]),
];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            row.push((prev[j] + cost).min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

fn check_unknown_keys(value: &toml::Value) -> Result<()> {
    fn check_table(path: &str, table: &toml::map::Map<String, toml::Value>) -> Result<()> {
        let Some((_, expected)) = SCHEMA.iter().find(|(p, _)| *p == path) else {
            return Ok(());
        };
        for (key, sub) in table {
            if !expected.contains(&key.as_str()) {
                let nearest = expected
                    .iter()
                    .min_by_key(|cand| levenshtein(key, cand))
                    .copied()
                    .unwrap_or("");
                let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                bail!("unknown key `{full}` (did you mean `{nearest}`?)");
            }
            if let toml::Value::Table(t) = sub {
                let child = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
                check_table(&child, t)?;
            }
        }
        Ok(())
    }
    match value {
        toml::Value::Table(t) => check_table("", t),
        _ => bail!("configuration root must be a table"),
    }
}

fn parse_enum<T: Copy>(key: &str, value: &str, table: &[(&str, T)]) -> Result<T> {
    table
        .iter()
        .find(|(name, _)| *name == value)
        .map(|&(_, v)| v)
        .with_context(|| {
            let options: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
            format!("invalid value `{value}` for `{key}` (expected one of: {})", options.join(", "))
        })
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<RunConfig> {
        let atom = AtomSpec { ip: self.atom.ip_au, dme_model: self.atom.dme_model.clone() };
        atom.validate().map_err(anyhow::Error::from).context("in [atom]")?;

        let kind = parse_enum(
            "fluctuation.kind",
            &self.fluctuation.kind,
            &[
                ("none", FluctuationKind::None),
                ("squeezed", FluctuationKind::Squeezed),
                ("thermal", FluctuationKind::Thermal),
            ],
        )?;
        let target_mode = parse_enum(
            "fluctuation.target_mode",
            &self.fluctuation.target_mode,
            &[("omega", TargetMode::Omega), ("two_omega", TargetMode::TwoOmega)],
        )?;
        let axis = parse_enum(
            "fluctuation.axis",
            &self.fluctuation.axis,
            &[("parallel", FluctuationAxis::Parallel), ("perpendicular", FluctuationAxis::Perpendicular)],
        )?;
        let quadrature = parse_enum(
            "fluctuation.quadrature",
            &self.fluctuation.quadrature,
            &[("amplitude", SqueezedQuadrature::Amplitude), ("phase", SqueezedQuadrature::Phase)],
        )?;
        let fluctuation = FluctuationSpec {
            kind,
            target_mode,
            axis,
            quadrature,
            intensity: self.fluctuation.intensity_au,
        };

        let envelope = EnvelopeSpec {
            ramp_cycles: self.drive.ramp_cycles,
            flat_cycles: self.drive.flat_cycles,
        };
        let drive = DriveConfig::new(
            self.drive.omega_au,
            self.drive.e0_au,
            fluctuation,
            envelope,
            self.drive.samples_per_cycle,
        )
        .map_err(anyhow::Error::from)
        .context("in [drive]/[fluctuation]")?;

        let window = WindowSpec {
            start_cycle: self.window.start_cycle,
            cycles: self.window.cycles,
        };
        window.validate_for(&drive).map_err(anyhow::Error::from).context("in [window]")?;

        trefoil_core::ensemble::scheme_by_name(&self.ensemble.scheme)
            .map_err(anyhow::Error::from)
            .context("in [ensemble]")?;
        if self.ensemble.nodes == 0 {
            bail!("ensemble.nodes must be >= 1");
        }
        if self.ensemble.q_max < 3 {
            bail!("ensemble.q_max must be >= 3");
        }

        if let Some(sweep) = &self.sweep {
            if sweep.intensities_au.len() < 2 {
                bail!("sweep.intensities_au needs at least 2 values");
            }
            if !sweep.intensities_au.windows(2).all(|w| w[0] < w[1]) {
                bail!("sweep.intensities_au must be strictly increasing");
            }
            if sweep.intensities_au.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                bail!("sweep.intensities_au must be non-negative and finite");
            }
        }
        if self.outputs.dir.is_empty() {
            bail!("outputs.dir must not be empty");
        }

        // The hash identifies the computation; output destination and dump
        // flags do not participate.
        let hashed = HashedView {
            atom: &self.atom,
            drive: &self.drive,
            fluctuation: &self.fluctuation,
            window: &self.window,
            ensemble: &self.ensemble,
            sweep: self.sweep.as_ref(),
        };
        let canonical = toml::to_string(&hashed).context("canonicalizing configuration")?;
        let config_hash = hex_digest(canonical.as_bytes());

        Ok(RunConfig {
            atom,
            drive,
            window,
            scheme: self.ensemble.scheme.clone(),
            nodes: self.ensemble.nodes,
            seed: self.ensemble.seed,
            q_max: self.ensemble.q_max,
            sweep: self.sweep.as_ref().map(|s| s.intensities_au.clone()),
            outputs: self.outputs.clone(),
            canonical,
            config_hash,
        })
    }
}

#[derive(Serialize)]
struct HashedView<'a> {
    atom: &'a AtomSection,
    drive: &'a DriveSection,
    fluctuation: &'a FluctuationSection,
    window: &'a WindowSection,
    ensemble: &'a EnsembleSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<&'a SweepSection>,
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse, check keys, validate, and resolve a configuration document.
pub fn load_config_str(text: &str) -> Result<RunConfig> {
    let value: toml::Value = text.parse().context("parsing configuration")?;
    check_unknown_keys(&value)?;
    let file: ConfigFile = value.try_into().context("reading configuration sections")?;
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading configuration file {}", path.display()))?;
    load_config_str(&text).with_context(|| format!("in {}", path.display()))
}
