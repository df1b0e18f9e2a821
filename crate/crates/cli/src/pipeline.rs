//! Pipeline execution: field → SFA ensemble → spectra/statistics →
//! selection-rule cross-check, with all outputs written atomically
//! (write-to-temp, rename-on-complete) and checksummed into a manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use trefoil_core::ensemble::{
    build_quadrature_for, ensemble_spectrum_cached, g2_zero, helicity, single_sample_spectrum_cached,
    QuadratureGrid, SpectrumCache,
};
use trefoil_core::field::{lissajous_band, write_lissajous_csv, FluctuationKind};
use trefoil_core::rules::{dominant_channel, enumerate_channels, Channel, DEFAULT_MAX_ABS};
use trefoil_core::sfa::{cutoff_harmonic_estimate, sfa_dipole_trace, write_dipole_csv};
use trefoil_core::spectra::{dense_spectrum, write_spectrum_csv, HarmonicAmplitude, Polarization};

use crate::config::{hex_digest, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Suppression factor separating "absent" from "present" bins, relative to
/// the mean of the neighboring classically allowed intensities (used for the
/// classical-rules flag, mirroring the plateau contrast convention).
pub const PRESENCE_CONTRAST: f64 = 1e-4;

/// A forbidden bin counts as present when its ensemble intensity exceeds the
/// α = 0 reference intensity — the classical expectation at that bin — by
/// this factor.
pub const REF_PRESENCE_FACTOR: f64 = 1e4;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_utc: String,
    pub finished_utc: String,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerQ {
    pub q: u32,
    #[serde(rename = "m2_R")]
    pub m2_r: f64,
    #[serde(rename = "m2_L")]
    pub m2_l: f64,
    #[serde(rename = "m4_R")]
    pub m4_r: f64,
    #[serde(rename = "m4_L")]
    pub m4_l: f64,
    #[serde(rename = "g2_R")]
    pub g2_r: Option<f64>,
    #[serde(rename = "g2_L")]
    pub g2_l: Option<f64>,
    pub helicity: Option<f64>,
    /// α = 0 reference-sample intensities (the classical expectation).
    #[serde(rename = "i_ref_R")]
    pub i_ref_r: f64,
    #[serde(rename = "i_ref_L")]
    pub i_ref_l: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatisticsJson {
    pub config_hash: String,
    pub scheme: String,
    pub nodes: usize,
    pub intensity_au: f64,
    pub cutoff_estimate: f64,
    /// Only evaluated for fluctuation-free runs: every plateau q = 3n bin
    /// suppressed below [`PRESENCE_CONTRAST`] of its allowed neighbors.
    pub classical_rules_hold: Option<bool>,
    pub per_q: Vec<PerQ>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub n1: i64,
    pub n2p: i64,
    pub n2m: i64,
    pub sigma: i8,
    pub rank: usize,
}

impl ChannelJson {
    fn from_channel(c: &Channel, rank: usize) -> Self {
        ChannelJson { n1: c.n1, n2p: c.n2p, n2m: c.n2m, sigma: c.sigma, rank }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelTableEntry {
    pub q: i64,
    pub s: u8,
    pub channels: Vec<ChannelJson>,
    pub dominant: Option<ChannelJson>,
    /// Beyond the estimated cutoff the perturbative ranking is unreliable;
    /// the engine flags the bin instead of predicting a helicity.
    pub beyond_cutoff: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelsJson {
    pub config_hash: String,
    pub s: u8,
    pub squeeze_target: String,
    pub cutoff_estimate: f64,
    pub per_q: Vec<ChannelTableEntry>,
}

/// Atomic file write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

struct OutputWriter {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputWriter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputWriter { dir: dir.to_path_buf(), records: Vec::new() })
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.records.push(OutputRecord { path: name.to_string(), sha256: hex_digest(bytes) });
        Ok(())
    }
}

fn bicircular_cutoff(rc: &RunConfig) -> f64 {
    cutoff_harmonic_estimate(
        rc.atom.ip,
        rc.drive.omega_fund,
        &[(rc.drive.amplitude_e0, 1.0), (rc.drive.amplitude_e0, 2.0)],
    )
}

/// Harmonic orders treated as plateau bins for rule checks: above the
/// below-threshold region, below the estimated cutoff plus a margin.
pub fn plateau_range(rc: &RunConfig) -> (u32, u32) {
    let lo = (rc.atom.ip / rc.drive.omega_fund).ceil() as u32;
    let hi = (bicircular_cutoff(rc).ceil() as u32 + 2).min(rc.q_max as u32 - 1);
    (lo, hi)
}

fn allowed_neighbor_mean(per_q: &[PerQ], q: u32) -> Option<f64> {
    let m = |qq: u32| per_q.iter().find(|p| p.q == qq).map(|p| p.m2_r + p.m2_l);
    Some((m(q - 1)? + m(q + 1)?) / 2.0)
}

fn classical_rules_flag(per_q: &[PerQ], plateau: (u32, u32)) -> bool {
    let (lo, hi) = plateau;
    (lo..=hi)
        .filter(|q| q % 3 == 0)
        .all(|q| match allowed_neighbor_mean(per_q, q) {
            Some(reference) if reference > 0.0 => {
                let own = per_q.iter().find(|p| p.q == q).map(|p| p.m2_r + p.m2_l).unwrap_or(0.0);
                own <= PRESENCE_CONTRAST * reference
            }
            _ => true,
        })
}

fn statistics_from_ensemble(
    rc: &RunConfig,
    intensity: f64,
    ens: &trefoil_core::ensemble::HarmonicSpectrumEnsemble,
    reference: &[HarmonicAmplitude],
) -> StatisticsJson {
    let per_q: Vec<PerQ> = ens
        .moments
        .iter()
        .map(|m| {
            let r = reference.iter().find(|a| a.q == f64::from(m.q));
            PerQ {
                q: m.q,
                m2_r: m.m2_r,
                m2_l: m.m2_l,
                m4_r: m.m4_r,
                m4_l: m.m4_l,
                g2_r: g2_zero(ens, m.q, Polarization::R).ok(),
                g2_l: g2_zero(ens, m.q, Polarization::L).ok(),
                helicity: helicity(ens, m.q).ok(),
                i_ref_r: r.map_or(0.0, |a| a.chi_r.norm_sqr()),
                i_ref_l: r.map_or(0.0, |a| a.chi_l.norm_sqr()),
            }
        })
        .collect();
    let classical = intensity == 0.0 || rc.drive.fluctuation.kind == FluctuationKind::None;
    let flag = classical.then(|| classical_rules_flag(&per_q, plateau_range(rc)));
    StatisticsJson {
        config_hash: rc.config_hash.clone(),
        scheme: ens.scheme.clone(),
        nodes: ens.n_nodes,
        intensity_au: intensity,
        cutoff_estimate: bicircular_cutoff(rc),
        classical_rules_hold: flag,
        per_q,
    }
}

/// Channel predictions for every harmonic order up to q_max.
pub fn predict_channels(rc: &RunConfig) -> Result<ChannelsJson> {
    let s = u8::from(rc.drive.fluctuation.kind != FluctuationKind::None && rc.drive.fluctuation.intensity > 0.0);
    let cutoff = bicircular_cutoff(rc);
    let target = rc.drive.fluctuation.target_mode;
    let mut per_q = Vec::with_capacity(rc.q_max);
    for q in 1..=rc.q_max as i64 {
        let channels = enumerate_channels(q, s, DEFAULT_MAX_ABS).map_err(anyhow::Error::from)?;
        let beyond_cutoff = q as f64 > cutoff;
        let dominant = if s == 1 && !beyond_cutoff {
            dominant_channel(q, 1, target).ok().map(|c| ChannelJson::from_channel(&c, 0))
        } else {
            None
        };
        per_q.push(ChannelTableEntry {
            q,
            s,
            channels: channels
                .iter()
                .enumerate()
                .map(|(rank, c)| ChannelJson::from_channel(c, rank))
                .collect(),
            dominant,
            beyond_cutoff,
        });
    }
    Ok(ChannelsJson {
        config_hash: rc.config_hash.clone(),
        s,
        squeeze_target: match target {
            trefoil_core::field::TargetMode::Omega => "omega".into(),
            trefoil_core::field::TargetMode::TwoOmega => "two_omega".into(),
        },
        cutoff_estimate: cutoff,
        per_q,
    })
}

fn ensemble_spectrum_csv(stats: &StatisticsJson, reference: &[HarmonicAmplitude]) -> String {
    // Same column layout as the single-sample dump; intensities are the
    // ensemble moments, the chi columns the α = 0 reference amplitudes.
    let mut out = String::from("q,I_R,I_L,re_chi_R,im_chi_R,re_chi_L,im_chi_L\n");
    for p in &stats.per_q {
        let amp = reference.iter().find(|a| a.q == f64::from(p.q));
        let (r, l) = amp
            .map(|a| (a.chi_r, a.chi_l))
            .unwrap_or((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.q, p.m2_r, p.m2_l, r.re, r.im, l.re, l.im
        ));
    }
    out
}

fn utc_now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Execute one configuration with the fluctuation intensity overridden
/// (sweeps reuse the cache across points).
pub fn run_single(
    rc: &RunConfig,
    intensity: f64,
    dir: &Path,
    cache: &mut SpectrumCache,
) -> Result<(RunManifest, StatisticsJson)> {
    let started = utc_now();
    let mut drive = rc.drive;
    drive.fluctuation.intensity = intensity;
    if intensity == 0.0 {
        drive.fluctuation.kind = FluctuationKind::None;
    }
    drive.validate().map_err(anyhow::Error::from)?;

    let grid: QuadratureGrid =
        build_quadrature_for(&drive, &rc.scheme, rc.nodes, rc.seed).map_err(anyhow::Error::from)?;
    let ens = ensemble_spectrum_cached(&rc.atom, &drive, &grid, &rc.window, rc.q_max, cache)
        .map_err(anyhow::Error::from)?;

    // Reference single-sample spectrum at the distribution center.
    let reference =
        single_sample_spectrum_cached(&rc.atom, &drive, Complex64::new(0.0, 0.0), &rc.window, rc.q_max, cache)
            .map_err(anyhow::Error::from)?;
    let stats = statistics_from_ensemble(rc, intensity, &ens, &reference);

    let mut writer = OutputWriter::new(dir)?;
    writer.emit("statistics.json", serde_json::to_string_pretty(&stats)?.as_bytes())?;
    writer.emit("spectrum.csv", ensemble_spectrum_csv(&stats, &reference).as_bytes())?;

    let mut lissajous = Vec::new();
    write_lissajous_csv(&mut lissajous, &lissajous_band(&drive, 720).map_err(anyhow::Error::from)?)?;
    writer.emit("lissajous.csv", &lissajous)?;

    let channels = predict_channels(rc)?;
    writer.emit("channels.json", serde_json::to_string_pretty(&channels)?.as_bytes())?;

    if rc.outputs.dump_dipole {
        let sample = trefoil_core::field::sample_classical_field(&drive, Complex64::new(0.0, 0.0))
            .map_err(anyhow::Error::from)?;
        let trace = sfa_dipole_trace(&rc.atom, &sample).map_err(anyhow::Error::from)?;
        let mut buf = Vec::new();
        write_dipole_csv(&mut buf, &trace)?;
        writer.emit("dipole.csv", &buf)?;
    }
    if rc.outputs.dump_dense_spectrum {
        let sample = trefoil_core::field::sample_classical_field(&drive, Complex64::new(0.0, 0.0))
            .map_err(anyhow::Error::from)?;
        let trace = sfa_dipole_trace(&rc.atom, &sample).map_err(anyhow::Error::from)?;
        let dense = dense_spectrum(&trace, &rc.window).map_err(anyhow::Error::from)?;
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &dense)?;
        writer.emit("dense_spectrum.csv", &buf)?;
    }

    let manifest = RunManifest {
        config_hash: rc.config_hash.clone(),
        tool_version: TOOL_VERSION.into(),
        started_utc: started,
        finished_utc: utc_now(),
        outputs: writer.records.clone(),
    };
    write_atomic(&dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok((manifest, stats))
}

/// `run` verb: single pipeline execution into `outputs.dir`.
pub fn run_pipeline(rc: &RunConfig) -> Result<RunManifest> {
    let mut cache = SpectrumCache::new();
    let dir = PathBuf::from(&rc.outputs.dir);
    let (manifest, _) = run_single(rc, rc.drive.fluctuation.intensity, &dir, &mut cache)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub config_hash: String,
    pub intensities_au: Vec<f64>,
    pub point_dirs: Vec<String>,
}

/// `sweep` verb: one output set per intensity plus a combined
/// helicity-vs-intensity table.
pub fn run_sweep(rc: &RunConfig) -> Result<SweepSummary> {
    let Some(intensities) = rc.sweep.clone() else {
        bail!("configuration has no [sweep] section");
    };
    let base = PathBuf::from(&rc.outputs.dir);
    fs::create_dir_all(&base)?;
    let mut cache = SpectrumCache::new();
    let mut point_dirs = Vec::new();
    let mut table = String::from("intensity_au,q,helicity,m2_R,m2_L,g2_R,g2_L\n");
    for (idx, &intensity) in intensities.iter().enumerate() {
        let dir = base.join(format!("point_{idx:02}"));
        let (_, stats) = run_single(rc, intensity, &dir, &mut cache)?;
        for p in &stats.per_q {
            table.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                intensity,
                p.q,
                p.helicity.map_or(String::from("nan"), |v| v.to_string()),
                p.m2_r,
                p.m2_l,
                p.g2_r.map_or(String::from("nan"), |v| v.to_string()),
                p.g2_l.map_or(String::from("nan"), |v| v.to_string()),
            ));
        }
        point_dirs.push(dir.file_name().unwrap().to_string_lossy().into_owned());
    }
    write_atomic(&base.join("sweep_helicity.csv"), table.as_bytes())?;
    let summary = SweepSummary {
        config_hash: rc.config_hash.clone(),
        intensities_au: intensities,
        point_dirs,
    };
    write_atomic(&base.join("sweep_summary.json"), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareRow {
    pub q: u32,
    pub present: bool,
    pub predicted_present: bool,
    pub presence_match: bool,
    pub helicity: Option<f64>,
    pub predicted_sigma: Option<i8>,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub config_hash: String,
    pub rows: Vec<CompareRow>,
    pub all_match: bool,
}

/// Cross-validate a finished run: per-q presence against channel
/// enumeration and helicity sign against the dominant channel.
pub fn compare_prediction(run_dir: &Path) -> Result<CompareReport> {
    let stats: StatisticsJson =
        serde_json::from_str(&fs::read_to_string(run_dir.join("statistics.json"))?)
            .context("reading statistics.json")?;
    let channels: ChannelsJson =
        serde_json::from_str(&fs::read_to_string(run_dir.join("channels.json"))?)
            .context("reading channels.json")?;
    if stats.config_hash != channels.config_hash {
        bail!(
            "config hash mismatch between statistics ({}) and channels ({})",
            stats.config_hash,
            channels.config_hash
        );
    }

    let mut rows = Vec::new();
    for p in &stats.per_q {
        if p.q % 3 != 0 || p.q < 3 {
            continue;
        }
        let entry = channels.per_q.iter().find(|e| e.q == i64::from(p.q));
        let Some(entry) = entry else { continue };
        // Present when the ensemble intensity rises well above the classical
        // (α = 0) expectation at this bin.
        let floor = (p.i_ref_r + p.i_ref_l).max(f64::MIN_POSITIVE);
        let present = (p.m2_r + p.m2_l) > REF_PRESENCE_FACTOR * floor;
        let predicted_present = !entry.channels.is_empty();
        let presence_match = present == predicted_present;
        let (verdict, predicted_sigma) = if !presence_match {
            ("presence mismatch".to_string(), None)
        } else if !present {
            ("absent, predicted absent".to_string(), None)
        } else if entry.beyond_cutoff {
            ("unranked".to_string(), None)
        } else {
            match (&entry.dominant, p.helicity) {
                (Some(dom), Some(h)) => {
                    let sign_match = (h > 0.0) == (dom.sigma > 0);
                    (
                        if sign_match {
                            "present, predicted present, helicity sign match".to_string()
                        } else {
                            "helicity sign mismatch".to_string()
                        },
                        Some(dom.sigma),
                    )
                }
                _ => ("present, predicted present".to_string(), None),
            }
        };
        rows.push(CompareRow {
            q: p.q,
            present,
            predicted_present,
            presence_match,
            helicity: p.helicity,
            predicted_sigma,
            verdict,
        });
    }
    let all_match = rows.iter().all(|r| !r.verdict.contains("mismatch"));
    let report = CompareReport { config_hash: stats.config_hash.clone(), rows, all_match };
    write_atomic(
        &run_dir.join("compare_report.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    Ok(report)
}

pub fn print_compare_report<W: Write>(w: &mut W, report: &CompareReport) -> std::io::Result<()> {
    writeln!(w, "{:>4}  {:>8}  {:>10}  {:>9}  verdict", "q", "present", "predicted", "helicity")?;
    for r in &report.rows {
        writeln!(
            w,
            "{:>4}  {:>8}  {:>10}  {:>9}  {}",
            r.q,
            r.present,
            r.predicted_present,
            r.helicity.map_or("n/a".into(), |h| format!("{h:+.3}")),
            r.verdict
        )?;
    }
    writeln!(w, "overall: {}", if report.all_match { "PASS" } else { "FAIL" })
}
