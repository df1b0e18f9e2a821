//! The classical bicircular drive, its fluctuating component, and the
//! analytic symmetry/variance diagnostics.
//!
//! The mean field is the counter-rotating ω (left-circular) + 2ω
//! (right-circular) superposition of equal amplitudes,
//!
//! ```text
//!   E_par(t) = -E0 [sin(ωt) + sin(2ωt)]
//!   E_perp(t) =  E0 [cos(ωt) - cos(2ωt)]
//! ```
//!
//! which traces a trefoil invariant under a 2π/3 polarization rotation
//! combined with a T/3 time shift. Fluctuations enter as a linearly
//! polarized oscillation `δE(t; α) = Re[α e^{i m ω t}]` at the target mode's
//! frequency (m = 1 or 2), with the complex amplitude α drawn from a 2D
//! Gaussian in field units (the Husimi distribution of the fluctuating
//! component, see [`husimi_of_state`]).
//!
//! Fluctuation strengths are parameterized by the intensity `I = <δE²>`,
//! the time-averaged excess field variance in a.u. of field squared. The
//! mapping to a photon-picture squeezing parameter uses a fixed vacuum
//! width [`VACUUM_FIELD_VARIANCE`]; the mean photon number of the
//! fluctuation state is then `n̄ = I / VACUUM_FIELD_VARIANCE` and for a
//! squeezed state `sinh²r = n̄`. At the intensities of interest the vacuum
//! width is invisible (sub-ppm of I), so sampling the full Husimi widths
//! realizes the excess-variance convention in practice.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum Husimi variance in field units (a.u. of field squared).
///
/// Fixed by the single-photon field scale 2κ = 1e-7 a.u.: one quadrature of
/// vacuum carries (2κ)²/2. Only enters through the intensity → squeezing
/// mapping; spectra and statistics depend on it at the 1e-7 relative level.
pub const VACUUM_FIELD_VARIANCE: f64 = 5e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluctuationKind {
    None,
    Squeezed,
    Thermal,
}

/// Which drive mode carries the fluctuating component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    Omega,
    TwoOmega,
}

impl TargetMode {
    /// Frequency multiplier relative to the fundamental.
    pub fn harmonic(self) -> f64 {
        match self {
            TargetMode::Omega => 1.0,
            TargetMode::TwoOmega => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluctuationAxis {
    Parallel,
    Perpendicular,
}

/// Squeezed quadrature relative to the coherent carrier of the target mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SqueezedQuadrature {
    Amplitude,
    Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSpec {
    pub kind: FluctuationKind,
    pub target_mode: TargetMode,
    pub axis: FluctuationAxis,
    pub quadrature: SqueezedQuadrature,
    /// Time-averaged excess field variance <δE²> in a.u. of field squared.
    pub intensity: f64,
}

impl FluctuationSpec {
    pub fn none() -> Self {
        FluctuationSpec {
            kind: FluctuationKind::None,
            target_mode: TargetMode::TwoOmega,
            axis: FluctuationAxis::Parallel,
            quadrature: SqueezedQuadrature::Amplitude,
            intensity: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.intensity.is_finite() || self.intensity < 0.0 {
            return Err(Error::Validation(format!(
                "fluctuation intensity must be finite and >= 0, got {}",
                self.intensity
            )));
        }
        if self.kind == FluctuationKind::None && self.intensity != 0.0 {
            return Err(Error::Validation(
                "fluctuation kind = none requires intensity = 0".into(),
            ));
        }
        Ok(())
    }
}

/// Trapezoidal pulse envelope: a linear ramp up, a flat top, a linear ramp
/// down, all in whole cycles of the fundamental. Applied multiplicatively to
/// every field component including the fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub ramp_cycles: u32,
    pub flat_cycles: u32,
}

impl Default for EnvelopeSpec {
    fn default() -> Self {
        EnvelopeSpec { ramp_cycles: 1, flat_cycles: 5 }
    }
}

impl EnvelopeSpec {
    pub fn total_cycles(&self) -> u32 {
        2 * self.ramp_cycles + self.flat_cycles
    }

    /// Envelope value at phase `c` measured in cycles from pulse start.
    pub fn value_at_cycle(&self, c: f64) -> f64 {
        let ramp = f64::from(self.ramp_cycles);
        let flat = f64::from(self.flat_cycles);
        let total = f64::from(self.total_cycles());
        if c <= 0.0 || c >= total {
            0.0
        } else if c < ramp {
            c / ramp
        } else if c <= ramp + flat {
            1.0
        } else {
            (total - c) / ramp
        }
    }
}

/// Uniform time grid covering the full pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_points: usize,
}

impl TimeGrid {
    /// Grid over `total_cycles` of the fundamental with `samples_per_cycle`
    /// points per cycle. The final grid point sits one step before `t1` so
    /// that periodic windows tile without duplication.
    pub fn for_pulse(omega: f64, total_cycles: u32, samples_per_cycle: usize) -> Self {
        let period = 2.0 * PI / omega;
        let t1 = period * f64::from(total_cycles);
        TimeGrid { t0: 0.0, t1, n_points: total_cycles as usize * samples_per_cycle }
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_points as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt() * i as f64
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }

    pub fn validate(&self) -> Result<()> {
        if self.t1 <= self.t0 || self.t1.is_nan() || self.t0.is_nan() {
            return Err(Error::Validation("time grid span must be positive".into()));
        }
        if self.n_points < 1 << 12 {
            return Err(Error::Validation(format!(
                "time grid needs at least {} points, got {}",
                1 << 12,
                self.n_points
            )));
        }
        Ok(())
    }
}

/// Helicity assignment of the two coherent drive components. The simulator
/// implements the ω → L, 2ω → R assignment throughout.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelicityMap {
    #[default]
    OmegaLeftTwoOmegaRight,
}

/// Full description of the driving field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    /// Fundamental angular frequency (a.u.).
    pub omega_fund: f64,
    /// Common amplitude of the two coherent components (a.u.). Sharing one
    /// value enforces |α_ω| = |α_2ω|.
    pub amplitude_e0: f64,
    pub helicity_map: HelicityMap,
    pub fluctuation: FluctuationSpec,
    pub envelope: EnvelopeSpec,
    pub time_grid: TimeGrid,
}

impl DriveConfig {
    /// Build a config whose grid spans the whole envelope.
    pub fn new(
        omega_fund: f64,
        amplitude_e0: f64,
        fluctuation: FluctuationSpec,
        envelope: EnvelopeSpec,
        samples_per_cycle: usize,
    ) -> Result<Self> {
        let cfg = DriveConfig {
            omega_fund,
            amplitude_e0,
            helicity_map: HelicityMap::default(),
            fluctuation,
            envelope,
            time_grid: TimeGrid::for_pulse(omega_fund, envelope.total_cycles(), samples_per_cycle),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega_fund <= 0.0 || !self.omega_fund.is_finite() {
            return Err(Error::Validation(format!(
                "omega_fund must be > 0, got {}",
                self.omega_fund
            )));
        }
        if self.amplitude_e0 < 0.0 || !self.amplitude_e0.is_finite() {
            return Err(Error::Validation(format!(
                "amplitude_e0 must be >= 0, got {}",
                self.amplitude_e0
            )));
        }
        self.fluctuation.validate()?;
        self.time_grid.validate()?;
        if self.envelope.ramp_cycles == 0 {
            return Err(Error::Validation("envelope needs at least one ramp cycle".into()));
        }
        Ok(())
    }

    /// Period of the fundamental, 2π/ω.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_fund
    }

    pub fn samples_per_cycle(&self) -> usize {
        self.time_grid.n_points / self.envelope.total_cycles() as usize
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        self.envelope.value_at_cycle((t - self.time_grid.t0) / self.period())
    }

    /// Start time of the cycle at the middle of the flat top.
    pub fn flat_center_cycle_start(&self) -> f64 {
        let c = f64::from(self.envelope.ramp_cycles) + f64::from(self.envelope.flat_cycles) / 2.0;
        self.time_grid.t0 + (c - 0.5).max(f64::from(self.envelope.ramp_cycles)) * self.period()
    }
}

/// Raw (envelope-free) bicircular components at time `t`.
fn raw_bicircular(e0: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s1, c1) = (omega * t).sin_cos();
    let (s2, c2) = (2.0 * omega * t).sin_cos();
    (-e0 * (s1 + s2), e0 * (c1 - c2))
}

/// Envelope-modulated mean bicircular field at `t`.
///
/// Errors if `t` lies outside the grid span.
pub fn mean_bicircular_field(cfg: &DriveConfig, t: f64) -> Result<(f64, f64)> {
    if !cfg.time_grid.contains(t) {
        return Err(Error::Domain(format!(
            "t = {} outside grid span [{}, {}]",
            t, cfg.time_grid.t0, cfg.time_grid.t1
        )));
    }
    let env = cfg.envelope_at(t);
    let (ep, eq) = raw_bicircular(cfg.amplitude_e0, cfg.omega_fund, t);
    Ok((env * ep, env * eq))
}

/// Phase-space direction (in the α plane) along which a fluctuation adds in
/// phase with the mean-field carrier of the given mode/axis component.
///
/// With δE(t; α) = Re[α e^{i m ω t}], a carrier written as Re[c e^{i m ω t}]
/// has direction arg(c).
pub fn carrier_angle(target: TargetMode, axis: FluctuationAxis) -> f64 {
    match (axis, target) {
        // -E0 sin(mωt) = Re[i E0 e^{imωt}]
        (FluctuationAxis::Parallel, _) => PI / 2.0,
        // +E0 cos(ωt)
        (FluctuationAxis::Perpendicular, TargetMode::Omega) => 0.0,
        // -E0 cos(2ωt)
        (FluctuationAxis::Perpendicular, TargetMode::TwoOmega) => PI,
    }
}

/// 2D Gaussian quasi-probability of the fluctuation amplitude α, in field
/// units, centered on the coherent amplitude (α = 0 in the deviation frame
/// used throughout).
///
/// `orientation` is the angle of the minor (squeezed) axis relative to the
/// coherent-carrier direction of the target component; see
/// [`carrier_angle`] for the absolute placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiGaussian {
    pub center: Complex64,
    /// Variance along the anti-squeezed axis (field² a.u.).
    pub sigma_major: f64,
    /// Variance along the squeezed axis (field² a.u.).
    pub sigma_minor: f64,
    /// Angle of the minor axis relative to the coherent amplitude (rad).
    pub orientation: f64,
}

impl HusimiGaussian {
    /// Density in the distribution's own axis frame: `u` along the minor
    /// axis, `v` along the major axis.
    pub fn density_axis_frame(&self, u: f64, v: f64) -> f64 {
        let du = u - 0.0;
        let dv = v - 0.0;
        (1.0 / (2.0 * PI * (self.sigma_minor * self.sigma_major).sqrt()))
            * (-du * du / (2.0 * self.sigma_minor) - dv * dv / (2.0 * self.sigma_major)).exp()
    }

    /// Covariance matrix of (Re α, Im α) when the minor axis sits at
    /// `minor_angle` in the α plane. Row-major [[xx, xy], [xy, yy]].
    pub fn covariance(&self, minor_angle: f64) -> [[f64; 2]; 2] {
        let (s, c) = minor_angle.sin_cos();
        let (a, b) = (self.sigma_minor, self.sigma_major);
        let xx = a * c * c + b * s * s;
        let yy = a * s * s + b * c * c;
        let xy = (a - b) * s * c;
        [[xx, xy], [xy, yy]]
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_minor <= 0.0 || self.sigma_minor.is_nan() || self.sigma_major < self.sigma_minor {
            return Err(Error::Validation(format!(
                "Husimi widths must satisfy sigma_major >= sigma_minor > 0, got ({}, {})",
                self.sigma_major, self.sigma_minor
            )));
        }
        Ok(())
    }
}

/// Husimi distribution of the fluctuating component, in field units.
///
/// Squeezed: widths σ₀/(1 ∓ tanh r) along the anti-squeezed/squeezed axes,
/// with r fixed by sinh²r = I/σ₀ so the excess field variance equals the
/// requested intensity. Orientation 0 for amplitude squeezing, π/2 for phase
/// squeezing. Thermal: isotropic σ₀(1 + n̄) with n̄ = I/σ₀.
pub fn husimi_of_state(spec: &FluctuationSpec) -> Result<HusimiGaussian> {
    spec.validate()?;
    if spec.kind == FluctuationKind::None {
        return Err(Error::Domain(
            "kind = none carries no fluctuation distribution".into(),
        ));
    }
    if spec.intensity <= 0.0 {
        return Err(Error::Domain("fluctuation intensity must be > 0".into()));
    }
    let sigma0 = VACUUM_FIELD_VARIANCE;
    let nbar = spec.intensity / sigma0;
    match spec.kind {
        FluctuationKind::Squeezed => {
            // sinh²r = n̄; e^{±2r} from cosh 2r = 1 + 2n̄ without cancellation.
            let cosh2r = 1.0 + 2.0 * nbar;
            let sinh2r = 2.0 * (nbar * (nbar + 1.0)).sqrt();
            let e2r = cosh2r + sinh2r;
            let em2r = 1.0 / e2r;
            let orientation = match spec.quadrature {
                SqueezedQuadrature::Amplitude => 0.0,
                SqueezedQuadrature::Phase => PI / 2.0,
            };
            Ok(HusimiGaussian {
                center: Complex64::new(0.0, 0.0),
                sigma_major: sigma0 * (e2r + 1.0) / 2.0,
                sigma_minor: sigma0 * (em2r + 1.0) / 2.0,
                orientation,
            })
        }
        FluctuationKind::Thermal => {
            let sigma = sigma0 * (1.0 + nbar);
            Ok(HusimiGaussian {
                center: Complex64::new(0.0, 0.0),
                sigma_major: sigma,
                sigma_minor: sigma,
                orientation: 0.0,
            })
        }
        FluctuationKind::None => unreachable!(),
    }
}

/// Absolute α-plane angle of the Husimi minor axis for this drive.
pub fn minor_axis_angle(cfg: &DriveConfig, h: &HusimiGaussian) -> f64 {
    carrier_angle(cfg.fluctuation.target_mode, cfg.fluctuation.axis) + h.orientation
}

/// One classical realization of the drive: mean bicircular field plus the
/// linearly polarized fluctuation `δE(t) = Re[α e^{imωt}]` on the target
/// axis, all envelope-modulated.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub alpha: Complex64,
    pub omega: f64,
    pub grid: TimeGrid,
    pub e_par: Vec<f64>,
    pub e_perp: Vec<f64>,
}

pub fn sample_classical_field(cfg: &DriveConfig, alpha: Complex64) -> Result<FieldSample> {
    cfg.validate()?;
    let grid = cfg.time_grid;
    let m = cfg.fluctuation.target_mode.harmonic();
    let mut e_par = Vec::with_capacity(grid.n_points);
    let mut e_perp = Vec::with_capacity(grid.n_points);
    for i in 0..grid.n_points {
        let t = grid.time(i);
        let env = cfg.envelope_at(t);
        let (mut ep, mut eq) = raw_bicircular(cfg.amplitude_e0, cfg.omega_fund, t);
        if alpha != Complex64::new(0.0, 0.0) {
            let phase = m * cfg.omega_fund * t;
            let delta = alpha.re * phase.cos() - alpha.im * phase.sin();
            match cfg.fluctuation.axis {
                FluctuationAxis::Parallel => ep += delta,
                FluctuationAxis::Perpendicular => eq += delta,
            }
        }
        e_par.push(env * ep);
        e_perp.push(env * eq);
    }
    Ok(FieldSample { alpha, omega: cfg.omega_fund, grid, e_par, e_perp })
}

/// Closed-form variance of the transformed field operator for a squeezed
/// 2ω component, in vacuum units (vacuum level = 4):
///
/// ```text
///   (ΔE)²(t; τ) = 4 { 1 + sinh r [ sinh r − cosh r · cos(4ω(t+τ)) ] }
/// ```
///
/// Independent of the rotation angle θ; periodic in τ with period π/(2ω).
pub fn analytic_variance(r: f64, omega: f64, t: f64, tau: f64) -> Result<f64> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing parameter r must be >= 0, got {r}")));
    }
    let (sh, ch) = (r.sinh(), r.cosh());
    Ok(4.0 * (1.0 + sh * (sh - ch * (4.0 * omega * (t + tau)).cos())))
}

/// Max over one flat-top cycle of |R(θ)·E_mean(t) − E_mean(t + τ)|.
pub fn mean_field_symmetry_residual(cfg: &DriveConfig, theta: f64, tau: f64) -> Result<f64> {
    cfg.validate()?;
    let t_start = cfg.flat_center_cycle_start();
    let period = cfg.period();
    let n = 720;
    let (st, ct) = theta.sin_cos();
    let mut max_res: f64 = 0.0;
    for k in 0..n {
        let t = t_start + period * k as f64 / n as f64;
        let (ep, eq) = mean_bicircular_field(cfg, t)?;
        let (ep2, eq2) = mean_bicircular_field(cfg, t + tau)?;
        let rp = ct * ep - st * eq;
        let rq = st * ep + ct * eq;
        let res = ((rp - ep2).powi(2) + (rq - eq2).powi(2)).sqrt();
        max_res = max_res.max(res);
    }
    Ok(max_res)
}

/// One row of the Lissajous table: mean curve plus the ±1σ fluctuation band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LissajousPoint {
    pub t: f64,
    pub e_par: f64,
    pub e_perp: f64,
    pub band_lo_par: f64,
    pub band_lo_perp: f64,
    pub band_hi_par: f64,
    pub band_hi_perp: f64,
}

/// Mean Lissajous curve over one flat-top cycle with the per-phase ±1σ band
/// of the fluctuating component projected onto its axis. `kind = none`
/// yields a zero-width band (vacuum excluded by convention).
pub fn lissajous_band(cfg: &DriveConfig, n_samples: usize) -> Result<Vec<LissajousPoint>> {
    cfg.validate()?;
    if n_samples < 2 {
        return Err(Error::Validation("lissajous_band needs n_samples >= 2".into()));
    }
    let fluct = cfg.fluctuation;
    let dist = match fluct.kind {
        FluctuationKind::None => None,
        _ => {
            let h = husimi_of_state(&fluct)?;
            let angle = minor_axis_angle(cfg, &h);
            Some((h.covariance(angle), fluct.target_mode.harmonic()))
        }
    };
    let t_start = cfg.flat_center_cycle_start();
    let period = cfg.period();
    let mut rows = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = t_start + period * k as f64 / n_samples as f64;
        let (ep, eq) = mean_bicircular_field(cfg, t)?;
        let sigma = match dist {
            None => 0.0,
            Some((cov, m)) => {
                // Var[δE(t)] = c^T Σ c with c = (cos mωt, −sin mωt).
                let phase = m * cfg.omega_fund * t;
                let (s, c) = phase.sin_cos();
                let var = cov[0][0] * c * c - 2.0 * cov[0][1] * c * s + cov[1][1] * s * s;
                cfg.envelope_at(t) * var.max(0.0).sqrt()
            }
        };
        let (dp, dq) = match fluct.axis {
            FluctuationAxis::Parallel => (sigma, 0.0),
            FluctuationAxis::Perpendicular => (0.0, sigma),
        };
        rows.push(LissajousPoint {
            t,
            e_par: ep,
            e_perp: eq,
            band_lo_par: ep - dp,
            band_lo_perp: eq - dq,
            band_hi_par: ep + dp,
            band_hi_perp: eq + dq,
        });
    }
    Ok(rows)
}

/// CSV table of the closed-form field variance over one fundamental period
/// (in vacuum units, vacuum level 4).
pub fn write_variance_csv<W: std::io::Write>(
    w: &mut W,
    r: f64,
    omega: f64,
    n_samples: usize,
) -> Result<()> {
    writeln!(w, "t_au,variance")?;
    let period = 2.0 * PI / omega;
    for k in 0..n_samples {
        let t = period * k as f64 / n_samples as f64;
        let v = analytic_variance(r, omega, t, 0.0)?;
        writeln!(w, "{t},{v}")?;
    }
    Ok(())
}

/// CSV dump of a Lissajous table.
pub fn write_lissajous_csv<W: std::io::Write>(w: &mut W, rows: &[LissajousPoint]) -> std::io::Result<()> {
    writeln!(w, "t_au,E_par,E_perp,band_lo_par,band_lo_perp,band_hi_par,band_hi_perp")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.t, r.e_par, r.e_perp, r.band_lo_par, r.band_lo_perp, r.band_hi_par, r.band_hi_perp
        )?;
    }
    Ok(())
}
