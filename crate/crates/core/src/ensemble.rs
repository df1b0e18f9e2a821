//! Ensemble reduction: average single-sample spectra over the fluctuation
//! distribution to get per-harmonic intensity moments, helicity, and g²(0).
//!
//! The phase-space integral ∫ d²α Q(α) f(χ(α)) is discretized by one of
//! three interchangeable quadrature schemes, registered by name and selected
//! at runtime:
//!
//! * `gauss_hermite_1d` — nodes along the anti-squeezed axis only; valid for
//!   strongly squeezed distributions where χ(α) ≃ χ(α_major), and refused
//!   for isotropic (thermal) ones;
//! * `gauss_hermite_2d` — tensor-product nodes on both axes;
//! * `monte_carlo` — seeded Gaussian draws with equal weights.
//!
//! SFA runs across nodes may execute concurrently; moments are reduced in
//! fixed node order, so results are bit-identical run to run.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{husimi_of_state, minor_axis_angle, DriveConfig, HusimiGaussian};
use crate::sfa::AtomSpec;
use crate::spectra::{single_sample_spectrum, HarmonicAmplitude, Polarization, WindowSpec};

/// Gauss–Hermite nodes and weights for the physicists' weight e^{−x²}.
///
/// Roots of the orthonormal Hermite polynomial by bisection + Newton
/// refinement; weights from the Christoffel sum 1/Σ_{k<n} h̃_k(x)². The
/// weights sum to √π.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Validation("Gauss–Hermite order must be >= 1".into()));
    }
    // h̃_n(x) and h̃_{n−1}(x) via the orthonormal three-term recurrence.
    let eval = |x: f64| -> (f64, f64) {
        let mut hm = 0.0f64;
        let mut h = std::f64::consts::PI.powf(-0.25);
        for k in 0..n {
            let hp = x * (2.0 / (k as f64 + 1.0)).sqrt() * h - (k as f64 / (k as f64 + 1.0)).sqrt() * hm;
            hm = h;
            h = hp;
        }
        (h, hm)
    };
    // All roots lie inside ±√(2n+1); scan for sign changes on the positive
    // half, refine, and mirror.
    let bound = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    let scan = 40 * n;
    let mut roots = Vec::new();
    let mut prev_x = 0.0;
    let mut prev_v = eval(0.0).0;
    if n % 2 == 1 {
        roots.push(0.0);
    }
    for k in 1..=scan {
        let x = bound * k as f64 / scan as f64;
        let v = eval(x).0;
        if prev_v == 0.0 && prev_x > 0.0 {
            roots.push(prev_x);
        } else if prev_v * v < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            let (mut fa, _) = eval(a);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                let (fm, _) = eval(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            let mut r = 0.5 * (a + b);
            // Newton polish: h̃_n'(x) = √(2n) h̃_{n−1}(x).
            for _ in 0..4 {
                let (f, fm1) = eval(r);
                let deriv = (2.0 * n as f64).sqrt() * fm1;
                if deriv != 0.0 {
                    r -= f / deriv;
                }
            }
            roots.push(r);
        }
        prev_x = x;
        prev_v = v;
    }
    let mut nodes: Vec<f64> = roots.iter().filter(|&&r| r > 0.0).map(|&r| -r).collect();
    nodes.extend(roots.iter().copied());
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if nodes.len() != n {
        return Err(Error::Validation(format!(
            "Gauss–Hermite root finding recovered {} of {} roots",
            nodes.len(),
            n
        )));
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let mut hm = 0.0f64;
            let mut h = std::f64::consts::PI.powf(-0.25);
            let mut sum = h * h;
            for k in 0..n - 1 {
                let hp = x * (2.0 / (k as f64 + 1.0)).sqrt() * h - (k as f64 / (k as f64 + 1.0)).sqrt() * hm;
                hm = h;
                h = hp;
                sum += h * h;
            }
            1.0 / sum
        })
        .collect();
    Ok((nodes, weights))
}

/// Discretization of the fluctuation distribution: complex nodes with
/// positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub scheme: String,
}

impl QuadratureGrid {
    /// Single node at the distribution center; the exact grid for a drive
    /// without fluctuations.
    pub fn degenerate() -> Self {
        QuadratureGrid { nodes: vec![Complex64::new(0.0, 0.0)], weights: vec![1.0], scheme: "degenerate".into() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() != self.weights.len() || self.nodes.is_empty() {
            return Err(Error::Validation("quadrature nodes/weights mismatch".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("quadrature weights sum to {total}, not 1")));
        }
        if self.nodes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("quadrature nodes must be finite".into()));
        }
        Ok(())
    }
}

/// A quadrature strategy over the Husimi Gaussian. `minor_angle` is the
/// absolute α-plane angle of the distribution's minor axis.
pub trait QuadratureScheme: Sync + Send {
    fn name(&self) -> &'static str;
    fn build(&self, h: &HusimiGaussian, minor_angle: f64, n: usize, seed: u64) -> Result<QuadratureGrid>;
}

struct GaussHermite1d;
struct GaussHermite2d;
struct MonteCarlo;

impl QuadratureScheme for GaussHermite1d {
    fn name(&self) -> &'static str {
        "gauss_hermite_1d"
    }

    fn build(&self, h: &HusimiGaussian, minor_angle: f64, n: usize, _seed: u64) -> Result<QuadratureGrid> {
        h.validate()?;
        // The marginal reduction needs a dominant axis; an isotropic
        // (thermal) distribution has none.
        if h.sigma_major < 2.0 * h.sigma_minor {
            return Err(Error::SchemeRefused(
                "gauss_hermite_1d is a marginal approximation for strongly squeezed \
                 distributions; use gauss_hermite_2d or monte_carlo for isotropic ones"
                    .into(),
            ));
        }
        let (x, w) = gauss_hermite(n)?;
        let dir = Complex64::from_polar(1.0, minor_angle + std::f64::consts::FRAC_PI_2);
        let scale = (2.0 * h.sigma_major).sqrt();
        let norm = std::f64::consts::PI.sqrt();
        Ok(QuadratureGrid {
            nodes: x.iter().map(|&xi| h.center + dir * (scale * xi)).collect(),
            weights: w.iter().map(|&wi| wi / norm).collect(),
            scheme: self.name().into(),
        })
    }
}

impl QuadratureScheme for GaussHermite2d {
    fn name(&self) -> &'static str {
        "gauss_hermite_2d"
    }

    fn build(&self, h: &HusimiGaussian, minor_angle: f64, n: usize, _seed: u64) -> Result<QuadratureGrid> {
        h.validate()?;
        let per_axis = (n as f64).sqrt().round() as usize;
        if per_axis * per_axis != n {
            return Err(Error::Validation(format!(
                "gauss_hermite_2d needs a square node count, got {n}"
            )));
        }
        let (x, w) = gauss_hermite(per_axis)?;
        let frame = Complex64::from_polar(1.0, minor_angle);
        let (su, sv) = ((2.0 * h.sigma_minor).sqrt(), (2.0 * h.sigma_major).sqrt());
        let norm = std::f64::consts::PI;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (xu, wu) in x.iter().zip(&w) {
            for (xv, wv) in x.iter().zip(&w) {
                nodes.push(h.center + frame * Complex64::new(su * xu, sv * xv));
                weights.push(wu * wv / norm);
            }
        }
        Ok(QuadratureGrid { nodes, weights, scheme: self.name().into() })
    }
}

impl QuadratureScheme for MonteCarlo {
    fn name(&self) -> &'static str {
        "monte_carlo"
    }

    fn build(&self, h: &HusimiGaussian, minor_angle: f64, n: usize, seed: u64) -> Result<QuadratureGrid> {
        h.validate()?;
        if n == 0 {
            return Err(Error::Validation("monte_carlo needs at least one draw".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = Complex64::from_polar(1.0, minor_angle);
        let (su, sv) = (h.sigma_minor.sqrt(), h.sigma_major.sqrt());
        let nodes = (0..n)
            .map(|_| {
                let gu: f64 = StandardNormal.sample(&mut rng);
                let gv: f64 = StandardNormal.sample(&mut rng);
                h.center + frame * Complex64::new(su * gu, sv * gv)
            })
            .collect();
        Ok(QuadratureGrid { nodes, weights: vec![1.0 / n as f64; n], scheme: self.name().into() })
    }
}

const SCHEMES: &[&dyn QuadratureScheme] = &[&GaussHermite1d, &GaussHermite2d, &MonteCarlo];

pub fn scheme_registry() -> &'static [&'static dyn QuadratureScheme] {
    SCHEMES
}

pub fn scheme_by_name(name: &str) -> Result<&'static dyn QuadratureScheme> {
    SCHEMES
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| Error::UnknownStrategy {
            kind: "quadrature scheme",
            name: name.to_string(),
            available: SCHEMES.iter().map(|s| s.name()).collect::<Vec<_>>().join(", "),
        })
}

/// Build a quadrature grid for a Husimi distribution using the named scheme.
pub fn build_quadrature(
    h: &HusimiGaussian,
    minor_angle: f64,
    scheme: &str,
    n: usize,
    seed: u64,
) -> Result<QuadratureGrid> {
    let grid = scheme_by_name(scheme)?.build(h, minor_angle, n, seed)?;
    grid.validate()?;
    Ok(grid)
}

/// Grid for a full drive config: resolves the Husimi distribution and the
/// axis frame; a fluctuation-free drive gets the degenerate single node.
pub fn build_quadrature_for(cfg: &DriveConfig, scheme: &str, n: usize, seed: u64) -> Result<QuadratureGrid> {
    if cfg.fluctuation.kind == crate::field::FluctuationKind::None || cfg.fluctuation.intensity == 0.0 {
        return Ok(QuadratureGrid::degenerate());
    }
    let h = husimi_of_state(&cfg.fluctuation)?;
    build_quadrature(&h, minor_axis_angle(cfg, &h), scheme, n, seed)
}

/// Second and fourth moments of |χ| for one harmonic order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QMoments {
    pub q: u32,
    pub m2_r: f64,
    pub m2_l: f64,
    pub m4_r: f64,
    pub m4_l: f64,
}

impl QMoments {
    pub fn m2(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::R => self.m2_r,
            Polarization::L => self.m2_l,
        }
    }

    pub fn m4(&self, pol: Polarization) -> f64 {
        match pol {
            Polarization::R => self.m4_r,
            Polarization::L => self.m4_l,
        }
    }
}

/// Ensemble-averaged spectrum: per (q, polarization) moments of |χ| over the
/// Husimi distribution, with scheme metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpectrumEnsemble {
    pub scheme: String,
    pub n_nodes: usize,
    pub moments: Vec<QMoments>,
}

impl HarmonicSpectrumEnsemble {
    pub fn at(&self, q: u32) -> Option<&QMoments> {
        self.moments.iter().find(|m| m.q == q)
    }

    /// Standard error of m2 for equal-weight (Monte-Carlo) grids:
    /// sqrt((m4 − m2²)/n).
    pub fn m2_stderr(&self, q: u32, pol: Polarization) -> Option<f64> {
        let m = self.at(q)?;
        Some(((m.m4(pol) - m.m2(pol).powi(2)).max(0.0) / self.n_nodes as f64).sqrt())
    }
}

/// g²(0) = ⟨|χ|⁴⟩ / ⟨|χ|²⟩².
pub fn g2_zero(ens: &HarmonicSpectrumEnsemble, q: u32, pol: Polarization) -> Result<f64> {
    let m = ens
        .at(q)
        .ok_or_else(|| Error::UndefinedStatistic(format!("harmonic q = {q} not in ensemble")))?;
    let (m2, m4) = (m.m2(pol), m.m4(pol));
    if m2 <= 0.0 {
        return Err(Error::UndefinedStatistic(format!(
            "harmonic q = {q} has zero intensity in polarization {pol:?}"
        )));
    }
    let g2 = m4 / (m2 * m2);
    if !g2.is_finite() {
        return Err(Error::UndefinedStatistic(format!(
            "harmonic q = {q} intensity underflows in polarization {pol:?}"
        )));
    }
    Ok(g2)
}

/// Normalized intensity contrast (m2_R − m2_L)/(m2_R + m2_L) in [−1, 1].
pub fn helicity(ens: &HarmonicSpectrumEnsemble, q: u32) -> Result<f64> {
    let m = ens
        .at(q)
        .ok_or_else(|| Error::UndefinedStatistic(format!("harmonic q = {q} not in ensemble")))?;
    let total = m.m2_r + m.m2_l;
    if total <= 0.0 {
        return Err(Error::UndefinedStatistic(format!("harmonic q = {q} absent in both polarizations")));
    }
    Ok((m.m2_r - m.m2_l) / total)
}

/// Cache of single-sample spectra keyed by (atom, drive, window, α); shares
/// SFA runs across intensity sweeps that revisit the same node (the α = 0
/// center node in particular).
#[derive(Default)]
pub struct SpectrumCache {
    map: HashMap<CacheKey, Vec<HarmonicAmplitude>>,
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    ip: u64,
    dme: String,
    omega: u64,
    e0: u64,
    ramp: u32,
    flat: u32,
    n_points: usize,
    target: u8,
    axis: u8,
    alpha_re: u64,
    alpha_im: u64,
    window_start: u64,
    window_cycles: u32,
    q_max: usize,
}

fn canon_bits(v: f64) -> u64 {
    // Fold −0.0 into +0.0 so sign-of-zero never splits cache entries.
    (if v == 0.0 { 0.0f64 } else { v }).to_bits()
}

impl CacheKey {
    fn new(atom: &AtomSpec, cfg: &DriveConfig, window: &WindowSpec, alpha: Complex64, q_max: usize) -> Self {
        CacheKey {
            ip: canon_bits(atom.ip),
            dme: atom.dme_model.clone(),
            omega: canon_bits(cfg.omega_fund),
            e0: canon_bits(cfg.amplitude_e0),
            ramp: cfg.envelope.ramp_cycles,
            flat: cfg.envelope.flat_cycles,
            n_points: cfg.time_grid.n_points,
            target: cfg.fluctuation.target_mode.harmonic() as u8,
            axis: matches!(cfg.fluctuation.axis, crate::field::FluctuationAxis::Perpendicular) as u8,
            alpha_re: canon_bits(alpha.re),
            alpha_im: canon_bits(alpha.im),
            window_start: canon_bits(window.start_cycle),
            window_cycles: window.cycles,
            q_max,
        }
    }
}

/// Single-sample spectrum routed through the cache (one SFA run per
/// distinct α for a given atom/drive/window).
pub fn single_sample_spectrum_cached(
    atom: &AtomSpec,
    cfg: &DriveConfig,
    alpha: Complex64,
    window: &WindowSpec,
    q_max: usize,
    cache: &mut SpectrumCache,
) -> Result<Vec<HarmonicAmplitude>> {
    let key = CacheKey::new(atom, cfg, window, alpha, q_max);
    if let Some(hit) = cache.map.get(&key) {
        return Ok(hit.clone());
    }
    let spec = single_sample_spectrum(atom, cfg, alpha, window, q_max)?;
    cache.map.insert(key, spec.clone());
    Ok(spec)
}

/// Weighted per-harmonic moments over the quadrature grid. One SFA run per
/// node; reduction in fixed node order.
pub fn ensemble_spectrum(
    atom: &AtomSpec,
    cfg: &DriveConfig,
    grid: &QuadratureGrid,
    window: &WindowSpec,
    q_max: usize,
) -> Result<HarmonicSpectrumEnsemble> {
    let mut cache = SpectrumCache::new();
    ensemble_spectrum_cached(atom, cfg, grid, window, q_max, &mut cache)
}

pub fn ensemble_spectrum_cached(
    atom: &AtomSpec,
    cfg: &DriveConfig,
    grid: &QuadratureGrid,
    window: &WindowSpec,
    q_max: usize,
    cache: &mut SpectrumCache,
) -> Result<HarmonicSpectrumEnsemble> {
    grid.validate()?;
    let mut moments: Vec<QMoments> = (1..=q_max as u32)
        .map(|q| QMoments { q, m2_r: 0.0, m2_l: 0.0, m4_r: 0.0, m4_l: 0.0 })
        .collect();
    for (index, (&alpha, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        let key = CacheKey::new(atom, cfg, window, alpha, q_max);
        let amps: &Vec<HarmonicAmplitude> = match cache.map.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let spec = single_sample_spectrum(atom, cfg, alpha, window, q_max).map_err(|err| {
                    Error::NodeFailed {
                        index,
                        alpha_re: alpha.re,
                        alpha_im: alpha.im,
                        source: Box::new(err),
                    }
                })?;
                e.insert(spec)
            }
        };
        for (m, a) in moments.iter_mut().zip(amps.iter()) {
            let (ir, il) = (a.chi_r.norm_sqr(), a.chi_l.norm_sqr());
            m.m2_r += w * ir;
            m.m2_l += w * il;
            m.m4_r += w * ir * ir;
            m.m4_l += w * il * il;
        }
    }
    Ok(HarmonicSpectrumEnsemble { scheme: grid.scheme.clone(), n_nodes: grid.nodes.len(), moments })
}
