//! Photon-exchange channels, selection rules, perturbative channel ranking,
//! closed-form g²(0) values, and yield-exponent fitting.
//!
//! A channel is an integer tuple (n1, n2p, n2m): photons exchanged with the
//! strong ω (left-circular) mode, the strong 2ω (right-circular) mode, and
//! the weak squeezing-induced mode of opposite helicity at the target
//! frequency. Positive entries are absorptions, negative ones stimulated
//! emissions. For 2ω squeezing the constraints are
//!
//! ```text
//!   q  = n1 + 2 (n2p + s·n2m)          (energy)
//!   σq = n2p − (s·n2m + n1) ∈ {−1, +1} (spin angular momentum)
//! ```
//!
//! with s = 1 when the drive carries squeezing and s = 0 classically; the
//! classical bicircular rule q = 3n ± 1 is the s = 0 limit.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::field::TargetMode;

/// Default enumeration bound; covers every plateau channel of interest.
pub const DEFAULT_MAX_ABS: i64 = 12;

/// Perturbative weight of a channel. Orders ascend by total photon number,
/// then by weak-mode order; ties are broken in favor of channels absorbing
/// more photons from the strong 2ω field, then from the strong ω field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderKey {
    pub total: u64,
    pub weak: u64,
    pub strong_two_omega_absorbed: u64,
    pub strong_omega_absorbed: u64,
}

impl Ord for OrderKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total
            .cmp(&other.total)
            .then(self.weak.cmp(&other.weak))
            .then(other.strong_two_omega_absorbed.cmp(&self.strong_two_omega_absorbed))
            .then(other.strong_omega_absorbed.cmp(&self.strong_omega_absorbed))
    }
}

impl PartialOrd for OrderKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// One photon-exchange pathway to a harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Channel {
    /// Strong ω-mode photons (left-circular).
    pub n1: i64,
    /// Strong 2ω-mode photons (right-circular).
    pub n2p: i64,
    /// Weak squeezing-induced photons (opposite helicity at the squeezed
    /// frequency; the 2ω left-circular mode for 2ω squeezing).
    pub n2m: i64,
    /// Net spin of the emitted harmonic photon.
    pub sigma: i8,
    pub order: OrderKey,
}

fn order_key(n1: i64, n2p: i64, weak: i64) -> OrderKey {
    OrderKey {
        total: n1.unsigned_abs() + n2p.unsigned_abs() + weak.unsigned_abs(),
        weak: weak.unsigned_abs(),
        strong_two_omega_absorbed: n2p.max(0) as u64,
        strong_omega_absorbed: n1.max(0) as u64,
    }
}

fn sort_channels(mut channels: Vec<Channel>) -> Vec<Channel> {
    channels.sort_by(|a, b| {
        a.order
            .cmp(&b.order)
            .then(a.n1.cmp(&b.n1))
            .then(a.n2p.cmp(&b.n2p))
            .then(a.n2m.cmp(&b.n2m))
    });
    channels
}

/// All channels reaching harmonic `q` under Eqs. q = n1 + 2(n2p + s·n2m),
/// σ = n2p − (s·n2m + n1), with |n_i| ≤ max_abs, sorted by perturbative
/// order. An empty list means the harmonic is forbidden at this bound.
pub fn enumerate_channels(q: i64, s: u8, max_abs: i64) -> Result<Vec<Channel>> {
    if q < 1 {
        return Err(Error::Domain(format!("harmonic order must be >= 1, got {q}")));
    }
    if max_abs < 1 {
        return Err(Error::Domain(format!("enumeration bound must be >= 1, got {max_abs}")));
    }
    if s > 1 {
        return Err(Error::Domain(format!("squeezing flag must be 0 or 1, got {s}")));
    }
    let s_i = i64::from(s);
    let mut out = Vec::new();
    for n1 in -max_abs..=max_abs {
        for n2p in -max_abs..=max_abs {
            let weak_range = if s == 1 { -max_abs..=max_abs } else { 0..=0 };
            for n2m in weak_range {
                if n1 + 2 * (n2p + s_i * n2m) != q {
                    continue;
                }
                let sigma = n2p - (s_i * n2m + n1);
                if sigma.abs() != 1 {
                    continue;
                }
                out.push(Channel {
                    n1,
                    n2p,
                    n2m,
                    sigma: sigma as i8,
                    order: order_key(n1, n2p, if s == 1 { n2m } else { 0 }),
                });
            }
        }
    }
    Ok(sort_channels(out))
}

/// Classically allowed harmonics and their helicity: q = 3n − 1 is emitted
/// right-circular (with the 2ω component), q = 3n + 1 left-circular (with
/// ω), q = 3n absent.
pub fn classical_allowed(q_max: i64) -> Result<Vec<(i64, i8)>> {
    if q_max < 2 {
        return Err(Error::Domain(format!("q_max must be >= 2, got {q_max}")));
    }
    Ok((1..=q_max)
        .filter_map(|q| match q % 3 {
            1 => Some((q, -1i8)),
            2 => Some((q, 1i8)),
            _ => None,
        })
        .collect())
}

/// Channels for squeezing on the ω mode: the weak mode is the
/// opposite-helicity (right-circular) ω component, so
/// q = n1 + w + 2·n2p and σ = n2p + w − n1. The weak count is stored in the
/// `n2m` slot of [`Channel`].
fn enumerate_channels_omega_target(q: i64, max_abs: i64) -> Vec<Channel> {
    let mut out = Vec::new();
    for n1 in -max_abs..=max_abs {
        for n2p in -max_abs..=max_abs {
            for w in -max_abs..=max_abs {
                if n1 + w + 2 * n2p != q {
                    continue;
                }
                let sigma = n2p + w - n1;
                if sigma.abs() != 1 {
                    continue;
                }
                out.push(Channel { n1, n2p, n2m: w, sigma: sigma as i8, order: order_key(n1, n2p, w) });
            }
        }
    }
    sort_channels(out)
}

/// The perturbatively dominant channel for harmonic `q` in the weak-
/// fluctuation regime. Requires s = 1 (a classical drive has no weak mode).
pub fn dominant_channel(q: i64, s: u8, squeeze_target: TargetMode) -> Result<Channel> {
    if s != 1 {
        return Err(Error::Domain("dominant_channel needs s = 1 (squeezed drive)".into()));
    }
    let channels = match squeeze_target {
        TargetMode::TwoOmega => enumerate_channels(q, 1, DEFAULT_MAX_ABS)?,
        TargetMode::Omega => {
            if q < 1 {
                return Err(Error::Domain(format!("harmonic order must be >= 1, got {q}")));
            }
            enumerate_channels_omega_target(q, DEFAULT_MAX_ABS)
        }
    };
    channels
        .into_iter()
        .next()
        .ok_or_else(|| Error::ChannelNotFound(format!("q = {q} within |n| <= {DEFAULT_MAX_ABS}")))
}

/// g²(0) of a fluctuation-induced harmonic whose amplitude scales as the
/// n-th power of a squeezed (1D Gaussian) fluctuation:
/// √π Γ(1/2 + 2n) / Γ(1/2 + n)².
pub fn g2_powerlaw_squeezed(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain(format!("power-law order must be >= 1, got {n}")));
    }
    let n = f64::from(n);
    Ok((0.5 * std::f64::consts::PI.ln() + ln_gamma(0.5 + 2.0 * n) - 2.0 * ln_gamma(0.5 + n)).exp())
}

/// Thermal counterpart: the midpoint (1 + g²_squeezed)/2.
pub fn g2_powerlaw_thermal(n: u32) -> Result<f64> {
    Ok(0.5 * (1.0 + g2_powerlaw_squeezed(n)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub rms_log_residual: f64,
}

/// Least-squares fit of Y = A·Eⁿ on log-log axes.
pub fn fit_yield_exponent(pairs: &[(f64, f64)]) -> Result<YieldFit> {
    if pairs.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(e, y)| e <= 0.0 || y <= 0.0 || !e.is_finite() || !y.is_finite()) {
        return Err(Error::Domain("all (E, Y) pairs must be positive and finite".into()));
    }
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(e, y) in pairs {
        let (x, z) = (e.ln(), y.ln());
        sx += x;
        sy += z;
        sxx += x * x;
        sxy += x * z;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::Domain("degenerate fit: all abscissae equal".into()));
    }
    let exponent = (n * sxy - sx * sy) / denom;
    let intercept = (sy - exponent * sx) / n;
    let rms = (pairs
        .iter()
        .map(|&(e, y)| (y.ln() - intercept - exponent * e.ln()).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(YieldFit { amplitude: intercept.exp(), exponent, rms_log_residual: rms })
}

/// The cyclic dynamical symmetry of a mean field: elements k combine a
/// polarization rotation by 2πk/`rotation_order` with a time shift by
/// kT/`shift_order`. The bicircular trefoil is (3, 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanFieldSymmetry {
    pub rotation_order: u32,
    pub shift_order: u32,
}

impl MeanFieldSymmetry {
    pub fn bicircular() -> Self {
        MeanFieldSymmetry { rotation_order: 3, shift_order: 3 }
    }
}

/// Symmetry of the field fluctuations: invariant under pure time shifts by
/// multiples of T/`shift_order` at any rotation angle. The squeezed-variance
/// oscillation cos(4ω(t+τ)) has period T/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluctuationSymmetry {
    pub shift_order: u32,
}

impl FluctuationSymmetry {
    pub fn squeezed_bicircular() -> Self {
        FluctuationSymmetry { shift_order: 4 }
    }
}

/// A joint space-time operation: rotation by `rot_steps`·2π/`rot_order`
/// and time shift by `shift_steps`·T/`shift_lattice`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryOp {
    pub rot_steps: u32,
    pub rot_order: u32,
    pub shift_steps: u32,
    pub shift_lattice: u32,
}

impl SymmetryOp {
    pub fn is_identity(&self) -> bool {
        self.rot_steps == 0 && self.shift_steps == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryGroup {
    pub elements: Vec<SymmetryOp>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn is_identity_only(&self) -> bool {
        self.elements.len() == 1 && self.elements[0].is_identity()
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn mean_group_on_lattice(mean: MeanFieldSymmetry, lattice: u32) -> SymmetryGroup {
    let step = lattice / mean.shift_order;
    SymmetryGroup {
        elements: (0..mean.rotation_order.max(1))
            .map(|k| SymmetryOp {
                rot_steps: k,
                rot_order: mean.rotation_order,
                shift_steps: (k * step) % lattice,
                shift_lattice: lattice,
            })
            .collect(),
    }
}

/// The dynamical symmetry group of the mean bicircular field: rotations by
/// 2πk/3 paired with shifts kT/3.
pub fn bicircular_mean_group() -> SymmetryGroup {
    let mean = MeanFieldSymmetry::bicircular();
    mean_group_on_lattice(mean, mean.shift_order)
}

/// Joint invariance set of the mean-field symmetry family and the
/// fluctuation symmetry (if any), on one fundamental period. Without
/// fluctuations the full mean group survives, reproducing the classical
/// q = 3n ± 1 rule; the squeezed bicircular combination leaves only the
/// identity, so every harmonic order is in principle allowed.
pub fn residual_symmetry_group(
    mean: MeanFieldSymmetry,
    fluct: Option<FluctuationSymmetry>,
) -> SymmetryGroup {
    let Some(fluct) = fluct else {
        return mean_group_on_lattice(mean, mean.shift_order);
    };
    // Common shift lattice of the two families.
    let lattice = mean.shift_order / gcd(mean.shift_order, fluct.shift_order) * fluct.shift_order;
    let group = mean_group_on_lattice(mean, lattice);
    // The fluctuation symmetry accepts any rotation but only shifts on the
    // T/shift_order sub-lattice.
    let fluct_step = lattice / fluct.shift_order;
    let elements =
        group.elements.into_iter().filter(|op| op.shift_steps % fluct_step == 0).collect();
    SymmetryGroup { elements }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn classical_limit_recovers_three_n_plus_minus_one() {
        let allowed: Vec<i64> = (1..=30)
            .filter(|&q| !enumerate_channels(q, 0, DEFAULT_MAX_ABS).unwrap().is_empty())
            .collect();
        let expected: Vec<i64> = (1..=30).filter(|q| q % 3 != 0).collect();
        assert_eq!(allowed, expected);
    }

    #[test]
    fn forbidden_q3_is_empty_classically() {
        assert!(enumerate_channels(3, 0, 6).unwrap().is_empty());
    }

    #[test]
    fn squeezed_q3_contains_the_two_sm_channels() {
        let channels = enumerate_channels(3, 1, 2).unwrap();
        assert!(channels.iter().any(|c| c.n1 == -1 && c.n2p == 1 && c.n2m == 1 && c.sigma == 1));
        assert!(channels.iter().any(|c| c.n1 == -1 && c.n2p == 0 && c.n2m == 2 && c.sigma == -1));
    }

    #[test]
    fn every_order_opens_under_squeezing() {
        for q in 1..=30 {
            assert!(
                !enumerate_channels(q, 1, DEFAULT_MAX_ABS).unwrap().is_empty(),
                "q = {q} should have a channel"
            );
        }
    }

    #[test]
    fn q5_classical_channel_and_helicity_family() {
        let channels = enumerate_channels(5, 0, 3).unwrap();
        let c = channels.iter().find(|c| c.n1 == 1 && c.n2p == 2).unwrap();
        assert_eq!(c.sigma, 1);
        // σ = +1 family obeys q ≡ 2 (mod 3), i.e. q = 3n − 1.
        for q in 1..=30 {
            for c in enumerate_channels(q, 0, 12).unwrap() {
                if c.sigma == 1 {
                    assert_eq!(q % 3, 2);
                } else {
                    assert_eq!(q % 3, 1);
                }
            }
        }
    }

    #[test]
    fn classical_allowed_table() {
        let table = classical_allowed(9).unwrap();
        assert!(table.contains(&(2, 1)));
        assert!(table.contains(&(4, -1)));
        assert!(!table.iter().any(|&(q, _)| q == 6));
        assert!(classical_allowed(1).is_err());
    }

    #[test]
    fn dominant_channels_match_the_sam_analysis() {
        // 2ω squeezing: channel ① (−1, 1, 1) with σ = +1 (right-circular).
        let c = dominant_channel(3, 1, TargetMode::TwoOmega).unwrap();
        assert_eq!((c.n1, c.n2p, c.n2m, c.sigma), (-1, 1, 1, 1));

        // ω squeezing: the minimal weak-order channels (2 ω-absorptions +
        // 1 weak absorption → σ = −1) and (2 2ω-absorptions + 1 weak
        // emission → σ = +1) tie on (total, weak); the one absorbing from
        // the strong 2ω field wins.
        let c = dominant_channel(3, 1, TargetMode::Omega).unwrap();
        assert_eq!((c.n1, c.n2p, c.n2m, c.sigma), (0, 2, -1, 1));

        assert!(dominant_channel(3, 0, TargetMode::TwoOmega).is_err());
    }

    #[test]
    fn order_key_tie_breaks_on_strong_absorption() {
        // Equal weak order: more strong-2ω absorption ranks first.
        let a = OrderKey { total: 3, weak: 1, strong_two_omega_absorbed: 2, strong_omega_absorbed: 0 };
        let b = OrderKey { total: 3, weak: 1, strong_two_omega_absorbed: 0, strong_omega_absorbed: 2 };
        assert!(a < b);
        // But weak order dominates strong absorption.
        let c = OrderKey { total: 3, weak: 2, strong_two_omega_absorbed: 5, strong_omega_absorbed: 0 };
        assert!(a < c);
        // And total photon number dominates everything.
        let d = OrderKey { total: 5, weak: 1, strong_two_omega_absorbed: 5, strong_omega_absorbed: 5 };
        assert!(a < d);
    }

    #[test]
    fn first_order_channels_exist_for_fluctuation_induced_bins() {
        // q = 18 and q = 24 carry first-order (|n2m| = 1) channels in both
        // polarizations; these drive the linear χ(α) scaling.
        for q in [18i64, 24] {
            let channels = enumerate_channels(q, 1, DEFAULT_MAX_ABS).unwrap();
            for sigma in [1i8, -1] {
                assert!(
                    channels.iter().any(|c| c.sigma == sigma && c.n2m.abs() == 1),
                    "no first-order σ = {sigma} channel at q = {q}"
                );
            }
        }
    }

    #[test]
    fn g2_powerlaw_values() {
        assert_relative_eq!(g2_powerlaw_squeezed(1).unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(g2_powerlaw_squeezed(2).unwrap(), 35.0 / 3.0, epsilon = 1e-10);
        assert_relative_eq!(g2_powerlaw_thermal(1).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(g2_powerlaw_thermal(2).unwrap(), 19.0 / 3.0, epsilon = 1e-10);
        assert!(g2_powerlaw_squeezed(0).is_err());
        // Monotone growth in the power-law order.
        for n in 1..=10 {
            assert!(g2_powerlaw_squeezed(n + 1).unwrap() > g2_powerlaw_squeezed(n).unwrap());
        }
        // The thermal value is always the midpoint of 1 and the squeezed one.
        for n in 1..=6 {
            let s = g2_powerlaw_squeezed(n).unwrap();
            let t = g2_powerlaw_thermal(n).unwrap();
            assert_relative_eq!(t, 0.5 * (1.0 + s), epsilon = 1e-12);
        }
    }

    #[test]
    fn yield_fit_recovers_exponents() {
        let pairs: Vec<(f64, f64)> = (1..=8).map(|k| (k as f64, 2.0 * k as f64)).collect();
        let fit = fit_yield_exponent(&pairs).unwrap();
        assert_relative_eq!(fit.exponent, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.amplitude, 2.0, epsilon = 1e-10);
        assert!(fit.rms_log_residual < 1e-12);

        let noisy: Vec<(f64, f64)> = (1..=8)
            .map(|k| {
                let e = 0.5 * k as f64;
                (e, 5.0 * e.powi(3) * (1.0 + 1e-6 * ((k * 7919) % 13) as f64 / 13.0))
            })
            .collect();
        let fit = fit_yield_exponent(&noisy).unwrap();
        assert_relative_eq!(fit.exponent, 3.0, epsilon = 1e-3);

        assert!(fit_yield_exponent(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_yield_exponent(&[(1.0, 1.0), (2.0, -2.0), (3.0, 3.0)]).is_err());
    }

    #[test]
    fn symmetry_groups() {
        let mean = bicircular_mean_group();
        assert_eq!(mean.order(), 3);
        assert!(!mean.is_identity_only());

        // τ₃r₃ ∩ {pure shifts by π/(2ω)} = identity.
        let residual = residual_symmetry_group(
            MeanFieldSymmetry::bicircular(),
            Some(FluctuationSymmetry::squeezed_bicircular()),
        );
        assert!(residual.is_identity_only(), "squeezed bicircular residual: {residual:?}");

        // s = 0 limit: the full mean group survives.
        let classical = residual_symmetry_group(MeanFieldSymmetry::bicircular(), None);
        assert_eq!(classical.order(), 3);

        // A shift family commensurate with the mean group keeps more than
        // the identity (sanity check of the lattice arithmetic).
        let commensurate = residual_symmetry_group(
            MeanFieldSymmetry::bicircular(),
            Some(FluctuationSymmetry { shift_order: 3 }),
        );
        assert_eq!(commensurate.order(), 3);
    }
}
