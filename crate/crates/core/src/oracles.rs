//! Independent brute-force verifiers backing the test suites: a Fock-space
//! evaluation of the squeezed-state Husimi function, a Monte-Carlo check of
//! the transformed-field variance, and Gaussian-moment estimates of the
//! power-law g²(0) formulas. All are seeded and reproducible; none shares a
//! code path with the implementation it checks.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Photon-number cutoff for Fock-space sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockTruncation {
    pub n_max: usize,
}

impl FockTruncation {
    /// Tail mass below 1e-10 requires n_max ≥ 4 sinh²r + 20.
    pub fn required_for(r: f64) -> usize {
        (4.0 * r.sinh().powi(2)).ceil() as usize + 20
    }
}

/// Husimi function Q(α) = |⟨α|S(r)|0⟩|²/π of a squeezed vacuum, by summing
/// the even-photon-number Fock expansion against coherent-state amplitudes.
/// Factorials are carried in the log domain.
///
/// Convention: S(r) with real r > 0 squeezes the real-α (x) quadrature, so
/// Q narrows along Re α and widens along Im α.
pub fn husimi_fock_oracle(r: f64, alpha: Complex64, trunc: FockTruncation) -> Result<f64> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing parameter must be >= 0, got {r}")));
    }
    let required = FockTruncation::required_for(r);
    if trunc.n_max < required {
        return Err(Error::TruncationInadequate { n_max: trunc.n_max, suggested: required });
    }
    let tanh_r = r.tanh();
    let ln_sech = -r.cosh().ln();
    let a_conj = alpha.conj();
    let ln_alpha = if alpha.norm() > 0.0 { alpha.norm().ln() } else { f64::NEG_INFINITY };
    let arg = a_conj.arg();
    let mut amp = Complex64::new(0.0, 0.0);
    for m in 0..=trunc.n_max / 2 {
        let mf = m as f64;
        let two_m = 2.0 * mf;
        // c_{2m} = sech^{1/2} (−tanh r)^m √((2m)!)/(2^m m!)
        // ⟨α|2m⟩ = e^{−|α|²/2} (α*)^{2m} / √((2m)!)
        let ln_c = 0.5 * ln_sech + mf * tanh_r.ln().max(f64::NEG_INFINITY) + 0.5 * ln_gamma(two_m + 1.0)
            - mf * 2f64.ln()
            - ln_gamma(mf + 1.0);
        let ln_coh = -alpha.norm_sqr() / 2.0 + two_m * ln_alpha - 0.5 * ln_gamma(two_m + 1.0);
        let ln_mag = if m == 0 {
            0.5 * ln_sech - alpha.norm_sqr() / 2.0
        } else if tanh_r == 0.0 || alpha.norm() == 0.0 && m > 0 {
            f64::NEG_INFINITY
        } else {
            ln_c + ln_coh
        };
        if ln_mag == f64::NEG_INFINITY {
            continue;
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        amp += Complex64::from_polar(sign * ln_mag.exp(), two_m * arg);
    }
    Ok(amp.norm_sqr() / std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
}

/// Monte-Carlo variance of the sampled fluctuation field at time t + τ.
///
/// Draws α from the full Husimi distribution of the squeezed mode (photonic
/// units, amplitude-squeezing orientation) and evaluates the classical field
/// 2√2·Re[α e^{−i2ω(t+τ)}]. In these units the vacuum baseline is 4 and the
/// sample variance reproduces the closed form
/// 4{1 + sinh r [sinh r − cosh r cos(4ω(t+τ))]}.
pub fn variance_mc_oracle(
    r: f64,
    omega: f64,
    t: f64,
    tau: f64,
    n_draws: usize,
    seed: u64,
) -> Result<VarianceEstimate> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Domain(format!("squeezing parameter must be >= 0, got {r}")));
    }
    if n_draws < 2 {
        return Err(Error::Domain("need at least 2 draws".into()));
    }
    let var_x = (1.0 + (-2.0 * r).exp()) / 4.0; // squeezed axis
    let var_y = (1.0 + (2.0 * r).exp()) / 4.0; // anti-squeezed axis
    let (sx, sy) = (var_x.sqrt(), var_y.sqrt());
    let theta = 2.0 * omega * (t + tau);
    let (sin_t, cos_t) = theta.sin_cos();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let gx: f64 = StandardNormal.sample(&mut rng);
        let gy: f64 = StandardNormal.sample(&mut rng);
        // Re[α e^{−iθ}] with α = x + iy.
        let field = 2.0 * 2f64.sqrt() * (sx * gx * cos_t + sy * gy * sin_t);
        values.push(field);
    }
    let n = n_draws as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let stderr = ((m4 - variance * variance).max(0.0) / n).sqrt();
    Ok(VarianceEstimate { mean, variance, stderr })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    /// χ ∝ xⁿ of a single Gaussian quadrature (squeezed marginal).
    Squeezed1d,
    /// |χ|² ∝ x^{2n} + y^{2n} over an isotropic 2D Gaussian (thermal).
    Thermal2d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub g2: f64,
    pub stderr: f64,
}

/// Monte-Carlo estimate of g²(0) = ⟨I²⟩/⟨I⟩² for the power-law response
/// models, with a delta-method standard error.
pub fn gaussian_moment_oracle(n: u32, kind: MomentKind, n_draws: usize, seed: u64) -> Result<MomentEstimate> {
    if n < 1 {
        return Err(Error::Domain(format!("power-law order must be >= 1, got {n}")));
    }
    if n_draws < 100 {
        return Err(Error::Domain("need at least 100 draws".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = n as i32;
    let nn = n_draws as f64;
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_draws {
        let intensity = match kind {
            MomentKind::Squeezed1d => {
                let x: f64 = StandardNormal.sample(&mut rng);
                x.powi(2 * p)
            }
            MomentKind::Thermal2d => {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = StandardNormal.sample(&mut rng);
                x.powi(2 * p) + y.powi(2 * p)
            }
        };
        let sq = intensity * intensity;
        sa += sq;
        sb += intensity;
        saa += sq * sq;
        sbb += sq;
        sab += sq * intensity;
    }
    let (ma, mb) = (sa / nn, sb / nn);
    let va = saa / nn - ma * ma;
    let vb = sbb / nn - mb * mb;
    let cab = sab / nn - ma * mb;
    let g2 = ma / (mb * mb);
    // Var(A/B²) ≈ g²·[Var A/A² + 4 Var B/B² − 4 Cov/(A·B)]/n.
    let rel = (va / (ma * ma) + 4.0 * vb / (mb * mb) - 4.0 * cab / (ma * mb)) / nn;
    Ok(MomentEstimate { g2, stderr: g2 * rel.max(0.0).sqrt() })
}
