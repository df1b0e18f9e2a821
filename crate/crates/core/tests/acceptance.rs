//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured numbers (run with `--nocapture` to see them on success).
//!
//! Heavy ensembles are computed once and shared across criteria. Paper
//! parameters throughout: hydrogen (I_p = 0.5), ω = 0.057, E0 = 0.037 a.u.,
//! 2ω-parallel squeezing unless stated otherwise.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use trefoil_core::ensemble::{
    build_quadrature_for, ensemble_spectrum, ensemble_spectrum_cached, gauss_hermite, g2_zero,
    helicity, HarmonicSpectrumEnsemble, QuadratureGrid, SpectrumCache,
};
use trefoil_core::field::{
    analytic_variance, mean_field_symmetry_residual, DriveConfig, EnvelopeSpec, FluctuationKind,
    FluctuationSpec, TargetMode,
};
use trefoil_core::oracles::{gaussian_moment_oracle, variance_mc_oracle, MomentKind};
use trefoil_core::rules::{
    dominant_channel, enumerate_channels, fit_yield_exponent, g2_powerlaw_squeezed,
    g2_powerlaw_thermal, DEFAULT_MAX_ABS,
};
use trefoil_core::sfa::AtomSpec;
use trefoil_core::spectra::{single_sample_spectrum, Polarization, WindowSpec};

const SPC: usize = 1152;
const Q_MAX: usize = 30;
const SWEEP_INTENSITIES: [f64; 4] = [0.0, 1e-10, 1e-9, 1e-8];

fn atom() -> AtomSpec {
    AtomSpec::hydrogen()
}

fn window() -> WindowSpec {
    WindowSpec { start_cycle: 2.5, cycles: 3 }
}

fn drive(fluct: FluctuationSpec) -> DriveConfig {
    DriveConfig::new(0.057, 0.037, fluct, EnvelopeSpec::default(), SPC).unwrap()
}

fn squeezed_2w(intensity: f64) -> DriveConfig {
    if intensity == 0.0 {
        drive(FluctuationSpec::none())
    } else {
        drive(FluctuationSpec {
            kind: FluctuationKind::Squeezed,
            intensity,
            ..FluctuationSpec::none()
        })
    }
}

struct SweepData {
    points: Vec<(f64, HarmonicSpectrumEnsemble)>,
    elapsed: Duration,
    classical_elapsed: Duration,
}

/// Squeezing-intensity sweep shared by criteria 1-3, 7 and 9 (21-node
/// Gauss–Hermite per point, α = 0 node shared through the cache).
fn sweep() -> &'static SweepData {
    static DATA: OnceLock<SweepData> = OnceLock::new();
    DATA.get_or_init(|| {
        let mut cache = SpectrumCache::new();
        let t0 = Instant::now();
        let mut classical_elapsed = Duration::ZERO;
        let points = SWEEP_INTENSITIES
            .iter()
            .map(|&intensity| {
                let tic = Instant::now();
                let cfg = squeezed_2w(intensity);
                let grid = if intensity == 0.0 {
                    QuadratureGrid::degenerate()
                } else {
                    build_quadrature_for(&cfg, "gauss_hermite_1d", 21, 0).unwrap()
                };
                let ens =
                    ensemble_spectrum_cached(&atom(), &cfg, &grid, &window(), Q_MAX, &mut cache)
                        .unwrap();
                if intensity == 0.0 {
                    classical_elapsed = tic.elapsed();
                }
                (intensity, ens)
            })
            .collect();
        SweepData { points, elapsed: t0.elapsed(), classical_elapsed }
    })
}

fn thermal() -> &'static HarmonicSpectrumEnsemble {
    static DATA: OnceLock<HarmonicSpectrumEnsemble> = OnceLock::new();
    DATA.get_or_init(|| {
        let cfg = drive(FluctuationSpec {
            kind: FluctuationKind::Thermal,
            intensity: 1e-9,
            ..FluctuationSpec::none()
        });
        let grid = build_quadrature_for(&cfg, "gauss_hermite_2d", 81, 0).unwrap();
        ensemble_spectrum(&atom(), &cfg, &grid, &window(), Q_MAX).unwrap()
    })
}

fn m2_total(ens: &HarmonicSpectrumEnsemble, q: u32) -> f64 {
    let m = ens.at(q).unwrap();
    m.m2_r + m.m2_l
}

#[test]
fn criterion_1_classical_selection_rules() {
    let data = sweep();
    let classical = &data.points[0].1;

    let mut worst_suppression = f64::INFINITY;
    for q in (3..=27).step_by(3) {
        let reference = 0.5 * (m2_total(classical, q - 1) + m2_total(classical, q + 1));
        let ratio = reference / m2_total(classical, q).max(f64::MIN_POSITIVE);
        worst_suppression = worst_suppression.min(ratio);
        assert!(
            ratio >= 1e4,
            "criterion 1: FAIL — q = {q} suppressed only {ratio:.1e}x"
        );
    }
    let mut worst_dominance = f64::INFINITY;
    for q in (2..=26).step_by(3) {
        let m = classical.at(q).unwrap();
        let ratio = m.m2_r / m.m2_l.max(f64::MIN_POSITIVE);
        worst_dominance = worst_dominance.min(ratio);
        assert!(ratio >= 1e2, "criterion 1: FAIL — q = {q} not right-circular ({ratio:.1e}x)");
    }
    for q in (4..=28).step_by(3) {
        let m = classical.at(q).unwrap();
        let ratio = m.m2_l / m.m2_r.max(f64::MIN_POSITIVE);
        worst_dominance = worst_dominance.min(ratio);
        assert!(ratio >= 1e2, "criterion 1: FAIL — q = {q} not left-circular ({ratio:.1e}x)");
    }
    let secs = data.classical_elapsed.as_secs_f64();
    assert!(secs < 60.0, "criterion 1: FAIL — classical run took {secs:.1} s");
    println!(
        "criterion 1 (classical selection rules): PASS — 3n suppression ≥ {worst_suppression:.1e}x, \
         helicity dominance ≥ {worst_dominance:.1e}x, runtime {secs:.2} s"
    );
}

#[test]
fn criterion_2_fluctuation_induced_harmonics() {
    let data = sweep();
    // The criterion pins q ∈ {18, 21, 24}; monotonicity in fact holds for
    // every forbidden bin, so assert the full set.
    for q in (3..=27).step_by(3) {
        let series: Vec<f64> = data.points.iter().map(|(_, ens)| m2_total(ens, q)).collect();
        for w in series.windows(2) {
            assert!(
                w[1] >= w[0],
                "criterion 2: FAIL — q = {q} not monotone across the sweep ({series:?})"
            );
        }
    }
    let at_max = &data.points[3].1;
    let mut worst_balance: f64 = 1.0;
    for q in [18u32, 21, 24] {
        let m = at_max.at(q).unwrap();
        let ratio = (m.m2_r / m.m2_l).max(m.m2_l / m.m2_r);
        worst_balance = worst_balance.max(ratio);
        assert!(
            ratio <= 1e2,
            "criterion 2: FAIL — q = {q} R/L imbalance {ratio:.1e}x at I = 1e-8"
        );
    }
    let secs = data.elapsed.as_secs_f64();
    assert!(secs < 900.0, "criterion 2: FAIL — sweep took {secs:.0} s");
    println!(
        "criterion 2 (fluctuation-induced harmonics): PASS — q ∈ {{18,21,24}} monotone over \
         I ∈ {{0,1e-10,1e-9,1e-8}}, worst R/L imbalance {worst_balance:.1}x, sweep runtime {secs:.1} s"
    );
}

#[test]
fn criterion_3_squeezed_photon_statistics() {
    let data = sweep();
    let ens = &data.points[3].1; // I_squ = 1e-8
    // Classically allowed plateau harmonics in their native polarization
    // stay Poissonian across the whole sweep.
    for (_, point) in data.points.iter().skip(1) {
        for (q, pol) in [(23u32, Polarization::R), (22, Polarization::L)] {
            let g2 = g2_zero(point, q, pol).unwrap();
            assert!(
                (g2 - 1.0).abs() <= 0.1,
                "criterion 3: FAIL — native q = {q} {pol:?} g2 = {g2:.3}"
            );
        }
    }
    // Fluctuation-induced components: q = 3n in both polarizations and
    // opposite-polarization parts of allowed harmonics.
    let mut measured = Vec::new();
    for (q, pol) in [
        (18u32, Polarization::R),
        (18, Polarization::L),
        (21, Polarization::R),
        (21, Polarization::L),
        (24, Polarization::R),
        (24, Polarization::L),
        (23, Polarization::L),
        (22, Polarization::R),
    ] {
        let g2 = g2_zero(ens, q, pol).unwrap();
        measured.push(g2);
        assert!(
            (g2 - 3.0).abs() <= 0.3,
            "criterion 3: FAIL — induced q = {q} {pol:?} g2 = {g2:.3}"
        );
    }
    let spread = measured.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    println!(
        "criterion 3 (squeezed photon statistics): PASS — native g2 = 1 ± 0.1, induced g2 ∈ \
         [{:.3}, {:.3}] (target 3 ± 0.3)",
        spread.0, spread.1
    );
}

#[test]
fn criterion_4_thermal_contrast() {
    let ens = thermal();
    for (q, pol) in [(23u32, Polarization::R), (22, Polarization::L)] {
        let g2 = g2_zero(ens, q, pol).unwrap();
        assert!(
            (g2 - 1.0).abs() <= 0.1,
            "criterion 4: FAIL — native q = {q} {pol:?} g2 = {g2:.3}"
        );
    }
    let mut spread = (f64::INFINITY, f64::NEG_INFINITY);
    for (q, pol) in [
        (18u32, Polarization::R),
        (18, Polarization::L),
        (21, Polarization::R),
        (21, Polarization::L),
        (24, Polarization::R),
        (24, Polarization::L),
        (23, Polarization::L),
        (22, Polarization::R),
    ] {
        let g2 = g2_zero(ens, q, pol).unwrap();
        spread = (spread.0.min(g2), spread.1.max(g2));
        assert!(
            (g2 - 2.0).abs() <= 0.3,
            "criterion 4: FAIL — induced q = {q} {pol:?} g2 = {g2:.3}"
        );
    }
    println!(
        "criterion 4 (thermal contrast): PASS — induced g2 ∈ [{:.3}, {:.3}] (target 2 ± 0.3), \
         native at 1 ± 0.1",
        spread.0, spread.1
    );
}

#[test]
fn criterion_5_analytic_g2_formulas() {
    let t0 = Instant::now();
    assert!((g2_powerlaw_squeezed(1).unwrap() - 3.0).abs() < 1e-12, "criterion 5: FAIL — squeezed n=1");
    assert!((g2_powerlaw_thermal(1).unwrap() - 2.0).abs() < 1e-12, "criterion 5: FAIL — thermal n=1");
    for n in [1u32, 2, 3] {
        let s = gaussian_moment_oracle(n, MomentKind::Squeezed1d, 1_000_000, 17 + u64::from(n)).unwrap();
        let expected = g2_powerlaw_squeezed(n).unwrap();
        assert!(
            (s.g2 - expected).abs() <= 3.0 * s.stderr,
            "criterion 5: FAIL — squeezed n = {n}: {} ± {} vs {expected}",
            s.g2,
            s.stderr
        );
        let t = gaussian_moment_oracle(n, MomentKind::Thermal2d, 1_000_000, 170 + u64::from(n)).unwrap();
        let expected = g2_powerlaw_thermal(n).unwrap();
        assert!(
            (t.g2 - expected).abs() <= 3.0 * t.stderr,
            "criterion 5: FAIL — thermal n = {n}: {} ± {} vs {expected}",
            t.g2,
            t.stderr
        );
    }
    println!(
        "criterion 5 (analytic g2 formulas): PASS — exact at n = 1, Monte-Carlo oracle within 3σ \
         for n ∈ {{1,2,3}}, runtime {:.1} s",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_6_variance_symmetry_breaking() {
    let t0 = Instant::now();
    let omega = 0.057;
    for r in [0.5f64, 1.0] {
        for phase in [0.0, 1.3, 2.6] {
            let t = phase / (4.0 * omega);
            let est = variance_mc_oracle(r, omega, t, 0.0, 100_000, 23).unwrap();
            let expected = analytic_variance(r, omega, t, 0.0).unwrap();
            // Excess over the common baseline of 4 vacuum units.
            assert!(
                ((est.variance - 4.0) - (expected - 4.0)).abs() <= 3.0 * est.stderr,
                "criterion 6: FAIL — r = {r}, phase = {phase}: {} vs {expected}",
                est.variance
            );
        }
        // π/(2ω) periodicity, both analytically and in the sampled variance.
        let tau_period = std::f64::consts::PI / (2.0 * omega);
        let v0 = analytic_variance(r, omega, 3.0, 0.0).unwrap();
        let v1 = analytic_variance(r, omega, 3.0, tau_period).unwrap();
        assert!((v0 - v1).abs() < 1e-10, "criterion 6: FAIL — analytic period");
        let e0 = variance_mc_oracle(r, omega, 3.0, 0.0, 100_000, 29).unwrap();
        let e1 = variance_mc_oracle(r, omega, 3.0, tau_period, 100_000, 31).unwrap();
        assert!(
            (e0.variance - e1.variance).abs() <= 3.0 * (e0.stderr + e1.stderr),
            "criterion 6: FAIL — MC period"
        );
    }
    let cfg = squeezed_2w(0.0);
    let residual =
        mean_field_symmetry_residual(&cfg, 2.0 * std::f64::consts::PI / 3.0, cfg.period() / 3.0)
            .unwrap();
    assert!(residual < 1e-12, "criterion 6: FAIL — mean-field residual {residual:.2e}");
    println!(
        "criterion 6 (variance symmetry breaking): PASS — MC within 3σ at r ∈ {{0.5,1}}, π/(2ω) \
         period holds, mean-field residual {residual:.1e}, runtime {:.1} s",
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_7_selection_rule_engine() {
    let t0 = Instant::now();
    // Classical limit: exactly {3n ± 1} up to q = 30.
    let allowed: Vec<i64> = (1..=30)
        .filter(|&q| !enumerate_channels(q, 0, DEFAULT_MAX_ABS).unwrap().is_empty())
        .collect();
    let expected: Vec<i64> = (1..=30).filter(|q| q % 3 != 0).collect();
    assert_eq!(allowed, expected, "criterion 7: FAIL — classical set");

    // The q = 3 channels of the supplementary analysis.
    let q3 = enumerate_channels(3, 1, DEFAULT_MAX_ABS).unwrap();
    assert!(
        q3.iter().any(|c| (c.n1, c.n2p, c.n2m, c.sigma) == (-1, 1, 1, 1)),
        "criterion 7: FAIL — channel (−1,1,1,+1) missing"
    );
    assert!(
        q3.iter().any(|c| (c.n1, c.n2p, c.n2m, c.sigma) == (-1, 0, 2, -1)),
        "criterion 7: FAIL — channel (−1,0,2,−1) missing"
    );

    // Engine vs simulation: q = 3 helicity signs at small I_squ for both
    // squeeze targets. For 2ω squeezing the dominant channel is ① (RCP).
    // For ω squeezing the two minimal channels tie on (total, weak) and the
    // strong-2ω-absorption tie-break selects the RCP one; the simulation
    // confirms a (slightly) positive helicity. The supplementary text labels
    // this case LCP via channel tuples that violate its own constraint
    // equations; see the project notes for the analysis.
    let data = sweep();
    let sim_2w = helicity(&data.points[2].1, 3).unwrap(); // I = 1e-9
    let engine_2w = dominant_channel(3, 1, TargetMode::TwoOmega).unwrap();
    assert_eq!((engine_2w.n1, engine_2w.n2p, engine_2w.n2m), (-1, 1, 1));
    assert!(
        (sim_2w > 0.0) == (engine_2w.sigma > 0),
        "criterion 7: FAIL — 2ω target: sim {sim_2w:+.3} vs engine σ = {}",
        engine_2w.sigma
    );

    let cfg = drive(FluctuationSpec {
        kind: FluctuationKind::Squeezed,
        target_mode: TargetMode::Omega,
        intensity: 1e-9,
        ..FluctuationSpec::none()
    });
    let grid = build_quadrature_for(&cfg, "gauss_hermite_1d", 5, 0).unwrap();
    let ens = ensemble_spectrum(&atom(), &cfg, &grid, &window(), 6).unwrap();
    let sim_w = helicity(&ens, 3).unwrap();
    let engine_w = dominant_channel(3, 1, TargetMode::Omega).unwrap();
    assert!(
        (sim_w > 0.0) == (engine_w.sigma > 0),
        "criterion 7: FAIL — ω target: sim {sim_w:+.3} vs engine σ = {}",
        engine_w.sigma
    );
    println!(
        "criterion 7 (selection-rule engine): PASS — {{3n±1}} exact, SM q=3 channels found, \
         helicity signs match simulation (2ω: engine σ = {:+}, sim {sim_2w:+.3}; ω: engine σ = {:+}, \
         sim {sim_w:+.3}; paper's LCP label for ω is inconsistent with its own equations — see notes), \
         runtime {:.1} s",
        engine_2w.sigma,
        engine_w.sigma,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_8_yield_scaling() {
    let t0 = Instant::now();
    let cfg = squeezed_2w(1e-8);
    let mut pairs = Vec::new();
    for k in 0..5 {
        let a = 1e-5 * 10f64.powf(k as f64 / 3.0);
        let amps =
            single_sample_spectrum(&atom(), &cfg, Complex64::new(0.0, a), &window(), 20).unwrap();
        let a18 = amps.iter().find(|x| x.q == 18.0).unwrap();
        pairs.push((a, (a18.chi_r.norm_sqr() + a18.chi_l.norm_sqr()).sqrt()));
    }
    let fit = fit_yield_exponent(&pairs).unwrap();
    assert!(
        (fit.exponent - 1.0).abs() <= 0.15,
        "criterion 8: FAIL — q = 18 amplitude exponent {:.3}",
        fit.exponent
    );
    println!(
        "criterion 8 (yield scaling): PASS — q = 18 response exponent n = {:.3} (target 1 ± 0.15), \
         rms log residual {:.1e}, runtime {:.1} s",
        fit.exponent,
        fit.rms_log_residual,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_9_property_suites() {
    // Basis-change unitarity on random amplitudes.
    let mut state = 0xc0ffee123456789u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for _ in 0..1000 {
        let p = Complex64::new(next(), next());
        let q = Complex64::new(next(), next());
        let (r, l) = trefoil_core::spectra::to_circular_basis(p, q);
        let lhs = r.norm_sqr() + l.norm_sqr();
        let rhs = p.norm_sqr() + q.norm_sqr();
        assert!(
            (lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300),
            "criterion 9: FAIL — unitarity violated"
        );
    }

    // Quadrature normalization: Gauss–Hermite weights sum to √π, grids to 1.
    for n in [1usize, 5, 9, 21, 24] {
        let (_, w) = gauss_hermite(n).unwrap();
        let total: f64 = w.iter().sum();
        assert!(
            (total - std::f64::consts::PI.sqrt()).abs() < 1e-12,
            "criterion 9: FAIL — GH({n}) weights"
        );
    }
    for (scheme, n) in [("gauss_hermite_1d", 21usize), ("gauss_hermite_2d", 81), ("monte_carlo", 64)] {
        let cfg = squeezed_2w(1e-8);
        let grid = build_quadrature_for(&cfg, scheme, n, 7).unwrap();
        let total: f64 = grid.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12, "criterion 9: FAIL — {scheme} weight sum {total}");
    }

    // Moment inequality across every computed ensemble.
    let mut bins = 0usize;
    for ens in sweep().points.iter().map(|(_, e)| e).chain(std::iter::once(thermal())) {
        for m in &ens.moments {
            assert!(
                m.m4_r >= m.m2_r * m.m2_r * (1.0 - 1e-12)
                    && m.m4_l >= m.m2_l * m.m2_l * (1.0 - 1e-12),
                "criterion 9: FAIL — moment inequality at q = {}",
                m.q
            );
            bins += 1;
        }
    }

    // Parseval on a real SFA trace window.
    let cfg = squeezed_2w(0.0);
    let sample =
        trefoil_core::field::sample_classical_field(&cfg, Complex64::new(0.0, 0.0)).unwrap();
    let trace = trefoil_core::sfa::sfa_dipole_trace(&atom(), &sample).unwrap();
    let dense = trefoil_core::spectra::dense_spectrum(&trace, &window()).unwrap();
    let (start, len) = window().resolve(&trace).unwrap();
    let dt = trace.grid.dt();
    // Σ_bins |χ|² over all bins (positive + mirrored negative + DC) equals
    // dt²·K·Σ|d|²; positive bins carry half of the non-DC energy.
    let freq_energy: f64 =
        2.0 * dense.iter().map(|a| a.chi_par.norm_sqr() + a.chi_perp.norm_sqr()).sum::<f64>();
    let time_energy: f64 = trace.d_par[start..start + len]
        .iter()
        .zip(&trace.d_perp[start..start + len])
        .map(|(&a, &b)| a * a + b * b)
        .sum::<f64>()
        * dt
        * dt
        * len as f64;
    // The Nyquist bin (len even) is counted twice in the mirrored sum; it is
    // ~120 orders below the plateau here, so the identity holds tightly.
    assert!(
        (freq_energy - time_energy).abs() <= 1e-10 * time_energy,
        "criterion 9: FAIL — Parseval {freq_energy:.6e} vs {time_energy:.6e}"
    );

    // Determinism: identical ensemble runs give bit-identical moments.
    let cfg = squeezed_2w(1e-9);
    let grid = build_quadrature_for(&cfg, "monte_carlo", 8, 99).unwrap();
    let e1 = ensemble_spectrum(&atom(), &cfg, &grid, &window(), 12).unwrap();
    let e2 = ensemble_spectrum(&atom(), &cfg, &grid, &window(), 12).unwrap();
    let checksum = |e: &HarmonicSpectrumEnsemble| -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        for m in &e.moments {
            for v in [m.m2_r, m.m2_l, m.m4_r, m.m4_l] {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    };
    assert_eq!(checksum(&e1), checksum(&e2), "criterion 9: FAIL — ensemble determinism");

    println!(
        "criterion 9 (property suites): PASS — unitarity (1000 draws), quadrature normalization, \
         moment inequality over {bins} bins, Parseval, determinism checksum {:#018x}",
        checksum(&e1)
    );
}
