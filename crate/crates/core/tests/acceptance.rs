//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `--nocapture` to see them).

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loopdecay::closedform::AsymmetricModel;
use loopdecay::dynamics::{
    self, evolve, evolve_bare_continuum, growth_diagnostic_amplitude, plateau_estimate, Representation,
    SimConfig,
};
use loopdecay::lattice::{Dispersion, EnergyLoop};
use loopdecay::spectral::{self, CouplingProfile, SelfEnergy};
use loopdecay::stability::{classify, Verdict};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn convective_model(omega_a: f64) -> (Dispersion, CouplingProfile) {
    (
        Dispersion::asymmetric_deltas(1.0, 0.7).unwrap(),
        CouplingProfile::point(c(0.2, 0.0), omega_a),
    )
}

/// Criterion 1: complete decay. P_a(150) < 0.02 and the fitted envelope
/// rate over t in [20, 80] equals 2 |Im omega_p| = 2 * 0.0560 within 10%.
#[test]
fn criterion_01_complete_decay() {
    let (d, cp) = convective_model(0.0);
    let cfg = SimConfig::auto(&d, &cp, 150.0);
    let traj = evolve(&d, &cp, &cfg);
    assert!(!traj.flagged(), "run flagged: {:?}", traj.containment_violated_at);

    let p_final = traj.c_a.last().unwrap().norm_sqr();
    assert!(p_final < 0.02, "P_a(150) = {p_final}");

    let fitted = dynamics::fit_decay_rate(&traj, 20.0, 80.0).unwrap();
    let expected = 2.0 * 0.04 / 0.51f64.sqrt(); // 2 |Im omega_p|, weak coupling
    let rel = (fitted / expected - 1.0).abs();
    assert!(rel < 0.10, "fitted {fitted}, expected {expected}, rel {rel}");

    println!(
        "acceptance criterion 1 (complete decay): PASS (P_a(150) = {p_final:.2e}, rate {fitted:.5} vs {expected:.5}, rel {rel:.3})"
    );
}

/// Criterion 2: fractional decay with omega_a = 0.8 embedded in the loop.
/// Plateau > 0.05, the exact pole is real to 1e-8, and the plateau matches
/// |residue|^2 within 2%.
#[test]
fn criterion_02_fractional_decay_inside_loop() {
    let (d, cp) = convective_model(0.8);
    let cfg = SimConfig::auto(&d, &cp, 150.0);
    let traj = evolve(&d, &cp, &cfg);
    assert!(!traj.flagged());

    let plateau = plateau_estimate(&traj, 0.2).unwrap();
    assert!(plateau.mean > 0.05, "plateau {}", plateau.mean);

    // exact pole from the quartic, picked nearest the weak-coupling seed
    let model = AsymmetricModel::from_deltas(1.0, 0.7, c(0.2, 0.0), 0.8).unwrap();
    let seed = model.pole_weak().unwrap().value;
    let pole = model
        .pole_exact()
        .into_iter()
        .min_by(|a, b| (a - seed).norm().partial_cmp(&(b - seed).norm()).unwrap())
        .unwrap();
    assert!(pole.im.abs() < 1e-8, "pole {pole} not real");

    let spectral_result = spectral::find_pole(&d, &cp).unwrap();
    assert!((spectral_result.pole - pole).norm() < 1e-8);
    let predicted = spectral_result.residue.norm_sqr();
    let rel = (plateau.mean / predicted - 1.0).abs();
    assert!(
        rel < 0.02,
        "plateau {} vs |residue|^2 {predicted}, rel {rel}",
        plateau.mean
    );

    println!(
        "acceptance criterion 2 (fractional decay inside the loop): PASS (plateau {:.4}, |residue|^2 {predicted:.4}, pole {pole:.6}, rel {rel:.4})",
        plateau.mean
    );
}

/// Criterion 3: Rabi boundary. P_a matches cos^2(0.2 t) pointwise to 1e-6
/// and the oscillation frequency 0.4 is recovered within 0.1%.
#[test]
fn criterion_03_rabi_boundary() {
    let d = Dispersion::asymmetric_deltas(1.0, 1.0).unwrap();
    let cp = CouplingProfile::point(c(0.2, 0.0), 0.0);
    let cfg = SimConfig::auto(&d, &cp, 100.0);
    let traj = evolve(&d, &cp, &cfg);
    assert!(!traj.flagged());

    let mut worst = 0.0f64;
    for (i, &t) in traj.times.iter().enumerate() {
        let exact = (0.2 * t).cos().powi(2);
        worst = worst.max((traj.c_a[i].norm_sqr() - exact).abs());
    }
    assert!(worst < 1e-6, "pointwise error {worst}");

    let pa = traj.survival();
    let freq = dynamics::oscillation_frequency(&traj.times, &pa, 0.5).unwrap();
    let rel = (freq / 0.4 - 1.0).abs();
    assert!(rel < 1e-3, "frequency {freq}, rel {rel}");

    println!(
        "acceptance criterion 3 (Rabi boundary): PASS (sup |P_a - cos^2| = {worst:.2e}, freq {freq:.6} vs 0.4)"
    );
}

/// Criterion 4: pseudo-exponential growth. The amplitude diagnostic
/// (1/t) log[|c_a| t^(3/2)] at t = 200 is within 5% of sqrt(0.44) and
/// closer to it than the alpha = 0 and alpha = -1/2 variants.
#[test]
fn criterion_04_pseudo_exponential_growth() {
    let d = Dispersion::asymmetric_deltas(1.0, 1.2).unwrap();
    let cp = CouplingProfile::point(c(0.2, 0.0), 0.0);
    let cfg = SimConfig::auto(&d, &cp, 200.0);
    let traj = evolve(&d, &cp, &cfg);
    assert!(!traj.flagged(), "flagged at {:?}", traj.containment_violated_at);

    let gamma = 0.44f64.sqrt();
    let last = |alpha: f64| -> f64 {
        growth_diagnostic_amplitude(&traj, alpha).unwrap().last().unwrap().1
    };
    let d32 = last(1.5);
    let d0 = last(0.0);
    let dm12 = last(-0.5);
    let rel = (d32 / gamma - 1.0).abs();
    assert!(rel < 0.05, "alpha=3/2 diagnostic {d32} vs {gamma}, rel {rel}");
    assert!(
        (d32 - gamma).abs() < (d0 - gamma).abs(),
        "alpha=3/2 ({d32}) should beat alpha=0 ({d0})"
    );
    assert!(
        (d32 - gamma).abs() < (dm12 - gamma).abs(),
        "alpha=3/2 ({d32}) should beat alpha=-1/2 ({dm12})"
    );

    println!(
        "acceptance criterion 4 (pseudo-exponential growth): PASS (diag(3/2) = {d32:.4} vs {gamma:.4}, alpha=0 gives {d0:.4}, alpha=-1/2 gives {dm12:.4})"
    );
}

/// Criterion 5: gauge-equivalence oracle. For 10 random models with
/// kappa1 kappa2 > 0 the survival amplitude of the chain and of its
/// Hermitized image agree to 1e-8 sup-norm over t in [0, 100].
#[test]
fn criterion_05_gauge_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0005);
    let mut worst_overall = 0.0f64;
    for trial in 0..10 {
        let kappa1 = rng.gen_range(0.4..1.1);
        let kappa2 = kappa1 * rng.gen_range(0.15..1.0);
        let mag = rng.gen_range(0.05..0.3);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let sigma = Complex64::from_polar(mag, phase);
        let omega_a = rng.gen_range(-0.5..0.5);

        let model = AsymmetricModel::new(kappa1, kappa2, sigma, omega_a).unwrap();
        let herm = model.hermitize().unwrap();
        let (d1, cp1) = (model.dispersion(), model.coupling());
        let (d2, cp2) = (herm.dispersion(), herm.coupling());
        // matched configs: the two RK4 flows are then exactly similar
        let cfg = SimConfig::auto(&d1, &cp1, 100.0);
        let a = evolve(&d1, &cp1, &cfg);
        let b = evolve(&d2, &cp2, &cfg);
        assert!(!a.flagged() && !b.flagged(), "trial {trial} flagged");
        let mut worst = 0.0f64;
        for i in 0..a.times.len() {
            worst = worst.max((a.c_a[i] - b.c_a[i]).norm());
        }
        assert!(
            worst < 1e-8,
            "trial {trial} (k1={kappa1:.3}, k2={kappa2:.3}): sup diff {worst}"
        );
        worst_overall = worst_overall.max(worst);
    }
    println!(
        "acceptance criterion 5 (gauge equivalence, 10 random models): PASS (worst sup-diff {worst_overall:.2e})"
    );
}

fn random_simple_dispersion(rng: &mut ChaCha8Rng) -> Option<Dispersion> {
    let mut pairs = vec![
        (1, c(rng.gen_range(0.6..1.1), rng.gen_range(-0.2..0.2))),
        (-1, c(rng.gen_range(0.1..0.45), rng.gen_range(-0.15..0.15))),
    ];
    if rng.gen_bool(0.7) {
        pairs.push((2, c(rng.gen_range(-0.06..0.06), rng.gen_range(-0.06..0.06))));
    }
    if rng.gen_bool(0.4) {
        pairs.push((-3, c(rng.gen_range(-0.03..0.03), rng.gen_range(-0.03..0.03))));
    }
    let d = Dispersion::from_pairs(&pairs).ok()?;
    let lp = EnergyLoop::with_default_grid(&d);
    if !lp.is_simple() {
        return None;
    }
    let min_vel = (0..512)
        .map(|j| {
            let k = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * j as f64 / 512.0;
            d.group_velocity(c(k, 0.0)).norm()
        })
        .fold(f64::INFINITY, f64::min);
    if min_vel < 0.08 {
        return None;
    }
    Some(d)
}

fn random_coupling(rng: &mut ChaCha8Rng) -> CouplingProfile {
    let mut sigma = BTreeMap::new();
    sigma.insert(0i64, c(rng.gen_range(0.05..0.3), rng.gen_range(-0.1..0.1)));
    if rng.gen_bool(0.5) {
        sigma.insert(
            rng.gen_range(-2..=2),
            c(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)),
        );
    }
    CouplingProfile::new(sigma, 0.0)
}

/// Criterion 6: the self-energy jump. For 20 loop points across 5 random
/// dispersion/coupling systems the extrapolated numeric discontinuity
/// matches the closed formula to relative 1e-6.
#[test]
fn criterion_06_self_energy_jump() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0006);
    let mut systems = 0;
    let mut points = 0;
    let mut worst = 0.0f64;
    while systems < 5 {
        let d = match random_simple_dispersion(&mut rng) {
            Some(d) => d,
            None => continue,
        };
        let cp = random_coupling(&mut rng);
        let se = SelfEnergy::new(&d, &cp);
        let mut done = 0;
        let mut attempts = 0;
        while done < 4 && attempts < 200 {
            attempts += 1;
            let k0 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            if d.group_velocity(c(k0, 0.0)).norm() < 0.1 {
                continue;
            }
            let numeric = match se.jump(k0) {
                Ok(j) => j,
                Err(_) => continue,
            };
            let formula = spectral::self_energy_jump_formula(&d, &cp, k0).unwrap();
            let rel = (numeric - formula).norm() / formula.norm().max(1e-12);
            assert!(
                rel < 1e-6,
                "system {systems}, k0 = {k0}: numeric {numeric}, formula {formula}, rel {rel}"
            );
            worst = worst.max(rel);
            done += 1;
            points += 1;
        }
        assert_eq!(done, 4, "could not place 4 jump points on system {systems}");
        systems += 1;
    }
    assert_eq!(points, 20);
    println!(
        "acceptance criterion 6 (self-energy jump at 20 random loop points): PASS (worst rel {worst:.2e})"
    );
}

/// Criterion 7: instability classification oracle. Over the (D1, D2) grid
/// the analytic verdict agrees with a bare-continuum simulation in every
/// cell.
#[test]
fn criterion_07_classification_oracle() {
    let mut checked = 0;
    for &delta1 in &[0.5, 1.0] {
        for &delta2 in &[0.0, 0.3, 0.7, 1.0, 1.3] {
            let d = Dispersion::asymmetric_deltas(delta1, delta2).unwrap();
            let analytic = classify(&d).unwrap().verdict;

            let zero = CouplingProfile::point(c(0.0, 0.0), 0.0);
            let cfg = SimConfig::auto(&d, &zero, 100.0);
            let rec = evolve_bare_continuum(&d, 0, 0.0, &cfg);
            assert!(rec.truncated_at.is_none(), "cell ({delta1},{delta2}) overflowed");

            let window_mean = |series: &[f64], t0: f64, t1: f64| -> f64 {
                let vals: Vec<f64> = rec
                    .times
                    .iter()
                    .zip(series)
                    .filter(|(&t, _)| t >= t0 && t <= t1)
                    .map(|(_, &v)| v)
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            let c0_growth = window_mean(&rec.at_origin, 90.0, 100.0)
                / window_mean(&rec.at_origin, 50.0, 60.0).max(1e-300);
            let max_growth = window_mean(&rec.max_abs, 90.0, 100.0)
                / window_mean(&rec.max_abs, 50.0, 60.0).max(1e-300);
            let simulated = if c0_growth > 1.5 {
                Verdict::Absolute
            } else if max_growth > 1.5 {
                Verdict::Convective
            } else {
                Verdict::Stable
            };
            assert_eq!(
                analytic, simulated,
                "cell D1={delta1}, D2={delta2}: analytic {analytic}, simulated {simulated} (c0 x{c0_growth:.2}, max x{max_growth:.2})"
            );
            checked += 1;
        }
    }
    assert_eq!(checked, 10);
    println!("acceptance criterion 7 (classification oracle, 10/10 cells): PASS");
}

/// Criterion 8: Wannier and Bloch integrations of the criterion-1 run agree
/// on c_a to 1e-6 sup-norm.
#[test]
fn criterion_08_representation_equivalence() {
    let (d, cp) = convective_model(0.0);
    let cfg = SimConfig::auto(&d, &cp, 150.0);
    let wannier = evolve(&d, &cp, &cfg);
    let bloch = evolve(
        &d,
        &cp,
        &cfg.clone().with_representation(Representation::Bloch),
    );
    let mut worst = 0.0f64;
    for i in 0..wannier.times.len() {
        worst = worst.max((wannier.c_a[i] - bloch.c_a[i]).norm());
    }
    assert!(worst < 1e-6, "sup-norm difference {worst}");
    println!(
        "acceptance criterion 8 (Wannier vs Bloch): PASS (sup-norm diff {worst:.2e})"
    );
}

/// Criterion 9: causality at the kappa2 = 0 boundary. Upstream sites stay
/// below 1e-12 for the whole run and c_1 matches the iterated-integral
/// quadrature to 1e-8.
#[test]
fn criterion_09_degenerate_causality() {
    let model = AsymmetricModel::from_deltas(1.0, 1.0, c(0.2, 0.0), 0.0).unwrap();
    let (d, cp) = (model.dispersion(), model.coupling());
    let mut cfg = SimConfig::auto(&d, &cp, 100.0);
    // the cumulative-trapezoid comparison needs a fine grid at t = 100
    cfg.dt = 1.25e-4;
    cfg.record_sites = vec![-5, -2, -1, 1];
    let traj = evolve(&d, &cp, &cfg);
    assert!(!traj.flagged());

    let mut upstream_max = 0.0f64;
    for n in [-5i64, -2, -1] {
        for v in &traj.site_series[&n] {
            upstream_max = upstream_max.max(v.norm());
        }
    }
    for snap in &traj.snapshots {
        for (i, v) in snap.amplitudes.iter().enumerate() {
            if snap.n_first + i as i64 <= -1 {
                upstream_max = upstream_max.max(v.norm());
            }
        }
    }
    assert!(upstream_max < 1e-12, "upstream amplitude {upstream_max}");

    let c1_exact = model.degenerate_solution(&traj.times, 1).unwrap();
    let c1_sim = &traj.site_series[&1];
    let mut worst = 0.0f64;
    for (a, b) in c1_exact.iter().zip(c1_sim) {
        worst = worst.max((a - b).norm());
    }
    assert!(worst < 1e-8, "c_1 mismatch {worst}");

    println!(
        "acceptance criterion 9 (degenerate causality): PASS (upstream max {upstream_max:.2e}, c_1 mismatch {worst:.2e})"
    );
}

/// Criterion 10: determinism. Re-running the criterion-1 pipeline gives
/// byte-identical trajectory and snapshot CSVs.
#[test]
fn criterion_10_determinism() {
    let run = || {
        let (d, cp) = convective_model(0.0);
        let mut cfg = SimConfig::auto(&d, &cp, 150.0);
        cfg.record_sites = vec![0, 3];
        let traj = evolve(&d, &cp, &cfg);
        let mut csv = Vec::new();
        traj.write_csv(&mut csv).unwrap();
        let mut snaps = Vec::new();
        traj.write_snapshots_csv(&mut snaps).unwrap();
        (csv, snaps)
    };
    let (csv_a, snap_a) = run();
    let (csv_b, snap_b) = run();
    assert_eq!(csv_a, csv_b, "trajectory CSVs differ between runs");
    assert_eq!(snap_a, snap_b, "snapshot CSVs differ between runs");
    println!(
        "acceptance criterion 10 (determinism): PASS ({} byte CSV identical across runs)",
        csv_a.len()
    );
}
