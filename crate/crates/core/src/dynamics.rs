//! Time-domain integration of the discrete-state/continuum equations.
//!
//! Wannier representation:
//! `i dc_a/dt = omega_a c_a + sum_n sigma_n c_n`,
//! `i dc_n/dt = sum_l w_l c_{n-l} + conj(sigma_n) c_a`,
//! on a truncated open lattice `n in [-N, N]` sized so the amplified
//! wavefront never reaches the edges. Bloch representation: the same system
//! diagonal in k on a uniform grid, run on the minimal-gain horizontal
//! contour so amplified modes stay representable. Fixed-step RK4 keeps
//! trajectories bit-reproducible.

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::csvio;
use crate::error::{Error, Result};
use crate::lattice::Dispersion;
use crate::spectral::CouplingProfile;
use crate::stability;

/// Raw amplitudes above this cap truncate the run (flagged, not an error).
const OVERFLOW_GUARD: f64 = 1e150;
/// Containment threshold on the outermost lattice sites.
const CONTAINMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Wannier,
    Bloch,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Lattice half-width N; sites run over [-N, N].
    pub half_width: usize,
    pub representation: Representation,
    pub bloch_grid: usize,
    /// Lattice sites whose full time series should be recorded.
    pub record_sites: Vec<i64>,
    /// Upper bound on stored lattice snapshots.
    pub max_snapshots: usize,
}

impl SimConfig {
    /// Auto-sizing: `dt <= 0.01 / max(|omega_a|, sum|w_l|, sum|sigma_n|)`
    /// and a half-width of at least `2 sum|l w_l| t_final + 32`, enlarged to
    /// contain the amplified cone when the continuum is unstable.
    pub fn auto(disp: &Dispersion, coupling: &CouplingProfile, t_final: f64) -> Self {
        let freq = disp
            .hopping_weight()
            .max(coupling.omega_a().abs())
            .max(coupling.weight())
            .max(1e-3);
        let dt = 0.01 / freq;
        let group_speed = 2.0 * disp.velocity_weight();
        let cone = stability::amplified_cone_speed(disp);
        let speed = group_speed.max(1.15 * cone + 0.25);
        let half_width = (speed * t_final).ceil() as usize + 32;
        Self {
            t_final,
            dt,
            half_width,
            representation: Representation::Wannier,
            bloch_grid: 4096,
            record_sites: Vec::new(),
            max_snapshots: 200,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_representation(mut self, rep: Representation) -> Self {
        self.representation = rep;
        self
    }

    fn steps(&self) -> usize {
        (self.t_final / self.dt).ceil().max(1.0) as usize
    }

    /// Step size adjusted to land exactly on `t_final`.
    fn effective_dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }
}

/// One stored lattice profile.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    /// Site index of `amplitudes[0]`.
    pub n_first: i64,
    pub amplitudes: Vec<Complex64>,
}

/// Result of a coupled run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub c_a: Vec<Complex64>,
    pub snapshots: Vec<Snapshot>,
    pub site_series: BTreeMap<i64, Vec<Complex64>>,
    /// First time the boundary amplitude exceeded the containment
    /// threshold, if it ever did.
    pub containment_violated_at: Option<f64>,
    /// Time at which the overflow guard truncated the run, if it did.
    pub truncated_at: Option<f64>,
}

impl Trajectory {
    pub fn survival(&self) -> Vec<f64> {
        self.c_a.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn flagged(&self) -> bool {
        self.containment_violated_at.is_some() || self.truncated_at.is_some()
    }

    /// CSV with header `t,re_ca,im_ca,pa`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,re_ca,im_ca,pa")?;
        for (i, &t) in self.times.iter().enumerate() {
            let ca = self.c_a[i];
            writeln!(
                w,
                "{},{},{},{}",
                csvio::fmt(t),
                csvio::fmt(ca.re),
                csvio::fmt(ca.im),
                csvio::fmt(ca.norm_sqr())
            )?;
        }
        Ok(())
    }

    /// CSV with header `t,n,re_cn,im_cn`.
    pub fn write_snapshots_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,n,re_cn,im_cn")?;
        for snap in &self.snapshots {
            for (i, &cn) in snap.amplitudes.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    csvio::fmt(snap.t),
                    snap.n_first + i as i64,
                    csvio::fmt(cn.re),
                    csvio::fmt(cn.im)
                )?;
            }
        }
        Ok(())
    }
}

struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        let z = vec![Complex64::ZERO; dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step<F: Fn(&[Complex64], &mut [Complex64])>(&mut self, y: &mut [Complex64], dt: f64, f: F) {
        f(y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k1[i] * (dt / 2.0);
        }
        f(&self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k2[i] * (dt / 2.0);
        }
        f(&self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + self.k3[i] * dt;
        }
        f(&self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * (dt / 6.0);
        }
    }
}

/// Integrates from the standard initial state `c_a = 1`, empty lattice.
pub fn evolve(disp: &Dispersion, coupling: &CouplingProfile, config: &SimConfig) -> Trajectory {
    match config.representation {
        Representation::Wannier => {
            evolve_wannier(disp, coupling, config, Complex64::new(1.0, 0.0), &BTreeMap::new())
        }
        Representation::Bloch => evolve_bloch(disp, coupling, config),
    }
}

/// Integrates from an arbitrary initial state (Wannier representation).
pub fn evolve_from_state(
    disp: &Dispersion,
    coupling: &CouplingProfile,
    config: &SimConfig,
    c_a0: Complex64,
    lattice0: &BTreeMap<i64, Complex64>,
) -> Trajectory {
    evolve_wannier(disp, coupling, config, c_a0, lattice0)
}

fn evolve_wannier(
    disp: &Dispersion,
    coupling: &CouplingProfile,
    config: &SimConfig,
    c_a0: Complex64,
    lattice0: &BTreeMap<i64, Complex64>,
) -> Trajectory {
    let half = config.half_width as i64;
    let sites = 2 * config.half_width + 1;
    let dim = sites + 1;
    let idx = |n: i64| -> usize { (n + half) as usize + 1 };

    // fold -i into all couplings once
    let minus_i = -Complex64::i();
    let hop: Vec<(i64, Complex64)> = disp
        .coefficients()
        .map(|(l, w)| (l as i64, w * minus_i))
        .collect();
    let sig: Vec<(usize, Complex64, Complex64)> = coupling
        .sigmas()
        .filter(|&(n, _)| n.abs() <= half)
        .map(|(n, s)| (idx(n), s * minus_i, s.conj() * minus_i))
        .collect();
    let omega_a = coupling.omega_a() * minus_i;

    let deriv = move |y: &[Complex64], out: &mut [Complex64]| {
        out[0] = y[0] * omega_a;
        for &(i, s, _) in &sig {
            out[0] += y[i] * s;
        }
        // dc_n = -i sum_l w_l c_{n-l}; lattice block starts at index 1
        for v in out[1..].iter_mut() {
            *v = Complex64::ZERO;
        }
        for &(l, w) in &hop {
            // source index = dest index - l, clipped to the block
            let (dst_lo, dst_hi) = if l >= 0 {
                (l, sites as i64 - 1)
            } else {
                (0, sites as i64 - 1 + l)
            };
            if dst_lo > dst_hi {
                continue;
            }
            for d in dst_lo..=dst_hi {
                out[(1 + d) as usize] += w * y[(1 + d - l) as usize];
            }
        }
        for &(i, _, rho) in &sig {
            out[i] += y[0] * rho;
        }
    };

    let mut y = vec![Complex64::ZERO; dim];
    y[0] = c_a0;
    for (&n, &v) in lattice0 {
        if n.abs() <= half {
            y[idx(n)] = v;
        }
    }

    let steps = config.steps();
    let dt = config.effective_dt();
    let snap_stride = (steps / config.max_snapshots.max(1)).max(1);
    let mut rk = Rk4::new(dim);

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        c_a: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        site_series: config.record_sites.iter().map(|&n| (n, Vec::new())).collect(),
        containment_violated_at: None,
        truncated_at: None,
    };

    let record = |traj: &mut Trajectory, t: f64, y: &[Complex64], snap: bool| {
        traj.times.push(t);
        traj.c_a.push(y[0]);
        for (&n, series) in traj.site_series.iter_mut() {
            series.push(if n.abs() <= half { y[idx(n)] } else { Complex64::ZERO });
        }
        if snap {
            traj.snapshots.push(Snapshot {
                t,
                n_first: -half,
                amplitudes: y[1..].to_vec(),
            });
        }
    };

    record(&mut traj, 0.0, &y, true);
    for step in 1..=steps {
        rk.step(&mut y, dt, &deriv);
        let t = step as f64 * dt;

        if traj.containment_violated_at.is_none()
            && (y[idx(-half)].norm() > CONTAINMENT_TOL || y[idx(half)].norm() > CONTAINMENT_TOL)
        {
            traj.containment_violated_at = Some(t);
        }
        let mut max_sq = 0.0f64;
        for v in &y {
            max_sq = max_sq.max(v.norm_sqr());
        }
        if !max_sq.is_finite() || max_sq > OVERFLOW_GUARD * OVERFLOW_GUARD {
            traj.truncated_at = Some(t);
            record(&mut traj, t, &y, true);
            break;
        }

        record(&mut traj, t, &y, step % snap_stride == 0 || step == steps);
    }
    traj
}

fn evolve_bloch(disp: &Dispersion, coupling: &CouplingProfile, config: &SimConfig) -> Trajectory {
    let m = config.bloch_grid.max(16);
    let dk = 2.0 * std::f64::consts::PI / m as f64;
    // run on the flattest horizontal contour: c_a is contour-independent,
    // and on the real axis amplified modes would swamp f64 by cancellation
    let shift = stability::optimal_bloch_contour(disp);
    let minus_i = -Complex64::i();
    let mut omega = Vec::with_capacity(m);
    let mut g1 = Vec::with_capacity(m);
    let mut g2 = Vec::with_capacity(m);
    for j in 0..m {
        let k = Complex64::new(-std::f64::consts::PI + dk * j as f64, shift);
        omega.push(disp.eval(k) * minus_i);
        g1.push(coupling.g1(k) * minus_i * dk);
        g2.push(coupling.g2(k) * minus_i);
    }
    let omega_a = coupling.omega_a() * minus_i;

    let deriv = move |y: &[Complex64], out: &mut [Complex64]| {
        let mut acc = y[0] * omega_a;
        for j in 0..m {
            acc += g1[j] * y[j + 1];
        }
        out[0] = acc;
        for j in 0..m {
            out[j + 1] = omega[j] * y[j + 1] + g2[j] * y[0];
        }
    };

    let mut y = vec![Complex64::ZERO; m + 1];
    y[0] = Complex64::new(1.0, 0.0);
    let steps = config.steps();
    let dt = config.effective_dt();
    let mut rk = Rk4::new(m + 1);

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        c_a: Vec::with_capacity(steps + 1),
        snapshots: Vec::new(),
        site_series: BTreeMap::new(),
        containment_violated_at: None,
        truncated_at: None,
    };
    traj.times.push(0.0);
    traj.c_a.push(y[0]);
    for step in 1..=steps {
        rk.step(&mut y, dt, &deriv);
        let t = step as f64 * dt;
        let mut max_sq = 0.0f64;
        for v in &y {
            max_sq = max_sq.max(v.norm_sqr());
        }
        if !max_sq.is_finite() || max_sq > OVERFLOW_GUARD * OVERFLOW_GUARD {
            traj.truncated_at = Some(t);
            traj.times.push(t);
            traj.c_a.push(y[0]);
            break;
        }
        traj.times.push(t);
        traj.c_a.push(y[0]);
    }
    traj
}

/// Bare-continuum record used by the instability oracle.
#[derive(Debug, Clone)]
pub struct BareRecord {
    pub times: Vec<f64>,
    /// `|c_{n0}(t)|` at the injection site.
    pub at_origin: Vec<f64>,
    /// `max_n |c_n(t)|`.
    pub max_abs: Vec<f64>,
    /// `|c_{round(V t)}(t)|` in the drift frame.
    pub drift_abs: Vec<f64>,
    pub containment_violated_at: Option<f64>,
    pub truncated_at: Option<f64>,
}

/// Propagates the bare lattice from `c_{n0}(0) = 1` with no discrete state,
/// recording the fixed-site, global-max and drift-frame amplitudes.
pub fn evolve_bare_continuum(
    disp: &Dispersion,
    n0: i64,
    drift_velocity: f64,
    config: &SimConfig,
) -> BareRecord {
    let half = config.half_width as i64;
    let sites = 2 * config.half_width + 1;
    let idx = |n: i64| -> usize { (n + half) as usize };
    let minus_i = -Complex64::i();
    let hop: Vec<(i64, Complex64)> = disp
        .coefficients()
        .map(|(l, w)| (l as i64, w * minus_i))
        .collect();

    let deriv = move |y: &[Complex64], out: &mut [Complex64]| {
        for v in out.iter_mut() {
            *v = Complex64::ZERO;
        }
        for &(l, w) in &hop {
            let (dst_lo, dst_hi) = if l >= 0 {
                (l, sites as i64 - 1)
            } else {
                (0, sites as i64 - 1 + l)
            };
            if dst_lo > dst_hi {
                continue;
            }
            for d in dst_lo..=dst_hi {
                out[d as usize] += w * y[(d - l) as usize];
            }
        }
    };

    let mut y = vec![Complex64::ZERO; sites];
    y[idx(n0.clamp(-half, half))] = Complex64::new(1.0, 0.0);
    let steps = config.steps();
    let dt = config.effective_dt();
    let mut rk = Rk4::new(sites);

    let mut rec = BareRecord {
        times: Vec::with_capacity(steps + 1),
        at_origin: Vec::with_capacity(steps + 1),
        max_abs: Vec::with_capacity(steps + 1),
        drift_abs: Vec::with_capacity(steps + 1),
        containment_violated_at: None,
        truncated_at: None,
    };
    let record = |rec: &mut BareRecord, t: f64, y: &[Complex64]| -> f64 {
        let mut max_sq = 0.0f64;
        for v in y {
            max_sq = max_sq.max(v.norm_sqr());
        }
        let drift_site = (drift_velocity * t).round() as i64;
        let drift = if drift_site.abs() <= half {
            y[idx(drift_site)].norm()
        } else {
            0.0
        };
        rec.times.push(t);
        rec.at_origin.push(y[idx(n0.clamp(-half, half))].norm());
        rec.max_abs.push(max_sq.sqrt());
        rec.drift_abs.push(drift);
        max_sq
    };

    record(&mut rec, 0.0, &y);
    for step in 1..=steps {
        rk.step(&mut y, dt, &deriv);
        let t = step as f64 * dt;
        if rec.containment_violated_at.is_none()
            && (y[0].norm() > CONTAINMENT_TOL || y[sites - 1].norm() > CONTAINMENT_TOL)
        {
            rec.containment_violated_at = Some(t);
        }
        let max_sq = record(&mut rec, t, &y);
        if !max_sq.is_finite() || max_sq > OVERFLOW_GUARD * OVERFLOW_GUARD {
            rec.truncated_at = Some(t);
            break;
        }
    }
    rec
}

/// Default start of growth-diagnostic series (avoids the log singularity).
pub const DIAGNOSTIC_T_MIN: f64 = 5.0;

/// `(1/t) log[P_a(t) t^alpha]` for `t >= t_min`.
pub fn growth_diagnostic(traj: &Trajectory, alpha: f64) -> Result<Vec<(f64, f64)>> {
    diagnostic_series(traj, alpha, DIAGNOSTIC_T_MIN, |ca| ca.norm_sqr())
}

/// Amplitude-convention variant, `(1/t) log[|c_a(t)| t^alpha]`. The
/// probability convention plateaus near twice the saddle growth rate, the
/// amplitude convention near the rate itself.
pub fn growth_diagnostic_amplitude(traj: &Trajectory, alpha: f64) -> Result<Vec<(f64, f64)>> {
    diagnostic_series(traj, alpha, DIAGNOSTIC_T_MIN, |ca| ca.norm())
}

fn diagnostic_series(
    traj: &Trajectory,
    alpha: f64,
    t_min: f64,
    weight: impl Fn(Complex64) -> f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t < t_min {
            continue;
        }
        let p = weight(traj.c_a[i]);
        if p <= 0.0 {
            return Err(Error::NonpositiveProbability { t });
        }
        out.push((t, (p.ln() + alpha * t.ln()) / t));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct PlateauEstimate {
    pub mean: f64,
    pub std_dev: f64,
    /// Half of (max - min) over the tail window.
    pub half_range: f64,
    /// False when the tail still oscillates by more than its mean.
    pub converged: bool,
}

/// Mean survival probability over the trailing `tail_fraction` of the run.
pub fn plateau_estimate(traj: &Trajectory, tail_fraction: f64) -> Result<PlateauEstimate> {
    if traj.flagged() {
        return Err(Error::FlaggedTrajectory);
    }
    let n = traj.times.len();
    let take = ((n as f64 * tail_fraction).ceil() as usize).clamp(2, n);
    let tail: Vec<f64> = traj.c_a[n - take..].iter().map(|c| c.norm_sqr()).collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let half_range = (hi - lo) / 2.0;
    Ok(PlateauEstimate {
        mean,
        std_dev: var.sqrt(),
        half_range,
        converged: half_range <= mean,
    })
}

/// Least-squares decay rate gamma of `P_a ~ exp(-gamma t)` over `[t0, t1]`.
pub fn fit_decay_rate(traj: &Trajectory, t0: f64, t1: f64) -> Result<f64> {
    let mut pts = Vec::new();
    for (i, &t) in traj.times.iter().enumerate() {
        if t < t0 || t > t1 {
            continue;
        }
        let p = traj.c_a[i].norm_sqr();
        if p <= 0.0 {
            return Err(Error::NonpositiveProbability { t });
        }
        pts.push((t, p.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::TooFewCrossings);
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(-slope)
}

/// Angular frequency from upward crossings of `values` through `level`,
/// with linear interpolation of the crossing times.
pub fn oscillation_frequency(times: &[f64], values: &[f64], level: f64) -> Result<f64> {
    let mut crossings = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1] - level, values[i] - level);
        if a < 0.0 && b >= 0.0 {
            let frac = a / (a - b);
            crossings.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    if crossings.len() < 2 {
        return Err(Error::TooFewCrossings);
    }
    let span = crossings.last().unwrap() - crossings.first().unwrap();
    let mean_period = span / (crossings.len() - 1) as f64;
    Ok(2.0 * std::f64::consts::PI / mean_period)
}
