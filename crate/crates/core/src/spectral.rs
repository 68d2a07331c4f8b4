//! Self-energy, analytic continuation, poles and branch-cut asymptotics.
//!
//! The survival amplitude of the discrete state is the inverse
//! Fourier-Laplace transform of `1 / (omega - omega_a - Sigma(omega))` with
//! self-energy `Sigma(omega) = int dk g1 g2 / (omega - omega(k))`. The
//! energy loop is a branch cut of Sigma; deforming the inversion contour
//! into the loop interior replaces Sigma by its continuation Sigma_II,
//! whose poles and interior branch points control the long-time behavior.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{Dispersion, EnergyLoop, LoopLocation};
use crate::stability;

const SQRT_2PI: f64 = 2.5066282746310002;

/// Hermitian coupling between the discrete state and the lattice:
/// site amplitudes `sigma_n`, reverse couplings `rho_n = conj(sigma_n)`,
/// and the discrete-state energy `omega_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProfile {
    sigma: BTreeMap<i64, Complex64>,
    omega_a: f64,
}

impl CouplingProfile {
    pub fn new(sigma: BTreeMap<i64, Complex64>, omega_a: f64) -> Self {
        let sigma = sigma
            .into_iter()
            .filter(|(_, s)| s.re != 0.0 || s.im != 0.0)
            .collect();
        Self { sigma, omega_a }
    }

    /// Coupling through a single site.
    pub fn point(sigma: Complex64, omega_a: f64) -> Self {
        Self::point_at(0, sigma, omega_a)
    }

    pub fn point_at(site: i64, sigma: Complex64, omega_a: f64) -> Self {
        let mut m = BTreeMap::new();
        m.insert(site, sigma);
        Self::new(m, omega_a)
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn with_omega_a(mut self, omega_a: f64) -> Self {
        self.omega_a = omega_a;
        self
    }

    pub fn sigma(&self, n: i64) -> Complex64 {
        self.sigma.get(&n).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn sigmas(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.sigma.iter().map(|(&n, &s)| (n, s))
    }

    pub fn is_uncoupled(&self) -> bool {
        self.sigma.is_empty()
    }

    /// `sum_n |sigma_n|`.
    pub fn weight(&self) -> f64 {
        self.sigma.values().map(|s| s.norm()).sum()
    }

    /// `g1(k) = (1/sqrt(2 pi)) sum_n sigma_n exp(-i k n)`, entire in k.
    pub fn g1(&self, k: Complex64) -> Complex64 {
        let mut sum = Complex64::ZERO;
        for (&n, &s) in &self.sigma {
            sum += s * (-Complex64::i() * k * n as f64).exp();
        }
        sum / SQRT_2PI
    }

    /// `g2(k) = (1/sqrt(2 pi)) sum_n conj(sigma_n) exp(i k n)`; equals
    /// `conj(g1(k))` on the real axis.
    pub fn g2(&self, k: Complex64) -> Complex64 {
        let mut sum = Complex64::ZERO;
        for (&n, &s) in &self.sigma {
            sum += s.conj() * (Complex64::i() * k * n as f64).exp();
        }
        sum / SQRT_2PI
    }

    pub fn g1g2(&self, k: Complex64) -> Complex64 {
        self.g1(k) * self.g2(k)
    }
}

const MIN_GRID: usize = 1024;
/// Grid cap 2^20.
const MAX_LEVELS: usize = 11;
const QUAD_TOL: f64 = 1e-10;

struct GridLevel {
    omega: Vec<Complex64>,
    g1g2: Vec<Complex64>,
}

/// Self-energy evaluator with cached Brillouin-zone tables.
///
/// Evaluations at distinct omega are independent; the lazily built grid
/// levels are behind `OnceLock`, so a shared instance is safe to use from
/// parallel sweeps.
pub struct SelfEnergy<'a> {
    disp: &'a Dispersion,
    coupling: &'a CouplingProfile,
    energy_loop: EnergyLoop,
    levels: Vec<OnceLock<GridLevel>>,
}

impl<'a> SelfEnergy<'a> {
    pub fn new(disp: &'a Dispersion, coupling: &'a CouplingProfile) -> Self {
        let energy_loop = EnergyLoop::with_default_grid(disp);
        let mut levels = Vec::with_capacity(MAX_LEVELS);
        levels.resize_with(MAX_LEVELS, OnceLock::new);
        Self {
            disp,
            coupling,
            energy_loop,
            levels,
        }
    }

    pub fn dispersion(&self) -> &Dispersion {
        self.disp
    }

    pub fn coupling(&self) -> &CouplingProfile {
        self.coupling
    }

    pub fn energy_loop(&self) -> &EnergyLoop {
        &self.energy_loop
    }

    fn level(&self, j: usize) -> &GridLevel {
        self.levels[j].get_or_init(|| {
            let n = MIN_GRID << j;
            let dk = 2.0 * std::f64::consts::PI / n as f64;
            let mut omega = Vec::with_capacity(n);
            let mut g1g2 = Vec::with_capacity(n);
            for i in 0..n {
                let k = Complex64::new(-std::f64::consts::PI + dk * i as f64, 0.0);
                omega.push(self.disp.eval(k));
                g1g2.push(self.coupling.g1g2(k));
            }
            GridLevel { omega, g1g2 }
        })
    }

    fn sum_level(&self, j: usize, w: Complex64) -> Complex64 {
        let lvl = self.level(j);
        let n = lvl.omega.len();
        let dk = 2.0 * std::f64::consts::PI / n as f64;
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            acc += lvl.g1g2[i] / (w - lvl.omega[i]);
        }
        acc * dk
    }

    /// `Sigma(omega)` by periodic trapezoid quadrature with grid doubling
    /// until successive values agree to 1e-10. Points on the loop (the
    /// discontinuity locus) are refused.
    pub fn eval(&self, w: Complex64) -> Result<Complex64> {
        if self.coupling.is_uncoupled() {
            return Ok(Complex64::ZERO);
        }
        if self.energy_loop.distance_to(w) < self.energy_loop.on_loop_tol() {
            return Err(Error::OnLoop { re: w.re, im: w.im });
        }
        let mut prev = self.sum_level(0, w);
        for j in 1..MAX_LEVELS {
            let cur = self.sum_level(j, w);
            let diff = (cur - prev).norm();
            if diff < QUAD_TOL {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::QuadratureNotConverged {
            achieved: (self.sum_level(MAX_LEVELS - 1, w) - self.sum_level(MAX_LEVELS - 2, w))
                .norm(),
        })
    }

    /// Continuation of Sigma from outside across the loop: for omega in the
    /// interior, `Sigma_II = Sigma + W 2 pi i g1 g2 rho` with the density of
    /// states continued off the loop by Newton path-following in k, and W
    /// the loop orientation. Valid on the sheet reached from the loop arc
    /// nearest the anchor point.
    pub fn eval_continued_from(&self, anchor: usize, w: Complex64) -> Result<Complex64> {
        let sigma = self.eval(w)?;
        Ok(sigma + self.continuation_term(anchor, w)?)
    }

    fn continuation_term(&self, anchor: usize, w: Complex64) -> Result<Complex64> {
        if self.coupling.is_uncoupled() {
            return Ok(Complex64::ZERO);
        }
        let orientation = self.energy_loop.orientation()? as f64;
        let (k0, _) = self.energy_loop.sample_at(anchor);
        let k_w = continue_k(self.disp, Complex64::new(k0, 0.0), w)?;
        let vel = self.disp.group_velocity(k_w);
        if vel.norm() < 1e-14 * self.disp.velocity_weight().max(1e-300) {
            return Err(Error::ContinuationStalled);
        }
        let g = self.coupling.g1g2(k_w) / vel;
        Ok(Complex64::i() * 2.0 * std::f64::consts::PI * orientation * g)
    }

    /// Numeric discontinuity across the loop at the point `omega(k0)`:
    /// `Sigma(just outside) - Sigma(just inside)` along the normal, with
    /// polynomial extrapolation of the step to zero.
    pub fn jump(&self, k0: f64) -> Result<Complex64> {
        self.energy_loop.require_simple()?;
        let orientation = self.energy_loop.orientation()? as f64;
        let kc = Complex64::new(k0, 0.0);
        let w0 = self.disp.eval(kc);
        let vel = self.disp.group_velocity(kc);
        if vel.norm() < 1e-12 * self.disp.velocity_weight().max(1e-300) {
            return Err(Error::InvalidModel(
                "self-energy jump needs d omega/dk != 0 at k0".into(),
            ));
        }
        // i * W * unit tangent points into the loop interior
        let inward = Complex64::i() * orientation * vel / vel.norm();
        let mut delta0 = 5e-3 * self.energy_loop.diameter();
        let mut verified = false;
        for _ in 0..6 {
            let out_ok = matches!(
                self.energy_loop.contains(w0 - inward * delta0),
                Ok(LoopLocation::Outside)
            );
            let in_ok = matches!(
                self.energy_loop.contains(w0 + inward * delta0),
                Ok(LoopLocation::Inside)
            );
            if out_ok && in_ok {
                verified = true;
                break;
            }
            delta0 /= 4.0;
        }
        if !verified {
            return Err(Error::AmbiguousWinding { winding: f64::NAN });
        }
        let nodes = 6;
        let mut deltas = Vec::with_capacity(nodes);
        let mut values = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let d = delta0 / (1 << j) as f64;
            let outside = self.eval(w0 - inward * d)?;
            let inside = self.eval(w0 + inward * d)?;
            deltas.push(d);
            values.push(outside - inside);
        }
        Ok(neville_at_zero(&deltas, &values))
    }
}

/// Closed-form value the numeric jump must match:
/// `W * 2 pi i g1(k0) g2(k0) / omega'(k0)` with W the loop orientation.
pub fn self_energy_jump_formula(disp: &Dispersion, coupling: &CouplingProfile, k0: f64) -> Result<Complex64> {
    let lp = EnergyLoop::with_default_grid(disp);
    let orientation = lp.orientation()? as f64;
    let kc = Complex64::new(k0, 0.0);
    let vel = disp.group_velocity(kc);
    if vel.norm() < 1e-12 * disp.velocity_weight().max(1e-300) {
        return Err(Error::InvalidModel(
            "self-energy jump needs d omega/dk != 0 at k0".into(),
        ));
    }
    Ok(Complex64::i() * 2.0 * std::f64::consts::PI * orientation * coupling.g1g2(kc) / vel)
}

/// One-shot `Sigma(omega)`; build a [`SelfEnergy`] for repeated evaluations.
pub fn self_energy(disp: &Dispersion, coupling: &CouplingProfile, w: Complex64) -> Result<Complex64> {
    SelfEnergy::new(disp, coupling).eval(w)
}

/// Numeric self-energy discontinuity at the loop point `omega(k0)`.
pub fn self_energy_jump(disp: &Dispersion, coupling: &CouplingProfile, k0: f64) -> Result<Complex64> {
    SelfEnergy::new(disp, coupling).jump(k0)
}

/// Density of states `rho = 1 / (d omega / dk)` at real k. A vanishing
/// group velocity (saddle on the axis) makes it infinite and is signaled.
pub fn density_of_states(disp: &Dispersion, k: f64) -> Result<Complex64> {
    let vel = disp.group_velocity(Complex64::new(k, 0.0));
    if vel.norm() < 1e-12 * disp.velocity_weight().max(1e-300) {
        return Err(Error::InvalidModel(
            "density of states diverges where d omega/dk = 0".into(),
        ));
    }
    Ok(1.0 / vel)
}

/// `Sigma_II(omega)` for omega strictly inside the loop, continued in from
/// the nearest loop arc.
pub fn self_energy_continued(
    disp: &Dispersion,
    coupling: &CouplingProfile,
    w: Complex64,
) -> Result<Complex64> {
    let se = SelfEnergy::new(disp, coupling);
    se.energy_loop().require_simple()?;
    match se.energy_loop().contains(w)? {
        LoopLocation::Inside => {}
        LoopLocation::OnLoop => return Err(Error::OnLoop { re: w.re, im: w.im }),
        LoopLocation::Outside => {
            return Err(Error::InvalidModel(
                "self_energy_continued expects omega inside the loop".into(),
            ))
        }
    }
    let anchor = se.energy_loop().nearest_sample(w);
    se.eval_continued_from(anchor, w)
}

/// Newton path-following: the complex k with `omega(k) = target`,
/// continued from `k_start` along the straight omega-segment.
pub fn continue_k(disp: &Dispersion, k_start: Complex64, target: Complex64) -> Result<Complex64> {
    let w_start = disp.eval(k_start);
    let total = target - w_start;
    if total.norm() == 0.0 {
        return Ok(k_start);
    }
    let scale = disp.hopping_weight().max(1e-300);
    let mut steps = 8usize;
    loop {
        let mut k = k_start;
        let mut ok = true;
        for s in 1..=steps {
            let t = w_start + total * (s as f64 / steps as f64);
            match newton_k(disp, k, t, scale) {
                Some(kn) => k = kn,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(k);
        }
        steps *= 2;
        if steps > 4096 {
            return Err(Error::ContinuationStalled);
        }
    }
}

fn newton_k(disp: &Dispersion, k0: Complex64, target: Complex64, scale: f64) -> Option<Complex64> {
    let vel_scale = disp.velocity_weight().max(1e-300);
    let mut k = k0;
    for _ in 0..40 {
        let f = disp.eval(k) - target;
        if f.norm() < 1e-13 * scale {
            return Some(k);
        }
        let d = disp.group_velocity(k);
        if d.norm() < 1e-12 * vel_scale {
            return None;
        }
        let step = f / d;
        // a large step means the linearization is not trusted; force the
        // caller to refine the path instead
        if step.norm() > 0.5 {
            return None;
        }
        k -= step;
    }
    if (disp.eval(k) - target).norm() < 1e-11 * scale {
        Some(k)
    } else {
        None
    }
}

fn neville_at_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let n = xs.len();
    let mut p: Vec<Complex64> = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            let xi = xs[i];
            let xim = xs[i + m];
            p[i] = (p[i + 1] * xi - p[i] * xim) / (xi - xim);
        }
    }
    p[0]
}

/// An interior branch point of the continued resolvent: a saddle energy
/// with the density-of-states exponent nu = (n-1)/n for an order-n saddle.
#[derive(Debug, Clone, Copy)]
pub struct BranchPoint {
    pub omega: Complex64,
    pub k: Complex64,
    pub order: u32,
    pub nu: f64,
}

/// Long-time branch-cut envelope `|c_cut(t)| ~ t^(-power) exp(rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutAsymptote {
    pub rate: f64,
    pub power: f64,
}

/// Secular envelope of the branch-cut contribution for a branch point at
/// `omega_s` with exponent nu.
pub fn cut_asymptote(omega_s: Complex64, nu: f64) -> CutAsymptote {
    CutAsymptote {
        rate: omega_s.im,
        power: 1.0 + nu,
    }
}

/// Pole, residue and interior branch points of the resolvent.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub pole: Complex64,
    /// Residue sqrt(Z) = 1 / (1 - d Sigma / d omega) at the pole.
    pub residue: Complex64,
    pub pole_location: LoopLocation,
    pub branch_points: Vec<BranchPoint>,
    /// Asymptote of the dominant (largest Im omega_s) branch point.
    pub cut: Option<CutAsymptote>,
}

/// Solves the pole equation `omega - omega_a - Sigma(omega) = 0` on the
/// sheet containing omega_a (Sigma outside the loop, its continuation
/// Sigma_II inside), Newton-seeded with the weak-coupling estimate
/// `omega_a + Sigma^(II)(omega_a)`.
pub fn find_pole(disp: &Dispersion, coupling: &CouplingProfile) -> Result<SpectralResult> {
    let se = SelfEnergy::new(disp, coupling);
    find_pole_with(&se)
}

pub fn find_pole_with(se: &SelfEnergy<'_>) -> Result<SpectralResult> {
    let disp = se.dispersion();
    let coupling = se.coupling();
    let wa = Complex64::new(coupling.omega_a(), 0.0);
    let location = se.energy_loop().contains(wa)?;
    if location == LoopLocation::OnLoop {
        return Err(Error::PoleOnLoop);
    }
    // primary sheet from the location of omega_a; when omega_a sits close to
    // the loop the seed can land on the wrong side, so fall back to the
    // other sheet rather than giving up
    let (w, residue) = match solve_pole_on_sheet(se, wa, location == LoopLocation::Inside) {
        Ok(r) => r,
        Err(primary_err) => match solve_pole_on_sheet(se, wa, location != LoopLocation::Inside) {
            Ok(r) => r,
            Err(_) => return Err(primary_err),
        },
    };
    let pole_location = match se.energy_loop().contains(w) {
        Ok(LoopLocation::OnLoop) | Err(_) => location,
        Ok(loc) => loc,
    };

    let mut branch_points = Vec::new();
    if se.energy_loop().is_simple() {
        if let Ok(saddles) = stability::find_saddle_points(disp, 0.0) {
            for s in saddles {
                if matches!(se.energy_loop().contains(s.omega), Ok(LoopLocation::Inside)) {
                    branch_points.push(BranchPoint {
                        omega: s.omega,
                        k: s.k,
                        order: s.order,
                        nu: (s.order as f64 - 1.0) / s.order as f64,
                    });
                }
            }
        }
    }
    let cut = branch_points
        .first()
        .map(|b| cut_asymptote(b.omega, b.nu));
    Ok(SpectralResult {
        pole: w,
        residue,
        pole_location,
        branch_points,
        cut,
    })
}

fn solve_pole_on_sheet(
    se: &SelfEnergy<'_>,
    wa: Complex64,
    continued: bool,
) -> Result<(Complex64, Complex64)> {
    let anchor = se.energy_loop().nearest_sample(wa);
    let sheet = |w: Complex64| -> Result<Complex64> {
        if continued {
            se.eval_continued_from(anchor, w)
        } else {
            se.eval(w)
        }
    };
    let scale = se
        .dispersion()
        .hopping_weight()
        .max(se.coupling().omega_a().abs())
        .max(1.0);
    let seed = wa + sheet(wa)?;
    let mut w = seed;
    let mut converged = false;
    for _ in 0..60 {
        let f = w - wa - sheet(w)?;
        if f.norm() < 1e-12 * scale {
            converged = true;
            break;
        }
        let h = 1e-7 * w.norm().max(1.0);
        let fp = (sheet(w + Complex64::new(h, 0.0))? - sheet(w - Complex64::new(h, 0.0))?)
            / (2.0 * h);
        let deriv = Complex64::new(1.0, 0.0) - fp;
        if deriv.norm() < 1e-300 {
            return Err(Error::NewtonFailed { context: "pole equation derivative vanished" });
        }
        w -= f / deriv;
        if !w.is_finite() {
            return Err(Error::NewtonFailed { context: "pole iteration diverged" });
        }
    }
    if !converged {
        return Err(Error::NewtonFailed { context: "pole equation did not converge" });
    }
    let h = 1e-6 * w.norm().max(1.0);
    let dsigma =
        (sheet(w + Complex64::new(h, 0.0))? - sheet(w - Complex64::new(h, 0.0))?) / (2.0 * h);
    let residue = 1.0 / (Complex64::new(1.0, 0.0) - dsigma);
    Ok((w, residue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{AsymmetricModel, Sheet};
    use crate::testkit::{assert_cclose, assert_close};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn convective() -> (Dispersion, CouplingProfile) {
        (
            Dispersion::asymmetric_deltas(1.0, 0.7).unwrap(),
            CouplingProfile::point(c(0.2, 0.0), 0.0),
        )
    }

    #[test]
    fn hermitian_coupling_relation() {
        let cp = CouplingProfile::new(
            [(0i64, c(0.2, 0.1)), (2, c(-0.05, 0.03))].into_iter().collect(),
            0.0,
        );
        for k in [-2.3, 0.0, 0.7, 3.0] {
            let kc = c(k, 0.0);
            assert_cclose(cp.g2(kc), cp.g1(kc).conj(), 1e-15);
        }
    }

    #[test]
    fn self_energy_vanishes_inside_the_ellipse() {
        let (d, cp) = convective();
        let se = SelfEnergy::new(&d, &cp);
        for w in [c(0.0, 0.0), c(0.4, 0.2), c(-0.6, -0.3)] {
            assert!(se.eval(w).unwrap().norm() < 1e-12, "Sigma({w}) != 0");
        }
    }

    #[test]
    fn self_energy_outside_matches_closed_form_value() {
        let (d, cp) = convective();
        let se = SelfEnergy::new(&d, &cp);
        // at omega = 2: |sigma|^2 / sqrt(4 - Gamma^2), real positive
        let expected = 0.04 / 3.49f64.sqrt();
        assert_cclose(se.eval(c(2.0, 0.0)).unwrap(), c(expected, 0.0), 1e-10);
    }

    #[test]
    fn self_energy_large_omega_tail() {
        let (d, cp) = convective();
        let se = SelfEnergy::new(&d, &cp);
        // Sigma ~ (int g1 g2 dk) / omega = |sigma|^2 / omega
        let w = c(100.0, 0.0);
        let sigma = se.eval(w).unwrap();
        assert!((sigma * w / c(0.04, 0.0) - 1.0).norm() < 1e-3);
    }

    #[test]
    fn self_energy_refuses_on_loop() {
        let (d, cp) = convective();
        let se = SelfEnergy::new(&d, &cp);
        assert!(matches!(se.eval(c(1.0, 0.0)), Err(Error::OnLoop { .. })));
    }

    #[test]
    fn density_of_states_values() {
        let d = Dispersion::asymmetric_deltas(1.0, 0.7).unwrap();
        assert_cclose(density_of_states(&d, 0.0).unwrap(), 1.0 / c(0.0, 0.7), 1e-14);
        let herm = Dispersion::asymmetric_deltas(1.0, 0.0).unwrap();
        // 1/(d omega/dk) with d omega/dk = -sin k
        assert_cclose(density_of_states(&herm, PI / 2.0).unwrap(), c(-1.0, 0.0), 1e-14);
        assert_cclose(density_of_states(&herm, -PI / 2.0).unwrap(), c(1.0, 0.0), 1e-14);
        assert!(density_of_states(&herm, 0.0).is_err());
    }

    #[test]
    fn jump_matches_formula_on_preset() {
        // at the top co-vertex the jump is exactly -i |sigma|^2 for any D2
        for d2 in [0.7, 1.2] {
            let d = Dispersion::asymmetric_deltas(1.0, d2).unwrap();
            let cp = CouplingProfile::point(c(0.2, 0.0), 0.0);
            let se = SelfEnergy::new(&d, &cp);
            let jump = se.jump(PI / 2.0).unwrap();
            assert_cclose(jump, c(0.0, -0.04), 1e-8);
            let formula = self_energy_jump_formula(&d, &cp, PI / 2.0).unwrap();
            assert_cclose(jump, formula, 1e-8);
        }
    }

    #[test]
    fn jump_invariant_under_real_energy_shift() {
        let d2 = 0.9;
        let base = Dispersion::asymmetric_deltas(1.0, d2).unwrap();
        let shifted = Dispersion::from_pairs(&[
            (0, c(5.0, 0.0)),
            (1, base.coefficient(1)),
            (-1, base.coefficient(-1)),
        ])
        .unwrap();
        let cp = CouplingProfile::point(c(0.2, 0.0), 0.0);
        let k0 = 0.9;
        let a = SelfEnergy::new(&base, &cp).jump(k0).unwrap();
        let b = SelfEnergy::new(&shifted, &cp).jump(k0).unwrap();
        assert_cclose(a, b, 1e-8);
    }

    #[test]
    fn jump_near_hermitian_limit() {
        // the formula value at the top co-vertex stays -i |sigma|^2 as the
        // loop flattens toward the (excluded) degenerate Hermitian band
        let d = Dispersion::asymmetric_deltas(1.0, 0.05).unwrap();
        let cp = CouplingProfile::point(c(0.2, 0.0), 0.0);
        let f = self_energy_jump_formula(&d, &cp, PI / 2.0).unwrap();
        assert_cclose(f, c(0.0, -0.04), 1e-12);
        let herm = Dispersion::asymmetric_deltas(1.0, 0.0).unwrap();
        assert!(SelfEnergy::new(&herm, &cp).jump(PI / 2.0).is_err());
    }

    #[test]
    fn continued_self_energy_at_origin() {
        let (d, cp) = convective();
        let got = self_energy_continued(&d, &cp, c(0.0, 0.0)).unwrap();
        let expected = c(0.0, -0.04 / 0.51f64.sqrt());
        assert_cclose(got, expected, 1e-9);
    }

    #[test]
    fn continued_self_energy_in_gap_is_real() {
        // inside the loop but outside the effective band: real valued
        let (d, cp) = convective();
        let got = self_energy_continued(&d, &cp, c(0.8, 0.0)).unwrap();
        assert!(got.im.abs() < 1e-9, "Im Sigma_II = {}", got.im);
        assert_close(got.re, 0.04 / 0.13f64.sqrt(), 1e-8);
    }

    #[test]
    fn continuation_is_consistent_across_the_loop() {
        let (d, cp) = convective();
        let se = SelfEnergy::new(&d, &cp);
        let k0 = 0.8;
        let w0 = d.eval(c(k0, 0.0));
        let vel = d.group_velocity(c(k0, 0.0));
        let inward = Complex64::i() * vel / vel.norm(); // ccw loop
        let anchor = se.energy_loop().nearest_sample(w0 + inward * 1e-3);
        let probe = |delta: f64| {
            let inside = se.eval_continued_from(anchor, w0 + inward * delta).unwrap();
            let outside = se.eval(w0 - inward * delta).unwrap();
            (inside - outside).norm()
        };
        // Sigma_II from inside meets Sigma from outside; Richardson in delta
        let d1 = probe(2e-3);
        let d2 = probe(1e-3);
        assert!(2.0 * d2 - d1 < 1e-6, "mismatch {d1} {d2}");
    }

    #[test]
    fn pole_complete_decay() {
        let (d, cp) = convective();
        let r = find_pole(&d, &cp).unwrap();
        // weak-coupling estimate -i 0.0560; exact quartic root -i 0.05584
        assert!(r.pole.re.abs() < 1e-10);
        assert_close(r.pole.im, -0.0560, 6e-4);
        let roots = AsymmetricModel::new(0.85, 0.15, c(0.2, 0.0), 0.0)
            .unwrap()
            .pole_exact();
        let nearest = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - r.pole).norm().partial_cmp(&(b - r.pole).norm()).unwrap())
            .unwrap();
        assert_cclose(r.pole, nearest, 1e-9);
        assert_eq!(r.pole_location, LoopLocation::Inside);
        // two real branch points at +-Gamma, nu = 1/2, algebraic cut decay
        assert_eq!(r.branch_points.len(), 2);
        let cut = r.cut.unwrap();
        assert!(cut.rate.abs() < 1e-10);
        assert_close(cut.power, 1.5, 1e-12);
    }

    #[test]
    fn pole_fractional_decay_is_real() {
        let (d, mut cp) = convective();
        cp = cp.with_omega_a(0.8);
        let r = find_pole(&d, &cp).unwrap();
        assert!(r.pole.im.abs() < 1e-9, "pole should be real, got {}", r.pole);
        assert!(r.pole.re > 0.8);
        let model = AsymmetricModel::new(0.85, 0.15, c(0.2, 0.0), 0.8).unwrap();
        let roots = model.pole_exact();
        let nearest = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - r.pole).norm().partial_cmp(&(b - r.pole).norm()).unwrap())
            .unwrap();
        assert_cclose(r.pole, nearest, 1e-9);
    }

    #[test]
    fn pole_outside_hermitian_band() {
        let d = Dispersion::asymmetric_deltas(1.0, 0.0).unwrap();
        let cp = CouplingProfile::point(c(0.2, 0.0), 2.0);
        let r = find_pole(&d, &cp).unwrap();
        assert!(r.pole.im.abs() < 1e-10);
        // weak-coupling estimate 2 + |sigma|^2/sqrt(3) = 2.0231; the
        // self-consistent root sits O(sigma^4) below it
        assert_close(r.pole.re, 2.0 + 0.04 / 3.0f64.sqrt(), 1e-3);
        let roots = AsymmetricModel::new(0.5, 0.5, c(0.2, 0.0), 2.0)
            .unwrap()
            .pole_exact();
        let nearest = roots
            .iter()
            .copied()
            .min_by(|a, b| (a - r.pole).norm().partial_cmp(&(b - r.pole).norm()).unwrap())
            .unwrap();
        assert_cclose(r.pole, nearest, 1e-9);
        assert_eq!(r.pole_location, LoopLocation::Outside);
        assert!(r.branch_points.is_empty());
    }

    #[test]
    fn pole_residual_and_weak_coupling_residue() {
        let (d, _) = convective();
        for (sigma, omega_a) in [(0.2, 0.0), (0.2, 0.8), (1e-3, 0.3)] {
            let cp = CouplingProfile::point(c(sigma, 0.0), omega_a);
            let se = SelfEnergy::new(&d, &cp);
            let r = find_pole_with(&se).unwrap();
            let wa = c(omega_a, 0.0);
            let anchor = se.energy_loop().nearest_sample(wa);
            let sheet_val = match se.energy_loop().contains(wa).unwrap() {
                LoopLocation::Outside => se.eval(r.pole).unwrap(),
                _ => se.eval_continued_from(anchor, r.pole).unwrap(),
            };
            assert!(
                (r.pole - wa - sheet_val).norm() < 1e-10,
                "residual too large for sigma={sigma}, omega_a={omega_a}"
            );
            if sigma < 1e-2 {
                assert!((r.residue - 1.0).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn quadrature_matches_closed_form_at_random_points() {
        let model = AsymmetricModel::new(0.85, 0.15, c(0.2, 0.0), 0.0).unwrap();
        let d = model.dispersion();
        let cp = model.coupling();
        let se = SelfEnergy::new(&d, &cp);
        let lp = se.energy_loop();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
        let mut tested = 0;
        while tested < 50 {
            let w = c(rng.gen_range(-2.2..2.2), rng.gen_range(-1.8..1.8));
            if lp.distance_to(w) < 0.05 {
                continue;
            }
            // keep clear of the branch cut segment [-Gamma, Gamma]
            if w.im.abs() < 0.05 && w.re.abs() < 0.51f64.sqrt() + 0.05 {
                continue;
            }
            let closed = model.self_energy(w, Sheet::Outside).unwrap();
            let quad = se.eval(w).unwrap();
            assert!(
                (closed - quad).norm() < 1e-8,
                "mismatch at {w}: closed {closed}, quadrature {quad}"
            );
            tested += 1;
        }
    }

    #[test]
    fn no_spurious_gain_from_hermitian_coupling() {
        // over the non-absolute cells of the parameter grid the pole never
        // acquires a positive imaginary part
        for &delta1 in &[0.5, 1.0] {
            for &delta2 in &[0.0, 0.3, 0.7, 1.0] {
                if delta2 >= delta1 {
                    continue; // absolute or boundary
                }
                for &omega_a in &[0.0, 0.8] {
                    let d = Dispersion::asymmetric_deltas(delta1, delta2).unwrap();
                    let cp = CouplingProfile::point(c(0.2, 0.0), omega_a);
                    match find_pole(&d, &cp) {
                        Ok(r) => assert!(
                            r.pole.im <= 1e-9,
                            "gain at D1={delta1}, D2={delta2}, omega_a={omega_a}: {}",
                            r.pole
                        ),
                        Err(Error::PoleOnLoop) | Err(Error::OnLoop { .. }) => {}
                        Err(e) => panic!("unexpected error: {e}"),
                    }
                }
            }
        }
    }

    #[test]
    fn cut_asymptote_cases() {
        let abs = cut_asymptote(c(0.0, 0.44f64.sqrt()), 0.5);
        assert_close(abs.rate, 0.6633249580710799, 1e-12);
        assert_close(abs.power, 1.5, 1e-12);
        let conv = cut_asymptote(c(0.51f64.sqrt(), 0.0), 0.5);
        assert_close(conv.rate, 0.0, 1e-12);
        let herm = cut_asymptote(c(1.0, 0.0), 0.5);
        assert_close(herm.rate, 0.0, 1e-12);
    }

    #[test]
    fn random_system_jump_formula_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let mut systems = 0;
        while systems < 2 {
            let d = match random_simple_dispersion(&mut rng) {
                Some(d) => d,
                None => continue,
            };
            let cp = random_coupling(&mut rng);
            let se = SelfEnergy::new(&d, &cp);
            for _ in 0..4 {
                let k0 = rng.gen_range(-PI..PI);
                if d.group_velocity(c(k0, 0.0)).norm() < 0.1 {
                    continue;
                }
                let numeric = match se.jump(k0) {
                    Ok(j) => j,
                    Err(Error::QuadratureNotConverged { .. }) => continue,
                    Err(e) => panic!("jump failed: {e}"),
                };
                let formula = self_energy_jump_formula(&d, &cp, k0).unwrap();
                assert!(
                    (numeric - formula).norm() / formula.norm().max(1e-12) < 1e-6,
                    "k0={k0}: numeric {numeric}, formula {formula}"
                );
            }
            systems += 1;
        }
    }

    pub(crate) fn random_simple_dispersion(rng: &mut ChaCha8Rng) -> Option<Dispersion> {
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
        // keep the group velocity bounded away from zero on the axis
        let min_vel = (0..512)
            .map(|j| {
                let k = -PI + 2.0 * PI * j as f64 / 512.0;
                d.group_velocity(c(k, 0.0)).norm()
            })
            .fold(f64::INFINITY, f64::min);
        if min_vel < 0.08 {
            return None;
        }
        Some(d)
    }

    pub(crate) fn random_coupling(rng: &mut ChaCha8Rng) -> CouplingProfile {
        let mut sigma = BTreeMap::new();
        sigma.insert(0, c(rng.gen_range(0.05..0.3), rng.gen_range(-0.1..0.1)));
        if rng.gen_bool(0.5) {
            sigma.insert(
                rng.gen_range(-2..=2),
                c(rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15)),
            );
        }
        CouplingProfile::new(sigma, 0.0)
    }
}
