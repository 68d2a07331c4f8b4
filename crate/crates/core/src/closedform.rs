//! Exact results for the nearest-neighbor chain with asymmetric hopping.
//!
//! The chain `i dc_n/dt = kappa1 c_{n-1} + kappa2 c_{n+1}` has the elliptic
//! band `omega(k) = D1 cos k + i D2 sin k` and everything of interest in
//! closed form: the piecewise self-energy, the pole quartic, resonant and
//! detuned Rabi oscillations at the `kappa2 = 0` boundary, and the
//! imaginary gauge transformation that maps the `kappa1 kappa2 > 0` chain
//! onto a Hermitian one with hopping Gamma/2, `Gamma = 2 sqrt(kappa1 kappa2)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Dispersion;
use crate::spectral::CouplingProfile;

/// Largest |h n| the gauge factors tolerate before overflow.
const GAUGE_EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `kappa2 > 0`: convectively unstable, reducible to a Hermitian chain.
    PseudoHermitianConvective,
    /// `kappa2 = 0`: unidirectional hopping; the discrete state and site 0
    /// decouple from the rest and Rabi-oscillate.
    RabiBoundary,
    /// `kappa2 < 0`: absolutely unstable.
    Absolute,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::PseudoHermitianConvective => write!(f, "pseudo_hermitian_convective"),
            Regime::RabiBoundary => write!(f, "rabi_boundary"),
            Regime::Absolute => write!(f, "absolute"),
        }
    }
}

/// Which branch of the self-energy to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    /// The physical sheet: 0 inside the loop, `|sigma|^2 / sqrt(w^2 - G^2)`
    /// outside (branch fixed by which root of the k-quadratic sits inside
    /// the unit circle).
    Outside,
    /// The continuation across the loop, `-i |sigma|^2 / sqrt(G^2 - w^2)`
    /// with the principal square root.
    Continued,
}

/// The asymmetric-hopping model: chain rates plus a point coupling
/// `sigma` from the discrete state (energy `omega_a`) to site 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetricModel {
    kappa1: f64,
    kappa2: f64,
    sigma: Complex64,
    omega_a: f64,
}

impl AsymmetricModel {
    pub fn new(kappa1: f64, kappa2: f64, sigma: Complex64, omega_a: f64) -> Result<Self> {
        if !(kappa1 > 0.0) || !kappa1.is_finite() || !kappa2.is_finite() {
            return Err(Error::InvalidModel(format!(
                "need kappa1 > 0 and finite rates, got kappa1={kappa1}, kappa2={kappa2}"
            )));
        }
        Ok(Self {
            kappa1,
            kappa2,
            sigma,
            omega_a,
        })
    }

    pub fn from_deltas(delta1: f64, delta2: f64, sigma: Complex64, omega_a: f64) -> Result<Self> {
        Self::new((delta1 + delta2) / 2.0, (delta1 - delta2) / 2.0, sigma, omega_a)
    }

    pub fn kappa1(&self) -> f64 {
        self.kappa1
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn delta1(&self) -> f64 {
        self.kappa1 + self.kappa2
    }

    pub fn delta2(&self) -> f64 {
        self.kappa1 - self.kappa2
    }

    /// `Gamma^2 = D1^2 - D2^2 = 4 kappa1 kappa2`, exact and real.
    pub fn gamma_sq(&self) -> f64 {
        4.0 * self.kappa1 * self.kappa2
    }

    /// Effective half-bandwidth `Gamma`, stored complex so `kappa2 < 0`
    /// (imaginary Gamma) flows through the formulas without case splits.
    pub fn gamma(&self) -> Complex64 {
        Complex64::new(self.gamma_sq(), 0.0).sqrt()
    }

    pub fn regime(&self) -> Regime {
        if self.kappa2 > 0.0 {
            Regime::PseudoHermitianConvective
        } else if self.kappa2 == 0.0 {
            Regime::RabiBoundary
        } else {
            Regime::Absolute
        }
    }

    pub fn dispersion(&self) -> Dispersion {
        Dispersion::asymmetric(self.kappa1, self.kappa2).expect("kappa1 validated")
    }

    pub fn coupling(&self) -> CouplingProfile {
        CouplingProfile::point(self.sigma, self.omega_a)
    }

    /// Closed-form self-energy. On the `Outside` sheet the branch is chosen
    /// by classifying the two roots of `kappa1 z^2 - w z + kappa2 = 0`
    /// against the unit circle, which reproduces the quadrature exactly;
    /// both roots on the same side means w lies inside the loop and the
    /// physical sheet value is 0.
    pub fn self_energy(&self, w: Complex64, sheet: Sheet) -> Result<Complex64> {
        let s2 = self.sigma.norm_sqr();
        match sheet {
            Sheet::Outside => {
                let disc = (w * w - self.gamma_sq()).sqrt();
                let z1 = (w + disc) / (2.0 * self.kappa1);
                let z2 = (w - disc) / (2.0 * self.kappa1);
                let (r1, r2) = (z1.norm(), z2.norm());
                if (r1 - 1.0).abs() < 1e-12 || (r2 - 1.0).abs() < 1e-12 {
                    return Err(Error::OnLoop { re: w.re, im: w.im });
                }
                match (r1 < 1.0, r2 < 1.0) {
                    (true, true) | (false, false) => Ok(Complex64::ZERO),
                    (false, true) => Ok(s2 / (self.kappa1 * (z1 - z2))),
                    (true, false) => Ok(s2 / (self.kappa1 * (z2 - z1))),
                }
            }
            Sheet::Continued => {
                let root = (Complex64::new(self.gamma_sq(), 0.0) - w * w).sqrt();
                if root.norm() < 1e-14 * self.delta1().max(1.0) {
                    return Err(Error::ContinuationStalled);
                }
                Ok(-Complex64::i() * s2 / root)
            }
        }
    }

    /// All four roots of the pole quartic
    /// `(w - omega_a)^2 (w^2 - Gamma^2) = |sigma|^4`,
    /// sorted by real part then imaginary part.
    pub fn pole_exact(&self) -> Vec<Complex64> {
        let g2 = Complex64::new(self.gamma_sq(), 0.0);
        let wa = Complex64::new(self.omega_a, 0.0);
        let s4 = self.sigma.norm_sqr().powi(2);
        // expand (w - wa)^2 (w^2 - g2) - s4
        let coeffs = [
            -wa * wa * g2 - s4,
            2.0 * wa * g2,
            wa * wa - g2,
            -2.0 * wa,
            Complex64::new(1.0, 0.0),
        ];
        let mut roots = durand_kerner(&coeffs);
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        roots
    }

    /// Weak-coupling pole estimate. Inside the loop this is
    /// `omega_a + Sigma_II(omega_a)` on the physically continued branch;
    /// outside it is `omega_a + Sigma(omega_a)`.
    pub fn pole_weak(&self) -> Result<WeakPole> {
        let wa = Complex64::new(self.omega_a, 0.0);
        let sigma_out = self.self_energy(wa, Sheet::Outside)?;
        let s2 = self.sigma.norm_sqr();
        let gamma_abs = self.gamma().norm();
        let near_branch_point = (self.omega_a.abs() - gamma_abs).abs() < 5.0 * self.sigma.norm();
        if sigma_out.norm() > 0.0 {
            // omega_a outside the loop: the shift is real and level-repels
            // away from the band
            return Ok(WeakPole {
                value: wa + sigma_out,
                near_branch_point,
                branch_ambiguous: false,
            });
        }
        // inside the loop
        let g2 = self.gamma_sq();
        let wa2 = self.omega_a * self.omega_a;
        if g2 > 0.0 && wa2 < g2 {
            // inside the effective band: decaying pole, principal branch
            let value = wa - Complex64::i() * s2 / (g2 - wa2).sqrt();
            Ok(WeakPole {
                value,
                near_branch_point,
                branch_ambiguous: false,
            })
        } else {
            // between the band edge and the loop (or imaginary Gamma): the
            // continued square root is imaginary and the shift real; the
            // mirrored branch gives the opposite sign, so flag it
            let shift = s2 / (wa2 - g2).sqrt();
            let signed = if self.omega_a >= 0.0 { shift } else { -shift };
            Ok(WeakPole {
                value: wa + Complex64::new(signed, 0.0),
                near_branch_point,
                branch_ambiguous: true,
            })
        }
    }

    /// Rabi frequencies `Omega_+- = omega_a/2 +- sqrt((omega_a/2)^2 + |sigma|^2)`.
    pub fn rabi_frequencies(&self) -> (f64, f64) {
        let half = self.omega_a / 2.0;
        let root = (half * half + self.sigma.norm_sqr()).sqrt();
        (half + root, half - root)
    }

    /// Exact survival amplitude at the `kappa2 = 0` boundary:
    /// `c_a(t) = [O+ e^{-i O+ t} - O- e^{-i O- t}] / (O+ - O-)`.
    pub fn rabi_solution(&self, t: f64) -> Result<Complex64> {
        if self.kappa2 != 0.0 {
            return Err(Error::RequiresUnidirectional);
        }
        if self.sigma.norm_sqr() == 0.0 {
            return Ok((-Complex64::i() * self.omega_a * t).exp());
        }
        let (op, om) = self.rabi_frequencies();
        let ep = (-Complex64::i() * op * t).exp();
        let em = (-Complex64::i() * om * t).exp();
        Ok((ep * op - em * om) / (op - om))
    }

    /// Gauge strength `h = ln(kappa1/kappa2)/2` of the imaginary gauge
    /// transformation; only defined in the pseudo-Hermitian regime.
    pub fn gauge_field(&self) -> Result<f64> {
        if self.kappa1 * self.kappa2 <= 0.0 {
            return Err(Error::NotPseudoHermitian);
        }
        Ok(0.5 * (self.kappa1 / self.kappa2).ln())
    }

    /// Equivalent Hermitian model with symmetric hopping `Gamma/2`; the
    /// survival amplitude `c_a(t)` is identical because the gauge
    /// transformation leaves the discrete state untouched.
    pub fn hermitize(&self) -> Result<AsymmetricModel> {
        if self.kappa1 * self.kappa2 <= 0.0 {
            return Err(Error::NotPseudoHermitian);
        }
        let half_gamma = (self.kappa1 * self.kappa2).sqrt();
        AsymmetricModel::new(half_gamma, half_gamma, self.sigma, self.omega_a)
    }

    /// Closed-form lattice amplitudes at the `kappa2 = 0` boundary.
    ///
    /// Sites upstream of the injection point never populate (`c_n = 0` for
    /// `n <= -1`); `c_0 = f1(t)` from the decoupled two-level system; and
    /// each `c_n`, `n >= 1`, is the iterated integral
    /// `c_n(t) = -i kappa1 int_0^t c_{n-1}(x) dx`, evaluated by cumulative
    /// trapezoid on the supplied time grid.
    pub fn degenerate_solution(&self, times: &[f64], n: i64) -> Result<Vec<Complex64>> {
        if self.kappa2 != 0.0 {
            return Err(Error::RequiresUnidirectional);
        }
        if n <= -1 {
            return Ok(vec![Complex64::ZERO; times.len()]);
        }
        let mut cur: Vec<Complex64> = times.iter().map(|&t| self.f1(t)).collect();
        for _ in 0..n {
            cur = cumtrapz(times, &cur)
                .into_iter()
                .map(|v| -Complex64::i() * self.kappa1 * v)
                .collect();
        }
        Ok(cur)
    }

    /// `f1(t)`: occupation amplitude of site 0 in the boundary case.
    pub fn f1(&self, t: f64) -> Complex64 {
        if self.sigma.norm_sqr() == 0.0 {
            return Complex64::ZERO;
        }
        let (op, om) = self.rabi_frequencies();
        let ep = (-Complex64::i() * op * t).exp();
        let em = (-Complex64::i() * om * t).exp();
        self.sigma.conj() * (ep - em) / (op - om)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakPole {
    pub value: Complex64,
    /// The expansion is unreliable when omega_a sits within 5 |sigma| of a
    /// branch point.
    pub near_branch_point: bool,
    /// Both continuations give a real pole with opposite shifts; the value
    /// reported is the physically level-repelled one.
    pub branch_ambiguous: bool,
}

/// `b_n = c_n e^{h n}` applied to a block of lattice amplitudes whose first
/// entry carries site index `n_first`. The discrete-state amplitude has no
/// lattice index and is untouched by the gauge.
pub fn gauge_transform(
    amplitudes: &[Complex64],
    n_first: i64,
    h: f64,
) -> Result<Vec<Complex64>> {
    let n_last = n_first + amplitudes.len() as i64 - 1;
    for n in [n_first, n_last] {
        if (h * n as f64).abs() > GAUGE_EXP_LIMIT {
            return Err(Error::GaugeOverflow { h, n });
        }
    }
    Ok(amplitudes
        .iter()
        .enumerate()
        .map(|(i, &c)| c * (h * (n_first + i as i64) as f64).exp())
        .collect())
}

fn cumtrapz(times: &[f64], values: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = Complex64::ZERO;
    out.push(acc);
    for i in 1..values.len() {
        acc += (values[i] + values[i - 1]) * 0.5 * (times[i] - times[i - 1]);
        out.push(acc);
    }
    out
}

/// Durand-Kerner simultaneous root iteration for a monic polynomial given
/// by ascending coefficients (constant term first, leading 1 last).
fn durand_kerner(coeffs: &[Complex64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let eval = |z: Complex64| {
        let mut acc = Complex64::ZERO;
        for &c in coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    let radius = 1.0
        + coeffs[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|i| radius * seed.powu(i as u32 + 1)).collect();
    for _ in 0..200 {
        let mut shift_max = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            shift_max = shift_max.max(step.norm());
        }
        if shift_max < 1e-14 * radius {
            break;
        }
    }
    // Newton polish
    let dcoeffs: Vec<Complex64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect();
    let deval = |z: Complex64| {
        let mut acc = Complex64::ZERO;
        for &c in dcoeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = deval(*r);
            if d.norm() < 1e-300 {
                break;
            }
            *r -= eval(*r) / d;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, SimConfig};
    use crate::testkit::{assert_cclose, assert_close};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn convective() -> AsymmetricModel {
        AsymmetricModel::new(0.85, 0.15, c(0.2, 0.0), 0.0).unwrap()
    }

    #[test]
    fn regime_boundaries() {
        assert_eq!(convective().regime(), Regime::PseudoHermitianConvective);
        assert_eq!(
            AsymmetricModel::new(1.0, 0.0, c(0.2, 0.0), 0.0).unwrap().regime(),
            Regime::RabiBoundary
        );
        assert_eq!(
            AsymmetricModel::new(1.1, -0.1, c(0.2, 0.0), 0.0).unwrap().regime(),
            Regime::Absolute
        );
    }

    #[test]
    fn gamma_identity() {
        for (k1, k2) in [(0.85, 0.15), (1.1, -0.1), (0.6, 0.6)] {
            let m = AsymmetricModel::new(k1, k2, c(0.1, 0.0), 0.0).unwrap();
            let lhs = m.gamma_sq();
            let rhs = m.delta1().powi(2) - m.delta2().powi(2);
            assert!((lhs - rhs).abs() <= 1e-15 * lhs.abs().max(1.0));
            let g = m.gamma();
            assert!((g * g - lhs).norm() <= 1e-14 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn self_energy_sheets() {
        let m = convective();
        // inside the ellipse the physical sheet vanishes
        assert_cclose(m.self_energy(c(0.0, 0.0), Sheet::Outside).unwrap(), c(0.0, 0.0), 1e-15);
        // outside: real positive at omega = 2
        assert_cclose(
            m.self_energy(c(2.0, 0.0), Sheet::Outside).unwrap(),
            c(0.04 / 3.49f64.sqrt(), 0.0),
            1e-14,
        );
        // continued inside: -i |sigma|^2 / sqrt(Gamma^2)
        assert_cclose(
            m.self_energy(c(0.0, 0.0), Sheet::Continued).unwrap(),
            c(0.0, -0.04 / 0.51f64.sqrt()),
            1e-14,
        );
        // on the loop: refused
        assert!(matches!(
            m.self_energy(c(1.0, 0.0), Sheet::Outside),
            Err(Error::OnLoop { .. })
        ));
    }

    #[test]
    fn continued_denominator_vanishes_at_the_pole() {
        let m = convective();
        let roots = m.pole_exact();
        // the decaying root of the quartic kills i|sigma|^2 + (w - wa) sqrt(G^2 - w^2)
        // on one of the two square-root branches
        for &r in &roots {
            let root = (Complex64::new(m.gamma_sq(), 0.0) - r * r).sqrt();
            let s2 = m.sigma().norm_sqr();
            let d1 = (Complex64::i() * s2 + (r - m.omega_a()) * root).norm();
            let d2 = (Complex64::i() * s2 - (r - m.omega_a()) * root).norm();
            assert!(d1.min(d2) < 1e-9, "denominator does not vanish at {r}");
        }
    }

    #[test]
    fn pole_exact_complete_decay() {
        let m = convective();
        let roots = m.pole_exact();
        assert_eq!(roots.len(), 4);
        // the quartic for omega_a = 0 factors into a real pair near +-Gamma
        // and an imaginary pair +-i 0.05584
        let expected_im = ((0.2601f64 + 0.0064).sqrt() - 0.51) / 2.0;
        let expected = expected_im.sqrt();
        let mut found_decaying = false;
        for r in roots {
            if r.re.abs() < 1e-9 && (r.im + expected).abs() < 1e-10 {
                found_decaying = true;
            }
        }
        assert!(found_decaying);
    }

    #[test]
    fn pole_weak_values() {
        // complete decay: -i 0.0560
        let m = convective();
        let p = m.pole_weak().unwrap();
        assert!(!p.branch_ambiguous);
        assert_cclose(p.value, c(0.0, -0.056011203361), 1e-9);

        // fractional decay inside the loop: real shift away from the band
        let m = AsymmetricModel::new(0.85, 0.15, c(0.2, 0.0), 0.8).unwrap();
        let p = m.pole_weak().unwrap();
        assert!(p.branch_ambiguous);
        assert!(p.near_branch_point);
        assert_close(p.value.im, 0.0, 1e-15);
        assert_close(p.value.re, 0.8 + 0.04 / 0.13f64.sqrt(), 1e-12);

        // sigma -> 0 recovers omega_a
        let m = AsymmetricModel::new(0.85, 0.15, c(1e-9, 0.0), 0.3).unwrap();
        assert_cclose(m.pole_weak().unwrap().value, c(0.3, 0.0), 1e-12);

        // outside the Hermitian band (kappa2 -> kappa1): Eq-style real shift
        let m = AsymmetricModel::new(0.5, 0.5, c(0.2, 0.0), 2.0).unwrap();
        let p = m.pole_weak().unwrap();
        assert_close(p.value.im, 0.0, 1e-15);
        assert_close(p.value.re, 2.0 + 0.04 / 3.0f64.sqrt(), 1e-12);
    }

    #[test]
    fn rabi_solution_resonant() {
        let m = AsymmetricModel::new(1.0, 0.0, c(0.2, 0.0), 0.0).unwrap();
        assert_cclose(m.rabi_solution(0.0).unwrap(), c(1.0, 0.0), 1e-15);
        for t in [0.5, 3.0, 7.9] {
            let ca = m.rabi_solution(t).unwrap();
            assert_close(ca.norm_sqr(), (0.2 * t).cos().powi(2), 1e-12);
        }
        let (op, om) = m.rabi_frequencies();
        assert_close(op, 0.2, 1e-15);
        assert_close(om, -0.2, 1e-15);
    }

    #[test]
    fn rabi_solution_detuned_never_empties() {
        let m = AsymmetricModel::new(1.0, 0.0, c(0.2, 0.0), 1.0).unwrap();
        let mut min_p = f64::INFINITY;
        let mut t = 0.0;
        while t < 60.0 {
            min_p = min_p.min(m.rabi_solution(t).unwrap().norm_sqr());
            t += 0.01;
        }
        assert!(min_p > 0.0, "detuned transfer should stay incomplete");
        assert!(min_p > 0.5, "detuning omega_a = 1 >> sigma keeps P_a high");
    }

    #[test]
    fn rabi_requires_boundary() {
        assert!(matches!(
            convective().rabi_solution(1.0),
            Err(Error::RequiresUnidirectional)
        ));
    }

    #[test]
    fn gauge_transform_basics() {
        let amps = vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.05, 0.0)];
        // h = 0 is the identity
        assert_eq!(gauge_transform(&amps, -1, 0.0).unwrap(), amps);
        // site 0 is invariant for any h
        let out = gauge_transform(&amps, -1, 0.7).unwrap();
        assert_cclose(out[1], amps[1], 1e-15);
        // round trip
        let back = gauge_transform(&out, -1, -0.7).unwrap();
        for (a, b) in amps.iter().zip(&back) {
            assert_cclose(*a, *b, 1e-15);
        }
        // overflow guard
        assert!(matches!(
            gauge_transform(&vec![c(1.0, 0.0); 2001], -1000, 0.8),
            Err(Error::GaugeOverflow { .. })
        ));
    }

    #[test]
    fn hermitize_values() {
        let m = convective();
        let h = m.hermitize().unwrap();
        assert_close(h.kappa1(), 0.51f64.sqrt() / 2.0, 1e-15);
        assert_close(h.kappa2(), h.kappa1(), 0.0);
        assert_close(m.gauge_field().unwrap(), 0.5 * (0.85f64 / 0.15).ln(), 1e-15);

        let already = AsymmetricModel::new(0.5, 0.5, c(0.2, 0.0), 0.0).unwrap();
        assert_eq!(already.hermitize().unwrap(), already);

        let absolute = AsymmetricModel::new(1.1, -0.1, c(0.2, 0.0), 0.0).unwrap();
        assert!(matches!(absolute.hermitize(), Err(Error::NotPseudoHermitian)));
    }

    #[test]
    fn degenerate_solution_structure() {
        let m = AsymmetricModel::new(1.0, 0.0, c(0.2, 0.0), 0.0).unwrap();
        let times: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
        // upstream sites stay exactly empty
        let c_m3 = m.degenerate_solution(&times, -3).unwrap();
        assert!(c_m3.iter().all(|v| v.norm() == 0.0));
        // the 2x2 block is unitary: |f1|^2 + |f2|^2 = 1
        for &t in &[0.0, 1.7, 12.0] {
            let p = m.f1(t).norm_sqr() + m.rabi_solution(t).unwrap().norm_sqr();
            assert_close(p, 1.0, 1e-12);
        }
        // c1 from the iterated integral matches the time-domain integrator;
        // the cumulative trapezoid needs dt ~ 2.5e-4 for 1e-8 at t = 20
        let mut cfg = SimConfig::auto(&m.dispersion(), &m.coupling(), 20.0);
        cfg.dt = 2.5e-4;
        cfg.record_sites = vec![1];
        let traj = evolve(&m.dispersion(), &m.coupling(), &cfg);
        let c1 = m.degenerate_solution(&traj.times, 1).unwrap();
        let sim = &traj.site_series[&1];
        let max_err = c1
            .iter()
            .zip(sim)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-8, "c1 mismatch {max_err}");
    }

    #[test]
    fn durand_kerner_known_roots() {
        // (z-1)(z-2)(z-3)(z-4) = z^4 - 10z^3 + 35z^2 - 50z + 24
        let coeffs = [
            c(24.0, 0.0),
            c(-50.0, 0.0),
            c(35.0, 0.0),
            c(-10.0, 0.0),
            c(1.0, 0.0),
        ];
        let mut roots = durand_kerner(&coeffs);
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (i, r) in roots.iter().enumerate() {
            assert_cclose(*r, c((i + 1) as f64, 0.0), 1e-10);
        }
    }
}
