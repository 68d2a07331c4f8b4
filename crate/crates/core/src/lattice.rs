//! Single-band complex dispersions and the geometry of their energy loops.
//!
//! A band is stored by its Fourier coefficients, `omega(k) = sum_l w_l e^{ikl}`.
//! As the Bloch number k runs over the Brillouin zone `[-pi, pi)` the energy
//! traces a closed curve in the complex plane, the energy loop. Most of the
//! spectral machinery needs that curve to be simple (no self-intersection),
//! which is checked here rather than assumed.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default Brillouin-zone grid size. Power of two; trapezoid sums over a
/// full period converge spectrally for these analytic integrands.
pub const DEFAULT_LOOP_SAMPLES: usize = 4096;

/// Relative on-loop tolerance: points closer than this times the loop
/// diameter are refused a verdict instead of being misclassified.
pub const ON_LOOP_REL_TOL: f64 = 1e-9;

const BALANCED_TOL: f64 = 1e-12;

/// A single complex band given by its Fourier coefficients.
///
/// Convention: `omega(k) = sum_l coeff[l] * exp(i k l)`. Coefficients are
/// stored sparsely; the support is finite but otherwise unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispersion {
    coeffs: BTreeMap<i32, Complex64>,
}

impl Dispersion {
    /// Builds a dispersion from sparse Fourier coefficients. Exact zeros are
    /// pruned; at least one nonzero coefficient must remain.
    pub fn new(coeffs: BTreeMap<i32, Complex64>) -> Result<Self> {
        let coeffs: BTreeMap<i32, Complex64> = coeffs
            .into_iter()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .collect();
        if coeffs.is_empty() {
            return Err(Error::EmptyDispersion);
        }
        Ok(Self { coeffs })
    }

    pub fn from_pairs(pairs: &[(i32, Complex64)]) -> Result<Self> {
        Self::new(pairs.iter().copied().collect())
    }

    /// Nearest-neighbor chain with asymmetric hopping rates:
    /// `omega(k) = kappa1 e^{ik} + kappa2 e^{-ik} = D1 cos k + i D2 sin k`
    /// with `D1 = kappa1 + kappa2`, `D2 = kappa1 - kappa2`. Requires
    /// `kappa1 > 0`; `kappa2` may have either sign or vanish.
    pub fn asymmetric(kappa1: f64, kappa2: f64) -> Result<Self> {
        if !(kappa1 > 0.0) {
            return Err(Error::InvalidModel(format!(
                "kappa1 must be positive, got {kappa1}"
            )));
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(1, Complex64::new(kappa1, 0.0));
        if kappa2 != 0.0 {
            coeffs.insert(-1, Complex64::new(kappa2, 0.0));
        }
        Ok(Self { coeffs })
    }

    /// Same chain parametrized by the loop semi-axes `D1, D2`.
    pub fn asymmetric_deltas(delta1: f64, delta2: f64) -> Result<Self> {
        Self::asymmetric((delta1 + delta2) / 2.0, (delta1 - delta2) / 2.0)
    }

    pub fn coefficient(&self, l: i32) -> Complex64 {
        self.coeffs.get(&l).copied().unwrap_or(Complex64::ZERO)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        self.coeffs.iter().map(|(&l, &c)| (l, c))
    }

    /// Largest |l| in the support.
    pub fn l_max(&self) -> i32 {
        self.coeffs.keys().map(|l| l.abs()).max().unwrap_or(0)
    }

    /// `omega(k)`, valid for complex k (needed by saddle searches and
    /// analytic continuation). Exact for finite support.
    pub fn eval(&self, k: Complex64) -> Complex64 {
        let mut sum = Complex64::ZERO;
        for (&l, &c) in &self.coeffs {
            sum += c * (Complex64::i() * k * l as f64).exp();
        }
        sum
    }

    /// `d omega / dk`, the complex group velocity.
    pub fn group_velocity(&self, k: Complex64) -> Complex64 {
        self.derivative(k, 1)
    }

    /// m-th derivative of the finite Fourier series, exact.
    pub fn derivative(&self, k: Complex64, m: u32) -> Complex64 {
        let mut sum = Complex64::ZERO;
        for (&l, &c) in &self.coeffs {
            let il = Complex64::i() * l as f64;
            sum += c * il.powu(m) * (Complex64::i() * k * l as f64).exp();
        }
        sum
    }

    /// Balanced gain and loss: the Brillouin-zone average of Im omega
    /// vanishes, i.e. `Im w_0 = 0` within 1e-12.
    pub fn is_balanced(&self) -> bool {
        self.coefficient(0).im.abs() < BALANCED_TOL
    }

    /// True when the support (ignoring the k-independent `w_0` shift)
    /// consists of a single harmonic. Such a band traces a perfect circle
    /// and its group velocity never vanishes, so it has no finite saddle.
    pub fn is_single_harmonic(&self) -> bool {
        self.coeffs.keys().filter(|&&l| l != 0).count() == 1
    }

    /// `sum_l |w_l|`, a bound on |omega(k)| for real k.
    pub fn hopping_weight(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// `sum_l |l| |w_l|`, a bound on the group speed for real k.
    pub fn velocity_weight(&self) -> f64 {
        self.coeffs.iter().map(|(&l, c)| l.abs() as f64 * c.norm()).sum()
    }
}

/// Verdict of a point-in-loop query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopLocation {
    Inside,
    Outside,
    /// Within the on-loop tolerance of the sampled curve; refused a verdict.
    OnLoop,
}

/// The energy loop sampled on a uniform Brillouin-zone grid.
#[derive(Debug, Clone)]
pub struct EnergyLoop {
    k: Vec<f64>,
    omega: Vec<Complex64>,
    velocity: Vec<Complex64>,
    diameter: f64,
    on_loop_tol: f64,
    signed_area: f64,
    simple: bool,
}

impl EnergyLoop {
    /// Samples `omega(k)` on `n` uniform points, `k_j = -pi + 2 pi j / n`.
    /// `n` is rounded up to a power of two (minimum 16).
    pub fn sample(disp: &Dispersion, n: usize) -> Self {
        let n = n.max(16).next_power_of_two();
        let dk = 2.0 * std::f64::consts::PI / n as f64;
        let mut k = Vec::with_capacity(n);
        let mut omega = Vec::with_capacity(n);
        let mut velocity = Vec::with_capacity(n);
        for j in 0..n {
            let kj = -std::f64::consts::PI + dk * j as f64;
            let kc = Complex64::new(kj, 0.0);
            k.push(kj);
            omega.push(disp.eval(kc));
            velocity.push(disp.group_velocity(kc));
        }
        let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for w in &omega {
            re_lo = re_lo.min(w.re);
            re_hi = re_hi.max(w.re);
            im_lo = im_lo.min(w.im);
            im_hi = im_hi.max(w.im);
        }
        let diameter = ((re_hi - re_lo).powi(2) + (im_hi - im_lo).powi(2)).sqrt();
        let signed_area = {
            let mut a = 0.0;
            for j in 0..n {
                let p = omega[j];
                let q = omega[(j + 1) % n];
                a += p.re * q.im - q.re * p.im;
            }
            a / 2.0
        };
        let simple = loop_is_simple(&omega, diameter);
        Self {
            k,
            omega,
            velocity,
            diameter,
            on_loop_tol: ON_LOOP_REL_TOL * diameter.max(f64::MIN_POSITIVE),
            signed_area,
            simple,
        }
    }

    pub fn with_default_grid(disp: &Dispersion) -> Self {
        Self::sample(disp, DEFAULT_LOOP_SAMPLES)
    }

    /// Number of grid samples (always a power of two, at least 16).
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.k.iter().copied().zip(self.omega.iter().copied())
    }

    pub fn energies(&self) -> &[Complex64] {
        &self.omega
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn on_loop_tol(&self) -> f64 {
        self.on_loop_tol
    }

    pub fn is_simple(&self) -> bool {
        self.simple
    }

    pub fn require_simple(&self) -> Result<()> {
        if self.simple {
            Ok(())
        } else {
            Err(Error::SelfIntersectingLoop)
        }
    }

    pub fn signed_area(&self) -> f64 {
        self.signed_area
    }

    /// Traversal orientation as k increases: +1 counterclockwise, -1
    /// clockwise. Degenerate (area ~ 0) loops have no orientation.
    pub fn orientation(&self) -> Result<i8> {
        if self.signed_area.abs() < 1e-12 * self.diameter.powi(2).max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateLoop);
        }
        Ok(if self.signed_area > 0.0 { 1 } else { -1 })
    }

    /// Raw winding number of the loop around `w`, by periodic trapezoid
    /// quadrature of `(1/2 pi i) oint d omega / (omega - w)`.
    pub fn winding(&self, w: Complex64) -> f64 {
        let n = self.omega.len();
        let dk = 2.0 * std::f64::consts::PI / n as f64;
        let mut sum = Complex64::ZERO;
        for j in 0..n {
            sum += self.velocity[j] / (self.omega[j] - w);
        }
        (sum * dk / (2.0 * std::f64::consts::PI * Complex64::i())).re
    }

    /// Euclidean distance from `w` to the sampled polyline.
    pub fn distance_to(&self, w: Complex64) -> f64 {
        let n = self.omega.len();
        let mut best = f64::INFINITY;
        for j in 0..n {
            let a = self.omega[j];
            let b = self.omega[(j + 1) % n];
            best = best.min(point_segment_distance(w, a, b));
        }
        best
    }

    /// Index of the sample nearest to `w`. Ties within 1e-12 of the best
    /// distance are broken toward larger Im omega, then larger Re omega,
    /// so continuation anchors are deterministic.
    pub fn nearest_sample(&self, w: Complex64) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (j, om) in self.omega.iter().enumerate() {
            let d = (om - w).norm();
            if d < best_d - 1e-12 * self.diameter {
                best_d = d;
                best = j;
            } else if (d - best_d).abs() <= 1e-12 * self.diameter {
                let cur = self.omega[best];
                if om.im > cur.im + 1e-15 || ((om.im - cur.im).abs() <= 1e-15 && om.re > cur.re) {
                    best = j;
                    best_d = best_d.min(d);
                }
            }
        }
        best
    }

    pub fn sample_at(&self, j: usize) -> (f64, Complex64) {
        (self.k[j], self.omega[j])
    }

    /// Winding-number point classification.
    ///
    /// Points within the on-loop tolerance of the curve are refused a
    /// verdict. A winding far from any integer signals an under-resolved
    /// grid and is reported as an error.
    pub fn contains(&self, w: Complex64) -> Result<LoopLocation> {
        if self.distance_to(w) < self.on_loop_tol {
            return Ok(LoopLocation::OnLoop);
        }
        let wind = self.winding(w);
        let rounded = wind.round();
        if (wind - rounded).abs() > 0.1 {
            return Err(Error::AmbiguousWinding { winding: wind });
        }
        if rounded == 0.0 {
            Ok(LoopLocation::Outside)
        } else if rounded.abs() == 1.0 {
            Ok(LoopLocation::Inside)
        } else {
            Err(Error::AmbiguousWinding { winding: wind })
        }
    }
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Self-intersection test on the sampled polyline, with spatial hashing so
/// the 4096-sample default stays cheap. Adjacent segments share an endpoint
/// and are skipped; collinear overlaps (collapsed loops) count as
/// intersections.
fn loop_is_simple(omega: &[Complex64], diameter: f64) -> bool {
    let n = omega.len();
    if diameter == 0.0 {
        return false;
    }
    let (mut re_lo, mut im_lo) = (f64::INFINITY, f64::INFINITY);
    let (mut re_hi, mut im_hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for w in omega {
        re_lo = re_lo.min(w.re);
        re_hi = re_hi.max(w.re);
        im_lo = im_lo.min(w.im);
        im_hi = im_hi.max(w.im);
    }
    let g = ((n as f64).sqrt().ceil() as usize).max(1);
    let cw = ((re_hi - re_lo) / g as f64).max(f64::MIN_POSITIVE);
    let ch = ((im_hi - im_lo) / g as f64).max(f64::MIN_POSITIVE);
    let cell_of = |x: f64, y: f64| -> (usize, usize) {
        let cx = (((x - re_lo) / cw) as usize).min(g - 1);
        let cy = (((y - im_lo) / ch) as usize).min(g - 1);
        (cx, cy)
    };
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); g * g];
    for j in 0..n {
        let a = omega[j];
        let b = omega[(j + 1) % n];
        let (x0, y0) = cell_of(a.re.min(b.re), a.im.min(b.im));
        let (x1, y1) = cell_of(a.re.max(b.re), a.im.max(b.im));
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                buckets[cy * g + cx].push(j as u32);
            }
        }
    }
    let eps = 1e-14 * diameter * diameter;
    for bucket in &buckets {
        for (ii, &i) in bucket.iter().enumerate() {
            for &j in &bucket[ii + 1..] {
                let (i, j) = (i as usize, j as usize);
                // skip cyclically adjacent segments
                let d = (i as isize - j as isize).rem_euclid(n as isize);
                if d <= 1 || d >= n as isize - 1 {
                    continue;
                }
                if segments_intersect(
                    omega[i],
                    omega[(i + 1) % n],
                    omega[j],
                    omega[(j + 1) % n],
                    eps,
                ) {
                    return false;
                }
            }
        }
    }
    true
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn segments_intersect(p1: Complex64, p2: Complex64, p3: Complex64, p4: Complex64, eps: f64) -> bool {
    let d1 = cross(p3, p4, p1);
    let d2 = cross(p3, p4, p2);
    let d3 = cross(p1, p2, p3);
    let d4 = cross(p1, p2, p4);
    if ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
    {
        return true;
    }
    // collinear segments: intersect when their projections overlap
    if d1.abs() <= eps && d2.abs() <= eps && d3.abs() <= eps && d4.abs() <= eps {
        let (alo, ahi) = minmax_proj(p1, p2, p4 - p3);
        let (blo, bhi) = minmax_proj(p3, p4, p4 - p3);
        return ahi >= blo && bhi >= alo;
    }
    false
}

fn minmax_proj(a: Complex64, b: Complex64, axis: Complex64) -> (f64, f64) {
    let pa = a.re * axis.re + a.im * axis.im;
    let pb = b.re * axis.re + b.im * axis.im;
    (pa.min(pb), pa.max(pb))
}
