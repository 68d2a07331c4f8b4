//! Saddle points of the dispersion and instability classification.
//!
//! A band with `Im omega(k) > 0` somewhere on the real axis amplifies some
//! Bloch modes. Whether a localized excitation grows at a fixed site
//! (absolute instability) or only in a co-moving frame (convective
//! instability) is decided by the complex saddle points of omega(k): the
//! continuum is absolutely unstable when the most critical saddle of
//! `d omega / dk = 0` has positive `Im omega(k_s)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Dispersion;

/// A root of `d omega / dk = V` in the complex k strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    pub k: Complex64,
    pub omega: Complex64,
    /// Lowest non-vanishing derivative order beyond the drift term; 2 for a
    /// generic quadratic saddle.
    pub order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Convective,
    Absolute,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Stable => write!(f, "stable"),
            Verdict::Convective => write!(f, "convective"),
            Verdict::Absolute => write!(f, "absolute"),
        }
    }
}

/// Outcome of [`classify`].
#[derive(Debug, Clone)]
pub struct RegimeClass {
    pub verdict: Verdict,
    /// `max_k Im omega(k)` over real k.
    pub max_im_on_axis: f64,
    /// Most critical V = 0 saddle (maximal `Im omega(k_s)`), when one exists.
    pub critical_saddle: Option<SaddlePoint>,
    /// Set when saddles coalesce (or have run off to infinity), the
    /// degenerate boundary between the convective and absolute regimes.
    pub boundary_flag: bool,
    /// All V = 0 saddles found, in the deterministic sort order.
    pub saddles: Vec<SaddlePoint>,
}

/// Knobs for the Newton saddle search.
#[derive(Debug, Clone, Copy)]
pub struct SaddleSearch {
    /// Half-width of the Im k strip.
    pub k_max: f64,
    pub re_seeds: usize,
    pub im_seeds: usize,
    pub dedup_tol: f64,
    pub max_iter: usize,
}

impl Default for SaddleSearch {
    fn default() -> Self {
        Self {
            k_max: 5.0,
            re_seeds: 64,
            im_seeds: 32,
            dedup_tol: 1e-8,
            max_iter: 80,
        }
    }
}

const IM_TOL_REL: f64 = 1e-9;
/// Two saddles closer than this in k mark the degenerate boundary case.
const COALESCE_TOL: f64 = 1e-6;

/// All roots of `d omega / dk = V` with `Re k` in `[-pi, pi)` and
/// `|Im k| <= k_max`, deduplicated modulo 2 pi and sorted by descending
/// `Im omega(k_s)` (ties: smaller `|Re omega|`, then smaller `|Re k|`).
///
/// An empty list is returned only when the dispersion provably has no
/// finite saddle (a single harmonic at V = 0); otherwise a search in which
/// no seed converges reports an error.
pub fn find_saddle_points(disp: &Dispersion, v: f64) -> Result<Vec<SaddlePoint>> {
    find_saddle_points_with(disp, v, &SaddleSearch::default())
}

pub fn find_saddle_points_with(
    disp: &Dispersion,
    v: f64,
    search: &SaddleSearch,
) -> Result<Vec<SaddlePoint>> {
    if disp.is_single_harmonic() && v == 0.0 {
        // omega'(k) = i l w_l e^{ikl} never vanishes at finite k.
        return Ok(Vec::new());
    }
    let scale = disp.velocity_weight().max(1e-300);
    let tol = 1e-13 * scale.max(v.abs());
    let vc = Complex64::new(v, 0.0);
    let mut roots: Vec<Complex64> = Vec::new();
    let mut any_converged = false;
    for iy in 0..search.im_seeds {
        let y = -search.k_max
            + 2.0 * search.k_max * (iy as f64 + 0.5) / search.im_seeds as f64;
        for ix in 0..search.re_seeds {
            let x = -std::f64::consts::PI
                + 2.0 * std::f64::consts::PI * (ix as f64 + 0.5) / search.re_seeds as f64;
            let mut k = Complex64::new(x, y);
            let mut converged = false;
            for _ in 0..search.max_iter {
                let f = disp.group_velocity(k) - vc;
                if f.norm() < tol {
                    converged = true;
                    break;
                }
                let df = disp.derivative(k, 2);
                if df.norm() < 1e-300 {
                    break;
                }
                let step = f / df;
                k -= step;
                if k.im.abs() > search.k_max + 2.0 || !k.is_finite() {
                    break;
                }
            }
            if !converged {
                continue;
            }
            any_converged = true;
            if k.im.abs() > search.k_max {
                continue;
            }
            // normalize Re k into [-pi, pi)
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut re = (k.re + std::f64::consts::PI).rem_euclid(two_pi) - std::f64::consts::PI;
            if re >= std::f64::consts::PI {
                re -= two_pi;
            }
            let k = Complex64::new(re, k.im);
            let dup = roots.iter().any(|r| {
                let mut dre = (r.re - k.re).abs();
                dre = dre.min((two_pi - dre).abs());
                (dre.powi(2) + (r.im - k.im).powi(2)).sqrt() < search.dedup_tol
            });
            if !dup {
                roots.push(k);
            }
        }
    }
    if roots.is_empty() {
        if any_converged {
            // converged only outside the strip
            return Ok(Vec::new());
        }
        return Err(Error::NoSaddleFound);
    }
    let mut saddles: Vec<SaddlePoint> = roots
        .into_iter()
        .map(|k| SaddlePoint {
            k,
            omega: disp.eval(k),
            order: saddle_order(disp, k),
        })
        .collect();
    saddles.sort_by(|a, b| {
        b.omega
            .im
            .partial_cmp(&a.omega.im)
            .unwrap()
            .then(a.omega.re.abs().partial_cmp(&b.omega.re.abs()).unwrap())
            .then(a.k.re.abs().partial_cmp(&b.k.re.abs()).unwrap())
    });
    Ok(saddles)
}

/// Detects the order numerically from the derivative magnitudes at k_s.
fn saddle_order(disp: &Dispersion, k: Complex64) -> u32 {
    let lmax = disp.l_max().max(1) as u32;
    for m in 2..=(lmax + 2) {
        let mut scale = 0.0;
        for (l, c) in disp.coefficients() {
            scale += (l.abs() as f64).powi(m as i32) * c.norm();
        }
        if disp.derivative(k, m).norm() > 1e-8 * scale.max(1e-300) {
            return m;
        }
    }
    2
}

/// `max_k Im omega(k)` over real k: dense grid plus Newton polish on
/// `Im omega'(k) = 0`.
pub fn max_im_on_axis(disp: &Dispersion, samples: usize) -> (f64, f64) {
    let n = samples.max(64);
    let dk = 2.0 * std::f64::consts::PI / n as f64;
    let mut best_k = 0.0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..n {
        let k = -std::f64::consts::PI + dk * j as f64;
        let im = disp.eval(Complex64::new(k, 0.0)).im;
        if im > best {
            best = im;
            best_k = k;
        }
    }
    let mut k = best_k;
    for _ in 0..8 {
        let g = disp.group_velocity(Complex64::new(k, 0.0)).im;
        let h = disp.derivative(Complex64::new(k, 0.0), 2).im;
        if h.abs() < 1e-300 {
            break;
        }
        let step = g / h;
        if !step.is_finite() || step.abs() > dk {
            break;
        }
        k -= step;
    }
    let im = disp.eval(Complex64::new(k, 0.0)).im;
    if im > best {
        (k, im)
    } else {
        (best_k, best)
    }
}

/// Classifies the bare continuum: stable when no Bloch mode grows,
/// absolutely unstable when the most critical V = 0 saddle grows, and
/// convectively unstable otherwise.
pub fn classify(disp: &Dispersion) -> Result<RegimeClass> {
    let (_, max_im) = max_im_on_axis(disp, 4096);
    let scale = disp.hopping_weight().max(1e-300);
    let im_tol = IM_TOL_REL * scale;

    let saddles = find_saddle_points(disp, 0.0)?;
    let critical = saddles.first().copied();
    let mut boundary = false;
    for (i, a) in saddles.iter().enumerate() {
        for b in &saddles[i + 1..] {
            if (a.k - b.k).norm() < COALESCE_TOL {
                boundary = true;
            }
        }
    }

    if max_im <= im_tol {
        return Ok(RegimeClass {
            verdict: Verdict::Stable,
            max_im_on_axis: max_im,
            critical_saddle: critical,
            boundary_flag: boundary,
            saddles,
        });
    }

    let verdict = match critical {
        Some(s) if s.omega.im > im_tol => Verdict::Absolute,
        Some(_) => Verdict::Convective,
        None => {
            // unstable but with no finite saddle: the saddles have run off
            // to infinity, the degenerate boundary case
            boundary = true;
            Verdict::Convective
        }
    };
    Ok(RegimeClass {
        verdict,
        max_im_on_axis: max_im,
        critical_saddle: critical,
        boundary_flag: boundary,
        saddles,
    })
}

/// Long-time envelope of the drift integral
/// `int dk F(k) exp(i k V t - i omega(k) t)` along the ray `n = V t`.
#[derive(Debug, Clone, Copy)]
pub struct DriftAsymptote {
    /// Exponential growth rate of the amplitude envelope.
    pub rate: f64,
    /// Algebraic power, `-1/n` for an order-n saddle.
    pub power: f64,
    pub omega_s: Complex64,
    pub k_s: Complex64,
}

/// Steepest-descent asymptote for drift velocity `v`.
///
/// The exact exponential rate is `min over contours Im k = const` of
/// `max_x Im omega(x + i kappa) - v kappa`; the minimizing contour passes
/// through one saddle of `d omega/dk = v`, which is the one reported here.
/// Selecting by that min-max (rather than by the largest `Im omega(k_s)`)
/// keeps saddles the deformed contour never crosses out of the answer.
pub fn drift_asymptote(disp: &Dispersion, v: f64) -> Result<DriftAsymptote> {
    let saddles = find_saddle_points(disp, v)?;
    if saddles.is_empty() {
        return Err(Error::NoSaddleForDrift { velocity: v });
    }
    let search = SaddleSearch::default();
    let (kappa, x, _) = minmax_contour(disp, v, search.k_max, 481, 512);
    let target = Complex64::new(x, kappa);
    let picked = saddles
        .iter()
        .min_by(|a, b| {
            let da = circ_dist(a.k, target);
            let db = circ_dist(b.k, target);
            da.partial_cmp(&db).unwrap()
        })
        .copied()
        .expect("nonempty");
    let rate = picked.omega.im - v * picked.k.im;
    Ok(DriftAsymptote {
        rate,
        power: -1.0 / picked.order as f64,
        omega_s: picked.omega,
        k_s: picked.k,
    })
}

fn circ_dist(a: Complex64, b: Complex64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut dre = (a.re - b.re).abs() % two_pi;
    if dre > std::f64::consts::PI {
        dre = two_pi - dre;
    }
    (dre.powi(2) + (a.im - b.im).powi(2)).sqrt()
}

/// Location of the optimal horizontal contour for the drift integral:
/// minimizes `max_x Im omega(x + i kappa) - v kappa` over kappa.
/// Returns (kappa*, x*, min value).
fn minmax_contour(disp: &Dispersion, v: f64, k_max: f64, n_kappa: usize, n_x: usize) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n_kappa {
        let kappa = -k_max + 2.0 * k_max * i as f64 / (n_kappa - 1) as f64;
        let (x, max_im) = max_im_on_line(disp, kappa, n_x);
        let h = max_im - v * kappa;
        if h < best.0 {
            best = (h, kappa, x);
        }
    }
    // golden-section polish of the outer minimum
    let span = 2.0 * k_max / (n_kappa - 1) as f64;
    let (mut lo, mut hi) = (best.1 - span, best.1 + span);
    let phi = 0.5 * (3.0 - 5f64.sqrt());
    for _ in 0..60 {
        let a = lo + phi * (hi - lo);
        let b = hi - phi * (hi - lo);
        let ha = max_im_on_line(disp, a, n_x).1 - v * a;
        let hb = max_im_on_line(disp, b, n_x).1 - v * b;
        if ha < hb {
            hi = b;
        } else {
            lo = a;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let (x, max_im) = max_im_on_line(disp, kappa, n_x);
    (kappa, x, max_im - v * kappa)
}

fn max_im_on_line(disp: &Dispersion, kappa: f64, n_x: usize) -> (f64, f64) {
    let dk = 2.0 * std::f64::consts::PI / n_x as f64;
    let mut best_x = 0.0;
    let mut best = f64::NEG_INFINITY;
    for j in 0..n_x {
        let x = -std::f64::consts::PI + dk * j as f64;
        let im = disp.eval(Complex64::new(x, kappa)).im;
        if im > best {
            best = im;
            best_x = x;
        }
    }
    let mut x = best_x;
    for _ in 0..6 {
        let k = Complex64::new(x, kappa);
        let g = disp.group_velocity(k).im;
        let h = disp.derivative(k, 2).im;
        if h.abs() < 1e-300 {
            break;
        }
        let step = g / h;
        if !step.is_finite() || step.abs() > dk {
            break;
        }
        x -= step;
    }
    let im = disp.eval(Complex64::new(x, kappa)).im;
    if im > best {
        (x, im)
    } else {
        (best_x, best)
    }
}

/// Growth rate of `|c_{n = V t}(t)|` for this crate's lattice convention,
/// where a wave packet of profile `exp(-i k0 n)` drifts at `-Re omega'(k0)`.
pub fn ray_growth_rate(disp: &Dispersion, v_phys: f64) -> Result<f64> {
    drift_asymptote(disp, -v_phys).map(|d| d.rate)
}

/// Horizontal contour `Im k = kappa` on which the band's mode gain
/// `max_x Im omega(x + i kappa)` is smallest, clamped to `|kappa| <= 3`.
///
/// Spectral-representation integrals of entire dispersions are
/// contour-independent, but on the real axis the amplified modes of an
/// unstable band overwhelm f64 long before the survival amplitude does;
/// integrating on this line keeps them flat (for the asymmetric chain it is
/// the line through the saddles, where the band is effectively Hermitian).
pub fn optimal_bloch_contour(disp: &Dispersion) -> f64 {
    let (_, axis_max) = max_im_on_axis(disp, 2048);
    let (kappa, _, _) = minmax_contour(disp, 0.0, 3.0, 193, 256);
    let (_, shifted_max) = max_im_on_line(disp, kappa, 256);
    if shifted_max < axis_max - 1e-12 {
        kappa
    } else {
        0.0
    }
}

/// Fastest ray along which an unstable continuum still amplifies, used to
/// size truncated lattices so amplified fronts stay contained. Falls back
/// to the group-speed bound for stable bands. Accuracy ~1e-3 in velocity,
/// which the caller pads anyway.
pub fn amplified_cone_speed(disp: &Dispersion) -> f64 {
    let vmax = disp.velocity_weight();
    let (_, max_im) = max_im_on_axis(disp, 2048);
    if max_im <= IM_TOL_REL * disp.hopping_weight().max(1e-300) {
        return vmax;
    }
    let k_max = SaddleSearch::default().k_max;
    // coarse min-max rate along the ray n = v t; saddle matching is not
    // needed here, only the exponent sign
    let rate_at = |v_phys: f64| minmax_contour(disp, -v_phys, k_max, 97, 96).2;
    let mut speed = vmax;
    for sign in [1.0, -1.0] {
        let mut hi = vmax.max(0.5);
        let mut guard = 0;
        while rate_at(sign * hi) > 0.0 && guard < 12 {
            hi *= 2.0;
            guard += 1;
        }
        if guard == 12 {
            speed = speed.max(hi);
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if rate_at(sign * mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        speed = speed.max(hi);
    }
    speed
}
