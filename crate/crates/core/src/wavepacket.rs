//! Interferometer output resolved along the transverse axis `r`.
//!
//! Each arm leaves the interferometer as a Gaussian packet; the two packets
//! sit side by side at ±d/2 and overlap slightly. Symmetric (Löwdin)
//! orthogonalization turns them into an exactly orthonormal, mirror-image
//! pair so that recombination with any phase keeps the norm at 1.
//!
//! Integrals use the trapezoid rule, generalized to arbitrary interval
//! endpoints by integrating the piecewise-linear interpolant of the
//! integrand. A [`WaveFunction`] carries a support (a union of closed
//! intervals) alongside its samples, so projecting onto a detector window
//! cuts the state exactly at the window edges instead of at the nearest
//! grid point.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::PhaseSetting;
use crate::scalar::{re, Real};

/// Off-grid probability above which a packet counts as truncated.
pub const TRUNCATION_MASS: f64 = 1e-6;
/// Packets must fit within this many widths of the grid edge.
pub const FIT_WIDTHS: f64 = 5.0;
/// Quadrature norm tolerance for the `normalized` flag.
pub const NORM_TOL: f64 = 1e-8;

/// [`NORM_TOL`], widened for scalars whose rounding alone exceeds it.
pub fn norm_tol<T: Real>() -> T {
    T::lit(NORM_TOL).max(T::lit(64.0) * T::epsilon())
}

/// Raw overlap above which orthogonalization is refused.
pub const MAX_OVERLAP: f64 = 0.999;

pub const DEFAULT_EXTENT_OVER_SIGMA: f64 = 12.0;
/// 4096 intervals, so the grid center r = 0 is a sample point.
pub const DEFAULT_POINTS: usize = 4097;

/// Best packet separation from [`calibrate`] on the default grid.
pub const DEFAULT_D_OVER_SIGMA: f64 = 0.5 + (6.0 - 0.5) * 2.0 / 31.0;
/// Best detector half-width from [`calibrate`] on the default grid.
pub const DEFAULT_HALFWIDTH_OVER_SIGMA: f64 = 0.1 + (4.0 - 0.1) * 17.0 / 63.0;

/// Contrast the calibration must reach to be accepted.
pub const CALIBRATION_MIN_CONTRAST: f64 = 0.5;
/// Contrast the default configuration is expected to deliver.
pub const TARGET_CONTRAST: f64 = 0.9;

pub const CALIBRATION_D_STEPS: usize = 32;
pub const CALIBRATION_W_STEPS: usize = 64;
pub const CALIBRATION_D_RANGE: (f64, f64) = (0.5, 6.0);
pub const CALIBRATION_W_RANGE: (f64, f64) = (0.1, 4.0);

/// Uniform grid. Sample `i` sits at `center + (i − (n−1)/2)·h`, which makes
/// the grid exactly mirror-symmetric about its center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T: Real> {
    r_min: T,
    r_max: T,
    n_points: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(r_min: T, r_max: T, n_points: usize) -> Result<Self> {
        if !(r_min < r_max) || !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if n_points < 64 {
            return Err(Error::InvalidGrid(format!("need at least 64 points, got {n_points}")));
        }
        Ok(Self { r_min, r_max, n_points })
    }

    /// Symmetric grid `[−extent·σ, extent·σ]`.
    pub fn symmetric(sigma: T, extent_over_sigma: T, n_points: usize) -> Result<Self> {
        Self::new(-sigma * extent_over_sigma, sigma * extent_over_sigma, n_points)
    }

    /// `[−12σ, 12σ]` with 4097 points.
    pub fn default_for(sigma: T) -> Self {
        Self::symmetric(sigma, T::lit(DEFAULT_EXTENT_OVER_SIGMA), DEFAULT_POINTS).expect("default grid")
    }

    /// Same extent, half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        (self.r_max - self.r_min) / T::from_count(self.n_points - 1)
    }

    pub fn center(&self) -> T {
        (self.r_min + self.r_max) * T::half()
    }

    pub fn point(&self, i: usize) -> T {
        let offset = T::from_count(2 * i) - T::from_count(self.n_points - 1);
        self.center() + offset * T::half() * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n_points).map(|i| self.point(i))
    }

    /// First and last sample positions.
    pub fn extent(&self) -> (T, T) {
        (self.point(0), self.point(self.n_points - 1))
    }

    fn cell_of(&self, x: T) -> usize {
        let k = ((x - self.point(0)) / self.spacing()).floor();
        let k = k.to_usize().unwrap_or(0);
        k.min(self.n_points - 2)
    }

    /// Integral over `[a, b]` of the piecewise-linear interpolant of `f`.
    /// Equals the trapezoid rule when both ends are grid points.
    pub fn integrate(&self, f: &[T], a: T, b: T) -> T {
        debug_assert_eq!(f.len(), self.n_points);
        let (lo, hi) = self.extent();
        let a = a.max(lo);
        let b = b.min(hi);
        if !(a < b) {
            return T::zero();
        }
        let h = self.spacing();
        let interp = |k: usize, x: T| {
            let t = (x - self.point(k)) / h;
            f[k] + (f[k + 1] - f[k]) * t
        };
        let ka = self.cell_of(a);
        let kb = self.cell_of(b);
        let half = T::half();
        if ka == kb {
            return (b - a) * (interp(ka, a) + interp(ka, b)) * half;
        }
        let mut sum = (self.point(ka + 1) - a) * (interp(ka, a) + f[ka + 1]) * half;
        for k in (ka + 1)..kb {
            sum = sum + h * (f[k] + f[k + 1]) * half;
        }
        sum + (b - self.point(kb)) * (f[kb] + interp(kb, b)) * half
    }

    /// Whether `[a, b]` lies within the grid (with a relative slack of 1e-12).
    pub fn contains_interval(&self, a: T, b: T) -> bool {
        let slack = (self.r_max - self.r_min) * T::lit(1e-12);
        a >= self.r_min - slack && b <= self.r_max + slack
    }
}

/// Closed interval `[a, b]` on the `r`-axis, `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorWindow<T: Real> {
    a: T,
    b: T,
}

impl<T: Real> DetectorWindow<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Window {
                a: a.as_f64(),
                b: b.as_f64(),
            });
        }
        Ok(Self { a, b })
    }

    /// `[center − half, center + half]`.
    pub fn centered(center: T, half_width: T) -> Result<Self> {
        Self::new(center - half_width, center + half_width)
    }

    /// Whole extent of `grid`.
    pub fn full(grid: &Grid<T>) -> Self {
        Self {
            a: grid.r_min,
            b: grid.r_max,
        }
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn half_width(&self) -> T {
        (self.b - self.a) * T::half()
    }

    pub fn check_within(&self, grid: &Grid<T>) -> Result<()> {
        if grid.contains_interval(self.a, self.b) {
            Ok(())
        } else {
            Err(Error::Window {
                a: self.a.as_f64(),
                b: self.b.as_f64(),
            })
        }
    }

    /// Parts of the grid to the left and right of the window (either may be
    /// missing when the window touches a grid edge).
    pub fn complement(&self, grid: &Grid<T>) -> Vec<Self> {
        let mut out = Vec::new();
        if grid.r_min < self.a {
            out.push(Self {
                a: grid.r_min,
                b: self.a,
            });
        }
        if self.b < grid.r_max {
            out.push(Self {
                a: self.b,
                b: grid.r_max,
            });
        }
        out
    }

    /// Whether the two windows share more than an endpoint.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.a.max(other.a) < self.b.min(other.b)
    }
}

/// Sorted, merged list of intervals.
pub(crate) fn normalize_intervals<T: Real>(mut v: Vec<(T, T)>) -> Vec<(T, T)> {
    v.retain(|(a, b)| a < b);
    v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

pub(crate) fn intersect_intervals<T: Real>(x: &[(T, T)], y: &[(T, T)]) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Complex amplitude sampled on a grid, restricted to a support.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction<T: Real> {
    grid: Grid<T>,
    samples: Vec<Complex<T>>,
    support: Vec<(T, T)>,
    normalized: bool,
}

impl<T: Real> WaveFunction<T> {
    /// Samples over the whole grid.
    pub fn new(grid: Grid<T>, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} samples for a {}-point grid",
                samples.len(),
                grid.len()
            )));
        }
        Ok(Self::with_support(grid, samples, vec![(grid.r_min, grid.r_max)]))
    }

    fn with_support(grid: Grid<T>, samples: Vec<Complex<T>>, support: Vec<(T, T)>) -> Self {
        let mut w = Self {
            grid,
            samples,
            support,
            normalized: false,
        };
        w.normalized = (w.norm_sqr() - T::one()).abs() <= norm_tol();
        w
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    /// Closed intervals on which the function lives.
    pub fn support(&self) -> &[(T, T)] {
        &self.support
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    fn in_support(&self, r: T) -> bool {
        self.support.iter().any(|(a, b)| *a <= r && r <= *b)
    }

    /// |ψ(r_i)|² per grid point, zero outside the support.
    pub fn density(&self) -> Vec<T> {
        self.grid
            .points()
            .zip(&self.samples)
            .map(|(r, a)| if self.in_support(r) { a.norm_sqr() } else { T::zero() })
            .collect()
    }

    /// Linear interpolation of the amplitude at `r`; zero off-support.
    pub fn value_at(&self, r: T) -> Complex<T> {
        let (lo, hi) = self.grid.extent();
        if r < lo || r > hi || !self.in_support(r) {
            return re(T::zero());
        }
        let k = self.grid.cell_of(r);
        let t = (r - self.grid.point(k)) / self.grid.spacing();
        self.samples[k] + (self.samples[k + 1] - self.samples[k]) * t
    }

    fn integrate_over(&self, f: &[T], support: &[(T, T)]) -> T {
        support.iter().map(|(a, b)| self.grid.integrate(f, *a, *b)).sum()
    }

    pub fn norm_sqr(&self) -> T {
        let d: Vec<T> = self.samples.iter().map(|a| a.norm_sqr()).collect();
        self.integrate_over(&d, &self.support)
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// ⟨self|other⟩ by quadrature over the common support.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.grid != other.grid {
            return Err(Error::Domain("wave functions live on different grids".into()));
        }
        let prod: Vec<Complex<T>> = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .collect();
        let re_part: Vec<T> = prod.iter().map(|z| z.re).collect();
        let im_part: Vec<T> = prod.iter().map(|z| z.im).collect();
        let common = intersect_intervals(&self.support, &other.support);
        Ok(Complex::new(
            self.integrate_over(&re_part, &common),
            self.integrate_over(&im_part, &common),
        ))
    }

    pub fn scale(&self, k: Complex<T>) -> Self {
        Self::with_support(
            self.grid,
            self.samples.iter().map(|a| a * k).collect(),
            self.support.clone(),
        )
    }

    /// `ca·a + cb·b`; the support is the union of both supports.
    pub fn superpose(a: &Self, b: &Self, ca: Complex<T>, cb: Complex<T>) -> Result<Self> {
        if a.grid != b.grid {
            return Err(Error::Domain("wave functions live on different grids".into()));
        }
        if a.support != b.support {
            // A sample outside one operand's support must not leak in.
            let mut support = a.support.clone();
            support.extend(b.support.iter().cloned());
            let support = normalize_intervals(support);
            let samples = a
                .grid
                .points()
                .enumerate()
                .map(|(i, r)| {
                    let x = if a.in_support(r) { a.samples[i] } else { re(T::zero()) };
                    let y = if b.in_support(r) { b.samples[i] } else { re(T::zero()) };
                    ca * x + cb * y
                })
                .collect();
            return Ok(Self::with_support(a.grid, samples, support));
        }
        let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| ca * x + cb * y).collect();
        Ok(Self::with_support(a.grid, samples, a.support.clone()))
    }

    /// Restriction to the union of `windows` (unnormalized P|ψ⟩).
    pub fn project(&self, windows: &[DetectorWindow<T>]) -> Result<Self> {
        for w in windows {
            w.check_within(&self.grid)?;
        }
        let region = normalize_intervals(windows.iter().map(|w| (w.a, w.b)).collect());
        let support = intersect_intervals(&self.support, &region);
        Ok(Self::with_support(self.grid, self.samples.clone(), support))
    }

    /// Mirror image r → 2c − r about the grid center.
    pub fn mirrored(&self) -> Self {
        let c2 = self.grid.center() * T::two();
        let mut support: Vec<(T, T)> = self.support.iter().map(|(a, b)| (c2 - *b, c2 - *a)).collect();
        support.reverse();
        let samples = self.samples.iter().rev().cloned().collect();
        Self::with_support(self.grid, samples, support)
    }
}

/// Probability mass of a normal density with the given center and width
/// (standard deviation of |ψ|²) falling outside `[lo, hi]`.
fn gaussian_tail_mass<T: Real>(center: T, sigma: T, lo: T, hi: T) -> T {
    let s2 = sigma * T::SQRT_2();
    T::half() * (((center - lo) / s2).erfc() + ((hi - center) / s2).erfc())
}

/// Real Gaussian packet exp(−(r−c)²/(4σ²)), normalized by quadrature.
/// `σ` is the standard deviation of the density |ψ|².
pub fn gaussian<T: Real>(grid: &Grid<T>, center: T, sigma: T) -> Result<WaveFunction<T>> {
    if !(sigma > T::zero()) {
        return Err(Error::Parameter(format!("packet width must be positive, got {sigma}")));
    }
    let reach = sigma * T::lit(FIT_WIDTHS);
    let mass = gaussian_tail_mass(center, sigma, grid.r_min, grid.r_max);
    if center - reach < grid.r_min || center + reach > grid.r_max || mass > T::lit(TRUNCATION_MASS) {
        return Err(Error::Truncated {
            mass: mass.as_f64(),
            r_min: grid.r_min.as_f64(),
            r_max: grid.r_max.as_f64(),
        });
    }
    let four_s2 = T::lit(4.0) * sigma * sigma;
    let raw: Vec<Complex<T>> = grid
        .points()
        .map(|r| {
            let x = r - center;
            re((-(x * x) / four_s2).exp())
        })
        .collect();
    let w = WaveFunction::new(*grid, raw)?;
    let n = w.norm();
    Ok(w.scale(re(n.recip())))
}

/// Orthonormal mirror-image packets for the upper and lower arms.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketPair<T: Real> {
    upper: WaveFunction<T>,
    lower: WaveFunction<T>,
    raw_upper: WaveFunction<T>,
    raw_lower: WaveFunction<T>,
    separation: T,
    sigma: T,
    raw_overlap: T,
}

impl<T: Real> PacketPair<T> {
    pub fn upper(&self) -> &WaveFunction<T> {
        &self.upper
    }

    pub fn lower(&self) -> &WaveFunction<T> {
        &self.lower
    }

    /// Normalized Gaussians before orthogonalization.
    pub fn raw(&self) -> (&WaveFunction<T>, &WaveFunction<T>) {
        (&self.raw_upper, &self.raw_lower)
    }

    pub fn separation(&self) -> T {
        self.separation
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn grid(&self) -> &Grid<T> {
        self.upper.grid()
    }

    /// ⟨g₊|g₋⟩ of the raw Gaussians.
    pub fn raw_overlap(&self) -> T {
        self.raw_overlap
    }
}

/// Löwdin-orthogonalized Gaussians centered at grid center ± d/2.
///
/// With s = ⟨g₊|g₋⟩ and S the 2×2 overlap matrix, the pair is
/// (χ_u, χ_ℓ) = (g₊, g₋)·S^{-1/2}, i.e. χ_u = α g₊ + β g₋ and
/// χ_ℓ = α g₋ + β g₊ with α, β = ((1+s)^{-1/2} ± (1−s)^{-1/2})/2.
pub fn orthogonal_pair<T: Real>(grid: &Grid<T>, d: T, sigma: T) -> Result<PacketPair<T>> {
    if !(d > T::zero()) {
        return Err(Error::Parameter(format!("separation must be positive, got {d}")));
    }
    let g_up = gaussian(grid, grid.center() + d * T::half(), sigma)?;
    let g_lo = g_up.mirrored();
    // the mirror check in `gaussian` is one-sided, so repeat it for g₋
    gaussian(grid, grid.center() - d * T::half(), sigma)?;
    let s = g_up.inner(&g_lo)?.re;
    if s > T::lit(MAX_OVERLAP) {
        return Err(Error::Conditioning { overlap: s.as_f64() });
    }
    let p = (T::one() + s).sqrt().recip();
    let q = (T::one() - s).sqrt().recip();
    let alpha = re((p + q) * T::half());
    let beta = re((p - q) * T::half());
    let upper = WaveFunction::superpose(&g_up, &g_lo, alpha, beta)?;
    let lower = upper.mirrored();
    Ok(PacketPair {
        upper,
        lower,
        raw_upper: g_up,
        raw_lower: g_lo,
        separation: d,
        sigma,
        raw_overlap: s,
    })
}

/// (χ_u + e^{iφ} χ_ℓ)/√2.
pub fn recombine<T: Real>(pair: &PacketPair<T>, phi: PhaseSetting<T>) -> WaveFunction<T> {
    let k = T::frac_1_sqrt_2();
    WaveFunction::superpose(&pair.upper, &pair.lower, re(k), phi.unit() * k).expect("pair members share a grid")
}

/// Same recombination applied to the raw, overlapping Gaussians. Its norm is
/// √(1 + s·cos φ): the unitarity violation equals the neglected overlap.
pub fn recombine_raw<T: Real>(pair: &PacketPair<T>, phi: PhaseSetting<T>) -> WaveFunction<T> {
    let k = T::frac_1_sqrt_2();
    WaveFunction::superpose(&pair.raw_upper, &pair.raw_lower, re(k), phi.unit() * k).expect("pair members share a grid")
}

/// ∫_w |ψ|² restricted to the support of `psi`.
pub fn window_probability<T: Real>(psi: &WaveFunction<T>, w: &DetectorWindow<T>) -> Result<T> {
    Ok(psi.project(std::slice::from_ref(w))?.norm_sqr())
}

/// Outcome of the calibration scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub d_over_sigma: f64,
    pub window_halfwidth_over_sigma: f64,
    pub contrast: f64,
}

/// P_in for constructive and destructive recombination with a window of
/// half-width `half` centered on the grid.
pub fn window_response<T: Real>(pair: &PacketPair<T>, half: T) -> Result<(T, T)> {
    let w = DetectorWindow::centered(pair.grid().center(), half)?;
    let p0 = window_probability(&recombine(pair, PhaseSetting::zero()), &w)?;
    let pp = window_probability(&recombine(pair, PhaseSetting::pi()), &w)?;
    Ok((p0, pp))
}

/// min(P_in(0), 1 − P_in(π)).
pub fn contrast<T: Real>(pair: &PacketPair<T>, half: T) -> Result<T> {
    let (p0, pp) = window_response(pair, half)?;
    Ok(p0.min(T::one() - pp))
}

fn linspace(range: (f64, f64), steps: usize, k: usize) -> f64 {
    range.0 + (range.1 - range.0) * k as f64 / (steps - 1) as f64
}

/// Exhaustive scan over packet separation and centered window half-width
/// maximizing [`contrast`]. Ties go to the smaller (d, half-width) pair.
pub fn calibrate<T: Real>(grid: &Grid<T>, sigma: T) -> Result<Calibration> {
    let rows: Vec<Result<(usize, usize, T)>> = (0..CALIBRATION_D_STEPS)
        .into_par_iter()
        .map(|i| {
            let d = T::lit(linspace(CALIBRATION_D_RANGE, CALIBRATION_D_STEPS, i)) * sigma;
            let pair = orthogonal_pair(grid, d, sigma)?;
            let mut best: Option<(usize, usize, T)> = None;
            for j in 0..CALIBRATION_W_STEPS {
                let half = T::lit(linspace(CALIBRATION_W_RANGE, CALIBRATION_W_STEPS, j)) * sigma;
                let c = contrast(&pair, half)?;
                if best.is_none_or(|b| c > b.2) {
                    best = Some((i, j, c));
                }
            }
            Ok(best.expect("nonempty scan"))
        })
        .collect();
    let mut best: Option<(usize, usize, T)> = None;
    for row in rows {
        let row = row?;
        if best.is_none_or(|b| row.2 > b.2) {
            best = Some(row);
        }
    }
    let (i, j, c) = best.expect("nonempty scan");
    if c < T::lit(CALIBRATION_MIN_CONTRAST) {
        return Err(Error::Calibration {
            best: c.as_f64(),
            threshold: CALIBRATION_MIN_CONTRAST,
        });
    }
    Ok(Calibration {
        d_over_sigma: linspace(CALIBRATION_D_RANGE, CALIBRATION_D_STEPS, i),
        window_halfwidth_over_sigma: linspace(CALIBRATION_W_RANGE, CALIBRATION_W_STEPS, j),
        contrast: c.as_f64(),
    })
}

/// Packet pair and detector window for the frozen defaults at width σ.
pub fn default_setup<T: Real>(sigma: T) -> Result<(PacketPair<T>, DetectorWindow<T>)> {
    let grid = Grid::default_for(sigma);
    let pair = orthogonal_pair(&grid, T::lit(DEFAULT_D_OVER_SIGMA) * sigma, sigma)?;
    let w = DetectorWindow::centered(grid.center(), T::lit(DEFAULT_HALFWIDTH_OVER_SIGMA) * sigma)?;
    Ok((pair, w))
}
