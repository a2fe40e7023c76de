//! Radar track-before-detect model.
//!
//! Targets follow nearly-constant-velocity motion with a random-walk echo
//! amplitude. The sensor reports one power value per (range, azimuth,
//! Doppler) cell; a target spreads its Swerling-0 echo over nearby cells
//! through a Gaussian-shaped point spread function, and each cell adds
//! circular complex Gaussian noise.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::approx::SeparableLikelihood;
use crate::error::{Error, Result};
use crate::filter::{SetLikelihood, Transition};
use crate::label::{Kinematic, Label, LabeledState};
use crate::math;
use crate::rng::StreamRng;

/// Default PSF threshold defining a target template.
pub const DEFAULT_PSF_THRESHOLD: f64 = 1e-2;

/// Nearly-constant-velocity dynamics with amplitude random walk:
/// `F = diag(F1, F1, 1)`, `Q = diag(q Q1, q Q1, a_ζ T_s)` with
/// `F1 = [[1, T], [0, 1]]` and `Q1 = [[T³/3, T²/2], [T²/2, T]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    pub t_s: f64,
    pub q: f64,
    pub a_zeta: f64,
}

impl DynamicsParams {
    pub fn new(t_s: f64, q: f64, a_zeta: f64) -> Result<Self> {
        if !(t_s > 0.0) || !(q >= 0.0) || !(a_zeta >= 0.0) {
            return Err(Error::InvalidInput("dynamics need T_s > 0 and non-negative noise"));
        }
        Ok(Self { t_s, q, a_zeta })
    }

    pub fn f1(&self) -> [[f64; 2]; 2] {
        [[1.0, self.t_s], [0.0, 1.0]]
    }

    pub fn q1(&self) -> [[f64; 2]; 2] {
        let t = self.t_s;
        [[t * t * t / 3.0, t * t / 2.0], [t * t / 2.0, t]]
    }

    /// The full 5×5 process-noise covariance.
    pub fn covariance(&self) -> [[f64; 5]; 5] {
        let q1 = self.q1();
        let mut c = [[0.0; 5]; 5];
        for axis in [0, 2] {
            for i in 0..2 {
                for j in 0..2 {
                    c[axis + i][axis + j] = self.q * q1[i][j];
                }
            }
        }
        c[4][4] = self.a_zeta * self.t_s;
        c
    }

    /// `F x`.
    pub fn drift(&self, x: &Kinematic) -> Kinematic {
        let t = self.t_s;
        [x[0] + t * x[1], x[1], x[2] + t * x[3], x[3], x[4]]
    }

    /// `x' = F x + v`, `v ~ N(0, Q)`, amplitude clamped at zero.
    pub fn propagate<R: Rng + ?Sized>(&self, state: &LabeledState, rng: &mut R) -> LabeledState {
        LabeledState::new(self.sample_kinematic(&state.kinematic, rng), state.label)
    }

    fn sample_kinematic<R: Rng + ?Sized>(&self, x: &Kinematic, rng: &mut R) -> Kinematic {
        let t = self.t_s;
        let l11 = math::sqrt(t * t * t / 3.0);
        let l21 = t * t / 2.0 / l11;
        let l22 = math::sqrt(t / 4.0);
        let sq = math::sqrt(self.q);
        let mut y = self.drift(x);
        for axis in [0, 2] {
            let n1: f64 = StandardNormal.sample(rng);
            let n2: f64 = StandardNormal.sample(rng);
            y[axis] += sq * l11 * n1;
            y[axis + 1] += sq * (l21 * n1 + l22 * n2);
        }
        let n5: f64 = StandardNormal.sample(rng);
        y[4] = (y[4] + math::sqrt(self.a_zeta * t) * n5).max(0.0);
        y
    }

    /// Log density of the Gaussian kernel `N(x'; F x, Q)` (the amplitude
    /// clamp is ignored).
    pub fn log_density(&self, to: &Kinematic, from: &Kinematic) -> f64 {
        let mean = self.drift(from);
        let two_pi = 2.0 * core::f64::consts::PI;
        let mut total = 0.0;
        let q1 = self.q1();
        let (a, b, d) = (self.q * q1[0][0], self.q * q1[0][1], self.q * q1[1][1]);
        let det = a * d - b * b;
        for axis in [0, 2] {
            let e0 = to[axis] - mean[axis];
            let e1 = to[axis + 1] - mean[axis + 1];
            if det <= 0.0 {
                if e0 != 0.0 || e1 != 0.0 {
                    return f64::NEG_INFINITY;
                }
                continue;
            }
            let m = (d * e0 * e0 - 2.0 * b * e0 * e1 + a * e1 * e1) / det;
            total += -0.5 * m - 0.5 * math::ln(two_pi * two_pi * det);
        }
        let var = self.a_zeta * self.t_s;
        let e = to[4] - mean[4];
        if var <= 0.0 {
            return if e == 0.0 { total } else { f64::NEG_INFINITY };
        }
        total - 0.5 * e * e / var - 0.5 * math::ln(two_pi * var)
    }
}

impl Transition for DynamicsParams {
    fn sample(&self, x: &Kinematic, _: Label, rng: &mut StreamRng) -> Kinematic {
        self.sample_kinematic(x, rng)
    }

    fn log_density(&self, to: &Kinematic, from: &Kinematic, _: Label) -> f64 {
        DynamicsParams::log_density(self, to, from)
    }
}

/// One uniformly spaced cell axis: centroids `start + i · resolution`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub resolution: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(start: f64, resolution: f64, count: usize) -> Result<Self> {
        if !(resolution > 0.0) || count == 0 || !start.is_finite() {
            return Err(Error::InvalidInput("axis needs a positive resolution and at least one cell"));
        }
        Ok(Self {
            start,
            resolution,
            count,
        })
    }

    /// An axis whose centroids cover `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, resolution: f64) -> Result<Self> {
        let count = math::floor((hi - lo) / resolution) as usize + 2;
        Self::new(lo, resolution, count)
    }

    pub fn centroid(&self, i: usize) -> f64 {
        self.start + i as f64 * self.resolution
    }

    pub fn end(&self) -> f64 {
        self.centroid(self.count - 1)
    }

    /// Nearest cell, `None` outside `[start − res/2, end + res/2]`.
    pub fn nearest(&self, v: f64) -> Option<usize> {
        let u = math::floor((v - self.start) / self.resolution + 0.5);
        if u < 0.0 || u >= self.count as f64 || !u.is_finite() {
            None
        } else {
            Some(u as usize)
        }
    }

    /// Cells within `half_width` of `v`, clipped to the axis.
    fn window(&self, v: f64, half_width: f64) -> Range<usize> {
        let lo = ((v - half_width - self.start) / self.resolution).ceil_clamped(self.count);
        let hi = ((v + half_width - self.start) / self.resolution).floor_clamped(self.count);
        if hi < lo as isize {
            0..0
        } else {
            lo..hi as usize + 1
        }
    }
}

trait Clamped {
    fn ceil_clamped(self, n: usize) -> usize;
    fn floor_clamped(self, n: usize) -> isize;
}

impl Clamped for f64 {
    fn ceil_clamped(self, n: usize) -> usize {
        let c = -math::floor(-self);
        if c <= 0.0 {
            0
        } else if c >= n as f64 {
            n
        } else {
            c as usize
        }
    }

    fn floor_clamped(self, n: usize) -> isize {
        let f = math::floor(self);
        if f < 0.0 {
            -1
        } else if f >= n as f64 {
            n as isize - 1
        } else {
            f as isize
        }
    }
}

/// Range (m) × azimuth (rad) × Doppler (m/s) cells and the noise power
/// `σ_w²` of each quadrature component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarGrid {
    pub range: Axis,
    pub azimuth: Axis,
    pub doppler: Axis,
    pub noise_var: f64,
}

impl RadarGrid {
    pub fn new(range: Axis, azimuth: Axis, doppler: Axis, noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0) {
            return Err(Error::InvalidInput("noise variance must be positive"));
        }
        Ok(Self {
            range,
            azimuth,
            doppler,
            noise_var,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.range.count, self.azimuth.count, self.doppler.count]
    }

    pub fn len(&self) -> usize {
        self.range.count * self.azimuth.count * self.doppler.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// C-order flat index.
    pub fn index(&self, r: usize, a: usize, d: usize) -> usize {
        (r * self.azimuth.count + a) * self.doppler.count + d
    }

    pub fn centroid(&self, r: usize, a: usize, d: usize) -> [f64; 3] {
        [self.range.centroid(r), self.azimuth.centroid(a), self.doppler.centroid(d)]
    }
}

/// Received power per cell, C-order over (range, azimuth, Doppler).
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    dims: [usize; 3],
    powers: Vec<f64>,
}

impl RadarFrame {
    pub fn new(dims: [usize; 3], powers: Vec<f64>) -> Result<Self> {
        if powers.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidInput("frame size does not match its dimensions"));
        }
        if powers.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidInput("powers must be non-negative"));
        }
        Ok(Self { dims, powers })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn get(&self, r: usize, a: usize, d: usize) -> f64 {
        self.powers[(r * self.dims[1] + a) * self.dims[2] + d]
    }
}

/// Swerling-0 echo: constant modulus, uniform phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoModel {
    pub a_bar: f64,
}

impl EchoModel {
    pub fn new(a_bar: f64) -> Result<Self> {
        if !(a_bar >= 0.0) {
            return Err(Error::InvalidInput("mean amplitude must be non-negative"));
        }
        Ok(Self { a_bar })
    }
}

/// `Ā = √(2 σ_w² 10^{SNR/10})`.
pub fn amplitude_from_snr(snr_db: f64, sigma_w_sq: f64) -> f64 {
    math::sqrt(2.0 * sigma_w_sq * math::powf(10.0, snr_db / 10.0))
}

/// `10 log10(Ā² / (2 σ_w²))`.
pub fn snr_db(a_bar: f64, sigma_w_sq: f64) -> f64 {
    10.0 * libm::log10(a_bar * a_bar / (2.0 * sigma_w_sq))
}

/// Range, bearing and Doppler `(r, b, d)` of a state.
pub fn measurement(x: &Kinematic) -> Result<[f64; 3]> {
    let r = math::hypot(x[0], x[2]);
    if r == 0.0 {
        return Err(Error::AtOrigin);
    }
    let d = -(x[1] * x[0] + x[3] * x[2]) / r;
    Ok([r, math::atan2(x[2], x[0]), d])
}

#[inline]
fn factor(delta: f64, resolution: f64) -> f64 {
    math::exp(-delta * delta / (2.0 * resolution))
}

/// PSF value at a cell centroid `(r_i, b_i, d_i)`:
/// `exp(−Δr²/2R − Δd²/2D − Δb²/2B)` with the resolutions themselves in the
/// denominators.
pub fn psf(x: &Kinematic, cell: [f64; 3], grid: &RadarGrid) -> Result<f64> {
    let [r, b, d] = measurement(x)?;
    Ok(factor(cell[0] - r, grid.range.resolution)
        * factor(cell[1] - b, grid.azimuth.resolution)
        * factor(cell[2] - d, grid.doppler.resolution))
}

/// Inclusive cell-index box `[lo, hi]` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn overlaps(&self, other: &CellBox) -> bool {
        (0..3).all(|k| self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
    }

    pub fn union(&self, other: &CellBox) -> CellBox {
        let mut out = *self;
        for k in 0..3 {
            out.lo[k] = out.lo[k].min(other.lo[k]);
            out.hi[k] = out.hi[k].max(other.hi[k]);
        }
        out
    }
}

/// The cells a target illuminates with their PSF values.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    /// `(flat cell index, psf)` in increasing index order.
    pub cells: Vec<(usize, f64)>,
    /// Bounding box of the cells; `None` when the template is empty.
    pub bounds: Option<CellBox>,
    pub out_of_coverage: bool,
}

impl Template {
    fn empty(out_of_coverage: bool) -> Self {
        Self {
            cells: Vec::new(),
            bounds: None,
            out_of_coverage,
        }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search_by_key(&cell, |c| c.0).is_ok()
    }
}

/// Cells with `psf ≥ eps`, plus the nearest cell. Empty, and flagged, when
/// the nearest cell lies outside the grid on any axis.
pub fn template(x: &Kinematic, grid: &RadarGrid, eps: f64) -> Result<Template> {
    let Some(shape) = TemplateShape::new(x, grid, eps)? else {
        return Ok(Template::empty(true));
    };
    let mut cells = Vec::with_capacity(shape.max_cells());
    let bounds = shape.visit(grid, |flat, h| cells.push((flat, h)));
    Ok(Template {
        cells,
        bounds: Some(bounds),
        out_of_coverage: false,
    })
}

/// Per-axis cell windows and PSF factors of one target.
struct TemplateShape {
    windows: [Range<usize>; 3],
    factors: Vec<f64>,
    nearest: [usize; 3],
    eps: f64,
}

impl TemplateShape {
    fn new(x: &Kinematic, grid: &RadarGrid, eps: f64) -> Result<Option<Self>> {
        let [r, b, d] = measurement(x)?;
        let nearest = match (grid.range.nearest(r), grid.azimuth.nearest(b), grid.doppler.nearest(d)) {
            (Some(i), Some(j), Some(k)) => [i, j, k],
            _ => return Ok(None),
        };
        let ln_inv = if eps > 0.0 { -math::ln(eps.min(1.0)) } else { f64::INFINITY };
        let axes = [(&grid.range, r), (&grid.azimuth, b), (&grid.doppler, d)];
        let mut windows = [0..0, 0..0, 0..0];
        for (k, (axis, v)) in axes.iter().enumerate() {
            let half = math::sqrt(2.0 * axis.resolution * ln_inv);
            let w = axis.window(*v, half);
            windows[k] = if w.is_empty() {
                nearest[k]..nearest[k] + 1
            } else {
                w.start.min(nearest[k])..w.end.max(nearest[k] + 1)
            };
        }
        let mut factors = Vec::with_capacity(windows.iter().map(|w| w.len()).sum());
        for (k, (axis, v)) in axes.iter().enumerate() {
            // f(i+1) = f(i) · g(i) with g(i) = exp(−δ_i − res/2), g(i+1) = g(i) · exp(−res)
            let Some(first) = windows[k].clone().next() else { continue };
            let delta = axis.centroid(first) - v;
            let mut f = factor(delta, axis.resolution);
            let mut g = math::exp(-delta - 0.5 * axis.resolution);
            let step = math::exp(-axis.resolution);
            if f > 0.0 && g.is_finite() {
                for _ in windows[k].clone() {
                    factors.push(f);
                    f *= g;
                    g *= step;
                }
            } else {
                factors.extend(windows[k].clone().map(|i| factor(axis.centroid(i) - v, axis.resolution)));
            }
        }
        Ok(Some(Self {
            windows,
            factors,
            nearest,
            eps,
        }))
    }

    fn max_cells(&self) -> usize {
        self.windows.iter().map(|w| w.len()).product()
    }

    /// Calls `cell(flat, h)` for every template cell in increasing index
    /// order and returns their bounding box.
    fn visit(&self, grid: &RadarGrid, mut cell: impl FnMut(usize, f64)) -> CellBox {
        let [wr, wa, wd] = &self.windows;
        let (fr, rest) = self.factors.split_at(wr.len());
        let (fa, fd) = rest.split_at(wa.len());
        let near_flat = grid.index(self.nearest[0], self.nearest[1], self.nearest[2]);
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for (ri, fr) in wr.clone().zip(fr) {
            for (ai, fa) in wa.clone().zip(fa) {
                let fra = fr * fa;
                let row = grid.index(ri, ai, 0);
                for (di, fd) in wd.clone().zip(fd) {
                    let h = fra * fd;
                    let flat = row + di;
                    if h >= self.eps || flat == near_flat {
                        cell(flat, h);
                        for (k, idx) in [ri, ai, di].into_iter().enumerate() {
                            lo[k] = lo[k].min(idx);
                            hi[k] = hi[k].max(idx);
                        }
                    }
                }
            }
        }
        CellBox { lo, hi }
    }
}

/// Amplitude used for the noiseless return `ẑ` in the likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amplitude {
    /// The echo model's constant `Ā`, whatever the state's `ζ`.
    Mean(f64),
    /// The state's own amplitude component `ζ`.
    State,
}

impl Amplitude {
    pub fn of(&self, x: &Kinematic) -> f64 {
        match self {
            Amplitude::Mean(a) => *a,
            Amplitude::State => x[4],
        }
    }
}

/// A synthesized frame and the number of targets that fell outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedFrame {
    pub frame: RadarFrame,
    pub out_of_coverage: usize,
}

/// Simulates one frame. Each target contributes `ζ e^{jθ} h` to the cells of
/// its template with one phase `θ ~ U[0, 2π)` per target; every cell adds
/// noise with real and imaginary parts `N(0, σ_w²)`. The target amplitude is
/// the state's `ζ`.
pub fn synthesize_frame<R: Rng + ?Sized>(
    truth: &[LabeledState],
    grid: &RadarGrid,
    eps: f64,
    rng: &mut R,
) -> Result<SynthesizedFrame> {
    let mut re = alloc::vec![0.0; grid.len()];
    let mut im = alloc::vec![0.0; grid.len()];
    let mut out_of_coverage = 0;
    for x in truth {
        let theta = rng.random::<f64>() * 2.0 * core::f64::consts::PI;
        let t = template(&x.kinematic, grid, eps)?;
        if t.out_of_coverage {
            out_of_coverage += 1;
            continue;
        }
        let (s, c) = math::sin_cos(theta);
        let zeta = x.amplitude();
        for (cell, h) in t.cells {
            re[cell] += zeta * h * c;
            im[cell] += zeta * h * s;
        }
    }
    let sd = math::sqrt(grid.noise_var);
    let powers = re
        .iter()
        .zip(&im)
        .map(|(a, b)| {
            let nr: f64 = StandardNormal.sample(rng);
            let ni: f64 = StandardNormal.sample(rng);
            let (x, y) = (a + sd * nr, b + sd * ni);
            x * x + y * y
        })
        .collect();
    Ok(SynthesizedFrame {
        frame: RadarFrame::new(grid.dims(), powers)?,
        out_of_coverage,
    })
}

/// `ln [p(z | signal ẑ) / p(z | noise)]` for one cell:
/// `−ẑ / (2σ²) + ln I0(√(z ẑ) / σ²)`, which at `σ² = 1` is
/// `−ẑ/2 + ln I0(√(z ẑ))`.
pub fn cell_log_likelihood_ratio(z: f64, z_hat: f64, sigma_w_sq: f64) -> f64 {
    -z_hat / (2.0 * sigma_w_sq) + math::ln_bessel_i0(math::sqrt(z * z_hat) / sigma_w_sq)
}

/// Multi-target log-likelihood ratio: the sum of cell ratios over the union
/// of templates, with `ẑ` the squared in-phase sum of the echoes.
pub fn frame_log_likelihood(
    frame: &RadarFrame,
    xs: &[LabeledState],
    grid: &RadarGrid,
    eps: f64,
    amplitude: Amplitude,
) -> Result<f64> {
    if xs.len() == 1 {
        return separable_frame_log_likelihood(frame, &xs[0], grid, eps, amplitude);
    }
    let mut amp: BTreeMap<usize, f64> = BTreeMap::new();
    for x in xs {
        let t = template(&x.kinematic, grid, eps)?;
        let zeta = amplitude.of(&x.kinematic);
        for (cell, h) in t.cells {
            *amp.entry(cell).or_insert(0.0) += zeta * h;
        }
    }
    let p = frame.powers();
    let mut sum = RatioSum::default();
    for (cell, a) in amp {
        sum.add(p[cell], a * a, grid.noise_var);
    }
    Ok(sum.value())
}

/// Per-target log-likelihood ratio over the target's own template,
/// `ẑ = (A h)²`; zero for an out-of-coverage target.
pub fn separable_frame_log_likelihood(
    frame: &RadarFrame,
    x: &LabeledState,
    grid: &RadarGrid,
    eps: f64,
    amplitude: Amplitude,
) -> Result<f64> {
    let t = template(&x.kinematic, grid, eps)?;
    Ok(template_log_likelihood(frame, &t, amplitude.of(&x.kinematic), grid.noise_var))
}

/// Sum of cell log-likelihood ratios with a shared logarithm for the Bessel
/// factors.
#[derive(Debug, Default, Clone, Copy)]
struct RatioSum {
    linear: f64,
    bessel: math::LnProduct,
}

impl RatioSum {
    fn add(&mut self, z: f64, z_hat: f64, sigma_w_sq: f64) {
        let (t, e) = math::bessel_i0_split(math::sqrt(z * z_hat) / sigma_w_sq);
        self.linear += e - z_hat / (2.0 * sigma_w_sq);
        self.bessel.push(t);
    }

    fn value(&self) -> f64 {
        self.linear + self.bessel.value()
    }
}

fn template_log_likelihood(frame: &RadarFrame, t: &Template, zeta: f64, noise_var: f64) -> f64 {
    let p = frame.powers();
    let mut sum = RatioSum::default();
    for (cell, h) in &t.cells {
        let a = zeta * h;
        sum.add(p[*cell], a * a, noise_var);
    }
    sum.value()
}

/// The frame likelihood as seen by the filter.
#[derive(Debug, Clone, Copy)]
pub struct RadarLikelihood<'a> {
    pub frame: &'a RadarFrame,
    pub grid: &'a RadarGrid,
    pub eps: f64,
    pub amplitude: Amplitude,
}

impl<'a> RadarLikelihood<'a> {
    pub fn new(frame: &'a RadarFrame, grid: &'a RadarGrid, eps: f64, amplitude: Amplitude) -> Self {
        Self {
            frame,
            grid,
            eps,
            amplitude,
        }
    }
}

/// One cell of a cached template: index and echo amplitude `A h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedCell {
    pub cell: usize,
    pub amplitude: f64,
}

/// What [`RadarLikelihood`] reports for a state: the template's bounding box
/// and, for single states, the template itself with its log-likelihood.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RadarFootprint {
    pub bounds: Option<CellBox>,
    pub cells: Option<Arc<[CachedCell]>>,
    pub log_likelihood: f64,
}

impl RadarLikelihood<'_> {
    fn cached(&self, x: &LabeledState) -> (f64, RadarFootprint) {
        let shape = match TemplateShape::new(&x.kinematic, self.grid, self.eps) {
            Ok(Some(s)) => s,
            Ok(None) => {
                let empty = RadarFootprint {
                    bounds: None,
                    cells: Some(Arc::from([])),
                    log_likelihood: 0.0,
                };
                return (0.0, empty);
            }
            Err(_) => return (0.0, RadarFootprint::default()),
        };
        let zeta = self.amplitude.of(&x.kinematic);
        let p = self.frame.powers();
        let mut cells = Vec::with_capacity(shape.max_cells());
        let mut sum = RatioSum::default();
        let bounds = shape.visit(self.grid, |cell, h| {
            let a = zeta * h;
            sum.add(p[cell], a * a, self.grid.noise_var);
            cells.push(CachedCell { cell, amplitude: a });
        });
        let ll = sum.value();
        let footprint = RadarFootprint {
            bounds: Some(bounds),
            cells: Some(cells.into()),
            log_likelihood: ll,
        };
        (ll, footprint)
    }

    /// Joint log-likelihood from cached templates: the sum of the single
    /// values, corrected on cells that several targets share.
    fn merged(&self, footprints: &[(&[CachedCell], f64)]) -> f64 {
        let p = self.frame.powers();
        let ratio = |cell: usize, a: f64| cell_log_likelihood_ratio(p[cell], a * a, self.grid.noise_var);
        // (cell, summed amplitude, single ratios already counted if shared)
        let mut acc: Vec<(usize, f64, Option<f64>)> = footprints[0].0.iter().map(|c| (c.cell, c.amplitude, None)).collect();
        let mut next = Vec::new();
        for (t, _) in &footprints[1..] {
            next.clear();
            let (mut i, mut j) = (0, 0);
            while i < acc.len() || j < t.len() {
                match (acc.get(i), t.get(j)) {
                    (Some(&(cell, a, counted)), Some(b)) if cell == b.cell => {
                        let counted = counted.unwrap_or_else(|| ratio(cell, a)) + ratio(cell, b.amplitude);
                        next.push((cell, a + b.amplitude, Some(counted)));
                        i += 1;
                        j += 1;
                    }
                    (Some(a), Some(b)) if a.0 < b.cell => {
                        next.push(*a);
                        i += 1;
                    }
                    (Some(a), None) => {
                        next.push(*a);
                        i += 1;
                    }
                    (_, Some(b)) => {
                        next.push((b.cell, b.amplitude, None));
                        j += 1;
                    }
                    (None, None) => unreachable!(),
                }
            }
            core::mem::swap(&mut acc, &mut next);
        }
        let singles: f64 = footprints.iter().map(|f| f.1).sum();
        let correction: f64 = acc
            .iter()
            .filter_map(|&(cell, a, counted)| counted.map(|c| ratio(cell, a) - c))
            .sum();
        singles + correction
    }
}

impl SetLikelihood for RadarLikelihood<'_> {
    type Footprint = RadarFootprint;

    fn single(&self, x: &LabeledState) -> (f64, RadarFootprint) {
        self.cached(x)
    }

    fn overlaps(&self, a: &RadarFootprint, b: &RadarFootprint) -> bool {
        match (&a.bounds, &b.bounds) {
            (Some(a), Some(b)) => a.overlaps(b),
            _ => false,
        }
    }

    /// Bounds only; the union carries no cells.
    fn union(&self, a: &RadarFootprint, b: &RadarFootprint) -> RadarFootprint {
        let bounds = match (&a.bounds, &b.bounds) {
            (Some(a), Some(b)) => Some(a.union(b)),
            (Some(a), None) | (None, Some(a)) => Some(*a),
            (None, None) => None,
        };
        RadarFootprint {
            bounds,
            cells: None,
            log_likelihood: 0.0,
        }
    }

    fn joint(&self, xs: &[LabeledState]) -> f64 {
        let valid: Vec<LabeledState> = xs.iter().filter(|x| measurement(&x.kinematic).is_ok()).copied().collect();
        frame_log_likelihood(self.frame, &valid, self.grid, self.eps, self.amplitude).unwrap_or(0.0)
    }

    fn joint_with(&self, xs: &[LabeledState], footprints: &[&RadarFootprint]) -> f64 {
        let mut templates = Vec::with_capacity(footprints.len());
        for f in footprints {
            match &f.cells {
                Some(c) if !c.is_empty() => templates.push((&c[..], f.log_likelihood)),
                Some(_) => {}
                None => return self.joint(xs),
            }
        }
        if templates.is_empty() {
            return 0.0;
        }
        self.merged(&templates)
    }
}

impl SeparableLikelihood for RadarLikelihood<'_> {
    fn log_gamma(&self, x: &Kinematic, _: Label) -> f64 {
        match template(x, self.grid, self.eps) {
            Ok(t) => template_log_likelihood(self.frame, &t, self.amplitude.of(x), self.grid.noise_var),
            Err(_) => 0.0,
        }
    }
}
