#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::grid::Grid;
use super::kernel::CoherenceKernel;
use crate::model::{DetectionEvent, Shot, Statistics};
use crate::{Error, Result};

/// Occupations may exceed [0, 1] by this much before the fermion sampler
/// rejects the kernel.
const OCCUPATION_TOLERANCE: f64 = 1e-9;

/// Proposal budget of the determinantal sampler before it gives up.
const MAX_PROPOSALS: u64 = 1 << 32;

/// An ideal (pre-detector) detection: transverse position and arrival time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// The detections of one source realization.
#[derive(Clone, Debug, PartialEq)]
pub struct EventSet {
    pub statistics: Statistics,
    pub points: Vec<EventPoint>,
}

impl EventSet {
    pub fn empty(statistics: Statistics) -> Self {
        EventSet { statistics, points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_shot(self, shot_id: u64) -> Shot {
        let events = self
            .points
            .into_iter()
            .map(|p| DetectionEvent { shot_id, x: p.x, y: p.y, t: p.t })
            .collect();
        Shot::new(shot_id, Some(self.statistics), events)
    }

    pub fn from_shot(shot: &Shot, statistics: Statistics) -> Self {
        EventSet {
            statistics: shot.source_tag.unwrap_or(statistics),
            points: shot.events.iter().map(|e| EventPoint { x: e.x, y: e.y, t: e.t }).collect(),
        }
    }
}

fn circular_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if !(mean > 0.0) {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as usize,
        Err(_) => 0,
    }
}

fn check_mean(mean_count: f64) -> Result<()> {
    if mean_count >= 0.0 && mean_count.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("mean count must be finite and ≥ 0, got {mean_count}")))
    }
}

/// Places a detection uniformly inside grid cell `flat`.
fn jittered_point<R: Rng + ?Sized>(grid: &Grid, flat: usize, rng: &mut R) -> EventPoint {
    let idx = grid.unravel(flat);
    let mut p = [0.0; 3];
    for (d, axis) in grid.axes().iter().enumerate() {
        let u: f64 = rng.random();
        p[d] = axis.lower_edge(idx[d]) + u * axis.pitch;
    }
    EventPoint { x: p[0], y: p[1], t: grid.clock.time(p[2]) }
}

/// `count` independent cells drawn from `weights` (need not be normalized).
fn draw_points<R: Rng + ?Sized>(
    grid: &Grid,
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<EventPoint>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let index = WeightedIndex::new(weights)
        .map_err(|e| Error::InvalidArgument(format!("bad sampling density: {e}")))?;
    Ok((0..count)
        .map(|_| {
            let cell = index.sample(rng);
            jittered_point(grid, cell, rng)
        })
        .collect())
}

/// `out[pre, o, post] = Σ_k mat[o, k] · t[pre, k, post]` for the `axis`-th
/// index of a row-major tensor. `mat` is `n_out × stride` row-major and only
/// its first `shape[axis]` columns are used.
fn contract_axis(
    t: &[Complex64],
    shape: &[usize],
    axis: usize,
    mat: &[Complex64],
    stride: usize,
    n_out: usize,
) -> Vec<Complex64> {
    let k_in = shape[axis];
    let pre: usize = shape[..axis].iter().product();
    let post: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); pre * n_out * post];
    for p in 0..pre {
        for o in 0..n_out {
            let row = &mat[o * stride..o * stride + k_in];
            let dst = &mut out[(p * n_out + o) * post..(p * n_out + o + 1) * post];
            for (k, &m) in row.iter().enumerate() {
                let src = &t[(p * k_in + k) * post..(p * k_in + k + 1) * post];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += m * s;
                }
            }
        }
    }
    out
}

/// Draws one realization of the chaotic field `E = Σ_k √λ_k a_k φ_k` with
/// independent circular standard normal `a_k`, so that `⟨E E†⟩ = C`.
///
/// The result is indexed by flat grid point.
pub fn sample_chaotic_field<R: Rng + ?Sized>(kernel: &CoherenceKernel, rng: &mut R) -> Vec<Complex64> {
    let mut tensor: Vec<Complex64> = kernel
        .product_modes()
        .iter()
        .map(|m| circular_normal(rng) * m.eigenvalue.max(0.0).sqrt())
        .collect();
    let mut shape: Vec<usize> = kernel.axes().iter().map(|a| a.kept()).collect();
    for (d, axis) in kernel.axes().iter().enumerate() {
        tensor = contract_axis(&tensor, &shape, d, axis.mode_matrix(), axis.len(), axis.len());
        shape[d] = axis.len();
    }
    tensor
}

/// Permanental (boson) sample: a chaotic field is drawn, then a Poisson
/// number of detections is placed independently according to its intensity.
/// The expected count conditional on the field is
/// `mean_count · Σ|E|² / tr C`.
pub fn sample_boson_events<R: Rng + ?Sized>(
    kernel: &CoherenceKernel,
    mean_count: f64,
    rng: &mut R,
) -> Result<EventSet> {
    check_mean(mean_count)?;
    let field = sample_chaotic_field(kernel, rng);
    let intensity: Vec<f64> = field.iter().map(|e| e.norm_sqr()).collect();
    let total: f64 = intensity.iter().sum();
    let expected = kernel.trace();
    if !(total > 0.0) || !(expected > 0.0) {
        return Ok(EventSet::empty(Statistics::Boson));
    }
    let count = poisson_count(mean_count * total / expected, rng);
    let points = draw_points(kernel.grid(), &intensity, count, rng)?;
    Ok(EventSet { statistics: Statistics::Boson, points })
}

/// Determinantal (fermion) sample of the kernel.
///
/// Each eigenmode is occupied independently with probability equal to its
/// eigenvalue; the occupied modes then define a projection process sampled
/// point by point (see [`sample_projection_events`]).
pub fn sample_fermion_events<R: Rng + ?Sized>(kernel: &CoherenceKernel, rng: &mut R) -> Result<EventSet> {
    let modes = kernel.product_modes();
    if let Some(bad) = modes
        .iter()
        .map(|m| m.eigenvalue)
        .find(|&l| !(-OCCUPATION_TOLERANCE..=1.0 + OCCUPATION_TOLERANCE).contains(&l))
    {
        return Err(Error::UnphysicalOccupation(bad));
    }
    let mut occupied = Vec::new();
    for m in &modes {
        let u: f64 = rng.random();
        if u < m.eigenvalue {
            occupied.push(m.indices);
        }
    }
    sample_projection_events(kernel, &occupied, rng)
}

/// Samples the projection determinantal process spanned by the given
/// product modes: exactly `modes.len()` distinct grid cells.
///
/// Points are drawn sequentially. The next cell has probability proportional
/// to the squared residual of its mode-row after projecting out the rows of
/// the cells already chosen (Gram–Schmidt deflation). Proposals come from
/// the marginal `‖row‖² / k`, an equal mixture of the product modes that is
/// sampled axis by axis, and are accepted with probability
/// `residual / ‖row‖²`. Step `s` therefore needs `k / (k − s)` proposals on
/// average and the cost is independent of the grid size.
pub fn sample_projection_events<R: Rng + ?Sized>(
    kernel: &CoherenceKernel,
    modes: &[[usize; 3]],
    rng: &mut R,
) -> Result<EventSet> {
    let k = modes.len();
    if k == 0 {
        return Ok(EventSet::empty(Statistics::Fermion));
    }
    let grid = kernel.grid();
    let axes = kernel.axes();
    let n_points = grid.len();
    if k > n_points {
        return Err(Error::InvalidArgument(format!("{k} modes on a grid of {n_points} cells")));
    }
    // cumulative |φ|² of every 1D mode in use, per axis
    let mut tables: Vec<Vec<Option<Vec<f64>>>> = axes.iter().map(|a| vec![None; a.kept()]).collect();
    for m in modes {
        for (d, a) in axes.iter().enumerate() {
            tables[d][m[d]].get_or_insert_with(|| {
                let mut acc = 0.0;
                (0..a.len())
                    .map(|i| {
                        acc += a.mode_value(i, m[d]).norm_sqr();
                        acc
                    })
                    .collect()
            });
        }
    }

    // basis and row are kept as split real/imaginary parts so the inner
    // products vectorize
    let mut basis_re: Vec<f64> = Vec::with_capacity(k * k);
    let mut basis_im: Vec<f64> = Vec::with_capacity(k * k);
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut row_re = vec![0.0; k];
    let mut row_im = vec![0.0; k];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k];
    let mut proposals = 0u64;

    while chosen.len() < k {
        proposals += 1;
        if proposals > MAX_PROPOSALS {
            return Err(Error::SamplerStalled(proposals));
        }
        let m = modes[rng.random_range(0..k)];
        let mut idx = [0usize; 3];
        for d in 0..axes.len() {
            let cdf = tables[d][m[d]].as_deref().unwrap_or(&[]);
            let total = cdf.last().copied().unwrap_or(0.0);
            let target = rng.random::<f64>() * total;
            idx[d] = cdf.partition_point(|&c| c <= target).min(cdf.len().saturating_sub(1));
        }
        let cell = grid.ravel(idx);
        let u: f64 = rng.random();
        let mut norm = 0.0;
        for (j, m) in modes.iter().enumerate() {
            let v = axes
                .iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (d, a)| acc * a.mode_value(idx[d], m[d]));
            norm += v.norm_sqr();
            row_re[j] = v.re;
            row_im[j] = v.im;
        }
        let s = chosen.len();
        let threshold = u * norm;
        let mut residual = norm;
        for t in 0..s {
            let r = t * k..(t + 1) * k;
            let c = conj_dot(&basis_re[r.clone()], &basis_im[r], &row_re, &row_im);
            coeffs[t] = c;
            residual -= c.norm_sqr();
            // the residual only shrinks, so rejection can be decided early
            if threshold >= residual {
                break;
            }
        }
        if threshold >= residual || chosen.contains(&cell) {
            continue;
        }
        let mut w_re = row_re.clone();
        let mut w_im = row_im.clone();
        for t in 0..s {
            let r = t * k..(t + 1) * k;
            subtract_scaled(&mut w_re, &mut w_im, coeffs[t], &basis_re[r.clone()], &basis_im[r]);
        }
        // second pass keeps the basis orthonormal to rounding
        for t in 0..s {
            let r = t * k..(t + 1) * k;
            let c = conj_dot(&basis_re[r.clone()], &basis_im[r.clone()], &w_re, &w_im);
            subtract_scaled(&mut w_re, &mut w_im, c, &basis_re[r.clone()], &basis_im[r]);
        }
        let wn = conj_dot(&w_re, &w_im, &w_re, &w_im).re.sqrt();
        if !(wn > 0.0) {
            continue;
        }
        basis_re.extend(w_re.iter().map(|x| x / wn));
        basis_im.extend(w_im.iter().map(|x| x / wn));
        chosen.push(cell);
    }

    let points = chosen.into_iter().map(|c| jittered_point(grid, c, rng)).collect();
    Ok(EventSet { statistics: Statistics::Fermion, points })
}

const LANES: usize = 4;

/// `Σ conj(a)·b` over split complex vectors, accumulated in fixed lanes.
fn conj_dot(a_re: &[f64], a_im: &[f64], b_re: &[f64], b_im: &[f64]) -> Complex64 {
    let mut re = [0.0; LANES];
    let mut im = [0.0; LANES];
    let chunks = a_re
        .chunks_exact(LANES)
        .zip(a_im.chunks_exact(LANES))
        .zip(b_re.chunks_exact(LANES).zip(b_im.chunks_exact(LANES)));
    for ((ar, ai), (br, bi)) in chunks {
        for l in 0..LANES {
            re[l] += ar[l] * br[l] + ai[l] * bi[l];
            im[l] += ar[l] * bi[l] - ai[l] * br[l];
        }
    }
    let body = a_re.len() - a_re.len() % LANES;
    for i in body..a_re.len() {
        re[0] += a_re[i] * b_re[i] + a_im[i] * b_im[i];
        im[0] += a_re[i] * b_im[i] - a_im[i] * b_re[i];
    }
    Complex64::new((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

/// `w -= c·e` over split complex vectors.
fn subtract_scaled(w_re: &mut [f64], w_im: &mut [f64], c: Complex64, e_re: &[f64], e_im: &[f64]) {
    for (((wr, wi), er), ei) in w_re.iter_mut().zip(w_im.iter_mut()).zip(e_re).zip(e_im) {
        *wr -= c.re * er - c.im * ei;
        *wi -= c.re * ei + c.im * er;
    }
}

/// Coherent (single-mode) sample: Poisson count, detections independent
/// with density `|mode|²`.
pub fn sample_coherent_events<R: Rng + ?Sized>(
    grid: &Grid,
    mode: &[Complex64],
    mean_count: f64,
    rng: &mut R,
) -> Result<EventSet> {
    check_mean(mean_count)?;
    if mode.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!("mode has {} values, grid {}", mode.len(), grid.len())));
    }
    let density: Vec<f64> = mode.iter().map(|m| m.norm_sqr()).collect();
    let count = poisson_count(mean_count, rng);
    let points = draw_points(grid, &density, count, rng)?;
    Ok(EventSet { statistics: Statistics::Coherent, points })
}

/// Independent particles: Poisson count, detections i.i.d. from `density`.
pub fn sample_distinguishable_events<R: Rng + ?Sized>(
    grid: &Grid,
    density: &[f64],
    mean_count: f64,
    rng: &mut R,
) -> Result<EventSet> {
    check_mean(mean_count)?;
    if density.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "density has {} values, grid {}",
            density.len(),
            grid.len()
        )));
    }
    let count = poisson_count(mean_count, rng);
    let points = draw_points(grid, density, count, rng)?;
    Ok(EventSet { statistics: Statistics::Distinguishable, points })
}

/// Samples one shot with the given statistics from a source kernel.
///
/// Coherent sources use the dominant kernel mode; distinguishable sources
/// use the kernel's mean density. Fermion counts are set by the kernel
/// occupations, so `mean_count` is ignored for them.
pub fn sample_events<R: Rng + ?Sized>(
    kernel: &CoherenceKernel,
    statistics: Statistics,
    mean_count: f64,
    rng: &mut R,
) -> Result<EventSet> {
    match statistics {
        Statistics::Boson => sample_boson_events(kernel, mean_count, rng),
        Statistics::Fermion => sample_fermion_events(kernel, rng),
        Statistics::Coherent => {
            sample_coherent_events(kernel.grid(), &kernel.dominant_mode(), mean_count, rng)
        }
        Statistics::Distinguishable => {
            let density: Vec<f64> = (0..kernel.len()).map(|i| kernel.mean_density(i)).collect();
            sample_distinguishable_events(kernel.grid(), &density, mean_count, rng)
        }
    }
}
