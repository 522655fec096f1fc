//! Closed-form predictions used to check the Monte Carlo.
//!
//! Three unrelated quantities share the letter g in the literature; here
//! they are kept apart as `phase_cell_count` (cells in phase space),
//! `contrast_reduction` (the detector's loss of contrast) and
//! [`constants::G_EARTH`](crate::model::constants::G_EARTH).

#[allow(unused_imports)]
use num_traits::Float;
use core::ops::Range;

use num_complex::Complex64;

use crate::model::constants::PLANCK;
use crate::model::Statistics;
use crate::sources::CoherenceKernel;
use crate::{Error, Result};

/// Amplitudes for two source points `a`, `b` to reach detectors `1`, `2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplitudePair {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
}

impl AmplitudePair {
    pub fn new(a1: Complex64, a2: Complex64, b1: Complex64, b2: Complex64) -> Self {
        AmplitudePair { a1, a2, b1, b2 }
    }

    pub fn uniform(c: Complex64) -> Self {
        AmplitudePair { a1: c, a2: c, b1: c, b2: c }
    }
}

/// Variance of the number of particles found in a volume holding `g`
/// phase-space cells. Coherent and distinguishable sources give shot
/// noise.
pub fn einstein_variance(mean_n: f64, g: f64, statistics: Statistics) -> Result<f64> {
    if !(mean_n >= 0.0) || !(g > 0.0) {
        return Err(Error::InvalidArgument("need mean_n >= 0 and g > 0".into()));
    }
    let wave = mean_n * mean_n / g;
    match statistics {
        Statistics::Boson => Ok(mean_n + wave),
        Statistics::Fermion => {
            if mean_n / g > 1.0 {
                return Err(Error::UnphysicalOccupation(mean_n / g));
            }
            Ok(mean_n - wave)
        }
        Statistics::Coherent | Statistics::Distinguishable => Ok(mean_n),
    }
}

/// Relative shot-noise fluctuation `√N / N`.
pub fn shot_noise_fraction(mean_n: f64) -> f64 {
    1.0 / mean_n.sqrt()
}

/// Number of phase-space cells `(Δx Δp / h)³`.
pub fn phase_cell_count(dx: f64, dp: f64) -> Result<f64> {
    if !(dx > 0.0) || !(dp > 0.0) {
        return Err(Error::InvalidArgument("dx and dp must be positive".into()));
    }
    Ok((dx * dp / PLANCK).powi(3))
}

/// Joint detection probability of two particles from points `a` and `b`.
pub fn two_particle_probability(amps: &AmplitudePair, statistics: Statistics) -> f64 {
    let direct = amps.a1 * amps.b2;
    let exchange = amps.a2 * amps.b1;
    match statistics {
        Statistics::Boson => (direct + exchange).norm_sqr(),
        Statistics::Fermion => (direct - exchange).norm_sqr(),
        Statistics::Coherent | Statistics::Distinguishable => direct.norm_sqr() + exchange.norm_sqr(),
    }
}

/// `1 + σ |g1(i, j)|²` with σ the exchange sign of `statistics`.
pub fn analytic_g2(kernel: &CoherenceKernel, i: usize, j: usize, statistics: Statistics) -> f64 {
    1.0 + statistics.exchange_sign() as f64 * kernel.g1(i, j).norm_sqr()
}

/// Gaussian-model g² at separation `delta`, `1 + σ exp(-Δ²/l²)`.
pub fn gaussian_g2(delta: f64, length: f64, statistics: Statistics) -> f64 {
    1.0 + statistics.exchange_sign() as f64 * (-(delta * delta) / (length * length)).exp()
}

/// `λ L / (2π s)`.
pub fn correlation_length_light(lambda: f64, distance: f64, size: f64) -> f64 {
    lambda * distance / (2.0 * core::f64::consts::PI * size)
}

/// `h t / (2π m s)`.
pub fn correlation_length_atoms(mass: f64, flight_time: f64, size: f64) -> f64 {
    PLANCK * flight_time / (2.0 * core::f64::consts::PI * mass * size)
}

/// Angular source size `s / L` giving correlation length `width`.
pub fn source_angular_size_from_width(lambda: f64, width: f64) -> f64 {
    lambda / (2.0 * core::f64::consts::PI * width)
}

/// Length a detector with Gaussian RMS blur `resolution` measures for a true
/// length `length`.
pub fn blurred_length(length: f64, resolution: f64) -> f64 {
    (length * length + 4.0 * resolution * resolution).sqrt()
}

/// Factor by which Gaussian blur lowers the height of g² - 1.
pub fn contrast_reduction(lengths: [f64; 3], resolution: [f64; 3]) -> f64 {
    lengths
        .iter()
        .zip(&resolution)
        .map(|(&l, &d)| l / blurred_length(l, d))
        .product()
}

fn region_sums(kernel: &CoherenceKernel, region: &[Range<usize>]) -> Result<(f64, f64)> {
    if region.len() != kernel.axes().len() {
        return Err(Error::ShapeMismatch("region needs one index range per grid axis".into()));
    }
    let mut diag = 1.0;
    let mut square = 1.0;
    for (k, r) in kernel.axes().iter().zip(region) {
        if r.start >= r.end || r.end > k.len() {
            return Err(Error::InvalidArgument("region range outside the grid".into()));
        }
        diag *= r.clone().map(|i| k.gamma(i, i).re).sum::<f64>();
        let mut s = 0.0;
        for i in r.clone() {
            for j in r.clone() {
                s += k.gamma(i, j).norm_sqr();
            }
        }
        square *= s;
    }
    Ok((diag, square))
}

/// Effective number of modes `(Σ C_ii)² / Σ |C_ij|²` over a box of grid
/// cells given as one index range per axis.
pub fn effective_mode_count(kernel: &CoherenceKernel, region: &[Range<usize>]) -> Result<f64> {
    let (diag, square) = region_sums(kernel, region)?;
    Ok(diag * diag / square)
}

/// Mean count and count variance in a box of grid cells.
pub fn region_count_moments(
    kernel: &CoherenceKernel,
    region: &[Range<usize>],
    statistics: Statistics,
) -> Result<(f64, f64)> {
    let (diag, square) = region_sums(kernel, region)?;
    let s = kernel.scale();
    let mean = s * diag;
    let wave = s * s * square;
    let var = match statistics {
        Statistics::Boson => mean + wave,
        Statistics::Fermion => mean - wave,
        Statistics::Coherent | Statistics::Distinguishable => mean,
    };
    Ok((mean, var))
}
