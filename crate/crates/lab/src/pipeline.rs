//! Parallel simulate and correlate stages.
//!
//! Every shot draws from its own source and detector streams, and pair
//! histograms are merged with integer additions, so results do not depend
//! on the number of worker threads.

use hbt_core::correlator::{
    cross_shot_histogram_for, estimate_g2, fit_g2, pair_histogram, positions, BinningSpec,
    CorrelationFunction, FitOptions, FitResult, PairHistogram, PairKind, Point,
};
use hbt_core::detector::{apply_detector, DetectorSpec};
use hbt_core::sources::{build_source_kernel, sample_events, CoherenceKernel};
use hbt_core::{RngStream, Shot, Statistics};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{LabError, Result};

/// Shots (or shot pairs) handled per parallel task.
const BLOCK: usize = 64;

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Usage(format!("cannot start {threads} worker threads: {e}")))
}

/// One source realization recorded through the detector.
pub fn simulate_shot(
    kernel: &CoherenceKernel,
    statistics: Statistics,
    mean_count: f64,
    detector: &DetectorSpec,
    seed: u64,
    shot_id: u64,
) -> hbt_core::Result<Shot> {
    let mut rng = RngStream::source(seed, shot_id).rng();
    let events = sample_events(kernel, statistics, mean_count, &mut rng)?;
    let mut rng = RngStream::detector(seed, shot_id).rng();
    Ok(apply_detector(&events, detector, &mut rng).into_shot(shot_id))
}

pub struct Simulation {
    pub kernel: CoherenceKernel,
    pub shots: Vec<Shot>,
}

pub fn build_kernel(cfg: &RunConfig) -> Result<CoherenceKernel> {
    Ok(build_source_kernel(&cfg.source_spec()?, &cfg.grid()?)?)
}

/// Simulates `cfg.shots` shots on `threads` workers (0 means all cores).
pub fn simulate(cfg: &RunConfig, threads: usize) -> Result<Simulation> {
    let kernel = build_kernel(cfg)?;
    let detector = cfg.detector();
    detector.validate()?;
    let pool = thread_pool(threads)?;
    let shots = pool.install(|| {
        (0..cfg.shots)
            .into_par_iter()
            .map(|id| simulate_shot(&kernel, cfg.statistics, cfg.mean_count, &detector, cfg.seed, id))
            .collect::<hbt_core::Result<Vec<_>>>()
    })?;
    Ok(Simulation { kernel, shots })
}

fn merge_all(kind: PairKind, binning: &BinningSpec, parts: Vec<PairHistogram>) -> Result<PairHistogram> {
    let mut total = PairHistogram::new(kind, binning);
    for p in &parts {
        total.merge(p)?;
    }
    Ok(total)
}

/// Same-shot and cross-shot histograms of detector-frame positions.
pub fn histograms(
    points: &[Vec<Point>],
    binning: &BinningSpec,
    pairs: &[(usize, usize)],
) -> Result<(PairHistogram, PairHistogram)> {
    let same: Vec<PairHistogram> = points.par_chunks(BLOCK).map(|c| pair_histogram(c, binning)).collect();
    let cross: Vec<PairHistogram> =
        pairs.par_chunks(BLOCK).map(|p| cross_shot_histogram_for(points, binning, p)).collect();
    Ok((merge_all(PairKind::SameShot, binning, same)?, merge_all(PairKind::CrossShot, binning, cross)?))
}

pub struct Correlation {
    pub same: PairHistogram,
    pub cross: PairHistogram,
    pub function: CorrelationFunction,
}

/// Histograms and normalizes the pair separations of `shots`.
pub fn correlate(shots: &[Shot], cfg: &RunConfig, threads: usize) -> Result<Correlation> {
    if shots.len() < 2 {
        return Err(hbt_core::Error::InsufficientShots { needed: 2, got: shots.len() }.into());
    }
    let binning = cfg.binning()?;
    let points = positions(shots, &cfg.clock());
    let pairs = cfg.pairing.pairs(points.len());
    let pool = thread_pool(threads)?;
    let (same, cross) = pool.install(|| histograms(&points, &binning, &pairs))?;
    let function = estimate_g2(&same, &cross, &binning, cfg.normalization)?;
    Ok(Correlation { same, cross, function })
}

/// Fit options seeded with the expected measured lengths.
pub fn fit_options(cfg: &RunConfig) -> FitOptions {
    let ideal = cfg.expected_lengths();
    let mut start = [0.0; 3];
    let mut known = true;
    for a in cfg.binned_axes() {
        let i = a.index();
        let l = hbt_core::oracles::blurred_length(ideal[i], cfg.resolution[i]);
        known &= l.is_finite();
        start[i] = l;
    }
    FitOptions { sign: cfg.fit_sign, initial_lengths: known.then_some(start), ..FitOptions::default() }
}

pub fn fit(function: &CorrelationFunction, cfg: &RunConfig) -> Result<FitResult> {
    Ok(fit_g2(function, &fit_options(cfg))?)
}
