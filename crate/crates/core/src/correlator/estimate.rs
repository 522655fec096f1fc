#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;


use super::binning::BinningSpec;
use super::histogram::{PairHistogram, PairKind};
use super::Point;
use crate::{Error, Result};

/// How same-shot and cross-shot counts are put on a common scale.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Normalization {
    /// Counts per shot and per shot pair. Unbiased: g² tends to
    /// 1 at large separation for any shot-to-shot number fluctuation.
    #[default]
    PerShot,
    /// Counts divided by the total pairs of each kind. Reads low by
    /// `⟨N⟩²/⟨N(N-1)⟩` when the shot population fluctuates.
    PairTotals,
}

impl Normalization {
    pub fn parse(s: &str) -> Option<Normalization> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per_shot" | "per-shot" | "shot" => Some(Normalization::PerShot),
            "pair_totals" | "pair-totals" | "totals" => Some(Normalization::PairTotals),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Normalization::PerShot => "per_shot",
            Normalization::PairTotals => "pair_totals",
        }
    }
}

/// Binned g² with Poisson errors. Bins without cross-shot pairs are marked
/// invalid and hold NaN.
#[derive(Clone, Debug)]
pub struct CorrelationFunction {
    pub binning: BinningSpec,
    pub g2: Vec<f64>,
    pub stderr: Vec<f64>,
    pub valid: Vec<bool>,
}

impl CorrelationFunction {
    pub fn len(&self) -> usize {
        self.g2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g2.is_empty()
    }

    pub fn center(&self, flat: usize) -> Point {
        self.binning.center(flat)
    }

    /// g² in the bin touching zero separation.
    pub fn at_origin(&self) -> f64 {
        self.g2[self.binning.origin_bin()]
    }

    /// Inverse-variance mean of g² over valid bins whose center lies at
    /// least `min_separation` from the origin.
    pub fn tail_mean(&self, min_separation: f64) -> Option<(f64, f64)> {
        let mut sw = 0.0;
        let mut swx = 0.0;
        for i in 0..self.len() {
            if !self.valid[i] || !(self.stderr[i] > 0.0) {
                continue;
            }
            let c = self.center(i);
            let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            if r < min_separation {
                continue;
            }
            let w = 1.0 / (self.stderr[i] * self.stderr[i]);
            sw += w;
            swx += w * self.g2[i];
        }
        if sw > 0.0 {
            Some((swx / sw, 1.0 / sw.sqrt()))
        } else {
            None
        }
    }
}

/// Normalized g² from a same-shot and a cross-shot histogram.
pub fn estimate_g2(
    same: &PairHistogram,
    cross: &PairHistogram,
    binning: &BinningSpec,
    normalization: Normalization,
) -> Result<CorrelationFunction> {
    if same.kind != PairKind::SameShot || cross.kind != PairKind::CrossShot {
        return Err(Error::ShapeMismatch("expected a same-shot and a cross-shot histogram".into()));
    }
    let shape = binning.shape();
    if same.shape != shape || cross.shape != shape || same.signed != binning.is_signed() || cross.signed != binning.is_signed() {
        return Err(Error::ShapeMismatch("histogram binning differs from the requested binning".into()));
    }
    if same.shots == 0 || cross.shots == 0 {
        return Err(Error::InsufficientShots { needed: 2, got: same.shots as usize });
    }
    // g2 = scale * same_count / cross_count
    let scale = match normalization {
        Normalization::PerShot => 2.0 * cross.shots as f64 / same.shots as f64,
        Normalization::PairTotals => {
            if same.total_pairs == 0 || cross.total_pairs == 0 {
                return Err(Error::InsufficientShots { needed: 2, got: same.shots as usize });
            }
            cross.total_pairs as f64 / same.total_pairs as f64
        }
    };
    let n = binning.len();
    let mut g2 = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for (&s, &c) in same.counts.iter().zip(&cross.counts) {
        if c == 0 {
            g2.push(f64::NAN);
            stderr.push(f64::NAN);
            valid.push(false);
            continue;
        }
        let (s, c) = (s as f64, c as f64);
        g2.push(scale * s / c);
        stderr.push(scale / c * (s.max(1.0) + s * s / c).sqrt());
        valid.push(true);
    }
    Ok(CorrelationFunction { binning: binning.clone(), g2, stderr, valid })
}
