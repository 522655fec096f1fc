//! Pair-correlation analysis: same-shot and cross-shot pair histograms, the
//! normalized g² estimate, the bump/dip fit and counting statistics.

mod binning;
mod counting;
mod estimate;
mod fit;
mod histogram;

pub use binning::{Axis, BinAxis, BinningSpec};
pub use counting::{counting_statistics, CellBox, CountStatistics};
pub use estimate::{estimate_g2, CorrelationFunction, Normalization};
pub use fit::{fit_g2, gaussian_bin_average, model_g2, FitOptions, FitResult, SignHint};
pub use histogram::{
    cross_shot_histogram, cross_shot_histogram_for, pair_histogram, PairHistogram, PairKind,
    PairingPlan,
};

use alloc::vec::Vec;

use crate::model::{ArrivalClock, Shot};

/// Detector-frame position `(x, y, z)`, m.
pub type Point = [f64; 3];

/// Converts a shot to `(x, y, z)` positions, mapping arrival time to height.
pub fn shot_positions(shot: &Shot, clock: &ArrivalClock) -> Vec<Point> {
    shot.events.iter().map(|e| [e.x, e.y, clock.vertical(e.t)]).collect()
}

/// [`shot_positions`] for every shot.
pub fn positions(shots: &[Shot], clock: &ArrivalClock) -> Vec<Vec<Point>> {
    shots.iter().map(|s| shot_positions(s, clock)).collect()
}
