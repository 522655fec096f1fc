#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;


use super::binning::BinningSpec;
use super::Point;
use crate::{Error, Result};

/// Relative margin added to the cell size so that every in-range pair lies
/// in adjacent cells despite rounding.
const CELL_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairKind {
    SameShot,
    CrossShot,
}

/// Histogram of pair separations.
///
/// `total_pairs` counts every pair considered, including those beyond the
/// binned range. In signed mode each pair is entered with both orientations
/// and counted twice. `shots` is the number of shots (same-shot) or shot
/// pairs (cross-shot) that contributed, empty ones included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairHistogram {
    pub kind: PairKind,
    pub shape: Vec<usize>,
    pub counts: Vec<u64>,
    pub total_pairs: u64,
    pub shots: u64,
    pub signed: bool,
}

impl PairHistogram {
    pub fn new(kind: PairKind, binning: &BinningSpec) -> Self {
        PairHistogram {
            kind,
            shape: binning.shape(),
            counts: vec![0; binning.len()],
            total_pairs: 0,
            shots: 0,
            signed: binning.is_signed(),
        }
    }

    /// Adds another partial histogram of the same kind and binning.
    pub fn merge(&mut self, other: &PairHistogram) -> Result<()> {
        if self.kind != other.kind || self.shape != other.shape || self.signed != other.signed {
            return Err(Error::ShapeMismatch("cannot merge histograms with different binning".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_pairs += other.total_pairs;
        self.shots += other.shots;
        Ok(())
    }

    /// Pairs that landed in a bin.
    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Which shots are paired for the cross-shot (uncorrelated) reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingPlan {
    /// Shot `i` with shot `i + 1`.
    Consecutive,
    /// Every unordered pair of distinct shots.
    AllPairs,
}

impl PairingPlan {
    pub fn pairs(&self, shots: usize) -> Vec<(usize, usize)> {
        match self {
            PairingPlan::Consecutive => (1..shots).map(|i| (i - 1, i)).collect(),
            PairingPlan::AllPairs => (0..shots)
                .flat_map(|i| (i + 1..shots).map(move |j| (i, j)))
                .collect(),
        }
    }
}

type CellKey = [i64; 3];

/// Points of one shot sorted into cubic cells one bin-range wide, so that
/// every in-range partner of a point sits in the same or an adjacent cell.
struct CellList {
    order: Vec<usize>,
    cells: Vec<(CellKey, usize, usize)>,
}

struct CellGeometry {
    /// `(point axis, cell size)` per binned axis.
    axes: Vec<(usize, f64)>,
    offsets: Vec<CellKey>,
}

impl CellGeometry {
    fn new(binning: &BinningSpec) -> Self {
        let axes: Vec<(usize, f64)> = binning
            .axes()
            .iter()
            .map(|a| (a.axis.index(), a.reach() * (1.0 + CELL_MARGIN)))
            .collect();
        let mut offsets = vec![[0i64; 3]];
        for d in 0..axes.len() {
            let mut next = Vec::with_capacity(offsets.len() * 3);
            for o in &offsets {
                for step in [-1i64, 0, 1] {
                    let mut k = *o;
                    k[d] = step;
                    next.push(k);
                }
            }
            offsets = next;
        }
        CellGeometry { axes, offsets }
    }

    #[inline]
    fn key(&self, p: &Point) -> CellKey {
        let mut k = [0i64; 3];
        for (d, &(axis, size)) in self.axes.iter().enumerate() {
            k[d] = (p[axis] / size).floor() as i64;
        }
        k
    }

    fn build(&self, points: &[Point]) -> CellList {
        let keys: Vec<CellKey> = points.iter().map(|p| self.key(p)).collect();
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
        let mut cells: Vec<(CellKey, usize, usize)> = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            match cells.last_mut() {
                Some((k, _, end)) if *k == keys[i] => *end = pos + 1,
                _ => cells.push((keys[i], pos, pos + 1)),
            }
        }
        CellList { order, cells }
    }
}

impl CellList {
    fn find(&self, key: &CellKey) -> Option<(usize, usize)> {
        self.cells
            .binary_search_by(|(k, _, _)| k.cmp(key))
            .ok()
            .map(|c| (self.cells[c].1, self.cells[c].2))
    }
}

fn shifted(key: &CellKey, off: &CellKey) -> CellKey {
    [key[0] + off[0], key[1] + off[1], key[2] + off[2]]
}

#[inline]
fn record(counts: &mut [u64], binning: &BinningSpec, p: &Point, q: &Point) {
    let delta = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    if let Some(b) = binning.bin_index(&delta) {
        counts[b] += 1;
    }
    if binning.is_signed() {
        let back = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        if let Some(b) = binning.bin_index(&back) {
            counts[b] += 1;
        }
    }
}

fn same_shot_into(hist: &mut PairHistogram, geom: &CellGeometry, binning: &BinningSpec, points: &[Point]) {
    let n = points.len() as u64;
    let orientations = if binning.is_signed() { 2 } else { 1 };
    hist.total_pairs += orientations * n * n.saturating_sub(1) / 2;
    hist.shots += 1;
    if points.len() < 2 {
        return;
    }
    let cl = geom.build(points);
    for &(key, start, end) in &cl.cells {
        for off in &geom.offsets {
            let other = shifted(&key, off);
            if other < key {
                continue;
            }
            if other == key {
                for a in start..end {
                    let p = &points[cl.order[a]];
                    for b in a + 1..end {
                        record(&mut hist.counts, binning, p, &points[cl.order[b]]);
                    }
                }
            } else if let Some((s2, e2)) = cl.find(&other) {
                for a in start..end {
                    let p = &points[cl.order[a]];
                    for b in s2..e2 {
                        record(&mut hist.counts, binning, p, &points[cl.order[b]]);
                    }
                }
            }
        }
    }
}

fn cross_into(
    hist: &mut PairHistogram,
    geom: &CellGeometry,
    binning: &BinningSpec,
    first: &[Point],
    second: &[Point],
) {
    let orientations = if binning.is_signed() { 2 } else { 1 };
    hist.total_pairs += orientations * first.len() as u64 * second.len() as u64;
    hist.shots += 1;
    if first.is_empty() || second.is_empty() {
        return;
    }
    let cl = geom.build(second);
    for p in first {
        let key = geom.key(p);
        for off in &geom.offsets {
            if let Some((s, e)) = cl.find(&shifted(&key, off)) {
                for b in s..e {
                    record(&mut hist.counts, binning, p, &second[cl.order[b]]);
                }
            }
        }
    }
}

/// Histogram of every unordered within-shot pair.
///
/// Uses per-shot cell lists sized to the binned range; the result is
/// identical to enumerating all pairs.
pub fn pair_histogram(shots: &[Vec<Point>], binning: &BinningSpec) -> PairHistogram {
    let geom = CellGeometry::new(binning);
    let mut hist = PairHistogram::new(PairKind::SameShot, binning);
    for points in shots {
        same_shot_into(&mut hist, &geom, binning, points);
    }
    hist
}

/// Cross-shot histogram over an explicit list of shot pairs. Used to split
/// the work of [`cross_shot_histogram`] across workers.
pub fn cross_shot_histogram_for(
    shots: &[Vec<Point>],
    binning: &BinningSpec,
    pairs: &[(usize, usize)],
) -> PairHistogram {
    let geom = CellGeometry::new(binning);
    let mut hist = PairHistogram::new(PairKind::CrossShot, binning);
    for &(a, b) in pairs {
        cross_into(&mut hist, &geom, binning, &shots[a], &shots[b]);
    }
    hist
}

/// Histogram of pairs drawn from distinct shots, the uncorrelated
/// reference for g².
pub fn cross_shot_histogram(
    shots: &[Vec<Point>],
    binning: &BinningSpec,
    plan: PairingPlan,
) -> Result<PairHistogram> {
    if shots.len() < 2 {
        return Err(Error::InsufficientShots { needed: 2, got: shots.len() });
    }
    Ok(cross_shot_histogram_for(shots, binning, &plan.pairs(shots.len())))
}
