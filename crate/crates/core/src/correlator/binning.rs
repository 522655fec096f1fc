#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::vec::Vec;


use super::Point;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Separation binning along one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinAxis {
    pub axis: Axis,
    pub width: f64,
    pub max_separation: f64,
}

impl BinAxis {
    /// Bins on one side of zero, `ceil(max / width)`.
    pub fn half_bins(&self) -> usize {
        (self.max_separation / self.width).ceil() as usize
    }

    /// Largest separation that lands in a bin: `max` rounded up to whole bins.
    pub fn reach(&self) -> f64 {
        self.half_bins() as f64 * self.width
    }
}

/// Which separations are histogrammed and how.
///
/// Axes not listed are integrated over. With `signed = false` the bins are
/// `[b·w, (b+1)·w)` in `|Δ|`; with `signed = true` they cover `[-reach,
/// reach)` and every pair is entered with both orientations.
#[derive(Clone, Debug, PartialEq)]
pub struct BinningSpec {
    axes: Vec<BinAxis>,
    signed: bool,
    half: Vec<usize>,
}

impl BinningSpec {
    pub fn new(axes: Vec<BinAxis>, signed: bool) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidBinning(format!("need 1 to 3 axes, got {}", axes.len())));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.width > 0.0) || !a.width.is_finite() {
                return Err(Error::InvalidBinning(format!("bin width along {} must be > 0", a.axis.name())));
            }
            if !(a.max_separation >= a.width) || !a.max_separation.is_finite() {
                return Err(Error::InvalidBinning(format!(
                    "max separation along {} must be ≥ bin width",
                    a.axis.name()
                )));
            }
            if axes[..i].iter().any(|b| b.axis == a.axis) {
                return Err(Error::InvalidBinning(format!("axis {} listed twice", a.axis.name())));
            }
        }
        let half = axes.iter().map(BinAxis::half_bins).collect();
        Ok(BinningSpec { axes, signed, half })
    }

    /// Same width and range on every listed axis.
    pub fn uniform(axes: &[Axis], width: f64, max_separation: f64, signed: bool) -> Result<Self> {
        BinningSpec::new(
            axes.iter().map(|&axis| BinAxis { axis, width, max_separation }).collect(),
            signed,
        )
    }

    pub fn axes(&self) -> &[BinAxis] {
        &self.axes
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn bins_along(&self, i: usize) -> usize {
        let h = self.axes[i].half_bins();
        if self.signed {
            2 * h
        } else {
            h
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.axes.len()).map(|i| self.bins_along(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat bin of a separation vector, or `None` when out of range on any
    /// binned axis.
    #[inline]
    pub fn bin_index(&self, delta: &Point) -> Option<usize> {
        let mut flat = 0usize;
        for (a, &h) in self.axes.iter().zip(&self.half) {
            let d = delta[a.axis.index()];
            let b = if self.signed {
                let q = (d / a.width).floor();
                if !(q >= -(h as f64) && q < h as f64) {
                    return None;
                }
                (q + h as f64) as usize
            } else {
                let q = d.abs() / a.width;
                if !(q < h as f64) {
                    return None;
                }
                q as usize
            };
            flat = flat * if self.signed { 2 * h } else { h } + b;
        }
        Some(flat)
    }

    /// Per-axis bin indices of a flat bin.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = alloc::vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = flat % shape[d];
            flat /= shape[d];
        }
        idx
    }

    /// Lower and upper edge of bin `b` along binned axis `i`.
    pub fn edges(&self, i: usize, b: usize) -> (f64, f64) {
        let a = &self.axes[i];
        let lo = if self.signed {
            (b as f64 - a.half_bins() as f64) * a.width
        } else {
            b as f64 * a.width
        };
        (lo, lo + a.width)
    }

    /// Bin center as `(dx, dy, dz)`; axes that are not binned read 0.
    pub fn center(&self, flat: usize) -> Point {
        let idx = self.unravel(flat);
        let mut c = [0.0; 3];
        for (i, a) in self.axes.iter().enumerate() {
            let (lo, hi) = self.edges(i, idx[i]);
            c[a.axis.index()] = 0.5 * (lo + hi);
        }
        c
    }

    /// Flat index of the bin touching zero separation from above on every
    /// axis.
    pub fn origin_bin(&self) -> usize {
        let mut flat = 0;
        for (i, a) in self.axes.iter().enumerate() {
            let b = if self.signed { a.half_bins() } else { 0 };
            flat = flat * self.bins_along(i) + b;
        }
        flat
    }
}
