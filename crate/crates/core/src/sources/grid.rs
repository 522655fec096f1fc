use alloc::format;
use alloc::vec::Vec;

use crate::model::ArrivalClock;
use crate::{Error, Result};

/// Regular sampling of one detector axis. Cell `i` covers
/// `[start + i·pitch, start + (i+1)·pitch)` and is represented by its center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisGrid {
    pub start: f64,
    pub pitch: f64,
    pub len: usize,
}

impl AxisGrid {
    pub fn new(start: f64, pitch: f64, len: usize) -> Result<Self> {
        if len == 0 || !(pitch > 0.0) || !pitch.is_finite() || !start.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "axis needs len > 0 and finite pitch > 0 (len {len}, pitch {pitch})"
            )));
        }
        Ok(AxisGrid { start, pitch, len })
    }

    /// `len` cells of width `pitch` centered on zero.
    pub fn centered(len: usize, pitch: f64) -> Result<Self> {
        AxisGrid::new(-0.5 * len as f64 * pitch, pitch, len)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.start + (i as f64 + 0.5) * self.pitch
    }

    pub fn lower_edge(&self, i: usize) -> f64 {
        self.start + i as f64 * self.pitch
    }

    pub fn extent(&self) -> f64 {
        self.len as f64 * self.pitch
    }
}

/// Product grid over up to three detector axes (x, y, z in that order) and
/// the clock converting the vertical coordinate into arrival time.
///
/// Points are flattened row-major with the x axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<AxisGrid>,
    pub clock: ArrivalClock,
}

impl Grid {
    pub fn new(axes: Vec<AxisGrid>, clock: ArrivalClock) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidGrid(format!("need 1 to 3 axes, got {}", axes.len())));
        }
        if !(clock.v_ref > 0.0) {
            return Err(Error::InvalidGrid("arrival velocity must be > 0".into()));
        }
        Ok(Grid { axes, clock })
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of a flat point index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in (0..self.axes.len()).rev() {
            let n = self.axes[d].len;
            idx[d] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        self.axes
            .iter()
            .enumerate()
            .fold(0, |acc, (d, a)| acc * a.len + idx[d])
    }

    /// Cell center `(x, y, z)`; missing axes are zero.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut p = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = a.center(idx[d]);
        }
        p
    }
}
