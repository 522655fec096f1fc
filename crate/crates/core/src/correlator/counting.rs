
#[allow(unused_imports)]
use num_traits::Float;
use super::Point;

/// Axis-aligned box in detector coordinates, half-open on every axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellBox {
    pub lo: Point,
    pub hi: Point,
}

impl CellBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        CellBox { lo, hi }
    }

    /// Box containing every point.
    pub fn everything() -> Self {
        CellBox { lo: [f64::NEG_INFINITY; 3], hi: [f64::INFINITY; 3] }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] && p[i] < self.hi[i])
    }

    pub fn count(&self, points: &[Point]) -> u64 {
        points.iter().filter(|p| self.contains(p)).count() as u64
    }
}

/// Shot-to-shot count mean and unbiased variance. `variance_err` is the
/// jackknife error of the variance.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CountStatistics {
    pub mean: f64,
    pub variance: f64,
    pub variance_err: f64,
}

impl CountStatistics {
    pub fn from_counts(counts: &[u64]) -> Self {
        let n = counts.len();
        if n == 0 {
            return CountStatistics::default();
        }
        let nf = n as f64;
        let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / nf;
        if n < 2 {
            return CountStatistics { mean, variance: 0.0, variance_err: 0.0 };
        }
        let q: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
        let variance = q / (nf - 1.0);
        if n < 3 {
            return CountStatistics { mean, variance, variance_err: 0.0 };
        }
        let leave_out = |c: u64| {
            let d = c as f64 - mean;
            (q - d * d * nf / (nf - 1.0)) / (nf - 2.0)
        };
        let avg = counts.iter().map(|&c| leave_out(c)).sum::<f64>() / nf;
        let spread: f64 = counts.iter().map(|&c| (leave_out(c) - avg).powi(2)).sum();
        let variance_err = ((nf - 1.0) / nf * spread).sqrt();
        CountStatistics { mean, variance, variance_err }
    }
}

/// Count statistics of the events falling inside `region`.
pub fn counting_statistics(shots: &[alloc::vec::Vec<Point>], region: &CellBox) -> CountStatistics {
    let counts: alloc::vec::Vec<u64> = shots.iter().map(|s| region.count(s)).collect();
    CountStatistics::from_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_constant() {
        assert_eq!(CountStatistics::from_counts(&[]), CountStatistics::default());
        let s = CountStatistics::from_counts(&[4, 4, 4, 4]);
        assert_eq!((s.mean, s.variance, s.variance_err), (4.0, 0.0, 0.0));
    }

    #[test]
    fn jackknife_matches_direct_leave_one_out() {
        let counts = [3u64, 7, 1, 0, 5, 9, 2, 4];
        let s = CountStatistics::from_counts(&counts);
        let n = counts.len();
        let mut vars = vec![];
        for i in 0..n {
            let rest: Vec<f64> = counts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &c)| c as f64).collect();
            let m = rest.iter().sum::<f64>() / rest.len() as f64;
            vars.push(rest.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (rest.len() - 1) as f64);
        }
        let avg = vars.iter().sum::<f64>() / n as f64;
        let err = ((n as f64 - 1.0) / n as f64 * vars.iter().map(|v| (v - avg).powi(2)).sum::<f64>()).sqrt();
        assert!((s.variance_err - err).abs() < 1e-12);
        assert!((s.mean - 31.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn box_is_half_open() {
        let b = CellBox::new([0.0; 3], [1.0; 3]);
        assert!(b.contains(&[0.0, 0.5, 0.999]));
        assert!(!b.contains(&[1.0, 0.5, 0.5]));
        assert_eq!(counting_statistics(&[vec![[0.5; 3], [2.0; 3]]], &b).mean, 1.0);
    }
}
