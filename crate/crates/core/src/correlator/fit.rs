#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::binning::BinningSpec;
use super::estimate::CorrelationFunction;
use crate::{Error, Result};

const MIN_BINS_PER_AXIS: usize = 5;
const SIGNIFICANCE: f64 = 3.0;

/// Expected direction of the zero-separation feature.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignHint {
    /// Decide from the data: a bump reads +1, a dip -1, neither 0.
    #[default]
    Auto,
    Plus,
    Minus,
}

impl SignHint {
    pub fn parse(s: &str) -> Option<SignHint> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Some(SignHint::Auto),
            "+" | "+1" | "1" | "plus" | "bump" => Some(SignHint::Plus),
            "-" | "-1" | "minus" | "dip" => Some(SignHint::Minus),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub sign: SignHint,
    /// Starting correlation lengths per detector axis, m. When absent a few
    /// starts spread over the binned range are tried.
    pub initial_lengths: Option<[f64; 3]>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { sign: SignHint::Auto, initial_lengths: None, max_iterations: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    /// Feature height, non-negative unless the sign was fixed by hand.
    pub eta: f64,
    pub eta_err: f64,
    /// +1 bump, -1 dip, 0 when the feature is not significant.
    pub sign: i8,
    /// Fitted 1/e lengths of g² - 1 per detector axis; `None` for axes
    /// that were not binned.
    pub lengths: [Option<f64>; 3],
    pub length_errs: [Option<f64>; 3],
    pub chi2red: f64,
    pub iterations: usize,
    pub valid_bins: usize,
}

/// Mean of `exp(-x²/l²)` over `[lo, hi]`.
pub fn gaussian_bin_average(lo: f64, hi: f64, length: f64) -> f64 {
    let w = hi - lo;
    let root_pi = core::f64::consts::PI.sqrt();
    root_pi * length / (2.0 * w) * (libm::erf(hi / length) - libm::erf(lo / length))
}

/// Bin-averaged model `1 + sign·eta·Π exp(-Δ²/l²)` for flat bin `flat`;
/// `lengths` has one entry per binned axis.
pub fn model_g2(binning: &BinningSpec, flat: usize, eta: f64, sign: f64, lengths: &[f64]) -> f64 {
    let idx = binning.unravel(flat);
    let mut prod = 1.0;
    for (i, l) in lengths.iter().enumerate() {
        let (lo, hi) = binning.edges(i, idx[i]);
        prod *= gaussian_bin_average(lo, hi, *l);
    }
    1.0 + sign * eta * prod
}

struct Problem {
    /// (lo, hi) per binned axis for each used bin.
    edges: Vec<Vec<(f64, f64)>>,
    y: Vec<f64>,
    inv_sigma: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl Problem {
    fn dims(&self) -> usize {
        self.bounds.len()
    }

    /// Weighted residuals and Jacobian for parameters `(eta, ln l_1, ...)`.
    fn evaluate(&self, p: &[f64], sign: f64, want_jac: bool) -> (f64, Vec<f64>, Option<DMatrix<f64>>) {
        let d = self.dims();
        let n = self.y.len();
        let lengths: Vec<f64> = p[1..].iter().map(|t| t.exp()).collect();
        let mut res = Vec::with_capacity(n);
        let mut jac = if want_jac { Some(DMatrix::zeros(n, d + 1)) } else { None };
        let mut chi2 = 0.0;
        let mut f = vec![0.0; d];
        let mut df = vec![0.0; d];
        for k in 0..n {
            let mut prod = 1.0;
            for a in 0..d {
                let (lo, hi) = self.edges[k][a];
                let l = lengths[a];
                f[a] = gaussian_bin_average(lo, hi, l);
                prod *= f[a];
                if want_jac {
                    let w = hi - lo;
                    let el = (-(lo * lo) / (l * l)).exp();
                    let eh = (-(hi * hi) / (l * l)).exp();
                    df[a] = f[a] + (lo * el - hi * eh) / w;
                }
            }
            let m = 1.0 + sign * p[0] * prod;
            let r = (self.y[k] - m) * self.inv_sigma[k];
            chi2 += r * r;
            res.push(r);
            if let Some(j) = jac.as_mut() {
                j[(k, 0)] = sign * prod * self.inv_sigma[k];
                for a in 0..d {
                    let mut others = 1.0;
                    for b in 0..d {
                        if b != a {
                            others *= f[b];
                        }
                    }
                    j[(k, a + 1)] = sign * p[0] * others * df[a] * self.inv_sigma[k];
                }
            }
        }
        (chi2, res, jac)
    }

    fn clamp(&self, p: &mut [f64]) {
        for (t, &(lo, hi)) in p[1..].iter_mut().zip(&self.bounds) {
            *t = t.clamp(lo, hi);
        }
    }
}

struct Minimum {
    params: Vec<f64>,
    chi2: f64,
    iterations: usize,
    converged: bool,
}

fn levenberg_marquardt(prob: &Problem, start: Vec<f64>, sign: f64, max_iterations: usize) -> Minimum {
    let mut p = start;
    prob.clamp(&mut p);
    let np = p.len();
    let (mut chi2, mut res, mut jac) = prob.evaluate(&p, sign, true);
    let mut lambda = 1e-3;
    for it in 1..=max_iterations {
        let j = jac.as_ref().expect("jacobian");
        let jtj = j.transpose() * j;
        let r = DVector::from_vec(res.clone());
        let jtr = j.transpose() * r;
        let max_diag = (0..np).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * max_diag);
            }
            let step = match a.cholesky() {
                Some(c) => c.solve(&jtr),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            prob.clamp(&mut trial);
            let (c2, _, _) = prob.evaluate(&trial, sign, false);
            if c2.is_finite() && c2 <= chi2 {
                let drop = chi2 - c2;
                let moved = p.iter().zip(&trial).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                p = trial;
                let eval = prob.evaluate(&p, sign, true);
                chi2 = eval.0;
                res = eval.1;
                jac = eval.2;
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                if drop <= 1e-10 * chi2.max(1e-300) || moved < 1e-12 {
                    return Minimum { params: p, chi2, iterations: it, converged: true };
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No downhill step at any damping: already at the minimum.
            return Minimum { params: p, chi2, iterations: it, converged: true };
        }
    }
    Minimum { params: p, chi2, iterations: max_iterations, converged: false }
}

/// Fits the bin-averaged Gaussian bump/dip model to a measured g².
///
/// Free parameters are the height and one length per binned axis. Bins
/// without cross-shot pairs are ignored; each binned axis needs at least
/// five populated bins.
pub fn fit_g2(cf: &CorrelationFunction, options: &FitOptions) -> Result<FitResult> {
    let binning = &cf.binning;
    let d = binning.axes().len();
    let mut edges = Vec::new();
    let mut y = Vec::new();
    let mut inv_sigma = Vec::new();
    let mut populated: Vec<Vec<bool>> = (0..d).map(|i| vec![false; binning.bins_along(i)]).collect();
    for k in 0..cf.len() {
        if !cf.valid[k] || !cf.g2[k].is_finite() || !(cf.stderr[k] > 0.0) {
            continue;
        }
        let idx = binning.unravel(k);
        edges.push((0..d).map(|i| binning.edges(i, idx[i])).collect::<Vec<_>>());
        y.push(cf.g2[k]);
        inv_sigma.push(1.0 / cf.stderr[k]);
        for i in 0..d {
            populated[i][idx[i]] = true;
        }
    }
    for (i, a) in binning.axes().iter().enumerate() {
        let got = populated[i].iter().filter(|&&b| b).count();
        if got < MIN_BINS_PER_AXIS {
            return Err(Error::InsufficientBins { axis: a.axis.name(), needed: MIN_BINS_PER_AXIS, got });
        }
    }
    let bounds: Vec<(f64, f64)> = binning
        .axes()
        .iter()
        .map(|a| ((a.width * 1e-2).ln(), (a.reach() * 10.0).ln()))
        .collect();
    let prob = Problem { edges, y, inv_sigma, bounds };

    let sign = match options.sign {
        SignHint::Minus => -1.0,
        _ => 1.0,
    };
    let origin = binning.origin_bin();
    let eta0 = if cf.valid[origin] && cf.g2[origin].is_finite() {
        sign * (cf.g2[origin] - 1.0)
    } else {
        0.0
    };
    let starts: Vec<Vec<f64>> = match options.initial_lengths {
        Some(l) => vec![binning.axes().iter().map(|a| l[a.axis.index()].ln()).collect()],
        None => [1.0, 3.0, 10.0]
            .iter()
            .map(|f| binning.axes().iter().map(|a| (a.width * f).ln()).collect())
            .collect(),
    };
    let mut best: Option<Minimum> = None;
    for s in starts {
        let mut p = vec![eta0];
        p.extend(s);
        let m = levenberg_marquardt(&prob, p, sign, options.max_iterations);
        let better = match &best {
            None => true,
            Some(b) => (m.converged && !b.converged) || (m.converged == b.converged && m.chi2 < b.chi2),
        };
        if better {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(Error::FitDidNotConverge { iterations: best.iterations, best_chi2: best.chi2 });
    }

    let n = prob.y.len();
    let np = d + 1;
    let dof = n.saturating_sub(np).max(1);
    let chi2red = best.chi2 / dof as f64;
    let inflate = chi2red.max(1.0).sqrt();
    let (_, _, jac) = prob.evaluate(&best.params, sign, true);
    let jac = jac.expect("jacobian");
    let jtj = jac.transpose() * &jac;
    let cov = jtj.clone().try_inverse().filter(|c| (0..np).all(|i| c[(i, i)] >= 0.0));
    let eta_err = match &cov {
        Some(c) => c[(0, 0)].sqrt() * inflate,
        None => inflate / jtj[(0, 0)].max(1e-300).sqrt(),
    };

    let mut eta = best.params[0];
    let mut reported_sign = sign as i8;
    if options.sign == SignHint::Auto {
        if eta < 0.0 {
            eta = -eta;
            reported_sign = -reported_sign;
        }
        if !(eta > SIGNIFICANCE * eta_err) {
            reported_sign = 0;
        }
    }
    let mut lengths = [None; 3];
    let mut length_errs = [None; 3];
    for (i, a) in binning.axes().iter().enumerate() {
        let l = best.params[i + 1].exp();
        lengths[a.axis.index()] = Some(l);
        length_errs[a.axis.index()] = cov.as_ref().map(|c| l * c[(i + 1, i + 1)].sqrt() * inflate);
    }
    Ok(FitResult {
        eta,
        eta_err,
        sign: reported_sign,
        lengths,
        length_errs,
        chi2red,
        iterations: best.iterations,
        valid_bins: n,
    })
}
