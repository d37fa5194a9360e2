//! Statistics helpers: autocorrelation-aware error bars, blocked jackknife,
//! χ² goodness of fit, least squares.

use crate::error::{bail, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Integrated autocorrelation time τ_int = ½ + Σ_{t=1}^{W} ρ(t) with Sokal's
/// automatic window (smallest W with W ≥ c·τ_int(W), c = 5). Returns ½ for
/// uncorrelated or constant series.
pub fn integrated_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return 0.5;
    }
    let m = mean(x);
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    if c0 <= 0.0 || !c0.is_finite() {
        return 0.5;
    }
    let mut tau = 0.5;
    let max_lag = n / 4;
    for t in 1..max_lag {
        let ct: f64 = (0..n - t).map(|i| (x[i] - m) * (x[i + t] - m)).sum::<f64>() / n as f64;
        tau += ct / c0;
        if (t as f64) >= 5.0 * tau {
            break;
        }
    }
    tau.max(0.5)
}

/// Mean, standard error inflated by the integrated autocorrelation time, and τ_int.
pub fn mean_stderr_tau(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    let m = mean(x);
    if n < 2 {
        return (m, 0.0, 0.5);
    }
    let tau = integrated_autocorrelation(x);
    let var = variance(x);
    (m, (var * 2.0 * tau / n as f64).sqrt(), tau)
}

/// Blocked jackknife of a scalar function of block-aggregated data. `blocks`
/// holds per-block sums of the vector observables used by `f` together with the
/// block's sample count; `f` receives the totals and the count of the pooled
/// sample with one block left out.
pub fn jackknife<F>(blocks: &[(Vec<f64>, f64)], f: F) -> (f64, f64)
where
    F: Fn(&[f64], f64) -> f64,
{
    let k = blocks.len();
    let dim = blocks.first().map(|b| b.0.len()).unwrap_or(0);
    let mut total = vec![0.0; dim];
    let mut count = 0.0;
    for (s, c) in blocks {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
        count += c;
    }
    let full = f(&total, count);
    if k < 2 {
        return (full, 0.0);
    }
    let mut loo = Vec::with_capacity(k);
    for (s, c) in blocks {
        let sub: Vec<f64> = total.iter().zip(s).map(|(t, v)| t - v).collect();
        loo.push(f(&sub, count - c));
    }
    let lm = mean(&loo);
    let var = (k as f64 - 1.0) / k as f64 * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Blocked jackknife standard error of a plain mean.
pub fn block_mean_stderr(x: &[f64], n_blocks: usize) -> (f64, f64) {
    let n = x.len();
    let k = n_blocks.min(n).max(1);
    let size = n / k;
    if size == 0 {
        return (mean(x), 0.0);
    }
    let blocks: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|b| (vec![x[b * size..(b + 1) * size].iter().sum::<f64>()], size as f64))
        .collect();
    jackknife(&blocks, |s, c| s[0] / c)
}

/// Outcome of a χ² goodness-of-fit test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: usize,
    pub samples: u64,
}

/// χ² goodness of fit of observed counts against exact cell probabilities.
///
/// Cells are pooled before looking at the data: cells are sorted by expected
/// count and consecutive low-expectation cells merged until every pooled cell
/// has expected count ≥ `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> Result<ChiSquare> {
    if observed.len() != probs.len() || observed.is_empty() {
        bail!(InvalidArgument, "observed/probability length mismatch");
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        bail!(InvalidArgument, "no samples");
    }
    let psum: f64 = probs.iter().sum();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap().then(a.cmp(&b)));
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut eacc, mut oacc) = (0.0, 0.0);
    for &i in &order {
        eacc += probs[i] / psum * n;
        oacc += observed[i] as f64;
        if eacc >= min_expected {
            cells.push((oacc, eacc));
            eacc = 0.0;
            oacc = 0.0;
        }
    }
    if eacc > 0.0 || oacc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += oacc;
                last.1 += eacc;
            }
            None => cells.push((oacc, eacc)),
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64).map(|d| d.sf(statistic)).unwrap_or(f64::NAN)
    };
    Ok(ChiSquare { statistic, dof, p_value, cells: cells.len(), samples: total })
}

/// Weighted least squares fit y ≈ a + b·x. Returns (a, b, weighted RSS).
pub fn linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    let sy: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().zip(w).map(|(a, b)| a * a * b).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((a, c), b)| a * c * b).sum();
    let det = sw * sxx - sx * sx;
    let b = if det.abs() > 0.0 { (sw * sxy - sx * sy) / det } else { 0.0 };
    let a = (sy - b * sx) / sw;
    let rss = x.iter().zip(y).zip(w).map(|((xi, yi), wi)| wi * (yi - a - b * xi).powi(2)).sum();
    (a, b, rss)
}

/// Akaike information criterion for a least-squares fit with k parameters.
pub fn aic_least_squares(rss: f64, n: usize, k: usize) -> f64 {
    let n = n as f64;
    n * (rss.max(1e-300) / n).ln() + 2.0 * k as f64
}


/// Contiguous-block accumulator for vector observables: samples are summed in
/// blocks of `block_size` consecutive pushes; error bars come from the blocked
/// jackknife over blocks.
#[derive(Clone, Debug)]
pub struct BlockAccumulator {
    dim: usize,
    block_size: usize,
    blocks: Vec<(Vec<f64>, f64)>,
}

impl BlockAccumulator {
    pub fn new(dim: usize, block_size: usize) -> BlockAccumulator {
        BlockAccumulator { dim, block_size: block_size.max(1), blocks: Vec::new() }
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn count(&self) -> f64 {
        self.blocks.iter().map(|b| b.1).sum()
    }
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }
    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        if self.blocks.last().map_or(true, |b| b.1 as usize >= self.block_size) {
            self.blocks.push((vec![0.0; self.dim], 0.0));
        }
        let b = self.blocks.last_mut().expect("block exists");
        for (s, v) in b.0.iter_mut().zip(x) {
            *s += v;
        }
        b.1 += 1.0;
    }
    /// Mean of every component.
    pub fn means(&self) -> Vec<f64> {
        let n = self.count();
        let mut t = vec![0.0; self.dim];
        for (s, _) in &self.blocks {
            for (a, b) in t.iter_mut().zip(s) {
                *a += b;
            }
        }
        t.iter().map(|v| v / n).collect()
    }
    /// Means and blocked-jackknife standard errors of every component.
    pub fn mean_stderr(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count();
        let k = self.blocks.len();
        let mut total = vec![0.0; self.dim];
        for (s, _) in &self.blocks {
            for (a, b) in total.iter_mut().zip(s) {
                *a += b;
            }
        }
        let means: Vec<f64> = total.iter().map(|v| v / n).collect();
        let mut se = vec![0.0; self.dim];
        if k >= 2 {
            for i in 0..self.dim {
                let loo: Vec<f64> = self.blocks.iter().map(|(s, c)| (total[i] - s[i]) / (n - c)).collect();
                let lm = mean(&loo);
                se[i] = ((k as f64 - 1.0) / k as f64 * loo.iter().map(|v| (v - lm).powi(2)).sum::<f64>()).sqrt();
            }
        }
        (means, se)
    }
    /// Raw block sums and counts (for jackknife of derived quantities).
    pub fn blocks(&self) -> &[(Vec<f64>, f64)] {
        &self.blocks
    }
}

fn ln_factorial(k: usize) -> f64 {
    statrs::function::factorial::ln_factorial(k as u64)
}

/// Exponentially scaled modified Bessel function of the first kind,
/// e^{−x} I_k(x), for integer order k ≥ 0 and x ≥ 0. Power series for
/// moderate x, Hankel asymptotic expansion for large x.
pub fn bessel_i_scaled(k: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "argument must be non-negative");
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x <= 40.0 {
        let lh = (x / 2.0).ln();
        let mut sum = 0.0;
        let mut m = 0usize;
        loop {
            let lt = (2 * m + k as usize) as f64 * lh - ln_factorial(m) - ln_factorial(m + k as usize) - x;
            let t = lt.exp();
            sum += t;
            if m as f64 > x && t < 1e-17 * sum {
                break;
            }
            m += 1;
            if m > 10_000 {
                break;
            }
        }
        sum
    } else {
        let mu = 4.0 * (k as f64).powi(2);
        let mut term: f64 = 1.0;
        let mut sum = 1.0;
        for j in 1..40 {
            let prev = term.abs();
            term *= -(mu - ((2 * j - 1) as f64).powi(2)) / (j as f64 * 8.0 * x);
            if term.abs() > prev {
                break;
            }
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}
