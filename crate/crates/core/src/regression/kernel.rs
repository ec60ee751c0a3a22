use rayon::prelude::*;

use super::{Predictor, RegressionError};
use crate::invariance::RegressionDataset;

/// Points in the logarithmic bandwidth grid searched per dimension.
pub const BANDWIDTH_GRID: usize = 20;
const MAX_SWEEPS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub enum Bandwidth {
    Fixed(Vec<f64>),
    /// Leave-one-out cross-validation over `[0.01 s, 10 s]` per dimension,
    /// with `s` the coordinate's standard deviation.
    Auto,
}

/// Gaussian local constant (Nadaraya-Watson) estimator.
#[derive(Clone, Debug)]
pub struct KernelRegressor {
    x: Vec<f64>,
    y: Vec<f64>,
    dim: usize,
    bandwidths: Vec<f64>,
}

/// `-0.5 sum_k ((a_k - b_k) / h_k)^2`.
fn log_weight(a: &[f64], b: &[f64], inv_h: &[f64]) -> f64 {
    -0.5 * a
        .iter()
        .zip(b)
        .zip(inv_h)
        .map(|((p, q), s)| {
            let z = (p - q) * s;
            z * z
        })
        .sum::<f64>()
}

/// Weighted mean of `y` by `exp(lw)`, or the response of the largest `lw` when
/// every weight underflows. Clamped to the range of `y` against rounding.
fn weighted_mean(lw: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let (best_lw, best_y) = lw
        .clone()
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, (l, y)| if l > acc.0 { (l, y) } else { acc });
    if best_lw.exp() == 0.0 {
        return best_y;
    }
    let (num, den, lo, hi) = lw.fold((0.0, 0.0, f64::INFINITY, f64::NEG_INFINITY), |(n, d, lo, hi), (l, y)| {
        let w = (l - best_lw).exp();
        (n + w * y, d + w, lo.min(y), hi.max(y))
    });
    (num / den).clamp(lo, hi)
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    (values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

impl KernelRegressor {
    pub fn fit(data: &RegressionDataset, bandwidth: &Bandwidth) -> Result<Self, RegressionError> {
        let mut reg = Self {
            x: data.features().to_vec(),
            y: data.responses().to_vec(),
            dim: data.dim(),
            bandwidths: vec![1.0; data.dim()],
        };
        match bandwidth {
            Bandwidth::Fixed(h) => {
                if h.len() != data.dim() || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(RegressionError::InvalidBandwidth(h.clone()));
                }
                reg.bandwidths = h.clone();
            }
            Bandwidth::Auto => reg.select_bandwidths(),
        }
        Ok(reg)
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn train_size(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// Coordinate-wise search of the per-dimension grids, starting from the
    /// middle of each grid, until a sweep changes nothing.
    fn select_bandwidths(&mut self) {
        let grids: Vec<Vec<f64>> = (0..self.dim)
            .map(|k| {
                let s = std_dev((0..self.y.len()).map(|i| self.x[i * self.dim + k]));
                if s > 0.0 && s.is_finite() {
                    (0..BANDWIDTH_GRID)
                        .map(|g| 0.01 * s * 1000f64.powf(g as f64 / (BANDWIDTH_GRID - 1) as f64))
                        .collect()
                } else {
                    vec![1.0]
                }
            })
            .collect();
        let mut pick: Vec<usize> = grids.iter().map(|g| g.len() / 2).collect();
        let mut h: Vec<f64> = grids.iter().zip(&pick).map(|(g, &p)| g[p]).collect();
        let mut best = self.loo_error(&h);
        for _ in 0..MAX_SWEEPS {
            let mut changed = false;
            for k in 0..self.dim {
                for (g, &cand) in grids[k].iter().enumerate() {
                    if g == pick[k] {
                        continue;
                    }
                    let mut trial = h.clone();
                    trial[k] = cand;
                    let err = self.loo_error(&trial);
                    if err < best {
                        best = err;
                        pick[k] = g;
                        h = trial;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.bandwidths = h;
    }

    /// Mean squared leave-one-out error.
    pub fn loo_error(&self, h: &[f64]) -> f64 {
        let inv: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
        let n = self.y.len();
        let errs: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = self.row(i);
                let pred = weighted_mean(
                    (0..n)
                        .filter(move |&j| j != i)
                        .map(|j| (log_weight(xi, self.row(j), &inv), self.y[j])),
                );
                (pred - self.y[i]) * (pred - self.y[i])
            })
            .collect();
        errs.iter().sum::<f64>() / n as f64
    }
}

impl Predictor for KernelRegressor {
    fn predict(&self, x: &[f64]) -> f64 {
        let inv: Vec<f64> = self.bandwidths.iter().map(|v| 1.0 / v).collect();
        weighted_mean((0..self.y.len()).map(|j| (log_weight(x, self.row(j), &inv), self.y[j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> RegressionDataset {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.1, (i % 7) as f64]).collect();
        let y = rows.iter().map(|r| (r[0] * 3.0).sin() + 0.1 * r[1]).collect();
        RegressionDataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn tiny_bandwidth_interpolates() {
        let d = data();
        let r = KernelRegressor::fit(&d, &Bandwidth::Fixed(vec![1e-4, 1e-4])).unwrap();
        for i in [0, 7, 29] {
            assert_eq!(r.predict(d.row(i)), d.response(i));
        }
        let far = r.predict(&[100.0, 100.0]);
        assert!(d.responses().contains(&far));
    }

    #[test]
    fn huge_bandwidth_averages() {
        let d = data();
        let r = KernelRegressor::fit(&d, &Bandwidth::Fixed(vec![1e9, 1e9])).unwrap();
        let mean = d.responses().iter().sum::<f64>() / 30.0;
        assert!((r.predict(&[0.3, 1.0]) - mean).abs() < 1e-12);
    }

    #[test]
    fn constant_responses_stay_constant() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let d = RegressionDataset::from_rows(&rows, vec![2.5; 10]).unwrap();
        for h in [1e-3, 0.7, 50.0] {
            let r = KernelRegressor::fit(&d, &Bandwidth::Fixed(vec![h])).unwrap();
            assert_eq!(r.predict(&[3.3]), 2.5);
        }
    }

    #[test]
    fn bad_bandwidths_rejected() {
        let d = data();
        assert!(KernelRegressor::fit(&d, &Bandwidth::Fixed(vec![0.0, 1.0])).is_err());
        assert!(KernelRegressor::fit(&d, &Bandwidth::Fixed(vec![1.0])).is_err());
    }

    #[test]
    fn auto_bandwidth_beats_extremes() {
        let d = data();
        let r = KernelRegressor::fit(&d, &Bandwidth::Auto).unwrap();
        let chosen = r.loo_error(r.bandwidths());
        assert!(chosen <= r.loo_error(&[1e3, 1e3]));
        assert!(chosen <= r.loo_error(&[0.01, 0.01]));
    }
}
