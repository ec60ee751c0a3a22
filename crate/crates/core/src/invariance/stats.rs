use std::f64::consts::PI;

use libm::erfc;

use super::TestError;

/// Sample quantile with linear interpolation between order statistics.
///
/// With sorted values `x_0..x_{n-1}` and `h = (n - 1) q`, returns
/// `x_floor(h) + (h - floor(h)) (x_floor(h)+1 - x_floor(h))`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, TestError> {
    if values.is_empty() {
        return Err(TestError::InvalidParameter("quantile of an empty list".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(TestError::InvalidParameter(format!("quantile level {q} outside (0, 1]")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&v, q))
}

pub(crate) fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let frac = h - lo as f64;
    if frac == 0.0 {
        v[lo]
    } else {
        v[lo] + frac * (v[lo + 1] - v[lo])
    }
}

/// Bound on `P(|e_i - e_j| >= t)` for the noise in the responses.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    /// iid `N(0, sigma^2)` noise with `p_t = (2 sigma / t) exp(-t^2 / 4 sigma^2) / sqrt(2 pi)`,
    /// capped at 1; `p_t = 0` for every `t > 0` when `sigma = 0`.
    GaussianIid { sigma: f64 },
    /// iid `N(0, sigma^2)` noise with the exact difference tail `erfc(t / 2 sigma)`.
    GaussianExact { sigma: f64 },
    /// Step function through explicit `(t, p_t)` pairs, ascending in `t`.
    /// Below the first `t`, `p_t = 1`.
    CustomTable(Vec<(f64, f64)>),
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), TestError> {
        match self {
            Self::GaussianIid { sigma } | Self::GaussianExact { sigma } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return Err(TestError::InvalidParameter("noise sigma must be >= 0".into()));
                }
            }
            Self::CustomTable(rows) => {
                if rows.is_empty() {
                    return Err(TestError::InvalidParameter("empty noise table".into()));
                }
                for w in rows.windows(2) {
                    if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                        return Err(TestError::InvalidParameter(
                            "noise table must have increasing t and nonincreasing p_t".into(),
                        ));
                    }
                }
                if rows.iter().any(|&(t, p)| !(t > 0.0) || !(0.0..=1.0).contains(&p)) {
                    return Err(TestError::InvalidParameter("noise table needs t > 0 and p_t in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    /// `p_t` for threshold `t > 0`.
    pub fn p_t(&self, t: f64) -> f64 {
        match self {
            Self::GaussianIid { sigma } => {
                if *sigma == 0.0 {
                    return 0.0;
                }
                let r = t / sigma;
                ((2.0 / r) * (-r * r / 4.0).exp() / (2.0 * PI).sqrt()).min(1.0)
            }
            Self::GaussianExact { sigma } => {
                if *sigma == 0.0 {
                    return 0.0;
                }
                erfc(t / (2.0 * sigma)).min(1.0)
            }
            Self::CustomTable(rows) => rows
                .iter()
                .rev()
                .find(|(tt, _)| *tt <= t)
                .map_or(1.0, |&(_, p)| p),
        }
    }

    /// Default grid: thresholds whose `p_t` are 20 evenly spaced values over
    /// `[0.01, 0.99]`, ascending in `t`. Noise-free models use one tiny threshold,
    /// so that any positive statistic counts.
    pub fn default_thresholds(&self) -> Vec<f64> {
        const GRID: usize = 20;
        match self {
            Self::GaussianIid { sigma } | Self::GaussianExact { sigma } => {
                if *sigma == 0.0 {
                    return vec![f64::MIN_POSITIVE];
                }
                let mut ts: Vec<f64> = (0..GRID)
                    .map(|i| 0.01 + 0.98 * i as f64 / (GRID - 1) as f64)
                    .map(|target| self.invert(target, *sigma))
                    .collect();
                ts.sort_by(f64::total_cmp);
                ts.dedup();
                ts
            }
            Self::CustomTable(rows) => rows.iter().map(|&(t, _)| t).collect(),
        }
    }

    fn invert(&self, target: f64, sigma: f64) -> f64 {
        let (mut lo, mut hi) = (1e-9 * sigma, 100.0 * sigma);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.p_t(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.0).unwrap(), 5.0);
        assert_eq!(quantile(&[4.0, 1.0, 3.0, 2.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[7.5; 9], 0.3).unwrap(), 7.5);
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&[1.0], 0.0).is_err());
    }

    #[test]
    fn gaussian_p_t() {
        let n = NoiseModel::GaussianIid { sigma: 0.05 };
        let expected = (-1.0f64).exp() / (2.0 * PI).sqrt();
        assert!((n.p_t(0.1) - expected).abs() < 1e-15);
        assert_eq!(n.p_t(1e-6), 1.0);
        assert_eq!(NoiseModel::GaussianIid { sigma: 0.0 }.p_t(0.3), 0.0);
        let exact = NoiseModel::GaussianExact { sigma: 1.0 };
        let v = exact.p_t(2.0);
        assert!((v - 0.157_299_207_050_285_13).abs() < 1e-12, "{v}");
    }

    #[test]
    fn default_grid_hits_targets() {
        let n = NoiseModel::GaussianIid { sigma: 0.05 };
        let ts = n.default_thresholds();
        assert_eq!(ts.len(), 20);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        assert!((n.p_t(ts[0]) - 0.99).abs() < 1e-9);
        assert!((n.p_t(ts[19]) - 0.01).abs() < 1e-9);
    }

    #[test]
    fn custom_table_steps() {
        let n = NoiseModel::CustomTable(vec![(0.1, 0.5), (0.2, 0.1)]);
        n.validate().unwrap();
        assert_eq!(n.p_t(0.05), 1.0);
        assert_eq!(n.p_t(0.15), 0.5);
        assert_eq!(n.p_t(3.0), 0.1);
        assert!(NoiseModel::CustomTable(vec![(0.1, 0.1), (0.2, 0.5)]).validate().is_err());
    }
}
