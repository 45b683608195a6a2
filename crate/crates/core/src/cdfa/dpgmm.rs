//! One-dimensional Dirichlet-process Gaussian mixture.
//!
//! Truncated stick-breaking prior over at most `max_components` clusters,
//! Normal-Inverse-Gamma base measure, collapsed Gibbs sampling. Values are
//! standardized first, so the base measure is centred on the data mean and
//! scaled by the data variance.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpgmmConfig {
    pub max_components: usize,
    /// Stick-breaking concentration.
    pub alpha: f64,
    pub sweeps: usize,
    /// Pseudo-count on the base-measure mean.
    pub kappa0: f64,
    /// Inverse-gamma shape of the base measure.
    pub a0: f64,
    /// Inverse-gamma scale, in units of the data variance.
    pub b0: f64,
    /// Finish with one sweep that takes each point's most probable cluster.
    pub final_map_sweep: bool,
}

impl Default for DpgmmConfig {
    fn default() -> Self {
        DpgmmConfig {
            max_components: 5,
            alpha: 1.0,
            sweeps: 200,
            kappa0: 0.01,
            a0: 2.0,
            b0: 0.05,
            final_map_sweep: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Suff {
    n: usize,
    sum: f64,
    sumsq: f64,
}

impl Suff {
    fn add(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sumsq += x * x;
    }

    fn remove(&mut self, x: f64) {
        self.n -= 1;
        self.sum -= x;
        self.sumsq -= x * x;
        if self.n == 0 {
            *self = Suff::default();
        }
    }
}

/// Log posterior-predictive density of `x` under a cluster with stats `s`
/// (a Student-t for the Normal-Inverse-Gamma model).
fn ln_predictive(x: f64, s: &Suff, cfg: &DpgmmConfig) -> f64 {
    let n = s.n as f64;
    let kn = cfg.kappa0 + n;
    let mean = if s.n > 0 { s.sum / n } else { 0.0 };
    let mu_n = s.sum / kn;
    let a_n = cfg.a0 + n / 2.0;
    let scatter = (s.sumsq - n * mean * mean).max(0.0);
    let b_n = cfg.b0 + 0.5 * scatter + cfg.kappa0 * n * mean * mean / (2.0 * kn);
    let nu = 2.0 * a_n;
    let scale2 = b_n * (kn + 1.0) / (a_n * kn);
    let z = (x - mu_n) * (x - mu_n) / (nu * scale2);
    ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI * scale2).ln()
        - (nu + 1.0) / 2.0 * z.ln_1p()
}

/// Collapsed stick-breaking prior log-weights for each component given the
/// other points' counts.
fn ln_prior_weights(counts: &[usize], alpha: f64, out: &mut [f64]) {
    let k = counts.len();
    let mut tail: usize = counts.iter().sum();
    let mut ln_rest = 0.0;
    for j in 0..k {
        let nj = counts[j] as f64;
        tail -= counts[j];
        if j + 1 == k {
            out[j] = ln_rest;
        } else {
            let denom = 1.0 + alpha + nj + tail as f64;
            out[j] = ln_rest + ((1.0 + nj) / denom).ln();
            ln_rest += ((alpha + tail as f64) / denom).ln();
        }
    }
}

/// Cluster `values`; returns one label per value, labels numbered from 0 in
/// order of first appearance. Never more than `max_components` labels.
pub fn dpgmm_cluster(values: &[f64], cfg: &DpgmmConfig, seed: u64) -> Vec<usize> {
    let m = values.len();
    let k = cfg.max_components.max(1);
    if m == 0 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
    let all_equal = values.iter().all(|&v| v == values[0]);
    if all_equal || k == 1 || !(var > 0.0) {
        return vec![0; m];
    }
    let sd = var.sqrt();
    let xs: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();

    let mut rng = seed::rng(seed);
    let mut z: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
    let mut stats = vec![Suff::default(); k];
    let mut logp = vec![0.0; k];
    let mut counts = vec![0usize; k];

    let rebuild = |z: &[usize], stats: &mut Vec<Suff>| {
        stats.iter_mut().for_each(|s| *s = Suff::default());
        for (x, &c) in xs.iter().zip(z) {
            stats[c].add(*x);
        }
    };

    let total_sweeps = cfg.sweeps + usize::from(cfg.final_map_sweep);
    for sweep in 0..total_sweeps {
        let greedy = cfg.final_map_sweep && sweep == cfg.sweeps;
        rebuild(&z, &mut stats);
        for i in 0..m {
            let x = xs[i];
            stats[z[i]].remove(x);
            for (c, s) in counts.iter_mut().zip(&stats) {
                *c = s.n;
            }
            ln_prior_weights(&counts, cfg.alpha, &mut logp);
            for (j, lp) in logp.iter_mut().enumerate() {
                *lp += ln_predictive(x, &stats[j], cfg);
            }
            let best = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let chosen = if greedy {
                logp.iter().position(|&v| v == best).unwrap_or(0)
            } else {
                let weights: Vec<f64> = logp.iter().map(|v| (v - best).exp()).collect();
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = k - 1;
                for (j, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = j;
                        break;
                    }
                    u -= w;
                }
                pick
            };
            z[i] = chosen;
            stats[chosen].add(x);
        }
    }

    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    z.into_iter()
        .map(|c| {
            if relabel[c] == usize::MAX {
                relabel[c] = next;
                next += 1;
            }
            relabel[c]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, Normal};

    use super::*;

    #[test]
    fn constant_input_is_one_cluster() {
        let z = dpgmm_cluster(&[1.0; 5], &DpgmmConfig::default(), 3);
        assert_eq!(z, vec![0; 5]);
    }

    #[test]
    fn prior_weights_are_normalized() {
        let mut out = vec![0.0; 5];
        for counts in [[0, 0, 0, 0, 0], [3, 0, 2, 0, 9], [1, 1, 1, 1, 1]] {
            ln_prior_weights(&counts, 1.0, &mut out);
            let total: f64 = out.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-12, "{counts:?} -> {total}");
        }
    }

    #[test]
    fn predictive_integrates_to_one() {
        let cfg = DpgmmConfig::default();
        let mut s = Suff::default();
        for x in [0.1, -0.3, 0.2, 0.25] {
            s.add(x);
        }
        let h = 1e-3;
        let total: f64 = (-40_000..40_000).map(|i| ln_predictive(i as f64 * h, &s, &cfg).exp() * h).sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn separates_two_far_gaussians() {
        let mut rng = seed::rng(99);
        let a = Normal::new(0.0, 1.0).unwrap();
        let b = Normal::new(50.0, 1.0).unwrap();
        let mut xs: Vec<f64> = (0..100).map(|_| a.sample(&mut rng)).collect();
        xs.extend((0..100).map(|_| b.sample(&mut rng)));
        let z = dpgmm_cluster(&xs, &DpgmmConfig::default(), 1);
        let labels: std::collections::BTreeSet<_> = z.iter().collect();
        assert_eq!(labels.len(), 2);
        assert_eq!(z, dpgmm_cluster(&xs, &DpgmmConfig::default(), 1));
    }
}
