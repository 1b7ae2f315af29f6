//! Sampling estimate of the comass of a form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{cross, evaluate, phi_eval, subsets, Form};
use crate::linalg::gram_schmidt;
use crate::{Error, Report, Result, Vector7};

const MAX_REDRAWS: usize = 16;

#[derive(Debug, Clone)]
pub struct ComassOptions {
    pub samples: usize,
    pub seed: u64,
    /// Allowed excess over 1 before a sample counts as a violation.
    pub tol: f64,
    /// How many of the best samples seed the local ascent.
    pub refine_starts: usize,
    pub refine_iters: usize,
}

impl Default for ComassOptions {
    fn default() -> Self {
        ComassOptions { samples: 100_000, seed: 1, tol: 1e-9, refine_starts: 4, refine_iters: 400 }
    }
}

/// Estimate the comass of `form` from `n` random orthonormal tuples.
pub fn comass_sample(form: &Form, n: usize, seed: u64) -> Result<Report> {
    comass_sample_with(form, &ComassOptions { samples: n, seed, ..Default::default() })
}

/// Random orthonormal `p`-frame number `index` of the stream for `seed`.
/// Each index has its own ChaCha stream, so results do not depend on scheduling.
pub(crate) fn random_frame(p: usize, seed: u64, index: u64) -> Result<(Vec<Vector7>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    for attempt in 0..MAX_REDRAWS {
        let vs: Vec<Vector7> =
            (0..p).map(|_| Vector7::from_fn(|_, _| StandardNormal.sample(&mut rng))).collect();
        if let Some(q) = gram_schmidt(&vs, 1e-8) {
            return Ok((q, attempt));
        }
    }
    Err(Error::DegenerateSample(MAX_REDRAWS))
}

fn gradient(form: &Form, v: &[Vector7]) -> Vec<Vector7> {
    // the form is linear in each slot, so the partial gradient is a vector of evaluations
    (0..v.len())
        .map(|j| {
            Vector7::from_fn(|m, _| {
                let mut w = v.to_vec();
                w[j] = crate::basis(m + 1);
                evaluate(form, &w).unwrap_or(0.0)
            })
        })
        .collect()
}

/// Projected gradient ascent on the Stiefel manifold, retracting with Gram-Schmidt.
fn ascend(form: &Form, start: Vec<Vector7>, iters: usize) -> (Vec<Vector7>, f64) {
    let mut v = start;
    let mut f = evaluate(form, &v).unwrap_or(f64::NEG_INFINITY);
    let mut eta = 0.25;
    for _ in 0..iters {
        let g = gradient(form, &v);
        let p = v.len();
        // tangent projection G - V sym(V^T G)
        let mut t = g.clone();
        for j in 0..p {
            for k in 0..p {
                let s = 0.5 * (v[k].dot(&g[j]) + v[j].dot(&g[k]));
                t[j] -= v[k] * s;
            }
        }
        let gnorm: f64 = t.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        if gnorm < 1e-13 {
            break;
        }
        loop {
            let trial: Vec<Vector7> = v.iter().zip(&t).map(|(a, b)| a + b * eta).collect();
            let accepted = gram_schmidt(&trial, 1e-12)
                .map(|q| (evaluate(form, &q).unwrap_or(f64::NEG_INFINITY), q))
                .filter(|(fq, _)| *fq > f);
            match accepted {
                Some((fq, q)) => {
                    v = q;
                    f = fq;
                    eta = (eta * 1.5).min(1.0);
                    break;
                }
                None => {
                    eta *= 0.5;
                    if eta < 1e-14 {
                        return (v, f);
                    }
                }
            }
        }
    }
    (v, f)
}

pub fn comass_sample_with(form: &Form, opts: &ComassOptions) -> Result<Report> {
    if opts.samples == 0 {
        return Err(Error::Precondition("comass sampling needs at least one sample".into()));
    }
    let p = form.grade();
    let draws: Vec<(Vec<Vector7>, usize)> = (0..opts.samples as u64)
        .into_par_iter()
        .map(|i| random_frame(p, opts.seed, i))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = draws.par_iter().map(|(v, _)| evaluate(form, v)).collect::<Result<_>>()?;
    let redraws: usize = draws.iter().map(|(_, r)| r).sum();
    let excess: Vec<f64> = values.iter().map(|v| (v - 1.0).max(0.0)).collect();
    let violations = values.iter().filter(|&&v| v > 1.0 + opts.tol).count();
    let sampled_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    let refined: Vec<(Vec<Vector7>, f64)> = order
        .iter()
        .take(opts.refine_starts.min(values.len()))
        .map(|&i| ascend(form, draws[i].0.clone(), opts.refine_iters))
        .collect();
    let (best_frame, refined_max) = refined
        .into_iter()
        .fold((Vec::new(), sampled_max), |acc, r| if r.1 > acc.1 { r } else { acc });

    let mut report = Report::from_values(format!("comass/grade{p}"), opts.tol, &excess, 0)
        .with_seed(opts.seed)
        .with_param("samples", opts.samples)
        .with_metric("sampled_max", sampled_max)
        .with_metric("refined_max", refined_max)
        .with_metric("violations", violations as f64)
        .with_metric("redraws", redraws as f64);
    report.passed = violations == 0 && refined_max <= 1.0 + opts.tol;
    if !best_frame.is_empty() {
        match p {
            4 => {
                let defect = subsets(4, 3)
                    .iter()
                    .map(|t| phi_eval(&best_frame[t[0]], &best_frame[t[1]], &best_frame[t[2]]).abs())
                    .fold(0.0, f64::max);
                report = report.with_metric("argmax_phi_restriction", defect);
            }
            3 => {
                let defect = (cross(&best_frame[0], &best_frame[1]) - best_frame[2]).norm();
                report = report.with_metric("argmax_cross_defect", defect);
            }
            _ => {}
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{phi, star_phi};

    #[test]
    fn comass_small_run() {
        let r = comass_sample(&star_phi(), 2000, 7).unwrap();
        assert!(r.passed);
        assert_eq!(r.metric("violations"), Some(0.0));
        assert!(r.metric("refined_max").unwrap() > 1.0 - 1e-6);
        assert!(r.metric("argmax_phi_restriction").unwrap() < 1e-3);
        let r3 = comass_sample(&phi(), 2000, 7).unwrap();
        assert!(r3.passed);
        assert!(r3.metric("refined_max").unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn deterministic_streams() {
        let a = random_frame(4, 3, 17).unwrap();
        let b = random_frame(4, 3, 17).unwrap();
        assert_eq!(a.0, b.0);
        assert_ne!(random_frame(4, 3, 18).unwrap().0, a.0);
    }

    #[test]
    fn detects_non_calibration() {
        let r = comass_sample(&star_phi().scale(1.5), 500, 1).unwrap();
        assert!(!r.passed);
        assert!(r.metric("violations").unwrap() > 0.0);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(comass_sample(&phi(), 0, 1).is_err());
    }
}
