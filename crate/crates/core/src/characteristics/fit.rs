//! Least-squares fit of the exponential damper law to (velocity, force) data.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use super::DamperCurve;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct DamperFit {
    pub curve: DamperCurve,
    pub residual_rms: f64,
    pub iterations: usize,
}

/// Fits `F(v) = A·e^(−k·v) + B·e^(q·v)` by damped Gauss–Newton
/// (Levenberg–Marquardt) with an analytic Jacobian.
///
/// Starting points come from log-linear fits of the two velocity branches
/// and from a coarse `(k, q)` scan with `(A, B)` solved linearly; the better
/// converged result is returned.
pub fn fit_damper_curve(samples: &[(f64, f64)]) -> Result<DamperFit> {
    if samples.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "damper fit needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(v, f)| !v.is_finite() || !f.is_finite()) {
        return Err(Error::Input("damper samples must be finite".into()));
    }
    let mut vs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    vs.sort_by(f64::total_cmp);
    if vs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input("damper samples need distinct velocities".into()));
    }

    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let starts = [log_linear_start(samples), scan_start(samples)];

    let mut best: Option<LmOutcome> = None;
    for start in starts.into_iter().flatten() {
        let outcome = levenberg_marquardt(samples, start, peak);
        if best.as_ref().is_none_or(|b| outcome.cost < b.cost) {
            best = Some(outcome);
        }
    }
    let best = best.ok_or(Error::FitFailure {
        best: [f64::NAN; 4],
        residual_rms: f64::INFINITY,
        iterations: 0,
    })?;
    let residual_rms = (2.0 * best.cost / samples.len() as f64).sqrt();
    let [a, k, b, q] = best.params;
    if !best.converged {
        return Err(Error::FitFailure {
            best: best.params,
            residual_rms,
            iterations: best.iterations,
        });
    }
    Ok(DamperFit {
        curve: DamperCurve::new(a, k, b, q)?,
        residual_rms,
        iterations: best.iterations,
    })
}

struct LmOutcome {
    params: [f64; 4],
    cost: f64,
    iterations: usize,
    converged: bool,
}

fn eval(p: &[f64; 4], v: f64) -> (f64, f64, f64) {
    let em = (-p[1] * v).exp();
    let ep = (p[3] * v).exp();
    (p[0] * em + p[2] * ep, em, ep)
}

/// Half the residual sum of squares; `None` if it overflows.
fn cost(samples: &[(f64, f64)], p: &[f64; 4]) -> Option<f64> {
    let c = 0.5
        * samples
            .iter()
            .map(|&(v, f)| (eval(p, v).0 - f).powi(2))
            .sum::<f64>();
    c.is_finite().then_some(c)
}

fn levenberg_marquardt(samples: &[(f64, f64)], start: [f64; 4], peak: f64) -> LmOutcome {
    let mut p = start;
    let Some(mut c) = cost(samples, &p) else {
        return LmOutcome {
            params: p,
            cost: f64::INFINITY,
            iterations: 0,
            converged: false,
        };
    };
    // residual floor below which further iterations cannot matter
    let floor = 0.5 * samples.len() as f64 * (1e-13 * peak.max(f64::MIN_POSITIVE)).powi(2);
    let mut lambda = 1e-3;
    let mut stalls = 0;

    for iter in 0..MAX_ITERATIONS {
        if c <= floor {
            return LmOutcome {
                params: p,
                cost: c,
                iterations: iter,
                converged: true,
            };
        }
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for &(v, f) in samples {
            let (model, em, ep) = eval(&p, v);
            let r = model - f;
            let j = Vector4::new(em, -p[0] * v * em, ep, p[2] * v * ep);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        if jtr.amax() <= 1e-15 * (c.sqrt() * jtj.diagonal().amax().sqrt()).max(1e-300) {
            return LmOutcome {
                params: p,
                cost: c,
                iterations: iter,
                converged: true,
            };
        }

        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..4 {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = damped.cholesky().map(|ch| ch.solve(&(-jtr))) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
            match cost(samples, &trial) {
                Some(tc) if tc < c => {
                    let rel = (c - tc) / c;
                    let step_small = step.norm() <= 1e-14 * (Vector4::from(p).norm() + 1e-14);
                    p = trial;
                    c = tc;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    if rel < 1e-13 || step_small {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        // no descent possible at any damping: we are at a (numerical) minimum
        if !accepted || stalls >= 10 {
            return LmOutcome {
                params: p,
                cost: c,
                iterations: iter + 1,
                converged: true,
            };
        }
    }
    LmOutcome {
        params: p,
        cost: c,
        iterations: MAX_ITERATIONS,
        converged: false,
    }
}

/// Straight-line fit of `ln|F|` against `v` on each velocity branch.
fn log_linear_start(samples: &[(f64, f64)]) -> Option<[f64; 4]> {
    let branch = |positive: bool| -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64, f64)> = samples
            .iter()
            .filter(|(v, f)| (if positive { *v > 0.0 } else { *v < 0.0 }) && *f != 0.0)
            .map(|&(v, f)| (v, f.abs().ln(), f.signum()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
        if sxx == 0.0 {
            return None;
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let sign = pts.iter().map(|p| p.2).sum::<f64>().signum();
        Some((sign * intercept.exp(), slope))
    };
    let (b, q) = branch(true)?;
    let (a, neg_k) = branch(false)?;
    let start = [a, -neg_k, b, q];
    start.iter().all(|x| x.is_finite()).then_some(start)
}

/// Coarse scan over exponent pairs; amplitudes solved by linear least squares.
fn scan_start(samples: &[(f64, f64)]) -> Option<[f64; 4]> {
    let exps: Vec<f64> = (0..30).map(|i| 1e-3 * 10f64.powf(i as f64 * 4.3 / 29.0)).collect();
    let f = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let mut best: Option<([f64; 4], f64)> = None;
    for &k in &exps {
        for &q in &exps {
            let m = DMatrix::from_fn(samples.len(), 2, |i, j| {
                let v = samples[i].0;
                if j == 0 {
                    (-k * v).exp()
                } else {
                    (q * v).exp()
                }
            });
            let Ok(ab) = m.clone().svd(true, true).solve(&f, 1e-14) else {
                continue;
            };
            let p = [ab[0], k, ab[1], q];
            if let Some(c) = cost(samples, &p) {
                if best.is_none_or(|(_, bc)| c < bc) {
                    best = Some((p, c));
                }
            }
        }
    }
    best.map(|(p, _)| p)
}
