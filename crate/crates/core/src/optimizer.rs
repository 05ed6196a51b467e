//! Box-constrained projected BFGS with finite-difference gradients, plus
//! dense gridding of two-variable objective surfaces.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::format_rows;

/// One objective evaluation: the scalar being minimized and any components
/// worth keeping in the history.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evaluation {
    pub value: f64,
    pub components: Vec<f64>,
}

impl From<f64> for Evaluation {
    fn from(value: f64) -> Self {
        Self {
            value,
            components: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignVector {
    names: Vec<String>,
    values: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DesignVector {
    pub fn new(names: Vec<String>, values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = names.len();
        if n == 0 || values.len() != n || lower.len() != n || upper.len() != n {
            return Err(Error::Input(
                "design vector needs matching, non-empty names, values and bounds".into(),
            ));
        }
        for i in 0..n {
            let (lo, hi, v) = (lower[i], upper[i], values[i]);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Input(format!(
                    "bounds of {} must be finite with lower <= upper, got [{lo}, {hi}]",
                    names[i]
                )));
            }
            if !(v >= lo && v <= hi) {
                return Err(Error::Input(format!(
                    "{} = {v} lies outside [{lo}, {hi}]",
                    names[i]
                )));
            }
        }
        Ok(Self {
            names,
            values,
            lower,
            upper,
        })
    }

    /// Scaling coefficients sharing one strictly positive box.
    pub fn scales(names: &[&str], values: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0) {
            return Err(Error::Input(format!(
                "scale bounds must be positive, got lower = {lower}"
            )));
        }
        let n = names.len();
        Self::new(
            names.iter().map(|s| s.to_string()).collect(),
            values,
            vec![lower; n],
            vec![upper; n],
        )
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Copy with new values, which must respect the bounds.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.names.clone(), values, self.lower.clone(), self.upper.clone())
    }

    fn project(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeOptions {
    /// Stop once the projected-gradient norm falls below this.
    pub gradient_tolerance: f64,
    /// Stop once an accepted step is shorter than `step_tolerance·(1 + |x|)`.
    pub step_tolerance: f64,
    pub max_evaluations: usize,
    pub max_iterations: usize,
    /// Finite-difference step relative to `max(|x_i|, 1)`.
    pub fd_relative_step: f64,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            gradient_tolerance: 1e-6,
            step_tolerance: 1e-9,
            max_evaluations: 400,
            max_iterations: 200,
            fd_relative_step: 1e-4,
            armijo: 1e-4,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    EvaluationBudget,
    IterationLimit,
    LineSearchFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::StepTolerance => "step-tolerance",
            Termination::EvaluationBudget => "evaluation-budget",
            Termination::IterationLimit => "iteration-limit",
            Termination::LineSearchFailure => "line-search-failure",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub values: Vec<f64>,
    pub total: f64,
    pub components: Vec<f64>,
    /// Length of the step that produced this iterate (0 for the start).
    pub step_norm: f64,
    /// Projected-gradient norm at this iterate; NaN when not computed.
    pub gradient_norm: f64,
    /// Objective evaluations spent so far.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub names: Vec<String>,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl RunHistory {
    /// CSV with one row per accepted iterate.
    pub fn to_csv(&self, component_names: &[&str]) -> String {
        let ncomp = self.records.first().map_or(0, |r| r.components.len());
        let mut header = vec!["iteration".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("total".into());
        for i in 0..ncomp {
            header.push(
                component_names
                    .get(i)
                    .map_or_else(|| format!("component_{i}"), |s| s.to_string()),
            );
        }
        header.extend(["step_norm", "gradient_norm", "evaluations"].map(String::from));
        let rows: Vec<Vec<f64>> = self
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.iteration as f64];
                row.extend(&r.values);
                row.push(r.total);
                row.extend(&r.components);
                row.extend([r.step_norm, r.gradient_norm, r.evaluations as f64]);
                row
            })
            .collect();
        format_rows(Some(&header.join(",")), ",", rows.iter().map(Vec::as_slice))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub design: DesignVector,
    pub evaluation: Evaluation,
    pub history: RunHistory,
    pub evaluations: usize,
}

struct Counter<'a, F> {
    objective: &'a F,
    used: usize,
}

impl<F, E> Counter<'_, F>
where
    F: Fn(&[f64]) -> E + Sync,
    E: Into<Evaluation> + Send,
{
    fn eval(&mut self, x: &[f64]) -> Evaluation {
        self.used += 1;
        (self.objective)(x).into()
    }

    fn eval_many(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        self.used += points.len();
        let f = self.objective;
        points.par_iter().map(|p| f(p).into().value).collect()
    }
}

/// Central differences with probes clipped to the box; one-sided at a bound.
fn gradient<F, E>(
    counter: &mut Counter<'_, F>,
    design: &DesignVector,
    x: &[f64],
    fx: f64,
    rel: f64,
) -> Option<Vec<f64>>
where
    F: Fn(&[f64]) -> E + Sync,
    E: Into<Evaluation> + Send,
{
    let n = x.len();
    // (variable, lower probe?, upper probe?) and the step used
    let mut plan = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let (lo, hi) = (design.lower[i], design.upper[i]);
        let mut h = rel * x[i].abs().max(1.0);
        h = h.min(0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
        let down = x[i] - h >= lo;
        let up = x[i] + h <= hi;
        let (down, up) = match (down, up) {
            (false, false) => (true, true),
            other => other,
        };
        for (use_it, sign) in [(down, -1.0), (up, 1.0)] {
            if use_it {
                let mut p = x.to_vec();
                p[i] = (x[i] + sign * h).clamp(lo, hi);
                points.push(p);
            }
        }
        plan.push((down, up, h));
    }
    let values = counter.eval_many(&points);
    let mut it = values.into_iter();
    let mut g = Vec::with_capacity(n);
    for (down, up, h) in plan {
        let d = match (down, up) {
            (true, true) => {
                let fm = it.next()?;
                let fp = it.next()?;
                (fp - fm) / (2.0 * h)
            }
            (true, false) => (fx - it.next()?) / h,
            (false, true) => (it.next()? - fx) / h,
            (false, false) => unreachable!(),
        };
        if !d.is_finite() {
            return None;
        }
        g.push(d);
    }
    Some(g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `‖P(x − g) − x‖`, zero exactly at a KKT point of the box problem.
fn projected_gradient_norm(design: &DesignVector, x: &[f64], g: &[f64]) -> f64 {
    let mut p: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    design.project(&mut p);
    let d: Vec<f64> = p.iter().zip(x).map(|(a, b)| a - b).collect();
    norm(&d)
}

/// Variables sitting on a bound with the gradient pushing outward.
fn active_set(design: &DesignVector, x: &[f64], g: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| {
            let span = design.upper[i] - design.lower[i];
            let eps = 1e-12 * span.max(1.0);
            (x[i] <= design.lower[i] + eps && g[i] > 0.0)
                || (x[i] >= design.upper[i] - eps && g[i] < 0.0)
        })
        .collect()
}

struct InverseHessian {
    n: usize,
    h: Vec<f64>,
    fresh: bool,
}

impl InverseHessian {
    fn identity(n: usize, scale: f64) -> Self {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        Self { n, h, fresh: true }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| dot(&self.h[i * self.n..(i + 1) * self.n], v))
            .collect()
    }

    fn update(&mut self, s: &[f64], y: &[f64]) {
        let sy = dot(s, y);
        if !(sy > 1e-12 * norm(s) * norm(y)) {
            return;
        }
        let n = self.n;
        if self.fresh {
            // rescale the initial guess to the observed curvature
            let scale = sy / dot(y, y);
            *self = Self::identity(n, scale);
            self.fresh = false;
        }
        let rho = 1.0 / sy;
        let hy = self.apply(y);
        let yhy = dot(y, &hy);
        for i in 0..n {
            for j in 0..n {
                self.h[i * n + j] +=
                    (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
            }
        }
    }
}

/// Minimizes `objective` over the box of `x0`.
///
/// The objective is called concurrently for gradient probes and must be
/// pure. Returns the last accepted iterate, which is also the best one.
pub fn minimize<F, E>(objective: F, x0: &DesignVector, opts: &MinimizeOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> E + Sync,
    E: Into<Evaluation> + Send,
{
    if !(opts.fd_relative_step > 0.0 && opts.armijo > 0.0 && opts.armijo < 1.0) {
        return Err(Error::Optimizer(
            "finite-difference step and Armijo constant must be in (0, 1)".into(),
        ));
    }
    let n = x0.len();
    let mut counter = Counter {
        objective: &objective,
        used: 0,
    };
    let mut x = x0.values.clone();
    let mut fx = counter.eval(&x);
    if !fx.value.is_finite() {
        return Err(Error::Optimizer(format!(
            "objective is not finite at the initial design ({})",
            fx.value
        )));
    }

    let mut records = vec![IterationRecord {
        iteration: 0,
        values: x.clone(),
        total: fx.value,
        components: fx.components.clone(),
        step_norm: 0.0,
        gradient_norm: f64::NAN,
        evaluations: counter.used,
    }];
    let mut hess: Option<InverseHessian> = None;
    let mut g: Option<Vec<f64>> = None;

    let termination = 'outer: loop {
        let grad = match g.take() {
            Some(g) => g,
            None => {
                if counter.used + 2 * n > opts.max_evaluations {
                    break Termination::EvaluationBudget;
                }
                match gradient(&mut counter, x0, &x, fx.value, opts.fd_relative_step) {
                    Some(g) => g,
                    None => break Termination::LineSearchFailure,
                }
            }
        };
        let pg = projected_gradient_norm(x0, &x, &grad);
        records.last_mut().unwrap().gradient_norm = pg;
        records.last_mut().unwrap().evaluations = counter.used;
        if pg <= opts.gradient_tolerance {
            break Termination::GradientTolerance;
        }
        if records.len() > opts.max_iterations {
            break Termination::IterationLimit;
        }

        let active = active_set(x0, &x, &grad);
        let free_grad: Vec<f64> = grad
            .iter()
            .zip(&active)
            .map(|(g, a)| if *a { 0.0 } else { *g })
            .collect();
        let h = hess.get_or_insert_with(|| {
            InverseHessian::identity(n, 1.0 / norm(&free_grad).max(1.0))
        });

        let mut tried_reset = false;
        loop {
            let mut d: Vec<f64> = h.apply(&free_grad).into_iter().map(|v| -v).collect();
            for (di, a) in d.iter_mut().zip(&active) {
                if *a {
                    *di = 0.0;
                }
            }
            if !(dot(&d, &grad) < 0.0) {
                *h = InverseHessian::identity(n, 1.0 / norm(&free_grad).max(1.0));
                tried_reset = true;
                continue;
            }

            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                if counter.used >= opts.max_evaluations {
                    break 'outer Termination::EvaluationBudget;
                }
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
                x0.project(&mut trial);
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                if norm(&s) <= opts.step_tolerance * (1.0 + norm(&x)) {
                    break;
                }
                let ft = counter.eval(&trial);
                if ft.value.is_finite() && ft.value <= fx.value + opts.armijo * dot(&grad, &s) {
                    accepted = Some((trial, s, ft));
                    break;
                }
                alpha *= 0.5;
            }

            match accepted {
                Some((trial, s, ft)) => {
                    let step = norm(&s);
                    let x_norm = norm(&x);
                    x = trial;
                    fx = ft;
                    records.push(IterationRecord {
                        iteration: records.len(),
                        values: x.clone(),
                        total: fx.value,
                        components: fx.components.clone(),
                        step_norm: step,
                        gradient_norm: f64::NAN,
                        evaluations: counter.used,
                    });
                    if step <= opts.step_tolerance * (1.0 + x_norm) {
                        break 'outer Termination::StepTolerance;
                    }
                    if counter.used + 2 * n > opts.max_evaluations {
                        break 'outer Termination::EvaluationBudget;
                    }
                    let Some(new_grad) =
                        gradient(&mut counter, x0, &x, fx.value, opts.fd_relative_step)
                    else {
                        break 'outer Termination::LineSearchFailure;
                    };
                    let y: Vec<f64> = new_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                    h.update(&s, &y);
                    g = Some(new_grad);
                    break;
                }
                None if !tried_reset && !h.fresh => {
                    *h = InverseHessian::identity(n, 1.0 / norm(&free_grad).max(1.0));
                    tried_reset = true;
                }
                None => {
                    // no progress possible along the steepest descent either
                    let tiny = records.len() > 1
                        || norm(&free_grad) * opts.step_tolerance <= opts.gradient_tolerance;
                    break 'outer if tiny {
                        Termination::StepTolerance
                    } else {
                        Termination::LineSearchFailure
                    };
                }
            }
        }
    };

    Ok(Minimum {
        design: x0.with_values(x)?,
        evaluation: fx,
        history: RunHistory {
            names: x0.names.clone(),
            records,
            termination,
        },
        evaluations: counter.used,
    })
}

/// Axis of a grid: `resolution` evenly spaced nodes from `lo` to `hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || resolution < 2 {
            return Err(Error::Input(format!(
                "grid axis needs lo < hi and at least 2 nodes, got [{lo}, {hi}] × {resolution}"
            )));
        }
        Ok(Self { lo, hi, resolution })
    }

    pub fn nodes(&self) -> Vec<f64> {
        let last = (self.resolution - 1) as f64;
        (0..self.resolution)
            .map(|i| {
                if i == self.resolution - 1 {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last
                }
            })
            .collect()
    }
}

/// Objective values on a 2-D grid, row-major with `x` as the row index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSurface {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `None` where the objective was not finite.
    pub values: Vec<Option<f64>>,
}

impl GridSurface {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.y.len() + j]
    }

    /// Smallest value and its `(i, j)` cell; the first cell wins ties.
    pub fn argmin(&self) -> Option<((usize, usize), f64)> {
        let ny = self.y.len();
        let mut best: Option<(usize, f64)> = None;
        for (k, v) in self.values.iter().enumerate() {
            if let Some(v) = *v {
                if best.is_none_or(|(_, b)| v < b) {
                    best = Some((k, v));
                }
            }
        }
        best.map(|(k, v)| ((k / ny, k % ny), v))
    }

    /// Whitespace-separated `x y value` lines; missing cells are `NaN`.
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .x
            .iter()
            .flat_map(|&xi| self.y.iter().map(move |&yj| (xi, yj)))
            .zip(&self.values)
            .map(|((xi, yj), v)| vec![xi, yj, v.unwrap_or(f64::NAN)])
            .collect();
        format_rows(Some("# x y value"), " ", rows.iter().map(Vec::as_slice))
    }
}

/// Evaluates `objective` on the Cartesian product of two axes, in parallel.
pub fn grid_surface<F, E>(objective: F, axes: [GridAxis; 2]) -> GridSurface
where
    F: Fn(&[f64]) -> E + Sync,
    E: Into<Evaluation> + Send,
{
    let x = axes[0].nodes();
    let y = axes[1].nodes();
    let points: Vec<[f64; 2]> = x
        .iter()
        .flat_map(|&xi| y.iter().map(move |&yj| [xi, yj]))
        .collect();
    let values = points
        .par_iter()
        .map(|p| {
            let v = objective(p).into().value;
            v.is_finite().then_some(v)
        })
        .collect();
    GridSurface { x, y, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Mutex;

    fn design(values: Vec<f64>, lo: f64, hi: f64) -> DesignVector {
        let names: Vec<String> = (0..values.len()).map(|i| format!("x{i}")).collect();
        let n = values.len();
        DesignVector::new(names, values, vec![lo; n], vec![hi; n]).unwrap()
    }

    #[test]
    fn one_dimensional_quadratic() {
        let x0 = design(vec![0.0], 0.0, 10.0);
        let m = minimize(|x: &[f64]| (x[0] - 2.0).powi(2), &x0, &MinimizeOptions::default()).unwrap();
        assert!((m.design.values()[0] - 2.0).abs() < 1e-6, "{:?}", m.design.values());
    }

    #[test]
    fn bound_active_quadratic_satisfies_kkt() {
        let x0 = DesignVector::new(
            vec!["x".into(), "y".into()],
            vec![2.5, 1.0],
            vec![1.0, -10.0],
            vec![3.0, 10.0],
        )
        .unwrap();
        let f = |p: &[f64]| p[0] * p[0] + p[1] * p[1];
        let opts = MinimizeOptions::default();
        let m = minimize(f, &x0, &opts).unwrap();
        let v = m.design.values();
        assert_eq!(v[0], 1.0);
        assert!(v[1].abs() < 1e-6, "{v:?}");
        let g = [2.0 * v[0], 2.0 * v[1]];
        assert!(g[0] >= 0.0);
        assert!(projected_gradient_norm(&m.design, v, &g) < 1e-6);
    }

    #[test]
    fn rosenbrock() {
        let f = |p: &[f64]| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2);
        let x0 = design(vec![-1.2, 1.0], -10.0, 10.0);
        let opts = MinimizeOptions {
            max_evaluations: 5000,
            ..Default::default()
        };
        let m = minimize(f, &x0, &opts).unwrap();
        let v = m.design.values();
        assert!(
            (v[0] - 1.0).abs() < 1e-4 && (v[1] - 1.0).abs() < 1e-4,
            "{v:?} {:?}",
            m.history.termination
        );
    }

    #[test]
    fn scales_must_be_positive() {
        assert!(DesignVector::scales(&["k"], vec![1.0], 0.0, 5.0).is_err());
        assert!(DesignVector::scales(&["k"], vec![1.0], 0.2, 5.0).is_ok());
        assert!(DesignVector::scales(&["k"], vec![6.0], 0.2, 5.0).is_err());
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let x0 = design(vec![1.0], 0.5, 2.0);
        assert!(minimize(|_: &[f64]| f64::NAN, &x0, &MinimizeOptions::default()).is_err());
    }

    #[test]
    fn non_finite_region_is_avoided() {
        let x0 = design(vec![1.0], 0.5, 10.0);
        let f = |x: &[f64]| if x[0] > 1.5 { f64::INFINITY } else { (x[0] - 3.0).powi(2) };
        let m = minimize(f, &x0, &MinimizeOptions::default()).unwrap();
        assert!(m.evaluation.value.is_finite());
        assert!(m.evaluation.value < 4.0);
    }

    #[test]
    fn budget_is_respected() {
        let x0 = design(vec![0.8, 3.0], 1e-3, 20.0);
        let f = |p: &[f64]| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2);
        let opts = MinimizeOptions {
            max_evaluations: 25,
            ..Default::default()
        };
        let m = minimize(f, &x0, &opts).unwrap();
        assert!(m.evaluations <= 25);
        assert_eq!(m.history.termination, Termination::EvaluationBudget);
    }

    #[test]
    fn history_csv_roundtrips() {
        let x0 = design(vec![0.5, 0.5], 0.1, 5.0);
        let f = |p: &[f64]| Evaluation {
            value: (p[0] - 1.0).powi(2) + (p[1] - 2.0).powi(2),
            components: vec![p[0], p[1]],
        };
        let m = minimize(f, &x0, &MinimizeOptions::default()).unwrap();
        let csv = m.history.to_csv(&["a"]);
        let (header, rows) = crate::io::parse_csv(&csv).unwrap();
        assert_eq!(header[..6], ["iteration", "x0", "x1", "total", "a", "component_1"]);
        assert_eq!(rows.len(), m.history.records.len());
        assert_eq!(rows.last().unwrap()[3], m.evaluation.value);
    }

    #[test]
    fn grid_examples() {
        let axes = [GridAxis::new(0.0, 1.0, 5).unwrap(), GridAxis::new(-1.0, 1.0, 7).unwrap()];
        let g = grid_surface(|_: &[f64]| 3.0, axes);
        assert_eq!((g.x.len(), g.y.len(), g.values.len()), (5, 7, 35));
        assert!(g.values.iter().all(|v| *v == Some(3.0)));
        assert_eq!(g.argmin(), Some(((0, 0), 3.0)));

        let g = grid_surface(|p: &[f64]| (p[0] - 0.3).powi(2) + (p[1] - 0.4).powi(2), axes);
        let ((i, j), _) = g.argmin().unwrap();
        assert_eq!((g.x[i], g.y[j]), (0.25, g.y[4]));
        assert!((g.y[4] - 1.0 / 3.0).abs() < 1e-15);

        let g = grid_surface(|p: &[f64]| if p[0] > 0.5 { f64::NAN } else { p[1] }, axes);
        assert!(g.value(4, 0).is_none());
        assert_eq!(g.argmin().unwrap().0, (0, 0));
        let parsed = crate::io::parse_table(&g.to_text()).unwrap();
        assert_eq!(parsed.len(), 35);
        assert!(parsed[34][2].is_nan());
        assert!(GridAxis::new(0.0, 1.0, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monotone_and_feasible(
            cx in 0.0..6.0f64, cy in 0.0..6.0f64,
            sx in 0.3..3.0f64, sy in 0.3..3.0f64,
            rot in -0.9..0.9f64,
            start in proptest::array::uniform2(0.2..5.0f64),
        ) {
            let seen = Mutex::new(Vec::new());
            let f = |p: &[f64]| {
                seen.lock().unwrap().push([p[0], p[1]]);
                let (dx, dy) = (p[0] - cx, p[1] - cy);
                sx * dx * dx + sy * dy * dy + rot * dx * dy + 0.1 * (dx * 3.0).sin()
            };
            let x0 = design(start.to_vec(), 0.2, 5.0);
            let m = minimize(f, &x0, &MinimizeOptions::default()).unwrap();
            for w in m.history.records.windows(2) {
                prop_assert!(w[1].total <= w[0].total);
            }
            for p in seen.into_inner().unwrap() {
                prop_assert!(p.iter().all(|v| (0.2..=5.0).contains(v)), "{p:?}");
            }
        }

        #[test]
        fn deterministic(start in proptest::array::uniform2(0.2..5.0f64)) {
            let f = |p: &[f64]| (p[0] - 1.3).powi(4) + (p[1] * p[0] - 2.0).powi(2);
            let x0 = design(start.to_vec(), 0.2, 5.0);
            let a = minimize(f, &x0, &MinimizeOptions::default()).unwrap();
            let b = minimize(f, &x0, &MinimizeOptions::default()).unwrap();
            prop_assert_eq!(a.history, b.history);
        }
    }
}
