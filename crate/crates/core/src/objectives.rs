//! Ride and handling metrics and the composed objectives of the six
//! optimization cases.

use std::fmt;
use std::str::FromStr;

use crate::comfort::{weighted_rms, WeightingCurve};
use crate::error::{Error, Result};
use crate::simulate::Trajectory;

/// Root mean square.
pub fn rms(signal: &[f64]) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::Domain("rms of an empty signal".into()));
    }
    Ok((signal.iter().map(|v| v * v).sum::<f64>() / signal.len() as f64).sqrt())
}

/// `max − min` of a force history.
pub fn tire_force_range(history: &[f64]) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::Domain("tire force range of an empty history".into()));
    }
    let (lo, hi) = history
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// RMS of the pointwise difference between two acceleration histories.
pub fn tire_accel_penalty(current: &[f64], desired: &[f64]) -> Result<f64> {
    if current.len() != desired.len() {
        return Err(Error::Domain(format!(
            "tire acceleration histories differ in length ({} vs {})",
            current.len(),
            desired.len()
        )));
    }
    let diff: Vec<f64> = current.iter().zip(desired).map(|(a, b)| a - b).collect();
    rms(&diff)
}

/// Weighted body acceleration in excess of 110 % of the baseline.
pub fn comfort_loss(current: f64, baseline: f64) -> Result<f64> {
    loss(current, baseline, "comfort")
}

/// Tire force range in excess of 110 % of the baseline.
pub fn handling_loss(current: f64, baseline: f64) -> Result<f64> {
    loss(current, baseline, "handling")
}

const LOSS_ALLOWANCE: f64 = 1.1;

fn loss(current: f64, baseline: f64, what: &str) -> Result<f64> {
    if !(baseline.is_finite() && baseline > 0.0) {
        return Err(Error::Domain(format!(
            "{what} baseline must be positive, got {baseline}"
        )));
    }
    Ok(current - LOSS_ALLOWANCE * baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    Quarter1,
    Quarter2,
    Quarter3,
    Half1,
    Half2,
    Half3,
}

impl CaseId {
    pub const ALL: [CaseId; 6] = [
        CaseId::Quarter1,
        CaseId::Quarter2,
        CaseId::Quarter3,
        CaseId::Half1,
        CaseId::Half2,
        CaseId::Half3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseId::Quarter1 => "quarter-1",
            CaseId::Quarter2 => "quarter-2",
            CaseId::Quarter3 => "quarter-3",
            CaseId::Half1 => "half-1",
            CaseId::Half2 => "half-2",
            CaseId::Half3 => "half-3",
        }
    }

    pub fn is_half(self) -> bool {
        matches!(self, CaseId::Half1 | CaseId::Half2 | CaseId::Half3)
    }

    /// Names of the three objective components, in weight order.
    pub fn component_names(self) -> [&'static str; 3] {
        match self {
            CaseId::Quarter1 => ["Z_s_w", "I2_penalty", "unused"],
            CaseId::Quarter2 | CaseId::Quarter3 => ["Z_s_w", "dF_tire", "unused"],
            CaseId::Half1 | CaseId::Half2 => ["Z_s_w", "dF_tire", "Phi_s"],
            CaseId::Half3 => ["C_lost", "H_lost", "Phi_s"],
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown case {s:?}")))
    }
}

/// Reference quantities some cases compare against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Baseline {
    /// Unsprung acceleration of the reference suspension (quarter-1), on the
    /// same trimmed time grid as the evaluated trajectory.
    pub desired_tire_accel: Option<Vec<f64>>,
    /// Weighted body acceleration RMS of the previous optimum (half-3).
    pub body_accel_opt: Option<f64>,
    /// Tire force range of the previous optimum (half-3).
    pub tire_range_opt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub case: CaseId,
    pub weights: [f64; 3],
    /// Divisors applied to the raw components before weighting.
    pub normalization: [f64; 3],
    pub baseline: Baseline,
    pub weighting: WeightingCurve,
}

impl ObjectiveSpec {
    pub fn new(case: CaseId, weights: [f64; 3]) -> Self {
        Self {
            case,
            weights,
            normalization: [1.0; 3],
            baseline: Baseline::default(),
            weighting: WeightingCurve::VerticalWk,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!(
                "objective weights must be non-negative, got {:?}",
                self.weights
            )));
        }
        if self.normalization.iter().any(|n| !(n.is_finite() && *n > 0.0)) {
            return Err(Error::Config(format!(
                "normalization constants must be positive, got {:?}",
                self.normalization
            )));
        }
        if self.case == CaseId::Half1 && self.weights[2] != 0.0 {
            return Err(Error::Config("half-1 fixes the roll weight w3 to 0".into()));
        }
        match self.case {
            CaseId::Quarter1 if self.baseline.desired_tire_accel.is_none() => Err(Error::Config(
                "quarter-1 needs a desired tire acceleration history".into(),
            )),
            CaseId::Half3
                if self.baseline.body_accel_opt.is_none()
                    || self.baseline.tire_range_opt.is_none() =>
            {
                Err(Error::Config(
                    "half-3 needs a baseline (optimized comfort and handling values)".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Sets each normalization constant to the raw component value of
    /// `traj`; zero or non-finite components keep a divisor of 1. The half-3
    /// losses are normalized by their baseline values instead.
    pub fn normalize_at(&mut self, traj: &Trajectory) -> Result<()> {
        let eval = evaluate_objective(&ObjectiveSpec {
            normalization: [1.0; 3],
            ..self.clone()
        }, traj)?;
        for (slot, raw) in self.normalization.iter_mut().zip(eval.components) {
            *slot = if raw.is_finite() && raw > 0.0 { raw } else { 1.0 };
        }
        if self.case == CaseId::Half3 {
            self.normalization[0] = self.baseline.body_accel_opt.unwrap_or(1.0);
            self.normalization[1] = self.baseline.tire_range_opt.unwrap_or(1.0);
        }
        Ok(())
    }
}

/// All metrics of one evaluated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSet {
    pub z_s_w: f64,
    pub df_tire: f64,
    pub phi_s: f64,
    pub i2_penalty: Option<f64>,
    pub c_lost: Option<f64>,
    pub h_lost: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    /// Raw (unnormalized) components in weight order.
    pub components: [f64; 3],
    pub metrics: MetricSet,
}

/// Metrics common to all cases.
pub fn compute_metrics(traj: &Trajectory, weighting: &WeightingCurve) -> Result<MetricSet> {
    let z_s_w = weighted_rms(&traj.body_accel, traj.dt, weighting)?;
    let df_tire = traj
        .tire_forces
        .iter()
        .map(|f| tire_force_range(f))
        .sum::<Result<f64>>()?;
    let phi_s = match traj.channel("phi_s") {
        Some(phi) => rms(phi)?,
        None => 0.0,
    };
    Ok(MetricSet {
        z_s_w,
        df_tire,
        phi_s,
        ..Default::default()
    })
}

pub fn evaluate_objective(spec: &ObjectiveSpec, traj: &Trajectory) -> Result<ObjectiveValue> {
    spec.validate()?;
    if traj.trimmed_at.is_none() {
        return Err(Error::Domain(
            "objectives are evaluated on trimmed trajectories only".into(),
        ));
    }
    if spec.case.is_half() != traj.roll_accel.is_some() {
        return Err(Error::Config(format!(
            "case {} does not match the simulated model",
            spec.case
        )));
    }
    let mut m = compute_metrics(traj, &spec.weighting)?;
    let components = match spec.case {
        CaseId::Quarter1 => {
            let desired = spec.baseline.desired_tire_accel.as_deref().unwrap_or_default();
            let i2 = tire_accel_penalty(&traj.unsprung_accel, desired)?;
            m.i2_penalty = Some(i2);
            [m.z_s_w, i2, 0.0]
        }
        CaseId::Quarter2 | CaseId::Quarter3 => [m.z_s_w, m.df_tire, 0.0],
        CaseId::Half1 | CaseId::Half2 => [m.z_s_w, m.df_tire, m.phi_s],
        CaseId::Half3 => {
            let c = comfort_loss(m.z_s_w, spec.baseline.body_accel_opt.unwrap_or(f64::NAN))?;
            let h = handling_loss(m.df_tire, spec.baseline.tire_range_opt.unwrap_or(f64::NAN))?;
            m.c_lost = Some(c);
            m.h_lost = Some(h);
            [c, h, m.phi_s]
        }
    };
    let total = components
        .iter()
        .zip(spec.weights)
        .zip(spec.normalization)
        .map(|((c, w), n)| w * c / n)
        .sum();
    Ok(ObjectiveValue {
        total,
        components,
        metrics: m,
    })
}
