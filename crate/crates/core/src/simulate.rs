//! Fixed-step RK4 integration of the vehicle models over a road profile.

use crate::error::{Error, Result};
use crate::io::format_columns;
use crate::road::RoadProfile;
use crate::vehicle::{RoadInput, VehicleModel};

/// Sampled response of one simulation run.
///
/// Samples sit on the half-open grid `t = t0 + i·dt`; every channel has the
/// same length. Acceleration channels come from the derivative function at
/// each stored sample, not from differencing velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub state_names: Vec<&'static str>,
    /// Channel-major state history: `states[c][i]`.
    pub states: Vec<Vec<f64>>,
    /// Road elevation seen by each wheel.
    pub road: Vec<Vec<f64>>,
    pub body_accel: Vec<f64>,
    pub unsprung_accel: Vec<f64>,
    /// Sprung roll acceleration; half car only.
    pub roll_accel: Option<Vec<f64>>,
    /// Per-wheel dynamic tire force.
    pub tire_forces: Vec<Vec<f64>>,
    /// The total tire load went negative somewhere.
    pub liftoff: bool,
    /// Set once the start-up transient has been cut off.
    pub trimmed_at: Option<f64>,
    /// State after the last integration step (one `dt` past the last sample).
    pub final_state: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// State channel by name (`"z_s"`, `"phi_s"`, ...).
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.state_names
            .iter()
            .position(|n| *n == name)
            .map(|i| self.states[i].as_slice())
    }

    pub fn wheels(&self) -> usize {
        self.tire_forces.len()
    }

    /// CSV with columns t, states, accelerations, tire forces.
    pub fn to_csv(&self) -> String {
        let mut header: Vec<String> = vec!["t".into()];
        header.extend(self.state_names.iter().map(|s| s.to_string()));
        header.push("a_s".into());
        header.push("a_u".into());
        if self.roll_accel.is_some() {
            header.push("alpha_s".into());
        }
        let wheel_names: &[&str] = if self.wheels() == 1 {
            &["tire"]
        } else {
            &["tire_left", "tire_right"]
        };
        header.extend(wheel_names.iter().map(|s| s.to_string()));

        let mut cols: Vec<&[f64]> = vec![&self.t];
        cols.extend(self.states.iter().map(|c| c.as_slice()));
        cols.push(&self.body_accel);
        cols.push(&self.unsprung_accel);
        if let Some(r) = &self.roll_accel {
            cols.push(r);
        }
        cols.extend(self.tire_forces.iter().map(|c| c.as_slice()));
        format_columns(Some(&header.join(",")), ",", &cols)
    }
}

/// Integrates `model` from `x0` for `duration` seconds with step `dt`.
///
/// The road is evaluated by linear interpolation at every RK4 stage, which
/// also covers `dt != road.dt()`.
pub fn integrate<M: VehicleModel + ?Sized>(
    model: &M,
    road: &RoadProfile,
    x0: &[f64],
    dt: f64,
    duration: f64,
) -> Result<Trajectory> {
    let dim = model.dim();
    let wheels = model.wheels();
    if x0.len() != dim {
        return Err(Error::Input(format!(
            "initial state has {} components, model needs {dim}",
            x0.len()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("initial state must be finite".into()));
    }
    if !(dt.is_finite() && dt > 0.0 && duration.is_finite() && duration >= dt) {
        return Err(Error::Domain(format!(
            "need 0 < dt <= duration, got dt={dt}, duration={duration}"
        )));
    }
    let steps = (duration / dt).round() as usize;
    if road.duration() + 1e-9 * duration < (steps - 1) as f64 * dt + dt {
        return Err(Error::Domain(format!(
            "road covers {} s, simulation needs {duration} s",
            road.duration()
        )));
    }

    let road_at = |t: f64, buf: &mut [RoadInput]| {
        for (w, slot) in buf.iter_mut().enumerate() {
            *slot = road.sample(w, t);
        }
    };

    let mut t_grid = Vec::with_capacity(steps);
    let mut states = vec![Vec::with_capacity(steps); dim];
    let mut road_hist = vec![Vec::with_capacity(steps); wheels];
    let mut body = Vec::with_capacity(steps);
    let mut unsprung = Vec::with_capacity(steps);
    let mut roll = (dim > 4).then(|| Vec::with_capacity(steps));
    let mut tires = vec![Vec::with_capacity(steps); wheels];
    let mut liftoff = false;

    let mut x = x0.to_vec();
    let mut r0 = vec![RoadInput::default(); wheels];
    let mut rm = r0.clone();
    let mut r1 = r0.clone();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    let mut tmp = vec![0.0; dim];
    let mut tire_buf = vec![0.0; wheels];

    for i in 0..steps {
        let t = i as f64 * dt;
        road_at(t, &mut r0);
        road_at(t + 0.5 * dt, &mut rm);
        road_at(t + dt, &mut r1);

        model.derivative(&x, &r0, &mut k1);
        model.tire_forces(&x, &r0, &mut tire_buf);
        t_grid.push(t);
        for c in 0..dim {
            states[c].push(x[c]);
        }
        for w in 0..wheels {
            road_hist[w].push(r0[w].z);
            tires[w].push(tire_buf[w]);
        }
        liftoff |= model.lifts_off(&tire_buf);
        body.push(k1[1]);
        unsprung.push(k1[3]);
        if let Some(r) = roll.as_mut() {
            r.push(k1[5]);
        }

        for c in 0..dim {
            tmp[c] = x[c] + 0.5 * dt * k1[c];
        }
        model.derivative(&tmp, &rm, &mut k2);
        for c in 0..dim {
            tmp[c] = x[c] + 0.5 * dt * k2[c];
        }
        model.derivative(&tmp, &rm, &mut k3);
        for c in 0..dim {
            tmp[c] = x[c] + dt * k3[c];
        }
        model.derivative(&tmp, &r1, &mut k4);
        for c in 0..dim {
            x[c] += dt / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t + dt });
        }
    }

    Ok(Trajectory {
        dt,
        t: t_grid,
        state_names: model.state_names().to_vec(),
        states,
        road: road_hist,
        body_accel: body,
        unsprung_accel: unsprung,
        roll_accel: roll,
        tire_forces: tires,
        liftoff,
        trimmed_at: None,
        final_state: x,
    })
}

/// Drops samples before `t_skip` (measured from the first sample) and marks
/// the result as trimmed.
pub fn trim_transient(traj: &Trajectory, t_skip: f64) -> Result<Trajectory> {
    let span = traj.len() as f64 * traj.dt;
    if !(t_skip >= 0.0 && t_skip < span) {
        return Err(Error::Domain(format!(
            "t_skip must be in [0, {span}), got {t_skip}"
        )));
    }
    let start = (t_skip / traj.dt - 1e-9).ceil().max(0.0) as usize;
    let cut = |v: &Vec<f64>| v[start..].to_vec();
    Ok(Trajectory {
        dt: traj.dt,
        t: cut(&traj.t),
        state_names: traj.state_names.clone(),
        states: traj.states.iter().map(cut).collect(),
        road: traj.road.iter().map(cut).collect(),
        body_accel: cut(&traj.body_accel),
        unsprung_accel: cut(&traj.unsprung_accel),
        roll_accel: traj.roll_accel.as_ref().map(cut),
        tire_forces: traj.tire_forces.iter().map(cut).collect(),
        liftoff: traj.liftoff,
        trimmed_at: Some(traj.trimmed_at.unwrap_or(0.0) + t_skip),
        final_state: traj.final_state.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::road::RoadMeta;
    use crate::vehicle::{QuarterCar, QuarterCarParams};
    use crate::characteristics::ScaledCharacteristic;

    fn flat(duration: f64, dt: f64) -> RoadProfile {
        let n = (duration / dt).round() as usize + 1;
        RoadProfile::new(
            dt,
            vec![vec![0.0; n]],
            RoadMeta {
                kind: "flat".into(),
                seeds: vec![],
                params: vec![],
            },
        )
        .unwrap()
    }

    fn rms(x: &[f64]) -> f64 {
        (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
    }

    #[test]
    fn equilibrium_stays_put() {
        let car = QuarterCar::new(QuarterCarParams::desk_default()).unwrap();
        let tr = integrate(&car, &flat(2.0, 1e-3), &[0.0; 4], 1e-3, 2.0).unwrap();
        assert_eq!(tr.len(), 2000);
        assert!(tr.states.iter().flatten().all(|&v| v == 0.0));
        assert!(!tr.liftoff);
    }

    #[test]
    fn trim_counts_and_identity() {
        let car = QuarterCar::new(QuarterCarParams::desk_default()).unwrap();
        let tr = integrate(&car, &flat(2.0, 1e-3), &[0.01, 0.0, 0.0, 0.0], 1e-3, 2.0).unwrap();
        let same = trim_transient(&tr, 0.0).unwrap();
        assert_eq!(same.states, tr.states);
        assert_eq!(same.trimmed_at, Some(0.0));
        let half = trim_transient(&tr, 1.0).unwrap();
        assert_eq!(half.len(), tr.len() / 2);
        assert_eq!(half.t[0], 1.0);
        assert!(trim_transient(&tr, 2.0).is_err());
        // decaying free vibration: trimmed metric is smaller
        assert!(rms(&half.body_accel) < rms(&tr.body_accel));
    }

    #[test]
    fn divergence_is_reported() {
        let mut p = QuarterCarParams::desk_default();
        p.sprung_mass = 1e-9;
        p.spring = ScaledCharacteristic::linear(1e12).unwrap();
        let car = QuarterCar::new(p).unwrap();
        let err = integrate(&car, &flat(5.0, 1e-3), &[0.01, 0.0, 0.0, 0.0], 1e-3, 5.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn road_too_short() {
        let car = QuarterCar::new(QuarterCarParams::desk_default()).unwrap();
        assert!(integrate(&car, &flat(1.0, 1e-3), &[0.0; 4], 1e-3, 2.0).is_err());
        assert!(integrate(&car, &flat(1.0, 1e-3), &[0.0; 3], 1e-3, 1.0).is_err());
    }

    #[test]
    fn csv_has_consistent_columns() {
        let car = QuarterCar::new(QuarterCarParams::desk_default()).unwrap();
        let tr = integrate(&car, &flat(0.1, 1e-3), &[0.01, 0.0, 0.0, 0.0], 1e-3, 0.1).unwrap();
        let csv = tr.to_csv();
        let (h, rows) = crate::io::parse_csv(&csv).unwrap();
        assert_eq!(h, vec!["t", "z_s", "v_s", "z_u", "v_u", "a_s", "a_u", "tire"]);
        assert_eq!(rows.len(), tr.len());
        assert_eq!(rows[3][5], tr.body_accel[3]);
    }
}
