//! Quarter-car and half-car lumped-parameter models.
//!
//! Coordinates are measured from static equilibrium, so gravity never
//! appears in the equations of motion. Nonlinear springs are evaluated at
//! the operating compression found by [`static_equilibrium`] plus the
//! dynamic compression, minus the static force.
//!
//! Both models share the state layout `[z_s, v_s, z_u, v_u]`; the half car
//! appends `[phi_s, w_s, phi_u, w_u]`. Roll angles are positive when the
//! left side moves up.

use crate::characteristics::{Characteristic, ScaledCharacteristic};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

/// Largest static compression accepted when solving for equilibrium (m).
pub const DEFAULT_MAX_STATIC_DEFLECTION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RoadInput {
    pub z: f64,
    pub v: f64,
}

impl RoadInput {
    pub fn new(z: f64, v: f64) -> Self {
        Self { z, v }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarterCarParams {
    pub sprung_mass: f64,
    pub unsprung_mass: f64,
    pub spring: ScaledCharacteristic,
    pub damper: ScaledCharacteristic,
    pub tire_stiffness: f64,
    pub tire_damping: f64,
}

impl QuarterCarParams {
    /// Representative light commercial vehicle corner (placeholder values).
    pub fn desk_default() -> Self {
        Self {
            sprung_mass: 450.0,
            unsprung_mass: 45.0,
            spring: ScaledCharacteristic::linear(22_000.0).unwrap(),
            damper: ScaledCharacteristic::linear(1_800.0).unwrap(),
            tire_stiffness: 200_000.0,
            tire_damping: 150.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("sprung mass", self.sprung_mass)?;
        positive("unsprung mass", self.unsprung_mass)?;
        positive("tire stiffness", self.tire_stiffness)?;
        if !(self.tire_damping.is_finite() && self.tire_damping >= 0.0) {
            return Err(Error::Domain(format!(
                "tire damping must be non-negative, got {}",
                self.tire_damping
            )));
        }
        check_roles(&self.spring, &self.damper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfCarParams {
    pub sprung_mass: f64,
    pub unsprung_mass: f64,
    /// Sprung roll inertia (kg·m²).
    pub roll_inertia: f64,
    /// Axle roll inertia (kg·m²).
    pub axle_roll_inertia: f64,
    pub track_width: f64,
    pub spring_left: ScaledCharacteristic,
    pub spring_right: ScaledCharacteristic,
    pub damper_left: ScaledCharacteristic,
    pub damper_right: ScaledCharacteristic,
    pub tire_stiffness_left: f64,
    pub tire_stiffness_right: f64,
}

impl HalfCarParams {
    /// Left and right sides share one spring, damper and tire.
    #[allow(clippy::too_many_arguments)]
    pub fn symmetric(
        sprung_mass: f64,
        unsprung_mass: f64,
        roll_inertia: f64,
        axle_roll_inertia: f64,
        track_width: f64,
        spring: ScaledCharacteristic,
        damper: ScaledCharacteristic,
        tire_stiffness: f64,
    ) -> Self {
        Self {
            sprung_mass,
            unsprung_mass,
            roll_inertia,
            axle_roll_inertia,
            track_width,
            spring_left: spring.clone(),
            spring_right: spring,
            damper_left: damper.clone(),
            damper_right: damper,
            tire_stiffness_left: tire_stiffness,
            tire_stiffness_right: tire_stiffness,
        }
    }

    pub fn desk_default() -> Self {
        Self::symmetric(
            900.0,
            90.0,
            250.0,
            40.0,
            1.6,
            ScaledCharacteristic::linear(22_000.0).unwrap(),
            ScaledCharacteristic::linear(1_800.0).unwrap(),
            200_000.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        positive("sprung mass", self.sprung_mass)?;
        positive("unsprung mass", self.unsprung_mass)?;
        positive("roll inertia", self.roll_inertia)?;
        positive("axle roll inertia", self.axle_roll_inertia)?;
        positive("track width", self.track_width)?;
        positive("left tire stiffness", self.tire_stiffness_left)?;
        positive("right tire stiffness", self.tire_stiffness_right)?;
        check_roles(&self.spring_left, &self.damper_left)?;
        check_roles(&self.spring_right, &self.damper_right)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

fn check_roles(spring: &ScaledCharacteristic, damper: &ScaledCharacteristic) -> Result<()> {
    if !spring.base().is_spring_law() {
        return Err(Error::Config("spring slot holds a damper curve".into()));
    }
    if !damper.base().is_damper_law() {
        return Err(Error::Config("damper slot holds a spring table".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuarterState {
    pub z_s: f64,
    pub v_s: f64,
    pub z_u: f64,
    pub v_u: f64,
}

impl QuarterState {
    pub fn to_array(self) -> [f64; 4] {
        [self.z_s, self.v_s, self.z_u, self.v_u]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            z_s: x[0],
            v_s: x[1],
            z_u: x[2],
            v_u: x[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HalfState {
    pub z_s: f64,
    pub v_s: f64,
    pub z_u: f64,
    pub v_u: f64,
    pub phi_s: f64,
    pub w_s: f64,
    pub phi_u: f64,
    pub w_u: f64,
}

impl HalfState {
    pub fn to_array(self) -> [f64; 8] {
        [
            self.z_s, self.v_s, self.z_u, self.v_u, self.phi_s, self.w_s, self.phi_u, self.w_u,
        ]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self {
            z_s: x[0],
            v_s: x[1],
            z_u: x[2],
            v_u: x[3],
            phi_s: x[4],
            w_s: x[5],
            phi_u: x[6],
            w_u: x[7],
        }
    }

    /// Left/right mirror image: roll components change sign.
    pub fn mirrored(self) -> Self {
        Self {
            phi_s: -self.phi_s,
            w_s: -self.w_s,
            phi_u: -self.phi_u,
            w_u: -self.w_u,
            ..self
        }
    }
}

/// Compression `x*` at which the spring carries `weight`, within
/// `±max_deflection`.
///
/// Linear laws are solved in closed form; tables are inverted segment by
/// segment, including the extrapolated end rays.
pub fn static_equilibrium(
    spring: &ScaledCharacteristic,
    weight: f64,
    max_deflection: f64,
) -> Result<f64> {
    if !weight.is_finite() {
        return Err(Error::Input(format!("supported weight must be finite, got {weight}")));
    }
    let x = match spring.base() {
        Characteristic::Linear(law) => weight / (spring.scale() * law.coefficient()),
        Characteristic::Table(table) => {
            let xs = table.deflection();
            let fs: Vec<f64> = table.force().iter().map(|f| spring.scale() * f).collect();
            let n = xs.len();
            let slope = |i: usize| (fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]);
            if weight < fs[0] {
                let s = slope(0);
                if s <= 0.0 {
                    return Err(not_found(weight));
                }
                xs[0] + (weight - fs[0]) / s
            } else if weight > fs[n - 1] {
                let s = slope(n - 2);
                if s <= 0.0 {
                    return Err(not_found(weight));
                }
                xs[n - 1] + (weight - fs[n - 1]) / s
            } else {
                // first segment whose upper force reaches the weight
                let i = (0..n - 1).find(|&i| fs[i + 1] >= weight).unwrap_or(n - 2);
                if fs[i + 1] == fs[i] || weight == fs[i] {
                    xs[i]
                } else if weight == fs[i + 1] {
                    xs[i + 1]
                } else {
                    xs[i] + (weight - fs[i]) / slope(i)
                }
            }
        }
        Characteristic::Exponential(_) => {
            return Err(Error::Config(
                "static equilibrium requires a spring law".into(),
            ))
        }
    };
    if !x.is_finite() || x.abs() > max_deflection {
        return Err(Error::EquilibriumNotFound(format!(
            "spring needs {x:.4} m to carry {weight:.1} N (limit {max_deflection} m)"
        )));
    }
    Ok(x)
}

fn not_found(weight: f64) -> Error {
    Error::EquilibriumNotFound(format!("spring law cannot reach {weight:.1} N"))
}

/// Dynamic spring push for extension `ext` about operating compression `op`.
#[inline]
fn spring_push(spring: &ScaledCharacteristic, op: f64, ext: f64) -> f64 {
    spring.increment(op, -ext)
}

/// Dynamic damper force about zero relative velocity.
#[inline]
fn damper_resist(damper: &ScaledCharacteristic, v: f64) -> f64 {
    match damper.base() {
        Characteristic::Linear(_) => damper.force(v),
        _ => damper.force(v) - damper.force(0.0),
    }
}

/// Interface the integrator needs from a vehicle model.
pub trait VehicleModel: Sync {
    fn dim(&self) -> usize;

    /// Number of wheels (road tracks consumed).
    fn wheels(&self) -> usize;

    fn state_names(&self) -> &'static [&'static str];

    fn derivative(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]);

    fn tire_forces(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]);

    /// Whether the given tire forces imply a wheel leaving the ground.
    fn lifts_off(&self, tire_forces: &[f64]) -> bool;

    /// All suspension laws are linear.
    fn is_linear(&self) -> bool;
}

fn is_linear_law(c: &ScaledCharacteristic) -> bool {
    matches!(c.base(), Characteristic::Linear(_))
}

/// Quarter car with its static operating point resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterCar {
    params: QuarterCarParams,
    spring_op: f64,
}

impl QuarterCar {
    pub fn new(params: QuarterCarParams) -> Result<Self> {
        Self::with_deflection_limit(params, DEFAULT_MAX_STATIC_DEFLECTION)
    }

    pub fn with_deflection_limit(params: QuarterCarParams, max_deflection: f64) -> Result<Self> {
        params.validate()?;
        let spring_op =
            static_equilibrium(&params.spring, params.sprung_mass * GRAVITY, max_deflection)?;
        Ok(Self { params, spring_op })
    }

    pub fn params(&self) -> &QuarterCarParams {
        &self.params
    }

    /// Static spring compression (m).
    pub fn operating_deflection(&self) -> f64 {
        self.spring_op
    }

    /// Upward suspension force on the body.
    #[inline]
    pub fn suspension_force(&self, s: &QuarterState) -> f64 {
        let p = &self.params;
        spring_push(&p.spring, self.spring_op, s.z_s - s.z_u) - damper_resist(&p.damper, s.v_s - s.v_u)
    }

    /// Dynamic tire force, positive in compression.
    #[inline]
    pub fn tire_force(&self, s: &QuarterState, road: RoadInput) -> f64 {
        let p = &self.params;
        p.tire_stiffness * (road.z - s.z_u) + p.tire_damping * (road.v - s.v_u)
    }

    pub fn derivatives(&self, s: &QuarterState, road: RoadInput) -> QuarterState {
        let p = &self.params;
        let fs = self.suspension_force(s);
        let ft = self.tire_force(s, road);
        QuarterState {
            z_s: s.v_s,
            v_s: fs / p.sprung_mass,
            z_u: s.v_u,
            v_u: (ft - fs) / p.unsprung_mass,
        }
    }
}

impl VehicleModel for QuarterCar {
    fn dim(&self) -> usize {
        4
    }

    fn wheels(&self) -> usize {
        1
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["z_s", "v_s", "z_u", "v_u"]
    }

    fn is_linear(&self) -> bool {
        is_linear_law(&self.params.spring) && is_linear_law(&self.params.damper)
    }

    fn derivative(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]) {
        let d = self.derivatives(&QuarterState::from_slice(x), road[0]);
        out[..4].copy_from_slice(&d.to_array());
    }

    fn tire_forces(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]) {
        out[0] = self.tire_force(&QuarterState::from_slice(x), road[0]);
    }

    fn lifts_off(&self, tire_forces: &[f64]) -> bool {
        let p = &self.params;
        let static_load = (p.sprung_mass + p.unsprung_mass) * GRAVITY;
        tire_forces[0] + static_load < 0.0
    }
}

/// Half car with static operating points resolved for both springs.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCar {
    params: HalfCarParams,
    op_left: f64,
    op_right: f64,
}

/// Per-corner forces of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerForces {
    /// Suspension force, left (tension positive, as in the moment balance).
    pub suspension_left: f64,
    pub suspension_right: f64,
    /// Tire force, left; positive when the wheel sits above the road.
    pub tire_left: f64,
    pub tire_right: f64,
}

impl HalfCar {
    pub fn new(params: HalfCarParams) -> Result<Self> {
        Self::with_deflection_limit(params, DEFAULT_MAX_STATIC_DEFLECTION)
    }

    pub fn with_deflection_limit(params: HalfCarParams, max_deflection: f64) -> Result<Self> {
        params.validate()?;
        let corner_weight = 0.5 * params.sprung_mass * GRAVITY;
        let op_left = static_equilibrium(&params.spring_left, corner_weight, max_deflection)?;
        let op_right = static_equilibrium(&params.spring_right, corner_weight, max_deflection)?;
        Ok(Self {
            params,
            op_left,
            op_right,
        })
    }

    pub fn params(&self) -> &HalfCarParams {
        &self.params
    }

    pub fn operating_deflections(&self) -> (f64, f64) {
        (self.op_left, self.op_right)
    }

    pub fn forces(&self, s: &HalfState, left: RoadInput, right: RoadInput) -> CornerForces {
        let p = &self.params;
        let arm = 0.5 * p.track_width;
        let ext_l = (s.z_s + s.phi_s * arm) - (s.z_u + s.phi_u * arm);
        let ext_r = (s.z_s - s.phi_s * arm) - (s.z_u - s.phi_u * arm);
        let vel_l = (s.v_s + s.w_s * arm) - (s.v_u + s.w_u * arm);
        let vel_r = (s.v_s - s.w_s * arm) - (s.v_u - s.w_u * arm);
        let suspension_left =
            damper_resist(&p.damper_left, vel_l) - spring_push(&p.spring_left, self.op_left, ext_l);
        let suspension_right = damper_resist(&p.damper_right, vel_r)
            - spring_push(&p.spring_right, self.op_right, ext_r);
        let (tire_left, tire_right) = self.tire_forces_at(s, left, right);
        CornerForces {
            suspension_left,
            suspension_right,
            tire_left,
            tire_right,
        }
    }

    /// Tire spring forces, left and right (tires carry no damping here).
    pub fn tire_forces_at(&self, s: &HalfState, left: RoadInput, right: RoadInput) -> (f64, f64) {
        let p = &self.params;
        let arm = 0.5 * p.track_width;
        (
            p.tire_stiffness_left * (s.z_u + s.phi_u * arm - left.z),
            p.tire_stiffness_right * (s.z_u - s.phi_u * arm - right.z),
        )
    }

    pub fn derivatives(&self, s: &HalfState, left: RoadInput, right: RoadInput) -> HalfState {
        let p = &self.params;
        let arm = 0.5 * p.track_width;
        let f = self.forces(s, left, right);
        let (sl, sr, ul, ur) = (f.suspension_left, f.suspension_right, f.tire_left, f.tire_right);
        HalfState {
            z_s: s.v_s,
            v_s: -(sl + sr) / p.sprung_mass,
            z_u: s.v_u,
            v_u: ((sl + sr) - (ul + ur)) / p.unsprung_mass,
            phi_s: s.w_s,
            w_s: -(sl - sr) * arm / p.roll_inertia,
            phi_u: s.w_u,
            w_u: ((sl - ul) - (sr - ur)) * arm / p.axle_roll_inertia,
        }
    }
}

impl VehicleModel for HalfCar {
    fn dim(&self) -> usize {
        8
    }

    fn wheels(&self) -> usize {
        2
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["z_s", "v_s", "z_u", "v_u", "phi_s", "w_s", "phi_u", "w_u"]
    }

    fn is_linear(&self) -> bool {
        let p = &self.params;
        [&p.spring_left, &p.spring_right, &p.damper_left, &p.damper_right]
            .into_iter()
            .all(is_linear_law)
    }

    fn derivative(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]) {
        let d = self.derivatives(&HalfState::from_slice(x), road[0], road[1]);
        out[..8].copy_from_slice(&d.to_array());
    }

    fn tire_forces(&self, x: &[f64], road: &[RoadInput], out: &mut [f64]) {
        let (l, r) = self.tire_forces_at(&HalfState::from_slice(x), road[0], road[1]);
        out[0] = l;
        out[1] = r;
    }

    fn lifts_off(&self, tire_forces: &[f64]) -> bool {
        let p = &self.params;
        let static_load = 0.5 * (p.sprung_mass + p.unsprung_mass) * GRAVITY;
        tire_forces.iter().any(|f| static_load - f < 0.0)
    }
}
