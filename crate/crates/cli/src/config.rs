//! Run configuration: a TOML file, every field defaulted except the case
//! and the road.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use suspopt::characteristics::{
    fit_damper_curve, read_samples, Characteristic, DamperCurve, DamperFit, ScaledCharacteristic,
    SpringTable,
};
use suspopt::comfort::WeightingCurve;
use suspopt::objectives::CaseId;
use suspopt::optimizer::{DesignVector, MinimizeOptions};
use suspopt::road::{dual_track, ChirpSpec, RandomRoadSpec, RoadProfile, RoadSpec, TrackMode};
use suspopt::vehicle::{HalfCarParams, QuarterCarParams, DEFAULT_MAX_STATIC_DEFLECTION};

use crate::error::{read_to_string, CliError, Result};

pub const DESIGN_NAMES: [&str; 2] = ["spring_scale", "damper_scale"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub vehicle: VehicleConfig,
    #[serde(default = "default_spring")]
    pub spring: CurveConfig,
    #[serde(default = "default_damper")]
    pub damper: CurveConfig,
    pub road: RoadConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineConfig>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Vehicle parameters; unset fields take the desk defaults of the model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sprung_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsprung_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tire_stiffness: Option<f64>,
    /// Quarter car only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tire_damping: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roll_inertia: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axle_roll_inertia: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub track_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_static_deflection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveConfig {
    Linear {
        coefficient: f64,
    },
    Exponential {
        a: f64,
        k: f64,
        b: f64,
        q: f64,
    },
    /// Spring table, two columns (compression m, force N).
    Table {
        file: String,
        #[serde(default = "one")]
        magnitude: f64,
    },
    /// Damper curve fitted to two-column (velocity, force) samples.
    FittedDamper {
        file: String,
    },
}

fn one() -> f64 {
    1.0
}

fn default_spring() -> CurveConfig {
    CurveConfig::Linear {
        coefficient: 22_000.0,
    }
}

fn default_damper() -> CurveConfig {
    CurveConfig::Linear {
        coefficient: 1_800.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tracks {
    Identical,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RoadConfig {
    Chirp {
        #[serde(default = "default_f0")]
        f0: f64,
        #[serde(default = "default_f1")]
        f1: f64,
        #[serde(default = "default_chirp_amplitude")]
        amplitude: f64,
    },
    Random {
        #[serde(default = "default_roughness")]
        roughness: f64,
        #[serde(default = "default_speed")]
        speed: f64,
        seed: u64,
        /// Right-track seed for independent tracks; defaults to `seed + 1`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed_right: Option<u64>,
        #[serde(default = "default_tracks")]
        tracks: Tracks,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference_wavenumber: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff_wavenumber: Option<f64>,
    },
}

fn default_f0() -> f64 {
    0.1
}
fn default_f1() -> f64 {
    20.0
}
fn default_chirp_amplitude() -> f64 {
    0.01
}
fn default_roughness() -> f64 {
    16e-6
}
fn default_speed() -> f64 {
    20.0
}
fn default_tracks() -> Tracks {
    Tracks::Identical
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub dt: f64,
    pub duration: f64,
    pub t_skip: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 60.0,
            t_skip: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Defaults: 0.5/0.5 for two-term cases, 0.4/0.4/0.2 for half-3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Fixed divisors; unset means the component values at the initial design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Vec<f64>>,
    /// `wk` (default) or `identity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting: Option<String>,
    /// Two-column (Hz, weight) table, overrides `weighting`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weighting_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub lower: f64,
    pub upper: f64,
    /// Starting scales; half-3 defaults to the baseline optimum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
    pub max_evaluations: usize,
    pub max_iterations: usize,
    pub fd_relative_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let o = MinimizeOptions::default();
        Self {
            lower: 0.2,
            upper: 5.0,
            initial: None,
            gradient_tolerance: o.gradient_tolerance,
            step_tolerance: o.step_tolerance,
            max_evaluations: o.max_evaluations,
            max_iterations: o.max_iterations,
            fd_relative_step: o.fd_relative_step,
        }
    }
}

/// Linear suspension whose unsprung acceleration is the quarter-1 target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    pub spring: f64,
    pub damper: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            spring: 30_000.0,
            damper: 2_500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// `baseline.toml` written by a half-2 run.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default)]
    pub bode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub resolution: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            resolution: 21,
            lower: 0.2,
            upper: 5.0,
        }
    }
}

/// A parsed config together with the directory its relative paths refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        let config = parse(&text)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, base_dir })
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.case_id()?;
    Ok(config)
}

impl RunConfig {
    pub fn case_id(&self) -> Result<CaseId> {
        self.case.parse().map_err(|e: suspopt::Error| CliError::Config(e.to_string()))
    }

    /// Replaces the road seed(s); independent tracks get `seed` and `seed + 1`.
    pub fn override_seed(&mut self, new_seed: u64) {
        if let RoadConfig::Random {
            seed, seed_right, ..
        } = &mut self.road
        {
            *seed = new_seed;
            *seed_right = None;
        }
    }

    pub fn weights(&self) -> Result<[f64; 3]> {
        let case = self.case_id()?;
        let given = match &self.objective.weights {
            Some(w) => w.clone(),
            None if case == CaseId::Half3 => vec![0.4, 0.4, 0.2],
            None => vec![0.5, 0.5],
        };
        let expected = if case.is_half() { 2..=3 } else { 2..=2 };
        if !expected.contains(&given.len()) {
            return Err(CliError::Config(format!(
                "case {case} takes {} weights, got {}",
                expected.end(),
                given.len()
            )));
        }
        let mut w = [0.0; 3];
        w[..given.len()].copy_from_slice(&given);
        Ok(w)
    }

    pub fn weighting(&self, loaded: &LoadedConfig) -> Result<WeightingCurve> {
        if let Some(file) = &self.objective.weighting_file {
            let text = read_to_string(&loaded.resolve(file))?;
            return Ok(WeightingCurve::from_text(&text)?);
        }
        Ok(WeightingCurve::by_name(
            self.objective.weighting.as_deref().unwrap_or("wk"),
        )?)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        let o = &self.optimizer;
        MinimizeOptions {
            gradient_tolerance: o.gradient_tolerance,
            step_tolerance: o.step_tolerance,
            max_evaluations: o.max_evaluations,
            max_iterations: o.max_iterations,
            fd_relative_step: o.fd_relative_step,
            ..MinimizeOptions::default()
        }
    }

    pub fn design(&self, initial: Option<[f64; 2]>) -> Result<DesignVector> {
        let start = match (&self.optimizer.initial, initial) {
            (Some(v), _) if v.len() == 2 => [v[0], v[1]],
            (Some(v), _) => {
                return Err(CliError::Config(format!(
                    "optimizer.initial needs 2 values, got {}",
                    v.len()
                )))
            }
            (None, Some(v)) => v,
            (None, None) => [1.0, 1.0],
        };
        DesignVector::scales(
            &DESIGN_NAMES,
            start.to_vec(),
            self.optimizer.lower,
            self.optimizer.upper,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn max_static_deflection(&self) -> f64 {
        self.vehicle
            .max_static_deflection
            .unwrap_or(DEFAULT_MAX_STATIC_DEFLECTION)
    }

    /// Quarter-car parameters with the given (unscaled) characteristics.
    pub fn quarter_params(
        &self,
        spring: ScaledCharacteristic,
        damper: ScaledCharacteristic,
    ) -> QuarterCarParams {
        let d = QuarterCarParams::desk_default();
        let v = &self.vehicle;
        QuarterCarParams {
            sprung_mass: v.sprung_mass.unwrap_or(d.sprung_mass),
            unsprung_mass: v.unsprung_mass.unwrap_or(d.unsprung_mass),
            spring,
            damper,
            tire_stiffness: v.tire_stiffness.unwrap_or(d.tire_stiffness),
            tire_damping: v.tire_damping.unwrap_or(d.tire_damping),
        }
    }

    pub fn half_params(
        &self,
        spring: ScaledCharacteristic,
        damper: ScaledCharacteristic,
    ) -> HalfCarParams {
        let d = HalfCarParams::desk_default();
        let v = &self.vehicle;
        HalfCarParams::symmetric(
            v.sprung_mass.unwrap_or(d.sprung_mass),
            v.unsprung_mass.unwrap_or(d.unsprung_mass),
            v.roll_inertia.unwrap_or(d.roll_inertia),
            v.axle_roll_inertia.unwrap_or(d.axle_roll_inertia),
            v.track_width.unwrap_or(d.track_width),
            spring,
            damper,
            v.tire_stiffness.unwrap_or(d.tire_stiffness_left),
        )
    }

    pub fn validate_vehicle(&self) -> Result<()> {
        let case = self.case_id()?;
        let v = &self.vehicle;
        if case.is_half() && v.tire_damping.is_some() {
            return Err(CliError::Config(
                "vehicle.tire_damping applies to the quarter car only".into(),
            ));
        }
        if !case.is_half()
            && (v.roll_inertia.is_some() || v.axle_roll_inertia.is_some() || v.track_width.is_some())
        {
            return Err(CliError::Config(
                "roll inertia and track width apply to the half car only".into(),
            ));
        }
        Ok(())
    }

    /// Road for this run. `duration` is the simulated span.
    pub fn road(&self) -> Result<RoadProfile> {
        let case = self.case_id()?;
        let sim = &self.simulation;
        let base = match &self.road {
            RoadConfig::Chirp { f0, f1, amplitude } => RoadSpec::Chirp(ChirpSpec {
                f0: *f0,
                f1: *f1,
                amplitude: *amplitude,
                duration: sim.duration,
                dt: sim.dt,
            }),
            RoadConfig::Random {
                roughness,
                speed,
                seed,
                reference_wavenumber,
                cutoff_wavenumber,
                ..
            } => {
                let mut spec = RandomRoadSpec::new(*roughness, *speed, sim.duration, sim.dt);
                if let Some(n0) = reference_wavenumber {
                    spec.reference_wavenumber = *n0;
                }
                if let Some(nc) = cutoff_wavenumber {
                    spec.cutoff_wavenumber = *nc;
                }
                RoadSpec::Random { seed: *seed, spec }
            }
        };
        if !case.is_half() {
            return Ok(match base {
                RoadSpec::Chirp(c) => suspopt::road::chirp_profile(&c)?,
                RoadSpec::Random { seed, spec } => suspopt::road::random_profile(seed, &spec)?,
            });
        }
        let mode = match &self.road {
            RoadConfig::Random {
                tracks: Tracks::Independent,
                seed,
                seed_right,
                ..
            } => TrackMode::Independent {
                seed_left: *seed,
                seed_right: seed_right.unwrap_or(seed.wrapping_add(1)),
            },
            _ => TrackMode::Identical,
        };
        Ok(dual_track(&base, mode)?)
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.road {
            RoadConfig::Chirp { .. } => vec![],
            RoadConfig::Random {
                seed,
                seed_right,
                tracks,
                ..
            } => match tracks {
                Tracks::Identical => vec![*seed],
                Tracks::Independent => vec![*seed, seed_right.unwrap_or(seed.wrapping_add(1))],
            },
        }
    }
}

/// An unscaled characteristic built from its config, plus the damper fit if
/// one was performed.
pub fn build_curve(
    curve: &CurveConfig,
    loaded: &LoadedConfig,
) -> Result<(ScaledCharacteristic, Option<DamperFit>)> {
    Ok(match curve {
        CurveConfig::Linear { coefficient } => (ScaledCharacteristic::linear(*coefficient)?, None),
        CurveConfig::Exponential { a, k, b, q } => (
            ScaledCharacteristic::unscaled(Characteristic::Exponential(DamperCurve::new(
                *a, *k, *b, *q,
            )?)),
            None,
        ),
        CurveConfig::Table { file, magnitude } => {
            let text = read_to_string(&loaded.resolve(file))?;
            let table = Characteristic::Table(SpringTable::from_text(&text)?);
            (
                ScaledCharacteristic::unscaled(table.with_magnitude(*magnitude)?),
                None,
            )
        }
        CurveConfig::FittedDamper { file } => {
            let text = read_to_string(&loaded.resolve(file))?;
            let fit = fit_damper_curve(&read_samples(&text)?)?;
            (
                ScaledCharacteristic::unscaled(Characteristic::Exponential(fit.curve)),
                Some(fit),
            )
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse("case = \"quarter-2\"\n[road]\nkind = \"random\"\nseed = 7\n").unwrap();
        assert_eq!(c.simulation, SimulationConfig::default());
        assert_eq!(c.weights().unwrap(), [0.5, 0.5, 0.0]);
        assert_eq!(c.seeds(), vec![7]);
        assert_eq!(c.design(None).unwrap().values(), &[1.0, 1.0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("case = \"quarter-2\"\ncolour = 1\n[road]\nkind = \"random\"\nseed = 7\n");
        assert!(matches!(err, Err(CliError::Config(_))));
        let err = parse("case = \"quarter-2\"\n[road]\nkind = \"random\"\nseed = 7\nspeeed = 3\n");
        assert!(matches!(err, Err(CliError::Config(_))));
        let err = parse("case = \"quarter-9\"\n[road]\nkind = \"chirp\"\n");
        assert!(matches!(err, Err(CliError::Config(_))));
    }

    #[test]
    fn weights_per_case() {
        let c = parse("case = \"half-3\"\n[road]\nkind = \"random\"\nseed = 1\n").unwrap();
        assert_eq!(c.weights().unwrap(), [0.4, 0.4, 0.2]);
        let c = parse("case = \"quarter-1\"\n[road]\nkind = \"chirp\"\n[objective]\nweights = [1, 1, 1]\n")
            .unwrap();
        assert!(c.weights().is_err());
    }

    #[test]
    fn seed_override() {
        let mut c = parse(
            "case = \"half-2\"\n[road]\nkind = \"random\"\nseed = 3\nseed_right = 9\ntracks = \"independent\"\n",
        )
        .unwrap();
        assert_eq!(c.seeds(), vec![3, 9]);
        c.override_seed(11);
        assert_eq!(c.seeds(), vec![11, 12]);
    }

    #[test]
    fn config_echo_roundtrips() {
        let c = parse(
            "case = \"half-2\"\n[road]\nkind = \"random\"\nseed = 3\ntracks = \"independent\"\n[damper]\nkind = \"exponential\"\na = -450.0\nk = 1.5\nb = 450.0\nq = 2.5\n",
        )
        .unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse(&text).unwrap(), c);
    }
}
