//! One optimization case from config to result files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use suspopt::analysis::{numeric_bode, BodeOptions, ResponseChannel};
use suspopt::characteristics::{Characteristic, DamperFit, ScaledCharacteristic};
use suspopt::io::format_columns;
use suspopt::objectives::{
    compute_metrics, evaluate_objective, CaseId, MetricSet, ObjectiveSpec,
    ObjectiveValue,
};
use suspopt::optimizer::{grid_surface, minimize, DesignVector, Evaluation, GridAxis, GridSurface, Minimum};
use suspopt::road::{ChirpSpec, RoadProfile};
use suspopt::simulate::{integrate, trim_transient, Trajectory};
use suspopt::vehicle::{HalfCar, QuarterCar, VehicleModel};

use crate::config::{build_curve, LoadedConfig, RunConfig, DESIGN_NAMES};
use crate::error::{read_to_string, write, CliError, Result};
use crate::report::{percent_change, Report};

/// Command-line overrides of a config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Baseline file for half-3, overriding `baseline.file`.
    pub baseline: Option<PathBuf>,
    pub quiet: bool,
}

/// Optimum of a half-2 run, consumed by half-3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineFile {
    pub case: String,
    pub spring_scale: f64,
    pub damper_scale: f64,
    pub total: f64,
    pub z_s_w: f64,
    pub df_tire: f64,
    pub phi_s: f64,
}

/// The half-2 optimum re-simulated on the half-3 road.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOnRoad {
    pub file: BaselineFile,
    pub metrics: MetricSet,
}

/// Everything needed to evaluate designs of one case.
pub struct Scenario {
    pub config: RunConfig,
    pub loaded: LoadedConfig,
    pub case: CaseId,
    spring: ScaledCharacteristic,
    damper: ScaledCharacteristic,
    pub damper_fit: Option<DamperFit>,
    pub road: RoadProfile,
    pub spec: ObjectiveSpec,
    pub design: DesignVector,
    pub baseline: Option<BaselineOnRoad>,
    /// Reference-suspension run whose unsprung acceleration quarter-1 tracks.
    pub reference: Option<Trajectory>,
}

impl Scenario {
    pub fn prepare(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Self> {
        let mut config = loaded.config.clone();
        if let Some(seed) = opts.seed {
            config.override_seed(seed);
        }
        let loaded = LoadedConfig {
            config: config.clone(),
            base_dir: loaded.base_dir.clone(),
        };
        let case = config.case_id()?;
        config.validate_vehicle()?;
        let (spring, _) = build_curve(&config.spring, &loaded)?;
        let (damper, damper_fit) = build_curve(&config.damper, &loaded)?;
        let road = config.road()?;
        let spec = ObjectiveSpec::new(case, config.weights()?);

        let mut scenario = Self {
            spec: ObjectiveSpec {
                weighting: config.weighting(&loaded)?,
                ..spec
            },
            design: config.design(None)?,
            config,
            loaded,
            case,
            spring,
            damper,
            damper_fit,
            road,
            baseline: None,
            reference: None,
        };

        if case == CaseId::Quarter1 {
            let reference = scenario.simulate_reference()?;
            scenario.spec.baseline.desired_tire_accel = Some(reference.unsprung_accel.clone());
            scenario.reference = Some(reference);
        }
        if case == CaseId::Half3 {
            let file = scenario.load_baseline(opts)?;
            let scales = [file.spring_scale, file.damper_scale];
            let traj = scenario.simulate(&scales)?;
            let metrics = compute_metrics(&traj, &scenario.spec.weighting)?;
            scenario.spec.baseline.body_accel_opt = Some(metrics.z_s_w);
            scenario.spec.baseline.tire_range_opt = Some(metrics.df_tire);
            scenario.design = scenario.config.design(Some(scales))?;
            scenario.baseline = Some(BaselineOnRoad { file, metrics });
        }

        match &scenario.config.objective.normalization {
            Some(n) => {
                let needed = if case.is_half() { 2..=3 } else { 2..=2 };
                if !needed.contains(&n.len()) {
                    return Err(CliError::Config(format!(
                        "objective.normalization needs {} values for {case}",
                        needed.end()
                    )));
                }
                scenario.spec.normalization[..n.len()].copy_from_slice(n);
                scenario.spec.validate()?;
            }
            None => {
                let initial = scenario.simulate(scenario.design.values())?;
                scenario.spec.normalize_at(&initial)?;
            }
        }
        Ok(scenario)
    }

    fn load_baseline(&self, opts: &RunOptions) -> Result<BaselineFile> {
        let path = match (&opts.baseline, &self.config.baseline) {
            (Some(p), _) => p.clone(),
            (None, Some(b)) => self.loaded.resolve(&b.file),
            (None, None) => {
                return Err(CliError::Config(
                    "half-3 needs a baseline: set baseline.file to the baseline.toml of a half-2 run"
                        .into(),
                ))
            }
        };
        if !path.exists() {
            return Err(CliError::Config(format!(
                "baseline file {} does not exist; run the half-2 case first",
                path.display()
            )));
        }
        let file: BaselineFile = toml::from_str(&read_to_string(&path)?)
            .map_err(|e| CliError::Config(format!("baseline {}: {e}", path.display())))?;
        if file.case != CaseId::Half2.as_str() {
            return Err(CliError::Config(format!(
                "baseline comes from case {}, expected half-2",
                file.case
            )));
        }
        Ok(file)
    }

    fn scaled(&self, scales: &[f64]) -> suspopt::Result<(ScaledCharacteristic, ScaledCharacteristic)> {
        Ok((self.spring.with_scale(scales[0])?, self.damper.with_scale(scales[1])?))
    }

    pub fn model(&self, scales: &[f64]) -> suspopt::Result<Box<dyn VehicleModel>> {
        let (spring, damper) = self.scaled(scales)?;
        let limit = self.config.max_static_deflection();
        Ok(if self.case.is_half() {
            Box::new(HalfCar::with_deflection_limit(
                self.config.half_params(spring, damper),
                limit,
            )?)
        } else {
            Box::new(QuarterCar::with_deflection_limit(
                self.config.quarter_params(spring, damper),
                limit,
            )?)
        })
    }

    fn run(&self, model: &dyn VehicleModel) -> suspopt::Result<Trajectory> {
        let sim = &self.config.simulation;
        let traj = integrate(
            model,
            &self.road,
            &vec![0.0; model.dim()],
            sim.dt,
            sim.duration,
        )?;
        trim_transient(&traj, sim.t_skip)
    }

    /// Trimmed response of the design `scales`.
    pub fn simulate(&self, scales: &[f64]) -> suspopt::Result<Trajectory> {
        self.run(self.model(scales)?.as_ref())
    }

    fn simulate_reference(&self) -> Result<Trajectory> {
        let r = self.config.reference.clone().unwrap_or_default();
        let params = self.config.quarter_params(
            ScaledCharacteristic::linear(r.spring)?,
            ScaledCharacteristic::linear(r.damper)?,
        );
        let model = QuarterCar::with_deflection_limit(params, self.config.max_static_deflection())?;
        Ok(self.run(&model)?)
    }

    pub fn evaluate(&self, scales: &[f64]) -> suspopt::Result<(ObjectiveValue, Trajectory)> {
        let traj = self.simulate(scales)?;
        Ok((evaluate_objective(&self.spec, &traj)?, traj))
    }

    /// Objective for the optimizer; failed simulations evaluate to NaN.
    pub fn objective(&self) -> impl Fn(&[f64]) -> Evaluation + Sync + '_ {
        move |x: &[f64]| match self.evaluate(x) {
            Ok((v, _)) => Evaluation {
                value: v.total,
                components: v.components.to_vec(),
            },
            Err(_) => f64::NAN.into(),
        }
    }

    pub fn component_names(&self) -> Vec<&'static str> {
        let names = self.case.component_names();
        let count = match self.case {
            CaseId::Quarter1 | CaseId::Quarter2 | CaseId::Quarter3 => 2,
            _ => 3,
        };
        names[..count].to_vec()
    }

    pub fn grid(&self) -> Result<GridSurface> {
        let g = self.config.outputs.grid.clone().unwrap_or_default();
        let axis = GridAxis::new(g.lower, g.upper, g.resolution)?;
        Ok(grid_surface(self.objective(), [axis, axis]))
    }

    pub fn bode(&self, scales: &[f64]) -> Result<Vec<(String, String)>> {
        let sim = &self.config.simulation;
        let opts = BodeOptions {
            chirp: ChirpSpec {
                dt: sim.dt,
                ..BodeOptions::default().chirp
            },
            t_skip: sim.t_skip,
            ..BodeOptions::default()
        };
        let model = self.model(scales)?;
        let mut out = Vec::new();
        for channel in [ResponseChannel::BodyDisplacement, ResponseChannel::UnsprungDisplacement] {
            let est = numeric_bode(model.as_ref(), &opts, channel)?;
            out.push((channel.as_str().to_string(), est.to_text()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub case: CaseId,
    pub initial: ObjectiveValue,
    pub optimized: ObjectiveValue,
    pub minimum: Minimum,
    pub report: Report,
}

pub fn output_dir(loaded: &LoadedConfig, opts: &RunOptions) -> Result<PathBuf> {
    match (&opts.out, &loaded.config.output_dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(loaded.resolve(d)),
        (None, None) => Err(CliError::Config(
            "no output directory: set output_dir or pass --out".into(),
        )),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn run_scenario(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunSummary> {
    let out_dir = output_dir(loaded, opts)?;
    let sc = Scenario::prepare(loaded, opts)?;
    create_dir(&out_dir)?;

    let x0 = sc.design.values().to_vec();
    let (initial, initial_traj) = sc.evaluate(&x0)?;
    let minimum = minimize(sc.objective(), &sc.design, &sc.config.minimize_options())?;
    let (optimized, optimized_traj) = sc.evaluate(minimum.design.values())?;

    let names = sc.component_names();
    write(&out_dir.join("manifest.toml"), manifest(&sc)?)?;
    write(&out_dir.join("history.csv"), minimum.history.to_csv(&names))?;
    write(&out_dir.join("trajectory_initial.csv"), initial_traj.to_csv())?;
    write(&out_dir.join("trajectory_optimized.csv"), optimized_traj.to_csv())?;
    if let Some(reference) = &sc.reference {
        write(
            &out_dir.join("desired_tire_accel.csv"),
            format_columns(Some("t,a_u_desired"), ",", &[&reference.t, &reference.unsprung_accel]),
        )?;
    }
    let (spring_table, damper_table) = curve_tables(&sc, &x0, minimum.design.values())?;
    write(&out_dir.join("spring_curve.txt"), spring_table)?;
    write(&out_dir.join("damper_curve.txt"), damper_table)?;

    let baseline = BaselineFile {
        case: sc.case.as_str().into(),
        spring_scale: minimum.design.values()[0],
        damper_scale: minimum.design.values()[1],
        total: optimized.total,
        z_s_w: optimized.metrics.z_s_w,
        df_tire: optimized.metrics.df_tire,
        phi_s: optimized.metrics.phi_s,
    };
    write(
        &out_dir.join("baseline.toml"),
        toml::to_string(&baseline).map_err(|e| CliError::Failed(e.to_string()))?,
    )?;

    if sc.config.outputs.bode {
        for (label, scales) in [("initial", &x0[..]), ("optimized", minimum.design.values())] {
            for (channel, text) in sc.bode(scales)? {
                write(&out_dir.join(format!("bode_{label}_{channel}.txt")), text)?;
            }
        }
    }
    if sc.config.outputs.grid.is_some() {
        write(&out_dir.join("grid.txt"), sc.grid()?.to_text())?;
    }

    let report = metrics_report(&sc, &initial, &initial_traj, &optimized, &optimized_traj, &minimum);
    write(&out_dir.join("metrics.txt"), report.to_text())?;
    Ok(RunSummary {
        out_dir,
        case: sc.case,
        initial,
        optimized,
        minimum,
        report,
    })
}

fn manifest(sc: &Scenario) -> Result<String> {
    let mut table = toml::Table::new();
    table.insert("tool".into(), env!("CARGO_PKG_NAME").into());
    table.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    table.insert("case".into(), sc.case.as_str().into());
    table.insert("road".into(), sc.road.meta().kind.clone().into());
    let seeds: Vec<toml::Value> = sc
        .config
        .seeds()
        .into_iter()
        .map(|s| toml::Value::String(s.to_string()))
        .collect();
    table.insert("seeds".into(), seeds.into());
    if let Some(fit) = &sc.damper_fit {
        let [a, k, b, q] = fit.curve.params();
        let mut t = toml::Table::new();
        for (key, v) in [("a", a), ("k", k), ("b", b), ("q", q), ("residual_rms", fit.residual_rms)] {
            t.insert(key.into(), v.into());
        }
        table.insert("damper_fit".into(), t.into());
    }
    if let Some(b) = &sc.baseline {
        let mut t = toml::Table::new();
        t.insert("spring_scale".into(), b.file.spring_scale.into());
        t.insert("damper_scale".into(), b.file.damper_scale.into());
        table.insert("baseline".into(), t.into());
    }
    let mut config = sc.config.clone();
    config.output_dir = None;
    if let Some(b) = &mut config.baseline {
        // the location differs between runs; the scales above identify it
        b.file = "(see [baseline])".into();
    }
    table.insert(
        "config".into(),
        toml::Value::try_from(&config).map_err(|e| CliError::Failed(e.to_string()))?,
    );
    toml::to_string(&table).map_err(|e| CliError::Failed(e.to_string()))
}

fn curve_tables(sc: &Scenario, x0: &[f64], x_opt: &[f64]) -> Result<(String, String)> {
    let (s0, d0) = sc.scaled(x0)?;
    let (s1, d1) = sc.scaled(x_opt)?;
    let (lo, hi) = match s0.base() {
        Characteristic::Table(t) => (t.deflection()[0], *t.deflection().last().unwrap()),
        _ => (-0.1, 0.4),
    };
    let table = |a: &ScaledCharacteristic, b: &ScaledCharacteristic, lo: f64, hi: f64, header: &str| {
        let (u, fa): (Vec<f64>, Vec<f64>) = a.tabulate(lo, hi, 51).into_iter().unzip();
        let fb: Vec<f64> = b.tabulate(lo, hi, 51).into_iter().map(|p| p.1).collect();
        format_columns(Some(header), " ", &[&u, &fa, &fb])
    };
    Ok((
        table(&s0, &s1, lo, hi, "# compression_m force_initial_n force_optimized_n"),
        table(&d0, &d1, -1.0, 1.0, "# velocity_m_s force_initial_n force_optimized_n"),
    ))
}

fn metric_values(v: &ObjectiveValue) -> Vec<(&'static str, f64)> {
    let m = &v.metrics;
    let mut out = vec![("Z_s_w", m.z_s_w), ("dF_tire", m.df_tire), ("Phi_s", m.phi_s)];
    for (name, value) in [("I2_penalty", m.i2_penalty), ("C_lost", m.c_lost), ("H_lost", m.h_lost)] {
        if let Some(value) = value {
            out.push((name, value));
        }
    }
    out
}

fn metrics_report(
    sc: &Scenario,
    initial: &ObjectiveValue,
    initial_traj: &Trajectory,
    optimized: &ObjectiveValue,
    optimized_traj: &Trajectory,
    minimum: &Minimum,
) -> Report {
    let mut r = Report::new();
    r.text("case", sc.case);
    r.text("road", &sc.road.meta().kind);
    let seeds: Vec<String> = sc.config.seeds().iter().map(u64::to_string).collect();
    r.text("seeds", seeds.join(" "));
    r.text("termination", minimum.history.termination);
    r.text("iterations", minimum.history.records.len() - 1);
    r.text("evaluations", minimum.evaluations);
    r.text("response", if sc.model(sc.design.values()).is_ok_and(|m| m.is_linear()) { "linear" } else { "nonlinear" });
    for (i, name) in DESIGN_NAMES.iter().enumerate() {
        r.number(format!("initial.{name}"), sc.design.values()[i]);
        r.number(format!("optimized.{name}"), minimum.design.values()[i]);
    }
    r.number("initial.total", initial.total);
    r.number("optimized.total", optimized.total);
    r.text("change.total", change_text(initial.total, optimized.total));
    for (i, name) in sc.component_names().into_iter().enumerate() {
        let norm = sc.spec.normalization[i];
        r.number(format!("weight.{name}"), sc.spec.weights[i]);
        r.number(format!("normalization.{name}"), norm);
        r.number(format!("initial.{name}.normalized"), initial.components[i] / norm);
        r.number(format!("optimized.{name}.normalized"), optimized.components[i] / norm);
    }
    for ((name, a), (_, b)) in metric_values(initial).into_iter().zip(metric_values(optimized)) {
        r.number(format!("initial.{name}"), a);
        r.number(format!("optimized.{name}"), b);
        r.text(format!("change.{name}"), change_text(a, b));
    }
    if let Some(base) = &sc.baseline {
        let pairs = [
            ("Z_s_w", base.metrics.z_s_w, optimized.metrics.z_s_w),
            ("dF_tire", base.metrics.df_tire, optimized.metrics.df_tire),
            ("Phi_s", base.metrics.phi_s, optimized.metrics.phi_s),
        ];
        for (name, a, b) in pairs {
            r.number(format!("baseline.{name}"), a);
            r.text(format!("change_vs_baseline.{name}"), change_text(a, b));
        }
    }
    r.text("liftoff.initial", initial_traj.liftoff);
    r.text("liftoff.optimized", optimized_traj.liftoff);
    r
}

fn change_text(a: f64, b: f64) -> String {
    crate::report::format_percent(percent_change(a, b))
}

/// Writes the Bode estimates of the initial design.
pub fn run_bode(loaded: &LoadedConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let out_dir = output_dir(loaded, opts)?;
    let sc = Scenario::prepare(loaded, opts)?;
    create_dir(&out_dir)?;
    let mut written = Vec::new();
    for (channel, text) in sc.bode(sc.design.values())? {
        let path = out_dir.join(format!("bode_{channel}.txt"));
        write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes the objective surface over the two scales.
pub fn run_grid(loaded: &LoadedConfig, opts: &RunOptions) -> Result<(PathBuf, GridSurface)> {
    let out_dir = output_dir(loaded, opts)?;
    let sc = Scenario::prepare(loaded, opts)?;
    create_dir(&out_dir)?;
    let grid = sc.grid()?;
    let path = out_dir.join("grid.txt");
    write(&path, grid.to_text())?;
    Ok((path, grid))
}
