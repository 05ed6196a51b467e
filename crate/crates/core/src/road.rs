//! Road excitation profiles: chirp sweeps, seeded random roughness and
//! dual-track variants.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::{format_columns, parse_table};
use crate::rng::Xoshiro256;
use crate::vehicle::RoadInput;

/// How a profile was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadMeta {
    pub kind: String,
    pub seeds: Vec<u64>,
    pub params: Vec<(String, f64)>,
}

/// Time-sampled road elevation, one list per track.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadProfile {
    dt: f64,
    elevation: Vec<Vec<f64>>,
    velocity: Vec<Vec<f64>>,
    meta: RoadMeta,
}

impl RoadProfile {
    pub fn new(dt: f64, elevation: Vec<Vec<f64>>, meta: RoadMeta) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("road dt must be positive, got {dt}")));
        }
        if elevation.is_empty() || elevation.len() > 2 {
            return Err(Error::Input("a road profile has one or two tracks".into()));
        }
        let n = elevation[0].len();
        if n < 2 {
            return Err(Error::InsufficientData("road needs at least 2 samples".into()));
        }
        if elevation.iter().any(|t| t.len() != n) {
            return Err(Error::Input("dual-track elevations differ in length".into()));
        }
        if elevation.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::Input("road elevations must be finite".into()));
        }
        let velocity = elevation.iter().map(|z| central_difference(z, dt)).collect();
        Ok(Self {
            dt,
            elevation,
            velocity,
            meta,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.elevation[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tracks(&self) -> usize {
        self.elevation.len()
    }

    pub fn track(&self, i: usize) -> &[f64] {
        &self.elevation[i]
    }

    pub fn meta(&self) -> &RoadMeta {
        &self.meta
    }

    /// Time of the last sample.
    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    /// Road input for `wheel` at time `t`, linearly interpolated. Single-track
    /// profiles feed every wheel; times past either end hold the end value.
    pub fn sample(&self, wheel: usize, t: f64) -> RoadInput {
        let track = wheel.min(self.tracks() - 1);
        let z = &self.elevation[track];
        let v = &self.velocity[track];
        let pos = (t / self.dt).max(0.0);
        let i = (pos.floor() as usize).min(self.len() - 1);
        if i + 1 >= self.len() {
            return RoadInput::new(z[i], v[i]);
        }
        let frac = pos - i as f64;
        if frac == 0.0 {
            return RoadInput::new(z[i], v[i]);
        }
        RoadInput::new(
            z[i] + frac * (z[i + 1] - z[i]),
            v[i] + frac * (v[i + 1] - v[i]),
        )
    }

    /// Adds `lead` seconds of flat road before and `tail` seconds after.
    pub fn padded(&self, lead: f64, tail: f64) -> Result<Self> {
        let nl = (lead / self.dt).round() as usize;
        let nt = (tail / self.dt).round() as usize;
        let tracks = self
            .elevation
            .iter()
            .map(|z| {
                let mut out = vec![0.0; nl];
                out.extend_from_slice(z);
                out.extend(std::iter::repeat_n(0.0, nt));
                out
            })
            .collect();
        let mut meta = self.meta.clone();
        meta.params.push(("lead".into(), lead));
        meta.params.push(("tail".into(), tail));
        Self::new(self.dt, tracks, meta)
    }

    /// Multiplies every elevation by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let tracks = self
            .elevation
            .iter()
            .map(|z| z.iter().map(|v| v * factor).collect())
            .collect();
        let mut meta = self.meta.clone();
        meta.params.push(("amplitude_factor".into(), factor));
        Self::new(self.dt, tracks, meta)
    }

    /// Columns: time, left[, right].
    pub fn to_text(&self) -> String {
        let t: Vec<f64> = (0..self.len()).map(|i| i as f64 * self.dt).collect();
        let mut cols: Vec<&[f64]> = vec![&t];
        cols.extend(self.elevation.iter().map(|v| v.as_slice()));
        let header = format!(
            "# road profile: {} (time s, elevation m per track)",
            self.meta.kind
        );
        format_columns(Some(&header), " ", &cols)
    }

    /// Reads two- or three-column text; the time column must be uniform.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows = parse_table(text)?;
        if rows.len() < 2 {
            return Err(Error::InsufficientData("road file needs at least 2 rows".into()));
        }
        let width = rows[0].len();
        if !(2..=3).contains(&width) || rows.iter().any(|r| r.len() != width) {
            return Err(Error::Parse("road file needs 2 or 3 consistent columns".into()));
        }
        let dt = rows[1][0] - rows[0][0];
        for (i, w) in rows.windows(2).enumerate() {
            let step = w[1][0] - w[0][0];
            if (step - dt).abs() > 1e-9 * dt.abs().max(1e-12) {
                return Err(Error::Parse(format!(
                    "road file time step is not uniform at row {}",
                    i + 2
                )));
            }
        }
        let tracks = (1..width)
            .map(|c| rows.iter().map(|r| r[c]).collect())
            .collect();
        Self::new(
            dt,
            tracks,
            RoadMeta {
                kind: "imported".into(),
                seeds: vec![],
                params: vec![],
            },
        )
    }
}

fn central_difference(z: &[f64], dt: f64) -> Vec<f64> {
    let n = z.len();
    (0..n)
        .map(|i| match i {
            0 => (z[1] - z[0]) / dt,
            i if i == n - 1 => (z[n - 1] - z[n - 2]) / dt,
            i => (z[i + 1] - z[i - 1]) / (2.0 * dt),
        })
        .collect()
}

fn sample_count(duration: f64, dt: f64) -> Result<usize> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Domain(format!("duration must be positive, got {duration}")));
    }
    if !(dt.is_finite() && dt > 0.0 && dt < duration) {
        return Err(Error::Domain(format!("dt must be in (0, duration), got {dt}")));
    }
    Ok((duration / dt).round() as usize + 1)
}

/// Linear swept sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpSpec {
    pub f0: f64,
    pub f1: f64,
    pub amplitude: f64,
    pub duration: f64,
    pub dt: f64,
}

/// `z(t) = a·sin(2π(f0·t + (f1 − f0)·t²/(2T)))`.
pub fn chirp_profile(spec: &ChirpSpec) -> Result<RoadProfile> {
    let ChirpSpec {
        f0,
        f1,
        amplitude,
        duration,
        dt,
    } = *spec;
    if !(f0 > 0.0 && f0 < f1 && f1.is_finite()) {
        return Err(Error::Domain(format!(
            "chirp needs 0 < f0 < f1, got f0={f0}, f1={f1}"
        )));
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Domain(format!("chirp amplitude must be positive, got {amplitude}")));
    }
    let n = sample_count(duration, dt)?;
    let rate = (f1 - f0) / (2.0 * duration);
    let z = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            amplitude * (2.0 * PI * (f0 * t + rate * t * t)).sin()
        })
        .collect();
    RoadProfile::new(
        dt,
        vec![z],
        RoadMeta {
            kind: "chirp".into(),
            seeds: vec![],
            params: vec![
                ("f0".into(), f0),
                ("f1".into(), f1),
                ("amplitude".into(), amplitude),
                ("duration".into(), duration),
            ],
        },
    )
}

/// Random roughness with displacement PSD `G(n) = G(n0)·(n/n0)^−2` above the
/// cutoff wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomRoadSpec {
    /// Displacement PSD at `reference_wavenumber` (m³/cycle).
    pub roughness: f64,
    pub speed: f64,
    pub duration: f64,
    pub dt: f64,
    /// cycle/m
    pub reference_wavenumber: f64,
    /// Low-wavenumber corner of the shaping filter (cycle/m).
    pub cutoff_wavenumber: f64,
}

impl RandomRoadSpec {
    pub fn new(roughness: f64, speed: f64, duration: f64, dt: f64) -> Self {
        Self {
            roughness,
            speed,
            duration,
            dt,
            reference_wavenumber: 0.1,
            cutoff_wavenumber: 0.01,
        }
    }
}

/// First-order filtered white noise, discretized exactly, started from the
/// stationary distribution and mean-removed.
pub fn random_profile(seed: u64, spec: &RandomRoadSpec) -> Result<RoadProfile> {
    let z = random_track(seed, spec)?;
    RoadProfile::new(spec.dt, vec![z], random_meta(vec![seed], spec))
}

fn random_meta(seeds: Vec<u64>, spec: &RandomRoadSpec) -> RoadMeta {
    RoadMeta {
        kind: "random".into(),
        seeds,
        params: vec![
            ("roughness".into(), spec.roughness),
            ("speed".into(), spec.speed),
            ("duration".into(), spec.duration),
            ("reference_wavenumber".into(), spec.reference_wavenumber),
            ("cutoff_wavenumber".into(), spec.cutoff_wavenumber),
        ],
    }
}

fn random_track(seed: u64, spec: &RandomRoadSpec) -> Result<Vec<f64>> {
    if !(spec.roughness.is_finite() && spec.roughness >= 0.0) {
        return Err(Error::Domain(format!(
            "roughness must be non-negative, got {}",
            spec.roughness
        )));
    }
    if !(spec.speed > 0.0 && spec.reference_wavenumber > 0.0 && spec.cutoff_wavenumber > 0.0) {
        return Err(Error::Domain(
            "speed and wavenumbers must be positive".into(),
        ));
    }
    let n = sample_count(spec.duration, spec.dt)?;
    if spec.roughness == 0.0 {
        return Ok(vec![0.0; n]);
    }
    // z' = -wc·z + q·w(t) with unit white noise has one-sided PSD
    // 2q²/(wc² + (2πf)²); matching G(n0)·n0²·V/f² at high f gives q.
    let wc = 2.0 * PI * spec.cutoff_wavenumber * spec.speed;
    let q = PI * spec.reference_wavenumber * (2.0 * spec.roughness * spec.speed).sqrt();
    let sigma = q / (2.0 * wc).sqrt();
    let a = (-wc * spec.dt).exp();
    let innovation = sigma * (1.0 - a * a).sqrt();

    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut z = Vec::with_capacity(n);
    let mut state = sigma * rng.next_normal();
    for _ in 0..n {
        z.push(state);
        state = a * state + innovation * rng.next_normal();
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    z.iter_mut().for_each(|v| *v -= mean);
    Ok(z)
}

/// Base generator for [`dual_track`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoadSpec {
    Chirp(ChirpSpec),
    Random { seed: u64, spec: RandomRoadSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackMode {
    /// Both wheels see the base profile.
    Identical,
    /// Random tracks drawn from separate seeds (ignored for chirps).
    Independent { seed_left: u64, seed_right: u64 },
}

pub fn dual_track(base: &RoadSpec, mode: TrackMode) -> Result<RoadProfile> {
    let single = match base {
        RoadSpec::Chirp(c) => chirp_profile(c)?,
        RoadSpec::Random { seed, spec } => random_profile(*seed, spec)?,
    };
    match (mode, base) {
        (TrackMode::Independent { seed_left, seed_right }, RoadSpec::Random { spec, .. }) => {
            let left = random_track(seed_left, spec)?;
            let right = random_track(seed_right, spec)?;
            RoadProfile::new(spec.dt, vec![left, right], random_meta(vec![seed_left, seed_right], spec))
        }
        _ => {
            let z = single.track(0).to_vec();
            let mut meta = single.meta.clone();
            meta.kind = format!("{} (identical tracks)", meta.kind);
            RoadProfile::new(single.dt, vec![z.clone(), z], meta)
        }
    }
}
