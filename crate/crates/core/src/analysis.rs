//! Frequency-response magnitudes estimated from chirp simulations.

use crate::comfort::{welch_cross, WelchOptions};
use crate::error::{Error, Result};
use crate::io::format_rows;
use crate::road::{chirp_profile, ChirpSpec};
use crate::simulate::{integrate, trim_transient};
use crate::vehicle::VehicleModel;

/// Output channel of a Bode estimate; the input is always road elevation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseChannel {
    BodyDisplacement,
    UnsprungDisplacement,
    /// Road against itself, a self-check of the estimator.
    Road,
}

impl ResponseChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseChannel::BodyDisplacement => "body",
            ResponseChannel::UnsprungDisplacement => "unsprung",
            ResponseChannel::Road => "road",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeOptions {
    pub chirp: ChirpSpec,
    /// Seconds of flat road before the sweep; also cut off as transient.
    pub t_skip: f64,
    /// Seconds of flat road after the sweep so the response can ring out.
    pub tail: f64,
    pub welch: WelchOptions,
}

impl Default for BodeOptions {
    fn default() -> Self {
        Self {
            chirp: ChirpSpec {
                f0: 0.1,
                f1: 20.0,
                amplitude: 0.01,
                duration: 60.0,
                dt: 1e-3,
            },
            t_skip: 5.0,
            tail: 5.0,
            welch: WelchOptions::full_record(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeEstimate {
    pub channel: ResponseChannel,
    pub frequency: Vec<f64>,
    /// `None` where the input carries no power.
    pub magnitude: Vec<Option<f64>>,
    /// The model is nonlinear, so this is the describing response at the
    /// chirp amplitude used.
    pub describing: bool,
    pub amplitude: f64,
}

impl BodeEstimate {
    /// Largest magnitude, refined by a parabola through its neighbours.
    pub fn peak(&self) -> Option<(f64, f64)> {
        let (k, m) = self
            .magnitude
            .iter()
            .enumerate()
            .filter_map(|(k, m)| m.map(|m| (k, m)))
            .fold(None, |best: Option<(usize, f64)>, (k, m)| match best {
                Some((_, b)) if b >= m => best,
                _ => Some((k, m)),
            })?;
        let (Some(Some(lo)), Some(Some(hi))) = (
            k.checked_sub(1).and_then(|i| self.magnitude.get(i)),
            self.magnitude.get(k + 1),
        ) else {
            return Some((self.frequency[k], m));
        };
        let denom = lo - 2.0 * m + hi;
        if denom >= 0.0 {
            return Some((self.frequency[k], m));
        }
        let offset = 0.5 * (lo - hi) / denom;
        let df = self.frequency[k + 1] - self.frequency[k];
        Some((
            self.frequency[k] + offset * df,
            m - 0.25 * (lo - hi) * offset,
        ))
    }

    /// Two columns, frequency and magnitude; missing bins are `NaN`.
    pub fn to_text(&self) -> String {
        let rows: Vec<[f64; 2]> = self
            .frequency
            .iter()
            .zip(&self.magnitude)
            .map(|(f, m)| [*f, m.unwrap_or(f64::NAN)])
            .collect();
        let header = format!(
            "# frequency_hz magnitude channel={} response={} amplitude={:?}",
            self.channel.as_str(),
            if self.describing { "describing" } else { "linear" },
            self.amplitude
        );
        format_rows(Some(&header), " ", rows.iter().map(|r| r.as_slice()))
    }
}

/// H1 estimate `|S_yx| / S_xx` of the road-to-`channel` response over the
/// chirp band. Every wheel sees the same sweep.
pub fn numeric_bode<M: VehicleModel + ?Sized>(
    model: &M,
    opts: &BodeOptions,
    channel: ResponseChannel,
) -> Result<BodeEstimate> {
    if !(opts.t_skip >= 0.0 && opts.tail >= 0.0) {
        return Err(Error::Domain("pre-roll and tail must be non-negative".into()));
    }
    let road = chirp_profile(&opts.chirp)?.padded(opts.t_skip, opts.tail)?;
    let dt = opts.chirp.dt;
    let duration = road.duration();
    let traj = integrate(model, &road, &vec![0.0; model.dim()], dt, duration)?;
    let traj = trim_transient(&traj, opts.t_skip)?;
    let input = &traj.road[0];
    let output: &[f64] = match channel {
        ResponseChannel::BodyDisplacement => traj.channel("z_s"),
        ResponseChannel::UnsprungDisplacement => traj.channel("z_u"),
        ResponseChannel::Road => Some(input.as_slice()),
    }
    .ok_or_else(|| Error::Input(format!("model has no {} channel", channel.as_str())))?;

    let spec = welch_cross(input, output, dt, &opts.welch)?;
    let floor = spec.sxx.iter().cloned().fold(0.0, f64::max) * 1e-12;
    let (frequency, magnitude) = spec
        .frequency
        .iter()
        .zip(spec.sxx.iter().zip(&spec.syx))
        .filter(|(f, _)| **f >= opts.chirp.f0 && **f <= opts.chirp.f1)
        .map(|(f, (sxx, syx))| {
            let m = (*sxx > floor).then(|| syx.norm() / sxx).filter(|m| m.is_finite());
            (*f, m)
        })
        .unzip();
    Ok(BodeEstimate {
        channel,
        frequency,
        magnitude,
        describing: !model.is_linear(),
        amplitude: opts.chirp.amplitude,
    })
}
