//! Frequency weighting of acceleration histories and spectral estimates.
//!
//! The vertical whole-body weighting follows the ISO 2631-1:1997 Annex A
//! realization (the Wk weighting): a product of band-limiting high-pass and
//! low-pass filters, an acceleration–velocity transition and an upward step,
//! each defined by corner frequencies and quality factors:
//!
//! | stage            | corner(s) Hz        | Q            |
//! |------------------|---------------------|--------------|
//! | high-pass        | f1 = 0.4            | 1/√2         |
//! | low-pass         | f2 = 100            | 1/√2         |
//! | a–v transition   | f3 = f4 = 12.5      | Q4 = 0.63    |
//! | upward step      | f5 = 2.37, f6 = 3.35| Q5 = Q6 = 0.91 |
//!
//! Weighting is applied by multiplying DFT bins, and the weighted RMS is
//! recovered through Parseval's identity.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::io::parse_table;

const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightingCurve {
    Identity,
    /// ISO 2631-1 vertical whole-body weighting.
    VerticalWk,
    /// Piecewise-linear (frequency Hz, weight) table, held flat outside.
    Table(Vec<(f64, f64)>),
}

impl WeightingCurve {
    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "identity" | "none" => Ok(Self::Identity),
            "wk" | "iso2631-wk" | "vertical" => Ok(Self::VerticalWk),
            other => Err(Error::Config(format!("unknown weighting curve {other:?}"))),
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = parse_table(text)?;
        let mut pts = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() != 2 {
                return Err(Error::Parse("weighting table needs 2 columns".into()));
            }
            pts.push((row[0], row[1]));
        }
        if pts.len() < 2 {
            return Err(Error::InsufficientData("weighting table needs 2 rows".into()));
        }
        if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input("weighting frequencies must increase".into()));
        }
        if pts.iter().any(|p| !(p.1 >= 0.0 && p.1.is_finite() && p.0.is_finite())) {
            return Err(Error::Input("weights must be finite and non-negative".into()));
        }
        Ok(Self::Table(pts))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::VerticalWk => "wk",
            Self::Table(_) => "table",
        }
    }
}

/// Weight at frequency `f` (Hz).
pub fn weight_at(curve: &WeightingCurve, f: f64) -> Result<f64> {
    if !(f >= 0.0) || !f.is_finite() {
        return Err(Error::Domain(format!("frequency must be >= 0, got {f}")));
    }
    Ok(weight_unchecked(curve, f))
}

fn weight_unchecked(curve: &WeightingCurve, f: f64) -> f64 {
    match curve {
        WeightingCurve::Identity => 1.0,
        WeightingCurve::VerticalWk => wk_magnitude(f),
        WeightingCurve::Table(pts) => {
            let n = pts.len();
            if f <= pts[0].0 {
                return pts[0].1;
            }
            if f >= pts[n - 1].0 {
                return pts[n - 1].1;
            }
            let i = pts.partition_point(|p| p.0 <= f) - 1;
            let (f0, w0) = pts[i];
            let (f1, w1) = pts[i + 1];
            w0 + (w1 - w0) * (f - f0) / (f1 - f0)
        }
    }
}

fn wk_magnitude(f: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    let s = Complex64::new(0.0, 2.0 * PI * f);
    let w = |hz: f64| 2.0 * PI * hz;
    let (w1, w2, w3, w4, w5, w6) = (w(0.4), w(100.0), w(12.5), w(12.5), w(2.37), w(3.35));
    let q1 = std::f64::consts::FRAC_1_SQRT_2;
    let (q4, q5, q6) = (0.63, 0.91, 0.91);
    let one = Complex64::new(1.0, 0.0);
    let high = s * s / (s * s + s * (w1 / q1) + w1 * w1);
    let low = one * (w2 * w2) / (s * s + s * (w2 / q1) + w2 * w2);
    let transition = (one + s / w3) / (one + s / (q4 * w4) + s * s / (w4 * w4));
    let step = (one + s / (q5 * w5) + s * s / (w5 * w5)) / (one + s / (q6 * w6) + s * s / (w6 * w6))
        * (w5 / w6).powi(2);
    (high * low * transition * step).norm()
}

fn fft_forward(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Frequency-weighted RMS of `signal` sampled every `dt` seconds.
///
/// Every DFT bin is multiplied by the weight at its frequency; the DC bin
/// gets `weight(0)`, which is zero for Wk (so the static offset drops out)
/// and one for the identity curve (so plain RMS is reproduced).
pub fn weighted_rms(signal: &[f64], dt: f64, curve: &WeightingCurve) -> Result<f64> {
    check_signal(signal, dt)?;
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * dt);
    let sum: f64 = buf
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let bin = k.min(n - k);
            let w = weight_unchecked(curve, bin as f64 * df);
            w * w * c.norm_sqr()
        })
        .sum();
    Ok((sum / (n as f64 * n as f64)).sqrt())
}

fn check_signal(signal: &[f64], dt: f64) -> Result<()> {
    if signal.len() < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            signal.len()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("signal contains non-finite samples".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Welch segmentation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchOptions {
    /// Segment length in seconds; `None` uses the whole record as one segment.
    pub segment_seconds: Option<f64>,
    /// Fractional overlap in [0, 1).
    pub overlap: f64,
    pub window: Window,
    /// Subtract each segment's mean before transforming.
    pub detrend: bool,
    /// Zero-padding factor applied to each segment (≥ 1).
    pub pad_factor: usize,
}

impl WelchOptions {
    /// Hann segments of `segment_seconds` with 50 % overlap.
    pub fn new(segment_seconds: f64) -> Self {
        Self {
            segment_seconds: Some(segment_seconds),
            overlap: 0.5,
            window: Window::Hann,
            detrend: true,
            pad_factor: 1,
        }
    }

    /// One rectangular segment spanning the whole record.
    pub fn full_record() -> Self {
        Self {
            segment_seconds: None,
            overlap: 0.0,
            window: Window::Rectangular,
            detrend: false,
            pad_factor: 1,
        }
    }
}

/// One-sided spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequency: Vec<f64>,
    pub density: Vec<f64>,
}

/// One-sided auto and cross spectra from the same segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectrum {
    pub frequency: Vec<f64>,
    /// Input auto-spectrum.
    pub sxx: Vec<f64>,
    /// Cross-spectrum of output with input, `E[Y·X*]`.
    pub syx: Vec<Complex64>,
}

/// Welch-averaged power spectral density; integrates to the signal variance.
pub fn psd(signal: &[f64], dt: f64, opts: &WelchOptions) -> Result<Spectrum> {
    let cs = welch_cross(signal, signal, dt, opts)?;
    Ok(Spectrum {
        frequency: cs.frequency,
        density: cs.sxx,
    })
}

/// Welch estimate of the input auto-spectrum and the output/input
/// cross-spectrum.
pub fn welch_cross(input: &[f64], output: &[f64], dt: f64, opts: &WelchOptions) -> Result<CrossSpectrum> {
    check_signal(input, dt)?;
    check_signal(output, dt)?;
    if input.len() != output.len() {
        return Err(Error::Input("input and output lengths differ".into()));
    }
    let n = input.len();
    let seg = match opts.segment_seconds {
        Some(s) => {
            let len = (s / dt).round() as usize;
            if len > n {
                return Err(Error::Domain(format!(
                    "segment of {len} samples is longer than the signal ({n})"
                )));
            }
            if len < MIN_SAMPLES {
                return Err(Error::Domain("segment too short".into()));
            }
            len
        }
        None => n,
    };
    if !(0.0..1.0).contains(&opts.overlap) {
        return Err(Error::Domain("overlap must be in [0, 1)".into()));
    }
    let step = ((seg as f64 * (1.0 - opts.overlap)).round() as usize).max(1);
    let nfft = seg * opts.pad_factor.max(1);
    let window = opts.window.coefficients(seg);
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = fft_forward(nfft);
    let bins = nfft / 2 + 1;

    let mut sxx = vec![0.0; bins];
    let mut syx = vec![Complex64::new(0.0, 0.0); bins];
    let mut count = 0usize;
    let mut start = 0;
    let transform = |x: &[f64]| -> Vec<Complex64> {
        let mean = if opts.detrend {
            x.iter().sum::<f64>() / x.len() as f64
        } else {
            0.0
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        for (i, (&v, &w)) in x.iter().zip(&window).enumerate() {
            buf[i] = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        buf
    };
    while start + seg <= n {
        let xf = transform(&input[start..start + seg]);
        let yf = transform(&output[start..start + seg]);
        for k in 0..bins {
            sxx[k] += xf[k].norm_sqr();
            syx[k] += yf[k] * xf[k].conj();
        }
        count += 1;
        start += step;
    }
    let fs = 1.0 / dt;
    let norm = 1.0 / (fs * wss * count as f64);
    for k in 0..bins {
        let one_sided = if k == 0 || (nfft.is_multiple_of(2) && k == bins - 1) {
            1.0
        } else {
            2.0
        };
        sxx[k] *= norm * one_sided;
        syx[k] *= norm * one_sided;
    }
    let frequency = (0..bins).map(|k| k as f64 * fs / nfft as f64).collect();
    Ok(CrossSpectrum {
        frequency,
        sxx,
        syx,
    })
}
