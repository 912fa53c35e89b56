//! Test signals and the reconstruction-error metric.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{synthesize_with, BandCoefficients, CoefficientStream, Engine};
use crate::error::{Error, Result};
use crate::framegen::FrameSet;

/// RMS every generated signal is scaled to.
pub const TARGET_RMS: f64 = 0.1;

/// Error reported for an exactly zero residual.
pub const ERR_FLOOR_DB: f64 = -200.0;

#[derive(Clone, Debug, PartialEq)]
pub enum SignalKind {
    /// Uniform noise on `[-1, 1)`.
    White,
    Sine(f64),
    Const,
    /// Unit impulses every `spacing` seconds, starting at sample 0.
    Clicks(f64),
    /// Random frames of the active frame set, `density` per second per band on average.
    Atoms(f64),
    Wav(PathBuf),
}

impl SignalKind {
    /// Parses `white`, `sine 440`, `sine 20k`, `const`, `clicks`, `clicks 0.5`, `atom`, `atoms 2`, `wav:PATH`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("wav:") {
            return Some(SignalKind::Wav(PathBuf::from(path)));
        }
        let mut it = s.split_whitespace();
        let head = it.next()?;
        let arg = it.next();
        if it.next().is_some() {
            return None;
        }
        let num = |a: &str| -> Option<f64> {
            let (digits, scale) = match a.strip_suffix(['k', 'K']) {
                Some(d) => (d, 1000.0),
                None => (a, 1.0),
            };
            digits.parse::<f64>().ok().map(|v| v * scale)
        };
        match (head, arg) {
            ("white", None) => Some(SignalKind::White),
            ("const", None) => Some(SignalKind::Const),
            ("sine", Some(f)) => num(f).map(SignalKind::Sine),
            ("clicks", None) => Some(SignalKind::Clicks(1.0)),
            ("clicks", Some(sp)) => num(sp).map(SignalKind::Clicks),
            ("atom" | "atoms", None) => Some(SignalKind::Atoms(1.0)),
            ("atom" | "atoms", Some(d)) => num(d).map(SignalKind::Atoms),
            _ => None,
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalKind::White => write!(f, "white"),
            SignalKind::Sine(hz) if *hz >= 1000.0 && hz % 1000.0 == 0.0 => write!(f, "sine {}k", hz / 1000.0),
            SignalKind::Sine(hz) => write!(f, "sine {hz}"),
            SignalKind::Const => write!(f, "const"),
            SignalKind::Clicks(s) if *s == 1.0 => write!(f, "clicks"),
            SignalKind::Clicks(s) => write!(f, "clicks {s}"),
            SignalKind::Atoms(d) if *d == 1.0 => write!(f, "atom"),
            SignalKind::Atoms(d) => write!(f, "atoms {d}"),
            SignalKind::Wav(p) => write!(f, "wav:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestSignal {
    pub kind: SignalKind,
    /// Seconds; ignored for WAV input.
    pub duration: f64,
    pub sr: f64,
    pub seed: u64,
}

impl TestSignal {
    pub fn new(kind: SignalKind, duration: f64, sr: f64, seed: u64) -> Self {
        Self { kind, duration, sr, seed }
    }
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn normalize(mut x: Vec<f64>) -> Vec<f64> {
    let r = rms(&x);
    if r > 0.0 {
        let g = TARGET_RMS / r;
        x.iter_mut().for_each(|v| *v *= g);
    }
    x
}

/// Generates a test signal scaled to RMS 0.1. The atom kind needs the frame set.
pub fn gen_signal(spec: &TestSignal, fs: Option<&FrameSet>) -> Result<Vec<f64>> {
    if let SignalKind::Wav(path) = &spec.kind {
        let (x, sr) = crate::wav::read_mono(path)?;
        if (sr - spec.sr).abs() > 1e-9 * spec.sr {
            return Err(Error::Mismatch(format!("{} is sampled at {sr} Hz, expected {} Hz", path.display(), spec.sr)));
        }
        if x.is_empty() {
            return Err(Error::Signal(format!("{} holds no samples", path.display())));
        }
        return Ok(normalize(x));
    }
    if !(spec.duration.is_finite() && spec.duration > 0.0) {
        return Err(Error::Signal(format!("duration must be positive, got {}", spec.duration)));
    }
    if !(spec.sr.is_finite() && spec.sr > 0.0) {
        return Err(Error::Signal(format!("sample rate must be positive, got {}", spec.sr)));
    }
    let n = (spec.duration * spec.sr).round() as usize;
    if n == 0 {
        return Err(Error::Signal("duration shorter than one sample".into()));
    }
    let sr = spec.sr;
    let x = match &spec.kind {
        SignalKind::White => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        SignalKind::Sine(f) => {
            let w = 2.0 * PI * f / sr;
            (0..n).map(|t| (w * t as f64).sin()).collect()
        }
        SignalKind::Const => vec![1.0; n],
        SignalKind::Clicks(spacing) => {
            let step = (spacing * sr).round() as usize;
            if step == 0 {
                return Err(Error::Signal(format!("click spacing {spacing} s is below one sample")));
            }
            let mut x = vec![0.0; n];
            x.iter_mut().step_by(step).for_each(|v| *v = 1.0);
            x
        }
        SignalKind::Atoms(density) => {
            let fs = fs.ok_or_else(|| Error::Signal("atom signal needs a frame set".into()))?;
            if (fs.sr() - sr).abs() > 1e-9 * sr {
                return Err(Error::Mismatch(format!("frame set at {} Hz, signal at {sr} Hz", fs.sr())));
            }
            sparse_atoms(fs, n, *density, spec.seed)?
        }
        SignalKind::Wav(_) => unreachable!(),
    };
    Ok(normalize(x))
}

/// Synthesizes random coefficients: `density·duration` frames per band on
/// average, uniform phase, magnitude in `[0.5, 1)`.
fn sparse_atoms(fs: &FrameSet, n: usize, density: f64, seed: u64) -> Result<Vec<f64>> {
    let engine = Engine::new(fs);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n as i64;
    let secs = n as f64 / fs.sr();
    let mut bands = Vec::with_capacity(fs.elements.len());
    for e in &fs.elements {
        let hop = e.hop as i64;
        let first = -(e.right() as i64 / hop);
        let last = (len - 1 + e.left() as i64).div_euclid(hop);
        let count = (last - first + 1).max(0) as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); count];
        let p = (density * secs / count.max(1) as f64).min(1.0);
        for c in coeffs.iter_mut() {
            if rng.gen::<f64>() < p {
                let mag = rng.gen_range(0.5..1.0);
                let phase = rng.gen_range(0.0..2.0 * PI);
                *c = Complex64::from_polar(mag, if fs.params.is_self_conjugate(e.q) { 0.0 } else { phase });
            }
        }
        bands.push(BandCoefficients { hop: e.hop, first, coeffs });
    }
    let stream = CoefficientStream { sr: fs.sr(), input_length: n, cache_hash: *fs.hash(), bands };
    let out = synthesize_with(&engine, &stream)?;
    let d = engine.delay();
    Ok(out[d..d + n].to_vec())
}

/// `20·log10(RMS(residual)/RMS(input))` over the samples `trim..len-trim`,
/// where `residual[t] = output[t + delay] - input[t]`. An exactly zero
/// residual reads [`ERR_FLOOR_DB`].
pub fn measure_err(input: &[f64], output: &[f64], delay: usize, trim: usize) -> Result<f64> {
    let n = input.len();
    if n <= 2 * trim {
        return Err(Error::Signal(format!(
            "signal of {n} samples is too short to trim {trim} samples at each end"
        )));
    }
    if output.len() < n + delay - trim {
        return Err(Error::Mismatch(format!(
            "output of {} samples does not cover the input ({n}) delayed by {delay}",
            output.len()
        )));
    }
    let range = trim..n - trim;
    let mut res = 0.0;
    let mut sig = 0.0;
    for t in range {
        let r = output[t + delay] - input[t];
        res += r * r;
        sig += input[t] * input[t];
    }
    if res == 0.0 {
        return Ok(ERR_FLOOR_DB);
    }
    if sig == 0.0 {
        return Err(Error::Signal("input is silent over the measured range but the output is not".into()));
    }
    Ok((10.0 * (res / sig).log10()).max(ERR_FLOOR_DB))
}

/// Rounds to the 16-bit grid (full scale 1.0), clipping to its range.
pub fn quantize16(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| (v * 32768.0).round().clamp(-32768.0, 32767.0) / 32768.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(kind: SignalKind, dur: f64) -> Vec<f64> {
        gen_signal(&TestSignal::new(kind, dur, 44100.0, 7), None).unwrap()
    }

    #[test]
    fn const_and_clicks() {
        let c = gen(SignalKind::Const, 1.0);
        assert_eq!(c.len(), 44100);
        assert!(c.iter().all(|v| *v == c[0]));
        assert!((c[0] - TARGET_RMS).abs() < 1e-15);
        let k = gen(SignalKind::Clicks(1.0), 3.0);
        let idx: Vec<usize> = k.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
        assert_eq!(idx, vec![0, 44100, 88200]);
    }

    #[test]
    fn deterministic_noise() {
        let a = gen(SignalKind::White, 0.5);
        let b = gen(SignalKind::White, 0.5);
        assert_eq!(a, b);
        let c = gen_signal(&TestSignal::new(SignalKind::White, 0.5, 44100.0, 8), None).unwrap();
        assert_ne!(a, c);
        assert!((rms(&a) - TARGET_RMS).abs() < 1e-12);
    }

    #[test]
    fn sine_has_free_running_phase() {
        let s = gen(SignalKind::Sine(440.0), 0.1);
        assert_eq!(s[0], 0.0);
        let peak = TARGET_RMS * 2f64.sqrt();
        let t = 1000;
        let expect = peak * (2.0 * PI * 440.0 * t as f64 / 44100.0).sin();
        assert!((s[t] - expect).abs() < 1e-3 * peak);
    }

    #[test]
    fn rejects_bad_durations() {
        assert!(gen_signal(&TestSignal::new(SignalKind::White, 0.0, 44100.0, 1), None).is_err());
        assert!(gen_signal(&TestSignal::new(SignalKind::Atoms(1.0), 1.0, 44100.0, 1), None).is_err());
    }

    #[test]
    fn err_examples() {
        let x = gen(SignalKind::White, 1.0);
        let d = 17;
        let mut y = vec![0.0; d];
        y.extend_from_slice(&x);
        assert_eq!(measure_err(&x, &y, d, 100).unwrap(), ERR_FLOOR_DB);
        let z: Vec<f64> = y.iter().map(|v| v * 1.001).collect();
        let e = measure_err(&x, &z, d, 100).unwrap();
        assert!((e + 60.0).abs() < 1e-9, "{e}");
        assert!(measure_err(&x, &y, d, 30000).is_err());
    }

    #[test]
    fn sixteen_bit_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..441_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = measure_err(&x, &quantize16(&x), 0, 0).unwrap();
        assert!((e + 96.3).abs() < 0.2, "{e}");
    }

    #[test]
    fn kind_names_round_trip() {
        for s in ["white", "sine 30", "sine 440", "sine 20k", "const", "clicks", "atom", "clicks 0.5"] {
            assert_eq!(SignalKind::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(SignalKind::parse("sine 20k"), Some(SignalKind::Sine(20000.0)));
        assert!(SignalKind::parse("sine").is_none());
        assert!(SignalKind::parse("pink").is_none());
    }
}
