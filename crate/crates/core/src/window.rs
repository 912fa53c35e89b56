//! Prototype windows with closed-form time and frequency expressions.
//!
//! Transform convention: `ĥ(ν) = ∫ h(t) e^(-j2πνt) dt`, `ν` in Hz.
//!
//! * Raised cosine: `h(t) = sqrt(2b/R) cos(πt/T)` on `[-T/2, T/2]`, and
//!   `ĥ(ν) = T sqrt(b/(2R)) (sinc(νT - 1/2) + sinc(νT + 1/2))`.
//! * Gaussian: `ĥ(ν) = C T sqrt(b/R) exp(-(νT)²)`, whose inverse transform is
//!   `h(t) = C sqrt(πb/R) exp(-(πt/T)²)`.
//!
//! With `a = T/R` both satisfy `(1/(ab)) ∫|ĥ|² = 1` (exactly for the raised
//! cosine; for the Gaussian up to the precision of `C`).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Overlap-add constant of the Gaussian prototype.
pub const GAUSS_C: f64 = 0.893249;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    RaisedCosine,
    Gaussian,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::RaisedCosine => "raised-cosine",
            WindowKind::Gaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raised-cosine" | "raised_cosine" | "rcw" | "cosine" => Some(WindowKind::RaisedCosine),
            "gaussian" | "gauss" => Some(WindowKind::Gaussian),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrototypeWindow {
    pub kind: WindowKind,
    /// Nominal duration `T` in seconds.
    pub duration: f64,
    /// Overlap factor `R`.
    pub overlap: f64,
    /// Frequency shift `b` in warped Hz.
    pub shift: f64,
    /// `h(0)`.
    pub amp: f64,
    /// Gaussian constant `C` (1 for the raised cosine).
    pub c_gauss: f64,
}

/// Normalized sinc, `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

fn check(duration: f64, shift: f64, overlap: f64, min_overlap: f64) -> Result<()> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::InvalidParameter(format!("window duration must be positive, got {duration}")));
    }
    if !(shift.is_finite() && shift > 0.0) {
        return Err(Error::InvalidParameter(format!("frequency shift must be positive, got {shift}")));
    }
    if !(overlap.is_finite() && overlap >= min_overlap) {
        return Err(Error::InvalidParameter(format!(
            "overlap R must be at least {min_overlap}, got {overlap}"
        )));
    }
    Ok(())
}

impl PrototypeWindow {
    pub fn raised_cosine(duration: f64, shift: f64, overlap: f64) -> Result<Self> {
        check(duration, shift, overlap, 3.0)?;
        Ok(Self {
            kind: WindowKind::RaisedCosine,
            duration,
            overlap,
            shift,
            amp: (2.0 * shift / overlap).sqrt(),
            c_gauss: 1.0,
        })
    }

    pub fn gaussian(duration: f64, shift: f64, overlap: f64) -> Result<Self> {
        check(duration, shift, overlap, 2.0)?;
        Ok(Self {
            kind: WindowKind::Gaussian,
            duration,
            overlap,
            shift,
            amp: GAUSS_C * (PI * shift / overlap).sqrt(),
            c_gauss: GAUSS_C,
        })
    }

    pub fn new(kind: WindowKind, duration: f64, shift: f64, overlap: f64) -> Result<Self> {
        match kind {
            WindowKind::RaisedCosine => Self::raised_cosine(duration, shift, overlap),
            WindowKind::Gaussian => Self::gaussian(duration, shift, overlap),
        }
    }

    /// `h(t)`.
    pub fn time_eval(&self, t: f64) -> f64 {
        let dur = self.duration;
        match self.kind {
            WindowKind::RaisedCosine => {
                if t.abs() > 0.5 * dur {
                    0.0
                } else {
                    self.amp * (PI * t / dur).cos()
                }
            }
            WindowKind::Gaussian => {
                let x = PI * t / dur;
                self.amp * (-x * x).exp()
            }
        }
    }

    /// `ĥ(ν)`, real and even.
    pub fn freq_eval(&self, nu: f64) -> f64 {
        let dur = self.duration;
        let (b, r) = (self.shift, self.overlap);
        match self.kind {
            WindowKind::RaisedCosine => {
                let x = nu * dur;
                dur * (b / (2.0 * r)).sqrt() * (sinc(x - 0.5) + sinc(x + 0.5))
            }
            WindowKind::Gaussian => {
                let x = nu * dur;
                self.c_gauss * dur * (b / r).sqrt() * (-x * x).exp()
            }
        }
    }

    /// Time extent outside which `h` is zero (raised cosine) or negligible.
    pub fn support(&self) -> f64 {
        match self.kind {
            WindowKind::RaisedCosine => self.duration,
            // exp(-(πt/T)²) < 1e-16 beyond |t| = 1.95 T
            WindowKind::Gaussian => 3.9 * self.duration,
        }
    }
}
