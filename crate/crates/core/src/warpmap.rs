//! Frequency warping maps.
//!
//! The map `θ` sends warped frequency `ν` (warped Hz) to physical frequency
//! `f` (Hz). The exponential family has the core `θ(ν) = f0 · 2^(ν/k)` and two
//! linear tails:
//!
//! * below `nu_in` the tangent of the core that passes through the origin,
//!   which gives `nu_in = k / ln 2` and `f_in = e · f0`;
//! * above `nu_out` the tangent of the core chosen so that the tail reaches
//!   `SR/2` exactly on the grid point `nu_top = q_top · b`.
//!
//! Both tails are tangents, so the map is C¹ everywhere. Negative arguments
//! are handled by odd extension. Segments are closed on the left.

use std::f64::consts::{E, LN_2};

use crate::error::{Error, Result};

/// How a map was constructed; enough to rebuild it bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapDescriptor {
    Exponential { f0: f64, k: f64, sr: f64, b: f64 },
    Linear { slope: f64, sr: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarpMap {
    descriptor: MapDescriptor,
    f0: f64,
    k: f64,
    nu_in: f64,
    nu_out: f64,
    f_in: f64,
    f_out: f64,
    slope_lo: f64,
    slope_hi: f64,
    sr: f64,
    nu_top: f64,
}

impl WarpMap {
    /// Builds the C¹ exponential map for frequency grid step `b`.
    pub fn exponential(f0: f64, k: f64, sr: f64, b: f64) -> Result<Self> {
        for (name, v) in [("f0", f0), ("k", k), ("sr", sr), ("b", b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let nyquist = 0.5 * sr;
        let c = LN_2 / k;
        let nu_in = k / LN_2;
        let f_in = E * f0;
        if f_in >= nyquist {
            return Err(Error::MapConstruction(format!(
                "lower seam e*f0 = {f_in:.3} Hz is not below Nyquist {nyquist} Hz"
            )));
        }
        // where the bare exponential would reach Nyquist
        let nu_core_top = k * (nyquist / f0).log2();
        let q_top = (nu_core_top / b).floor() + 1.0;
        let nu_top = q_top * b;
        // Upper tangency at nu_out = nu_top - z/c with z - ln(1+z) = c·(nu_top - nu_core_top).
        let target = c * (nu_top - nu_core_top);
        let z_max = c * (nu_top - nu_in);
        let h = |z: f64| z - z.ln_1p() - target;
        if !(z_max > 0.0) || h(z_max) < 0.0 {
            return Err(Error::MapConstruction(format!(
                "no bracket for the upper tangency (k = {k} too small for b = {b})"
            )));
        }
        let z = bisect(h, 0.0, z_max);
        let nu_out = nu_top - z / c;
        if nu_out < nu_in {
            return Err(Error::MapConstruction(format!(
                "upper seam {nu_out} falls below lower seam {nu_in}"
            )));
        }
        let f_out = f0 * (nu_out / k).exp2();
        Ok(Self {
            descriptor: MapDescriptor::Exponential { f0, k, sr, b },
            f0,
            k,
            nu_in,
            nu_out,
            f_in,
            f_out,
            slope_lo: f_in * c,
            slope_hi: f_out * c,
            sr,
            nu_top,
        })
    }

    /// `θ(ν) = slope · ν`; `slope = 1` is the identity map.
    pub fn linear(slope: f64, sr: f64) -> Result<Self> {
        if !(slope.is_finite() && slope > 0.0 && sr.is_finite() && sr > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "linear map needs positive slope and sr, got {slope}, {sr}"
            )));
        }
        Ok(Self {
            descriptor: MapDescriptor::Linear { slope, sr },
            f0: 0.0,
            k: 0.0,
            nu_in: f64::INFINITY,
            nu_out: f64::INFINITY,
            f_in: f64::INFINITY,
            f_out: f64::INFINITY,
            slope_lo: slope,
            slope_hi: slope,
            sr,
            nu_top: 0.5 * sr / slope,
        })
    }

    pub fn from_descriptor(d: MapDescriptor) -> Result<Self> {
        match d {
            MapDescriptor::Exponential { f0, k, sr, b } => Self::exponential(f0, k, sr, b),
            MapDescriptor::Linear { slope, sr } => Self::linear(slope, sr),
        }
    }

    /// `θ(ν)`.
    pub fn eval(&self, nu: f64) -> f64 {
        let x = nu.abs();
        let y = if x < self.nu_in {
            self.slope_lo * x
        } else if x < self.nu_out {
            self.f0 * (x / self.k).exp2()
        } else {
            self.f_out + self.slope_hi * (x - self.nu_out)
        };
        y.copysign(nu)
    }

    /// `θ⁻¹(f)`.
    pub fn eval_inverse(&self, f: f64) -> f64 {
        let x = f.abs();
        let y = if x < self.f_in {
            x / self.slope_lo
        } else if x < self.f_out {
            self.k * (x / self.f0).log2()
        } else {
            self.nu_out + (x - self.f_out) / self.slope_hi
        };
        y.copysign(f)
    }

    /// `θ'(ν)`, always strictly positive.
    pub fn eval_derivative(&self, nu: f64) -> f64 {
        let x = nu.abs();
        if x < self.nu_in {
            self.slope_lo
        } else if x < self.nu_out {
            self.f0 * LN_2 / self.k * (x / self.k).exp2()
        } else {
            self.slope_hi
        }
    }

    pub fn descriptor(&self) -> MapDescriptor {
        self.descriptor
    }

    pub fn sample_rate(&self) -> f64 {
        self.sr
    }

    /// Warped frequency at which the map reaches `SR/2`.
    pub fn nu_top(&self) -> f64 {
        self.nu_top
    }

    pub fn nu_in(&self) -> f64 {
        self.nu_in
    }

    pub fn nu_out(&self) -> f64 {
        self.nu_out
    }

    pub fn f_in(&self) -> f64 {
        self.f_in
    }

    pub fn f_out(&self) -> f64 {
        self.f_out
    }

    pub fn slope_lo(&self) -> f64 {
        self.slope_lo
    }

    pub fn slope_hi(&self) -> f64 {
        self.slope_hi
    }
}

/// Bisection for an increasing function with `f(lo) < 0 <= f(hi)`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
