//! Sampling grid and per-band parameters derived from a configuration.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::warpmap::WarpMap;
use crate::window::PrototypeWindow;

/// Slack for comparing products that are exactly 1 in exact arithmetic.
const FRAME_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BandParams {
    pub q: usize,
    /// `f_q = θ(qb)` in Hz.
    pub center: f64,
    /// Warped essential bandwidth `BW_q` in Hz.
    pub bandwidth: f64,
    /// Hop `n_q` in samples.
    pub hop: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameParams {
    pub sr: f64,
    /// `K`, the essential bandwidth as a multiple of `b`.
    pub bw_multiple: f64,
    /// `R`.
    pub overlap: f64,
    /// Time shift `a` (s).
    pub a: f64,
    /// Frequency shift `b` (warped Hz).
    pub b: f64,
    /// `BW = K·b`.
    pub bw: f64,
    pub q_sup: usize,
    pub c_b: f64,
    pub c_d: f64,
    pub c_cut: f64,
    pub c_tc: f64,
    /// Precompute length (s).
    pub t_c: f64,
    /// Maximum atom length (s).
    pub t_max: f64,
    /// Infimum of `θ'` over the analysis range.
    pub theta_inf: f64,
    /// Precompute DFT length (samples).
    pub n_c: usize,
    pub uniform_hop: bool,
    pub bands: Vec<BandParams>,
}

/// Outcome of the frame-condition check. Margins are `1 - abK` and `1 - d_q·BW_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameCheck {
    pub abk: f64,
    pub abk_margin: f64,
    pub band_margins: Vec<f64>,
    pub passed: bool,
}

impl FrameCheck {
    pub fn worst_band(&self) -> Option<(usize, f64)> {
        self.band_margins
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.abk_margin < -FRAME_TOL {
            parts.push(format!("abK = {:.6} > 1", self.abk));
        }
        let bad: Vec<usize> = self
            .band_margins
            .iter()
            .enumerate()
            .filter(|(_, m)| **m < -FRAME_TOL)
            .map(|(q, _)| q)
            .collect();
        if let (Some(first), Some((q, m))) = (bad.first(), self.worst_band()) {
            parts.push(format!(
                "d_q·BW_q > 1 in {} bands (first q = {first}, worst q = {q} with d_q·BW_q = {:.4})",
                bad.len(),
                1.0 - m
            ));
        }
        if parts.is_empty() {
            "frame conditions hold".to_string()
        } else {
            parts.join("; ")
        }
    }
}

/// Smallest integer >= `n` with no prime factor above 7.
fn next_smooth(n: usize) -> usize {
    let mut m = n.max(2);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl FrameParams {
    /// Derives all parameters and fails if the frame conditions do not hold.
    pub fn derive(cfg: &Config, map: &WarpMap, window: &PrototypeWindow) -> Result<Self> {
        let p = Self::derive_unchecked(cfg, map, window)?;
        let check = p.check_frame_conditions();
        if !check.passed {
            return Err(Error::FrameCondition(check.describe()));
        }
        Ok(p)
    }

    /// Derives parameters without enforcing the frame conditions.
    pub fn derive_unchecked(cfg: &Config, map: &WarpMap, window: &PrototypeWindow) -> Result<Self> {
        cfg.validate()?;
        let sr = cfg.sr;
        if (map.sample_rate() - sr).abs() > 1e-9 * sr {
            return Err(Error::Mismatch(format!("map built for {} Hz, config says {sr} Hz", map.sample_rate())));
        }
        let overlap = cfg.overlap;
        let bw_multiple = cfg.bw_multiple;
        let a = cfg.time_shift();
        let b = cfg.freq_shift();
        if (window.shift - b).abs() > 1e-12 * b {
            return Err(Error::Mismatch(format!("window built for b = {}, derived b = {b}", window.shift)));
        }
        let bw = bw_multiple * b;

        let grid = map.nu_top() / b;
        let q_top = grid.round();
        if (grid - q_top).abs() > 1e-6 || q_top < 1.0 {
            return Err(Error::FrameCondition(format!(
                "warp map reaches Nyquist at {:.6} bands, not on the band grid",
                grid
            )));
        }
        let q_sup = q_top as usize + 1;

        let mut bands: Vec<BandParams> = (0..q_sup)
            .map(|q| {
                let nu = q as f64 * b;
                let bandwidth = map.eval(nu + 0.5 * bw) - map.eval(nu - 0.5 * bw);
                let hop = ((sr / (bandwidth * cfg.c_d)).floor() as usize).max(1);
                BandParams { q, center: map.eval(nu), bandwidth, hop }
            })
            .collect();
        if cfg.uniform_hop {
            let min_hop = bands.iter().map(|bp| bp.hop).min().unwrap_or(1);
            for bp in &mut bands {
                bp.hop = min_hop;
            }
        }

        let top = (q_sup - 1) as f64 * b;
        const GRID: usize = 100_000;
        let theta_inf = (0..=GRID)
            .map(|i| map.eval_derivative(top * i as f64 / GRID as f64))
            .fold(f64::INFINITY, f64::min);

        let t_c = window.duration / theta_inf * cfg.c_tc;
        let n_c = next_smooth(((t_c * sr).ceil() as usize).max(2));
        let n_c = if n_c % 2 == 1 { next_smooth(n_c + 1) } else { n_c };
        if (n_c as f64) < window.duration * sr {
            return Err(Error::InvalidParameter(format!(
                "precompute buffer of {n_c} samples is shorter than the prototype window"
            )));
        }

        Ok(Self {
            sr,
            bw_multiple,
            overlap,
            a,
            b,
            bw,
            q_sup,
            c_b: cfg.c_b,
            c_d: cfg.c_d,
            c_cut: cfg.c_cut,
            c_tc: cfg.c_tc,
            t_c,
            t_max: cfg.t_max,
            theta_inf,
            n_c,
            uniform_hop: cfg.uniform_hop,
            bands,
        })
    }

    pub fn check_frame_conditions(&self) -> FrameCheck {
        let abk = self.a * self.b * self.bw_multiple;
        let band_margins: Vec<f64> = self
            .bands
            .iter()
            .map(|bp| 1.0 - bp.hop as f64 / self.sr * bp.bandwidth)
            .collect();
        let passed = abk <= 1.0 + FRAME_TOL && band_margins.iter().all(|m| *m >= -FRAME_TOL);
        FrameCheck { abk, abk_margin: 1.0 - abk, band_margins, passed }
    }

    /// Hop `d_q` in seconds.
    pub fn hop_seconds(&self, q: usize) -> f64 {
        self.bands[q].hop as f64 / self.sr
    }

    /// Bands whose atoms are real: DC and Nyquist.
    pub fn is_self_conjugate(&self, q: usize) -> bool {
        q == 0 || q + 1 == self.q_sup
    }

    /// Period of the warped frequency axis, `2·θ⁻¹(SR/2)`.
    pub fn warped_period(&self) -> f64 {
        2.0 * (self.q_sup - 1) as f64 * self.b
    }
}
