//! Flat `key = value` engine configuration.
//!
//! ```text
//! # Gaussian preset
//! sr = 44100
//! window.kind = gaussian
//! window.T = 0.1666666667
//! R = 4
//! K = 8
//! C_b = 2
//! ```
//!
//! `preset = gaussian | raised-cosine` may appear anywhere and is applied
//! before the other keys. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params::FrameParams;
use crate::warpmap::WarpMap;
use crate::window::{PrototypeWindow, WindowKind};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub sr: f64,
    pub window: WindowKind,
    /// Prototype window duration `T` (s).
    pub window_t: f64,
    /// Overlap factor `R`.
    pub overlap: f64,
    /// Essential bandwidth multiple `K` (`BW = K·b`).
    pub bw_multiple: f64,
    /// Explicit time shift `a` (s); `T/R` when absent.
    pub a: Option<f64>,
    pub c_b: f64,
    pub c_d: f64,
    pub c_cut: f64,
    pub c_tc: f64,
    pub t_max: f64,
    pub map_f0: f64,
    pub map_k: f64,
    /// Same hop for every band (the smallest one). Expensive; experiments only.
    pub uniform_hop: bool,
    pub seed: u64,
    /// Benchmark signal duration (s).
    pub duration: f64,
    pub cache: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self::gaussian_preset()
    }
}

const KEYS: &[&str] = &[
    "preset",
    "sr",
    "window.kind",
    "window.T",
    "R",
    "K",
    "a",
    "C_b",
    "C_d",
    "C_cut",
    "C_Tc",
    "T_max",
    "map.f0",
    "map.k",
    "hop.uniform",
    "seed",
    "duration",
    "cache",
];

impl Config {
    /// BW = 24 Hz, R = 4, T = 0.167 s, a = 1/24 s, b = 3 Hz, C_d = 2, C_cut = 1000, T_max = 0.4 s.
    pub fn gaussian_preset() -> Self {
        Self {
            sr: 44100.0,
            window: WindowKind::Gaussian,
            window_t: 1.0 / 6.0,
            overlap: 4.0,
            bw_multiple: 8.0,
            a: None,
            c_b: 2.0,
            c_d: 2.0,
            c_cut: 1000.0,
            c_tc: 3.0,
            t_max: 0.4,
            map_f0: 12.0,
            map_k: 36.0,
            uniform_hop: false,
            seed: 1,
            duration: 5.0,
            cache: None,
        }
    }

    /// BW = 24 Hz, R = 7, T = 7/24 s, a = 1/24 s, b = 12/7 Hz, C_d = 4, C_cut = 55, T_max = 0.5 s.
    pub fn raised_cosine_preset() -> Self {
        Self {
            window: WindowKind::RaisedCosine,
            window_t: 7.0 / 24.0,
            overlap: 7.0,
            bw_multiple: 14.0,
            c_d: 4.0,
            c_cut: 55.0,
            t_max: 0.5,
            ..Self::gaussian_preset()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match WindowKind::parse(name)? {
            WindowKind::Gaussian => Some(Self::gaussian_preset()),
            WindowKind::RaisedCosine => Some(Self::raised_cosine_preset()),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut cfg = Self::gaussian_preset();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config { line, msg: format!("expected key = value, got {content:?}") })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config { line, msg: format!("unknown key {key:?}") });
            }
            if key == "preset" {
                cfg = Self::preset(value)
                    .ok_or_else(|| Error::Config { line, msg: format!("unknown preset {value:?}") })?;
            } else {
                entries.push((line, key, value));
            }
        }
        for (line, key, value) in entries {
            cfg.set(key, value).map_err(|msg| Error::Config { line, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let num = || -> std::result::Result<f64, String> {
            value.parse::<f64>().map_err(|_| format!("{key}: not a number: {value:?}"))
        };
        match key {
            "sr" => self.sr = num()?,
            "window.kind" => {
                self.window = WindowKind::parse(value).ok_or_else(|| format!("unknown window kind {value:?}"))?
            }
            "window.T" => self.window_t = num()?,
            "R" => self.overlap = num()?,
            "K" => self.bw_multiple = num()?,
            "a" => {
                self.a = match value {
                    "" | "auto" => None,
                    _ => Some(num()?),
                }
            }
            "C_b" => self.c_b = num()?,
            "C_d" => self.c_d = num()?,
            "C_cut" => self.c_cut = num()?,
            "C_Tc" => self.c_tc = num()?,
            "T_max" => self.t_max = num()?,
            "map.f0" => self.map_f0 = num()?,
            "map.k" => self.map_k = num()?,
            "hop.uniform" => {
                self.uniform_hop = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(format!("hop.uniform: expected a boolean, got {value:?}")),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| format!("seed: not an integer: {value:?}"))?,
            "duration" => self.duration = num()?,
            "cache" => self.cache = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sr", self.sr),
            ("window.T", self.window_t),
            ("R", self.overlap),
            ("K", self.bw_multiple),
            ("C_b", self.c_b),
            ("C_d", self.c_d),
            ("C_Tc", self.c_tc),
            ("T_max", self.t_max),
            ("map.f0", self.map_f0),
            ("map.k", self.map_k),
            ("duration", self.duration),
            ("a", self.a.unwrap_or(1.0)),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.c_cut > 1.0) {
            return Err(Error::InvalidParameter(format!("C_cut must exceed 1, got {}", self.c_cut)));
        }
        Ok(())
    }

    /// Time shift `a`, defaulting to `T/R`.
    pub fn time_shift(&self) -> f64 {
        self.a.unwrap_or(self.window_t / self.overlap)
    }

    /// Frequency shift `b = 1/(a·R·C_b)`.
    pub fn freq_shift(&self) -> f64 {
        1.0 / (self.time_shift() * self.overlap * self.c_b)
    }

    pub fn build_map(&self) -> Result<WarpMap> {
        WarpMap::exponential(self.map_f0, self.map_k, self.sr, self.freq_shift())
    }

    pub fn build_window(&self) -> Result<PrototypeWindow> {
        PrototypeWindow::new(self.window, self.window_t, self.freq_shift(), self.overlap)
    }

    /// Map, window and checked frame parameters.
    pub fn build_parts(&self) -> Result<(WarpMap, PrototypeWindow, FrameParams)> {
        self.validate()?;
        let map = self.build_map()?;
        let window = self.build_window()?;
        let params = FrameParams::derive(self, &map, &window)?;
        Ok((map, window, params))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sr = {}", self.sr);
        let _ = writeln!(s, "window.kind = {}", self.window.name());
        let _ = writeln!(s, "window.T = {}", self.window_t);
        let _ = writeln!(s, "R = {}", self.overlap);
        let _ = writeln!(s, "K = {}", self.bw_multiple);
        match self.a {
            Some(a) => {
                let _ = writeln!(s, "a = {a}");
            }
            None => {
                let _ = writeln!(s, "a = auto");
            }
        }
        let _ = writeln!(s, "C_b = {}", self.c_b);
        let _ = writeln!(s, "C_d = {}", self.c_d);
        let _ = writeln!(s, "C_cut = {}", self.c_cut);
        let _ = writeln!(s, "C_Tc = {}", self.c_tc);
        let _ = writeln!(s, "T_max = {}", self.t_max);
        let _ = writeln!(s, "map.f0 = {}", self.map_f0);
        let _ = writeln!(s, "map.k = {}", self.map_k);
        let _ = writeln!(s, "hop.uniform = {}", self.uniform_hop);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "duration = {}", self.duration);
        if let Some(p) = &self.cache {
            let _ = writeln!(s, "cache = {}", p.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_give_published_shifts() {
        let g = Config::gaussian_preset();
        assert!((g.time_shift() - 0.04167).abs() < 1e-5);
        assert!((g.freq_shift() - 3.0).abs() < 1e-12);
        assert!((g.bw_multiple * g.freq_shift() - 24.0).abs() < 1e-12);
        let r = Config::raised_cosine_preset();
        assert!((r.time_shift() - 0.04167).abs() < 1e-5);
        assert!((r.freq_shift() - 1.714).abs() < 1e-3);
        assert!((r.bw_multiple * r.freq_shift() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn parse_round_trip() {
        let mut cfg = Config::raised_cosine_preset();
        cfg.a = Some(0.05);
        cfg.seed = 99;
        cfg.cache = Some(PathBuf::from("/tmp/x.wgf"));
        assert_eq!(Config::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn preset_key_applies_first() {
        let cfg = Config::parse("C_cut = 77\npreset = raised-cosine # comment\n").unwrap();
        assert_eq!(cfg.window, WindowKind::RaisedCosine);
        assert_eq!(cfg.c_cut, 77.0);
        assert_eq!(cfg.overlap, 7.0);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        let err = Config::parse("sr = 44100\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        assert!(Config::parse("sr = -1").is_err());
        assert!(Config::parse("C_cut = 1").is_err());
        assert!(Config::parse("R = abc").is_err());
        assert!(Config::parse("just text").is_err());
        assert!(Config::parse("window.kind = hann").is_err());
    }

    #[test]
    fn defaults_are_the_gaussian_preset() {
        assert_eq!(Config::parse("").unwrap(), Config::gaussian_preset());
    }
}
