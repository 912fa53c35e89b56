//! Browser bindings: warp curve, atom viewer, flatness and round-trip error.
//!
//! The page builds one [`Demo`] per parameter set and queries it; everything
//! runs on the main thread, so the defaults keep atoms short.

use wasm_bindgen::prelude::*;
use warped_gabor::engine::{self, Engine};
use warped_gabor::signals::{gen_signal, measure_err, SignalKind, TestSignal};
use warped_gabor::{cache, Config, FrameSet};

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `θ(ν)` for the map of `preset` on `points` warped frequencies in `[0, ν_top]`,
/// as interleaved `(ν, f)` pairs.
#[wasm_bindgen]
pub fn warp_curve(preset: &str, points: usize) -> Result<Vec<f64>, JsError> {
    let cfg = Config::preset(preset).ok_or_else(|| js(format!("unknown preset {preset:?}")))?;
    let map = cfg.build_map().map_err(js)?;
    let points = points.max(2);
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let nu = map.nu_top() * i as f64 / (points - 1) as f64;
        out.push(nu);
        out.push(map.eval(nu));
    }
    Ok(out)
}

#[wasm_bindgen]
pub struct Demo {
    fs: FrameSet,
    engine: Engine,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the frame set of `preset` with the given truncation constants.
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, c_cut: f64, t_max: f64) -> Result<Demo, JsError> {
        let mut cfg = Config::preset(preset).ok_or_else(|| js(format!("unknown preset {preset:?}")))?;
        cfg.c_cut = c_cut;
        cfg.t_max = t_max;
        let fs = cache::load_or_build(&cfg, None).map_err(js)?;
        let engine = Engine::new(&fs);
        Ok(Demo { fs, engine })
    }

    pub fn bands(&self) -> usize {
        self.fs.params.q_sup
    }

    /// Center frequency of band `q` in Hz.
    pub fn center(&self, q: usize) -> f64 {
        self.fs.params.bands.get(q).map_or(f64::NAN, |b| b.center)
    }

    pub fn delay(&self) -> usize {
        self.engine.delay()
    }

    pub fn n_avg(&self) -> f64 {
        engine::estimate_cost(&self.fs).n_avg
    }

    /// Atom of band `q` as interleaved `(re, im)`; the origin is at `len/2` rounded down.
    pub fn atom(&self, q: usize) -> Result<Vec<f64>, JsError> {
        let e = self.fs.elements.get(q).ok_or_else(|| js(format!("band {q} out of range")))?;
        Ok(e.samples.iter().flat_map(|s| [s.re, s.im]).collect())
    }

    pub fn atom_origin(&self, q: usize) -> usize {
        self.fs.elements.get(q).map_or(0, |e| e.center_offset)
    }

    /// Frame-operator diagonal `D(f)` on `points` frequencies in `[0, SR/2]`.
    pub fn flatness(&self, points: usize) -> Vec<f64> {
        engine::pr_diagnostic(&self.fs, points).response
    }

    /// Round-trip error in dB for a generated signal such as `white` or `sine 440`.
    pub fn roundtrip_err(&self, signal: &str, duration: f64, seed: u32) -> Result<f64, JsError> {
        let kind = SignalKind::parse(signal).ok_or_else(|| js(format!("unknown signal {signal:?}")))?;
        let sr = self.fs.sr();
        let x = gen_signal(&TestSignal::new(kind, duration, sr, seed as u64), Some(&self.fs)).map_err(js)?;
        let (c, _) = engine::analyze_with_stats(&self.engine, &x, sr).map_err(js)?;
        let y = engine::synthesize_with(&self.engine, &c).map_err(js)?;
        measure_err(&x, &y, self.engine.delay(), 0).map_err(js)
    }
}
