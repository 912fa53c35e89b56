//! Precomputation of the redressed warped atoms.
//!
//! Band `q` has the zero-phase spectrum
//!
//! ```text
//! Φ_q(f) = sqrt(n_q / a) · ĥ(θ⁻¹(f) - q·b)
//! ```
//!
//! sampled on an `N_c`-point DFT grid over `[-SR/2, SR/2)`. The warped axis is
//! periodic with period `2·θ⁻¹(SR/2)` because the map is linear through
//! Nyquist, so `ĥ` is evaluated on the wrapped distance `θ⁻¹(f) - q·b`
//! together with its nearest periodic images. The band at Nyquist is then its
//! own mirror and its atom is real, like the DC band.
//!
//! With this scaling `Σ_q |Φ_q|² / n_q` is the frame-operator response, and
//! the inverse DFT (normalized by `1/N_c`) gives the sampled atom directly.
//! Atoms for frame `n` are the `n = 0` atom shifted by `n·n_q` samples.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::FrameParams;
use crate::warpmap::WarpMap;
use crate::window::PrototypeWindow;

/// Truncation energy loss above which a band is reported.
pub const TRUNC_LOSS_WARN: f64 = 1e-4;

/// One band's `n = 0` atom, stored over its support only.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameElement {
    pub q: usize,
    pub samples: Vec<Complex64>,
    /// Index of `t = 0` within `samples`.
    pub center_offset: usize,
    /// Hop `n_q` (samples).
    pub hop: usize,
    pub energy: f64,
    /// Fraction of the untruncated energy removed by truncation.
    pub trunc_loss: f64,
    /// `|atom|` at the compute-buffer edge relative to its peak, before truncation.
    pub edge_ratio: f64,
}

impl FrameElement {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples before `t = 0`.
    pub fn left(&self) -> usize {
        self.center_offset
    }

    /// Samples after `t = 0`.
    pub fn right(&self) -> usize {
        self.samples.len() - 1 - self.center_offset
    }

    /// Support length `T_q` in seconds.
    pub fn duration(&self, sr: f64) -> f64 {
        self.samples.len() as f64 / sr
    }

    /// Atom value at sample offset `t` from its origin; zero off the support.
    pub fn at(&self, t: i64) -> Complex64 {
        let i = t + self.center_offset as i64;
        if i < 0 || i >= self.samples.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.samples[i as usize]
        }
    }
}

fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum()
}

/// Shared state for generating the atoms of one parameter set.
pub struct AtomGenerator<'a> {
    params: &'a FrameParams,
    window: &'a PrototypeWindow,
    /// `θ⁻¹` on the DFT grid, in FFT bin order.
    warped: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl<'a> AtomGenerator<'a> {
    pub fn new(params: &'a FrameParams, map: &WarpMap, window: &'a PrototypeWindow) -> Self {
        let n = params.n_c;
        let warped = (0..n)
            .map(|m| {
                let k = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                map.eval_inverse(k * params.sr / n as f64)
            })
            .collect();
        let ifft = FftPlanner::new().plan_fft_inverse(n);
        Self { params, window, warped, ifft }
    }

    /// `Φ_q` on the DFT grid (real, zero phase).
    pub fn spectrum(&self, q: usize) -> Vec<f64> {
        let p = self.params;
        let period = p.warped_period();
        let center = q as f64 * p.b;
        let scale = (p.bands[q].hop as f64 / p.a).sqrt();
        self.warped
            .iter()
            .map(|&nu| {
                let x = nu - center;
                let w = x - period * (x / period).round();
                let s = self.window.freq_eval(w - period)
                    + self.window.freq_eval(w)
                    + self.window.freq_eval(w + period);
                scale * s
            })
            .collect()
    }

    /// Untruncated atom, rotated so that `t = 0` sits at index `N_c/2`.
    pub fn atom(&self, q: usize) -> Result<FrameElement> {
        let p = self.params;
        if q >= p.q_sup {
            return Err(Error::Atom { band: q, reason: format!("band index out of range (q_sup = {})", p.q_sup) });
        }
        let n = p.n_c;
        let mut buf: Vec<Complex64> = self.spectrum(q).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        self.ifft.process(&mut buf);
        let norm = 1.0 / n as f64;
        let half = n / 2;
        let samples: Vec<Complex64> = (0..n).map(|i| buf[(i + n - half) % n] * norm).collect();
        let peak = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::Atom { band: q, reason: "atom vanishes on the compute grid".into() });
        }
        let edge_ratio = samples[0].norm().max(samples[n - 1].norm()) / peak;
        // truncation keeps anything above peak/C_cut, wrapped samples included
        if edge_ratio * p.c_cut >= 1.0 {
            log::warn!("band {q}: atom edge at {edge_ratio:.2e} of peak survives truncation; compute buffer too short (raise C_Tc)");
        }
        Ok(FrameElement {
            q,
            energy: energy(&samples),
            samples,
            center_offset: half,
            hop: p.bands[q].hop,
            trunc_loss: 0.0,
            edge_ratio,
        })
    }
}

/// Untruncated atom of band `q`.
pub fn generate_atom(q: usize, params: &FrameParams, map: &WarpMap, window: &PrototypeWindow) -> Result<FrameElement> {
    AtomGenerator::new(params, map, window).atom(q)
}

/// Zeroes the atom beyond the outermost samples with `|x| >= max|x| / C_cut`,
/// then clips it to at most `T_max·SR` samples centred on its origin.
pub fn truncate_atom(e: &FrameElement, c_cut: f64, t_max: f64, sr: f64) -> Result<FrameElement> {
    let band = e.q;
    if e.samples.is_empty() {
        return Err(Error::Atom { band, reason: "empty atom".into() });
    }
    let mags: Vec<f64> = e.samples.iter().map(|c| c.norm()).collect();
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let threshold = peak / c_cut;
    let lo = mags.iter().position(|m| *m >= threshold);
    let hi = mags.iter().rposition(|m| *m >= threshold);
    let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
        return Err(Error::Atom { band, reason: "no sample above the truncation threshold".into() });
    };
    let c = e.center_offset;
    let max_len = (t_max * sr).floor() as usize;
    if max_len == 0 {
        return Err(Error::Atom { band, reason: format!("T_max = {t_max} s leaves no samples") });
    }
    let half = (max_len - 1) / 2;
    lo = lo.max(c.saturating_sub(half)).min(c);
    hi = hi.min(c + half).max(c);
    let samples = e.samples[lo..=hi].to_vec();
    let kept = energy(&samples);
    let removed = 1.0 - kept / e.energy;
    Ok(FrameElement {
        q: e.q,
        samples,
        center_offset: c - lo,
        hop: e.hop,
        energy: kept,
        trunc_loss: (e.trunc_loss + removed * (1.0 - e.trunc_loss)).max(0.0),
        edge_ratio: e.edge_ratio,
    })
}

/// All truncated atoms of one configuration.
#[derive(Clone, Debug)]
pub struct FrameSet {
    pub params: FrameParams,
    pub map: WarpMap,
    pub window: PrototypeWindow,
    pub elements: Vec<FrameElement>,
    hash: [u8; 32],
}

impl FrameSet {
    pub fn build(params: FrameParams, map: WarpMap, window: PrototypeWindow) -> Result<Self> {
        let elements = {
            let generator = AtomGenerator::new(&params, &map, &window);
            let make = |q: usize| -> Result<FrameElement> {
                let raw = generator.atom(q)?;
                truncate_atom(&raw, params.c_cut, params.t_max, params.sr)
            };
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                (0..params.q_sup).into_par_iter().map(make).collect::<Result<Vec<_>>>()?
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..params.q_sup).map(make).collect::<Result<Vec<_>>>()?
            }
        };
        let lossy: Vec<&FrameElement> = elements.iter().filter(|e| e.trunc_loss > TRUNC_LOSS_WARN).collect();
        if let Some(worst) = lossy.iter().max_by(|a, b| a.trunc_loss.total_cmp(&b.trunc_loss)) {
            log::warn!(
                "{} bands lose more than {TRUNC_LOSS_WARN:.0e} of their energy to truncation (worst: band {} with {:.2e})",
                lossy.len(),
                worst.q,
                worst.trunc_loss
            );
        }
        Ok(Self::from_parts(params, map, window, elements))
    }

    pub(crate) fn from_parts(params: FrameParams, map: WarpMap, window: PrototypeWindow, elements: Vec<FrameElement>) -> Self {
        let mut fs = Self { params, map, window, elements, hash: [0; 32] };
        fs.hash = Sha256::digest(crate::cache::encode(&fs)).into();
        fs
    }

    /// SHA-256 of the serialized cache image.
    pub fn hash(&self) -> &[u8; 32] {
        &self.hash
    }

    pub fn hash_hex(&self) -> String {
        self.hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sr(&self) -> f64 {
        self.params.sr
    }

    /// `Σ_q T_q` in seconds.
    pub fn sum_support(&self) -> f64 {
        self.elements.iter().map(|e| e.duration(self.params.sr)).sum()
    }

    /// Stored complex samples.
    pub fn stored_samples(&self) -> usize {
        self.elements.iter().map(|e| e.len()).sum()
    }

    /// Bytes held by the atom samples.
    pub fn total_memory(&self) -> usize {
        self.stored_samples() * std::mem::size_of::<Complex64>()
    }

    /// Synthesis weight: 1 for the real DC/Nyquist bands, 2 for bands standing in for a conjugate pair.
    pub fn weight(&self, q: usize) -> f64 {
        if self.params.is_self_conjugate(q) {
            1.0
        } else {
            2.0
        }
    }
}
