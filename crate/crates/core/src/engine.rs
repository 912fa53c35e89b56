//! Direct-loop analysis and synthesis with per-band hops.
//!
//! All bands place frame `n = 0` at sample 0: frame `(n, q)` covers samples
//! `n·n_q - left_q ..= n·n_q + right_q`. A frame becomes computable once its
//! last sample has arrived, at `ready = n·n_q + right_q`; frames are always
//! produced and consumed in `(ready, q)` order. That order fixes every
//! floating-point summation, which is what makes block-wise processing
//! bit-identical to whole-signal processing.
//!
//! Only bands `q >= 0` are materialized; for real input the negative bands
//! are conjugates and enter synthesis through a weight of 2 on the real part.
//! With `D = max_q (left_q + right_q)` the reconstruction is the input
//! delayed by `D` samples.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::framegen::FrameSet;

/// Flops charged per atom sample and frame: one complex-by-real multiply-add.
pub const FLOPS_PER_TAP: u64 = 4;

/// An atom in split real/imaginary form with its placement.
#[derive(Clone, Debug)]
struct Kernel {
    re: Vec<f64>,
    im: Vec<f64>,
    left: i64,
    right: i64,
    hop: i64,
    weight: f64,
}

impl Kernel {
    fn span(&self) -> i64 {
        self.left + self.right
    }

    fn start(&self, n: i64) -> i64 {
        n * self.hop - self.left
    }

    fn ready(&self, n: i64) -> i64 {
        n * self.hop + self.right
    }

    /// First frame whose support reaches sample 0.
    fn first_frame(&self) -> i64 {
        -(self.right / self.hop)
    }

    /// Last frame whose support starts before sample `len`.
    fn last_frame(&self, len: i64) -> i64 {
        (len - 1 + self.left).div_euclid(self.hop)
    }
}

/// Kernels shared by the analyzer and synthesizer.
#[derive(Clone, Debug)]
pub struct Engine {
    kernels: Vec<Kernel>,
    delay: i64,
    sr: f64,
    hash: [u8; 32],
}

/// `Σ x·re`, `Σ x·im` with four fixed partial sums.
#[inline]
fn dot2(x: &[f64], re: &[f64], im: &[f64]) -> (f64, f64) {
    let n = x.len();
    debug_assert!(re.len() == n && im.len() == n);
    let mut ar = [0.0f64; 4];
    let mut ai = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let rc = re.chunks_exact(4);
    let ic = im.chunks_exact(4);
    let (xt, rt, it) = (xc.remainder(), rc.remainder(), ic.remainder());
    for ((xs, rs), is) in xc.zip(rc).zip(ic) {
        for l in 0..4 {
            ar[l] += xs[l] * rs[l];
            ai[l] += xs[l] * is[l];
        }
    }
    let mut sr = (ar[0] + ar[1]) + (ar[2] + ar[3]);
    let mut si = (ai[0] + ai[1]) + (ai[2] + ai[3]);
    for ((x, r), i) in xt.iter().zip(rt).zip(it) {
        sr += x * r;
        si += x * i;
    }
    (sr, si)
}

/// `out += w·Re(c·atom)`.
#[inline]
fn accumulate(out: &mut [f64], c: Complex64, weight: f64, re: &[f64], im: &[f64]) {
    let (wr, wi) = (weight * c.re, weight * c.im);
    for ((o, r), i) in out.iter_mut().zip(re).zip(im) {
        *o += wr * r - wi * i;
    }
}

impl Engine {
    pub fn new(fs: &FrameSet) -> Self {
        let kernels: Vec<Kernel> = fs
            .elements
            .iter()
            .map(|e| Kernel {
                re: e.samples.iter().map(|s| s.re).collect(),
                im: e.samples.iter().map(|s| s.im).collect(),
                left: e.left() as i64,
                right: e.right() as i64,
                hop: e.hop as i64,
                weight: fs.weight(e.q),
            })
            .collect();
        let delay = kernels.iter().map(Kernel::span).max().unwrap_or(0);
        Self { kernels, delay, sr: fs.sr(), hash: *fs.hash() }
    }

    pub fn bands(&self) -> usize {
        self.kernels.len()
    }

    pub fn delay(&self) -> usize {
        self.delay as usize
    }

    pub fn sr(&self) -> f64 {
        self.sr
    }

    pub fn hash(&self) -> &[u8; 32] {
        &self.hash
    }

    pub fn latency(&self) -> LatencyReport {
        LatencyReport {
            delay_samples: self.delay(),
            band_lookahead: self.kernels.iter().map(|k| k.right as usize).collect(),
            band_span: self.kernels.iter().map(|k| k.span() as usize).collect(),
        }
    }

    /// Coefficient of frame `(n, q)` from the samples it covers.
    fn coefficient(&self, q: usize, window: &[f64]) -> Complex64 {
        let k = &self.kernels[q];
        let (re, im) = dot2(window, &k.re, &k.im);
        Complex64::new(re, -im)
    }

    /// Frames of an `len`-sample signal in processing order.
    fn schedule(&self, len: i64) -> Schedule {
        Schedule::new(&self.kernels, Some(len))
    }
}

/// Emits `(q, n)` in `(ready, q)` order.
struct Schedule {
    heap: BinaryHeap<Reverse<(i64, usize, i64)>>,
    last: Vec<Option<i64>>,
}

impl Schedule {
    fn new(kernels: &[Kernel], len: Option<i64>) -> Self {
        let mut heap = BinaryHeap::with_capacity(kernels.len());
        let mut last = Vec::with_capacity(kernels.len());
        for (q, k) in kernels.iter().enumerate() {
            let n = k.first_frame();
            let l = len.map(|len| k.last_frame(len));
            if l.is_none_or(|l| n <= l) {
                heap.push(Reverse((k.ready(n), q, n)));
            }
            last.push(l);
        }
        Self { heap, last }
    }

    fn set_length(&mut self, kernels: &[Kernel], len: i64) {
        for (q, k) in kernels.iter().enumerate() {
            self.last[q] = Some(k.last_frame(len));
        }
        let last = &self.last;
        self.heap.retain(|Reverse((_, q, n))| *n <= last[*q].unwrap());
    }

    /// Next frame with `ready < limit`.
    fn pop_before(&mut self, kernels: &[Kernel], limit: i64) -> Option<(usize, i64)> {
        let &Reverse((ready, q, n)) = self.heap.peek()?;
        if ready >= limit {
            return None;
        }
        self.heap.pop();
        let next = n + 1;
        if self.last[q].is_none_or(|l| next <= l) {
            self.heap.push(Reverse((kernels[q].ready(next), q, next)));
        }
        Some((q, n))
    }
}

/// Per-band coefficients `c_{n,q}` for `n = first..first + len`.
#[derive(Clone, Debug, PartialEq)]
pub struct BandCoefficients {
    pub hop: usize,
    /// Index of the first frame; its origin is at sample `first·hop`.
    pub first: i64,
    pub coeffs: Vec<Complex64>,
}

impl BandCoefficients {
    /// Sample position of the first frame's origin.
    pub fn offset(&self) -> i64 {
        self.first * self.hop as i64
    }

    pub fn get(&self, n: i64) -> Option<Complex64> {
        let i = n - self.first;
        if i < 0 {
            None
        } else {
            self.coeffs.get(i as usize).copied()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientStream {
    pub sr: f64,
    pub input_length: usize,
    pub cache_hash: [u8; 32],
    pub bands: Vec<BandCoefficients>,
}

impl CoefficientStream {
    pub fn total(&self) -> usize {
        self.bands.iter().map(|b| b.coeffs.len()).sum()
    }

    /// `Σ |c|²` counting each materialized band with its synthesis weight.
    pub fn energy(&self, fs: &FrameSet) -> f64 {
        self.bands
            .iter()
            .enumerate()
            .map(|(q, b)| fs.weight(q) * b.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }
}

/// Total analysis-synthesis delay and where it comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatencyReport {
    pub delay_samples: usize,
    /// `right_q`: how far each band looks ahead of a frame origin.
    pub band_lookahead: Vec<usize>,
    /// `left_q + right_q`; the delay is the largest of these.
    pub band_span: Vec<usize>,
}

/// One computed coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub q: usize,
    pub n: i64,
    pub c: Complex64,
}

fn check_sr(engine: &Engine, sr: f64) -> Result<()> {
    if (sr - engine.sr).abs() > 1e-9 * engine.sr {
        return Err(Error::Mismatch(format!("signal at {sr} Hz, frame set at {} Hz", engine.sr)));
    }
    Ok(())
}

/// Analysis statistics from an instrumented run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AnalysisStats {
    pub frames: u64,
    pub flops: u64,
}

/// Whole-signal analysis.
pub fn analyze(signal: &[f64], sr: f64, fs: &FrameSet) -> Result<CoefficientStream> {
    analyze_with_stats(&Engine::new(fs), signal, sr).map(|(c, _)| c)
}

pub fn analyze_with_stats(engine: &Engine, signal: &[f64], sr: f64) -> Result<(CoefficientStream, AnalysisStats)> {
    if signal.is_empty() {
        return Err(Error::Signal("empty signal".into()));
    }
    check_sr(engine, sr)?;
    let d = engine.delay;
    let len = signal.len() as i64;
    // signal with D zeros on both sides, so every frame reads a full window
    let mut padded = vec![0.0; signal.len() + 2 * d as usize];
    padded[d as usize..d as usize + signal.len()].copy_from_slice(signal);

    let band = |q: usize| -> (BandCoefficients, AnalysisStats) {
        let k = &engine.kernels[q];
        let first = k.first_frame();
        let last = k.last_frame(len);
        let l = k.re.len();
        let mut coeffs = Vec::with_capacity((last - first + 1).max(0) as usize);
        let mut stats = AnalysisStats::default();
        for n in first..=last {
            let s = (k.start(n) + d) as usize;
            coeffs.push(engine.coefficient(q, &padded[s..s + l]));
            stats.frames += 1;
            stats.flops += FLOPS_PER_TAP * l as u64;
        }
        (BandCoefficients { hop: k.hop as usize, first, coeffs }, stats)
    };

    #[cfg(feature = "parallel")]
    let per_band: Vec<(BandCoefficients, AnalysisStats)> = {
        use rayon::prelude::*;
        (0..engine.bands()).into_par_iter().map(band).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_band: Vec<(BandCoefficients, AnalysisStats)> = (0..engine.bands()).map(band).collect();

    let mut stats = AnalysisStats::default();
    let mut bands = Vec::with_capacity(per_band.len());
    for (b, s) in per_band {
        stats.frames += s.frames;
        stats.flops += s.flops;
        bands.push(b);
    }
    Ok((CoefficientStream { sr, input_length: signal.len(), cache_hash: engine.hash, bands }, stats))
}

/// Whole-stream synthesis; returns `input_length + D` samples, the input
/// estimate delayed by `D`.
pub fn synthesize(coeffs: &CoefficientStream, fs: &FrameSet) -> Result<Vec<f64>> {
    synthesize_with(&Engine::new(fs), coeffs)
}

pub fn synthesize_with(engine: &Engine, coeffs: &CoefficientStream) -> Result<Vec<f64>> {
    if coeffs.cache_hash != engine.hash {
        return Err(Error::Mismatch("coefficients were computed against a different frame set".into()));
    }
    check_sr(engine, coeffs.sr)?;
    if coeffs.bands.len() != engine.bands() {
        return Err(Error::Mismatch(format!("{} coefficient bands for {} atoms", coeffs.bands.len(), engine.bands())));
    }
    let len = coeffs.input_length as i64;
    for (q, (b, k)) in coeffs.bands.iter().zip(&engine.kernels).enumerate() {
        let expect = (k.last_frame(len) - k.first_frame() + 1).max(0) as usize;
        if b.hop as i64 != k.hop || b.first != k.first_frame() || b.coeffs.len() != expect {
            return Err(Error::Mismatch(format!("band {q}: coefficient layout does not match the frame set")));
        }
    }
    let d = engine.delay;
    // output index i holds x̂(i - D); frames reach at most D past the last input sample
    let mut out = vec![0.0; (len + 2 * d) as usize];
    let mut sched = engine.schedule(len);
    while let Some((q, n)) = sched.pop_before(&engine.kernels, i64::MAX) {
        let k = &engine.kernels[q];
        let c = coeffs.bands[q].coeffs[(n - k.first_frame()) as usize];
        let s = (k.start(n) + d) as usize;
        accumulate(&mut out[s..s + k.re.len()], c, k.weight, &k.re, &k.im);
    }
    out.truncate((len + d) as usize);
    Ok(out)
}

/// Analysis followed by synthesis.
pub fn roundtrip(signal: &[f64], sr: f64, fs: &FrameSet) -> Result<(Vec<f64>, LatencyReport)> {
    let engine = Engine::new(fs);
    let coeffs = analyze_with_stats(&engine, signal, sr)?.0;
    Ok((synthesize_with(&engine, &coeffs)?, engine.latency()))
}

/// Block-wise analysis. Emits each frame as soon as its last sample arrives.
pub struct StreamAnalyzer<'e> {
    engine: &'e Engine,
    sched: Schedule,
    /// Input history; `hist[0]` is sample `hist_start`. Samples before 0 are zeros.
    hist: Vec<f64>,
    hist_start: i64,
    received: i64,
    finished: bool,
}

impl<'e> StreamAnalyzer<'e> {
    pub fn new(engine: &'e Engine) -> Self {
        Self {
            engine,
            sched: Schedule::new(&engine.kernels, None),
            hist: vec![0.0; engine.delay as usize],
            hist_start: -engine.delay,
            received: 0,
            finished: false,
        }
    }

    pub fn received(&self) -> usize {
        self.received as usize
    }

    fn emit(&mut self, limit: i64, out: &mut Vec<Frame>) {
        while let Some((q, n)) = self.sched.pop_before(&self.engine.kernels, limit) {
            let k = &self.engine.kernels[q];
            let s = (k.start(n) - self.hist_start) as usize;
            let c = self.engine.coefficient(q, &self.hist[s..s + k.re.len()]);
            out.push(Frame { q, n, c });
        }
    }

    /// Appends samples and returns the frames completed by them.
    pub fn push(&mut self, block: &[f64]) -> Vec<Frame> {
        assert!(!self.finished, "push after finish");
        self.hist.extend_from_slice(block);
        self.received += block.len() as i64;
        let mut frames = Vec::new();
        self.emit(self.received, &mut frames);
        // pending frames start at or after received - D
        let keep_from = self.received - self.engine.delay;
        let drop = (keep_from - self.hist_start).max(0) as usize;
        if drop > self.hist.len() / 2 && drop > 4096 {
            self.hist.drain(..drop);
            self.hist_start += drop as i64;
        }
        frames
    }

    /// Zero-pads past the end and returns all remaining frames.
    pub fn finish(&mut self) -> Result<Vec<Frame>> {
        if self.received == 0 {
            return Err(Error::Signal("empty signal".into()));
        }
        self.finished = true;
        self.sched.set_length(&self.engine.kernels, self.received);
        self.hist.resize(self.hist.len() + self.engine.delay as usize, 0.0);
        let mut frames = Vec::new();
        self.emit(i64::MAX, &mut frames);
        Ok(frames)
    }
}

/// Block-wise synthesis. Output sample `i` is `x̂(i - D)`.
pub struct StreamSynthesizer<'e> {
    engine: &'e Engine,
    /// Pending sums; `acc[0]` is `x̂(acc_start)`.
    acc: Vec<f64>,
    acc_start: i64,
}

impl<'e> StreamSynthesizer<'e> {
    pub fn new(engine: &'e Engine) -> Self {
        Self { engine, acc: Vec::new(), acc_start: -engine.delay }
    }

    /// Adds one frame. Frames must arrive in analyzer order.
    pub fn add(&mut self, f: &Frame) {
        let k = &self.engine.kernels[f.q];
        let start = k.start(f.n);
        debug_assert!(start >= self.acc_start, "frame arrived after its samples were released");
        let s = (start - self.acc_start) as usize;
        let end = s + k.re.len();
        if self.acc.len() < end {
            self.acc.resize(end, 0.0);
        }
        accumulate(&mut self.acc[s..end], f.c, k.weight, &k.re, &k.im);
    }

    /// Releases `x̂(t)` for all `t < until`.
    pub fn release(&mut self, until: i64) -> Vec<f64> {
        let n = (until - self.acc_start).max(0) as usize;
        if self.acc.len() < n {
            self.acc.resize(n, 0.0);
        }
        self.acc_start += n as i64;
        self.acc.drain(..n).collect()
    }
}

/// Analysis and synthesis in one block-wise pipeline: every `process` call
/// returns as many samples as it was given.
pub struct StreamProcessor<'e> {
    analyzer: StreamAnalyzer<'e>,
    synthesizer: StreamSynthesizer<'e>,
}

impl<'e> StreamProcessor<'e> {
    pub fn new(engine: &'e Engine) -> Self {
        Self { analyzer: StreamAnalyzer::new(engine), synthesizer: StreamSynthesizer::new(engine) }
    }

    pub fn delay(&self) -> usize {
        self.analyzer.engine.delay()
    }

    pub fn process(&mut self, block: &[f64]) -> Vec<f64> {
        for f in self.analyzer.push(block) {
            self.synthesizer.add(&f);
        }
        let d = self.analyzer.engine.delay;
        self.synthesizer.release(self.analyzer.received - d)
    }

    /// Flushes the last `D` output samples.
    pub fn finish(mut self) -> Result<Vec<f64>> {
        for f in self.analyzer.finish()? {
            self.synthesizer.add(&f);
        }
        Ok(self.synthesizer.release(self.analyzer.received))
    }
}

/// Operation counts and memory bounds of a frame set.
#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    /// `Σ_q 4·L_q/n_q` flops per input sample, for analysis (synthesis costs the same).
    pub n_avg: f64,
    /// `Σ_q 4·L_q`: flops when every band emits a frame at once.
    pub worst_frame: f64,
    /// Stored atom samples `Σ_q L_q`.
    pub stored: usize,
    /// `Σ_q T_q·SR`, the minimal storage for the truncated atoms.
    pub minimal: f64,
    /// Storage if every band kept the longest support, `q_sup·max_q L_q`.
    pub uniform: usize,
    /// Storage for an untruncated set, `q_sup·N_c`.
    pub untruncated: usize,
    /// History samples the streaming pipeline holds (`D` in and `D` out).
    pub buffer: usize,
    pub delay: usize,
}

pub fn estimate_cost(fs: &FrameSet) -> CostReport {
    let p = &fs.params;
    let n_avg = fs.elements.iter().map(|e| 4.0 * e.len() as f64 / e.hop as f64).sum();
    let worst_frame = fs.elements.iter().map(|e| 4.0 * e.len() as f64).sum();
    let stored = fs.stored_samples();
    let max_len = fs.elements.iter().map(|e| e.len()).max().unwrap_or(0);
    let delay = fs.elements.iter().map(|e| e.left() + e.right()).max().unwrap_or(0);
    CostReport {
        n_avg,
        worst_frame,
        stored,
        minimal: fs.sum_support() * p.sr,
        uniform: p.q_sup * max_len,
        untruncated: p.q_sup * p.n_c,
        buffer: 2 * delay,
        delay,
    }
}

/// Flatness of the frame operator's diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    /// Frequencies (Hz) of the grid on `[0, SR/2]`.
    pub freqs: Vec<f64>,
    pub response: Vec<f64>,
    pub max_deviation: f64,
    pub min: f64,
    pub max: f64,
    /// `max D / min D`, an estimate of the frame-bound ratio.
    pub bound_ratio: f64,
}

/// `D(f) = (1/a) Σ_q ĥ(θ⁻¹(f) - qb)²` over all bands of the circle, on
/// `points` frequencies in `[0, SR/2]`.
pub fn pr_diagnostic(fs: &FrameSet, points: usize) -> FlatnessReport {
    let p = &fs.params;
    let points = points.max(2);
    let period = p.warped_period();
    let h = |x: f64| {
        let w = x - period * (x / period).round();
        fs.window.freq_eval(w - period) + fs.window.freq_eval(w) + fs.window.freq_eval(w + period)
    };
    let freqs: Vec<f64> = (0..points).map(|i| 0.5 * p.sr * i as f64 / (points - 1) as f64).collect();
    let response: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let pos = fs.map.eval_inverse(f);
            let neg = -pos;
            let mut s = 0.0;
            for q in 0..p.q_sup {
                let c = q as f64 * p.b;
                let v = h(pos - c);
                if p.is_self_conjugate(q) {
                    s += v * v;
                } else {
                    let m = h(neg - c);
                    s += v * v + m * m;
                }
            }
            s / p.a
        })
        .collect();
    let min = response.iter().copied().fold(f64::INFINITY, f64::min);
    let max = response.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_deviation = response.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max);
    FlatnessReport { freqs, response, max_deviation, min, max, bound_ratio: max / min }
}

pub const COEFF_MAGIC: &[u8; 4] = b"WGC1";

/// Coefficient file (`WGC1`):
/// magic | cache hash (32 bytes) | sr f64 | q_sup u32 | input_length u64 |
/// per band {n_q u64, offset i64, count u64} | coefficients as (re, im) f64 pairs.
pub fn encode_coefficients(c: &CoefficientStream) -> Vec<u8> {
    let mut w = Vec::with_capacity(64 + c.bands.len() * 24 + c.total() * 16);
    w.extend_from_slice(COEFF_MAGIC);
    w.extend_from_slice(&c.cache_hash);
    w.write_f64::<LE>(c.sr).unwrap();
    w.write_u32::<LE>(c.bands.len() as u32).unwrap();
    w.write_u64::<LE>(c.input_length as u64).unwrap();
    for b in &c.bands {
        w.write_u64::<LE>(b.hop as u64).unwrap();
        w.write_i64::<LE>(b.offset()).unwrap();
        w.write_u64::<LE>(b.coeffs.len() as u64).unwrap();
    }
    for b in &c.bands {
        for v in &b.coeffs {
            w.write_f64::<LE>(v.re).unwrap();
            w.write_f64::<LE>(v.im).unwrap();
        }
    }
    w
}

pub fn decode_coefficients(bytes: &[u8]) -> Result<CoefficientStream> {
    let eof = |e: std::io::Error| -> Error {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format("truncated coefficient file".into())
        } else {
            Error::Io(e)
        }
    };
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if &magic != COEFF_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected WGC1")));
    }
    let mut cache_hash = [0u8; 32];
    r.read_exact(&mut cache_hash).map_err(eof)?;
    let sr = r.read_f64::<LE>().map_err(eof)?;
    let q_sup = r.read_u32::<LE>().map_err(eof)? as usize;
    let input_length = r.read_u64::<LE>().map_err(eof)? as usize;
    if (q_sup as u64).saturating_mul(24) > bytes.len() as u64 {
        return Err(Error::Format(format!("band table for {q_sup} bands exceeds file size")));
    }
    let mut layout = Vec::with_capacity(q_sup);
    let mut total = 0u64;
    for q in 0..q_sup {
        let hop = r.read_u64::<LE>().map_err(eof)?;
        let offset = r.read_i64::<LE>().map_err(eof)?;
        let count = r.read_u64::<LE>().map_err(eof)?;
        if hop == 0 || offset % hop as i64 != 0 {
            return Err(Error::Format(format!("band {q}: offset {offset} is not a multiple of hop {hop}")));
        }
        total = total.saturating_add(count);
        layout.push((hop as usize, offset / hop as i64, count as usize));
    }
    let remaining = bytes.len() as u64 - r.position();
    if total.saturating_mul(16) != remaining {
        return Err(Error::Format(format!(
            "coefficient block holds {remaining} bytes, band table needs {}",
            total.saturating_mul(16)
        )));
    }
    let mut bands = Vec::with_capacity(q_sup);
    for (hop, first, count) in layout {
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            let re = r.read_f64::<LE>().map_err(eof)?;
            let im = r.read_f64::<LE>().map_err(eof)?;
            coeffs.push(Complex64::new(re, im));
        }
        bands.push(BandCoefficients { hop, first, coeffs });
    }
    Ok(CoefficientStream { sr, input_length, cache_hash, bands })
}

pub fn save_coefficients(c: &CoefficientStream, path: &Path) -> Result<()> {
    std::fs::write(path, encode_coefficients(c))?;
    Ok(())
}

pub fn load_coefficients(path: &Path) -> Result<CoefficientStream> {
    decode_coefficients(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::signals::{gen_signal, SignalKind, TestSignal};
    use std::sync::OnceLock;

    /// Short atoms keep the direct loops cheap; exactness does not depend on length.
    fn small_set() -> &'static FrameSet {
        static FS: OnceLock<FrameSet> = OnceLock::new();
        FS.get_or_init(|| {
            let mut cfg = Config::gaussian_preset();
            cfg.c_cut = 100.0;
            cfg.t_max = 0.2;
            crate::cache::load_or_build(&cfg, None).unwrap()
        })
    }

    fn noise(seconds: f64, seed: u64) -> Vec<f64> {
        gen_signal(&TestSignal::new(SignalKind::White, seconds, 44100.0, seed), None).unwrap()
    }

    fn max_abs(c: &CoefficientStream) -> f64 {
        c.bands.iter().flat_map(|b| &b.coeffs).map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dot2_matches_naive_sum() {
        let x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let re: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let im: Vec<f64> = (0..37).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let (a, b) = dot2(&x, &re, &im);
        let na: f64 = x.iter().zip(&re).map(|(x, r)| x * r).sum();
        let nb: f64 = x.iter().zip(&im).map(|(x, i)| x * i).sum();
        assert!((a - na).abs() < 1e-13 && (b - nb).abs() < 1e-13);
    }

    #[test]
    fn analysis_is_linear() {
        let fs = small_set();
        let (x, y) = (noise(0.3, 3), noise(0.3, 4));
        let (al, be) = (0.7, -1.9);
        let z: Vec<f64> = x.iter().zip(&y).map(|(x, y)| al * x + be * y).collect();
        let (cx, cy, cz) = (analyze(&x, 44100.0, fs).unwrap(), analyze(&y, 44100.0, fs).unwrap(), analyze(&z, 44100.0, fs).unwrap());
        let scale = max_abs(&cz);
        let mut worst = 0.0f64;
        for ((bx, by), bz) in cx.bands.iter().zip(&cy.bands).zip(&cz.bands) {
            for ((a, b), c) in bx.coeffs.iter().zip(&by.coeffs).zip(&bz.coeffs) {
                worst = worst.max((al * a + be * b - c).norm());
            }
        }
        assert!(worst <= 1e-12 * scale, "{worst:e} vs {scale:e}");
    }

    #[test]
    fn zero_in_zero_out() {
        let fs = small_set();
        let x = vec![0.0; 5000];
        let c = analyze(&x, 44100.0, fs).unwrap();
        assert!(c.bands.iter().flat_map(|b| &b.coeffs).all(|z| *z == Complex64::new(0.0, 0.0)));
        assert!(synthesize(&c, fs).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn click_comes_back_exactly_delay_samples_late() {
        let fs = small_set();
        let mut x = vec![0.0; 20000];
        let t0 = 7321;
        x[t0] = 1.0;
        let (y, lat) = roundtrip(&x, 44100.0, fs).unwrap();
        assert_eq!(y.len(), x.len() + lat.delay_samples);
        let peak = y.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        assert_eq!(peak, t0 + lat.delay_samples);
        assert!((y[peak] - 1.0).abs() < 0.05, "{}", y[peak]);
    }

    #[test]
    fn single_coefficient_synthesizes_its_atom() {
        let fs = small_set();
        let engine = Engine::new(fs);
        let len = 30000;
        let mut c = analyze(&vec![0.0; len], 44100.0, fs).unwrap();
        let q = 40;
        let n = 3;
        let v = Complex64::new(0.3, -0.8);
        let first = c.bands[q].first;
        c.bands[q].coeffs[(n - first) as usize] = v;
        let y = synthesize_with(&engine, &c).unwrap();
        let e = &fs.elements[q];
        let d = engine.delay() as i64;
        for (i, &out) in y.iter().enumerate() {
            let t = i as i64 - d - n * e.hop as i64;
            let expect = 2.0 * (v * e.at(t)).re;
            assert!((out - expect).abs() < 1e-15, "i={i}");
        }
    }

    #[test]
    fn real_input_gives_conjugate_free_dc_band() {
        // q = 0 atoms are real, so their coefficients are real as well
        let fs = small_set();
        let c = analyze(&noise(0.2, 9), 44100.0, fs).unwrap();
        assert!(c.bands[0].coeffs.iter().all(|z| z.im.abs() <= 1e-12 * z.re.abs().max(1e-9)));
    }

    #[test]
    fn coefficient_energy_tracks_signal_energy() {
        // nearly tight frame with bound 1
        let fs = small_set();
        let x = noise(1.0, 5);
        let c = analyze(&x, 44100.0, fs).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ratio = c.energy(fs) / ex;
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn stream_is_bit_identical_for_any_block_size() {
        let fs = small_set();
        let engine = Engine::new(fs);
        let x = noise(0.4, 11);
        let (offline, _) = roundtrip(&x, 44100.0, fs).unwrap();
        for block in [1usize, 97, 1024, 4096, 50000] {
            let mut p = StreamProcessor::new(&engine);
            let mut y = Vec::new();
            for chunk in x.chunks(block) {
                let out = p.process(chunk);
                assert_eq!(out.len(), chunk.len());
                y.extend(out);
            }
            y.extend(p.finish().unwrap());
            assert_eq!(y.len(), offline.len());
            assert!(y.iter().zip(&offline).all(|(a, b)| a.to_bits() == b.to_bits()), "block {block}");
        }
    }

    #[test]
    fn stream_frames_equal_offline_coefficients() {
        let fs = small_set();
        let engine = Engine::new(fs);
        let x = noise(0.25, 2);
        let offline = analyze(&x, 44100.0, fs).unwrap();
        let mut a = StreamAnalyzer::new(&engine);
        let mut frames = Vec::new();
        for chunk in x.chunks(333) {
            frames.extend(a.push(chunk));
        }
        frames.extend(a.finish().unwrap());
        assert_eq!(frames.len(), offline.total());
        for f in frames {
            assert_eq!(offline.bands[f.q].get(f.n).unwrap(), f.c);
        }
    }

    #[test]
    fn flops_counter_matches_cost_model() {
        let fs = small_set();
        let x = noise(2.0, 1);
        let (_, stats) = analyze_with_stats(&Engine::new(fs), &x, 44100.0).unwrap();
        let per_sample = stats.flops as f64 / x.len() as f64;
        let n_avg = estimate_cost(fs).n_avg;
        assert!((per_sample / n_avg - 1.0).abs() < 0.15, "{per_sample} vs {n_avg}");
    }

    #[test]
    fn flatness_ignores_the_hop() {
        let mut cfg = Config::gaussian_preset();
        cfg.c_cut = 20.0;
        cfg.t_max = 0.1;
        let a = crate::cache::load_or_build(&cfg, None).unwrap();
        cfg.c_d *= 2.0;
        let b = crate::cache::load_or_build(&cfg, None).unwrap();
        assert_ne!(a.hash(), b.hash());
        assert_eq!(pr_diagnostic(&a, 500).response, pr_diagnostic(&b, 500).response);
    }

    #[test]
    fn gaussian_flatness_sets_the_floor() {
        let r = pr_diagnostic(small_set(), 4000);
        assert!(r.max_deviation < 2e-5, "{}", r.max_deviation);
        assert!(r.bound_ratio < 1.0 + 4e-5);
    }

    #[test]
    fn coefficient_file_round_trip() {
        let fs = small_set();
        let c = analyze(&noise(0.1, 8), 44100.0, fs).unwrap();
        let bytes = encode_coefficients(&c);
        let d = decode_coefficients(&bytes).unwrap();
        assert_eq!(c, d);
        assert_eq!(bytes, encode_coefficients(&d));
        assert!(matches!(decode_coefficients(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_coefficients(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn synthesis_rejects_foreign_coefficients() {
        let fs = small_set();
        let mut c = analyze(&noise(0.1, 8), 44100.0, fs).unwrap();
        c.sr = 48000.0;
        assert!(matches!(synthesize(&c, fs), Err(Error::Mismatch(_))));
        c.sr = 44100.0;
        c.cache_hash[5] ^= 1;
        assert!(matches!(synthesize(&c, fs), Err(Error::Mismatch(_))));
        assert!(matches!(analyze(&[1.0; 10], 48000.0, fs), Err(Error::Mismatch(_))));
        assert!(matches!(analyze(&[], 44100.0, fs), Err(Error::Signal(_))));
    }
}
