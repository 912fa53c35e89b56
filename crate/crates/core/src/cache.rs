//! Binary frame cache (`WGF1`), little endian throughout.
//!
//! ```text
//! magic "WGF1" | version u32
//! sr f64 | q_sup u32 | K R a b BW C_b C_d C_cut C_Tc T_c T_max θ'_inf (f64 ×12) | N_c u64 | uniform_hop u8
//! map:    tag u8 (0 exponential, 1 linear) | 4 × f64
//! window: kind u8 (0 raised cosine, 1 gaussian) | T R b h(0) C (f64 ×5)
//! per band: q u32 | n_q u64 | center_offset u64 | length u64 | f_q BW_q energy trunc_loss edge_ratio (f64 ×5)
//! per band: length × (re f64, im f64)
//! ```
//!
//! The frame-set hash is the SHA-256 of exactly these bytes.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::framegen::{FrameElement, FrameSet};
use crate::params::{BandParams, FrameParams};
use crate::warpmap::{MapDescriptor, WarpMap};
use crate::window::{PrototypeWindow, WindowKind};

pub const MAGIC: &[u8; 4] = b"WGF1";
const VERSION: u32 = 1;

/// Serializes a frame set. Writing into a `Vec` cannot fail.
pub fn encode(fs: &FrameSet) -> Vec<u8> {
    let mut w = Vec::with_capacity(256 + fs.params.q_sup * 80 + fs.stored_samples() * 16);
    w.extend_from_slice(MAGIC);
    w.write_u32::<LE>(VERSION).unwrap();
    let p = &fs.params;
    w.write_f64::<LE>(p.sr).unwrap();
    w.write_u32::<LE>(p.q_sup as u32).unwrap();
    for v in [p.bw_multiple, p.overlap, p.a, p.b, p.bw, p.c_b, p.c_d, p.c_cut, p.c_tc, p.t_c, p.t_max, p.theta_inf] {
        w.write_f64::<LE>(v).unwrap();
    }
    w.write_u64::<LE>(p.n_c as u64).unwrap();
    w.write_u8(p.uniform_hop as u8).unwrap();

    let (tag, vals) = match fs.map.descriptor() {
        MapDescriptor::Exponential { f0, k, sr, b } => (0u8, [f0, k, sr, b]),
        MapDescriptor::Linear { slope, sr } => (1u8, [slope, sr, 0.0, 0.0]),
    };
    w.write_u8(tag).unwrap();
    for v in vals {
        w.write_f64::<LE>(v).unwrap();
    }

    let win = &fs.window;
    w.write_u8(match win.kind {
        WindowKind::RaisedCosine => 0,
        WindowKind::Gaussian => 1,
    })
    .unwrap();
    for v in [win.duration, win.overlap, win.shift, win.amp, win.c_gauss] {
        w.write_f64::<LE>(v).unwrap();
    }

    for (e, bp) in fs.elements.iter().zip(&p.bands) {
        w.write_u32::<LE>(e.q as u32).unwrap();
        w.write_u64::<LE>(e.hop as u64).unwrap();
        w.write_u64::<LE>(e.center_offset as u64).unwrap();
        w.write_u64::<LE>(e.len() as u64).unwrap();
        for v in [bp.center, bp.bandwidth, e.energy, e.trunc_loss, e.edge_ratio] {
            w.write_f64::<LE>(v).unwrap();
        }
    }
    for e in &fs.elements {
        for s in &e.samples {
            w.write_f64::<LE>(s.re).unwrap();
            w.write_f64::<LE>(s.im).unwrap();
        }
    }
    w
}

fn fmt_err(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("truncated frame cache".into())
    } else {
        Error::Io(e)
    }
}

/// Parses a cache image. The resulting frame set re-encodes to the same bytes.
pub fn decode(bytes: &[u8]) -> Result<FrameSet> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(fmt_err)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected WGF1")));
    }
    let version = r.read_u32::<LE>().map_err(fmt_err)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported cache version {version}")));
    }
    let f = |r: &mut Cursor<&[u8]>| r.read_f64::<LE>().map_err(fmt_err);
    let sr = f(&mut r)?;
    let q_sup = r.read_u32::<LE>().map_err(fmt_err)? as usize;
    let mut s = [0.0; 12];
    for v in s.iter_mut() {
        *v = f(&mut r)?;
    }
    let [bw_multiple, overlap, a, b, bw, c_b, c_d, c_cut, c_tc, t_c, t_max, theta_inf] = s;
    let n_c = r.read_u64::<LE>().map_err(fmt_err)? as usize;
    let uniform_hop = r.read_u8().map_err(fmt_err)? != 0;

    let tag = r.read_u8().map_err(fmt_err)?;
    let mut mv = [0.0; 4];
    for v in mv.iter_mut() {
        *v = f(&mut r)?;
    }
    let descriptor = match tag {
        0 => MapDescriptor::Exponential { f0: mv[0], k: mv[1], sr: mv[2], b: mv[3] },
        1 => MapDescriptor::Linear { slope: mv[0], sr: mv[1] },
        t => return Err(Error::Format(format!("unknown map tag {t}"))),
    };
    let map = WarpMap::from_descriptor(descriptor)?;

    let kind = match r.read_u8().map_err(fmt_err)? {
        0 => WindowKind::RaisedCosine,
        1 => WindowKind::Gaussian,
        k => return Err(Error::Format(format!("unknown window kind {k}"))),
    };
    let mut wv = [0.0; 5];
    for v in wv.iter_mut() {
        *v = f(&mut r)?;
    }
    let window = PrototypeWindow { kind, duration: wv[0], overlap: wv[1], shift: wv[2], amp: wv[3], c_gauss: wv[4] };

    let remaining = bytes.len() as u64 - r.position();
    if (q_sup as u64).saturating_mul(68) > remaining {
        return Err(Error::Format(format!("band table for {q_sup} bands exceeds file size")));
    }
    let mut bands = Vec::with_capacity(q_sup);
    let mut elements = Vec::with_capacity(q_sup);
    let mut lengths = Vec::with_capacity(q_sup);
    let mut total = 0u64;
    for i in 0..q_sup {
        let q = r.read_u32::<LE>().map_err(fmt_err)? as usize;
        if q != i {
            return Err(Error::Format(format!("band table out of order at entry {i} (q = {q})")));
        }
        let hop = r.read_u64::<LE>().map_err(fmt_err)? as usize;
        let center_offset = r.read_u64::<LE>().map_err(fmt_err)? as usize;
        let length = r.read_u64::<LE>().map_err(fmt_err)?;
        if hop == 0 || length == 0 || center_offset as u64 >= length {
            return Err(Error::Format(format!("band {q}: inconsistent hop/offset/length")));
        }
        let mut bv = [0.0; 5];
        for v in bv.iter_mut() {
            *v = f(&mut r)?;
        }
        total = total.saturating_add(length);
        lengths.push(length as usize);
        bands.push(BandParams { q, center: bv[0], bandwidth: bv[1], hop });
        elements.push(FrameElement {
            q,
            samples: Vec::new(),
            center_offset,
            hop,
            energy: bv[2],
            trunc_loss: bv[3],
            edge_ratio: bv[4],
        });
    }
    let remaining = bytes.len() as u64 - r.position();
    if total.saturating_mul(16) != remaining {
        return Err(Error::Format(format!(
            "sample block holds {remaining} bytes, band table needs {}",
            total.saturating_mul(16)
        )));
    }
    for (e, len) in elements.iter_mut().zip(lengths) {
        e.samples.reserve_exact(len);
        for _ in 0..len {
            let re = f(&mut r)?;
            let im = f(&mut r)?;
            e.samples.push(Complex64::new(re, im));
        }
    }
    let params = FrameParams {
        sr,
        bw_multiple,
        overlap,
        a,
        b,
        bw,
        q_sup,
        c_b,
        c_d,
        c_cut,
        c_tc,
        t_c,
        t_max,
        theta_inf,
        n_c,
        uniform_hop,
        bands,
    };
    Ok(FrameSet::from_parts(params, map, window, elements))
}

pub fn save(fs: &FrameSet, path: &Path) -> Result<()> {
    std::fs::write(path, encode(fs))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<FrameSet> {
    decode(&std::fs::read(path)?)
}

/// Builds the frame set for `cfg`, reusing `path` when it holds a cache for
/// the same parameters. A stale or unreadable cache is rebuilt and overwritten.
pub fn load_or_build(cfg: &Config, path: Option<&Path>) -> Result<FrameSet> {
    let (map, window, params) = cfg.build_parts()?;
    if let Some(path) = path {
        if path.exists() {
            match load(path) {
                Ok(fs) if fs.params == params && fs.map == map && fs.window == window => return Ok(fs),
                Ok(_) => log::warn!("cache {} was built for other parameters; rebuilding", path.display()),
                Err(e) => log::warn!("cache {} unreadable ({e}); rebuilding", path.display()),
            }
        }
    }
    let fs = FrameSet::build(params, map, window)?;
    if let Some(path) = path {
        save(&fs, path)?;
    }
    Ok(fs)
}
