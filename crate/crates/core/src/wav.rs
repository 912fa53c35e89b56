//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads PCM 8/16/24/32-bit and IEEE float 32/64-bit, plain or
//! `WAVE_FORMAT_EXTENSIBLE`. Multichannel input is averaged to mono.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Pcm24,
    Float32,
    Float64,
}

impl SampleFormat {
    fn bits(self) -> u16 {
        match self {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Pcm24 => 24,
            SampleFormat::Float32 => 32,
            SampleFormat::Float64 => 64,
        }
    }

    fn tag(self) -> u16 {
        match self {
            SampleFormat::Pcm16 | SampleFormat::Pcm24 => FORMAT_PCM,
            SampleFormat::Float32 | SampleFormat::Float64 => FORMAT_FLOAT,
        }
    }
}

/// Decoded audio: interleaved frames split per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Audio {
    pub sr: f64,
    pub channels: Vec<Vec<f64>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        bad("truncated WAV file")
    } else {
        Error::Io(e)
    }
}

pub fn decode(bytes: &[u8]) -> Result<Audio> {
    let mut r = Cursor::new(bytes);
    let mut id = [0u8; 4];
    r.read_exact(&mut id).map_err(eof)?;
    if &id != b"RIFF" {
        return Err(bad("not a RIFF file"));
    }
    let _riff_len = r.read_u32::<LE>().map_err(eof)?;
    r.read_exact(&mut id).map_err(eof)?;
    if &id != b"WAVE" {
        return Err(bad("RIFF file is not WAVE"));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    loop {
        if r.read_exact(&mut id).is_err() {
            return Err(bad("no data chunk"));
        }
        let len = r.read_u32::<LE>().map_err(eof)? as usize;
        let start = r.position() as usize;
        // tolerate a data chunk whose declared length overruns the file
        let end = (start + len).min(bytes.len());
        let body = &bytes[start..end];
        match &id {
            b"fmt " => {
                let mut c = Cursor::new(body);
                let mut tag = c.read_u16::<LE>().map_err(eof)?;
                let channels = c.read_u16::<LE>().map_err(eof)?;
                let sr = c.read_u32::<LE>().map_err(eof)?;
                let _byte_rate = c.read_u32::<LE>().map_err(eof)?;
                let _align = c.read_u16::<LE>().map_err(eof)?;
                let bits = c.read_u16::<LE>().map_err(eof)?;
                if tag == FORMAT_EXTENSIBLE {
                    let _cb = c.read_u16::<LE>().map_err(eof)?;
                    let _valid = c.read_u16::<LE>().map_err(eof)?;
                    let _mask = c.read_u32::<LE>().map_err(eof)?;
                    tag = c.read_u16::<LE>().map_err(eof)?;
                }
                fmt = Some((tag, channels, sr, bits));
            }
            b"data" => {
                let (tag, channels, sr, bits) = fmt.ok_or_else(|| bad("data chunk before fmt chunk"))?;
                return decode_samples(body, tag, channels, sr, bits);
            }
            _ => {}
        }
        r.set_position((start + len + (len & 1)) as u64);
    }
}

fn decode_samples(body: &[u8], tag: u16, channels: u16, sr: u32, bits: u16) -> Result<Audio> {
    if channels == 0 {
        return Err(bad("zero channels"));
    }
    if sr == 0 {
        return Err(bad("zero sample rate"));
    }
    let width = (bits as usize).div_ceil(8);
    let decode_one: fn(&[u8]) -> f64 = match (tag, bits) {
        (FORMAT_PCM, 8) => |b| (b[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => |b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => |b| (i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8) as f64 / 8_388_608.0,
        (FORMAT_PCM, 32) => |b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (FORMAT_FLOAT, 32) => |b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (FORMAT_FLOAT, 64) => |b| f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        _ => return Err(bad(format!("unsupported sample format (tag {tag}, {bits} bits)"))),
    };
    let frame = width * channels as usize;
    let frames = body.len() / frame;
    let mut out = vec![Vec::with_capacity(frames); channels as usize];
    for f in body.chunks_exact(frame) {
        for (ch, s) in out.iter_mut().zip(f.chunks_exact(width)) {
            ch.push(decode_one(s));
        }
    }
    Ok(Audio { sr: sr as f64, channels: out })
}

pub fn read(path: &Path) -> Result<Audio> {
    decode(&std::fs::read(path)?)
}

/// Reads a file and averages its channels; warns when there is more than one.
pub fn read_mono(path: &Path) -> Result<(Vec<f64>, f64)> {
    let audio = read(path)?;
    let n = audio.channels.len();
    if n == 1 {
        let mut ch = audio.channels;
        return Ok((ch.pop().unwrap(), audio.sr));
    }
    log::warn!("{}: {n} channels downmixed to mono", path.display());
    let len = audio.channels[0].len();
    let mono = (0..len).map(|i| audio.channels.iter().map(|c| c[i]).sum::<f64>() / n as f64).collect();
    Ok((mono, audio.sr))
}

/// Encodes mono audio. PCM formats clip to full scale.
pub fn encode(samples: &[f64], sr: u32, format: SampleFormat) -> Vec<u8> {
    let bits = format.bits();
    let width = bits as u32 / 8;
    let data_len = samples.len() as u32 * width;
    let mut w = Vec::with_capacity(44 + data_len as usize);
    w.extend_from_slice(b"RIFF");
    w.write_u32::<LE>(36 + data_len + (data_len & 1)).unwrap();
    w.extend_from_slice(b"WAVEfmt ");
    w.write_u32::<LE>(16).unwrap();
    w.write_u16::<LE>(format.tag()).unwrap();
    w.write_u16::<LE>(1).unwrap();
    w.write_u32::<LE>(sr).unwrap();
    w.write_u32::<LE>(sr * width).unwrap();
    w.write_u16::<LE>(width as u16).unwrap();
    w.write_u16::<LE>(bits).unwrap();
    w.extend_from_slice(b"data");
    w.write_u32::<LE>(data_len).unwrap();
    for &s in samples {
        match format {
            SampleFormat::Pcm16 => w.write_i16::<LE>((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16).unwrap(),
            SampleFormat::Pcm24 => {
                let v = (s * 8_388_608.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32;
                w.write_i24::<LE>(v).unwrap()
            }
            SampleFormat::Float32 => w.write_f32::<LE>(s as f32).unwrap(),
            SampleFormat::Float64 => w.write_f64::<LE>(s).unwrap(),
        }
    }
    if data_len & 1 == 1 {
        w.push(0);
    }
    w
}

pub fn write(path: &Path, samples: &[f64], sr: f64, format: SampleFormat) -> Result<()> {
    if !(sr > 0.0 && sr.fract() == 0.0 && sr <= u32::MAX as f64) {
        return Err(Error::InvalidParameter(format!("WAV needs an integral sample rate, got {sr}")));
    }
    std::fs::write(path, encode(samples, sr as u32, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float64_is_lossless() {
        let x: Vec<f64> = (0..1001).map(|i| (i as f64 * 0.37).sin() * 0.9 + 1e-17 * i as f64).collect();
        let a = decode(&encode(&x, 44100, SampleFormat::Float64)).unwrap();
        assert_eq!(a.sr, 44100.0);
        assert_eq!(a.channels, vec![x]);
    }

    #[test]
    fn pcm_round_trips_within_one_step() {
        let x: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).cos() * 0.99).collect();
        for (fmt, step) in [(SampleFormat::Pcm16, 1.0 / 32768.0), (SampleFormat::Pcm24, 1.0 / 8_388_608.0)] {
            let a = decode(&encode(&x, 48000, fmt)).unwrap();
            for (u, v) in x.iter().zip(&a.channels[0]) {
                assert!((u - v).abs() <= 0.5 * step + 1e-15);
            }
        }
        let a = decode(&encode(&[2.0, -2.0], 8000, SampleFormat::Pcm16)).unwrap();
        assert_eq!(a.channels[0], vec![32767.0 / 32768.0, -1.0]);
    }

    #[test]
    fn stereo_and_extensible() {
        // 2-channel extensible float32 with an odd-sized extra chunk in front
        let mut w = Vec::new();
        let frames: [(f32, f32); 3] = [(0.5, -0.5), (1.0, 0.0), (0.25, 0.75)];
        let data_len = 3 * 8u32;
        w.extend_from_slice(b"RIFF");
        w.write_u32::<LE>(0).unwrap();
        w.extend_from_slice(b"WAVE");
        w.extend_from_slice(b"LIST");
        w.write_u32::<LE>(3).unwrap();
        w.extend_from_slice(&[1, 2, 3, 0]);
        w.extend_from_slice(b"fmt ");
        w.write_u32::<LE>(40).unwrap();
        w.write_u16::<LE>(FORMAT_EXTENSIBLE).unwrap();
        w.write_u16::<LE>(2).unwrap();
        w.write_u32::<LE>(22050).unwrap();
        w.write_u32::<LE>(22050 * 8).unwrap();
        w.write_u16::<LE>(8).unwrap();
        w.write_u16::<LE>(32).unwrap();
        w.write_u16::<LE>(22).unwrap();
        w.write_u16::<LE>(32).unwrap();
        w.write_u32::<LE>(3).unwrap();
        w.write_u16::<LE>(FORMAT_FLOAT).unwrap();
        w.extend_from_slice(&[0u8; 14]);
        w.extend_from_slice(b"data");
        w.write_u32::<LE>(data_len).unwrap();
        for (l, r) in frames {
            w.write_f32::<LE>(l).unwrap();
            w.write_f32::<LE>(r).unwrap();
        }
        let a = decode(&w).unwrap();
        assert_eq!(a.sr, 22050.0);
        assert_eq!(a.channels[0], vec![0.5, 1.0, 0.25]);
        assert_eq!(a.channels[1], vec![-0.5, 0.0, 0.75]);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        std::fs::write(&p, &w).unwrap();
        let (mono, sr) = read_mono(&p).unwrap();
        assert_eq!(sr, 22050.0);
        assert_eq!(mono, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(decode(b"RIFX0000WAVE").is_err());
        assert!(decode(b"RIFF").is_err());
        let mut w = encode(&[0.0; 4], 8000, SampleFormat::Pcm16);
        w[20] = 7; // format tag
        assert!(decode(&w).is_err());
        assert!(write(Path::new("/nonexistent/x.wav"), &[0.0], 44100.5, SampleFormat::Pcm16).is_err());
    }
}
