//! Redressed frequency-warped Gabor frames with compactly supported atoms.
//!
//! A warp map `θ` sends a uniform grid of band centres `q·b` to a nonuniform
//! (here roughly logarithmic) set of physical frequencies. Each band gets an
//! atom whose spectrum is the prototype window evaluated on the warped axis,
//! scaled so that the analysis/synthesis pair is self-dual; the atoms are then
//! truncated to a finite support so that the transform runs as a streaming
//! filter bank with a fixed delay.
//!
//! ```no_run
//! use warped_gabor::{cache, engine, signals, Config};
//!
//! let cfg = Config::gaussian_preset();
//! let fs = cache::load_or_build(&cfg, None)?;
//! let x = signals::gen_signal(&signals::TestSignal::new(signals::SignalKind::White, 5.0, cfg.sr, 1), None)?;
//! let (y, latency) = engine::roundtrip(&x, cfg.sr, &fs)?;
//! let trim = (cfg.t_max * cfg.sr) as usize;
//! println!("err = {:.1} dB", signals::measure_err(&x, &y, latency.delay_samples, trim)?);
//! # Ok::<(), warped_gabor::Error>(())
//! ```

pub mod bench;
pub mod cache;
pub mod config;
pub mod engine;
pub mod error;
pub mod framegen;
pub mod params;
pub mod signals;
pub mod warpmap;
pub mod wav;
pub mod window;

pub use config::Config;
pub use engine::{CoefficientStream, Engine, LatencyReport};
pub use error::{Error, Result};
pub use framegen::{FrameElement, FrameSet};
pub use params::FrameParams;
pub use warpmap::WarpMap;
pub use window::{PrototypeWindow, WindowKind};
