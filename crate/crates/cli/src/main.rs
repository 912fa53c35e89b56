use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use warped_gabor::bench::{self, Suite, SuiteOptions};
use warped_gabor::engine::{self, Engine};
use warped_gabor::signals::{gen_signal, measure_err, SignalKind, TestSignal};
use warped_gabor::wav::{self, SampleFormat};
use warped_gabor::{cache, Config, FrameSet};

#[derive(Parser)]
#[command(name = "wgabor", version, about = "Warped Gabor frame analysis, synthesis and benchmarks")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive parameters, build the frame set and write the cache.
    Build {
        #[command(flatten)]
        frames: FrameArgs,
    },
    /// Print derived parameters, costs and memory bounds.
    Info {
        #[command(flatten)]
        frames: FrameArgs,
        /// Also list every band.
        #[arg(long)]
        bands: bool,
    },
    /// Analyze and resynthesize a WAV file; prints delay and error.
    Roundtrip {
        #[command(flatten)]
        frames: FrameArgs,
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Format::F32)]
        format: Format,
    },
    /// WAV to coefficient file.
    Analyze {
        #[command(flatten)]
        frames: FrameArgs,
        #[command(flatten)]
        io: Io,
    },
    /// Coefficient file to WAV.
    Synthesize {
        #[command(flatten)]
        frames: FrameArgs,
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Format::F32)]
        format: Format,
    },
    /// Run a benchmark suite.
    Bench {
        /// gaussian, rcw, influence_R, Tc_sweep or sumTq_sweep; `all` runs every suite.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Directory holding beet.wav, speech.wav and fire.wav.
        #[arg(long)]
        wav_dir: Option<PathBuf>,
        /// Parameter override applied to every row, `key=value`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, value_enum, default_value_t = Report::Pretty)]
        report: Report,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the real part of one band's atom as a WAV.
    Atoms {
        #[command(flatten)]
        frames: FrameArgs,
        #[arg(long)]
        band: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a benchmark test signal as a WAV.
    Gen {
        /// e.g. `white`, `sine 440`, `const`, `clicks`, `atoms 2`.
        #[arg(long)]
        signal: String,
        #[arg(long, default_value_t = 5.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 44100.0)]
        sr: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::F32)]
        format: Format,
    },
}

/// Where the frame set comes from: a config (or preset) with optional cache file.
#[derive(Args)]
struct FrameArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian or rcw; ignored with --config.
    #[arg(long, default_value = "gaussian")]
    preset: String,
    /// Cache file, reused when it matches the config and written otherwise.
    /// Given alone, the cache is loaded as is.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Io {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Pcm16,
    Pcm24,
    F32,
    F64,
}

impl From<Format> for SampleFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pcm16 => SampleFormat::Pcm16,
            Format::Pcm24 => SampleFormat::Pcm24,
            Format::F32 => SampleFormat::Float32,
            Format::F64 => SampleFormat::Float64,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Report {
    Pretty,
    Table,
    Structured,
}

fn split_kv(s: &str) -> Result<(&str, &str)> {
    s.split_once('=').map(|(k, v)| (k.trim(), v.trim())).with_context(|| format!("expected KEY=VALUE, got {s:?}"))
}

impl FrameArgs {
    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::preset(&self.preset).with_context(|| format!("unknown preset {:?}", self.preset))?,
        };
        for kv in &self.overrides {
            let (k, v) = split_kv(kv)?;
            cfg.set(k, v).map_err(anyhow::Error::msg)?;
        }
        if self.cache.is_some() {
            cfg.cache = self.cache.clone();
        }
        Ok(cfg)
    }

    fn frameset(&self) -> Result<FrameSet> {
        if let (Some(path), None, true) = (&self.cache, &self.config, self.overrides.is_empty()) {
            if path.exists() {
                return cache::load(path).with_context(|| format!("loading cache {}", path.display()));
            }
        }
        let cfg = self.config()?;
        Ok(cache::load_or_build(&cfg, cfg.cache.as_deref())?)
    }
}

fn read_input(path: &Path) -> Result<(Vec<f64>, f64)> {
    wav::read_mono(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(path: &Path, x: &[f64], sr: f64, format: Format) -> Result<()> {
    wav::write(path, x, sr, format.into()).with_context(|| format!("writing {}", path.display()))
}

fn summary(fs: &FrameSet) {
    let cost = engine::estimate_cost(fs);
    println!("q_sup = {}", fs.params.q_sup);
    println!("N_avg = {:.0}", cost.n_avg);
    println!("delay_samples = {}", cost.delay);
    println!("memory_bytes = {}", fs.total_memory());
    println!("hash = {}", fs.hash_hex());
}

fn info(fs: &FrameSet, bands: bool) {
    let p = &fs.params;
    let m = &fs.map;
    let cost = engine::estimate_cost(fs);
    let flat = engine::pr_diagnostic(fs, 4000);
    println!("hash = {}", fs.hash_hex());
    println!("window = {} T={} R={}", fs.window.kind.name(), fs.window.duration, p.overlap);
    for (k, v) in [
        ("sr", p.sr),
        ("K", p.bw_multiple),
        ("R", p.overlap),
        ("a", p.a),
        ("b", p.b),
        ("BW", p.bw),
        ("C_b", p.c_b),
        ("C_d", p.c_d),
        ("C_cut", p.c_cut),
        ("C_Tc", p.c_tc),
        ("T_c", p.t_c),
        ("T_max", p.t_max),
        ("theta_inf", p.theta_inf),
    ] {
        println!("{k} = {v}");
    }
    println!("q_sup = {}", p.q_sup);
    println!("N_c = {}", p.n_c);
    println!("hop.uniform = {}", p.uniform_hop);
    println!("map: f_in = {:.4} Hz, f_out = {:.2} Hz, nu_top = {:.4}, slopes {:.6} / {:.6}", m.f_in(), m.f_out(), m.nu_top(), m.slope_lo(), m.slope_hi());
    let hops: Vec<usize> = p.bands.iter().map(|b| b.hop).collect();
    println!("hop range = {}..={} samples", hops.iter().min().unwrap(), hops.iter().max().unwrap());
    println!("sum_Tq = {:.4} s", fs.sum_support());
    println!("N_avg = {:.0} flops/sample", cost.n_avg);
    println!("worst_frame = {:.0} flops", cost.worst_frame);
    println!("delay_samples = {}", cost.delay);
    println!("memory.truncated = {} samples (minimal {:.0})", cost.stored, cost.minimal);
    println!("memory.uniform_longest = {} samples", cost.uniform);
    println!("memory.untruncated = {} samples", cost.untruncated);
    println!("buffer = {} samples", cost.buffer);
    println!("flatness: max |D-1| = {:.3e}, bound ratio = {:.8}", flat.max_deviation, flat.bound_ratio);
    let lossy = fs.elements.iter().filter(|e| e.trunc_loss > warped_gabor::framegen::TRUNC_LOSS_WARN).count();
    println!("bands with truncation loss above {:e}: {lossy}", warped_gabor::framegen::TRUNC_LOSS_WARN);
    if bands {
        println!("q\tcenter_Hz\tBW_q_Hz\thop\tlen\tT_q_s\ttrunc_loss\tedge_ratio");
        for (b, e) in p.bands.iter().zip(&fs.elements) {
            println!(
                "{}\t{:.3}\t{:.3}\t{}\t{}\t{:.4}\t{:.2e}\t{:.2e}",
                b.q,
                b.center,
                b.bandwidth,
                b.hop,
                e.len(),
                e.duration(p.sr),
                e.trunc_loss,
                e.edge_ratio
            );
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Build { frames } => {
            let cfg = frames.config()?;
            let fs = cache::load_or_build(&cfg, cfg.cache.as_deref())?;
            summary(&fs);
            match &cfg.cache {
                Some(p) => println!("cache = {}", p.display()),
                None => println!("cache = (none; pass --cache to keep it)"),
            }
        }
        Command::Info { frames, bands } => info(&frames.frameset()?, bands),
        Command::Roundtrip { frames, io, format } => {
            let (x, sr) = read_input(&io.input)?;
            let fs = frames.frameset()?;
            let (y, lat) = engine::roundtrip(&x, sr, &fs)?;
            let err = measure_err(&x, &y, lat.delay_samples, 0)?;
            write_output(&io.out, &y[lat.delay_samples..], sr, format)?;
            println!("delay_samples = {}", lat.delay_samples);
            println!("err_dB = {err:.2}");
        }
        Command::Analyze { frames, io } => {
            let (x, sr) = read_input(&io.input)?;
            let fs = frames.frameset()?;
            let c = engine::analyze(&x, sr, &fs)?;
            engine::save_coefficients(&c, &io.out).with_context(|| format!("writing {}", io.out.display()))?;
            println!("coefficients = {}", c.total());
            println!("bands = {}", c.bands.len());
        }
        Command::Synthesize { frames, io, format } => {
            let c = engine::load_coefficients(&io.input).with_context(|| format!("reading {}", io.input.display()))?;
            let fs = frames.frameset()?;
            let engine = Engine::new(&fs);
            let y = engine::synthesize_with(&engine, &c)?;
            write_output(&io.out, &y[engine.delay()..], c.sr, format)?;
            println!("samples = {}", c.input_length);
        }
        Command::Bench { suite, duration, seed, wav_dir, overrides, report, out } => {
            let suites: Vec<Suite> = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::parse(&suite).with_context(|| {
                    let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                    format!("unknown suite {suite:?}; expected one of {} or all", names.join(", "))
                })?]
            };
            let overrides = overrides
                .iter()
                .map(|kv| split_kv(kv).map(|(k, v)| (k.to_string(), v.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let opts = SuiteOptions { duration, seed, wav_dir, overrides };
            let mut text = String::new();
            let mut failed = 0;
            for s in suites {
                let r = bench::run_suite(s, &opts)?;
                failed += r.rows.iter().filter(|row| matches!(row.status, bench::RowStatus::Failed(_))).count();
                text.push_str(&match report {
                    Report::Pretty => r.to_pretty(),
                    Report::Table => r.to_table(),
                    Report::Structured => r.to_structured(true),
                });
            }
            match out {
                Some(p) => std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{text}"),
            }
            if failed > 0 {
                bail!("{failed} benchmark rows failed");
            }
        }
        Command::Atoms { frames, band, out } => {
            let fs = frames.frameset()?;
            let e = fs
                .elements
                .get(band)
                .with_context(|| format!("band {band} out of range; q_sup = {}", fs.params.q_sup))?;
            let re: Vec<f64> = e.samples.iter().map(|s| s.re).collect();
            let peak = re.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scaled: Vec<f64> = re.iter().map(|v| v / peak).collect();
            wav::write(&out, &scaled, fs.sr(), SampleFormat::Float64)?;
            println!("band = {band}");
            println!("center_Hz = {:.3}", fs.params.bands[band].center);
            println!("samples = {} (origin at {})", e.len(), e.center_offset);
            println!("peak = {peak:e}");
        }
        Command::Gen { signal, duration, seed, sr, out, format } => {
            let kind = SignalKind::parse(&signal).with_context(|| format!("unknown signal {signal:?}"))?;
            let fs = match kind {
                SignalKind::Atoms(_) => {
                    let mut cfg = Config::gaussian_preset();
                    cfg.sr = sr;
                    Some(cache::load_or_build(&cfg, None)?)
                }
                _ => None,
            };
            let x = gen_signal(&TestSignal::new(kind, duration, sr, seed), fs.as_ref())?;
            write_output(&out, &x, sr, format)?;
            println!("samples = {}", x.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
