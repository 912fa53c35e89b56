//! Benchmark suites: round-trip error tables over signals and parameter sweeps.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::cache;
use crate::config::Config;
use crate::engine::{analyze_with_stats, estimate_cost, synthesize_with, Engine};
use crate::error::{Error, Result};
use crate::signals::{gen_signal, measure_err, SignalKind, TestSignal};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Gaussian,
    RaisedCosine,
    InfluenceR,
    TcSweep,
    SumTqSweep,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Gaussian, Suite::RaisedCosine, Suite::InfluenceR, Suite::TcSweep, Suite::SumTqSweep];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gaussian => "gaussian",
            Suite::RaisedCosine => "rcw",
            Suite::InfluenceR => "influence_R",
            Suite::TcSweep => "Tc_sweep",
            Suite::SumTqSweep => "sumTq_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" | "gauss" => Some(Suite::Gaussian),
            "rcw" | "raised-cosine" => Some(Suite::RaisedCosine),
            "influence_R" | "influence_r" | "R" => Some(Suite::InfluenceR),
            "Tc_sweep" | "tc_sweep" | "Tc" => Some(Suite::TcSweep),
            "sumTq_sweep" | "sumtq_sweep" | "Tq" => Some(Suite::SumTqSweep),
            _ => None,
        }
    }
}

/// Signal rows of the two preset tables, in table order.
pub const TABLE_SIGNALS: [&str; 10] =
    ["white", "sine 30", "sine 440", "sine 20k", "const", "clicks", "beet", "speech", "fire", "atom"];

/// Rows backed by recordings that are only available as user-supplied WAVs.
pub const RECORDED_SIGNALS: [&str; 3] = ["beet", "speech", "fire"];

/// `T_c/T_h` values of the precompute-length sweep. Since `T_c = C_Tc·T_h/θ'_inf`,
/// each row runs with `C_Tc = ratio·θ'_inf`.
pub const TC_RATIOS: [f64; 9] = [1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.5, 5.0, 16.0];

/// Overlaps of the `R` sweep (Gaussian window, `BW = 24 Hz`, `a = 1/24 s`).
pub const R_VALUES: [f64; 3] = [2.0, 2.5, 3.0];

/// Truncation constants of the support-length sweep, increasing.
pub const C_CUT_VALUES: [f64; 10] = [2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0, 300.0, 1000.0, 10000.0];

#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    Skipped(String),
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// Parameter set of the row, e.g. `gaussian` or `rcw C_Tc=2.5`.
    pub preset: String,
    pub signal: String,
    pub status: RowStatus,
    pub err_db: Option<f64>,
    pub r: f64,
    pub k: f64,
    pub b: f64,
    pub q_sup: usize,
    pub a: f64,
    pub c_b: f64,
    pub c_d: f64,
    pub c_cut: f64,
    pub c_tc: f64,
    pub t_max: f64,
    pub t_c: f64,
    pub n_avg: f64,
    pub sum_tq: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub suite: String,
    pub duration: f64,
    pub seed: u64,
    pub rows: Vec<Row>,
}

pub const COLUMNS: [&str; 13] =
    ["signal", "err_dB", "R", "K", "b", "q_sup", "a", "C_b", "C_d", "C_cut", "T_max", "N_avg", "wall_ms"];

fn fmt_err(r: &Row) -> String {
    match (&r.status, r.err_db) {
        (RowStatus::Ok, Some(e)) => format!("{e:.2}"),
        (RowStatus::Skipped(_), _) => "skipped".into(),
        _ => "failed".into(),
    }
}

impl ErrorReport {
    /// Rows whose `signal` matches.
    pub fn find(&self, signal: &str) -> impl Iterator<Item = &Row> {
        let s = signal.to_string();
        self.rows.iter().filter(move |r| r.signal == s)
    }

    pub fn err(&self, preset: &str, signal: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.preset == preset && r.signal == signal).and_then(|r| r.err_db)
    }

    /// Tab-separated table with the fixed column set.
    pub fn to_table(&self) -> String {
        let mut s = COLUMNS.join("\t");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{:.4}\t{}\t{:.5}\t{}\t{}\t{}\t{}\t{:.0}\t{:.0}",
                r.signal,
                fmt_err(r),
                r.r,
                r.k,
                r.b,
                r.q_sup,
                r.a,
                r.c_b,
                r.c_d,
                r.c_cut,
                r.t_max,
                r.n_avg,
                r.wall_ms
            );
        }
        s
    }

    /// Aligned table for terminals.
    pub fn to_pretty(&self) -> String {
        let mut s = format!("suite {} (duration {} s, seed {})\n", self.suite, self.duration, self.seed);
        let _ = writeln!(
            s,
            "{:<22} {:<10} {:>9} {:>5} {:>5} {:>7} {:>5} {:>8} {:>7} {:>7} {:>5} {:>8} {:>8}",
            "preset", "signal", "err_dB", "R", "K", "b", "q_sup", "C_cut", "C_Tc", "T_max", "C_d", "N_avg", "sum_Tq"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<22} {:<10} {:>9} {:>5} {:>5} {:>7.3} {:>5} {:>8} {:>7.3} {:>7} {:>5} {:>8.0} {:>8.2}",
                r.preset,
                r.signal,
                fmt_err(r),
                r.r,
                r.k,
                r.b,
                r.q_sup,
                r.c_cut,
                r.c_tc,
                r.t_max,
                r.c_d,
                r.n_avg,
                r.sum_tq
            );
        }
        s
    }

    /// One `[[row]]` block of `key = value` lines per row, all preset fields included.
    pub fn to_structured(&self, with_timing: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite = {}", self.suite);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "seed = {}", self.seed);
        for r in &self.rows {
            s.push_str("\n[[row]]\n");
            let _ = writeln!(s, "preset = {}", r.preset);
            let _ = writeln!(s, "signal = {}", r.signal);
            match &r.status {
                RowStatus::Ok => s.push_str("status = ok\n"),
                RowStatus::Skipped(why) => {
                    let _ = writeln!(s, "status = skipped ({why})");
                }
                RowStatus::Failed(why) => {
                    let _ = writeln!(s, "status = failed ({why})");
                }
            }
            if let Some(e) = r.err_db {
                let _ = writeln!(s, "err_dB = {e}");
            }
            for (k, v) in [
                ("R", r.r),
                ("K", r.k),
                ("b", r.b),
                ("a", r.a),
                ("C_b", r.c_b),
                ("C_d", r.c_d),
                ("C_cut", r.c_cut),
                ("C_Tc", r.c_tc),
                ("T_max", r.t_max),
                ("T_c", r.t_c),
                ("N_avg", r.n_avg),
                ("sum_Tq", r.sum_tq),
            ] {
                let _ = writeln!(s, "{k} = {v}");
            }
            let _ = writeln!(s, "q_sup = {}", r.q_sup);
            if with_timing {
                let _ = writeln!(s, "wall_ms = {}", r.wall_ms);
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Signal length (s).
    pub duration: f64,
    pub seed: u64,
    /// Directory searched for `beet.wav`, `speech.wav`, `fire.wav`.
    pub wav_dir: Option<PathBuf>,
    /// Keys applied on top of every row's configuration.
    pub overrides: Vec<(String, String)>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { duration: 5.0, seed: 1, wav_dir: None, overrides: Vec::new() }
    }
}

/// One configuration of a suite and the signals it is run on.
#[derive(Clone, Debug)]
pub struct SuiteRow {
    pub preset: String,
    pub config: Config,
    pub signals: Vec<String>,
}

/// Gaussian window with `BW = 24 Hz` and `a = 1/24 s` at overlap `r`, with
/// the sweep's own truncation settings.
pub fn r_sweep_config(r: f64) -> Config {
    let a = 1.0 / 24.0;
    let mut cfg = Config::gaussian_preset();
    cfg.overlap = r;
    cfg.window_t = a * r;
    cfg.bw_multiple = 2.0 * r;
    cfg.a = Some(a);
    cfg.t_max = 0.629;
    cfg.c_tc = 2.0;
    cfg.c_cut = 1e4;
    cfg
}

/// The configurations a suite runs, before overrides.
pub fn suite_rows(suite: Suite) -> Vec<SuiteRow> {
    let table = |name: &str, cfg: Config| SuiteRow {
        preset: name.to_string(),
        config: cfg,
        signals: TABLE_SIGNALS.iter().map(|s| s.to_string()).collect(),
    };
    let white = || vec!["white".to_string()];
    match suite {
        Suite::Gaussian => vec![table("gaussian", Config::gaussian_preset())],
        Suite::RaisedCosine => vec![table("rcw", Config::raised_cosine_preset())],
        Suite::InfluenceR => R_VALUES
            .iter()
            .map(|&r| SuiteRow { preset: format!("gaussian R={r}"), config: r_sweep_config(r), signals: white() })
            .collect(),
        Suite::TcSweep => {
            let mut rows = Vec::new();
            for (name, base) in [("rcw", Config::raised_cosine_preset()), ("gaussian", Config::gaussian_preset())] {
                let slope = base.build_map().map(|m| m.slope_lo()).unwrap_or(1.0);
                for &ratio in &TC_RATIOS {
                    let mut cfg = base.clone();
                    cfg.c_tc = ratio * slope;
                    rows.push(SuiteRow { preset: format!("{name} T_c/T_h={ratio}"), config: cfg, signals: white() });
                }
            }
            rows
        }
        Suite::SumTqSweep => C_CUT_VALUES
            .iter()
            .map(|&c| {
                let mut cfg = Config::gaussian_preset();
                cfg.c_cut = c;
                SuiteRow { preset: format!("gaussian C_cut={c}"), config: cfg, signals: white() }
            })
            .collect(),
    }
}

fn blank_row(preset: &str, signal: &str, cfg: &Config) -> Row {
    Row {
        preset: preset.to_string(),
        signal: signal.to_string(),
        status: RowStatus::Ok,
        err_db: None,
        r: cfg.overlap,
        k: cfg.bw_multiple,
        b: cfg.freq_shift(),
        q_sup: 0,
        a: cfg.time_shift(),
        c_b: cfg.c_b,
        c_d: cfg.c_d,
        c_cut: cfg.c_cut,
        c_tc: cfg.c_tc,
        t_max: cfg.t_max,
        t_c: 0.0,
        n_avg: 0.0,
        sum_tq: 0.0,
        wall_ms: 0.0,
    }
}

/// Runs every row of a suite. Row failures are recorded and the suite continues.
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<ErrorReport> {
    let mut rows = Vec::new();
    for spec in suite_rows(suite) {
        let mut cfg = spec.config.clone();
        cfg.duration = opts.duration;
        cfg.seed = opts.seed;
        for (k, v) in &opts.overrides {
            cfg.set(k, v).map_err(Error::InvalidParameter)?;
        }
        rows.extend(run_rows(&spec.preset, &cfg, &spec.signals, opts));
    }
    Ok(ErrorReport { suite: suite.name().to_string(), duration: opts.duration, seed: opts.seed, rows })
}

/// Builds one frame set and measures every signal against it.
pub fn run_rows(preset: &str, cfg: &Config, signals: &[String], opts: &SuiteOptions) -> Vec<Row> {
    let fail = |msg: String| -> Vec<Row> {
        signals
            .iter()
            .map(|s| Row { status: RowStatus::Failed(msg.clone()), ..blank_row(preset, s, cfg) })
            .collect()
    };
    let build_start = Instant::now();
    let fs = match cache::load_or_build(cfg, None) {
        Ok(fs) => fs,
        Err(e) => return fail(e.to_string()),
    };
    let build_ms = build_start.elapsed().as_secs_f64() * 1e3;
    let cost = estimate_cost(&fs);
    let engine = Engine::new(&fs);
    let trim = (cfg.t_max * cfg.sr).round() as usize;
    let mut out = Vec::new();
    for (i, name) in signals.iter().enumerate() {
        let mut row = blank_row(preset, name, cfg);
        row.q_sup = fs.params.q_sup;
        row.t_c = fs.params.t_c;
        row.n_avg = cost.n_avg;
        row.sum_tq = fs.sum_support();
        let kind = if RECORDED_SIGNALS.contains(&name.as_str()) {
            match opts.wav_dir.as_ref().map(|d| d.join(format!("{name}.wav"))).filter(|p| p.exists()) {
                Some(p) => SignalKind::Wav(p),
                None => {
                    row.status = RowStatus::Skipped("recording not supplied".into());
                    out.push(row);
                    continue;
                }
            }
        } else {
            match SignalKind::parse(name) {
                Some(k) => k,
                None => {
                    row.status = RowStatus::Failed(format!("unknown signal {name:?}"));
                    out.push(row);
                    continue;
                }
            }
        };
        let start = Instant::now();
        let result = (|| -> Result<f64> {
            let x = gen_signal(&TestSignal::new(kind, cfg.duration, cfg.sr, cfg.seed), Some(&fs))?;
            let (coeffs, _) = analyze_with_stats(&engine, &x, cfg.sr)?;
            let y = synthesize_with(&engine, &coeffs)?;
            measure_err(&x, &y, engine.delay(), trim)
        })();
        row.wall_ms = start.elapsed().as_secs_f64() * 1e3 + if i == 0 { build_ms } else { 0.0 };
        match result {
            Ok(e) => row.err_db = Some(e),
            Err(e) => row.status = RowStatus::Failed(e.to_string()),
        }
        out.push(row);
    }
    out
}
