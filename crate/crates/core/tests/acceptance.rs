//! Acceptance criteria, one line per check. Runs the 5 s benchmark rows, so
//! expect a few minutes. Exits nonzero if any check fails.

use std::time::Instant;

use warped_gabor::bench::{r_sweep_config, run_rows, Row, RowStatus, SuiteOptions, C_CUT_VALUES, R_VALUES};
use warped_gabor::cache;
use warped_gabor::engine::{analyze, analyze_with_stats, estimate_cost, roundtrip, Engine, StreamProcessor};
use warped_gabor::framegen::AtomGenerator;
use warped_gabor::signals::{gen_signal, measure_err, SignalKind, TestSignal};
use warped_gabor::{Config, FrameSet};

const SR: f64 = 44100.0;
const DURATION: f64 = 5.0;

// published reference values, dB
const REF_GAUSS_WHITE: f64 = -71.3;
const REF_GAUSS_20K: f64 = -81.2;
const REF_GAUSS_CLICKS: f64 = -57.3;
const REF_RCW_WHITE: f64 = -70.6;
const REF_RCW_CONST: f64 = -84.7;
const REF_R_SWEEP: [f64; 3] = [-74.4, -86.4, -94.4];
const REF_N_AVG_GAUSS: f64 = 7.3e3;
const REF_N_AVG_RCW: f64 = 33.6e3;

// pinned tolerances
const REPORT_BAND_DB: f64 = 10.0;
const ROW_LIMIT_GAUSS_S: f64 = 60.0;
const ROW_LIMIT_RCW_S: f64 = 120.0;
const R_SWEEP_TOL_DB: f64 = 12.0;
const TC_SATURATION_DB: f64 = 1.5;
const TC_GAIN_DB: f64 = 5.0;
const PLATEAU_DB: f64 = 2.0;
const ORACLE_DB: f64 = -90.0;
const COUNTER_TOL: f64 = 0.15;
const N_AVG_TOL: f64 = 0.25;
const LINEARITY_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;
const SEAM_GAP_DB: f64 = 5.0;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id.to_string());
        }
    }

    fn info(&self, id: &str, detail: String) {
        println!("INFO {id}: {detail}");
    }
}

fn opts() -> SuiteOptions {
    SuiteOptions { duration: DURATION, ..SuiteOptions::default() }
}

fn rows(preset: &str, cfg: &Config, signals: &[&str]) -> Vec<Row> {
    let mut cfg = cfg.clone();
    cfg.duration = DURATION;
    let signals: Vec<String> = signals.iter().map(|s| s.to_string()).collect();
    let rows = run_rows(preset, &cfg, &signals, &opts());
    for r in &rows {
        assert_eq!(r.status, RowStatus::Ok, "{preset} {}: row did not run", r.signal);
    }
    rows
}

fn err_of(rows: &[Row], signal: &str) -> f64 {
    rows.iter().find(|r| r.signal == signal).and_then(|r| r.err_db).unwrap()
}

fn slowest(rows: &[Row]) -> f64 {
    rows.iter().map(|r| r.wall_ms).fold(0.0, f64::max) / 1e3
}

fn white(fs: &FrameSet, seconds: f64, seed: u64) -> Vec<f64> {
    gen_signal(&TestSignal::new(SignalKind::White, seconds, SR, seed), Some(fs)).unwrap()
}

fn main() {
    let mut rep = Report { failed: Vec::new() };
    let t0 = Instant::now();

    let gauss_cfg = Config::gaussian_preset();
    let rcw_cfg = Config::raised_cosine_preset();

    // 1. Gaussian preset table rows
    let g = rows("gaussian", &gauss_cfg, &["white", "sine 20k", "clicks", "sine 30", "sine 440"]);
    let (gw, g20, gc) = (err_of(&g, "white"), err_of(&g, "sine 20k"), err_of(&g, "clicks"));
    rep.check(
        "1 gaussian preset",
        gw <= -60.0 && g20 <= -70.0 && gc <= -50.0 && slowest(&g) < ROW_LIMIT_GAUSS_S,
        format!(
            "white {gw:.2} (<= -60, reference {REF_GAUSS_WHITE}), sine 20k {g20:.2} (<= -70, reference {REF_GAUSS_20K}), \
             clicks {gc:.2} (<= -50, reference {REF_GAUSS_CLICKS}); slowest row {:.1} s (< {ROW_LIMIT_GAUSS_S})",
            slowest(&g)
        ),
    );
    for (name, got, reference) in [("white", gw, REF_GAUSS_WHITE), ("sine 20k", g20, REF_GAUSS_20K), ("clicks", gc, REF_GAUSS_CLICKS)] {
        rep.info("1 report band", format!("gaussian {name}: {:+.2} dB from reference (band ±{REPORT_BAND_DB})", got - reference));
    }

    // 2. raised-cosine preset table rows
    let r = rows("rcw", &rcw_cfg, &["white", "const", "sine 30", "sine 440"]);
    let (rw, rc) = (err_of(&r, "white"), err_of(&r, "const"));
    rep.check(
        "2 raised-cosine preset",
        rw <= -55.0 && rc <= -70.0 && slowest(&r) < ROW_LIMIT_RCW_S,
        format!(
            "white {rw:.2} (<= -55, reference {REF_RCW_WHITE}), const {rc:.2} (<= -70, reference {REF_RCW_CONST}); \
             slowest row {:.1} s (< {ROW_LIMIT_RCW_S})",
            slowest(&r)
        ),
    );
    for (name, got, reference) in [("white", rw, REF_RCW_WHITE), ("const", rc, REF_RCW_CONST)] {
        rep.info("2 report band", format!("rcw {name}: {:+.2} dB from reference (band ±{REPORT_BAND_DB})", got - reference));
    }

    // 3. overlap sweep
    let errs: Vec<f64> = R_VALUES.iter().map(|&rv| err_of(&rows("R", &r_sweep_config(rv), &["white"]), "white")).collect();
    let monotone = errs.windows(2).all(|w| w[0] > w[1]);
    let near = errs.iter().zip(REF_R_SWEEP).all(|(e, p)| (e - p).abs() <= R_SWEEP_TOL_DB);
    rep.check(
        "3 R sweep",
        monotone && near,
        format!("R = {R_VALUES:?}: {errs:.2?}, reference {REF_R_SWEEP:?} (strictly decreasing, each within {R_SWEEP_TOL_DB} dB)"),
    );

    // 4. precompute length saturation, raised cosine
    let slope = rcw_cfg.build_map().unwrap().slope_lo();
    let tc_err = |ratio: f64| {
        let mut cfg = rcw_cfg.clone();
        cfg.c_tc = ratio * slope;
        err_of(&rows("rcw T_c", &cfg, &["white"]), "white")
    };
    let (e10, e20, e25, e50) = (tc_err(1.0), tc_err(2.0), tc_err(2.5), tc_err(5.0));
    rep.check(
        "4 T_c saturation",
        (e25 - e50).abs() <= TC_SATURATION_DB && e10 - e20 > TC_GAIN_DB,
        format!(
            "T_c/T_h 1.0 {e10:.2}, 2.0 {e20:.2}, 2.5 {e25:.2}, 5.0 {e50:.2}; |2.5-5.0| {:.2} (<= {TC_SATURATION_DB}), \
             gain 1.0->2.0 {:.2} (> {TC_GAIN_DB})",
            (e25 - e50).abs(),
            e10 - e20
        ),
    );

    // 5. truncation sweep
    let mut pts: Vec<(f64, f64)> = C_CUT_VALUES
        .iter()
        .map(|&c| {
            let mut cfg = gauss_cfg.clone();
            cfg.c_cut = c;
            let row = rows("C_cut", &cfg, &["white"]).remove(0);
            (row.sum_tq, row.err_db.unwrap())
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let plateau = pts.iter().position(|p| p.1 <= best + PLATEAU_DB).unwrap();
    let rising = pts[..=plateau].windows(2).all(|w| w[1].1 <= w[0].1);
    let spread = pts[plateau..].iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) - best;
    rep.check(
        "5 truncation proportionality",
        rising && spread <= PLATEAU_DB,
        format!(
            "(sum_Tq s, err dB) {:?}; nonincreasing up to index {plateau}, plateau spread {spread:.2} (<= {PLATEAU_DB})",
            pts.iter().map(|(s, e)| (format!("{s:.2}"), format!("{e:.2}"))).collect::<Vec<_>>()
        ),
    );

    // 6. near-painless oracle: untruncated up to the precompute length
    {
        let mut cfg = gauss_cfg.clone();
        cfg.c_cut = 1e9;
        cfg.c_d = 4.0;
        cfg.t_max = cfg.build_parts().unwrap().2.t_c;
        cfg.duration = 2.0;
        let fs = cache::load_or_build(&cfg, None).unwrap();
        let x = white(&fs, 2.0, 1);
        let (y, lat) = roundtrip(&x, SR, &fs).unwrap();
        let e = measure_err(&x, &y, lat.delay_samples, (cfg.t_max * SR) as usize).unwrap();
        rep.check("6 near-painless oracle", e <= ORACLE_DB, format!("gaussian C_cut=1e9 T_max=T_c={:.3} s C_d=4: {e:.2} (<= {ORACLE_DB})", cfg.t_max));
    }

    // 7. cost model
    let gfs = cache::load_or_build(&gauss_cfg, None).unwrap();
    let rfs = cache::load_or_build(&rcw_cfg, None).unwrap();
    for (name, fs, reference) in [("gaussian", &gfs, REF_N_AVG_GAUSS), ("rcw", &rfs, REF_N_AVG_RCW)] {
        let x = white(fs, DURATION, 1);
        let (_, stats) = analyze_with_stats(&Engine::new(fs), &x, SR).unwrap();
        let counted = stats.flops as f64 / x.len() as f64;
        let n_avg = estimate_cost(fs).n_avg;
        let c_dev = counted / n_avg - 1.0;
        let p_dev = n_avg / reference - 1.0;
        rep.check(
            &format!("7 cost model {name}"),
            c_dev.abs() <= COUNTER_TOL && p_dev.abs() <= N_AVG_TOL,
            format!(
                "counted {counted:.0} flops/sample vs N_avg {n_avg:.0} ({:+.1}%, tol {}%); N_avg vs reference {reference:.0} ({:+.1}%, tol {}%)",
                100.0 * c_dev,
                100.0 * COUNTER_TOL,
                100.0 * p_dev,
                100.0 * N_AVG_TOL
            ),
        );
    }

    // 8. exactness
    {
        let fs = &gfs;
        let (x, y) = (white(fs, 0.5, 2), white(fs, 0.5, 3));
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.3 * a - 2.1 * b).collect();
        let (cx, cy, cz) = (analyze(&x, SR, fs).unwrap(), analyze(&y, SR, fs).unwrap(), analyze(&z, SR, fs).unwrap());
        let scale = cz.bands.iter().flat_map(|b| &b.coeffs).map(|c| c.norm()).fold(0.0, f64::max);
        let mut lin = 0.0f64;
        for ((a, b), c) in cx.bands.iter().zip(&cy.bands).zip(&cz.bands) {
            for ((a, b), c) in a.coeffs.iter().zip(&b.coeffs).zip(&c.coeffs) {
                lin = lin.max((0.3 * a - 2.1 * b - c).norm() / scale);
            }
        }
        rep.check("8 linearity", lin <= LINEARITY_TOL, format!("max relative deviation {lin:.2e} (<= {LINEARITY_TOL:e})"));

        let gen = AtomGenerator::new(&fs.params, &fs.map, &fs.window);
        let mut sym = 0.0f64;
        for q in (0..fs.params.q_sup).step_by(13) {
            let e = gen.atom(q).unwrap();
            let c = e.center_offset;
            let peak = e.samples[c].norm();
            for k in 1..c.min(e.samples.len() - c) {
                sym = sym.max((e.samples[c + k] - e.samples[c - k].conj()).norm() / peak);
            }
        }
        rep.check("8 zero-phase symmetry", sym <= SYMMETRY_TOL, format!("max |φ(t) - conj φ(-t)| / peak {sym:.2e} (<= {SYMMETRY_TOL:e})"));

        let mut click = vec![0.0; 60000];
        let at = 23456;
        click[at] = 1.0;
        let (out, lat) = roundtrip(&click, SR, fs).unwrap();
        let peak = out.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        rep.check(
            "8 click delay",
            peak == at + lat.delay_samples,
            format!("peak at {peak}, expected {} (delay {})", at + lat.delay_samples, lat.delay_samples),
        );

        let bytes = cache::encode(fs);
        let back = cache::decode(&bytes).unwrap();
        let same = cache::encode(&back) == bytes
            && back.hash() == fs.hash()
            && back.elements.iter().zip(&fs.elements).all(|(a, b)| {
                a.samples.iter().zip(&b.samples).all(|(u, v)| u.re.to_bits() == v.re.to_bits() && u.im.to_bits() == v.im.to_bits())
            });
        rep.check("8 cache round trip", same, format!("{} bytes, hash {}", bytes.len(), &fs.hash_hex()[..16]));

        let (offline, _) = roundtrip(&x, SR, fs).unwrap();
        let engine = Engine::new(fs);
        let mut identical = true;
        for block in [1usize, 441, 4096, 100_000] {
            let mut p = StreamProcessor::new(&engine);
            let mut out: Vec<f64> = x.chunks(block).flat_map(|b| p.process(b)).collect();
            out.extend(p.finish().unwrap());
            identical &= out.len() == offline.len() && out.iter().zip(&offline).all(|(a, b)| a.to_bits() == b.to_bits());
        }
        rep.check("8 block-size invariance", identical, "block sizes 1, 441, 4096, 100000 vs whole signal".into());
    }

    // 9. seam sensitivity
    for (name, rs) in [("gaussian", &g), ("rcw", &r)] {
        let (e30, e440) = (err_of(rs, "sine 30"), err_of(rs, "sine 440"));
        rep.check(
            &format!("9 seam sensitivity {name}"),
            e30 - e440 >= SEAM_GAP_DB,
            format!("sine 30 {e30:.2} vs sine 440 {e440:.2}: gap {:.2} (>= {SEAM_GAP_DB})", e30 - e440),
        );
    }
    for (name, cfg) in [("gaussian", &gauss_cfg), ("rcw", &rcw_cfg)] {
        let seam = cfg.build_map().unwrap().f_in();
        let rs = rows(name, cfg, &[&format!("sine {seam}"), "sine 440"]);
        rep.info(
            "9 at the seam",
            format!("{name} sine {seam:.2} Hz {:.2} vs sine 440 {:.2}", rs[0].err_db.unwrap(), rs[1].err_db.unwrap()),
        );
    }

    println!("acceptance: {} failed, {:.0} s", rep.failed.len(), t0.elapsed().as_secs_f64());
    if !rep.failed.is_empty() {
        println!("failed: {}", rep.failed.join(", "));
        std::process::exit(1);
    }
}
