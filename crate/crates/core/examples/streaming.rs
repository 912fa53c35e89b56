//! Block-wise processing of a sine through the Gaussian preset, as a live
//! audio callback would do it. Run with `cargo run --release --example streaming`.

use warped_gabor::engine::{Engine, StreamProcessor};
use warped_gabor::signals::{gen_signal, measure_err, SignalKind, TestSignal};
use warped_gabor::{cache, Config};

fn main() -> warped_gabor::Result<()> {
    let cfg = Config::gaussian_preset();
    let fs = cache::load_or_build(&cfg, None)?;
    let engine = Engine::new(&fs);
    let x = gen_signal(&TestSignal::new(SignalKind::Sine(440.0), 3.0, cfg.sr, 1), None)?;

    let mut proc = StreamProcessor::new(&engine);
    let mut y = Vec::with_capacity(x.len() + proc.delay());
    for block in x.chunks(256) {
        y.extend(proc.process(block));
    }
    y.extend(proc.finish()?);

    let delay = engine.delay();
    println!("delay {delay} samples ({:.3} s)", delay as f64 / cfg.sr);
    println!("err {:.2} dB", measure_err(&x, &y, delay, (cfg.t_max * cfg.sr) as usize)?);
    Ok(())
}
