//! Runs the three rate experiments at their default settings and prints the
//! fitted orders.

use slq_core::bench::experiments::{run_riccati_rate, run_space_rate, run_time_rate};
use slq_core::bench::{Experiment, ExperimentConfig, RateResult};

fn show(name: &str, rate: &RateResult) {
    for (r, e) in &rate.points {
        println!("  {name:<22} {r:<12.6} {e:.4e}");
    }
    match rate.fit {
        Some(f) => println!("  -> slope {:.3} ± {:.3}\n", f.slope, f.half_width),
        None => println!("  -> degenerate\n"),
    }
}

fn main() -> slq_core::Result<()> {
    let r = run_riccati_rate(&ExperimentConfig::defaults(Experiment::RiccatiRate))?;
    show("riccati (weighted)", &r.weighted);
    show("riccati (sup)", &r.sup);

    let mut cfg = ExperimentConfig::defaults(Experiment::TimeRate);
    show("state, beta = 0.5", &run_time_rate(&cfg)?.rate);
    cfg.beta = 0.0;
    cfg.paths = 500;
    show("state, beta = 0", &run_time_rate(&cfg)?.rate);

    let s = run_space_rate(&ExperimentConfig::defaults(Experiment::SpaceRate))?;
    show("control in space", &s.control);
    show("projection of x0", &s.projection);
    Ok(())
}
