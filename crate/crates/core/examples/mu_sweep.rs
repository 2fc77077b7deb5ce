//! Evolution of the genus-2 branchpoints in `mu` by RK4 on the implicit
//! function ODE and by Newton re-solves, side by side, with the trace
//! written as CSV.
//!
//!     cargo run --example mu_sweep -- 1.0 3.0 0.01 trace.csv

use nls_rhp::continuation::{sweep_range, write_csv, Method, SweepParam};
use nls_rhp::{fixtures, Tolerances};

fn main() -> nls_rhp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |i: usize, d: f64| args.get(i).map_or(d, |s| s.parse().expect("numeric argument"));
    let (lo, hi, step) = (num(0, 1.5), num(1, 2.5), num(2, 0.02));
    let fx = fixtures::post_break();
    let tr = sweep_range(SweepParam::Mu, lo, hi, step, Method::Both, None, &fx.params, &fx.seed, &Tolerances::default())?;

    println!("{:>6} {:>34} {:>34} {:>34}", "mu", "alpha_0", "alpha_2", "alpha_4");
    for s in tr.primary().samples.iter().step_by(((hi - lo) / step / 10.0).ceil().max(1.0) as usize) {
        let a: Vec<String> = s.alphas.iter().map(|z| format!("{z:.12}")).collect();
        println!("{:6.3} {:>34} {:>34} {:>34}", s.value, a[0], a[1], a[2]);
    }
    println!("max |alpha_ode - alpha_resolve| = {:.3e}", tr.max_deviation().unwrap_or(f64::NAN));
    if let Some(f) = tr.frontier() {
        println!("stopped at mu = {}: {}", f.value, f.message);
    }
    if let Some(path) = args.get(3) {
        write_csv(&tr, std::fs::File::create(path)?)?;
        println!("trace written to {path}");
    }
    Ok(())
}
