//! Drives a run from a TOML configuration, the same way the `nls-rhp`
//! binary does.
//!
//!     cargo run --example config_run -- run.toml

use nls_rhp::config::{Command, RunConfig};
use nls_rhp::runner;

const DEFAULT: &str = r#"
fixture = "post-break"

[sweep]
param = "t"
lo = 0.40
hi = 0.50
step = 0.02

[output]
formats = ["csv"]
"#;

fn main() -> nls_rhp::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::load(path.as_ref())?,
        None => RunConfig::from_toml(DEFAULT)?,
    };
    let run = cfg.resolve(Command::Sweep)?;
    let out = runner::run(&run)?;
    runner::emit(&run, &out, &mut std::io::stdout(), &mut std::io::stderr())?;
    std::process::exit(out.code)
}
