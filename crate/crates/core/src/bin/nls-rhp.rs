use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nls_rhp::config::{Command, Format, RunConfig};
use nls_rhp::continuation::{Method, SweepParam};
use nls_rhp::runner::{self, EXIT_USAGE};
use nls_rhp::RhpError;

#[derive(Parser)]
#[command(name = "nls-rhp", version, about = "Branchpoints of the semiclassical focusing NLS with sech data")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in fixture supplying parameters and seeds: pre-break or post-break.
    #[arg(long, global = true)]
    fixture: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Surface genus, 0 or 2.
    #[arg(long, global = true)]
    genus: Option<u32>,
    /// Upper branchpoint seed `re,im`; repeat once per branchpoint.
    #[arg(long = "seed", global = true, value_parser = parse_complex, allow_hyphen_values = true)]
    seeds: Vec<[f64; 2]>,
    #[arg(long, global = true)]
    tol_newton: Option<f64>,
    #[arg(long, global = true)]
    tol_quad: Option<f64>,
    /// Directory for artifacts; without it the main artifact goes to stdout.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// File stem of the artifacts (default: the command name).
    #[arg(long, global = true)]
    name: Option<String>,
    /// Artifact formats (repeatable): csv, json.
    #[arg(long = "format", global = true, value_parser = parse_format)]
    formats: Vec<Format>,
}

#[derive(Args)]
struct SweepArgs {
    /// Swept parameter: mu, x or t.
    #[arg(long, value_parser = parse_param)]
    param: Option<SweepParam>,
    #[arg(long, allow_negative_numbers = true)]
    lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hi: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Newton solve of the modulation equations.
    Solve,
    /// Continue the branchpoints over a parameter range.
    Sweep {
        #[command(flatten)]
        range: SweepArgs,
        /// ode, resolve or both.
        #[arg(long, value_parser = parse_method)]
        method: Option<Method>,
        /// Newton polish of the ODE path every k steps (0: never).
        #[arg(long)]
        polish_every: Option<usize>,
    },
    /// Sweep by both methods and report the largest deviation.
    Compare {
        #[command(flatten)]
        range: SweepArgs,
    },
    /// Solve, then check the sign conditions.
    CheckSigns,
    /// Try genus 0 then genus 2 and report the first admissible one.
    DetectGenus,
    /// Closed-form and finite-difference oracle suites on the built-in fixtures.
    Selftest,
}

fn parse_complex(s: &str) -> Result<[f64; 2], String> {
    let (re, im) = s.split_once(',').ok_or_else(|| format!("expected `re,im`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([num(re)?, num(im)?])
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format `{s}` (csv or json)")),
    }
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: RhpError| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: RhpError| e.to_string())
}

fn build(cli: Cli) -> Result<(Command, RunConfig), RhpError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.fixture = c.fixture.or(cfg.fixture);
    cfg.params.x = c.x.or(cfg.params.x);
    cfg.params.t = c.t.or(cfg.params.t);
    cfg.params.mu = c.mu.or(cfg.params.mu);
    cfg.params.genus = c.genus.or(cfg.params.genus);
    if !c.seeds.is_empty() {
        let genus = cfg.params.genus.unwrap_or(c.seeds.len() as u32 - 1);
        match genus {
            0 => cfg.seeds.genus0 = Some(c.seeds),
            2 => cfg.seeds.genus2 = Some(c.seeds),
            g => return Err(RhpError::Config(format!("{} seeds do not fit genus {g}", c.seeds.len()))),
        }
        cfg.params.genus.get_or_insert(genus);
    }
    if let Some(v) = c.tol_newton {
        cfg.tolerances.newton = v;
    }
    if let Some(v) = c.tol_quad {
        cfg.tolerances.quad = v;
    }
    cfg.output.dir = c.out_dir.or(cfg.output.dir);
    cfg.output.name = c.name.or(cfg.output.name);
    if !c.formats.is_empty() {
        cfg.output.formats = c.formats;
    }
    let mut range = |r: SweepArgs| {
        cfg.sweep.param = r.param.unwrap_or(cfg.sweep.param);
        cfg.sweep.lo = r.lo.or(cfg.sweep.lo);
        cfg.sweep.hi = r.hi.or(cfg.sweep.hi);
        cfg.sweep.step = r.step.unwrap_or(cfg.sweep.step);
    };
    let command = match cli.command {
        Cmd::Solve => Command::Solve,
        Cmd::Sweep { range: r, method, polish_every } => {
            range(r);
            cfg.sweep.method = method.or(cfg.sweep.method);
            cfg.sweep.polish_every = polish_every.unwrap_or(cfg.sweep.polish_every);
            Command::Sweep
        }
        Cmd::Compare { range: r } => {
            range(r);
            Command::Compare
        }
        Cmd::CheckSigns => Command::CheckSigns,
        Cmd::DetectGenus => Command::DetectGenus,
        Cmd::Selftest => Command::Selftest,
    };
    Ok((command, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = build(cli).and_then(|(cmd, cfg)| cfg.resolve(cmd));
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let code = match runner::run(&run) {
        Ok(out) => match runner::emit(&run, &out, &mut std::io::stdout(), &mut std::io::stderr()) {
            Ok(_) => out.code,
            Err(e) => {
                eprintln!("error: {e}");
                runner::EXIT_FAILED
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            runner::error_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
