//! Command execution behind the `nls-rhp` binary.
//!
//! Every command produces an [`Outcome`]: summary lines, serialized
//! artifacts and an exit code. Artifacts go to `<dir>/<name>.<ext>` when an
//! output directory is configured, otherwise the primary artifact goes to
//! stdout and the summary to stderr.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::analysis::{check_signs, detect_genus, SignOptions};
use crate::config::{command_name, Command, Format, Run};
use crate::continuation::{sweep_range, to_json, write_csv, ContinuationTrace};
use crate::contour::build_contour;
use crate::error::{Result, RhpError};
use crate::fixtures;
use crate::modulation::newton_solve;
use crate::rhp::RhpSolution;
use crate::selftest::{self, Check};

pub const EXIT_OK: i32 = 0;
/// A check, sign condition or numerical solve failed.
pub const EXIT_FAILED: i32 = 1;
/// Invalid configuration or usage.
pub const EXIT_USAGE: i32 = 2;
/// Stopped at (or could not decide because of) a breaking point.
pub const EXIT_NEAR_BREAK: i32 = 3;

/// Deviation bound reported by `compare`.
pub const COMPARE_BOUND: f64 = 1e-3;

#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub summary: Vec<String>,
    pub artifacts: Vec<(Format, String)>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    command: &'static str,
    params: &'a crate::ProblemParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<&'a std::collections::BTreeMap<u32, crate::radical::BranchpointSet>>,
    result: T,
}

fn json<T: Serialize>(run: &Run, result: T) -> Result<String> {
    let env = Envelope { schema: 1, command: command_name(run.command), params: &run.params, seeds: Some(&run.seeds), result };
    serde_json::to_string_pretty(&env).map_err(|e| RhpError::Format(e.to_string()))
}

/// Exit code for a numerical error.
pub fn error_code(e: &RhpError) -> i32 {
    match e {
        RhpError::NearBreak(_) => EXIT_NEAR_BREAK,
        RhpError::Config(_) => EXIT_USAGE,
        _ => EXIT_FAILED,
    }
}

pub fn run(run: &Run) -> Result<Outcome> {
    match run.command {
        Command::Solve => solve(run),
        Command::Sweep | Command::Compare => sweep(run),
        Command::CheckSigns => signs(run),
        Command::DetectGenus => detect(run),
        Command::Selftest => self_test(run),
    }
}

fn solve(run: &Run) -> Result<Outcome> {
    let rep = newton_solve(run.seed()?, &run.params, &run.tolerances)?;
    let mut out = Outcome::default();
    for (j, a) in rep.alphas.upper().iter().enumerate() {
        out.summary.push(format!("alpha_{} = {:.15} {:+.15}i", 2 * j, a.re, a.im));
    }
    out.summary.push(format!("max |K| = {:.3e} after {} iterations", rep.max_residual(), rep.iterations));
    if run.formats.contains(&Format::Csv) {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| RhpError::Format(e.to_string());
        w.write_record(["j", "alpha_re", "alpha_im", "residual", "jacobian_re", "jacobian_im"]).map_err(io)?;
        for (j, a) in rep.alphas.upper().iter().enumerate() {
            let jac = rep.jacobian_diag[j];
            w.write_record([
                (2 * j).to_string(),
                format!("{:.16e}", a.re),
                format!("{:.16e}", a.im),
                format!("{:.16e}", rep.residuals[j]),
                format!("{:.16e}", jac.re),
                format!("{:.16e}", jac.im),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| RhpError::Format(e.to_string()))?;
        out.artifacts.push((Format::Csv, String::from_utf8(bytes).expect("CSV is ASCII")));
    }
    if run.formats.contains(&Format::Json) {
        out.artifacts.push((Format::Json, json(run, &rep)?));
    }
    Ok(out)
}

fn sweep(run: &Run) -> Result<Outcome> {
    let tr = sweep_range(
        run.param,
        run.lo,
        run.hi,
        run.step,
        run.method,
        run.polish_every,
        &run.params,
        run.seed()?,
        &run.tolerances,
    )?;
    let mut out = Outcome::default();
    let n = tr.primary().samples.len();
    out.summary.push(format!("{n} samples in {} over [{}, {}]", tr.param.name(), run.lo, run.hi));
    if let Some(dev) = tr.max_deviation() {
        let verdict = if dev < COMPARE_BOUND { "<" } else { ">=" };
        out.summary.push(format!("max|Δα| = {dev:.3e} {verdict} {COMPARE_BOUND:e}"));
        if dev >= COMPARE_BOUND {
            out.code = EXIT_FAILED;
        }
    }
    if let Some(f) = tr.frontier() {
        out.summary.push(format!(
            "frontier at {} = {}: {}{}",
            tr.param.name(),
            f.value,
            if f.near_break { "near break, " } else { "" },
            f.message
        ));
        out.code = if f.near_break { EXIT_NEAR_BREAK } else { EXIT_FAILED };
    }
    push_trace(&mut out, run, &tr)?;
    Ok(out)
}

fn push_trace(out: &mut Outcome, run: &Run, tr: &ContinuationTrace) -> Result<()> {
    if run.formats.contains(&Format::Csv) {
        let mut buf = Vec::new();
        write_csv(tr, &mut buf)?;
        out.artifacts.push((Format::Csv, String::from_utf8(buf).expect("CSV is ASCII")));
    }
    if run.formats.contains(&Format::Json) {
        out.artifacts.push((Format::Json, to_json(tr)?));
    }
    Ok(())
}

fn signs(run: &Run) -> Result<Outcome> {
    let rep = newton_solve(run.seed()?, &run.params, &run.tolerances)?;
    let sol = RhpSolution::new(build_contour(&rep.alphas, run.params.mu)?, run.params, run.tolerances.quad)?;
    let report = check_signs(&sol, &SignOptions::default())?;
    let mut out = Outcome::default();
    out.summary.push(format!(
        "sign conditions {}: main sides max {:.3e}, complementary min {:.3e}, tail min {:.3e}, min |h'/R| {:.3e}",
        if report.passed { "hold" } else { "FAIL" },
        report.main_side_max(),
        report.comp_min(),
        report.tail.min_im_h_path.min(report.tail.min_im_h_axis),
        report.hprime_over_r_min
    ));
    if !report.passed {
        out.code = EXIT_FAILED;
    }
    out.artifacts.push((Format::Json, json(run, &report)?));
    Ok(out)
}

fn detect(run: &Run) -> Result<Outcome> {
    let d = detect_genus(&run.params, &run.seeds, &run.tolerances, &SignOptions::default())?;
    let mut out = Outcome::default();
    for c in &d.candidates {
        let status = match (&c.signs, &c.error) {
            (Some(s), _) if s.passed => "solve converged, sign conditions hold".to_string(),
            (Some(_), _) => "solve converged, sign conditions fail".to_string(),
            (None, Some(e)) => format!("rejected: {e}"),
            (None, None) => "not evaluated".to_string(),
        };
        out.summary.push(format!("genus {}: {status}", c.genus));
    }
    match d.genus {
        Some(g) => out.summary.push(format!("genus = {g}")),
        None => {
            out.summary.push("genus indeterminate (no candidate passes; near a breaking curve?)".into());
            out.code = EXIT_NEAR_BREAK;
        }
    }
    out.artifacts.push((Format::Json, json(run, &d)?));
    Ok(out)
}

fn self_test(run: &Run) -> Result<Outcome> {
    let tols = selftest::oracle_tolerances();
    let quad = 1e-13;
    let mut checks: Vec<Check> = Vec::new();
    for fx in [fixtures::pre_break(), fixtures::post_break()] {
        let s = fx.solve(&tols)?;
        checks.extend(selftest::quadrature_oracles(fx.name, &s.alphas, fx.params.mu, quad)?);
        checks.extend(selftest::derivative_oracles(fx.name, &fx, &tols)?);
        let sol = RhpSolution::new(build_contour(&s.alphas, fx.params.mu)?, fx.params, quad)?;
        checks.extend(selftest::rhp_residuals(fx.name, &sol)?);
        checks.extend(selftest::jacobian_diagonality(fx.name, &fx, &tols)?);
        checks.extend(selftest::pinched_loop_derivatives(fx.name, &s.alphas, &fx.params, quad)?);
    }
    let mut out = Outcome::default();
    out.summary.extend(checks.iter().map(|c| c.to_string()));
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.summary.push(format!("{} of {} checks passed", checks.len() - failed, checks.len()));
    if failed > 0 {
        out.code = EXIT_FAILED;
    }
    out.artifacts.push((Format::Json, json(run, &checks)?));
    Ok(out)
}

/// Writes the outcome: artifacts to files (or the first one to stdout) and
/// the summary lines. Returns the written paths.
pub fn emit(run: &Run, out: &Outcome, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    match &run.out_dir {
        Some(dir) => {
            for (fmt, text) in &out.artifacts {
                let ext = match fmt {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let path = dir.join(format!("{}.{ext}", run.name));
                std::fs::write(&path, text)?;
                written.push(path);
            }
            for line in &out.summary {
                writeln!(stdout, "{line}")?;
            }
            for p in &written {
                writeln!(stdout, "wrote {}", p.display())?;
            }
        }
        None => {
            for line in &out.summary {
                writeln!(stderr, "{line}")?;
            }
            if let Some((_, text)) = out.artifacts.first() {
                stdout.write_all(text.as_bytes())?;
                if !text.ends_with('\n') {
                    writeln!(stdout)?;
                }
            }
        }
    }
    Ok(written)
}
