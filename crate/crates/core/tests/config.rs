use nls_rhp::config::{Command, Format, RunConfig};
use nls_rhp::continuation::{Method, SweepParam};
use nls_rhp::RhpError;

fn resolve(text: &str, cmd: Command) -> Result<nls_rhp::config::Run, RhpError> {
    RunConfig::from_toml(text)?.resolve(cmd)
}

#[test]
fn fixture_fills_parameters_and_seeds() {
    let run = resolve("fixture = \"post-break\"\n[sweep]\nlo = 1.0\nhi = 3.0\n", Command::Compare).unwrap();
    assert_eq!((run.params.x, run.params.t, run.params.mu, run.params.genus), (0.5, 0.45, 2.0, 2));
    assert_eq!(run.seeds.len(), 2);
    assert_eq!(run.method, Method::Both);
    assert_eq!(run.name, "compare");
    assert_eq!(run.formats, vec![Format::Csv, Format::Json]);
}

#[test]
fn explicit_entries_beat_the_fixture() {
    let text = r#"
        fixture = "post-break"
        [params]
        t = 0.5
        [sweep]
        param = "x"
        lo = 0.4
        hi = 0.6
        method = "resolve"
        [output]
        name = "run1"
        formats = ["json"]
    "#;
    let run = resolve(text, Command::Sweep).unwrap();
    assert_eq!(run.params.t, 0.5);
    assert_eq!(run.param, SweepParam::X);
    assert_eq!((run.lo, run.hi, run.method), (0.4, 0.6, Method::Resolve));
    assert_eq!(run.name, "run1");
}

#[test]
fn empty_or_reversed_ranges_are_rejected() {
    for (lo, hi) in [(2.0, 2.0), (3.0, 1.0)] {
        let text = format!("fixture = \"post-break\"\n[sweep]\nlo = {lo}\nhi = {hi}\n");
        assert!(matches!(resolve(&text, Command::Sweep), Err(RhpError::Config(_))));
    }
    let text = "fixture = \"post-break\"\n[sweep]\nlo = 1.0\nhi = 3.0\nstep = 0.0\n";
    assert!(matches!(resolve(text, Command::Sweep), Err(RhpError::Config(_))));
}

#[test]
fn seed_count_must_match_genus() {
    let text = "[params]\nx = 0.5\nt = 0.45\nmu = 2.0\ngenus = 2\n[seeds]\ngenus2 = [[1.0, 0.2], [-0.3, 0.9]]\n";
    let err = resolve(text, Command::Solve).unwrap_err();
    assert!(err.to_string().contains("genus 2 needs 3"), "{err}");
}

#[test]
fn seeds_on_the_real_axis_are_rejected() {
    let text = "[params]\nx = 0.5\nt = 0.1\nmu = 2.0\n[seeds]\ngenus0 = [[0.7, 0.0]]\n";
    assert!(matches!(resolve(text, Command::Solve), Err(RhpError::Config(_))));
}

#[test]
fn bad_parameters_are_usage_errors() {
    for text in [
        "[params]\nx = 0.5\nt = -0.1\nmu = 2.0\n[seeds]\ngenus0 = [[0.7, 0.8]]\n",
        "[params]\nx = 0.5\nt = 0.1\nmu = 0.0\n[seeds]\ngenus0 = [[0.7, 0.8]]\n",
        "[params]\nx = 0.5\nt = 0.1\nmu = 2.0\ngenus = 1\n",
        "[params]\nx = 0.5\nt = 0.1\n[seeds]\ngenus0 = [[0.7, 0.8]]\n",
        "fixture = \"mid-break\"",
        "fixture = \"post-break\"\n[tolerances]\nnewton = -1.0\n",
    ] {
        assert!(matches!(resolve(text, Command::Solve), Err(RhpError::Config(_))), "accepted:\n{text}");
    }
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(RunConfig::from_toml("[params]\nmu = 2.0\nnu = 1.0\n").is_err());
    assert!(RunConfig::from_toml("colour = \"red\"").is_err());
}

#[test]
fn toml_round_trip() {
    let text = "fixture = \"pre-break\"\n[sweep]\nparam = \"t\"\nlo = 0.0\nhi = 0.2\nstep = 0.05\n";
    let cfg = RunConfig::from_toml(text).unwrap();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(RunConfig::load(&dir.path().join("absent.toml")), Err(RhpError::Config(_))));
}
