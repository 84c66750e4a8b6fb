use std::fs;
use std::path::Path;

use shs_core::cli_io::{parse_config, parse_config_str, run_experiment, Experiment, Outcome};
use shs_core::Error;

const EPS: &str = r#"
experiment = "simulate-eps"
[grid]
cells = 100
length = 1.0
[kinetics]
epsilon = 0.1
[initial]
profile = "step"
x0 = 0.3
width = 0.1
left = 0.4
right = -0.5
[v0]
profile = "constant"
value = 1.0
[numerics]
dt = 1e-3
t_final = 0.05
snapshot_every = 0.01
"#;

fn problems(text: &str) -> Vec<String> {
    match parse_config_str(text, Path::new(".")) {
        Err(Error::Config(p)) => p,
        Err(other) => panic!("unexpected error kind: {other}"),
        Ok(_) => Vec::new(),
    }
}

fn with_section(base: &str, section: &str) -> String {
    format!("{base}\n{section}\n")
}

/// Each mutation breaks exactly one precondition of the owning module and
/// must be reported at parse time with the quoted fragment.
#[test]
fn every_reachable_precondition_is_checked() {
    let pulsating = "[pulsating]\nc = 1.0\nm = 16.0\nnx = 8\nns = 2000\n";
    let dispersion = "[dispersion]\nc = [1.0]\n";
    let convergence = "[convergence]\nepsilons = [0.1, 0.05]\ndt_eps = 1e-4\ndt_limit = 1e-4\n";
    let traveling = "[traveling]\nc0 = 1.0\nm = 1.0\n";
    let cases: Vec<(String, &str)> = vec![
        (EPS.replace("epsilon = 0.1", "epsilon = -1"), "epsilon must be positive"),
        (EPS.replace("epsilon = 0.1", "epsilon = 0.1\nscaling = \"threshold\"\nsigma = 1.5"), "sigma must lie in [0,1)"),
        (EPS.replace("epsilon = 0.1", "epsilon = 0.1\ntheta_bar = 1.5"), "theta_bar must lie in (0,1)"),
        (
            EPS.replace("epsilon = 0.1", "epsilon = 0.1\nscaling = \"threshold\"\nsigma = 0.9\nkappa = 0.0"),
            "kappa(eps) > 0",
        ),
        (EPS.replace("epsilon = 0.1", "epsilon = 0.1\nscaling = \"arrhenius\""), "kinetics.scaling"),
        (EPS.replace("cells = 100", "cells = 0"), "grid.cells"),
        (EPS.replace("cells = 100", "cells = [10, 10, 10]"), "grid.cells"),
        (EPS.replace("cells = 100", "cells = [100000, 100000]"), "cells in total"),
        (with_section(EPS, &pulsating.replace("nx = 8", "nx = 100000")), "nx * ns"),
        (with_section(EPS, &format!("{traveling}samples = 1")), "samples"),
        (EPS.replace("length = 1.0", "length = -1.0"), "spacing"),
        (EPS.replace("length = 1.0", "length = [1.0, 2.0]"), "expected 1 values"),
        (EPS.replace("length = 1.0", "length = 1.0\nboundary = \"dirichlet\""), "grid.boundary"),
        (EPS.replace("width = 0.1", "width = 0.0"), "initial.width must be positive"),
        (EPS.replace("left = 0.4", "left = -1.5"), "u0 >= u_min"),
        (EPS.replace("value = 1.0", "value = -1.0"), "0 <= v0"),
        (EPS.replace("value = 1.0", "value = 1.0\nmax = 0.5"), "v0 <= C"),
        (EPS.replace("dt = 1e-3", "dt = 0.0"), "numerics.dt must be positive"),
        (EPS.replace("t_final = 0.05", "t_final = -1.0"), "t_final must be non-negative"),
        (EPS.replace("snapshot_every = 0.01", "snapshot_every = 0.0"), "snapshot_every must be positive"),
        (EPS.replace("dt = 1e-3", "dt = 1e-3\nscheme = \"leapfrog\""), "numerics.scheme"),
        (EPS.replace("dt = 1e-3", "dt = 1e-3\nignition = \"late\""), "numerics.ignition"),
        (
            EPS.replace("profile = \"step\"", "profile = \"table\"\nx = [0.0, 0.0]\nu = [0.1, 0.2]")
                .replace("x0 = 0.3\nwidth = 0.1\nleft = 0.4\nright = -0.5\n", ""),
            "strictly increasing",
        ),
        (
            EPS.replace("x0 = 0.3\nwidth = 0.1\nleft = 0.4\nright = -0.5", "x0 = 0.3\nc = -1.0")
                .replace("\"step\"", "\"planar-wave\""),
            "initial.c must be positive",
        ),
        (with_section(EPS, "[traveling]\nc0 = -1.0\nm = 1.0"), "traveling.c0 must be positive"),
        (with_section(EPS, "[traveling]\nc0 = 1.0\nm = 0.0"), "traveling.m must be positive"),
        (with_section(EPS, &pulsating.replace("c = 1.0", "c = 0.0")), "c must be positive"),
        (with_section(EPS, &pulsating.replace("m = 16.0", "m = -2.0")), "M must be positive"),
        (with_section(EPS, &pulsating.replace("ns = 2000", "ns = 4")), "at least 16 rows"),
        (with_section(EPS, &pulsating.replace("m = 16.0", "m = 1000.0")), "too short"),
        (with_section(EPS, &format!("{pulsating}front_fraction = 1.5")), "front fraction"),
        (with_section(EPS, &format!("{pulsating}descent_width = 0.0")), "descent width"),
        (with_section(EPS, &format!("{pulsating}tolerance = 0.0")), "tolerance must be positive"),
        (with_section(EPS, &format!("{pulsating}e = [0.0, 1.0]")), "pulsating.e"),
        (
            with_section(&EPS.replace("value = 1.0", "value = 0.0"), pulsating),
            "v0 samples must be positive",
        ),
        (with_section(EPS, &dispersion.replace("[1.0]", "[0.0]")), "wave speed must be positive"),
        (with_section(EPS, &format!("{dispersion}re = [-1.0, 8.0]")), "real range"),
        (with_section(EPS, &format!("{dispersion}im = [8.0, -8.0]")), "imaginary range"),
        (with_section(EPS, &format!("{dispersion}density = 8")), "density must be at least 32"),
        (with_section(EPS, &format!("{dispersion}ode_length = 1.0")), "ode_length"),
        (with_section(EPS, &format!("{dispersion}ode_lambda = 0.0")), "ode_lambda"),
        (with_section(EPS, &convergence.replace("[0.1, 0.05]", "[0.05, 0.1]")), "strictly decreasing"),
        (with_section(EPS, &convergence.replace("[0.1, 0.05]", "[0.1, -0.05]")), "epsilon must be positive"),
        (with_section(EPS, &convergence.replace("dt_eps = 1e-4", "dt_eps = 0.0")), "time steps must be positive"),
        (
            with_section(
                &EPS.replace("\"simulate-eps\"", "\"eps-convergence\"").replace("cells = 100", "cells = [10, 10]").replace("length = 1.0", "length = [1.0, 1.0]"),
                convergence,
            ),
            "1D grid",
        ),
        (EPS.replace("\"simulate-eps\"", "\"traveling-wave\""), "missing [traveling] section"),
        (EPS.replace("\"simulate-eps\"", "\"pulsating-wave\""), "missing [pulsating] section"),
        (EPS.replace("\"simulate-eps\"", "\"dispersion\""), "missing [dispersion] section"),
        (EPS.replace("\"simulate-eps\"", "\"sweep\""), "missing [sweep] section"),
        (
            with_section(
                &EPS.replace("\"simulate-eps\"", "\"sweep\""),
                "[sweep]\nexperiment = \"sweep\"\nparameter = \"kinetics.epsilon\"\nvalues = []",
            ),
            "cannot nest",
        ),
        (
            with_section(
                &EPS.replace("\"simulate-eps\"", "\"sweep\""),
                "[sweep]\nexperiment = \"simulate-eps\"\nparameter = \"epsilon\"\nvalues = []",
            ),
            "sweep.parameter",
        ),
        (EPS.replace("\"simulate-eps\"", "\"simulate-everything\""), "unknown experiment"),
        (EPS.replace("epsilon = 0.1", "epsilon = 0.1\nepsilom = 0.2"), "kinetics.epsilom: unknown key"),
        (with_section(EPS, traveling).replace("[traveling]", "[travelling]"), "unknown top-level"),
        (EPS.replace("dt = 1e-3", "dt = \"small\""), "numerics.dt: expected a number"),
        (EPS.replace("epsilon = 0.1\n", ""), "kinetics.epsilon: missing required key"),
    ];
    let mut missed = Vec::new();
    for (text, fragment) in &cases {
        let p = problems(text);
        if !p.iter().any(|e| e.contains(fragment)) {
            missed.push(format!("`{fragment}` not in {p:?}"));
        }
    }
    assert!(missed.is_empty(), "{}", missed.join("\n"));
    assert!(problems(EPS).is_empty());
}

#[test]
fn snapshot_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(EPS, Path::new(".")).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_experiment(&cfg, Some(&a)).unwrap();
    run_experiment(&cfg, Some(&b)).unwrap();
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 1 + 6 + 1, "{names:?}");
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
    let snap = shs_core::cli_io::read_snapshot_file(&a.join("snapshot_00005.csv")).unwrap();
    assert_eq!(snap.columns, ["t", "x", "u", "v"]);
    assert_eq!(snap.rows.len(), 100);
    let header = fs::read_to_string(a.join("header.txt")).unwrap();
    assert!(header.contains(&cfg.hash));
}

#[test]
fn limit_run_writes_chi() {
    let text = EPS.replace("\"simulate-eps\"", "\"simulate-limit\"");
    let cfg = parse_config_str(&text, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let rows = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert_eq!(Outcome::of(&rows), Outcome::Pass);
    let snap = shs_core::cli_io::read_snapshot_file(&dir.path().join("snapshot_00005.csv")).unwrap();
    assert_eq!(snap.columns, ["t", "x", "u", "m", "chi"]);
    assert!(snap.column("chi").unwrap().iter().all(|&c| c == 0.0 || c == 1.0));
}

#[test]
fn convergence_sweep_reports_a_trend() {
    let text = r#"
experiment = "sweep"
[grid]
cells = 200
length = 4.0
[kinetics]
epsilon = 0.1
[initial]
profile = "step"
x0 = 0.5
width = 0.5
left = 0.5
right = -0.5
[numerics]
t_final = 0.5
[convergence]
epsilons = [0.1]
dt_eps = 1e-4
dt_limit = 1e-4
[sweep]
experiment = "eps-convergence"
parameter = "convergence.epsilons"
values = [[0.1], [0.05], [0.025]]
decreasing = "l1_error"
"#;
    let cfg = parse_config_str(text, Path::new(".")).unwrap();
    let rows = run_experiment(&cfg, None).unwrap();
    assert_eq!(rows.len(), 4);
    let errors: Vec<f64> = rows[..3].iter().map(|r| r.get("l1_error").unwrap()).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert_eq!(rows[3].id, "trend");
    assert_eq!(rows[3].verdicts, vec![("l1_error_strictly_decreasing".to_string(), true)]);
    assert_eq!(Outcome::of(&rows), Outcome::Pass);
}

#[test]
fn table_profiles_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("v0.csv"), "x,v\n0.0,1.0\n0.5,1.5\n1.0,1.0\n").unwrap();
    let text = EPS.replace("profile = \"constant\"\nvalue = 1.0", "profile = \"table\"\nfile = \"v0.csv\"");
    let path = dir.path().join("run.toml");
    fs::write(&path, text).unwrap();
    let cfg = parse_config(&path).unwrap();
    assert_eq!(cfg.experiment, Experiment::SimulateEps);
    assert_eq!(cfg.v0_max, 1.5);
    let (_, data) = cfg.initial_data().unwrap();
    assert!(data.v0.iter().all(|&v| (1.0..=1.5).contains(&v)));

    fs::write(dir.path().join("v0.csv"), "x,v\n0.0,1.0\n0.5\n").unwrap();
    assert!(parse_config(&path).is_err());
}

#[test]
fn missing_file_names_the_path() {
    let err = parse_config(Path::new("/nonexistent/run.toml")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/run.toml"));
}

#[test]
fn fuzz_seeds_are_accepted() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let seeds = |target: &str| {
        let mut files: Vec<_> = fs::read_dir(corpus.join(target)).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        assert!(!files.is_empty());
        files.into_iter().map(|p| (p.display().to_string(), fs::read_to_string(&p).unwrap()))
    };
    for (name, text) in seeds("config") {
        parse_config_str(&text, Path::new(".")).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("snapshot_csv") {
        shs_core::cli_io::read_snapshot_csv(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, text) in seeds("v0_table") {
        shs_core::cli_io::parse_sample_table(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

    #[test]
    fn parsers_reject_garbage_without_panicking(text in "\\PC{0,200}", cut in 0usize..400, junk in "[\\[\\]=\",.a-z0-9#\n -]{0,40}") {
        let _ = shs_core::cli_io::read_snapshot_csv(&text);
        let _ = shs_core::cli_io::parse_sample_table(&text);
        let _ = parse_config_str(&text, Path::new("."));
        let mut spliced = EPS.to_string();
        let at = spliced.char_indices().map(|(i, _)| i).nth(cut % EPS.len()).unwrap_or(0);
        spliced.insert_str(at, &junk);
        let _ = parse_config_str(&spliced, Path::new("."));
    }
}
