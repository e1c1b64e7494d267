//! The golden invocations and a runner for the built binary.
#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_orthocusp"));
    c.args(args).current_dir(root()).env_remove("ORTHOCUSP_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

pub fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

/// (golden file stem, argv); stems starting with `error_` expect exit code 1.
pub const CASES: &[(&str, &[&str])] = &[
    ("invariants_hyperbolic", &["invariants", "--gram", "tests/data/hyperbolic.json", "--primes", "2,3"]),
    ("invariants_diag", &["invariants", "--gram", "tests/data/diag_2_2.json"]),
    ("map_point_tube_projective", &["map-point", "--point", "tests/data/ptube.json", "--from", "tube", "--to", "projective"]),
    ("map_point_bounded_tube", &["map-point", "--point", "tests/data/pbounded.json", "--to", "tube"]),
    ("map_point_float", &["--mode", "float", "--tol", "1e-9", "map-point", "--point", "tests/data/pbounded.json", "--to", "projective"]),
    ("cusp_rank1", &["cusp", "--gram", "tests/data/atilde2.json", "--flag", "rank1"]),
    ("cusp_rank2", &["cusp", "--gram", "tests/data/atilde2.json", "--flag", "rank2"]),
    ("fan_validate_p2", &["fan", "validate", "--fan", "tests/data/p2.json"]),
    ("fan_complete_p2", &["fan", "complete", "--fan", "tests/data/p2.json"]),
    ("fan_subdivide", &["fan", "subdivide", "--fan", "tests/data/nonreg.json"]),
    ("fan_regular", &["fan", "regular", "--fan", "tests/data/nonreg.json", "--resolve"]),
    ("fan_chart", &["fan", "chart", "--fan", "tests/data/nonreg.json"]),
    ("core_quadrant", &["core-decompose", "--gram", "tests/data/quadrant.json", "--variant", "central", "--height", "4", "--gens", "tests/data/swap.json"]),
    ("core_light_perfect", &["core-decompose", "--gram", "tests/data/light11.json", "--variant", "perfect", "--height", "3"]),
    ("chern_td", &["chern", "td", "--degree", "4"]),
    ("chern_qpoly", &["chern", "q-poly", "--dim", "2", "--rank", "1"]),
    ("hilbert_poly", &["hilbert-poly", "--dim", "3"]),
    ("local_density", &["local-density", "--gram", "tests/data/unit.json", "--prime", "5"]),
    ("hm_volume", &["hm-volume", "--gram", "tests/data/hm1.json", "--alpha-inf", "1"]),
    ("hm_volume_local", &["hm-volume", "--gram", "tests/data/hm1.json", "--densities", "tests/data/dens.json", "--spn", "1"]),
    ("dim_leading", &["dim-leading", "--gram", "tests/data/hm1.json", "--alpha-inf", "1", "--ell", "3"]),
    ("ramify_plane", &["ramify", "--gram", "tests/data/id2.json", "--bound", "1"]),
    ("ramify_a2", &["ramify", "--gram", "tests/data/a2.json", "--bound", "1"]),
    ("ramify_lorentz", &["ramify", "--gram", "tests/data/diag_2_1.json", "--bound", "1"]),
    ("error_density_p2", &["local-density", "--gram", "tests/data/unit.json", "--prime", "2"]),
];
