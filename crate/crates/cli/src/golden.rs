//! Documented example invocations with their expected output, compiled in
//! from `tests/golden`. Each case is a `<name>.cmd` file holding the argument
//! list and exit status, and a `<name>.out` file holding the exact stdout.

use serde::Deserialize;
use serde_json::json;

use weylstar_verify::CriterionResult;

use crate::run;

pub struct Case {
    pub name: &'static str,
    pub cmd: &'static str,
    pub expected: &'static str,
}

#[derive(Debug, Deserialize)]
pub struct Command {
    pub args: Vec<String>,
    pub exit: i32,
}

impl Case {
    pub fn command(&self) -> Command {
        serde_json::from_str(self.cmd).unwrap_or_else(|e| panic!("golden {}: bad .cmd file: {e}", self.name))
    }
}

macro_rules! case {
    ($name:literal) => {
        Case {
            name: $name,
            cmd: include_str!(concat!("../tests/golden/", $name, ".cmd")),
            expected: include_str!(concat!("../tests/golden/", $name, ".out")),
        }
    };
}

pub const CASES: &[Case] = &[
    case!("starprod_uv_weyl"),
    case!("starprod_square_weyl"),
    case!("starprod_commutator"),
    case!("starprod_uv_standard_m2"),
    case!("starprod_gaussian"),
    case!("starexp_t0"),
    case!("starexp_singular"),
    case!("starexp_standard"),
    case!("starexp_complex_t"),
    case!("intertwine_poly"),
    case!("intertwine_expression"),
    case!("intertwine_gauss"),
    case!("intertwine_leaves_class"),
    case!("polar_m1"),
    case!("polar_m2"),
    case!("polar_off_sphere"),
    case!("reflect_m2"),
    case!("double_cover_m2"),
    case!("continue_path_flip"),
    case!("continue_path_constant"),
    case!("scan_singular_uv"),
    case!("parse_error"),
    case!("index_out_of_range"),
    case!("non_quadratic_exponent"),
    case!("unknown_ordering"),
];

/// Mismatches of one case, empty when it reproduces its golden.
pub fn check(case: &Case) -> Vec<String> {
    let cmd = case.command();
    let first = run(cmd.args.clone());
    let second = run(cmd.args);
    let mut problems = Vec::new();
    if first.code != cmd.exit {
        problems.push(format!("{}: exit {} instead of {}", case.name, first.code, cmd.exit));
    }
    if first.stdout != case.expected {
        problems.push(format!("{}: stdout differs from the golden", case.name));
    }
    if first != second {
        problems.push(format!("{}: two runs differ", case.name));
    }
    problems
}

/// 12. Every golden reproduces byte for byte with its exit status.
pub fn criterion() -> CriterionResult {
    let mut res = CriterionResult::new(12, "CLI goldens");
    let mut failed = Vec::new();
    for case in CASES {
        let problems = check(case);
        if !problems.is_empty() {
            failed.push(case.name);
        }
        for p in problems {
            res.fail(p);
        }
    }
    res.metrics.insert("cases".into(), CASES.len() as f64);
    res.metrics.insert("mismatches".into(), failed.len() as f64);
    if !failed.is_empty() {
        res.extra = json!({ "failed": failed });
    }
    res.finish(format!("{} invocations byte-identical across runs, exit statuses as documented", CASES.len()))
}
