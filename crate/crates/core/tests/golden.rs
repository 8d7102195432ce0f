//! Checked-in reports for the fixture scenarios. Set `UPDATE_GOLDEN=1` to
//! rewrite them after an intentional change.

use std::path::{Path, PathBuf};

use uncertain_objectives::cli::execute;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

struct Case {
    name: &'static str,
    args: Vec<String>,
    code: i32,
}

fn case(name: &'static str, code: i32, args: &[&str]) -> Case {
    let args = args
        .iter()
        .map(|a| match a.strip_prefix('@') {
            Some(file) => fixture(file),
            None => a.to_string(),
        })
        .collect();
    Case { name, args, code }
}

fn cases() -> Vec<Case> {
    vec![
        case("analyze_three_cycle.json", 0, &["analyze", "@three_cycle.json"]),
        case("analyze_three_cycle.txt", 0, &["--format", "text", "analyze", "@three_cycle.json"]),
        case("analyze_population_cycle.json", 0, &["analyze", "@population_cycle.json"]),
        case("analyze_strict.json", 2, &["--strict", "analyze", "@three_cycle.json"]),
        case("bound_n3.json", 0, &["bound", "--n", "3"]),
        case("bound_n5.json", 0, &["bound", "--n", "5"]),
        case("bound_scenario.json", 0, &["bound", "@three_cycle.json"]),
        case("coherence_rotation.json", 0, &["coherence", "@rotation_matrix.json", "--exact"]),
        case(
            "coherence_reversed_span.json",
            0,
            &["coherence", "@reversed_span_matrix.json", "--exact"],
        ),
        case("decide_rotations.json", 0, &["decide", "@rotations_decision.json"]),
        case("decide_point_mass.json", 0, &["decide", "@point_mass_decision.json"]),
        case("decide_belief_quantilized.json", 0, &["decide", "@belief_decision.json"]),
        case(
            "decide_partial_abstain.json",
            0,
            &[
                "decide",
                "@three_cycle.json",
                "--rule",
                "partial",
                "--policy",
                "abstain",
                "--weaken",
                "C2,C3",
            ],
        ),
        case(
            "decide_partial_random.json",
            0,
            &[
                "decide",
                "@three_cycle.json",
                "--rule",
                "partial",
                "--policy",
                "random",
                "--seed",
                "11",
                "--weaken",
                "C2,C3",
            ],
        ),
        case(
            "audit_total_repugnant.json",
            0,
            &[
                "audit", "--swf", "total", "--axiom", "avoid_repugnant", "--levels", "1,100",
                "--max-count", "1001", "--very-high", "100", "--very-low", "1", "--base", "100:10",
            ],
        ),
        case(
            "audit_average_sadistic.json",
            0,
            &[
                "audit", "--swf", "average", "--axiom", "avoid_sadistic", "--levels=-50,1,100",
                "--max-count", "1000", "--very-high", "100", "--very-low", "1", "--base", "100:10",
            ],
        ),
        case(
            "audit_total_dominance.txt",
            0,
            &[
                "--format", "text", "audit", "--swf", "total", "--axiom", "dominance", "--levels",
                "1,2,3", "--max-count", "3", "--max-groups", "2",
            ],
        ),
        case(
            "audit_critical_all.json",
            0,
            &[
                "audit", "--swf", "critical", "--critical-level", "2", "--levels=-1,1,3",
                "--max-count", "3", "--very-high", "3", "--very-low", "1",
            ],
        ),
    ]
}

fn run(args: &[String]) -> (i32, String) {
    let mut full = vec!["uncertain-objectives".to_string()];
    full.extend(args.iter().cloned());
    let out = execute(full);
    assert!(out.stderr.is_empty(), "unexpected stderr: {}", out.stderr);
    (out.code, out.stdout)
}

fn compare(path: &Path, actual: &str) {
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(path, actual).expect("write golden");
        return;
    }
    let expected = std::fs::read_to_string(path)
        .unwrap_or_else(|_| panic!("missing golden {}; run with UPDATE_GOLDEN=1", path.display()));
    assert_eq!(expected, actual, "report differs from {}", path.display());
}

#[test]
fn reports_match_golden_files() {
    for c in cases() {
        let (code, first) = run(&c.args);
        let (_, second) = run(&c.args);
        assert_eq!(code, c.code, "{}: exit code", c.name);
        assert_eq!(first, second, "{}: output changed between runs", c.name);
        compare(&root().join("golden").join(c.name), &first);
    }
}

#[test]
fn every_fixture_scenario_round_trips() {
    use uncertain_objectives::cli::{parse_scenario, serialize_scenario};
    for name in [
        "three_cycle.json",
        "population_cycle.json",
        "rotations_decision.json",
        "point_mass_decision.json",
        "belief_decision.json",
    ] {
        let bytes = std::fs::read(fixture(name)).unwrap();
        let parsed = parse_scenario(&bytes).unwrap();
        let again = parse_scenario(serialize_scenario(&parsed).as_bytes()).unwrap();
        assert_eq!(parsed, again, "{name}");
    }
}

#[test]
fn integrity_errors_exit_with_one() {
    let out = execute(["uncertain-objectives".to_string(), "analyze".into(), fixture("dangling.json")]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.contains("w9"), "{}", out.stderr);
}

#[test]
fn missing_files_exit_with_one() {
    let out = execute(["uncertain-objectives", "analyze", "/nonexistent/scenario.json"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.starts_with("error:"));
}
