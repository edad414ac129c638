use super::*;
use crate::interp::Outcome;
use crate::sampler::SamplePlan;
use crate::syntax::compile;
use proptest::prelude::*;

fn corpus(name: &str) -> Program {
    let path = format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap();
    compile(&text, name).unwrap_or_else(|d| panic!("{}", d.rendered))
}

fn source(text: &str) -> Program {
    compile(text, "t.wys").unwrap_or_else(|d| panic!("{}", d.rendered))
}

fn at(scope: Scope) -> TestConfig {
    TestConfig::with_scope(scope)
}

fn only<'a>(report: &'a TestReport, name: &str) -> &'a FunctionResult {
    report.results.iter().find(|r| r.name == name).unwrap()
}

#[test]
fn scope_presets() {
    assert_eq!(Scope::Tiny.params(), DomainParams::uniform(0));
    assert_eq!(Scope::Huge.params(), DomainParams::uniform(4));
    assert_eq!("medium".parse::<Scope>(), Ok(Scope::Medium));
    assert!("enormous".parse::<Scope>().is_err());
    assert_eq!(TestConfig::default().params, Scope::Medium.params());
    assert_eq!(TestConfig::default().timeout, Duration::from_secs(60));
}

#[test]
fn empty_program_gives_empty_report() {
    let report = run_all(&source(""), &TestConfig::default()).unwrap();
    assert!(report.results.is_empty());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn decrement_counts() {
    let report = run_all(&corpus("decrement.wys"), &at(Scope::Medium)).unwrap();
    let r = only(&report, "decrement");
    assert_eq!(r.domain_size, BigUint::from(5u8));
    assert_eq!(
        (r.sampled, r.meaningless, r.executed, r.inconclusive),
        (5, 3, 2, 0)
    );
    assert!(r.passed());
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn one_failing_one_passing() {
    let text = "function f(int x) -> (int r) ensures r > 1:\n    return x\n\n\
                function decrement(int x) -> (int y) requires x > 0 ensures y >= 0:\n    return x - 1\n";
    let report = run_all(&source(text), &at(Scope::Small)).unwrap();
    assert_eq!(report.results.len(), 2);
    assert_eq!(report.failing(), 1);
    assert!(!only(&report, "f").failures.is_empty());
    assert!(only(&report, "decrement").passed());
    assert_eq!(report.exit_code(), 1);
}

#[test]
fn failtest_flagged_at_every_scope() {
    for scope in Scope::ALL {
        let report = run_all(&corpus("failtest_r_gt_1.wys"), &at(scope)).unwrap();
        let r = only(&report, "f");
        assert_eq!(r.failures.len(), 1, "{scope}");
        assert_eq!(r.failures[0].fault.kind, FaultKind::PostconditionViolation);
    }
}

#[test]
fn max_failures_bounds_collection() {
    let mut config = at(Scope::Medium);
    config.max_failures = None;
    let report = run_all(&corpus("failtest_r_gt_1.wys"), &config).unwrap();
    // x in -2..2; only x = 2 passes
    assert_eq!(only(&report, "f").failures.len(), 4);
    config.max_failures = Some(2);
    let report = run_all(&corpus("failtest_r_gt_1.wys"), &config).unwrap();
    let r = only(&report, "f");
    assert_eq!(r.failures.len(), 2);
    assert_eq!(r.sampled, 2);
}

#[test]
fn undetectable_programs_pass() {
    let mut config = at(Scope::Medium);
    config.max_failures = None;
    for name in ["listing1.wys", "count.wys"] {
        let report = run_all(&corpus(name), &config).unwrap();
        assert_eq!(report.failing(), 0, "{name}");
    }
}

#[test]
fn heap_invariant_faults_during_filtering() {
    let mut config = at(Scope::Medium);
    config.max_failures = None;
    let report = run_all(&corpus("heap.wys"), &config).unwrap();
    let r = only(&report, "top");
    // negative lengths fault on the range first
    assert!(r.failures.iter().all(|f| matches!(
        f.fault.kind,
        FaultKind::IndexOutOfBounds | FaultKind::NegativeArrayRange
    )));
    let f = r
        .failures
        .iter()
        .find(|f| f.fault.kind == FaultKind::IndexOutOfBounds)
        .unwrap();
    assert_eq!(f.fault.trace.len(), 1);
    assert_eq!(f.fault.trace[0].name, "top");
    let h = f.args[0].clone();
    let len = h.field("len").unwrap().to_string().parse::<i64>().unwrap();
    let data = h.field("data").unwrap();
    let Value::Array(items) = data else { panic!() };
    assert!(len > items.len() as i64);
}

#[test]
fn rate_one_accounts_for_whole_domain() {
    let mut config = at(Scope::Medium);
    config.max_failures = None;
    for name in [
        "sum.wys",
        "slice.wys",
        "max.wys",
        "swap.wys",
        "lambda.wys",
        "records.wys",
    ] {
        let report = run_all(&corpus(name), &config).unwrap();
        for r in &report.results {
            let total = r.meaningless + r.executed + r.inconclusive;
            assert_eq!(r.sampled, total, "{}", r.signature);
            assert_eq!(BigUint::from(total), r.domain_size, "{}", r.signature);
        }
    }
}

#[test]
fn sampled_count_matches_plan() {
    let mut config = at(Scope::Medium);
    config.rate = 0.1;
    let program = corpus("sum.wys");
    let report = run_all(&program, &config).unwrap();
    let r = only(&report, "sum");
    let plan = SamplePlan::new(r.domain_size.clone(), 0.1, 0).unwrap();
    assert_eq!(BigUint::from(r.sampled), *plan.target());
}

#[test]
fn lambda_application_outside_domain_is_inconclusive() {
    let text = "function h(function(int)->(int) p) -> (int r):\n    return p(100)\n";
    let report = run_all(&source(text), &at(Scope::Small)).unwrap();
    let r = only(&report, "h");
    assert!(r.passed());
    assert_eq!(r.inconclusive, r.sampled);
    assert!(r.inconclusive > 0);
}

#[test]
fn unsupported_parameter_is_noted() {
    let text = "function h({&int c} p) -> (int r):\n    return 0\n";
    let report = run_all(&source(text), &at(Scope::Small)).unwrap();
    let r = only(&report, "h");
    assert!(r.note.is_some());
    assert_eq!(r.sampled, 0);
}

#[test]
fn timeout_is_reported_distinctly() {
    let text =
        "function spin(int x) -> (int r):\n    while true:\n        x = x + 1\n    return x\n";
    let mut config = at(Scope::Tiny);
    config.timeout = Duration::from_millis(50);
    let report = run_all(&source(text), &config).unwrap();
    let r = only(&report, "spin");
    assert!(r.timed_out);
    assert!(r.passed());
}

#[test]
fn filters_and_skips() {
    let program = corpus("max_array.wys");
    let mut config = at(Scope::Tiny);
    config.functions = vec!["max".into()];
    let report = run_all(&program, &config).unwrap();
    let sigs: Vec<&str> = report
        .results
        .iter()
        .map(|r| r.signature.as_str())
        .collect();
    assert_eq!(sigs, ["max(int,int)", "max(int[],int)"]);
    config.skip = vec!["max".into()];
    assert!(run_all(&program, &config).unwrap().results.is_empty());
}

#[test]
fn invalid_rate_is_an_error() {
    let mut config = at(Scope::Tiny);
    config.rate = 0.0;
    assert!(run_all(&corpus("decrement.wys"), &config).is_err());
}

#[test]
fn counterexamples_replay() {
    let mut config = at(Scope::Medium);
    config.max_failures = None;
    for name in [
        "failtest_r_gt_1.wys",
        "heap.wys",
        "vector_set.wys",
        "sort.wys",
    ] {
        let program = corpus(name);
        let report = run_all(&program, &config).unwrap();
        assert!(report.failing() > 0, "{name}");
        for r in &report.results {
            let decl = program
                .functions()
                .find(|d| signature(d) == r.signature)
                .unwrap();
            for f in &r.failures {
                let again = run_input(&program, decl, &f.args, &f.heap, Budget::default(), None);
                assert_eq!(again, Verdict::Failed(f.fault.clone()), "{name}");
            }
        }
    }
}

#[test]
fn postcondition_failures_replay_through_call() {
    let program = corpus("failtest_r_gt_1.wys");
    let report = run_all(&program, &at(Scope::Small)).unwrap();
    let f = &only(&report, "f").failures[0];
    let decl = program.functions().next().unwrap();
    match Interpreter::new(&program).call(decl, f.args.clone(), f.heap.clone()) {
        Outcome::Faulted(fault) => assert_eq!(fault, f.fault),
        other => panic!("{other:?}"),
    }
}

#[test]
fn parallelism_does_not_change_results() {
    let program = corpus("scc_state.wys");
    let mut a = at(Scope::Small);
    a.jobs = Some(1);
    let mut b = a.clone();
    b.jobs = Some(4);
    let opts = ReportOptions::default();
    let ra = render_json(&run_all(&program, &a).unwrap(), &program, opts);
    let rb = render_json(&run_all(&program, &b).unwrap(), &program, opts);
    assert_eq!(ra, rb);
}

#[test]
fn sub_seeds_differ_per_signature() {
    assert_ne!(sub_seed(0, "max(int,int)"), sub_seed(0, "max(int[],int)"));
    assert_eq!(sub_seed(5, "f(int)"), sub_seed(5, "f(int)"));
    // FNV-1a of the empty string is its offset basis
    assert_eq!(sub_seed(0, ""), 0xcbf2_9ce4_8422_2325);
    assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
}

#[test]
fn text_report_layout() {
    let program = corpus("failtest_r_gt_1.wys");
    let report = run_all(&program, &at(Scope::Tiny)).unwrap();
    let text = render_text(&report, &program, ReportOptions::default());
    let expected = "speccheck failtest_r_gt_1.wys\n\
        seed 0, rate 1, int 0..0, array length 0, depth 0, alias width 0, rotation 0\n\
        FAIL     f(int): domain 1, sampled 1, meaningless 0, executed 1, inconclusive 0\n    \
        counterexample: f(0)\n    \
        failtest_r_gt_1.wys:1: postcondition not satisfied\n    \
        function f(int x) -> (int r) ensures r > 1:\n    \
        \x20                                    ^^^^^\n    \
        Stack Trace:\n    \
        --> f(0)\n\
        1 tested, 1 failing\n";
    assert_eq!(text, expected);
}

#[test]
fn json_report_fields() {
    let program = corpus("failtest_r_gt_1.wys");
    let report = run_all(&program, &at(Scope::Tiny)).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&render_json(&report, &program, ReportOptions::default())).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["seed"], 0);
    assert_eq!(json["params"]["int_min"], 0);
    let f = &json["functions"][0];
    assert_eq!(f["domain_size"], "1");
    assert!(f.get("elapsed_ms").is_none());
    assert_eq!(f["failures"][0]["kind"], "PostconditionViolation");
    assert_eq!(f["failures"][0]["line"], 1);
    assert_eq!(f["failures"][0]["frames"][0], "f(0)");
    let timed = render_json(&report, &program, ReportOptions { timings: true });
    assert!(timed.contains("elapsed_ms"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sampled_inputs_are_a_subset_of_exhaustive(rate in 0.01f64..=1.0, seed in any::<u64>()) {
        let program = corpus("slice.wys");
        let decl = program.functions().next().unwrap();
        let mut b = Builder::new(&program, Scope::Small.params()).unwrap();
        let tuple = TupleDomain::build(decl, &mut b).unwrap();
        let plan = SamplePlan::new(tuple.size().clone(), rate, seed).unwrap();
        let mut full = SamplePlan::new(tuple.size().clone(), 1.0, seed).unwrap().indices();
        for i in plan.indices() {
            prop_assert!(full.any(|j| j == i));
        }
    }

    #[test]
    fn detection_is_monotone_in_scope(k in 0i64..3, lo in 0usize..3) {
        // fails exactly when x == k
        let text = format!("function f(int x) -> (int r) ensures r != {k}:\n    return x\n");
        let program = source(&text);
        let scopes = &Scope::ALL[lo..];
        let found: Vec<bool> = scopes
            .iter()
            .map(|&s| !run_all(&program, &at(s)).unwrap().results[0].passed())
            .collect();
        for w in found.windows(2) {
            prop_assert!(!w[0] || w[1]);
        }
    }
}

#[test]
fn csv_report_rows() {
    let program = corpus("max_array.wys");
    let report = run_all(&program, &at(Scope::Tiny)).unwrap();
    let csv = render_csv(&report, ReportOptions::default());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "signature,domain_size,sampled,meaningless,executed,inconclusive,failures,timed_out,first_fault,elapsed_ms"
    );
    assert_eq!(lines[1], "\"max(int,int)\",1,1,0,1,0,0,false,,");
    assert_eq!(lines.len(), 3);
}
