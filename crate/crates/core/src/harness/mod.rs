//! Per-declaration test pipeline: build the input space, sample it, filter
//! by type invariants and preconditions, execute, and collect failures.

mod report;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::domains::{Builder, DomainParams, TupleDomain};
use crate::interp::{
    Budget, ClauseCheck, Fault, FaultKind, Heap, Interpreter, InvariantCache, Outcome, Value,
};
use crate::sampler::{SampleError, SamplePlan};
use crate::syntax::{print_type, FunctionDecl, Program};

pub use report::{header, render_csv, render_json, render_text, ReportOptions, SCHEMA};

/// Named parameter presets, smallest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Tiny,
    Small,
    Medium,
    Large,
    Huge,
}

impl Scope {
    pub const ALL: [Scope; 5] = [
        Scope::Tiny,
        Scope::Small,
        Scope::Medium,
        Scope::Large,
        Scope::Huge,
    ];

    pub fn params(self) -> DomainParams {
        DomainParams::uniform(self as usize)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scope::Tiny => "tiny",
            Scope::Small => "small",
            Scope::Medium => "medium",
            Scope::Large => "large",
            Scope::Huge => "huge",
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scope::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                format!("unknown scope `{s}` (expected tiny, small, medium, large or huge)")
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestConfig {
    pub params: DomainParams,
    pub rate: f64,
    pub seed: u64,
    /// Wall-clock budget for all inputs of one declaration.
    pub timeout: Duration,
    /// When non-empty, only these names are tested.
    pub functions: Vec<String>,
    pub skip: Vec<String>,
    /// Stop a declaration after this many failures; `None` collects all.
    pub max_failures: Option<usize>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            params: Scope::Medium.params(),
            rate: 1.0,
            seed: 0,
            timeout: Duration::from_secs(60),
            functions: Vec::new(),
            skip: vec!["main".to_string()],
            max_failures: Some(1),
            jobs: None,
        }
    }
}

impl TestConfig {
    pub fn with_scope(scope: Scope) -> Self {
        TestConfig {
            params: scope.params(),
            ..TestConfig::default()
        }
    }

    fn selects(&self, name: &str) -> bool {
        !self.skip.iter().any(|s| s == name)
            && (self.functions.is_empty() || self.functions.iter().any(|f| f == name))
    }
}

/// A failing input together with the fault it produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub fault: Fault,
    pub args: Vec<Value>,
    /// Initial heap, before the call.
    pub heap: Heap,
    /// Index of the input in the declaration's tuple domain.
    pub index: BigUint,
}

impl Failure {
    /// `name(a,b)`, followed by the initial heap when it is non-empty.
    pub fn counterexample(&self, name: &str) -> String {
        let args: Vec<String> = self.args.iter().map(ToString::to_string).collect();
        if self.heap.is_empty() {
            format!("{name}({})", args.join(","))
        } else {
            format!("{name}({}) with heap {}", args.join(","), self.heap)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionResult {
    pub name: String,
    /// `name(T1,T2)`, distinguishing overloads.
    pub signature: String,
    pub domain_size: BigUint,
    pub sampled: u64,
    pub meaningless: u64,
    pub executed: u64,
    pub inconclusive: u64,
    pub failures: Vec<Failure>,
    pub elapsed: Duration,
    pub timed_out: bool,
    /// Why nothing was tested, when that happens.
    pub note: Option<String>,
}

impl FunctionResult {
    fn new(decl: &FunctionDecl) -> Self {
        FunctionResult {
            name: decl.name.clone(),
            signature: signature(decl),
            domain_size: BigUint::default(),
            sampled: 0,
            meaningless: 0,
            executed: 0,
            inconclusive: 0,
            failures: Vec::new(),
            elapsed: Duration::ZERO,
            timed_out: false,
            note: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn signature(decl: &FunctionDecl) -> String {
    let params: Vec<String> = decl.params.iter().map(|p| print_type(&p.ty)).collect();
    format!("{}({})", decl.name, params.join(","))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub path: String,
    pub config: TestConfig,
    pub results: Vec<FunctionResult>,
}

impl TestReport {
    pub fn failing(&self) -> usize {
        self.results.iter().filter(|r| !r.passed()).count()
    }

    /// 0 when every declaration passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failing() == 0 {
            0
        } else {
            1
        }
    }
}

/// What happened to one generated input.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// Violated a declared type invariant or the precondition.
    Meaningless,
    Passed,
    /// A generated lambda was applied outside its domain.
    Inconclusive,
    Failed(Fault),
    TimedOut,
}

fn from_fault(f: Fault) -> Verdict {
    match f.kind {
        FaultKind::Timeout => Verdict::TimedOut,
        FaultKind::LambdaDomainExhausted => Verdict::Inconclusive,
        _ => Verdict::Failed(f),
    }
}

/// Runs one input through the pipeline: declared-type conformance, then
/// the precondition, then the call (which checks the postcondition).
pub fn run_input<'p>(
    program: &'p Program,
    decl: &'p FunctionDecl,
    args: &[Value],
    heap: &Heap,
    budget: Budget,
    cache: Option<&'p InvariantCache>,
) -> Verdict {
    let mut it = Interpreter::new(program).with_budget(budget);
    if let Some(c) = cache {
        it = it.with_cache(c);
    }
    let mut heap = heap.clone();
    for (p, v) in decl.params.iter().zip(args) {
        match it.conforms(v, &p.ty, &mut heap) {
            Ok(true) => {}
            Ok(false) => return Verdict::Meaningless,
            Err(f) => return from_fault(f),
        }
    }
    match it.check_requires(decl, args, &mut heap) {
        ClauseCheck::Satisfied => {}
        ClauseCheck::Unsatisfied(_) => return Verdict::Meaningless,
        ClauseCheck::Faulted(f) => return from_fault(f),
    }
    match it.call(decl, args.to_vec(), heap) {
        Outcome::Returned { .. } => Verdict::Passed,
        Outcome::Faulted(f) => from_fault(f),
    }
}

/// 64-bit FNV-1a.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed for one declaration, independent of scheduling order.
pub fn sub_seed(seed: u64, signature: &str) -> u64 {
    seed ^ fnv1a(signature)
}

pub fn run_function<'p>(
    decl: &'p FunctionDecl,
    program: &'p Program,
    config: &TestConfig,
    cache: &'p InvariantCache,
) -> Result<FunctionResult, SampleError> {
    let start = Instant::now();
    let deadline = start + config.timeout;
    let mut result = FunctionResult::new(decl);
    let tuple =
        Builder::new(program, config.params).and_then(|mut b| TupleDomain::build(decl, &mut b));
    let tuple = match tuple {
        Ok(t) => t,
        Err(e) => {
            result.note = Some(e.to_string());
            return Ok(result);
        }
    };
    result.domain_size = tuple.size().clone();
    if tuple.is_empty() {
        result.note = Some("no inputs generated".to_string());
        return Ok(result);
    }
    let plan = SamplePlan::new(
        tuple.size().clone(),
        config.rate,
        sub_seed(config.seed, &result.signature),
    )?;
    let budget = Budget {
        deadline: Some(deadline),
        ..Budget::default()
    };
    for index in plan.indices() {
        if Instant::now() >= deadline {
            result.timed_out = true;
            break;
        }
        let (args, heap) = tuple.at(&index);
        match run_input(program, decl, &args, &heap, budget, Some(cache)) {
            Verdict::Meaningless => result.meaningless += 1,
            Verdict::Passed => result.executed += 1,
            Verdict::Inconclusive => result.inconclusive += 1,
            Verdict::TimedOut => {
                result.timed_out = true;
                break;
            }
            Verdict::Failed(fault) => {
                result.executed += 1;
                result.failures.push(Failure {
                    fault,
                    args,
                    heap,
                    index,
                });
            }
        }
        result.sampled += 1;
        if config
            .max_failures
            .is_some_and(|m| result.failures.len() >= m)
        {
            break;
        }
    }
    result.elapsed = start.elapsed();
    Ok(result)
}

/// Tests every selected function and method, reporting in declaration order.
pub fn run_all(program: &Program, config: &TestConfig) -> Result<TestReport, SampleError> {
    let cache = InvariantCache::new();
    let decls: Vec<&FunctionDecl> = program
        .functions()
        .filter(|d| config.selects(&d.name))
        .collect();
    let run = || -> Result<Vec<FunctionResult>, SampleError> {
        decls
            .par_iter()
            .map(|d| run_function(d, program, config, &cache))
            .collect()
    };
    let results = match config.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(run)?,
        None => run()?,
    };
    Ok(TestReport {
        path: program.path().to_string(),
        config: config.clone(),
        results,
    })
}

#[cfg(test)]
mod tests;
