//! Command-line front end: `check`, `enumerate` and `mutate`.
//!
//! Every flag can also be set through an environment variable named
//! `SPECCHECK_<FLAG>` (for example `SPECCHECK_SEED`); flags win.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use thiserror::Error;

use crate::domains::{build, DomainError, DomainParams};
use crate::harness::{self, ReportOptions, Scope, TestConfig};
use crate::interp::Heap;
use crate::mutate::{self, MutateError, DEFAULT_MAX_MUTANTS};
use crate::sampler::SampleError;
use crate::syntax::{compile, parse_type, Program};

#[derive(Debug, Parser)]
#[command(
    name = "speccheck",
    version,
    about = "Specification-based testing for contract-annotated programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test every function and method against its specification.
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// List the values of a type's domain as `index<TAB>value`.
    Enumerate {
        #[arg(long = "type", env = "SPECCHECK_TYPE")]
        ty: String,
        /// Source file declaring any named types used.
        #[arg(long, env = "SPECCHECK_FILE")]
        file: Option<PathBuf>,
        /// Print at most this many values.
        #[arg(long, env = "SPECCHECK_LIMIT")]
        limit: Option<u64>,
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, env = "SPECCHECK_OUT")]
        out: Option<PathBuf>,
    },
    /// Measure how many single-site mutants the specifications catch.
    Mutate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, env = "SPECCHECK_MAX_MUTANTS", default_value_t = DEFAULT_MAX_MUTANTS)]
        max_mutants: usize,
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Scope preset plus per-parameter overrides.
#[derive(Debug, Args)]
pub struct DomainArgs {
    #[arg(long, env = "SPECCHECK_SCOPE", default_value = "medium")]
    pub scope: Scope,
    #[arg(long, env = "SPECCHECK_INT_MIN", allow_hyphen_values = true)]
    pub int_min: Option<i64>,
    #[arg(long, env = "SPECCHECK_INT_MAX", allow_hyphen_values = true)]
    pub int_max: Option<i64>,
    #[arg(long, env = "SPECCHECK_MAX_ARRAY")]
    pub max_array: Option<usize>,
    #[arg(long, env = "SPECCHECK_MAX_DEPTH")]
    pub max_depth: Option<usize>,
    #[arg(long, env = "SPECCHECK_ALIAS_WIDTH")]
    pub alias_width: Option<usize>,
    #[arg(long, env = "SPECCHECK_MAX_ROTATION")]
    pub max_rotation: Option<usize>,
}

impl DomainArgs {
    pub fn params(&self) -> DomainParams {
        let base = self.scope.params();
        DomainParams {
            int_min: self.int_min.unwrap_or(base.int_min),
            int_max: self.int_max.unwrap_or(base.int_max),
            max_array_len: self.max_array.unwrap_or(base.max_array_len),
            max_depth: self.max_depth.unwrap_or(base.max_depth),
            alias_width: self.alias_width.unwrap_or(base.alias_width),
            max_rotation: self.max_rotation.unwrap_or(base.max_rotation),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Fraction of each input space to sample, in (0, 1].
    #[arg(long, env = "SPECCHECK_RATE", default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, env = "SPECCHECK_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Seconds allowed per function (per mutant run for `mutate`).
    #[arg(long, env = "SPECCHECK_TIMEOUT", default_value_t = 60.0)]
    pub timeout: f64,
    /// Only test these names (repeatable).
    #[arg(long = "function", env = "SPECCHECK_FUNCTION", value_delimiter = ',')]
    pub functions: Vec<String>,
    /// Names not to test (repeatable).
    #[arg(
        long,
        env = "SPECCHECK_SKIP",
        value_delimiter = ',',
        default_value = "main"
    )]
    pub skip: Vec<String>,
    /// Counterexamples kept per function; 0 keeps all.
    #[arg(long, env = "SPECCHECK_MAX_FAILURES", default_value_t = 1)]
    pub max_failures: usize,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "SPECCHECK_JOBS")]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, env = "SPECCHECK_FORMAT", value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, env = "SPECCHECK_OUT")]
    pub out: Option<PathBuf>,
    /// Include wall-clock timings in the report.
    #[arg(long, env = "SPECCHECK_TIMINGS")]
    pub timings: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Already rendered with source context.
    #[error("{0}")]
    Syntax(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Mutate(#[from] MutateError),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

fn config(domain: &DomainArgs, run: &RunArgs) -> Result<TestConfig, CliError> {
    if !(run.timeout > 0.0 && run.timeout.is_finite()) {
        return Err(CliError::Invalid(format!(
            "--timeout must be positive, got {}",
            run.timeout
        )));
    }
    let params = domain.params();
    if params.int_min > params.int_max {
        return Err(DomainError::InvalidBounds(params.int_min, params.int_max).into());
    }
    if run.jobs == Some(0) {
        return Err(CliError::Invalid("--jobs must be at least 1".into()));
    }
    Ok(TestConfig {
        params,
        rate: run.rate,
        seed: run.seed,
        timeout: Duration::from_secs_f64(run.timeout),
        functions: run.functions.clone(),
        skip: run.skip.clone(),
        max_failures: (run.max_failures > 0).then_some(run.max_failures),
        jobs: run.jobs,
    })
}

fn load(path: &Path) -> Result<Program, CliError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: name.clone(),
        source,
    })?;
    compile(&text, &name).map_err(|d| CliError::Syntax(d.rendered))
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    let io = |path: &str| {
        let path = path.to_string();
        move |source| CliError::Io { path, source }
    };
    match out {
        Some(path) => std::fs::write(path, text).map_err(io(&path.display().to_string())),
        None => stdout.write_all(text.as_bytes()).map_err(io("<stdout>")),
    }
}

/// Joins per-file reports: JSON documents become one array, CSV keeps a
/// single header.
fn join(parts: Vec<String>, format: Format) -> String {
    if parts.len() < 2 {
        return parts.concat();
    }
    match format {
        Format::Json => {
            let values: Vec<serde_json::Value> = parts
                .iter()
                .map(|p| serde_json::from_str(p).expect("report is JSON"))
                .collect();
            let mut text = serde_json::to_string_pretty(&values).expect("reports serialise");
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut text = parts[0].clone();
            for p in &parts[1..] {
                text.push_str(p.split_once('\n').map_or("", |(_, rest)| rest));
            }
            text
        }
        Format::Text => parts.join("\n"),
    }
}

fn check(
    files: &[PathBuf],
    config: &TestConfig,
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let opts = ReportOptions {
        timings: output.timings,
    };
    let mut parts = Vec::new();
    let mut code = 0;
    for path in files {
        let program = load(path)?;
        let report = harness::run_all(&program, config)?;
        code = code.max(report.exit_code());
        parts.push(match output.format {
            Format::Text => harness::render_text(&report, &program, opts),
            Format::Json => harness::render_json(&report, &program, opts),
            Format::Csv => harness::render_csv(&report, opts),
        });
    }
    emit(&output.out, &join(parts, output.format), stdout)?;
    Ok(code)
}

fn run_mutate(
    files: &[PathBuf],
    config: &TestConfig,
    max_mutants: usize,
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    if max_mutants == 0 {
        return Err(CliError::Invalid("--max-mutants must be at least 1".into()));
    }
    let mut parts = Vec::new();
    for path in files {
        let program = load(path)?;
        let report = mutate::run_campaign(&program, config, max_mutants)?;
        parts.push(match output.format {
            Format::Text => mutate::render_text(&report, output.timings),
            Format::Json => mutate::render_json(&report, output.timings),
            Format::Csv => mutate::render_csv(&report, output.timings),
        });
    }
    emit(&output.out, &join(parts, output.format), stdout)?;
    Ok(0)
}

fn enumerate(
    ty: &str,
    file: Option<&Path>,
    limit: Option<u64>,
    params: DomainParams,
    out: &Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<i32, CliError> {
    let program = match file {
        Some(path) => load(path)?,
        None => compile("", "<none>").expect("empty program compiles"),
    };
    let ty = parse_type(ty).map_err(|e| CliError::Syntax(e.render("--type", ty)))?;
    let domain = build(&ty, params, &program)?;
    let mut text = String::new();
    let mut i = BigUint::default();
    while &i < domain.size() && limit.is_none_or(|l| i < BigUint::from(l)) {
        let mut heap = Heap::new();
        let v = domain.at(&i, &mut heap);
        if heap.is_empty() {
            text.push_str(&format!("{i}\t{v}\n"));
        } else {
            text.push_str(&format!("{i}\t{v} with heap {heap}\n"));
        }
        i += 1u8;
    }
    emit(out, &text, stdout)?;
    Ok(0)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Check {
            files,
            domain,
            run,
            output,
        } => check(&files, &config(&domain, &run)?, &output, stdout),
        Command::Mutate {
            files,
            max_mutants,
            domain,
            run,
            output,
        } => run_mutate(
            &files,
            &config(&domain, &run)?,
            max_mutants,
            &output,
            stdout,
        ),
        Command::Enumerate {
            ty,
            file,
            limit,
            domain,
            out,
        } => enumerate(&ty, file.as_deref(), limit, domain.params(), &out, stdout),
    }
}

/// Exit code 0 when everything passed, 1 when failures were found, 2 on
/// usage or tool errors.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().ansi().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invoke(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["speccheck"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn corpus(name: &str) -> String {
        format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    #[test]
    fn scope_and_overrides_compose() {
        let cli = Cli::try_parse_from([
            "speccheck",
            "check",
            "x.wys",
            "--scope",
            "small",
            "--int-min",
            "-5",
        ])
        .unwrap();
        let Command::Check { domain, .. } = cli.command else {
            panic!()
        };
        let p = domain.params();
        assert_eq!(p.int_min, -5);
        assert_eq!(p.int_max, 1);
        assert_eq!(p.max_array_len, 1);
    }

    #[test]
    fn defaults() {
        let cli = Cli::try_parse_from(["speccheck", "check", "x.wys"]).unwrap();
        let Command::Check {
            domain,
            run,
            output,
            ..
        } = cli.command
        else {
            panic!()
        };
        let c = config(&domain, &run).unwrap();
        assert_eq!(c, TestConfig::default());
        assert_eq!(output.format, Format::Text);
        let cli = Cli::try_parse_from(["speccheck", "mutate", "x.wys"]).unwrap();
        let Command::Mutate { max_mutants, .. } = cli.command else {
            panic!()
        };
        assert_eq!(max_mutants, 100);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            invoke(&["check", &corpus("decrement.wys"), "--scope", "medium"]).0,
            0
        );
        let (code, out, _) = invoke(&["check", &corpus("failtest_r_gt_1.wys"), "--scope", "small"]);
        assert_eq!(code, 1);
        assert!(out.contains("counterexample: f(-1)"), "{out}");
        assert_eq!(invoke(&["check"]).0, 2);
        assert_eq!(invoke(&["check", "x.wys", "--scope", "vast"]).0, 2);
        assert_eq!(invoke(&["check", "/nonexistent.wys"]).0, 2);
        assert_eq!(
            invoke(&["check", &corpus("decrement.wys"), "--rate", "0"]).0,
            2
        );
        assert_eq!(
            invoke(&[
                "check",
                &corpus("decrement.wys"),
                "--int-min",
                "3",
                "--int-max",
                "1"
            ])
            .0,
            2
        );
        assert_eq!(invoke(&["--help"]).0, 0);
    }

    #[test]
    fn syntax_errors_are_rendered() {
        let dir = std::env::temp_dir().join(format!("speccheck-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let bad = dir.join("bad.wys");
        std::fs::write(&bad, "function f(int x) -> (int r)\n    return x\n").unwrap();
        let (code, _, err) = invoke(&["check", bad.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("bad.wys:"), "{err}");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn enumerate_lines() {
        let (code, out, _) = invoke(&["enumerate", "--type", "bool[]", "--scope", "large"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 15);
        assert_eq!(out.lines().next(), Some("0\t[]"));
        let (_, out, _) = invoke(&[
            "enumerate",
            "--type",
            "nat",
            "--file",
            &corpus("count.wys"),
            "--scope",
            "small",
        ]);
        assert_eq!(out, "0\t-1\n1\t0\n2\t1\n");
        let (_, out, _) = invoke(&["enumerate", "--type", "int", "--limit", "2"]);
        assert_eq!(out, "0\t-2\n1\t-1\n");
        let (_, out, _) = invoke(&["enumerate", "--type", "&bool", "--scope", "tiny"]);
        assert_eq!(out.lines().count(), 2);
        assert!(out.contains("with heap"));
    }
}
