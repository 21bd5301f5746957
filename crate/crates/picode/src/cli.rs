//! Command-line front end.
//!
//! Every command is a pure function of its flags and input files: randomness
//! flows only from --seed and outputs are plain text (JSONL, DOT, CSV), so
//! identical invocations produce byte-identical files.
//!
//! Exit codes: 0 success, 1 input/IO error, 2 usage (clap), 3 coding
//! hypothesis not met, 4 stage cap exhausted, 5 construction terminated,
//! 6 check failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bits::BitString;
use crate::checks::CheckReport;
use crate::class::{generate_class, EnumeratedClass};
use crate::codec::{self, CodecError};
use crate::dyadic::Dyadic;
use crate::kucera;
use crate::labelling::{LabelledTreeState, RunOutcome};
use crate::schedule::{validate_schedule, Schedule, DEFAULT_VALIDATION_HORIZON};
use crate::trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_CAP_EXHAUSTED: i32 = 4;
pub const EXIT_TERMINATED: i32 = 5;
pub const EXIT_CHECK_FAILED: i32 = 6;

#[derive(Parser)]
#[command(
    name = "picode",
    version,
    about = "Coding laboratory for effectively closed classes: run the labelling construction, encode/decode prefixes, check invariants, and benchmark against the bit-by-bit baseline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the labelling construction and export its trace (and final DOT).
    Run(RunArgs),
    /// Encode a bit string into a member prefix of the class.
    Encode(CodecArgs),
    /// Decode a code prefix back to its source bits.
    Decode(CodecArgs),
    /// Replay a trace file and check every invariant at every stage.
    Check(CheckArgs),
    /// Compare schedule oracle use against the bit-by-bit baseline (CSV).
    Bench(BenchArgs),
    /// Generate a seed-deterministic excluded-string class file.
    GenClass(GenClassArgs),
}

#[derive(Args)]
struct ScheduleOpt {
    /// Schedule spec: geometric:c, log:a,b or file:<path>.
    #[arg(long)]
    schedule: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    schedule: ScheduleOpt,
    /// Class file (`stage<TAB>bits` lines); omitted means the empty class.
    #[arg(long)]
    class: Option<PathBuf>,
    /// Stage cap for the run.
    #[arg(long, default_value_t = 100_000)]
    cap: u64,
    /// Run until the labelled depth (dvls) reaches this value.
    #[arg(long, default_value_t = 10)]
    n_max: u64,
    /// Trace output path (stdout when omitted).
    #[arg(long)]
    out_trace: Option<PathBuf>,
    /// DOT export of the final labelled tree.
    #[arg(long)]
    out_dot: Option<PathBuf>,
}

#[derive(Args)]
struct CodecArgs {
    #[command(flatten)]
    schedule: ScheduleOpt,
    #[arg(long)]
    class: Option<PathBuf>,
    /// Stage cap; defaults to 10·(n + |Q|·2^max_len).
    #[arg(long)]
    cap: Option<u64>,
    /// The bits to encode (source prefix) or decode (code prefix).
    bits: String,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    schedule: ScheduleOpt,
    #[arg(long)]
    class: Option<PathBuf>,
    /// Trace file produced by `run`.
    #[arg(long)]
    trace: PathBuf,
    /// Report output path (stdout when omitted), one JSON report per stage.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    schedule: ScheduleOpt,
    #[arg(long)]
    class: Option<PathBuf>,
    /// Largest source length tabulated.
    #[arg(long, default_value_t = 8)]
    n_max: u64,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct GenClassArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strict measure cap as a dyadic fraction num/den, den a power of two.
    #[arg(long, default_value = "1/4")]
    measure_cap: String,
    /// Maximum excluded-string length.
    #[arg(long, default_value_t = 10)]
    depth: u32,
    /// Entry stages are drawn from [1, stages].
    #[arg(long, default_value_t = 20)]
    stages: u64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses argv and dispatches; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Check(args) => cmd_check(args),
        Command::Bench(args) => cmd_bench(args),
        Command::GenClass(args) => cmd_gen_class(args),
    }
}

fn load_schedule(spec: &str) -> anyhow::Result<Schedule> {
    Ok(Schedule::parse(spec)?)
}

fn load_class(path: &Option<PathBuf>) -> anyhow::Result<EnumeratedClass> {
    match path {
        Some(p) => Ok(EnumeratedClass::load(p)?),
        None => Ok(EnumeratedClass::empty()),
    }
}

fn write_out(path: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Checks the coding hypothesis up front, printing both certified sums on
/// refusal.
fn verify_hypothesis(schedule: &Schedule, class: &EnumeratedClass) -> Result<Dyadic, i32> {
    let budget = Dyadic::one()
        .checked_sub(class.full_measure())
        .expect("class measure is below 1");
    match validate_schedule(schedule, &budget, DEFAULT_VALIDATION_HORIZON) {
        Ok(total) => Ok(total),
        Err(reject) => {
            eprintln!("hypothesis not met: {reject}");
            eprintln!("  certified schedule sum must be strictly below 1 - mu(Q)");
            eprintln!("  mu(Q) = {}, budget = {budget}", class.full_measure());
            Err(EXIT_HYPOTHESIS)
        }
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<i32> {
    let schedule = load_schedule(&args.schedule.schedule)?;
    let class = load_class(&args.class)?;
    let total = match verify_hypothesis(&schedule, &class) {
        Ok(total) => total,
        Err(code) => return Ok(code),
    };
    eprintln!("hypothesis verified: certified sum {total} < 1 - mu(Q)");
    let mut st = LabelledTreeState::init(schedule, &class, DEFAULT_VALIDATION_HORIZON)?;
    let target = args.n_max;
    let outcome = st.run_until(&class, |s| s.code_depth() >= target, args.cap)?;
    write_out(&args.out_trace, &trace::to_jsonl(st.trace()))?;
    if let Some(dot) = &args.out_dot {
        fs::write(dot, trace::export_dot(&st))?;
    }
    Ok(match outcome {
        RunOutcome::Satisfied => EXIT_OK,
        RunOutcome::CapExhausted => {
            eprintln!("stage cap {} exhausted before dvls reached {target}", args.cap);
            EXIT_CAP_EXHAUSTED
        }
        RunOutcome::Terminated => {
            eprintln!("construction terminated at stage {}", st.stage());
            EXIT_TERMINATED
        }
    })
}

fn codec_exit(err: &CodecError) -> i32 {
    match err {
        CodecError::Init(_) => EXIT_HYPOTHESIS,
        CodecError::CapExhausted(_) => EXIT_CAP_EXHAUSTED,
        CodecError::Terminated => EXIT_TERMINATED,
        _ => EXIT_ERROR,
    }
}

fn cmd_encode(args: CodecArgs) -> anyhow::Result<i32> {
    let schedule = load_schedule(&args.schedule.schedule)?;
    let class = load_class(&args.class)?;
    let x: BitString = args.bits.parse()?;
    let cap = args.cap.unwrap_or_else(|| codec::default_stage_cap(&class, x.len()));
    match codec::encode(&x, &schedule, &class, cap) {
        Ok(result) => {
            println!("{}", result.code_prefix);
            println!("{}", serde_json::to_string(&result)?);
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("encode failed: {e}");
            Ok(codec_exit(&e))
        }
    }
}

fn cmd_decode(args: CodecArgs) -> anyhow::Result<i32> {
    let schedule = load_schedule(&args.schedule.schedule)?;
    let class = load_class(&args.class)?;
    let y: BitString = args.bits.parse()?;
    let cap = args.cap.unwrap_or_else(|| codec::default_stage_cap(&class, y.len()));
    match codec::decode(&y, &schedule, &class, cap) {
        Ok(sigma) => {
            println!("{sigma}");
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("decode failed: {e}");
            Ok(codec_exit(&e))
        }
    }
}

fn cmd_check(args: CheckArgs) -> anyhow::Result<i32> {
    let schedule = load_schedule(&args.schedule.schedule)?;
    let class = load_class(&args.class)?;
    let text = fs::read_to_string(&args.trace)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", args.trace.display()))?;
    let events = trace::parse_jsonl(&text)?;
    let reports = trace::replay_and_check(&events, &schedule, &class);
    let mut out = String::new();
    let mut ok = true;
    for report in &reports {
        ok &= report.is_pass();
        let _ = writeln!(out, "{}", report_to_json(report));
    }
    write_out(&args.out, &out)?;
    if ok {
        Ok(EXIT_OK)
    } else {
        let first = reports.iter().find_map(|r| r.failed.as_ref()).expect("some failure");
        eprintln!("check failed: {}: {}", first.check, first.detail);
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_bench(args: BenchArgs) -> anyhow::Result<i32> {
    let schedule = load_schedule(&args.schedule.schedule)?;
    let class = load_class(&args.class)?;
    let rows = codec::oracle_use_profile(&schedule, args.n_max)?;
    let table = kucera::kucera_levels(&class, args.n_max)?;
    let mut csv = String::from("n,ell_optimal,ell_kucera,redundancy_optimal,redundancy_kucera\n");
    for (n, ell, redundancy) in rows {
        let ell_k = table.levels()[n as usize];
        let _ = writeln!(csv, "{n},{ell},{ell_k},{redundancy},{}", ell_k as i64 - n as i64);
    }
    write_out(&args.out_csv, &csv)?;
    Ok(EXIT_OK)
}

fn parse_measure_cap(text: &str) -> anyhow::Result<Dyadic> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| anyhow::anyhow!("measure cap must be num/den, got {text:?}"))?;
    let num: u64 = num.parse()?;
    let den: u64 = den.parse()?;
    if !den.is_power_of_two() {
        anyhow::bail!("measure cap denominator must be a power of two, got {den}");
    }
    Ok(Dyadic::from_ratio(num, den.trailing_zeros() as u64))
}

fn cmd_gen_class(args: GenClassArgs) -> anyhow::Result<i32> {
    let cap = parse_measure_cap(&args.measure_cap)?;
    if cap <= Dyadic::zero() || cap >= Dyadic::one() {
        anyhow::bail!("measure cap must lie strictly between 0 and 1");
    }
    let class = generate_class(args.seed, &cap, args.depth, args.stages);
    let mut out = format!(
        "# generated class: seed={} cap={} depth={} stages={} measure={}\n",
        args.seed,
        args.measure_cap,
        args.depth,
        args.stages,
        class.full_measure()
    );
    out.push_str(&class.to_file_string());
    write_out(&args.out, &out)?;
    Ok(EXIT_OK)
}

/// Renders a report exactly as the `check` subcommand does.
pub fn report_to_json(report: &CheckReport) -> String {
    serde_json::to_string(report).expect("reports serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_cap_parsing() {
        assert_eq!(parse_measure_cap("1/4").unwrap(), Dyadic::from_ratio(1, 2));
        assert_eq!(parse_measure_cap("11/16").unwrap(), Dyadic::from_ratio(11, 4));
        assert!(parse_measure_cap("1/3").is_err());
        assert!(parse_measure_cap("0.25").is_err());
    }
}
