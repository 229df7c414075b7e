//! Command-line front end.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::block::{Block64, HexError, MasterKey128};
use crate::cipher::Direction;
use crate::perf::report::{self, BenchRow, ReportFormat};
use crate::perf::{Objective, PerfError, Scenario, ScenarioError};
use crate::pipeline::{measure_throughput, Pipeline, PipelineConfig, PipelineError, PipelineOptions};
use crate::product::ProductCipherSpec;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CIPHERPIPE_THREADS";

/// Key used by `bench` when none is given.
pub const DEFAULT_BENCH_KEY: &str = "00010002000300040005000600070008";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Encrypt,
    Decrypt,
    Bench,
    Simulate,
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum StreamFormat {
    /// Bare bytes, 8 per block, big-endian within a block.
    #[default]
    Raw,
    /// One 16-digit hex block per whitespace-separated token.
    Hex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum ReportArg {
    Csv,
    Json,
    #[default]
    Text,
}

impl From<ReportArg> for ReportFormat {
    fn from(r: ReportArg) -> Self {
        match r {
            ReportArg::Csv => ReportFormat::Csv,
            ReportArg::Json => ReportFormat::Json,
            ReportArg::Text => ReportFormat::Text,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cipherpipe", version, about = "IDEA/Skipjack/Raiden product cipher over a worker pipeline")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// 128-bit master key as 32 hex digits.
    #[arg(long)]
    pub key: Option<String>,
    /// Input file; stdin when absent or `-`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent or `-`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pipeline stage count, or a comma list of counts for bench.
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<usize>,
    #[arg(long, default_value_t = crate::pipeline::DEFAULT_BUFFER_CAPACITY)]
    pub buffer_capacity: usize,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: StreamFormat,
    /// Scenario file, or the name of a bundled scenario (recorded, synthetic).
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub report: ReportArg,
    /// Overrides the scenario's objective (min_area or min_power).
    #[arg(long)]
    pub objective: Option<Objective>,
    #[arg(long, value_delimiter = ',', default_values_t = [22usize, 10_000])]
    pub stream_lengths: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("bad key: {0}")]
    Key(HexError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("input ends with a partial block: {trailing} bytes at byte offset {offset}")]
    Truncated { offset: usize, trailing: usize },
    #[error("hex input, token {index} at byte offset {offset}: {source}")]
    HexInput {
        index: usize,
        offset: usize,
        source: HexError,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Perf(#[from] PerfError),
    #[error("scenario {name}: {source}")]
    Scenario { name: String, source: ScenarioError },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Key(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &str) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_string(),
        source,
    }
}

fn is_std(p: &Option<PathBuf>) -> bool {
    p.as_deref().map_or(true, |p| p == Path::new("-"))
}

fn read_input(path: &Option<PathBuf>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    if is_std(path) {
        io::stdin().read_to_end(&mut buf).map_err(io_err("<stdin>"))?;
    } else {
        let p = path.as_ref().expect("checked");
        let name = p.display().to_string();
        buf = fs::read(p).map_err(io_err(&name))?;
    }
    Ok(buf)
}

fn write_output(path: &Option<PathBuf>, data: &[u8]) -> Result<(), CliError> {
    if is_std(path) {
        let mut out = io::stdout().lock();
        out.write_all(data).and_then(|_| out.flush()).map_err(io_err("<stdout>"))
    } else {
        let p = path.as_ref().expect("checked");
        fs::write(p, data).map_err(io_err(&p.display().to_string()))
    }
}

/// Split raw bytes into blocks; a length that is not a multiple of 8 is an
/// error naming the offset of the partial block.
pub fn decode_raw(bytes: &[u8]) -> Result<Vec<Block64>, CliError> {
    let chunks = bytes.chunks_exact(8);
    if !chunks.remainder().is_empty() {
        return Err(CliError::Truncated {
            offset: bytes.len() - chunks.remainder().len(),
            trailing: chunks.remainder().len(),
        });
    }
    Ok(chunks
        .map(|c| Block64::from_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn encode_raw(blocks: &[Block64]) -> Vec<u8> {
    blocks.iter().flat_map(|b| b.to_bytes()).collect()
}

pub fn decode_hex(text: &[u8]) -> Result<Vec<Block64>, CliError> {
    let text = String::from_utf8_lossy(text);
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (index, token) in text.split_inclusive(char::is_whitespace).enumerate() {
        let word = token.trim();
        if !word.is_empty() {
            let lead = token.len() - token.trim_start().len();
            let b = word.parse().map_err(|source| CliError::HexInput {
                index,
                offset: offset + lead,
                source,
            })?;
            blocks.push(b);
        }
        offset += token.len();
    }
    Ok(blocks)
}

pub fn encode_hex(blocks: &[Block64]) -> Vec<u8> {
    blocks.iter().map(|b| format!("{b}\n")).collect::<String>().into_bytes()
}

fn threads_from(env: Option<&str>) -> Result<Option<usize>, CliError> {
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

fn key_from(arg: Option<&str>, default: Option<&str>) -> Result<MasterKey128, CliError> {
    match arg.or(default) {
        Some(k) => k.parse().map_err(CliError::Key),
        None => Err(CliError::Usage("--key is required".into())),
    }
}

fn options(cli: &Cli, threads: Option<usize>) -> Result<PipelineOptions, CliError> {
    if cli.buffer_capacity == 0 {
        return Err(CliError::Usage("--buffer-capacity must be at least 1".into()));
    }
    if cli.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be at least 1".into()));
    }
    Ok(PipelineOptions {
        buffer_capacity: cli.buffer_capacity,
        batch_size: cli.batch_size,
        max_workers: threads,
        ..PipelineOptions::default()
    })
}

/// Encrypt or decrypt `blocks` with the canonical product cipher, using the
/// monolithic loop for one stage and the worker pipeline otherwise.
pub fn transform(
    blocks: Vec<Block64>,
    key: MasterKey128,
    direction: Direction,
    stages: usize,
    options: PipelineOptions,
) -> Result<Vec<Block64>, CliError> {
    let spec = ProductCipherSpec::canonical(key);
    if stages == 1 {
        return Ok(match direction {
            Direction::Encrypt => blocks.into_iter().map(|b| spec.encrypt_block(b)).collect(),
            Direction::Decrypt => blocks.into_iter().map(|b| spec.decrypt_block(b)).collect(),
        });
    }
    let config = PipelineConfig::for_spec(&spec, stages)?
        .with_direction(direction)
        .with_options(options);
    let (out, _) = Pipeline::build(&config)?.run(blocks)?;
    Ok(out)
}

fn cmd_cipher(cli: &Cli, direction: Direction, threads: Option<usize>) -> Result<(), CliError> {
    let key = key_from(cli.key.as_deref(), None)?;
    let stages = match cli.stages.as_slice() {
        [] => 1,
        [n] if *n >= 1 => *n,
        _ => return Err(CliError::Usage("--stages takes one count of at least 1 here".into())),
    };
    let opts = options(cli, threads)?;
    let input = read_input(&cli.input)?;
    let blocks = match cli.format {
        StreamFormat::Raw => decode_raw(&input)?,
        StreamFormat::Hex => decode_hex(&input)?,
    };
    let out = transform(blocks, key, direction, stages, opts)?;
    let bytes = match cli.format {
        StreamFormat::Raw => encode_raw(&out),
        StreamFormat::Hex => encode_hex(&out),
    };
    write_output(&cli.out, &bytes)
}

/// Deterministic benchmark input.
pub fn bench_stream(len: usize) -> Vec<Block64> {
    (0..len as u64)
        .map(|i| Block64::new(i.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x0123_4567_89ab_cdef))
        .collect()
}

fn cmd_bench(cli: &Cli, threads: Option<usize>) -> Result<(), CliError> {
    let key = key_from(cli.key.as_deref(), Some(DEFAULT_BENCH_KEY))?;
    let stages = if cli.stages.is_empty() {
        vec![1, 2, 5]
    } else {
        cli.stages.clone()
    };
    if stages.contains(&0) {
        return Err(CliError::Usage("--stages counts must be at least 1".into()));
    }
    if cli.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    let opts = options(cli, threads)?;
    let spec = ProductCipherSpec::canonical(key);
    let mut rows = Vec::new();
    for &len in &cli.stream_lengths {
        let stream = bench_stream(len);
        let measure = |n: usize| {
            let config = PipelineConfig::for_spec(&spec, n)?.with_options(opts.clone());
            measure_throughput(&config, &stream, cli.repetitions)
        };
        let one = if stages.contains(&1) { None } else { Some(measure(1)?) };
        let mut reports = Vec::new();
        for &n in &stages {
            reports.push(measure(n)?);
        }
        let one_rate = one
            .as_ref()
            .or_else(|| reports.iter().find(|r| r.stages == 1))
            .map_or(0.0, |r| r.pipeline_blocks_per_sec);
        rows.extend(reports.iter().map(|r| BenchRow::new(r, one_rate)));
    }
    let text = report::render_bench(&rows, cli.report.into())?;
    write_output(&cli.out, text.as_bytes())
}

/// A scenario file path, or the name of a bundled scenario.
pub fn load_scenario(arg: &str) -> Result<Scenario, CliError> {
    let path = Path::new(arg);
    let text = if path.exists() {
        fs::read_to_string(path).map_err(io_err(arg))?
    } else if let Some((_, text)) = crate::perf::scenario::BUILTIN.iter().find(|(n, _)| *n == arg) {
        text.to_string()
    } else {
        return Err(CliError::Usage(format!(
            "no scenario file {arg:?} and no bundled scenario by that name"
        )));
    };
    Scenario::parse(&text).map_err(|source| CliError::Scenario {
        name: arg.to_string(),
        source,
    })
}

fn scenario_arg(cli: &Cli) -> Result<Scenario, CliError> {
    let arg = cli
        .scenario
        .as_deref()
        .ok_or_else(|| CliError::Usage("--scenario is required".into()))?;
    load_scenario(arg)
}

fn cmd_simulate(cli: &Cli) -> Result<(), CliError> {
    let report = scenario_arg(cli)?.simulate()?;
    let text = report::render_scenario(&report, cli.report.into())?;
    write_output(&cli.out, text.as_bytes())
}

fn cmd_optimize(cli: &Cli) -> Result<(), CliError> {
    let outcome = scenario_arg(cli)?.optimize(cli.objective)?;
    let text = match cli.report {
        ReportArg::Text => {
            // the summary as comments, then the rewritten scenario, so the
            // whole output can be fed straight back in
            let mut out: String = report::render_optimize(&outcome, ReportFormat::Text)?
                .lines()
                .map(|l| format!("# {l}\n"))
                .collect();
            out.push('\n');
            out.push_str(&outcome.scenario.to_string());
            out
        }
        other => report::render_optimize(&outcome, other.into())?,
    };
    write_output(&cli.out, text.as_bytes())
}

/// Run one command. `threads_env` is the value of [`THREADS_ENV`], if set.
pub fn run(cli: &Cli, threads_env: Option<&str>) -> Result<(), CliError> {
    let threads = threads_from(threads_env)?;
    match cli.mode {
        Mode::Encrypt => cmd_cipher(cli, Direction::Encrypt, threads),
        Mode::Decrypt => cmd_cipher(cli, Direction::Decrypt, threads),
        Mode::Bench => cmd_bench(cli, threads),
        Mode::Simulate => cmd_simulate(cli),
        Mode::Optimize => cmd_optimize(cli),
    }
}
