//! N-stage worker pipeline for the product cipher.
//!
//! One thread per stage. Adjacent stages share one [`BoundedBuffer`], so N
//! stages use N-1 buffers; the first stage pulls straight from the source
//! and the last stage collects the sink. Blocks travel by value, and the end
//! of the stream is a sentinel that follows the last block through every
//! buffer.

mod buffer;
mod stats;
mod throughput;

use std::any::Any;
use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU8, Ordering};
use std::sync::{mpsc, Arc};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::block::{Block64, MasterKey128};
use crate::cipher::Direction;
use crate::product::{self, ProductCipherSpec, SpecError, StageSpec};

pub use buffer::{BoundedBuffer, Closed};
pub use stats::{PipelineStats, StageStats};
pub use throughput::{measure_cipher_weights, measure_throughput, median, ThroughputReport};

pub const DEFAULT_BUFFER_CAPACITY: usize = 64;
pub const DEFAULT_SHUTDOWN_TIMEOUT: Duration = Duration::from_secs(30);

/// What a stage worker is doing right now; reported on timeouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[repr(u8)]
pub enum StageState {
    Starting = 0,
    WaitingInput = 1,
    Working = 2,
    WaitingOutput = 3,
    Done = 4,
    Failed = 5,
}

impl StageState {
    fn from_u8(v: u8) -> Self {
        match v {
            0 => StageState::Starting,
            1 => StageState::WaitingInput,
            2 => StageState::Working,
            3 => StageState::WaitingOutput,
            4 => StageState::Done,
            _ => StageState::Failed,
        }
    }
}

impl fmt::Display for StageState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StageState::Starting => "starting",
            StageState::WaitingInput => "waiting-input",
            StageState::Working => "working",
            StageState::WaitingOutput => "waiting-output",
            StageState::Done => "done",
            StageState::Failed => "failed",
        };
        f.write_str(s)
    }
}

fn describe_states(states: &[StageState]) -> String {
    states
        .iter()
        .enumerate()
        .map(|(i, s)| format!("stage {i}: {s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("pipeline needs at least one partition")]
    Empty,
    #[error("buffer capacity must be at least 1")]
    ZeroCapacity,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error("pipeline is already running")]
    AlreadyRunning,
    #[error("stage {stage} failed: {message}")]
    StageFailed { stage: usize, message: String },
    #[error("timed out after {after:?} ({})", describe_states(.states))]
    Timeout { after: Duration, states: Vec<StageState> },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Blocks (or batches) per inter-stage buffer.
    pub buffer_capacity: usize,
    /// Blocks per buffer slot. 1 keeps the one-block-per-slot semantics.
    pub batch_size: usize,
    /// Fuse adjacent partitions so that at most this many workers run.
    pub max_workers: Option<usize>,
    /// How long a drain may take before the run is declared stuck.
    pub shutdown_timeout: Duration,
    /// Optional bound on a whole run.
    pub run_timeout: Option<Duration>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            batch_size: 1,
            max_workers: None,
            shutdown_timeout: DEFAULT_SHUTDOWN_TIMEOUT,
            run_timeout: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub partitions: Vec<Vec<StageSpec>>,
    pub key: MasterKey128,
    pub direction: Direction,
    pub options: PipelineOptions,
}

impl PipelineConfig {
    pub fn new(partitions: Vec<Vec<StageSpec>>, key: MasterKey128) -> Self {
        PipelineConfig {
            partitions,
            key,
            direction: Direction::Encrypt,
            options: PipelineOptions::default(),
        }
    }

    /// Partition `spec` into `n_stages` with the default balancing rule.
    pub fn for_spec(spec: &ProductCipherSpec, n_stages: usize) -> Result<Self, PipelineError> {
        Ok(Self::new(product::partition(spec, n_stages)?, spec.key()))
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.options.buffer_capacity = capacity;
        self
    }

    pub fn with_options(mut self, options: PipelineOptions) -> Self {
        self.options = options;
        self
    }

    /// The unpartitioned spec this pipeline must agree with.
    pub fn monolithic_spec(&self) -> ProductCipherSpec {
        ProductCipherSpec::new(self.partitions.concat(), self.key)
    }
}

pub type StageFn = Arc<dyn Fn(Block64) -> Block64 + Send + Sync>;

/// Split `n` items into `groups` contiguous runs, earlier runs one longer.
fn fuse_bounds(n: usize, groups: usize) -> Vec<usize> {
    let (base, extra) = (n / groups, n % groups);
    let mut bounds = vec![0];
    for g in 0..groups {
        let len = base + usize::from(g < extra);
        bounds.push(bounds[g] + len);
    }
    bounds
}

enum Packet {
    Block(Block64),
    Batch(Vec<Block64>),
    End,
}

type Source = Box<dyn Iterator<Item = Block64> + Send>;

enum Input {
    Source(Source),
    Buffer(Arc<BoundedBuffer<Packet>>),
}

enum Output {
    Buffer(Arc<BoundedBuffer<Packet>>),
    Sink(Vec<Block64>),
}

enum WorkerExit {
    Finished { stats: StageStats, sink: Option<Vec<Block64>> },
    Aborted,
    Panicked(String),
}

struct Shared {
    stop: AtomicBool,
    states: Vec<AtomicU8>,
    batch_size: usize,
}

impl Shared {
    fn set(&self, stage: usize, s: StageState) {
        self.states[stage].store(s as u8, Ordering::Relaxed);
    }

    fn snapshot(&self) -> Vec<StageState> {
        self.states
            .iter()
            .map(|s| StageState::from_u8(s.load(Ordering::Relaxed)))
            .collect()
    }
}

/// A built pipeline. Idle until [`Pipeline::start`] or [`Pipeline::run`];
/// one run at a time.
pub struct Pipeline {
    stages: Vec<StageFn>,
    options: PipelineOptions,
    running: Arc<AtomicBool>,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("stages", &self.stages.len())
            .field("options", &self.options)
            .finish()
    }
}

impl Pipeline {
    pub fn build(config: &PipelineConfig) -> Result<Self, PipelineError> {
        if config.partitions.is_empty() {
            return Err(PipelineError::Empty);
        }
        let spec = ProductCipherSpec::new(Vec::new(), config.key);
        let n = config.partitions.len();
        let workers = config.options.max_workers.map_or(n, |m| m.clamp(1, n));
        let bounds = fuse_bounds(n, workers);
        let mut stages: Vec<StageFn> = bounds
            .windows(2)
            .map(|w| {
                let program = spec.program(config.partitions[w[0]..w[1]].concat(), config.direction);
                Arc::new(move |b| program.apply(b)) as StageFn
            })
            .collect();
        if config.direction == Direction::Decrypt {
            stages.reverse();
        }
        Self::from_stages(stages, config.options.clone())
    }

    /// Build from arbitrary stage functions.
    pub fn from_stages(stages: Vec<StageFn>, options: PipelineOptions) -> Result<Self, PipelineError> {
        if stages.is_empty() {
            return Err(PipelineError::Empty);
        }
        if options.buffer_capacity == 0 {
            return Err(PipelineError::ZeroCapacity);
        }
        if options.batch_size == 0 {
            return Err(PipelineError::ZeroBatch);
        }
        Ok(Pipeline {
            stages,
            options,
            running: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn buffer_count(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn options(&self) -> &PipelineOptions {
        &self.options
    }

    pub fn is_running(&self) -> bool {
        self.running.load(Ordering::Acquire)
    }

    /// Spawn the workers and begin pulling from `source`.
    pub fn start<I>(&self, source: I) -> Result<RunHandle, PipelineError>
    where
        I: IntoIterator<Item = Block64>,
        I::IntoIter: Send + 'static,
    {
        if self
            .running
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return Err(PipelineError::AlreadyRunning);
        }
        let n = self.stages.len();
        let shared = Arc::new(Shared {
            stop: AtomicBool::new(false),
            states: (0..n).map(|_| AtomicU8::new(StageState::Starting as u8)).collect(),
            batch_size: self.options.batch_size,
        });
        let buffers: Vec<Arc<BoundedBuffer<Packet>>> = (0..n - 1)
            .map(|_| Arc::new(BoundedBuffer::new(self.options.buffer_capacity)))
            .collect();
        let (done_tx, done_rx) = mpsc::channel();
        let mut source: Option<Source> = Some(Box::new(source.into_iter()));
        let started = Instant::now();

        let threads = (0..n)
            .map(|i| {
                let input = if i == 0 {
                    Input::Source(source.take().expect("source taken once"))
                } else {
                    Input::Buffer(Arc::clone(&buffers[i - 1]))
                };
                let output = if i + 1 == n {
                    Output::Sink(Vec::new())
                } else {
                    Output::Buffer(Arc::clone(&buffers[i]))
                };
                let f = Arc::clone(&self.stages[i]);
                let shared = Arc::clone(&shared);
                let done = done_tx.clone();
                thread::Builder::new()
                    .name(format!("cipherpipe-stage-{i}"))
                    .spawn(move || {
                        let exit = run_worker(i, f, input, output, &shared);
                        let _ = done.send(i);
                        exit
                    })
                    .expect("spawn stage worker")
            })
            .collect();

        Ok(RunHandle {
            shared,
            buffers,
            threads,
            done_rx,
            finished: 0,
            started,
            options: self.options.clone(),
            running: Arc::clone(&self.running),
            outcome: None,
        })
    }

    /// Push a whole stream through and collect the sink.
    pub fn run<I>(&self, source: I) -> Result<(Vec<Block64>, PipelineStats), PipelineError>
    where
        I: IntoIterator<Item = Block64>,
        I::IntoIter: Send + 'static,
    {
        self.start(source)?.finish()
    }
}

fn panic_message(p: &(dyn Any + Send)) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn run_worker(idx: usize, f: StageFn, mut input: Input, mut output: Output, shared: &Shared) -> WorkerExit {
    let result = panic::catch_unwind(AssertUnwindSafe(|| worker_loop(idx, &f, &mut input, &mut output, shared)));
    let close_neighbours = |input: &Input, output: &Output| {
        if let Input::Buffer(b) = input {
            b.close();
        }
        if let Output::Buffer(b) = output {
            b.close();
        }
    };
    match result {
        Ok(Ok(stats)) => {
            shared.set(idx, StageState::Done);
            let sink = match output {
                Output::Sink(v) => Some(v),
                Output::Buffer(_) => None,
            };
            WorkerExit::Finished { stats, sink }
        }
        Ok(Err(Closed)) => {
            close_neighbours(&input, &output);
            shared.set(idx, StageState::Failed);
            WorkerExit::Aborted
        }
        Err(p) => {
            close_neighbours(&input, &output);
            shared.set(idx, StageState::Failed);
            WorkerExit::Panicked(panic_message(p.as_ref()))
        }
    }
}

fn worker_loop(
    idx: usize,
    f: &StageFn,
    input: &mut Input,
    output: &mut Output,
    shared: &Shared,
) -> Result<StageStats, Closed> {
    let mut stats = StageStats::default();
    loop {
        shared.set(idx, StageState::WaitingInput);
        let t0 = Instant::now();
        let packet = match input {
            Input::Source(src) => {
                if shared.stop.load(Ordering::Acquire) {
                    Packet::End
                } else if shared.batch_size == 1 {
                    src.next().map_or(Packet::End, Packet::Block)
                } else {
                    let batch: Vec<Block64> = src.by_ref().take(shared.batch_size).collect();
                    if batch.is_empty() {
                        Packet::End
                    } else {
                        Packet::Batch(batch)
                    }
                }
            }
            Input::Buffer(b) => b.pop()?,
        };
        let t1 = Instant::now();
        if matches!(input, Input::Buffer(_)) {
            stats.blocked += t1 - t0;
        }

        shared.set(idx, StageState::Working);
        let (packet, count) = match packet {
            Packet::End => {
                emit(output, Packet::End)?;
                break;
            }
            Packet::Block(b) => (Packet::Block(f(b)), 1),
            Packet::Batch(mut v) => {
                for b in v.iter_mut() {
                    *b = f(*b);
                }
                let n = v.len() as u64;
                (Packet::Batch(v), n)
            }
        };
        let t2 = Instant::now();
        stats.busy += t2 - t1;
        stats.blocks_in += count;

        shared.set(idx, StageState::WaitingOutput);
        emit(output, packet)?;
        stats.blocked += t2.elapsed();
        stats.blocks_out += count;
    }
    if let Input::Buffer(b) = input {
        stats.input_occupancy = b.occupancy_histogram();
    }
    Ok(stats)
}

fn emit(output: &mut Output, packet: Packet) -> Result<(), Closed> {
    match output {
        Output::Buffer(b) => b.push(packet),
        Output::Sink(v) => {
            match packet {
                Packet::Block(b) => v.push(b),
                Packet::Batch(bs) => v.extend(bs),
                Packet::End => {}
            }
            Ok(())
        }
    }
}

/// A run in progress. Finish it with [`RunHandle::finish`], or stop feeding
/// early with [`RunHandle::drain_and_shutdown`].
pub struct RunHandle {
    shared: Arc<Shared>,
    buffers: Vec<Arc<BoundedBuffer<Packet>>>,
    threads: Vec<JoinHandle<WorkerExit>>,
    done_rx: mpsc::Receiver<usize>,
    finished: usize,
    started: Instant,
    options: PipelineOptions,
    running: Arc<AtomicBool>,
    outcome: Option<Result<(Vec<Block64>, PipelineStats), PipelineError>>,
}

impl RunHandle {
    pub fn states(&self) -> Vec<StageState> {
        self.shared.snapshot()
    }

    fn abort(&self) {
        self.shared.stop.store(true, Ordering::Release);
        for b in &self.buffers {
            b.close();
        }
    }

    fn wait_all(&mut self, deadline: Option<Instant>) -> Result<(), PipelineError> {
        while self.finished < self.threads.len() {
            let got = match deadline {
                None => self.done_rx.recv().ok(),
                Some(d) => {
                    let left = d.saturating_duration_since(Instant::now());
                    self.done_rx.recv_timeout(left).ok()
                }
            };
            match got {
                Some(_) => self.finished += 1,
                None => {
                    let states = self.shared.snapshot();
                    self.abort();
                    return Err(PipelineError::Timeout {
                        after: self.started.elapsed(),
                        states,
                    });
                }
            }
        }
        Ok(())
    }

    fn collect(&mut self, deadline: Option<Instant>) {
        if self.outcome.is_some() {
            return;
        }
        let outcome = self.wait_all(deadline).and_then(|()| self.join_all());
        self.running.store(false, Ordering::Release);
        self.outcome = Some(outcome);
    }

    fn join_all(&mut self) -> Result<(Vec<Block64>, PipelineStats), PipelineError> {
        let mut stages = Vec::with_capacity(self.threads.len());
        let mut sink = None;
        let mut failure: Option<(usize, String)> = None;
        let mut aborted = None;
        for (i, t) in self.threads.drain(..).enumerate() {
            match t.join() {
                Ok(WorkerExit::Finished { stats, sink: s }) => {
                    stages.push(stats);
                    if s.is_some() {
                        sink = s;
                    }
                }
                Ok(WorkerExit::Panicked(msg)) => {
                    failure.get_or_insert((i, msg));
                }
                Ok(WorkerExit::Aborted) => {
                    aborted.get_or_insert(i);
                }
                Err(p) => {
                    failure.get_or_insert((i, panic_message(p.as_ref())));
                }
            }
        }
        if let Some((stage, message)) = failure {
            return Err(PipelineError::StageFailed { stage, message });
        }
        if let Some(stage) = aborted {
            return Err(PipelineError::StageFailed {
                stage,
                message: "aborted".into(),
            });
        }
        let stats = PipelineStats {
            stages,
            wall: self.started.elapsed(),
        };
        Ok((sink.unwrap_or_default(), stats))
    }

    /// Stop pulling new blocks, let everything already admitted drain to
    /// the sink, and join all workers. Calling it again is a no-op.
    pub fn drain_and_shutdown(&mut self) -> Result<(), PipelineError> {
        if self.outcome.is_some() {
            return Ok(());
        }
        self.shared.stop.store(true, Ordering::Release);
        let deadline = Instant::now() + self.options.shutdown_timeout;
        self.collect(Some(deadline));
        match &self.outcome {
            Some(Err(e)) => Err(e.clone()),
            _ => Ok(()),
        }
    }

    /// Wait for the end of the stream and return the sink and statistics.
    /// After an early shutdown this returns the prefix that was emitted.
    pub fn finish(mut self) -> Result<(Vec<Block64>, PipelineStats), PipelineError> {
        let deadline = self.options.run_timeout.map(|t| self.started + t);
        self.collect(deadline);
        self.outcome.take().expect("outcome collected")
    }
}

impl Drop for RunHandle {
    fn drop(&mut self) {
        if self.outcome.is_none() {
            // abandoned mid-run: tear down without waiting
            self.abort();
            self.running.store(false, Ordering::Release);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn add(k: u64) -> StageFn {
        Arc::new(move |b: Block64| Block64::new(b.value().wrapping_add(k)))
    }

    #[test]
    fn buffers_between_stages() {
        let p = Pipeline::from_stages(vec![add(1), add(2), add(3)], PipelineOptions::default()).unwrap();
        assert_eq!(p.stage_count(), 3);
        assert_eq!(p.buffer_count(), 2);
        let (out, stats) = p.run((0..100u64).map(Block64::new)).unwrap();
        assert_eq!(out, (0..100u64).map(|v| Block64::new(v + 6)).collect::<Vec<_>>());
        assert_eq!(stats.blocks_processed(), Some(100));
    }

    #[test]
    fn rejects_bad_options() {
        let zero_cap = PipelineOptions {
            buffer_capacity: 0,
            ..Default::default()
        };
        assert_eq!(
            Pipeline::from_stages(vec![add(1)], zero_cap).unwrap_err(),
            PipelineError::ZeroCapacity
        );
        assert_eq!(
            Pipeline::from_stages(vec![], PipelineOptions::default()).unwrap_err(),
            PipelineError::Empty
        );
    }

    #[test]
    fn fuse_bounds_even() {
        assert_eq!(fuse_bounds(5, 2), vec![0, 3, 5]);
        assert_eq!(fuse_bounds(8, 8), (0..=8).collect::<Vec<_>>());
        assert_eq!(fuse_bounds(3, 1), vec![0, 3]);
    }
}
