//! The evolution loop.
//!
//! Synchronous mode evaluates one child at a time and draws every random
//! number from one seeded stream, so a run replays bit for bit, across
//! checkpoint and resume included. Asynchronous mode keeps up to `workers`
//! children in flight: the parent tournament sees the population when the
//! child is dispatched, the kill tournament sees it when the child's
//! evaluation completes.

use crate::error::{Error, Result};
use crate::evolution::config::{SearchConfig, SearchMode};
use crate::evolution::evaluator::{Evaluation, Evaluator};
use crate::evolution::population::{beats, tournament, Individual, Objective, Population};
use crate::space::{mutate, Genome, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

pub const CHECKPOINT_FORMAT: &str = "mufasa-checkpoint-1";

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub individual: Individual,
    pub evaluation: Evaluation,
    /// Seconds since the Unix epoch when the evaluation completed.
    pub timestamp: f64,
}

/// One line of the candidate log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub id: u64,
    pub parent_id: Option<u64>,
    pub fitness: f64,
    pub timestamp: f64,
    pub created_at: Option<usize>,
    pub rejected: Option<String>,
    pub wall_time: f64,
}

impl From<&HistoryEntry> for LogRecord {
    fn from(h: &HistoryEntry) -> Self {
        LogRecord {
            id: h.individual.id,
            parent_id: h.individual.parent_id,
            fitness: h.individual.fitness,
            timestamp: h.timestamp,
            created_at: h.individual.created_at,
            rejected: h.evaluation.rejected.clone(),
            wall_time: h.evaluation.wall_time,
        }
    }
}

/// Everything needed to continue a search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchState {
    pub format: String,
    pub config_hash: String,
    pub rng: ChaCha8Rng,
    pub next_id: u64,
    pub population: Population,
    pub initial: Vec<HistoryEntry>,
    pub history: Vec<HistoryEntry>,
}

impl SearchState {
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer(&mut w, self)?;
            w.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let state: SearchState = serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?;
        if state.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unknown checkpoint format {:?}", state.format)));
        }
        Ok(state)
    }
}

/// SHA-256 over the search configuration, less the fields that only affect
/// scheduling, and the evaluator fingerprint.
pub fn config_hash(cfg: &SearchConfig, evaluator: &dyn Evaluator) -> String {
    let mut c = cfg.clone();
    c.workers = 1;
    c.checkpoint_every = 1;
    let mut h = Sha256::new();
    h.update(serde_json::to_string(&c).expect("config serializes").as_bytes());
    h.update(b"\n");
    h.update(evaluator.fingerprint().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
pub struct RunOptions<'a> {
    pub checkpoint: Option<PathBuf>,
    /// Candidate log, rewritten from the checkpoint on resume.
    pub log: Option<PathBuf>,
    pub resume: bool,
    /// Checked between candidates; when set the run checkpoints and stops.
    pub stop: Option<&'a AtomicBool>,
    /// Stop once this many candidates are in the history.
    pub halt_after: Option<usize>,
    pub progress: Option<&'a (dyn Fn(&HistoryEntry) + Sync)>,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Highest-fitness candidate of the history, ties to the lower id.
    pub best: Option<Individual>,
    pub history: Vec<HistoryEntry>,
    pub initial: Vec<HistoryEntry>,
    pub population: Population,
    /// The run stopped before the candidate budget was spent.
    pub interrupted: bool,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn evaluate(evaluator: &dyn Evaluator, g: &Genome) -> Evaluation {
    evaluator.evaluate(g).unwrap_or_else(|e| Evaluation::failed(format!("error: {e}")))
}

/// Best entry of a history.
pub fn best_of(history: &[HistoryEntry]) -> Option<&Individual> {
    history
        .iter()
        .map(|h| &h.individual)
        .reduce(|w, i| if beats(i, w, Objective::Max) { i } else { w })
}

/// Best-so-far fitness after each candidate.
pub fn best_so_far(history: &[HistoryEntry]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    history
        .iter()
        .map(|h| {
            best = best.max(h.individual.fitness);
            best
        })
        .collect()
}

struct Controller<'a> {
    cfg: &'a SearchConfig,
    vocab: &'a Vocabulary,
    evaluator: &'a dyn Evaluator,
    opts: &'a RunOptions<'a>,
    state: SearchState,
    log: Option<BufWriter<File>>,
}

impl Controller<'_> {
    fn should_stop(&self) -> bool {
        self.opts.stop.is_some_and(|s| s.load(Ordering::SeqCst))
            || self.opts.halt_after.is_some_and(|n| self.state.history.len() >= n)
    }

    fn checkpoint(&self) -> Result<()> {
        if let Some(path) = &self.opts.checkpoint {
            self.state.save(path)?;
        }
        Ok(())
    }

    fn spawn_child(&mut self) -> Result<Individual> {
        let s = &mut self.state;
        let parent = s.population.get(tournament(&s.population, self.cfg.tournament, &mut s.rng, Objective::Max)?);
        let genome = mutate(&parent.genome, self.vocab, self.cfg.mutation_rate, &mut s.rng);
        let child = Individual {
            id: s.next_id,
            genome,
            fitness: f64::NAN,
            parent_id: Some(parent.id),
            created_at: Some((s.next_id as usize).saturating_sub(s.initial.len())),
        };
        s.next_id += 1;
        Ok(child)
    }

    fn complete(&mut self, mut child: Individual, evaluation: Evaluation) -> Result<()> {
        child.fitness = evaluation.fitness;
        let s = &mut self.state;
        let dead = tournament(&s.population, self.cfg.tournament, &mut s.rng, Objective::Min)?;
        s.population.replace(dead, child.clone());
        let entry = HistoryEntry { individual: child, evaluation, timestamp: now() };
        if let Some(log) = &mut self.log {
            serde_json::to_writer(&mut *log, &LogRecord::from(&entry))?;
            log.write_all(b"\n")?;
            log.flush()?;
        }
        if let Some(p) = self.opts.progress {
            p(&entry);
        }
        s.history.push(entry);
        if s.history.len().is_multiple_of(self.cfg.checkpoint_every) {
            self.checkpoint()?;
        }
        Ok(())
    }

    fn run_sync(&mut self) -> Result<bool> {
        while self.state.history.len() < self.cfg.candidates {
            if self.should_stop() {
                return Ok(true);
            }
            let child = self.spawn_child()?;
            let ev = evaluate(self.evaluator, &child.genome);
            self.complete(child, ev)?;
        }
        Ok(false)
    }

    fn run_async(&mut self) -> Result<bool> {
        let workers = self.cfg.workers;
        let evaluator = self.evaluator;
        let (job_tx, job_rx) = mpsc::channel::<(u64, Genome)>();
        let (done_tx, done_rx) = mpsc::channel::<(u64, Evaluation)>();
        let job_rx = Mutex::new(job_rx);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let done_tx = done_tx.clone();
                let job_rx = &job_rx;
                scope.spawn(move || loop {
                    let job = job_rx.lock().expect("job queue lock").recv();
                    let Ok((id, genome)) = job else { break };
                    if done_tx.send((id, evaluate(evaluator, &genome))).is_err() {
                        break;
                    }
                });
            }
            drop(done_tx);
            let mut in_flight: HashMap<u64, Individual> = HashMap::new();
            let mut dispatched = self.state.history.len();
            let mut stopped = false;
            let result = loop {
                stopped = stopped || self.should_stop();
                while !stopped && in_flight.len() < workers && dispatched < self.cfg.candidates {
                    let child = match self.spawn_child() {
                        Ok(c) => c,
                        Err(e) => return Err(e),
                    };
                    job_tx.send((child.id, child.genome.clone())).expect("workers alive");
                    in_flight.insert(child.id, child);
                    dispatched += 1;
                }
                if in_flight.is_empty() {
                    break Ok(stopped && self.state.history.len() < self.cfg.candidates);
                }
                let (id, ev) = done_rx.recv().expect("a worker holds every in-flight job");
                let child = in_flight.remove(&id).expect("completed job was dispatched");
                if let Err(e) = self.complete(child, ev) {
                    break Err(e);
                }
            };
            drop(job_tx);
            result
        })
    }
}

fn fresh_state(cfg: &SearchConfig, vocab: &Vocabulary, evaluator: &dyn Evaluator, hash: String) -> Result<SearchState> {
    let seed = cfg.seed_genome(vocab)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let genomes: Vec<Genome> = (0..cfg.population).map(|_| mutate(&seed, vocab, cfg.mutation_rate, &mut rng)).collect();
    let evaluations: Vec<Evaluation> = match cfg.mode {
        SearchMode::Sync => genomes.iter().map(|g| evaluate(evaluator, g)).collect(),
        SearchMode::Async => parallel_map(&genomes, cfg.workers, |g| evaluate(evaluator, g)),
    };
    if evaluations.iter().all(|e| e.rejected.is_some()) {
        let reason = evaluations.first().and_then(|e| e.rejected.clone()).unwrap_or_default();
        return Err(Error::Config(format!("every initial individual failed evaluation, first: {reason}")));
    }
    let t = now();
    let initial: Vec<HistoryEntry> = genomes
        .into_iter()
        .zip(evaluations)
        .enumerate()
        .map(|(i, (genome, evaluation))| HistoryEntry {
            individual: Individual { id: i as u64, genome, fitness: evaluation.fitness, parent_id: None, created_at: None },
            evaluation,
            timestamp: t,
        })
        .collect();
    let population = Population::new(initial.iter().map(|h| h.individual.clone()).collect())?;
    Ok(SearchState {
        format: CHECKPOINT_FORMAT.into(),
        config_hash: hash,
        rng,
        next_id: cfg.population as u64,
        population,
        initial,
        history: Vec::new(),
    })
}

/// Evaluates `items` on `workers` threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(items: &[T], workers: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = Mutex::new(0usize);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            scope.spawn(|| loop {
                let i = {
                    let mut n = next.lock().expect("index lock");
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                out.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    out.into_inner().expect("result lock").into_iter().map(|r| r.expect("every item evaluated")).collect()
}

fn open_log(path: &Path, history: &[HistoryEntry]) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(path)?);
    for h in history {
        serde_json::to_writer(&mut w, &LogRecord::from(h))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(w)
}

/// Runs tournament-selection evolution until `cfg.candidates` children
/// have been evaluated, or until stopped.
pub fn run_search(cfg: &SearchConfig, vocab: &Vocabulary, evaluator: &dyn Evaluator, opts: &RunOptions<'_>) -> Result<SearchOutcome> {
    cfg.check()?;
    let hash = config_hash(cfg, evaluator);
    let state = if opts.resume {
        let path = opts.checkpoint.as_ref().ok_or_else(|| Error::Config("resume needs a checkpoint path".into()))?;
        let state = SearchState::load(path)?;
        if state.config_hash != hash {
            return Err(Error::Config(format!(
                "checkpoint {} was written by a different configuration",
                path.display()
            )));
        }
        state
    } else {
        fresh_state(cfg, vocab, evaluator, hash)?
    };
    let log = match &opts.log {
        Some(p) => Some(open_log(p, &state.history)?),
        None => None,
    };
    let mut ctl = Controller { cfg, vocab, evaluator, opts, state, log };
    if !opts.resume {
        ctl.checkpoint()?;
    }
    let interrupted = match cfg.mode {
        SearchMode::Sync => ctl.run_sync()?,
        SearchMode::Async => ctl.run_async()?,
    };
    ctl.checkpoint()?;
    let state = ctl.state;
    Ok(SearchOutcome {
        best: best_of(&state.history).cloned(),
        history: state.history,
        initial: state.initial,
        population: state.population,
        interrupted,
    })
}
