//! Multi-threaded variant of the parse loop. Workers share one chart and
//! one agenda; each pops an item, runs Combine on private copies of the two
//! edges without holding any lock, then publishes the result under the
//! chart's write lock. Lock order is always chart before agenda.

use std::sync::{Condvar, Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::decoder::{EmissionStream, Lattice};
use crate::engine::ops::{self, Feed};
use crate::engine::{Agenda, AgendaItem, Chart, Context, EdgeId, EngineError, Models, ParseResultSet, ParserConfig};
use crate::engine::parser::{check_lexicon, frontier, StepCounts};
use crate::grammar::Grammar;

/// Number of power-of-two nanosecond buckets in the Combine histogram.
pub const HISTOGRAM_BUCKETS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WorkerConfig {
    pub worker_count: usize,
    /// Agenda items a worker takes per visit to the agenda. Values above 1
    /// cut lock traffic but reorder work, so only a batch of 1 keeps a
    /// single worker identical to the sequential parser.
    pub task_batch: usize,
    pub metrics_enabled: bool,
}

impl WorkerConfig {
    pub fn new(worker_count: usize) -> Self {
        WorkerConfig { worker_count, task_batch: 1, metrics_enabled: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorkerMetrics {
    pub items: u64,
    pub combined: u64,
    pub busy: Duration,
    pub idle: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelMetrics {
    pub workers: Vec<WorkerMetrics>,
    /// `histogram[k]` counts Combine calls that took `[2^k, 2^(k+1))` ns.
    pub histogram: Vec<u64>,
    /// Time spent in Combine calls that unified, over total worker busy
    /// time (item fetch, Combine and publishing).
    pub unification_share: f64,
    pub wall: Duration,
}

struct State {
    agenda: Agenda,
    results: Vec<EdgeId>,
    in_flight: usize,
    shutdown: bool,
    error: Option<EngineError>,
    counts: StepCounts,
}

struct Shared<'g> {
    ctx: Context<'g>,
    chart: RwLock<Chart>,
    state: Mutex<State>,
    wake: Condvar,
}

#[derive(Default)]
struct Local {
    metrics: WorkerMetrics,
    histogram: Vec<u64>,
    unify_time: Duration,
}

fn bucket(d: Duration) -> usize {
    let ns = d.as_nanos().max(1) as u64;
    (63 - ns.leading_zeros() as usize).min(HISTOGRAM_BUCKETS - 1)
}

fn worker(shared: &Shared<'_>, batch: usize) -> Local {
    let mut local = Local { histogram: vec![0; HISTOGRAM_BUCKETS], ..Local::default() };
    loop {
        let waited = Instant::now();
        let items = {
            let mut st = shared.state.lock().unwrap();
            loop {
                if st.shutdown {
                    local.metrics.idle += waited.elapsed();
                    return local;
                }
                let items: Vec<_> = std::iter::from_fn(|| st.agenda.pop()).take(batch).collect();
                if !items.is_empty() {
                    st.in_flight += items.len();
                    break items;
                }
                st = shared.wake.wait(st).unwrap();
            }
        };
        local.metrics.idle += waited.elapsed();
        for item in items {
            process(shared, &mut local, item);
        }
    }
}

fn process(shared: &Shared<'_>, local: &mut Local, item: AgendaItem) {
    let busy = Instant::now();
    let (a, i, attr) = {
        let chart = shared.chart.read().unwrap();
        let i = chart.edge(item.passive).clone();
        let attr = chart.vertex(i.from).prosody;
        (chart.edge(item.active).clone(), i, attr)
    };
    let started = Instant::now();
    let outcome = ops::combine(&shared.ctx, &a, &i, &attr);
    let took = started.elapsed();
    local.histogram[bucket(took)] += 1;
    let mut chart = shared.chart.write().unwrap();
    let mut st = shared.state.lock().unwrap();
    let st = &mut *st;
    let applied = outcome.and_then(|o| ops::apply(&shared.ctx, &mut chart, &mut st.agenda, &mut st.results, o));
    match applied {
        Ok(kind) => {
            if kind.unified() {
                local.unify_time += took;
            }
            if matches!(kind, ops::StepKind::Combined { .. }) {
                local.metrics.combined += 1;
            }
            st.counts.record(kind);
        }
        Err(e) => {
            st.error.get_or_insert(e.into());
            st.shutdown = true;
        }
    }
    st.in_flight -= 1;
    local.metrics.items += 1;
    local.metrics.busy += busy.elapsed();
    shared.wake.notify_all();
}

/// Blocks until the agenda is empty and no worker holds an item.
fn drain(shared: &Shared<'_>) -> Result<(), EngineError> {
    let mut st = shared.state.lock().unwrap();
    loop {
        if let Some(e) = st.error.take() {
            return Err(e);
        }
        if st.agenda.is_empty() && st.in_flight == 0 {
            return Ok(());
        }
        st = shared.wake.wait(st).unwrap();
    }
}

fn drive(shared: &Shared<'_>, lattice: &Lattice) -> Result<(), EngineError> {
    let ctx = shared.ctx;
    let mut stream = EmissionStream::new(lattice);
    stream.emit_frame(0)?;
    let mut feed = Feed::default();
    feed.add_prosody(&stream.emit_prosody(0));
    let end = lattice.utterance_end();
    for t in 0..=end {
        if t > 0 {
            let words = stream.emit_frame(t)?;
            let prosody = stream.emit_prosody(t);
            let mut chart = shared.chart.write().unwrap();
            let mut st = shared.state.lock().unwrap();
            let st = &mut *st;
            ops::begin_cycle(&ctx, &mut chart, &mut st.agenda, &mut st.results, &mut feed, t, &words, &prosody)?;
            shared.wake.notify_all();
        }
        drain(shared)?;
        if ctx.config.predict {
            let chart = shared.chart.read().unwrap();
            stream.set_prediction_at(t, ctx.grammar.predict_words_for(frontier(&chart, t)));
        }
    }
    Ok(())
}

/// Parses `lattice` on a pool of worker threads. With one worker (and a
/// batch of 1) the result is identical to [`crate::engine::parse_lattice`];
/// with more, and the beam disabled, the passive items and their best
/// scores are. Metrics are `None` unless enabled.
pub fn parallel_parse(
    lattice: &Lattice,
    grammar: &Grammar,
    models: &Models,
    config: &ParserConfig,
    workers: &WorkerConfig,
) -> Result<(ParseResultSet, Option<ParallelMetrics>), EngineError> {
    check_lexicon(grammar, lattice)?;
    let started = Instant::now();
    let ctx = Context::new(grammar, models, config);
    let mut prosody0 = Feed::default();
    prosody0.add_prosody(&EmissionStream::new(lattice).emit_prosody(0));
    let mut chart = Chart::new(grammar, config.weights, prosody0.attribute(&ctx, 0)?);
    let mut agenda = Agenda::new(config.beam_offset);
    ops::start(&ctx, &mut chart, &mut agenda)?;
    let shared = Shared {
        ctx,
        chart: RwLock::new(chart),
        state: Mutex::new(State {
            agenda,
            results: Vec::new(),
            in_flight: 0,
            shutdown: false,
            error: None,
            counts: StepCounts::default(),
        }),
        wake: Condvar::new(),
    };
    let (outcome, locals) = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers.worker_count.max(1)).map(|_| s.spawn(|| worker(&shared, workers.task_batch.max(1)))).collect();
        let outcome = drive(&shared, lattice);
        shared.state.lock().unwrap().shutdown = true;
        shared.wake.notify_all();
        let locals: Vec<Local> = handles.into_iter().map(|h| h.join().expect("worker panicked")).collect();
        (outcome, locals)
    });
    outcome?;
    let st = shared.state.into_inner().unwrap();
    let chart = shared.chart.into_inner().unwrap();
    let mut histogram = vec![0; HISTOGRAM_BUCKETS];
    let (mut busy, mut unify_time) = (Duration::ZERO, Duration::ZERO);
    for l in &locals {
        for (h, c) in histogram.iter_mut().zip(&l.histogram) {
            *h += c;
        }
        busy += l.metrics.busy;
        unify_time += l.unify_time;
    }
    let metrics = ParallelMetrics {
        workers: locals.into_iter().map(|l| l.metrics).collect(),
        histogram,
        unification_share: if busy.is_zero() { 0.0 } else { unify_time.as_secs_f64() / busy.as_secs_f64() },
        wall: started.elapsed(),
    };
    let result = ParseResultSet::build(grammar, chart, &st.results, lattice.utterance_end(), st.agenda.stats(), st.counts);
    Ok((result, workers.metrics_enabled.then_some(metrics)))
}

/// Relative speed-up in percent: `(sequential - parallel) / sequential * 100`.
pub fn gain_percent(sequential: Duration, parallel: Duration) -> f64 {
    let s = sequential.as_secs_f64();
    if s == 0.0 {
        return 0.0;
    }
    (s - parallel.as_secs_f64()) / s * 100.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::engine::parse_lattice;
    use crate::oracle::chart_scores;

    fn models() -> Models {
        Models { bigram: corpus::toy_bigram(), trigram: None }
    }

    #[test]
    fn one_worker_matches_sequential() {
        let g = corpus::toy_grammar();
        let cfg = ParserConfig::default();
        let seq = parse_lattice(&corpus::toy_lattice(), &g, &models(), &cfg).unwrap();
        let (par, metrics) = parallel_parse(&corpus::toy_lattice(), &g, &models(), &cfg, &WorkerConfig::new(1)).unwrap();
        let metrics = metrics.unwrap();
        assert_eq!(seq.results, par.results);
        assert_eq!(seq.stats, par.stats);
        assert_eq!(seq.agenda, par.agenda);
        assert_eq!(metrics.workers.len(), 1);
        assert_eq!(metrics.workers[0].items, seq.agenda.processed);
    }

    #[test]
    fn four_workers_agree_without_beam() {
        let g = corpus::toy_grammar();
        let cfg = ParserConfig::default().without_beam();
        let seq = parse_lattice(&corpus::toy_lattice(), &g, &models(), &cfg).unwrap();
        let (par, metrics) = parallel_parse(&corpus::toy_lattice(), &g, &models(), &cfg, &WorkerConfig::new(4)).unwrap();
        let metrics = metrics.unwrap();
        assert_eq!(chart_scores(&seq.chart), chart_scores(&par.chart));
        assert_eq!(seq.best.unwrap().words, par.best.unwrap().words);
        assert_eq!(metrics.histogram.iter().sum::<u64>(), par.agenda.processed);
    }

    #[test]
    fn errors_propagate() {
        let g = corpus::toy_grammar();
        let lat = crate::decoder::load_lattice("FRAMES 3\nWORD nope 0 3 -1\n").unwrap();
        assert!(matches!(
            parallel_parse(&lat, &g, &models(), &ParserConfig::default(), &WorkerConfig::new(2)),
            Err(EngineError::UnknownWord(_))
        ));
    }

    #[test]
    fn batches_and_disabled_metrics() {
        let g = corpus::toy_grammar();
        let cfg = ParserConfig::default().without_beam();
        let seq = parse_lattice(&corpus::toy_lattice(), &g, &models(), &cfg).unwrap();
        let wc = WorkerConfig { worker_count: 3, task_batch: 4, metrics_enabled: false };
        let (par, metrics) = parallel_parse(&corpus::toy_lattice(), &g, &models(), &cfg, &wc).unwrap();
        assert!(metrics.is_none());
        assert_eq!(chart_scores(&seq.chart), chart_scores(&par.chart));
        assert_eq!(par.agenda.pushed, par.agenda.processed + par.agenda.pruned);
    }

    #[test]
    fn gain() {
        assert_eq!(gain_percent(Duration::from_secs(2), Duration::from_secs(1)), 50.0);
        assert_eq!(gain_percent(Duration::ZERO, Duration::from_secs(1)), 0.0);
        assert!(gain_percent(Duration::from_secs(1), Duration::from_secs(2)) < 0.0);
    }
}
