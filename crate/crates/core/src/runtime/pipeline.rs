use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;

use super::config::{InputSource, RuntimeConfig};
use super::latency::{LatencySummary, LatencyTracker};
use super::queue::FrameQueue;
use crate::corpus::{load_corpus, Corpus, PoseFrame};
use crate::error::{Error, Result};
use crate::latent_map::{map_frame, LatentStats};
use crate::onset::OnsetDetector;
use crate::osc::{
    float_args, latent_message, onset_message, OscMessage, OscReceiver, OscSender, POSE_ADDRESS,
};
use crate::vae::{load_checkpoint, VaeModel};

const DEFAULT_LIVE_RATE_HZ: f64 = 30.0;
const LATENCY_WINDOW: usize = 256;
const POLL: Duration = Duration::from_millis(50);

/// Counters reported when the loop exits.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunSummary {
    pub frames_ingested: u64,
    pub frames_mapped: u64,
    /// Evicted from the queue because mapping fell behind ingest.
    pub frames_dropped: u64,
    /// Frames whose output left after the next frame was due.
    pub late_frames: u64,
    pub latent_messages: u64,
    pub onset_messages: u64,
    pub send_errors: u64,
    /// Gaps of more than two frame periods with no input.
    pub underruns: u64,
    pub malformed_datagrams: u64,
    pub ignored_messages: u64,
    pub elapsed_s: f64,
    pub throughput_hz: f64,
    pub latency: LatencySummary,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        format!(
            "frames in {} mapped {} dropped {} late {}\n\
             messages latent {} onset {} send errors {}\n\
             underruns {} malformed {} ignored {}\n\
             elapsed {:.3} s, throughput {:.2} frames/s\n\
             map_frame ms p50 {:.4} p95 {:.4} max {:.4}",
            self.frames_ingested,
            self.frames_mapped,
            self.frames_dropped,
            self.late_frames,
            self.latent_messages,
            self.onset_messages,
            self.send_errors,
            self.underruns,
            self.malformed_datagrams,
            self.ignored_messages,
            self.elapsed_s,
            self.throughput_hz,
            self.latency.p50_ms,
            self.latency.p95_ms,
            self.latency.max_ms,
        )
    }
}

struct Item {
    frame: PoseFrame,
    deadline: Instant,
}

enum Ingest {
    Replay(Corpus),
    Osc(OscReceiver),
}

#[derive(Default)]
struct IngestCounts {
    ingested: u64,
    malformed: u64,
    ignored: u64,
}

/// A started live loop: checkpoint loaded, sockets bound, log opened.
pub struct Pipeline {
    model: VaeModel,
    stats: LatentStats,
    detector: OnsetDetector,
    sender: OscSender,
    ingest: Ingest,
    period: Duration,
    queue_capacity: usize,
    latency_log: Option<(PathBuf, BufWriter<File>)>,
}

impl Pipeline {
    pub fn new(config: &RuntimeConfig) -> Result<Self> {
        config.validate()?;
        let checkpoint = load_checkpoint(&config.checkpoint)?;
        let mut stats = checkpoint.stats()?.clone();
        if let Some(k) = config.k {
            stats = stats.with_k(k)?;
        }
        let model = checkpoint.model;
        let (ingest, rate) = match &config.input {
            InputSource::Replay(path) => {
                let corpus = load_corpus(path)?;
                if corpus.dim() != Some(model.input_dim()) {
                    return Err(Error::DimensionMismatch {
                        context: "replay corpus",
                        expected: model.input_dim(),
                        got: corpus.dim().unwrap_or(0),
                    });
                }
                let rate = config.frame_rate_hz.unwrap_or(corpus.frame_rate_hz());
                (Ingest::Replay(corpus), rate)
            }
            InputSource::Osc { port } => {
                let receiver = OscReceiver::bind(("0.0.0.0", *port))?;
                (
                    Ingest::Osc(receiver),
                    config.frame_rate_hz.unwrap_or(DEFAULT_LIVE_RATE_HZ),
                )
            }
        };
        let detector = OnsetDetector::new(config.onset.clone(), stats.dim())?;
        let sender = OscSender::connect(config.osc_out.as_str())?;
        let latency_log = match &config.latency_log {
            Some(path) => {
                let file = File::create(path).map_err(|e| Error::io(path, e))?;
                let mut w = BufWriter::new(file);
                writeln!(
                    w,
                    "frame,t,map_ms,rolling_p50_ms,rolling_p95_ms,rolling_max_ms"
                )
                .map_err(|e| Error::io(path, e))?;
                Some((path.clone(), w))
            }
            None => None,
        };
        Ok(Self {
            model,
            stats,
            detector,
            sender,
            ingest,
            period: Duration::from_secs_f64(1.0 / rate),
            queue_capacity: config.queue_capacity,
            latency_log,
        })
    }

    /// Bound address of the OSC input socket, if any.
    pub fn input_addr(&self) -> Option<SocketAddr> {
        match &self.ingest {
            Ingest::Osc(r) => r.local_addr().ok(),
            Ingest::Replay(_) => None,
        }
    }

    pub fn output_addr(&self) -> SocketAddr {
        self.sender.destination()
    }

    /// Runs until the replay ends or `shutdown` is set; queued frames are
    /// drained before returning.
    pub fn run(self, shutdown: &AtomicBool) -> Result<RunSummary> {
        let Pipeline {
            model,
            stats,
            mut detector,
            sender,
            ingest,
            period,
            queue_capacity,
            mut latency_log,
        } = self;
        let queue = FrameQueue::new(queue_capacity);
        let abort = AtomicBool::new(false);
        let stop = || shutdown.load(Ordering::SeqCst) || abort.load(Ordering::SeqCst);
        let start = Instant::now();
        let mut summary = RunSummary::default();
        let mut tracker = LatencyTracker::new(LATENCY_WINDOW);

        let (ingest_result, map_result) = std::thread::scope(|s| {
            let handle = s.spawn(|| {
                let r = match ingest {
                    Ingest::Replay(corpus) => replay(&corpus, period, start, &queue, &stop),
                    Ingest::Osc(receiver) => receive(receiver, period, start, &queue, &stop),
                };
                queue.close();
                r
            });
            let r = map_loop(
                &model,
                &stats,
                &mut detector,
                &sender,
                &queue,
                period,
                &mut tracker,
                &mut summary,
                latency_log.as_mut(),
            );
            if r.is_err() {
                abort.store(true, Ordering::SeqCst);
            }
            let ingest_result = handle
                .join()
                .unwrap_or_else(|_| Err(Error::InvalidConfig("ingest worker panicked".into())));
            (ingest_result, r)
        });
        if let Some((path, mut w)) = latency_log {
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        map_result?;
        let counts = ingest_result?;
        summary.frames_ingested = counts.ingested;
        summary.malformed_datagrams = counts.malformed;
        summary.ignored_messages = counts.ignored;
        summary.frames_dropped = queue.dropped();
        summary.elapsed_s = start.elapsed().as_secs_f64();
        summary.throughput_hz = if summary.elapsed_s > 0.0 {
            summary.frames_mapped as f64 / summary.elapsed_s
        } else {
            0.0
        };
        summary.latency = tracker.summary();
        Ok(summary)
    }
}

/// Loads the checkpoint, binds sockets and runs until done or `shutdown`.
pub fn cmd_run(config: &RuntimeConfig, shutdown: &AtomicBool) -> Result<RunSummary> {
    Pipeline::new(config)?.run(shutdown)
}

fn sleep_until(due: Instant, stop: &impl Fn() -> bool) -> bool {
    loop {
        if stop() {
            return false;
        }
        let now = Instant::now();
        if now >= due {
            return true;
        }
        std::thread::sleep((due - now).min(POLL));
    }
}

fn replay(
    corpus: &Corpus,
    period: Duration,
    start: Instant,
    queue: &FrameQueue<Item>,
    stop: &impl Fn() -> bool,
) -> Result<IngestCounts> {
    let mut counts = IngestCounts::default();
    for (i, frame) in corpus.frames().iter().enumerate() {
        let due = start + period.mul_f64(i as f64);
        if !sleep_until(due, stop) {
            break;
        }
        queue.push(Item {
            frame: frame.clone(),
            deadline: due + period,
        });
        counts.ingested += 1;
    }
    Ok(counts)
}

fn receive(
    mut receiver: OscReceiver,
    period: Duration,
    start: Instant,
    queue: &FrameQueue<Item>,
    stop: &impl Fn() -> bool,
) -> Result<IngestCounts> {
    let mut counts = IngestCounts::default();
    while !stop() {
        let Some(msg) = receiver.receive(POLL)? else {
            continue;
        };
        let now = Instant::now();
        if msg.address != POSE_ADDRESS {
            log::debug!("ignoring OSC message to {}", msg.address);
            counts.ignored += 1;
            continue;
        }
        let frame = float_args(&msg)
            .ok_or(Error::NonFinite("pose message"))
            .and_then(|v| PoseFrame::new(v, (now - start).as_secs_f64()));
        match frame {
            Ok(frame) => {
                queue.push(Item {
                    frame,
                    deadline: now + period,
                });
                counts.ingested += 1;
            }
            Err(e) => {
                log::warn!("skipping pose message: {e}");
                counts.ignored += 1;
            }
        }
    }
    counts.malformed = receiver.malformed_count();
    Ok(counts)
}

fn send(sender: &OscSender, msg: OscMessage, summary: &mut RunSummary) -> bool {
    match sender.send(&msg) {
        Ok(()) => true,
        Err(e) => {
            log::warn!("OSC send failed: {e}");
            summary.send_errors += 1;
            false
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn map_loop(
    model: &VaeModel,
    stats: &LatentStats,
    detector: &mut OnsetDetector,
    sender: &OscSender,
    queue: &FrameQueue<Item>,
    period: Duration,
    tracker: &mut LatencyTracker,
    summary: &mut RunSummary,
    mut log: Option<&mut (PathBuf, BufWriter<File>)>,
) -> Result<()> {
    let gap = period * 2;
    let mut last_input = Instant::now();
    let mut in_gap = false;
    loop {
        let Some(item) = queue.pop(gap) else {
            if queue.is_finished() {
                return Ok(());
            }
            if !in_gap && last_input.elapsed() >= gap {
                in_gap = true;
                summary.underruns += 1;
                log::debug!("input underrun: no frame for {:?}", last_input.elapsed());
            }
            continue;
        };
        last_input = Instant::now();
        in_gap = false;

        let t0 = Instant::now();
        let latent = map_frame(model, stats, &item.frame)?;
        let record = tracker.record(t0.elapsed().as_secs_f64() * 1e3);
        summary.frames_mapped += 1;

        if send(sender, latent_message(&latent.to_f32()), summary) {
            summary.latent_messages += 1;
        }
        let t = item.frame.timestamp();
        for event in detector.step_frame(t, latent.values())? {
            if send(sender, onset_message(event.channel), summary) {
                summary.onset_messages += 1;
            }
        }
        if Instant::now() > item.deadline {
            summary.late_frames += 1;
        }
        if let Some((path, w)) = log.as_mut() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                record.frame,
                t,
                record.map_ms,
                record.rolling_p50_ms,
                record.rolling_p95_ms,
                record.rolling_max_ms
            )
            .map_err(|e| Error::io(&*path, e))?;
        }
    }
}
