//! Gaze server: one receiver task publishing the freshest gaze (with its
//! offset map) into a single-slot snapshot, and a frame-tick encoder that
//! reads the snapshot and never waits for gaze.

use std::fs;
use std::io::{self, BufWriter, ErrorKind, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};

use crate::codec::{encode_frame, EncodeStats, Frame};
use crate::fovea::{
    build_qp_map_resolved, gaze_px_to_mb, FrameGeometry, QpOffsetMap, ResolvedFoveation,
};
use crate::gaze::{GazeSample, GazeSlot, StreamDecoder};

use super::{ClockMode, SessionConfig, SessionError};

const READ_POLL: Duration = Duration::from_millis(20);
const ACCEPT_POLL: Duration = Duration::from_millis(2);

pub fn bind_gaze_listener(cfg: &SessionConfig) -> Result<TcpListener, SessionError> {
    TcpListener::bind((cfg.bind_addr, cfg.gaze_port)).map_err(SessionError::Bind)
}

/// A sample as it came off the wire, with the server's receive time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReceivedSample {
    pub sample: GazeSample,
    pub receive_us: u64,
}

/// Per-tick record of the gaze anchor used and the resulting map.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub frame_index: usize,
    pub tick_us: u64,
    /// `None` before any gaze arrived; the map is then centred on the frame.
    pub gaze: Option<GazeSample>,
    pub gaze_px: (f64, f64),
    pub stale: bool,
    pub map: Arc<QpOffsetMap>,
}

/// Timeline of the gaze sample behind one encoded frame, server clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyRecord {
    pub frame_index: usize,
    /// Producer clock.
    pub sample_timestamp_us: u64,
    pub receive_us: u64,
    pub map_ready_us: u64,
    pub encode_start_us: u64,
}

impl LatencyRecord {
    pub fn receive_to_map_us(&self) -> u64 {
        self.map_ready_us.saturating_sub(self.receive_us)
    }

    pub fn map_to_encode_us(&self) -> u64 {
        self.encode_start_us.saturating_sub(self.map_ready_us)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SessionSummary {
    pub ticks: Vec<TickRecord>,
    pub stats: Vec<EncodeStats>,
    pub latency: Vec<LatencyRecord>,
    pub received: Vec<ReceivedSample>,
    /// Only filled when the configuration asks for it.
    pub bitstreams: Vec<Vec<u8>>,
}

impl SessionSummary {
    pub fn write_stats_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "frame_index,tick_us,gaze_x,gaze_y,gaze_col,gaze_row,stale,total_bits,stream_bytes,mean_offset,encode_time_us"
        )?;
        for (t, s) in self.ticks.iter().zip(&self.stats) {
            let mb = t.map.gaze_mb();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{:.6},{}",
                t.frame_index,
                t.tick_us,
                t.gaze_px.0,
                t.gaze_px.1,
                mb.col,
                mb.row,
                t.stale as u8,
                s.total_bits,
                s.stream_bytes,
                s.mean_offset,
                s.encode_time_us
            )?;
        }
        Ok(())
    }

    pub fn write_latency_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "frame_index,sample_timestamp_us,receive_us,map_ready_us,encode_start_us,receive_to_map_us,map_to_encode_us"
        )?;
        for r in &self.latency {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.frame_index,
                r.sample_timestamp_us,
                r.receive_us,
                r.map_ready_us,
                r.encode_start_us,
                r.receive_to_map_us(),
                r.map_to_encode_us()
            )?;
        }
        Ok(())
    }

    pub fn write_received_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "timestamp_us,x_px,y_px,valid,receive_us")?;
        for r in &self.received {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.sample.timestamp_us, r.sample.x_px, r.sample.y_px, r.sample.valid as u8, r.receive_us
            )?;
        }
        Ok(())
    }

    /// Writes `stats.csv`, `latency.csv` and `gaze_log.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let create = |name: &str| fs::File::create(dir.join(name)).map(BufWriter::new);
        self.write_stats_csv(create("stats.csv")?)?;
        self.write_latency_csv(create("latency.csv")?)?;
        self.write_received_csv(create("gaze_log.csv")?)?;
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Clock(Instant);

impl Clock {
    fn now_us(&self) -> u64 {
        self.0.elapsed().as_micros() as u64
    }
}

/// What the receiver hands to the encoder.
struct Snapshot {
    sample: GazeSample,
    receive_us: u64,
    map: Arc<QpOffsetMap>,
    map_ready_us: u64,
}

fn map_for(
    fov: &ResolvedFoveation,
    geom: &FrameGeometry,
    gaze_px: (f64, f64),
) -> Result<QpOffsetMap, SessionError> {
    Ok(build_qp_map_resolved(fov, geom, gaze_px_to_mb(geom, gaze_px)?))
}

fn accept(
    listener: &TcpListener,
    timeout: Duration,
    stop: &AtomicBool,
) -> Result<Option<TcpStream>, SessionError> {
    listener.set_nonblocking(true)?;
    let deadline = Instant::now() + timeout;
    loop {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("gaze client connected from {peer}");
                stream.set_nonblocking(false)?;
                stream.set_nodelay(true)?;
                return Ok(Some(stream));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => {
                if stop.load(Ordering::Relaxed) || Instant::now() >= deadline {
                    return Ok(None);
                }
                thread::sleep(ACCEPT_POLL);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Encodes frames and collects everything the summary needs.
struct FrameSink<'a> {
    cfg: &'a SessionConfig,
    frames: &'a [Frame],
    summary: SessionSummary,
}

impl<'a> FrameSink<'a> {
    fn new(cfg: &'a SessionConfig, frames: &'a [Frame]) -> Result<Self, SessionError> {
        if let Some(dir) = &cfg.out_dir {
            fs::create_dir_all(dir)?;
        }
        Ok(Self {
            cfg,
            frames,
            summary: SessionSummary::default(),
        })
    }

    fn emit(&mut self, tick: TickRecord) -> Result<(), SessionError> {
        let frame = &self.frames[tick.frame_index % self.frames.len()];
        let (bits, stats) = encode_frame(frame, &tick.map, &self.cfg.codec)?;
        if let Some(dir) = &self.cfg.out_dir {
            fs::write(dir.join(format!("frame_{:05}.fvb", tick.frame_index)), &bits)?;
        }
        if self.cfg.retain_bitstreams {
            self.summary.bitstreams.push(bits);
        }
        self.summary.stats.push(stats);
        self.summary.ticks.push(tick);
        Ok(())
    }
}

/// Runs one session on an already bound listener and returns its summary.
///
/// Accepts a single gaze connection. With [`ClockMode::Wall`] frames are
/// encoded at `fps` while gaze arrives concurrently; with
/// [`ClockMode::Virtual`] the gaze stream is drained first and each sample
/// is treated as received at its own timestamp.
pub fn run_server(
    cfg: &SessionConfig,
    frames: &[Frame],
    listener: TcpListener,
) -> Result<SessionSummary, SessionError> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(SessionError::Config("no input frames".into()));
    }
    if let Some(f) = frames.iter().find(|f| *f.geometry() != cfg.geometry) {
        return Err(SessionError::Config(format!(
            "frame geometry {} differs from session geometry {}",
            f.geometry(),
            cfg.geometry
        )));
    }
    match cfg.clock {
        ClockMode::Wall => run_wall(cfg, frames, listener),
        ClockMode::Virtual => run_virtual(cfg, frames, listener),
    }
}

fn run_wall(
    cfg: &SessionConfig,
    frames: &[Frame],
    listener: TcpListener,
) -> Result<SessionSummary, SessionError> {
    let geom = cfg.geometry;
    let fov = cfg.foveation.resolve(&geom)?;
    let clock = Clock(Instant::now());
    let slot = Arc::new(GazeSlot::<Snapshot>::new());
    let stop = Arc::new(AtomicBool::new(false));
    let failed = Arc::new(AtomicBool::new(false));

    let receiver = {
        let slot = slot.clone();
        let stop = stop.clone();
        let failed = failed.clone();
        let accept_timeout = cfg.accept_timeout;
        thread::Builder::new()
            .name("gaze-receiver".into())
            .spawn(move || {
                let res = receive_wall(&listener, accept_timeout, &fov, &geom, &slot, clock, &stop);
                if res.is_err() {
                    failed.store(true, Ordering::Release);
                }
                res
            })?
    };

    let center = geom.center_px();
    let center_map = Arc::new(map_for(&fov, &geom, center)?);
    let mut sink = FrameSink::new(cfg, frames)?;
    let mut outcome = Ok(());
    for k in 0..cfg.frame_count {
        let due = Duration::from_micros(cfg.tick_offset_us(k));
        let elapsed = clock.0.elapsed();
        if elapsed < due {
            thread::sleep(due - elapsed);
        }
        if failed.load(Ordering::Acquire) {
            break;
        }
        let tick_us = clock.now_us();
        let snap = slot.latest();
        let tick = match &snap {
            Some(s) => TickRecord {
                frame_index: k,
                tick_us,
                gaze: Some(s.sample),
                gaze_px: s.sample.position(),
                stale: tick_us.saturating_sub(s.receive_us) > cfg.filter.max_age_us,
                map: s.map.clone(),
            },
            None => TickRecord {
                frame_index: k,
                tick_us,
                gaze: None,
                gaze_px: center,
                stale: false,
                map: center_map.clone(),
            },
        };
        let encode_start_us = clock.now_us();
        if let Some(s) = &snap {
            sink.summary.latency.push(LatencyRecord {
                frame_index: k,
                sample_timestamp_us: s.sample.timestamp_us,
                receive_us: s.receive_us,
                map_ready_us: s.map_ready_us,
                encode_start_us,
            });
        }
        if let Err(e) = sink.emit(tick) {
            outcome = Err(e);
            break;
        }
    }
    stop.store(true, Ordering::Relaxed);
    let received = receiver
        .join()
        .map_err(|_| SessionError::Config("gaze receiver panicked".into()))?;
    outcome?;
    sink.summary.received = received?;
    Ok(sink.summary)
}

fn receive_wall(
    listener: &TcpListener,
    accept_timeout: Duration,
    fov: &ResolvedFoveation,
    geom: &FrameGeometry,
    slot: &GazeSlot<Snapshot>,
    clock: Clock,
    stop: &AtomicBool,
) -> Result<Vec<ReceivedSample>, SessionError> {
    let mut received = Vec::new();
    let Some(mut stream) = accept(listener, accept_timeout, stop)? else {
        debug!("no gaze client; maps stay centred");
        return Ok(received);
    };
    stream.set_read_timeout(Some(READ_POLL))?;
    let mut decoder = StreamDecoder::new();
    let mut buf = [0u8; 4096];
    let mut batch = Vec::new();
    let mut newest: Option<u64> = None;
    while !stop.load(Ordering::Relaxed) {
        let n = match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e)
                if matches!(
                    e.kind(),
                    ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                ) =>
            {
                continue
            }
            Err(e) => return Err(e.into()),
        };
        batch.clear();
        decoder.feed(&buf[..n], &mut batch)?;
        let receive_us = clock.now_us();
        for s in &batch {
            received.push(ReceivedSample {
                sample: *s,
                receive_us,
            });
            // latest wins: never replace a newer sample with an older one
            if !s.valid || newest.is_some_and(|t| s.timestamp_us <= t) {
                continue;
            }
            newest = Some(s.timestamp_us);
            let map = map_for(fov, geom, s.position())?;
            slot.publish(Snapshot {
                sample: *s,
                receive_us,
                map: Arc::new(map),
                map_ready_us: clock.now_us(),
            });
        }
    }
    if decoder.pending() > 0 {
        warn!("gaze stream ended with {} bytes of a partial record", decoder.pending());
    }
    Ok(received)
}

fn run_virtual(
    cfg: &SessionConfig,
    frames: &[Frame],
    listener: TcpListener,
) -> Result<SessionSummary, SessionError> {
    let geom = cfg.geometry;
    let fov = cfg.foveation.resolve(&geom)?;
    let mut received = Vec::new();
    if let Some(mut stream) = accept(&listener, cfg.accept_timeout, &AtomicBool::new(false))? {
        let mut bytes = Vec::new();
        stream.read_to_end(&mut bytes)?;
        let mut decoder = StreamDecoder::new();
        let mut samples = Vec::new();
        decoder.feed(&bytes, &mut samples)?;
        if decoder.pending() > 0 {
            warn!("gaze stream ended with {} bytes of a partial record", decoder.pending());
        }
        received = samples
            .into_iter()
            .map(|s| ReceivedSample {
                sample: s,
                receive_us: s.timestamp_us,
            })
            .collect();
    }

    // on the virtual timeline a sample is available from its own timestamp
    let mut timeline: Vec<GazeSample> =
        received.iter().map(|r| r.sample).filter(|s| s.valid).collect();
    timeline.sort_by_key(|s| s.timestamp_us);
    timeline.dedup_by_key(|s| s.timestamp_us);
    let origin = timeline.first().map_or(0, |s| s.timestamp_us);

    let center = geom.center_px();
    let center_map = Arc::new(map_for(&fov, &geom, center)?);
    let mut sink = FrameSink::new(cfg, frames)?;
    let mut cached: Option<(u64, Arc<QpOffsetMap>)> = None;
    for k in 0..cfg.frame_count {
        let tick_us = origin + cfg.tick_offset_us(k);
        let idx = timeline.partition_point(|s| s.timestamp_us <= tick_us);
        let tick = match idx.checked_sub(1).map(|i| timeline[i]) {
            Some(s) => {
                let map = match &cached {
                    Some((t, m)) if *t == s.timestamp_us => m.clone(),
                    _ => {
                        let m = Arc::new(map_for(&fov, &geom, s.position())?);
                        cached = Some((s.timestamp_us, m.clone()));
                        m
                    }
                };
                sink.summary.latency.push(LatencyRecord {
                    frame_index: k,
                    sample_timestamp_us: s.timestamp_us,
                    receive_us: s.timestamp_us,
                    map_ready_us: s.timestamp_us,
                    encode_start_us: tick_us,
                });
                TickRecord {
                    frame_index: k,
                    tick_us,
                    gaze: Some(s),
                    gaze_px: s.position(),
                    stale: tick_us - s.timestamp_us > cfg.filter.max_age_us,
                    map,
                }
            }
            None => TickRecord {
                frame_index: k,
                tick_us,
                gaze: None,
                gaze_px: center,
                stale: false,
                map: center_map.clone(),
            },
        };
        sink.emit(tick)?;
    }
    sink.summary.received = received;
    Ok(sink.summary)
}
