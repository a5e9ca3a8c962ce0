//! Acceptance suite. Runs without the libtest harness so each criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion
//! does. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p foveatec-core --test acceptance -- 3 5`.

use std::collections::HashMap;
use std::fs;
use std::net::TcpListener;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foveatec::analytics::{empirical_cdf, gaze_change_rate, gaze_moments};
use foveatec::codec::{read_header, CodecConfig, Frame};
use foveatec::fovea::{build_qp_map, gaze_px_to_mb, qp_offset, MbIndex};
use foveatec::gaze::{decode_sample, encode_sample, GazeError, GazeSample, GazeTrace, StreamDecoder, STREAM_MAGIC};
use foveatec::harness::{
    bench_sweep, bind_gaze_listener, measure_latency, run_client, run_server, Pacing, SessionSummary,
    SweepRow, SweepSpec,
};
use foveatec::synth::{noise_frames, seed_from_env, synthetic_trace, NoiseParams, TraceParams};
use foveatec::{ClockMode, FovealSize, FoveationConfig, FrameGeometry, SessionConfig};

// Tolerances and sizes.
const OFFSET_REL_TOL: f64 = 1e-9;
const OFFSET_TUPLES: usize = 100_000;
/// 1 - e^(-1/2)
const OFFSET_AT_W: f64 = 0.393_469_340_287_366_6;
const CORPUS_FRAMES: usize = 50;
const MIN_SAVING: f64 = 0.20;
const SATURATION_RATIO: f64 = 0.25;
const GAP_MONOTONE_TOL_DB: f64 = 0.1;
const ORACLE_TRACES: u64 = 100;
const ORACLE_TRACE_LEN: usize = 1_000;
const WIRE_SAMPLES: usize = 1_000_000;
const WIRE_SPLIT_TRIALS: usize = 300;
const E2E_FRAMES: usize = 100;
const LATENCY_FRAMES: usize = 250;
const P99_LIMIT_US: f64 = 5_000.0;

const QO_SWEEP: [f64; 5] = [0.0, 4.0, 8.0, 12.0, 16.0];
const FW8: FovealSize = FovealSize::FwFraction(1.0 / 8.0);

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn geom_1366() -> FrameGeometry {
    FrameGeometry::with_default_mb(1366, 768).unwrap()
}

/// Shared noise corpus and sweep cells, so criteria 3-5 reuse encodes.
struct Corpus {
    frames: Vec<Frame>,
    cells: HashMap<(u64, String), SweepRow>,
}

impl Corpus {
    fn frames(&mut self) -> &[Frame] {
        if self.frames.is_empty() {
            self.frames = noise_frames(geom_1366(), &NoiseParams::default(), seed_from_env(), CORPUS_FRAMES);
        }
        &self.frames
    }

    fn row(&mut self, qo_max: f64, w: FovealSize) -> Result<SweepRow, String> {
        let key = (qo_max.to_bits(), w.to_string());
        if let Some(r) = self.cells.get(&key) {
            return Ok(r.clone());
        }
        let spec = SweepSpec { qo_max: vec![qo_max], w: vec![w] };
        let rows = bench_sweep(self.frames(), None, 50.0, &spec, &CodecConfig::default())
            .map_err(|e| e.to_string())?;
        self.cells.insert(key, rows[0].clone());
        Ok(rows[0].clone())
    }
}

// --- 1 -------------------------------------------------------------------

/// `1 - e^-x` from series and a hand-rolled exponential, independent of the
/// library's `exp_m1` path.
fn oracle_one_minus_exp_neg(x: f64) -> f64 {
    const INV_E: f64 = 0.367_879_441_171_442_32;
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        // x - x²/2! + x³/3! - ...
        let mut term = x;
        let mut sum = 0.0;
        for n in 1..40 {
            sum += term;
            term *= -x / (n + 1) as f64;
        }
        return sum;
    }
    if x > 60.0 {
        return 1.0;
    }
    let n = x.floor() as u32;
    let f = x - n as f64;
    let mut e_neg_f = 0.0;
    let mut term = 1.0;
    for k in 0..40 {
        e_neg_f += term;
        term *= -f / (k + 1) as f64;
    }
    let mut e_neg_n = 1.0;
    for _ in 0..n {
        e_neg_n *= INV_E;
    }
    1.0 - e_neg_n * e_neg_f
}

fn criterion_1(_: &mut Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_env() ^ 1);
    let mut worst = 0.0f64;
    for i in 0..OFFSET_TUPLES {
        let width = rng.random_range(16..=4096u32);
        let height = rng.random_range(16..=2304u32);
        let geom = FrameGeometry::with_default_mb(width, height).unwrap();
        let qo_max = rng.random_range(0.0..=51.0);
        let (w, w_px) = if rng.random_bool(0.5) {
            let frac = rng.random_range(1.0 / 64.0..=1.0);
            (FovealSize::FwFraction(frac), frac * width as f64)
        } else {
            let px = rng.random_range(4.0..=2000.0);
            (FovealSize::AbsolutePx(px), px)
        };
        let gaze = (
            rng.random_range(-100.0..width as f64 + 100.0),
            rng.random_range(-100.0..height as f64 + 100.0),
        );
        let mb = MbIndex::new(rng.random_range(0..geom.mb_cols()), rng.random_range(0..geom.mb_rows()));

        let cfg = FoveationConfig::new(qo_max, w);
        let resolved = cfg.resolve(&geom).map_err(|e| e.to_string())?;
        let gaze_mb = gaze_px_to_mb(&geom, gaze).map_err(|e| e.to_string())?;
        let got = qp_offset(&resolved, gaze_mb, mb);

        // independent: clamp by integer division, integer squared distance
        let clamp_idx = |v: f64, cells: u32| -> i64 {
            let idx = if v < 0.0 { 0 } else { v as i64 / 16 };
            idx.min(cells as i64 - 1)
        };
        let (gc, gr) = (clamp_idx(gaze.0, geom.mb_cols()), clamp_idx(gaze.1, geom.mb_rows()));
        let d2 = (mb.col as i64 - gc).pow(2) + (mb.row as i64 - gr).pow(2);
        let w_mb = w_px / 16.0;
        let want = qo_max * oracle_one_minus_exp_neg(d2 as f64 / (2.0 * w_mb * w_mb));

        if want == 0.0 {
            ensure!(got == 0.0, "tuple {i}: expected 0, got {got}");
        } else {
            let rel = (got - want).abs() / want.abs();
            worst = worst.max(rel);
            ensure!(
                rel <= OFFSET_REL_TOL,
                "tuple {i}: qp_offset {got} vs oracle {want} (rel {rel:e})"
            );
        }
        if i % 1000 == 0 {
            let map = build_qp_map(&cfg, &geom, gaze).map_err(|e| e.to_string())?;
            ensure!(map.get(mb) == got, "tuple {i}: map entry differs from qp_offset");
        }
    }
    // W = 64 px = 4 macroblocks; gaze on mb (0,0), target 4 columns away
    let geom = geom_1366();
    let cfg = FoveationConfig::new(16.0, FovealSize::AbsolutePx(64.0));
    let map = build_qp_map(&cfg, &geom, (1.0, 1.0)).map_err(|e| e.to_string())?;
    let at_w = map.get(MbIndex::new(4, 0));
    ensure!(
        (at_w - 16.0 * OFFSET_AT_W).abs() <= 1e-12 * 16.0,
        "offset at distance W is {at_w}, want {}",
        16.0 * OFFSET_AT_W
    );
    Ok(format!(
        "{OFFSET_TUPLES} tuples, worst rel err {worst:.2e}; offset at W = {at_w:.6} = {:.4}·QO_max",
        at_w / 16.0
    ))
}

// --- 2 -------------------------------------------------------------------

fn criterion_2(_: &mut Corpus) -> Outcome {
    let g = geom_1366();
    let map = build_qp_map(&FoveationConfig::default(), &g, g.center_px()).map_err(|e| e.to_string())?;
    ensure!(
        (g.mb_cols(), g.mb_rows(), g.mb_count()) == (86, 48, 4128),
        "grid is {}x{} = {}",
        g.mb_cols(),
        g.mb_rows(),
        g.mb_count()
    );
    ensure!(map.offsets().len() == 4128, "map has {} cells", map.offsets().len());
    ensure!(map.rows().count() == 48, "map has {} rows", map.rows().count());
    Ok("1366x768 -> 86x48 = 4128 macroblocks".into())
}

// --- 3, 4, 5 -------------------------------------------------------------

fn criterion_3(c: &mut Corpus) -> Outcome {
    let rows = QO_SWEEP.iter().map(|&q| c.row(q, FW8)).collect::<Result<Vec<_>, _>>()?;
    let medians: Vec<f64> = rows.iter().map(|r| r.median_bits).collect();
    for pair in medians.windows(2) {
        ensure!(pair[1] < pair[0], "median bits not strictly decreasing: {medians:?}");
    }
    let saving = 1.0 - medians[4] / medians[0];
    ensure!(saving >= MIN_SAVING, "saving {:.1}% below {:.0}%", saving * 100.0, MIN_SAVING * 100.0);
    Ok(format!(
        "median bits {:?}; saving at QO_max=16: {:.1}%",
        medians.iter().map(|m| m.round() as u64).collect::<Vec<_>>(),
        saving * 100.0
    ))
}

fn criterion_4(c: &mut Corpus) -> Outcome {
    let b2 = c.row(16.0, FovealSize::FwFraction(0.5))?.median_bits;
    let b8 = c.row(16.0, FW8)?.median_bits;
    let b16 = c.row(16.0, FovealSize::FwFraction(1.0 / 16.0))?.median_bits;
    let small = (b8 - b16).abs();
    let large = (b2 - b8).abs();
    let ratio = small / large;
    ensure!(
        ratio < SATURATION_RATIO,
        "|b(fw/8)-b(fw/16)| = {small:.0} vs |b(fw/2)-b(fw/8)| = {large:.0}: ratio {ratio:.3}"
    );
    Ok(format!(
        "median bits fw/2 {b2:.0}, fw/8 {b8:.0}, fw/16 {b16:.0}; ratio {ratio:.3} < {SATURATION_RATIO}"
    ))
}

fn criterion_5(c: &mut Corpus) -> Outcome {
    let rows = QO_SWEEP.iter().map(|&q| c.row(q, FW8)).collect::<Result<Vec<_>, _>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.mean_ewpsnr_db - r.mean_psnr_db).collect();
    for (r, g) in rows.iter().zip(&gaps) {
        // without foveation both metrics estimate the same error, so the
        // baseline gap is zero up to sampling noise
        let floor = if r.qo_max == 0.0 { -GAP_MONOTONE_TOL_DB } else { 0.0 };
        ensure!(*g >= floor, "EWPSNR - PSNR = {g:.4} dB < {floor} at QO_max={}", r.qo_max);
    }
    for (i, pair) in gaps.windows(2).enumerate() {
        ensure!(
            pair[1] >= pair[0] - GAP_MONOTONE_TOL_DB,
            "gap falls from {:.4} to {:.4} dB at QO_max={}",
            pair[0],
            pair[1],
            QO_SWEEP[i + 1]
        );
    }
    Ok(format!(
        "gap (dB) {:?} (QO_max=0 baseline within ±{GAP_MONOTONE_TOL_DB} dB noise); PSNR {:?}",
        gaps.iter().map(|g| (g * 10_000.0).round() / 10_000.0).collect::<Vec<_>>(),
        rows.iter().map(|r| (r.mean_psnr_db * 100.0).round() / 100.0).collect::<Vec<_>>()
    ))
}

// --- 6 -------------------------------------------------------------------

/// (first index, sample count) per moment, straight from the definition: a
/// moment extends while every sample so far lies within `r` of its first.
fn brute_moments(s: &[GazeSample], r: f64) -> Vec<(usize, usize)> {
    let within = |a: &GazeSample, b: &GazeSample| {
        let dx = a.x_px as f64 - b.x_px as f64;
        let dy = a.y_px as f64 - b.y_px as f64;
        dx.hypot(dy) <= r
    };
    let mut out = Vec::new();
    let mut start = 0;
    while start < s.len() {
        let mut len = 1;
        while start + len < s.len() && (start..=start + len).all(|k| within(&s[start], &s[k])) {
            len += 1;
        }
        out.push((start, len));
        start += len;
    }
    out
}

fn brute_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
        .into_iter()
        .map(|v| (v, values.iter().filter(|&&x| x <= v).count() as f64 / values.len() as f64))
        .collect()
}

fn criterion_6(_: &mut Corpus) -> Outcome {
    let geom = geom_1366();
    let params = TraceParams { samples: ORACLE_TRACE_LEN, ..TraceParams::default() };
    let radii = [geom.width_px() as f64 / 8.0, geom.width_px() as f64 / 4.0];
    let mut moments_checked = 0;
    for seed in 0..ORACLE_TRACES {
        let trace = synthetic_trace(geom, &params, seed_from_env().wrapping_add(seed));
        let s = trace.samples();
        for &r in &radii {
            let got = gaze_moments(&trace, r).map_err(|e| e.to_string())?;
            let want = brute_moments(s, r);
            let got_idx: Vec<_> = got.iter().map(|m| (m.first_index, m.sample_count)).collect();
            ensure!(got_idx == want, "trace {seed}, radius {r}: moments differ");
            for m in &got {
                let last = &s[m.first_index + m.sample_count - 1];
                ensure!(
                    m.start_us == s[m.first_index].timestamp_us && m.end_us == last.timestamp_us,
                    "trace {seed}: moment span wrong"
                );
            }
            let durations: Vec<f64> = got.iter().map(|m| m.duration_us() as f64 / 1000.0).collect();
            let cdf = empirical_cdf(&durations).map_err(|e| e.to_string())?;
            ensure!(cdf == brute_cdf(&durations), "trace {seed}, radius {r}: CDF differs");
            moments_checked += got.len();
        }
    }
    let pair = GazeTrace::new(
        geom,
        vec![GazeSample::new(0, 100.0, 100.0), GazeSample::new(10_000, 150.0, 100.0)],
    )
    .map_err(|e| e.to_string())?;
    let rate = gaze_change_rate(&pair).map_err(|e| e.to_string())?;
    ensure!(rate == vec![(10_000, 5000.0)], "50 px / 10 ms gave {rate:?}");
    Ok(format!(
        "{ORACLE_TRACES} traces x {ORACLE_TRACE_LEN} samples, {moments_checked} moments at FW/8 and FW/4 match; 50px/10ms = 5000 px/s"
    ))
}

// --- 7 -------------------------------------------------------------------

fn random_sample(rng: &mut ChaCha8Rng) -> GazeSample {
    let mut finite = || loop {
        let v = f32::from_bits(rng.random());
        if v.is_finite() {
            return v;
        }
    };
    let (x, y) = (finite(), finite());
    GazeSample { timestamp_us: rng.random(), x_px: x, y_px: y, valid: rng.random_bool(0.9) }
}

fn same_bits(a: &GazeSample, b: &GazeSample) -> bool {
    a.timestamp_us == b.timestamp_us
        && a.x_px.to_bits() == b.x_px.to_bits()
        && a.y_px.to_bits() == b.y_px.to_bits()
        && a.valid == b.valid
}

/// Feeds `bytes` to a fresh decoder in random chunks.
fn decode_split(bytes: &[u8], rng: &mut ChaCha8Rng, max_chunk: usize) -> Result<Vec<GazeSample>, GazeError> {
    let mut dec = StreamDecoder::new();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let n = rng.random_range(0..=max_chunk).min(bytes.len() - pos);
        dec.feed(&bytes[pos..pos + n], &mut out)?;
        pos += n;
    }
    Ok(out)
}

fn criterion_7(_: &mut Corpus) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from_env() ^ 7);
    let samples: Vec<GazeSample> = (0..WIRE_SAMPLES).map(|_| random_sample(&mut rng)).collect();
    let mut stream = STREAM_MAGIC.to_vec();
    for (i, s) in samples.iter().enumerate() {
        let rec = encode_sample(s).map_err(|e| e.to_string())?;
        let back = decode_sample(&rec).map_err(|e| format!("sample {i}: {e}"))?;
        ensure!(same_bits(s, &back), "sample {i}: {s:?} came back as {back:?}");
        stream.extend_from_slice(&rec);
    }
    let all = decode_split(&stream, &mut rng, 4096).map_err(|e| e.to_string())?;
    ensure!(all.len() == WIRE_SAMPLES, "recovered {} of {WIRE_SAMPLES}", all.len());
    ensure!(all.iter().zip(&samples).all(|(a, b)| same_bits(a, b)), "streamed samples differ");

    for trial in 0..WIRE_SPLIT_TRIALS {
        let n = rng.random_range(0..=500usize);
        let bytes = &stream[..4 + n * 20];
        let chunk = rng.random_range(1..=64);
        let got = decode_split(bytes, &mut rng, chunk).map_err(|e| e.to_string())?;
        ensure!(got.len() == n, "trial {trial}: {n} records split gave {}", got.len());
        ensure!(got.iter().zip(&samples).all(|(a, b)| same_bits(a, b)), "trial {trial}: content differs");
    }

    let mut bad_cases = 0;
    for magic in [&b"FVG2"[..], b"fvg1", b"XXXX", b"\0\0\0\0", b"GVF1", b"X"] {
        let mut bytes = magic.to_vec();
        bytes.extend_from_slice(&stream[4..44]);
        let res = decode_split(&bytes, &mut rng, 8);
        ensure!(matches!(res, Err(GazeError::BadMagic(_))), "magic {magic:?} accepted: {res:?}");
        bad_cases += 1;
    }
    Ok(format!(
        "{WIRE_SAMPLES} fuzzed round-trips, {WIRE_SPLIT_TRIALS} random splits, {bad_cases} bad magics rejected"
    ))
}

// --- 8 -------------------------------------------------------------------

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("foveatec-acceptance-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn session(cfg: &SessionConfig, frames: &[Frame], trace: &GazeTrace, pacing: Pacing) -> Result<SessionSummary, String> {
    let listener: TcpListener = bind_gaze_listener(cfg).map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?.to_string();
    let trace = trace.clone();
    let client = thread::spawn(move || run_client(&trace, pacing, &addr, None));
    let summary = run_server(cfg, frames, listener).map_err(|e| e.to_string())?;
    client
        .join()
        .map_err(|_| "client panicked".to_string())?
        .map_err(|e| e.to_string())?;
    Ok(summary)
}

/// `(frame_index, gaze_x, gaze_y)` as logged in `stats.csv`.
fn logged_gaze(dir: &Path) -> Result<Vec<(usize, f64, f64)>, String> {
    let text = fs::read_to_string(dir.join("stats.csv")).map_err(|e| e.to_string())?;
    text.lines()
        .skip(1)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| format!("{line}: {e}"));
            Ok((num(0)? as usize, num(2)?, num(3)?))
        })
        .collect()
}

fn criterion_8(_: &mut Corpus) -> Outcome {
    let geom = geom_1366();
    let frames = noise_frames(geom, &NoiseParams::default(), seed_from_env(), 4);
    let trace = synthetic_trace(geom, &TraceParams::default(), seed_from_env());
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = temp_dir(&format!("e2e{run}"));
        let mut cfg = SessionConfig::new(geom);
        cfg.gaze_port = 0;
        cfg.clock = ClockMode::Virtual;
        cfg.frame_count = E2E_FRAMES;
        cfg.out_dir = Some(dir.clone());
        let summary = session(&cfg, &frames, &trace, Pacing::MaxSpeed)?;
        summary.write_outputs(&dir).map_err(|e| e.to_string())?;
        ensure!(
            summary.received.len() == trace.len(),
            "run {run}: server received {} of {} samples",
            summary.received.len(),
            trace.len()
        );
        outputs.push((dir, cfg, summary));
    }
    let (dir_a, cfg, summary) = &outputs[0];
    let dir_b = &outputs[1].0;
    let mut total_bytes = 0;
    for k in 0..E2E_FRAMES {
        let name = format!("frame_{k:05}.fvb");
        let a = fs::read(dir_a.join(&name)).map_err(|e| format!("{name}: {e}"))?;
        let b = fs::read(dir_b.join(&name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(a == b, "{name} differs between runs");
        total_bytes += a.len();
    }

    // offline maps from the logged gaze equal the maps in the bitstreams
    let logged = logged_gaze(dir_a)?;
    ensure!(logged.len() == E2E_FRAMES, "stats.csv has {} rows", logged.len());
    for ((k, x, y), tick) in logged.iter().zip(&summary.ticks) {
        let offline = build_qp_map(&cfg.foveation, &geom, (*x, *y)).map_err(|e| e.to_string())?;
        ensure!(offline == *tick.map, "frame {k}: server map differs from offline map");
        let bits = fs::read(dir_a.join(format!("frame_{k:05}.fvb"))).map_err(|e| e.to_string())?;
        let header = read_header(&bits).map_err(|e| e.to_string())?;
        let as_f32: Vec<f32> = offline.offsets().iter().map(|&o| o as f32).collect();
        ensure!(header.offsets == as_f32, "frame {k}: bitstream offsets differ from offline map");
        // latest-wins on the virtual timeline
        let want = trace.at(tick.tick_us).copied();
        ensure!(tick.gaze == want, "frame {k}: anchored on {:?}, expected {want:?}", tick.gaze);
    }
    for (dir, ..) in &outputs {
        let _ = fs::remove_dir_all(dir);
    }
    Ok(format!(
        "2 runs x {E2E_FRAMES} frames byte-identical ({total_bytes} bytes each); {} logged maps match offline",
        logged.len()
    ))
}

// --- 9 -------------------------------------------------------------------

fn criterion_9(_: &mut Corpus) -> Outcome {
    let geom = geom_1366();
    let frames = noise_frames(geom, &NoiseParams::default(), seed_from_env(), 4);
    let trace = synthetic_trace(geom, &TraceParams::default(), seed_from_env());
    let mut cfg = SessionConfig::new(geom);
    cfg.gaze_port = 0;
    cfg.clock = ClockMode::Wall;
    cfg.frame_count = LATENCY_FRAMES;
    let listener = bind_gaze_listener(&cfg).map_err(|e| e.to_string())?;
    let addr = listener.local_addr().map_err(|e| e.to_string())?.to_string();
    let client = thread::spawn(move || run_client(&trace, Pacing::Rate(90.0), &addr, None));
    let summary = run_server(&cfg, &frames, listener).map_err(|e| e.to_string())?;
    // the server hangs up before the trace ends; a partial report is expected
    let sent = client
        .join()
        .map_err(|_| "client panicked".to_string())?
        .map_err(|e| e.to_string())?
        .samples_sent;
    let report = measure_latency(&summary.latency).map_err(|e| e.to_string())?;
    ensure!(
        report.receive_to_map_p99_us < P99_LIMIT_US,
        "p99 receive->map {:.0} us >= {P99_LIMIT_US} us",
        report.receive_to_map_p99_us
    );
    Ok(format!(
        "{} records ({} samples sent); receive->map p50 {:.0} us, p99 {:.0} us, max {:.0} us",
        report.records, sent, report.receive_to_map_p50_us, report.receive_to_map_p99_us, report.receive_to_map_max_us
    ))
}

// -------------------------------------------------------------------------

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn(&mut Corpus) -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "offset formula exactness", budget: Duration::from_secs(5), run: criterion_1 },
        Criterion { id: 2, name: "macroblock grid arithmetic", budget: Duration::from_secs(1), run: criterion_2 },
        Criterion { id: 3, name: "rate falls with QO_max", budget: Duration::from_secs(120), run: criterion_3 },
        Criterion { id: 4, name: "W saturation below FW/8", budget: Duration::from_secs(120), run: criterion_4 },
        Criterion { id: 5, name: "EWPSNR-PSNR gap", budget: Duration::from_secs(120), run: criterion_5 },
        Criterion { id: 6, name: "analytics vs brute force", budget: Duration::from_secs(30), run: criterion_6 },
        Criterion { id: 7, name: "gaze wire protocol", budget: Duration::from_secs(30), run: criterion_7 },
        Criterion { id: 8, name: "end-to-end determinism", budget: Duration::from_secs(60), run: criterion_8 },
        Criterion { id: 9, name: "gaze-to-map latency", budget: Duration::from_secs(60), run: criterion_9 },
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    // keep panics from interleaving with the report
    panic::set_hook(Box::new(|_| {}));
    let mut corpus = Corpus { frames: Vec::new(), cells: HashMap::new() };
    let mut failed = 0;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(|| (c.run)(&mut corpus)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(format!("panicked: {msg}"))
            });
        let elapsed = start.elapsed();
        let res = match res {
            Ok(detail) if elapsed > c.budget => Err(format!(
                "over time budget ({:.1}s > {:.0}s); {detail}",
                elapsed.as_secs_f64(),
                c.budget.as_secs_f64()
            )),
            other => other,
        };
        let (tag, detail) = match &res {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {}. {} ({:.2}s): {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}
