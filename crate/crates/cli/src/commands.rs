use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::info;

use foveatec::analytics::{default_bandwidth, empirical_cdf, gaze_change_rate, gaze_moments, heatmap};
use foveatec::codec::{read_y4m, write_y4m, Y4mColor, Y4mHeader};
use foveatec::gaze::{parse_trace_csv, FilterParams};
use foveatec::harness::{
    bench_sweep, bind_gaze_listener, measure_latency, run_client, run_server, write_sweep_csv, Pacing,
    SweepSpec, DEFAULT_GAZE_PORT,
};
use foveatec::metrics::evaluate;
use foveatec::synth::{noise_frames, seed_from_env, synthetic_trace, NoiseParams, TraceParams};
use foveatec::{
    build_qp_map, decode_frame, encode_frame, ClockMode, CodecConfig, FovealSize, FoveationConfig, Frame,
    FrameGeometry, GazeTrace, SessionConfig, SessionError,
};

use crate::config::{pick, FileConfig};
use crate::{
    AnalyzeArgs, BenchArgs, CliError, ClientArgs, DecodeArgs, EncodeArgs, FoveaArgs, GazeArgs, GeometryArgs,
    MetricsArgs, PacingArg, QpmapArgs, ServeArgs, SourceArgs,
};

const DEFAULT_SYNTHETIC_FRAMES: usize = 50;
const DEFAULT_FPS: f64 = 50.0;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// File if given, else stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn geometry(args: &GeometryArgs, file: &FileConfig) -> Result<FrameGeometry, CliError> {
    Ok(FrameGeometry::with_default_mb(
        pick(args.width, file.width, 1366),
        pick(args.height, file.height, 768),
    )?)
}

fn foveation(args: &FoveaArgs, file: &FileConfig) -> Result<FoveationConfig, CliError> {
    let defaults = FoveationConfig::default();
    let file_w = file.w.as_deref().map(str::parse::<FovealSize>).transpose()?;
    Ok(FoveationConfig::new(
        pick(args.qo_max, file.qo_max, defaults.qo_max),
        pick(args.w, file_w, defaults.w),
    ))
}

fn codec(base_q: Option<f64>, file: &FileConfig) -> Result<CodecConfig, CliError> {
    let c = CodecConfig::new(pick(base_q, file.base_q, CodecConfig::default().base_q));
    c.validate()?;
    Ok(c)
}

/// Frames from a Y4M file (with its frame rate) or the seeded generator.
fn load_frames(
    source: &SourceArgs,
    geom: &GeometryArgs,
    file: &FileConfig,
) -> Result<(Vec<Frame>, Option<f64>), CliError> {
    match &source.input {
        Some(path) => {
            let video = read_y4m(BufReader::new(File::open(path).map_err(io_err(path))?))?;
            if video.frames.is_empty() {
                return Err(CliError::Input(format!("{}: no frames", path.display())));
            }
            let g = video.header.geometry;
            if geom.width.is_some_and(|w| w != g.width_px()) || geom.height.is_some_and(|h| h != g.height_px()) {
                return Err(CliError::Input(format!("{}: frames are {g}, flags ask otherwise", path.display())));
            }
            let (n, d) = video.header.fps;
            info!("{}: {} frames of {g}", path.display(), video.frames.len());
            Ok((video.frames, Some(n as f64 / d as f64)))
        }
        None => {
            let count = source.synthetic.unwrap_or(DEFAULT_SYNTHETIC_FRAMES);
            if count == 0 {
                return Err(CliError::Input("need at least one synthetic frame".into()));
            }
            let g = geometry(geom, file)?;
            info!("generating {count} synthetic frames of {g} (seed {})", seed_from_env());
            Ok((noise_frames(g, &NoiseParams::default(), seed_from_env(), count), None))
        }
    }
}

fn load_trace(path: &Path, geom: FrameGeometry) -> Result<GazeTrace, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_trace_csv(&text, geom).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Input(format!("{name} must be positive, got {v}")))
    }
}

/// Per-frame gaze from a fixed point, a trace, or the frame centre.
enum GazeSource {
    Fixed((f64, f64)),
    Trace(GazeTrace),
}

impl GazeSource {
    fn new(args: &GazeArgs, geom: FrameGeometry) -> Result<Self, CliError> {
        Ok(match (&args.trace, args.gaze) {
            (Some(path), _) => GazeSource::Trace(load_trace(path, geom)?),
            (None, Some(p)) => GazeSource::Fixed(p),
            (None, None) => GazeSource::Fixed(geom.center_px()),
        })
    }

    fn at(&self, k: usize, fps: f64) -> (f64, f64) {
        match self {
            GazeSource::Fixed(p) => *p,
            GazeSource::Trace(t) => t.gaze_for_frame(k, fps),
        }
    }
}

pub fn qpmap(a: QpmapArgs, file: &FileConfig) -> Result<(), CliError> {
    let geom = geometry(&a.geometry, file)?;
    let cfg = foveation(&a.fovea, file)?;
    let map = build_qp_map(&cfg, &geom, a.gaze.unwrap_or(geom.center_px()))?;
    let mut out = output(a.out.as_deref())?;
    map.write_csv(&mut out).and_then(|_| out.flush()).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(p) = &a.pgm {
        let mut w = create(p)?;
        map.write_pgm(&mut w).and_then(|_| w.flush()).map_err(io_err(p))?;
    }
    Ok(())
}

pub fn encode(a: EncodeArgs, file: &FileConfig) -> Result<(), CliError> {
    let (frames, y4m_fps) = load_frames(&a.source, &a.geometry, file)?;
    let geom = *frames[0].geometry();
    let fov = foveation(&a.fovea, file)?;
    fov.resolve(&geom)?;
    let codec = codec(a.base_q, file)?;
    let fps = positive("fps", a.fps.or(y4m_fps).or(file.fps).unwrap_or(DEFAULT_FPS))?;
    let gaze = GazeSource::new(&a.gaze, geom)?;
    fs::create_dir_all(&a.out_dir).map_err(io_err(&a.out_dir))?;

    let stats_path = a.out_dir.join("stats.csv");
    let mut stats_csv = create(&stats_path)?;
    let mut total_bits = 0u64;
    let mut rows = String::from("frame_index,gaze_x,gaze_y,total_bits,stream_bytes,mean_offset,encode_time_us\n");
    for (k, frame) in frames.iter().enumerate() {
        let g = gaze.at(k, fps);
        let map = build_qp_map(&fov, &geom, g)?;
        let (bits, stats) = encode_frame(frame, &map, &codec)?;
        let path = a.out_dir.join(format!("frame_{k:05}.fvb"));
        fs::write(&path, &bits).map_err(io_err(&path))?;
        rows += &format!(
            "{k},{},{},{},{},{:.6},{}\n",
            g.0, g.1, stats.total_bits, stats.stream_bytes, stats.mean_offset, stats.encode_time_us
        );
        total_bits += stats.total_bits;
    }
    stats_csv
        .write_all(rows.as_bytes())
        .and_then(|_| stats_csv.flush())
        .map_err(io_err(&stats_path))?;
    println!(
        "encoded {} frames of {geom}: {total_bits} bits, {:.0} bits/frame",
        frames.len(),
        total_bits as f64 / frames.len() as f64
    );
    Ok(())
}

fn fvb_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    if let [dir] = inputs {
        if dir.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(dir)
                .map_err(io_err(dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".fvb"))
                })
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(CliError::Input(format!("{}: no frame_*.fvb files", dir.display())));
            }
            return Ok(found);
        }
    }
    Ok(inputs.to_vec())
}

pub fn decode(a: DecodeArgs) -> Result<(), CliError> {
    let mut frames = Vec::new();
    for path in fvb_inputs(&a.inputs)? {
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let frame = decode_frame(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if let Some(first) = frames.first().map(Frame::geometry) {
            if first != frame.geometry() {
                return Err(CliError::Input(format!(
                    "{}: frame is {}, earlier frames are {first}",
                    path.display(),
                    frame.geometry()
                )));
            }
        }
        frames.push(frame);
    }
    let chroma = frames.iter().filter(|f| f.has_chroma()).count();
    let color = match chroma {
        0 => Y4mColor::Mono,
        n if n == frames.len() => Y4mColor::C420,
        _ => return Err(CliError::Input("inputs mix mono and 4:2:0 frames".into())),
    };
    let header = Y4mHeader::new(*frames[0].geometry(), color, a.fps);
    write_y4m(create(&a.out)?, &header, &frames)?;
    println!("decoded {} frames to {}", frames.len(), a.out.display());
    Ok(())
}

pub fn metrics(a: MetricsArgs, file: &FileConfig) -> Result<(), CliError> {
    let read = |p: &Path| -> Result<_, CliError> {
        read_y4m(BufReader::new(File::open(p).map_err(io_err(p))?))
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    };
    let reference = read(&a.reference)?;
    let test = read(&a.test)?;
    if reference.frames.len() != test.frames.len() {
        return Err(CliError::Input(format!(
            "reference has {} frames, test has {}",
            reference.frames.len(),
            test.frames.len()
        )));
    }
    let geom = reference.header.geometry;
    let scale = match a.scale.or(file.weight_scale_px) {
        Some(s) => positive("scale", s)?,
        None => foveation(&a.fovea, file)?.resolve(&geom)?.w_px(),
    };
    let (n, d) = reference.header.fps;
    let fps = positive("fps", a.fps.unwrap_or(n as f64 / d as f64))?;
    let gaze = GazeSource::new(&a.gaze, geom)?;
    let mut out = output(a.out.as_deref())?;
    let mut text = String::from("frame_index,psnr_db,ewpsnr_db\n");
    for (k, (r, t)) in reference.frames.iter().zip(&test.frames).enumerate() {
        let q = evaluate(r, t, gaze.at(k, fps), scale)?;
        text += &format!("{k},{:.4},{:.4}\n", q.psnr_db, q.ewpsnr_db);
    }
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Input(e.to_string()))
}

pub fn analyze(a: AnalyzeArgs, file: &FileConfig) -> Result<(), CliError> {
    let geom = geometry(&a.geometry, file)?;
    let trace = load_trace(&a.trace, geom)?;
    let radii: Vec<FovealSize> = match (&a.radius[..], &file.radius) {
        ([], Some(r)) => r.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
        ([], None) => vec![FovealSize::FwFraction(1.0 / 8.0), FovealSize::FwFraction(1.0 / 4.0)],
        (r, _) => r.to_vec(),
    };
    let cell = pick(a.cell, file.cell_px, 16);
    let bandwidth = a.bandwidth.or(file.bandwidth_px).unwrap_or_else(|| default_bandwidth(&geom));
    fs::create_dir_all(&a.out_dir).map_err(io_err(&a.out_dir))?;
    let write = |name: &str, body: &str| -> Result<(), CliError> {
        let p = a.out_dir.join(name);
        fs::write(&p, body).map_err(io_err(&p))
    };

    let mut moments_csv = String::from("radius,duration_ms,fraction\n");
    for r in &radii {
        let r_px = r.resolve_px(&geom)?;
        let moments = gaze_moments(&trace, r_px)?;
        let durations: Vec<f64> = moments.iter().map(|m| m.duration_us() as f64 / 1000.0).collect();
        let cdf = empirical_cdf(&durations)?;
        for (v, f) in &cdf {
            moments_csv += &format!("{r},{v},{f:.6}\n");
        }
        let long = durations.iter().filter(|&&d| d > 100.0).count();
        println!(
            "radius {r} ({r_px:.1} px): {} moments, {:.1}% longer than 100 ms",
            moments.len(),
            100.0 * long as f64 / moments.len() as f64
        );
    }
    write("moments_cdf.csv", &moments_csv)?;

    let rates: Vec<f64> = gaze_change_rate(&trace)?.into_iter().map(|(_, v)| v).collect();
    let mut rates_csv = String::from("rate_px_per_s,fraction\n");
    for (v, f) in empirical_cdf(&rates)? {
        rates_csv += &format!("{v},{f:.6}\n");
    }
    write("rates_cdf.csv", &rates_csv)?;

    let grid = heatmap(&trace, cell, bandwidth)?;
    let mut csv = Vec::new();
    grid.write_csv(&mut csv).map_err(|e| CliError::Input(e.to_string()))?;
    write("heatmap.csv", &String::from_utf8_lossy(&csv))?;
    let pgm_path = a.out_dir.join("heatmap.pgm");
    let mut pgm = create(&pgm_path)?;
    grid.write_pgm(&mut pgm).and_then(|_| pgm.flush()).map_err(io_err(&pgm_path))?;
    let (c, r) = grid.argmax();
    println!(
        "heatmap {}x{} cells of {cell} px, bandwidth {bandwidth:.1} px, peak near ({}, {})",
        grid.cols,
        grid.rows,
        (c as f64 + 0.5) * cell as f64,
        (r as f64 + 0.5) * cell as f64
    );
    Ok(())
}

fn filter_params(file: &FileConfig, max_age_ms: Option<u64>) -> Result<FilterParams, CliError> {
    let d = FilterParams::default();
    let p = FilterParams {
        alpha_min: file.alpha_min.unwrap_or(d.alpha_min),
        v_ref_px_per_s: file.v_ref.unwrap_or(d.v_ref_px_per_s),
        max_age_us: max_age_ms.or(file.max_age_ms).map_or(d.max_age_us, |ms| ms * 1000),
    };
    p.validate()?;
    Ok(p)
}

pub fn serve(a: ServeArgs, file: &FileConfig) -> Result<(), CliError> {
    let (frames, y4m_fps) = load_frames(&a.source, &a.geometry, file)?;
    let mut cfg = SessionConfig::new(*frames[0].geometry());
    cfg.foveation = foveation(&a.fovea, file)?;
    cfg.codec = codec(a.base_q, file)?;
    let bind = a.bind.as_deref().or(file.bind.as_deref()).unwrap_or("127.0.0.1");
    cfg.bind_addr = bind
        .parse::<IpAddr>()
        .map_err(|_| CliError::Input(format!("bad bind address {bind:?}")))?;
    cfg.gaze_port = pick(a.port, file.gaze_port, DEFAULT_GAZE_PORT);
    cfg.fps = positive("fps", a.fps.or(y4m_fps).or(file.fps).unwrap_or(DEFAULT_FPS))?;
    cfg.frame_count = match (a.frames, a.duration) {
        (Some(n), _) => n,
        (None, Some(secs)) => SessionConfig::frames_for_duration(cfg.fps, positive("duration", secs)?),
        (None, None) => file.frames.unwrap_or(cfg.frame_count),
    };
    cfg.pacing_hz = file.pacing_hz.unwrap_or(cfg.pacing_hz);
    cfg.filter = filter_params(file, a.max_age_ms)?;
    cfg.clock = if a.virtual_clock { ClockMode::Virtual } else { ClockMode::Wall };
    if let Some(ms) = a.accept_timeout_ms.or(file.accept_timeout_ms) {
        cfg.accept_timeout = Duration::from_millis(ms);
    }
    cfg.out_dir = a.out_dir.clone();
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;

    let listener = bind_gaze_listener(&cfg)?;
    let addr = listener.local_addr().map_err(SessionError::from)?;
    // announced on stdout so scripts can connect to an ephemeral port
    println!("listening for gaze on {addr}");
    io::stdout().flush().ok();

    let summary = run_server(&cfg, &frames, listener)?;
    let bits: u64 = summary.stats.iter().map(|s| s.total_bits).sum();
    println!(
        "encoded {} frames, received {} gaze samples, {:.0} bits/frame",
        summary.stats.len(),
        summary.received.len(),
        bits as f64 / summary.stats.len() as f64
    );
    if let Some(dir) = &cfg.out_dir {
        summary.write_outputs(dir).map_err(io_err(dir))?;
    }
    match measure_latency(&summary.latency) {
        Ok(report) => {
            println!(
                "receive->map latency: p50 {:.0} us, p99 {:.0} us over {} frames",
                report.receive_to_map_p50_us, report.receive_to_map_p99_us, report.records
            );
            if let Some(dir) = &cfg.out_dir {
                let p = dir.join("latency_cdf.csv");
                let mut w = create(&p)?;
                report.write_cdf_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&p))?;
            }
        }
        Err(SessionError::TooFewRecords { need, got }) => {
            println!("latency: only {got} frames had gaze, need {need} for percentiles");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

pub fn client(a: ClientArgs, file: &FileConfig) -> Result<(), CliError> {
    let geom = geometry(&a.geometry, file)?;
    let trace = match &a.trace {
        Some(p) => load_trace(p, geom)?,
        None => synthetic_trace(geom, &TraceParams::default(), seed_from_env()),
    };
    let endpoint = a
        .endpoint
        .clone()
        .or_else(|| file.endpoint.clone())
        .unwrap_or_else(|| format!("127.0.0.1:{}", file.gaze_port.unwrap_or(DEFAULT_GAZE_PORT)));
    let pacing = match a.pacing.or(file.pacing_hz.map(PacingArg::Hz)) {
        None | Some(PacingArg::RealTime) => Pacing::RealTime,
        Some(PacingArg::Max) => Pacing::MaxSpeed,
        Some(PacingArg::Hz(hz)) => Pacing::Rate(hz),
    };
    let filter = if a.no_filter { None } else { Some(filter_params(file, None)?) };
    let report = run_client(&trace, pacing, &endpoint, filter)?;
    println!(
        "sent {}/{} samples in {:.3} s (expected {:.3} s, drift {:+.2}%)",
        report.samples_sent,
        trace.len(),
        report.elapsed.as_secs_f64(),
        report.expected.as_secs_f64(),
        report.drift_fraction * 100.0
    );
    match report.error {
        Some(e) => Err(CliError::Session(format!("replay interrupted: {e}"))),
        None => Ok(()),
    }
}

pub fn bench(a: BenchArgs, file: &FileConfig) -> Result<(), CliError> {
    let (frames, y4m_fps) = load_frames(&a.source, &a.geometry, file)?;
    let geom = *frames[0].geometry();
    let trace = a.trace.as_deref().map(|p| load_trace(p, geom)).transpose()?;
    let fov = foveation(&FoveaArgs::default(), file)?;
    let spec = SweepSpec {
        qo_max: if a.qo_max.is_empty() { vec![0.0, 4.0, 8.0, 12.0, 16.0] } else { a.qo_max },
        w: if a.w.is_empty() { vec![fov.w] } else { a.w },
    };
    let fps = positive("fps", a.fps.or(y4m_fps).or(file.fps).unwrap_or(DEFAULT_FPS))?;
    let rows = bench_sweep(&frames, trace.as_ref(), fps, &spec, &codec(a.base_q, file)?)?;
    let mut out = output(a.out.as_deref())?;
    write_sweep_csv(&mut out, &rows)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Input(e.to_string()))
}
