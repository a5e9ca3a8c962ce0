//! Seeded synthetic inputs: value-noise frames and fixation/saccade gaze
//! traces. All randomness is drawn from ChaCha8 seeded explicitly, so equal
//! seeds give equal outputs on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{chroma_size, Frame};
use crate::fovea::FrameGeometry;
use crate::gaze::{GazeSample, GazeTrace};

/// Environment variable that fixes every pseudo-random source.
pub const SEED_ENV: &str = "FOVEATEC_SEED";
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Seed from `FOVEATEC_SEED`, or [`DEFAULT_SEED`] when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Lattice spacing of the value noise; smaller is busier.
    pub period_px: f64,
    /// Peak deviation of the smooth component around `mean`.
    pub amplitude: f64,
    /// Peak deviation of independent per-pixel grain.
    pub grain: f64,
    pub mean: f64,
    pub with_chroma: bool,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            period_px: 6.0,
            amplitude: 60.0,
            grain: 12.0,
            mean: 128.0,
            with_chroma: false,
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise_plane(
    w: u32,
    h: u32,
    p: &NoiseParams,
    rng: &mut ChaCha8Rng,
) -> Vec<u8> {
    let period = p.period_px.max(1.0);
    let lw = (w as f64 / period).ceil() as usize + 2;
    let lh = (h as f64 / period).ceil() as usize + 2;
    let lattice: Vec<f64> = (0..lw * lh).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mut out = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h {
        let fy = y as f64 / period;
        let (y0, ty) = (fy.floor() as usize, smoothstep(fy.fract()));
        for x in 0..w {
            let fx = x as f64 / period;
            let (x0, tx) = (fx.floor() as usize, smoothstep(fx.fract()));
            let at = |xx: usize, yy: usize| lattice[yy * lw + xx];
            let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
            let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
            let smooth = top * (1.0 - ty) + bottom * ty;
            let grain = if p.grain > 0.0 { rng.random_range(-p.grain..=p.grain) } else { 0.0 };
            let v = p.mean + p.amplitude * smooth + grain;
            out.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

pub fn noise_frame(geom: FrameGeometry, p: &NoiseParams, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let luma = value_noise_plane(geom.width_px(), geom.height_px(), p, &mut rng);
    if !p.with_chroma {
        return Frame::mono(geom, luma).expect("plane sized from geometry");
    }
    let (cw, ch) = chroma_size(&geom);
    let chroma_p = NoiseParams {
        amplitude: p.amplitude / 2.0,
        grain: p.grain / 2.0,
        period_px: p.period_px / 2.0,
        ..*p
    };
    let cb = value_noise_plane(cw, ch, &chroma_p, &mut rng);
    let cr = value_noise_plane(cw, ch, &chroma_p, &mut rng);
    Frame::yuv420(geom, luma, cb, cr).expect("planes sized from geometry")
}

/// `count` frames with seeds `seed, seed + 1, ...`.
pub fn noise_frames(geom: FrameGeometry, p: &NoiseParams, seed: u64, count: usize) -> Vec<Frame> {
    use rayon::prelude::*;
    (0..count as u64)
        .into_par_iter()
        .map(|i| noise_frame(geom, p, seed.wrapping_add(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceParams {
    pub samples: usize,
    pub interval_us: u64,
    /// Fixation length range, microseconds.
    pub fixation_us: (u64, u64),
    /// Standard deviation of fixation targets around the frame centre, as a
    /// fraction of the frame width.
    pub spread_fw: f64,
    /// Per-sample jitter during a fixation, pixels.
    pub jitter_px: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            samples: 900,
            // ~90 Hz
            interval_us: 11_111,
            fixation_us: (80_000, 800_000),
            spread_fw: 0.15,
            jitter_px: 3.0,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fixations around the frame centre joined by instantaneous saccades.
pub fn synthetic_trace(geom: FrameGeometry, p: &TraceParams, seed: u64) -> GazeTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (cx, cy) = geom.center_px();
    let sigma = p.spread_fw * geom.width_px() as f64;
    let w = geom.width_px() as f64 - 1.0;
    let h = geom.height_px() as f64 - 1.0;
    let mut target = (cx, cy);
    let mut fixation_end = 0u64;
    let mut samples = Vec::with_capacity(p.samples);
    for i in 0..p.samples {
        let t = i as u64 * p.interval_us.max(1);
        if t >= fixation_end {
            if i > 0 {
                target = (
                    (cx + sigma * gaussian(&mut rng)).clamp(0.0, w),
                    (cy + sigma * gaussian(&mut rng)).clamp(0.0, h),
                );
            }
            let (lo, hi) = p.fixation_us;
            fixation_end = t + rng.random_range(lo..=hi.max(lo));
        }
        let x = (target.0 + p.jitter_px * gaussian(&mut rng)).clamp(0.0, w);
        let y = (target.1 + p.jitter_px * gaussian(&mut rng)).clamp(0.0, h);
        samples.push(GazeSample::new(t, x as f32, y as f32));
    }
    GazeTrace::new(geom, samples).expect("timestamps strictly increase")
}
