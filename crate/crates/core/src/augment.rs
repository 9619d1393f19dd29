//! Segment-level stochastic augmentation.
//!
//! A plan picks non-overlapping windows covering roughly a fixed fraction of
//! the clip and draws, per window, which effects run and with what
//! parameters. Applying the plan runs the effect chain on each window,
//! restores the window's original peak and writes it back in place.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio_io::{resample_slice, AudioBuffer};

pub type Interval = (f64, f64);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AugmentError {
    #[error("length mismatch: segment has {segment} samples, noise has {noise}")]
    LengthMismatch { segment: usize, noise: usize },
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoomSize {
    Small,
    Medium,
    Large,
}

impl RoomSize {
    pub const ALL: [RoomSize; 3] = [RoomSize::Small, RoomSize::Medium, RoomSize::Large];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub coverage: f64,
    pub window_s: Interval,
    pub p_noise: f64,
    pub p_echo: f64,
    pub p_reverb: f64,
    pub p_clip: f64,
    pub p_bandpass: f64,
    pub p_pitch: f64,
    pub p_stretch: f64,
    pub snr_db: Interval,
    pub echo_taps: (u32, u32),
    pub echo_delay_ms: Interval,
    pub echo_decay: Interval,
    pub rt60_small: Interval,
    pub rt60_medium: Interval,
    pub rt60_large: Interval,
    pub clip_frac: Interval,
    pub band_hz: Interval,
    pub pitch_semitones: Interval,
    pub stretch_rate: Interval,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            coverage: 0.30,
            window_s: (3.0, 6.0),
            p_noise: 0.65,
            p_echo: 0.55,
            p_reverb: 0.60,
            p_clip: 0.30,
            p_bandpass: 0.20,
            p_pitch: 0.25,
            p_stretch: 0.25,
            snr_db: (5.0, 20.0),
            echo_taps: (2, 4),
            echo_delay_ms: (150.0, 800.0),
            echo_decay: (0.4, 0.75),
            rt60_small: (0.2, 0.4),
            rt60_medium: (0.4, 0.8),
            rt60_large: (0.8, 1.5),
            clip_frac: (0.3, 0.7),
            band_hz: (300.0, 3400.0),
            pitch_semitones: (-3.0, 3.0),
            stretch_rate: (0.80, 1.20),
        }
    }
}

impl AugmentConfig {
    /// Every effect disabled.
    pub fn disabled() -> Self {
        Self {
            p_noise: 0.0,
            p_echo: 0.0,
            p_reverb: 0.0,
            p_clip: 0.0,
            p_bandpass: 0.0,
            p_pitch: 0.0,
            p_stretch: 0.0,
            ..Self::default()
        }
    }

    pub fn rt60_range(&self, room: RoomSize) -> Interval {
        match room {
            RoomSize::Small => self.rt60_small,
            RoomSize::Medium => self.rt60_medium,
            RoomSize::Large => self.rt60_large,
        }
    }

    fn probabilities(&self) -> [(&'static str, f64); 7] {
        [
            ("p_noise", self.p_noise),
            ("p_echo", self.p_echo),
            ("p_reverb", self.p_reverb),
            ("p_clip", self.p_clip),
            ("p_bandpass", self.p_bandpass),
            ("p_pitch", self.p_pitch),
            ("p_stretch", self.p_stretch),
        ]
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: String| Err(AugmentError::InvalidConfig(m));
        for (name, p) in self.probabilities() {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return bad(format!("coverage = {} must lie in (0, 1)", self.coverage));
        }
        let intervals = [
            ("window_s", self.window_s),
            ("snr_db", self.snr_db),
            ("echo_delay_ms", self.echo_delay_ms),
            ("echo_decay", self.echo_decay),
            ("rt60_small", self.rt60_small),
            ("rt60_medium", self.rt60_medium),
            ("rt60_large", self.rt60_large),
            ("clip_frac", self.clip_frac),
            ("band_hz", self.band_hz),
            ("pitch_semitones", self.pitch_semitones),
            ("stretch_rate", self.stretch_rate),
        ];
        for (name, (lo, hi)) in intervals {
            if !(lo <= hi) {
                return bad(format!("{name}: lower bound {lo} exceeds upper bound {hi}"));
            }
        }
        if self.echo_taps.0 > self.echo_taps.1 || self.echo_taps.0 == 0 {
            return bad("echo_taps must be a non-empty range of positive counts".into());
        }
        if self.window_s.0 <= 0.0 {
            return bad("window_s lower bound must be positive".into());
        }
        if self.echo_delay_ms.0 <= 0.0 {
            return bad("echo delays must be positive".into());
        }
        if !(self.echo_decay.0 > 0.0 && self.echo_decay.1 < 1.0) {
            return bad("echo_decay must lie in (0, 1)".into());
        }
        if self.rt60_small.0 <= 0.0 || self.rt60_medium.0 <= 0.0 || self.rt60_large.0 <= 0.0 {
            return bad("rt60 ranges must be positive".into());
        }
        if !(self.clip_frac.0 > 0.0) {
            return bad("clip_frac must be positive".into());
        }
        if !(self.band_hz.0 > 0.0) {
            return bad("band_hz lower edge must be positive".into());
        }
        if self.pitch_semitones.0 < -12.0 || self.pitch_semitones.1 > 12.0 {
            return bad("pitch_semitones must lie within [-12, 12]".into());
        }
        if self.stretch_rate.0 < 0.5 || self.stretch_rate.1 > 2.0 {
            return bad("stretch_rate must lie within [0.5, 2]".into());
        }
        Ok(())
    }

    fn all_disabled(&self) -> bool {
        self.probabilities().iter().all(|(_, p)| *p == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub snr_db: f64,
    /// Fraction of white noise in the white/pink mixture.
    pub white_weight: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoTap {
    pub delay_ms: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverbDraw {
    pub room: RoomSize,
    pub rt60_s: f64,
    pub seed: u64,
}

/// Effects selected for one window, each with its sampled parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EffectDraws {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseDraw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub echo: Option<Vec<EchoTap>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverb: Option<ReverbDraw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_frac: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandpass_hz: Option<Interval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_semitones: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stretch_rate: Option<f64>,
}

impl EffectDraws {
    pub fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub effects: EffectDraws,
}

impl PlannedWindow {
    pub fn len_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub seed: u64,
    pub duration_s: f64,
    /// Sorted by start time, pairwise disjoint.
    pub windows: Vec<PlannedWindow>,
}

impl AugmentPlan {
    pub fn covered_s(&self) -> f64 {
        self.windows.iter().map(PlannedWindow::len_s).sum()
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): Interval) -> f64 {
    if hi <= lo {
        lo
    } else {
        lo + (hi - lo) * rng.random::<f64>()
    }
}

fn draw_effects<R: Rng>(rng: &mut R, cfg: &AugmentConfig) -> EffectDraws {
    let mut d = EffectDraws::default();
    if rng.random_bool(cfg.p_noise) {
        d.noise = Some(NoiseDraw {
            snr_db: uniform(rng, cfg.snr_db),
            white_weight: rng.random(),
            seed: rng.random(),
        });
    }
    if rng.random_bool(cfg.p_echo) {
        let taps = rng.random_range(cfg.echo_taps.0..=cfg.echo_taps.1);
        let decay = uniform(rng, cfg.echo_decay);
        d.echo = Some(
            (1..=taps)
                .map(|k| EchoTap {
                    delay_ms: uniform(rng, cfg.echo_delay_ms),
                    amplitude: decay.powi(k as i32),
                })
                .collect(),
        );
    }
    if rng.random_bool(cfg.p_reverb) {
        let room = RoomSize::ALL[rng.random_range(0..3)];
        d.reverb = Some(ReverbDraw {
            room,
            rt60_s: uniform(rng, cfg.rt60_range(room)),
            seed: rng.random(),
        });
    }
    if rng.random_bool(cfg.p_clip) {
        d.clip_frac = Some(uniform(rng, cfg.clip_frac));
    }
    if rng.random_bool(cfg.p_bandpass) {
        d.bandpass_hz = Some(cfg.band_hz);
    }
    if rng.random_bool(cfg.p_pitch) {
        d.pitch_semitones = Some(uniform(rng, cfg.pitch_semitones));
    }
    if rng.random_bool(cfg.p_stretch) {
        d.stretch_rate = Some(uniform(rng, cfg.stretch_rate));
    }
    d
}

/// Bound on consecutive draws that selected no effect.
const MAX_EMPTY_DRAWS: usize = 1000;

/// Schedule augmentation windows for a clip of `duration_s` seconds.
///
/// Windows are placed until their total length reaches `coverage * duration_s`
/// or no gap of at least the minimum window length is left. A window whose
/// effect draw came up empty is discarded and redrawn, so every planned
/// window modifies audio.
pub fn plan_augmentation(duration_s: f64, cfg: &AugmentConfig, seed: u64) -> AugmentPlan {
    let mut plan = AugmentPlan {
        seed,
        duration_s,
        windows: Vec::new(),
    };
    if !(duration_s >= cfg.window_s.0) || cfg.all_disabled() {
        return plan;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = cfg.coverage * duration_s;
    let mut covered = 0.0;
    let mut empty_draws = 0;
    while covered < target {
        let gaps: Vec<Interval> = free_gaps(&plan.windows, duration_s)
            .into_iter()
            .filter(|(a, b)| b - a >= cfg.window_s.0)
            .collect();
        let Some(max_gap) = gaps.iter().map(|(a, b)| b - a).reduce(f64::max) else {
            break;
        };
        let len = uniform(&mut rng, cfg.window_s).min(max_gap);
        let slack: Vec<(f64, f64)> = gaps
            .iter()
            .filter(|(a, b)| b - a >= len)
            .map(|&(a, b)| (a, b - len - a))
            .collect();
        let measure: f64 = slack.iter().map(|(_, s)| s).sum();
        let mut u = rng.random::<f64>() * measure;
        let mut start = slack[slack.len() - 1].0 + slack[slack.len() - 1].1;
        for &(a, s) in &slack {
            if u <= s {
                start = a + u;
                break;
            }
            u -= s;
        }
        let effects = draw_effects(&mut rng, cfg);
        if effects.is_empty() {
            empty_draws += 1;
            if empty_draws >= MAX_EMPTY_DRAWS {
                break;
            }
            continue;
        }
        empty_draws = 0;
        let window = PlannedWindow {
            start_s: start,
            end_s: (start + len).min(duration_s),
            effects,
        };
        covered += window.len_s();
        let at = plan.windows.partition_point(|w| w.start_s < window.start_s);
        plan.windows.insert(at, window);
    }
    plan
}

fn free_gaps(windows: &[PlannedWindow], duration_s: f64) -> Vec<Interval> {
    let mut gaps = Vec::with_capacity(windows.len() + 1);
    let mut cursor = 0.0;
    for w in windows {
        if w.start_s > cursor {
            gaps.push((cursor, w.start_s));
        }
        cursor = w.end_s;
    }
    if duration_s > cursor {
        gaps.push((cursor, duration_s));
    }
    gaps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    Pink,
}

/// Pinking filter: three poles and three zeros approximating a 1/f power slope.
const PINK_B: [f64; 4] = [0.049922035, -0.095993537, 0.050612699, -0.004408786];
const PINK_A: [f64; 4] = [1.0, -2.494956002, 2.017265875, -0.522189400];

fn peak_f64(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, s| m.max(s.abs()))
}

fn normalize_f64(mut x: Vec<f64>, target: f64) -> Vec<f64> {
    let p = peak_f64(&x);
    if p > 0.0 {
        let g = target / p;
        x.iter_mut().for_each(|s| *s *= g);
    }
    x
}

/// White (uniform in `[-1, 1]`) or pink noise, peak-normalized to 1.
pub fn gen_noise<R: Rng>(n: usize, kind: NoiseKind, rng: &mut R) -> Vec<f64> {
    let white: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let out = match kind {
        NoiseKind::White => white,
        NoiseKind::Pink => {
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for k in 0..4 {
                    if i >= k {
                        acc += PINK_B[k] * white[i - k];
                        if k > 0 {
                            acc -= PINK_A[k] * y[i - k];
                        }
                    }
                }
                y[i] = acc;
            }
            y
        }
    };
    normalize_f64(out, 1.0)
}

fn power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64
    }
}

/// Level used for noise added to an all-zero segment, in dBFS (RMS).
pub const SILENT_NOISE_DBFS: f64 = -40.0;

/// Add `noise` scaled to the requested signal-to-noise ratio.
pub fn mix_noise(seg: &[f64], noise: &[f64], snr_db: f64) -> Result<Vec<f64>, AugmentError> {
    if seg.len() != noise.len() {
        return Err(AugmentError::LengthMismatch {
            segment: seg.len(),
            noise: noise.len(),
        });
    }
    let p_noise = power(noise);
    if p_noise == 0.0 {
        return Ok(seg.to_vec());
    }
    let p_seg = power(seg);
    let target_noise_power = if p_seg > 0.0 {
        p_seg / 10f64.powf(snr_db / 10.0)
    } else {
        10f64.powf(SILENT_NOISE_DBFS / 10.0)
    };
    let gain = (target_noise_power / p_noise).sqrt();
    Ok(seg.iter().zip(noise).map(|(s, n)| s + gain * n).collect())
}

/// Multi-tap feed-forward echo; the output keeps the input length.
pub fn apply_echo(seg: &[f64], taps: &[EchoTap], fs: u32) -> Vec<f64> {
    let mut out = seg.to_vec();
    for tap in taps {
        let d = (tap.delay_ms * fs as f64 / 1000.0).round() as usize;
        for n in d..seg.len() {
            out[n] += tap.amplitude * seg[n - d];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RirSpec {
    pub room_size: RoomSize,
    pub rt60_s: f64,
    pub fs: u32,
}

/// 60 dB of amplitude decay expressed as a natural-log factor: ln(1000).
const DECAY_60DB: f64 = 6.907755278982137;

/// Exponentially decaying Gaussian noise with a unit direct path.
pub fn synth_rir<R: Rng>(spec: &RirSpec, rng: &mut R) -> Vec<f64> {
    let len = ((spec.rt60_s * spec.fs as f64).round() as usize).max(1);
    let tau = spec.fs as f64 * spec.rt60_s;
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let g: f64 = rng.sample(StandardNormal);
            g * (-DECAY_60DB * n as f64 / tau).exp()
        })
        .collect();
    h[0] = 1.0;
    let mut h = normalize_f64(h, 1.0);
    h[0] = 1.0;
    h
}

/// Kernel length above which convolution goes through the FFT.
pub const DIRECT_CONVOLUTION_MAX_TAPS: usize = 256;

/// Linear convolution truncated to the segment length.
pub fn convolve_rir(seg: &[f64], rir: &[f64]) -> Vec<f64> {
    if rir.len() > DIRECT_CONVOLUTION_MAX_TAPS {
        convolve_fft(seg, rir)
    } else {
        convolve_direct(seg, rir)
    }
}

pub fn convolve_direct(seg: &[f64], rir: &[f64]) -> Vec<f64> {
    (0..seg.len())
        .map(|n| {
            let kmax = n.min(rir.len().saturating_sub(1));
            (0..=kmax).map(|k| rir[k] * seg[n - k]).sum()
        })
        .collect()
}

pub fn convolve_fft(seg: &[f64], rir: &[f64]) -> Vec<f64> {
    if seg.is_empty() || rir.is_empty() {
        return vec![0.0; seg.len()];
    }
    let n = (seg.len() + rir.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let to_complex = |x: &[f64]| {
        let mut v: Vec<Complex<f64>> = x.iter().map(|&r| Complex::new(r, 0.0)).collect();
        v.resize(n, Complex::new(0.0, 0.0));
        v
    };
    let mut a = to_complex(seg);
    let mut b = to_complex(rir);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / n as f64;
    a[..seg.len()].iter().map(|c| c.re * scale).collect()
}

/// Hard clipping at `±threshold`.
pub fn apply_clip(seg: &[f64], threshold: f64) -> Vec<f64> {
    seg.iter().map(|s| s.clamp(-threshold, threshold)).collect()
}

pub const BANDPASS_TAPS: usize = 513;

/// Hann-windowed sinc band-pass kernel with unit passband gain.
pub fn bandpass_kernel(low_hz: f64, high_hz: f64, fs: u32) -> Vec<f64> {
    let fs = fs as f64;
    let (f1, f2) = (low_hz / fs, high_hz / fs);
    let mid = (BANDPASS_TAPS / 2) as f64;
    (0..BANDPASS_TAPS)
        .map(|i| {
            let m = i as f64 - mid;
            let ideal = if m == 0.0 {
                2.0 * (f2 - f1)
            } else {
                ((2.0 * PI * f2 * m).sin() - (2.0 * PI * f1 * m).sin()) / (PI * m)
            };
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (BANDPASS_TAPS - 1) as f64).cos();
            ideal * w
        })
        .collect()
}

/// Linear-phase FIR band-pass, shifted by its group delay so the output is time-aligned.
pub fn apply_bandpass(seg: &[f64], low_hz: f64, high_hz: f64, fs: u32) -> Vec<f64> {
    assert!(
        0.0 < low_hz && low_hz < high_hz && high_hz < fs as f64 / 2.0,
        "band edges must satisfy 0 < low < high < fs/2"
    );
    let h = bandpass_kernel(low_hz, high_hz, fs);
    let delay = BANDPASS_TAPS / 2;
    let mut padded = seg.to_vec();
    padded.resize(seg.len() + delay, 0.0);
    let full = convolve_fft(&padded, &h);
    full[delay..].to_vec()
}

pub const STFT_SIZE: usize = 1024;
pub const STFT_HOP: usize = 256;

struct Stft {
    window: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Stft {
    fn new() -> Self {
        let mut planner = FftPlanner::new();
        Self {
            window: (0..STFT_SIZE)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / STFT_SIZE as f64).cos())
                .collect(),
            fwd: planner.plan_fft_forward(STFT_SIZE),
            inv: planner.plan_fft_inverse(STFT_SIZE),
        }
    }

    /// Centered analysis frames; returns bins `0..=N/2` per frame.
    fn analyze(&self, x: &[f64]) -> Vec<Vec<Complex<f64>>> {
        let half = STFT_SIZE / 2;
        let mut padded = vec![0.0; half];
        padded.extend_from_slice(x);
        padded.resize(x.len() + 2 * half, 0.0);
        let frames = 1 + x.len() / STFT_HOP;
        (0..frames)
            .map(|t| {
                let mut buf: Vec<Complex<f64>> = (0..STFT_SIZE)
                    .map(|n| Complex::new(padded[t * STFT_HOP + n] * self.window[n], 0.0))
                    .collect();
                self.fwd.process(&mut buf);
                buf.truncate(half + 1);
                buf
            })
            .collect()
    }

    /// Weighted overlap-add resynthesis, trimmed to `len` samples.
    fn synthesize(&self, frames: &[Vec<Complex<f64>>], len: usize) -> Vec<f64> {
        let half = STFT_SIZE / 2;
        let total = (frames.len().saturating_sub(1)) * STFT_HOP + STFT_SIZE;
        let mut out = vec![0.0; total.max(len + STFT_SIZE)];
        let mut wsum = vec![0.0; out.len()];
        let mut buf = vec![Complex::new(0.0, 0.0); STFT_SIZE];
        for (t, frame) in frames.iter().enumerate() {
            buf[..=half].copy_from_slice(frame);
            for k in 1..half {
                buf[STFT_SIZE - k] = frame[k].conj();
            }
            self.inv.process(&mut buf);
            let base = t * STFT_HOP;
            for n in 0..STFT_SIZE {
                let w = self.window[n];
                out[base + n] += w * buf[n].re / STFT_SIZE as f64;
                wsum[base + n] += w * w;
            }
        }
        (half..half + len)
            .map(|i| if wsum[i] > 1e-10 { out[i] / wsum[i] } else { 0.0 })
            .collect()
    }
}

fn wrap_phase(p: f64) -> f64 {
    p - 2.0 * PI * ((p + PI) / (2.0 * PI)).floor()
}

/// Phase-vocoder time stretch. `rate > 1` shortens, `rate < 1` lengthens;
/// the output has `round(len / rate)` samples.
pub fn time_stretch(seg: &[f64], rate: f64) -> Vec<f64> {
    assert!((0.5..=2.0).contains(&rate), "stretch rate {rate} outside [0.5, 2]");
    let out_len = (seg.len() as f64 / rate).round() as usize;
    if seg.is_empty() {
        return Vec::new();
    }
    let stft = Stft::new();
    let spec = stft.analyze(seg);
    let bins = STFT_SIZE / 2 + 1;
    let zero = vec![Complex::new(0.0, 0.0); bins];
    let advance: Vec<f64> = (0..bins)
        .map(|k| 2.0 * PI * k as f64 * STFT_HOP as f64 / STFT_SIZE as f64)
        .collect();
    let mut phase: Vec<f64> = spec[0].iter().map(|c| c.arg()).collect();
    let mut frames = Vec::new();
    let mut t = 0.0;
    while t < spec.len() as f64 {
        let i = t as usize;
        let alpha = t - i as f64;
        let a = &spec[i];
        let b = spec.get(i + 1).unwrap_or(&zero);
        let frame: Vec<Complex<f64>> = (0..bins)
            .map(|k| {
                let mag = (1.0 - alpha) * a[k].norm() + alpha * b[k].norm();
                Complex::from_polar(mag, phase[k])
            })
            .collect();
        for k in 0..bins {
            let dphi = wrap_phase(b[k].arg() - a[k].arg() - advance[k]);
            phase[k] += advance[k] + dphi;
        }
        frames.push(frame);
        t += rate;
    }
    stft.synthesize(&frames, out_len)
}

/// Pitch shift by `semitones` keeping the duration: stretch by the pitch ratio,
/// then resample back to the original length.
pub fn pitch_shift(seg: &[f64], semitones: f64) -> Vec<f64> {
    assert!((-12.0..=12.0).contains(&semitones), "pitch shift {semitones} outside [-12, 12]");
    if semitones == 0.0 || seg.is_empty() {
        return seg.to_vec();
    }
    let ratio = 2f64.powf(semitones / 12.0);
    let stretched = time_stretch(seg, 1.0 / ratio);
    resample_slice(&stretched, 1.0 / ratio, seg.len())
}

fn fit_length(mut x: Vec<f64>, len: usize) -> Vec<f64> {
    x.resize(len, 0.0);
    x
}

/// Run the drawn effects on one window in their fixed order.
pub fn apply_effects(seg: &[f64], effects: &EffectDraws, fs: u32) -> Vec<f64> {
    let len = seg.len();
    let mut x = seg.to_vec();
    if let Some(n) = &effects.noise {
        let mut rng = ChaCha8Rng::seed_from_u64(n.seed);
        let white = gen_noise(len, NoiseKind::White, &mut rng);
        let pink = gen_noise(len, NoiseKind::Pink, &mut rng);
        let noise: Vec<f64> = white
            .iter()
            .zip(&pink)
            .map(|(w, p)| n.white_weight * w + (1.0 - n.white_weight) * p)
            .collect();
        x = mix_noise(&x, &noise, n.snr_db).expect("noise generated at segment length");
    }
    if let Some(taps) = &effects.echo {
        x = apply_echo(&x, taps, fs);
    }
    if let Some(r) = &effects.reverb {
        let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
        let rir = synth_rir(
            &RirSpec {
                room_size: r.room,
                rt60_s: r.rt60_s,
                fs,
            },
            &mut rng,
        );
        x = convolve_rir(&x, &rir);
    }
    if let Some(frac) = effects.clip_frac {
        let threshold = frac * peak_f64(&x);
        if threshold > 0.0 {
            x = apply_clip(&x, threshold);
        }
    }
    if let Some((lo, hi)) = effects.bandpass_hz {
        let hi = hi.min(fs as f64 / 2.0 * 0.99);
        if lo < hi {
            x = apply_bandpass(&x, lo, hi, fs);
        }
    }
    if let Some(semitones) = effects.pitch_semitones {
        x = pitch_shift(&x, semitones);
    }
    if let Some(rate) = effects.stretch_rate {
        x = fit_length(time_stretch(&x, rate), len);
    }
    x
}

/// Peak assigned to windows whose original content is effectively silent.
pub const SILENT_WINDOW_PEAK: f64 = 0.5;

fn window_samples(w: &PlannedWindow, rate: u32, total: usize) -> (usize, usize) {
    let to_sample = |t: f64| ((t * rate as f64).round() as usize).min(total);
    (to_sample(w.start_s), to_sample(w.end_s))
}

/// Apply an existing plan. Samples outside the planned windows are copied unchanged.
pub fn apply_plan(buffer: &AudioBuffer, plan: &AugmentPlan) -> AudioBuffer {
    let mut out = buffer.clone();
    for w in &plan.windows {
        if w.effects.is_empty() {
            continue;
        }
        let (a, b) = window_samples(w, buffer.sample_rate, buffer.len());
        if a >= b {
            continue;
        }
        let seg: Vec<f64> = buffer.samples[a..b].iter().map(|&s| s as f64).collect();
        let original_peak = peak_f64(&seg);
        let target = if original_peak < 1e-6 {
            SILENT_WINDOW_PEAK
        } else {
            original_peak
        };
        let processed = normalize_f64(apply_effects(&seg, &w.effects, buffer.sample_rate), target);
        for (dst, src) in out.samples[a..b].iter_mut().zip(processed) {
            *dst = src as f32;
        }
    }
    out
}

/// Plan and apply augmentation for one clip.
pub fn augment_clip(buffer: &AudioBuffer, cfg: &AugmentConfig, seed: u64) -> Result<AudioBuffer, AugmentError> {
    cfg.validate()?;
    let plan = plan_augmentation(buffer.duration_seconds(), cfg, seed);
    Ok(apply_plan(buffer, &plan))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE5_E4B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-file seed from a global seed and the file's URI. Stable across runs and platforms.
pub fn derive_seed(global_seed: u64, uri: &str) -> u64 {
    // FNV-1a
    let hash = uri.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    });
    splitmix64(global_seed ^ splitmix64(hash))
}
