//! Channel models: multipath profiles, Rayleigh fading, additive noise,
//! carrier and timing offsets, and Doppler time variation.
//!
//! A power-delay profile lists (delay, mean power) pairs; instantiating it
//! draws one circularly-symmetric complex Gaussian gain per tap with
//! variance equal to the tap's normalized power, so the realization's
//! expected total gain is exactly 1 and per-tap envelopes are Rayleigh.
//! Delays land on the nearest sample of the impulse response (taps that
//! round to the same sample add coherently); there is no fractional-delay
//! interpolation because the whole simulation works on a sample-spaced
//! impulse response.
//!
//! Mobility turns each tap into a sum of 32 complex sinusoids with
//! independent uniform arrival angles and phases. The ensemble
//! autocorrelation of such a tap is exactly J_0(2 pi f_d tau) (each
//! sinusoid contributes E[exp(j 2 pi f_d cos(a) tau)] over the uniform
//! angle), which is the classic dense-scatterer Doppler model. Gains are
//! held constant over one multicarrier symbol — the per-symbol
//! demodulation model assumes the channel does not move inside a symbol.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{ChainParameters, Waveform};
use crate::stream::SampleStream;

/// A named multipath intensity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub name: String,
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl PowerDelayProfile {
    /// ITU-R Vehicular-A, the six-tap outdoor reference profile.
    pub fn itu_veh_a() -> Self {
        PowerDelayProfile {
            name: "ITU_VehA".into(),
            delays_ns: vec![0.0, 310.0, 710.0, 1090.0, 1730.0, 2510.0],
            powers_db: vec![0.0, -1.0, -9.0, -10.0, -15.0, -20.0],
        }
    }

    /// ITU-R Pedestrian-A, four taps with short delay spread.
    pub fn itu_ped_a() -> Self {
        PowerDelayProfile {
            name: "ITU_PedA".into(),
            delays_ns: vec![0.0, 110.0, 190.0, 410.0],
            powers_db: vec![0.0, -9.7, -19.2, -22.8],
        }
    }

    /// Single Rayleigh tap at zero delay: frequency-flat fading.
    pub fn flat() -> Self {
        PowerDelayProfile { name: "flat".into(), delays_ns: vec![0.0], powers_db: vec![0.0] }
    }

    /// Looks up a built-in profile by its registry name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "ITU_VehA" => Some(Self::itu_veh_a()),
            "ITU_PedA" => Some(Self::itu_ped_a()),
            "flat" => Some(Self::flat()),
            _ => None,
        }
    }

    /// Linear tap powers scaled to sum to exactly 1.
    pub fn normalized_linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Tap positions in samples at the given rate (nearest-sample rounding).
    pub fn tap_sample_indices(&self, sample_rate_hz: f64) -> Vec<usize> {
        self.delays_ns
            .iter()
            .map(|d| (d * 1e-9 * sample_rate_hz).round() as usize)
            .collect()
    }
}

/// One drawn channel: sample-spaced impulse response plus its cached
/// frequency response on the configured subcarrier grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    pub profile_name: String,
    freq_response: Vec<Complex64>,
}

impl ChannelRealization {
    /// Wraps an impulse response, computing the `num_subcarriers`-point
    /// frequency response of the zero-padded taps.
    pub fn from_taps(taps: Vec<Complex64>, profile_name: String, num_subcarriers: usize) -> Self {
        let freq_response = dft_of_taps(&taps, num_subcarriers);
        ChannelRealization { taps, profile_name, freq_response }
    }

    /// The distortion-free channel h = [1].
    pub fn identity(num_subcarriers: usize) -> Self {
        Self::from_taps(vec![Complex64::new(1.0, 0.0)], "ideal".into(), num_subcarriers)
    }

    /// Frequency response H_m, one entry per subcarrier.
    pub fn freq_response(&self) -> &[Complex64] {
        &self.freq_response
    }

    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    /// Instantaneous total tap power of this realization.
    pub fn total_power(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

fn dft_of_taps(taps: &[Complex64], num_subcarriers: usize) -> Vec<Complex64> {
    // Direct evaluation: tap counts are tiny compared to the FFT setup cost.
    (0..num_subcarriers)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &h) in taps.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (m as f64) * (k as f64)
                    / num_subcarriers as f64;
                acc += h * Complex64::from_polar(1.0, ang);
            }
            acc
        })
        .collect()
}

fn complex_gaussian(rng: &mut ChaCha8Rng, variance: f64) -> Complex64 {
    let sigma = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sigma * re, sigma * im)
}

fn checked_tap_layout(
    profile: &PowerDelayProfile,
    params: &ChainParameters,
) -> Result<(Vec<usize>, Vec<f64>, usize)> {
    if profile.delays_ns.is_empty() || profile.delays_ns.len() != profile.powers_db.len() {
        return Err(Error::Profile {
            message: format!(
                "profile `{}` needs matching nonempty delay/power arrays",
                profile.name
            ),
        });
    }
    let indices = profile.tap_sample_indices(params.sample_rate_hz);
    let max_idx = *indices.iter().max().unwrap();
    if max_idx > params.num_subcarriers {
        return Err(Error::Profile {
            message: format!(
                "profile `{}` spans {} samples at {} Hz, beyond the {}-sample cap",
                profile.name, max_idx, params.sample_rate_hz, params.num_subcarriers
            ),
        });
    }
    Ok((indices, profile.normalized_linear_powers(), max_idx + 1))
}

/// Draws one static Rayleigh realization of the profile.
pub fn generate_rayleigh_channel(
    profile: &PowerDelayProfile,
    params: &ChainParameters,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelRealization> {
    let (indices, powers, len) = checked_tap_layout(profile, params)?;
    let mut taps = vec![Complex64::new(0.0, 0.0); len];
    for (&idx, &p) in indices.iter().zip(&powers) {
        taps[idx] += complex_gaussian(rng, p);
    }
    Ok(ChannelRealization::from_taps(taps, profile.name.clone(), params.num_subcarriers))
}

/// Full linear convolution with the realization's impulse response;
/// output length is `len(s) + num_taps - 1`.
pub fn apply_multipath(s: &SampleStream, h: &ChannelRealization) -> SampleStream {
    let mut out = vec![Complex64::new(0.0, 0.0); s.len() + h.taps.len() - 1];
    for (n, &x) in s.samples.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        for (k, &hk) in h.taps.iter().enumerate() {
            out[n + k] += x * hk;
        }
    }
    SampleStream { samples: out, sample_rate_hz: s.sample_rate_hz, origin_offset: s.origin_offset }
}

/// Adds circularly-symmetric white Gaussian noise at the requested SNR.
///
/// `signal_power_ref` is the measured average transmit sample power; noise
/// variance is `signal_power_ref / 10^(snr_db/10)`, split evenly between
/// the real and imaginary parts. An infinite `snr_db` returns the input
/// unchanged.
pub fn apply_awgn(
    s: &SampleStream,
    snr_db: f64,
    signal_power_ref: f64,
    rng: &mut ChaCha8Rng,
) -> SampleStream {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return s.clone();
    }
    let variance = signal_power_ref / 10f64.powf(snr_db / 10.0);
    let sigma = (variance / 2.0).sqrt();
    let samples = s
        .samples
        .iter()
        .map(|&x| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            x + Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    SampleStream { samples, sample_rate_hz: s.sample_rate_hz, origin_offset: s.origin_offset }
}

/// Rotates the stream by a carrier frequency offset of `epsilon`
/// subcarrier spacings: r[n] = s[n] exp(j 2 pi epsilon n / 2M).
pub fn apply_cfo(s: &SampleStream, epsilon: f64, params: &ChainParameters) -> SampleStream {
    let step = 2.0 * std::f64::consts::PI * epsilon / params.num_subcarriers as f64;
    let samples = s
        .samples
        .iter()
        .enumerate()
        .map(|(n, &x)| x * Complex64::from_polar(1.0, step * n as f64))
        .collect();
    SampleStream { samples, sample_rate_hz: s.sample_rate_hz, origin_offset: s.origin_offset }
}

/// Shifts the stream by `tau` samples inside a fixed-length window:
/// positive tau delays (zeros enter at the front, the tail falls off),
/// negative tau advances. The origin metadata is deliberately left
/// untouched — the receiver keeps its notion of time zero and actually
/// experiences the misalignment.
pub fn apply_timing_offset(s: &SampleStream, tau: i64) -> Result<SampleStream> {
    let n = s.len() as i64;
    if tau.abs() >= n {
        return Err(Error::Range {
            message: format!("timing offset {tau} exceeds the stream length {n}"),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        let src = i as i64 - tau;
        if (0..n).contains(&src) {
            *slot = s.samples[src as usize];
        }
    }
    Ok(SampleStream { samples: out, sample_rate_hz: s.sample_rate_hz, origin_offset: s.origin_offset })
}

/// Number of samples over which the time-varying channel is held constant:
/// one multicarrier symbol (a half-symbol stride for the staggered
/// waveform, a full CP-extended symbol for OFDM).
pub fn fading_block_len(params: &ChainParameters) -> usize {
    match params.waveform {
        Waveform::FbmcOqam => params.half_stride(),
        Waveform::CpOfdm => params.num_subcarriers + params.cp_length,
    }
}

/// Sum-of-sinusoids state for one evolving tap.
struct DopplerTap {
    sample_index: usize,
    amplitude: f64,
    omegas: Vec<f64>,
    phases: Vec<f64>,
}

const DOPPLER_SINUSOIDS: usize = 32;

/// Draws the Doppler evolution of every profile tap and materializes one
/// realization per block, `num_blocks` in total.
///
/// With `velocity_mps = 0` every block is the same static draw of the
/// sum-of-sinusoids state.
pub fn generate_time_varying_channel(
    profile: &PowerDelayProfile,
    params: &ChainParameters,
    rng: &mut ChaCha8Rng,
    num_blocks: usize,
) -> Result<Vec<ChannelRealization>> {
    let (indices, powers, len) = checked_tap_layout(profile, params)?;
    let f_d = params.max_doppler_hz();
    let block_dt = fading_block_len(params) as f64 / params.sample_rate_hz;

    let taps: Vec<DopplerTap> = indices
        .iter()
        .zip(&powers)
        .map(|(&idx, &p)| {
            let omegas = (0..DOPPLER_SINUSOIDS)
                .map(|_| {
                    let angle: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                    2.0 * std::f64::consts::PI * f_d * angle.cos()
                })
                .collect();
            let phases = (0..DOPPLER_SINUSOIDS)
                .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
                .collect();
            DopplerTap {
                sample_index: idx,
                amplitude: (p / DOPPLER_SINUSOIDS as f64).sqrt(),
                omegas,
                phases,
            }
        })
        .collect();

    let mut blocks = Vec::with_capacity(num_blocks);
    for b in 0..num_blocks {
        let t = b as f64 * block_dt;
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        for tap in &taps {
            let mut gain = Complex64::new(0.0, 0.0);
            for (w, ph) in tap.omegas.iter().zip(&tap.phases) {
                gain += Complex64::from_polar(1.0, w * t + ph);
            }
            h[tap.sample_index] += tap.amplitude * gain;
        }
        blocks.push(ChannelRealization::from_taps(h, profile.name.clone(), params.num_subcarriers));
    }
    Ok(blocks)
}

/// Convolution with a block-fading channel: each transmit sample uses the
/// realization of the block it belongs to (the last block covers any
/// overhang).
pub fn apply_time_varying_multipath(
    s: &SampleStream,
    blocks: &[ChannelRealization],
    block_len: usize,
) -> Result<SampleStream> {
    if blocks.is_empty() || block_len == 0 {
        return Err(Error::Range { message: "need at least one fading block".into() });
    }
    let max_taps = blocks.iter().map(|b| b.taps.len()).max().unwrap();
    let mut out = vec![Complex64::new(0.0, 0.0); s.len() + max_taps - 1];
    for (n, &x) in s.samples.iter().enumerate() {
        if x.re == 0.0 && x.im == 0.0 {
            continue;
        }
        let b = (n / block_len).min(blocks.len() - 1);
        for (k, &hk) in blocks[b].taps.iter().enumerate() {
            out[n + k] += x * hk;
        }
    }
    Ok(SampleStream { samples: out, sample_rate_hz: s.sample_rate_hz, origin_offset: s.origin_offset })
}
