//! The end-to-end simulation chain: data generation, modulation, channel,
//! receiver, metric aggregation.
//!
//! One call to [`run_chain`] executes the configured number of Monte-Carlo
//! trials. Each trial derives its own random streams (data, channel,
//! noise) from the configured seed, so trial t is reproducible in
//! isolation and the whole run is deterministic. `channel_mode = fixed`
//! reuses channel draw 0 for every trial, producing the per-realization
//! MSE curves a one-shot script would plot; `ergodic` redraws the channel
//! each trial and averages the fading out.
//!
//! Frame layout on the symbol grid, left to right: the estimation
//! preamble (when `channel_estimation = preamble-LS`), then the payload
//! columns. When synchronization is on, a known time-domain preamble is
//! prepended to the modulated burst; the receiver finds it, removes the
//! estimated carrier offset, and cuts it away before demodulating.

use num_complex::Complex64;

use crate::channel::{
    apply_awgn, apply_cfo, apply_multipath, apply_time_varying_multipath, apply_timing_offset,
    fading_block_len, generate_rayleigh_channel, generate_time_varying_channel,
    PowerDelayProfile,
};
use crate::error::{Error, Result};
use crate::fbmc::{fbmc_demodulate_cols, fbmc_modulate};
use crate::metrics::{compute_mse_complex, compute_mse_real, MetricReport};
use crate::ofdm::{ofdm_demodulate_syms, ofdm_modulate};
use crate::params::{
    ChainParameters, ChannelMode, EstimationMethod, RunConfig, SyncMode, Waveform,
};
use crate::prototype::PrototypeFilter;
use crate::receiver::{
    equalize_onetap, estimate_channel_preamble, estimate_timing_cfo, real_convert, sync_preamble,
    ChannelEstimate, PreambleSpec, SyncPreamble,
};
use crate::seeds::{
    stream_rng, PURPOSE_CHANNEL, PURPOSE_DATA, PURPOSE_DOPPLER, PURPOSE_NOISE,
};
use crate::stream::SampleStream;
use crate::symbols::{
    generate_data, hard_decide, oqam_destagger, ComplexGrid, RealGrid, SymbolGrid,
};

/// Resolves the configured profile name. `None` means the ideal bypass:
/// no multipath at all, received equals transmitted.
pub fn resolve_profile(cfg: &RunConfig) -> Result<Option<PowerDelayProfile>> {
    match cfg.channel_profile.as_str() {
        "ideal" => Ok(None),
        "custom" => {
            let delays = cfg.profile_delays_ns.clone().ok_or(Error::Validation {
                key: "profile_delays_ns".into(),
                message: "custom profile requires delay and power arrays".into(),
            })?;
            let powers = cfg.profile_powers_db.clone().ok_or(Error::Validation {
                key: "profile_powers_db".into(),
                message: "custom profile requires delay and power arrays".into(),
            })?;
            Ok(Some(PowerDelayProfile { name: "custom".into(), delays_ns: delays, powers_db: powers }))
        }
        name => PowerDelayProfile::builtin(name).map(Some).ok_or(Error::Validation {
            key: "channel_profile".into(),
            message: format!("unknown channel profile `{name}`"),
        }),
    }
}

/// One trial's transmit side.
struct TxFrame {
    /// Sync preamble (when enabled) followed by the modulated frame.
    stream: SampleStream,
    /// Payload QAM symbols and their bits, for metric reference.
    qam: ComplexGrid,
    bits: Vec<u8>,
    /// Staggered real payload (the MSE reference for FBMC-OQAM).
    d_real: Option<RealGrid>,
    /// Grid columns occupied by the estimation preamble.
    data_col_offset: usize,
    /// Total grid columns (preamble + payload).
    total_cols: usize,
}

fn build_tx(
    cfg: &RunConfig,
    filter: Option<&PrototypeFilter>,
    est_spec: Option<&PreambleSpec>,
    sync: Option<&SyncPreamble>,
    trial: u64,
) -> Result<TxFrame> {
    let params = &cfg.params;
    let data = generate_data(params, &mut stream_rng(params.seed, PURPOSE_DATA, trial));

    let (stream, d_real, data_col_offset, total_cols) = match (&data.grid, params.waveform) {
        (SymbolGrid::RealOqam(d), Waveform::FbmcOqam) => {
            let filter = filter.expect("FBMC chain carries a prototype filter");
            let (frame, offset) = match est_spec {
                Some(spec) => {
                    let pre = spec
                        .fbmc_grid(params.num_subcarriers)
                        .expect("FBMC preamble spec");
                    let mut g = RealGrid::new(d.rows(), pre.cols() + d.cols());
                    for l in 0..pre.cols() {
                        g.col_mut(l).copy_from_slice(pre.col(l));
                    }
                    for l in 0..d.cols() {
                        g.col_mut(pre.cols() + l).copy_from_slice(d.col(l));
                    }
                    (g, pre.cols())
                }
                None => (d.clone(), 0),
            };
            let cols = frame.cols();
            let s = fbmc_modulate(&frame, filter, params)?;
            (s, Some(d.clone()), offset, cols)
        }
        (SymbolGrid::ComplexQam(c), Waveform::CpOfdm) => {
            let (frame, offset) = match est_spec {
                Some(PreambleSpec::Ofdm { pilot }) => {
                    let mut g = ComplexGrid::new(c.rows(), 1 + c.cols());
                    g.col_mut(0).copy_from_slice(pilot);
                    for l in 0..c.cols() {
                        g.col_mut(1 + l).copy_from_slice(c.col(l));
                    }
                    (g, 1)
                }
                Some(PreambleSpec::Fbmc { .. }) => {
                    return Err(Error::Shape {
                        message: "estimation preamble does not match the waveform".into(),
                    })
                }
                None => (c.clone(), 0),
            };
            let cols = frame.cols();
            let s = ofdm_modulate(&frame, params)?;
            (s, None, offset, cols)
        }
        _ => unreachable!("generate_data always matches the waveform"),
    };

    let stream = match sync {
        Some(pre) => {
            let mut samples = pre.samples.clone();
            samples.extend_from_slice(&stream.samples);
            SampleStream::new(samples, stream.sample_rate_hz)
        }
        None => stream,
    };

    Ok(TxFrame { stream, qam: data.qam, bits: data.bits, d_real, data_col_offset, total_cols })
}

/// The modulated transmit burst of one trial, before any channel effect.
/// This is what spectrum measurements should look at.
pub fn transmit_stream(cfg: &RunConfig, trial: u64) -> Result<SampleStream> {
    cfg.validate()?;
    let params = &cfg.params;
    let filter = match params.waveform {
        Waveform::FbmcOqam => Some(PrototypeFilter::frequency_sampling(
            params.num_subcarriers,
            params.overlap_factor,
        )?),
        Waveform::CpOfdm => None,
    };
    let est_spec = (cfg.channel_estimation == EstimationMethod::PreambleLs)
        .then(|| PreambleSpec::for_params(params));
    let sync = (cfg.synchronization == SyncMode::Preamble).then(|| sync_preamble(params));
    let tx = build_tx(cfg, filter.as_ref(), est_spec.as_ref(), sync.as_ref(), trial)?;
    Ok(tx.stream)
}

/// Propagates one trial's burst through the configured channel and
/// returns the received stream plus the genie channel estimate.
fn propagate(
    cfg: &RunConfig,
    profile: Option<&PowerDelayProfile>,
    tx: &SampleStream,
    trial: u64,
) -> Result<(SampleStream, ChannelEstimate)> {
    let params = &cfg.params;
    let ch_index = match cfg.channel_mode {
        ChannelMode::Fixed => 0,
        ChannelMode::Ergodic => trial,
    };
    let (r, known) = match profile {
        None => (tx.clone(), ChannelEstimate::unit(params.num_subcarriers)),
        Some(prof) => {
            if params.velocity_mps > 0.0 && params.max_doppler_hz() > 0.0 {
                let blen = fading_block_len(params);
                let nblocks = tx.len().div_ceil(blen);
                let blocks = generate_time_varying_channel(
                    prof,
                    params,
                    &mut stream_rng(params.seed, PURPOSE_DOPPLER, ch_index),
                    nblocks,
                )?;
                let r = apply_time_varying_multipath(tx, &blocks, blen)?;
                // Genie CSI under block fading: the average response over
                // the burst. A one-tap equalizer cannot track faster than
                // that anyway.
                let mut h_mean = vec![Complex64::new(0.0, 0.0); params.num_subcarriers];
                for b in &blocks {
                    for (acc, h) in h_mean.iter_mut().zip(b.freq_response()) {
                        *acc += h;
                    }
                }
                for h in &mut h_mean {
                    *h /= nblocks as f64;
                }
                let known = ChannelEstimate {
                    h_hat: h_mean,
                    method: EstimationMethod::Known,
                    noise_var_hat: 0.0,
                };
                (r, known)
            } else {
                let h = generate_rayleigh_channel(
                    prof,
                    params,
                    &mut stream_rng(params.seed, PURPOSE_CHANNEL, ch_index),
                )?;
                let r = apply_multipath(tx, &h);
                let known = ChannelEstimate::known(&h);
                (r, known)
            }
        }
    };

    let r = if params.timing_offset != 0 {
        apply_timing_offset(&r, params.timing_offset)?
    } else {
        r
    };
    let r = if params.cfo_normalized != 0.0 {
        apply_cfo(&r, params.cfo_normalized, params)
    } else {
        r
    };
    Ok((r, known))
}

/// Removes the sync preamble after estimating and undoing timing and
/// carrier offsets.
fn synchronize(
    r: &SampleStream,
    pre: &SyncPreamble,
    params: &ChainParameters,
) -> Result<SampleStream> {
    let (tau, eps) = estimate_timing_cfo(r, pre, params)?;
    let corrected = if eps != 0.0 { apply_cfo(r, -eps, params) } else { r.clone() };
    let start = tau as usize + pre.len();
    if corrected.len() <= start {
        return Err(Error::FrameFormat {
            message: format!("stream ends inside the sync preamble (start {start})"),
        });
    }
    Ok(SampleStream::new(
        corrected.samples[start..].to_vec(),
        corrected.sample_rate_hz,
    ))
}

/// Pads a body that lost tail samples to offsets or delays back to the
/// demodulator's expected length. Shortfalls beyond one symbol's worth
/// of samples are left for the demodulator to reject.
fn pad_tail(body: SampleStream, required: usize, max_pad: usize) -> SampleStream {
    if body.len() >= required || required - body.len() > max_pad {
        return body;
    }
    let mut samples = body.samples;
    samples.resize(required, Complex64::new(0.0, 0.0));
    SampleStream { samples, sample_rate_hz: body.sample_rate_hz, origin_offset: body.origin_offset }
}

/// Runs the full chain for `num_trials` trials and aggregates metrics.
///
/// Stage failures are tagged with the stage that raised them, so a CLI
/// can distinguish configuration problems from runtime ones.
pub fn run_chain(cfg: &RunConfig, num_trials: usize) -> Result<MetricReport> {
    cfg.validate()?;
    if num_trials == 0 {
        return Err(Error::Validation { key: "trials".into(), message: "must be at least 1".into() });
    }
    let params = &cfg.params;
    let filter = match params.waveform {
        Waveform::FbmcOqam => Some(
            PrototypeFilter::frequency_sampling(params.num_subcarriers, params.overlap_factor)
                .map_err(|e| e.in_stage("prototype"))?,
        ),
        Waveform::CpOfdm => None,
    };
    let profile = resolve_profile(cfg)?;
    let est_spec = (cfg.channel_estimation == EstimationMethod::PreambleLs)
        .then(|| PreambleSpec::for_params(params));
    let sync = (cfg.synchronization == SyncMode::Preamble).then(|| sync_preamble(params));

    let mut mse_sum = vec![0.0f64; params.num_subcarriers];
    let mut bit_errors = 0usize;
    let mut total_bits = 0usize;

    for trial in 0..num_trials as u64 {
        let tx = build_tx(cfg, filter.as_ref(), est_spec.as_ref(), sync.as_ref(), trial)
            .map_err(|e| e.in_stage("modulate"))?;
        let tx_power = tx.stream.average_power();

        let (r, known_est) =
            propagate(cfg, profile.as_ref(), &tx.stream, trial).map_err(|e| e.in_stage("channel"))?;
        let r = apply_awgn(
            &r,
            params.snr_db,
            tx_power,
            &mut stream_rng(params.seed, PURPOSE_NOISE, trial),
        );

        let body = match &sync {
            Some(pre) => synchronize(&r, pre, params).map_err(|e| e.in_stage("synchronize"))?,
            None => r,
        };

        let est = match cfg.channel_estimation {
            EstimationMethod::Known => known_est,
            EstimationMethod::PreambleLs => {
                estimate_channel_preamble(&body, est_spec.as_ref().unwrap(), params)
                    .map_err(|e| e.in_stage("estimate"))?
            }
        };

        match params.waveform {
            Waveform::FbmcOqam => {
                let required =
                    (tx.total_cols - 1) * params.half_stride() + params.prototype_len();
                let body = pad_tail(body, required, params.prototype_len());
                let z = fbmc_demodulate_cols(&body, filter.as_ref().unwrap(), params, tx.total_cols)
                    .map_err(|e| e.in_stage("demodulate"))?;
                let z_eq = equalize_onetap(&z, &est).map_err(|e| e.in_stage("equalize"))?;
                let z_data = z_eq.col_range(tx.data_col_offset, tx.total_cols);
                let d_hat = real_convert(&z_data);
                let d_ref = tx.d_real.as_ref().expect("FBMC trial keeps its real payload");
                let per_trial =
                    compute_mse_real(d_ref, &d_hat).map_err(|e| e.in_stage("metrics"))?;
                for (acc, v) in mse_sum.iter_mut().zip(per_trial) {
                    *acc += v;
                }
                let qam_hat = oqam_destagger(&d_hat).map_err(|e| e.in_stage("metrics"))?;
                let (_, bits_rx) = hard_decide(&qam_hat, params.constellation_size);
                bit_errors += hamming(&tx.bits, &bits_rx);
                total_bits += bits_rx.len();
            }
            Waveform::CpOfdm => {
                let sym_len = params.num_subcarriers + params.cp_length;
                let required = tx.total_cols * sym_len;
                let body = pad_tail(body, required, sym_len);
                let z = ofdm_demodulate_syms(&body, params, tx.total_cols)
                    .map_err(|e| e.in_stage("demodulate"))?;
                let z_eq = equalize_onetap(&z, &est).map_err(|e| e.in_stage("equalize"))?;
                let c_hat = z_eq.col_range(tx.data_col_offset, tx.total_cols);
                let per_trial =
                    compute_mse_complex(&tx.qam, &c_hat).map_err(|e| e.in_stage("metrics"))?;
                for (acc, v) in mse_sum.iter_mut().zip(per_trial) {
                    *acc += v;
                }
                let (_, bits_rx) = hard_decide(&c_hat, params.constellation_size);
                bit_errors += hamming(&tx.bits, &bits_rx);
                total_bits += bits_rx.len();
            }
        }
    }

    for v in &mut mse_sum {
        *v /= num_trials as f64;
    }
    let ber = compute_ber_counts(bit_errors, total_bits);
    Ok(MetricReport {
        mse_per_subcarrier: mse_sum,
        ber,
        psd: None,
        num_trials,
        config_echo: cfg.clone(),
    })
}

fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn compute_ber_counts(errors: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    errors as f64 / total as f64
}
