//! Cyclic-prefix OFDM modulator and demodulator.
//!
//! The comparison baseline: per symbol column, an orthonormal inverse DFT
//! (scale 1/sqrt(2M) both directions, so symbol power survives the
//! transform untouched and one SNR definition serves both waveforms)
//! followed by a cyclic prefix — the last `cp_length` time samples copied
//! in front. As long as the channel impulse response is no longer than
//! cp_length + 1 samples, linear convolution looks circular inside the
//! FFT window and the channel collapses to one complex gain per
//! subcarrier.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::params::ChainParameters;
use crate::stream::SampleStream;
use crate::symbols::ComplexGrid;

/// Synthesizes `cols` OFDM symbols of `2M + cp_length` samples each.
pub fn ofdm_modulate(c: &ComplexGrid, params: &ChainParameters) -> Result<SampleStream> {
    let m2 = params.num_subcarriers;
    let cp = params.cp_length;
    if c.rows() != m2 {
        return Err(Error::Shape {
            message: format!("grid has {} subcarriers, parameters say {}", c.rows(), m2),
        });
    }
    if c.cols() == 0 {
        return Err(Error::Shape { message: "symbol grid has no columns".into() });
    }
    let mut planner = FftPlanner::new();
    let ifft = planner.plan_fft_inverse(m2);
    let scale = 1.0 / (m2 as f64).sqrt();

    let mut samples = Vec::with_capacity(c.cols() * (m2 + cp));
    let mut block = vec![Complex64::new(0.0, 0.0); m2];
    for l in 0..c.cols() {
        block.copy_from_slice(c.col(l));
        ifft.process(&mut block);
        for b in block.iter_mut() {
            *b *= scale;
        }
        samples.extend_from_slice(&block[m2 - cp..]);
        samples.extend_from_slice(&block);
    }
    Ok(SampleStream::new(samples, params.sample_rate_hz))
}

/// Recovers `syms` symbol columns: drop each cyclic prefix, forward
/// orthonormal DFT of the remaining 2M samples.
pub fn ofdm_demodulate_syms(
    r: &SampleStream,
    params: &ChainParameters,
    syms: usize,
) -> Result<ComplexGrid> {
    let m2 = params.num_subcarriers;
    let cp = params.cp_length;
    if syms == 0 {
        return Err(Error::Shape { message: "demodulation needs at least one symbol".into() });
    }
    let needed = syms * (m2 + cp);
    if r.len() < needed {
        return Err(Error::Shape {
            message: format!("stream of {} samples, need {} for {} symbols", r.len(), needed, syms),
        });
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m2);
    let scale = 1.0 / (m2 as f64).sqrt();

    let mut z = ComplexGrid::new(m2, syms);
    let mut block = vec![Complex64::new(0.0, 0.0); m2];
    for l in 0..syms {
        let start = l * (m2 + cp) + cp;
        block.copy_from_slice(&r.samples[start..start + m2]);
        fft.process(&mut block);
        let col = z.col_mut(l);
        for m in 0..m2 {
            col[m] = block[m] * scale;
        }
    }
    Ok(z)
}

/// Analysis at the configured burst shape (`num_qam_cols` symbols).
pub fn ofdm_demodulate(r: &SampleStream, params: &ChainParameters) -> Result<ComplexGrid> {
    ofdm_demodulate_syms(r, params, params.num_qam_cols())
}
