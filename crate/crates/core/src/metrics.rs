//! Figures of merit: per-subcarrier mean squared error, bit error rate,
//! Welch power spectral density, and the `MetricReport` container with
//! its CSV serialization.
//!
//! MSE is kept per subcarrier because frequency-selective channels make
//! it strongly subcarrier-dependent after one-tap equalization; the
//! per-subcarrier curve is the main diagnostic plot this library
//! produces. All CSV floats use the shortest round-trip decimal form,
//! so rendering and re-parsing a report reproduces it exactly and
//! identical runs produce byte-identical files.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::params::RunConfig;
use crate::stream::SampleStream;
use crate::symbols::{ComplexGrid, RealGrid};

/// Per-subcarrier mean of (d - d_hat)^2 over all columns of a real grid.
pub fn compute_mse_real(d: &RealGrid, d_hat: &RealGrid) -> Result<Vec<f64>> {
    check_same_shape(d.rows(), d.cols(), d_hat.rows(), d_hat.cols())?;
    let mut mse = vec![0.0; d.rows()];
    for l in 0..d.cols() {
        for m in 0..d.rows() {
            let e = d[(m, l)] - d_hat[(m, l)];
            mse[m] += e * e;
        }
    }
    let cols = d.cols().max(1) as f64;
    for v in &mut mse {
        *v /= cols;
    }
    Ok(mse)
}

/// Per-subcarrier mean of |c - c_hat|^2 over all columns of a complex grid.
pub fn compute_mse_complex(c: &ComplexGrid, c_hat: &ComplexGrid) -> Result<Vec<f64>> {
    check_same_shape(c.rows(), c.cols(), c_hat.rows(), c_hat.cols())?;
    let mut mse = vec![0.0; c.rows()];
    for l in 0..c.cols() {
        for m in 0..c.rows() {
            mse[m] += (c[(m, l)] - c_hat[(m, l)]).norm_sqr();
        }
    }
    let cols = c.cols().max(1) as f64;
    for v in &mut mse {
        *v /= cols;
    }
    Ok(mse)
}

fn check_same_shape(r1: usize, c1: usize, r2: usize, c2: usize) -> Result<()> {
    if r1 != r2 || c1 != c2 {
        return Err(Error::Shape {
            message: format!("grid shapes differ: {r1}x{c1} vs {r2}x{c2}"),
        });
    }
    Ok(())
}

/// Fraction of differing bits between two equal-length bit arrays.
pub fn compute_ber(bits_tx: &[u8], bits_rx: &[u8]) -> Result<f64> {
    if bits_tx.len() != bits_rx.len() {
        return Err(Error::Shape {
            message: format!(
                "bit arrays differ in length: {} vs {}",
                bits_tx.len(),
                bits_rx.len()
            ),
        });
    }
    if bits_tx.is_empty() {
        return Err(Error::Shape { message: "cannot compute BER over zero bits".into() });
    }
    let errors = bits_tx.iter().zip(bits_rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / bits_tx.len() as f64)
}

/// Welch power spectral density estimate: Hann window, 50% overlap.
///
/// Returns `(freq_hz, power_db)` with the frequency axis centered on 0
/// (from -fs/2 to +fs/2) and power referenced to the full-band average,
/// so a spectrally flat input reads 0 dB in every bin. `segment_length`
/// must be a power of two no longer than the stream.
pub fn compute_psd(s: &SampleStream, segment_length: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = segment_length;
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Shape {
            message: format!("segment length must be a power of two >= 2, got {n}"),
        });
    }
    if n > s.len() {
        return Err(Error::Shape {
            message: format!("segment length {n} exceeds stream length {}", s.len()),
        });
    }
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let hop = n / 2;
    let mut acc = vec![0.0f64; n];
    let mut pos = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    while pos + n <= s.len() {
        for i in 0..n {
            buf[i] = s.samples[pos + i] * window[i];
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        pos += hop;
    }
    let band_avg = acc.iter().sum::<f64>() / n as f64;
    let freq: Vec<f64> = (0..n)
        .map(|i| (i as f64 - (n / 2) as f64) * s.sample_rate_hz / n as f64)
        .collect();
    // Reorder so negative frequencies come first; reference each bin to
    // the band average (segment count and window power cancel in the
    // ratio).
    let power_db: Vec<f64> = (0..n)
        .map(|i| {
            let src = (i + n / 2) % n;
            let rel = if band_avg > 0.0 { acc[src] / band_avg } else { 0.0 };
            10.0 * rel.max(1e-30).log10()
        })
        .collect();
    Ok((freq, power_db))
}

/// Re-references a dB spectrum so the mean linear power over the given
/// bins becomes 0 dB. Used to compare spectra of different signals on an
/// equal in-band footing.
pub fn normalize_to_band_average(power_db: &[f64], band_bins: &[usize]) -> Vec<f64> {
    if band_bins.is_empty() {
        return power_db.to_vec();
    }
    let mean_lin = band_bins
        .iter()
        .map(|&i| 10f64.powf(power_db[i] / 10.0))
        .sum::<f64>()
        / band_bins.len() as f64;
    let shift = 10.0 * mean_lin.log10();
    power_db.iter().map(|p| p - shift).collect()
}

/// Aggregated output of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Linear-power MSE per subcarrier, averaged over symbols and trials.
    pub mse_per_subcarrier: Vec<f64>,
    /// Bit error rate over all payload bits of all trials.
    pub ber: f64,
    /// Optional `(freq_hz, power_db)` spectrum of the transmit signal.
    pub psd: Option<(Vec<f64>, Vec<f64>)>,
    pub num_trials: usize,
    /// The exact configuration that produced this report.
    pub config_echo: RunConfig,
}

/// The report rendered as its on-disk files.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub mse_csv: String,
    pub psd_csv: Option<String>,
    pub summary_csv: String,
    pub config_echo: String,
}

fn db_floor(linear: f64) -> f64 {
    10.0 * linear.max(1e-30).log10()
}

impl MetricReport {
    /// Renders the CSV file set. Floats use shortest round-trip notation,
    /// so [`MetricReport::parse`] recovers this report exactly.
    pub fn render(&self) -> ReportFiles {
        let mut mse_csv = String::from("subcarrier,mse_linear,mse_db\n");
        for (m, &v) in self.mse_per_subcarrier.iter().enumerate() {
            mse_csv.push_str(&format!("{m},{v},{}\n", db_floor(v)));
        }
        let psd_csv = self.psd.as_ref().map(|(freq, power)| {
            let mut out = String::from("freq_hz,power_db\n");
            for (f, p) in freq.iter().zip(power) {
                out.push_str(&format!("{f},{p}\n"));
            }
            out
        });
        let mean_mse = self.mse_per_subcarrier.iter().sum::<f64>()
            / self.mse_per_subcarrier.len().max(1) as f64;
        let mut summary_csv = String::from("key,value\n");
        summary_csv.push_str(&format!("ber,{}\n", self.ber));
        summary_csv.push_str(&format!("num_trials,{}\n", self.num_trials));
        summary_csv.push_str(&format!("mse_mean_linear,{mean_mse}\n"));
        summary_csv.push_str(&format!("mse_mean_db,{}\n", db_floor(mean_mse)));
        ReportFiles { mse_csv, psd_csv, summary_csv, config_echo: self.config_echo.render() }
    }

    /// Parses a rendered file set back into a report.
    pub fn parse(files: &ReportFiles) -> Result<MetricReport> {
        let mut mse = Vec::new();
        for (i, line) in files.mse_csv.lines().enumerate() {
            if i == 0 {
                if line != "subcarrier,mse_linear,mse_db" {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("unexpected MSE header `{line}`"),
                    });
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let idx: usize = fields[0].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad subcarrier index `{}`", fields[0]),
            })?;
            if idx != mse.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("subcarrier rows out of order at index {idx}"),
                });
            }
            let v: f64 = fields[1].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad mse value `{}`", fields[1]),
            })?;
            if v < 0.0 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("negative MSE {v}"),
                });
            }
            mse.push(v);
        }

        let psd = match &files.psd_csv {
            None => None,
            Some(text) => {
                let mut freq = Vec::new();
                let mut power = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    if i == 0 {
                        if line != "freq_hz,power_db" {
                            return Err(Error::Parse {
                                line: 1,
                                message: format!("unexpected PSD header `{line}`"),
                            });
                        }
                        continue;
                    }
                    let (f, p) = line.split_once(',').ok_or(Error::Parse {
                        line: i + 1,
                        message: "expected `freq_hz,power_db`".into(),
                    })?;
                    let parse_f64 = |s: &str| {
                        s.parse::<f64>().map_err(|_| Error::Parse {
                            line: i + 1,
                            message: format!("bad float `{s}`"),
                        })
                    };
                    freq.push(parse_f64(f)?);
                    power.push(parse_f64(p)?);
                }
                Some((freq, power))
            }
        };

        let mut ber = None;
        let mut num_trials = None;
        for (i, line) in files.summary_csv.lines().enumerate() {
            if i == 0 {
                continue;
            }
            let Some((key, value)) = line.split_once(',') else { continue };
            match key {
                "ber" => {
                    ber = Some(value.parse::<f64>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad ber `{value}`"),
                    })?)
                }
                "num_trials" => {
                    num_trials = Some(value.parse::<usize>().map_err(|_| Error::Parse {
                        line: i + 1,
                        message: format!("bad trial count `{value}`"),
                    })?)
                }
                _ => {}
            }
        }
        let ber = ber.ok_or(Error::Parse { line: 0, message: "summary lacks ber".into() })?;
        if !(0.0..=1.0).contains(&ber) {
            return Err(Error::Parse { line: 0, message: format!("ber {ber} out of range") });
        }
        let num_trials = num_trials
            .ok_or(Error::Parse { line: 0, message: "summary lacks num_trials".into() })?;
        let config_echo = RunConfig::parse(&files.config_echo)?;
        Ok(MetricReport { mse_per_subcarrier: mse, ber, psd, num_trials, config_echo })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_awgn;
    use crate::ofdm::{ofdm_demodulate, ofdm_modulate};
    use crate::params::{ChainParameters, Waveform};
    use crate::receiver::{equalize_onetap, ChannelEstimate};
    use crate::seeds::{stream_rng, PURPOSE_DATA, PURPOSE_NOISE};
    use crate::symbols::random_qam_grid;

    #[test]
    fn identical_grids_have_zero_mse() {
        let d = RealGrid::from_fn(8, 5, |m, l| (m * l) as f64);
        let mse = compute_mse_real(&d, &d).unwrap();
        assert!(mse.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_offset_on_one_subcarrier_shows_up_squared() {
        let d = RealGrid::new(4, 10);
        let mut d_hat = d.clone();
        for l in 0..10 {
            d_hat[(0, l)] = 0.1;
        }
        let mse = compute_mse_real(&d, &d_hat).unwrap();
        assert!((mse[0] - 0.01).abs() < 1e-15);
        assert!(mse[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mse_rejects_mismatched_shapes() {
        let a = RealGrid::new(4, 3);
        let b = RealGrid::new(4, 4);
        assert!(matches!(compute_mse_real(&a, &b), Err(Error::Shape { .. })));
        let c = ComplexGrid::new(4, 3);
        let d = ComplexGrid::new(5, 3);
        assert!(matches!(compute_mse_complex(&c, &d), Err(Error::Shape { .. })));
    }

    #[test]
    fn mse_is_equivariant_under_subcarrier_relabeling() {
        let d = RealGrid::from_fn(6, 7, |m, l| (m as f64).sin() + l as f64 * 0.1);
        let d_hat = RealGrid::from_fn(6, 7, |m, l| d[(m, l)] + 0.01 * (m as f64 + 1.0));
        let base = compute_mse_real(&d, &d_hat).unwrap();
        // Reverse the subcarrier axis of both grids.
        let rev = |g: &RealGrid| RealGrid::from_fn(6, 7, |m, l| g[(5 - m, l)]);
        let permuted = compute_mse_real(&rev(&d), &rev(&d_hat)).unwrap();
        let mut expected = base.clone();
        expected.reverse();
        assert_eq!(permuted, expected);
    }

    #[test]
    fn ber_counts_hamming_fraction() {
        let a = vec![0u8, 1, 1, 0, 1];
        assert_eq!(compute_ber(&a, &a).unwrap(), 0.0);
        let b: Vec<u8> = a.iter().map(|x| 1 - x).collect();
        assert_eq!(compute_ber(&a, &b).unwrap(), 1.0);
        let c = vec![0u8, 1, 1, 0, 0];
        assert_eq!(compute_ber(&a, &c).unwrap(), 0.2);
        assert!(compute_ber(&a, &a[..4]).is_err());
    }

    #[test]
    fn zf_mse_on_flat_awgn_matches_inverse_snr() {
        // Unit-power QAM through AWGN at linear SNR gamma, unit channel:
        // the orthonormal transform leaves noise variance untouched, so
        // per-symbol MSE after (trivial) equalization is exactly 1/gamma.
        let mut p = ChainParameters::defaults(Waveform::CpOfdm);
        p.num_subcarriers = 64;
        p.cp_length = 8;
        p.num_real_symbols = 3200;
        let cols = p.num_qam_cols();
        let (c, _) = random_qam_grid(64, cols, 4, &mut stream_rng(1, PURPOSE_DATA, 0));
        let s = ofdm_modulate(&c, &p).unwrap();
        let snr_db = 7.0;
        let gamma = 10f64.powf(snr_db / 10.0);
        let r = apply_awgn(&s, snr_db, s.average_power(), &mut stream_rng(1, PURPOSE_NOISE, 0));
        let z = ofdm_demodulate(&r, &p).unwrap();
        let eq = equalize_onetap(&z, &ChannelEstimate::unit(64)).unwrap();
        let mse = compute_mse_complex(&c, &eq).unwrap();
        let grid_mean = mse.iter().sum::<f64>() / mse.len() as f64;
        assert!(
            (grid_mean - 1.0 / gamma).abs() < 0.05 / gamma,
            "grid mean {grid_mean} vs {}",
            1.0 / gamma
        );
        // 1600 symbols per subcarrier: mean of that many |CN|^2 draws
        // stays within 15% with enormous margin.
        for (m, &v) in mse.iter().enumerate() {
            assert!((v - 1.0 / gamma).abs() < 0.15 / gamma, "subcarrier {m}: {v}");
        }
    }

    #[test]
    fn psd_of_a_bin_centered_tone_is_a_spike() {
        let n = 4096usize;
        let seg = 512usize;
        let bin = 37usize;
        let fs = 1.0e6;
        let samples: Vec<Complex64> = (0..n)
            .map(|t| {
                Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * bin as f64 * t as f64 / seg as f64,
                )
            })
            .collect();
        let s = SampleStream::new(samples, fs);
        let (freq, power) = compute_psd(&s, seg).unwrap();
        assert_eq!(freq.len(), seg);
        let peak_idx = (0..seg).max_by(|&a, &b| power[a].partial_cmp(&power[b]).unwrap()).unwrap();
        assert!((freq[peak_idx] - bin as f64 * fs / seg as f64).abs() < 1e-6);
        let mut sorted = power.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[seg / 2];
        assert!(power[peak_idx] - median >= 60.0, "peak {} median {median}", power[peak_idx]);
    }

    #[test]
    fn psd_of_white_noise_is_flat() {
        let zeros = SampleStream::new(vec![Complex64::new(0.0, 0.0); 1_000_000], 1.0);
        let noise = apply_awgn(&zeros, 0.0, 1.0, &mut stream_rng(8, PURPOSE_NOISE, 0));
        let (_, power) = compute_psd(&noise, 1024).unwrap();
        for (i, &p) in power.iter().enumerate() {
            assert!(p.abs() <= 1.0, "bin {i} deviates by {p} dB");
        }
    }

    #[test]
    fn psd_rejects_bad_segment_lengths() {
        let s = SampleStream::new(vec![Complex64::new(1.0, 0.0); 100], 1.0);
        assert!(matches!(compute_psd(&s, 48), Err(Error::Shape { .. })));
        assert!(matches!(compute_psd(&s, 128), Err(Error::Shape { .. })));
        assert!(compute_psd(&s, 64).is_ok());
    }

    #[test]
    fn band_normalization_zeroes_the_selected_bins_mean() {
        let power_db = vec![3.0, 3.0, -10.0, -20.0];
        let out = normalize_to_band_average(&power_db, &[0, 1]);
        assert!((out[0] - 0.0).abs() < 1e-12);
        assert!((out[1] - 0.0).abs() < 1e-12);
        assert!((out[2] + 13.0).abs() < 1e-12);
        // Relative distances between bins never change.
        assert!(((out[2] - out[3]) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn report_round_trips_through_its_files() {
        let mut cfg = RunConfig::defaults(Waveform::FbmcOqam);
        cfg.params.snr_db = 17.25;
        cfg.trials = 3;
        let report = MetricReport {
            mse_per_subcarrier: vec![1.0 / 3.0, 0.0, std::f64::consts::PI * 1e-4],
            ber: 0.015625,
            psd: Some((vec![-0.5, 0.0, 0.5], vec![-31.7, 0.1, -29.9])),
            num_trials: 3,
            config_echo: cfg,
        };
        let files = report.render();
        let back = MetricReport::parse(&files).unwrap();
        assert_eq!(back, report);

        // Without a PSD section the option stays empty.
        let mut report2 = report.clone();
        report2.psd = None;
        let back2 = MetricReport::parse(&report2.render()).unwrap();
        assert_eq!(back2, report2);
    }
}
