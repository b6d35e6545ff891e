//! Chain parameters and the declarative run-configuration format.
//!
//! A run is described by a flat UTF-8 `key = value` document, one key per
//! line, `#` starting a comment. The format is deliberately dumb: it diffs
//! cleanly, any tool can generate it, and there is nothing to get subtly
//! wrong. Unknown keys are hard errors because a silently ignored typo in
//! `snr_db` can waste a week of simulation time.
//!
//! [`ChainParameters`] carries the per-chain numerology (subcarrier count,
//! symbol count, prototype overlap, constellation, impairments, seed).
//! [`RunConfig`] wraps it with the campaign-level choices: which channel
//! profile, fixed vs fresh channel per trial, how the receiver learns the
//! channel, and whether a synchronization preamble is prepended.
//!
//! `parse(render(cfg)) == cfg` holds exactly for every valid config; floats
//! are rendered with Rust's shortest-round-trip formatting.

use crate::error::{Error, Result};

/// Speed of light in m/s, used to convert velocity to maximum Doppler shift.
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Multicarrier waveform selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    /// Filterbank multicarrier with offset-QAM staggering.
    FbmcOqam,
    /// Cyclic-prefix OFDM.
    CpOfdm,
}

impl Waveform {
    /// Canonical config-file spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            Waveform::FbmcOqam => "FBMC-OQAM",
            Waveform::CpOfdm => "CP-OFDM",
        }
    }
}

/// Channel redraw policy across Monte-Carlo trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// One realization drawn once and reused for every trial. Produces the
    /// single-realization per-subcarrier MSE curves that track the fades of
    /// that specific channel.
    Fixed,
    /// Fresh realization per trial; metrics average over the fading ensemble.
    Ergodic,
}

impl ChannelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelMode::Fixed => "fixed",
            ChannelMode::Ergodic => "ergodic",
        }
    }
}

/// How the equalizer obtains the channel frequency response.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    /// Genie-aided: the true response of the drawn realization.
    Known,
    /// Least-squares estimate from a known preamble at the frame start.
    PreambleLs,
}

impl EstimationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimationMethod::Known => "known",
            EstimationMethod::PreambleLs => "preamble-LS",
        }
    }
}

/// Whether the transmitter prepends a synchronization preamble and the
/// receiver runs timing/CFO estimation before demodulating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    Off,
    Preamble,
}

impl SyncMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SyncMode::Off => "off",
            SyncMode::Preamble => "preamble",
        }
    }
}

/// Numerology and impairment settings for one transmit/receive chain.
///
/// Field names follow the conventional symbols: `num_subcarriers` is the
/// total subcarrier count (an even number, often written 2M),
/// `num_real_symbols` the number of real half-rate symbol columns (2Ns),
/// and `overlap_factor` the prototype length multiplier K with
/// prototype length = K * num_subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParameters {
    pub waveform: Waveform,
    /// Total subcarrier count; even, at least 4.
    pub num_subcarriers: usize,
    /// Real (half-rate) symbol columns per burst; even. Each pair carries one
    /// complex QAM symbol.
    pub num_real_symbols: usize,
    /// Prototype filter length in multiples of `num_subcarriers`.
    pub overlap_factor: usize,
    /// Cyclic-prefix length in samples; OFDM only, must stay below
    /// `num_subcarriers`.
    pub cp_length: usize,
    /// QAM order: 4, 16, 64 or 256.
    pub constellation_size: usize,
    /// Signal-to-noise ratio in dB; `f64::INFINITY` disables noise
    /// (spelled `off` in config files).
    pub snr_db: f64,
    pub sample_rate_hz: f64,
    /// Receiver velocity for Doppler; 0 disables time variation.
    pub velocity_mps: f64,
    pub carrier_freq_hz: f64,
    /// Carrier frequency offset as a fraction of the subcarrier spacing.
    pub cfo_normalized: f64,
    /// Timing offset in samples applied by the channel (positive = delay).
    pub timing_offset: i64,
    /// Master seed; every stochastic stage derives its own stream from it.
    pub seed: u64,
    /// Spatial stream count; single-antenna scope, fixed to 1.
    pub num_streams: usize,
    /// Transmit antenna count; fixed to 1.
    pub num_tx: usize,
    /// Receive antenna count; fixed to 1.
    pub num_rx: usize,
}

impl ChainParameters {
    /// Documented defaults: 128 subcarriers, 32 real symbols, overlap 4,
    /// 4-QAM, 20 dB SNR, 1.92 MHz sampling, all impairments off, seed 0.
    /// OFDM gets a cyclic prefix of `num_subcarriers / 8` samples, which at
    /// 1.92 MHz comfortably exceeds the 2.51 us Vehicular-A delay spread
    /// (5 samples).
    pub fn defaults(waveform: Waveform) -> Self {
        ChainParameters {
            waveform,
            num_subcarriers: 128,
            num_real_symbols: 32,
            overlap_factor: 4,
            cp_length: match waveform {
                Waveform::CpOfdm => 16,
                Waveform::FbmcOqam => 0,
            },
            constellation_size: 4,
            snr_db: 20.0,
            sample_rate_hz: 1.92e6,
            velocity_mps: 0.0,
            carrier_freq_hz: 2.5e9,
            cfo_normalized: 0.0,
            timing_offset: 0,
            seed: 0,
            num_streams: 1,
            num_tx: 1,
            num_rx: 1,
        }
    }

    /// Half-symbol stride in samples: adjacent real symbol columns are
    /// spaced `num_subcarriers / 2` samples apart.
    pub fn half_stride(&self) -> usize {
        self.num_subcarriers / 2
    }

    /// Prototype filter length `overlap_factor * num_subcarriers`.
    pub fn prototype_len(&self) -> usize {
        self.overlap_factor * self.num_subcarriers
    }

    /// Complex QAM columns carried by one burst (`num_real_symbols / 2`).
    pub fn num_qam_cols(&self) -> usize {
        self.num_real_symbols / 2
    }

    /// Subcarrier spacing in Hz.
    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.num_subcarriers as f64
    }

    /// Maximum Doppler shift `velocity * carrier_freq / c` in Hz.
    pub fn max_doppler_hz(&self) -> f64 {
        self.velocity_mps * self.carrier_freq_hz / SPEED_OF_LIGHT_MPS
    }

    /// True when `snr_db` is the `off` sentinel.
    pub fn noise_disabled(&self) -> bool {
        self.snr_db.is_infinite() && self.snr_db > 0.0
    }

    /// Checks every structural invariant, naming the offending key.
    pub fn validate(&self) -> Result<()> {
        fn fail(key: &str, message: impl Into<String>) -> Result<()> {
            Err(Error::Validation { key: key.into(), message: message.into() })
        }
        if self.num_subcarriers < 4 || self.num_subcarriers % 2 != 0 {
            return fail(
                "num_subcarriers",
                format!("must be an even integer >= 4, got {}", self.num_subcarriers),
            );
        }
        if self.num_real_symbols < 2 || self.num_real_symbols % 2 != 0 {
            return fail(
                "num_real_symbols",
                format!("must be an even integer >= 2, got {}", self.num_real_symbols),
            );
        }
        if !(2..=4).contains(&self.overlap_factor) {
            return fail(
                "overlap_factor",
                format!("supported overlap factors are 2, 3, 4; got {}", self.overlap_factor),
            );
        }
        if self.cp_length >= self.num_subcarriers {
            return fail(
                "cp_length",
                format!(
                    "must be below num_subcarriers = {}, got {}",
                    self.num_subcarriers, self.cp_length
                ),
            );
        }
        if ![4, 16, 64, 256].contains(&self.constellation_size) {
            return fail(
                "constellation_size",
                format!("supported sizes are 4, 16, 64, 256; got {}", self.constellation_size),
            );
        }
        if self.snr_db.is_nan() || (self.snr_db.is_infinite() && self.snr_db < 0.0) {
            return fail("snr_db", "must be a finite dB value or `off`");
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return fail("sample_rate_hz", "must be a positive finite frequency");
        }
        if !(self.velocity_mps.is_finite() && self.velocity_mps >= 0.0) {
            return fail("velocity_mps", "must be a nonnegative finite speed");
        }
        if !(self.carrier_freq_hz.is_finite() && self.carrier_freq_hz > 0.0) {
            return fail("carrier_freq_hz", "must be a positive finite frequency");
        }
        if !self.cfo_normalized.is_finite() {
            return fail("cfo_normalized", "must be finite");
        }
        if self.num_streams != 1 {
            return fail("num_streams", "single-stream scope: must be 1");
        }
        if self.num_tx != 1 {
            return fail("num_tx", "single-antenna scope: must be 1");
        }
        if self.num_rx != 1 {
            return fail("num_rx", "single-antenna scope: must be 1");
        }
        Ok(())
    }
}

/// Built-in channel profile names plus the two escape hatches.
pub const PROFILE_NAMES: [&str; 5] = ["ITU_VehA", "ITU_PedA", "flat", "ideal", "custom"];

/// A full run description: chain numerology plus campaign-level choices.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ChainParameters,
    /// One of [`PROFILE_NAMES`]. `ideal` bypasses the channel entirely
    /// (received = transmitted); `custom` requires the two profile arrays.
    pub channel_profile: String,
    /// Tap delays for `channel_profile = custom`, nanoseconds, strictly
    /// increasing.
    pub profile_delays_ns: Option<Vec<f64>>,
    /// Tap mean powers for `channel_profile = custom`, dB.
    pub profile_powers_db: Option<Vec<f64>>,
    pub channel_mode: ChannelMode,
    pub channel_estimation: EstimationMethod,
    pub synchronization: SyncMode,
    /// Monte-Carlo trial count; metrics average over trials.
    pub trials: usize,
}

impl RunConfig {
    /// Defaults: Vehicular-A, fixed realization, genie CSI, sync off, one
    /// trial (a single-shot run, like an interactive script would do).
    pub fn defaults(waveform: Waveform) -> Self {
        RunConfig {
            params: ChainParameters::defaults(waveform),
            channel_profile: "ITU_VehA".into(),
            profile_delays_ns: None,
            profile_powers_db: None,
            channel_mode: ChannelMode::Fixed,
            channel_estimation: EstimationMethod::Known,
            synchronization: SyncMode::Off,
            trials: 1,
        }
    }

    /// Parses a `key = value` document into a validated config.
    ///
    /// Omitted keys take the documented defaults (the FBMC-OQAM defaults
    /// unless `waveform` says otherwise). Unknown keys, duplicate keys and
    /// malformed lines are parse errors; structurally valid but inconsistent
    /// values are validation errors naming the key.
    pub fn parse(text: &str) -> Result<RunConfig> {
        // Two passes: waveform first, because the cp_length default depends
        // on it; then everything else over the defaults for that waveform.
        let entries = tokenize(text)?;
        let mut waveform = Waveform::FbmcOqam;
        for entry in &entries {
            if entry.key == "waveform" {
                waveform = parse_waveform(entry)?;
            }
        }
        let mut cfg = RunConfig::defaults(waveform);
        let mut seen: Vec<&str> = Vec::new();
        for entry in &entries {
            if seen.contains(&entry.key.as_str()) {
                return Err(entry.parse_err(format!("duplicate key `{}`", entry.key)));
            }
            apply_entry(&mut cfg, entry)?;
            seen.push(entry.key.as_str());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders the canonical text form; `parse(render(c)) == c` exactly.
    pub fn render(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("waveform", p.waveform.as_str().into());
        line("num_subcarriers", p.num_subcarriers.to_string());
        line("num_real_symbols", p.num_real_symbols.to_string());
        line("overlap_factor", p.overlap_factor.to_string());
        line("cp_length", p.cp_length.to_string());
        line("constellation_size", p.constellation_size.to_string());
        line("snr_db", if p.noise_disabled() { "off".into() } else { p.snr_db.to_string() });
        line("sample_rate_hz", p.sample_rate_hz.to_string());
        line("velocity_mps", p.velocity_mps.to_string());
        line("carrier_freq_hz", p.carrier_freq_hz.to_string());
        line("cfo_normalized", p.cfo_normalized.to_string());
        line("timing_offset", p.timing_offset.to_string());
        line("seed", p.seed.to_string());
        line("num_streams", p.num_streams.to_string());
        line("num_tx", p.num_tx.to_string());
        line("num_rx", p.num_rx.to_string());
        line("channel_profile", self.channel_profile.clone());
        if let Some(d) = &self.profile_delays_ns {
            line("profile_delays_ns", join_floats(d));
        }
        if let Some(pw) = &self.profile_powers_db {
            line("profile_powers_db", join_floats(pw));
        }
        line("channel_mode", self.channel_mode.as_str().into());
        line("channel_estimation", self.channel_estimation.as_str().into());
        line("synchronization", self.synchronization.as_str().into());
        line("trials", self.trials.to_string());
        out
    }

    /// Validates chain parameters plus the campaign-level fields.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        fn fail(key: &str, message: impl Into<String>) -> Result<()> {
            Err(Error::Validation { key: key.into(), message: message.into() })
        }
        if !PROFILE_NAMES.contains(&self.channel_profile.as_str()) {
            return fail(
                "channel_profile",
                format!(
                    "unknown profile `{}`; built-ins are {}",
                    self.channel_profile,
                    PROFILE_NAMES.join(", ")
                ),
            );
        }
        let custom = self.channel_profile == "custom";
        match (custom, &self.profile_delays_ns, &self.profile_powers_db) {
            (true, Some(d), Some(p)) => {
                if d.is_empty() || d.len() != p.len() {
                    return fail(
                        "profile_delays_ns",
                        "delay and power arrays must be nonempty and the same length",
                    );
                }
                if !d.windows(2).all(|w| w[0] < w[1]) || d[0] < 0.0 {
                    return fail(
                        "profile_delays_ns",
                        "delays must be nonnegative and strictly increasing",
                    );
                }
                if !d.iter().chain(p.iter()).all(|x| x.is_finite()) {
                    return fail("profile_powers_db", "profile arrays must be finite");
                }
            }
            (true, _, _) => {
                return fail(
                    "channel_profile",
                    "custom profile requires profile_delays_ns and profile_powers_db",
                );
            }
            (false, None, None) => {}
            (false, _, _) => {
                return fail(
                    "profile_delays_ns",
                    "profile arrays are only valid with channel_profile = custom",
                );
            }
        }
        if self.trials == 0 {
            return fail("trials", "must be at least 1");
        }
        Ok(())
    }
}

struct Entry {
    line_no: usize,
    key: String,
    value: String,
}

impl Entry {
    fn parse_err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.line_no, message: message.into() }
    }
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty key or value".into(),
            });
        }
        entries.push(Entry { line_no, key: key.to_string(), value: value.to_string() });
    }
    Ok(entries)
}

fn parse_waveform(entry: &Entry) -> Result<Waveform> {
    match entry.value.as_str() {
        "FBMC-OQAM" => Ok(Waveform::FbmcOqam),
        "CP-OFDM" => Ok(Waveform::CpOfdm),
        other => Err(Error::Validation {
            key: "waveform".into(),
            message: format!("`{other}` is outside this artifact's scope; use FBMC-OQAM or CP-OFDM"),
        }),
    }
}

fn apply_entry(cfg: &mut RunConfig, entry: &Entry) -> Result<()> {
    let p = &mut cfg.params;
    let v = entry.value.as_str();
    match entry.key.as_str() {
        "waveform" => p.waveform = parse_waveform(entry)?,
        "num_subcarriers" => p.num_subcarriers = parse_num(entry)?,
        "num_real_symbols" => p.num_real_symbols = parse_num(entry)?,
        "overlap_factor" => p.overlap_factor = parse_num(entry)?,
        "cp_length" => p.cp_length = parse_num(entry)?,
        "constellation_size" => p.constellation_size = parse_num(entry)?,
        "snr_db" => {
            p.snr_db = if v.eq_ignore_ascii_case("off") || v.eq_ignore_ascii_case("inf") {
                f64::INFINITY
            } else {
                parse_float(entry)?
            }
        }
        "sample_rate_hz" => p.sample_rate_hz = parse_float(entry)?,
        "velocity_mps" => p.velocity_mps = parse_float(entry)?,
        "carrier_freq_hz" => p.carrier_freq_hz = parse_float(entry)?,
        "cfo_normalized" => p.cfo_normalized = parse_float(entry)?,
        "timing_offset" => {
            p.timing_offset = v
                .parse::<i64>()
                .map_err(|e| entry.parse_err(format!("bad integer `{v}`: {e}")))?
        }
        "seed" => {
            p.seed = v
                .parse::<u64>()
                .map_err(|e| entry.parse_err(format!("bad unsigned integer `{v}`: {e}")))?
        }
        "num_streams" => p.num_streams = parse_num(entry)?,
        "num_tx" => p.num_tx = parse_num(entry)?,
        "num_rx" => p.num_rx = parse_num(entry)?,
        "channel_profile" => cfg.channel_profile = v.to_string(),
        "profile_delays_ns" => cfg.profile_delays_ns = Some(parse_float_list(entry)?),
        "profile_powers_db" => cfg.profile_powers_db = Some(parse_float_list(entry)?),
        "channel_mode" => {
            cfg.channel_mode = match v {
                "fixed" => ChannelMode::Fixed,
                "ergodic" => ChannelMode::Ergodic,
                other => {
                    return Err(Error::Validation {
                        key: "channel_mode".into(),
                        message: format!("`{other}` is not one of fixed, ergodic"),
                    })
                }
            }
        }
        "channel_estimation" => {
            cfg.channel_estimation = match v {
                "known" => EstimationMethod::Known,
                "preamble-LS" => EstimationMethod::PreambleLs,
                other => {
                    return Err(Error::Validation {
                        key: "channel_estimation".into(),
                        message: format!("`{other}` is not one of known, preamble-LS"),
                    })
                }
            }
        }
        "synchronization" => {
            cfg.synchronization = match v {
                "off" => SyncMode::Off,
                "preamble" => SyncMode::Preamble,
                other => {
                    return Err(Error::Validation {
                        key: "synchronization".into(),
                        message: format!("`{other}` is not one of off, preamble"),
                    })
                }
            }
        }
        "trials" => cfg.trials = parse_num(entry)?,
        "chromatic_dispersion" | "phase_noise" | "phase_tracking" => {
            return Err(Error::NotImplemented { feature: entry.key.clone() })
        }
        other => return Err(entry.parse_err(format!("unknown key `{other}`"))),
    }
    Ok(())
}

fn parse_num(entry: &Entry) -> Result<usize> {
    entry
        .value
        .parse::<usize>()
        .map_err(|e| entry.parse_err(format!("bad integer `{}`: {e}", entry.value)))
}

fn parse_float(entry: &Entry) -> Result<f64> {
    entry
        .value
        .parse::<f64>()
        .map_err(|e| entry.parse_err(format!("bad number `{}`: {e}", entry.value)))
}

fn parse_float_list(entry: &Entry) -> Result<Vec<f64>> {
    entry
        .value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| entry.parse_err(format!("bad number `{}` in list: {e}", s.trim())))
        })
        .collect()
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}
