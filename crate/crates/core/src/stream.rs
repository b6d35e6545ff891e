//! Complex baseband sample streams and their binary file format.
//!
//! The on-disk format is little-endian: magic `WCBX`, a u32 format version
//! (currently 1), a u64 sample count, the f64 sample rate in Hz, then
//! count * (f64 real, f64 imaginary). Nothing else — no compression, no
//! chunking — so any tool can mmap or stream it.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"WCBX";
const FORMAT_VERSION: u32 = 1;

/// A contiguous run of complex baseband samples.
///
/// `origin_offset` records which array index corresponds to time n = 0;
/// it stays 0 for freshly modulated signals and is preserved (not shifted)
/// by impairment ops, so a timing offset actually displaces the signal
/// relative to where the receiver believes time zero is.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub origin_offset: usize,
}

impl SampleStream {
    /// Wraps samples with origin at index 0. Panics on an empty vector —
    /// a zero-length stream is a programming error, not a runtime input.
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Self {
        assert!(!samples.is_empty(), "sample stream must be nonempty");
        SampleStream { samples, sample_rate_hz, origin_offset: 0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean per-sample power `mean |s[n]|^2`, the reference the noise
    /// calibration uses.
    pub fn average_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Serializes to the `WCBX` binary layout.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(self.samples.len() as u64).to_le_bytes())?;
        w.write_all(&self.sample_rate_hz.to_le_bytes())?;
        for s in &self.samples {
            w.write_all(&s.re.to_le_bytes())?;
            w.write_all(&s.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the `WCBX` binary layout, validating magic, version and length.
    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(Error::FrameFormat {
                message: format!("bad magic {:02x?}, expected `WCBX`", magic),
            });
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != FORMAT_VERSION {
            return Err(Error::FrameFormat {
                message: format!("unsupported format version {version}"),
            });
        }
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let count = u64::from_le_bytes(u64buf);
        if count == 0 {
            return Err(Error::FrameFormat { message: "zero-length stream".into() });
        }
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf)?;
        let sample_rate_hz = f64::from_le_bytes(f64buf);
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::FrameFormat {
                message: format!("invalid sample rate {sample_rate_hz}"),
            });
        }
        let count = usize::try_from(count)
            .map_err(|_| Error::FrameFormat { message: "stream length overflows usize".into() })?;
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut f64buf)?;
            let re = f64::from_le_bytes(f64buf);
            r.read_exact(&mut f64buf)?;
            let im = f64::from_le_bytes(f64buf);
            samples.push(Complex64::new(re, im));
        }
        Ok(SampleStream { samples, sample_rate_hz, origin_offset: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> SampleStream {
        SampleStream::new(
            (0..n).map(|i| Complex64::new(i as f64, -(i as f64) / 2.0)).collect(),
            1.92e6,
        )
    }

    #[test]
    fn write_read_round_trip_is_bit_exact() {
        let s = ramp(257);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 257 * 16);
        let back = SampleStream::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn header_layout_is_stable() {
        let s = SampleStream::new(vec![Complex64::new(1.0, 2.0)], 48_000.0);
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"WCBX");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 1);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 48_000.0);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[32..40].try_into().unwrap()), 2.0);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut buf = Vec::new();
        ramp(3).write_to(&mut buf).unwrap();
        buf[0] = b'X';
        match SampleStream::read_from(&mut buf.as_slice()) {
            Err(Error::FrameFormat { message }) => assert!(message.contains("magic")),
            other => panic!("expected frame format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_an_io_error() {
        let mut buf = Vec::new();
        ramp(10).write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 7);
        assert!(matches!(SampleStream::read_from(&mut buf.as_slice()), Err(Error::Io(_))));
    }

    #[test]
    fn average_power_of_unit_circle_samples() {
        let s = SampleStream::new(
            (0..1000)
                .map(|i| Complex64::from_polar(1.0, i as f64))
                .collect(),
            1.0,
        );
        assert!((s.average_power() - 1.0).abs() < 1e-12);
    }
}
