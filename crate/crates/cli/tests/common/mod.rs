//! Independent reference implementations used by the acceptance suite.
//!
//! Everything here is deliberately written the slow, literal way: the
//! filter-bank synthesis and analysis walk the full time-frequency double
//! sum point by point, the channel is a textbook linear convolution, and
//! the special functions come from series or a library erfc. None of it
//! shares code with the library's fast paths, so agreement between the two
//! is evidence, not tautology.

use num_complex::Complex64;
use wavecore::{ComplexGrid, RealGrid};

/// One lattice pulse g_{m,l}[n]: the prototype shifted to column l,
/// modulated to subcarrier m, with the quarter-turn lattice phase and the
/// half-length delay that centers the modulation on the pulse.
pub fn lattice_pulse(taps: &[f64], m2: usize, m: usize, l: usize, n: usize) -> Complex64 {
    let stride = m2 / 2;
    let base = l * stride;
    if n < base || n >= base + taps.len() {
        return Complex64::new(0.0, 0.0);
    }
    let u = n - base;
    let quarter = match (m + l) % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let center = (taps.len() - 1) as f64 / 2.0;
    let ang = 2.0 * std::f64::consts::PI * m as f64 * (u as f64 - center) / m2 as f64;
    quarter * taps[u] * Complex64::from_polar(1.0, ang)
}

/// Filter-bank synthesis as the explicit double sum over all lattice
/// points. O(cols * taps * subcarriers); fine for small test grids.
pub fn fbmc_modulate_direct(d: &RealGrid, taps: &[f64], m2: usize) -> Vec<Complex64> {
    let stride = m2 / 2;
    let len = (d.cols() - 1) * stride + taps.len();
    let mut s = vec![Complex64::new(0.0, 0.0); len];
    for l in 0..d.cols() {
        for u in 0..taps.len() {
            let n = l * stride + u;
            for m in 0..d.rows() {
                s[n] += d[(m, l)] * lattice_pulse(taps, m2, m, l, n);
            }
        }
    }
    s
}

/// Matched-filter analysis as explicit inner products against each
/// lattice pulse.
pub fn fbmc_demodulate_direct(
    r: &[Complex64],
    taps: &[f64],
    m2: usize,
    cols: usize,
) -> ComplexGrid {
    let stride = m2 / 2;
    let mut z = ComplexGrid::new(m2, cols);
    for l in 0..cols {
        for m in 0..m2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for u in 0..taps.len() {
                let n = l * stride + u;
                if n < r.len() {
                    acc += r[n] * lattice_pulse(taps, m2, m, l, n).conj();
                }
            }
            z[(m, l)] = acc;
        }
    }
    z
}

/// Plain linear convolution, full length `x.len() + h.len() - 1`.
pub fn direct_linear_conv(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (n, &xn) in x.iter().enumerate() {
        for (k, &hk) in h.iter().enumerate() {
            y[n + k] += xn * hk;
        }
    }
    y
}

/// Gaussian tail probability Q(x) = P(N(0,1) > x).
pub fn q_func(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// Bessel function of the first kind, order zero, by its power series.
/// Converges quickly for the argument range the Doppler checks use
/// (|x| below ~20).
pub fn bessel_j0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0f64;
    let mut acc = 1.0f64;
    for k in 1..200u32 {
        term *= -q / ((k as f64) * (k as f64));
        acc += term;
        if term.abs() < 1e-16 * acc.abs().max(1e-12) {
            break;
        }
    }
    acc
}

/// Sample Pearson correlation coefficient of two equal-length series.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Uniform f64 in [0, 1) from a 64-bit draw.
pub fn unit_uniform(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
