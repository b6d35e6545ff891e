//! Symbol grids, Gray-mapped QAM, OQAM staggering and hard decisions.
//!
//! Everything downstream works on a `(subcarrier, time)` lattice stored as
//! [`Grid`]. FBMC consumes a real-valued grid of half-rate symbols (each
//! complex QAM symbol split into two real components on adjacent columns);
//! OFDM consumes the complex QAM grid directly.
//!
//! Power conventions, fixed once here so SNR means one thing everywhere:
//! complex QAM alphabets have exact unit mean power, and the OQAM split
//! rescales components by sqrt(2) so real half-rate symbols also have unit
//! mean power (4-QAM maps to exactly {-1, +1}).

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::{ChainParameters, Waveform};

/// Dense column-major 2-D array indexed `(subcarrier, column)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
}

/// Real-valued OQAM half-rate symbol lattice.
pub type RealGrid = Grid<f64>;
/// Complex-valued QAM symbol lattice (also used for demodulated samples).
pub type ComplexGrid = Grid<Complex64>;

impl<T: Copy + Default> Grid<T> {
    /// Zero-filled grid of the given shape.
    pub fn new(rows: usize, cols: usize) -> Self {
        Grid { data: vec![T::default(); rows * cols], rows, cols }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut g = Grid::new(rows, cols);
        for l in 0..cols {
            for m in 0..rows {
                g[(m, l)] = f(m, l);
            }
        }
        g
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column `l` as a contiguous slice of `rows` entries.
    pub fn col(&self, l: usize) -> &[T] {
        &self.data[l * self.rows..(l + 1) * self.rows]
    }

    pub fn col_mut(&mut self, l: usize) -> &mut [T] {
        &mut self.data[l * self.rows..(l + 1) * self.rows]
    }

    /// Flat column-major view of the data.
    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Copy of columns `[from, to)` as a new grid.
    pub fn col_range(&self, from: usize, to: usize) -> Grid<T> {
        assert!(from <= to && to <= self.cols);
        Grid { data: self.data[from * self.rows..to * self.rows].to_vec(), rows: self.rows, cols: to - from }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Grid<T> {
    type Output = T;
    fn index(&self, (m, l): (usize, usize)) -> &T {
        &self.data[l * self.rows + m]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (m, l): (usize, usize)) -> &mut T {
        &mut self.data[l * self.rows + m]
    }
}

/// A symbol lattice tagged with its domain.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolGrid {
    /// Real half-rate symbols, shape `num_subcarriers x num_real_symbols`.
    RealOqam(RealGrid),
    /// Complex QAM symbols, shape `num_subcarriers x num_qam_cols`.
    ComplexQam(ComplexGrid),
}

/// Per-axis amplitude step of the unit-power square QAM constellation:
/// levels are `(2i - (L-1)) * step` for `i in 0..L`, `L = sqrt(size)`.
/// The step `sqrt(3 / (2(size-1)))` makes the mean symbol power exactly 1.
pub fn qam_axis_step(size: usize) -> f64 {
    (3.0 / (2.0 * (size as f64 - 1.0))).sqrt()
}

fn axis_levels(size: usize) -> usize {
    // 4 -> 2, 16 -> 4, 64 -> 8, 256 -> 16
    (size as f64).sqrt().round() as usize
}

fn bits_per_axis(size: usize) -> usize {
    axis_levels(size).trailing_zeros() as usize
}

fn gray_encode(n: usize) -> usize {
    n ^ (n >> 1)
}

fn gray_decode(mut g: usize) -> usize {
    let mut n = g;
    while g > 0 {
        g >>= 1;
        n ^= g;
    }
    n
}

/// Maps one label of `2 log2(L)` bits to a constellation point. The high
/// half of the label Gray-codes the in-phase level index, the low half the
/// quadrature level index.
pub fn qam_point(size: usize, label: usize) -> Complex64 {
    let ba = bits_per_axis(size);
    let l = axis_levels(size);
    let step = qam_axis_step(size);
    let gi = (label >> ba) & (l - 1);
    let gq = label & (l - 1);
    let i = gray_decode(gi);
    let q = gray_decode(gq);
    Complex64::new(
        (2.0 * i as f64 - (l as f64 - 1.0)) * step,
        (2.0 * q as f64 - (l as f64 - 1.0)) * step,
    )
}

/// Decides one axis coordinate: nearest level index, with exact midpoints
/// resolved toward the neighbor whose Gray label is lexicographically
/// smaller (for Gray-coded axes the smaller label is not always the lower
/// level: between levels 2 and 3 of a 4-level axis the labels are 11 and
/// 10, so the tie goes up).
fn decide_axis(x: f64, size: usize) -> usize {
    let l = axis_levels(size);
    let step = qam_axis_step(size);
    let u = (x / step + (l as f64 - 1.0)) / 2.0;
    if u <= 0.0 {
        return 0;
    }
    if u >= (l - 1) as f64 {
        return l - 1;
    }
    let lo = u.floor();
    let frac = u - lo;
    let lo = lo as usize;
    if frac > 0.5 {
        lo + 1
    } else if frac < 0.5 {
        lo
    } else if gray_encode(lo) < gray_encode(lo + 1) {
        lo
    } else {
        lo + 1
    }
}

/// Nearest-neighbor decision plus Gray bit demapping for a complex grid.
/// Bits come out column-major, one label per symbol, most significant bit
/// first (in-phase bits, then quadrature bits) — the same order
/// [`generate_data`] emits.
pub fn hard_decide(grid: &ComplexGrid, size: usize) -> (ComplexGrid, Vec<u8>) {
    let ba = bits_per_axis(size);
    let mut decided = ComplexGrid::new(grid.rows(), grid.cols());
    let mut bits = Vec::with_capacity(grid.rows() * grid.cols() * 2 * ba);
    for l in 0..grid.cols() {
        for m in 0..grid.rows() {
            let z = grid[(m, l)];
            let i = decide_axis(z.re, size);
            let q = decide_axis(z.im, size);
            let label = (gray_encode(i) << ba) | gray_encode(q);
            decided[(m, l)] = qam_point(size, label);
            for b in (0..2 * ba).rev() {
                bits.push(((label >> b) & 1) as u8);
            }
        }
    }
    (decided, bits)
}

/// Splits a complex QAM grid into the real half-rate lattice: even
/// subcarriers emit (Re, Im) on column pairs, odd subcarriers (Im, Re),
/// each component scaled by sqrt(2) to restore unit mean power.
pub fn oqam_stagger(qam: &ComplexGrid) -> RealGrid {
    let s = std::f64::consts::SQRT_2;
    let mut d = RealGrid::new(qam.rows(), qam.cols() * 2);
    for l in 0..qam.cols() {
        for m in 0..qam.rows() {
            let c = qam[(m, l)];
            let (first, second) = if m % 2 == 0 { (c.re, c.im) } else { (c.im, c.re) };
            d[(m, 2 * l)] = s * first;
            d[(m, 2 * l + 1)] = s * second;
        }
    }
    d
}

/// Exact inverse of [`oqam_stagger`].
pub fn oqam_destagger(d: &RealGrid) -> Result<ComplexGrid> {
    if d.cols() % 2 != 0 {
        return Err(Error::Shape {
            message: format!("destagger needs an even column count, got {}", d.cols()),
        });
    }
    let s = std::f64::consts::SQRT_2;
    let mut qam = ComplexGrid::new(d.rows(), d.cols() / 2);
    for l in 0..qam.cols() {
        for m in 0..d.rows() {
            let a = d[(m, 2 * l)] / s;
            let b = d[(m, 2 * l + 1)] / s;
            let (re, im) = if m % 2 == 0 { (a, b) } else { (b, a) };
            qam[(m, l)] = Complex64::new(re, im);
        }
    }
    Ok(qam)
}

/// One trial's worth of data: the underlying QAM grid, its Gray bits, and
/// the grid in the form the configured waveform's modulator consumes.
#[derive(Debug, Clone)]
pub struct DataBlock {
    /// Complex QAM symbols, `num_subcarriers x num_qam_cols`.
    pub qam: ComplexGrid,
    /// Gray label bits behind `qam`, column-major, MSB first per symbol.
    pub bits: Vec<u8>,
    /// What the modulator takes: staggered real grid for FBMC-OQAM, the
    /// complex grid itself for CP-OFDM.
    pub grid: SymbolGrid,
}

/// Draws a uniform random QAM grid of the given shape. Labels come from
/// masked 32-bit draws (constellation sizes are powers of two, so masking
/// is unbiased).
pub fn random_qam_grid(
    rows: usize,
    cols: usize,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> (ComplexGrid, Vec<u8>) {
    let ba = bits_per_axis(size);
    let mut grid = ComplexGrid::new(rows, cols);
    let mut bits = Vec::with_capacity(rows * cols * 2 * ba);
    for l in 0..cols {
        for m in 0..rows {
            let label = (rng.next_u32() as usize) & (size - 1);
            grid[(m, l)] = qam_point(size, label);
            for b in (0..2 * ba).rev() {
                bits.push(((label >> b) & 1) as u8);
            }
        }
    }
    (grid, bits)
}

/// Generates one trial's data for the configured waveform.
pub fn generate_data(params: &ChainParameters, rng: &mut ChaCha8Rng) -> DataBlock {
    let (qam, bits) = random_qam_grid(
        params.num_subcarriers,
        params.num_qam_cols(),
        params.constellation_size,
        rng,
    );
    let grid = match params.waveform {
        Waveform::FbmcOqam => SymbolGrid::RealOqam(oqam_stagger(&qam)),
        Waveform::CpOfdm => SymbolGrid::ComplexQam(qam.clone()),
    };
    DataBlock { qam, bits, grid }
}
