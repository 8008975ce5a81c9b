//! Inter-antenna sounding: `Y = R H T + N` restricted to a measurement mask.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{CalError, Result};
use crate::frontend::FrontEnd;
use crate::geometry::{add_diffuse, ChannelMatrix, MeasurementMask};
use crate::random::complex_normal;

/// Measured `y_{n,m}` (received at `n` while `m` transmits).
///
/// Entries on the diagonal or outside the mask are undefined.
#[derive(Debug, Clone)]
pub struct SoundingData {
    count: usize,
    /// Row-major, receiver index first. `NaN` marks undefined entries.
    y: Vec<Complex64>,
    mask: MeasurementMask,
    pub n0: f64,
    pub amplitude: f64,
}

impl SoundingData {
    /// Wraps externally produced measurements; `y(n, m)` is queried once per
    /// ordered pair in the mask.
    pub fn from_fn(mask: MeasurementMask, n0: f64, mut y: impl FnMut(usize, usize) -> Complex64) -> Self {
        let count = mask.antenna_count();
        let mut values = vec![Complex64::new(f64::NAN, f64::NAN); count * count];
        for &(n, m) in mask.pairs() {
            values[n * count + m] = y(n, m);
            values[m * count + n] = y(m, n);
        }
        SoundingData {
            count,
            y: values,
            mask,
            n0,
            amplitude: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn mask(&self) -> &MeasurementMask {
        &self.mask
    }

    /// `y_{n,m}` if measured. Panics on the diagonal.
    pub fn get(&self, n: usize, m: usize) -> Option<Complex64> {
        assert!(
            n != m,
            "diagonal of the sounding matrix is undefined (antenna {n})"
        );
        if self.mask.contains(n, m) {
            Some(self.y[n * self.count + m])
        } else {
            None
        }
    }

    /// Unchecked read for estimator inner loops; caller guarantees `(n, m)`
    /// is in the mask.
    #[inline]
    pub(crate) fn raw(&self, n: usize, m: usize) -> Complex64 {
        self.y[n * self.count + m]
    }

    /// Frobenius norm over measured entries.
    pub fn norm(&self) -> f64 {
        self.mask
            .pairs()
            .iter()
            .map(|&(n, m)| self.raw(n, m).norm_sqr() + self.raw(m, n).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Same measurements multiplied by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        let mut out = self.clone();
        out.y.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Keeps only the measurements in `mask`, which must be a subset of the
    /// current one.
    pub fn restricted(&self, mask: &MeasurementMask) -> Result<Self> {
        if !mask.is_subset_of(&self.mask) {
            return Err(CalError::invalid(
                "restriction mask is not a subset of the measured pairs",
            ));
        }
        Ok(Self::from_fn(mask.clone(), self.n0, |n, m| self.raw(n, m)))
    }

    /// Dense copy with `NaN` at undefined entries.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.count, self.count, &self.y)
    }
}

/// Draws `y_{n,m} = r_n h_{n,m} t_m s + n_{n,m}` for every ordered pair in
/// `mask`, with independent `CN(0, N0)` noise per ordered pair.
pub fn sound<R: Rng + ?Sized>(
    h: &ChannelMatrix,
    fe: &FrontEnd,
    n0: f64,
    amplitude: f64,
    mask: &MeasurementMask,
    rng: &mut R,
) -> Result<SoundingData> {
    if !(n0 >= 0.0 && n0.is_finite()) {
        return Err(CalError::invalid(format!(
            "noise variance must be >= 0, got {n0}"
        )));
    }
    let count = h.len();
    if fe.len() != count || mask.antenna_count() != count {
        return Err(CalError::invalid(format!(
            "size mismatch: channel {count}, front-end {}, mask {}",
            fe.len(),
            mask.antenna_count()
        )));
    }
    let mut data = SoundingData::from_fn(mask.clone(), n0, |n, m| {
        let mut v = fe.r[n] * h.get(n, m) * fe.t[m] * amplitude;
        if n0 > 0.0 {
            v += complex_normal(rng, n0);
        }
        v
    });
    data.amplitude = amplitude;
    Ok(data)
}

/// Fixed coupling `h̄` plus the per-trial randomness: the diffuse term and
/// the measurement noise are redrawn on every [`SoundingSetup::draw`].
#[derive(Debug, Clone)]
pub struct SoundingSetup {
    pub hbar: ChannelMatrix,
    pub sigma2: f64,
    pub n0: f64,
    pub mask: MeasurementMask,
}

impl SoundingSetup {
    pub fn draw<R: Rng + ?Sized>(&self, fe: &FrontEnd, rng: &mut R) -> Result<SoundingData> {
        let h = add_diffuse(&self.hbar, self.sigma2, rng);
        sound(&h, fe, self.n0, 1.0, &self.mask, rng)
    }
}

/// `Ψ = R H R`, i.e. `ψ_{n,m} = r_n h_{n,m} r_m`.
pub fn equivalent_channel(h: &ChannelMatrix, fe: &FrontEnd) -> ChannelMatrix {
    ChannelMatrix::from_fn(h.len(), |n, m| fe.r[n] * h.get(n, m) * fe.r[m])
}
