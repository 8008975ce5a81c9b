//! Planar array geometry, the distance-based coupling model and the
//! reciprocal inter-antenna channel.
//!
//! Antenna `m` (zero-based) sits at row `m / cols`, column `m % cols`, which
//! is the row-major map `m = cols·(row−1) + col` in one-based terms. Ports
//! alternate in a checkerboard so that horizontally and vertically adjacent
//! elements are cross-polarized.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CalError, Result};
use crate::random::{complex_normal, unit_phasor};

/// Relation between the polarization ports of two antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Co,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
    spacing: f64,
    positions: Vec<[f64; 2]>,
    ports: Vec<bool>,
}

impl ArrayGeometry {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Element spacing in wavelengths.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Position of antenna `m` in wavelengths, `[x, y]` = `[col, row]·spacing`.
    pub fn position(&self, m: usize) -> [f64; 2] {
        self.positions[m]
    }

    /// Polarization port label; adjacent elements carry opposite labels.
    pub fn port(&self, m: usize) -> bool {
        self.ports[m]
    }

    /// Zero-based antenna index of zero-based `(row, col)`.
    pub fn index(&self, row: usize, col: usize) -> Result<usize> {
        if row >= self.rows || col >= self.cols {
            return Err(CalError::invalid(format!(
                "cell ({row}, {col}) outside {}x{} array",
                self.rows, self.cols
            )));
        }
        Ok(row * self.cols + col)
    }

    /// Zero-based `(row, col)` of antenna `m`.
    pub fn cell(&self, m: usize) -> Result<(usize, usize)> {
        self.check_index(m)?;
        Ok((m / self.cols, m % self.cols))
    }

    pub(crate) fn check_index(&self, m: usize) -> Result<()> {
        if m >= self.len() {
            return Err(CalError::IndexOutOfRange {
                index: m,
                count: self.len(),
            });
        }
        Ok(())
    }

    fn distance_unchecked(&self, m: usize, n: usize) -> f64 {
        let [xm, ym] = self.positions[m];
        let [xn, yn] = self.positions[n];
        (xm - xn).hypot(ym - yn)
    }
}

/// Lays out a `rows × cols` grid with checkerboard polarization.
pub fn build_geometry(rows: usize, cols: usize, spacing: f64) -> Result<ArrayGeometry> {
    if rows == 0 || cols == 0 {
        return Err(CalError::invalid("array needs at least one row and one column"));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(CalError::invalid(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let mut positions = Vec::with_capacity(rows * cols);
    let mut ports = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            positions.push([col as f64 * spacing, row as f64 * spacing]);
            ports.push((row + col) % 2 == 0);
        }
    }
    Ok(ArrayGeometry {
        rows,
        cols,
        spacing,
        positions,
        ports,
    })
}

/// Distance (wavelengths) and polarization relation of an antenna pair.
pub fn pair_distance_polarization(geom: &ArrayGeometry, m: usize, n: usize) -> Result<(f64, Polarization)> {
    geom.check_index(m)?;
    geom.check_index(n)?;
    if m == n {
        return Err(CalError::invalid(format!("antenna {m} paired with itself")));
    }
    let pol = if geom.ports[m] == geom.ports[n] {
        Polarization::Co
    } else {
        Polarization::Cross
    };
    Ok((geom.distance_unchecked(m, n), pol))
}

/// Linear-in-dB coupling fit, one line per polarization relation, plus the
/// variance of the diffuse multipath term.
///
/// The default coefficients are illustrative, not measured: adjacent
/// (cross-polarized) elements couple at −16.5 dB, co-polarized pairs couple
/// 3 dB stronger at equal distance, and both decay by 3 dB per wavelength,
/// reaching about −50 dB across a 25-column array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CouplingModel {
    /// dB per wavelength.
    pub co_slope: f64,
    /// dB.
    pub co_intercept: f64,
    pub cross_slope: f64,
    pub cross_intercept: f64,
    /// Variance of the diffuse term, linear scale.
    pub sigma2: f64,
}

impl Default for CouplingModel {
    fn default() -> Self {
        CouplingModel {
            co_slope: -3.0,
            co_intercept: -12.0,
            cross_slope: -3.0,
            cross_intercept: -15.0,
            sigma2: 1e-6,
        }
    }
}

impl CouplingModel {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.co_slope,
            self.co_intercept,
            self.cross_slope,
            self.cross_intercept,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(CalError::invalid("coupling fit coefficients must be finite"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(CalError::invalid(format!(
                "sigma2 must be >= 0, got {}",
                self.sigma2
            )));
        }
        Ok(())
    }

    /// Coupling gain in dB at `distance` wavelengths.
    pub fn gain_db(&self, distance: f64, pol: Polarization) -> Result<f64> {
        coupling_gain_db(self, distance, pol)
    }

    /// Linear coupling amplitude `|h̄|`.
    pub fn amplitude(&self, distance: f64, pol: Polarization) -> Result<f64> {
        Ok(10f64.powf(self.gain_db(distance, pol)? / 20.0))
    }
}

pub fn coupling_gain_db(model: &CouplingModel, distance: f64, pol: Polarization) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(CalError::invalid(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(match pol {
        Polarization::Co => model.co_intercept + model.co_slope * distance,
        Polarization::Cross => model.cross_intercept + model.cross_slope * distance,
    })
}

/// Offset of unordered pair `(n, m)`, `n < m`, in packed upper-triangular
/// storage.
#[inline]
pub(crate) fn pair_slot(count: usize, n: usize, m: usize) -> usize {
    debug_assert!(n < m && m < count);
    n * count - n * (n + 1) / 2 + (m - n - 1)
}

/// Symmetric `M × M` channel with an undefined diagonal.
///
/// Only one value per unordered pair is stored, so `h(n, m) == h(m, n)` holds
/// exactly. Reading the diagonal is a contract violation and panics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    count: usize,
    values: Vec<Complex64>,
}

impl ChannelMatrix {
    /// All-zero channel.
    pub fn zeros(count: usize) -> Self {
        ChannelMatrix {
            count,
            values: vec![Complex64::new(0.0, 0.0); count * count.saturating_sub(1) / 2],
        }
    }

    /// Builds a channel from `f(n, m)` evaluated once per pair with `n < m`.
    pub fn from_fn(count: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(count * count.saturating_sub(1) / 2);
        for n in 0..count {
            for m in n + 1..count {
                values.push(f(n, m));
            }
        }
        ChannelMatrix { count, values }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `h_{n,m}`; panics when `n == m`.
    #[inline]
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        assert!(
            n != m,
            "diagonal of the channel matrix is undefined (antenna {n})"
        );
        let (a, b) = if n < m { (n, m) } else { (m, n) };
        self.values[pair_slot(self.count, a, b)]
    }

    pub fn try_get(&self, n: usize, m: usize) -> Result<Complex64> {
        if n >= self.count || m >= self.count {
            return Err(CalError::IndexOutOfRange {
                index: n.max(m),
                count: self.count,
            });
        }
        if n == m {
            return Err(CalError::invalid("diagonal of the channel matrix is undefined"));
        }
        Ok(self.get(n, m))
    }

    pub fn set(&mut self, n: usize, m: usize, value: Complex64) {
        assert!(
            n != m,
            "diagonal of the channel matrix is undefined (antenna {n})"
        );
        let (a, b) = if n < m { (n, m) } else { (m, n) };
        self.values[pair_slot(self.count, a, b)] = value;
    }

    /// Entry-wise sum with another channel of the same size.
    pub fn add(&self, other: &ChannelMatrix) -> ChannelMatrix {
        assert_eq!(self.count, other.count);
        ChannelMatrix {
            count: self.count,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Dense copy with `NaN` on the diagonal.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        nalgebra::DMatrix::from_fn(
            self.count,
            self.count,
            |n, m| {
                if n == m {
                    nan
                } else {
                    self.get(n, m)
                }
            },
        )
    }
}

/// Deterministic coupling `h̄_{n,m} = |h̄| exp(j2πφ)` with `φ ~ U[0,1)` drawn
/// once per unordered pair.
pub fn draw_coupling<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    model: &CouplingModel,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    model.validate()?;
    let amps = coupling_amplitudes(geom, model)?;
    let mut k = 0;
    Ok(ChannelMatrix::from_fn(geom.len(), |_, _| {
        let v = amps.values[k].re * unit_phasor(rng);
        k += 1;
        v
    }))
}

/// `|h̄_{n,m}|` for every pair (real, zero phase).
pub fn coupling_amplitudes(geom: &ArrayGeometry, model: &CouplingModel) -> Result<ChannelMatrix> {
    model.validate()?;
    let mut out = ChannelMatrix::zeros(geom.len());
    for n in 0..geom.len() {
        for m in n + 1..geom.len() {
            let (d, pol) = pair_distance_polarization(geom, n, m)?;
            out.set(n, m, Complex64::new(model.amplitude(d, pol)?, 0.0));
        }
    }
    Ok(out)
}

/// Adds the reciprocal diffuse term `h̃ ~ CN(0, σ²)`, one draw per pair.
pub fn add_diffuse<R: Rng + ?Sized>(hbar: &ChannelMatrix, sigma2: f64, rng: &mut R) -> ChannelMatrix {
    if sigma2 == 0.0 {
        return hbar.clone();
    }
    ChannelMatrix {
        count: hbar.count,
        values: hbar
            .values
            .iter()
            .map(|h| h + complex_normal(rng, sigma2))
            .collect(),
    }
}

/// Full channel draw: coupling with random phases plus diffuse multipath.
pub fn draw_channel<R: Rng + ?Sized>(
    geom: &ArrayGeometry,
    model: &CouplingModel,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    let hbar = draw_coupling(geom, model, rng)?;
    Ok(add_diffuse(&hbar, model.sigma2, rng))
}

/// Symmetric set of measured antenna pairs.
///
/// Stored as unordered pairs `(n, m)` with `n < m`; membership implies both
/// ordered measurements `y_{n,m}` and `y_{m,n}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementMask {
    count: usize,
    pairs: Vec<(usize, usize)>,
    neighbors: Vec<Vec<(usize, usize)>>,
}

impl MeasurementMask {
    /// Every off-diagonal pair.
    pub fn full(count: usize) -> Self {
        let pairs = (0..count)
            .flat_map(|n| (n + 1..count).map(move |m| (n, m)))
            .collect();
        Self::build(count, pairs)
    }

    /// Mask from unordered pairs in any order and orientation; duplicates
    /// collapse.
    pub fn from_pairs(count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut v = Vec::new();
        for (a, b) in pairs {
            if a >= count || b >= count {
                return Err(CalError::IndexOutOfRange {
                    index: a.max(b),
                    count,
                });
            }
            if a == b {
                return Err(CalError::invalid(format!("self pair ({a}, {a}) in mask")));
            }
            v.push((a.min(b), a.max(b)));
        }
        v.sort_unstable();
        v.dedup();
        Ok(Self::build(count, v))
    }

    /// Adjacent pairs `(ℓ, ℓ+1)` of a chain.
    pub fn chain(count: usize) -> Self {
        Self::build(count, (1..count).map(|m| (m - 1, m)).collect())
    }

    fn build(count: usize, pairs: Vec<(usize, usize)>) -> Self {
        let mut neighbors = vec![Vec::new(); count];
        for (slot, &(n, m)) in pairs.iter().enumerate() {
            neighbors[n].push((m, slot));
            neighbors[m].push((n, slot));
        }
        MeasurementMask {
            count,
            pairs,
            neighbors,
        }
    }

    pub fn antenna_count(&self) -> usize {
        self.count
    }

    /// Unordered pairs, sorted, `n < m`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of ordered measurements, `2·|pairs|`.
    pub fn ordered_len(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Partners of antenna `m` together with the index of the shared pair in
    /// [`pairs`](Self::pairs).
    pub fn neighbors(&self, m: usize) -> &[(usize, usize)] {
        &self.neighbors[m]
    }

    pub fn contains(&self, n: usize, m: usize) -> bool {
        if n == m || n >= self.count || m >= self.count {
            return false;
        }
        self.pairs.binary_search(&(n.min(m), n.max(m))).is_ok()
    }

    pub fn is_subset_of(&self, other: &MeasurementMask) -> bool {
        self.count == other.count && self.pairs.iter().all(|&(n, m)| other.contains(n, m))
    }

    /// True when the pair graph reaches every antenna from antenna 0.
    pub fn is_connected(&self) -> bool {
        if self.count <= 1 {
            return true;
        }
        let mut seen = vec![false; self.count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(a) = stack.pop() {
            for &(b, _) in &self.neighbors[a] {
                if !seen[b] {
                    seen[b] = true;
                    visited += 1;
                    stack.push(b);
                }
            }
        }
        visited == self.count
    }
}

/// Pairs no farther apart than `radius` wavelengths. `f64::INFINITY` yields
/// the full mask.
pub fn reduced_mask(geom: &ArrayGeometry, radius: f64) -> Result<MeasurementMask> {
    if !(radius > 0.0) {
        return Err(CalError::invalid(format!(
            "radius must be positive, got {radius}"
        )));
    }
    // Grid distances are multiples of the spacing; absorb rounding so that
    // e.g. the diagonal 0.5·√2 is kept at radius 1/√2.
    let tol = 1e-9 * geom.spacing();
    let m = geom.len();
    let mut pairs = Vec::new();
    for a in 0..m {
        for b in a + 1..m {
            if geom.distance_unchecked(a, b) <= radius + tol {
                pairs.push((a, b));
            }
        }
    }
    Ok(MeasurementMask::build(m, pairs))
}
