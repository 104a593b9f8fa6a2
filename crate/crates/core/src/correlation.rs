//! Spatial correlation across FAS ports and its block-correlation
//! approximation.
//!
//! Ports are spread evenly over an aperture of `W` wavelengths. Under the 3D
//! Clarke model the correlation between ports `ς` and `τ` is
//! `sinc(2π(ς − τ)W/(N − 1))`, which makes the matrix symmetric Toeplitz.
//!
//! The block model replaces that matrix with `B` constant-correlation blocks,
//! one per eigenvalue above a threshold `λ_th`. With `μ = 1` each block acts as
//! a single antenna, so the port set collapses to `B` independent branches.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::special::sinc;

/// Minimum eigenvalue below which a matrix is reported as numerically
/// indefinite.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Jitter floor added to the diagonal before factorization.
pub const JITTER_FLOOR: f64 = 1e-10;

/// Cholesky pivots at or below this value are treated as exact zeros.
const PIVOT_DROP: f64 = 1e-9;

/// Default eigenvalue threshold `λ_th`.
pub const DEFAULT_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortGeometry {
    n_ports: usize,
    aperture: f64,
}

impl PortGeometry {
    pub fn new(n_ports: usize, aperture: f64) -> Result<Self> {
        if n_ports == 0 {
            return Err(Error::invalid("n_ports", "must be at least 1"));
        }
        if !(aperture.is_finite() && aperture >= 0.0) {
            return Err(Error::invalid(
                "aperture",
                format!("must be finite and nonnegative, got {aperture}"),
            ));
        }
        Ok(Self { n_ports, aperture })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }
}

/// Correlation between two ports `delta_ports` positions apart.
///
/// Only meaningful for `N >= 2`; a single port has no spacing and returns 1.
pub fn spatial_correlation(delta_ports: i64, geometry: &PortGeometry) -> f64 {
    if geometry.n_ports < 2 || delta_ports == 0 {
        return 1.0;
    }
    let spacing = geometry.aperture / (geometry.n_ports - 1) as f64;
    sinc(2.0 * PI * delta_ports as f64 * spacing)
}

/// Symmetric correlation matrix with its eigen-spectrum sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    eigenvalues: Vec<f64>,
}

impl CorrelationMatrix {
    /// Wraps an explicit matrix. The matrix must be square, symmetric and have
    /// a unit diagonal.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: entries.ncols(),
            });
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("entries", format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid("entries", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        let eigenvalues = sorted_spectrum(&entries);
        let min = *eigenvalues.last().expect("nonempty");
        if min < -PSD_TOLERANCE {
            log::warn!("correlation matrix is indefinite: min eigenvalue {min:.3e}");
        }
        Ok(Self {
            entries,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    /// True when the spectrum dips below `-PSD_TOLERANCE`.
    pub fn is_degenerate(&self) -> bool {
        self.min_eigenvalue() < -PSD_TOLERANCE
    }

    /// Lower-triangular factor `L` with `L Lᵀ ≈ Σ`, used to colour white
    /// Gaussian draws.
    ///
    /// The matrix is regularised as `Σ + δI` with
    /// `δ = max(0, −λ_min) + 1e−10`, rescaled back to a unit diagonal and then
    /// Cholesky-factored. Pivots that collapse to ≤ 1e−9 are zeroed, so
    /// perfectly correlated ports come out as exact scalar multiples.
    pub fn sampling_factor(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let delta = (-self.min_eigenvalue()).max(0.0) + JITTER_FLOOR;
        let mut a = self.entries.clone();
        for i in 0..n {
            a[(i, i)] += delta;
        }
        let scale: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt().recip()).collect();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= scale[i] * scale[j];
            }
        }
        semidefinite_cholesky(&a)
    }

    /// Writes the spectrum as `index,eigenvalue` rows (1-based index).
    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::invalid("output", e.to_string());
        w.write_record(["index", "eigenvalue"]).map_err(io)?;
        for (i, ev) in self.eigenvalues.iter().enumerate() {
            w.write_record([(i + 1).to_string(), ev.to_string()])
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::invalid("output", e.to_string()))?;
        Ok(())
    }
}

fn sorted_spectrum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn semidefinite_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -1e-6 {
            return Err(Error::Factorization(format!(
                "pivot {j} is {d:.3e} after regularization"
            )));
        }
        if d <= PIVOT_DROP {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    Ok(l)
}

/// Toeplitz port-correlation matrix for `geometry`.
pub fn build_correlation_matrix(geometry: &PortGeometry) -> CorrelationMatrix {
    let n = geometry.n_ports;
    let taps: Vec<f64> = (0..n as i64)
        .map(|d| spatial_correlation(d, geometry))
        .collect();
    let entries = DMatrix::from_fn(n, n, |i, j| taps[i.abs_diff(j)]);
    CorrelationMatrix::from_entries(entries).expect("sinc Toeplitz matrix is well formed")
}

/// Block-diagonal approximation with constant intra-block correlation `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    block_sizes: Vec<usize>,
    mu: f64,
    threshold: f64,
    fit_error: f64,
}

impl BlockModel {
    /// Builds a model from explicit sizes. `fit_error` is left at zero; use
    /// [`fit_block_model`] to obtain a fitted model.
    pub fn new(block_sizes: Vec<usize>, mu: f64, threshold: f64) -> Result<Self> {
        validate_mu(mu)?;
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::invalid("block_sizes", "need at least one block, all of size >= 1"));
        }
        Ok(Self {
            block_sizes,
            mu,
            threshold,
            fit_error: 0.0,
        })
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Number of blocks `B`.
    pub fn blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn n_ports(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fit_error(&self) -> f64 {
        self.fit_error
    }

    /// Closed-form spectrum of the block matrix, largest first.
    pub fn spectrum(&self) -> Vec<f64> {
        block_spectrum(&self.block_sizes, self.mu)
    }
}

fn validate_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::invalid("mu", format!("must lie in (0, 1], got {mu}")));
    }
    Ok(())
}

// A block of size L with off-diagonal mu has eigenvalue 1 + (L-1)mu once and
// 1 - mu with multiplicity L - 1.
fn block_spectrum(sizes: &[usize], mu: f64) -> Vec<f64> {
    let mut ev = Vec::with_capacity(sizes.iter().sum());
    for &l in sizes {
        ev.push(1.0 + (l as f64 - 1.0) * mu);
        ev.extend(std::iter::repeat_n(1.0 - mu, l - 1));
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between the descending eigenvalue sequences of two
/// matrices of equal size.
pub fn matrix_distance(a: &CorrelationMatrix, b: &CorrelationMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(spectral_distance(a.eigenvalues(), b.eigenvalues()))
}

/// Materialises the block-diagonal matrix described by `model`.
pub fn block_matrix(model: &BlockModel) -> CorrelationMatrix {
    let n = model.n_ports();
    let mut entries = DMatrix::<f64>::zeros(n, n);
    let mut start = 0;
    for &l in &model.block_sizes {
        for i in start..start + l {
            for j in start..start + l {
                entries[(i, j)] = if i == j { 1.0 } else { model.mu };
            }
        }
        start += l;
    }
    CorrelationMatrix::from_entries(entries).expect("block matrix is well formed")
}

/// Fits block sizes to `matrix`.
///
/// `B` is the number of eigenvalues at or above `threshold`. Sizes start from
/// the rounded leading eigenvalues, are repaired to sum to `N`, and are then
/// refined by single-port transfers between blocks until no transfer lowers
/// the spectral distance. Sizes are returned largest first.
pub fn fit_block_model(matrix: &CorrelationMatrix, threshold: f64, mu: f64) -> Result<BlockModel> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(
            "threshold",
            format!("must lie in (0, 1), got {threshold}"),
        ));
    }
    validate_mu(mu)?;
    let target = matrix.eigenvalues();
    let n = matrix.dim();
    let b = target.iter().filter(|&&ev| ev >= threshold).count();
    if b == 0 {
        return Err(Error::ThresholdExcludesAll { threshold });
    }
    let cost = |sizes: &[usize]| spectral_distance(&block_spectrum(sizes, mu), target);

    let mut sizes: Vec<usize> = target[..b]
        .iter()
        .map(|&ev| (1.0 + (ev - 1.0) / mu).round().max(1.0) as usize)
        .collect();

    while sizes.iter().sum::<usize>() != n {
        let shrink = sizes.iter().sum::<usize>() > n;
        let mut best: Option<(f64, usize)> = None;
        for i in 0..b {
            if shrink && sizes[i] == 1 {
                continue;
            }
            let mut trial = sizes.clone();
            if shrink {
                trial[i] -= 1;
            } else {
                trial[i] += 1;
            }
            let c = cost(&trial);
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, i));
            }
        }
        let (_, i) = best.expect("B <= N guarantees a feasible move");
        if shrink {
            sizes[i] -= 1;
        } else {
            sizes[i] += 1;
        }
    }

    let mut current = cost(&sizes);
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for from in 0..b {
            if sizes[from] == 1 {
                continue;
            }
            for to in 0..b {
                if to == from {
                    continue;
                }
                let mut trial = sizes.clone();
                trial[from] -= 1;
                trial[to] += 1;
                let c = cost(&trial);
                if c < current - 1e-14 && best.is_none_or(|(bc, _, _)| c < bc) {
                    best = Some((c, from, to));
                }
            }
        }
        match best {
            Some((c, from, to)) => {
                sizes[from] -= 1;
                sizes[to] += 1;
                current = c;
            }
            None => break,
        }
    }

    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let fit_error = cost(&sizes);
    Ok(BlockModel {
        block_sizes: sizes,
        mu,
        threshold,
        fit_error,
    })
}
