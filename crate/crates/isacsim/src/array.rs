//! Half-wavelength uniform linear array: steering vectors, beampatterns,
//! and angular-grid utilities.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::linalg::max_hermitian_asymmetry;

#[derive(Debug, Error)]
pub enum ArrayError {
    #[error("array must have at least one antenna")]
    EmptyArray,
    #[error("angle {0} rad outside the broadside sector [-pi/2, pi/2]")]
    AngleOutOfRange(f64),
    #[error("beampattern input is not Hermitian (asymmetry {asymmetry:e} > {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },
    #[error("beampattern quadratic form has non-negligible imaginary part {imag:e}")]
    ResidualImaginary { imag: f64 },
}

/// Uniform linear array with half-wavelength element spacing.
///
/// The phase reference is element 0, so the response toward `theta` is
/// `exp(j*pi*m*sin(theta))` at element `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UlaConfig {
    num_antennas: usize,
}

impl UlaConfig {
    pub fn new(num_antennas: usize) -> Result<Self, ArrayError> {
        if num_antennas == 0 {
            return Err(ArrayError::EmptyArray);
        }
        Ok(Self { num_antennas })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }
}

/// An angle in the broadside sector [-pi/2, pi/2] of the ULA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn from_radians(value: f64) -> Result<Self, ArrayError> {
        if !(value.is_finite() && value.abs() <= PI / 2.0) {
            return Err(ArrayError::AngleOutOfRange(value));
        }
        Ok(Self(value))
    }

    pub fn from_degrees(value: f64) -> Result<Self, ArrayError> {
        Self::from_radians(value.to_radians())
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn degrees(&self) -> f64 {
        self.0.to_degrees()
    }
}

/// Array response vector `a(theta)`; element `m` is `exp(j*pi*m*sin(theta))`.
pub fn steering(cfg: UlaConfig, theta: Angle) -> Array1<Complex64> {
    let u = PI * theta.radians().sin();
    Array1::from_iter(
        (0..cfg.num_antennas()).map(|m| Complex64::from_polar(1.0, u * m as f64)),
    )
}

/// Conjugated response `a*(theta)`, the transmit-side pairing of the echo model.
pub fn steering_conj(cfg: UlaConfig, theta: Angle) -> Array1<Complex64> {
    steering(cfg, theta).mapv(|z| z.conj())
}

/// Transmit beampattern `P(theta) = (1/M) a'(theta) X a*(theta)` for a
/// Hermitian PSD covariance `X`.
pub fn beampattern(
    cfg: UlaConfig,
    x: &Array2<Complex64>,
    theta: Angle,
) -> Result<f64, ArrayError> {
    let m = cfg.num_antennas();
    assert_eq!(x.nrows(), m, "covariance rows must match array size");
    assert_eq!(x.ncols(), m, "covariance cols must match array size");
    let scale = x.iter().map(|z| z.norm()).fold(f64::MIN_POSITIVE, f64::max);
    let tolerance = 1e-9 * scale;
    let asymmetry = max_hermitian_asymmetry(x);
    if asymmetry > tolerance {
        return Err(ArrayError::NotHermitian { asymmetry, tolerance });
    }
    // a'(theta) X a*(theta) = vᴴ X v with v = a*(theta)
    let v = steering_conj(cfg, theta);
    let xv = x.dot(&v);
    let quad: Complex64 = v.iter().zip(xv.iter()).map(|(a, b)| a.conj() * b).sum();
    let trace: f64 = (0..m).map(|i| x[(i, i)].re).sum();
    if quad.im.abs() >= 1e-10 * trace.max(f64::MIN_POSITIVE) {
        return Err(ArrayError::ResidualImaginary { imag: quad.im });
    }
    Ok(quad.re / m as f64)
}

/// The `M` DFT-grid angles with `sin(theta) = 2m/M - 1`; steering vectors on
/// this grid are mutually orthogonal.
pub fn dft_grid_angles(cfg: UlaConfig) -> Vec<Angle> {
    let m = cfg.num_antennas();
    (0..m)
        .map(|i| {
            let s = 2.0 * i as f64 / m as f64 - 1.0;
            Angle::from_radians(s.asin()).expect("grid point inside sector")
        })
        .collect()
}
