//! Scattering in the quadrature basis, phase-sensitive gain versus
//! local-oscillator phase, and squeezing metrics.
//!
//! The quadratures of mode a are `X_a = (a_S + a_I*)/sqrt(2)` and
//! `Y_a = i (a_I* - a_S)/sqrt(2)`, and likewise for b and c. The rotation
//! produces the interleaved ordering `(X_a, Y_a, X_b, Y_b, X_c, Y_c)`; a
//! fixed permutation regroups it to `(X_a, X_b, X_c, Y_a, Y_b, Y_c)`, which
//! is the ordering used by every quadrature-basis matrix in this crate.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::coupled_modes::{CMat6, GainSummary, ScatteringMatrix};

/// 6x6 real matrix in the grouped quadrature ordering.
pub type RMat6 = SMatrix<f64, 6, 6>;

/// Row/column indices of the grouped quadrature ordering.
pub const XA: usize = 0;
pub const XB: usize = 1;
pub const XC: usize = 2;
pub const YA: usize = 3;
pub const YB: usize = 4;
pub const YC: usize = 5;

/// The unitary taking the mode basis `(a_S, b_S, c_S, a_I*, b_I*, c_I*)` to
/// the grouped quadrature basis `(X_a, X_b, X_c, Y_a, Y_b, Y_c)`.
pub fn rotation_matrix() -> CMat6 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = Complex64::new(s, 0.0);
    let ih = Complex64::new(0.0, s);
    let z = Complex64::default();
    // rows: X_a, X_b, X_c, Y_a, Y_b, Y_c
    #[rustfmt::skip]
    let r = CMat6::from_row_slice(&[
        h,   z,   z,   h,  z,  z,
        z,   h,   z,   z,  h,  z,
        z,   z,   h,   z,  z,  h,
        -ih, z,   z,   ih, z,  z,
        z,   -ih, z,   z,  ih, z,
        z,   z,   -ih, z,  z,  ih,
    ]);
    r
}

/// Scattering matrix in the grouped quadrature basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMatrix {
    pub entries: CMat6,
}

impl QuadratureMatrix {
    /// Rotate back to the mode basis; inverse of [`quadrature_matrix`].
    pub fn to_mode_basis(&self) -> CMat6 {
        let r = rotation_matrix();
        r.adjoint() * self.entries * r
    }

    /// Power of an element in dB.
    pub fn power_db(&self, row: usize, col: usize) -> f64 {
        20.0 * self.entries[(row, col)].norm().log10()
    }

    /// Complex response of the output quadrature of mode a demodulated at
    /// angle `theta_out` to a drive on mode c's quadrature at angle
    /// `theta_in`; the raw path for arbitrary drive angles.
    pub fn drive_response(&self, theta_in: f64, theta_out: f64) -> Complex64 {
        let q = &self.entries;
        let row = [q[(XA, XC)], q[(XA, YC)], q[(YA, XC)], q[(YA, YC)]];
        (row[0] * theta_in.cos() + row[1] * theta_in.sin()) * theta_out.cos()
            + (row[2] * theta_in.cos() + row[3] * theta_in.sin()) * theta_out.sin()
    }
}

/// Conjugate the mode-basis scattering matrix into the quadrature basis,
/// `Q = R S R^-1` with the unitary of [`rotation_matrix`].
pub fn quadrature_matrix(s: &ScatteringMatrix) -> QuadratureMatrix {
    let r = rotation_matrix();
    QuadratureMatrix {
        entries: r * s.entries * r.adjoint(),
    }
}

/// Demodulated gain and noise floor versus local-oscillator phase.
#[derive(Debug, Clone)]
pub struct LoPhaseResponse {
    /// LO phase grid, radians.
    pub theta: Vec<f64>,
    /// Demodulated power gain per point, linear.
    pub power_gain: Vec<f64>,
    /// Output quadrature variance of the amplifier alone, photon units;
    /// present when a covariance was supplied.
    pub noise_floor_fpja: Option<Vec<f64>>,
    /// Same plus the amplification chain contribution.
    pub noise_floor_total: Option<Vec<f64>>,
}

/// Demodulated power of the amplified quadrature pair under the
/// aligned-drive convention: `G(theta) = G_X cos^2 theta + G_Y sin^2 theta`,
/// so that `theta = 0` reads the amplified quadrature and `theta = pi/2` the
/// deamplified one.
///
/// When an output covariance is supplied, the noise floor is the variance of
/// the demodulated output quadrature of mode a at the same LO phase. The
/// covariance's (X_a, Y_a) block is referenced to its maximum-variance axis
/// first, so the floor pairs with the gain curve regardless of the pump
/// phase gauge. `chain_photons` additionally shifts the total floor by a
/// flat chain contribution.
pub fn lo_phase_response(
    gains: &GainSummary,
    theta_grid: &[f64],
    covariance: Option<&RMat6>,
    chain_photons: Option<f64>,
) -> LoPhaseResponse {
    let gx = gains.gx();
    let gy = gains.gy();
    let power_gain = theta_grid
        .iter()
        .map(|&t| gx * t.cos().powi(2) + gy * t.sin().powi(2))
        .collect();
    let noise_floor_fpja = covariance.map(|c| {
        // angle of the amplified output quadrature within the a-mode block
        let align = 0.5 * (2.0 * c[(XA, YA)]).atan2(c[(XA, XA)] - c[(YA, YA)]);
        theta_grid
            .iter()
            .map(|&t| {
                let t = t + align;
                t.cos().powi(2) * c[(XA, XA)]
                    + t.sin().powi(2) * c[(YA, YA)]
                    + (2.0 * t).sin() * c[(XA, YA)]
            })
            .collect::<Vec<f64>>()
    });
    let noise_floor_total = noise_floor_fpja.as_ref().map(|floor| {
        let chain = chain_photons.unwrap_or(0.0);
        floor.iter().map(|v| v + chain).collect()
    });
    LoPhaseResponse {
        theta: theta_grid.to_vec(),
        power_gain,
        noise_floor_fpja,
        noise_floor_total,
    }
}

/// Squeezing quality of an operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingMetrics {
    /// Signed amplitude product `sqrt(G_X) sqrt(G_Y)`; equals
    /// `eta_a eta_c (1 - 4 s (1 - s) / (1 - r^2))` in closed form.
    pub sqrt_gxgy_signed: f64,
    /// Power product `G_X G_Y`.
    pub product_gxgy: f64,
    /// `|G_X G_Y - 1|`; zero for ideal squeezing.
    pub ideal_squeezing_deviation: f64,
}

/// Distance of the operating point from ideal squeezing (`G_X G_Y = 1`).
pub fn squeezing_metrics(gains: &GainSummary) -> SqueezingMetrics {
    let signed = gains.sqrt_gx * gains.sqrt_gy;
    let product = gains.gx() * gains.gy();
    SqueezingMetrics {
        sqrt_gxgy_signed: signed,
        product_gxgy: product,
        ideal_squeezing_deviation: (product - 1.0).abs(),
    }
}
