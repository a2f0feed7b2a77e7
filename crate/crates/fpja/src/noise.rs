//! Noise propagation: output covariance, added noise, chain-referred noise,
//! measurement efficiency, and the internal-loss-port extension.
//!
//! Input covariances use the symmetrized convention: a port with thermal
//! occupancy `n` contributes `n + 1/2` to its quadrature variance, so vacuum
//! sits at 1/2 photon. With that convention the output variance of the
//! amplified quadrature is `G_X (1/2 + n_add)` and the measurement
//! efficiency is `eta = 1 / (1 + 2 n_add)`.

use num_complex::Complex64;

use crate::coupled_modes::{
    build_coupling_matrix, gain_summary, scattering_matrix, CMat6, CMat6x12, DetuningVector,
    ModeTrio, PumpSet, ScatteringMatrix,
};
use crate::error::{Error, Result};
use crate::quadrature::{rotation_matrix, RMat6, XA, YA};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Mean thermal photon occupancy of each input port. The first three feed
/// the external ports of modes a, b, c; the `int` entries feed the
/// internal-loss ports used by the 6x12 extension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputOccupancies {
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub n_int_a: f64,
    pub n_int_b: f64,
    pub n_int_c: f64,
}

impl InputOccupancies {
    /// Vacuum at every port.
    pub fn vacuum() -> Self {
        InputOccupancies {
            n_a: 0.0,
            n_b: 0.0,
            n_c: 0.0,
            n_int_a: 0.0,
            n_int_b: 0.0,
            n_int_c: 0.0,
        }
    }

    /// Thermal occupancies on the external ports, vacuum on the internal
    /// ones.
    pub fn thermal(n_a: f64, n_b: f64, n_c: f64) -> Self {
        InputOccupancies {
            n_a,
            n_b,
            n_c,
            n_int_a: 0.0,
            n_int_b: 0.0,
            n_int_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_a", self.n_a),
            ("n_b", self.n_b),
            ("n_c", self.n_c),
            ("n_int_a", self.n_int_a),
            ("n_int_b", self.n_int_b),
            ("n_int_c", self.n_int_c),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "occupancy {name} = {v} negative"
                )));
            }
        }
        Ok(())
    }

    fn is_vacuum_external(&self) -> bool {
        self.n_a == 0.0 && self.n_b == 0.0 && self.n_c == 0.0
    }

    fn external_diag(&self) -> [f64; 6] {
        [
            self.n_a + 0.5,
            self.n_b + 0.5,
            self.n_c + 0.5,
            self.n_a + 0.5,
            self.n_b + 0.5,
            self.n_c + 0.5,
        ]
    }

    fn internal_diag(&self) -> [f64; 6] {
        [
            self.n_int_a + 0.5,
            self.n_int_b + 0.5,
            self.n_int_c + 0.5,
            self.n_int_a + 0.5,
            self.n_int_b + 0.5,
            self.n_int_c + 0.5,
        ]
    }
}

/// Noise added by the measurement chain after the amplifier, in photons,
/// with asymmetric calibration uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainNoise {
    pub photons: f64,
    pub err_minus: f64,
    pub err_plus: f64,
}

impl ChainNoise {
    pub fn new(photons: f64, err_minus: f64, err_plus: f64) -> Result<Self> {
        if !(photons >= 0.0 && err_minus >= 0.0 && err_plus >= 0.0) {
            return Err(Error::InvalidParameter(
                "chain noise and its uncertainties must be nonnegative".into(),
            ));
        }
        Ok(ChainNoise {
            photons,
            err_minus,
            err_plus,
        })
    }

    /// A noiseless following chain.
    pub fn none() -> Self {
        ChainNoise {
            photons: 0.0,
            err_minus: 0.0,
            err_plus: 0.0,
        }
    }
}

/// Measurement efficiency with the interval induced by the chain-noise
/// uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    pub value: f64,
    /// Efficiency at `n_chain + err_plus` (more chain noise, lower eta).
    pub lower: f64,
    /// Efficiency at `n_chain - err_minus`.
    pub upper: f64,
}

/// Full noise characterization of an operating point.
#[derive(Debug, Clone)]
pub struct NoiseReport {
    /// 6x6 real symmetric output quadrature covariance, photon units.
    pub covariance: RMat6,
    /// Quadrature power gain used for input referral.
    pub gx: f64,
    /// Added noise of the amplifier alone, photons referred to the input.
    pub n_add_fpja: f64,
    /// Added noise including the chain, `n_fpja + n_chain / G_X`.
    pub n_add_total: f64,
    /// Measurement efficiency `1 / (1 + 2 n_add_total)` with its interval.
    pub eta_meas: Efficiency,
    pub n_chain: ChainNoise,
}

fn hermitian_to_real(c: &CMat6) -> Result<RMat6> {
    let scale = (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .map(|(i, j)| c[(i, j)].norm())
        .fold(1.0, f64::max);
    let residue = (0..6)
        .flat_map(|i| (0..6).map(move |j| (i, j)))
        .map(|(i, j)| c[(i, j)].im.abs())
        .fold(0.0, f64::max);
    assert!(
        residue < 1e-12 * scale,
        "covariance has imaginary residue {residue:.3e} at scale {scale:.3e}; convention bug"
    );
    Ok(RMat6::from_fn(|i, j| c[(i, j)].re))
}

/// Guard against covariance-convention bugs. Individual quadrature
/// variances legitimately drop below the 1/2 vacuum level (that is the
/// squeezing this device produces), but the per-mode uncertainty product
/// `Var(X_j) Var(Y_j) - Cov(X_j, Y_j)^2 >= 1/4` must survive any physical
/// input; a missing vacuum term violates it immediately.
fn check_uncertainty_bound(c: &RMat6, vacuum_inputs: bool) -> Result<()> {
    if !vacuum_inputs {
        return Ok(());
    }
    for j in 0..3 {
        let (x, y) = (j, j + 3);
        let det = c[(x, x)] * c[(y, y)] - c[(x, y)] * c[(x, y)];
        if det < 0.25 - 1e-9 {
            let variance = c[(x, x)].min(c[(y, y)]);
            return Err(Error::NonPhysical { port: j, variance });
        }
    }
    Ok(())
}

/// Output quadrature covariance from the 6-port scattering matrix:
/// `C = R S D S^H R^H` with `D = diag(n_j + 1/2)` over the external ports.
///
/// Only correct when all the loss is external (`eta_j = 1`); lossy
/// configurations must use [`output_covariance_with_internal`], otherwise
/// the dropped internal vacuum shows up as an unphysical variance and this
/// function fails loudly with `NonPhysical`.
pub fn output_covariance(s: &ScatteringMatrix, occ: &InputOccupancies) -> Result<RMat6> {
    occ.validate()?;
    let r = rotation_matrix();
    let d = occ.external_diag();
    let sd = CMat6::from_fn(|i, j| s.entries[(i, j)] * d[j]);
    let c = r * sd * s.entries.adjoint() * r.adjoint();
    let real = hermitian_to_real(&c)?;
    check_uncertainty_bound(&real, occ.is_vacuum_external())?;
    Ok(real)
}

/// Map from the 12 input ports (6 external then 6 internal, same mode
/// ordering) to the 6 external outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalPortMap {
    pub entries: CMat6x12,
    pub rcond: f64,
}

impl InternalPortMap {
    /// External-to-external block; equals the plain scattering matrix.
    pub fn external_block(&self) -> CMat6 {
        CMat6::from_fn(|i, j| self.entries[(i, j)])
    }

    /// Internal-to-external block, couplings `sqrt(kappa_int / kappa)`.
    pub fn internal_block(&self) -> CMat6 {
        CMat6::from_fn(|i, j| self.entries[(i, j + 6)])
    }

    /// Row sums of `Sigma-weighted` squared magnitudes,
    /// `sum_k Sigma_k |T_jk|^2` with `Sigma = diag(+1 x3, -1 x3)` repeated;
    /// commutator preservation requires row j to equal `Sigma_j`.
    pub fn row_sigma_norms(&self) -> [f64; 6] {
        let sig = |k: usize| if (k % 6) < 3 { 1.0 } else { -1.0 };
        let mut out = [0.0; 6];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..12)
                .map(|k| sig(k) * self.entries[(i, k)].norm_sqr())
                .sum();
        }
        out
    }
}

/// Generalized scattering including the internal-loss ports of each mode.
///
/// The equations of motion pick up internal inputs through couplings
/// `sqrt(kappa_j_int)`; the external outputs are then
/// `[i H M^-1 H - 1 | i H M^-1 H_int]` with
/// `H_int = diag(sqrt(1 - eta_j))`.
pub fn internal_port_scattering(
    modes: &ModeTrio,
    pumps: &PumpSet,
    detunings: &DetuningVector,
) -> Result<InternalPortMap> {
    let m = build_coupling_matrix(pumps, detunings);
    let s = scattering_matrix(&m, modes)?;
    let inv = m
        .entries
        .try_inverse()
        .ok_or(Error::NearSingular { rcond: 0.0 })?;
    let e = modes.etas();
    let h = [
        e[0].sqrt(),
        e[1].sqrt(),
        e[2].sqrt(),
        e[0].sqrt(),
        e[1].sqrt(),
        e[2].sqrt(),
    ];
    let hint = [
        (1.0 - e[0]).sqrt(),
        (1.0 - e[1]).sqrt(),
        (1.0 - e[2]).sqrt(),
        (1.0 - e[0]).sqrt(),
        (1.0 - e[1]).sqrt(),
        (1.0 - e[2]).sqrt(),
    ];
    let entries = CMat6x12::from_fn(|i, j| {
        if j < 6 {
            s.entries[(i, j)]
        } else {
            I * h[i] * inv[(i, j - 6)] * hint[j - 6]
        }
    });
    Ok(InternalPortMap {
        entries,
        rcond: s.rcond,
    })
}

/// Output covariance with the internal-loss ports included; physical for
/// lossy configurations.
pub fn output_covariance_with_internal(
    map: &InternalPortMap,
    occ: &InputOccupancies,
) -> Result<RMat6> {
    occ.validate()?;
    let r = rotation_matrix();
    let ext = occ.external_diag();
    let int = occ.internal_diag();
    let mut d = [0.0; 12];
    d[..6].copy_from_slice(&ext);
    d[6..].copy_from_slice(&int);
    let td = CMat6x12::from_fn(|i, j| map.entries[(i, j)] * d[j]);
    let c = td * map.entries.adjoint();
    let cq = r * c * r.adjoint();
    let real = hermitian_to_real(&cq)?;
    check_uncertainty_bound(
        &real,
        occ.is_vacuum_external() && occ.n_int_a == 0.0 && occ.n_int_b == 0.0 && occ.n_int_c == 0.0,
    )?;
    Ok(real)
}

/// Added noise of the amplifier in photons referred to the input, for the
/// resonant lossless case: `(1 + G_X^{-1/2})^2 / (8 |beta_ab|^2)`.
pub fn added_noise_fpja(beta_ab_mag: f64, gx: f64) -> Result<f64> {
    if !(beta_ab_mag > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta_ab magnitude must be positive, got {beta_ab_mag}"
        )));
    }
    if !(gx > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "G_X must be positive, got {gx}"
        )));
    }
    Ok((1.0 + gx.powf(-0.5)).powi(2) / (8.0 * beta_ab_mag * beta_ab_mag))
}

/// System measurement efficiency `eta = 1 / (1 + 2 (n_fpja + n_chain/G_X))`
/// with the chain uncertainty propagated by interval arithmetic.
pub fn system_efficiency(n_fpja: f64, n_chain: &ChainNoise, gx: f64) -> Result<Efficiency> {
    if !(n_fpja >= 0.0) || !(gx > 0.0) {
        return Err(Error::InvalidParameter(
            "system_efficiency requires n_fpja >= 0 and G_X > 0".into(),
        ));
    }
    let eta_at = |chain: f64| 1.0 / (1.0 + 2.0 * (n_fpja + chain / gx));
    Ok(Efficiency {
        value: eta_at(n_chain.photons),
        lower: eta_at(n_chain.photons + n_chain.err_plus),
        upper: eta_at((n_chain.photons - n_chain.err_minus).max(0.0)),
    })
}

/// Variance of the amplified output quadrature of mode a: the largest
/// eigenvalue of the (X_a, Y_a) covariance block. Using the eigenvalue
/// rather than a fixed entry makes the extraction independent of the pump
/// phase gauge.
pub fn amplified_quadrature_variance(cov: &RMat6) -> f64 {
    let p = cov[(XA, XA)];
    let q = cov[(YA, YA)];
    let r = cov[(XA, YA)];
    0.5 * ((p + q) + ((p - q).powi(2) + 4.0 * r * r).sqrt())
}

/// Full noise pipeline at the resonant operating point: covariance with
/// internal ports, input-referred added noise, chain-referred total, and
/// the efficiency interval.
pub fn noise_report(
    modes: &ModeTrio,
    pumps: &PumpSet,
    occ: &InputOccupancies,
    n_chain: &ChainNoise,
) -> Result<NoiseReport> {
    let det = DetuningVector::resonant(0.0, modes);
    let map = internal_port_scattering(modes, pumps, &det)?;
    let covariance = output_covariance_with_internal(&map, occ)?;
    let gains = gain_summary(modes, pumps)?;
    let gx = gains.gx();
    if !(gx > 0.0) {
        return Err(Error::InvalidParameter(
            "quadrature gain vanished; added noise is undefined".into(),
        ));
    }
    // clamp rounding residue so eta = 1 / (1 + 2 n_total) holds exactly
    let n_add_fpja = (amplified_quadrature_variance(&covariance) / gx - 0.5).max(0.0);
    let n_add_total = n_add_fpja + n_chain.photons / gx;
    let eta_meas = system_efficiency(n_add_fpja, n_chain, gx)?;
    Ok(NoiseReport {
        covariance,
        gx,
        n_add_fpja,
        n_add_total,
        eta_meas,
        n_chain: *n_chain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled_modes::{scattering_at, ModeLabel, ModeParams, ModeTrio};
    use crate::test_fixtures::{reference_modes, TWO_PI};
    use approx::assert_relative_eq;

    fn lossless_modes() -> ModeTrio {
        ModeTrio::lossless(TWO_PI * 83e6, TWO_PI * 15e6, TWO_PI * 45e6).unwrap()
    }

    #[test]
    fn vacuum_through_identity_is_half() {
        let s = scattering_at(&lossless_modes(), &PumpSet::off(), 0.0).unwrap();
        let c = output_covariance(&s, &InputOccupancies::vacuum()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 0.5 } else { 0.0 };
                assert_relative_eq!(c[(i, j)], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn thermal_passthrough() {
        let s = scattering_at(&lossless_modes(), &PumpSet::off(), 0.0).unwrap();
        let c = output_covariance(&s, &InputOccupancies::thermal(0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(
            c[(crate::quadrature::XC, crate::quadrature::XC)],
            1.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            c[(crate::quadrature::YC, crate::quadrature::YC)],
            1.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(c[(XA, XA)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn pipeline_matches_closed_form_added_noise() {
        // lossless reference-like operating point, vacuum inputs
        let modes = lossless_modes();
        let pumps = PumpSet::aligned(1.0, 1.0, 0.5, 2.275, 1);
        let s = scattering_at(&modes, &pumps, 0.0).unwrap();
        let c = output_covariance(&s, &InputOccupancies::vacuum()).unwrap();
        let g = gain_summary(&modes, &pumps).unwrap();
        let n_pipe = c[(XA, XA)] / g.gx() - 0.5;
        let n_formula = added_noise_fpja(1.0, g.gx()).unwrap();
        assert!(
            (n_pipe - n_formula).abs() < 1e-9,
            "pipe {n_pipe} formula {n_formula}"
        );
        // gauge-free extraction agrees with the aligned-gauge entry
        assert_relative_eq!(
            amplified_quadrature_variance(&c),
            c[(XA, XA)],
            epsilon = 1e-9
        );
    }

    #[test]
    fn lossy_six_port_covariance_fails_loudly() {
        let mut modes = lossless_modes();
        modes.b.kappa_ext = 0.5 * modes.b.kappa;
        let s = scattering_at(&modes, &PumpSet::off(), 0.0).unwrap();
        match output_covariance(&s, &InputOccupancies::vacuum()) {
            Err(Error::NonPhysical { .. }) => {}
            other => panic!("expected NonPhysical, got {other:?}"),
        }
    }

    #[test]
    fn added_noise_examples() {
        // |beta_ab| = 1, G_X = 276: frozen from independent evaluation
        let n = added_noise_fpja(1.0, 276.0).unwrap();
        assert_relative_eq!(n, 0.1405011301864458, epsilon = 1e-12);
        assert!((n - 0.1405).abs() < 1e-4);
        // high-gain limit 1/8
        let n = added_noise_fpja(1.0, 1e12).unwrap();
        assert!((n - 0.125).abs() < 1e-5);
        // noiseless in the high-conversion limit
        let n = added_noise_fpja(1e9, 100.0).unwrap();
        assert!(n < 1e-15);
        assert!(added_noise_fpja(0.0, 10.0).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let eta = system_efficiency(0.0, &ChainNoise::none(), 100.0).unwrap();
        assert_relative_eq!(eta.value, 1.0, epsilon = 1e-15);

        let chain = ChainNoise::new(19.8, 3.3, 3.2).unwrap();
        let eta = system_efficiency(0.1405011301864458, &chain, 276.0).unwrap();
        assert_relative_eq!(eta.value, 0.7020103013607955, epsilon = 1e-12);
        assert!((eta.value - 0.70).abs() < 0.01);
        assert!(eta.lower < eta.value && eta.value < eta.upper);

        let eta = system_efficiency(0.0, &chain, 1.0).unwrap();
        assert!((eta.value - 0.025).abs() < 5e-4);
    }

    #[test]
    fn internal_ports_vanish_when_lossless() {
        let modes = lossless_modes();
        let det = DetuningVector::resonant(0.0, &modes);
        let pumps = PumpSet::aligned(1.0, 1.0, 0.5, 2.275, 1);
        let map = internal_port_scattering(&modes, &pumps, &det).unwrap();
        let int = map.internal_block();
        for i in 0..6 {
            for j in 0..6 {
                assert_relative_eq!(int[(i, j)].norm(), 0.0, epsilon = 1e-14);
            }
        }
        let s = scattering_at(&modes, &pumps, 0.0).unwrap();
        let ext = map.external_block();
        for i in 0..6 {
            for j in 0..6 {
                assert!((ext[(i, j)] - s.entries[(i, j)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn lossy_passive_mode_conserves_energy() {
        // eta_b = 0.9, pumps off: |S_bb|^2 + |S_b,int|^2 = 1 and the
        // internal-to-external transmission is 4 eta (1 - eta)
        let modes = ModeTrio::new(
            ModeParams::new(ModeLabel::A, 0.0, TWO_PI * 83e6, TWO_PI * 83e6).unwrap(),
            ModeParams::new(ModeLabel::B, 0.0, TWO_PI * 15e6, TWO_PI * 15e6 * 0.9).unwrap(),
            ModeParams::new(ModeLabel::C, 0.0, TWO_PI * 45e6, TWO_PI * 45e6).unwrap(),
        )
        .unwrap();
        let det = DetuningVector::resonant(0.0, &modes);
        let map = internal_port_scattering(&modes, &PumpSet::off(), &det).unwrap();
        let sbb = map.entries[(1, 1)].norm_sqr();
        let sbint = map.entries[(1, 7)].norm_sqr();
        assert_relative_eq!(sbint, 4.0 * 0.9 * 0.1, epsilon = 1e-12);
        assert_relative_eq!(sbb + sbint, 1.0, epsilon = 1e-12);
        // rows satisfy the sigma-norm condition
        for (i, norm) in map.row_sigma_norms().iter().enumerate() {
            let want = if i < 3 { 1.0 } else { -1.0 };
            assert_relative_eq!(*norm, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn internal_loss_reduces_efficiency() {
        let chain = ChainNoise::none();
        let pumps = PumpSet::aligned(1.0, 1.0, 0.5, 2.275, 1);
        let lossless = noise_report(
            &lossless_modes(),
            &pumps,
            &InputOccupancies::vacuum(),
            &chain,
        )
        .unwrap();

        // internal loss on the signal modes strictly reduces efficiency
        let lossy = reference_modes();
        let with_loss = noise_report(&lossy, &pumps, &InputOccupancies::vacuum(), &chain).unwrap();
        assert!(
            with_loss.eta_meas.value < lossless.eta_meas.value,
            "internal loss must reduce efficiency: {} vs {}",
            with_loss.eta_meas.value,
            lossless.eta_meas.value
        );
        let mut worse = lossy;
        worse.a.kappa_ext = worse.a.kappa * 0.95;
        worse.c.kappa_ext = worse.c.kappa * 0.95;
        let with_more = noise_report(&worse, &pumps, &InputOccupancies::vacuum(), &chain).unwrap();
        assert!(with_more.eta_meas.value < with_loss.eta_meas.value);
    }

    #[test]
    fn b_mode_loss_split_is_neutral_at_vacuum() {
        // splitting kappa_b between external and internal ports redistributes
        // vacuum between two vacuum ports; the covariance seen at the
        // measured a and c ports (and hence the efficiency) is unchanged,
        // non-increasing as required
        let chain = ChainNoise::none();
        let pumps = PumpSet::aligned(1.0, 1.0, 0.5, 2.275, 1);
        let base = noise_report(
            &lossless_modes(),
            &pumps,
            &InputOccupancies::vacuum(),
            &chain,
        )
        .unwrap();
        let mut split = lossless_modes();
        split.b.kappa_ext = split.b.kappa - TWO_PI * 1.5e6;
        let with_split = noise_report(&split, &pumps, &InputOccupancies::vacuum(), &chain).unwrap();
        for &i in &[XA, crate::quadrature::XC, YA, crate::quadrature::YC] {
            for &j in &[XA, crate::quadrature::XC, YA, crate::quadrature::YC] {
                assert_relative_eq!(
                    with_split.covariance[(i, j)],
                    base.covariance[(i, j)],
                    epsilon = 1e-9,
                    max_relative = 1e-9
                );
            }
        }
        assert_relative_eq!(
            with_split.eta_meas.value,
            base.eta_meas.value,
            epsilon = 1e-12
        );
    }

    #[test]
    fn efficiency_monotone_in_chain_noise() {
        let pumps = PumpSet::aligned(1.0, 1.0, 0.5, 2.275, 1);
        let modes = reference_modes();
        let mut last = f64::INFINITY;
        for chain in [0.0, 5.0, 10.0, 19.8, 40.0] {
            let rep = noise_report(
                &modes,
                &pumps,
                &InputOccupancies::vacuum(),
                &ChainNoise::new(chain, 0.0, 0.0).unwrap(),
            )
            .unwrap();
            assert!(rep.eta_meas.value <= last);
            last = rep.eta_meas.value;
        }
    }
}
