//! Linear stability analysis: the factored characteristic polynomial in the
//! directional regime, numeric root finding for arbitrary loop phase, a
//! stability-region map, and the closed-form performance bounds.
//!
//! The dynamics are stable when every root lambda of the characteristic
//! polynomial `P(lambda) = |K M K (omega = i lambda)|` has a negative real
//! part. In the regime `|beta_ac| = 1/2`, `|beta_ab| = |beta_bc|` the
//! polynomial factors as `P = P_+ P_- + b_phi` with cubic factors
//! `P_± = lambda^3 + b1_± lambda^2 + b2_± lambda + b3_±` independent of the
//! loop phase and `b_phi = kappa_a^2 kappa_b^2 kappa_c^2 |beta_ab|^2
//! cos^2(phi_loop)`, which vanishes exactly at the directional phases
//! `phi_loop = ±pi/2`. There the dynamics are stable if and only if all six
//! cubic coefficients are positive.

use num_complex::Complex64;

use crate::coupled_modes::{dynamics_determinant, ModeTrio, PumpSet, MAG_MATCH_TOL};
use crate::error::{Error, Result};
use crate::linalg;

/// Cubic coefficients of the factored characteristic polynomial, rad/s
/// powers, plus the loop-phase term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthCoefficients {
    pub b1_plus: f64,
    pub b2_plus: f64,
    pub b3_plus: f64,
    pub b1_minus: f64,
    pub b2_minus: f64,
    pub b3_minus: f64,
    /// `kappa_a^2 kappa_b^2 kappa_c^2 |beta_ab|^2 cos^2(phi_loop)`, >= 0,
    /// zero exactly at the directional loop phases.
    pub b_phi: f64,
}

impl RouthCoefficients {
    /// Positivity of all six cubic coefficients. Necessary for stability
    /// and the form usually quoted; the pole `r = 1` shows up here as
    /// `b3_plus` crossing zero.
    pub fn all_positive(&self) -> bool {
        self.b1_plus > 0.0
            && self.b2_plus > 0.0
            && self.b3_plus > 0.0
            && self.b1_minus > 0.0
            && self.b2_minus > 0.0
            && self.b3_minus > 0.0
    }

    /// The complete Routh-Hurwitz criterion for both cubics:
    /// `b1 > 0`, `b3 > 0`, and `b1 b2 > b3`. Coefficient positivity alone
    /// is not sufficient for a cubic; the product condition matters when
    /// mode b is wider than modes a and c.
    pub fn hurwitz_stable(&self) -> bool {
        let cubic = |b1: f64, b2: f64, b3: f64| b1 > 0.0 && b3 > 0.0 && b1 * b2 > b3;
        cubic(self.b1_plus, self.b2_plus, self.b3_plus)
            && cubic(self.b1_minus, self.b2_minus, self.b3_minus)
    }
}

/// Stability verdict with whatever evidence produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Present when the configuration sits in the factored regime.
    pub coefficients: Option<RouthCoefficients>,
    /// Characteristic-polynomial roots, rad/s; empty for coefficient-only
    /// reports.
    pub roots: Vec<Complex64>,
    pub stable: bool,
    /// `max_j Re(lambda_j)`, rad/s; stable iff negative. `None` when roots
    /// were not computed.
    pub margin: Option<f64>,
}

fn routh_from_scalars(
    kappas: [f64; 3],
    beta_ab: f64,
    beta_bb: f64,
    cos_phi_loop: f64,
) -> RouthCoefficients {
    let [ka, kb, kc] = kappas;
    let load = 4.0 * beta_ab * beta_ab + 1.0;
    let coeff = |sign: f64| {
        let b1 = kb / 2.0 * (1.0 - sign * 2.0 * beta_bb) + (ka + kc) / 2.0;
        let b2 = kb * (ka + kc) / 4.0 * (load - sign * 2.0 * beta_bb) + ka * kc / 2.0;
        let b3 = ka * kb * kc / 4.0 * (load - sign * 2.0 * beta_bb);
        (b1, b2, b3)
    };
    let (b1_plus, b2_plus, b3_plus) = coeff(1.0);
    let (b1_minus, b2_minus, b3_minus) = coeff(-1.0);
    let b_phi = (ka * kb * kc).powi(2) * beta_ab * beta_ab * cos_phi_loop * cos_phi_loop;
    RouthCoefficients {
        b1_plus,
        b2_plus,
        b3_plus,
        b1_minus,
        b2_minus,
        b3_minus,
        b_phi,
    }
}

fn check_regime(pumps: &PumpSet) -> Result<(f64, f64, f64)> {
    let mab = pumps.beta_ab.norm();
    let mbc = pumps.beta_bc.norm();
    let mac = pumps.beta_ac.norm();
    if (mab - mbc).abs() > MAG_MATCH_TOL {
        return Err(Error::OutOfRegime(format!(
            "|beta_ab| = {mab} != |beta_bc| = {mbc}"
        )));
    }
    if (mac - 0.5).abs() > MAG_MATCH_TOL {
        return Err(Error::OutOfRegime(format!("|beta_ac| = {mac} != 1/2")));
    }
    Ok((mab, pumps.beta_bb.norm(), pumps.cos_phi_loop()))
}

/// Coefficients of the factored characteristic polynomial; the stable flag
/// is the full Routh-Hurwitz criterion on both cubics, exact at the
/// directional phases `phi_loop = ±pi/2` (where `b_phi = 0`).
pub fn routh_coefficients(modes: &ModeTrio, pumps: &PumpSet) -> Result<StabilityReport> {
    let (mab, mbb, cos_phi) = check_regime(pumps)?;
    let coeffs = routh_from_scalars(modes.kappas(), mab, mbb, cos_phi);
    let stable = coeffs.hurwitz_stable();
    Ok(StabilityReport {
        coefficients: Some(coeffs),
        roots: Vec::new(),
        stable,
        margin: None,
    })
}

/// The degree-6 characteristic polynomial, recovered from determinant
/// samples and stored in the scaled variable `t = lambda / scale`.
#[derive(Debug, Clone)]
pub struct CharPoly {
    /// Sample-point scale, rad/s.
    pub scale: f64,
    /// Coefficients of `P(scale * t) / scale^6` as a polynomial in t,
    /// ascending powers, length 7.
    pub coeffs_t: Vec<Complex64>,
    /// Reciprocal condition estimate of the interpolation system.
    pub rcond: f64,
}

impl CharPoly {
    /// Evaluate the interpolated polynomial at `lambda` (rad/s).
    pub fn eval(&self, lambda: Complex64) -> Complex64 {
        let t = lambda / self.scale;
        let mut acc = Complex64::default();
        for c in self.coeffs_t.iter().rev() {
            acc = acc * t + c;
        }
        acc * self.scale.powi(6)
    }
}

/// Recover the characteristic polynomial by evaluating the determinant at 7
/// Chebyshev-spaced sample points and solving the interpolation system.
pub fn characteristic_polynomial(
    modes: &ModeTrio,
    pumps: &PumpSet,
    scale: f64,
) -> Result<CharPoly> {
    let nodes_re = linalg::chebyshev_nodes(7, 1.0);
    let nodes: Vec<Complex64> = nodes_re.iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let norm = scale.powi(6);
    let values: Vec<Complex64> = nodes
        .iter()
        .map(|t| dynamics_determinant(modes, pumps, t * scale) / norm)
        .collect();
    let (coeffs_t, rcond) = linalg::solve_vandermonde(&nodes, &values)?;
    // losing more than 6 digits is a failed extraction
    if rcond < 1e-6 {
        return Err(Error::InterpolationIllConditioned { rcond });
    }
    Ok(CharPoly {
        scale,
        coeffs_t,
        rcond,
    })
}

/// Roots of the characteristic polynomial via a companion-matrix
/// eigen-solve on the interpolated coefficients. Retries with rescaled
/// sample points if the interpolation is flagged ill-conditioned.
pub fn characteristic_roots(modes: &ModeTrio, pumps: &PumpSet) -> Result<StabilityReport> {
    let kmax = modes.kappas().into_iter().fold(0.0, f64::max);
    let mut last_err = None;
    for factor in [1.0, 2.0, 0.5] {
        match characteristic_polynomial(modes, pumps, kmax * factor) {
            Ok(poly) => {
                let roots_t = linalg::polynomial_roots(&poly.coeffs_t)?;
                let roots: Vec<Complex64> = roots_t.into_iter().map(|t| t * poly.scale).collect();
                let margin = roots.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
                let coefficients = check_regime(pumps).ok().map(|(mab, mbb, cos_phi)| {
                    routh_from_scalars(modes.kappas(), mab, mbb, cos_phi)
                });
                return Ok(StabilityReport {
                    coefficients,
                    roots,
                    stable: margin < 0.0,
                    margin: Some(margin),
                });
            }
            Err(e @ Error::InterpolationIllConditioned { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or(Error::InterpolationIllConditioned { rcond: 0.0 }))
}

/// Solve for the amplification ratio r that produces a target direct
/// amplitude gain `sqrt(G_S)` at conversion saturation s with prefactor
/// `sqrt(eta_a eta_c)`. Gains below the pump-off floor clamp to r = 0.
pub fn direct_gain_to_r(target_sqrt_gs: f64, s: f64, eta_prefactor: f64) -> f64 {
    let num = target_sqrt_gs - eta_prefactor * (2.0 * s - 1.0);
    let den = target_sqrt_gs + eta_prefactor;
    if num <= 0.0 || den <= 0.0 {
        return 0.0;
    }
    (num / den).sqrt()
}

/// Verdict at one grid cell of a stability-region map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub stable: bool,
    /// Max root real part, rad/s.
    pub margin: f64,
}

/// Per-cell stability over a (direct gain, loop phase) grid.
#[derive(Debug, Clone)]
pub struct StabilityRegion {
    pub gains_db: Vec<f64>,
    pub loop_phases: Vec<f64>,
    /// `cells[i][j]` is the verdict at `gains_db[i]`, `loop_phases[j]`;
    /// `None` marks points where the analysis failed.
    pub cells: Vec<Vec<Option<RegionCell>>>,
    /// Smallest grid gain at which any loop phase is unstable.
    pub min_unstable_gain_db: Option<f64>,
}

/// Map stability over direct gain and loop phase. The amplification pump is
/// set at each cell from the direct-gain target (inverting the gain
/// formula at the cell's conversion saturation); the conversion magnitudes
/// are taken from `base_pumps`.
pub fn stability_region(
    modes: &ModeTrio,
    base_pumps: &PumpSet,
    gains_db: &[f64],
    loop_phases: &[f64],
) -> Result<StabilityRegion> {
    if gains_db.len() < 2 || loop_phases.len() < 2 {
        return Err(Error::InvalidParameter(
            "region grids need at least 2 points".into(),
        ));
    }
    if !gains_db.windows(2).all(|w| w[1] > w[0]) || !loop_phases.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "region grids must be strictly increasing".into(),
        ));
    }
    let mab = base_pumps.beta_ab.norm();
    let mac = base_pumps.beta_ac.norm();
    let s = 4.0 * mab * mab / (1.0 + 4.0 * mab * mab);
    let pre = (modes.a.eta() * modes.c.eta()).sqrt();
    let mut cells = Vec::with_capacity(gains_db.len());
    let mut min_unstable = None;
    for &g_db in gains_db {
        let sqrt_gs = 10f64.powf(g_db / 20.0);
        let r = direct_gain_to_r(sqrt_gs, s, pre);
        let mbb = r * (1.0 + 4.0 * mab * mab) / 2.0;
        let mut row = Vec::with_capacity(loop_phases.len());
        for &phi in loop_phases {
            let pumps = PumpSet::with_loop_phase(mab, mab, mac, mbb, phi, base_pumps.phi_bb());
            let verdict = characteristic_roots(modes, &pumps)
                .ok()
                .map(|rep| RegionCell {
                    stable: rep.stable,
                    margin: rep.margin.unwrap_or(f64::NAN),
                });
            if verdict.map(|c| !c.stable) == Some(true) && min_unstable.is_none() {
                min_unstable = Some(g_db);
            }
            row.push(verdict);
        }
        cells.push(row);
    }
    Ok(StabilityRegion {
        gains_db: gains_db.to_vec(),
        loop_phases: loop_phases.to_vec(),
        cells,
        min_unstable_gain_db: min_unstable,
    })
}

/// Closed-form performance limits implied by the stability bound
/// `|beta_ab|^2 < (kappa_a + kappa_c) / (4 kappa_b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceBounds {
    /// `sqrt(G_Y) > kappa_b / (kappa_a + kappa_b + kappa_c)`.
    pub min_sqrt_gy: f64,
    /// `n_add > kappa_b / (2 (kappa_a + kappa_c))`.
    pub min_n_add: f64,
    /// `eta < (kappa_a + kappa_c) / (kappa_a + kappa_b + kappa_c)`.
    pub max_eta: f64,
}

/// Performance bounds from the mode linewidths alone.
pub fn performance_bounds(modes: &ModeTrio) -> PerformanceBounds {
    let [ka, kb, kc] = modes.kappas();
    PerformanceBounds {
        min_sqrt_gy: kb / (ka + kb + kc),
        min_n_add: kb / (2.0 * (ka + kc)),
        max_eta: (ka + kc) / (ka + kb + kc),
    }
}

/// Locate the amplification strength at which the stability margin crosses
/// zero, by bisection between `lo` (stable) and `hi` (unstable). Relative
/// tolerance 1e-9 on `beta_bb`.
pub fn beta_bb_margin_crossing(
    modes: &ModeTrio,
    beta_ab_mag: f64,
    phi_loop: f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let margin_at = |mbb: f64| -> Result<f64> {
        let pumps = PumpSet::with_loop_phase(beta_ab_mag, beta_ab_mag, 0.5, mbb, phi_loop, 0.0);
        Ok(characteristic_roots(modes, &pumps)?
            .margin
            .expect("roots path always fills the margin"))
    };
    if !(margin_at(lo)? < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lower bracket {lo} is not stable"
        )));
    }
    if !(margin_at(hi)? >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "upper bracket {hi} is not unstable"
        )));
    }
    while hi - lo > 1e-9 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if margin_at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
