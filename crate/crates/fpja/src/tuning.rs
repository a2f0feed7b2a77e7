//! The four-step programming procedure, run as numerical calibration
//! against the simulated device:
//!
//! 1. calibrate each frequency-conversion pump individually to minimize the
//!    on-resonance reflection off its input mode (ideal conversion,
//!    `|beta| = 1/2` in the lossless case);
//! 2. turn on all three conversion pumps with loop phase `±pi/2`, forming a
//!    parametric circulator, and verify the isolation;
//! 3. raise the conversion rates into mode b to overwhelm its dissipation,
//!    keeping `|beta_ab| = |beta_bc|`;
//! 4. turn on the amplification pump at the strength that meets the gain
//!    target, and verify stability.
//!
//! Stage failures map to distinct error categories: `NoMinimum` (stage 1),
//! `IsolationNotReached` (stage 2), `StabilityBoundViolated` (stage 3),
//! `TargetUnreachable` / `Unstable` (stage 4).

use crate::coupled_modes::{
    gain_summary, scattering_at, GainSummary, ModeLabel, ModeTrio, PumpSet,
};
use crate::error::{Error, Result};
use crate::stability::{beta_bb_margin_crossing, characteristic_roots};

/// Default on-resonance isolation the circulator stage must reach, dB.
/// Midway between the lossless ideal (infinite) and the ~30 dB seen with
/// small internal loss.
pub const DEFAULT_ISOLATION_THRESHOLD_DB: f64 = 15.0;

/// Golden-section tolerance on the calibrated pump magnitude.
pub const CALIBRATION_TOL: f64 = 1e-6;

/// Gain target and circulation direction for [`program_device`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningTargets {
    /// Desired quadrature gain, dB.
    pub target_gx_db: f64,
    /// Conversion saturation parameter in (0, 1).
    pub target_s: f64,
    /// +1 or -1: sign of the loop phase, i.e. the circulation direction.
    pub phi_loop_sign: i8,
}

impl TuningTargets {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_s > 0.0 && self.target_s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "target_s must lie in (0, 1), got {}",
                self.target_s
            )));
        }
        if !self.target_gx_db.is_finite() {
            return Err(Error::InvalidParameter(
                "target_GX_db must be finite".into(),
            ));
        }
        if self.phi_loop_sign != 1 && self.phi_loop_sign != -1 {
            return Err(Error::InvalidParameter(format!(
                "phi_loop_sign must be +1 or -1, got {}",
                self.phi_loop_sign
            )));
        }
        Ok(())
    }
}

/// On-resonance scattering snapshot after one programming stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: u8,
    pub label: &'static str,
    /// Transmission c -> a (the direction that eventually carries gain), dB.
    pub forward_db: f64,
    /// Transmission a -> c, dB.
    pub reverse_db: f64,
    /// Reflection off mode a, dB.
    pub reflection_a_db: f64,
    /// Reflection off mode c, dB.
    pub reflection_c_db: f64,
    /// Transmitted-over-isolated power ratio, dB; infinite for the lossless
    /// ideal circulator.
    pub isolation_db: f64,
}

/// Outcome of the full four-step procedure.
#[derive(Debug, Clone)]
pub struct TuningResult {
    pub pumps: PumpSet,
    pub stages: Vec<StageReport>,
    pub gains: GainSummary,
    /// Always true for a returned result; unstable outcomes error instead.
    pub stable: bool,
    /// Stability margin (max root real part), rad/s.
    pub margin: f64,
}

fn stage_snapshot(
    modes: &ModeTrio,
    pumps: &PumpSet,
    stage: u8,
    label: &'static str,
) -> Result<StageReport> {
    let s = scattering_at(modes, pumps, 0.0)?;
    let forward_db = s.power_db(0, 2);
    let reverse_db = s.power_db(2, 0);
    let isolation_db = if pumps.phi_loop() >= 0.0 {
        reverse_db - forward_db
    } else {
        forward_db - reverse_db
    };
    Ok(StageReport {
        stage,
        label,
        forward_db,
        reverse_db,
        reflection_a_db: s.power_db(0, 0),
        reflection_c_db: s.power_db(2, 2),
        isolation_db,
    })
}

fn single_pump(pair: (ModeLabel, ModeLabel), mag: f64) -> Result<PumpSet> {
    use ModeLabel::*;
    let c = num_complex::Complex64::new(mag, 0.0);
    let mut p = PumpSet::off();
    match (pair.0, pair.1) {
        (A, B) | (B, A) => p.beta_ab = c,
        (B, C) | (C, B) => p.beta_bc = c,
        (A, C) | (C, A) => p.beta_ac = c,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "conversion pair must name two distinct modes, got ({}, {})",
                pair.0.name(),
                pair.1.name()
            )))
        }
    }
    Ok(p)
}

/// Calibrate one conversion pump: the magnitude minimizing the on-resonance
/// reflection `|S_jj|^2` off the pair's first mode, by golden-section search
/// over [0, 2]. Equals 1/2 exactly in the lossless case.
pub fn calibrate_conversion(modes: &ModeTrio, pair: (ModeLabel, ModeLabel)) -> Result<f64> {
    let j = pair.0.index();
    let objective = |mag: f64| -> Result<f64> {
        let pumps = single_pump(pair, mag)?;
        let s = scattering_at(modes, &pumps, 0.0)?;
        Ok(s.entries[(j, j)].norm_sqr())
    };
    // flat objective means the reflected mode is decoupled from its port
    let probes = [objective(0.2)?, objective(0.7)?, objective(1.3)?];
    let spread = probes.iter().fold(f64::MIN, |a, &b| a.max(b))
        - probes.iter().fold(f64::MAX, |a, &b| a.min(b));
    if spread < 1e-12 {
        return Err(Error::NoMinimum);
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while hi - lo > CALIBRATION_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Program the circulator: calibrated conversion magnitudes, loop phase
/// `sign * pi/2` in the canonical gauge, amplification pump off. Verifies
/// that the transmitted-over-isolated power ratio exceeds `threshold_db`;
/// in the lossless ideal the isolated element is exactly zero.
pub fn set_circulation(
    modes: &ModeTrio,
    mags: (f64, f64, f64),
    phi_loop_sign: i8,
    threshold_db: f64,
) -> Result<PumpSet> {
    let sign = if phi_loop_sign >= 0 { 1.0 } else { -1.0 };
    let pumps = PumpSet::with_loop_phase(
        mags.0,
        mags.1,
        mags.2,
        0.0,
        sign * std::f64::consts::FRAC_PI_2,
        -std::f64::consts::FRAC_PI_2,
    );
    let s = scattering_at(modes, &pumps, 0.0)?;
    // for phi_loop = +pi/2 the circulator passes a -> c and isolates c -> a
    let (transmitted, isolated) = if sign > 0.0 {
        (s.s_ca(), s.s_ac())
    } else {
        (s.s_ac(), s.s_ca())
    };
    let isolation_db = 10.0 * (transmitted.norm_sqr() / isolated.norm_sqr()).log10();
    if isolation_db < threshold_db {
        return Err(Error::IsolationNotReached {
            achieved_db: isolation_db,
            required_db: threshold_db,
        });
    }
    Ok(pumps)
}

/// Raise the conversion rates into mode b:
/// `|beta_ab| = |beta_bc| = sqrt(s / (1 - s)) / 2`. Errors when the
/// resulting strength violates the stability bound
/// `|beta_ab|^2 < (kappa_a + kappa_c) / (4 kappa_b)`. Returns the updated
/// pump set and the residual isolation (about 3 dB at s = 0.8).
pub fn boost_b_coupling(
    modes: &ModeTrio,
    pumps: &PumpSet,
    target_s: f64,
) -> Result<(PumpSet, f64)> {
    if !(target_s > 0.0 && target_s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target_s must lie in (0, 1), got {target_s}"
        )));
    }
    let mag = 0.5 * (target_s / (1.0 - target_s)).sqrt();
    let [ka, kb, kc] = modes.kappas();
    let bound = (ka + kc) / (4.0 * kb);
    if mag * mag >= bound {
        return Err(Error::StabilityBoundViolated {
            beta_ab_sq: mag * mag,
            bound,
        });
    }
    let mut boosted = *pumps;
    boosted.beta_ab = num_complex::Complex64::from_polar(mag, pumps.beta_ab.arg());
    boosted.beta_bc = num_complex::Complex64::from_polar(mag, pumps.beta_bc.arg());
    let s = scattering_at(modes, &boosted, 0.0)?;
    let residual_isolation_db = if boosted.phi_loop() >= 0.0 {
        s.power_db(2, 0) - s.power_db(0, 2)
    } else {
        s.power_db(0, 2) - s.power_db(2, 0)
    };
    Ok((boosted, residual_isolation_db))
}

/// Turn on the amplification pump at the strength meeting the quadrature
/// gain target: `r = 1 - 2s / (sqrt(G_X)/sqrt(eta_a eta_c) + 1)`, then
/// `|beta_bb| = r (1 + 4 |beta_ab|^2) / 2` with `phi_bb = -pi/2`. The
/// result must pass the numeric stability check.
pub fn set_amplification(modes: &ModeTrio, pumps: &PumpSet, target_gx_db: f64) -> Result<PumpSet> {
    let mab = pumps.beta_ab.norm();
    let denom = 1.0 + 4.0 * mab * mab;
    let s = 4.0 * mab * mab / denom;
    let pre = (modes.a.eta() * modes.c.eta()).sqrt();
    let sqrt_gx = 10f64.powf(target_gx_db / 20.0);
    let r = 1.0 - 2.0 * s / (sqrt_gx / pre + 1.0);
    if r < 0.0 {
        // the gain floor sits at r = 0
        let floor_db = 20.0 * (pre * (2.0 * s - 1.0)).abs().log10();
        return Err(Error::TargetUnreachable {
            max_gx_db: floor_db,
            detail: format!(
                "target {target_gx_db:.2} dB lies below the pump-off gain {floor_db:.2} dB"
            ),
        });
    }
    if r >= 1.0 {
        return Err(Error::TargetUnreachable {
            max_gx_db: f64::INFINITY,
            detail: format!("required amplification ratio r = {r:.6} is at or past the pole"),
        });
    }
    let mut tuned = *pumps;
    tuned.beta_bb =
        num_complex::Complex64::from_polar(r * denom / 2.0, -std::f64::consts::FRAC_PI_2);
    let report = characteristic_roots(modes, &tuned)?;
    if !report.stable {
        // bisect down to the margin crossing and report the stable ceiling
        let crossing =
            beta_bb_margin_crossing(modes, mab, tuned.phi_loop(), 0.0, tuned.beta_bb.norm())?;
        let r_max = 2.0 * crossing / denom;
        let gx_max_db = 20.0 * (pre * (2.0 * s / (1.0 - r_max) - 1.0)).abs().log10();
        return Err(Error::TargetUnreachable {
            max_gx_db: gx_max_db,
            detail: "stability fails before the target gain".into(),
        });
    }
    Ok(tuned)
}

/// Run the four programming stages in order, collecting an on-resonance
/// scattering snapshot after each. The returned pump set is verified
/// stable; unreachable targets error with the achievable ceiling.
pub fn program_device(modes: &ModeTrio, targets: &TuningTargets) -> Result<TuningResult> {
    targets.validate()?;
    let mut stages = Vec::with_capacity(4);

    // stage 1: each conversion pump calibrated on its input-side reflection
    let mag_ab = calibrate_conversion(modes, (ModeLabel::A, ModeLabel::B))?;
    let mag_bc = calibrate_conversion(modes, (ModeLabel::B, ModeLabel::C))?;
    let mag_ac = calibrate_conversion(modes, (ModeLabel::C, ModeLabel::A))?;
    let ac_only = single_pump((ModeLabel::C, ModeLabel::A), mag_ac)?;
    stages.push(stage_snapshot(modes, &ac_only, 1, "frequency converter")?);

    // stage 2: parametric circulator
    let circulator = set_circulation(
        modes,
        (mag_ab, mag_bc, mag_ac),
        targets.phi_loop_sign,
        DEFAULT_ISOLATION_THRESHOLD_DB,
    )?;
    stages.push(stage_snapshot(modes, &circulator, 2, "isolator")?);

    // stage 3: overwhelm the loss of mode b
    let (boosted, _residual) = boost_b_coupling(modes, &circulator, targets.target_s)?;
    stages.push(stage_snapshot(modes, &boosted, 3, "mismatched isolator")?);

    // stage 4: amplification pump on, stability verified
    let tuned = set_amplification(modes, &boosted, targets.target_gx_db)?;
    stages.push(stage_snapshot(modes, &tuned, 4, "directional amplifier")?);

    let report = characteristic_roots(modes, &tuned)?;
    if !report.stable {
        return Err(Error::Unstable {
            margin: report.margin.unwrap_or(f64::NAN),
        });
    }
    let gains = gain_summary(modes, &tuned)?;
    Ok(TuningResult {
        pumps: tuned,
        stages,
        gains,
        stable: true,
        margin: report.margin.unwrap_or(f64::NAN),
    })
}
