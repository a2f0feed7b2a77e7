//! Mode-coupling matrix construction and scattering computation for the
//! three-mode, four-pump amplifier.
//!
//! Basis ordering is fixed globally as
//! `(a_S, b_S, c_S, a_I*, b_I*, c_I*)`: the three signal amplitudes followed
//! by the three conjugated idler amplitudes. Every matrix type in this crate
//! uses that ordering.
//!
//! The model: three resonant modes a, b, c with total loss rates `kappa_j`
//! and external coupling rates `kappa_j_ext`, pairwise coupled by three
//! frequency-conversion pumps (normalized strengths `beta_ab`, `beta_bc`,
//! `beta_ac`) and one amplification pump on mode b (`beta_bb`). Solving the
//! coupled equations of motion in the Fourier domain gives the 6x6
//! scattering matrix
//!
//! ```text
//! S = i H M^-1 H - 1,    H = diag(sqrt(eta_a), sqrt(eta_b), sqrt(eta_c), ...)
//! ```
//!
//! where `M` is the normalized mode-coupling matrix and
//! `eta_j = kappa_j_ext / kappa_j`.

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// 6x6 complex matrix in the fixed basis ordering.
pub type CMat6 = SMatrix<Complex64, 6, 6>;
/// 4x4 complex matrix for the reduced (a, c) basis.
pub type CMat4 = SMatrix<Complex64, 4, 4>;
/// Map from 12 input ports (6 external + 6 internal) to 6 external outputs.
pub type CMat6x12 = SMatrix<Complex64, 6, 12>;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Reciprocal condition number below which the coupling-matrix inversion is
/// reported as `NearSingular`; distinguishes numerical failure from ordinary
/// operation near the gain pole.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Tolerance used when two pump magnitudes must match (e.g. the
/// `|beta_ab| = |beta_bc|` precondition).
pub const MAG_MATCH_TOL: f64 = 1e-9;

fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let y = x.rem_euclid(two_pi);
    if y > std::f64::consts::PI {
        y - two_pi
    } else {
        y
    }
}

/// `mag * e^{i phase}` with quarter-turn phases snapped to exact axis
/// values, so that conditions like `phi_loop = pi/2` null scattering
/// elements exactly instead of to within `sin(1 ulp)`.
fn polar_snapped(mag: f64, phase: f64) -> Complex64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let w = wrap_angle(phase);
    if w == 0.0 {
        Complex64::new(mag, 0.0)
    } else if w == FRAC_PI_2 {
        Complex64::new(0.0, mag)
    } else if w == -FRAC_PI_2 {
        Complex64::new(0.0, -mag)
    } else if w == PI || w == -PI {
        Complex64::new(-mag, 0.0)
    } else {
        Complex64::from_polar(mag, w)
    }
}

/// Mode identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    A,
    B,
    C,
}

impl ModeLabel {
    /// Index into the signal part of the fixed basis ordering.
    pub fn index(self) -> usize {
        match self {
            ModeLabel::A => 0,
            ModeLabel::B => 1,
            ModeLabel::C => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeLabel::A => "a",
            ModeLabel::B => "b",
            ModeLabel::C => "c",
        }
    }
}

/// One resonant mode: frequency, total loss rate, and external coupling
/// rate, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParams {
    pub label: ModeLabel,
    /// Mode angular frequency, rad/s.
    pub omega: f64,
    /// Total loss rate, rad/s.
    pub kappa: f64,
    /// External coupling rate, rad/s. `0 <= kappa_ext <= kappa`.
    pub kappa_ext: f64,
}

impl ModeParams {
    pub fn new(label: ModeLabel, omega: f64, kappa: f64, kappa_ext: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mode {}: kappa must be positive, got {kappa}",
                label.name()
            )));
        }
        if !(0.0..=kappa).contains(&kappa_ext) {
            return Err(Error::InvalidParameter(format!(
                "mode {}: kappa_ext must lie in [0, kappa], got {kappa_ext}",
                label.name()
            )));
        }
        if !omega.is_finite() || omega < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "mode {}: omega must be finite and nonnegative, got {omega}",
                label.name()
            )));
        }
        Ok(ModeParams {
            label,
            omega,
            kappa,
            kappa_ext,
        })
    }

    /// Coupling efficiency `eta = kappa_ext / kappa`.
    pub fn eta(&self) -> f64 {
        self.kappa_ext / self.kappa
    }

    /// Internal (unmonitored) loss rate `kappa - kappa_ext`.
    pub fn kappa_int(&self) -> f64 {
        self.kappa - self.kappa_ext
    }
}

/// The three modes of the device, in label order a, b, c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTrio {
    pub a: ModeParams,
    pub b: ModeParams,
    pub c: ModeParams,
}

impl ModeTrio {
    pub fn new(a: ModeParams, b: ModeParams, c: ModeParams) -> Result<Self> {
        if a.label != ModeLabel::A || b.label != ModeLabel::B || c.label != ModeLabel::C {
            return Err(Error::InvalidParameter(
                "mode trio must be labeled (a, b, c) in order".into(),
            ));
        }
        Ok(ModeTrio { a, b, c })
    }

    /// Lossless trio with unit coupling efficiency, handy for tests and the
    /// analytic limits.
    pub fn lossless(kappa_a: f64, kappa_b: f64, kappa_c: f64) -> Result<Self> {
        ModeTrio::new(
            ModeParams::new(ModeLabel::A, 0.0, kappa_a, kappa_a)?,
            ModeParams::new(ModeLabel::B, 0.0, kappa_b, kappa_b)?,
            ModeParams::new(ModeLabel::C, 0.0, kappa_c, kappa_c)?,
        )
    }

    pub fn kappas(&self) -> [f64; 3] {
        [self.a.kappa, self.b.kappa, self.c.kappa]
    }

    pub fn etas(&self) -> [f64; 3] {
        [self.a.eta(), self.b.eta(), self.c.eta()]
    }
}

/// The four normalized complex pump couplings.
///
/// `beta_jk = g_jk / (2 sqrt(kappa_j kappa_k))` for the conversion pumps and
/// `beta_bb = g_bb / (2 kappa_b)` for the amplification pump. The loop phase
/// `arg(beta_ab) + arg(beta_bc) - arg(beta_ac)` controls the circulation
/// direction; only it (not the individual phases) affects scattering
/// magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSet {
    pub beta_ab: Complex64,
    pub beta_bc: Complex64,
    pub beta_ac: Complex64,
    pub beta_bb: Complex64,
}

impl PumpSet {
    pub fn new(
        beta_ab: Complex64,
        beta_bc: Complex64,
        beta_ac: Complex64,
        beta_bb: Complex64,
    ) -> Self {
        PumpSet {
            beta_ab,
            beta_bc,
            beta_ac,
            beta_bb,
        }
    }

    /// All pumps off.
    pub fn off() -> Self {
        PumpSet::new(
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
            Complex64::default(),
        )
    }

    /// Canonical gauge: `phi_ab = phi_bc = 0`, `phi_ac = -phi_loop`. This is
    /// the reproducible convention used by configuration files; scattering
    /// magnitudes depend only on `phi_loop`.
    pub fn with_loop_phase(
        mag_ab: f64,
        mag_bc: f64,
        mag_ac: f64,
        mag_bb: f64,
        phi_loop: f64,
        phi_bb: f64,
    ) -> Self {
        PumpSet::new(
            Complex64::new(mag_ab, 0.0),
            Complex64::new(mag_bc, 0.0),
            polar_snapped(mag_ac, -phi_loop),
            polar_snapped(mag_bb, phi_bb),
        )
    }

    /// Quadrature-aligned gauge: `phi_ab = sign * pi/2`, `phi_bc = phi_ac = 0`,
    /// `phi_bb = -pi/2`. Same loop phase (`sign * pi/2`) and identical
    /// scattering magnitudes as the canonical gauge, but the element phases
    /// put the amplified quadrature exactly on the `X_a <- Y_c` entry of the
    /// quadrature matrix.
    pub fn aligned(mag_ab: f64, mag_bc: f64, mag_ac: f64, mag_bb: f64, phi_loop_sign: i8) -> Self {
        let sign = if phi_loop_sign >= 0 { 1.0 } else { -1.0 };
        PumpSet::new(
            polar_snapped(mag_ab, sign * std::f64::consts::FRAC_PI_2),
            Complex64::new(mag_bc, 0.0),
            Complex64::new(mag_ac, 0.0),
            polar_snapped(mag_bb, -std::f64::consts::FRAC_PI_2),
        )
    }

    /// Loop phase `arg(beta_ab) + arg(beta_bc) - arg(beta_ac)`, wrapped to
    /// `(-pi, pi]`.
    pub fn phi_loop(&self) -> f64 {
        wrap_angle(self.beta_ab.arg() + self.beta_bc.arg() - self.beta_ac.arg())
    }

    /// Phase of the amplification pump.
    pub fn phi_bb(&self) -> f64 {
        self.beta_bb.arg()
    }

    /// Cosine of the loop phase computed from the complex couplings
    /// directly, `Re(beta_ab beta_bc beta_ac*) / |beta_ab beta_bc beta_ac|`;
    /// exactly zero for axis-aligned couplings at `phi_loop = ±pi/2`.
    /// Returns 1 when any conversion coupling vanishes (the loop phase is
    /// then undefined and irrelevant).
    pub fn cos_phi_loop(&self) -> f64 {
        let mags = self.beta_ab.norm() * self.beta_bc.norm() * self.beta_ac.norm();
        if mags == 0.0 {
            return 1.0;
        }
        (self.beta_ab * self.beta_bc * self.beta_ac.conj()).re / mags
    }
}

/// Normalized complex detunings for the six basis components.
///
/// `delta_s[j]` is `Delta_j_S` and `delta_i[j]` is `Delta_j_I`, both
/// normalized by the respective `kappa_j`. The imaginary part of every entry
/// is exactly 1/2 (the normalized half linewidth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningVector {
    pub delta_s: [Complex64; 3],
    pub delta_i: [Complex64; 3],
}

impl DetuningVector {
    /// Resonant-pump detunings for a common drive detuning `delta` (rad/s):
    /// `Delta_j_S = delta/kappa_j + i/2`, `Delta_j_I = -delta/kappa_j + i/2`,
    /// so that `-(Delta_j_I)* = Delta_j_S`.
    pub fn resonant(delta: f64, modes: &ModeTrio) -> Self {
        let k = modes.kappas();
        let mk = |x: f64| Complex64::new(x, 0.5);
        DetuningVector {
            delta_s: [mk(delta / k[0]), mk(delta / k[1]), mk(delta / k[2])],
            delta_i: [mk(-delta / k[0]), mk(-delta / k[1]), mk(-delta / k[2])],
        }
    }

    /// Explicit normalized real parts for signal and idler detunings; the
    /// imaginary parts are pinned to exactly 1/2. This is the only way to
    /// represent off-resonant pumps.
    pub fn from_normalized_parts(re_s: [f64; 3], re_i: [f64; 3]) -> Self {
        let mk = |x: f64| Complex64::new(x, 0.5);
        DetuningVector {
            delta_s: [mk(re_s[0]), mk(re_s[1]), mk(re_s[2])],
            delta_i: [mk(re_i[0]), mk(re_i[1]), mk(re_i[2])],
        }
    }

    /// Check the structural invariant: the imaginary part of every entry
    /// is exactly 1/2 (the normalized half linewidth).
    pub fn validate(&self) -> Result<()> {
        let ok = self
            .delta_s
            .iter()
            .chain(self.delta_i.iter())
            .all(|d| d.im == 0.5 && d.re.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "detuning entries must be finite with imaginary part exactly 1/2".into(),
            ))
        }
    }

    /// True when `-(Delta_j_I)* = Delta_j_S` for all modes (resonant pumps).
    pub fn is_resonant(&self) -> bool {
        self.delta_s
            .iter()
            .zip(self.delta_i.iter())
            .all(|(s, i)| (-(i.conj()) - s).norm() < 1e-12)
    }
}

/// The 6x6 normalized mode-coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    pub entries: CMat6,
}

impl CouplingMatrix {
    /// The matrix scaled by the loss rates, `K M K` with
    /// `K = diag(sqrt(kappa_j))` repeated over signal and idler blocks.
    /// Entries then carry rad/s units; this is the form whose spectrum
    /// governs stability.
    pub fn scaled_by_rates(&self, modes: &ModeTrio) -> CMat6 {
        let k = modes.kappas();
        let sq = [
            k[0].sqrt(),
            k[1].sqrt(),
            k[2].sqrt(),
            k[0].sqrt(),
            k[1].sqrt(),
            k[2].sqrt(),
        ];
        CMat6::from_fn(|i, j| self.entries[(i, j)] * sq[i] * sq[j])
    }
}

/// The 6x6 scattering matrix in the fixed basis ordering, together with the
/// reciprocal condition estimate of the inversion that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    pub entries: CMat6,
    pub rcond: f64,
}

impl ScatteringMatrix {
    /// Power of an element in dB: `10 log10 |S_ij|^2`.
    pub fn power_db(&self, row: usize, col: usize) -> f64 {
        20.0 * self.entries[(row, col)].norm().log10()
    }

    /// Forward transmission `c -> a` (the gain element).
    pub fn s_ac(&self) -> Complex64 {
        self.entries[(0, 2)]
    }

    /// Reverse transmission `a -> c`.
    pub fn s_ca(&self) -> Complex64 {
        self.entries[(2, 0)]
    }

    pub fn s_aa(&self) -> Complex64 {
        self.entries[(0, 0)]
    }

    pub fn s_cc(&self) -> Complex64 {
        self.entries[(2, 2)]
    }

    /// Signal-to-idler gain element `c_S -> a_I*`.
    pub fn s_idler_ac(&self) -> Complex64 {
        self.entries[(3, 2)]
    }
}

/// Closed-form scattering elements for resonant pumps, plus the loop
/// determinant `C` and the effective detuning of mode b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDiagnostics {
    /// Determinant of the idler conversion loop.
    pub c: Complex64,
    /// Effective detuning of the b-mode field after eliminating the idlers.
    pub delta_b_eff: Complex64,
    pub s_aa: Complex64,
    pub s_cc: Complex64,
    /// Signal-to-idler reflection on mode a (zero under the directionality
    /// conditions).
    pub s_aias: Complex64,
    /// Signal-to-idler reflection on mode c.
    pub s_cics: Complex64,
    pub s_ac: Complex64,
    pub s_ca: Complex64,
    /// Forward idler gain `c_S -> a_I*`.
    pub s_aics: Complex64,
}

/// Scalar gain parameters of the directional operating point.
///
/// `s` is the ratio of the conversion rates into mode b to its total
/// dissipation; `r` is the ratio of the amplification rate to the total
/// dissipation. All amplitude gains carry the `sqrt(eta_a eta_c)` prefactor
/// and are signed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSummary {
    pub s: f64,
    pub r: f64,
    pub sqrt_gs: f64,
    pub sqrt_gi: f64,
    pub sqrt_gx: f64,
    pub sqrt_gy: f64,
    /// Filled in by sweep analysis, rad/s.
    pub bandwidth_3db: Option<f64>,
}

impl GainSummary {
    pub fn gs_db(&self) -> f64 {
        20.0 * self.sqrt_gs.abs().log10()
    }
    pub fn gi_db(&self) -> f64 {
        20.0 * self.sqrt_gi.abs().log10()
    }
    pub fn gx_db(&self) -> f64 {
        20.0 * self.sqrt_gx.abs().log10()
    }
    pub fn gy_db(&self) -> f64 {
        20.0 * self.sqrt_gy.abs().log10()
    }
    /// Power quadrature gain `G_X` (linear).
    pub fn gx(&self) -> f64 {
        self.sqrt_gx * self.sqrt_gx
    }
    /// Power quadrature gain `G_Y` (linear).
    pub fn gy(&self) -> f64 {
        self.sqrt_gy * self.sqrt_gy
    }
}

/// Build the normalized mode-coupling matrix.
///
/// Layout (rows and columns in the fixed basis ordering):
///
/// ```text
///  Delta_a_S   beta_ab    beta_ac  |      0          0          0
///  beta_ab*    Delta_b_S  beta_bc  |      0       beta_bb       0
///  beta_ac*    beta_bc*   Delta_c_S|      0          0          0
///  ---------------------------------------------------------------
///      0          0          0     | -Delta_a_I* -beta_ab*  -beta_ac*
///      0      -beta_bb*       0    | -beta_ab    -Delta_b_I* -beta_bc*
///      0          0          0     | -beta_ac    -beta_bc   -Delta_c_I*
/// ```
///
/// The diagonal blocks circulate signals (and idlers) between the modes; the
/// anti-diagonal entries couple the signal and idler of mode b through the
/// amplification pump.
pub fn build_coupling_matrix(pumps: &PumpSet, detunings: &DetuningVector) -> CouplingMatrix {
    debug_assert!(detunings.validate().is_ok(), "malformed detuning vector");
    let z = Complex64::default();
    let p = pumps;
    let ds = detunings.delta_s;
    let di = detunings.delta_i;
    #[rustfmt::skip]
    let entries = CMat6::from_row_slice(&[
        ds[0],             p.beta_ab,          p.beta_ac,          z,                  z,                  z,
        p.beta_ab.conj(),  ds[1],              p.beta_bc,          z,                  p.beta_bb,          z,
        p.beta_ac.conj(),  p.beta_bc.conj(),   ds[2],              z,                  z,                  z,
        z,                 z,                  z,                  -di[0].conj(),      -p.beta_ab.conj(),  -p.beta_ac.conj(),
        z,                 -p.beta_bb.conj(),  z,                  -p.beta_ab,         -di[1].conj(),      -p.beta_bc.conj(),
        z,                 z,                  z,                  -p.beta_ac,         -p.beta_bc,         -di[2].conj(),
    ]);
    CouplingMatrix { entries }
}

/// Scattering matrix `S = i H M^-1 H - 1`.
///
/// Fails with `NearSingular` when the reciprocal condition estimate of `M`
/// falls below [`RCOND_THRESHOLD`], which signals operation at or beyond an
/// instability threshold rather than a plain numerical accident.
pub fn scattering_matrix(m: &CouplingMatrix, modes: &ModeTrio) -> Result<ScatteringMatrix> {
    let inv = m
        .entries
        .try_inverse()
        .ok_or(Error::NearSingular { rcond: 0.0 })?;
    let norm1 = |a: &CMat6| -> f64 {
        (0..6)
            .map(|j| (0..6).map(|i| a[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let rcond = 1.0 / (norm1(&m.entries) * norm1(&inv));
    if rcond < RCOND_THRESHOLD {
        return Err(Error::NearSingular { rcond });
    }
    let e = modes.etas();
    let h = [
        e[0].sqrt(),
        e[1].sqrt(),
        e[2].sqrt(),
        e[0].sqrt(),
        e[1].sqrt(),
        e[2].sqrt(),
    ];
    let entries = CMat6::from_fn(|i, j| {
        let hmh = I * h[i] * inv[(i, j)] * h[j];
        if i == j {
            hmh - ONE
        } else {
            hmh
        }
    });
    Ok(ScatteringMatrix { entries, rcond })
}

/// Convenience: scattering at a single resonant drive detuning (rad/s).
pub fn scattering_at(modes: &ModeTrio, pumps: &PumpSet, delta: f64) -> Result<ScatteringMatrix> {
    let det = DetuningVector::resonant(delta, modes);
    scattering_matrix(&build_coupling_matrix(pumps, &det), modes)
}

/// Closed-form scattering elements for resonant pumps.
///
/// Valid for arbitrary pump strengths and phases as long as the pumps are
/// resonant (`-(Delta_j_I)* = Delta_j_S`). Each element matches the
/// corresponding entry of [`scattering_matrix`] to full numerical precision.
pub fn closed_form_scattering(
    modes: &ModeTrio,
    pumps: &PumpSet,
    detunings: &DetuningVector,
) -> Result<ClosedFormDiagnostics> {
    if !detunings.is_resonant() {
        return Err(Error::InvalidParameter(
            "closed forms require resonant pumps (-(Delta_I)* = Delta_S)".into(),
        ));
    }
    let [da, db, dc] = detunings.delta_s;
    let bab = pumps.beta_ab;
    let bbc = pumps.beta_bc;
    let bac = pumps.beta_ac;
    let bbb = pumps.beta_bb;
    let c = da * db * dc
        - bbc.norm_sqr() * da
        - bac.norm_sqr() * db
        - bab.norm_sqr() * dc
        - bab * bbc * bac.conj()
        - bab.conj() * bbc.conj() * bac;
    if c.norm() < 1e-14 {
        return Err(Error::DegenerateLoop { c_mag: c.norm() });
    }
    let delta_b_eff = db + bbb.norm_sqr() / c * (da * dc - bac.norm_sqr());
    let det_m = build_coupling_matrix(pumps, detunings)
        .entries
        .determinant();
    let [ea, _, ec] = modes.etas();
    let eac = (ea * ec).sqrt();
    let s_aa = I * ea * c / det_m * (delta_b_eff * dc - bbc.norm_sqr()) - ONE;
    let s_cc = I * ec * c / det_m * (delta_b_eff * da - bab.norm_sqr()) - ONE;
    let s_aias = I * ea / det_m
        * bbb.conj()
        * (bbc * bbc * bac.conj() * bac.conj() - bab.conj() * bab.conj() * dc * dc);
    let s_cics =
        I * ec / det_m * bbb.conj() * (bac * bac * bab.conj() * bab.conj() - bbc * bbc * da * da);
    let s_ac = I * eac * c / det_m * (bab * bbc - bac * delta_b_eff);
    let s_ca = I * eac * c / det_m * (bab.conj() * bbc.conj() - bac.conj() * delta_b_eff);
    let s_aics = -I * eac / det_m
        * bbb.conj()
        * (bbc * da - bab.conj() * bac)
        * (bab.conj() * dc + bbc * bac.conj());
    Ok(ClosedFormDiagnostics {
        c,
        delta_b_eff,
        s_aa,
        s_cc,
        s_aias,
        s_cics,
        s_ac,
        s_ca,
        s_aics,
    })
}

/// Amplitude gains of the reduced (a, c) scattering at the directional
/// operating point.
pub fn reduced_gains(s: f64, r: f64, eta_a: f64, eta_c: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
    }
    if r >= 1.0 {
        return Err(Error::PoleReached { r });
    }
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("r = {r} negative")));
    }
    let pre = (eta_a * eta_c).sqrt();
    let sqrt_gs = pre * (2.0 * s + r * r - 1.0) / (1.0 - r * r);
    let sqrt_gi = pre * 2.0 * r * s / (1.0 - r * r);
    Ok((sqrt_gs, sqrt_gi))
}

/// The 4x4 scattering matrix in the reduced basis `(a_S, c_S, a_I*, c_I*)`
/// at the directional operating point (resonant, directionality conditions
/// satisfied, loop phase +pi/2 in the aligned gauge):
///
/// ```text
///  eta_a - 1        -i sqrt(G_S)     0                -e^{i phi_bb} sqrt(G_I)
///  i sqrt(eta_a eta_c)  eta_c - 1    0                 0
///  0            -e^{-i phi_bb} sqrt(G_I)  eta_a - 1    i sqrt(G_S)
///  0                 0              -i sqrt(eta_a eta_c)  eta_c - 1
/// ```
pub fn reduced_scattering_ac(s: f64, r: f64, eta_a: f64, eta_c: f64, phi_bb: f64) -> Result<CMat4> {
    let (gs, gi) = reduced_gains(s, r, eta_a, eta_c)?;
    let eac = (eta_a * eta_c).sqrt();
    let ephi = Complex64::from_polar(1.0, phi_bb);
    let z = Complex64::default();
    let re = |x: f64| Complex64::new(x, 0.0);
    #[rustfmt::skip]
    let m = CMat4::from_row_slice(&[
        re(eta_a - 1.0),  -I * gs,           z,                -ephi * gi,
        I * eac,          re(eta_c - 1.0),   z,                z,
        z,                -ephi.conj() * gi, re(eta_a - 1.0),  I * gs,
        z,                z,                 -I * eac,         re(eta_c - 1.0),
    ]);
    Ok(m)
}

/// Scalar gain summary from the pump set: `s = 4|b_ab|^2 / (1 + 4|b_ab|^2)`,
/// `r = 2|b_bb| / (1 + 4|b_ab|^2)`, and the four amplitude gains including
/// the `sqrt(eta_a eta_c)` prefactor.
pub fn gain_summary(modes: &ModeTrio, pumps: &PumpSet) -> Result<GainSummary> {
    let mab = pumps.beta_ab.norm();
    let mbc = pumps.beta_bc.norm();
    if (mab - mbc).abs() > MAG_MATCH_TOL {
        return Err(Error::AsymmetricConversion {
            beta_ab: mab,
            beta_bc: mbc,
        });
    }
    let denom = 1.0 + 4.0 * mab * mab;
    let s = 4.0 * mab * mab / denom;
    let r = 2.0 * pumps.beta_bb.norm() / denom;
    if r >= 1.0 {
        return Err(Error::PoleReached { r });
    }
    let (sqrt_gs, sqrt_gi) = reduced_gains(s, r, modes.a.eta(), modes.c.eta())?;
    // identical to sqrt_gs ± sqrt_gi but free of cancellation near r = 1
    let pre = (modes.a.eta() * modes.c.eta()).sqrt();
    Ok(GainSummary {
        s,
        r,
        sqrt_gs,
        sqrt_gi,
        sqrt_gx: pre * (2.0 * s / (1.0 - r) - 1.0),
        sqrt_gy: pre * (2.0 * s / (1.0 + r) - 1.0),
        bandwidth_3db: None,
    })
}

/// One row of a detuning sweep. `matrix` is `None` when the inversion at
/// this point was flagged `NearSingular`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    /// Drive detuning, rad/s.
    pub delta: f64,
    pub matrix: Option<ScatteringMatrix>,
}

/// Result of a detuning sweep.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Width (rad/s) of the band where the forward gain `|S_ac|^2` stays
    /// within 3 dB of its peak, interpolated linearly between grid points.
    pub fn bandwidth_3db(&self) -> Option<f64> {
        self.band_width(|m| m.power_db(0, 2), |peak| peak - 3.0)
    }

    /// Total width (rad/s) of the region where the return loss on the given
    /// mode exceeds `threshold_db`. Return loss is `-10 log10 |S_jj|^2`.
    pub fn return_loss_band(&self, mode: ModeLabel, threshold_db: f64) -> f64 {
        let j = mode.index();
        self.band_width(|m| -m.power_db(j, j), move |_| threshold_db)
            .unwrap_or(0.0)
    }

    fn band_width(
        &self,
        metric: impl Fn(&ScatteringMatrix) -> f64,
        level_of_peak: impl Fn(f64) -> f64,
    ) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.matrix.as_ref().map(|m| (r.delta, metric(m))))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let peak = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let level = level_of_peak(peak);
        if peak < level {
            return Some(0.0);
        }
        let mut width = 0.0;
        // a band may already be open at the left edge of the grid
        let mut start: Option<f64> = if pts[0].1 >= level {
            Some(pts[0].0)
        } else {
            None
        };
        let crossing = |lo: (f64, f64), hi: (f64, f64)| -> f64 {
            let t = (level - lo.1) / (hi.1 - lo.1);
            lo.0 + t * (hi.0 - lo.0)
        };
        for w in pts.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            match (p0.1 >= level, p1.1 >= level) {
                (false, true) => start = Some(crossing(p0, p1)),
                (true, false) => {
                    if let Some(s) = start.take() {
                        width += crossing(p0, p1) - s;
                    }
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            width += pts.last().unwrap().0 - s;
        }
        Some(width)
    }
}

/// Gain summary with the -3 dB bandwidth filled in from a detuning sweep.
pub fn gain_summary_swept(
    modes: &ModeTrio,
    pumps: &PumpSet,
    deltas: &[f64],
) -> Result<GainSummary> {
    let mut gains = gain_summary(modes, pumps)?;
    gains.bandwidth_3db = sweep_scattering(modes, pumps, deltas)?.bandwidth_3db();
    Ok(gains)
}

/// Sweep the resonant drive detuning over a monotone grid. Points where the
/// inversion is flagged `NearSingular` are kept as flagged rows rather than
/// aborting the sweep.
pub fn sweep_scattering(modes: &ModeTrio, pumps: &PumpSet, deltas: &[f64]) -> Result<SweepTable> {
    if deltas.len() < 2 {
        return Err(Error::InvalidParameter(
            "sweep grid needs at least 2 points".into(),
        ));
    }
    if !deltas.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    let rows = deltas
        .iter()
        .map(|&delta| {
            let m = scattering_at(modes, pumps, delta);
            SweepRow {
                delta,
                matrix: match m {
                    Ok(s) => Some(s),
                    Err(Error::NearSingular { .. }) => None,
                    Err(_) => None,
                },
            }
        })
        .collect();
    Ok(SweepTable { rows })
}

/// Determinant of the scaled coupling matrix with the Fourier variable
/// continued to `i lambda`: the characteristic polynomial of the dynamics
/// evaluated at `lambda` (up to the sign `-1` of the leading coefficient).
pub fn dynamics_determinant(modes: &ModeTrio, pumps: &PumpSet, lambda: Complex64) -> Complex64 {
    let det = DetuningVector::resonant(0.0, modes);
    let scaled = build_coupling_matrix(pumps, &det).scaled_by_rates(modes);
    let shifted = CMat6::from_fn(|i, j| {
        if i == j {
            scaled[(i, j)] + I * lambda
        } else {
            scaled[(i, j)]
        }
    });
    shifted.determinant()
}
