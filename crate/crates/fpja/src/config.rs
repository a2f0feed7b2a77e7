//! Configuration files: a single TOML document carries the device
//! parameters, pump operating point (or tuning targets), chain-noise
//! calibration, and sweep grids. Frequencies are given in GHz and rates in
//! MHz in the file; everything is converted to angular units (rad/s)
//! internally.
//!
//! Schema (keys):
//!
//! ```text
//! modes.{a,b,c}.{freq_ghz, kappa_mhz, kappa_ext_mhz}
//! pumps.{beta_ab, beta_bc, beta_ac, beta_bb}.{mag, phase_rad}
//! chain_noise.{photons, err_minus, err_plus}
//! sweep.{delta_mhz, lo_phase_rad, gain_db, loop_phase_rad}.{start, stop, points}
//! internal_loss.kappa_b_int_mhz
//! tune.{target_gx_db, target_s, phi_loop_sign}
//! ```
//!
//! Unknown keys are rejected. `internal_loss.kappa_b_int_mhz`, when present,
//! assigns that much of mode b's linewidth to internal (unmonitored) loss;
//! it requires `modes.b.kappa_ext_mhz == modes.b.kappa_mhz` and is folded
//! into `kappa_ext_mhz` on load.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupled_modes::{ModeLabel, ModeParams, ModeTrio, PumpSet};
use crate::error::{Error, Result};
use crate::noise::ChainNoise;
use crate::tuning::TuningTargets;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub freq_ghz: f64,
    pub kappa_mhz: f64,
    pub kappa_ext_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    pub a: ModeSection,
    pub b: ModeSection,
    pub c: ModeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub mag: f64,
    pub phase_rad: f64,
}

impl PumpSection {
    fn as_complex(&self) -> Complex64 {
        Complex64::from_polar(self.mag, self.phase_rad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpsSection {
    pub beta_ab: PumpSection,
    pub beta_bc: PumpSection,
    pub beta_ac: PumpSection,
    pub beta_bb: PumpSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainNoiseSection {
    pub photons: f64,
    pub err_minus: f64,
    pub err_plus: f64,
}

impl Default for ChainNoiseSection {
    /// Separately calibrated chain noise of the reference setup.
    fn default() -> Self {
        ChainNoiseSection {
            photons: 19.8,
            err_minus: 3.3,
            err_plus: 3.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, points: usize) -> Self {
        GridSpec {
            start,
            stop,
            points,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
            .collect()
    }

    fn check(&self, name: &str, problems: &mut Vec<String>) {
        if self.points < 2 {
            problems.push(format!(
                "sweep.{name}.points must be >= 2, got {}",
                self.points
            ));
        }
        if !(self.stop > self.start) {
            problems.push(format!(
                "sweep.{name}: stop ({}) must exceed start ({})",
                self.stop, self.start
            ));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub delta_mhz: GridSpec,
    pub lo_phase_rad: GridSpec,
    pub gain_db: GridSpec,
    pub loop_phase_rad: GridSpec,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            delta_mhz: GridSpec::new(-20.0, 20.0, 801),
            lo_phase_rad: GridSpec::new(0.0, std::f64::consts::PI, 181),
            gain_db: GridSpec::new(0.0, 30.0, 61),
            loop_phase_rad: GridSpec::new(-std::f64::consts::PI, std::f64::consts::PI, 73),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalLossSection {
    pub kappa_b_int_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneSection {
    pub target_gx_db: f64,
    pub target_s: f64,
    pub phi_loop_sign: i8,
}

/// The complete, resolved configuration. After [`parse_config`] the
/// `internal_loss` shortcut has been folded into `modes.b` and the optional
/// sections carry their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub modes: ModesSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pumps: Option<PumpsSection>,
    #[serde(default)]
    pub chain_noise: ChainNoiseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub internal_loss: Option<InternalLossSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneSection>,
}

impl DeviceConfig {
    /// The three modes in angular units.
    pub fn mode_trio(&self) -> Result<ModeTrio> {
        let mk = |label: ModeLabel, m: &ModeSection| {
            ModeParams::new(
                label,
                TWO_PI * m.freq_ghz * 1e9,
                TWO_PI * m.kappa_mhz * 1e6,
                TWO_PI * m.kappa_ext_mhz * 1e6,
            )
        };
        ModeTrio::new(
            mk(ModeLabel::A, &self.modes.a)?,
            mk(ModeLabel::B, &self.modes.b)?,
            mk(ModeLabel::C, &self.modes.c)?,
        )
    }

    /// The explicit pump operating point; errors when the config only
    /// carries tuning targets.
    pub fn pump_set(&self) -> Result<PumpSet> {
        let p = self
            .pumps
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("config has no [pumps] section".into()))?;
        Ok(PumpSet::new(
            p.beta_ab.as_complex(),
            p.beta_bc.as_complex(),
            p.beta_ac.as_complex(),
            p.beta_bb.as_complex(),
        ))
    }

    pub fn tuning_targets(&self) -> Result<TuningTargets> {
        let t = self
            .tune
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("config has no [tune] section".into()))?;
        let targets = TuningTargets {
            target_gx_db: t.target_gx_db,
            target_s: t.target_s,
            phi_loop_sign: t.phi_loop_sign,
        };
        targets.validate()?;
        Ok(targets)
    }

    pub fn chain_noise(&self) -> Result<ChainNoise> {
        ChainNoise::new(
            self.chain_noise.photons,
            self.chain_noise.err_minus,
            self.chain_noise.err_plus,
        )
    }

    /// Detuning grid in rad/s.
    pub fn delta_grid(&self) -> Vec<f64> {
        self.sweep
            .delta_mhz
            .values()
            .into_iter()
            .map(|v| TWO_PI * v * 1e6)
            .collect()
    }

    pub fn lo_phase_grid(&self) -> Vec<f64> {
        self.sweep.lo_phase_rad.values()
    }

    pub fn gain_grid_db(&self) -> Vec<f64> {
        self.sweep.gain_db.values()
    }

    pub fn loop_phase_grid(&self) -> Vec<f64> {
        self.sweep.loop_phase_rad.values()
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, m) in [
            ("a", &self.modes.a),
            ("b", &self.modes.b),
            ("c", &self.modes.c),
        ] {
            if !(m.kappa_mhz > 0.0) {
                problems.push(format!(
                    "modes.{name}.kappa_mhz must be positive, got {}",
                    m.kappa_mhz
                ));
            }
            if !(0.0..=m.kappa_mhz).contains(&m.kappa_ext_mhz) {
                problems.push(format!(
                    "modes.{name}.kappa_ext_mhz must lie in [0, kappa_mhz], got {}",
                    m.kappa_ext_mhz
                ));
            }
            if !(m.freq_ghz > 0.0) {
                problems.push(format!(
                    "modes.{name}.freq_ghz must be positive, got {}",
                    m.freq_ghz
                ));
            }
        }
        if let Some(p) = &self.pumps {
            for (name, sect) in [
                ("beta_ab", &p.beta_ab),
                ("beta_bc", &p.beta_bc),
                ("beta_ac", &p.beta_ac),
                ("beta_bb", &p.beta_bb),
            ] {
                if !(sect.mag >= 0.0) {
                    problems.push(format!(
                        "pumps.{name}.mag must be nonnegative, got {}",
                        sect.mag
                    ));
                }
            }
        }
        for (v, name) in [
            (self.chain_noise.photons, "photons"),
            (self.chain_noise.err_minus, "err_minus"),
            (self.chain_noise.err_plus, "err_plus"),
        ] {
            if !(v >= 0.0) {
                problems.push(format!("chain_noise.{name} must be nonnegative, got {v}"));
            }
        }
        self.sweep.delta_mhz.check("delta_mhz", &mut problems);
        self.sweep.lo_phase_rad.check("lo_phase_rad", &mut problems);
        self.sweep.gain_db.check("gain_db", &mut problems);
        self.sweep
            .loop_phase_rad
            .check("loop_phase_rad", &mut problems);
        if let Some(t) = &self.tune {
            if !(t.target_s > 0.0 && t.target_s < 1.0) {
                problems.push(format!(
                    "tune.target_s must lie in (0, 1), got {}",
                    t.target_s
                ));
            }
            if t.phi_loop_sign != 1 && t.phi_loop_sign != -1 {
                problems.push(format!(
                    "tune.phi_loop_sign must be +1 or -1, got {}",
                    t.phi_loop_sign
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(problems))
        }
    }

    /// Fold the `internal_loss` shortcut into mode b's external coupling.
    fn resolve(mut self) -> Result<Self> {
        if let Some(int) = self.internal_loss.take() {
            let b = &mut self.modes.b;
            if (b.kappa_ext_mhz - b.kappa_mhz).abs() > 1e-12 * b.kappa_mhz.abs() {
                return Err(Error::ConfigValidation(vec![format!(
                    "internal_loss.kappa_b_int_mhz conflicts with modes.b.kappa_ext_mhz = {}; \
                     set kappa_ext_mhz = kappa_mhz or drop the internal_loss section",
                    b.kappa_ext_mhz
                )]));
            }
            if !(0.0..=b.kappa_mhz).contains(&int.kappa_b_int_mhz) {
                return Err(Error::ConfigValidation(vec![format!(
                    "internal_loss.kappa_b_int_mhz must lie in [0, kappa_b], got {}",
                    int.kappa_b_int_mhz
                )]));
            }
            b.kappa_ext_mhz = b.kappa_mhz - int.kappa_b_int_mhz;
        }
        self.validate()?;
        Ok(self)
    }
}

/// Parse and resolve a configuration document.
pub fn parse_config(text: &str) -> Result<DeviceConfig> {
    let raw: DeviceConfig = toml::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    raw.resolve()
}

/// Load a configuration file.
pub fn load_config(path: &Path) -> Result<DeviceConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Load a configuration file, applying dotted-path `key=value` overrides
/// before validation (e.g. `pumps.beta_bb.mag=2.0`).
pub fn load_config_with_overrides(path: &Path, overrides: &[String]) -> Result<DeviceConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ParseError(format!("{}: {e}", path.display())))?;
    let mut value: toml::Value =
        toml::from_str(&text).map_err(|e| Error::ParseError(e.to_string()))?;
    for entry in overrides {
        let (path, raw) = entry.split_once('=').ok_or_else(|| {
            Error::ParseError(format!(
                "override '{entry}' is not of the form key.path=value"
            ))
        })?;
        apply_override(&mut value, path.trim(), raw.trim())?;
    }
    let text = toml::to_string(&value).map_err(|e| Error::ParseError(e.to_string()))?;
    parse_config(&text)
}

fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let parsed: toml::Value = if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(raw.to_string())
    };
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (k, seg) in segments.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::ParseError(format!("override path '{path}': '{seg}' is not a table"))
        })?;
        if k == segments.len() - 1 {
            table.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

/// Serialize a resolved configuration; `parse_config(write_config(c)) == c`.
pub fn write_config(cfg: &DeviceConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) const PAPER_DEVICE: &str = r#"
[modes.a]
freq_ghz = 6.876
kappa_mhz = 83.0
kappa_ext_mhz = 82.17

[modes.b]
freq_ghz = 7.932
kappa_mhz = 15.0
kappa_ext_mhz = 15.0

[modes.c]
freq_ghz = 10.782
kappa_mhz = 45.0
kappa_ext_mhz = 44.55

[pumps.beta_ab]
mag = 1.0
phase_rad = 0.0

[pumps.beta_bc]
mag = 1.0
phase_rad = 0.0

[pumps.beta_ac]
mag = 0.5
phase_rad = -1.5707963267948966

[pumps.beta_bb]
mag = 2.275
phase_rad = -1.5707963267948966

[chain_noise]
photons = 19.8
err_minus = 3.3
err_plus = 3.2

[sweep.delta_mhz]
start = -20.0
stop = 20.0
points = 801

[sweep.lo_phase_rad]
start = 0.0
stop = 3.141592653589793
points = 181

[sweep.gain_db]
start = 0.0
stop = 30.0
points = 61

[sweep.loop_phase_rad]
start = -3.141592653589793
stop = 3.141592653589793
points = 73

[internal_loss]
kappa_b_int_mhz = 1.5

[tune]
target_gx_db = 24.0
target_s = 0.8
phi_loop_sign = 1
"#;

    #[test]
    fn parses_reference_device() {
        let cfg = parse_config(PAPER_DEVICE).unwrap();
        let modes = cfg.mode_trio().unwrap();
        assert_relative_eq!(
            modes.a.kappa / (2.0 * std::f64::consts::PI * 1e6),
            83.0,
            epsilon = 1e-9
        );
        assert_relative_eq!(modes.a.eta(), 0.99, epsilon = 1e-12);
        assert_relative_eq!(modes.c.eta(), 0.99, epsilon = 1e-12);
        // internal loss folded into mode b
        assert!(cfg.internal_loss.is_none());
        assert_relative_eq!(modes.b.eta(), 0.9, epsilon = 1e-12);
        let pumps = cfg.pump_set().unwrap();
        assert_relative_eq!(
            pumps.phi_loop(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );
        assert_relative_eq!(pumps.beta_bb.norm(), 2.275, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = PAPER_DEVICE.replace("[chain_noise]", "[chain_noize]");
        match parse_config(&text) {
            Err(Error::ParseError(msg)) => assert!(msg.contains("chain_noize"), "{msg}"),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn missing_mode_is_a_parse_error() {
        let text = PAPER_DEVICE.replace("[modes.c]", "[modes.c_typo]");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn negative_kappa_names_the_field() {
        let text = PAPER_DEVICE.replace("kappa_mhz = 45.0", "kappa_mhz = -45.0");
        match parse_config(&text) {
            Err(Error::ConfigValidation(problems)) => {
                assert!(
                    problems.iter().any(|p| p.contains("modes.c.kappa")),
                    "{problems:?}"
                )
            }
            other => panic!("expected ConfigValidation, got {other:?}"),
        }
    }

    #[test]
    fn validation_collects_every_problem() {
        let text = PAPER_DEVICE
            .replace("kappa_mhz = 45.0", "kappa_mhz = -45.0")
            .replace("points = 801", "points = 1");
        match parse_config(&text) {
            Err(Error::ConfigValidation(problems)) => assert!(problems.len() >= 2, "{problems:?}"),
            other => panic!("expected ConfigValidation, got {other:?}"),
        }
    }

    #[test]
    fn internal_loss_conflicts_with_explicit_split() {
        let text = PAPER_DEVICE.replace(
            "[modes.b]\nfreq_ghz = 7.932\nkappa_mhz = 15.0\nkappa_ext_mhz = 15.0",
            "[modes.b]\nfreq_ghz = 7.932\nkappa_mhz = 15.0\nkappa_ext_mhz = 14.0",
        );
        assert!(matches!(
            parse_config(&text),
            Err(Error::ConfigValidation(_))
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = parse_config(PAPER_DEVICE).unwrap();
        let text = write_config(&cfg);
        let again = parse_config(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn minimal_config_without_pumps_or_tune() {
        // linewidths alone are enough for the bounds analysis; commands
        // needing an operating point report the missing section
        let text = r#"
[modes.a]
freq_ghz = 6.876
kappa_mhz = 166.0
kappa_ext_mhz = 166.0

[modes.b]
freq_ghz = 7.932
kappa_mhz = 3.0
kappa_ext_mhz = 3.0

[modes.c]
freq_ghz = 10.782
kappa_mhz = 90.0
kappa_ext_mhz = 90.0
"#;
        let cfg = parse_config(text).unwrap();
        assert!(cfg.mode_trio().is_ok());
        assert!(matches!(cfg.pump_set(), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            cfg.tuning_targets(),
            Err(Error::InvalidParameter(_))
        ));
        // defaults materialize
        assert_eq!(cfg.chain_noise.photons, 19.8);
        assert_eq!(cfg.sweep.delta_mhz.points, 801);
    }

    #[test]
    fn grid_values_are_inclusive_linspace() {
        let g = GridSpec::new(-2.0, 2.0, 5);
        assert_eq!(g.values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
