//! The analyses behind the command-line frontend: each command evaluates a
//! sweep or report from a [`DeviceConfig`] and writes a delimiter-separated
//! data file plus a run manifest.
//!
//! Data files are deterministic: identical config and command produce
//! byte-identical output (floats are printed with 12 significant digits and
//! the header carries only the command, crate version, and config echo).
//! Volatile metadata (timing) lives in the sidecar manifest
//! `<out>.manifest.toml`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{write_config, DeviceConfig};
use crate::coupled_modes::{gain_summary_swept, sweep_scattering, ModeLabel};
use crate::error::{Error, Result};
use crate::noise::{added_noise_fpja, noise_report, InputOccupancies};
use crate::quadrature::lo_phase_response;
use crate::stability::{direct_gain_to_r, performance_bounds, stability_region};
use crate::tuning::program_device;

/// The analyses the frontend can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Scattering versus drive detuning.
    Sweep,
    /// Gain and noise floor versus LO phase.
    Quadrature,
    /// Added noise and efficiency versus quadrature gain.
    Noise,
    /// Stability map over direct gain and loop phase.
    Stability,
    /// The four-step programming procedure.
    Tune,
    /// Closed-form performance bounds.
    Bounds,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Quadrature => "quadrature",
            Command::Noise => "noise",
            Command::Stability => "stability",
            Command::Tune => "tune",
            Command::Bounds => "bounds",
        }
    }
}

/// Where the run landed on disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub data_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
}

struct Table {
    /// Column names with units baked in, e.g. `delta_mhz`.
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
    /// Extra `# key = value` lines for the data header and the manifest
    /// summary table.
    summary: Vec<(String, f64)>,
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{v:.11e}")
    }
}

fn write_outputs(
    cmd: Command,
    cfg: &DeviceConfig,
    out: &Path,
    table: &Table,
    elapsed_ms: f64,
) -> Result<RunOutput> {
    let io_err = |e: std::io::Error| Error::Io(format!("{}: {e}", out.display()));
    let mut data = Vec::new();
    let version = env!("CARGO_PKG_VERSION");
    writeln!(data, "# fpja {} v{version}", cmd.name()).unwrap();
    for (k, v) in &table.summary {
        writeln!(data, "# {k} = {}", fmt_value(*v)).unwrap();
    }
    writeln!(data, "# config:").unwrap();
    for line in write_config(cfg).lines() {
        writeln!(data, "#   {line}").unwrap();
    }
    writeln!(data, "# columns: {}", table.columns.join(", ")).unwrap();
    writeln!(data, "{}", table.columns.join(",")).unwrap();
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_value(v)).collect();
        writeln!(data, "{}", line.join(",")).unwrap();
    }
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    std::fs::write(out, &data).map_err(io_err)?;

    let manifest_path = {
        let mut s = out.as_os_str().to_os_string();
        s.push(".manifest.toml");
        PathBuf::from(s)
    };
    let mut manifest = String::new();
    manifest.push_str(&format!("command = \"{}\"\n", cmd.name()));
    manifest.push_str(&format!("version = \"{version}\"\n"));
    manifest.push_str(&format!("data_file = \"{}\"\n", out.display()));
    manifest.push_str(&format!("rows = {}\n", table.rows.len()));
    manifest.push_str(&format!("elapsed_ms = {elapsed_ms}\n"));
    if !table.summary.is_empty() {
        manifest.push_str("\n[summary]\n");
        for (k, v) in &table.summary {
            manifest.push_str(&format!("{k} = {}\n", fmt_value(*v)));
        }
    }
    manifest.push_str("\n[config]\n");
    manifest.push_str(&write_config(cfg));
    std::fs::write(&manifest_path, manifest)
        .map_err(|e| Error::Io(format!("{}: {e}", manifest_path.display())))?;
    Ok(RunOutput {
        data_path: out.to_path_buf(),
        manifest_path,
        rows: table.rows.len(),
    })
}

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn sweep_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let pumps = cfg.pump_set()?;
    let deltas = cfg.delta_grid();
    let sweep = sweep_scattering(&modes, &pumps, &deltas)?;
    let mut rows = Vec::with_capacity(sweep.rows.len());
    for r in &sweep.rows {
        let delta_mhz = r.delta / TWO_PI / 1e6;
        match &r.matrix {
            Some(m) => rows.push(vec![
                delta_mhz,
                m.power_db(0, 0),
                m.power_db(0, 2),
                m.power_db(2, 0),
                m.power_db(2, 2),
                m.s_aa().arg(),
                m.s_ac().arg(),
                m.s_ca().arg(),
                m.s_cc().arg(),
                1.0,
            ]),
            None => rows.push(vec![
                delta_mhz,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                0.0,
            ]),
        }
    }
    let mut summary = Vec::new();
    if let Some(bw) = sweep.bandwidth_3db() {
        summary.push(("bandwidth_3db_mhz".into(), bw / TWO_PI / 1e6));
    }
    summary.push((
        "return_loss_band_a_mhz_at_10db".into(),
        sweep.return_loss_band(ModeLabel::A, 10.0) / TWO_PI / 1e6,
    ));
    summary.push((
        "return_loss_band_c_mhz_at_10db".into(),
        sweep.return_loss_band(ModeLabel::C, 10.0) / TWO_PI / 1e6,
    ));
    Ok(Table {
        columns: vec![
            "delta_mhz",
            "s_aa_db",
            "s_ac_db",
            "s_ca_db",
            "s_cc_db",
            "phase_s_aa_rad",
            "phase_s_ac_rad",
            "phase_s_ca_rad",
            "phase_s_cc_rad",
            "ok",
        ],
        rows,
        summary,
    })
}

fn quadrature_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let pumps = cfg.pump_set()?;
    let chain = cfg.chain_noise()?;
    let gains = gain_summary_swept(&modes, &pumps, &cfg.delta_grid())?;
    let report = noise_report(&modes, &pumps, &InputOccupancies::vacuum(), &chain)?;
    let grid = cfg.lo_phase_grid();
    let resp = lo_phase_response(&gains, &grid, Some(&report.covariance), Some(chain.photons));
    let floors_fpja = resp.noise_floor_fpja.as_ref().expect("covariance supplied");
    let floors_total = resp
        .noise_floor_total
        .as_ref()
        .expect("covariance supplied");
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &theta)| {
            vec![
                theta,
                10.0 * resp.power_gain[k].log10(),
                floors_fpja[k],
                floors_total[k],
            ]
        })
        .collect();
    let summary = vec![
        ("gx_db".to_string(), gains.gx_db()),
        ("gy_db".to_string(), gains.gy_db()),
        (
            "bandwidth_3db_mhz".to_string(),
            gains.bandwidth_3db.map_or(f64::NAN, |b| b / TWO_PI / 1e6),
        ),
        ("n_add_fpja_photons".to_string(), report.n_add_fpja),
        ("eta_meas".to_string(), report.eta_meas.value),
    ];
    Ok(Table {
        columns: vec![
            "theta_rad",
            "power_gain_db",
            "noise_floor_fpja_photons",
            "noise_floor_total_photons",
        ],
        rows,
        summary,
    })
}

fn noise_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let pumps = cfg.pump_set()?;
    let chain = cfg.chain_noise()?;
    let mab = pumps.beta_ab.norm();
    let denom = 1.0 + 4.0 * mab * mab;
    let s = 4.0 * mab * mab / denom;
    let pre = (modes.a.eta() * modes.c.eta()).sqrt();
    let mut rows = Vec::new();
    for g_db in cfg.gain_grid_db() {
        let sqrt_gx = 10f64.powf(g_db / 20.0);
        let r = 1.0 - 2.0 * s / (sqrt_gx / pre + 1.0);
        if !(0.0..1.0).contains(&r) {
            rows.push(vec![
                g_db,
                r,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                0.0,
            ]);
            continue;
        }
        let mut p = pumps;
        p.beta_bb =
            num_complex::Complex64::from_polar(r * denom / 2.0, -std::f64::consts::FRAC_PI_2);
        let gx = (pre * (2.0 * s / (1.0 - r) - 1.0)).powi(2);
        let n_formula = added_noise_fpja(mab, gx)?;
        match noise_report(&modes, &p, &InputOccupancies::vacuum(), &chain) {
            Ok(rep) => rows.push(vec![
                g_db,
                r,
                p.beta_bb.norm(),
                n_formula,
                rep.n_add_fpja,
                rep.n_add_total,
                rep.eta_meas.value,
                rep.eta_meas.lower,
                rep.eta_meas.upper,
                1.0,
            ]),
            Err(Error::NearSingular { .. }) => rows.push(vec![
                g_db,
                r,
                p.beta_bb.norm(),
                n_formula,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                f64::NAN,
                0.0,
            ]),
            Err(e) => return Err(e),
        }
    }
    let bounds = performance_bounds(&modes);
    let summary = vec![
        ("min_n_add_photons".to_string(), bounds.min_n_add),
        ("max_eta".to_string(), bounds.max_eta),
    ];
    Ok(Table {
        columns: vec![
            "gain_db",
            "r",
            "beta_bb_mag",
            "n_add_fpja_formula",
            "n_add_fpja_pipeline",
            "n_add_total",
            "eta",
            "eta_lower",
            "eta_upper",
            "ok",
        ],
        rows,
        summary,
    })
}

fn stability_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let pumps = cfg.pump_set()?;
    let gains = cfg.gain_grid_db();
    let phis = cfg.loop_phase_grid();
    let region = stability_region(&modes, &pumps, &gains, &phis)?;
    let mut rows = Vec::with_capacity(gains.len() * phis.len());
    for (i, &g) in region.gains_db.iter().enumerate() {
        for (j, &phi) in region.loop_phases.iter().enumerate() {
            match region.cells[i][j] {
                Some(cell) => rows.push(vec![
                    g,
                    phi,
                    if cell.stable { 1.0 } else { 0.0 },
                    cell.margin / TWO_PI / 1e6,
                ]),
                None => rows.push(vec![g, phi, -1.0, f64::NAN]),
            }
        }
    }
    let mut summary = Vec::new();
    summary.push((
        "min_unstable_gain_db".to_string(),
        region.min_unstable_gain_db.unwrap_or(f64::NAN),
    ));
    let mab = pumps.beta_ab.norm();
    summary.push(("s".to_string(), 4.0 * mab * mab / (1.0 + 4.0 * mab * mab)));
    summary.push((
        "r_at_max_grid_gain".to_string(),
        direct_gain_to_r(
            10f64.powf(gains.last().copied().unwrap_or(0.0) / 20.0),
            4.0 * mab * mab / (1.0 + 4.0 * mab * mab),
            (modes.a.eta() * modes.c.eta()).sqrt(),
        ),
    ));
    Ok(Table {
        columns: vec!["gain_db", "loop_phase_rad", "stable", "margin_mhz"],
        rows,
        summary,
    })
}

fn tune_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let targets = cfg.tuning_targets()?;
    let result = program_device(&modes, &targets)?;
    let rows = result
        .stages
        .iter()
        .map(|st| {
            vec![
                st.stage as f64,
                st.forward_db,
                st.reverse_db,
                st.reflection_a_db,
                st.reflection_c_db,
                st.isolation_db,
            ]
        })
        .collect();
    let summary = vec![
        ("achieved_gx_db".to_string(), result.gains.gx_db()),
        ("achieved_gy_db".to_string(), result.gains.gy_db()),
        ("s".to_string(), result.gains.s),
        ("r".to_string(), result.gains.r),
        ("beta_ab_mag".to_string(), result.pumps.beta_ab.norm()),
        ("beta_bc_mag".to_string(), result.pumps.beta_bc.norm()),
        ("beta_ac_mag".to_string(), result.pumps.beta_ac.norm()),
        ("beta_bb_mag".to_string(), result.pumps.beta_bb.norm()),
        ("phi_loop_rad".to_string(), result.pumps.phi_loop()),
        ("phi_bb_rad".to_string(), result.pumps.phi_bb()),
        (
            "stability_margin_mhz".to_string(),
            result.margin / TWO_PI / 1e6,
        ),
    ];
    Ok(Table {
        columns: vec![
            "stage",
            "forward_db",
            "reverse_db",
            "reflection_a_db",
            "reflection_c_db",
            "isolation_db",
        ],
        rows,
        summary,
    })
}

fn bounds_table(cfg: &DeviceConfig) -> Result<Table> {
    let modes = cfg.mode_trio()?;
    let b = performance_bounds(&modes);
    let rows = vec![vec![
        modes.a.kappa / TWO_PI / 1e6,
        modes.b.kappa / TWO_PI / 1e6,
        modes.c.kappa / TWO_PI / 1e6,
        b.min_sqrt_gy,
        b.min_n_add,
        b.max_eta,
    ]];
    Ok(Table {
        columns: vec![
            "kappa_a_mhz",
            "kappa_b_mhz",
            "kappa_c_mhz",
            "min_sqrt_gy",
            "min_n_add_photons",
            "max_eta",
        ],
        rows,
        summary: Vec::new(),
    })
}

/// Run one analysis and write its data file and manifest.
pub fn run_command(cmd: Command, cfg: &DeviceConfig, out: &Path) -> Result<RunOutput> {
    let start = Instant::now();
    let table = match cmd {
        Command::Sweep => sweep_table(cfg)?,
        Command::Quadrature => quadrature_table(cfg)?,
        Command::Noise => noise_table(cfg)?,
        Command::Stability => stability_table(cfg)?,
        Command::Tune => tune_table(cfg)?,
        Command::Bounds => bounds_table(cfg)?,
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    write_outputs(cmd, cfg, out, &table, elapsed_ms)
}
