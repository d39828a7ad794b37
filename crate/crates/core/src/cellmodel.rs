//! Calibrated 1T1R cell parameters and the single-cell pulse energy model.
//!
//! A read pulse on a cell costs `T·x·(α·V_C²·G_C + P_WL)`: a word-line term
//! that does not depend on the resistive state, and a bit-line term that is
//! the steady-state dissipation scaled by a calibration factor `α` which
//! absorbs all transient effects (gate switching, line capacitances).
//!
//! Field values are kept in the human-scale units of `cell-model.json`
//! (µS, ns, fJ, µW). Formulas read them through the SI accessors
//! (`g_min_s`, `p_wl_w`, `t_pulse_s`, ...) and compute in S, V, s, J and W.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Error, Result};

pub const US: f64 = 1e-6;
pub const NS: f64 = 1e-9;
pub const FJ: f64 = 1e-15;
pub const UW: f64 = 1e-6;

/// Read pulse applied to the BL and WL of an activated row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub t_pulse_ns: f64,
    pub t_active_ns: f64,
    pub t_rise_fall_ns: f64,
    pub v_rb: f64,
    pub v_rw: f64,
}

impl PulseSpec {
    /// Pulse settings shared by all reference cell configurations:
    /// 0.2 V on BL, 1.2 V on WL, 10 ns period, 4 ns active, 1 ns edges.
    pub const fn reference() -> Self {
        Self {
            t_pulse_ns: 10.0,
            t_active_ns: 4.0,
            t_rise_fall_ns: 1.0,
            v_rb: 0.2,
            v_rw: 1.2,
        }
    }

    pub fn t_pulse_s(&self) -> f64 {
        self.t_pulse_ns * NS
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("t_pulse_ns", self.t_pulse_ns),
            ("t_active_ns", self.t_active_ns),
            ("t_rf_ns", self.t_rise_fall_ns),
            ("v_rb_volt", self.v_rb),
            ("v_rw_volt", self.v_rw),
        ];
        for (field, v) in all {
            if !v.is_finite() {
                return Err(Error::schema(field, "must be finite"));
            }
        }
        if self.t_active_ns < 0.0 {
            return Err(Error::schema("t_active_ns", "must be >= 0"));
        }
        if self.t_rise_fall_ns < 0.0 {
            return Err(Error::schema("t_rf_ns", "must be >= 0"));
        }
        let occupied = self.t_active_ns + 2.0 * self.t_rise_fall_ns;
        if occupied <= 0.0 {
            return Err(Error::schema("t_active_ns", "t_active + 2*t_rf must be > 0"));
        }
        if self.t_pulse_ns < occupied {
            return Err(Error::schema(
                "t_pulse_ns",
                format!("t_pulse ({}) < t_active + 2*t_rf ({occupied})", self.t_pulse_ns),
            ));
        }
        if self.v_rb <= 0.0 {
            return Err(Error::schema("v_rb_volt", "must be > 0"));
        }
        if self.v_rw <= 0.0 {
            return Err(Error::schema("v_rw_volt", "must be > 0"));
        }
        Ok(())
    }
}

impl Default for PulseSpec {
    fn default() -> Self {
        Self::reference()
    }
}

/// Calibrated parameters of one 1T1R cell configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    pub name: String,
    pub pulse: PulseSpec,
    /// Lowest apparent cell conductance, µS.
    pub g_min_us: f64,
    /// Highest apparent cell conductance, µS.
    pub g_max_us: f64,
    pub alpha: f64,
    /// Average word-line power per pulse, µW.
    pub p_wl_uw: f64,
    /// Resistance of one wire segment between adjacent cells, Ω.
    pub r_wire_ohm: f64,
    // Line capacitances are informational; their effect is inside alpha and p_wl.
    pub c_bl_ff: f64,
    pub c_wl_ff: f64,
    pub c_sl_ff: f64,
}

impl CellModel {
    pub fn g_min_s(&self) -> f64 {
        self.g_min_us * US
    }

    pub fn g_max_s(&self) -> f64 {
        self.g_max_us * US
    }

    pub fn p_wl_w(&self) -> f64 {
        self.p_wl_uw * UW
    }

    pub fn t_pulse_s(&self) -> f64 {
        self.pulse.t_pulse_s()
    }

    pub fn v_rb(&self) -> f64 {
        self.pulse.v_rb
    }

    pub fn has_parasitics(&self) -> bool {
        self.r_wire_ohm > 0.0
    }

    /// Copy of the model with a different wire segment resistance.
    pub fn with_r_wire(&self, r_wire_ohm: f64) -> Self {
        Self {
            r_wire_ohm,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        let fields = [
            ("g_min_us", self.g_min_us),
            ("g_max_us", self.g_max_us),
            ("alpha", self.alpha),
            ("p_wl_uw", self.p_wl_uw),
            ("r_wire_ohm", self.r_wire_ohm),
            ("c_bl_ff", self.c_bl_ff),
            ("c_wl_ff", self.c_wl_ff),
            ("c_sl_ff", self.c_sl_ff),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(Error::schema(field, "must be finite"));
            }
        }
        if self.g_min_us <= 0.0 {
            return Err(Error::schema("g_min_us", "must be > 0"));
        }
        if self.g_max_us <= self.g_min_us {
            return Err(Error::schema("g_max_us", "must be > g_min_us"));
        }
        for (field, v) in [
            ("alpha", self.alpha),
            ("p_wl_uw", self.p_wl_uw),
            ("r_wire_ohm", self.r_wire_ohm),
            ("c_bl_ff", self.c_bl_ff),
            ("c_wl_ff", self.c_wl_ff),
            ("c_sl_ff", self.c_sl_ff),
        ] {
            if v < 0.0 {
                return Err(Error::schema(field, "must be >= 0"));
            }
        }
        Ok(())
    }

    /// Energy of one pulse on one cell, in joules.
    ///
    /// `g_c` is the apparent cell conductance in siemens and `v_c` the
    /// steady-state voltage across the cell. Returns exactly zero when the
    /// row is not activated.
    pub fn cell_pulse_energy(&self, g_c: f64, v_c: f64, x: bool) -> Result<f64> {
        if !(g_c >= 0.0) || !g_c.is_finite() {
            return Err(Error::domain(format!("cell conductance must be >= 0, got {g_c}")));
        }
        if !(v_c >= 0.0) || !v_c.is_finite() {
            return Err(Error::domain(format!("cell voltage must be >= 0, got {v_c}")));
        }
        if v_c > self.v_rb() {
            return Err(Error::domain(format!(
                "cell voltage {v_c} V exceeds the read voltage {} V",
                self.v_rb()
            )));
        }
        if !x {
            return Ok(0.0);
        }
        Ok(self.t_pulse_s() * (self.alpha * v_c * v_c * g_c + self.p_wl_w()))
    }

    /// Builds a model from a calibration fit.
    pub fn from_fit(
        name: impl Into<String>,
        pulse: PulseSpec,
        g_range_us: (f64, f64),
        fit: &CalibrationFit,
    ) -> Result<Self> {
        let model = Self {
            name: name.into(),
            pulse,
            g_min_us: g_range_us.0,
            g_max_us: g_range_us.1,
            alpha: fit.alpha,
            p_wl_uw: fit.p_wl_w / UW,
            r_wire_ohm: 0.0,
            c_bl_ff: 0.0,
            c_wl_ff: 0.0,
            c_sl_ff: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn store(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json_string()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let file = CellModelFile::from(self);
        serde_json::to_string_pretty(&file).map_err(|e| Error::Format(e.to_string()))
    }

    /// Parses a `cell-model.json` document. Missing or mistyped fields and
    /// violated invariants are reported by field name.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Format("cell model must be a JSON object".into()))?;

        let name = match obj.get("name") {
            Some(Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::schema("name", "expected a string")),
            None => return Err(Error::schema("name", "missing field")),
        };
        let model = Self {
            name,
            pulse: PulseSpec {
                t_pulse_ns: number(obj, "t_pulse_ns")?,
                t_active_ns: number(obj, "t_active_ns")?,
                t_rise_fall_ns: number(obj, "t_rf_ns")?,
                v_rb: number(obj, "v_rb_volt")?,
                v_rw: number(obj, "v_rw_volt")?,
            },
            g_min_us: number(obj, "g_min_us")?,
            g_max_us: number(obj, "g_max_us")?,
            alpha: number(obj, "alpha")?,
            p_wl_uw: number(obj, "p_wl_uw")?,
            r_wire_ohm: number(obj, "r_wire_ohm")?,
            c_bl_ff: number(obj, "c_bl_ff")?,
            c_wl_ff: number(obj, "c_wl_ff")?,
            c_sl_ff: number(obj, "c_sl_ff")?,
        };
        model.validate()?;
        Ok(model)
    }
}

fn number(obj: &Map<String, Value>, field: &str) -> Result<f64> {
    match obj.get(field) {
        Some(v) => v.as_f64().ok_or_else(|| Error::schema(field, "expected a number")),
        None => Err(Error::schema(field, "missing field")),
    }
}

/// On-disk layout of `cell-model.json`.
#[derive(Serialize, Deserialize)]
struct CellModelFile {
    name: String,
    v_rb_volt: f64,
    v_rw_volt: f64,
    t_pulse_ns: f64,
    t_active_ns: f64,
    t_rf_ns: f64,
    g_min_us: f64,
    g_max_us: f64,
    alpha: f64,
    p_wl_uw: f64,
    r_wire_ohm: f64,
    c_bl_ff: f64,
    c_wl_ff: f64,
    c_sl_ff: f64,
}

impl From<&CellModel> for CellModelFile {
    fn from(m: &CellModel) -> Self {
        Self {
            name: m.name.clone(),
            v_rb_volt: m.pulse.v_rb,
            v_rw_volt: m.pulse.v_rw,
            t_pulse_ns: m.pulse.t_pulse_ns,
            t_active_ns: m.pulse.t_active_ns,
            t_rf_ns: m.pulse.t_rise_fall_ns,
            g_min_us: m.g_min_us,
            g_max_us: m.g_max_us,
            alpha: m.alpha,
            p_wl_uw: m.p_wl_uw,
            r_wire_ohm: m.r_wire_ohm,
            c_bl_ff: m.c_bl_ff,
            c_wl_ff: m.c_wl_ff,
            c_sl_ff: m.c_sl_ff,
        }
    }
}

/// Result of fitting the affine energy-vs-conductance response of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub alpha: f64,
    /// Word-line power, W.
    pub p_wl_w: f64,
    /// RMS of the fit residuals, J.
    pub residual_rms_j: f64,
    /// Fitted slope dE/dG, J/S.
    pub slope: f64,
    /// Fitted intercept E(G = 0), J.
    pub intercept: f64,
}

/// Least-squares line through a calibration sweep of `(G_C [S], E [J])`
/// pairs taken at `V_C = V_RB`.
///
/// `alpha = slope / (T·V_RB²)` and `p_wl = intercept / T`. Negative
/// parameters are rejected instead of being clamped; only round-off sized
/// negatives (below 1e-9 of the data scale) are read as zero.
pub fn fit_cell_params(sweep: &[(f64, f64)], pulse: &PulseSpec) -> Result<CalibrationFit> {
    pulse.validate()?;
    for &(g, e) in sweep {
        if !g.is_finite() || !e.is_finite() {
            return Err(Error::domain("sweep contains non-finite values"));
        }
        if g < 0.0 {
            return Err(Error::domain(format!("negative conductance {g} in sweep")));
        }
        if e < 0.0 {
            return Err(Error::domain(format!("negative energy {e} in sweep")));
        }
    }
    let n = sweep.len() as f64;
    let first = sweep.first().map(|p| p.0);
    if first.is_none() || sweep.iter().all(|p| Some(p.0) == first) {
        return Err(Error::Fit(
            "calibration sweep needs at least two distinct conductance values".into(),
        ));
    }

    let g_mean = sweep.iter().map(|p| p.0).sum::<f64>() / n;
    let e_mean = sweep.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(g, e) in sweep {
        let dg = g - g_mean;
        sxx += dg * dg;
        sxy += dg * (e - e_mean);
    }
    let slope = sxy / sxx;
    let intercept = e_mean - slope * g_mean;

    let rss: f64 = sweep
        .iter()
        .map(|&(g, e)| {
            let r = e - (slope * g + intercept);
            r * r
        })
        .sum();
    let residual_rms_j = (rss / n).sqrt();

    let t = pulse.t_pulse_s();
    let e_scale = sweep.iter().map(|p| p.1).fold(0.0, f64::max);
    let g_scale = sweep.iter().map(|p| p.0).fold(0.0, f64::max);
    let roundoff = |v: f64, scale: f64| if v < 0.0 && -v <= 1e-9 * scale { 0.0 } else { v };
    let slope = roundoff(slope, e_scale / g_scale.max(f64::MIN_POSITIVE));
    let intercept = roundoff(intercept, e_scale);

    let alpha = slope / (t * pulse.v_rb * pulse.v_rb);
    let p_wl_w = intercept / t;
    if alpha < 0.0 {
        return Err(Error::CalibrationQuality(format!(
            "fitted alpha is negative ({alpha:.6e}); energy decreases with conductance"
        )));
    }
    if p_wl_w < 0.0 {
        return Err(Error::CalibrationQuality(format!(
            "fitted word-line power is negative ({p_wl_w:.6e} W)"
        )));
    }
    Ok(CalibrationFit {
        alpha,
        p_wl_w,
        residual_rms_j,
        slope,
        intercept,
    })
}

/// Reads a calibration sweep CSV with header `g_us,e_fj`.
/// Values are returned in the file units (µS, fJ).
pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sweep_csv(&text)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || &headers[0] != "g_us" || &headers[1] != "e_fj" {
        return Err(Error::Parse {
            line: 1,
            reason: format!(
                "expected header `g_us,e_fj`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    reason: format!("`{s}` is not a number"),
                })
        };
        points.push((parse(&record[0])?, parse(&record[1])?));
    }
    Ok(points)
}

/// Energy endpoints of a reference cell configuration: apparent conductance
/// range (µS) and per-pulse energy at both ends (fJ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub id: char,
    pub g_range_us: (f64, f64),
    pub e_range_fj: (f64, f64),
    pub c_wire_ff: f64,
    pub r_wire_ohm: f64,
}

/// The four 1T1R reference configurations (A: 32×32 nm transistor, B: 100×32 nm,
/// C: B plus 2 fF line capacitance, D: C plus 2.215 Ω wire segments).
///
/// D's conductance and energy endpoints were taken inside a loaded 64×64 array,
/// so they already contain IR drop. Its cell-level calibration reuses C, and
/// the wire resistance is applied by the circuit solver instead.
pub const REFERENCE_CONFIGS: [ReferenceConfig; 4] = [
    ReferenceConfig {
        id: 'A',
        g_range_us: (8.89, 107.77),
        e_range_fj: (1.69, 19.64),
        c_wire_ff: 0.0,
        r_wire_ohm: 0.0,
    },
    ReferenceConfig {
        id: 'B',
        g_range_us: (9.37, 265.41),
        e_range_fj: (1.94, 48.75),
        c_wire_ff: 0.0,
        r_wire_ohm: 0.0,
    },
    ReferenceConfig {
        id: 'C',
        g_range_us: (9.37, 265.41),
        e_range_fj: (5.32, 52.13),
        c_wire_ff: 2.0,
        r_wire_ohm: 0.0,
    },
    ReferenceConfig {
        id: 'D',
        g_range_us: (5.60, 178.83),
        e_range_fj: (7.54, 20.17),
        c_wire_ff: 2.0,
        r_wire_ohm: 2.215,
    },
];

impl ReferenceConfig {
    pub fn get(id: char) -> Option<Self> {
        let id = id.to_ascii_uppercase();
        REFERENCE_CONFIGS.iter().copied().find(|c| c.id == id)
    }

    /// Two-point calibration sweep at the conductance endpoints, in SI units.
    pub fn endpoint_sweep(&self) -> Vec<(f64, f64)> {
        vec![
            (self.g_range_us.0 * US, self.e_range_fj.0 * FJ),
            (self.g_range_us.1 * US, self.e_range_fj.1 * FJ),
        ]
    }

    /// Calibrated cell model for this configuration with the reference pulse.
    pub fn cell_model(&self) -> Result<CellModel> {
        let cell_source = if self.id == 'D' {
            Self::get('C').expect("config C is defined")
        } else {
            *self
        };
        let pulse = PulseSpec::reference();
        let fit = fit_cell_params(&cell_source.endpoint_sweep(), &pulse)?;
        let mut model = CellModel::from_fit(format!("config-{}", self.id), pulse, cell_source.g_range_us, &fit)?;
        model.r_wire_ohm = self.r_wire_ohm;
        model.c_bl_ff = self.c_wire_ff;
        model.c_wl_ff = self.c_wire_ff;
        model.c_sl_ff = self.c_wire_ff;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    fn config_a() -> CellModel {
        ReferenceConfig::get('A').unwrap().cell_model().unwrap()
    }

    #[test]
    fn inactive_pulse_costs_nothing() {
        let m = config_a();
        assert_eq!(m.cell_pulse_energy(50e-6, 0.2, false).unwrap(), 0.0);
        assert_eq!(m.cell_pulse_energy(0.0, 0.0, false).unwrap(), 0.0);
    }

    #[test]
    fn config_a_reproduces_endpoints() {
        let m = config_a();
        let lo = m.cell_pulse_energy(8.89e-6, 0.2, true).unwrap() / FJ;
        let hi = m.cell_pulse_energy(107.77e-6, 0.2, true).unwrap() / FJ;
        assert!(rel(lo, 1.69) < 1e-12, "{lo}");
        assert!(rel(hi, 19.64) < 1e-12, "{hi}");
    }

    #[test]
    fn two_point_fit_matches_hand_computation() {
        // slope = (19.64 - 1.69) fJ / (107.77 - 8.89) µS = 17.95 / 98.88 fJ/µS
        // alpha = slope / (10 ns * 0.04 V^2); p_wl = (1.69 - slope*8.89) fJ / 10 ns
        let slope_fj_per_us = 17.95 / 98.88;
        let alpha = slope_fj_per_us * 1e-9 / (10e-9 * 0.04);
        let p_wl = (1.69 - slope_fj_per_us * 8.89) * 1e-15 / 10e-9;
        let fit = fit_cell_params(
            &ReferenceConfig::get('A').unwrap().endpoint_sweep(),
            &PulseSpec::reference(),
        )
        .unwrap();
        assert!(rel(fit.alpha, alpha) < 1e-12);
        assert!(rel(fit.p_wl_w, p_wl) < 1e-9);
        assert!((fit.alpha - 0.454).abs() < 5e-4);
        assert!((fit.p_wl_w - 7.6e-9).abs() < 0.05e-9);
        assert!(fit.residual_rms_j < 1e-12 * FJ);
    }

    #[test]
    fn noiseless_line_is_recovered() {
        let pulse = PulseSpec::reference();
        let (alpha, p_wl) = (0.5, 10e-6);
        let t = pulse.t_pulse_s();
        let sweep: Vec<_> = [10.0, 50.0, 90.0, 130.0, 170.0]
            .iter()
            .map(|g_us| {
                let g = g_us * US;
                (g, t * (alpha * 0.04 * g + p_wl))
            })
            .collect();
        let fit = fit_cell_params(&sweep, &pulse).unwrap();
        assert!(rel(fit.alpha, alpha) < 1e-9);
        assert!(rel(fit.p_wl_w, p_wl) < 1e-9);
    }

    #[test]
    fn degenerate_sweeps_are_rejected() {
        let pulse = PulseSpec::reference();
        assert!(matches!(fit_cell_params(&[], &pulse), Err(Error::Fit(_))));
        assert!(matches!(fit_cell_params(&[(1e-5, 1e-15)], &pulse), Err(Error::Fit(_))));
        assert!(matches!(
            fit_cell_params(&[(1e-5, 1e-15), (1e-5, 2e-15)], &pulse),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_cell_params(&[(1e-5, -1e-15), (2e-5, 2e-15)], &pulse),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn negative_parameters_are_reported() {
        let pulse = PulseSpec::reference();
        // Energy falls with conductance.
        let falling = [(1e-5, 5e-15), (1e-4, 1e-15)];
        assert!(matches!(
            fit_cell_params(&falling, &pulse),
            Err(Error::CalibrationQuality(_))
        ));
        // Line through the origin would need a negative intercept.
        let steep = [(1e-5, 0.1e-15), (1e-4, 10e-15)];
        assert!(matches!(
            fit_cell_params(&steep, &pulse),
            Err(Error::CalibrationQuality(_))
        ));
    }

    #[test]
    fn energy_is_affine_in_conductance() {
        let m = config_a();
        let e = |g: f64| m.cell_pulse_energy(g, 0.2, true).unwrap();
        let (g1, g2) = (23.4e-6, 61.7e-6);
        assert!(rel(e(g1) + e(g2) - e(0.0), e(g1 + g2)) < 1e-12);
    }

    #[test]
    fn bad_voltages_are_domain_errors() {
        let m = config_a();
        assert!(matches!(m.cell_pulse_energy(-1e-6, 0.1, true), Err(Error::Domain(_))));
        assert!(matches!(m.cell_pulse_energy(1e-6, -0.1, true), Err(Error::Domain(_))));
        assert!(matches!(m.cell_pulse_energy(1e-6, 0.3, true), Err(Error::Domain(_))));
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let m = ReferenceConfig::get('D').unwrap().cell_model().unwrap();
        let text = m.to_json_string().unwrap();
        let back = CellModel::from_json_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json_string().unwrap(), text);

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("alpha");
        match CellModel::from_json_str(&v.to_string()) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "alpha"),
            other => panic!("unexpected {other:?}"),
        }

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["g_max_us"] = Value::String("lots".into());
        match CellModel::from_json_str(&v.to_string()) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "g_max_us"),
            other => panic!("unexpected {other:?}"),
        }

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["g_min_us"] = Value::from(500.0);
        match CellModel::from_json_str(&v.to_string()) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "g_max_us"),
            other => panic!("unexpected {other:?}"),
        }

        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["t_pulse_ns"] = Value::from(5.0);
        match CellModel::from_json_str(&v.to_string()) {
            Err(Error::Schema { field, .. }) => assert_eq!(field, "t_pulse_ns"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_csv_reports_line_numbers() {
        let ok = "g_us,e_fj\n8.89,1.69\n107.77,19.64\n";
        assert_eq!(parse_sweep_csv(ok).unwrap(), vec![(8.89, 1.69), (107.77, 19.64)]);

        let bad = "g_us,e_fj\n8.89,1.69\n107.77,abc\n";
        match parse_sweep_csv(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let short = "g_us,e_fj\n8.89,1.69\n20\n";
        match parse_sweep_csv(short) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_sweep_csv("g,e\n1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn pulse_invariants() {
        let mut p = PulseSpec::reference();
        assert!(p.validate().is_ok());
        p.t_pulse_ns = 5.0;
        assert!(p.validate().is_err());
        let mut p = PulseSpec::reference();
        p.v_rb = 0.0;
        assert!(p.validate().is_err());
    }
}
