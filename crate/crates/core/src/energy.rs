//! Crossbar MVM energy from per-pulse equivalent conductances.
//!
//! For every pulse `p` on a tile with `X_M` columns:
//!
//! ```text
//! E_p = T·(α·V_RB²·G_X,p + X_M·P_WL·Σ_j x_p,j)
//! ```
//!
//! The first term is the bit-line part, the second the word-line part. The
//! MVM energy is the plain sum over pulses and tiles.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cellmodel::{CellModel, FJ};
use crate::{Error, Result};

/// Solver output needed to price one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSample {
    /// Equivalent conductance of the pulse, S.
    pub g_x: f64,
    /// Number of activated rows.
    pub active_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseEnergy {
    pub tile: usize,
    pub pulse: usize,
    pub g_x_us: f64,
    pub active_rows: usize,
    pub e_bl_fj: f64,
    pub e_wl_fj: f64,
}

impl PulseEnergy {
    pub fn energy_fj(&self) -> f64 {
        self.e_bl_fj + self.e_wl_fj
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub e_total_fj: f64,
    pub e_bl_fj: f64,
    pub e_wl_fj: f64,
    pub per_pulse: Vec<PulseEnergy>,
    pub mac_count: u64,
    pub e_per_mac_fj: f64,
}

/// Bit-line and word-line energy (fJ) of one pulse.
pub fn pulse_energy(sample: &PulseSample, model: &CellModel, x_m: usize) -> (f64, f64) {
    let t = model.t_pulse_s();
    let v = model.v_rb();
    let e_bl = t * model.alpha * v * v * sample.g_x;
    let e_wl = t * x_m as f64 * model.p_wl_w() * sample.active_rows as f64;
    (e_bl / FJ, e_wl / FJ)
}

/// Energy of a list of pulses on one `x_m`-column tile.
pub fn mvm_energy(pulses: &[PulseSample], model: &CellModel, x_m: usize) -> Result<EnergyReport> {
    let mut report = EnergyReport::default();
    for (p, s) in pulses.iter().enumerate() {
        if !(s.g_x >= 0.0) || !s.g_x.is_finite() {
            return Err(Error::domain(format!("pulse {p}: G_X must be >= 0, got {}", s.g_x)));
        }
        let (e_bl, e_wl) = pulse_energy(s, model, x_m);
        report.push(PulseEnergy {
            tile: 0,
            pulse: p,
            g_x_us: s.g_x * 1e6,
            active_rows: s.active_rows,
            e_bl_fj: e_bl,
            e_wl_fj: e_wl,
        });
    }
    Ok(report)
}

impl EnergyReport {
    pub fn push(&mut self, pulse: PulseEnergy) {
        self.e_bl_fj += pulse.e_bl_fj;
        self.e_wl_fj += pulse.e_wl_fj;
        self.e_total_fj = self.e_bl_fj + self.e_wl_fj;
        self.per_pulse.push(pulse);
    }

    /// Appends `other`'s pulses; MAC counts add up.
    pub fn merge(&mut self, other: EnergyReport) {
        for p in other.per_pulse {
            self.push(p);
        }
        self.mac_count += other.mac_count;
        self.refresh_per_mac();
    }

    fn refresh_per_mac(&mut self) {
        self.e_per_mac_fj = if self.mac_count > 0 {
            self.e_total_fj / self.mac_count as f64
        } else {
            0.0
        };
    }

    pub fn pulses(&self) -> usize {
        self.per_pulse.len()
    }

    /// Sets the MAC count from logical dimensions and returns energy per MAC.
    pub fn set_logical_macs(&mut self, rows: usize, cols: usize) -> Result<f64> {
        self.mac_count = (rows as u64)
            .checked_mul(cols as u64)
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::domain("MAC count needs non-zero logical dimensions"))?;
        self.refresh_per_mac();
        Ok(self.e_per_mac_fj)
    }

    /// Per-pulse rows `tile,pulse,active_rows,g_x_us,e_bl_fj,e_wl_fj,e_fj`.
    pub fn write_pulses_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "tile,pulse,active_rows,g_x_us,e_bl_fj,e_wl_fj,e_fj")?;
        for p in &self.per_pulse {
            writeln!(
                w,
                "{},{},{},{:.9e},{:.9e},{:.9e},{:.9e}",
                p.tile,
                p.pulse,
                p.active_rows,
                p.g_x_us,
                p.e_bl_fj,
                p.e_wl_fj,
                p.energy_fj()
            )?;
        }
        Ok(())
    }
}

/// Average energy per logical MAC: a `rows × cols` weight matrix applied to
/// one input vector counts `rows·cols` MACs regardless of how many physical
/// cells and pulses it took.
pub fn per_mac_energy(report: &EnergyReport, logical_rows: usize, logical_cols: usize) -> Result<f64> {
    if logical_rows == 0 || logical_cols == 0 {
        return Err(Error::domain("MAC count needs non-zero logical dimensions"));
    }
    Ok(report.e_total_fj / (logical_rows as f64 * logical_cols as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellmodel::ReferenceConfig;

    fn model() -> CellModel {
        ReferenceConfig::get('C').unwrap().cell_model().unwrap()
    }

    #[test]
    fn no_active_rows_no_energy() {
        let pulses = vec![
            PulseSample {
                g_x: 0.0,
                active_rows: 0
            };
            8
        ];
        let r = mvm_energy(&pulses, &model(), 64).unwrap();
        assert_eq!(r.e_total_fj, 0.0);
        assert_eq!(r.pulses(), 8);
    }

    #[test]
    fn single_cell_reduces_to_cell_energy() {
        let m = model();
        let g = 123.4e-6;
        let r = mvm_energy(&[PulseSample { g_x: g, active_rows: 1 }], &m, 1).unwrap();
        let cell = m.cell_pulse_energy(g, m.v_rb(), true).unwrap() / FJ;
        assert!((r.e_total_fj - cell).abs() < 1e-12 * cell);
        assert_eq!(r.e_total_fj, r.e_bl_fj + r.e_wl_fj);
    }

    #[test]
    fn per_mac_is_a_ratio() {
        let m = model();
        let r = mvm_energy(
            &[PulseSample {
                g_x: 50e-6,
                active_rows: 3,
            }],
            &m,
            8,
        )
        .unwrap();
        assert_eq!(per_mac_energy(&r, 1, 1).unwrap(), r.e_total_fj);
        assert!(per_mac_energy(&r, 0, 4).is_err());

        // Twice the columns at the same per-column energy.
        let one = mvm_energy(
            &[PulseSample {
                g_x: 50e-6,
                active_rows: 3,
            }],
            &m,
            8,
        )
        .unwrap();
        let two = mvm_energy(
            &[PulseSample {
                g_x: 100e-6,
                active_rows: 3,
            }],
            &m,
            16,
        )
        .unwrap();
        let a = per_mac_energy(&one, 3, 8).unwrap();
        let b = per_mac_energy(&two, 3, 16).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn additivity_and_merge() {
        let m = model();
        let pulses: Vec<_> = (0..10)
            .map(|k| PulseSample {
                g_x: k as f64 * 17e-6,
                active_rows: k,
            })
            .collect();
        let whole = mvm_energy(&pulses, &m, 32).unwrap();
        let mut parts = EnergyReport::default();
        for p in &pulses {
            parts.merge(mvm_energy(std::slice::from_ref(p), &m, 32).unwrap());
        }
        assert!((whole.e_total_fj - parts.e_total_fj).abs() < 1e-12 * whole.e_total_fj);
        let sum: f64 = whole.per_pulse.iter().map(|p| p.energy_fj()).sum();
        assert!((sum - whole.e_total_fj).abs() < 1e-12 * whole.e_total_fj);
    }

    #[test]
    fn negative_conductance_rejected() {
        assert!(mvm_energy(
            &[PulseSample {
                g_x: -1.0,
                active_rows: 1
            }],
            &model(),
            4
        )
        .is_err());
    }

    #[test]
    fn csv_rows() {
        let r = mvm_energy(
            &[PulseSample {
                g_x: 1e-4,
                active_rows: 2,
            }],
            &model(),
            4,
        )
        .unwrap();
        let mut buf = Vec::new();
        r.write_pulses_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
