//! Steady-state solve of one crossbar pulse with wire parasitic resistance.
//!
//! Topology (rows `j`, columns `i`):
//!
//! * row line `j` is driven from the left edge at `x_j·V_RB` through one wire
//!   segment, and one segment joins each pair of horizontally adjacent cells;
//! * column line `i` runs top to bottom with one segment between vertically
//!   adjacent cells and one more into a virtual ground below the last row;
//! * cell `(j, i)` connects row node `(j, i)` to column node `(j, i)` with its
//!   apparent conductance, or not at all when the row is inactive (the access
//!   transistor is off).
//!
//! With `r_wire = 0` all row nodes sit at their driver voltage and all column
//! nodes at ground, which is solved analytically. Otherwise two solvers are
//! available: [`solve_dense_oracle`] factors the full nodal system directly,
//! [`solve_fast`] relaxes row and column lines alternately, each as a
//! tridiagonal system with the other side frozen.

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cellmodel::{CellModel, US};
use crate::mapping::ConductanceTile;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop when the largest node voltage update of a sweep is below
    /// `tol·V_RB`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Resistive network of one tile for one pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossbarCircuit {
    /// Cell conductances in S; rows of inactive cells are zero.
    pub g: Array2<f64>,
    /// Resistance of one wire segment, Ω.
    pub r_wire: f64,
    /// Read voltage V_RB applied to active rows.
    pub drive: f64,
    pub active_rows: Vec<bool>,
}

impl CrossbarCircuit {
    pub fn new(g: Array2<f64>, r_wire: f64, drive: f64, active_rows: Vec<bool>) -> Result<Self> {
        if g.nrows() != active_rows.len() {
            return Err(Error::dim(format!(
                "{} activation bits for {} rows",
                active_rows.len(),
                g.nrows()
            )));
        }
        if g.nrows() == 0 || g.ncols() == 0 {
            return Err(Error::dim("empty crossbar"));
        }
        if !(r_wire >= 0.0) || !r_wire.is_finite() {
            return Err(Error::domain(format!("wire resistance must be >= 0, got {r_wire}")));
        }
        if !(drive > 0.0) || !drive.is_finite() {
            return Err(Error::domain(format!("drive voltage must be > 0, got {drive}")));
        }
        if g.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("cell conductances must be finite and >= 0"));
        }
        let mut g = g;
        for (mut row, &on) in g.rows_mut().into_iter().zip(&active_rows) {
            if !on {
                row.fill(0.0);
            }
        }
        Ok(Self {
            g,
            r_wire,
            drive,
            active_rows,
        })
    }

    /// Circuit of `tile` programmed with `model`'s conductances for one
    /// activation pattern.
    pub fn build(tile: &ConductanceTile, model: &CellModel, active_rows: &[bool]) -> Result<Self> {
        Self::new(
            tile.g_us.mapv(|g| g * US),
            model.r_wire_ohm,
            model.v_rb(),
            active_rows.to_vec(),
        )
    }

    pub fn rows(&self) -> usize {
        self.g.nrows()
    }

    pub fn cols(&self) -> usize {
        self.g.ncols()
    }

    pub fn is_parasitic_free(&self) -> bool {
        self.r_wire == 0.0
    }

    /// Number of unknown node voltages of the nodal system.
    pub fn unknown_count(&self) -> usize {
        if self.is_parasitic_free() {
            0
        } else {
            2 * self.rows() * self.cols()
        }
    }

    fn driver(&self, j: usize) -> f64 {
        if self.active_rows[j] {
            self.drive
        } else {
            0.0
        }
    }

    /// `Σ g` over active cells: the equivalent conductance without IR drop.
    pub fn ideal_conductance(&self) -> f64 {
        self.g.sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub v_row: Array2<f64>,
    pub v_col: Array2<f64>,
    /// Per-cell steady-state dissipation, W.
    pub p_cell: Array2<f64>,
    /// Equivalent conductance G_X, S.
    pub g_x: f64,
    /// Largest node current imbalance, A.
    pub kcl_residual: f64,
    pub iterations: usize,
    /// Power delivered by the row drivers, W.
    pub drive_power: f64,
    /// Power dissipated in wire segments, W.
    pub wire_power: f64,
}

impl SolveResult {
    pub fn cell_power(&self) -> f64 {
        self.p_cell.sum()
    }

    /// Current flowing into each column's sense node, A.
    pub fn column_currents(&self, circuit: &CrossbarCircuit) -> Vec<f64> {
        let mut out = vec![0.0; circuit.cols()];
        for ((j, i), &g) in circuit.g.indexed_iter() {
            out[i] += g * (self.v_row[[j, i]] - self.v_col[[j, i]]);
        }
        out
    }

    /// Writes node voltages as CSV: `row,col,v_row,v_col`.
    pub fn write_voltages_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,v_row,v_col")?;
        for ((j, i), v) in self.v_row.indexed_iter() {
            writeln!(w, "{j},{i},{v:.12e},{:.12e}", self.v_col[[j, i]])?;
        }
        Ok(())
    }
}

/// `G_X = Σ p_cell / V_RB²`.
pub fn equivalent_conductance(res: &SolveResult, drive: f64) -> f64 {
    res.cell_power() / (drive * drive)
}

fn finish(c: &CrossbarCircuit, v_row: Array2<f64>, v_col: Array2<f64>, iterations: usize) -> SolveResult {
    let (n, m) = (c.rows(), c.cols());
    let mut p_cell = Array2::zeros((n, m));
    for ((j, i), &g) in c.g.indexed_iter() {
        let dv = v_row[[j, i]] - v_col[[j, i]];
        p_cell[[j, i]] = g * dv * dv;
    }

    let (drive_power, wire_power, kcl_residual) = if c.is_parasitic_free() {
        (p_cell.sum(), 0.0, 0.0)
    } else {
        let gw = 1.0 / c.r_wire;
        let mut drive_power = 0.0;
        let mut wire_power = 0.0;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let vd = c.driver(j);
            let d0 = vd - v_row[[j, 0]];
            drive_power += vd * gw * d0;
            wire_power += gw * d0 * d0;
        }
        for i in 0..m {
            let v = v_col[[n - 1, i]];
            wire_power += gw * v * v;
        }
        for j in 0..n {
            for i in 0..m {
                let g = c.g[[j, i]];
                let vr = v_row[[j, i]];
                let vc = v_col[[j, i]];
                let cell = g * (vr - vc);

                let left = if i == 0 { c.driver(j) } else { v_row[[j, i - 1]] };
                let mut net_row = gw * (left - vr) - cell;
                if i + 1 < m {
                    let d = v_row[[j, i + 1]] - vr;
                    net_row += gw * d;
                    wire_power += gw * d * d;
                }

                let mut net_col = cell;
                if j > 0 {
                    net_col += gw * (v_col[[j - 1, i]] - vc);
                }
                if j + 1 < n {
                    let d = v_col[[j + 1, i]] - vc;
                    net_col += gw * d;
                    wire_power += gw * d * d;
                } else {
                    net_col -= gw * vc;
                }
                worst = worst.max(net_row.abs()).max(net_col.abs());
            }
        }
        (drive_power, wire_power, worst)
    };

    let g_x = p_cell.sum() / (c.drive * c.drive);
    SolveResult {
        v_row,
        v_col,
        p_cell,
        g_x,
        kcl_residual,
        iterations,
        drive_power,
        wire_power,
    }
}

/// Closed-form solution without wire resistance.
pub fn solve_ideal(c: &CrossbarCircuit) -> SolveResult {
    let (n, m) = (c.rows(), c.cols());
    let v_row = Array2::from_shape_fn((n, m), |(j, _)| c.driver(j));
    let v_col = Array2::zeros((n, m));
    finish(c, v_row, v_col, 0)
}

/// Direct solve of the full nodal system.
///
/// Unknowns are ordered `(j, i, row|col)`, which keeps the conductance
/// Laplacian banded with half-bandwidth `2·X_M`. The matrix is symmetric
/// positive definite once the driver and ground nodes are eliminated, so a
/// banded Cholesky factorisation is an exact LU without fill outside the band.
pub fn solve_dense_oracle(c: &CrossbarCircuit) -> Result<SolveResult> {
    if c.is_parasitic_free() {
        return Ok(solve_ideal(c));
    }
    let (n, m) = (c.rows(), c.cols());
    let size = 2 * n * m;
    let bw = 2 * m;
    let gw = 1.0 / c.r_wire;
    let row_node = |j: usize, i: usize| 2 * (j * m + i);
    let col_node = |j: usize, i: usize| 2 * (j * m + i) + 1;

    let mut a = BandMatrix::new(size, bw);
    let mut rhs = vec![0.0; size];
    let stamp = |a: &mut BandMatrix, p: usize, q: usize, g: f64| {
        a.add(p, p, g);
        a.add(q, q, g);
        a.add(p.max(q), p.min(q), -g);
    };
    for j in 0..n {
        for i in 0..m {
            let r = row_node(j, i);
            let k = col_node(j, i);
            if c.g[[j, i]] > 0.0 {
                stamp(&mut a, r, k, c.g[[j, i]]);
            }
            if i == 0 {
                a.add(r, r, gw);
                rhs[r] += gw * c.driver(j);
            } else {
                stamp(&mut a, row_node(j, i - 1), r, gw);
            }
            if j + 1 < n {
                stamp(&mut a, k, col_node(j + 1, i), gw);
            } else {
                a.add(k, k, gw);
            }
        }
    }

    a.cholesky()?;
    a.solve_in_place(&mut rhs);

    let v_row = Array2::from_shape_fn((n, m), |(j, i)| rhs[row_node(j, i)]);
    let v_col = Array2::from_shape_fn((n, m), |(j, i)| rhs[col_node(j, i)]);
    Ok(finish(c, v_row, v_col, 1))
}

/// Lower band of a symmetric matrix, stored row by row.
struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn cholesky(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(bw));
                let ri = self.idx(i, klo);
                let rj = self.idx(j, klo);
                let len = j - klo;
                let dot: f64 = self.data[ri..ri + len]
                    .iter()
                    .zip(&self.data[rj..rj + len])
                    .map(|(a, b)| a * b)
                    .sum();
                let ij = self.idx(i, j);
                let s = self.data[ij] - dot;
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!("node {i} has no path to a driver or ground")));
                    }
                    self.data[ij] = s.sqrt();
                } else {
                    let jj = self.idx(j, j);
                    self.data[ij] = s / self.data[jj];
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = b[i];
            for k in lo..i {
                s -= self.data[self.idx(i, k)] * b[k];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = b[i];
            for k in i + 1..=hi {
                s -= self.data[self.idx(k, i)] * b[k];
            }
            b[i] = s / self.data[self.idx(i, i)];
        }
    }
}

/// Thomas algorithm for `sub[k]·x[k-1] + diag[k]·x[k] + sup[k]·x[k+1] = rhs[k]`.
/// The solution overwrites `rhs`; `scratch` must be as long as `rhs`.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    let mut beta = diag[0];
    rhs[0] /= beta;
    for k in 1..n {
        scratch[k] = sup[k - 1] / beta;
        beta = diag[k] - sub[k] * scratch[k];
        rhs[k] = (rhs[k] - sub[k] * rhs[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k + 1] * rhs[k + 1];
    }
}

/// Line relaxation: alternately solves every row line and every column line
/// exactly with the other side frozen, until the largest voltage update of a
/// sweep is below `tol·V_RB`.
pub fn solve_fast(c: &CrossbarCircuit, opts: &SolverOptions) -> Result<SolveResult> {
    if !(opts.tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    if c.is_parasitic_free() {
        return Ok(solve_ideal(c));
    }
    let (n, m) = (c.rows(), c.cols());
    let gw = 1.0 / c.r_wire;
    let mut v_row = Array2::from_shape_fn((n, m), |(j, _)| c.driver(j));
    let mut v_col = Array2::<f64>::zeros((n, m));
    if c.ideal_conductance() == 0.0 {
        return Ok(finish(c, v_row, v_col, 0));
    }

    let len = n.max(m);
    let mut sub = vec![0.0; len];
    let mut diag = vec![0.0; len];
    let mut sup = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    let mut scratch = vec![0.0; len];
    let limit = opts.tol * c.drive;
    let mut last_update = f64::INFINITY;

    for sweep in 1..=opts.max_sweeps {
        let mut update: f64 = 0.0;

        for j in 0..n {
            if !c.active_rows[j] {
                continue;
            }
            for i in 0..m {
                let g = c.g[[j, i]];
                sub[i] = -gw;
                sup[i] = if i + 1 < m { -gw } else { 0.0 };
                diag[i] = gw + if i + 1 < m { gw } else { 0.0 } + g;
                rhs[i] = g * v_col[[j, i]];
            }
            rhs[0] += gw * c.driver(j);
            thomas(&sub[..m], &diag[..m], &sup[..m], &mut rhs[..m], &mut scratch[..m]);
            for i in 0..m {
                update = update.max((rhs[i] - v_row[[j, i]]).abs());
                v_row[[j, i]] = rhs[i];
            }
        }

        for i in 0..m {
            for j in 0..n {
                let g = c.g[[j, i]];
                sub[j] = if j > 0 { -gw } else { 0.0 };
                sup[j] = -gw;
                diag[j] = gw + if j > 0 { gw } else { 0.0 } + g;
                rhs[j] = g * v_row[[j, i]];
            }
            thomas(&sub[..n], &diag[..n], &sup[..n], &mut rhs[..n], &mut scratch[..n]);
            for j in 0..n {
                update = update.max((rhs[j] - v_col[[j, i]]).abs());
                v_col[[j, i]] = rhs[j];
            }
        }

        last_update = update;
        if update < limit {
            return Ok(finish(c, v_row, v_col, sweep));
        }
    }
    let res = finish(c, v_row, v_col, opts.max_sweeps);
    Err(Error::NonConvergence {
        iterations: opts.max_sweeps,
        last_update,
        residual: res.kcl_residual,
    })
}

/// Bound on the KCL residual of a solution accepted by [`solve_fast`]: one
/// voltage update of `tol·V_RB` times the largest node self-conductance.
pub fn residual_bound(c: &CrossbarCircuit, opts: &SolverOptions) -> f64 {
    if c.is_parasitic_free() {
        return 0.0;
    }
    let g_cell = c.g.iter().copied().fold(0.0, f64::max);
    opts.tol * c.drive * (2.0 / c.r_wire + g_cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_circuit(rng: &mut ChaCha8Rng, n: usize, m: usize, r: f64) -> CrossbarCircuit {
        let g = Array2::from_shape_fn((n, m), |_| rng.random_range(5e-6..300e-6));
        let active = (0..n).map(|_| rng.random_bool(0.6)).collect();
        CrossbarCircuit::new(g, r, 0.2, active).unwrap()
    }

    #[test]
    fn single_cell_without_wires() {
        let c = CrossbarCircuit::new(array![[100e-6]], 0.0, 0.2, vec![true]).unwrap();
        let res = solve_dense_oracle(&c).unwrap();
        assert!((res.g_x - 100e-6).abs() < 1e-18);
        assert_eq!(res.v_row[[0, 0]] - res.v_col[[0, 0]], 0.2);
        assert_eq!(c.unknown_count(), 0);
    }

    #[test]
    fn single_cell_with_two_segments() {
        // 100 µS in series with 2 x 1 kΩ: I = 0.2 V / 12 kΩ, V_c = I·10 kΩ.
        let c = CrossbarCircuit::new(array![[100e-6]], 1e3, 0.2, vec![true]).unwrap();
        let i = 0.2 / 12e3;
        let v_c = i * 10e3;
        let g_x = v_c * v_c * 100e-6 / 0.04;
        for res in [
            solve_dense_oracle(&c).unwrap(),
            solve_fast(&c, &SolverOptions::with_tol(1e-12)).unwrap(),
        ] {
            assert!((res.g_x - g_x).abs() < 1e-12 * g_x, "{} vs {g_x}", res.g_x);
            assert!((res.v_row[[0, 0]] - res.v_col[[0, 0]] - v_c).abs() < 1e-12);
            assert!((res.drive_power - 0.2 * i).abs() < 1e-15);
        }
        assert_eq!(c.unknown_count(), 2);
    }

    #[test]
    fn two_by_two_matches_hand_kcl() {
        // Node-by-node KCL with all four nodes per line written out.
        let g = array![[120e-6, 40e-6], [75e-6, 210e-6]];
        let r = 50.0;
        let c = CrossbarCircuit::new(g.clone(), r, 0.2, vec![true, true]).unwrap();
        let res = solve_dense_oracle(&c).unwrap();
        let gw = 1.0 / r;
        let (vr, vc) = (&res.v_row, &res.v_col);
        for j in 0..2 {
            // row node (j,0): driver - (j,0) - (j,1) and cell
            let n0 = gw * (0.2 - vr[[j, 0]]) + gw * (vr[[j, 1]] - vr[[j, 0]]) - g[[j, 0]] * (vr[[j, 0]] - vc[[j, 0]]);
            let n1 = gw * (vr[[j, 0]] - vr[[j, 1]]) - g[[j, 1]] * (vr[[j, 1]] - vc[[j, 1]]);
            assert!(n0.abs() < 1e-14 && n1.abs() < 1e-14);
        }
        for i in 0..2 {
            let top = g[[0, i]] * (vr[[0, i]] - vc[[0, i]]) + gw * (vc[[1, i]] - vc[[0, i]]);
            let bot = g[[1, i]] * (vr[[1, i]] - vc[[1, i]]) + gw * (vc[[0, i]] - vc[[1, i]]) - gw * vc[[1, i]];
            assert!(top.abs() < 1e-14 && bot.abs() < 1e-14);
        }
        let fast = solve_fast(&c, &SolverOptions::with_tol(1e-14)).unwrap();
        for (a, b) in fast.v_row.iter().zip(res.v_row.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in fast.v_col.iter().zip(res.v_col.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn banded_cholesky_matches_nalgebra_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (n, m) = (rng.random_range(1..6), rng.random_range(1..6));
            let r = rng.random_range(0.5..200.0);
            let c = random_circuit(&mut rng, n, m, r);
            let res = solve_dense_oracle(&c).unwrap();

            // Independent assembly with node index (row nodes first, then columns).
            let size = 2 * n * m;
            let gw = 1.0 / c.r_wire;
            let rn = |j: usize, i: usize| j * m + i;
            let cn = |j: usize, i: usize| n * m + j * m + i;
            let mut a = nalgebra::DMatrix::<f64>::zeros(size, size);
            let mut b = nalgebra::DVector::<f64>::zeros(size);
            let link = |a: &mut nalgebra::DMatrix<f64>, p: usize, q: usize, g: f64| {
                a[(p, p)] += g;
                a[(q, q)] += g;
                a[(p, q)] -= g;
                a[(q, p)] -= g;
            };
            for j in 0..n {
                for i in 0..m {
                    link(&mut a, rn(j, i), cn(j, i), c.g[[j, i]]);
                    if i == 0 {
                        a[(rn(j, 0), rn(j, 0))] += gw;
                        b[rn(j, 0)] += gw * if c.active_rows[j] { 0.2 } else { 0.0 };
                    } else {
                        link(&mut a, rn(j, i - 1), rn(j, i), gw);
                    }
                    if j + 1 < n {
                        link(&mut a, cn(j, i), cn(j + 1, i), gw);
                    } else {
                        a[(cn(j, i), cn(j, i))] += gw;
                    }
                }
            }
            let x = a.lu().solve(&b).unwrap();
            for j in 0..n {
                for i in 0..m {
                    assert!((x[rn(j, i)] - res.v_row[[j, i]]).abs() < 1e-12);
                    assert!((x[cn(j, i)] - res.v_col[[j, i]]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn inactive_circuit_is_silent() {
        let g = Array2::from_elem((4, 4), 100e-6);
        let c = CrossbarCircuit::new(g, 2.215, 0.2, vec![false; 4]).unwrap();
        assert_eq!(c.ideal_conductance(), 0.0);
        assert_eq!(solve_fast(&c, &SolverOptions::default()).unwrap().g_x, 0.0);
        assert_eq!(solve_dense_oracle(&c).unwrap().g_x, 0.0);
    }

    #[test]
    fn parasitic_free_fast_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_circuit(&mut rng, 8, 8, 0.0);
        let res = solve_fast(&c, &SolverOptions::default()).unwrap();
        let expect: f64 = (0..8).filter(|&j| c.active_rows[j]).map(|j| c.g.row(j).sum()).sum();
        assert!((res.g_x - expect).abs() <= 1e-15 * expect);
        assert_eq!(res.iterations, 0);
        assert!((equivalent_conductance(&res, 0.2) - res.g_x).abs() < 1e-18);
    }

    #[test]
    fn config_d_unknowns() {
        let g = Array2::from_elem((64, 64), 100e-6);
        let c = CrossbarCircuit::new(g, 2.215, 0.2, vec![true; 64]).unwrap();
        assert_eq!(c.unknown_count(), 2 * 64 * 64);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_circuit(&mut rng, 16, 16, 500.0);
        let opts = SolverOptions {
            tol: 1e-14,
            max_sweeps: 2,
        };
        assert!(matches!(solve_fast(&c, &opts), Err(Error::NonConvergence { .. })));
        assert!(solve_fast(&c, &SolverOptions::with_tol(0.0)).is_err());
    }

    #[test]
    fn circuit_validation() {
        assert!(CrossbarCircuit::new(array![[1e-6]], 0.0, 0.2, vec![true, false]).is_err());
        assert!(CrossbarCircuit::new(array![[-1e-6]], 0.0, 0.2, vec![true]).is_err());
        assert!(CrossbarCircuit::new(array![[1e-6]], -1.0, 0.2, vec![true]).is_err());
    }

    #[test]
    fn voltage_dump() {
        let c = CrossbarCircuit::new(array![[100e-6, 50e-6]], 10.0, 0.2, vec![true]).unwrap();
        let res = solve_dense_oracle(&c).unwrap();
        let mut buf = Vec::new();
        res.write_voltages_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("row,col,v_row,v_col\n0,0,"));
    }
}
