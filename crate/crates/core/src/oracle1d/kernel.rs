use rayon::prelude::*;
use serde::Serialize;

use super::{coverage_tail, require_1d, Grid1D, OracleError};
use crate::dynamics::{Kernel, RunConfig};
use crate::potential::Potential;
use crate::quadrature::{normal_mass_outside, CompositeRule};

/// Rows are assembled and propagated in this many fixed blocks so that
/// partial sums combine in the same order on any thread count.
const ROW_BLOCKS: usize = 64;
/// Negative atoms down to this size are rounding noise and are clamped.
const ATOM_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuildOptions {
    /// Largest tolerated off-grid proposal mass per row, weighted by the
    /// row's relative target density `exp(-beta (U_i - min U))`.
    pub max_leak: f64,
    /// Half-width, in proposal standard deviations, of the stored band.
    pub window_sigmas: f64,
    /// Required ratio of proposal scale to grid spacing.
    pub min_resolution: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            max_leak: 1e-8,
            window_sigmas: 10.0,
            min_resolution: 3.0,
        }
    }
}

/// Discretised transition kernel.
///
/// Row `i` holds the continuous part `q(x_i, x_j) a(x_i, x_j) w_j` on a band of
/// columns and a rejection atom on the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelMatrix {
    pub grid: Grid1D,
    pub kind: Kernel,
    pub cfg: RunConfig,
    /// `U` at every node.
    pub energies: Vec<f64>,
    /// Rejection mass per row (zero for ULA).
    pub atom: Vec<f64>,
    /// Proposal mass that fell outside the grid, per row.
    pub truncation_mass: Vec<f64>,
    band_start: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

struct Row {
    lo: usize,
    vals: Vec<f64>,
    atom: f64,
    leak: f64,
}

pub fn build_kernel(
    p: &dyn Potential,
    cfg: &RunConfig,
    grid: &Grid1D,
    kind: Kernel,
) -> Result<KernelMatrix, OracleError> {
    build_kernel_with(p, cfg, grid, kind, &BuildOptions::default())
}

pub fn build_kernel_with(
    p: &dyn Potential,
    cfg: &RunConfig,
    grid: &Grid1D,
    kind: Kernel,
    opts: &BuildOptions,
) -> Result<KernelMatrix, OracleError> {
    require_1d(p)?;
    cfg.validate()?;
    coverage_tail(p, cfg.beta, grid)?;
    let s = cfg.noise_scale();
    let spacing = grid.max_spacing();
    if s < opts.min_resolution * spacing {
        return Err(OracleError::Resolution { spacing, scale: s });
    }
    let energies: Vec<f64> = grid.nodes.iter().map(|&x| p.value(&[x])).collect();
    let grads: Vec<f64> = grid.nodes.iter().map(|&x| p.grad_vec(&[x])[0]).collect();
    let n = grid.len();
    let umin = energies.iter().copied().fold(f64::INFINITY, f64::min);

    let rows: Vec<Row> = (0..n)
        .into_par_iter()
        .with_min_len(n.div_ceil(ROW_BLOCKS).max(1))
        .map(|i| build_row(p, cfg, grid, kind, opts, &energies, &grads, umin, i))
        .collect::<Result<_, _>>()?;

    let mut band_start = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(rows.iter().map(|r| r.vals.len()).sum());
    let mut atom = Vec::with_capacity(n);
    let mut truncation_mass = Vec::with_capacity(n);
    offsets.push(0);
    for r in rows {
        band_start.push(r.lo);
        values.extend_from_slice(&r.vals);
        offsets.push(values.len());
        atom.push(r.atom);
        truncation_mass.push(r.leak);
    }
    Ok(KernelMatrix {
        grid: grid.clone(),
        kind,
        cfg: *cfg,
        energies,
        atom,
        truncation_mass,
        band_start,
        offsets,
        values,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_row(
    p: &dyn Potential,
    cfg: &RunConfig,
    grid: &Grid1D,
    kind: Kernel,
    opts: &BuildOptions,
    energies: &[f64],
    grads: &[f64],
    umin: f64,
    i: usize,
) -> Result<Row, OracleError> {
    let e_h = cfg.e_h();
    let x = grid.nodes[i];
    let (ux, gx) = (energies[i], grads[i]);
    if kind == Kernel::Patched && !(ux < e_h) {
        return Ok(Row {
            lo: i,
            vals: Vec::new(),
            atom: 1.0,
            leak: 0.0,
        });
    }
    let h = cfg.h;
    let beta = cfg.beta;
    let s = cfg.noise_scale();
    let m = x - h * gx;
    let c0 = -0.5 * (4.0 * std::f64::consts::PI * h / beta).ln();
    let coef = beta / (4.0 * h);
    let log_alpha = |y: f64, uy: f64, gy: f64| -> f64 {
        match kind {
            Kernel::Ula => 0.0,
            Kernel::Mala | Kernel::Patched => {
                if kind == Kernel::Patched && !(uy < e_h) {
                    return f64::NEG_INFINITY;
                }
                let g = (uy - ux) - 0.5 * (gy + gx) * (y - x) + 0.25 * h * (gy * gy - gx * gx);
                let la = (-beta * g).min(0.0);
                if la.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    la
                }
            }
        }
    };

    let half = opts.window_sigmas * s;
    let (lo, hi) = grid.index_range(m - half, m + half);
    let mut vals = Vec::with_capacity(hi - lo);
    for j in lo..hi {
        let y = grid.nodes[j];
        let lq = c0 - coef * (y - m) * (y - m);
        let v = (lq + log_alpha(y, energies[j], grads[j])).exp() * grid.weights[j];
        vals.push(v);
    }

    let (a, b) = grid.bounds;
    let leak = match kind {
        Kernel::Ula => normal_mass_outside(m, s, a, b),
        _ => {
            let reach = 12.0 * s;
            let mut total = 0.0;
            for (l, r) in [(m - reach, a), (b, m + reach)] {
                if l < r {
                    let rule = CompositeRule::new(l, r, 64, 8);
                    total += rule.integrate(|y| {
                        let uy = p.value(&[y]);
                        let gy = p.grad_vec(&[y])[0];
                        if !(uy.is_finite() && gy.is_finite()) {
                            return 0.0;
                        }
                        (c0 - coef * (y - m) * (y - m) + log_alpha(y, uy, gy)).exp()
                    });
                }
            }
            total
        }
    };
    // rows the target never visits may leak freely
    if leak * (-beta * (ux - umin)).exp() > opts.max_leak {
        return Err(OracleError::Truncation {
            x,
            leak,
            max: opts.max_leak,
        });
    }

    let atom = match kind {
        Kernel::Ula => {
            let total: f64 = vals.iter().sum();
            for v in &mut vals {
                *v /= total;
            }
            0.0
        }
        _ => {
            let a = 1.0 - vals.iter().sum::<f64>();
            if a < ATOM_FLOOR {
                return Err(OracleError::NegativeEntry { row: i, value: a });
            }
            a.max(0.0)
        }
    };
    Ok(Row { lo, vals, atom, leak })
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// First column and values of the continuous band of row `i`.
    pub fn band(&self, i: usize) -> (usize, &[f64]) {
        (self.band_start[i], &self.values[self.offsets[i]..self.offsets[i + 1]])
    }

    /// Transition probability from node `i` to node `j`, atom included.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (lo, vals) = self.band(i);
        let cont = if j >= lo && j < lo + vals.len() {
            vals[j - lo]
        } else {
            0.0
        };
        if i == j {
            cont + self.atom[i]
        } else {
            cont
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.band(i).1.iter().sum::<f64>() + self.atom[i]
    }

    /// Dense row-major matrix with the atom on the diagonal.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let (lo, vals) = self.band(i);
            out[i * n + lo..i * n + lo + vals.len()].copy_from_slice(vals);
            out[i * n + i] += self.atom[i];
        }
        out
    }

    /// `out = dist K` for a row vector `dist`.
    pub fn apply(&self, dist: &[f64], out: &mut [f64]) {
        let n = self.len();
        assert_eq!(dist.len(), n);
        assert_eq!(out.len(), n);
        let chunk = n.div_ceil(ROW_BLOCKS).max(1);
        let partials: Vec<(usize, Vec<f64>)> = (0..n)
            .step_by(chunk)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| {
                let end = (start + chunk).min(n);
                let mut c_lo = usize::MAX;
                let mut c_hi = 0;
                for (i, &d) in dist.iter().enumerate().take(end).skip(start) {
                    if d != 0.0 {
                        let (lo, vals) = self.band(i);
                        c_lo = c_lo.min(lo.min(i));
                        c_hi = c_hi.max((lo + vals.len()).max(i + 1));
                    }
                }
                if c_lo >= c_hi {
                    return (0, Vec::new());
                }
                let mut acc = vec![0.0; c_hi - c_lo];
                for i in start..end {
                    let w = dist[i];
                    if w == 0.0 {
                        continue;
                    }
                    let (lo, vals) = self.band(i);
                    let dst = &mut acc[lo - c_lo..lo - c_lo + vals.len()];
                    for (d, v) in dst.iter_mut().zip(vals) {
                        *d += w * v;
                    }
                    acc[i - c_lo] += w * self.atom[i];
                }
                (c_lo, acc)
            })
            .collect();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (lo, acc) in partials {
            for (d, v) in out[lo..lo + acc.len()].iter_mut().zip(&acc) {
                *d += v;
            }
        }
    }

    /// Serialises the kernel as a JSON header followed by little-endian
    /// doubles (dense matrix, atom, truncation mass).
    pub fn to_dump(&self, config_hash: &str) -> Vec<u8> {
        super::dump::encode(self, config_hash)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle1d::stationary_measure;
    use crate::potential::builtin_potential;

    fn quartic() -> crate::potential::Builtin {
        builtin_potential("quartic", &[], 1).unwrap()
    }

    #[test]
    fn rows_are_stochastic_and_nonnegative() {
        let p = quartic();
        let g = Grid1D::uniform(-4.0, 4.0, 801).unwrap();
        for kind in Kernel::ALL {
            let cfg = RunConfig::new(0.05, 1.0).with_level(4.0);
            let opts = BuildOptions {
                max_leak: 1e-6,
                ..Default::default()
            };
            let k = build_kernel_with(&p, &cfg, &g, kind, &opts).unwrap();
            for i in 0..k.len() {
                assert!((k.row_sum(i) - 1.0).abs() < 1e-8, "{kind} row {i}");
                assert!(k.band(i).1.iter().all(|&v| v >= 0.0) && k.atom[i] >= 0.0);
            }
        }
    }

    #[test]
    fn patched_rows_outside_level_set_are_atoms() {
        let p = quartic();
        let g = Grid1D::uniform(-4.0, 4.0, 801).unwrap();
        let cfg = RunConfig::new(0.05, 1.0).with_level(4.0);
        let k = build_kernel(&p, &cfg, &g, Kernel::Patched).unwrap();
        for i in 0..k.len() {
            if k.energies[i] >= cfg.e_h() {
                assert_eq!(k.atom[i], 1.0);
                assert!(k.band(i).1.is_empty());
            } else {
                let (lo, vals) = k.band(i);
                for (j, v) in vals.iter().enumerate() {
                    if k.energies[lo + j] >= cfg.e_h() {
                        assert_eq!(*v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn detailed_balance_at_matrix_level() {
        let p = quartic();
        let g = Grid1D::uniform(-5.0, 5.0, 1001).unwrap();
        let cfg = RunConfig::new(0.05, 1.0);
        let k = build_kernel(&p, &cfg, &g, Kernel::Mala).unwrap();
        let mu = stationary_measure(&p, 1.0, &g, None).unwrap();
        for i in (0..k.len()).step_by(7) {
            let (lo, vals) = k.band(i);
            for (off, _) in vals.iter().enumerate() {
                let j = lo + off;
                let a = mu.masses[i] * k.entry(i, j);
                let b = mu.masses[j] * k.entry(j, i);
                // entries beyond the stored band are below 1e-20
                assert!((a - b).abs() <= 1e-8 * a.max(b) + 1e-20, "{i},{j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn stationarity_of_the_mala_kernel() {
        let p = quartic();
        let g = Grid1D::uniform(-6.0, 6.0, 1201).unwrap();
        let cfg = RunConfig::new(0.05, 1.0);
        let k = build_kernel(&p, &cfg, &g, Kernel::Mala).unwrap();
        let mu = stationary_measure(&p, 1.0, &g, None).unwrap();
        let mut out = vec![0.0; g.len()];
        k.apply(&mu.masses, &mut out);
        let tv: f64 = out.iter().zip(&mu.masses).map(|(a, b)| (a - b).abs()).sum();
        assert!(tv <= 1e-6, "tv {tv}");
    }

    #[test]
    fn apply_matches_dense_product() {
        let p = quartic();
        let g = Grid1D::uniform(-3.5, 3.5, 301).unwrap();
        let cfg = RunConfig::new(0.1, 1.0);
        let k = build_kernel_with(
            &p,
            &cfg,
            &g,
            Kernel::Mala,
            &BuildOptions {
                max_leak: 1e-3,
                ..Default::default()
            },
        )
        .unwrap();
        let d = k.dense();
        let n = g.len();
        let dist: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64).collect();
        let mut out = vec![0.0; n];
        k.apply(&dist, &mut out);
        for j in 0..n {
            let e: f64 = (0..n).map(|i| dist[i] * d[i * n + j]).sum();
            assert!((e - out[j]).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }

    #[test]
    fn build_errors() {
        let p = quartic();
        let cfg = RunConfig::new(0.05, 1.0);
        // too coarse for the proposal scale
        let coarse = Grid1D::uniform(-6.0, 6.0, 41).unwrap();
        assert!(matches!(
            build_kernel(&p, &cfg, &coarse, Kernel::Mala),
            Err(OracleError::Resolution { .. })
        ));
        // at h = 1.5 the ULA proposal from the mode already leaves [-7, 7]
        let q = builtin_potential("quadratic", &[], 1).unwrap();
        let g = Grid1D::uniform(-7.0, 7.0, 1401).unwrap();
        let big = RunConfig::new(1.5, 1.0);
        assert!(matches!(
            build_kernel(&q, &big, &g, Kernel::Ula),
            Err(OracleError::Truncation { .. })
        ));
        let two_d = builtin_potential("quartic", &[], 2).unwrap();
        assert!(build_kernel(&two_d, &cfg, &g, Kernel::Mala).is_err());
    }
}
