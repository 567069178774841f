use super::measure::tv_masses;
use super::{build_kernel, Grid1D, GridMeasure, KernelMatrix, OracleError};
use crate::dynamics::{Kernel, RunConfig};
use crate::potential::Potential;

fn check_start(k: &KernelMatrix, start: usize) -> Result<(), OracleError> {
    if start >= k.len() {
        return Err(OracleError::InvalidStart {
            index: start,
            len: k.len(),
        });
    }
    Ok(())
}

fn check_target(k: &KernelMatrix, target: &GridMeasure) -> Result<(), OracleError> {
    if target.masses.len() != k.len() {
        return Err(OracleError::DimensionMismatch(format!(
            "kernel on {} nodes, target on {}",
            k.len(),
            target.masses.len()
        )));
    }
    Ok(())
}

/// `curve[j - 1] = ||K^j(start, .) - target||` for `j = 1..=n`.
pub fn kernel_power_tv(
    k: &KernelMatrix,
    start: usize,
    n: usize,
    target: &GridMeasure,
) -> Result<Vec<f64>, OracleError> {
    propagate_blocks(k, start, 1, n, target)
}

/// TV to `target` after every block of `block_len` steps, for `n_blocks`
/// blocks.
pub fn propagate_blocks(
    k: &KernelMatrix,
    start: usize,
    block_len: usize,
    n_blocks: usize,
    target: &GridMeasure,
) -> Result<Vec<f64>, OracleError> {
    check_start(k, start)?;
    check_target(k, target)?;
    if n_blocks == 0 || block_len == 0 {
        return Err(OracleError::InvalidGrid("need at least one step".into()));
    }
    let mut dist = vec![0.0; k.len()];
    dist[start] = 1.0;
    let mut next = vec![0.0; k.len()];
    let mut curve = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        for _ in 0..block_len {
            k.apply(&dist, &mut next);
            std::mem::swap(&mut dist, &mut next);
        }
        curve.push(tv_masses(&dist, &target.masses)?);
    }
    Ok(curve)
}

/// `curve[j - 1] = P^start(tau <= j)`, `tau` the first step with `U >= e_h`,
/// computed with the kernel made absorbing on `{U >= e_h}`.
pub fn exit_probability(k: &KernelMatrix, start: usize, e_h: f64, n: usize) -> Result<Vec<f64>, OracleError> {
    check_start(k, start)?;
    if k.kind != Kernel::Mala {
        return Err(OracleError::InvalidGrid(format!(
            "exit probabilities need a MALA kernel (got {})",
            k.kind
        )));
    }
    let u0 = k.energies[start];
    if !(u0 < e_h) {
        return Err(OracleError::OutsideLevelSet { u: u0, e_h });
    }
    let absorbing: Vec<bool> = k.energies.iter().map(|&u| !(u < e_h)).collect();
    let mut dist = vec![0.0; k.len()];
    dist[start] = 1.0;
    let mut next = vec![0.0; k.len()];
    let mut absorbed = 0.0;
    let mut curve = Vec::with_capacity(n);
    for _ in 0..n {
        k.apply(&dist, &mut next);
        for (v, &a) in next.iter_mut().zip(&absorbing) {
            if a {
                absorbed += *v;
                *v = 0.0;
            }
        }
        std::mem::swap(&mut dist, &mut next);
        curve.push(absorbed.min(1.0));
    }
    Ok(curve)
}

/// Approximation of the diffusion's law at time `h` from node `start`:
/// the MALA kernel at step `h / 64` composed 64 times.
pub fn sde_reference_distribution(
    p: &dyn Potential,
    cfg: &RunConfig,
    grid: &Grid1D,
    start: usize,
) -> Result<GridMeasure, OracleError> {
    let mut fine = *cfg;
    fine.h = cfg.h / 64.0;
    let k = build_kernel(p, &fine, grid, Kernel::Mala)?;
    check_start(&k, start)?;
    let mut dist = vec![0.0; k.len()];
    dist[start] = 1.0;
    let mut next = vec![0.0; k.len()];
    for _ in 0..64 {
        k.apply(&dist, &mut next);
        std::mem::swap(&mut dist, &mut next);
    }
    Ok(GridMeasure {
        grid: grid.clone(),
        masses: dist,
    })
}
