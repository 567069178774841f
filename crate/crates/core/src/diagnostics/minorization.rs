use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::dynamics::{Kernel, RunConfig};
use crate::oracle1d::{build_kernel, tv_masses, Grid1D};
use crate::potential::Potential;
use crate::reporting::CurveSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinorizationOptions {
    pub bounds: (f64, f64),
    pub nodes: usize,
    /// Start nodes sampled evenly from the sublevel set (ends included).
    pub n_starts: usize,
    /// Level `E_h` of the patched kernel, used by the plateau sweep.
    pub e_h: f64,
}

impl Default for MinorizationOptions {
    fn default() -> Self {
        Self {
            bounds: (-4.0, 4.0),
            nodes: 801,
            n_starts: 41,
            e_h: 4.0,
        }
    }
}

fn overlap(
    p: &dyn Potential,
    cfg: &RunConfig,
    e: f64,
    opts: &MinorizationOptions,
) -> Result<(f64, usize), DiagnosticsError> {
    if !(e < cfg.e_h()) {
        return Err(invalid(format!("E = {e} must be below E_h = {}", cfg.e_h())));
    }
    if opts.n_starts < 2 {
        return Err(invalid("need at least two start nodes"));
    }
    let grid = Grid1D::uniform(opts.bounds.0, opts.bounds.1, opts.nodes)?;
    let k = build_kernel(p, cfg, &grid, Kernel::Patched)?;
    let inside: Vec<usize> = (0..k.len()).filter(|&i| k.energies[i] < e).collect();
    if inside.is_empty() {
        return Err(invalid(format!("no grid node has U < {e}")));
    }
    if inside.len() == 1 {
        return Ok((0.0, 1));
    }
    let starts: Vec<usize> = if inside.len() <= opts.n_starts {
        inside
    } else {
        let m = opts.n_starts;
        (0..m)
            .map(|t| inside[(t * (inside.len() - 1) + (m - 1) / 2) / (m - 1)])
            .collect()
    };
    let steps = cfg.block_len();
    let rows: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut dist = vec![0.0; k.len()];
            dist[s] = 1.0;
            let mut next = vec![0.0; k.len()];
            for _ in 0..steps {
                k.apply(&dist, &mut next);
                std::mem::swap(&mut dist, &mut next);
            }
            dist
        })
        .collect();
    let mut max_tv: f64 = 0.0;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            max_tv = max_tv.max(tv_masses(&rows[a], &rows[b])?);
        }
    }
    Ok((max_tv, starts.len()))
}

/// `eps = 1 - max_{x,y} ||Pbar(x,.) - Pbar(y,.)|| / 2` over start nodes in
/// `{U < e}`, where `Pbar` is the patched kernel raised to `floor(1/h)`.
/// PASS iff `eps > 0`.
pub fn minorization_overlap(
    p: &dyn Potential,
    cfg: &RunConfig,
    e: f64,
    opts: &MinorizationOptions,
) -> Result<DiagnosticReport, DiagnosticsError> {
    let (max_tv, n) = overlap(p, cfg, e, opts)?;
    let eps = 1.0 - max_tv / 2.0;
    let mut rep = DiagnosticReport::new("minorization", if eps > 0.0 { Verdict::Pass } else { Verdict::Fail });
    let method = format!(
        "patched kernel power {} on {} nodes, pairwise TV",
        cfg.block_len(),
        opts.nodes
    );
    rep.constants.push(FittedConstant::new("eps_hat", eps, &method, n));
    rep.constants.push(FittedConstant::new("max_tv", max_tv, &method, n));
    Ok(rep)
}

/// Runs [`minorization_overlap`] over `hs` (patched level `opts.e_h`). PASS
/// iff every estimate is positive and they vary by less than 20%.
pub fn minorization_plateau(
    p: &dyn Potential,
    beta: f64,
    e: f64,
    hs: &[f64],
    opts: &MinorizationOptions,
) -> Result<DiagnosticReport, DiagnosticsError> {
    if hs.len() < 2 {
        return Err(invalid("need at least two step sizes"));
    }
    let mut pts = Vec::with_capacity(hs.len());
    let mut n = 0;
    for &h in hs {
        let cfg = RunConfig::new(h, beta).with_level(opts.e_h);
        let (tv, used) = overlap(p, &cfg, e, opts)?;
        n = n.max(used);
        pts.push((h, 1.0 - tv / 2.0));
    }
    let lo = pts.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let variation = (hi - lo) / hi;
    let pass = lo > 0.0 && variation < 0.2;
    let mut rep = DiagnosticReport::new("minorization", if pass { Verdict::Pass } else { Verdict::Fail });
    let method = "patched kernel power floor(1/h), pairwise TV";
    for &(h, eps) in &pts {
        rep.constants
            .push(FittedConstant::new(&format!("eps_hat(h={h})"), eps, method, n));
    }
    rep.constants.push(FittedConstant::new(
        "relative_variation",
        variation,
        "(max - min) / max",
        pts.len(),
    ));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    rep.curves.push(CurveSeries::new("eps_hat", "h", "overlap", pts)?);
    Ok(rep)
}
