use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::potential::Potential;

type ScalarFn<'a> = &'a dyn Fn(&[f64]) -> f64;
type VectorFn<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// `L f(x) = -grad U . grad f + Delta f / beta`. Missing derivatives of `f`
/// are replaced by central finite differences.
pub fn apply_generator(
    p: &dyn Potential,
    beta: f64,
    f: ScalarFn,
    f_grad: Option<VectorFn>,
    f_lap: Option<ScalarFn>,
    x: &[f64],
) -> Result<f64, DiagnosticsError> {
    if x.len() != p.dim() {
        return Err(invalid(format!("x has dimension {}, potential {}", x.len(), p.dim())));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid(format!("beta must be positive (got {beta})")));
    }
    let n = x.len();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut y = x.to_vec();
    let grad_f = match f_grad {
        Some(g) => g(x),
        None => {
            let d = 1e-5 * (1.0 + norm);
            (0..n)
                .map(|i| {
                    y[i] = x[i] + d;
                    let fp = f(&y);
                    y[i] = x[i] - d;
                    let fm = f(&y);
                    y[i] = x[i];
                    (fp - fm) / (2.0 * d)
                })
                .collect()
        }
    };
    let lap_f = match f_lap {
        Some(l) => l(x),
        None => {
            let d = 1e-4 * (1.0 + norm);
            let f0 = f(x);
            (0..n)
                .map(|i| {
                    y[i] = x[i] + d;
                    let fp = f(&y);
                    y[i] = x[i] - d;
                    let fm = f(&y);
                    y[i] = x[i];
                    (fp - 2.0 * f0 + fm) / (d * d)
                })
                .sum()
        }
    };
    let gu = p.grad_vec(x);
    let v = -gu.iter().zip(&grad_f).map(|(a, b)| a * b).sum::<f64>() + lap_f / beta;
    if !v.is_finite() {
        return Err(invalid(format!("L f is not finite at {x:?}")));
    }
    Ok(v)
}

/// `L exp(theta U) / exp(theta U) = theta (Delta U / beta - (1 - theta/beta) |grad U|^2)`,
/// when the potential provides a Laplacian.
pub fn lyapunov_generator(p: &dyn Potential, beta: f64, theta: f64, x: &[f64]) -> Option<f64> {
    let lap = p.laplacian(x)?;
    let g2: f64 = p.grad_vec(x).iter().map(|g| g * g).sum();
    Some(theta * (lap / beta - (1.0 - theta / beta) * g2))
}

/// Fits `L Phi <= K - gamma Phi` for `Phi = exp(theta U)` over the probe
/// points: `gamma` is the smallest decay rate over the outer quarter (by
/// energy) and `K` the smallest constant covering every point.
pub fn generator_drift_fit(
    p: &dyn Potential,
    beta: f64,
    theta: f64,
    xs: &[Vec<f64>],
) -> Result<DiagnosticReport, DiagnosticsError> {
    if !(theta > 0.0 && theta < beta) {
        return Err(invalid(format!("theta must lie in (0, beta) (got {theta})")));
    }
    if xs.len() < 4 {
        return Err(invalid("need at least four probe points"));
    }
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        let r =
            lyapunov_generator(p, beta, theta, x).ok_or_else(|| invalid(format!("{} has no Laplacian", p.name())))?;
        rows.push((p.value(x), r));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let outer = &rows[rows.len() - rows.len().div_ceil(4)..];
    let gamma = outer.iter().map(|r| -r.1).fold(f64::INFINITY, f64::min);
    // K >= (r + gamma) Phi, with Phi shifted by the smallest energy for range
    let umin = rows[0].0;
    let k_scaled = rows
        .iter()
        .map(|&(u, r)| (r + gamma) * (theta * (u - umin)).exp())
        .fold(0.0, f64::max);
    let mut rep = DiagnosticReport::new(
        "generator-drift",
        if gamma > 0.0 { Verdict::Pass } else { Verdict::Fail },
    );
    let method = "analytic generator on probe points";
    rep.constants
        .push(FittedConstant::new("gamma", gamma, method, rows.len()));
    rep.constants.push(FittedConstant::new(
        "K",
        k_scaled * (theta * umin).exp(),
        method,
        rows.len(),
    ));
    Ok(rep)
}
