//! Numerical spot checks of the structural conditions on `U`.
//!
//! The checks evaluate the stated inequalities on a finite, deterministic
//! probe set. A PASS means "no counterexample on the probes", never a proof.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Potential, PotentialError, ProbeBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Clause {
    /// `U >= 1` and super-quadratic growth.
    A,
    /// `Delta U <= c |grad U|^2 - d U` above an energy level.
    B,
    /// Hessian bounded from below.
    C,
    /// First four derivatives dominated by `U`.
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClauseVerdict {
    Pass,
    Fail,
    /// Growth is exactly at the quadratic boundary of clause A.
    Borderline,
    /// The potential lacks the derivatives this clause needs.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseReport {
    pub clause: Clause,
    pub verdict: ClauseVerdict,
    pub witnesses: Vec<Witness>,
    pub constants: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ClauseReport {
    fn new(clause: Clause) -> Self {
        Self {
            clause,
            verdict: ClauseVerdict::Pass,
            witnesses: Vec::new(),
            constants: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn skipped(clause: Clause, why: &str) -> Self {
        let mut r = Self::new(clause);
        r.verdict = ClauseVerdict::Skipped;
        r.notes.push(why.to_string());
        r
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub potential: String,
    pub beta: f64,
    pub n_probes: usize,
    pub probe_box: (Vec<f64>, Vec<f64>),
    pub clauses: Vec<ClauseReport>,
}

impl AssumptionReport {
    pub fn clause(&self, c: Clause) -> &ClauseReport {
        self.clauses
            .iter()
            .find(|r| r.clause == c)
            .expect("every clause is reported")
    }

    /// Fitted clause-B constant `c`, present only when clause B passed.
    pub fn fitted_c(&self) -> Option<f64> {
        let b = self.clause(Clause::B);
        (b.verdict == ClauseVerdict::Pass).then(|| b.constant("c")).flatten()
    }

    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.verdict == ClauseVerdict::Pass)
    }
}

/// Minimum number of probes a clause-B region must contain.
fn min_region(n: usize) -> usize {
    (n / 10).max(10)
}

const GROWTH_PASS: f64 = 1.5;
const GROWTH_FAIL: f64 = 2.0 / 3.0;
const CLAUSE_B_GRID: usize = 64;
const CLAUSE_B_SPAN: f64 = 1e-3;
const PROBED_C: [f64; 3] = [0.5, 1.0, 2.0];

struct Probe {
    x: Vec<f64>,
    u: f64,
    grad_sq: f64,
    norm: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Indices of the outer shell (top 10% of |x|) and a middle shell (45-55%
/// quantile of |x|).
fn shells(probes: &[Probe]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| probes[a].norm.total_cmp(&probes[b].norm));
    let n = order.len();
    let outer = order[n - (n / 10).max(1)..].to_vec();
    let mid = order[(45 * n) / 100..((55 * n) / 100).max(45 * n / 100 + 1)].to_vec();
    (outer, mid)
}

/// Spot-checks the four structural conditions on `n_probes` deterministic
/// probe points of `probe_box`.
pub fn validate_assumptions(
    p: &dyn Potential,
    beta: f64,
    probe_box: &ProbeBox,
    n_probes: usize,
) -> Result<AssumptionReport, PotentialError> {
    if n_probes < 100 {
        return Err(PotentialError::InvalidInput(format!(
            "n_probes must be at least 100 (got {n_probes})"
        )));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(PotentialError::InvalidInput(format!(
            "beta must be positive and finite (got {beta})"
        )));
    }
    if probe_box.dim() != p.dim() {
        return Err(PotentialError::InvalidInput(format!(
            "probe box has dimension {} but the potential has {}",
            probe_box.dim(),
            p.dim()
        )));
    }
    let probes: Vec<Probe> = probe_box
        .points(n_probes)
        .into_iter()
        .map(|x| {
            let u = p.value(&x);
            let g = p.grad_vec(&x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            Probe {
                u,
                grad_sq: g.iter().map(|v| v * v).sum(),
                norm,
                x,
            }
        })
        .collect();
    if let Some(bad) = probes.iter().find(|q| !q.u.is_finite() || !q.grad_sq.is_finite()) {
        return Err(PotentialError::NonFinite(format!("U or grad U at probe {:?}", bad.x)));
    }

    let clauses = vec![
        clause_a(&probes),
        clause_b(p, beta, &probes),
        clause_c(p, &probes),
        clause_d(p, &probes),
    ];
    Ok(AssumptionReport {
        potential: p.name().to_string(),
        beta,
        n_probes,
        probe_box: (probe_box.lower.clone(), probe_box.upper.clone()),
        clauses,
    })
}

fn clause_a(probes: &[Probe]) -> ClauseReport {
    let mut r = ClauseReport::new(Clause::A);
    let mut low: Vec<&Probe> = probes.iter().filter(|q| q.u < 1.0).collect();
    if !low.is_empty() {
        low.sort_by(|a, b| a.u.total_cmp(&b.u));
        r.verdict = ClauseVerdict::Fail;
        r.witnesses.extend(low.iter().take(5).map(|q| Witness {
            point: q.x.clone(),
            detail: format!("U = {} < 1", q.u),
        }));
    }
    r.constants
        .insert("min_u".into(), probes.iter().map(|q| q.u).fold(f64::INFINITY, f64::min));

    let ratio = |q: &Probe| q.u / (1.0 + q.norm * q.norm);
    let (outer, mid) = shells(probes);
    let outer_ratio = median(outer.iter().map(|&i| ratio(&probes[i])).collect());
    let mid_ratio = median(mid.iter().map(|&i| ratio(&probes[i])).collect());
    let growth = outer_ratio / mid_ratio;
    r.constants.insert("growth_factor".into(), growth);
    r.constants.insert("outer_ratio".into(), outer_ratio);
    r.constants.insert("mid_ratio".into(), mid_ratio);

    // E_C: largest probe energy still violating U >= C (1 + |x|^2)
    let max_u = probes.iter().map(|q| q.u).fold(f64::NEG_INFINITY, f64::max);
    for c in PROBED_C {
        let worst = probes
            .iter()
            .filter(|q| q.u < c * (1.0 + q.norm * q.norm))
            .map(|q| q.u)
            .fold(0.0, f64::max);
        if worst < max_u {
            r.constants.insert(format!("E_for_C={c}"), worst);
        }
    }
    r.notes.push(format!(
        "growth condition probed for finitely many C ({PROBED_C:?}) on a bounded box; \
         the 'for every C' quantifier cannot be verified"
    ));

    if r.verdict == ClauseVerdict::Fail {
        return r;
    }
    if growth >= GROWTH_PASS {
        r.verdict = ClauseVerdict::Pass;
    } else if growth >= GROWTH_FAIL {
        r.verdict = ClauseVerdict::Borderline;
        r.notes.push(format!(
            "U/(1+|x|^2) plateaus (outer/mid ratio {growth:.3}): growth is exactly quadratic"
        ));
    } else {
        r.verdict = ClauseVerdict::Fail;
        let w = outer
            .iter()
            .map(|&i| &probes[i])
            .min_by(|a, b| ratio(a).total_cmp(&ratio(b)))
            .expect("outer shell is non-empty");
        r.witnesses.push(Witness {
            point: w.x.clone(),
            detail: format!(
                "U/(1+|x|^2) = {:.6} decays towards the box boundary (sub-quadratic growth)",
                ratio(w)
            ),
        });
    }
    r
}

fn clause_b(p: &dyn Potential, beta: f64, probes: &[Probe]) -> ClauseReport {
    let laps: Option<Vec<f64>> = probes.iter().map(|q| p.laplacian(&q.x)).collect();
    let Some(laps) = laps else {
        return ClauseReport::skipped(Clause::B, "potential provides no Laplacian");
    };
    let mut r = ClauseReport::new(Clause::B);
    let mut by_energy: Vec<usize> = (0..probes.len()).collect();
    by_energy.sort_by(|&a, &b| probes[b].u.total_cmp(&probes[a].u));
    let need = min_region(probes.len());

    for k in 0..CLAUSE_B_GRID {
        let c = beta * CLAUSE_B_SPAN.powf(1.0 - k as f64 / CLAUSE_B_GRID as f64);
        let slack = |i: usize| (c * probes[i].grad_sq - laps[i]) / probes[i].u;
        let region = by_energy.iter().take_while(|&&i| slack(i) > 0.0).count();
        if region < need {
            continue;
        }
        let d = by_energy[..region]
            .iter()
            .map(|&i| slack(i))
            .fold(f64::INFINITY, f64::min);
        let e = by_energy.get(region).map(|&i| probes[i].u).unwrap_or(0.5);
        r.constants.insert("c".into(), c);
        r.constants.insert("d".into(), d);
        r.constants.insert("E".into(), e);
        r.constants.insert("region_probes".into(), region as f64);
        return r;
    }

    r.verdict = ClauseVerdict::Fail;
    // witness: the top-energy probe with the largest violation at c -> beta
    let c = beta * CLAUSE_B_SPAN.powf(1.0 / CLAUSE_B_GRID as f64);
    if let Some(&i) = by_energy[..need.min(by_energy.len())].iter().max_by(|&&a, &&b| {
        let va = laps[a] - c * probes[a].grad_sq;
        let vb = laps[b] - c * probes[b].grad_sq;
        va.total_cmp(&vb)
    }) {
        r.witnesses.push(Witness {
            point: probes[i].x.clone(),
            detail: format!(
                "Delta U = {} exceeds c |grad U|^2 = {} for every c < beta",
                laps[i],
                c * probes[i].grad_sq
            ),
        });
    }
    r
}

/// Probe directions for second-order checks: coordinate axes, plus the
/// diagonal and a few low-discrepancy directions in more than one dimension.
fn directions(dim: usize) -> Vec<Vec<f64>> {
    let mut dirs: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        })
        .collect();
    if dim > 1 {
        let s = 1.0 / (dim as f64).sqrt();
        dirs.push(vec![s; dim]);
        for u in super::halton(8, dim) {
            let v: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
            let n = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            if n > 1e-8 {
                dirs.push(v.iter().map(|t| t / n).collect());
            }
        }
    }
    dirs
}

fn clause_c(p: &dyn Potential, probes: &[Probe]) -> ClauseReport {
    let dirs = directions(p.dim());
    let mut min_curv = f64::INFINITY;
    let mut at = None;
    for q in probes {
        for e in &dirs {
            let Some(v) = p.hessian_form(&q.x, e) else {
                return ClauseReport::skipped(Clause::C, "potential provides no Hessian form");
            };
            if !(v >= min_curv) {
                min_curv = v;
                at = Some(q.x.clone());
            }
        }
    }
    let mut r = ClauseReport::new(Clause::C);
    if !min_curv.is_finite() {
        r.verdict = ClauseVerdict::Fail;
        r.witnesses.push(Witness {
            point: at.unwrap_or_default(),
            detail: "non-finite Hessian form".into(),
        });
        return r;
    }
    r.constants.insert("min_curvature".into(), min_curv);
    r.constants.insert("C".into(), (-min_curv).max(0.0));
    r
}

/// Directional estimates of `D^3 U(x)(e,e,e)` and `D^4 U(x)(e,e,e,e)` from
/// central differences of the Hessian form.
fn fd_higher(p: &dyn Potential, x: &[f64], e: &[f64]) -> Option<(f64, f64)> {
    let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let delta = 1e-3 * scale;
    let shifted = |t: f64| -> Vec<f64> { x.iter().zip(e).map(|(a, b)| a + t * b).collect() };
    let hp = p.hessian_form(&shifted(delta), e)?;
    let h0 = p.hessian_form(x, e)?;
    let hm = p.hessian_form(&shifted(-delta), e)?;
    Some(((hp - hm) / (2.0 * delta), (hp - 2.0 * h0 + hm) / (delta * delta)))
}

/// Estimated derivative norms of order 2..=4 at `x`; `None` when the
/// potential offers neither analytic norms nor a Hessian form.
pub(crate) fn derivative_norms(p: &dyn Potential, x: &[f64]) -> Option<[f64; 3]> {
    let analytic: Option<Vec<f64>> = (2..=4).map(|k| p.derivative_norm(k, x)).collect();
    if let Some(a) = analytic {
        return Some([a[0], a[1], a[2]]);
    }
    let mut out = [0.0f64; 3];
    for e in directions(p.dim()) {
        out[0] = out[0].max(p.hessian_form(x, &e)?.abs());
        let (d3, d4) = fd_higher(p, x, &e)?;
        out[1] = out[1].max(d3.abs());
        out[2] = out[2].max(d4.abs());
    }
    Some(out)
}

fn clause_d(p: &dyn Potential, probes: &[Probe]) -> ClauseReport {
    let mut ratios = Vec::with_capacity(probes.len());
    let mut per_order = [0.0f64; 4];
    for q in probes {
        let Some(norms) = derivative_norms(p, &q.x) else {
            return ClauseReport::skipped(
                Clause::D,
                "potential provides neither derivative norms nor a Hessian form",
            );
        };
        let vals = [q.grad_sq.sqrt(), norms[0], norms[1], norms[2]];
        for (m, v) in per_order.iter_mut().zip(vals) {
            *m = m.max(v / q.u);
        }
        ratios.push(vals.iter().fold(0.0f64, |a, &b| a.max(b)) / q.u);
    }
    let mut r = ClauseReport::new(Clause::D);
    if p.derivative_norm(3, &probes[0].x).is_none() {
        r.notes
            .push("third/fourth derivatives estimated by directional finite differences".into());
    }
    let (imax, cmax) = ratios
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("probes are non-empty");
    r.constants.insert("C".into(), cmax);
    for (k, v) in per_order.iter().enumerate() {
        r.constants.insert(format!("order_{}", k + 1), *v);
    }
    let (outer, mid) = shells(probes);
    let growth = median(outer.iter().map(|&i| ratios[i]).collect()) / median(mid.iter().map(|&i| ratios[i]).collect());
    r.constants.insert("growth_factor".into(), growth);
    if !cmax.is_finite() || (growth > GROWTH_PASS && outer.contains(&imax)) {
        r.verdict = ClauseVerdict::Fail;
        r.witnesses.push(Witness {
            point: probes[imax].x.clone(),
            detail: format!("derivative/U ratio {cmax:.6} keeps growing towards the box boundary"),
        });
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    /// Smallest `C` with `U(x) <= U(y) exp(C |x - y|)` over all pairs (both
    /// orientations).
    pub constant: f64,
    /// Lower bound on the clause-D gradient constant implied by `constant`:
    /// `sup |grad U| / U >= constant`.
    pub implied_gradient_bound: f64,
    pub pairs_checked: usize,
    /// Index of the pair attaining `constant`, if any pair needed `C > 0`.
    pub worst_pair: Option<usize>,
    pub holds: bool,
}

/// Fits the exponential envelope `|U(x)| <= |U(y)| exp(C |x - y|)`.
pub fn exponential_envelope_check(
    p: &dyn Potential,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<EnvelopeReport, PotentialError> {
    if pairs.is_empty() {
        return Err(PotentialError::InvalidInput("no pairs supplied".into()));
    }
    let mut constant = 0.0f64;
    let mut worst = None;
    let mut logs = Vec::with_capacity(pairs.len());
    for (k, (x, y)) in pairs.iter().enumerate() {
        if x.len() != p.dim() || y.len() != p.dim() {
            return Err(PotentialError::InvalidInput(format!(
                "pair {k} does not match the potential dimension"
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite(format!("pair {k}")));
        }
        let (ux, uy) = (p.value(x).abs(), p.value(y).abs());
        if !(ux.is_finite() && uy.is_finite() && ux > 0.0 && uy > 0.0) {
            return Err(PotentialError::NonFinite(format!(
                "U at pair {k} is zero or non-finite"
            )));
        }
        let dist = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dlog = (ux.ln() - uy.ln()).abs();
        logs.push((dlog, dist));
        if dist > 0.0 {
            let c = dlog / dist;
            if c > constant {
                constant = c;
                worst = Some(k);
            }
        }
    }
    let holds = logs
        .iter()
        .all(|&(dlog, dist)| dlog <= constant * dist * (1.0 + 1e-12) + 1e-300);
    Ok(EnvelopeReport {
        constant,
        implied_gradient_bound: constant,
        pairs_checked: pairs.len(),
        worst_pair: worst,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{builtin_potential, FnPotential};

    fn smoothed_abs() -> FnPotential {
        FnPotential::new(
            "smoothed-abs",
            1,
            |x| 1.0 + (1.0 + x[0] * x[0]).sqrt(),
            |x, g| g[0] = x[0] / (1.0 + x[0] * x[0]).sqrt(),
        )
        .with_hessian_form(|x, e| e[0] * e[0] / (1.0 + x[0] * x[0]).powf(1.5))
    }

    #[test]
    fn quartic_passes_every_clause() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let r = validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -5.0, 5.0), 1000).unwrap();
        for c in &r.clauses {
            assert_eq!(c.verdict, ClauseVerdict::Pass, "{:?}: {:?}", c.clause, c);
        }
        let c = r.fitted_c().unwrap();
        assert!(c > 0.0 && c < 1.0);
        // at the fitted c, the region {U > E} is the high-energy tail
        assert!(r.clause(Clause::B).constant("d").unwrap() > 0.0);
    }

    #[test]
    fn quartic_clause_b_inequality_holds_in_region() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let r = validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -5.0, 5.0), 1000).unwrap();
        let b = r.clause(Clause::B);
        let (c, d, e) = (
            b.constant("c").unwrap(),
            b.constant("d").unwrap(),
            b.constant("E").unwrap(),
        );
        // direct evaluation: Delta U = 3x^2, |grad U|^2 = x^6
        for x in ProbeBox::cube(1, -5.0, 5.0).points(1000) {
            let t = x[0];
            let u = 1.0 + t.powi(4) / 4.0;
            if u > e {
                assert!(3.0 * t * t <= c * t.powi(6) - d * u + 1e-9, "x = {t}");
            }
        }
    }

    #[test]
    fn smoothed_abs_fails_growth() {
        let r = validate_assumptions(&smoothed_abs(), 1.0, &ProbeBox::cube(1, -5.0, 5.0), 500).unwrap();
        let a = r.clause(Clause::A);
        assert_eq!(a.verdict, ClauseVerdict::Fail);
        assert!(!a.witnesses.is_empty());
    }

    #[test]
    fn quadratic_growth_is_flagged_borderline() {
        let p = builtin_potential("quadratic", &[], 1).unwrap();
        let r = validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -5.0, 5.0), 500).unwrap();
        let a = r.clause(Clause::A);
        assert_eq!(a.verdict, ClauseVerdict::Borderline);
        assert!(a.notes.iter().any(|n| n.contains("exactly quadratic")));
    }

    #[test]
    fn missing_derivatives_skip_never_pass() {
        let p = FnPotential::new(
            "no-hessian",
            1,
            |x| 1.0 + x[0].powi(4) / 4.0,
            |x, g| g[0] = x[0].powi(3),
        );
        let r = validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -3.0, 3.0), 200).unwrap();
        for c in [Clause::B, Clause::C, Clause::D] {
            assert_eq!(r.clause(c).verdict, ClauseVerdict::Skipped);
        }
    }

    #[test]
    fn every_fail_carries_a_witness() {
        let bad = FnPotential::new("neg", 1, |x| x[0] - 10.0, |_, g| g[0] = 1.0).with_hessian_form(|_, _| 0.0);
        let r = validate_assumptions(&bad, 1.0, &ProbeBox::cube(1, -3.0, 3.0), 200).unwrap();
        for c in &r.clauses {
            if c.verdict == ClauseVerdict::Fail {
                assert!(!c.witnesses.is_empty(), "{:?}", c.clause);
            }
        }
        assert_eq!(r.clause(Clause::A).verdict, ClauseVerdict::Fail);
    }

    #[test]
    fn rejects_too_few_probes() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        assert!(validate_assumptions(&p, 1.0, &ProbeBox::cube(1, -5.0, 5.0), 99).is_err());
    }

    #[test]
    fn finite_difference_higher_derivatives_match_analytic() {
        let p = builtin_potential("double-well-confined", &[1.3], 1).unwrap();
        let fd_only = FnPotential::new(
            "dw-fd",
            1,
            |x| 1.0 + (x[0] * x[0] - 1.69).powi(2) / 4.0,
            |x, g| g[0] = x[0] * (x[0] * x[0] - 1.69),
        )
        .with_hessian_form(|x, e| (3.0 * x[0] * x[0] - 1.69) * e[0] * e[0]);
        for x in ProbeBox::cube(1, -4.0, 4.0).points(200) {
            let a = derivative_norms(&p, &x).unwrap();
            let f = derivative_norms(&fd_only, &x).unwrap();
            for (u, v) in a.iter().zip(&f) {
                assert!((u - v).abs() <= 1e-4 * u.abs().max(1.0), "{u} vs {v} at {x:?}");
            }
        }
    }

    #[test]
    fn envelope_trivial_cases() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let same: Vec<_> = (0..10).map(|i| (vec![i as f64], vec![i as f64])).collect();
        assert_eq!(exponential_envelope_check(&p, &same).unwrap().constant, 0.0);
        let r = exponential_envelope_check(&p, &[(vec![0.0], vec![0.0])]).unwrap();
        assert_eq!(r.constant, 0.0);
        assert!(r.holds);
        assert!(exponential_envelope_check(&p, &[]).is_err());
        assert!(exponential_envelope_check(&p, &[(vec![f64::NAN], vec![0.0])]).is_err());
    }

    fn quartic_pairs(lo: f64, hi: f64, shift: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let n = 121;
        let pts: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64 + shift)
            .collect();
        let mut pairs = Vec::new();
        for &a in &pts {
            for &b in &pts {
                pairs.push((vec![a], vec![b]));
            }
        }
        pairs
    }

    #[test]
    fn quartic_envelope_holds_on_pairs() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let r = exponential_envelope_check(&p, &quartic_pairs(-3.0, 3.0, 0.0)).unwrap();
        assert!(r.holds && r.constant.is_finite() && r.constant > 0.0);
        // sup |U'/U| = 12^(3/4)/4 at x^4 = 12 bounds the pairwise constant
        let sup = 12f64.powf(0.75) / 4.0;
        assert!(r.constant <= sup + 1e-12 && r.constant > 0.9 * sup);
        for (x, y) in quartic_pairs(-3.0, 3.0, 0.0) {
            let d = (x[0] - y[0]).abs();
            assert!(p.value(&x) <= p.value(&y) * (r.constant * d).exp() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn envelope_is_translation_consistent() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let base = exponential_envelope_check(&p, &quartic_pairs(-3.0, 3.0, 0.0)).unwrap();
        let resolution = 6.0 / 120.0;
        for shift in [0.05, -0.1, 0.3] {
            let moved = exponential_envelope_check(&p, &quartic_pairs(-3.0, 3.0, shift)).unwrap();
            assert!(
                (moved.constant - base.constant).abs() < resolution,
                "shift {shift}: {} vs {}",
                moved.constant,
                base.constant
            );
        }
    }
}
