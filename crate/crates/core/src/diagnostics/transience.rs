use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invalid, DiagnosticReport, DiagnosticsError, FittedConstant, Verdict};
use crate::dynamics::{
    mala_step, patched_mala_step, run_chain_on_stream, ula_step, ChainState, Kernel, Recorder, RunConfig, StepOutcome,
};
use crate::potential::Potential;
use crate::reporting::{CurveSeries, Scale};
use crate::DIVERGENCE_POSITION;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransienceConfig {
    pub h: f64,
    pub beta: f64,
    /// Moment order for `E|X_k|^ell`.
    pub ell: u32,
    pub n_steps: u64,
    /// Chains per start point; must be 1 when `noise` is off.
    pub replicas: u64,
    pub seed: u64,
    pub noise: bool,
    /// Diverged fraction above which the run is called transient.
    pub threshold: f64,
    pub kind: Kernel,
    /// Number of evenly spaced checkpoints on the running curves.
    pub checkpoints: u64,
}

impl TransienceConfig {
    pub fn new(h: f64, beta: f64, n_steps: u64, replicas: u64) -> Self {
        Self {
            h,
            beta,
            ell: 2,
            n_steps,
            replicas,
            seed: 0,
            noise: true,
            threshold: 0.5,
            kind: Kernel::Ula,
            checkpoints: 100,
        }
    }

    /// Single noiseless chain per start.
    pub fn deterministic(h: f64, beta: f64, n_steps: u64) -> Self {
        Self {
            noise: false,
            replicas: 1,
            checkpoints: n_steps.max(1),
            ..Self::new(h, beta, n_steps, 1)
        }
    }

    pub fn with_kind(mut self, kind: Kernel) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn thin(&self) -> u64 {
        (self.n_steps / self.checkpoints.max(1)).max(1)
    }
}

/// `|x|^ell` at each checkpoint until divergence.
struct Moments {
    thin: u64,
    ell: i32,
    values: Vec<f64>,
}

impl Recorder for Moments {
    fn thin(&self) -> u64 {
        self.thin
    }

    fn record(&mut self, o: &StepOutcome) {
        if o.diverged || !o.new_state.step.is_multiple_of(self.thin) {
            return;
        }
        let r = o.new_state.position.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.values.push(r.powi(self.ell));
    }
}

struct ChainTrace {
    diverged_at: Option<u64>,
    moments: Vec<f64>,
}

fn noiseless(
    p: &dyn Potential,
    start: &[f64],
    cfg: &RunConfig,
    tc: &TransienceConfig,
) -> Result<ChainTrace, DiagnosticsError> {
    let mut state = ChainState::new(p, start)?;
    let zero = vec![0.0; start.len()];
    let thin = tc.thin();
    let mut moments = Vec::new();
    for k in 1..=tc.n_steps {
        // uniform 1 accepts exactly the moves with alpha = 1
        let out = match tc.kind {
            Kernel::Ula => ula_step(p, &state, cfg, &zero)?,
            Kernel::Mala => mala_step(p, &state, cfg, &zero, 1.0)?,
            Kernel::Patched => patched_mala_step(p, &state, cfg, &zero, 1.0)?,
        };
        if out.diverged {
            return Ok(ChainTrace {
                diverged_at: Some(k),
                moments,
            });
        }
        state = out.new_state;
        if k % thin == 0 {
            let r = state.position.iter().map(|v| v * v).sum::<f64>().sqrt();
            moments.push(r.powi(tc.ell as i32));
        }
    }
    Ok(ChainTrace {
        diverged_at: None,
        moments,
    })
}

/// Runs chains from every start and tracks the diverged fraction and the
/// running moment `E|X_k|^ell` over surviving chains. TRANSIENT iff the
/// final diverged fraction exceeds the threshold or the moment exceeds
/// `1e50`; otherwise STABLE-AT-HORIZON, which proves nothing beyond the
/// horizon.
pub fn euler_transience_probe(
    p: &dyn Potential,
    tc: &TransienceConfig,
    starts: &[Vec<f64>],
) -> Result<DiagnosticReport, DiagnosticsError> {
    if starts.is_empty() {
        return Err(invalid("need at least one start point"));
    }
    if tc.noise && tc.replicas < 100 {
        return Err(invalid(format!("need at least 100 replicas (got {})", tc.replicas)));
    }
    if !tc.noise && tc.replicas != 1 {
        return Err(invalid("noiseless runs use exactly one replica per start"));
    }
    if tc.n_steps == 0 || tc.checkpoints == 0 || tc.ell == 0 {
        return Err(invalid("n_steps, checkpoints and ell must be positive"));
    }
    if !(tc.threshold > 0.0 && tc.threshold < 1.0) {
        return Err(invalid("threshold must lie in (0, 1)"));
    }
    let cfg = RunConfig::new(tc.h, tc.beta).with_seed(tc.seed).with_steps(tc.n_steps);
    cfg.validate()?;
    let total = starts.len() as u64 * tc.replicas;
    let thin = tc.thin();
    let traces: Vec<ChainTrace> = (0..total)
        .into_par_iter()
        .map(|r| {
            let start = &starts[(r % starts.len() as u64) as usize];
            if !tc.noise {
                return noiseless(p, start, &cfg, tc);
            }
            let mut rec = Moments {
                thin,
                ell: tc.ell as i32,
                values: Vec::new(),
            };
            let s = run_chain_on_stream(p, start, &cfg, tc.kind, r, Some(&mut rec))?;
            Ok(ChainTrace {
                diverged_at: s.diverged_at,
                moments: rec.values,
            })
        })
        .collect::<Result<_, DiagnosticsError>>()?;

    let n_ck = (tc.n_steps / thin) as usize;
    let mut frac = Vec::with_capacity(n_ck);
    let mut log_moment = Vec::with_capacity(n_ck);
    for j in 0..n_ck {
        let step = (j as u64 + 1) * thin;
        let dead = traces
            .iter()
            .filter(|t| t.diverged_at.is_some_and(|d| d <= step))
            .count();
        frac.push((step as f64, dead as f64 / total as f64));
        let (sum, n) = traces
            .iter()
            .filter_map(|t| t.moments.get(j))
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        if n > 0 {
            log_moment.push((step as f64, (sum / n as f64).log10()));
        }
    }
    let diverged = traces.iter().filter(|t| t.diverged_at.is_some()).count();
    let fraction = diverged as f64 / total as f64;
    let max_log_moment = log_moment.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let moment_cap = (DIVERGENCE_POSITION).log10();
    let transient = fraction > tc.threshold || max_log_moment > moment_cap;

    let mut rep = DiagnosticReport::new(
        "transience",
        if transient {
            Verdict::Transient
        } else {
            Verdict::StableAtHorizon
        },
    );
    let method = if tc.noise {
        "paired-seed simulation"
    } else {
        "noiseless iteration"
    };
    rep.replicas = Some(total as usize);
    rep.constants.push(FittedConstant::new(
        "diverged_fraction",
        fraction,
        method,
        total as usize,
    ));
    if let Some(first) = traces.iter().filter_map(|t| t.diverged_at).min() {
        rep.constants.push(FittedConstant::new(
            "first_divergence_step",
            first as f64,
            method,
            total as usize,
        ));
    }
    if max_log_moment.is_finite() {
        rep.constants.push(FittedConstant::new(
            "max_log10_moment",
            max_log_moment,
            "mean over surviving chains at checkpoints",
            total as usize,
        ));
    }
    rep.notes.push(format!(
        "{} chains of {} over {} steps, h = {}, ell = {}",
        total, tc.kind, tc.n_steps, tc.h, tc.ell
    ));
    if !transient {
        rep.notes
            .push("no divergence criterion met within the horizon; this is not a proof of stability".into());
    }
    rep.curves
        .push(CurveSeries::new("diverged fraction", "step", "fraction", frac)?);
    if log_moment.len() >= 2 {
        rep.curves.push(
            CurveSeries::new(format!("log10 E|X|^{}", tc.ell), "step", "log10 moment", log_moment)?
                .with_scales(Scale::Linear, Scale::Linear),
        );
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;

    #[test]
    fn deterministic_quartic_blowup() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let rep = euler_transience_probe(&p, &TransienceConfig::deterministic(0.5, 1.0, 20), &[vec![3.0]]).unwrap();
        assert_eq!(rep.verdict, Verdict::Transient);
        assert!(rep.value("first_divergence_step") <= 5.0);
    }

    #[test]
    fn quadratic_is_stable() {
        let p = builtin_potential("quadratic", &[], 1).unwrap();
        let tc = TransienceConfig::new(0.1, 1.0, 2_000, 100).with_seed(5);
        let rep = euler_transience_probe(&p, &tc, &[vec![0.0], vec![50.0]]).unwrap();
        assert_eq!(rep.verdict, Verdict::StableAtHorizon);
        assert_eq!(rep.value("diverged_fraction"), 0.0);
    }

    #[test]
    fn mala_control_arm_never_diverges() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let tc = TransienceConfig::new(0.05, 1.0, 1_000, 100).with_seed(9);
        let ula = euler_transience_probe(&p, &tc, &[vec![10.0]]).unwrap();
        let mala = euler_transience_probe(&p, &tc.with_kind(Kernel::Mala), &[vec![10.0]]).unwrap();
        assert_eq!(ula.verdict, Verdict::Transient);
        assert_eq!(mala.verdict, Verdict::StableAtHorizon);
        assert_eq!(mala.value("diverged_fraction"), 0.0);
    }

    #[test]
    fn replica_floor() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        assert!(euler_transience_probe(&p, &TransienceConfig::new(0.01, 1.0, 10, 10), &[vec![0.0]]).is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let tc = TransienceConfig::new(0.2, 1.0, 300, 100).with_seed(1);
        let a = euler_transience_probe(&p, &tc, &[vec![3.0]]).unwrap();
        let b = euler_transience_probe(&p, &tc, &[vec![3.0]]).unwrap();
        assert_eq!(a, b);
    }
}
