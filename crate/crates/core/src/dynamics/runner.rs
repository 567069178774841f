use rayon::prelude::*;
use serde::Serialize;

use super::step::{advance, ChainState, Scratch, StepOutcome};
use super::{DynamicsError, Kernel, RunConfig};
use crate::potential::Potential;
use crate::rng::StreamRng;

/// Receives step outcomes from [`run_chain`].
pub trait Recorder {
    /// Record every `thin()`-th step (steps are counted from 1).
    fn thin(&self) -> u64 {
        1
    }

    fn record(&mut self, outcome: &StepOutcome);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainStatus {
    Completed,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub kernel: Kernel,
    pub stream: u64,
    pub status: ChainStatus,
    /// Steps actually executed.
    pub steps: u64,
    pub accepted: u64,
    /// `None` when no step was taken.
    pub acceptance_rate: Option<f64>,
    /// Largest energy of any visited state (including the start).
    pub max_u: f64,
    /// First step `k` with `U(X_k) >= E_h`.
    pub hitting_time: Option<u64>,
    /// First step whose proposal had `U >= E_h`.
    pub first_proposed_exit: Option<u64>,
    pub proposed_exits: u64,
    pub non_finite_proposals: u64,
    pub diverged_at: Option<u64>,
    /// Running mean of the position over steps `1..=steps`.
    pub mean: Option<Vec<f64>>,
    /// Running (population) variance of the position.
    pub variance: Option<Vec<f64>>,
    pub mean_u: Option<f64>,
    pub final_position: Vec<f64>,
}

/// Runs `cfg.n_steps` steps of `kernel` from `init` on stream 0 of
/// `cfg.seed`.
pub fn run_chain(
    p: &dyn Potential,
    init: &[f64],
    cfg: &RunConfig,
    kernel: Kernel,
    recorder: Option<&mut dyn Recorder>,
) -> Result<ChainSummary, DynamicsError> {
    run_chain_on_stream(p, init, cfg, kernel, 0, recorder)
}

/// As [`run_chain`], on an explicit stream of the root seed.
pub fn run_chain_on_stream(
    p: &dyn Potential,
    init: &[f64],
    cfg: &RunConfig,
    kernel: Kernel,
    stream: u64,
    mut recorder: Option<&mut dyn Recorder>,
) -> Result<ChainSummary, DynamicsError> {
    cfg.validate()?;
    let mut state = ChainState::new(p, init)?;
    let e_h = cfg.e_h();
    if kernel == Kernel::Patched && !(state.u < e_h) {
        return Err(DynamicsError::OutsideLevelSet { u: state.u, e_h });
    }
    let dim = state.dim();
    let mut rng = StreamRng::new(cfg.seed, stream);
    let mut scratch = Scratch::new(dim);
    let thin = recorder.as_ref().map(|r| r.thin().max(1)).unwrap_or(1);

    let mut max_u = state.u;
    let mut hitting_time = (state.u >= e_h).then_some(0);
    let mut first_proposed_exit = None;
    let mut non_finite = 0u64;
    let mut diverged_at = None;
    let mut mean = vec![0.0; dim];
    let mut m2 = vec![0.0; dim];
    let mut mean_u = 0.0;

    for k in 1..=cfg.n_steps {
        let uniform = rng.step_draw(&mut scratch.noise);
        let info = advance(p, cfg, kernel, &mut state, uniform, &mut scratch)?;
        if info.exited && first_proposed_exit.is_none() {
            first_proposed_exit = Some(k);
        }
        if info.non_finite {
            non_finite += 1;
        }
        if let Some(rec) = recorder.as_deref_mut() {
            if k % thin == 0 || info.diverged {
                rec.record(&StepOutcome {
                    proposal: scratch.prop.clone(),
                    log_ratio: info.log_ratio,
                    accepted: info.accepted,
                    exited_level_set: info.exited,
                    diverged: info.diverged,
                    non_finite: info.non_finite,
                    new_state: state.clone(),
                });
            }
        }
        if info.diverged {
            diverged_at = Some(k);
            break;
        }
        if state.u > max_u {
            max_u = state.u;
        }
        if hitting_time.is_none() && state.u >= e_h {
            hitting_time = Some(k);
        }
        let n = k as f64;
        for i in 0..dim {
            let d = state.position[i] - mean[i];
            mean[i] += d / n;
            m2[i] += d * (state.position[i] - mean[i]);
        }
        mean_u += (state.u - mean_u) / n;
    }

    let steps = state.step;
    let clean = steps - diverged_at.map_or(0, |_| 1);
    let moments = clean > 0;
    Ok(ChainSummary {
        kernel,
        stream,
        status: if diverged_at.is_some() {
            ChainStatus::Diverged
        } else {
            ChainStatus::Completed
        },
        steps,
        accepted: state.accepted_count,
        acceptance_rate: (steps > 0).then(|| state.accepted_count as f64 / steps as f64),
        max_u: if diverged_at.is_some() { f64::INFINITY } else { max_u },
        hitting_time: hitting_time.or(diverged_at),
        first_proposed_exit,
        proposed_exits: state.proposed_exits,
        non_finite_proposals: non_finite,
        diverged_at,
        mean: moments.then(|| mean.clone()),
        variance: moments.then(|| m2.iter().map(|v| v / clean as f64).collect()),
        mean_u: moments.then_some(mean_u),
        final_position: state.position,
    })
}

/// Runs `replicas` independent chains (streams `0..replicas`) in parallel.
/// The result is ordered by stream and independent of the thread count.
pub fn run_replicas(
    p: &dyn Potential,
    init: &[f64],
    cfg: &RunConfig,
    kernel: Kernel,
    replicas: u64,
) -> Result<Vec<ChainSummary>, DynamicsError> {
    (0..replicas)
        .into_par_iter()
        .map(|r| run_chain_on_stream(p, init, cfg, kernel, r, None))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;

    struct Collect(Vec<StepOutcome>, u64);

    impl Recorder for Collect {
        fn thin(&self) -> u64 {
            self.1
        }

        fn record(&mut self, o: &StepOutcome) {
            self.0.push(o.clone());
        }
    }

    #[test]
    fn zero_steps() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let s = run_chain(&p, &[0.0], &RunConfig::new(0.01, 1.0), Kernel::Mala, None).unwrap();
        assert_eq!(s.steps, 0);
        assert_eq!(s.acceptance_rate, None);
        assert_eq!(s.mean, None);
    }

    #[test]
    fn same_seed_same_summary() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(0.05, 1.0).with_seed(42).with_steps(5000);
        for k in Kernel::ALL {
            let a = run_chain(&p, &[0.5], &cfg, k, None).unwrap();
            let b = run_chain(&p, &[0.5], &cfg, k, None).unwrap();
            assert_eq!(a, b);
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
        let c = run_chain(&p, &[0.5], &cfg.with_seed(43), Kernel::Mala, None).unwrap();
        assert_ne!(
            c.final_position,
            run_chain(&p, &[0.5], &cfg, Kernel::Mala, None).unwrap().final_position
        );
    }

    #[test]
    fn recorder_thinning() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(0.05, 1.0).with_steps(100);
        let mut rec = Collect(Vec::new(), 10);
        run_chain(&p, &[0.0], &cfg, Kernel::Mala, Some(&mut rec)).unwrap();
        assert_eq!(rec.0.len(), 10);
        assert_eq!(rec.0[0].new_state.step, 10);
        // recording does not perturb the chain
        let a = run_chain(&p, &[0.0], &cfg, Kernel::Mala, None).unwrap();
        assert_eq!(a.final_position, rec.0.last().unwrap().new_state.position);
    }

    #[test]
    fn ula_divergence_stops_run() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(0.5, 1.0).with_steps(1000);
        let s = run_chain(&p, &[3.0], &cfg, Kernel::Ula, None).unwrap();
        assert_eq!(s.status, ChainStatus::Diverged);
        assert!(s.diverged_at.unwrap() <= 6);
        assert_eq!(s.steps, s.diverged_at.unwrap());
    }

    #[test]
    fn patched_never_leaves_level_set() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(0.1, 1.0).with_level(2.0).with_steps(20_000);
        let s = run_chain(&p, &[0.0], &cfg, Kernel::Patched, None).unwrap();
        assert!(s.max_u < cfg.e_h());
        assert!(s.proposed_exits > 0);
        assert_eq!(s.hitting_time, None);
        assert!(run_chain(&p, &[2.0], &cfg, Kernel::Patched, None).is_err());
    }

    #[test]
    fn replicas_are_ordered_and_thread_independent() {
        let p = builtin_potential("quartic", &[], 1).unwrap();
        let cfg = RunConfig::new(0.05, 1.0).with_seed(9).with_steps(200);
        let a = run_replicas(&p, &[0.0], &cfg, Kernel::Mala, 16).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_replicas(&p, &[0.0], &cfg, Kernel::Mala, 16).unwrap());
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, s)| s.stream == i as u64));
    }
}
