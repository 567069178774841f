use serde::Serialize;

use super::{DynamicsError, Kernel, RunConfig};
use crate::potential::Potential;
use crate::{DIVERGENCE_ENERGY, DIVERGENCE_POSITION};

/// Position of a chain with cached `U` and `grad U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub u: f64,
    pub grad: Vec<f64>,
    pub step: u64,
    pub accepted_count: u64,
    pub proposed_exits: u64,
}

impl ChainState {
    pub fn new(p: &dyn Potential, x: &[f64]) -> Result<Self, DynamicsError> {
        if x.len() != p.dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: p.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState(x.to_vec()));
        }
        let u = p.value(x);
        let grad = p.grad_vec(x);
        if !u.is_finite() {
            return Err(DynamicsError::NonFiniteState(x.to_vec()));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(DynamicsError::NonFiniteGradient(x.to_vec()));
        }
        Ok(Self {
            position: x.to_vec(),
            u,
            grad,
            step: 0,
            accepted_count: 0,
            proposed_exits: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepOutcome {
    pub proposal: Vec<f64>,
    /// `-beta G(x, proposal)`; `-inf` when the proposal is non-finite.
    pub log_ratio: f64,
    pub accepted: bool,
    /// The proposal satisfied `U >= E_h` (reported for every kernel).
    pub exited_level_set: bool,
    /// ULA only: the new position crossed the divergence thresholds.
    pub diverged: bool,
    /// `U` or `grad U` at the proposal was not finite.
    pub non_finite: bool,
    pub new_state: ChainState,
}

/// Reusable buffers for in-place stepping.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    pub noise: Vec<f64>,
    pub prop: Vec<f64>,
    pub prop_grad: Vec<f64>,
}

impl Scratch {
    pub fn new(dim: usize) -> Self {
        Self {
            noise: vec![0.0; dim],
            prop: vec![0.0; dim],
            prop_grad: vec![0.0; dim],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct StepInfo {
    pub log_ratio: f64,
    pub accepted: bool,
    pub exited: bool,
    pub diverged: bool,
    pub non_finite: bool,
}

fn check_uniform(u: f64) -> Result<(), DynamicsError> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(DynamicsError::InvalidUniform(u))
    }
}

/// `G(x, y)` from cached values.
fn g_parts(h: f64, x: &[f64], ux: f64, gx: &[f64], y: &[f64], uy: f64, gy: &[f64]) -> f64 {
    let mut inner = 0.0;
    let mut gy2 = 0.0;
    let mut gx2 = 0.0;
    for i in 0..x.len() {
        inner += (gy[i] + gx[i]) * (y[i] - x[i]);
        gy2 += gy[i] * gy[i];
        gx2 += gx[i] * gx[i];
    }
    (uy - ux) - 0.5 * inner + 0.25 * h * (gy2 - gx2)
}

/// Performs one step of `kernel` in place, using the supplied noise (in
/// `scratch.noise`) and uniform.
pub(crate) fn advance(
    p: &dyn Potential,
    cfg: &RunConfig,
    kernel: Kernel,
    state: &mut ChainState,
    uniform: f64,
    scratch: &mut Scratch,
) -> Result<StepInfo, DynamicsError> {
    if state.grad.iter().any(|g| !g.is_finite()) {
        return Err(DynamicsError::NonFiniteGradient(state.position.clone()));
    }
    let h = cfg.h;
    let s = cfg.noise_scale();
    for i in 0..state.position.len() {
        scratch.prop[i] = state.position[i] - h * state.grad[i] + s * scratch.noise[i];
    }
    let uy = p.value(&scratch.prop);
    p.gradient(&scratch.prop, &mut scratch.prop_grad);
    let finite =
        uy.is_finite() && scratch.prop.iter().all(|v| v.is_finite()) && scratch.prop_grad.iter().all(|v| v.is_finite());
    let exited = !(uy < cfg.e_h());
    let log_ratio = if finite {
        let g = g_parts(
            h,
            &state.position,
            state.u,
            &state.grad,
            &scratch.prop,
            uy,
            &scratch.prop_grad,
        );
        -cfg.beta * g
    } else {
        f64::NEG_INFINITY
    };

    let (accepted, diverged, non_finite) = match kernel {
        Kernel::Ula => {
            let diverged =
                !finite || uy > DIVERGENCE_ENERGY || scratch.prop.iter().any(|v| v.abs() > DIVERGENCE_POSITION);
            (true, diverged, !finite)
        }
        Kernel::Mala | Kernel::Patched => {
            let non_finite = !finite || log_ratio.is_nan();
            let blocked = non_finite || (kernel == Kernel::Patched && exited);
            let accept = !blocked && (log_ratio >= 0.0 || uniform.ln() < log_ratio);
            (accept, false, non_finite)
        }
    };

    state.step += 1;
    if exited {
        state.proposed_exits += 1;
    }
    if accepted {
        state.accepted_count += 1;
        state.position.copy_from_slice(&scratch.prop);
        state.grad.copy_from_slice(&scratch.prop_grad);
        state.u = uy;
    }
    Ok(StepInfo {
        log_ratio,
        accepted,
        exited,
        diverged,
        non_finite,
    })
}

fn step_with(
    p: &dyn Potential,
    state: &ChainState,
    cfg: &RunConfig,
    kernel: Kernel,
    noise: &[f64],
    uniform: f64,
) -> Result<StepOutcome, DynamicsError> {
    if noise.len() != state.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: state.dim(),
            got: noise.len(),
        });
    }
    let mut scratch = Scratch::new(state.dim());
    scratch.noise.copy_from_slice(noise);
    let mut next = state.clone();
    let info = advance(p, cfg, kernel, &mut next, uniform, &mut scratch)?;
    Ok(StepOutcome {
        proposal: scratch.prop,
        log_ratio: info.log_ratio,
        accepted: info.accepted,
        exited_level_set: info.exited,
        diverged: info.diverged,
        non_finite: info.non_finite,
        new_state: next,
    })
}

/// Forward Euler proposal `x - h grad U(x) + sqrt(2h/beta) noise`.
pub fn euler_proposal(state: &ChainState, cfg: &RunConfig, noise: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if noise.len() != state.dim() {
        return Err(DynamicsError::DimensionMismatch {
            expected: state.dim(),
            got: noise.len(),
        });
    }
    if state.grad.iter().any(|g| !g.is_finite()) {
        return Err(DynamicsError::NonFiniteGradient(state.position.clone()));
    }
    let s = cfg.noise_scale();
    Ok(state
        .position
        .iter()
        .zip(&state.grad)
        .zip(noise)
        .map(|((x, g), z)| x - cfg.h * g + s * z)
        .collect())
}

/// `G(x,y) = U(y) - U(x) - <grad U(y) + grad U(x), y - x>/2
///  + h/4 (|grad U(y)|^2 - |grad U(x)|^2)`.
///
/// The MALA log acceptance ratio equals `-beta G(x, y)`.
pub fn g_function(p: &dyn Potential, cfg: &RunConfig, x: &[f64], y: &[f64]) -> f64 {
    let gx = p.grad_vec(x);
    let gy = p.grad_vec(y);
    g_parts(cfg.h, x, p.value(x), &gx, y, p.value(y), &gy)
}

/// `min(0, -beta G(x, y))`.
pub fn log_acceptance(p: &dyn Potential, cfg: &RunConfig, x: &[f64], y: &[f64]) -> f64 {
    (-cfg.beta * g_function(p, cfg, x, y)).min(0.0)
}

/// Unnormalized log target density `-beta U(x)`.
pub fn log_target(p: &dyn Potential, beta: f64, x: &[f64]) -> f64 {
    -beta * p.value(x)
}

/// `log q_h(x, y) = -(n/2) log(4 pi h / beta) - beta |y - x + h grad U(x)|^2 / (4h)`.
pub fn log_euler_density(p: &dyn Potential, cfg: &RunConfig, x: &[f64], y: &[f64]) -> Result<f64, DynamicsError> {
    if !(cfg.h > 0.0) {
        return Err(DynamicsError::InvalidConfig(format!(
            "h must be positive (got {})",
            cfg.h
        )));
    }
    let g = p.grad_vec(x);
    let sq: f64 = (0..x.len()).map(|i| (y[i] - x[i] + cfg.h * g[i]).powi(2)).sum();
    let n = x.len() as f64;
    Ok(-0.5 * n * (4.0 * std::f64::consts::PI * cfg.h / cfg.beta).ln() - cfg.beta * sq / (4.0 * cfg.h))
}

/// `log(pi(y) q(y,x)) - log(pi(x) q(x,y))` evaluated term by term. Loses
/// all precision in the far tails; used to cross-check [`g_function`].
pub fn direct_log_ratio(p: &dyn Potential, cfg: &RunConfig, x: &[f64], y: &[f64]) -> Result<f64, DynamicsError> {
    Ok(log_target(p, cfg.beta, y) + log_euler_density(p, cfg, y, x)?
        - log_target(p, cfg.beta, x)
        - log_euler_density(p, cfg, x, y)?)
}

/// One MALA step with the given noise and uniform (`uniform` in `[0, 1]`).
pub fn mala_step(
    p: &dyn Potential,
    state: &ChainState,
    cfg: &RunConfig,
    noise: &[f64],
    uniform: f64,
) -> Result<StepOutcome, DynamicsError> {
    check_uniform(uniform)?;
    step_with(p, state, cfg, Kernel::Mala, noise, uniform)
}

/// One patched MALA step: as [`mala_step`], but proposals with
/// `U >= E_h` are rejected outright.
pub fn patched_mala_step(
    p: &dyn Potential,
    state: &ChainState,
    cfg: &RunConfig,
    noise: &[f64],
    uniform: f64,
) -> Result<StepOutcome, DynamicsError> {
    check_uniform(uniform)?;
    if !(state.u < cfg.e_h()) {
        return Err(DynamicsError::OutsideLevelSet {
            u: state.u,
            e_h: cfg.e_h(),
        });
    }
    step_with(p, state, cfg, Kernel::Patched, noise, uniform)
}

/// One forward Euler step; always moves.
pub fn ula_step(
    p: &dyn Potential,
    state: &ChainState,
    cfg: &RunConfig,
    noise: &[f64],
) -> Result<StepOutcome, DynamicsError> {
    step_with(p, state, cfg, Kernel::Ula, noise, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::builtin_potential;
    use proptest::prelude::*;

    fn quartic() -> crate::potential::Builtin {
        builtin_potential("quartic", &[], 1).unwrap()
    }

    fn quadratic() -> crate::potential::Builtin {
        builtin_potential("quadratic", &[], 1).unwrap()
    }

    #[test]
    fn proposal_examples() {
        let q = quadratic();
        let cfg = RunConfig::new(0.1, 1.0);
        let s0 = ChainState::new(&q, &[0.0]).unwrap();
        assert_eq!(euler_proposal(&s0, &cfg, &[0.0]).unwrap(), vec![0.0]);
        let s1 = ChainState::new(&q, &[1.0]).unwrap();
        assert!((euler_proposal(&s1, &cfg, &[0.0]).unwrap()[0] - 0.9).abs() < 1e-15);
        let p = quartic();
        let s3 = ChainState::new(&p, &[3.0]).unwrap();
        let y = euler_proposal(&s3, &RunConfig::new(0.5, 1.0), &[0.0]).unwrap();
        assert_eq!(y, vec![-10.5]);
        assert!(euler_proposal(&s3, &cfg, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn g_examples() {
        let q = quadratic();
        let cfg = RunConfig::new(0.1, 1.0);
        assert_eq!(g_function(&q, &cfg, &[1.3], &[1.3]), 0.0);
        let g = g_function(&q, &cfg, &[1.0], &[2.0]);
        assert!((g - 0.075).abs() < 1e-15);
        let direct = direct_log_ratio(&q, &cfg, &[1.0], &[2.0]).unwrap();
        assert!((direct + 0.075).abs() < 1e-12);
        assert!((log_acceptance(&q, &cfg, &[1.0], &[2.0]).exp() - 0.927_743_486_328_553).abs() < 1e-12);
    }

    #[test]
    fn euler_density_examples() {
        let q = quadratic();
        let cfg = RunConfig::new(0.25, 1.0);
        let v = log_euler_density(&q, &cfg, &[0.0], &[1.0]).unwrap();
        assert!((v - (-0.5 * std::f64::consts::PI.ln() - 1.0)).abs() < 1e-14);
        let cfg = RunConfig::new(0.1, 2.0);
        let top = log_euler_density(&q, &cfg, &[1.0], &[0.9]).unwrap();
        assert!((top + 0.5 * (4.0 * std::f64::consts::PI * 0.05).ln()).abs() < 1e-14);
        let mut bad = cfg;
        bad.h = 0.0;
        assert!(log_euler_density(&q, &bad, &[1.0], &[0.9]).is_err());
    }

    #[test]
    fn euler_density_normalizes() {
        let p = quartic();
        let cfg = RunConfig::new(0.05, 1.0);
        let x = [1.2];
        let m = 1.2 - 0.05 * 1.2f64.powi(3);
        let rule = crate::quadrature::CompositeRule::new(m - 5.0, m + 5.0, 50, 10);
        let total = rule.integrate(|y| log_euler_density(&p, &cfg, &x, &[y]).unwrap().exp());
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn downhill_moves_always_accepted() {
        let q = quadratic();
        let cfg = RunConfig::new(0.1, 1.0);
        let s = ChainState::new(&q, &[2.0]).unwrap();
        // proposal 1.5 (noise chosen accordingly) is downhill: G = h/4 (y^2 - x^2) < 0
        let z = (1.5 - 1.8) / cfg.noise_scale();
        for u in [0.0, 1e-300, 0.5, 1.0] {
            let o = mala_step(&q, &s, &cfg, &[z], u).unwrap();
            assert!(o.accepted);
            assert!((o.new_state.position[0] - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn uphill_acceptance_threshold() {
        let q = quadratic();
        let cfg = RunConfig::new(0.1, 1.0);
        let s = ChainState::new(&q, &[1.0]).unwrap();
        let z = (2.0 - 0.9) / cfg.noise_scale();
        let a = (-0.075f64).exp();
        assert!(mala_step(&q, &s, &cfg, &[z], a * 0.999).unwrap().accepted);
        let o = mala_step(&q, &s, &cfg, &[z], a * 1.001).unwrap();
        assert!(!o.accepted);
        assert_eq!(o.new_state.position, vec![1.0]);
        assert!(mala_step(&q, &s, &cfg, &[z], 1.5).is_err());
        assert!(mala_step(&q, &s, &cfg, &[z], f64::NAN).is_err());
    }

    #[test]
    fn patched_rejects_exits_and_matches_mala_inside() {
        let p = quartic();
        let cfg = RunConfig::new(0.05, 1.0).with_level(2.0);
        let s = ChainState::new(&p, &[1.0]).unwrap();
        // a big kick lands outside {U < 2}
        let out = patched_mala_step(&p, &s, &cfg, &[8.0], 1e-300).unwrap();
        assert!(out.exited_level_set && !out.accepted);
        let inside = patched_mala_step(&p, &s, &cfg, &[0.3], 0.4).unwrap();
        let m = mala_step(&p, &s, &cfg, &[0.3], 0.4).unwrap();
        assert!(!inside.exited_level_set);
        assert_eq!(inside, m);
        let far = ChainState::new(&p, &[3.0]).unwrap();
        assert!(patched_mala_step(&p, &far, &cfg, &[0.0], 0.5).is_err());
    }

    #[test]
    fn ula_deterministic_blowup() {
        let p = quartic();
        let cfg = RunConfig::new(0.5, 1.0);
        let mut s = ChainState::new(&p, &[3.0]).unwrap();
        let o = ula_step(&p, &s, &cfg, &[0.0]).unwrap();
        assert_eq!(o.new_state.position, vec![-10.5]);
        s = o.new_state;
        let o = ula_step(&p, &s, &cfg, &[0.0]).unwrap();
        assert!((o.new_state.position[0] - 568.3125).abs() < 1e-9);
        let mut s = o.new_state;
        let mut steps = 2;
        loop {
            let o = ula_step(&p, &s, &cfg, &[0.0]).unwrap();
            steps += 1;
            if o.diverged {
                break;
            }
            s = o.new_state;
            assert!(steps < 5);
        }
        assert!(steps <= 5);
    }

    #[test]
    fn quadratic_ula_contracts() {
        let q = quadratic();
        let cfg = RunConfig::new(0.1, 1.0);
        let mut s = ChainState::new(&q, &[4.0]).unwrap();
        for k in 1..=20 {
            s = ula_step(&q, &s, &cfg, &[0.0]).unwrap().new_state;
            assert!((s.position[0] - 4.0 * 0.9f64.powi(k)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_proposal_is_rejected_and_flagged() {
        let p = quartic();
        let cfg = RunConfig::new(0.5, 1.0);
        let s = ChainState::new(&p, &[1.0]).unwrap();
        let o = mala_step(&p, &s, &cfg, &[1e200], 0.5).unwrap();
        assert!(o.non_finite && !o.accepted);
        assert_eq!(o.new_state.position, s.position);
        assert_eq!(o.log_ratio, f64::NEG_INFINITY);
    }

    #[test]
    fn state_construction_errors() {
        let p = quartic();
        assert!(ChainState::new(&p, &[f64::NAN]).is_err());
        assert!(ChainState::new(&p, &[1.0, 2.0]).is_err());
        assert!(ChainState::new(&p, &[1e90]).is_err());
    }

    proptest! {
        #[test]
        fn g_is_antisymmetric(x in -4.0f64..4.0, y in -4.0f64..4.0, h in 1e-4f64..0.5) {
            let p = quartic();
            let cfg = RunConfig::new(h, 1.0);
            let s = g_function(&p, &cfg, &[x], &[y]) + g_function(&p, &cfg, &[y], &[x]);
            prop_assert!(s.abs() <= 1e-12);
        }

        #[test]
        fn g_matches_direct_ratio(x in -4.0f64..4.0, y in -4.0f64..4.0, h in 1e-3f64..0.2, beta in 0.5f64..2.0) {
            let p = quartic();
            let cfg = RunConfig::new(h, beta);
            let g = -beta * g_function(&p, &cfg, &[x], &[y]);
            let d = direct_log_ratio(&p, &cfg, &[x], &[y]).unwrap();
            prop_assert!((g - d).abs() <= 1e-8 * d.abs().max(1.0), "{} vs {}", g, d);
        }

        #[test]
        fn outcome_respects_accept_flag(x in -3.0f64..3.0, z in -4.0f64..4.0, u in 0.0f64..1.0) {
            let p = quartic();
            let cfg = RunConfig::new(0.05, 1.0);
            let s = ChainState::new(&p, &[x]).unwrap();
            let o = mala_step(&p, &s, &cfg, &[z], u).unwrap();
            if o.accepted {
                prop_assert_eq!(&o.new_state.position, &o.proposal);
            } else {
                prop_assert_eq!(&o.new_state.position, &s.position);
            }
            prop_assert_eq!(o.new_state.u, p.value(&o.new_state.position));
            prop_assert_eq!(o.new_state.grad, p.grad_vec(&o.new_state.position));
        }
    }
}
