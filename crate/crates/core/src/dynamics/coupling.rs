use rayon::prelude::*;
use serde::Serialize;

use super::step::{advance, ChainState, Scratch};
use super::{DynamicsError, Kernel, RunConfig};
use crate::potential::Potential;
use crate::rng::StreamRng;

/// MALA and patched MALA driven by one noise/uniform stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSummary {
    pub stream: u64,
    pub steps: u64,
    /// First step `k` with `X_k != Xbar_k`.
    pub decoupled_at: Option<u64>,
    /// First step `k` with `U(X_k) >= E_h` for the MALA chain.
    pub tau_h: Option<u64>,
    /// `decoupled_at >= tau_h` whenever the chains decoupled.
    pub consistent: bool,
    pub mala_final: Vec<f64>,
    pub patched_final: Vec<f64>,
}

/// Runs MALA and patched MALA in lockstep from `init` on stream 0.
pub fn coupled_run(p: &dyn Potential, init: &[f64], cfg: &RunConfig) -> Result<CouplingSummary, DynamicsError> {
    coupled_on_stream(p, init, cfg, 0)
}

fn coupled_on_stream(
    p: &dyn Potential,
    init: &[f64],
    cfg: &RunConfig,
    stream: u64,
) -> Result<CouplingSummary, DynamicsError> {
    cfg.validate()?;
    let mut mala = ChainState::new(p, init)?;
    let e_h = cfg.e_h();
    if !(mala.u < e_h) {
        return Err(DynamicsError::OutsideLevelSet { u: mala.u, e_h });
    }
    let mut patched = mala.clone();
    let mut rng = StreamRng::new(cfg.seed, stream);
    let mut s_mala = Scratch::new(mala.dim());
    let mut s_patched = Scratch::new(mala.dim());
    let mut decoupled_at = None;
    let mut tau_h = None;

    for k in 1..=cfg.n_steps {
        let uniform = rng.step_draw(&mut s_mala.noise);
        s_patched.noise.copy_from_slice(&s_mala.noise);
        advance(p, cfg, Kernel::Mala, &mut mala, uniform, &mut s_mala)?;
        advance(p, cfg, Kernel::Patched, &mut patched, uniform, &mut s_patched)?;
        if tau_h.is_none() && mala.u >= e_h {
            tau_h = Some(k);
        }
        if decoupled_at.is_none()
            && mala
                .position
                .iter()
                .zip(&patched.position)
                .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            decoupled_at = Some(k);
        }
    }
    let consistent = match (decoupled_at, tau_h) {
        (Some(d), Some(t)) => d >= t,
        (Some(_), None) => false,
        (None, _) => true,
    };
    Ok(CouplingSummary {
        stream,
        steps: cfg.n_steps,
        decoupled_at,
        tau_h,
        consistent,
        mala_final: mala.position,
        patched_final: patched.position,
    })
}

/// Independent coupled runs on streams `0..replicas`, in stream order.
pub fn coupled_replicas(
    p: &dyn Potential,
    init: &[f64],
    cfg: &RunConfig,
    replicas: u64,
) -> Result<Vec<CouplingSummary>, DynamicsError> {
    (0..replicas)
        .into_par_iter()
        .map(|r| coupled_on_stream(p, init, cfg, r))
        .collect()
}
