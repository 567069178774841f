//! One runner per subcommand. Each writes its artifacts through an
//! [`Output`], which only accepts bare file names inside the output
//! directory.

use std::path::{Path, PathBuf};

use mala_core::diagnostics::{
    euler_transience_probe, geo_ergodicity_classifier, lyapunov_drift_probe, minorization_overlap,
    minorization_plateau, rejection_scaling, two_term_tv_probe, DiagnosticReport, FittedConstant, LyapunovForm,
    LyapunovSpec, MinorizationOptions, RejectionMethod, TransienceConfig, Verdict,
};
use mala_core::dynamics::{
    coupled_replicas, run_chain_on_stream, ChainSummary, CouplingSummary, Kernel, RunConfig, TrajectoryRecorder,
};
use mala_core::oracle1d::{build_kernel, exit_probability, kernel_power_tv, propagate_blocks, stationary_measure};
use mala_core::potential::{validate_assumptions, AssumptionReport, ClauseVerdict, ProbeBox};
use mala_core::quadrature::ols;
use mala_core::reporting::{csv_string, svg_string, to_sorted_json, CurveSeries, ReportingError, Scale};
use mala_core::Potential;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, Experiment, ExperimentSpec};
use crate::manifest::{is_plain_name, Artifact};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(String),
    #[error("cannot write {path}: {reason}")]
    Io { path: String, reason: String },
}

fn run_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Run(e.to_string())
}

/// Collects artifacts written to one directory.
pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, HarnessError> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
            path: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), HarnessError> {
        if !is_plain_name(name) {
            return Err(run_err(format!(
                "refusing to write `{name}` outside the output directory"
            )));
        }
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| HarnessError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact::of(name, bytes));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        let s = to_sorted_json(value).map_err(run_err)?;
        self.write(name, s.as_bytes())
    }

    /// `stem.csv` when the series share one x grid, else one CSV per
    /// series; `stem.svg` with every series that has two or more points.
    pub fn curves(&mut self, stem: &str, title: &str, series: &[CurveSeries]) -> Result<(), HarnessError> {
        if series.is_empty() {
            return Ok(());
        }
        match csv_string(series) {
            Ok(s) => self.write(&format!("{stem}.csv"), s.as_bytes())?,
            Err(ReportingError::GridMismatch) => {
                for (i, c) in series.iter().enumerate() {
                    let s = csv_string(std::slice::from_ref(c)).map_err(run_err)?;
                    self.write(&format!("{stem}-{}.csv", i + 1), s.as_bytes())?;
                }
            }
            Err(e) => return Err(run_err(e)),
        }
        let drawable: Vec<CurveSeries> = series.iter().filter(|c| c.points.len() >= 2).cloned().collect();
        if !drawable.is_empty() {
            let svg = svg_string(&drawable, title).map_err(run_err)?;
            self.write(&format!("{stem}.svg"), svg.as_bytes())?;
        }
        Ok(())
    }

    /// `report.json` plus the report's curves.
    pub fn report(&mut self, rep: &DiagnosticReport, title: &str) -> Result<(), HarnessError> {
        self.json("report.json", rep)?;
        self.curves("curves", title, &rep.curves)
    }

    pub fn into_artifacts(self) -> Vec<Artifact> {
        self.artifacts
    }
}

pub struct Outcome {
    pub verdict: Option<Verdict>,
    pub summary: String,
}

fn short(v: f64) -> String {
    if v == 0.0 || (1e-3..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.4e}")
    }
}

fn verdict_outcome(rep: &DiagnosticReport) -> Outcome {
    let mut summary = rep.verdict.to_string();
    for c in rep.constants.iter().take(3) {
        summary.push_str(&format!(", {} = {}", c.name, short(c.value)));
    }
    Outcome {
        verdict: Some(rep.verdict),
        summary,
    }
}

pub fn run_experiment(spec: &ExperimentSpec, out: &mut Output) -> Result<Outcome, HarnessError> {
    let hash = spec.config_hash();
    match spec.experiment {
        Experiment::Sample => sample(spec, out, &hash),
        Experiment::Couple => couple(spec, out, &hash),
        Experiment::ExitProb => exit_prob(spec, out, &hash),
        Experiment::ValidatePotential => validate(spec, out, &hash),
        other => {
            let mut rep = match other {
                Experiment::KernelTv => kernel_tv(spec, out, &hash)?,
                Experiment::RejectScaling => reject_scaling(spec)?,
                Experiment::Lyapunov => lyapunov(spec)?,
                Experiment::Transience => transience(spec)?,
                Experiment::Minorization => minorization(spec)?,
                Experiment::Classify => classify(spec)?,
                Experiment::TwoTerm => two_term(spec, out, &hash)?,
                _ => unreachable!("handled above"),
            };
            rep.config_hash = Some(hash);
            out.report(&rep, &format!("{other}: {}", spec.text("potential.family")?))?;
            Ok(verdict_outcome(&rep))
        }
    }
}

#[derive(Serialize)]
struct ChainsReport<'a, T: Serialize> {
    experiment: &'a str,
    config_hash: &'a str,
    kernel: Option<Kernel>,
    chains: Vec<T>,
}

fn sample(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<Outcome, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let kernel = spec.kernel()?;
    let start = spec.point("probe.start", p.dim())?;
    let replicas = spec.count("run.replicas")?.max(1);
    let mut rec = TrajectoryRecorder::new(p.dim(), spec.count("probe.thin")?.max(1));
    let first = run_chain_on_stream(&p, &start, &cfg, kernel, 0, Some(&mut rec)).map_err(run_err)?;
    let rest: Vec<ChainSummary> = (1..replicas)
        .into_par_iter()
        .map(|r| run_chain_on_stream(&p, &start, &cfg, kernel, r, None))
        .collect::<Result<_, _>>()
        .map_err(run_err)?;
    let mut chains = vec![first];
    chains.extend(rest);
    out.write("trajectory.csv", rec.as_csv().as_bytes())?;
    let diverged = chains.iter().filter(|c| c.diverged_at.is_some()).count();
    let acc: Vec<f64> = chains.iter().filter_map(|c| c.acceptance_rate).collect();
    out.json(
        "report.json",
        &ChainsReport {
            experiment: "sample",
            config_hash: hash,
            kernel: Some(kernel),
            chains,
        },
    )?;
    let mut summary = format!("{replicas} {kernel} chain(s), {diverged} diverged");
    if !acc.is_empty() {
        summary.push_str(&format!(
            ", mean acceptance {:.4}",
            acc.iter().sum::<f64>() / acc.len() as f64
        ));
    }
    Ok(Outcome { verdict: None, summary })
}

fn couple(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<Outcome, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let start = spec.point("probe.start", p.dim())?;
    let replicas = spec.count("run.replicas")?.max(1);
    let runs: Vec<CouplingSummary> = coupled_replicas(&p, &start, &cfg, replicas).map_err(run_err)?;
    let n = cfg.n_steps.max(1);
    let checkpoints: Vec<u64> = (1..=100u64).map(|j| (n * j).div_ceil(100)).collect();
    let mut ks = checkpoints.clone();
    ks.dedup();
    let frac = |f: &dyn Fn(&CouplingSummary) -> Option<u64>| -> Vec<(f64, f64)> {
        ks.iter()
            .map(|&k| {
                let c = runs.iter().filter(|r| f(r).is_some_and(|t| t <= k)).count();
                (k as f64, c as f64 / runs.len() as f64)
            })
            .collect()
    };
    let series = [
        CurveSeries::new("P(decoupled by k)", "step", "probability", frac(&|r| r.decoupled_at)),
        CurveSeries::new("P(tau_h <= k)", "step", "probability", frac(&|r| r.tau_h)),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(run_err)?;
    out.curves("coupling", "coupled MALA and patched MALA", &series)?;
    let consistent = runs.iter().all(|r| r.consistent);
    let decoupled = runs.iter().filter(|r| r.decoupled_at.is_some()).count();
    out.json(
        "report.json",
        &ChainsReport {
            experiment: "couple",
            config_hash: hash,
            kernel: None,
            chains: runs,
        },
    )?;
    let verdict = if consistent { Verdict::Pass } else { Verdict::Fail };
    Ok(Outcome {
        verdict: Some(verdict),
        summary: format!("{verdict}, {decoupled} of {replicas} pairs decoupled"),
    })
}

fn oracle_start(spec: &ExperimentSpec) -> Result<f64, HarnessError> {
    Ok(spec.point("probe.start", 1)?[0])
}

fn kernel_tv(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let kind = spec.kernel()?;
    let grid = spec.grid()?;
    let k_max = spec.count("probe.k_max")?.max(1) as usize;
    let raw = spec.flag("probe.raw_steps")?;
    let k = build_kernel(&p, &cfg, &grid, kind).map_err(run_err)?;
    if spec.flag("probe.dump_kernel")? {
        out.write("kernel.bin", &k.to_dump(hash))?;
    }
    let level = (kind == Kernel::Patched).then(|| cfg.e_h());
    let target = stationary_measure(&p, cfg.beta, &grid, level).map_err(run_err)?;
    let s = grid.nearest(oracle_start(spec)?);
    let (tv, x_label) = if raw {
        (kernel_power_tv(&k, s, k_max, &target).map_err(run_err)?, "step")
    } else {
        (
            propagate_blocks(&k, s, cfg.block_len(), k_max, &target).map_err(run_err)?,
            "block",
        )
    };
    let monotone = tv.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let verdict = match (kind, monotone) {
        (Kernel::Ula, _) => Verdict::Inconclusive,
        (_, true) => Verdict::Pass,
        (_, false) => Verdict::Fail,
    };
    let mut rep = DiagnosticReport::new("kernel-tv", verdict);
    let n = tv.len();
    rep.constants
        .push(FittedConstant::new("final_tv", tv[n - 1], "grid oracle", grid.len()));
    let (xs, ys): (Vec<f64>, Vec<f64>) = tv
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 1e-10)
        .map(|(i, v)| ((i + 1) as f64, v.ln()))
        .unzip();
    if xs.len() >= 3 {
        if let Some((_, slope, se)) = ols(&xs, &ys) {
            rep.constants.push(
                FittedConstant::new(&format!("rho_per_{x_label}"), slope.exp(), "log-linear OLS", xs.len())
                    .with_std_error(slope.exp() * se),
            );
        }
    }
    rep.notes.push(format!(
        "{kind} kernel on {} nodes over [{}, {}], block length {}",
        grid.len(),
        grid.nodes[0],
        grid.nodes[grid.len() - 1],
        cfg.block_len()
    ));
    if kind == Kernel::Ula {
        rep.notes
            .push("ULA does not leave mu invariant; the curve includes its bias".into());
    }
    rep.curves.push(
        CurveSeries::indexed(format!("{kind} TV"), x_label, "total variation", &tv)
            .map_err(run_err)?
            .with_scales(Scale::Linear, Scale::Log),
    );
    Ok(rep)
}

fn exit_prob(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<Outcome, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let grid = spec.grid()?;
    let k_max = spec.count("probe.k_max")?.max(1) as usize;
    let raw = spec.flag("probe.raw_steps")?;
    let l = cfg.block_len();
    let n = if raw { k_max } else { k_max * l };
    let k = build_kernel(&p, &cfg, &grid, Kernel::Mala).map_err(run_err)?;
    let s = grid.nearest(oracle_start(spec)?);
    let e_h = cfg.e_h();
    let curve = exit_probability(&k, s, e_h, n).map_err(run_err)?;
    let values: Vec<f64> = if raw {
        curve
    } else {
        (1..=k_max).map(|b| curve[b * l - 1]).collect()
    };
    let ok = values.windows(2).all(|w| w[1] >= w[0]) && values.iter().all(|v| (0.0..=1.0).contains(v));
    let mut rep = DiagnosticReport::new("exit-prob", if ok { Verdict::Pass } else { Verdict::Fail });
    rep.config_hash = Some(hash.to_string());
    rep.constants.push(FittedConstant::new(
        "final_exit_probability",
        values[values.len() - 1],
        "absorbing grid oracle",
        grid.len(),
    ));
    rep.constants.push(FittedConstant::new("e_h", e_h, "patched level", 1));
    rep.curves.push(
        CurveSeries::indexed(
            "P(tau_h <= n)",
            if raw { "step" } else { "block" },
            "probability",
            &values,
        )
        .map_err(run_err)?,
    );
    out.report(&rep, "MALA exit probability")?;
    Ok(verdict_outcome(&rep))
}

fn reject_scaling(spec: &ExperimentSpec) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let x = spec.point("probe.x", p.dim())?;
    let hs: Vec<f64> = spec.reals("probe.h")?;
    let method = match spec.text("probe.method")? {
        "quadrature" => RejectionMethod::Quadrature {
            panels: spec.count("probe.panels")? as usize,
        },
        "gauss-hermite" => RejectionMethod::GaussHermite {
            nodes: spec.count("probe.gh_nodes")? as usize,
        },
        _ => RejectionMethod::MonteCarlo {
            samples: spec.count("probe.samples")?,
            seed: spec.count("run.seed")?,
        },
    };
    let p_moment = u32::try_from(spec.count("probe.p")?).map_err(run_err)?;
    rejection_scaling(&p, spec.real("run.beta")?, &x, &hs, p_moment, &method).map_err(run_err)
}

fn lyapunov(spec: &ExperimentSpec) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let form = match spec.text("probe.form")? {
        "exp_theta_u" => LyapunovForm::ExpThetaU,
        "u_power_ell" => LyapunovForm::UPowerEll,
        _ => LyapunovForm::UPowerExp,
    };
    let ell = u32::try_from(spec.count("probe.ell")?).map_err(run_err)?;
    let ly = LyapunovSpec {
        theta: cfg.theta,
        form,
        ell: (form != LyapunovForm::ExpThetaU).then_some(ell),
    };
    let grid = spec.grid()?;
    lyapunov_drift_probe(&p, &cfg, &ly, &grid.nodes, spec.kernel()?).map_err(run_err)
}

fn transience(spec: &ExperimentSpec) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let noise = spec.flag("probe.noise")?;
    let steps = spec.count("run.steps")?;
    let (h, beta) = (spec.real("run.h")?, spec.real("run.beta")?);
    let mut tc = if noise {
        TransienceConfig::new(h, beta, steps, spec.count("run.replicas")?)
    } else {
        TransienceConfig::deterministic(h, beta, steps)
    };
    tc = tc.with_kind(spec.kernel()?).with_seed(spec.count("run.seed")?);
    tc.ell = u32::try_from(spec.count("probe.ell")?).map_err(run_err)?;
    tc.threshold = spec.real("probe.threshold")?;
    let mut rep = euler_transience_probe(&p, &tc, &[spec.point("probe.start", p.dim())?]).map_err(run_err)?;
    if !noise {
        rep.notes
            .push("noiseless mode runs one chain; run.replicas is ignored".into());
    }
    Ok(rep)
}

fn minorization(spec: &ExperimentSpec) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let beta = spec.real("run.beta")?;
    let hs = spec.reals("probe.h")?;
    let e_h = spec
        .real("run.e_h")
        .map_err(|_| run_err("minorization needs run.e_h (a fixed patched level)"))?;
    let opts = MinorizationOptions {
        bounds: (spec.real("grid.lo")?, spec.real("grid.hi")?),
        nodes: spec.count("grid.nodes")? as usize,
        n_starts: spec.count("probe.n_starts")? as usize,
        e_h,
    };
    let e = spec.real("probe.level")?;
    if hs.len() == 1 {
        let cfg = RunConfig::new(hs[0], beta).with_level(e_h);
        minorization_overlap(&p, &cfg, e, &opts).map_err(run_err)
    } else {
        minorization_plateau(&p, beta, e, &hs, &opts).map_err(run_err)
    }
}

fn classify(spec: &ExperimentSpec) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let r = geo_ergodicity_classifier(
        &p,
        spec.real("run.beta")?,
        spec.real("run.h")?,
        spec.count("probe.ray_samples")? as usize,
    )
    .map_err(run_err)?;
    r.to_report().map_err(run_err)
}

fn two_term(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<DiagnosticReport, HarnessError> {
    let p = spec.potential()?;
    let cfg = spec.run_config()?;
    let r = two_term_tv_probe(
        &p,
        &cfg,
        oracle_start(spec)?,
        &spec.grid()?,
        spec.count("probe.k_max")? as usize,
    )
    .map_err(run_err)?;
    #[derive(Serialize)]
    struct Details<'a> {
        config_hash: &'a str,
        two_term: &'a mala_core::diagnostics::TwoTermReport,
    }
    out.json(
        "details.json",
        &Details {
            config_hash: hash,
            two_term: &r,
        },
    )?;
    r.to_report().map_err(run_err)
}

fn validate(spec: &ExperimentSpec, out: &mut Output, hash: &str) -> Result<Outcome, HarnessError> {
    let p = spec.potential()?;
    let r = spec.real("probe.box")?;
    if !(r > 0.0) {
        return Err(run_err("probe.box must be positive"));
    }
    let report: AssumptionReport = validate_assumptions(
        &p,
        spec.real("run.beta")?,
        &ProbeBox::cube(p.dim(), -r, r),
        spec.count("probe.n_probes")? as usize,
    )
    .map_err(run_err)?;
    #[derive(Serialize)]
    struct Wrapped<'a> {
        config_hash: &'a str,
        assumptions: &'a AssumptionReport,
    }
    out.json(
        "report.json",
        &Wrapped {
            config_hash: hash,
            assumptions: &report,
        },
    )?;
    let failed = report.clauses.iter().any(|c| c.verdict == ClauseVerdict::Fail);
    let verdict = if failed { Verdict::Fail } else { Verdict::Pass };
    let parts: Vec<String> = report
        .clauses
        .iter()
        .map(|c| format!("{:?} {:?}", c.clause, c.verdict))
        .collect();
    Ok(Outcome {
        verdict: Some(verdict),
        summary: format!("{verdict}: {}", parts.join(", ")),
    })
}
