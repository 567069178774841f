use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use mala_core::diagnostics::Verdict;

use crate::config::{read_config, Experiment, ExperimentSpec, RawConfig};
use crate::experiments::{run_experiment, HarnessError, Output};
use crate::manifest::{Manifest, FILE_NAME};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mala-lab", version, about = "Experiments on ULA, MALA and patched MALA")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run sampler chains and write a trajectory
    Sample(RunArgs),
    /// Run MALA and patched MALA on shared randomness
    Couple(RunArgs),
    /// Total variation to stationarity from the grid kernel
    KernelTv(RunArgs),
    /// Probability that MALA has left the level set {U < E_h}
    ExitProb(RunArgs),
    /// Log-log slope of E|1 - alpha|^p against h
    RejectScaling(RunArgs),
    /// One-step Lyapunov drift fit
    Lyapunov(RunArgs),
    /// Divergence of the Euler chain
    Transience(RunArgs),
    /// Overlap of patched kernel rows over a sublevel set
    Minorization(RunArgs),
    /// Geometric ergodicity classifier
    Classify(RunArgs),
    /// Two-term decomposition of the MALA distance to stationarity
    TwoTerm(RunArgs),
    /// Spot-check the growth and regularity conditions of a potential
    ValidatePotential(RunArgs),
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        use Command::*;
        match self {
            Sample(a) => (Experiment::Sample, a),
            Couple(a) => (Experiment::Couple, a),
            KernelTv(a) => (Experiment::KernelTv, a),
            ExitProb(a) => (Experiment::ExitProb, a),
            RejectScaling(a) => (Experiment::RejectScaling, a),
            Lyapunov(a) => (Experiment::Lyapunov, a),
            Transience(a) => (Experiment::Transience, a),
            Minorization(a) => (Experiment::Minorization, a),
            Classify(a) => (Experiment::Classify, a),
            TwoTerm(a) => (Experiment::TwoTerm, a),
            ValidatePotential(a) => (Experiment::ValidatePotential, a),
        }
    }
}

/// Flags shared by every subcommand. Values are checked against the
/// config schema, so `--h 2^-4` and `--h 0.0625` are the same.
#[derive(Debug, Args, Default)]
pub struct RunArgs {
    /// Key/value or JSON config file, or a manifest.json from an earlier run
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (output.dir)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root seed (run.seed)
    #[arg(long)]
    pub seed: Option<String>,
    /// Exit with status 1 when the verdict is FAIL
    #[arg(long)]
    pub strict: bool,
    /// Worker threads (0 = all cores)
    #[arg(long, env = "MALA_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Index curves by raw steps instead of blocks of floor(1/h) steps
    #[arg(long)]
    pub raw_steps: bool,

    #[arg(long)]
    pub family: Option<String>,
    /// Comma-separated family parameters
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    #[arg(long)]
    pub dim: Option<String>,
    /// Step size, or a list such as 2^-4..2^-12 for reject-scaling and minorization
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    /// Lyapunov exponent, or `auto`
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub e_star: Option<String>,
    #[arg(long)]
    pub e_h: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long)]
    pub replicas: Option<String>,
    /// ula, mala or patched
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_lo: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_hi: Option<String>,
    #[arg(long)]
    pub grid_nodes: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    /// Moment order for reject-scaling
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub ell: Option<String>,
    #[arg(long)]
    pub k_max: Option<String>,
    /// Sublevel E for minorization
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long)]
    pub n_starts: Option<String>,
    #[arg(long)]
    pub ray_samples: Option<String>,
    /// quadrature, gauss-hermite or monte-carlo
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub panels: Option<String>,
    #[arg(long)]
    pub gh_nodes: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    /// Noiseless transience run
    #[arg(long)]
    pub no_noise: bool,
    #[arg(long)]
    pub threshold: Option<String>,
    /// exp_theta_u, u_power_ell or u_power_exp
    #[arg(long)]
    pub form: Option<String>,
    #[arg(long)]
    pub n_probes: Option<String>,
    #[arg(long = "box")]
    pub box_radius: Option<String>,
    #[arg(long)]
    pub thin: Option<String>,
    #[arg(long)]
    pub dump_kernel: bool,
    /// Any schema key, as KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

impl RunArgs {
    /// Command-line values keyed by schema name.
    pub fn flag_values(&self, exp: Experiment) -> Result<RawConfig, HarnessError> {
        let mut m = RawConfig::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| HarnessError::Run(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            m.insert(k.trim().to_string(), v.trim().to_string());
        }
        let h_key = if exp.sweeps_h() { "probe.h" } else { "run.h" };
        let pairs: [(&str, &Option<String>); 31] = [
            ("run.seed", &self.seed),
            ("potential.family", &self.family),
            ("potential.params", &self.params),
            ("potential.dim", &self.dim),
            (h_key, &self.h),
            ("run.beta", &self.beta),
            ("run.theta", &self.theta),
            ("run.e_star", &self.e_star),
            ("run.e_h", &self.e_h),
            ("run.steps", &self.steps),
            ("run.replicas", &self.replicas),
            ("run.kernel", &self.kernel),
            ("grid.lo", &self.grid_lo),
            ("grid.hi", &self.grid_hi),
            ("grid.nodes", &self.grid_nodes),
            ("probe.start", &self.start),
            ("probe.x", &self.x),
            ("probe.p", &self.p),
            ("probe.ell", &self.ell),
            ("probe.k_max", &self.k_max),
            ("probe.level", &self.level),
            ("probe.n_starts", &self.n_starts),
            ("probe.ray_samples", &self.ray_samples),
            ("probe.method", &self.method),
            ("probe.panels", &self.panels),
            ("probe.gh_nodes", &self.gh_nodes),
            ("probe.samples", &self.samples),
            ("probe.threshold", &self.threshold),
            ("probe.form", &self.form),
            ("probe.n_probes", &self.n_probes),
            ("probe.box", &self.box_radius),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                m.insert(k.to_string(), v.clone());
            }
        }
        if let Some(t) = &self.thin {
            m.insert("probe.thin".into(), t.clone());
        }
        if let Some(o) = &self.out {
            m.insert("output.dir".into(), o.display().to_string());
        }
        for (flag, k, v) in [
            (self.raw_steps, "probe.raw_steps", "true"),
            (self.no_noise, "probe.noise", "false"),
            (self.dump_kernel, "probe.dump_kernel", "true"),
        ] {
            if flag {
                m.insert(k.into(), v.into());
            }
        }
        Ok(m)
    }
}

/// Resolves the spec for one invocation.
pub fn build_spec(exp: Experiment, args: &RunArgs) -> Result<ExperimentSpec, HarnessError> {
    let file = match &args.config {
        Some(p) => read_config(p)?,
        None => RawConfig::new(),
    };
    let flags = args.flag_values(exp)?;
    Ok(ExperimentSpec::resolve(exp, &file, &flags)?)
}

fn execute(exp: Experiment, args: RunArgs) -> Result<i32, HarnessError> {
    let started = Instant::now();
    let spec = build_spec(exp, &args)?;
    let threads = args.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    let dir = spec.output_dir();
    let mut out = Output::new(&dir)?;
    let outcome = pool.install(|| run_experiment(&spec, &mut out))?;
    let manifest = Manifest::new(
        &spec,
        outcome.verdict.map(|v| v.to_string()),
        out.into_artifacts(),
        pool.current_num_threads(),
        started.elapsed().as_secs_f64(),
    );
    let path = dir.join(FILE_NAME);
    std::fs::write(&path, manifest.to_json()).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    println!("{exp}: {} [{}]", outcome.summary, dir.display());
    Ok(if args.strict && outcome.verdict == Some(Verdict::Fail) {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

/// Parses `argv` (program name first), runs the experiment and returns the
/// process exit code: 0 on success, 1 on a FAIL verdict under `--strict`,
/// 2 on usage, config or run errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (exp, args) = cli.command.split();
    match execute(exp, args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mala-lab {exp}: {e}");
            EXIT_USAGE
        }
    }
}
