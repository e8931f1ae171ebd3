//! Batch front end: JSON config in, CSV files and a run manifest out.
//!
//! ```text
//! ptgpe <spectrum|states|critical|evolve> --config <file> [--out <dir>] [--dump-states] [--seed <int>]
//! ```
//!
//! A manifest written by a previous run is itself a valid config: its
//! `config` field holds the fully resolved parameters.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::continuation;
use crate::dynamics::{self, PropagationConfig, StabilityConfig};
use crate::error::{PtError, Result};
use crate::linear;
use crate::model::{Branch, Grid, ModelParams};
use crate::stationary::{self, Homotopy, NonlinearState, RealLoop, REAL_KAPPA_TOL};

type C64 = Complex64;

#[derive(Debug, Parser)]
#[command(name = "ptgpe", version, about = "PT-symmetric double delta well: spectra, states and dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also write wave function samples.
    #[arg(long)]
    pub dump_states: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep gamma and trace every branch.
    Spectrum(CommonArgs),
    /// Solve and dump individual states.
    States(CommonArgs),
    /// Locate the bifurcation and coalescence points.
    Critical(CommonArgs),
    /// Propagate an initial state in time.
    Evolve(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::States(_) => "states",
            Command::Critical(_) => "critical",
            Command::Evolve(_) => "evolve",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::Spectrum(a) | Command::States(a) | Command::Critical(a) | Command::Evolve(a) => a,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub a: Vec<f64>,
    pub g: Vec<f64>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    /// Also trace the analytically continued pair above the coalescence.
    #[serde(default)]
    pub continuation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRequest {
    pub gamma: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesConfig {
    pub requests: Vec<StateRequest>,
    /// Attach an empirical stability tag to every state.
    #[serde(default)]
    pub classify: bool,
    #[serde(default)]
    pub stability: Option<StabilityConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalConfig {
    pub a: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Ground,
    Excited,
    /// `(psi1 + e^{i phi} psi2) / sqrt(2)`, most of the density in the loss well.
    Superposition,
    ComplexDecaying,
    ComplexGrowing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    pub initial: InitialState,
    pub propagation: PropagationConfig,
    /// Relative size of a seeded smooth perturbation added to the initial state.
    #[serde(default)]
    pub perturbation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<StatesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical: Option<CriticalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmittedFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_sha256: String,
    pub files: Vec<EmittedFile>,
    pub failures: Vec<String>,
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let cfg = if value.get("command").is_some() && value.get("config").is_some() {
        serde_json::from_value(value["config"].clone())?
    } else {
        serde_json::from_value(value)?
    };
    Ok(cfg)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Output of one command before it is written.
#[derive(Debug, Default)]
pub struct RunOutput {
    /// File name relative to the output directory and its contents.
    pub files: Vec<(String, String)>,
    pub failures: Vec<String>,
    /// Attempted points; the failure fraction is measured against this.
    pub attempts: usize,
}

impl RunOutput {
    fn exit_code(&self) -> i32 {
        if self.attempts > 0 && self.failures.len() * 10 > self.attempts {
            2
        } else {
            0
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Short, stable tag for a parameter value in file names.
fn tag(x: f64) -> String {
    format!("{x}")
}

const SPECTRUM_HEADER: &str = "gamma,branch,re_kappa,im_kappa,re_energy,im_energy,g,converged,iterations,residual_norm";

#[derive(Debug, Clone)]
struct Row {
    gamma: f64,
    branch: String,
    kappa: C64,
    g: f64,
    converged: bool,
    iterations: usize,
    residual: f64,
}

impl Row {
    fn of(s: &NonlinearState) -> Self {
        Row {
            gamma: s.params().gamma,
            branch: s.branch().to_string(),
            kappa: s.kappa(),
            g: s.params().g,
            converged: true,
            iterations: s.report.iterations,
            residual: s.report.residual_norm,
        }
    }

    fn failed(gamma: f64, branch: Branch, g: f64) -> Self {
        Row {
            gamma,
            branch: branch.to_string(),
            kappa: C64::new(f64::NAN, f64::NAN),
            g,
            converged: false,
            iterations: 0,
            residual: f64::NAN,
        }
    }

    fn csv(&self) -> String {
        let e = -self.kappa * self.kappa;
        format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            num(self.gamma),
            self.branch,
            num(self.kappa.re),
            num(self.kappa.im),
            num(e.re),
            num(e.im),
            num(self.g),
            self.converged,
            self.iterations,
            num(self.residual)
        )
    }
}

fn gamma_grid(c: &SpectrumConfig) -> Result<Vec<f64>> {
    if !(c.gamma_step > 0.0) || c.gamma_max < c.gamma_min || c.gamma_min < 0.0 {
        return Err(PtError::Config("need 0 <= gamma_min <= gamma_max and gamma_step > 0".into()));
    }
    let n = ((c.gamma_max - c.gamma_min) / c.gamma_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| c.gamma_min + i as f64 * c.gamma_step).collect())
}

pub fn state_csv(s: &NonlinearState) -> String {
    let mut out = format!("# kappa = {} {}\n# phase_convention = {}\nx,re_psi,im_psi,abs_psi\n", num(s.kappa().re), num(s.kappa().im), s.state.phase_convention);
    for (x, p) in s.state.grid.x.iter().zip(&s.state.psi) {
        let _ = writeln!(out, "{},{},{},{}", num(*x), num(p.re), num(p.im), num(p.norm()));
    }
    out
}

fn state_file(s: &NonlinearState) -> String {
    let p = s.params();
    format!("state_a{}_g{}_gamma{}_{}.csv", tag(p.a), tag(p.g), tag(p.gamma), s.branch())
}

/// Complex branch swept downwards from the top of the gamma range; `gammas`
/// must all lie above the bifurcation.
fn complex_sweep(params: &ModelParams, gammas: &[f64]) -> Vec<(f64, Option<NonlinearState>)> {
    let mut out = Vec::new();
    let Some(&top) = gammas.last() else { return out };
    let mut cur = match stationary::complex_state(&params.with_gamma(top)) {
        Ok(s) => s,
        Err(_) => return gammas.iter().rev().map(|&g| (g, None)).collect(),
    };
    for &gm in gammas.iter().rev() {
        let trace = stationary::continue_branch(&cur, Homotopy::Gamma, gm, 4);
        if !trace.reached(gm, Homotopy::Gamma) {
            out.push((gm, None));
            break;
        }
        let s = trace.states.into_iter().last().unwrap();
        if s.kappa().im.abs() <= REAL_KAPPA_TOL {
            break;
        }
        out.push((gm, Some(s.clone())));
        cur = s;
    }
    out
}

fn spectrum_pair(base: &ModelParams, a: f64, g: f64, cfg: &SpectrumConfig, dump: bool) -> Result<RunOutput> {
    let params = base.with_gamma(0.0).with_g(g);
    let params = ModelParams { a, ..params };
    let gammas = gamma_grid(cfg)?;
    let mut rows: Vec<Row> = Vec::new();
    let mut out = RunOutput::default();
    let mut states: Vec<NonlinearState> = Vec::new();

    if g == 0.0 {
        for &gm in &gammas {
            let p = params.with_gamma(gm);
            out.attempts += 1;
            match linear::solve_linear_spectrum(&p) {
                Ok(evs) => {
                    for e in evs {
                        let res = linear::secular_residual(e.kappa, &p).norm();
                        rows.push(Row {
                            gamma: gm,
                            branch: e.branch.to_string(),
                            kappa: e.kappa,
                            g,
                            converged: true,
                            iterations: 0,
                            residual: res,
                        });
                        if dump {
                            if let Ok(ls) = linear::build_linear_state(e, &p) {
                                if let Ok(s) = stationary::from_linear(&ls, &p) {
                                    states.push(s);
                                }
                            }
                        }
                    }
                }
                Err(e) => out.failures.push(format!("a={a} g={g} gamma={gm}: {e}")),
            }
        }
    } else {
        let lp = stationary::trace_real_loop(&params)?;
        let crit = stationary::locate_critical_points_with(&params)?;
        let above: Vec<f64> = gammas.iter().copied().filter(|&x| x > crit.gamma_bifurcation).collect();
        let (real, complex) = rayon::join(
            || real_sweep(&lp, &gammas),
            || complex_sweep(&params, &above),
        );
        for (gm, b, r) in real {
            out.attempts += 1;
            match r {
                Some(s) => {
                    rows.push(Row::of(&s));
                    states.push(s);
                }
                None => {
                    rows.push(Row::failed(gm, b, g));
                    out.failures.push(format!("a={a} g={g} gamma={gm}: no {b} state"));
                }
            }
        }
        for (gm, s) in complex {
            match s {
                Some(s) => {
                    out.attempts += 1;
                    if let Ok(p) = stationary::pt_partner(&s) {
                        rows.push(Row::of(&p));
                        states.push(p);
                    }
                    rows.push(Row::of(&s));
                    states.push(s);
                }
                None => {
                    out.attempts += 1;
                    rows.push(Row::failed(gm, Branch::ComplexDecaying, g));
                    out.failures.push(format!("a={a} g={g} gamma={gm}: complex branch lost"));
                }
            }
        }
        if cfg.continuation {
            let mut pair: Option<Vec<NonlinearState>> = None;
            for &gm in gammas.iter().filter(|&&x| x > lp.gamma_cr) {
                out.attempts += 1;
                let next = match &pair {
                    Some(prev) => prev
                        .iter()
                        .map(|s| {
                            let tr = stationary::continue_branch(s, Homotopy::Gamma, gm, 2);
                            if tr.reached(gm, Homotopy::Gamma) {
                                Ok(tr.states.into_iter().last().unwrap())
                            } else {
                                Err(PtError::Diagnostic(tr.termination.unwrap_or_default()))
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                        .or_else(|_| continuation::continued_pair(&lp, gm).map(Vec::from)),
                    None => continuation::continued_pair(&lp, gm).map(Vec::from),
                };
                match next {
                    Ok(p) => {
                        for s in &p {
                            rows.push(Row::of(s));
                            states.push(s.clone());
                        }
                        pair = Some(p);
                    }
                    Err(e) => {
                        rows.push(Row::failed(gm, Branch::ContinuationDecaying, g));
                        out.failures.push(format!("a={a} g={g} gamma={gm}: continuation {e}"));
                        pair = None;
                    }
                }
            }
        }
    }
    rows.sort_by(|x, y| x.gamma.total_cmp(&y.gamma).then_with(|| x.branch.cmp(&y.branch)).then_with(|| x.kappa.im.total_cmp(&y.kappa.im)));
    let mut text = String::from(SPECTRUM_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&r.csv());
    }
    out.files.push((format!("spectrum_a{}_g{}.csv", tag(a), tag(g)), text));
    if dump {
        for s in &states {
            out.files.push((state_file(s), state_csv(s)));
        }
    }
    Ok(out)
}

fn real_sweep(lp: &RealLoop, gammas: &[f64]) -> Vec<(f64, Branch, Option<NonlinearState>)> {
    gammas
        .iter()
        .filter(|&&g| g <= lp.gamma_cr)
        .flat_map(|&gm| {
            [Branch::GroundReal, Branch::ExcitedReal]
                .into_iter()
                .map(move |b| (gm, b, lp.state(b, gm).ok()))
        })
        .collect()
}

pub fn cmd_spectrum(cfg: &Config, dump: bool) -> Result<RunOutput> {
    let sc = cfg.spectrum.as_ref().ok_or_else(|| PtError::Config("missing \"spectrum\" section".into()))?;
    let pairs: Vec<(f64, f64)> = sc.a.iter().flat_map(|&a| sc.g.iter().map(move |&g| (a, g))).collect();
    let results: Vec<Result<RunOutput>> = pairs
        .par_iter()
        .map(|&(a, g)| spectrum_pair(&cfg.model, a, g, sc, dump))
        .collect();
    let mut out = RunOutput::default();
    for ((a, g), r) in pairs.into_iter().zip(results) {
        match r {
            Ok(o) => {
                out.files.extend(o.files);
                out.failures.extend(o.failures);
                out.attempts += o.attempts;
            }
            Err(e) => {
                out.attempts += 1;
                out.failures.push(format!("a={a} g={g}: {e}"));
            }
        }
    }
    Ok(out)
}

fn solve_request(params: &ModelParams, req: &StateRequest) -> Result<NonlinearState> {
    let p = params.with_gamma(req.gamma);
    if p.g == 0.0 {
        let evs = linear::solve_linear_spectrum(&p)?;
        let e = evs
            .into_iter()
            .find(|e| e.branch == req.branch)
            .ok_or_else(|| PtError::Diagnostic(format!("no {} state at gamma = {}", req.branch, req.gamma)))?;
        return stationary::from_linear(&linear::build_linear_state(e, &p)?, &p);
    }
    match req.branch {
        Branch::GroundReal | Branch::ExcitedReal => stationary::trace_real_loop(&p)?.state(req.branch, req.gamma),
        Branch::ComplexDecaying | Branch::ComplexGrowing => {
            let s = stationary::complex_state(&p)?;
            if s.kappa().im.abs() <= REAL_KAPPA_TOL {
                return Err(PtError::Diagnostic(format!("no complex pair at gamma = {}", req.gamma)));
            }
            if s.branch() == req.branch {
                Ok(s)
            } else {
                stationary::pt_partner(&s)
            }
        }
        Branch::ContinuationDecaying | Branch::ContinuationGrowing => {
            let lp = stationary::trace_real_loop(&p)?;
            let pair = continuation::continued_pair(&lp, req.gamma)?;
            pair.into_iter()
                .find(|s| s.branch() == req.branch)
                .ok_or_else(|| PtError::Diagnostic(format!("no {} state at gamma = {}", req.branch, req.gamma)))
        }
    }
}

pub fn cmd_states(cfg: &Config) -> Result<RunOutput> {
    let sc = cfg.states.as_ref().ok_or_else(|| PtError::Config("missing \"states\" section".into()))?;
    let results: Vec<Result<NonlinearState>> = sc.requests.par_iter().map(|r| solve_request(&cfg.model, r)).collect();
    let mut out = RunOutput::default();
    let mut table = String::from(SPECTRUM_HEADER);
    table.push_str(",phase_convention,pt_defect,modulus_asymmetry");
    if sc.classify {
        table.push_str(",stability");
    }
    table.push('\n');
    let stab = StabilityConfig {
        seed: cfg.seed,
        ..sc.stability.unwrap_or_default()
    };
    for (req, r) in sc.requests.iter().zip(results) {
        out.attempts += 1;
        match r {
            Ok(s) => {
                let row = Row::of(&s).csv();
                let _ = write!(
                    table,
                    "{},{},{},{}",
                    row.trim_end(),
                    s.state.phase_convention,
                    num(s.state.pt_defect()),
                    num(s.state.modulus_asymmetry())
                );
                if sc.classify {
                    let tag = dynamics::classify_stability(&s, &stab)
                        .map(|r| r.tag.to_string())
                        .unwrap_or_else(|e| format!("Indeterminate ({e})").replace(',', ";"));
                    let _ = write!(table, ",{tag}");
                }
                table.push('\n');
                out.files.push((state_file(&s), state_csv(&s)));
            }
            Err(e) => {
                table.push_str(Row::failed(req.gamma, req.branch, cfg.model.g).csv().trim_end());
                table.push_str(",,,");
                if sc.classify {
                    table.push(',');
                }
                table.push('\n');
                out.failures.push(format!("gamma={} {}: {e}", req.gamma, req.branch));
            }
        }
    }
    out.files.insert(0, ("states.csv".into(), table));
    Ok(out)
}

pub fn cmd_critical(cfg: &Config) -> Result<RunOutput> {
    let cc = cfg.critical.as_ref().ok_or_else(|| PtError::Config("missing \"critical\" section".into()))?;
    let pairs: Vec<(f64, f64)> = cc.a.iter().flat_map(|&a| cc.g.iter().map(move |&g| (a, g))).collect();
    let results: Vec<_> = pairs
        .par_iter()
        .map(|&(a, g)| stationary::locate_critical_points_with(&ModelParams { a, ..cfg.model.with_g(g).with_gamma(0.0) }))
        .collect();
    let mut out = RunOutput::default();
    let mut text = String::from("a,g,gamma_bifurcation,gamma_cr,gamma_bifurcation_pitchfork,tolerance\n");
    for ((a, g), r) in pairs.into_iter().zip(results) {
        out.attempts += 1;
        match r {
            Ok(c) => {
                println!("a = {a}, g = {g}: gamma_bifurcation = {:.6}, gamma_cr = {:.6}", c.gamma_bifurcation, c.gamma_cr);
                let pf = c.gamma_bifurcation_pitchfork.map(num).unwrap_or_default();
                let _ = writeln!(text, "{},{},{},{},{},{}", num(a), num(g), num(c.gamma_bifurcation), num(c.gamma_cr), pf, num(c.tolerance));
            }
            Err(e) => {
                let _ = writeln!(text, "{},{},,,,", num(a), num(g));
                out.failures.push(format!("a={a} g={g}: {e}"));
            }
        }
    }
    out.files.push(("critical.csv".into(), text));
    Ok(out)
}

fn initial_state(params: &ModelParams, ec: &EvolveConfig, sigma: f64) -> Result<Vec<C64>> {
    let solve = |b: Branch| -> Result<NonlinearState> {
        let s = solve_request(params, &StateRequest { gamma: params.gamma, branch: b })?;
        dynamics::relax(&s, sigma)
    };
    Ok(match ec.initial {
        InitialState::Ground => solve(Branch::GroundReal)?.state.psi,
        InitialState::Excited => solve(Branch::ExcitedReal)?.state.psi,
        InitialState::ComplexDecaying => solve(Branch::ComplexDecaying)?.state.psi,
        InitialState::ComplexGrowing => solve(Branch::ComplexGrowing)?.state.psi,
        InitialState::Superposition => {
            let (g, e) = rayon::join(|| solve(Branch::GroundReal), || solve(Branch::ExcitedReal));
            dynamics::superposition(&g?.state.psi, &e?.state.psi)
        }
    })
}

pub fn cmd_evolve(cfg: &Config) -> Result<RunOutput> {
    let ec = cfg.evolve.as_ref().ok_or_else(|| PtError::Config("missing \"evolve\" section".into()))?;
    let params = cfg.model.with_well_width(None);
    let grid = Grid::new(&params)?;
    let sigma = ec.propagation.sigma(&grid);
    let mut psi = initial_state(&params, ec, sigma)?;
    if ec.perturbation != 0.0 {
        let eta = dynamics::smooth_perturbation(&grid, params.a, cfg.seed);
        let scale = ec.perturbation * (psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * grid.dx).sqrt();
        psi.iter_mut().zip(&eta).for_each(|(p, e)| *p += scale * e);
    }
    let rec = dynamics::propagate_samples(&grid, psi, &ec.propagation, &params)?;
    let mut out = RunOutput {
        attempts: 1,
        ..Default::default()
    };
    let mut summary = String::from("t,norm,left_density,right_density\n");
    for (i, t) in rec.times.iter().enumerate() {
        let (l, r) = rec.left_right_density[i];
        let _ = writeln!(summary, "{},{},{},{}", num(*t), num(rec.norm_history[i]), num(l), num(r));
    }
    for (t, d) in rec.times.iter().zip(&rec.density_snapshots) {
        let mut f = String::from("x,density\n");
        for (x, v) in grid.x.iter().zip(d) {
            let _ = writeln!(f, "{},{}", num(*x), num(*v));
        }
        out.files.push((format!("frame_t{t:.6}.csv"), f));
    }
    out.files.insert(0, ("summary.csv".into(), summary));
    if rec.overflow {
        out.failures.push(format!("norm overflow, trajectory truncated at t = {}", rec.times.last().copied().unwrap_or(0.0)));
    }
    if rec.boundary_exceeded {
        out.failures.push(format!(
            "edge density {:.3e} exceeded the tolerance, trajectory truncated at t = {}",
            rec.max_boundary_density,
            rec.times.last().copied().unwrap_or(0.0)
        ));
    }
    Ok(out)
}

/// Writes the files and the manifest; returns the manifest.
pub fn write_run(command: &str, cfg: &Config, out_dir: &Path, run: &RunOutput) -> Result<RunManifest> {
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (name, text) in &run.files {
        fs::write(out_dir.join(name), text)?;
        files.push(EmittedFile {
            path: name.clone(),
            sha256: sha256_hex(text.as_bytes()),
        });
    }
    let manifest = RunManifest {
        command: command.into(),
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        config_sha256: sha256_hex(serde_json::to_string(cfg)?.as_bytes()),
        files,
        failures: run.failures.clone(),
    };
    fs::write(out_dir.join(format!("manifest_{command}.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn execute(command: &str, cfg: &Config, dump: bool) -> Result<RunOutput> {
    cfg.model.validate()?;
    match command {
        "spectrum" => cmd_spectrum(cfg, dump),
        "states" => cmd_states(cfg),
        "critical" => cmd_critical(cfg),
        "evolve" => cmd_evolve(cfg),
        other => Err(PtError::Config(format!("unknown command {other:?}"))),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let name = cli.command.name();
    let args = cli.command.args().clone();
    let result = load_config(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let out = execute(name, &cfg, args.dump_states)?;
        write_run(name, &cfg, &args.out, &out)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for f in &out.failures {
                eprintln!("warning: {f}");
            }
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_doubles_as_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Config {
            model: ModelParams::new(2.2, 0.0, 0.0).with_grid(16.0, 512),
            spectrum: None,
            states: None,
            critical: Some(CriticalConfig { a: vec![2.2], g: vec![0.0] }),
            evolve: None,
            seed: 3,
        };
        let out = execute("critical", &cfg, false).unwrap();
        let m = write_run("critical", &cfg, dir.path(), &out).unwrap();
        let back = load_config(&dir.path().join("manifest_critical.json")).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&cfg).unwrap());
        assert_eq!(m.files.len(), 1);
        let text = fs::read_to_string(dir.path().join("critical.csv")).unwrap();
        assert_eq!(sha256_hex(text.as_bytes()), m.files[0].sha256);
    }

    #[test]
    fn gamma_grid_is_inclusive() {
        let c = SpectrumConfig {
            a: vec![2.2],
            g: vec![0.0],
            gamma_min: 0.0,
            gamma_max: 0.5,
            gamma_step: 0.1,
            continuation: false,
        };
        let g = gamma_grid(&c).unwrap();
        assert_eq!(g.len(), 6);
        assert!((g[5] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"model": {"a": 2.2, "gamma": 0.0, "g": 0.0}, "spectrum": {"a": [2.2], "g": [0.0], "gamma_min": 0, "gamma_max": 0.1, "gamma_step": 0.1, "bogus": 1}}"#;
        assert!(serde_json::from_str::<Config>(bad).is_err());
    }

    #[test]
    fn exit_code_policy() {
        let mut o = RunOutput {
            attempts: 20,
            ..Default::default()
        };
        o.failures = vec!["x".into(); 2];
        assert_eq!(o.exit_code(), 0);
        o.failures.push("y".into());
        assert_eq!(o.exit_code(), 2);
    }
}
