//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lqmf::contraction::{NormIntegral, BOUND_CAVEAT};
use lqmf::linalg::{default_axis_tol, eigenvalues_with_tol};
use lqmf::riccati::PbhReport;
use lqmf::sim::Estimate;
use lqmf::social::TrajectorySample;
use lqmf::{
    build_hamiltonian, build_mfg_matrix, contraction_bound_for, decentralized_strategy,
    gamma_weights, sce_residual, simulate, solve_discounted_are, solve_mfg, solve_sce, validate,
    InitialDistribution, Matrix64, ProblemData64, QuadratureConfig, SimConfig, ValidationReport,
};
use serde::Serialize;

use crate::failure::Failure;
use crate::problem::ProblemFile;
use crate::report::{fmt_num, nums, rows, spectrum, write_json, Eig, Num};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum System {
    Social,
    Game,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub input: PathBuf,
    pub axis_tol: Option<f64>,
    pub t_end: f64,
    pub dt: f64,
    pub trajectory: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub input: PathBuf,
    pub system: System,
    pub axis_tol: Option<f64>,
    pub agents: usize,
    pub horizon: f64,
    pub dt: f64,
    pub reps: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub init_std: f64,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn load(path: &Path) -> Result<(ProblemFile, ProblemData64), Failure> {
    let file = ProblemFile::read(path)?;
    let problem = file.to_problem()?;
    Ok((ProblemFile::from_problem(&problem), problem))
}

fn check_axis_tol(tol: Option<f64>) -> Result<Option<f64>, Failure> {
    match tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(Failure::input(format!(
            "--axis-tol must be positive, got {t}"
        ))),
        _ => Ok(tol),
    }
}

/// `t_k = k·dt` for `k = 0, …, round(t_end/dt)`.
pub fn time_grid(t_end: f64, dt: f64) -> Result<Vec<f64>, Failure> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Failure::input(format!("--dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Failure::input(format!(
            "--t-end must be non-negative, got {t_end}"
        )));
    }
    let steps = (t_end / dt).round();
    if steps > 1e7 {
        return Err(Failure::input(format!("{steps} time steps requested")));
    }
    Ok((0..=steps as usize).map(|k| k as f64 * dt).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", path.display())))
}

fn emit<T: Serialize>(report: &T, path: Option<&Path>, summary: &str) -> Result<(), Failure> {
    match path {
        Some(path) => {
            let mut out = create(path)?;
            write_json(report, &mut out)?;
            out.flush()?;
            println!("{summary}");
        }
        None => write_json(report, &mut std::io::stdout().lock())?,
    }
    Ok(())
}

/// CSV with header `t,xbar_1..xbar_n,s_1..s_n`.
pub fn write_trajectory(path: &Path, samples: &[TrajectorySample<f64>]) -> Result<(), Failure> {
    let n = samples.first().map_or(0, |s| s.xbar.len());
    let mut out = create(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("xbar_{j}")));
    header.extend((1..=n).map(|j| format!("s_{j}")));
    writeln!(out, "{}", header.join(","))?;
    for s in samples {
        let fields: Vec<String> = std::iter::once(s.t)
            .chain(s.xbar.iter().copied())
            .chain(s.s.iter().copied())
            .map(fmt_num)
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Validation {
    passed: bool,
    stabilizable: bool,
    pbh_margin: Num,
    r_positive_definite: bool,
    r_min_eigenvalue: Num,
    h_a_axis_eigenvalues: Vec<Eig>,
    warnings: Vec<String>,
}

impl Validation {
    fn new(v: &ValidationReport) -> Self {
        let PbhReport {
            stabilizable,
            min_relative_singular,
            ..
        } = v.stabilizability;
        Self {
            passed: v.passed(),
            stabilizable,
            pbh_margin: Num(min_relative_singular),
            r_positive_definite: v.r_positive_definite,
            r_min_eigenvalue: Num(v.r_min_eigenvalue),
            h_a_axis_eigenvalues: v
                .h_a_axis_eigenvalues
                .as_deref()
                .map_or(Vec::new(), spectrum),
            warnings: v.warnings.clone(),
        }
    }
}

fn validated(p: &ProblemData64, axis_tol: Option<f64>) -> Result<Validation, Failure> {
    let report = validate(p, axis_tol)?;
    if let Some(err) = report.to_error() {
        return Err(err.into());
    }
    Ok(Validation::new(&report))
}

#[derive(Debug, Serialize)]
struct Timings {
    solve_seconds: Num,
    total_seconds: Num,
}

#[derive(Debug, Serialize)]
struct Strategy {
    #[serde(rename = "K_x")]
    k_x: Vec<Vec<Num>>,
    #[serde(rename = "L")]
    l: Vec<Vec<Num>>,
}

#[derive(Debug, Serialize)]
struct SocialResiduals {
    riccati_pi: Num,
    riccati_xplus: Num,
    ode: Num,
    manifold: Num,
}

#[derive(Debug, Serialize)]
struct SocialReport {
    command: &'static str,
    problem: ProblemFile,
    validation: Validation,
    spectrum: Vec<Eig>,
    #[serde(rename = "Pi")]
    pi: Vec<Vec<Num>>,
    #[serde(rename = "H")]
    h: Vec<Vec<Num>>,
    #[serde(rename = "Xplus")]
    xplus: Vec<Vec<Num>>,
    #[serde(rename = "A_C")]
    a_c: Vec<Vec<Num>>,
    #[serde(rename = "A_cl")]
    a_cl: Vec<Vec<Num>>,
    c: Vec<Num>,
    s0: Vec<Num>,
    strategy: Strategy,
    residuals: SocialResiduals,
    warnings: Vec<String>,
    timings: Timings,
}

pub fn solve_social(opts: &SolveOptions) -> Result<(), Failure> {
    let start = Instant::now();
    let (echo, p) = load(&opts.input)?;
    let axis_tol = check_axis_tol(opts.axis_tol)?;
    let grid = time_grid(opts.t_end, opts.dt)?;
    let validation = validated(&p, axis_tol)?;
    let solve_start = Instant::now();
    let sol = solve_sce(&p, axis_tol)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();
    let strategy = decentralized_strategy(&sol, &p)?;
    let samples = sol.trajectory(&grid)?;
    let residuals = SocialResiduals {
        riccati_pi: Num(sol.pi.residual),
        riccati_xplus: Num(sol.xplus.residual),
        ode: Num(sce_residual(&sol, &grid)?),
        manifold: Num(sol.manifold_gap(&samples)),
    };
    if let Some(path) = &opts.trajectory {
        write_trajectory(path, &samples)?;
    }
    let report = SocialReport {
        command: "solve-social",
        problem: echo,
        validation,
        spectrum: spectrum(&sol.h_spectrum.eigenvalues),
        pi: rows(&sol.pi.x),
        h: rows(&sol.h),
        xplus: rows(&sol.xplus.x),
        a_c: rows(&sol.a_c),
        a_cl: rows(&sol.a_cl),
        c: nums(&sol.c),
        s0: nums(&sol.s0),
        strategy: Strategy {
            k_x: rows(&strategy.k_x),
            l: rows(&strategy.l),
        },
        residuals,
        warnings: sol.warnings.clone(),
        timings: Timings {
            solve_seconds: Num(solve_seconds),
            total_seconds: Num(start.elapsed().as_secs_f64()),
        },
    };
    let summary = format!("s0 = [{}]", join(&sol.s0));
    emit(&report, opts.report.as_deref(), &summary)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Serialize)]
struct UBlocks {
    #[serde(rename = "U11")]
    u11: Vec<Vec<Num>>,
    #[serde(rename = "U12")]
    u12: Vec<Vec<Num>>,
    #[serde(rename = "U21")]
    u21: Vec<Vec<Num>>,
    #[serde(rename = "U22")]
    u22: Vec<Vec<Num>>,
}

#[derive(Debug, Serialize)]
struct GameResiduals {
    riccati_pi: Num,
    ode: Num,
    closed_form_s0: Num,
}

#[derive(Debug, Serialize)]
struct GameReport {
    command: &'static str,
    problem: ProblemFile,
    validation: Validation,
    spectrum: Vec<Eig>,
    #[serde(rename = "Pi")]
    pi: Vec<Vec<Num>>,
    #[serde(rename = "M_mfg")]
    m_mfg: Vec<Vec<Num>>,
    #[serde(rename = "U")]
    u: UBlocks,
    #[serde(rename = "F11")]
    f11: Vec<Vec<Num>>,
    #[serde(rename = "F12")]
    f12: Vec<Vec<Num>>,
    #[serde(rename = "F22")]
    f22: Vec<Vec<Num>>,
    det_u11: Num,
    s0: Vec<Num>,
    strategy: Strategy,
    residuals: GameResiduals,
    warnings: Vec<String>,
    timings: Timings,
}

pub fn solve_game(opts: &SolveOptions) -> Result<(), Failure> {
    let start = Instant::now();
    let (echo, p) = load(&opts.input)?;
    let axis_tol = check_axis_tol(opts.axis_tol)?;
    let grid = time_grid(opts.t_end, opts.dt)?;
    let validation = validated(&p, axis_tol)?;
    let solve_start = Instant::now();
    let sol = solve_mfg(&p, axis_tol)?;
    let solve_seconds = solve_start.elapsed().as_secs_f64();
    let strategy = sol.strategy(&p)?;
    let samples = sol.trajectory(&grid)?;
    let q_eta = p.q().matvec(p.eta());
    if let Some(path) = &opts.trajectory {
        write_trajectory(path, &samples)?;
    }
    let d = &sol.decomposition;
    let report = GameReport {
        command: "solve-game",
        problem: echo,
        validation,
        spectrum: spectrum(&sol.spectrum.eigenvalues),
        pi: rows(&sol.pi.x),
        m_mfg: rows(&sol.m_mfg),
        u: UBlocks {
            u11: rows(&d.u11()),
            u12: rows(&d.u12()),
            u21: rows(&d.u21()),
            u22: rows(&d.u22()),
        },
        f11: rows(&d.f11),
        f12: rows(&d.f12),
        f22: rows(&d.f22),
        det_u11: Num(sol.det_u11),
        s0: nums(&sol.s0),
        strategy: Strategy {
            k_x: rows(&strategy.k_x),
            l: rows(&strategy.l),
        },
        residuals: GameResiduals {
            riccati_pi: Num(sol.pi.residual),
            ode: Num(sol.residual(&grid, &q_eta)?),
            closed_form_s0: Num(sol.closed_form_gap),
        },
        warnings: sol.warnings.clone(),
        timings: Timings {
            solve_seconds: Num(solve_seconds),
            total_seconds: Num(start.elapsed().as_secs_f64()),
        },
    };
    let summary = format!("s0 = [{}]", join(&sol.s0));
    emit(&report, opts.report.as_deref(), &summary)
}

#[derive(Debug, Serialize)]
struct Integral {
    value: Num,
    horizon: Num,
    tail_bound: Num,
    panels: usize,
    last_rel_change: Num,
}

impl From<&NormIntegral<f64>> for Integral {
    fn from(i: &NormIntegral<f64>) -> Self {
        Self {
            value: Num(i.value),
            horizon: Num(i.horizon),
            tail_bound: Num(i.tail_bound),
            panels: i.panels,
            last_rel_change: Num(i.last_rel_change),
        }
    }
}

#[derive(Debug, Serialize)]
struct ContractionOutput {
    command: &'static str,
    problem: ProblemFile,
    beta: Num,
    verdict: &'static str,
    caveat: &'static str,
    #[serde(rename = "I1")]
    i1: Integral,
    #[serde(rename = "I2")]
    i2: Integral,
    abscissa: Num,
    kappa: Num,
    timings: Timings,
}

pub fn contraction(
    input: &Path,
    axis_tol: Option<f64>,
    cfg: &QuadratureConfig,
    report: Option<&Path>,
) -> Result<(), Failure> {
    let start = Instant::now();
    let (echo, p) = load(input)?;
    let axis_tol = check_axis_tol(axis_tol)?;
    validated(&p, axis_tol)?;
    let r = contraction_bound_for(&p, axis_tol, cfg)?;
    let elapsed = Num(start.elapsed().as_secs_f64());
    let out = ContractionOutput {
        command: "contraction",
        problem: echo,
        beta: Num(r.beta),
        verdict: r.verdict(),
        caveat: BOUND_CAVEAT,
        i1: (&r.i1).into(),
        i2: (&r.i2).into(),
        abscissa: Num(r.abscissa),
        kappa: Num(r.kappa),
        timings: Timings {
            solve_seconds: elapsed,
            total_seconds: elapsed,
        },
    };
    let summary = format!("beta = {} ({})", fmt_num(r.beta), r.verdict());
    emit(&out, report, &summary)
}

#[derive(Debug, Serialize)]
struct Stat {
    mean: Num,
    std_dev: Num,
    std_error: Num,
}

impl From<Estimate<f64>> for Stat {
    fn from(e: Estimate<f64>) -> Self {
        Self {
            mean: Num(e.mean),
            std_dev: Num(e.std_dev),
            std_error: Num(e.std_error),
        }
    }
}

#[derive(Debug, Serialize)]
struct SimSettings {
    system: &'static str,
    agents: usize,
    horizon: Num,
    dt: Num,
    replications: usize,
    seed: u64,
    init_std: Num,
}

#[derive(Debug, Serialize)]
struct SimOutput {
    command: &'static str,
    problem: ProblemFile,
    settings: SimSettings,
    steps: usize,
    per_agent_cost: Stat,
    mean_field_gap: Stat,
    replication_costs: Vec<Num>,
    replication_gaps: Vec<Num>,
    tail_bound: Num,
}

pub fn simulate_population(opts: &SimulateOptions) -> Result<(), Failure> {
    let (echo, p) = load(&opts.input)?;
    let axis_tol = check_axis_tol(opts.axis_tol)?;
    if p.d().is_none() {
        return Err(Failure::input("field `D`: required by simulate"));
    }
    if !(opts.init_std.is_finite() && opts.init_std >= 0.0) {
        return Err(Failure::input(format!(
            "--init-std must be non-negative, got {}",
            opts.init_std
        )));
    }
    let strategy = match opts.system {
        System::Social => decentralized_strategy(&solve_sce(&p, axis_tol)?, &p)?,
        System::Game => solve_mfg(&p, axis_tol)?.strategy(&p)?,
    };
    let cfg = SimConfig {
        agents: opts.agents,
        horizon: opts.horizon,
        dt: opts.dt,
        replications: opts.reps,
        seed: opts.seed,
        initial: InitialDistribution::isotropic(p.x0().to_vec(), opts.init_std),
        threads: opts.threads,
        record_path: opts.out.is_some(),
    };
    let res = simulate(&p, &strategy, &cfg)?;
    if let (Some(path), Some(sample)) = (&opts.out, &res.path) {
        let n = p.n();
        let mut out = create(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|j| format!("empirical_{j}")));
        header.extend((1..=n).map(|j| format!("xbar_{j}")));
        writeln!(out, "{}", header.join(","))?;
        for k in 0..sample.t.len() {
            let fields: Vec<String> = std::iter::once(sample.t[k])
                .chain(sample.empirical[k].iter().copied())
                .chain(sample.reference[k].iter().copied())
                .map(fmt_num)
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        out.flush()?;
    }
    let output = SimOutput {
        command: "simulate",
        problem: echo,
        settings: SimSettings {
            system: match opts.system {
                System::Social => "social",
                System::Game => "game",
            },
            agents: opts.agents,
            horizon: Num(opts.horizon),
            dt: Num(opts.dt),
            replications: opts.reps,
            seed: opts.seed,
            init_std: Num(opts.init_std),
        },
        steps: res.steps,
        per_agent_cost: res.per_agent_cost.into(),
        mean_field_gap: res.mean_field_gap.into(),
        replication_costs: nums(&res.replication_costs),
        replication_gaps: nums(&res.replication_gaps),
        tail_bound: Num(res.tail_bound),
    };
    let summary = format!(
        "per-agent cost {} ± {}",
        fmt_num(res.per_agent_cost.mean),
        fmt_num(res.per_agent_cost.std_error)
    );
    emit(&output, opts.report.as_deref(), &summary)
}

/// Eigenvalue table of `H` or `M_mfg`.
pub fn spectrum_table(input: &Path, system: System, axis_tol: Option<f64>) -> Result<(), Failure> {
    let (_, p) = load(input)?;
    let axis_tol = check_axis_tol(axis_tol)?;
    let h_a = p.hamiltonian_a()?;
    let pi = solve_discounted_are(
        p.a(),
        p.b(),
        p.q(),
        p.r(),
        p.rho(),
        axis_tol.unwrap_or_else(|| default_axis_tol(&h_a)),
    )?;
    let (label, k): (&str, Matrix64) = match system {
        System::Social => {
            let w = gamma_weights(p.q(), p.gamma(), p.eta())?;
            ("H", build_hamiltonian(&p, &pi.x, &w)?)
        }
        System::Game => ("M_mfg", build_mfg_matrix(&p, &pi.x)?),
    };
    let tol = axis_tol.unwrap_or_else(|| default_axis_tol(&k));
    let spec = eigenvalues_with_tol(&k, tol)?;
    let axis = spec.axis_eigenvalues();
    let mut out = std::io::stdout().lock();
    writeln!(out, "# eigenvalues of {label}, axis tolerance {tol:.3e}")?;
    writeln!(out, "index,re,im,class")?;
    for (i, z) in spec.eigenvalues.iter().enumerate() {
        let class = if axis.contains(z) {
            "axis"
        } else if z.re < 0.0 {
            "stable"
        } else {
            "antistable"
        };
        writeln!(out, "{i},{},{},{class}", fmt_num(z.re), fmt_num(z.im))?;
    }
    Ok(())
}
