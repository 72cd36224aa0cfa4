//! Command-line experiment driver.
//!
//! Each subcommand runs one pipeline inside a worker pool of `--threads`
//! threads, writes its tables under the output directory and prints a
//! summary to standard output. Exit codes: 0 success, 2 configuration
//! error, 3 numeric failure.

pub mod config;
pub mod table;

use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    diffused_exponent, grid_rotation, lambda_scan, DiffusedSpec, GridSpec, OrbitSpec,
};
use crate::exponents::{
    orbit_exponent, random_exponent_montecarlo, random_exponent_quadrature,
    random_exponent_series, Estimator, SeriesRegime,
};
use crate::fixedpoints::{
    beta0_double_roots, bifurcation_map, double_zero_curves, find_fixed_points,
    limit_equation, max_eigenvalue, BifurcationCell, ParameterWindow,
};
use crate::linear::{
    avila_bochi, circle_operator_fixed_point, lambda_of_coset, verify_m_delta_lebesgue,
};
use crate::rng::Seed;
use crate::twistmap::TwistFamily;

pub use config::{Command, ExperimentConfig, OUT_ENV};
pub use table::{ColumnType, Header, Table, Value};

use ColumnType::{Float as F, Int as I, Text as S};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain { .. } | Error::UnsupportedEstimator(_) => EXIT_CONFIG,
        Error::NotUnimodular(_) => EXIT_CONFIG,
        Error::Numeric(_) | Error::Io(_) | Error::Csv(_) => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(name = "twistlab", version, about = "Random and average Lyapunov exponents of rotated twist maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// R(ε) by quadrature, with the small- and large-ε series.
    RandomExact(RunArgs),
    /// R(ε) by Monte Carlo over random products (N steps, M runs).
    RandomMc(RunArgs),
    /// Λ(ε) over a product-Simpson grid (N_g intervals, N_p starts, M iterates).
    LambdaScan(RunArgs),
    /// δ-diffused exponent R(ε, δ) (N steps, M_r rotations, M_p starts).
    Diffused(RunArgs),
    /// Fixed points of g∘f_ε for one rotation (θ, β).
    FixedPoints(RunArgs),
    /// Fixed-point counts over a (θ, β) window.
    BifurcationMap(RunArgs),
    /// Double-zero curves of the small-ε limit and β = 0 double roots.
    DoubleZeroCurves(RunArgs),
    /// MEGNO, improved MEGNO and classical exponents along orbits.
    MegnoDemo(RunArgs),
    /// Linear SO(2) checks for one matrix.
    LinearCheck(RunArgs),
    /// Re-check an output file's header against its body.
    Verify {
        file: PathBuf,
    },
}

/// Overrides shared by every experiment subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma list or log:LO:HI:COUNT.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    /// Steps per run (N); accepts 1e6.
    #[arg(long)]
    pub n: Option<String>,
    /// Runs (random-mc) or iterates per orbit (lambda-scan).
    #[arg(long)]
    pub m: Option<String>,
    /// Random starts per rotation.
    #[arg(long = "n-p")]
    pub n_p: Option<String>,
    /// Simpson intervals per grid axis (even).
    #[arg(long = "n-g")]
    pub n_g: Option<String>,
    /// Haar rotations sampled (diffused).
    #[arg(long = "m-r")]
    pub m_r: Option<String>,
    /// Starts per rotation (diffused).
    #[arg(long = "m-p")]
    pub m_p: Option<String>,
    /// Diffusion radius δ in (0, 2π].
    #[arg(long)]
    pub delta: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<String>,
    /// classical, megno or megno_improved.
    #[arg(long)]
    pub estimator: Option<String>,
    /// Iterates discarded before averaging.
    #[arg(long)]
    pub transient: Option<String>,
    /// Axis latitude β in [0, π/2].
    #[arg(long)]
    pub beta: Option<String>,
    /// Rotation angle θ in [0, 2π].
    #[arg(long)]
    pub theta: Option<String>,
    /// Bifurcation map cells along θ.
    #[arg(long = "theta-cells")]
    pub theta_cells: Option<String>,
    /// Bifurcation map cells along β.
    #[arg(long = "beta-cells")]
    pub beta_cells: Option<String>,
    /// Bifurcation map window.
    #[arg(long = "theta-min")]
    pub theta_min: Option<String>,
    #[arg(long = "theta-max")]
    pub theta_max: Option<String>,
    #[arg(long = "beta-min")]
    pub beta_min: Option<String>,
    #[arg(long = "beta-max")]
    pub beta_max: Option<String>,
    /// Points per double-zero curve.
    #[arg(long)]
    pub samples: Option<String>,
    /// Entries a,b,c,d of [[a, b], [c, d]].
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<String>,
    /// Rotation angles α for the Lebesgue check.
    #[arg(long = "n-alpha")]
    pub n_alpha: Option<String>,
    /// Circle cells for the transfer operator.
    #[arg(long = "n-z")]
    pub n_z: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<String>,
    /// Output directory; defaults to $TWISTLAB_OUT or ./twistlab-out.
    #[arg(long)]
    pub out: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> Vec<(&'static str, &String)> {
        let pairs: [(&'static str, &Option<String>); 25] = [
            ("eps", &self.eps),
            ("n", &self.n),
            ("m", &self.m),
            ("n_p", &self.n_p),
            ("n_g", &self.n_g),
            ("m_r", &self.m_r),
            ("m_p", &self.m_p),
            ("delta", &self.delta),
            ("seed", &self.seed),
            ("estimator", &self.estimator),
            ("transient", &self.transient),
            ("beta", &self.beta),
            ("theta", &self.theta),
            ("theta_cells", &self.theta_cells),
            ("beta_cells", &self.beta_cells),
            ("theta_min", &self.theta_min),
            ("theta_max", &self.theta_max),
            ("beta_min", &self.beta_min),
            ("beta_max", &self.beta_max),
            ("samples", &self.samples),
            ("matrix", &self.matrix),
            ("n_alpha", &self.n_alpha),
            ("n_z", &self.n_z),
            ("threads", &self.threads),
            ("out", &self.out),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k, v)))
            .collect()
    }

    /// Defaults, then the config file, then the flags.
    pub fn resolve(&self, command: Command) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::defaults(command);
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, v)
                .map_err(|e| Error::Config(format!("--{}: {e}", k.replace('_', "-"))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Summaries go to `stdout`, errors to standard error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let (command, args) = match cli.command {
        CliCommand::Verify { file } => return verify_file(&file, stdout),
        CliCommand::RandomExact(a) => (Command::RandomExact, a),
        CliCommand::RandomMc(a) => (Command::RandomMc, a),
        CliCommand::LambdaScan(a) => (Command::LambdaScan, a),
        CliCommand::Diffused(a) => (Command::Diffused, a),
        CliCommand::FixedPoints(a) => (Command::FixedPoints, a),
        CliCommand::BifurcationMap(a) => (Command::BifurcationMap, a),
        CliCommand::DoubleZeroCurves(a) => (Command::DoubleZeroCurves, a),
        CliCommand::MegnoDemo(a) => (Command::MegnoDemo, a),
        CliCommand::LinearCheck(a) => (Command::LinearCheck, a),
    };
    let cfg = args.resolve(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads as usize)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} threads: {e}", cfg.threads)))?;
    let lines = pool.install(|| execute(&cfg))?;
    for line in lines {
        writeln!(stdout, "{line}")?;
    }
    Ok(())
}

/// Runs a resolved configuration on the current pool and returns the
/// summary lines, followed by one `wrote PATH` line per file.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut out = Output::new(cfg);
    let summary = match cfg.command {
        Command::RandomExact => random_exact(cfg, &mut out)?,
        Command::RandomMc => random_mc(cfg, &mut out)?,
        Command::LambdaScan => run_lambda_scan(cfg, &mut out)?,
        Command::Diffused => run_diffused(cfg, &mut out)?,
        Command::FixedPoints => run_fixed_points(cfg, &mut out)?,
        Command::BifurcationMap => run_bifurcation_map(cfg, &mut out)?,
        Command::DoubleZeroCurves => run_double_zero_curves(cfg, &mut out)?,
        Command::MegnoDemo => run_megno_demo(cfg, &mut out)?,
        Command::LinearCheck => run_linear_check(cfg, &mut out)?,
    };
    let mut lines = summary;
    lines.extend(out.written.iter().map(|p| format!("wrote {}", p.display())));
    Ok(lines)
}

/// Header for every file of a run.
pub fn provenance_header(cfg: &ExperimentConfig, table: &str) -> Header {
    let mut h = Header::default();
    h.push("subcommand", cfg.command.as_str());
    h.push("table", table);
    h.push("code_version", env!("CARGO_PKG_VERSION"));
    h.push("seed", cfg.seed.to_string());
    h.push("config_hash", cfg.hash());
    for (k, v) in cfg.echo() {
        h.push(format!("config.{k}"), v);
    }
    h
}

struct Output<'a> {
    cfg: &'a ExperimentConfig,
    written: Vec<PathBuf>,
}

impl<'a> Output<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Output {
            cfg,
            written: Vec::new(),
        }
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        let path = self.cfg.out.join(format!("{name}.csv"));
        table.write(&path, &provenance_header(self.cfg, name))?;
        self.written.push(path);
        Ok(())
    }

    fn matrix(&mut self, name: &str, comments: Vec<String>, rows: &[Vec<f64>]) -> Result<()> {
        let path = self.cfg.out.join(format!("{name}.dat"));
        let mut all = vec![
            format!("subcommand: {}", self.cfg.command),
            format!("seed: {}", self.cfg.seed),
            format!("config_hash: {}", self.cfg.hash()),
        ];
        all.extend(comments);
        table::write_matrix(&path, &all, rows)?;
        self.written.push(path);
        Ok(())
    }
}

/// Fixed 7-decimal form with trailing zeros removed: 0.0547518, 0.
pub fn format_r(x: f64) -> String {
    let s = format!("{x:.7}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn series_or_nan(eps: f64, regime: SeriesRegime) -> f64 {
    random_exponent_series(eps, regime).unwrap_or(f64::NAN)
}

fn rel_err(approx: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        f64::NAN
    } else {
        ((approx - exact) / exact).abs()
    }
}

fn random_exact(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let mut t = Table::new(&[
        ("eps", F),
        ("R_quadrature", F),
        ("quadrature_error", F),
        ("R_series_small", F),
        ("R_series_large", F),
        ("rel_err_small", F),
        ("rel_err_large", F),
    ]);
    let mut lines = Vec::new();
    for &eps in &cfg.eps {
        let q = random_exponent_quadrature(eps)?;
        let small = series_or_nan(eps, SeriesRegime::Small);
        let large = series_or_nan(eps, SeriesRegime::Large);
        t.push(vec![
            eps.into(),
            q.value.into(),
            q.std_error.into(),
            small.into(),
            large.into(),
            rel_err(small, q.value).into(),
            rel_err(large, q.value).into(),
        ])?;
        lines.push(format!("eps={eps} R={}", format_r(q.value)));
    }
    out.table("random_exact", &t)?;
    Ok(lines)
}

fn random_mc(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let mut t = Table::new(&[
        ("eps", F),
        ("R_mc", F),
        ("stderr", F),
        ("kappa", F),
        ("R_quadrature", F),
        ("z_score", F),
        ("n", I),
        ("m", I),
    ]);
    let mut lines = Vec::new();
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let mc = random_exponent_montecarlo(eps, cfg.n, cfg.m, Seed::new(cfg.seed).child(i as u64))?;
        let q = random_exponent_quadrature(eps)?.value;
        let se = mc.estimate.std_error;
        let z = if se > 0.0 { (mc.estimate.value - q) / se } else { 0.0 };
        t.push(vec![
            eps.into(),
            mc.estimate.value.into(),
            se.into(),
            mc.kappa.into(),
            q.into(),
            z.into(),
            cfg.n.into(),
            cfg.m.into(),
        ])?;
        lines.push(format!(
            "eps={eps} R_mc={} stderr={se:.2e} R={} z={z:.2}",
            format_r(mc.estimate.value),
            format_r(q)
        ));
    }
    out.table("random_mc", &t)?;
    Ok(lines)
}

fn run_lambda_scan(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let grid = GridSpec::new(cfg.n_g as usize)?;
    let orbits = OrbitSpec {
        n_p: cfg.n_p as usize,
        m: cfg.m,
        transient: cfg.transient,
        estimator: cfg.estimator,
    };
    let mut cells = Table::new(&[
        ("eps", F),
        ("theta", F),
        ("beta", F),
        ("lambda_g", F),
        ("sigma_g", F),
        ("weight", F),
        ("h", F),
    ]);
    let mut summary = Table::new(&[
        ("eps", F),
        ("Lambda_num", F),
        ("Lambda_extrap", F),
        ("R_quadrature", F),
        ("sigma_S2", F),
        ("sigma_total", F),
        ("stderr", F),
        ("extrap_residual", F),
        ("Lambda_coarse", F),
    ]);
    let mut lines = Vec::new();
    for (k, &eps) in cfg.eps.iter().enumerate() {
        let scan = lambda_scan(eps, grid, orbits, Seed::new(cfg.seed))?;
        let n = grid.intervals();
        let mut h = vec![vec![0.0; n + 1]; n + 1];
        for c in &scan.cells {
            cells.push(vec![
                eps.into(),
                c.node.theta.into(),
                c.node.beta.into(),
                c.lambda.into(),
                c.sigma.into(),
                c.node.weight.into(),
                c.h().into(),
            ])?;
            h[c.node.j_beta][c.node.i_theta] = c.h();
        }
        let q = random_exponent_quadrature(eps)?.value;
        let coarse = scan.coarse_lambda().map(|c| c.0).unwrap_or(f64::NAN);
        summary.push(vec![
            eps.into(),
            scan.lambda_num.into(),
            scan.extrapolation.a.into(),
            q.into(),
            scan.sigma_s2.into(),
            scan.sigma_total.into(),
            scan.std_error().into(),
            scan.extrapolation.relative_residual.into(),
            coarse.into(),
        ])?;
        out.matrix(
            &format!("h_{k}"),
            vec![
                format!("eps: {eps:?}"),
                format!("h(theta, beta) on {0}x{0} Simpson intervals; rows beta = 0..pi/2, columns theta = 0..2pi", n),
            ],
            &h,
        )?;
        lines.push(format!(
            "eps={eps} Lambda={} Lambda_extrap={} R={} sigma_S2={} sigma_total={}",
            format_r(scan.lambda_num),
            format_r(scan.extrapolation.a),
            format_r(q),
            format_r(scan.sigma_s2),
            format_r(scan.sigma_total)
        ));
    }
    out.table("lambda_scan", &cells)?;
    out.table("lambda_summary", &summary)?;
    Ok(lines)
}

fn run_diffused(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let mut t = Table::new(&[
        ("eps", F),
        ("delta", F),
        ("R_eps_delta", F),
        ("stderr", F),
        ("R_quadrature", F),
    ]);
    let mut lines = Vec::new();
    for (i, &eps) in cfg.eps.iter().enumerate() {
        let spec = DiffusedSpec {
            eps,
            delta: cfg.delta,
            n: cfg.n,
            m_r: cfg.m_r as usize,
            m_p: cfg.m_p as usize,
        };
        let e = diffused_exponent(&spec, Seed::new(cfg.seed).child(i as u64))?;
        let q = random_exponent_quadrature(eps)?.value;
        t.push(vec![
            eps.into(),
            cfg.delta.into(),
            e.value.into(),
            e.std_error.into(),
            q.into(),
        ])?;
        lines.push(format!(
            "eps={eps} delta={} R_delta={} stderr={:.2e} R={}",
            cfg.delta,
            format_r(e.value),
            e.std_error,
            format_r(q)
        ));
    }
    out.table("diffused", &t)?;
    Ok(lines)
}

fn flag_text(parts: &[(bool, &str)]) -> String {
    let s: Vec<&str> = parts.iter().filter(|p| p.0).map(|p| p.1).collect();
    if s.is_empty() {
        "none".into()
    } else {
        s.join("|")
    }
}

fn run_fixed_points(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let mut t = Table::new(&[
        ("eps", F),
        ("beta", F),
        ("theta", F),
        ("b", F),
        ("x", F),
        ("y", F),
        ("z", F),
        ("trace", F),
        ("mu1_re", F),
        ("mu1_im", F),
        ("mu2_re", F),
        ("mu2_im", F),
        ("stability", S),
        ("residual", F),
        ("flags", S),
    ]);
    let mut lines = Vec::new();
    for &eps in &cfg.eps {
        let recs = find_fixed_points(cfg.beta, cfg.theta, eps)?;
        let mut code = String::new();
        for r in &recs {
            let p = r.location.vec();
            t.push(vec![
                eps.into(),
                cfg.beta.into(),
                cfg.theta.into(),
                r.b.into(),
                p.x.into(),
                p.y.into(),
                p.z.into(),
                r.trace.into(),
                r.eigenvalues[0].re.into(),
                r.eigenvalues[0].im.into(),
                r.eigenvalues[1].re.into(),
                r.eigenvalues[1].im.into(),
                r.stability.to_string().into(),
                r.residual.into(),
                flag_text(&[
                    (r.flags.degenerate, "degenerate"),
                    (r.flags.double_zero, "double"),
                    (r.flags.unvalidated, "unvalidated"),
                ])
                .into(),
            ])?;
            code.push(r.stability.letter());
        }
        lines.push(format!(
            "eps={eps} fixed_points={} types={code} mu_max={}",
            recs.len(),
            max_eigenvalue(eps)?
        ));
    }
    out.table("fixed_points", &t)?;
    Ok(lines)
}

fn cell_flags(c: &BifurcationCell) -> String {
    flag_text(&[(c.flagged, "flagged"), (c.boundary, "boundary")])
}

fn run_bifurcation_map(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let window = ParameterWindow {
        theta: (cfg.theta_min, cfg.theta_max),
        beta: (cfg.beta_min, cfg.beta_max),
    };
    let mut t = Table::new(&[
        ("eps", F),
        ("theta", F),
        ("beta", F),
        ("nE", I),
        ("nH", I),
        ("nR", I),
        ("code", S),
        ("flags", S),
    ]);
    let mut lines = Vec::new();
    for (k, &eps) in cfg.eps.iter().enumerate() {
        let map = bifurcation_map(eps, cfg.theta_cells as usize, cfg.beta_cells as usize, window)?;
        for c in &map.cells {
            t.push(vec![
                eps.into(),
                c.theta.into(),
                c.beta.into(),
                c.n_e.into(),
                c.n_h.into(),
                c.n_r.into(),
                c.code().into(),
                cell_flags(c).into(),
            ])?;
        }
        let rows: Vec<Vec<f64>> = (0..map.n_beta)
            .map(|j| (0..map.n_theta).map(|i| map.cell(i, j).total() as f64).collect())
            .collect();
        out.matrix(
            &format!("bifurcation_{k}"),
            vec![
                format!("eps: {eps:?}"),
                "fixed-point count; rows beta ascending, columns theta ascending".into(),
            ],
            &rows,
        )?;
        let max_count = map.cells.iter().map(|c| c.total()).max().unwrap_or(0);
        let bad = map
            .cells
            .iter()
            .filter(|c| !c.flagged && c.euler_characteristic() != 2)
            .count();
        lines.push(format!(
            "eps={eps} cells={} max_fixed_points={max_count} euler_violations={bad}",
            map.cells.len()
        ));
    }
    out.table("bifurcation", &t)?;
    Ok(lines)
}

fn run_double_zero_curves(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let pts = double_zero_curves(cfg.samples as usize)?;
    let mut t = Table::new(&[("b", F), ("m", F), ("beta", F)]);
    for p in &pts {
        t.push(vec![p.b.into(), p.m.into(), p.beta.into()])?;
    }
    out.table("double_zero_curves", &t)?;
    let mut roots = Table::new(&[("eps", F), ("b", F)]);
    let mut lines = vec![format!(
        "curve_points={} triple_point=(m={}, beta={})",
        pts.len(),
        -(2f64.sqrt()),
        PI / 4.0
    )];
    for &eps in &cfg.eps {
        let rs = if eps > 0.0 { beta0_double_roots(eps)? } else { Vec::new() };
        for b in &rs {
            roots.push(vec![eps.into(), (*b).into()])?;
        }
        lines.push(format!("eps={eps} beta0_double_roots={}", rs.len()));
    }
    out.table("beta0_double_roots", &roots)?;
    Ok(lines)
}

fn run_megno_demo(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let mut checkpoints = Vec::new();
    let mut c = 16;
    while c < cfg.n {
        checkpoints.push(c);
        c *= 2;
    }
    checkpoints.push(cfg.n.max(4));
    let mut t = Table::new(&[
        ("eps", F),
        ("orbit", I),
        ("iterates", I),
        ("y_hat", F),
        ("y_improved", F),
        ("classical", F),
        ("regular_score", F),
    ]);
    let g = grid_rotation(cfg.theta, cfg.beta);
    let mut lines = Vec::new();
    for &eps in &cfg.eps {
        let f = TwistFamily::new(eps)?;
        let starts = crate::experiments::orbit_starts(cfg.n_p as usize, Seed::new(cfg.seed));
        let mut finals = Vec::new();
        for (k, s) in starts.iter().enumerate() {
            let run = |e| orbit_exponent(&g, &f, s, cfg.transient, &checkpoints, e);
            let plain = run(Estimator::Megno)?;
            let improved = run(Estimator::MegnoImproved)?;
            let classical = run(Estimator::Classical)?;
            for (j, &n) in checkpoints.iter().enumerate() {
                let nf = n as f64;
                t.push(vec![
                    eps.into(),
                    k.into(),
                    n.into(),
                    plain[j].into(),
                    improved[j].into(),
                    classical[j].into(),
                    ((plain[j] - 2.0 / nf).abs() * nf * nf).into(),
                ])?;
            }
            finals.push(*improved.last().expect("checkpoints"));
        }
        lines.push(format!(
            "eps={eps} theta={} beta={} orbits={} mean_improved={}",
            cfg.theta,
            cfg.beta,
            finals.len(),
            format_r(crate::stats::mean(&finals))
        ));
    }
    out.table("megno_demo", &t)?;
    Ok(lines)
}

fn run_linear_check(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<String>> {
    let a = cfg.linear_matrix().normalized()?;
    let ab = avila_bochi(&a)?;
    let coset = lambda_of_coset(&a, 4096)?;
    let mut ex = Table::new(&[
        ("a", F),
        ("b", F),
        ("c", F),
        ("d", F),
        ("avila_bochi", F),
        ("lambda_coset", F),
        ("abs_diff", F),
    ]);
    ex.push(vec![
        a.a.into(),
        a.b.into(),
        a.c.into(),
        a.d.into(),
        ab.into(),
        coset.into(),
        (coset - ab).abs().into(),
    ])?;
    out.table("linear_exponents", &ex)?;
    let mut lines = vec![format!(
        "avila_bochi={} lambda_coset={} diff={:.2e}",
        format_r(ab),
        format_r(coset),
        (coset - ab).abs()
    )];
    let mut ver = Table::new(&[("delta", F), ("n_alpha", I), ("n_z", I), ("max_deviation", F)]);
    let mut density = Table::new(&[("alpha", F), ("z", F), ("phi", F)]);
    if a.det() > 0.0 && cfg.delta < PI {
        let (dev, _) = verify_m_delta_lebesgue(&a, cfg.delta, cfg.n_alpha as usize, cfg.n_z as usize)?;
        ver.push(vec![cfg.delta.into(), cfg.n_alpha.into(), cfg.n_z.into(), dev.into()])?;
        lines.push(format!(
            "delta={} n_alpha={} n_z={} max_deviation={dev:.3e}",
            cfg.delta, cfg.n_alpha, cfg.n_z
        ));
        for alpha in [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
            let d = circle_operator_fixed_point(&a, alpha, cfg.delta, cfg.n_z as usize)?;
            for (z, phi) in d.points().into_iter().zip(&d.values) {
                density.push(vec![alpha.into(), z.into(), (*phi).into()])?;
            }
        }
    } else {
        lines.push("circle operator skipped: needs det > 0 and delta < pi".into());
    }
    out.table("linear_verification", &ver)?;
    out.table("linear_density", &density)?;
    Ok(lines)
}

/// Checks a written table: the echoed config reproduces the recorded hash
/// and seed, the body parses with its declared types, and table-specific
/// identities hold. Returns the list of problems found.
pub fn verify_table(header: &Header, table: &Table) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    let command: Command = header
        .get("subcommand")
        .ok_or_else(|| Error::Config("missing `subcommand` header".into()))?
        .parse()?;
    let mut cfg = ExperimentConfig::defaults(command);
    for (k, v) in &header.entries {
        if let Some(key) = k.strip_prefix("config.") {
            cfg.set(key, v)
                .map_err(|e| Error::Config(format!("header config.{key}: {e}")))?;
        }
    }
    if header.get("config_hash") != Some(cfg.hash().as_str()) {
        problems.push("config_hash does not match the echoed config".to_string());
    }
    if header.get("seed") != Some(cfg.seed.to_string().as_str()) {
        problems.push("seed header differs from config.seed".to_string());
    }
    if let Some(eps) = table.floats("eps") {
        for e in eps {
            if !cfg.eps.iter().any(|c| c.to_bits() == e.to_bits()) {
                problems.push(format!("eps = {e} is not in the configured list"));
            }
        }
    }
    let col = |name: &str| table.column(name);
    match header.get("table").unwrap_or("") {
        "random_exact" => {
            let (je, jr) = (col("eps"), col("R_quadrature"));
            if let (Some(je), Some(jr)) = (je, jr) {
                for row in &table.rows {
                    let eps = row[je].as_f64().unwrap_or(f64::NAN);
                    let r = row[jr].as_f64().unwrap_or(f64::NAN);
                    let q = random_exponent_quadrature(eps)?.value;
                    if q.to_bits() != r.to_bits() {
                        problems.push(format!("R_quadrature({eps}) = {r} but recomputes to {q}"));
                    }
                }
            }
        }
        "lambda_scan" => {
            if let (Some(jt), Some(jb), Some(jl), Some(jh)) =
                (col("theta"), col("beta"), col("lambda_g"), col("h"))
            {
                for row in &table.rows {
                    let f = |j: usize| row[j].as_f64().unwrap_or(f64::NAN);
                    let expect = f(jl) * f(jb).cos() * (1.0 - f(jt).cos()) * FRAC_PI_2;
                    if (expect - f(jh)).abs() > 1e-12 * (1.0 + expect.abs()) {
                        problems.push(format!("h = {} but λ cos β (1 − cos θ) π/2 = {expect}", f(jh)));
                    }
                }
            }
        }
        "bifurcation" => {
            if let (Some(je), Some(jh), Some(jr), Some(jc), Some(jf)) =
                (col("nE"), col("nH"), col("nR"), col("code"), col("flags"))
            {
                for row in &table.rows {
                    let n = |j: usize| row[j].as_f64().unwrap_or(f64::NAN) as usize;
                    let cell = BifurcationCell {
                        theta: 0.0,
                        beta: 0.0,
                        n_e: n(je),
                        n_h: n(jh),
                        n_r: n(jr),
                        flagged: false,
                        boundary: false,
                        max_modulus: 0.0,
                    };
                    if row[jc].as_str() != Some(cell.code().as_str()) {
                        problems.push(format!("code {:?} does not match counts", row[jc]));
                    }
                    let flagged = row[jf].as_str().is_some_and(|s| s.contains("flagged"));
                    if !flagged && cell.euler_characteristic() != 2 {
                        problems.push(format!("E − H + R = {} in an unflagged cell", cell.euler_characteristic()));
                    }
                }
            }
        }
        "double_zero_curves" => {
            if let (Some(jb), Some(jm), Some(jbeta)) = (col("b"), col("m"), col("beta")) {
                for row in &table.rows {
                    let f = |j: usize| row[j].as_f64().unwrap_or(f64::NAN);
                    let (v, d) = limit_equation(f(jb), f(jm), f(jbeta));
                    if v.abs() > 1e-9 || d.abs() > 1e-9 {
                        problems.push(format!("b = {} is not a double zero", f(jb)));
                    }
                }
            }
        }
        _ => {}
    }
    Ok(problems)
}

fn verify_file(path: &Path, stdout: &mut dyn Write) -> Result<()> {
    let (header, table) = Table::read(path)?;
    let problems = verify_table(&header, &table)?;
    if problems.is_empty() {
        writeln!(stdout, "OK {} ({} rows)", path.display(), table.rows.len())?;
        Ok(())
    } else {
        for p in &problems {
            writeln!(stdout, "MISMATCH {p}")?;
        }
        Err(Error::Numeric(format!(
            "{} inconsistencies in {}",
            problems.len(),
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_formatting() {
        assert_eq!(format_r(0.054751807434579795), "0.0547518");
        assert_eq!(format_r(0.0), "0");
        assert_eq!(format_r(-1e-12), "0");
        assert_eq!(format_r(1.5), "1.5");
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
