//! Experiment runner: named figure reproductions, parameter sweeps,
//! classification reports and spectral scans, emitted as CSV plus a
//! machine-parseable `key = value` summary.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;

use loopdecay::closedform::AsymmetricModel;
use loopdecay::config::{dispersion_from_config, ConfigDoc};
use loopdecay::csvio;
use loopdecay::dynamics::{
    evolve, fit_decay_rate, growth_diagnostic, growth_diagnostic_amplitude, plateau_estimate,
    Representation, SimConfig, Trajectory,
};
use loopdecay::lattice::{Dispersion, LoopLocation};
use loopdecay::spectral::{self, CouplingProfile, SelfEnergy};
use loopdecay::stability::{classify, RegimeClass};

const OUT_ENV: &str = "LOOPDECAY_OUT";

#[derive(Parser)]
#[command(
    name = "loopdecay",
    version,
    about = "Decay and amplification of a discrete level coupled to a non-Hermitian band"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one trajectory and write CSVs plus a summary record.
    Simulate(SimulateArgs),
    /// Classify the bare continuum from its complex saddle points.
    Classify(ClassifyArgs),
    /// Scan the self-energy on a rectangular omega grid.
    Spectral(SpectralArgs),
    /// Locate the resolvent pole and its residue.
    Pole(PoleArgs),
    /// Trajectories for the three hopping regimes (complete/fractional decay,
    /// Rabi oscillation, pseudo-exponential growth).
    Fig3(Fig3Args),
    /// Growth diagnostics (1/t) log[|c_a| t^alpha] in the absolute regime.
    Fig4(Fig4Args),
    /// Sweep one or two model parameters and tabulate regime/pole/plateau.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Forward hopping rate (needs --kappa2).
    #[arg(long)]
    kappa1: Option<f64>,
    /// Backward hopping rate (needs --kappa1).
    #[arg(long)]
    kappa2: Option<f64>,
    /// Loop semi-axis D1 = kappa1 + kappa2 (needs --delta2).
    #[arg(long)]
    delta1: Option<f64>,
    /// Loop semi-axis D2 = kappa1 - kappa2 (needs --delta1).
    #[arg(long)]
    delta2: Option<f64>,
    /// Discrete-state coupling to site 0.
    #[arg(long)]
    sigma: Option<f64>,
    /// Discrete-state energy.
    #[arg(long = "omega-a")]
    omega_a: Option<f64>,
    /// Structured text config; command-line flags win over it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Lattice half-width (sites -N..N); auto-sized when omitted.
    #[arg(long = "half-width")]
    half_width: Option<usize>,
    #[arg(long, value_enum)]
    representation: Option<RepArg>,
    #[arg(long = "bloch-grid")]
    bloch_grid: Option<usize>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output directory (default: $LOOPDECAY_OUT, else `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write minimal SVG line plots.
    #[arg(long)]
    svg: bool,
}

#[derive(ValueEnum, Clone, Copy)]
enum RepArg {
    Wannier,
    Bloch,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    /// Write classify.csv in addition to the text report.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SpectralArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long = "re-min")]
    re_min: Option<f64>,
    #[arg(long = "re-max")]
    re_max: Option<f64>,
    #[arg(long = "im-min")]
    im_min: Option<f64>,
    #[arg(long = "im-max")]
    im_max: Option<f64>,
    /// Grid points per axis.
    #[arg(long = "grid-steps", default_value_t = 41)]
    grid_steps: usize,
}

#[derive(Args)]
struct PoleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum Panel {
    Left,
    Center,
    Right,
}

#[derive(Args)]
struct Fig3Args {
    /// Which panel to run (all three when omitted).
    #[arg(long, value_enum)]
    panel: Option<Panel>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct Fig4Args {
    /// Comma-separated diagnostic exponents.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 0.5, 0.0, -0.5])]
    alphas: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Debug)]
enum SweepParam {
    OmegaA,
    Sigma,
    Delta1,
    Delta2,
    Kappa1,
    Kappa2,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::OmegaA => "omega_a",
            SweepParam::Sigma => "sigma",
            SweepParam::Delta1 => "delta1",
            SweepParam::Delta2 => "delta2",
            SweepParam::Kappa1 => "kappa1",
            SweepParam::Kappa2 => "kappa2",
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    out: OutArgs,
    #[arg(long, value_enum)]
    param: SweepParam,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, value_enum)]
    param2: Option<SweepParam>,
    #[arg(long)]
    from2: Option<f64>,
    #[arg(long)]
    to2: Option<f64>,
    #[arg(long)]
    steps2: Option<usize>,
    /// Refuse grids larger than this.
    #[arg(long, default_value_t = 10_000)]
    cap: usize,
}

enum CliError {
    Usage(String),
    Numeric(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<loopdecay::Error> for CliError {
    fn from(e: loopdecay::Error) -> Self {
        match e {
            loopdecay::Error::InvalidConfig(_) | loopdecay::Error::InvalidModel(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numeric(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Classify(a) => cmd_classify(a),
        Cmd::Spectral(a) => cmd_spectral(a),
        Cmd::Pole(a) => cmd_pole(a),
        Cmd::Fig3(a) => cmd_fig3(a),
        Cmd::Fig4(a) => cmd_fig4(a),
        Cmd::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Model resolved from flags and/or config file.
struct Model {
    disp: Dispersion,
    coupling: CouplingProfile,
    preset: Option<AsymmetricModel>,
    description: String,
}

fn load_config(path: &Option<PathBuf>) -> Result<ConfigDoc, CliError> {
    match path {
        None => Ok(ConfigDoc::new()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(ConfigDoc::parse(&text)?)
        }
    }
}

fn resolve_model(args: &ModelArgs) -> Result<Model, CliError> {
    let doc = load_config(&args.config)?;

    let kappa_flags = (args.kappa1, args.kappa2);
    let delta_flags = (args.delta1, args.delta2);
    if kappa_flags.0.is_some() != kappa_flags.1.is_some() {
        return Err(usage("--kappa1 and --kappa2 must be given together"));
    }
    if delta_flags.0.is_some() != delta_flags.1.is_some() {
        return Err(usage("--delta1 and --delta2 must be given together"));
    }

    let kappas = match kappa_flags {
        (Some(a), Some(b)) => Some((a, b)),
        _ => match (doc.get_f64("model", "kappa1")?, doc.get_f64("model", "kappa2")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(usage("config [model] needs both kappa1 and kappa2")),
        },
    };
    let deltas = match delta_flags {
        (Some(a), Some(b)) => Some((a, b)),
        _ => match (doc.get_f64("model", "delta1")?, doc.get_f64("model", "delta2")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => return Err(usage("config [model] needs both delta1 and delta2")),
        },
    };
    let raw = doc.has_section("dispersion");

    let sources = [kappas.is_some(), deltas.is_some(), raw]
        .iter()
        .filter(|&&x| x)
        .count();
    if sources == 0 {
        return Err(usage(
            "no model given: use --kappa1/--kappa2, --delta1/--delta2, or a config with [model]/[dispersion]",
        ));
    }
    if sources > 1 {
        return Err(usage(
            "exactly one model source allowed (rates, semi-axes, or raw coefficients)",
        ));
    }

    // coupling: flags beat config; sigma defaults to 0.2, omega_a to 0
    let sigma_cfg = doc.get_complex("coupling", "sigma")?;
    let omega_a = args
        .omega_a
        .or(doc.get_f64("coupling", "omega_a")?)
        .unwrap_or(0.0);
    let sigma = match args.sigma {
        Some(s) => Complex64::new(s, 0.0),
        None => sigma_cfg.unwrap_or(Complex64::new(0.2, 0.0)),
    };

    if raw {
        let disp = dispersion_from_config(&doc)?;
        let mut sites = std::collections::BTreeMap::new();
        for key in doc.keys("coupling").collect::<Vec<_>>() {
            if let Some(nstr) = key.strip_prefix('n') {
                if let Ok(n) = nstr.parse::<i64>() {
                    if let Some(v) = doc.get_complex("coupling", key)? {
                        sites.insert(n, v);
                    }
                }
            }
        }
        // site 0: an explicit flag wins, then the config's `sigma` key,
        // then the default, unless the config already placed couplings
        if args.sigma.is_some() || sigma_cfg.is_some() || sites.is_empty() {
            sites.insert(0i64, sigma);
        }
        let coupling = CouplingProfile::new(sites, omega_a);
        return Ok(Model {
            description: "raw coefficients".to_string(),
            disp,
            coupling,
            preset: None,
        });
    }

    let (kappa1, kappa2) = match (kappas, deltas) {
        (Some(k), None) => k,
        (None, Some((d1, d2))) => ((d1 + d2) / 2.0, (d1 - d2) / 2.0),
        _ => unreachable!(),
    };
    let preset = AsymmetricModel::new(kappa1, kappa2, sigma, omega_a)?;
    Ok(Model {
        disp: preset.dispersion(),
        coupling: preset.coupling(),
        description: format!("asymmetric kappa1={kappa1} kappa2={kappa2}"),
        preset: Some(preset),
    })
}

fn resolve_sim(
    run: &RunArgs,
    config: &Option<PathBuf>,
    model: &Model,
    default_t: f64,
) -> Result<SimConfig, CliError> {
    let doc = load_config(config)?;
    let t_final = run
        .t_final
        .or(doc.get_f64("simulation", "t_final")?)
        .unwrap_or(default_t);
    if !(t_final > 0.0) {
        return Err(usage("t_final must be positive"));
    }
    let mut cfg = SimConfig::auto(&model.disp, &model.coupling, t_final);
    if let Some(dt) = run.dt.or(doc.get_f64("simulation", "dt")?) {
        if !(dt > 0.0) {
            return Err(usage("dt must be positive"));
        }
        cfg.dt = dt;
    }
    if let Some(h) = run.half_width.or(doc.get_usize("simulation", "half_width")?) {
        cfg.half_width = h;
    }
    cfg.representation = match run.representation {
        Some(RepArg::Wannier) => Representation::Wannier,
        Some(RepArg::Bloch) => Representation::Bloch,
        None => match doc.get("simulation", "representation") {
            Some("bloch") => Representation::Bloch,
            Some("wannier") | None => Representation::Wannier,
            Some(other) => return Err(usage(format!("unknown representation `{other}`"))),
        },
    };
    if let Some(m) = run.bloch_grid.or(doc.get_usize("simulation", "bloch_grid")?) {
        cfg.bloch_grid = m;
    }
    Ok(cfg)
}

fn out_dir(out: &OutArgs, config: &Option<PathBuf>) -> Result<PathBuf, CliError> {
    let doc = load_config(config)?;
    let dir = out
        .out
        .clone()
        .or_else(|| std::env::var(OUT_ENV).ok().map(PathBuf::from))
        .or_else(|| doc.get("output", "dir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Machine-parseable `key = value` record with trailing warning lines.
#[derive(Default)]
struct Summary {
    lines: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Summary {
    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn push_complex(&mut self, key: &str, value: Complex64) {
        self.lines.push((format!("{key}_re"), value.re.to_string()));
        self.lines.push((format!("{key}_im"), value.im.to_string()));
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning = {w}");
        }
        out
    }
}

fn describe_regime(summary: &mut Summary, model: &Model, rc: &RegimeClass) {
    summary.push("verdict", rc.verdict);
    summary.push("boundary_flag", rc.boundary_flag);
    summary.push("max_im_on_axis", rc.max_im_on_axis);
    if let Some(p) = model.preset {
        summary.push("regime", p.regime());
    }
    if let Some(s) = &rc.critical_saddle {
        summary.push_complex("critical_saddle_k", s.k);
        summary.push_complex("critical_saddle_omega", s.omega);
        summary.push("critical_saddle_order", s.order);
    }
}

fn describe_pole(summary: &mut Summary, model: &Model) {
    match spectral::find_pole(&model.disp, &model.coupling) {
        Ok(r) => {
            summary.push_complex("omega_p", r.pole);
            summary.push_complex("residue", r.residue);
            summary.push(
                "pole_location",
                match r.pole_location {
                    LoopLocation::Inside => "inside",
                    LoopLocation::Outside => "outside",
                    LoopLocation::OnLoop => "on_loop",
                },
            );
            for (i, b) in r.branch_points.iter().enumerate() {
                summary.push_complex(&format!("branch_point_{}", i + 1), b.omega);
                summary.push(&format!("branch_point_{}_nu", i + 1), b.nu);
            }
            if let Some(cut) = r.cut {
                summary.push("cut_rate", cut.rate);
                summary.push("cut_power", cut.power);
            }
        }
        Err(e) => summary.warn(format!("pole search failed: {e}")),
    }
}

fn describe_trajectory(summary: &mut Summary, traj: &Trajectory) {
    summary.push("t_final", traj.times.last().unwrap());
    summary.push("p_a_final", traj.c_a.last().unwrap().norm_sqr());
    if let Some(t) = traj.containment_violated_at {
        summary.push("containment_ok", false);
        summary.warn(format!(
            "containment violated at t = {t}; boundary amplitudes exceeded 1e-10"
        ));
    } else {
        summary.push("containment_ok", true);
    }
    if let Some(t) = traj.truncated_at {
        summary.warn(format!("overflow guard truncated the run at t = {t}"));
    }
    match plateau_estimate(traj, 0.2) {
        Ok(p) => {
            summary.push("plateau_mean", p.mean);
            summary.push("plateau_std", p.std_dev);
            summary.push("plateau_converged", p.converged);
        }
        Err(e) => summary.warn(format!("plateau estimate unavailable: {e}")),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let model = resolve_model(&args.model)?;
    let cfg = resolve_sim(&args.run, &args.model.config, &model, 150.0)?;
    let dir = out_dir(&args.out, &args.model.config)?;

    let traj = evolve(&model.disp, &model.coupling, &cfg);

    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    write_file(&dir.join("trajectory.csv"), &csv)?;
    let mut snaps = Vec::new();
    traj.write_snapshots_csv(&mut snaps)?;
    write_file(&dir.join("snapshots.csv"), &snaps)?;

    let mut summary = Summary::default();
    summary.push("model", &model.description);
    summary.push("omega_a", model.coupling.omega_a());
    match classify(&model.disp) {
        Ok(rc) => describe_regime(&mut summary, &model, &rc),
        Err(e) => summary.warn(format!("classification failed: {e}")),
    }
    describe_pole(&mut summary, &model);
    describe_trajectory(&mut summary, &traj);
    if let Ok(rate) = fit_decay_rate(&traj, 0.15 * cfg.t_final, 0.6 * cfg.t_final) {
        summary.push("fitted_decay_rate", rate);
    }
    let text = summary.to_text();
    print!("{text}");
    write_file(&dir.join("summary.txt"), text.as_bytes())?;

    if args.out.svg {
        let pa = traj.survival();
        let pts: Vec<(f64, f64)> = traj.times.iter().copied().zip(pa).collect();
        let plot = svg::line_plot(
            "survival probability",
            &[svg::Series { label: "pa", points: &pts }],
        );
        write_file(&dir.join("trajectory.svg"), plot.as_bytes())?;
    }
    Ok(())
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), CliError> {
    let model = resolve_model(&args.model)?;
    let rc = classify(&model.disp)?;

    println!("{:<18} {}", "verdict", rc.verdict);
    if let Some(p) = model.preset {
        println!("{:<18} {}", "regime", p.regime());
    }
    println!("{:<18} {}", "boundary_flag", rc.boundary_flag);
    println!("{:<18} {:.9}", "max_im_on_axis", rc.max_im_on_axis);
    println!("saddles ({}):", rc.saddles.len());
    println!(
        "  {:>12} {:>12}   {:>12} {:>12}   {:>5}",
        "re_k", "im_k", "re_omega", "im_omega", "order"
    );
    for s in &rc.saddles {
        println!(
            "  {:>12.6} {:>12.6}   {:>12.6} {:>12.6}   {:>5}",
            s.k.re, s.k.im, s.omega.re, s.omega.im, s.order
        );
    }

    if args.csv {
        let dir = out_dir(&args.out, &args.model.config)?;
        let mut csv = String::new();
        csv.push_str(
            "verdict,boundary_flag,max_im_on_axis,saddle_index,re_k,im_k,re_omega,im_omega,order\n",
        );
        if rc.saddles.is_empty() {
            let _ = writeln!(
                csv,
                "{},{},{},,,,,,",
                rc.verdict,
                rc.boundary_flag,
                csvio::fmt(rc.max_im_on_axis)
            );
        }
        for (i, s) in rc.saddles.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                rc.verdict,
                rc.boundary_flag,
                csvio::fmt(rc.max_im_on_axis),
                i,
                csvio::fmt(s.k.re),
                csvio::fmt(s.k.im),
                csvio::fmt(s.omega.re),
                csvio::fmt(s.omega.im),
                s.order
            );
        }
        write_file(&dir.join("classify.csv"), csv.as_bytes())?;
    }
    Ok(())
}

fn cmd_spectral(args: SpectralArgs) -> Result<(), CliError> {
    if args.grid_steps < 2 {
        return Err(usage("--grid-steps must be at least 2"));
    }
    let model = resolve_model(&args.model)?;
    let dir = out_dir(&args.out, &args.model.config)?;
    let se = SelfEnergy::new(&model.disp, &model.coupling);
    let lp = se.energy_loop();

    // default window: the loop's bounding box scaled by 1.6
    let (mut re_lo, mut re_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut im_lo, mut im_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, w) in lp.samples() {
        re_lo = re_lo.min(w.re);
        re_hi = re_hi.max(w.re);
        im_lo = im_lo.min(w.im);
        im_hi = im_hi.max(w.im);
    }
    let widen = |lo: f64, hi: f64| {
        let mid = (lo + hi) / 2.0;
        let half = ((hi - lo) / 2.0).max(0.2) * 1.6;
        (mid - half, mid + half)
    };
    let (re_def_lo, re_def_hi) = widen(re_lo, re_hi);
    let (im_def_lo, im_def_hi) = widen(im_lo, im_hi);
    let re_min = args.re_min.unwrap_or(re_def_lo);
    let re_max = args.re_max.unwrap_or(re_def_hi);
    let im_min = args.im_min.unwrap_or(im_def_lo);
    let im_max = args.im_max.unwrap_or(im_def_hi);
    if !(re_max > re_min) || !(im_max > im_min) {
        return Err(usage("empty omega window"));
    }

    let n = args.grid_steps;
    let points: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let i = idx / n;
            let j = idx % n;
            Complex64::new(
                re_min + (re_max - re_min) * j as f64 / (n - 1) as f64,
                im_min + (im_max - im_min) * i as f64 / (n - 1) as f64,
            )
        })
        .collect();

    let rows: Vec<String> = points
        .par_iter()
        .map(|&w| {
            let mut out = String::new();
            let loc = match lp.contains(w) {
                Ok(loc) => loc,
                Err(_) => return out,
            };
            if loc == LoopLocation::OnLoop {
                return out;
            }
            if let Ok(sigma) = se.eval(w) {
                let _ = writeln!(
                    out,
                    "{},{},{},{},1",
                    csvio::fmt(w.re),
                    csvio::fmt(w.im),
                    csvio::fmt(sigma.re),
                    csvio::fmt(sigma.im)
                );
            }
            if loc == LoopLocation::Inside {
                let anchor = lp.nearest_sample(w);
                if let Ok(sigma2) = se.eval_continued_from(anchor, w) {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},2",
                        csvio::fmt(w.re),
                        csvio::fmt(w.im),
                        csvio::fmt(sigma2.re),
                        csvio::fmt(sigma2.im)
                    );
                }
            }
            out
        })
        .collect();

    let mut csv = String::from("re_omega,im_omega,re_sigma,im_sigma,sheet\n");
    for row in rows {
        csv.push_str(&row);
    }
    write_file(&dir.join("spectral.csv"), csv.as_bytes())?;
    Ok(())
}

fn cmd_pole(args: PoleArgs) -> Result<(), CliError> {
    let model = resolve_model(&args.model)?;
    let mut summary = Summary::default();
    summary.push("model", &model.description);
    summary.push("omega_a", model.coupling.omega_a());
    let r = spectral::find_pole(&model.disp, &model.coupling)?;
    summary.push_complex("omega_p", r.pole);
    summary.push_complex("residue", r.residue);
    summary.push("residue_sq", r.residue.norm_sqr());
    summary.push(
        "pole_location",
        match r.pole_location {
            LoopLocation::Inside => "inside",
            LoopLocation::Outside => "outside",
            LoopLocation::OnLoop => "on_loop",
        },
    );
    for (i, b) in r.branch_points.iter().enumerate() {
        summary.push_complex(&format!("branch_point_{}", i + 1), b.omega);
        summary.push(&format!("branch_point_{}_nu", i + 1), b.nu);
    }
    if let Some(cut) = r.cut {
        summary.push("cut_rate", cut.rate);
        summary.push("cut_power", cut.power);
    }
    let text = summary.to_text();
    print!("{text}");
    if args.out.out.is_some() || std::env::var(OUT_ENV).is_ok() {
        let dir = out_dir(&args.out, &args.model.config)?;
        write_file(&dir.join("pole.txt"), text.as_bytes())?;
    }
    Ok(())
}

fn cmd_fig3(args: Fig3Args) -> Result<(), CliError> {
    let dir = out_dir(&args.out, &None)?;
    let panels: Vec<Panel> = match args.panel {
        Some(p) => vec![p],
        None => vec![Panel::Left, Panel::Center, Panel::Right],
    };
    let mut summary = Summary::default();
    let mut plots: Vec<(String, Vec<(f64, f64)>)> = Vec::new();

    for panel in panels {
        // all panels run at D1 = 1, sigma = 0.2
        let (delta2, omegas, t_default, name): (f64, &[f64], f64, &str) = match panel {
            Panel::Left => (0.7, &[0.0, 0.8], 150.0, "left"),
            Panel::Center => (1.0, &[0.0], 60.0, "center"),
            Panel::Right => (1.2, &[0.0], 40.0, "right"),
        };
        for &omega_a in omegas {
            let preset =
                AsymmetricModel::from_deltas(1.0, delta2, Complex64::new(0.2, 0.0), omega_a)?;
            let model = Model {
                disp: preset.dispersion(),
                coupling: preset.coupling(),
                description: format!("asymmetric delta1=1 delta2={delta2}"),
                preset: Some(preset),
            };
            let cfg = resolve_sim(&args.run, &None, &model, t_default)?;
            let traj = evolve(&model.disp, &model.coupling, &cfg);
            let tag = if omegas.len() > 1 {
                format!("fig3_{name}_omega_a_{omega_a}")
            } else {
                format!("fig3_{name}")
            };
            let mut csv = Vec::new();
            traj.write_csv(&mut csv)?;
            write_file(&dir.join(format!("{tag}.csv")), &csv)?;

            summary.push(&format!("{tag}_delta2"), delta2);
            summary.push(&format!("{tag}_omega_a"), omega_a);
            match classify(&model.disp) {
                Ok(rc) => summary.push(&format!("{tag}_verdict"), rc.verdict),
                Err(e) => summary.warn(format!("{tag}: classification failed: {e}")),
            }
            if let Ok(r) = spectral::find_pole(&model.disp, &model.coupling) {
                summary.push(&format!("{tag}_omega_p_re"), r.pole.re);
                summary.push(&format!("{tag}_omega_p_im"), r.pole.im);
            }
            if let Ok(p) = plateau_estimate(&traj, 0.2) {
                summary.push(&format!("{tag}_plateau"), p.mean);
            }
            let pa = traj.survival();
            plots.push((tag, traj.times.iter().copied().zip(pa).collect()));
        }
    }
    let text = summary.to_text();
    print!("{text}");
    write_file(&dir.join("fig3_summary.txt"), text.as_bytes())?;

    if args.out.svg {
        for (tag, pts) in &plots {
            // growth panels span many decades; plot log10 there
            let span_large = pts.iter().any(|&(_, p)| p > 1e3);
            let (label, data): (String, Vec<(f64, f64)>) = if span_large {
                (
                    format!("log10 pa ({tag})"),
                    pts.iter()
                        .filter(|&&(_, p)| p > 0.0)
                        .map(|&(t, p)| (t, p.log10()))
                        .collect(),
                )
            } else {
                (format!("pa ({tag})"), pts.clone())
            };
            let plot = svg::line_plot(tag, &[svg::Series { label: &label, points: &data }]);
            write_file(&dir.join(format!("{tag}.svg")), plot.as_bytes())?;
        }
    }
    Ok(())
}

fn cmd_fig4(args: Fig4Args) -> Result<(), CliError> {
    if args.alphas.is_empty() {
        return Err(usage("--alphas needs at least one exponent"));
    }
    let dir = out_dir(&args.out, &None)?;
    let preset = AsymmetricModel::from_deltas(1.0, 1.2, Complex64::new(0.2, 0.0), 0.0)?;
    let model = Model {
        disp: preset.dispersion(),
        coupling: preset.coupling(),
        description: "asymmetric delta1=1 delta2=1.2".to_string(),
        preset: Some(preset),
    };
    let cfg = resolve_sim(&args.run, &None, &model, 200.0)?;
    let traj = evolve(&model.disp, &model.coupling, &cfg);
    if traj.truncated_at.is_some() {
        return Err(CliError::Numeric("growth run overflowed before t_final".into()));
    }

    let reference = 0.44f64.sqrt();
    let mut amp_series = Vec::new();
    let mut pa_series = Vec::new();
    for &alpha in &args.alphas {
        amp_series.push(
            growth_diagnostic_amplitude(&traj, alpha).map_err(|e| CliError::Numeric(e.to_string()))?,
        );
        pa_series
            .push(growth_diagnostic(&traj, alpha).map_err(|e| CliError::Numeric(e.to_string()))?);
    }

    let mut csv = String::from("t");
    for &a in &args.alphas {
        let _ = write!(csv, ",amp_{a}");
    }
    for &a in &args.alphas {
        let _ = write!(csv, ",pa_{a}");
    }
    csv.push_str(",ref\n");
    for i in 0..amp_series[0].len() {
        let mut line = csvio::fmt(amp_series[0][i].0);
        for s in &amp_series {
            let _ = write!(line, ",{}", csvio::fmt(s[i].1));
        }
        for s in &pa_series {
            let _ = write!(line, ",{}", csvio::fmt(s[i].1));
        }
        let _ = write!(line, ",{}", csvio::fmt(reference));
        line.push('\n');
        csv.push_str(&line);
    }
    write_file(&dir.join("fig4.csv"), csv.as_bytes())?;

    let mut summary = Summary::default();
    summary.push("model", &model.description);
    summary.push("reference_rate", reference);
    for (s, &a) in amp_series.iter().zip(&args.alphas) {
        summary.push(&format!("amp_diag_alpha_{a}_at_t_final"), s.last().unwrap().1);
    }
    for (s, &a) in pa_series.iter().zip(&args.alphas) {
        summary.push(&format!("pa_diag_alpha_{a}_at_t_final"), s.last().unwrap().1);
    }
    summary.push(
        "note",
        "amplitude convention approaches the saddle rate; probability convention plateaus near twice that value",
    );
    let text = summary.to_text();
    print!("{text}");
    write_file(&dir.join("fig4_summary.txt"), text.as_bytes())?;

    if args.out.svg {
        let refline: Vec<(f64, f64)> =
            amp_series[0].iter().map(|&(t, _)| (t, reference)).collect();
        let labels: Vec<String> = args.alphas.iter().map(|a| format!("alpha = {a}")).collect();
        let mut series = Vec::new();
        for (s, label) in amp_series.iter().zip(&labels) {
            series.push(svg::Series { label, points: s });
        }
        series.push(svg::Series { label: "reference", points: &refline });
        let plot = svg::line_plot("(1/t) log[|c_a| t^alpha]", &series);
        write_file(&dir.join("fig4.svg"), plot.as_bytes())?;
    }
    Ok(())
}

fn apply_sweep_param(
    model: &Model,
    param: SweepParam,
    value: f64,
) -> Result<(Dispersion, CouplingProfile, Option<AsymmetricModel>), CliError> {
    match param {
        SweepParam::OmegaA => Ok((
            model.disp.clone(),
            model.coupling.clone().with_omega_a(value),
            model
                .preset
                .map(|p| AsymmetricModel::new(p.kappa1(), p.kappa2(), p.sigma(), value))
                .transpose()?,
        )),
        SweepParam::Sigma => {
            let preset = model
                .preset
                .map(|p| {
                    AsymmetricModel::new(p.kappa1(), p.kappa2(), Complex64::new(value, 0.0), p.omega_a())
                })
                .transpose()?;
            let coupling =
                CouplingProfile::point(Complex64::new(value, 0.0), model.coupling.omega_a());
            Ok((model.disp.clone(), coupling, preset))
        }
        _ => {
            let p = model
                .preset
                .ok_or_else(|| usage("sweeping hopping parameters requires a preset model"))?;
            let (k1, k2) = match param {
                SweepParam::Kappa1 => (value, p.kappa2()),
                SweepParam::Kappa2 => (p.kappa1(), value),
                SweepParam::Delta1 => ((value + p.delta2()) / 2.0, (value - p.delta2()) / 2.0),
                SweepParam::Delta2 => ((p.delta1() + value) / 2.0, (p.delta1() - value) / 2.0),
                _ => unreachable!(),
            };
            let np = AsymmetricModel::new(k1, k2, p.sigma(), p.omega_a())?;
            Ok((np.dispersion(), np.coupling(), Some(np)))
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.steps == 0 {
        return Err(usage("--steps must be positive (empty range)"));
    }
    let second = match (args.param2, args.from2, args.to2, args.steps2) {
        (None, None, None, None) => None,
        (Some(p), Some(a), Some(b), Some(n)) => {
            if n == 0 {
                return Err(usage("--steps2 must be positive (empty range)"));
            }
            Some((p, a, b, n))
        }
        _ => return Err(usage("--param2 needs --from2, --to2 and --steps2")),
    };
    let total = args.steps * second.map_or(1, |s| s.3);
    if total > args.cap {
        return Err(usage(format!(
            "grid of {total} points exceeds the cap {}",
            args.cap
        )));
    }
    let model = resolve_model(&args.model)?;
    let dir = out_dir(&args.out, &args.model.config)?;
    let t_final = args.run.t_final.unwrap_or(100.0);

    let grid_axis = |from: f64, to: f64, steps: usize| -> Vec<f64> {
        (0..steps)
            .map(|i| {
                if steps == 1 {
                    from
                } else {
                    from + (to - from) * i as f64 / (steps - 1) as f64
                }
            })
            .collect()
    };
    let axis1 = grid_axis(args.from, args.to, args.steps);
    let mut grid: Vec<Vec<f64>> = Vec::new();
    match second {
        None => {
            for &v in &axis1 {
                grid.push(vec![v]);
            }
        }
        Some((_, a, b, n)) => {
            let axis2 = grid_axis(a, b, n);
            for &v1 in &axis1 {
                for &v2 in &axis2 {
                    grid.push(vec![v1, v2]);
                }
            }
        }
    }

    let dt_override = args.run.dt;
    let rows: Vec<String> = grid
        .par_iter()
        .map(|values| {
            let mut vals = String::new();
            for v in values {
                let _ = write!(vals, "{},", csvio::fmt(*v));
            }
            let built = apply_sweep_param(&model, args.param, values[0]).and_then(|(d, cp, pr)| {
                match second {
                    None => Ok((d, cp, pr)),
                    Some((p2, _, _, _)) => {
                        let m = Model {
                            disp: d,
                            coupling: cp,
                            preset: pr,
                            description: String::new(),
                        };
                        apply_sweep_param(&m, p2, values[1])
                    }
                }
            });
            let (disp, coupling, _preset) = match built {
                Ok(t) => t,
                Err(_) => return format!("{vals},,,,model_invalid\n"),
            };
            let verdict = match classify(&disp) {
                Ok(rc) => format!(
                    "{}{}",
                    rc.verdict,
                    if rc.boundary_flag { "(boundary)" } else { "" }
                ),
                Err(_) => return format!("{vals},,,,classification_failed\n"),
            };
            let pole = spectral::find_pole(&disp, &coupling);
            let (pole_re, pole_im) = match &pole {
                Ok(r) => (csvio::fmt(r.pole.re), csvio::fmt(r.pole.im)),
                Err(_) => (String::new(), String::new()),
            };
            let mut cfg = SimConfig::auto(&disp, &coupling, t_final);
            if let Some(dt) = dt_override {
                cfg.dt = dt;
            }
            let traj = evolve(&disp, &coupling, &cfg);
            let (plateau, mut status) = match plateau_estimate(&traj, 0.2) {
                Ok(p) => (csvio::fmt(p.mean), "ok".to_string()),
                Err(e) => (String::new(), format!("plateau_failed({e})")),
            };
            if pole.is_err() {
                status = format!("{status};pole_failed");
            }
            format!("{vals}{verdict},{pole_re},{pole_im},{plateau},{status}\n")
        })
        .collect();

    let mut csv = format!("{},", args.param.name());
    if let Some((p2, _, _, _)) = second {
        let _ = write!(csv, "{},", p2.name());
    }
    csv.push_str("verdict,re_omega_p,im_omega_p,plateau,status\n");
    for r in rows {
        csv.push_str(&r);
    }
    write_file(&dir.join("sweep.csv"), csv.as_bytes())?;
    println!("swept {total} points");
    Ok(())
}
