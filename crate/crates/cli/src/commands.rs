use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use skewbm::cantor::{AlphaRule, CantorError, CantorSpec, GapModel};
use skewbm::measure::{CheckedMeasure, Span};
use skewbm::num::Verdict;
use skewbm::profile::Side;
use skewbm::report::{analyze as build_report, cantor_report};
use skewbm::sim::{
    default_grid_spacing, drift_consistency_check, estimate_local_time, estimate_occupation, natural_scale_around,
    simulate_grid_walk, simulate_paths, PathEnsemble, Scheme, SimConfig, SimError, Window,
};
use skewbm::specfile::{load_spec, Num, SpecError};
use skewbm::structure::{
    check_existence, construct_constants, glue_effective_intervals, ConstantsTarget, Density, SkewDensity, Structure,
    StructureError,
};
use thiserror::Error;

use crate::{GapModelChoice, SchemeChoice, SimulateArgs, TargetChoice};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Usage(String),
}

type Outcome = Result<u8, CliError>;

const NO_PROCESS: u8 = 2;

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn load_measure(path: &Path) -> Result<(CheckedMeasure, String), CliError> {
    let file = load_spec(path)?;
    Ok((file.to_measure()?, file.hash()))
}

fn parse_num(s: &str, what: &str) -> Result<f64, CliError> {
    Num::parse(s).map(|n| n.0).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

pub fn analyze(spec: &Path, out: Option<&Path>) -> Outcome {
    let (m, hash) = load_measure(spec)?;
    let report = build_report(&m, &hash)?;
    let json = report.to_json();
    match out {
        Some(p) => {
            write_file(p, &json)?;
            println!(
                "exists: {}  unique: {}  irreducible: {}  effective intervals: {}",
                report.exists.verdict,
                report.unique.verdict,
                report.irreducible_exists.verdict,
                report.effective_intervals.len()
            );
        }
        None => println!("{json}"),
    }
    if report.exit_code() != 0 {
        eprintln!("no general skew Brownian motion exists for this measure");
    }
    Ok(report.exit_code() as u8)
}

fn set_label(s: &Span) -> String {
    format!("{}{},{}{}", if s.lo_closed { '[' } else { '(' }, s.lo, s.hi, if s.hi_closed { ']' } else { ')' })
}

struct Stats {
    occupation: String,
    local_time: String,
    drift: String,
}

impl Stats {
    fn new() -> Self {
        Stats {
            occupation: "scheme,set,at,estimate,stderr\n".into(),
            local_time: "scheme,z,eps,at,estimate,stderr,corrected,corrected_stderr\n".into(),
            drift: "scheme,residual,residual_stderr,drift,drift_stderr,discrepancy,discrepancy_stderr,consistent\n"
                .into(),
        }
    }

    fn record(
        &mut self,
        e: &PathEnsemble,
        m: &CheckedMeasure,
        sets: &[Span],
        levels: &[f64],
        eps: f64,
    ) -> Result<(), CliError> {
        let name = match e.scheme {
            Scheme::EulerNaturalScale => "euler",
            Scheme::GridWalk => "walk",
        };
        let at = *e.times.last().expect("horizon is saved");
        for s in sets {
            let o = estimate_occupation(e, s, at)?;
            let _ = writeln!(self.occupation, "{name},{},{at},{},{}", set_label(s), o.estimate, o.stderr);
        }
        for &z in levels {
            let lt = estimate_local_time(e, z, eps, at)?;
            let c = lt.best();
            let _ =
                writeln!(self.local_time, "{name},{z},{eps},{at},{},{},{},{}", lt.mean, lt.stderr, c.mean, c.stderr);
        }
        if m.is_finite_atomic() {
            let d = drift_consistency_check(e, m)?;
            let _ = writeln!(
                self.drift,
                "{name},{},{},{},{},{},{},{}",
                d.residual.mean,
                d.residual.stderr,
                d.drift.mean,
                d.drift.stderr,
                d.discrepancy.mean,
                d.discrepancy.stderr,
                d.consistent
            );
        }
        Ok(())
    }
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let (m, _) = load_measure(&args.spec)?;
    let structure = Arc::new(Structure::new(&m)?);
    let exists = check_existence(&structure).exists.verdict == Verdict::True;
    let (euler, walk) = match (exists, args.force) {
        (true, _) => (args.scheme != SchemeChoice::Walk, args.scheme != SchemeChoice::Euler && m.is_finite_atomic()),
        (false, true) => (false, true),
        (false, false) => {
            eprintln!("no general skew Brownian motion exists for this measure; --force runs the grid walk only");
            return Ok(NO_PROCESS);
        }
    };
    if args.scheme == SchemeChoice::Walk && !m.is_finite_atomic() {
        return Err(SimError::NotFiniteAtomic.into());
    }
    fs::create_dir_all(&args.out).map_err(|e| CliError::Io(args.out.display().to_string(), e))?;

    let t = args.horizon;
    let dt = args.dt.unwrap_or(1e-4 * t);
    let grid = match (walk, args.grid) {
        (false, _) => 0.0,
        (true, Some(h)) => h,
        (true, None) => default_grid_spacing(&m, args.x0, 0.01 * t.sqrt())
            .ok_or_else(|| CliError::Usage("no grid spacing puts every atom on the grid; pass --grid".into()))?,
    };
    let mut resolution: f64 = 0.0;
    if euler {
        resolution = resolution.max(dt.sqrt());
    }
    if walk {
        resolution = resolution.max(grid);
    }
    let eps = args.eps.unwrap_or(5.0 * resolution);

    let mut cuts: Vec<f64> = m.atoms().iter().map(|a| a.location).collect();
    if cuts.is_empty() {
        cuts.push(0.0);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let sets: Vec<Span> = std::iter::once(f64::NEG_INFINITY)
        .chain(cuts.iter().copied())
        .zip(cuts.iter().copied().chain(std::iter::once(f64::INFINITY)))
        .map(|(a, b)| Span::open(a, b))
        .collect();
    let windows = cuts.iter().flat_map(|&z| [Window::around(z, eps), Window::around(z, 2.0 * eps)]);
    let base = SimConfig::new(args.x0, t, args.paths, args.seed).with_windows(windows);

    let mut stats = Stats::new();
    if euler {
        let c = construct_constants(&structure, ConstantsTarget::AnyValid)?;
        let es = glue_effective_intervals(Arc::new(SkewDensity::new(structure.clone(), c)?));
        let transform = natural_scale_around(&es, args.x0, t)?;
        let e = simulate_paths(&transform, &base.clone().with_step(dt))?;
        stats.record(&e, &m, &sets, &cuts, eps)?;
        export_paths(&e, &args.out.join("paths_euler.csv"), args.export_paths)?;
        if e.clamped > 0 {
            eprintln!("warning: {} Euler steps reached the edge of the tabulated scale function", e.clamped);
        }
    }
    if walk {
        let e = simulate_grid_walk(&m, &base.clone().with_step(grid))?;
        stats.record(&e, &m, &sets, &cuts, eps)?;
        export_paths(&e, &args.out.join("paths_walk.csv"), args.export_paths)?;
    }
    write_file(&args.out.join("occupation.csv"), &stats.occupation)?;
    write_file(&args.out.join("local_time.csv"), &stats.local_time)?;
    if m.is_finite_atomic() {
        write_file(&args.out.join("drift.csv"), &stats.drift)?;
    }
    print!("{}", stats.occupation);
    Ok(if exists { 0 } else { NO_PROCESS })
}

fn export_paths(e: &PathEnsemble, path: &Path, n: usize) -> Result<(), CliError> {
    let mut buf = Vec::new();
    e.write_paths(&mut buf, ',', Some(n)).map_err(|err| CliError::Io(path.display().to_string(), err))?;
    fs::write(path, buf).map_err(|err| CliError::Io(path.display().to_string(), err))
}

pub fn cantor(
    alpha: Option<&str>,
    geometric: Option<&[String]>,
    depth: u32,
    model: GapModelChoice,
    beta: Option<&str>,
    out: Option<&Path>,
) -> Outcome {
    let model = match model {
        GapModelChoice::PowerLaw => GapModel::PowerLaw,
        GapModelChoice::MiddleProportion => GapModel::MiddleProportion,
    };
    let alphas = match (alpha, geometric) {
        (Some(a), None) => AlphaRule::Constant { alpha: parse_num(a, "alpha")? },
        (None, Some([first, ratio])) => AlphaRule::Geometric {
            first: parse_num(first, "geometric first")?,
            ratio: parse_num(ratio, "geometric ratio")?,
        },
        _ => return Err(CliError::Usage("give --alpha or --geometric FIRST RATIO".into())),
    };
    let beta = beta.map(|b| parse_num(b, "beta")).transpose()?;
    let report = cantor_report(&CantorSpec { alphas, depth, model }, beta)?;
    let json = report.to_json();
    match out {
        Some(p) => {
            write_file(p, &json)?;
            println!("regime: {}  ratio: {}", report.verdict.regime, report.verdict.ratio);
            if let Some(c) = &report.verdict.caveat {
                println!("note: {c}");
            }
        }
        None => println!("{json}"),
    }
    Ok(0)
}

pub fn construct(spec: &Path, target: TargetChoice, range: (f64, f64), points: usize, out: &Path) -> Outcome {
    let (m, _) = load_measure(spec)?;
    let structure = Arc::new(Structure::new(&m)?);
    let target = match target {
        TargetChoice::AnyValid => ConstantsTarget::AnyValid,
        TargetChoice::MaximallyGlued => ConstantsTarget::MaximallyGlued,
    };
    let c = match construct_constants(&structure, target) {
        Ok(c) => c,
        Err(StructureError::ConditionsNotMet(why)) => {
            eprintln!("no general skew Brownian motion exists: {why}");
            return Ok(NO_PROCESS);
        }
        Err(e) => return Err(e.into()),
    };
    if !(range.0 < range.1) || points < 2 {
        return Err(CliError::Usage("need lo < hi and at least two points".into()));
    }
    fs::create_dir_all(out).map_err(|e| CliError::Io(out.display().to_string(), e))?;
    let mut constants = String::from("label,a,b,c\n");
    for (g, c) in structure.decomposition().intervals.iter().zip(&c) {
        let _ = writeln!(constants, "{},{},{},{}", g.label, g.a, g.b, c);
    }
    let rho = SkewDensity::new(structure.clone(), c)?;
    let mut density = String::from("x,rho,rho_left\n");
    for j in 0..points {
        let x = range.0 + (range.1 - range.0) * j as f64 / (points - 1) as f64;
        let _ = writeln!(density, "{x},{},{}", rho.eval(x, Side::Right), rho.eval(x, Side::Left));
    }
    write_file(&out.join("constants.csv"), &constants)?;
    write_file(&out.join("density.csv"), &density)?;
    println!("{} constants written to {}", structure.len(), out.display());
    Ok(0)
}
