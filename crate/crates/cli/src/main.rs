//! Reproducible experiment runner for shrinker-lab.
//!
//! Subcommands:
//! - `run <config>`: execute a named experiment from a flat key-value config
//!   file and write CSV/JSON artifacts plus a manifest into a bundle
//!   directory under the output root (`SHRINKER_LAB_OUT`, default `runs`).
//! - `report <bundle>`: derive plot-ready long-format data files from a
//!   bundle (no rendering).
//! - `list`: print the experiment catalog.
//!
//! Exit codes: 0 success, 1 module error, 2 usage error. All floating-point
//! CSV output carries 17 significant digits; identical configs produce
//! byte-identical artifacts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use shrinker_lab::fields::ScalarField;
use shrinker_lab::flow::{run_flow_configured, FlowConfig, Stabilization, StepMode};
use shrinker_lab::geometry::{embedded_positions, gaussian_area, gaussian_measure};
use shrinker_lab::grid::BaseGrid;
use shrinker_lab::loja::{final_loj_check, fit_theta};
use shrinker_lab::operators::{assemble_l, euler_lagrange_m, spectrum};
use shrinker_lab::scales::{compute_scales, ScaleParams};
use shrinker_lab::shrinkers::{canonical_shrinker, GridSpec, Shrinker, ShrinkerKind};
use shrinker_lab::util::total_least_squares;
use shrinker_lab::weighted_spaces::PairSpec;
use shrinker_lab::Hypersurface;

#[derive(Parser)]
#[command(name = "shrinker-lab", version, about = "Numerical laboratory for self-shrinkers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a named experiment from a config file.
    Run {
        config: PathBuf,
        /// Evaluate independent family members on worker threads
        /// (deterministic merge order).
        #[arg(long)]
        parallel: bool,
    },
    /// Derive plot-ready data files from an existing bundle.
    Report { bundle: PathBuf },
    /// Print the experiment catalog.
    List {
        /// Machine-readable JSON catalog.
        #[arg(long)]
        json: bool,
    },
}

/// Usage errors exit 2; everything else (module errors, I/O) exits 1.
enum CliError {
    Usage(String),
    Module(String),
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Module(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, parallel } => cmd_run(&config, parallel),
        Cmd::Report { bundle } => cmd_report(&bundle),
        Cmd::List { json } => cmd_list(json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Module(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

// ---------------------------------------------------------------------------
// Config: flat key-value text with dotted section keys. Unknown keys are
// hard errors so a typo in a mathematical parameter cannot silently fall
// back to a default.

struct Config {
    map: BTreeMap<String, String>,
    taken: std::cell::RefCell<BTreeSet<String>>,
    raw: String,
}

impl Config {
    fn parse(text: &str) -> CliResult<Config> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(usage(format!("duplicate key `{key}`")));
            }
        }
        Ok(Config {
            map,
            taken: Default::default(),
            raw: text.to_string(),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.taken.borrow_mut().insert(key.to_string());
        self.map.get(key).map(|s| s.as_str())
    }

    fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("key `{key}`: `{v}` is not a number"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("key `{key}`: `{v}` is not an integer"))),
        }
    }

    fn reject_unknown(&self) -> CliResult<()> {
        let taken = self.taken.borrow();
        let unknown: Vec<&String> = self.map.keys().filter(|k| !taken.contains(*k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!(
                "unknown key(s): {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }
}

fn fmt17(x: f64) -> String {
    format!("{x:.17e}")
}

// ---------------------------------------------------------------------------
// Experiment catalog.

const EXPERIMENTS: [(&str, &str); 8] = [
    ("shrinker-verify", "certify a canonical shrinker: residual max|φ| at h and h/2, Gaussian area"),
    ("spectrum", "eigenvalues of the linearized operator L on a shrinker base"),
    ("flow-run", "rescaled mean-curvature flow of a graph; CSV trace of F, dissipation, norms, scales"),
    ("scales-trace", "the four geometric scales of a single graph state"),
    ("model-problem", "radial model ODE on the plane end: asymptotic slope c_m and decay rate"),
    ("extension", "conical extension of annulus data with the C²-matching cubic blend"),
    ("loja-fit", "empirical Łojasiewicz exponent from a family of graphs (TLS log-log fit)"),
    ("final-loja", "final localized Łojasiewicz–Simon inequality check for one graph state"),
];

fn cmd_list(json: bool) -> CliResult<()> {
    if json {
        let entries: Vec<serde_json::Value> = EXPERIMENTS
            .iter()
            .map(|(name, desc)| serde_json::json!({ "name": name, "description": desc }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&entries)?);
    } else {
        for (name, desc) in EXPERIMENTS {
            println!("{name:16} {desc}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Shared config fragments.

fn base_from(cfg: &Config) -> CliResult<Shrinker> {
    let kind = match cfg.str_or("base.kind", "line").as_str() {
        "line" => ShrinkerKind::Line,
        "circle" => ShrinkerKind::Circle,
        "plane" => ShrinkerKind::Plane,
        "sphere" => ShrinkerKind::Sphere,
        "cylinder" => ShrinkerKind::Cylinder,
        other => return Err(usage(format!("base.kind: unknown shrinker `{other}`"))),
    };
    let n = cfg.usize_or(
        "base.n",
        match kind {
            ShrinkerKind::Line | ShrinkerKind::Circle => 1,
            _ => 2,
        },
    )?;
    let spec = GridSpec {
        h: cfg.f64_or("grid.h", GridSpec::default().h)?,
        r_max: cfg.f64_or("grid.r_max", GridSpec::default().r_max)?,
        n_theta: cfg.usize_or("grid.n_theta", GridSpec::default().n_theta)?,
    };
    canonical_shrinker(kind, n, &spec).map_err(|e| CliError::Module(e.to_string()))
}

/// Initial height field from `init.c2` / `init.c3`: coefficients of the
/// lowest stable directions (x²−2 and x³−6x on the line; r²−4 and x²−y² on
/// the plane).
fn init_field(cfg: &Config, base: &Shrinker) -> CliResult<ScalarField> {
    let c2 = cfg.f64_or("init.c2", 0.0)?;
    let c3 = cfg.f64_or("init.c3", 0.0)?;
    let values = match &base.surface.grid {
        BaseGrid::Line { xs } => xs
            .iter()
            .map(|&x| c2 * (x * x - 2.0) + c3 * (x * x * x - 6.0 * x))
            .collect(),
        BaseGrid::PlanePolar { .. } => embedded_positions(&base.surface)
            .map_err(|e| CliError::Module(e.to_string()))?
            .iter()
            .map(|p| {
                c2 * (p[0] * p[0] + p[1] * p[1] - 4.0) + c3 * (p[0] * p[0] - p[1] * p[1])
            })
            .collect(),
        _ => {
            if c2 != 0.0 || c3 != 0.0 {
                return Err(usage(
                    "init.c2/init.c3 are only defined over line and plane bases",
                ));
            }
            vec![0.0; base.surface.grid.len()]
        }
    };
    Ok(ScalarField::new(values))
}

fn scale_params_from(cfg: &Config, base: &Shrinker) -> CliResult<ScaleParams> {
    let d = ScaleParams::default();
    let params = ScaleParams {
        ell: cfg.usize_or("scales.ell", d.ell)?,
        c_ell: cfg.f64_or("scales.c_ell", d.c_ell)?,
        beta0: cfg.f64_or("scales.beta0", d.beta0)?,
        b: cfg.f64_or("scales.b", d.b)?,
        r_core: cfg.f64_or("scales.r_core", d.r_core)?,
        alpha: cfg.f64_or("scales.alpha", d.alpha)?,
    };
    let n = base.surface.grid.n() as f64;
    if params.r_core <= (2.0 * n).sqrt() {
        return Err(usage(format!(
            "scales.r_core must exceed √(2n) = {:.4}",
            (2.0 * n).sqrt()
        )));
    }
    Ok(params)
}

fn theta_from(cfg: &Config) -> CliResult<f64> {
    let theta = cfg.f64_or("loja.theta", 0.5 - 1e-9)?;
    if !(0.0 < theta && theta < 0.5) {
        return Err(usage(format!("loja.theta must lie in (0, ½) (got {theta})")));
    }
    Ok(theta)
}

fn gamma_from(cfg: &Config) -> CliResult<f64> {
    let gamma = cfg.f64_or("loja.gamma", 1.5)?;
    if !(1.0 < gamma && gamma < 2.0) {
        return Err(usage(format!("loja.gamma must lie in (1, 2) (got {gamma})")));
    }
    Ok(gamma)
}

/// Named constants from the surrounding compactness theory. They gate no
/// computation here; the config accepts and echoes them so a study can pin
/// them alongside the active parameters.
fn take_named_constants(cfg: &Config) -> CliResult<()> {
    cfg.f64_or("constants.lambda0", 2.0)?;
    cfg.f64_or("constants.gamma_star", 1.0)?;
    cfg.f64_or("constants.rho_star", 1.0)?;
    cfg.f64_or("constants.delta_star", 1e-2)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// run

fn out_root() -> PathBuf {
    std::env::var_os("SHRINKER_LAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

struct Bundle {
    dir: PathBuf,
}

impl Bundle {
    fn create(name: &str) -> CliResult<Bundle> {
        let dir = out_root().join(name);
        std::fs::create_dir_all(&dir)?;
        Ok(Bundle { dir })
    }

    fn write(&self, file: &str, contents: &str) -> CliResult<()> {
        std::fs::write(self.dir.join(file), contents)?;
        Ok(())
    }
}

fn cmd_run(config_path: &Path, parallel: bool) -> CliResult<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let cfg = Config::parse(&text)?;
    let experiment = cfg
        .get("experiment")
        .ok_or_else(|| usage("missing key `experiment`"))?
        .to_string();
    if !EXPERIMENTS.iter().any(|(name, _)| *name == experiment) {
        return Err(usage(format!(
            "unknown experiment `{experiment}`; run `shrinker-lab list`"
        )));
    }
    take_named_constants(&cfg)?;
    let bundle_name = cfg.str_or("output.name", &experiment);
    let bundle = Bundle::create(&bundle_name)?;

    let artifacts: Vec<(String, String)> = match experiment.as_str() {
        "shrinker-verify" => run_shrinker_verify(&cfg)?,
        "spectrum" => run_spectrum(&cfg)?,
        "flow-run" => run_flow_experiment(&cfg)?,
        "scales-trace" => run_scales_trace(&cfg)?,
        "model-problem" => run_model_problem(&cfg)?,
        "extension" => run_extension(&cfg)?,
        "loja-fit" => run_loja_fit(&cfg, parallel)?,
        "final-loja" => run_final_loja(&cfg)?,
        _ => unreachable!(),
    };
    cfg.reject_unknown()?;

    for (file, contents) in &artifacts {
        bundle.write(file, contents)?;
    }
    let manifest = serde_json::json!({
        "experiment": experiment,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": format!("{:x}", Sha256::digest(cfg.raw.as_bytes())),
        "config": cfg.map,
        "artifacts": artifacts.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>(),
    });
    bundle.write("manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    println!("wrote bundle {}", bundle.dir.display());
    Ok(())
}

fn run_shrinker_verify(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let coarse = base_from(cfg)?;
    let h = cfg.f64_or("grid.h", GridSpec::default().h)?;
    let fine_spec = GridSpec {
        h: h / 2.0,
        r_max: cfg.f64_or("grid.r_max", GridSpec::default().r_max)?,
        n_theta: cfg.usize_or("grid.n_theta", GridSpec::default().n_theta)?,
    };
    let fine = canonical_shrinker(coarse.kind, coarse.surface.grid.n(), &fine_spec)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let area = gaussian_area(&fine.surface).map_err(|e| CliError::Module(e.to_string()))?;
    let ratio = if fine.max_phi > 0.0 {
        coarse.max_phi / fine.max_phi
    } else {
        f64::INFINITY
    };
    let json = serde_json::json!({
        "kind": format!("{:?}", coarse.kind),
        "n": coarse.surface.grid.n(),
        "max_phi_coarse": fmt17(coarse.max_phi),
        "max_phi_fine": fmt17(fine.max_phi),
        "refinement_ratio": fmt17(ratio),
        "gaussian_area": fmt17(area.value),
    });
    Ok(vec![("verify.json".into(), serde_json::to_string_pretty(&json)?)])
}

fn run_spectrum(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let count = cfg.usize_or("spectrum.count", 5)?;
    let gamma = cfg.f64_or("operator.gamma", 0.5)?;
    let op = assemble_l(&base, gamma, None).map_err(|e| CliError::Module(e.to_string()))?;
    let spec = spectrum(&op, count).map_err(|e| CliError::Module(e.to_string()))?;
    let json = serde_json::json!({
        "gamma": fmt17(gamma),
        "eigenvalues": spec.eigenvalues.iter().map(|&l| fmt17(l)).collect::<Vec<_>>(),
        "residuals": spec.residuals.iter().map(|&r| fmt17(r)).collect::<Vec<_>>(),
    });
    Ok(vec![("spectrum.json".into(), serde_json::to_string_pretty(&json)?)])
}

fn flow_config_from(cfg: &Config) -> CliResult<FlowConfig> {
    let mode = match cfg.str_or("flow.mode", "semi-implicit").as_str() {
        "explicit" => StepMode::Explicit,
        "semi-implicit" => StepMode::SemiImplicit,
        other => return Err(usage(format!("flow.mode: unknown stepper `{other}`"))),
    };
    let stabilization = match cfg.str_or("flow.stabilization", "project").as_str() {
        "none" => Stabilization::None,
        "project" => Stabilization::ProjectNonnegModes,
        other => return Err(usage(format!("flow.stabilization: unknown mode `{other}`"))),
    };
    Ok(FlowConfig {
        dtau: cfg.f64_or("flow.dtau", 0.01)?,
        mode,
        stabilization,
        grid_id: cfg.str_or("output.name", "flow-run"),
        seed: cfg.usize_or("seed", 0)? as u64,
        scale_stride: cfg.usize_or("flow.scale_stride", 25)?,
    })
}

fn run_flow_experiment(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let u0 = init_field(cfg, &base)?;
    let flow_cfg = flow_config_from(cfg)?;
    let tau_end = cfg.f64_or("flow.tau_end", 1.0)?;
    let params = scale_params_from(cfg, &base)?;
    let trace = run_flow_configured(&base, &u0, tau_end, &flow_cfg, &params)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let sidecar = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(&trace.config_json())?,
        "f_sigma": fmt17(trace.f_sigma),
        "truncated": trace.truncated,
        "blow_up": trace.blow_up,
    });
    Ok(vec![
        ("trace.csv".into(), trace.to_csv()),
        ("trace.json".into(), serde_json::to_string_pretty(&sidecar)?),
    ])
}

fn run_scales_trace(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let u = init_field(cfg, &base)?;
    let params = scale_params_from(cfg, &base)?;
    let m = Hypersurface::with_height(base.surface.grid.clone(), u.values.clone())
        .map_err(|e| CliError::Module(e.to_string()))?;
    let report = compute_scales(&m, &base, &params).map_err(|e| CliError::Module(e.to_string()))?;
    Ok(vec![(
        "scales.json".into(),
        serde_json::to_string_pretty(&report)?,
    )])
}

fn run_model_problem(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let m = cfg.usize_or("model.m", 2)?;
    let r_max = cfg.f64_or("model.r_max", 100.0)?;
    let sol = shrinker_lab::extension::solve_model_problem(m, r_max)
        .map_err(|e| CliError::Module(e.to_string()))?;
    let json = serde_json::json!({
        "m": sol.m,
        "c_m": fmt17(sol.c_m),
        "decay_slope": sol.decay_slope.map(fmt17),
    });
    Ok(vec![
        ("model.csv".into(), sol.to_csv()),
        ("model.json".into(), serde_json::to_string_pretty(&json)?),
    ])
}

fn run_extension(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let u = init_field(cfg, &base)?;
    let anchor = cfg.f64_or("extension.anchor", 5.0)?;
    let ext = shrinker_lab::extension::extend_to_cone(
        &base.surface,
        &u,
        anchor,
        &PairSpec::default(),
    )
    .map_err(|e| CliError::Module(e.to_string()))?;
    let json = serde_json::json!({
        "anchor_radius": fmt17(ext.anchor_radius),
        "cs_norm": serde_json::to_value(&ext.cs_norm)?,
    });
    Ok(vec![("extension.json".into(), serde_json::to_string_pretty(&json)?)])
}

/// The Hermite family used for the exponent fit: the two lowest stable
/// directions with seeded coefficients on a geometric amplitude ladder.
fn fit_family(cfg: &Config, base: &Shrinker) -> CliResult<Vec<ScalarField>> {
    let samples = cfg.usize_or("fit.samples", 24)?;
    let scale0 = cfg.f64_or("fit.scale0", 3e-5)?;
    let per_decade = cfg.f64_or("fit.samples_per_decade", 32.0)?;
    let seed = cfg.usize_or("seed", 7)? as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::with_capacity(samples);
    for k in 0..samples {
        let scale = scale0 * 10f64.powf(-(k as f64) / per_decade);
        let (a, b): (f64, f64) = (rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0));
        let values = match &base.surface.grid {
            BaseGrid::Line { xs } => xs
                .iter()
                .map(|&x| scale * (a * (x * x - 2.0) + b * (x * x * x - 6.0 * x)))
                .collect(),
            BaseGrid::PlanePolar { .. } => embedded_positions(&base.surface)
                .map_err(|e| CliError::Module(e.to_string()))?
                .iter()
                .map(|p| {
                    let r2 = p[0] * p[0] + p[1] * p[1];
                    scale * (a * (r2 - 4.0) + b * (p[0] * p[0] - p[1] * p[1]))
                })
                .collect(),
            _ => {
                return Err(usage(
                    "loja-fit is defined over line and plane bases",
                ))
            }
        };
        family.push(ScalarField::new(values));
    }
    Ok(family)
}

/// (log ‖𝓜(u)‖_W, log |F − F_Σ|) per family member, in family order.
fn fit_pairs(base: &Shrinker, family: &[ScalarField], parallel: bool) -> CliResult<Vec<(f64, f64)>> {
    let w = gaussian_measure(&base.surface).map_err(|e| CliError::Module(e.to_string()))?;
    let f_sigma: f64 = w.iter().sum();
    let one = |u: &ScalarField| -> Result<(f64, f64), String> {
        // Same graph quadrature over the base grid as the fit itself:
        // F(graph) = Σ wᵢ Jᵢ ρ(q)/ρ(p).
        let g = shrinker_lab::geometry::normal_graph_geometry(base, u).map_err(|e| e.to_string())?;
        let f: f64 = w
            .iter()
            .zip(&g.area_element)
            .zip(&g.weight_ratio)
            .map(|((&wi, &j), &ratio)| wi * j * ratio)
            .sum();
        let el = euler_lagrange_m(base, u).map_err(|e| e.to_string())?;
        let mnorm: f64 = el
            .values
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| v * v * wi)
            .sum::<f64>()
            .sqrt();
        Ok((mnorm.ln(), (f - f_sigma).abs().ln()))
    };
    let results: Vec<Result<(f64, f64), String>> = if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = family
                .iter()
                .map(|u| scope.spawn(|| one(u)))
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    } else {
        family.iter().map(&one).collect()
    };
    results
        .into_iter()
        .collect::<Result<Vec<_>, String>>()
        .map_err(CliError::Module)
}

fn run_loja_fit(cfg: &Config, parallel: bool) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let theta = theta_from(cfg)?;
    let family = fit_family(cfg, &base)?;
    let fit = fit_theta(&base, &family).map_err(|e| CliError::Module(e.to_string()))?;
    let pairs = fit_pairs(&base, &family, parallel)?;
    let mut csv = String::from("log_mnorm,log_gap\n");
    for (x, y) in &pairs {
        csv.push_str(&format!("{},{}\n", fmt17(*x), fmt17(*y)));
    }
    let json = serde_json::json!({
        "theta_config": fmt17(theta),
        "slope": fmt17(fit.slope),
        "theta_hat": fmt17(fit.theta_hat),
        "band": fmt17(fit.band),
        "samples_used": fit.samples_used,
    });
    Ok(vec![
        ("pairs.csv".into(), csv),
        ("fit.json".into(), serde_json::to_string_pretty(&json)?),
    ])
}

fn run_final_loja(cfg: &Config) -> CliResult<Vec<(String, String)>> {
    let base = base_from(cfg)?;
    let u = init_field(cfg, &base)?;
    let theta = theta_from(cfg)?;
    let _gamma = gamma_from(cfg)?;
    let params = scale_params_from(cfg, &base)?;
    let m = Hypersurface::with_height(base.surface.grid.clone(), u.values.clone())
        .map_err(|e| CliError::Module(e.to_string()))?;
    let report =
        final_loj_check(&m, &base, theta, &params).map_err(|e| CliError::Module(e.to_string()))?;
    Ok(vec![(
        "final.json".into(),
        serde_json::to_string_pretty(&report)?,
    )])
}

// ---------------------------------------------------------------------------
// report

fn cmd_report(dir: &Path) -> CliResult<()> {
    if !dir.is_dir() {
        return Err(usage(format!("bundle {} does not exist", dir.display())));
    }
    let trace_csv = dir.join("trace.csv");
    let pairs_csv = dir.join("pairs.csv");
    if trace_csv.is_file() {
        report_trace(dir)?;
    } else if pairs_csv.is_file() {
        report_fit(dir)?;
    } else {
        return Err(CliError::Module(format!(
            "schema error: bundle {} has neither trace.csv nor pairs.csv",
            dir.display()
        )));
    }
    Ok(())
}

fn parse_csv(path: &Path, want_cols: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Module(format!("schema error: {} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    for want in want_cols {
        if !cols.contains(want) {
            return Err(CliError::Module(format!(
                "schema error: {} lacks column `{want}`",
                path.display()
            )));
        }
    }
    let idx: Vec<usize> = want_cols
        .iter()
        .map(|w| cols.iter().position(|c| c == w).unwrap())
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let row: Result<Vec<f64>, _> = idx.iter().map(|&i| fields[i].parse::<f64>()).collect();
        rows.push(row.map_err(|e| CliError::Module(format!("bad CSV row: {e}")))?);
    }
    Ok(rows)
}

/// Flow trace → (τ, log(F − F_Σ)) pairs, ready for a decay-rate figure.
fn report_trace(dir: &Path) -> CliResult<()> {
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("trace.json"))?)?;
    let f_sigma: f64 = sidecar["f_sigma"]
        .as_str()
        .ok_or_else(|| CliError::Module("schema error: trace.json lacks f_sigma".into()))?
        .parse()
        .map_err(|e| CliError::Module(format!("bad f_sigma: {e}")))?;
    let rows = parse_csv(&dir.join("trace.csv"), &["tau", "F"])?;
    let mut out = String::from("tau,log_gap\n");
    for row in rows {
        let gap = row[1] - f_sigma;
        if gap > 0.0 {
            out.push_str(&format!("{},{}\n", fmt17(row[0]), fmt17(gap.ln())));
        }
    }
    std::fs::write(dir.join("gap_loglog.csv"), out)?;
    println!("wrote {}", dir.join("gap_loglog.csv").display());
    Ok(())
}

/// Fit bundle → pairs with the fitted line; the line is refit from the CSV
/// and must agree with the stored fit.
fn report_fit(dir: &Path) -> CliResult<()> {
    let rows = parse_csv(&dir.join("pairs.csv"), &["log_mnorm", "log_gap"])?;
    if rows.len() < 2 {
        return Err(CliError::Module("schema error: pairs.csv has < 2 rows".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let (intercept, slope, _) = total_least_squares(&xs, &ys);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fit.json"))?)?;
    if let Some(stored) = fit["slope"].as_str().and_then(|s| s.parse::<f64>().ok()) {
        if (stored - slope).abs() > 1e-12 * (1.0 + stored.abs()) {
            return Err(CliError::Module(format!(
                "refit slope {slope:.17e} disagrees with stored {stored:.17e}"
            )));
        }
    }
    let mut out = format!(
        "# fit: log_gap = {} + {} * log_mnorm\nlog_mnorm,log_gap,fit_log_gap\n",
        fmt17(intercept),
        fmt17(slope)
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt17(row[0]),
            fmt17(row[1]),
            fmt17(intercept + slope * row[0])
        ));
    }
    std::fs::write(dir.join("fit_pairs.csv"), out)?;
    println!("wrote {}", dir.join("fit_pairs.csv").display());
    Ok(())
}
