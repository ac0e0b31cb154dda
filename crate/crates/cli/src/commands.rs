use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use fishery_core::calibration::{fit_growth, load_dataset};
use fishery_core::control::{solve, Lattice, SolveOptions};
use fishery_core::growth::GrowthVariant;
use fishery_core::io::{field_matrix, read_matrix, write_json, write_matrix, Field, Matrix};
use fishery_core::mc::{simulate_paths, Policy, SimulationConfig, SimulationResult};
use fishery_core::spectrum::Quantization;
use fishery_core::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Cell, ExperimentConfig};
use crate::manifest::{
    read_policy, write_policy, LatticeRecord, Manifest, PolicyRecord, StabilityRecord, MANIFEST_FILE,
    POLICY_FILE,
};
use crate::sha256_hex;

const FIELDS: [Field; 3] = [Field::Phi, Field::Theta, Field::GBig];

fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub struct FitArgs<'a> {
    pub daily: &'a Path,
    pub intensive: &'a Path,
    pub intensive_day: f64,
    pub variant: GrowthVariant,
    pub out: &'a Path,
}

/// Companion CSV of a fitted-model JSON: `fit.json` gets `fit.curve.csv`.
pub fn curve_path(out_json: &Path) -> PathBuf {
    out_json.with_extension("curve.csv")
}

/// Fits a growth model and writes its parameters and the fitted mean curve.
pub fn fit(args: &FitArgs) -> anyhow::Result<PathBuf> {
    let ds = load_dataset(args.daily, args.intensive, args.intensive_day)?;
    let fitted = fit_growth(&ds, args.variant)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_json(args.out, &fitted.to_params())?;

    let s = &fitted.spectrum;
    let last = ds
        .daily
        .iter()
        .map(|r| r.day)
        .fold(args.intensive_day, f64::max)
        .ceil() as usize;
    let mut csv = String::from("day,mean_weight_g,std_weight_g\n");
    for day in 0..=last {
        let t = day as f64;
        csv.push_str(&format!("{day},{},{}\n", s.mean_weight(t)?, s.var_weight(t)?.sqrt()));
    }
    let curve = curve_path(args.out);
    write_text(&curve, &csv)?;
    Ok(curve)
}

pub struct SolveArgs<'a> {
    pub config: &'a Path,
    pub out: Option<&'a Path>,
    pub stride: Option<usize>,
}

/// What one sweep cell produced.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub cell: Cell,
    pub dir: PathBuf,
    pub phi_t0_x_bar: f64,
    pub bounds_passed: bool,
}

pub fn solve_config(args: &SolveArgs) -> anyhow::Result<Vec<CellSummary>> {
    let raw = read_bytes(args.config)?;
    let cfg = ExperimentConfig::load(args.config)?;
    let hash = sha256_hex([raw.as_slice()]);
    let base = cfg.base_problem()?;
    let dt = cfg.lattice.dt_day;
    if !base.check_stability_bound(dt) {
        return Err(Error::Stability {
            dt,
            bound: base.stability_bound(),
        }
        .into());
    }
    let stride = args.stride.unwrap_or(cfg.lattice.stride).max(1);
    let root = args
        .out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.resolve_output_dir(args.config));
    // Shared by every cell: only the preferences change across a sweep.
    let lattice = Lattice::new(&base, dt, cfg.lattice.n_w, Quantization::BinMean)?;
    create_dir(&root)?;

    cfg.cells()
        .par_iter()
        .map(|&cell| -> anyhow::Result<CellSummary> {
            let problem = base.with_preferences(cell.eta, cell.psi)?;
            let opts = SolveOptions {
                g_stride: lattice.n_t,
                enforce_bounds: true,
            };
            let out = solve(&problem, &lattice, opts)
                .with_context(|| format!("solving eta = {}, psi = {}", cell.eta, cell.psi))?;
            let dir = root.join(cell.dir_name());
            create_dir(&dir)?;
            let mut files = Vec::new();
            for field in FIELDS {
                write_matrix(&dir.join(field.file_name()), &field_matrix(&out, field, stride))?;
                files.push(field.file_name().to_string());
            }
            let policy_bytes = write_policy(&dir.join(POLICY_FILE), &out.theta_hat)?;
            files.push(POLICY_FILE.to_string());
            let manifest = Manifest {
                eta: cell.eta,
                psi: cell.psi,
                growth: cfg.growth,
                control: out.params,
                lattice: LatticeRecord::from_output(&out),
                stability: StabilityRecord {
                    dt_day: dt,
                    bound_day: problem.stability_bound(),
                    passed: problem.check_stability_bound(dt),
                },
                bounds: out.bounds.clone(),
                stride,
                files,
                policy: PolicyRecord {
                    file: POLICY_FILE.to_string(),
                    encoding: "f64-le-row-major".to_string(),
                    sha256: sha256_hex([policy_bytes.as_slice()]),
                },
                input_sha256: hash.clone(),
            };
            write_json(&dir.join(MANIFEST_FILE), &manifest)?;
            Ok(CellSummary {
                cell,
                phi_t0_x_bar: out.phi_at(0, lattice.n_x),
                bounds_passed: out.bounds.passed,
                dir,
            })
        })
        .collect()
}

pub struct SimulateArgs<'a> {
    pub config: &'a Path,
    pub policy: &'a Path,
    pub seed: Option<u64>,
    pub out: Option<&'a Path>,
}

/// Monte Carlo estimate of the objective against the value function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiComparison {
    pub phi: f64,
    pub j_minus_phi: f64,
    pub z_score: f64,
    pub within_three_se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy_dir: PathBuf,
    pub eta: f64,
    pub psi: f64,
    pub dt_sim_day: f64,
    pub result: SimulationResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<PhiComparison>,
    /// SHA-256 over the config, the manifest and the policy file.
    pub input_sha256: String,
}

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<(PathBuf, SimulationReport)> {
    let raw = read_bytes(args.config)?;
    let cfg = ExperimentConfig::load(args.config)?;
    let mc = cfg
        .mc
        .ok_or_else(|| Error::Validation(format!("{} has no mc section", args.config.display())))?;
    if !args.policy.is_dir() {
        return Err(Error::Io {
            path: args.policy.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "policy directory not found"),
        }
        .into());
    }
    let manifest_bytes = read_bytes(&args.policy.join(MANIFEST_FILE))?;
    let manifest = Manifest::read(args.policy)?;
    let (grid, policy_bytes) = read_policy(args.policy, &manifest)?;
    let problem = fishery_core::control::ControlProblem::new(manifest.growth.spectrum()?, manifest.control)?;
    let seed = args.seed.unwrap_or(mc.seed);
    let dt_sim = mc.dt_sim_day.unwrap_or(manifest.lattice.dt_day);
    let sim = SimulationConfig {
        problem,
        policy: Policy::Grid(grid),
        w_points: manifest.lattice.w_points.clone(),
        x0: mc.x0_individuals,
        n_paths: mc.n_paths,
        seed,
        dt_sim,
    };
    let result = simulate_paths(&sim)?;
    let comparison = phi_comparison(args.policy, &manifest, &result)?;
    let report = SimulationReport {
        policy_dir: args.policy.to_path_buf(),
        eta: manifest.eta,
        psi: manifest.psi,
        dt_sim_day: dt_sim,
        result,
        comparison,
        input_sha256: sha256_hex([raw.as_slice(), manifest_bytes.as_slice(), policy_bytes.as_slice()]),
    };
    let path = args
        .out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| args.policy.join(format!("simulation_seed_{seed}.json")));
    write_json(&path, &report)?;
    Ok((path, report))
}

/// Compares against `Phi(t0, x0)` when the run stored it and `x0` is a node.
fn phi_comparison(dir: &Path, m: &Manifest, r: &SimulationResult) -> anyhow::Result<Option<PhiComparison>> {
    let path = dir.join(Field::Phi.file_name());
    if !path.exists() {
        return Ok(None);
    }
    let phi = read_matrix(&path)?;
    let Some(col) = phi.xs.iter().position(|&x| (x - r.x0).abs() <= 1e-9 * m.control.x_bar) else {
        return Ok(None);
    };
    if phi.times.first() != Some(&m.lattice.t0_day) {
        return Ok(None);
    }
    let value = phi.get(0, col);
    let diff = r.j_estimate.value - value;
    let se = r.j_estimate.se;
    let z = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(Some(PhiComparison {
        phi: value,
        j_minus_phi: diff,
        z_score: z,
        within_three_se: z.abs() <= 3.0,
    }))
}

struct Run {
    manifest: Manifest,
    dir: PathBuf,
    fields: Vec<Matrix>,
}

fn load_run(dir: &Path) -> anyhow::Result<Run> {
    let manifest = Manifest::read(dir)?;
    let fields = FIELDS
        .iter()
        .map(|f| read_matrix(&dir.join(f.file_name())))
        .collect::<Result<Vec<_>, _>>()?;
    if fields.iter().any(|m| m.times != fields[0].times || m.xs != fields[0].xs) {
        return Err(Error::Validation(format!("{}: field matrices disagree on their grid", dir.display())).into());
    }
    Ok(Run {
        manifest,
        dir: dir.to_path_buf(),
        fields,
    })
}

/// Stacks run directories into one long CSV; returns the number of data rows.
pub fn report(dirs: &[PathBuf], out: &Path) -> anyhow::Result<usize> {
    if dirs.is_empty() {
        return Err(Error::Validation("report needs at least one run directory".into()).into());
    }
    let runs = dirs.iter().map(|d| load_run(d)).collect::<anyhow::Result<Vec<_>>>()?;
    let first = &runs[0];
    for run in &runs[1..] {
        let same = run.manifest.lattice.same_grid(&first.manifest.lattice)
            && run.fields[0].times == first.fields[0].times
            && run.fields[0].xs == first.fields[0].xs;
        if !same {
            return Err(Error::Validation(format!(
                "lattice of {} conflicts with {}",
                run.dir.display(),
                first.dir.display()
            ))
            .into());
        }
    }

    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let file = fs::File::create(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let io_err = |e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    };
    let mut w = BufWriter::new(file);
    writeln!(w, "eta,psi,t,x,phi,theta,g_big").map_err(io_err)?;
    let mut rows = 0;
    for run in &runs {
        let [phi, theta, g] = [&run.fields[0], &run.fields[1], &run.fields[2]];
        for (r, t) in phi.times.iter().enumerate() {
            for (c, x) in phi.xs.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{t},{x},{:e},{:e},{:e}",
                    run.manifest.eta,
                    run.manifest.psi,
                    phi.get(r, c),
                    theta.get(r, c),
                    g.get(r, c)
                )
                .map_err(io_err)?;
                rows += 1;
            }
        }
    }
    w.flush().map_err(io_err)?;
    Ok(rows)
}
