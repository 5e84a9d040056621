use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use fwrde::classifier::{fit_gaussian, DistortionObjective, FeedforwardNetwork, GaussianInputModel};
use fwrde::evaluation::{
    aggregate, map_to_curve, rate_grid, OrderingTestCurve, DEFAULT_GRID_POINTS, DEFAULT_NUM_SAMPLES,
};
use fwrde::io::{
    read_data_csv, read_image, read_json, read_map, write_bench_csv, write_curve_csv, write_json, write_pgm,
    write_trace_csv, BenchRow, Image, OrderingFile, Pgm,
};
use fwrde::rde::{mr_rde, ord_rde, rc_rde, sensitivity_map, Method, RelevanceMap};
use fwrde::solvers::SolverTrace;
use fwrde::Error;
use rayon::prelude::*;

use crate::config::RunConfig;

pub fn fit_noise(data: &Path, out: &Path) -> Result<()> {
    let rows = read_data_csv(data).with_context(|| format!("reading {}", data.display()))?;
    ensure!(rows.len() >= 2, "{} needs at least two data rows, found {}", data.display(), rows.len());
    let model = fit_gaussian(&rows)?;
    create_parent(out)?;
    write_json(out, &model)?;
    println!("fitted noise model over {} features from {} rows -> {}", model.dim(), rows.len(), out.display());
    Ok(())
}

struct Problem {
    network: FeedforwardNetwork,
    image: Image,
    noise: Option<GaussianInputModel>,
}

impl Problem {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let model = RunConfig::require(&cfg.model, "model")?;
        let image = RunConfig::require(&cfg.image, "image")?;
        let network: FeedforwardNetwork =
            read_json(model).with_context(|| format!("loading model {}", model.display()))?;
        let image = read_image(image).with_context(|| format!("loading input {}", image.display()))?;
        ensure!(
            image.values.len() == network.input_dim(),
            "input has {} features but the model expects {}",
            image.values.len(),
            network.input_dim()
        );
        let noise = match &cfg.noise {
            Some(path) => Some(read_json(path).with_context(|| format!("loading noise model {}", path.display()))?),
            None => None,
        };
        Ok(Self { network, image, noise })
    }

    fn objective(&self) -> Result<DistortionObjective> {
        let Some(noise) = &self.noise else {
            bail!("missing required setting 'noise'");
        };
        Ok(DistortionObjective::new(
            self.network.clone(),
            self.image.values.clone(),
            noise.clone(),
        )?)
    }

    fn heatmap_shape(&self, cfg: &RunConfig) -> (usize, usize) {
        let n = self.image.values.len();
        match (cfg.width, cfg.height) {
            (Some(w), Some(h)) => (w, h),
            (Some(w), None) if w > 0 => (w, n / w),
            (None, Some(h)) if h > 0 => (n / h, h),
            _ => (self.image.width, self.image.height),
        }
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = RunConfig::require(&cfg.out, "out")?.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn save_trace(path: &Path, trace: &SolverTrace) -> Result<()> {
    write_trace_csv(fs::File::create(path)?, trace)?;
    Ok(())
}

/// Writes the partial trace of a numeric failure before handing the error back.
fn keep_partial<T>(result: fwrde::Result<T>, path: &Path) -> Result<T> {
    match result {
        Err(Error::NonFinite { iteration, trace }) => {
            save_trace(path, &trace)?;
            eprintln!("partial trace written to {}", path.display());
            Err(Error::NonFinite { iteration, trace }.into())
        }
        other => Ok(other?),
    }
}

pub fn attribute(cfg: &RunConfig) -> Result<()> {
    let method = *RunConfig::require(&cfg.method, "method")?;
    let problem = Problem::load(cfg)?;
    let dir = out_dir(cfg)?;
    let config = cfg.solver_config()?;
    let solvers = cfg.solver_names();
    ensure!(solvers.len() == 1, "attribute takes a single solver, got {}", solvers.join(","));
    let solver = &solvers[0];
    let trace_path = dir.join("trace.csv");

    let map = match method {
        Method::Sensitivity => sensitivity_map(&problem.network, &problem.image.values)?,
        Method::Rc => {
            let k = *RunConfig::require(&cfg.rate, "rate")?;
            let kind = RunConfig::deterministic_solver(solver)?;
            let res = keep_partial(rc_rde(&problem.objective()?, k, kind, &config), &trace_path)?;
            save_trace(&trace_path, &res.trace)?;
            report(&res.trace, res.distortion);
            res.map
        }
        Method::Mr => {
            let rates = RunConfig::require(&cfg.rates, "rates")?;
            let kind = RunConfig::deterministic_solver(solver)?;
            let res = keep_partial(mr_rde(&problem.objective()?, rates, kind, &config), &trace_path)?;
            for part in &res.parts {
                let k = part.map.rates[0];
                save_trace(&dir.join(format!("trace_k{k}.csv")), &part.trace)?;
                print!("k={k}: ");
                report(&part.trace, part.distortion);
            }
            res.map
        }
        Method::Ord => {
            let ord_solver = cfg.ordering_solver(solver)?;
            let res = keep_partial(ord_rde(&problem.objective()?, ord_solver, &config), &trace_path)?;
            save_trace(&trace_path, &res.trace)?;
            report(&res.trace, res.objective);
            write_json(dir.join("map.json"), &OrderingFile::from(&res))?;
            res.map
        }
    };
    if method != Method::Ord {
        write_json(dir.join("map.json"), &map)?;
    }
    let (w, h) = problem.heatmap_shape(cfg);
    write_pgm(dir.join("heatmap.pgm"), &Pgm::from_scores(map.scores(), w, h)?)?;
    println!("wrote {} map over {} features to {}", method, map.len(), dir.display());
    Ok(())
}

fn report(trace: &SolverTrace, objective: f64) {
    println!(
        "{} after {} iterations ({} oracle calls), objective {objective:.6e}, gap {:.3e}",
        trace.termination.name(),
        trace.iterations(),
        trace.lmo_calls(),
        trace.final_gap()
    );
}

/// Runs the ordering test for every map. Inputs are either one shared file
/// (`image`) or one per map (`images`).
pub fn evaluate(cfg: &RunConfig, images: &[PathBuf], maps: &[PathBuf]) -> Result<()> {
    ensure!(!maps.is_empty(), "no relevance maps given");
    let images = match (images, &cfg.image) {
        ([], Some(image)) => vec![image.clone()],
        ([], None) => bail!("missing required setting 'image'"),
        (list, _) => list.to_vec(),
    };
    ensure!(
        images.len() == 1 || images.len() == maps.len(),
        "give one input shared by all maps or one input per map ({} inputs, {} maps)",
        images.len(),
        maps.len()
    );
    let model = RunConfig::require(&cfg.model, "model")?;
    let noise = RunConfig::require(&cfg.noise, "noise")?;
    let out = out_dir(cfg)?;
    let samples = cfg.samples.unwrap_or(DEFAULT_NUM_SAMPLES);
    let grid = rate_grid(cfg.grid_points.unwrap_or(DEFAULT_GRID_POINTS))?;
    let seed = cfg.seed();

    let network: FeedforwardNetwork =
        read_json(model).with_context(|| format!("loading model {}", model.display()))?;
    let noise: GaussianInputModel =
        read_json(noise).with_context(|| format!("loading noise model {}", noise.display()))?;
    let inputs = images
        .iter()
        .map(|p| read_image(p).with_context(|| format!("loading input {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let loaded = maps
        .iter()
        .map(|p| read_map(p).with_context(|| format!("loading map {}", p.display())))
        .collect::<Result<Vec<RelevanceMap>>>()?;

    let curves = loaded
        .par_iter()
        .enumerate()
        .map(|(i, map)| {
            let input = &inputs[if inputs.len() == 1 { 0 } else { i }];
            map_to_curve(&network, &input.values, map, &grid, &noise, samples, seed)
                .with_context(|| format!("evaluating {}", maps[i].display()))
        })
        .collect::<Result<Vec<OrderingTestCurve>>>()?;

    for (i, (curve, path)) in curves.iter().zip(maps).enumerate() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
        let file = out.join(format!("curve_{i:03}_{stem}.csv"));
        write_curve_csv(fs::File::create(&file)?, curve)?;
        println!("{}: average distortion {:.6e}", path.display(), curve.average_distortion());
    }
    let agg = aggregate(&curves)?;
    write_curve_csv(fs::File::create(out.join("aggregate.csv"))?, &agg)?;
    Ok(())
}
pub fn bench_solvers(cfg: &RunConfig) -> Result<()> {
    let method = cfg.method.unwrap_or(Method::Rc);
    let problem = Problem::load(cfg)?;
    let objective = problem.objective()?;
    let dir = out_dir(cfg)?;
    let config = cfg.solver_config()?;
    let solvers = match &cfg.solver {
        Some(_) => cfg.solver_names(),
        None => ["fw", "afw", "lcg", "lafw"].map(String::from).to_vec(),
    };

    let mut rows = Vec::new();
    match method {
        Method::Rc | Method::Mr => {
            let rates = match (&cfg.rates, cfg.rate) {
                (Some(r), _) => r.clone(),
                (None, Some(k)) => vec![k],
                (None, None) => bail!("missing required setting 'rate' or 'rates'"),
            };
            for name in &solvers {
                let kind = RunConfig::deterministic_solver(name)?;
                for &k in &rates {
                    let trace_path = dir.join(format!("trace_{name}_k{k}.csv"));
                    let start = Instant::now();
                    let res = keep_partial(rc_rde(&objective, k, kind, &config), &trace_path)?;
                    let elapsed = start.elapsed().as_secs_f64() * 1e3;
                    save_trace(&trace_path, &res.trace)?;
                    rows.push(bench_row(name, k, &res.trace, res.distortion, elapsed));
                }
            }
        }
        Method::Ord => {
            for name in &solvers {
                let solver = cfg.ordering_solver(name)?;
                let trace_path = dir.join(format!("trace_{name}.csv"));
                let start = Instant::now();
                let res = keep_partial(ord_rde(&objective, solver, &config), &trace_path)?;
                let elapsed = start.elapsed().as_secs_f64() * 1e3;
                save_trace(&trace_path, &res.trace)?;
                rows.push(bench_row(name, 0, &res.trace, res.objective, elapsed));
            }
        }
        Method::Sensitivity => bail!("bench-solvers needs an optimization method (rc, mr or ord)"),
    }
    write_bench_csv(fs::File::create(dir.join("summary.csv"))?, &rows)?;
    for r in &rows {
        println!(
            "{:>5} k={:<3} {:>5} it  objective {:.6e}  gap {:.3e}  {:.1} ms",
            r.solver, r.rate, r.iterations, r.final_objective, r.final_gap, r.wall_time_ms
        );
    }
    Ok(())
}

fn bench_row(solver: &str, rate: usize, trace: &SolverTrace, objective: f64, wall_time_ms: f64) -> BenchRow {
    BenchRow {
        solver: solver.to_string(),
        rate,
        iterations: trace.iterations(),
        final_objective: objective,
        final_gap: trace.final_gap(),
        wall_time_ms,
    }
}

pub fn render(map: &Path, out: &Path, width: Option<usize>, height: Option<usize>) -> Result<()> {
    let map = read_map(map).with_context(|| format!("loading map {}", map.display()))?;
    let n = map.len();
    let (w, h) = match (width, height) {
        (Some(w), Some(h)) => (w, h),
        (Some(w), None) if w > 0 => (w, n / w),
        (None, Some(h)) if h > 0 => (n / h, h),
        _ => (n, 1),
    };
    let pgm = Pgm::from_scores(map.scores(), w, h)?;
    create_parent(out)?;
    write_pgm(out, &pgm)?;
    println!("wrote {w}x{h} heatmap to {}", out.display());
    Ok(())
}
