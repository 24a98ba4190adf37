//! Experiment configuration, dataset ingestion and the subcommand runners behind the binary.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CglError, Result};
use crate::fixtures;
use crate::json;
use crate::optimal_set::path::{one_neuron_breakpoints, trace_cgl_path, trace_one_neuron, PathReport};
use crate::optimal_set::{describe_set, is_unique, lasso_general_position, max_norm_approx, min_norm, tune_over_set, Verdict};
use crate::problem::{objective, CglProblem, DualCertificate, Weights};
use crate::pruning::{approximate_prune_relu, optimal_prune, write_prune_csv, PruneOptions, PruneScore};
use crate::reformulation::{
    build_cgl, convex_to_gated, convex_to_relu, enumerate_patterns, one_d_lasso_matrix, split_relu_weights, Arch,
    PatternMode, PatternSet, ReluNetwork,
};
use crate::sensitivity::{fd_jacobian, jacobians, max_relative_error, FdTarget};
use crate::solver::{solve, Solution, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Gaussian,
    Duplicate,
    MinNormInterp,
    OneNeuron,
    GroupDependent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file with a header row; the last column is the target.
    pub path: Option<PathBuf>,
    pub generator: Option<Generator>,
    pub n: usize,
    pub d: usize,
    pub noise: f64,
    pub seed: Option<u64>,
    /// Dimension of the shared fit subspace (`group_dependent`).
    pub span: usize,
    pub blocks: usize,
    pub width: usize,
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub split_seed: Option<u64>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            generator: None,
            n: 20,
            d: 3,
            noise: 0.1,
            seed: None,
            span: 2,
            blocks: 5,
            width: 2,
            train: 1.0,
            val: 0.0,
            test: 0.0,
            split_seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternChoice {
    Exhaustive,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub arch: Arch,
    pub patterns: PatternChoice,
    pub pattern_count: usize,
    pub pattern_seed: Option<u64>,
    /// Absolute regularization; overrides `lambda_frac`.
    pub lambda: Option<f64>,
    /// Fraction of the zero-solution threshold, used when `lambda` is absent.
    pub lambda_frac: f64,
    /// Explicit decreasing grid for `path`.
    pub lambda_grid: Option<Vec<f64>>,
    pub grid_count: usize,
    /// Smallest generated grid value as a fraction of the largest.
    pub grid_min_frac: f64,
    pub grid_scale: GridScale,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: Arch::Relu,
            patterns: PatternChoice::Exhaustive,
            pattern_count: 32,
            pattern_seed: None,
            lambda: None,
            lambda_frac: 0.1,
            lambda_grid: None,
            grid_count: 50,
            grid_min_frac: 0.01,
            grid_scale: GridScale::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneMethod {
    OptimalLs,
    Magnitude,
    Gradient,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub target_width: usize,
    pub methods: Vec<PruneMethod>,
    pub seed: Option<u64>,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            target_width: 0,
            methods: vec![PruneMethod::OptimalLs, PruneMethod::Magnitude, PruneMethod::Gradient, PruneMethod::Random],
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub finite_differences: bool,
    pub fd_step: f64,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            finite_differences: true,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Probe `Z = (0, 1, ..., n-1)` for each size.
    pub sizes: Vec<usize>,
    /// Probe these points instead of the sizes.
    pub points: Option<Vec<f64>>,
    pub lambda: f64,
    pub seed: Option<u64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            sizes: vec![2, 3, 4],
            points: None,
            lambda: 0.1,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub solver: SolverOptions,
    pub prune: PruneConfig,
    pub sensitivity: SensitivityConfig,
    pub probe_1d: ProbeConfig,
    pub output: OutputConfig,
}

const SHOW_CONFIG_HEADER: &str = "\
# Defaults. Optional keys without a default:
#   [data]   path = \"FILE.csv\" | generator = \"gaussian\" | \"duplicate\" | \"min_norm_interp\"
#                                          | \"one_neuron\" | \"group_dependent\"   (exactly one)
#            seed, split_seed            (required when the step is randomized)
#   [model]  lambda, lambda_grid = [...], pattern_seed (required for sampled patterns)
#   [prune]  seed                        (required for the random baseline)
#   [probe_1d] points = [...], seed
";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let (row, column) = e.span().map(|s| line_col(text, s.start)).unwrap_or((0, 0));
            CglError::Parse {
                row,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn show_defaults() -> String {
        format!("{SHOW_CONFIG_HEADER}\n{}", ExperimentConfig::default().to_toml())
    }

    /// `--seed` replaces every seed in the configuration.
    pub fn override_seed(&mut self, seed: u64) {
        self.data.seed = Some(seed);
        self.data.split_seed = Some(seed);
        self.model.pattern_seed = Some(seed);
        self.prune.seed = Some(seed);
        self.probe_1d.seed = Some(seed);
        self.solver.seed = seed;
    }

    /// Checks the sections `command` reads.
    pub fn validate(&self, command: Command) -> Result<()> {
        let arg = |m: &str| Err(CglError::Argument(m.to_string()));
        if command == Command::Probe1d {
            return self.solver.validate();
        }
        match (&self.data.path, self.data.generator) {
            (Some(_), Some(_)) => return arg("data: give either `path` or `generator`, not both"),
            (None, None) => return arg("data: one of `path` or `generator` is required"),
            _ => {}
        }
        if matches!(self.data.generator, Some(Generator::Gaussian | Generator::GroupDependent)) && self.data.seed.is_none() {
            return arg("data.seed is required for randomized generators");
        }
        let f = [self.data.train, self.data.val, self.data.test];
        if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 || self.data.train <= 0.0 {
            return arg("data: split fractions must be non-negative, sum to 1, and leave a training part");
        }
        if self.data.train < 1.0 && self.data.split_seed.is_none() {
            return arg("data.split_seed is required when the data are split");
        }
        if self.model.patterns == PatternChoice::Sampled && self.model.pattern_seed.is_none() {
            return arg("model.pattern_seed is required for sampled patterns");
        }
        if let Some(l) = self.model.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return arg("model.lambda must be finite and non-negative");
            }
        }
        if !(self.model.lambda_frac > 0.0) || !(self.model.grid_min_frac > 0.0 && self.model.grid_min_frac < 1.0) {
            return arg("model.lambda_frac must be positive and grid_min_frac in (0, 1)");
        }
        if self.model.grid_count < 2 {
            return arg("model.grid_count must be at least 2");
        }
        self.solver.validate()
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let row = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
    (row, column)
}

/// Features and targets with a deterministic train/validation/test split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Dataset {
    pub fn new(z: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if z.nrows() != y.len() {
            return Err(CglError::Shape(format!("{} feature rows but {} targets", z.nrows(), y.len())));
        }
        if z.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(CglError::Input("data contain NaN or infinite values".into()));
        }
        let n = y.len();
        Ok(Dataset {
            z,
            y,
            train: (0..n).collect(),
            val: Vec::new(),
            test: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.z.ncols()
    }

    /// Shuffle with `seed` and cut into train/validation/test parts.
    pub fn split(mut self, train: f64, val: f64, seed: u64) -> Result<Self> {
        let n = self.n();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((train * n as f64).round() as usize).clamp(1, n);
        let n_val = ((val * n as f64).round() as usize).min(n - n_train);
        self.train = idx[..n_train].to_vec();
        self.val = idx[n_train..n_train + n_val].to_vec();
        self.test = idx[n_train + n_val..].to_vec();
        for part in [&mut self.train, &mut self.val, &mut self.test] {
            part.sort_unstable();
        }
        Ok(self)
    }

    pub fn part(&self, idx: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
        (self.z.select_rows(idx), self.y.select_rows(idx))
    }
}

/// Read a CSV with a header row; the last column is the target.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CglError::Io(std::io::Error::other(e)))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        // Row numbers count the header as row 1.
        let row = r + 2;
        let rec = rec.map_err(|e| CglError::Parse {
            row,
            column: 0,
            message: e.to_string(),
        })?;
        let mut vals = Vec::with_capacity(rec.len());
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| CglError::Parse {
                row,
                column: c + 1,
                message: format!("non-numeric cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(CglError::Parse {
                    row,
                    column: c + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            vals.push(v);
        }
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(CglError::Input(format!("{} has no data rows", path.display())));
    }
    let cols = rows[0].len();
    if cols < 2 {
        return Err(CglError::Input("need at least one feature column and the target column".into()));
    }
    let n = rows.len();
    let z = DMatrix::from_fn(n, cols - 1, |i, j| rows[i][j]);
    let y = DVector::from_fn(n, |i, _| rows[i][cols - 1]);
    Dataset::new(z, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Describe,
    Tune,
    Prune,
    Path,
    Sensitivity,
    Patterns,
    Probe1d,
}

/// Exit status for an error: parse 2, solver 3, certificate 4, anything else 1.
pub fn exit_code(err: &CglError) -> i32 {
    match err {
        CglError::Parse { .. } | CglError::Json(_) => 2,
        CglError::NotConverged { .. } | CglError::QpNotConverged(_) => 3,
        CglError::Certificate(_) => 4,
        _ => 1,
    }
}

/// Where the CGL problem comes from.
enum Source {
    Features { data: Dataset, one_neuron: bool },
    Direct { problem: CglProblem },
}

/// The training problem with what is needed to evaluate it elsewhere.
struct Training {
    problem: CglProblem,
    patterns: Option<PatternSet>,
    z: Option<DMatrix<f64>>,
}

struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    written: Vec<PathBuf>,
}

/// Run a subcommand and return the artifacts written.
pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate(command)?;
    fs::create_dir_all(&cfg.output.dir)?;
    let mut r = Runner {
        cfg: cfg.clone(),
        out: cfg.output.dir.clone(),
        written: Vec::new(),
    };
    match command {
        Command::Solve => r.solve_cmd()?,
        Command::Describe => r.describe_cmd()?,
        Command::Tune => r.tune_cmd()?,
        Command::Prune => r.prune_cmd()?,
        Command::Path => r.path_cmd()?,
        Command::Sensitivity => r.sensitivity_cmd()?,
        Command::Patterns => r.patterns_cmd()?,
        Command::Probe1d => r.probe_cmd()?,
    }
    Ok(r.written)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    lambda: f64,
    objective: f64,
    converged: bool,
    iterations: usize,
    active_blocks: Vec<usize>,
    weights: &'a Weights,
    dual: &'a DualCertificate,
    network: Option<ReluNetwork>,
}

#[derive(Serialize)]
struct TuneRow {
    metric: &'static str,
    min_l2: f64,
    ep: f64,
    v_mse: f64,
    t_mse: f64,
    max_diff: f64,
}

#[derive(Serialize)]
struct ProbeRow {
    z: Vec<f64>,
    a: Vec<Vec<f64>>,
    general_position: bool,
    verdict: Verdict,
    note: String,
}

#[derive(Serialize)]
struct FdCheck {
    max_rel_error_lambda: Option<f64>,
    max_rel_error_y: Option<f64>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct OneNeuronPath {
    breakpoints: Vec<f64>,
    jump_locations: Vec<f64>,
}

impl Runner {
    /// Write via a temporary file and rename, so readers never see partial artifacts.
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        let tmp = self.out.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents)?;
        fs::rename(&tmp, &path)?;
        self.written.push(path);
        Ok(())
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.out.join(name);
        let tmp = self.out.join(format!(".{name}.tmp"));
        f(&tmp)?;
        fs::rename(&tmp, &path)?;
        self.written.push(path);
        Ok(())
    }

    fn source(&self) -> Result<Source> {
        let d = &self.cfg.data;
        let features = |data: Dataset, one_neuron: bool| -> Result<Source> {
            let data = if d.train < 1.0 {
                data.split(d.train, d.val, d.split_seed.expect("validated"))?
            } else {
                data
            };
            Ok(Source::Features { data, one_neuron })
        };
        if let Some(path) = &d.path {
            return features(load_dataset(path)?, false);
        }
        let lambda = self.cfg.model.lambda;
        match d.generator.expect("validated") {
            Generator::Gaussian => {
                let (z, y) = fixtures::gaussian(d.n, d.d, d.noise, d.seed.expect("validated"))?;
                features(Dataset::new(z, y)?, false)
            }
            Generator::OneNeuron => {
                let (x, y) = fixtures::one_neuron();
                let z = DMatrix::from_column_slice(x.len(), 1, &x);
                features(Dataset::new(z, DVector::from_vec(y))?, true)
            }
            Generator::Duplicate => {
                let (p, _) = fixtures::duplicate();
                let problem = match lambda {
                    Some(l) => p.with_lambda(l)?,
                    None => p,
                };
                Ok(Source::Direct { problem })
            }
            Generator::MinNormInterp => Ok(Source::Direct {
                problem: fixtures::min_norm_interp(lambda.unwrap_or(0.05))?,
            }),
            Generator::GroupDependent => {
                let (p, _) = fixtures::group_dependent(d.n, d.span, d.blocks, d.width, lambda.unwrap_or(0.5), d.seed.expect("validated"))?;
                Ok(Source::Direct { problem: p })
            }
        }
    }

    fn patterns(&self, z: &DMatrix<f64>) -> Result<PatternSet> {
        let m = &self.cfg.model;
        let mode = match m.patterns {
            PatternChoice::Exhaustive => PatternMode::Exhaustive,
            PatternChoice::Sampled => PatternMode::Sampled {
                count: m.pattern_count,
                seed: m.pattern_seed.expect("validated"),
            },
        };
        enumerate_patterns(z, mode)
    }

    fn training(&self, source: &Source) -> Result<Training> {
        match source {
            Source::Direct { problem } => Ok(Training {
                problem: problem.clone(),
                patterns: None,
                z: None,
            }),
            Source::Features { data, .. } => {
                let (z, y) = data.part(&data.train);
                let patterns = self.patterns(&z)?;
                let lambda = match self.cfg.model.lambda {
                    Some(l) => l,
                    None => {
                        let probe = build_cgl(&z, &y, &patterns, 1.0, Arch::Gated)?;
                        self.cfg.model.lambda_frac * probe.lambda_max_unconstrained()
                    }
                };
                let problem = build_cgl(&z, &y, &patterns, lambda, self.cfg.model.arch)?;
                Ok(Training {
                    problem,
                    patterns: Some(patterns),
                    z: Some(z),
                })
            }
        }
    }

    fn network(&self, t: &Training, w: &Weights) -> Result<Option<ReluNetwork>> {
        let Some(patterns) = &t.patterns else { return Ok(None) };
        let blocks = w.blocks(t.problem.partition());
        let net = match self.cfg.model.arch {
            Arch::Relu => {
                let (v, u) = split_relu_weights(&t.problem, w)?;
                convex_to_relu(&v, &u)?
            }
            Arch::Gated => convex_to_gated(&blocks, patterns)?,
        };
        Ok(Some(net))
    }

    fn solve_training(&self, t: &Training) -> Result<Solution> {
        log::info!(
            "solving: {} blocks, {} coordinates, lambda = {:.6e}",
            t.problem.num_blocks(),
            t.problem.d(),
            t.problem.lambda()
        );
        let sol = solve(&t.problem, &self.cfg.solver)?;
        log::info!("converged in {} iterations, objective {:.12e}", sol.iterations, sol.objective);
        Ok(sol)
    }

    fn solve_cmd(&mut self) -> Result<()> {
        let source = self.source()?;
        let t = self.training(&source)?;
        let sol = self.solve_training(&t)?;
        let out = SolveOutput {
            lambda: t.problem.lambda(),
            objective: sol.objective,
            converged: sol.converged,
            iterations: sol.iterations,
            active_blocks: sol.report.active.clone(),
            weights: &sol.weights,
            dual: &sol.dual,
            network: self.network(&t, &sol.weights)?,
        };
        let text = json::to_json("solution", &out)?;
        self.write("solution.json", &text)?;
        self.write("kkt.json", &sol.report.to_json()?)
    }

    fn describe_cmd(&mut self) -> Result<()> {
        let source = self.source()?;
        let t = self.training(&source)?;
        let sol = self.solve_training(&t)?;
        let desc = describe_set(&t.problem, &sol.weights, &sol.dual)?;
        self.write("optimal_set.json", &desc.to_json()?)?;
        let cert = is_unique(&t.problem, &sol.weights, &sol.dual)?;
        self.write("uniqueness.json", &json::to_json("uniqueness", &cert)?)
    }

    /// Linear design of held-out features: each block keeps the activation pattern its
    /// direction induces on the new rows, which is exact along the ray of that direction.
    fn holdout_design(&self, t: &Training, directions: &[DVector<f64>], z_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let patterns = t.patterns.as_ref().expect("feature source");
        let p = patterns.len();
        let d = z_new.ncols();
        let nb = t.problem.num_blocks();
        let mut x = DMatrix::zeros(z_new.nrows(), nb * d);
        for b in 0..nb {
            let (sign, gate) = match self.cfg.model.arch {
                Arch::Gated => (1.0, patterns.witnesses[b].clone()),
                Arch::Relu if b < p => (1.0, directions[b].clone()),
                Arch::Relu => (-1.0, directions[b].clone()),
            };
            let act = z_new * &gate;
            for i in 0..z_new.nrows() {
                if act[i] >= 0.0 {
                    let row = z_new.row(i) * sign;
                    x.view_mut((i, b * d), (1, d)).copy_from(&row);
                }
            }
        }
        Ok(x)
    }

    fn tune_cmd(&mut self) -> Result<()> {
        let source = self.source()?;
        let t = self.training(&source)?;
        let sol = self.solve_training(&t)?;
        let desc = describe_set(&t.problem, &sol.weights, &sol.dual)?;
        let (val, test) = match &source {
            Source::Direct { problem } => ((problem.x().clone(), problem.y().clone()), (problem.x().clone(), problem.y().clone())),
            Source::Features { data, .. } => {
                let pick = |idx: &[usize]| if idx.is_empty() { data.part(&data.train) } else { data.part(idx) };
                let (zv, yv) = pick(&data.val);
                let (zt, yt) = pick(&data.test);
                (
                    (self.holdout_design(&t, &desc.v_vectors, &zv)?, yv),
                    (self.holdout_design(&t, &desc.v_vectors, &zt)?, yt),
                )
            }
        };
        let picks = [
            min_norm(&desc)?,
            max_norm_approx(&desc)?,
            tune_over_set(&desc, &val.0, &val.1)?,
            tune_over_set(&desc, &test.0, &test.1)?,
        ];
        let mse = |w: &Weights| (&test.0 * &w.w - &test.1).norm_squared() / test.1.len() as f64;
        let mut rows = Vec::new();
        for (metric, vals) in [
            ("test_mse", picks.iter().map(mse).collect::<Vec<f64>>()),
            (
                "train_objective",
                picks.iter().map(|w| objective(&t.problem, w)).collect::<Result<Vec<f64>>>()?,
            ),
        ] {
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            rows.push(TuneRow {
                metric,
                min_l2: vals[0],
                ep: vals[1],
                v_mse: vals[2],
                t_mse: vals[3],
                max_diff: hi - lo,
            });
        }
        self.write_with("tune.csv", |p| write_rows(p, &rows))?;
        self.write("tune.json", &json::to_json("tune", &rows)?)
    }

    fn prune_cmd(&mut self) -> Result<()> {
        if self.cfg.prune.methods.contains(&PruneMethod::Random) && self.cfg.prune.seed.is_none() {
            return Err(CglError::Argument("prune.seed is required for the random baseline".into()));
        }
        let source = self.source()?;
        let t = self.training(&source)?;
        let sol = self.solve_training(&t)?;
        let (pruned, trace) = optimal_prune(&t.problem, &sol.weights)?;
        self.write("prune_trace.json", &trace.to_json()?)?;
        let Source::Features { data, .. } = &source else {
            let text = json::to_json("weights", &pruned)?;
            return self.write("pruned_weights.json", &text);
        };
        let net = self.network(&t, &sol.weights)?.expect("feature source");
        let z = t.z.as_ref().expect("feature source");
        let y = t.problem.y();
        let holdout = (!data.test.is_empty()).then(|| data.part(&data.test));
        let test = holdout.as_ref().map(|(a, b)| (a, b));
        let mut rounds = Vec::new();
        for m in &self.cfg.prune.methods {
            let opts = match m {
                PruneMethod::OptimalLs => PruneOptions::optimal_ls(),
                PruneMethod::Magnitude => PruneOptions::baseline(PruneScore::Magnitude),
                PruneMethod::Gradient => PruneOptions::baseline(PruneScore::Gradient),
                PruneMethod::Random => PruneOptions::baseline(PruneScore::Random {
                    seed: self.cfg.prune.seed.expect("validated"),
                }),
            };
            let target = self.cfg.prune.target_width.min(net.active_width());
            let (_, r) = approximate_prune_relu(z, y, &net, target, opts, test)?;
            rounds.extend(r);
        }
        self.write_with("prune_curves.csv", |p| write_prune_csv(p, &rounds))
    }

    fn grid(&self, lambda_max: f64) -> Result<Vec<f64>> {
        let m = &self.cfg.model;
        if let Some(g) = &m.lambda_grid {
            return Ok(g.clone());
        }
        if !(lambda_max > 0.0) {
            return Err(CglError::Argument("cannot generate a grid: the zero solution is optimal for every lambda".into()));
        }
        let k = m.grid_count;
        let lo = m.grid_min_frac * lambda_max;
        Ok((0..k)
            .map(|i| {
                let t = i as f64 / (k - 1) as f64;
                match m.grid_scale {
                    GridScale::Log => lambda_max * (lo / lambda_max).powf(t),
                    GridScale::Linear => lambda_max + (lo - lambda_max) * t,
                }
            })
            .collect())
    }

    fn path_cmd(&mut self) -> Result<()> {
        let source = self.source()?;
        let report: PathReport = match &source {
            Source::Features { data, one_neuron: true } => {
                let (z, y) = data.part(&data.train);
                let x: Vec<f64> = z.column(0).iter().cloned().collect();
                let y: Vec<f64> = y.iter().cloned().collect();
                let lmax = x.iter().zip(&y).map(|(a, b)| (a * b).abs()).fold(0.0, f64::max);
                let grid = self.grid(lmax)?;
                let report = trace_one_neuron(&x, &y, &grid)?;
                let lo = grid.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = grid.iter().cloned().fold(0.0, f64::max);
                let extra = OneNeuronPath {
                    breakpoints: one_neuron_breakpoints(&x, &y, lo, hi, 4 * grid.len())?,
                    jump_locations: report.jump_locations(),
                };
                self.write("breakpoints.json", &json::to_json("one_neuron_path", &extra)?)?;
                report
            }
            _ => {
                let t = self.training(&source)?;
                let grid = self.grid(t.problem.lambda_max_unconstrained())?;
                trace_cgl_path(&t.problem, &grid, &self.cfg.solver)?
            }
        };
        self.write_with("path.csv", |p| report.write_csv(p))?;
        self.write("path.json", &report.to_json()?)
    }

    fn sensitivity_cmd(&mut self) -> Result<()> {
        let source = self.source()?;
        let t = self.training(&source)?;
        let sol = self.solve_training(&t)?;
        let (w, _) = optimal_prune(&t.problem, &sol.weights)?;
        let rho = crate::optimal_set::recover_dual(&t.problem, &w)?;
        let report = jacobians(&t.problem, &w, &rho)?;
        self.write("sensitivity.json", &report.to_json()?)?;
        if report.jacobian_lambda.is_some() {
            let dir = self.out.clone();
            report.write_csv(&dir)?;
            self.written.push(dir.join("jacobian_lambda.csv"));
            self.written.push(dir.join("jacobian_y.csv"));
        }
        if self.cfg.sensitivity.finite_differences {
            let mut check = FdCheck {
                max_rel_error_lambda: None,
                max_rel_error_y: None,
                notes: Vec::new(),
            };
            if let (Some(jl), Some(jy)) = (&report.jacobian_lambda, &report.jacobian_y) {
                let h = self.cfg.sensitivity.fd_step;
                let (fl, nl) = fd_jacobian(&t.problem, &w, FdTarget::Lambda, h)?;
                let (fy, ny) = fd_jacobian(&t.problem, &w, FdTarget::Y, h)?;
                let jl = DMatrix::from_column_slice(jl.len(), 1, jl.as_slice());
                check.max_rel_error_lambda = Some(max_relative_error(&jl, &fl));
                check.max_rel_error_y = Some(max_relative_error(jy, &fy));
                check.notes.extend(nl);
                check.notes.extend(ny);
            } else {
                check.notes.push(report.note.clone());
            }
            self.write("fd_check.json", &json::to_json("fd_check", &check)?)?;
        }
        Ok(())
    }

    fn patterns_cmd(&mut self) -> Result<()> {
        let Source::Features { data, .. } = self.source()? else {
            return Err(CglError::Argument("`patterns` needs feature data (a CSV path or a feature generator)".into()));
        };
        let (z, _) = data.part(&data.train);
        let set = self.patterns(&z)?;
        self.write("patterns.json", &set.to_json()?)
    }

    fn probe_cmd(&mut self) -> Result<()> {
        let c = &self.cfg.probe_1d;
        let sets: Vec<Vec<f64>> = match &c.points {
            Some(p) => vec![p.clone()],
            None => c.sizes.iter().map(|&n| (0..n).map(|i| i as f64).collect()).collect(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
        let mut rows = Vec::new();
        for z in sets {
            let a = one_d_lasso_matrix(&z)?;
            let gp = lasso_general_position(&a)?;
            let y = DVector::from_fn(z.len(), |_, _| StandardNormal.sample(&mut rng));
            let p = CglProblem::unconstrained(a.clone(), y, crate::problem::BlockPartition::singletons(a.ncols()), c.lambda)?;
            let sol = solve(&p, &self.cfg.solver.clone().with_tol(1e-9))?;
            let cert = is_unique(&p, &sol.weights, &sol.dual)?;
            let note = if gp {
                "columns in general position: unique for every target and lambda".to_string()
            } else {
                format!("general position fails; verdict for the seeded target at lambda = {}", c.lambda)
            };
            rows.push(ProbeRow {
                a: json::matrix_to_rows(&a),
                z,
                general_position: gp,
                verdict: if gp { Verdict::Unique } else { cert.verdict },
                note,
            });
        }
        self.write("probe_1d.json", &json::to_json("probe_1d", &rows)?)
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| CglError::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
