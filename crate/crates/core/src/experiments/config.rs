//! Run configuration.
//!
//! A config is a TOML table (or the equivalent JSON object):
//!
//! ```toml
//! name = "smoke"
//! seeds = [0, 1]
//!
//! [problem]
//! kind = "quadratic"        # quadratic | heterog_quadratic | logreg | pseudo_huber
//! dim = 2                   # | ft | convex_hard | heterog_hard
//! start = "zero"            # zero | sqrt_d_e1 | [x1, x2, ...]
//!
//! [estimator]
//! kind = "gaussian"         # auto | exact | gaussian | bernoulli | minibatch
//! variance = 1.0
//!
//! [pool]
//! rule = "sqrt_index"       # sqrt_index | constant | explicit
//! n = [1, 4]                # one size or a list
//!
//! [[methods]]
//! method = "rennala"        # rennala | rennala_convex | accelerated | malenia
//! theorem = true            # | minibatch | async
//!
//! [theorem]
//! eps = 0.05
//!
//! [stop]
//! max_steps = 10
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{config, Error, Result};
use crate::hard::{make_convex_hard_with_radius, make_heterog_hard, make_heterog_hard_part1, make_nonconvex_hard};
use crate::model::dataset::Dataset;
use crate::model::estimator::{Estimator, ProgressRule};
use crate::model::logreg::logreg_problem;
use crate::model::point::Point;
use crate::model::pool::WorkerPool;
use crate::model::problem::{pseudo_huber_problem, MeanObjective, Objective, ProblemSpec};
use crate::model::quadratic::{heterogeneous_linear_terms, quadratic_problem, quadratic_with_linear};
use crate::optimizers::{hyperparams_for, Constants, Hyperparams, Method};
use crate::protocol::trace::{Criterion, StopRule, Threshold};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub problem: ProblemBlock,
    #[serde(default)]
    pub estimator: EstimatorBlock,
    pub pool: PoolBlock,
    pub methods: Vec<MethodBlock>,
    /// May be omitted when every method derives its iteration count from a
    /// theorem.
    #[serde(default)]
    pub stop: StopRule,
    /// Level for the time-to-target column of the summary.
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(default)]
    pub theorem: Option<TheoremBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMetric {
    GradNormSq,
    Suboptimality,
    /// The raw function value.
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub metric: TargetMetric,
    pub level: f64,
    /// Also stop each run once the level is reached.
    #[serde(default = "yes")]
    pub stop: bool,
}

fn yes() -> bool {
    true
}

impl Target {
    pub fn value(&self, f: f64, grad_norm_sq: f64, f_star: Option<f64>) -> Option<f64> {
        match self.metric {
            TargetMetric::GradNormSq => Some(grad_norm_sq),
            TargetMetric::Suboptimality => f_star.map(|fs| f - fs),
            TargetMetric::F => Some(f),
        }
    }

    pub fn reached(&self, f: f64, grad_norm_sq: f64, f_star: Option<f64>) -> bool {
        self.value(f, grad_norm_sq, f_star).is_some_and(|v| v <= self.level)
    }

    /// The equivalent stopping threshold; a level on `f` needs `f*`.
    pub fn threshold(&self, f_star: Option<f64>) -> Result<Threshold> {
        let (criterion, eps) = match self.metric {
            TargetMetric::GradNormSq => (Criterion::GradNormSq, self.level),
            TargetMetric::Suboptimality => (Criterion::Suboptimality, self.level),
            TargetMetric::F => match f_star {
                Some(fs) => (Criterion::Suboptimality, self.level - fs),
                None => return Err(config("target: stopping on f needs a problem with known f*")),
            },
        };
        if !(eps > 0.0) {
            return Err(config(format!("target.level: {} is not above the optimum", self.level)));
        }
        Ok(Threshold { criterion, eps })
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartRule {
    Named(StartName),
    Explicit(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartName {
    Zero,
    /// `√d e_1`
    SqrtDE1,
}

impl Default for StartRule {
    fn default() -> Self {
        StartRule::Named(StartName::Zero)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemBlock {
    Quadratic {
        dim: usize,
        #[serde(default)]
        start: StartRule,
    },
    /// Worker `i` holds the quadratic with a perturbed linear term; the mean
    /// is the plain quadratic.
    HeterogQuadratic {
        dim: usize,
        shift: f64,
        #[serde(default)]
        start: StartRule,
    },
    Logreg {
        data: PathBuf,
        #[serde(default)]
        reg: f64,
        /// Label mapped to 1 (all others to 0).
        #[serde(default)]
        positive: Option<f64>,
        /// Keep only the first `limit` samples.
        #[serde(default)]
        limit: Option<usize>,
        #[serde(default)]
        feature_scale: Option<f64>,
    },
    PseudoHuber {
        dim: usize,
        scale: f64,
        /// Distance of the start from the minimizer.
        radius: f64,
    },
    Ft {
        smoothness: f64,
        gap: f64,
        sigma2: f64,
        eps: f64,
    },
    ConvexHard {
        lipschitz: f64,
        smoothness: f64,
        eps: f64,
        sigma2: f64,
        #[serde(default = "one")]
        radius: f64,
    },
    HeterogHard {
        smoothness: f64,
        gap: f64,
        sigma2: f64,
        eps: f64,
        /// 1: only the slowest worker holds a function; 2: one block each.
        #[serde(default = "two")]
        part: u8,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> u8 {
    2
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorBlock {
    /// The instance's own estimator for hard instances, exact otherwise.
    #[default]
    Auto,
    Exact,
    Gaussian {
        variance: f64,
    },
    Bernoulli {
        p: f64,
    },
    Minibatch {
        batch: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sizes {
    One(usize),
    Many(Vec<usize>),
}

impl Sizes {
    pub fn list(&self) -> Vec<usize> {
        match self {
            Sizes::One(n) => vec![*n],
            Sizes::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolBlock {
    /// `τ_i = √i`
    SqrtIndex { n: Sizes },
    Constant { n: Sizes, tau: f64 },
    Explicit { delays: Vec<f64> },
}

impl PoolBlock {
    pub fn sizes(&self) -> Vec<usize> {
        match self {
            PoolBlock::SqrtIndex { n } | PoolBlock::Constant { n, .. } => n.list(),
            PoolBlock::Explicit { delays } => vec![delays.len()],
        }
    }

    pub fn build(&self, n: usize) -> Result<WorkerPool> {
        match self {
            PoolBlock::SqrtIndex { .. } => WorkerPool::sqrt_index(n),
            PoolBlock::Constant { tau, .. } => WorkerPool::constant(n, *tau),
            PoolBlock::Explicit { delays } => WorkerPool::new(delays.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Executor {
    /// Discrete-event simulation.
    #[default]
    Des,
    /// Time multiple-oracle protocol through the server adapter.
    Protocol,
    /// Synchronized oracle; m-Minibatch only.
    Sync,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodBlock {
    pub method: Method,
    #[serde(default)]
    pub label: Option<String>,
    /// Derive γ, S (and m) from the convergence theorem.
    #[serde(default)]
    pub theorem: bool,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub batch: Option<usize>,
    /// Workers per round (m-Minibatch); `"optimal"` is not a number, so
    /// leave unset and set `optimal_m = true` instead.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub optimal_m: bool,
    /// Asynchronous SGD: constant stepsize unless `c_a` is given, in which
    /// case `γ_k = min{γ, c_a/(L(δ_k+1))}`.
    #[serde(default)]
    pub c_a: Option<f64>,
    #[serde(default)]
    pub executor: Executor,
}

impl MethodBlock {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.as_str().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremBlock {
    pub eps: f64,
    /// Defaults to the estimator's variance bound.
    #[serde(default)]
    pub sigma2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Relative to the output root.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "one_usize")]
    pub record_every: usize,
}

fn one_usize() -> usize {
    1
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { dir: None, record_every: 1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepObjective {
    /// Mean time to reach `target` over seeds; points that miss on any seed
    /// are discarded.
    #[default]
    TimeToTarget,
    /// Mean final function value.
    FinalF,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
    /// `[lo, hi]`: stepsizes `2^lo, ..., 2^hi`.
    #[serde(default)]
    pub gamma_pow2: Option<[i32; 2]>,
    #[serde(default)]
    pub batch: Option<Vec<usize>>,
    #[serde(default)]
    pub c_a: Option<Vec<f64>>,
    #[serde(default)]
    pub objective: SweepObjective,
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text)?;
        // dataset paths are relative to the config file
        if let ProblemBlock::Logreg { data, .. } = &mut cfg.problem {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form, so TOML and JSON spellings of the
    /// same config hash alike.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(config("name: must be non-empty and contain no path separators"));
        }
        if self.seeds.is_empty() {
            return Err(config("seeds: at least one seed required"));
        }
        if self.methods.is_empty() {
            return Err(config("methods: at least one method required"));
        }
        if self.pool.sizes().iter().any(|&n| n == 0) {
            return Err(config("pool.n: sizes must be >= 1"));
        }
        let theorem_bounded = self.methods.iter().all(|m| m.theorem && m.executor != Executor::Protocol);
        let unbounded = self.stop.max_steps.is_none() && self.stop.max_time.is_none();
        if !(unbounded && theorem_bounded) {
            self.stop.validate().map_err(|e| config(format!("stop: {e}")))?;
        }
        if self.output.record_every == 0 {
            return Err(config("output.record_every: must be >= 1"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            let at = |msg: &str| config(format!("methods[{i}].{msg}"));
            if m.theorem && self.theorem.is_none() {
                return Err(at("theorem: needs a [theorem] block with eps"));
            }
            if !m.theorem && m.gamma.is_none() && self.sweep.is_none() {
                return Err(at("gamma: required unless theorem = true"));
            }
            if m.method == Method::Async && m.theorem {
                return Err(at("theorem: async has no prescription; set gamma (and c_a)"));
            }
            if m.executor == Executor::Sync && m.method != Method::Minibatch {
                return Err(at("executor: the sync oracle runs minibatch only"));
            }
            if m.executor == Executor::Sync && self.estimator_is_per_worker() {
                return Err(at("executor: the sync oracle needs a shared estimator"));
            }
            if matches!(m.batch, Some(0)) || matches!(m.m, Some(0)) {
                return Err(at("batch: must be >= 1"));
            }
        }
        let ids: std::collections::BTreeSet<String> = self.methods.iter().map(|m| m.label()).collect();
        if ids.len() != self.methods.len() {
            return Err(config("methods: labels must be unique (set label)"));
        }
        Ok(())
    }

    fn estimator_is_per_worker(&self) -> bool {
        matches!(self.problem, ProblemBlock::HeterogQuadratic { .. } | ProblemBlock::HeterogHard { .. })
    }
}

/// A problem instantiated for a pool: the objective plus one shared or one
/// per-worker estimator.
pub struct Instance {
    pub problem: ProblemSpec<f64>,
    pub estimators: Vec<Estimator<f64>>,
}

fn start_point(rule: &StartRule, d: usize) -> Result<Point<f64>> {
    match rule {
        StartRule::Named(StartName::Zero) => Ok(Point::zeros(d)),
        StartRule::Named(StartName::SqrtDE1) => Ok(Point::basis(d, 0, (d as f64).sqrt())),
        StartRule::Explicit(v) if v.len() == d => Point::new(v.clone()),
        StartRule::Explicit(v) => Err(config(format!("problem.start: has {} entries, dim is {d}", v.len()))),
    }
}

fn shared_estimator(block: &EstimatorBlock, problem: &ProblemSpec<f64>, own: Option<Estimator<f64>>) -> Result<Estimator<f64>> {
    let target = problem.objective.clone();
    match block {
        EstimatorBlock::Auto => Ok(own.unwrap_or_else(|| Estimator::exact(target))),
        EstimatorBlock::Exact => Ok(Estimator::exact(target)),
        EstimatorBlock::Gaussian { variance } => Estimator::gaussian(target, *variance),
        EstimatorBlock::Bernoulli { p } => Estimator::bernoulli(target, *p, ProgressRule::Global, None),
        EstimatorBlock::Minibatch { .. } => Err(config("estimator.kind: minibatch needs a logreg problem")),
    }
    .map_err(|e| config(format!("estimator: {e}")))
}

impl RunConfig {
    pub fn instance(&self, pool: &WorkerPool) -> Result<Instance> {
        let n = pool.len();
        let ctx = |e: Error| config(format!("problem: {e}"));
        match &self.problem {
            ProblemBlock::Quadratic { dim, start } => {
                let p = quadratic_problem(*dim).map_err(ctx)?.with_start(start_point(start, *dim)?).map_err(ctx)?;
                let e = shared_estimator(&self.estimator, &p, None)?;
                Ok(Instance { problem: p, estimators: vec![e] })
            }
            ProblemBlock::HeterogQuadratic { dim, shift, start } => {
                let x0 = start_point(start, *dim)?;
                let base = quadratic_problem(*dim).map_err(ctx)?.with_start(x0.clone()).map_err(ctx)?;
                let mut parts: Vec<Arc<dyn Objective<f64>>> = Vec::with_capacity(n);
                let mut estimators = Vec::with_capacity(n);
                for b in heterogeneous_linear_terms(*dim, n, *shift) {
                    let local = quadratic_with_linear(b).map_err(ctx)?;
                    parts.push(local.objective.clone());
                    estimators.push(shared_estimator(&self.estimator, &local, None)?);
                }
                let mean = MeanObjective::new(parts).map_err(ctx)?;
                let p = ProblemSpec::new("heterog_quadratic", Arc::new(mean), base.smoothness, x0, base.optimum, None)
                    .map_err(ctx)?;
                Ok(Instance { problem: p, estimators })
            }
            ProblemBlock::Logreg { data, reg, positive, limit, feature_scale } => {
                let mut ds = Dataset::load(data).map_err(ctx)?;
                if let Some(l) = limit {
                    ds = ds.truncate(*l);
                }
                if let Some(pos) = positive {
                    ds = ds.binarize(*pos);
                }
                if let Some(s) = feature_scale {
                    ds = ds.scale_features(*s);
                }
                let (p, obj) = logreg_problem(&ds, *reg).map_err(ctx)?;
                let e = match &self.estimator {
                    EstimatorBlock::Minibatch { batch } => {
                        Estimator::minibatch(obj, *batch).map_err(|e| config(format!("estimator: {e}")))?
                    }
                    other => shared_estimator(other, &p, None)?,
                };
                Ok(Instance { problem: p, estimators: vec![e] })
            }
            ProblemBlock::PseudoHuber { dim, scale, radius } => {
                let start = Point::basis(*dim, 0, *radius);
                let p = pseudo_huber_problem(vec![0.0; *dim], *scale, start).map_err(ctx)?;
                let e = shared_estimator(&self.estimator, &p, None)?;
                Ok(Instance { problem: p, estimators: vec![e] })
            }
            ProblemBlock::Ft { smoothness, gap, sigma2, eps } => {
                let h = make_nonconvex_hard(*smoothness, *gap, *sigma2, *eps).map_err(ctx)?;
                let p = h.problem();
                let e = shared_estimator(&self.estimator, &p, Some(h.estimator()))?;
                Ok(Instance { problem: p, estimators: vec![e] })
            }
            ProblemBlock::ConvexHard { lipschitz, smoothness, eps, sigma2, radius } => {
                let h = make_convex_hard_with_radius(*lipschitz, *smoothness, *eps, *sigma2, *radius).map_err(ctx)?;
                let p = h.problem();
                let e = shared_estimator(&self.estimator, &p, Some(h.estimator()))?;
                Ok(Instance { problem: p, estimators: vec![e] })
            }
            ProblemBlock::HeterogHard { smoothness, gap, sigma2, eps, part } => {
                let h = match part {
                    1 => make_heterog_hard_part1(n, *smoothness, *gap, *eps),
                    2 => make_heterog_hard(n, *smoothness, *gap, *sigma2, *eps, pool.delays()),
                    _ => return Err(config("problem.part: must be 1 or 2")),
                }
                .map_err(ctx)?;
                if self.estimator != EstimatorBlock::Auto {
                    return Err(config("estimator.kind: heterog_hard uses its own estimators (auto)"));
                }
                let estimators = if h.part == crate::hard::HeterogPart::Slowest {
                    (0..n).map(|i| Estimator::exact(h.local(i).clone())).collect()
                } else {
                    h.estimators()
                };
                Ok(Instance { problem: h.problem(), estimators })
            }
        }
    }

    /// Hyperparameters for method block `i`: the theorem's prescription, with
    /// any explicitly given `gamma`/`batch`/`m` taking precedence.
    pub fn hyperparams(&self, i: usize, inst: &Instance, pool: &WorkerPool) -> Result<Hyperparams> {
        let m = &self.methods[i];
        let n = pool.len();
        let explicit_m = if m.optimal_m { None } else { m.m };
        let mut h = if m.theorem {
            let th = self.theorem.as_ref().expect("validated");
            let variance = inst.estimators.iter().map(|e| e.variance_bound()).fold(0.0, f64::max);
            let sigma2 = th.sigma2.unwrap_or(variance);
            if !sigma2.is_finite() {
                return Err(config(format!("theorem.sigma2: estimator has no finite bound; set it for methods[{i}]")));
            }
            let p = &inst.problem;
            let mut m_workers = explicit_m;
            if m.optimal_m {
                m_workers = Some(crate::optimizers::optimal_m(&pool.sorted(), sigma2, th.eps)?);
            }
            let c = Constants {
                eps: th.eps,
                sigma2,
                smoothness: Some(p.smoothness),
                gap: Some(p.gap),
                lipschitz: p.convex.as_ref().and_then(|c| c.lipschitz),
                radius: p.convex.as_ref().and_then(|c| c.radius),
                n,
                m: m_workers.map(|v| v.min(n)),
                iterations: None,
            };
            hyperparams_for(m.method, &c).map_err(|e| config(format!("methods[{i}]: {e}")))?
        } else {
            Hyperparams { gamma: m.gamma.unwrap_or(f64::NAN), batch: 1, iterations: 0, m: None }
        };
        if let Some(g) = m.gamma {
            h.gamma = g;
        }
        if let Some(b) = m.batch {
            h.batch = b;
        }
        if m.method == Method::Minibatch {
            let mm = h.m.or(explicit_m).unwrap_or(n);
            if mm > n {
                return Err(config(format!("methods[{i}].m: {mm} exceeds n = {n}")));
            }
            h.m = Some(mm);
        }
        Ok(h)
    }
}
