//! Two-task continual-learning studies on the unit square.
//!
//! Each trial trains a model on a first task over `[0,1]^2`, then on a second
//! task that only sees the central square `[0.45, 0.55]^2` where the target
//! is zero. Test sets always cover the whole unit square.

mod grid;
mod stats;
mod targets;

pub use grid::{interference_grid, sample_grid, Grid};
pub use stats::{mean, sample_variance, t_two_sided_p, welch_test, WelchTest};
pub use targets::{in_forget_square, target, ExperimentId, Task};

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{init_model, Densities, KasamConfig, Model, ModelConfig, SamConfig};
use crate::training::{
    pseudo_rehearsal_mix, rehearsal_set, train, Dataset, DomainBox, TrainConfig, TrainHistory,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "sam")]
    Sam,
    #[serde(rename = "ann")]
    Ann,
    #[serde(rename = "kasam")]
    Kasam,
    #[serde(rename = "kasam-pr")]
    KasamPr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Sam, ModelKind::Ann, ModelKind::Kasam, ModelKind::KasamPr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sam => "sam",
            ModelKind::Ann => "ann",
            ModelKind::Kasam => "kasam",
            ModelKind::KasamPr => "kasam-pr",
        }
    }

    /// Whether the second task is trained on a pseudo-rehearsal mix.
    pub fn rehearses(self) -> bool {
        self == ModelKind::KasamPr
    }

    fn architecture(self) -> Arch {
        match self {
            ModelKind::Sam => Arch::Sam,
            ModelKind::Ann => Arch::Ann,
            ModelKind::Kasam | ModelKind::KasamPr => Arch::Kasam,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sam" => Ok(ModelKind::Sam),
            "ann" => Ok(ModelKind::Ann),
            "kasam" => Ok(ModelKind::Kasam),
            "kasam-pr" | "kasam_pr" | "kasampr" => Ok(ModelKind::KasamPr),
            _ => Err(Error::InvalidConfig(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Arch {
    Sam,
    Ann,
    Kasam,
}

/// Interior spread used for KASAM in the experiments. Zero-initialised
/// hidden units stay identical, which caps KASAM at one effective unit.
pub const KASAM_INTERIOR_INIT: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: ExperimentId,
    /// Standard deviation of the Gaussian target noise.
    pub noise_std: f64,
    /// Points per train/test set, and size of the rehearsal and mixed sets.
    pub n_points: usize,
    pub task1_epochs: usize,
    pub task2_epochs: usize,
    pub task1_domain: DomainBox,
    pub task2_domain: DomainBox,
    /// Probability of drawing a Task 2 point when mixing.
    pub rho: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub sam: SamConfig,
    pub kasam: KasamConfig,
    pub grid_resolution: usize,
}

impl ExperimentSpec {
    pub fn new(id: ExperimentId) -> Self {
        ExperimentSpec {
            id,
            noise_std: 0.05,
            n_points: 10_000,
            task1_epochs: 200,
            task2_epochs: 20,
            task1_domain: DomainBox::UNIT,
            task2_domain: DomainBox { lo: 0.45, hi: 0.55 },
            rho: 0.5,
            learning_rate: 0.001,
            batch_size: 100,
            sam: SamConfig::paper_default(),
            kasam: KasamConfig {
                interior_init: KASAM_INTERIOR_INIT,
                ..KasamConfig::paper_default()
            },
            grid_resolution: 256,
        }
    }

    /// Uses `densities` for every spline stack in SAM and KASAM.
    pub fn with_densities(mut self, densities: Densities) -> Self {
        self.sam.densities = densities.clone();
        self.kasam.densities = densities;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise std {} must be >= 0", self.noise_std)));
        }
        if self.n_points == 0 {
            return Err(Error::InvalidConfig("n_points must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidConfig(format!("rho {} outside [0, 1]", self.rho)));
        }
        let (outer, inner) = (self.task1_domain, self.task2_domain);
        if !(DomainBox::UNIT.contains(&[outer.lo, outer.hi]) && outer.contains(&[inner.lo, inner.hi])) {
            return Err(Error::InvalidConfig(
                "task domains must be nested inside the unit square".into(),
            ));
        }
        if self.sam.input_dim != 2 || self.kasam.input_dim != 2 {
            return Err(Error::InvalidConfig("experiments are two-dimensional".into()));
        }
        self.kasam.validate()?;
        Ok(())
    }

    fn train_config(&self, epochs: usize, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs,
            shuffle_seed,
            ..TrainConfig::default()
        }
    }

    fn model_config(&self, arch: Arch) -> ModelConfig {
        match arch {
            Arch::Sam => ModelConfig::Sam(self.sam.clone()),
            Arch::Ann => ModelConfig::Ann(self.kasam.clone()),
            Arch::Kasam => ModelConfig::Kasam(self.kasam.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Uniform inputs over the split's domain with noisy targets.
///
/// Task 2 training points come from the central square; every test set
/// covers the Task 1 domain.
pub fn make_dataset(
    spec: &ExperimentSpec,
    task: Task,
    split: Split,
    rng: &mut impl RngCore,
) -> Result<Dataset> {
    spec.validate()?;
    let domain = match (task, split) {
        (Task::Two, Split::Train) => spec.task2_domain,
        _ => spec.task1_domain,
    };
    let noise = Normal::new(0.0, spec.noise_std)
        .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
    let inputs = domain.sample(2, spec.n_points, rng);
    let targets = inputs
        .chunks(2)
        .map(|x| Ok(target(spec.id, task, x)? + noise.sample(rng)))
        .collect::<Result<Vec<_>>>()?;
    let split_name = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    Dataset::new(
        2,
        inputs,
        targets,
        domain,
        format!("{}/task{}/{split_name}", spec.id, task.number()),
    )
}

#[derive(Clone, Copy)]
#[repr(u64)]
enum Stream {
    Task1Train = 1,
    Task1Test,
    Task2Train,
    Task2Test,
    Init,
    Shuffle1,
    Shuffle2,
    Rehearsal,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

struct TrialData {
    task1_train: Dataset,
    task1_test: Dataset,
    task2_train: Dataset,
    task2_test: Dataset,
}

impl TrialData {
    fn generate(spec: &ExperimentSpec, seed: u64) -> Result<Self> {
        let mk = |task, split, stream| make_dataset(spec, task, split, &mut stream_rng(seed, stream));
        Ok(TrialData {
            task1_train: mk(Task::One, Split::Train, Stream::Task1Train)?,
            task1_test: mk(Task::One, Split::Test, Stream::Task1Test)?,
            task2_train: mk(Task::Two, Split::Train, Stream::Task2Train)?,
            task2_test: mk(Task::Two, Split::Test, Stream::Task2Test)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub kind: ModelKind,
    pub seed: u64,
    pub task1: TrainHistory,
    pub task2: TrainHistory,
    /// Test MAE on Task 1 after Task 1 training.
    pub task1_mae: f64,
    /// Test MAE on Task 2 after Task 2 training.
    pub task2_mae: f64,
    pub interference: Option<Grid>,
    #[serde(skip)]
    pub after_task1: Option<Model>,
    #[serde(skip)]
    pub after_task2: Option<Model>,
}

fn train_task1(
    spec: &ExperimentSpec,
    arch: Arch,
    data: &TrialData,
    seed: u64,
) -> Result<(Model, TrainHistory)> {
    let mut model = init_model(&spec.model_config(arch), &mut stream_rng(seed, Stream::Init))?;
    let shuffle = stream_rng(seed, Stream::Shuffle1).next_u64();
    let history = train(
        &mut model,
        &data.task1_train,
        &data.task1_test,
        &spec.train_config(spec.task1_epochs, shuffle),
    )?;
    Ok((model, history))
}

fn finish_trial(
    spec: &ExperimentSpec,
    kind: ModelKind,
    seed: u64,
    data: &TrialData,
    before: &Model,
    task1: TrainHistory,
    with_grid: bool,
) -> Result<TrialResult> {
    let mut model = before.clone();
    let mixed;
    let task2_set = if kind.rehearses() {
        let mut rng = stream_rng(seed, Stream::Rehearsal);
        let rehearsal = rehearsal_set(before, spec.n_points, spec.task1_domain, &mut rng)?;
        mixed = pseudo_rehearsal_mix(&data.task2_train, &rehearsal, spec.rho, spec.n_points, &mut rng)?;
        &mixed
    } else {
        &data.task2_train
    };
    let shuffle = stream_rng(seed, Stream::Shuffle2).next_u64();
    let task2 = train(
        &mut model,
        task2_set,
        &data.task2_test,
        &spec.train_config(spec.task2_epochs, shuffle),
    )?;
    let interference = if with_grid {
        Some(interference_grid(before, &model, spec.grid_resolution)?)
    } else {
        None
    };
    let task1_mae = task1.final_val().ok_or(Error::EmptyInput)?;
    let task2_mae = task2.final_val().ok_or(Error::EmptyInput)?;
    Ok(TrialResult {
        kind,
        seed,
        task1,
        task2,
        task1_mae,
        task2_mae,
        interference,
        after_task1: Some(before.clone()),
        after_task2: Some(model),
    })
}

/// One seeded trial: Task 1, then Task 2, then the interference grid.
pub fn run_trial(spec: &ExperimentSpec, kind: ModelKind, seed: u64) -> Result<TrialResult> {
    spec.validate()?;
    let data = TrialData::generate(spec, seed)?;
    let (before, task1) = train_task1(spec, kind.architecture(), &data, seed)?;
    finish_trial(spec, kind, seed, &data, &before, task1, true)
}

/// All requested kinds for one seed. Kinds sharing an architecture share
/// the Task 1 run, which is identical for them by construction.
fn run_seed(
    spec: &ExperimentSpec,
    kinds: &[ModelKind],
    seed: u64,
    with_grid: bool,
) -> Result<Vec<TrialResult>> {
    let data = TrialData::generate(spec, seed)?;
    let mut task1_runs: Vec<(Arch, Model, TrainHistory)> = Vec::new();
    let mut out = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let arch = kind.architecture();
        if !task1_runs.iter().any(|(a, ..)| *a == arch) {
            let (m, h) = train_task1(spec, arch, &data, seed)?;
            task1_runs.push((arch, m, h));
        }
        let (_, before, h1) = task1_runs.iter().find(|(a, ..)| *a == arch).unwrap();
        out.push(finish_trial(spec, kind, seed, &data, before, h1.clone(), with_grid)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub a: ModelKind,
    pub b: ModelKind,
    pub task: u8,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub experiment: ExperimentId,
    pub model: ModelKind,
    pub trials: usize,
    pub task1_mae_mean: f64,
    pub task1_mae_std: f64,
    pub task2_mae_mean: f64,
    pub task2_mae_std: f64,
    /// False with a single trial, where the std fields are reported as 0.
    pub std_defined: bool,
    /// Welch tests against every later model in the study, for both tasks.
    pub pairwise: Vec<PairwiseTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StudySummary {
    pub models: Vec<ModelSummary>,
}

impl StudySummary {
    pub fn get(&self, kind: ModelKind) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub spec: ExperimentSpec,
    pub base_seed: u64,
    /// `trials[t][k]` is trial `t` of `kinds[k]`.
    pub trials: Vec<Vec<TrialResult>>,
    pub kinds: Vec<ModelKind>,
    pub summary: StudySummary,
}

impl Study {
    pub fn results_for(&self, kind: ModelKind) -> impl Iterator<Item = &TrialResult> {
        self.trials.iter().flat_map(move |t| t.iter().filter(move |r| r.kind == kind))
    }
}

/// Runs `trials` seeds (`base_seed + t`) for every kind and summarises them.
///
/// Only trial 0 keeps interference grids and trained models.
pub fn run_study(
    spec: &ExperimentSpec,
    kinds: &[ModelKind],
    trials: usize,
    base_seed: u64,
) -> Result<Study> {
    spec.validate()?;
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    if kinds.is_empty() {
        return Err(Error::InvalidConfig("no model kinds requested".into()));
    }
    let mut unique = kinds.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != kinds.len() {
        return Err(Error::InvalidConfig("model kinds must be distinct".into()));
    }

    let trial_results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut res = run_seed(spec, kinds, base_seed.wrapping_add(t as u64), t == 0)?;
            if t > 0 {
                for r in &mut res {
                    r.after_task1 = None;
                    r.after_task2 = None;
                }
            }
            Ok(res)
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(spec.id, kinds, &trial_results)?;
    Ok(Study {
        spec: spec.clone(),
        base_seed,
        trials: trial_results,
        kinds: kinds.to_vec(),
        summary,
    })
}

fn summarize(
    id: ExperimentId,
    kinds: &[ModelKind],
    trials: &[Vec<TrialResult>],
) -> Result<StudySummary> {
    let column = |k: usize, task: Task| -> Vec<f64> {
        trials
            .iter()
            .map(|t| match task {
                Task::One => t[k].task1_mae,
                Task::Two => t[k].task2_mae,
            })
            .collect()
    };
    let n = trials.len();
    let std_of = |xs: &[f64]| if n >= 2 { sample_variance(xs).sqrt() } else { 0.0 };
    let mut models = Vec::with_capacity(kinds.len());
    for (k, &kind) in kinds.iter().enumerate() {
        let (m1, m2) = (column(k, Task::One), column(k, Task::Two));
        let mut pairwise = Vec::new();
        if n >= 2 {
            for (j, &other) in kinds.iter().enumerate().skip(k + 1) {
                for task in [Task::One, Task::Two] {
                    let w = welch_test(&column(k, task), &column(j, task))?;
                    pairwise.push(PairwiseTest {
                        a: kind,
                        b: other,
                        task: task.number(),
                        t: w.t,
                        df: w.df,
                        p: w.p,
                    });
                }
            }
        }
        models.push(ModelSummary {
            experiment: id,
            model: kind,
            trials: n,
            task1_mae_mean: mean(&m1),
            task1_mae_std: std_of(&m1),
            task2_mae_mean: mean(&m2),
            task2_mae_std: std_of(&m2),
            std_defined: n >= 2,
            pairwise,
        });
    }
    Ok(StudySummary { models })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(id: ExperimentId) -> ExperimentSpec {
        ExperimentSpec {
            n_points: 400,
            task1_epochs: 2,
            task2_epochs: 1,
            grid_resolution: 8,
            ..ExperimentSpec::new(id)
        }
    }

    #[test]
    fn noiseless_dataset_matches_formula() {
        let spec = ExperimentSpec {
            noise_std: 0.0,
            ..tiny(ExperimentId::B)
        };
        let ds = make_dataset(&spec, Task::One, Split::Test, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for (x, &y) in ds.points().zip(ds.targets()) {
            assert_eq!(y, target(ExperimentId::B, Task::One, x).unwrap());
        }
    }

    #[test]
    fn task2_train_lives_in_square() {
        let spec = tiny(ExperimentId::A);
        let ds = make_dataset(&spec, Task::Two, Split::Train, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert!(ds.points().all(|x| x.iter().all(|&v| (0.45..=0.55).contains(&v))));
        let mean_target = ds.targets().iter().sum::<f64>() / ds.len() as f64;
        assert!(mean_target.abs() < 0.02);
    }

    #[test]
    fn history_lengths() {
        let r = run_trial(&tiny(ExperimentId::A), ModelKind::KasamPr, 3).unwrap();
        assert_eq!(r.task1.train_mae.len(), 3);
        assert_eq!(r.task2.val_mae.len(), 2);
        assert_eq!(r.interference.as_ref().unwrap().resolution(), 8);
    }

    #[test]
    fn study_is_deterministic_and_shares_task1() {
        let spec = tiny(ExperimentId::C);
        let kinds = [ModelKind::Kasam, ModelKind::KasamPr, ModelKind::Sam];
        let a = run_study(&spec, &kinds, 2, 11).unwrap();
        let b = run_study(&spec, &kinds, 2, 11).unwrap();
        assert_eq!(a.summary, b.summary);
        for t in &a.trials {
            assert_eq!(t[0].task1, t[1].task1);
        }
        let single = run_trial(&spec, ModelKind::KasamPr, 12).unwrap();
        assert_eq!(single.task2, a.trials[1][1].task2);
        assert_eq!(a.summary.models[0].pairwise.len(), 4);
    }

    #[test]
    fn single_trial_flags_std() {
        let s = run_study(&tiny(ExperimentId::A), &[ModelKind::Sam], 1, 0).unwrap();
        let m = &s.summary.models[0];
        assert!(!m.std_defined);
        assert_eq!(m.task1_mae_std, 0.0);
        assert!(run_study(&tiny(ExperimentId::A), &[ModelKind::Sam], 0, 0).is_err());
        assert!(run_study(&tiny(ExperimentId::A), &[ModelKind::Sam, ModelKind::Sam], 1, 0).is_err());
    }

    #[test]
    fn parses_kinds() {
        assert_eq!("kasam-pr".parse::<ModelKind>().unwrap(), ModelKind::KasamPr);
        assert_eq!("kasam_pr".parse::<ModelKind>().unwrap(), ModelKind::KasamPr);
        assert!("cnn".parse::<ModelKind>().is_err());
    }
}
