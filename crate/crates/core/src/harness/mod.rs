//! Training-set assembly and end-to-end recognition experiments.

pub mod report;
pub mod score;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{one_hot, FeatureVector, Pose, RobotCommand, FEATURE_WIDTH};
use crate::error::{Error, Result};
use crate::mlp::{train, Network, Sample, TrainConfig};
use crate::spotter::{CascadeModel, Spotter};
use crate::synth::{
    find_template, generate_stream, harvest_non_gestures, make_templates,
    make_templates_with_triplet, transition_non_gestures, AnnotatedStream, GestureTemplate,
    ScenarioScript, ScriptStep, TransitionSpec, Triplet, DEFAULT_HOLD_FRAMES,
    DEFAULT_MIN_SEPARATION, DEFAULT_SIGMA, DEFAULT_TRANSITION_FRAMES,
};

pub use report::{render_markdown, EvalReport, GestureRow, TrainingSummary, TransitionRow};
pub use score::{emission_runs, score, InstanceScore, Outcome, Run, Scored, TransitionScore};

/// Evaluation order of the ten-gesture command library.
pub const DEFAULT_SEQUENCE: [u16; 10] = [8, 2, 3, 4, 5, 6, 7, 1, 9, 10];

/// Offset of G7 from the G5-G6 midpoint in experiment templates. Closer
/// placements make G7 fire on every G5 -> G6 transition; with the default
/// seeds this distance makes it fire on a minority of them.
pub const EXPERIMENT_TIGHTNESS: f64 = 0.46;

pub fn experiment_triplet() -> Triplet {
    Triplet {
        tightness: EXPERIMENT_TIGHTNESS,
        ..Triplet::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub library_size: usize,
    pub lag: usize,
    pub hidden: usize,
    pub train_reps: usize,
    pub epochs: usize,
    pub alpha: f64,
    pub beta: f64,
    pub non_gesture_specs: Vec<TransitionSpec>,
    pub eval_repetitions: usize,
    pub sigma: f64,
    pub template_seed: u64,
    pub train_seed: u64,
    pub eval_seed: u64,
    pub debounce: usize,
    pub threshold: f64,
    /// `null` disables the confusable arrangement.
    pub triplet: Option<Triplet>,
    pub min_separation: f64,
    pub hold_frames: usize,
    pub transition_frames: (usize, usize),
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "test1".into(),
            library_size: 10,
            lag: 1,
            hidden: FEATURE_WIDTH,
            train_reps: 20,
            epochs: 10_000,
            alpha: 0.1,
            beta: 0.1,
            non_gesture_specs: Vec::new(),
            eval_repetitions: 100,
            sigma: DEFAULT_SIGMA,
            template_seed: 1,
            train_seed: 2,
            eval_seed: 3,
            debounce: crate::spotter::DEFAULT_DEBOUNCE,
            threshold: crate::spotter::DEFAULT_THRESHOLD,
            triplet: Some(experiment_triplet()),
            min_separation: DEFAULT_MIN_SEPARATION,
            hold_frames: DEFAULT_HOLD_FRAMES,
            transition_frames: DEFAULT_TRANSITION_FRAMES,
        }
    }
}

impl ExperimentConfig {
    /// Ten gestures, lag 1, no non-gesture network.
    pub fn test1() -> Self {
        Self::default()
    }

    /// As `test1` with lag 3.
    pub fn test2() -> Self {
        Self {
            name: "test2".into(),
            lag: 3,
            ..Self::default()
        }
    }

    /// As `test2` plus the three transition non-gestures.
    pub fn test3() -> Self {
        Self {
            name: "test3".into(),
            non_gesture_specs: transition_non_gestures(),
            ..Self::test2()
        }
    }

    /// As `test3` with a thirty-gesture library.
    pub fn test4() -> Self {
        Self {
            name: "test4".into(),
            library_size: 30,
            ..Self::test3()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "test1" => Some(Self::test1()),
            "test2" => Some(Self::test2()),
            "test3" => Some(Self::test3()),
            "test4" => Some(Self::test4()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("library_size", self.library_size),
            ("lag", self.lag),
            ("hidden", self.hidden),
            ("train_reps", self.train_reps),
            ("epochs", self.epochs),
            ("debounce", self.debounce),
            ("hold_frames", self.hold_frames),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{field} must be positive")));
            }
        }
        if self.library_size > u16::MAX as usize {
            return Err(Error::InvalidInput("library_size too large".into()));
        }
        let in_library = |g: u16| g >= 1 && g as usize <= self.library_size;
        if let Some(t) = &self.triplet {
            if ![t.from, t.to, t.near].into_iter().all(in_library) {
                return Err(Error::InvalidInput(format!(
                    "triplet G{}/G{}/G{} outside the library",
                    t.from, t.to, t.near
                )));
            }
        }
        for s in &self.non_gesture_specs {
            if !in_library(s.from) || !in_library(s.to) || s.from == s.to || s.count == 0 {
                return Err(Error::InvalidInput(format!(
                    "bad non-gesture spec G{}->G{} x{}",
                    s.from, s.to, s.count
                )));
            }
        }
        TrainConfig {
            learning_rate: self.alpha,
            momentum: self.beta,
            epochs: self.epochs,
            seed: self.train_seed,
            shuffle: true,
        }
        .validate()?;
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::InvalidInput("sigma must be non-negative".into()));
        }
        let (lo, hi) = self.transition_frames;
        if lo == 0 || hi < lo {
            return Err(Error::InvalidInput(format!(
                "transition_frames [{lo}, {hi}] must be positive and ordered"
            )));
        }
        Ok(())
    }

    pub fn non_gesture_classes(&self) -> usize {
        self.non_gesture_specs.iter().map(|s| s.count).sum()
    }

    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.alpha,
            momentum: self.beta,
            epochs: self.epochs,
            seed,
            shuffle: true,
        }
    }
}

pub fn build_templates(config: &ExperimentConfig) -> Result<Vec<GestureTemplate>> {
    match config.triplet {
        Some(t) => make_templates_with_triplet(
            config.library_size,
            config.template_seed,
            config.min_separation,
            t,
        ),
        None => make_templates(
            config.library_size,
            config.template_seed,
            config.min_separation,
        ),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSets {
    pub comm: Vec<Sample>,
    pub non: Option<Vec<Sample>>,
}

/// Gesture order of the script mined for non-gestures: the transition endpoints
/// chained, with a shared endpoint visited once.
fn harvest_labels(specs: &[TransitionSpec]) -> Vec<u16> {
    let mut labels: Vec<u16> = Vec::new();
    for s in specs {
        if labels.last() != Some(&s.from) {
            labels.push(s.from);
        }
        labels.push(s.to);
    }
    labels
}

/// Communicative pairs (two independently noised renders of each template)
/// and, when specs are given, non-gesture pairs mined from a synthetic
/// session. The non-gesture set also carries every communicative pair with
/// an all-zero target so that held gestures are not vetoed.
pub fn build_training_set(
    templates: &[GestureTemplate],
    config: &ExperimentConfig,
) -> Result<TrainingSets> {
    config.validate()?;
    let noise = Normal::new(0.0, config.sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.train_seed);
    let mut render = |pose: &Pose| -> Pose {
        std::array::from_fn(|k| {
            let v = if config.sigma > 0.0 {
                pose[k] + noise.sample(&mut rng)
            } else {
                pose[k]
            };
            v.clamp(0.0, 1.0)
        })
    };
    let mut comm = Vec::with_capacity(config.library_size * config.train_reps);
    for g in 1..=config.library_size as u16 {
        let pose = find_template(templates, g)?.pose;
        let target = one_hot(g, config.library_size)?;
        for _ in 0..config.train_reps {
            let earlier = render(&pose);
            let current = render(&pose);
            comm.push(Sample::new(
                FeatureVector::from_pair(&earlier, &current, config.lag).into_values(),
                target.clone(),
            ));
        }
    }

    if config.non_gesture_specs.is_empty() {
        return Ok(TrainingSets { comm, non: None });
    }
    let classes = config.non_gesture_classes();
    let labels = harvest_labels(&config.non_gesture_specs);
    let script = ScenarioScript {
        steps: labels
            .iter()
            .map(|&label| ScriptStep {
                label,
                hold: config.hold_frames,
            })
            .collect(),
        transition: config.transition_frames,
        sigma: config.sigma,
        reps: config.train_reps,
        seed: config.train_seed.wrapping_add(1),
        button: Vec::new(),
    };
    let stream = generate_stream(&script, templates)?;
    let harvested = harvest_non_gestures(
        &stream,
        &config.non_gesture_specs,
        config.train_reps,
        config.lag,
    )?;
    let mut non = Vec::with_capacity(harvested.len() + comm.len());
    for (feature, class) in harvested {
        non.push(Sample::new(feature.into_values(), one_hot(class, classes)?));
    }
    non.extend(
        comm.iter()
            .map(|s| Sample::new(s.input.clone(), vec![0.0; classes])),
    );
    Ok(TrainingSets {
        comm,
        non: Some(non),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedCascade {
    pub cascade: CascadeModel,
    pub training: TrainingSummary,
}

pub fn train_cascade(
    templates: &[GestureTemplate],
    config: &ExperimentConfig,
) -> Result<TrainedCascade> {
    let sets = build_training_set(templates, config)?;
    let mut comm = Network::new(
        &[FEATURE_WIDTH, config.hidden, config.library_size],
        config.train_seed,
    )?;
    let comm_report = train(
        &mut comm,
        &sets.comm,
        &config.train_config(config.train_seed),
    )?;
    let (non, non_loss) = match &sets.non {
        Some(data) => {
            let seed = config.train_seed.wrapping_add(1);
            let mut net = Network::new(
                &[FEATURE_WIDTH, config.hidden, config.non_gesture_classes()],
                seed,
            )?;
            let r = train(&mut net, data, &config.train_config(seed))?;
            (Some(net), r.final_loss())
        }
        None => (None, None),
    };
    let cascade = CascadeModel::new(comm, non, config.lag)?
        .with_threshold(config.threshold)?
        .with_debounce(config.debounce)?;
    Ok(TrainedCascade {
        cascade,
        training: TrainingSummary {
            comm_samples: sets.comm.len(),
            non_samples: sets.non.as_ref().map_or(0, Vec::len),
            comm_final_loss: comm_report.final_loss().unwrap_or(f64::NAN),
            non_final_loss: non_loss,
        },
    })
}

/// The ten-gesture library uses the fixed command-test order; any other
/// size uses a permutation seeded by the template seed.
pub fn evaluation_sequence(config: &ExperimentConfig) -> Vec<u16> {
    if config.library_size == DEFAULT_SEQUENCE.len() {
        return DEFAULT_SEQUENCE.to_vec();
    }
    let mut seq: Vec<u16> = (1..=config.library_size as u16).collect();
    seq.shuffle(&mut ChaCha8Rng::seed_from_u64(config.template_seed));
    seq
}

pub fn evaluation_stream(
    templates: &[GestureTemplate],
    config: &ExperimentConfig,
) -> Result<AnnotatedStream> {
    let seq = evaluation_sequence(config);
    let mut script = ScenarioScript::sequence(
        &seq,
        config.eval_repetitions,
        config.sigma,
        config.eval_seed,
    );
    for s in &mut script.steps {
        s.hold = config.hold_frames;
    }
    script.transition = config.transition_frames;
    generate_stream(&script, templates)
}

/// Per-frame output of running a cascade over a stream.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StreamTrace {
    pub active: Vec<Option<u16>>,
    pub commands: Vec<Option<RobotCommand>>,
}

pub fn run_stream(cascade: &CascadeModel, stream: &AnnotatedStream) -> Result<StreamTrace> {
    let mut spotter = Spotter::new(cascade);
    let mut trace = StreamTrace::default();
    for frame in &stream.frames {
        let out = spotter.step(cascade, *frame)?;
        trace.active.push(out.active);
        trace.commands.push(out.command);
    }
    Ok(trace)
}

/// Streams the evaluation sequence through `cascade` and scores it.
pub fn evaluate(
    templates: &[GestureTemplate],
    cascade: &CascadeModel,
    config: &ExperimentConfig,
    training: TrainingSummary,
) -> Result<EvalReport> {
    let stream = evaluation_stream(templates, config)?;
    let trace = run_stream(cascade, &stream)?;
    let scored = score(&trace.active, &stream.truth, config.lag)?;
    let order = evaluation_sequence(config);
    Ok(EvalReport::from_scored(
        config.clone(),
        &order,
        &scored,
        training,
    ))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let templates = build_templates(config)?;
    let trained = train_cascade(&templates, config)?;
    evaluate(&templates, &trained.cascade, config, trained.training)
}
