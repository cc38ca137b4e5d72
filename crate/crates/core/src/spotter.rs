//! Streaming recogniser: per-frame classification, the communicative /
//! non-gesture cascade, and the minimum-active-time debouncer.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    extract_feature, map_command, FeatureVector, FrameHistory, RobotCommand, SensorFrame,
    FEATURE_WIDTH, SENSOR_COUNT,
};
use crate::error::{Error, Result};
use crate::mlp::{Network, NetworkDocument};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DEBOUNCE: usize = 5;

/// Outcome of thresholding one network's output vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// 1-based class index and its output value.
    Accepted {
        class: u16,
        confidence: f64,
    },
    Rejected,
}

/// Argmax with threshold; ties go to the lowest index.
pub fn decide(outputs: &[f64], threshold: f64) -> Verdict {
    let best = outputs
        .iter()
        .enumerate()
        .fold(None::<(usize, f64)>, |best, (i, &y)| match best {
            Some((_, b)) if b >= y => best,
            _ => Some((i, y)),
        });
    match best {
        Some((i, y)) if y >= threshold => Verdict::Accepted {
            class: i as u16 + 1,
            confidence: y,
        },
        _ => Verdict::Rejected,
    }
}

pub fn classify(net: &Network, feature: &[f64], threshold: f64) -> Result<(Verdict, Vec<f64>)> {
    let outputs = net.predict(feature)?;
    Ok((decide(&outputs, threshold), outputs))
}

/// How often one-shot commands are emitted while their gesture persists.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionMode {
    /// Every debounced frame emits its command.
    #[default]
    Level,
    /// Save, return, loop and vacuum commands fire once per gesture onset.
    EdgeOneShot,
}

/// Two networks in series plus the decision parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CascadeModel {
    pub comm: Network,
    pub non: Option<Network>,
    pub lag: usize,
    pub threshold: f64,
    pub debounce: usize,
    pub emission: EmissionMode,
}

impl CascadeModel {
    pub fn new(comm: Network, non: Option<Network>, lag: usize) -> Result<Self> {
        let model = Self {
            comm,
            non,
            lag,
            threshold: DEFAULT_THRESHOLD,
            debounce: DEFAULT_DEBOUNCE,
            emission: EmissionMode::Level,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn with_debounce(mut self, frames: usize) -> Result<Self> {
        self.debounce = frames;
        self.validate()?;
        Ok(self)
    }

    pub fn with_emission(mut self, emission: EmissionMode) -> Self {
        self.emission = emission;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.comm.input_width() != FEATURE_WIDTH {
            return Err(Error::dim(
                "communicative network input",
                FEATURE_WIDTH,
                self.comm.input_width(),
            ));
        }
        if let Some(non) = &self.non {
            if non.input_width() != FEATURE_WIDTH {
                return Err(Error::dim(
                    "non-gesture network input",
                    FEATURE_WIDTH,
                    non.input_width(),
                ));
            }
        }
        if self.lag == 0 {
            return Err(Error::InvalidInput("lag must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "threshold {} outside (0, 1)",
                self.threshold
            )));
        }
        if self.debounce == 0 {
            return Err(Error::InvalidInput(
                "debounce must be at least 1 frame".into(),
            ));
        }
        Ok(())
    }

    pub fn library_size(&self) -> usize {
        self.comm.output_width()
    }

    pub fn non_gesture_classes(&self) -> usize {
        self.non.as_ref().map_or(0, Network::output_width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decision {
    Communicative {
        label: u16,
        confidence: f64,
    },
    /// `veto` names the non-gesture class that overrode an accepted gesture.
    NonCommunicative {
        veto: Option<u16>,
    },
}

impl Decision {
    pub fn label(&self) -> Option<u16> {
        match *self {
            Decision::Communicative { label, .. } => Some(label),
            Decision::NonCommunicative { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Decision::Communicative { .. } => "communicative",
            Decision::NonCommunicative { .. } => "non_communicative",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpotResult {
    pub t: u64,
    pub decision: Decision,
    pub confidences_comm: Vec<f64>,
    /// Empty when the non-gesture network was not consulted.
    pub confidences_non: Vec<f64>,
}

/// Runs the cascade on one feature vector. The non-gesture network is only
/// consulted when the first one accepts, and its acceptance wins.
pub fn spot(cascade: &CascadeModel, feature: &FeatureVector, t: u64) -> Result<SpotResult> {
    let (first, confidences_comm) = classify(&cascade.comm, feature.values(), cascade.threshold)?;
    let mut confidences_non = Vec::new();
    let decision = match first {
        Verdict::Rejected => Decision::NonCommunicative { veto: None },
        Verdict::Accepted { class, confidence } => match &cascade.non {
            None => Decision::Communicative {
                label: class,
                confidence,
            },
            Some(non) => {
                let (second, outputs) = classify(non, feature.values(), cascade.threshold)?;
                confidences_non = outputs;
                match second {
                    Verdict::Accepted { class: veto, .. } => {
                        Decision::NonCommunicative { veto: Some(veto) }
                    }
                    Verdict::Rejected => Decision::Communicative {
                        label: class,
                        confidence,
                    },
                }
            }
        },
    };
    Ok(SpotResult {
        t,
        decision,
        confidences_comm,
        confidences_non,
    })
}

/// Everything produced for one incoming frame.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput {
    pub result: SpotResult,
    /// Gesture that has persisted for the debounce window, if any.
    pub active: Option<u16>,
    pub command: Option<RobotCommand>,
}

/// Minimum-active-time filter: a label becomes active only after `window`
/// consecutive frames, and any other result clears it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Debouncer {
    candidate: Option<u16>,
    count: usize,
}

impl Debouncer {
    pub fn push(&mut self, label: Option<u16>, window: usize) -> Option<u16> {
        match label {
            Some(l) if self.candidate == Some(l) => self.count = (self.count + 1).min(window),
            Some(l) => {
                self.candidate = Some(l);
                self.count = 1;
            }
            None => *self = Self::default(),
        }
        self.candidate.filter(|_| self.count >= window)
    }

    /// Consecutive frames the current candidate has been seen, capped at the window.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// Per-stream state: recent frames and the debounce counter.
#[derive(Clone, Debug)]
pub struct Spotter {
    history: FrameHistory,
    debounce: Debouncer,
    active: Option<u16>,
    last_command: Option<RobotCommand>,
}

impl Spotter {
    pub fn new(cascade: &CascadeModel) -> Self {
        Self {
            history: FrameHistory::for_lag(cascade.lag),
            debounce: Debouncer::default(),
            active: None,
            last_command: None,
        }
    }

    pub fn reset(&mut self) {
        self.history.clear();
        self.debounce = Debouncer::default();
        self.active = None;
        self.last_command = None;
    }

    pub fn active(&self) -> Option<u16> {
        self.active
    }

    pub fn last_command(&self) -> Option<RobotCommand> {
        self.last_command
    }

    /// Consumes one frame. Only frames up to `frame.t` are ever read.
    pub fn step(&mut self, cascade: &CascadeModel, frame: SensorFrame) -> Result<StepOutput> {
        self.history.push(frame)?;
        let feature = extract_feature(&self.history, frame.t, cascade.lag)?;
        let result = spot(cascade, &feature, frame.t)?;

        let previous = self.active;
        self.active = self
            .debounce
            .push(result.decision.label(), cascade.debounce);

        let command = self
            .active
            .and_then(|g| map_command(g, frame.button))
            .filter(|c| {
                !(cascade.emission == EmissionMode::EdgeOneShot
                    && c.is_one_shot()
                    && previous == self.active)
            });
        if command.is_some() {
            self.last_command = command;
        }
        Ok(StepOutput {
            result,
            active: self.active,
            command,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub frames: usize,
    pub mean_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(mut ms: Vec<f64>) -> Self {
        if ms.is_empty() {
            return Self::default();
        }
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let p99 = ms[((n as f64 * 0.99).ceil() as usize).clamp(1, n) - 1];
        Self {
            frames: n,
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            p99_ms: p99,
            max_ms: ms[n - 1],
        }
    }
}

/// Times [`Spotter::step`] over `frames` uniformly random glove readings.
pub fn latency_probe(cascade: &CascadeModel, frames: usize, seed: u64) -> Result<LatencyStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spotter = Spotter::new(cascade);
    let mut samples = Vec::with_capacity(frames);
    for t in 0..frames as u64 {
        let sensors: [f64; SENSOR_COUNT] = std::array::from_fn(|_| rng.random());
        let frame = SensorFrame {
            t,
            sensors,
            button: rng.random(),
        };
        let start = Instant::now();
        let out = spotter.step(cascade, frame)?;
        samples.push(start.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(out);
    }
    Ok(LatencyStats::from_samples(samples))
}

pub const CASCADE_FORMAT_VERSION: u64 = 1;

/// File form of a [`CascadeModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeDocument {
    pub format_version: u64,
    pub lag: usize,
    pub threshold: f64,
    pub debounce: usize,
    #[serde(default)]
    pub emission: EmissionMode,
    pub comm: NetworkDocument,
    pub non: Option<NetworkDocument>,
}

impl From<&CascadeModel> for CascadeDocument {
    fn from(m: &CascadeModel) -> Self {
        Self {
            format_version: CASCADE_FORMAT_VERSION,
            lag: m.lag,
            threshold: m.threshold,
            debounce: m.debounce,
            emission: m.emission,
            comm: NetworkDocument::from(&m.comm),
            non: m.non.as_ref().map(NetworkDocument::from),
        }
    }
}

impl CascadeModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CascadeDocument::from(self)).expect("cascade is serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse("document", e.to_string()))?;
        let take = |v: &mut serde_json::Value, name: &str| {
            v.get_mut(name)
                .map(serde_json::Value::take)
                .ok_or_else(|| Error::parse(name, "missing"))
        };
        let version: u64 = serde_json::from_value(take(&mut value, "format_version")?)
            .map_err(|e| Error::parse("format_version", e.to_string()))?;
        if version != CASCADE_FORMAT_VERSION {
            return Err(Error::parse(
                "format_version",
                format!("unsupported version {version}"),
            ));
        }
        let comm = NetworkDocument::from_value(take(&mut value, "comm")?)
            .map_err(|e| Error::parse("comm", e.to_string()))?;
        let non = match value.get_mut("non").map(serde_json::Value::take) {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(
                NetworkDocument::from_value(v).map_err(|e| Error::parse("non", e.to_string()))?,
            ),
        };
        let field = |name: &str| -> Result<serde_json::Value> {
            value
                .get(name)
                .cloned()
                .ok_or_else(|| Error::parse(name, "missing"))
        };
        let lag: usize = serde_json::from_value(field("lag")?)
            .map_err(|e| Error::parse("lag", e.to_string()))?;
        let threshold: f64 = serde_json::from_value(field("threshold")?)
            .map_err(|e| Error::parse("threshold", e.to_string()))?;
        let debounce: usize = serde_json::from_value(field("debounce")?)
            .map_err(|e| Error::parse("debounce", e.to_string()))?;
        let emission: EmissionMode = match value.get("emission") {
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| Error::parse("emission", e.to_string()))?,
            None => EmissionMode::Level,
        };
        let model = CascadeModel {
            comm: comm.try_into()?,
            non: non.map(Network::try_from).transpose()?,
            lag,
            threshold,
            debounce,
            emission,
        };
        model.validate()?;
        Ok(model)
    }
}
