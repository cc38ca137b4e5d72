use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::score::{Outcome, Scored};
use super::ExperimentConfig;
use crate::error::{Error, Result};
use crate::spotter::LatencyStats;
use crate::synth::{gesture_index, gesture_name};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GestureRow {
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub label: u16,
    pub instances: usize,
    pub recognized: usize,
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    /// Recognition rate in percent.
    pub rr: f64,
}

/// Emission statistics over every occurrence of one transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub from: u16,
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub to: u16,
    pub occurrences: usize,
    /// Occurrences during which no label was active on any frame.
    pub silent: usize,
    /// Occurrences in which no emission started.
    pub no_onset: usize,
    /// Occurrences in which nothing but the destination gesture started.
    pub no_spurious_onset: usize,
    /// Emissions started naming neither endpoint.
    pub false_alarms: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub comm_samples: usize,
    pub non_samples: usize,
    pub comm_final_loss: f64,
    pub non_final_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ExperimentConfig,
    /// Rows in evaluation-sequence order.
    pub per_gesture: Vec<GestureRow>,
    pub mean_rr: Option<f64>,
    pub transitions: Vec<TransitionRow>,
    pub training: TrainingSummary,
    /// Timing is machine dependent, so it is only filled in on request.
    pub latency: Option<LatencyStats>,
}

impl EvalReport {
    pub fn from_scored(
        config: ExperimentConfig,
        order: &[u16],
        scored: &Scored,
        training: TrainingSummary,
    ) -> Self {
        let mut per_gesture = Vec::new();
        for &g in order {
            let mut row = GestureRow {
                label: g,
                instances: 0,
                recognized: 0,
                substitutions: 0,
                insertions: 0,
                deletions: 0,
                rr: 0.0,
            };
            for inst in scored.instances.iter().filter(|i| i.label == g) {
                row.instances += 1;
                row.insertions += inst.insertions;
                match inst.outcome {
                    Outcome::Recognized => row.recognized += 1,
                    Outcome::Substituted(_) => row.substitutions += 1,
                    Outcome::Deleted => row.deletions += 1,
                }
            }
            if row.instances > 0 {
                row.rr = 100.0 * row.recognized as f64 / row.instances as f64;
                per_gesture.push(row);
            }
        }
        let mean_rr = (!per_gesture.is_empty())
            .then(|| per_gesture.iter().map(|r| r.rr).sum::<f64>() / per_gesture.len() as f64);

        let mut table: BTreeMap<(u16, u16), TransitionRow> = BTreeMap::new();
        for tr in &scored.transitions {
            let row = table.entry((tr.from, tr.to)).or_insert(TransitionRow {
                from: tr.from,
                to: tr.to,
                occurrences: 0,
                silent: 0,
                no_onset: 0,
                no_spurious_onset: 0,
                false_alarms: 0,
            });
            row.occurrences += 1;
            row.silent += usize::from(tr.emission_frames == 0);
            row.no_onset += usize::from(tr.onsets.is_empty());
            row.no_spurious_onset += usize::from(tr.onsets.iter().all(|&g| g == tr.to));
            row.false_alarms += tr.false_alarms();
        }
        Self {
            config,
            per_gesture,
            mean_rr,
            transitions: table.into_values().collect(),
            training,
            latency: None,
        }
    }

    pub fn gesture(&self, label: u16) -> Option<&GestureRow> {
        self.per_gesture.iter().find(|r| r.label == label)
    }

    pub fn transition(&self, from: u16, to: u16) -> Option<&TransitionRow> {
        self.transitions
            .iter()
            .find(|r| r.from == from && r.to == to)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serialisable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("report", e.to_string()))
    }
}

/// Recognition-rate table with one column per report. Rows follow the first
/// report's gesture order and end with the mean.
pub fn render_markdown(columns: &[(&str, &EvalReport)]) -> String {
    let mut out = String::from("| Gesture |");
    for (name, _) in columns {
        let _ = write!(out, " {name} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(columns.len()));
    out.push('\n');
    let Some((_, first)) = columns.first() else {
        return out;
    };
    if first.per_gesture.is_empty() {
        return out;
    }
    for row in &first.per_gesture {
        let _ = write!(out, "| G{} |", row.label);
        for (_, r) in columns {
            match r.gesture(row.label) {
                Some(g) => {
                    let _ = write!(out, " {:.1} |", g.rr);
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out.push_str("| Mean |");
    for (_, r) in columns {
        match r.mean_rr {
            Some(m) => {
                let _ = write!(out, " {m:.1} |");
            }
            None => out.push_str(" - |"),
        }
    }
    out.push('\n');
    out
}
