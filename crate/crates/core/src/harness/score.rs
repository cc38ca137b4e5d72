//! Error taxonomy over a debounced label timeline.
//!
//! Every hold instance owns a window made of its incoming transition plus
//! the hold itself. An emission run (a maximal stretch of one active label)
//! is attributed to the window containing its first frame. A window with a
//! wrong-label run is a substitution, otherwise a run of the right label
//! makes it recognised, otherwise it is a deletion. Extra runs of the right
//! label, and runs of the previous gesture restarting inside the transition,
//! count as insertions without affecting recognition.

use crate::domain::Truth;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Run {
    pub label: u16,
    pub start: usize,
    pub end: usize,
}

/// Maximal runs of identical `Some` labels.
pub fn emission_runs(timeline: &[Option<u16>]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, label) in timeline.iter().enumerate() {
        let Some(label) = *label else { continue };
        match runs.last_mut() {
            Some(r) if r.label == label && r.end == i => r.end = i + 1,
            _ => runs.push(Run {
                label,
                start: i,
                end: i + 1,
            }),
        }
    }
    runs
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Recognized,
    /// Carries the first wrong label seen in the window.
    Substituted(u16),
    Deleted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceScore {
    pub label: u16,
    /// First frame of the window (the incoming transition when there is one).
    pub window_start: usize,
    pub hold_start: usize,
    pub end: usize,
    pub outcome: Outcome,
    pub insertions: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionScore {
    pub from: u16,
    pub to: u16,
    pub start: usize,
    pub end: usize,
    /// Frames inside the transition with any active label.
    pub emission_frames: usize,
    /// Labels of the runs that start inside the transition.
    pub onsets: Vec<u16>,
}

impl TransitionScore {
    /// Onsets naming neither endpoint of the transition.
    pub fn false_alarms(&self) -> usize {
        self.onsets
            .iter()
            .filter(|&&g| g != self.from && g != self.to)
            .count()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Scored {
    pub instances: Vec<InstanceScore>,
    pub transitions: Vec<TransitionScore>,
}

/// Scores `timeline` against per-frame `truth`. Frames before `warmup` and
/// frames marked as warm-up are never scored.
pub fn score(timeline: &[Option<u16>], truth: &[Truth], warmup: usize) -> Result<Scored> {
    if timeline.len() != truth.len() {
        return Err(Error::dim("timeline", truth.len(), timeline.len()));
    }
    let masked: Vec<Option<u16>> = timeline
        .iter()
        .zip(truth)
        .enumerate()
        .map(|(i, (&l, t))| l.filter(|_| i >= warmup && *t != Truth::Warmup))
        .collect();

    let mut scored = Scored::default();
    // owner[i]: index of the instance whose window contains frame i
    let mut owner: Vec<Option<usize>> = vec![None; truth.len()];
    let mut pending: Option<usize> = None;
    let mut i = 0;
    while i < truth.len() {
        let t = truth[i];
        let mut end = i + 1;
        while end < truth.len() && truth[end] == t {
            end += 1;
        }
        match t {
            Truth::Transition { from, to } => {
                scored.transitions.push(TransitionScore {
                    from,
                    to,
                    start: i,
                    end,
                    emission_frames: masked[i..end].iter().flatten().count(),
                    onsets: Vec::new(),
                });
                pending = Some(i);
            }
            Truth::Hold(label) => {
                let idx = scored.instances.len();
                let window_start = pending.take().unwrap_or(i);
                owner[window_start..end].fill(Some(idx));
                scored.instances.push(InstanceScore {
                    label,
                    window_start,
                    hold_start: i,
                    end,
                    outcome: Outcome::Deleted,
                    insertions: 0,
                });
            }
            Truth::Warmup => pending = None,
        }
        i = end;
    }

    let mut correct_runs = vec![0usize; scored.instances.len()];
    let mut wrong: Vec<Option<u16>> = vec![None; scored.instances.len()];
    for run in emission_runs(&masked) {
        if let Truth::Transition { from, .. } = truth[run.start] {
            if let Some(tr) = scored
                .transitions
                .iter_mut()
                .rev()
                .find(|tr| tr.start <= run.start && run.start < tr.end)
            {
                tr.onsets.push(run.label);
            }
            if let Some(idx) = owner[run.start] {
                if run.label == from {
                    scored.instances[idx].insertions += 1;
                    continue;
                }
            }
        }
        let Some(idx) = owner[run.start] else {
            continue;
        };
        let inst = &mut scored.instances[idx];
        if run.label == inst.label {
            correct_runs[idx] += 1;
            if correct_runs[idx] > 1 {
                inst.insertions += 1;
            }
        } else if wrong[idx].is_none() {
            wrong[idx] = Some(run.label);
        }
    }
    for (idx, inst) in scored.instances.iter_mut().enumerate() {
        inst.outcome = match (wrong[idx], correct_runs[idx]) {
            (Some(w), _) => Outcome::Substituted(w),
            (None, 0) => Outcome::Deleted,
            (None, _) => Outcome::Recognized,
        };
    }
    Ok(scored)
}
