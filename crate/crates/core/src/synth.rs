//! Deterministic synthetic glove streams.
//!
//! Gesture templates are random points of the unit 22-cube kept a minimum
//! distance apart. A scripted session holds each template for a while and
//! moves linearly to the next one; Gaussian sensor noise is added last and
//! clamped to `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize};

use crate::domain::{FeatureVector, GestureLabel, Pose, SensorFrame, StreamRecord, Truth};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_SEPARATION: f64 = 1.5;
pub const DEFAULT_TIGHTNESS: f64 = 0.2;
pub const DEFAULT_SIGMA: f64 = 0.01;
pub const DEFAULT_HOLD_FRAMES: usize = 30;
pub const DEFAULT_TRANSITION_FRAMES: (usize, usize) = (10, 30);

const REJECTION_BUDGET: usize = 200_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GestureTemplate {
    pub label: u16,
    pub pose: Pose,
    pub name: String,
}

impl GestureTemplate {
    pub fn new(label: u16, pose: Pose) -> Self {
        Self {
            label,
            pose,
            name: format!("G{label}"),
        }
    }
}

pub fn distance(a: &Pose, b: &Pose) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn midpoint(a: &Pose, b: &Pose) -> Pose {
    std::array::from_fn(|i| 0.5 * (a[i] + b[i]))
}

pub fn find_template(templates: &[GestureTemplate], label: u16) -> Result<&GestureTemplate> {
    templates
        .iter()
        .find(|t| t.label == label)
        .ok_or_else(|| Error::Generation(format!("no template for G{label}")))
}

/// Label of the template closest to `pose`.
pub fn nearest_template(templates: &[GestureTemplate], pose: &Pose) -> Option<u16> {
    templates
        .iter()
        .min_by(|a, b| distance(&a.pose, pose).total_cmp(&distance(&b.pose, pose)))
        .map(|t| t.label)
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose {
    std::array::from_fn(|_| rng.random::<f64>())
}

fn sample_separated(
    rng: &mut ChaCha8Rng,
    placed: &[Pose],
    min_separation: f64,
    budget: &mut usize,
) -> Result<Pose> {
    loop {
        if *budget == 0 {
            return Err(Error::Generation(format!(
                "could not place templates {min_separation} apart; try a smaller min_separation"
            )));
        }
        *budget -= 1;
        let p = random_pose(rng);
        if placed.iter().all(|q| distance(&p, q) >= min_separation) {
            return Ok(p);
        }
    }
}

/// `count` templates labelled `G1..`, pairwise at least `min_separation` apart.
pub fn make_templates(
    count: usize,
    seed: u64,
    min_separation: f64,
) -> Result<Vec<GestureTemplate>> {
    if count == 0 {
        return Err(Error::Generation("template count must be positive".into()));
    }
    if min_separation.is_nan() || min_separation <= 0.0 {
        return Err(Error::Generation("min_separation must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut budget = REJECTION_BUDGET;
    let mut poses = Vec::with_capacity(count);
    for _ in 0..count {
        let p = sample_separated(&mut rng, &poses, min_separation, &mut budget)?;
        poses.push(p);
    }
    Ok(poses
        .into_iter()
        .enumerate()
        .map(|(i, p)| GestureTemplate::new(i as u16 + 1, p))
        .collect())
}

/// Which three gestures form the confusable arrangement: the straight path
/// from `from` to `to` passes within `tightness` of `near`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub from: u16,
    pub to: u16,
    pub near: u16,
    pub tightness: f64,
}

impl Default for Triplet {
    fn default() -> Self {
        Self {
            from: 5,
            to: 6,
            near: 7,
            tightness: DEFAULT_TIGHTNESS,
        }
    }
}

fn offset_point(rng: &mut ChaCha8Rng, centre: &Pose, radius: f64) -> Result<Pose> {
    for _ in 0..10_000 {
        let dir: Pose = std::array::from_fn(|_| StandardNormal.sample(rng));
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let p: Pose = std::array::from_fn(|i| centre[i] + radius * dir[i] / norm);
        if p.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Ok(p);
        }
    }
    Err(Error::Generation(format!(
        "no offset of length {radius} stays inside the unit cube"
    )))
}

/// Moves `near` to `midpoint(from, to) + eps` with `|eps| = tightness`.
/// Separation from every template other than `from` and `to` is re-checked.
pub fn make_confusable_triplet(
    templates: &[GestureTemplate],
    triplet: Triplet,
    min_separation: f64,
    seed: u64,
) -> Result<Vec<GestureTemplate>> {
    let Triplet {
        from,
        to,
        near,
        tightness,
    } = triplet;
    if from == to || from == near || to == near {
        return Err(Error::Generation("triplet labels must be distinct".into()));
    }
    let mid = midpoint(
        &find_template(templates, from)?.pose,
        &find_template(templates, to)?.pose,
    );
    find_template(templates, near)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = offset_point(&mut rng, &mid, tightness)?;
    for t in templates {
        if ![from, to, near].contains(&t.label) && distance(&t.pose, &pose) < min_separation {
            return Err(Error::Generation(format!(
                "relocated G{near} would be {:.3} from G{}",
                distance(&t.pose, &pose),
                t.label
            )));
        }
    }
    let mut out = templates.to_vec();
    for t in &mut out {
        if t.label == near {
            t.pose = pose;
        }
    }
    Ok(out)
}

/// Templates with the confusable arrangement built in from the start: the
/// two endpoints are drawn first, the third is placed by the path, and the
/// rest are sampled around them.
pub fn make_templates_with_triplet(
    count: usize,
    seed: u64,
    min_separation: f64,
    triplet: Triplet,
) -> Result<Vec<GestureTemplate>> {
    let labels = [triplet.from, triplet.to, triplet.near];
    if labels.iter().any(|&l| l == 0 || l as usize > count) {
        return Err(Error::Generation(format!(
            "triplet {labels:?} not inside a library of {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut budget = REJECTION_BUDGET;
    let a = sample_separated(&mut rng, &[], min_separation, &mut budget)?;
    let b = sample_separated(&mut rng, &[a], min_separation, &mut budget)?;
    let c = offset_point(&mut rng, &midpoint(&a, &b), triplet.tightness)?;
    let mut placed = vec![a, b, c];
    let mut poses: Vec<Option<Pose>> = vec![None; count];
    poses[triplet.from as usize - 1] = Some(a);
    poses[triplet.to as usize - 1] = Some(b);
    poses[triplet.near as usize - 1] = Some(c);
    for slot in poses.iter_mut().filter(|p| p.is_none()) {
        let p = sample_separated(&mut rng, &placed, min_separation, &mut budget)?;
        placed.push(p);
        *slot = Some(p);
    }
    Ok(poses
        .into_iter()
        .enumerate()
        .map(|(i, p)| GestureTemplate::new(i as u16 + 1, p.unwrap()))
        .collect())
}

pub(crate) fn gesture_index<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u16, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Index(u16),
        Name(String),
    }
    match Raw::deserialize(d)? {
        Raw::Index(i) if i >= 1 => Ok(i),
        Raw::Index(_) => Err(serde::de::Error::custom("gesture index must be >= 1")),
        Raw::Name(s) => match s.parse::<GestureLabel>() {
            Ok(GestureLabel::Communicative(i)) => Ok(i),
            _ => Err(serde::de::Error::custom(format!("bad gesture `{s}`"))),
        },
    }
}

pub(crate) fn gesture_name<S: serde::Serializer>(
    g: &u16,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(&format_args!("G{g}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptStep {
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub label: u16,
    pub hold: usize,
}

/// A scripted glove session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub steps: Vec<ScriptStep>,
    /// Inclusive range for the number of frames of each transition.
    pub transition: (usize, usize),
    pub sigma: f64,
    #[serde(default = "one")]
    pub reps: usize,
    pub seed: u64,
    /// Button state per step; empty means released throughout.
    #[serde(default)]
    pub button: Vec<bool>,
}

fn one() -> usize {
    1
}

impl ScenarioScript {
    /// Every gesture held for the default duration, in the given order.
    pub fn sequence(labels: &[u16], reps: usize, sigma: f64, seed: u64) -> Self {
        Self {
            steps: labels
                .iter()
                .map(|&label| ScriptStep {
                    label,
                    hold: DEFAULT_HOLD_FRAMES,
                })
                .collect(),
            transition: DEFAULT_TRANSITION_FRAMES,
            sigma,
            reps,
            seed,
            button: vec![true; labels.len()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.iter().any(|s| s.hold == 0) {
            return Err(Error::Generation("hold must be at least one frame".into()));
        }
        let (lo, hi) = self.transition;
        if lo == 0 || hi < lo {
            return Err(Error::Generation(format!(
                "transition range [{lo}, {hi}] must be positive and ordered"
            )));
        }
        if self.sigma.is_nan() || self.sigma < 0.0 {
            return Err(Error::Generation("sigma must be non-negative".into()));
        }
        if !self.button.is_empty() && self.button.len() != self.steps.len() {
            return Err(Error::Generation(format!(
                "button plan has {} entries for {} steps",
                self.button.len(),
                self.steps.len()
            )));
        }
        Ok(())
    }
}

/// Frames plus per-frame ground truth.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotatedStream {
    pub frames: Vec<SensorFrame>,
    pub truth: Vec<Truth>,
}

/// A maximal run of frames with the same truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub truth: Truth,
    /// Index of the first frame.
    pub start: usize,
    /// One past the last frame.
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

impl AnnotatedStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Truth runs in stream order. Consecutive holds of the same gesture
    /// are separated by their transition, so each hold run is one instance.
    pub fn segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = Vec::new();
        for (i, &truth) in self.truth.iter().enumerate() {
            match out.last_mut() {
                Some(seg) if seg.truth == truth => seg.end = i + 1,
                _ => out.push(Segment {
                    truth,
                    start: i,
                    end: i + 1,
                }),
            }
        }
        out
    }

    pub fn records(&self) -> Vec<StreamRecord> {
        self.frames
            .iter()
            .zip(&self.truth)
            .map(|(f, &t)| StreamRecord::from_frame(f, Some(t)))
            .collect()
    }

    pub fn from_records(records: &[StreamRecord]) -> Result<Self> {
        let mut s = AnnotatedStream::default();
        for r in records {
            s.frames.push(r.to_frame()?);
            s.truth.push(r.truth.ok_or_else(|| {
                Error::parse(format!("truth (frame {})", r.t), "missing ground truth")
            })?);
        }
        Ok(s)
    }

    /// Lag-`lag` feature at frame index `i`, substituting frame 0 at the start.
    pub fn feature_at(&self, i: usize, lag: usize) -> FeatureVector {
        FeatureVector::from_pair(
            &self.frames[i.saturating_sub(lag)].sensors,
            &self.frames[i].sensors,
            lag,
        )
    }
}

/// Renders a script: holds at template poses joined by linear transitions
/// (interior points only), with seeded clamped Gaussian noise on every frame.
pub fn generate_stream(
    script: &ScenarioScript,
    templates: &[GestureTemplate],
) -> Result<AnnotatedStream> {
    script.validate()?;
    let poses = script
        .steps
        .iter()
        .map(|s| find_template(templates, s.label).map(|t| t.pose))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let noise = Normal::new(0.0, script.sigma).map_err(|e| Error::Generation(e.to_string()))?;
    let (lo, hi) = script.transition;
    let mut stream = AnnotatedStream::default();
    let button = |i: usize| script.button.get(i).copied().unwrap_or(false);

    let emit = |rng: &mut ChaCha8Rng,
                pose: &Pose,
                truth: Truth,
                button: bool,
                stream: &mut AnnotatedStream| {
        let sensors: Pose = std::array::from_fn(|k| {
            let v = if script.sigma > 0.0 {
                pose[k] + noise.sample(rng)
            } else {
                pose[k]
            };
            v.clamp(0.0, 1.0)
        });
        stream.frames.push(SensorFrame {
            t: stream.frames.len() as u64,
            sensors,
            button,
        });
        stream.truth.push(truth);
    };

    let total = script.steps.len() * script.reps;
    let mut prev: Option<usize> = None;
    for n in 0..total {
        let i = n % script.steps.len();
        let step = &script.steps[i];
        if let Some(p) = prev {
            let frames = rng.random_range(lo..=hi);
            let truth = Truth::Transition {
                from: script.steps[p].label,
                to: step.label,
            };
            for f in 1..=frames {
                let s = f as f64 / (frames + 1) as f64;
                let pose: Pose =
                    std::array::from_fn(|k| poses[p][k] + s * (poses[i][k] - poses[p][k]));
                emit(&mut rng, &pose, truth, button(i), &mut stream);
            }
        }
        for _ in 0..step.hold {
            emit(
                &mut rng,
                &poses[i],
                Truth::Hold(step.label),
                button(i),
                &mut stream,
            );
        }
        prev = Some(i);
    }
    Ok(stream)
}

/// A transition to mine for non-gesture classes, `count` classes at evenly
/// spaced interior positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionSpec {
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub from: u16,
    #[serde(deserialize_with = "gesture_index", serialize_with = "gesture_name")]
    pub to: u16,
    pub count: usize,
}

impl TransitionSpec {
    pub fn new(from: u16, to: u16, count: usize) -> Self {
        Self { from, to, count }
    }
}

/// The three trained non-gestures: two inside G5 -> G6, one inside G6 -> G7.
pub fn transition_non_gestures() -> Vec<TransitionSpec> {
    vec![TransitionSpec::new(5, 6, 2), TransitionSpec::new(6, 7, 1)]
}

/// 0-based offsets of `count` evenly spaced interior frames of a transition
/// `len` frames long.
pub fn interior_positions(len: usize, count: usize) -> Vec<usize> {
    (1..=count)
        .map(|j| (j * (len + 1) / (count + 1)).clamp(1, len) - 1)
        .collect()
}

/// Lag-`lag` features sampled from matching transitions. Spec positions map
/// to non-gesture classes `1..` in order; at most `per_class` transition
/// occurrences are used for each.
pub fn harvest_non_gestures(
    stream: &AnnotatedStream,
    specs: &[TransitionSpec],
    per_class: usize,
    lag: usize,
) -> Result<Vec<(FeatureVector, u16)>> {
    let segments = stream.segments();
    let mut out = Vec::new();
    let mut class = 0u16;
    for spec in specs {
        let matching: Vec<&Segment> = segments
            .iter()
            .filter(|s| {
                s.truth
                    == Truth::Transition {
                        from: spec.from,
                        to: spec.to,
                    }
            })
            .take(per_class)
            .collect();
        if matching.is_empty() {
            return Err(Error::Harvest(format!(
                "no G{}->G{} transition in the stream",
                spec.from, spec.to
            )));
        }
        for pos in 0..spec.count {
            class += 1;
            for seg in &matching {
                let offset = interior_positions(seg.len(), spec.count)[pos];
                out.push((stream.feature_at(seg.start + offset, lag), class));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise_min(t: &[GestureTemplate], skip: &[u16]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                if skip.contains(&t[i].label) && skip.contains(&t[j].label) {
                    continue;
                }
                m = m.min(distance(&t[i].pose, &t[j].pose));
            }
        }
        m
    }

    #[test]
    fn ten_templates_are_separated() {
        let t = make_templates(10, 1, 1.5).unwrap();
        assert_eq!(t.len(), 10);
        assert!(pairwise_min(&t, &[]) >= 1.5);
        assert!(t
            .iter()
            .all(|g| g.pose.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(t, make_templates(10, 1, 1.5).unwrap());
    }

    #[test]
    fn thirty_templates_and_single_template() {
        let t = make_templates(30, 4, 1.5).unwrap();
        assert_eq!(t.len(), 30);
        assert!(pairwise_min(&t, &[]) >= 1.5);
        assert_eq!(make_templates(1, 0, 100.0).unwrap().len(), 1);
    }

    #[test]
    fn infeasible_separation_fails() {
        let err = make_templates(3, 0, 10.0).unwrap_err();
        assert!(err.to_string().contains("smaller min_separation"));
    }

    #[test]
    fn triplet_lands_near_the_midpoint() {
        let base = make_templates(10, 2, 1.0).unwrap();
        let t = make_confusable_triplet(&base, Triplet::default(), 0.3, 5).unwrap();
        let (p5, p6, p7) = (&t[4].pose, &t[5].pose, &t[6].pose);
        assert!((distance(&midpoint(p5, p6), p7) - 0.2).abs() < 1e-12);
        let exact = make_confusable_triplet(
            &base,
            Triplet {
                tightness: 0.0,
                ..Triplet::default()
            },
            0.3,
            5,
        )
        .unwrap();
        assert_eq!(exact[6].pose, midpoint(p5, p6));
    }

    #[test]
    fn triplet_rejects_crowded_relocation() {
        let base = make_templates(10, 2, 1.5).unwrap();
        // the cube centre region cannot be 3.0 from anything
        assert!(make_confusable_triplet(&base, Triplet::default(), 3.0, 5).is_err());
    }

    #[test]
    fn built_in_triplet_respects_separation_elsewhere() {
        let t = make_templates_with_triplet(30, 3, 1.5, Triplet::default()).unwrap();
        assert_eq!(t.len(), 30);
        assert!((distance(&midpoint(&t[4].pose, &t[5].pose), &t[6].pose) - 0.2).abs() < 1e-12);
        assert!(pairwise_min(&t, &[5, 6, 7]) >= 1.5);
    }

    #[test]
    fn noiseless_transition_midpoint_is_nearest_to_the_third_gesture() {
        let t = make_templates_with_triplet(10, 1, 1.5, Triplet::default()).unwrap();
        let script = ScenarioScript {
            steps: vec![
                ScriptStep { label: 5, hold: 5 },
                ScriptStep { label: 6, hold: 5 },
            ],
            transition: (21, 21),
            sigma: 0.0,
            reps: 1,
            seed: 0,
            button: vec![],
        };
        let s = generate_stream(&script, &t).unwrap();
        let mid = &s.frames[5 + 10].sensors;
        assert_eq!(s.truth[15], Truth::Transition { from: 5, to: 6 });
        assert_eq!(nearest_template(&t, mid), Some(7));
    }

    #[test]
    fn single_noiseless_step_reproduces_template() {
        let t = make_templates(3, 0, 1.0).unwrap();
        let script = ScenarioScript {
            steps: vec![ScriptStep { label: 2, hold: 12 }],
            transition: (10, 30),
            sigma: 0.0,
            reps: 1,
            seed: 3,
            button: vec![true],
        };
        let s = generate_stream(&script, &t).unwrap();
        assert_eq!(s.len(), 12);
        assert!(s.frames.iter().all(|f| f.sensors == t[1].pose && f.button));
        assert!(s.frames.iter().enumerate().all(|(i, f)| f.t == i as u64));
    }

    #[test]
    fn fixed_transition_length() {
        let t = make_templates(3, 0, 1.0).unwrap();
        let script = ScenarioScript {
            steps: vec![
                ScriptStep { label: 1, hold: 4 },
                ScriptStep { label: 3, hold: 4 },
            ],
            transition: (20, 20),
            sigma: 0.0,
            reps: 1,
            seed: 3,
            button: vec![],
        };
        let s = generate_stream(&script, &t).unwrap();
        let n = s
            .truth
            .iter()
            .filter(|t| matches!(t, Truth::Transition { .. }))
            .count();
        assert_eq!(n, 20);
        assert_eq!(s.len(), 28);
    }

    #[test]
    fn transitions_lie_on_the_segment() {
        let t = make_templates(4, 9, 1.0).unwrap();
        let script = ScenarioScript::sequence(&[1, 2, 3, 4], 2, 0.0, 11);
        let s = generate_stream(&script, &t).unwrap();
        for (f, truth) in s.frames.iter().zip(&s.truth) {
            match *truth {
                Truth::Hold(g) => assert_eq!(f.sensors, t[g as usize - 1].pose),
                Truth::Transition { from, to } => {
                    let (a, b) = (&t[from as usize - 1].pose, &t[to as usize - 1].pose);
                    // a point on [a, b] splits the length exactly
                    let gap = distance(a, &f.sensors) + distance(&f.sensors, b) - distance(a, b);
                    assert!(gap.abs() < 1e-12);
                }
                Truth::Warmup => unreachable!(),
            }
        }
    }

    #[test]
    fn default_sequence_hundred_times() {
        let t = make_templates(10, 1, 1.5).unwrap();
        let order = [8, 2, 3, 4, 5, 6, 7, 1, 9, 10];
        let script = ScenarioScript::sequence(&order, 100, 0.01, 5);
        let s = generate_stream(&script, &t).unwrap();
        let holds: Vec<u16> = s
            .segments()
            .into_iter()
            .filter_map(|seg| match seg.truth {
                Truth::Hold(g) => Some(g),
                _ => None,
            })
            .collect();
        assert_eq!(holds.len(), 1000);
        assert!(holds.chunks(10).all(|c| c == order));
        assert!(s
            .frames
            .iter()
            .all(|f| f.sensors.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(s, generate_stream(&script, &t).unwrap());
    }

    #[test]
    fn unknown_label_is_an_error() {
        let t = make_templates(3, 0, 1.0).unwrap();
        let script = ScenarioScript::sequence(&[1, 9], 1, 0.0, 0);
        assert!(matches!(
            generate_stream(&script, &t),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn interior_position_rule() {
        assert_eq!(interior_positions(20, 1), vec![9]);
        assert_eq!(interior_positions(21, 1), vec![10]);
        assert_eq!(interior_positions(20, 2), vec![6, 13]);
        assert_eq!(interior_positions(1, 3), vec![0, 0, 0]);
    }

    #[test]
    fn harvest_matches_third_test_layout() {
        let t = make_templates_with_triplet(10, 1, 1.5, Triplet::default()).unwrap();
        let script = ScenarioScript::sequence(&[8, 2, 3, 4, 5, 6, 7, 1, 9, 10], 4, 0.0, 2);
        let s = generate_stream(&script, &t).unwrap();
        let h = harvest_non_gestures(&s, &transition_non_gestures(), 20, 3).unwrap();
        let mut classes: Vec<u16> = h.iter().map(|(_, c)| *c).collect();
        classes.dedup();
        assert_eq!(classes, vec![1, 2, 3]);
        assert_eq!(h.len(), 3 * 4);
        assert!(h
            .iter()
            .all(|(f, _)| f.values().len() == 44 && f.lag() == 3));
        let missing = harvest_non_gestures(&s, &[TransitionSpec::new(1, 2, 1)], 1, 1);
        assert!(matches!(missing, Err(Error::Harvest(_))));
    }

    #[test]
    fn harvested_midpoint_looks_like_the_third_gesture() {
        let t = make_templates_with_triplet(10, 1, 1.5, Triplet::default()).unwrap();
        let script = ScenarioScript {
            steps: vec![
                ScriptStep { label: 5, hold: 10 },
                ScriptStep { label: 6, hold: 10 },
            ],
            transition: (21, 21),
            sigma: 0.0,
            reps: 1,
            seed: 0,
            button: vec![],
        };
        let s = generate_stream(&script, &t).unwrap();
        let h = harvest_non_gestures(&s, &[TransitionSpec::new(5, 6, 1)], 1, 1).unwrap();
        let current: Pose = h[0].0.values()[22..].try_into().unwrap();
        assert_eq!(nearest_template(&t, &current), Some(7));
    }

    #[test]
    fn script_json_shape() {
        let text = r#"{"steps":[{"label":"G8","hold":30},{"label":2,"hold":25}],
            "transition":[10,30],"sigma":0.01,"reps":100,"seed":7,"button":[true,false]}"#;
        let s: ScenarioScript = serde_json::from_str(text).unwrap();
        assert_eq!(s.steps[0].label, 8);
        assert_eq!(s.steps[1].label, 2);
        assert_eq!(s.transition, (10, 30));
        let back: ScenarioScript =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
