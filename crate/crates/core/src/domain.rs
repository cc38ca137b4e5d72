//! Sensor frames, lagged feature vectors, gesture labels and the gesture to
//! robot command table.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Resistive joint-angle sensors on the glove.
pub const SENSOR_COUNT: usize = 22;
/// Network input width: the reading at `t - n` followed by the reading at `t`.
pub const FEATURE_WIDTH: usize = 2 * SENSOR_COUNT;
/// Glove update period.
pub const FRAME_PERIOD_MS: u64 = 15;
/// Gestures that carry a robot command.
pub const COMMAND_LIBRARY: u16 = 10;

pub type Pose = [f64; SENSOR_COUNT];

/// One normalised glove reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub t: u64,
    pub sensors: Pose,
    pub button: bool,
}

impl SensorFrame {
    pub fn new(t: u64, sensors: Pose, button: bool) -> Result<Self> {
        if let Some(i) = sensors.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput(format!(
                "sensor {} of frame {t} is {} (outside [0, 1])",
                i + 1,
                sensors[i]
            )));
        }
        Ok(Self { t, sensors, button })
    }

    pub fn from_slice(t: u64, sensors: &[f64], button: bool) -> Result<Self> {
        let pose: Pose = sensors
            .try_into()
            .map_err(|_| Error::dim("sensor frame", SENSOR_COUNT, sensors.len()))?;
        Self::new(t, pose, button)
    }

    /// Simulated timestamp of this frame.
    pub fn time_ms(&self) -> u64 {
        self.t * FRAME_PERIOD_MS
    }
}

/// Two readings `lag` frames apart, concatenated oldest first.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    lag: usize,
}

impl FeatureVector {
    pub fn from_pair(earlier: &Pose, current: &Pose, lag: usize) -> Self {
        let mut values = Vec::with_capacity(FEATURE_WIDTH);
        values.extend_from_slice(earlier);
        values.extend_from_slice(current);
        Self { values, lag }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Recent frames of one stream, oldest first.
#[derive(Clone, Debug, Default)]
pub struct FrameHistory {
    frames: VecDeque<SensorFrame>,
    capacity: usize,
}

impl FrameHistory {
    /// A history that keeps enough frames to build lag-`lag` features.
    pub fn for_lag(lag: usize) -> Self {
        Self {
            frames: VecDeque::with_capacity(lag + 1),
            capacity: lag + 1,
        }
    }

    /// Appends a frame; `t` must increase strictly.
    pub fn push(&mut self, frame: SensorFrame) -> Result<()> {
        if let Some(last) = self.frames.back() {
            if frame.t <= last.t {
                return Err(Error::StreamOrder {
                    last: last.t,
                    got: frame.t,
                });
            }
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn latest(&self) -> Option<&SensorFrame> {
        self.frames.back()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clear(&mut self) {
        self.frames.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &SensorFrame> {
        self.frames.iter()
    }
}

/// Builds the lag-`lag` feature for frame `t`. When fewer than `lag` frames
/// precede `t` the earliest frame still held is used instead.
pub fn extract_feature(history: &FrameHistory, t: u64, lag: usize) -> Result<FeatureVector> {
    if lag == 0 {
        return Err(Error::InvalidInput("lag must be at least 1".into()));
    }
    let pos = history
        .frames
        .iter()
        .position(|f| f.t == t)
        .ok_or(Error::MissingFrame(t))?;
    let earlier = &history.frames[pos.saturating_sub(lag)];
    Ok(FeatureVector::from_pair(
        &earlier.sensors,
        &history.frames[pos].sensors,
        lag,
    ))
}

/// Gesture class as produced by the networks or written in ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GestureLabel {
    /// `G1..=GK`, 1-based.
    Communicative(u16),
    /// `N1..=NM`, 1-based.
    NonGesture(u16),
    Unknown,
}

impl GestureLabel {
    pub fn gesture(index: u16) -> Self {
        GestureLabel::Communicative(index)
    }

    pub fn communicative_index(self) -> Option<u16> {
        match self {
            GestureLabel::Communicative(i) => Some(i),
            _ => None,
        }
    }

    pub fn check_bounds(self, library: u16, non_gestures: u16) -> Result<()> {
        let ok = match self {
            GestureLabel::Communicative(i) => (1..=library).contains(&i),
            GestureLabel::NonGesture(i) => (1..=non_gestures).contains(&i),
            GestureLabel::Unknown => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("label {self} out of range")))
        }
    }
}

impl fmt::Display for GestureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GestureLabel::Communicative(i) => write!(f, "G{i}"),
            GestureLabel::NonGesture(i) => write!(f, "N{i}"),
            GestureLabel::Unknown => f.write_str("?"),
        }
    }
}

impl FromStr for GestureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let index = |rest: &str| {
            rest.parse::<u16>()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::parse("label", format!("bad label `{s}`")))
        };
        match s {
            "?" => Ok(GestureLabel::Unknown),
            _ if s.starts_with('G') => index(&s[1..]).map(GestureLabel::Communicative),
            _ if s.starts_with('N') => index(&s[1..]).map(GestureLabel::NonGesture),
            _ => Err(Error::parse("label", format!("bad label `{s}`"))),
        }
    }
}

impl Serialize for GestureLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GestureLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RobotCommand {
    Stop,
    #[serde(rename = "X+")]
    XPlus,
    #[serde(rename = "X-")]
    XMinus,
    #[serde(rename = "Y+")]
    YPlus,
    #[serde(rename = "Y-")]
    YMinus,
    #[serde(rename = "Z+")]
    ZPlus,
    #[serde(rename = "Z-")]
    ZMinus,
    #[serde(rename = "RX+")]
    RxPlus,
    #[serde(rename = "RX-")]
    RxMinus,
    #[serde(rename = "RY+")]
    RyPlus,
    #[serde(rename = "RY-")]
    RyMinus,
    #[serde(rename = "RZ+")]
    RzPlus,
    #[serde(rename = "RZ-")]
    RzMinus,
    SavePose,
    ReturnToSaved,
    Loop,
    VacuumOn,
    VacuumOff,
}

impl RobotCommand {
    pub const ALL: [RobotCommand; 18] = [
        RobotCommand::Stop,
        RobotCommand::XPlus,
        RobotCommand::XMinus,
        RobotCommand::YPlus,
        RobotCommand::YMinus,
        RobotCommand::ZPlus,
        RobotCommand::ZMinus,
        RobotCommand::RxPlus,
        RobotCommand::RxMinus,
        RobotCommand::RyPlus,
        RobotCommand::RyMinus,
        RobotCommand::RzPlus,
        RobotCommand::RzMinus,
        RobotCommand::SavePose,
        RobotCommand::ReturnToSaved,
        RobotCommand::Loop,
        RobotCommand::VacuumOn,
        RobotCommand::VacuumOff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RobotCommand::Stop => "Stop",
            RobotCommand::XPlus => "X+",
            RobotCommand::XMinus => "X-",
            RobotCommand::YPlus => "Y+",
            RobotCommand::YMinus => "Y-",
            RobotCommand::ZPlus => "Z+",
            RobotCommand::ZMinus => "Z-",
            RobotCommand::RxPlus => "RX+",
            RobotCommand::RxMinus => "RX-",
            RobotCommand::RyPlus => "RY+",
            RobotCommand::RyMinus => "RY-",
            RobotCommand::RzPlus => "RZ+",
            RobotCommand::RzMinus => "RZ-",
            RobotCommand::SavePose => "SavePose",
            RobotCommand::ReturnToSaved => "ReturnToSaved",
            RobotCommand::Loop => "Loop",
            RobotCommand::VacuumOn => "VacuumOn",
            RobotCommand::VacuumOff => "VacuumOff",
        }
    }

    /// Velocity-style jog commands that stay active until replaced.
    pub fn is_motion(self) -> bool {
        !matches!(
            self,
            RobotCommand::Stop
                | RobotCommand::SavePose
                | RobotCommand::ReturnToSaved
                | RobotCommand::Loop
                | RobotCommand::VacuumOn
                | RobotCommand::VacuumOff
        )
    }

    /// Commands that act once rather than continuously.
    pub fn is_one_shot(self) -> bool {
        matches!(
            self,
            RobotCommand::SavePose
                | RobotCommand::ReturnToSaved
                | RobotCommand::Loop
                | RobotCommand::VacuumOn
                | RobotCommand::VacuumOff
        )
    }
}

impl fmt::Display for RobotCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RobotCommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RobotCommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::parse("command", format!("unknown command `{s}`")))
    }
}

/// Gesture to command table. The button selects between translation and
/// rotation for G2..G7; gestures beyond G10 are recognition-only.
pub fn map_command(gesture: u16, button: bool) -> Option<RobotCommand> {
    use RobotCommand::*;
    let cmd = match (gesture, button) {
        (1, _) => Stop,
        (2, true) => XPlus,
        (2, false) => RxPlus,
        (3, true) => XMinus,
        (3, false) => RxMinus,
        (4, true) => YPlus,
        (4, false) => RyPlus,
        (5, true) => YMinus,
        (5, false) => RyMinus,
        (6, true) => ZPlus,
        (6, false) => RzPlus,
        (7, true) => ZMinus,
        (7, false) => RzMinus,
        (8, _) => SavePose,
        (9, true) => ReturnToSaved,
        (9, false) => Loop,
        (10, true) => VacuumOn,
        (10, false) => VacuumOff,
        _ => return None,
    };
    Some(cmd)
}

/// Target vector with a single 1.0 at the 1-based `index`.
pub fn one_hot(index: u16, size: usize) -> Result<Vec<f64>> {
    if index == 0 || index as usize > size {
        return Err(Error::InvalidInput(format!(
            "class {index} outside 1..={size}"
        )));
    }
    let mut v = vec![0.0; size];
    v[index as usize - 1] = 1.0;
    Ok(v)
}

/// Per-sensor raw range used to bring hardware readings into `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProfile {
    min: Pose,
    max: Pose,
}

impl CalibrationProfile {
    pub fn new(min: Pose, max: Pose) -> Result<Self> {
        if let Some(i) =
            (0..SENSOR_COUNT).find(|&i| max[i].is_nan() || min[i].is_nan() || max[i] <= min[i])
        {
            return Err(Error::InvalidInput(format!(
                "sensor {}: max {} not above min {}",
                i + 1,
                max[i],
                min[i]
            )));
        }
        Ok(Self { min, max })
    }

    pub fn identity() -> Self {
        Self {
            min: [0.0; SENSOR_COUNT],
            max: [1.0; SENSOR_COUNT],
        }
    }

    pub fn normalize(&self, raw: &Pose) -> Pose {
        std::array::from_fn(|i| {
            ((raw[i] - self.min[i]) / (self.max[i] - self.min[i])).clamp(0.0, 1.0)
        })
    }
}

/// Ground-truth annotation of one frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Truth {
    Hold(u16),
    Transition { from: u16, to: u16 },
    Warmup,
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Truth::Hold(g) => write!(f, "G{g}"),
            Truth::Transition { from, to } => write!(f, "G{from}->G{to}"),
            Truth::Warmup => f.write_str("warmup"),
        }
    }
}

impl FromStr for Truth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let gesture = |p: &str| match p.parse::<GestureLabel>() {
            Ok(GestureLabel::Communicative(g)) => Ok(g),
            _ => Err(Error::parse("truth", format!("bad truth `{s}`"))),
        };
        if s == "warmup" {
            return Ok(Truth::Warmup);
        }
        match s.split_once("->") {
            Some((a, b)) => Ok(Truth::Transition {
                from: gesture(a)?,
                to: gesture(b)?,
            }),
            None => gesture(s).map(Truth::Hold),
        }
    }
}

impl Serialize for Truth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Truth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One line of a newline-delimited JSON stream file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub t: u64,
    pub sensors: Vec<f64>,
    pub button: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
}

impl StreamRecord {
    pub fn from_frame(frame: &SensorFrame, truth: Option<Truth>) -> Self {
        Self {
            t: frame.t,
            sensors: frame.sensors.to_vec(),
            button: frame.button,
            truth,
        }
    }

    pub fn to_frame(&self) -> Result<SensorFrame> {
        SensorFrame::from_slice(self.t, &self.sensors, self.button)
    }
}

pub fn write_stream<W: Write>(mut out: W, records: &[StreamRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a stream file, skipping blank lines. Errors carry the line number.
pub fn read_stream<R: BufRead>(input: R) -> Result<Vec<StreamRecord>> {
    let mut records = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StreamRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(format!("line {}", n + 1), e.to_string()))?;
        record.to_frame()?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn frame(t: u64, v: f64) -> SensorFrame {
        SensorFrame::new(t, [v; SENSOR_COUNT], false).unwrap()
    }

    fn history(frames: impl IntoIterator<Item = SensorFrame>, lag: usize) -> FrameHistory {
        let mut h = FrameHistory::for_lag(lag);
        for f in frames {
            h.push(f).unwrap();
        }
        h
    }

    #[test]
    fn normalize_edges_and_clamp() {
        let min = [10.0; SENSOR_COUNT];
        let max = [250.0; SENSOR_COUNT];
        let c = CalibrationProfile::new(min, max).unwrap();
        assert_eq!(c.normalize(&min), [0.0; SENSOR_COUNT]);
        assert_eq!(c.normalize(&max), [1.0; SENSOR_COUNT]);
        assert_eq!(c.normalize(&[400.0; SENSOR_COUNT]), [1.0; SENSOR_COUNT]);
        assert!(CalibrationProfile::new(max, min).is_err());
    }

    #[test]
    fn lag_one_consecutive_pair() {
        let h = history([frame(0, 0.1), frame(1, 0.2)], 1);
        let f = extract_feature(&h, 1, 1).unwrap();
        assert_eq!(f.values().len(), FEATURE_WIDTH);
        assert!(f.values()[..22].iter().all(|&v| v == 0.1));
        assert!(f.values()[22..].iter().all(|&v| v == 0.2));
    }

    #[test]
    fn lag_three_spans_45_ms() {
        let h = history((0..=10).map(|t| frame(t, t as f64 / 10.0)), 3);
        let f = extract_feature(&h, 10, 3).unwrap();
        assert_eq!(f.values()[0], 0.7);
        assert_eq!(f.values()[22], 1.0);
        assert_eq!(frame(10, 0.0).time_ms() - frame(7, 0.0).time_ms(), 45);
    }

    #[test]
    fn lag_substitutes_earliest_frame_at_stream_start() {
        let h = history([frame(0, 0.0), frame(1, 0.5)], 3);
        let f = extract_feature(&h, 1, 3).unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[22], 0.5);
    }

    #[test]
    fn missing_frame_and_order_errors() {
        let mut h = history([frame(0, 0.0), frame(1, 0.5)], 1);
        assert!(matches!(
            extract_feature(&h, 5, 1),
            Err(Error::MissingFrame(5))
        ));
        assert!(matches!(
            h.push(frame(1, 0.1)),
            Err(Error::StreamOrder { .. })
        ));
    }

    #[test]
    fn command_table() {
        assert_eq!(map_command(2, true), Some(RobotCommand::XPlus));
        assert_eq!(map_command(2, false), Some(RobotCommand::RxPlus));
        assert_eq!(map_command(1, false), Some(RobotCommand::Stop));
        assert_eq!(map_command(1, true), Some(RobotCommand::Stop));
        assert_eq!(map_command(6, false), Some(RobotCommand::RzPlus));
        assert_eq!(map_command(8, true), map_command(8, false));
        assert_eq!(map_command(9, true), Some(RobotCommand::ReturnToSaved));
        assert_eq!(map_command(9, false), Some(RobotCommand::Loop));
        assert_eq!(map_command(10, true), Some(RobotCommand::VacuumOn));
        assert_eq!(map_command(10, false), Some(RobotCommand::VacuumOff));
        assert_eq!(map_command(11, true), None);
        assert_eq!(map_command(0, true), None);
    }

    #[test]
    fn command_table_is_total_with_two_shared_rows() {
        let mut distinct = HashSet::new();
        for g in 1..=COMMAND_LIBRARY {
            for b in [true, false] {
                distinct.insert(map_command(g, b).expect("total on G1..G10"));
            }
        }
        // 20 pairs, G1 and G8 ignore the button
        assert_eq!(distinct.len(), 18);
        assert_eq!(distinct.len(), RobotCommand::ALL.len());
    }

    #[test]
    fn one_hot_vectors() {
        assert_eq!(one_hot(1, 10).unwrap()[0], 1.0);
        assert_eq!(one_hot(10, 10).unwrap()[9], 1.0);
        let v = one_hot(30, 30).unwrap();
        assert_eq!(v.len(), 30);
        assert_eq!(v[29], 1.0);
        assert_eq!(v.iter().sum::<f64>(), 1.0);
        assert!(one_hot(11, 10).is_err());
        assert!(one_hot(0, 10).is_err());
    }

    #[test]
    fn labels_and_truth_parse() {
        assert_eq!(
            "G12".parse::<GestureLabel>().unwrap(),
            GestureLabel::Communicative(12)
        );
        assert_eq!(
            "N3".parse::<GestureLabel>().unwrap(),
            GestureLabel::NonGesture(3)
        );
        assert!("G0".parse::<GestureLabel>().is_err());
        assert!("X".parse::<GestureLabel>().is_err());
        for s in ["G5", "G5->G6", "warmup"] {
            assert_eq!(s.parse::<Truth>().unwrap().to_string(), s);
        }
        for c in RobotCommand::ALL {
            assert_eq!(c.name().parse::<RobotCommand>().unwrap(), c);
            assert_eq!(
                serde_json::to_string(&c).unwrap(),
                format!("\"{}\"", c.name())
            );
        }
    }

    #[test]
    fn frames_reject_out_of_range() {
        assert!(SensorFrame::new(0, [1.2; SENSOR_COUNT], false).is_err());
        assert!(SensorFrame::from_slice(0, &[0.5; 21], false).is_err());
    }

    #[test]
    fn stream_file_round_trip() {
        let records = vec![
            StreamRecord::from_frame(&frame(0, 0.25), Some(Truth::Hold(3))),
            StreamRecord::from_frame(&frame(1, 0.5), Some(Truth::Transition { from: 3, to: 4 })),
            StreamRecord::from_frame(&frame(2, 0.75), None),
        ];
        let mut buf = Vec::new();
        write_stream(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().contains("\"truth\":\"G3\""));
        assert_eq!(read_stream(&buf[..]).unwrap(), records);
        assert!(read_stream(&b"{\"t\":0}\n"[..]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn identity_calibration_is_idempotent(v in proptest::array::uniform22(0.0f64..=1.0)) {
                let c = CalibrationProfile::identity();
                let once = c.normalize(&v);
                prop_assert_eq!(once, v);
                prop_assert_eq!(c.normalize(&once), once);
            }

            #[test]
            fn features_always_have_44_entries(n in 1usize..6, len in 1u64..20) {
                let h = history((0..len).map(|t| frame(t, 0.5)), n);
                let f = extract_feature(&h, len - 1, n).unwrap();
                prop_assert_eq!(f.values().len(), FEATURE_WIDTH);
            }

            #[test]
            fn one_hot_sums_to_one(size in 1usize..40, idx in 1u16..40) {
                prop_assume!(idx as usize <= size);
                prop_assert_eq!(one_hot(idx, size).unwrap().iter().sum::<f64>(), 1.0);
            }
        }
    }
}
