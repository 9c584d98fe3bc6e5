//! Duration-based classifier metrics computed through the track algebra.
//!
//! Every ratio is formed from exact integer tick counts, so a metric and its
//! container-track rendering always agree bit for bit. A ratio whose
//! denominator is empty is reported as [`MetricValue::Undefined`].

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::interval_set::IntervalSet;
use crate::model::{AttrValue, Event, Interval, Track, TrackId, TrackKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("ground truth is empty or covers the whole domain; the ROC curve is undefined")]
    DegenerateTruth,
    #[error("track {0} is not a classifier track")]
    NotAClassifierTrack(String),
}

/// A ratio, or an explicit marker for `0/0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricValue {
    Defined(f64),
    Undefined,
}

impl MetricValue {
    pub fn ratio(num: i64, den: i64) -> Self {
        if den == 0 {
            MetricValue::Undefined
        } else {
            MetricValue::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            MetricValue::Defined(v) => Some(v),
            MetricValue::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricValue::Defined(v) => write!(f, "{v:.6}"),
            MetricValue::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            MetricValue::Defined(v) => serializer.serialize_f64(*v),
            MetricValue::Undefined => serializer.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(MetricValue::Defined(v)),
            Raw::Text(s) if s == "undefined" => Ok(MetricValue::Undefined),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("bad metric value {s:?}"))),
        }
    }
}

/// Intersection over union of covered durations; 1 when both are empty.
pub fn jaccard(a: &IntervalSet, b: &IntervalSet) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let inter = a.intersect(b).duration();
            let union = a.duration() + b.duration() - inter;
            inter as f64 / union as f64
        }
    }
}

/// A metric drawn as empty boxes (denominator) partially filled
/// (numerator); blank regions locate the mispredictions that lower it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerTrack {
    pub metric_name: String,
    pub denominator: IntervalSet,
    pub numerator: IntervalSet,
    pub value: MetricValue,
}

impl ContainerTrack {
    pub fn new(metric_name: &str, denominator: IntervalSet, numerator: IntervalSet) -> Self {
        debug_assert!(numerator.is_subset(&denominator));
        let value = MetricValue::ratio(numerator.duration(), denominator.duration());
        Self {
            metric_name: metric_name.to_owned(),
            denominator,
            numerator,
            value,
        }
    }

    /// Events labelled `filled` / `blank` partitioning the denominator.
    pub fn to_track(&self, id: TrackId) -> Track {
        let blank = self.denominator.subtract(&self.numerator);
        let mut events: Vec<Event> = self
            .numerator
            .iter()
            .map(|iv| Event::labeled(*iv, "filled"))
            .chain(blank.iter().map(|iv| Event::labeled(*iv, "blank")))
            .map(|e| e.with_attr("metric", AttrValue::Text(self.metric_name.clone())))
            .collect();
        events.sort_by_key(|e| e.start());
        Track::with_defaults(id, TrackKind::Container, events)
            .expect("container events are disjoint")
    }
}

/// Per-tick confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: i64,
    pub fp: i64,
    #[serde(rename = "fn")]
    pub fn_: i64,
    pub tn: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub accuracy: MetricValue,
    pub precision: MetricValue,
    pub recall: MetricValue,
    pub f1: MetricValue,
    pub jaccard: MetricValue,
    pub confusion: Confusion,
    /// Accuracy, precision, recall and Jaccard as container tracks.
    pub containers: Vec<ContainerTrack>,
}

impl Report {
    pub fn container(&self, name: &str) -> Option<&ContainerTrack> {
        self.containers.iter().find(|c| c.metric_name == name)
    }
}

/// Precision, recall, F1 and accuracy of `predicted` against `truth`.
///
/// Both sets are clipped to `domain`, which is also the universe for
/// accuracy's true negatives.
pub fn report(predicted: &IntervalSet, truth: &IntervalSet, domain: &Interval) -> Report {
    let p = predicted.clip(domain);
    let g = truth.clip(domain);
    let both = p.intersect(&g);
    let either_one = p.symmetric_difference(&g);
    let tp = both.duration();
    let fp = p.duration() - tp;
    let fn_ = g.duration() - tp;
    let tn = domain.len() - tp - fp - fn_;

    let precision = ContainerTrack::new("precision", p.clone(), both.clone());
    let recall = ContainerTrack::new("recall", g.clone(), both.clone());
    let accuracy = ContainerTrack::new(
        "accuracy",
        IntervalSet::single(*domain),
        either_one.complement_within(domain),
    );
    let jaccard = ContainerTrack::new("jaccard", p.union(&g), both);

    let f1 = match (precision.value, recall.value) {
        (MetricValue::Defined(_), MetricValue::Defined(_)) if tp == 0 => MetricValue::Defined(0.0),
        (MetricValue::Defined(_), MetricValue::Defined(_)) => {
            MetricValue::ratio(2 * tp, 2 * tp + fp + fn_)
        }
        _ => MetricValue::Undefined,
    };

    Report {
        accuracy: accuracy.value,
        precision: precision.value,
        recall: recall.value,
        f1,
        jaccard: jaccard.value,
        confusion: Confusion { tp, fp, fn_, tn },
        containers: vec![accuracy, precision, recall, jaccard],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold producing this point; `+inf` for the empty
    /// prediction and `-inf` for the all-positive corner.
    #[serde(with = "signed_inf")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps the classifier threshold over its distinct scores, from high to
/// low, measuring time-weighted true and false positive rates.
pub fn roc(
    classifier: &Track,
    truth: &IntervalSet,
    domain: &Interval,
) -> Result<RocCurve, MetricsError> {
    if classifier.kind() != TrackKind::Classifier {
        return Err(MetricsError::NotAClassifierTrack(
            classifier.id().to_string(),
        ));
    }
    let g = truth.clip(domain);
    let pos = g.duration();
    let neg = domain.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::DegenerateTruth);
    }

    let mut scored: Vec<(f64, i64, i64)> = classifier
        .events()
        .iter()
        .filter_map(|e| {
            let iv = e.interval.intersection(domain)?;
            let tp = g.overlap_with(&iv);
            Some((e.score().unwrap_or(0.0), tp, iv.len() - tp))
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));

    // cumulative (fp, tp) in ticks, one entry per distinct threshold
    let mut steps: Vec<(i64, i64, f64)> = vec![(0, 0, f64::INFINITY)];
    let (mut fp, mut tp) = (0i64, 0i64);
    let mut i = 0;
    while i < scored.len() {
        let theta = scored[i].0;
        while i < scored.len() && scored[i].0 == theta {
            tp += scored[i].1;
            fp += scored[i].2;
            i += 1;
        }
        steps.push((fp, tp, theta));
    }
    if (fp, tp) != (neg, pos) {
        steps.push((neg, pos, f64::NEG_INFINITY));
    }

    let twice_area: i128 = steps
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as i128 * (w[1].1 + w[0].1) as i128)
        .sum();
    let auc = twice_area as f64 / (2 * neg as i128 * pos as i128) as f64;

    let points = steps
        .into_iter()
        .map(|(fp, tp, threshold)| RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
            threshold,
        })
        .collect();
    Ok(RocCurve { points, auc })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventScore {
    pub detected: usize,
    pub total: usize,
    pub score: f64,
}

/// Fraction of ground-truth events sharing at least one tick with the
/// prediction.
pub fn event_score(predicted: &IntervalSet, truth: &[Event]) -> EventScore {
    let detected = truth
        .iter()
        .filter(|e| predicted.intersects(&e.interval))
        .count();
    let total = truth.len();
    let score = if total == 0 {
        1.0
    } else {
        detected as f64 / total as f64
    };
    EventScore {
        detected,
        total,
        score,
    }
}

mod signed_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("+inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(s) if s == "+inf" => Ok(f64::INFINITY),
            Raw::Text(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("bad threshold {s:?}"))),
        }
    }
}
