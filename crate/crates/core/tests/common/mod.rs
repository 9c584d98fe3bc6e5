//! Brute-force reference implementations and random generators shared by
//! the integration tests.
//!
//! The oracle discretizes a domain `[0, n)` at one-tick resolution into a
//! bitmap and evaluates every set operation tick by tick (64 ticks per word).
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use trackx_core::model::{RenderMode, DEFAULT_THRESHOLD};
use trackx_core::{
    AttrValue, Event, Interval, IntervalSet, Session, Tick, Track, TrackId, TrackKind, VideoBinding,
};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bits {
    n: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        b.fill(0, n);
        b
    }

    pub fn fill(&mut self, lo: usize, hi: usize) {
        let mut t = lo;
        while t < hi {
            let (w, bit) = (t / 64, t % 64);
            let span = (64 - bit).min(hi - t);
            let mask = if span == 64 {
                !0
            } else {
                ((1u64 << span) - 1) << bit
            };
            self.words[w] |= mask;
            t += span;
        }
    }

    pub fn get(&self, t: usize) -> bool {
        self.words[t / 64] >> (t % 64) & 1 == 1
    }

    pub fn from_intervals<'a>(n: usize, ivs: impl IntoIterator<Item = &'a Interval>) -> Self {
        let mut b = Self::empty(n);
        for iv in ivs {
            b.fill(iv.start().0 as usize, iv.end().0 as usize);
        }
        b
    }

    pub fn from_set(n: usize, s: &IntervalSet) -> Self {
        Self::from_intervals(n, s.iter())
    }

    fn zip(&self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Bits {
        assert_eq!(self.n, other.n);
        let mut out = Bits {
            n: self.n,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        };
        out.trim();
        out
    }

    fn trim(&mut self) {
        let tail = self.n % 64;
        if tail != 0 {
            *self.words.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
    }

    pub fn and(&self, o: &Bits) -> Bits {
        self.zip(o, |a, b| a & b)
    }
    pub fn or(&self, o: &Bits) -> Bits {
        self.zip(o, |a, b| a | b)
    }
    pub fn xor(&self, o: &Bits) -> Bits {
        self.zip(o, |a, b| a ^ b)
    }
    pub fn and_not(&self, o: &Bits) -> Bits {
        self.zip(o, |a, b| a & !b)
    }
    pub fn not(&self) -> Bits {
        let mut out = Bits {
            n: self.n,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    pub fn count(&self) -> i64 {
        self.words.iter().map(|w| w.count_ones() as i64).sum()
    }

    pub fn any_in(&self, lo: usize, hi: usize) -> bool {
        let mut probe = Bits::empty(self.n);
        probe.fill(lo, hi);
        self.and(&probe).count() > 0
    }

    /// First tick `>= from` whose bit equals `value`, or `n`.
    fn next(&self, from: usize, value: bool) -> usize {
        let mut w = from / 64;
        if w >= self.words.len() {
            return self.n;
        }
        let mut word = if value { self.words[w] } else { !self.words[w] };
        word &= !0u64 << (from % 64);
        loop {
            if word != 0 {
                return (w * 64 + word.trailing_zeros() as usize).min(self.n);
            }
            w += 1;
            if w >= self.words.len() {
                return self.n;
            }
            word = if value { self.words[w] } else { !self.words[w] };
        }
    }

    /// Maximal runs of set ticks.
    pub fn runs(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        let mut t = 0;
        while t < self.n {
            let lo = self.next(t, true);
            if lo >= self.n {
                break;
            }
            let hi = self.next(lo, false);
            out.push((lo as i64, hi as i64));
            t = hi;
        }
        out
    }

    pub fn to_set(&self) -> IntervalSet {
        IntervalSet::from_sorted_iter(self.runs().into_iter().map(|(a, b)| iv(a, b)))
    }
}

pub fn iv(a: i64, b: i64) -> Interval {
    Interval::new(a, b).unwrap()
}

pub fn set(pairs: &[(i64, i64)]) -> IntervalSet {
    IntervalSet::from_intervals(pairs.iter().map(|&(a, b)| iv(a, b)))
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Up to `max_events` sorted, non-overlapping intervals inside `[0, horizon)`.
/// About a quarter of neighbours touch, to exercise merging.
pub fn random_intervals(rng: &mut StdRng, max_events: usize, horizon: i64) -> Vec<Interval> {
    let n = rng.random_range(0..=max_events);
    let mut cuts: Vec<i64> = (0..2 * n).map(|_| rng.random_range(0..=horizon)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut out: Vec<Interval> = Vec::new();
    let mut i = 0;
    while i + 1 < cuts.len() {
        let (mut a, b) = (cuts[i], cuts[i + 1]);
        if let Some(last) = out.last() {
            if rng.random_bool(0.25) && last.end().0 < b {
                a = last.end().0;
            }
        }
        if a < b {
            out.push(iv(a, b));
        }
        i += 2;
    }
    out
}

fn score(rng: &mut StdRng) -> f64 {
    // a coarse grid so equal scores (ties in ROC sweeps) happen
    if rng.random_bool(0.5) {
        rng.random_range(0..=20) as f64 / 20.0
    } else {
        rng.random::<f64>()
    }
}

pub fn id(class: &str, author: &str, version: &str) -> TrackId {
    TrackId::new(class, author, version).unwrap()
}

pub fn random_track(
    rng: &mut StdRng,
    tid: TrackId,
    kind: TrackKind,
    max_events: usize,
    horizon: i64,
) -> Track {
    let events = random_intervals(rng, max_events, horizon)
        .into_iter()
        .map(|i| match kind {
            TrackKind::Classifier => Event::scored(i, score(rng)),
            _ => Event::labeled(i, tid.class_label.clone()),
        })
        .collect();
    let mut t = Track::with_defaults(tid, kind, events).unwrap();
    if kind == TrackKind::Classifier {
        t.set_threshold(if rng.random_bool(0.3) {
            DEFAULT_THRESHOLD
        } else {
            score(rng)
        })
        .unwrap();
    }
    t
}

pub fn classifier(id: TrackId, events: &[(i64, i64, f64)]) -> Track {
    Track::with_defaults(
        id,
        TrackKind::Classifier,
        events
            .iter()
            .map(|&(a, b, s)| Event::scored(iv(a, b), s))
            .collect(),
    )
    .unwrap()
}

pub fn labels(id: TrackId, events: &[(i64, i64)]) -> Track {
    let name = id.class_label.clone();
    Track::with_defaults(
        id,
        TrackKind::Label,
        events
            .iter()
            .map(|&(a, b)| Event::labeled(iv(a, b), name.clone()))
            .collect(),
    )
    .unwrap()
}

/// Per-tick oracle of thresholding: ticks of events scoring at least `theta`.
pub fn threshold_oracle(n: usize, t: &Track, theta: f64) -> Bits {
    Bits::from_intervals(
        n,
        t.events()
            .iter()
            .filter(|e| e.score().unwrap_or(0.0) >= theta)
            .map(|e| &e.interval),
    )
}

/// Tick set a track contributes to the algebra (auto-thresholded).
pub fn track_bits(n: usize, t: &Track) -> Bits {
    match t.threshold() {
        Some(theta) => threshold_oracle(n, t, theta),
        None => Bits::from_intervals(n, t.events().iter().map(|e| &e.interval)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfusion {
    pub tp: i64,
    pub fp: i64,
    pub fn_: i64,
    pub tn: i64,
}

pub fn confusion_oracle(p: &Bits, g: &Bits) -> OracleConfusion {
    OracleConfusion {
        tp: p.and(g).count(),
        fp: p.and_not(g).count(),
        fn_: g.and_not(p).count(),
        tn: p.not().and_not(g).count(),
    }
}

/// A session of `tracks` tracks of mixed kinds with up to `max_events`
/// events each, attributes, a video binding, a cursor and one promoted track.
pub fn random_session(rng: &mut StdRng, tracks: usize, max_events: usize) -> Session {
    let horizon = 1_000_000_000_i64;
    let mut s = Session::new(iv(-1_000, horizon));
    for k in 0..tracks {
        let kind = match k % 5 {
            0 | 1 => TrackKind::Classifier,
            2 => TrackKind::Label,
            3 => TrackKind::Protocol,
            _ => TrackKind::Diff,
        };
        let tid = id(
            &format!("Class{k}"),
            ["Ann", "Bob", "Erhan"][k % 3],
            &format!("1.{}", k / 3),
        );
        let n = rng.random_range(0..=max_events);
        let ivs = random_intervals_n(rng, n, horizon);
        let events = ivs
            .into_iter()
            .enumerate()
            .map(|(j, i)| {
                let e = match kind {
                    TrackKind::Classifier => Event::scored(i, rng.random::<f64>()),
                    TrackKind::Protocol => Event::labeled(i, format!("task-{j}")),
                    TrackKind::Diff => {
                        Event::labeled(i, if j % 2 == 0 { "added" } else { "removed" })
                    }
                    _ => Event::labeled(i, "Walk"),
                };
                if rng.random_bool(0.3) {
                    e.with_attr("angle", AttrValue::Number(rng.random_range(-180.0..180.0)))
                        .with_attr("side", AttrValue::Text("left \"quoted\" ü".into()))
                } else {
                    e
                }
            })
            .collect();
        let mut t = Track::with_defaults(tid, kind, events).unwrap();
        t.meta.visible = rng.random_bool(0.8);
        if kind == TrackKind::Classifier {
            t.set_threshold(rng.random::<f64>()).unwrap();
            t.meta.render_mode = RenderMode::Area;
        }
        s.add_track(t).unwrap();
    }
    s.cursor = Some(Tick(rng.random_range(0..horizon)));
    s.video = Some(VideoBinding {
        uri: "file:///data/session.mp4".into(),
        offset: Tick(rng.random_range(-10..10)),
        duration: rng.random_bool(0.5).then_some(horizon),
    });
    if let Some(t) = s.tracks().first() {
        s.promoted = vec![t.id().clone()];
    }
    s
}

/// Exactly `n` sorted, disjoint intervals (some touching) in `[0, horizon)`.
pub fn random_intervals_n(rng: &mut StdRng, n: usize, horizon: i64) -> Vec<Interval> {
    let step = (horizon / (n as i64 + 1)).max(2);
    (0..n as i64)
        .map(|i| {
            let lo = i * step + rng.random_range(0..step / 2);
            let hi = if rng.random_bool(0.2) {
                (i + 1) * step
            } else {
                lo + rng.random_range(1..=step / 2)
            };
            iv(lo, hi)
        })
        .collect()
}
