use serde::Serialize;

use super::parse::{parse, Arg, Command};
use super::resolve::{resolve, Resolved};
use super::{order::smart_order, CommandError, Op, Slot, TrackType};
use crate::algebra::{
    self, display_blocks, match_subtract, materialize, variation_in, AlgebraError,
};
use crate::interval_set::IntervalSet;
use crate::metrics::{self, EventScore, Report, RocCurve};
use crate::model::{
    AttrValue, Event, EventPayload, Interval, ModelMeta, Session, Track, TrackId, TrackKind,
    TrackMeta, TICKS_PER_SECOND,
};
use crate::store::{playlist, Playlist};
use crate::version::Version;

#[derive(Debug, Clone)]
pub struct ExecContext {
    /// Author of generated tracks.
    pub user: String,
    /// Half-width of the smart-ordering window, in ticks.
    pub order_window: i64,
}

impl Default for ExecContext {
    fn default() -> Self {
        Self {
            user: "user".into(),
            order_window: 2 * TICKS_PER_SECOND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricResult {
    Jaccard { value: f64 },
    Roc { curve: RocCurve },
    Report { report: Report },
    Score { truth: String, score: EventScore },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackInfo {
    pub id: String,
    pub kind: TrackKind,
    pub display_name: String,
    pub visible: bool,
    pub events: usize,
    pub duration_seconds: f64,
    pub span: Option<Interval>,
    pub threshold: Option<f64>,
    /// Attribute keys present on any event.
    pub attrs: Vec<String>,
    pub model: Option<ModelMeta>,
    /// Ids of every version of this model in the session, oldest first.
    pub versions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Effect {
    NewTrack {
        id: String,
        kind: TrackKind,
        events: usize,
    },
    Metric {
        result: MetricResult,
    },
    Visibility {
        shown: Vec<String>,
        hidden: Vec<String>,
        order: Vec<String>,
    },
    Playlist {
        playlist: Playlist,
    },
    Reorder {
        order: Vec<String>,
        promoted: Vec<String>,
    },
    Info {
        info: TrackInfo,
    },
    MetaUpdated {
        id: String,
        meta: TrackMeta,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub op: &'static str,
    /// Resolved track operands, as canonical ids.
    pub operands: Vec<String>,
    pub effect: Effect,
}

impl Outcome {
    /// Id of the generated track, if the command made one.
    pub fn new_track(&self) -> Option<&str> {
        match &self.effect {
            Effect::NewTrack { id, .. } => Some(id),
            _ => None,
        }
    }
}

/// Parses and executes one command line.
pub fn run(session: &mut Session, text: &str, ctx: &ExecContext) -> Result<Outcome, CommandError> {
    execute(session, &parse(text)?, ctx)
}

fn order_ids(session: &Session) -> Vec<String> {
    session
        .tracks()
        .iter()
        .map(|t| t.id().to_string())
        .collect()
}

fn track<'a>(session: &'a Session, id: &TrackId) -> &'a Track {
    session.get(id).expect("resolved ids exist")
}

/// Id for a generated track: `<op>(<operand ids>)`, authored by the user,
/// version 1.0 or the next free minor version.
fn generated_id(session: &Session, op: Op, operands: &[&TrackId], user: &str) -> TrackId {
    let joined: Vec<String> = operands.iter().map(|i| i.to_string()).collect();
    let class_label = format!("{}({})", op.name(), joined.join(","));
    (0u64..)
        .map(|minor| TrackId {
            class_label: class_label.clone(),
            author: user.to_owned(),
            version: Version::parse(&format!("1.{minor}")).expect("valid dotted version"),
        })
        .find(|id| session.get(id).is_none())
        .expect("some minor version is free")
}

fn add_generated(session: &mut Session, track: Track) -> Result<Effect, CommandError> {
    let effect = Effect::NewTrack {
        id: track.id().to_string(),
        kind: track.kind(),
        events: track.events().len(),
    };
    session.add_track(track)?;
    Ok(effect)
}

/// Label track made of whole events of `a` untouched by `b`.
fn match_track(id: TrackId, a: &Track, b: &IntervalSet) -> Track {
    let src = AttrValue::Text(a.id().to_string());
    let events = match_subtract(&display_blocks(a), b)
        .into_iter()
        .map(|e| {
            let label = e.label().unwrap_or(&a.id().class_label).to_owned();
            let mut attrs = e.payload.attrs;
            attrs.insert("src".into(), src.clone());
            Event::new(
                e.interval,
                EventPayload {
                    score: None,
                    label: Some(label),
                    attrs,
                },
            )
        })
        .collect();
    Track::with_defaults(id, TrackKind::Label, events).expect("subset of canonical events")
}

fn filtered_track(id: TrackId, src: &Track, keep: impl Fn(&Event) -> bool) -> Track {
    let events: Vec<Event> = src.events().iter().filter(|e| keep(e)).cloned().collect();
    let mut meta = TrackMeta::for_track(&id, src.kind());
    meta.threshold = src.threshold();
    Track::new(id, src.kind(), events, meta).expect("subset of a valid track")
}

/// Summary of one track as shown by `info`.
pub fn track_info(session: &Session, t: &Track) -> TrackInfo {
    let mut attrs: Vec<String> = t
        .events()
        .iter()
        .flat_map(|e| e.payload.attrs.keys().cloned())
        .collect();
    attrs.sort();
    attrs.dedup();
    let mut versions: Vec<&TrackId> = session
        .tracks()
        .iter()
        .map(Track::id)
        .filter(|i| i.same_lineage(t.id()))
        .collect();
    versions.sort_by(|a, b| a.version.cmp(&b.version));
    TrackInfo {
        id: t.id().to_string(),
        kind: t.kind(),
        display_name: t.meta.display_name.clone(),
        visible: t.meta.visible,
        events: t.events().len(),
        duration_seconds: t.duration() as f64 / TICKS_PER_SECOND as f64,
        span: t.span(),
        threshold: t.threshold(),
        attrs,
        model: t.meta.model.clone(),
        versions: versions.iter().map(|i| i.to_string()).collect(),
    }
}

/// Ground truth for `score T`: the one label track sharing T's class label.
fn ground_truth_for<'a>(session: &'a Session, t: &Track) -> Result<&'a Track, CommandError> {
    let candidates: Vec<&Track> = session
        .tracks()
        .iter()
        .filter(|g| {
            g.kind() == TrackKind::Label
                && g.id() != t.id()
                && g.id().class_label.eq_ignore_ascii_case(&t.id().class_label)
        })
        .collect();
    match candidates[..] {
        [] => Err(CommandError::NoGroundTruth(t.id().to_string())),
        [g] => Ok(g),
        _ => Err(CommandError::AmbiguousRef {
            raw: t.id().class_label.clone(),
            candidates: candidates.iter().map(|g| g.id().to_string()).collect(),
        }),
    }
}

pub fn execute(
    session: &mut Session,
    cmd: &Command,
    ctx: &ExecContext,
) -> Result<Outcome, CommandError> {
    let op = cmd.op;

    // resolve every track-like argument up front
    let mut refs: Vec<Resolved> = Vec::new();
    for (arg, slot) in cmd.args.iter().zip(op.slots()) {
        let want = match slot {
            Slot::Track(t) | Slot::OptionalTrack(t) => *t,
            Slot::Tracks => TrackType::Any,
            _ => continue,
        };
        match arg {
            Arg::Track(raw) | Arg::Tracks(raw) => refs.push(resolve(session, raw, op, want)?),
            _ => unreachable!("parser fills track slots with track args"),
        }
    }
    let operands: Vec<String> = refs
        .iter()
        .flat_map(|r| r.ids.iter().map(|i| i.to_string()))
        .collect();
    let ids: Vec<TrackId> = refs.iter().map(|r| r.id().clone()).collect();
    let number = cmd.args.iter().find_map(|a| match a {
        Arg::Number(v) => Some(*v),
        _ => None,
    });
    let domain = session.domain;

    let effect = match op {
        Op::Negate | Op::Union | Op::Intersection | Op::Errors | Op::Subtract | Op::Transform => {
            let sources: Vec<&Track> = ids.iter().map(|i| track(session, i)).collect();
            let sets: Vec<IntervalSet> = sources.iter().map(|t| t.interval_set()).collect();
            let set = match op {
                Op::Negate => algebra::negate(&sets[0], &domain)?,
                Op::Union => algebra::union(&sets[0], &sets[1]),
                Op::Intersection => algebra::intersect(&sets[0], &sets[1]),
                Op::Errors => algebra::errors(&sets[0], &sets[1]),
                Op::Subtract => algebra::subtract(&sets[0], &sets[1]),
                _ => {
                    let c = sources[0];
                    let theta = c.threshold().unwrap_or(crate::model::DEFAULT_THRESHOLD);
                    algebra::threshold_intervals(c, theta)?
                }
            };
            let id_refs: Vec<&TrackId> = ids.iter().collect();
            let id = generated_id(session, op, &id_refs, &ctx.user);
            let t = materialize(id, &set, &sources);
            add_generated(session, t)?
        }
        Op::Match => {
            let (a, b) = (track(session, &ids[0]), track(session, &ids[1]));
            let id = generated_id(session, op, &[a.id(), b.id()], &ctx.user);
            let t = match_track(id, a, &b.interval_set());
            add_generated(session, t)?
        }
        Op::Variation => {
            let new = track(session, &ids[0]);
            let old = ids.get(1).map(|i| track(session, i));
            let (diff, old_id) = variation_in(session, new, old)?;
            let id = generated_id(session, op, &[new.id(), &old_id], &ctx.user);
            let t = diff.to_track(id, new.id(), &old_id);
            add_generated(session, t)?
        }
        Op::Filter => {
            let Some(Arg::Filter(expr)) = cmd.args.get(1) else {
                unreachable!("parser fills the filter slot")
            };
            let src = track(session, &ids[0]);
            let id = generated_id(session, op, &[src.id()], &ctx.user);
            let t = filtered_track(id, src, |e| expr.matches(e));
            add_generated(session, t)?
        }
        Op::Threshold => {
            let v = number.expect("parser fills the number slot");
            if !(0.0..=1.0).contains(&v) {
                return Err(AlgebraError::InvalidThreshold(v).into());
            }
            let t = session.get_mut(&ids[0]).expect("resolved ids exist");
            t.set_threshold(v)?;
            Effect::MetaUpdated {
                id: t.id().to_string(),
                meta: t.meta.clone(),
            }
        }
        Op::Rename | Op::Color => {
            let t = session.get_mut(&ids[0]).expect("resolved ids exist");
            match cmd.args.get(1) {
                Some(Arg::Text(name)) => t.meta.display_name = name.clone(),
                Some(Arg::Color(c)) => t.meta.color = *c,
                _ => unreachable!("parser fills the second slot"),
            }
            Effect::MetaUpdated {
                id: t.id().to_string(),
                meta: t.meta.clone(),
            }
        }
        Op::Show | Op::Hide => {
            let visible = op == Op::Show;
            for id in &refs[0].ids {
                session
                    .get_mut(id)
                    .expect("resolved ids exist")
                    .meta
                    .visible = visible;
            }
            let (shown, hidden) = if visible {
                (operands.clone(), vec![])
            } else {
                (vec![], operands.clone())
            };
            Effect::Visibility {
                shown,
                hidden,
                order: order_ids(session),
            }
        }
        Op::Author => {
            let Some(Arg::Author(raw)) = cmd.args.first() else {
                unreachable!("parser fills the author slot")
            };
            let lower = raw.to_lowercase();
            let hit = |a: &str| match lower.strip_prefix('%') {
                Some(needle) => a.to_lowercase().contains(needle),
                None => a.eq_ignore_ascii_case(raw),
            };
            let n = session.tracks().len();
            let (mine, rest): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| hit(&session.tracks()[i].id().author));
            if mine.is_empty() {
                return Err(CommandError::NoMatch(raw.clone()));
            }
            let shown: Vec<String> = mine
                .iter()
                .map(|&i| session.tracks()[i].id().to_string())
                .collect();
            let order: Vec<usize> = mine.iter().chain(&rest).copied().collect();
            session.reorder(&order);
            for t in &shown {
                session.find_mut(t).expect("listed above").meta.visible = true;
            }
            return Ok(Outcome {
                op: op.name(),
                operands: shown.clone(),
                effect: Effect::Visibility {
                    shown,
                    hidden: vec![],
                    order: order_ids(session),
                },
            });
        }
        Op::Order => {
            let t = session.cursor.ok_or(CommandError::NoCursor)?;
            let promoted = smart_order(session, t, ctx.order_window);
            Effect::Reorder {
                order: order_ids(session),
                promoted: promoted.iter().map(|i| i.to_string()).collect(),
            }
        }
        Op::Play => Effect::Playlist {
            playlist: playlist(track(session, &ids[0]), session)?,
        },
        Op::Info => Effect::Info {
            info: track_info(session, track(session, &ids[0])),
        },
        Op::Jaccard => {
            let (a, b) = (track(session, &ids[0]), track(session, &ids[1]));
            Effect::Metric {
                result: MetricResult::Jaccard {
                    value: metrics::jaccard(&a.interval_set(), &b.interval_set()),
                },
            }
        }
        Op::Roc => {
            let (c, g) = (track(session, &ids[0]), track(session, &ids[1]));
            Effect::Metric {
                result: MetricResult::Roc {
                    curve: metrics::roc(c, &g.interval_set(), &domain)?,
                },
            }
        }
        Op::Report => {
            let (p, g) = (track(session, &ids[0]), track(session, &ids[1]));
            Effect::Metric {
                result: MetricResult::Report {
                    report: metrics::report(&p.interval_set(), &g.interval_set(), &domain),
                },
            }
        }
        Op::Score => {
            let p = track(session, &ids[0]);
            let g = match ids.get(1) {
                Some(i) => track(session, i),
                None => ground_truth_for(session, p)?,
            };
            Effect::Metric {
                result: MetricResult::Score {
                    truth: g.id().to_string(),
                    score: metrics::event_score(&p.interval_set(), g.events()),
                },
            }
        }
    };
    Ok(Outcome {
        op: op.name(),
        operands,
        effect,
    })
}
