//! BSX session files: a JSON document, normally gzip-framed.
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "session": {"domain": [s, e], "video": {...} | null, "cursor": t | null},
//!   "tracks": [{"id": {"class_label", "author", "version"}, "kind", "meta",
//!               "events": [[start, end, score?, label?, attrs?], ...]}]
//! }
//! ```
//!
//! Event rows drop trailing absent fields and use `null` for absent fields
//! before a present one. Unknown keys at document, session, track and meta
//! level survive a read/write cycle.

use std::fmt;
use std::io::{Read, Write};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::de::{self, MapAccess, SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::StoreError;
use crate::model::{
    Attrs, Event, EventPayload, Extra, Interval, Session, SessionExtra, Tick, Track, TrackId,
    TrackKind, TrackMeta, VideoBinding,
};

pub const FORMAT_VERSION: u64 = 1;
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Serialize)]
struct DocOut<'a> {
    format_version: u64,
    session: SessionOut<'a>,
    tracks: Vec<TrackOut<'a>>,
    #[serde(flatten)]
    extra: &'a Extra,
}

#[derive(Serialize)]
struct SessionOut<'a> {
    domain: &'a Interval,
    video: &'a Option<VideoBinding>,
    cursor: &'a Option<Tick>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    promoted: &'a [TrackId],
    #[serde(flatten)]
    extra: &'a Extra,
}

#[derive(Serialize)]
struct TrackOut<'a> {
    id: &'a TrackId,
    kind: TrackKind,
    meta: &'a TrackMeta,
    events: Vec<EventRow<&'a Event>>,
    #[serde(flatten)]
    extra: &'a Extra,
}

struct EventRow<E>(E);

impl Serialize for EventRow<&Event> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let e = self.0;
        let p = &e.payload;
        let len = if !p.attrs.is_empty() {
            5
        } else if p.label.is_some() {
            4
        } else if p.score.is_some() {
            3
        } else {
            2
        };
        let mut seq = serializer.serialize_seq(Some(len))?;
        seq.serialize_element(&e.start().0)?;
        seq.serialize_element(&e.end().0)?;
        if len > 2 {
            seq.serialize_element(&p.score)?;
        }
        if len > 3 {
            seq.serialize_element(&p.label)?;
        }
        if len > 4 {
            seq.serialize_element(&p.attrs)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for EventRow<Event> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RowVisitor;
        impl<'de> Visitor<'de> for RowVisitor {
            type Value = EventRow<Event>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an event row [start, end, score?, label?, attrs?]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let start: i64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let end: i64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                let interval = Interval::new(start, end).map_err(de::Error::custom)?;
                let score: Option<f64> = seq.next_element()?.flatten();
                let label: Option<String> = seq.next_element()?.flatten();
                let attrs: Attrs = seq
                    .next_element::<Option<Attrs>>()?
                    .flatten()
                    .unwrap_or_default();
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(6, &self));
                }
                Ok(EventRow(Event::new(
                    interval,
                    EventPayload {
                        score,
                        label,
                        attrs,
                    },
                )))
            }
        }
        deserializer.deserialize_seq(RowVisitor)
    }
}

#[derive(Deserialize)]
struct SessionIn {
    domain: Interval,
    #[serde(default)]
    video: Option<VideoBinding>,
    #[serde(default)]
    cursor: Option<Tick>,
    #[serde(default)]
    promoted: Vec<TrackId>,
    #[serde(flatten)]
    extra: Extra,
}

struct TrackIn {
    id: TrackId,
    kind: TrackKind,
    meta: TrackMeta,
    events: Vec<EventRow<Event>>,
    extra: Extra,
}

struct DocIn {
    format_version: u64,
    session: SessionIn,
    tracks: Vec<TrackIn>,
    extra: Extra,
}

// Hand-written map visitors keep large event arrays out of serde's
// flatten buffering.
impl<'de> Deserialize<'de> for TrackIn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TrackIn;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a track object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<TrackIn, A::Error> {
                let (mut id, mut kind, mut meta, mut events) = (None, None, None, None);
                let mut extra = Extra::new();
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "id" => id = Some(map.next_value()?),
                        "kind" => kind = Some(map.next_value()?),
                        "meta" => meta = Some(map.next_value()?),
                        "events" => events = Some(map.next_value()?),
                        _ => {
                            extra.insert(key, map.next_value()?);
                        }
                    }
                }
                Ok(TrackIn {
                    id: id.ok_or_else(|| de::Error::missing_field("id"))?,
                    kind: kind.ok_or_else(|| de::Error::missing_field("kind"))?,
                    meta: meta.ok_or_else(|| de::Error::missing_field("meta"))?,
                    events: events.ok_or_else(|| de::Error::missing_field("events"))?,
                    extra,
                })
            }
        }
        deserializer.deserialize_map(V)
    }
}

impl<'de> Deserialize<'de> for DocIn {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = DocIn;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a BSX document object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<DocIn, A::Error> {
                let (mut version, mut session, mut tracks) = (None, None, None);
                let mut extra = Extra::new();
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "format_version" => version = Some(map.next_value()?),
                        "session" => session = Some(map.next_value()?),
                        "tracks" => tracks = Some(map.next_value()?),
                        _ => {
                            extra.insert(key, map.next_value()?);
                        }
                    }
                }
                Ok(DocIn {
                    format_version: version
                        .ok_or_else(|| de::Error::missing_field("format_version"))?,
                    session: session.ok_or_else(|| de::Error::missing_field("session"))?,
                    tracks: tracks.ok_or_else(|| de::Error::missing_field("tracks"))?,
                    extra,
                })
            }
        }
        deserializer.deserialize_map(V)
    }
}

fn to_doc(session: &Session) -> DocOut<'_> {
    DocOut {
        format_version: FORMAT_VERSION,
        session: SessionOut {
            domain: &session.domain,
            video: &session.video,
            cursor: &session.cursor,
            promoted: &session.promoted,
            extra: &session.extra.session,
        },
        tracks: session
            .tracks()
            .iter()
            .map(|t| TrackOut {
                id: t.id(),
                kind: t.kind(),
                meta: &t.meta,
                events: t.events().iter().map(EventRow).collect(),
                extra: &t.extra,
            })
            .collect(),
        extra: &session.extra.document,
    }
}

/// Uncompressed JSON form.
pub fn bsx_write_plain(session: &Session) -> Vec<u8> {
    serde_json::to_vec(&to_doc(session)).expect("BSX documents always serialize")
}

/// Gzip-framed JSON form.
pub fn bsx_write(session: &Session) -> Vec<u8> {
    let json = bsx_write_plain(session);
    let mut enc = GzEncoder::new(Vec::with_capacity(json.len() / 3), Compression::fast());
    enc.write_all(&json).expect("writing to memory cannot fail");
    enc.finish().expect("writing to memory cannot fail")
}

/// Reads a gzip-framed or plain BSX document. Fails closed: either the
/// whole session is returned or an error.
pub fn bsx_read(bytes: &[u8]) -> Result<Session, StoreError> {
    let json: std::borrow::Cow<[u8]> = if bytes.starts_with(&GZIP_MAGIC) {
        let mut out = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| StoreError::Decode(format!("gzip: {e}")))?;
        out.into()
    } else if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        bytes.into()
    } else {
        return Err(StoreError::BadMagic);
    };

    let doc: DocIn = match serde_json::from_slice(&json) {
        Ok(doc) => doc,
        Err(e) => {
            #[derive(Deserialize)]
            struct VersionOnly {
                format_version: u64,
            }
            if let Ok(v) = serde_json::from_slice::<VersionOnly>(&json) {
                if v.format_version != FORMAT_VERSION {
                    return Err(StoreError::SchemaVersionUnsupported(v.format_version));
                }
            }
            return Err(StoreError::Decode(e.to_string()));
        }
    };
    if doc.format_version != FORMAT_VERSION {
        return Err(StoreError::SchemaVersionUnsupported(doc.format_version));
    }

    let mut session = Session::new(doc.session.domain);
    session.cursor = doc.session.cursor;
    session.video = doc.session.video;
    session.promoted = doc.session.promoted;
    session.extra = SessionExtra {
        document: doc.extra,
        session: doc.session.extra,
    };
    for t in doc.tracks {
        let label = t.id.to_string();
        let events = t.events.into_iter().map(|r| r.0).collect();
        let mut track = Track::new(t.id, t.kind, events, t.meta)
            .map_err(|_| StoreError::InvariantViolation(label.clone()))?;
        track.extra = t.extra;
        session
            .add_track(track)
            .map_err(|_| StoreError::InvariantViolation(label))?;
    }
    if session.promoted.iter().any(|id| session.get(id).is_none()) {
        return Err(StoreError::InvariantViolation("session".into()));
    }
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AttrValue;

    fn sample() -> Session {
        let mut s = Session::new(Interval::new(0, 1000).unwrap());
        let walk = Track::with_defaults(
            TrackId::new("Walk", "Ann", "1.2").unwrap(),
            TrackKind::Classifier,
            vec![
                Event::scored(Interval::new(0, 10).unwrap(), 0.25)
                    .with_attr("angle", AttrValue::Number(61.5))
                    .with_attr("side", AttrValue::Text("left".into())),
                Event::scored(Interval::new(10, 30).unwrap(), 0.1 + 0.2),
            ],
        )
        .unwrap();
        let truth = Track::with_defaults(
            TrackId::new("Walk", "Rater", "1.0").unwrap(),
            TrackKind::Label,
            vec![Event::labeled(Interval::new(5, 25).unwrap(), "Walk")],
        )
        .unwrap();
        s.add_track(walk).unwrap();
        s.add_track(truth).unwrap();
        s.cursor = Some(Tick(12));
        s.video = Some(VideoBinding {
            uri: "file:///v.mp4".into(),
            offset: Tick(-5),
            duration: None,
        });
        s
    }

    #[test]
    fn empty_session_round_trips() {
        let s = Session::new(Interval::new(0, 1).unwrap());
        let plain = String::from_utf8(bsx_write_plain(&s)).unwrap();
        assert!(plain.contains("\"tracks\":[]"));
        assert_eq!(bsx_read(&bsx_write(&s)).unwrap(), s);
    }

    #[test]
    fn sample_round_trips_both_framings() {
        let s = sample();
        assert_eq!(bsx_read(&bsx_write(&s)).unwrap(), s);
        assert_eq!(bsx_read(&bsx_write_plain(&s)).unwrap(), s);
    }

    #[test]
    fn event_rows_are_compact() {
        let plain = String::from_utf8(bsx_write_plain(&sample())).unwrap();
        assert!(plain.contains("[10,30,0.30000000000000004]"), "{plain}");
        assert!(plain.contains("[5,25,null,\"Walk\"]"), "{plain}");
    }

    #[test]
    fn unknown_fields_survive() {
        let s = sample();
        let mut v: serde_json::Value = serde_json::from_slice(&bsx_write_plain(&s)).unwrap();
        v["generator"] = "other-tool".into();
        v["session"]["note"] = 3.into();
        v["tracks"][0]["origin"] = "lab".into();
        v["tracks"][0]["meta"]["height"] = 2.into();
        let read = bsx_read(&serde_json::to_vec(&v).unwrap()).unwrap();
        let again: serde_json::Value = serde_json::from_slice(&bsx_write_plain(&read)).unwrap();
        assert_eq!(again, v);
    }

    #[test]
    fn failure_modes() {
        assert_eq!(bsx_read(b"PK\x03\x04"), Err(StoreError::BadMagic));
        let gz = bsx_write(&sample());
        assert!(matches!(
            bsx_read(&gz[..gz.len() / 2]),
            Err(StoreError::Decode(_))
        ));
        let future = br#"{"format_version": 9, "session": {}, "tracks": "?"}"#;
        assert_eq!(
            bsx_read(future),
            Err(StoreError::SchemaVersionUnsupported(9))
        );

        let mut v: serde_json::Value = serde_json::from_slice(&bsx_write_plain(&sample())).unwrap();
        v["tracks"][1]["events"] = serde_json::json!([[0, 10, null, "a"], [5, 12, null, "b"]]);
        assert_eq!(
            bsx_read(&serde_json::to_vec(&v).unwrap()),
            Err(StoreError::InvariantViolation("WalkRater1.0".into()))
        );
    }
}
