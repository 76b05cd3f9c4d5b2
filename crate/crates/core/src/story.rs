//! Stories: characters, scenes and their time intervals.
//!
//! A story file is JSON:
//!
//! ```json
//! {
//!   "characters": ["a", "b"],
//!   "scenes": [
//!     {"id": "s1", "members": ["a", "b"], "begin": 0, "end": [3, 2]}
//!   ]
//! }
//! ```
//!
//! Times are exact rationals, written either as an integer or as a
//! `[numerator, denominator]` pair. Intervals are closed.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result, ValidationReport};

pub type Time = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub id: String,
    pub members: Vec<String>,
    #[serde(with = "time_serde")]
    pub begin: Time,
    #[serde(with = "time_serde")]
    pub end: Time,
}

impl Scene {
    pub fn new(id: &str, members: &[&str], begin: i64, end: i64) -> Self {
        Scene {
            id: id.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            begin: Time::from_integer(begin),
            end: Time::from_integer(end),
        }
    }

    pub fn contains_time(&self, t: Time) -> bool {
        self.begin <= t && t <= self.end
    }

    /// Closed intervals: touching endpoints count as an intersection.
    pub fn intersects(&self, other: &Scene) -> bool {
        self.begin <= other.end && other.begin <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Story {
    pub characters: Vec<String>,
    pub scenes: Vec<Scene>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lifespan {
    pub begin: Time,
    pub end: Time,
}

impl Lifespan {
    pub fn contains(&self, t: Time) -> bool {
        self.begin <= t && t <= self.end
    }
}

/// How scene times are interpreted at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoryMode {
    /// Scenes carry `begin`/`end` times.
    #[default]
    Timed,
    /// Scenes are an ordered sequence; times (if any) are ignored and scene
    /// `k` occupies the single time point `k`.
    Book,
}

mod time_serde {
    use super::Time;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    pub(super) enum RawTime {
        Int(i64),
        Frac([i64; 2]),
    }

    impl RawTime {
        pub(super) fn into_time<E: serde::de::Error>(self) -> Result<Time, E> {
            match self {
                RawTime::Int(v) => Ok(Time::from_integer(v)),
                RawTime::Frac([_, 0]) => Err(E::custom("time denominator must be nonzero")),
                RawTime::Frac([n, d]) => Ok(Time::new(n, d)),
            }
        }
    }

    pub fn serialize<S: Serializer>(t: &Time, s: S) -> Result<S::Ok, S::Error> {
        if *t.denom() == 1 {
            RawTime::Int(*t.numer()).serialize(s)
        } else {
            RawTime::Frac([*t.numer(), *t.denom()]).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Time, D::Error> {
        RawTime::deserialize(d)
            .map_err(|_| D::Error::custom("time must be an integer or a [numerator, denominator] pair"))?
            .into_time()
    }

    pub(super) mod opt {
        use super::*;

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Time>, D::Error> {
            Option::<RawTime>::deserialize(d)?
                .map(|t| t.into_time())
                .transpose()
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BookScene {
    id: String,
    members: Vec<String>,
    #[serde(default, with = "time_serde::opt")]
    #[allow(dead_code)]
    begin: Option<Time>,
    #[serde(default, with = "time_serde::opt")]
    #[allow(dead_code)]
    end: Option<Time>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BookStory {
    characters: Vec<String>,
    scenes: Vec<BookScene>,
}

fn syntax(err: serde_json::Error) -> Error {
    Error::Syntax {
        location: Location {
            line: err.line(),
            column: err.column(),
        },
        message: err.to_string(),
    }
}

/// Parses a timed story file.
pub fn parse_story(text: &str) -> Result<Story> {
    parse_story_with(text, StoryMode::Timed)
}

pub fn parse_story_with(text: &str, mode: StoryMode) -> Result<Story> {
    let story = match mode {
        StoryMode::Timed => serde_json::from_str::<Story>(text).map_err(syntax)?,
        StoryMode::Book => {
            let raw: BookStory = serde_json::from_str(text).map_err(syntax)?;
            Story {
                characters: raw.characters,
                scenes: raw
                    .scenes
                    .into_iter()
                    .enumerate()
                    .map(|(k, s)| Scene {
                        id: s.id,
                        members: s.members,
                        begin: Time::from_integer(k as i64),
                        end: Time::from_integer(k as i64),
                    })
                    .collect(),
            }
        }
    };
    let mut seen = HashSet::new();
    for c in &story.characters {
        if !seen.insert(c.as_str()) {
            return Err(Error::DuplicateCharacter(c.clone()));
        }
    }
    for s in &story.scenes {
        if let Some(m) = s.members.iter().find(|m| !seen.contains(m.as_str())) {
            return Err(Error::UnknownMember {
                scene: s.id.clone(),
                member: m.clone(),
            });
        }
    }
    Ok(story)
}

pub fn to_json(story: &Story) -> String {
    serde_json::to_string_pretty(story).expect("story serializes")
}

/// Checks every story invariant and lists all violations.
pub fn validate_story(story: &Story) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut declared = HashSet::new();
    for c in &story.characters {
        if !declared.insert(c.as_str()) {
            report.push("duplicate_character", format!("character {c} declared twice"));
        }
    }

    let mut scene_ids = HashSet::new();
    let mut used = HashSet::new();
    for s in &story.scenes {
        if !scene_ids.insert(s.id.as_str()) {
            report.push("duplicate_scene_id", format!("scene id {} used twice", s.id));
        }
        if s.members.is_empty() {
            report.push("empty_scene", format!("scene {} has no members", s.id));
        }
        if s.begin > s.end {
            report.push(
                "inverted_interval",
                format!("scene {} begins after it ends", s.id),
            );
        }
        let mut members = HashSet::new();
        for m in &s.members {
            if !declared.contains(m.as_str()) {
                report.push("unknown_member", format!("scene {} has unknown member {m}", s.id));
            }
            if !members.insert(m.as_str()) {
                report.push(
                    "duplicate_member",
                    format!("scene {} lists member {m} twice", s.id),
                );
            }
            used.insert(m.as_str());
        }
    }

    // Sweep over scenes sorted by begin time; only pairs whose intervals
    // intersect are compared.
    let mut order: Vec<usize> = (0..story.scenes.len()).collect();
    order.sort_by_key(|&k| (story.scenes[k].begin, k));
    for (pos, &a) in order.iter().enumerate() {
        let sa = &story.scenes[a];
        let members: HashSet<&str> = sa.members.iter().map(String::as_str).collect();
        for &b in &order[pos + 1..] {
            let sb = &story.scenes[b];
            if sb.begin > sa.end {
                break;
            }
            if !sa.intersects(sb) {
                continue;
            }
            let (first, second) = if a < b { (sa, sb) } else { (sb, sa) };
            for m in &sb.members {
                if members.contains(m.as_str()) {
                    report.push(
                        "shared_member_overlap",
                        format!(
                            "overlapping scenes {} and {} share member {m}",
                            first.id, second.id
                        ),
                    );
                }
            }
        }
    }

    for c in &story.characters {
        if !used.contains(c.as_str()) {
            report.push(
                "character_in_no_scene",
                format!("character {c} appears in no scene"),
            );
        }
    }
    report
}

pub fn lifespan(story: &Story, character: &str) -> Result<Lifespan> {
    let mut span: Option<Lifespan> = None;
    for s in story.scenes.iter().filter(|s| s.members.iter().any(|m| m == character)) {
        span = Some(match span {
            None => Lifespan {
                begin: s.begin,
                end: s.end,
            },
            Some(l) => Lifespan {
                begin: l.begin.min(s.begin),
                end: l.end.max(s.end),
            },
        });
    }
    span.ok_or_else(|| Error::CharacterInNoScene(character.to_string()))
}

/// Lifespans of all characters that appear in at least one scene.
pub fn lifespans(story: &Story) -> BTreeMap<String, Lifespan> {
    let mut out: HashMap<&str, Lifespan> = HashMap::new();
    for s in &story.scenes {
        for m in &s.members {
            out.entry(m.as_str())
                .and_modify(|l| {
                    l.begin = l.begin.min(s.begin);
                    l.end = l.end.max(s.end);
                })
                .or_insert(Lifespan {
                    begin: s.begin,
                    end: s.end,
                });
        }
    }
    out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Four characters, four scenes; c3 and c4 enter late, c2 leaves early,
    /// s2 and s3 overlap in time with disjoint members.
    pub(crate) const FIG1: &str = r#"{
        "characters": ["c1", "c2", "c3", "c4"],
        "scenes": [
            {"id": "s1", "members": ["c1", "c2"], "begin": 0, "end": 2},
            {"id": "s2", "members": ["c1", "c3"], "begin": 3, "end": 6},
            {"id": "s3", "members": ["c4"], "begin": 4, "end": 5},
            {"id": "s4", "members": ["c1", "c3", "c4"], "begin": 7, "end": 9}
        ]
    }"#;

    #[test]
    fn parses_fig1_story() {
        let story = parse_story(FIG1).unwrap();
        assert_eq!(story.scenes.len(), 4);
        assert!(story.scenes[1].intersects(&story.scenes[2]));
        assert!(validate_story(&story).is_empty());
        let c2 = lifespan(&story, "c2").unwrap();
        let last = story.scenes.iter().map(|s| s.end).max().unwrap();
        assert!(c2.end < last);
        assert!(lifespan(&story, "c3").unwrap().begin > Time::from_integer(0));
    }

    #[test]
    fn minimal_story() {
        let story = parse_story(
            r#"{"characters": ["c1"], "scenes": [{"id": "s", "members": ["c1"], "begin": 0, "end": 1}]}"#,
        )
        .unwrap();
        assert_eq!(story.scenes.len(), 1);
    }

    #[test]
    fn rational_times_are_exact() {
        let story = parse_story(
            r#"{"characters": ["a"], "scenes": [{"id": "s", "members": ["a"], "begin": [1, 3], "end": [2, 6]}]}"#,
        )
        .unwrap();
        assert_eq!(story.scenes[0].begin, story.scenes[0].end);
        assert!(to_json(&story).contains("[\n        1,\n        3\n      ]"));
    }

    #[test]
    fn unknown_member_rejected() {
        let err = parse_story(
            r#"{"characters": ["c1"], "scenes": [{"id": "s", "members": ["cX"], "begin": 0, "end": 1}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "unknown_member");
        assert!(err.to_string().contains("unknown member"));
    }

    #[test]
    fn duplicate_character_rejected() {
        let err = parse_story(r#"{"characters": ["a", "a"], "scenes": []}"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateCharacter(c) if c == "a"));
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_story("{\n  \"characters\": [\"a\",\n  ]\n}").unwrap_err();
        let loc = err.location().unwrap();
        assert_eq!(loc.line, 3);
        assert_eq!(err.code(), "syntax");
        let err = parse_story(
            r#"{"characters": ["a"], "scenes": [{"id": "s", "members": ["a"], "begin": [1, 0], "end": 1}]}"#,
        )
        .unwrap_err();
        assert_eq!(err.code(), "syntax");
    }

    fn two(a: &[&str], b: &[&str], ia: (i64, i64), ib: (i64, i64)) -> Story {
        Story {
            characters: vec!["a".into(), "b".into()],
            scenes: vec![Scene::new("s1", a, ia.0, ia.1), Scene::new("s2", b, ib.0, ib.1)],
        }
    }

    #[test]
    fn overlap_rules() {
        assert!(validate_story(&two(&["a"], &["b"], (0, 2), (1, 3))).is_empty());
        let r = validate_story(&two(&["a"], &["a", "b"], (0, 2), (1, 3)));
        assert_eq!(r.violations.len(), 1);
        assert_eq!(
            r.violations[0].message,
            "overlapping scenes s1 and s2 share member a"
        );
        // closed intervals: touching at t = 1 is an intersection
        let r = validate_story(&two(&["a"], &["a", "b"], (0, 1), (1, 2)));
        assert!(r.has("shared_member_overlap"));
        assert!(validate_story(&two(&["a"], &["a", "b"], (0, 1), (2, 3))).is_empty());
    }

    #[test]
    fn every_violation_kind_detected() {
        let base = two(&["a"], &["b"], (0, 1), (2, 3));
        let mut s = base.clone();
        s.scenes[0].members.clear();
        s.scenes[1].members.push("a".into());
        assert!(validate_story(&s).has("empty_scene"));
        let mut s = base.clone();
        s.scenes[0].begin = Time::from_integer(5);
        assert!(validate_story(&s).has("inverted_interval"));
        let mut s = base.clone();
        s.characters.push("z".into());
        assert!(validate_story(&s).has("character_in_no_scene"));
        let mut s = base.clone();
        s.scenes[1].members.push("q".into());
        assert!(validate_story(&s).has("unknown_member"));
        let mut s = base.clone();
        s.scenes[1].id = "s1".into();
        assert!(validate_story(&s).has("duplicate_scene_id"));
        let mut s = base.clone();
        s.scenes[1].members.push("b".into());
        assert!(validate_story(&s).has("duplicate_member"));
        let mut s = base;
        s.characters.push("a".into());
        assert!(validate_story(&s).has("duplicate_character"));
    }

    #[test]
    fn degenerate_scene_allowed() {
        let s = two(&["a"], &["b"], (1, 1), (1, 1));
        assert!(validate_story(&s).is_empty());
    }

    #[test]
    fn lifespan_is_min_max() {
        let s = Story {
            characters: vec!["c".into()],
            scenes: vec![Scene::new("x", &["c"], 0, 1), Scene::new("y", &["c"], 3, 4)],
        };
        let l = lifespan(&s, "c").unwrap();
        assert_eq!((l.begin, l.end), (Time::from_integer(0), Time::from_integer(4)));
        let s = Story {
            characters: vec!["c".into(), "d".into()],
            scenes: vec![Scene::new("x", &["c"], 2, 5)],
        };
        let l = lifespan(&s, "c").unwrap();
        assert_eq!((l.begin, l.end), (Time::from_integer(2), Time::from_integer(5)));
        assert!(matches!(lifespan(&s, "d"), Err(Error::CharacterInNoScene(_))));
        assert_eq!(lifespans(&s).len(), 1);
    }

    #[test]
    fn book_mode_ignores_times() {
        let text = r#"{"characters": ["a", "b"], "scenes": [
            {"id": "1", "members": ["a", "b"]},
            {"id": "2", "members": ["a"], "begin": 99, "end": 0}
        ]}"#;
        assert!(parse_story(text).is_err());
        let s = parse_story_with(text, StoryMode::Book).unwrap();
        assert_eq!(s.scenes[1].begin, Time::from_integer(1));
        assert!(validate_story(&s).is_empty());
    }
}
