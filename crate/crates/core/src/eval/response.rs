use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::annotator::{AnnotationRecord, Waypoint};
use crate::geometry::Vec2;
use crate::kinematics::{enumerate_meta_actions, Behavior, MetaAction};
use crate::risk::RiskClass;
use crate::scenario::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Missing,
    Malformed,
}

/// Stage 2 as written by a responder. Categorical fields stay as text and
/// are compared leniently at scoring time.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCritical {
    pub agent_id: Option<String>,
    pub category: String,
    pub relative_position: Vec2,
    pub distance: f64,
    pub predicted_behavior: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsePlan {
    pub action: MetaAction,
    pub waypoints: Vec<Waypoint>,
}

/// A parsed five-stage response. A stage's value is present only when its
/// status is `Ok`; stage 2 may be `Ok` with no object.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseRecord {
    pub raw_text: String,
    pub status: [StageStatus; 5],
    pub stage1: Option<Environment>,
    pub stage2: Option<ResponseCritical>,
    pub stage3: Option<RiskClass>,
    pub stage4: BTreeMap<MetaAction, RiskClass>,
    pub stage5: Option<ResponsePlan>,
}

impl ResponseRecord {
    fn empty(raw_text: &str, status: StageStatus) -> Self {
        Self {
            raw_text: raw_text.to_string(),
            status: [status; 5],
            stage1: None,
            stage2: None,
            stage3: None,
            stage4: BTreeMap::new(),
            stage5: None,
        }
    }

    pub fn all_ok(&self) -> bool {
        self.status.iter().all(|s| *s == StageStatus::Ok)
    }
}

const STAGE_KEYS: [[&str; 3]; 5] = [
    ["stage1_scene", "stage1", "scene_description"],
    ["stage2_critical", "stage2", "critical_object"],
    ["stage3_risk", "stage3", "current_risk"],
    ["stage4_counterfactuals", "stage4", "counterfactual_risk"],
    ["stage5_plan", "stage5", "action_planning"],
];

/// Byte spans of balanced `{...}` blocks, skipping braces inside strings.
fn object_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
        let mut end = None;
        for (j, &b) in bytes.iter().enumerate().skip(i) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(j + 1);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(e) => {
                spans.push((i, e));
                i = e;
            }
            None => i += 1,
        }
    }
    spans
}

fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let body_start = after.find('\n').map_or(after.len(), |n| n + 1);
        let body = &after[body_start..];
        let Some(close) = body.find("```") else { break };
        out.push(&body[..close]);
        rest = &body[close + 3..];
    }
    out
}

/// Locate the structured object: the whole text, then fenced blocks, then
/// any balanced brace block. Objects that name a stage are preferred.
fn extract_object(text: &str) -> Option<Map<String, Value>> {
    let mut candidates: Vec<&str> = vec![text.trim()];
    candidates.extend(fenced_blocks(text));
    candidates.extend(object_spans(text).into_iter().map(|(a, b)| &text[a..b]));
    let objects: Vec<Map<String, Value>> = candidates
        .into_iter()
        .filter_map(|c| match serde_json::from_str::<Value>(c.trim()) {
            Ok(Value::Object(m)) => Some(m),
            _ => None,
        })
        .collect();
    let names_stage = |m: &Map<String, Value>| {
        STAGE_KEYS.iter().flatten().any(|k| m.contains_key(*k))
    };
    objects
        .iter()
        .find(|m| names_stage(m))
        .or(objects.first())
        .cloned()
}

fn lookup(root: &Map<String, Value>, stage: usize) -> Option<&Value> {
    STAGE_KEYS[stage].iter().find_map(|k| root.get(*k))
}

/// Numbers, or strings holding a plain decimal number (`.` separator only).
fn number(v: &Value) -> Option<f64> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => {
            let s = s.trim();
            if s.is_empty() || s.contains(',') {
                return None;
            }
            s.parse::<f64>().ok()?
        }
        _ => return None,
    };
    x.is_finite().then_some(x)
}

fn text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn point(v: &Value) -> Option<Vec2> {
    match v {
        Value::Array(a) if a.len() == 2 => Some(Vec2::new(number(&a[0])?, number(&a[1])?)),
        Value::Object(m) => Some(Vec2::new(number(m.get("x")?)?, number(m.get("y")?)?)),
        _ => None,
    }
}

fn parse_stage1(v: &Value) -> Option<Environment> {
    let m = v.as_object()?;
    Some(Environment {
        weather: text(m.get("weather")?)?,
        lighting: text(m.get("lighting")?)?,
        road_layout: text(m.get("road_layout")?)?,
    })
}

fn parse_stage2(v: &Value) -> Option<Option<ResponseCritical>> {
    if v.is_null() {
        return Some(None);
    }
    let m = v.as_object()?;
    Some(Some(ResponseCritical {
        agent_id: m.get("agent_id").and_then(text),
        category: text(m.get("category")?)?,
        relative_position: point(m.get("relative_position")?)?,
        distance: number(m.get("distance")?)?,
        predicted_behavior: text(m.get("predicted_behavior")?)?,
    }))
}

fn parse_stage3(v: &Value) -> Option<RiskClass> {
    match v {
        Value::String(s) => RiskClass::parse(s),
        Value::Object(m) => m.get("label").or(m.get("risk")).and_then(Value::as_str).and_then(RiskClass::parse),
        _ => None,
    }
}

fn parse_stage4(v: &Value) -> Option<BTreeMap<MetaAction, RiskClass>> {
    let mut out = BTreeMap::new();
    match v {
        Value::Object(m) => {
            for (k, label) in m {
                out.insert(MetaAction::parse(k)?, RiskClass::parse(label.as_str()?)?);
            }
        }
        Value::Array(items) => {
            for item in items {
                let m = item.as_object()?;
                let action = MetaAction::parse(m.get("action")?.as_str()?)?;
                out.insert(action, RiskClass::parse(m.get("label")?.as_str()?)?);
            }
        }
        _ => return None,
    }
    let complete = enumerate_meta_actions().iter().all(|a| out.contains_key(a));
    complete.then_some(out)
}

fn parse_waypoint(v: &Value) -> Option<Waypoint> {
    match v {
        Value::Array(a) if a.len() == 3 => Some(Waypoint {
            offset: number(&a[0])?,
            position: Vec2::new(number(&a[1])?, number(&a[2])?),
        }),
        Value::Object(m) => Some(Waypoint {
            offset: number(m.get("offset").or(m.get("t"))?)?,
            position: Vec2::new(number(m.get("x")?)?, number(m.get("y")?)?),
        }),
        _ => None,
    }
}

fn parse_stage5(v: &Value) -> Option<ResponsePlan> {
    let m = v.as_object()?;
    let action = match (m.get("short"), m.get("long")) {
        (Some(s), Some(l)) => MetaAction::new(Behavior::parse(s.as_str()?)?, Behavior::parse(l.as_str()?)?),
        _ => MetaAction::parse(m.get("meta_action")?.as_str()?)?,
    };
    let waypoints = m
        .get("waypoints")?
        .as_array()?
        .iter()
        .map(parse_waypoint)
        .collect::<Option<Vec<_>>>()?;
    let increasing = waypoints.windows(2).all(|w| w[1].offset > w[0].offset);
    (increasing && !waypoints.is_empty()).then_some(ResponsePlan { action, waypoints })
}

fn status_of<T>(raw: Option<&Value>, parsed: &Option<T>) -> StageStatus {
    match (raw, parsed) {
        (None, _) => StageStatus::Missing,
        (Some(_), Some(_)) => StageStatus::Ok,
        (Some(_), None) => StageStatus::Malformed,
    }
}

/// Parse free-form model output. Never fails: problems are reported per
/// stage through [`ResponseRecord::status`].
pub fn parse_response(text: &str) -> ResponseRecord {
    let Some(root) = extract_object(text) else {
        let status = if text.trim().is_empty() {
            StageStatus::Missing
        } else {
            StageStatus::Malformed
        };
        return ResponseRecord::empty(text, status);
    };
    let raw: Vec<Option<&Value>> = (0..5).map(|i| lookup(&root, i)).collect();
    let s1 = raw[0].and_then(parse_stage1);
    let s2 = raw[1].and_then(parse_stage2);
    let s3 = raw[2].and_then(parse_stage3);
    let s4 = raw[3].and_then(parse_stage4);
    let s5 = raw[4].and_then(parse_stage5);
    ResponseRecord {
        raw_text: text.to_string(),
        status: [
            status_of(raw[0], &s1),
            status_of(raw[1], &s2),
            status_of(raw[2], &s3),
            status_of(raw[3], &s4),
            status_of(raw[4], &s5),
        ],
        stage1: s1,
        stage2: s2.flatten(),
        stage3: s3,
        stage4: s4.unwrap_or_default(),
        stage5: s5,
    }
}

#[derive(Serialize)]
struct Payload<'a> {
    stage1_scene: &'a Environment,
    stage2_critical: &'a Option<crate::annotator::CriticalStage>,
    stage3_risk: RiskClass,
    stage4_counterfactuals: &'a BTreeMap<MetaAction, RiskClass>,
    stage5_plan: &'a crate::annotator::PlanStage,
}

/// Render a record's five stages as a model would answer: a short lead-in
/// followed by a fenced JSON block with six-decimal floats.
pub fn render_response(record: &AnnotationRecord) -> String {
    let payload = Payload {
        stage1_scene: &record.stage1_scene,
        stage2_critical: &record.stage2_critical,
        stage3_risk: record.stage3_risk,
        stage4_counterfactuals: &record.stage4_counterfactuals,
        stage5_plan: &record.stage5_plan,
    };
    let body = crate::json::to_fixed_json(&payload).expect("payload serialization is infallible");
    format!(
        "Five-stage analysis for {}:\n```json\n{}```\n",
        record.sample_id,
        String::from_utf8(body).expect("JSON is UTF-8")
    )
}
