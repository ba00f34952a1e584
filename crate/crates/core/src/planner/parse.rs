//! Reading planner responses.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::actions::StructuredAction;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanResponse {
    pub explanation: Option<String>,
    pub thoughts: String,
    pub action_list: Vec<StructuredAction>,
}

/// Why a response was rejected, worded for the planner.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{description}")]
pub struct ParseError {
    pub description: String,
}

impl ParseError {
    fn new(d: impl Into<String>) -> Self {
        ParseError {
            description: d.into(),
        }
    }
}

/// Candidate JSON bodies: fenced blocks first, then the outermost braces.
fn candidates(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(close) = after.find("```") else {
            break;
        };
        let body = after[..close].trim();
        // drop a language tag such as ```json
        let body = match body.find(['{', '[']) {
            Some(i) if body[..i].chars().all(|c| c.is_ascii_alphanumeric() || c.is_whitespace()) => &body[i..],
            _ => body,
        };
        out.push(body);
        rest = &after[close + 3..];
    }
    if let (Some(a), Some(b)) = (text.find('{'), text.rfind('}')) {
        if a < b {
            out.push(&text[a..=b]);
        }
    }
    out
}

fn text_field(obj: &serde_json::Map<String, Value>, keys: &[&str]) -> Result<Option<String>, ParseError> {
    for k in keys {
        match obj.get(*k) {
            None => continue,
            Some(Value::Null) => return Ok(None),
            Some(Value::String(s)) => return Ok(Some(s.clone())),
            Some(_) => return Err(ParseError::new(format!("`{k}` must be a string or null"))),
        }
    }
    Ok(None)
}

/// Parses `{explanation, thoughts, action_list}`, optionally inside a
/// ``` fence, and validates every action.
pub fn parse_response(text: &str) -> Result<PlanResponse, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::new("the response is empty"));
    }
    let mut value = None;
    let mut last_err = None;
    for c in candidates(text) {
        match serde_json::from_str::<Value>(c) {
            Ok(v) if v.is_object() => {
                value = Some(v);
                break;
            }
            Ok(_) => last_err = Some("the response must be a JSON object".to_string()),
            Err(e) => last_err = Some(format!("the response is not valid JSON ({e})")),
        }
    }
    let Some(Value::Object(obj)) = value else {
        return Err(ParseError::new(
            last_err.unwrap_or_else(|| "no JSON object was found in the response".into()),
        ));
    };
    let explanation = text_field(&obj, &["explanation", "Explanation"])?;
    let thoughts = text_field(&obj, &["thoughts", "thought", "Thoughts", "Thought"])?.unwrap_or_default();
    let list = ["action_list", "actions", "Action List"]
        .iter()
        .find_map(|k| obj.get(*k))
        .ok_or_else(|| ParseError::new("the response has no `action_list`"))?;
    let Value::Array(items) = list else {
        return Err(ParseError::new("`action_list` must be a list"));
    };
    let mut action_list = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let a = StructuredAction::from_value(item)
            .map_err(|e| ParseError::new(format!("action {} in `action_list` is invalid: {e}", i + 1)))?;
        action_list.push(a);
    }
    Ok(PlanResponse {
        explanation,
        thoughts,
        action_list,
    })
}

/// Response text in the format the instruction asks for.
pub fn render_response(r: &PlanResponse) -> String {
    let v = serde_json::json!({
        "explanation": r.explanation,
        "thoughts": r.thoughts,
        "action_list": r.action_list.iter().map(StructuredAction::to_value).collect::<Vec<_>>(),
    });
    format!("```\n{}\n```", serde_json::to_string_pretty(&v).expect("json value"))
}

/// Extracts the list from a summarizer response.
pub fn parse_action_list(text: &str) -> Result<Vec<StructuredAction>, ParseError> {
    let (Some(a), Some(b)) = (text.find('['), text.rfind(']')) else {
        return Err(ParseError::new("no JSON list was found"));
    };
    if a > b {
        return Err(ParseError::new("no JSON list was found"));
    }
    let v: Value = serde_json::from_str(&text[a..=b])
        .map_err(|e| ParseError::new(format!("the list is not valid JSON ({e})")))?;
    let Value::Array(items) = v else {
        return Err(ParseError::new("expected a list"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, it)| StructuredAction::from_value(it).map_err(|e| ParseError::new(format!("action {}: {e}", i + 1))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = r#"```
{"explanation": null, "thoughts": "get wood",
 "action_list": [
   {"name": "explore", "args": {"object": "log", "strategy": "bfs"}, "expectation": "see a tree"},
   {"name": "approach", "args": {"object": "log"}, "expectation": "next to it"},
   {"name": "mine", "args": {"object": "log", "tool": null}, "expectation": "1 log"}
 ]}
```"#;

    #[test]
    fn fenced_three_actions() {
        let r = parse_response(OK).unwrap();
        assert_eq!(r.action_list.len(), 3);
        assert_eq!(r.explanation, None);
        assert_eq!(r.action_list[2].name(), "mine");
    }

    #[test]
    fn empty_list_is_valid() {
        let r = parse_response(r#"{"explanation": "x", "thoughts": "", "action_list": []}"#).unwrap();
        assert!(r.action_list.is_empty());
    }

    #[test]
    fn truncated_is_an_error() {
        let e = parse_response(&OK[..OK.len() / 2]).unwrap_err();
        assert!(!e.description.is_empty());
    }

    #[test]
    fn unknown_action_is_named() {
        let e = parse_response(r#"{"thoughts":"","action_list":[{"name":"fly","args":{}}]}"#).unwrap_err();
        assert!(e.description.contains("fly"), "{e}");
    }

    #[test]
    fn round_trip() {
        let r = parse_response(OK).unwrap();
        assert_eq!(parse_response(&render_response(&r)).unwrap(), r);
    }
}
