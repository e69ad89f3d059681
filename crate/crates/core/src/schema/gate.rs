use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{ExtractionOutput, ExtractionSchema, FieldKind, FieldSpec, FieldType, FieldValue, ValueKind};
use crate::dates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    /// The whole response must be one JSON object.
    Strict,
    /// Strip Markdown fences, then take the first balanced `{...}`.
    #[default]
    Lenient,
}

impl ParseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseMode::Strict => "strict",
            ParseMode::Lenient => "lenient",
        }
    }
}

impl fmt::Display for ParseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ParseMode::Strict),
            "lenient" => Ok(ParseMode::Lenient),
            other => Err(format!("unknown parse mode `{other}` (expected strict|lenient)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Error)]
pub enum GateFailureReason {
    #[error("no JSON object found")]
    NoJson,
    #[error("unbalanced braces")]
    Unbalanced,
    #[error("not a JSON object")]
    NotAnObject,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model output rejected: {reason}")]
pub struct GateFailure {
    pub reason: GateFailureReason,
}

impl GateFailure {
    fn new(reason: GateFailureReason) -> Self {
        GateFailure { reason }
    }
}

/// Lenient extraction of the first JSON object in `raw`.
///
/// Trims the text; if it opens with a ```` ``` ```` fence (optionally
/// followed by a language word) everything through the first newline is
/// dropped, as is a closing ```` ``` ```` line. Then the first `{` is located
/// and the substring through its matching `}` is returned, skipping braces
/// inside string literals.
pub fn extract_json_object(raw: &str) -> Result<&str, GateFailureReason> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        text = match rest.find('\n') {
            Some(nl) => &rest[nl + 1..],
            None => "",
        };
        let trimmed_end = text.trim_end();
        if let Some(body) = trimmed_end.strip_suffix("```") {
            let last_line_start = body.rfind('\n').map_or(0, |i| i + 1);
            if body[last_line_start..].trim().is_empty() {
                text = &body[..last_line_start];
            }
        }
    }

    let start = text.find('{').ok_or(GateFailureReason::NoJson)?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, ch) in text[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(&text[start..start + offset + 1]);
                }
            }
            _ => {}
        }
    }
    Err(GateFailureReason::Unbalanced)
}

/// Turns a raw model response into an [`ExtractionOutput`]. Any failure
/// here must be scored as zero reward by callers.
pub fn parse_model_output(raw: &str, mode: ParseMode) -> Result<ExtractionOutput, GateFailure> {
    let candidate = match mode {
        ParseMode::Strict => raw,
        ParseMode::Lenient => extract_json_object(raw).map_err(GateFailure::new)?,
    };
    match serde_json::from_str::<Value>(candidate) {
        Ok(value) => ExtractionOutput::from_json(&value)
            .ok_or(GateFailure::new(GateFailureReason::NotAnObject)),
        Err(_) => {
            let reason = if mode == ParseMode::Strict {
                match extract_json_object(raw) {
                    Err(GateFailureReason::Unbalanced) => GateFailureReason::Unbalanced,
                    _ => GateFailureReason::NoJson,
                }
            } else {
                GateFailureReason::NoJson
            };
            Err(GateFailure::new(reason))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeMismatch {
    /// Dotted path of the offending value (`a`, `a.b`, `a[2]`).
    pub field: String,
    pub expected: FieldKind,
    pub observed: ValueKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub json_valid: bool,
    pub missing_required: Vec<String>,
    pub type_mismatches: Vec<TypeMismatch>,
}

impl ValidationReport {
    /// Report for output that never parsed; nothing else was checked.
    pub fn invalid_json() -> Self {
        ValidationReport {
            json_valid: false,
            missing_required: Vec::new(),
            type_mismatches: Vec::new(),
        }
    }

    pub fn passes_gate(&self) -> bool {
        self.json_valid && self.missing_required.is_empty()
    }

    pub fn is_conformant(&self) -> bool {
        self.passes_gate() && self.type_mismatches.is_empty()
    }
}

/// Checks a parsed output against the schema. Every property is required;
/// extra fields are ignored. Kind mismatches are reported but do not fail
/// the gate.
pub fn validate_output(out: &ExtractionOutput, schema: &ExtractionSchema) -> ValidationReport {
    let mut missing_required = Vec::new();
    let mut type_mismatches = Vec::new();
    for spec in &schema.properties {
        match out.get(&spec.name) {
            None => missing_required.push(spec.name.clone()),
            Some(value) => check_value(spec, value, spec.name.clone(), &mut type_mismatches),
        }
    }
    ValidationReport {
        json_valid: true,
        missing_required,
        type_mismatches,
    }
}

fn check_value(spec: &FieldSpec, value: &FieldValue, path: String, out: &mut Vec<TypeMismatch>) {
    let mismatch = |observed| TypeMismatch {
        field: path.clone(),
        expected: spec.kind(),
        observed,
    };
    match (&spec.field_type, value) {
        (FieldType::Text, FieldValue::Text(_))
        | (FieldType::Number, FieldValue::Number(_))
        | (FieldType::Boolean, FieldValue::Boolean(_)) => {}
        (FieldType::Date, FieldValue::Text(s)) => {
            if !dates::is_date(s) {
                out.push(mismatch(ValueKind::Text));
            }
        }
        (FieldType::List(item), FieldValue::List(items)) => {
            for (i, v) in items.iter().enumerate() {
                check_value(item, v, format!("{path}[{i}]"), out);
            }
        }
        (FieldType::Object(children), FieldValue::Object(map)) => {
            for child in children {
                if let Some(v) = map.get(&child.name) {
                    check_value(child, v, format!("{path}.{}", child.name), out);
                }
            }
        }
        // scalar fields also accept a list of that scalar
        (
            FieldType::Text | FieldType::Number | FieldType::Boolean | FieldType::Date,
            FieldValue::List(items),
        ) => {
            for (i, v) in items.iter().enumerate() {
                check_value(spec, v, format!("{path}[{i}]"), out);
            }
        }
        (_, other) => out.push(mismatch(other.kind())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::parse_schema;
    use proptest::prelude::*;

    fn out(json: &str) -> ExtractionOutput {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn strict_minimal_object() {
        let o = parse_model_output(r#"{"a": 1}"#, ParseMode::Strict).unwrap();
        assert_eq!(o.get("a"), Some(&FieldValue::Number(1.0)));
    }

    #[test]
    fn lenient_strips_fence() {
        let o = parse_model_output("```json\n{\"a\":1}\n```", ParseMode::Lenient).unwrap();
        assert_eq!(o.get("a"), Some(&FieldValue::Number(1.0)));
        let err = parse_model_output("```json\n{\"a\":1}\n```", ParseMode::Strict).unwrap_err();
        assert_eq!(err.reason, GateFailureReason::NoJson);
    }

    #[test]
    fn no_json_in_prose() {
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            let err = parse_model_output("the answer is: nothing", mode).unwrap_err();
            assert_eq!(err.reason, GateFailureReason::NoJson);
        }
    }

    #[test]
    fn unbalanced_and_not_object() {
        let err = parse_model_output(r#"{"a": {"b": 1}"#, ParseMode::Lenient).unwrap_err();
        assert_eq!(err.reason, GateFailureReason::Unbalanced);
        let err = parse_model_output(r#"{"a": {"b": 1}"#, ParseMode::Strict).unwrap_err();
        assert_eq!(err.reason, GateFailureReason::Unbalanced);
        let err = parse_model_output("[1, 2]", ParseMode::Strict).unwrap_err();
        assert_eq!(err.reason, GateFailureReason::NotAnObject);
    }

    #[test]
    fn extraction_honors_string_escapes() {
        let raw = r#"Sure! {"a": "close } brace", "b": "quote \" {"} trailing {"#;
        assert_eq!(
            extract_json_object(raw).unwrap(),
            r#"{"a": "close } brace", "b": "quote \" {"}"#
        );
    }

    #[test]
    fn fence_without_language_word() {
        assert_eq!(extract_json_object("```\n{\"x\":2}\n```").unwrap(), "{\"x\":2}");
    }

    #[test]
    fn validate_exact_conformance() {
        let schema = parse_schema(r#"{"type":"object","properties":{"a":{"type":"string"},"b":{"type":"string"}}}"#).unwrap();
        let report = validate_output(&out(r#"{"a":"x","b":"y","extra":1}"#), &schema);
        assert!(report.is_conformant());
    }

    #[test]
    fn validate_missing_required() {
        let schema = parse_schema(r#"{"type":"object","properties":{"a":{"type":"string"},"b":{"type":"string"}}}"#).unwrap();
        let report = validate_output(&out(r#"{"a":"x"}"#), &schema);
        assert_eq!(report.missing_required, vec!["b".to_string()]);
        assert!(!report.passes_gate());
    }

    #[test]
    fn validate_kind_mismatch() {
        let schema = parse_schema(r#"{"type":"object","properties":{"a":{"type":"number"}}}"#).unwrap();
        let report = validate_output(&out(r#"{"a":"x"}"#), &schema);
        assert_eq!(
            report.type_mismatches,
            vec![TypeMismatch {
                field: "a".into(),
                expected: FieldKind::Number,
                observed: ValueKind::Text
            }]
        );
        assert!(report.passes_gate());
    }

    #[test]
    fn validate_nested_and_loose_lists() {
        let schema = parse_schema(
            r#"{"type":"object","properties":{
                "names":{"type":"string"},
                "when":{"type":"string","format":"date"},
                "tags":{"type":"array","items":{"type":"number"}},
                "who":{"type":"object","properties":{"age":{"type":"number"}}}}}"#,
        )
        .unwrap();
        let report = validate_output(
            &out(r#"{"names":["a","b"],"when":"soon","tags":[1,"x"],"who":{"age":true}}"#),
            &schema,
        );
        let fields: Vec<_> = report.type_mismatches.iter().map(|m| m.field.as_str()).collect();
        assert_eq!(fields, ["when", "tags[1]", "who.age"]);
    }

    proptest! {
        #[test]
        fn lenient_accepts_whatever_strict_accepts(s in "[ {}\\[\\]\"a:1,\\\\]{0,24}") {
            if let Ok(strict) = parse_model_output(&s, ParseMode::Strict) {
                prop_assert_eq!(parse_model_output(&s, ParseMode::Lenient).unwrap(), strict);
            }
        }

        #[test]
        fn strict_accepts_serialized_objects(keys in prop::collection::vec("[a-z]{1,5}", 0..5), pad in "[ \n]{0,3}") {
            let obj: serde_json::Map<String, Value> = keys.into_iter().map(|k| (k, Value::from(1))).collect();
            let text = format!("{pad}{}{pad}", Value::Object(obj));
            prop_assert!(parse_model_output(&text, ParseMode::Strict).is_ok());
            prop_assert!(parse_model_output(&text, ParseMode::Lenient).is_ok());
        }

        #[test]
        fn every_property_present_or_missing(present in prop::collection::vec(any::<bool>(), 0..6)) {
            let specs: Vec<_> = (0..present.len()).map(|i| FieldSpec::text(format!("f{i}"), "")).collect();
            let schema = ExtractionSchema::new(specs).unwrap();
            let output: ExtractionOutput = present.iter().enumerate().filter(|(_, p)| **p)
                .map(|(i, _)| (format!("f{i}"), FieldValue::text("v"))).collect();
            let report = validate_output(&output, &schema);
            prop_assert_eq!(report.missing_required.len() + output.len(), schema.len());
        }
    }
}
