//! Extraction schemas in the `type` / `properties` / `items` /
//! `extraction_instruction` dialect, plus the typed values and the
//! output gate that decides whether a raw model response is scorable.

mod gate;
mod value;

pub use gate::{
    extract_json_object, parse_model_output, validate_output, GateFailure, GateFailureReason,
    ParseMode, TypeMismatch, ValidationReport,
};
pub use value::{ExtractionOutput, FieldValue, ValueKind};

use std::collections::HashSet;
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

/// Name given to the element spec of a list field.
pub const ITEM_SPEC_NAME: &str = "item";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("malformed schema at {location}: {message}")]
    MalformedSchema { location: String, message: String },
}

impl SchemaError {
    fn at(location: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError::MalformedSchema {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// The kind tag of a field specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Text,
    Number,
    Boolean,
    Date,
    List,
    Object,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Text => "text",
            FieldKind::Number => "number",
            FieldKind::Boolean => "boolean",
            FieldKind::Date => "date",
            FieldKind::List => "list",
            FieldKind::Object => "object",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape of a field. List and object carry their nested specs, so the
/// "list has an item spec, object has children" invariant is structural.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    Text,
    Number,
    Boolean,
    Date,
    List(Box<FieldSpec>),
    Object(Vec<FieldSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub instruction: String,
    pub field_type: FieldType,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, field_type: FieldType) -> Self {
        FieldSpec {
            name: name.into(),
            instruction: String::new(),
            field_type,
        }
    }

    pub fn text(name: impl Into<String>, instruction: impl Into<String>) -> Self {
        FieldSpec {
            name: name.into(),
            instruction: instruction.into(),
            field_type: FieldType::Text,
        }
    }

    pub fn with_instruction(mut self, instruction: impl Into<String>) -> Self {
        self.instruction = instruction.into();
        self
    }

    pub fn kind(&self) -> FieldKind {
        match self.field_type {
            FieldType::Text => FieldKind::Text,
            FieldType::Number => FieldKind::Number,
            FieldType::Boolean => FieldKind::Boolean,
            FieldType::Date => FieldKind::Date,
            FieldType::List(_) => FieldKind::List,
            FieldType::Object(_) => FieldKind::Object,
        }
    }

    pub fn item_spec(&self) -> Option<&FieldSpec> {
        match &self.field_type {
            FieldType::List(item) => Some(item),
            _ => None,
        }
    }

    pub fn children(&self) -> &[FieldSpec] {
        match &self.field_type {
            FieldType::Object(children) => children,
            _ => &[],
        }
    }

    pub fn child(&self, name: &str) -> Option<&FieldSpec> {
        self.children().iter().find(|c| c.name == name)
    }

    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        let type_name = match &self.field_type {
            FieldType::Text | FieldType::Date => "string",
            FieldType::Number => "number",
            FieldType::Boolean => "boolean",
            FieldType::List(_) => "array",
            FieldType::Object(_) => "object",
        };
        obj.insert("type".into(), Value::from(type_name));
        if matches!(self.field_type, FieldType::Date) {
            obj.insert("format".into(), Value::from("date"));
        }
        if !self.instruction.is_empty() {
            obj.insert(
                "extraction_instruction".into(),
                Value::from(self.instruction.as_str()),
            );
        }
        match &self.field_type {
            FieldType::List(item) => {
                obj.insert("items".into(), item.to_json());
            }
            FieldType::Object(children) => {
                obj.insert("properties".into(), properties_json(children));
            }
            _ => {}
        }
        Value::Object(obj)
    }
}

fn properties_json(specs: &[FieldSpec]) -> Value {
    Value::Object(
        specs
            .iter()
            .map(|s| (s.name.clone(), s.to_json()))
            .collect(),
    )
}

/// Top-level schema: always an object with ordered properties.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractionSchema {
    pub properties: Vec<FieldSpec>,
}

impl ExtractionSchema {
    pub fn new(properties: Vec<FieldSpec>) -> Result<Self, SchemaError> {
        check_siblings(&properties, "$")?;
        for p in &properties {
            check_spec(p, &format!("$.{}", p.name))?;
        }
        Ok(ExtractionSchema { properties })
    }

    pub fn property(&self, name: &str) -> Option<&FieldSpec> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn property_names(&self) -> impl Iterator<Item = &str> {
        self.properties.iter().map(|p| p.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.properties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.properties.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("type".into(), Value::from("object"));
        obj.insert("properties".into(), properties_json(&self.properties));
        Value::Object(obj)
    }

    /// Compact serialization; this is the text fed to prompts and token counts.
    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json(value: &Value) -> Result<Self, SchemaError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::at("$", "schema must be a JSON object"))?;
        check_keys(obj, &["type", "properties"], "$")?;
        match obj.get("type").and_then(Value::as_str) {
            Some("object") => {}
            Some(other) => {
                return Err(SchemaError::at(
                    "$.type",
                    format!("top-level type must be \"object\", found \"{other}\""),
                ))
            }
            None => return Err(SchemaError::at("$.type", "missing or non-string `type`")),
        }
        let props = obj
            .get("properties")
            .ok_or_else(|| SchemaError::at("$", "missing `properties`"))?;
        let properties = parse_properties(props, "$")?;
        Ok(ExtractionSchema { properties })
    }
}

impl serde::Serialize for ExtractionSchema {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for ExtractionSchema {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        ExtractionSchema::from_json(&value).map_err(serde::de::Error::custom)
    }
}

/// Parses schema source text.
pub fn parse_schema(source: &str) -> Result<ExtractionSchema, SchemaError> {
    let value: Value = serde_json::from_str(source).map_err(|e| {
        SchemaError::at(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    ExtractionSchema::from_json(&value)
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], location: &str) -> Result<(), SchemaError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(SchemaError::at(
                location,
                format!("unsupported keyword `{key}`"),
            ));
        }
    }
    Ok(())
}

fn parse_properties(value: &Value, location: &str) -> Result<Vec<FieldSpec>, SchemaError> {
    let props = value.as_object().ok_or_else(|| {
        SchemaError::at(format!("{location}.properties"), "`properties` must be an object")
    })?;
    props
        .iter()
        .map(|(name, spec)| {
            let loc = format!("{location}.{name}");
            if name.is_empty() {
                return Err(SchemaError::at(loc, "property name must be non-empty"));
            }
            parse_field(name, spec, &loc)
        })
        .collect()
}

fn parse_field(name: &str, value: &Value, location: &str) -> Result<FieldSpec, SchemaError> {
    let obj = value
        .as_object()
        .ok_or_else(|| SchemaError::at(location, "field spec must be an object"))?;
    check_keys(
        obj,
        &["type", "extraction_instruction", "items", "properties", "format"],
        location,
    )?;
    let instruction = match obj.get("extraction_instruction") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(SchemaError::at(
                location,
                "`extraction_instruction` must be a string",
            ))
        }
    };
    let type_name = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| SchemaError::at(location, "missing or non-string `type`"))?;
    let format = match obj.get("format") {
        None => None,
        Some(Value::String(f)) if type_name == "string" && f == "date" => Some("date"),
        Some(other) => {
            return Err(SchemaError::at(
                location,
                format!("unsupported `format` {other} (only \"date\" on strings)"),
            ))
        }
    };
    let expect_absent = |key: &str| -> Result<(), SchemaError> {
        if obj.contains_key(key) {
            Err(SchemaError::at(
                location,
                format!("`{key}` not allowed on type \"{type_name}\""),
            ))
        } else {
            Ok(())
        }
    };
    let field_type = match type_name {
        "string" => {
            expect_absent("items")?;
            expect_absent("properties")?;
            if format.is_some() {
                FieldType::Date
            } else {
                FieldType::Text
            }
        }
        "number" | "boolean" => {
            expect_absent("items")?;
            expect_absent("properties")?;
            if type_name == "number" {
                FieldType::Number
            } else {
                FieldType::Boolean
            }
        }
        "array" => {
            expect_absent("properties")?;
            let items = obj
                .get("items")
                .ok_or_else(|| SchemaError::at(location, "array field requires `items`"))?;
            let item = parse_field(ITEM_SPEC_NAME, items, &format!("{location}[]"))?;
            FieldType::List(Box::new(item))
        }
        "object" => {
            expect_absent("items")?;
            let props = obj
                .get("properties")
                .ok_or_else(|| SchemaError::at(location, "object field requires `properties`"))?;
            let children = parse_properties(props, location)?;
            if children.is_empty() {
                return Err(SchemaError::at(
                    location,
                    "nested object must declare at least one property",
                ));
            }
            FieldType::Object(children)
        }
        other => {
            return Err(SchemaError::at(
                location,
                format!("unknown type \"{other}\""),
            ))
        }
    };
    Ok(FieldSpec {
        name: name.to_string(),
        instruction,
        field_type,
    })
}

fn check_siblings(specs: &[FieldSpec], location: &str) -> Result<(), SchemaError> {
    let mut seen = HashSet::new();
    for s in specs {
        if s.name.is_empty() {
            return Err(SchemaError::at(location, "property name must be non-empty"));
        }
        if !seen.insert(s.name.as_str()) {
            return Err(SchemaError::at(
                location,
                format!("duplicate property `{}`", s.name),
            ));
        }
    }
    Ok(())
}

fn check_spec(spec: &FieldSpec, location: &str) -> Result<(), SchemaError> {
    match &spec.field_type {
        FieldType::List(item) => check_spec(item, &format!("{location}[]")),
        FieldType::Object(children) => {
            if children.is_empty() {
                return Err(SchemaError::at(
                    location,
                    "nested object must declare at least one property",
                ));
            }
            check_siblings(children, location)?;
            children
                .iter()
                .try_for_each(|c| check_spec(c, &format!("{location}.{}", c.name)))
        }
        _ => Ok(()),
    }
}

/// A property dropped during [`combine_schemas`] because an earlier part
/// already declared the same name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub property: String,
    pub kept_from: usize,
    pub dropped_from: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSchema {
    pub schema: ExtractionSchema,
    pub collisions: Vec<Collision>,
}

/// Union of the parts' properties in first-seen order. On a name collision
/// the earliest spec is kept and the later one is recorded in `collisions`.
pub fn combine_schemas<'a, I>(parts: I) -> CombinedSchema
where
    I: IntoIterator<Item = &'a ExtractionSchema>,
{
    let mut properties: Vec<FieldSpec> = Vec::new();
    let mut origin: Vec<usize> = Vec::new();
    let mut collisions = Vec::new();
    for (part_idx, part) in parts.into_iter().enumerate() {
        for spec in &part.properties {
            match properties.iter().position(|p| p.name == spec.name) {
                Some(pos) => collisions.push(Collision {
                    property: spec.name.clone(),
                    kept_from: origin[pos],
                    dropped_from: part_idx,
                }),
                None => {
                    properties.push(spec.clone());
                    origin.push(part_idx);
                }
            }
        }
    }
    CombinedSchema {
        schema: ExtractionSchema { properties },
        collisions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const EXAMPLE_1: &str = r#"{
      "type": "object",
      "properties": {
        "entity_name": {
          "type": "string",
          "extraction_instruction": "The canonical name of the method or approach"
        },
        "unit": {
          "type": "string",
          "extraction_instruction": "Unit associated with the value, leave empty string if none given"
        },
        "equation_or_expression": {
          "type": "string",
          "extraction_instruction": "The equation or mathematical expression exactly as it appears (or as faithfully as ASCII allows)"
        }
      }
    }"#;

    pub(crate) const EXAMPLE_3: &str = r#"{
      "type": "object",
      "properties": {
        "regulators": {
          "type": "array",
          "extraction_instruction": "List the regulators mentioned that impose this requirement",
          "items": {
            "type": "string",
            "extraction_instruction": "Extract the name of each regulator"
          }
        },
        "name": {"type": "string", "extraction_instruction": "Full name of the regulator"},
        "event_description": {"type": "string", "extraction_instruction": "Extract the wording that describes the risk event"},
        "description": {"type": "string", "extraction_instruction": "Extract the text that explains what has changed or what the technology does"},
        "investor_type": {"type": "string", "extraction_instruction": "Extract the category label for the investor type"}
      }
    }"#;

    fn schema_of(names: &[&str]) -> ExtractionSchema {
        ExtractionSchema::new(names.iter().map(|n| FieldSpec::text(*n, "")).collect()).unwrap()
    }

    #[test]
    fn parses_equation_example() {
        let schema = parse_schema(EXAMPLE_1).unwrap();
        let names: Vec<_> = schema.property_names().collect();
        assert_eq!(names, ["entity_name", "unit", "equation_or_expression"]);
        assert!(schema.properties.iter().all(|p| p.kind() == FieldKind::Text));
        assert!(schema.properties[1].instruction.starts_with("Unit associated"));
    }

    #[test]
    fn parses_regulatory_example() {
        let schema = parse_schema(EXAMPLE_3).unwrap();
        assert_eq!(schema.len(), 5);
        let regulators = schema.property("regulators").unwrap();
        assert_eq!(regulators.kind(), FieldKind::List);
        assert_eq!(regulators.item_spec().unwrap().kind(), FieldKind::Text);
        let text_count = schema
            .properties
            .iter()
            .filter(|p| p.kind() == FieldKind::Text)
            .count();
        assert_eq!(text_count, 4);
    }

    #[test]
    fn empty_object_schema() {
        let schema = parse_schema(r#"{"type":"object","properties":{}}"#).unwrap();
        assert!(schema.is_empty());
    }

    #[test]
    fn date_format_marker() {
        let schema = parse_schema(
            r#"{"type":"object","properties":{"d":{"type":"string","format":"date"},"t":{"type":"string"}}}"#,
        )
        .unwrap();
        assert_eq!(schema.properties[0].kind(), FieldKind::Date);
        assert_eq!(schema.properties[1].kind(), FieldKind::Text);
    }

    #[test]
    fn rejects_unknown_type_and_keywords() {
        let err = parse_schema(r#"{"type":"object","properties":{"a":{"type":"integer"}}}"#)
            .unwrap_err();
        let SchemaError::MalformedSchema { location, message } = err;
        assert_eq!(location, "$.a");
        assert!(message.contains("integer"));

        assert!(parse_schema(r#"{"type":"object","properties":{"a":{"type":"string","$ref":"x"}}}"#).is_err());
        assert!(parse_schema(r#"{"type":"array","items":{"type":"string"}}"#).is_err());
        assert!(parse_schema(r#"{"type":"object","properties":{"a":{"type":"array"}}}"#).is_err());
        assert!(parse_schema(r#"{"type":"object","properties":{"a":{"type":"object","properties":{}}}}"#).is_err());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_schema("{\n  \"type\": \"object\",\n  oops\n}").unwrap_err();
        let SchemaError::MalformedSchema { location, .. } = err;
        assert!(location.starts_with("line 3"), "{location}");
    }

    #[test]
    fn round_trip_examples() {
        for src in [EXAMPLE_1, EXAMPLE_3] {
            let schema = parse_schema(src).unwrap();
            let again = parse_schema(&schema.to_json_string()).unwrap();
            assert_eq!(schema, again);
        }
    }

    #[test]
    fn combine_disjoint() {
        let combined = combine_schemas([&schema_of(&["a"]), &schema_of(&["b"])]);
        assert_eq!(combined.schema, schema_of(&["a", "b"]));
        assert!(combined.collisions.is_empty());
    }

    #[test]
    fn combine_singleton_unchanged() {
        let a = schema_of(&["a"]);
        assert_eq!(combine_schemas([&a]).schema, a);
    }

    #[test]
    fn combine_collision_first_wins() {
        let first = ExtractionSchema::new(vec![FieldSpec::text("a", "first")]).unwrap();
        let second = ExtractionSchema::new(vec![FieldSpec::text("a", "second")]).unwrap();
        let combined = combine_schemas([&first, &second]);
        assert_eq!(combined.schema.len(), 1);
        assert_eq!(combined.schema.properties[0].instruction, "first");
        assert_eq!(
            combined.collisions,
            vec![Collision {
                property: "a".into(),
                kept_from: 0,
                dropped_from: 1
            }]
        );
    }

    #[test]
    fn new_rejects_duplicate_siblings() {
        assert!(ExtractionSchema::new(vec![FieldSpec::text("a", ""), FieldSpec::text("a", "")]).is_err());
        assert!(ExtractionSchema::new(vec![FieldSpec::new("o", FieldType::Object(vec![]))]).is_err());
    }
}
