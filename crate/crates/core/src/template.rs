//! The versioned prompt template shared by generation and token counting.

const V1_TEXT: &str = include_str!("../data/prompt_template_v1.txt");

pub const SCHEMA_SLOT: &str = "{{schema}}";
pub const DOCUMENT_SLOT: &str = "{{document}}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    version: String,
    text: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::v1()
    }
}

impl PromptTemplate {
    pub fn v1() -> Self {
        PromptTemplate {
            version: "extract-v1".to_string(),
            text: V1_TEXT.to_string(),
        }
    }

    /// A custom template; must contain both slots exactly once.
    pub fn custom(version: impl Into<String>, text: impl Into<String>) -> Result<Self, String> {
        let text = text.into();
        for slot in [SCHEMA_SLOT, DOCUMENT_SLOT] {
            if text.matches(slot).count() != 1 {
                return Err(format!("template must contain {slot} exactly once"));
            }
        }
        Ok(PromptTemplate {
            version: version.into(),
            text,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn render(&self, schema_json: &str, document: &str) -> String {
        // substitute the document last so slot markers inside it survive
        self.text
            .replacen(SCHEMA_SLOT, schema_json, 1)
            .replacen(DOCUMENT_SLOT, document, 1)
    }

    /// The template's fixed text with both slots removed.
    pub fn literal_text(&self) -> String {
        self.text.replacen(SCHEMA_SLOT, "", 1).replacen(DOCUMENT_SLOT, "", 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_length_is_literal_plus_parts() {
        let t = PromptTemplate::v1();
        let rendered = t.render("{\"s\":1}", "doc text");
        assert_eq!(
            rendered.chars().count(),
            t.literal_text().chars().count() + 7 + 8
        );
        assert!(rendered.contains("doc text"));
    }

    #[test]
    fn custom_requires_slots() {
        assert!(PromptTemplate::custom("x", "no slots").is_err());
        let t = PromptTemplate::custom("x", "S={{schema}} D={{document}}").unwrap();
        assert_eq!(t.render("a", "b"), "S=a D=b");
    }
}
