use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

/// Loads documents from a directory of text files (id = file stem, sorted
/// by file name), a `.jsonl` file of `{doc_id, text}`, or a single text file.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>, PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    let docs = if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path).map_err(io)? {
            let p = entry.map_err(io)?.path();
            if p.is_file() {
                files.push(p);
            }
        }
        files.sort();
        files.iter().map(|p| read_text(p)).collect::<Result<Vec<_>, _>>()?
    } else if path.extension().is_some_and(|e| e == "jsonl") {
        read_jsonl(path)?
    } else {
        vec![read_text(path)?]
    };
    let mut seen = HashSet::new();
    if let Some(dup) = docs.iter().find(|d| !seen.insert(d.doc_id.as_str())) {
        return Err(PipelineError::MalformedCorpus {
            path: path.display().to_string(),
            line: 0,
            message: format!("duplicate doc_id `{}`", dup.doc_id),
        });
    }
    Ok(docs)
}

fn read_text(path: &Path) -> Result<Document, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let doc_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Document { doc_id, text })
}

fn read_jsonl(path: &Path) -> Result<Vec<Document>, PipelineError> {
    let content = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| PipelineError::MalformedCorpus {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_and_jsonl() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.txt"), "second").unwrap();
        std::fs::write(dir.path().join("a.txt"), "first").unwrap();
        let docs = load_corpus(dir.path()).unwrap();
        assert_eq!(docs.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);

        let jsonl = dir.path().join("c.jsonl");
        std::fs::write(&jsonl, "{\"doc_id\":\"x\",\"text\":\"t\"}\n\n{\"doc_id\":\"y\"}\n").unwrap();
        match load_corpus(&jsonl) {
            Err(PipelineError::MalformedCorpus { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        std::fs::write(&jsonl, "{\"doc_id\":\"x\",\"text\":\"t\"}\n{\"doc_id\":\"x\",\"text\":\"u\"}\n").unwrap();
        assert!(matches!(load_corpus(&jsonl), Err(PipelineError::MalformedCorpus { .. })));
    }
}
