use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Classification of a single raw source line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Blank,
    Comment,
    Code,
}

impl LineKind {
    pub fn of(line: &str) -> LineKind {
        let trimmed = line.trim_start();
        if trimmed.trim_end().is_empty() {
            LineKind::Blank
        } else if trimmed.starts_with('#') {
            LineKind::Comment
        } else {
            LineKind::Code
        }
    }
}

/// An ordered sequence of raw source lines. Line numbers are 1-based and
/// stable: line `k` is always reported as `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub id: String,
    lines: Vec<String>,
}

impl SourceProgram {
    pub fn new<S: Into<String>>(id: impl Into<String>, lines: impl IntoIterator<Item = S>) -> Self {
        let lines = lines.into_iter().map(Into::into).collect::<Vec<String>>();
        debug_assert!(lines.iter().all(|l| !l.contains('\n')));
        SourceProgram {
            id: id.into(),
            lines,
        }
    }

    /// Splits `text` on `\n`. A single trailing newline terminates the last
    /// line rather than starting a new empty one.
    pub fn from_text(id: impl Into<String>, text: &str) -> Self {
        let body = text.strip_suffix('\n').unwrap_or(text);
        let lines: Vec<&str> = if text.is_empty() {
            Vec::new()
        } else {
            body.split('\n').collect()
        };
        SourceProgram::new(id, lines)
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(SourceProgram::from_text(id, &text))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_text())
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// The text of 1-based line `k`.
    pub fn line(&self, k: usize) -> Option<&str> {
        k.checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .map(String::as_str)
    }

    pub fn line_kind(&self, k: usize) -> Option<LineKind> {
        self.line(k).map(LineKind::of)
    }

    /// Numbers of all lines that are neither blank nor comment-only.
    pub fn code_lines(&self) -> BTreeSet<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| LineKind::of(l) == LineKind::Code)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// A copy of this program with the given 1-based lines removed.
    pub fn without_lines(&self, deleted: &BTreeSet<usize>) -> SourceProgram {
        let lines = self
            .lines
            .iter()
            .enumerate()
            .filter(|(i, _)| !deleted.contains(&(i + 1)))
            .map(|(_, l)| l.clone());
        SourceProgram::new(self.id.clone(), lines)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub(crate) fn lines_mut(&mut self) -> &mut Vec<String> {
        &mut self.lines
    }
}

/// Non-comment, non-blank lines of code.
pub fn count_sloc(program: &SourceProgram) -> usize {
    program
        .lines()
        .iter()
        .filter(|l| LineKind::of(l) == LineKind::Code)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sloc_skips_blank_and_comment_lines() {
        let p = SourceProgram::new("t", ["", "# comment", "let x = 1"]);
        assert_eq!(count_sloc(&p), 1);
        let empty = SourceProgram::new("e", Vec::<String>::new());
        assert_eq!(count_sloc(&empty), 0);
        let indented = SourceProgram::new("i", ["   # indented comment", "\t", "  end"]);
        assert_eq!(count_sloc(&indented), 1);
    }

    #[test]
    fn text_round_trip_keeps_lines() {
        for lines in [vec![], vec![""], vec!["a", ""], vec!["fn f()", "", "end"]] {
            let p = SourceProgram::new("p", lines.clone());
            let back = SourceProgram::from_text("p", &p.to_text());
            assert_eq!(back.lines(), p.lines());
        }
    }

    #[test]
    fn line_lookup_is_one_based() {
        let p = SourceProgram::new("p", ["a", "b"]);
        assert_eq!(p.line(0), None);
        assert_eq!(p.line(1), Some("a"));
        assert_eq!(p.line(2), Some("b"));
        assert_eq!(p.line(3), None);
    }
}
