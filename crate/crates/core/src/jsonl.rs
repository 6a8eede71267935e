//! Streaming JSON Lines ingestion and emission.
//!
//! Each line is one object of the form
//! `{"id": ..., "text": ..., "meta": {"source", "category", "url", "lang", "num_chars",
//! "num_utf8bytes", "num_words", "num_sents", "md5", "filters_failed", "removed_stage"}}`.
//! Only `text` is required on input.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::document::{Document, Record};

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed { path: PathBuf, line: u64, message: String },
    #[error("{path}:{line}: record has no \"text\" field")]
    MissingText { path: PathBuf, line: u64 },
}

impl JsonlError {
    fn io(path: &Path, source: io::Error) -> Self {
        JsonlError::Io { path: path.to_path_buf(), source }
    }
}

/// Counters for lines that were skipped in lenient mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReadCounters {
    pub parse_errors: u64,
    pub missing_text: u64,
    pub blank_lines: u64,
}

impl ReadCounters {
    pub fn skipped(&self) -> u64 {
        self.parse_errors + self.missing_text
    }
}

/// Iterator over the documents of one JSONL stream.
///
/// In lenient mode (the default) malformed lines and lines without `text` are counted and
/// skipped. In strict mode the first such line is yielded as an error and iteration stops.
pub struct DocumentReader<R> {
    lines: io::Lines<R>,
    path: PathBuf,
    default_source: String,
    ordinal: u64,
    strict: bool,
    done: bool,
    counters: ReadCounters,
}

impl DocumentReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JsonlError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| JsonlError::io(path, e))?;
        let source = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".to_string());
        Ok(Self::new(BufReader::new(file), path, source))
    }
}

impl<R: BufRead> DocumentReader<R> {
    /// `default_source` is used as `meta.source` (and id prefix) for records that lack one.
    pub fn new(reader: R, path: impl Into<PathBuf>, default_source: impl Into<String>) -> Self {
        DocumentReader {
            lines: reader.lines(),
            path: path.into(),
            default_source: default_source.into(),
            ordinal: 0,
            strict: false,
            done: false,
            counters: ReadCounters::default(),
        }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn counters(&self) -> ReadCounters {
        self.counters
    }

    fn parse_line(&self, line: &str, ordinal: u64) -> Result<Document, JsonlError> {
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| JsonlError::Malformed {
            path: self.path.clone(),
            line: ordinal + 1,
            message: e.to_string(),
        })?;
        if !value.get("text").is_some_and(|t| t.is_string()) {
            return Err(JsonlError::MissingText { path: self.path.clone(), line: ordinal + 1 });
        }
        let record: Record = serde_json::from_value(value).map_err(|e| JsonlError::Malformed {
            path: self.path.clone(),
            line: ordinal + 1,
            message: e.to_string(),
        })?;
        Ok(record.into_document(&self.default_source, ordinal))
    }
}

impl<R: BufRead> Iterator for DocumentReader<R> {
    type Item = Result<Document, JsonlError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.done = true;
                    return Some(Err(JsonlError::io(&self.path, e)));
                }
            };
            let ordinal = self.ordinal;
            self.ordinal += 1;
            if line.trim().is_empty() {
                self.counters.blank_lines += 1;
                continue;
            }
            match self.parse_line(&line, ordinal) {
                Ok(doc) => return Some(Ok(doc)),
                Err(err) => {
                    match err {
                        JsonlError::MissingText { .. } => self.counters.missing_text += 1,
                        _ => self.counters.parse_errors += 1,
                    }
                    if self.strict {
                        self.done = true;
                        return Some(Err(err));
                    }
                    log::warn!("skipping line: {err}");
                }
            }
        }
        None
    }
}

/// Reads every document of a file into memory, leniently.
pub fn read_all(path: impl AsRef<Path>) -> Result<(Vec<Document>, ReadCounters), JsonlError> {
    let mut reader = DocumentReader::open(path)?;
    let mut docs = Vec::new();
    for doc in reader.by_ref() {
        docs.push(doc?);
    }
    Ok((docs, reader.counters()))
}

/// Serializes one document as a single JSON line (no trailing newline).
pub fn to_json_line(doc: &Document) -> String {
    serde_json::to_string(&Record::from(doc)).expect("document records always serialize")
}

/// Incremental writer. Output goes to `<path>.partial` and is renamed into place by
/// [`DocumentWriter::finish`]; a writer dropped without finishing removes the partial file.
pub struct DocumentWriter {
    path: PathBuf,
    partial: PathBuf,
    out: Option<BufWriter<File>>,
    count: usize,
}

impl DocumentWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, JsonlError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| JsonlError::io(parent, e))?;
        }
        let mut partial = path.clone().into_os_string();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        let file = File::create(&partial).map_err(|e| JsonlError::io(&partial, e))?;
        Ok(DocumentWriter { path, partial, out: Some(BufWriter::new(file)), count: 0 })
    }

    pub fn write(&mut self, doc: &Document) -> Result<(), JsonlError> {
        let out = self.out.as_mut().expect("writer used after finish");
        let line = to_json_line(doc);
        out.write_all(line.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| JsonlError::io(&self.partial, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(mut self) -> Result<usize, JsonlError> {
        let out = self.out.take().expect("writer finished twice");
        let file = out.into_inner().map_err(|e| JsonlError::io(&self.partial, e.into_error()))?;
        file.sync_all().map_err(|e| JsonlError::io(&self.partial, e))?;
        drop(file);
        fs::rename(&self.partial, &self.path).map_err(|e| JsonlError::io(&self.path, e))?;
        Ok(self.count)
    }
}

impl Drop for DocumentWriter {
    fn drop(&mut self) {
        if self.out.take().is_some() {
            let _ = fs::remove_file(&self.partial);
        }
    }
}

/// Writes all documents to `path`, returning the number of records written.
pub fn write_documents<'a, I>(docs: I, path: impl AsRef<Path>) -> Result<usize, JsonlError>
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut writer = DocumentWriter::create(path)?;
    for doc in docs {
        writer.write(doc)?;
    }
    writer.finish()
}

/// Lists the `*.jsonl` files of a directory in name order.
pub fn list_jsonl_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, JsonlError> {
    let dir = dir.as_ref();
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| JsonlError::io(dir, e))? {
        let path = entry.map_err(|e| JsonlError::io(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "jsonl") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::Category;
    use std::io::Cursor;

    fn reader(input: &str) -> DocumentReader<Cursor<Vec<u8>>> {
        DocumentReader::new(Cursor::new(input.as_bytes().to_vec()), "mem.jsonl", "mem")
    }

    #[test]
    fn reads_valid_lines_in_order() {
        let input = "{\"text\":\"one\"}\n{\"text\":\"two\"}\n{\"text\":\"three\"}\n";
        let docs: Vec<_> = reader(input).map(Result::unwrap).collect();
        let texts: Vec<_> = docs.iter().map(|d| d.text.as_str()).collect();
        assert_eq!(texts, ["one", "two", "three"]);
        assert_eq!(docs[2].id, "mem:2");
    }

    #[test]
    fn empty_input_yields_nothing() {
        let mut r = reader("");
        assert!(r.next().is_none());
        assert_eq!(r.counters(), ReadCounters::default());
    }

    #[test]
    fn lenient_mode_skips_and_counts_bad_lines() {
        let input = "{\"text\":\"ok\"}\n{not json\n{\"meta\":{}}\n";
        let mut r = reader(input);
        let docs: Vec<_> = r.by_ref().map(Result::unwrap).collect();
        assert_eq!(docs.len(), 1);
        assert_eq!(r.counters().parse_errors, 1);
        assert_eq!(r.counters().missing_text, 1);
    }

    #[test]
    fn strict_mode_stops_at_first_bad_line() {
        let input = "{\"text\":\"ok\"}\n{not json\n{\"text\":\"later\"}\n";
        let results: Vec<_> = reader(input).strict(true).collect();
        assert_eq!(results.len(), 2);
        assert!(matches!(results[1], Err(JsonlError::Malformed { line: 2, .. })));
    }

    #[test]
    fn non_ascii_bytes_survive_write() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let text = "Ærø, Þórshöfn och “citat” – 日本語 🦀";
        let doc = Document::new("a", text, "s", Category::Books);
        assert_eq!(write_documents([&doc], &path).unwrap(), 1);
        let raw = fs::read(&path).unwrap();
        let needle = text.as_bytes();
        assert!(raw.windows(needle.len()).any(|w| w == needle), "text must be stored unescaped");
        let (back, _) = read_all(&path).unwrap();
        assert_eq!(back, vec![doc]);
    }

    #[test]
    fn empty_stream_writes_empty_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        assert_eq!(write_documents(std::iter::empty(), &path).unwrap(), 0);
        assert_eq!(fs::metadata(&path).unwrap().len(), 0);
    }

    #[test]
    fn dropped_writer_leaves_no_partial_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aborted.jsonl");
        {
            let mut w = DocumentWriter::create(&path).unwrap();
            w.write(&Document::new("a", "x", "s", Category::Math)).unwrap();
        }
        assert!(!path.exists());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
