//! Caption corpus readers and masked-corpus writers.
//!
//! Supported layouts:
//! - `tsv`: `id<TAB>caption` per line, extra columns ignored
//! - `jsonl`: one object per line with a string `"caption"` and optional `"id"`
//! - `plain`: one caption per line, id is the 1-based line number
//!
//! Paths ending in `.gz` are transparently (de)compressed.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Jsonl,
    Plain,
}

impl Format {
    /// Guess from the file extension (ignoring a trailing `.gz`); anything
    /// unrecognized is plain text.
    pub fn infer(path: &Path) -> Format {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".tsv") {
            Format::Tsv
        } else if name.ends_with(".jsonl") || name.ends_with(".ndjson") {
            Format::Jsonl
        } else {
            Format::Plain
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Tsv => "tsv",
            Format::Jsonl => "jsonl",
            Format::Plain => "plain",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(Format::Tsv),
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            "plain" | "txt" | "text" => Ok(Format::Plain),
            _ => Err(Error::Config(format!(
                "unknown corpus format {s:?} (expected tsv, jsonl or plain)"
            ))),
        }
    }
}

/// One corpus entry. `index` is the dense 0-based record position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionRecord {
    pub index: usize,
    pub id: Option<String>,
    pub text: String,
}

impl CaptionRecord {
    /// The record id, or its 1-based position when none was supplied.
    pub fn display_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| (self.index + 1).to_string())
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if is_gz(path) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

/// Buffered output file, gzip-compressed for `.gz` paths. Call
/// [`finish`](OutputFile::finish) to flush and surface late I/O errors.
pub struct OutputFile {
    path: PathBuf,
    inner: OutputInner,
}

enum OutputInner {
    Plain(BufWriter<File>),
    Gz(GzEncoder<BufWriter<File>>),
}

impl OutputFile {
    pub fn finish(self) -> Result<()> {
        let path = self.path;
        match self.inner {
            OutputInner::Plain(mut w) => w.flush().map_err(|e| Error::io(&path, e)),
            OutputInner::Gz(w) => {
                let mut inner = w.finish().map_err(|e| Error::io(&path, e))?;
                inner.flush().map_err(|e| Error::io(&path, e))
            }
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Write for OutputFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match &mut self.inner {
            OutputInner::Plain(w) => w.write(buf),
            OutputInner::Gz(w) => w.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match &mut self.inner {
            OutputInner::Plain(w) => w.flush(),
            OutputInner::Gz(w) => w.flush(),
        }
    }
}

pub fn create_output(path: &Path) -> Result<OutputFile> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let buffered = BufWriter::new(file);
    let inner = if is_gz(path) {
        OutputInner::Gz(GzEncoder::new(buffered, Compression::default()))
    } else {
        OutputInner::Plain(buffered)
    };
    Ok(OutputFile {
        path: path.to_path_buf(),
        inner,
    })
}

/// Streaming record reader over any buffered input.
pub struct CorpusReader<R> {
    lines: io::Lines<R>,
    format: Format,
    line_no: usize,
    next_index: usize,
}

impl<R: BufRead> CorpusReader<R> {
    pub fn new(input: R, format: Format) -> Self {
        Self {
            lines: input.lines(),
            format,
            line_no: 0,
            next_index: 0,
        }
    }

    fn parse(&self, line: &str) -> Result<Option<(Option<String>, String)>> {
        let line_no = self.line_no;
        let line = line.strip_suffix('\r').unwrap_or(line);
        match self.format {
            Format::Plain => Ok(Some((Some(line_no.to_string()), line.to_string()))),
            Format::Tsv => {
                if line.trim().is_empty() {
                    return Ok(None);
                }
                let mut cols = line.split('\t');
                let id = cols.next().unwrap_or_default();
                let caption = cols.next().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected `id<TAB>caption`".into(),
                })?;
                Ok(Some((Some(id.to_string()), caption.to_string())))
            }
            Format::Jsonl => {
                if line.trim().is_empty() {
                    return Ok(None);
                }
                let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("invalid JSON: {e}"),
                })?;
                let obj = value.as_object().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected a JSON object".into(),
                })?;
                let caption = match obj.get("caption") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Null) | None => {
                        return Err(Error::MissingCaption { line: line_no })
                    }
                    Some(_) => {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "\"caption\" must be a string".into(),
                        })
                    }
                };
                let id = match obj.get("id") {
                    None | Some(Value::Null) => None,
                    Some(Value::String(s)) => Some(s.clone()),
                    Some(other) => Some(other.to_string()),
                };
                Ok(Some((id, caption)))
            }
        }
    }
}

impl<R: BufRead> Iterator for CorpusReader<R> {
    type Item = Result<CaptionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            };
            match self.parse(&line) {
                Ok(Some((id, text))) => {
                    let index = self.next_index;
                    self.next_index += 1;
                    return Some(Ok(CaptionRecord { index, id, text }));
                }
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

pub fn read_corpus(path: &Path, format: Format) -> Result<CorpusReader<Box<dyn BufRead + Send>>> {
    Ok(CorpusReader::new(open_input(path)?, format))
}

/// Writes masked captions in one of the corpus formats.
pub struct MaskedWriter<W> {
    out: W,
    format: Format,
}

impl<W: Write> MaskedWriter<W> {
    pub fn new(out: W, format: Format) -> Self {
        Self { out, format }
    }

    pub fn write_record(&mut self, record: &CaptionRecord, text: &str) -> io::Result<()> {
        match self.format {
            Format::Plain => writeln!(self.out, "{text}"),
            Format::Tsv => writeln!(self.out, "{}\t{text}", record.display_id()),
            Format::Jsonl => {
                let mut obj = Map::new();
                if let Some(id) = &record.id {
                    obj.insert("id".into(), Value::String(id.clone()));
                }
                obj.insert("caption".into(), Value::String(text.to_string()));
                serde_json::to_writer(&mut self.out, &Value::Object(obj))?;
                self.out.write_all(b"\n")
            }
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Write `(record, kept tokens)` pairs, joining tokens with single spaces.
/// Records are written in iteration order; empty captions are kept.
pub fn write_masked<I, T, S>(records: I, path: &Path, format: Format) -> Result<()>
where
    I: IntoIterator<Item = (CaptionRecord, T)>,
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let mut writer = MaskedWriter::new(create_output(path)?, format);
    for (record, kept) in records {
        let text = join_tokens(kept.as_ref());
        writer
            .write_record(&record, &text)
            .map_err(|e| Error::io(path, e))?;
    }
    writer.into_inner().finish()
}

pub fn join_tokens<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.as_ref());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_str(text: &str, format: Format) -> Result<Vec<CaptionRecord>> {
        CorpusReader::new(text.as_bytes(), format).collect()
    }

    #[test]
    fn infer_format() {
        assert_eq!(Format::infer(Path::new("a/b.tsv")), Format::Tsv);
        assert_eq!(Format::infer(Path::new("b.JSONL.gz")), Format::Jsonl);
        assert_eq!(Format::infer(Path::new("b.txt")), Format::Plain);
        assert_eq!(Format::infer(Path::new("b.tsv.gz")), Format::Tsv);
    }

    #[test]
    fn plain_records() {
        let recs = read_str("a b\nc", Format::Plain).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].text, "a b");
        assert_eq!(recs[1].text, "c");
        assert_eq!(recs[1].id.as_deref(), Some("2"));
        assert_eq!(recs[1].index, 1);
    }

    #[test]
    fn plain_blank_lines_are_records() {
        let recs = read_str("a\n\nb\n", Format::Plain).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].text, "");
    }

    #[test]
    fn tsv_records() {
        let recs = read_str("x1\thello world\r\nx2\tbye\textra\n", Format::Tsv).unwrap();
        assert_eq!(recs[0].id.as_deref(), Some("x1"));
        assert_eq!(recs[0].text, "hello world");
        assert_eq!(recs[1].text, "bye");
    }

    #[test]
    fn tsv_missing_column_reports_line() {
        let err = read_str("a\tb\nnocaption\n", Format::Tsv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn jsonl_records() {
        let recs = read_str(
            "{\"id\":\"7\",\"caption\":\"dog\"}\n\n{\"id\":8,\"caption\":\"cat\",\"url\":\"u\"}\n{\"caption\":\"x\"}\n",
            Format::Jsonl,
        )
        .unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!((recs[0].id.as_deref(), recs[0].text.as_str()), (Some("7"), "dog"));
        assert_eq!(recs[1].id.as_deref(), Some("8"));
        assert_eq!(recs[1].index, 1);
        assert_eq!(recs[2].id, None);
    }

    #[test]
    fn jsonl_errors() {
        let err = read_str("{\"caption\":\"a\"}\n{\"id\":\"1\"}\n", Format::Jsonl).unwrap_err();
        assert!(matches!(err, Error::MissingCaption { line: 2 }), "{err}");
        let err = read_str("{not json\n", Format::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = read_str("{\"caption\":3}\n", Format::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    fn write_one(format: Format, id: Option<&str>, kept: &[&str]) -> String {
        let rec = CaptionRecord {
            index: 0,
            id: id.map(str::to_string),
            text: String::new(),
        };
        let mut w = MaskedWriter::new(Vec::new(), format);
        w.write_record(&rec, &join_tokens(kept)).unwrap();
        String::from_utf8(w.into_inner()).unwrap()
    }

    #[test]
    fn writer_layouts() {
        assert_eq!(write_one(Format::Tsv, Some("1"), &["a", "c"]), "1\ta c\n");
        assert_eq!(write_one(Format::Tsv, Some("1"), &[]), "1\t\n");
        assert_eq!(write_one(Format::Plain, None, &["a"]), "a\n");
        assert_eq!(write_one(Format::Plain, None, &[]), "\n");
        assert_eq!(
            write_one(Format::Jsonl, Some("7"), &["dog"]),
            "{\"caption\":\"dog\",\"id\":\"7\"}\n"
        );
        assert_eq!(write_one(Format::Tsv, None, &["x"]), "1\tx\n");
    }

    #[test]
    fn gz_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.tsv.gz");
        let recs = vec![
            (
                CaptionRecord { index: 0, id: Some("a".into()), text: "x y".into() },
                vec!["x", "y"],
            ),
            (CaptionRecord { index: 1, id: Some("b".into()), text: "z".into() }, vec![]),
        ];
        write_masked(recs, &path, Format::Tsv).unwrap();
        let back: Vec<_> = read_corpus(&path, Format::Tsv).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].text, "x y");
        assert_eq!(back[1].text, "");
    }

    #[test]
    fn io_errors_name_path() {
        let err = open_input(Path::new("/nonexistent/corpus.txt")).err().unwrap();
        assert!(err.to_string().contains("/nonexistent/corpus.txt"));
    }
}
