//! Corpus files: plain (one sentence per line) and FASTA.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{Corpus, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One sentence per line, one character per symbol; blank lines skipped.
    #[default]
    Plain,
    /// `>` header lines start records; sequence lines are concatenated.
    Fasta,
}

impl std::str::FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" | "txt" => Ok(CorpusFormat::Plain),
            "fasta" | "fa" => Ok(CorpusFormat::Fasta),
            _ => Err(Error::invalid_arg(format!("unknown corpus format {s:?} (plain | fasta)"))),
        }
    }
}

impl CorpusFormat {
    /// Guesses from the file extension, defaulting to plain.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("fa" | "fasta" | "faa") => CorpusFormat::Fasta,
            _ => CorpusFormat::Plain,
        }
    }
}

pub fn parse_corpus(text: &str, format: CorpusFormat) -> Result<Corpus> {
    match format {
        CorpusFormat::Plain => text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(Sentence::parse)
            .collect(),
        CorpusFormat::Fasta => {
            let mut out = Vec::new();
            let mut current: Option<Vec<char>> = None;
            for line in text.lines().map(str::trim) {
                if line.starts_with('>') {
                    if let Some(seq) = current.take() {
                        out.push(fasta_record(seq)?);
                    }
                    current = Some(Vec::new());
                } else if !line.is_empty() {
                    current
                        .as_mut()
                        .ok_or_else(|| Error::invalid_input("FASTA sequence before first '>' header"))?
                        .extend(line.chars().filter(|c| !c.is_whitespace()));
                }
            }
            if let Some(seq) = current {
                out.push(fasta_record(seq)?);
            }
            Ok(out)
        }
    }
}

fn fasta_record(seq: Vec<char>) -> Result<Sentence> {
    Sentence::new(seq).map_err(|_| Error::invalid_input("empty FASTA record"))
}

pub fn format_corpus(corpus: &[Sentence], format: CorpusFormat) -> String {
    let mut out = String::new();
    for (i, x) in corpus.iter().enumerate() {
        if format == CorpusFormat::Fasta {
            out.push_str(&format!(">seq{}\n", i + 1));
        }
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

pub fn read_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, format).map_err(|e| Error::invalid_input(format!("{}: {e}", path.display())))
}

pub fn write_corpus(path: &Path, corpus: &[Sentence], format: CorpusFormat) -> Result<()> {
    fs::write(path, format_corpus(corpus, format)).map_err(|e| Error::io(path, e))
}
