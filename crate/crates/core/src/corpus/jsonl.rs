use std::io::BufRead;
use std::marker::PhantomData;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// What to do with a line that fails to parse or validate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    #[default]
    Strict,
    Skip,
}

/// A record type that can be read from a JSON-lines file.
pub trait JsonlRecord: DeserializeOwned {
    /// Normalizes the record in place and checks its invariants.
    fn validate(&mut self) -> std::result::Result<(), String> {
        Ok(())
    }
}

/// Streams `T` records from a JSON-lines source, one per non-blank line.
///
/// Items carry the 1-based line number. Under [`ErrorPolicy::Skip`] bad
/// lines are counted in [`JsonlReader::skipped`] instead of surfacing.
pub struct JsonlReader<R, T> {
    source_name: String,
    lines: std::io::Lines<R>,
    line: usize,
    policy: ErrorPolicy,
    skipped: usize,
    _record: PhantomData<fn() -> T>,
}

impl<R: BufRead, T: JsonlRecord> JsonlReader<R, T> {
    pub fn new(reader: R, source_name: impl Into<String>, policy: ErrorPolicy) -> Self {
        Self {
            source_name: source_name.into(),
            lines: reader.lines(),
            line: 0,
            policy,
            skipped: 0,
            _record: PhantomData,
        }
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub(crate) fn record_error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Record {
            source_name: self.source_name.clone(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn policy(&self) -> ErrorPolicy {
        self.policy
    }

    pub(crate) fn count_skip(&mut self) {
        self.skipped += 1;
    }

    fn parse(&self, text: &str) -> std::result::Result<T, String> {
        let mut record: T = serde_json::from_str(text).map_err(|e| e.to_string())?;
        record.validate()?;
        Ok(record)
    }
}

impl<R: BufRead, T: JsonlRecord> Iterator for JsonlReader<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(text) => text,
                Err(e) => {
                    return Some(Err(Error::io(self.source_name.clone(), e)));
                }
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            match self.parse(&text) {
                Ok(record) => return Some(Ok((self.line, record))),
                Err(message) => match self.policy {
                    ErrorPolicy::Strict => return Some(Err(self.record_error(self.line, message))),
                    ErrorPolicy::Skip => self.skipped += 1,
                },
            }
        }
    }
}
