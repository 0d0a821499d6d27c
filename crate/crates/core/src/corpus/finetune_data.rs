use std::io::Read;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// One `[tag, word, text]` row: `tag` is 1 when `word` is a keyword of `text`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTuneExample {
    pub tag: u8,
    pub word: String,
    pub text: String,
}

/// Reads tab-separated `tag, word, text` rows. A leading header row whose
/// first field is `tag` is skipped.
pub fn read_finetune_tsv<R: Read>(reader: R) -> Result<Vec<FineTuneExample>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
        if i == 0 && record.get(0).map(str::trim) == Some("tag") {
            continue;
        }
        if record.len() != 3 {
            return Err(CorpusError::Parse {
                line: i + 1,
                message: format!("expected 3 columns, found {}", record.len()),
            });
        }
        let tag = match record[0].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CorpusError::Parse {
                    line: i + 1,
                    message: format!("tag must be 0 or 1, found {other:?}"),
                })
            }
        };
        out.push(FineTuneExample {
            tag,
            word: record[1].to_string(),
            text: record[2].to_string(),
        });
    }
    Ok(out)
}
