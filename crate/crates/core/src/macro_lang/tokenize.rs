use crate::error::{Error, Result};

/// One logical line: physical lines joined across `\` continuations, with
/// comments stripped and the rest split on whitespace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalLine {
    /// 1-based number of the first physical line.
    pub line: usize,
    pub tokens: Vec<String>,
    /// Whether a `#` comment was stripped from it.
    pub comment: bool,
}

/// Accepts LF or CRLF line endings.
pub fn tokenize(text: &str) -> Result<Vec<LogicalLine>> {
    let mut out = Vec::new();
    let mut pending: Option<(usize, String, bool)> = None;
    let mut last_continued = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let (content, comment) = match raw.find('#') {
            Some(pos) => (&raw[..pos], true),
            None => (raw, false),
        };
        let content = content.trim_end();
        let (content, continues) = match content.strip_suffix('\\') {
            Some(head) => (head, true),
            None => (content, false),
        };

        let (start, mut buf, had_comment) =
            pending.take().unwrap_or((lineno, String::new(), false));
        buf.push_str(content);
        buf.push(' ');
        let had_comment = had_comment || comment;

        if continues {
            pending = Some((start, buf, had_comment));
            last_continued = lineno;
        } else {
            out.push(LogicalLine {
                line: start,
                tokens: buf.split_whitespace().map(str::to_owned).collect(),
                comment: had_comment,
            });
        }
    }
    if pending.is_some() {
        return Err(Error::DanglingContinuation {
            line: last_continued,
        });
    }
    Ok(out)
}
