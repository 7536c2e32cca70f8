//! OTSL table-structure language: tokenizing, grammar validation and
//! conversion to and from a tiled cell grid and HTML tables.
//!
//! A table is a rectangular grid of token slots, one row per `nl`:
//!
//! * `fcel` opens a cell with content, `ecel` an empty one,
//! * `lcel` extends the cell to its left,
//! * `ucel` extends the cell above,
//! * `xcel` extends both (interior of a 2-D span).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OtslToken {
    Fcel(Option<String>),
    Ecel,
    Lcel,
    Ucel,
    Xcel,
    Nl,
}

impl OtslToken {
    pub fn name(&self) -> &'static str {
        match self {
            OtslToken::Fcel(_) => "fcel",
            OtslToken::Ecel => "ecel",
            OtslToken::Lcel => "lcel",
            OtslToken::Ucel => "ucel",
            OtslToken::Xcel => "xcel",
            OtslToken::Nl => "nl",
        }
    }

    fn opens_cell(&self) -> bool {
        matches!(self, OtslToken::Fcel(_) | OtslToken::Ecel)
    }
}

/// How cell text travels in the serialized form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OtslMode {
    /// `fcel "text"`: content quoted right after its `fcel`.
    #[default]
    Interleaved,
    /// Structure tokens only.
    StructureOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OtslSequence {
    pub tokens: Vec<OtslToken>,
}

impl OtslSequence {
    pub fn new(tokens: Vec<OtslToken>) -> Self {
        Self { tokens }
    }

    pub fn parse(text: &str, mode: OtslMode) -> Result<Self> {
        parse_otsl(text, mode)
    }

    /// Canonical text form: one table row per line, tokens separated by a
    /// single space.
    pub fn to_text(&self, mode: OtslMode) -> String {
        let mut out = String::new();
        let mut line_start = true;
        for tok in &self.tokens {
            if !line_start {
                out.push(' ');
            }
            out.push_str(tok.name());
            if let (OtslToken::Fcel(Some(text)), OtslMode::Interleaved) = (tok, mode) {
                out.push(' ');
                push_quoted(&mut out, text);
            }
            line_start = *tok == OtslToken::Nl;
            if line_start {
                out.push('\n');
            }
        }
        if out.ends_with('\n') {
            out.pop();
        }
        out
    }
}

fn push_quoted(out: &mut String, text: &str) {
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
}

pub fn parse_otsl(text: &str, mode: OtslMode) -> Result<OtslSequence> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut content = String::new();
            let mut closed = false;
            while let Some((_, c)) = chars.next() {
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match chars.next() {
                        Some((_, 'n')) => content.push('\n'),
                        Some((_, e)) => content.push(e),
                        None => break,
                    },
                    c => content.push(c),
                }
            }
            if !closed {
                return Err(Error::InvalidOtsl(format!("unterminated quoted content at index {}", tokens.len())));
            }
            match (mode, tokens.last_mut()) {
                (OtslMode::Interleaved, Some(OtslToken::Fcel(slot @ None))) => *slot = Some(content),
                _ => {
                    return Err(Error::InvalidOtsl(format!(
                        "quoted content not directly after fcel at index {}",
                        tokens.len()
                    )))
                }
            }
            continue;
        }
        let mut end = start;
        while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() || c == '"' {
                break;
            }
            end = i + c.len_utf8();
            chars.next();
        }
        let word = &text[start..end];
        let tok = match word {
            "fcel" => OtslToken::Fcel(None),
            "ecel" => OtslToken::Ecel,
            "lcel" => OtslToken::Lcel,
            "ucel" => OtslToken::Ucel,
            "xcel" => OtslToken::Xcel,
            "nl" => OtslToken::Nl,
            other => {
                return Err(Error::InvalidOtsl(format!("unknown token `{other}` at index {}", tokens.len())));
            }
        };
        tokens.push(tok);
    }
    Ok(OtslSequence { tokens })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Index into the token list.
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
    pub rowspan: usize,
    pub colspan: usize,
    pub content: String,
    #[serde(default)]
    pub header: bool,
}

/// A table as cells tiling a `rows x cols` grid, sorted row-major by anchor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TableGrid {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Cell>,
}

impl TableGrid {
    /// Checks that the cells cover every slot exactly once.
    pub fn check_tiling(&self) -> Result<()> {
        let mut owner = vec![false; self.rows * self.cols];
        for c in &self.cells {
            if c.rowspan == 0 || c.colspan == 0 || c.row + c.rowspan > self.rows || c.col + c.colspan > self.cols {
                return Err(Error::InvalidOtsl(format!("cell at ({}, {}) exceeds the grid", c.row, c.col)));
            }
            for r in c.row..c.row + c.rowspan {
                for k in c.col..c.col + c.colspan {
                    if std::mem::replace(&mut owner[r * self.cols + k], true) {
                        return Err(Error::InvalidOtsl(format!("slot ({r}, {k}) covered twice")));
                    }
                }
            }
        }
        if let Some(i) = owner.iter().position(|o| !o) {
            return Err(Error::InvalidOtsl(format!("slot ({}, {}) not covered", i / self.cols, i % self.cols)));
        }
        Ok(())
    }

    fn sort_cells(&mut self) {
        self.cells.sort_by_key(|c| (c.row, c.col));
    }
}

/// Splits tokens into rows of (token index, token), dropping `nl`.
/// Returns the trailing unterminated row separately.
fn split_rows(tokens: &[OtslToken]) -> (Vec<Vec<(usize, &OtslToken)>>, Vec<(usize, &OtslToken)>) {
    let mut rows = Vec::new();
    let mut current = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if *tok == OtslToken::Nl {
            rows.push(std::mem::take(&mut current));
        } else {
            current.push((i, tok));
        }
    }
    (rows, current)
}

/// Every grammar violation in `seq`. An empty sequence is a valid
/// zero-row table.
pub fn validate(seq: &OtslSequence) -> std::result::Result<(), Vec<Violation>> {
    let violations = check(seq).1;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

fn check(seq: &OtslSequence) -> (Option<TableGrid>, Vec<Violation>) {
    let mut v = Vec::new();
    let (rows, tail) = split_rows(&seq.tokens);
    if let Some(&(i, _)) = tail.first() {
        v.push(Violation {
            index: i,
            message: format!("unterminated row starting at index {i}"),
        });
    }
    let width = rows.first().map_or(0, Vec::len);
    for row in rows.iter().skip(1) {
        if row.len() != width {
            let index = row.first().map_or(0, |t| t.0);
            v.push(Violation {
                index,
                message: format!("ragged row at index {index}: {} slots, expected {width}", row.len()),
            });
        }
    }
    if rows.iter().any(|r| r.is_empty()) {
        let index = rows
            .iter()
            .zip(split_nl_indices(&seq.tokens))
            .find(|(r, _)| r.is_empty())
            .map_or(0, |(_, nl)| nl);
        v.push(Violation {
            index,
            message: format!("empty row at index {index}"),
        });
    }

    let at = |r: usize, c: usize| rows.get(r).and_then(|row| row.get(c)).map(|t| t.1);
    for (r, row) in rows.iter().enumerate() {
        for (c, &(i, tok)) in row.iter().enumerate() {
            let name = tok.name().to_ascii_uppercase();
            if matches!(tok, OtslToken::Ucel | OtslToken::Xcel) && r == 0 {
                v.push(Violation {
                    index: i,
                    message: format!("{name} in first row at index {i}"),
                });
            }
            if matches!(tok, OtslToken::Lcel | OtslToken::Xcel) && c == 0 {
                v.push(Violation {
                    index: i,
                    message: format!("{name} at start of row at index {i}"),
                });
            }
            let left = c.checked_sub(1).and_then(|k| at(r, k));
            let up = r.checked_sub(1).and_then(|k| at(k, c));
            match tok {
                OtslToken::Lcel => {
                    if let Some(l) = left {
                        if !(l.opens_cell() || *l == OtslToken::Lcel) {
                            v.push(Violation {
                                index: i,
                                message: format!("LCEL at index {i} has {} on its left", l.name()),
                            });
                        }
                    }
                }
                OtslToken::Ucel => {
                    if let Some(u) = up {
                        if !(u.opens_cell() || *u == OtslToken::Ucel) {
                            v.push(Violation {
                                index: i,
                                message: format!("UCEL at index {i} has {} above it", u.name()),
                            });
                        }
                    }
                }
                OtslToken::Xcel => {
                    let left_ok = left.is_none_or(|l| matches!(l, OtslToken::Xcel | OtslToken::Ucel));
                    let up_ok = up.is_none_or(|u| matches!(u, OtslToken::Xcel | OtslToken::Lcel));
                    if !(left_ok && up_ok) {
                        v.push(Violation {
                            index: i,
                            message: format!("XCEL at index {i} is not inside a merged block"),
                        });
                    }
                }
                _ => {}
            }
        }
    }
    if !v.is_empty() {
        return (None, v);
    }
    match tile(&rows, width) {
        Ok(grid) => (Some(grid), v),
        Err(violation) => {
            v.push(violation);
            (None, v)
        }
    }
}

fn split_nl_indices(tokens: &[OtslToken]) -> impl Iterator<Item = usize> + '_ {
    tokens.iter().enumerate().filter(|(_, t)| **t == OtslToken::Nl).map(|(i, _)| i)
}

/// Resolves merges into spans; fails on any non-rectangular merge.
fn tile(rows: &[Vec<(usize, &OtslToken)>], width: usize) -> std::result::Result<TableGrid, Violation> {
    let height = rows.len();
    let mut owned = vec![false; height * width];
    let mut cells = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let (index, tok) = rows[r][c];
            if !tok.opens_cell() {
                if !owned[r * width + c] {
                    return Err(Violation {
                        index,
                        message: format!("{} at index {index} does not extend any cell", tok.name().to_ascii_uppercase()),
                    });
                }
                continue;
            }
            let colspan = 1 + rows[r][c + 1..].iter().take_while(|t| *t.1 == OtslToken::Lcel).count();
            let rowspan = 1 + rows[r + 1..].iter().take_while(|row| *row[c].1 == OtslToken::Ucel).count();
            for rr in r..r + rowspan {
                for cc in c..c + colspan {
                    let expected = match (rr == r, cc == c) {
                        (true, true) => None,
                        (true, false) => Some(OtslToken::Lcel),
                        (false, true) => Some(OtslToken::Ucel),
                        (false, false) => Some(OtslToken::Xcel),
                    };
                    let (i, actual) = rows[rr][cc];
                    if expected.as_ref().is_some_and(|e| e != actual) || owned[rr * width + cc] {
                        return Err(Violation {
                            index: i,
                            message: format!("non-rectangular span at index {i}"),
                        });
                    }
                    owned[rr * width + cc] = true;
                }
            }
            let content = match tok {
                OtslToken::Fcel(Some(text)) => text.clone(),
                _ => String::new(),
            };
            cells.push(Cell {
                row: r,
                col: c,
                rowspan,
                colspan,
                content,
                header: false,
            });
        }
    }
    Ok(TableGrid {
        rows: height,
        cols: width,
        cells,
    })
}

pub fn otsl_to_grid(seq: &OtslSequence) -> Result<TableGrid> {
    match check(seq) {
        (Some(grid), v) if v.is_empty() => Ok(grid),
        (_, v) => Err(Error::InvalidOtsl(
            v.first().map_or_else(|| "invalid sequence".to_string(), |x| x.message.clone()),
        )),
    }
}

/// Inverse of [`otsl_to_grid`]; empty cells become `ecel`.
pub fn grid_to_otsl(grid: &TableGrid) -> OtslSequence {
    let mut slots = vec![OtslToken::Ecel; grid.rows * grid.cols];
    for cell in &grid.cells {
        for r in cell.row..cell.row + cell.rowspan {
            for c in cell.col..cell.col + cell.colspan {
                slots[r * grid.cols + c] = match (r == cell.row, c == cell.col) {
                    (true, true) if cell.content.is_empty() => OtslToken::Ecel,
                    (true, true) => OtslToken::Fcel(Some(cell.content.clone())),
                    (true, false) => OtslToken::Lcel,
                    (false, true) => OtslToken::Ucel,
                    (false, false) => OtslToken::Xcel,
                };
            }
        }
    }
    let mut tokens = Vec::with_capacity(grid.rows * (grid.cols + 1));
    for row in slots.chunks(grid.cols.max(1)).take(grid.rows) {
        tokens.extend(row.iter().cloned());
        tokens.push(OtslToken::Nl);
    }
    OtslSequence { tokens }
}

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

pub fn grid_to_html(grid: &TableGrid) -> String {
    let mut out = String::from("<table>");
    let mut cells = grid.cells.iter().peekable();
    for r in 0..grid.rows {
        out.push_str("<tr>");
        while let Some(cell) = cells.next_if(|c| c.row == r) {
            let tag = if cell.header { "th" } else { "td" };
            out.push('<');
            out.push_str(tag);
            if cell.rowspan > 1 {
                out.push_str(&format!(" rowspan=\"{}\"", cell.rowspan));
            }
            if cell.colspan > 1 {
                out.push_str(&format!(" colspan=\"{}\"", cell.colspan));
            }
            out.push('>');
            out.push_str(&escape_html(&cell.content));
            out.push_str("</");
            out.push_str(tag);
            out.push('>');
        }
        out.push_str("</tr>");
    }
    out.push_str("</table>");
    out
}

// ---------------------------------------------------------------------------
// HTML table subset

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum HtmlItem {
    Open { name: String, rowspan: usize, colspan: usize },
    Close(String),
    Text(String),
}

/// Tags that may appear inside a cell; they are dropped and their text kept.
const INLINE_TAGS: &[&str] = &["b", "i", "u", "em", "strong", "sup", "sub", "span", "br", "p", "div", "font"];

pub(crate) fn is_inline_tag(name: &str) -> bool {
    INLINE_TAGS.contains(&name)
}

/// Tokenizes HTML into tags (lowercased names, span attributes parsed) and
/// decoded text runs.
pub(crate) fn lex_html(html: &str) -> Result<Vec<HtmlItem>> {
    let mut items = Vec::new();
    let mut rest = html;
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix("<!--") {
            let end = after
                .find("-->")
                .ok_or_else(|| Error::UnsupportedMarkup("unterminated comment".into()))?;
            rest = &after[end + 3..];
            continue;
        }
        if rest.starts_with('<') {
            let end = rest
                .find('>')
                .ok_or_else(|| Error::UnsupportedMarkup("unterminated tag".into()))?;
            let inner = rest[1..end].trim().trim_end_matches('/').trim();
            rest = &rest[end + 1..];
            if let Some(name) = inner.strip_prefix('/') {
                items.push(HtmlItem::Close(name.trim().to_ascii_lowercase()));
                continue;
            }
            if inner.starts_with('!') || inner.starts_with('?') {
                continue;
            }
            let name_end = inner.find(char::is_whitespace).unwrap_or(inner.len());
            let name = inner[..name_end].to_ascii_lowercase();
            let attrs = &inner[name_end..];
            items.push(HtmlItem::Open {
                rowspan: span_attr(attrs, "rowspan")?,
                colspan: span_attr(attrs, "colspan")?,
                name,
            });
            continue;
        }
        let end = rest.find('<').unwrap_or(rest.len());
        items.push(HtmlItem::Text(decode_entities(&rest[..end])));
        rest = &rest[end..];
    }
    Ok(items)
}

fn span_attr(attrs: &str, key: &str) -> Result<usize> {
    let lower = attrs.to_ascii_lowercase();
    let mut search = lower.as_str();
    let mut offset = 0;
    while let Some(pos) = search.find(key) {
        let start = offset + pos;
        let preceded_ok = start == 0 || lower.as_bytes()[start - 1].is_ascii_whitespace();
        let after = lower[start + key.len()..].trim_start();
        if preceded_ok {
            if let Some(value) = after.strip_prefix('=') {
                let value = value.trim_start();
                let value = value.trim_start_matches(['"', '\'']);
                let digits: String = value.chars().take_while(|c| c.is_ascii_digit()).collect();
                let n: usize = digits
                    .parse()
                    .map_err(|_| Error::UnsupportedMarkup(format!("bad {key} value in `{attrs}`")))?;
                return Ok(n.max(1));
            }
        }
        offset = start + key.len();
        search = &lower[offset..];
    }
    Ok(1)
}

fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let Some(semi) = rest[..rest.len().min(12)].find(';') else {
            out.push('&');
            rest = &rest[1..];
            continue;
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some('\u{a0}'),
            e if e.starts_with("#x") || e.starts_with("#X") => u32::from_str_radix(&e[2..], 16).ok().and_then(char::from_u32),
            e if e.starts_with('#') => e[1..].parse().ok().and_then(char::from_u32),
            _ => None,
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Parses a single table (table/thead/tbody/tfoot/tr/td/th with spans)
/// into a tiled grid. Slots left uncovered by ragged rows are filled with
/// empty cells.
pub fn html_to_grid(html: &str) -> Result<TableGrid> {
    struct RawCell {
        rowspan: usize,
        colspan: usize,
        content: String,
        header: bool,
    }
    let mut rows: Vec<Vec<RawCell>> = Vec::new();
    let mut in_table = false;
    let mut done = false;
    let mut cell: Option<RawCell> = None;
    for item in lex_html(html)? {
        match item {
            HtmlItem::Open { name, rowspan, colspan } => match name.as_str() {
                "table" if !in_table && !done => in_table = true,
                "table" => return Err(Error::UnsupportedMarkup("nested or repeated <table>".into())),
                _ if !in_table => return Err(Error::UnsupportedMarkup(format!("<{name}> outside <table>"))),
                "thead" | "tbody" | "tfoot" if cell.is_none() => {}
                "tr" if cell.is_none() => rows.push(Vec::new()),
                "td" | "th" if cell.is_none() => {
                    if rows.is_empty() {
                        rows.push(Vec::new());
                    }
                    cell = Some(RawCell {
                        rowspan,
                        colspan,
                        content: String::new(),
                        header: name == "th",
                    });
                }
                n if cell.is_some() && is_inline_tag(n) => {
                    if n == "br" {
                        if let Some(c) = cell.as_mut() {
                            c.content.push(' ');
                        }
                    }
                }
                n => return Err(Error::UnsupportedMarkup(format!("unexpected <{n}>"))),
            },
            HtmlItem::Close(name) => match name.as_str() {
                "td" | "th" => {
                    if let Some(c) = cell.take() {
                        rows.last_mut().expect("row opened with cell").push(c);
                    }
                }
                "table" => {
                    if let Some(c) = cell.take() {
                        rows.last_mut().expect("row opened with cell").push(c);
                    }
                    in_table = false;
                    done = true;
                }
                "tr" | "thead" | "tbody" | "tfoot" => {
                    if let Some(c) = cell.take() {
                        rows.last_mut().expect("row opened with cell").push(c);
                    }
                }
                n if is_inline_tag(n) => {}
                n => return Err(Error::UnsupportedMarkup(format!("unexpected </{n}>"))),
            },
            HtmlItem::Text(text) => match cell.as_mut() {
                Some(c) => c.content.push_str(&text),
                None if text.trim().is_empty() => {}
                None => return Err(Error::UnsupportedMarkup(format!("text `{}` outside a cell", text.trim()))),
            },
        }
    }
    if !done && !in_table {
        return Err(Error::UnsupportedMarkup("no <table> element".into()));
    }
    if let Some(c) = cell.take() {
        rows.last_mut().expect("row opened with cell").push(c);
    }

    // Standard HTML table layout: each cell takes the next free slot.
    let n_rows = rows.len();
    let mut occupied: Vec<Vec<bool>> = vec![Vec::new(); n_rows];
    let mut cells = Vec::new();
    for (r, row) in rows.into_iter().enumerate() {
        let mut c = 0;
        for raw in row {
            while occupied[r].get(c).copied().unwrap_or(false) {
                c += 1;
            }
            let rowspan = raw.rowspan.min(n_rows - r);
            for rr in r..r + rowspan {
                let line = &mut occupied[rr];
                if line.len() < c + raw.colspan {
                    line.resize(c + raw.colspan, false);
                }
                for slot in &mut line[c..c + raw.colspan] {
                    if std::mem::replace(slot, true) {
                        return Err(Error::UnsupportedMarkup(format!("overlapping cells at row {rr}")));
                    }
                }
            }
            cells.push(Cell {
                row: r,
                col: c,
                rowspan,
                colspan: raw.colspan,
                content: raw.content.trim().to_string(),
                header: raw.header,
            });
            c += raw.colspan;
        }
    }
    let n_cols = occupied.iter().map(Vec::len).max().unwrap_or(0);
    for (r, line) in occupied.iter().enumerate() {
        for c in 0..n_cols {
            if !line.get(c).copied().unwrap_or(false) {
                cells.push(Cell {
                    row: r,
                    col: c,
                    rowspan: 1,
                    colspan: 1,
                    content: String::new(),
                    header: false,
                });
            }
        }
    }
    let mut grid = TableGrid {
        rows: n_rows,
        cols: n_cols,
        cells,
    };
    grid.sort_cells();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use OtslToken::*;

    fn f(s: &str) -> OtslToken {
        Fcel(Some(s.to_string()))
    }

    fn messages(tokens: Vec<OtslToken>) -> Vec<String> {
        validate(&OtslSequence::new(tokens))
            .err()
            .unwrap_or_default()
            .into_iter()
            .map(|v| v.message)
            .collect()
    }

    #[test]
    fn plain_grid_is_valid() {
        assert!(messages(vec![Fcel(None), Fcel(None), Nl, Fcel(None), Fcel(None), Nl]).is_empty());
        assert!(validate(&OtslSequence::default()).is_ok());
    }

    #[test]
    fn ucel_in_first_row() {
        let m = messages(vec![Ucel, Nl]);
        assert!(m.iter().any(|s| s == "UCEL in first row at index 0"), "{m:?}");
    }

    #[test]
    fn ragged_row() {
        let m = messages(vec![Fcel(None), Nl, Fcel(None), Fcel(None), Nl]);
        assert!(m.iter().any(|s| s.starts_with("ragged row")), "{m:?}");
    }

    #[test]
    fn other_rules() {
        assert!(messages(vec![Lcel, Nl]).iter().any(|s| s.contains("LCEL at start of row")));
        assert!(messages(vec![Fcel(None), Nl, Xcel, Nl]).iter().any(|s| s.contains("XCEL at start of row")));
        assert!(messages(vec![Fcel(None), Fcel(None)]).iter().any(|s| s.starts_with("unterminated row")));
        assert!(messages(vec![Fcel(None), Ucel, Nl, Fcel(None), Lcel, Nl])
            .iter()
            .any(|s| s.contains("first row")));
        // L-shaped merge: the anchor spans two columns but only one row below.
        let m = messages(vec![Fcel(None), Lcel, Nl, Ucel, Fcel(None), Nl]);
        assert!(m.iter().any(|s| s.starts_with("non-rectangular span")), "{m:?}");
    }

    #[test]
    fn colspan_resolution() {
        let g = otsl_to_grid(&OtslSequence::new(vec![f("a"), Lcel, Nl, f("b"), f("c"), Nl])).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        assert_eq!(g.cells[0], Cell { row: 0, col: 0, rowspan: 1, colspan: 2, content: "a".into(), header: false });
        assert_eq!(g.cells[1].content, "b");
        assert_eq!((g.cells[2].row, g.cells[2].col), (1, 1));
    }

    #[test]
    fn rowspan_resolution() {
        let g = otsl_to_grid(&OtslSequence::new(vec![f("a"), f("b"), Nl, Ucel, f("c"), Nl])).unwrap();
        assert_eq!(g.cells[0].rowspan, 2);
        assert_eq!(g.cells.len(), 3);
        // And the HTML form of the same table parses back to it.
        let html = "<table><tr><td rowspan=\"2\">a</td><td>b</td></tr><tr><td>c</td></tr></table>";
        assert_eq!(grid_to_html(&g), html);
        assert_eq!(html_to_grid(html).unwrap(), g);
    }

    #[test]
    fn empty_sequence_is_empty_grid() {
        let g = otsl_to_grid(&OtslSequence::default()).unwrap();
        assert_eq!((g.rows, g.cols, g.cells.len()), (0, 0, 0));
        assert_eq!(grid_to_html(&g), "<table></table>");
    }

    #[test]
    fn invalid_sequence_is_an_error() {
        assert!(matches!(otsl_to_grid(&OtslSequence::new(vec![Ucel, Nl])), Err(Error::InvalidOtsl(_))));
    }

    #[test]
    fn html_emission() {
        let one = TableGrid {
            rows: 1,
            cols: 1,
            cells: vec![Cell { row: 0, col: 0, rowspan: 1, colspan: 1, content: "x".into(), header: false }],
        };
        assert_eq!(grid_to_html(&one), "<table><tr><td>x</td></tr></table>");
        let wide = otsl_to_grid(&OtslSequence::new(vec![f("a"), Lcel, Nl])).unwrap();
        assert!(grid_to_html(&wide).contains("colspan=\"2\""));
        let mut esc = one.clone();
        esc.cells[0].content = "a<b".into();
        assert!(grid_to_html(&esc).contains("a&lt;b"));
    }

    #[test]
    fn nested_table_rejected() {
        let html = "<table><tr><td><table><tr><td>x</td></tr></table></td></tr></table>";
        assert!(matches!(html_to_grid(html), Err(Error::UnsupportedMarkup(_))));
        assert!(matches!(html_to_grid("<table><tr><td><img></td></tr></table>"), Err(Error::UnsupportedMarkup(_))));
    }

    #[test]
    fn html_with_sections_and_whitespace() {
        let html = "<table>\n <thead><tr><th>h1</th><th>h2</th></tr></thead>\n <tbody><tr><td>1 &amp; 2</td><td><b>3</b></td></tr></tbody></table>";
        let g = html_to_grid(html).unwrap();
        assert_eq!((g.rows, g.cols), (2, 2));
        assert!(g.cells[0].header);
        assert_eq!(g.cells[2].content, "1 & 2");
        assert_eq!(g.cells[3].content, "3");
    }

    #[test]
    fn text_form_round_trip() {
        let seq = OtslSequence::new(vec![f("a \"q\""), Lcel, Nl, Ecel, f("c"), Nl]);
        let text = seq.to_text(OtslMode::Interleaved);
        assert_eq!(text, "fcel \"a \\\"q\\\"\" lcel nl\necel fcel \"c\" nl");
        assert_eq!(parse_otsl(&text, OtslMode::Interleaved).unwrap(), seq);
        let bare = seq.to_text(OtslMode::StructureOnly);
        assert_eq!(bare, "fcel lcel nl\necel fcel nl");
        assert!(parse_otsl("fcel \"x\" nl", OtslMode::StructureOnly).is_err());
        let err = parse_otsl("fcel nl bogus", OtslMode::Interleaved).unwrap_err().to_string();
        assert!(err.contains("`bogus` at index 2"), "{err}");
    }
}
