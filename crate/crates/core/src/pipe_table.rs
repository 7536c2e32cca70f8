//! Markdown pipe tables: parsing and the canonical rendering.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PipeTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn split_row(line: &str) -> Vec<String> {
    let line = line.trim();
    let line = line.strip_prefix('|').unwrap_or(line);
    let line = if line.ends_with('|') && !line.ends_with("\\|") {
        &line[..line.len() - 1]
    } else {
        line
    };
    let mut cells = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                cur.push_str("\\|");
                chars.next();
            }
            '|' => cells.push(std::mem::take(&mut cur).trim().to_string()),
            c => cur.push(c),
        }
    }
    cells.push(cur.trim().to_string());
    cells
}

fn is_separator(cells: &[String]) -> bool {
    cells.iter().all(|c| {
        let c = c.trim();
        let inner = c.strip_prefix(':').unwrap_or(c);
        let inner = inner.strip_suffix(':').unwrap_or(inner);
        !inner.is_empty() && inner.chars().all(|ch| ch == '-')
    })
}

impl PipeTable {
    /// Parses a pipe table with one header row. The separator row is
    /// optional; blank input is an empty table.
    pub fn parse(text: &str) -> Result<PipeTable> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.is_empty() {
            return Ok(PipeTable::default());
        }
        let mut table = PipeTable::default();
        for (n, line) in lines.iter().enumerate() {
            if !line.contains('|') {
                return Err(Error::ParseFailure(format!("line {} is not a table row: `{line}`", n + 1)));
            }
            let cells = split_row(line);
            if n == 0 {
                table.header = cells;
                continue;
            }
            if n == 1 && is_separator(&cells) {
                if cells.len() != table.header.len() {
                    return Err(Error::ParseFailure("separator width differs from header".into()));
                }
                continue;
            }
            if cells.len() != table.header.len() {
                return Err(Error::ParseFailure(format!(
                    "row {} has {} cells, header has {}",
                    n + 1,
                    cells.len(),
                    table.header.len()
                )));
            }
            table.rows.push(cells);
        }
        Ok(table)
    }

    pub fn is_empty(&self) -> bool {
        self.header.is_empty() && self.rows.is_empty()
    }

    /// `| a | b |` rows with a `| --- |` separator after the header.
    pub fn to_markdown(&self) -> String {
        if self.is_empty() {
            return String::new();
        }
        let render = |cells: &[String]| {
            let mut s = String::from("|");
            for c in cells {
                s.push(' ');
                s.push_str(c);
                s.push_str(" |");
            }
            s
        };
        let mut lines = vec![render(&self.header)];
        lines.push(render(&vec!["---".to_string(); self.header.len()]));
        lines.extend(self.rows.iter().map(|r| render(r)));
        lines.join("\n")
    }
}
