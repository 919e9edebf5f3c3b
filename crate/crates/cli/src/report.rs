//! Report documents rendered either as aligned text or as JSON. Numbers are
//! rounded once, when a cell is created, so both renderings carry the same
//! values.

use std::fmt::Write as _;

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_PRECISION: usize = 4;
pub const MAX_PRECISION: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    /// `None` for non-finite values.
    Number(Option<f64>),
    Integer(i64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    /// Header of the row-label column.
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    Table(Table),
    Note { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub command: String,
    pub precision: usize,
    pub metadata: Vec<Meta>,
    pub blocks: Vec<Block>,
}

impl ReportDocument {
    pub fn new(command: &str, precision: usize) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            precision: precision.min(MAX_PRECISION),
            metadata: Vec::new(),
            blocks: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push(Meta {
            key: key.to_string(),
            value: value.to_string(),
        });
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.blocks.push(Block::Note { text: text.into() });
        self
    }

    pub fn table(&mut self, table: Table) -> &mut Self {
        self.blocks.push(Block::Table(table));
        self
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Table(t) => Some(t),
            Block::Note { .. } => None,
        })
    }

    pub fn notes(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().filter_map(|b| match b {
            Block::Note { text } => Some(text.as_str()),
            Block::Table(_) => None,
        })
    }

    /// Rounded numeric cell at this document's precision.
    pub fn num(&self, v: f64) -> Cell {
        number(v, self.precision)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self, banner: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(b) = banner {
            out.push_str(b);
            out.push('\n');
        }
        let _ = writeln!(out, "command: {}", self.command);
        for m in &self.metadata {
            let _ = writeln!(out, "{}: {}", m.key, m.value);
        }
        for block in &self.blocks {
            out.push('\n');
            match block {
                Block::Note { text } => {
                    out.push_str(text);
                    out.push('\n');
                }
                Block::Table(t) => render_table(&mut out, t, self.precision),
            }
        }
        out
    }
}

pub fn number(v: f64, precision: usize) -> Cell {
    if !v.is_finite() {
        return Cell::Number(None);
    }
    let rounded: f64 = format!("{v:.precision$}").parse().expect("formatted float parses");
    // avoid printing "-0.0000"
    Cell::Number(Some(if rounded == 0.0 { 0.0 } else { rounded }))
}

pub fn format_cell(cell: &Cell, precision: usize) -> String {
    match cell {
        Cell::Number(Some(v)) => format!("{v:.precision$}"),
        Cell::Number(None) => "NA".to_string(),
        Cell::Integer(i) => i.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn render_table(out: &mut String, t: &Table, precision: usize) {
    let _ = writeln!(out, "{}", t.title);
    let body: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            std::iter::once(r.label.clone())
                .chain(r.cells.iter().map(|c| format_cell(c, precision)))
                .collect()
        })
        .collect();
    let header: Vec<String> = std::iter::once(t.corner.clone())
        .chain(t.columns.iter().cloned())
        .collect();
    let ncols = header.len();
    let width = |j: usize| {
        body.iter()
            .filter_map(|r| r.get(j))
            .chain(std::iter::once(&header[j]))
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..ncols).map(width).collect();
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (j, c) in cells.iter().enumerate() {
            let pad = widths[j].saturating_sub(c.chars().count());
            if j == 0 {
                s.push_str(c);
                s.push_str(&" ".repeat(pad));
            } else {
                s.push_str("  ");
                s.push_str(&" ".repeat(pad));
                s.push_str(c);
            }
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&header));
    for r in &body {
        let _ = writeln!(out, "{}", line(r));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_is_shared() {
        let mut doc = ReportDocument::new("x", 4);
        let cell = doc.num(0.55912345);
        assert_eq!(cell, Cell::Number(Some(0.5591)));
        assert_eq!(doc.num(-0.00001), Cell::Number(Some(0.0)));
        assert_eq!(doc.num(f64::NAN), Cell::Number(None));
        doc.table(Table {
            title: "alpha".into(),
            corner: "".into(),
            columns: vec!["z1".into()],
            rows: vec![Row {
                label: "a".into(),
                cells: vec![cell],
            }],
        });
        assert!(doc.to_text(None).contains("0.5591"));
        assert!(doc.to_json().contains("0.5591"));
    }

    #[test]
    fn text_alignment() {
        let mut doc = ReportDocument::new("t", 2);
        let cells = vec![doc.num(1.0), Cell::Integer(12), Cell::Text("yes".into())];
        doc.meta("k", 2).table(Table {
            title: "T".into(),
            corner: "h".into(),
            columns: vec!["a".into(), "bb".into(), "c".into()],
            rows: vec![Row {
                label: "long label".into(),
                cells,
            }],
        });
        let text = doc.to_text(Some("banner"));
        assert_eq!(
            text,
            "banner\ncommand: t\nk: 2\n\nT\nh              a  bb    c\nlong label  1.00  12  yes\n"
        );
    }
}
