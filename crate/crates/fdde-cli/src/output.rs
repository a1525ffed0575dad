//! CSV and JSON assembly for command results.
//!
//! Both writers are deterministic: key order is fixed by construction and
//! floats go through one shared formatter, so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Str(String),
    /// Serialized as an empty CSV field / JSON null.
    Empty,
}

/// One metadata entry.
#[derive(Debug, Clone, PartialEq)]
pub enum MetaValue {
    Num(f64),
    Int(u64),
    Str(&'static str),
    Bool(bool),
}

/// A finished command result: echo of the resolved inputs plus tabular data.
#[derive(Debug, Clone)]
pub struct Output {
    pub meta: Vec<(&'static str, MetaValue)>,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
    /// Extra `# ` comment lines placed above the CSV header.
    pub csv_preamble: Vec<String>,
}

/// Formats a float with 17 significant digits so that parsing the text
/// recovers the original bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn escape_json(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
}

impl Output {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for line in &self.csv_preamble {
            s.push_str("# ");
            s.push_str(line);
            s.push('\n');
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                match cell {
                    Cell::Num(v) => s.push_str(&fmt_f64(*v)),
                    Cell::Int(n) => {
                        let _ = write!(s, "{n}");
                    }
                    Cell::Str(t) => s.push_str(t),
                    Cell::Empty => {}
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\"meta\":{");
        for (i, (key, value)) in self.meta.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "\"{key}\":");
            match value {
                MetaValue::Num(v) => s.push_str(&fmt_f64(*v)),
                MetaValue::Int(n) => {
                    let _ = write!(s, "{n}");
                }
                MetaValue::Str(t) => {
                    s.push('"');
                    escape_json(t, &mut s);
                    s.push('"');
                }
                MetaValue::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
            }
        }
        s.push_str("},\"data\":[");
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('{');
            for (j, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    s.push(',');
                }
                let _ = write!(s, "\"{name}\":");
                match cell {
                    Cell::Num(v) => s.push_str(&fmt_f64(*v)),
                    Cell::Int(n) => {
                        let _ = write!(s, "{n}");
                    }
                    Cell::Str(t) => {
                        s.push('"');
                        escape_json(t, &mut s);
                        s.push('"');
                    }
                    Cell::Empty => s.push_str("null"),
                }
            }
            s.push('}');
        }
        s.push_str("]}\n");
        s
    }
}

/// Single-line JSON diagnostic for standard error.
pub fn diagnostic_line(class: &str, message: &str) -> String {
    let mut s = String::from("{\"error\":\"");
    escape_json(class, &mut s);
    s.push_str("\",\"message\":\"");
    escape_json(message, &mut s);
    s.push_str("\"}");
    s
}
