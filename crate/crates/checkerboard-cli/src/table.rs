//! In-memory result tables and their two renderings. CSV is the canonical
//! form: no timestamps, floats always printed as {:.16e} (17 significant
//! digits), so identical configs give byte-identical files. JSON mirrors the
//! same cells under a metadata header that carries the run context.

use serde_json::json;

pub enum Cell {
    Int(i64),
    Uint(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Uint(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(v) => {
                debug_assert!(!v.contains(',') && !v.contains('\n'));
                v.clone()
            }
            Cell::Empty => String::new(),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, meta: &Metadata) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|row| row.iter().map(Cell::render).collect())
            .collect();
        let doc = json!({
            "metadata": {
                "version": meta.version,
                "command": meta.command,
                "seed": meta.seed,
                "samples": meta.samples,
                "wall_ms": meta.wall_ms,
            },
            "columns": self.columns,
            "rows": rows,
        });
        let mut out = serde_json::to_string_pretty(&doc).expect("tables are plain data");
        out.push('\n');
        out
    }
}

pub struct Metadata {
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub wall_ms: u128,
}
