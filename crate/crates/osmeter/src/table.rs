//! Lightweight typed column table used for the relational analysis tables
//! (paper/artifact/link) and model input. Columns keep insertion order so
//! CSV output is deterministic.

use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Num(Vec<Option<f64>>),
    Int(Vec<Option<i64>>),
    Bool(Vec<Option<bool>>),
    Str(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Num(v) => v.len(),
            Column::Int(v) => v.len(),
            Column::Bool(v) => v.len(),
            Column::Str(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric view: Int and Bool coerce, Str does not.
    pub fn as_f64(&self, i: usize) -> Option<f64> {
        match self {
            Column::Num(v) => v[i],
            Column::Int(v) => v[i].map(|x| x as f64),
            Column::Bool(v) => v[i].map(|b| if b { 1.0 } else { 0.0 }),
            Column::Str(_) => None,
        }
    }

    /// String view of a cell (canonical encoding, used for categoricals).
    pub fn as_string(&self, i: usize) -> Option<String> {
        match self {
            Column::Num(v) => v[i].map(|x| format!("{x}")),
            Column::Int(v) => v[i].map(|x| x.to_string()),
            Column::Bool(v) => v[i].map(|b| b.to_string()),
            Column::Str(v) => v[i].clone(),
        }
    }

    pub fn is_missing(&self, i: usize) -> bool {
        match self {
            Column::Num(v) => v[i].is_none(),
            Column::Int(v) => v[i].is_none(),
            Column::Bool(v) => v[i].is_none(),
            Column::Str(v) => v[i].is_none(),
        }
    }

    fn cell_str(&self, i: usize) -> String {
        match self {
            Column::Num(v) => v[i].map(|x| format!("{x}")).unwrap_or_default(),
            Column::Int(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
            Column::Bool(v) => v[i].map(|b| b.to_string()).unwrap_or_default(),
            Column::Str(v) => v[i].clone().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    n_rows: usize,
    columns: IndexMap<String, Column>,
}

impl Table {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> impl Iterator<Item = &String> {
        self.columns.keys()
    }

    pub fn push_column(&mut self, name: impl Into<String>, col: Column) -> Result<()> {
        let name = name.into();
        if self.columns.is_empty() {
            self.n_rows = col.len();
        } else if col.len() != self.n_rows {
            return Err(Error::InvalidInput(format!(
                "column {name} has {} rows, table has {}",
                col.len(),
                self.n_rows
            )));
        }
        if self.columns.insert(name.clone(), col).is_some() {
            return Err(Error::InvalidInput(format!("duplicate column {name}")));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .get(name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named {name}")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    /// Keep rows where mask is true; column order preserved.
    pub fn filter(&self, mask: &[bool]) -> Table {
        assert_eq!(mask.len(), self.n_rows);
        let mut out = Table::new();
        for (name, col) in &self.columns {
            let filtered = match col {
                Column::Num(v) => Column::Num(keep(v, mask)),
                Column::Int(v) => Column::Int(keep(v, mask)),
                Column::Bool(v) => Column::Bool(keep(v, mask)),
                Column::Str(v) => Column::Str(keep(v, mask)),
            };
            out.push_column(name.clone(), filtered).unwrap();
        }
        out.n_rows = mask.iter().filter(|&&b| b).count();
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        w.write_record(self.columns.keys()).map_err(|e| csv_err(path, e))?;
        for i in 0..self.n_rows {
            let rec: Vec<String> = self.columns.values().map(|c| c.cell_str(i)).collect();
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Read a CSV with header, inferring each column as bool, numeric, or
    /// string; empty cells are missing.
    pub fn read_csv(path: &Path) -> Result<Table> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
        let headers: Vec<String> = r
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let mut cells: Vec<Vec<Option<String>>> = vec![Vec::new(); headers.len()];
        for record in r.records() {
            let record = record.map_err(|e| csv_err(path, e))?;
            for (j, field) in record.iter().enumerate() {
                if j < cells.len() {
                    cells[j].push(if field.is_empty() {
                        None
                    } else {
                        Some(field.to_string())
                    });
                }
            }
        }
        let mut table = Table::new();
        for (name, col) in headers.into_iter().zip(cells) {
            table.push_column(name, infer_column(col))?;
        }
        Ok(table)
    }
}

fn keep<T: Clone>(v: &[Option<T>], mask: &[bool]) -> Vec<Option<T>> {
    v.iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(x, _)| x.clone())
        .collect()
}

fn infer_column(cells: Vec<Option<String>>) -> Column {
    let non_missing = || cells.iter().flatten();
    if non_missing().count() == 0 {
        return Column::Str(cells);
    }
    if non_missing().all(|s| s == "true" || s == "false") {
        return Column::Bool(cells.iter().map(|c| c.as_deref().map(|s| s == "true")).collect());
    }
    if non_missing().all(|s| s.parse::<i64>().is_ok()) {
        return Column::Int(
            cells
                .iter()
                .map(|c| c.as_deref().map(|s| s.parse().unwrap()))
                .collect(),
        );
    }
    if non_missing().all(|s| s.parse::<f64>().is_ok()) {
        return Column::Num(
            cells
                .iter()
                .map(|c| c.as_deref().map(|s| s.parse().unwrap()))
                .collect(),
        );
    }
    Column::Str(cells)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv {}: {e}", path.display()))
}
