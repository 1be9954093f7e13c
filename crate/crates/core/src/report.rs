//! Tabular export of experiment results.
//!
//! Every result is first flattened into a [`Table`]; CSV and JSON are both
//! rendered from that table, so the two formats always carry the same
//! values. Floats are written with 9 significant digits.

use serde_json::{json, Map, Value};

use crate::experiments::{EntropyResult, SweepResult, SweepRow, TrainTrace};
use crate::losses::{LossKind, PdeKind};

pub const SWEEP_HEADER: [&str; 9] = [
    "experiment",
    "n",
    "layers",
    "config",
    "pde",
    "mean_variance",
    "stderr_of_mean",
    "K",
    "seed",
];
pub const PER_PARAM_HEADER: [&str; 8] = [
    "experiment",
    "n",
    "layers",
    "config",
    "param_index",
    "variance",
    "K",
    "seed",
];
pub const ENTROPY_HEADER: [&str; 8] = [
    "experiment",
    "n",
    "layers",
    "topology",
    "mean_entropy_bits",
    "ratio_to_max",
    "K",
    "seed",
];
pub const TRACE_HEADER: [&str; 9] = [
    "experiment",
    "config",
    "n",
    "layers",
    "epoch",
    "loss",
    "grad_norm",
    "learning_rate",
    "seed",
];
pub const REFERENCE_HEADER: [&str; 2] = ["n", "reference"];

/// `x` with 9 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// `x` rounded to the precision written by [`format_float`].
pub fn round_float(x: f64) -> f64 {
    format_float(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Str(String),
    Int(u64),
    Float(f64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format_float(*x),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Str(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Float(x) => json!(round_float(*x)),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<&str>> for Cell {
    fn from(v: Option<&str>) -> Self {
        v.map_or(Cell::Empty, Cell::from)
    }
}

/// Header plus rows of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-delimited, header first, LF line endings.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// `{"experiment": ..., "config": ..., "rows": [...]}`.
    pub fn to_json(&self, experiment: &str, config: &Value) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.to_string(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({
            "experiment": experiment,
            "config": config,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON values always serialise");
        s.push('\n');
        s
    }
}

fn config_rank(name: &str) -> usize {
    LossKind::ALL
        .iter()
        .position(|k| k.name() == name)
        .unwrap_or(usize::MAX)
}

fn pde_rank(pde: Option<&str>) -> usize {
    match pde {
        None => 0,
        Some(p) => 1 + PdeKind::all()
            .iter()
            .position(|k| k.name() == p)
            .unwrap_or(usize::MAX - 1),
    }
}

fn sorted_rows(result: &SweepResult) -> Vec<&SweepRow> {
    let mut rows: Vec<&SweepRow> = result.rows.iter().collect();
    rows.sort_by_key(|r| (r.n, r.layers, config_rank(&r.config), pde_rank(r.pde.as_deref())));
    rows
}

/// One row per cell, sorted by `(n, layers, config)`.
pub fn sweep_table(result: &SweepResult) -> Table {
    let mut t = Table::new(&SWEEP_HEADER);
    for r in sorted_rows(result) {
        t.push(vec![
            result.experiment.as_str().into(),
            r.n.into(),
            r.layers.into(),
            r.config.as_str().into(),
            r.pde.as_deref().into(),
            r.mean_variance.into(),
            r.stderr_of_mean.into(),
            r.k.into(),
            r.seed.into(),
        ]);
    }
    t
}

/// Long format: one row per parameter per cell.
pub fn per_param_table(result: &SweepResult) -> Table {
    let mut t = Table::new(&PER_PARAM_HEADER);
    for r in sorted_rows(result) {
        for (j, &v) in r.per_param_variance.iter().enumerate() {
            t.push(vec![
                result.experiment.as_str().into(),
                r.n.into(),
                r.layers.into(),
                r.config.as_str().into(),
                j.into(),
                v.into(),
                r.k.into(),
                r.seed.into(),
            ]);
        }
    }
    t
}

pub fn entropy_table(result: &EntropyResult) -> Table {
    let mut rows: Vec<_> = result.rows.iter().collect();
    rows.sort_by_key(|r| (r.n, r.layers, r.topology));
    let mut t = Table::new(&ENTROPY_HEADER);
    for r in rows {
        t.push(vec![
            result.experiment.as_str().into(),
            r.n.into(),
            r.layers.into(),
            r.topology.name().into(),
            r.mean_entropy_bits.into(),
            r.ratio_to_max.into(),
            r.k.into(),
            r.seed.into(),
        ]);
    }
    t
}

/// All epochs of every trace, traces in configuration order.
pub fn trace_table(traces: &[TrainTrace]) -> Table {
    let mut sorted: Vec<_> = traces.iter().collect();
    sorted.sort_by_key(|t| (t.n, t.layers, config_rank(&t.config)));
    let mut t = Table::new(&TRACE_HEADER);
    for tr in sorted {
        for e in &tr.epochs {
            t.push(vec![
                "converge".into(),
                tr.config.as_str().into(),
                tr.n.into(),
                tr.layers.into(),
                e.epoch.into(),
                e.loss.into(),
                e.grad_norm.into(),
                tr.learning_rate.into(),
                tr.seed.into(),
            ]);
        }
    }
    t
}

/// `2^{-n}` reference scaling through `(ns[0], anchor)`.
pub fn reference_lines(ns: &[usize], anchor: f64) -> Vec<(usize, f64)> {
    let Some(&n0) = ns.first() else {
        return Vec::new();
    };
    ns.iter()
        .map(|&n| (n, anchor * 2f64.powf(-(n as f64 - n0 as f64))))
        .collect()
}

pub fn reference_table(lines: &[(usize, f64)]) -> Table {
    let mut t = Table::new(&REFERENCE_HEADER);
    for &(n, v) in lines {
        t.push(vec![n.into(), v.into()]);
    }
    t
}
