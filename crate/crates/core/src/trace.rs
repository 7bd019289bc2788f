//! Per-evaluation records of a run.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    /// Objective at the individual iterate `w_t`.
    pub f_individual: f64,
    /// Objective at the solver's averaged iterate.
    pub f_averaged: f64,
    /// Percentage of nonzero coordinates in the solver's reported output.
    pub sparsity_pct: f64,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; `t` must increase strictly and sparsity lie in [0, 100].
    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.t <= last.t {
                return Err(Error::Config(format!(
                    "trace rows must have increasing t ({} after {})",
                    row.t, last.t
                )));
            }
        }
        if !(0.0..=100.0).contains(&row.sparsity_pct) {
            return Err(Error::InvalidParameter {
                name: "sparsity_pct",
                value: row.sparsity_pct,
                reason: "must lie in [0, 100]",
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Pointwise mean of traces sharing the same evaluation points.
    pub fn mean(traces: &[Trace]) -> Result<Trace> {
        let Some(first) = traces.first() else {
            return Ok(Trace::new());
        };
        if traces.iter().any(|tr| tr.len() != first.len()) {
            return Err(Error::Config(
                "cannot average traces of different length".into(),
            ));
        }
        let n = traces.len() as f64;
        let mut out = Trace::new();
        for (i, row) in first.rows.iter().enumerate() {
            let mut acc = TraceRow {
                t: row.t,
                f_individual: 0.0,
                f_averaged: 0.0,
                sparsity_pct: 0.0,
                wall_ns: 0,
            };
            let mut wall: u128 = 0;
            for tr in traces {
                let r = &tr.rows[i];
                if r.t != row.t {
                    return Err(Error::Config("traces evaluated at different points".into()));
                }
                acc.f_individual += r.f_individual;
                acc.f_averaged += r.f_averaged;
                acc.sparsity_pct += r.sparsity_pct;
                wall += r.wall_ns as u128;
            }
            acc.f_individual /= n;
            acc.f_averaged /= n;
            acc.sparsity_pct = (acc.sparsity_pct / n).clamp(0.0, 100.0);
            acc.wall_ns = (wall / traces.len() as u128) as u64;
            out.rows.push(acc);
        }
        Ok(out)
    }
}
