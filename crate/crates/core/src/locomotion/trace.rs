use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ControllerInput, ControllerInputs, Side};

/// One recorded controller state, effective from `t` until the next row
/// for the same side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub side: Side,
    pub input: ControllerInput,
}

/// Sample-and-hold controller input trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputTrace {
    rows: Vec<TraceRow>,
}

impl InputTrace {
    /// Rows are stably sorted by time; equal timestamps keep their order.
    pub fn new(mut rows: Vec<TraceRow>) -> Self {
        rows.sort_by(|a, b| a.t.total_cmp(&b.t));
        InputTrace { rows }
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    /// Controller state at time `t`; sides without a row yet are neutral.
    pub fn inputs_at(&self, t: f64) -> ControllerInputs {
        let end = self.rows.partition_point(|r| r.t <= t + 1e-9);
        let mut out = ControllerInputs::default();
        let mut seen = [false; 2];
        for row in self.rows[..end].iter().rev() {
            let i = row.side.index();
            if !seen[i] {
                seen[i] = true;
                *out.get_mut(row.side) = row.input;
            }
            if seen == [true, true] {
                break;
            }
        }
        out
    }

    pub fn push(&mut self, t: f64, side: Side, input: ControllerInput) {
        let at = self.rows.partition_point(|r| r.t <= t);
        self.rows.insert(at, TraceRow { t, side, input });
    }
}
