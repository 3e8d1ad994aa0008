//! Witness rendering in the init/term table style: one row per process,
//! one column pair per concurrency-class pair.

use crate::histories::EventKind;
use crate::interval::{ClassKind, IntervalExecution};

/// Renders an interval-sequential execution as a table whose columns
/// alternate `init` (invocations) and `term` (responses).
pub fn render_witness(h: &IntervalExecution, processes: u32) -> String {
    if h.is_empty() {
        return "(empty interval-sequential execution)\n".to_string();
    }
    let cols = h.classes().len();
    let mut cells: Vec<Vec<String>> = vec![vec![String::new(); cols]; processes as usize + 1];
    for (k, class) in h.classes().iter().enumerate() {
        cells[0][k] = match class.kind {
            ClassKind::Invoking => "init".to_string(),
            ClassKind::Responding => "term".to_string(),
        };
        for ev in class.events() {
            let row = ev.process.0 as usize + 1;
            if row >= cells.len() {
                continue;
            }
            cells[row][k] = match ev.kind {
                EventKind::Invocation => format!("{}({})", ev.operation, ev.payload),
                EventKind::Response => format!("resp({})", ev.payload),
            };
        }
    }
    let mut widths = vec![0usize; cols];
    for row in &cells {
        for (k, cell) in row.iter().enumerate() {
            widths[k] = widths[k].max(cell.len());
        }
    }
    let mut out = String::new();
    for (r, row) in cells.iter().enumerate() {
        let label = if r == 0 {
            "  ".to_string()
        } else {
            format!("P{}", r - 1)
        };
        out.push_str(&format!("{label:<4}"));
        for (k, cell) in row.iter().enumerate() {
            out.push_str(&format!("| {:<width$} ", cell, width = widths[k]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::Event;
    use crate::interval::ConcurrencyClass;
    use crate::value::Value;

    #[test]
    fn renders_the_validity_table() {
        let h = IntervalExecution::from_pairs(vec![
            (
                ConcurrencyClass::invoking([
                    Event::inv(0, "v", "validity", Value::Int(1)),
                    Event::inv(1, "v", "validity", Value::Int(2)),
                ])
                .unwrap(),
                ConcurrencyClass::responding([Event::res(0, "v", "validity", Value::Int(2))])
                    .unwrap(),
            ),
            (
                ConcurrencyClass::invoking([Event::inv(2, "v", "validity", Value::Int(3))])
                    .unwrap(),
                ConcurrencyClass::responding([
                    Event::res(1, "v", "validity", Value::Int(3)),
                    Event::res(2, "v", "validity", Value::Int(1)),
                ])
                .unwrap(),
            ),
        ])
        .unwrap();
        let table = render_witness(&h, 3);
        assert!(table.contains("init"));
        assert!(table.contains("term"));
        assert!(table.contains("validity(1)"));
        assert!(table.contains("resp(3)"));
        assert_eq!(table.lines().count(), 4);
    }
}
