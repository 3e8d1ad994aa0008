//! The on-disk task format: INPUTS and OUTPUTS sections list facets, a
//! DELTA section maps each input simplex to its image facets.
//!
//! ```text
//! INPUTS
//! {(0,0),(1,1)}
//! OUTPUTS
//! {(0,{0,1}),(1,{0,1})}
//! DELTA
//! {(0,0)} -> {(0,{0})}
//! {(0,0),(1,1)} -> {(0,{0,1}),(1,{0,1})}; {(0,{0}),(1,{0,1})}
//! ```
//!
//! Refined tasks decorate output vertices as `(0,{0,1}|{(0,0),(1,1)})`.
//! Comments start with `#`. Printing is canonical (sorted), so
//! `parse . print` is the identity.

use std::collections::BTreeMap;

use crate::task::{Complex, Simplex, Task, TaskError, Vertex};
use crate::value::Value;

pub fn print_task(task: &Task) -> String {
    let mut out = String::new();
    out.push_str("INPUTS\n");
    for f in task.inputs.facets() {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out.push_str("OUTPUTS\n");
    for f in task.outputs.facets() {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out.push_str("DELTA\n");
    for (s, image) in task.delta_map() {
        out.push_str(&s.to_string());
        out.push_str(" ->");
        let facets: Vec<String> = image.facets().map(|f| f.to_string()).collect();
        if !facets.is_empty() {
            out.push(' ');
            out.push_str(&facets.join("; "));
        }
        out.push('\n');
    }
    out
}

pub fn parse_task(text: &str) -> Result<Task, TaskError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Inputs,
        Outputs,
        Delta,
    }
    let mut section = Section::None;
    let mut inputs: Vec<Simplex> = Vec::new();
    let mut outputs: Vec<Simplex> = Vec::new();
    let mut delta: BTreeMap<Simplex, Complex> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| TaskError::Parse {
            line: lineno + 1,
            reason,
        };
        match line {
            "INPUTS" => {
                section = Section::Inputs;
                continue;
            }
            "OUTPUTS" => {
                section = Section::Outputs;
                continue;
            }
            "DELTA" => {
                section = Section::Delta;
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => return Err(err("content before any section header".into())),
            Section::Inputs => inputs.push(parse_simplex(line).map_err(err)?),
            Section::Outputs => outputs.push(parse_simplex(line).map_err(err)?),
            Section::Delta => {
                let (key, rest) = line
                    .split_once("->")
                    .ok_or_else(|| err("DELTA line needs '->'".into()))?;
                let key = parse_simplex(key.trim()).map_err(err)?;
                let mut facets = Vec::new();
                for part in split_top_level(rest.trim(), ';') {
                    let part = part.trim();
                    if !part.is_empty() {
                        facets.push(parse_simplex(part).map_err(err)?);
                    }
                }
                delta.insert(key, Complex::from_facets(facets));
            }
        }
    }
    Ok(Task::new(
        Complex::from_facets(inputs),
        Complex::from_facets(outputs),
        delta,
    ))
}

/// Parses `{(i,v),...}`, with optional `|{view}` decorations per vertex.
pub fn parse_simplex(text: &str) -> Result<Simplex, String> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| format!("simplex must be braced: '{text}'"))?;
    let mut vertices = Vec::new();
    for part in split_top_level(inner, ',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        vertices.push(parse_vertex(part)?);
    }
    Simplex::new(vertices).map_err(|e| e.to_string())
}

fn parse_vertex(text: &str) -> Result<Vertex, String> {
    let inner = text
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| format!("vertex must be parenthesized: '{text}'"))?;
    let parts = split_top_level(inner, ',');
    let (pid_text, rest) = parts
        .split_first()
        .ok_or_else(|| format!("empty vertex '{text}'"))?;
    let pid: u32 = pid_text
        .trim()
        .parse()
        .map_err(|_| format!("bad process id '{pid_text}'"))?;
    let rest = rest.join(",");
    let halves = split_top_level(&rest, '|');
    match halves.len() {
        1 => Ok(Vertex::new(pid, Value::parse(halves[0].trim())?)),
        2 => {
            let value = Value::parse(halves[0].trim())?;
            let view = parse_simplex(halves[1].trim())?;
            Ok(Vertex::with_view(pid, value, view))
        }
        _ => Err(format!("vertex '{text}' has more than one '|'")),
    }
}

// Splits at `sep` occurrences not nested inside {}, (), [].
fn split_top_level(text: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '{' | '(' | '[' => {
                depth += 1;
                cur.push(c);
            }
            '}' | ')' | ']' => {
                depth -= 1;
                cur.push(c);
            }
            c if c == sep && depth == 0 => {
                parts.push(std::mem::take(&mut cur));
            }
            c => cur.push(c),
        }
    }
    parts.push(cur);
    parts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::{builtin_task, TaskId};

    #[test]
    fn round_trips_builtin_tasks() {
        for id in [
            TaskId::new("validity", 2),
            TaskId::new("immediate_snapshot", 2),
            TaskId::new("k_set_agreement", 2).with_k(1),
        ] {
            let t = builtin_task(&id).unwrap();
            let text = print_task(&t);
            let t2 = parse_task(&text).unwrap();
            assert_eq!(t.inputs, t2.inputs, "{id:?}");
            assert_eq!(t.outputs, t2.outputs, "{id:?}");
            assert_eq!(t.delta_map(), t2.delta_map(), "{id:?}");
            assert_eq!(print_task(&t2), text, "{id:?}");
        }
    }

    #[test]
    fn round_trips_refined_tasks() {
        use crate::bridges::object_to_refined_task;
        use crate::objects::{builtin_spec, BuiltinObjectId};
        let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", 2)).unwrap();
        let t = object_to_refined_task(&spec, 4, 1_000_000).unwrap();
        let text = print_task(&t);
        let t2 = parse_task(&text).unwrap();
        assert!(t2.refined);
        assert_eq!(t.delta_map(), t2.delta_map());
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_task("{(0,0)}\n").is_err()); // no section header
        assert!(parse_task("INPUTS\n(0,0)\n").is_err()); // not a simplex
        assert!(parse_task("INPUTS\n{(0,0)}\nDELTA\n{(0,0)}\n").is_err()); // no arrow
    }
}
