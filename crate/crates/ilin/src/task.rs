//! Tasks as chromatic simplicial complexes with carrier maps.
//!
//! A task is a triple (inputs, outputs, Δ): two chromatic complexes and a
//! carrier map assigning each input simplex the subcomplex of outputs the
//! participating processes may produce. An execution satisfies a task when
//! *every prefix* maps its outputs-so-far into Δ of its inputs-so-far —
//! the prefix condition is what rules out histories in which a process
//! "predicts" invocations that have not happened yet.
//!
//! Refined tasks decorate each output vertex with a *set-view*: the input
//! simplex of invocations preceding the response in its shortest covering
//! prefix. Set-views encode object state, which is what makes refined
//! tasks exactly as expressive as one-shot interval-sequential objects.
//!
//! Δ(∅) is the empty complex and the prefix condition is evaluated only
//! where Δ is defined; the empty output simplex is a face of everything.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::histories::{EventKind, Execution, ProcessId};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Vertex {
    pub process: ProcessId,
    pub value: Value,
    /// Set-view of refined-task output vertices.
    pub view: Option<Simplex>,
}

impl Vertex {
    pub fn new(process: u32, value: Value) -> Vertex {
        Vertex {
            process: ProcessId(process),
            value,
            view: None,
        }
    }

    pub fn with_view(process: u32, value: Value, view: Simplex) -> Vertex {
        Vertex {
            process: ProcessId(process),
            value,
            view: Some(view),
        }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.view {
            None => write!(f, "({},{})", self.process.0, self.value),
            Some(v) => write!(f, "({},{}|{})", self.process.0, self.value, v),
        }
    }
}

/// A chromatic set of vertices: process ids are pairwise distinct. The
/// empty simplex stands for "no inputs/outputs yet".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Simplex(BTreeSet<Vertex>);

impl Simplex {
    pub fn empty() -> Simplex {
        Simplex(BTreeSet::new())
    }

    pub fn new<I: IntoIterator<Item = Vertex>>(vertices: I) -> Result<Simplex, TaskError> {
        let set: BTreeSet<Vertex> = vertices.into_iter().collect();
        let ids: BTreeSet<ProcessId> = set.iter().map(|v| v.process).collect();
        if ids.len() != set.len() {
            return Err(TaskError::NotChromatic(format!(
                "{}",
                Simplex(set.clone())
            )));
        }
        Ok(Simplex(set))
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// |s| - 1; the empty simplex has dimension -1.
    pub fn dim(&self) -> i64 {
        self.0.len() as i64 - 1
    }

    pub fn ids(&self) -> BTreeSet<ProcessId> {
        self.0.iter().map(|v| v.process).collect()
    }

    pub fn values(&self) -> BTreeSet<Value> {
        self.0.iter().map(|v| v.value.clone()).collect()
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &Simplex) -> Result<Simplex, TaskError> {
        Simplex::new(self.0.iter().chain(other.0.iter()).cloned())
    }

    pub fn insert(&self, v: Vertex) -> Result<Simplex, TaskError> {
        Simplex::new(self.0.iter().cloned().chain([v]))
    }

    pub fn vertex_of(&self, p: ProcessId) -> Option<&Vertex> {
        self.0.iter().find(|v| v.process == p)
    }

    /// All faces, including the empty one.
    pub fn faces(&self) -> Vec<Simplex> {
        let vs: Vec<&Vertex> = self.0.iter().collect();
        let mut out = Vec::with_capacity(1 << vs.len());
        for mask in 0u32..(1 << vs.len()) {
            let sub: BTreeSet<Vertex> = vs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| (*v).clone())
                .collect();
            out.push(Simplex(sub));
        }
        out
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// A complex stored by its maximal simplexes; faces are implied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Complex {
    facets: BTreeSet<Simplex>,
}

impl Complex {
    pub fn empty() -> Complex {
        Complex {
            facets: BTreeSet::new(),
        }
    }

    /// Builds a complex, dropping empty and non-maximal simplexes.
    pub fn from_facets<I: IntoIterator<Item = Simplex>>(facets: I) -> Complex {
        let raw: BTreeSet<Simplex> = facets.into_iter().filter(|s| !s.is_empty()).collect();
        let facets = raw
            .iter()
            .filter(|s| !raw.iter().any(|t| *s != t && s.is_face_of(t)))
            .cloned()
            .collect();
        Complex { facets }
    }

    pub fn facets(&self) -> impl Iterator<Item = &Simplex> {
        self.facets.iter()
    }

    pub fn facet_count(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn dim(&self) -> i64 {
        self.facets.iter().map(|s| s.dim()).max().unwrap_or(-1)
    }

    /// Pure of dimension `d`: every maximal simplex has dimension `d`.
    pub fn is_pure_of(&self, d: i64) -> bool {
        self.facets.iter().all(|s| s.dim() == d)
    }

    pub fn vertices(&self) -> BTreeSet<Vertex> {
        self.facets
            .iter()
            .flat_map(|s| s.vertices().cloned())
            .collect()
    }

    /// Membership: the empty simplex belongs to every complex.
    pub fn contains(&self, s: &Simplex) -> bool {
        s.is_empty() || self.facets.iter().any(|t| s.is_face_of(t))
    }

    pub fn is_subcomplex_of(&self, other: &Complex) -> bool {
        self.facets.iter().all(|s| other.contains(s))
    }

    /// All simplexes of the complex, the empty one excluded.
    pub fn simplexes(&self) -> Vec<Simplex> {
        let mut all: BTreeSet<Simplex> = BTreeSet::new();
        for facet in &self.facets {
            for face in facet.faces() {
                if !face.is_empty() {
                    all.insert(face);
                }
            }
        }
        all.into_iter().collect()
    }

    pub fn union(&self, other: &Complex) -> Complex {
        Complex::from_facets(self.facets.iter().chain(other.facets.iter()).cloned())
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.facets.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaskError {
    NotChromatic(String),
    /// An event's payload is not a vertex of the task's complexes; carries
    /// the event index.
    UnknownVertex { index: usize },
    NotOneShot,
    BadParams(String),
    Parse { line: usize, reason: String },
}

impl fmt::Display for TaskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskError::NotChromatic(s) => write!(f, "simplex is not chromatic: {s}"),
            TaskError::UnknownVertex { index } => {
                write!(f, "event {index} is not a vertex of the task's complexes")
            }
            TaskError::NotOneShot => write!(f, "task satisfaction needs a one-shot execution"),
            TaskError::BadParams(m) => write!(f, "bad task parameters: {m}"),
            TaskError::Parse { line, reason } => write!(f, "line {line}: {reason}"),
        }
    }
}

impl std::error::Error for TaskError {}

/// A violation found by [`Task::validate`]; violations are data, not
/// errors, so a report can list all of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingDelta { simplex: String },
    NotPure { simplex: String, expected_dim: i64 },
    WrongIds { simplex: String, facet: String },
    NotMonotone { smaller: String, larger: String },
    NotSubcomplex { simplex: String },
    ViewNotContained { simplex: String, vertex: String },
    ViewMissesOwner { vertex: String },
    MixedDecoration,
    InputsNotPure,
    OutputsNotPure,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingDelta { simplex } => write!(f, "Δ undefined on {simplex}"),
            Violation::NotPure { simplex, expected_dim } => {
                write!(f, "Δ({simplex}) is not pure of dimension {expected_dim}")
            }
            Violation::WrongIds { simplex, facet } => {
                write!(f, "facet {facet} of Δ({simplex}) does not carry the same ids")
            }
            Violation::NotMonotone { smaller, larger } => {
                write!(f, "Δ({smaller}) is not contained in Δ({larger})")
            }
            Violation::NotSubcomplex { simplex } => {
                write!(f, "Δ({simplex}) is not a subcomplex of the outputs")
            }
            Violation::ViewNotContained { simplex, vertex } => {
                write!(f, "set-view of {vertex} in Δ({simplex}) is not contained in {simplex}")
            }
            Violation::ViewMissesOwner { vertex } => {
                write!(f, "set-view of {vertex} misses the owner's own invocation")
            }
            Violation::MixedDecoration => {
                write!(f, "refined task with undecorated output vertices")
            }
            Violation::InputsNotPure => write!(f, "input complex is not pure"),
            Violation::OutputsNotPure => write!(f, "output complex is not pure"),
        }
    }
}

/// Verdict of a satisfaction check; on failure, `violating_prefix` is the
/// length of the shortest violating prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TaskVerdict {
    pub satisfied: bool,
    pub violating_prefix: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Task {
    pub inputs: Complex,
    pub outputs: Complex,
    delta: BTreeMap<Simplex, Complex>,
    pub refined: bool,
}

impl Task {
    pub fn new(inputs: Complex, outputs: Complex, delta: BTreeMap<Simplex, Complex>) -> Task {
        let refined = outputs.vertices().iter().any(|v| v.view.is_some());
        Task {
            inputs,
            outputs,
            delta,
            refined,
        }
    }

    /// Builds the carrier map from a facet generator evaluated on every
    /// input simplex; the output complex is the union of the images.
    pub fn from_generator(
        inputs: Complex,
        facets_for: impl Fn(&Simplex) -> Vec<Simplex>,
    ) -> Task {
        let mut delta = BTreeMap::new();
        let mut outputs = Complex::empty();
        for s in inputs.simplexes() {
            let image = Complex::from_facets(facets_for(&s));
            outputs = outputs.union(&image);
            delta.insert(s, image);
        }
        Task::new(inputs, outputs, delta)
    }

    pub fn delta(&self, s: &Simplex) -> Option<&Complex> {
        self.delta.get(s)
    }

    pub fn delta_map(&self) -> &BTreeMap<Simplex, Complex> {
        &self.delta
    }

    /// Checks the carrier-map laws; an empty list means the task is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n_dim = self.inputs.dim();
        if !self.inputs.is_pure_of(n_dim) {
            out.push(Violation::InputsNotPure);
        }
        if !self.outputs.is_pure_of(self.outputs.dim()) {
            out.push(Violation::OutputsNotPure);
        }
        if self.refined {
            let undecorated = self.outputs.vertices().iter().any(|v| v.view.is_none());
            if undecorated {
                out.push(Violation::MixedDecoration);
            }
        }

        let simplexes = self.inputs.simplexes();
        for s in &simplexes {
            let Some(image) = self.delta.get(s) else {
                out.push(Violation::MissingDelta {
                    simplex: s.to_string(),
                });
                continue;
            };
            if !image.is_subcomplex_of(&self.outputs) {
                out.push(Violation::NotSubcomplex {
                    simplex: s.to_string(),
                });
            }
            if !image.is_pure_of(s.dim()) {
                out.push(Violation::NotPure {
                    simplex: s.to_string(),
                    expected_dim: s.dim(),
                });
            }
            for facet in image.facets() {
                if facet.dim() == s.dim() && facet.ids() != s.ids() {
                    out.push(Violation::WrongIds {
                        simplex: s.to_string(),
                        facet: facet.to_string(),
                    });
                }
            }
            if self.refined {
                for facet in image.facets() {
                    for v in facet.vertices() {
                        match &v.view {
                            Some(view) => {
                                if !view.vertices().all(|iv| {
                                    s.vertex_of(iv.process).map(|sv| &sv.value) == Some(&iv.value)
                                }) {
                                    out.push(Violation::ViewNotContained {
                                        simplex: s.to_string(),
                                        vertex: v.to_string(),
                                    });
                                }
                                if view.vertex_of(v.process).is_none() {
                                    out.push(Violation::ViewMissesOwner {
                                        vertex: v.to_string(),
                                    });
                                }
                            }
                            None => out.push(Violation::MixedDecoration),
                        }
                    }
                }
            }
        }

        // monotonicity over all comparable pairs
        for s in &simplexes {
            for t in &simplexes {
                if s != t && s.is_face_of(t) {
                    if let (Some(ds), Some(dt)) = (self.delta.get(s), self.delta.get(t)) {
                        if !ds.is_subcomplex_of(dt) {
                            out.push(Violation::NotMonotone {
                                smaller: s.to_string(),
                                larger: t.to_string(),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Satisfaction by prefixes: for every prefix E', the outputs of E'
    /// form a simplex of Δ(inputs of E').
    pub fn satisfies(&self, e: &Execution) -> Result<TaskVerdict, TaskError> {
        self.satisfy_inner(e, false)
    }

    /// Refined satisfaction: each response is decorated with the input
    /// simplex of its shortest covering prefix before the membership test.
    pub fn satisfies_refined(&self, e: &Execution) -> Result<TaskVerdict, TaskError> {
        self.satisfy_inner(e, true)
    }

    fn satisfy_inner(&self, e: &Execution, refined: bool) -> Result<TaskVerdict, TaskError> {
        if e.processes()
            .iter()
            .any(|p| e.project_process(*p).events().iter().filter(|ev| ev.is_invocation()).count() > 1)
        {
            return Err(TaskError::NotOneShot);
        }
        let input_vertices = self.inputs.vertices();
        let output_values: BTreeSet<(ProcessId, Value)> = self
            .outputs
            .vertices()
            .iter()
            .map(|v| (v.process, v.value.clone()))
            .collect();

        let mut sigma = Simplex::empty();
        let mut tau = Simplex::empty();
        for (i, ev) in e.events().iter().enumerate() {
            match ev.kind {
                EventKind::Invocation => {
                    let v = Vertex::new(ev.process.0, ev.payload.clone());
                    if !input_vertices.contains(&v) {
                        return Err(TaskError::UnknownVertex { index: i });
                    }
                    sigma = sigma.insert(v).expect("well-formed one-shot");
                }
                EventKind::Response => {
                    if !output_values.contains(&(ev.process, ev.payload.clone())) {
                        return Err(TaskError::UnknownVertex { index: i });
                    }
                    let v = if refined {
                        let view = Simplex::new(
                            e.events()[..i]
                                .iter()
                                .filter(|x| x.is_invocation())
                                .map(|x| Vertex::new(x.process.0, x.payload.clone())),
                        )
                        .expect("well-formed one-shot");
                        Vertex::with_view(ev.process.0, ev.payload.clone(), view)
                    } else {
                        Vertex::new(ev.process.0, ev.payload.clone())
                    };
                    tau = tau.insert(v).expect("well-formed one-shot");
                }
            }
            if sigma.is_empty() {
                continue;
            }
            let ok = match self.delta.get(&sigma) {
                Some(image) => image.contains(&tau),
                None => false,
            };
            if !ok {
                return Ok(TaskVerdict {
                    satisfied: false,
                    violating_prefix: Some(i + 1),
                });
            }
        }
        Ok(TaskVerdict {
            satisfied: true,
            violating_prefix: None,
        })
    }
}

/// The pseudosphere complex induced by `values`: one vertex `(p, x)` for
/// every process and value, with every properly-colored subset a simplex.
pub fn pseudosphere(values: &[Value], procs: &[ProcessId]) -> Complex {
    let mut facets = vec![Simplex::empty()];
    for p in procs {
        let mut next = Vec::new();
        for f in &facets {
            for x in values {
                next.push(
                    f.insert(Vertex::new(p.0, x.clone()))
                        .expect("distinct processes"),
                );
            }
        }
        facets = next;
    }
    Complex::from_facets(facets)
}

/// Name and parameters of a built-in task (e.g. `immediate_snapshot:n=3`,
/// `k_set_agreement:n=2,k=1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskId {
    pub name: String,
    pub n: u32,
    pub k: Option<u32>,
    pub universe: Option<Vec<Value>>,
}

impl TaskId {
    pub fn new(name: &str, n: u32) -> TaskId {
        TaskId {
            name: name.to_string(),
            n,
            k: None,
            universe: None,
        }
    }

    pub fn with_k(mut self, k: u32) -> TaskId {
        self.k = Some(k);
        self
    }

    pub fn with_universe<I: IntoIterator<Item = Value>>(mut self, u: I) -> TaskId {
        self.universe = Some(u.into_iter().collect());
        self
    }

    pub fn parse(text: &str) -> Result<TaskId, TaskError> {
        let (name, params) = match text.split_once(':') {
            Some((n, p)) => (n, p),
            None => (text, ""),
        };
        let mut id = TaskId::new(name, 0);
        let mut have_n = false;
        for kv in params.split(',').filter(|s| !s.is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| TaskError::BadParams(format!("expected key=value, got '{kv}'")))?;
            match key {
                "n" => {
                    id.n = val
                        .parse()
                        .map_err(|_| TaskError::BadParams(format!("bad n '{val}'")))?;
                    have_n = true;
                }
                "k" => {
                    id.k = Some(
                        val.parse()
                            .map_err(|_| TaskError::BadParams(format!("bad k '{val}'")))?,
                    )
                }
                "U" => {
                    let mut u = Vec::new();
                    for item in val.split('|') {
                        u.push(Value::parse(item).map_err(TaskError::BadParams)?);
                    }
                    id.universe = Some(u);
                }
                other => return Err(TaskError::BadParams(format!("unknown parameter '{other}'"))),
            }
        }
        if !have_n {
            return Err(TaskError::BadParams(format!("task '{name}' needs n=<processes>")));
        }
        Ok(id)
    }

    fn universe_or_indices(&self) -> Vec<Value> {
        match &self.universe {
            Some(u) => u.clone(),
            None => (0..self.n as i64).map(Value::Int).collect(),
        }
    }
}

/// Builds a validated built-in task.
pub fn builtin_task(id: &TaskId) -> Result<Task, TaskError> {
    if id.n < 1 {
        return Err(TaskError::BadParams("n must be at least 1".into()));
    }
    let procs: Vec<ProcessId> = (0..id.n).map(ProcessId).collect();
    let task = match id.name.as_str() {
        "validity" => {
            let u = id.universe_or_indices();
            let inputs = pseudosphere(&u, &procs);
            Task::from_generator(inputs, |s| {
                let vals: Vec<Value> = s.values().into_iter().collect();
                let ids: Vec<ProcessId> = s.ids().into_iter().collect();
                pseudosphere(&vals, &ids).facets().cloned().collect()
            })
        }
        "write_snapshot" => snapshot_task(id.n, false),
        "immediate_snapshot" => snapshot_task(id.n, true),
        "k_set_agreement" => {
            let k = id
                .k
                .ok_or_else(|| TaskError::BadParams("k_set_agreement needs k".into()))?;
            if k < 1 {
                return Err(TaskError::BadParams("k must be at least 1".into()));
            }
            let u = id.universe_or_indices();
            let inputs = pseudosphere(&u, &procs);
            Task::from_generator(inputs, move |s| {
                let vals: Vec<Value> = s.values().into_iter().collect();
                let ids: Vec<ProcessId> = s.ids().into_iter().collect();
                pseudosphere(&vals, &ids)
                    .facets()
                    .filter(|f| f.values().len() <= k as usize)
                    .cloned()
                    .collect()
            })
        }
        other => return Err(TaskError::BadParams(format!("unknown task '{other}'"))),
    };
    Ok(task)
}

// Output facets over the participants of `s`: self-inclusive set values,
// pairwise ordered by containment; immediacy additionally forces equality
// when two processes see each other.
fn snapshot_task(n: u32, immediate: bool) -> Task {
    let procs: Vec<ProcessId> = (0..n).map(ProcessId).collect();
    let full = Simplex::new(
        procs
            .iter()
            .map(|p| Vertex::new(p.0, Value::Int(p.0 as i64))),
    )
    .expect("distinct");
    let inputs = Complex::from_facets([full]);
    Task::from_generator(inputs, move |s| {
        let ids: Vec<i64> = s.ids().iter().map(|p| p.0 as i64).collect();
        let mut facets = Vec::new();
        let mut assignment: Vec<BTreeSet<i64>> = Vec::new();
        enumerate_snapshot_outputs(&ids, 0, &mut assignment, &mut facets, immediate);
        facets
    })
}

fn enumerate_snapshot_outputs(
    ids: &[i64],
    k: usize,
    acc: &mut Vec<BTreeSet<i64>>,
    out: &mut Vec<Simplex>,
    immediate: bool,
) {
    if k == ids.len() {
        // pairwise containment (and immediacy when asked)
        for i in 0..acc.len() {
            for j in i + 1..acc.len() {
                let (a, b) = (&acc[i], &acc[j]);
                if !(a.is_subset(b) || b.is_subset(a)) {
                    return;
                }
                if immediate && a.contains(&ids[j]) && b.contains(&ids[i]) && a != b {
                    return;
                }
            }
        }
        out.push(
            Simplex::new(ids.iter().zip(acc.iter()).map(|(i, s)| {
                Vertex::new(*i as u32, Value::int_set(s.iter().copied()))
            }))
            .expect("distinct"),
        );
        return;
    }
    // all subsets of the participants that include the owner
    let universe: Vec<i64> = ids.to_vec();
    let others: Vec<i64> = universe.iter().copied().filter(|x| *x != ids[k]).collect();
    for mask in 0u32..(1 << others.len()) {
        let mut s: BTreeSet<i64> = [ids[k]].into_iter().collect();
        for (i, x) in others.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(*x);
            }
        }
        acc.push(s);
        enumerate_snapshot_outputs(ids, k + 1, acc, out, immediate);
        acc.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(p: u32, x: i64) -> Vertex {
        Vertex::new(p, Value::Int(x))
    }

    fn vs(p: u32, xs: &[i64]) -> Vertex {
        Vertex::new(p, Value::int_set(xs.iter().copied()))
    }

    #[test]
    fn pseudosphere_counts() {
        let procs: Vec<ProcessId> = (0..1).map(ProcessId).collect();
        let u = [Value::Int(0), Value::Int(1)];
        let c = pseudosphere(&u, &procs);
        assert_eq!(c.facet_count(), 2);
        assert!(c.is_pure_of(0));

        let procs: Vec<ProcessId> = (0..2).map(ProcessId).collect();
        let c = pseudosphere(&u, &procs);
        assert_eq!(c.vertices().len(), 4);
        assert_eq!(c.facet_count(), 4); // the 4-cycle

        let procs: Vec<ProcessId> = (0..3).map(ProcessId).collect();
        let u3 = [Value::Int(0), Value::Int(1), Value::Int(2)];
        assert_eq!(pseudosphere(&u3, &procs).facet_count(), 27);
    }

    #[test]
    fn complex_membership_and_normalization() {
        let f = Simplex::new([v(0, 0), v(1, 1)]).unwrap();
        let c = Complex::from_facets([f.clone(), Simplex::new([v(0, 0)]).unwrap()]);
        assert_eq!(c.facet_count(), 1); // the singleton is a face
        assert!(c.contains(&Simplex::new([v(1, 1)]).unwrap()));
        assert!(c.contains(&Simplex::empty()));
        assert!(!c.contains(&Simplex::new([v(1, 7)]).unwrap()));
        assert_eq!(c.simplexes().len(), 3);
    }

    #[test]
    fn simplex_rejects_color_clash() {
        assert!(Simplex::new([v(0, 0), v(0, 1)]).is_err());
    }

    #[test]
    fn builtin_tasks_validate() {
        for id in [
            TaskId::new("validity", 3),
            TaskId::new("write_snapshot", 3),
            TaskId::new("immediate_snapshot", 3),
            TaskId::new("k_set_agreement", 2).with_k(1),
            TaskId::new("validity", 1).with_universe([Value::Int(1)]),
        ] {
            let t = builtin_task(&id).unwrap();
            let violations = t.validate();
            assert!(violations.is_empty(), "{id:?}: {violations:?}");
        }
    }

    #[test]
    fn constructed_monotonicity_violation_is_reported() {
        let full = Simplex::new([v(0, 0), v(1, 1)]).unwrap();
        let inputs = Complex::from_facets([full.clone()]);
        let mut delta = BTreeMap::new();
        // Δ(solo 0) returns something Δ(full) lacks
        delta.insert(
            Simplex::new([v(0, 0)]).unwrap(),
            Complex::from_facets([Simplex::new([vs(0, &[0])]).unwrap()]),
        );
        delta.insert(
            Simplex::new([v(1, 1)]).unwrap(),
            Complex::from_facets([Simplex::new([vs(1, &[1])]).unwrap()]),
        );
        delta.insert(
            full.clone(),
            Complex::from_facets([Simplex::new([vs(0, &[0, 1]), vs(1, &[0, 1])]).unwrap()]),
        );
        let outputs = delta.values().fold(Complex::empty(), |a, b| a.union(b));
        let t = Task::new(inputs, outputs, delta);
        assert!(t
            .validate()
            .iter()
            .any(|viol| matches!(viol, Violation::NotMonotone { .. })));
    }

    #[test]
    fn immediate_snapshot_facets() {
        let t = builtin_task(&TaskId::new("immediate_snapshot", 3)).unwrap();
        let full = Simplex::new([v(0, 0), v(1, 1), v(2, 2)]).unwrap();
        let image = t.delta(&full).unwrap();
        // ordered set partitions of three elements
        assert_eq!(image.facet_count(), 13);
        let central = Simplex::new([
            vs(0, &[0, 1, 2]),
            vs(1, &[0, 1, 2]),
            vs(2, &[0, 1, 2]),
        ])
        .unwrap();
        assert!(image.contains(&central));
        // the boundary-touching facet from a sequential run
        let seq = Simplex::new([vs(0, &[0]), vs(1, &[0, 1]), vs(2, &[0, 1, 2])]).unwrap();
        assert!(image.contains(&seq));
    }

    #[test]
    fn write_snapshot_adds_non_immediate_facet() {
        let ws = builtin_task(&TaskId::new("write_snapshot", 3)).unwrap();
        let is = builtin_task(&TaskId::new("immediate_snapshot", 3)).unwrap();
        let full = Simplex::new([v(0, 0), v(1, 1), v(2, 2)]).unwrap();
        let s = Simplex::new([
            vs(0, &[0, 1]),
            vs(1, &[0, 1, 2]),
            vs(2, &[0, 1, 2]),
        ])
        .unwrap();
        assert!(ws.delta(&full).unwrap().contains(&s));
        assert!(!is.delta(&full).unwrap().contains(&s));

        // self-inclusion and containment hold on every facet
        for facet in ws.delta(&full).unwrap().facets() {
            let sets: Vec<(i64, BTreeSet<i64>)> = facet
                .vertices()
                .map(|vx| {
                    (
                        vx.process.0 as i64,
                        vx.value
                            .as_set()
                            .unwrap()
                            .iter()
                            .map(|x| x.as_int().unwrap())
                            .collect(),
                    )
                })
                .collect();
            for (i, s) in &sets {
                assert!(s.contains(i), "self-inclusion on {facet}");
            }
            for (_, a) in &sets {
                for (_, b) in &sets {
                    assert!(a.is_subset(b) || b.is_subset(a), "containment on {facet}");
                }
            }
        }
    }

    #[test]
    fn k_set_agreement_consensus_like() {
        let t = builtin_task(
            &TaskId::new("k_set_agreement", 2)
                .with_k(1)
                .with_universe([Value::Int(0), Value::Int(1)]),
        )
        .unwrap();
        let full = Simplex::new([v(0, 0), v(1, 1)]).unwrap();
        let image = t.delta(&full).unwrap();
        for facet in image.facets() {
            assert_eq!(facet.values().len(), 1);
        }
        assert_eq!(image.facet_count(), 2);
    }

    #[test]
    fn fig3_history_satisfies_write_snapshot_task() {
        let t = builtin_task(&TaskId::new("write_snapshot", 3)).unwrap();
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0,1}\n\
             P1 res ws.write_snapshot -> {0,1}\n\
             P2 inv ws.write_snapshot(2)\n\
             P2 res ws.write_snapshot -> {0,1,2}\n",
        )
        .unwrap();
        let verdict = t.satisfies(&e).unwrap();
        assert!(verdict.satisfied);
    }

    #[test]
    fn future_predicting_validity_history_fails_with_prefix() {
        let t = builtin_task(
            &TaskId::new("validity", 3).with_universe([Value::Int(1), Value::Int(2), Value::Int(3)]),
        )
        .unwrap();
        let e = Execution::parse(
            "P0 inv v.validity(1)\n\
             P1 inv v.validity(2)\n\
             P0 res v.validity -> 3\n\
             P1 res v.validity -> 3\n\
             P2 inv v.validity(3)\n\
             P2 res v.validity -> 1\n",
        )
        .unwrap();
        let verdict = t.satisfies(&e).unwrap();
        assert!(!verdict.satisfied);
        // the violation surfaces before P2's invocation (event index 4)
        assert_eq!(verdict.violating_prefix, Some(3));
    }

    #[test]
    fn empty_execution_satisfies_anything() {
        let t = builtin_task(&TaskId::new("validity", 2)).unwrap();
        let verdict = t.satisfies(&Execution::empty()).unwrap();
        assert!(verdict.satisfied);
    }

    #[test]
    fn unknown_vertex_is_an_error() {
        let t = builtin_task(&TaskId::new("validity", 2)).unwrap();
        let e = Execution::parse("P0 inv v.validity(99)\n").unwrap();
        assert_eq!(t.satisfies(&e), Err(TaskError::UnknownVertex { index: 0 }));
    }

    #[test]
    fn refined_view_checks() {
        // a two-process refined task where each view must match reality
        let i0 = Vertex::new(0, Value::Int(0));
        let i1 = Vertex::new(1, Value::Int(1));
        let full = Simplex::new([i0.clone(), i1.clone()]).unwrap();
        let solo0 = Simplex::new([i0.clone()]).unwrap();
        let solo1 = Simplex::new([i1.clone()]).unwrap();

        let both = Simplex::new([
            Vertex::with_view(0, Value::int_set([0, 1]), full.clone()),
            Vertex::with_view(1, Value::int_set([0, 1]), full.clone()),
        ])
        .unwrap();
        let seq01 = Simplex::new([
            Vertex::with_view(0, Value::int_set([0]), solo0.clone()),
            Vertex::with_view(1, Value::int_set([0, 1]), full.clone()),
        ])
        .unwrap();
        let seq10 = Simplex::new([
            Vertex::with_view(1, Value::int_set([1]), solo1.clone()),
            Vertex::with_view(0, Value::int_set([0, 1]), full.clone()),
        ])
        .unwrap();
        let mut delta = BTreeMap::new();
        delta.insert(
            solo0.clone(),
            Complex::from_facets([Simplex::new([Vertex::with_view(
                0,
                Value::int_set([0]),
                solo0.clone(),
            )])
            .unwrap()]),
        );
        delta.insert(
            solo1.clone(),
            Complex::from_facets([Simplex::new([Vertex::with_view(
                1,
                Value::int_set([1]),
                solo1.clone(),
            )])
            .unwrap()]),
        );
        delta.insert(full.clone(), Complex::from_facets([both, seq01, seq10]));
        let outputs = delta.values().fold(Complex::empty(), |a, b| a.union(b));
        let t = Task::new(Complex::from_facets([full]), outputs, delta);
        assert!(t.refined);
        assert!(t.validate().is_empty());

        // solo run: view is exactly the owner's invocation
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\nP0 res ws.write_snapshot -> {0}\n",
        )
        .unwrap();
        assert!(t.satisfies_refined(&e).unwrap().satisfied);

        // p's covering prefix contains q's invocation, but the only facet
        // pairing p's output {0} carries view {p}: mismatch
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0}\n\
             P1 res ws.write_snapshot -> {0,1}\n",
        )
        .unwrap();
        let verdict = t.satisfies_refined(&e).unwrap();
        assert!(!verdict.satisfied);
    }

    #[test]
    fn satisfies_rejects_multi_shot() {
        let t = builtin_task(&TaskId::new("validity", 2)).unwrap();
        let e = Execution::parse(
            "P0 inv v.validity(0)\nP0 res v.validity -> 0\nP0 inv v.validity(1)\n",
        )
        .unwrap();
        assert_eq!(t.satisfies(&e), Err(TaskError::NotOneShot));
    }
}
