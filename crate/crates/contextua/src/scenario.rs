//! Scenario files.
//!
//! A scenario is a JSON document describing either one system (`"kind":
//! "single"`) or two parties (`"kind": "bipartite"`). Ray coordinates and
//! state entries are real numbers, expression strings such as
//! `"1/sqrt(2)"`, or `[re, im]` pairs of either. Expression strings are kept
//! verbatim so a parsed scenario re-emits the text it was read from.
//!
//! ```json
//! {
//!   "kind": "single",
//!   "name": "qutrit basis",
//!   "metadata": { "source": "standard basis" },
//!   "dim": 3,
//!   "rays": [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
//!   "contexts": [[0, 1, 2]],
//!   "section": [{ "context": 0, "weights": [0.5, 0.25, 0.25] }]
//! }
//! ```
//!
//! Bipartite documents carry `"parties": [{dim, rays, contexts}, ...]`, an
//! optional `"product_contexts": [[left, right], ...]`, an optional `"state"`
//! on the tensor product, and optional `"tables": [{left, right, probs}]`.
//! Context indices always refer to the party's `contexts` list.

use std::collections::BTreeMap;

use contextua_core::bell::{BellScenario, BellSection, CorrelationTable, ProductContext};
use contextua_core::contexts::{generate_poset, Context, ContextPoset, NodeId};
use contextua_core::gleason::ProbSection;
use contextua_core::matrix::{inner, norm};
use contextua_core::opalg::Ray;
use contextua_core::ComplexMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::expr;

/// Rays closer than this (but not equal) are refused.
const NEAR_DUPLICATE_GRID: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

fn err<T>(path: &str, message: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError { path: path.to_string(), message: message.into() })
}

/// A real number as written in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum Real {
    Number(f64),
    Expr { text: String, value: f64 },
}

impl Real {
    pub fn value(&self) -> f64 {
        match self {
            Real::Number(v) => *v,
            Real::Expr { value, .. } => *value,
        }
    }

    fn parse(v: &Value, path: &str) -> Result<Self, ScenarioError> {
        match v {
            Value::Number(n) => match n.as_f64() {
                Some(x) if x.is_finite() => Ok(Real::Number(x)),
                _ => err(path, "number out of range"),
            },
            Value::String(s) => match expr::evaluate(s) {
                Ok(value) => Ok(Real::Expr { text: s.clone(), value }),
                Err(e) => err(path, format!("bad expression '{s}': {e}")),
            },
            _ => err(path, "expected a number or an expression string"),
        }
    }

    fn emit(&self) -> Value {
        match self {
            Real::Number(v) => json!(v),
            Real::Expr { text, .. } => Value::String(text.clone()),
        }
    }
}

/// A complex entry; `im` is `None` for the real shorthand.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub re: Real,
    pub im: Option<Real>,
}

impl Entry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.as_ref().map_or(0.0, Real::value))
    }

    fn parse(v: &Value, path: &str) -> Result<Self, ScenarioError> {
        match v {
            Value::Array(pair) => {
                if pair.len() != 2 {
                    return err(path, "complex entries are [re, im] pairs");
                }
                Ok(Entry {
                    re: Real::parse(&pair[0], &format!("{path}[0]"))?,
                    im: Some(Real::parse(&pair[1], &format!("{path}[1]"))?),
                })
            }
            _ => Ok(Entry { re: Real::parse(v, path)?, im: None }),
        }
    }

    fn emit(&self) -> Value {
        match &self.im {
            None => self.re.emit(),
            Some(im) => json!([self.re.emit(), im.emit()]),
        }
    }
}

/// Rays and the contexts they form, for one system.
#[derive(Debug, Clone, PartialEq)]
pub struct RayCatalog {
    pub dim: usize,
    pub rays: Vec<Vec<Entry>>,
    pub contexts: Vec<Vec<usize>>,
}

impl RayCatalog {
    pub fn ray(&self, i: usize) -> Ray {
        Ray::new(self.rays[i].iter().map(Entry::value).collect()).expect("validated on ingest")
    }

    /// Number of atoms of a context: one per ray, plus the complement when
    /// the rays do not span the space.
    pub fn atom_count(&self, c: usize) -> usize {
        let k = self.contexts[c].len();
        if k < self.dim {
            k + 1
        } else {
            k
        }
    }

    pub fn build_contexts(&self, tol: f64) -> contextua_core::Result<Vec<Context>> {
        self.contexts
            .iter()
            .map(|c| Context::from_rays(&c.iter().map(|&i| self.ray(i)).collect::<Vec<_>>(), tol))
            .collect()
    }

    pub fn poset(&self, tol: f64) -> contextua_core::Result<ContextPoset> {
        generate_poset(self.dim, &self.build_contexts(tol)?, tol)
    }

    /// Number of contexts each ray belongs to.
    pub fn incidence(&self) -> Vec<usize> {
        let mut count = vec![0; self.rays.len()];
        for c in &self.contexts {
            for &i in c {
                count[i] += 1;
            }
        }
        count
    }

    fn parse(obj: &Map<String, Value>, path: &str) -> Result<Self, ScenarioError> {
        let dim = get_usize(obj, "dim", path)?;
        if dim == 0 {
            return err(&format!("{path}.dim"), "dimension must be positive");
        }
        let rays_path = format!("{path}.rays");
        let rays_v = get_array(obj, "rays", path)?;
        let mut rays = Vec::with_capacity(rays_v.len());
        let mut vectors = Vec::with_capacity(rays_v.len());
        for (i, r) in rays_v.iter().enumerate() {
            let rp = format!("{rays_path}[{i}]");
            let Value::Array(entries) = r else { return err(&rp, "a ray is an array of entries") };
            if entries.len() != dim {
                return err(&rp, format!("ray has {} entries, expected {dim}", entries.len()));
            }
            let ray = entries
                .iter()
                .enumerate()
                .map(|(k, e)| Entry::parse(e, &format!("{rp}[{k}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let v: Vec<Complex64> = ray.iter().map(Entry::value).collect();
            let n = norm(&v);
            if n <= 1e-12 {
                return err(&rp, "degenerate ray");
            }
            vectors.push(v.into_iter().map(|z| z / n).collect::<Vec<_>>());
            rays.push(ray);
        }
        for i in 0..vectors.len() {
            for j in 0..i {
                let gap = projector_distance(&vectors[i], &vectors[j]);
                if gap > 1e-12 && gap < NEAR_DUPLICATE_GRID {
                    return err(&format!("{rays_path}[{i}]"), format!("ray {i} nearly duplicates ray {j}"));
                }
            }
        }

        let ctx_path = format!("{path}.contexts");
        let ctx_v = get_array(obj, "contexts", path)?;
        let mut contexts = Vec::with_capacity(ctx_v.len());
        for (c, cv) in ctx_v.iter().enumerate() {
            let cp = format!("{ctx_path}[{c}]");
            let Value::Array(idx) = cv else { return err(&cp, "a context is an array of ray indices") };
            if idx.is_empty() || idx.len() > dim {
                return err(&cp, format!("a context needs between 1 and {dim} rays"));
            }
            let mut list = Vec::with_capacity(idx.len());
            for (k, v) in idx.iter().enumerate() {
                let Some(i) = v.as_u64().map(|i| i as usize) else {
                    return err(&format!("{cp}[{k}]"), "expected a ray index");
                };
                if i >= rays.len() {
                    return err(&format!("{cp}[{k}]"), format!("ray index {i} out of range"));
                }
                if list.contains(&i) {
                    return err(&format!("{cp}[{k}]"), format!("ray {i} repeated"));
                }
                list.push(i);
            }
            for (x, &a) in list.iter().enumerate() {
                for &b in &list[..x] {
                    let overlap = inner(&vectors[a], &vectors[b]).norm();
                    if overlap > 1e-9 {
                        return err(&cp, format!("rays {b} and {a} are not orthogonal (overlap {overlap:e})"));
                    }
                }
            }
            contexts.push(list);
        }
        Ok(Self { dim, rays, contexts })
    }

    fn emit(&self, obj: &mut Map<String, Value>) {
        obj.insert("dim".into(), json!(self.dim));
        obj.insert(
            "rays".into(),
            Value::Array(self.rays.iter().map(|r| Value::Array(r.iter().map(Entry::emit).collect())).collect()),
        );
        obj.insert("contexts".into(), json!(self.contexts));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionEntry {
    pub context: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleScenario {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub catalog: RayCatalog,
    pub state: Option<Vec<Vec<Entry>>>,
    pub section: Option<Vec<SectionEntry>>,
}

impl SingleScenario {
    pub fn state_matrix(&self) -> Option<ComplexMatrix> {
        self.state.as_ref().map(|rows| matrix_of(rows))
    }

    /// The declared section, completed downwards by marginalisation.
    pub fn prob_section(&self, poset: &ContextPoset) -> contextua_core::Result<Option<ProbSection>> {
        let Some(entries) = &self.section else { return Ok(None) };
        let given: BTreeMap<NodeId, Vec<f64>> =
            entries.iter().map(|e| (poset.catalog_nodes()[e.context], e.weights.clone())).collect();
        ProbSection::extend_down(poset, given).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableSpec {
    pub left: usize,
    pub right: usize,
    pub probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteScenario {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub parties: [RayCatalog; 2],
    pub product_contexts: Vec<(usize, usize)>,
    pub state: Option<Vec<Vec<Entry>>>,
    pub tables: Option<Vec<TableSpec>>,
}

impl BipartiteScenario {
    pub fn state_matrix(&self) -> Option<ComplexMatrix> {
        self.state.as_ref().map(|rows| matrix_of(rows))
    }

    pub fn build(&self, tol: f64) -> contextua_core::Result<BellScenario> {
        Ok(BellScenario::new(self.parties[0].poset(tol)?, self.parties[1].poset(tol)?))
    }

    pub fn product_context(&self, sc: &BellScenario, left: usize, right: usize) -> ProductContext {
        ProductContext { left: sc.left.catalog_nodes()[left], right: sc.right.catalog_nodes()[right] }
    }

    /// Listed product contexts, or every pair of catalog contexts.
    pub fn listed_contexts(&self, sc: &BellScenario) -> Vec<ProductContext> {
        if self.product_contexts.is_empty() {
            let (n1, n2) = (self.parties[0].contexts.len(), self.parties[1].contexts.len());
            (0..n1).flat_map(|l| (0..n2).map(move |r| (l, r))).map(|(l, r)| self.product_context(sc, l, r)).collect()
        } else {
            self.product_contexts.iter().map(|&(l, r)| self.product_context(sc, l, r)).collect()
        }
    }

    /// Declared tables, completed downwards by marginalisation.
    pub fn bell_section(&self, sc: &BellScenario) -> contextua_core::Result<Option<BellSection>> {
        let Some(specs) = &self.tables else { return Ok(None) };
        let mut given = BTreeMap::new();
        for t in specs {
            let c = self.product_context(sc, t.left, t.right);
            let rows = t.probs.len();
            let cols = t.probs.first().map_or(0, Vec::len);
            let flat = t.probs.iter().flatten().copied().collect();
            given.insert(c, CorrelationTable::new(c, rows, cols, flat)?);
        }
        BellSection::extend_down(sc, given).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Single(SingleScenario),
    Bipartite(BipartiteScenario),
}

impl Scenario {
    pub fn name(&self) -> &str {
        match self {
            Scenario::Single(s) => &s.name,
            Scenario::Bipartite(b) => &b.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Single(_) => "single",
            Scenario::Bipartite(_) => "bipartite",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), json!(self.kind()));
        match self {
            Scenario::Single(s) => {
                obj.insert("name".into(), json!(s.name));
                obj.insert("metadata".into(), json!(s.metadata));
                s.catalog.emit(&mut obj);
                if let Some(state) = &s.state {
                    obj.insert("state".into(), emit_matrix(state));
                }
                if let Some(section) = &s.section {
                    let list: Vec<Value> =
                        section.iter().map(|e| json!({"context": e.context, "weights": e.weights})).collect();
                    obj.insert("section".into(), Value::Array(list));
                }
            }
            Scenario::Bipartite(b) => {
                obj.insert("name".into(), json!(b.name));
                obj.insert("metadata".into(), json!(b.metadata));
                let parties: Vec<Value> = b
                    .parties
                    .iter()
                    .map(|p| {
                        let mut m = Map::new();
                        p.emit(&mut m);
                        Value::Object(m)
                    })
                    .collect();
                obj.insert("parties".into(), Value::Array(parties));
                let pcs: Vec<Value> = b.product_contexts.iter().map(|&(l, r)| json!([l, r])).collect();
                obj.insert("product_contexts".into(), Value::Array(pcs));
                if let Some(state) = &b.state {
                    obj.insert("state".into(), emit_matrix(state));
                }
                if let Some(tables) = &b.tables {
                    let list: Vec<Value> =
                        tables.iter().map(|t| json!({"left": t.left, "right": t.right, "probs": t.probs})).collect();
                    obj.insert("tables".into(), Value::Array(list));
                }
            }
        }
        Value::Object(obj)
    }

    pub fn to_pretty_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serialisable");
        s.push('\n');
        s
    }
}

/// Max-entry distance between the rank-one projections onto unit vectors.
fn projector_distance(u: &[Complex64], v: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..u.len() {
        for b in 0..u.len() {
            worst = worst.max((u[a] * u[b].conj() - v[a] * v[b].conj()).norm());
        }
    }
    worst
}

fn matrix_of(rows: &[Vec<Entry>]) -> ComplexMatrix {
    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(Entry::value).collect()).collect();
    ComplexMatrix::from_rows(&rows).expect("validated on ingest")
}

fn emit_matrix(rows: &[Vec<Entry>]) -> Value {
    Value::Array(rows.iter().map(|r| Value::Array(r.iter().map(Entry::emit).collect())).collect())
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ScenarioError> {
    obj.get(key).ok_or_else(|| ScenarioError { path: path.to_string(), message: format!("missing field '{key}'") })
}

fn get_array<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Vec<Value>, ScenarioError> {
    match get(obj, key, path)? {
        Value::Array(a) => Ok(a),
        _ => err(&format!("{path}.{key}"), "expected an array"),
    }
}

fn get_usize(obj: &Map<String, Value>, key: &str, path: &str) -> Result<usize, ScenarioError> {
    get(obj, key, path)?.as_u64().map(|v| v as usize).ok_or_else(|| ScenarioError {
        path: format!("{path}.{key}"),
        message: "expected a nonnegative integer".into(),
    })
}

fn get_string(obj: &Map<String, Value>, key: &str, path: &str) -> Result<String, ScenarioError> {
    match obj.get(key) {
        None => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => err(&format!("{path}.{key}"), "expected a string"),
    }
}

fn parse_metadata(obj: &Map<String, Value>) -> Result<BTreeMap<String, String>, ScenarioError> {
    match obj.get("metadata") {
        None => Ok(BTreeMap::new()),
        Some(Value::Object(m)) => m
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => Ok((k.clone(), s.clone())),
                _ => err(&format!("$.metadata.{k}"), "metadata values are strings"),
            })
            .collect(),
        Some(_) => err("$.metadata", "expected an object"),
    }
}

fn parse_matrix(v: &Value, dim: usize, path: &str) -> Result<Vec<Vec<Entry>>, ScenarioError> {
    let Value::Array(rows) = v else { return err(path, "expected a matrix (array of rows)") };
    if rows.len() != dim {
        return err(path, format!("matrix has {} rows, expected {dim}", rows.len()));
    }
    let mut out = Vec::with_capacity(dim);
    for (i, r) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let Value::Array(entries) = r else { return err(&rp, "expected a row") };
        if entries.len() != dim {
            return err(&rp, format!("row has {} entries, expected {dim}", entries.len()));
        }
        out.push(
            entries
                .iter()
                .enumerate()
                .map(|(k, e)| Entry::parse(e, &format!("{rp}[{k}]")))
                .collect::<Result<Vec<_>, _>>()?,
        );
    }
    let m = matrix_of(&out);
    let defect = m.self_adjoint_defect();
    if defect > 1e-9 {
        return err(path, format!("state is not self-adjoint (defect {defect:e})"));
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > 1e-9 * dim as f64 {
        return err(path, format!("state has trace {trace}, expected 1"));
    }
    Ok(out)
}

fn parse_weights(v: &Value, path: &str) -> Result<Vec<f64>, ScenarioError> {
    let Value::Array(ws) = v else { return err(path, "expected an array of numbers") };
    ws.iter().enumerate().map(|(k, w)| Real::parse(w, &format!("{path}[{k}]")).map(|r| r.value())).collect()
}

fn parse_index(v: &Value, limit: usize, path: &str) -> Result<usize, ScenarioError> {
    match v.as_u64() {
        Some(i) if (i as usize) < limit => Ok(i as usize),
        Some(i) => err(path, format!("index {i} out of range (have {limit})")),
        None => err(path, "expected an index"),
    }
}

fn parse_single(obj: &Map<String, Value>) -> Result<SingleScenario, ScenarioError> {
    let catalog = RayCatalog::parse(obj, "$")?;
    let state = obj.get("state").map(|v| parse_matrix(v, catalog.dim, "$.state")).transpose()?;
    let section = match obj.get("section") {
        None => None,
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for (k, item) in items.iter().enumerate() {
                let p = format!("$.section[{k}]");
                let Value::Object(m) = item else { return err(&p, "expected {context, weights}") };
                let context = parse_index(get(m, "context", &p)?, catalog.contexts.len(), &format!("{p}.context"))?;
                let weights = parse_weights(get(m, "weights", &p)?, &format!("{p}.weights"))?;
                if weights.len() != catalog.atom_count(context) {
                    return err(
                        &format!("{p}.weights"),
                        format!("{} weights for {} atoms", weights.len(), catalog.atom_count(context)),
                    );
                }
                out.push(SectionEntry { context, weights });
            }
            Some(out)
        }
        Some(_) => return err("$.section", "expected an array"),
    };
    Ok(SingleScenario { name: get_string(obj, "name", "$")?, metadata: parse_metadata(obj)?, catalog, state, section })
}

fn parse_bipartite(obj: &Map<String, Value>) -> Result<BipartiteScenario, ScenarioError> {
    let parties_v = get_array(obj, "parties", "$")?;
    if parties_v.len() != 2 {
        return err("$.parties", "exactly two parties are supported");
    }
    let mut parties = Vec::with_capacity(2);
    for (k, p) in parties_v.iter().enumerate() {
        let path = format!("$.parties[{k}]");
        let Value::Object(m) = p else { return err(&path, "expected an object") };
        parties.push(RayCatalog::parse(m, &path)?);
    }
    let parties: [RayCatalog; 2] = parties.try_into().expect("two parties");
    let (n1, n2) = (parties[0].contexts.len(), parties[1].contexts.len());
    let product_contexts = match obj.get("product_contexts") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let p = format!("$.product_contexts[{k}]");
                match v {
                    Value::Array(pair) if pair.len() == 2 => Ok((
                        parse_index(&pair[0], n1, &format!("{p}[0]"))?,
                        parse_index(&pair[1], n2, &format!("{p}[1]"))?,
                    )),
                    _ => err(&p, "expected a [left, right] pair"),
                }
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return err("$.product_contexts", "expected an array"),
    };
    let dim = parties[0].dim * parties[1].dim;
    let state = obj.get("state").map(|v| parse_matrix(v, dim, "$.state")).transpose()?;
    let tables = match obj.get("tables") {
        None => None,
        Some(Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for (k, item) in items.iter().enumerate() {
                let p = format!("$.tables[{k}]");
                let Value::Object(m) = item else { return err(&p, "expected {left, right, probs}") };
                let left = parse_index(get(m, "left", &p)?, n1, &format!("{p}.left"))?;
                let right = parse_index(get(m, "right", &p)?, n2, &format!("{p}.right"))?;
                let Value::Array(rows) = get(m, "probs", &p)? else {
                    return err(&format!("{p}.probs"), "expected rows");
                };
                let (ra, rb) = (parties[0].atom_count(left), parties[1].atom_count(right));
                if rows.len() != ra {
                    return err(&format!("{p}.probs"), format!("{} rows for {ra} left atoms", rows.len()));
                }
                let mut probs = Vec::with_capacity(ra);
                for (i, r) in rows.iter().enumerate() {
                    let row = parse_weights(r, &format!("{p}.probs[{i}]"))?;
                    if row.len() != rb {
                        return err(&format!("{p}.probs[{i}]"), format!("{} entries for {rb} right atoms", row.len()));
                    }
                    probs.push(row);
                }
                out.push(TableSpec { left, right, probs });
            }
            Some(out)
        }
        Some(_) => return err("$.tables", "expected an array"),
    };
    Ok(BipartiteScenario {
        name: get_string(obj, "name", "$")?,
        metadata: parse_metadata(obj)?,
        parties,
        product_contexts,
        state,
        tables,
    })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError {
        path: "$".into(),
        message: format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()),
    })?;
    let Value::Object(obj) = &value else { return err("$", "expected an object") };
    match obj.get("kind").and_then(Value::as_str) {
        Some("single") => parse_single(obj).map(Scenario::Single),
        Some("bipartite") => parse_bipartite(obj).map(Scenario::Bipartite),
        Some(other) => err("$.kind", format!("unknown kind '{other}'")),
        None => err("$.kind", "missing or non-string field 'kind'"),
    }
}
