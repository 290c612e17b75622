//! JSON model files.
//!
//! ```json
//! {
//!   "vertices": ["v1", "v2"],
//!   "arcs": [{"name": "a1", "from": "v2", "to": "v1"}, {"name": "a2", "from": "v1", "to": "v2"}],
//!   "in_tails": [{"index": 1, "at_vertex": "v1"}, {"index": 2, "at_vertex": "v2"}],
//!   "out_tails": [{"index": 1, "at_vertex": "v1"}, {"index": 2, "at_vertex": "v2"}],
//!   "coins": {
//!     "v1": {"matrix": [["sqrt(1 - eps^2)", "eps"], ["-eps", "sqrt(1 - eps^2)"]]},
//!     "v2": {"matrix": [["sqrt(1 - eps^2)", "eps"], ["-eps", "sqrt(1 - eps^2)"]]}
//!   },
//!   "eps_limit": 1.0
//! }
//! ```
//!
//! Coin rows and columns follow the arc slots of the vertex in file order
//! (interior arcs, then tails by index) unless `rows` (outgoing arc names)
//! and `cols` (incoming arc names) are given. Tail arcs are named `in{n}` and
//! `out{n}` unless a `name` is given. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coins::{parse_matrix, CoinFamily};
use crate::expr::Expr;
use crate::graph::{ArcSpec, Endpoint, GraphWithTails, TailSpec};
use crate::models::WalkFamily;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no coin for vertex {0}")]
    MissingCoin(String),
    #[error("coin given for unknown vertex {0}")]
    UnknownVertex(String),
    #[error("vertex {vertex}: coin matrix rows have unequal lengths")]
    Ragged { vertex: String },
    #[error("vertex {vertex}: {what} list {names:?} is not a permutation of the arc slots")]
    BadSlotOrder {
        vertex: String,
        what: &'static str,
        names: Vec<String>,
    },
    #[error("vertex {vertex}, entry ({row}, {col}): {source}")]
    Entry {
        vertex: String,
        row: usize,
        col: usize,
        #[source]
        source: crate::expr::SyntaxError,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcEntry {
    pub name: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailEntry {
    pub index: usize,
    pub at_vertex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinEntry {
    pub matrix: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub vertices: Vec<String>,
    pub arcs: Vec<ArcEntry>,
    pub in_tails: Vec<TailEntry>,
    pub out_tails: Vec<TailEntry>,
    pub coins: BTreeMap<String, CoinEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_limit: Option<f64>,
}

fn tails(entries: &[TailEntry]) -> Vec<TailSpec> {
    entries
        .iter()
        .map(|t| TailSpec {
            index: t.index,
            at_vertex: t.at_vertex.clone(),
            name: t.name.clone(),
        })
        .collect()
}

/// Position of each slot name in `names`, if `names` is a permutation of `slots`.
fn permutation(names: &[String], slots: &[String]) -> Option<Vec<usize>> {
    if names.len() != slots.len() {
        return None;
    }
    let pos: Option<Vec<usize>> = slots.iter().map(|s| names.iter().position(|n| n == s)).collect();
    let pos = pos?;
    let mut seen = pos.clone();
    seen.sort_unstable();
    seen.dedup();
    (seen.len() == pos.len()).then_some(pos)
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, ModelFileError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ModelFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn graph(&self) -> crate::Result<GraphWithTails> {
        let arcs: Vec<ArcSpec> = self.arcs.iter().map(|a| ArcSpec::new(&a.name, &a.from, &a.to)).collect();
        Ok(GraphWithTails::build(
            &self.vertices,
            &arcs,
            &tails(&self.in_tails),
            &tails(&self.out_tails),
        )?)
    }

    pub fn family(&self) -> crate::Result<WalkFamily> {
        let graph = self.graph()?;
        if let Some(v) = self.coins.keys().find(|v| graph.vertex_by_name(v).is_none()) {
            return Err(ModelFileError::UnknownVertex(v.clone()).into());
        }
        let mut coins = Vec::with_capacity(graph.vertex_count());
        for v in graph.vertices() {
            let name = graph.vertex_name(v);
            let entry = self
                .coins
                .get(name)
                .ok_or_else(|| ModelFileError::MissingCoin(name.to_string()))?;
            if entry.matrix.iter().any(|r| r.len() != entry.matrix.len()) {
                return Err(ModelFileError::Ragged { vertex: name.to_string() }.into());
            }
            for (i, row) in entry.matrix.iter().enumerate() {
                for (j, s) in row.iter().enumerate() {
                    Expr::parse(s).map_err(|source| ModelFileError::Entry {
                        vertex: name.to_string(),
                        row: i,
                        col: j,
                        source,
                    })?;
                }
            }
            let m = parse_matrix(&entry.matrix)?;
            let slot_names = |ids: &[crate::ArcId]| -> Vec<String> {
                ids.iter().map(|&a| graph.arc(a).name.clone()).collect()
            };
            let reorder = |given: &Option<Vec<String>>, slots: Vec<String>, what: &'static str| match given {
                None => Ok(None),
                Some(names) => permutation(names, &slots).map(Some).ok_or_else(|| ModelFileError::BadSlotOrder {
                    vertex: name.to_string(),
                    what,
                    names: names.clone(),
                }),
            };
            let rows = reorder(&entry.rows, slot_names(graph.out_slots(v)), "rows")?;
            let cols = reorder(&entry.cols, slot_names(graph.in_slots(v)), "cols")?;
            let m = match (rows, cols) {
                (None, None) => m,
                (r, c) => DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
                    let ri = r.as_ref().map_or(i, |p| p.get(i).copied().unwrap_or(i));
                    let cj = c.as_ref().map_or(j, |p| p.get(j).copied().unwrap_or(j));
                    m.get((ri, cj)).cloned().unwrap_or(Expr::Num(0.0))
                }),
            };
            coins.push(m);
        }
        let coins = CoinFamily::new(&graph, coins)?;
        let mut family = WalkFamily::new(graph, coins);
        if let Some(limit) = self.eps_limit {
            family.eps_limit = limit;
        }
        Ok(family)
    }

    /// The file describing `family`, with coins in slot order.
    pub fn from_family(family: &WalkFamily) -> Self {
        let g = &family.graph;
        let n0 = g.interior_arc_count();
        let vertex = |e: Endpoint| match e {
            Endpoint::Vertex(v) => g.vertex_name(v).to_string(),
            Endpoint::Tail(_) => unreachable!("interior arcs join interior vertices"),
        };
        let arcs = g.arcs()[..n0]
            .iter()
            .map(|a| ArcEntry {
                name: a.name.clone(),
                from: vertex(a.origin),
                to: vertex(a.terminus),
            })
            .collect();
        let tail = |n: usize, incoming: bool| {
            let t = &g.tails()[n];
            let (arc, at) = if incoming {
                (t.incoming, t.in_anchor)
            } else {
                (t.outgoing, t.out_anchor)
            };
            let name = g.arc(arc).name.clone();
            let default = format!("{}{}", if incoming { "in" } else { "out" }, t.index);
            TailEntry {
                index: t.index,
                at_vertex: g.vertex_name(at).to_string(),
                name: (name != default).then_some(name),
            }
        };
        let coins = g
            .vertices()
            .map(|v| {
                let m = family.coins.coin(v);
                let matrix = (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect())
                    .collect();
                (g.vertex_name(v).to_string(), CoinEntry { matrix, rows: None, cols: None })
            })
            .collect();
        ModelFile {
            vertices: g.vertex_names().to_vec(),
            arcs,
            in_tails: (0..g.tail_count()).map(|n| tail(n, true)).collect(),
            out_tails: (0..g.tail_count()).map(|n| tail(n, false)).collect(),
            coins,
            eps_limit: family.eps_limit.is_finite().then_some(family.eps_limit),
        }
    }
}
