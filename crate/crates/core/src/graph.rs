//! Balanced directed graphs with a finite interior and `N` incoming/outgoing tails.
//!
//! Tails are never stored beyond their boundary arcs: every quantity the library
//! computes on a tail is a geometric continuation of the boundary value, so the
//! graph keeps only `Ω♭ = {ω_n♭}` (the last arc of each incoming tail) and
//! `Ω♯ = {ω_n♯}` (the first arc of each outgoing tail).
//!
//! Arc order is significant. Coin matrices index their columns by the incoming
//! slots of a vertex and their rows by its outgoing slots, both listed in the
//! order of [`GraphWithTails::arcs`]: interior arcs first (construction order),
//! then incoming boundary arcs by tail index, then outgoing boundary arcs by
//! tail index.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArcId(pub usize);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// One end of an arc: an interior vertex, or the first tail vertex of tail `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Endpoint {
    Vertex(VertexId),
    Tail(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArcKind {
    Interior,
    /// `ω_n♭`, terminating at an interior vertex.
    Incoming(usize),
    /// `ω_n♯`, originating at an interior vertex.
    Outgoing(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArcInfo {
    pub name: String,
    pub origin: Endpoint,
    pub terminus: Endpoint,
    pub kind: ArcKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tail {
    /// 1-based tail label.
    pub index: usize,
    pub incoming: ArcId,
    pub outgoing: ArcId,
    pub in_anchor: VertexId,
    pub out_anchor: VertexId,
}

/// Interior arc given by vertex names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcSpec {
    pub name: String,
    pub from: String,
    pub to: String,
}

impl ArcSpec {
    pub fn new(name: &str, from: &str, to: &str) -> Self {
        Self {
            name: name.to_string(),
            from: from.to_string(),
            to: to.to_string(),
        }
    }
}

/// Attachment of one tail end to an interior vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TailSpec {
    pub index: usize,
    pub at_vertex: String,
    pub name: Option<String>,
}

impl TailSpec {
    pub fn new(index: usize, at_vertex: &str) -> Self {
        Self {
            index,
            at_vertex: at_vertex.to_string(),
            name: None,
        }
    }

    pub fn named(index: usize, at_vertex: &str, name: &str) -> Self {
        Self {
            index,
            at_vertex: at_vertex.to_string(),
            name: Some(name.to_string()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("vertex {vertex} is not balanced: in-degree {in_deg}, out-degree {out_deg}")]
    NotBalanced {
        vertex: String,
        in_deg: usize,
        out_deg: usize,
    },
    #[error("arc {arc} references unknown vertex {vertex}")]
    DanglingArc { arc: String, vertex: String },
    #[error("duplicate tail index {0}")]
    DuplicateTailIndex(usize),
    #[error("tail indices must be exactly 1..={expected}, found {found:?}")]
    TailIndexGap { expected: usize, found: Vec<usize> },
    #[error("incoming and outgoing tails differ in number ({incoming} vs {outgoing})")]
    TailCountMismatch { incoming: usize, outgoing: usize },
    #[error("graph needs at least one tail")]
    NoTails,
    #[error("duplicate identifier {0}")]
    DuplicateName(String),
    #[error("interior is empty")]
    EmptyInterior,
    #[error("boundary vertex {0} is not a vertex of the graph")]
    UnknownBoundaryVertex(String),
}

/// A validated balanced graph with tails. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphWithTails {
    vertex_names: Vec<String>,
    arcs: Vec<ArcInfo>,
    n_interior_arcs: usize,
    tails: Vec<Tail>,
    in_slots: Vec<Vec<ArcId>>,
    out_slots: Vec<Vec<ArcId>>,
}

impl GraphWithTails {
    /// Builds and validates a graph. Tail indices must form `1..=N` for both
    /// the incoming and the outgoing family.
    pub fn build(
        vertices: &[String],
        interior_arcs: &[ArcSpec],
        in_tails: &[TailSpec],
        out_tails: &[TailSpec],
    ) -> Result<Self, GraphError> {
        let mut index_of = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index_of.insert(v.clone(), VertexId(i)).is_some() {
                return Err(GraphError::DuplicateName(v.clone()));
            }
        }
        if vertices.is_empty() {
            return Err(GraphError::EmptyInterior);
        }
        let lookup = |arc: &str, v: &str| {
            index_of.get(v).copied().ok_or_else(|| GraphError::DanglingArc {
                arc: arc.to_string(),
                vertex: v.to_string(),
            })
        };

        let n_tails = check_tail_indices(in_tails)?;
        let n_out = check_tail_indices(out_tails)?;
        if n_tails != n_out {
            return Err(GraphError::TailCountMismatch {
                incoming: n_tails,
                outgoing: n_out,
            });
        }
        if n_tails == 0 {
            return Err(GraphError::NoTails);
        }

        let mut arcs = Vec::with_capacity(interior_arcs.len() + 2 * n_tails);
        let mut names = HashSet::new();
        for a in interior_arcs {
            if !names.insert(a.name.clone()) {
                return Err(GraphError::DuplicateName(a.name.clone()));
            }
            arcs.push(ArcInfo {
                name: a.name.clone(),
                origin: Endpoint::Vertex(lookup(&a.name, &a.from)?),
                terminus: Endpoint::Vertex(lookup(&a.name, &a.to)?),
                kind: ArcKind::Interior,
            });
        }
        let n_interior_arcs = arcs.len();

        let mut in_sorted: Vec<&TailSpec> = in_tails.iter().collect();
        in_sorted.sort_by_key(|t| t.index);
        let mut out_sorted: Vec<&TailSpec> = out_tails.iter().collect();
        out_sorted.sort_by_key(|t| t.index);

        let mut tails = Vec::with_capacity(n_tails);
        for t in &in_sorted {
            let name = t.name.clone().unwrap_or_else(|| format!("in{}", t.index));
            if !names.insert(name.clone()) {
                return Err(GraphError::DuplicateName(name));
            }
            let anchor = lookup(&name, &t.at_vertex)?;
            arcs.push(ArcInfo {
                name,
                origin: Endpoint::Tail(t.index),
                terminus: Endpoint::Vertex(anchor),
                kind: ArcKind::Incoming(t.index),
            });
        }
        for (k, t) in out_sorted.iter().enumerate() {
            let name = t.name.clone().unwrap_or_else(|| format!("out{}", t.index));
            if !names.insert(name.clone()) {
                return Err(GraphError::DuplicateName(name));
            }
            let anchor = lookup(&name, &t.at_vertex)?;
            arcs.push(ArcInfo {
                name,
                origin: Endpoint::Vertex(anchor),
                terminus: Endpoint::Tail(t.index),
                kind: ArcKind::Outgoing(t.index),
            });
            let in_anchor = lookup("", &in_sorted[k].at_vertex)?;
            tails.push(Tail {
                index: t.index,
                incoming: ArcId(n_interior_arcs + k),
                outgoing: ArcId(n_interior_arcs + n_tails + k),
                in_anchor,
                out_anchor: anchor,
            });
        }

        let mut in_slots = vec![Vec::new(); vertices.len()];
        let mut out_slots = vec![Vec::new(); vertices.len()];
        for (i, a) in arcs.iter().enumerate() {
            if let Endpoint::Vertex(v) = a.terminus {
                in_slots[v.0].push(ArcId(i));
            }
            if let Endpoint::Vertex(v) = a.origin {
                out_slots[v.0].push(ArcId(i));
            }
        }
        for (v, name) in vertices.iter().enumerate() {
            if in_slots[v].len() != out_slots[v].len() {
                return Err(GraphError::NotBalanced {
                    vertex: name.clone(),
                    in_deg: in_slots[v].len(),
                    out_deg: out_slots[v].len(),
                });
            }
        }

        Ok(Self {
            vertex_names: vertices.to_vec(),
            arcs,
            n_interior_arcs,
            tails,
            in_slots,
            out_slots,
        })
    }

    /// Turns a finite balanced graph into a graph with tails by declaring the
    /// vertices in `boundary` to be at infinity: arcs leaving a boundary vertex
    /// become incoming tails, arcs entering one become outgoing tails. Tail
    /// labels follow the order of `arcs`.
    pub fn from_finite_graph(
        vertices: &[String],
        arcs: &[ArcSpec],
        boundary: &[String],
    ) -> Result<Self, GraphError> {
        let known: HashSet<&String> = vertices.iter().collect();
        for b in boundary {
            if !known.contains(b) {
                return Err(GraphError::UnknownBoundaryVertex(b.clone()));
            }
        }
        for a in arcs {
            for v in [&a.from, &a.to] {
                if !known.contains(v) {
                    return Err(GraphError::DanglingArc {
                        arc: a.name.clone(),
                        vertex: v.clone(),
                    });
                }
            }
        }
        let mut deg: HashMap<&String, (usize, usize)> = HashMap::new();
        for a in arcs {
            deg.entry(&a.to).or_default().0 += 1;
            deg.entry(&a.from).or_default().1 += 1;
        }
        for v in vertices {
            let (i, o) = deg.get(v).copied().unwrap_or((0, 0));
            if i != o {
                return Err(GraphError::NotBalanced {
                    vertex: v.clone(),
                    in_deg: i,
                    out_deg: o,
                });
            }
        }

        let at_infinity: HashSet<&String> = boundary.iter().collect();
        let interior: Vec<String> = vertices
            .iter()
            .filter(|v| !at_infinity.contains(v))
            .cloned()
            .collect();
        if interior.is_empty() {
            return Err(GraphError::EmptyInterior);
        }

        let mut interior_arcs = Vec::new();
        let mut in_tails = Vec::new();
        let mut out_tails = Vec::new();
        for a in arcs {
            let from_inf = at_infinity.contains(&a.from);
            let to_inf = at_infinity.contains(&a.to);
            match (from_inf, to_inf) {
                (false, false) => interior_arcs.push(a.clone()),
                (true, false) => {
                    in_tails.push(TailSpec::named(in_tails.len() + 1, &a.to, &a.name))
                }
                (false, true) => {
                    out_tails.push(TailSpec::named(out_tails.len() + 1, &a.from, &a.name))
                }
                // arcs between two vertices at infinity carry no dynamics
                (true, true) => {}
            }
        }
        Self::build(&interior, &interior_arcs, &in_tails, &out_tails)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertex_names
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.vertex_names
            .iter()
            .position(|n| n == name)
            .map(VertexId)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_names.len()).map(VertexId)
    }

    /// All stored arcs: interior, then `Ω♭`, then `Ω♯`.
    pub fn arcs(&self) -> &[ArcInfo] {
        &self.arcs
    }

    pub fn arc(&self, a: ArcId) -> &ArcInfo {
        &self.arcs[a.0]
    }

    pub fn arc_by_name(&self, name: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.name == name).map(ArcId)
    }

    /// `|A₀|`.
    pub fn interior_arc_count(&self) -> usize {
        self.n_interior_arcs
    }

    /// `N`.
    pub fn tail_count(&self) -> usize {
        self.tails.len()
    }

    pub fn tails(&self) -> &[Tail] {
        &self.tails
    }

    pub fn incoming_arc(&self, n: usize) -> ArcId {
        self.tails[n - 1].incoming
    }

    pub fn outgoing_arc(&self, n: usize) -> ArcId {
        self.tails[n - 1].outgoing
    }

    /// Incoming arc slots of `v` (coin matrix columns).
    pub fn in_slots(&self, v: VertexId) -> &[ArcId] {
        &self.in_slots[v.0]
    }

    /// Outgoing arc slots of `v` (coin matrix rows).
    pub fn out_slots(&self, v: VertexId) -> &[ArcId] {
        &self.out_slots[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.in_slots[v.0].len()
    }

    /// Checks whether `other` is the same graph up to renaming vertices and arcs,
    /// keeping tail labels fixed. Brute force over vertex bijections; meant for
    /// small graphs.
    pub fn is_isomorphic_to(&self, other: &GraphWithTails) -> bool {
        let n = self.vertex_count();
        if n != other.vertex_count()
            || self.arcs.len() != other.arcs.len()
            || self.tail_count() != other.tail_count()
        {
            return false;
        }
        let key = |g: &GraphWithTails, map: &[usize]| {
            let mut sig: Vec<(i64, i64)> = g
                .arcs
                .iter()
                .map(|a| {
                    let enc = |e: Endpoint| match e {
                        Endpoint::Vertex(v) => map[v.0] as i64,
                        Endpoint::Tail(t) => -(t as i64),
                    };
                    (enc(a.origin), enc(a.terminus))
                })
                .collect();
            sig.sort_unstable();
            sig
        };
        let identity: Vec<usize> = (0..n).collect();
        let target = key(other, &identity);
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if key(self, &perm) == target {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }
}

fn check_tail_indices(tails: &[TailSpec]) -> Result<usize, GraphError> {
    let mut seen = HashSet::new();
    for t in tails {
        if !seen.insert(t.index) {
            return Err(GraphError::DuplicateTailIndex(t.index));
        }
    }
    let n = tails.len();
    if (1..=n).any(|i| !seen.contains(&i)) {
        let mut found: Vec<usize> = seen.into_iter().collect();
        found.sort_unstable();
        return Err(GraphError::TailIndexGap { expected: n, found });
    }
    Ok(n)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn ms_graph() -> GraphWithTails {
        GraphWithTails::build(
            &names(&["Lp", "Rp", "Lm", "Rm"]),
            &[
                ArcSpec::new("a1", "Lm", "Lp"),
                ArcSpec::new("a2", "Lp", "Rp"),
                ArcSpec::new("a3", "Rp", "Rm"),
                ArcSpec::new("a4", "Rm", "Lm"),
                ArcSpec::new("a5", "Lp", "Lm"),
                ArcSpec::new("a6", "Rm", "Rp"),
            ],
            &[TailSpec::new(1, "Lp"), TailSpec::new(2, "Rm")],
            &[TailSpec::new(1, "Lm"), TailSpec::new(2, "Rp")],
        )
        .unwrap()
    }

    #[test]
    fn four_vertex_model_is_balanced_with_degree_two() {
        let g = ms_graph();
        assert_eq!(g.interior_arc_count(), 6);
        assert_eq!(g.tail_count(), 2);
        for v in g.vertices() {
            assert_eq!(g.degree(v), 2);
            assert_eq!(g.in_slots(v).len(), g.out_slots(v).len());
        }
        // slot order: interior arcs first, then boundary arcs
        let lp = g.vertex_by_name("Lp").unwrap();
        let cols: Vec<&str> = g.in_slots(lp).iter().map(|a| g.arc(*a).name.as_str()).collect();
        let rows: Vec<&str> = g.out_slots(lp).iter().map(|a| g.arc(*a).name.as_str()).collect();
        assert_eq!(cols, ["a1", "in1"]);
        assert_eq!(rows, ["a2", "a5"]);
    }

    #[test]
    fn arc_partition_counts() {
        let g = ms_graph();
        let n_in = g.arcs().iter().filter(|a| matches!(a.kind, ArcKind::Incoming(_))).count();
        let n_out = g.arcs().iter().filter(|a| matches!(a.kind, ArcKind::Outgoing(_))).count();
        assert_eq!(g.interior_arc_count() + n_in + n_out, g.arcs().len());
        assert_eq!(n_in, g.tail_count());
        assert_eq!(n_out, g.tail_count());
    }

    #[test]
    fn cycle_graph_is_valid() {
        let n = 3;
        let vs: Vec<String> = (1..=n).map(|k| format!("v{k}")).collect();
        let arcs: Vec<ArcSpec> = (1..=n)
            .map(|k| {
                let prev = if k == 1 { n } else { k - 1 };
                ArcSpec::new(&format!("a{k}"), &format!("v{prev}"), &format!("v{k}"))
            })
            .collect();
        let ins: Vec<TailSpec> = (1..=n).map(|k| TailSpec::new(k, &format!("v{k}"))).collect();
        let g = GraphWithTails::build(&vs, &arcs, &ins, &ins).unwrap();
        assert!(g.vertices().all(|v| g.degree(v) == 2));
    }

    #[test]
    fn unbalanced_vertex_is_rejected() {
        let err = GraphWithTails::build(
            &names(&["x", "y"]),
            &[
                ArcSpec::new("a", "x", "y"),
                ArcSpec::new("b", "x", "y"),
                ArcSpec::new("c", "y", "x"),
            ],
            &[TailSpec::new(1, "x")],
            &[TailSpec::new(1, "x")],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::NotBalanced { .. }));
        if let GraphError::NotBalanced { vertex, in_deg, out_deg } = err {
            // x: in {c, in1} = 2, out {a, b, out1} = 3
            assert_eq!((vertex.as_str(), in_deg, out_deg), ("x", 2, 3));
        }
    }

    #[test]
    fn dangling_and_duplicate_tail_errors() {
        let err = GraphWithTails::build(
            &names(&["x"]),
            &[ArcSpec::new("a", "x", "z")],
            &[TailSpec::new(1, "x")],
            &[TailSpec::new(1, "x")],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::DanglingArc { .. }));

        let err = GraphWithTails::build(
            &names(&["x"]),
            &[],
            &[TailSpec::new(1, "x"), TailSpec::new(1, "x")],
            &[TailSpec::new(1, "x"), TailSpec::new(2, "x")],
        )
        .unwrap_err();
        assert_eq!(err, GraphError::DuplicateTailIndex(1));
    }

    #[test]
    fn finite_cycle_with_one_point_at_infinity() {
        let vs = names(&["p", "q", "r", "s"]);
        let arcs = vec![
            ArcSpec::new("e1", "p", "q"),
            ArcSpec::new("e2", "q", "r"),
            ArcSpec::new("e3", "r", "s"),
            ArcSpec::new("e4", "s", "p"),
        ];
        let g = GraphWithTails::from_finite_graph(&vs, &arcs, &names(&["p"])).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.interior_arc_count(), 2);
        assert_eq!(g.tail_count(), 1);
        assert_eq!(g.arc(g.incoming_arc(1)).name, "e1");
        assert_eq!(g.arc(g.outgoing_arc(1)).name, "e4");

        let err = GraphWithTails::from_finite_graph(&vs, &arcs, &vs).unwrap_err();
        assert_eq!(err, GraphError::EmptyInterior);
    }

    #[test]
    fn four_vertex_model_from_six_vertex_finite_graph() {
        // two extra vertices play the role of the points at infinity
        let vs = names(&["Lp", "Rp", "Lm", "Rm", "P", "Q"]);
        let arcs = vec![
            ArcSpec::new("w1in", "P", "Lp"),
            ArcSpec::new("w2in", "Q", "Rm"),
            ArcSpec::new("a1", "Lm", "Lp"),
            ArcSpec::new("a2", "Lp", "Rp"),
            ArcSpec::new("a3", "Rp", "Rm"),
            ArcSpec::new("a4", "Rm", "Lm"),
            ArcSpec::new("a5", "Lp", "Lm"),
            ArcSpec::new("a6", "Rm", "Rp"),
            ArcSpec::new("w1out", "Lm", "P"),
            ArcSpec::new("w2out", "Rp", "Q"),
        ];
        let g = GraphWithTails::from_finite_graph(&vs, &arcs, &names(&["P", "Q"])).unwrap();
        assert!(g.is_isomorphic_to(&ms_graph()));
        assert!(ms_graph().is_isomorphic_to(&g));

        // swapping the out-tail labels gives a non-isomorphic labelled graph
        let swapped = GraphWithTails::build(
            &names(&["Lp", "Rp", "Lm", "Rm"]),
            &[
                ArcSpec::new("a1", "Lm", "Lp"),
                ArcSpec::new("a2", "Lp", "Rp"),
                ArcSpec::new("a3", "Rp", "Rm"),
                ArcSpec::new("a4", "Rm", "Lm"),
                ArcSpec::new("a5", "Lp", "Lm"),
                ArcSpec::new("a6", "Rm", "Rp"),
            ],
            &[TailSpec::new(1, "Lp"), TailSpec::new(2, "Rm")],
            &[TailSpec::new(2, "Lm"), TailSpec::new(1, "Rp")],
        )
        .unwrap();
        assert!(!g.is_isomorphic_to(&swapped));
    }
}
