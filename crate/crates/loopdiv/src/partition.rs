//! Partitions of a loop into pieces.
//!
//! A partition is stored as a cell complex on the disc bounded by the loop:
//! nodes (boundary marks at integer loop parameters, plus interior vertices
//! realized at ball vertices), edges (boundary arcs following the loop, and
//! geodesic segments), and faces given as oriented closed dart walks. Pieces
//! are the faces; the mesh is the longest piece boundary.
//!
//! Validation recomputes everything from scratch and accepts exactly the
//! disc cell complexes: arcs tile the loop once, every geodesic edge borders
//! two faces with opposite orientations, face walks are simple, the
//! 1-skeleton is connected, every vertex has degree at least three (marks
//! get two arc incidences for free), and the Euler count V - E + F equals 2
//! with the outer face included.

use crate::cayley::{CayleyBall, LoopPath};
use crate::error::{Error, Result};
use crate::presentation::Word;
use num::rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

/// `len < delta` for an integer length and an exact rational threshold.
pub fn below(len: usize, delta: Ratio<u64>) -> bool {
    (len as u64) * delta.denom() < *delta.numer()
}

/// The largest integer length strictly below `delta`.
pub fn max_len_below(delta: Ratio<u64>) -> usize {
    ((delta.numer() - 1) / delta.denom()) as usize
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Node {
    pub vertex: usize,
    /// `Some(p)`: boundary mark at loop parameter p. `None`: interior vertex.
    pub param: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum EdgeKind {
    /// Boundary arc starting at loop parameter `from`, of length `len`.
    Arc { from: usize, len: usize },
    /// Geodesic segment between its endpoint realizations.
    Geodesic,
}

#[derive(Debug, Clone)]
pub(crate) struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    /// Ball vertices from `a` to `b`, endpoints included.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Dart {
    pub edge: usize,
    pub rev: bool,
}

/// A partition of a loop together with its realization data (a chord
/// diagram plus interior vertices, their ball realizations, and per-edge
/// geodesic witnesses).
#[derive(Clone)]
pub struct PartitionWitness {
    pub(crate) ball: Rc<CayleyBall>,
    pub(crate) loop_word: Word,
    pub(crate) loop_vertices: Vec<usize>,
    pub(crate) nodes: Vec<Node>,
    pub(crate) edges: Vec<Edge>,
    /// `None` entries are faces consumed by a split.
    pub(crate) faces: Vec<Option<Vec<Dart>>>,
}

/// Validation output: piece count, per-piece boundary lengths (in alive-face
/// order) and the mesh.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionReport {
    pub pieces: usize,
    pub piece_lengths: Vec<usize>,
    pub mesh: usize,
}

impl PartitionReport {
    /// Strict mesh test: the partition is a delta-partition iff mesh < delta.
    pub fn is_delta_partition(&self, delta: Ratio<u64>) -> bool {
        below(self.mesh, delta)
    }
}

impl PartitionWitness {
    /// The one-piece partition: a single mark at parameter 0 and the whole
    /// loop as one arc.
    pub fn trivial(lp: &LoopPath) -> PartitionWitness {
        let l = lp.len();
        PartitionWitness {
            ball: Rc::clone(lp.ball()),
            loop_word: lp.word().clone(),
            loop_vertices: lp.vertices().to_vec(),
            nodes: vec![Node {
                vertex: lp.vertex_at(0),
                param: Some(0),
            }],
            edges: vec![Edge {
                a: 0,
                b: 0,
                kind: EdgeKind::Arc { from: 0, len: l },
                path: lp.vertices().to_vec(),
            }],
            faces: vec![Some(vec![Dart {
                edge: 0,
                rev: false,
            }])],
        }
    }

    pub fn loop_len(&self) -> usize {
        self.loop_word.len()
    }

    pub(crate) fn edge_len(&self, e: usize) -> usize {
        self.edges[e].path.len() - 1
    }

    pub(crate) fn dart_start(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.rev {
            e.b
        } else {
            e.a
        }
    }

    pub(crate) fn dart_end(&self, d: Dart) -> usize {
        let e = &self.edges[d.edge];
        if d.rev {
            e.a
        } else {
            e.b
        }
    }

    pub(crate) fn face_len(&self, f: usize) -> usize {
        self.faces[f]
            .as_ref()
            .map(|darts| darts.iter().map(|d| self.edge_len(d.edge)).sum())
            .unwrap_or(0)
    }

    pub(crate) fn alive_faces(&self) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| self.faces[f].is_some())
            .collect()
    }

    /// Boundary lengths of the current pieces, in alive-face order.
    pub fn piece_lengths(&self) -> Vec<usize> {
        self.alive_faces()
            .into_iter()
            .map(|f| self.face_len(f))
            .collect()
    }

    pub fn piece_count(&self) -> usize {
        self.faces.iter().flatten().count()
    }

    pub fn mesh(&self) -> usize {
        self.piece_lengths().into_iter().max().unwrap_or(0)
    }

    /// Geodesic edges between two marks, as parameter pairs.
    pub fn chords(&self) -> Vec<(usize, usize)> {
        let alive = self.referenced_edges();
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if !alive.contains(&i) || e.kind != EdgeKind::Geodesic {
                continue;
            }
            if let (Some(p), Some(q)) = (self.nodes[e.a].param, self.nodes[e.b].param) {
                out.push((p, q));
            }
        }
        out
    }

    /// Number of interior (non-mark) vertices actually referenced.
    pub fn interior_count(&self) -> usize {
        self.referenced_nodes()
            .iter()
            .filter(|&&n| self.nodes[n].param.is_none())
            .count()
    }

    pub(crate) fn referenced_edges(&self) -> HashSet<usize> {
        self.faces
            .iter()
            .flatten()
            .flat_map(|darts| darts.iter().map(|d| d.edge))
            .collect()
    }

    pub(crate) fn referenced_nodes(&self) -> HashSet<usize> {
        let mut out = HashSet::new();
        for e in self.referenced_edges() {
            out.insert(self.edges[e].a);
            out.insert(self.edges[e].b);
        }
        out
    }

    /// Subdivide edge `eid` at offset `k` (0 < k < len) along its path.
    /// `realization` may name an alternative ball vertex at the same
    /// geodesic offset; it must keep both halves geodesic. Returns the new
    /// node and the two replacement edge ids (first half, second half).
    pub(crate) fn subdivide_edge(
        &mut self,
        eid: usize,
        k: usize,
        realization: Option<usize>,
    ) -> Result<(usize, usize, usize)> {
        let edge = self.edges[eid].clone();
        let len = edge.path.len() - 1;
        if k == 0 || k >= len {
            return Err(Error::InvalidWitness(format!(
                "subdivision offset {k} out of range for edge of length {len}"
            )));
        }
        let (node, path1, path2, kind1, kind2) = match edge.kind {
            EdgeKind::Arc { from, len } => {
                let param = (from + k) % self.loop_len().max(1);
                let node = Node {
                    vertex: self.loop_vertices[param.min(self.loop_len())],
                    param: Some(param),
                };
                (
                    node,
                    edge.path[..=k].to_vec(),
                    edge.path[k..].to_vec(),
                    EdgeKind::Arc { from, len: k },
                    EdgeKind::Arc {
                        from: param,
                        len: len - k,
                    },
                )
            }
            EdgeKind::Geodesic => {
                let x = realization.unwrap_or(edge.path[k]);
                let (path1, path2) = if x == edge.path[k] {
                    (edge.path[..=k].to_vec(), edge.path[k..].to_vec())
                } else {
                    let va = self.nodes[edge.a].vertex;
                    let vb = self.nodes[edge.b].vertex;
                    let r1 = self.ball.distance(va, x)?;
                    let r2 = self.ball.distance(x, vb)?;
                    if r1.distance != k || r2.distance != len - k {
                        return Err(Error::InvalidWitness(format!(
                            "vertex does not realize offset {k} on a geodesic of length {len}"
                        )));
                    }
                    (r1.witness, r2.witness)
                };
                let node = Node {
                    vertex: x,
                    param: None,
                };
                (node, path1, path2, EdgeKind::Geodesic, EdgeKind::Geodesic)
            }
        };
        let nid = self.nodes.len();
        self.nodes.push(node);
        let e1 = self.edges.len();
        self.edges.push(Edge {
            a: edge.a,
            b: nid,
            kind: kind1,
            path: path1,
        });
        let e2 = self.edges.len();
        self.edges.push(Edge {
            a: nid,
            b: edge.b,
            kind: kind2,
            path: path2,
        });
        for face in self.faces.iter_mut().flatten() {
            let mut out = Vec::with_capacity(face.len() + 1);
            for &d in face.iter() {
                if d.edge != eid {
                    out.push(d);
                } else if d.rev {
                    out.push(Dart { edge: e2, rev: true });
                    out.push(Dart { edge: e1, rev: true });
                } else {
                    out.push(Dart { edge: e1, rev: false });
                    out.push(Dart { edge: e2, rev: false });
                }
            }
            *face = out;
        }
        Ok((nid, e1, e2))
    }

    /// The mark node at loop parameter `p`, creating it by arc subdivision
    /// when absent.
    pub(crate) fn mark_for_param(&mut self, p: usize) -> Result<usize> {
        let l = self.loop_len();
        if p >= l {
            return Err(Error::InvalidWitness(format!(
                "mark parameter {p} outside [0, {l})"
            )));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if n.param == Some(p) && self.referenced_nodes().contains(&i) {
                return Ok(i);
            }
        }
        // Locate the arc containing p strictly inside.
        let mut target = None;
        'outer: for face in self.faces.iter().flatten() {
            for d in face {
                if let EdgeKind::Arc { from, len } = self.edges[d.edge].kind {
                    let off = (p + l - from) % l;
                    if off > 0 && off < len {
                        target = Some((d.edge, off));
                        break 'outer;
                    }
                }
            }
        }
        let (eid, off) = target.ok_or_else(|| {
            Error::InvalidWitness(format!("no boundary arc contains parameter {p}"))
        })?;
        let (nid, _, _) = self.subdivide_edge(eid, off, None)?;
        Ok(nid)
    }

    /// Split face `f` by a chain of geodesic edges from node `n1` to node
    /// `n2` through the given (new) interior ball vertices. Both nodes must
    /// be distinct corners of the face walk. Returns the two new face ids.
    pub(crate) fn split_face_at_nodes(
        &mut self,
        f: usize,
        n1: usize,
        n2: usize,
        chain: &[usize],
    ) -> Result<(usize, usize)> {
        let darts = self.faces[f]
            .clone()
            .ok_or_else(|| Error::InvalidWitness(format!("face {f} is not alive")))?;
        if n1 == n2 {
            return Err(Error::InvalidWitness(
                "cut endpoints must be distinct nodes".into(),
            ));
        }
        let pos = |n: usize| darts.iter().position(|&d| self.dart_start(d) == n);
        let i1 = pos(n1).ok_or_else(|| {
            Error::InvalidWitness("cut endpoint is not on the face boundary".into())
        })?;
        let i2 = pos(n2).ok_or_else(|| {
            Error::InvalidWitness("cut endpoint is not on the face boundary".into())
        })?;

        // Build the chain n1 -> c_1 -> ... -> c_k -> n2.
        let mut chain_nodes = vec![n1];
        for &v in chain {
            let nid = self.nodes.len();
            self.nodes.push(Node {
                vertex: v,
                param: None,
            });
            chain_nodes.push(nid);
        }
        chain_nodes.push(n2);
        let mut chain_darts = Vec::new();
        for win in chain_nodes.windows(2) {
            let (x, y) = (win[0], win[1]);
            let r = self
                .ball
                .distance(self.nodes[x].vertex, self.nodes[y].vertex)?;
            if r.ball_limited {
                return Err(Error::BallLimited(
                    self.nodes[x].vertex,
                    self.nodes[y].vertex,
                ));
            }
            let eid = self.edges.len();
            self.edges.push(Edge {
                a: x,
                b: y,
                kind: EdgeKind::Geodesic,
                path: r.witness,
            });
            chain_darts.push(Dart {
                edge: eid,
                rev: false,
            });
        }

        let take = |from: usize, to: usize| -> Vec<Dart> {
            let mut out = Vec::new();
            let mut i = from;
            while i != to {
                out.push(darts[i]);
                i = (i + 1) % darts.len();
            }
            out
        };
        // Face 1: boundary walk n1 -> n2 plus the chain reversed.
        let mut f1 = take(i1, i2);
        f1.extend(chain_darts.iter().rev().map(|d| Dart {
            edge: d.edge,
            rev: true,
        }));
        // Face 2: boundary walk n2 -> n1 plus the chain forward.
        let mut f2 = take(i2, i1);
        f2.extend(chain_darts.iter().copied());

        self.faces[f] = None;
        let id1 = self.faces.len();
        self.faces.push(Some(f1));
        let id2 = self.faces.len();
        self.faces.push(Some(f2));
        Ok((id1, id2))
    }

    /// Apply one chord between loop parameters, splitting the unique face
    /// that contains both marks.
    pub(crate) fn apply_chord(&mut self, p: usize, q: usize) -> Result<(usize, usize)> {
        let n1 = self.mark_for_param(p)?;
        let n2 = self.mark_for_param(q)?;
        let mut hosts = Vec::new();
        for f in self.alive_faces() {
            let darts = self.faces[f].as_ref().unwrap();
            let has = |n: usize| darts.iter().any(|&d| self.dart_start(d) == n);
            if has(n1) && has(n2) {
                hosts.push(f);
            }
        }
        match hosts.as_slice() {
            [f] => self.split_face_at_nodes(*f, n1, n2, &[]),
            [] => Err(Error::InvalidWitness(format!(
                "chord ({p},{q}) crosses the existing diagram"
            ))),
            _ => Err(Error::InvalidWitness(format!(
                "chord ({p},{q}) is parallel to an existing edge (ambiguous side)"
            ))),
        }
    }

    /// Merge boundary arcs across marks of degree two (marks with no
    /// incident geodesic edge), dropping the spurious marks.
    pub(crate) fn drop_degree_two_marks(&mut self) {
        loop {
            let referenced = self.referenced_nodes();
            if referenced.len() <= 1 {
                return;
            }
            let mut degree: HashMap<usize, usize> = HashMap::new();
            let mut has_geo: HashSet<usize> = HashSet::new();
            for e in self.referenced_edges() {
                let edge = &self.edges[e];
                *degree.entry(edge.a).or_insert(0) += 1;
                *degree.entry(edge.b).or_insert(0) += 1;
                if edge.kind == EdgeKind::Geodesic {
                    has_geo.insert(edge.a);
                    has_geo.insert(edge.b);
                }
            }
            let victim = referenced.iter().copied().find(|n| {
                self.nodes[*n].param.is_some() && degree.get(n) == Some(&2) && !has_geo.contains(n)
            });
            let Some(n) = victim else { return };
            // The two arcs around n appear consecutively in exactly one face.
            let mut merged = false;
            for fi in self.alive_faces() {
                let darts = self.faces[fi].as_ref().unwrap().clone();
                let m = darts.len();
                if m < 2 {
                    continue;
                }
                for i in 0..m {
                    let d1 = darts[i];
                    let d2 = darts[(i + 1) % m];
                    if d1.edge == d2.edge || self.dart_end(d1) != n || self.dart_start(d2) != n {
                        continue;
                    }
                    let (EdgeKind::Arc { from, len: l1 }, EdgeKind::Arc { len: l2, .. }) =
                        (self.edges[d1.edge].kind.clone(), self.edges[d2.edge].kind.clone())
                    else {
                        continue;
                    };
                    let mut path = self.edges[d1.edge].path.clone();
                    path.extend_from_slice(&self.edges[d2.edge].path[1..]);
                    let eid = self.edges.len();
                    self.edges.push(Edge {
                        a: self.edges[d1.edge].a,
                        b: self.edges[d2.edge].b,
                        kind: EdgeKind::Arc {
                            from,
                            len: l1 + l2,
                        },
                        path,
                    });
                    let mut out = Vec::with_capacity(m - 1);
                    let mut j = (i + 2) % m;
                    out.push(Dart {
                        edge: eid,
                        rev: false,
                    });
                    while j != i {
                        out.push(darts[j]);
                        j = (j + 1) % m;
                    }
                    self.faces[fi] = Some(out);
                    merged = true;
                    break;
                }
                if merged {
                    break;
                }
            }
            if !merged {
                return;
            }
        }
    }

    /// Build a partition from a set of pairwise non-crossing chords given as
    /// loop parameter pairs, applied in order.
    pub fn from_chords(lp: &LoopPath, chords: &[(usize, usize)]) -> Result<PartitionWitness> {
        let mut w = PartitionWitness::trivial(lp);
        for &(p, q) in chords {
            w.apply_chord(p, q)?;
        }
        w.drop_degree_two_marks();
        Ok(w)
    }

    /// Trace the boundary of face `f` as a based loop (basepoint: start of
    /// the face's first dart).
    pub(crate) fn face_loop(&self, f: usize) -> Result<LoopPath> {
        let darts = self.faces[f]
            .as_ref()
            .ok_or_else(|| Error::InvalidWitness(format!("face {f} is not alive")))?;
        let mut vertices = Vec::new();
        for &d in darts {
            let path = &self.edges[d.edge].path;
            let iter: Vec<usize> = if d.rev {
                path.iter().rev().copied().collect()
            } else {
                path.clone()
            };
            if vertices.is_empty() {
                vertices.push(iter[0]);
            }
            vertices.extend_from_slice(&iter[1..]);
        }
        let mut word = Word::empty();
        for t in 0..vertices.len() - 1 {
            let g = self
                .ball
                .label_between(vertices[t], vertices[t + 1])?
                .ok_or_else(|| {
                    Error::InvalidWitness("face boundary leaves the edge set of the ball".into())
                })?;
            word.push(g);
        }
        Ok(LoopPath::from_parts(
            Rc::clone(&self.ball),
            word,
            vertices,
        ))
    }

    fn snapshot(&self) -> WitnessJson {
        let edges_ref = self.referenced_edges();
        let nodes_ref = self.referenced_nodes();
        let mut interior_nodes: Vec<usize> = nodes_ref
            .iter()
            .copied()
            .filter(|&n| self.nodes[n].param.is_none())
            .collect();
        interior_nodes.sort_unstable();
        let interior_index: HashMap<usize, usize> = interior_nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i))
            .collect();
        let node_token = |n: usize| -> NodeToken {
            match self.nodes[n].param {
                Some(p) => NodeToken::Mark(p),
                None => NodeToken::Interior(interior_index[&n]),
            }
        };
        let mut geo_edges: Vec<usize> = edges_ref
            .iter()
            .copied()
            .filter(|&e| self.edges[e].kind == EdgeKind::Geodesic)
            .collect();
        geo_edges.sort_unstable();
        let geo_index: HashMap<usize, usize> =
            geo_edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut marks: Vec<usize> = nodes_ref
            .iter()
            .filter_map(|&n| self.nodes[n].param)
            .collect();
        marks.sort_unstable();
        let faces: Vec<Vec<SideToken>> = self
            .alive_faces()
            .into_iter()
            .map(|f| {
                self.faces[f]
                    .as_ref()
                    .unwrap()
                    .iter()
                    .map(|&d| match self.edges[d.edge].kind {
                        EdgeKind::Arc { from, len } => SideToken::Arc { from, len },
                        EdgeKind::Geodesic => SideToken::Edge {
                            edge: geo_index[&d.edge],
                            rev: d.rev,
                        },
                    })
                    .collect()
            })
            .collect();
        WitnessJson {
            loop_word: self.loop_word.to_string(),
            marks,
            interior: interior_nodes
                .iter()
                .map(|&n| {
                    self.ball
                        .vertex_word(self.nodes[n].vertex)
                        .map(|w| w.to_string())
                        .unwrap_or_default()
                })
                .collect(),
            edges: geo_edges
                .iter()
                .map(|&e| (node_token(self.edges[e].a), node_token(self.edges[e].b)))
                .collect(),
            faces,
            piece_lengths: self.piece_lengths(),
            mesh: self.mesh(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.snapshot())?)
    }

    /// Rebuild a witness from its JSON export, re-deriving realizations and
    /// geodesic witnesses inside the given loop's ball.
    pub fn from_json(lp: &LoopPath, text: &str) -> Result<PartitionWitness> {
        let data: WitnessJson = serde_json::from_str(text)?;
        if Word::parse(&data.loop_word.replace('1', ""))? != *lp.word() {
            return Err(Error::InvalidWitness(
                "witness loop word differs from the given loop".into(),
            ));
        }
        let ball = lp.ball();
        let l = lp.len();
        let mut nodes = Vec::new();
        let mut mark_node: HashMap<usize, usize> = HashMap::new();
        for &p in &data.marks {
            mark_node.insert(p, nodes.len());
            nodes.push(Node {
                vertex: lp.vertex_at(p),
                param: Some(p),
            });
        }
        let mut interior_node = Vec::new();
        for wtext in &data.interior {
            let wparsed = if wtext == "1" {
                Word::empty()
            } else {
                Word::parse(wtext)?
            };
            let v = ball.vertex_of_word(&wparsed)?.ok_or_else(|| {
                Error::InvalidWitness(format!("interior vertex '{wtext}' is not in the ball"))
            })?;
            interior_node.push(nodes.len());
            nodes.push(Node {
                vertex: v,
                param: None,
            });
        }
        let resolve = |t: &NodeToken| -> Result<usize> {
            match t {
                NodeToken::Mark(p) => mark_node.get(p).copied().ok_or_else(|| {
                    Error::InvalidWitness(format!("edge endpoint mark {p} not in mark list"))
                }),
                NodeToken::Interior(i) => interior_node.get(*i).copied().ok_or_else(|| {
                    Error::InvalidWitness(format!("edge endpoint interior {i} out of range"))
                }),
            }
        };
        let mut edges = Vec::new();
        let mut geo_ids = Vec::new();
        for (ta, tb) in &data.edges {
            let a = resolve(ta)?;
            let b = resolve(tb)?;
            let r = ball.distance(nodes[a].vertex, nodes[b].vertex)?;
            if r.ball_limited {
                return Err(Error::BallLimited(nodes[a].vertex, nodes[b].vertex));
            }
            geo_ids.push(edges.len());
            edges.push(Edge {
                a,
                b,
                kind: EdgeKind::Geodesic,
                path: r.witness,
            });
        }
        let mut arc_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut faces = Vec::new();
        for face in &data.faces {
            let mut darts = Vec::new();
            for side in face {
                match side {
                    SideToken::Arc { from, len } => {
                        let eid = *arc_ids.entry((*from, *len)).or_insert_with(|| {
                            let to = (*from + *len) % l.max(1);
                            let mut path = Vec::with_capacity(len + 1);
                            for t in 0..=*len {
                                path.push(lp.vertex_at((*from + t) % l.max(1)));
                            }
                            // The endpoint vertex at t = len must be the mark
                            // itself, not its mod-L shadow.
                            let a = mark_node.get(from).copied();
                            let b = mark_node.get(&to).copied();
                            let id = edges.len();
                            edges.push(Edge {
                                a: a.unwrap_or(usize::MAX),
                                b: b.unwrap_or(usize::MAX),
                                kind: EdgeKind::Arc {
                                    from: *from,
                                    len: *len,
                                },
                                path,
                            });
                            id
                        });
                        if edges[eid].a == usize::MAX || edges[eid].b == usize::MAX {
                            return Err(Error::InvalidWitness(
                                "arc endpoint is not a listed mark".into(),
                            ));
                        }
                        darts.push(Dart {
                            edge: eid,
                            rev: false,
                        });
                    }
                    SideToken::Edge { edge, rev } => {
                        let eid = *geo_ids.get(*edge).ok_or_else(|| {
                            Error::InvalidWitness(format!("face references unknown edge {edge}"))
                        })?;
                        darts.push(Dart {
                            edge: eid,
                            rev: *rev,
                        });
                    }
                }
            }
            faces.push(Some(darts));
        }
        Ok(PartitionWitness {
            ball: Rc::clone(ball),
            loop_word: lp.word().clone(),
            loop_vertices: lp.vertices().to_vec(),
            nodes,
            edges,
            faces,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum NodeToken {
    Mark(usize),
    Interior(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum SideToken {
    Arc { from: usize, len: usize },
    Edge { edge: usize, rev: bool },
}

#[derive(Debug, Serialize, Deserialize)]
struct WitnessJson {
    loop_word: String,
    marks: Vec<usize>,
    interior: Vec<String>,
    edges: Vec<(NodeToken, NodeToken)>,
    faces: Vec<Vec<SideToken>>,
    piece_lengths: Vec<usize>,
    mesh: usize,
}

/// Check a witness against its loop from scratch and report piece data.
pub fn validate_partition(w: &PartitionWitness, lp: &LoopPath) -> Result<PartitionReport> {
    if w.loop_word != *lp.word() || w.loop_vertices != lp.vertices() {
        return Err(Error::InvalidWitness(
            "witness was built for a different loop".into(),
        ));
    }
    let l = lp.len();
    let edges_ref = w.referenced_edges();
    let nodes_ref = w.referenced_nodes();
    let alive = w.alive_faces();
    if alive.is_empty() {
        return Err(Error::InvalidWitness("witness has no pieces".into()));
    }

    let trivial = edges_ref.len() == 1 && {
        let e = &w.edges[*edges_ref.iter().next().unwrap()];
        matches!(e.kind, EdgeKind::Arc { len, .. } if len == l)
    };

    // Node sanity.
    for &n in &nodes_ref {
        let node = &w.nodes[n];
        match node.param {
            Some(p) => {
                if p >= l || node.vertex != lp.vertex_at(p) {
                    return Err(Error::InvalidWitness(format!(
                        "mark {p} does not realize to the loop vertex"
                    )));
                }
            }
            None => {
                w.ball.vertex_word(node.vertex)?;
            }
        }
    }

    // Edge sanity: paths live in the ball, arcs follow the loop, geodesic
    // edges have geodesic length.
    for &e in &edges_ref {
        let edge = &w.edges[e];
        if edge.a == edge.b && !trivial {
            return Err(Error::InvalidWitness("self-loop edge".into()));
        }
        if edge.path.first() != Some(&w.nodes[edge.a].vertex)
            || edge.path.last() != Some(&w.nodes[edge.b].vertex)
        {
            return Err(Error::InvalidWitness(
                "edge witness does not join its endpoints".into(),
            ));
        }
        for t in 0..edge.path.len() - 1 {
            if w.ball.label_between(edge.path[t], edge.path[t + 1])?.is_none() {
                return Err(Error::InvalidWitness(
                    "edge witness uses a non-edge of the ball".into(),
                ));
            }
        }
        match &edge.kind {
            EdgeKind::Arc { from, len } => {
                if *len == 0 || *len > l {
                    return Err(Error::InvalidWitness("empty or oversized arc".into()));
                }
                if edge.path.len() != len + 1 {
                    return Err(Error::InvalidWitness("arc length mismatch".into()));
                }
                for t in 0..=*len {
                    if edge.path[t] != lp.vertex_at((*from + t) % l.max(1)) {
                        return Err(Error::InvalidWitness(
                            "arc witness does not follow the loop".into(),
                        ));
                    }
                }
                if w.nodes[edge.a].param != Some(*from)
                    || w.nodes[edge.b].param != Some((*from + *len) % l.max(1))
                {
                    return Err(Error::InvalidWitness("arc endpoints mismarked".into()));
                }
            }
            EdgeKind::Geodesic => {
                let d = w
                    .ball
                    .exact_distance(w.nodes[edge.a].vertex, w.nodes[edge.b].vertex)?;
                if edge.path.len() - 1 != d {
                    return Err(Error::InvalidWitness(
                        "internal edge is not a geodesic".into(),
                    ));
                }
            }
        }
    }

    // Arc coverage: the arcs tile [0, L) exactly once.
    let mut covered = vec![false; l];
    for &e in &edges_ref {
        if let EdgeKind::Arc { from, len } = w.edges[e].kind {
            for t in 0..len {
                let p = (from + t) % l;
                if covered[p] {
                    return Err(Error::InvalidWitness(format!(
                        "boundary parameter {p} covered twice"
                    )));
                }
                covered[p] = true;
            }
        }
    }
    if covered.iter().any(|&c| !c) {
        return Err(Error::InvalidWitness(
            "boundary arcs do not cover the whole loop".into(),
        ));
    }

    // Explicit chord crossing check (mark-to-mark geodesics).
    let chord_params = w.chords();
    for (i, &(a1, b1)) in chord_params.iter().enumerate() {
        for &(a2, b2) in &chord_params[i + 1..] {
            if chords_cross(l, (a1, b1), (a2, b2)) {
                return Err(Error::InvalidWitness(format!(
                    "chords ({a1},{b1}) and ({a2},{b2}) cross"
                )));
            }
        }
    }

    // Face walks: closed, node-simple, edge-simple; count orientation slots.
    let mut arc_slots: HashMap<usize, usize> = HashMap::new();
    let mut geo_slots: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut lengths = Vec::with_capacity(alive.len());
    for &f in &alive {
        let darts = w.faces[f].as_ref().unwrap();
        if darts.is_empty() {
            return Err(Error::InvalidWitness("empty face".into()));
        }
        let mut seen_nodes = HashSet::new();
        let mut seen_edges = HashSet::new();
        let mut length = 0usize;
        for (i, &d) in darts.iter().enumerate() {
            let next = darts[(i + 1) % darts.len()];
            if w.dart_end(d) != w.dart_start(next) {
                return Err(Error::InvalidWitness("face walk is not closed".into()));
            }
            if !seen_nodes.insert(w.dart_start(d)) && !trivial {
                return Err(Error::InvalidWitness(
                    "face walk revisits a vertex".into(),
                ));
            }
            if !seen_edges.insert(d.edge) {
                return Err(Error::InvalidWitness("face walk reuses an edge".into()));
            }
            length += w.edge_len(d.edge);
            match w.edges[d.edge].kind {
                EdgeKind::Arc { .. } => {
                    if d.rev {
                        return Err(Error::InvalidWitness(
                            "face traverses a boundary arc backwards".into(),
                        ));
                    }
                    *arc_slots.entry(d.edge).or_insert(0) += 1;
                }
                EdgeKind::Geodesic => {
                    let slot = geo_slots.entry(d.edge).or_insert((0, 0));
                    if d.rev {
                        slot.1 += 1;
                    } else {
                        slot.0 += 1;
                    }
                }
            }
        }
        lengths.push(length);
    }
    for &e in &edges_ref {
        match w.edges[e].kind {
            EdgeKind::Arc { .. } => {
                if arc_slots.get(&e) != Some(&1) {
                    return Err(Error::InvalidWitness(
                        "boundary arc not on exactly one face".into(),
                    ));
                }
            }
            EdgeKind::Geodesic => {
                if geo_slots.get(&e) != Some(&(1, 1)) {
                    return Err(Error::InvalidWitness(
                        "internal edge not on exactly two faces".into(),
                    ));
                }
            }
        }
    }

    // Degree condition: every vertex of the diagram has degree >= 3
    // (marks carry two arc incidences).
    if !trivial {
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for &e in &edges_ref {
            *degree.entry(w.edges[e].a).or_insert(0) += 1;
            *degree.entry(w.edges[e].b).or_insert(0) += 1;
        }
        for &n in &nodes_ref {
            if degree.get(&n).copied().unwrap_or(0) < 3 {
                return Err(Error::InvalidWitness(
                    "diagram vertex of degree below three".into(),
                ));
            }
        }
    }

    // Euler count for the disc: V - E + (F + outer) = 2.
    let v = nodes_ref.len() as i64;
    let e = edges_ref.len() as i64;
    let fcount = alive.len() as i64 + 1;
    if v - e + fcount != 2 {
        return Err(Error::InvalidWitness(format!(
            "Euler count V-E+F = {} != 2",
            v - e + fcount
        )));
    }

    // 1-skeleton connectivity.
    let start = *nodes_ref.iter().next().unwrap();
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(n) = queue.pop_front() {
        for &eid in &edges_ref {
            let edge = &w.edges[eid];
            for (x, y) in [(edge.a, edge.b), (edge.b, edge.a)] {
                if x == n && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
    }
    if seen.len() != nodes_ref.len() {
        return Err(Error::InvalidWitness("diagram is disconnected".into()));
    }

    let mesh = lengths.iter().copied().max().unwrap_or(0);
    Ok(PartitionReport {
        pieces: lengths.len(),
        piece_lengths: lengths,
        mesh,
    })
}

/// Do chords (a1,b1) and (a2,b2) cross in cyclic order on [0, l)?
fn chords_cross(l: usize, c1: (usize, usize), c2: (usize, usize)) -> bool {
    let inside = |x: usize, (a, b): (usize, usize)| -> bool {
        // strictly inside the cyclic interval (a, b)
        if x == a || x == b {
            return false;
        }
        let span = (b + l - a) % l;
        let off = (x + l - a) % l;
        off > 0 && off < span
    };
    let share = c1.0 == c2.0 || c1.0 == c2.1 || c1.1 == c2.0 || c1.1 == c2.1;
    !share && (inside(c2.0, c1) != inside(c2.1, c1))
}

/// The five-piece construction: marks at the floor quarter points, the
/// inscribed square as four geodesic chords, giving four 2-gons and one
/// central 4-gon. Requires `8 diam < |loop|`; the mesh bound
/// `max{|loop|/4 + diam, 4 diam} < |loop|/2` is verified, not assumed (with
/// ceil(L/4) replacing L/4 when 4 does not divide L).
pub fn inscribed_square_partition(lp: &LoopPath) -> Result<PartitionWitness> {
    let l = lp.len();
    let diam = lp.diameter()?;
    if 8 * diam >= l {
        return Err(Error::Precondition(format!(
            "inscribed-square construction requires 8*diam < |loop| (diam {diam}, length {l})"
        )));
    }
    let marks: Vec<usize> = (0..4).map(|k| k * l / 4).collect();
    let chords = [
        (marks[0], marks[1]),
        (marks[1], marks[2]),
        (marks[2], marks[3]),
        (marks[3], marks[0]),
    ];
    let w = PartitionWitness::from_chords(lp, &chords)?;
    let report = validate_partition(&w, lp)?;
    if report.pieces != 5 {
        return Err(Error::HypothesisFailure(format!(
            "inscribed-square construction yielded {} pieces",
            report.pieces
        )));
    }
    let quarter = l.div_ceil(4);
    let bound = (quarter + diam).max(4 * diam);
    if report.mesh > bound || 2 * report.mesh >= l {
        return Err(Error::HypothesisFailure(format!(
            "inscribed-square mesh {} exceeds its bound (quarter {} + diam {}, loop {})",
            report.mesh, quarter, diam, l
        )));
    }
    Ok(w)
}

/// Refine a partition: every piece of boundary length >= delta is handed to
/// the splitter (as a based loop) and its returned partition is grafted back
/// in; shorter pieces are kept. The splitter must return chord-family
/// witnesses (marks and chords only). The combined piece count is checked
/// against old count times the largest per-piece count.
pub fn refine_partition(
    lp: &LoopPath,
    base: &PartitionWitness,
    delta: Ratio<u64>,
    splitter: &mut dyn FnMut(&LoopPath) -> Result<PartitionWitness>,
) -> Result<PartitionWitness> {
    if base.loop_word != *lp.word() || base.loop_vertices != lp.vertices() {
        return Err(Error::InvalidWitness(
            "base partition was built for a different loop".into(),
        ));
    }
    let cap = max_len_below(delta);
    let mut w = base.clone();
    let old_count = w.piece_count();
    let mut max_sub = 1usize;
    for f in w.alive_faces() {
        if w.face_len(f) <= cap {
            continue;
        }
        let floop = w.face_loop(f)?;
        let sub = splitter(&floop).map_err(|e| Error::SplitterFailed {
            piece: f,
            source: Box::new(e),
        })?;
        let sub_report = validate_partition(&sub, &floop)?;
        if !sub_report.is_delta_partition(delta) {
            return Err(Error::SplitterFailed {
                piece: f,
                source: Box::new(Error::InvalidWitness(format!(
                    "splitter returned mesh {} for threshold {}",
                    sub_report.mesh, delta
                ))),
            });
        }
        if sub.interior_count() > 0 {
            return Err(Error::UnsupportedBackend(
                "refinement grafting supports chord-family splitters only".into(),
            ));
        }
        max_sub = max_sub.max(sub_report.pieces);
        graft_chords(&mut w, f, &sub)?;
    }
    w.drop_degree_two_marks();
    let report_count = w.piece_count();
    if report_count > old_count * max_sub {
        return Err(Error::HypothesisFailure(format!(
            "refined piece count {report_count} exceeds {old_count} x {max_sub}"
        )));
    }
    Ok(w)
}

/// Apply the chords of a sub-partition (expressed in face-loop parameters)
/// inside face `f` of the parent witness.
fn graft_chords(w: &mut PartitionWitness, f: usize, sub: &PartitionWitness) -> Result<()> {
    let darts = w.faces[f]
        .as_ref()
        .ok_or_else(|| Error::InvalidWitness(format!("face {f} is not alive")))?
        .clone();
    let chords = sub.chords();
    // Locate every needed face-loop parameter on the parent face walk.
    let flen: usize = darts.iter().map(|d| w.edge_len(d.edge)).sum();
    let mut params: Vec<usize> = chords.iter().flat_map(|&(p, q)| [p, q]).collect();
    params.sort_unstable();
    params.dedup();

    #[derive(Clone, Copy)]
    enum Loc {
        Node(usize),
        ArcParam(usize),
        GeoOffset { dart: usize, path_off: usize },
    }
    let mut locs: HashMap<usize, Loc> = HashMap::new();
    for &t in &params {
        if t >= flen {
            return Err(Error::InvalidWitness(format!(
                "splitter mark {t} outside the face boundary"
            )));
        }
        let mut acc = 0usize;
        for (j, &d) in darts.iter().enumerate() {
            let elen = w.edge_len(d.edge);
            if t < acc + elen {
                let off = t - acc;
                let loc = if off == 0 {
                    Loc::Node(w.dart_start(d))
                } else {
                    match w.edges[d.edge].kind {
                        EdgeKind::Arc { from, .. } => {
                            Loc::ArcParam((from + off) % w.loop_len().max(1))
                        }
                        EdgeKind::Geodesic => Loc::GeoOffset {
                            dart: j,
                            path_off: if d.rev { elen - off } else { off },
                        },
                    }
                };
                locs.insert(t, loc);
                break;
            }
            acc += elen;
        }
    }

    // Materialize nodes: arcs by global parameter, geodesic offsets by edge
    // subdivision (per original dart, descending path offset so earlier
    // offsets stay inside the first half).
    let mut node_of: HashMap<usize, usize> = HashMap::new();
    let mut geo_jobs: HashMap<usize, Vec<(usize, usize)>> = HashMap::new(); // dart -> (path_off, t)
    for (&t, &loc) in &locs {
        match loc {
            Loc::Node(n) => {
                node_of.insert(t, n);
            }
            Loc::ArcParam(p) => {
                let n = w.mark_for_param(p)?;
                node_of.insert(t, n);
            }
            Loc::GeoOffset { dart, path_off } => {
                geo_jobs.entry(dart).or_default().push((path_off, t));
            }
        }
    }
    for (dart, mut jobs) in geo_jobs {
        jobs.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        let mut eid = darts[dart].edge;
        for (path_off, t) in jobs {
            let (nid, e1, _) = w.subdivide_edge(eid, path_off, None)?;
            node_of.insert(t, nid);
            eid = e1;
        }
    }

    // Apply chords; each lands in a unique alive descendant face.
    for (p, q) in chords {
        let n1 = node_of[&p];
        let n2 = node_of[&q];
        let mut hosts = Vec::new();
        for fi in w.alive_faces() {
            let fd = w.faces[fi].as_ref().unwrap();
            let has = |n: usize| fd.iter().any(|&d| w.dart_start(d) == n);
            if has(n1) && has(n2) {
                hosts.push(fi);
            }
        }
        match hosts.as_slice() {
            [host] => {
                w.split_face_at_nodes(*host, n1, n2, &[])?;
            }
            [] => {
                return Err(Error::InvalidWitness(
                    "splitter chords cross each other".into(),
                ))
            }
            _ => {
                return Err(Error::InvalidWitness(
                    "splitter chord parallel to an existing edge".into(),
                ))
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{ball_for_loop, loop_from_word};
    use crate::oracle::GroupOracle;

    fn z2_loop(s: &str) -> LoopPath {
        let word = Word::parse(s).unwrap();
        let ball = ball_for_loop(GroupOracle::free_abelian(&['a', 'b']), &word).unwrap();
        loop_from_word(&ball, &word).unwrap()
    }

    fn z2_loop_pow(s: &str, e: i64) -> LoopPath {
        let word = Word::parse(s).unwrap().pow(e);
        let ball = ball_for_loop(GroupOracle::free_abelian(&['a', 'b']), &word).unwrap();
        loop_from_word(&ball, &word).unwrap()
    }

    #[test]
    fn trivial_witness_on_unit_square() {
        let lp = z2_loop("abAB");
        let w = PartitionWitness::trivial(&lp);
        let r = validate_partition(&w, &lp).unwrap();
        assert_eq!(r.pieces, 1);
        assert_eq!(r.mesh, 4);
        assert!(r.is_delta_partition(Ratio::new(5, 1)));
        assert!(!r.is_delta_partition(Ratio::new(4, 1)));
    }

    #[test]
    fn single_chord_on_big_square() {
        // 2x2 square, chord between parameters 1 and 5: vertices (1,0) and
        // (1,2), geodesic length 2; two pieces of length 6 each.
        let lp = z2_loop("aabbAABB");
        let w = PartitionWitness::from_chords(&lp, &[(1, 5)]).unwrap();
        let r = validate_partition(&w, &lp).unwrap();
        assert_eq!(r.pieces, 2);
        assert_eq!(r.piece_lengths, vec![6, 6]);
        assert_eq!(r.mesh, 6);
    }

    #[test]
    fn strictness_on_unit_square() {
        let lp = z2_loop("abAB");
        let w = PartitionWitness::from_chords(&lp, &[(0, 2)]).unwrap();
        let r = validate_partition(&w, &lp).unwrap();
        assert_eq!(r.pieces, 2);
        assert_eq!(r.piece_lengths, vec![4, 4]);
        assert!(!r.is_delta_partition(Ratio::new(4, 1)));
    }

    #[test]
    fn piece_length_accounting() {
        // sum of piece lengths = |loop| + 2 * total internal edge length
        let lp = z2_loop("aabbAABB");
        let w = PartitionWitness::from_chords(&lp, &[(1, 5)]).unwrap();
        let internal: usize = w
            .referenced_edges()
            .iter()
            .filter(|&&e| w.edges[e].kind == EdgeKind::Geodesic)
            .map(|&e| w.edge_len(e))
            .sum();
        let total: usize = w.piece_lengths().iter().sum();
        assert_eq!(total, lp.len() + 2 * internal);
    }

    #[test]
    fn crossing_chords_rejected() {
        let lp = z2_loop("aabbAABB");
        assert!(PartitionWitness::from_chords(&lp, &[(1, 5), (3, 7)]).is_err());
    }

    #[test]
    fn inscribed_square_on_multitraced_squares() {
        // (abAB)^5: L = 20, diam 2, bound max{20/4 + 2, 8} = 8 < 10.
        let lp = z2_loop_pow("abAB", 5);
        let w = inscribed_square_partition(&lp).unwrap();
        let r = validate_partition(&w, &lp).unwrap();
        assert_eq!(r.pieces, 5);
        assert!(r.mesh <= 8);
        assert!(2 * r.mesh < lp.len());

        // (abAB)^10: L = 40, bound max{10 + 2, 8} = 12.
        let lp = z2_loop_pow("abAB", 10);
        let r = validate_partition(&inscribed_square_partition(&lp).unwrap(), &lp).unwrap();
        assert_eq!(r.pieces, 5);
        assert!(r.mesh <= 12);
    }

    #[test]
    fn inscribed_square_precondition() {
        // 2x2 square: 8 * diam = 32 >= 8.
        let lp = z2_loop("aabbAABB");
        assert!(matches!(
            inscribed_square_partition(&lp),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn refine_splits_only_long_pieces() {
        let lp = z2_loop("aabbAABB");
        let base = PartitionWitness::trivial(&lp);
        let mut calls = 0usize;
        let refined = refine_partition(
            &lp,
            &base,
            Ratio::new(7, 1),
            &mut |piece: &LoopPath| {
                calls += 1;
                // piece is the whole 2x2 square; split with the midline.
                PartitionWitness::from_chords(piece, &[(1, 5)])
            },
        )
        .unwrap();
        assert_eq!(calls, 1);
        let r = validate_partition(&refined, &lp).unwrap();
        assert_eq!(r.pieces, 2);
        assert_eq!(r.mesh, 6);

        // Second round at the same threshold: pieces of length 6 < 7 kept.
        let mut calls2 = 0usize;
        let again = refine_partition(&lp, &refined, Ratio::new(7, 1), &mut |_: &LoopPath| {
            calls2 += 1;
            Err(Error::Precondition("should not be called".into()))
        })
        .unwrap();
        assert_eq!(calls2, 0);
        assert_eq!(validate_partition(&again, &lp).unwrap().pieces, 2);
    }

    #[test]
    fn refine_inscribed_square_two_rounds() {
        // (abAB)^5, inscribed-square 5 pieces (mesh <= 8), then refine every
        // piece of length >= 5 by hand-picked chords found by quartering.
        let lp = z2_loop_pow("abAB", 5);
        let base = inscribed_square_partition(&lp).unwrap();
        let refined = refine_partition(&lp, &base, Ratio::new(5, 1), &mut |piece: &LoopPath| {
            // Each piece here has even length 6 or 8 and small diameter;
            // a single halving chord suffices when one exists.
            let l = piece.len();
            for s in 0..l {
                let t = (s + l / 2) % l;
                if let Ok(w) = PartitionWitness::from_chords(piece, &[(s.min(t), s.max(t))]) {
                    if let Ok(r) = validate_partition(&w, piece) {
                        if r.is_delta_partition(Ratio::new(5, 1)) {
                            return Ok(w);
                        }
                    }
                }
            }
            Err(Error::InvalidWitness("no halving chord".into()))
        })
        .unwrap();
        let r = validate_partition(&refined, &lp).unwrap();
        assert!(r.pieces <= 10, "pieces {}", r.pieces);
        assert!(r.mesh < 5);
    }

    #[test]
    fn json_round_trip_is_stable() {
        let lp = z2_loop_pow("abAB", 5);
        let w = inscribed_square_partition(&lp).unwrap();
        let j1 = w.to_json().unwrap();
        let w2 = PartitionWitness::from_json(&lp, &j1).unwrap();
        let j2 = w2.to_json().unwrap();
        assert_eq!(j1, j2);
        let r = validate_partition(&w2, &lp).unwrap();
        assert_eq!(r.pieces, 5);
    }
}
