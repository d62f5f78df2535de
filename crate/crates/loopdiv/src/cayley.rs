//! Finite balls in Cayley graphs, distance queries and loops.
//!
//! A ball stores every group element at word-distance at most `radius` from
//! the identity, indexed densely with vertex 0 the identity. Distances
//! between arbitrary vertices are computed by BFS inside the ball and cached
//! per source; a distance is exact (not merely ball-restricted) whenever a
//! true geodesic provably cannot leave the ball.

use crate::error::{Error, Result};
use crate::oracle::GroupOracle;
use crate::presentation::{Gen, Word};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

/// Upper bound on ball size, to fail fast instead of thrashing.
pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

/// A finite ball in a Cayley graph.
pub struct CayleyBall {
    oracle: GroupOracle,
    radius: usize,
    /// Canonical word per vertex; index 0 is the identity.
    vertices: Vec<Word>,
    index: HashMap<Word, usize>,
    /// Outgoing labeled edges per vertex (both generator directions).
    edges: Vec<Vec<(Gen, usize)>>,
    dist_from_base: Vec<usize>,
    dist_cache: RefCell<HashMap<usize, Rc<Vec<Option<usize>>>>>,
}

/// A distance answer: the in-ball distance, one witness path (vertex ids,
/// endpoints included), and whether the value is only an upper bound because
/// a shorter geodesic could leave the ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: usize,
    pub witness: Vec<usize>,
    pub ball_limited: bool,
}

/// Serialized ball: generators, radius, canonical vertex words and labeled
/// edges `[u, label, v]`.
#[derive(Debug, Serialize, Deserialize)]
struct BallJson {
    generators: Vec<char>,
    radius: usize,
    vertices: Vec<String>,
    edges: Vec<(usize, String, usize)>,
}

impl CayleyBall {
    /// Build the ball of the given radius by BFS from the identity.
    pub fn build(oracle: GroupOracle, radius: usize) -> Result<CayleyBall> {
        Self::build_capped(oracle, radius, DEFAULT_VERTEX_CAP)
    }

    pub fn build_capped(
        oracle: GroupOracle,
        radius: usize,
        vertex_cap: usize,
    ) -> Result<CayleyBall> {
        let gens: Vec<Gen> = oracle
            .generators()
            .iter()
            .flat_map(|&c| [Gen::new(c, false), Gen::new(c, true)])
            .collect();

        let mut vertices: Vec<Word> = vec![Word::empty()];
        let mut index: HashMap<Word, usize> = HashMap::new();
        index.insert(Word::empty(), 0);
        let mut dist: Vec<usize> = vec![0];
        let mut queue: VecDeque<usize> = VecDeque::new();
        queue.push_back(0);

        // Vertex pass. Representatives are canonical normal forms when the
        // backend computes them; otherwise the shortlex-first BFS word, with
        // identification by pairwise oracle equality against candidates at
        // adjacent distances.
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            if d == radius {
                continue;
            }
            for &g in &gens {
                let cand = vertices[u].concat(&Word(vec![g]));
                let resolved = resolve_vertex(&oracle, &vertices, &index, &dist, &cand, d + 1)?;
                if resolved.is_some() {
                    continue;
                }
                let rep = if oracle.has_normal_form() {
                    oracle.normal_form(&cand)?
                } else {
                    cand.free_reduce()
                };
                if vertices.len() >= vertex_cap {
                    return Err(Error::BudgetExceeded(format!(
                        "ball exceeds vertex cap {vertex_cap}"
                    )));
                }
                let id = vertices.len();
                index.insert(rep.clone(), id);
                vertices.push(rep);
                dist.push(d + 1);
                queue.push_back(id);
            }
        }

        // Edge pass: every adjacency between in-ball vertices.
        let mut edges: Vec<Vec<(Gen, usize)>> = vec![Vec::new(); vertices.len()];
        for u in 0..vertices.len() {
            for &g in &gens {
                let cand = vertices[u].concat(&Word(vec![g]));
                if let Some(v) = resolve_vertex(&oracle, &vertices, &index, &dist, &cand, dist[u])?
                {
                    edges[u].push((g, v));
                }
            }
        }

        Ok(CayleyBall {
            oracle,
            radius,
            vertices,
            index,
            edges,
            dist_from_base: dist,
            dist_cache: RefCell::new(HashMap::new()),
        })
    }

    pub fn oracle(&self) -> &GroupOracle {
        &self.oracle
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn directed_edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn vertex_word(&self, v: usize) -> Result<&Word> {
        self.vertices
            .get(v)
            .ok_or(Error::VertexOutOfRange(v))
    }

    pub fn dist_from_base(&self, v: usize) -> Result<usize> {
        self.dist_from_base
            .get(v)
            .copied()
            .ok_or(Error::VertexOutOfRange(v))
    }

    pub fn neighbors(&self, v: usize) -> Result<&[(Gen, usize)]> {
        self.edges
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::VertexOutOfRange(v))
    }

    /// Some generator labeling an edge from `u` to `v`, if one exists.
    pub fn label_between(&self, u: usize, v: usize) -> Result<Option<Gen>> {
        Ok(self
            .neighbors(u)?
            .iter()
            .find(|&&(_, w)| w == v)
            .map(|&(g, _)| g))
    }

    /// The neighbor of `v` along generator `g`, when it lies in the ball.
    pub fn step(&self, v: usize, g: Gen) -> Result<Option<usize>> {
        Ok(self
            .neighbors(v)?
            .iter()
            .find(|&&(label, _)| label == g)
            .map(|&(_, w)| w))
    }

    /// Look up the vertex equal to the given word, if it lies in the ball.
    pub fn vertex_of_word(&self, word: &Word) -> Result<Option<usize>> {
        if self.oracle.has_normal_form() {
            return Ok(self.index.get(&self.oracle.normal_form(word)?).copied());
        }
        if let Some(&i) = self.index.get(&word.free_reduce()) {
            return Ok(Some(i));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if self.oracle.is_trivial(&word.concat(&v.inverse()))? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn dist_vec(&self, source: usize) -> Rc<Vec<Option<usize>>> {
        if let Some(v) = self.dist_cache.borrow().get(&source) {
            return Rc::clone(v);
        }
        let mut d: Vec<Option<usize>> = vec![None; self.vertices.len()];
        d[source] = Some(0);
        let mut queue = VecDeque::new();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = d[u].unwrap();
            for &(_, w) in &self.edges[u] {
                if d[w].is_none() {
                    d[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        let rc = Rc::new(d);
        self.dist_cache
            .borrow_mut()
            .insert(source, Rc::clone(&rc));
        rc
    }

    /// In-ball distance with a witness path. `ball_limited` is set when a
    /// geodesic shorter than the in-ball one could in principle leave the
    /// ball (i.e. the containment criterion `min dist-from-base + d <= radius`
    /// fails).
    pub fn distance(&self, u: usize, v: usize) -> Result<DistanceResult> {
        if u >= self.vertices.len() {
            return Err(Error::VertexOutOfRange(u));
        }
        if v >= self.vertices.len() {
            return Err(Error::VertexOutOfRange(v));
        }
        let d = self.dist_vec(u);
        let Some(dv) = d[v] else {
            return Err(Error::BallLimited(u, v));
        };
        // Walk back from v along strictly decreasing distance.
        let mut witness = vec![v];
        let mut cur = v;
        while cur != u {
            let dc = d[cur].unwrap();
            let prev = self.edges[cur]
                .iter()
                .map(|&(_, w)| w)
                .find(|&w| d[w] == Some(dc - 1))
                .expect("BFS predecessor exists");
            witness.push(prev);
            cur = prev;
        }
        witness.reverse();
        let base_min = self.dist_from_base[u].min(self.dist_from_base[v]);
        Ok(DistanceResult {
            distance: dv,
            witness,
            ball_limited: base_min + dv > self.radius,
        })
    }

    /// Exact distance; errors on any ball-limited answer.
    pub fn exact_distance(&self, u: usize, v: usize) -> Result<usize> {
        let r = self.distance(u, v)?;
        if r.ball_limited {
            return Err(Error::BallLimited(u, v));
        }
        Ok(r.distance)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut edges = Vec::new();
        for (u, adj) in self.edges.iter().enumerate() {
            for &(g, v) in adj {
                edges.push((u, g.to_string(), v));
            }
        }
        let data = BallJson {
            generators: self.oracle.generators().to_vec(),
            radius: self.radius,
            vertices: self.vertices.iter().map(|w| w.to_string()).collect(),
            edges,
        };
        Ok(serde_json::to_string_pretty(&data)?)
    }

    /// Rebuild a ball from its JSON export. The caller supplies the oracle
    /// (the export records only the graph).
    pub fn from_json(oracle: GroupOracle, text: &str) -> Result<CayleyBall> {
        let data: BallJson = serde_json::from_str(text)?;
        if data.generators != oracle.generators() {
            return Err(Error::AlphabetMismatch);
        }
        let mut vertices = Vec::with_capacity(data.vertices.len());
        let mut index = HashMap::new();
        for (i, s) in data.vertices.iter().enumerate() {
            let w = if s == "1" { Word::empty() } else { Word::parse(s)? };
            index.insert(w.clone(), i);
            vertices.push(w);
        }
        let mut edges = vec![Vec::new(); vertices.len()];
        for (u, label, v) in &data.edges {
            if *u >= vertices.len() || *v >= vertices.len() {
                return Err(Error::VertexOutOfRange((*u).max(*v)));
            }
            let g = Word::parse(label)?;
            if g.len() != 1 {
                return Err(Error::Parse(format!("bad edge label '{label}'")));
            }
            edges[*u].push((g.0[0], *v));
        }
        // Recompute base distances rather than trusting the file.
        let mut dist = vec![usize::MAX; vertices.len()];
        dist[0] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(0);
        while let Some(u) = queue.pop_front() {
            for &(_, w) in &edges[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if dist.iter().any(|&d| d == usize::MAX || d > data.radius) {
            return Err(Error::InvalidWitness(
                "ball file is disconnected or exceeds its radius".into(),
            ));
        }
        Ok(CayleyBall {
            oracle,
            radius: data.radius,
            vertices,
            index,
            edges,
            dist_from_base: dist,
            dist_cache: RefCell::new(HashMap::new()),
        })
    }
}

/// Find the existing vertex equal to `cand`, if any. `d_hint` bounds the
/// candidate's distance from the base: only vertices at distance within 1 of
/// it can be equal, which keeps brute-backend equality scans short.
fn resolve_vertex(
    oracle: &GroupOracle,
    vertices: &[Word],
    index: &HashMap<Word, usize>,
    dist: &[usize],
    cand: &Word,
    d_hint: usize,
) -> Result<Option<usize>> {
    if oracle.has_normal_form() {
        return Ok(index.get(&oracle.normal_form(cand)?).copied());
    }
    if let Some(&i) = index.get(&cand.free_reduce()) {
        return Ok(Some(i));
    }
    for (i, w) in vertices.iter().enumerate() {
        if dist[i] + 1 < d_hint || dist[i] > d_hint + 1 {
            continue;
        }
        if oracle.is_trivial(&cand.concat(&w.inverse()))? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// A based closed edge-path in a ball: vertices `v_0, ..., v_L` with
/// `v_L = v_0`, parameterized by integer times.
#[derive(Clone)]
pub struct LoopPath {
    ball: Rc<CayleyBall>,
    word: Word,
    vertices: Vec<usize>,
}

impl LoopPath {
    /// Assemble a loop from an already-traced vertex sequence.
    pub(crate) fn from_parts(ball: Rc<CayleyBall>, word: Word, vertices: Vec<usize>) -> LoopPath {
        debug_assert_eq!(vertices.len(), word.len() + 1);
        debug_assert_eq!(vertices.first(), vertices.last());
        LoopPath {
            ball,
            word,
            vertices,
        }
    }

    /// Arc length (edge count).
    pub fn len(&self) -> usize {
        self.word.len()
    }

    /// Vertex ids `v_0, ..., v_L` (first equals last).
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn ball(&self) -> &Rc<CayleyBall> {
        &self.ball
    }

    /// Vertex at integer time `t`, reduced mod L.
    pub fn vertex_at(&self, t: usize) -> usize {
        if self.word.is_empty() {
            return self.vertices[0];
        }
        self.vertices[t % self.word.len()]
    }

    /// Exact distance between two loop parameters.
    pub fn param_distance(&self, s: usize, t: usize) -> Result<usize> {
        self.ball.exact_distance(self.vertex_at(s), self.vertex_at(t))
    }

    /// Max pairwise distance over the loop's vertex image; errors if any
    /// pair is only ball-limited.
    pub fn diameter(&self) -> Result<usize> {
        let mut image: Vec<usize> = self.vertices.clone();
        image.sort_unstable();
        image.dedup();
        let mut best = 0;
        for (i, &u) in image.iter().enumerate() {
            for &v in &image[i + 1..] {
                best = best.max(self.ball.exact_distance(u, v)?);
            }
        }
        Ok(best)
    }
}

/// Trace the trivial word `w` as a based loop at the identity.
pub fn loop_from_word(ball: &Rc<CayleyBall>, w: &Word) -> Result<LoopPath> {
    if !ball.oracle().is_trivial(w)? {
        return Err(Error::NotTrivial);
    }
    let mut vertices = Vec::with_capacity(w.len() + 1);
    let mut cur = 0usize;
    vertices.push(cur);
    for &g in &w.0 {
        match ball.step(cur, g)? {
            Some(next) => {
                cur = next;
                vertices.push(cur);
            }
            None => return Err(Error::PathExitsBall),
        }
    }
    debug_assert_eq!(cur, 0);
    Ok(LoopPath {
        ball: Rc::clone(ball),
        word: w.clone(),
        vertices,
    })
}

/// Ball radius policy for loop work: radius `|w|` contains every geodesic
/// between loop vertices (each is within `|w|/2` of the base, pairwise
/// distances at most `|w|/2`), so partition queries never hit the boundary.
pub fn ball_for_loop(oracle: GroupOracle, w: &Word) -> Result<Rc<CayleyBall>> {
    Ok(Rc::new(CayleyBall::build(oracle, w.len())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::BruteBudget;
    use crate::presentation::parse_presentation;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn z2_ball(r: usize) -> Rc<CayleyBall> {
        Rc::new(CayleyBall::build(GroupOracle::free_abelian(&['a', 'b']), r).unwrap())
    }

    #[test]
    fn ball_sizes() {
        let b = z2_ball(1);
        assert_eq!(b.vertex_count(), 5);
        assert_eq!(b.directed_edge_count(), 8);
        assert_eq!(z2_ball(2).vertex_count(), 13);
        let f2 = CayleyBall::build(GroupOracle::free(&['a', 'b']), 2).unwrap();
        assert_eq!(f2.vertex_count(), 17);
    }

    #[test]
    fn distances_match_taxicab() {
        let b = z2_ball(3);
        // taxicab oracle: |da| + |db| from exponent vectors
        let taxi = |word: &Word| -> usize {
            let mut a = 0i64;
            let mut bb = 0i64;
            for g in &word.0 {
                let s = if g.inv { -1 } else { 1 };
                if g.sym == 'a' {
                    a += s;
                } else {
                    bb += s;
                }
            }
            (a.unsigned_abs() + bb.unsigned_abs()) as usize
        };
        for u in 0..b.vertex_count() {
            assert_eq!(b.distance(0, u).unwrap().distance, b.dist_from_base(u).unwrap());
            for v in 0..b.vertex_count() {
                let diff = b
                    .vertex_word(u)
                    .unwrap()
                    .inverse()
                    .concat(b.vertex_word(v).unwrap());
                let r = b.distance(u, v).unwrap();
                if !r.ball_limited {
                    assert_eq!(r.distance, taxi(&diff));
                    assert_eq!(r.witness.len(), r.distance + 1);
                }
            }
        }
        // e to ab is 2, e to a^2 b is 3
        let ab = *b.index.get(&w("ab")).unwrap();
        assert_eq!(b.exact_distance(0, ab).unwrap(), 2);
        let aab = *b.index.get(&w("aab")).unwrap();
        assert_eq!(b.exact_distance(0, aab).unwrap(), 3);
    }

    #[test]
    fn free_group_distances_match_tree_metric() {
        let b = CayleyBall::build(GroupOracle::free(&['a', 'b']), 4).unwrap();
        for u in 0..b.vertex_count() {
            for v in 0..b.vertex_count() {
                let wu = b.vertex_word(u).unwrap();
                let wv = b.vertex_word(v).unwrap();
                let expect = wu.inverse().concat(wv).free_reduce().len();
                let r = b.distance(u, v).unwrap();
                if !r.ball_limited {
                    assert_eq!(r.distance, expect);
                }
            }
        }
    }

    #[test]
    fn triangle_inequality_sampled() {
        let b = z2_ball(3);
        let n = b.vertex_count();
        for u in 0..n {
            for v in 0..n {
                for x in [0usize, 3 % n, 7 % n] {
                    let duv = b.distance(u, v).unwrap().distance;
                    let dux = b.distance(u, x).unwrap().distance;
                    let dxv = b.distance(x, v).unwrap().distance;
                    assert!(duv <= dux + dxv);
                }
            }
        }
    }

    #[test]
    fn loops_and_diameters() {
        let b = z2_ball(8);
        let square = loop_from_word(&b, &w("abAB")).unwrap();
        assert_eq!(square.len(), 4);
        assert_eq!(square.diameter().unwrap(), 2);

        let big = loop_from_word(&b, &w("aabbAABB")).unwrap();
        assert_eq!(big.len(), 8);
        assert_eq!(big.diameter().unwrap(), 4);

        let multi = loop_from_word(&b, &w("abAB").pow(5)).unwrap();
        assert_eq!(multi.len(), 20);
        let mut image = multi.vertices.clone();
        image.sort_unstable();
        image.dedup();
        assert_eq!(image.len(), 4);
        assert_eq!(multi.diameter().unwrap(), 2);
    }

    #[test]
    fn loop_rejects_nontrivial_words() {
        let b = z2_ball(4);
        assert!(matches!(
            loop_from_word(&b, &w("ab")),
            Err(Error::NotTrivial)
        ));
    }

    #[test]
    fn loop_edge_labels_recover_word() {
        let b = z2_ball(4);
        let word = w("aabbAABB");
        let lp = loop_from_word(&b, &word).unwrap();
        let mut read = Word::empty();
        for t in 0..lp.len() {
            let u = lp.vertices[t];
            let v = lp.vertices[t + 1];
            let g = b
                .neighbors(u)
                .unwrap()
                .iter()
                .find(|&&(label, to)| to == v && label == word.0[t])
                .map(|&(label, _)| label)
                .unwrap();
            read.push(g);
        }
        assert_eq!(read, word);
    }

    #[test]
    fn brute_backend_ball_matches_exact_backend() {
        let pres = parse_presentation("generators: a b\nrelators: [a,b]").unwrap();
        let brute = GroupOracle::finite_ball_brute(pres, 6, BruteBudget::default()).unwrap();
        let b = CayleyBall::build(brute, 2).unwrap();
        assert_eq!(b.vertex_count(), 13);
        let exact = z2_ball(2);
        assert_eq!(b.directed_edge_count(), exact.directed_edge_count());
    }

    #[test]
    fn json_round_trip() {
        let b = z2_ball(2);
        let text = b.to_json().unwrap();
        let b2 = CayleyBall::from_json(GroupOracle::free_abelian(&['a', 'b']), &text).unwrap();
        assert_eq!(b2.vertex_count(), b.vertex_count());
        assert_eq!(b2.directed_edge_count(), b.directed_edge_count());
        for u in 0..b.vertex_count() {
            assert_eq!(
                b.dist_from_base(u).unwrap(),
                b2.dist_from_base(u).unwrap()
            );
        }
    }
}
