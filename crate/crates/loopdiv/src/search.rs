//! Minimal-piece searches: how few pieces can a partition of a given loop
//! have, subject to a strict mesh threshold?
//!
//! Two families are searched. The chord family (marks on the loop joined by
//! pairwise non-crossing geodesic chords) admits an exact dynamic program.
//! The general family additionally allows interior vertices; it is explored
//! by branch and bound over cut sequences, exhaustive within the supplied
//! piece and interior-vertex budgets.

use crate::cayley::LoopPath;
use crate::error::{Error, Result};
use crate::partition::{max_len_below, validate_partition, PartitionWitness};
use num::rational::Ratio;
use std::collections::HashMap;

/// Budgets for the branch-and-bound search. `max_states` caps the number of
/// explored states; exceeding it yields a budget error (or a possibly
/// non-minimal result) rather than a definitive answer.
#[derive(Debug, Clone, Copy)]
pub struct SearchBudgets {
    pub max_pieces: usize,
    pub max_interior: usize,
    pub max_states: usize,
}

impl SearchBudgets {
    pub fn new(max_pieces: usize, max_interior: usize) -> SearchBudgets {
        SearchBudgets {
            max_pieces,
            max_interior,
            max_states: 200_000,
        }
    }
}

/// Outcome of a minimal-piece search. `value` is `None` when the search
/// space was exhausted without finding any admissible partition
/// ("NOT-FOUND"). `exhaustive` records whether the search space was fully
/// explored, i.e. whether `value` is provably minimal (or provably absent).
pub struct MinPiecesResult {
    pub value: Option<usize>,
    pub witness: Option<PartitionWitness>,
    pub family: String,
    pub explored: usize,
    pub exhaustive: bool,
}

/// A lower bound on the piece count from an area lower bound for the loop
/// and an isoperimetric bound for a single piece at the given mesh.
pub fn pieces_lower_bound(area_lb: u128, iso_at_delta: u128) -> u128 {
    if iso_at_delta == 0 {
        return if area_lb == 0 { 0 } else { u128::MAX };
    }
    area_lb.div_ceil(iso_at_delta)
}

// ---------------------------------------------------------------------------
// Chord-family dynamic program.
// ---------------------------------------------------------------------------

struct ChordDp<'a> {
    lp: &'a LoopPath,
    cap: usize,
    dist: Vec<Vec<usize>>,
    /// memo[(i, j)]: minimal pieces filling the region between chord (i, j)
    /// and the forward boundary arc i..j, with the chord-step chain used.
    memo: HashMap<(usize, usize), Option<(usize, Vec<(usize, usize)>)>>,
    explored: usize,
}

impl<'a> ChordDp<'a> {
    fn new(lp: &'a LoopPath, cap: usize) -> Result<ChordDp<'a>> {
        let l = lp.len();
        let mut dist = vec![vec![0usize; l]; l];
        for i in 0..l {
            for j in 0..l {
                dist[i][j] = lp
                    .ball()
                    .exact_distance(lp.vertex_at(i), lp.vertex_at(j))?;
            }
        }
        Ok(ChordDp {
            lp,
            cap,
            dist,
            memo: HashMap::new(),
            explored: 0,
        })
    }

    /// Best chain of arc/chord steps from `i` to `j` along the forward arc,
    /// with at most `room` total step length. Returns (pieces conceded to
    /// chord-step regions, chain of chord steps used).
    fn best_chain(
        &mut self,
        i: usize,
        j: usize,
        room: usize,
        allow_full: bool,
    ) -> Option<(usize, Vec<(usize, usize)>)> {
        // dp[t - i][u]: min cost reaching parameter t with step length u.
        let span = j - i;
        let mut dp = vec![vec![usize::MAX; room + 1]; span + 1];
        let mut prev: Vec<Vec<Option<(usize, usize)>>> = vec![vec![None; room + 1]; span + 1];
        dp[0][0] = 0;
        for t in 1..=span {
            for u in 0..=room {
                // Unit boundary step from t-1.
                if u >= 1 && dp[t - 1][u - 1] != usize::MAX {
                    dp[t][u] = dp[t - 1][u - 1];
                    prev[t][u] = Some((t - 1, u - 1));
                }
                // Chord step from some earlier parameter s.
                for s in 0..t {
                    if s == 0 && t == span && !allow_full {
                        continue;
                    }
                    let d = self.dist[(i + s) % self.lp.len().max(1)]
                        [(i + t) % self.lp.len().max(1)];
                    if d > u || dp[s][u - d] == usize::MAX {
                        continue;
                    }
                    if let Some((sub, _)) = self.region(i + s, i + t).clone() {
                        let cand = dp[s][u - d].saturating_add(sub);
                        if cand < dp[t][u] {
                            dp[t][u] = cand;
                            prev[t][u] = Some((s, u - d));
                        }
                    }
                }
            }
        }
        let mut best: Option<(usize, usize)> = None;
        for u in 0..=room {
            if dp[span][u] != usize::MAX && best.map(|(c, _)| dp[span][u] < c).unwrap_or(true) {
                best = Some((dp[span][u], u));
            }
        }
        let (cost, mut u) = best?;
        // Walk predecessors to list the chord steps taken.
        let mut chords = Vec::new();
        let mut t = span;
        while t > 0 {
            let (s, us) = prev[t][u].unwrap();
            // A length-1 chord from t-1 would leave the same predecessor
            // coordinates as a unit arc step, but it is never strictly
            // better than the arc, so it is never recorded.
            if t - s > 1 || us != u - 1 {
                chords.push((i + s, i + t));
            }
            t = s;
            u = us;
        }
        chords.reverse();
        Some((cost, chords))
    }

    /// Minimal pieces filling the region bounded by chord (i, j) and the
    /// forward arc from i to j, together with its top chain of chord steps.
    fn region(&mut self, i: usize, j: usize) -> Option<(usize, Vec<(usize, usize)>)> {
        if let Some(hit) = self.memo.get(&(i, j)) {
            return hit.clone();
        }
        self.explored += 1;
        let d = self.dist[i % self.lp.len().max(1)][j % self.lp.len().max(1)];
        let ans = if d > self.cap {
            None
        } else {
            self.best_chain(i, j, self.cap - d, false)
                .map(|(cost, chords)| (cost + 1, chords))
        };
        self.memo.insert((i, j), ans.clone());
        ans
    }

    fn collect_chords(&self, chain: &[(usize, usize)], out: &mut Vec<(usize, usize)>) {
        for &(s, t) in chain {
            out.push((s % self.lp.len().max(1), t % self.lp.len().max(1)));
            if let Some(Some((_, sub))) = self.memo.get(&(s, t)) {
                self.collect_chords(sub, out);
            }
        }
    }
}

/// Exact minimum over the chord family (no interior vertices). Exhaustive:
/// a `None` value is a proof that no chord-family partition meets the mesh
/// threshold.
pub fn min_pieces_chord(lp: &LoopPath, delta: Ratio<u64>) -> Result<MinPiecesResult> {
    let l = lp.len();
    let cap = max_len_below(delta);
    if l <= cap {
        let w = PartitionWitness::trivial(lp);
        return Ok(MinPiecesResult {
            value: Some(1),
            witness: Some(w),
            family: "chord".into(),
            explored: 1,
            exhaustive: true,
        });
    }
    if l == 0 || cap == 0 {
        return Ok(MinPiecesResult {
            value: None,
            witness: None,
            family: "chord".into(),
            explored: 0,
            exhaustive: true,
        });
    }
    let mut dp = ChordDp::new(lp, cap)?;
    // The face adjacent to the boundary arc through parameter 0 runs from
    // its last mark `u1` backwards over 0 to its first mark `u0`; the rest
    // of that face is a chain from u0 to u1.
    let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
    for u0 in 0..l {
        for u1 in (u0 + 1)..l {
            let closing = l - (u1 - u0);
            if closing > cap {
                continue;
            }
            if let Some((cost, chain)) = dp.best_chain(u0, u1, cap - closing, true) {
                let total = cost + 1;
                if best.as_ref().map(|(c, _)| total < *c).unwrap_or(true) {
                    best = Some((total, chain));
                }
            }
        }
    }
    let explored = dp.explored + 1;
    match best {
        None => Ok(MinPiecesResult {
            value: None,
            witness: None,
            family: "chord".into(),
            explored,
            exhaustive: true,
        }),
        Some((value, chain)) => {
            let mut chords = Vec::new();
            dp.collect_chords(&chain, &mut chords);
            let w = PartitionWitness::from_chords(lp, &chords)?;
            let report = validate_partition(&w, lp)?;
            if report.pieces != value || !report.is_delta_partition(delta) {
                return Err(Error::HypothesisFailure(format!(
                    "chord search reconstruction mismatch: claimed {value}, got {} pieces, mesh {}",
                    report.pieces, report.mesh
                )));
            }
            Ok(MinPiecesResult {
                value: Some(value),
                witness: Some(w),
                family: "chord".into(),
                explored,
                exhaustive: true,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Branch and bound with interior vertices.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Position {
    /// An existing diagram node.
    Node(usize),
    /// New mark splitting an arc edge at the given path offset.
    ArcSub { edge: usize, off: usize },
    /// New interior vertex splitting a geodesic edge, realized at `x`.
    GeoSub { edge: usize, off: usize, x: usize },
}

impl Position {
    fn interior_cost(&self) -> usize {
        matches!(self, Position::GeoSub { .. }) as usize
    }
}

struct Steiner<'a> {
    lp: &'a LoopPath,
    delta: Ratio<u64>,
    cap: usize,
    half: usize,
    budgets: SearchBudgets,
    best: Option<(usize, PartitionWitness)>,
    explored: usize,
    truncated: bool,
    seen: HashMap<Vec<Vec<(u8, usize, usize, usize)>>, Vec<(usize, usize)>>,
}

impl<'a> Steiner<'a> {
    fn state_key(w: &PartitionWitness) -> Vec<Vec<(u8, usize, usize, usize)>> {
        let mut faces: Vec<Vec<(u8, usize, usize, usize)>> = w
            .alive_faces()
            .into_iter()
            .map(|f| {
                let darts = w.faces[f].as_ref().unwrap();
                let toks: Vec<(u8, usize, usize, usize)> = darts
                    .iter()
                    .map(|&d| {
                        let e = &w.edges[d.edge];
                        let (sa, sb) = if d.rev { (e.b, e.a) } else { (e.a, e.b) };
                        let kind = matches!(e.kind, crate::partition::EdgeKind::Geodesic) as u8;
                        (kind, e.path.len() - 1, w.nodes[sa].vertex, w.nodes[sb].vertex)
                    })
                    .collect();
                // canonical rotation
                let n = toks.len();
                (0..n)
                    .map(|r| {
                        (0..n)
                            .map(|k| toks[(r + k) % n])
                            .collect::<Vec<_>>()
                    })
                    .min()
                    .unwrap()
            })
            .collect();
        faces.sort();
        faces
    }

    fn lower_bound(&self, w: &PartitionWitness) -> usize {
        w.piece_lengths()
            .iter()
            .map(|&len| len.div_ceil(self.cap.max(1)).max(1))
            .sum()
    }

    fn record_if_valid(&mut self, w: &PartitionWitness) -> bool {
        let mut w = w.clone();
        w.drop_degree_two_marks();
        let Ok(report) = validate_partition(&w, self.lp) else {
            return false;
        };
        if !report.is_delta_partition(self.delta) {
            return false;
        }
        if self
            .best
            .as_ref()
            .map(|(b, _)| report.pieces < *b)
            .unwrap_or(true)
        {
            self.best = Some((report.pieces, w.clone()));
        }
        true
    }

    fn positions_of_face(&self, w: &PartitionWitness, f: usize, int_left: usize) -> Vec<Position> {
        let mut out = Vec::new();
        let darts = w.faces[f].as_ref().unwrap();
        for &d in darts {
            out.push(Position::Node(w.dart_start(d)));
        }
        for &d in darts {
            let e = &w.edges[d.edge];
            let len = e.path.len() - 1;
            match e.kind {
                crate::partition::EdgeKind::Arc { .. } => {
                    for off in 1..len {
                        out.push(Position::ArcSub { edge: d.edge, off });
                    }
                }
                crate::partition::EdgeKind::Geodesic => {
                    if int_left == 0 {
                        continue;
                    }
                    let va = w.nodes[e.a].vertex;
                    let vb = w.nodes[e.b].vertex;
                    for off in 1..len {
                        for x in 0..w.ball.vertex_count() {
                            let d1 = w.ball.distance(va, x);
                            let d2 = w.ball.distance(x, vb);
                            if let (Ok(r1), Ok(r2)) = (d1, d2) {
                                if !r1.ball_limited
                                    && !r2.ball_limited
                                    && r1.distance == off
                                    && r2.distance == len - off
                                {
                                    out.push(Position::GeoSub {
                                        edge: d.edge,
                                        off,
                                        x,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn position_vertex(&self, w: &PartitionWitness, p: Position) -> usize {
        match p {
            Position::Node(n) => w.nodes[n].vertex,
            Position::ArcSub { edge, off } => w.edges[edge].path[off],
            Position::GeoSub { x, .. } => x,
        }
    }

    /// Realize a pair of positions as node ids in a cloned witness,
    /// handling the case where both subdivide the same edge.
    fn materialize_pair(
        &self,
        w: &mut PartitionWitness,
        p1: Position,
        p2: Position,
    ) -> Result<(usize, usize)> {
        let sub_of = |p: Position| match p {
            Position::ArcSub { edge, off } => Some((edge, off, None)),
            Position::GeoSub { edge, off, x } => Some((edge, off, Some(x))),
            Position::Node(_) => None,
        };
        match (sub_of(p1), sub_of(p2)) {
            (Some((e1, o1, x1)), Some((e2, o2, x2))) if e1 == e2 => {
                if o1 == o2 {
                    return Err(Error::InvalidWitness("coincident cut endpoints".into()));
                }
                // subdivide at the larger offset first; the smaller offset
                // stays inside the first half.
                let (ohigh, xhigh, olow, xlow, swap) = if o1 > o2 {
                    (o1, x1, o2, x2, false)
                } else {
                    (o2, x2, o1, x1, true)
                };
                let (nh, efirst, _) = w.subdivide_edge(e1, ohigh, xhigh)?;
                let (nl, _, _) = w.subdivide_edge(efirst, olow, xlow)?;
                Ok(if swap { (nh, nl) } else { (nl, nh) })
            }
            _ => {
                let mut place = |p: Position| -> Result<usize> {
                    match p {
                        Position::Node(n) => Ok(n),
                        Position::ArcSub { edge, off } => {
                            Ok(w.subdivide_edge(edge, off, None)?.0)
                        }
                        Position::GeoSub { edge, off, x } => {
                            Ok(w.subdivide_edge(edge, off, Some(x))?.0)
                        }
                    }
                };
                let n1 = place(p1)?;
                let n2 = place(p2)?;
                Ok((n1, n2))
            }
        }
    }

    fn chains_between(&self, w: &PartitionWitness, v1: usize, v2: usize, m: usize) -> Vec<Vec<usize>> {
        // All chains of m fresh interior vertices with every edge geodesic
        // of length in 1..=half (endpoint hops allow length 0 for m = 0
        // handled by the caller).
        let mut out = Vec::new();
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        while let Some(chain) = stack.pop() {
            if chain.len() == m {
                let last = *chain.last().unwrap_or(&v1);
                if let Ok(r) = w.ball.distance(last, v2) {
                    if !r.ball_limited && r.distance >= 1 && r.distance <= self.half {
                        out.push(chain);
                    }
                }
                continue;
            }
            let last = *chain.last().unwrap_or(&v1);
            for x in 0..w.ball.vertex_count() {
                if let Ok(r) = w.ball.distance(last, x) {
                    if !r.ball_limited && r.distance >= 1 && r.distance <= self.half {
                        let mut c = chain.clone();
                        c.push(x);
                        stack.push(c);
                    }
                }
            }
        }
        out
    }

    fn search(&mut self, w: &PartitionWitness, interior_used: usize) {
        if self.truncated {
            return;
        }
        self.explored += 1;
        if self.explored > self.budgets.max_states {
            self.truncated = true;
            return;
        }
        let lb = self.lower_bound(w);
        if lb > self.budgets.max_pieces {
            return;
        }
        if let Some((b, _)) = &self.best {
            if lb >= *b {
                return;
            }
        }
        let key = Self::state_key(w);
        let pieces = w.piece_count();
        if let Some(entries) = self.seen.get(&key) {
            if entries
                .iter()
                .any(|&(p, i)| p <= pieces && i <= interior_used)
            {
                return;
            }
        }
        self.seen
            .entry(key)
            .or_default()
            .push((pieces, interior_used));

        let oversized = w
            .alive_faces()
            .into_iter()
            .find(|&f| w.face_len(f) > self.cap);
        let Some(f) = oversized else {
            if !self.record_if_valid(w) {
                self.repair_degree(w, interior_used);
            }
            return;
        };
        if pieces >= self.budgets.max_pieces {
            return;
        }

        let int_left = self.budgets.max_interior - interior_used;
        let positions = self.positions_of_face(w, f, int_left);
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let (p1, p2) = (positions[i], positions[j]);
                if let (Position::Node(a), Position::Node(b)) = (p1, p2) {
                    if a == b {
                        continue;
                    }
                }
                let base_cost = p1.interior_cost() + p2.interior_cost();
                if base_cost > int_left {
                    continue;
                }
                let v1 = self.position_vertex(w, p1);
                let v2 = self.position_vertex(w, p2);
                for m in 0..=(int_left - base_cost) {
                    if self.truncated {
                        return;
                    }
                    if m == 0 {
                        let Ok(r) = w.ball.distance(v1, v2) else { continue };
                        if r.ball_limited || r.distance > self.half {
                            continue;
                        }
                        // skip cuts parallel to an existing edge of the face
                        if let (Position::Node(a), Position::Node(b)) = (p1, p2) {
                            let darts = w.faces[f].as_ref().unwrap();
                            let dup = darts.iter().any(|&d| {
                                let e = &w.edges[d.edge];
                                (e.a == a && e.b == b) || (e.a == b && e.b == a)
                            });
                            if dup {
                                continue;
                            }
                        }
                        self.apply_cut(w, f, p1, p2, &[], interior_used + base_cost);
                    } else {
                        for chain in self.chains_between(w, v1, v2, m) {
                            if self.truncated {
                                return;
                            }
                            self.apply_cut(
                                w,
                                f,
                                p1,
                                p2,
                                &chain,
                                interior_used + base_cost + m,
                            );
                        }
                    }
                }
            }
        }
    }

    fn apply_cut(
        &mut self,
        w: &PartitionWitness,
        f: usize,
        p1: Position,
        p2: Position,
        chain: &[usize],
        interior_after: usize,
    ) {
        let mut next = w.clone();
        let Ok((n1, n2)) = self.materialize_pair(&mut next, p1, p2) else {
            return;
        };
        if n1 == n2 {
            return;
        }
        if next.split_face_at_nodes(f, n1, n2, chain).is_err() {
            return;
        }
        self.search(&next, interior_after);
    }

    /// When every piece is small but an interior vertex has degree two,
    /// try zero-chain cuts from that vertex to other nodes to raise its
    /// degree. These add pieces, so they are only tried under the budget.
    fn repair_degree(&mut self, w: &PartitionWitness, interior_used: usize) {
        if w.piece_count() >= self.budgets.max_pieces {
            return;
        }
        let referenced = w.referenced_nodes();
        let mut degree: HashMap<usize, usize> = HashMap::new();
        for e in w.referenced_edges() {
            *degree.entry(w.edges[e].a).or_insert(0) += 1;
            *degree.entry(w.edges[e].b).or_insert(0) += 1;
        }
        let deficient: Vec<usize> = referenced
            .iter()
            .copied()
            .filter(|n| w.nodes[*n].param.is_none() && degree.get(n).copied().unwrap_or(0) < 3)
            .collect();
        if deficient.is_empty() {
            return;
        }
        for f in w.alive_faces() {
            let darts = w.faces[f].as_ref().unwrap().clone();
            let nodes: Vec<usize> = darts.iter().map(|&d| w.dart_start(d)).collect();
            for &n1 in &nodes {
                if !deficient.contains(&n1) {
                    continue;
                }
                for &n2 in &nodes {
                    if n1 == n2 {
                        continue;
                    }
                    let Ok(r) = w
                        .ball
                        .distance(w.nodes[n1].vertex, w.nodes[n2].vertex)
                    else {
                        continue;
                    };
                    if r.ball_limited || r.distance > self.half {
                        continue;
                    }
                    let mut next = w.clone();
                    if next.split_face_at_nodes(f, n1, n2, &[]).is_err() {
                        continue;
                    }
                    // only useful if the split keeps every face small
                    if next.alive_faces().iter().any(|&g| next.face_len(g) > self.cap) {
                        continue;
                    }
                    self.search(&next, interior_used);
                }
            }
        }
    }
}

/// Branch-and-bound minimum over partitions with interior vertices,
/// exhaustive within the budgets. With `max_interior = 0` this coincides
/// with the chord family.
pub fn min_pieces_steiner(
    lp: &LoopPath,
    delta: Ratio<u64>,
    budgets: SearchBudgets,
) -> Result<MinPiecesResult> {
    let cap = max_len_below(delta);
    if lp.len() <= cap {
        return Ok(MinPiecesResult {
            value: Some(1),
            witness: Some(PartitionWitness::trivial(lp)),
            family: "steiner".into(),
            explored: 1,
            exhaustive: true,
        });
    }
    let start = PartitionWitness::trivial(lp);
    // Iterative deepening over the interior budget: cheaper levels find
    // good incumbents first, so the lower-bound pruning keeps the larger
    // levels tractable and the minimum is not lost to state truncation.
    let mut best: Option<(usize, PartitionWitness)> = None;
    let mut explored = 0usize;
    let mut truncated = false;
    for interior_cap in 0..=budgets.max_interior {
        let mut ctx = Steiner {
            lp,
            delta,
            cap,
            half: cap / 2,
            budgets: SearchBudgets {
                max_interior: interior_cap,
                ..budgets
            },
            best: best.take(),
            explored: 0,
            truncated: false,
            seen: HashMap::new(),
        };
        ctx.search(&start, 0);
        explored += ctx.explored;
        truncated |= ctx.truncated;
        best = ctx.best;
    }
    match best {
        Some((value, witness)) => Ok(MinPiecesResult {
            value: Some(value),
            witness: Some(witness),
            family: "steiner".into(),
            explored,
            exhaustive: !truncated,
        }),
        None if truncated => Err(Error::BudgetExceeded(format!(
            "state budget {} exhausted without settling the search",
            budgets.max_states
        ))),
        None => Ok(MinPiecesResult {
            value: None,
            witness: None,
            family: "steiner".into(),
            explored,
            exhaustive: true,
        }),
    }
}

/// Existence check with a fast path: when the loop is long relative to its
/// diameter and the resulting five-piece partition meets the threshold, no
/// search is needed; otherwise fall back to the exact chord search, then to
/// the budgeted general search.
pub fn is_partitionable(
    lp: &LoopPath,
    delta: Ratio<u64>,
    budgets: SearchBudgets,
) -> Result<MinPiecesResult> {
    if let Ok(w) = crate::partition::inscribed_square_partition(lp) {
        let report = validate_partition(&w, lp)?;
        if report.is_delta_partition(delta) {
            return Ok(MinPiecesResult {
                value: Some(report.pieces),
                witness: Some(w),
                family: "inscribed-square".into(),
                explored: 1,
                exhaustive: false,
            });
        }
    }
    let chord = min_pieces_chord(lp, delta)?;
    if chord.value.is_some() {
        return Ok(chord);
    }
    min_pieces_steiner(lp, delta, budgets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{ball_for_loop, loop_from_word};
    use crate::oracle::GroupOracle;
    use crate::presentation::Word;

    fn z2_loop(s: &str) -> LoopPath {
        let word = Word::parse(s).unwrap();
        let ball = ball_for_loop(GroupOracle::free_abelian(&['a', 'b']), &word).unwrap();
        loop_from_word(&ball, &word).unwrap()
    }

    #[test]
    fn chord_minimum_on_big_square() {
        // 2x2 square at threshold 7: the midline chord gives two pieces of
        // length 6 and nothing smaller exists.
        let lp = z2_loop("aabbAABB");
        let r = min_pieces_chord(&lp, Ratio::new(7, 1)).unwrap();
        assert_eq!(r.value, Some(2));
        assert!(r.exhaustive);
        let rep = validate_partition(r.witness.as_ref().unwrap(), &lp).unwrap();
        assert_eq!(rep.pieces, 2);
        assert!(rep.is_delta_partition(Ratio::new(7, 1)));
    }

    #[test]
    fn chord_trivial_when_loop_short() {
        let lp = z2_loop("abAB");
        let r = min_pieces_chord(&lp, Ratio::new(5, 1)).unwrap();
        assert_eq!(r.value, Some(1));
    }

    #[test]
    fn chord_not_found_on_unit_square() {
        // no chord partition of the unit square has mesh < 4
        let lp = z2_loop("abAB");
        let r = min_pieces_chord(&lp, Ratio::new(4, 1)).unwrap();
        assert_eq!(r.value, None);
        assert!(r.exhaustive);
    }

    #[test]
    fn steiner_uses_interior_vertex() {
        // 2x2 square at threshold 5: four pieces via the center vertex.
        let lp = z2_loop("aabbAABB");
        let r = min_pieces_steiner(&lp, Ratio::new(5, 1), SearchBudgets::new(6, 1)).unwrap();
        assert_eq!(r.value, Some(4));
        assert!(r.exhaustive);
        let w = r.witness.unwrap();
        assert_eq!(w.interior_count(), 1);
        let rep = validate_partition(&w, &lp).unwrap();
        assert!(rep.is_delta_partition(Ratio::new(5, 1)));
    }

    #[test]
    fn steiner_not_found_on_unit_square() {
        let lp = z2_loop("abAB");
        let r = min_pieces_steiner(&lp, Ratio::new(4, 1), SearchBudgets::new(6, 2)).unwrap();
        assert_eq!(r.value, None);
        assert!(r.exhaustive);
    }

    #[test]
    fn steiner_without_interior_matches_chord() {
        let lp = z2_loop("aabbAABB");
        for num in [5u64, 6, 7, 9] {
            let delta = Ratio::new(num, 1);
            let c = min_pieces_chord(&lp, delta).unwrap();
            let s = min_pieces_steiner(&lp, delta, SearchBudgets::new(8, 0)).unwrap();
            assert_eq!(c.value, s.value, "delta {delta}");
        }
    }

    #[test]
    fn partitionable_fast_path() {
        let word = Word::parse("abAB").unwrap().pow(5);
        let ball = ball_for_loop(GroupOracle::free_abelian(&['a', 'b']), &word).unwrap();
        let lp = loop_from_word(&ball, &word).unwrap();
        let r = is_partitionable(&lp, Ratio::new(10, 1), SearchBudgets::new(8, 0)).unwrap();
        assert_eq!(r.family, "inscribed-square");
        assert_eq!(r.value, Some(5));
    }

    #[test]
    fn lower_bound_helper() {
        assert_eq!(pieces_lower_bound(10, 3), 4);
        assert_eq!(pieces_lower_bound(9, 3), 3);
        assert_eq!(pieces_lower_bound(0, 3), 0);
        assert_eq!(pieces_lower_bound(5, 0), u128::MAX);
    }
}
