//! Labeled bipartite graphs, canonical forms, automorphisms and the
//! isomorphism-class catalogs.
//!
//! A graph on `r` row nodes and `c` column nodes is stored as an edge
//! bitmask in row-major order (bit `i*c + j` for the edge between row `i`
//! and column `j`). Sizes are capped at 4x4 so every question about
//! isomorphism is answered by exhaustive search over `S_r x S_c`.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::HashMap;
use std::sync::OnceLock;

pub const MAX_ROWS: usize = 4;
pub const MAX_COLS: usize = 4;

/// All permutations of `0..k`, cached.
pub fn permutations(k: usize) -> &'static [Vec<usize>] {
    static TABLES: OnceLock<Vec<Vec<Vec<usize>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=6)
            .map(|k| {
                let mut out = Vec::new();
                let mut items: Vec<usize> = (0..k).collect();
                heap_permute(&mut items, k, &mut out);
                out.sort();
                out
            })
            .collect()
    });
    &tables[k]
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut out = 1u64;
    for i in 0..k {
        out = out * (n - i) as u64 / (i + 1) as u64;
    }
    out
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BipartiteGraph {
    r: usize,
    c: usize,
    edges: u16,
    row_labels: Option<Vec<usize>>,
    col_labels: Option<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(r: usize, c: usize, edges: u16) -> Result<Self> {
        if r > MAX_ROWS || c > MAX_COLS {
            return Err(Error::SizeLimit {
                r,
                c,
                max_r: MAX_ROWS,
                max_c: MAX_COLS,
            });
        }
        let nbits = r * c;
        if nbits < 16 && edges >> nbits != 0 {
            let bit = (16 - edges.leading_zeros() - 1) as usize;
            return Err(Error::EdgeOutOfRange { bit, r, c });
        }
        Ok(BipartiteGraph {
            r,
            c,
            edges,
            row_labels: None,
            col_labels: None,
        })
    }

    pub fn empty() -> Self {
        BipartiteGraph::new(0, 0, 0).unwrap()
    }

    /// The complete graph `K_{r,c}`.
    pub fn complete(r: usize, c: usize) -> Result<Self> {
        let nbits = r * c;
        let edges = if nbits == 0 { 0 } else { ((1u32 << nbits) - 1) as u16 };
        BipartiteGraph::new(r, c, edges)
    }

    /// Attaches global row/column labels (strictly increasing).
    pub fn with_labels(mut self, rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        if rows.len() != self.r || cols.len() != self.c {
            return Err(Error::BadLabels);
        }
        if rows.windows(2).any(|w| w[0] >= w[1]) || cols.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadLabels);
        }
        self.row_labels = Some(rows);
        self.col_labels = Some(cols);
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.r
    }

    pub fn cols(&self) -> usize {
        self.c
    }

    pub fn nodes(&self) -> usize {
        self.r + self.c
    }

    pub fn edges(&self) -> u16 {
        self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones() as usize
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges >> (i * self.c + j) & 1 == 1
    }

    pub fn row_labels(&self) -> Option<&[usize]> {
        self.row_labels.as_deref()
    }

    pub fn col_labels(&self) -> Option<&[usize]> {
        self.col_labels.as_deref()
    }

    /// Global label of row node `i` (positional when unlabeled).
    pub fn row_label(&self, i: usize) -> usize {
        self.row_labels.as_ref().map_or(i, |l| l[i])
    }

    pub fn col_label(&self, j: usize) -> usize {
        self.col_labels.as_ref().map_or(j, |l| l[j])
    }

    pub fn strip_labels(mut self) -> Self {
        self.row_labels = None;
        self.col_labels = None;
        self
    }

    /// Edge bitmask after relabeling rows by `sigma1` and columns by `sigma2`
    /// (edge `(i,j)` moves to `(sigma1[i], sigma2[j])`).
    fn permuted_edges(&self, sigma1: &[usize], sigma2: &[usize]) -> u16 {
        let mut out = 0u16;
        let mut e = self.edges;
        while e != 0 {
            let bit = e.trailing_zeros() as usize;
            e &= e - 1;
            let (i, j) = (bit / self.c, bit % self.c);
            out |= 1 << (sigma1[i] * self.c + sigma2[j]);
        }
        out
    }

    /// Lexicographically smallest edge bitmask over all `S_r x S_c`
    /// relabelings. Two graphs are isomorphic iff their canonical forms
    /// (as unlabeled graphs) are equal.
    pub fn canonical_form(&self) -> BipartiteGraph {
        let mut best = u16::MAX;
        for s1 in permutations(self.r) {
            for s2 in permutations(self.c) {
                let e = self.permuted_edges(s1, s2);
                if e < best {
                    best = e;
                }
            }
        }
        BipartiteGraph {
            r: self.r,
            c: self.c,
            edges: best,
            row_labels: None,
            col_labels: None,
        }
    }

    /// `#{(sigma1, sigma2) in S_r x S_c : the relabeled graph equals G}`,
    /// by exhaustive search.
    pub fn automorphism_count(&self) -> u64 {
        let mut count = 0;
        for s1 in permutations(self.r) {
            for s2 in permutations(self.c) {
                if self.permuted_edges(s1, s2) == self.edges {
                    count += 1;
                }
            }
        }
        count
    }

    /// Connectivity of the graph on node set `V1 ∪ V2`. Single-node graphs
    /// and the empty graph count as connected; any graph with two or more
    /// nodes and an isolated node does not.
    pub fn is_connected(&self) -> bool {
        let n = self.r + self.c;
        if n <= 1 {
            return true;
        }
        // BFS from node 0; rows are 0..r, columns r..r+c.
        let mut seen = vec![false; n];
        let mut queue = vec![0usize];
        seen[0] = true;
        while let Some(v) = queue.pop() {
            if v < self.r {
                for j in 0..self.c {
                    if self.has_edge(v, j) && !seen[self.r + j] {
                        seen[self.r + j] = true;
                        queue.push(self.r + j);
                    }
                }
            } else {
                let j = v - self.r;
                for i in 0..self.r {
                    if self.has_edge(i, j) && !seen[i] {
                        seen[i] = true;
                        queue.push(i);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Every subgraph `F`: node subsets plus any subset of the surviving
    /// edges, each exactly once (the empty graph and `G` itself included).
    /// Yielded graphs carry labels naming which of `G`'s nodes they keep.
    pub fn labeled_subgraphs(&self) -> Vec<BipartiteGraph> {
        let mut out = Vec::new();
        for rs in 0u32..1 << self.r {
            let kept_rows: Vec<usize> = (0..self.r).filter(|i| rs >> i & 1 == 1).collect();
            for cs in 0u32..1 << self.c {
                let kept_cols: Vec<usize> = (0..self.c).filter(|j| cs >> j & 1 == 1).collect();
                // Surviving edges of G, re-indexed to the kept nodes.
                let mut allowed = 0u16;
                for (a, &i) in kept_rows.iter().enumerate() {
                    for (b, &j) in kept_cols.iter().enumerate() {
                        if self.has_edge(i, j) {
                            allowed |= 1 << (a * kept_cols.len() + b);
                        }
                    }
                }
                let row_labels: Vec<usize> = kept_rows.iter().map(|&i| self.row_label(i)).collect();
                let col_labels: Vec<usize> = kept_cols.iter().map(|&j| self.col_label(j)).collect();
                // Subsets of `allowed`, including 0 and allowed itself.
                let mut sub = allowed;
                loop {
                    out.push(BipartiteGraph {
                        r: kept_rows.len(),
                        c: kept_cols.len(),
                        edges: sub,
                        row_labels: Some(row_labels.clone()),
                        col_labels: Some(col_labels.clone()),
                    });
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & allowed;
                }
            }
        }
        out
    }

    /// Labeled equality ignoring local node order: same label sets, same
    /// labeled edge set.
    pub fn labeled_key(&self) -> (Vec<usize>, Vec<usize>, Vec<(usize, usize)>) {
        let rows: Vec<usize> = (0..self.r).map(|i| self.row_label(i)).collect();
        let cols: Vec<usize> = (0..self.c).map(|j| self.col_label(j)).collect();
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(self.edge_count());
        for i in 0..self.r {
            for j in 0..self.c {
                if self.has_edge(i, j) {
                    edges.push((self.row_label(i), self.col_label(j)));
                }
            }
        }
        edges.sort_unstable();
        (rows, cols, edges)
    }
}

/// One isomorphism class: canonical representative, `|Aut|`, connectivity.
#[derive(Clone, Debug)]
pub struct GraphClass {
    pub representative: BipartiteGraph,
    pub aut_count: u64,
    pub connected: bool,
    pub class_id: usize,
}

impl Serialize for GraphClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("GraphClass", 6)?;
        st.serialize_field("r", &self.representative.rows())?;
        st.serialize_field("c", &self.representative.cols())?;
        st.serialize_field("edges_hex", &format!("{:x}", self.representative.edges()))?;
        st.serialize_field("aut", &self.aut_count)?;
        st.serialize_field("connected", &self.connected)?;
        st.serialize_field("class_id", &self.class_id)?;
        st.end()
    }
}

/// The catalogs `Gamma_{r,c}` for all `(r,c)` up to a cap, with a lookup
/// from canonical bitmask to class id. Immutable once built.
#[derive(Debug)]
pub struct Catalog {
    max_r: usize,
    max_c: usize,
    classes: HashMap<(usize, usize), Vec<GraphClass>>,
    lookup: HashMap<(usize, usize, u16), usize>,
}

/// One class per isomorphism class of graphs with exactly `r` row nodes and
/// `c` column nodes, sorted by (edge count, canonical bitmask).
pub fn enumerate_gamma(r: usize, c: usize) -> Result<Vec<GraphClass>> {
    if r > MAX_ROWS || c > MAX_COLS {
        return Err(Error::SizeLimit {
            r,
            c,
            max_r: MAX_ROWS,
            max_c: MAX_COLS,
        });
    }
    let nbits = r * c;
    let mut canon: Vec<u16> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for mask in 0..1u32 << nbits {
        let g = BipartiteGraph::new(r, c, mask as u16)?;
        let cf = g.canonical_form().edges;
        if seen.insert(cf) {
            canon.push(cf);
        }
    }
    canon.sort_by_key(|&e| (e.count_ones(), e));
    canon
        .into_iter()
        .enumerate()
        .map(|(class_id, edges)| {
            let representative = BipartiteGraph::new(r, c, edges)?;
            Ok(GraphClass {
                aut_count: representative.automorphism_count(),
                connected: representative.is_connected(),
                representative,
                class_id,
            })
        })
        .collect()
}

impl Catalog {
    pub fn build(max_r: usize, max_c: usize) -> Result<Catalog> {
        if max_r > MAX_ROWS || max_c > MAX_COLS {
            return Err(Error::SizeLimit {
                r: max_r,
                c: max_c,
                max_r: MAX_ROWS,
                max_c: MAX_COLS,
            });
        }
        let mut classes = HashMap::new();
        let mut lookup = HashMap::new();
        for r in 0..=max_r {
            for c in 0..=max_c {
                let list = enumerate_gamma(r, c)?;
                for cls in &list {
                    lookup.insert((r, c, cls.representative.edges), cls.class_id);
                }
                classes.insert((r, c), list);
            }
        }
        Ok(Catalog {
            max_r,
            max_c,
            classes,
            lookup,
        })
    }

    pub fn max_rows(&self) -> usize {
        self.max_r
    }

    pub fn max_cols(&self) -> usize {
        self.max_c
    }

    pub fn gamma(&self, r: usize, c: usize) -> &[GraphClass] {
        self.classes.get(&(r, c)).map_or(&[], Vec::as_slice)
    }

    /// `Gamma^-_{p,q}`: classes for all `(0,0) < (r,c) <= (p,q)`.
    pub fn gamma_minus(&self, p: usize, q: usize) -> impl Iterator<Item = &GraphClass> {
        (0..=p.min(self.max_r)).flat_map(move |r| {
            (0..=q.min(self.max_c))
                .filter(move |&c| (r, c) != (0, 0))
                .flat_map(move |c| self.gamma(r, c).iter())
        })
    }

    /// Class of an arbitrary graph within limits.
    pub fn class_of(&self, g: &BipartiteGraph) -> Result<&GraphClass> {
        let canon = g.canonical_form();
        let id = self
            .lookup
            .get(&(canon.r, canon.c, canon.edges))
            .copied()
            .ok_or(Error::SizeLimit {
                r: canon.r,
                c: canon.c,
                max_r: self.max_r,
                max_c: self.max_c,
            })?;
        Ok(&self.classes[&(canon.r, canon.c)][id])
    }
}

/// Subsets of `0..n` of size `k`, in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Both sides of the pair-coincidence identity.
///
/// Left side: exhaustive count of `(ib1, jb1, ib2, jb2, phi1, phi2)` with
/// `phi1 G^1 = phi2 G^2` as labeled graphs, where `G^k` is a fixed embedding
/// of the class representative into `K_{ib,jb}` (the first `r` rows and `c`
/// columns of the sorted index sets). Right side:
/// `m!(m-r)!/(m-p)!^2 * n!(n-c)!/(n-q)!^2 * |Aut(G)|`.
pub fn pair_coincidence_count(
    m: usize,
    n: usize,
    p: usize,
    q: usize,
    class: &GraphClass,
) -> Result<(u64, u64)> {
    if m > 6 || n > 6 {
        return Err(Error::CombinatorialBudget {
            terms: (m * n) as f64,
            limit: 36.0,
        });
    }
    let g = &class.representative;
    let (r, c) = (g.rows(), g.cols());
    if r > p || c > q || p > m || q > n {
        return Err(Error::InvalidParameter {
            name: "pqrc",
            reason: format!("need r<=p<=m and c<=q<=n, got r={r} c={c} p={p} q={q} m={m} n={n}"),
        });
    }

    // Count each side's labeled-graph realizations, then take the dot
    // product of the two multiplicity maps.
    let side = |_: ()| -> HashMap<u64, u64> {
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for ib in subsets(m, p) {
            for jb in subsets(n, q) {
                for s1 in permutations(p) {
                    for s2 in permutations(q) {
                        // Embed: V1 = first r of ib, V2 = first c of jb, then
                        // push labels through the position permutation.
                        let mut rows = 0u64;
                        let mut cols = 0u64;
                        let mut edges = 0u64;
                        for a in 0..r {
                            rows |= 1 << ib[s1[a]];
                        }
                        for b in 0..c {
                            cols |= 1 << jb[s2[b]];
                        }
                        for a in 0..r {
                            for b in 0..c {
                                if g.has_edge(a, b) {
                                    edges |= 1 << (ib[s1[a]] * n + jb[s2[b]]);
                                }
                            }
                        }
                        let key = rows | cols << 6 | edges << 12;
                        *counts.entry(key).or_insert(0) += 1;
                    }
                }
            }
        }
        counts
    };
    let counts1 = side(());
    let counts2 = side(());
    let lhs: u64 = counts1
        .iter()
        .map(|(k, v1)| v1 * counts2.get(k).copied().unwrap_or(0))
        .sum();

    let rhs = factorial(m) / factorial(m - p) * factorial(m - r) / factorial(m - p)
        * (factorial(n) / factorial(n - q) * factorial(n - c) / factorial(n - q))
        * class.aut_count;
    Ok((lhs, rhs))
}
