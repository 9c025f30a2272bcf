//! Finite directed multigraphs `E = (E⁰, E¹, r, s)`, isomorphism search, and
//! the dimension-feasibility test for block representations.
//!
//! Convention: an edge record stores `src = s(e)` and `dst = r(e)`. All
//! serialized formats use these field names so the range/source roles cannot
//! silently flip.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One directed edge. `src` is the source `s(e)`, `dst` the range `r(e)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
}

/// Finite directed multigraph with named vertices and edges. Construction
/// validates that names are distinct and endpoints exist, so a `Graph` value
/// is always well-formed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphData")]
pub struct Graph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

#[derive(Deserialize)]
struct GraphData {
    vertices: Vec<String>,
    edges: Vec<Edge>,
}

impl TryFrom<GraphData> for Graph {
    type Error = Error;

    fn try_from(data: GraphData) -> Result<Graph> {
        Graph::new(data.vertices, data.edges)
    }
}

impl Graph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &vertices {
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidInput(format!("duplicate vertex name {v:?}")));
            }
        }
        let mut ids = BTreeSet::new();
        for e in &edges {
            if !ids.insert(e.id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate edge id {:?}", e.id)));
            }
            if !seen.contains(&e.src) {
                return Err(Error::InvalidInput(format!(
                    "edge {:?} has unknown source vertex {:?}",
                    e.id, e.src
                )));
            }
            if !seen.contains(&e.dst) {
                return Err(Error::InvalidInput(format!(
                    "edge {:?} has unknown range vertex {:?}",
                    e.id, e.dst
                )));
            }
        }
        Ok(Graph { vertices, edges })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Edges with range `v`, i.e. `r⁻¹(v)`, in input order.
    pub fn incoming<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.dst == v)
    }

    /// Edges with source `v`, i.e. `s⁻¹(v)`, in input order.
    pub fn outgoing<'a>(&'a self, v: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.src == v)
    }

    /// Vertex adjacency counts: `A[w][v] = #{e : s(e) = v, r(e) = w}`,
    /// rows and columns indexed by vertex order.
    pub fn adjacency_matrix(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut a = vec![vec![0usize; n]; n];
        for e in &self.edges {
            let v = self.vertex_index(&e.src).expect("validated");
            let w = self.vertex_index(&e.dst).expect("validated");
            a[w][v] += 1;
        }
        a
    }
}

/// Block dimension assignment: vertex name → dimension of its Hilbert block.
pub type DimVector = BTreeMap<String, usize>;

/// Graph isomorphism: a vertex bijection `ψ⁰` and edge bijection `ψ¹`
/// intertwining both the range and source maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphIso {
    pub vertex_map: BTreeMap<String, String>,
    pub edge_map: BTreeMap<String, String>,
}

impl GraphIso {
    /// Validates that the maps are bijections from `e` onto `f` satisfying
    /// `r_F ∘ ψ¹ = ψ⁰ ∘ r_E` and `s_F ∘ ψ¹ = ψ⁰ ∘ s_E`.
    pub fn verify(&self, e: &Graph, f: &Graph) -> Result<()> {
        check_bijection(&self.vertex_map, e.vertices(), f.vertices(), "vertex")?;
        let e_ids: Vec<String> = e.edges().iter().map(|x| x.id.clone()).collect();
        let f_ids: Vec<String> = f.edges().iter().map(|x| x.id.clone()).collect();
        check_bijection(&self.edge_map, &e_ids, &f_ids, "edge")?;
        for edge in e.edges() {
            let image = f
                .edge(&self.edge_map[&edge.id])
                .expect("bijection checked");
            if image.src != self.vertex_map[&edge.src] {
                return Err(Error::InvalidInput(format!(
                    "edge map does not intertwine sources at edge {:?}",
                    edge.id
                )));
            }
            if image.dst != self.vertex_map[&edge.dst] {
                return Err(Error::InvalidInput(format!(
                    "edge map does not intertwine ranges at edge {:?}",
                    edge.id
                )));
            }
        }
        Ok(())
    }
}

fn check_bijection(
    map: &BTreeMap<String, String>,
    domain: &[String],
    codomain: &[String],
    kind: &str,
) -> Result<()> {
    if map.len() != domain.len() || domain.len() != codomain.len() {
        return Err(Error::InvalidInput(format!("{kind} map is not a bijection")));
    }
    let mut hit = BTreeSet::new();
    for d in domain {
        let img = map
            .get(d)
            .ok_or_else(|| Error::InvalidInput(format!("{kind} map missing {d:?}")))?;
        if !codomain.contains(img) {
            return Err(Error::InvalidInput(format!(
                "{kind} map sends {d:?} to unknown {img:?}"
            )));
        }
        if !hit.insert(img.clone()) {
            return Err(Error::InvalidInput(format!("{kind} map is not injective")));
        }
    }
    Ok(())
}

/// Searches for a graph isomorphism from `e` to `f` by backtracking over
/// vertex bijections with in/out-degree pruning, then matching edges within
/// parallel classes. Returns the first isomorphism found under the input
/// orderings (deterministic). Exponential in the worst case; fine for the
/// intended scale of at most about eight vertices.
pub fn find_isomorphism(e: &Graph, f: &Graph) -> Option<GraphIso> {
    let nv = e.vertices().len();
    if nv != f.vertices().len() || e.edges().len() != f.edges().len() {
        return None;
    }
    let a_e = e.adjacency_matrix();
    let a_f = f.adjacency_matrix();
    // (out-degree, in-degree, loop count) per vertex, for pruning.
    fn profiles(a: &[Vec<usize>]) -> Vec<(usize, usize, usize)> {
        let n = a.len();
        (0..n)
            .map(|i| {
                let out: usize = (0..n).map(|w| a[w][i]).sum();
                let inn: usize = (0..n).map(|v| a[i][v]).sum();
                (out, inn, a[i][i])
            })
            .collect()
    }
    let prof_e = profiles(&a_e);
    let prof_f = profiles(&a_f);

    struct Search<'a> {
        a_e: &'a [Vec<usize>],
        a_f: &'a [Vec<usize>],
        prof_e: &'a [(usize, usize, usize)],
        prof_f: &'a [(usize, usize, usize)],
        assignment: Vec<Option<usize>>,
        used: Vec<bool>,
    }

    impl Search<'_> {
        fn backtrack(&mut self, depth: usize) -> bool {
            let nv = self.assignment.len();
            if depth == nv {
                return true;
            }
            for cand in 0..nv {
                if self.used[cand] || self.prof_e[depth] != self.prof_f[cand] {
                    continue;
                }
                let consistent = (0..depth).all(|prev| {
                    let img = self.assignment[prev].expect("assigned");
                    self.a_e[depth][prev] == self.a_f[cand][img]
                        && self.a_e[prev][depth] == self.a_f[img][cand]
                });
                if !consistent {
                    continue;
                }
                self.assignment[depth] = Some(cand);
                self.used[cand] = true;
                if self.backtrack(depth + 1) {
                    return true;
                }
                self.assignment[depth] = None;
                self.used[cand] = false;
            }
            false
        }
    }

    let mut search = Search {
        a_e: &a_e,
        a_f: &a_f,
        prof_e: &prof_e,
        prof_f: &prof_f,
        assignment: vec![None; nv],
        used: vec![false; nv],
    };
    if !search.backtrack(0) {
        return None;
    }
    let assignment = search.assignment;

    let vertex_map: BTreeMap<String, String> = e
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), f.vertices()[assignment[i].expect("complete")].clone()))
        .collect();

    // Adjacency agreement guarantees equal parallel-class sizes; pair edges
    // within each class in input order.
    let mut edge_map = BTreeMap::new();
    for (src, dst) in e
        .edges()
        .iter()
        .map(|x| (x.src.clone(), x.dst.clone()))
        .collect::<BTreeSet<_>>()
    {
        let class_e: Vec<&Edge> = e
            .edges()
            .iter()
            .filter(|x| x.src == src && x.dst == dst)
            .collect();
        let (fsrc, fdst) = (&vertex_map[&src], &vertex_map[&dst]);
        let class_f: Vec<&Edge> = f
            .edges()
            .iter()
            .filter(|x| &x.src == fsrc && &x.dst == fdst)
            .collect();
        debug_assert_eq!(class_e.len(), class_f.len());
        for (xe, xf) in class_e.iter().zip(class_f.iter()) {
            edge_map.insert(xe.id.clone(), xf.id.clone());
        }
    }

    let iso = GraphIso { vertex_map, edge_map };
    debug_assert!(iso.verify(e, f).is_ok());
    Some(iso)
}

/// True iff a nondegenerate block representation with these dimensions can
/// exist: for every vertex `v`, the ranges of the incoming edge operators are
/// mutually orthogonal subspaces of the `v` block, so
/// `Σ_{e ∈ r⁻¹(v)} d_{s(e)} ≤ d_v` must hold.
pub fn feasible_dims(g: &Graph, dims: &DimVector) -> Result<bool> {
    for v in g.vertices() {
        match dims.get(v) {
            None => {
                return Err(Error::InvalidInput(format!(
                    "dimension vector missing vertex {v:?}"
                )))
            }
            Some(0) => {
                return Err(Error::InvalidInput(format!(
                    "dimension at vertex {v:?} must be at least 1"
                )))
            }
            Some(_) => {}
        }
    }
    Ok(g.vertices().iter().all(|v| {
        let incoming_total: usize = g.incoming(v).map(|e| dims[&e.src]).sum();
        incoming_total <= dims[v]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixtures;

    fn dims(pairs: &[(&str, usize)]) -> DimVector {
        pairs.iter().map(|(v, d)| (v.to_string(), *d)).collect()
    }

    #[test]
    fn adjacency_fixtures() {
        assert_eq!(fixtures::g1().adjacency_matrix(), vec![vec![0]]);
        // Two parallel edges v1 -> v2.
        assert_eq!(fixtures::g2().adjacency_matrix(), vec![vec![0, 0], vec![2, 0]]);
        // Loop at v1 plus the two parallel edges.
        assert_eq!(fixtures::g3().adjacency_matrix(), vec![vec![1, 0], vec![2, 0]]);
    }

    #[test]
    fn isomorphism_identity_and_swapped_edges() {
        let g2 = fixtures::g2();
        let iso = find_isomorphism(&g2, &g2).expect("isomorphic to itself");
        for v in g2.vertices() {
            assert_eq!(&iso.vertex_map[v], v);
        }

        let swapped = Graph::new(
            g2.vertices().to_vec(),
            vec![g2.edges()[1].clone(), g2.edges()[0].clone()],
        )
        .unwrap();
        let iso = find_isomorphism(&g2, &swapped).expect("edge order is irrelevant");
        iso.verify(&g2, &swapped).unwrap();
    }

    #[test]
    fn isomorphism_absent_when_edge_counts_differ() {
        assert!(find_isomorphism(&fixtures::g2(), &fixtures::g4()).is_none());
    }

    #[test]
    fn isomorphism_respects_structure_not_names() {
        // Same shape as G3 but with scrambled names and vertex order.
        let h = Graph::new(
            vec!["b".into(), "a".into()],
            vec![
                Edge { id: "x".into(), src: "a".into(), dst: "b".into() },
                Edge { id: "loop".into(), src: "a".into(), dst: "a".into() },
                Edge { id: "y".into(), src: "a".into(), dst: "b".into() },
            ],
        )
        .unwrap();
        let iso = find_isomorphism(&fixtures::g3(), &h).expect("isomorphic");
        iso.verify(&fixtures::g3(), &h).unwrap();
        assert_eq!(iso.vertex_map["v1"], "a");
        assert_eq!(iso.edge_map["a"], "loop");
    }

    #[test]
    fn feasibility_fixtures() {
        assert!(feasible_dims(&fixtures::g3(), &dims(&[("v1", 1), ("v2", 2)])).unwrap());

        let two_loops = Graph::new(
            vec!["v".into()],
            vec![
                Edge { id: "l1".into(), src: "v".into(), dst: "v".into() },
                Edge { id: "l2".into(), src: "v".into(), dst: "v".into() },
            ],
        )
        .unwrap();
        assert!(!feasible_dims(&two_loops, &dims(&[("v", 1)])).unwrap());

        assert!(feasible_dims(&fixtures::g1(), &dims(&[("v", 3)])).unwrap());
    }

    #[test]
    fn feasibility_monotonicity() {
        let g3 = fixtures::g3();
        let base = dims(&[("v1", 1), ("v2", 2)]);
        assert!(feasible_dims(&g3, &base).unwrap());

        // Uniform scaling preserves feasibility.
        for lambda in 2..5 {
            let scaled: DimVector =
                base.iter().map(|(v, d)| (v.clone(), d * lambda)).collect();
            assert!(feasible_dims(&g3, &scaled).unwrap());
        }

        // So does enlarging a vertex with no outgoing edges.
        let mut sink_bigger = base.clone();
        *sink_bigger.get_mut("v2").unwrap() += 3;
        assert!(feasible_dims(&g3, &sink_bigger).unwrap());

        // Enlarging a source vertex alone can break feasibility: the
        // incoming load at its range vertices grows with it.
        let mut source_bigger = base.clone();
        *source_bigger.get_mut("v1").unwrap() = 2;
        assert!(!feasible_dims(&g3, &source_bigger).unwrap());
    }

    #[test]
    fn graph_validation_rejects_bad_input() {
        assert!(Graph::new(vec!["v".into(), "v".into()], vec![]).is_err());
        assert!(Graph::new(
            vec!["v".into()],
            vec![Edge { id: "e".into(), src: "v".into(), dst: "w".into() }],
        )
        .is_err());
        let dup = Graph::new(
            vec!["v".into()],
            vec![
                Edge { id: "e".into(), src: "v".into(), dst: "v".into() },
                Edge { id: "e".into(), src: "v".into(), dst: "v".into() },
            ],
        );
        assert!(dup.is_err());
    }

    #[test]
    fn adjacency_invariant_under_isomorphism() {
        let g3 = fixtures::g3();
        let h = Graph::new(
            vec!["q2".into(), "q1".into()],
            vec![
                Edge { id: "m".into(), src: "q1".into(), dst: "q1".into() },
                Edge { id: "p1".into(), src: "q1".into(), dst: "q2".into() },
                Edge { id: "p2".into(), src: "q1".into(), dst: "q2".into() },
            ],
        )
        .unwrap();
        let iso = find_isomorphism(&g3, &h).expect("isomorphic");
        let a_e = g3.adjacency_matrix();
        let a_f = h.adjacency_matrix();
        for (i, v) in g3.vertices().iter().enumerate() {
            for (j, w) in g3.vertices().iter().enumerate() {
                let iv = h.vertex_index(&iso.vertex_map[v]).unwrap();
                let jw = h.vertex_index(&iso.vertex_map[w]).unwrap();
                assert_eq!(a_e[j][i], a_f[jw][iv]);
            }
        }
    }
}
