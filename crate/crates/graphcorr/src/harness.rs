//! Seeded random-instance generators and independent brute-force oracles
//! backing the property suites, plus the small reference fixtures used
//! throughout the tests and documentation.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::endomorphism::Endo;
use crate::equivalence::BlockAutomorphism;
use crate::error::{Error, Result};
use crate::graph::{feasible_dims, DimVector, Edge, Graph};
use crate::numerics::{haar_unitary, max_abs_diff, CMatrix, Tolerance};
use crate::representation::{random_rep, BlockLayout, ToeplitzRep};

/// Deterministic, splittable seed. Identical seeds reproduce identical
/// artifacts bit for bit; `split` derives independent streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeded {
    seed: u64,
}

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Seeded { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// Derives an independent stream (splitmix64 of seed xor stream).
    pub fn split(&self, stream: u64) -> Seeded {
        let mut z = self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seeded { seed: z ^ (z >> 31) }
    }
}

/// Retry cap for rejection sampling in [`random_instance`].
pub const INSTANCE_RETRY_CAP: usize = 1000;

/// Draws a random graph with feasible dimensions and a random representation,
/// deterministic in `seed`. Graphs are drawn uniformly within the bounds;
/// minimal feasible dimensions are computed by a monotone fixpoint with a
/// small random slack, and draws whose fixpoint exceeds `max_dim` are
/// rejected (up to [`INSTANCE_RETRY_CAP`] attempts).
pub fn random_instance(
    max_vertices: usize,
    max_edges: usize,
    max_dim: usize,
    seed: u64,
) -> Result<(Graph, DimVector, ToeplitzRep)> {
    if max_vertices < 1 || max_dim < 1 {
        return Err(Error::InvalidInput(
            "bounds must allow at least one vertex of dimension one".to_string(),
        ));
    }
    let seeded = Seeded::new(seed);
    let mut rng = seeded.rng();
    for attempt in 0..INSTANCE_RETRY_CAP {
        let nv = rng.random_range(1..=max_vertices);
        let vertices: Vec<String> = (1..=nv).map(|k| format!("v{k}")).collect();
        let ne = rng.random_range(0..=max_edges);
        let edges: Vec<Edge> = (1..=ne)
            .map(|k| Edge {
                id: format!("e{k}"),
                src: vertices[rng.random_range(0..nv)].clone(),
                dst: vertices[rng.random_range(0..nv)].clone(),
            })
            .collect();
        let graph = Graph::new(vertices.clone(), edges)?;

        // Random slack, then the least fixpoint of
        // d_v >= max(1 + slack_v, sum over incoming of d_{s(e)} + slack_v).
        let slack: Vec<usize> = (0..nv).map(|_| rng.random_range(0..=2)).collect();
        let mut dims_vec: Vec<usize> = slack.iter().map(|s| 1 + s).collect();
        let mut feasible = true;
        'fixpoint: loop {
            let mut changed = false;
            for (vi, v) in vertices.iter().enumerate() {
                let need: usize = graph
                    .incoming(v)
                    .map(|e| dims_vec[graph.vertex_index(&e.src).expect("validated")])
                    .sum();
                let target = dims_vec[vi].max(need + slack[vi]).max(need.max(1));
                if target > dims_vec[vi] {
                    dims_vec[vi] = target;
                    changed = true;
                }
                if dims_vec[vi] > max_dim {
                    feasible = false;
                    break 'fixpoint;
                }
            }
            if !changed {
                break;
            }
        }
        if !feasible {
            continue;
        }
        let dims: DimVector = vertices.iter().cloned().zip(dims_vec).collect();
        debug_assert!(feasible_dims(&graph, &dims)?);
        let rep = random_rep(&graph, &dims, seeded.split(attempt as u64 + 1).seed())?;
        return Ok((graph, dims, rep));
    }
    Err(Error::BoundsInfeasible(INSTANCE_RETRY_CAP))
}

/// Independent oracle: compares the induced endomorphisms of two
/// representations on every matrix unit of the block algebra, using full
/// matrix products only (no blockwise shortcut shared with `ad_apply`).
pub fn brute_force_ad_equal(t1: &ToeplitzRep, t2: &ToeplitzRep, tol: &Tolerance) -> bool {
    if t1.total_dim() != t2.total_dim() {
        return false;
    }
    if t1.layout().partition() != t2.layout().partition() {
        return false;
    }
    let layout = t1.layout();
    let full1: Vec<CMatrix> = t1
        .graph()
        .edges()
        .iter()
        .map(|e| t1.full_edge_matrix(&e.id))
        .collect();
    let full2: Vec<CMatrix> = t2
        .graph()
        .edges()
        .iter()
        .map(|e| t2.full_edge_matrix(&e.id))
        .collect();
    let n = layout.total_dim();
    let ad = |fulls: &[CMatrix], u: &CMatrix| {
        let mut acc = CMatrix::zeros(n, n);
        for s in fulls {
            acc += s * u * s.adjoint();
        }
        acc
    };
    for (i, p, q) in layout.matrix_units() {
        let unit = layout.unit_full(i, p, q);
        if max_abs_diff(&ad(&full1, &unit), &ad(&full2, &unit)) > tol.eps() {
            return false;
        }
    }
    true
}

/// Enumerates the vertex bijections of `g` onto itself that preserve
/// adjacency counts (graph automorphisms at the vertex level).
fn vertex_automorphisms(g: &Graph) -> Vec<Vec<usize>> {
    let nv = g.vertices().len();
    let a = g.adjacency_matrix();
    let mut found = Vec::new();
    let mut assignment = vec![0usize; nv];
    let mut used = vec![false; nv];
    fn backtrack(
        depth: usize,
        nv: usize,
        a: &[Vec<usize>],
        assignment: &mut Vec<usize>,
        used: &mut Vec<bool>,
        found: &mut Vec<Vec<usize>>,
    ) {
        if depth == nv {
            found.push(assignment.clone());
            return;
        }
        for cand in 0..nv {
            if used[cand] || a[depth][depth] != a[cand][cand] {
                continue;
            }
            let ok = (0..depth).all(|prev| {
                let img = assignment[prev];
                a[depth][prev] == a[cand][img] && a[prev][depth] == a[img][cand]
            });
            if !ok {
                continue;
            }
            assignment[depth] = cand;
            used[cand] = true;
            backtrack(depth + 1, nv, a, assignment, used, found);
            used[cand] = false;
        }
    }
    backtrack(0, nv, &a, &mut assignment, &mut used, &mut found);
    found
}

/// Random CUE from `X(g)` to itself, deterministic in `seed`: a uniformly
/// chosen vertex automorphism together with independent Haar unitaries on
/// each matched parallel-edge class. The output passes `cue_verify`.
pub fn random_cue(g: &Graph, seed: u64) -> crate::correspondence::Cue {
    let mut rng = Seeded::new(seed).rng();
    let autos = vertex_automorphisms(g);
    let assignment = &autos[rng.random_range(0..autos.len())];
    let b: BTreeMap<String, String> = g
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), g.vertices()[assignment[i]].clone()))
        .collect();

    let ne = g.edges().len();
    let mut u = CMatrix::zeros(ne, ne);
    let mut classes: Vec<(String, String)> = Vec::new();
    for e in g.edges() {
        let key = (e.src.clone(), e.dst.clone());
        if !classes.contains(&key) {
            classes.push(key);
        }
    }
    for (src, dst) in classes {
        let cols: Vec<usize> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.src == src && e.dst == dst)
            .map(|(i, _)| i)
            .collect();
        let (bsrc, bdst) = (&b[&src], &b[&dst]);
        let rows: Vec<usize> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| &e.src == bsrc && &e.dst == bdst)
            .map(|(i, _)| i)
            .collect();
        debug_assert_eq!(rows.len(), cols.len());
        let haar = haar_unitary(cols.len(), &mut rng);
        for (ri, &row) in rows.iter().enumerate() {
            for (ci, &col) in cols.iter().enumerate() {
                u[(row, col)] = haar[(ri, ci)];
            }
        }
    }
    crate::correspondence::Cue::new(g.clone(), g.clone(), u, b).expect("shapes by construction")
}

/// Random block automorphism for a layout, deterministic in `seed`: a random
/// permutation among equal-dimension blocks with independent Haar unitaries,
/// emitted as matrix-unit images and validated.
pub fn random_automorphism(layout: &BlockLayout, seed: u64) -> Result<BlockAutomorphism> {
    let mut rng = Seeded::new(seed).rng();
    let nblocks = layout.block_count();

    // Random permutation within each dimension class (Fisher-Yates per class).
    let mut sigma: Vec<usize> = (0..nblocks).collect();
    let mut by_dim: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nblocks {
        by_dim.entry(layout.dim(i)).or_default().push(i);
    }
    for class in by_dim.values() {
        let mut images = class.clone();
        for k in (1..images.len()).rev() {
            let swap = rng.random_range(0..=k);
            images.swap(k, swap);
        }
        for (&src, &dst) in class.iter().zip(&images) {
            sigma[src] = dst;
        }
    }

    let unitaries: Vec<CMatrix> = (0..nblocks)
        .map(|i| haar_unitary(layout.dim(i), &mut rng))
        .collect();

    let images = (0..nblocks)
        .map(|i| {
            let d = layout.dim(i);
            let u_i = &unitaries[i];
            (0..d * d)
                .map(|k| {
                    let mut unit = CMatrix::zeros(d, d);
                    unit[(k / d, k % d)] = Complex64::new(1.0, 0.0);
                    let transported = u_i * unit * u_i.adjoint();
                    let mut blocks: Vec<CMatrix> = (0..nblocks)
                        .map(|b| CMatrix::zeros(layout.dim(b), layout.dim(b)))
                        .collect();
                    blocks[sigma[i]] = transported;
                    crate::endomorphism::BlockOperator::new(layout.clone(), blocks)
                        .expect("shapes by construction")
                })
                .collect()
        })
        .collect();
    let endo = Endo::new(layout.clone(), images)?;
    BlockAutomorphism::from_endo(endo, &Tolerance::default())
}

/// Reference graphs and representations used across the test suites: small
/// hand-checkable examples on at most a 3-dimensional space.
pub mod fixtures {
    use super::*;

    /// One vertex `v`, no edges.
    pub fn g1() -> Graph {
        Graph::new(vec!["v".into()], vec![]).expect("valid")
    }

    /// Vertices `v1, v2`; parallel edges `e1, e2 : v1 → v2`.
    pub fn g2() -> Graph {
        Graph::new(
            vec!["v1".into(), "v2".into()],
            vec![
                Edge { id: "e1".into(), src: "v1".into(), dst: "v2".into() },
                Edge { id: "e2".into(), src: "v1".into(), dst: "v2".into() },
            ],
        )
        .expect("valid")
    }

    /// `g2` plus a loop `a` at `v1`.
    pub fn g3() -> Graph {
        Graph::new(
            vec!["v1".into(), "v2".into()],
            vec![
                Edge { id: "a".into(), src: "v1".into(), dst: "v1".into() },
                Edge { id: "e1".into(), src: "v1".into(), dst: "v2".into() },
                Edge { id: "e2".into(), src: "v1".into(), dst: "v2".into() },
            ],
        )
        .expect("valid")
    }

    /// Vertices `v1, v2`; a single edge `e : v1 → v2`.
    pub fn g4() -> Graph {
        Graph::new(
            vec!["v1".into(), "v2".into()],
            vec![Edge { id: "e".into(), src: "v1".into(), dst: "v2".into() }],
        )
        .expect("valid")
    }

    pub fn dims_g1() -> DimVector {
        [("v".to_string(), 1)].into_iter().collect()
    }

    pub fn dims_g2() -> DimVector {
        [("v1".to_string(), 1), ("v2".to_string(), 2)].into_iter().collect()
    }

    pub fn dims_g3() -> DimVector {
        dims_g2()
    }

    pub fn dims_g4() -> DimVector {
        dims_g2()
    }

    fn basis_column(k: usize) -> CMatrix {
        let mut col = CMatrix::zeros(2, 1);
        col[(k, 0)] = Complex64::new(1.0, 0.0);
        col
    }

    /// The trivial representation of `g1` on a 1-dimensional space.
    pub fn rep_g1() -> ToeplitzRep {
        ToeplitzRep::new(g1(), vec!["v".into()], &dims_g1(), BTreeMap::new()).expect("valid")
    }

    /// Reference representation of `g2` on C³ with layout `[v1 | v2]`:
    /// `S_e1`, `S_e2` are the two standard basis columns of the `v2` block.
    pub fn rep_g2() -> ToeplitzRep {
        let g = g2();
        let mut blocks = BTreeMap::new();
        blocks.insert("e1".to_string(), basis_column(0));
        blocks.insert("e2".to_string(), basis_column(1));
        ToeplitzRep::new(g.clone(), g.vertices().to_vec(), &dims_g2(), blocks).expect("valid")
    }

    /// Reference representation of `g3`: the loop acts as the scalar 1 on
    /// the `v1` block, the parallel edges as the standard basis columns.
    pub fn rep_g3() -> ToeplitzRep {
        let g = g3();
        let mut blocks = BTreeMap::new();
        blocks.insert("a".to_string(), CMatrix::identity(1, 1));
        blocks.insert("e1".to_string(), basis_column(0));
        blocks.insert("e2".to_string(), basis_column(1));
        ToeplitzRep::new(g.clone(), g.vertices().to_vec(), &dims_g3(), blocks).expect("valid")
    }

    /// Reference representation of `g4`: the single edge is the first basis
    /// column of the `v2` block.
    pub fn rep_g4() -> ToeplitzRep {
        let g = g4();
        let mut blocks = BTreeMap::new();
        blocks.insert("e".to_string(), basis_column(0));
        ToeplitzRep::new(g.clone(), g.vertices().to_vec(), &dims_g4(), blocks).expect("valid")
    }
}
