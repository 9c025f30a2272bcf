//! Factoring a *-endomorphism of a direct sum of matrix factors into a graph
//! plus a Toeplitz representation whose induced endomorphism reproduces it.
//!
//! The pipeline per ordered block pair `(i, j)`: restrict to the component
//! map `α_ij(x) = P_j α(P_i x)`, read the multiplicity off the rank of the
//! corner image `α_ij(E^{(i)}_{00})`, extract that many Kraus-style
//! isometries columnwise, and let them be the edge operators of `n_ij`
//! parallel edges `i → j`. The unital case is flagged and, when it holds,
//! the assembled representation is coisometric at every vertex.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::endomorphism::{ad_apply, endo_verify, BlockOperator, Endo};
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::numerics::{max_abs_diff, orthonormal_range_basis, rank, CMatrix, Tolerance};
use crate::representation::{coisometric_check, verify_toeplitz, CoisometricReport, ToeplitzRep};

/// Result of a successful factorization.
#[derive(Debug, Clone)]
pub struct FactorizationResult {
    /// `multiplicities[i][j]` = number of edges from block `i` to block `j`,
    /// indexed by the endomorphism's block order.
    pub multiplicities: Vec<Vec<usize>>,
    pub graph: Graph,
    pub rep: ToeplitzRep,
    /// Max violation of `α(u) = Ad_τ(u)` over matrix units.
    pub residual: f64,
    /// Whether `α(I) = I` at tolerance.
    pub unital: bool,
    pub coisometric: CoisometricReport,
}

/// Summary written by the CLI alongside the factored graph and representation.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub multiplicities: Vec<Vec<usize>>,
    pub residual: f64,
    pub unital: bool,
    pub coisometric: BTreeMap<String, bool>,
}

impl FactorizationResult {
    pub fn report(&self) -> FactorizationReport {
        FactorizationReport {
            multiplicities: self.multiplicities.clone(),
            residual: self.residual,
            unital: self.unital,
            coisometric: self.coisometric.per_vertex.clone(),
        }
    }
}

fn require_endomorphism(a: &Endo, tol: &Tolerance) -> Result<()> {
    let report = endo_verify(a, tol);
    if !report.pass {
        let detail = match report.worst_pair {
            Some(((i, p, q), (i2, r, s))) => format!(
                "multiplicativity violation {:.3e} at units ({}, {p}, {q}) x ({}, {r}, {s})",
                report.multiplicativity,
                a.layout().vertices()[i],
                a.layout().vertices()[i2],
            ),
            None => format!("adjoint violation {:.3e}", report.adjoint),
        };
        return Err(Error::NotAnEndomorphism(detail));
    }
    Ok(())
}

/// The component map `α_ij` on matrix units: `d_i²` matrices of size
/// `d_j × d_j`, indexed by `p·d_i + q`. Requires a verified endomorphism.
pub fn component_map(a: &Endo, i: usize, j: usize, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    require_endomorphism(a, tol)?;
    Ok(component_blocks(a, i, j))
}

fn component_blocks(a: &Endo, i: usize, j: usize) -> Vec<CMatrix> {
    let d = a.layout().dim(i);
    (0..d * d)
        .map(|k| a.image(i, k / d, k % d).block(j).clone())
        .collect()
}

/// Multiplicity `n_ij`: the rank of `α_ij(E^{(i)}_{00})`, cross-checked
/// against `rank(α_ij(I_i)) = n_ij · d_i`.
pub fn multiplicity(a: &Endo, i: usize, j: usize, tol: &Tolerance) -> Result<usize> {
    require_endomorphism(a, tol)?;
    multiplicity_unchecked(a, i, j, tol)
}

fn multiplicity_unchecked(a: &Endo, i: usize, j: usize, tol: &Tolerance) -> Result<usize> {
    let blocks = component_blocks(a, i, j);
    let d_i = a.layout().dim(i);
    let corner_rank = rank(&blocks[0], tol)?;

    let mut identity_image = CMatrix::zeros(a.layout().dim(j), a.layout().dim(j));
    for p in 0..d_i {
        identity_image += &blocks[p * d_i + p];
    }
    let identity_rank = rank(&identity_image, tol)?;
    if identity_rank != corner_rank * d_i {
        return Err(Error::InconsistentMultiplicity {
            i: a.layout().vertices()[i].clone(),
            j: a.layout().vertices()[j].clone(),
            unit_rank: corner_rank,
            identity_rank,
            block_dim: d_i,
        });
    }
    Ok(corner_rank)
}

/// Extracts the `n_ij` isometries `V_k : H_i → H_j` with
/// `α_ij(T) = Σ_k V_k T V_k*`.
///
/// With `{ξ_k}` an orthonormal basis of `range(α_ij(E^{(i)}_{00}))`, column
/// `p` of `V_k` is `α_ij(E^{(i)}_{p0})·ξ_k`. The isometry relations
/// `V_k* V_l = [k=l]·I` and the reconstruction identity are verified on all
/// matrix units before returning.
pub fn extract_isometries(a: &Endo, i: usize, j: usize, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    require_endomorphism(a, tol)?;
    extract_isometries_unchecked(a, i, j, tol)
}

fn extract_isometries_unchecked(
    a: &Endo,
    i: usize,
    j: usize,
    tol: &Tolerance,
) -> Result<Vec<CMatrix>> {
    let n_ij = multiplicity_unchecked(a, i, j, tol)?;
    if n_ij == 0 {
        return Ok(Vec::new());
    }
    let blocks = component_blocks(a, i, j);
    let d_i = a.layout().dim(i);
    let d_j = a.layout().dim(j);

    let xi = orthonormal_range_basis(&blocks[0], tol)?;
    debug_assert_eq!(xi.len(), n_ij);

    let mut isometries = Vec::with_capacity(n_ij);
    for xi_k in &xi {
        let mut v = CMatrix::zeros(d_j, d_i);
        for p in 0..d_i {
            let col = &blocks[p * d_i] * xi_k;
            v.view_mut((0, p), (d_j, 1)).copy_from(&col);
        }
        isometries.push(v);
    }

    let mut residual: f64 = 0.0;
    let eye = CMatrix::identity(d_i, d_i);
    for (k, v_k) in isometries.iter().enumerate() {
        for (l, v_l) in isometries.iter().enumerate() {
            let gram = v_k.adjoint() * v_l;
            let expected = if k == l { eye.clone() } else { CMatrix::zeros(d_i, d_i) };
            residual = residual.max(max_abs_diff(&gram, &expected));
        }
    }
    for p in 0..d_i {
        for q in 0..d_i {
            let mut reconstructed = CMatrix::zeros(d_j, d_j);
            for v_k in &isometries {
                let col_p = CMatrix::from(v_k.view((0, p), (d_j, 1)));
                let col_q = CMatrix::from(v_k.view((0, q), (d_j, 1)));
                // V_k E_pq V_k* = (column p)(column q)*
                reconstructed += col_p * col_q.adjoint();
            }
            residual = residual.max(max_abs_diff(&reconstructed, &blocks[p * d_i + q]));
        }
    }
    if residual > tol.eps() {
        return Err(Error::ReconstructionFailure {
            i: a.layout().vertices()[i].clone(),
            j: a.layout().vertices()[j].clone(),
            residual,
        });
    }
    Ok(isometries)
}

/// Factors a verified *-endomorphism into a graph and a Toeplitz
/// representation with matching induced endomorphism.
///
/// Per ordered block pair `(i, j)` in layout order, `n_ij` edges named
/// `"{i}->{j}#{k}"` (0-based `k`) are created with source `i` and range `j`,
/// carrying the extracted isometries as edge blocks. The result records the
/// residual of `α = Ad_τ` over matrix units and whether `α` is unital; a
/// unital endomorphism always yields a representation that is coisometric at
/// every vertex.
pub fn factor_endo(a: &Endo, tol: &Tolerance) -> Result<FactorizationResult> {
    require_endomorphism(a, tol)?;
    let layout = a.layout();
    let nblocks = layout.block_count();

    let mut multiplicities = vec![vec![0usize; nblocks]; nblocks];
    let mut edges = Vec::new();
    let mut edge_blocks = BTreeMap::new();
    for (i, row) in multiplicities.iter_mut().enumerate() {
        for (j, count) in row.iter_mut().enumerate() {
            let isometries = extract_isometries_unchecked(a, i, j, tol)?;
            *count = isometries.len();
            let src = layout.vertices()[i].clone();
            let dst = layout.vertices()[j].clone();
            for (k, v) in isometries.into_iter().enumerate() {
                let id = format!("{src}->{dst}#{k}");
                edges.push(Edge { id: id.clone(), src: src.clone(), dst: dst.clone() });
                edge_blocks.insert(id, v);
            }
        }
    }

    let graph = Graph::new(layout.vertices().to_vec(), edges)?;
    let rep = ToeplitzRep::new(
        graph.clone(),
        layout.vertices().to_vec(),
        &layout.dims_map(),
        edge_blocks,
    )?;

    let toeplitz = verify_toeplitz(&rep, tol);
    if !toeplitz.pass {
        return Err(Error::ReconstructionFailure {
            i: "*".to_string(),
            j: "*".to_string(),
            residual: toeplitz.max_violation(),
        });
    }

    let mut residual: f64 = 0.0;
    for (i, p, q) in layout.matrix_units() {
        let unit = BlockOperator::matrix_unit(layout, i, p, q)?;
        let reproduced = ad_apply(&rep, &unit)?;
        residual = residual.max(reproduced.max_abs_diff(a.image(i, p, q)));
    }
    if residual > tol.eps() {
        return Err(Error::AdMismatch(residual));
    }

    let identity_defect = a
        .image_of_identity()
        .max_abs_diff(&BlockOperator::identity(layout));
    let unital = identity_defect <= tol.eps();

    let coisometric = coisometric_check(&rep, tol);
    if unital && !coisometric.all_coisometric {
        let worst = coisometric
            .violations
            .values()
            .fold(0.0f64, |acc, &v| acc.max(v));
        return Err(Error::ReconstructionFailure {
            i: "*".to_string(),
            j: "*".to_string(),
            residual: worst,
        });
    }

    Ok(FactorizationResult { multiplicities, graph, rep, residual, unital, coisometric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endomorphism::ad_endo;
    use crate::graph::find_isomorphism;
    use crate::harness::fixtures;
    use crate::numerics::max_abs;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn component_map_fixtures() {
        let t = tol();
        let endo = ad_endo(&fixtures::rep_g3());
        // alpha_12(E^{(1)}_{00}) = I_2
        let blocks = component_map(&endo, 0, 1, &t).unwrap();
        assert!(max_abs_diff(&blocks[0], &CMatrix::identity(2, 2)) < 1e-15);

        let endo = ad_endo(&fixtures::rep_g4());
        let blocks = component_map(&endo, 0, 1, &t).unwrap();
        let mut e11 = CMatrix::zeros(2, 2);
        e11[(0, 0)] = c(1., 0.);
        assert!(max_abs_diff(&blocks[0], &e11) < 1e-15);

        let layout = fixtures::rep_g3().layout().clone();
        let zero = Endo::zero(&layout);
        for i in 0..2 {
            for j in 0..2 {
                for b in component_map(&zero, i, j, &t).unwrap() {
                    assert_eq!(max_abs(&b), 0.0);
                }
            }
        }
    }

    #[test]
    fn multiplicity_fixtures() {
        let t = tol();
        let endo = ad_endo(&fixtures::rep_g3());
        assert_eq!(multiplicity(&endo, 0, 0, &t).unwrap(), 1);
        assert_eq!(multiplicity(&endo, 0, 1, &t).unwrap(), 2);
        assert_eq!(multiplicity(&endo, 1, 0, &t).unwrap(), 0);
        assert_eq!(multiplicity(&endo, 1, 1, &t).unwrap(), 0);

        let endo = ad_endo(&fixtures::rep_g4());
        assert_eq!(multiplicity(&endo, 0, 1, &t).unwrap(), 1);
        assert_eq!(multiplicity(&endo, 0, 0, &t).unwrap(), 0);

        let zero = Endo::zero(fixtures::rep_g3().layout());
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(multiplicity(&zero, i, j, &t).unwrap(), 0);
            }
        }
    }

    #[test]
    fn extract_isometry_fixtures() {
        let t = tol();
        // G3, pair (1,2): the corner image is I_2, so the extracted frames
        // are the standard basis columns and V_k equals the reference blocks.
        let endo = ad_endo(&fixtures::rep_g3());
        let vs = extract_isometries(&endo, 0, 1, &t).unwrap();
        assert_eq!(vs.len(), 2);
        let e1 = CMatrix::from_row_slice(2, 1, &[c(1., 0.), c(0., 0.)]);
        let e2 = CMatrix::from_row_slice(2, 1, &[c(0., 0.), c(1., 0.)]);
        assert!(max_abs_diff(&vs[0], &e1) < 1e-12);
        assert!(max_abs_diff(&vs[1], &e2) < 1e-12);

        // Identity endomorphism on one 2-dimensional block: V = I_2 exactly
        // under the phase convention.
        let layout = crate::representation::BlockLayout::new(
            vec!["v".to_string()],
            &[("v".to_string(), 2)].into_iter().collect(),
        )
        .unwrap();
        let ident = Endo::identity(&layout);
        let vs = extract_isometries(&ident, 0, 0, &t).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(max_abs_diff(&vs[0], &CMatrix::identity(2, 2)) < 1e-12);

        // G4, pair (1,2): single column e_1.
        let endo = ad_endo(&fixtures::rep_g4());
        let vs = extract_isometries(&endo, 0, 1, &t).unwrap();
        assert_eq!(vs.len(), 1);
        assert!(max_abs_diff(&vs[0], &e1) < 1e-12);
    }

    #[test]
    fn factor_g3_fixture_round_trip() {
        let t = tol();
        let rep = fixtures::rep_g3();
        let result = factor_endo(&ad_endo(&rep), &t).unwrap();

        assert_eq!(result.multiplicities, vec![vec![1, 2], vec![0, 0]]);
        assert!(result.residual <= 1e-12);
        assert!(result.unital);
        assert!(result.coisometric.all_coisometric);
        assert!(find_isomorphism(&result.graph, rep.graph()).is_some());

        // Edge ids follow the documented scheme.
        let ids: Vec<&str> = result.graph.edges().iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["v1->v1#0", "v1->v2#0", "v1->v2#1"]);

        // The factored graph's adjacency matrix transposes the multiplicity
        // matrix: A[j][i] counts edges i -> j.
        let adjacency = result.graph.adjacency_matrix();
        for (i, row) in result.multiplicities.iter().enumerate() {
            for (j, &n_ij) in row.iter().enumerate() {
                assert_eq!(adjacency[j][i], n_ij);
            }
        }
    }

    #[test]
    fn factor_zero_endo() {
        let layout = crate::representation::BlockLayout::new(
            vec!["v".to_string()],
            &[("v".to_string(), 1)].into_iter().collect(),
        )
        .unwrap();
        let result = factor_endo(&Endo::zero(&layout), &tol()).unwrap();
        assert!(result.graph.edges().is_empty());
        assert!(!result.unital);
        assert_eq!(result.residual, 0.0);
    }

    #[test]
    fn factor_g4_fixture() {
        let result = factor_endo(&ad_endo(&fixtures::rep_g4()), &tol()).unwrap();
        assert_eq!(result.graph.edges().len(), 1);
        assert!(!result.unital);
        assert!(!result.coisometric.per_vertex["v1"]);
        assert!(!result.coisometric.per_vertex["v2"]);
    }

    #[test]
    fn factor_rejects_non_endomorphism() {
        let good = ad_endo(&fixtures::rep_g3());
        let layout = good.layout().clone();
        let images: Vec<Vec<_>> = (0..layout.block_count())
            .map(|i| {
                let d = layout.dim(i);
                (0..d * d)
                    .map(|k| {
                        let img = good.image(i, k / d, k % d).clone();
                        // Doubling the (0,0,0) image breaks multiplicativity.
                        if (i, k) == (0, 0) {
                            img.scale(c(2., 0.))
                        } else {
                            img
                        }
                    })
                    .collect()
            })
            .collect();
        let bad = Endo::new(layout, images).unwrap();
        match factor_endo(&bad, &tol()) {
            Err(Error::NotAnEndomorphism(msg)) => {
                assert!(msg.contains("multiplicativity"), "{msg}");
            }
            other => panic!("expected NotAnEndomorphism, got {other:?}"),
        }
    }

    #[test]
    fn extracted_ranges_are_orthogonal_across_sources() {
        // For fixed target j, the ranges of all V_k^{(i j)} over (i, k) are
        // mutually orthogonal inside H_j.
        let t = tol();
        let g = fixtures::g3();
        let rep = crate::representation::random_rep(&g, &fixtures::dims_g3(), 23).unwrap();
        let result = factor_endo(&ad_endo(&rep), &t).unwrap();
        for j in result.graph.vertices() {
            let incoming: Vec<&str> =
                result.graph.incoming(j).map(|e| e.id.as_str()).collect();
            for (a_idx, e1) in incoming.iter().enumerate() {
                for e2 in incoming.iter().skip(a_idx + 1) {
                    let v1 = result.rep.edge_block(e1);
                    let v2 = result.rep.edge_block(e2);
                    let overlap = (v1 * v1.adjoint()) * (v2 * v2.adjoint());
                    assert!(max_abs(&overlap) <= 1e-12);
                }
            }
        }
    }
}
