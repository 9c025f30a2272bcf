//! Recovering coherent unitary equivalences and conjugacy witnesses between
//! representations that induce equal or conjugate endomorphisms.
//!
//! Three pieces: `recover_cue` reconstructs the CUE relating two
//! representations with the same induced endomorphism from normalized block
//! traces; `implement_automorphism` produces a unitary implementing a block
//! automorphism; `conjugacy_witness` combines the two into a unitary plus CUE
//! witnessing conjugacy.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::correspondence::Cue;
use crate::endomorphism::{ad_apply, endo_verify, BlockOperator, Endo};
use crate::error::{Error, Result};
use crate::numerics::{max_abs_diff, orthonormal_range_basis, CMatrix, Tolerance};
use crate::representation::{BlockLayout, ToeplitzRep};

/// A *-automorphism of the block algebra, given by matrix-unit images with
/// derived data: the block permutation `σ` (from `γ(P_i) = P_{σ(i)}`) and the
/// per-block unitaries extracted from the images.
#[derive(Debug, Clone)]
pub struct BlockAutomorphism {
    endo: Endo,
    sigma: Vec<usize>,
    block_unitaries: Vec<CMatrix>,
}

impl BlockAutomorphism {
    /// Validates the automorphism invariants: the images form a
    /// *-endomorphism, every `γ(P_i)` equals some `P_{σ(i)}` exactly (within
    /// tolerance) with matching dimension, `σ` is a permutation, and a
    /// per-block unitary can be extracted from each corner image.
    pub fn from_endo(endo: Endo, tol: &Tolerance) -> Result<Self> {
        let report = endo_verify(&endo, tol);
        if !report.pass {
            return Err(Error::NotAutomorphism(format!(
                "matrix-unit images are not a *-endomorphism (violation {:.3e})",
                report.max_violation()
            )));
        }
        let layout = endo.layout().clone();
        let nblocks = layout.block_count();

        let mut sigma = Vec::with_capacity(nblocks);
        let mut hit = vec![false; nblocks];
        for i in 0..nblocks {
            let d = layout.dim(i);
            let mut gamma_p = BlockOperator::zero(&layout);
            for p in 0..d {
                gamma_p = gamma_p.add(endo.image(i, p, p))?;
            }
            let mut target = None;
            for j in 0..nblocks {
                let candidate = BlockOperator::block_projection(&layout, j);
                if gamma_p.max_abs_diff(&candidate) <= tol.eps() {
                    target = Some(j);
                    break;
                }
            }
            let j = target.ok_or_else(|| {
                Error::NotAutomorphism(format!(
                    "the image of the central projection at block {} is not a block projection",
                    layout.vertices()[i]
                ))
            })?;
            if layout.dim(j) != d {
                return Err(Error::NotAutomorphism(format!(
                    "blocks {} and {} have different dimensions",
                    layout.vertices()[i],
                    layout.vertices()[j]
                )));
            }
            if hit[j] {
                return Err(Error::NotAutomorphism(
                    "two blocks map onto the same block projection".to_string(),
                ));
            }
            hit[j] = true;
            sigma.push(j);
        }

        // Per source block i with target j = σ(i): ξ spans the rank-1 range
        // of γ(E^{(i)}_{00}); column p of the block unitary is γ(E^{(i)}_{p0})·ξ.
        let mut block_unitaries = Vec::with_capacity(nblocks);
        for (i, &j) in sigma.iter().enumerate() {
            let d = layout.dim(i);
            let corner = endo.image(i, 0, 0).block(j).clone();
            let xi = orthonormal_range_basis(&corner, tol)?;
            if xi.len() != 1 {
                return Err(Error::NotAutomorphism(format!(
                    "corner image at block {} has rank {}, expected 1",
                    layout.vertices()[i],
                    xi.len()
                )));
            }
            let mut u = CMatrix::zeros(d, d);
            for p in 0..d {
                let col = endo.image(i, p, 0).block(j) * &xi[0];
                u.view_mut((0, p), (d, 1)).copy_from(&col);
            }
            block_unitaries.push(u);
        }

        Ok(BlockAutomorphism { endo, sigma, block_unitaries })
    }

    pub fn identity(layout: &BlockLayout) -> Self {
        let endo = Endo::identity(layout);
        let sigma = (0..layout.block_count()).collect();
        let block_unitaries = (0..layout.block_count())
            .map(|i| CMatrix::identity(layout.dim(i), layout.dim(i)))
            .collect();
        BlockAutomorphism { endo, sigma, block_unitaries }
    }

    pub fn endo(&self) -> &Endo {
        &self.endo
    }

    pub fn layout(&self) -> &BlockLayout {
        self.endo.layout()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn block_unitaries(&self) -> &[CMatrix] {
        &self.block_unitaries
    }

    /// The inverse automorphism: `σ⁻¹` with the adjoint unitaries.
    pub fn inverse(&self) -> Self {
        let layout = self.layout().clone();
        let nblocks = layout.block_count();
        let mut inv_sigma = vec![0usize; nblocks];
        for (i, &j) in self.sigma.iter().enumerate() {
            inv_sigma[j] = i;
        }
        let inv_unitaries: Vec<CMatrix> = (0..nblocks)
            .map(|j| self.block_unitaries[inv_sigma[j]].adjoint())
            .collect();
        let images = (0..nblocks)
            .map(|j| {
                let d = layout.dim(j);
                let u = &inv_unitaries[j];
                (0..d * d)
                    .map(|k| {
                        let mut unit = CMatrix::zeros(d, d);
                        unit[(k / d, k % d)] = Complex64::new(1.0, 0.0);
                        let mut out = BlockOperator::zero(&layout);
                        let transported = u * unit * u.adjoint();
                        out = out
                            .add(&embed_block(&layout, inv_sigma[j], &transported))
                            .expect("same layout");
                        out
                    })
                    .collect()
            })
            .collect();
        let endo = Endo::new(layout, images).expect("shapes by construction");
        BlockAutomorphism {
            endo,
            sigma: inv_sigma,
            block_unitaries: inv_unitaries,
        }
    }
}

fn embed_block(layout: &BlockLayout, idx: usize, m: &CMatrix) -> BlockOperator {
    let mut blocks: Vec<CMatrix> = (0..layout.block_count())
        .map(|i| CMatrix::zeros(layout.dim(i), layout.dim(i)))
        .collect();
    blocks[idx] = m.clone();
    BlockOperator::new(layout.clone(), blocks).expect("shapes by construction")
}

/// Assembles the unitary `V` with `γ(w) = V w V*`: the per-block unitaries
/// sit at block positions `(σ(i), i)`. Verified against every matrix unit
/// before returning.
pub fn implement_automorphism(g: &BlockAutomorphism, tol: &Tolerance) -> Result<CMatrix> {
    let layout = g.layout();
    let n = layout.total_dim();
    let mut v = CMatrix::zeros(n, n);
    for i in 0..layout.block_count() {
        let j = g.sigma[i];
        v.view_mut(
            (layout.offset(j), layout.offset(i)),
            (layout.dim(j), layout.dim(i)),
        )
        .copy_from(&g.block_unitaries[i]);
    }

    let unitarity = max_abs_diff(&(v.adjoint() * &v), &CMatrix::identity(n, n));
    if unitarity > tol.eps() {
        return Err(Error::NotAutomorphism(format!(
            "assembled implementation is not unitary (violation {unitarity:.3e})"
        )));
    }
    let mut residual: f64 = 0.0;
    for (i, p, q) in layout.matrix_units() {
        let unit = layout.unit_full(i, p, q);
        let conjugated = &v * unit * v.adjoint();
        residual = residual.max(max_abs_diff(&conjugated, &g.endo.image(i, p, q).to_full()));
    }
    if residual > tol.eps() {
        return Err(Error::NotAutomorphism(format!(
            "conjugation by the assembled unitary does not reproduce the images \
             (violation {residual:.3e})"
        )));
    }
    Ok(v)
}

/// Recovers the CUE relating two representations with the same induced
/// endomorphism: the output `cue` satisfies `pullback(t2, cue) = t1`, i.e.
/// `S_e = Σ_f U[f][e]·T_f` on generators.
///
/// Step 1 matches the two block-projection families exactly (vertex
/// bijection). Step 2 computes each coefficient as the normalized block
/// trace `tr(T_f*·S_e)/d_{s(e)}`; the trace over non-matching edge pairs must
/// vanish. Step 3 verifies unitarity and the generator identity.
pub fn recover_cue(t1: &ToeplitzRep, t2: &ToeplitzRep, tol: &Tolerance) -> Result<Cue> {
    if t1.total_dim() != t2.total_dim() {
        return Err(Error::InvalidInput(
            "representations act on spaces of different dimension".to_string(),
        ));
    }
    let eps = tol.eps();

    // Step 1: vertex bijection from exact equality of block projections.
    // Projections are diagonal 0/1 matrices, so equality means equal
    // offset and size.
    let l1 = t1.layout();
    let l2 = t2.layout();
    let mut b: BTreeMap<String, String> = BTreeMap::new();
    for (i1, v) in l1.vertices().iter().enumerate() {
        let here = (l1.offset(i1), l1.dim(i1));
        let image = l2
            .vertices()
            .iter()
            .enumerate()
            .find(|(i2, _)| (l2.offset(*i2), l2.dim(*i2)) == here)
            .map(|(_, w)| w.clone());
        match image {
            Some(w) => {
                b.insert(v.clone(), w);
            }
            None => {
                return Err(Error::VertexMismatch(format!(
                    "no block projection of the second representation matches vertex {v:?}"
                )))
            }
        }
    }

    // Step 2: normalized block traces.
    let e_graph = t1.graph();
    let f_graph = t2.graph();
    let ne = e_graph.edges().len();
    let nf = f_graph.edges().len();
    if ne != nf {
        return Err(Error::NotUnitary(format!(
            "edge counts differ ({ne} vs {nf})"
        )));
    }
    let mut u = CMatrix::zeros(nf, ne);
    let mut stray_trace: f64 = 0.0;
    for (ei, e) in e_graph.edges().iter().enumerate() {
        let d_s = t1.dims_map()[&e.src] as f64;
        let s_e = t1.full_edge_matrix(&e.id);
        for (fi, f) in f_graph.edges().iter().enumerate() {
            let t_f = t2.full_edge_matrix(&f.id);
            let trace = (t_f.adjoint() * &s_e).trace() / Complex64::new(d_s, 0.0);
            let matched = f.src == b[&e.src] && f.dst == b[&e.dst];
            if matched {
                u[(fi, ei)] = trace;
            } else if trace.norm() > eps {
                stray_trace = stray_trace.max(trace.norm());
            }
        }
    }
    if stray_trace > eps {
        return Err(Error::AdMismatch(stray_trace));
    }

    // Step 3: unitarity and the generator identity.
    let unitarity = max_abs_diff(&(u.adjoint() * &u), &CMatrix::identity(ne, ne));
    if unitarity > eps {
        return Err(Error::NotUnitary(format!(
            "coefficient matrix fails unitarity by {unitarity:.3e}"
        )));
    }
    let cue = Cue::new(e_graph.clone(), f_graph.clone(), u, b)?;
    let mut residual: f64 = 0.0;
    for e in e_graph.edges() {
        let s_e = t1.full_edge_matrix(&e.id);
        let mut combo = CMatrix::zeros(s_e.nrows(), s_e.ncols());
        for f in f_graph.edges() {
            combo += t2.full_edge_matrix(&f.id) * cue.coefficient(&f.id, &e.id);
        }
        residual = residual.max(max_abs_diff(&s_e, &combo));
    }
    if residual > eps {
        return Err(Error::AdMismatch(residual));
    }
    Ok(cue)
}

/// Witness of unitary equivalence after twisting by a CUE: a unitary `v`, a
/// CUE, and the residual of the identity `τ₂(gen) = V·(τ₁∘Γ)(gen)·V*` over
/// all generators.
#[derive(Debug, Clone)]
pub struct ConjugacyWitness {
    pub v: CMatrix,
    pub cue: Cue,
    pub residual: f64,
}

/// Conjugates a representation by a block automorphism: the result `κ` has
/// `κ(δ_e) = V·S_e·V*` for the implementing unitary `V`, with the block
/// layout permuted accordingly.
pub fn conjugate_by_automorphism(
    rep: &ToeplitzRep,
    g: &BlockAutomorphism,
    tol: &Tolerance,
) -> Result<ToeplitzRep> {
    if g.layout() != rep.layout() {
        return Err(Error::InvalidInput(
            "automorphism layout does not match the representation".to_string(),
        ));
    }
    let v = implement_automorphism(g, tol)?;
    conjugate_rep_by_unitary(rep, g, &v)
}

fn conjugate_rep_by_unitary(
    rep: &ToeplitzRep,
    g: &BlockAutomorphism,
    v: &CMatrix,
) -> Result<ToeplitzRep> {
    let layout = rep.layout();
    let nblocks = layout.block_count();
    let sigma = g.sigma();
    let mut inv_sigma = vec![0usize; nblocks];
    for (i, &j) in sigma.iter().enumerate() {
        inv_sigma[j] = i;
    }
    // Block j of the new layout holds the vertex that block σ⁻¹(j) held.
    let vertex_order: Vec<String> = (0..nblocks)
        .map(|j| layout.vertices()[inv_sigma[j]].clone())
        .collect();
    let dims = rep.dims_map();

    let mut edge_blocks = BTreeMap::new();
    for e in rep.graph().edges() {
        let full = v * rep.full_edge_matrix(&e.id) * v.adjoint();
        let r_old = layout.position(&e.dst).expect("validated");
        let s_old = layout.position(&e.src).expect("validated");
        let (r_new, s_new) = (sigma[r_old], sigma[s_old]);
        let block = CMatrix::from(full.view(
            (layout.offset(r_new), layout.offset(s_new)),
            (layout.dim(r_new), layout.dim(s_new)),
        ));
        edge_blocks.insert(e.id.clone(), block);
    }
    ToeplitzRep::new(rep.graph().clone(), vertex_order, &dims, edge_blocks)
}

/// Produces a conjugacy witness for two representations whose endomorphisms
/// are conjugate via `g`: requires `Ad_{τ2} ∘ γ = γ ∘ Ad_{τ1}` on matrix
/// units, implements `γ` spatially as `V`, forms `κ = V·τ₁·V*`, and recovers
/// the CUE relating `κ` to `τ₂`. The returned residual is the max violation
/// of `τ₂(gen) = V·(τ₁∘Γ)(gen)·V*` over vertex and edge generators.
pub fn conjugacy_witness(
    t1: &ToeplitzRep,
    t2: &ToeplitzRep,
    g: &BlockAutomorphism,
    tol: &Tolerance,
) -> Result<ConjugacyWitness> {
    if g.layout() != t1.layout() {
        return Err(Error::InvalidInput(
            "automorphism layout does not match the first representation".to_string(),
        ));
    }
    if t1.layout().partition() != t2.layout().partition() {
        return Err(Error::InvalidInput(
            "representations decompose the space into different blocks".to_string(),
        ));
    }
    let layout = t1.layout();
    let eps = tol.eps();

    // Conjugacy precondition on matrix units: Ad_{τ2}(γ(u)) = γ(Ad_{τ1}(u)).
    let mut precondition: f64 = 0.0;
    for (i, p, q) in layout.matrix_units() {
        let unit = BlockOperator::matrix_unit(layout, i, p, q)?;
        let gamma_u = g.endo().apply(&unit)?;
        let lhs = ad_apply(t2, &gamma_u.refit(t2.layout())?)?.refit(layout)?;
        let rhs = g.endo().apply(&ad_apply(t1, &unit)?)?;
        precondition = precondition.max(lhs.max_abs_diff(&rhs));
    }
    if precondition > eps {
        return Err(Error::NotConjugate(precondition));
    }

    let v = implement_automorphism(g, tol)?;
    let kappa = conjugate_rep_by_unitary(t1, g, &v)?;
    let cue = recover_cue(t2, &kappa, tol)?;

    // Residual of τ₂ = V·(τ₁ ∘ Γ)·V* on vertex and edge generators.
    let mut residual: f64 = 0.0;
    for vtx in t2.graph().vertices() {
        let image = cue.map_vertex(vtx);
        let lhs = t2.projection(vtx);
        let rhs = &v * t1.projection(image) * v.adjoint();
        residual = residual.max(max_abs_diff(&lhs, &rhs));
    }
    for e in t2.graph().edges() {
        let lhs = t2.full_edge_matrix(&e.id);
        let mut gamma_e = CMatrix::zeros(lhs.nrows(), lhs.ncols());
        for f in kappa.graph().edges() {
            let coeff = cue.coefficient(&f.id, &e.id);
            if coeff != Complex64::default() {
                gamma_e += t1.full_edge_matrix(&f.id) * coeff;
            }
        }
        let rhs = &v * gamma_e * v.adjoint();
        residual = residual.max(max_abs_diff(&lhs, &rhs));
    }

    Ok(ConjugacyWitness { v, cue, residual })
}
