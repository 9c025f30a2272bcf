//! The graph correspondence `X(E)` over the vertex algebra at finite scale,
//! and coherent unitary equivalences (CUEs) between graph correspondences.
//!
//! Elements of `X(E)` are complex functions on edges; elements of the
//! coefficient algebra are complex functions on vertices. A CUE packages a
//! unitary edge-coefficient matrix together with a vertex bijection (every
//! *-isomorphism of the coefficient algebras over a finite vertex set comes
//! from a bijection, so nothing else is representable).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphIso};
use crate::numerics::{max_abs_diff, CMatrix, Tolerance};

/// Element of the coefficient algebra: one complex value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: BTreeMap<String, Complex64>,
}

impl VertexFunction {
    /// Requires `values` to be defined on exactly the vertex set of `g`.
    pub fn new(g: &Graph, values: BTreeMap<String, Complex64>) -> Result<Self> {
        if values.len() != g.vertices().len()
            || !g.vertices().iter().all(|v| values.contains_key(v))
        {
            return Err(Error::InvalidInput(
                "vertex function must be defined on exactly the vertex set".to_string(),
            ));
        }
        Ok(VertexFunction { values })
    }

    pub fn zero(g: &Graph) -> Self {
        VertexFunction {
            values: g
                .vertices()
                .iter()
                .map(|v| (v.clone(), Complex64::default()))
                .collect(),
        }
    }

    /// The indicator `δ_v`.
    pub fn delta(g: &Graph, v: &str) -> Result<Self> {
        if g.vertex_index(v).is_none() {
            return Err(Error::InvalidInput(format!("unknown vertex {v:?}")));
        }
        let mut f = Self::zero(g);
        f.values.insert(v.to_string(), Complex64::new(1.0, 0.0));
        Ok(f)
    }

    pub fn value(&self, v: &str) -> Complex64 {
        self.values.get(v).copied().unwrap_or_default()
    }

    pub fn values(&self) -> &BTreeMap<String, Complex64> {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &VertexFunction) -> f64 {
        let mut acc: f64 = 0.0;
        for (v, z) in &self.values {
            acc = acc.max((z - other.value(v)).norm());
        }
        for (v, z) in &other.values {
            acc = acc.max((z - self.value(v)).norm());
        }
        acc
    }
}

/// Element of `X(E)`: one complex value per edge, tied to its parent graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrVector {
    graph: Graph,
    values: BTreeMap<String, Complex64>,
}

impl CorrVector {
    /// Requires `values` to be defined on exactly the edge set of `g`.
    pub fn new(g: &Graph, values: BTreeMap<String, Complex64>) -> Result<Self> {
        if values.len() != g.edges().len()
            || !g.edges().iter().all(|e| values.contains_key(&e.id))
        {
            return Err(Error::InvalidInput(
                "correspondence vector must be defined on exactly the edge set".to_string(),
            ));
        }
        Ok(CorrVector { graph: g.clone(), values })
    }

    pub fn zero(g: &Graph) -> Self {
        CorrVector {
            graph: g.clone(),
            values: g
                .edges()
                .iter()
                .map(|e| (e.id.clone(), Complex64::default()))
                .collect(),
        }
    }

    /// The indicator `δ_e`.
    pub fn delta(g: &Graph, e: &str) -> Result<Self> {
        if g.edge(e).is_none() {
            return Err(Error::InvalidInput(format!("unknown edge {e:?}")));
        }
        let mut x = Self::zero(g);
        x.values.insert(e.to_string(), Complex64::new(1.0, 0.0));
        Ok(x)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn value(&self, e: &str) -> Complex64 {
        self.values.get(e).copied().unwrap_or_default()
    }

    pub fn values(&self) -> &BTreeMap<String, Complex64> {
        &self.values
    }

    pub fn max_abs_diff(&self, other: &CorrVector) -> f64 {
        let mut acc: f64 = 0.0;
        for (e, z) in &self.values {
            acc = acc.max((z - other.value(e)).norm());
        }
        acc
    }
}

fn check_same_graph(x: &CorrVector, y: &CorrVector) -> Result<()> {
    if x.graph != y.graph {
        return Err(Error::InvalidInput(
            "correspondence vectors belong to different graphs".to_string(),
        ));
    }
    Ok(())
}

fn check_function_domain(g: &Graph, a: &VertexFunction) -> Result<()> {
    if a.values.len() != g.vertices().len()
        || !g.vertices().iter().all(|v| a.values.contains_key(v))
    {
        return Err(Error::InvalidInput(
            "vertex function is not defined on this graph's vertex set".to_string(),
        ));
    }
    Ok(())
}

/// Right action: `(x·a)(e) = x(e)·a(s(e))`.
pub fn right_action(x: &CorrVector, a: &VertexFunction) -> Result<CorrVector> {
    check_function_domain(&x.graph, a)?;
    let mut out = x.clone();
    for e in x.graph.edges() {
        let val = x.value(&e.id) * a.value(&e.src);
        out.values.insert(e.id.clone(), val);
    }
    Ok(out)
}

/// Left action: `(φ(a)x)(e) = a(r(e))·x(e)`.
pub fn left_action(a: &VertexFunction, x: &CorrVector) -> Result<CorrVector> {
    check_function_domain(&x.graph, a)?;
    let mut out = x.clone();
    for e in x.graph.edges() {
        let val = a.value(&e.dst) * x.value(&e.id);
        out.values.insert(e.id.clone(), val);
    }
    Ok(out)
}

/// Coefficient-algebra-valued inner product:
/// `⟨x,y⟩(v) = Σ_{e ∈ s⁻¹(v)} conj(x(e))·y(e)`.
pub fn inner_product(x: &CorrVector, y: &CorrVector) -> Result<VertexFunction> {
    check_same_graph(x, y)?;
    let mut out = VertexFunction::zero(&x.graph);
    for v in x.graph.vertices() {
        let sum: Complex64 = x
            .graph
            .outgoing(v)
            .map(|e| x.value(&e.id).conj() * y.value(&e.id))
            .sum();
        out.values.insert(v.clone(), sum);
    }
    Ok(out)
}

/// Coherent unitary equivalence from `X(source)` to `X(target)`: a unitary
/// coefficient matrix `u` (rows indexed by target edges, columns by source
/// edges, both in input order) together with a vertex bijection.
#[derive(Debug, Clone, PartialEq)]
pub struct Cue {
    source: Graph,
    target: Graph,
    u: CMatrix,
    vertex_bijection: BTreeMap<String, String>,
}

impl Cue {
    /// Structural validation only: shapes match the edge counts and the
    /// vertex map is a bijection. Unitarity and the support condition are
    /// numeric statements, checked by [`cue_verify`].
    pub fn new(
        source: Graph,
        target: Graph,
        u: CMatrix,
        vertex_bijection: BTreeMap<String, String>,
    ) -> Result<Self> {
        if u.nrows() != target.edges().len() || u.ncols() != source.edges().len() {
            return Err(Error::InvalidInput(format!(
                "coefficient matrix must be {}x{} (target edges x source edges), got {}x{}",
                target.edges().len(),
                source.edges().len(),
                u.nrows(),
                u.ncols()
            )));
        }
        crate::numerics::ensure_finite(&u)?;
        check_vertex_bijection(&source, &target, &vertex_bijection)?;
        Ok(Cue { source, target, u, vertex_bijection })
    }

    pub fn identity(g: &Graph) -> Self {
        let n = g.edges().len();
        Cue {
            source: g.clone(),
            target: g.clone(),
            u: CMatrix::identity(n, n),
            vertex_bijection: g.vertices().iter().map(|v| (v.clone(), v.clone())).collect(),
        }
    }

    pub fn source(&self) -> &Graph {
        &self.source
    }

    pub fn target(&self) -> &Graph {
        &self.target
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn vertex_bijection(&self) -> &BTreeMap<String, String> {
        &self.vertex_bijection
    }

    pub fn map_vertex(&self, v: &str) -> &str {
        &self.vertex_bijection[v]
    }

    /// Coefficient `U[f][e]` by edge ids.
    pub fn coefficient(&self, f: &str, e: &str) -> Complex64 {
        let fi = self
            .target
            .edges()
            .iter()
            .position(|x| x.id == f)
            .expect("target edge");
        let ei = self
            .source
            .edges()
            .iter()
            .position(|x| x.id == e)
            .expect("source edge");
        self.u[(fi, ei)]
    }

    /// Applies the linear map to a vector of `X(source)`.
    pub fn apply(&self, x: &CorrVector) -> Result<CorrVector> {
        if x.graph() != &self.source {
            return Err(Error::InvalidInput(
                "vector does not belong to the source correspondence".to_string(),
            ));
        }
        let mut out = CorrVector::zero(&self.target);
        for (fi, f) in self.target.edges().iter().enumerate() {
            let mut acc = Complex64::default();
            for (ei, e) in self.source.edges().iter().enumerate() {
                acc += self.u[(fi, ei)] * x.value(&e.id);
            }
            out.values.insert(f.id.clone(), acc);
        }
        Ok(out)
    }
}

fn check_vertex_bijection(
    source: &Graph,
    target: &Graph,
    b: &BTreeMap<String, String>,
) -> Result<()> {
    if b.len() != source.vertices().len() || source.vertices().len() != target.vertices().len() {
        return Err(Error::InvalidInput(
            "vertex bijection must pair the two vertex sets".to_string(),
        ));
    }
    let mut hit = std::collections::BTreeSet::new();
    for v in source.vertices() {
        let img = b
            .get(v)
            .ok_or_else(|| Error::InvalidInput(format!("vertex bijection missing {v:?}")))?;
        if target.vertex_index(img).is_none() {
            return Err(Error::InvalidInput(format!(
                "vertex bijection sends {v:?} to unknown vertex {img:?}"
            )));
        }
        if !hit.insert(img.clone()) {
            return Err(Error::InvalidInput("vertex bijection is not injective".to_string()));
        }
    }
    Ok(())
}

/// Per-condition max violations for a CUE check. The defining conditions on
/// the spanning vectors and the algebraic characterization (unitarity plus
/// the support condition) are reported separately; they pass or fail
/// together on any input.
#[derive(Debug, Clone, Serialize)]
pub struct CueReport {
    pub unitarity: f64,
    pub support: f64,
    pub right_action: f64,
    pub left_action: f64,
    pub inner_product: f64,
    pub pass: bool,
}

impl CueReport {
    pub fn max_violation(&self) -> f64 {
        self.unitarity
            .max(self.support)
            .max(self.right_action)
            .max(self.left_action)
            .max(self.inner_product)
    }
}

/// Checks the three defining conditions on the spanning vectors `δ_e`, `δ_v`
/// (with the literal inverse of the coefficient matrix in the inner-product
/// condition) alongside unitarity and the support condition.
pub fn cue_verify(c: &Cue, tol: &Tolerance) -> Result<CueReport> {
    check_vertex_bijection(&c.source, &c.target, &c.vertex_bijection)?;
    let ne = c.source.edges().len();
    let nf = c.target.edges().len();

    let unitarity = if ne == nf {
        let gram = c.u.adjoint() * &c.u;
        max_abs_diff(&gram, &CMatrix::identity(ne, ne))
    } else {
        f64::INFINITY
    };

    let mut support: f64 = 0.0;
    for (fi, f) in c.target.edges().iter().enumerate() {
        for (ei, e) in c.source.edges().iter().enumerate() {
            let matched = f.src == *c.map_vertex(&e.src) && f.dst == *c.map_vertex(&e.dst);
            if !matched {
                support = support.max(c.u[(fi, ei)].norm());
            }
        }
    }

    // (i) U(δ_e·δ_v) = (Uδ_e)·α(δ_v) and (ii) U(φ(δ_v)δ_e) = φ(α(δ_v))Uδ_e.
    let mut right_violation: f64 = 0.0;
    let mut left_violation: f64 = 0.0;
    for e in c.source.edges() {
        let de = CorrVector::delta(&c.source, &e.id)?;
        let ude = c.apply(&de)?;
        for v in c.source.vertices() {
            let dv = VertexFunction::delta(&c.source, v)?;
            let adv = VertexFunction::delta(&c.target, c.map_vertex(v))?;

            let lhs = c.apply(&right_action(&de, &dv)?)?;
            let rhs = right_action(&ude, &adv)?;
            right_violation = right_violation.max(lhs.max_abs_diff(&rhs));

            let lhs = c.apply(&left_action(&dv, &de)?)?;
            let rhs = left_action(&adv, &ude)?;
            left_violation = left_violation.max(lhs.max_abs_diff(&rhs));
        }
    }

    // (iii) ⟨Uδ_e, δ_f⟩ = α(⟨δ_e, U⁻¹δ_f⟩), which forces U⁻¹ = U*.
    let inner_violation = match (ne == nf).then(|| c.u.clone().try_inverse()).flatten() {
        Some(u_inv) => {
            let mut acc: f64 = 0.0;
            for e in c.source.edges() {
                let de = CorrVector::delta(&c.source, &e.id)?;
                let ude = c.apply(&de)?;
                for (fi, f) in c.target.edges().iter().enumerate() {
                    let df = CorrVector::delta(&c.target, &f.id)?;
                    let lhs = inner_product(&ude, &df)?;
                    let mut uinv_df = CorrVector::zero(&c.source);
                    for (ei2, e2) in c.source.edges().iter().enumerate() {
                        uinv_df.values.insert(e2.id.clone(), u_inv[(ei2, fi)]);
                    }
                    let inner = inner_product(&de, &uinv_df)?;
                    let mut rhs = VertexFunction::zero(&c.target);
                    for v in c.source.vertices() {
                        let w = c.map_vertex(v).to_string();
                        rhs.values.insert(w, inner.value(v));
                    }
                    acc = acc.max(lhs.max_abs_diff(&rhs));
                }
            }
            acc
        }
        None => f64::INFINITY,
    };

    let eps = tol.eps();
    let pass = unitarity <= eps
        && support <= eps
        && right_violation <= eps
        && left_violation <= eps
        && inner_violation <= eps;
    Ok(CueReport {
        unitarity,
        support,
        right_action: right_violation,
        left_action: left_violation,
        inner_product: inner_violation,
        pass,
    })
}

/// Builds the CUE induced by a graph isomorphism `iso : F → E`: the
/// coefficient matrix is the permutation `U[f][e] = [ψ¹(f) = e]` and the
/// vertex bijection is `(ψ⁰)⁻¹`. The result is a CUE from `X(E)` to `X(F)`
/// passing [`cue_verify`] exactly.
pub fn cue_from_graph_iso(f: &Graph, e: &Graph, iso: &GraphIso) -> Result<Cue> {
    iso.verify(f, e)?;
    let nf = f.edges().len();
    let ne = e.edges().len();
    let mut u = CMatrix::zeros(nf, ne);
    for (fi, fe) in f.edges().iter().enumerate() {
        let image = &iso.edge_map[&fe.id];
        let ei = e
            .edges()
            .iter()
            .position(|x| &x.id == image)
            .expect("iso verified");
        u[(fi, ei)] = Complex64::new(1.0, 0.0);
    }
    let b: BTreeMap<String, String> = iso
        .vertex_map
        .iter()
        .map(|(fv, ev)| (ev.clone(), fv.clone()))
        .collect();
    Cue::new(e.clone(), f.clone(), u, b)
}

/// Composition `X(E) → X(F) → X(G)`: coefficient matrices multiply and the
/// vertex bijections compose.
pub fn cue_compose(c1: &Cue, c2: &Cue) -> Result<Cue> {
    if c1.target != c2.source {
        return Err(Error::InvalidInput(
            "composition requires the first target to equal the second source".to_string(),
        ));
    }
    let u = &c2.u * &c1.u;
    let b = c1
        .vertex_bijection
        .iter()
        .map(|(v, w)| (v.clone(), c2.vertex_bijection[w].clone()))
        .collect();
    Cue::new(c1.source.clone(), c2.target.clone(), u, b)
}

/// Inverse CUE: adjoint coefficient matrix and inverse vertex bijection.
pub fn cue_inverse(c: &Cue) -> Result<Cue> {
    if c.u.nrows() != c.u.ncols() {
        return Err(Error::InvalidInput(
            "only square coefficient matrices can be inverted".to_string(),
        ));
    }
    let b = c
        .vertex_bijection
        .iter()
        .map(|(v, w)| (w.clone(), v.clone()))
        .collect();
    Cue::new(c.target.clone(), c.source.clone(), c.u.adjoint(), b)
}
