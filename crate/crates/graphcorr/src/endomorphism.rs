//! Elements of the block algebra `W = ⊕_v P_v B(H) P_v`, the endomorphism
//! `Ad_τ(w) = Σ_e S_e w S_e*` induced by a representation, verification of
//! *-endomorphism data given by matrix-unit images, and the intertwiner space
//! `{T : Ad_τ(w) T = T w for all w ∈ W}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    ensure_finite, kron, max_abs, max_abs_diff, nullspace_basis, unvec_row_major, CMatrix,
    Tolerance,
};
use crate::representation::{BlockLayout, ToeplitzRep};

/// Index of a matrix unit of the block algebra: `(block, p, q)`.
pub type UnitIndex = (usize, usize, usize);

/// Block-diagonal operator: one square matrix per vertex block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    layout: BlockLayout,
    blocks: Vec<CMatrix>,
}

impl BlockOperator {
    pub fn new(layout: BlockLayout, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != layout.block_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} blocks, got {}",
                layout.block_count(),
                blocks.len()
            )));
        }
        for (i, b) in blocks.iter().enumerate() {
            ensure_finite(b)?;
            let d = layout.dim(i);
            if b.shape() != (d, d) {
                return Err(Error::InvalidInput(format!(
                    "block {} must be {}x{}, got {}x{}",
                    layout.vertices()[i],
                    d,
                    d,
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(BlockOperator { layout, blocks })
    }

    pub fn zero(layout: &BlockLayout) -> Self {
        let blocks = (0..layout.block_count())
            .map(|i| CMatrix::zeros(layout.dim(i), layout.dim(i)))
            .collect();
        BlockOperator { layout: layout.clone(), blocks }
    }

    pub fn identity(layout: &BlockLayout) -> Self {
        let blocks = (0..layout.block_count())
            .map(|i| CMatrix::identity(layout.dim(i), layout.dim(i)))
            .collect();
        BlockOperator { layout: layout.clone(), blocks }
    }

    /// The matrix unit `E^{(block)}_{pq}` of `W`.
    pub fn matrix_unit(layout: &BlockLayout, block: usize, p: usize, q: usize) -> Result<Self> {
        let d = layout.dim(block);
        if p >= d || q >= d {
            return Err(Error::InvalidInput(format!(
                "matrix unit index ({p},{q}) out of range for a {d}-dimensional block"
            )));
        }
        let mut out = Self::zero(layout);
        out.blocks[block][(p, q)] = Complex64::new(1.0, 0.0);
        Ok(out)
    }

    /// The central projection `P_v` for block index `idx`.
    pub fn block_projection(layout: &BlockLayout, idx: usize) -> Self {
        let mut out = Self::zero(layout);
        out.blocks[idx] = CMatrix::identity(layout.dim(idx), layout.dim(idx));
        out
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn block(&self, idx: usize) -> &CMatrix {
        &self.blocks[idx]
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn to_full(&self) -> CMatrix {
        let n = self.layout.total_dim();
        let mut m = CMatrix::zeros(n, n);
        for (i, b) in self.blocks.iter().enumerate() {
            let off = self.layout.offset(i);
            let d = self.layout.dim(i);
            m.view_mut((off, off), (d, d)).copy_from(b);
        }
        m
    }

    /// Extracts the diagonal blocks of a full matrix; entries outside the
    /// blocks are discarded (callers pass operators known to lie in `W`).
    pub fn from_full(layout: &BlockLayout, full: &CMatrix) -> Result<Self> {
        if full.shape() != (layout.total_dim(), layout.total_dim()) {
            return Err(Error::InvalidInput(format!(
                "expected a {0}x{0} matrix for this layout",
                layout.total_dim()
            )));
        }
        let blocks = (0..layout.block_count())
            .map(|i| {
                let off = layout.offset(i);
                let d = layout.dim(i);
                CMatrix::from(full.view((off, off), (d, d)))
            })
            .collect();
        Ok(BlockOperator { layout: layout.clone(), blocks })
    }

    /// Relabels the blocks onto a layout with the same partition of the
    /// underlying space (same offsets and sizes, possibly different names).
    pub fn refit(&self, layout: &BlockLayout) -> Result<Self> {
        if self.layout.partition() != layout.partition() {
            return Err(Error::InvalidInput(
                "layouts decompose the space differently".to_string(),
            ));
        }
        Ok(BlockOperator { layout: layout.clone(), blocks: self.blocks.clone() })
    }

    pub fn adjoint(&self) -> Self {
        BlockOperator {
            layout: self.layout.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        BlockOperator {
            layout: self.layout.clone(),
            blocks: self.blocks.iter().map(|b| b * z).collect(),
        }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::InvalidInput("block layouts differ".to_string()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(BlockOperator {
            layout: self.layout.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(BlockOperator {
            layout: self.layout.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(max_abs).fold(0.0, f64::max)
    }
}

/// A linear map `W → W` specified by its values on every matrix unit.
/// Linearity is implicit; whether the data is actually a *-endomorphism is
/// the subject of [`endo_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct Endo {
    layout: BlockLayout,
    // images[block] holds d*d operators indexed by p*d + q.
    images: Vec<Vec<BlockOperator>>,
}

impl Endo {
    pub fn new(layout: BlockLayout, images: Vec<Vec<BlockOperator>>) -> Result<Self> {
        if images.len() != layout.block_count() {
            return Err(Error::InvalidInput(format!(
                "expected image tables for {} blocks, got {}",
                layout.block_count(),
                images.len()
            )));
        }
        for (i, table) in images.iter().enumerate() {
            let d = layout.dim(i);
            if table.len() != d * d {
                return Err(Error::InvalidInput(format!(
                    "block {} needs {} matrix-unit images, got {}",
                    layout.vertices()[i],
                    d * d,
                    table.len()
                )));
            }
            for img in table {
                if img.layout() != &layout {
                    return Err(Error::InvalidInput(
                        "matrix-unit image has a different layout".to_string(),
                    ));
                }
            }
        }
        Ok(Endo { layout, images })
    }

    pub fn zero(layout: &BlockLayout) -> Self {
        let images = (0..layout.block_count())
            .map(|i| {
                let d = layout.dim(i);
                vec![BlockOperator::zero(layout); d * d]
            })
            .collect();
        Endo { layout: layout.clone(), images }
    }

    pub fn identity(layout: &BlockLayout) -> Self {
        let images = (0..layout.block_count())
            .map(|i| {
                let d = layout.dim(i);
                (0..d * d)
                    .map(|k| {
                        BlockOperator::matrix_unit(layout, i, k / d, k % d).expect("in range")
                    })
                    .collect()
            })
            .collect();
        Endo { layout: layout.clone(), images }
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Image of the matrix unit `E^{(block)}_{pq}`.
    pub fn image(&self, block: usize, p: usize, q: usize) -> &BlockOperator {
        let d = self.layout.dim(block);
        &self.images[block][p * d + q]
    }

    /// Applies the linear extension to an arbitrary element of `W`.
    pub fn apply(&self, w: &BlockOperator) -> Result<BlockOperator> {
        if w.layout() != &self.layout {
            return Err(Error::InvalidInput("operator layout differs".to_string()));
        }
        let mut acc = BlockOperator::zero(&self.layout);
        for (i, p, q) in self.layout.matrix_units() {
            let coeff = w.block(i)[(p, q)];
            if coeff != Complex64::default() {
                acc = acc.add(&self.image(i, p, q).scale(coeff))?;
            }
        }
        Ok(acc)
    }

    /// The image of the identity, `α(I) = Σ_i Σ_p α(E^{(i)}_{pp})`.
    pub fn image_of_identity(&self) -> BlockOperator {
        let mut acc = BlockOperator::zero(&self.layout);
        for (i, p, q) in self.layout.matrix_units() {
            if p == q {
                acc = acc.add(self.image(i, p, q)).expect("same layout");
            }
        }
        acc
    }
}

/// `Ad_τ(w) = Σ_{e ∈ E¹} S_e w S_e*`, computed blockwise: the edge `e`
/// contributes `B_e · w_{s(e)} · B_e*` to the `r(e)` block, so the result
/// visibly commutes with every `P_v`.
pub fn ad_apply(rep: &ToeplitzRep, w: &BlockOperator) -> Result<BlockOperator> {
    if rep.layout() != w.layout() {
        return Err(Error::InvalidInput(
            "operator layout does not match the representation".to_string(),
        ));
    }
    let layout = rep.layout();
    let mut acc = BlockOperator::zero(layout);
    for e in rep.graph().edges() {
        let s_idx = layout.position(&e.src).expect("validated");
        let r_idx = layout.position(&e.dst).expect("validated");
        let block = rep.edge_block(&e.id);
        let contribution = block * w.block(s_idx) * block.adjoint();
        acc.blocks[r_idx] += contribution;
    }
    Ok(acc)
}

/// Packages `Ad_τ` as matrix-unit images. The output passes [`endo_verify`].
pub fn ad_endo(rep: &ToeplitzRep) -> Endo {
    let layout = rep.layout().clone();
    let images = (0..layout.block_count())
        .map(|i| {
            let d = layout.dim(i);
            (0..d * d)
                .map(|k| {
                    let unit =
                        BlockOperator::matrix_unit(&layout, i, k / d, k % d).expect("in range");
                    ad_apply(rep, &unit).expect("same layout")
                })
                .collect()
        })
        .collect();
    Endo { layout, images }
}

/// Violations of the *-endomorphism axioms on matrix units.
#[derive(Debug, Clone, Serialize)]
pub struct EndoReport {
    pub multiplicativity: f64,
    pub adjoint: f64,
    /// Matrix units achieving the worst multiplicativity violation, as
    /// `(block, p, q)` triples, when the check fails.
    pub worst_pair: Option<(UnitIndex, UnitIndex)>,
    pub pass: bool,
}

impl EndoReport {
    pub fn max_violation(&self) -> f64 {
        self.multiplicativity.max(self.adjoint)
    }
}

/// Checks, on matrix units, that the images multiply like the units
/// (`α(E_{pq}^{(i)})·α(E_{rs}^{(i')}) = [i=i'][q=r]·α(E_{ps}^{(i)})`) and that
/// adjoints are respected (`α(E_{pq})* = α(E_{qp})`).
pub fn endo_verify(a: &Endo, tol: &Tolerance) -> EndoReport {
    let layout = a.layout();
    let units: Vec<UnitIndex> = layout.matrix_units().collect();

    let mut multiplicativity: f64 = 0.0;
    let mut worst_pair = None;
    for &(i, p, q) in &units {
        for &(i2, r, s) in &units {
            let prod = a
                .image(i, p, q)
                .mul(a.image(i2, r, s))
                .expect("same layout");
            let expected = if i == i2 && q == r {
                a.image(i, p, s).clone()
            } else {
                BlockOperator::zero(layout)
            };
            let violation = prod.max_abs_diff(&expected);
            if violation > multiplicativity {
                multiplicativity = violation;
                worst_pair = Some(((i, p, q), (i2, r, s)));
            }
        }
    }

    let mut adjoint: f64 = 0.0;
    for &(i, p, q) in &units {
        let lhs = a.image(i, p, q).adjoint();
        adjoint = adjoint.max(lhs.max_abs_diff(a.image(i, q, p)));
    }

    let pass = multiplicativity <= tol.eps() && adjoint <= tol.eps();
    EndoReport {
        multiplicativity,
        adjoint,
        worst_pair: if pass { None } else { worst_pair },
        pass,
    }
}

/// Orthonormal (Frobenius) basis of the intertwiner space
/// `{T : Ad_τ(u) T = T u for every matrix unit u of W}`.
///
/// The condition for one unit `u` is linear in `T`; with row-major
/// vectorization it reads `(Ad_τ(u) ⊗ I − I ⊗ uᵀ)·vec(T) = 0`. Stacking the
/// constraints for every matrix unit (spanning suffices by linearity) and
/// taking a nullspace basis gives the result.
pub fn intertwiner_basis(rep: &ToeplitzRep, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    let layout = rep.layout();
    let n = layout.total_dim();
    let units: Vec<UnitIndex> = layout.matrix_units().collect();
    let eye = CMatrix::identity(n, n);

    let mut stacked = CMatrix::zeros(units.len() * n * n, n * n);
    for (row_block, &(i, p, q)) in units.iter().enumerate() {
        let unit = BlockOperator::matrix_unit(layout, i, p, q)?;
        let lhs = ad_apply(rep, &unit)?.to_full();
        let constraint = kron(&lhs, &eye) - kron(&eye, &unit.to_full().transpose());
        stacked
            .view_mut((row_block * n * n, 0), (n * n, n * n))
            .copy_from(&constraint);
    }

    // The generators have unit norm, so a stack below tolerance is exactly
    // zero up to roundoff (e.g. a 1-dimensional loop, where Ad is the
    // identity on scalars): every operator intertwines. A relative
    // singular-value threshold would misread that roundoff as signal.
    if max_abs(&stacked) <= tol.eps() {
        return Ok((0..n * n)
            .map(|k| {
                let mut basis = CMatrix::zeros(n, n);
                basis[(k / n, k % n)] = Complex64::new(1.0, 0.0);
                basis
            })
            .collect());
    }

    let basis = nullspace_basis(&stacked, tol)?;
    Ok(basis
        .into_iter()
        .map(|v| unvec_row_major(&v, n, n))
        .collect())
}
