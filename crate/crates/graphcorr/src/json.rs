//! JSON file formats. Complex scalars are two-element `[re, im]` arrays of
//! IEEE-754 doubles; matrices are arrays of row arrays. Vertices and edges
//! are referenced by name, matrix-unit indices are 0-based, and all maps are
//! emitted in sorted key order so identical data serializes identically.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::correspondence::Cue;
use crate::endomorphism::{BlockOperator, Endo};
use crate::equivalence::ConjugacyWitness;
use crate::error::{Error, Result};
use crate::graph::{DimVector, Graph};
use crate::numerics::CMatrix;
use crate::representation::{BlockLayout, ToeplitzRep};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput(format!("{what}: ragged matrix rows")));
    }
    if nrows == 0 || ncols == 0 {
        return Err(Error::InvalidInput(format!("{what}: empty matrix")));
    }
    let m = CMatrix::from_fn(nrows, ncols, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    crate::numerics::ensure_finite(&m)
        .map_err(|_| Error::InvalidInput(format!("{what}: non-finite entries")))?;
    Ok(m)
}

/// `rep.json`
#[derive(Serialize, Deserialize)]
pub struct RepDto {
    pub graph: Graph,
    pub vertex_order: Vec<String>,
    pub dims: DimVector,
    pub edges: BTreeMap<String, JsonMatrix>,
}

impl RepDto {
    pub fn from_model(rep: &ToeplitzRep) -> Self {
        RepDto {
            graph: rep.graph().clone(),
            vertex_order: rep.layout().vertices().to_vec(),
            dims: rep.dims_map(),
            edges: rep
                .edge_blocks()
                .iter()
                .map(|(id, m)| (id.clone(), matrix_to_json(m)))
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<ToeplitzRep> {
        let mut blocks = BTreeMap::new();
        for (id, rows) in &self.edges {
            blocks.insert(id.clone(), matrix_from_json(rows, &format!("edges.{id}"))?);
        }
        ToeplitzRep::new(self.graph, self.vertex_order, &self.dims, blocks)
    }
}

/// `cue.json`
#[derive(Serialize, Deserialize)]
pub struct CueDto {
    pub source_graph: Graph,
    pub target_graph: Graph,
    pub vertex_bijection: BTreeMap<String, String>,
    #[serde(rename = "U")]
    pub u: JsonMatrix,
}

impl CueDto {
    pub fn from_model(cue: &Cue) -> Self {
        CueDto {
            source_graph: cue.source().clone(),
            target_graph: cue.target().clone(),
            vertex_bijection: cue.vertex_bijection().clone(),
            u: matrix_to_json(cue.matrix()),
        }
    }

    pub fn into_model(self) -> Result<Cue> {
        // An edgeless CUE carries a 0x0 matrix, which the generic matrix
        // parser rejects; build it directly.
        let ne = self.source_graph.edges().len();
        let nf = self.target_graph.edges().len();
        let u = if self.u.is_empty() && ne == 0 && nf == 0 {
            CMatrix::zeros(0, 0)
        } else {
            matrix_from_json(&self.u, "U")?
        };
        Cue::new(self.source_graph, self.target_graph, u, self.vertex_bijection)
    }
}

/// One matrix-unit image in `endo.json`.
#[derive(Serialize, Deserialize)]
pub struct EndoImageDto {
    pub block: String,
    pub p: usize,
    pub q: usize,
    pub value: BTreeMap<String, JsonMatrix>,
}

/// `endo.json`
#[derive(Serialize, Deserialize)]
pub struct EndoDto {
    pub vertex_order: Vec<String>,
    pub dims: DimVector,
    pub images: Vec<EndoImageDto>,
}

impl EndoDto {
    pub fn from_model(endo: &Endo) -> Self {
        let layout = endo.layout();
        let mut images = Vec::new();
        for (i, p, q) in layout.matrix_units() {
            let img = endo.image(i, p, q);
            let value = layout
                .vertices()
                .iter()
                .enumerate()
                .map(|(bi, v)| (v.clone(), matrix_to_json(img.block(bi))))
                .collect();
            images.push(EndoImageDto { block: layout.vertices()[i].clone(), p, q, value });
        }
        EndoDto {
            vertex_order: layout.vertices().to_vec(),
            dims: layout.dims_map(),
            images,
        }
    }

    pub fn into_model(self) -> Result<Endo> {
        let layout = BlockLayout::new(self.vertex_order, &self.dims)?;
        let mut tables: Vec<Vec<Option<BlockOperator>>> = (0..layout.block_count())
            .map(|i| vec![None; layout.dim(i) * layout.dim(i)])
            .collect();
        for entry in &self.images {
            let i = layout.position(&entry.block).ok_or_else(|| {
                Error::InvalidInput(format!("images: unknown block {:?}", entry.block))
            })?;
            let d = layout.dim(i);
            if entry.p >= d || entry.q >= d {
                return Err(Error::InvalidInput(format!(
                    "images: index ({}, {}) out of range for block {:?}",
                    entry.p, entry.q, entry.block
                )));
            }
            let mut blocks = Vec::with_capacity(layout.block_count());
            for (bi, v) in layout.vertices().iter().enumerate() {
                let rows = entry.value.get(v).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "images[{}, {}, {}].value: missing block {v:?}",
                        entry.block, entry.p, entry.q
                    ))
                })?;
                let m = matrix_from_json(
                    rows,
                    &format!("images[{},{},{}].value.{v}", entry.block, entry.p, entry.q),
                )?;
                let d = layout.dim(bi);
                if m.shape() != (d, d) {
                    return Err(Error::InvalidInput(format!(
                        "images[{},{},{}].value.{v}: expected a {d}x{d} block",
                        entry.block, entry.p, entry.q
                    )));
                }
                blocks.push(m);
            }
            let slot = &mut tables[i][entry.p * d + entry.q];
            if slot.is_some() {
                return Err(Error::InvalidInput(format!(
                    "images: duplicate entry for ({}, {}, {})",
                    entry.block, entry.p, entry.q
                )));
            }
            *slot = Some(BlockOperator::new(layout.clone(), blocks)?);
        }
        let mut images = Vec::with_capacity(layout.block_count());
        for (i, table) in tables.into_iter().enumerate() {
            let mut complete = Vec::with_capacity(table.len());
            for (k, slot) in table.into_iter().enumerate() {
                let d = layout.dim(i);
                complete.push(slot.ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "images: missing entry for ({}, {}, {})",
                        layout.vertices()[i],
                        k / d,
                        k % d
                    ))
                })?);
            }
            images.push(complete);
        }
        Endo::new(layout, images)
    }
}

/// `witness.json`
#[derive(Serialize, Deserialize)]
pub struct WitnessDto {
    #[serde(rename = "V")]
    pub v: JsonMatrix,
    pub cue: CueDto,
    pub residual: f64,
}

impl WitnessDto {
    pub fn from_model(w: &ConjugacyWitness) -> Self {
        WitnessDto {
            v: matrix_to_json(&w.v),
            cue: CueDto::from_model(&w.cue),
            residual: w.residual,
        }
    }
}

pub fn to_pretty_string<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable");
    out.push('\n');
    out
}

/// Parses JSON with a diagnostic naming the JSON path on failure.
pub fn from_str<T: DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(s);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        Error::InvalidInput(format!("{what}: at JSON path {}: {}", e.path(), e.inner()))
    })
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    from_str(&text, &path.display().to_string())
}

pub fn write_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                Error::InvalidInput(format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, to_pretty_string(value))
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    read_file(path)
}

pub fn read_dims(path: &Path) -> Result<DimVector> {
    read_file(path)
}

pub fn read_rep(path: &Path) -> Result<ToeplitzRep> {
    read_file::<RepDto>(path)?.into_model()
}

pub fn read_cue(path: &Path) -> Result<Cue> {
    read_file::<CueDto>(path)?.into_model()
}

pub fn read_endo(path: &Path) -> Result<Endo> {
    read_file::<EndoDto>(path)?.into_model()
}

/// Schema documentation printed by the CLI `--schema` flag.
pub const SCHEMAS: &str = r#"File formats (all JSON; complex scalars are [re, im] pairs of doubles,
matrices are arrays of row arrays; vertices and edges are referenced by
name; matrix-unit indices p, q are 0-based).

graph.json
  {"vertices": ["v1", ...],
   "edges": [{"id": "e1", "src": "v1", "dst": "v2"}, ...]}
  src is the source s(e), dst the range r(e).

dims.json
  {"v1": 1, "v2": 2, ...}        block dimension per vertex (>= 1)

rep.json
  {"graph": <graph.json>,
   "vertex_order": ["v1", ...],  block layout order
   "dims": <dims.json>,
   "edges": {"e1": <matrix>, ...}}
  The block for edge e has shape d_{r(e)} x d_{s(e)}.

cue.json
  {"source_graph": <graph.json>,
   "target_graph": <graph.json>,
   "vertex_bijection": {"v": "w", ...},
   "U": <matrix>}
  U rows are indexed by target edge order, columns by source edge order.

endo.json
  {"vertex_order": ["v1", ...],
   "dims": <dims.json>,
   "images": [{"block": "v1", "p": 0, "q": 0,
               "value": {"v1": <matrix>, "v2": <matrix>, ...}}, ...]}
  One entry per matrix unit E^{(block)}_{pq}; value is its image as a
  block-diagonal operator, one square block per vertex.

witness.json
  {"V": <matrix>, "cue": <cue.json>, "residual": <float>}

factor report.json
  {"multiplicities": [[n_ij]],    rows = source block, cols = target block
   "residual": <float>,
   "unital": <bool>,
   "coisometric": {"v": <bool>, ...}}
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::endomorphism::ad_endo;
    use crate::harness::fixtures;

    #[test]
    fn rep_round_trip_is_exact() {
        let rep = fixtures::rep_g3();
        let text = to_pretty_string(&RepDto::from_model(&rep));
        let back = from_str::<RepDto>(&text, "rep").unwrap().into_model().unwrap();
        assert_eq!(back, rep);
    }

    #[test]
    fn endo_round_trip_is_exact() {
        let endo = ad_endo(&fixtures::rep_g4());
        let text = to_pretty_string(&EndoDto::from_model(&endo));
        let back = from_str::<EndoDto>(&text, "endo").unwrap().into_model().unwrap();
        assert_eq!(back, endo);
    }

    #[test]
    fn cue_round_trip_is_exact() {
        let cue = crate::harness::random_cue(&fixtures::g3(), 12);
        let text = to_pretty_string(&CueDto::from_model(&cue));
        let back = from_str::<CueDto>(&text, "cue").unwrap().into_model().unwrap();
        assert_eq!(&back, &cue);

        // Edgeless graphs carry a 0x0 coefficient matrix.
        let cue = crate::harness::random_cue(&fixtures::g1(), 1);
        let text = to_pretty_string(&CueDto::from_model(&cue));
        let back = from_str::<CueDto>(&text, "cue").unwrap().into_model().unwrap();
        assert_eq!(&back, &cue);
    }

    #[test]
    fn serialization_is_deterministic() {
        let rep = fixtures::rep_g3();
        let a = to_pretty_string(&RepDto::from_model(&rep));
        let b = to_pretty_string(&RepDto::from_model(&rep));
        assert_eq!(a, b);
    }

    #[test]
    fn parse_errors_name_the_json_path() {
        let bad = r#"{"vertices": ["v"], "edges": [{"id": "e", "src": 3, "dst": "v"}]}"#;
        let err = from_str::<Graph>(bad, "graph").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("edges[0].src"), "{msg}");
    }

    #[test]
    fn graph_validation_applies_on_parse() {
        let bad = r#"{"vertices": ["v", "v"], "edges": []}"#;
        assert!(from_str::<Graph>(bad, "graph").is_err());
    }

    #[test]
    fn non_finite_entries_are_rejected() {
        let rep = fixtures::rep_g4();
        let mut dto = RepDto::from_model(&rep);
        dto.edges.get_mut("e").unwrap()[0][0] = [f64::NAN, 0.0];
        let text = serde_json::to_string(&dto);
        // serde_json refuses to emit NaN; construct the matrix directly.
        assert!(text.is_err() || matrix_from_json(&dto.edges["e"], "e").is_err());
    }
}
