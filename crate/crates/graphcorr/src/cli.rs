//! Command-line front door: subcommands over the JSON file formats, uniform
//! `--tol`, machine-readable `--json` reports, and exit codes
//! 0 = property holds / artifact produced, 1 = well-formed input but the
//! property fails, 2 = malformed input or internal error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::endomorphism::ad_endo;
use crate::equivalence::{conjugacy_witness, recover_cue, BlockAutomorphism};
use crate::error::{Error, Result};
use crate::factorization::factor_endo;
use crate::graph::find_isomorphism;
use crate::harness::{random_cue, random_instance};
use crate::json::{self, CueDto, EndoDto, RepDto, WitnessDto};
use crate::numerics::{max_abs_diff, Tolerance};
use crate::representation::{
    coisometric_check, pullback, random_rep, verify_toeplitz, BlockLayout,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Violation,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violation => 1,
            Status::Error => 2,
        }
    }
}

/// Machine-readable result of one invocation. Identical invocations produce
/// byte-identical serializations.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub details: serde_json::Value,
}

#[derive(Parser)]
#[command(
    name = "graphcorr",
    about = "Graph correspondences, Toeplitz representations, and block endomorphisms",
    disable_help_subcommand = true
)]
struct Cli {
    /// Numerical tolerance used by every check.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Emit a machine-readable JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Print the JSON file schemas and exit.
    #[arg(long)]
    schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Toeplitz representation identities of rep.json.
    Verify { rep: PathBuf },
    /// Draw a random representation of a graph with given block dimensions.
    GenRep {
        graph: PathBuf,
        #[arg(long)]
        dims: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Package the induced endomorphism of a representation as endo.json.
    Ad {
        rep: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Factor an endomorphism into a graph plus representation.
    Factor {
        endo: PathBuf,
        /// Output directory for graph.json, rep.json, report.json.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Recover the coherent unitary equivalence relating two representations
    /// with the same induced endomorphism.
    Equiv {
        rep1: PathBuf,
        rep2: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Produce a unitary + CUE witnessing conjugacy of the induced
    /// endomorphisms via a supplied automorphism.
    Conjugacy {
        rep1: PathBuf,
        rep2: PathBuf,
        #[arg(long)]
        gamma: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Check the coisometric (Cuntz-Pimsner) condition at every vertex.
    Coisometric { rep: PathBuf },
    /// Pull a representation back along a CUE.
    CueApply {
        cue: PathBuf,
        rep: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Search for a graph isomorphism.
    GraphIso { g1: PathBuf, g2: PathBuf },
    /// Draw a random (graph, dims, representation) instance into a directory.
    GenInstance {
        #[arg(long, default_value_t = 4)]
        max_vertices: usize,
        #[arg(long, default_value_t = 6)]
        max_edges: usize,
        #[arg(long, default_value_t = 6)]
        max_dim: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Draw a random CUE from a graph to itself.
    GenCue {
        graph: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Draw a random block automorphism for the given dimensions
    /// (blocks ordered by vertex name).
    GenAuto {
        dims: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
}

/// Entry point: parses argv, runs, prints, and returns the exit code.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with success; anything else
            // is a usage error (exit 2 per the documented convention).
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { 0 } else { 2 };
        }
    };

    if cli.schema {
        print!("{}", json::SCHEMAS);
        return 0;
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (try --help or --schema)");
        return 2;
    };

    let report = run(command, cli.tol);
    if cli.json {
        print!("{}", json::to_pretty_string(&report));
    } else {
        println!("command: {}", report.command);
        println!("status: {:?}", report.status);
        println!("tol: {:e}", report.tol);
        if let Some(seed) = report.seed {
            println!("seed: {seed}");
        }
        println!(
            "details: {}",
            serde_json::to_string_pretty(&report.details).expect("serializable")
        );
    }
    report.status.exit_code()
}

fn run(command: Command, tol_value: f64) -> Report {
    let name = command_name(&command);
    let seed = command_seed(&command);
    let tol = match Tolerance::new(tol_value) {
        Ok(t) => t,
        Err(e) => {
            return Report {
                command: name,
                status: Status::Error,
                tol: tol_value,
                seed,
                details: json!({ "error": e.to_string() }),
            }
        }
    };
    let (status, details) = match execute(&command, &tol) {
        Ok((status, details)) => (status, details),
        Err(e) => {
            let status = if e.is_input_error() { Status::Error } else { Status::Violation };
            (status, json!({ "error": e.to_string(), "kind": error_kind(&e) }))
        }
    };
    Report { command: name, status, tol: tol_value, seed, details }
}

fn command_name(command: &Command) -> String {
    match command {
        Command::Verify { .. } => "verify",
        Command::GenRep { .. } => "gen-rep",
        Command::Ad { .. } => "ad",
        Command::Factor { .. } => "factor",
        Command::Equiv { .. } => "equiv",
        Command::Conjugacy { .. } => "conjugacy",
        Command::Coisometric { .. } => "coisometric",
        Command::CueApply { .. } => "cue-apply",
        Command::GraphIso { .. } => "graph-iso",
        Command::GenInstance { .. } => "gen-instance",
        Command::GenCue { .. } => "gen-cue",
        Command::GenAuto { .. } => "gen-auto",
    }
    .to_string()
}

fn command_seed(command: &Command) -> Option<u64> {
    match command {
        Command::GenRep { seed, .. }
        | Command::GenInstance { seed, .. }
        | Command::GenCue { seed, .. }
        | Command::GenAuto { seed, .. } => Some(*seed),
        _ => None,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "InvalidInput",
        Error::NotAnEndomorphism(_) => "NotAnEndomorphism",
        Error::InconsistentMultiplicity { .. } => "InconsistentMultiplicity",
        Error::ReconstructionFailure { .. } => "ReconstructionFailure",
        Error::VertexMismatch(_) => "VertexMismatch",
        Error::AdMismatch(_) => "AdMismatch",
        Error::NotUnitary(_) => "NotUnitary",
        Error::NotConjugate(_) => "NotConjugate",
        Error::NotAutomorphism(_) => "NotAutomorphism",
        Error::BoundsInfeasible(_) => "BoundsInfeasible",
    }
}

fn execute(command: &Command, tol: &Tolerance) -> Result<(Status, serde_json::Value)> {
    match command {
        Command::Verify { rep } => {
            let rep = json::read_rep(rep)?;
            let report = verify_toeplitz(&rep, tol);
            let status = if report.pass { Status::Ok } else { Status::Violation };
            Ok((status, serde_json::to_value(&report).expect("serializable")))
        }
        Command::GenRep { graph, dims, seed, out } => {
            let graph = json::read_graph(graph)?;
            let dims = json::read_dims(dims)?;
            let rep = random_rep(&graph, &dims, *seed)?;
            json::write_file(out, &RepDto::from_model(&rep))?;
            Ok((Status::Ok, json!({ "written": path_str(out) })))
        }
        Command::Ad { rep, out } => {
            let rep = json::read_rep(rep)?;
            let endo = ad_endo(&rep);
            json::write_file(out, &EndoDto::from_model(&endo))?;
            Ok((Status::Ok, json!({ "written": path_str(out) })))
        }
        Command::Factor { endo, out } => {
            let endo = json::read_endo(endo)?;
            let result = factor_endo(&endo, tol)?;
            let graph_path = out.join("graph.json");
            let rep_path = out.join("rep.json");
            let report_path = out.join("report.json");
            json::write_file(&graph_path, &result.graph)?;
            json::write_file(&rep_path, &RepDto::from_model(&result.rep))?;
            json::write_file(&report_path, &result.report())?;
            let mut details = serde_json::to_value(result.report()).expect("serializable");
            details["written"] = json!([
                path_str(&graph_path),
                path_str(&rep_path),
                path_str(&report_path)
            ]);
            Ok((Status::Ok, details))
        }
        Command::Equiv { rep1, rep2, out } => {
            let t1 = json::read_rep(rep1)?;
            let t2 = json::read_rep(rep2)?;
            let cue = recover_cue(&t1, &t2, tol)?;
            json::write_file(out, &CueDto::from_model(&cue))?;
            let verification = crate::correspondence::cue_verify(&cue, tol)?;
            let pulled = pullback(&t2, &cue)?;
            let mut residual: f64 = 0.0;
            for e in t1.graph().edges() {
                residual = residual
                    .max(max_abs_diff(pulled.edge_block(&e.id), t1.edge_block(&e.id)));
            }
            Ok((
                Status::Ok,
                json!({
                    "written": path_str(out),
                    "cue_verify": serde_json::to_value(&verification).expect("serializable"),
                    "pullback_residual": residual,
                }),
            ))
        }
        Command::Conjugacy { rep1, rep2, gamma, out } => {
            let t1 = json::read_rep(rep1)?;
            let t2 = json::read_rep(rep2)?;
            let gamma = BlockAutomorphism::from_endo(json::read_endo(gamma)?, tol)?;
            let witness = conjugacy_witness(&t1, &t2, &gamma, tol)?;
            json::write_file(out, &WitnessDto::from_model(&witness))?;
            Ok((
                Status::Ok,
                json!({ "written": path_str(out), "residual": witness.residual }),
            ))
        }
        Command::Coisometric { rep } => {
            let rep = json::read_rep(rep)?;
            let report = coisometric_check(&rep, tol);
            let status = if report.all_coisometric { Status::Ok } else { Status::Violation };
            Ok((status, serde_json::to_value(&report).expect("serializable")))
        }
        Command::CueApply { cue, rep, out } => {
            let cue = json::read_cue(cue)?;
            let rep = json::read_rep(rep)?;
            let verification = crate::correspondence::cue_verify(&cue, tol)?;
            if !verification.pass {
                return Ok((
                    Status::Violation,
                    json!({
                        "error": "the CUE fails verification",
                        "cue_verify": serde_json::to_value(&verification).expect("serializable"),
                    }),
                ));
            }
            let pulled = pullback(&rep, &cue)?;
            json::write_file(out, &RepDto::from_model(&pulled))?;
            Ok((Status::Ok, json!({ "written": path_str(out) })))
        }
        Command::GraphIso { g1, g2 } => {
            let e = json::read_graph(g1)?;
            let f = json::read_graph(g2)?;
            match find_isomorphism(&e, &f) {
                Some(iso) => Ok((
                    Status::Ok,
                    json!({
                        "isomorphic": true,
                        "vertex_map": iso.vertex_map,
                        "edge_map": iso.edge_map,
                    }),
                )),
                None => Ok((Status::Violation, json!({ "isomorphic": false }))),
            }
        }
        Command::GenInstance { max_vertices, max_edges, max_dim, seed, out } => {
            let (graph, dims, rep) = random_instance(*max_vertices, *max_edges, *max_dim, *seed)?;
            let graph_path = out.join("graph.json");
            let dims_path = out.join("dims.json");
            let rep_path = out.join("rep.json");
            json::write_file(&graph_path, &graph)?;
            json::write_file(&dims_path, &dims)?;
            json::write_file(&rep_path, &RepDto::from_model(&rep))?;
            Ok((
                Status::Ok,
                json!({
                    "written": [path_str(&graph_path), path_str(&dims_path), path_str(&rep_path)],
                    "vertices": graph.vertices().len(),
                    "edges": graph.edges().len(),
                    "total_dim": rep.total_dim(),
                }),
            ))
        }
        Command::GenCue { graph, seed, out } => {
            let graph = json::read_graph(graph)?;
            let cue = random_cue(&graph, *seed);
            json::write_file(out, &CueDto::from_model(&cue))?;
            Ok((Status::Ok, json!({ "written": path_str(out) })))
        }
        Command::GenAuto { dims, seed, out } => {
            let dims = json::read_dims(dims)?;
            let order: Vec<String> = dims.keys().cloned().collect();
            let layout = BlockLayout::new(order, &dims)?;
            let auto = crate::harness::random_automorphism(&layout, *seed)?;
            json::write_file(out, &EndoDto::from_model(auto.endo()))?;
            Ok((Status::Ok, json!({ "written": path_str(out) })))
        }
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}
