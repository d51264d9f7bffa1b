//! Command-line surface of the `corrwit` binary.
//!
//! Exit codes: 0 on success, 1 when a construction fails for mathematical
//! reasons, 2 on I/O, parse or validation errors. `CORRWIT_TOL` overrides the
//! default detector tolerance; `--tol` overrides both.

pub mod files;
pub mod records;
pub mod report;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::detect::{classify, tolerance_from_env};
use crate::error::{Error, Result};
use crate::linalg::BipartiteDims;
use crate::povm::{analyze, build_minimal_cq_povm, DEFAULT_EPSILON};
use crate::states::{random_direction, Direction, Seed};
use crate::witness::{
    build_entangling_perturbation, build_non_cq_or_qc_perturbation_with_tol, build_noncc_perturbation_with_tol,
    build_noncq_perturbation_with_tol, flat_direction_counterexample, ClassCrossingCertificate,
};
use files::{write_json, MatrixFile};
use records::{CrossingRecord, EntanglementRecord, FlatRecord};

#[derive(Debug, Parser)]
#[command(name = "corrwit", version, about = "Correlation-class detectors and constructive witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify a bipartite state (NPT/PPT, CQ, QC, CC).
    Classify {
        state: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Build a boundary-crossing certificate.
    Witness {
        #[arg(value_enum)]
        kind: WitnessKind,
        /// Local dimension for random directions and the flat counterexample.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Seed of the random direction.
        #[arg(long, default_value_t = 0, conflicts_with = "delta")]
        seed: u64,
        /// Direction file to use instead of a random direction.
        #[arg(long)]
        delta: Option<PathBuf>,
        /// Where to write the certificate.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Analyze or build measurements.
    Povm {
        #[command(subcommand)]
        action: PovmCommand,
    },
    /// Random-direction summary of every property.
    Report {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the full run report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PovmCommand {
    /// Kernel-space dimensions, completeness and CQ decidability.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Minimal measurement that decides CQ membership.
    BuildCq {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WitnessKind {
    Entangle,
    Noncq,
    Noncc,
    Nonclass,
    Flat,
}

fn tolerance(flag: Option<f64>) -> Result<f64> {
    let tol = flag.unwrap_or_else(tolerance_from_env);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive and finite, got {tol}")));
    }
    Ok(tol)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Classify { state, tol, json } => cmd_classify(&state, tolerance(tol)?, json, out),
        Command::Witness { kind, dim, seed, delta, out: path, tol } => {
            cmd_witness(kind, dim, seed, delta.as_deref(), path.as_deref(), tolerance(tol)?, out)
        }
        Command::Povm { action } => match action {
            PovmCommand::Analyze { file, json } => cmd_povm_analyze(&file, json, out),
            PovmCommand::BuildCq { dim, epsilon, out: path } => cmd_povm_build(dim, epsilon, &path, out),
        },
        Command::Report { dim, trials, seed, json, tol } => {
            let command = std::env::args().skip(1).collect();
            cmd_report(dim, trials, seed, tolerance(tol)?, json.as_deref(), command, out)
        }
    }
}

fn cmd_classify(path: &std::path::Path, tol: f64, json: bool, out: &mut dyn Write) -> Result<()> {
    let rho = MatrixFile::read(path)?.to_state()?;
    let r = classify(&rho, tol)?;
    if json {
        write!(out, "{}", files::to_json(&r)?)?;
    } else {
        writeln!(out, "npt: {}\nppt: {}\ncq: {}\nqc: {}\ncc: {}", r.npt, r.ppt, r.cq, r.qc, r.cc)?;
        writeln!(out, "min_pt_eig: {:.6e}", r.min_pt_eig)?;
        writeln!(out, "max_commutator_A: {:.6e}\nmax_normality_A: {:.6e}", r.max_commutator_a, r.max_normality_a)?;
        writeln!(out, "max_commutator_B: {:.6e}\nmax_normality_B: {:.6e}", r.max_commutator_b, r.max_normality_b)?;
        writeln!(out, "tolerance: {:e}", r.tolerance)?;
    }
    Ok(())
}

fn crossing_summary(c: &ClassCrossingCertificate, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "certificate: {}", records::crossing_name(c.crossing))?;
    writeln!(out, "d: {}\nside: {:?}\nlambda: {:.6e}", c.delta.dims().local(), c.side, c.lambda)?;
    for k in &c.commutators {
        writeln!(out, "commutator {:?} {:?} {:?}: {:.6e}", k.side, k.first, k.second, k.norm)?;
    }
    writeln!(
        out,
        "base: cq={} qc={} cc={}\nkappa: cq={} qc={} cc={}",
        c.base_evidence.cq.member,
        c.base_evidence.qc.member,
        c.base_evidence.member,
        c.kappa_evidence.cq.member,
        c.kappa_evidence.qc.member,
        c.kappa_evidence.member
    )?;
    Ok(())
}

fn cmd_witness(
    kind: WitnessKind,
    dim: usize,
    seed: u64,
    delta_path: Option<&std::path::Path>,
    out_path: Option<&std::path::Path>,
    tol: f64,
    out: &mut dyn Write,
) -> Result<()> {
    if kind == WitnessKind::Flat {
        let flat = flat_direction_counterexample(dim)?;
        writeln!(out, "certificate: flat\nd: {dim}\nlambda_max: {:.6e}\nscan_min: {:.6e}", flat.lambda_max, flat.scan_min())?;
        if let Some(p) = out_path {
            write_json(p, &FlatRecord::from(&flat))?;
        }
        return Ok(());
    }
    let delta: Direction = match delta_path {
        Some(p) => MatrixFile::read(p)?.to_direction()?,
        None => random_direction(BipartiteDims::new(dim)?, Seed(seed)),
    };
    let crossing = match kind {
        WitnessKind::Entangle => {
            let cert = build_entangling_perturbation(&delta)?;
            cert.verify()?;
            writeln!(out, "certificate: entangle\nd: {}", delta.dims().local())?;
            writeln!(out, "branch: {:?}\nlambda: {:.6e}\nmin_pt_eig: {:.6e}", cert.branch, cert.lambda, cert.min_pt_eig)?;
            if let Some(p) = out_path {
                write_json(p, &EntanglementRecord::from(&cert))?;
            }
            return Ok(());
        }
        WitnessKind::Noncq => build_noncq_perturbation_with_tol(&delta, tol)?,
        WitnessKind::Noncc => build_noncc_perturbation_with_tol(&delta, tol)?,
        WitnessKind::Nonclass => build_non_cq_or_qc_perturbation_with_tol(&delta, tol)?,
        WitnessKind::Flat => unreachable!(),
    };
    crossing_summary(&crossing, out)?;
    if let Some(p) = out_path {
        write_json(p, &CrossingRecord::from(&crossing))?;
    }
    crossing.verify(tol)
}

#[derive(serde::Serialize)]
struct AnalysisRecord {
    d: usize,
    outcomes: usize,
    dim_e: usize,
    dim_xe: usize,
    informationally_complete: bool,
    decides_cq: bool,
    invariant_span_distance: f64,
}

fn cmd_povm_analyze(path: &std::path::Path, json: bool, out: &mut dyn Write) -> Result<()> {
    let povm = MatrixFile::read(path)?.to_povm()?;
    let a = analyze(&povm)?;
    let rec = AnalysisRecord {
        d: povm.dims().local(),
        outcomes: povm.len(),
        dim_e: a.dim_e,
        dim_xe: a.dim_xe,
        informationally_complete: a.informationally_complete,
        decides_cq: a.decides_cq,
        invariant_span_distance: a.invariant_span_distance,
    };
    if json {
        write!(out, "{}", files::to_json(&rec)?)?;
    } else {
        writeln!(out, "outcomes: {}\ndim_e: {}\ndim_xe: {}", rec.outcomes, rec.dim_e, rec.dim_xe)?;
        writeln!(out, "informationally_complete: {}\ndecides_cq: {}", rec.informationally_complete, rec.decides_cq)?;
    }
    Ok(())
}

fn cmd_povm_build(dim: usize, epsilon: f64, path: &std::path::Path, out: &mut dyn Write) -> Result<()> {
    let povm = build_minimal_cq_povm(BipartiteDims::new(dim)?, epsilon)?;
    MatrixFile::povm(&povm).write(path)?;
    writeln!(out, "outcomes: {}\nwritten: {}", povm.len(), path.display())?;
    Ok(())
}

fn cmd_report(
    dim: usize,
    trials: usize,
    seed: u64,
    tol: f64,
    json: Option<&std::path::Path>,
    command: Vec<String>,
    out: &mut dyn Write,
) -> Result<()> {
    let report = report::run_report(dim, trials, seed, tol, command)?;
    write!(out, "{}", report::render_table(&report))?;
    if let Some(p) = json {
        write_json(p, &report)?;
    }
    if !report.all_passed() {
        return Err(Error::Construction("some report trials failed".into()));
    }
    Ok(())
}
