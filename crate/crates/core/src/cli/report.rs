//! Summary table: for each property, random-direction constructions that
//! demonstrate why its verification needs (or does not need) an
//! informationally complete measurement.

use std::time::Instant;

use serde::Serialize;

use crate::detect::ppt_check;
use crate::error::Result;
use crate::linalg::BipartiteDims;
use crate::povm::{analyze, build_minimal_cq_povm, distinguishes, Povm, DEFAULT_EPSILON};
use crate::states::{random_direction, sample_cq, Seed};
use crate::witness::{
    build_entangling_perturbation, build_non_cq_or_qc_perturbation_with_tol, build_noncc_perturbation_with_tol,
    build_noncq_perturbation_with_tol, invariant_perturbation,
};

/// Statistics differences below this are treated as invisible to a POVM.
pub const STATISTICS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Property {
    Npt,
    Entangled,
    Discordant,
    NonClassical,
}

impl Property {
    pub const ALL: [Property; 4] = [Property::Npt, Property::Entangled, Property::Discordant, Property::NonClassical];

    pub fn label(self) -> &'static str {
        match self {
            Property::Npt => "NPT",
            Property::Entangled => "ENTANGLED",
            Property::Discordant => "DISCORDANT",
            Property::NonClassical => "NON-CLASSICAL",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RowSummary {
    pub property: Property,
    pub informationally_complete: bool,
    pub minimal_outcomes: usize,
    pub successes: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub property: Property,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub seed: u64,
    pub d: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub rows: Vec<RowSummary>,
    pub records: Vec<TrialRecord>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.successes == r.trials)
    }
}

fn trial_seed(seed: u64, row: usize, trial: usize) -> Seed {
    Seed(seed).derive(((row as u64) << 32) | trial as u64)
}

fn outcome(property: Property, trial: usize, seed: Seed, result: Result<(bool, Option<f64>, String)>) -> TrialRecord {
    let (success, lambda, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, None, e.to_string()),
    };
    TrialRecord { property, trial, seed: seed.0, success, lambda, detail }
}

fn npt_trial(dims: BipartiteDims, seed: Seed) -> Result<(bool, Option<f64>, String)> {
    let cert = build_entangling_perturbation(&random_direction(dims, seed))?;
    let ok = cert.verify().is_ok();
    Ok((ok, Some(cert.lambda), format!("min_pt_eig {:.3e}", cert.min_pt_eig)))
}

/// The base is on the separable boundary (PPT to round-off) and `κ` is NPT.
fn entangled_trial(dims: BipartiteDims, seed: Seed) -> Result<(bool, Option<f64>, String)> {
    let cert = build_entangling_perturbation(&random_direction(dims, seed))?;
    let (_, base_min) = ppt_check(&cert.base, 1e-12)?;
    let ok = cert.verify().is_ok() && base_min >= -1e-12;
    Ok((ok, Some(cert.lambda), format!("base min_pt_eig {base_min:.3e}, kappa {:.3e}", cert.min_pt_eig)))
}

/// An invariant move stays CQ and is invisible to the minimal POVM, while a
/// generic crossing out of CQ is visible.
fn discordant_trial(dims: BipartiteDims, seed: Seed, povm: &Povm, tol: f64) -> Result<(bool, Option<f64>, String)> {
    let base = sample_cq(dims, seed.derive(0));
    let xi = seed.derive(1).sampler().local_traceless(dims.local());
    let inv = invariant_perturbation(&base, &xi, tol)?;
    let hidden = !distinguishes(povm, &base, &inv.kappa, STATISTICS_TOL)?;
    let cert = build_noncq_perturbation_with_tol(&random_direction(dims, seed.derive(2)), tol)?;
    let seen = distinguishes(povm, &cert.base, &cert.kappa, STATISTICS_TOL)?;
    let ok = inv.cq && hidden && cert.holds() && seen;
    Ok((
        ok,
        Some(cert.lambda),
        format!("invariant move cq={} hidden={hidden}; crossing holds={} seen={seen}", inv.cq, cert.holds()),
    ))
}

fn nonclassical_trial(dims: BipartiteDims, seed: Seed, tol: f64) -> Result<(bool, Option<f64>, String)> {
    let delta = random_direction(dims, seed);
    let cc = build_noncc_perturbation_with_tol(&delta, tol)?;
    let both = build_non_cq_or_qc_perturbation_with_tol(&delta, tol)?;
    Ok((
        cc.holds() && both.holds(),
        Some(cc.lambda),
        format!("non-cc holds={}, neither-cq-nor-qc holds={}", cc.holds(), both.holds()),
    ))
}

/// Runs `trials` constructions per property. Trial `i` of row `r` uses the
/// sub-seed `derive(r << 32 | i)`, so the report depends only on the seed.
pub fn run_report(d: usize, trials: usize, seed: u64, tol: f64, command: Vec<String>) -> Result<RunReport> {
    let start = Instant::now();
    let dims = BipartiteDims::new(d)?;
    let big_d = dims.total();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    if trials > 0 {
        let povm = build_minimal_cq_povm(dims, DEFAULT_EPSILON)?;
        let analysis = analyze(&povm)?;
        for (r, property) in Property::ALL.into_iter().enumerate() {
            let mut successes = 0;
            for i in 0..trials {
                let s = trial_seed(seed, r, i);
                let result = match property {
                    Property::Npt => npt_trial(dims, s),
                    Property::Entangled => entangled_trial(dims, s),
                    Property::Discordant => discordant_trial(dims, s, &povm, tol),
                    Property::NonClassical => nonclassical_trial(dims, s, tol),
                };
                let rec = outcome(property, i, s, result);
                successes += rec.success as usize;
                records.push(rec);
            }
            let (informationally_complete, minimal_outcomes) = match property {
                Property::Discordant => (analysis.informationally_complete || !analysis.decides_cq, povm.len()),
                _ => (true, big_d * big_d),
            };
            rows.push(RowSummary { property, informationally_complete, minimal_outcomes, successes, trials });
        }
    }
    Ok(RunReport {
        command,
        seed,
        d,
        trials,
        tolerance: tol,
        rows,
        records,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}

pub const TABLE_HEADER: &str = "property       IC   min outcomes  demonstrated";

pub fn render_table(report: &RunReport) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in &report.rows {
        out.push_str(&format!(
            "{:<14} {:<4} {:>12}  {}/{}\n",
            row.property.label(),
            if row.informationally_complete { "yes" } else { "no" },
            row.minimal_outcomes,
            row.successes,
            row.trials
        ));
    }
    out
}
