//! JSON forms of the analysis reports.
//!
//! Agent indices are 1-based in every serialized report (files and reports
//! match the paper-style labeling N = {1,…,n}); internal arrays stay
//! 0-based, with the conversion confined to this module. Nonfinite values
//! (an undefined ρ at the zero profile) serialize as JSON null.

use ndarray::{Array1, Array2};
use serde_json::{json, Value};

use crate::efficiency::{EfficiencyReport, ImprovementCheck, ParetoWeights};
use crate::lindahl::{LindahlCertificate, LindahlVerification};
use crate::model::ValidationReport;
use crate::structure::{EssentialAgentsReport, SeparationReport};

fn vec_json(v: &Array1<f64>) -> Value {
    json!(v.to_vec())
}

fn matrix_json(m: &Array2<f64>) -> Value {
    json!(m.rows().into_iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn one_based(indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| i + 1).collect()
}

pub fn efficiency_json(report: &EfficiencyReport) -> Value {
    json!({
        "verdict": report.verdict.as_str(),
        "rho": report.rho,
        "profile": report.profile.to_vec(),
        "direction": report.direction.as_ref().map(vec_json),
        "weights": report.weights.as_ref().map(vec_json),
        "tolerance": report.tolerance,
        "note": report.note,
    })
}

pub fn weights_json(w: &ParetoWeights) -> Value {
    json!({
        "theta": vec_json(&w.theta),
        "foc_residual": w.foc_residual,
        "rho": w.rho,
    })
}

pub fn certificate_json(cert: &LindahlCertificate) -> Value {
    json!({
        "a_star": cert.a_star.to_vec(),
        "theta": vec_json(&cert.theta),
        "P": matrix_json(&cert.prices),
        "residuals": {
            "centrality": cert.residual_centrality,
            "budget": cert.residual_budget,
            "rho": cert.residual_rho,
        },
        "scale_free": cert.scale_free,
        "iterations": cert.iterations,
    })
}

pub fn verification_json(v: &LindahlVerification) -> Value {
    json!({
        "budget": {"residual": v.budget_residual, "pass": v.budget_pass},
        "mrs": {"deviation": v.mrs_deviation, "pass": v.mrs_pass},
        "rho": {"deviation": v.rho_deviation, "pass": v.rho_pass},
        "centrality": {"residual": v.centrality_residual, "pass": v.centrality_pass},
        "pass": v.pass,
        "note": v.note,
    })
}

pub fn essential_json(report: &EssentialAgentsReport) -> Value {
    json!({
        "rho_full": report.rho_full,
        "per_agent": report
            .rho_without
            .iter()
            .enumerate()
            .map(|(i, &rho)| json!({"agent": i + 1, "rho_without": rho}))
            .collect::<Vec<_>>(),
        "essential": one_based(&report.essential),
        "marginal": one_based(&report.marginal),
    })
}

pub fn separation_json(report: &SeparationReport) -> Value {
    json!({
        "partition": one_based(&report.partition),
        "complement": one_based(&report.complement),
        "bound": report.bound,
        "cross_terms": report
            .cross_terms
            .iter()
            .map(|t| json!({"i": t.i + 1, "j": t.j + 1, "value": t.value}))
            .collect::<Vec<_>>(),
        "heuristic_used": report.heuristic_used,
    })
}

pub fn validation_json(report: &ValidationReport) -> Value {
    serde_json::to_value(report).expect("validation report serializes")
}

pub fn improvement_json(check: &ImprovementCheck) -> Value {
    json!({
        "changes": check.changes,
        "pass": check.pass,
    })
}
