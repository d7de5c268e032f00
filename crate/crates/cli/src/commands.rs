//! Text-producing subcommands: tail arithmetic, index summaries and the
//! arithmetic decomposition. Structured text goes to stdout as pretty JSON;
//! CSV artifacts are written next to it for `decompose`.

use std::path::Path;

use anyhow::anyhow;
use serde::Serialize;

use polytail::indexcalc::{
    conflict_coloring, equivalence_classes, gamma_decomposition, general_index_summary,
    iid_index_summary, scale_condition, shift_condition, verify_coloring,
};
use polytail::sampler::{build_sampler, BodyConfig, HeavyTailSampler};
use polytail::tailspec::{monomial_tail, polynomial_tail_with_draws, TailedLaw};

use crate::config::ExperimentConfig;

fn samplers_from(cfg: &ExperimentConfig, arity: usize) -> anyhow::Result<Vec<HeavyTailSampler>> {
    if let Some(list) = &cfg.variable_tails {
        if list.len() != arity {
            return Err(anyhow!(
                "config error: {} variable tails for arity {arity}",
                list.len()
            ));
        }
        list.iter()
            .enumerate()
            .map(|(j, t)| {
                let spec = t.to_spec().map_err(|e| anyhow!("config error: {e}"))?;
                Ok(build_sampler(spec, BodyConfig::Uniform, cfg.seed ^ j as u64)?)
            })
            .collect()
    } else {
        let t = cfg
            .tail
            .as_ref()
            .ok_or_else(|| anyhow!("config error: [tail] or [[variable_tails]] required"))?;
        let spec = t.to_spec().map_err(|e| anyhow!("config error: {e}"))?;
        let body = match t.body_width {
            Some(w) if w < 1.0 => BodyConfig::ScaledUniform { width: w },
            _ => BodyConfig::Uniform,
        };
        let s = build_sampler(spec, body, cfg.seed)?;
        Ok(vec![s; arity])
    }
}

pub fn tails(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let f = cfg
        .polynomial
        .as_ref()
        .ok_or_else(|| anyhow!("config error: [polynomial] required"))?
        .to_polynomial()
        .map_err(|e| anyhow!("config error: {e}"))?;
    let samplers = samplers_from(cfg, f.arity)?;
    let dists: Vec<&dyn TailedLaw> = samplers.iter().map(|s| s as &dyn TailedLaw).collect();
    let per_term = f
        .terms
        .iter()
        .map(|m| monomial_tail(&dists, m))
        .collect::<Result<Vec<_>, _>>()?;
    let (polynomial, groups) = polynomial_tail_with_draws(&dists, &f, cfg.seed, 1_000_000)?;
    #[derive(Serialize)]
    struct Out {
        per_term: Vec<polytail::tailspec::TailSpec>,
        polynomial: polytail::tailspec::TailSpec,
        groups: Vec<polytail::tailspec::GroupBreakdown>,
    }
    Ok(serde_json::to_string_pretty(&Out { per_term, polynomial, groups })?)
}

pub fn indices(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let f = cfg
        .polynomial
        .as_ref()
        .ok_or_else(|| anyhow!("config error: [polynomial] required"))?
        .to_polynomial()
        .map_err(|e| anyhow!("config error: {e}"))?;
    let summary = if let Some(list) = &cfg.variable_tails {
        let tails: Vec<(f64, f64)> = list.iter().map(|t| (t.alpha, t.k)).collect();
        general_index_summary(&f, &tails)?
    } else {
        let t = cfg
            .tail
            .as_ref()
            .ok_or_else(|| anyhow!("config error: [tail] or [[variable_tails]] required"))?;
        iid_index_summary(&f, t.alpha, t.k)?
    };
    #[derive(Serialize)]
    struct Out {
        summary: polytail::indexcalc::IndexSummary,
        shift_condition: polytail::indexcalc::ShiftCheck,
        scale_condition: polytail::indexcalc::ScaleCheck,
    }
    Ok(serde_json::to_string_pretty(&Out {
        shift_condition: shift_condition(&summary),
        scale_condition: scale_condition(&summary),
        summary,
    })?)
}

pub fn decompose(
    cfg: &ExperimentConfig,
    bound: u64,
    q: usize,
    out_dir: &Path,
) -> anyhow::Result<String> {
    let f = cfg
        .polynomial
        .as_ref()
        .ok_or_else(|| anyhow!("config error: [polynomial] required"))?
        .to_polynomial()
        .map_err(|e| anyhow!("config error: {e}"))?;
    let ell = f.arity as u64;
    let decomp = gamma_decomposition(ell, bound)?;
    let coloring_n = bound.min(100_000);
    let coloring = conflict_coloring(ell, coloring_n)?;
    let coloring_valid = verify_coloring(&coloring);

    std::fs::create_dir_all(out_dir)?;
    let mut gamma_csv = String::from("rank,n_j\n");
    for (i, g) in decomp.gamma1.iter().enumerate() {
        gamma_csv.push_str(&format!("{},{g}\n", i + 1));
    }
    std::fs::write(out_dir.join("gamma1.csv"), gamma_csv)?;

    let mut partition = None;
    if let Some(t) = &cfg.tail {
        let summary = iid_index_summary(&f, t.alpha, t.k)?;
        let q = q.min(decomp.gamma1.len()).max(1);
        let part = equivalence_classes(&decomp, &summary, q)?;
        let mut csv = String::from("class,rank_j,n_j,theta\n");
        for (ci, class) in part.classes.iter().enumerate() {
            for &(j, theta) in class {
                csv.push_str(&format!("{ci},{j},{},{theta}\n", decomp.gamma1[j - 1]));
            }
        }
        std::fs::write(out_dir.join("equivalence.csv"), csv)?;
        partition = Some(part);
    }

    #[derive(Serialize)]
    struct Out {
        ell: u64,
        primes: Vec<u64>,
        rho: f64,
        gamma1_count: usize,
        coloring_n: u64,
        colors_used: u32,
        color_bound: u64,
        coloring_valid: bool,
        partition: Option<polytail::indexcalc::EquivalencePartition>,
    }
    Ok(serde_json::to_string_pretty(&Out {
        ell,
        primes: decomp.primes.clone(),
        rho: decomp.rho,
        gamma1_count: decomp.gamma1.len(),
        coloring_n,
        colors_used: coloring.color_count,
        color_bound: ell * ell + 1,
        coloring_valid,
        partition,
    })?)
}
