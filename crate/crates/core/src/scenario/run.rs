use std::time::Instant;

use super::config::{ClassicalLayout, Model, Scenario, ScenarioConfig};
use super::output::{Metadata, ScenarioOutput, Table, TOOL_NAME, TOOL_VERSION};
use crate::correlation::{dephasing_sweep, evaluate_with, CorrelationResult, Parallelism};
use crate::error::Result;
use crate::sources::{
    ClassicalGrid, ClassicalSource, Ensemble, SpdcSource, SwapMode, ZetaModel, ZetaSampling,
};
use crate::spectral::{build_grid, filter_grid, DetuningGrid, Envelope, SpectralProfile};

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    run_scenario_with(cfg, Parallelism::from_env())
}

pub fn run_scenario_with(cfg: &ScenarioConfig, par: Parallelism) -> Result<ScenarioOutput> {
    let start = Instant::now();
    let taus = cfg.tau_grid()?;
    let tables = match cfg.scenario {
        Scenario::Dip => {
            let res = evaluate_with(&ensemble(cfg, false)?, &taus, cfg.form, par);
            let mut t = Table::new("dip", vec!["tau", "r_hat", "g2"]);
            for i in 0..res.taus.len() {
                t.push(vec![Some(res.taus[i]), Some(res.r_hat[i]), res.g2[i]]);
            }
            vec![t]
        }
        Scenario::Maps => {
            let res = evaluate_with(&ensemble(cfg, false)?, &taus, cfg.form, par);
            vec![map_table("maps", &res)]
        }
        Scenario::Intensities => {
            let full = evaluate_with(&ensemble(cfg, false)?, &taus, cfg.form, par);
            let filtered = evaluate_with(&ensemble(cfg, true)?, &taus, cfg.form, par);
            let mut t = Table::new(
                "intensities",
                vec![
                    "tau",
                    "ia_mean_full",
                    "ib_mean_full",
                    "ia_mean_filtered",
                    "ib_mean_filtered",
                ],
            );
            for i in 0..full.taus.len() {
                t.push(vec![
                    Some(full.taus[i]),
                    Some(full.ia_mean[i]),
                    Some(full.ib_mean[i]),
                    Some(filtered.ia_mean[i]),
                    Some(filtered.ib_mean[i]),
                ]);
            }
            vec![t]
        }
        Scenario::Filtered => {
            let res = evaluate_with(&ensemble(cfg, true)?, &taus, cfg.form, par);
            let vis = res.visibility();
            let mut t = Table::new(
                "filtered",
                vec!["tau", "ia_mean", "ib_mean", "visibility", "r_hat"],
            );
            for (i, &v) in vis.iter().enumerate() {
                t.push(vec![
                    Some(res.taus[i]),
                    Some(res.ia_mean[i]),
                    Some(res.ib_mean[i]),
                    Some(v),
                    Some(res.r_hat[i]),
                ]);
            }
            vec![t, map_table("filtered_maps", &res)]
        }
        Scenario::G2 => {
            let off = ScenarioConfig {
                swap: SwapMode::Off,
                ..cfg.clone()
            };
            let exact = ScenarioConfig {
                swap: SwapMode::ExactHalf,
                ..cfg.clone()
            };
            let no_swap = evaluate_with(&ensemble(&off, false)?, &taus, cfg.form, par);
            let swapped = evaluate_with(&ensemble(&exact, false)?, &taus, cfg.form, par);
            let mut t = Table::new("g2", vec!["tau", "r_hat", "g2_no_swap", "g2_swap"]);
            for i in 0..taus.len() {
                t.push(vec![
                    Some(taus.values()[i]),
                    Some(swapped.r_hat[i]),
                    no_swap.g2[i],
                    swapped.g2[i],
                ]);
            }
            vec![t]
        }
        Scenario::Dephasing => {
            let sweep = match cfg.model {
                Model::Spdc => dephasing_sweep(
                    spdc_source(cfg)?,
                    &cfg.zeta_halfwidths,
                    &spdc_grid(cfg, false)?,
                    envelope(cfg)?,
                    zeta_sampling(cfg),
                    &taus,
                    cfg.form,
                    par,
                )?,
                Model::Classical => cfg
                    .zeta_halfwidths
                    .iter()
                    .map(|&a| {
                        let c = ScenarioConfig {
                            zeta: ZetaModel::Uniform(a),
                            ..cfg.clone()
                        };
                        Ok((
                            a,
                            evaluate_with(&ensemble(&c, false)?, &taus, cfg.form, par),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let mut summary = Table::new("dephasing", vec!["zeta_halfwidth", "r_hat_zero"]);
            let mut curves = Table::new("dephasing_curves", vec!["zeta_halfwidth", "tau", "r_hat"]);
            for (a, res) in &sweep {
                summary.push(vec![Some(*a), res.r_hat_at_zero()]);
                for (tau, r) in res.taus.iter().zip(&res.r_hat) {
                    curves.push(vec![Some(*a), Some(*tau), Some(*r)]);
                }
            }
            vec![summary, curves]
        }
        Scenario::Classical => {
            let res = evaluate_with(&ensemble(cfg, false)?, &taus, cfg.form, par);
            let mut t = Table::new(
                "classical",
                vec!["tau", "r_hat", "g2", "ia_mean", "ib_mean"],
            );
            for i in 0..res.taus.len() {
                t.push(vec![
                    Some(res.taus[i]),
                    Some(res.r_hat[i]),
                    res.g2[i],
                    Some(res.ia_mean[i]),
                    Some(res.ib_mean[i]),
                ]);
            }
            vec![t]
        }
    };
    Ok(ScenarioOutput {
        metadata: Metadata {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            scenario: cfg.scenario.name(),
            seed: cfg.seed,
            config: cfg.clone(),
        },
        tables,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn map_table(name: &str, res: &CorrelationResult) -> Table {
    let mut t = Table::new(name, vec!["tau", "delta_f", "r_ab", "i_a", "i_b"]);
    for (i, &tau) in res.taus.iter().enumerate() {
        for (k, &df) in res.delta_f.iter().enumerate() {
            t.push(vec![
                Some(tau),
                Some(df),
                Some(res.r_map[i][k]),
                Some(res.ia_map[i][k]),
                Some(res.ib_map[i][k]),
            ]);
        }
    }
    t
}

fn envelope(cfg: &ScenarioConfig) -> Result<Envelope> {
    Envelope::new(cfg.envelope, cfg.p)
}

fn zeta_sampling(cfg: &ScenarioConfig) -> ZetaSampling {
    ZetaSampling::Quadrature {
        nodes: cfg.zeta_nodes,
    }
}

fn spdc_source(cfg: &ScenarioConfig) -> Result<SpdcSource> {
    Ok(SpdcSource::new(cfg.phi_prime, cfg.zeta, cfg.delta, cfg.swap)?.with_swap_seed(cfg.seed))
}

fn spdc_grid(cfg: &ScenarioConfig, filtered: bool) -> Result<DetuningGrid> {
    let profile = SpectralProfile::new(cfg.delta, cfg.span)?;
    let grid = build_grid(&profile, cfg.nodes, cfg.scheme, cfg.seed)?;
    if filtered {
        filter_grid(&grid, cfg.filter_half_span * cfg.delta)
    } else {
        Ok(grid)
    }
}

/// Builds the ensemble described by `cfg`, optionally on the filtered grid.
pub fn ensemble(cfg: &ScenarioConfig, filtered: bool) -> Result<Ensemble> {
    match cfg.model {
        Model::Spdc => Ensemble::spdc(
            spdc_source(cfg)?,
            &spdc_grid(cfg, filtered)?,
            envelope(cfg)?,
            zeta_sampling(cfg),
        ),
        Model::Classical => {
            let src = ClassicalSource::new(cfg.phi, cfg.zeta, cfg.delta_s, cfg.delta_i)?;
            let mut grid = match cfg.classical_grid {
                ClassicalLayout::Collapsed => {
                    ClassicalGrid::collapsed(&src, cfg.span, cfg.nodes, cfg.scheme, cfg.seed)?
                }
                ClassicalLayout::Product => {
                    ClassicalGrid::product(&src, cfg.span, cfg.nodes, cfg.scheme, cfg.seed)?
                }
            };
            if filtered {
                grid = grid.filter(&src, cfg.filter_half_span)?;
            }
            Ensemble::classical(src, &grid, envelope(cfg)?, zeta_sampling(cfg))
        }
    }
}
