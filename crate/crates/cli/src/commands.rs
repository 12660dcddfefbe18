//! One function per subcommand.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use supnorm_core::amplifier::{
    amplifier_value, angle_grid, efficiency_ratio, expand_kl, sum_lower_bound_sweep, technical_sum,
    technical_sum_constant, AmplifierSupport, EigenvalueSequence, SatakeParameter, Sign,
};
use supnorm_core::counting::{delta_scan, displacement_u, enumerate, growth_scan, oracle, CountQuery};
use supnorm_core::hecke::{build_tree, verify_hecke_orders, verify_sphere_recursion};
use supnorm_core::hyperbolic::PlanePoint;
use supnorm_core::planner::{dominance_scan, plan, PlanInput};
use supnorm_core::quaternion::QuaternionOrder;
use supnorm_core::window::{build_window, check_grid, kernel_envelope, RECONSTRUCTION_CUTOFF};

use crate::config::Config;
use crate::report::{RunReport, Table, Verdict};
use crate::{Cli, CliError, Command, Output};

/// Lower bound asserted for `min_θ Σλ²/L`.
pub const SWEEP_THRESHOLD: f64 = 0.3;

fn report(out: RunReport) -> Output {
    Output { report: out, table: None, table_primary: false }
}

fn with_table(out: RunReport, table: Table, table_primary: bool) -> Output {
    Output { report: out, table: Some(table), table_primary }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn load(cli: &Cli) -> Result<Config, CliError> {
    Ok(Config::load(cli.config.as_deref())?)
}

fn order(cli: &Cli) -> Result<QuaternionOrder, CliError> {
    Ok(load(cli)?.order()?)
}

fn tempered_sequences(primes: &[u64], thetas: &[f64], length: u32) -> Result<Vec<EigenvalueSequence>, CliError> {
    if primes.len() != thetas.len() {
        return Err(CliError::Input(format!("{} primes but {} angles", primes.len(), thetas.len())));
    }
    primes
        .iter()
        .zip(thetas)
        .map(|(&p, &t)| {
            let param = SatakeParameter::tempered(t).map_err(CliError::input)?;
            EigenvalueSequence::new(p, param, length).map_err(CliError::input)
        })
        .collect()
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let name = cli.command.name();
    match cli.command.clone() {
        Command::Count { norm, t, z, list } => count(cli, name, norm, t, z, list),
        Command::ScanCount { prime, kmax, t, z } => scan_count(cli, name, prime, kmax, t, z),
        Command::DeltaScan { prime, kmax, z, threshold } => delta(cli, name, prime, kmax, z, threshold),
        Command::TreeCheck { prime, ordm, ordn, radius } => tree_check(name, prime, ordm, ordn, radius),
        Command::Amplifier { primes, length, theta } => {
            let primes = primes.unwrap_or(load(cli)?.amplifier.primes);
            amplifier(name, &primes, length, &theta)
        }
        Command::Sweep { prime, length, grid_step } => {
            let step = match grid_step {
                Some(s) => s,
                None => load(cli)?.amplifier.sweep_step,
            };
            sweep(name, prime, length, step)
        }
        Command::TechnicalSum { x, length, primes, theta } => {
            let primes = primes.unwrap_or(load(cli)?.amplifier.primes);
            technical(name, x, length, &primes, &theta)
        }
        Command::Efficiency { length, theta, trials, prime } => {
            let prime = match prime {
                Some(p) => p,
                None => load(cli)?.amplifier.primes[0],
            };
            efficiency(name, length, theta, trials, prime, cli.seed)
        }
        Command::Window { nodes } => window(name, nodes),
        Command::Plan { loglambda, primes, c_const } => {
            let config = load(cli)?;
            let primes = primes.unwrap_or(config.amplifier.primes);
            planner(name, loglambda, primes, c_const.unwrap_or(config.planner.c_const))
        }
        Command::Envelope { d, loglambda, epsilon, c_const } => {
            let c = match c_const {
                Some(c) => c,
                None => load(cli)?.planner.c_const,
            };
            envelope(name, d, loglambda, epsilon, c)
        }
        Command::VerifyOrder => verify(cli, name),
        Command::Selftest => selftest(cli, name),
    }
}

fn count(cli: &Cli, name: &str, norm: u64, t: f64, z: PlanePoint, list: bool) -> Result<Output, CliError> {
    let order = order(cli)?;
    let query = CountQuery::new(norm, t, z).map_err(CliError::input)?;
    let res = enumerate(&order, &query).map_err(CliError::input)?;
    let exact = res.elements.iter().all(|e| order.reduced_norm(e) == norm as i128);
    let inside = res
        .elements
        .iter()
        .all(|e| displacement_u(&order, e, &z).map(|u| u < t).unwrap_or(false));
    let mut results = json!({ "count": res.count, "boundary_count": res.boundary_count });
    if list {
        results["elements"] = to_value(&res.elements);
    }
    Ok(report(
        RunReport::new(name, to_value(&query), results)
            .verdict("exact_norm", exact, format!("every element has reduced norm {norm}"))
            .verdict("inside_ball", inside, format!("every element moves z by u < {t}")),
    ))
}

fn scan_count(cli: &Cli, name: &str, prime: u64, kmax: u32, t: f64, z: PlanePoint) -> Result<Output, CliError> {
    let order = order(cli)?;
    let scan = growth_scan(&order, prime, kmax, t, z).map_err(CliError::input)?;
    let mut table = Table::new(&["k", "norm", "count", "ratio", "boundary_count"]);
    for r in &scan.rows {
        table.push(vec![
            r.k.to_string(),
            r.norm.to_string(),
            r.count.to_string(),
            r.ratio.to_string(),
            r.boundary_count.to_string(),
        ]);
    }
    let units = scan.rows.first().map(|r| r.count >= 2).unwrap_or(false);
    let out = RunReport::new(
        name,
        json!({ "prime": prime, "kmax": kmax, "t": t, "z": to_value(&z) }),
        json!({ "slope": scan.slope, "max_ratio": scan.max_ratio(), "rows": to_value(&scan.rows) }),
    )
    .verdict("completed", scan.aborted.is_none(), scan.aborted.clone().unwrap_or_else(|| "all rows".into()))
    .verdict("units_present", units, "M(1, t; z) ≥ 2");
    Ok(with_table(out, table, true))
}

fn delta(cli: &Cli, name: &str, prime: u64, kmax: u32, z: PlanePoint, threshold: u64) -> Result<Output, CliError> {
    let order = order(cli)?;
    let scan = delta_scan(&order, prime, kmax, z, threshold).map_err(CliError::input)?;
    let mut table = Table::new(&["k", "norm", "delta", "count", "perfect_square", "flagged"]);
    for r in &scan.rows {
        table.push(vec![
            r.k.to_string(),
            r.norm.to_string(),
            r.delta.to_string(),
            r.count.to_string(),
            r.perfect_square.to_string(),
            r.flagged.to_string(),
        ]);
    }
    let flagged: Vec<u64> = scan.rows.iter().filter(|r| r.flagged).map(|r| r.norm).collect();
    let scalars = scan.rows.iter().filter(|r| r.perfect_square).all(|r| r.count >= 2);
    let out = RunReport::new(
        name,
        json!({ "prime": prime, "kmax": kmax, "z": to_value(&z), "threshold": threshold }),
        json!({ "rows": to_value(&scan.rows) }),
    )
    .verdict("below_threshold", flagged.is_empty(), format!("rows above {threshold}: {flagged:?}"))
    .verdict("central_scalars", scalars, "square norms contain ±√N");
    Ok(with_table(out, table, true))
}

fn tree_check(name: &str, prime: u64, ordm: u32, ordn: u32, radius: u32) -> Result<Output, CliError> {
    let tree = build_tree(prime, radius).map_err(CliError::input)?;
    let r = verify_hecke_orders(&tree, ordm, ordn).map_err(CliError::input)?;
    let detail = match &r.first_mismatch {
        None => format!("{} interior rows agree", r.rows_checked),
        Some(m) => format!("row {} column {}: {} vs {}", m.row, m.column, m.lhs, m.rhs),
    };
    let passed = r.passed;
    Ok(report(
        RunReport::new(
            name,
            json!({ "prime": prime, "ordm": ordm, "ordn": ordn, "radius": radius }),
            json!({ "vertices": tree.vertex_count(), "report": to_value(&r) }),
        )
        .verdict("hecke_relation", passed, detail),
    ))
}

fn amplifier(name: &str, primes: &[u64], length: u32, thetas: &[f64]) -> Result<Output, CliError> {
    let support = AmplifierSupport::new(primes, length).map_err(CliError::input)?;
    let seqs = tempered_sequences(primes, thetas, length)?;
    let value = amplifier_value(&seqs, &support).map_err(CliError::input)?;
    let expansion = expand_kl(&seqs, &support).map_err(CliError::input)?;
    let contraction = expansion.contract(&seqs);
    let rel = (contraction - value.kernel_eigenvalue).abs() / value.kernel_eigenvalue.abs().max(f64::MIN_POSITIVE);
    let mut table = Table::new(&["exponents", "modulus", "coefficient"]);
    for t in &expansion.terms {
        let e: Vec<String> = t.exponents.iter().map(u32::to_string).collect();
        table.push(vec![e.join(" "), t.modulus.to_string(), t.coefficient.to_string()]);
    }
    let out = RunReport::new(
        name,
        json!({ "primes": primes, "L": length, "theta": thetas }),
        json!({
            "sequences": to_value(&seqs),
            "value": to_value(&value),
            "expansion_terms": expansion.terms.len(),
            "contraction": contraction,
            "relative_error": rel,
        }),
    )
    .verdict("nonnegative", value.kernel_eigenvalue >= 0.0, "K_L eigenvalue = A_L² ≥ 0")
    .verdict("expansion_consistent", rel <= 1e-9, format!("relative error {rel:e}"));
    Ok(with_table(out, table, false))
}

fn sweep(name: &str, prime: u64, length: u32, step: f64) -> Result<Output, CliError> {
    if !(step > 0.0 && step < 1.0) {
        return Err(CliError::Input(format!("grid step must lie in (0, 1), got {step}")));
    }
    if !supnorm_core::is_prime(prime) {
        return Err(CliError::Input(format!("{prime} is not prime")));
    }
    let r = sum_lower_bound_sweep(length, &angle_grid(step)).map_err(CliError::input)?;
    let mut table = Table::new(&["theta", "ratio", "regime"]);
    for row in &r.rows {
        let regime = to_value(&row.regime);
        table.push(vec![row.theta.to_string(), row.ratio.to_string(), regime.as_str().unwrap_or_default().to_string()]);
    }
    let out = RunReport::new(
        name,
        json!({ "prime": prime, "L": length, "grid_step": step }),
        json!({ "min_ratio": r.min_ratio, "argmin": r.argmin, "grid_points": r.rows.len() }),
    )
    .verdict(
        "lower_bound",
        r.min_ratio >= SWEEP_THRESHOLD,
        format!("min ratio {} ≥ {SWEEP_THRESHOLD}", r.min_ratio),
    );
    Ok(with_table(out, table, true))
}

fn technical(name: &str, x: f64, length: u32, primes: &[u64], thetas: &[f64]) -> Result<Output, CliError> {
    if !x.is_finite() {
        return Err(CliError::Input("x must be finite".into()));
    }
    let support = AmplifierSupport::new(primes, length).map_err(CliError::input)?;
    let seqs = tempered_sequences(primes, thetas, length)?;
    let t = technical_sum(&seqs, &support, x).map_err(CliError::input)?;
    let constant = technical_sum_constant(primes, length, x);
    let out = RunReport::new(
        name,
        json!({ "x": x, "L": length, "primes": primes, "theta": thetas }),
        json!({ "lhs": to_value(&t.lhs), "rhs": to_value(&t.rhs), "ratio": t.ratio, "constant": constant }),
    )
    .verdict("bounded", t.ratio <= constant, format!("ratio {} ≤ {constant}", t.ratio));
    Ok(report(out))
}

fn efficiency(name: &str, length: u32, theta: f64, trials: u32, prime: u64, seed: u64) -> Result<Output, CliError> {
    let param = SatakeParameter::tempered(theta).map_err(CliError::input)?;
    let seq = EigenvalueSequence::new(prime, param, length).map_err(CliError::input)?;
    let lam: Vec<f64> = (1..=length).map(|m| seq.value(m)).collect();
    let best = efficiency_ratio(&lam, &seq, length).map_err(CliError::input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_perturbed = f64::NEG_INFINITY;
    for _ in 0..trials {
        let eps: f64 = rng.gen_range(1e-6..1.0);
        let alpha: Vec<f64> = lam.iter().map(|v| v + eps * rng.gen_range(-1.0..1.0)).collect();
        if let Ok(r) = efficiency_ratio(&alpha, &seq, length) {
            max_perturbed = max_perturbed.max(r);
        }
    }
    let out = RunReport::new(
        name,
        json!({ "L": length, "theta": theta, "trials": trials, "prime": prime, "seed": seed }),
        json!({ "ratio_at_lambda": best, "max_perturbed": if trials > 0 { Some(max_perturbed) } else { None } }),
    )
    .verdict(
        "maximal_at_lambda",
        trials == 0 || max_perturbed <= best * (1.0 + 1e-12),
        format!("{max_perturbed} ≤ {best}"),
    );
    Ok(report(out))
}

fn window(name: &str, nodes: usize) -> Result<Output, CliError> {
    let w = build_window(nodes).map_err(CliError::input)?;
    let table_rows = w.table();
    let min_h = table_rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let h0 = w.h(0.0);
    let outside: Vec<(f64, f64)> =
        [0.55, 0.6, 0.75, 1.0].iter().map(|&t| (t, w.reconstruct_hat_h(t, RECONSTRUCTION_CUTOFF))).collect();
    let max_out = outside.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    let mut table = Table::new(&["xi", "h"]);
    for (xi, h) in &table_rows {
        table.push(vec![xi.to_string(), h.to_string()]);
    }
    let out = RunReport::new(
        name,
        json!({ "nodes": nodes }),
        json!({
            "normalization": w.normalization,
            "doubling_error": w.doubling_error,
            "h0": h0,
            "min_h": min_h,
            "hat_h_outside": outside,
        }),
    )
    .verdict("normalized", h0 == 1.0, format!("h(0) = {h0}"))
    .verdict("nonnegative", min_h >= -1e-8, format!("min h = {min_h:e}"))
    .verdict("fourier_support", max_out < 1e-10, format!("max |ĥ| outside [−1/2, 1/2] = {max_out:e}"))
    .verdict("doubling_stable", w.doubling_error <= 1e-8, format!("{:e}", w.doubling_error));
    Ok(with_table(out, table, false))
}

fn planner(name: &str, loglambda: f64, primes: Vec<u64>, c_const: f64) -> Result<Output, CliError> {
    let input = PlanInput { log_lambda: loglambda, primes, c_const, amplifier_mass: None };
    let out = plan(&input).map_err(CliError::input)?;
    Ok(report(RunReport::new(name, to_value(&input), to_value(&out))))
}

fn envelope(name: &str, d: f64, loglambda: f64, epsilon: f64, c_const: f64) -> Result<Output, CliError> {
    let e = kernel_envelope(d, loglambda, epsilon, c_const).map_err(CliError::input)?;
    Ok(report(RunReport::new(
        name,
        json!({ "d": d, "loglambda": loglambda, "epsilon": epsilon, "C": c_const }),
        to_value(&e),
    )))
}

fn verify(cli: &Cli, name: &str) -> Result<Output, CliError> {
    let config = load(cli)?;
    let r = config.verify();
    let detail = if r.is_valid() { "closed under products, integral norms and traces, contains 1".into() } else { r.to_string() };
    let valid = r.is_valid();
    Ok(report(RunReport::new(name, json!({}), to_value(&r)).verdict("order", valid, detail)))
}

fn check<T>(name: &str, res: Result<(bool, String), T>) -> Verdict
where
    T: std::fmt::Display,
{
    match res {
        Ok((passed, detail)) => Verdict::new(name, passed, detail),
        Err(e) => Verdict::new(name, false, e.to_string()),
    }
}

fn selftest(cli: &Cli, name: &str) -> Result<Output, CliError> {
    let config = load(cli)?;
    let mut out = RunReport::new(name, json!({ "seed": cli.seed }), json!({}));
    let order_report = config.verify();
    out.verdicts.push(Verdict::new(
        "verify_order",
        order_report.is_valid(),
        if order_report.is_valid() { "valid".to_string() } else { order_report.to_string() },
    ));

    out.verdicts.push(check("hecke_relation", (|| -> Result<_, String> {
        let mut rows = 0;
        for p in [2u64, 3] {
            let tree = build_tree(p, 6).map_err(|e| e.to_string())?;
            for a in 0..=4u32 {
                for b in 0..=4 - a {
                    let r = verify_hecke_orders(&tree, a, b).map_err(|e| e.to_string())?;
                    if !r.passed {
                        return Ok((false, format!("p={p} U({a})U({b}): {:?}", r.first_mismatch)));
                    }
                    rows += r.rows_checked;
                }
            }
            for k in 1..6 {
                let r = verify_sphere_recursion(&tree, k).map_err(|e| e.to_string())?;
                if !r.passed {
                    return Ok((false, format!("p={p} S1 S{k}: {:?}", r.first_mismatch)));
                }
            }
        }
        Ok((true, format!("{rows} interior rows")))
    })()));

    out.verdicts.push(check("recurrence", (|| -> Result<_, String> {
        let mut worst = 0.0f64;
        for k in 0..200 {
            let theta = PI * (k as f64 + 0.5) / 200.0;
            let seq = EigenvalueSequence::new(2, SatakeParameter::tempered(theta).map_err(|e| e.to_string())?, 100)
                .map_err(|e| e.to_string())?;
            for (a, b) in seq.values().iter().zip(seq.by_recurrence(100)) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok((worst <= 1e-9, format!("max difference {worst:e}")))
    })()));

    out.verdicts.push(check("lower_bound_sweep", (|| -> Result<_, String> {
        let grid = angle_grid(1e-2);
        let mut mins = Vec::new();
        for &l in &config.amplifier.lengths {
            mins.push(sum_lower_bound_sweep(l, &grid).map_err(|e| e.to_string())?.min_ratio);
        }
        let ok = mins.iter().all(|&m| m >= SWEEP_THRESHOLD);
        Ok((ok, format!("min ratios {mins:?} (threshold {SWEEP_THRESHOLD})")))
    })()));

    out.verdicts.push(check("amplifier_expansion", (|| -> Result<_, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
        let primes = &config.amplifier.primes;
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let l = rng.gen_range(1..=3);
            let support = AmplifierSupport::new(primes, l).map_err(|e| e.to_string())?;
            let seqs: Vec<EigenvalueSequence> = primes
                .iter()
                .map(|&p| {
                    let param = match rng.gen_range(0..4) {
                        0 => SatakeParameter::singular(Sign::Plus),
                        1 => SatakeParameter::nontempered(rng.gen_range(0.01..1.0), Sign::Minus).unwrap(),
                        _ => SatakeParameter::tempered(rng.gen_range(0.01..3.1)).unwrap(),
                    };
                    EigenvalueSequence::new(p, param, l).map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let want = amplifier_value(&seqs, &support).map_err(|e| e.to_string())?.kernel_eigenvalue;
            let got = expand_kl(&seqs, &support).map_err(|e| e.to_string())?.contract(&seqs);
            worst = worst.max((got - want).abs() / want.abs().max(f64::MIN_POSITIVE));
        }
        Ok((worst <= 1e-9, format!("max relative error {worst:e}")))
    })()));

    let counting = if order_report.is_valid() {
        check("counting_oracle", (|| -> Result<_, String> {
            let order = config.order().map_err(|e| e.to_string())?;
            let mut queries = 0;
            for z in [PlanePoint::i(), PlanePoint::new(1.0 / 3.0, 2.0).expect("valid point")] {
                let scan = oracle::box_scan(&order, &z, 64, 2.0).map_err(|e| e.to_string())?;
                for n in 1..=64u64 {
                    for t in [0.5, 2.0] {
                        let q = CountQuery::new(n, t, z).map_err(|e| e.to_string())?;
                        let fast = enumerate(&order, &q).map_err(|e| e.to_string())?;
                        if fast.elements != scan.elements(n, t) {
                            return Ok((false, format!("N={n} t={t} z=({}, {})", z.x(), z.y())));
                        }
                        queries += 1;
                    }
                }
            }
            Ok((true, format!("{queries} queries agree with the box scan")))
        })())
    } else {
        Verdict::new("counting_oracle", false, "skipped: order invalid")
    };
    out.verdicts.push(counting);

    out.verdicts.push(check("window", (|| -> Result<_, String> {
        let w = build_window(1024).map_err(|e| e.to_string())?;
        let min_h = check_grid().into_iter().map(|xi| w.h(xi)).fold(f64::INFINITY, f64::min);
        let hat = w.reconstruct_hat_h(0.6, RECONSTRUCTION_CUTOFF).abs();
        let ok = w.h(0.0) == 1.0 && min_h >= -1e-8 && hat < 1e-10;
        Ok((ok, format!("min h {min_h:e}, |ĥ(0.6)| {hat:e}, doubling {:e}", w.doubling_error)))
    })()));

    out.verdicts.push(check("technical_sum", (|| -> Result<_, String> {
        let support = AmplifierSupport::new(&[2], 8).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for k in 1..20 {
            let seq = EigenvalueSequence::new(2, SatakeParameter::tempered(PI * k as f64 / 20.0).unwrap(), 8)
                .map_err(|e| e.to_string())?;
            worst = worst.max(technical_sum(&[seq], &support, -0.8).map_err(|e| e.to_string())?.ratio);
        }
        let c = technical_sum_constant(&[2], 8, -0.8);
        Ok((worst <= c, format!("max ratio {worst} ≤ {c} at x = −0.8")))
    })()));

    out.verdicts.push(check("planner_dominance", (|| -> Result<_, String> {
        let scan = dominance_scan(&[2], config.planner.c_const, 1.1, 1e5).map_err(|e| e.to_string())?;
        let ok = scan.threshold.is_some() && scan.points.last().map(|p| p.dominance).unwrap_or(false);
        Ok((ok, format!("threshold log λ = {:?}", scan.threshold)))
    })()));

    out.results = json!({
        "checks": out.verdicts.len(),
        "failed": out.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.clone()).collect::<Vec<_>>(),
    });
    Ok(report(out))
}
