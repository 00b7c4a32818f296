use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use smolyak_rqmc::analysis::{
    block_second_moment, convergence_study, second_moment_bb, second_moment_bracket, StudyConfig,
};
use smolyak_rqmc::basis::{default_depth, MultiIndex};
use smolyak_rqmc::integrands::IntegrandRegistry;
use smolyak_rqmc::nets::{is_net_values, NetCheck, NetParams, NetRegistry};
use smolyak_rqmc::scrambling::{scramble_net, ScramblerKey};
use smolyak_rqmc::smolyak::SmolyakPlan;
use smolyak_rqmc::stats::{replicate, MomentEstimate};
use smolyak_rqmc::wavelets::{canonical_coefficients, haar_alpha_norm, psi_eval_multi, psi_eval_scaled, CellFunction, WaveletIndex};

use crate::output::{joined, parse_levels, parse_list, read_points, sink, source, write_header, write_json};
use crate::{
    CheckNetArgs, Command, ConvergenceArgs, Experiment, GenerateNetArgs, IntegrateArgs, MomentsArgs, NodesArgs, PlanArgs,
    ScrambleArgs, WaveletArgs, WaveletCoeffsArgs, WaveletEvalArgs,
};

/// Largest total dimension `D = d s` accepted.
const MAX_DIM: usize = 20;

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenerateNet(a) => generate_net(&a),
        Command::CheckNet(a) => return check_net(&a),
        Command::Scramble(a) => scramble(&a),
        Command::SmolyakNodes(a) => smolyak_nodes(&a),
        Command::Integrate(a) => integrate(&a),
        Command::WaveletEval(a) => wavelet_eval(&a),
        Command::WaveletCoeffs(a) => wavelet_coeffs(&a),
        Command::Moments(a) => moments(&a),
        Command::Experiment(Experiment::Convergence(a)) => convergence(&a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn generate_net(a: &GenerateNetArgs) -> Result<()> {
    let generator = NetRegistry::with_defaults().get(&a.generator)?;
    let net = generator.generate(NetParams::new(a.base, a.level, a.dim)?)?;
    let mut out = sink(a.out.as_deref())?;
    write_header(&mut *out, "generate-net", a)?;
    writeln!(out, "{}", coordinate_names(a.dim).join(","))?;
    for p in net.values() {
        writeln!(out, "{}", csv_row(&p))?;
    }
    out.flush()?;
    Ok(())
}

fn check_net(a: &CheckNetArgs) -> Result<ExitCode> {
    let points = read_points(&source(a.input.as_deref())?)?;
    let Some(s) = points.first().map(Vec::len) else {
        bail!("no points to check");
    };
    match is_net_values(&points, a.base, a.level, s)? {
        NetCheck::Pass => {
            println!("PASS: {} points form a (0,{},{s})-net in base {}", points.len(), a.level, a.base);
            Ok(ExitCode::SUCCESS)
        }
        NetCheck::Fail(witness) => {
            println!("FAIL: {witness}");
            Ok(ExitCode::FAILURE)
        }
    }
}

fn scramble(a: &ScrambleArgs) -> Result<()> {
    let generator = NetRegistry::with_defaults().get("faure")?;
    let net = generator.generate(NetParams::new(a.base, a.level, a.dim)?)?;
    let depth = a.depth.unwrap_or_else(|| default_depth(a.base));
    let seed = a.common.seed;
    let nets = replicate(a.reps, |r| {
        Ok(scramble_net(&net, depth, ScramblerKey::new(seed, r, 0, a.level, 0), false)?.values())
    })?;
    let mut out = sink(a.common.out.as_deref())?;
    write_header(&mut *out, "scramble", a)?;
    writeln!(out, "rep,point,{}", coordinate_names(a.dim).join(","))?;
    for (r, points) in nets.iter().enumerate() {
        for (i, p) in points.iter().enumerate() {
            writeln!(out, "{r},{i},{}", csv_row(p))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn plan(p: &PlanArgs) -> Result<SmolyakPlan> {
    let dim = p.d.checked_mul(p.s).context("dimension overflows")?;
    if dim > MAX_DIM {
        bail!("D = d s = {dim} exceeds the supported maximum of {MAX_DIM}");
    }
    let generator = NetRegistry::with_defaults().get(&p.generator)?;
    Ok(SmolyakPlan::with_generator(p.b, p.s, p.d, p.level, generator)?)
}

fn smolyak_nodes(a: &NodesArgs) -> Result<()> {
    let plan = plan(&a.plan)?;
    let q = plan.realize(a.common.seed, a.rep)?;
    let mut out = sink(a.common.out.as_deref())?;
    write_header(&mut *out, "smolyak-nodes", a)?;
    writeln!(out, "term,levels,weight,{}", coordinate_names(q.dim()).join(","))?;
    for (t, range) in q.term_ranges.iter().enumerate() {
        let levels = joined(&q.terms[t].levels);
        for i in range.clone() {
            writeln!(out, "{t},{levels},{:?},{}", q.weights[i], csv_row(q.node(i)))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct IntegrateResult {
    integrand: &'static str,
    description: &'static str,
    nodes: u64,
    estimate: MomentEstimate,
    exact: Option<f64>,
    /// `|mean - exact| / se`.
    z_score: Option<f64>,
}

fn integrate(a: &IntegrateArgs) -> Result<()> {
    let f = IntegrandRegistry::with_defaults().get(&a.f)?;
    let plan = plan(&a.plan)?;
    let seed = a.common.seed;
    let values = replicate(a.reps, |r| plan.realize(seed, r)?.apply(|x| f.eval(x)))?;
    let estimate = MomentEstimate::from_samples(&values)?;
    let exact = f.exact(plan.dim());
    let result = IntegrateResult {
        integrand: f.name(),
        description: f.description(),
        nodes: plan.node_count(),
        estimate,
        exact,
        z_score: exact.filter(|_| estimate.se > 0.0).map(|e| (estimate.mean - e).abs() / estimate.se),
    };
    let mut out = sink(a.common.out.as_deref())?;
    write_json(&mut *out, "integrate", a, &result)?;
    out.flush()?;
    Ok(())
}

fn wavelet(w: &WaveletArgs) -> Result<WaveletIndex> {
    let j: Vec<u32> = parse_list(&w.j, "j")?;
    let dim = j.len();
    let i = match &w.i {
        Some(text) => parse_list(text, "i")?,
        None => vec![0; dim],
    };
    let k = match &w.k {
        Some(text) => parse_list(text, "k")?,
        None => vec![0; dim],
    };
    Ok(WaveletIndex::new(w.b, MultiIndex(j), MultiIndex(i), k)?)
}

fn wavelet_eval(a: &WaveletEvalArgs) -> Result<()> {
    let w = wavelet(&a.wavelet)?;
    let points = read_points(&source(a.input.as_deref())?)?;
    let mut out = sink(a.out.as_deref())?;
    write_header(&mut *out, "wavelet-eval", a)?;
    writeln!(out, "{},value", coordinate_names(w.dim()).join(","))?;
    for x in &points {
        let v = match a.alpha {
            Some(alpha) => psi_eval_scaled(&w, x, alpha)?,
            None => psi_eval_multi(&w, x)?,
        };
        writeln!(out, "{},{v:?}", csv_row(x))?;
    }
    out.flush()?;
    Ok(())
}

fn wavelet_coeffs(a: &WaveletCoeffsArgs) -> Result<()> {
    let f = match (&a.f, &a.input) {
        (Some(name), _) => {
            let f = IntegrandRegistry::with_defaults().get(name)?;
            CellFunction::from_fn(a.b, a.dim, a.resolution, |x| f.eval(x))?
        }
        (None, input) => {
            let rows = read_points(&source(input.as_deref())?)?;
            if rows.iter().any(|r| r.len() != 1) {
                bail!("cell values must be a single column");
            }
            CellFunction::new(a.b, a.dim, a.resolution, rows.into_iter().map(|r| r[0]).collect())?
        }
    };
    let coefficients = canonical_coefficients(&f, a.j_max.unwrap_or(a.resolution))?;
    let mut out = sink(a.out.as_deref())?;
    write_header(&mut *out, "wavelet-coeffs", a)?;
    if let Some(alpha) = a.alpha {
        writeln!(out, "# haar_alpha_norm {:?}", haar_alpha_norm(&coefficients, alpha)?)?;
    }
    writeln!(out, "j,i,k,coefficient")?;
    for (idx, c) in &coefficients {
        writeln!(out, "{},{},{},{c:?}", joined(&idx.j), joined(&idx.i), joined(&idx.k))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MomentsResult {
    wavelet: String,
    estimate: MomentEstimate,
    /// `[b^(2-2s) b^-l, b^(1+s) b^-l]`.
    bracket: (f64, f64),
    /// Whether `|j| >= l + s - 1`, where the bracket applies.
    bracket_applies: bool,
}

fn moments(a: &MomentsArgs) -> Result<()> {
    let w = wavelet(&a.wavelet)?;
    let seed = a.common.seed;
    let estimate = if a.unchecked {
        block_second_moment(a.level, &w, a.s, a.reps, seed)?
    } else {
        second_moment_bb(a.level, &w, a.s, a.reps, seed)?
    };
    let result = MomentsResult {
        wavelet: w.to_string(),
        estimate,
        bracket: second_moment_bracket(w.b, a.s, a.level),
        bracket_applies: w.j.total() + 1 >= a.level + a.s as u32,
    };
    let mut out = sink(a.common.out.as_deref())?;
    write_json(&mut *out, "moments", a, &result)?;
    out.flush()?;
    Ok(())
}

fn convergence(a: &ConvergenceArgs) -> Result<()> {
    if a.d.saturating_mul(a.s) > MAX_DIM {
        bail!("D = d s = {} exceeds the supported maximum of {MAX_DIM}", a.d * a.s);
    }
    let mut config = StudyConfig::new(a.b, a.s, a.d, a.alpha, parse_levels(&a.levels)?);
    config.reps = a.reps;
    config.master_seed = a.common.seed;
    if let Some(budget) = a.j_budget {
        config.j_budget = budget;
    }
    let study = convergence_study(&config)?;

    let mut out = sink(a.common.out.as_deref())?;
    write_header(&mut *out, "experiment convergence", a)?;
    writeln!(out, "L,N,error,se,argmax_j,boundary")?;
    for r in &study.records {
        writeln!(
            out,
            "{},{},{:?},{:?},{},{}",
            r.level,
            r.nodes,
            r.error,
            r.se,
            joined(&r.argmax_j),
            r.boundary
        )?;
    }
    let fits = &study.fits;
    writeln!(out, "# slope {:?}", fits.slope.params[0])?;
    writeln!(out, "# compensated_band {:?}", fits.compensated_band)?;
    if let Some(fit) = &fits.free_log_exponent {
        writeln!(out, "# free_log_exponent {:?}", fit.params[0])?;
    }
    if study.records.iter().any(|r| r.boundary) {
        writeln!(out, "# warning: the maximizing j sits on the truncation boundary; raise --j-budget")?;
    }
    out.flush()?;

    if let Some(path) = &a.emit_plotdata {
        let mut plot = sink(Some(path))?;
        write_header(&mut *plot, "experiment convergence plotdata", a)?;
        writeln!(plot, "log_n,log_e,compensated_e")?;
        for (r, c) in study.records.iter().zip(&fits.compensated) {
            writeln!(plot, "{:?},{:?},{c:?}", (r.nodes as f64).ln(), r.error.ln())?;
        }
        plot.flush()?;
    }
    Ok(())
}

fn coordinate_names(dim: usize) -> Vec<String> {
    (0..dim).map(|t| format!("x{t}")).collect()
}

/// Shortest round-trip representation of every value, with an exponent
/// for very small or large magnitudes.
fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}
