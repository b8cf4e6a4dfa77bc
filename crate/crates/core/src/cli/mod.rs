//! Experiment runner behind the `ringtoa` binary.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::amplitudes::{amp_massless_coherent, amp_poisson, PoissonOptions, StateAmplitude};
use crate::clock::{clock_quality, cumulative, extract_ticks, TickOptions};
use crate::detector::{localization_matrix, DetectorKernel, LocalizationMatrix};
use crate::error::{Error, Result};
use crate::modes::{ModeSpace, RotationFrame};
use crate::multitime::{kolmogorov_check, violation_scan, Inequality, KolmogorovOptions, Pairing, ScanGrid, TwoParticleState};
use crate::probability::{qsymbol_images, qsymbol_snapshot, timescales, DensityEvaluator};
use crate::rotation::{noise_curve, sagnac_scan};
use crate::states::{
    coherent_state, line_state_on_ring, spread_at_time, symmetric_superposition, CoherentParams, LineState, RingState,
};

use config::{
    check, load, AmplitudeCheckParams, ClockParams, DetectorSpec, Diagnostics, KolmogorovParams, MiScanParams,
    NoiseParams, Oracle, Params, Plan, QsymbolParams, SagnacParams, StateSpec,
};
use output::{gnuplot_stub, write_file, write_json, Cell, Table};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub gnuplot_stub: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub name: String,
    pub config_file: String,
    pub plan: Plan,
    pub normalization: &'static str,
    pub truncation_errors: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub threads: usize,
    pub wall_time_s: f64,
}

struct Outcome {
    tables: Vec<Table>,
    summary: Value,
    truncation: BTreeMap<String, f64>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "experiment".into())
}

/// Schema and physics diagnostics for a config file.
pub fn validate(path: &Path) -> Result<Diagnostics> {
    let cfg = load(path)?;
    Ok(check(&cfg, &stem_of(path)).0)
}

/// Validates, executes and writes data files, a summary and the run manifest.
pub fn run(path: &Path, opts: &RunOptions) -> Result<Manifest> {
    let start = Instant::now();
    let cfg = load(path)?;
    let (diag, plan) = check(&cfg, &stem_of(path));
    for w in diag.warnings() {
        log::warn!("{}", w.message);
    }
    let Some(plan) = plan else {
        let msgs: Vec<String> = diag.errors().map(|e| e.message.clone()).collect();
        return Err(Error::Config(msgs.join("; ")));
    };
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| Error::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let outcome = execute(&plan)?;
    let manifest_name = format!("{}.manifest.json", plan.stem);
    let mut files = Vec::new();
    for t in &outcome.tables {
        files.push(tagged(t, &plan, &manifest_name).write(&opts.out_dir, plan.format)?);
    }
    let summary_name = format!("{}.summary.json", plan.stem);
    let summary = json!({
        "experiment": plan.experiment.id(),
        "name": plan.name,
        "manifest": manifest_name,
        "normalization": plan.normalization.tag(),
        "results": outcome.summary,
    });
    write_json(&opts.out_dir.join(&summary_name), &summary)?;
    files.push(summary_name);
    if opts.gnuplot_stub {
        let gp = format!("{}.gp", plan.stem);
        write_file(&opts.out_dir.join(&gp), &gnuplot_stub(&outcome.tables))?;
        files.push(gp);
    }
    let manifest = Manifest {
        tool: "ringtoa",
        version: env!("CARGO_PKG_VERSION"),
        experiment: plan.experiment.id(),
        name: plan.name.clone(),
        config_file: path.display().to_string(),
        normalization: plan.normalization.tag(),
        truncation_errors: outcome.truncation,
        files,
        warnings: diag.warnings().map(|w| w.message.clone()).collect(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        plan,
    };
    write_json(&opts.out_dir.join(&manifest_name), &manifest)?;
    Ok(manifest)
}

// shared metadata lines go above the table's own
fn tagged(t: &Table, plan: &Plan, manifest: &str) -> Table {
    let mut out = t.clone();
    let head = Table::new("", &[])
        .meta("experiment", plan.experiment.id())
        .meta("name", &plan.name)
        .meta("manifest", manifest)
        .meta("normalization", plan.normalization.tag())
        .meta("ring", format!("mu={} r={} m_max={}", plan.mu, plan.r, plan.m_max))
        .meta("params", serde_json::to_string(&plan.params).unwrap_or_default());
    out.meta.splice(0..0, head.meta);
    out
}

fn execute(plan: &Plan) -> Result<Outcome> {
    let ms = ModeSpace::new(plan.mu, plan.r, plan.m_max)?;
    match &plan.params {
        Params::Qsymbol(p) => qsymbol_experiment(plan, &ms, p),
        Params::Clock(p) => clock_experiment(plan, &ms, p),
        Params::Noise(p) => noise_experiment(plan, &ms, p),
        Params::Sagnac(p) => sagnac_experiment(plan, &ms, p),
        Params::MiScan(p) => mi_scan_experiment(plan, &ms, p),
        Params::AmplitudeCheck(p) => amplitude_check_experiment(plan, &ms, p),
        Params::Kolmogorov(p) => kolmogorov_experiment(plan, &ms, p),
    }
}

pub fn build_state(spec: &StateSpec, ms: &ModeSpace) -> Result<RingState> {
    match spec {
        &StateSpec::Coherent { xi, alpha, theta } => coherent_state(ms, &CoherentParams::new(theta, xi, alpha)?),
        &StateSpec::GaussianLine { p, sigma, family, theta } => {
            line_state_on_ring(ms, &LineState::new(p, sigma, family)?, theta)
        }
        StateSpec::ModeList { modes } => {
            let list: Vec<_> = modes.iter().map(|a| (a.m, Complex64::new(a.re, a.im))).collect();
            RingState::from_modes(ms, &list)
        }
        StateSpec::Symmetric { base } => symmetrized(&build_state(base, ms)?, ms),
    }
}

// symmetric_superposition works on a unit massless ring; move the coefficients back onto ms
fn symmetrized(state: &RingState, ms: &ModeSpace) -> Result<RingState> {
    let sym = symmetric_superposition(state)?;
    RingState::pure(ms, sym.coefficients().expect("pure").to_vec())
}

pub fn build_detector(spec: &DetectorSpec, ms: &ModeSpace) -> Result<LocalizationMatrix> {
    let range = match spec.window {
        Some([lo, hi]) => lo..=hi,
        None => ms.modes(),
    };
    match &spec.kernel {
        None => Ok(LocalizationMatrix::maximal(range)),
        Some(k) => localization_matrix(k, ms, None, range),
    }
}

fn qsymbol_experiment(plan: &Plan, ms: &ModeSpace, p: &QsymbolParams) -> Result<Outcome> {
    let ts = timescales(ms, p.xi, p.alpha);
    let cp = CoherentParams::new(p.theta, p.xi, p.alpha)?;
    let amp = StateAmplitude::new(&coherent_state(ms, &cp)?, ms)?;
    let mut truncation = BTreeMap::new();
    truncation.insert("amplitude".to_string(), amp.truncation_remainder());
    let mut tables = Vec::new();
    let mut snaps = Vec::new();
    let line = LineState::gaussian(p.xi / ms.r, cp.line_sigma(ms.r))?;
    let fwhm_factor = 2.0 * (2.0 * 2f64.ln()).sqrt();
    for s in &p.snapshots {
        let t = s.t.or(s.t_over_tq.map(|f| f * ts.t_q)).or(s.t_over_trec.map(|f| f * ts.t_rec)).unwrap();
        let snap = qsymbol_snapshot(ms, p.xi, p.alpha, p.phi, t, plan.grid.n_theta.unwrap_or(4096))?;
        let sigma_t = spread_at_time(&line, ms, t);
        let mut table = Table::new(format!("{}-{}", plan.stem, s.label), &["theta", "q"])
            .meta("t", t)
            .meta("t_over_tq", t / ts.t_q)
            .meta("t_over_trec", t / ts.t_rec)
            .meta("phi", p.phi);
        for (th, q) in snap.thetas.iter().zip(&snap.values) {
            table.push(vec![Cell::Num(*th), Cell::Num(*q)]);
        }
        tables.push(table);
        snaps.push(json!({
            "label": s.label,
            "t": t,
            "t_over_tq": t / ts.t_q,
            "t_over_trec": t / ts.t_rec,
            "peaks": snap.peaks.len(),
            "peak_theta": snap.peak_theta,
            "peak_fwhm": snap.peak_fwhm,
            "semiclassical_fwhm": fwhm_factor * sigma_t / ms.r,
            "dominant_fraction": snap.dominant_fraction,
        }));
    }
    if p.snapshots.is_empty() {
        let times = plan.times();
        let mut cols = vec!["t", "q"];
        if p.images {
            cols.push("q_images");
        }
        let q: Vec<f64> = times.par_iter().map(|&t| amp.eval(t, p.phi).norm_sqr()).collect();
        let images = if p.images {
            Some(times.par_iter().map(|&t| qsymbol_images(ms, &cp, t, p.phi)).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let mut table = Table::new(plan.stem.clone(), &cols).meta("theta", p.theta).meta("phi", p.phi);
        for (k, &t) in times.iter().enumerate() {
            let mut row = vec![Cell::Num(t), Cell::Num(q[k])];
            if let Some(im) = &images {
                row.push(Cell::Num(im[k]));
            }
            table.push(row);
        }
        if p.images {
            table = table.plot(0, vec![1, 2]);
        }
        tables.push(table);
    }
    Ok(Outcome { tables, summary: json!({ "timescales": ts, "snapshots": snaps }), truncation })
}

fn clock_experiment(plan: &Plan, ms: &ModeSpace, p: &ClockParams) -> Result<Outcome> {
    let state = build_state(&p.state, ms)?;
    let det = build_detector(&p.detector, ms)?;
    let ev = DensityEvaluator::new(&state, &det, ms, None, plan.normalization)?;
    let times = plan.times();
    let grid = ev.grid(&times, &[p.phi])?;
    let w = cumulative(&times, &grid.density);
    let mut table = Table::new(plan.stem.clone(), &["t", "t_over_2pir", "density", "w"]).meta("phi", p.phi).plot(1, vec![3]);
    for (k, &t) in times.iter().enumerate() {
        table.push(vec![t.into(), (t / (2.0 * PI * ms.r)).into(), grid.density[k].into(), w[k].into()]);
    }
    let tau = match p.state {
        StateSpec::Coherent { xi, alpha, .. } => timescales(ms, xi, alpha).tau,
        _ => {
            let tps = TwoParticleState::product(state.clone(), *ms, state.clone(), *ms)?;
            tps.circulation_period(0)
        }
    };
    let opts = TickOptions { prominence: p.prominence.unwrap_or(TickOptions::default().prominence) };
    let train = extract_ticks(&times, &grid.density, opts)?;
    let mut ticks = Table::new(format!("{}-ticks", plan.stem), &["index", "t", "weight", "width", "height", "resolved"])
        .plot(1, vec![2]);
    for (i, k) in train.ticks.iter().enumerate() {
        ticks.push(vec![Cell::Int(i as i64), k.t.into(), k.weight.into(), k.width.into(), k.height.into(), k.resolved.into()]);
    }
    let report = match clock_quality(&train, tau) {
        Ok(r) => serde_json::to_value(r).unwrap_or(Value::Null),
        Err(e) => json!({ "error": e.to_string(), "ticks": train.ticks.len() }),
    };
    let mut truncation = BTreeMap::new();
    truncation.insert("density".to_string(), ev.truncation_error());
    Ok(Outcome {
        tables: vec![table, ticks],
        summary: json!({ "tau": tau, "total_probability": w.last().copied().unwrap_or(0.0), "report": report }),
        truncation,
    })
}

fn noise_experiment(plan: &Plan, ms: &ModeSpace, p: &NoiseParams) -> Result<Outcome> {
    let grid = p.omega_d_r.resolve();
    let mut tables = Vec::new();
    let mut curves = Vec::new();
    for &a in &p.a {
        let dk = DetectorKernel::ring_exponential(1.0, a)?;
        let c = noise_curve(&dk, ms, &grid)?;
        let mut t = Table::new(format!("{}-a{a}", plan.stem), &["omega_d_r", "eta", "eta_closed_form"])
            .meta("a", a)
            .meta("method", c.method)
            .plot(0, vec![1, 2]);
        let mut worst: f64 = 0.0;
        for k in 0..grid.len() {
            t.push(vec![grid[k].into(), c.eta[k].into(), c.closed_form[k].into()]);
            if let Some(cf) = c.closed_form[k] {
                worst = worst.max((c.eta[k] - cf).abs());
            }
        }
        tables.push(t);
        curves.push(json!({ "a": a, "max_closed_form_deviation": worst, "eta_max": c.eta.iter().copied().fold(f64::NAN, f64::max) }));
    }
    Ok(Outcome { tables, summary: json!({ "curves": curves }), truncation: BTreeMap::new() })
}

fn sagnac_experiment(plan: &Plan, ms: &ModeSpace, p: &SagnacParams) -> Result<Outcome> {
    let mut state = build_state(&p.state, ms)?;
    if p.symmetrize {
        state = symmetrized(&state, ms)?;
    }
    let rf = RotationFrame::new(p.omega_d, *ms)?;
    let times = plan.times();
    let scan = sagnac_scan(&state, &rf, &times, plan.normalization)?;
    let mut t = Table::new(plan.stem.clone(), &["t", "density", "envelope", "fringe_phase"])
        .meta("omega_d", p.omega_d)
        .plot(0, vec![1, 2]);
    for k in 0..times.len() {
        t.push(vec![times[k].into(), scan.density[k].into(), scan.envelope[k].into(), scan.fringe_phase[k].into()]);
    }
    let mut f = Table::new(format!("{}-fringes", plan.stem), &["t", "signal", "phase", "visibility"]).plot(0, vec![1, 3]);
    for s in &scan.fringes {
        f.push(vec![s.t.into(), s.signal.into(), s.phase.into(), s.visibility.into()]);
    }
    let rel = scan.crossing_frequency.map(|w| (w / scan.expected_frequency - 1.0).abs());
    Ok(Outcome {
        tables: vec![t, f],
        summary: json!({
            "expected_frequency": scan.expected_frequency,
            "crossing_frequency": scan.crossing_frequency,
            "phase_frequency": scan.phase_frequency,
            "crossing_relative_error": rel,
            "mean_visibility": scan.mean_visibility,
            "fringes": scan.fringes.len(),
        }),
        truncation: BTreeMap::new(),
    })
}

fn two_particle(pairing: Pairing, states: &[StateSpec; 2], ms: &ModeSpace) -> Result<TwoParticleState> {
    let (a, b) = (build_state(&states[0], ms)?, build_state(&states[1], ms)?);
    match pairing {
        Pairing::Product => TwoParticleState::product(a, *ms, b, *ms),
        Pairing::Symmetrized => TwoParticleState::symmetrized(a, b, *ms),
    }
}

fn mi_scan_experiment(plan: &Plan, ms: &ModeSpace, p: &MiScanParams) -> Result<Outcome> {
    let tps = two_particle(p.pairing, &p.states, ms)?;
    let det = build_detector(&p.detector, ms)?;
    let mut grid = ScanGrid::new(p.t1.resolve(), plan.times(), p.phi1, p.phi2);
    if let Some(f) = p.floor {
        grid.floor = f;
    }
    let rep = violation_scan(&tps, &det, &grid)?;
    let mut t = Table::new(plan.stem.clone(), &["t1", "t2", "p2", "margin_j", "margin_cs", "violated_j", "violated_cs"])
        .meta("b", tps.b())
        .meta("lambda", tps.lambda())
        .meta("phi1", p.phi1)
        .meta("phi2", p.phi2)
        .plot(1, vec![3, 4]);
    for r in &rep.rows {
        t.push(vec![
            r.t1.into(),
            r.t2.into(),
            r.p2.into(),
            r.margin_j.into(),
            r.margin_cs.into(),
            r.violated_j.into(),
            r.violated_cs.into(),
        ]);
    }
    let ratio_j = rep.rows.iter().filter(|r| r.ratio_j.is_some_and(|x| x.violated)).count();
    let ratio_cs = rep.rows.iter().filter(|r| r.ratio_cs.is_some_and(|x| x.violated)).count();
    Ok(Outcome {
        tables: vec![t],
        summary: json!({
            "pairing": p.pairing,
            "b": tps.b(),
            "lambda": tps.lambda(),
            "points": rep.rows.len(),
            "violations_j": rep.count(Inequality::J),
            "violations_cs": rep.count(Inequality::Cs),
            "ratio_flags_j": ratio_j,
            "ratio_flags_cs": ratio_cs,
            "floor": grid.floor,
        }),
        truncation: BTreeMap::new(),
    })
}

fn amplitude_check_experiment(plan: &Plan, ms: &ModeSpace, p: &AmplitudeCheckParams) -> Result<Outcome> {
    let cp = CoherentParams::new(p.theta, p.xi, p.alpha)?;
    let amp = StateAmplitude::new(&coherent_state(ms, &cp)?, ms)?;
    let times = plan.times();
    let phis = plan.phis();
    let np = phis.len();
    let rows = (0..times.len() * np)
        .into_par_iter()
        .map(|k| {
            let (t, phi) = (times[k / np], phis[k % np]);
            let a = amp.eval(t, phi);
            let o = match p.oracle {
                Oracle::Poisson => amp_poisson(ms, &cp, t, phi, PoissonOptions::default())?.value,
                Oracle::MasslessClosedForm => amp_massless_coherent(ms, &cp, t, phi)?,
            };
            Ok((t, phi, a, o))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        plan.stem.clone(),
        &["t", "phi", "mode_sum_re", "mode_sum_im", "oracle_re", "oracle_im", "abs_dev"],
    )
    .plot(0, vec![6]);
    let (mut top, mut dev): (f64, f64) = (0.0, 0.0);
    for &(t, phi, a, o) in &rows {
        top = top.max(a.norm());
        dev = dev.max((a - o).norm());
        table.push(vec![t.into(), phi.into(), a.re.into(), a.im.into(), o.re.into(), o.im.into(), (a - o).norm().into()]);
    }
    let mut truncation = BTreeMap::new();
    truncation.insert("amplitude".to_string(), amp.truncation_remainder());
    Ok(Outcome {
        tables: vec![table],
        summary: json!({
            "oracle": p.oracle,
            "points": rows.len(),
            "max_abs_deviation": dev,
            "max_amplitude": top,
            "max_rel_deviation": if top > 0.0 { dev / top } else { dev },
        }),
        truncation,
    })
}

fn kolmogorov_experiment(plan: &Plan, ms: &ModeSpace, p: &KolmogorovParams) -> Result<Outcome> {
    let tps = two_particle(p.pairing, &p.states, ms)?;
    let det = build_detector(&p.detector, ms)?;
    let opts = KolmogorovOptions {
        t1_start: p.t1_start,
        window: p.window.unwrap_or_else(|| tps.circulation_period(0)),
        n_t1: p.n_t1,
        t2: plan.times(),
    };
    let rep = kolmogorov_check(&tps, &det, &det, p.phi1, p.phi2, &opts)?;
    let mut t = Table::new(plan.stem.clone(), &["t2", "integral", "marginal", "deviation"])
        .meta("window", rep.window)
        .meta("period", rep.period)
        .plot(0, vec![1, 2]);
    for k in 0..rep.t2.len() {
        t.push(vec![
            rep.t2[k].into(),
            rep.integral[k].into(),
            rep.marginal[k].into(),
            (rep.integral[k] - rep.marginal[k]).into(),
        ]);
    }
    Ok(Outcome {
        tables: vec![t],
        summary: json!({
            "pairing": p.pairing,
            "b": tps.b(),
            "window": rep.window,
            "period": rep.period,
            "max_rel_deviation": rep.max_rel_deviation,
        }),
        truncation: BTreeMap::new(),
    })
}
