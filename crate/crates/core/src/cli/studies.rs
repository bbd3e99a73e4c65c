use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::Scenario;
use super::output::{FirstNegative, LowerBound, Status, Table, Verdict};
use super::{model_hash, CliError};
use crate::fluctuation::{
    bath_energies, fd16_x_derivative_check, mode_integrals, sample_from_parts, EnergyFunction,
    EnergyVariant, FluctuationSample,
};
use crate::master::{
    appendix2_bracket, appendix2_construct, lindblad39_residual, master_moments, reversible_moments,
    reversible_moments_constant, solve_w, uncertainty43_residual, CoefficientValues,
    ConstantCoefficients, UllersmaMatched, W3Sign, WState,
};
use crate::model::{random_valid_model, OscillatorBathModel, RandomModelSpec};
use crate::moments::{appendix1_from_sample, delta_from_parts, evolve_from_parts, rs_residual, GaussianMomentState};
use crate::par::{self, Execution};
use crate::propagator::{decompose, propagator_at, scan_decomposed, PropagatorSample, SpectralDecomposition};

const INEQ_TOL: f64 = 1e-10;

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    pub model: OscillatorBathModel,
    pub decomp: SpectralDecomposition,
    pub hash: String,
    pub seed: u64,
    pub exec: Execution,
    pub grid: Vec<f64>,
    pub states: Vec<(String, GaussianMomentState)>,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario, seed: u64, exec: Execution) -> Result<Self, CliError> {
        scenario.check()?;
        let model = scenario.model.build()?;
        let decomp = decompose(&model)?;
        let states = scenario
            .initial_states
            .iter()
            .map(|s| s.resolve(&model))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            scenario,
            hash: model_hash(&model),
            grid: par::time_grid(scenario.t_max, scenario.n_steps),
            model,
            decomp,
            seed,
            exec,
            states,
        })
    }

    fn temperatures(&self) -> &[f64] {
        &self.scenario.temperatures
    }

    /// Temperatures in ascending order, for monotonicity checks.
    fn sorted_temperatures(&self) -> Vec<f64> {
        let mut t = self.temperatures().to_vec();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

pub struct StudyResult {
    pub table: Table,
    pub verdicts: Vec<Verdict>,
    pub extra_files: Vec<(String, String)>,
}

impl StudyResult {
    fn new(table: Table, verdicts: Vec<Verdict>) -> Self {
        Self {
            table,
            verdicts,
            extra_files: Vec::new(),
        }
    }
}

pub fn run_study(name: &str, ctx: &Context) -> Result<StudyResult, CliError> {
    match name {
        "fd-scan" => fd_scan(ctx),
        "fd16-check" => fd16_check(ctx),
        "d-scan" => d_scan(ctx),
        "moments" => moments_study(ctx),
        "neg-dissipation-search" => neg_dissipation_search(ctx),
        "continuum-study" => continuum_study(ctx),
        "appendix2-demo" => appendix2_demo(ctx),
        "appendix1-check" => appendix1_study(ctx),
        other => Err(CliError::Config(format!("unknown study {other:?}"))),
    }
}

/// Propagator and per-energy fluctuation samples at one time.
fn samples_at<E: EnergyFunction + ?Sized>(
    ctx: &Context,
    t: f64,
    sets: &[(&E, f64, Vec<f64>)],
) -> (PropagatorSample, Vec<FluctuationSample>) {
    let prop = propagator_at(&ctx.decomp, t);
    let mi = mode_integrals(&ctx.decomp, &ctx.model, t);
    let fl = sets
        .iter()
        .map(|(_, x, energies)| sample_from_parts(&prop, &mi, &ctx.model, energies, *x).0)
        .collect();
    (prop, fl)
}

/// One energy variant at one parameter value, with its per-mode energies.
type EnergySet<'e> = (&'e EnergyVariant, f64, Vec<f64>);

fn energy_sets<'e>(
    model: &OscillatorBathModel,
    variants: &[&'e EnergyVariant],
    temps: &[f64],
) -> Result<Vec<EnergySet<'e>>, CliError> {
    let mut out = Vec::new();
    for v in variants {
        for &t in temps {
            out.push((*v, t, bath_energies(model, *v, t)?));
        }
    }
    Ok(out)
}

fn fd_scan(ctx: &Context) -> Result<StudyResult, CliError> {
    let energy = ctx.scenario.energy()?;
    let temps = ctx.temperatures().to_vec();
    let sets = energy_sets(&ctx.model, &[&energy, &EnergyVariant::Thermal], &temps)?;
    let nt = temps.len();
    let cells = par::map(&ctx.grid, ctx.exec, |&t| samples_at(ctx, t, &sets));

    let mut table = Table::new(&[
        "model_hash", "T", "t", "A", "Adot", "R2", "X", "Xdot", "Y", "fd15_lhs", "fd17_residual", "ref2_residual",
    ]);
    let mut fd15 = LowerBound::new(INEQ_TOL);
    let mut fd17 = LowerBound::new(INEQ_TOL);
    let mut ref2 = vec![FirstNegative::new(INEQ_TOL); nt];
    let mut fd17_ok = vec![true; nt];
    for (ti, &temp) in temps.iter().enumerate() {
        for (&t, (prop, fl)) in ctx.grid.iter().zip(&cells) {
            let (e, th) = (&fl[ti], &fl[nt + ti]);
            fd15.record(e.fd_residual(), e.scale(), t, temp);
            fd17.record(th.fd_residual(), th.scale(), t, temp);
            fd17_ok[ti] &= th.fd_residual() >= -INEQ_TOL * th.scale();
            ref2[ti].record(th.ref2_residual(), th.scale(), t, temp);
            table.push(vec![
                ctx.hash.as_str().into(),
                temp.into(),
                t.into(),
                prop.a.into(),
                prop.a_dot.into(),
                prop.r2.into(),
                th.x.into(),
                th.x_dot.into(),
                th.y.into(),
                e.fd_residual().into(),
                th.fd_residual().into(),
                th.ref2_residual().into(),
            ]);
        }
    }
    let mut verdicts = vec![fd17.verdict("fd17: XY - Xdot^2/4 >= (hbar^2/4)(1-R^2)^2")];
    let claim15 = format!("fd15[{energy}] >= 0");
    verdicts.push(if energy.satisfies_constraints() {
        fd15.verdict(&claim15)
    } else {
        fd15.informational(&claim15, "energy function does not satisfy the constraints")
    });
    if energy.satisfies_constraints() && nt >= 2 {
        verdicts.push(monotone_in_x(ctx, &temps, &cells, "fd15 non-decreasing in x"));
    }
    let mut found = FirstNegative::default();
    for (ti, r) in ref2.iter().enumerate() {
        if fd17_ok[ti] {
            if let Some((v, t, temp)) = r.first {
                found.record(v, 0.0, t, temp);
            }
        }
    }
    verdicts.push(
        found
            .verdict("ref2 residual negative while fd17 holds", Status::NotApplicable)
            .with_detail(match found.first {
                Some((_, t, _)) => format!("first at t = {t}"),
                None => "not observed for this scenario".into(),
            }),
    );
    Ok(StudyResult::new(table, verdicts))
}

fn monotone_in_x(
    ctx: &Context,
    temps: &[f64],
    cells: &[(PropagatorSample, Vec<FluctuationSample>)],
    claim: &str,
) -> Verdict {
    let order = ctx.sorted_temperatures();
    let idx: Vec<usize> = order
        .iter()
        .map(|x| temps.iter().position(|t| t == x).expect("temperature present"))
        .collect();
    let mut bound = LowerBound::new(INEQ_TOL);
    for (&t, (_, fl)) in ctx.grid.iter().zip(cells) {
        for w in idx.windows(2) {
            let (lo, hi) = (&fl[w[0]], &fl[w[1]]);
            let scale = lo.scale().max(hi.scale());
            bound.record(hi.fd_residual() - lo.fd_residual(), scale, t, hi.param);
        }
    }
    bound.verdict(claim)
}

fn fd16_check(ctx: &Context) -> Result<StudyResult, CliError> {
    let energy = ctx.scenario.energy()?;
    let cfg = ctx.scenario.fd16.clone().unwrap_or_default();
    let xs = cfg.x_values.clone().unwrap_or_else(|| ctx.temperatures().to_vec());
    let cells: Vec<(f64, f64)> = xs
        .iter()
        .flat_map(|&x| ctx.grid.iter().map(move |&t| (x, t)))
        .collect();
    let checks = par::try_map(&cells, ctx.exec, |&(x, t)| {
        fd16_x_derivative_check(&ctx.decomp, &ctx.model, &energy, x, t, cfg.dx)
    })?;

    let mut table = Table::new(&["model_hash", "T", "t", "numeric", "closed_form", "abs_diff", "tolerance"]);
    let mut identity = LowerBound::new(0.0);
    let mut nonneg = LowerBound::new(1e-12);
    for (&(x, t), c) in cells.iter().zip(&checks) {
        let diff = (c.numeric - c.closed_form).abs();
        let tol = 1e-7f64.max(1e-5 * c.closed_form.abs());
        identity.record(tol - diff, 1.0, t, x);
        nonneg.record(c.closed_form, c.numeric.abs(), t, x);
        table.push(vec![
            ctx.hash.as_str().into(),
            x.into(),
            t.into(),
            c.numeric.into(),
            c.closed_form.into(),
            diff.into(),
            tol.into(),
        ]);
    }
    let verdicts = vec![
        identity
            .verdict("fd16: finite-difference x-derivative matches the double mode sum")
            .with_detail("worst_residual is tolerance minus |difference|"),
        nonneg.verdict("fd16: closed-form x-derivative >= 0"),
    ];
    Ok(StudyResult::new(table, verdicts))
}

fn d_scan(ctx: &Context) -> Result<StudyResult, CliError> {
    let energy = ctx.scenario.energy()?;
    let temps = ctx.temperatures().to_vec();
    let sets = energy_sets(&ctx.model, &[&energy], &temps)?;
    let cells = par::map(&ctx.grid, ctx.exec, |&t| samples_at(ctx, t, &sets));
    let m0 = ctx.model.m0;

    let mut table = Table::new(&["model_hash", "state", "T", "t", "R2", "D", "D_delta"]);
    let mut nonneg = LowerBound::new(INEQ_TOL);
    let mut at_zero = LowerBound::new(0.0);
    let mut independent = LowerBound::new(0.0);
    for (label, state) in &ctx.states {
        for (ti, &temp) in temps.iter().enumerate() {
            for (&t, (prop, fl)) in ctx.grid.iter().zip(&cells) {
                let f = &fl[ti];
                let d = f.fd_residual();
                let d_delta = if prop.r2 > 0.0 {
                    delta_from_parts(prop, f, m0, state)?.d_value
                } else {
                    f64::NAN
                };
                nonneg.record(d, f.scale(), t, temp);
                if t == 0.0 {
                    at_zero.record(-d.abs(), 1.0, t, temp);
                }
                if d_delta.is_finite() {
                    independent.record(1e-9 * f.scale() - (d_delta - d).abs(), 1.0, t, temp);
                }
                table.push(vec![
                    ctx.hash.as_str().into(),
                    label.as_str().into(),
                    temp.into(),
                    t.into(),
                    prop.r2.into(),
                    d.into(),
                    d_delta.into(),
                ]);
            }
        }
    }
    let claim = format!("D[{energy}] >= 0");
    let mut verdicts = vec![if energy.satisfies_constraints() {
        nonneg.verdict(&claim)
    } else {
        nonneg.informational(&claim, "energy function does not satisfy the constraints")
    }];
    verdicts.push(at_zero.verdict("D(0) = 0"));
    verdicts.push(
        independent
            .verdict("D is independent of the initial state")
            .with_detail(format!(
                "{} states; worst_residual is 1e-9*scale minus |D_delta - D|",
                ctx.states.len()
            )),
    );
    if energy.satisfies_constraints() && temps.len() >= 2 {
        verdicts.push(monotone_in_x(ctx, &temps, &cells, "D non-decreasing in T"));
    } else {
        verdicts.push(Verdict::new("D non-decreasing in T", Status::NotApplicable));
    }
    Ok(StudyResult::new(table, verdicts))
}

fn rel_diff(a: &GaussianMomentState, b: &GaussianMomentState) -> f64 {
    let cross = (b.qq * b.pp).abs().sqrt();
    ((a.qq - b.qq).abs() / b.qq.abs())
        .max((a.pp - b.pp).abs() / b.pp.abs())
        .max((a.qp_sym - b.qp_sym).abs() / b.qp_sym.abs().max(cross))
}

fn w_scale(w: &WState, hbar: f64) -> f64 {
    let g = w.w4.exp_m1() / (4.0 * hbar);
    (w.w1 * w.w2).abs().max(w.w3 * w.w3).max(g * g)
}

fn moments_study(ctx: &Context) -> Result<StudyResult, CliError> {
    let cfg = ctx.scenario.master.clone().unwrap_or_default();
    let hbar = ctx.model.hbar;
    let mut table = Table::new(&[
        "model_hash", "state", "T", "t", "R2", "qq", "pp", "qp_sym", "master_qq", "master_pp", "master_qp_sym",
        "max_rel_diff", "rs_residual", "w1", "w2", "w3", "w4", "lindblad39", "uncertainty43",
    ]);
    let mut cross = LowerBound::new(0.0);
    let mut rs = LowerBound::new(INEQ_TOL);
    let mut lind = LowerBound::new(INEQ_TOL);
    let mut unc = LowerBound::new(INEQ_TOL);
    let mut notes = Vec::new();

    if cfg.preset == "constant" {
        let coeffs = ConstantCoefficients {
            values: CoefficientValues {
                b11: cfg.b11,
                b12: cfg.b12,
                b22: cfg.b22,
                k1: cfg.k1,
                k2: cfg.k2,
                k3: Complex64::new(cfg.k3_re, cfg.k3_im),
            },
            hbar,
        };
        let ws = solve_w(&coeffs, &ctx.grid)?;
        for (label, state) in &ctx.states {
            for w in &ws {
                let rev = reversible_moments_constant(cfg.b11, cfg.b12, cfg.b22, state, w.t);
                let mm = master_moments(w, &rev, hbar);
                let rsv = rs_residual(&mm, hbar);
                let l = lindblad39_residual(w, hbar);
                let u = uncertainty43_residual(w, &rev, &mm, hbar);
                rs.record(rsv, hbar * hbar, w.t, f64::NAN);
                lind.record(l, w_scale(w, hbar), w.t, f64::NAN);
                unc.record(u, 4.0 * hbar.powi(4) * w_scale(w, hbar), w.t, f64::NAN);
                let nan = f64::NAN;
                table.push(vec![
                    ctx.hash.as_str().into(),
                    label.as_str().into(),
                    nan.into(),
                    w.t.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    mm.qq.into(),
                    mm.pp.into(),
                    mm.qp_sym.into(),
                    nan.into(),
                    rsv.into(),
                    w.w1.into(),
                    w.w2.into(),
                    w.w3.into(),
                    w.w4.into(),
                    l.into(),
                    u.into(),
                ]);
            }
        }
        let mut verdicts = vec![Verdict::new("direct and master-route moments agree", Status::NotApplicable)
            .with_detail("constant coefficients have no direct route")];
        verdicts.push(rs.verdict("Robertson-Schroedinger residual of master-route moments >= 0"));
        verdicts.push(lind.verdict("lindblad39 residual >= 0"));
        verdicts.push(unc.verdict("uncertainty43 residual >= 0"));
        return Ok(StudyResult::new(table, verdicts));
    }

    // the matched generator exists only while R^2 > 0
    let usable = ctx
        .grid
        .iter()
        .take_while(|&&t| propagator_at(&ctx.decomp, t).r2 > 0.0)
        .count();
    if usable < ctx.grid.len() {
        notes.push(format!(
            "R^2 <= 0 from t = {}; master route evaluated on the first {usable} grid points",
            ctx.grid[usable]
        ));
    }
    let grid = &ctx.grid[..usable];
    let temps = ctx.temperatures().to_vec();
    let matched: Vec<UllersmaMatched> = temps
        .iter()
        .map(|&temp| UllersmaMatched::with_decomposition(ctx.model.clone(), ctx.decomp.clone(), temp))
        .collect::<Result<_, _>>()?;
    let w_runs = par::try_map(&matched, ctx.exec, |um| solve_w(um, grid))?;
    let jobs: Vec<(usize, usize)> = (0..ctx.states.len())
        .flat_map(|s| (0..temps.len()).map(move |ti| (s, ti)))
        .collect();
    let rev_runs = par::try_map(&jobs, ctx.exec, |&(s, ti)| reversible_moments(&matched[ti], &ctx.states[s].1, grid))?;
    let sets = energy_sets(&ctx.model, &[&EnergyVariant::Thermal], &temps)?;
    let cells = par::map(grid, ctx.exec, |&t| samples_at(ctx, t, &sets));

    for (&(s, ti), revs) in jobs.iter().zip(&rev_runs) {
        let (label, state) = &ctx.states[s];
        let temp = temps[ti];
        for ((w, rev), (prop, fl)) in w_runs[ti].iter().zip(revs).zip(&cells) {
            let t = w.t;
            let ev = evolve_from_parts(prop, &fl[ti], ctx.model.m0, state);
            let mm = master_moments(w, rev, hbar);
            let rd = rel_diff(&mm, &ev);
            let rsv = rs_residual(&ev, hbar);
            let l = lindblad39_residual(w, hbar);
            let u = uncertainty43_residual(w, rev, &mm, hbar);
            cross.record(1e-8 - rd, 1.0, t, temp);
            rs.record(rsv, hbar * hbar, t, temp);
            lind.record(l, w_scale(w, hbar), t, temp);
            unc.record(u, 4.0 * hbar.powi(4) * w_scale(w, hbar), t, temp);
            table.push(vec![
                ctx.hash.as_str().into(),
                label.as_str().into(),
                temp.into(),
                t.into(),
                prop.r2.into(),
                ev.qq.into(),
                ev.pp.into(),
                ev.qp_sym.into(),
                mm.qq.into(),
                mm.pp.into(),
                mm.qp_sym.into(),
                rd.into(),
                rsv.into(),
                w.w1.into(),
                w.w2.into(),
                w.w3.into(),
                w.w4.into(),
                l.into(),
                u.into(),
            ]);
        }
    }
    let mut first = cross
        .verdict("direct and master-route moments agree to 1e-8 relative")
        .with_detail("worst_residual is 1e-8 minus the relative difference");
    if !notes.is_empty() {
        first = first.with_detail(notes.join("; "));
    }
    let verdicts = vec![
        first,
        rs.verdict("Robertson-Schroedinger residual >= 0"),
        lind.verdict("lindblad39 residual >= 0"),
        unc.verdict("uncertainty43 residual >= 0"),
    ];
    Ok(StudyResult::new(table, verdicts))
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| super::output::format_number(*x))
        .collect::<Vec<_>>()
        .join(";")
}

fn neg_dissipation_search(ctx: &Context) -> Result<StudyResult, CliError> {
    let cfg = ctx.scenario.search.clone().unwrap_or_default();
    let base = &ctx.model;
    let spec = RandomModelSpec {
        omega0: base.omega0,
        omega_range: (cfg.omega_min, cfg.omega_max),
        coupling_fraction: (cfg.coupling_min, cfg.coupling_max),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let candidates: Vec<OscillatorBathModel> = (0..cfg.trials)
        .map(|_| {
            let n = rng.random_range(1..=cfg.max_modes);
            random_valid_model(&mut rng, n, &spec).with_units(base.m0, base.hbar, base.boltzmann)
        })
        .collect();
    let (t_max, n_steps) = (ctx.scenario.t_max, ctx.scenario.n_steps);
    let scans = par::try_map(&candidates, ctx.exec, |m| {
        let d = decompose(&m.clone().validated()?)?;
        Ok::<_, crate::Error>(scan_decomposed(&d, t_max, n_steps))
    })?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scans[a].value.total_cmp(&scans[b].value).then(a.cmp(&b)));

    let mut table = Table::new(&[
        "rank", "trial", "model_hash", "T", "t", "min_one_minus_r2", "omega0", "n_modes", "omegas", "epsilons",
    ]);
    for (rank, &i) in order.iter().take(cfg.keep.max(1)).enumerate() {
        let m = &candidates[i];
        table.push(vec![
            rank.into(),
            i.into(),
            model_hash(m).into(),
            f64::NAN.into(),
            scans[i].t.into(),
            scans[i].value.into(),
            m.omega0.into(),
            m.n_modes().into(),
            join(&m.bath_omegas).into(),
            join(&m.bath_epsilons).into(),
        ]);
    }
    let budget = format!(
        "seed {}, {} trials, N <= {}, t in [0, {t_max}] with {n_steps} steps",
        ctx.seed, cfg.trials, cfg.max_modes
    );
    let mut verdicts = Vec::new();
    let mut extra = Vec::new();
    match order.first() {
        Some(&i) => {
            let best = scans[i];
            let status = if best.value < 0.0 { Status::Holds } else { Status::Violated };
            verdicts.push(
                Verdict::new("negative dissipation (1 - R^2 < 0) occurs for some valid model", status)
                    .with_point(best.value, best.t, f64::NAN)
                    .with_detail(format!("{budget}; best trial {i}, model {}", model_hash(&candidates[i]))),
            );
            let m = &candidates[i];
            let found = serde_json::json!({
                "name": format!("negative dissipation found by search (seed {}, trial {i})", ctx.seed),
                "study": "fd-scan",
                "model": {
                    "omega0": m.omega0,
                    "m0": m.m0,
                    "hbar": m.hbar,
                    "boltzmann": m.boltzmann,
                    "omegas": m.bath_omegas,
                    "epsilons": m.bath_epsilons,
                },
                "t_max": t_max,
                "n_steps": n_steps,
                "seed": ctx.seed,
            });
            extra.push((
                "neg-dissipation-search-best.json".to_owned(),
                serde_json::to_string_pretty(&found).expect("json") + "\n",
            ));
        }
        None => verdicts.push(
            Verdict::new("negative dissipation (1 - R^2 < 0) occurs for some valid model", Status::Violated)
                .with_detail(format!("{budget}; no trials run")),
        ),
    }
    Ok(StudyResult {
        table,
        verdicts,
        extra_files: extra,
    })
}

fn continuum_study(ctx: &Context) -> Result<StudyResult, CliError> {
    let variants = ctx.scenario.energies()?;
    let temps = ctx.temperatures().to_vec();
    let refs: Vec<&EnergyVariant> = variants.iter().collect();
    let sets = energy_sets(&ctx.model, &refs, &temps)?;
    let cells = par::map(&ctx.grid, ctx.exec, |&t| samples_at(ctx, t, &sets));
    let nt = temps.len();

    let mut table = Table::new(&[
        "model_hash", "energy", "T", "t", "R2", "X", "Xdot", "Y", "D", "ref2_residual",
    ]);
    let mut verdicts = Vec::new();
    for (vi, v) in variants.iter().enumerate() {
        let mut bound = LowerBound::new(INEQ_TOL);
        let mut neg = FirstNegative::new(INEQ_TOL);
        let mut ref2 = FirstNegative::default();
        for (ti, &temp) in temps.iter().enumerate() {
            let mut fd_ok = true;
            let mut ref2_here = FirstNegative::new(INEQ_TOL);
            for (&t, (prop, fl)) in ctx.grid.iter().zip(&cells) {
                let f = &fl[vi * nt + ti];
                let d = f.fd_residual();
                bound.record(d, f.scale(), t, temp);
                neg.record(d, f.scale(), t, temp);
                fd_ok &= d >= -INEQ_TOL * f.scale();
                ref2_here.record(f.ref2_residual(), f.scale(), t, temp);
                table.push(vec![
                    ctx.hash.as_str().into(),
                    v.as_str().into(),
                    temp.into(),
                    t.into(),
                    prop.r2.into(),
                    f.x.into(),
                    f.x_dot.into(),
                    f.y.into(),
                    d.into(),
                    f.ref2_residual().into(),
                ]);
            }
            if fd_ok {
                if let Some((r, t, temp)) = ref2_here.first {
                    ref2.record(r, 0.0, t, temp);
                }
            }
        }
        match v {
            EnergyVariant::Thermal => {
                verdicts.push(bound.verdict("thermal D >= 0"));
                verdicts.push(ref2.verdict(
                    "thermal ref2 residual < 0 at some time while fd17 holds on the whole grid",
                    Status::Violated,
                ));
            }
            other => verdicts.push(neg.verdict(&format!("{other} D < 0 at some time"), Status::Violated)),
        }
    }
    if let Some(r) = &ctx.scenario.model.drude {
        for v in &mut verdicts {
            let regime = if r.in_negativity_regime() { "alpha >= 3 Gamma" } else { "alpha < 3 Gamma" };
            let d = v.detail.take().map_or(regime.to_owned(), |d| format!("{d}; {regime}"));
            v.detail = Some(d);
        }
    }
    Ok(StudyResult::new(table, verdicts))
}

fn appendix2_demo(ctx: &Context) -> Result<StudyResult, CliError> {
    let cfg = ctx.scenario.appendix2.clone().unwrap_or_default();
    let m = &ctx.model;
    let hbar = m.hbar;
    let b11 = cfg.b11.unwrap_or(0.5 * m.m0 * m.omega0 * m.omega0);
    let b22 = cfg.b22.unwrap_or(0.5 / m.m0);
    let rate = cfg.w4_rate;

    let mut table = Table::new(&[
        "model_hash", "state", "split", "w3_sign", "T", "t", "w1", "w2", "w3", "w4", "lindblad39", "bracket",
        "product_residual",
    ]);
    let mut negative = LowerBound::new(0.0);
    let mut product = LowerBound::new(INEQ_TOL);
    let mut bracket = LowerBound::new(1e-12);
    for (label, state) in &ctx.states {
        for &split in &cfg.splits {
            for sign in [W3Sign::Positive, W3Sign::Negative] {
                let ws = appendix2_construct(|t| rate * t, split, sign, &ctx.grid, hbar)?;
                for w in &ws {
                    let rev = reversible_moments_constant(b11, cfg.b12, b22, state, w.t);
                    let mm = master_moments(w, &rev, hbar);
                    let p = mm.qq * mm.pp - 0.25 * hbar * hbar;
                    let l = lindblad39_residual(w, hbar);
                    let br = appendix2_bracket(w, hbar);
                    let g = w.w4.exp_m1();
                    let scale = (0.25 * g).max(2.0 * hbar * hbar * w.w1 * w.w2);
                    if w.t > 0.0 {
                        // strictly negative: record -l so any l >= 0 fails
                        negative.record(-l, 1.0, w.t, f64::NAN);
                        if l >= 0.0 {
                            negative.record(f64::NAN, 1.0, w.t, f64::NAN);
                        }
                    }
                    product.record(p, hbar * hbar, w.t, f64::NAN);
                    bracket.record(-br.abs(), scale, w.t, f64::NAN);
                    table.push(vec![
                        ctx.hash.as_str().into(),
                        label.as_str().into(),
                        split.into(),
                        match sign {
                            W3Sign::Positive => "+",
                            W3Sign::Negative => "-",
                        }
                        .into(),
                        f64::NAN.into(),
                        w.t.into(),
                        w.w1.into(),
                        w.w2.into(),
                        w.w3.into(),
                        w.w4.into(),
                        l.into(),
                        br.into(),
                        p.into(),
                    ]);
                }
            }
        }
    }
    let verdicts = vec![
        negative
            .verdict("lindblad39 residual < 0 for t > 0")
            .with_detail("worst_residual is the negated lindblad39 residual"),
        product.verdict("<q^2><p^2> - hbar^2/4 >= 0"),
        bracket.verdict("bracketed coefficient vanishes"),
    ];
    Ok(StudyResult::new(table, verdicts))
}

fn appendix1_study(ctx: &Context) -> Result<StudyResult, CliError> {
    let temps = ctx.temperatures().to_vec();
    let sets = energy_sets(&ctx.model, &[&EnergyVariant::Thermal], &temps)?;
    let cells = par::map(&ctx.grid, ctx.exec, |&t| samples_at(ctx, t, &sets));
    let mut table = Table::new(&[
        "model_hash", "T", "t", "R2", "special_moment_54", "derived_55", "fd17_residual", "status",
    ]);
    let mut b54 = LowerBound::new(INEQ_TOL);
    let mut b55 = LowerBound::new(INEQ_TOL);
    let mut skipped = 0usize;
    for (ti, &temp) in temps.iter().enumerate() {
        for (&t, (prop, fl)) in ctx.grid.iter().zip(&cells) {
            let f = &fl[ti];
            let row = match appendix1_from_sample(f, ctx.model.m0) {
                Ok(rep) => {
                    let scale = f.scale();
                    b54.record(rep.special_moment_inequality_54, scale, t, temp);
                    if 1.0 - rep.r2 >= 0.0 {
                        b55.record(rep.derived_55_residual, scale.sqrt(), t, temp);
                    }
                    (rep.special_moment_inequality_54, rep.derived_55_residual, "ok")
                }
                Err(_) => {
                    skipped += 1;
                    (f64::NAN, f64::NAN, "precondition-failed")
                }
            };
            table.push(vec![
                ctx.hash.as_str().into(),
                temp.into(),
                t.into(),
                prop.r2.into(),
                row.0.into(),
                row.1.into(),
                f.fd_residual().into(),
                row.2.into(),
            ]);
        }
    }
    let note = format!("{skipped} grid points skipped (R^2 <= 0 or 4XY - Xdot^2 <= 0)");
    let verdicts = vec![
        b54.verdict("special-moment product minus hbar^2/4 >= 0").with_detail(note.clone()),
        b55.verdict("sqrt(XY - Xdot^2/4) >= hbar(1 - R^2)/2 where 1 - R^2 >= 0").with_detail(note),
    ];
    Ok(StudyResult::new(table, verdicts))
}
