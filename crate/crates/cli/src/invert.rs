use serde::Serialize;
use tracegn::bounds::ToleranceBudget;
use tracegn::dcres::{
    synthesize, write_grid, DcResistivity, Grid2D, PdeSolver, SynthesisConfig, TrueModel, DEFAULT_SMOOTHING,
};
use tracegn::nls::{full_misfit, solve, GateRecord, Method, SolveReport, SolverConfig};

use crate::args::InvertArgs;
use crate::config::Resolver;
use crate::output::{num, out_dir, Run, MANIFEST};
use crate::{CliError, CliResult};

/// The one-line outcome of an inversion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InversionSummary {
    pub variant: String,
    pub example: String,
    pub preset: String,
    pub pde_solves: u64,
    pub final_sampled_misfit: Option<f64>,
    pub full_misfit: f64,
    pub rho: f64,
    pub termination: String,
    pub iterations: usize,
}

impl InversionSummary {
    pub fn line(&self) -> String {
        format!(
            "variant={} example={} preset={} pde_solves={} final_sampled_misfit={} full_misfit={} rho={} termination={} iterations={}",
            self.variant,
            self.example,
            self.preset,
            self.pde_solves,
            self.final_sampled_misfit.map_or("none".into(), num),
            num(self.full_misfit),
            num(self.rho),
            self.termination,
            self.iterations
        )
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    manifest: &'a str,
    summary: &'a InversionSummary,
    grid: Grid2D,
    p: usize,
    experiments: usize,
    receivers: usize,
    sigma: f64,
    synthesis_solves: u64,
    smoothing: f64,
    report: &'a SolveReport,
}

fn budget(
    res: &Resolver,
    name: &str,
    eps: Option<f64>,
    delta: Option<f64>,
    d: (f64, f64),
) -> CliResult<ToleranceBudget> {
    let e = res.get(&format!("{name}-eps"), eps, d.0)?;
    let dl = res.get(&format!("{name}-delta"), delta, d.1)?;
    Ok(ToleranceBudget::new(e, dl)?)
}

fn gate_cells(g: &Option<GateRecord>) -> [String; 3] {
    match g {
        Some(g) => [g.n.to_string(), num(g.phi), g.passed.to_string()],
        None => Default::default(),
    }
}

fn iterations_csv(rep: &SolveReport) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "k",
        "n_k",
        "exact_fit",
        "fit_misfit",
        "fit_misfit_after",
        "alpha",
        "step_decreased",
        "line_search_trials",
        "cg_iterations",
        "cv_n",
        "cv_phi_old",
        "cv_phi",
        "cv_passed",
        "uc_n",
        "uc_phi",
        "uc_passed",
        "stop_n",
        "stop_phi",
        "stop_passed",
        "solves",
    ]
    .map(String::from)
    .into();
    let rows = rep
        .iterations
        .iter()
        .map(|r| {
            let mut row = vec![
                r.k.to_string(),
                r.n_k.to_string(),
                r.exact_fit.to_string(),
                num(r.fit_misfit),
                num(r.fit_misfit_after),
                num(r.alpha),
                r.step_decreased.to_string(),
                r.line_search_trials.to_string(),
                r.cg_iterations.to_string(),
            ];
            let [n, phi, pass] = gate_cells(&r.cross_validation);
            row.extend([n, r.cross_validation.and_then(|g| g.phi_old).map_or(String::new(), num), phi, pass]);
            row.extend(gate_cells(&r.uncertainty_check));
            row.extend(gate_cells(&r.stopping));
            row.push(r.solves.to_string());
            row
        })
        .collect();
    (header, rows)
}

fn grid_file(grid: Grid2D, values: &[f64]) -> CliResult<String> {
    Ok(format!("# manifest: {MANIFEST}\n{}", write_grid(grid, values)?))
}

pub fn run(a: InvertArgs) -> CliResult<InversionSummary> {
    let res = Resolver::new(&a.common)?;
    let example = res.get("example", a.example, "E1".to_string())?;
    let model = TrueModel::parse(&example)?;
    let method = Method::parse(&res.get("variant", a.variant, "viii".to_string())?)?;
    let preset = res.get("preset", a.preset, "desk".to_string())?;
    let seed = res.get("seed", a.common.seed, 1)?;
    let data_seed = res.get("data-seed", a.data_seed, seed)?;
    let mut syn = SynthesisConfig::preset(&preset, model.clone(), data_seed)?;
    if let Some(n) = res.opt("grid", a.grid)? {
        syn.grid = Grid2D::square(n)?;
    }
    syn.p = res.get("p", a.p, syn.p)?;
    syn.fine_factor = res.get("fine-factor", a.fine_factor, syn.fine_factor)?;
    syn.noise_pct = res.get("noise", a.noise, syn.noise_pct)?;
    syn.tau = res.get("tau", a.tau, syn.tau)?;
    let solver = match res.get("solver", a.solver, "direct".to_string())?.as_str() {
        "direct" => PdeSolver::Direct,
        "cg" => {
            let tol = res.get("cg-tol", a.cg_tol, 1e-10)?;
            syn.cg_tol = Some(tol);
            PdeSolver::Cg { tol, max_iters: 20 * syn.grid.cells() * syn.fine_factor * syn.fine_factor }
        }
        other => return Err(CliError::config(format!("unknown solver {other:?}, expected direct or cg"))),
    };
    let smoothing = res.get("smoothing", a.smoothing, DEFAULT_SMOOTHING)?;
    let max_iters = res.get("max-iters", a.max_iters, 100)?;
    let n0 = res.get("n0", a.n0, 1)?;
    let kappa = res.get("kappa", a.kappa, 1.0)?;
    let cv = budget(&res, "cv", a.cv_eps, a.cv_delta, (0.05, 0.3))?;
    let uc = budget(&res, "uc", a.uc_eps, a.uc_delta, (0.1, 0.3))?;
    let stop = budget(&res, "stop", a.stop_eps, a.stop_delta, (0.1, 0.1))?;
    let pcg_iters = res.get("pcg-iters", a.pcg_iters, 20)?;
    let pcg_tol = res.get("pcg-tol", a.pcg_tol, 1e-3)?;
    let exact_when_saturated = res.get("exact-when-saturated", a.exact_when_saturated, true)?;
    let out = out_dir(&res, a.common.out)?;
    let run = Run::start("invert", &res, &out, seed)?;

    log::info!("synthesizing {} on {}x{} with p = {}", model.name(), syn.grid.nx(), syn.grid.ny(), syn.p);
    let ex = synthesize(&syn)?;
    let fm = DcResistivity::new(ex.layout.clone(), ex.transfer, solver).with_smoothing(smoothing)?;
    let ds = ex.dataset()?;
    let mut cfg = SolverConfig::new(method, ex.rho, seed);
    cfg.max_outer_iters = max_iters;
    cfg.n0 = n0;
    cfg.kappa = kappa;
    cfg.cv_budget = cv;
    cfg.uc_budget = uc;
    cfg.stop_budget = stop;
    cfg.pcg_iters = pcg_iters;
    cfg.pcg_tol = pcg_tol;
    cfg.exact_when_saturated = exact_when_saturated;
    log::info!("inverting {} experiments with method {}", ex.num_experiments(), method.name());
    let rep = solve(&fm, &ds, &cfg)?;
    let full = full_misfit(&fm, &ds, &rep.final_model)?;

    let summary = InversionSummary {
        variant: method.name().to_string(),
        example: model.name().to_string(),
        preset,
        pde_solves: rep.pde_solve_count,
        final_sampled_misfit: rep.final_estimate(),
        full_misfit: full,
        rho: ex.rho,
        termination: rep.termination.as_str().to_string(),
        iterations: rep.outer_iterations,
    };
    let file = ReportFile {
        manifest: MANIFEST,
        summary: &summary,
        grid: syn.grid,
        p: syn.p,
        experiments: ex.num_experiments(),
        receivers: ex.num_receivers(),
        sigma: ex.sigma,
        synthesis_solves: ex.synthesis_solves,
        smoothing,
        report: &rep,
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::numerical(format!("report: {e}")))?;
    run.write_text("report.json", &(json + "\n"))?;
    let (header, rows) = iterations_csv(&rep);
    run.write_csv("iterations.csv", &header, &rows)?;
    run.write_text("conductivity.grid", &grid_file(syn.grid, &fm.conductivity(&rep.final_model))?)?;
    run.write_text("true_conductivity.grid", &grid_file(syn.grid, &ex.true_conductivity_coarse())?)?;
    run.write_text("summary.txt", &(summary.line() + "\n"))?;
    Ok(summary)
}
