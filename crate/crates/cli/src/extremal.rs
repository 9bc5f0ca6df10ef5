use tracegn::extremal::{extremal_envelope, simplex_cdf_mc, simplex_grid, Envelope};
use tracegn::special::GammaParams;

use crate::args::ExtremalArgs;
use crate::config::Resolver;
use crate::output::{num, out_dir, Run};
use crate::{CliError, CliResult};

fn parse_points(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| CliError::usage(format!("bad x value {t:?}")))).collect()
}

pub fn run(a: ExtremalArgs) -> CliResult<String> {
    let res = Resolver::new(&a.common)?;
    let alpha = res.get("alpha", a.alpha, 0.5)?;
    let beta = res.get("beta", a.beta, 0.5)?;
    let n = res.get("n", a.n, 2)?;
    let xs = res.opt("x", a.x)?;
    let step = res.get("grid-step", a.grid_step, 0.1)?;
    let samples = res.get("samples", a.samples, 20_000)?;
    let seed = res.get("seed", a.common.seed, 1)?;
    let out = out_dir(&res, a.common.out)?;

    let p = GammaParams::new(alpha, beta)?;
    if n == 0 {
        return Err(CliError::usage("n must be at least 1"));
    }
    let steps = (1.0 / step).round();
    if !(step > 0.0 && steps >= 1.0 && (steps * step - 1.0).abs() < 1e-9) {
        return Err(CliError::usage(format!("grid-step must be 1/k for an integer k, got {step}")));
    }
    let xs = match xs {
        Some(s) => parse_points(&s)?,
        None => {
            let lo = alpha / beta;
            let hi = (2.0 * alpha + 1.0) / (2.0 * beta);
            vec![0.3 * lo, 0.7 * lo, 1.5 * hi]
        }
    };
    let run = Run::start("extremal-verify", &res, &out, seed)?;

    let mut header: Vec<String> = ["alpha", "beta", "n", "x"].map(String::from).into();
    header.extend((1..=n).map(|i| format!("lambda_{i}")));
    header.extend(["mc_estimate", "std_error", "m_n", "M_n", "regime", "violation"].map(String::from));
    let grid = simplex_grid(n, steps as usize);
    let mut rows = Vec::new();
    let mut violations = 0;
    let mut sample_seed = seed;
    for &x in &xs {
        let env = extremal_envelope(p, n, x)?;
        for w in &grid {
            let mc = simplex_cdf_mc(p, w, x, samples, sample_seed)?;
            sample_seed = sample_seed.wrapping_add(1);
            let (lo, hi, regime) = match env {
                Envelope::Determinate { min, max } => (num(min), num(max), "determinate"),
                Envelope::Indeterminate => (String::new(), String::new(), "indeterminate"),
            };
            let violated = match env {
                Envelope::Determinate { min, max } => {
                    mc.estimate < min - 4.0 * mc.std_error || mc.estimate > max + 4.0 * mc.std_error
                }
                Envelope::Indeterminate => false,
            };
            violations += usize::from(violated);
            let mut row = vec![num(alpha), num(beta), n.to_string(), num(x)];
            row.extend(w.lambdas().iter().map(|l| num(*l)));
            row.extend([num(mc.estimate), num(mc.std_error), lo, hi, regime.to_string(), violated.to_string()]);
            rows.push(row);
        }
    }
    let path = run.write_csv("extremal.csv", &header, &rows)?;
    let line = format!("{} points, {violations} envelope violations; wrote {}", rows.len(), path.display());
    if violations == 0 {
        Ok(line)
    } else {
        Err(CliError::numerical(line))
    }
}
