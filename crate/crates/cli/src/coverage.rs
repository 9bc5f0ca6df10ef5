use tracegn::bounds::{Side, ToleranceBudget};
use tracegn::trace::{empirical_coverage, Fixture};

use crate::args::CoverageArgs;
use crate::config::Resolver;
use crate::output::{num, out_dir, Run};
use crate::{CliError, CliResult};

pub fn run(a: CoverageArgs) -> CliResult<String> {
    let res = Resolver::new(&a.common)?;
    let fixture = Fixture::parse(&res.get("fixture", a.fixture, "rank1".to_string())?)?;
    let eps = res.get("eps", a.eps, 0.1)?;
    let delta = res.get("delta", a.delta, 0.1)?;
    let side: Side = res
        .get("side", a.side, "lower".to_string())?
        .parse()
        .map_err(|e: tracegn::Error| CliError::usage(e.to_string()))?;
    let trials = res.get("trials", a.trials, 10_000)?;
    let n_flag = res.opt("n", a.n)?;
    let seed = res.get("seed", a.common.seed, 1)?;
    let out = out_dir(&res, a.common.out)?;
    let t = ToleranceBudget::new(eps, delta)?;
    let n = match n_flag {
        Some(n) => n,
        None => tracegn::bounds::sufficient(t, side, tracegn::bounds::DEFAULT_SCAN_LIMIT)?
            .n
            .ok_or_else(|| CliError::config(format!("no {side} sample size found for eps={eps}, delta={delta}")))?
            as usize,
    };
    let run = Run::start("trace-coverage", &res, &out, seed)?;

    let op = fixture.operator(seed);
    let cov = empirical_coverage(&op, t, side, n, trials, seed)?;
    let target = 1.0 - delta - 4.0 * cov.std_error;
    let pass = cov.coverage >= target;
    let header: Vec<String> =
        ["fixture", "side", "eps", "delta", "n", "trials", "coverage", "std_error", "threshold", "pass"]
            .map(String::from)
            .into();
    let row = vec![
        fixture.name().to_string(),
        side.to_string(),
        num(eps),
        num(delta),
        n.to_string(),
        trials.to_string(),
        num(cov.coverage),
        num(cov.std_error),
        num(target),
        pass.to_string(),
    ];
    let path = run.write_csv("coverage.csv", &header, &[row])?;
    let line = format!(
        "{} {side} n={n}: coverage {:.4} (se {:.4}) vs {:.4}; wrote {}",
        fixture.name(),
        cov.coverage,
        cov.std_error,
        1.0 - delta,
        path.display()
    );
    if pass {
        Ok(line)
    } else {
        Err(CliError::numerical(format!("coverage below 1 - delta - 4 se: {line}")))
    }
}
