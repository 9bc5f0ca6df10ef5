use tracegn::bounds::{
    loose_sufficient, necessary_lower, necessary_upper, sufficient_lower, sufficient_upper, ToleranceBudget,
    DEFAULT_SCAN_LIMIT,
};

use crate::args::SampleSizeArgs;
use crate::config::Resolver;
use crate::output::{num, opt_num, out_dir, Run};
use crate::{CliError, CliResult};

/// `min, min + step, ..., max`, with each value rounded to 12 decimals so
/// that rows print as typed.
pub fn delta_grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(min > 0.0 && max < 1.0 && min <= max) {
        return Err(CliError::usage(format!("need 0 < delta-min <= delta-max < 1, got [{min}, {max}]")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(CliError::usage(format!("delta-step must be positive, got {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12).collect())
}

pub fn run(a: SampleSizeArgs) -> CliResult<String> {
    let res = Resolver::new(&a.common)?;
    let eps = res.get("eps", a.eps, 0.1)?;
    let dmin = res.get("delta-min", a.delta_min, 0.01)?;
    let dmax = res.get("delta-max", a.delta_max, 0.3)?;
    let step = res.get("delta-step", a.delta_step, 0.01)?;
    let r = res.get("rank", a.rank, 4)?;
    let limit = res.get("scan-limit", a.scan_limit, DEFAULT_SCAN_LIMIT)?;
    let seed = res.get("seed", a.common.seed, 1)?;
    let out = out_dir(&res, a.common.out)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::usage(format!("eps must lie in (0, 1), got {eps}")));
    }
    if r == 0 {
        return Err(CliError::usage("rank must be at least 1"));
    }
    let deltas = delta_grid(dmin, dmax, step)?;
    let run = Run::start("sample-size", &res, &out, seed)?;

    let header: Vec<String> = [
        "delta".to_string(),
        "loose".into(),
        "sufficient_lower".into(),
        "sufficient_upper".into(),
        "ratio_lower".into(),
        "ratio_upper".into(),
        format!("necessary_lower_r{r}"),
        format!("necessary_upper_r{r}"),
    ]
    .into();
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in &deltas {
        let t = ToleranceBudget::new(eps, d)?;
        let loose = loose_sufficient(t);
        let sl = sufficient_lower(t, limit)?.n;
        let su = sufficient_upper(t, limit)?.n;
        let ratio = |n: Option<u64>| n.map(|n| num(loose as f64 / n as f64));
        rows.push(vec![
            num(d),
            loose.to_string(),
            opt_num(sl),
            opt_num(su),
            ratio(sl).unwrap_or_default(),
            ratio(su).unwrap_or_default(),
            opt_num(necessary_lower(t, r, limit)?.n),
            opt_num(necessary_upper(t, r, limit)?.n),
        ]);
    }
    let path = run.write_csv("sample_size.csv", &header, &rows)?;
    Ok(format!("wrote {} ({} rows)", path.display(), rows.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = delta_grid(0.01, 0.3, 0.01).unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g[5], 0.06);
        assert_eq!(*g.last().unwrap(), 0.3);
        assert_eq!(delta_grid(0.2, 0.2, 0.01).unwrap(), vec![0.2]);
        assert!(delta_grid(0.3, 0.2, 0.01).is_err());
        assert!(delta_grid(0.1, 0.2, 0.0).is_err());
        assert!(delta_grid(0.0, 0.2, 0.1).is_err());
    }
}
