use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use trunc_cgf::ionchannel::{
    empirical_density, observed_sojourn_density, parse_key_values, simulate_observed_sojourns, ChannelSpec, ObservedCgf, SojournMethod,
    State,
};
use trunc_cgf::CgfEvaluator;

use crate::curve::theta_grid;
use crate::error::{CliError, Result};
use crate::output::{cell, fmt_g, read_input, render_csv, write_output};

#[derive(Debug, Args)]
pub struct IonChannelArgs {
    /// Key-value channel description; see the README for the keys.
    #[arg(long)]
    pub spec: PathBuf,
    /// Seed of the simulation oracle.
    #[arg(long)]
    pub seed: u64,
    /// Density table destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary moments destination; stderr when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Run settings read from the spec file next to the channel itself.
#[derive(Debug)]
pub struct Run {
    pub channel: ChannelSpec,
    pub state: State,
    pub grid: Vec<f64>,
    pub methods: Vec<SojournMethod>,
    pub n: usize,
}

fn take_or<T>(kv: &mut BTreeMap<String, String>, key: &str, default: T, parse: impl Fn(&str) -> trunc_cgf::Result<T>) -> Result<T> {
    match kv.remove(key) {
        Some(v) => Ok(parse(&v)?),
        None => Ok(default),
    }
}

pub fn parse_run(text: &str, path: &Path) -> Result<Run> {
    let kv = parse_key_values(text)?;
    let (channel, mut rest) = ChannelSpec::from_key_values(kv)?;
    let state = take_or(&mut rest, "state", State::Open, |v| v.parse())?;
    let methods = take_or(&mut rest, "methods", SojournMethod::ALL.to_vec(), |v| v.split(',').map(|m| m.trim().parse()).collect())?;
    let n = take_or(&mut rest, "n", 100_000, |v| v.trim().parse().map_err(|_| trunc_cgf::Error::Parse(format!("bad sample size `{v}`"))))?;
    let grid_text = rest.remove("grid").ok_or_else(|| CliError::Usage(format!("{}: missing `grid = min,max,steps`", path.display())))?;
    let parts: Vec<&str> = grid_text.split(',').map(str::trim).collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(CliError::Usage(format!("{}: grid `{grid_text}` is not `min,max,steps`", path.display())));
    };
    let steps: usize = steps.parse().map_err(|_| CliError::Usage(format!("bad grid step count `{steps}`")))?;
    let grid = theta_grid(trunc_cgf::parse_number(lo)?, trunc_cgf::parse_number(hi)?, steps)?;
    if let Some(k) = rest.keys().next() {
        return Err(CliError::Usage(format!("{}: unknown key `{k}`", path.display())));
    }
    if n == 0 {
        return Err(CliError::Usage("simulation size n must be positive".into()));
    }
    Ok(Run { channel, state, grid, methods, n })
}

pub fn run(args: &IonChannelArgs) -> Result<()> {
    let run = parse_run(&read_input(&args.spec)?, &args.spec)?;
    let sim = simulate_observed_sojourns(&run.channel, run.state, run.n, args.seed)?;

    let mut header = vec!["x".to_string()];
    let mut columns = Vec::new();
    let mut summary = Vec::new();
    for &m in &run.methods {
        header.push(format!("density_{m}"));
        // Points the inversion cannot reach stay empty.
        let dens = observed_sojourn_density(&run.channel, run.state, &run.grid, m)?;
        columns.push(dens.into_iter().map(|d| d.ok().map(|d| d.density)).collect::<Vec<_>>());
        let at_zero = ObservedCgf::new(&run.channel, run.state, m)?.eval(0.0)?;
        summary.push(vec![m.to_string(), fmt_g(at_zero.k1), fmt_g(at_zero.k2), String::new(), String::new()]);
    }
    header.push("simulation".into());
    columns.push(empirical_density(&sim, &run.grid).into_iter().map(Some).collect());

    let len = sim.len() as f64;
    let mean = sim.iter().sum::<f64>() / len;
    let var = sim.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1.0).max(1.0);
    summary.push(vec!["simulation".into(), fmt_g(mean), fmt_g(var), fmt_g((var / len).sqrt()), sim.len().to_string()]);

    let rows: Vec<Vec<String>> =
        run.grid.iter().enumerate().map(|(i, &x)| std::iter::once(fmt_g(x)).chain(columns.iter().map(|c| cell(c[i]))).collect()).collect();
    let density_csv = render_csv(&header, &rows)?;
    let summary_header: Vec<String> = ["source", "mean", "variance", "mean_se", "n"].iter().map(|s| s.to_string()).collect();
    let summary_csv = render_csv(&summary_header, &summary)?;

    match &args.summary {
        Some(p) => write_output(Some(p), &summary_csv)?,
        None => eprint!("{summary_csv}"),
    }
    if let Err(e) = write_output(args.out.as_deref(), &density_csv) {
        if let Some(p) = &args.summary {
            let _ = std::fs::remove_file(p);
        }
        return Err(e);
    }
    Ok(())
}
