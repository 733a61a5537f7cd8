use std::path::PathBuf;

use clap::Args;
use trunc_cgf::dirichlet::{dirichlet_exact_probability, dirichlet_rectangle_probability, DirichletMethod, DirichletSpec, EXACT_MAX_DIM};
use trunc_cgf::Exec;

use crate::error::{CliError, Result};
use crate::output::{cell, fmt_g, read_input, render_csv, write_output};

#[derive(Debug, Args)]
pub struct DirichletArgs {
    /// One box per line: `gamma=10,8,8 a=0,0,0 b=0.45,0.3,0.3 [method=conv] [order=2]`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Evaluate every box with each of these methods instead of its own.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Vec<DirichletMethod>,
    /// Order of the convolution forms, overriding the records.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: Option<u8>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<DirichletMethod, String> {
    s.parse().map_err(|e: trunc_cgf::Error| e.to_string())
}

/// Parses the records of a box file, skipping blanks and `#` comments.
pub fn parse_specs(text: &str, path: &std::path::Path) -> Result<Vec<DirichletSpec>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let spec = line.parse().map_err(|source| CliError::Record { path: path.to_path_buf(), line: i + 1, source })?;
        out.push(spec);
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("{}: no Dirichlet records", path.display())));
    }
    Ok(out)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt_g(*x)).collect::<Vec<_>>().join(";")
}

pub fn run(args: &DirichletArgs) -> Result<()> {
    let records = parse_specs(&read_input(&args.spec)?, &args.spec)?;
    let order = args.order.map(trunc_cgf::Order::from_number).transpose()?;
    let mut jobs = Vec::new();
    for r in &records {
        let methods = if args.methods.is_empty() { vec![r.method] } else { args.methods.clone() };
        for m in methods {
            let mut s = r.clone();
            s.method = m;
            if let Some(o) = order {
                s = s.with_order(o);
            }
            jobs.push(s);
        }
    }
    let results = Exec::default().map(&jobs, |s| -> trunc_cgf::Result<_> {
        let r = dirichlet_rectangle_probability(s)?;
        let exact = if s.dim() <= EXACT_MAX_DIM { Some(dirichlet_exact_probability(&s.gamma, &s.a, &s.b)?) } else { None };
        Ok((r, exact))
    });
    let header: Vec<String> = ["n", "gamma", "a", "b", "method", "probability", "saddlepoint", "mean", "exact_if_available"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::with_capacity(jobs.len());
    for (s, res) in jobs.iter().zip(results) {
        let (r, exact) = res?;
        rows.push(vec![
            s.dim().to_string(),
            join(&s.gamma),
            join(&s.a),
            join(&s.b),
            s.method.to_string(),
            fmt_g(r.probability),
            fmt_g(r.saddlepoint),
            fmt_g(r.mean),
            cell(exact),
        ]);
    }
    write_output(args.out.as_deref(), &render_csv(&header, &rows)?)
}
