use std::path::PathBuf;

use clap::{Args, ValueEnum};
use trunc_cgf::hybrid::{tail_diagnostics, Side};
use trunc_cgf::Distribution;

use crate::curve::parse_model;
use crate::error::Result;
use crate::output::{fmt_g, render_csv, write_output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
    Both,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, value_parser = parse_model)]
    pub model: Distribution,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    /// Verdict table destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-point table of the derivative ratios.
    #[arg(long)]
    pub points: Option<PathBuf>,
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Left => "left",
        Side::Right => "right",
    }
}

pub fn run(args: &DiagnoseArgs) -> Result<()> {
    let sides = match args.side {
        SideArg::Left => vec![Side::Left],
        SideArg::Right => vec![Side::Right],
        SideArg::Both => vec![Side::Left, Side::Right],
    };
    let reports: Vec<_> = sides.iter().map(|&s| tail_diagnostics(&args.model, s)).collect();
    let header: Vec<String> =
        ["side", "edge", "ratio_condition", "derivative_condition", "bounded_condition", "points"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                side_name(r.side).into(),
                fmt_g(r.edge),
                r.ratio_condition.as_str().into(),
                r.derivative_condition.as_str().into(),
                r.bounded_condition.as_str().into(),
                r.points.len().to_string(),
            ]
        })
        .collect();
    let verdicts = render_csv(&header, &rows)?;
    if let Some(p) = &args.points {
        let header: Vec<String> =
            ["side", "s", "k2_over_k1sq", "k2_over_k1", "k4_over_k1cube", "max_higher"].iter().map(|s| s.to_string()).collect();
        let rows: Vec<Vec<String>> = reports
            .iter()
            .flat_map(|r| {
                r.points.iter().map(|p| {
                    vec![
                        side_name(r.side).into(),
                        fmt_g(p.s),
                        fmt_g(p.k2_over_k1sq),
                        fmt_g(p.k2_over_k1),
                        fmt_g(p.k4_over_k1cube),
                        fmt_g(p.max_higher),
                    ]
                })
            })
            .collect();
        write_output(Some(p), &render_csv(&header, &rows)?)?;
    }
    let written = write_output(args.out.as_deref(), &verdicts);
    if let (Err(_), Some(p)) = (&written, &args.points) {
        let _ = std::fs::remove_file(p);
    }
    written
}
