use std::path::PathBuf;

use clap::{Args, ValueEnum};
use trunc_cgf::{
    Branch, CgfModel, ConvTruncation, Distribution, ExactTruncation, Exec, HybridTruncation, LrTruncation, Order, TruncCgfEval, Window,
};

use crate::error::{CliError, Result};
use crate::output::{cell, fmt_g, render_csv, write_output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveMethod {
    Exact,
    Lr,
    Conv1,
    Conv2,
    Hybrid,
}

impl CurveMethod {
    const ALL: [CurveMethod; 5] = [Self::Exact, Self::Lr, Self::Conv1, Self::Conv2, Self::Hybrid];

    fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Lr => "lr",
            Self::Conv1 => "conv1",
            Self::Conv2 => "conv2",
            Self::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// The truncated CGF itself.
    K,
    /// Its first derivative.
    K1,
    /// Its second derivative.
    K2,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Untruncated law, e.g. `normal mean=0 sd=1` or `family=gumbel`.
    #[arg(long, value_parser = parse_model)]
    pub model: Distribution,
    /// Truncation window `a,b`; either end may be `-inf`/`inf`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_window)]
    pub window: Window,
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    pub theta_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 6.0)]
    pub theta_max: f64,
    /// Number of grid points, endpoints included.
    #[arg(long, default_value_t = 111)]
    pub theta_steps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = CurveMethod::ALL)]
    pub methods: Vec<CurveMethod>,
    /// Order of the convolution forms; defaults to 2 for two-sided windows
    /// and 1 otherwise.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub order: Option<u8>,
    #[arg(long, value_enum, default_value_t = Quantity::K)]
    pub quantity: Quantity,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Accepts `family=normal mean=0` or a bare family name before the parameters.
pub fn parse_model(s: &str) -> std::result::Result<Distribution, String> {
    let s = s.trim();
    let first = s.split_whitespace().next().unwrap_or("");
    let text = if first.contains('=') { s.to_string() } else { format!("family={s}") };
    text.parse().map_err(|e: trunc_cgf::Error| e.to_string())
}

pub fn parse_window(s: &str) -> std::result::Result<Window, String> {
    s.parse().map_err(|e: trunc_cgf::Error| e.to_string())
}

type Evaluator = Box<dyn Fn(f64) -> trunc_cgf::Result<TruncCgfEval> + Send + Sync>;

fn evaluator(method: CurveMethod, model: Distribution, window: Window, order: Order) -> Option<Evaluator> {
    // A method that cannot be built for this window leaves its column empty.
    Some(match method {
        CurveMethod::Exact => {
            let t = ExactTruncation::new(model, window).ok()?;
            Box::new(move |th| t.eval(th))
        }
        CurveMethod::Lr => {
            let t = LrTruncation::new(model, window).ok()?;
            Box::new(move |th| t.eval(th))
        }
        CurveMethod::Conv1 => {
            let t = ConvTruncation::new(model, window, Branch::Lower, order).ok()?;
            Box::new(move |th| t.eval(th))
        }
        CurveMethod::Conv2 => {
            let t = ConvTruncation::new(model, window, Branch::Upper, order).ok()?;
            Box::new(move |th| t.eval(th))
        }
        CurveMethod::Hybrid => {
            let t = HybridTruncation::with_order(model, window, order).ok()?;
            Box::new(move |th| t.eval(th))
        }
    })
}

pub fn theta_grid(min: f64, max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min <= max) || steps == 0 || (steps == 1 && min != max) {
        return Err(CliError::Usage(format!("bad theta grid: min {min}, max {max}, steps {steps}")));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let h = (max - min) / (steps - 1) as f64;
    Ok((0..steps).map(|i| if i + 1 == steps { max } else { min + h * i as f64 }).collect())
}

pub fn run(args: &CurveArgs) -> Result<()> {
    let window = args.window.normalized(args.model.support())?;
    let order = match args.order {
        Some(n) => Order::from_number(n)?,
        None => Order::default_for(&window),
    };
    let grid = theta_grid(args.theta_min, args.theta_max, args.theta_steps)?;
    let mut methods: Vec<CurveMethod> = Vec::new();
    for &m in &args.methods {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let evals: Vec<(CurveMethod, Option<Evaluator>)> = methods.iter().map(|&m| (m, evaluator(m, args.model, window, order))).collect();
    let pick = |e: TruncCgfEval| match args.quantity {
        Quantity::K => e.k,
        Quantity::K1 => e.k1,
        Quantity::K2 => e.k2,
    };
    let values: Vec<Vec<Option<f64>>> = Exec::default()
        .map(&grid, |&th| evals.iter().map(|(_, f)| f.as_ref().and_then(|f| f(th).ok()).map(pick).filter(|v| v.is_finite())).collect());

    let exact_col = methods.iter().position(|&m| m == CurveMethod::Exact);
    let mut header = vec!["theta".to_string()];
    header.extend(methods.iter().map(|m| m.name().to_string()));
    if exact_col.is_some() {
        header.extend(methods.iter().filter(|&&m| m != CurveMethod::Exact).map(|m| format!("abs_err_{}", m.name())));
    }
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&values)
        .map(|(&th, vals)| {
            let mut row = vec![fmt_g(th)];
            row.extend(vals.iter().map(|v| cell(*v)));
            if let Some(i) = exact_col {
                for (j, m) in methods.iter().enumerate() {
                    if *m != CurveMethod::Exact {
                        let err = match (vals[i], vals[j]) {
                            (Some(x), Some(y)) => Some((y - x).abs()),
                            _ => None,
                        };
                        row.push(cell(err));
                    }
                }
            }
            row
        })
        .collect();
    write_output(args.out.as_deref(), &render_csv(&header, &rows)?)
}
