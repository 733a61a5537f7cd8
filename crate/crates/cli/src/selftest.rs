use trunc_cgf::oracle::{exact_mgf, exact_truncated_mgf, exact_xi, tilted_cdf};
use trunc_cgf::{Branch, CgfModel, Distribution, Window};

use crate::error::{CliError, Result};
use crate::output::fmt_g;

struct Check {
    name: String,
    worst: f64,
    tol: f64,
    failure: Option<String>,
}

impl Check {
    fn new(name: impl Into<String>, tol: f64) -> Self {
        Self { name: name.into(), worst: 0.0, tol, failure: None }
    }

    fn relative(&mut self, got: trunc_cgf::Result<f64>, want: trunc_cgf::Result<f64>) {
        match (got, want) {
            (Ok(g), Ok(w)) => {
                let e = if w == 0.0 { g.abs() } else { (g / w - 1.0).abs() };
                self.worst = self.worst.max(if e.is_nan() { f64::INFINITY } else { e });
            }
            (Err(e), _) | (_, Err(e)) => {
                self.failure.get_or_insert_with(|| e.to_string());
            }
        }
    }

    fn passed(&self) -> bool {
        self.failure.is_none() && self.worst <= self.tol
    }

    fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let detail = match &self.failure {
            Some(f) => format!("error: {f}"),
            None => format!("max relative error {} (tolerance {})", fmt_g(self.worst), fmt_g(self.tol)),
        };
        format!("{verdict}\t{}\t{detail}", self.name)
    }
}

fn catalog() -> Vec<Distribution> {
    vec![Distribution::standard_normal(), Distribution::gamma(2.0, 1.0).expect("valid"), Distribution::gumbel(0.0, 1.0).expect("valid")]
}

const THETAS: [f64; 4] = [-2.0, -0.5, 0.3, 0.8];
const LEVELS: [f64; 4] = [-1.0, 0.5, 1.5, 3.0];

fn checks() -> Vec<Check> {
    let mut out = Vec::new();

    let mut c = Check::new("truncated MGF closed forms", 1e-10);
    let e = Distribution::exponential(1.0).expect("valid");
    let closed = (1.0 - (-1.0f64).exp()) / 0.5 / (1.0 - (-2.0f64).exp());
    c.relative(exact_truncated_mgf(&e, Window::new(0.0, 2.0).expect("valid"), 0.5), Ok(closed));
    let n = Distribution::standard_normal();
    c.relative(exact_truncated_mgf(&n, Window::new(-1.0, 2.0).expect("valid"), 1.0), Ok(0.5f64.exp()));
    out.push(c);

    let mut c = Check::new("full window reproduces M0", 1e-10);
    for m in catalog() {
        for th in THETAS.into_iter().filter(|t| m.strip().contains(*t)) {
            c.relative(exact_truncated_mgf(&m, Window::full(), th), CgfModel::eval(&m, th).map(|e| e.k.exp()));
        }
    }
    out.push(c);

    let mut c = Check::new("Xi_1 at theta = 0 is the CDF", 1e-10);
    for m in catalog() {
        for y in LEVELS.into_iter().filter(|&y| m.cdf(y).is_some_and(|p| p > 0.0)) {
            c.relative(exact_xi(&m, 0.0, y, Branch::Lower), Ok(m.cdf(y).expect("cdf")));
        }
    }
    out.push(c);

    let mut c = Check::new("Xi_1 + Xi_2 = M0", 1e-8);
    for m in catalog() {
        for th in THETAS.into_iter().filter(|t| m.strip().contains(*t)) {
            for y in LEVELS {
                let sum = exact_xi(&m, th, y, Branch::Lower).and_then(|a| Ok(a + exact_xi(&m, th, y, Branch::Upper)?));
                c.relative(sum, exact_mgf(&m, th));
            }
        }
    }
    out.push(c);

    let (a, b) = (0.25, 2.5);
    let w = Window::new(a, b).expect("valid");
    let mut c = Check::new("truncated MGF from Xi_2 differences", 1e-8);
    let mut t = Check::new("tilted representation", 1e-8);
    for m in catalog() {
        let mass = m.cdf(b).expect("cdf") - m.cdf(a).expect("cdf");
        for th in THETAS.into_iter().filter(|t| m.strip().contains(*t)) {
            let mgf = exact_truncated_mgf(&m, w, th);
            let upper = exact_xi(&m, th, a, Branch::Upper).and_then(|x| Ok((x - exact_xi(&m, th, b, Branch::Upper)?) / mass));
            c.relative(upper, mgf.clone());
            let tilted = exact_mgf(&m, th).and_then(|m0| Ok(m0 * (tilted_cdf(&m, th, b)? - tilted_cdf(&m, th, a)?) / mass));
            t.relative(tilted, mgf);
        }
    }
    out.push(c);
    out.push(t);
    out
}

/// Prints one line per identity and fails if any does.
pub fn run() -> Result<()> {
    let checks = checks();
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::SelfTest(failed));
    }
    Ok(())
}
