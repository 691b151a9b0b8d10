//! Subcommand implementations.

use std::path::Path;

use arcdet::asymptotics::{multi_arc_series, n_form_expansion};
use arcdet::cue_mc::estimate_power_gap_probability;
use arcdet::harness::{
    base_metadata, emit_results, figure2_epsilon_grid, fit_free_energy, fit_higher_orders,
    residual_scan, write_plot_data, McRecord, Metadata, Tabular, FIGURE2_M, FIGURE2_N,
    FIGURE2_ORDER,
};
use arcdet::logdet::log_det_with;
use arcdet::validation::{run_all, Depth};
use arcdet::{
    log_det_factorized, ArcConfiguration, ConstantSign, FreeEnergyTable, LogDetResult, Result,
    SeriesOptions,
};
use serde::Serialize;

use crate::args::{
    AsymArgs, Cli, Command, DetArgs, FitArgs, McArgs, MethodArg, OutputArgs, ResidualArgs,
    SelftestArgs,
};
use crate::{EXIT_OK, EXIT_SELFTEST};

/// `println!` that exits quietly when stdout is closed (e.g. piped into `head`).
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(EXIT_OK as i32);
            }
        }
    }};
}

pub fn run(cli: &Cli) -> Result<u8> {
    let meta = metadata(cli);
    match &cli.command {
        Command::Det(a) => det(a, &meta),
        Command::Asym(a) => asym(a, &meta),
        Command::Residual(a) => residual(a, &meta),
        Command::Fit(a) => fit(a, &meta),
        Command::Mc(a) => mc(a, &meta),
        Command::Selftest(a) => selftest(a),
    }
}

fn metadata(cli: &Cli) -> Metadata {
    let mut meta = base_metadata();
    meta.insert(
        "run_config".into(),
        serde_json::to_value(&cli.command).unwrap_or_default(),
    );
    meta
}

fn with_sign(meta: &Metadata, sign: ConstantSign) -> Metadata {
    let mut meta = meta.clone();
    meta.insert("constant_sign".into(), sign.to_string().into());
    meta
}

fn write<R: Tabular>(
    records: &[R],
    out: &OutputArgs,
    default: Option<&str>,
    meta: &Metadata,
) -> Result<()> {
    if let Some(path) = out.destination(default) {
        emit_results(records, &path, out.format.format(), meta)?;
        outln!("wrote {}", path.display());
    }
    Ok(())
}

/// One determinant evaluation, as written to files.
#[derive(Debug, Serialize)]
struct DetRecord {
    m: u32,
    #[serde(rename = "N")]
    n: usize,
    epsilon: f64,
    method: String,
    value: f64,
    working_precision_bits: u32,
    min_pivot_ratio: f64,
    error_estimate: f64,
}

impl From<&LogDetResult> for DetRecord {
    fn from(r: &LogDetResult) -> Self {
        Self {
            m: r.config.m(),
            n: r.n,
            epsilon: r.config.epsilon(),
            method: format!("{:?}", r.method).to_lowercase(),
            value: r.value,
            working_precision_bits: r.working_precision_bits,
            min_pivot_ratio: r.min_pivot_ratio,
            error_estimate: r.error_estimate,
        }
    }
}

impl Tabular for DetRecord {
    const HEADER: &'static [&'static str] = &[
        "m",
        "N",
        "epsilon",
        "method",
        "value",
        "working_precision_bits",
        "min_pivot_ratio",
        "error_estimate",
    ];
    fn row(&self) -> Vec<String> {
        use arcdet::harness::fmt_f64;
        vec![
            self.m.to_string(),
            self.n.to_string(),
            fmt_f64(self.epsilon),
            self.method.clone(),
            fmt_f64(self.value),
            self.working_precision_bits.to_string(),
            fmt_f64(self.min_pivot_ratio),
            fmt_f64(self.error_estimate),
        ]
    }
}

fn det(a: &DetArgs, meta: &Metadata) -> Result<u8> {
    let config = ArcConfiguration::new(a.m, a.epsilon)?;
    let policy = a.precision.policy();
    let mut records = Vec::new();
    let direct = match a.method {
        MethodArg::Direct | MethodArg::Both => Some(log_det_with(&config, a.n, &policy)?),
        MethodArg::Factorized => None,
    };
    let factorized = match a.method {
        MethodArg::Factorized | MethodArg::Both => Some(log_det_factorized(&config, a.n)?),
        MethodArg::Direct => None,
    };
    for (label, r) in [("direct", &direct), ("factorized", &factorized)] {
        if let Some(r) = r {
            outln!(
                "{label:<11} ln D = {:.16e}  ({:?}, {} bits, error estimate {:.1e})",
                r.value,
                r.method,
                r.working_precision_bits,
                r.error_estimate
            );
            records.push(DetRecord::from(r));
        }
    }
    if let (Some(d), Some(f)) = (&direct, &factorized) {
        outln!("difference  {:.3e}", (d.value - f.value).abs());
    }
    write(&records, &a.output, None, meta)?;
    Ok(EXIT_OK)
}

/// One evaluated expansion term, as written to files.
#[derive(Debug, Serialize)]
struct TermRecord {
    term: String,
    value: f64,
}

impl Tabular for TermRecord {
    const HEADER: &'static [&'static str] = &["term", "value"];
    fn row(&self) -> Vec<String> {
        vec![self.term.clone(), arcdet::harness::fmt_f64(self.value)]
    }
}

fn asym(a: &AsymArgs, meta: &Metadata) -> Result<u8> {
    let sign = ConstantSign::from(a.sign);
    let options = SeriesOptions::new(a.order).with_sign(sign);
    let (series, n1) = multi_arc_series(a.m, a.n, a.epsilon, options, &FreeEnergyTable::default())?;
    let config = ArcConfiguration::new(a.m, a.epsilon)?;
    outln!(
        "m={} N={} n1={} n2={} epsilon={} order={} sign={}",
        a.m,
        a.n,
        n1,
        series.n2,
        a.epsilon,
        a.order,
        sign
    );
    let mut records = Vec::new();
    for t in series.terms(n1) {
        outln!("  {:<8} {:>24.16e}", t.label, t.value);
        records.push(TermRecord {
            term: t.label,
            value: t.value,
        });
    }
    let value = series.evaluate_in::<arcdet::DoubleDouble>(n1);
    let value = arcdet::Real::to_f64(&value);
    let n_form = n_form_expansion(a.m, a.n, a.epsilon, sign)?;
    let exact = log_det_factorized(&config, a.n)?.value;
    outln!("truncated   {value:.16e}");
    outln!("N-form O(1) {n_form:.16e}");
    outln!("exact       {exact:.16e}");
    outln!("residual    {:.6e}", exact - value);
    for (term, v) in [("truncated", value), ("n_form", n_form), ("exact", exact)] {
        records.push(TermRecord {
            term: term.into(),
            value: v,
        });
    }
    write(&records, &a.output, None, &with_sign(meta, sign))?;
    Ok(EXIT_OK)
}

fn residual(a: &ResidualArgs, meta: &Metadata) -> Result<u8> {
    let sign = ConstantSign::from(a.sign);
    let (m, n, grid, order) = if a.figure2 {
        (FIGURE2_M, FIGURE2_N, figure2_epsilon_grid(), FIGURE2_ORDER)
    } else {
        (a.m, a.n.clone(), a.epsilon.clone(), a.order)
    };
    let mut meta = with_sign(meta, sign);
    meta.insert(
        "scan".into(),
        serde_json::json!({
            "m": m,
            "N": format!("{}:{}", n.start(), n.end()),
            "epsilon": grid,
            "truncation_order": order,
        }),
    );
    let records = residual_scan(m, &grid, n, order, sign)?;
    let default = if a.figure2 { "figure2" } else { "residual" };
    let path = a
        .output
        .destination(Some(default))
        .expect("default name given");
    emit_results(&records, &path, a.output.format.format(), &meta)?;
    outln!("wrote {} ({} records)", path.display(), records.len());
    if a.plot_data || a.figure2 {
        let dir = path.parent().unwrap_or(Path::new("."));
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or(default)
            .to_string();
        for p in write_plot_data(&records, dir, &stem, &meta)? {
            outln!("wrote {}", p.display());
        }
    }
    let worst = records
        .iter()
        .map(|r| r.scaled_residual)
        .fold(f64::NAN, |acc: f64, x| {
            if acc.is_nan() || x.abs() > acc.abs() {
                x
            } else {
                acc
            }
        });
    outln!("largest |scaled residual|: {worst:.6e}");
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct FitRow(arcdet::FitResult);

impl Tabular for FitRow {
    const HEADER: &'static [&'static str] = &[
        "g",
        "epsilon",
        "estimate",
        "uncertainty",
        "n_min",
        "n_max",
        "precision_bits",
    ];
    fn row(&self) -> Vec<String> {
        use arcdet::harness::fmt_f64;
        let f = &self.0;
        vec![
            f.g.to_string(),
            fmt_f64(f.epsilon),
            fmt_f64(f.estimate),
            fmt_f64(f.uncertainty),
            f.n_window.0.to_string(),
            f.n_window.1.to_string(),
            f.precision_bits.to_string(),
        ]
    }
}

fn fit(a: &FitArgs, meta: &Metadata) -> Result<u8> {
    let sign = ConstantSign::from(a.sign);
    let mut rows = Vec::new();
    for &eps in &a.epsilon {
        let mut table = FreeEnergyTable::default();
        let fits = if a.g <= table.closed_form_max_g() {
            vec![fit_free_energy(a.g, eps, a.n.clone(), sign, &table)?]
        } else {
            fit_higher_orders(a.g, eps, a.n.clone(), sign, &mut table)?
        };
        for f in fits {
            let closed = arcdet::free_energy(f.g, eps).ok();
            match closed {
                Some(c) => outln!(
                    "F{} eps={eps}: {:.12e} +/- {:.1e}  (closed form {c:.12e}, diff {:.1e})",
                    f.g,
                    f.estimate,
                    f.uncertainty,
                    (f.estimate - c).abs()
                ),
                None => outln!(
                    "F{} eps={eps}: {:.12e} +/- {:.1e}",
                    f.g,
                    f.estimate,
                    f.uncertainty
                ),
            }
            rows.push(FitRow(f));
        }
    }
    write(&rows, &a.output, None, &with_sign(meta, sign))?;
    Ok(EXIT_OK)
}

fn mc(a: &McArgs, meta: &Metadata) -> Result<u8> {
    let config = ArcConfiguration::new(a.m, a.epsilon)?;
    let exact = arcdet::log_det(&config, a.n)?.value;
    let e = estimate_power_gap_probability(a.n, a.m, a.epsilon, a.samples, a.seed)?;
    outln!(
        "N={} m={} epsilon={}: estimate {:.6} +/- {:.6}, exact {:.6} ({:.2} SE), tau {:.2}, acceptance {:.2}",
        a.n,
        a.m,
        a.epsilon,
        e.estimate,
        e.standard_error,
        exact.exp(),
        (e.estimate - exact.exp()).abs() / e.standard_error,
        e.autocorrelation_time,
        e.acceptance_rate
    );
    let record = McRecord {
        n: a.n,
        m: a.m,
        epsilon: a.epsilon,
        estimate: e.estimate,
        stderr: e.standard_error,
        samples: e.samples_used,
        seed: a.seed,
        exact_logdet: exact,
    };
    write(&[record], &a.output, None, meta)?;
    Ok(EXIT_OK)
}

fn selftest(a: &SelftestArgs) -> Result<u8> {
    let depth = if a.quick { Depth::Quick } else { Depth::Full };
    let reports = run_all(depth, a.seed);
    let (mut passed, mut failed) = (0, 0);
    for r in &reports {
        outln!(
            "{:<20} {:>6} passed {:>4} failed  {}",
            r.name,
            r.passed,
            r.failed,
            if r.ok() { "PASS" } else { "FAIL" }
        );
        for f in &r.failures {
            outln!("    {f}");
        }
        passed += r.passed;
        failed += r.failed;
    }
    outln!("total: {passed} passed, {failed} failed");
    if failed > 0 {
        return Ok(EXIT_SELFTEST);
    }
    Ok(EXIT_OK)
}
