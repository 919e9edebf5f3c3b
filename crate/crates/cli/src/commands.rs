use std::fs;
use std::io::Write;
use std::path::Path;

use coint_core::johansen::{concentrate, moments, solve_eigenproblems, trace_test};
use coint_core::restrict::test_exclusion;
use coint_core::series::diff_series;
use coint_core::unitroot::{adf_test, diff_search, CriticalValues};
use coint_core::var::{select_lag, simulate_var};
use coint_core::{
    chi_square_quantile, decompose, exclusion_scan, fit_johansen, DMatrix, JohansenFit,
    SeriesPanel, TraceTable,
};

use crate::args::Command;
use crate::config::{ModelForm, SimSpec};
use crate::csvio::{load_csv, save_csv, LoadError};
use crate::error::{CliError, CliResult};
use crate::report::{Cell, ReportDocument, Row, Table};

const LEVEL: f64 = 0.95;

fn load(path: &Path) -> CliResult<SeriesPanel> {
    load_csv(path).map_err(|e| match e {
        LoadError::Open { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn sample_meta(doc: &mut ReportDocument, panel: &SeriesPanel) {
    let periods = panel.periods();
    doc.meta(
        "sample",
        format!("{} to {} ({} periods)", periods[0], periods[periods.len() - 1], periods.len()),
    );
    doc.meta("series", panel.names().join(", "));
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn matrix_table(
    doc: &ReportDocument,
    title: &str,
    rows: &[String],
    columns: Vec<String>,
    m: &DMatrix<f64>,
) -> Table {
    Table {
        title: title.to_string(),
        corner: String::new(),
        columns,
        rows: rows
            .iter()
            .enumerate()
            .map(|(i, label)| Row {
                label: label.clone(),
                cells: m.row(i).iter().map(|v| doc.num(*v)).collect(),
            })
            .collect(),
    }
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

pub fn run(command: &Command, precision: usize) -> CliResult<ReportDocument> {
    match command {
        Command::Explore {
            csv,
            max_s,
            max_d,
            max_lags,
        } => explore(&load(csv)?, *max_s, *max_d, *max_lags, precision),
        Command::SelectLags { csv, kmax } => select_lags(&load(csv)?, *kmax, precision),
        Command::Johansen { csv, lags, rank } => johansen(&load(csv)?, *lags, *rank, precision),
        Command::Decompose {
            csv,
            lags,
            rank,
            tsv,
        } => decomposition(&load(csv)?, *lags, *rank, tsv.as_deref(), precision),
        Command::Test {
            csv,
            lags,
            rank,
            exclude,
        } => restriction(&load(csv)?, *lags, *rank, exclude, precision),
        Command::Scan {
            csv,
            lags,
            rank,
            max_excluded,
            top,
        } => scan(&load(csv)?, *lags, *rank, *max_excluded, *top, precision),
        Command::Simulate { spec, seed, out } => simulate(spec, *seed, out, precision),
    }
}

pub fn explore(
    panel: &SeriesPanel,
    max_s: usize,
    max_d: usize,
    max_lags: usize,
    precision: usize,
) -> CliResult<ReportDocument> {
    let mut doc = ReportDocument::new("explore", precision);
    sample_meta(&mut doc, panel);
    let cv = CriticalValues::default();

    let mut diff_rows = Vec::new();
    let mut adf_rows = Vec::new();
    for (j, name) in panel.names().iter().enumerate() {
        let x = panel.column(j);
        let search = diff_search(&x, max_s, max_d)?;
        let first = search.optimum;
        let transformed = if first.d == 0 {
            x.clone()
        } else {
            diff_series(&x, first.s, first.d)?
        };
        let second = diff_search(&transformed, max_s, max_d)?
            .best_with_min_order(1)
            .expect("search includes differenced rows");
        diff_rows.push(Row {
            label: name.clone(),
            cells: vec![
                doc.num(search.rows[0].sigma),
                Cell::Integer(first.s as i64),
                Cell::Integer(first.d as i64),
                doc.num(first.sigma),
                Cell::Integer(second.s as i64),
                Cell::Integer(second.d as i64),
                doc.num(second.sigma),
            ],
        });

        let adf = adf_test(&x, max_lags, cv)?;
        let mut cells: Vec<Cell> = adf.aic_by_lag.iter().map(|a| doc.num(*a)).collect();
        cells.push(Cell::Integer(adf.chosen_lags as i64));
        cells.push(doc.num(adf.statistic));
        cells.push(text(match adf.reject_at {
            Some(level) => format!("reject at {level}"),
            None => "unit root".to_string(),
        }));
        adf_rows.push(Row {
            label: name.clone(),
            cells,
        });
    }
    doc.table(Table {
        title: "Differencing search (sample standard deviations)".into(),
        corner: "series".into(),
        columns: ["sd", "s1", "d1", "sd1", "s2", "d2", "sd2"]
            .map(String::from)
            .to_vec(),
        rows: diff_rows,
    });
    let mut columns: Vec<String> = (0..=max_lags).map(|k| format!("AIC k={k}")).collect();
    columns.extend(["lags", "ADF", "decision"].map(String::from));
    doc.table(Table {
        title: "Augmented Dickey-Fuller test with constant".into(),
        corner: "series".into(),
        columns,
        rows: adf_rows,
    });
    doc.note(format!(
        "critical values: {} (1%), {} (5%), {} (10%)",
        cv.one, cv.five, cv.ten
    ));
    Ok(doc)
}

pub fn select_lags(panel: &SeriesPanel, kmax: usize, precision: usize) -> CliResult<ReportDocument> {
    let sel = select_lag(panel, kmax)?;
    let mut doc = ReportDocument::new("select-lags", precision);
    sample_meta(&mut doc, panel);
    doc.meta("nobs", sel.nobs);
    let rows = sel
        .orders
        .iter()
        .enumerate()
        .map(|(i, k)| Row {
            label: k.to_string(),
            cells: vec![doc.num(sel.aic[i]), doc.num(sel.sbc[i])],
        })
        .collect();
    doc.table(Table {
        title: "Information criteria of level VARs".into(),
        corner: "k".into(),
        columns: vec!["AIC".into(), "SBC".into()],
        rows,
    });
    doc.note(format!("k = {} (AIC)", sel.chosen_k));
    Ok(doc)
}

fn trace_table(doc: &ReportDocument, stats: &coint_core::TraceTest) -> Table {
    let rows = stats
        .stats
        .iter()
        .enumerate()
        .map(|(r, stat)| Row {
            label: if r == 0 {
                "r = 0".to_string()
            } else {
                format!("r <= {r}")
            },
            cells: vec![
                Cell::Integer(r as i64),
                doc.num(*stat),
                stats.critical_values[r].map_or(Cell::Number(None), |cv| doc.num(cv)),
                text(match stats.rejects(r) {
                    Some(true) => "reject",
                    Some(false) => "accept",
                    None => "NA",
                }),
            ],
        })
        .collect();
    Table {
        title: "Trace test".into(),
        corner: "H0".into(),
        columns: ["r", "trace", "trace 95%", "decision"].map(String::from).to_vec(),
        rows,
    }
}

fn fit_meta(doc: &mut ReportDocument, panel: &SeriesPanel, fit: &JohansenFit) {
    sample_meta(doc, panel);
    doc.meta("k", fit.k);
    doc.meta("r", fit.r);
    doc.meta("nobs", fit.nobs);
}

pub fn johansen(
    panel: &SeriesPanel,
    k: usize,
    rank: Option<usize>,
    precision: usize,
) -> CliResult<ReportDocument> {
    let table = TraceTable::default();
    let conc = concentrate(panel, k)?;
    let mom = moments(&conc.r0, &conc.r1)?;
    let eig = solve_eigenproblems(&mom)?;
    let trace = trace_test(&eig.eigenvalues, mom.nobs, &table)?;
    let p = panel.dim();

    let mut doc = ReportDocument::new("johansen", precision);
    sample_meta(&mut doc, panel);
    doc.meta("k", k);
    doc.meta("nobs", mom.nobs);
    doc.table(Table {
        title: "Eigenvalues".into(),
        corner: "i".into(),
        columns: vec!["lambda^2".into()],
        rows: eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, v)| Row {
                label: (i + 1).to_string(),
                cells: vec![doc.num(*v)],
            })
            .collect(),
    });
    doc.table(trace_table(&doc, &trace));

    let r = match (rank, trace.selected_rank) {
        (Some(r), selected) => {
            let why = match selected {
                Some(s) => format!("trace test selects {s}"),
                None => "trace test undetermined".to_string(),
            };
            doc.note(format!("r = {r} (fixed by --rank; {why})"));
            r
        }
        (None, Some(s)) if s == p => {
            doc.note(format!(
                "r = {p}: every reduced-rank hypothesis is rejected, so the levels look stationary and no error-correction form is estimated"
            ));
            return Ok(doc);
        }
        (None, Some(s)) => {
            doc.note(format!("r = {s}"));
            s
        }
        (None, None) => {
            doc.note(format!(
                "r undetermined: critical values cover p - r up to {}; pass --rank",
                table.max_dim()
            ));
            return Ok(doc);
        }
    };
    let fit = fit_johansen(panel, k, Some(r), &table)?;
    let names = panel.names();
    if r > 0 {
        doc.table(matrix_table(&doc, "alpha", names, numbered("z", r), &fit.alpha));
        doc.table(matrix_table(&doc, "beta", names, numbered("z", r), &fit.beta));
    }
    let (w, z) = fit.display_vectors();
    doc.table(matrix_table(&doc, "Eigenvectors W / sqrt(nobs)", names, numbered("v", p), &w));
    doc.table(matrix_table(&doc, "Dual eigenvectors Z / sqrt(nobs)", names, numbered("v", p), &z));
    Ok(doc)
}

fn write_components(
    path: &Path,
    panel: &SeriesPanel,
    d: &coint_core::PtDecomposition,
) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    let mut out = Vec::new();
    let names = panel.names();
    let mut header = vec!["period".to_string()];
    for n in names {
        header.push(format!("{n}_permanent"));
        header.push(format!("{n}_transitory"));
    }
    header.extend(numbered("f", d.permanent_factors.ncols()));
    header.extend(numbered("z", d.transitory_factors.ncols()));
    writeln!(out, "{}", header.join("\t")).map_err(io)?;
    for (t, period) in panel.periods().iter().enumerate() {
        let mut row = vec![period.to_string()];
        for j in 0..names.len() {
            row.push(format!("{}", d.permanent[(t, j)]));
            row.push(format!("{}", d.transitory[(t, j)]));
        }
        row.extend(d.permanent_factors.row(t).iter().map(|v| format!("{v}")));
        row.extend(d.transitory_factors.row(t).iter().map(|v| format!("{v}")));
        writeln!(out, "{}", row.join("\t")).map_err(io)?;
    }
    fs::write(path, out).map_err(io)
}

pub fn decomposition(
    panel: &SeriesPanel,
    k: usize,
    r: usize,
    tsv: Option<&Path>,
    precision: usize,
) -> CliResult<ReportDocument> {
    let fit = fit_johansen(panel, k, Some(r), &TraceTable::default())?;
    let d = decompose(panel, &fit)?;
    let mut doc = ReportDocument::new("decompose", precision);
    fit_meta(&mut doc, panel, &fit);
    let names = panel.names();
    let f = numbered("f", fit.p - r);
    let z = numbered("z", r);
    doc.table(matrix_table(&doc, "alpha", names, z.clone(), &fit.alpha));
    doc.table(matrix_table(&doc, "beta", names, z.clone(), &fit.beta));
    doc.table(matrix_table(&doc, "A2", names, z, &d.loadings.a2));
    doc.table(matrix_table(&doc, "alpha_perp", names, f.clone(), &fit.alpha_perp));
    doc.table(matrix_table(&doc, "beta_perp", names, f.clone(), &fit.beta_perp));
    doc.table(matrix_table(&doc, "A1", names, f.clone(), &d.loadings.a1));
    let scaled = &fit.alpha_perp / (fit.nobs as f64).sqrt();
    doc.table(matrix_table(&doc, "Permanent factor weights alpha_perp / sqrt(nobs)", names, f, &scaled));
    if let Some(path) = tsv {
        write_components(path, panel, &d)?;
        doc.note(format!("components written to {}", path.display()));
    }
    Ok(doc)
}

fn resolve_exclusions(panel: &SeriesPanel, exclude: &[String]) -> CliResult<Vec<usize>> {
    let mut idx = Vec::new();
    for name in exclude.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        let i = panel
            .position(name)
            .ok_or_else(|| CliError::Usage(format!("unknown series {name:?}")))?;
        if idx.contains(&i) {
            return Err(CliError::Usage(format!("series {name:?} listed twice")));
        }
        idx.push(i);
    }
    if idx.is_empty() {
        return Err(CliError::Usage(
            "no series excluded: G would keep all p columns, but the test needs m < p".into(),
        ));
    }
    idx.sort_unstable();
    Ok(idx)
}

fn restriction_row(doc: &ReportDocument, label: String, t: &coint_core::RestrictionTest) -> CliResult<Row> {
    let crit = chi_square_quantile(LEVEL, t.df)?;
    Ok(Row {
        label,
        cells: vec![
            Cell::Integer(t.m as i64),
            doc.num(t.lr_stat),
            Cell::Integer(t.df as i64),
            doc.num(crit),
            doc.num(t.p_value),
            text(if t.lr_stat > crit { "reject" } else { "accept" }),
        ],
    })
}

fn restriction_columns() -> Vec<String> {
    ["m", "LR", "df", "chi2 95%", "p-value", "decision"]
        .map(String::from)
        .to_vec()
}

pub fn restriction(
    panel: &SeriesPanel,
    k: usize,
    r: usize,
    exclude: &[String],
    precision: usize,
) -> CliResult<ReportDocument> {
    let excluded = resolve_exclusions(panel, exclude)?;
    let fit = fit_johansen(panel, k, Some(r), &TraceTable::default())?;
    let t = test_exclusion(&fit, &excluded)?;
    let mut doc = ReportDocument::new("test", precision);
    fit_meta(&mut doc, panel, &fit);
    let label = excluded
        .iter()
        .map(|&i| panel.names()[i].clone())
        .collect::<Vec<_>>()
        .join(",");
    let row = restriction_row(&doc, label, &t)?;
    doc.table(Table {
        title: "Common trends exclude the listed series".into(),
        corner: "excluded".into(),
        columns: restriction_columns(),
        rows: vec![row],
    });
    let scaled = &t.alpha_perp_restricted / (fit.nobs as f64).sqrt();
    doc.table(matrix_table(
        &doc,
        "Restricted alpha_perp / sqrt(nobs)",
        panel.names(),
        numbered("f", fit.p - r),
        &scaled,
    ));
    Ok(doc)
}

pub fn scan(
    panel: &SeriesPanel,
    k: usize,
    r: usize,
    max_excluded: usize,
    top: Option<usize>,
    precision: usize,
) -> CliResult<ReportDocument> {
    let fit = fit_johansen(panel, k, Some(r), &TraceTable::default())?;
    let rows = exclusion_scan(&fit, max_excluded)?;
    let mut doc = ReportDocument::new("scan", precision);
    fit_meta(&mut doc, panel, &fit);
    doc.meta("hypotheses", rows.len());
    let shown = top.unwrap_or(rows.len()).min(rows.len());
    let table_rows = rows[..shown]
        .iter()
        .map(|row| restriction_row(&doc, row.labels.join(","), &row.test))
        .collect::<CliResult<Vec<_>>>()?;
    doc.table(Table {
        title: "Exclusion scan, highest p-value first".into(),
        corner: "excluded".into(),
        columns: restriction_columns(),
        rows: table_rows,
    });
    Ok(doc)
}

pub fn simulate(spec_path: &Path, seed: u64, out: &Path, precision: usize) -> CliResult<ReportDocument> {
    let text = fs::read_to_string(spec_path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec = SimSpec::parse(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", spec_path.display())))?;
    let model = spec.var_model()?;
    let sim = simulate_var(&model, &spec.settings(seed))?;
    save_csv(&sim.panel, out)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;

    let mut doc = ReportDocument::new("simulate", precision);
    doc.meta(
        "model",
        match spec.form {
            ModelForm::Vecm => "vecm",
            ModelForm::Var => "var",
        },
    );
    doc.meta("dim", spec.dim);
    if let Some(r) = spec.rank {
        doc.meta("rank", r);
    }
    doc.meta("order", model.order());
    doc.meta("length", spec.length);
    doc.meta("burn_in", spec.burn_in);
    doc.meta("seed", seed);
    sample_meta(&mut doc, &sim.panel);
    let radius = doc.num(sim.spectral_radius);
    doc.table(Table {
        title: "Companion matrix".into(),
        corner: String::new(),
        columns: vec!["value".into()],
        rows: vec![Row {
            label: "spectral radius".into(),
            cells: vec![radius],
        }],
    });
    if sim.explosive {
        doc.note("warning: spectral radius exceeds one; the simulated path is explosive");
    }
    doc.note(format!("wrote {}", out.display()));
    Ok(doc)
}
