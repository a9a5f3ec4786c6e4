use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use qclab::fourier::{dof_report, sample_spectrum_with};
use qclab::metrics::{self, MetricsConfig};
use qclab::qccnn::{self, stripes_vs_checkers, Dataset, HybridModel, Task, TrainConfig, TrainLog};
use qclab::rng::{stream, Domain};
use qclab::{CircuitSpec, EncodingKind};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::aggregate::aggregate_table;
use crate::config::{DatasetSource, ExperimentConfig, ExperimentKind, Scaling};
use crate::error::{HarnessError, Result};
use crate::plot::{self, Series};
use crate::table::{num, Table};

/// Features per quantum-filter window, and per metrics/Fourier circuit.
const N_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cell {
    encoding: usize,
    layers: usize,
    scaling: usize,
    seed: u64,
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub csv_files: Vec<PathBuf>,
    pub plot_files: Vec<PathBuf>,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    scalings: Vec<Scaling>,
    preamble: String,
}

impl Context<'_> {
    fn encoding(&self, c: &Cell) -> EncodingKind {
        self.config.encodings[c.encoding]
    }

    fn scaling(&self, c: &Cell) -> &Scaling {
        &self.scalings[c.scaling]
    }

    fn spec(&self, c: &Cell) -> Result<CircuitSpec> {
        Ok(CircuitSpec::new(self.encoding(c), N_FEATURES, self.scaling(c).value, c.layers)?)
    }

    fn key_columns(&self, c: &Cell) -> Vec<String> {
        vec![
            self.encoding(c).name().to_string(),
            c.layers.to_string(),
            self.scaling(c).label.clone(),
            num(self.scaling(c).value),
            c.seed.to_string(),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }
}

const KEY_HEADER: [&str; 5] = ["encoding", "layers", "scaling", "scaling_value", "seed"];

fn header(extra: &[&str]) -> Vec<String> {
    KEY_HEADER.iter().chain(extra).map(|s| s.to_string()).collect()
}

/// SHA-256 of the resolved config text, leaving out where results go.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let text: String = config
        .resolved()
        .lines()
        .filter(|l| !l.starts_with("output_dir = "))
        .flat_map(|l| [l, "\n"])
        .collect();
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn preamble(config: &ExperimentConfig) -> String {
    format!(
        "qclab-harness {}\nconfig_sha256 = {}\n{}",
        env!("CARGO_PKG_VERSION"),
        config_hash(config),
        config.resolved()
    )
}

/// Runs every cell on the current rayon pool. After each finished cell
/// `flush` sees all results so far, in key order.
fn run_cells<R: Send>(
    cells: &[Cell],
    work: impl Fn(&Cell) -> Result<R> + Sync,
    flush: impl Fn(&BTreeMap<Cell, R>) -> Result<()> + Sync,
) -> Result<BTreeMap<Cell, R>> {
    let done = Mutex::new(BTreeMap::new());
    cells.par_iter().try_for_each(|cell| {
        let result = work(cell)?;
        let mut guard = done.lock().expect("result lock poisoned");
        guard.insert(*cell, result);
        flush(&guard)
    })?;
    Ok(done.into_inner().expect("result lock poisoned"))
}

fn cells(config: &ExperimentConfig, scalings: usize) -> Vec<Cell> {
    let mut out = Vec::new();
    for encoding in 0..config.encodings.len() {
        for &layers in &config.layers {
            for scaling in 0..scalings {
                for &seed in &config.seeds {
                    out.push(Cell { encoding, layers, scaling, seed });
                }
            }
        }
    }
    out
}

/// Loads or generates the dataset named by the config.
pub fn load_dataset(source: &DatasetSource) -> Result<Dataset> {
    match source {
        DatasetSource::Directory(p) => {
            if !p.join("meta").is_file() {
                return Err(HarnessError::config(
                    None,
                    "dataset.path",
                    format!("{} is not a dataset directory (no meta file)", p.display()),
                ));
            }
            Ok(Dataset::load(p)?)
        }
        DatasetSource::StripesVsCheckers { size, n_train, n_val, seed } => {
            Ok(stripes_vs_checkers(*size, *n_train, *n_val, *seed)?)
        }
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    let mut scalings = config.scalings.clone();
    scalings.sort_by(|a, b| a.value.total_cmp(&b.value));
    scalings.dedup_by(|a, b| a.value == b.value);
    let ctx = Context {
        config,
        scalings,
        preamble: preamble(config),
    };
    std::fs::create_dir_all(&config.output_dir).map_err(|e| HarnessError::io(&config.output_dir, e))?;
    let mut out = match config.kind {
        ExperimentKind::TrainSweep | ExperimentKind::ScalingSweep => run_training(&ctx)?,
        ExperimentKind::Metrics => run_metrics(&ctx)?,
        ExperimentKind::Fourier => run_fourier(&ctx)?,
    };
    out.plot_files.retain(|p| p.exists());
    Ok(out)
}

fn best_effort(result: Result<()>, path: &Path, out: &mut RunOutput) {
    match result {
        Ok(()) => out.plot_files.push(path.to_path_buf()),
        Err(e) => log::warn!("skipping {}: {e}", path.display()),
    }
}

fn run_training(ctx: &Context) -> Result<RunOutput> {
    let config = ctx.config;
    let dataset = load_dataset(config.dataset.as_ref().expect("validated: training needs a dataset"))?;
    dataset.check_trainable()?;
    let task = Task::for_classes(dataset.n_classes)?;
    let name = config.kind.name();
    let results_path = ctx.path(&format!("{name}.csv"));
    let epochs_path = ctx.path(&format!("{name}_epochs.csv"));
    let cells = cells(config, ctx.scalings.len());

    let results = run_cells(
        &cells,
        |cell| {
            let spec = ctx.spec(cell)?;
            let model = HybridModel::new(spec, task, dataset.height, dataset.width, config.stride)?
                .init(&mut stream(cell.seed, Domain::Init, 0));
            let train_config = TrainConfig {
                seed: cell.seed,
                ..config.train.clone()
            };
            let (_, log) = qccnn::train(model, &dataset, &train_config)?;
            log::info!(
                "{} L={} f={} seed={}: best train {:.3}",
                ctx.encoding(cell),
                cell.layers,
                ctx.scaling(cell),
                cell.seed,
                log.best_train_accuracy()
            );
            Ok(log)
        },
        |done| {
            training_table(ctx, done).write_atomic(&results_path, &ctx.preamble)?;
            epochs_table(ctx, done).write_atomic(&epochs_path, &ctx.preamble)
        },
    )?;

    let table = training_table(ctx, &results);
    let summary = aggregate_table(&table, name)?;
    let summary_path = ctx.path(&format!("{name}_summary.csv"));
    summary.write_atomic(&summary_path, &ctx.preamble)?;
    let mut out = RunOutput {
        csv_files: vec![results_path, epochs_path, summary_path],
        ..RunOutput::default()
    };
    if config.plots {
        plot_training(ctx, &summary, &mut out);
    }
    Ok(out)
}

fn training_table(ctx: &Context, done: &BTreeMap<Cell, TrainLog>) -> Table {
    let mut t = Table::new(header(&[
        "best_train_accuracy",
        "best_val_accuracy",
        "best_epoch",
        "final_train_loss",
        "final_val_loss",
    ]));
    for (cell, log) in done {
        let last = log.epochs.last().expect("epochs >= 1");
        let mut row = ctx.key_columns(cell);
        row.extend([
            num(log.best_train_accuracy()),
            log.best_val_accuracy().map(num).unwrap_or_default(),
            log.best_epoch().to_string(),
            num(last.train.loss),
            last.val.map(|v| num(v.loss)).unwrap_or_default(),
        ]);
        t.rows.push(row);
    }
    t
}

fn epochs_table(ctx: &Context, done: &BTreeMap<Cell, TrainLog>) -> Table {
    let mut t = Table::new(header(&["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy", "wall_ms"]));
    for (cell, log) in done {
        for e in &log.epochs {
            let mut row = ctx.key_columns(cell);
            row.extend([
                e.epoch.to_string(),
                num(e.train.loss),
                num(e.train.accuracy),
                e.val.map(|v| num(v.loss)).unwrap_or_default(),
                e.val.map(|v| num(v.accuracy)).unwrap_or_default(),
                format!("{:.3}", e.wall_ms),
            ]);
            t.rows.push(row);
        }
    }
    t
}

fn column_series(summary: &Table, x_col: &str, group_cols: &[&str], y_col: &str) -> Vec<Series> {
    let (Some(x), Some(y)) = (summary.column(x_col), summary.column(y_col)) else {
        return Vec::new();
    };
    let groups: Vec<usize> = group_cols.iter().filter_map(|g| summary.column(g)).collect();
    let mut series: Vec<Series> = Vec::new();
    for row in &summary.rows {
        let (Ok(xv), Ok(yv)) = (row[x].parse::<f64>(), row[y].parse::<f64>()) else {
            continue;
        };
        let name = groups.iter().map(|&g| row[g].as_str()).collect::<Vec<_>>().join(" ");
        match series.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push((xv, yv)),
            None => series.push((name, vec![(xv, yv)])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

fn plot_training(ctx: &Context, summary: &Table, out: &mut RunOutput) {
    let dir = ctx.path("plots");
    for metric in ["best_train_accuracy", "best_val_accuracy"] {
        let y = format!("mean_{metric}");
        if ctx.config.kind == ExperimentKind::ScalingSweep {
            let path = dir.join(format!("scaling_{metric}.svg"));
            let series = column_series(summary, "scaling_value", &["encoding", "layers"], &y);
            best_effort(
                plot::line_plot(&path, &format!("{metric} vs scaling"), "scaling factor f", metric, &series),
                &path,
                out,
            );
        } else {
            let path = dir.join(format!("layers_{metric}.svg"));
            let series = column_series(summary, "layers", &["encoding", "scaling"], &y);
            best_effort(
                plot::line_plot(&path, &format!("{metric} vs layers"), "layers", metric, &series),
                &path,
                out,
            );
        }
    }
}

fn run_metrics(ctx: &Context) -> Result<RunOutput> {
    let path = ctx.path("metrics.csv");
    let cells = cells(ctx.config, ctx.scalings.len());
    let table = |done: &BTreeMap<Cell, metrics::MetricsReport>| {
        let mut t = Table::new(header(&["expressibility", "entanglement", "normalized_effective_dimension"]));
        for (cell, r) in done {
            let mut row = ctx.key_columns(cell);
            row.extend([
                num(r.expressibility),
                num(r.entanglement),
                num(r.normalized_effective_dimension),
            ]);
            t.rows.push(row);
        }
        t
    };
    let results = run_cells(
        &cells,
        |cell| {
            let config = MetricsConfig {
                seed: cell.seed,
                ..ctx.config.metrics.clone()
            };
            Ok(metrics::evaluate(&ctx.spec(cell)?, &config)?)
        },
        |done| table(done).write_atomic(&path, &ctx.preamble),
    )?;
    let full = table(&results);
    let summary = aggregate_table(&full, "metrics")?;
    let summary_path = ctx.path("metrics_summary.csv");
    summary.write_atomic(&summary_path, &ctx.preamble)?;
    let mut out = RunOutput {
        csv_files: vec![path, summary_path],
        ..RunOutput::default()
    };
    if ctx.config.plots {
        for metric in ["expressibility", "entanglement", "normalized_effective_dimension"] {
            let p = ctx.path("plots").join(format!("{metric}.svg"));
            let series = column_series(&summary, "layers", &["encoding", "scaling"], &format!("mean_{metric}"));
            best_effort(plot::line_plot(&p, metric, "layers", metric, &series), &p, &mut out);
        }
    }
    Ok(out)
}

fn run_fourier(ctx: &Context) -> Result<RunOutput> {
    let opts = &ctx.config.fourier;
    let coeff_path = ctx.path("fourier_coefficients.csv");
    let cells = cells(ctx.config, ctx.scalings.len());
    let coefficient_table = |done: &BTreeMap<Cell, qclab::fourier::FourierSpectrum>| {
        let mut t = Table::new(header(&["draw", "qubit", "rank", "re", "im"]));
        for (cell, s) in done {
            for (draw, sample) in s.samples.iter().enumerate() {
                for (q, coeffs) in sample.per_qubit_coefficients.iter().enumerate() {
                    for (rank, c) in coeffs.iter().enumerate() {
                        let mut row = ctx.key_columns(cell);
                        row.extend([draw.to_string(), q.to_string(), rank.to_string(), num(c.re), num(c.im)]);
                        t.rows.push(row);
                    }
                }
            }
        }
        t
    };
    let results = run_cells(
        &cells,
        |cell| {
            Ok(sample_spectrum_with(
                &ctx.spec(cell)?,
                opts.n_weight_draws,
                cell.seed,
                opts.grid_points,
                opts.n_coeffs,
            )?)
        },
        |done| coefficient_table(done).write_atomic(&coeff_path, &ctx.preamble),
    )?;

    let mut summary = Table::new(header(&[
        "qubit",
        "rank",
        "mean_re",
        "mean_im",
        "cov_re_re",
        "cov_re_im",
        "cov_im_im",
        "nonnull_fraction",
        "max_abs_imag",
        "max_abs",
    ]));
    let mut nonnull = Table::new(header(&[
        "qubit",
        "nonnull_ranks",
        "max_nonnull_rank",
        "max_abs_imag",
        "max_reconstruction_error",
    ]));
    for (cell, s) in &results {
        for st in s.summary() {
            let mut row = ctx.key_columns(cell);
            row.extend([
                st.qubit.to_string(),
                st.rank.to_string(),
                num(st.mean.re),
                num(st.mean.im),
                num(st.covariance[0][0]),
                num(st.covariance[0][1]),
                num(st.covariance[1][1]),
                num(st.nonnull_fraction),
                num(st.max_abs_imag),
                num(st.max_abs),
            ]);
            summary.rows.push(row);
        }
        let rec = s.max_reconstruction_error();
        for q in 0..s.n_qubits() {
            let max_imag = s
                .samples
                .iter()
                .flat_map(|d| d.per_qubit_coefficients[q].iter())
                .map(|c| c.im.abs())
                .fold(0.0, f64::max);
            let mut row = ctx.key_columns(cell);
            row.extend([
                q.to_string(),
                s.nonnull_rank_count(q).to_string(),
                s.max_nonnull_rank(q).to_string(),
                num(max_imag),
                num(rec),
            ]);
            nonnull.rows.push(row);
        }
    }

    let mut dof = Table::new(["encoding", "layers", "local_dim", "qubits", "n_params", "degree", "nu", "saturated"]);
    for (e, &enc) in ctx.config.encodings.iter().enumerate() {
        for &layers in &ctx.config.layers {
            let cell = Cell { encoding: e, layers, scaling: 0, seed: 0 };
            let r = dof_report(&ctx.spec(&cell)?)?;
            dof.rows.push(vec![
                enc.name().to_string(),
                layers.to_string(),
                r.local_dim.to_string(),
                r.qubits.to_string(),
                r.n_params.to_string(),
                r.degree.to_string(),
                r.nu.to_string(),
                r.saturated.to_string(),
            ]);
        }
    }

    let paths = [
        ("fourier_summary.csv", &summary),
        ("fourier_nonnull.csv", &nonnull),
        ("fourier_dof.csv", &dof),
    ];
    let mut out = RunOutput {
        csv_files: vec![coeff_path],
        ..RunOutput::default()
    };
    for (name, t) in paths {
        let p = ctx.path(name);
        t.write_atomic(&p, &ctx.preamble)?;
        out.csv_files.push(p);
    }

    if ctx.config.plots {
        for (cell, s) in results.iter().filter(|(c, _)| c.seed == ctx.config.seeds[0]) {
            let enc = ctx.encoding(cell);
            let p = ctx
                .path("plots")
                .join(format!("fourier_{}_L{}_{}.svg", enc.name(), cell.layers, ctx.scaling(cell).label.replace('/', "_")));
            let groups: Vec<Series> = (1..=s.n_coeffs)
                .map(|rank| {
                    let pts = s
                        .samples
                        .iter()
                        .flat_map(|d| d.per_qubit_coefficients.iter().map(move |c| (c[rank].re, c[rank].im)))
                        .collect();
                    (format!("rank {rank}"), pts)
                })
                .collect();
            let title = format!("{} L={} f={}", enc.name(), cell.layers, ctx.scaling(cell));
            best_effort(plot::scatter_plot(&p, &title, "Re c", "Im c", &groups), &p, &mut out);
        }
    }
    Ok(out)
}
