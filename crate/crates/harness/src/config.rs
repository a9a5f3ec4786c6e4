//! Sectioned `key = value` experiment configs.
//!
//! ```text
//! [experiment]
//! kind = train_sweep
//! encodings = angle_x, higher_order
//! layers = 1..5
//! scalings = pi/4, pi
//! seeds = 0, 1, 2
//! output_dir = out/train
//!
//! [dataset]
//! synthetic = stripes_vs_checkers
//!
//! [train]
//! epochs = 20
//! ```

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use qclab::metrics::{InputSampling, MetricsConfig};
use qclab::qccnn::{TrainConfig, DEFAULT_STRIDE};
use qclab::EncodingKind;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentKind {
    TrainSweep,
    ScalingSweep,
    Metrics,
    Fourier,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TrainSweep => "train_sweep",
            ExperimentKind::ScalingSweep => "scaling_sweep",
            ExperimentKind::Metrics => "metrics",
            ExperimentKind::Fourier => "fourier",
        }
    }

    pub fn is_training(self) -> bool {
        matches!(self, ExperimentKind::TrainSweep | ExperimentKind::ScalingSweep)
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "train_sweep" => Ok(ExperimentKind::TrainSweep),
            "scaling_sweep" => Ok(ExperimentKind::ScalingSweep),
            "metrics" => Ok(ExperimentKind::Metrics),
            "fourier" => Ok(ExperimentKind::Fourier),
            other => Err(format!(
                "unknown experiment kind `{other}` (expected train_sweep, scaling_sweep, metrics or fourier)"
            )),
        }
    }
}

/// A scaling factor with the label it was written as; multiples of π keep
/// a symbolic label such as `pi/4` or `3pi/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub label: String,
    pub value: f64,
}

impl Scaling {
    pub fn pi_fraction(num: i64, den: i64) -> Scaling {
        let label = match (num, den) {
            (1, 1) => "pi".to_string(),
            (-1, 1) => "-pi".to_string(),
            (n, 1) => format!("{n}pi"),
            (1, d) => format!("pi/{d}"),
            (-1, d) => format!("-pi/{d}"),
            (n, d) => format!("{n}pi/{d}"),
        };
        Scaling {
            label,
            value: num as f64 * PI / den as f64,
        }
    }
}

impl fmt::Display for Scaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl FromStr for Scaling {
    type Err = String;

    /// Accepts plain numbers and `[k][*]pi[/m]` (also `π`).
    fn from_str(raw: &str) -> Result<Self, String> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace('π', "pi");
        let bad = || format!("`{raw}` is not a number or a multiple of pi such as pi/4");
        if let Some(pos) = s.find("pi") {
            let coeff = s[..pos].trim_end_matches('*');
            let num: i64 = match coeff {
                "" | "+" => 1,
                "-" => -1,
                c => c.parse().map_err(|_| bad())?,
            };
            let rest = &s[pos + 2..];
            let den: i64 = match rest.strip_prefix('/') {
                None if rest.is_empty() => 1,
                Some(d) => d.parse().map_err(|_| bad())?,
                None => return Err(bad()),
            };
            if den <= 0 {
                return Err(bad());
            }
            let g = gcd(num, den).max(1);
            return Ok(Scaling::pi_fraction(num / g, den / g));
        }
        let value: f64 = s.parse().map_err(|_| bad())?;
        if !value.is_finite() {
            return Err(bad());
        }
        Ok(Scaling {
            label: s,
            value,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Directory(PathBuf),
    StripesVsCheckers {
        size: usize,
        n_train: usize,
        n_val: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierOptions {
    pub n_weight_draws: usize,
    pub grid_points: usize,
    pub n_coeffs: usize,
}

impl Default for FourierOptions {
    fn default() -> Self {
        FourierOptions {
            n_weight_draws: 100,
            grid_points: qclab::fourier::DEFAULT_GRID_POINTS,
            n_coeffs: qclab::fourier::DEFAULT_COEFFICIENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub encodings: Vec<EncodingKind>,
    pub layers: Vec<usize>,
    pub scalings: Vec<Scaling>,
    pub seeds: Vec<u64>,
    pub dataset: Option<DatasetSource>,
    pub train: TrainConfig,
    pub stride: usize,
    pub metrics: MetricsConfig,
    pub fourier: FourierOptions,
    pub output_dir: PathBuf,
    pub plots: bool,
}

const SECTIONS: [&str; 5] = ["experiment", "dataset", "train", "metrics", "fourier"];

/// Raw parsed file: section → key → (value, line number).
type Sections = BTreeMap<String, BTreeMap<String, (String, usize)>>;

fn parse_sections(text: &str) -> Result<Sections, HarnessError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| HarnessError::config(Some(line_no), "", "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(HarnessError::config(
                    Some(line_no),
                    name,
                    format!("unknown section (expected one of {})", SECTIONS.join(", ")),
                ));
            }
            if sections.contains_key(name) {
                return Err(HarnessError::config(Some(line_no), name, "duplicate section"));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::config(Some(line_no), "", format!("expected `key = value`, got `{line}`")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| HarnessError::config(Some(line_no), key.trim(), "key outside of any section"))?;
        let entries = sections.get_mut(section).expect("section inserted on header");
        let key = key.trim().to_string();
        if entries.contains_key(&key) {
            return Err(HarnessError::config(Some(line_no), format!("{section}.{key}"), "duplicate key"));
        }
        entries.insert(key, (value.trim().to_string(), line_no));
    }
    Ok(sections)
}

/// Typed access that removes consumed keys so leftovers can be reported.
struct Reader {
    sections: Sections,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        self.sections.get_mut(section)?.remove(key)
    }

    fn parse<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, HarnessError>
    where
        T::Err: fmt::Display,
    {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|e| HarnessError::config(Some(line), format!("{section}.{key}"), format!("`{v}`: {e}"))),
        }
    }

    fn list<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<(Vec<T>, usize)>, HarnessError>
    where
        T::Err: fmt::Display,
    {
        let Some((v, line)) = self.take(section, key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| HarnessError::config(Some(line), format!("{section}.{key}"), format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err(HarnessError::config(Some(line), format!("{section}.{key}"), "list is empty"));
        }
        Ok(Some((items, line)))
    }

    fn leftovers(&self) -> Option<(String, usize)> {
        self.sections
            .iter()
            .flat_map(|(s, keys)| keys.iter().map(move |(k, (_, line))| (format!("{s}.{k}"), *line)))
            .min_by_key(|(_, line)| *line)
    }
}

/// `1..5` (inclusive) or a comma list.
fn parse_layers(v: &str, line: usize) -> Result<Vec<usize>, HarnessError> {
    let err = |msg: String| HarnessError::config(Some(line), "experiment.layers", msg);
    let layers: Vec<usize> = if let Some((a, b)) = v.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| err(format!("bad range start in `{v}`")))?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| err(format!("bad range end in `{v}`")))?;
        if a > b {
            return Err(err(format!("empty range `{v}`")));
        }
        (a..=b).collect()
    } else {
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| err(format!("`{}` is not a layer count", s.trim()))))
            .collect::<Result<_, _>>()?
    };
    if let Some(bad) = layers.iter().find(|l| !(1..=5).contains(*l)) {
        return Err(err(format!("layer count {bad} outside 1..5")));
    }
    Ok(layers)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut r = Reader {
            sections: parse_sections(text)?,
        };
        let (kind_raw, kind_line) = r
            .take("experiment", "kind")
            .ok_or_else(|| HarnessError::config(None, "experiment.kind", "missing"))?;
        let kind: ExperimentKind = kind_raw
            .parse()
            .map_err(|e: String| HarnessError::config(Some(kind_line), "experiment.kind", e))?;

        let encodings = match r.list::<EncodingKind>("experiment", "encodings")? {
            Some((e, _)) => e,
            None => match kind {
                ExperimentKind::Fourier => vec![EncodingKind::AngleX, EncodingKind::AngleY, EncodingKind::HigherOrder],
                _ => EncodingKind::ALL.to_vec(),
            },
        };
        if kind == ExperimentKind::Fourier && encodings.contains(&EncodingKind::Amplitude) {
            return Err(HarnessError::config(
                None,
                "experiment.encodings",
                "amplitude encoding has no univariate Fourier spectrum",
            ));
        }
        let layers = match r.take("experiment", "layers") {
            Some((v, line)) => parse_layers(&v, line)?,
            None => (1..=5).collect(),
        };
        let scalings = match r.list::<Scaling>("experiment", "scalings")? {
            Some((s, _)) => s,
            None => match kind {
                ExperimentKind::ScalingSweep => [(1, 4), (1, 2), (1, 1), (2, 1), (4, 1)]
                    .iter()
                    .map(|&(n, d)| Scaling::pi_fraction(n, d))
                    .collect(),
                ExperimentKind::Fourier => vec![Scaling::pi_fraction(1, 1)],
                _ => vec![Scaling::pi_fraction(1, 4)],
            },
        };
        let seeds = match r.list::<u64>("experiment", "seeds")? {
            Some((s, _)) => s,
            None if kind.is_training() => vec![0, 1, 2],
            None => vec![0],
        };
        let output_dir = r
            .take("experiment", "output_dir")
            .map(|(v, _)| PathBuf::from(v))
            .unwrap_or_else(|| PathBuf::from(format!("out/{}", kind.name())));
        let plots = r.parse::<bool>("experiment", "plots")?.unwrap_or(true);

        let dataset = match (r.take("dataset", "path"), r.take("dataset", "synthetic")) {
            (Some(_), Some((_, line))) => {
                return Err(HarnessError::config(Some(line), "dataset", "set either path or synthetic, not both"))
            }
            (Some((p, _)), None) => Some(DatasetSource::Directory(PathBuf::from(p))),
            (None, Some((name, line))) => {
                if name != "stripes_vs_checkers" {
                    return Err(HarnessError::config(
                        Some(line),
                        "dataset.synthetic",
                        format!("unknown generator `{name}` (expected stripes_vs_checkers)"),
                    ));
                }
                Some(DatasetSource::StripesVsCheckers {
                    size: r.parse("dataset", "size")?.unwrap_or(8),
                    n_train: r.parse("dataset", "train")?.unwrap_or(200),
                    n_val: r.parse("dataset", "val")?.unwrap_or(50),
                    seed: r.parse("dataset", "seed")?.unwrap_or(0),
                })
            }
            (None, None) => None,
        };
        if kind.is_training() && dataset.is_none() {
            return Err(HarnessError::config(None, "dataset", "training experiments need dataset.path or dataset.synthetic"));
        }

        let d = TrainConfig::default();
        let train = TrainConfig {
            epochs: r.parse("train", "epochs")?.unwrap_or(d.epochs),
            learning_rate: r.parse("train", "learning_rate")?.unwrap_or(d.learning_rate),
            batch_size: r.parse("train", "batch_size")?.unwrap_or(d.batch_size),
            momentum: r.parse("train", "momentum")?.unwrap_or(d.momentum),
            seed: 0,
        };
        train
            .validate()
            .map_err(|e| HarnessError::config(None, "train", e.to_string()))?;
        let stride = r.parse("train", "stride")?.unwrap_or(DEFAULT_STRIDE);
        if stride == 0 {
            return Err(HarnessError::config(None, "train.stride", "must be >= 1"));
        }

        let m = MetricsConfig::default();
        let metrics = MetricsConfig {
            n_fidelity_pairs: r.parse("metrics", "n_fidelity_pairs")?.unwrap_or(m.n_fidelity_pairs),
            n_bins: r.parse("metrics", "n_bins")?.unwrap_or(m.n_bins),
            n_entanglement_samples: r.parse("metrics", "n_entanglement_samples")?.unwrap_or(m.n_entanglement_samples),
            n_theta_samples: r.parse("metrics", "n_theta_samples")?.unwrap_or(m.n_theta_samples),
            n_data_samples: r.parse("metrics", "n_data_samples")?.unwrap_or(m.n_data_samples),
            gamma: r.parse("metrics", "gamma")?.unwrap_or(m.gamma),
            n_effective: r.parse("metrics", "n_effective")?.unwrap_or(m.n_effective),
            input: r.parse::<InputSampling>("metrics", "input")?.unwrap_or(m.input),
            seed: 0,
        };
        metrics
            .validate()
            .map_err(|e| HarnessError::config(None, "metrics", e.to_string()))?;

        let f = FourierOptions::default();
        let fourier = FourierOptions {
            n_weight_draws: r.parse("fourier", "n_weight_draws")?.unwrap_or(f.n_weight_draws),
            grid_points: r.parse("fourier", "grid_points")?.unwrap_or(f.grid_points),
            n_coeffs: r.parse("fourier", "n_coeffs")?.unwrap_or(f.n_coeffs),
        };
        if fourier.n_weight_draws == 0 || fourier.grid_points < 2 * fourier.n_coeffs + 1 {
            return Err(HarnessError::config(
                None,
                "fourier",
                "need n_weight_draws >= 1 and grid_points >= 2 * n_coeffs + 1",
            ));
        }

        if let Some((key, line)) = r.leftovers() {
            return Err(HarnessError::config(Some(line), key, "unknown key"));
        }
        Ok(ExperimentConfig {
            kind,
            encodings,
            layers,
            scalings,
            seeds,
            dataset,
            train,
            stride,
            metrics,
            fourier,
            output_dir,
            plots,
        })
    }

    /// Canonical text of the resolved config; parsing it yields `self`.
    pub fn resolved(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut out = String::new();
        out.push_str("[experiment]\n");
        out.push_str(&format!("kind = {}\n", self.kind.name()));
        out.push_str(&format!("encodings = {}\n", join(self.encodings.iter().map(|e| e.name().to_string()).collect())));
        out.push_str(&format!("layers = {}\n", join(self.layers.iter().map(|l| l.to_string()).collect())));
        out.push_str(&format!("scalings = {}\n", join(self.scalings.iter().map(|s| s.label.clone()).collect())));
        out.push_str(&format!("seeds = {}\n", join(self.seeds.iter().map(|s| s.to_string()).collect())));
        out.push_str(&format!("output_dir = {}\n", self.output_dir.display()));
        out.push_str(&format!("plots = {}\n", self.plots));
        match &self.dataset {
            Some(DatasetSource::Directory(p)) => out.push_str(&format!("[dataset]\npath = {}\n", p.display())),
            Some(DatasetSource::StripesVsCheckers { size, n_train, n_val, seed }) => out.push_str(&format!(
                "[dataset]\nsynthetic = stripes_vs_checkers\nsize = {size}\ntrain = {n_train}\nval = {n_val}\nseed = {seed}\n"
            )),
            None => {}
        }
        let t = &self.train;
        out.push_str(&format!(
            "[train]\nepochs = {}\nlearning_rate = {:?}\nbatch_size = {}\nmomentum = {:?}\nstride = {}\n",
            t.epochs, t.learning_rate, t.batch_size, t.momentum, self.stride
        ));
        let m = &self.metrics;
        out.push_str(&format!(
            "[metrics]\nn_fidelity_pairs = {}\nn_bins = {}\nn_entanglement_samples = {}\nn_theta_samples = {}\nn_data_samples = {}\ngamma = {:?}\nn_effective = {}\ninput = {}\n",
            m.n_fidelity_pairs, m.n_bins, m.n_entanglement_samples, m.n_theta_samples, m.n_data_samples, m.gamma, m.n_effective, m.input.name()
        ));
        let f = &self.fourier;
        out.push_str(&format!(
            "[fourier]\nn_weight_draws = {}\ngrid_points = {}\nn_coeffs = {}\n",
            f.n_weight_draws, f.grid_points, f.n_coeffs
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbolic_scalings() {
        let s: Scaling = "pi/4".parse().unwrap();
        assert_eq!(s.label, "pi/4");
        assert_eq!(s.value, PI / 4.0);
        assert_eq!("4pi".parse::<Scaling>().unwrap().value, 4.0 * PI);
        assert_eq!("2*pi/8".parse::<Scaling>().unwrap().label, "pi/4");
        assert_eq!("π".parse::<Scaling>().unwrap().label, "pi");
        assert_eq!("-pi/2".parse::<Scaling>().unwrap().value, -PI / 2.0);
        assert_eq!("0.5".parse::<Scaling>().unwrap().value, 0.5);
        for bad in ["pi/0", "xpi", "pi4", "abc", "inf"] {
            assert!(bad.parse::<Scaling>().is_err(), "{bad}");
        }
    }

    #[test]
    fn defaults_per_kind() {
        let c = ExperimentConfig::parse("[experiment]\nkind = metrics\n").unwrap();
        assert_eq!(c.encodings.len(), 4);
        assert_eq!(c.layers, vec![1, 2, 3, 4, 5]);
        assert_eq!(c.seeds, vec![0]);
        let c = ExperimentConfig::parse("[experiment]\nkind = scaling_sweep\n[dataset]\nsynthetic = stripes_vs_checkers\n").unwrap();
        let labels: Vec<_> = c.scalings.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["pi/4", "pi/2", "pi", "2pi", "4pi"]);
        assert_eq!(c.seeds, vec![0, 1, 2]);
        let c = ExperimentConfig::parse("[experiment]\nkind = fourier\n").unwrap();
        assert!(!c.encodings.contains(&EncodingKind::Amplitude));
        assert_eq!(c.scalings[0].label, "pi");
    }

    #[test]
    fn resolved_text_round_trips() {
        let text = "[experiment]\nkind = train_sweep # comment\nencodings = rx, zz\nlayers = 2..3\nscalings = pi/4, 0.5\nseeds = 7\n\n[dataset]\nsynthetic = stripes_vs_checkers\nsize = 6\n[train]\nepochs = 3\nlearning_rate = 0.05\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.layers, vec![2, 3]);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(ExperimentConfig::parse(&c.resolved()).unwrap(), c);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let err = |t: &str| ExperimentConfig::parse(t).unwrap_err().to_string();
        let e = err("[experiment]\nkind = metrics\nlayers = 0..3\n");
        assert!(e.contains("line 3") && e.contains("experiment.layers"), "{e}");
        let e = err("[experiment]\nkind = metrics\nencodings = angle_x, bogus\n");
        assert!(e.contains("line 3") && e.contains("bogus"), "{e}");
        let e = err("[experiment]\nkind = metrics\n[train]\nepocs = 3\n");
        assert!(e.contains("line 4") && e.contains("train.epocs"), "{e}");
        let e = err("[experiment]\nkind = nope\n");
        assert!(e.contains("experiment.kind"), "{e}");
        let e = err("[experiment]\nkind = metrics\n[trian]\n");
        assert!(e.contains("line 3") && e.contains("trian"), "{e}");
        let e = err("kind = metrics\n");
        assert!(e.contains("line 1"), "{e}");
        let e = err("[experiment]\nkind = train_sweep\n");
        assert!(e.contains("dataset"), "{e}");
        let e = err("[experiment]\nkind = fourier\nencodings = amplitude\n");
        assert!(e.contains("amplitude"), "{e}");
        let e = err("[experiment]\nkind = metrics\n[train]\nlearning_rate = -1\n");
        assert!(e.contains("learning rate"), "{e}");
    }
}
