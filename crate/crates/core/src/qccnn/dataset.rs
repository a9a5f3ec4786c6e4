use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{QclabError, Result};
use crate::rng::{stream, Domain};

/// Images of one split, row-major `[H][W]` flattened, values in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Split {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub height: usize,
    pub width: usize,
    pub n_classes: usize,
    pub train: Split,
    pub val: Split,
}

/// Maps a stored byte to `[−1, 1]`.
pub fn normalize_pixel(p: u8) -> f64 {
    p as f64 / 127.5 - 1.0
}

pub fn quantize_pixel(v: f64) -> u8 {
    ((v.clamp(-1.0, 1.0) + 1.0) * 127.5).round() as u8
}

impl Dataset {
    pub fn new(height: usize, width: usize, n_classes: usize, train: Split, val: Split) -> Result<Self> {
        let ds = Dataset {
            height,
            width,
            n_classes,
            train,
            val,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height < 2 || self.width < 2 {
            return Err(QclabError::Dataset(format!(
                "images must be at least 2x2, got {}x{}",
                self.height, self.width
            )));
        }
        if self.n_classes < 2 {
            return Err(QclabError::Dataset(format!("need >= 2 classes, got {}", self.n_classes)));
        }
        for (name, split) in [("train", &self.train), ("val", &self.val)] {
            if split.images.len() != split.labels.len() {
                return Err(QclabError::Dataset(format!(
                    "{name}: {} images but {} labels",
                    split.images.len(),
                    split.labels.len()
                )));
            }
            if let Some(img) = split.images.iter().find(|img| img.len() != self.height * self.width) {
                return Err(QclabError::Dataset(format!(
                    "{name}: image with {} pixels, expected {}",
                    img.len(),
                    self.height * self.width
                )));
            }
            if let Some(&l) = split.labels.iter().find(|&&l| l >= self.n_classes) {
                return Err(QclabError::Dataset(format!(
                    "{name}: label {l} outside 0..{}",
                    self.n_classes
                )));
            }
        }
        Ok(())
    }

    /// Training requires a non-empty train split containing every class.
    pub fn check_trainable(&self) -> Result<()> {
        if self.train.is_empty() {
            return Err(QclabError::Dataset("train split is empty".into()));
        }
        let mut seen = vec![false; self.n_classes];
        for &l in &self.train.labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(QclabError::Dataset(format!("class {missing} absent from train split")));
        }
        Ok(())
    }

    /// Reads the directory format: `meta`, `{train,val}.bin`, `{train,val}.labels`.
    pub fn load(dir: &Path) -> Result<Self> {
        let io = |what: &str, e: std::io::Error| QclabError::Dataset(format!("{}: {what}: {e}", dir.display()));
        let meta = fs::read_to_string(dir.join("meta")).map_err(|e| io("meta", e))?;
        let mut fields = std::collections::HashMap::new();
        for (n, line) in meta.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| QclabError::Dataset(format!("meta line {}: expected `key value`", n + 1)))?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| QclabError::Dataset(format!("meta line {}: `{}` is not an integer", n + 1, value.trim())))?;
            fields.insert(key.to_string(), value);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| QclabError::Dataset(format!("meta: missing `{k}`")))
        };
        let (height, width, n_classes) = (get("height")?, get("width")?, get("classes")?);
        let read_split = |name: &str| -> Result<Split> {
            let count = get(name)?;
            let pixels = fs::read(dir.join(format!("{name}.bin"))).map_err(|e| io(&format!("{name}.bin"), e))?;
            let labels = fs::read(dir.join(format!("{name}.labels"))).map_err(|e| io(&format!("{name}.labels"), e))?;
            if pixels.len() != count * height * width || labels.len() != count {
                return Err(QclabError::Dataset(format!(
                    "{name}: expected {count} images of {height}x{width}, found {} pixel bytes and {} labels",
                    pixels.len(),
                    labels.len()
                )));
            }
            Ok(Split {
                images: pixels
                    .chunks(height * width)
                    .map(|c| c.iter().map(|&p| normalize_pixel(p)).collect())
                    .collect(),
                labels: labels.iter().map(|&l| l as usize).collect(),
            })
        };
        let train = read_split("train")?;
        let val = read_split("val")?;
        Dataset::new(height, width, n_classes, train, val)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| QclabError::Dataset(format!("{}: {e}", dir.display()));
        if self.n_classes > 256 {
            return Err(QclabError::Dataset("labels must fit in one byte".into()));
        }
        fs::create_dir_all(dir).map_err(io)?;
        let meta = format!(
            "height {}\nwidth {}\nclasses {}\ntrain {}\nval {}\n",
            self.height,
            self.width,
            self.n_classes,
            self.train.len(),
            self.val.len()
        );
        fs::write(dir.join("meta"), meta).map_err(io)?;
        for (name, split) in [("train", &self.train), ("val", &self.val)] {
            let pixels: Vec<u8> = split.images.iter().flatten().map(|&v| quantize_pixel(v)).collect();
            let labels: Vec<u8> = split.labels.iter().map(|&l| l as u8).collect();
            fs::write(dir.join(format!("{name}.bin")), pixels).map_err(io)?;
            fs::write(dir.join(format!("{name}.labels")), labels).map_err(io)?;
        }
        Ok(())
    }
}

/// Two-class set of `size`×`size` images: class 0 holds horizontal or
/// vertical one-pixel stripes, class 1 a one-pixel checkerboard.
/// Each image gets a random pattern phase, a random contrast in
/// `[0.6, 1]` and uniform pixel noise of ±0.15. Pixels are quantized to
/// bytes, so the set round-trips exactly through [`Dataset::save`].
pub fn stripes_vs_checkers(size: usize, n_train: usize, n_val: usize, seed: u64) -> Result<Dataset> {
    if size < 2 {
        return Err(QclabError::Dataset(format!("synthetic images need size >= 2, got {size}")));
    }
    let make = |offset: usize, count: usize| -> Split {
        let mut split = Split::default();
        for i in 0..count {
            let mut rng = stream(seed, Domain::Synthetic, (offset + i) as u64);
            let label = i % 2;
            let (dr, dc) = (rng.random_range(0..2), rng.random_range(0..2));
            let vertical: bool = rng.random();
            let contrast = rng.random_range(0.6..=1.0);
            let image = (0..size * size)
                .map(|p| {
                    let (r, c) = (p / size + dr, p % size + dc);
                    let on = match label {
                        0 if vertical => c % 2 == 0,
                        0 => r % 2 == 0,
                        _ => (r + c) % 2 == 0,
                    };
                    let v = if on { contrast } else { -contrast } + rng.random_range(-0.15..=0.15);
                    normalize_pixel(quantize_pixel(v))
                })
                .collect();
            split.images.push(image);
            split.labels.push(label);
        }
        split
    };
    Dataset::new(size, size, 2, make(0, n_train), make(n_train, n_val))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_mapping_endpoints() {
        assert_eq!(normalize_pixel(0), -1.0);
        assert_eq!(normalize_pixel(255), 1.0);
        assert_eq!(quantize_pixel(normalize_pixel(77)), 77);
        assert_eq!(quantize_pixel(3.0), 255);
    }

    #[test]
    fn round_trip_through_directory() {
        let ds = stripes_vs_checkers(8, 10, 4, 3).unwrap();
        let dir = std::env::temp_dir().join(format!("qclab-ds-{}", std::process::id()));
        ds.save(&dir).unwrap();
        let back = Dataset::load(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn synthetic_set_is_balanced_and_bounded() {
        let ds = stripes_vs_checkers(8, 200, 50, 0).unwrap();
        assert_eq!(ds.train.len(), 200);
        assert_eq!(ds.train.labels.iter().filter(|&&l| l == 1).count(), 100);
        assert!(ds.train.images.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(ds, stripes_vs_checkers(8, 200, 50, 0).unwrap());
        assert_ne!(ds, stripes_vs_checkers(8, 200, 50, 1).unwrap());
    }

    #[test]
    fn missing_class_is_not_trainable() {
        let only_zero = Split {
            images: vec![vec![0.0; 4]; 3],
            labels: vec![0; 3],
        };
        let ds = Dataset::new(2, 2, 2, only_zero, Split::default()).unwrap();
        assert!(matches!(ds.check_trainable(), Err(QclabError::Dataset(_))));
        let empty = Dataset::new(2, 2, 2, Split::default(), Split::default()).unwrap();
        assert!(empty.check_trainable().is_err());
    }

    #[test]
    fn inconsistent_splits_are_rejected() {
        let bad = Split {
            images: vec![vec![0.0; 5]],
            labels: vec![0],
        };
        assert!(Dataset::new(2, 2, 2, bad, Split::default()).is_err());
        let bad_label = Split {
            images: vec![vec![0.0; 4]],
            labels: vec![4],
        };
        assert!(Dataset::new(2, 2, 2, bad_label, Split::default()).is_err());
    }

    #[test]
    fn truncated_files_are_reported() {
        let ds = stripes_vs_checkers(4, 4, 2, 0).unwrap();
        let dir = std::env::temp_dir().join(format!("qclab-trunc-{}", std::process::id()));
        ds.save(&dir).unwrap();
        fs::write(dir.join("val.bin"), [0u8; 3]).unwrap();
        let err = Dataset::load(&dir).unwrap_err();
        fs::remove_dir_all(&dir).unwrap();
        assert!(err.to_string().contains("val"), "{err}");
    }
}
