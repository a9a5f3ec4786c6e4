//! Converts packed-array exports (MedMNIST-style `.npz`, or a directory of
//! `.npy` files) into the on-disk dataset directory format.
//!
//! Expected arrays: `train_images`, `val_images` (uint8, `[N, H, W]` or
//! `[N, H, W, 1]`) and `train_labels`, `val_labels` (any integer type,
//! `[N]` or `[N, 1]`).

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use npyz::npz::NpzArchive;
use npyz::{DType, NpyFile, TypeChar};
use qclab::qccnn::{normalize_pixel, Dataset, Split};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct ConvertOptions {
    /// Keep only the first `n` images of each split.
    pub max_train: Option<usize>,
    pub max_val: Option<usize>,
}

struct RawArray {
    shape: Vec<usize>,
    values: Vec<i64>,
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Convert(msg.into())
}

fn read_array<R: Read>(name: &str, npy: NpyFile<R>) -> Result<RawArray> {
    let shape: Vec<usize> = npy.shape().iter().map(|&d| d as usize).collect();
    let DType::Plain(ts) = npy.dtype() else {
        return Err(bad(format!("{name}: structured arrays are not supported")));
    };
    let err = |e: std::io::Error| bad(format!("{name}: {e}"));
    let values: Vec<i64> = match (ts.type_char(), ts.size_field()) {
        (TypeChar::Uint, 1) => npy.into_vec::<u8>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Uint, 2) => npy.into_vec::<u16>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Uint, 4) => npy.into_vec::<u32>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Uint, 8) => npy.into_vec::<u64>().map_err(err)?.into_iter().map(|v| v as i64).collect(),
        (TypeChar::Int, 1) => npy.into_vec::<i8>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Int, 2) => npy.into_vec::<i16>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Int, 4) => npy.into_vec::<i32>().map_err(err)?.into_iter().map(i64::from).collect(),
        (TypeChar::Int, 8) => npy.into_vec::<i64>().map_err(err)?,
        _ => return Err(bad(format!("{name}: unsupported dtype {ts}"))),
    };
    Ok(RawArray { shape, values })
}

fn load_arrays(input: &Path) -> Result<[RawArray; 4]> {
    const NAMES: [&str; 4] = ["train_images", "train_labels", "val_images", "val_labels"];
    if input.is_dir() {
        let read = |name: &str| -> Result<RawArray> {
            let path = input.join(format!("{name}.npy"));
            let file = File::open(&path).map_err(|e| HarnessError::io(&path, e))?;
            let npy = NpyFile::new(BufReader::new(file)).map_err(|e| HarnessError::io(&path, e))?;
            read_array(name, npy)
        };
        Ok([read(NAMES[0])?, read(NAMES[1])?, read(NAMES[2])?, read(NAMES[3])?])
    } else {
        let mut archive = NpzArchive::open(input).map_err(|e| HarnessError::io(input, e))?;
        let mut read = |name: &str| -> Result<RawArray> {
            let npy = archive
                .by_name(name)
                .map_err(|e| HarnessError::io(input, e))?
                .ok_or_else(|| bad(format!("{}: no array `{name}`", input.display())))?;
            read_array(name, npy)
        };
        Ok([read(NAMES[0])?, read(NAMES[1])?, read(NAMES[2])?, read(NAMES[3])?])
    }
}

fn image_dims(name: &str, a: &RawArray) -> Result<(usize, usize, usize)> {
    match a.shape.as_slice() {
        [n, h, w] | [n, h, w, 1] => Ok((*n, *h, *w)),
        s => Err(bad(format!("{name}: expected [N, H, W] images, got shape {s:?}"))),
    }
}

fn split(name: &str, images: &RawArray, labels: &RawArray, limit: Option<usize>) -> Result<(Split, usize, usize)> {
    let (n, h, w) = image_dims(name, images)?;
    let label_ok = matches!(labels.shape.as_slice(), [m] | [m, 1] if *m == n);
    if !label_ok {
        return Err(bad(format!("{name}: {n} images but labels of shape {:?}", labels.shape)));
    }
    if let Some(v) = images.values.iter().find(|v| !(0..=255).contains(*v)) {
        return Err(bad(format!("{name}: pixel value {v} does not fit in a byte")));
    }
    if let Some(v) = labels.values.iter().find(|v| !(0..=255).contains(*v)) {
        return Err(bad(format!("{name}: label {v} outside 0..=255")));
    }
    let keep = limit.map_or(n, |l| l.min(n));
    let pixels = h * w;
    Ok((
        Split {
            images: images.values[..keep * pixels]
                .chunks(pixels)
                .map(|c| c.iter().map(|&p| normalize_pixel(p as u8)).collect())
                .collect(),
            labels: labels.values[..keep].iter().map(|&l| l as usize).collect(),
        },
        h,
        w,
    ))
}

/// Reads `input`, writes the dataset directory `output` and returns the
/// converted dataset. The class count is one more than the largest label.
pub fn convert_dataset(input: &Path, output: &Path, options: ConvertOptions) -> Result<Dataset> {
    let [ti, tl, vi, vl] = load_arrays(input)?;
    let (train, h, w) = split("train", &ti, &tl, options.max_train)?;
    let (val, vh, vw) = split("val", &vi, &vl, options.max_val)?;
    if (h, w) != (vh, vw) {
        return Err(bad(format!("train images are {h}x{w} but val images are {vh}x{vw}")));
    }
    let n_classes = train.labels.iter().chain(&val.labels).max().map_or(0, |m| m + 1);
    let ds = Dataset::new(h, w, n_classes, train, val)?;
    ds.save(output)?;
    Ok(ds)
}
