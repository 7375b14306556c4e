//! Datasets, splits, standardization and label noise.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{fmt, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Mismatch(format!("{} rows for {} labels", x.len(), y.len())));
        }
        if n_classes < 2 {
            return Err(Error::param("n_classes", "need at least 2 classes"));
        }
        if let Some(first) = x.first() {
            if first.is_empty() {
                return Err(Error::param("x", "rows need at least one feature"));
            }
            if x.iter().any(|r| r.len() != first.len()) {
                return Err(Error::Mismatch("rows have different widths".into()));
            }
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::param("x", "features must be finite"));
        }
        if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::param("y", format!("label {bad} outside [0, {n_classes})")));
        }
        Ok(Dataset { x, y, n_classes })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Reads `<features...>,label` with a header row; the last column must be `label`.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if header.len() < 2 || header.last().map(String::as_str) != Some("label") {
            return Err(Error::Schema(format!(
                "expected `f1,...,fd,label`, found `{}`",
                header.join(",")
            )));
        }
        let d = header.len() - 1;
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = i as u64 + 1;
            let err = |column: &str, reason: String| Error::Parse {
                row,
                column: column.into(),
                reason,
            };
            if rec.len() != d + 1 {
                return Err(err("*", format!("expected {} fields, found {}", d + 1, rec.len())));
            }
            let mut features = Vec::with_capacity(d);
            for j in 0..d {
                let v: f64 = rec[j].trim().parse().map_err(|e| err(&header[j], format!("{e}")))?;
                if !v.is_finite() {
                    return Err(err(&header[j], "non-finite value".into()));
                }
                features.push(v);
            }
            let label: usize = rec[d].trim().parse().map_err(|e| err("label", format!("{e}")))?;
            if label > u16::MAX as usize {
                return Err(err("label", format!("class id {label} is too large")));
            }
            x.push(features);
            y.push(label);
        }
        let n_classes = y.iter().max().map_or(0, |m| m + 1);
        if n_classes < 2 {
            return Err(Error::SingleClass("dataset needs labels from at least 2 classes".into()));
        }
        Dataset::new(x, y, n_classes)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for (row, label) in self.x.iter().zip(&self.y) {
            let mut rec: Vec<String> = row.iter().map(|v| fmt::float(*v)).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Isotropic unit-variance Gaussian classes. Class `c` is centered at
/// `separation / sqrt(2)` along axis `c`, so every pair of class means is
/// `separation` apart. Class sizes differ by at most one.
pub fn gaussian_classes(n: usize, dim: usize, n_classes: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_classes < 2 || dim < n_classes {
        return Err(Error::param("dim", "need n_classes >= 2 and dim >= n_classes"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::param("separation", "must be finite and non-negative"));
    }
    let mut g = rng::stream(seed);
    let mut y: Vec<usize> = (0..n).map(|i| i % n_classes).collect();
    y.shuffle(&mut g);
    let shift = separation / std::f64::consts::SQRT_2;
    let x = y
        .iter()
        .map(|&c| {
            (0..dim)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut g);
                    z + if j == c { shift } else { 0.0 }
                })
                .collect()
        })
        .collect();
    Dataset::new(x, y, n_classes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Stratified train/val/test split (default 60/20/20), standardized with
/// training-split statistics. Zero-variance training columns are only centered.
pub fn stratified_split(data: &Dataset, fractions: (f64, f64), seed: u64) -> Result<Split> {
    let (ft, fv) = fractions;
    if !(ft > 0.0 && fv > 0.0 && ft + fv < 1.0) {
        return Err(Error::param("fractions", "train and val fractions must be positive and sum below 1"));
    }
    let mut g = rng::stream(seed);
    let (mut tr, mut va, mut te) = (Vec::new(), Vec::new(), Vec::new());
    for c in 0..data.n_classes {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.y[i] == c).collect();
        idx.shuffle(&mut g);
        let n = idx.len() as f64;
        let nt = (ft * n).round() as usize;
        let nv = ((fv * n).round() as usize).min(idx.len() - nt);
        tr.extend_from_slice(&idx[..nt]);
        va.extend_from_slice(&idx[nt..nt + nv]);
        te.extend_from_slice(&idx[nt + nv..]);
    }
    for part in [&mut tr, &mut va, &mut te] {
        part.shuffle(&mut g);
    }
    if tr.is_empty() || va.is_empty() || te.is_empty() {
        return Err(Error::InsufficientData("a split is empty".into()));
    }
    let mut split = Split {
        train: data.subset(&tr),
        val: data.subset(&va),
        test: data.subset(&te),
    };
    let d = data.dim();
    let n = split.train.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| split.train.x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            let v = split.train.x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        for row in &mut part.x {
            for j in 0..d {
                row[j] = (row[j] - mean[j]) / sd[j];
            }
        }
    }
    Ok(split)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Replacement class drawn uniformly from all classes, original included.
    #[default]
    Symmetric,
    /// Replacement class drawn uniformly from the other classes.
    SymmetricExclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

/// Replaces each label, with probability `rate`, by a uniform class draw.
pub fn inject_noise(labels: &[usize], n_classes: usize, spec: &NoiseSpec) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&spec.rate) && spec.rate != 1.0 {
        return Err(Error::param("rate", format!("{} not in [0, 1]", spec.rate)));
    }
    if n_classes < 2 {
        return Err(Error::param("n_classes", "need at least 2 classes"));
    }
    if let Some(bad) = labels.iter().find(|&&c| c >= n_classes) {
        return Err(Error::param("labels", format!("label {bad} outside [0, {n_classes})")));
    }
    let mut g = rng::stream(spec.seed);
    Ok(labels
        .iter()
        .map(|&y| {
            let flip = g.random::<f64>() < spec.rate;
            match (flip, spec.mode) {
                (false, _) => y,
                (true, NoiseMode::Symmetric) => g.random_range(0..n_classes),
                (true, NoiseMode::SymmetricExclusive) => {
                    let k = g.random_range(0..n_classes - 1);
                    if k >= y {
                        k + 1
                    } else {
                        k
                    }
                }
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_rates() {
        let labels: Vec<usize> = (0..100_000).map(|i| i % 2).collect();
        let spec = |rate, mode| NoiseSpec { rate, mode, seed: 5 };
        assert_eq!(inject_noise(&labels, 2, &spec(0.0, NoiseMode::Symmetric)).unwrap(), labels);
        let frac = |out: Vec<usize>| out.iter().zip(&labels).filter(|(a, b)| a != b).count() as f64 / labels.len() as f64;
        let all = frac(inject_noise(&labels, 2, &spec(1.0, NoiseMode::Symmetric)).unwrap());
        assert!((all - 0.5).abs() < 0.01, "{all}");
        let f = frac(inject_noise(&labels, 2, &spec(0.4, NoiseMode::Symmetric)).unwrap());
        assert!((f - 0.2).abs() < 0.006, "{f}");
        let f = frac(inject_noise(&labels, 2, &spec(0.4, NoiseMode::SymmetricExclusive)).unwrap());
        assert!((f - 0.4).abs() < 0.006, "{f}");
        let a = inject_noise(&labels[..50], 2, &spec(0.4, NoiseMode::Symmetric)).unwrap();
        assert_eq!(a, inject_noise(&labels[..50], 2, &spec(0.4, NoiseMode::Symmetric)).unwrap());
    }

    #[test]
    fn split_is_stratified_and_standardized() {
        let data = gaussian_classes(600, 20, 2, 2.5, 3).unwrap();
        let s = stratified_split(&data, (0.6, 0.2), 9).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (360, 120, 120));
        assert_eq!(s.train.y.iter().filter(|&&c| c == 1).count(), 180);
        for j in 0..20 {
            let col: Vec<f64> = s.train.x.iter().map(|r| r[j]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let v = col.iter().map(|c| (c - m).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_round_trip() {
        let data = gaussian_classes(30, 4, 3, 1.0, 1).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.y, data.y);
        assert_eq!(back.n_classes, 3);
        let bad = "a,b,label\n1,2,0\n1,x,1\n";
        assert!(matches!(Dataset::read_csv(bad.as_bytes()), Err(Error::Parse { row: 2, .. })));
        assert!(matches!(Dataset::read_csv("a,b\n".as_bytes()), Err(Error::Schema(_))));
    }
}
