//! Dataset CSV and model JSON.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Dataset, EnsembleModel, KernelSpec, SvmModel};
use crate::error::{Error, Result};

fn parse_label(tok: &str, line: usize) -> Result<i8> {
    match tok.trim() {
        "+1" | "1" => Ok(1),
        "-1" => Ok(-1),
        other => Err(Error::Parse { line, message: format!("invalid label `{other}`") }),
    }
}

/// `label,f1,...,fd` rows; a header row and `#` comment lines are skipped.
pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        if idx == 0 && rec.get(0).is_some_and(|l| parse_label(l, line).is_err()) {
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Parse { line, message: "expected a label and at least one feature".into() });
        }
        labels.push(parse_label(&rec[0], line)?);
        let feats = rec
            .iter()
            .skip(1)
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse { line, message: format!("invalid feature `{t}`") })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = points.first() {
            let first: &Vec<f64> = first;
            if first.len() != feats.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("{} features, expected {}", feats.len(), first.len()),
                });
            }
        }
        points.push(feats);
    }
    Dataset::new(points, labels)
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend((1..=data.dim()).map(|k| format!("f{k}")));
    w.write_record(&header)?;
    for (p, &l) in data.points().iter().zip(data.labels()) {
        let mut row = vec![if l > 0 { "+1".to_string() } else { "-1".to_string() }];
        row.extend(p.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_predictions_csv<W: Write>(predictions: &[i8], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "prediction"])?;
    for (i, &p) in predictions.iter().enumerate() {
        w.write_record([i.to_string(), if p > 0 { "+1".into() } else { "-1".into() }])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    kernel: String,
    gamma: Option<f64>,
    bits: usize,
    members: Vec<SvmModel>,
    points: Vec<Vec<f64>>,
    labels: Vec<i8>,
}

/// Pretty JSON with sorted keys.
pub fn save_model(model: &EnsembleModel) -> Result<String> {
    let (kernel, gamma) = match model.kernel {
        KernelSpec::Linear => ("linear".to_string(), None),
        KernelSpec::Rbf { gamma } => ("rbf".to_string(), Some(gamma)),
    };
    let file = ModelFile {
        kernel,
        gamma,
        bits: model.bits,
        members: model.members.clone(),
        points: model.data.points().to_vec(),
        labels: model.data.labels().to_vec(),
    };
    // Going through Value sorts object keys.
    let value = serde_json::to_value(&file)?;
    Ok(serde_json::to_string_pretty(&value)?)
}

pub fn load_model(text: &str) -> Result<EnsembleModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    let kernel = match (file.kernel.as_str(), file.gamma) {
        ("linear", _) => KernelSpec::Linear,
        ("rbf", Some(g)) => KernelSpec::rbf(g)?,
        ("rbf", None) => return Err(Error::Data("rbf model without gamma".into())),
        (other, _) => return Err(Error::Data(format!("unknown kernel `{other}`"))),
    };
    if file.bits == 0 || file.bits > 16 {
        return Err(Error::Data(format!("invalid bit width {}", file.bits)));
    }
    let data = Dataset::new(file.points, file.labels)?;
    EnsembleModel::new(kernel, file.bits, data, file.members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_csv_round_trip_and_header_detection() {
        let data = Dataset::new(vec![vec![0.5, 0.0], vec![-0.25, 1e-3]], vec![1, -1]).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,f1,f2\n+1,0.5,0\n"));
        assert_eq!(read_dataset_csv(text.as_bytes()).unwrap(), data);
        let no_header = "1,0.5,0\n-1,-0.25,0.001\n";
        assert_eq!(read_dataset_csv(no_header.as_bytes()).unwrap(), data);
    }

    #[test]
    fn dataset_csv_errors() {
        assert!(matches!(read_dataset_csv("1,0.5\n2,0.1\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read_dataset_csv("1,0.5\n-1,x\n".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_dataset_csv("1,0.5\n-1,0.1,3\n".as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn model_round_trip() {
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![1, -1]).unwrap();
        let model = EnsembleModel::new(
            KernelSpec::Rbf { gamma: 0.5 },
            3,
            data,
            vec![SvmModel { alphas: vec![2, 7], bias: -0.125 }],
        )
        .unwrap();
        let text = save_model(&model).unwrap();
        assert_eq!(load_model(&text).unwrap(), model);
        let keys: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        assert_eq!(keys, vec!["bits", "gamma", "kernel", "labels", "members", "points"]);
        assert!(load_model(&text.replace("\"rbf\"", "\"poly\"")).is_err());
    }
}
