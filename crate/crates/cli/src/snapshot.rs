//! Flat-file snapshots: datasets as CSV, models as JSON.
//!
//! Every file starts with a `# schema: <name> v<version>` row.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context};
use phasecoder::bench::{OrientedBox, Regressor, Sample};

pub const SCHEMA_VERSION: u32 = 1;

pub fn schema_row(name: &str) -> String {
    format!("# schema: {name} v{SCHEMA_VERSION}")
}

pub fn write_schema_row<W: Write>(mut out: W, name: &str) -> std::io::Result<W> {
    writeln!(out, "{}", schema_row(name))?;
    Ok(out)
}

/// Checks the leading schema row and returns the remaining text.
fn strip_schema_row(text: &str, name: &str) -> anyhow::Result<String> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    ensure!(
        first.trim() == schema_row(name),
        "expected schema row '{}', found '{first}'",
        schema_row(name)
    );
    Ok(lines.collect::<Vec<_>>().join("\n"))
}

pub fn write_dataset<W: Write>(out: W, data: &[Sample]) -> anyhow::Result<()> {
    let out = write_schema_row(out, "phasecoder.dataset")?;
    let mut w = csv::Writer::from_writer(out);
    let n_features = data.first().map_or(0, |s| s.features.len());
    let mut header: Vec<String> = ["index", "cx", "cy", "w", "h", "theta", "square"]
        .map(String::from)
        .to_vec();
    header.extend((0..n_features).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (i, s) in data.iter().enumerate() {
        ensure!(
            s.features.len() == n_features,
            "sample {i} has a different feature length"
        );
        let b = s.bbox;
        let mut row = vec![
            i.to_string(),
            b.cx.to_string(),
            b.cy.to_string(),
            b.w.to_string(),
            b.h.to_string(),
            b.theta.to_string(),
            u8::from(s.square).to_string(),
        ];
        row.extend(s.features.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R) -> anyhow::Result<Vec<Sample>> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let body = strip_schema_row(&text, "phasecoder.dataset")?;
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.clone();
    ensure!(
        header.len() > 7 && &header[5] == "theta" && &header[6] == "square",
        "unexpected dataset header"
    );
    let mut data = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let num = |i: usize| -> anyhow::Result<f64> {
            record[i]
                .parse()
                .with_context(|| format!("row {line}, column {}", &header[i]))
        };
        let bbox = OrientedBox::new(num(1)?, num(2)?, num(3)?, num(4)?, num(5)?)?;
        let square = match &record[6] {
            "0" => false,
            "1" => true,
            other => bail!("row {line}: square flag must be 0 or 1, got '{other}'"),
        };
        let features = (7..record.len())
            .map(num)
            .collect::<anyhow::Result<Vec<_>>>()?;
        data.push(Sample {
            bbox,
            square,
            features,
            target_theta: bbox.theta,
        });
    }
    ensure!(!data.is_empty(), "dataset has no rows");
    Ok(data)
}

pub fn save_dataset(path: &Path, data: &[Sample]) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_dataset(BufWriter::new(file), data)
}

pub fn load_dataset(path: &Path) -> anyhow::Result<Vec<Sample>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_dataset(file).with_context(|| format!("reading {}", path.display()))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ModelFile {
    schema: String,
    schema_version: u32,
    model: Regressor,
}

pub fn save_model(path: &Path, model: &Regressor) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let doc = ModelFile {
        schema: "phasecoder.model".into(),
        schema_version: SCHEMA_VERSION,
        model: model.clone(),
    };
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> anyhow::Result<Regressor> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let doc: ModelFile = serde_json::from_reader(BufReader::new(file))?;
    ensure!(
        doc.schema == "phasecoder.model" && doc.schema_version == SCHEMA_VERSION,
        "unsupported model schema {} v{}",
        doc.schema,
        doc.schema_version
    );
    Ok(doc.model)
}
