//! File formats: CSV data and images, binary PGM heatmaps, trace/curve/benchmark
//! CSVs and JSON documents. Floats are written in shortest round-trip form, so
//! every reader here recovers exactly what the matching writer was given.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::OrderingTestCurve;
use crate::rde::{Method, OrderingResult, RelevanceMap};
use crate::solvers::{SolverTrace, TraceRecord};

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

fn parse_row(record: &csv::StringRecord) -> Option<Vec<f64>> {
    record.iter().map(|f| f.trim().parse().ok()).collect()
}

/// Numeric CSV rows from a reader. A first row that does not parse as numbers is
/// treated as a header. Rows must be non-empty and of equal length.
pub fn parse_data_csv(reader: impl std::io::Read) -> Result<Vec<Vec<f64>>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        match parse_row(&record) {
            Some(row) if !row.is_empty() => rows.push(row),
            _ if line == 0 => continue,
            _ => return Err(Error::invalid(format!("row {} is not numeric", line + 1))),
        }
    }
    if let Some(first) = rows.first() {
        let width = first.len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(Error::invalid(format!(
                "row {} has {} columns, expected {width}",
                i + 1,
                rows[i].len()
            )));
        }
    }
    Ok(rows)
}

pub fn read_data_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_data_csv(fs::File::open(path)?)
}

/// A flattened row-major image (or plain feature vector with `height = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub values: Vec<f64>,
    pub width: usize,
    pub height: usize,
}

/// Reads an input: `.pgm` files map to `[0, 1]` by `/ 255`; anything else is a
/// CSV whose rows are concatenated (one row gives a `1 x n` image).
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let pgm = read_pgm(path)?;
        return Ok(Image {
            values: pgm.pixels.iter().map(|&p| p as f64 / 255.0).collect(),
            width: pgm.width,
            height: pgm.height,
        });
    }
    let rows = read_data_csv(path)?;
    if rows.is_empty() {
        return Err(Error::invalid(format!("{} contains no data", path.display())));
    }
    Ok(Image {
        width: rows[0].len(),
        height: rows.len(),
        values: rows.concat(),
    })
}

/// An 8-bit greyscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Pgm {
    /// Heatmap of scores in `[0, 1]`: `s -> round(255 s)`.
    pub fn from_scores(scores: &[f64], width: usize, height: usize) -> Result<Self> {
        Error::check_len(width * height, scores.len())?;
        if scores.iter().any(|&s| !(-1e-9..=1.0 + 1e-9).contains(&s)) {
            return Err(Error::invalid("heatmap scores must lie in [0, 1]"));
        }
        let pixels = scores
            .iter()
            .map(|s| (255.0 * s.clamp(0.0, 1.0)).round() as u8)
            .collect();
        Ok(Self { width, height, pixels })
    }

    /// Binary P5 encoding with maxval 255.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut header = [0usize; 3];
        let magic = next_token(bytes, &mut pos)?;
        if magic != b"P5" {
            return Err(Error::invalid("not a binary PGM (P5) file"));
        }
        for h in header.iter_mut() {
            let tok = next_token(bytes, &mut pos)?;
            *h = std::str::from_utf8(tok)
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::invalid("malformed PGM header"))?;
        }
        let [width, height, maxval] = header;
        if maxval == 0 || maxval > 255 {
            return Err(Error::invalid(format!("unsupported PGM maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let len = width * height;
        let raster = bytes
            .get(pos..pos + len)
            .ok_or_else(|| Error::invalid("PGM raster is truncated"))?;
        let pixels = if maxval == 255 {
            raster.to_vec()
        } else {
            raster
                .iter()
                .map(|&p| ((p as f64) * 255.0 / maxval as f64).round().min(255.0) as u8)
                .collect()
        };
        Ok(Self { width, height, pixels })
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::invalid("PGM header is truncated")),
        }
    }
    let start = *pos;
    while bytes.get(*pos).is_some_and(|b| !b.is_ascii_whitespace()) {
        *pos += 1;
    }
    Ok(&bytes[start..*pos])
}

pub fn write_pgm(path: impl AsRef<Path>, pgm: &Pgm) -> Result<()> {
    fs::write(path, pgm.to_bytes())?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    Pgm::parse(&fs::read(path)?)
}

fn write_records<T: Serialize>(writer: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

fn read_records<T: DeserializeOwned>(reader: impl std::io::Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Columns `iter,objective,dual_gap,step_size,lmo_call`.
pub fn write_trace_csv(writer: impl Write, trace: &SolverTrace) -> Result<()> {
    write_records(writer, &trace.records)
}

pub fn read_trace_csv(reader: impl std::io::Read) -> Result<Vec<TraceRecord>> {
    read_records(reader)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CurveRow {
    rate: f64,
    mean_distortion: f64,
    std_distortion: f64,
    mean_accuracy: f64,
    std_accuracy: f64,
    num_samples: usize,
}

/// Columns `rate,mean_distortion,std_distortion,mean_accuracy,std_accuracy,num_samples`.
pub fn write_curve_csv(writer: impl Write, curve: &OrderingTestCurve) -> Result<()> {
    curve.validate()?;
    write_records(
        writer,
        (0..curve.len()).map(|i| CurveRow {
            rate: curve.rates[i],
            mean_distortion: curve.mean_distortion[i],
            std_distortion: curve.std_distortion[i],
            mean_accuracy: curve.mean_accuracy[i],
            std_accuracy: curve.std_accuracy[i],
            num_samples: curve.num_samples,
        }),
    )
}

/// The seed is not part of the CSV and comes back as `None`.
pub fn read_curve_csv(reader: impl std::io::Read) -> Result<OrderingTestCurve> {
    let rows: Vec<CurveRow> = read_records(reader)?;
    let num_samples = rows.first().map_or(0, |r| r.num_samples);
    if rows.iter().any(|r| r.num_samples != num_samples) {
        return Err(Error::invalid("inconsistent num_samples column"));
    }
    let curve = OrderingTestCurve {
        rates: rows.iter().map(|r| r.rate).collect(),
        mean_distortion: rows.iter().map(|r| r.mean_distortion).collect(),
        std_distortion: rows.iter().map(|r| r.std_distortion).collect(),
        mean_accuracy: rows.iter().map(|r| r.mean_accuracy).collect(),
        std_accuracy: rows.iter().map(|r| r.std_accuracy).collect(),
        num_samples,
        seed: None,
    };
    curve.validate()?;
    Ok(curve)
}

/// One solver run in a benchmark summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub solver: String,
    pub rate: usize,
    pub iterations: usize,
    pub final_objective: f64,
    pub final_gap: f64,
    pub wall_time_ms: f64,
}

/// Columns `solver,rate,iterations,final_objective,final_gap,wall_time_ms`.
pub fn write_bench_csv(writer: impl Write, rows: &[BenchRow]) -> Result<()> {
    write_records(writer, rows)
}

pub fn read_bench_csv(reader: impl std::io::Read) -> Result<Vec<BenchRow>> {
    read_records(reader)
}

/// Serialized form of an [`OrderingResult`]: the relevance-map keys plus the dense
/// row-major `pi` and the derived `multirate_scores`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingFile {
    pub n: usize,
    pub scores: Vec<f64>,
    pub method: Method,
    pub rates: Vec<usize>,
    pub solver: Option<String>,
    pub seed: Option<u64>,
    pub objective: f64,
    pub pi: Vec<f64>,
    pub multirate_scores: Vec<f64>,
}

impl From<&OrderingResult> for OrderingFile {
    fn from(r: &OrderingResult) -> Self {
        Self {
            n: r.n,
            scores: r.map.scores().to_vec(),
            method: r.map.method,
            rates: r.map.rates.clone(),
            solver: r.map.solver.clone(),
            seed: r.map.seed,
            objective: r.objective,
            pi: r.pi.clone(),
            multirate_scores: r.multirate_scores().to_vec(),
        }
    }
}

impl OrderingFile {
    pub fn to_map(&self) -> Result<RelevanceMap> {
        Error::check_len(self.n, self.scores.len())?;
        Error::check_len(self.n * self.n, self.pi.len())?;
        let mut map = RelevanceMap::new(self.scores.clone(), self.method)?;
        map.rates = self.rates.clone();
        map.solver = self.solver.clone();
        map.seed = self.seed;
        Ok(map)
    }
}

/// Loads a relevance map from either a map file or an ordering file.
pub fn read_map(path: impl AsRef<Path>) -> Result<RelevanceMap> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("pi").is_some() {
        serde_json::from_value::<OrderingFile>(value)?.to_map()
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_csv_header_and_shape() {
        let rows = parse_data_csv("a,b\n0,0\n2, 2\n".as_bytes()).unwrap();
        assert_eq!(rows, vec![vec![0.0, 0.0], vec![2.0, 2.0]]);
        assert!(parse_data_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(parse_data_csv("1,2\nx,3\n".as_bytes()).is_err());
        assert!(parse_data_csv("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn pgm_quantization_and_roundtrip() {
        let pgm = Pgm::from_scores(&[1.0, 1.0 / 3.0, 2.0 / 3.0], 3, 1).unwrap();
        assert_eq!(pgm.pixels, vec![255, 85, 170]);
        let bytes = pgm.to_bytes();
        assert!(bytes.starts_with(b"P5\n3 1\n255\n"));
        assert_eq!(Pgm::parse(&bytes).unwrap(), pgm);
        assert!(Pgm::from_scores(&[0.5], 2, 1).is_err());
        assert!(Pgm::from_scores(&[f64::NAN], 1, 1).is_err());
    }

    #[test]
    fn pgm_comments_and_errors() {
        let pgm = Pgm::parse(b"P5 # comment\n2 1\n255\n\x00\xff").unwrap();
        assert_eq!(pgm.pixels, vec![0, 255]);
        assert!(Pgm::parse(b"P2\n1 1\n255\n0").is_err());
        assert!(Pgm::parse(b"P5\n2 2\n255\n\x00").is_err());
        assert!(Pgm::parse(b"P5\n2").is_err());
    }

    #[test]
    fn trace_csv_roundtrip() {
        let mut trace = SolverTrace::default();
        trace.push(1, 0.1 + 0.2, 1e-300, 1.0 / 3.0, true);
        trace.push(2, 0.25, 0.0, 0.0, false);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("iter,objective,dual_gap,step_size,lmo_call\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), trace.records);
    }

    #[test]
    fn curve_csv_roundtrip() {
        let curve = OrderingTestCurve {
            rates: vec![0.0, 1.0 / 3.0, 1.0],
            mean_distortion: vec![2.5, 0.1 + 0.2, 0.0],
            std_distortion: vec![0.7, 1e-17, 0.0],
            mean_accuracy: vec![0.5, 0.75, 1.0],
            std_accuracy: vec![0.5, 0.4, 0.0],
            num_samples: 64,
            seed: None,
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve).unwrap();
        assert!(buf.starts_with(b"rate,mean_distortion,std_distortion,mean_accuracy,std_accuracy,num_samples\n"));
        assert_eq!(read_curve_csv(buf.as_slice()).unwrap(), curve);
    }

    #[test]
    fn bench_csv_roundtrip() {
        let rows = vec![BenchRow {
            solver: "lafw".into(),
            rate: 3,
            iterations: 17,
            final_objective: 0.125,
            final_gap: 9e-8,
            wall_time_ms: 1.5,
        }];
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &rows).unwrap();
        assert!(buf.starts_with(b"solver,rate,iterations,final_objective,final_gap,wall_time_ms\n"));
        assert_eq!(read_bench_csv(buf.as_slice()).unwrap(), rows);
    }
}
