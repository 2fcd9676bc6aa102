use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sweep::{SweepCell, SweepConfig};
use super::HarnessError;
use crate::aggregate::{cv_evaluate, AggregatorSpec};
use crate::dataset::{Category, Corpus, FileFormat, FoldAssignment, ResponseMatrix, Sentiment, Status};
use crate::metrics::{
    accuracy_row, counterfactual_bias_row, mean_pairwise_q, q_matrix, Band, MetricsError, SubsetSelector, TestVariant,
    EXACT_MAX,
};

/// A named set of responders whose aggregates become report rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportGroup {
    pub label: String,
    pub members: Vec<String>,
}

/// Accuracy and privileged-minus-other Δ on positive headlines for one
/// (category, status) cell. Empty subsets leave the values unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub category: Category,
    pub status: Status,
    pub accuracy: Option<f64>,
    pub delta: Option<f64>,
    pub p_value: Option<f64>,
    pub band: Option<Band>,
    pub n_privileged: usize,
    pub n_other: usize,
    pub test_method: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// `average(LLM)`, `WeightedAverage(human)`, ... or a responder id.
    pub label: String,
    pub overall_accuracy: Option<f64>,
    pub cells: Vec<ReportCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QMatrix {
    pub responders: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub mean_pairwise: Option<f64>,
}

/// Everything needed to rerun and interpret a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    pub seed: u64,
    pub folds: usize,
    pub fold_seed: u64,
    pub aggregators: Vec<AggregatorSpec>,
    pub stacking: String,
    pub sweep: Option<SweepConfig>,
    pub bootstrap_method: Option<String>,
    pub delta_convention: String,
    pub significance_bands: Vec<String>,
    pub exact_test_max_n: usize,
    pub test_methods: Vec<String>,
    pub inputs: Vec<String>,
}

impl Provenance {
    pub fn new(seed: u64, folds: &FoldAssignment, fold_seed: u64, aggregators: &[AggregatorSpec]) -> Self {
        Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            folds: folds.k(),
            fold_seed,
            aggregators: aggregators.to_vec(),
            stacking: "non-negative weights summing to one, squared error to binary status targets, ridge toward uniform, no intercept".into(),
            sweep: None,
            bootstrap_method: None,
            delta_convention: "privileged minus other group (old, man, white), positive sentiment".into(),
            significance_bands: [Band::P01, Band::P05, Band::P10, Band::Ns]
                .iter()
                .map(|b| b.as_str().to_string())
                .collect(),
            exact_test_max_n: EXACT_MAX,
            test_methods: Vec::new(),
            inputs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub rows: Vec<ReportRow>,
    pub sweep: Vec<SweepCell>,
    pub q_matrix: Option<QMatrix>,
}

impl ExperimentReport {
    pub fn new(provenance: Provenance) -> Self {
        ExperimentReport {
            provenance,
            rows: Vec::new(),
            sweep: Vec::new(),
            q_matrix: None,
        }
    }

    /// Records which test methods the rows used.
    pub fn note_test_methods(&mut self) {
        let used: BTreeSet<String> = self
            .rows
            .iter()
            .flat_map(|r| r.cells.iter().filter_map(|c| c.test_method.clone()))
            .collect();
        self.provenance.test_methods = used.into_iter().collect();
    }

    /// The report as it reads back after emission (values at 6 decimals).
    pub fn rounded(&self) -> Self {
        let mut r = self.clone();
        let opt = |v: &mut Option<f64>| *v = v.map(round6);
        for row in &mut r.rows {
            opt(&mut row.overall_accuracy);
            for c in &mut row.cells {
                opt(&mut c.accuracy);
                opt(&mut c.delta);
                opt(&mut c.p_value);
            }
        }
        for c in &mut r.sweep {
            c.mean_accuracy = round6(c.mean_accuracy);
            c.ci_low = round6(c.ci_low);
            c.ci_high = round6(c.ci_high);
        }
        if let Some(q) = &mut r.q_matrix {
            q.values.iter_mut().flatten().for_each(opt);
            opt(&mut q.mean_pairwise);
        }
        r
    }
}

fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

fn row_for(corpus: &Corpus, label: String, predictions: &[Option<f64>]) -> Result<ReportRow, HarnessError> {
    let optional = |r: Result<f64, MetricsError>| match r {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::EmptySubset) => Ok(None),
        Err(e) => Err(e),
    };
    let mut cells = Vec::new();
    for category in Category::ALL {
        for status in Status::ALL {
            let accuracy = optional(accuracy_row(
                corpus,
                predictions,
                &SubsetSelector::all().category(category).status(status),
            ))?;
            let privileged = category.privileged();
            let bias = match counterfactual_bias_row(
                corpus,
                predictions,
                status,
                Sentiment::Positive,
                privileged,
                privileged.complement(),
                TestVariant::Auto,
            ) {
                Ok(b) => Some(b),
                Err(MetricsError::EmptySubset) => None,
                Err(e) => return Err(e.into()),
            };
            cells.push(ReportCell {
                category,
                status,
                accuracy,
                delta: bias.map(|b| b.delta),
                p_value: bias.map(|b| b.p_value),
                band: bias.map(|b| Band::of(b.p_value)),
                n_privileged: bias.map_or(0, |b| b.n_g),
                n_other: bias.map_or(0, |b| b.n_g_prime),
                test_method: bias.map(|b| b.method.to_string()),
            });
        }
    }
    Ok(ReportRow {
        label,
        overall_accuracy: optional(accuracy_row(corpus, predictions, &SubsetSelector::all()))?,
        cells,
    })
}

/// One row per (group, aggregator) from out-of-fold aggregate predictions,
/// then optionally one row per individual responder in first-seen order.
pub fn build_bias_report(
    corpus: &Corpus,
    responses: &ResponseMatrix,
    groups: &[ReportGroup],
    aggregators: &[AggregatorSpec],
    folds: &FoldAssignment,
    include_individuals: bool,
) -> Result<Vec<ReportRow>, HarnessError> {
    responses.ensure_aligned(corpus)?;
    let mut rows = Vec::new();
    for group in groups {
        for spec in aggregators {
            let out = cv_evaluate(spec, corpus, responses, &group.members, folds)?;
            rows.push(row_for(
                corpus,
                format!("{}({})", spec.kind.report_label(), group.label),
                &out.predictions,
            )?);
        }
    }
    if include_individuals {
        let mut seen = BTreeSet::new();
        for id in groups.iter().flat_map(|g| &g.members) {
            if seen.insert(id.clone()) {
                rows.push(row_for(corpus, id.clone(), responses.row(id)?)?);
            }
        }
    }
    Ok(rows)
}

pub fn build_q_matrix(corpus: &Corpus, responses: &ResponseMatrix, responders: &[String]) -> Result<QMatrix, HarnessError> {
    let values = q_matrix(responses, corpus, responders)?;
    Ok(QMatrix {
        responders: responders.to_vec(),
        mean_pairwise: mean_pairwise_q(&values),
        values,
    })
}

// ---- emission ----

pub const ROWS_CSV: &str = "report_rows.csv";
pub const SWEEP_CSV: &str = "report_sweep.csv";
pub const Q_CSV: &str = "q_matrix.csv";
pub const REPORT_JSON: &str = "report.json";
pub const MANIFEST_JSON: &str = "manifest.json";

fn fmt6(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// Pretty JSON with every float written at 6 decimals.
struct SixDecimals<'a>(serde_json::ser::PrettyFormatter<'a>);

impl serde_json::ser::Formatter for SixDecimals<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.6}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn six_decimal_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SixDecimals(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8")
}

fn rows_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "row,overall_accuracy,category,status,accuracy,delta,p_value,band,n_privileged,n_other,test_method\n",
    );
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        for c in &r.cells {
            w.write_record([
                r.label.clone(),
                fmt6(r.overall_accuracy),
                c.category.to_string(),
                c.status.to_string(),
                fmt6(c.accuracy),
                fmt6(c.delta),
                fmt6(c.p_value),
                c.band.map_or_else(String::new, |b| b.as_str().to_string()),
                c.n_privileged.to_string(),
                c.n_other.to_string(),
                c.test_method.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf-8"));
    out
}

fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from("group_type,size,aggregator,repeats,mean_accuracy,ci_low,ci_high\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6}\n",
            c.group_type, c.size, c.aggregator, c.repeats, c.mean_accuracy, c.ci_low, c.ci_high
        ));
    }
    out
}

fn q_csv(q: &QMatrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["responder".to_string()];
    header.extend(q.responders.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (id, row) in q.responders.iter().zip(&q.values) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| fmt6(*v)));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, HarnessError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes the report into `dir` (created if missing) plus `manifest.json`;
/// returns the written paths. Output is byte-stable for equal reports.
pub fn emit_report(report: &ExperimentReport, dir: impl AsRef<Path>, format: FileFormat) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    match format {
        FileFormat::Csv => {
            written.push(write(dir, ROWS_CSV, &rows_csv(&report.rows))?);
            written.push(write(dir, SWEEP_CSV, &sweep_csv(&report.sweep))?);
            if let Some(q) = &report.q_matrix {
                written.push(write(dir, Q_CSV, &q_csv(q))?);
            }
        }
        FileFormat::Json => written.push(write(dir, REPORT_JSON, &six_decimal_json(report))?),
    }
    let manifest = serde_json::to_string_pretty(&report.provenance).expect("manifest serializes") + "\n";
    written.push(write(dir, MANIFEST_JSON, &manifest)?);
    Ok(written)
}

fn read(dir: &Path, name: &str) -> Result<String, HarnessError> {
    let path = dir.join(name);
    std::fs::read_to_string(&path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_opt(s: &str) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| HarnessError::Parse(format!("bad number `{s}`")))
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T, HarnessError> {
    s.parse().map_err(|_| HarnessError::Parse(format!("bad field `{s}`")))
}

/// Reads a report previously written by [`emit_report`].
pub fn read_report(dir: impl AsRef<Path>, format: FileFormat) -> Result<ExperimentReport, HarnessError> {
    let dir = dir.as_ref();
    if format == FileFormat::Json {
        return serde_json::from_str(&read(dir, REPORT_JSON)?).map_err(|e| HarnessError::Parse(e.to_string()));
    }
    let provenance: Provenance =
        serde_json::from_str(&read(dir, MANIFEST_JSON)?).map_err(|e| HarnessError::Parse(e.to_string()))?;
    let mut report = ExperimentReport::new(provenance);

    let text = read(dir, ROWS_CSV)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Parse(e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        let cell = ReportCell {
            category: parse_field(f(2))?,
            status: parse_field(f(3))?,
            accuracy: parse_opt(f(4))?,
            delta: parse_opt(f(5))?,
            p_value: parse_opt(f(6))?,
            band: if f(7).is_empty() { None } else { Some(parse_field(f(7))?) },
            n_privileged: parse_field(f(8))?,
            n_other: parse_field(f(9))?,
            test_method: (!f(10).is_empty()).then(|| f(10).to_string()),
        };
        match report.rows.last_mut() {
            Some(row) if row.label == f(0) => row.cells.push(cell),
            _ => report.rows.push(ReportRow {
                label: f(0).to_string(),
                overall_accuracy: parse_opt(f(1))?,
                cells: vec![cell],
            }),
        }
    }

    let text = read(dir, SWEEP_CSV)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Parse(e.to_string()))?;
        let f = |i: usize| rec.get(i).unwrap_or("");
        report.sweep.push(SweepCell {
            group_type: parse_field(f(0))?,
            size: parse_field(f(1))?,
            aggregator: f(2).parse().map_err(HarnessError::Parse)?,
            repeats: parse_field(f(3))?,
            mean_accuracy: parse_field(f(4))?,
            ci_low: parse_field(f(5))?,
            ci_high: parse_field(f(6))?,
        });
    }

    if dir.join(Q_CSV).exists() {
        let text = read(dir, Q_CSV)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let responders: Vec<String> = rdr
            .headers()
            .map_err(|e| HarnessError::Parse(e.to_string()))?
            .iter()
            .skip(1)
            .map(str::to_string)
            .collect();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| HarnessError::Parse(e.to_string()))?;
            values.push(rec.iter().skip(1).map(parse_opt).collect::<Result<Vec<_>, _>>()?);
        }
        let mut q = QMatrix {
            responders,
            mean_pairwise: mean_pairwise_q(&values),
            values,
        };
        q.mean_pairwise = q.mean_pairwise.map(round6);
        report.q_matrix = Some(q);
    }
    Ok(report)
}
