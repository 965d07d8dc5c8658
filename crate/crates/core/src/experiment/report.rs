use serde::{Deserialize, Serialize};

/// CSV column order.
pub const COLUMNS: [&str; 17] = [
    "bundle",
    "config",
    "sloc_p",
    "sloc_ps",
    "slice_pct",
    "tss_t",
    "tss_ts",
    "br",
    "npc",
    "nte",
    "rt_ms",
    "cost_proxy",
    "patched",
    "patch_line",
    "same_location",
    "transferred",
    "stop_reason",
];

/// One CSV row. Columns that do not apply to a configuration are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub bundle: String,
    pub config: String,
    pub sloc_p: usize,
    pub sloc_ps: Option<usize>,
    pub slice_pct: Option<f64>,
    pub tss_t: usize,
    pub tss_ts: Option<usize>,
    pub br: Option<usize>,
    pub npc: usize,
    pub nte: u64,
    pub rt_ms: u64,
    pub cost_proxy: u64,
    pub patched: bool,
    pub patch_line: Option<usize>,
    pub same_location: Option<bool>,
    pub transferred: Option<bool>,
    pub stop_reason: String,
}

/// Percentages are reported to one decimal place.
pub fn one_decimal(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub slice_ms: u64,
    pub reduce_ms: u64,
    pub localize_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    #[serde(flatten)]
    pub row: ReportRow,
    pub template: Option<String>,
    pub new_text: Option<String>,
    pub list_len: Option<usize>,
    pub unbuildable: usize,
    /// Patched line equals the bundle's known bug line.
    pub ground_truth_line: Option<bool>,
    /// ... and the new text equals the known fix.
    pub ground_truth_text: Option<bool>,
    pub stage_ms: StageTimings,
    pub error: Option<String>,
}

impl RepairReport {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn to_csv<'a>(rows: impl IntoIterator<Item = &'a ReportRow>) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn emit_report(reports: &[RepairReport], format: Format) -> String {
    match format {
        Format::Csv => to_csv(reports.iter().map(|r| &r.row)),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(reports).expect("json");
            s.push('\n');
            s
        }
    }
}

pub fn read_csv(text: &str) -> Result<Vec<ReportRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}

/// The CSV with the wall-clock column removed.
pub fn without_wall_clock(csv_text: &str) -> String {
    let idx = COLUMNS.iter().position(|c| *c == "rt_ms").expect("column");
    csv_text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            if cells.len() > idx {
                cells.remove(idx);
            }
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub rt_pct: Option<f64>,
    pub nte_pct: Option<f64>,
    pub npc_pct: Option<f64>,
    pub cost_pct: Option<f64>,
    /// Baseline rank minus other rank; positive means the bug moved up.
    pub br_delta: Option<i64>,
    pub same_location: Option<bool>,
}

/// `(base - other) / base * 100`; negative when `other` is worse. Zero over
/// zero is 0; any other value over zero is undefined.
pub fn pct_reduction(base: f64, other: f64) -> Option<f64> {
    if base == 0.0 {
        (other == 0.0).then_some(0.0)
    } else {
        Some((base - other) / base * 100.0)
    }
}

pub fn compare(base: &ReportRow, other: &ReportRow) -> Reduction {
    Reduction {
        rt_pct: pct_reduction(base.rt_ms as f64, other.rt_ms as f64),
        nte_pct: pct_reduction(base.nte as f64, other.nte as f64),
        npc_pct: pct_reduction(base.npc as f64, other.npc as f64),
        cost_pct: pct_reduction(base.cost_proxy as f64, other.cost_proxy as f64),
        br_delta: match (base.br, other.br) {
            (Some(b), Some(o)) => Some(b as i64 - o as i64),
            _ => None,
        },
        same_location: match (base.patch_line, other.patch_line) {
            (Some(b), Some(o)) => Some(b == o),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(config: &str, rt: u64, nte: u64, npc: usize) -> ReportRow {
        ReportRow {
            bundle: "b".into(),
            config: config.into(),
            sloc_p: 10,
            sloc_ps: None,
            slice_pct: None,
            tss_t: 5,
            tss_ts: None,
            br: Some(3),
            npc,
            nte,
            rt_ms: rt,
            cost_proxy: nte + npc as u64,
            patched: true,
            patch_line: Some(4),
            same_location: Some(true),
            transferred: None,
            stop_reason: "plausible".into(),
        }
    }

    #[test]
    fn reductions() {
        let r = compare(&row("P_T_L", 10946, 687_946, 4), &row("P_Ts_L", 990, 48_492, 4));
        assert_eq!(r.rt_pct.map(f64::round), Some(91.0));
        assert_eq!(r.nte_pct.map(f64::round), Some(93.0));
        assert_eq!(r.npc_pct, Some(0.0));
        let same = compare(&row("x", 5, 5, 5), &row("x", 5, 5, 5));
        assert_eq!(same.rt_pct, Some(0.0));
        assert_eq!(same.br_delta, Some(0));
        assert_eq!(pct_reduction(0.0, 0.0), Some(0.0));
        assert_eq!(pct_reduction(0.0, 3.0), None);
        assert_eq!(pct_reduction(100.0, 274.0), Some(-174.0));
    }

    #[test]
    fn header_only_when_empty() {
        assert_eq!(emit_report(&[], Format::Csv), COLUMNS.join(",") + "\n");
    }

    #[test]
    fn csv_round_trip() {
        let mut r = row("P_T_L", 1, 2, 3);
        r.slice_pct = Some(4.1);
        r.br = None;
        let text = to_csv([&r]);
        assert_eq!(read_csv(&text).unwrap(), vec![r]);
        assert!(!without_wall_clock(&text).contains("rt_ms"));
    }
}
