//! Subjects, group samples, and CSV ingestion.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed cause code. `Censored` records carry no failure information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Cause {
    Censored,
    /// The cause of interest.
    Primary,
    /// All other causes, lumped together.
    Competing,
}

impl Cause {
    pub fn code(self) -> u8 {
        match self {
            Cause::Censored => 0,
            Cause::Primary => 1,
            Cause::Competing => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Cause::Censored),
            1 => Some(Cause::Primary),
            2 => Some(Cause::Competing),
            _ => None,
        }
    }

    pub fn is_failure(self) -> bool {
        self != Cause::Censored
    }
}

impl From<Cause> for u8 {
    fn from(c: Cause) -> u8 {
        c.code()
    }
}

impl TryFrom<u8> for Cause {
    type Error = String;

    fn try_from(code: u8) -> std::result::Result<Self, String> {
        Cause::from_code(code).ok_or_else(|| format!("cause code {code} not in {{0,1,2}}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub time: f64,
    pub cause: Cause,
}

impl FailureRecord {
    pub fn new(time: f64, cause: Cause) -> Result<Self> {
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::Data(format!("time must be positive and finite, got {time}")));
        }
        Ok(Self { time, cause })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSample {
    pub label: String,
    pub records: Vec<FailureRecord>,
}

impl GroupSample {
    pub fn new(label: impl Into<String>, records: Vec<FailureRecord>) -> Result<Self> {
        let label = label.into();
        if records.is_empty() {
            return Err(Error::Data(format!("group `{label}` has no records")));
        }
        for r in &records {
            FailureRecord::new(r.time, r.cause)?;
        }
        Ok(Self { label, records })
    }

    /// Convenience constructor from `(time, cause code)` pairs.
    pub fn from_pairs(label: impl Into<String>, pairs: &[(f64, u8)]) -> Result<Self> {
        let records = pairs
            .iter()
            .map(|&(t, c)| {
                let cause = Cause::from_code(c)
                    .ok_or_else(|| Error::Data(format!("cause code {c} not in {{0,1,2}}")))?;
                FailureRecord::new(t, cause)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, records)
    }

    pub fn size(&self) -> usize {
        self.records.len()
    }

    pub fn is_censored(&self) -> bool {
        self.records.iter().any(|r| r.cause == Cause::Censored)
    }

    pub fn max_time(&self) -> f64 {
        self.records.iter().map(|r| r.time).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count(&self, cause: Cause) -> usize {
        self.records.iter().filter(|r| r.cause == cause).count()
    }
}

/// `k >= 2` group samples; position `i` is the hypothesised rank of group `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiGroupDataset {
    groups: Vec<GroupSample>,
    censored: bool,
}

impl MultiGroupDataset {
    pub fn new(groups: Vec<GroupSample>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::Data(format!("need at least 2 groups, got {}", groups.len())));
        }
        for (i, g) in groups.iter().enumerate() {
            if g.records.is_empty() {
                return Err(Error::Data(format!("group `{}` has no records", g.label)));
            }
            if groups[..i].iter().any(|h| h.label == g.label) {
                return Err(Error::Data(format!("duplicate group label `{}`", g.label)));
            }
        }
        let censored = groups.iter().any(GroupSample::is_censored);
        Ok(Self { groups, censored })
    }

    pub fn groups(&self) -> &[GroupSample] {
        &self.groups
    }

    pub fn group(&self, i: usize) -> &GroupSample {
        &self.groups[i]
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn is_censored(&self) -> bool {
        self.censored
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(GroupSample::size).collect()
    }

    pub fn total_size(&self) -> usize {
        self.groups.iter().map(GroupSample::size).sum()
    }

    /// Sampling fractions `n_i / n`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.total_size() as f64;
        self.groups.iter().map(|g| g.size() as f64 / n).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.label == label)
    }

    /// Smallest per-group largest observed time; the default analysis horizon.
    pub fn common_horizon(&self) -> f64 {
        self.groups.iter().map(GroupSample::max_time).fold(f64::INFINITY, f64::min)
    }

    /// Distinct observed times (every cause code) across all groups, ascending.
    pub fn pooled_event_grid(&self) -> Vec<f64> {
        let mut times: Vec<f64> =
            self.groups.iter().flat_map(|g| g.records.iter().map(|r| r.time)).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// Reads `group,time,cause` rows and arranges them in the supplied group order.
///
/// Rows keep their input order within each group.
pub fn ingest_csv<R: Read>(source: R, order: &[String]) -> Result<MultiGroupDataset> {
    if order.len() < 2 {
        return Err(Error::Data(format!("group order must list at least 2 groups, got {}", order.len())));
    }
    let mut slot: HashMap<&str, usize> = HashMap::new();
    for (i, label) in order.iter().enumerate() {
        if slot.insert(label.as_str(), i).is_some() {
            return Err(Error::Data(format!("group `{label}` listed twice in the group order")));
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let header = reader.headers().map_err(|e| csv_error(e, 1))?;
    if header.len() != 3 || &header[0] != "group" || &header[1] != "time" || &header[2] != "cause" {
        return Err(Error::Parse { line: 1, message: "header must be `group,time,cause`".into() });
    }

    let mut records: Vec<Vec<FailureRecord>> = vec![Vec::new(); order.len()];
    let mut row = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(csv_error(e, line)),
        }
        let line = row.position().map_or(line, |p| p.line());
        let parse_err = |message: String| Error::Parse { line, message };

        let label = &row[0];
        let &i = slot
            .get(label)
            .ok_or_else(|| parse_err(format!("unknown group label `{label}`")))?;
        let time: f64 = row[1]
            .parse()
            .map_err(|_| parse_err(format!("time `{}` is not a number", &row[1])))?;
        if !(time.is_finite() && time > 0.0) {
            return Err(parse_err(format!("time must be positive and finite, got `{}`", &row[1])));
        }
        let cause = row[2]
            .parse::<u8>()
            .ok()
            .and_then(Cause::from_code)
            .ok_or_else(|| parse_err(format!("cause `{}` not in {{0,1,2}}", &row[2])))?;
        records[i].push(FailureRecord { time, cause });
    }

    let groups = order
        .iter()
        .zip(records)
        .map(|(label, recs)| GroupSample::new(label.clone(), recs))
        .collect::<Result<Vec<_>>>()?;
    MultiGroupDataset::new(groups)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Writes the dataset in the same `group,time,cause` layout `ingest_csv` reads.
pub fn write_csv<W: Write>(dataset: &MultiGroupDataset, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    writer.write_record(["group", "time", "cause"]).map_err(io)?;
    for g in dataset.groups() {
        for r in &g.records {
            writer
                .write_record([g.label.as_str(), &r.time.to_string(), &r.cause.code().to_string()])
                .map_err(io)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order(labels: &[&str]) -> Vec<String> {
        labels.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_small_file() {
        let csv = "group,time,cause\ng1,1.0,1\ng2,1.5,2\ng1,2.0,0\n";
        let ds = ingest_csv(csv.as_bytes(), &order(&["g1", "g2"])).unwrap();
        assert_eq!(ds.k(), 2);
        assert_eq!(ds.sizes(), vec![2, 1]);
        assert!(ds.is_censored());
        assert_eq!(ds.group(0).records[1], FailureRecord { time: 2.0, cause: Cause::Censored });
    }

    #[test]
    fn order_comes_from_caller() {
        let csv = "group,time,cause\ng1,1.0,1\ng2,1.5,2\n";
        let ds = ingest_csv(csv.as_bytes(), &order(&["g2", "g1"])).unwrap();
        assert_eq!(ds.labels(), vec!["g2", "g1"]);
        assert!(!ds.is_censored());
    }

    #[test]
    fn negative_time_reports_line() {
        let csv = "group,time,cause\ng2,1,1\ng1,-1,1\n";
        match ingest_csv(csv.as_bytes(), &order(&["g1", "g2"])) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows() {
        let o = order(&["g1", "g2"]);
        for (body, line) in [
            ("g1,abc,1\ng2,1,1\n", 2),
            ("g1,1,1\ng2,1,3\n", 3),
            ("g1,1,1\ng2,0,1\n", 3),
            ("g1,1,1\ng3,1,1\n", 3),
            ("g1,1,1\ng2,1\n", 3),
            ("g1,1,1\ng2,NaN,1\n", 3),
            ("g1,1,1\ng2,inf,1\n", 3),
        ] {
            let csv = format!("group,time,cause\n{body}");
            match ingest_csv(csv.as_bytes(), &o) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{body}"),
                other => panic!("expected parse error for {body:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn empty_group_and_bad_header() {
        let o = order(&["g1", "g2"]);
        assert!(matches!(ingest_csv("group,time,cause\ng1,1,1\n".as_bytes(), &o), Err(Error::Data(_))));
        assert!(matches!(
            ingest_csv("grp,time,cause\ng1,1,1\n".as_bytes(), &o),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ingest_csv("group,time,cause\ng1,1,1\n".as_bytes(), &order(&["g1"])).is_err());
        assert!(ingest_csv("group,time,cause\ng1,1,1\n".as_bytes(), &order(&["g1", "g1"])).is_err());
    }

    #[test]
    fn pooled_grid_is_sorted_union() {
        let a = GroupSample::from_pairs("a", &[(1.0, 1), (2.0, 0)]).unwrap();
        let b = GroupSample::from_pairs("b", &[(2.0, 2), (3.0, 1)]).unwrap();
        let ds = MultiGroupDataset::new(vec![a, b]).unwrap();
        assert_eq!(ds.pooled_event_grid(), vec![1.0, 2.0, 3.0]);
        assert_eq!(ds.common_horizon(), 2.0);
    }

    #[test]
    fn dataset_rejects_duplicates_and_single_group() {
        let a = GroupSample::from_pairs("a", &[(1.0, 1)]).unwrap();
        assert!(MultiGroupDataset::new(vec![a.clone()]).is_err());
        assert!(MultiGroupDataset::new(vec![a.clone(), a]).is_err());
        assert!(GroupSample::from_pairs("x", &[]).is_err());
    }

    fn arb_dataset() -> impl Strategy<Value = MultiGroupDataset> {
        let rec = (1u32..400, 0u8..3).prop_map(|(t, c)| (t as f64 / 8.0, c));
        prop::collection::vec(prop::collection::vec(rec, 1..25), 2..5).prop_map(|groups| {
            let groups = groups
                .iter()
                .enumerate()
                .map(|(i, pairs)| GroupSample::from_pairs(format!("g{i}"), pairs).unwrap())
                .collect();
            MultiGroupDataset::new(groups).unwrap()
        })
    }

    fn sorted_records(g: &GroupSample) -> Vec<(u64, u8)> {
        let mut v: Vec<_> = g.records.iter().map(|r| (r.time.to_bits(), r.cause.code())).collect();
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn csv_round_trip_preserves_records(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_csv(&ds, &mut buf).unwrap();
            let order: Vec<String> = ds.labels().iter().map(|s| s.to_string()).collect();
            let back = ingest_csv(buf.as_slice(), &order).unwrap();
            for (a, b) in ds.groups().iter().zip(back.groups()) {
                prop_assert_eq!(sorted_records(a), sorted_records(b));
            }
        }

        #[test]
        fn pooled_grid_matches_sort_dedupe(ds in arb_dataset()) {
            let mut seen = std::collections::BTreeSet::new();
            for g in ds.groups() {
                for r in &g.records {
                    seen.insert(r.time.to_bits());
                }
            }
            let grid = ds.pooled_event_grid();
            prop_assert_eq!(grid.len(), seen.len());
            prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        }
    }
}
