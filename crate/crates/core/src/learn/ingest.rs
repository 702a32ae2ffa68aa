//! Ranking and feature files.
//!
//! Wide ranking CSV: header `user_id,item_0,...,item_{m-1}[,epsilon]`, one row
//! per user, each cell the rank (1..=m) of that item.
//!
//! Feature CSV: header `user_id,f0,...` or `item_id,f0,...`.
//!
//! Order files list, per line, item ids from most to least preferred after a
//! configurable number of leading fields (the layout of the Sushi preference
//! data). The most preferred listed item receives rank `m`, matching the
//! ascending-score convention of the learning pipeline.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::Ranking;

/// Rankings keyed by user, with optional per-user budgets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankingDataset {
    pub user_ids: Vec<String>,
    pub rankings: Vec<Ranking>,
    pub epsilons: Option<Vec<f64>>,
    /// Original label of each dense item index.
    pub item_labels: Vec<String>,
}

impl RankingDataset {
    pub fn len(&self) -> usize {
        self.rankings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rankings.is_empty()
    }

    /// Item count; 0 for an empty dataset without a header.
    pub fn m(&self) -> usize {
        self.item_labels.len()
    }
}

/// Layout of an order file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OrderFileFormat {
    /// Lines skipped before the first record.
    pub skip_lines: usize,
    /// Leading whitespace-separated fields skipped on every record.
    pub skip_fields: usize,
    /// Keep only these item ids, in this dense index order. `None` keeps every
    /// id of the first record, sorted.
    pub items: Option<Vec<String>>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn ingest_order_file(path: &Path, format: &OrderFileFormat) -> Result<RankingDataset> {
    let file = std::fs::File::open(path)?;
    read_order_file(BufReader::new(file), format)
}

pub fn read_order_file<R: BufRead>(reader: R, format: &OrderFileFormat) -> Result<RankingDataset> {
    let mut universe: Option<Vec<String>> = format.items.clone();
    if let Some(items) = &universe {
        if items.len() < 2 {
            return Err(Error::InvalidConfig("item subset must contain at least 2 ids".into()));
        }
    }
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut out = RankingDataset::default();

    for (lineno, line) in reader.lines().enumerate() {
        let line_number = lineno + 1;
        let line = line?;
        if lineno < format.skip_lines || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() <= format.skip_fields {
            return Err(parse_err(line_number, "record has no item ids"));
        }
        let listed = &fields[format.skip_fields..];

        if universe.is_none() {
            let mut ids: Vec<String> = listed.iter().map(|s| s.to_string()).collect();
            ids.sort_by(|a, b| match (a.parse::<i64>(), b.parse::<i64>()) {
                (Ok(x), Ok(y)) => x.cmp(&y),
                _ => a.cmp(b),
            });
            universe = Some(ids);
        }
        let items = universe.as_ref().expect("set above");
        if index.is_empty() {
            index = items.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
            if index.len() != items.len() {
                return Err(parse_err(line_number, "duplicate item id in item list"));
            }
            out.item_labels = items.clone();
        }
        let m = items.len();

        let mut order = Vec::with_capacity(m);
        let mut seen = vec![false; m];
        for id in listed {
            match index.get(*id) {
                Some(&i) => {
                    if std::mem::replace(&mut seen[i], true) {
                        return Err(parse_err(line_number, format!("item {id} listed twice")));
                    }
                    order.push(i);
                }
                None if format.items.is_some() => {}
                None => {
                    return Err(Error::UnknownItemId {
                        id: id.to_string(),
                        line: line_number,
                    })
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(parse_err(line_number, format!("item {} missing from record", items[missing])));
        }
        // order[0] is the most preferred item and gets rank m
        let mut ranks = vec![0usize; m];
        for (pos, &item) in order.iter().enumerate() {
            ranks[item] = m - pos;
        }
        let ranking = Ranking::new(ranks).map_err(|e| parse_err(line_number, e.to_string()))?;
        out.user_ids.push(out.rankings.len().to_string());
        out.rankings.push(ranking);
    }
    if let (Some(items), true) = (&format.items, out.item_labels.is_empty()) {
        out.item_labels = items.clone();
    }
    Ok(out)
}

/// Reads a wide ranking CSV.
pub fn read_ranking_csv<R: Read>(reader: R) -> Result<RankingDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.get(0) != Some("user_id") {
        return Err(parse_err(1, "first column must be user_id"));
    }
    let has_eps = headers.iter().next_back() == Some("epsilon");
    let item_cols: Vec<String> = headers
        .iter()
        .skip(1)
        .take(headers.len() - 1 - usize::from(has_eps))
        .map(str::to_string)
        .collect();
    for (k, h) in item_cols.iter().enumerate() {
        if *h != format!("item_{k}") {
            return Err(parse_err(1, format!("expected column item_{k}, found {h}")));
        }
    }
    let m = item_cols.len();
    let mut out = RankingDataset {
        item_labels: item_cols,
        epsilons: has_eps.then(Vec::new),
        ..RankingDataset::default()
    };
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(parse_err(line, "wrong number of fields"));
        }
        let ranks = (1..=m)
            .map(|k| {
                rec[k]
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(line, format!("bad rank '{}'", &rec[k])))
            })
            .collect::<Result<Vec<_>>>()?;
        let ranking = Ranking::new(ranks).map_err(|e| parse_err(line, e.to_string()))?;
        if let Some(eps) = out.epsilons.as_mut() {
            let v: f64 = rec[m + 1]
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad epsilon '{}'", &rec[m + 1])))?;
            if !(v > 0.0) {
                return Err(parse_err(line, "epsilon must be positive"));
            }
            eps.push(v);
        }
        out.user_ids.push(rec[0].to_string());
        out.rankings.push(ranking);
    }
    Ok(out)
}

pub fn write_ranking_csv<W: Write>(writer: W, data: &RankingDataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header = vec!["user_id".to_string()];
    header.extend((0..data.m()).map(|k| format!("item_{k}")));
    if data.epsilons.is_some() {
        header.push("epsilon".into());
    }
    w.write_record(&header).map_err(csv_io)?;
    for (u, r) in data.rankings.iter().enumerate() {
        let mut rec = vec![data.user_ids[u].clone()];
        rec.extend(r.ranks().iter().map(usize::to_string));
        if let Some(eps) = &data.epsilons {
            rec.push(crate::harness::fmt_real(eps[u]));
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Reads a feature CSV; returns the ids and the feature rows.
pub fn read_feature_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    match headers.get(0) {
        Some("user_id") | Some("item_id") => {}
        _ => return Err(parse_err(1, "first column must be user_id or item_id")),
    }
    if headers.len() < 2 {
        return Err(parse_err(1, "no feature columns"));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(parse_err(line, "wrong number of fields"));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<f64>().map_err(|_| parse_err(line, format!("bad value '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        ids.push(rec[0].to_string());
        rows.push(values);
    }
    Ok((ids, rows))
}

pub fn write_feature_csv<W: Write>(writer: W, id_column: &str, ids: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let dim = rows.first().map_or(0, Vec::len);
    let mut header = vec![id_column.to_string()];
    header.extend((0..dim).map(|k| format!("f{k}")));
    w.write_record(&header).map_err(csv_io)?;
    for (id, row) in ids.iter().zip(rows) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| crate::harness::fmt_real(*v)));
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[usize]) -> Ranking {
        Ranking::new(v.to_vec()).unwrap()
    }

    #[test]
    fn two_line_order_file() {
        let text = "2 0 1\n1 2 0\n";
        let d = read_order_file(text.as_bytes(), &OrderFileFormat::default()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.item_labels, vec!["0", "1", "2"]);
        // "2 0 1": item 2 most preferred
        assert_eq!(d.rankings[0], r(&[2, 1, 3]));
        assert_eq!(d.rankings[1], r(&[1, 3, 2]));
    }

    #[test]
    fn skip_fields_and_subset() {
        let text = "10 1\n0 10 5 0 3 4 6 9 8 1 7 2\n0 10 0 9 3 4 5 6 7 8 1 2\n";
        let fmt = OrderFileFormat {
            skip_lines: 1,
            skip_fields: 2,
            items: Some(vec!["2".into(), "5".into(), "6".into(), "7".into(), "9".into()]),
        };
        let d = read_order_file(text.as_bytes(), &fmt).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.m(), 5);
        // line 1 keeps 5 6 9 7 2 (most to least)
        assert_eq!(d.rankings[0], r(&[1, 5, 4, 2, 3]));
        // line 2 keeps 9 5 6 7 2
        assert_eq!(d.rankings[1], r(&[1, 4, 3, 2, 5]));
    }

    #[test]
    fn malformed_lines() {
        let fmt = OrderFileFormat::default();
        match read_order_file("0 1 2\n0 1 1\n".as_bytes(), &fmt) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match read_order_file("0 1 2\n0 1 7\n".as_bytes(), &fmt) {
            Err(Error::UnknownItemId { id, line }) => assert_eq!((id.as_str(), line), ("7", 2)),
            other => panic!("{other:?}"),
        }
        let fmt = OrderFileFormat {
            skip_fields: 2,
            ..OrderFileFormat::default()
        };
        assert!(matches!(read_order_file("0 3\n".as_bytes(), &fmt), Err(Error::Parse { line: 1, .. })));
        let fmt = OrderFileFormat {
            items: Some(vec!["1".into(), "4".into()]),
            ..OrderFileFormat::default()
        };
        assert!(matches!(read_order_file("1 2 3\n".as_bytes(), &fmt), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn wide_csv_roundtrip_with_epsilon() {
        let text = "user_id,item_0,item_1,item_2,epsilon\nu1,3,1,2,0.5\nu2,1,2,3,2\n";
        let d = read_ranking_csv(text.as_bytes()).unwrap();
        assert_eq!(d.user_ids, vec!["u1", "u2"]);
        assert_eq!(d.rankings[0], r(&[3, 1, 2]));
        assert_eq!(d.epsilons, Some(vec![0.5, 2.0]));
        let mut buf = Vec::new();
        write_ranking_csv(&mut buf, &d).unwrap();
        assert_eq!(read_ranking_csv(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn wide_csv_errors() {
        assert!(matches!(
            read_ranking_csv("user_id,item_0,item_1\nu,1,1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_ranking_csv("id,item_0,item_1\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_ranking_csv("user_id,item_0,item_1,epsilon\nu,1,2,-1\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let empty = read_ranking_csv("user_id,item_0,item_1\n".as_bytes()).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.m(), 2);
    }

    #[test]
    fn feature_csv() {
        let text = "item_id,f0,f1\na,1.5,-2\nb,0,3\n";
        let (ids, rows) = read_feature_csv(text.as_bytes()).unwrap();
        assert_eq!(ids, vec!["a", "b"]);
        assert_eq!(rows, vec![vec![1.5, -2.0], vec![0.0, 3.0]]);
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, "item_id", &ids, &rows).unwrap();
        assert_eq!(read_feature_csv(buf.as_slice()).unwrap(), (ids, rows));
        assert!(read_feature_csv("item_id,f0\na,x\n".as_bytes()).is_err());
    }
}
