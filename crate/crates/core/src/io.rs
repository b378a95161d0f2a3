//! CSV formats shared by the library and the command line.
//!
//! * edge list: `source,target,weight`, node names as strings;
//! * node parameters: `node,mu0,theta,alpha,beta,adjust`;
//! * sample matrix: `row_id,regime,<node names...>` where `regime` is `obs`
//!   or `do:<node>=<value>[;...]`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::graph::{Dag, InterventionSpec, WeightedDag};
use crate::regnet::NodeParams;

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn require_header(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    header_index(headers, name).ok_or_else(|| Error::parse(1, format!("missing column `{name}`")))
}

fn parse_f64(record: &csv::StringRecord, idx: usize, what: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse::<f64>()
        .map_err(|_| Error::parse(line_of(record), format!("{what}: cannot parse `{raw}` as a number")))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Writes `source,target,weight` rows in edge order.
pub fn write_edge_list<W: Write>(out: W, wdag: &WeightedDag) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target", "weight"])?;
    let dag = wdag.dag();
    for (&(i, j), weight) in wdag.weights() {
        w.write_record([dag.name(i), dag.name(j), &weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an edge list. When `names` is given it fixes the node set and
/// order (so isolated nodes survive); otherwise nodes are numbered in order
/// of first appearance. A missing `weight` column means unit weights.
pub fn read_edge_list<R: Read>(input: R, names: Option<&[String]>) -> Result<WeightedDag> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let src_idx = require_header(&headers, "source")?;
    let dst_idx = require_header(&headers, "target")?;
    let weight_idx = header_index(&headers, "weight");

    let mut node_names: Vec<String> = names.map(<[String]>::to_vec).unwrap_or_default();
    let fixed = names.is_some();
    let mut lookup: HashMap<String, usize> = node_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let mut weights = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let mut resolve = |idx: usize| -> Result<usize> {
            let name = record.get(idx).unwrap_or("").trim().to_string();
            if name.is_empty() {
                return Err(Error::parse(line, "empty node name"));
            }
            if let Some(&i) = lookup.get(&name) {
                return Ok(i);
            }
            if fixed {
                return Err(Error::parse(line, format!("unknown node `{name}`")));
            }
            node_names.push(name.clone());
            lookup.insert(name, node_names.len() - 1);
            Ok(node_names.len() - 1)
        };
        let i = resolve(src_idx)?;
        let j = resolve(dst_idx)?;
        let weight = match weight_idx {
            Some(idx) => parse_f64(&record, idx, "weight")?,
            None => 1.0,
        };
        if weights.insert((i, j), weight).is_some() {
            return Err(Error::parse(line, format!("duplicate edge {} -> {}", node_names[i], node_names[j])));
        }
    }
    let dag = Dag::with_names(node_names, weights.keys().copied().collect())?;
    WeightedDag::new(dag, weights)
}

pub fn write_params<W: Write>(out: W, names: &[String], params: &[NodeParams]) -> Result<()> {
    if names.len() != params.len() {
        return Err(Error::invalid("one parameter row per node required"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "mu0", "theta", "alpha", "beta", "adjust"])?;
    for (name, p) in names.iter().zip(params) {
        w.write_record([
            name.as_str(),
            &p.mu0.to_string(),
            &p.theta.to_string(),
            &p.alpha.to_string(),
            &p.beta.to_string(),
            &p.adjust.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads node parameters and orders them to match `names`.
pub fn read_params<R: Read>(input: R, names: &[String]) -> Result<Vec<NodeParams>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = ["node", "mu0", "theta", "alpha", "beta", "adjust"]
        .iter()
        .map(|c| require_header(&headers, c))
        .collect::<Result<_>>()?;
    let mut by_name: HashMap<String, NodeParams> = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let name = record.get(cols[0]).unwrap_or("").to_string();
        let field = |k: usize, what: &str| parse_f64(&record, cols[k], what);
        let params = NodeParams::new(
            field(1, "mu0")?,
            field(2, "theta")?,
            field(3, "alpha")?,
            field(4, "beta")?,
            field(5, "adjust")?,
        )
        .map_err(|e| Error::parse(line, e.to_string()))?;
        if by_name.insert(name.clone(), params).is_some() {
            return Err(Error::parse(line, format!("duplicate node `{name}`")));
        }
    }
    names
        .iter()
        .map(|n| {
            by_name
                .remove(n)
                .ok_or_else(|| Error::invalid(format!("no parameters for node `{n}`")))
        })
        .collect()
}

pub fn write_samples<W: Write>(out: W, data: &SampleMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row_id".to_string(), "regime".to_string()];
    header.extend(data.names().iter().cloned());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for r in 0..data.n_rows() {
        record.clear();
        record.push(r.to_string());
        record.push(data.regime_label(r));
        record.extend(data.row(r).iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<SampleMatrix> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || headers.get(0) != Some("row_id") || headers.get(1) != Some("regime") {
        return Err(Error::parse(1, "expected header `row_id,regime,<node names...>`"));
    }
    let names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
    let d = names.len();
    let mut values = Vec::new();
    let mut regimes: Vec<InterventionSpec> = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut row_regime = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != d + 2 {
            return Err(Error::parse(line, format!("expected {} fields, found {}", d + 2, record.len())));
        }
        let label = record.get(1).unwrap_or("").to_string();
        let regime_idx = match labels.get(&label) {
            Some(&k) => k,
            None => {
                let spec = InterventionSpec::parse_label(&label, &names)
                    .map_err(|e| Error::parse(line, e.to_string()))?;
                regimes.push(spec);
                labels.insert(label, regimes.len() - 1);
                regimes.len() - 1
            }
        };
        row_regime.push(regime_idx);
        for (k, name) in names.iter().enumerate() {
            values.push(parse_f64(&record, k + 2, name)?);
        }
    }
    if regimes.is_empty() {
        regimes.push(InterventionSpec::observational());
    }
    SampleMatrix::with_row_regimes(names, values, regimes, row_regime)
}

pub fn write_samples_path(path: &Path, data: &SampleMatrix) -> Result<()> {
    write_samples(File::create(path)?, data)
}

pub fn read_samples_path(path: &Path) -> Result<SampleMatrix> {
    read_samples(File::open(path)?)
}
