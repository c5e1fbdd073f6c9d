//! File formats: edge lists, label files, and run artifacts.
//!
//! Edge lists are whitespace-separated `u v` pairs, one per line, with `#`
//! comments and blank lines ignored; they load as simple undirected graphs
//! (directions and duplicates collapse, self-loops drop with a count). Node
//! ids may be arbitrary non-negative integers and are compacted to
//! `0..N-1`, with the sorted original ids returned as the mapping.
//!
//! Run artifacts are plain text: a `node,label` CSV, an optional metrics
//! CSV, and a flat `key=value` manifest carrying every input needed to
//! replay the run byte-identically in sequential mode. Isolated nodes have
//! no representation in an edge list, so only non-degenerate graphs
//! round-trip exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::graph::{BuildStats, SparseGraph};
use crate::master::PilotSet;
use crate::metrics::{EvalReport, CSV_HEADER};
use crate::protocol::{ClusteringResult, PartitionMode, PartitionPlan};
use crate::sbm::GroundTruth;

/// Whether node ids in a file start at 0 or at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Indexing {
    ZeroBased,
    OneBased,
}

impl fmt::Display for Indexing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Indexing::ZeroBased => "0-based",
            Indexing::OneBased => "1-based",
        })
    }
}

impl FromStr for Indexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0-based" => Ok(Indexing::ZeroBased),
            "1-based" => Ok(Indexing::OneBased),
            other => Err(Error::InvalidParameter(format!(
                "unknown indexing '{other}' (expected '0-based' or '1-based')"
            ))),
        }
    }
}

/// A graph read from disk, with the compaction back-map: node `i` of the
/// graph had id `node_ids[i]` in the file.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: SparseGraph,
    pub node_ids: Vec<u64>,
    pub stats: BuildStats,
}

fn open_error(path: &Path, source: std::io::Error) -> Error {
    Error::File {
        path: path.display().to_string(),
        source,
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Iterates the meaningful lines of a text file: trimmed, 1-based numbered,
/// with blank lines and `#` comments skipped.
fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = fs::File::open(path).map_err(|e| open_error(path, e))?;
    let mut lines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| open_error(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_string()));
    }
    Ok(lines)
}

/// Loads an edge list, compacting node ids. See the module docs for the
/// format.
pub fn load_edge_list(path: &Path, indexing: Indexing) -> Result<LoadedGraph> {
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    let mut ids: Vec<u64> = Vec::new();
    for (line, text) in content_lines(path)? {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_error(
                path,
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let mut pair = [0u64; 2];
        for (slot, field) in pair.iter_mut().zip(&fields) {
            let id: u64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad node id '{field}'")))?;
            *slot = match indexing {
                Indexing::ZeroBased => id,
                Indexing::OneBased => id
                    .checked_sub(1)
                    .ok_or_else(|| parse_error(path, line, "node id 0 in a 1-based file"))?,
            };
        }
        raw_edges.push((pair[0], pair[1]));
        ids.extend_from_slice(&pair);
    }
    if raw_edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    ids.sort_unstable();
    ids.dedup();
    let compact = |id: u64| ids.binary_search(&id).expect("id collected above");
    let edges: Vec<(usize, usize)> = raw_edges
        .iter()
        .map(|&(u, v)| (compact(u), compact(v)))
        .collect();
    let (graph, stats) = SparseGraph::from_edges(ids.len(), &edges)?;
    Ok(LoadedGraph {
        graph,
        node_ids: ids,
        stats,
    })
}

/// Writes a graph as a 0-based edge list (`u v` per line, `u < v`).
/// Isolated nodes are not representable in this format.
pub fn save_edge_list(graph: &SparseGraph, path: &Path) -> Result<()> {
    let mut out = String::new();
    for u in 0..graph.num_nodes() {
        for &v in graph.neighbors(u) {
            if v > u {
                out.push_str(&format!("{u} {v}\n"));
            }
        }
    }
    fs::write(path, out).map_err(|e| open_error(path, e))
}

/// Loads ground-truth labels (`node_id label` per line, ids as in the edge
/// list before compaction). Every graph node must be covered; extra ids are
/// ignored. Label values need not be contiguous — they are compacted, and
/// the sorted original values come back as the dictionary.
pub fn load_labels(path: &Path, node_ids: &[u64]) -> Result<(GroundTruth, Vec<u64>)> {
    let mut by_id: BTreeMap<u64, u64> = BTreeMap::new();
    for (line, text) in content_lines(path)? {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_error(
                path,
                line,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad node id '{}'", fields[0])))?;
        let label: u64 = fields[1]
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad label '{}'", fields[1])))?;
        if by_id.insert(id, label).is_some() {
            return Err(parse_error(path, line, format!("duplicate label for node {id}")));
        }
    }
    let missing: Vec<u64> = node_ids
        .iter()
        .copied()
        .filter(|id| !by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels {
            count: missing.len(),
            examples: missing.into_iter().take(8).collect(),
        });
    }
    let mut dictionary: Vec<u64> = node_ids.iter().map(|id| by_id[id]).collect();
    dictionary.sort_unstable();
    dictionary.dedup();
    let labels: Vec<usize> = node_ids
        .iter()
        .map(|id| dictionary.binary_search(&by_id[id]).expect("value collected"))
        .collect();
    let truth = GroundTruth::new(labels, dictionary.len())?;
    Ok((truth, dictionary))
}

/// Writes ground-truth labels as `node_id label` lines with 0-based ids,
/// readable by [`load_labels`].
pub fn save_labels(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (i, &g) in truth.labels().iter().enumerate() {
        out.push_str(&format!("{i} {g}\n"));
    }
    fs::write(path, out).map_err(|e| open_error(path, e))
}

fn join_usizes(xs: &[usize]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn proportions_field(pi: &Array2<f64>) -> String {
    (0..pi.nrows())
        .map(|m| {
            (0..pi.ncols())
                .map(|k| pi[[m, k]].to_string())
                .collect::<Vec<_>>()
                .join(";")
        })
        .collect::<Vec<_>>()
        .join("|")
}

/// Persists one run into `dir`: `labels.csv` (`node,label`), `report.csv`
/// when a report is given, and `manifest.txt`, a flat `key=value` file from
/// which [`plan_from_manifest`] can rebuild the plan and seed for an exact
/// sequential replay.
pub fn save_result(
    result: &ClusteringResult,
    report: Option<&EvalReport>,
    dir: &Path,
) -> Result<()> {
    if result.labels.is_empty() {
        return Err(Error::EmptyResult);
    }
    fs::create_dir_all(dir).map_err(|e| open_error(dir, e))?;

    let labels_path = dir.join("labels.csv");
    let mut file = fs::File::create(&labels_path).map_err(|e| open_error(&labels_path, e))?;
    let mut body = String::from("node,label\n");
    for (i, &g) in result.labels.iter().enumerate() {
        body.push_str(&format!("{i},{g}\n"));
    }
    file.write_all(body.as_bytes())
        .map_err(|e| open_error(&labels_path, e))?;

    if let Some(report) = report {
        let report_path = dir.join("report.csv");
        fs::write(&report_path, format!("{CSV_HEADER}\n{}\n", report.csv_row()))
            .map_err(|e| open_error(&report_path, e))?;
    }

    let mut manifest = String::new();
    let mut put = |key: &str, value: String| {
        manifest.push_str(key);
        manifest.push('=');
        manifest.push_str(&value);
        manifest.push('\n');
    };
    put("format", "dcd-run-manifest-v1".into());
    put("num_nodes", result.num_nodes.to_string());
    put("k", result.k.to_string());
    put("seed", result.seed.to_string());
    put("engine", result.engine.to_string());
    put(
        "broadcast_payload_bytes",
        result.broadcast_payload_bytes.to_string(),
    );
    put("pilot_policy", result.plan.pilot.policy.to_string());
    put("pilot_seed", result.plan.pilot.seed.to_string());
    put("pilot_count", result.plan.pilot.len().to_string());
    put("pilot_indices", join_usizes(result.plan.pilot.indices()));
    put("partition_mode", result.plan.mode.name().into());
    put("partition_seed", result.plan.seed.to_string());
    put("num_workers", result.plan.num_workers().to_string());
    if let PartitionMode::Proportions(pi) = &result.plan.mode {
        put("pi", proportions_field(pi));
    }
    for (m, assignment) in result.plan.worker_assignments.iter().enumerate() {
        put(&format!("worker_{m}"), join_usizes(assignment));
    }
    put(
        "pseudo_center_nodes",
        join_usizes(&result.pseudo_center_nodes),
    );
    put("degenerate_nodes", join_usizes(&result.degenerate_nodes));
    put("timing_extract_s", result.timings.extract_s.to_string());
    put("timing_master_s", result.timings.master_s.to_string());
    put("timing_workers_s", result.timings.workers_s.to_string());
    put("timing_gather_s", result.timings.gather_s.to_string());
    let manifest_path = dir.join("manifest.txt");
    fs::write(&manifest_path, manifest).map_err(|e| open_error(&manifest_path, e))
}

/// Reads back a `labels.csv` written by [`save_result`].
pub fn load_result_labels(path: &Path) -> Result<Vec<usize>> {
    let mut rows: Vec<(usize, usize)> = Vec::new();
    for (line, text) in content_lines(path)? {
        if text == "node,label" {
            continue;
        }
        let (node, label) = text
            .split_once(',')
            .ok_or_else(|| parse_error(path, line, "expected 'node,label'"))?;
        let node: usize = node
            .trim()
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad node '{node}'")))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| parse_error(path, line, format!("bad label '{label}'")))?;
        rows.push((node, label));
    }
    rows.sort_unstable();
    for (expect, &(node, _)) in rows.iter().enumerate() {
        if node != expect {
            return Err(parse_error(
                path,
                0,
                format!("node ids are not contiguous: expected {expect}, found {node}"),
            ));
        }
    }
    Ok(rows.into_iter().map(|(_, label)| label).collect())
}

/// Parses a flat `key=value` manifest into a map (later duplicates win).
pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (line, text) in content_lines(path)? {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| parse_error(path, line, "expected 'key=value'"))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn manifest_get<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::InvalidParameter(format!("manifest is missing key '{key}'")))
}

fn manifest_parse<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = manifest_get(map, key)?;
    raw.parse().map_err(|_| {
        Error::InvalidParameter(format!("manifest key '{key}' has unusable value '{raw}'"))
    })
}

fn split_usizes(raw: &str, key: &str) -> Result<Vec<usize>> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(';')
        .map(|tok| {
            tok.parse().map_err(|_| {
                Error::InvalidParameter(format!("manifest key '{key}' has bad entry '{tok}'"))
            })
        })
        .collect()
}

/// Rebuilds the partition plan, cluster count, and master seed from a
/// manifest, sufficient to replay the run with the sequential engine.
pub fn plan_from_manifest(map: &BTreeMap<String, String>) -> Result<(PartitionPlan, usize, u64)> {
    let format = manifest_get(map, "format")?;
    if format != "dcd-run-manifest-v1" {
        return Err(Error::InvalidParameter(format!(
            "unsupported manifest format '{format}'"
        )));
    }
    let num_nodes: usize = manifest_parse(map, "num_nodes")?;
    let k: usize = manifest_parse(map, "k")?;
    let seed: u64 = manifest_parse(map, "seed")?;
    let pilot = PilotSet::from_indices(
        split_usizes(manifest_get(map, "pilot_indices")?, "pilot_indices")?,
        manifest_parse(map, "pilot_policy")?,
        manifest_parse(map, "pilot_seed")?,
        num_nodes,
    )?;
    let num_workers: usize = manifest_parse(map, "num_workers")?;
    let mode = match manifest_get(map, "partition_mode")? {
        "even" => PartitionMode::Even,
        "proportions" => {
            let raw = manifest_get(map, "pi")?;
            let rows: Vec<Vec<f64>> = raw
                .split('|')
                .map(|row| {
                    row.split(';')
                        .map(|tok| {
                            tok.parse().map_err(|_| {
                                Error::InvalidParameter(format!(
                                    "manifest key 'pi' has bad entry '{tok}'"
                                ))
                            })
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.len() != num_workers || rows.iter().any(|r| r.len() != ncols) || ncols == 0 {
                return Err(Error::InvalidParameter(
                    "manifest key 'pi' is not a rectangular matrix with one row per worker".into(),
                ));
            }
            let mut pi = Array2::zeros((rows.len(), ncols));
            for (m, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    pi[[m, j]] = v;
                }
            }
            PartitionMode::Proportions(pi)
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown partition mode '{other}'"
            )))
        }
    };
    let assignments = (0..num_workers)
        .map(|m| {
            let key = format!("worker_{m}");
            split_usizes(manifest_get(map, &key)?, &key)
        })
        .collect::<Result<Vec<_>>>()?;
    let partition_seed: u64 = manifest_parse(map, "partition_seed")?;
    let plan = PartitionPlan::new(pilot, assignments, mode, partition_seed, num_nodes)?;
    Ok((plan, k, seed))
}
