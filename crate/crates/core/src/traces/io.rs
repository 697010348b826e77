//! CSV trace files.
//!
//! ```text
//! # generator: zipf
//! # seed: 7
//! # param n: 10000
//! # catalog_size: 10000
//! slot,file
//! 0,12
//! 1,0
//! ```
//!
//! Slots run `0..T` with no gaps. A third `location` column marks a bipartite
//! trace. When `catalog_size` (and `locations`) headers are present the ids
//! are dense integers; otherwise they are arbitrary external ids, mapped to
//! dense indices in order of first appearance and kept in the provenance.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Provenance, Trace};
use crate::error::{Error, Result};
use crate::model::Request;

pub fn save_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_trace(trace, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_trace(trace: &Trace, out: &mut impl Write) -> std::io::Result<()> {
    let prov = trace.provenance();
    if !prov.generator.is_empty() {
        writeln!(out, "# generator: {}", prov.generator)?;
    }
    if let Some(seed) = prov.seed {
        writeln!(out, "# seed: {seed}")?;
    }
    for (k, v) in &prov.params {
        writeln!(out, "# param {k}: {v}")?;
    }
    writeln!(out, "# catalog_size: {}", trace.catalog_size())?;
    if let Some(i) = trace.n_locations() {
        writeln!(out, "# locations: {i}")?;
    }
    for (n, id) in prov.file_ids.iter().enumerate() {
        writeln!(out, "# file_id {n}: {id}")?;
    }
    for (n, id) in prov.location_ids.iter().enumerate() {
        writeln!(out, "# location_id {n}: {id}")?;
    }
    if trace.n_locations().is_some() {
        writeln!(out, "slot,file,location")?;
        for r in trace.requests() {
            writeln!(out, "{},{},{}", r.slot, r.file, r.location.unwrap_or(0))?;
        }
    } else {
        writeln!(out, "slot,file")?;
        for r in trace.requests() {
            writeln!(out, "{},{}", r.slot, r.file)?;
        }
    }
    Ok(())
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(BufReader::new(file), path)
}

/// Id space of one column: declared dense, or densified on the fly.
enum Ids {
    Dense(usize),
    External {
        index: HashMap<String, usize>,
        names: Vec<String>,
    },
}

impl Ids {
    fn new(declared: Option<usize>) -> Self {
        match declared {
            Some(n) => Ids::Dense(n),
            None => Ids::External {
                index: HashMap::new(),
                names: Vec::new(),
            },
        }
    }

    fn resolve(&mut self, raw: &str, what: &str) -> std::result::Result<usize, String> {
        match self {
            Ids::Dense(n) => {
                let id: usize = raw
                    .parse()
                    .map_err(|_| format!("{what} id `{raw}` is not a dense integer"))?;
                if id >= *n {
                    return Err(format!("{what} {id} outside declared range 0..{n}"));
                }
                Ok(id)
            }
            Ids::External { index, names } => {
                Ok(*index.entry(raw.to_string()).or_insert_with(|| {
                    names.push(raw.to_string());
                    names.len() - 1
                }))
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            Ids::Dense(n) => *n,
            Ids::External { names, .. } => names.len(),
        }
    }

    fn external_names(self) -> Vec<String> {
        match self {
            Ids::Dense(_) => Vec::new(),
            Ids::External { names, .. } => names,
        }
    }
}

pub fn read_trace(reader: impl BufRead, path: &Path) -> Result<Trace> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut prov = Provenance::default();
    let mut catalog: Option<usize> = None;
    let mut locations: Option<usize> = None;
    let mut declared_file_ids: Vec<(usize, String)> = Vec::new();
    let mut declared_location_ids: Vec<(usize, String)> = Vec::new();
    let mut ids: Option<(Ids, Ids)> = None;
    let mut with_location: Option<bool> = None;
    let mut requests = Vec::new();

    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if ids.is_some() {
                continue;
            }
            let Some((key, value)) = comment.split_once(':') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("bad value `{v}` for `{key}`")))
            };
            match key {
                "generator" => prov.generator = value.to_string(),
                "seed" => {
                    prov.seed = Some(
                        value
                            .parse()
                            .map_err(|_| parse_err(lineno, format!("bad seed `{value}`")))?,
                    )
                }
                "catalog_size" => catalog = Some(num(value)?),
                "locations" => locations = Some(num(value)?),
                _ => {
                    if let Some(p) = key.strip_prefix("param ") {
                        prov.params.insert(p.trim().to_string(), value.to_string());
                    } else if let Some(n) = key.strip_prefix("file_id ") {
                        declared_file_ids.push((num(n.trim())?, value.to_string()));
                    } else if let Some(n) = key.strip_prefix("location_id ") {
                        declared_location_ids.push((num(n.trim())?, value.to_string()));
                    }
                }
            }
            continue;
        }

        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if ids.is_none() {
            ids = Some((Ids::new(catalog), Ids::new(locations)));
            if fields.first() == Some(&"slot") {
                match fields.as_slice() {
                    ["slot", "file"] => with_location = Some(false),
                    ["slot", "file", "location"] => with_location = Some(true),
                    _ => return Err(parse_err(lineno, format!("unexpected header `{line}`"))),
                }
                continue;
            }
        }
        let (file_ids, location_ids) = ids.as_mut().expect("initialized above");

        let has_location = match fields.len() {
            2 => false,
            3 => true,
            n => {
                return Err(parse_err(
                    lineno,
                    format!("expected 2 or 3 fields, got {n}"),
                ))
            }
        };
        match with_location {
            None => with_location = Some(has_location),
            Some(w) if w != has_location => {
                return Err(parse_err(
                    lineno,
                    "rows mix single-cache and located requests".to_string(),
                ))
            }
            Some(_) => {}
        }
        let slot: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad slot `{}`", fields[0])))?;
        let expected = requests.len() as u64;
        if slot != expected {
            let what = if slot < expected {
                "duplicate or decreasing"
            } else {
                "missing"
            };
            return Err(parse_err(
                lineno,
                format!("{what} slot: got {slot}, expected {expected}"),
            ));
        }
        let file = file_ids
            .resolve(fields[1], "file")
            .map_err(|m| parse_err(lineno, m))?;
        let location = if has_location {
            Some(
                location_ids
                    .resolve(fields[2], "location")
                    .map_err(|m| parse_err(lineno, m))?,
            )
        } else {
            None
        };
        requests.push(Request {
            slot,
            file,
            location,
        });
    }

    let (file_ids, location_ids) = ids.unwrap_or_else(|| (Ids::new(catalog), Ids::new(locations)));
    let located = with_location.unwrap_or(locations.is_some());
    let catalog_size = file_ids.size().max(2);
    let n_locations = located.then(|| location_ids.size());

    let densified_files = file_ids.external_names();
    let densified_locations = location_ids.external_names();
    if !densified_files.is_empty() || !densified_locations.is_empty() {
        if prov.generator.is_empty() {
            prov.generator = "external".into();
        }
        prov.file_ids = densified_files;
        prov.location_ids = densified_locations;
    } else {
        prov.file_ids = collect_declared(declared_file_ids);
        prov.location_ids = collect_declared(declared_location_ids);
    }
    Trace::new(requests, catalog_size, n_locations, prov)
}

fn collect_declared(mut entries: Vec<(usize, String)>) -> Vec<String> {
    entries.sort_by_key(|e| e.0);
    entries.into_iter().map(|e| e.1).collect()
}
