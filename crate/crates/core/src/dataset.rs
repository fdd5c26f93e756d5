//! Plain-text dataset directories and synthetic filler metadata.
//!
//! Layout:
//!
//! ```text
//! manifest.json     {num_vertices, num_edge_types, num_classes, feature_dim}
//! edges.tsv         src<TAB>dst<TAB>type_id
//! features.tsv      feature_dim space-separated values per vertex, in id order
//! labels.tsv        vertex<TAB>class_id
//! splits.tsv        vertex<TAB>{train|val|test}
//! vertices.tsv      optional: one external name per line, line i is vertex i
//! edge_types.tsv    optional: one name per line
//! score_table.tsv   optional: fixed score table, one position per line
//! ```
//!
//! When `vertices.tsv` is present, the other files refer to vertices by name.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gnn::FeatureMatrix;
use crate::graph::{Edge, HeteroGraph};
use crate::train::SplitMasks;

pub const MANIFEST: &str = "manifest.json";
pub const EDGES: &str = "edges.tsv";
pub const FEATURES: &str = "features.tsv";
pub const LABELS: &str = "labels.tsv";
pub const SPLITS: &str = "splits.tsv";
pub const VERTICES: &str = "vertices.tsv";
pub const EDGE_TYPES: &str = "edge_types.tsv";
pub const SCORE_TABLE: &str = "score_table.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub num_vertices: usize,
    pub num_edge_types: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    /// Without self-edges.
    pub graph: HeteroGraph,
    pub features: FeatureMatrix,
    pub labels: Vec<Option<usize>>,
    pub masks: SplitMasks,
    pub num_classes: usize,
    pub vertex_names: Option<Vec<String>>,
    pub edge_type_names: Option<Vec<String>>,
    /// Fixed score table (positions x types), used instead of learned scores.
    pub score_table: Option<Array2<f64>>,
}

impl DatasetBundle {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            num_vertices: self.graph.num_vertices(),
            num_edge_types: self.graph.num_edge_types(),
            num_classes: self.num_classes,
            feature_dim: self.features.ncols(),
        }
    }

    /// External name of vertex `v`, or its id.
    pub fn vertex_name(&self, v: usize) -> String {
        match &self.vertex_names {
            Some(names) => names[v].clone(),
            None => v.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.num_vertices();
        if self.features.nrows() != n {
            return Err(Error::Inconsistent(format!(
                "{} feature rows for {n} vertices",
                self.features.nrows()
            )));
        }
        if self.labels.len() != n {
            return Err(Error::Inconsistent(format!(
                "{} labels for {n} vertices",
                self.labels.len()
            )));
        }
        if let Some((v, c)) = self
            .labels
            .iter()
            .enumerate()
            .find_map(|(v, c)| c.filter(|&c| c >= self.num_classes).map(|c| (v, c)))
        {
            return Err(Error::Inconsistent(format!(
                "vertex {v} has class {c} but only {} classes are declared",
                self.num_classes
            )));
        }
        self.masks.validate(n)?;
        for &v in self
            .masks
            .train
            .iter()
            .chain(&self.masks.val)
            .chain(&self.masks.test)
        {
            if self.labels[v].is_none() {
                return Err(Error::MissingLabel { vertex: v });
            }
        }
        if let Some(names) = &self.vertex_names {
            if names.len() != n {
                return Err(Error::Inconsistent(format!(
                    "{} vertex names for {n} vertices",
                    names.len()
                )));
            }
        }
        if let Some(names) = &self.edge_type_names {
            if names.len() != self.graph.num_edge_types() {
                return Err(Error::Inconsistent(format!(
                    "{} edge type names for {} types",
                    names.len(),
                    self.graph.num_edge_types()
                )));
            }
        }
        Ok(())
    }
}

struct Lines {
    path: PathBuf,
    reader: BufReader<fs::File>,
    line: usize,
    buf: String,
}

impl Lines {
    fn open(path: PathBuf) -> Result<Self> {
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingFile(path))
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        Ok(Self {
            path,
            reader: BufReader::new(file),
            line: 0,
            buf: String::new(),
        })
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        loop {
            self.buf.clear();
            let read = self
                .reader
                .read_line(&mut self.buf)
                .map_err(|e| Error::io(&self.path, e))?;
            if read == 0 {
                return Ok(None);
            }
            self.line += 1;
            if !self.buf.trim().is_empty() {
                return Ok(Some((self.line, self.buf.trim_end_matches(['\n', '\r']))));
            }
        }
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.path.clone(),
            line,
            message: message.into(),
        }
    }
}

fn fields<const N: usize>(lines: &Lines, line_no: usize, line: &str) -> Result<[String; N]> {
    let parts: Vec<&str> = line.split('\t').collect();
    if parts.len() != N {
        return Err(lines.error(
            line_no,
            format!("expected {N} tab-separated fields, found {}", parts.len()),
        ));
    }
    Ok(std::array::from_fn(|i| parts[i].trim().to_string()))
}

fn parse_num<T: std::str::FromStr>(
    lines: &Lines,
    line_no: usize,
    what: &str,
    s: &str,
) -> Result<T> {
    s.parse()
        .map_err(|_| lines.error(line_no, format!("invalid {what} {s:?}")))
}

struct VertexIds {
    by_name: Option<HashMap<String, usize>>,
    n: usize,
}

impl VertexIds {
    fn resolve(&self, lines: &Lines, line_no: usize, s: &str) -> Result<usize> {
        let id = match &self.by_name {
            Some(map) => *map
                .get(s)
                .ok_or_else(|| lines.error(line_no, format!("unknown vertex {s:?}")))?,
            None => parse_num(lines, line_no, "vertex id", s)?,
        };
        if id >= self.n {
            return Err(lines.error(
                line_no,
                format!("vertex {id} out of range ({} vertices declared)", self.n),
            ));
        }
        Ok(id)
    }
}

fn read_names(path: PathBuf) -> Result<Option<Vec<String>>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut lines = Lines::open(path)?;
    let mut names = Vec::new();
    while let Some((_, line)) = lines.next_line()? {
        names.push(line.trim().to_string());
    }
    Ok(Some(names))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(Error::MissingFile(path)),
        Err(e) => return Err(Error::io(path, e)),
    };
    Ok(serde_json::from_str(&text)?)
}

/// Graph-only view of a dataset directory: manifest, names and edges.
pub struct GraphFiles {
    pub manifest: Manifest,
    pub graph: HeteroGraph,
    pub vertex_names: Option<Vec<String>>,
    pub edge_type_names: Option<Vec<String>>,
}

pub fn load_graph(dir: &Path) -> Result<GraphFiles> {
    let manifest = read_manifest(dir)?;
    let n = manifest.num_vertices;
    let vertex_names = read_names(dir.join(VERTICES))?;
    let by_name = match &vertex_names {
        Some(names) => {
            if names.len() != n {
                return Err(Error::Inconsistent(format!(
                    "{VERTICES} lists {} names, manifest declares {n} vertices",
                    names.len()
                )));
            }
            let mut map = HashMap::with_capacity(n);
            for (i, name) in names.iter().enumerate() {
                if map.insert(name.clone(), i).is_some() {
                    return Err(Error::Inconsistent(format!(
                        "duplicate vertex name {name:?}"
                    )));
                }
            }
            Some(map)
        }
        None => None,
    };
    let ids = VertexIds { by_name, n };

    let edge_type_names = read_names(dir.join(EDGE_TYPES))?;
    if let Some(names) = &edge_type_names {
        if names.len() != manifest.num_edge_types {
            return Err(Error::Inconsistent(format!(
                "{EDGE_TYPES} lists {} names, manifest declares {} types",
                names.len(),
                manifest.num_edge_types
            )));
        }
    }

    let mut lines = Lines::open(dir.join(EDGES))?;
    let mut edges = Vec::new();
    while let Some((no, line)) = lines.next_line()? {
        let line = line.to_string();
        let [s, d, t] = fields::<3>(&lines, no, &line)?;
        let src = ids.resolve(&lines, no, &s)?;
        let dst = ids.resolve(&lines, no, &d)?;
        let edge_type: usize = parse_num(&lines, no, "edge type", &t)?;
        if edge_type >= manifest.num_edge_types {
            return Err(lines.error(
                no,
                format!(
                    "edge type {edge_type} out of range ({} types declared)",
                    manifest.num_edge_types
                ),
            ));
        }
        edges.push(Edge::new(src, dst, edge_type));
    }
    let graph = HeteroGraph::build(edges, n, manifest.num_edge_types)?;
    Ok(GraphFiles {
        manifest,
        graph,
        vertex_names,
        edge_type_names,
    })
}

/// Loads and validates a full dataset directory.
pub fn load_dataset(dir: &Path) -> Result<DatasetBundle> {
    let GraphFiles {
        manifest,
        graph,
        vertex_names,
        edge_type_names,
    } = load_graph(dir)?;
    let n = manifest.num_vertices;
    let ids = VertexIds {
        by_name: vertex_names
            .as_ref()
            .map(|names| names.iter().cloned().zip(0..).collect()),
        n,
    };

    let mut lines = Lines::open(dir.join(FEATURES))?;
    let mut features = Array2::zeros((n, manifest.feature_dim));
    let mut rows = 0;
    while let Some((no, line)) = lines.next_line()? {
        let line = line.to_string();
        if rows == n {
            return Err(lines.error(no, format!("more than {n} feature rows")));
        }
        let mut cols = 0;
        for tok in line.split_whitespace() {
            if cols == manifest.feature_dim {
                return Err(lines.error(
                    no,
                    format!("more than {} feature values", manifest.feature_dim),
                ));
            }
            let x: f64 = parse_num(&lines, no, "feature value", tok)?;
            if !x.is_finite() {
                return Err(lines.error(no, "feature values must be finite"));
            }
            features[[rows, cols]] = x;
            cols += 1;
        }
        if cols != manifest.feature_dim {
            return Err(lines.error(
                no,
                format!("{cols} feature values, expected {}", manifest.feature_dim),
            ));
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Inconsistent(format!(
            "{FEATURES} has {rows} rows, manifest declares {n} vertices"
        )));
    }

    let mut lines = Lines::open(dir.join(LABELS))?;
    let mut labels = vec![None; n];
    while let Some((no, line)) = lines.next_line()? {
        let line = line.to_string();
        let [v, c] = fields::<2>(&lines, no, &line)?;
        let v = ids.resolve(&lines, no, &v)?;
        let c: usize = parse_num(&lines, no, "class id", &c)?;
        if c >= manifest.num_classes {
            return Err(lines.error(
                no,
                format!(
                    "class {c} out of range ({} classes declared)",
                    manifest.num_classes
                ),
            ));
        }
        if labels[v].replace(c).is_some() {
            return Err(lines.error(no, format!("vertex {v} labeled twice")));
        }
    }

    let mut lines = Lines::open(dir.join(SPLITS))?;
    let mut masks = SplitMasks::default();
    while let Some((no, line)) = lines.next_line()? {
        let line = line.to_string();
        let [v, which] = fields::<2>(&lines, no, &line)?;
        let v = ids.resolve(&lines, no, &v)?;
        match which.as_str() {
            "train" => masks.train.push(v),
            "val" => masks.val.push(v),
            "test" => masks.test.push(v),
            other => return Err(lines.error(no, format!("unknown split {other:?}"))),
        }
    }

    let score_path = dir.join(SCORE_TABLE);
    let score_table = if score_path.exists() {
        let mut lines = Lines::open(score_path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        while let Some((no, line)) = lines.next_line()? {
            let line = line.to_string();
            let row = line
                .split_whitespace()
                .map(|tok| parse_num(&lines, no, "score", tok))
                .collect::<Result<Vec<f64>>>()?;
            if rows.first().is_some_and(|r| r.len() != row.len()) {
                return Err(lines.error(no, "ragged score table"));
            }
            rows.push(row);
        }
        let cols = rows.first().map_or(0, Vec::len);
        let t = manifest.num_edge_types;
        if rows.is_empty() || (cols != t && cols != t + 1) {
            return Err(Error::Inconsistent(format!(
                "{SCORE_TABLE} needs {t} or {} columns",
                t + 1
            )));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Some(Array2::from_shape_vec((flat.len() / cols, cols), flat).expect("rectangular"))
    } else {
        None
    };

    let bundle = DatasetBundle {
        graph,
        features,
        labels,
        masks,
        num_classes: manifest.num_classes,
        vertex_names,
        edge_type_names,
        score_table,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn create(path: PathBuf) -> Result<BufWriter<fs::File>> {
    fs::File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `bundle` in the layout [`load_dataset`] reads. Floats use the
/// shortest representation that parses back exactly.
pub fn save_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e| Error::io(path, e)
    };

    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&bundle.manifest())?).map_err(io(&path))?;

    if let Some(names) = &bundle.vertex_names {
        write_names(dir.join(VERTICES), names)?;
    }
    if let Some(names) = &bundle.edge_type_names {
        write_names(dir.join(EDGE_TYPES), names)?;
    }
    let name = |v: usize| bundle.vertex_name(v);

    let path = dir.join(EDGES);
    let mut w = create(path.clone())?;
    for e in bundle.graph.edges() {
        writeln!(w, "{}\t{}\t{}", name(e.src), name(e.dst), e.edge_type).map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(FEATURES);
    let mut w = create(path.clone())?;
    for row in bundle.features.rows() {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io(&path))?;
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(LABELS);
    let mut w = create(path.clone())?;
    for (v, c) in bundle.labels.iter().enumerate() {
        if let Some(c) = c {
            writeln!(w, "{}\t{c}", name(v)).map_err(io(&path))?;
        }
    }
    w.flush().map_err(io(&path))?;

    let path = dir.join(SPLITS);
    let mut w = create(path.clone())?;
    for (which, set) in [
        ("train", &bundle.masks.train),
        ("val", &bundle.masks.val),
        ("test", &bundle.masks.test),
    ] {
        for &v in set {
            writeln!(w, "{}\t{which}", name(v)).map_err(io(&path))?;
        }
    }
    w.flush().map_err(io(&path))?;

    if let Some(table) = &bundle.score_table {
        let path = dir.join(SCORE_TABLE);
        let mut w = create(path.clone())?;
        for row in table.rows() {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", line.join("\t")).map_err(io(&path))?;
        }
        w.flush().map_err(io(&path))?;
    }
    Ok(())
}

fn write_names(path: PathBuf, names: &[String]) -> Result<()> {
    let mut w = create(path.clone())?;
    for name in names {
        writeln!(w, "{name}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    pub feature_dim: usize,
    pub feature_value: f64,
    /// Replace every edge type with a uniform draw over `num_edge_types`.
    pub retype_edges: bool,
    pub num_edge_types: usize,
    pub num_classes: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        Self {
            feature_dim: 50,
            feature_value: 2.0,
            retype_edges: false,
            num_edge_types: 4,
            num_classes: 3,
            train_fraction: 0.2,
            val_fraction: 0.1,
        }
    }
}

/// Filler features, labels, splits and (optionally) edge types for a bare
/// graph. A pure function of its arguments.
pub fn generate_synthetic(
    g: &HeteroGraph,
    seed: u64,
    opts: &SyntheticOptions,
) -> Result<DatasetBundle> {
    if g.is_augmented() {
        return Err(Error::AlreadyAugmented {
            self_type: g.num_edge_types() - 1,
        });
    }
    if opts.num_classes == 0 || opts.feature_dim == 0 {
        return Err(Error::Config(
            "synthetic data needs classes and features".into(),
        ));
    }
    let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
    if !frac_ok(opts.train_fraction)
        || !frac_ok(opts.val_fraction)
        || opts.train_fraction + opts.val_fraction > 1.0
    {
        return Err(Error::Config(
            "split fractions must sum to at most 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.num_vertices();

    let graph = if opts.retype_edges {
        if opts.num_edge_types == 0 {
            return Err(Error::NoEdgeTypes);
        }
        let edges: Vec<Edge> = g
            .edges()
            .map(|e| Edge::new(e.src, e.dst, rng.random_range(0..opts.num_edge_types)))
            .collect();
        HeteroGraph::build(edges, n, opts.num_edge_types)?
    } else {
        g.clone()
    };

    let features = Array2::from_elem((n, opts.feature_dim), opts.feature_value);
    let labels = (0..n)
        .map(|_| Some(rng.random_range(0..opts.num_classes)))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (n as f64 * opts.train_fraction).floor() as usize;
    let n_val = (n as f64 * opts.val_fraction).floor() as usize;
    let masks = SplitMasks {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    };

    Ok(DatasetBundle {
        graph,
        features,
        labels,
        masks,
        num_classes: opts.num_classes,
        vertex_names: None,
        edge_type_names: None,
        score_table: None,
    })
}

/// `num_edges` directed edges with uniform endpoints and types. Self-loops
/// and duplicates are allowed.
pub fn random_graph(
    num_vertices: usize,
    num_edges: usize,
    num_edge_types: usize,
    seed: u64,
) -> Result<HeteroGraph> {
    if num_vertices == 0 && num_edges > 0 {
        return Err(Error::Config("edges need vertices".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<Edge> = (0..num_edges)
        .map(|_| {
            Edge::new(
                rng.random_range(0..num_vertices),
                rng.random_range(0..num_vertices),
                rng.random_range(0..num_edge_types.max(1)),
            )
        })
        .collect();
    HeteroGraph::build(edges, num_vertices, num_edge_types)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        fs::write(dir.join(name), text).unwrap();
    }

    fn minimal(dir: &Path) {
        write(
            dir,
            MANIFEST,
            r#"{"num_vertices":3,"num_edge_types":2,"num_classes":2,"feature_dim":2}"#,
        );
        write(dir, EDGES, "0\t1\t0\n1\t2\t1\n");
        write(dir, FEATURES, "1 0\n0 1\n0.5 0.5\n");
        write(dir, LABELS, "0\t0\n1\t1\n2\t1\n");
        write(dir, SPLITS, "0\ttrain\n1\tval\n2\ttest\n");
    }

    #[test]
    fn loads_minimal() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        let b = load_dataset(dir.path()).unwrap();
        assert_eq!(b.graph.num_edges(), 2);
        assert_eq!(b.features[[2, 1]], 0.5);
        assert_eq!(b.labels, vec![Some(0), Some(1), Some(1)]);
        assert_eq!(b.masks.test, vec![2]);
    }

    #[test]
    fn empty_edges_file() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), EDGES, "");
        let b = load_dataset(dir.path()).unwrap();
        assert_eq!(b.graph.num_vertices(), 3);
        assert_eq!(b.graph.num_edges(), 0);
    }

    #[test]
    fn undeclared_vertex_names_line() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), EDGES, "0\t1\t0\n1\t7\t1\n");
        match load_dataset(dir.path()) {
            Err(Error::Parse { line, file, .. }) => {
                assert_eq!(line, 2);
                assert!(file.ends_with(EDGES));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        fs::remove_file(dir.path().join(LABELS)).unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::MissingFile(_))
        ));

        minimal(dir.path());
        write(dir.path(), FEATURES, "1 0\n0 1\n");
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Inconsistent(_))
        ));

        minimal(dir.path());
        write(dir.path(), SPLITS, "0\ttrain\n1\tholdout\n");
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn round_trip_with_names() {
        let dir = tempfile::tempdir().unwrap();
        minimal(dir.path());
        write(dir.path(), VERTICES, "x\ny\nz\n");
        write(dir.path(), EDGES, "x\ty\t0\nz\tx\t1\n");
        write(dir.path(), LABELS, "x\t0\ny\t1\n");
        write(dir.path(), SPLITS, "x\ttrain\ny\ttest\n");
        write(dir.path(), SCORE_TABLE, "0.1\t0.9\n");
        let b = load_dataset(dir.path()).unwrap();
        assert_eq!(b.labels[2], None);
        assert_eq!(b.graph.find_edge(2, 0, 1), Some(1));

        let out = tempfile::tempdir().unwrap();
        save_dataset(&b, out.path()).unwrap();
        assert_eq!(load_dataset(out.path()).unwrap(), b);
    }

    #[test]
    fn synthetic_filler() {
        let g = random_graph(100, 300, 1, 3).unwrap();
        let opts = SyntheticOptions {
            retype_edges: true,
            ..SyntheticOptions::default()
        };
        let b = generate_synthetic(&g, 11, &opts).unwrap();
        assert_eq!(b.features.ncols(), 50);
        assert!(b.features.iter().all(|&x| x == 2.0));
        assert_eq!(
            (b.masks.train.len(), b.masks.val.len(), b.masks.test.len()),
            (20, 10, 70)
        );
        assert!(b.labels.iter().all(|c| c.is_some_and(|c| c < 3)));
        assert_eq!(b.graph.num_edge_types(), 4);
        assert!(b.graph.edges().all(|e| e.edge_type < 4));
        b.validate().unwrap();
        assert_eq!(generate_synthetic(&g, 11, &opts).unwrap(), b);
        assert_ne!(generate_synthetic(&g, 12, &opts).unwrap(), b);
    }
}
