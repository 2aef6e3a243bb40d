//! Readers and writers for all external data: observation files, cross
//! sample files, rating triplets, edge lists, binary 8-bit PGM images, and
//! the result CSV schema.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::metrics::RatingScale;
use crate::sampling::{CrossSample, Observation, ObservationMultiset};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn header_err(path: &Path, message: impl Into<String>) -> Error {
    Error::MalformedHeader {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// observation files

/// Writes `%%obs rows cols` followed by one `i j value multiplicity` line
/// per entry.
pub fn write_observations(path: &Path, omega: &ObservationMultiset) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%obs {} {}", omega.ambient_rows(), omega.ambient_cols())?;
    for e in omega.entries() {
        writeln!(out, "{} {} {} {}", e.row, e.col, e.value, e.multiplicity)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_observation_line(path: &Path, lineno: usize, line: &str) -> Result<Observation> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(
            path,
            lineno,
            format!("expected `i j value multiplicity`, got {} fields", fields.len()),
        ));
    }
    let row = fields[0]
        .parse::<usize>()
        .map_err(|e| parse_err(path, lineno, format!("row index: {e}")))?;
    let col = fields[1]
        .parse::<usize>()
        .map_err(|e| parse_err(path, lineno, format!("column index: {e}")))?;
    let value = fields[2]
        .parse::<f64>()
        .map_err(|e| parse_err(path, lineno, format!("value: {e}")))?;
    let multiplicity = fields[3]
        .parse::<usize>()
        .map_err(|e| parse_err(path, lineno, format!("multiplicity: {e}")))?;
    Ok(Observation {
        row,
        col,
        value,
        multiplicity,
    })
}

fn parse_obs_header(path: &Path, line: Option<&str>) -> Result<(usize, usize)> {
    let line = line.ok_or_else(|| header_err(path, "empty file"))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != "%%obs" {
        return Err(header_err(path, "expected `%%obs rows cols`"));
    }
    let rows = fields[1]
        .parse::<usize>()
        .map_err(|e| header_err(path, format!("rows: {e}")))?;
    let cols = fields[2]
        .parse::<usize>()
        .map_err(|e| header_err(path, format!("cols: {e}")))?;
    Ok((rows, cols))
}

pub fn read_observations(path: &Path) -> Result<ObservationMultiset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let (rows, cols) = parse_obs_header(path, lines.next())?;
    let mut entries = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        entries.push(parse_observation_line(path, idx + 2, line)?);
    }
    ObservationMultiset::new(rows, cols, entries).map_err(|e| match e {
        Error::IndexOutOfRange(m) => Error::OutOfRange {
            path: path.to_path_buf(),
            message: m,
        },
        other => other,
    })
}

/// Writes a dense matrix as a fully observed observation file.
pub fn write_dense_as_observations(path: &Path, x: &DenseMatrix) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%obs {} {}", x.rows(), x.cols())?;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            writeln!(out, "{} {} {} 1", i, j, x.get(i, j))?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Rebuilds a dense matrix from a fully covering observation file.
pub fn dense_from_observations(omega: &ObservationMultiset) -> Result<DenseMatrix> {
    if omega.len() != omega.ambient_rows() * omega.ambient_cols() {
        return Err(Error::Shortfall(format!(
            "observation file covers {} of {} cells",
            omega.len(),
            omega.ambient_rows() * omega.ambient_cols()
        )));
    }
    let mut x = DenseMatrix::zeros(omega.ambient_rows(), omega.ambient_cols());
    for e in omega.entries() {
        x.set(e.row, e.col, e.value);
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// cross sample files

/// Observation format plus index headers and a section marker per cross
/// side:
/// `%%obs`, `%%draws`, `%%rows`, `%%cols`, then `%%omega_R` and
/// `%%omega_C` entry sections.
pub fn write_cross_sample(path: &Path, cs: &CrossSample) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "%%obs {} {}", cs.ambient_rows(), cs.ambient_cols())?;
    writeln!(out, "%%draws {} {}", cs.row_index_draws(), cs.col_index_draws())?;
    write!(out, "%%rows")?;
    for i in cs.row_indices() {
        write!(out, " {i}")?;
    }
    writeln!(out)?;
    write!(out, "%%cols")?;
    for j in cs.col_indices() {
        write!(out, " {j}")?;
    }
    writeln!(out)?;
    writeln!(out, "%%omega_R")?;
    for e in cs.omega_rows().entries() {
        writeln!(out, "{} {} {} {}", e.row, e.col, e.value, e.multiplicity)?;
    }
    writeln!(out, "%%omega_C")?;
    for e in cs.omega_cols().entries() {
        writeln!(out, "{} {} {} {}", e.row, e.col, e.value, e.multiplicity)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cross_sample(path: &Path) -> Result<CrossSample> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (rows, cols) = parse_obs_header(path, lines.next().map(|(_, l)| l))?;

    let parse_index_line = |tag: &str, entry: Option<(usize, &str)>| -> Result<Vec<usize>> {
        let (idx, line) = entry.ok_or_else(|| header_err(path, format!("missing {tag} line")))?;
        let mut fields = line.split_whitespace();
        if fields.next() != Some(tag) {
            return Err(header_err(path, format!("line {} must start with {tag}", idx + 1)));
        }
        fields
            .map(|f| {
                f.parse::<usize>()
                    .map_err(|e| parse_err(path, idx + 1, format!("index: {e}")))
            })
            .collect()
    };

    let draws = parse_index_line("%%draws", lines.next())?;
    if draws.len() != 2 {
        return Err(header_err(path, "%%draws needs two counts"));
    }
    let row_indices = parse_index_line("%%rows", lines.next())?;
    let col_indices = parse_index_line("%%cols", lines.next())?;

    match lines.next() {
        Some((_, l)) if l.trim() == "%%omega_R" => {}
        _ => return Err(header_err(path, "expected %%omega_R section")),
    }
    let mut row_entries = Vec::new();
    let mut col_entries = Vec::new();
    let mut in_cols = false;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if line.trim() == "%%omega_C" {
            in_cols = true;
            continue;
        }
        let obs = parse_observation_line(path, idx + 1, line)?;
        if in_cols {
            col_entries.push(obs);
        } else {
            row_entries.push(obs);
        }
    }
    if !in_cols {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: "missing %%omega_C section".into(),
        });
    }
    CrossSample::new(
        row_indices,
        col_indices,
        draws[0],
        draws[1],
        ObservationMultiset::new(rows, cols, row_entries)?,
        ObservationMultiset::new(rows, cols, col_entries)?,
    )
}

// ---------------------------------------------------------------------------
// rating triplets

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatingRecord {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Rating triplets with dense 0-based user/item indexing and the original
/// id maps in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTriplets {
    pub records: Vec<RatingRecord>,
    pub user_ids: Vec<u64>,
    pub item_ids: Vec<u64>,
}

impl RatingTriplets {
    pub fn user_count(&self) -> usize {
        self.user_ids.len()
    }

    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    /// Rejects ratings outside the declared scale.
    pub fn check_scale(&self, scale: &RatingScale) -> Result<()> {
        for (idx, r) in self.records.iter().enumerate() {
            if r.rating < scale.min || r.rating > scale.max {
                return Err(Error::InvalidParameter(format!(
                    "record {} rating {} outside scale [{}, {}]",
                    idx, r.rating, scale.min, scale.max
                )));
            }
        }
        Ok(())
    }

    /// Item-by-user matrix with unobserved cells at zero, plus the list of
    /// observed positions.
    pub fn to_item_user_matrix(&self) -> (DenseMatrix, Vec<(usize, usize)>) {
        let mut x = DenseMatrix::zeros(self.item_count(), self.user_count());
        let mut observed = Vec::with_capacity(self.records.len());
        for r in &self.records {
            x.set(r.item, r.user, r.rating);
            observed.push((r.item, r.user));
        }
        observed.sort_unstable();
        observed.dedup();
        (x, observed)
    }
}

/// Reads `user item rating [timestamp]` lines. `delimiter` forces a field
/// separator; by default both whitespace and `::` delimited files are
/// accepted. User/item ids are reindexed densely in first-seen order.
pub fn read_triplets(path: &Path, delimiter: Option<&str>) -> Result<RatingTriplets> {
    let text = fs::read_to_string(path)?;
    let mut user_ids: Vec<u64> = Vec::new();
    let mut item_ids: Vec<u64> = Vec::new();
    let mut user_index: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
    let mut item_index: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
    let mut records = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = match delimiter {
            Some(d) => line.split(d).map(str::trim).filter(|f| !f.is_empty()).collect(),
            None => {
                if line.contains("::") {
                    line.split("::").map(str::trim).filter(|f| !f.is_empty()).collect()
                } else {
                    line.split_whitespace().collect()
                }
            }
        };
        if fields.len() < 3 || fields.len() > 4 {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected `user item rating [timestamp]`, got {} fields", fields.len()),
            ));
        }
        let user_id = fields[0]
            .parse::<u64>()
            .map_err(|e| parse_err(path, idx + 1, format!("user id: {e}")))?;
        let item_id = fields[1]
            .parse::<u64>()
            .map_err(|e| parse_err(path, idx + 1, format!("item id: {e}")))?;
        let rating = fields[2]
            .parse::<f64>()
            .map_err(|e| parse_err(path, idx + 1, format!("rating: {e}")))?;
        if !rating.is_finite() {
            return Err(parse_err(path, idx + 1, "rating must be finite"));
        }
        let timestamp = match fields.get(3) {
            Some(f) => Some(
                f.parse::<i64>()
                    .map_err(|e| parse_err(path, idx + 1, format!("timestamp: {e}")))?,
            ),
            None => None,
        };
        let user = *user_index.entry(user_id).or_insert_with(|| {
            user_ids.push(user_id);
            user_ids.len() - 1
        });
        let item = *item_index.entry(item_id).or_insert_with(|| {
            item_ids.push(item_id);
            item_ids.len() - 1
        });
        records.push(RatingRecord {
            user,
            item,
            rating,
            timestamp,
        });
    }
    Ok(RatingTriplets {
        records,
        user_ids,
        item_ids,
    })
}

pub fn write_triplets(path: &Path, triplets: &RatingTriplets) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in &triplets.records {
        let user = triplets.user_ids[r.user];
        let item = triplets.item_ids[r.item];
        match r.timestamp {
            Some(t) => writeln!(out, "{} {} {} {}", user, item, r.rating, t)?,
            None => writeln!(out, "{} {} {}", user, item, r.rating)?,
        }
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// edge lists

/// Graph edge list over `node_count` nodes. Undirected lists are
/// normalized to `(min, max)` pairs and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize)>,
    pub node_count: usize,
    pub directed: bool,
}

impl EdgeList {
    pub fn new(mut edges: Vec<(usize, usize)>, node_count: usize, directed: bool) -> Result<Self> {
        if !directed {
            for e in edges.iter_mut() {
                if e.0 > e.1 {
                    *e = (e.1, e.0);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for &(i, j) in &edges {
            if i >= node_count || j >= node_count {
                return Err(Error::IndexOutOfRange(format!(
                    "edge ({i}, {j}) outside {node_count} nodes"
                )));
            }
        }
        Ok(Self {
            edges,
            node_count,
            directed,
        })
    }

    /// 0/1 adjacency matrix; undirected edges are mirrored.
    pub fn adjacency(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.node_count, self.node_count);
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
            if !self.directed {
                a.set(j, i, 1.0);
            }
        }
        a
    }
}

/// Reads an edge list: optional `%%nodes N [directed]` header, `%`/`#`
/// comments, one `i j` pair per line (0-based). Without a header the node
/// count is the largest index plus one. An empty file is a valid zero-edge
/// graph.
pub fn read_edge_list(path: &Path) -> Result<EdgeList> {
    let text = fs::read_to_string(path)?;
    let mut node_count: Option<usize> = None;
    let mut directed = false;
    let mut edges = Vec::new();
    let mut max_index = None::<usize>;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with("%%nodes") {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(header_err(path, "expected `%%nodes N [directed]`"));
            }
            node_count = Some(
                fields[1]
                    .parse()
                    .map_err(|e| header_err(path, format!("node count: {e}")))?,
            );
            directed = match fields.get(2) {
                Some(&"directed") => true,
                Some(&"undirected") | None => false,
                Some(other) => {
                    return Err(header_err(path, format!("unknown orientation `{other}`")))
                }
            };
            continue;
        }
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                idx + 1,
                format!("expected `i j`, got {} fields", fields.len()),
            ));
        }
        let i = fields[0]
            .parse::<usize>()
            .map_err(|e| parse_err(path, idx + 1, format!("source node: {e}")))?;
        let j = fields[1]
            .parse::<usize>()
            .map_err(|e| parse_err(path, idx + 1, format!("target node: {e}")))?;
        max_index = Some(max_index.map_or(i.max(j), |m: usize| m.max(i).max(j)));
        edges.push((i, j));
    }
    let node_count = node_count.unwrap_or_else(|| max_index.map_or(0, |m| m + 1));
    EdgeList::new(edges, node_count, directed).map_err(|e| match e {
        Error::IndexOutOfRange(m) => Error::OutOfRange {
            path: path.to_path_buf(),
            message: m,
        },
        other => other,
    })
}

pub fn write_edge_list(path: &Path, list: &EdgeList) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(
        out,
        "%%nodes {} {}",
        list.node_count,
        if list.directed { "directed" } else { "undirected" }
    )?;
    for &(i, j) in &list.edges {
        writeln!(out, "{i} {j}")?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// grayscale images (binary 8-bit PGM)

/// Grayscale image with pixels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        if pixels.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidParameter("pixel outside [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Height-by-width matrix view of the pixel grid.
    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::new(self.height, self.width, self.pixels.clone())
            .expect("validated pixels form a matrix")
    }

    /// Builds an image from a matrix, clamping values into `[0, 1]`;
    /// reconstructions routinely overshoot the pixel range slightly.
    pub fn from_matrix_clamped(m: &DenseMatrix) -> Self {
        Self {
            width: m.cols(),
            height: m.rows(),
            pixels: m.data().iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }
}

/// Reads a binary (`P5`) 8-bit PGM.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let mut next_token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and `#` comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                message: "header ended early".into(),
            });
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = next_token(&bytes)?;
    if magic != "P5" {
        return Err(header_err(path, format!("magic `{magic}`, expected `P5`")));
    }
    let width: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| header_err(path, format!("width: {e}")))?;
    let height: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| header_err(path, format!("height: {e}")))?;
    let maxval: usize = next_token(&bytes)?
        .parse()
        .map_err(|e| header_err(path, format!("maxval: {e}")))?;
    if maxval == 0 || maxval > 255 {
        return Err(header_err(path, format!("maxval {maxval} outside 1..=255")));
    }
    // exactly one whitespace byte separates header and payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: "missing payload separator".into(),
        });
    }
    pos += 1;
    let payload = &bytes[pos..];
    if payload.len() < width * height {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            message: format!("payload holds {} of {} pixels", payload.len(), width * height),
        });
    }
    let pixels = payload[..width * height]
        .iter()
        .map(|&b| b as f64 / maxval as f64)
        .collect::<Vec<f64>>();
    // guard against encodings that exceed the declared maxval
    if pixels.iter().any(|&v| v > 1.0) {
        return Err(Error::OutOfRange {
            path: path.to_path_buf(),
            message: "pixel above declared maxval".into(),
        });
    }
    GrayImage::new(width, height, pixels)
}

/// Writes a binary 8-bit PGM, quantizing by round-half-up.
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n255\n", image.width, image.height)?;
    let bytes: Vec<u8> = image
        .pixels
        .iter()
        .map(|&v| ((v * 255.0 + 0.5).floor().clamp(0.0, 255.0)) as u8)
        .collect();
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// result CSV

/// One row of the experiment result schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub dataset: String,
    pub alpha: f64,
    pub delta: f64,
    pub p: f64,
    pub rank: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub seconds: f64,
}

pub const RESULT_CSV_HEADER: &str = "experiment,dataset,alpha,delta,p,r,seed,metric,value,seconds";

pub fn format_results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment, r.dataset, r.alpha, r.delta, r.p, r.rank, r.seed, r.metric, r.value,
            r.seconds
        ));
    }
    out
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    fs::write(path, format_results_csv(rows))?;
    Ok(())
}

/// Writes `key=value` manifest lines describing a resolved run
/// configuration.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in entries {
        out.push_str(&format!("{k}={v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Standard manifest location next to an output file.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    out.with_file_name(name)
}
