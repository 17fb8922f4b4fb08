//! Loading spaces from plain text files.
//!
//! Three formats are supported: a full distance matrix (comma-separated
//! floats, no header), a point cloud (one point per line, coordinates
//! comma-separated, no header), and a weighted edge list (header `u,v,w`).
//! Parse errors carry 1-based line numbers.

use crate::space::{FiniteMetricSpace, SpaceError};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] SpaceError),
}

fn parse_f64(token: &str, line: usize) -> Result<f64, LoadError> {
    token.trim().parse::<f64>().map_err(|_| LoadError::Parse {
        line,
        message: format!("could not parse '{}' as a number", token.trim()),
    })
}

fn parse_usize(token: &str, line: usize) -> Result<usize, LoadError> {
    token.trim().parse::<usize>().map_err(|_| LoadError::Parse {
        line,
        message: format!("could not parse '{}' as a vertex index", token.trim()),
    })
}

/// Nonempty lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_float_rows(text: &str) -> Result<Vec<Vec<f64>>, LoadError> {
    let mut rows = Vec::new();
    for (line, content) in numbered_lines(text) {
        let row = content
            .split(',')
            .map(|tok| parse_f64(tok, line))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LoadError::Parse {
            line: 1,
            message: "file contains no data rows".into(),
        });
    }
    Ok(rows)
}

/// Loads a full pairwise distance matrix and validates the metric axioms.
pub fn load_distance_matrix(path: &Path) -> Result<FiniteMetricSpace, LoadError> {
    let rows = parse_float_rows(&fs::read_to_string(path)?)?;
    Ok(FiniteMetricSpace::from_distance_matrix(&rows)?)
}

/// Loads a Euclidean point cloud, one point per line.
pub fn load_point_cloud(path: &Path) -> Result<FiniteMetricSpace, LoadError> {
    let rows = parse_float_rows(&fs::read_to_string(path)?)?;
    Ok(FiniteMetricSpace::from_point_cloud(&rows)?)
}

/// Loads a weighted edge list with a `u,v,w` header and builds the
/// shortest-path metric.
pub fn load_edge_list(path: &Path) -> Result<FiniteMetricSpace, LoadError> {
    let text = fs::read_to_string(path)?;
    let mut lines = numbered_lines(&text);
    match lines.next() {
        Some((_, header)) if header.trim() == "u,v,w" => {}
        Some((line, header)) => {
            return Err(LoadError::Parse {
                line,
                message: format!("expected header 'u,v,w', found '{}'", header.trim()),
            })
        }
        None => {
            return Err(LoadError::Parse {
                line: 1,
                message: "file contains no data rows".into(),
            })
        }
    }
    let mut edges = Vec::new();
    for (line, content) in lines {
        let fields: Vec<&str> = content.split(',').collect();
        if fields.len() != 3 {
            return Err(LoadError::Parse {
                line,
                message: format!("expected 3 fields 'u,v,w', found {}", fields.len()),
            });
        }
        edges.push((
            parse_usize(fields[0], line)?,
            parse_usize(fields[1], line)?,
            parse_f64(fields[2], line)?,
        ));
    }
    if edges.is_empty() {
        return Err(LoadError::Parse {
            line: 1,
            message: "edge list contains no edges".into(),
        });
    }
    Ok(FiniteMetricSpace::from_graph(&edges)?)
}
