//! Edge-list files, token sidecars and atomic output.
//!
//! Edge lists hold one `user-token<TAB>object-token` pair per line. Lines
//! starting with `#` and blank lines are ignored; extra tab-separated columns
//! (ratings, timestamps) are dropped.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, InteractionList, Provenance, Vocabulary};

/// A parsed edge list plus the lines that could not be used.
#[derive(Clone, Debug)]
pub struct LoadedEdgeList {
    pub interactions: InteractionList,
    /// 1-based numbers of malformed lines.
    pub malformed: Vec<usize>,
}

pub fn parse_edge_list(input: impl BufRead, source: &Path) -> Result<LoadedEdgeList> {
    let mut pairs = Vec::new();
    let mut malformed = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next()) {
            (Some(u), Some(o)) if !u.is_empty() && !o.is_empty() => {
                pairs.push((u.to_owned(), o.to_owned()))
            }
            _ => malformed.push(idx + 1),
        }
    }
    if pairs.is_empty() {
        return Err(Error::Parse {
            path: source.to_owned(),
            line: 0,
            message: "no valid interaction lines".into(),
        });
    }
    Ok(LoadedEdgeList {
        interactions: InteractionList::new(pairs, Provenance::File(source.to_owned()))?,
        malformed,
    })
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<LoadedEdgeList> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(file), path)
}

pub fn write_edge_list(interactions: &InteractionList, mut out: impl Write) -> std::io::Result<()> {
    for (u, o) in interactions.pairs() {
        writeln!(out, "{u}\t{o}")?;
    }
    Ok(())
}

/// Two-column `id<TAB>token` mapping for one side of a graph.
pub fn write_vocabulary(vocab: &Vocabulary, mut out: impl Write) -> std::io::Result<()> {
    for (id, token) in vocab.tokens().iter().enumerate() {
        writeln!(out, "{id}\t{token}")?;
    }
    Ok(())
}

/// Writes `graph` as `<stem>.tsv` plus `<stem>.users.tsv` and
/// `<stem>.objects.tsv` sidecars, each atomically.
pub fn write_graph_files(graph: &BipartiteGraph, stem: &Path) -> Result<Vec<PathBuf>> {
    let with_suffix = |suffix: &str| {
        let mut s = stem.as_os_str().to_owned();
        s.push(suffix);
        PathBuf::from(s)
    };
    let edges = with_suffix(".tsv");
    let users = with_suffix(".users.tsv");
    let objects = with_suffix(".objects.tsv");
    write_atomic(&edges, |w| write_edge_list(&graph.to_interactions(), w))?;
    write_atomic(&users, |w| write_vocabulary(graph.user_vocabulary(), w))?;
    write_atomic(&objects, |w| write_vocabulary(graph.object_vocabulary(), w))?;
    Ok(vec![edges, users, objects])
}

/// Writes through a temporary file in the same directory, then renames it
/// over `path`, so readers never see a partial file.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    let run = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    };
    run().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
