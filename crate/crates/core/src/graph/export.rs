use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{CausalGraph, GraphError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Dot,
    Json,
}

/// Wire form of a graph. `bold` carries presentation marks only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<(String, String)>,
    #[serde(default)]
    pub undirected: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bold: Vec<(String, String)>,
}

impl From<&CausalGraph> for GraphJson {
    fn from(g: &CausalGraph) -> Self {
        let named = |(a, b): (usize, usize)| (g.name(a).to_string(), g.name(b).to_string());
        GraphJson {
            nodes: g.names().to_vec(),
            directed: g.directed_edges().into_iter().map(named).collect(),
            undirected: g.undirected_edges().into_iter().map(named).collect(),
            bold: g.bold_edges().iter().copied().map(named).collect(),
        }
    }
}

impl TryFrom<GraphJson> for CausalGraph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, GraphError> {
        let mut g = CausalGraph::new(j.nodes)?;
        for (a, b) in &j.directed {
            g.add_edge_by_name(a, b)?;
        }
        for (a, b) in &j.undirected {
            g.add_undirected_by_name(a, b)?;
        }
        for (a, b) in &j.bold {
            let (a, b) = (g.id(a)?, g.id(b)?);
            g.set_bold(a, b, true);
        }
        Ok(g)
    }
}

impl Serialize for CausalGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GraphJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CausalGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = GraphJson::deserialize(d)?;
        CausalGraph::try_from(j).map_err(serde::de::Error::custom)
    }
}

fn ident(name: &str) -> String {
    let plain = !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit());
    if plain {
        name.to_string()
    } else {
        alloc::format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
    }
}

impl CausalGraph {
    /// Renders the graph as DOT-style text (`dag {}` / `pdag {}` headers as
    /// read by DAGitty) or as JSON.
    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Json => serde_json::to_string_pretty(&GraphJson::from(self))
                .expect("graph json is always serializable"),
            ExportFormat::Dot => self.to_dot(),
        }
    }

    fn to_dot(&self) -> String {
        let mut out = String::new();
        let header = if self.is_fully_directed() { "dag" } else { "pdag" };
        let _ = writeln!(out, "{header} {{");
        for name in self.names() {
            let _ = writeln!(out, "  {};", ident(name));
        }
        for (a, b) in self.directed_edges() {
            let _ = writeln!(out, "  {} -> {};", ident(self.name(a)), ident(self.name(b)));
        }
        for (a, b) in self.undirected_edges() {
            let _ = writeln!(out, "  {} -- {};", ident(self.name(a)), ident(self.name(b)));
        }
        out.push_str("}\n");
        out
    }
}

pub fn parse_json(text: &str) -> Result<CausalGraph, GraphError> {
    let j: GraphJson = serde_json::from_str(text).map_err(|e| GraphError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    CausalGraph::try_from(j)
}

/// Parses the text produced by [`CausalGraph::export`] with [`ExportFormat::Dot`].
///
/// Accepts `dag`, `pdag`, `digraph` and `graph` headers, one statement per
/// line: `A;`, `A -> B;` or `A -- B;`. Attribute lists are ignored.
pub fn parse_dot(text: &str) -> Result<CausalGraph, GraphError> {
    let mut g = CausalGraph::new(Vec::<String>::new())?;
    let mut opened = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |message: &str| GraphError::Parse {
            line: line_no,
            message: message.to_string(),
        };
        let mut line = raw.trim();
        if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
            continue;
        }
        if !opened {
            let head = line.trim_end_matches('{').trim();
            let kind = head.split_whitespace().next().unwrap_or("");
            if !matches!(kind, "dag" | "pdag" | "digraph" | "graph") || !line.ends_with('{') {
                return Err(err("expected graph header"));
            }
            opened = true;
            continue;
        }
        if line == "}" {
            return Ok(g);
        }
        if let Some(pos) = line.find('[') {
            line = line[..pos].trim();
        }
        let line = line.trim_end_matches(';').trim();
        let (a, op, b) = if let Some((a, b)) = line.split_once("->") {
            (a, "->", Some(b))
        } else if let Some((a, b)) = line.split_once("--") {
            (a, "--", Some(b))
        } else {
            (line, "", None)
        };
        let a = unquote(a.trim()).ok_or_else(|| err("bad node name"))?;
        let ia = match g.id(&a) {
            Ok(id) => id,
            Err(_) => g.add_node(a)?,
        };
        if let Some(b) = b {
            let b = unquote(b.trim()).ok_or_else(|| err("bad node name"))?;
            let ib = match g.id(&b) {
                Ok(id) => id,
                Err(_) => g.add_node(b)?,
            };
            if op == "->" {
                g.add_directed(ia, ib)?;
            } else {
                g.add_undirected(ia, ib)?;
            }
        }
    }
    Err(GraphError::Parse {
        line: text.lines().count(),
        message: "missing closing brace".into(),
    })
}

fn unquote(s: &str) -> Option<String> {
    if s.is_empty() {
        return None;
    }
    if let Some(inner) = s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        return Some(inner.replace("\\\"", "\"").replace("\\\\", "\\"));
    }
    if s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Some(s.to_string())
    } else {
        None
    }
}
