//! Newick reading and writing for trees with named leaves and unnamed internal nodes.

use crate::error::{Error, Result};
use crate::points::{is_valid_label, PointSet};
use crate::tree::{HierarchicalTree, NodeId, TreeBuilder};

/// Parses one `;`-terminated Newick tree, interning leaf names into `points`.
///
/// Structural problems (duplicate leaves, unary nodes) surface as
/// [`Error::InvalidTree`] naming the violated invariant.
pub fn parse(text: &str, points: &mut PointSet) -> Result<HierarchicalTree> {
    let tokens = tokenize(text)?;
    let mut b = TreeBuilder::new();
    let mut stack: Vec<NodeId> = Vec::new();
    let mut root = None;
    let mut last: Option<NodeId> = None;
    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            Tok::Open => {
                if root.is_some() {
                    return Err(Error::Newick("content after the root".into()));
                }
                if last.is_some() {
                    return Err(Error::Newick("missing ',' before '('".into()));
                }
                let id = b.internal();
                if let Some(&p) = stack.last() {
                    b.attach(p, id);
                }
                stack.push(id);
            }
            Tok::Comma => {
                if stack.is_empty() {
                    return Err(Error::Newick("',' outside parentheses".into()));
                }
                if last.take().is_none() {
                    return Err(Error::Newick("empty subtree".into()));
                }
            }
            Tok::Close => {
                let id = stack
                    .pop()
                    .ok_or_else(|| Error::Newick("unbalanced ')'".into()))?;
                if last.take().is_none() {
                    return Err(Error::Newick("empty subtree".into()));
                }
                if let Some(Tok::Name(n)) = tokens.get(i + 1) {
                    return Err(Error::Newick(format!(
                        "internal node label {n:?} not supported"
                    )));
                }
                last = Some(id);
                if stack.is_empty() {
                    root = Some(id);
                }
            }
            Tok::Name(name) => {
                if last.is_some() {
                    return Err(Error::Newick(format!("unexpected name {name:?}")));
                }
                if !is_valid_label(name) {
                    return Err(Error::InvalidLabel(name.clone()));
                }
                let p = points.intern(name)?;
                let id = b.leaf(p);
                match stack.last() {
                    Some(&parent) => b.attach(parent, id),
                    None => {
                        if root.is_some() {
                            return Err(Error::Newick("content after the root".into()));
                        }
                        root = Some(id);
                    }
                }
                last = Some(id);
            }
            Tok::Semi => {
                if !stack.is_empty() {
                    return Err(Error::Newick("unbalanced '('".into()));
                }
                if i + 1 != tokens.len() {
                    return Err(Error::Newick("content after ';'".into()));
                }
                let root = root.ok_or_else(|| Error::Newick("empty tree".into()))?;
                return b.finish_auto(root);
            }
        }
        i += 1;
    }
    Err(Error::Newick("missing terminating ';'".into()))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Comma,
    Semi,
    Name(String),
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let mut name = String::new();
    let flush = |name: &mut String, out: &mut Vec<Tok>| {
        if !name.is_empty() {
            out.push(Tok::Name(std::mem::take(name)));
        }
    };
    for c in text.chars() {
        match c {
            '(' | ')' | ',' | ';' => {
                flush(&mut name, &mut out);
                out.push(match c {
                    '(' => Tok::Open,
                    ')' => Tok::Close,
                    ',' => Tok::Comma,
                    _ => Tok::Semi,
                });
            }
            c if c.is_whitespace() => flush(&mut name, &mut out),
            ':' => return Err(Error::Newick("branch lengths are not supported".into())),
            c => name.push(c),
        }
    }
    flush(&mut name, &mut out);
    Ok(out)
}

/// Writes the tree in its stored child order.
pub fn write(tree: &HierarchicalTree, points: &PointSet) -> String {
    render(tree, points, false)
}

/// Writes the tree with children ordered by their lexicographically smallest leaf name.
pub fn write_canonical(tree: &HierarchicalTree, points: &PointSet) -> String {
    render(tree, points, true)
}

fn render(tree: &HierarchicalTree, points: &PointSet, sorted: bool) -> String {
    let mut text: Vec<Option<(String, String)>> = vec![None; tree.nodes().len()];
    for v in tree.postorder() {
        let node = tree.node(v);
        let entry = if node.is_leaf() {
            let name = points
                .name(node.point.expect("leaf carries a point"))
                .to_string();
            (name.clone(), name)
        } else {
            let mut parts: Vec<(String, String)> = node
                .children
                .iter()
                .map(|&c| text[c].take().expect("child rendered"))
                .collect();
            if sorted {
                parts.sort();
            }
            let min = parts
                .iter()
                .map(|(m, _)| m.clone())
                .min()
                .unwrap_or_default();
            let body: Vec<String> = parts.into_iter().map(|(_, s)| s).collect();
            (min, format!("({})", body.join(",")))
        };
        text[v] = Some(entry);
    }
    let (_, body) = text[tree.root()].take().unwrap_or_default();
    format!("{body};")
}
