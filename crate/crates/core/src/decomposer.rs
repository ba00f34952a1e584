//! Expands a goal into its prerequisite tree and a post-order schedule.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{Goal, KnowledgeBase};

pub const MAX_DEPTH: usize = 32;

/// A goal plus the sub-goals that must be achieved first. Materials come
/// before the tool among the children.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubGoalTree {
    pub goal: Goal,
    pub children: Vec<SubGoalTree>,
}

impl SubGoalTree {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(SubGoalTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(SubGoalTree::depth).max().unwrap_or(0)
    }

    /// One line per node, two spaces of indent per level.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(&mut out, 0);
        out
    }

    fn write_text(&self, out: &mut String, level: usize) {
        let _ = writeln!(
            out,
            "{}{} x{}",
            "  ".repeat(level),
            self.goal.object,
            self.goal.count
        );
        for c in &self.children {
            c.write_text(out, level + 1);
        }
    }

    /// Graphviz rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph goals {\n");
        let mut next = 0usize;
        self.write_dot(&mut out, &mut next);
        out.push_str("}\n");
        out
    }

    fn write_dot(&self, out: &mut String, next: &mut usize) -> usize {
        let id = *next;
        *next += 1;
        let _ = writeln!(
            out,
            "  n{id} [label=\"{} x{}\"];",
            self.goal.object, self.goal.count
        );
        for c in &self.children {
            let cid = c.write_dot(out, next);
            let _ = writeln!(out, "  n{id} -> n{cid};");
        }
        id
    }
}

/// Recursively expands `object` using the knowledge base. Duplicate
/// sub-goals in different branches are kept as separate nodes.
pub fn decompose(kb: &KnowledgeBase, object: &str, count: u32) -> Result<SubGoalTree> {
    expand(kb, object, count, 1)
}

fn expand(kb: &KnowledgeBase, object: &str, count: u32, depth: usize) -> Result<SubGoalTree> {
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded {
            item: object.to_string(),
            cap: MAX_DEPTH,
        });
    }
    let goal = kb.make_goal(object, count)?;
    let mut children = Vec::new();
    if let Some(mats) = &goal.material {
        for (m, &n) in mats {
            children.push(expand(kb, m, n, depth + 1)?);
        }
    }
    if let Some(t) = &goal.tool {
        children.push(expand(kb, t, 1, depth + 1)?);
    }
    Ok(SubGoalTree { goal, children })
}

/// Post-order traversal: every child before its parent, root last.
pub fn schedule(tree: &SubGoalTree) -> Vec<Goal> {
    let mut out = Vec::with_capacity(tree.size());
    fn walk(t: &SubGoalTree, out: &mut Vec<Goal>) {
        for c in &t.children {
            walk(c, out);
        }
        out.push(t.goal.clone());
    }
    walk(tree, &mut out);
    out
}

/// Single-node tree used when decomposition is disabled.
pub fn flat(kb: &KnowledgeBase, object: &str, count: u32) -> Result<SubGoalTree> {
    Ok(SubGoalTree {
        goal: kb.make_goal(object, count)?,
        children: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wooden_pickaxe_tree() {
        let kb = KnowledgeBase::bundled();
        let t = decompose(kb, "wooden_pickaxe", 1).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("wooden_pickaxe x1\n"));
        let order: Vec<_> = schedule(&t).into_iter().map(|g| g.object).collect();
        assert_eq!(order.last().map(String::as_str), Some("wooden_pickaxe"));
        assert!(t.to_dot().contains("->"));
    }

    #[test]
    fn deep_chain_hits_cap() {
        use crate::knowledge::{Recipe, Station};
        let recipes = (0..40)
            .map(|i| Recipe {
                output: format!("i{i}"),
                output_count: 1,
                materials: [(format!("i{}", i + 1), 1)].into_iter().collect(),
                tool: None,
                station: Station::Craft,
            })
            .chain(std::iter::once(Recipe {
                output: "i40".into(),
                output_count: 1,
                materials: [("base".to_string(), 1)].into_iter().collect(),
                tool: None,
                station: Station::Craft,
            }))
            .collect();
        let facts = vec![crate::knowledge::FactEntry {
            item: "base".into(),
            info_text: "x".into(),
            hints: Default::default(),
            aliases: vec![],
        }];
        let kb = KnowledgeBase::new(recipes, facts).unwrap();
        assert!(matches!(
            decompose(&kb, "i0", 1),
            Err(Error::DepthExceeded { cap: MAX_DEPTH, .. })
        ));
        assert!(decompose(&kb, "i20", 1).is_ok());
    }
}
