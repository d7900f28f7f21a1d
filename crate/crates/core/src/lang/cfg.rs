use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use super::ast::{Label, Program, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CfgNode {
    Entry,
    Stmt(Label),
    Exit,
}

impl fmt::Display for CfgNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfgNode::Entry => write!(f, "entry"),
            CfgNode::Stmt(l) => write!(f, "{l}"),
            CfgNode::Exit => write!(f, "exit"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Seq,
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CfgEdge {
    pub from: CfgNode,
    pub to: CfgNode,
    pub kind: EdgeKind,
    /// Edge closing a loop (target is an enclosing `while` header).
    pub back: bool,
}

/// One outgoing edge of a conditional, e.g. `(5,8)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CfgBranch {
    pub cond: Label,
    pub polarity: bool,
    pub target: CfgNode,
}

impl fmt::Display for CfgBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.cond, self.target)
    }
}

/// Intraprocedural control-flow graph of a MiniImp program.
#[derive(Debug, Clone)]
pub struct Cfg {
    program: Arc<Program>,
    nodes: Vec<CfgNode>,
    edges: Vec<CfgEdge>,
}

impl Cfg {
    pub fn program(&self) -> &Arc<Program> {
        &self.program
    }

    pub fn nodes(&self) -> &[CfgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[CfgEdge] {
        &self.edges
    }

    pub fn successors(&self, n: CfgNode) -> impl Iterator<Item = &CfgEdge> {
        self.edges.iter().filter(move |e| e.from == n)
    }

    /// All branches, ordered by conditional label then true before false.
    pub fn branches(&self) -> Vec<CfgBranch> {
        let mut out: Vec<CfgBranch> = self
            .edges
            .iter()
            .filter_map(|e| match (e.from, e.kind) {
                (CfgNode::Stmt(cond), EdgeKind::True) => Some(CfgBranch { cond, polarity: true, target: e.to }),
                (CfgNode::Stmt(cond), EdgeKind::False) => Some(CfgBranch { cond, polarity: false, target: e.to }),
                _ => None,
            })
            .collect();
        out.sort_by_key(|b| (b.cond, !b.polarity));
        out
    }

    pub fn branch(&self, cond: Label, polarity: bool) -> Option<CfgBranch> {
        self.branches().into_iter().find(|b| b.cond == cond && b.polarity == polarity)
    }

    /// Nodes from which `Exit` is reachable.
    pub fn reaches_exit(&self) -> BTreeSet<CfgNode> {
        let mut preds: BTreeMap<CfgNode, Vec<CfgNode>> = BTreeMap::new();
        for e in &self.edges {
            preds.entry(e.to).or_default().push(e.from);
        }
        let mut seen = BTreeSet::from([CfgNode::Exit]);
        let mut queue = VecDeque::from([CfgNode::Exit]);
        while let Some(n) = queue.pop_front() {
            for &p in preds.get(&n).into_iter().flatten() {
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        seen
    }
}

struct Builder {
    nodes: Vec<CfgNode>,
    edges: Vec<CfgEdge>,
}

impl Builder {
    /// Wires `stmts` in front of `succ` and returns the block's entry node.
    fn block(&mut self, stmts: &[Stmt], succ: CfgNode, back: bool) -> CfgNode {
        let mut next = succ;
        let mut next_is_back = back;
        for s in stmts.iter().rev() {
            next = self.stmt(s, next, next_is_back);
            next_is_back = false;
        }
        next
    }

    fn stmt(&mut self, s: &Stmt, succ: CfgNode, back: bool) -> CfgNode {
        let me = CfgNode::Stmt(s.label);
        self.nodes.push(me);
        match &s.kind {
            StmtKind::Assign { .. } | StmtKind::Assert(_) => {
                self.edges.push(CfgEdge { from: me, to: succ, kind: EdgeKind::Seq, back });
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                let t = self.block(then_branch, succ, back);
                let f = self.block(else_branch, succ, back);
                self.edges.push(CfgEdge { from: me, to: t, kind: EdgeKind::True, back: back && then_branch.is_empty() });
                self.edges.push(CfgEdge { from: me, to: f, kind: EdgeKind::False, back: back && else_branch.is_empty() });
            }
            StmtKind::While { body, .. } => {
                let b = self.block(body, me, true);
                self.edges.push(CfgEdge { from: me, to: b, kind: EdgeKind::True, back: body.is_empty() });
                self.edges.push(CfgEdge { from: me, to: succ, kind: EdgeKind::False, back });
            }
        }
        me
    }
}

pub fn build_cfg(program: Arc<Program>) -> Cfg {
    let mut b = Builder { nodes: vec![CfgNode::Entry], edges: Vec::new() };
    let first = b.block(&program.body, CfgNode::Exit, false);
    b.edges.push(CfgEdge { from: CfgNode::Entry, to: first, kind: EdgeKind::Seq, back: false });
    b.nodes.push(CfgNode::Exit);
    b.nodes.sort();
    b.edges.sort_by_key(|e| (e.from, e.to, e.kind as u8));
    Cfg { program, nodes: b.nodes, edges: b.edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn cfg(src: &str) -> Cfg {
        build_cfg(Arc::new(parse(src).unwrap()))
    }

    #[test]
    fn running_example_branches() {
        let g = cfg(crate::testing::P_SOURCE);
        let names: Vec<String> = g.branches().iter().map(|b| b.to_string()).collect();
        assert_eq!(names, vec!["(1,2)", "(1,4)", "(5,6)", "(5,8)"]);
        assert_eq!(g.reaches_exit().len(), g.nodes().len());
    }

    #[test]
    fn straight_line_is_a_chain() {
        let g = cfg("int f(int x) {\n y = x;\n z = y;\n assert(z == x);\n}");
        assert!(g.branches().is_empty());
        for n in g.nodes() {
            if *n != CfgNode::Exit {
                assert_eq!(g.successors(*n).count(), 1);
            }
        }
    }

    #[test]
    fn while_loop_has_back_edge() {
        let g = cfg("int f(int n) {\n i = 0;\n while (i < n)\n  i = i + 1;\n assert(i >= n);\n}");
        let br = g.branches();
        assert_eq!(br.len(), 2);
        assert_eq!(br[0].to_string(), "(3,4)");
        assert_eq!(br[1].to_string(), "(3,5)");
        let backs: Vec<_> = g.edges().iter().filter(|e| e.back).collect();
        assert_eq!(backs.len(), 1);
        assert_eq!((backs[0].from, backs[0].to), (CfgNode::Stmt(4), CfgNode::Stmt(3)));
        assert_eq!(g.reaches_exit().len(), g.nodes().len());
    }
}
