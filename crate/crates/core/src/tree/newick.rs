use super::{Tree, TreeError};

/// Parsed subtree before validation.
enum Node {
    Leaf(usize),
    Group(Vec<Node>),
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> TreeError {
        TreeError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<(), TreeError> {
        match self.peek() {
            Some(b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            Some(b) => Err(self.error(format!(
                "expected '{}', found '{}'",
                byte as char, b as char
            ))),
            None => Err(self.error(format!("expected '{}', found end of input", byte as char))),
        }
    }

    fn subtree(&mut self) -> Result<Node, TreeError> {
        let node = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let mut children = vec![self.subtree()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    children.push(self.subtree()?);
                }
                self.expect(b')')?;
                Node::Group(children)
            }
            Some(b) if b.is_ascii_digit() => Node::Leaf(self.label()?),
            Some(b) => return Err(self.error(format!("unexpected '{}'", b as char))),
            None => return Err(self.error("unexpected end of input")),
        };
        if self.peek() == Some(b':') {
            self.pos += 1;
            self.branch_length()?;
        }
        Ok(node)
    }

    fn label(&mut self) -> Result<usize, TreeError> {
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        let value: usize = digits.parse().map_err(|_| TreeError::Syntax {
            position: start,
            message: format!("leaf label '{digits}' is too large"),
        })?;
        if value == 0 {
            return Err(TreeError::Syntax {
                position: start,
                message: "leaf labels must be positive".into(),
            });
        }
        Ok(value)
    }

    fn branch_length(&mut self) -> Result<(), TreeError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len()
            && matches!(
                self.text[self.pos],
                b'0'..=b'9' | b'.' | b'-' | b'+' | b'e' | b'E'
            )
        {
            self.pos += 1;
        }
        let raw = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii");
        raw.parse::<f64>()
            .map(|_| ())
            .map_err(|_| TreeError::Syntax {
                position: start,
                message: format!("invalid branch length '{raw}'"),
            })
    }
}

/// Parses a Newick string with positive integer leaf labels `1..=l`.
///
/// Branch lengths are accepted and ignored. A root with exactly two children is
/// suppressed, since the tree is unrooted.
pub fn parse_newick(text: &str) -> Result<Tree, TreeError> {
    let mut parser = Parser {
        text: text.as_bytes(),
        pos: 0,
    };
    if parser.peek() != Some(b'(') {
        return Err(parser.error("a tree must start with '('"));
    }
    let root = parser.subtree()?;
    parser.expect(b';')?;
    if parser.peek().is_some() {
        return Err(parser.error("trailing input after ';'"));
    }

    let mut labels = Vec::new();
    collect_labels(&root, &mut labels);
    let leaf_count = labels.len();
    let mut seen = vec![false; leaf_count + 1];
    for &l in &labels {
        if l > leaf_count {
            return Err(TreeError::NonContiguousLabels {
                expected: leaf_count,
                found: l,
            });
        }
        if std::mem::replace(&mut seen[l], true) {
            return Err(TreeError::DuplicateLabel(l));
        }
    }
    if leaf_count < 3 {
        return Err(TreeError::TooFewLeaves(leaf_count));
    }

    let mut edges = Vec::new();
    let mut next = leaf_count;
    let Node::Group(children) = root else {
        unreachable!("root starts with '('")
    };
    match children.len() {
        1 => {
            return Err(TreeError::InteriorValency {
                node: leaf_count,
                valency: 1,
            })
        }
        2 => {
            // unrooted: the two root children are joined directly
            let a = build(&children[0], &mut next, &mut edges)?;
            let b = build(&children[1], &mut next, &mut edges)?;
            edges.push((a, b));
        }
        _ => {
            let me = next;
            next += 1;
            for c in &children {
                let id = build(c, &mut next, &mut edges)?;
                edges.push((me, id));
            }
        }
    }
    Tree::from_edges(leaf_count, next, &edges)
}

fn collect_labels(node: &Node, out: &mut Vec<usize>) {
    match node {
        Node::Leaf(l) => out.push(*l),
        Node::Group(children) => children.iter().for_each(|c| collect_labels(c, out)),
    }
}

fn build(
    node: &Node,
    next: &mut usize,
    edges: &mut Vec<(usize, usize)>,
) -> Result<usize, TreeError> {
    match node {
        Node::Leaf(l) => Ok(l - 1),
        Node::Group(children) => {
            let me = *next;
            *next += 1;
            if children.len() < 2 {
                return Err(TreeError::InteriorValency {
                    node: me,
                    valency: children.len() + 1,
                });
            }
            for c in children {
                let id = build(c, next, edges)?;
                edges.push((me, id));
            }
            Ok(me)
        }
    }
}
