//! Zhang-Shasha edit distance between ordered labeled trees.

/// Rooted ordered tree with labels of type `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode<L> {
    pub label: L,
    pub children: Vec<TreeNode<L>>,
}

impl<L> TreeNode<L> {
    pub fn leaf(label: L) -> Self {
        Self {
            label,
            children: Vec::new(),
        }
    }

    pub fn new(label: L, children: Vec<TreeNode<L>>) -> Self {
        Self { label, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(TreeNode::size).sum::<usize>()
    }
}

/// Edit operation costs.
pub trait EditCost<L> {
    fn insert(&self, label: &L) -> f64;
    fn delete(&self, label: &L) -> f64;
    fn relabel(&self, from: &L, to: &L) -> f64;
}

/// Unit insert and delete; relabel is free only for equal labels.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitCost;

impl<L: PartialEq> EditCost<L> for UnitCost {
    fn insert(&self, _: &L) -> f64 {
        1.0
    }
    fn delete(&self, _: &L) -> f64 {
        1.0
    }
    fn relabel(&self, from: &L, to: &L) -> f64 {
        if from == to {
            0.0
        } else {
            1.0
        }
    }
}

/// Postorder flattening: labels plus the leftmost-leaf index of each node,
/// both 1-based with a dummy slot at 0.
struct Flat<'a, L> {
    labels: Vec<Option<&'a L>>,
    leftmost: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a, L> Flat<'a, L> {
    fn new(root: Option<&'a TreeNode<L>>) -> Self {
        let mut flat = Flat {
            labels: vec![None],
            leftmost: vec![0],
            keyroots: Vec::new(),
        };
        if let Some(root) = root {
            flat.visit(root);
        }
        // A keyroot is the highest node with a given leftmost leaf.
        let n = flat.labels.len() - 1;
        let mut seen = vec![false; n + 1];
        for i in (1..=n).rev() {
            let l = flat.leftmost[i];
            if !std::mem::replace(&mut seen[l], true) {
                flat.keyroots.push(i);
            }
        }
        flat.keyroots.sort_unstable();
        flat
    }

    fn visit(&mut self, node: &'a TreeNode<L>) -> usize {
        let mut first_leaf = None;
        for child in &node.children {
            let l = self.visit(child);
            first_leaf.get_or_insert(l);
        }
        self.labels.push(Some(&node.label));
        let idx = self.labels.len() - 1;
        let l = first_leaf.unwrap_or(idx);
        self.leftmost.push(l);
        l
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }

    fn label(&self, i: usize) -> &'a L {
        self.labels[i].expect("index within tree")
    }
}

/// Minimal cost of an insert/delete/relabel script turning `a` into `b`.
/// `None` stands for the empty tree.
pub fn tree_edit_distance<L, C: EditCost<L>>(a: Option<&TreeNode<L>>, b: Option<&TreeNode<L>>, cost: &C) -> f64 {
    let t1 = Flat::new(a);
    let t2 = Flat::new(b);
    let (n1, n2) = (t1.len(), t2.len());
    if n1 == 0 {
        return (1..=n2).map(|j| cost.insert(t2.label(j))).sum();
    }
    if n2 == 0 {
        return (1..=n1).map(|i| cost.delete(t1.label(i))).sum();
    }

    let mut td = vec![vec![0.0; n2 + 1]; n1 + 1];
    let mut fd = vec![vec![0.0; n2 + 1]; n1 + 1];
    for &i in &t1.keyroots {
        for &j in &t2.keyroots {
            let (li, lj) = (t1.leftmost[i], t2.leftmost[j]);
            fd[li - 1][lj - 1] = 0.0;
            for x in li..=i {
                fd[x][lj - 1] = fd[x - 1][lj - 1] + cost.delete(t1.label(x));
            }
            for y in lj..=j {
                fd[li - 1][y] = fd[li - 1][y - 1] + cost.insert(t2.label(y));
            }
            for x in li..=i {
                for y in lj..=j {
                    let del = fd[x - 1][y] + cost.delete(t1.label(x));
                    let ins = fd[x][y - 1] + cost.insert(t2.label(y));
                    if t1.leftmost[x] == li && t2.leftmost[y] == lj {
                        let sub = fd[x - 1][y - 1] + cost.relabel(t1.label(x), t2.label(y));
                        fd[x][y] = del.min(ins).min(sub);
                        td[x][y] = fd[x][y];
                    } else {
                        let sub = fd[t1.leftmost[x] - 1][t2.leftmost[y] - 1] + td[x][y];
                        fd[x][y] = del.min(ins).min(sub);
                    }
                }
            }
        }
    }
    td[n1][n2]
}
