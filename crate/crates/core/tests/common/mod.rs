//! Slow, obviously-correct reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use vrdoc::doc_model::{BBox, Page};
use vrdoc::metrics::TreeNode;
use vrdoc::resolution::{Tier, PATCH_AREA};

/// Full-matrix Wagner-Fischer edit distance.
pub fn edit_distance_dp(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

pub fn norm_edit_dp(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let denom = a.len().max(b.len());
    if denom == 0 {
        0.0
    } else {
        edit_distance_dp(&a, &b) as f64 / denom as f64
    }
}

/// Covered area by rasterizing at `step` pixels: counts sample points at
/// cell centres that fall inside any box (clipped to the page).
pub fn raster_area(page: &Page, step: f64) -> f64 {
    let (w, h) = (page.width as f64, page.height as f64);
    let mut covered = 0usize;
    let nx = (w / step).ceil() as usize;
    let ny = (h / step).ceil() as usize;
    for iy in 0..ny {
        let y = (iy as f64 + 0.5) * step;
        for ix in 0..nx {
            let x = (ix as f64 + 0.5) * step;
            if page.regions.iter().any(|r| {
                let b = r.bbox;
                x >= b.x0() && x < b.x1() && y >= b.y0() && y < b.y1()
            }) {
                covered += 1;
            }
        }
    }
    covered as f64 * step * step
}

/// Exhaustive planner: every patch grid (a, b) whose pixel count lies in
/// the tier, ranked by L1 distance to the ideally scaled size, then larger
/// area, then larger width.
pub fn plan_oracle(src_w: u32, src_h: u32, tier: Tier) -> (u64, u64) {
    let area = src_w as f64 * src_h as f64;
    let scale = if area < tier.min_pixels as f64 {
        (tier.min_pixels as f64 / area).sqrt()
    } else if area > tier.max_pixels as f64 {
        (tier.max_pixels as f64 / area).sqrt()
    } else {
        1.0
    };
    let iw = src_w as f64 * scale / 28.0;
    let ih = src_h as f64 * scale / 28.0;
    let max_patches = tier.max_pixels / PATCH_AREA;
    let min_patches = tier.min_pixels.div_ceil(PATCH_AREA);
    let mut best: Option<(f64, u64, u64)> = None;
    for a in 1..=max_patches {
        for b in 1..=max_patches / a {
            if a * b < min_patches {
                continue;
            }
            let d = (a as f64 - iw).abs() + (b as f64 - ih).abs();
            let better = match best {
                None => true,
                Some((bd, ba, bb)) => {
                    d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && (a * b > ba * bb || (a * b == ba * bb && a > ba)))
                }
            };
            if better {
                best = Some((d, a, b));
            }
        }
    }
    let (_, a, b) = best.expect("every tier admits some grid");
    (a, b)
}

/// Ordered tree flattened with preorder and postorder ranks.
struct Indexed<'a, L> {
    labels: Vec<&'a L>,
    pre: Vec<usize>,
    post: Vec<usize>,
}

fn index_tree<L>(t: &TreeNode<L>) -> Indexed<'_, L> {
    fn walk<'a, L>(n: &'a TreeNode<L>, out: &mut Indexed<'a, L>, post_counter: &mut usize) {
        let me = out.labels.len();
        out.labels.push(&n.label);
        out.pre.push(me);
        out.post.push(0);
        for c in &n.children {
            walk(c, out, post_counter);
        }
        out.post[me] = *post_counter;
        *post_counter += 1;
    }
    let mut out = Indexed {
        labels: Vec::new(),
        pre: Vec::new(),
        post: Vec::new(),
    };
    let mut counter = 0;
    walk(t, &mut out, &mut counter);
    out
}

/// Minimum edit cost over every valid ordered-tree mapping: one-to-one
/// pairs that preserve both preorder and postorder (hence ancestry and
/// sibling order). Each mapping corresponds to an edit script whose cost is
/// relabels on mapped pairs plus deletions and insertions of the rest.
pub fn ted_by_mappings<L>(
    a: &TreeNode<L>,
    b: &TreeNode<L>,
    relabel: &dyn Fn(&L, &L) -> f64,
    delete: &dyn Fn(&L) -> f64,
    insert: &dyn Fn(&L) -> f64,
) -> f64 {
    let ta = index_tree(a);
    let tb = index_tree(b);
    let del_all: f64 = ta.labels.iter().map(|l| delete(l)).sum();
    let ins_all: f64 = tb.labels.iter().map(|l| insert(l)).sum();
    let mut best = del_all + ins_all;
    let mut pairs: Vec<(usize, usize)> = Vec::new();

    // Nodes of `a` in preorder; mapped partners must increase in preorder
    // and agree on postorder comparisons with every earlier pair.
    #[allow(clippy::too_many_arguments)]
    fn go<L>(
        i: usize,
        ta: &Indexed<'_, L>,
        tb: &Indexed<'_, L>,
        pairs: &mut Vec<(usize, usize)>,
        cost: f64,
        best: &mut f64,
        relabel: &dyn Fn(&L, &L) -> f64,
        delete: &dyn Fn(&L) -> f64,
        insert: &dyn Fn(&L) -> f64,
    ) {
        if i == ta.labels.len() {
            *best = best.min(cost);
            return;
        }
        go(i + 1, ta, tb, pairs, cost, best, relabel, delete, insert);
        let start = pairs.last().map_or(0, |&(_, j)| j + 1);
        for j in start..tb.labels.len() {
            let consistent = pairs.iter().all(|&(pi, pj)| (ta.post[pi] < ta.post[i]) == (tb.post[pj] < tb.post[j]));
            if !consistent {
                continue;
            }
            // Mapping swaps a delete + insert for a relabel.
            let delta = relabel(ta.labels[i], tb.labels[j]) - delete(ta.labels[i]) - insert(tb.labels[j]);
            pairs.push((i, j));
            go(i + 1, ta, tb, pairs, cost + delta, best, relabel, delete, insert);
            pairs.pop();
        }
    }
    go(0, &ta, &tb, &mut pairs, del_all + ins_all, &mut best, relabel, delete, insert);
    best
}

pub fn ted_unit<L: PartialEq>(a: &TreeNode<L>, b: &TreeNode<L>) -> f64 {
    ted_by_mappings(a, b, &|x, y| if x == y { 0.0 } else { 1.0 }, &|_| 1.0, &|_| 1.0)
}

/// Random ordered tree with `n` nodes labelled from `alphabet`.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, alphabet: &[char]) -> TreeNode<char> {
    assert!(n >= 1);
    // Parent pointers with parent < child give every ordered tree shape.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        children[p].push(i);
    }
    let labels: Vec<char> = (0..n).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
    fn build(i: usize, children: &[Vec<usize>], labels: &[char]) -> TreeNode<char> {
        TreeNode::new(labels[i], children[i].iter().map(|&c| build(c, children, labels)).collect())
    }
    build(0, &children, &labels)
}

/// Every ordered tree shape with exactly `n` nodes (unit labels).
pub fn all_shapes(n: usize) -> Vec<TreeNode<()>> {
    fn forests(m: usize) -> Vec<Vec<TreeNode<()>>> {
        if m == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for k in 1..=m {
            for first in all_shapes(k) {
                for rest in forests(m - k) {
                    let mut f = vec![first.clone()];
                    f.extend(rest);
                    out.push(f);
                }
            }
        }
        out
    }
    if n == 0 {
        return Vec::new();
    }
    forests(n - 1).into_iter().map(|f| TreeNode::new((), f)).collect()
}

/// Every labelling of `shape` over `alphabet`.
pub fn all_labellings(shape: &TreeNode<()>, alphabet: &[char]) -> Vec<TreeNode<char>> {
    let kids: Vec<Vec<TreeNode<char>>> = shape.children.iter().map(|c| all_labellings(c, alphabet)).collect();
    let mut forests: Vec<Vec<TreeNode<char>>> = vec![Vec::new()];
    for options in &kids {
        let mut next = Vec::new();
        for f in &forests {
            for o in options {
                let mut g = f.clone();
                g.push(o.clone());
                next.push(g);
            }
        }
        forests = next;
    }
    let mut out = Vec::new();
    for &l in alphabet {
        for f in &forests {
            out.push(TreeNode::new(l, f.clone()));
        }
    }
    out
}

pub fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
    BBox::new(x0, y0, x1, y1).unwrap()
}
