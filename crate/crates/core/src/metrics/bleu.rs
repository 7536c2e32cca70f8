use std::collections::HashMap;

/// Splits LaTeX into tokens: `\command` words stay whole, every other
/// non-whitespace character stands alone.
pub fn latex_tokens(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut iter = s.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() {
            continue;
        }
        let mut end = i + c.len_utf8();
        if c == '\\' {
            while let Some(&(j, d)) = iter.peek() {
                if !d.is_ascii_alphabetic() {
                    break;
                }
                end = j + d.len_utf8();
                iter.next();
            }
        }
        out.push(&s[i..end]);
    }
    out
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence BLEU with uniform 1-4 gram weights and a brevity penalty.
/// An order with no clipped matches scores `1 / (candidates + 1)`.
pub fn bleu4(pred: &str, gt: &str) -> f64 {
    let p = latex_tokens(pred);
    let r = latex_tokens(gt);
    if p.is_empty() {
        return if r.is_empty() { 1.0 } else { 0.0 };
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand = ngram_counts(&p, n);
        let refs = ngram_counts(&r, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand.iter().map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0))).sum();
        let precision = if matched > 0 {
            matched as f64 / total as f64
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += precision.ln() / 4.0;
    }
    let (c, rl) = (p.len() as f64, r.len() as f64);
    let bp = if c > rl { 1.0 } else { (1.0 - rl / c).exp() };
    (bp * log_sum.exp()).clamp(0.0, 1.0)
}
