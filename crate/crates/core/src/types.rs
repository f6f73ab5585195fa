//! Method of types: enumeration of type classes and their log-probabilities.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Default bound on the number of type classes enumerated.
pub const TYPE_CLASS_CAP: f64 = 1e7;

/// `C(m+d-1, d-1)`, the number of types of length-`m` strings over `d` symbols.
pub fn type_class_count(m: usize, d: usize) -> f64 {
    if d == 0 {
        return 0.0;
    }
    (ln_gamma((m + d) as f64) - ln_gamma((m + 1) as f64) - ln_gamma(d as f64)).exp().round()
}

/// All count vectors of length `d` summing to `m`, in lexicographic order of the counts.
pub fn type_classes(m: usize, d: usize, cap: f64) -> Result<Vec<Vec<u32>>> {
    let count = type_class_count(m, d);
    if count > cap {
        return Err(Error::TypeClassCap { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0u32; d];
    fill(&mut cur, 0, m as u32, &mut out);
    Ok(out)
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in 0..=left {
        cur[pos] = k;
        fill(cur, pos + 1, left - k, out);
    }
}

/// `log(m! / Π n_x!)`.
pub fn log_multinomial(counts: &[u32]) -> f64 {
    let m: u32 = counts.iter().sum();
    ln_gamma(m as f64 + 1.0) - counts.iter().map(|&n| ln_gamma(n as f64 + 1.0)).sum::<f64>()
}

/// `Σ n_x log p_x`, `-∞` when a used symbol has zero probability.
pub fn log_string_prob(counts: &[u32], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&n, &px) in counts.iter().zip(p) {
        if n == 0 {
            continue;
        }
        if px <= 0.0 {
            return f64::NEG_INFINITY;
        }
        s += n as f64 * px.ln();
    }
    s
}

/// Log-probability of the whole type class under `p^{⊗m}`.
pub fn log_class_prob(counts: &[u32], p: &[f64]) -> f64 {
    let s = log_string_prob(counts, p);
    if s == f64::NEG_INFINITY {
        s
    } else {
        log_multinomial(counts) + s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        assert_eq!(type_classes(5, 2, 1e7).unwrap().len(), 6);
        assert_eq!(type_classes(4, 3, 1e7).unwrap().len(), 15);
        assert_eq!(type_class_count(4, 3), 15.0);
    }

    #[test]
    fn class_probabilities_sum_to_one() {
        let p = [0.2, 0.5, 0.3];
        let total: f64 = type_classes(7, 3, 1e7).unwrap().iter().map(|c| log_class_prob(c, &p).exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
