//! Jaro similarity and the Winkler common-prefix boost.

/// Jaro similarity over unicode scalar values: matches within a window of
/// ⌊max(|a|,|b|)/2⌋−1, transpositions counted as half the number of
/// matched characters out of sequence.
pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);

    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut m = 0usize;
    for i in 0..a.len() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && a[i] == b[j] {
                a_matched[i] = true;
                b_matched[j] = true;
                m += 1;
                break;
            }
        }
    }
    if m == 0 {
        return 0.0;
    }

    let matched_a = a.iter().zip(&a_matched).filter(|(_, &f)| f).map(|(c, _)| *c);
    let matched_b: Vec<char> = b.iter().zip(&b_matched).filter(|(_, &f)| f).map(|(c, _)| *c).collect();
    let mismatches = matched_a
        .zip(&matched_b)
        .filter(|(x, y)| *x != **y)
        .count();
    let t = mismatches as f64 / 2.0;

    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Jaro-Winkler: jaro + ℓ·p·(1−jaro) with common-prefix length ℓ capped at
/// 4. `prefix_scale` must lie in [0, 0.25] so the result stays in [0, 1].
pub fn jaro_winkler(a: &str, b: &str, prefix_scale: f64) -> f64 {
    assert!(
        (0.0..=0.25).contains(&prefix_scale),
        "prefix_scale {prefix_scale} outside [0, 0.25]"
    );
    let sim = jaro(a, b);
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    sim + prefix as f64 * prefix_scale * (1.0 - sim)
}

/// Winkler's standard prefix scale.
pub const DEFAULT_PREFIX_SCALE: f64 = 0.1;
