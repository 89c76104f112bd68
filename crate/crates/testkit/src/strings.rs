//! Reference string encoders, written straight from the rule statements:
//! American Soundex (first letter kept and participating in collapse,
//! digits bfpv=1 cgjkqsxz=2 dt=3 l=4 mn=5 r=6, vowels and y separate equal
//! digits, h and w do not) and Jaro similarity with the Winkler prefix
//! boost (match window ⌊max/2⌋−1, transpositions = half the matched
//! characters out of sequence, boost ℓ·p·(1−jaro) with ℓ capped at 4).

const DIGIT_GROUPS: [&str; 6] = ["BFPV", "CGJKQSXZ", "DT", "L", "MN", "R"];

fn digit_of(c: char) -> Option<u8> {
    DIGIT_GROUPS
        .iter()
        .position(|g| g.contains(c))
        .map(|i| (i + 1) as u8)
}

/// (code, flagged). Flagged means the input had no ASCII letters; the
/// code is then the reserved "Z000".
pub fn ref_soundex(s: &str) -> (String, bool) {
    let letters: Vec<char> = s
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_uppercase())
        .collect();
    if letters.is_empty() {
        return ("Z000".to_string(), true);
    }
    let mut out = String::new();
    out.push(letters[0]);
    // the first letter's own digit (if any) suppresses an equal digit next
    let mut last = digit_of(letters[0]);
    for &c in &letters[1..] {
        if out.len() == 4 {
            break;
        }
        if c == 'H' || c == 'W' {
            continue;
        }
        match digit_of(c) {
            Some(d) => {
                if last != Some(d) {
                    out.push(char::from_digit(u32::from(d), 10).unwrap());
                }
                last = Some(d);
            }
            None => last = None,
        }
    }
    while out.len() < 4 {
        out.push('0');
    }
    (out, false)
}

/// Per-word codes of the letter-bearing words joined with single spaces;
/// "Z000" when no word has a letter.
pub fn ref_soundex_phrase(s: &str) -> String {
    let codes: Vec<String> = s
        .split_whitespace()
        .map(ref_soundex)
        .filter(|(_, flagged)| !flagged)
        .map(|(code, _)| code)
        .collect();
    if codes.is_empty() {
        "Z000".to_string()
    } else {
        codes.join(" ")
    }
}

/// Jaro similarity. Matching is greedy: each character of `a`, scanning
/// left to right, takes the leftmost unmatched equal character of `b`
/// within the window.
pub fn ref_jaro(a: &str, b: &str) -> f64 {
    let av: Vec<char> = a.chars().collect();
    let bv: Vec<char> = b.chars().collect();
    if av.is_empty() && bv.is_empty() {
        return 1.0;
    }
    if av.is_empty() || bv.is_empty() {
        return 0.0;
    }
    let window = (av.len().max(bv.len()) / 2).saturating_sub(1);

    // b-index matched by each matched a-position, in a order
    let mut taken = vec![false; bv.len()];
    let mut pairs: Vec<usize> = Vec::new();
    for (i, &ca) in av.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(bv.len());
        for j in lo..hi {
            if !taken[j] && bv[j] == ca {
                taken[j] = true;
                pairs.push(j);
                break;
            }
        }
    }
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }

    let a_seq: Vec<char> = pairs.iter().map(|&j| bv[j]).collect();
    let mut b_seq: Vec<char> = Vec::new();
    for (j, &t) in taken.iter().enumerate() {
        if t {
            b_seq.push(bv[j]);
        }
    }
    // a_seq is the matched characters in a order (each a char equals the b
    // char it matched); b_seq is the same multiset in b order
    let half_transpositions = a_seq
        .iter()
        .zip(b_seq.iter())
        .filter(|(x, y)| x != y)
        .count();
    let t = half_transpositions as f64 / 2.0;

    let m = m as f64;
    (m / av.len() as f64 + m / bv.len() as f64 + (m - t) / m) / 3.0
}

pub fn ref_jaro_winkler(a: &str, b: &str, prefix_scale: f64) -> f64 {
    let sim = ref_jaro(a, b);
    let prefix = a
        .chars()
        .zip(b.chars())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    sim + prefix as f64 * prefix_scale * (1.0 - sim)
}
