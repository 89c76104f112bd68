//! American Soundex phonetic codes (the National Archives rules).

/// 4-character code: one uppercase letter plus three digits. Inputs with no
/// alphabetic characters map to the reserved code "Z000" with `flagged`
/// set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SoundexCode {
    pub code: String,
    pub flagged: bool,
}

// Digit classes: bfpv→1 cgjkqsxz→2 dt→3 l→4 mn→5 r→6. Vowels (plus y)
// separate equal codes; h and w are transparent and do not.
#[derive(Clone, Copy, PartialEq)]
enum Class {
    Digit(u8),
    Vowel,
    Transparent,
}

fn classify(c: u8) -> Class {
    match c {
        b'B' | b'F' | b'P' | b'V' => Class::Digit(1),
        b'C' | b'G' | b'J' | b'K' | b'Q' | b'S' | b'X' | b'Z' => Class::Digit(2),
        b'D' | b'T' => Class::Digit(3),
        b'L' => Class::Digit(4),
        b'M' | b'N' => Class::Digit(5),
        b'R' => Class::Digit(6),
        b'A' | b'E' | b'I' | b'O' | b'U' | b'Y' => Class::Vowel,
        b'H' | b'W' => Class::Transparent,
        _ => unreachable!("classify is called on A-Z only"),
    }
}

/// Encode one word. Case-insensitive; non-alphabetic characters are
/// ignored entirely.
pub fn soundex(s: &str) -> SoundexCode {
    let letters: Vec<u8> = s
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase() as u8)
        .collect();
    let Some((&first, rest)) = letters.split_first() else {
        return SoundexCode { code: "Z000".into(), flagged: true };
    };

    let mut code = String::with_capacity(4);
    code.push(first as char);
    // the first letter participates in adjacent-code collapsing
    let mut prev = match classify(first) {
        Class::Digit(d) => Some(d),
        Class::Vowel => None,
        Class::Transparent => None,
    };
    for &c in rest {
        match classify(c) {
            Class::Digit(d) => {
                if prev != Some(d) {
                    code.push((b'0' + d) as char);
                    if code.len() == 4 {
                        break;
                    }
                }
                prev = Some(d);
            }
            Class::Vowel => prev = None,
            Class::Transparent => {}
        }
    }
    while code.len() < 4 {
        code.push('0');
    }
    SoundexCode { code, flagged: false }
}

/// Whitespace-separated words encoded individually and rejoined with
/// single spaces; used as the phonetic representation for string
/// distances. All-non-alphabetic input yields "Z000".
pub fn soundex_phrase(s: &str) -> String {
    let words: Vec<String> = s
        .split_whitespace()
        .map(soundex)
        .filter(|c| !c.flagged)
        .map(|c| c.code)
        .collect();
    if words.is_empty() {
        "Z000".to_string()
    } else {
        words.join(" ")
    }
}
