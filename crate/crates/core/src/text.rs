//! Word spans and rule-based sentence splitting.

/// Byte ranges of word tokens: runs of alphanumeric characters, allowing an
/// apostrophe between two alphanumerics ("it's" is one token).
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        while j < chars.len() {
            let c = chars[j].1;
            if c.is_alphanumeric() {
                j += 1;
            } else if (c == '\'' || c == '\u{2019}')
                && j + 1 < chars.len()
                && chars[j + 1].1.is_alphanumeric()
            {
                j += 2;
            } else {
                break;
            }
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        spans.push((start, end));
        i = j;
    }
    spans
}

/// Lowercased word tokens.
pub fn words(text: &str) -> Vec<String> {
    word_spans(text).into_iter().map(|(s, e)| text[s..e].to_lowercase()).collect()
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd",
    "co", "corp", "mt", "no", "approx", "dept", "est", "fig", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "a.m", "p.m",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201C}' | '\u{2018}')
}

/// Splits on `.`, `!` or `?` followed by whitespace and an uppercase letter,
/// except after a known abbreviation or a single-letter initial.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0;
    while i < chars.len() {
        if !is_terminal(chars[i].1) {
            i += 1;
            continue;
        }
        let punct = i;
        let mut j = i + 1;
        while j < chars.len() && (is_terminal(chars[j].1) || is_closing(chars[j].1)) {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |c| c.0);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let had_space = k > j;
        while k < chars.len() && is_opening(chars[k].1) {
            k += 1;
        }
        let next_upper = chars.get(k).is_some_and(|c| c.1.is_uppercase());
        if had_space && next_upper && !(chars[punct].1 == '.' && is_abbreviation(text, chars[punct].0)) {
            let s = text[start..end].trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            start = end;
        }
        i = j;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn is_abbreviation(text: &str, dot: usize) -> bool {
    let before = &text[..dot];
    let word_start = before
        .rfind(|c: char| c.is_whitespace() || is_opening(c))
        .map_or(0, |p| p + before[p..].chars().next().map_or(1, char::len_utf8));
    let word = &before[word_start..];
    if word.is_empty() {
        return false;
    }
    let mut cs = word.chars();
    if let (Some(c), None) = (cs.next(), cs.next()) {
        if c.is_uppercase() {
            return true;
        }
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_keep_contractions() {
        let t = "And I was going, hey, it's cold outside...";
        let w: Vec<&str> = word_spans(t).into_iter().map(|(s, e)| &t[s..e]).collect();
        assert_eq!(w, vec!["And", "I", "was", "going", "hey", "it's", "cold", "outside"]);
    }

    #[test]
    fn splits_on_terminal_punctuation() {
        let s = split_sentences("Hello there. How are you? I am fine! thanks.");
        assert_eq!(s, vec!["Hello there.", "How are you?", "I am fine! thanks."]);
    }

    #[test]
    fn abbreviations_and_initials_do_not_split() {
        let s = split_sentences("Dr. Smith met J. Doe at 5 p.m. Then they left.");
        assert_eq!(s, vec!["Dr. Smith met J. Doe at 5 p.m. Then they left."]);
        let s = split_sentences("We met Mr. Jones. He waved.");
        assert_eq!(s, vec!["We met Mr. Jones.", "He waved."]);
    }

    #[test]
    fn quotes_and_ellipses() {
        let s = split_sentences("She said \"Stop.\" Then \"Go!\" And that was it...");
        assert_eq!(s, vec!["She said \"Stop.\"", "Then \"Go!\"", "And that was it..."]);
    }

    #[test]
    fn empty_text() {
        assert!(split_sentences("   ").is_empty());
    }
}
