//! Case-insensitive, whitespace-tolerant phrase matching shared by the
//! keyword layer, item extraction and the stub provider.

/// Lowercases and collapses every whitespace run to a single space.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Phrase containment on normalized forms. Empty phrases never match.
pub fn contains_phrase(normalized_text: &str, phrase: &str) -> bool {
    let phrase = normalize(phrase);
    !phrase.is_empty() && normalized_text.contains(&phrase)
}

/// Matches a normalized `needle` against the start of `hay`, ignoring case
/// and treating any whitespace run in `hay` as one space.
///
/// Returns the number of bytes of `hay` consumed.
pub fn match_prefix(hay: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut hay_iter = hay.char_indices().peekable();
    let mut needle_chars = needle.chars().peekable();
    // Lowercase expansion of the current hay char not yet consumed.
    let mut pending: Vec<char> = Vec::new();
    let mut consumed = 0usize;

    while let Some(&nc) = needle_chars.peek() {
        if nc == ' ' {
            if !pending.is_empty() {
                return None;
            }
            let mut any = false;
            while let Some(&(i, hc)) = hay_iter.peek() {
                if hc.is_whitespace() {
                    any = true;
                    consumed = i + hc.len_utf8();
                    hay_iter.next();
                } else {
                    break;
                }
            }
            if !any {
                return None;
            }
            needle_chars.next();
            continue;
        }
        if pending.is_empty() {
            let (i, hc) = hay_iter.next()?;
            consumed = i + hc.len_utf8();
            pending = hc.to_lowercase().collect();
            pending.reverse();
        }
        let lc = pending.pop()?;
        if lc != nc {
            return None;
        }
        needle_chars.next();
    }
    // A needle ending mid-way through a multi-char lowercase expansion is
    // not a clean match.
    if pending.is_empty() {
        Some(consumed)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_lowercases() {
        assert_eq!(normalize("  Hello\t\nWORLD  "), "hello world");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn contains_phrase_is_case_insensitive() {
        let t = normalize("STRIKE!");
        assert!(contains_phrase(&t, "strike"));
        assert!(!contains_phrase(&t, "   "));
    }

    #[test]
    fn prefix_match_tolerates_whitespace_runs() {
        let hay = "Evidence  of\nstrikes here";
        assert_eq!(match_prefix(hay, "evidence of strikes"), Some(20));
        assert_eq!(match_prefix(hay, "evidence of strikes here and more"), None);
        assert_eq!(match_prefix("abc", ""), None);
    }

    #[test]
    fn prefix_match_handles_multibyte() {
        assert_eq!(match_prefix("ÉCOLE x", "école"), Some("ÉCOLE".len()));
    }
}
