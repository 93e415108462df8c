//! Tokenization shared by the lexical scorer and classifiers.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "am", "an", "and", "any", "are", "as", "at",
    "be", "been", "before", "being", "both", "but", "by", "can", "could", "did", "do", "does",
    "doing", "done", "during", "each", "for", "from", "get", "go", "goes", "going", "gone", "got",
    "had", "has", "have", "having", "he", "her", "here", "him", "his", "how", "i", "if", "in",
    "into", "is", "it", "its", "just", "many", "me", "more", "most", "much", "my", "myself", "no",
    "not", "of", "off", "often", "on", "once", "only", "or", "other", "our", "ours", "out", "over",
    "per", "she", "so", "some", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "to", "too", "under", "until", "up", "us", "very", "was", "we",
    "went", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

fn undouble(word: &mut String) {
    let bytes = word.as_bytes();
    let n = bytes.len();
    if n >= 3 && bytes[n - 1] == bytes[n - 2] && !matches!(bytes[n - 1], b'l' | b's' | b'z') {
        let last = bytes[n - 1];
        if !matches!(last, b'a' | b'e' | b'i' | b'o' | b'u') && last.is_ascii_alphabetic() {
            word.pop();
        }
    }
}

/// Light suffix stripping so that "running", "runs" and "run" meet.
pub fn stem(token: &str) -> String {
    let mut w = token.to_string();
    if !w.is_ascii() || w.chars().all(|c| c.is_ascii_digit()) {
        return w;
    }
    if (w.len() > 4 && w.ends_with("ies")) || w.ends_with("sses") {
        w.truncate(w.len() - 2);
    } else if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        w.pop();
    }
    if w.len() >= 6 && w.ends_with("ing") {
        w.truncate(w.len() - 3);
        undouble(&mut w);
    } else if w.len() >= 5 && w.ends_with("ed") {
        w.truncate(w.len() - 2);
        undouble(&mut w);
    }
    if w.len() >= 5 && w.ends_with('e') {
        w.pop();
    }
    let b = w.as_bytes();
    if b.len() > 2
        && b[b.len() - 1] == b'y'
        && !matches!(b[b.len() - 2], b'a' | b'e' | b'i' | b'o' | b'u')
    {
        w.pop();
        w.push('i');
    }
    w
}

/// Lowercased, stemmed, stopword-free tokens in text order. Splits on
/// everything that is not alphanumeric, underscores included.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !is_stopword(t))
        .map(|t| stem(&t))
        .collect()
}

pub fn token_set(text: &str) -> BTreeSet<String> {
    tokenize(text).into_iter().collect()
}
