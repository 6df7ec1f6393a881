//! Tokenization and sentence splitting over character offsets.

use serde::{Deserialize, Serialize};

/// Half-open interval of character (not byte) offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn hull(&self, other: &Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub span: Span,
    /// Position within the sentence.
    pub index: usize,
}

impl Token {
    /// Whether the token carries at least one letter or digit.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }
}

fn attachable(c: char) -> bool {
    matches!(c, '(' | ')' | '-' | '_' | '.')
}

/// Splits `text` into tokens with character offsets.
///
/// Whitespace separates chunks; inside a chunk, runs of letters/digits and
/// runs of punctuation become separate tokens, except that `-`, `_`, `.` and
/// `(` between two alphanumerics, and a `)` closing such a `(`, stay glued to
/// the alphanumeric run (`sigma(F)`, `DNA-binding`, `PMID-10629188-S5`).
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    tokenize_chars(&chars, 0, chars.len())
}

#[derive(PartialEq)]
enum Run {
    None,
    Word,
    Punct,
}

pub(crate) fn tokenize_chars(chars: &[char], from: usize, to: usize) -> Vec<Token> {
    let mut spans: Vec<Span> = Vec::new();
    let mut run = Run::None;
    let mut start = from;
    let mut depth = 0usize;

    let close = |spans: &mut Vec<Span>, run: &Run, start: usize, end: usize| {
        if *run != Run::None && end > start {
            spans.push(Span::new(start, end));
        }
    };

    let mut i = from;
    while i < to {
        let c = chars[i];
        if c.is_whitespace() {
            close(&mut spans, &run, start, i);
            run = Run::None;
            depth = 0;
        } else if c.is_alphanumeric() {
            if run != Run::Word {
                close(&mut spans, &run, start, i);
                run = Run::Word;
                start = i;
                depth = 0;
            }
        } else {
            let next_alnum = i + 1 < to && chars[i + 1].is_alphanumeric();
            let glue = run == Run::Word
                && attachable(c)
                && match c {
                    '(' => next_alnum,
                    ')' => depth > 0,
                    _ => next_alnum,
                };
            if glue {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    _ => {}
                }
            } else if run != Run::Punct {
                close(&mut spans, &run, start, i);
                run = Run::Punct;
                start = i;
                depth = 0;
            }
        }
        i += 1;
    }
    close(&mut spans, &run, start, to);

    spans
        .into_iter()
        .enumerate()
        .map(|(index, span)| Token {
            text: chars[span.start..span.end].iter().collect(),
            span,
            index,
        })
        .collect()
}

/// Sentence intervals of `text`. A boundary falls after `.`, `!` or `?` that
/// is followed by whitespace and then an uppercase letter or digit, unless a
/// `guard` span (an entity) covers the boundary. Leading and trailing
/// whitespace is trimmed from every interval; blank stretches yield nothing.
pub fn split_sentences(text: &str, guards: &[Span]) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    split_sentence_chars(&chars, guards)
}

pub(crate) fn split_sentence_chars(chars: &[char], guards: &[Span]) -> Vec<Span> {
    let guarded = |pos: usize| guards.iter().any(|g| g.start < pos && pos < g.end);
    let mut cuts = vec![0];
    let mut i = 0;
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_whitespace() {
                j += 1;
            }
            let boundary = i + 1;
            if j > boundary
                && j < chars.len()
                && (chars[j].is_uppercase() || chars[j].is_ascii_digit())
                && !guarded(boundary)
            {
                cuts.push(boundary);
                i = j;
                continue;
            }
        }
        i += 1;
    }
    cuts.push(chars.len());

    cuts.windows(2)
        .filter_map(|w| {
            let (mut s, mut e) = (w[0], w[1]);
            while s < e && chars[s].is_whitespace() {
                s += 1;
            }
            while e > s && chars[e - 1].is_whitespace() {
                e -= 1;
            }
            (e > s).then(|| Span::new(s, e))
        })
        .collect()
}
