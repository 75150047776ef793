//! Whitespace tokenizer that tags each token as a word, link, mention or
//! hashtag.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Url,
    Mention,
    Hashtag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub raw: String,
    pub kind: TokenKind,
    /// Lowercased with leading/trailing non-alphanumerics stripped. May be
    /// empty for tokens made only of punctuation.
    pub normalized: String,
}

impl Token {
    pub fn new(raw: &str) -> Self {
        Token {
            raw: raw.to_string(),
            kind: classify(raw),
            normalized: normalize(raw),
        }
    }

    /// A word token whose alphabetic characters are all uppercase. Tokens
    /// without any alphabetic character never qualify.
    pub fn is_uppercase_word(&self) -> bool {
        is_uppercase_word(self)
    }
}

/// Precedence: URL, then mention, then hashtag, otherwise word.
pub fn classify(raw: &str) -> TokenKind {
    if raw.starts_with("http://") || raw.starts_with("https://") || raw.starts_with("www.") {
        return TokenKind::Url;
    }
    let mut chars = raw.chars();
    match (chars.next(), chars.next()) {
        (Some('@'), Some(c)) if c.is_ascii_alphanumeric() || c == '_' => TokenKind::Mention,
        (Some('#'), Some(c)) if c.is_alphanumeric() => TokenKind::Hashtag,
        _ => TokenKind::Word,
    }
}

pub fn normalize(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

pub fn is_uppercase_word(token: &Token) -> bool {
    if token.kind != TokenKind::Word {
        return false;
    }
    let mut any_alpha = false;
    for c in token.raw.chars().filter(|c| c.is_alphabetic()) {
        any_alpha = true;
        if !c.is_uppercase() {
            return false;
        }
    }
    any_alpha
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub words: usize,
    pub urls: usize,
    pub mentions: usize,
    pub hashtags: usize,
}

impl KindCounts {
    pub fn total(&self) -> usize {
        self.words + self.urls + self.mentions + self.hashtags
    }

    fn bump(&mut self, kind: TokenKind) {
        match kind {
            TokenKind::Word => self.words += 1,
            TokenKind::Url => self.urls += 1,
            TokenKind::Mention => self.mentions += 1,
            TokenKind::Hashtag => self.hashtags += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<Token>,
    counts: KindCounts,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn counts(&self) -> KindCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn kinds(&self) -> Vec<TokenKind> {
        self.tokens.iter().map(|t| t.kind).collect()
    }

    pub fn of_kind(&self, kind: TokenKind) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.kind == kind)
    }

    pub fn uppercase_words(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_uppercase_word()).count()
    }
}

impl FromIterator<Token> for TokenSequence {
    fn from_iter<I: IntoIterator<Item = Token>>(iter: I) -> Self {
        let mut seq = TokenSequence::default();
        for t in iter {
            seq.counts.bump(t.kind);
            seq.tokens.push(t);
        }
        seq
    }
}

/// Splits on Unicode whitespace and classifies every piece. Total and
/// deterministic; empty or blank text yields an empty sequence.
pub fn tokenize(text: &str) -> TokenSequence {
    text.split_whitespace().map(Token::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use TokenKind::*;

    pub(crate) const PSP_TWEET: &str =
        "PSP DOWNLOAD Music and Movies HERE! Have the BEST Experience EVER!  http://bit.ly/5QD3Hv";

    #[test]
    fn mixed_tweet_kinds() {
        let seq = tokenize("Follow @alice and win! http://bit.ly/x #prize");
        assert_eq!(seq.kinds(), vec![Word, Mention, Word, Word, Url, Hashtag]);
        assert_eq!(seq.counts().total(), 6);
    }

    #[test]
    fn empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t\n ").is_empty());
    }

    #[test]
    fn psp_tweet_counts() {
        let seq = tokenize(PSP_TWEET);
        assert_eq!(seq.len(), 12);
        assert_eq!(seq.counts().words, 11);
        assert_eq!(seq.counts().urls, 1);
        assert_eq!(seq.uppercase_words(), 5);
    }

    #[test]
    fn uppercase_rule() {
        assert!(Token::new("BEST").is_uppercase_word());
        assert!(!Token::new("Have").is_uppercase_word());
        assert!(Token::new("EVER!").is_uppercase_word());
        assert!(!Token::new("2017!").is_uppercase_word());
        assert!(!Token::new("...").is_uppercase_word());
        assert!(Token::new("ÉTÉ").is_uppercase_word());
        assert!(!Token::new("Été").is_uppercase_word());
        // links and mentions are never uppercase words
        assert!(!Token::new("@BOB").is_uppercase_word());
        assert!(!Token::new("#WIN").is_uppercase_word());
    }

    #[test]
    fn classification_edges() {
        assert_eq!(classify("@"), Word);
        assert_eq!(classify("@!"), Word);
        assert_eq!(classify("@_x"), Mention);
        assert_eq!(classify("#"), Word);
        assert_eq!(classify("#_"), Word);
        assert_eq!(classify("#été"), Hashtag);
        assert_eq!(classify("www.example.com"), Url);
        assert_eq!(classify("https://@x"), Url);
        assert_eq!(classify("@www.x"), Mention);
    }

    #[test]
    fn normalization() {
        assert_eq!(Token::new("@Bob:").normalized, "bob");
        assert_eq!(Token::new("EVER!").normalized, "ever");
        assert_eq!(Token::new("!!!").normalized, "");
        assert_eq!(Token::new("(don't)").normalized, "don't");
    }

    proptest! {
        #[test]
        fn deterministic_and_counts_consistent(text in "\\PC{0,80}") {
            let a = tokenize(&text);
            let b = tokenize(&text);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.counts().total(), a.len());
            for t in a.tokens() {
                prop_assert!(!t.raw.is_empty());
                prop_assert!(!t.raw.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn rejoining_preserves_kinds(text in "([@#]?[a-zA-Z0-9_!.:/]{0,6}[ \t]{1,3}){0,12}") {
            let seq = tokenize(&text);
            let joined = seq.tokens().iter().map(|t| t.raw.as_str()).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(tokenize(&joined).kinds(), seq.kinds());
        }
    }
}
