//! Character-class tokenizer, content-word filtering and compound joining.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io;
use std::ops::RangeInclusive;
use std::path::Path;

use serde::{Deserialize, Serialize};

const ZWNJ: char = '\u{200C}';
const ZWJ: char = '\u{200D}';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenTag {
    WordTargetLang,
    WordOtherLang,
    Number,
    Punctuation,
    Emoji,
    Hashtag,
    Url,
    Mention,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub tag: TokenTag,
}

impl Token {
    pub fn new(text: impl Into<String>, tag: TokenTag) -> Self {
        Token { text: text.into(), tag }
    }
}

/// Letters counted as words of the language being mined.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TargetScript {
    /// Arabic-script blocks (Persian, Arabic, Urdu).
    #[default]
    Arabic,
    /// Basic Latin and the Latin-1/Extended letter blocks.
    Latin,
    Custom(Vec<RangeInclusive<char>>),
}

impl TargetScript {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "arabic" | "persian" => Some(TargetScript::Arabic),
            "latin" => Some(TargetScript::Latin),
            _ => None,
        }
    }

    fn ranges(&self) -> &[RangeInclusive<char>] {
        const ARABIC: &[RangeInclusive<char>] = &[
            '\u{0600}'..='\u{06FF}',
            '\u{0750}'..='\u{077F}',
            '\u{08A0}'..='\u{08FF}',
            '\u{FB50}'..='\u{FDFF}',
            '\u{FE70}'..='\u{FEFF}',
        ];
        const LATIN: &[RangeInclusive<char>] = &[
            'A'..='Z',
            'a'..='z',
            '\u{00C0}'..='\u{024F}',
            '\u{1E00}'..='\u{1EFF}',
        ];
        match self {
            TargetScript::Arabic => ARABIC,
            TargetScript::Latin => LATIN,
            TargetScript::Custom(r) => r,
        }
    }

    pub fn contains(&self, c: char) -> bool {
        self.ranges().iter().any(|r| r.contains(&c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Space,
    Letter,
    Digit,
    Punct,
    Emoji,
    Other,
}

fn is_emoji(c: char) -> bool {
    matches!(c as u32,
        0x1F000..=0x1FAFF | 0x2600..=0x27BF | 0x2B00..=0x2BFF | 0x2300..=0x23FF)
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c as u32, 0xFE0E | 0xFE0F | 0x1F3FB..=0x1F3FF | 0x20E3 | 0xE0020..=0xE007F)
}

fn is_digit(c: char) -> bool {
    c.is_ascii_digit() || matches!(c, '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}') || c.is_numeric()
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '\u{060C}' | '\u{061B}' | '\u{061F}' | '\u{066A}'..='\u{066D}' | '\u{06D4}')
        || matches!(c as u32, 0x2010..=0x2027 | 0x2030..=0x205E | 0x3000..=0x303F | 0x00A1..=0x00BF)
}

fn classify(c: char) -> CharClass {
    if c.is_whitespace() {
        CharClass::Space
    } else if is_emoji(c) {
        CharClass::Emoji
    } else if is_digit(c) {
        CharClass::Digit
    } else if c.is_alphabetic() {
        CharClass::Letter
    } else if is_punct(c) {
        CharClass::Punct
    } else {
        CharClass::Other
    }
}

/// Joining marks and ZWNJ continue a word.
fn continues_word(c: char) -> bool {
    c == ZWNJ || matches!(c as u32, 0x0300..=0x036F | 0x064B..=0x065F | 0x0670 | 0x06D6..=0x06ED)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || continues_word(c)
}

/// Deterministic tokenizer tagging every non-whitespace run.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    pub script: TargetScript,
}

impl Tokenizer {
    pub fn new(script: TargetScript) -> Self {
        Tokenizer { script }
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            let tag = match classify(c) {
                CharClass::Space => {
                    i += 1;
                    continue;
                }
                _ if starts_url(&chars[i..]) => {
                    while i < chars.len() && !chars[i].is_whitespace() {
                        i += 1;
                    }
                    TokenTag::Url
                }
                _ if (c == '#' || c == '@') && chars.get(i + 1).is_some_and(|&n| is_word_char(n) && !continues_word(n)) => {
                    i += 1;
                    while i < chars.len() && is_word_char(chars[i]) {
                        i += 1;
                    }
                    if c == '#' {
                        TokenTag::Hashtag
                    } else {
                        TokenTag::Mention
                    }
                }
                CharClass::Emoji => {
                    i += 1;
                    loop {
                        match chars.get(i) {
                            Some(&m) if is_emoji_modifier(m) => i += 1,
                            Some(&ZWJ) if chars.get(i + 1).is_some_and(|&n| is_emoji(n)) => i += 2,
                            _ => break,
                        }
                    }
                    TokenTag::Emoji
                }
                CharClass::Digit => {
                    i += 1;
                    while i < chars.len() {
                        let n = chars[i];
                        let sep = matches!(n, '.' | ',' | '/' | '\u{066B}' | '\u{066C}')
                            && chars.get(i + 1).is_some_and(|&d| is_digit(d));
                        if is_digit(n) {
                            i += 1;
                        } else if sep {
                            i += 2;
                        } else {
                            break;
                        }
                    }
                    TokenTag::Number
                }
                CharClass::Letter => {
                    let target = self.script.contains(c);
                    i += 1;
                    while i < chars.len() {
                        let n = chars[i];
                        if continues_word(n) || (classify(n) == CharClass::Letter && self.script.contains(n) == target) {
                            i += 1;
                        } else {
                            break;
                        }
                    }
                    // a trailing ZWNJ belongs to no word
                    while i > start + 1 && chars[i - 1] == ZWNJ {
                        i -= 1;
                    }
                    if target {
                        TokenTag::WordTargetLang
                    } else {
                        TokenTag::WordOtherLang
                    }
                }
                CharClass::Punct => {
                    i += 1;
                    while i < chars.len() && classify(chars[i]) == CharClass::Punct && !starts_url(&chars[i..]) {
                        if matches!(chars[i], '#' | '@') && chars.get(i + 1).is_some_and(|&n| is_word_char(n)) {
                            break;
                        }
                        i += 1;
                    }
                    TokenTag::Punctuation
                }
                CharClass::Other => {
                    i += 1;
                    TokenTag::Other
                }
            };
            tokens.push(Token::new(chars[start..i].iter().collect::<String>(), tag));
        }
        tokens
    }
}

fn starts_url(chars: &[char]) -> bool {
    const PREFIXES: [&str; 3] = ["http://", "https://", "www."];
    PREFIXES.iter().any(|p| {
        let n = p.chars().count();
        chars.len() > n
            && chars[..n]
                .iter()
                .zip(p.chars())
                .all(|(a, b)| a.to_ascii_lowercase() == b)
            && !chars[n].is_whitespace()
    })
}

/// Tokenizes with the default (Arabic-script) target language.
pub fn tokenize(text: &str) -> Vec<Token> {
    Tokenizer::default().tokenize(text)
}

/// Set of lowercase stop words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            words: words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect(),
        }
    }

    /// One word per line.
    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(StopwordList::new(fs::read_to_string(path)?.lines()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Keeps target-language words, lowercased, minus stop words.
pub fn filter_tokens(tokens: &[Token], stopwords: &StopwordList) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| t.tag == TokenTag::WordTargetLang)
        .map(|t| t.text.to_lowercase())
        .filter(|w| !stopwords.contains(w))
        .collect()
}

/// Character used to glue the parts of a compound word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Joiner {
    #[default]
    Underscore,
    ZeroWidth,
}

impl Joiner {
    pub fn as_char(self) -> char {
        match self {
            Joiner::Underscore => '_',
            Joiner::ZeroWidth => ZWNJ,
        }
    }
}

/// Multi-word entries (2 to 4 words) that should be rendered as one word.
#[derive(Debug, Clone, Default)]
pub struct CompoundLexicon {
    /// first word -> remaining words of every entry starting with it,
    /// longest first.
    by_first: HashMap<String, Vec<Vec<String>>>,
    pub joiner: Joiner,
}

impl CompoundLexicon {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut uniq = BTreeSet::new();
        for e in entries {
            let words: Vec<String> = e.as_ref().split_whitespace().map(str::to_lowercase).collect();
            if (2..=4).contains(&words.len()) {
                uniq.insert(words);
            }
        }
        let mut by_first: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for words in uniq {
            by_first.entry(words[0].clone()).or_default().push(words[1..].to_vec());
        }
        for tails in by_first.values_mut() {
            tails.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        CompoundLexicon {
            by_first,
            joiner: Joiner::default(),
        }
    }

    pub fn with_joiner(mut self, joiner: Joiner) -> Self {
        self.joiner = joiner;
        self
    }

    /// One space-separated entry per line.
    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(CompoundLexicon::new(fs::read_to_string(path)?.lines()))
    }

    pub fn is_empty(&self) -> bool {
        self.by_first.is_empty()
    }

    fn join(&self, parts: &[String]) -> String {
        let mut sep = [0u8; 4];
        parts.join(self.joiner.as_char().encode_utf8(&mut sep))
    }
}

/// Replaces adjacent word runs found in the lexicon by a single joined word,
/// scanning left to right and preferring the longest entry at each position.
pub fn join_compounds(words: &[String], lexicon: &CompoundLexicon) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let matched = lexicon.by_first.get(&words[i]).and_then(|tails| {
            tails
                .iter()
                .find(|tail| words.len() > i + tail.len() && words[i + 1..=i + tail.len()] == tail[..])
        });
        match matched {
            Some(tail) => {
                out.push(lexicon.join(&words[i..=i + tail.len()]));
                i += tail.len() + 1;
            }
            None => {
                out.push(words[i].clone());
                i += 1;
            }
        }
    }
    out
}

/// Title-time compounding: keywords are a ranked set rather than running
/// text, so an entry is joined whenever all its words are present. The
/// joined word takes the rank of its best-ranked part.
pub fn compound_title(keywords: &[String], lexicon: &CompoundLexicon) -> Vec<String> {
    if lexicon.is_empty() {
        return keywords.to_vec();
    }
    let position: HashMap<&str, usize> = keywords.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    let mut used = vec![false; keywords.len()];
    let mut replaced: Vec<Option<String>> = vec![None; keywords.len()];
    for (i, w) in keywords.iter().enumerate() {
        if used[i] {
            continue;
        }
        let Some(tails) = lexicon.by_first.get(w) else { continue };
        for tail in tails {
            let idx: Option<Vec<usize>> = tail
                .iter()
                .map(|t| position.get(t.as_str()).copied().filter(|&j| !used[j] && j != i))
                .collect();
            if let Some(idx) = idx {
                let mut parts = vec![w.clone()];
                parts.extend(tail.iter().cloned());
                used[i] = true;
                for j in idx {
                    used[j] = true;
                }
                replaced[i] = Some(lexicon.join(&parts));
                break;
            }
        }
    }
    keywords
        .iter()
        .enumerate()
        .filter_map(|(i, w)| match (&replaced[i], used[i]) {
            (Some(joined), _) => Some(joined.clone()),
            (None, true) => None,
            (None, false) => Some(w.clone()),
        })
        .collect()
}

/// Tokenize-and-filter for one text.
#[derive(Debug, Clone, Default)]
pub struct Preprocessor {
    pub tokenizer: Tokenizer,
    pub stopwords: StopwordList,
}

impl Preprocessor {
    pub fn new(script: TargetScript, stopwords: StopwordList) -> Self {
        Preprocessor {
            tokenizer: Tokenizer::new(script),
            stopwords,
        }
    }

    pub fn words(&self, text: &str) -> Vec<String> {
        filter_tokens(&self.tokenizer.tokenize(text), &self.stopwords)
    }

    /// Fills `tokens` on every post.
    pub fn apply(&self, posts: &mut [crate::stream::Post]) {
        for p in posts {
            p.tokens = Some(self.words(&p.text));
        }
    }
}
