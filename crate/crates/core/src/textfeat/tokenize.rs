/// ASCII emoticons kept as tokens, longest first so `:-)` wins over `:-`.
pub const EMOTICONS: &[&str] = &[
    ":'(", ":-)", ":-(", ":-D", ":-P", ";-)", ":)", ":(", ":D", ":P", ":p", ";)", "<3", ":o", ":O", "=)", "=(", ":|",
    ":*",
];

pub fn is_emoticon(token: &str) -> bool {
    EMOTICONS.contains(&token)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\'' || c == '\u{2019}'
}

fn flush(buf: &mut String, tokens: &mut Vec<String>) {
    let t = buf.trim_matches('\'');
    if !t.is_empty() {
        tokens.push(t.to_string());
    }
    buf.clear();
}

fn emoticon_at(chars: &[char], i: usize) -> Option<&'static str> {
    EMOTICONS.iter().copied().find(|e| {
        let len = e.chars().count();
        i + len <= chars.len()
            && e.chars().zip(&chars[i..]).all(|(a, &b)| a == b)
            && chars.get(i + len).is_none_or(|c| !c.is_alphanumeric())
    })
}

/// Lowercased runs of letters, digits and apostrophes (apostrophes trimmed
/// from the ends), plus emoticons from [`EMOTICONS`], in text order.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut buf = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if is_word_char(c) {
            if c == '\u{2019}' {
                buf.push('\'');
            } else {
                buf.extend(c.to_lowercase());
            }
            i += 1;
            continue;
        }
        flush(&mut buf, &mut tokens);
        if let Some(e) = emoticon_at(&chars, i) {
            tokens.push(e.to_string());
            i += e.chars().count();
        } else {
            i += 1;
        }
    }
    flush(&mut buf, &mut tokens);
    tokens
}

/// Splits on runs of `.`, `!`, `?`; fragments are trimmed and empty ones dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    text.split(['.', '!', '?']).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_lowercased() {
        assert_eq!(tokenize("The cat sat."), ["the", "cat", "sat"]);
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn emoticons_survive() {
        assert_eq!(tokenize("GOOD :)"), ["good", ":)"]);
        assert_eq!(tokenize("love it <3 :-D"), ["love", "it", "<3", ":-D"]);
        // Not an emoticon when followed by a letter.
        assert_eq!(tokenize("a :Dog"), ["a", "dog"]);
    }

    #[test]
    fn apostrophes_inside_words() {
        assert_eq!(tokenize("Don't 'quote' it’s"), ["don't", "quote", "it's"]);
        assert_eq!(tokenize("''"), Vec::<String>::new());
    }

    #[test]
    fn sentences() {
        assert_eq!(split_sentences("Hi. Bye."), ["Hi", "Bye"]);
        assert_eq!(split_sentences("no terminator"), ["no terminator"]);
        assert!(split_sentences("!!!").is_empty());
        assert_eq!(split_sentences("Wait?! Really... yes"), ["Wait", "Really", "yes"]);
    }
}
