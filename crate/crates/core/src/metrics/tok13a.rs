//! The `13a` tokenizer (mteval-v13a rules as used by sacreBLEU).
//!
//! Rules, applied in order to `" " + line + " "`:
//! 1. drop `<skipped>`, join `-\n` line breaks, turn newlines into spaces and
//!    unescape `&quot; &amp; &lt; &gt;`;
//! 2. pad every character in `{|}~ [\]^_` and backtick, space to `&`, `(` to `+`, `:` to `@`, `/`;
//! 3. split `.`/`,` off a preceding non-digit;
//! 4. split `.`/`,` off a following non-digit;
//! 5. split `-` off a preceding digit;
//! 6. collapse whitespace.
//!
//! Each of rules 2–5 is a left-to-right, non-overlapping regex substitution,
//! reproduced here with explicit scanners.

use alloc::string::String;
use alloc::vec::Vec;

pub fn tokenize_13a(line: &str) -> String {
    let mut s = line.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if s.contains('&') {
        s = s.replace("&quot;", "\"").replace("&amp;", "&").replace("&lt;", "<").replace("&gt;", ">");
    }
    let chars: Vec<char> = alloc::format!(" {s} ").chars().collect();

    let chars = pad_punctuation(&chars);
    let chars = substitute_pair(&chars, |a| !a.is_ascii_digit(), is_period_comma, |a, b, out| {
        out.extend([a, ' ', b, ' ']);
    });
    let chars = substitute_pair(&chars, is_period_comma, |b| !b.is_ascii_digit(), |a, b, out| {
        out.extend([' ', a, ' ', b]);
    });
    let chars = substitute_pair(&chars, |a| a.is_ascii_digit(), |b| b == '-', |a, b, out| {
        out.extend([a, ' ', b, ' ']);
    });

    let joined: String = chars.into_iter().collect();
    let mut out = String::with_capacity(joined.len());
    for tok in joined.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

fn is_period_comma(c: char) -> bool {
    c == '.' || c == ','
}

fn is_13a_punct(c: char) -> bool {
    matches!(c, '{'..='~' | '['..='`' | ' '..='&' | '('..='+' | ':'..='@' | '/')
}

fn pad_punctuation(chars: &[char]) -> Vec<char> {
    let mut out = Vec::with_capacity(chars.len() * 2);
    for &c in chars {
        if is_13a_punct(c) {
            out.extend([' ', c, ' ']);
        } else {
            out.push(c);
        }
    }
    out
}

fn substitute_pair(
    chars: &[char],
    first: impl Fn(char) -> bool,
    second: impl Fn(char) -> bool,
    emit: impl Fn(char, char, &mut Vec<char>),
) -> Vec<char> {
    let mut out = Vec::with_capacity(chars.len() + chars.len() / 2);
    let mut i = 0;
    while i < chars.len() {
        if i + 1 < chars.len() && first(chars[i]) && second(chars[i + 1]) {
            emit(chars[i], chars[i + 1], &mut out);
            i += 2;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::tokenize_13a;

    // Expected outputs produced by sacrebleu 2.0.0 `Tokenizer13a`.
    const GOLDEN: &[(&str, &str)] = include!("../../tests/data/tok13a_golden.in");

    #[test]
    fn matches_reference_tokenizer() {
        for (input, expected) in GOLDEN {
            assert_eq!(tokenize_13a(input), *expected, "input {input:?}");
        }
    }
}
