//! Single-line tokenizer. Every SLANG statement lives on one line, so the
//! lexer never sees a newline.

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Int(i64),
    Float(f64),
    Str(String),
    Ident(String),
    Keyword(Keyword),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Fn,
    Let,
    If,
    Else,
    While,
    Return,
    Print,
    End,
    True,
    False,
    And,
    Or,
    Not,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Keyword> {
        Some(match s {
            "fn" => Keyword::Fn,
            "let" => Keyword::Let,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "return" => Keyword::Return,
            "print" => Keyword::Print,
            "end" => Keyword::End,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "not" => Keyword::Not,
            _ => return None,
        })
    }
}

/// Tokenizes one line. A `#` outside a string literal starts a trailing
/// comment.
pub fn tokenize(line: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        if c.is_ascii_digit() {
            let (tok, next) = lex_number(&chars, i)?;
            tokens.push(tok);
            i = next;
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            tokens.push(match Keyword::from_ident(&word) {
                Some(kw) => Token::Keyword(kw),
                None => Token::Ident(word),
            });
            continue;
        }
        if c == '"' {
            let (s, next) = lex_string(&chars, i)?;
            tokens.push(Token::Str(s));
            i = next;
            continue;
        }
        let peek = chars.get(i + 1).copied();
        let (tok, width) = match (c, peek) {
            ('=', Some('=')) => (Token::Eq, 2),
            ('!', Some('=')) => (Token::Ne, 2),
            ('<', Some('=')) => (Token::Le, 2),
            ('>', Some('=')) => (Token::Ge, 2),
            ('=', _) => (Token::Assign, 1),
            ('<', _) => (Token::Lt, 1),
            ('>', _) => (Token::Gt, 1),
            ('(', _) => (Token::LParen, 1),
            (')', _) => (Token::RParen, 1),
            ('[', _) => (Token::LBracket, 1),
            (']', _) => (Token::RBracket, 1),
            (',', _) => (Token::Comma, 1),
            ('+', _) => (Token::Plus, 1),
            ('-', _) => (Token::Minus, 1),
            ('*', _) => (Token::Star, 1),
            ('/', _) => (Token::Slash, 1),
            ('%', _) => (Token::Percent, 1),
            _ => return Err(format!("unexpected character `{c}`")),
        };
        tokens.push(tok);
        i += width;
    }
    Ok(tokens)
}

fn lex_number(chars: &[char], start: usize) -> Result<(Token, usize), String> {
    let mut i = start;
    let digits = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
    };
    digits(&mut i);
    let mut is_float = false;
    if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
        is_float = true;
        i += 1;
        digits(&mut i);
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            is_float = true;
            i = j;
            digits(&mut i);
        }
    }
    if i < chars.len() && (chars[i].is_alphabetic() || chars[i] == '_') {
        return Err("malformed number literal".to_string());
    }
    let text: String = chars[start..i].iter().collect();
    let tok = if is_float {
        Token::Float(
            text.parse::<f64>()
                .map_err(|e| format!("bad float literal `{text}`: {e}"))?,
        )
    } else {
        Token::Int(
            text.parse::<i64>()
                .map_err(|_| format!("integer literal `{text}` out of range"))?,
        )
    };
    Ok((tok, i))
}

fn lex_string(chars: &[char], start: usize) -> Result<(String, usize), String> {
    let mut out = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '"' => return Ok((out, i + 1)),
            '\\' => {
                let esc = chars
                    .get(i + 1)
                    .ok_or_else(|| "unterminated escape".to_string())?;
                out.push(match esc {
                    'n' => '\n',
                    't' => '\t',
                    '"' => '"',
                    '\\' => '\\',
                    other => return Err(format!("unknown escape `\\{other}`")),
                });
                i += 2;
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    Err("unterminated string literal".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operators_and_keywords() {
        let toks = tokenize("if a <= b and not c != 3 # trailing").unwrap();
        assert_eq!(
            toks,
            vec![
                Token::Keyword(Keyword::If),
                Token::Ident("a".into()),
                Token::Le,
                Token::Ident("b".into()),
                Token::Keyword(Keyword::And),
                Token::Keyword(Keyword::Not),
                Token::Ident("c".into()),
                Token::Ne,
                Token::Int(3),
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(tokenize("1.5").unwrap(), vec![Token::Float(1.5)]);
        assert_eq!(tokenize("2e3").unwrap(), vec![Token::Float(2000.0)]);
        assert_eq!(tokenize("42").unwrap(), vec![Token::Int(42)]);
        assert!(tokenize("99999999999999999999").is_err());
        assert!(tokenize("12ab").is_err());
    }

    #[test]
    fn strings_keep_hash_and_escapes() {
        assert_eq!(
            tokenize(r#""a # b\n""#).unwrap(),
            vec![Token::Str("a # b\n".into())]
        );
        assert!(tokenize("\"open").is_err());
    }
}
