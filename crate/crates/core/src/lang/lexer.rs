use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifier or constant: letters, digits, `_`. Uppercase first
    /// character marks a variable.
    Ident(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    DotDot,
    Colon,
    Assign,
    Eq,
    Neq,
    Minus,
    Amp,
    Bar,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "`{s}`"),
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Dot => "`.`",
            Tok::DotDot => "`..`",
            Tok::Colon => "`:`",
            Tok::Assign => "`:=`",
            Tok::Eq => "`=`",
            Tok::Neq => "`!=`",
            Tok::Minus => "`-`",
            Tok::Amp => "`&`",
            Tok::Bar => "`|`",
            Tok::Arrow => "`->`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub pos: Pos,
    pub found: char,
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        let mut adv = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => None,
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '.' if next == Some('.') => {
                adv = 2;
                Some(Tok::DotDot)
            }
            '.' => Some(Tok::Dot),
            ':' if next == Some('=') => {
                adv = 2;
                Some(Tok::Assign)
            }
            ':' => Some(Tok::Colon),
            '=' => Some(Tok::Eq),
            '!' if next == Some('=') => {
                adv = 2;
                Some(Tok::Neq)
            }
            '-' if next == Some('>') => {
                adv = 2;
                Some(Tok::Arrow)
            }
            '-' => Some(Tok::Minus),
            '&' => Some(Tok::Amp),
            '|' => Some(Tok::Bar),
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                out.push((Tok::Ident(word), pos));
                continue;
            }
            other => return Err(LexError { pos, found: other }),
        };
        if let Some(t) = tok {
            out.push((t, pos));
        }
        i += adv;
        col += adv;
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

pub fn is_variable(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_comments() {
        let toks = tokenize("caused p % note\n  if -q.").unwrap();
        let kinds: Vec<&Tok> = toks.iter().map(|(t, _)| t).collect();
        assert_eq!(
            kinds,
            vec![
                &Tok::Ident("caused".into()),
                &Tok::Ident("p".into()),
                &Tok::Ident("if".into()),
                &Tok::Minus,
                &Tok::Ident("q".into()),
                &Tok::Dot,
                &Tok::Eof
            ]
        );
        assert_eq!(toks[2].1, Pos { line: 2, col: 3 });
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("caused p if q $").unwrap_err();
        assert_eq!(err.found, '$');
        assert_eq!(err.pos, Pos { line: 1, col: 15 });
    }
}
