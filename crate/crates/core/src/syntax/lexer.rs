use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Ident(String),
    /// Capitalized identifier; only `True` and `False` are meaningful.
    Con(String),
    Hole(Option<u32>),
    Op(String),
    Backtick(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Backslash,
    Arrow,
    Equals,
    Bar,
    DoubleColon,
    DotDot,
    Underscore,
    Case,
    Of,
    Where,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(n) => n.to_string(),
            Tok::Ident(s) | Tok::Con(s) | Tok::Op(s) => s.clone(),
            Tok::Backtick(s) => format!("`{s}`"),
            Tok::Hole(None) => "?".into(),
            Tok::Hole(Some(n)) => format!("?{n}"),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::LBrace => "{".into(),
            Tok::RBrace => "}".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::Backslash => "\\".into(),
            Tok::Arrow => "->".into(),
            Tok::Equals => "=".into(),
            Tok::Bar => "|".into(),
            Tok::DoubleColon => "::".into(),
            Tok::DotDot => "..".into(),
            Tok::Underscore => "_".into(),
            Tok::Case => "case".into(),
            Tok::Of => "of".into(),
            Tok::Where => "where".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// First token on its line; drives the layout rule.
    pub line_start: bool,
}

const OP_CHARS: &str = ":+-*=/<>&|.$!";

pub fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let mut line_start = true;

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            line_start = true;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        // line comment
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let start = i;
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| SyntaxError::new(line, col, "integer literal too large", vec![]))?;
            Tok::Int(n)
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.as_str() {
                "_" => Tok::Underscore,
                "case" => Tok::Case,
                "of" => Tok::Of,
                "where" => Tok::Where,
                _ if c.is_uppercase() => Tok::Con(text),
                _ => Tok::Ident(text),
            }
        } else if c == '?' {
            i += 1;
            let ds = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if ds == i {
                Tok::Hole(None)
            } else {
                let text: String = chars[ds..i].iter().collect();
                let n = text.parse().map_err(|_| SyntaxError::new(line, col, "hole number too large", vec![]))?;
                Tok::Hole(Some(n))
            }
        } else if c == '`' {
            i += 1;
            let ns = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            if ns == i || chars.get(i) != Some(&'`') {
                return Err(SyntaxError::new(line, col, "malformed backtick operator", vec!["`name`".into()]));
            }
            let name: String = chars[ns..i].iter().collect();
            i += 1;
            Tok::Backtick(name)
        } else if OP_CHARS.contains(c) || c == '\\' {
            if c == '\\' {
                i += 1;
                Tok::Backslash
            } else {
                while i < chars.len() && OP_CHARS.contains(chars[i]) {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                match text.as_str() {
                    "->" => Tok::Arrow,
                    "=" => Tok::Equals,
                    "|" => Tok::Bar,
                    "::" => Tok::DoubleColon,
                    ".." => Tok::DotDot,
                    _ => Tok::Op(text),
                }
            }
        } else {
            i += 1;
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                _ => {
                    return Err(SyntaxError::new(line, col, format!("unexpected character {c:?}"), vec![]));
                }
            }
        };
        col += i - start;
        toks.push(Token { tok, line: start_line, col: start_col, line_start });
        line_start = false;
    }
    toks.push(Token { tok: Tok::Eof, line, col, line_start: true });
    Ok(toks)
}
