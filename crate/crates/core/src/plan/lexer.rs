use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Float(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LDouble,
    RDouble,
    Comma,
    Dot,
    Colon,
    Assign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Int(_) | Tok::Float(_) => "number".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LDouble => "{{",
            Tok::RDouble => "}}",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Colon => ":",
            Tok::Assign => "=",
            Tok::Eq => "==",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }
}

pub fn tokenize(text: &str, origin: Pos) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: origin.line,
        col: origin.col,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let pos = cur.pos();
        let Some(c) = cur.bump() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let err = |message: String| ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message,
        };
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            ':' => Tok::Colon,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '≠' => Tok::Ne,
            '≤' => Tok::Le,
            '≥' => Tok::Ge,
            '{' | '}' => {
                if cur.peek() != Some(c) {
                    return Err(err(format!("unexpected `{c}`")));
                }
                cur.bump();
                if c == '{' {
                    Tok::LDouble
                } else {
                    Tok::RDouble
                }
            }
            '=' | '!' | '<' | '>' => {
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                match (c, eq) {
                    ('=', true) => Tok::Eq,
                    ('=', false) => Tok::Assign,
                    ('!', true) => Tok::Ne,
                    ('!', false) => return Err(err("unexpected `!`".into())),
                    ('<', true) => Tok::Le,
                    ('<', false) => Tok::Lt,
                    ('>', true) => Tok::Ge,
                    _ => Tok::Gt,
                }
            }
            '"' | '\'' => Tok::Str(lex_string(&mut cur, c).map_err(err)?),
            c if c.is_ascii_digit() => lex_number(&mut cur, c).map_err(err)?,
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::from(c);
                while let Some(n) = cur.peek().filter(|n| n.is_alphanumeric() || *n == '_') {
                    s.push(n);
                    cur.bump();
                }
                Tok::Ident(s)
            }
            other => {
                return Err(err(format!(
                    "unexpected character `{}`",
                    other.escape_debug()
                )))
            }
        };
        out.push(Token { tok, pos });
    }
}

fn lex_string(cur: &mut Cursor<'_>, quote: char) -> Result<String, String> {
    let mut s = String::new();
    loop {
        let c = cur.bump().ok_or("unterminated string literal")?;
        match c {
            c if c == quote => return Ok(s),
            '\\' => {
                let e = cur.bump().ok_or("unterminated string literal")?;
                match e {
                    'n' => s.push('\n'),
                    't' => s.push('\t'),
                    'r' => s.push('\r'),
                    '0' => s.push('\0'),
                    '\\' | '"' | '\'' => s.push(e),
                    'u' => s.push(lex_unicode_escape(cur)?),
                    other => return Err(format!("unknown escape `\\{other}`")),
                }
            }
            c => s.push(c),
        }
    }
}

/// `\u{1F600}` or `é`.
fn lex_unicode_escape(cur: &mut Cursor<'_>) -> Result<char, String> {
    let mut hex = String::new();
    if cur.peek() == Some('{') {
        cur.bump();
        loop {
            match cur.bump() {
                Some('}') => break,
                Some(h) if h.is_ascii_hexdigit() && hex.len() < 6 => hex.push(h),
                _ => return Err("bad unicode escape".into()),
            }
        }
    } else {
        for _ in 0..4 {
            match cur.bump() {
                Some(h) if h.is_ascii_hexdigit() => hex.push(h),
                _ => return Err("bad unicode escape".into()),
            }
        }
    }
    u32::from_str_radix(&hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| "bad unicode escape".into())
}

fn lex_number(cur: &mut Cursor<'_>, first: char) -> Result<Tok, String> {
    let mut s = String::from(first);
    let mut is_float = false;
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() || c == '_' {
            s.push(c);
            cur.bump();
            continue;
        }
        break;
    }
    // a dot only belongs to the number when a digit follows (`5.year` is an accessor)
    if cur.peek() == Some('.') {
        let mut look = cur.chars.clone();
        look.next();
        if look.next().is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            s.push('.');
            cur.bump();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let mut look = cur.chars.clone();
        look.next();
        let next = look.next();
        let digit_follows = match next {
            Some('+' | '-') => look.next().is_some_and(|c| c.is_ascii_digit()),
            Some(c) => c.is_ascii_digit(),
            None => false,
        };
        if digit_follows {
            is_float = true;
            s.push('e');
            cur.bump();
            if let Some(sign @ ('+' | '-')) = cur.peek() {
                s.push(sign);
                cur.bump();
            }
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                s.push(c);
                cur.bump();
            }
        }
    }
    let s: String = s.chars().filter(|&c| c != '_').collect();
    if is_float {
        let v: f64 = s.parse().map_err(|_| format!("bad number `{s}`"))?;
        if !v.is_finite() {
            return Err(format!("number `{s}` out of range"));
        }
        Ok(Tok::Float(v))
    } else {
        s.parse()
            .map(Tok::Int)
            .map_err(|_| format!("integer `{s}` out of range"))
    }
}
