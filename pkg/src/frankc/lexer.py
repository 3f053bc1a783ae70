"""Tokenizer for Frank source text."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LexError, Span

KEYWORDS = {"data", "interface"}
SYMBOLS = ["->", "{", "}", "[", "]", "(", ")", "<", ">", "|", "=", "!", ";", ":", ",", "_", "+"]
ESCAPES = {"b": "\b", "n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'", '"': '"'}


@dataclass(frozen=True)
class Token:
    kind: str  # lower, upper, int, char, string, symbol, keyword, eof
    text: str
    span: Span
    value: object = None

    def is_sym(self, s: str) -> bool:
        return self.kind == "symbol" and self.text == s

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.span}"


def _escape(src: str, i: int, line: int, col: int):
    """Decode one possibly-escaped character starting at src[i]."""
    if i >= len(src) or src[i] == "\n":
        raise LexError("unterminated literal", Span(line, col))
    if src[i] != "\\":
        return src[i], i + 1
    if i + 1 >= len(src) or src[i + 1] not in ESCAPES:
        raise LexError("unknown escape sequence", Span(line, col))
    return ESCAPES[src[i + 1]], i + 2


def lex(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, line_start = 0, 1, 0
    n = len(source)
    while i < n:
        ch = source[i]
        col = i - line_start
        span = Span(line, col)
        if ch == "\n":
            i += 1
            line += 1
            line_start = i
        elif ch in " \t\r":
            i += 1
        elif source.startswith("--", i):
            while i < n and source[i] != "\n":
                i += 1
        elif ch.isalpha():
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else ("upper" if word[0].isupper() else "lower")
            tokens.append(Token(kind, word, span))
            i = j
        elif ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], span, int(source[i:j])))
            i = j
        elif ch == "'":
            c, j = _escape(source, i + 1, line, col)
            if j >= n or source[j] != "'":
                raise LexError("unterminated character literal", span)
            tokens.append(Token("char", source[i : j + 1], span, c))
            i = j + 1
        elif ch == '"':
            chars = []
            j = i + 1
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError("unterminated string literal", span)
                if source[j] == '"':
                    break
                c, j = _escape(source, j, line, col)
                chars.append(c)
            tokens.append(Token("string", source[i : j + 1], span, "".join(chars)))
            i = j + 1
        else:
            for sym in SYMBOLS:
                if source.startswith(sym, i):
                    tokens.append(Token("symbol", sym, span))
                    i += len(sym)
                    break
            else:
                raise LexError(f"illegal character {ch!r}", span)
    tokens.append(Token("eof", "", Span(line, i - line_start)))
    return tokens
