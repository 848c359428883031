"""Tokenizer for the supported Verilog subset.

Handles // and /* */ comments, (* attribute *) blocks (skipped), and a
single level of `define constant substitution. Four-state literals (x/z)
are rejected up front: the toolkit is strictly two-valued.
"""

import re
from dataclasses import dataclass

from .errors import UnsupportedConstruct, VerilogSyntaxError

KEYWORDS = {
    "module", "endmodule", "input", "output", "inout", "wire", "reg",
    "assign", "always", "begin", "end", "if", "else", "case", "endcase",
    "default", "posedge", "negedge", "or", "parameter", "localparam",
    "signed", "integer", "initial", "generate", "endgenerate", "function",
    "endfunction", "task", "endtask", "for", "while",
}

# multi-char operators first so maximal munch wins
PUNCT = [
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "(", ")", "[", "]", "{", "}", ",", ";", ":", "@", "#",
    "?", "=", "<", ">", "&", "|", "^", "~", "!", "+", "-", "*", "/", "%",
    ".",
]

_ID_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_$]*")
_SIZED_RE = re.compile(r"([0-9][0-9_]*)?'([bodhBODH])([0-9a-fA-FxzXZ_?]+)")
_DEC_RE = re.compile(r"[0-9][0-9_]*")
_DEFINE_RE = re.compile(r"`define\s+(\w+)\s+([^\n]*)")


@dataclass(frozen=True)
class Token:
    kind: str  # "id" | "kw" | "num" | punct literal | "eof"
    text: str
    line: int
    col: int
    value: object = None  # (value, width, base) for numbers


_BASES = {"b": 2, "o": 8, "d": 10, "h": 16}


def _parse_sized(m, line, col):
    width_s, base_c, digits = m.group(1), m.group(2).lower(), m.group(3)
    if re.search(r"[xzXZ?]", digits):
        raise UnsupportedConstruct("four-state literal (x/z)", line, col)
    value = int(digits.replace("_", ""), _BASES[base_c])
    width = int(width_s.replace("_", "")) if width_s else None
    if width is not None and width >= 1 and value >= (1 << width):
        value &= (1 << width) - 1  # verilog truncates oversized literals
    return value, width, base_c


def preprocess(text: str) -> str:
    """Expand simple `define constants; reject other directives."""
    defines = {}
    out_lines = []
    for line in text.split("\n"):
        m = _DEFINE_RE.match(line.strip())
        if m:
            defines[m.group(1)] = m.group(2).strip()
            out_lines.append("")  # keep line numbering stable
            continue
        out_lines.append(line)
    joined = "\n".join(out_lines)
    if defines:
        def sub(m):
            name = m.group(1)
            if name not in defines:
                raise UnsupportedConstruct(f"`{name} (undefined macro)")
            return defines[name]
        joined = re.sub(r"`(\w+)", sub, joined)
    elif "`" in joined:
        idx = joined.index("`")
        line = joined.count("\n", 0, idx) + 1
        raise UnsupportedConstruct("compiler directive", line, None)
    return joined


def tokenize(text: str):
    text = preprocess(text)
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            advance((j - i) if j != -1 else (n - i))
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j == -1:
                raise VerilogSyntaxError(line, col, "closing */")
            advance(j + 2 - i)
            continue
        if text.startswith("(*", i) and not text.startswith("(*)", i):
            # synthesis attribute, not @(*): skip through *)
            j = text.find("*)", i + 2)
            if j == -1:
                raise VerilogSyntaxError(line, col, "closing *)")
            advance(j + 2 - i)
            continue
        m = _SIZED_RE.match(text, i)
        if m:
            toks.append(Token("num", m.group(0), line, col, _parse_sized(m, line, col)))
            advance(m.end() - i)
            continue
        m = _ID_RE.match(text, i)
        if m:
            word = m.group(0)
            kind = "kw" if word in KEYWORDS else "id"
            toks.append(Token(kind, word, line, col))
            advance(len(word))
            continue
        m = _DEC_RE.match(text, i)
        if m:
            value = int(m.group(0).replace("_", ""))
            toks.append(Token("num", m.group(0), line, col, (value, None, "d")))
            advance(m.end() - i)
            continue
        for p in PUNCT:
            if text.startswith(p, i):
                toks.append(Token(p, p, line, col))
                advance(len(p))
                break
        else:
            if c == "\\":
                raise UnsupportedConstruct("escaped identifier", line, col)
            raise VerilogSyntaxError(line, col, "a token", c)
    toks.append(Token("eof", "", line, col))
    return toks
