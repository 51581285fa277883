"""Minimal TOML reader covering the configuration schema used here.

Python 3.10 ships no TOML parser and this package keeps its dependency
surface to numpy/scipy, so config and taxonomy files are parsed with this
small reader. Supported syntax:

* ``[table]`` and ``[dotted.table]`` headers
* ``key = value`` with bare or double-quoted keys, dotted keys
* basic strings with the common escapes, integers, floats, booleans
* arrays (nested, multi-line) and inline tables ``{k = v, ...}``
* ``#`` comments

Not supported: datetimes, multi-line/literal strings, arrays of tables.
``loads`` raises ``ValueError`` with a line number on malformed input.
"""

from __future__ import annotations

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\", "f": "\f", "b": "\b"}


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)

    def err(self, msg: str) -> ValueError:
        line = self.text.count("\n", 0, self.pos) + 1
        return ValueError(f"TOML parse error at line {line}: {msg}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < self.n else ""

    def skip_ws(self, newlines: bool) -> None:
        ws = " \t\r\n" if newlines else " \t\r"
        while self.pos < self.n:
            c = self.text[self.pos]
            if c in ws:
                self.pos += 1
            elif c == "#":
                nl = self.text.find("\n", self.pos)
                self.pos = self.n if nl < 0 else nl
            else:
                return

    def expect(self, c: str) -> None:
        if self.peek() != c:
            raise self.err(f"expected {c!r}, found {self.peek()!r}")
        self.pos += 1

    def parse_basic_string(self) -> str:
        self.expect('"')
        out = []
        while True:
            if self.pos >= self.n:
                raise self.err("unterminated string")
            c = self.text[self.pos]
            self.pos += 1
            if c == '"':
                return "".join(out)
            if c == "\n":
                raise self.err("newline inside string")
            if c == "\\":
                e = self.text[self.pos] if self.pos < self.n else ""
                self.pos += 1
                if e in _ESCAPES:
                    out.append(_ESCAPES[e])
                elif e in "uU":
                    width = 4 if e == "u" else 8
                    hexs = self.text[self.pos : self.pos + width]
                    self.pos += width
                    out.append(chr(int(hexs, 16)))
                else:
                    raise self.err(f"bad escape \\{e}")
            else:
                out.append(c)

    def parse_key(self) -> list[str]:
        parts = []
        while True:
            self.skip_ws(newlines=False)
            if self.peek() == '"':
                parts.append(self.parse_basic_string())
            else:
                start = self.pos
                while self.pos < self.n and (
                    self.text[self.pos].isalnum() or self.text[self.pos] in "_-"
                ):
                    self.pos += 1
                if self.pos == start:
                    raise self.err("expected key")
                parts.append(self.text[start : self.pos])
            self.skip_ws(newlines=False)
            if self.peek() == ".":
                self.pos += 1
            else:
                return parts

    def parse_scalar(self) -> object:
        start = self.pos
        while self.pos < self.n and self.text[self.pos] not in " \t\r\n,]}#":
            self.pos += 1
        tok = self.text[start : self.pos]
        if not tok:
            raise self.err("expected value")
        if tok == "true":
            return True
        if tok == "false":
            return False
        cleaned = tok.replace("_", "")
        try:
            if any(ch in cleaned for ch in ".eE") and not cleaned.startswith("0x"):
                return float(cleaned)
            return int(cleaned, 0)
        except ValueError:
            pass
        try:
            return float(cleaned)
        except ValueError:
            raise self.err(f"cannot parse value {tok!r}") from None

    def parse_value(self) -> object:
        self.skip_ws(newlines=False)
        c = self.peek()
        if c == '"':
            return self.parse_basic_string()
        if c == "[":
            self.pos += 1
            items = []
            while True:
                self.skip_ws(newlines=True)
                if self.peek() == "]":
                    self.pos += 1
                    return items
                items.append(self.parse_value())
                self.skip_ws(newlines=True)
                if self.peek() == ",":
                    self.pos += 1
                elif self.peek() == "]":
                    self.pos += 1
                    return items
                else:
                    raise self.err("expected ',' or ']' in array")
        if c == "{":
            self.pos += 1
            table: dict[str, object] = {}
            self.skip_ws(newlines=False)
            if self.peek() == "}":
                self.pos += 1
                return table
            while True:
                key = self.parse_key()
                self.skip_ws(newlines=False)
                self.expect("=")
                _assign(table, key, self.parse_value(), self)
                self.skip_ws(newlines=False)
                if self.peek() == ",":
                    self.pos += 1
                    self.skip_ws(newlines=False)
                elif self.peek() == "}":
                    self.pos += 1
                    return table
                else:
                    raise self.err("expected ',' or '}' in inline table")
        return self.parse_scalar()


def _assign(table: dict, key_parts: list[str], value: object, reader: _Reader) -> None:
    node = table
    for part in key_parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise reader.err(f"key {part!r} already holds a non-table value")
    leaf = key_parts[-1]
    if leaf in node:
        raise reader.err(f"duplicate key {leaf!r}")
    node[leaf] = value


def _table_for(root: dict, key_parts: list[str], reader: _Reader) -> dict:
    node = root
    for part in key_parts:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise reader.err(f"header {part!r} conflicts with an existing value")
    return node


def loads(text: str) -> dict:
    """Parse a TOML document (subset, see module docstring) into a dict."""
    r = _Reader(text)
    root: dict[str, object] = {}
    current = root
    while True:
        r.skip_ws(newlines=True)
        if r.pos >= r.n:
            return root
        if r.peek() == "[":
            r.pos += 1
            if r.peek() == "[":
                raise r.err("arrays of tables are not supported")
            key = r.parse_key()
            r.skip_ws(newlines=False)
            r.expect("]")
            current = _table_for(root, key, r)
        else:
            key = r.parse_key()
            r.skip_ws(newlines=False)
            r.expect("=")
            _assign(current, key, r.parse_value(), r)
        r.skip_ws(newlines=False)
        if r.pos < r.n and r.peek() not in "\n":
            raise r.err(f"unexpected trailing content {r.peek()!r}")


def load(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return loads(f.read())
