"""Text formats for models and partitions.

A file is a sequence of sections.  A section starts with ``name:`` at the
start of a line; its body is the rest of that line plus any following
indented lines.  ``#`` starts a comment.  See docs/formats.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .models import (FRESH_RE, IDENT_RE, AbstractionMap, Kmts, KripkeStructure, Literal,
                     validate_kmts, validate_ks)

KS_SECTIONS = ("props", "states", "init", "labels", "trans")
KMTS_SECTIONS = ("props", "states", "init", "labels", "must", "may", "sizes")


class ModelParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(where + message)


@dataclass
class _Item:
    text: str
    line: int
    col: int


_HEADER_RE = re.compile(r"([A-Za-z]+):(.*)\Z")


def _sections(text: str) -> dict[str, list[_Item]]:
    """Split into sections; each body is a list of items with positions."""
    out: dict[str, list[_Item]] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if not line[0].isspace():
            m = _HEADER_RE.match(line)
            if not m:
                raise ModelParseError("expected a section header 'name:'", n, 1)
            current = m.group(1)
            if current in out:
                raise ModelParseError(f"duplicate section {current}", n, 1)
            out[current] = []
            body, offset = m.group(2), len(current) + 2
        else:
            if current is None:
                raise ModelParseError("indented line outside a section", n, 1)
            body, offset = line, 1
        if body.strip():
            out[current].append(_Item(body, n, offset))
    return out


def _split(item: _Item, sep: str):
    """Split an item on ``sep`` keeping column positions."""
    pos = 0
    for piece in item.text.split(sep):
        stripped = piece.strip()
        if stripped:
            lead = len(piece) - len(piece.lstrip())
            yield _Item(stripped, item.line, item.col + pos + lead)
        pos += len(piece) + len(sep)


def _ident(item: _Item, what: str, allow_fresh: bool = False) -> str:
    if not IDENT_RE.match(item.text):
        raise ModelParseError(f"invalid {what} {item.text!r}", item.line, item.col)
    if not allow_fresh and FRESH_RE.match(item.text):
        raise ModelParseError(f"{item.text!r} uses the reserved _n<k> namespace", item.line, item.col)
    return item.text


def _id_list(items, what, allow_fresh=False) -> list[_Item]:
    out = []
    for it in items:
        for piece in _split(it, ","):
            _ident(piece, what, allow_fresh)
            out.append(piece)
    return out


def _check_known(item: _Item, known, what):
    if item.text not in known:
        raise ModelParseError(f"unknown {what} {item.text!r}", item.line, item.col)


def _edges(items, states) -> set[tuple[str, str]]:
    out = set()
    for it in items:
        for piece in _split(it, ","):
            parts = piece.text.split("->")
            if len(parts) != 2:
                raise ModelParseError(f"expected 'a -> b', got {piece.text!r}", piece.line, piece.col)
            a = _Item(parts[0].strip(), piece.line, piece.col)
            lead = len(parts[1]) - len(parts[1].lstrip())
            b = _Item(parts[1].strip(), piece.line, piece.col + len(parts[0]) + 2 + lead)
            for x in (a, b):
                _check_known(x, states, "state")
            out.add((a.text, b.text))
    return out


def _entries(items):
    """``key: value`` entries, one per line or separated by ';'."""
    for it in items:
        for piece in _split(it, ";"):
            if ":" not in piece.text:
                raise ModelParseError(f"expected 'name: ...', got {piece.text!r}", piece.line, piece.col)
            key, rest = piece.text.split(":", 1)
            yield (_Item(key.strip(), piece.line, piece.col),
                   _Item(rest, piece.line, piece.col + len(key) + 1))


def _labels(items, states, props) -> dict[str, set[Literal]]:
    out: dict[str, set[Literal]] = {s: set() for s in states}
    seen = set()
    for key, rest in _entries(items):
        _check_known(key, states, "state")
        if key.text in seen:
            raise ModelParseError(f"state {key.text} labeled twice", key.line, key.col)
        seen.add(key.text)
        for tok in _split(rest, ","):
            negated = tok.text.startswith("-")
            name = _Item(tok.text[1:].strip() if negated else tok.text, tok.line, tok.col + negated)
            _ident(name, "proposition")
            _check_known(name, props, "proposition")
            out[key.text].add(Literal(name.text, negated))
    return out


def _common(secs, required):
    for name in required:
        if name not in secs:
            raise ModelParseError(f"missing section {name}:")
    props = [x.text for x in _id_list(secs.get("props", []), "proposition")]
    states = [x.text for x in _id_list(secs["states"], "state")]
    if len(set(states)) != len(states):
        raise ModelParseError("duplicate state ids")
    if len(set(props)) != len(props):
        raise ModelParseError("duplicate propositions")
    init_items = _id_list(secs.get("init", []), "state")
    for it in init_items:
        _check_known(it, set(states), "state")
    labels = _labels(secs.get("labels", []), set(states), set(props))
    return props, states, [x.text for x in init_items], labels


def parse_model(text: str) -> KripkeStructure | Kmts:
    secs = _sections(text)
    is_kmts = "must" in secs or "may" in secs
    allowed = KMTS_SECTIONS if is_kmts else KS_SECTIONS
    for name in secs:
        if name not in allowed:
            raise ModelParseError(f"unexpected section {name}: in a {'KMTS' if is_kmts else 'KS'} file")
    if is_kmts:
        props, states, init, labels = _common(secs, ("props", "states"))
        known = set(states)
        must = _edges(secs.get("must", []), known)
        may = _edges(secs.get("may", []), known) | must
        sizes = {}
        for key, rest in _entries(secs.get("sizes", [])):
            _check_known(key, known, "state")
            try:
                sizes[key.text] = int(rest.text)
            except ValueError:
                raise ModelParseError(f"block size must be an integer, got {rest.text.strip()!r}",
                                      rest.line, rest.col) from None
        m = Kmts(props, states, init, must, may, labels, sizes)
        problems = validate_kmts(m)
    else:
        props, states, init, labels = _common(secs, ("props", "states", "trans"))
        trans = _edges(secs["trans"], set(states))
        m = KripkeStructure(props, states, init, trans, labels)
        problems = validate_ks(m)
    if problems:
        raise ModelParseError("invalid model: " + "; ".join(str(p) for p in problems))
    return m


def parse_partition(text: str, states=None) -> AbstractionMap:
    secs = _sections(text)
    if set(secs) != {"blocks"}:
        raise ModelParseError("a partition file has exactly one section: blocks:")
    blocks = []
    for key, rest in _entries(secs["blocks"]):
        _ident(key, "block name")
        members = [x.text for x in _id_list([rest], "state")]
        if states is not None:
            for x in _id_list([rest], "state"):
                _check_known(x, set(states), "state")
        blocks.append((key.text, members))
    p = AbstractionMap(blocks)
    if states is not None:
        problems = p.problems(states)
        if problems:
            raise ModelParseError("invalid partition: " + "; ".join(problems))
    return p


def _fmt_lits(lits) -> str:
    return ", ".join(("-" if x.negated else "") + x.prop for x in sorted(lits))


def _fmt_edges(m, edges, index) -> list[str]:
    by_src: dict[str, list[str]] = {}
    for a, b in sorted(edges, key=lambda e: (index[e[0]], index[e[1]])):
        by_src.setdefault(a, []).append(f"{a} -> {b}")
    return ["  " + ", ".join(v) for v in by_src.values()]


def print_model(m: KripkeStructure | Kmts) -> str:
    lines = [f"props: {', '.join(m.props)}".rstrip(),
             f"states: {', '.join(m.states)}",
             f"init: {', '.join(s for s in m.states if s in m.initial)}".rstrip(),
             "labels:"]
    for s in m.states:
        lines.append(f"  {s}: {_fmt_lits(m.labels[s])}".rstrip())
    if isinstance(m, KripkeStructure):
        lines.append("trans:")
        lines += _fmt_edges(m, m.trans, m.index)
    else:
        lines.append("must:")
        lines += _fmt_edges(m, m.must, m.index)
        lines.append("may:")
        lines += _fmt_edges(m, m.may - m.must, m.index)
        if m.sizes:
            lines.append("sizes:")
            lines += [f"  {s}: {m.sizes[s]}" for s in m.states if s in m.sizes]
    return "\n".join(lines) + "\n"


def print_partition(p: AbstractionMap) -> str:
    return "blocks:\n" + "".join(f"  {name}: {', '.join(mem)}\n" for name, mem in p.blocks)


def load_model(path) -> KripkeStructure | Kmts:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())
