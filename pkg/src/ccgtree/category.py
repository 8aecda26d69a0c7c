"""CCG categories as binary trees.

A category is either an :class:`Atom` (leaf, e.g. ``NP`` or ``S[dcl]``) or a
:class:`Functor` whose left child is the result and right child the argument.
Two serializations are supported: infix (``(S\\NP)/NP``) and pre-order prefix
tokens (``/ \\ S NP NP``).
"""
from __future__ import annotations

import enum
import functools
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

from .errors import CategorySyntaxError, DepthExceeded, NoSuchNode

DEFAULT_MAX_DEPTH = 6
RESERVED = frozenset("()/\\[]")
#: Display string of the thresholded classifier's catch-all label. Never parses.
UNKNOWN_SYMBOL = "<UNKNOWN>"


class Slash(enum.Enum):
    FORWARD = "/"
    BACKWARD = "\\"

    def __str__(self):
        return self.value


def _valid_piece(s: str) -> bool:
    return bool(s) and not any(c in RESERVED or c.isspace() for c in s)


@dataclass(frozen=True, slots=True)
class Atom:
    base: str
    attr: str | None = None

    def __post_init__(self):
        if not _valid_piece(self.base):
            raise CategorySyntaxError(f"invalid atom base {self.base!r}")
        if self.attr is not None and not _valid_piece(self.attr):
            raise CategorySyntaxError(f"invalid atom attribute {self.attr!r}")

    def __str__(self):
        return self.base if self.attr is None else f"{self.base}[{self.attr}]"


@dataclass(frozen=True, slots=True)
class Functor:
    slash: Slash
    result: Category
    argument: Category

    def __str__(self):
        return to_infix(self)


Category = Union[Atom, Functor]
Label = Union[Atom, Slash]


class MalformedReason(enum.Enum):
    SURPLUS_SLASHES = "SurplusSlashes"
    TRAILING_TOKENS = "TrailingTokens"


@dataclass(frozen=True)
class Malformed:
    """A token sequence that is not the pre-order serialization of one tree."""

    tokens: tuple[str, ...]
    reason: MalformedReason

    @property
    def diagnostic(self) -> str:
        return f"{self.reason.value}: {render_partial(self.tokens)}"


# --------------------------------------------------------------------------
# infix notation


class _InfixParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)

    def error(self, msg, pos=None):
        return CategorySyntaxError(msg, self.text, self.pos if pos is None else pos)

    def skip_ws(self):
        while self.pos < self.n and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.pos] if self.pos < self.n else ""

    def parse(self) -> Category:
        cat = self.expr()
        if self.peek():
            raise self.error(f"unexpected {self.text[self.pos]!r}")
        return cat

    def expr(self) -> Category:
        cat = self.primary()
        while True:
            c = self.peek()
            if c not in ("/", "\\"):
                return cat
            self.pos += 1
            if self.peek() in ("", ")", "/", "\\"):
                raise self.error("dangling slash", self.pos - 1)
            cat = Functor(Slash(c), cat, self.primary())

    def primary(self) -> Category:
        c = self.peek()
        if c == "(":
            open_pos = self.pos
            self.pos += 1
            cat = self.expr()
            if self.peek() != ")":
                raise self.error("unbalanced parenthesis", open_pos)
            self.pos += 1
            return cat
        if not c:
            raise self.error("unexpected end of input")
        if c in RESERVED:
            raise self.error(f"expected atom, found {c!r}")
        return self.atom()

    def atom(self) -> Atom:
        start = self.pos
        while self.pos < self.n and self.text[self.pos] not in RESERVED and not self.text[self.pos].isspace():
            self.pos += 1
        base = self.text[start:self.pos]
        if base == UNKNOWN_SYMBOL:
            raise self.error(f"{UNKNOWN_SYMBOL} is reserved", start)
        attr = None
        if self.pos < self.n and self.text[self.pos] == "[":
            close = self.text.find("]", self.pos)
            if close < 0:
                raise self.error("unclosed attribute bracket")
            attr = self.text[self.pos + 1:close]
            if not _valid_piece(attr):
                raise self.error(f"invalid attribute {attr!r}")
            self.pos = close + 1
        return Atom(base, attr)


def parse_infix(text: str, max_depth: int | None = DEFAULT_MAX_DEPTH) -> Category:
    """Parse infix notation. Unparenthesized slash chains associate to the left."""
    if not text or not text.strip():
        raise CategorySyntaxError("empty category string")
    cat = _InfixParser(text).parse()
    if max_depth is not None:
        d = depth(cat)
        if d > max_depth:
            raise DepthExceeded(f"category {text!r} has depth {d} > {max_depth}")
    return cat


def parse_atom(text: str) -> Atom:
    cat = parse_infix(text, max_depth=None)
    if not isinstance(cat, Atom):
        raise CategorySyntaxError(f"{text!r} is not an atomic category")
    return cat


def to_infix(cat: Category) -> str:
    if isinstance(cat, Atom):
        return str(cat)
    return _wrap(cat.result) + cat.slash.value + _wrap(cat.argument)


def _wrap(cat: Category) -> str:
    if isinstance(cat, Atom):
        return str(cat)
    return "(" + to_infix(cat) + ")"


# --------------------------------------------------------------------------
# prefix notation


def label_str(label: Label) -> str:
    return label.value if isinstance(label, Slash) else str(label)


def to_prefix_tokens(cat: Category) -> list[str]:
    out: list[str] = []
    stack = [cat]
    while stack:
        node = stack.pop()
        if isinstance(node, Functor):
            out.append(node.slash.value)
            stack.append(node.argument)
            stack.append(node.result)
        else:
            out.append(str(node))
    return out


@functools.lru_cache(maxsize=4096)
def _label_from_str(tok: str) -> Label:
    if tok == "/" or tok == "\\":
        return Slash(tok)
    return parse_atom(tok)


def _token_label(tok) -> Label:
    if isinstance(tok, (Slash, Atom)):
        return tok
    return _label_from_str(tok)


class _Incomplete(Exception):
    pass


def from_prefix_tokens(tokens: Sequence) -> Category | Malformed:
    """Rebuild a category from pre-order tokens, or report why it is malformed."""
    labels = [_token_label(t) for t in tokens]
    toks = tuple(label_str(l) for l in labels)
    pos = 0

    def build() -> Category:
        nonlocal pos
        if pos >= len(labels):
            raise _Incomplete
        lab = labels[pos]
        pos += 1
        if isinstance(lab, Slash):
            res = build()
            arg = build()
            return Functor(lab, res, arg)
        return lab

    try:
        cat = build()
    except _Incomplete:
        return Malformed(toks, MalformedReason.SURPLUS_SLASHES)
    if pos != len(labels):
        return Malformed(toks, MalformedReason.TRAILING_TOKENS)
    return cat


def render_partial(tokens: Sequence[str]) -> str:
    """Infix rendering of a possibly incomplete prefix sequence; gaps show as ``_``."""
    it = iter(tokens)
    rest: list[str] = []

    def build(top: bool) -> str:
        tok = next(it, None)
        if tok is None:
            return "_"
        if tok in ("/", "\\"):
            s = build(False) + tok + build(False)
            return s if top else f"({s})"
        return tok

    s = build(True)
    rest.extend(it)
    return s + ("" if not rest else " + " + " ".join(rest))


# --------------------------------------------------------------------------
# measures


def depth(cat: Category) -> int:
    if isinstance(cat, Atom):
        return 0
    return 1 + max(depth(cat.result), depth(cat.argument))


def size(cat: Category) -> int:
    if isinstance(cat, Atom):
        return 1
    return 1 + size(cat.result) + size(cat.argument)


def atoms(cat: Category) -> Iterator[Atom]:
    if isinstance(cat, Atom):
        yield cat
    else:
        yield from atoms(cat.result)
        yield from atoms(cat.argument)


def root_label(cat: Category) -> Label:
    return cat.slash if isinstance(cat, Functor) else cat


# --------------------------------------------------------------------------
# addressing


@dataclass(frozen=True, slots=True)
class Address:
    """Path from the root: bit 0 = result (left), bit 1 = argument (right).

    The implicit leading 1 makes ``value`` a breadth-first node number:
    the root is 1 and the children of ``v`` are ``2v`` and ``2v+1``.
    """

    bits: tuple[int, ...] = ()

    @classmethod
    def root(cls) -> Address:
        return cls(())

    @classmethod
    def from_value(cls, value: int) -> Address:
        if value < 1:
            raise ValueError("address values start at 1")
        return cls(tuple(int(b) for b in bin(value)[3:]))

    @classmethod
    def parse(cls, text: str) -> Address:
        """Parse the full form including the leading placeholder, e.g. ``"101"``."""
        if not text or text[0] != "1" or set(text) - {"0", "1"}:
            raise ValueError(f"bad address {text!r}")
        return cls(tuple(int(b) for b in text[1:]))

    @property
    def value(self) -> int:
        v = 1
        for b in self.bits:
            v = 2 * v + b
        return v

    @property
    def depth(self) -> int:
        return len(self.bits)

    def child(self, bit: int) -> Address:
        return Address(self.bits + (bit,))

    def __str__(self):
        return "1" + "".join(map(str, self.bits))


def subtree_at(cat: Category, addr: Address) -> Category:
    node = cat
    for b in addr.bits:
        if not isinstance(node, Functor):
            raise NoSuchNode(f"address {addr} leaves {to_infix(cat)}")
        node = node.argument if b else node.result
    return node


def node_at(cat: Category, addr: Address) -> Label:
    return root_label(subtree_at(cat, addr))


def enumerate_addresses(cat: Category) -> list[tuple[Address, Label]]:
    out = []
    queue = deque([(Address.root(), cat)])
    while queue:
        addr, node = queue.popleft()
        out.append((addr, root_label(node)))
        if isinstance(node, Functor):
            queue.append((addr.child(0), node.result))
            queue.append((addr.child(1), node.argument))
    return out


# --------------------------------------------------------------------------
# structural comparison


class Relation(enum.Enum):
    IDENTICAL = "Identical"
    SAME_STRUCTURE = "SameStructure"
    DIFFERENT_STRUCTURE = "WellFormedDifferentStructure"


@dataclass(frozen=True)
class CategoryDiff:
    relation: Relation
    atom_errors: int = 0
    attribute_errors: int = 0
    slash_errors: int = 0


def same_shape(a: Category, b: Category) -> bool:
    if isinstance(a, Atom) or isinstance(b, Atom):
        return isinstance(a, Atom) and isinstance(b, Atom)
    return same_shape(a.result, b.result) and same_shape(a.argument, b.argument)


def diff(gold: Category, pred: Category) -> CategoryDiff:
    if gold == pred:
        return CategoryDiff(Relation.IDENTICAL)
    if not same_shape(gold, pred):
        return CategoryDiff(Relation.DIFFERENT_STRUCTURE)
    counts = {"atom": 0, "attr": 0, "slash": 0}
    stack = [(gold, pred)]
    while stack:
        g, p = stack.pop()
        if isinstance(g, Functor):
            if g.slash != p.slash:
                counts["slash"] += 1
            stack.append((g.result, p.result))
            stack.append((g.argument, p.argument))
        elif g.base != p.base:
            counts["atom"] += 1
        elif g.attr != p.attr:
            counts["attr"] += 1
    return CategoryDiff(Relation.SAME_STRUCTURE, counts["atom"], counts["attr"], counts["slash"])
