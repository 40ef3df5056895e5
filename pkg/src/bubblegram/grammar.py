"""Context-free grammars: symbols, rules, text format, sampling and enumeration.

Grammars are immutable values. Membership lives in :mod:`bubblegram.earley`.
"""
from __future__ import annotations

import enum
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class GrammarError(ValueError):
    """Raised for invalid grammars or malformed grammar text."""


class CharClass(enum.Enum):
    LOWER = "abcdefghijklmnopqrstuvwxyz"
    UPPER = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    LETTERS = LOWER + UPPER
    DIGITS = "0123456789"
    ALNUM = LOWER + UPPER + DIGITS
    WHITESPACE = " \t\n\r\v\f"

    @property
    def chars(self) -> str:
        return self.value

    def matches(self, text: str) -> bool:
        return bool(text) and all(c in self.value for c in text)


@dataclass(frozen=True, order=True)
class Terminal:
    token: str

    def __post_init__(self):
        if not self.token:
            raise GrammarError("terminal token must be non-empty")


@dataclass(frozen=True)
class TokenClass:
    """A non-empty run of characters drawn from one character class."""

    cls: CharClass


_LABEL_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True, order=True)
class Nonterminal:
    label: str

    def __post_init__(self):
        if not _LABEL_RE.match(self.label):
            raise GrammarError(f"invalid nonterminal label {self.label!r}")


Symbol = Union[Terminal, TokenClass, Nonterminal]


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[Symbol, ...]

    def __post_init__(self):
        if not self.rhs:
            raise GrammarError(f"empty right-hand side for {self.lhs}")
        if not _LABEL_RE.match(self.lhs):
            raise GrammarError(f"invalid nonterminal label {self.lhs!r}")

    def nonterminals(self) -> Iterator[str]:
        for sym in self.rhs:
            if isinstance(sym, Nonterminal):
                yield sym.label


@dataclass(frozen=True)
class Grammar:
    start: str
    rules: frozenset[Rule]
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __init__(self, start: str, rules: Iterable[Rule]):
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "rules", frozenset(rules))
        object.__setattr__(self, "_cache", {})
        self._validate()

    def _validate(self) -> None:
        lhs = {r.lhs for r in self.rules}
        if self.start not in lhs:
            raise GrammarError(f"start symbol {self.start!r} has no rules")
        for r in self.rules:
            for nt in r.nonterminals():
                if nt not in lhs:
                    raise GrammarError(f"dangling nonterminal {nt!r} in rule for {r.lhs!r}")

    @property
    def nonterminals(self) -> list[str]:
        return sorted({r.lhs for r in self.rules}, key=label_key)

    def rules_for(self, label: str) -> list[Rule]:
        by_lhs = self._cache.get("by_lhs")
        if by_lhs is None:
            by_lhs = {}
            for r in self.sorted_rules():
                by_lhs.setdefault(r.lhs, []).append(r)
            self._cache["by_lhs"] = by_lhs
        return by_lhs.get(label, [])

    def sorted_rules(self) -> list[Rule]:
        """Canonical rule order: start rules first, then by label and body."""
        cached = self._cache.get("sorted")
        if cached is None:
            cached = sorted(
                self.rules,
                key=lambda r: (r.lhs != self.start, label_key(r.lhs), [_sym_key(s) for s in r.rhs]),
            )
            self._cache["sorted"] = cached
        return cached

    def terminal_alphabet(self) -> str:
        chars: set[str] = set()
        for r in self.rules:
            for sym in r.rhs:
                if isinstance(sym, Terminal):
                    chars.update(sym.token)
                elif isinstance(sym, TokenClass):
                    chars.update(sym.cls.chars)
        return "".join(sorted(chars))

    def __repr__(self) -> str:
        return f"Grammar(start={self.start!r}, rules={len(self.rules)})"


def label_key(label: str) -> tuple:
    # natural order: t2 < t10
    return tuple(int(p) if p.isdigit() else p for p in re.split(r"(\d+)", label))


def _sym_key(sym: Symbol) -> tuple:
    if isinstance(sym, Terminal):
        return (0, sym.token)
    if isinstance(sym, TokenClass):
        return (1, sym.cls.name)
    return (2, label_key(sym.label))


def induced_grammar(trees: Iterable, start: str | None = None) -> Grammar:
    """Read one rule per distinct (parent label, child label sequence).

    ``trees`` are root nodes from :mod:`bubblegram.trees`; leaves carry a
    Terminal or TokenClass symbol.
    """
    trees = list(trees)
    if start is None:
        start = trees[0].label
    rules: dict[Rule, None] = {}
    seen: set[int] = set()
    stack = list(trees)
    while stack:
        node = stack.pop()
        if id(node) in seen or node.is_leaf:
            continue
        seen.add(id(node))
        rhs = tuple(c.label if c.is_leaf else Nonterminal(c.label) for c in node.children)
        rules[Rule(node.label, rhs)] = None
        stack.extend(node.children)
    return Grammar(start, rules)


# -- text format -------------------------------------------------------------

_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\t": "\\t"}
_UNESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


def _quote(token: str) -> str:
    out = []
    for c in token:
        if c in _ESCAPES:
            out.append(_ESCAPES[c])
        elif ord(c) < 0x20 or ord(c) == 0x7F:
            out.append(f"\\x{ord(c):02x}")
        else:
            out.append(c)
    return '"' + "".join(out) + '"'


def _format_symbol(sym: Symbol) -> str:
    if isinstance(sym, Terminal):
        return _quote(sym.token)
    if isinstance(sym, TokenClass):
        return f"<{sym.cls.name}>"
    return sym.label


def serialize(g: Grammar) -> str:
    lines = [f"start: {g.start}"]
    for r in g.sorted_rules():
        lines.append(f"{r.lhs} -> " + " ".join(_format_symbol(s) for s in r.rhs))
    return "\n".join(lines) + "\n"


_TOKEN_RE = re.compile(r'\s*(?:(")|<([A-Z]+)>|([A-Za-z_][A-Za-z0-9_]*))')


def _parse_quoted(line: str, pos: int, lineno: int) -> tuple[str, int]:
    out = []
    i = pos
    while True:
        if i >= len(line):
            raise GrammarError(f"line {lineno}: unterminated string")
        c = line[i]
        if c == '"':
            return "".join(out), i + 1
        if c == "\\":
            if i + 1 >= len(line):
                raise GrammarError(f"line {lineno}: dangling escape")
            e = line[i + 1]
            if e in _UNESCAPES:
                out.append(_UNESCAPES[e])
                i += 2
            elif e == "x":
                digits = line[i + 2 : i + 4]
                if len(digits) != 2 or not all(d in "0123456789abcdefABCDEF" for d in digits):
                    raise GrammarError(f"line {lineno}: malformed \\x escape")
                out.append(chr(int(digits, 16)))
                i += 4
            else:
                raise GrammarError(f"line {lineno}: unknown escape \\{e}")
        else:
            out.append(c)
            i += 1


def _parse_rhs(text: str, lineno: int) -> tuple[Symbol, ...]:
    syms: list[Symbol] = []
    pos = 0
    while pos < len(text):
        rest = text[pos:].lstrip()
        if not rest or rest.startswith("#"):
            break
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise GrammarError(f"line {lineno}: cannot parse {text[pos:]!r}")
        if m.group(1):
            token, pos = _parse_quoted(text, m.end(), lineno)
            if not token:
                raise GrammarError(f"line {lineno}: empty terminal")
            syms.append(Terminal(token))
            continue
        if m.group(2):
            try:
                syms.append(TokenClass(CharClass[m.group(2)]))
            except KeyError:
                raise GrammarError(f"line {lineno}: unknown token class <{m.group(2)}>") from None
        else:
            syms.append(Nonterminal(m.group(3)))
        pos = m.end()
        if pos < len(text) and not text[pos].isspace():
            raise GrammarError(f"line {lineno}: symbols must be separated by whitespace")
    return tuple(syms)


def deserialize(text: str) -> Grammar:
    start = None
    rules: list[Rule] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("start:"):
            if start is not None:
                raise GrammarError(f"line {lineno}: duplicate start declaration")
            start = line[len("start:"):].strip()
            if not _LABEL_RE.match(start):
                raise GrammarError(f"line {lineno}: invalid start label {start!r}")
            continue
        lhs, arrow, rhs = line.partition("->")
        if not arrow:
            raise GrammarError(f"line {lineno}: expected '->'")
        lhs = lhs.strip()
        if not _LABEL_RE.match(lhs):
            raise GrammarError(f"line {lineno}: invalid nonterminal {lhs!r}")
        body = _parse_rhs(rhs, lineno)
        if not body:
            raise GrammarError(f"line {lineno}: empty right-hand side")
        rules.append(Rule(lhs, body))
    if start is None:
        raise GrammarError("missing start declaration")
    return Grammar(start, rules)


def load(path) -> Grammar:
    with open(path, encoding="utf-8") as f:
        return deserialize(f.read())


def dump(g: Grammar, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize(g))


# -- derivation depth and sampling -------------------------------------------

def min_depths(g: Grammar) -> dict[str, int]:
    """Minimal derivation depth per nonterminal (terminals count as depth 0)."""
    cached = g._cache.get("min_depths")
    if cached is not None:
        return cached
    inf = float("inf")
    depth = {nt: inf for nt in g.nonterminals}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            d = 1 + max((depth[nt] for nt in r.nonterminals()), default=0)
            if d < depth[r.lhs]:
                depth[r.lhs] = d
                changed = True
    bad = [nt for nt, d in depth.items() if d == inf]
    if bad:
        raise GrammarError(f"nonterminals without finite derivations: {bad}")
    g._cache["min_depths"] = depth
    return depth


def rule_depth(rule: Rule, depths: dict[str, int]) -> int:
    return 1 + max((depths[nt] for nt in rule.nonterminals()), default=0)


def sample_class(cls: CharClass, rng: random.Random) -> str:
    # geometric run length, mean 3, minimum 1
    n = 1
    while rng.random() < 2 / 3:
        n += 1
    return "".join(rng.choice(cls.chars) for _ in range(n))


def sample(g: Grammar, rng_seed: int | random.Random, depth_cutoff: int = 8) -> str:
    """Yield of a random derivation.

    Rules are chosen uniformly; past ``depth_cutoff`` only the rules of
    smallest derivation depth are eligible, which bounds the recursion.
    """
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    depths = min_depths(g)
    shallow = g._cache.get("shallow")
    if shallow is None:
        shallow = {}
        for nt in g.nonterminals:
            rs = g.rules_for(nt)
            best = min(rule_depth(r, depths) for r in rs)
            shallow[nt] = [r for r in rs if rule_depth(r, depths) == best]
        g._cache["shallow"] = shallow
    out: list[str] = []
    stack: list[tuple[Symbol, int]] = [(Nonterminal(g.start), 0)]
    while stack:
        sym, level = stack.pop()
        if isinstance(sym, Terminal):
            out.append(sym.token)
        elif isinstance(sym, TokenClass):
            out.append(sample_class(sym.cls, rng))
        else:
            choices = g.rules_for(sym.label) if level < depth_cutoff else shallow[sym.label]
            rule = choices[rng.randrange(len(choices))]
            for child in reversed(rule.rhs):
                stack.append((child, level + 1))
    return "".join(out)


# -- bounded enumeration -----------------------------------------------------

def enumerate_strings(g: Grammar, max_len: int) -> set[str]:
    """All strings of length <= max_len derivable from the start symbol.

    Plain fixpoint over string sets; independent of the Earley recognizer.
    TokenClass symbols are expanded to every run of length <= max_len, so keep
    max_len small for grammars that use them.
    """
    lang: dict[str, set[str]] = {nt: set() for nt in g.nonterminals}
    class_runs: dict[CharClass, set[str]] = {}

    def runs(cls: CharClass) -> set[str]:
        if cls not in class_runs:
            acc: set[str] = set()
            layer = {""}
            for _ in range(max_len):
                layer = {s + c for s in layer for c in cls.chars}
                acc |= layer
            class_runs[cls] = acc
        return class_runs[cls]

    changed = True
    while changed:
        changed = False
        for r in g.sorted_rules():
            partial = {""}
            for sym in r.rhs:
                if isinstance(sym, Terminal):
                    options: Iterable[str] = (sym.token,)
                elif isinstance(sym, TokenClass):
                    options = runs(sym.cls)
                else:
                    options = lang[sym.label]
                partial = {p + o for p in partial for o in options if len(p) + len(o) <= max_len}
                if not partial:
                    break
            new = partial - lang[r.lhs]
            if new:
                lang[r.lhs] |= new
                changed = True
    return lang[g.start]

