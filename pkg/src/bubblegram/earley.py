"""Character-level Earley membership for :class:`~bubblegram.grammar.Grammar`.

Multi-character terminals are split into single-character items. A TokenClass
symbol becomes a reserved nonterminal ``__cls_<NAME>`` with rules
``C -> [set]`` and ``C -> [set] C``.
"""
from __future__ import annotations

from . import kernels
from .grammar import Grammar, Terminal, TokenClass


class CompiledGrammar:
    def __init__(self, g: Grammar, backend=None):
        self.kernels = backend or kernels.impl
        nts = g.nonterminals
        cls_used = sorted(
            {s.cls for r in g.rules for s in r.rhs if isinstance(s, TokenClass)},
            key=lambda c: c.name,
        )
        names = nts + [f"__cls_{c.name}" for c in cls_used]
        self.nt_id = {name: i for i, name in enumerate(names)}

        alphabet = sorted(set(g.terminal_alphabet()))
        self.alpha = {c: i for i, c in enumerate(alphabet)}
        n_alpha = len(alphabet)
        set_ids: dict[frozenset, int] = {}
        set_rows: list[list[int]] = []

        def set_item(chars: str) -> int:
            key = frozenset(chars)
            if key not in set_ids:
                row = [0] * n_alpha
                for ch in key:
                    row[self.alpha[ch]] = 1
                set_ids[key] = len(set_rows)
                set_rows.append(row)
            return -set_ids[key] - 1

        bodies: list[tuple[int, list[int]]] = []
        for r in g.sorted_rules():
            body: list[int] = []
            for s in r.rhs:
                if isinstance(s, Terminal):
                    body.extend(set_item(ch) for ch in s.token)
                elif isinstance(s, TokenClass):
                    body.append(self.nt_id[f"__cls_{s.cls.name}"])
                else:
                    body.append(self.nt_id[s.label])
            bodies.append((self.nt_id[r.lhs], body))
        for c in cls_used:
            cid = self.nt_id[f"__cls_{c.name}"]
            item = set_item(c.chars)
            bodies.append((cid, [item]))
            bodies.append((cid, [item, cid]))

        bodies.sort(key=lambda b: b[0])
        rule_lhs, rule_off, items = [], [0], []
        nt_rules: list[list[int]] = [[] for _ in names]
        for idx, (lhs, body) in enumerate(bodies):
            rule_lhs.append(lhs)
            items.extend(body)
            rule_off.append(len(items))
            nt_rules[lhs].append(idx)
        nt_off, flat = [0], []
        for rs in nt_rules:
            flat.extend(rs)
            nt_off.append(len(flat))

        k = self.kernels
        self.n_alpha = n_alpha
        self.start = self.nt_id[g.start]
        self.args = (
            k.pack_ints(rule_lhs),
            k.pack_ints(rule_off),
            k.pack_ints(items),
            k.pack_ints(nt_off),
            k.pack_ints(flat),
            self.start,
            k.pack_bytes([b for row in set_rows for b in row] or [0]),
            n_alpha,
        )

    def accepts(self, s: str) -> bool:
        alpha = self.alpha
        try:
            codes = [alpha[c] for c in s]
        except KeyError:
            return False
        return bool(self.kernels.earley_recognize(*self.args, self.kernels.pack_ints(codes)))


def compiled(g: Grammar) -> CompiledGrammar:
    cg = g._cache.get("earley")
    if cg is None:
        cg = g._cache["earley"] = CompiledGrammar(g)
    return cg


def membership(g: Grammar, s: str) -> bool:
    """True iff ``s`` is in the language of ``g``."""
    return compiled(g).accepts(s)

