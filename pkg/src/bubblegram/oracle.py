"""Boolean oracles with memoization, accounting, and an optional query budget."""
from __future__ import annotations

import enum
import os
import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass
from typing import Callable

from .earley import membership
from .grammar import Grammar, load


class QueryBudgetExceeded(RuntimeError):
    """The oracle's query budget ran out."""


class OracleKind(enum.Enum):
    COMMAND = "command"
    GOLDEN_GRAMMAR = "golden"


@dataclass
class OracleStats:
    total_queries: int = 0
    cache_hits: int = 0
    wall_time: float = 0.0
    timeouts: int = 0

    def as_dict(self) -> dict:
        return {
            "total_queries": self.total_queries,
            "cache_hits": self.cache_hits,
            "wall_time": round(self.wall_time, 6),
            "timeouts": self.timeouts,
        }


@dataclass(frozen=True)
class OracleConfig:
    kind: OracleKind
    command: str | None = None
    grammar_path: str | None = None
    timeout: float = 10.0
    budget: int | None = None

    def __post_init__(self):
        if self.kind is OracleKind.COMMAND and not self.command:
            raise ValueError("command oracle needs a command")
        if self.kind is OracleKind.GOLDEN_GRAMMAR and not self.grammar_path:
            raise ValueError("golden oracle needs a grammar path")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be non-negative")


class Oracle:
    """Memoizing wrapper; subclasses implement :meth:`_evaluate`.

    ``stats.total_queries`` counts evaluations, i.e. cache misses only.
    """

    def __init__(self, budget: int | None = None):
        self.budget = budget
        self.stats = OracleStats()
        self._memo: dict[str, bool] = {}
        self._lock = threading.Lock()

    def _evaluate(self, s: str) -> bool:
        raise NotImplementedError

    def known(self, s: str) -> bool:
        with self._lock:
            return s in self._memo

    def query(self, s: str) -> bool:
        with self._lock:
            hit = self._memo.get(s)
            if hit is not None:
                self.stats.cache_hits += 1
                return hit
            if self.budget is not None and self.stats.total_queries >= self.budget:
                raise QueryBudgetExceeded(f"query budget of {self.budget} exhausted")
            self.stats.total_queries += 1
        t0 = time.perf_counter()
        result = bool(self._evaluate(s))
        with self._lock:
            self.stats.wall_time += time.perf_counter() - t0
            self._memo[s] = result
        return result

    __call__ = query


class FunctionOracle(Oracle):
    def __init__(self, fn: Callable[[str], bool], budget: int | None = None):
        super().__init__(budget)
        self.fn = fn

    def _evaluate(self, s: str) -> bool:
        return self.fn(s)


class GrammarOracle(Oracle):
    """Accepts exactly the language of a golden grammar."""

    def __init__(self, grammar: Grammar, budget: int | None = None):
        super().__init__(budget)
        self.grammar = grammar

    def _evaluate(self, s: str) -> bool:
        return membership(self.grammar, s)


class CommandOracle(Oracle):
    """Runs ``command <file>``; exit status 0 means valid.

    Timeouts and spawn failures count as invalid.
    """

    def __init__(self, command: str, timeout: float = 10.0, budget: int | None = None):
        super().__init__(budget)
        self.argv = shlex.split(command)
        if not self.argv:
            raise ValueError("empty oracle command")
        self.timeout = timeout

    def _evaluate(self, s: str) -> bool:
        fd, path = tempfile.mkstemp(prefix="bubblegram-", suffix=".txt")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(s)
            try:
                proc = subprocess.run(
                    [*self.argv, path],
                    stdin=subprocess.DEVNULL,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.DEVNULL,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired:
                with self._lock:
                    self.stats.timeouts += 1
                return False
            except OSError:
                with self._lock:
                    self.stats.timeouts += 1
                return False
            return proc.returncode == 0
        finally:
            try:
                os.unlink(path)
            except OSError:
                pass


def make_oracle(cfg: OracleConfig) -> Oracle:
    if cfg.kind is OracleKind.COMMAND:
        return CommandOracle(cfg.command, cfg.timeout, cfg.budget)
    return GrammarOracle(load(cfg.grammar_path), cfg.budget)
