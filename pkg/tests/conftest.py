import sys
from pathlib import Path

import pytest

from bubblegram.evaluation import load_benchmark
from bubblegram.grammar import Terminal, deserialize
from bubblegram.trees import LabelPool, TreeNode, TreeSet

ROOT = Path(__file__).resolve().parent.parent

WHILE_EXAMPLES = ["while true & false do L = n", "L = n ; L = (n+n)"]

# grammar mined by an ideal run on WHILE_EXAMPLES
IDEAL_WHILE = """\
start: t0
t0 -> "while " t9 " do " t0
t0 -> "L = " t3
t0 -> t0 " ; " t0
t9 -> t9 " & " t9
t9 -> "true"
t9 -> "false"
t3 -> "(" t3 "+" t3 ")"
t3 -> "n"
"""


def char_label(c: str) -> str:
    return f"c_{c}" if c.isalnum() else f"c{ord(c)}"


def tok(c: str) -> TreeNode:
    """Character nonterminal node ``c_x -> "x"``."""
    return TreeNode(char_label(c), [TreeNode(Terminal(c), text=c)])


def node(label: str, *parts) -> TreeNode:
    """Internal node; string parts expand to one character node per character."""
    kids = []
    for p in parts:
        if isinstance(p, str):
            kids.extend(tok(c) for c in p)
        else:
            kids.append(p)
    return TreeNode(label, kids)


def treeset(*trees: TreeNode) -> TreeSet:
    return TreeSet(trees, LabelPool(1000))


@pytest.fixture(scope="session")
def g_while():
    return load_benchmark("while")


@pytest.fixture(scope="session")
def g_arith():
    return load_benchmark("arith")


@pytest.fixture(scope="session")
def ideal_while():
    return deserialize(IDEAL_WHILE)


@pytest.fixture
def run_cli(tmp_path):
    import os
    import subprocess

    def run(*args, env=None, cwd=None):
        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        return subprocess.run([sys.executable, "-m", "bubblegram", *map(str, args)],
                              capture_output=True, text=True, env=full_env,
                              cwd=cwd or tmp_path, timeout=600)

    return run


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
