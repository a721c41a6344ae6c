import itertools

import numpy as np
import pytest

from sect.complex import build_complex


def random_complex(rng, max_vertices=12, dim=2, max_simplices=10):
    """Closure of a few random simplices on at most ``max_vertices`` points."""
    n = int(rng.integers(1, max_vertices + 1))
    verts = rng.normal(size=(n, dim))
    simplices = []
    for _ in range(int(rng.integers(1, max_simplices + 1))):
        size = int(rng.integers(1, min(4, n) + 1))
        simplices.append(tuple(rng.choice(n, size=size, replace=False)))
    return build_complex(verts, simplices)


def random_complexes(count, seed, **kw):
    rng = np.random.default_rng(seed)
    return [random_complex(rng, **kw) for _ in range(count)]


def gf2_rank_dense(M):
    """Row reduction on a dense 0/1 array; independent of the bit-packed path."""
    M = (np.array(M, dtype=np.uint8) & 1).copy()
    rows, cols = M.shape
    rank = 0
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if M[r, c]), None)
        if pivot is None:
            continue
        M[[rank, pivot]] = M[[pivot, rank]]
        for r in range(rows):
            if r != rank and M[r, c]:
                M[r] ^= M[rank]
        rank += 1
    return rank


def brute_betti(K):
    """Betti numbers from dense boundary matrices built by enumeration."""
    index = [{s: i for i, s in enumerate(K.simplex_tuples(k))} for k in range(4)]
    ranks = [0] * 5
    for k in range(1, 4):
        M = np.zeros((K.count(k - 1), K.count(k)), dtype=np.uint8)
        for j, s in enumerate(K.simplex_tuples(k)):
            for face in itertools.combinations(s, k):
                M[index[k - 1][face], j] = 1
        ranks[k] = gf2_rank_dense(M) if M.size else 0
    return [K.count(k) - ranks[k] - ranks[k + 1] for k in range(max(2, K.top_degree) + 1)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for the acceptance summary, then assert."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
