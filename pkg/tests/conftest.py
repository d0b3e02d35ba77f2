import itertools

import pytest

from poq import lattice


def naive_f(A, y, q, b, x):
    """Reference evaluation written directly from the definition."""
    out = ""
    for row, yi in zip(A, y):
        v = (sum(a * xi for a, xi in zip(row, x)) + b * yi) % q
        out += "1" if v >= q // 2 else "0"
    return out


def naive_preimages(A, y, q, w):
    n = len(A[0])
    zero = {x for x in itertools.product(range(q), repeat=n) if naive_f(A, y, q, 0, x) == w}
    one = {x for x in itertools.product(range(q), repeat=n) if naive_f(A, y, q, 1, x) == w}
    return zero, one


def naive_hash(b, x):
    """The hardware hash polynomial written out by hand, including the repeated x2*x3."""
    x1, x2, x3, x4 = (int(c) for c in x)
    return (b ^ x1 ^ (b & x1) ^ (x2 & x3) ^ (x1 & x4) ^ (x2 & x3) ^ (b & x3 & x4)) & 1


@pytest.fixture(params=lattice.BUILTIN_IDS)
def builtin_instance(request):
    return lattice.builtin(request.param)


# One line per acceptance criterion, echoed in the terminal summary so the
# verdicts survive output capture.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
