"""Regenerate the exact-frequency counts fixture.

Each setting's counts are N/4 * (1 + mA + mB + E) etc., with the target values
given in units of 1e-4 so every count is an exact integer.  Run from the
repository root: ``python tests/fixtures/make_fixtures.py``.
"""
from pathlib import Path

from chshcheck.formats import write_counts
from chshcheck.simulation import CountsRecord

N_PER_SETTING = 32_520_000
# (E, mA, mB) in units of 1e-4; marginals shifted only where a delta is nonzero
TARGETS = {
    ("a", "b"): (5183, 127, 0),
    ("a", "b_prime"): (-5183, 0, 2),
    ("a_prime", "b"): (5183, 176, 0),
    ("a_prime", "b_prime"): (5183, 0, 0),
}


def exact_rows(n=N_PER_SETTING, targets=TARGETS):
    unit = n // 4 // 10_000
    assert unit * 4 * 10_000 == n
    rows = {}
    for pair, (e, ma, mb) in targets.items():
        rows[pair] = (
            unit * (10_000 + ma + mb + e),
            unit * (10_000 + ma - mb - e),
            unit * (10_000 - ma + mb - e),
            unit * (10_000 - ma - mb + e),
        )
    return CountsRecord(rows)


def asymmetric_counts_text() -> str:
    return write_counts(
        exact_rows(),
        comments=[
            "exact-frequency counts: S = 2.0732, deltas (0.0127, 0.0176, 0.0000, 0.0002)",
            f"{N_PER_SETTING} shots per setting, so stderr(S) is 0.0003 to four decimals",
        ],
    )


if __name__ == "__main__":
    here = Path(__file__).parent
    (here / "asymmetric_counts.csv").write_text(asymmetric_counts_text(), encoding="utf-8")
