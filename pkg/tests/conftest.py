from pathlib import Path

import pytest

VECTORS = Path(__file__).parent / "vectors"


def read_vectors(name: str) -> list[list[bytes]]:
    """Rows of a hex vector file; ``-`` stands for an empty field."""
    rows = []
    for line in (VECTORS / name).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        rows.append([b"" if f == "-" else bytes.fromhex(f) for f in line.split()])
    return rows


@pytest.fixture
def vectors():
    return read_vectors


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion's outcome as a printed PASS/FAIL line."""

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
