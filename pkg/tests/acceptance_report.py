"""Collects one PASS/FAIL line per acceptance criterion for the test summary."""

LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    verdict = "PASS" if ok else "FAIL"
    LINES.append(f"criterion {number} ({title}): {verdict} - {detail}")
