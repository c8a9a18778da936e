"""Collects one verdict line per acceptance criterion for the session summary."""

RESULTS: dict[str, str] = {}


def record(number: str, passed: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return line
