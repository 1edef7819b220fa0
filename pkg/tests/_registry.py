"""Outcome of each acceptance criterion, printed in the pytest summary."""

ACCEPTANCE = {}


def record(n: int, title: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE[n] = (ok, title, detail)
    print(f"{'PASS' if ok else 'FAIL'}  [{n}] {title}: {detail}")
    return ok
