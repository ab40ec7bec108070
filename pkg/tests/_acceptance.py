"""Shared record of acceptance outcomes, printed in the terminal summary."""

RESULTS: dict[int, tuple[bool, str]] = {}


def record(num: int, ok: bool, text: str) -> None:
    RESULTS[num] = (ok, text)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {text}")
