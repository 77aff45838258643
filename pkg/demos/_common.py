"""Shared paths for the demo scripts."""

from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "tests" / "fixtures"


def heading(text: str) -> None:
    print(f"\n== {text} ==")
