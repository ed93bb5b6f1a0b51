"""CLI compatibility wrapper for the recourse experiment harness."""

from __future__ import annotations

from typing import Optional, Sequence

from .__main__ import main as _run_main


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point used by ``python -m diverse_recourse.cli``."""

    return _run_main(argv)


if __name__ == "__main__":  # pragma: no cover - manual execution helper
    raise SystemExit(main())
