"""Child-process adapters speaking newline-delimited JSON over stdio.

Adapters let external models plug into the pipeline without becoming
dependencies: a NER process can inject extra term occurrences, an
embedding process scores semantic similarity, and a corrector process
replaces the built-in correction scorer. One JSON object per request
line, one per response line.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from typing import Sequence

from .errors import AdapterUnavailable

__all__ = [
    "LineAdapter",
    "ExternalNer",
    "EmbeddingSimilarity",
    "ExternalCorrector",
]


class LineAdapter:
    """Lazily-spawned child process exchanging one JSON object per line."""

    def __init__(self, command: str | Sequence[str]):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc: subprocess.Popen[str] | None = None

    def _ensure(self) -> subprocess.Popen[str]:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise AdapterUnavailable(f"cannot start {self.command!r}: {exc}") from exc
        return self._proc

    def request(self, payload: dict) -> dict:
        proc = self._ensure()
        assert proc.stdin is not None and proc.stdout is not None
        try:
            proc.stdin.write(json.dumps(payload, ensure_ascii=False) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterUnavailable(f"adapter {self.command!r} pipe broke: {exc}") from exc
        if not line:
            raise AdapterUnavailable(f"adapter {self.command!r} closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterUnavailable(f"adapter {self.command!r} sent bad JSON: {line!r}") from exc

    def close(self) -> None:
        if self._proc is not None:
            if self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            self._proc.wait(timeout=5)
            self._proc = None

    def __enter__(self) -> "LineAdapter":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


class ExternalNer(LineAdapter):
    """Request ``{"text": ...}``; response ``{"terms": [{"term", "offset"}]}``."""

    def occurrences(self, text: str) -> list[tuple[str, int]]:
        response = self.request({"text": text})
        return [(t["term"], int(t["offset"])) for t in response.get("terms", [])]


class EmbeddingSimilarity(LineAdapter):
    """Request ``{"a": ..., "b": ...}``; response ``{"cosine": number}``."""

    def cosine(self, a: str, b: str) -> float:
        return float(self.request({"a": a, "b": b})["cosine"])

    __call__ = cosine


class ExternalCorrector(LineAdapter):
    """Request ``{"text", "candidates"}``; response ``{"best", "score"}``."""

    def correct(self, text: str, candidates: list[str]) -> tuple[str, float]:
        response = self.request({"text": text, "candidates": candidates})
        return str(response["best"]), float(response["score"])
