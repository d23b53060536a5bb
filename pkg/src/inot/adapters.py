"""Adapter contracts for the external AI models, plus offline substitutes.

All models sit behind plain HTTP JSON contracts so deployments can swap
implementations freely:

  text model:     POST {"prompt": s}                  -> {"text": s}
  vision model:   POST {"prompt": s, "image_b64": s}  -> {"text": s}
  detector:       POST {"image_b64": s, "prompts": [s]}
                    -> {"detections": [{"prompt_index": i, "box": [x1,y1,x2,y2], "score": f}]}

Fixture adapters read canned responses from disk so the whole pipeline runs
with no model endpoints configured.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Protocol

import httpx

from .errors import AdapterProtocolError, AdapterTimeout, MissingFile

DEFAULT_TIMEOUT = 30.0


class LlmTextAdapter(Protocol):
    def complete(self, prompt: str) -> str: ...


class VlmAdapter(Protocol):
    def complete_with_image(self, prompt: str, image_b64: str) -> str: ...


class DetectorAdapter(Protocol):
    def detect(self, image_b64: str, prompts: list[str]) -> list[dict]:
        """Return raw detection dicts: prompt_index, box, score."""
        ...


def _post_json(endpoint: str, payload: dict, timeout: float) -> dict:
    try:
        response = httpx.post(endpoint, json=payload, timeout=timeout)
    except (httpx.TimeoutException, httpx.ConnectError) as exc:
        raise AdapterTimeout(f"adapter unreachable: {endpoint}") from exc
    except httpx.HTTPError as exc:
        raise AdapterProtocolError(f"transport failure: {exc}") from exc
    if response.status_code != 200:
        raise AdapterProtocolError(f"adapter returned HTTP {response.status_code}")
    try:
        body = response.json()
    except ValueError as exc:
        raise AdapterProtocolError("adapter response is not JSON") from exc
    if not isinstance(body, dict):
        raise AdapterProtocolError("adapter response is not a JSON object")
    return body


class HttpLlmAdapter:
    """Text completion over the wire contract above. Temperature is the
    endpoint's concern; conforming deployments pin it to deterministic."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        body = _post_json(self.endpoint, {"prompt": prompt}, self.timeout)
        if "text" not in body or not isinstance(body["text"], str):
            raise AdapterProtocolError("missing 'text' in adapter response")
        return body["text"]


class HttpVlmAdapter:
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def complete_with_image(self, prompt: str, image_b64: str) -> str:
        body = _post_json(self.endpoint, {"prompt": prompt, "image_b64": image_b64}, self.timeout)
        if "text" not in body or not isinstance(body["text"], str):
            raise AdapterProtocolError("missing 'text' in adapter response")
        return body["text"]


class HttpDetectorAdapter:
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def detect(self, image_b64: str, prompts: list[str]) -> list[dict]:
        body = _post_json(self.endpoint, {"image_b64": image_b64, "prompts": prompts}, self.timeout)
        detections = body.get("detections")
        if not isinstance(detections, list):
            raise AdapterProtocolError("missing 'detections' list in adapter response")
        return detections


def prompt_key(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class FixtureLlmAdapter:
    """Replays canned text responses keyed by sha256(prompt) from a directory
    of ``<hash>.txt`` files. Deterministic by construction."""

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def complete(self, prompt: str) -> str:
        path = self.fixture_dir / f"{prompt_key(prompt)}.txt"
        if not path.exists():
            raise MissingFile(f"no canned response for prompt hash {prompt_key(prompt)[:12]}...")
        return path.read_text(encoding="utf-8")

    def complete_with_image(self, prompt: str, image_b64: str) -> str:
        return self.complete(prompt)

    @staticmethod
    def record(fixture_dir: str | Path, prompt: str, text: str) -> Path:
        path = Path(fixture_dir) / f"{prompt_key(prompt)}.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        return path


class FixtureDetectorAdapter:
    """Serves a fixed detection set regardless of image content.

    Each stored entry is a canonical Detection dict; a query returns the
    entries whose label matches the queried prompt's type, re-expressed in
    the detector wire shape. Over-detection in the fixture is intentional:
    refinement is what prunes it.
    """

    def __init__(self, detections: list[dict], prompt_types: dict[str, str] | None = None):
        self._detections = list(detections)
        # prompt string -> canonical type, filled by callers that know the
        # prompt table; falls back to matching the last prompt word.
        self._prompt_types = dict(prompt_types or {})

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureDetectorAdapter":
        p = Path(path)
        if not p.exists():
            raise MissingFile(f"detection fixture missing: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise AdapterProtocolError(f"detection fixture is not JSON: {p}") from exc
        if not isinstance(data, list):
            raise AdapterProtocolError("detection fixture must be a JSON array")
        return cls(detections=data)

    def register_prompt(self, prompt: str, label: str) -> None:
        self._prompt_types[prompt] = label

    def _label_for(self, prompt: str) -> str:
        if prompt in self._prompt_types:
            return self._prompt_types[prompt]
        return prompt.split()[-1].lower()

    def detect(self, image_b64: str, prompts: list[str]) -> list[dict]:
        out = []
        for index, prompt in enumerate(prompts):
            label = self._label_for(prompt)
            for entry in self._detections:
                if entry.get("label") == label:
                    out.append(
                        {"prompt_index": index, "box": entry["box"], "score": entry["score"]}
                    )
        return out
