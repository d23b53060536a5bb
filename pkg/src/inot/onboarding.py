"""Turns a natural-language device declaration into a DeviceInventory.

Two routes produce the same structured output: an LLM adapter given a fixed
extraction prompt, and a deterministic rule-based extractor for offline use.
The rule-based route is English-only; multilingual input is delegated
entirely to the LLM route.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .adapters import LlmTextAdapter
from .core import SYNONYMS, VOCABULARY, DeviceInventory, canonicalize_type
from .errors import EmptyInput, MalformedResponse, NoDevicesFound, NonPositiveCount

ONBOARDING_PROMPT_TEMPLATE = """You are an AI assistant responsible for onboarding users into a smart IoT control system. Your task is to extract the number and type of IoT devices mentioned by the user in natural language input.

Rules:
1. Identify the device type (e.g., "fan", "light", "AC").
2. Extract the quantity of each device.
3. Ignore unrelated information and return only the structured device data.
4. Store the output as a JSON dictionary with device types as keys and their counts as values.

Example Input: "There are 2 fans and 1 light in this room."
Expected Output: {{"fan": 2, "light": 1}}

User Input: "{user_text}"
"""

NUMBER_WORDS = {
    "one": 1,
    "two": 2,
    "three": 3,
    "four": 4,
    "five": 5,
    "six": 6,
    "seven": 7,
    "eight": 8,
    "nine": 9,
    "ten": 10,
}


@dataclass(frozen=True)
class OnboardingPrompt:
    text: str


def build_onboarding_prompt(user_text: str) -> OnboardingPrompt:
    """Full extraction prompt: fixed rules and example, user utterance last.

    The utterance is embedded unchanged; no translation or cleanup happens
    here (language handling is the model's job).
    """
    if not user_text.strip():
        raise EmptyInput("onboarding text is empty")
    return OnboardingPrompt(text=ONBOARDING_PROMPT_TEMPLATE.format(user_text=user_text))


# Matches the bracket-delimited mapping variant some models emit,
# e.g. ["fan": 2, "light": 1], which is not valid JSON.
_BRACKET_MAP_RE = re.compile(r"\[\s*(?:\"[^\"]+\"\s*:\s*\d+\s*,\s*)*\"[^\"]+\"\s*:\s*\d+\s*\]")
_BRACE_MAP_RE = re.compile(r"\{[^{}]*\}")


def _coerce_count(value) -> Optional[int]:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value == int(value):
        return int(value)
    if isinstance(value, str) and value.strip().isdigit():
        return int(value.strip())
    return None


def parse_inventory_response(llm_text: str) -> DeviceInventory:
    """Extract the first string->integer mapping from LLM output text.

    Accepts proper JSON objects and the bracket variant ["fan": 2]. Keys are
    canonicalized; duplicate keys after canonicalization sum.
    """
    candidates: list[str] = []
    for match in _BRACE_MAP_RE.finditer(llm_text):
        candidates.append(match.group(0))
    for match in _BRACKET_MAP_RE.finditer(llm_text):
        candidates.append("{" + match.group(0)[1:-1] + "}")

    for blob in candidates:
        try:
            parsed = json.loads(blob)
        except ValueError:
            continue
        if not isinstance(parsed, dict) or not parsed:
            continue
        counts: dict[str, int] = {}
        ok = True
        for key, value in parsed.items():
            count = _coerce_count(value)
            if count is None:
                ok = False
                break
            if count < 1:
                raise NonPositiveCount(f"count for {key!r} is {count}")
            if not str(key).strip():
                ok = False
                break
            canon = canonicalize_type(str(key))
            counts[canon] = counts.get(canon, 0) + count
        if ok and counts:
            return DeviceInventory(counts=counts)
    raise MalformedResponse("no device mapping found in response")


_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*")

# Noun phrases the rule-based extractor recognizes, including plural and
# synonym surface forms; value is the canonical type.
_KNOWN_NOUNS: dict[tuple[str, ...], str] = {}
for _surface in list(VOCABULARY) + list(SYNONYMS):
    _canon = canonicalize_type(_surface)
    _words = tuple(_surface.split(" "))
    _KNOWN_NOUNS[_words] = _canon
    # plural of the last word
    _plural = _words[:-1] + (_words[-1] + ("es" if _words[-1].endswith(("s", "sh", "ch", "x")) else "s"),)
    _KNOWN_NOUNS[_plural] = _canon


def extract_inventory_rulebased(user_text: str) -> DeviceInventory:
    """Deterministic English extractor.

    Scans for a count (digits or one..ten) within the two tokens preceding a
    known device noun; a bare noun counts as one; repeated mentions of a type
    sum. Raises NoDevicesFound when nothing matches.
    """
    if not user_text.strip():
        raise EmptyInput("onboarding text is empty")
    tokens = _TOKEN_RE.findall(user_text.lower())
    counts: dict[str, int] = {}
    i = 0
    while i < len(tokens):
        matched = None
        span = 1
        for length in (2, 1):  # prefer multi-word nouns ("air conditioner")
            phrase = tuple(tokens[i : i + length])
            if len(phrase) == length and phrase in _KNOWN_NOUNS:
                matched = _KNOWN_NOUNS[phrase]
                span = length
                break
        if matched is None:
            i += 1
            continue
        count = 1
        for back in (1, 2):  # closest preceding token wins
            j = i - back
            if j < 0:
                break
            tok = tokens[j]
            if tok.isdigit():
                count = int(tok)
                break
            if tok in NUMBER_WORDS:
                count = NUMBER_WORDS[tok]
                break
        if count >= 1:  # "0 fans" is a non-mention, not an inventory entry
            counts[matched] = counts.get(matched, 0) + count
        i += span
    if not counts:
        raise NoDevicesFound(f"no known devices in {user_text!r}")
    return DeviceInventory(counts=counts)


def extract_inventory(user_text: str, adapter: Optional[LlmTextAdapter] = None) -> DeviceInventory:
    """LLM route when an adapter is configured, rule-based route otherwise."""
    if adapter is None:
        return extract_inventory_rulebased(user_text)
    prompt = build_onboarding_prompt(user_text)
    reply = adapter.complete(prompt.text)
    return parse_inventory_response(reply)
