"""Natural-language instruction -> executable ControlCommands.

Two routes: an LLM adapter given a spatially grounded prompt, and a
deterministic grammar over the phrasing people actually use for device
control ("switch on the light that is near the AC"). Both end in the same
ControlCommand shape.

Deterministic grammar, informally:

    command   := action target
    action    := ("turn"|"switch") ("on"|"off") | "toggle"
                 | "set" target "brightness to" N
    target    := [cardinality] [superlative] type-noun [locator]
    cardinality := "all" | "both" | "the"? (digits | "two".."ten")
    superlative := leftmost | rightmost | topmost | bottommost | bottom | top
    locator   := relation anchor            (near/above/below/left of/...)
                 | "on the" ("left"|"right") ("wall"|"side"|"half")?

Qualifiers are normalized to locator -> superlative -> cardinality order so
that sequential left-to-right application matches the restrictive reading
of the noun phrase ("the leftmost light near the window" narrows by
location first).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

from .core import DeviceRecord, canonicalize_type
from .errors import (
    AmbiguousTarget,
    EmptyType,
    NoDevices,
    NoMatch,
    NoSuchType,
    ParseFailure,
    UnknownAction,
    UnknownDevice,
    UnparsableCommand,
)
from .topology import RelationKind, SpatialGraph, TopologyReport, superlative

ACTION_KINDS = ("switch_on", "switch_off", "toggle", "adjust_brightness")


@dataclass(frozen=True)
class Action:
    kind: str
    level: Optional[int] = None  # brightness percent, adjust_brightness only

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise UnknownAction(f"unsupported action {self.kind!r}")
        if self.kind == "adjust_brightness":
            if self.level is None or not 0 <= int(self.level) <= 100:
                raise UnknownAction(f"brightness level must be 0-100, got {self.level}")
        elif self.level is not None:
            raise UnknownAction(f"{self.kind} takes no level")

    def to_json(self) -> Any:
        if self.kind == "adjust_brightness":
            return {"kind": self.kind, "level": int(self.level)}
        return self.kind

    @classmethod
    def from_json(cls, data: Any) -> "Action":
        if isinstance(data, str):
            return cls(kind=data)
        if isinstance(data, dict):
            return cls(kind=str(data.get("kind")), level=data.get("level"))
        raise UnknownAction(f"unrecognized action payload {data!r}")


@dataclass(frozen=True)
class ControlCommand:
    uuid: str
    action: Action

    def to_json(self) -> dict[str, Any]:
        return {"uuid": self.uuid, "action": self.action.to_json()}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "ControlCommand":
        return cls(uuid=str(data["uuid"]), action=Action.from_json(data["action"]))


@dataclass(frozen=True)
class Superlative:
    axis: str  # leftmost | rightmost | topmost | bottommost


@dataclass(frozen=True)
class Proximity:
    relation: str  # near | above | below | left_of | right_of
    anchor: str  # canonicalized device type or landmark name


@dataclass(frozen=True)
class Region:
    side: str  # left | right (half-plane split at image center-x)


@dataclass(frozen=True)
class Cardinality:
    count: Optional[int]  # None means "all"


Qualifier = Union[Superlative, Proximity, Region, Cardinality]


@dataclass(frozen=True)
class CommandAST:
    action: Action
    device_type: str
    qualifiers: tuple[Qualifier, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "qualifiers", tuple(self.qualifiers))
        if sum(isinstance(q, Cardinality) for q in self.qualifiers) > 1:
            raise UnparsableCommand("at most one cardinality qualifier allowed")


_ARTICLES = {"the", "a", "an", "my", "that", "this", "please"}
_GLUE = {"that", "is", "which", "s", "are"}
_SUPERLATIVES = {
    "leftmost": "leftmost",
    "rightmost": "rightmost",
    "topmost": "topmost",
    "top": "topmost",
    "uppermost": "topmost",
    "bottommost": "bottommost",
    "bottom": "bottommost",
    "lowest": "bottommost",
}
_NUMBER_WORDS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}
# multi-token relation markers first so "next to" wins over bare tokens
_RELATION_MARKERS: list[tuple[tuple[str, ...], str]] = [
    (("to", "the", "left", "of"), "left_of"),
    (("to", "the", "right", "of"), "right_of"),
    (("left", "of"), "left_of"),
    (("right", "of"), "right_of"),
    (("next", "to"), "near"),
    (("close", "to"), "near"),
    (("near",), "near"),
    (("beside",), "near"),
    (("by",), "near"),
    (("above",), "above"),
    (("over",), "above"),
    (("below",), "below"),
    (("under",), "below"),
    (("beneath",), "below"),
    (("on",), "near"),  # "on the desk"; region form handled separately
]
_REGION_SIDES = {"left", "right"}
_REGION_TAILS = {"wall", "side", "half"}


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _match_relation(tokens: list[str], i: int) -> Optional[tuple[str, int]]:
    for marker, relation in _RELATION_MARKERS:
        if tuple(tokens[i : i + len(marker)]) == marker:
            return relation, len(marker)
    return None


def _parse_region(tokens: list[str], i: int) -> Optional[tuple[Region, int]]:
    """Recognize 'on the left (wall|side|half)?' style half-plane locators."""
    if i < len(tokens) and tokens[i] == "on":
        j = i + 1
        if j < len(tokens) and tokens[j] == "the":
            j += 1
        if j < len(tokens) and tokens[j] in _REGION_SIDES:
            side = tokens[j]
            j += 1
            if j < len(tokens) and tokens[j] in _REGION_TAILS:
                j += 1
            return Region(side=side), j - i
    return None


def _parse_target(tokens: list[str]) -> tuple[str, list[Qualifier]]:
    """Parse '[cardinality] [superlative] noun [locator]' from tokens."""
    i = 0
    cardinality: Optional[Cardinality] = None
    sup: Optional[Superlative] = None

    while i < len(tokens) and tokens[i] in _ARTICLES:
        i += 1
    if i < len(tokens):
        tok = tokens[i]
        if tok == "all":
            cardinality = Cardinality(count=None)
            i += 1
            if i < len(tokens) and tokens[i] == "of":
                i += 1
        elif tok == "both":
            cardinality = Cardinality(count=2)
            i += 1
        elif tok.isdigit():
            cardinality = Cardinality(count=int(tok))
            i += 1
        elif tok in _NUMBER_WORDS and i + 1 < len(tokens):
            cardinality = Cardinality(count=_NUMBER_WORDS[tok])
            i += 1
    while i < len(tokens) and tokens[i] in _ARTICLES:
        i += 1
    if i < len(tokens) and tokens[i] in _SUPERLATIVES:
        sup = Superlative(axis=_SUPERLATIVES[tokens[i]])
        i += 1

    # noun phrase runs until a locator marker (glue words skipped)
    noun_tokens: list[str] = []
    locator: Optional[Qualifier] = None
    while i < len(tokens):
        region = _parse_region(tokens, i)
        if region is not None:
            locator = region[0]
            i += region[1]
            break
        relation = _match_relation(tokens, i)
        if relation is not None and noun_tokens:
            rel, span = relation
            i += span
            anchor_tokens = [t for t in tokens[i:] if t not in _ARTICLES]
            if not anchor_tokens:
                raise UnparsableCommand("locator has no anchor")
            locator = Proximity(relation=rel, anchor=canonicalize_type(" ".join(anchor_tokens)))
            i = len(tokens)
            break
        if tokens[i] in _GLUE and noun_tokens:
            i += 1
            continue
        if tokens[i] in _ARTICLES:
            i += 1
            continue
        noun_tokens.append(tokens[i])
        i += 1

    if not noun_tokens:
        raise UnparsableCommand("no device noun found")
    try:
        device_type = canonicalize_type(" ".join(noun_tokens))
    except EmptyType as exc:
        raise UnparsableCommand("no device noun found") from exc

    qualifiers: list[Qualifier] = []
    if locator is not None:
        qualifiers.append(locator)
    if sup is not None:
        qualifiers.append(sup)
    if cardinality is not None:
        qualifiers.append(cardinality)
    return device_type, qualifiers


_BRIGHTNESS_RE = re.compile(r"\bbrightness\s+(?:to\s+)?(\d{1,3})\s*%?\b")


def parse_spatial_command(text: str) -> CommandAST:
    """Deterministic parse of a spatially-qualified control instruction."""
    if not text or not text.strip():
        raise UnparsableCommand("empty command")
    lowered = text.lower().strip()

    if re.match(r"^\s*set\b", lowered):
        # "set brightness of <target> to N" puts the target after "of"
        m = re.match(
            r"^\s*set\s+(?:the\s+)?brightness\s+of\s+(.+?)\s+to\s+(\d{1,3})\s*%?\s*\.?\s*$",
            lowered,
        )
        if m:
            target_text, level = m.group(1), int(m.group(2))
        else:
            m = _BRIGHTNESS_RE.search(lowered)
            if not m:
                raise UnknownAction("set-commands must specify 'brightness to N'")
            level = int(m.group(1))
            target_text = re.sub(r"^\s*set\b", "", lowered[: m.start()])
        if level > 100:
            raise UnknownAction(f"brightness level must be 0-100, got {level}")
        tokens = _tokens(target_text)
        if not tokens:
            raise UnparsableCommand("no target in set-brightness command")
        device_type, qualifiers = _parse_target(tokens)
        return CommandAST(
            action=Action(kind="adjust_brightness", level=level),
            device_type=device_type,
            qualifiers=tuple(qualifiers),
        )

    m = re.match(r"^\s*(?:please\s+)?(turn|switch)\s+(on|off)\b(.*)$", lowered, re.S)
    if m:
        action = Action(kind="switch_on" if m.group(2) == "on" else "switch_off")
        rest = m.group(3)
    elif re.match(r"^\s*(?:please\s+)?toggle\b", lowered):
        action = Action(kind="toggle")
        rest = re.sub(r"^\s*(?:please\s+)?toggle\b", "", lowered)
    else:
        raise UnparsableCommand(f"no recognized action verb in {text!r}")

    tokens = _tokens(rest)
    if not tokens:
        raise UnparsableCommand("command names no device")
    device_type, qualifiers = _parse_target(tokens)
    return CommandAST(action=action, device_type=device_type, qualifiers=tuple(qualifiers))


_PLURAL_ES = ("s", "sh", "ch", "x", "z")


def _pluralize(noun: str) -> str:
    return noun + ("es" if noun.endswith(_PLURAL_ES) else "s")


def format_command(ast: CommandAST) -> str:
    """Render an AST back to grammar-conformant English (parse round-trips)."""
    sup = next((q for q in ast.qualifiers if isinstance(q, Superlative)), None)
    prox = next((q for q in ast.qualifiers if isinstance(q, Proximity)), None)
    region = next((q for q in ast.qualifiers if isinstance(q, Region)), None)
    card = next((q for q in ast.qualifiers if isinstance(q, Cardinality)), None)

    noun = ast.device_type
    if card is not None:
        lead = "all the" if card.count is None else f"the {card.count}"
        noun_part = f"{lead} {sup.axis + ' ' if sup else ''}{_pluralize(noun)}"
    else:
        noun_part = f"the {sup.axis + ' ' if sup else ''}{noun}"

    tail = ""
    if prox is not None:
        word = {"near": "near", "above": "above", "below": "below",
                "left_of": "left of", "right_of": "right of"}[prox.relation]
        tail = f" {word} the {prox.anchor}"
    elif region is not None:
        tail = f" on the {region.side} wall"

    if ast.action.kind == "adjust_brightness":
        return f"set {noun_part}{tail} brightness to {ast.action.level}"
    verb = {"switch_on": "switch on", "switch_off": "switch off", "toggle": "toggle"}[
        ast.action.kind
    ]
    return f"{verb} {noun_part}{tail}"


# --- LLM route ---------------------------------------------------------------

_ACTION_ALIASES = {
    "switch_on": "switch_on", "turn_on": "switch_on", "on": "switch_on",
    "power_on": "switch_on", "enable": "switch_on",
    "switch_off": "switch_off", "turn_off": "switch_off", "off": "switch_off",
    "power_off": "switch_off", "disable": "switch_off",
    "toggle": "toggle",
    "adjust_brightness": "adjust_brightness", "set_brightness": "adjust_brightness",
    "brightness": "adjust_brightness",
}

_NAME_VARIANT_RE = re.compile(r"^([a-z][a-z ]*?)[ _-]*0*(\d+)$")


def _resolve_device(token: str, records: Sequence[DeviceRecord]) -> DeviceRecord:
    """Accept a uuid, an exact name, or a loose name variant like 'light2'."""
    token = token.strip().strip("\"'")
    for rec in records:
        if rec.uuid == token:
            return rec
    lowered = token.lower()
    for rec in records:
        if rec.name == lowered:
            return rec
    m = _NAME_VARIANT_RE.match(lowered)
    if m:
        canonical = f"{m.group(1).strip().replace(' ', '_')}_{int(m.group(2)):02d}"
        for rec in records:
            if rec.name == canonical:
                return rec
    raise UnknownDevice(f"no device matches {token!r}")


def _normalize_action(raw: str, value: Any = None) -> Action:
    text = str(raw).strip().lower().replace("-", "_").replace(" ", "_")
    level: Optional[int] = None
    m = re.match(r"^([a-z_]+?)[_:(\s]*(\d{1,3})?\)?$", text)
    if m:
        text = m.group(1).rstrip("_:")
        if m.group(2) is not None:
            level = int(m.group(2))
    if text not in _ACTION_ALIASES:
        raise UnknownAction(f"unrecognized action {raw!r}")
    kind = _ACTION_ALIASES[text]
    if kind == "adjust_brightness":
        if level is None and value is not None:
            try:
                level = int(value)
            except (TypeError, ValueError):
                raise UnknownAction(f"brightness value {value!r} is not an integer")
        if level is None:
            raise UnknownAction("brightness action without a level")
        if not 0 <= level <= 100:
            raise UnknownAction(f"brightness level must be 0-100, got {level}")
        return Action(kind=kind, level=level)
    return Action(kind=kind)


_BRACKET_CMD_RE = re.compile(
    r"\[\s*UUID\s*:\s*([^,\]]+?)\s*,\s*Action\s*:\s*([^\]]+?)\s*\]", re.IGNORECASE
)


def _iter_json_objects(text: str):
    """Yield parseable JSON values embedded in text, in positional order, so
    a wrapping array wins over the objects inside it."""
    decoder = json.JSONDecoder()
    for idx, char in enumerate(text):
        if char not in "{[":
            continue
        try:
            obj, _ = decoder.raw_decode(text[idx:])
        except ValueError:
            continue
        yield obj


def parse_llm_command_response(
    text: str, records: Sequence[DeviceRecord]
) -> list[ControlCommand]:
    """Parse either model output form into ControlCommands.

    Form (a): '[UUID: fan-01, Action: switch_on]', possibly repeated.
    Form (b): '{"device": "light2", "command": "switch_on"}' or a JSON array
    of such objects. Device names in either legacy style resolve against the
    session records; action spellings are normalized.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseFailure("empty model response")

    commands: list[ControlCommand] = []
    for m in _BRACKET_CMD_RE.finditer(text):
        rec = _resolve_device(m.group(1), records)
        commands.append(ControlCommand(uuid=rec.uuid, action=_normalize_action(m.group(2))))
    if commands:
        return commands

    for obj in _iter_json_objects(text):
        items = obj if isinstance(obj, list) else [obj]
        batch: list[ControlCommand] = []
        for item in items:
            if not isinstance(item, dict):
                batch = []
                break
            device = item.get("device") or item.get("uuid") or item.get("name")
            action = item.get("command") or item.get("action")
            if device is None or action is None:
                batch = []
                break
            rec = _resolve_device(str(device), records)
            batch.append(
                ControlCommand(
                    uuid=rec.uuid,
                    action=_normalize_action(str(action), item.get("value", item.get("level"))),
                )
            )
        if batch:
            return batch

    raise ParseFailure("no command structure found in model response")


# --- prompt construction ------------------------------------------------------

COMMAND_FORMAT_CLAUSE = "[UUID: device-uuid, Action: action]"


def _position_descriptor(
    rec: DeviceRecord, graph: SpatialGraph, record_uuids: set[str]
) -> str:
    cx, cy = rec.box.center()
    if graph.image_w > 0:
        h_words = ("left", "center", "right")
        h = h_words[min(2, int(3 * cx / graph.image_w))]
        v_words = ("top", "middle", "bottom")
        v = v_words[min(2, int(3 * cy / graph.image_h))] if graph.image_h > 0 else ""
        place = f"{h} {v}".strip()
    else:
        place = "unknown"
    # landmark targets are names, device targets are uuids
    lm_edges = [
        e
        for e in graph.lookup(rec.uuid, RelationKind.NEAREST_OF_TYPE)
        if e.object_id not in record_uuids
    ]
    nearest_lm = min(lm_edges, key=lambda e: (e.metric, e.object_id), default=None)
    if nearest_lm is None:
        return place
    near_ids = {e.object_id for e in graph.lookup(rec.uuid, RelationKind.NEAR)}
    if nearest_lm.object_id in near_ids:
        return f"{place}, near {nearest_lm.object_id}"
    return f"{place}, far from {nearest_lm.object_id}"


def build_command_prompt(
    user_text: str,
    records: Sequence[DeviceRecord],
    graph_or_report: Union[SpatialGraph, TopologyReport],
) -> str:
    """Prompt for the command LLM: intent first, devices with spatial context,
    explicit output-format instruction last."""
    if not records:
        raise NoDevices("command prompt needs at least one device record")
    lines = [f'User Command: "{user_text}"', "", "Device List:"]
    ordered = sorted(records, key=lambda r: r.name)
    if isinstance(graph_or_report, SpatialGraph):
        uuids = {r.uuid for r in records}
        for rec in ordered:
            lines.append(
                f"UUID: {rec.uuid}, Position: {_position_descriptor(rec, graph_or_report, uuids)}"
            )
    else:
        for rec in ordered:
            lines.append(f"UUID: {rec.uuid}, Name: {rec.name}")
        lines.extend(["", "Spatial Context:", graph_or_report.text])
    lines.extend(
        [
            "",
            "Based on the spatial information and user intent, identify the most "
            "appropriate device(s) and generate a control command in the following format:",
            COMMAND_FORMAT_CLAUSE,
            "",
            "Ensure your response is concise and contextually accurate.",
        ]
    )
    return "\n".join(lines)


# --- deterministic resolution --------------------------------------------------


def _anchor_instances(
    anchor: str, records: Sequence[DeviceRecord], graph: SpatialGraph
) -> list[str]:
    """Anchor ids: record uuids when the anchor is a device type, else the
    landmark name if the graph knows it."""
    uuids = [r.uuid for r in records if r.label == anchor]
    if uuids:
        return uuids
    if any(e.object_id == anchor or e.subject_id == anchor for e in graph.edges):
        return [anchor]
    return []


def resolve(
    ast: CommandAST,
    records: Sequence[DeviceRecord],
    graph: SpatialGraph,
) -> list[ControlCommand]:
    """Apply qualifiers as sequential filters over records of the target type.

    Ambiguity (multiple survivors without a cardinality) is an error carrying
    the candidate list; callers surface it for disambiguation rather than
    silently picking a device.
    """
    pool = [r for r in records if r.label == ast.device_type]
    if not pool:
        raise NoSuchType(f"no devices of type {ast.device_type!r}")

    metric: dict[str, float] = {}
    ranked_output = False

    for q in ast.qualifiers:
        if isinstance(q, Proximity):
            anchors = _anchor_instances(q.anchor, records, graph)
            if not anchors:
                raise NoMatch(f"anchor {q.anchor!r} matches no device or landmark")
            if q.relation == "near":
                kept = []
                for rec in pool:
                    hits = [
                        e
                        for e in graph.lookup(rec.uuid, RelationKind.NEAR)
                        if e.object_id in anchors
                    ]
                    if hits:
                        metric[rec.uuid] = min(e.metric for e in hits)
                        kept.append(rec)
                if not kept:
                    # sparse rooms: nobody clears the near threshold, so take
                    # the single closest candidate instead of failing
                    best = None
                    for rec in pool:
                        dists = [
                            e.metric
                            for e in graph.lookup(rec.uuid, RelationKind.NEAREST_OF_TYPE)
                            if e.object_id in anchors
                        ]
                        if dists:
                            d = min(dists)
                            key = (d, rec.name)
                            if best is None or key < best[0]:
                                best = (key, rec)
                    if best is None:
                        raise NoMatch(
                            f"no {ast.device_type!r} can be ranked against {q.anchor!r}"
                        )
                    metric[best[1].uuid] = best[0][0]
                    kept = [best[1]]
                pool = kept
            else:
                kind = RelationKind(q.relation)
                kept = []
                for rec in pool:
                    hits = [
                        e
                        for e in graph.lookup(rec.uuid, kind)
                        if e.object_id in anchors
                    ]
                    if hits:
                        diag = graph.image_diag or 1.0
                        metric[rec.uuid] = min(abs(e.metric) for e in hits) / diag
                        kept.append(rec)
                pool = kept
        elif isinstance(q, Region):
            if graph.image_w <= 0:
                raise NoMatch("graph carries no image width for wall regions")
            half = graph.image_w / 2.0
            if q.side == "left":
                pool = [r for r in pool if r.box.center()[0] < half]
            else:
                pool = [r for r in pool if r.box.center()[0] >= half]
        elif isinstance(q, Superlative):
            if pool:
                pool = [superlative(pool, ast.device_type, q.axis)]
        elif isinstance(q, Cardinality):
            ranked_output = True
            pool.sort(
                key=lambda r: (metric.get(r.uuid, float("inf")), -r.score, r.name)
            )
            if q.count is not None:
                pool = pool[: q.count]
        if not pool:
            raise NoMatch(f"no {ast.device_type!r} satisfies the qualifiers")

    if not ranked_output:
        pool.sort(key=lambda r: r.name)
        if len(pool) > 1:
            raise AmbiguousTarget(
                f"{len(pool)} devices of type {ast.device_type!r} match; qualify the command",
                candidates=[(r.uuid, r.name) for r in pool],
                action=ast.action,
            )
    return [ControlCommand(uuid=r.uuid, action=ast.action) for r in pool]


def resolve_text(
    text: str, records: Sequence[DeviceRecord], graph: SpatialGraph
) -> list[ControlCommand]:
    return resolve(parse_spatial_command(text), records, graph)
