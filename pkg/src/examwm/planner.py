"""Watermark planning: per-item target distractors, keyphrases, and tactics.

The default planner is deterministic and keyed: all choices come from an
HMAC-based pseudorandom function over (salt, exam id, item id), so a fixed
(schema, config, salt) triple always produces byte-identical plans and the
target never leaks without the salt. An LLM-backed planner can be plugged in;
its output is validated and silently replaced by the deterministic plan for
any item where it violates the plan invariants.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import re
import secrets
from dataclasses import dataclass, field, replace

from . import lexicon
from .errors import (
    ClientError,
    ConfigInvalid,
    MissingGold,
    NotLongForm,
    NotObjective,
    TiedSetTooLarge,
)
from .ingest import ItemSchema, QuestionItem
from .jsonutil import dumps_stable, loads

log = logging.getLogger(__name__)

TACTICS = ("hidden_text", "cmap_remap", "offcanvas_overlay")
PRESETS = ("v1", "v2")

# Fraction of items that receive glyph remapping under the lighter preset.
V1_REMAP_FRACTION = 0.25


@dataclass(frozen=True)
class ExamSalt:
    salt: bytes
    exam_id: str

    def __post_init__(self):
        if len(self.salt) != 32:
            raise ConfigInvalid("salt must be exactly 32 bytes")

    @classmethod
    def generate(cls, exam_id: str) -> "ExamSalt":
        return cls(salt=secrets.token_bytes(32), exam_id=exam_id)

    def fingerprint(self) -> str:
        """One-way digest safe to persist in manifests."""
        return hashlib.sha256(b"examwm-salt:" + self.salt).hexdigest()

    def to_file_bytes(self) -> bytes:
        return self.salt.hex().encode("ascii") + b"\n"

    @classmethod
    def from_file_bytes(cls, data: bytes, exam_id: str) -> "ExamSalt":
        return cls(salt=bytes.fromhex(data.strip().decode("ascii")), exam_id=exam_id)


def _prf(salt: ExamSalt, *parts: str) -> bytes:
    msg = "\x1f".join((salt.exam_id,) + parts).encode("utf-8")
    return hmac.new(salt.salt, msg, hashlib.sha256).digest()


def _prf_int(salt: ExamSalt, *parts: str) -> int:
    return int.from_bytes(_prf(salt, *parts), "big")


@dataclass
class ItemPlan:
    item_id: str
    qtype: str
    target: list[str] = field(default_factory=list)
    keyphrases: list[str] = field(default_factory=list)
    tactics: list[str] = field(default_factory=list)
    enabled: bool = True

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "item_id": self.item_id,
            "keyphrases": list(self.keyphrases),
            "qtype": self.qtype,
            "tactics": list(self.tactics),
            "target": list(self.target),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ItemPlan":
        return cls(
            item_id=d["item_id"], qtype=d["qtype"],
            target=list(d.get("target", [])),
            keyphrases=list(d.get("keyphrases", [])),
            tactics=list(d.get("tactics", [])),
            enabled=bool(d.get("enabled", True)),
        )


@dataclass
class WatermarkPlan:
    exam_id: str
    preset: str
    item_plans: list[ItemPlan]
    salt_fingerprint: str = ""

    def plan_for(self, item_id: str) -> ItemPlan:
        for p in self.item_plans:
            if p.item_id == item_id:
                return p
        raise ConfigInvalid(f"no plan for item {item_id}")

    def to_json(self) -> bytes:
        return dumps_stable({
            "exam_id": self.exam_id,
            "item_plans": [p.to_dict() for p in self.item_plans],
            "preset": self.preset,
            "salt_fingerprint": self.salt_fingerprint,
        })

    @classmethod
    def from_json(cls, data: bytes | str) -> "WatermarkPlan":
        d = loads(data)
        return cls(
            exam_id=d["exam_id"], preset=d["preset"],
            item_plans=[ItemPlan.from_dict(p) for p in d["item_plans"]],
            salt_fingerprint=d.get("salt_fingerprint", ""),
        )


@dataclass
class PlannerConfig:
    preset: str = "v2"
    tied_set_size: int = 1
    keyphrase_count: int = 3
    mode: str = "deterministic"  # deterministic | llm

    def validate(self) -> None:
        if self.preset not in PRESETS:
            raise ConfigInvalid(f"unknown preset {self.preset!r}")
        if self.tied_set_size < 1:
            raise ConfigInvalid("tied_set_size must be >= 1")
        if self.keyphrase_count < 1:
            raise ConfigInvalid("keyphrase_count must be >= 1")
        if self.mode not in ("deterministic", "llm"):
            raise ConfigInvalid(f"unknown planner mode {self.mode!r}")


def validate_item_plan(plan: ItemPlan, item: QuestionItem) -> None:
    """Raise ConfigInvalid if the plan violates its invariants for `item`."""
    if plan.qtype != item.qtype:
        raise ConfigInvalid(f"{plan.item_id}: qtype mismatch")
    if not plan.enabled:
        return
    if not plan.tactics:
        raise ConfigInvalid(f"{plan.item_id}: enabled plan with no tactics")
    for t in plan.tactics:
        if t not in TACTICS:
            raise ConfigInvalid(f"{plan.item_id}: unknown tactic {t!r}")
    if item.qtype in ("MCQ", "TF"):
        labels = set(item.option_labels())
        if not plan.target:
            raise ConfigInvalid(f"{plan.item_id}: objective item without target")
        for label in plan.target:
            if label not in labels:
                raise ConfigInvalid(f"{plan.item_id}: target {label!r} not an option")
            if item.gold is not None and label == item.gold:
                raise ConfigInvalid(f"{plan.item_id}: target equals gold answer")
    else:
        if not plan.keyphrases:
            raise ConfigInvalid(f"{plan.item_id}: LF item without keyphrases")
        if len(set(plan.keyphrases)) != len(plan.keyphrases):
            raise ConfigInvalid(f"{plan.item_id}: duplicate keyphrases")


# --- core planning operations ------------------------------------------------


def select_distractor(item: QuestionItem, salt: ExamSalt,
                      tied_set_size: int = 1) -> list[str]:
    """Keyed-PRF choice of incorrect option labels; never contains gold."""
    if item.qtype not in ("MCQ", "TF"):
        raise NotObjective(f"{item.id} is {item.qtype}")
    if item.gold is None:
        raise MissingGold(f"{item.id} has no gold answer")
    incorrect = [lab for lab in item.option_labels() if lab != item.gold]
    if tied_set_size > len(incorrect):
        raise TiedSetTooLarge(
            f"{item.id}: tied set {tied_set_size} exceeds {len(incorrect)} incorrect options")
    ranked = sorted(incorrect,
                    key=lambda lab: _prf_int(salt, "distractor", item.id, lab))
    return sorted(ranked[:tied_set_size])


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.lower()).strip()


def generate_keyphrases(item: QuestionItem, salt: ExamSalt, k: int = 3) -> list[str]:
    """k distinct lexicon phrases, none occurring verbatim in the stem."""
    if item.qtype != "LF":
        raise NotLongForm(f"{item.id} is {item.qtype}")
    if k < 1:
        raise ConfigInvalid("k must be >= 1")
    stem = _normalize(item.stem_text())
    phrases: list[str] = []
    counter = 0
    while len(phrases) < k:
        idx = _prf_int(salt, "keyphrase", item.id, str(counter))
        phrase = lexicon.phrase_at(idx)
        counter += 1
        if phrase in phrases or _normalize(phrase) in stem:
            continue
        phrases.append(phrase)
        if counter > 10000:
            raise ConfigInvalid("lexicon exhausted while avoiding stem collisions")
    return phrases


def _tactics_for(item_id: str, preset: str, remap_ids: set[str]) -> list[str]:
    if preset == "v2":
        return list(TACTICS)
    tactics = ["hidden_text"]
    if item_id in remap_ids:
        tactics.append("cmap_remap")
    return tactics


def _v1_remap_ids(schema: ItemSchema, salt: ExamSalt) -> set[str]:
    """The <= 25% of items that get glyph remapping under v1, keyed choice."""
    quota = int(len(schema.items) * V1_REMAP_FRACTION)
    ranked = sorted(schema.items,
                    key=lambda it: _prf_int(salt, "v1remap", it.id))
    return {it.id for it in ranked[:quota]}


def plan_exam(schema: ItemSchema, config: PlannerConfig, salt: ExamSalt) -> WatermarkPlan:
    """One enabled ItemPlan per schema item; pure in (schema, config, salt)."""
    config.validate()
    if salt.exam_id != schema.exam_id:
        raise ConfigInvalid(
            f"salt exam_id {salt.exam_id!r} != schema {schema.exam_id!r}")
    remap_ids = _v1_remap_ids(schema, salt) if config.preset == "v1" else set()

    plans = []
    for item in schema.items:
        if item.qtype in ("MCQ", "TF"):
            if item.gold is None:
                raise MissingGold(f"objective item {item.id} lacks a gold answer")
            if config.tied_set_size >= len(item.options):
                raise ConfigInvalid(
                    f"{item.id}: tied_set_size {config.tied_set_size} "
                    f">= option count {len(item.options)}")
            target = select_distractor(item, salt, config.tied_set_size)
            keyphrases: list[str] = []
        else:
            target = []
            keyphrases = generate_keyphrases(item, salt, config.keyphrase_count)
        plan = ItemPlan(
            item_id=item.id, qtype=item.qtype, target=target,
            keyphrases=keyphrases,
            tactics=_tactics_for(item.id, config.preset, remap_ids),
            enabled=True,
        )
        validate_item_plan(plan, item)
        plans.append(plan)
    return WatermarkPlan(exam_id=schema.exam_id, preset=config.preset,
                         item_plans=plans, salt_fingerprint=salt.fingerprint())


def apply_plan_patch(plan: WatermarkPlan, schema: ItemSchema,
                     patches: dict[str, dict]) -> WatermarkPlan:
    """Instructor overrides: per-item enable/disable and tactic removal.

    The patched plan is re-validated; invariant violations raise ConfigInvalid
    so callers (API layer) can surface them without mutating stored state.
    """
    new_plans = []
    for p in plan.item_plans:
        patch = patches.get(p.item_id)
        if patch is None:
            new_plans.append(p)
            continue
        updated = replace(
            p,
            enabled=bool(patch.get("enabled", p.enabled)),
            tactics=list(patch.get("tactics", p.tactics)),
        )
        validate_item_plan(updated, schema.item(p.item_id))
        new_plans.append(updated)
    unknown = set(patches) - {p.item_id for p in plan.item_plans}
    if unknown:
        raise ConfigInvalid(f"patch references unknown items: {sorted(unknown)}")
    return replace(plan, item_plans=new_plans)


# --- optional LLM-backed planning ---------------------------------------------


def render_prompt(template: str, item: QuestionItem) -> str:
    options = "\n".join(f"({o.label}) {o.body_text()}" for o in item.options)
    return (template
            .replace("{{stem}}", item.stem_text())
            .replace("{{options}}", options)
            .replace("{{gold}}", item.gold or ""))


def llm_plan_item(item: QuestionItem, template: str, client,
                  salt: ExamSalt, config: PlannerConfig) -> ItemPlan:
    """Ask a model for an item plan; fall back deterministically on bad output.

    Transport failures propagate as ClientError; invariant-violating plans are
    downgraded (never surfaced) so the result always satisfies the plan
    invariants.
    """
    prompt = render_prompt(template, item)
    raw = client.invoke(None, prompt)  # may raise ClientError
    fallback_cfg = replace(config, mode="deterministic")
    try:
        parsed = loads(raw)
        plan = ItemPlan(
            item_id=item.id, qtype=item.qtype,
            target=list(parsed.get("target", [])),
            keyphrases=list(parsed.get("keyphrases", [])),
            tactics=list(parsed.get("tactics")
                         or _tactics_for(item.id, config.preset, set())),
            enabled=True,
        )
        validate_item_plan(plan, item)
        return plan
    except (ValueError, KeyError, TypeError, ConfigInvalid) as exc:
        log.warning("llm plan for %s rejected (%s); using deterministic fallback",
                    item.id, exc)
        single = ItemSchema(exam_id=salt.exam_id, items=[item], page_count=1,
                            source_hash="")
        return plan_exam(single, fallback_cfg, salt).item_plans[0]


def plan_exam_llm(schema: ItemSchema, config: PlannerConfig, salt: ExamSalt,
                  client, templates: dict[str, str]) -> WatermarkPlan:
    """LLM-mode batch planning with per-item deterministic fallback."""
    plans = []
    for item in schema.items:
        template = templates.get(item.qtype, templates.get("MCQ", ""))
        try:
            plans.append(llm_plan_item(item, template, client, salt, config))
        except ClientError as exc:
            log.warning("client error for %s (%s); deterministic fallback", item.id, exc)
            single = ItemSchema(exam_id=schema.exam_id, items=[item],
                                page_count=1, source_hash="")
            det = plan_exam(single, replace(config, mode="deterministic"), salt)
            plans.append(det.item_plans[0])
    return WatermarkPlan(exam_id=schema.exam_id, preset=config.preset,
                         item_plans=plans, salt_fingerprint=salt.fingerprint())
