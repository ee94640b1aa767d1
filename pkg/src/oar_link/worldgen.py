"""Synthetic scenes and per-modality observations.

Scenes follow the target dataset statistics (object and relation counts,
long-tailed categories). Modalities are abstract evidence channels: each
sees a random subset of the scene with noisy confidences, and views are
combined by noisy-OR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .graph import N_SLOTS, ObjectNode, OarGraph, RelationEdge
from .vocab import Vocabulary

MODALITIES = ("image", "text", "audio")


@dataclass(frozen=True)
class SceneConfig:
    mean_objects: float = 8.0
    mean_visual_relations: float = 10.4
    mean_audio_relations: float = 0.6
    attribute_probability: float = 0.6
    seed: int = 0
    zipf_exponent: float = 1.0

    def __post_init__(self):
        for name in ("mean_objects", "mean_visual_relations", "mean_audio_relations"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.attribute_probability <= 1.0:
            raise ValueError("attribute_probability must be in [0, 1]")


@dataclass(frozen=True)
class ObservationConfig:
    p_img_node: float = 0.55
    p_img_edge: float = 0.5
    p_txt_node: float = 0.5
    p_txt_edge: float = 0.45
    p_aud_event: float = 0.6
    noise_scale: float = 0.25
    # entity categories audio can testify to; None = the vocabulary's audio table
    audio_entities: frozenset[int] | None = field(default=None, hash=False)

    def __post_init__(self):
        for name in ("p_img_node", "p_img_edge", "p_txt_node", "p_txt_edge", "p_aud_event"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


# evidence references: ("node", slot) or ("edge", subject_slot, object_slot)
Ref = tuple


@dataclass(frozen=True)
class ModalityView:
    modality: str
    evidence: tuple[tuple[Ref, float], ...]

    def as_dict(self) -> dict[Ref, float]:
        return dict(self.evidence)


def zipf_weights(n: int, s: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, n + 1) ** s
    return w / w.sum()


def generate_scene(cfg: SceneConfig, vocab: Vocabulary, n_slots: int = N_SLOTS) -> OarGraph:
    rng = np.random.default_rng(cfg.seed)
    n = int(np.clip(rng.poisson(cfg.mean_objects), 1, n_slots))
    cats = rng.choice(vocab.n_entities, size=n, p=zipf_weights(vocab.n_entities, cfg.zipf_exponent))
    nodes = []
    for slot, cat in enumerate(cats):
        cat = int(cat)
        allowed = sorted(vocab.attr_compat.get(cat, ()))
        attr = None
        if allowed and rng.random() < cfg.attribute_probability:
            attr = int(allowed[rng.integers(len(allowed))])
        nodes.append(ObjectNode(slot, cat, attr, 1.0))

    mean_rel = cfg.mean_visual_relations + cfg.mean_audio_relations
    m = int(min(rng.poisson(mean_rel), n_slots, n * (n - 1)))
    edges = []
    if m:
        pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
        chosen = rng.choice(len(pairs), size=m, replace=False)
        preds = rng.choice(vocab.n_predicates, size=m, p=zipf_weights(vocab.n_predicates, cfg.zipf_exponent))
        for idx, p in zip(chosen, preds):
            a, b = pairs[idx]
            edges.append(RelationEdge(a, b, int(p), 1.0))
    return OarGraph(nodes, edges)


def _confidence(rng: np.random.Generator, scale: float) -> float:
    if scale == 0:
        return 1.0
    return float(np.clip(1.0 - abs(rng.normal(0.0, scale)), 0.0, 1.0))


def observe(scene: OarGraph, modality: str, cfg: ObservationConfig, seed: int,
            vocab: Vocabulary | None = None) -> ModalityView:
    """Evidence a single modality yields about ``scene``.

    Image and text see nodes and edges with their own visibility. Audio only
    testifies to nodes of audio-emitting categories and to edges whose subject
    is such a node, both with ``p_aud_event``.
    """
    if modality not in MODALITIES:
        raise ValueError(f"unknown modality {modality!r}")
    rng = np.random.default_rng(seed)
    if modality == "image":
        p_node, p_edge = cfg.p_img_node, cfg.p_img_edge
    elif modality == "text":
        p_node, p_edge = cfg.p_txt_node, cfg.p_txt_edge
    else:
        p_node = p_edge = cfg.p_aud_event
    audible = None
    if modality == "audio":
        audible = cfg.audio_entities
        if audible is None:
            audible = vocab.audio_emitting_entities if vocab is not None else frozenset()
    by_slot = scene.node_by_slot()

    evidence = []
    for node in scene.nodes:
        # one draw per item regardless of eligibility keeps streams aligned
        u = rng.random()
        if audible is not None and node.category not in audible:
            continue
        if u < p_node:
            evidence.append((("node", node.slot), _confidence(rng, cfg.noise_scale)))
    for e in scene.edges:
        u = rng.random()
        if audible is not None and by_slot[e.subject_slot].category not in audible:
            continue
        if u < p_edge:
            evidence.append((("edge", e.subject_slot, e.object_slot), _confidence(rng, cfg.noise_scale)))
    return ModalityView(modality, tuple(evidence))


def fuse(views: Iterable[ModalityView]) -> dict[Ref, float]:
    """Noisy-OR: combined confidence is 1 - prod(1 - c_m) over views holding the reference."""
    miss: dict[Ref, list[float]] = {}
    for view in views:
        for ref, c in view.evidence:
            miss.setdefault(ref, []).append(1.0 - c)
    out = {}
    for ref in sorted(miss):
        # sorted product: bit-identical for any view order
        prod = 1.0
        for m in sorted(miss[ref]):
            prod *= m
        out[ref] = 1.0 - prod
    return out
