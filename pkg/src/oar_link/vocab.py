"""Category spaces for entities, predicates, attributes and audio events."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

# Ordered roughly by corpus frequency; generate_scene samples a Zipf law over
# this index order, so index 0 is the head of the long tail.
ENTITIES = (
    "man", "person", "window", "tree", "building", "shirt", "woman", "sign",
    "table", "head", "hand", "car", "plate", "leg", "people", "hair", "pole",
    "light", "street", "fence", "chair", "jacket", "hat", "boy", "shoe",
    "door", "girl", "ear", "bus", "plant", "train", "sidewalk", "glass",
    "face", "arm", "pant", "tail", "clock", "track", "leaf", "flower", "eye",
    "boat", "nose", "dog", "horse", "umbrella", "bag", "elephant", "giraffe",
    "zebra", "cow", "sheep", "bird", "cat", "bear", "wheel", "tire", "house",
    "roof", "mountain", "hill", "rock", "wave", "snow", "kite", "plane",
    "airplane", "wing", "engine", "truck", "vehicle", "motorcycle", "bike",
    "skateboard", "surfboard", "ski", "skier", "board", "racket", "player",
    "helmet", "glove", "coat", "tie", "short", "jean", "sock", "sneaker",
    "boot", "cap", "lady", "guy", "kid", "child", "men", "food", "pizza",
    "fruit", "banana", "orange", "vegetable", "bowl", "cup", "bottle", "fork",
    "vase", "pot", "basket", "box", "book", "paper", "letter", "number",
    "logo", "screen", "laptop", "phone", "lamp", "pillow", "bed", "desk",
    "shelf", "cabinet", "drawer", "counter", "sink", "toilet", "towel",
    "curtain", "seat", "bench", "stand", "post", "railing", "tower", "flag",
    "branch", "trunk", "beach", "room", "tile", "wire", "windshield", "paw",
    "neck", "mouth", "finger", "handle", "animal",
)

PREDICATES = (
    "on", "has", "wearing", "of", "in", "near", "behind", "with", "holding",
    "above", "sitting on", "wears", "under", "riding", "in front of",
    "standing on", "at", "carrying", "attached to", "over", "for",
    "looking at", "watching", "hanging from", "laying on", "eating", "and",
    "belonging to", "parked on", "using", "covering", "between", "along",
    "covered in", "part of", "lying on", "on back of", "to", "walking on",
    "mounted on", "across", "against", "from", "growing on", "painted on",
    "playing", "made of", "says", "flying in", "walking in",
)

ATTRIBUTES = (
    "white", "black", "blue", "green", "red", "brown", "yellow", "small",
    "large", "wooden", "gray", "silver", "metal", "orange", "tall", "long",
    "dark", "pink", "standing", "clear", "round", "tan", "glass", "purple",
    "young", "parked", "sitting", "plastic", "concrete", "open", "stone",
    "empty", "old", "striped", "big", "short", "closed", "light", "wet",
    "bright", "little", "cloudy", "tiled", "brick", "leafless", "bare",
    "walking", "smiling", "colorful", "painted", "thin", "thick", "hanging",
    "grassy", "dirty", "clean", "full", "square", "curved", "calm",
    "rocky", "sandy", "snowy", "shiny", "dry", "broken", "lit", "plaid",
    "beige", "blond", "gold", "floral", "folded", "flying", "leather",
    "distant", "electric", "double", "overcast", "sliced", "ripe", "fluffy",
    "paved", "framed", "furry", "cooked", "sunny", "rusty", "skinny",
    "wide", "worn", "happy", "crouching", "steel", "patterned",
)

AUDIO_EVENTS = (
    "speech", "footsteps", "dog bark", "car horn", "engine", "siren", "rain",
    "wind", "water", "bird chirp", "door knock", "music", "train", "airplane",
    "cat meow", "horse neigh", "crowd", "bicycle bell", "typing",
    "phone ring", "clock tick", "applause",
)

# audio event -> entity it is evidence for
AUDIO_SOURCES = (
    "man", "person", "dog", "car", "engine", "vehicle", "umbrella", "tree",
    "wave", "bird", "door", "people", "train", "airplane", "cat", "horse",
    "people", "bike", "laptop", "phone", "clock", "people",
)


class VocabularyError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    entity_categories: tuple[str, ...]
    predicate_categories: tuple[str, ...]
    attribute_categories: tuple[str, ...]
    audio_event_categories: tuple[str, ...]
    attr_compat: dict[int, frozenset[int]] = field(hash=False)
    # one entity index per audio event
    audio_event_entities: tuple[int, ...] = ()

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise VocabularyError("; ".join(problems))

    @property
    def n_entities(self) -> int:
        return len(self.entity_categories)

    @property
    def n_predicates(self) -> int:
        return len(self.predicate_categories)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_categories)

    @property
    def audio_emitting_entities(self) -> frozenset[int]:
        return frozenset(self.audio_event_entities)

    def compatible(self, entity: int, attribute: int) -> bool:
        return attribute in self.attr_compat.get(entity, frozenset())

    def problems(self) -> list[str]:
        out = []
        for name in ("entity_categories", "predicate_categories",
                     "attribute_categories", "audio_event_categories"):
            cats = getattr(self, name)
            if not cats:
                out.append(f"{name} is empty")
            elif len(set(cats)) != len(cats):
                out.append(f"{name} has duplicate names")
        for ent, attrs in self.attr_compat.items():
            if not 0 <= ent < len(self.entity_categories):
                out.append(f"attr_compat key {ent} is not an entity index")
            bad = [a for a in attrs if not 0 <= a < len(self.attribute_categories)]
            if bad:
                out.append(f"attr_compat[{ent}] has invalid attributes {sorted(bad)}")
        if self.audio_event_entities:
            if len(self.audio_event_entities) != len(self.audio_event_categories):
                out.append("audio_event_entities must map every audio event")
            bad = [e for e in self.audio_event_entities
                   if not 0 <= e < len(self.entity_categories)]
            if bad:
                out.append(f"audio_event_entities has invalid entities {bad}")
        return out

    def to_dict(self) -> dict:
        return {
            "entity_categories": list(self.entity_categories),
            "predicate_categories": list(self.predicate_categories),
            "attribute_categories": list(self.attribute_categories),
            "audio_event_categories": list(self.audio_event_categories),
            "attr_compat": {str(k): sorted(v) for k, v in sorted(self.attr_compat.items())},
            "audio_event_entities": list(self.audio_event_entities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        try:
            return cls(
                entity_categories=tuple(data["entity_categories"]),
                predicate_categories=tuple(data["predicate_categories"]),
                attribute_categories=tuple(data["attribute_categories"]),
                audio_event_categories=tuple(data["audio_event_categories"]),
                attr_compat={int(k): frozenset(int(a) for a in v)
                             for k, v in data.get("attr_compat", {}).items()},
                audio_event_entities=tuple(int(e) for e in data.get("audio_event_entities", ())),
            )
        except (KeyError, TypeError) as exc:
            raise VocabularyError(f"malformed vocabulary: {exc!r}") from None

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_dict(json.loads(Path(path).read_text()))


@lru_cache(maxsize=None)
def builtin_vocabulary(attrs_per_entity: int = 24, seed: int = 2024) -> Vocabulary:
    """150 entities, 50 predicates, 95 attributes and 22 audio events.

    Attribute compatibility is a fixed pseudo-random table: each entity
    admits ``attrs_per_entity`` attributes.
    """
    rng = np.random.default_rng(seed)
    compat = {
        e: frozenset(int(a) for a in rng.choice(len(ATTRIBUTES), attrs_per_entity, replace=False))
        for e in range(len(ENTITIES))
    }
    index = {name: i for i, name in enumerate(ENTITIES)}
    return Vocabulary(
        entity_categories=ENTITIES,
        predicate_categories=PREDICATES,
        attribute_categories=ATTRIBUTES,
        audio_event_categories=AUDIO_EVENTS,
        attr_compat=compat,
        audio_event_entities=tuple(index[s] for s in AUDIO_SOURCES),
    )
