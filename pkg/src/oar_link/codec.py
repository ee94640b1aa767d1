"""Codebook transceiver for the object, attribute and relation streams.

The encoder writes each slot's codeword (scaled by fused confidence) into an
N x D latent block per stream; a fixed linear projection compresses each row
to D_c channel symbols. The receiver decompresses and runs a three-stage
matched-filter cascade: objects, then attributes restricted to the decoded
category, then relations restricted to ordered pairs of detected slots.

Relation rows are laid out as [subject pair code | object pair code |
predicate codeword] = [D/4 | D/4 | D/2].

Every codeword lies in the row space of the projection, so compression is
lossless on the codebook itself and channel noise is the only source of
decoding error. The projection is block diagonal over the relation layout
(D_c/4, D_c/4, D_c/2 channel dims per segment) with the subject and object
blocks shared, which lets the same pair codes serve both positions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .graph import ObjectNode, OarGraph, RelationEdge
from .vocab import Vocabulary
from .worldgen import Ref

STREAMS = ("obj", "attr", "rel")
LOGISTIC_SLOPE = 8.0
LOGISTIC_MIDPOINT = 0.5
MAGIC = b"OARC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIIIQ")


class ShapeError(ValueError):
    pass


class CodebookError(ValueError):
    pass


def logistic(r):
    return 1.0 / (1.0 + np.exp(-LOGISTIC_SLOPE * (np.asarray(r, dtype=float) - LOGISTIC_MIDPOINT)))


def coherence(u: np.ndarray) -> float:
    """Largest absolute inner product between distinct rows."""
    if len(u) < 2:
        return 0.0
    g = u @ u.T
    np.fill_diagonal(g, 0.0)
    return float(np.abs(g).max())


def spread_directions(n: int, dim: int, rng: np.random.Generator,
                      iters: int = 400, power: int = 8) -> np.ndarray:
    """``n`` unit vectors in R^dim pushed apart to lower their coherence.

    Gradient steps on sum |<u_i, u_j>|^power, renormalising after each step;
    the best iterate seen is returned.
    """
    u = rng.standard_normal((n, dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    if n < 2:
        return u
    best, best_c = u.copy(), coherence(u)
    for _ in range(iters):
        g = u @ u.T
        np.fill_diagonal(g, 0.0)
        m = np.abs(g).max()
        grad = ((g / m) ** (power - 1)) @ u
        u = u - 0.05 * grad / np.abs(grad).max()
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        c = coherence(u)
        if c < best_c:
            best, best_c = u.copy(), c
    return best


def _orthonormal_rows(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    return (q * np.sign(np.diag(r))).T


@dataclass(frozen=True, eq=False)
class Codebook:
    latent_dim: int
    channel_dim: int
    slots: int
    seed: int
    entity: np.ndarray       # (E, D)
    attribute: np.ndarray    # (A, D)
    predicate: np.ndarray    # (P, D/2)
    pair: np.ndarray         # (N, D/4)
    projection: np.ndarray   # (D_c, D), P P^T = (D/D_c) I

    def __post_init__(self):
        for name in ("entity", "attribute", "predicate", "pair", "projection"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def ratio(self) -> float:
        return self.latent_dim / self.channel_dim

    @property
    def quarter(self) -> int:
        return self.latent_dim // 4

    @property
    def basis(self) -> np.ndarray:
        """Projection with the sqrt(D/D_c) gain removed (orthonormal rows)."""
        return self.projection / np.sqrt(self.ratio)

    # -- construction -----------------------------------------------------
    @classmethod
    def generate(cls, n_entities: int, n_attributes: int, n_predicates: int,
                 seed: int = 0, latent_dim: int = 256, channel_dim: int = 32,
                 slots: int = 30, max_attempts: int = 16) -> "Codebook":
        if latent_dim % 4 or channel_dim % 4:
            raise CodebookError("latent_dim and channel_dim must be multiples of 4")
        last = None
        for attempt in range(max_attempts):
            rng = np.random.default_rng(np.random.SeedSequence([seed, attempt]))
            cb = cls._draw(rng, n_entities, n_attributes, n_predicates, seed,
                           latent_dim, channel_dim, slots)
            last = cb.problems()
            if not last:
                return cb
        raise CodebookError(f"no valid codebook after {max_attempts} draws: {last}")

    @classmethod
    def from_vocab(cls, vocab: Vocabulary, seed: int = 0, **kw) -> "Codebook":
        return cls.generate(vocab.n_entities, vocab.n_attributes, vocab.n_predicates, seed, **kw)

    @classmethod
    def _draw(cls, rng, n_ent, n_attr, n_pred, seed, d, dc, slots):
        q4, kc = d // 4, dc // 4
        pair_basis = _orthonormal_rows(kc, q4, rng)          # (dc/4, D/4)
        pred_basis = _orthonormal_rows(2 * kc, 2 * q4, rng)  # (dc/2, D/2)
        basis = np.zeros((dc, d))
        basis[:kc, :q4] = pair_basis
        basis[kc:2 * kc, q4:2 * q4] = pair_basis
        basis[2 * kc:, 2 * q4:] = pred_basis
        entity = spread_directions(n_ent, dc, rng) @ basis
        attribute = spread_directions(n_attr, dc, rng) @ basis
        predicate = spread_directions(n_pred, 2 * kc, rng) @ pred_basis
        pair = spread_directions(slots, kc, rng) @ pair_basis
        return cls(d, dc, slots, seed, entity, attribute, predicate, pair,
                   basis * np.sqrt(d / dc))

    # -- invariants -------------------------------------------------------
    def relation_layout(self, pair_index: int, where: str) -> np.ndarray:
        v = np.zeros(self.latent_dim)
        q = self.quarter
        if where == "subject":
            v[:q] = self.pair[pair_index]
        elif where == "object":
            v[q:2 * q] = self.pair[pair_index]
        else:
            v[2 * q:] = self.predicate[pair_index]
        return v

    def embedded_codewords(self) -> dict[str, np.ndarray]:
        """Every codeword family lifted into R^D (pair codes in both positions)."""
        n_pair, n_pred = len(self.pair), len(self.predicate)
        return {
            "entity": self.entity,
            "attribute": self.attribute,
            "predicate": np.array([self.relation_layout(i, "predicate") for i in range(n_pred)]),
            "subject": np.array([self.relation_layout(i, "subject") for i in range(n_pair)]),
            "object": np.array([self.relation_layout(i, "object") for i in range(n_pair)]),
        }

    def max_distortion(self) -> float:
        worst = 0.0
        for fam in self.embedded_codewords().values():
            back = decompress(compress(fam, self), self)
            worst = max(worst, float(np.abs(np.einsum("ij,ij->i", back, fam) - 1.0).max()))
        return worst

    def problems(self, max_coherence: float = 0.5, max_distortion: float = 0.35) -> list[str]:
        out = []
        d, dc, q = self.latent_dim, self.channel_dim, self.quarter
        shapes = {"entity": d, "attribute": d, "predicate": 2 * q, "pair": q}
        for name, width in shapes.items():
            fam = getattr(self, name)
            if fam.ndim != 2 or fam.shape[1] != width:
                out.append(f"{name} codewords must have width {width}")
                continue
            if not np.allclose(np.linalg.norm(fam, axis=1), 1.0, atol=1e-9, rtol=0):
                out.append(f"{name} codewords are not unit norm")
            c = coherence(fam)
            if c > max_coherence:
                out.append(f"{name} coherence {c:.3f} exceeds {max_coherence}")
        if len(self.pair) != self.slots:
            out.append("need one pair code per slot")
        if self.projection.shape != (dc, d):
            out.append(f"projection must be {dc}x{d}")
        elif not np.allclose(self.projection @ self.projection.T, self.ratio * np.eye(dc), atol=1e-6, rtol=0):
            out.append("projection rows are not orthogonal with norm^2 D/D_c")
        if not out:
            dist = self.max_distortion()
            if dist > max_distortion:
                out.append(f"projection distortion {dist:.3f} exceeds {max_distortion}")
        return out

    # -- persistence ------------------------------------------------------
    def save(self, path: str | Path) -> None:
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, self.latent_dim, self.channel_dim,
                              self.slots, len(self.entity), len(self.attribute),
                              len(self.predicate), self.seed)
        with open(path, "wb") as fh:
            fh.write(header)
            for arr in (self.entity, self.attribute, self.predicate, self.pair, self.projection):
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Codebook":
        blob = Path(path).read_bytes()
        if len(blob) < _HEADER.size:
            raise CodebookError("truncated codebook header")
        magic, version, d, dc, n, n_ent, n_attr, n_pred, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise CodebookError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise CodebookError(f"unsupported codebook version {version}")
        shapes = [(n_ent, d), (n_attr, d), (n_pred, d // 2), (n, d // 4), (dc, d)]
        need = _HEADER.size + 8 * sum(r * c for r, c in shapes)
        if len(blob) != need:
            raise CodebookError(f"codebook body is {len(blob)} bytes, expected {need}")
        arrays, off = [], _HEADER.size
        for r, c in shapes:
            arrays.append(np.frombuffer(blob, dtype="<f8", count=r * c, offset=off).reshape(r, c))
            off += 8 * r * c
        cb = cls(d, dc, n, seed, *arrays)
        problems = cb.problems()
        if problems:
            raise CodebookError("; ".join(problems))
        return cb


# -- transmitter -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Encoded:
    z_obj: np.ndarray
    z_attr: np.ndarray
    z_rel: np.ndarray
    graph: OarGraph             # the encoded evidence, in transmitted slot order
    truncated_objects: int = 0
    dropped_relations: int = 0

    def latent(self, stream: str) -> np.ndarray:
        return {"obj": self.z_obj, "attr": self.z_attr, "rel": self.z_rel}[stream]


def encode(evidence: Mapping[Ref, float], scene: OarGraph, cb: Codebook) -> Encoded:
    """Route fused evidence into the three latent blocks.

    Objects are ranked by fused confidence (ties by source slot) and take
    slots 0, 1, ...; relations whose endpoints were both encoded are ranked
    the same way and take relation rows. Anything past N rows is dropped.
    """
    n, d, q = cb.slots, cb.latent_dim, cb.quarter
    by_slot = scene.node_by_slot()
    edge_pred = {e.pair: e.predicate for e in scene.edges}

    objs = sorted(((c, ref[1]) for ref, c in evidence.items() if ref[0] == "node"),
                  key=lambda t: (-t[0], t[1]))
    truncated = max(0, len(objs) - n)
    objs = objs[:n]
    new_slot = {src: i for i, (_, src) in enumerate(objs)}

    z_obj = np.zeros((n, d))
    z_attr = np.zeros((n, d))
    nodes = []
    for i, (conf, src) in enumerate(objs):
        node = by_slot[src]
        z_obj[i] = conf * cb.entity[node.category]
        if node.attribute is not None:
            z_attr[i] = cb.attribute[node.attribute]
        nodes.append(ObjectNode(i, node.category, node.attribute, conf))

    rels = [(c, ref[1], ref[2]) for ref, c in evidence.items() if ref[0] == "edge"]
    usable = sorted((r for r in rels if r[1] in new_slot and r[2] in new_slot),
                    key=lambda t: (-t[0], t[1], t[2]))
    dropped = len(rels) - min(len(usable), n)
    usable = usable[:n]

    z_rel = np.zeros((n, d))
    edges = []
    for j, (conf, s, o) in enumerate(usable):
        a, b, p = new_slot[s], new_slot[o], edge_pred[(s, o)]
        z_rel[j, :q] = cb.pair[a]
        z_rel[j, q:2 * q] = cb.pair[b]
        z_rel[j, 2 * q:] = cb.predicate[p]
        z_rel[j] *= conf
        edges.append(RelationEdge(a, b, p, conf))

    return Encoded(z_obj, z_attr, z_rel, OarGraph(nodes, edges), truncated, dropped)


def compress(z: np.ndarray, cb: Codebook) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != cb.latent_dim:
        raise ShapeError(f"latent rows must have {cb.latent_dim} entries, got {z.shape}")
    return z @ cb.projection.T


def decompress(x: np.ndarray, cb: Codebook) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != cb.channel_dim:
        raise ShapeError(f"symbol rows must have {cb.channel_dim} entries, got {x.shape}")
    return (x @ cb.projection) / cb.ratio


@dataclass(frozen=True, eq=False)
class SymbolBlock:
    stream: str
    symbols: np.ndarray
    transmitted: bool = True

    def __post_init__(self):
        if self.stream not in STREAMS:
            raise ValueError(f"unknown stream {self.stream!r}")
        if self.symbols.ndim != 2:
            raise ShapeError("symbol block must be 2-D")
        if not self.transmitted and np.any(self.symbols):
            raise ValueError("untransmitted block must be all zero")

    @classmethod
    def null(cls, stream: str, cb: Codebook) -> "SymbolBlock":
        return cls(stream, np.zeros((cb.slots, cb.channel_dim)), False)


# -- receiver ----------------------------------------------------------------

@dataclass(frozen=True)
class DecodeTrace:
    """Per-slot detection confidences from Stage 1 (diagnostics)."""
    detection: tuple[float, ...]


def _best_pair(a: np.ndarray, b: np.ndarray) -> tuple[int, int, float]:
    # maximise min(a[u], b[v]) over u != v
    u1, v1 = int(np.argmax(a)), int(np.argmax(b))
    if u1 != v1:
        return u1, v1, min(a[u1], b[v1])
    b2 = b.copy()
    b2[v1] = -np.inf
    a2 = a.copy()
    a2[u1] = -np.inf
    v2, u2 = int(np.argmax(b2)), int(np.argmax(a2))
    first = min(a[u1], b2[v2])
    second = min(a2[u2], b[v1])
    if first >= second:
        return u1, v2, first
    return u2, v1, second


def decode_latent(z_obj: np.ndarray, z_attr: np.ndarray, z_rel: np.ndarray,
                  cb: Codebook, vocab: Vocabulary, theta: float = 0.5,
                  trace: list | None = None) -> OarGraph:
    q = cb.quarter
    # Stage 1: object anchors
    corr = z_obj @ cb.entity.T
    cats = np.argmax(corr, axis=1)
    conf = logistic(corr[np.arange(len(cats)), cats])
    if trace is not None:
        trace.append(DecodeTrace(tuple(float(c) for c in conf)))
    detected = [i for i in range(len(conf)) if conf[i] > theta]

    # Stage 2: attributes, searched only within the decoded category's table
    nodes = []
    for i in detected:
        cat = int(cats[i])
        attr = None
        allowed = sorted(vocab.attr_compat.get(cat, ()))
        if allowed:
            r = cb.attribute[allowed] @ z_attr[i]
            k = int(np.argmax(r))
            if logistic(r[k]) > theta:
                attr = allowed[k]
        nodes.append(ObjectNode(i, cat, attr, float(conf[i])))

    # Stage 3: relations over ordered pairs of detected slots only
    edges = []
    if len(detected) >= 2:
        codes = cb.pair[detected]
        subj = z_rel[:, :q] @ codes.T
        obj = z_rel[:, q:2 * q] @ codes.T
        pred = z_rel[:, 2 * q:] @ cb.predicate.T
        best_pred = np.argmax(pred, axis=1)
        cands = []
        for row in range(len(z_rel)):
            u, v, r_pair = _best_pair(subj[row], obj[row])
            r = min(r_pair, pred[row, best_pred[row]])
            c = float(logistic(r))
            if c > theta:
                cands.append((-c, row, detected[u], detected[v], int(best_pred[row])))
        used = set()
        for neg_c, _, s, o, p in sorted(cands):
            if (s, o) in used:
                continue
            used.add((s, o))
            edges.append(RelationEdge(s, o, p, -neg_c))
    return OarGraph(nodes, edges)


def decode_cascade(blocks: Sequence[SymbolBlock] | Mapping[str, SymbolBlock], cb: Codebook,
                   vocab: Vocabulary, theta: float = 0.5, trace: list | None = None) -> OarGraph:
    """Decode received stream blocks; missing streams are zero-padded."""
    if isinstance(blocks, Mapping):
        by_stream = dict(blocks)
    else:
        by_stream = {b.stream: b for b in blocks}
    latents = []
    for s in STREAMS:
        block = by_stream.get(s) or SymbolBlock.null(s, cb)
        if block.symbols.shape != (cb.slots, cb.channel_dim):
            raise ShapeError(f"{s} block must be {cb.slots}x{cb.channel_dim}")
        latents.append(decompress(block.symbols, cb))
    return decode_latent(*latents, cb, vocab, theta, trace)


# -- no-priority ablation ----------------------------------------------------

class UniformAnalogCodec:
    """All three streams mixed jointly into ``symbols_per_row`` symbols per slot.

    No stream gets priority: each slot's three codeword coordinate vectors
    (3 D_c values) are projected together onto a seeded random subspace and
    recovered with the unbiased transpose. At 3 D_c symbols per row the map is
    orthogonal and therefore lossless.
    """

    def __init__(self, cb: Codebook, symbols_per_row: int):
        full = 3 * cb.channel_dim
        if not 1 <= symbols_per_row <= full:
            raise ValueError(f"symbols_per_row must be in [1, {full}]")
        self.cb = cb
        self.m = symbols_per_row
        rng = np.random.default_rng(np.random.SeedSequence([cb.seed, symbols_per_row, 0x55]))
        self.mix = _orthonormal_rows(symbols_per_row, full, rng)
        self.gain = np.sqrt(full / symbols_per_row)

    @property
    def n_symbols(self) -> int:
        return self.cb.slots * self.m

    def compress(self, z_obj, z_attr, z_rel) -> np.ndarray:
        basis = self.cb.basis
        coords = np.hstack([z_obj @ basis.T, z_attr @ basis.T, z_rel @ basis.T])
        return self.gain * coords @ self.mix.T

    def decompress(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if x.shape != (self.cb.slots, self.m):
            raise ShapeError(f"expected {self.cb.slots}x{self.m} symbols, got {x.shape}")
        coords = self.gain * x @ self.mix
        dc = self.cb.channel_dim
        basis = self.cb.basis
        return tuple(coords[:, k * dc:(k + 1) * dc] @ basis for k in range(3))
