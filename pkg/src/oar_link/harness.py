"""Seeded Monte Carlo sweeps over SNR, transmission scheme and modality set."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import re
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import channel, codec, metrics, scheduler
from .graph import GraphParseError, OarGraph, graph_from_dict, graph_to_dict, validate_graph
from .vocab import Vocabulary, VocabularyError, builtin_vocabulary
from .worldgen import MODALITIES, ObservationConfig, SceneConfig, fuse, generate_scene, observe

log = logging.getLogger(__name__)

SOURCE_DIMS = 3 * 256 * 256  # image-equivalent source size for CBR
DIGITAL_RATE_REF = 40.0      # kbps at which the digital stand-in stops dropping content
DIGITAL_MAX_DROP = 0.9
CSV_COLUMNS = ("config_id", "scheme", "snr_db", "level", "cbr", "kbps") + metrics.METRIC_COLUMNS + ("fail_rate", "n_trials")


class ConfigError(ValueError):
    pass


class CorpusError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


# -- schemes -----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Scheme:
    kind: str                  # semantic_adaptive | semantic_fixed_level | uniform_analog | digital_baseline
    param: float | None = None

    def __str__(self):
        if self.param is None:
            return self.kind
        p = int(self.param) if float(self.param).is_integer() else self.param
        return f"{self.kind}({p})"

    @property
    def semantic(self) -> bool:
        return self.kind.startswith("semantic")


_SCHEME_RE = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([0-9.eE+-]+)\s*\))?\s*$")


def parse_scheme(text: str) -> Scheme:
    m = _SCHEME_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse scheme {text!r}")
    kind, arg = m.group(1), m.group(2)
    try:
        val = float(arg) if arg is not None else None
    except ValueError:
        raise ConfigError(f"bad scheme argument in {text!r}") from None
    if kind == "semantic_adaptive":
        if val is not None:
            raise ConfigError("semantic_adaptive takes no argument")
        return Scheme(kind)
    if kind == "semantic_fixed_level":
        if val not in (1, 2, 3):
            raise ConfigError("semantic_fixed_level needs a level in {1, 2, 3}")
        return Scheme(kind, int(val))
    if kind == "uniform_analog":
        return Scheme(kind, 960 if val is None else int(val))
    if kind == "digital_baseline":
        if val is None or val < 0:
            raise ConfigError("digital_baseline needs a rate in kbps")
        return Scheme(kind, val)
    raise ConfigError(f"unknown scheme {kind!r}")


# -- configuration -----------------------------------------------------------

def _snr(v) -> float:
    if isinstance(v, str):
        v = v.strip().lower()
        if v in ("inf", "+inf", "infinity"):
            return math.inf
    try:
        out = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"bad snr value {v!r}") from None
    if math.isnan(out):
        raise ConfigError("snr is NaN")
    return out


def _sub(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown {name} fields: {sorted(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    config_id: str = "default"
    vocab: str = "builtin"
    scene: SceneConfig = field(default_factory=SceneConfig)
    observation: ObservationConfig = field(default_factory=ObservationConfig)
    codebook_seed: int = 0
    stream_profile: scheduler.StreamProfile = field(default_factory=scheduler.StreamProfile)
    csi_policy: tuple = scheduler.DEFAULT_POLICY
    snr_db: tuple = tuple(float(s) for s in range(15))
    noise_mode: str = "per_symbol"
    digital_link: channel.DigitalLinkConfig = field(default_factory=channel.DigitalLinkConfig)
    schemes: tuple = (Scheme("semantic_adaptive"),)
    # one modality set, or several for an ablation sweep
    modality_mask: tuple = (MODALITIES,)
    trials: int = 200
    master_seed: int = 0
    output: str = "results"
    corpus: str | None = None
    theta: float = 0.5

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.snr_db:
            raise ConfigError("snr_db list is empty")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        if not self.modality_mask or any(not m for m in self.modality_mask):
            raise ConfigError("modality_mask must name at least one modality")
        for mask in self.modality_mask:
            for m in mask:
                if m not in MODALITIES:
                    raise ConfigError(f"unknown modality {m!r}")
        if self.noise_mode not in channel.NOISE_MODES:
            raise ConfigError(f"noise_mode must be one of {channel.NOISE_MODES}")
        if not 0.0 < self.theta < 1.0:
            raise ConfigError("theta must be in (0, 1)")
        try:
            scheduler.validate_policy(self.csi_policy)
        except scheduler.SchedulerConfigError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config fields: {sorted(extra)}")
        kw: dict[str, Any] = {}
        for key in ("config_id", "vocab", "noise_mode", "output"):
            if key in data:
                kw[key] = str(data[key])
        for key in ("codebook_seed", "trials", "master_seed"):
            if key in data:
                if isinstance(data[key], bool) or not isinstance(data[key], int):
                    raise ConfigError(f"{key} must be an integer")
                kw[key] = data[key]
        if "theta" in data:
            kw["theta"] = float(data["theta"])
        if data.get("corpus") is not None:
            kw["corpus"] = str(data["corpus"])
        kw["scene"] = _sub(SceneConfig, data.get("scene"), "scene")
        obs = dict(data.get("observation") or {})
        if obs.get("audio_entities") is not None:
            obs["audio_entities"] = frozenset(int(e) for e in obs["audio_entities"])
        kw["observation"] = _sub(ObservationConfig, obs, "observation")
        try:
            kw["stream_profile"] = _sub(scheduler.StreamProfile, data.get("stream_profile"), "stream_profile")
        except scheduler.SchedulerConfigError as exc:
            raise ConfigError(str(exc)) from None
        kw["digital_link"] = _sub(channel.DigitalLinkConfig, data.get("digital_link"), "digital_link")
        if "csi_policy" in data:
            try:
                kw["csi_policy"] = tuple((-math.inf if t is None else _snr(t), int(b)) for t, b in data["csi_policy"])
            except (TypeError, ValueError):
                raise ConfigError("csi_policy must be a list of [threshold_db, budget] pairs") from None
        if "snr_db" in data:
            snr = data["snr_db"]
            kw["snr_db"] = tuple(_snr(s) for s in (snr if isinstance(snr, list) else [snr]))
        if "schemes" in data:
            if not isinstance(data["schemes"], list):
                raise ConfigError("schemes must be a list")
            kw["schemes"] = tuple(parse_scheme(str(s)) for s in data["schemes"])
        if "modality_mask" in data:
            mm = data["modality_mask"]
            if not isinstance(mm, list) or not mm:
                raise ConfigError("modality_mask must be a non-empty list")
            masks = [mm] if all(isinstance(m, str) for m in mm) else mm
            kw["modality_mask"] = tuple(tuple(m) for m in masks)
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError:
            raise
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        return cls.from_dict(data)


# -- seeds -------------------------------------------------------------------

def derive_seed(*parts) -> int:
    """Stable 64-bit seed from a tuple of ints, floats and strings."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        if isinstance(p, bool) or isinstance(p, int):
            h.update(b"i" + int(p).to_bytes(16, "little", signed=True))
        elif isinstance(p, float):
            h.update(b"f" + struct.pack("<d", p))
        else:
            b = str(p).encode()
            h.update(b"s" + len(b).to_bytes(4, "little") + b)
    return int.from_bytes(h.digest(), "little")


# -- one trial ---------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    scheme: Scheme
    snr_db: float
    modalities: tuple[str, ...] = MODALITIES

    def tag(self) -> str:
        return f"{self.scheme}|{self.snr_db!r}|{'+'.join(self.modalities)}"


@dataclass
class TrialRecord:
    config_id: str
    seed: int
    index: int
    scheme: str
    snr_db: float
    modalities: tuple[str, ...]
    mask: tuple[bool, bool, bool] | None
    level: int | str
    symbols_sent: int
    ground_truth: OarGraph
    decoded: OarGraph
    report: metrics.MetricReport
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return (self.config_id, self.scheme, self.snr_db, "+".join(self.modalities))

    def to_dict(self) -> dict:
        # timing is left out so trial dumps stay byte-reproducible
        return {
            "config_id": self.config_id,
            "index": self.index,
            "seed": self.seed,
            "scheme": self.scheme,
            "snr_db": _fmt(self.snr_db),
            "modalities": list(self.modalities),
            "mask": None if self.mask is None else [int(b) for b in self.mask],
            "level": self.level,
            "symbols_sent": self.symbols_sent,
            "ground_truth": graph_to_dict(self.ground_truth),
            "decoded": graph_to_dict(self.decoded),
            "metrics": self.report.to_dict(),
        }


class Runtime:
    """Immutable per-sweep state shared by all trials."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.vocab = load_vocab(cfg.vocab)
        self.codebook = _codebook(self.vocab, cfg.codebook_seed)
        self.corpus = load_corpus(cfg.corpus, self.vocab) if cfg.corpus else None
        if self.corpus is not None and not self.corpus:
            raise ConfigError(f"corpus {cfg.corpus} is empty")
        self._uniform: dict[int, codec.UniformAnalogCodec] = {}
        for s in cfg.schemes:
            if s.kind == "uniform_analog":
                self._uniform[int(s.param)] = self.uniform_codec(int(s.param))

    def uniform_codec(self, budget: int) -> codec.UniformAnalogCodec:
        if budget in self._uniform:
            return self._uniform[budget]
        slots = self.codebook.slots
        if budget % slots or not 1 <= budget // slots <= 3 * self.codebook.channel_dim:
            raise ConfigError(f"uniform_analog budget must be a multiple of {slots} "
                              f"up to {slots * 3 * self.codebook.channel_dim}")
        return codec.UniformAnalogCodec(self.codebook, budget // slots)


def load_vocab(source: str) -> Vocabulary:
    if source == "builtin":
        return builtin_vocabulary()
    try:
        vocab = Vocabulary.load(source)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"vocabulary {source}: invalid JSON ({exc.msg})") from None
    except VocabularyError as exc:
        raise ConfigError(f"vocabulary {source}: {exc}") from None
    probs = vocab.problems()
    if probs:
        raise ConfigError(f"vocabulary {source}: {probs[0]}")
    return vocab


@lru_cache(maxsize=8)
def _codebook(vocab: Vocabulary, seed: int) -> codec.Codebook:
    return codec.Codebook.from_vocab(vocab, seed=seed)


def _scene(rt: Runtime, index: int) -> OarGraph:
    cfg = rt.cfg
    if rt.corpus is not None:
        return rt.corpus[index % len(rt.corpus)]
    seed = derive_seed(cfg.master_seed, "scene", index)
    return generate_scene(dataclasses.replace(cfg.scene, seed=seed % 2**63), rt.vocab, rt.codebook.slots)


def _digital_decode(gt: OarGraph, rate_kbps: float, rng: np.random.Generator) -> OarGraph:
    p = min(max(1.0 - rate_kbps / DIGITAL_RATE_REF, 0.0), DIGITAL_MAX_DROP)
    keep = [n for n in gt.nodes if rng.random() >= p]
    alive = {n.slot for n in keep}
    edges = []
    for e in gt.edges:
        u = rng.random()
        if e.subject_slot in alive and e.object_slot in alive and u >= p:
            edges.append(e)
    return OarGraph(keep, edges)


def _transmit(blocks: dict[str, np.ndarray], snr_db: float, mode: str, seeds: dict[str, int]) -> dict[str, np.ndarray]:
    """Send the transmitted streams over one AWGN channel use.

    Each stream is first brought to unit power on its own (the stand-in for a
    per-stream output norm), then the whole sequence is normalised jointly.
    The receiver undoes both gains, which travel as side information. Each
    block draws noise from its own seed so that schemes sending the same
    stream at the same SNR see the same noise realisation.
    """
    gains = {name: channel.power_scale(b) for name, b in blocks.items()}
    flat = np.concatenate([(b * gains[name]).ravel() for name, b in blocks.items()])
    joint = channel.power_scale(flat)
    out = {}
    for name, b in blocks.items():
        g = gains[name] * joint
        cfg = channel.ChannelConfig(snr_db, mode, seeds[name])
        out[name] = channel.awgn(b * g, cfg, length=flat.size) / g
    return out


def run_trial(rt: Runtime, point: SweepPoint, index: int) -> TrialRecord:
    cfg, cb, vocab = rt.cfg, rt.codebook, rt.vocab
    seed = derive_seed(cfg.master_seed, point.tag(), index)
    timing = {}
    gt = _scene(rt, index)
    scheme = point.scheme

    if scheme.kind == "digital_baseline":
        t0 = time.perf_counter()
        bits = channel.baseline_payload_model(scheme.param)
        out = channel.digital_outage(bits, point.snr_db, cfg.digital_link, seed=derive_seed(seed, "blocks"))
        timing["channel"] = time.perf_counter() - t0
        if out.outage:
            decoded = OarGraph((), ())
        else:
            decoded = _digital_decode(gt, scheme.param, np.random.default_rng(derive_seed(seed, "digital")))
        rep = metrics.evaluate(gt, decoded, failure=out.outage)
        symbols = math.ceil(bits / cfg.digital_link.bits_per_symbol)
        return TrialRecord(cfg.config_id, seed, index, str(scheme), point.snr_db, point.modalities,
                           None, "na", symbols, gt, decoded, rep, timing)

    t0 = time.perf_counter()
    # observation seeds ignore the point so every scheme and SNR sees the same evidence
    views = [observe(gt, m, cfg.observation, derive_seed(cfg.master_seed, "obs", index, m), vocab)
             for m in point.modalities]
    enc = codec.encode(fuse(views), gt, cb)
    timing["encode"] = time.perf_counter() - t0
    # channel noise is common to all schemes at this SNR and trial
    noise_seeds = {s: derive_seed(cfg.master_seed, "awgn", point.snr_db, index, s)
                   for s in codec.STREAMS + ("mixed",)}

    if scheme.kind == "uniform_analog":
        ua = rt.uniform_codec(int(scheme.param))
        t0 = time.perf_counter()
        x = ua.compress(enc.z_obj, enc.z_attr, enc.z_rel)
        timing["encode"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        y = _transmit({"mixed": x}, point.snr_db, cfg.noise_mode, noise_seeds)["mixed"]
        timing["channel"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        z_hat = ua.decompress(y)
        decoded = codec.decode_latent(*z_hat, cb, vocab, cfg.theta)
        timing["decode"] = time.perf_counter() - t0
        d_align = {s: metrics.alignment_distortion(zh, enc.latent(s)) for s, zh in zip(codec.STREAMS, z_hat)}
        rep = metrics.evaluate(gt, decoded, d_align)
        return TrialRecord(cfg.config_id, seed, index, str(scheme), point.snr_db, point.modalities,
                           None, "na", ua.n_symbols, gt, decoded, rep, timing)

    if scheme.kind == "semantic_adaptive":
        mask = scheduler.optimize_mask(cfg.stream_profile, scheduler.csi_to_budget(point.snr_db, cfg.csi_policy))
    else:
        mask = scheduler.TransmissionMask.for_level(int(scheme.param))
    streams = mask.streams()
    t0 = time.perf_counter()
    sent = {s: codec.compress(enc.latent(s), cb) for s in streams}
    timing["encode"] += time.perf_counter() - t0
    t0 = time.perf_counter()
    received = _transmit(sent, point.snr_db, cfg.noise_mode, noise_seeds)
    timing["channel"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    blocks = [codec.SymbolBlock(s, y) for s, y in received.items()]
    decoded = codec.decode_cascade(blocks, cb, vocab, cfg.theta)
    timing["decode"] = time.perf_counter() - t0
    d_align = {s: metrics.alignment_distortion(codec.decompress(y, cb), enc.latent(s))
               for s, y in received.items()}
    rep = metrics.evaluate(gt, decoded, d_align)
    return TrialRecord(cfg.config_id, seed, index, str(scheme), point.snr_db, point.modalities,
                       mask.bits, scheduler.mask_to_level(mask), mask.symbols(cfg.stream_profile),
                       gt, decoded, rep, timing)


# -- sweeps ------------------------------------------------------------------

def sweep_points(cfg: ExperimentConfig) -> list[SweepPoint]:
    return [SweepPoint(scheme, snr, tuple(mods))
            for mods in cfg.modality_mask for scheme in cfg.schemes for snr in cfg.snr_db]


def resolve_threads(threads: int | None = None) -> int:
    env = os.environ.get("OAR_LINK_THREADS")
    if env:
        try:
            threads = int(env)
        except ValueError:
            raise ConfigError(f"OAR_LINK_THREADS must be an integer, got {env!r}") from None
    threads = threads or 1
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    return threads


def run_trials(cfg: ExperimentConfig, threads: int | None = None, rt: Runtime | None = None) -> list[TrialRecord]:
    rt = rt or Runtime(cfg)
    jobs = [(p, i) for p in sweep_points(cfg) for i in range(cfg.trials)]
    n = resolve_threads(threads)
    if n == 1:
        return [run_trial(rt, p, i) for p, i in jobs]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(lambda job: run_trial(rt, *job), jobs))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".6g")


def summary_rows(cfg: ExperimentConfig, records: Sequence[TrialRecord]) -> list[dict[str, str]]:
    multi = len(cfg.modality_mask) > 1
    by_key = {}
    for r in records:
        by_key.setdefault(r.key, []).append(r)
    order = {}
    for idx, p in enumerate(sweep_points(cfg)):
        order[(cfg.config_id, str(p.scheme), p.snr_db, "+".join(p.modalities))] = idx
    rows = []
    for row in sorted(metrics.aggregate(records), key=lambda r: order.get(r.key, len(order))):
        recs = by_key[row.key]
        config_id, scheme, snr, mods = row.key
        symbols = math.fsum(r.symbols_sent for r in recs) / len(recs)
        levels = sorted({str(r.level) for r in recs})
        out = {
            "config_id": f"{config_id}/{mods}" if multi else config_id,
            "scheme": scheme,
            "snr_db": _fmt(snr),
            "level": levels[0] if len(levels) == 1 else "mixed",
            "cbr": _fmt(symbols / SOURCE_DIMS),
            "kbps": _fmt(symbols / 1000.0),
        }
        for col in metrics.METRIC_COLUMNS:
            out[col] = _fmt(row.stats[col].mean)
        out["fail_rate"] = _fmt(row.fail_rate)
        out["n_trials"] = _fmt(row.count)
        rows.append(out)
    return rows


def write_csv(rows: list[dict[str, str]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def check_writable(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".oar_link_write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc.strerror or exc}") from exc
    return out


@dataclass
class SweepResult:
    summary_path: Path
    trials_path: Path | None
    records: list[TrialRecord]
    rows: list[dict[str, str]]


def run_sweep(cfg: ExperimentConfig, out_dir: str | Path | None = None, jsonl: bool = False,
              threads: int | None = None) -> SweepResult:
    """Run every (modality set, scheme, SNR) point and write ``summary.csv``.

    The output directory is checked before any trial runs. With ``jsonl``
    each trial is also dumped to ``trials.jsonl``.
    """
    out = check_writable(out_dir if out_dir is not None else cfg.output)
    rt = Runtime(cfg)
    t0 = time.perf_counter()
    records = run_trials(cfg, threads, rt)
    log.info("ran %d trials in %.2fs", len(records), time.perf_counter() - t0)
    for stage in ("encode", "channel", "decode"):
        vals = [r.timing[stage] for r in records if stage in r.timing]
        if vals:
            log.info("mean %s time %.3g ms", stage, 1e3 * math.fsum(vals) / len(vals))
    rows = summary_rows(cfg, records)
    summary = out / "summary.csv"
    summary.write_text(write_csv(rows))
    trials_path = None
    if jsonl:
        trials_path = out / "trials.jsonl"
        with trials_path.open("w") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":")) + "\n")
    return SweepResult(summary, trials_path, records, rows)


# -- corpus ------------------------------------------------------------------

def load_corpus(path: str | Path, vocab: Vocabulary | None = None) -> list[OarGraph]:
    """Parse a JSONL file of graphs, one per line; blank lines are skipped.

    The first invalid line aborts the load with its line number.
    """
    vocab = vocab or builtin_vocabulary()
    graphs = []
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                g = graph_from_dict(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON ({exc.msg})", lineno) from None
            except GraphParseError as exc:
                raise CorpusError(str(exc), lineno) from None
            rep = validate_graph(g, vocab)
            if not rep.ok:
                raise CorpusError(rep.violations[0], lineno)
            graphs.append(g)
    return graphs
