"""Link-level simulator for semantic scene-graph transmission.

Scenes are object/attribute/relation graphs carried over a noisy analog
channel as three prioritised latent streams.
"""

from ._accel import BACKEND
from .channel import ChannelConfig, DigitalLinkConfig, awgn, digital_outage, normalize_power
from .codec import Codebook, decode_cascade, encode
from .ged import GedCosts, ged
from .graph import ObjectNode, OarGraph, RelationEdge, parse_graph, serialize_graph, validate_graph
from .harness import ExperimentConfig, run_sweep, run_trial
from .metrics import alignment_distortion, mean_recall_at_k, recall_precision_at_k
from .scheduler import StreamProfile, TransmissionMask, csi_to_budget, optimize_mask
from .vocab import Vocabulary, builtin_vocabulary
from .worldgen import ObservationConfig, SceneConfig, fuse, generate_scene, observe

__version__ = "0.1.0"
