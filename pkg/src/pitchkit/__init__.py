"""Low-delay pitch estimation toolkit.

DSP front-end (residual cross-correlation + spectral phase-delta features),
three tiny neural estimators with a from-scratch trainer, a pure-DSP
correlation-maximizing baseline, and an evaluation harness with plots.
"""

from .audio import AudioClip, AudioFormatError, read_wav, write_wav, SAMPLE_RATE
from .baseline import LpeConfig, LpeTracker, estimate_baseline, lag_to_hz
from .evaluate import (
    ReferenceCorpus,
    cents_to_hz,
    hz_to_cents,
    ingest_ptdb_layout,
    mix_at_snr,
    pitch_histogram,
    rca,
    snr_sweep,
)
from .features import (
    FrameGrid,
    FeatureExtractor,
    extract_features,
    read_features,
    write_features,
)
from .nn.arch import ArchSpec, arch_spec, count_params, flops_breakdown
from .nn.model import ModelRunner, pitch_decode, class_to_hz
from .nn.weights import ModelWeights, init_weights, load_weights, save_weights
from .track import PitchTrack, read_track_csv, write_track_csv

__version__ = "0.1.0"
