from .adam import AdamState, adam_init, adam_step
from .augment import AugmentConfig, augment, augment_corpus, biquad_is_stable, sample_biquad
from .backprop import backward_batch, forward_batch
from .corpus import (
    LabeledClip,
    VoiceProfile,
    load_corpus,
    save_corpus,
    synth_clip,
    synth_corpus,
    synth_noise_library,
    voiced_fraction,
)
from .loss import quantize_pitch, weighted_xent
from .trainer import (
    PreparedData,
    TrainConfig,
    heldout_rca,
    prepare_heldout,
    prepare_sequences,
    train,
    write_training_log,
)

__all__ = [
    "AdamState", "adam_init", "adam_step",
    "AugmentConfig", "augment", "augment_corpus", "biquad_is_stable", "sample_biquad",
    "backward_batch", "forward_batch",
    "LabeledClip", "VoiceProfile", "load_corpus", "save_corpus", "synth_clip",
    "synth_corpus", "synth_noise_library", "voiced_fraction",
    "quantize_pitch", "weighted_xent",
    "PreparedData", "TrainConfig", "heldout_rca", "prepare_heldout",
    "prepare_sequences", "train", "write_training_log",
]
