"""Centralised tunables and magic numbers.

All numeric constants that control runtime behaviour are collected here
so they are easy to find, document, and adjust.
"""

# ---------------------------------------------------------------------------
# Attributes and their class vocabularies  (src/core/model.py)
# ---------------------------------------------------------------------------
DIALECT_CLASSES = ("moldavian", "standard_romanian")
GENDER_CLASSES  = ("male", "female")
AGE_CLASSES     = ("30-40", "40-50", "50-60", "60-70", "other")

# Display markers for roles in results tables and the positional role syntax
ROLE_MARKERS = {"primary": "↑", "adversarial": "↓", "off": "✗"}

# Corpus proportions used when SynthConfig.mimic_demographics is set
GENDER_PRIOR = (0.679, 0.321)
AGE_PRIOR    = (0.152, 0.379, 0.385, 0.078, 0.006)

# ---------------------------------------------------------------------------
# Model / training  (src/core/model.py, training.py, meta.py)
# ---------------------------------------------------------------------------
DEFAULT_INPUT_DIM  = 16
DEFAULT_HIDDEN_DIM = 32
DEFAULT_NUM_LAYERS = 2
GAMMA_INIT         = 0.1
GAMMA_MAX          = 10.0
ADVERSARY_DECAY    = 1.0      # L2 decay on adversarial head parameters
META_LR            = 0.01

# ---------------------------------------------------------------------------
# Corpus  (src/corpus/*)
# ---------------------------------------------------------------------------
FRAME_RATE      = 50       # synthetic frames per second
MIN_DURATION_S  = 0.4
MAX_DURATION_S  = 30.0
FEATURE_MAGIC   = b"MRVF1"
NOISE_DECILE    = 0.1      # lowest fraction of frames used as the SNR noise floor
SPLIT_NAMES     = ("train", "val", "test")

# ---------------------------------------------------------------------------
# Checkpoints  (src/core/checkpoint.py)
# ---------------------------------------------------------------------------
CHECKPOINT_MAGIC   = b"MRVC1\n"
CHECKPOINT_VERSION = 1

# ---------------------------------------------------------------------------
# Evaluation  (src/eval/*)
# ---------------------------------------------------------------------------
PROBE_EPOCHS      = 200
PROBE_LR          = 0.5
PROBE_HELD_OUT    = 0.2
