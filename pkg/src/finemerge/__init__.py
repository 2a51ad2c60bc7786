"""Service-guided CTC decoding: align a black-box transcript to local frame
posteriors, revise them, and beam-decode with a word language model."""

from .align import AlignmentError, min_frames, smooth, viterbi_align
from .baselines import RoverParams, rescore_nbest, rover_chars, rover_words
from .core import (
    DEFAULT_VOCAB,
    FrameAlignment,
    FramePosteriors,
    LocalHypothesis,
    ServiceHypothesis,
    Vocabulary,
    normalize_text,
    validate_posteriors,
)
from .decode import BeamParams, beam_decode, ctc_logprob, greedy_decode, local_confidences
from .lm import NGramLM, lm_logprob, train_trigram
from .merge import MergeParams, revise, word_index_map
from .metrics import cer, edit_distance, per_word_error_reduction, wer
from .pipeline import MergeResult, finemerge, local_decode
from .synth import SynthConfig, gen_dataset
from .tune import TunedParams, TuneGrids, grid_search

__version__ = "0.1.0"
