# univoque/__init__.py
"""Unique expansions in non-integer bases: certified expansions, entropy and dimension."""
from .dimension import hausdorff_dimension, plateau_from_word, sandwich_entropy, sweep
from .errors import UnivoqueError
from .expansions import AlphaPrefix, Base, base_from_alpha, classify_univoque, kl_alpha_digits, quasi_greedy_alpha
from .subshifts import SftKind, build_sft, count_words, entropy_bounds
from .words import EventuallyPeriodicSeq, Word, parse_sequence, parse_word

__version__ = '0.1.0'
