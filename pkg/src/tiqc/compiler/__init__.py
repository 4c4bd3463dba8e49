"""Sequence text format, shipped corpus, verification and synthesis."""

from .corpus import CORPUS, CorpusEntry, Interpretation, corpus_names, load
from .synth import OptimizerConfig, SynthesisResult, sequence_infidelity, synthesize
from .textfmt import SequenceSyntaxError, emit_sequence, format_angle, parse_angle, parse_sequence
from .unitary import VerifyReport, ms_concatenation, sequence_unitary, verify_sequence

__all__ = [
    "CORPUS",
    "CorpusEntry",
    "Interpretation",
    "OptimizerConfig",
    "SequenceSyntaxError",
    "SynthesisResult",
    "VerifyReport",
    "corpus_names",
    "emit_sequence",
    "format_angle",
    "load",
    "ms_concatenation",
    "parse_angle",
    "parse_sequence",
    "sequence_infidelity",
    "sequence_unitary",
    "synthesize",
    "verify_sequence",
]
