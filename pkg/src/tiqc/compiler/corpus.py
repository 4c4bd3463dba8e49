"""Shipped sequence corpus and the documented interpretation of each entry.

Each ``.seq`` file is a verbatim transcription. Several entries only match
their intended operator after a documented reading: temporal reversal of the
listing, doubling or negation of MS angles, or hiding an ion throughout.
``CorpusEntry.executable()`` applies that reading and returns a sequence in
the package's single gate convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np

from ..gates import MS, Hide, PulseSequence, Unhide, ZRot
from ..targets import PERMUTATIONS, controlled_permutation, qft_unitary
from .textfmt import parse_sequence


@dataclass(frozen=True)
class Interpretation:
    reverse: bool = False
    negate_zrot: bool = False
    negate_ms: bool = False
    ms_scale: float = 1.0
    hidden_ions: tuple = ()  # 0-based, hidden for the whole sequence
    frame_in: tuple = ()  # (ion, theta) Z rotations prepended as an input phase frame
    output_order: tuple | None = None  # logical qubit q is read from physical qubit output_order[q]
    note: str = ""

    def apply(self, seq: PulseSequence) -> PulseSequence:
        ops = list(reversed(seq.ops)) if self.reverse else list(seq.ops)
        out = []
        for op in ops:
            if isinstance(op, MS):
                theta = op.theta * self.ms_scale * (-1 if self.negate_ms else 1)
                op = replace(op, theta=theta)
            elif isinstance(op, ZRot) and self.negate_zrot:
                op = replace(op, theta=-op.theta)
            out.append(op)
        frame = [ZRot(i, th, note="input frame") for i, th in self.frame_in]
        out = frame + out
        hides = [Hide(i) for i in self.hidden_ions]
        unhides = [Unhide(i) for i in reversed(self.hidden_ions)]
        return seq.with_ops(hides + out + unhides)


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    description: str
    interpretation: Interpretation = field(default_factory=Interpretation)
    target_kind: str | None = None  # "qft" or a permutation key
    power: int = 1
    equivalences: tuple = ("phase",)

    def verbatim(self) -> PulseSequence:
        return load_verbatim(self.name)

    def executable(self) -> PulseSequence:
        return self.interpretation.apply(self.verbatim())

    def target(self) -> np.ndarray | None:
        if self.target_kind is None:
            return None
        if self.target_kind == "qft":
            return qft_unitary(3)
        return controlled_permutation(PERMUTATIONS[self.target_kind], self.power)


_CPERM_EQ = ("phase", "output_phases")

CORPUS = {
    e.name: e
    for e in [
        CorpusEntry("ghz_budget", "three-ion reference sequence used for the open-system error budget"),
        CorpusEntry(
            "qft3",
            "fully coherent three-qubit QFT",
            Interpretation(
                reverse=True,
                negate_ms=True,
                frame_in=((0, np.pi), (1, -np.pi / 2), (2, -11 * np.pi / 16)),
                output_order=(2, 1, 0),
                note="listing read bottom to top, MS angles negated, Z input frame, output qubits reversed",
            ),
            "qft",
            equivalences=("phase", "permutation", "output_phases"),
        ),
        CorpusEntry("cperm1", "controlled pi1", Interpretation(), "pi1", equivalences=_CPERM_EQ),
        CorpusEntry(
            "cperm2",
            "controlled pi2",
            Interpretation(ms_scale=2.0, hidden_ions=(2,), note="MS angles doubled, ion 3 hidden"),
            "pi2",
            equivalences=_CPERM_EQ,
        ),
        CorpusEntry("cperm3", "controlled pi3", Interpretation(), "pi3", equivalences=_CPERM_EQ),
        CorpusEntry("cperm3sq", "controlled pi3 squared", Interpretation(), "pi3", 2, _CPERM_EQ),
        CorpusEntry("cperm4", "controlled pi4", Interpretation(negate_ms=True, note="MS angles negated"), "pi4",
                    equivalences=_CPERM_EQ),
        CorpusEntry("cperm4sq", "controlled pi4 squared",
                    Interpretation(negate_ms=True, note="MS angles negated"), "pi4", 2, _CPERM_EQ),
        CorpusEntry("cperm4sq_second_list", "second listing that accompanies the pi4 squared sequence",
                    Interpretation(negate_ms=True, note="MS angles negated"), "pi4", 1, _CPERM_EQ),
    ]
}


def corpus_names() -> list[str]:
    return list(CORPUS)


def corpus_text(name: str) -> str:
    if name not in CORPUS:
        raise KeyError(f"unknown corpus entry {name!r}")
    return resources.files(__package__).joinpath("corpus", f"{name}.seq").read_text()


@lru_cache(maxsize=None)
def load_verbatim(name: str) -> PulseSequence:
    return parse_sequence(corpus_text(name))


def load(name: str, executable: bool = True) -> PulseSequence:
    entry = CORPUS[name]
    return entry.executable() if executable else entry.verbatim()
