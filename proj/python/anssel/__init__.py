"""Pairwise answer selection: train, evaluate and rank with a small transformer."""

import json
from os import PathLike
from typing import Optional, Sequence, Union

from . import _anssel
from ._anssel import (
    AnsselError,
    ConfigError,
    DataError,
    NumericalError,
    pairwise_loss,
    rank_metrics,
    tokenize,
)

__all__ = [
    "AnsselError",
    "ConfigError",
    "DataError",
    "NumericalError",
    "Model",
    "convert_tsv",
    "dataset_stats",
    "make_separable_corpus",
    "pairwise_loss",
    "rank_metrics",
    "tokenize",
    "train",
]

_Path = Union[str, PathLike]


def convert_tsv(in_path: _Path, out_path: _Path, note: str = "") -> None:
    """4-column TSV (question_id, question, answer, 0|1) to canonical JSONL."""
    _anssel.convert_tsv(str(in_path), str(out_path), note)


def make_separable_corpus(
    out_path: _Path,
    num_questions: int = 50,
    num_markers: int = 8,
    seed: int = 1,
    id_prefix: str = "q",
) -> None:
    _anssel.make_separable_corpus(str(out_path), num_questions, num_markers, seed, id_prefix)


def dataset_stats(path: _Path) -> dict:
    return json.loads(_anssel.dataset_stats(str(path)))


def train(
    train_path: _Path,
    dev_path: _Path,
    out_dir: _Path,
    config_path: Optional[_Path] = None,
    epochs: Optional[int] = None,
    seed: Optional[int] = None,
) -> dict:
    """Train and write model.ckpt, vocab.txt, history.json and config.json to out_dir.

    Returns the training history.
    """
    history = _anssel.train(
        str(train_path),
        str(dev_path),
        str(out_dir),
        None if config_path is None else str(config_path),
        epochs,
        seed,
    )
    return json.loads(history)


class Model:
    """A trained scorer loaded from a checkpoint and its vocab."""

    def __init__(self, checkpoint: _Path, vocab: _Path):
        self._impl = _anssel.Model(str(checkpoint), str(vocab))

    @property
    def vocab_size(self) -> int:
        return self._impl.vocab_size

    @property
    def config(self) -> dict:
        return json.loads(self._impl.config_json())

    def score(self, question: str, answer: str) -> float:
        return self._impl.score(question, answer)

    def rank(self, question: str, answers: Sequence[str]) -> list:
        """[(index into answers, score)] best first."""
        return self._impl.rank(question, list(answers))

    def evaluate(
        self,
        data_path: _Path,
        filter: Optional[str] = None,
        run_file: Optional[_Path] = None,
    ) -> dict:
        report = self._impl.evaluate(
            str(data_path), filter, None if run_file is None else str(run_file)
        )
        return json.loads(report)
