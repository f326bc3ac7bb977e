"""
File:       src/type_aliases.py
Author:     Stackfuse developers
Brief:      Type aliases for type annotations.
"""
from typing import Callable, Sequence, Tuple

import numpy as np

# Type aliases
Vector = np.ndarray
Matrix = np.ndarray
IndexSet = np.ndarray

# A batch is a pair of row-aligned matrices: inputs (N x n) and targets (N x C).
Batch = Tuple[Matrix, Matrix]

Prediction = Tuple[int, Vector]
Classifier = Callable[[Vector], int]

HistoryRow = Tuple[int, float, float]
History = Sequence[HistoryRow]

ConfusablePair = Tuple[int, int, float]
