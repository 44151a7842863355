"""File formats used by the command-line tools.

Vectors are plain text: the first token is the length n, followed by n
whitespace-separated decimal floats. Matrices are Matrix Market files
(coordinate or array format), densified on read.
"""

import numpy as np
import scipy.io
import scipy.sparse

from .core import InvalidInputError, as_vector

__all__ = ["read_vector", "write_vector", "read_matrix"]


def read_vector(path) -> np.ndarray:
    with open(path) as handle:
        tokens = handle.read().split()
    if not tokens:
        raise InvalidInputError(f"{path}: empty vector file")
    try:
        n = int(tokens[0])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: first token must be the length") from exc
    values = tokens[1:]
    if len(values) != n:
        raise InvalidInputError(
            f"{path}: declared length {n} but found {len(values)} values"
        )
    try:
        arr = np.array([float(v) for v in values])
    except ValueError as exc:
        raise InvalidInputError(f"{path}: non-numeric entry") from exc
    return as_vector(arr, "vector")


def write_vector(path, x) -> None:
    x = as_vector(x, "x")
    with open(path, "w") as handle:
        handle.write(f"{x.shape[0]}\n")
        handle.write("\n".join(repr(float(v)) for v in x))
        handle.write("\n")


def read_matrix(path) -> np.ndarray:
    mat = scipy.io.mmread(path)
    if scipy.sparse.issparse(mat):
        mat = mat.toarray()
    return np.asarray(mat, dtype=float)
