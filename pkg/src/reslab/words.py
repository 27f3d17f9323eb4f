"""Cyclic words over a finite alphabet with a forbidden-successor rule.

Both orbit sources share this combinatorics: Schottky words forbid a letter
followed by its inverse, billiard words forbid a letter followed by itself.
Letters are integers ``0..K-1``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import CombinatorialOverflow

DEFAULT_WORD_CAP = 4_000_000


def canonical_rotation(letters):
    """Lexicographically minimal rotation of ``letters`` as a tuple."""
    letters = tuple(letters)
    if not letters:
        return letters
    return min(letters[k:] + letters[:k] for k in range(len(letters)))


def primitive_period(letters):
    """Smallest ``p`` such that ``letters`` is a power of its length-``p`` prefix."""
    n = len(letters)
    for p in range(1, n + 1):
        if n % p == 0 and tuple(letters[:p]) * (n // p) == tuple(letters):
            return p
    return n


@dataclass(frozen=True)
class CyclicWord:
    """A cyclically reduced word stored as its canonical rotation."""

    letters: tuple
    primitive: bool

    @classmethod
    def from_letters(cls, letters, forbidden):
        """Validate reducedness (including wrap-around) and canonicalize.

        ``forbidden(a, b)`` returns True when ``b`` may not follow ``a``.
        """
        letters = tuple(int(a) for a in letters)
        if not letters:
            raise ValueError("empty word")
        n = len(letters)
        for k in range(n):
            a, b = letters[k], letters[(k + 1) % n]
            if forbidden(a, b):
                raise ValueError(f"word {letters} is not cyclically reduced at position {k}")
        canon = canonical_rotation(letters)
        return cls(canon, primitive_period(canon) == n)

    def __len__(self):
        return len(self.letters)

    def label(self, alphabet=None):
        if alphabet is None:
            return ".".join(str(a + 1) for a in self.letters)
        return "".join(alphabet[a] for a in self.letters)


def estimate_count(alphabet_size, branching, max_length):
    """Rough number of cyclically reduced words up to ``max_length``."""
    total = 0
    for n in range(1, max_length + 1):
        total += alphabet_size * branching ** (n - 1)
    return total


def lyndon_words(alphabet_size, length, allowed, cap=DEFAULT_WORD_CAP):
    """All primitive cyclically admissible words of a given length.

    Each conjugacy class is represented once, by its Lyndon word (the strictly
    minimal rotation). ``allowed`` is a boolean ``(K, K)`` transition matrix.

    Returns
    -------
    (count, length) int array, rows in lexicographic order.
    """
    allowed = np.asarray(allowed, dtype=bool)
    K = alphabet_size
    if length == 1:
        # a single letter closes on itself
        keep = [a for a in range(K) if allowed[a, a]]
        return np.array(keep, dtype=np.int64).reshape(-1, 1)
    branching = int(allowed.sum(axis=1).max())
    if K * branching ** (length - 1) > cap:
        raise CombinatorialOverflow(K * branching ** (length - 1), cap)
    words = _extend(np.arange(K, dtype=np.int64).reshape(-1, 1), allowed, length - 1)
    words = words[allowed[words[:, -1], words[:, 0]]]
    if not len(words):
        return words
    if K ** length >= 2 ** 62:
        rows = [w for w in words if _is_lyndon(tuple(w))]
        return np.array(rows, dtype=np.int64).reshape(-1, length)
    powers = K ** np.arange(length - 1, -1, -1, dtype=np.int64)
    value = words @ powers
    keep = np.ones(len(words), dtype=bool)
    for r in range(1, length):
        # rotation left by r: value of words[:, r:] + words[:, :r]
        hi = K ** (length - r)
        rot = (value % hi) * (K ** r) + value // hi
        keep &= value < rot
    return words[keep]


def _is_lyndon(w):
    return all(w < w[k:] + w[:k] for k in range(1, len(w)))


def schottky_transitions(rank):
    """Transition matrix for reduced words in a free group of the given rank."""
    K = 2 * rank
    allowed = np.ones((K, K), dtype=bool)
    for a in range(K):
        allowed[a, (a + rank) % K] = False
    return allowed


def billiard_transitions(n_disks):
    return ~np.eye(n_disks, dtype=bool)


def reduced_words(alphabet_size, length, allowed, cap=DEFAULT_WORD_CAP):
    """All (not necessarily cyclically) admissible words of a given length."""
    allowed = np.asarray(allowed, dtype=bool)
    branching = int(allowed.sum(axis=1).max())
    if alphabet_size * branching ** (length - 1) > cap:
        raise CombinatorialOverflow(alphabet_size * branching ** (length - 1), cap)
    return _extend(np.arange(alphabet_size, dtype=np.int64).reshape(-1, 1), allowed, length - 1)


def _extend(words, allowed, steps):
    K = allowed.shape[0]
    for _ in range(steps):
        mask = allowed[words[:, -1]].ravel()
        rep = np.repeat(words, K, axis=0)[mask]
        nxt = np.tile(np.arange(K, dtype=np.int64), len(words))[mask]
        words = np.column_stack([rep, nxt])
    return words
