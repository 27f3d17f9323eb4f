"""Power-series expansion of Euler products ordered by symbolic word length.

Two evaluation routes give the same truncated coefficients:

* ``direct``: multiply the factors as truncated polynomials, pairwise in a
  balanced tree. No cancellation beyond what the product itself has, so it
  stays accurate where single weights are large (deep below the real axis).
* ``log``: sum ``log(1 - t)`` series by word length and exponentiate. Cost
  is independent of the number of factors per coefficient, which is what
  makes groups with ~10^5 classes and dozens of Euler factors tractable;
  rounding grows like the largest ``|t|^k`` term.
"""
import numpy as np

DIRECT_LIMIT = 50_000


def expand_product(word_lengths, log_weights, order, method="auto"):
    """Coefficients of ``prod_{g,m} (1 - z^{n_g} exp(log_weights[g, m]))`` up to ``z^order``.

    Parameters
    ----------
    word_lengths : (G,) int array
        Symbolic length ``n_g`` of every primitive cycle.
    log_weights : (G,) or (G, F) complex array
        Logarithm of the cycle weight, one column per Euler factor.
    order : int
        Truncation order ``N``.

    Returns
    -------
    b : (N + 1,) complex array, ``b[0] == 1``. Evaluating the truncated
    product at ``z = 1`` is ``b.sum()``.

    ``method`` is ``"direct"``, ``"log"`` or ``"auto"`` (direct when there are
    at most ``DIRECT_LIMIT`` factors of word length <= ``order``).
    """
    n = np.asarray(word_lengths, dtype=np.int64)
    lw = np.asarray(log_weights, dtype=complex)
    if lw.ndim == 1:
        lw = lw[:, None]
    if method == "auto":
        method = "direct" if np.count_nonzero(n <= order) * lw.shape[1] <= DIRECT_LIMIT else "log"
    if method == "direct":
        return _direct_product(n, lw, order)
    if method != "log":
        raise ValueError(f"unknown expansion method {method!r}")
    a = np.zeros(order + 1, dtype=complex)
    for k in range(1, order + 1):
        sel = n * k <= order
        if not sel.any():
            break
        # log(1 - t) = -sum_k t^k / k
        contrib = np.exp(k * lw[sel]).sum(axis=1) / k
        idx = n[sel] * k
        a -= np.bincount(idx, weights=contrib.real, minlength=order + 1)
        a -= 1j * np.bincount(idx, weights=contrib.imag, minlength=order + 1)
    return exp_series(a)


def exp_series(a):
    """Coefficients of ``exp(sum_j a_j z^j)`` given ``a`` with ``a[0] == 0``."""
    N = len(a) - 1
    b = np.zeros(N + 1, dtype=complex)
    b[0] = 1.0
    j = np.arange(1, N + 1)
    for m in range(1, N + 1):
        b[m] = np.dot(j[:m] * a[1:m + 1], b[m - 1::-1]) / m
    return b


def _direct_product(n, lw, order):
    keep = n <= order
    n, lw = n[keep], lw[keep]
    F = lw.shape[1]
    polys = np.zeros((len(n) * F, order + 1), dtype=complex)
    polys[:, 0] = 1.0
    polys[np.arange(len(n) * F), np.repeat(n, F)] = -np.exp(lw).ravel()
    if not len(polys):
        out = np.zeros(order + 1, dtype=complex)
        out[0] = 1.0
        return out
    while len(polys) > 1:
        if len(polys) % 2:
            polys = np.vstack([polys, np.eye(1, order + 1, dtype=complex)])
        a, b = polys[0::2], polys[1::2]
        c = np.zeros_like(a)
        for j in range(order + 1):
            c[:, j:] += a[:, j:j + 1] * b[:, :order + 1 - j]
        polys = c
    return polys[0]
