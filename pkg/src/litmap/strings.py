"""String helpers shared by the learner and the classifiers."""

from __future__ import annotations

from typing import Iterator


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance (insert, delete, substitute all cost 1)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            ))
        previous = current
    return previous[-1]


def levenshtein_norm(a: str, b: str) -> float:
    """Edit distance divided by the length of the longer string, in [0, 1]."""
    if not a or not b:
        raise ValueError("levenshtein_norm needs two non-empty strings")
    return levenshtein(a, b) / max(len(a), len(b))


def similarity(a: str, b: str) -> float:
    """1 - levenshtein_norm; 1.0 means identical."""
    return 1.0 - levenshtein_norm(a, b)


def ngrams(tokens: list[str], sizes=(1, 2, 3)) -> Iterator[str]:
    for n in sizes:
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i:i + n])


def bounded_levenshtein(a: str, b: str, k: int) -> int:
    """Edit distance if it is <= k, otherwise k + 1 (banded DP)."""
    if abs(len(a) - len(b)) > k:
        return k + 1
    if k >= max(len(a), len(b)):
        return levenshtein(a, b)
    big = k + 1
    previous = [j if j <= k else big for j in range(len(b) + 1)]
    for i in range(1, len(a) + 1):
        lo, hi = max(1, i - k), min(len(b), i + k)
        current = [big] * (len(b) + 1)
        current[0] = i if i <= k else big
        for j in range(lo, hi + 1):
            current[j] = min(previous[j] + 1, current[j - 1] + 1,
                             previous[j - 1] + (a[i - 1] != b[j - 1]), big)
        if min(current[max(0, lo - 1):hi + 1]) > k:
            return big
        previous = current
    return min(previous[-1], big)


def similar_at_least(a: str, b: str, threshold: float) -> bool:
    """similarity(a, b) >= threshold, skipping the full DP when hopeless."""
    if a == b:
        return bool(a) and threshold <= 1.0
    if not a or not b:
        return False
    longest = max(len(a), len(b))
    k = int((1.0 - threshold) * longest + 1e-9)
    d = bounded_levenshtein(a, b, k)
    return d <= k and 1.0 - d / longest >= threshold
