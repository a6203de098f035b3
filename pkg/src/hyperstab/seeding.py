"""Deterministic substream seeds: every random draw in a run descends from
one global seed through a hashed path of names, so adding or reordering
experiments never perturbs the randomness of the others."""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *parts) -> int:
    """64-bit substream seed from a root seed and a path of string/int tags."""
    tag = str(int(root)).encode()
    for p in parts:
        tag += b"/" + str(p).encode()
    return int.from_bytes(hashlib.sha256(tag).digest()[:8], "little")
