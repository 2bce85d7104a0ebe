"""Reproducible seed derivation.

``derive_seed(root, *labels)`` hashes ``"root/label1/label2/..."`` with
SHA-256 and keeps the first 8 bytes, so every shard of an experiment draws
from its own stream regardless of execution order.
"""

from __future__ import annotations

import hashlib


def derive_seed(root: int, *labels) -> int:
    text = "/".join([str(int(root))] + [str(x) for x in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
