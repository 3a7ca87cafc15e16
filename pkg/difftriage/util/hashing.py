import json
from typing import Any

from cryptography.hazmat.primitives import hashes


def sha256_hex(data: bytes | str) -> str:
    """
    Returns the lowercase hex SHA-256 digest of the given data.
    Args:
        data (bytes | str): raw bytes, strings are encoded as UTF-8.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize().hex()


def canonical_json(value: Any) -> str:
    """Compact JSON with sorted keys, the same value always gives the same text."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def cache_key(model: str, inputs: Any) -> str:
    """
    Content address of an LLM request: the model name plus the canonical JSON of everything
    the prompts are built from.
    """
    return sha256_hex(canonical_json({"model": model, "inputs": inputs}))
