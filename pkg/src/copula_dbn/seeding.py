"""Named seed derivation: one master seed, stable child seeds per component label."""

import zlib

import numpy as np


def child_seed(master: int, label: str) -> int:
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=(zlib.crc32(label.encode("utf-8")),))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def rng_for(master: int, label: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, label))
