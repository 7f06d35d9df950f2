"""Levelled virtual ciphertexts with RNS-CKKS interaction rules.

Nothing here is cryptography.  A :class:`VirtualCiphertext` carries the
plaintext message in the clear and simulates the bookkeeping a real CKKS
ciphertext would impose:

* each multiplication by a ciphertext or by a plaintext *array* rescales and
  consumes one prime of the coefficient-modulus chain; multiplying by a
  scalar constant or adding does not;
* the first and last primes are special primes, so a chain of length
  ``c + 2`` supports exactly ``c`` sequential multiplications;
* operands at different depths are switched down to the deeper one before
  they are combined; the scale is pinned to the parameter scale;
* ciphertexts only interact if they share a key and a parameter set.

The class speaks enough of the NumPy operator protocol (``+``, ``-``, ``*``,
``shape``) that graph nodes need not care whether they hold plaintext or
ciphertext data.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapacityError, KeyMismatch, LevelExhausted, ShapeMismatch, SliceError

_key_ids = itertools.count(1)


@dataclass(frozen=True)
class KeyPair:
    key_id: int
    params: Any

    def __repr__(self):
        return f"KeyPair(key_id={self.key_id}, poly_modulus_degree={self.params.poly_modulus_degree})"


def keygen(params) -> KeyPair:
    return KeyPair(next(_key_ids), params)


def slot_capacity(params) -> int:
    # conventional CKKS packing: N/2 complex slots
    return params.poly_modulus_degree // 2


class VirtualCiphertext:
    __array_ufunc__ = None  # make ndarray defer to our reflected operators
    __slots__ = ("_slots", "shape", "chain", "key_id", "params", "relinearised", "noise", "_rng")

    def __init__(self, slots, shape, chain, key_id, params, relinearised=False, noise=0.0, rng=None):
        slots = np.array(slots, dtype=float).ravel()
        slots.flags.writeable = False
        self._slots = slots
        self.shape = tuple(shape)
        self.chain = tuple(chain)
        self.key_id = key_id
        self.params = params
        self.relinearised = relinearised
        self.noise = noise
        self._rng = rng

    @property
    def scale(self) -> float:
        return self.params.scale

    @property
    def slots(self) -> np.ndarray:
        return self._slots

    @property
    def size(self) -> int:
        return self._slots.size

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def mult_count(self) -> int:
        return len(self.params.coeff_mod_bits) - len(self.chain)

    @property
    def levels_left(self) -> int:
        return len(self.chain) - 2

    def _derive(self, slots, chain, relinearised):
        return VirtualCiphertext(slots, self.shape, chain, self.key_id, self.params,
                                 relinearised, self.noise, self._rng)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, -other if isinstance(other, VirtualCiphertext) else -np.asarray(other, float))

    def __rsub__(self, other):
        return add(-self, other)

    def __neg__(self):
        return self._derive(-self._slots, self.chain, self.relinearised)

    def __mul__(self, other):
        return multiply(self, other)

    __rmul__ = __mul__

    def __repr__(self):
        return (f"VirtualCiphertext(shape={self.shape}, depth={self.mult_count}, "
                f"levels_left={self.levels_left}, key_id={self.key_id})")


Operand = Union[VirtualCiphertext, np.ndarray, float]


def encrypt(x, kp: KeyPair, noise: float = 0.0, rng=None) -> VirtualCiphertext:
    x = np.asarray(x, dtype=float)
    capacity = slot_capacity(kp.params)
    if x.size > capacity:
        raise CapacityError(f"{x.size} values exceed the {capacity} slots of N={kp.params.poly_modulus_degree}")
    if noise and rng is None:
        rng = np.random.default_rng()
    return VirtualCiphertext(x.ravel(), x.shape, kp.params.coeff_mod_bits, kp.key_id,
                             kp.params, noise=noise, rng=rng)


def decrypt(ct: VirtualCiphertext, kp: KeyPair) -> np.ndarray:
    if kp.key_id != ct.key_id:
        raise KeyMismatch(f"ciphertext key {ct.key_id} cannot be opened with key {kp.key_id}")
    return np.array(ct.slots).reshape(ct.shape)


def reveal(x) -> np.ndarray:
    """Plaintext view of a signal; the simulator holds every key.

    Only gradient bookkeeping and client-side rotations use this.
    """
    if isinstance(x, VirtualCiphertext):
        return np.array(x.slots).reshape(x.shape)
    return np.asarray(x, dtype=float)


def _operands(a: VirtualCiphertext, b: Operand):
    if isinstance(b, VirtualCiphertext):
        if a.key_id != b.key_id:
            raise KeyMismatch(f"ciphertexts under keys {a.key_id} and {b.key_id} cannot interact")
        if a.params != b.params:
            raise KeyMismatch("ciphertexts use different parameter sets")
        if a.shape != b.shape:
            raise ShapeMismatch(f"ciphertext shapes {a.shape} and {b.shape} differ")
        # switch the fresher operand down the chain to meet the deeper one
        chain = a.chain if len(a.chain) <= len(b.chain) else b.chain
        return b.slots, chain, True
    other = np.asarray(b, dtype=float)
    if other.ndim == 0:
        return other, a.chain, False
    try:
        out_shape = np.broadcast_shapes(a.shape, other.shape)
    except ValueError:
        out_shape = None
    if out_shape != a.shape:
        raise ShapeMismatch(f"plaintext of shape {other.shape} does not fit ciphertext shape {a.shape}")
    return np.broadcast_to(other, a.shape).ravel(), a.chain, False


def add(a: VirtualCiphertext, b: Operand) -> VirtualCiphertext:
    other, chain, ct_ct = _operands(a, b)
    relin = a.relinearised or (ct_ct and b.relinearised)
    return a._derive(a.slots + other, chain, relin)


def multiply(a: VirtualCiphertext, b: Operand) -> VirtualCiphertext:
    other, chain, ct_ct = _operands(a, b)
    scalar = not ct_ct and np.ndim(other) == 0
    slots = a.slots * other
    if scalar:
        return a._derive(slots, chain, a.relinearised)
    if len(chain) <= 2:
        raise LevelExhausted(
            f"no usable prime left: chain {list(chain)} after {len(a.params.coeff_mod_bits) - len(chain)} multiplications"
        )
    if a.noise:
        slots = slots * (1.0 + a.noise * a._rng.uniform(-1.0, 1.0, size=slots.shape))
    chain = chain[:-2] + chain[-1:]  # rescale drops the last data prime
    return a._derive(slots, chain, True if ct_ct else a.relinearised)


def rotate(
    ct: VirtualCiphertext,
    kp_new: KeyPair,
    mode: Union[str, Sequence[Tuple[int, int]]] = "whole",
    kp_old: Optional[KeyPair] = None,
):
    """Client-side key rotation: decrypt and re-encrypt with a fresh chain.

    ``mode`` is ``"whole"`` (same message, new key), ``"sum"`` (fold every
    slot into a one-slot ciphertext) or a sequence of ``(start, stop)``
    segments over the flattened slots, each becoming its own ciphertext.
    """
    if kp_old is not None and kp_old.key_id != ct.key_id:
        raise KeyMismatch(f"rotation key {kp_old.key_id} does not open ciphertext key {ct.key_id}")
    message = reveal(ct)
    if mode == "whole":
        return encrypt(message, kp_new, ct.noise, ct._rng)
    if mode == "sum":
        return encrypt(np.array([message.sum()]), kp_new, ct.noise, ct._rng)
    flat = message.ravel()
    out = []
    for seg in mode:
        start, stop = seg
        if not 0 <= start < stop <= flat.size:
            raise SliceError(f"segment {seg} outside 0..{flat.size}")
        out.append(encrypt(flat[start:stop], kp_new, ct.noise, ct._rng))
    return out


def is_ciphertext(x) -> bool:
    return isinstance(x, VirtualCiphertext)
