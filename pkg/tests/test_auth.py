import numpy as np
import pytest

from authqka.auth import bits_to_str, derive_auth_tag, hash_function_id, parse_hash_function_id
from authqka.protocol import ProtocolConfig

KEY = bytes(range(32))
R_I = b"\x01" * 16
R_T = b"\x02" * 16


def test_deterministic():
    a = derive_auth_tag(KEY, b"P1", R_I, R_T, 88)
    b = derive_auth_tag(KEY, b"P1", R_I, R_T, 88)
    assert np.array_equal(a, b)
    assert set(np.unique(a)) <= {0, 1}


def test_length_follows_config():
    cfg = ProtocolConfig(m=3, n=64, delta=8)
    assert cfg.L == 88
    assert derive_auth_tag(KEY, b"P1", R_I, R_T, cfg.L).shape == (88,)
    # spans several hash blocks
    assert derive_auth_tag(KEY, b"P1", R_I, R_T, 700).shape == (700,)


def test_prefix_stable_across_lengths():
    short = derive_auth_tag(KEY, b"P1", R_I, R_T, 100)
    long = derive_auth_tag(KEY, b"P1", R_I, R_T, 600)
    assert np.array_equal(short, long[:100])


def test_rejects_empty_tag():
    with pytest.raises(ValueError):
        derive_auth_tag(KEY, b"P1", R_I, R_T, 0)


@pytest.mark.parametrize(
    "change",
    [
        dict(public_id=b"P2"),
        dict(r_party=b"\x03" * 16),
        dict(r_tp=b"\x04" * 16),
        dict(selector=7),
    ],
)
def test_every_input_matters(change):
    args = dict(private_key=KEY, public_id=b"P1", r_party=R_I, r_tp=R_T, length=128)
    base = derive_auth_tag(**args)
    assert not np.array_equal(base, derive_auth_tag(**{**args, **change}))


def test_key_bit_flip_avalanche():
    rng = np.random.default_rng(2024)
    L, trials = 88, 1000
    distances = []
    for _ in range(trials):
        key = bytearray(rng.bytes(32))
        a = derive_auth_tag(bytes(key), b"P1", R_I, R_T, L)
        bit = int(rng.integers(256))
        key[bit // 8] ^= 1 << (bit % 8)
        b = derive_auth_tag(bytes(key), b"P1", R_I, R_T, L)
        distances.append(int((a != b).sum()))
    sigma = np.sqrt(L / 4 / trials)
    assert abs(np.mean(distances) - L / 2) < 4 * sigma


def test_hash_identifier_roundtrip():
    ident = hash_function_id(0xDEADBEEF)
    assert ident == "hmac-sha256-ctr/00000000deadbeef"
    assert parse_hash_function_id(ident) == 0xDEADBEEF
    with pytest.raises(ValueError):
        parse_hash_function_id("md5/00")


def test_bits_to_str():
    assert bits_to_str(np.array([1, 0, 1], dtype=np.uint8)) == "101"
