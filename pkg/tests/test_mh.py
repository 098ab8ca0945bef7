import json
import math
import random

import pytest

from knapcrack.mh import (
    Ciphertext,
    DecryptionError,
    PrivateKey,
    PublicKey,
    bits_to_bytes,
    bytes_to_bits,
    ciphertext_from_dict,
    ciphertext_to_dict,
    decrypt_block,
    decrypt_message,
    encrypt_block,
    encrypt_message,
    gen_superincreasing,
    int_log2,
    is_superincreasing,
    key_density,
    key_from_dict,
    key_to_dict,
    keygen,
    load_ciphertext,
    load_key,
    mod_inverse,
    ones_proportion,
    pad_bits,
    profile,
    save_ciphertext,
    save_key,
)


def random_block(n, rng):
    return [rng.getrandbits(1) for _ in range(n)]


class TestSuperincreasing:
    def test_single_element(self):
        seq = gen_superincreasing(1, random.Random(1))
        assert len(seq) == 1 and seq[0] >= 1

    def test_property_by_linear_scan(self):
        # independent oracle: direct prefix-sum scan
        seq = gen_superincreasing(5, random.Random(7))
        total = 0
        for a in seq:
            assert a > total
            total += a

    def test_scan_many_lengths(self):
        for n in (2, 3, 10, 40, 112):
            assert is_superincreasing(gen_superincreasing(n, random.Random(n)))

    def test_length_64_magnitude(self):
        # 64 superincreasing terms force the top element past 64 bits, so a
        # full-subset ciphertext exceeds 10^19
        seq = gen_superincreasing(64, random.Random(3))
        assert seq[-1].bit_length() >= 64
        assert sum(seq) > 10**19

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            gen_superincreasing(0, random.Random(1))

    def test_rejects_nonpositive_growth(self):
        with pytest.raises(ValueError):
            gen_superincreasing(3, random.Random(1), growth=(0, 5))

    def test_deterministic_per_seed(self):
        assert gen_superincreasing(12, random.Random(5)) == gen_superincreasing(12, random.Random(5))

    def test_is_superincreasing_rejects(self):
        assert not is_superincreasing([])
        assert not is_superincreasing([1, 2, 3])  # 3 == 1 + 2
        assert not is_superincreasing([0, 2])
        assert is_superincreasing([1, 2, 4, 8])


class TestModInverse:
    def test_identity(self):
        assert mod_inverse(1, 97) == 1

    def test_hand_check(self):
        # 3 * 5 = 15 = 2*7 + 1
        assert mod_inverse(3, 7) == 5

    def test_definitional_on_generated_keys(self):
        for seed in range(10):
            sk, _ = keygen(16, random.Random(seed))
            assert (sk.w * mod_inverse(sk.w, sk.m)) % sk.m == 1

    def test_non_coprime_rejected(self):
        with pytest.raises(ValueError):
            mod_inverse(6, 9)


class TestKeygen:
    def test_invariants(self):
        for seed in range(20):
            sk, pk = keygen(8, random.Random(seed))
            assert math.gcd(sk.w, sk.m) == 1
            assert sk.m > sum(sk.a)
            assert sorted(sk.delta) == list(range(8))
            assert len(pk.b) == 8

    def test_public_weights_against_independent_modmul(self):
        sk, pk = keygen(8, random.Random(123))
        # recompute with a separate big-int multiply/reduce path
        for i in range(8):
            prod = sk.a[sk.delta[i]] * sk.w
            assert pk.b[i] == prod - (prod // sk.m) * sk.m

    def test_density_typical_range(self):
        for seed in range(100):
            _, pk = keygen(24, random.Random(seed))
            assert 0.0 < key_density(pk) <= 1.2

    def test_deterministic(self):
        sk1, pk1 = keygen(16, random.Random(9))
        sk2, pk2 = keygen(16, random.Random(9))
        assert sk1.a == sk2.a and sk1.m == sk2.m and sk1.w == sk2.w
        assert sk1.delta == sk2.delta and pk1.b == pk2.b

    def test_private_key_validation(self):
        with pytest.raises(ValueError):
            PrivateKey(a=[1, 2, 3], m=100, w=7, delta=[0, 1, 2])  # not superincreasing
        with pytest.raises(ValueError):
            PrivateKey(a=[1, 2, 4], m=5, w=3, delta=[0, 1, 2])  # modulus too small
        with pytest.raises(ValueError):
            PrivateKey(a=[1, 2, 4], m=100, w=10, delta=[0, 1, 1])  # bad permutation
        with pytest.raises(ValueError):
            PrivateKey(a=[1, 2, 4], m=100, w=10, delta=[0, 1, 2])  # gcd(10, 100) != 1


class TestEncrypt:
    def test_zero_block(self):
        _, pk = keygen(8, random.Random(2))
        assert encrypt_block(pk, [0] * 8) == 0

    def test_full_block(self):
        _, pk = keygen(8, random.Random(2))
        assert encrypt_block(pk, [1] * 8) == sum(pk.b)

    def test_against_loop_oracle(self):
        rng = random.Random(77)
        _, pk = keygen(8, rng)
        for _ in range(50):
            block = random_block(8, rng)
            expected = 0
            for j in range(8):
                expected += pk.b[j] * block[j]
            assert encrypt_block(pk, block) == expected

    def test_length_mismatch(self):
        _, pk = keygen(8, random.Random(2))
        with pytest.raises(ValueError):
            encrypt_block(pk, [0] * 7)

    def test_empty_message(self):
        _, pk = keygen(8, random.Random(2))
        ct = encrypt_message(pk, b"")
        assert ct.k == 0 and ct.message_bits == 0

    def test_exact_fit(self):
        _, pk = keygen(8, random.Random(2))
        assert encrypt_message(pk, b"A").k == 1

    def test_padding_hand_count(self):
        # 3 bytes = 24 bits; n=16 gives two blocks with 8 zero bits of padding
        sk, pk = keygen(16, random.Random(4))
        ct = encrypt_message(pk, b"abc")
        assert ct.k == 2 and ct.message_bits == 24
        last_bits = decrypt_block(sk, ct.c[1])
        assert last_bits[8:] == [0] * 8


class TestDecrypt:
    def test_zero_value(self):
        sk, _ = keygen(8, random.Random(5))
        assert decrypt_block(sk, 0) == [0] * 8

    def test_full_subset(self):
        sk, pk = keygen(8, random.Random(5))
        assert decrypt_block(sk, sum(pk.b)) == [1] * 8

    def test_roundtrip_blocks(self):
        rng = random.Random(11)
        for n in (8, 16, 24, 32, 64):
            sk, pk = keygen(n, rng)
            for _ in range(40):
                block = random_block(n, rng)
                assert decrypt_block(sk, encrypt_block(pk, block)) == block

    def test_roundtrip_messages(self):
        rng = random.Random(13)
        for n in (8, 16, 32):
            sk, pk = keygen(n, rng)
            for _ in range(20):
                msg = bytes(rng.randrange(256) for _ in range(rng.randint(0, 9)))
                assert decrypt_message(sk, encrypt_message(pk, msg)) == msg

    def test_unreachable_value_raises(self):
        sk, pk = keygen(8, random.Random(6))
        with pytest.raises(DecryptionError):
            decrypt_block(sk, sum(pk.b) + 1)

    def test_negative_rejected(self):
        sk, _ = keygen(8, random.Random(6))
        with pytest.raises(ValueError):
            decrypt_block(sk, -1)


class TestGreedyAgainstEnumeration:
    def test_all_subset_sums_small_keys(self):
        # exhaustive oracle: every achievable subset sum decrypts to its subset
        for seed in range(6):
            n = 10
            sk, pk = keygen(n, random.Random(seed))
            for mask in range(2**n):
                block = [(mask >> j) & 1 for j in range(n)]
                c = sum(pk.b[j] for j in range(n) if block[j])
                assert decrypt_block(sk, c) == block

    def test_distinct_blocks_distinct_values(self):
        n = 10
        _, pk = keygen(n, random.Random(42))
        sums = {sum(pk.b[j] for j in range(n) if (mask >> j) & 1) for mask in range(2**n)}
        assert len(sums) == 2**n


class TestProfile:
    def test_density_hand_value(self):
        pk = PublicKey(b=[2**40] + [3] * 31)
        prof = profile(pk, [0] * 32)
        assert prof.density == pytest.approx(32 / 40, abs=1e-12)

    def test_zero_block_proportion(self):
        _, pk = keygen(16, random.Random(8))
        assert profile(pk, [0] * 16).ones_proportion == 0.0

    def test_paper_bucket_reachable(self):
        # densities down in the published comparison buckets are reachable
        found = []
        for seed in range(60):
            _, pk = keygen(32, random.Random(seed), growth=(1, 2**17))
            found.append(key_density(pk))
        assert any(0.6 <= d < 1.0 for d in found)

    def test_degenerate_weights_rejected(self):
        with pytest.raises(ValueError):
            profile(PublicKey(b=[1, 1, 1]), [0, 0, 0])

    def test_permutation_invariance(self):
        rng = random.Random(3)
        _, pk = keygen(12, rng)
        block = random_block(12, rng)
        shuffled_b = list(pk.b)
        shuffled_block = list(block)
        rng.shuffle(shuffled_b)
        rng.shuffle(shuffled_block)
        assert key_density(PublicKey(b=shuffled_b)) == key_density(pk)
        assert ones_proportion(shuffled_block) == ones_proportion(block)

    def test_int_log2_matches_math_on_small_values(self):
        for x in (2, 3, 17, 2**52 + 1):
            assert int_log2(x) == pytest.approx(math.log2(x), rel=1e-15)

    def test_int_log2_huge(self):
        assert int_log2(2**400) == pytest.approx(400.0, abs=1e-9)


class TestBitHelpers:
    def test_bytes_bits_roundtrip(self):
        rng = random.Random(21)
        for _ in range(30):
            data = bytes(rng.randrange(256) for _ in range(rng.randint(0, 12)))
            assert bits_to_bytes(bytes_to_bits(data)) == data

    def test_msb_first(self):
        assert bytes_to_bits(b"\x80") == [1, 0, 0, 0, 0, 0, 0, 0]

    def test_pad(self):
        assert pad_bits([1, 1], 5) == [1, 1, 0, 0, 0]
        assert pad_bits([1, 0, 1], 3) == [1, 0, 1]


class TestFileFormats:
    def test_key_roundtrip(self, tmp_path):
        sk, pk = keygen(16, random.Random(33))
        path = tmp_path / "key.json"
        save_key(path, sk, pk)
        sk2, pk2 = load_key(path)
        assert sk2.a == sk.a and sk2.m == sk.m and sk2.w == sk.w and sk2.delta == sk.delta
        assert pk2.b == pk.b

    def test_key_decimal_strings(self, tmp_path):
        sk, pk = keygen(112, random.Random(34))
        path = tmp_path / "key.json"
        save_key(path, sk, pk)
        doc = json.loads(path.read_text())
        assert all(isinstance(x, str) for x in doc["a"])
        assert all(isinstance(x, str) for x in doc["b"])
        assert isinstance(doc["m"], str)

    def test_public_only_key(self, tmp_path):
        _, pk = keygen(16, random.Random(35))
        path = tmp_path / "pub.json"
        save_key(path, None, pk)
        sk2, pk2 = load_key(path)
        assert sk2 is None and pk2.b == pk.b

    def test_ciphertext_roundtrip(self, tmp_path):
        sk, pk = keygen(16, random.Random(36))
        ct = encrypt_message(pk, b"hello")
        path = tmp_path / "ct.json"
        save_ciphertext(path, ct)
        ct2 = load_ciphertext(path)
        assert ct2.n == ct.n and ct2.c == ct.c and ct2.message_bits == ct.message_bits
        assert decrypt_message(sk, ct2) == b"hello"

    def test_ciphertext_k_mismatch_rejected(self):
        doc = ciphertext_to_dict(Ciphertext(n=8, c=[1, 2], message_bits=16))
        doc["k"] = 3
        with pytest.raises(ValueError):
            ciphertext_from_dict(doc)

    def test_key_dict_roundtrip_no_file(self):
        sk, pk = keygen(24, random.Random(37))
        sk2, pk2 = key_from_dict(key_to_dict(sk, pk))
        assert sk2.m == sk.m and pk2.b == pk.b
