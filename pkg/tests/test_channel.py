import csv
import itertools

import pytest

from xorszilard import (BinaryChannel, RoundRecord, ValidationError,
                        apply_noise, binary_entropy, compress,
                        enumerate_rounds, game_value, induced_channel,
                        make_chsh, make_round, mix_with_uniform,
                        mutual_information, orient, pr_box, predicate_channel,
                        quantum_optimal_chsh, referee_encode, rounds_to_csv,
                        uniform_behaviour)


def test_referee_encode_xor_table():
    g = make_chsh()
    assert referee_encode(0, 1, 1, g) == 1
    assert referee_encode(1, 1, 1, g) == 0
    assert referee_encode(1, 0, 0, g) == 1
    # inverse identity x = r xor f(u,v)
    for x in (0, 1):
        for u in (0, 1):
            for v in (0, 1):
                r = referee_encode(x, u, v, g)
                assert x == r ^ int(g.f[u, v])


def test_referee_encode_range_checks():
    g = make_chsh()
    with pytest.raises(ValidationError):
        referee_encode(0, 2, 0, g)
    with pytest.raises(ValidationError):
        referee_encode(2, 0, 0, g)


def test_compress():
    assert compress(1, 0, 1) == 0
    assert compress(0, 0, 1) == 1
    assert compress(1, 1, 1) == 1


def test_win_iff_correct_prediction_all_assignments():
    # full 2^5 sweep: the controller bit equals x exactly on winning rounds
    g = make_chsh()
    for x, u, v, a, b in itertools.product((0, 1), repeat=5):
        rec = make_round(x, u, v, a, b, g)
        assert (rec.g == x) == (a ^ b == int(g.f[u, v]))
        assert rec.won == (rec.g == x)
    # spot check from the definition: x=1, u=v=1, a=0, b=1 wins
    rec = make_round(1, 1, 1, 0, 1, g)
    assert rec.r == 0 and rec.g == 1 and rec.won


def test_induced_channel_values():
    g = make_chsh()
    assert induced_channel(g, pr_box(g)).p == 1.0
    assert induced_channel(g, uniform_behaviour(g)).p == 0.5
    assert abs(induced_channel(g, quantum_optimal_chsh()).p - 0.853553) < 1e-6


def test_binary_entropy():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.0) == 0.0
    assert abs(binary_entropy(0.75) - 0.8112781244591328) < 1e-12
    assert abs(binary_entropy(0.75) - (1 - 0.188722)) < 1e-6
    for p in (0.1, 0.3, 0.42):
        assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-12)
    with pytest.raises(ValidationError):
        binary_entropy(1.2)


def test_mutual_information_values():
    assert mutual_information(BinaryChannel(1.0)) == 1.0
    assert abs(mutual_information(BinaryChannel(0.8535533905932737)) - 0.3991) < 5e-5
    assert abs(mutual_information(BinaryChannel(0.75)) - 0.188722) < 1e-6


def test_mutual_information_monotone_in_p():
    last = -1.0
    for i in range(51):
        p = 0.5 + 0.01 * i
        cur = mutual_information(BinaryChannel(min(p, 1.0)))
        assert cur >= last
        if 0.5 < p < 1.0:
            assert cur > last
        last = cur


def test_apply_noise():
    assert apply_noise(1.0, 0.1) == pytest.approx(0.9, abs=1e-15)
    assert apply_noise(0.8, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert apply_noise(0.75, 0.25) == pytest.approx(0.625, abs=1e-15)
    with pytest.raises(ValidationError):
        apply_noise(0.9, 0.6)


def test_noise_composition():
    for p in (0.5, 0.6, 0.85, 1.0):
        for d1 in (0.0, 0.05, 0.2):
            for d2 in (0.0, 0.1, 0.4):
                once = apply_noise(apply_noise(p, d1), d2)
                combined = apply_noise(p, d1 + d2 - 2 * d1 * d2)
                assert abs(once - combined) < 1e-12


def test_orient():
    c = orient(0.3)
    assert c.p == 0.7 and c.flipped
    c = orient(0.5)
    assert c.p == 0.5 and not c.flipped
    c = orient(0.9)
    assert c.p == 0.9 and not c.flipped
    for p in (0.1, 0.25, 0.77):
        assert mutual_information(orient(p)) == pytest.approx(
            mutual_information(BinaryChannel(p)), abs=1e-12)


def test_predicate_channel():
    assert predicate_channel(1.0).p == 1.0
    g = make_chsh()
    w = game_value(g, quantum_optimal_chsh())
    assert predicate_channel(w).p == induced_channel(g, quantum_optimal_chsh()).p
    assert abs(mutual_information(predicate_channel(0.6)) - 0.029049) < 1e-6
    with pytest.raises(ValidationError):
        predicate_channel(1.1)


def exhaustive_channel_stats(game, behaviour):
    rounds = enumerate_rounds(game, behaviour)
    total = sum(p for p, _ in rounds)
    assert abs(total - 1.0) < 1e-12
    p_g0 = sum(p for p, rec in rounds if rec.g == 0)
    cond = []
    for x in (0, 1):
        px = sum(p for p, rec in rounds if rec.x == x)
        cond.append(sum(p for p, rec in rounds if rec.x == x and rec.g == x) / px)
    return p_g0, cond[0], cond[1]


def test_induced_channel_is_binary_symmetric():
    g = make_chsh()
    behaviours = [pr_box(g), uniform_behaviour(g), quantum_optimal_chsh(),
                  mix_with_uniform(pr_box(g), 0.7)]
    for b in behaviours:
        p_g0, c0, c1 = exhaustive_channel_stats(g, b)
        w = game_value(g, b)
        assert abs(p_g0 - 0.5) < 1e-12
        assert abs(c0 - c1) < 1e-12
        assert abs(c0 - w) < 1e-12


def test_round_record_validation():
    with pytest.raises(ValidationError):
        RoundRecord(x=0, u=0, v=0, a=0, b=0, r=0, g=1, e=1, won=False)
    with pytest.raises(ValidationError):
        RoundRecord(x=0, u=0, v=0, a=1, b=0, r=0, g=1, e=1, won=True)


def test_rounds_to_csv(tmp_path):
    g = make_chsh()
    records = [rec for _, rec in enumerate_rounds(g, pr_box(g))][:8]
    path = tmp_path / "rounds.csv"
    rounds_to_csv(records, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "u", "v", "a", "b", "r", "g", "e", "won"]
    assert len(rows) == 9
    first = records[0]
    assert rows[1] == [str(first.x), str(first.u), str(first.v), str(first.a),
                       str(first.b), str(first.r), str(first.g), str(first.e),
                       str(int(first.won))]


def test_channel_rejects_bad_probability():
    with pytest.raises(ValidationError):
        BinaryChannel(1.0000001)
    with pytest.raises(ValidationError):
        BinaryChannel(-0.1)
