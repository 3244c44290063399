"""Tables, cut-point events, quadrant probabilities, and counts parsing."""

import numpy as np
import pytest

from rcassoc import ContingencyTable, EventSet, LogitType, TableParseError, read_counts
from rcassoc.datasets import dataset_names, dataset_path

# probability table used in several worked examples below
APPENDIX_LL = np.array(
    [
        [0.1444, 0.1018, 0.0939],
        [0.0979, 0.1117, 0.1175],
        [0.0914, 0.1178, 0.1236],
    ]
)


def test_logit_type_parse():
    assert LogitType.parse("g") is LogitType.GLOBAL
    assert LogitType.parse(LogitType.LOCAL) is LogitType.LOCAL
    assert LogitType.parse(" c ") is LogitType.CONTINUATION
    with pytest.raises(ValueError):
        LogitType.parse("Q")
    assert [LogitType.parse(c).code for c in "LGCR"] == [0, 1, 2, 3]


def test_event_set_examples():
    t5 = ContingencyTable.from_probabilities(np.full((5, 5), 0.04), "G", "C")
    assert t5.event_set(0, 2, 0).indices() == (1, 2)
    assert t5.event_set(1, 2, 1).indices() == (3, 4, 5)
    t3 = ContingencyTable.from_probabilities(np.full((3, 3), 1 / 9), "L", "L")
    assert t3.event_set(0, 1, 1).indices() == (2,)
    with pytest.raises(ValueError):
        t3.event_set(0, 3, 0)
    with pytest.raises(ValueError):
        t3.event_set(0, 1, 2)


def test_event_set_disjoint_every_type_and_cut():
    t = ContingencyTable.from_probabilities(np.full((6, 6), 1 / 36))
    for lt in LogitType:
        tt = t.with_logits(lt, lt)
        for x in range(1, 6):
            e0 = set(tt.event_set(0, x, 0).indices())
            e1 = set(tt.event_set(0, x, 1).indices())
            assert not e0 & e1
            assert e0 and e1


def test_event_set_container_protocol():
    e = EventSet(2, 4)
    assert len(e) == 3
    assert 3 in e and 5 not in e


def test_quadrant_prob_uniform_global():
    t = ContingencyTable.from_probabilities(np.full((3, 3), 1 / 9), "G", "G")
    assert t.quadrant_prob(1, 1, 1, 1) == pytest.approx(4 / 9, abs=1e-14)


def test_quadrant_prob_printed_table():
    t = ContingencyTable.from_probabilities(APPENDIX_LL, "L", "L")
    assert t.quadrant_prob(1, 1, 0, 0) == pytest.approx(0.1444, abs=1e-12)
    tcc = t.with_logits("C", "C")
    assert tcc.quadrant_prob(1, 1, 1, 1) == pytest.approx(0.4706, abs=1e-12)


def test_quadrant_prob_global_cells_partition(random_table):
    rng = np.random.default_rng(7)
    for _ in range(20):
        pi = random_table(rng, (4, 5))
        t = ContingencyTable.from_probabilities(pi, "G", "G")
        for i in range(1, 4):
            for j in range(1, 5):
                total = sum(t.quadrant_prob(i, j, u, v) for u in (0, 1) for v in (0, 1))
                assert total == pytest.approx(1.0, abs=1e-12)


def test_quadrant_prob_local_cells_cover_subtable(random_table):
    rng = np.random.default_rng(8)
    pi = random_table(rng, (4, 4))
    t = ContingencyTable.from_probabilities(pi, "L", "L")
    for i in range(1, 4):
        for j in range(1, 4):
            total = sum(t.quadrant_prob(i, j, u, v) for u in (0, 1) for v in (0, 1))
            block = pi[i - 1 : i + 1, j - 1 : j + 1].sum()
            assert total == pytest.approx(block, abs=1e-13)


def test_quadrant_prob_monotone_in_event_size(random_table):
    # global events contain the local ones on the same side of the cut
    rng = np.random.default_rng(9)
    for _ in range(25):
        pi = random_table(rng, (5, 4))
        tl = ContingencyTable.from_probabilities(pi, "L", "L")
        tg = ContingencyTable.from_probabilities(pi, "G", "G")
        for i in range(1, 5):
            for j in range(1, 4):
                for u in (0, 1):
                    for v in (0, 1):
                        assert tg.quadrant_prob(i, j, u, v) >= tl.quadrant_prob(i, j, u, v) - 1e-15


def test_marginal_event_prob():
    m = np.array([[0.2 * 0.2, 0.2 * 0.8], [0.3 * 0.2, 0.3 * 0.8], [0.5 * 0.2, 0.5 * 0.8]])
    t = ContingencyTable.from_probabilities(m, "G", "G")
    assert t.marginal_event_prob(0, 1, 1) == pytest.approx(0.8, abs=1e-14)
    tr = t.with_logits("R", "R")
    assert tr.marginal_event_prob(0, 2, 0) == pytest.approx(0.5, abs=1e-14)


def test_mobility_margin_event(mobility):
    assert mobility.marginal_event_prob(0, 1, 0) == pytest.approx(129 / 3500, abs=1e-12)


def test_constructor_validation():
    with pytest.raises(ValueError):
        ContingencyTable(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        ContingencyTable(np.array([[1.2, -0.2], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        ContingencyTable(np.full((2, 2), 0.3))
    with pytest.raises(ValueError):
        ContingencyTable.from_counts([[1, 2], [3, -4]])
    with pytest.raises(ValueError):
        ContingencyTable.from_probabilities(np.full((1, 4), 0.25))
    t = ContingencyTable.from_probabilities([[2.0, 2.0], [4.0, 2.0]], normalize=True)
    assert t.probs.sum() == pytest.approx(1.0)


def test_probs_are_frozen(mobility):
    with pytest.raises(ValueError):
        mobility.probs[0, 0] = 0.5


def test_margins_and_n(mobility, mobility_counts):
    assert mobility.n == 3500
    np.testing.assert_allclose(mobility.row_margin().sum(), 1.0, atol=1e-14)
    np.testing.assert_allclose(
        mobility.probs, mobility_counts / mobility_counts.sum(), atol=1e-15
    )


def test_reversal_round_trip(mobility):
    again = mobility.reversed_rows().reversed_rows()
    np.testing.assert_array_equal(again.probs, mobility.probs)
    np.testing.assert_array_equal(again.counts, mobility.counts)
    flipped = mobility.reversed_cols()
    np.testing.assert_array_equal(flipped.probs[:, 0], mobility.probs[:, -1])


def test_read_counts_formats(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("# a comment\n1, 2, 3\n\n4 5 6 # trailing\n")
    t = read_counts(p, "G", "L")
    np.testing.assert_array_equal(t.counts, [[1, 2, 3], [4, 5, 6]])
    assert t.row_logit is LogitType.GLOBAL and t.col_logit is LogitType.LOCAL


def test_read_counts_errors(tmp_path):
    bad_tok = tmp_path / "a.csv"
    bad_tok.write_text("1 2\n3 x\n")
    with pytest.raises(TableParseError) as err:
        read_counts(bad_tok)
    assert err.value.line == 2 and err.value.column == 2

    ragged = tmp_path / "b.csv"
    ragged.write_text("1 2 3\n4 5\n")
    with pytest.raises(TableParseError):
        read_counts(ragged)

    neg = tmp_path / "c.csv"
    neg.write_text("1 2\n-3 4\n")
    with pytest.raises(TableParseError):
        read_counts(neg)

    empty = tmp_path / "d.csv"
    empty.write_text("# nothing\n")
    with pytest.raises(TableParseError):
        read_counts(empty)

    single = tmp_path / "e.csv"
    single.write_text("5\n")
    with pytest.raises(TableParseError):
        read_counts(single)


def test_bundled_dataset(mobility_counts):
    assert "mobility" in dataset_names()
    assert dataset_path("mobility").exists()
    with pytest.raises(ValueError):
        dataset_path("nope")
    assert mobility_counts.sum() == 3500
    assert mobility_counts.shape == (5, 5)
    np.testing.assert_array_equal(mobility_counts[0], [50, 45, 8, 18, 8])
    np.testing.assert_array_equal(mobility_counts[4], [3, 42, 72, 320, 411])
