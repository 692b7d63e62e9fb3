"""Seed-policy determinism tests."""

import numpy as np
import pytest

from gpargmax.rng import RngPolicy


def test_substream_reproducible():
    a = RngPolicy(123).substream(5).standard_normal(10)
    b = RngPolicy(123).substream(5).standard_normal(10)
    assert np.array_equal(a, b)


def test_substreams_differ_across_replicates():
    a = RngPolicy(123).substream(0).standard_normal(10)
    b = RngPolicy(123).substream(1).standard_normal(10)
    assert not np.array_equal(a, b)


def test_child_branches_are_disjoint():
    base = RngPolicy(7)
    a = base.child(0).substream(0).standard_normal(10)
    b = base.child(1).substream(0).standard_normal(10)
    c = base.substream(0).standard_normal(10)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_string_tags_stable():
    a = RngPolicy(7).child("calibration").substream(0).standard_normal(4)
    b = RngPolicy(7).child("calibration").substream(0).standard_normal(4)
    c = RngPolicy(7).child("experiment").substream(0).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_master_seed_range_checked():
    with pytest.raises(ValueError):
        RngPolicy(-1)
    with pytest.raises(ValueError):
        RngPolicy(2**64)
