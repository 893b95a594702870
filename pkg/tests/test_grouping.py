import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupsent.geometry import Box, Direction
from groupsent.grouping import (
    Clustering,
    GroupingConfig,
    OrientationWeightedKMeans,
    PersonPoint,
    _arrays,
    back_project,
    estimate_depth,
    group_features,
    kmeans_arrays,
    lloyd_steps,
    modified_distance,
    modified_distance_matrix,
    orientation_coefficient,
    points_from_records,
    potential,
    select_k,
    weighted_kmeans,
)
from groupsent.matching import PersonRecord
from oracles import oracle_best_potential, oracle_partition_scores, same_partition, surjective_labelings


def triads(r=1.0, sep=20.0, rot=0.0, depth=10.0):
    pts = []
    for cx in (0.0, sep):
        for j in range(3):
            a = rot + 2 * math.pi * j / 3
            p = np.array([cx + r * math.cos(a), depth + r * math.sin(a)])
            o = np.array([cx, depth]) - p
            o /= np.linalg.norm(o)
            pts.append(PersonPoint(tuple(p), tuple(o), len(pts)))
    return pts


def unit(angle):
    return (math.cos(angle), math.sin(angle))


def test_estimate_depth():
    assert estimate_depth(50, 100) == 2.0
    assert estimate_depth(100, 100) == 1.0
    assert estimate_depth(25, 37.0) == 2 * estimate_depth(50, 37.0)
    with pytest.raises(ValueError):
        estimate_depth(0, 100)


def test_back_project():
    W = 640
    assert back_project(Box(300, 0, 340, 100), 3.0, W)[0] == 0.0
    assert back_project(Box(620, 0, 640, 100), 1.0, W) == (pytest.approx(0.5 - 10 / 640), 1.0)
    u_at_w = Box(630, 0, 650, 10)  # centre u = W
    assert back_project(u_at_w, 1.0, W)[0] == pytest.approx(0.5)
    a = back_project(Box(10, 0, 30, 50), 2.0, W)
    assert a == back_project(Box(15, 5, 25, 40), 2.0, W)


def test_points_from_records_fallback_face():
    rec = PersonRecord(Box(0, 0, 70, 140), None, Box(10, 40, 60, 90), 3)
    (p,) = points_from_records([rec], 100, [Direction.E], GroupingConfig(k_face=100))
    assert p.position[1] == pytest.approx(100 / 20.0)
    assert p.person_index == 3
    assert p.orientation == (1.0, 0.0)


def test_coefficient_examples():
    t = unit(0.3)
    assert orientation_coefficient(t, t) == 0.5
    assert orientation_coefficient(t, (-t[0], -t[1])) == 1.5
    assert orientation_coefficient((1.0, 0.0), (0.0, 1.0)) == 1.0
    assert orientation_coefficient(t, None) == 0.5
    with pytest.raises(ValueError):
        orientation_coefficient((1.0, 1.0), (1.0, 0.0))


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_coefficient_range_and_symmetry(a, b):
    t, f = unit(a), unit(b)
    c = orientation_coefficient(t, f)
    assert 0.5 <= c <= 1.5
    assert c + orientation_coefficient(t, (-f[0], -f[1])) == pytest.approx(2.0)
    # affine in |theta - phi|^2: c = 0.5 + |t - f|^2 / 4
    sq = (t[0] - f[0]) ** 2 + (t[1] - f[1]) ** 2
    assert c == pytest.approx(0.5 + sq / 4)


def test_modified_distance_examples():
    p = PersonPoint((0.0, 5.0), (1.0, 0.0))
    assert modified_distance(p, (0.0, 5.0)) == 0.0
    assert modified_distance(p, (2.0, 5.0)) == pytest.approx(1.0)
    assert modified_distance(p, (-2.0, 5.0)) == pytest.approx(3.0)


def test_matrix_matches_scalar():
    rng = np.random.default_rng(0)
    pts = [PersonPoint((rng.normal(), rng.uniform(1, 5)), unit(rng.uniform(0, 6.28))) for _ in range(6)]
    P, O = _arrays(pts)
    C = rng.normal(size=(3, 2)) + [0, 3]
    M = modified_distance_matrix(P, O, C)
    for i, p in enumerate(pts):
        for k in range(3):
            assert M[i, k] == pytest.approx(modified_distance(p, C[k]), abs=1e-12)


def test_kmeans_k_equals_n():
    pts = triads()
    c = weighted_kmeans(pts, 6, seed=1)
    assert sorted(c.assignments.tolist()) == list(range(6))
    assert c.total_distance == 0.0


def test_kmeans_k_one():
    pts = triads()
    c = weighted_kmeans(pts, 1)
    P, _ = _arrays(pts)
    assert np.allclose(c.centers[0], P.mean(axis=0))


def test_kmeans_triads_match_exhaustive():
    pts = triads(rot=0.4)
    P, O = _arrays(pts)
    best = min(surjective_labelings(6, 2),
               key=lambda l: oracle_partition_scores(P.tolist(), O.tolist(), l, 2, 0.1)[1])
    assert same_partition(best, (0, 0, 0, 1, 1, 1))
    c = weighted_kmeans(pts, 2, seed=0)
    assert same_partition(c.assignments.tolist(), best)


def test_kmeans_rejects_bad_k():
    with pytest.raises(ValueError):
        weighted_kmeans(triads(), 7)
    with pytest.raises(ValueError):
        weighted_kmeans(triads(), 0)


def test_potential_examples():
    pts = [PersonPoint((float(i), 3.0), unit(i)) for i in range(4)]
    own = Clustering(np.arange(4), np.array([p.position for p in pts]), 4)
    assert potential(own, pts, 0.1) == 4.0
    single = [PersonPoint((0.0, 1.0), (1.0, 0.0))]
    c = Clustering(np.array([0]), np.array([[2.0, 1.0]]), 1)
    assert potential(c, single, 0.1) == pytest.approx(0.8)


def test_potential_flip_linearity():
    pts = triads(rot=0.2)
    pts[1] = PersonPoint(pts[1].position, unit(1.0), 1)
    c = weighted_kmeans(pts, 2)
    before = potential(c, pts, 0.1)
    p = pts[1]
    center = c.centers[c.assignments[1]]
    phi = (center - np.array(p.position)) / np.linalg.norm(center - np.array(p.position))
    flipped = list(pts)
    flipped[1] = PersonPoint(p.position, (-p.orientation[0], -p.orientation[1]), 1)
    after = potential(c, flipped, 0.1)
    assert before - after == pytest.approx(2 * float(np.dot(p.orientation, phi)))


def test_select_k_single():
    c = select_k([PersonPoint((0.0, 1.0), (1.0, 0.0))])
    assert c.K == 1


def _selected_with_cap(pts, lam):
    """Oracle for the selection rule.

    Per K the minimum total modified distance partition is found by enumeration
    (ties to fewer singletons), then the singleton cap and the potential argmax
    are applied with ties to the smaller K.
    """
    P, O = _arrays(pts)
    n = len(pts)
    cands = []
    for K in range(1, n + 1):
        scored = []
        for labels in surjective_labelings(n, K):
            pot, total, _ = oracle_partition_scores(P.tolist(), O.tolist(), labels, K, lam)
            singles = sum(1 for k in range(K) if labels.count(k) == 1)
            scored.append((round(total, 9), singles, pot, labels))
        total, singles, pot, labels = min(scored, key=lambda t: t[:2])
        cands.append((K, pot, singles, labels))
    ok = [c for c in cands if c[2] <= n // 3] or cands
    return max(ok, key=lambda c: (round(c[1], 9), -c[0]))


def test_select_k_triads():
    pts = triads()
    K, _, _, labels = _selected_with_cap(pts, 0.1)
    assert K == 2
    c = select_k(pts, GroupingConfig(lam=0.1), seed=0)
    assert c.K == 2
    assert same_partition(c.assignments.tolist(), labels)
    P, O = _arrays(pts)
    best, _ = oracle_best_potential(P.tolist(), O.tolist(), 2, 0.1)
    assert c.potential == pytest.approx(best, abs=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_select_k_matches_oracle_small(seed):
    # two well separated clumps plus a loner, N = 7
    rng = np.random.default_rng(seed)
    pts = []
    for cx, m in ((0.0, 3), (15.0, 3), (40.0, 1)):
        for _ in range(m):
            p = np.array([cx, 10.0]) + rng.normal(scale=0.8, size=2)
            o = np.array([cx, 10.0]) - p
            pts.append(PersonPoint(tuple(p), tuple(o / np.linalg.norm(o)), len(pts)))
    K, pot, _, labels = _selected_with_cap(pts, 0.1)
    c = select_k(pts, GroupingConfig(lam=0.1, restarts=20), seed=seed)
    assert c.K == K
    assert same_partition(c.assignments.tolist(), labels)
    assert c.potential == pytest.approx(pot, abs=1e-9)


def test_select_k_collinear_singleton_cap():
    pts = [PersonPoint((float(i), 5.0), (1.0, 0.0), i) for i in range(6)]
    # with lam = 10 distance dominates, so the cap (<= 2 singletons) decides:
    # K = 4 as two pairs + two singletons is the largest admissible count
    K, _, singles, _ = _selected_with_cap(pts, 10.0)
    assert K == 4 and singles == 2
    for seed in range(10):
        c = select_k(pts, GroupingConfig(lam=10.0), seed=seed)
        assert c.K == 4
        assert c.n_singletons <= 2


def test_group_features():
    pts = [PersonPoint((0.0, 5.0), (1.0, 0.0)), PersonPoint((2.0, 5.0), (-1.0, 0.0)),
           PersonPoint((0.0, 7.0), (1.0, 0.0)), PersonPoint((2.0, 7.0), (-1.0, 0.0))]
    one = Clustering(np.zeros(4, int), np.array([[1.0, 6.0]]), 1)
    assert group_features(one, pts)[:4].tolist() == [1, 4, 4, 0]
    own = Clustering(np.arange(4), np.array([p.position for p in pts]), 4)
    f = group_features(own, pts)
    assert f[1] == 1.0 and f[3] == 4
    assert f[4] == 0.0 and f[5] == 1.0
    assert group_features(None, []).tolist() == [0.0] * 6


def random_points(rng, n):
    return [PersonPoint((rng.uniform(-5, 5), rng.uniform(1, 10)), unit(rng.uniform(0, 2 * math.pi)), i)
            for i in range(n)]


@pytest.mark.parametrize("seed", range(10))
def test_assignment_step_optimal(seed):
    rng = np.random.default_rng(seed)
    P, O = _arrays(random_points(rng, 9))
    init = P[rng.choice(9, 3, replace=False)]
    for centers, assign in lloyd_steps(P, O, init, 100):
        M = modified_distance_matrix(P, O, centers)
        assert np.allclose(M[np.arange(9), assign], M.min(axis=1))


@pytest.mark.parametrize("seed", range(5))
def test_scaling_k_face_keeps_assignments(seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng, 8)
    scaled = [PersonPoint((p.position[0] * 3.0, p.position[1] * 3.0), p.orientation, p.person_index) for p in pts]
    a = weighted_kmeans(pts, 3, seed=seed)
    b = weighted_kmeans(scaled, 3, seed=seed)
    assert np.array_equal(a.assignments, b.assignments)
    assert b.total_distance == pytest.approx(3.0 * a.total_distance)


@pytest.mark.parametrize("seed", range(5))
def test_select_k_deterministic(seed):
    rng = np.random.default_rng(seed)
    pts = random_points(rng, 7)
    a = select_k(pts, seed=seed)
    b = select_k(pts, seed=seed)
    assert a.K == b.K and np.array_equal(a.assignments, b.assignments)
    assert 1 <= a.K <= 7
    for k in range(a.K):
        members = a.assignments == k
        assert members.any()
        assert np.allclose(a.centers[k], _arrays(pts)[0][members].mean(axis=0))


@pytest.mark.parametrize("seed", range(5))
def test_best_of_restarts(seed):
    rng = np.random.default_rng(seed)
    P, O = _arrays(random_points(rng, 7))
    for K in (2, 3):
        best, totals = kmeans_arrays(P, O, K, seed=seed, restarts=50, return_all=True)
        assert best.total_distance == pytest.approx(min(totals))


def test_estimator_api():
    pts = triads()
    P, O = _arrays(pts)
    X = np.hstack([P, O])
    est = OrientationWeightedKMeans(random_state=0).fit(X)
    assert est.n_clusters_ == 2
    assert np.array_equal(est.predict(X), est.labels_)
    fixed = OrientationWeightedKMeans(n_clusters=3).fit(X)
    assert fixed.n_clusters_ == 3
    with pytest.raises(ValueError):
        OrientationWeightedKMeans().fit(np.hstack([P, 2 * O]))
