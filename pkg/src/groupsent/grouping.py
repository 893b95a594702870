"""Ground-plane placement of people and orientation-weighted k-means.

People are placed on the (lateral x, depth z) plane using face height as a
depth cue, then clustered with a k-means whose point-to-center distance is
scaled by how much the person faces away from the center.  The number of
groups is picked by maximizing a potential that rewards facing one's group
center and penalizes distance to it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import Box, Direction

UNIT_TOL = 1e-6
# average head height / body height; used when a person has no matched face
HEAD_TO_BODY = 1.0 / 7.0


@dataclass(frozen=True)
class PersonPoint:
    position: tuple
    orientation: tuple
    person_index: int = -1

    def __post_init__(self):
        x, z = self.position
        ox, oz = self.orientation
        if not z > 0:
            raise ValueError(f"depth must be positive, got {z}")
        if abs(math.hypot(ox, oz) - 1.0) > 1e-9:
            raise ValueError(f"orientation {self.orientation} is not a unit vector")


@dataclass(frozen=True)
class GroupingConfig:
    k_face: float = 100.0
    lam: float = 0.1
    k_min: int = 1
    k_max: Optional[int] = None
    restarts: int = 5
    max_iters: int = 100

    def __post_init__(self):
        if not self.k_face > 0:
            raise ValueError("k_face must be positive")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.k_min < 1 or (self.k_max is not None and self.k_max < self.k_min):
            raise ValueError("need 1 <= k_min <= k_max")
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be >= 1")

    def k_range(self, n: int) -> range:
        k_max = min(n, 10) if self.k_max is None else min(self.k_max, n)
        return range(min(self.k_min, k_max), k_max + 1)


@dataclass
class Clustering:
    assignments: np.ndarray
    centers: np.ndarray
    K: int
    potential: Optional[float] = None
    total_distance: float = 0.0

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.K)

    @property
    def n_singletons(self) -> int:
        return int(np.sum(self.sizes == 1))

    def to_dict(self) -> dict:
        return {
            "K": int(self.K),
            "assignments": [int(a) for a in self.assignments],
            "centers": self.centers.tolist(),
            "potential": self.potential,
            "total_modified_distance": self.total_distance,
        }


# ---------------------------------------------------------------------------
# placement
# ---------------------------------------------------------------------------


def estimate_depth(face_height: float, k_face: float = 100.0) -> float:
    if not face_height > 0:
        raise ValueError(f"face height must be positive, got {face_height}")
    return k_face / face_height


def back_project(person: Box, depth: float, image_width: float) -> tuple:
    """Pinhole with focal length = image width and principal point at the centre."""
    if not depth > 0:
        raise ValueError("depth must be positive")
    u = (person.x_min + person.x_max) / 2.0
    focal = float(image_width)
    return ((u - image_width / 2.0) * depth / focal, depth)


def face_height_for(record) -> float:
    if record.face is not None:
        return record.face.height
    return record.person.height * HEAD_TO_BODY


def points_from_records(records, image_width: float, orientations: Sequence[Direction],
                        cfg: GroupingConfig = GroupingConfig()) -> List[PersonPoint]:
    """One PersonPoint per record; ``orientations`` is parallel to ``records``."""
    pts = []
    for rec, direction in zip(records, orientations):
        d = estimate_depth(face_height_for(rec), cfg.k_face)
        pts.append(PersonPoint(back_project(rec.person, d, image_width),
                               tuple(direction.unit_vector), rec.person_index))
    return pts


def _arrays(points: Sequence[PersonPoint]):
    P = np.array([p.position for p in points], dtype=np.float64).reshape(-1, 2)
    O = np.array([p.orientation for p in points], dtype=np.float64).reshape(-1, 2)
    return P, O


# ---------------------------------------------------------------------------
# distance and potential
# ---------------------------------------------------------------------------


def orientation_coefficient(theta_hat, phi_hat) -> float:
    """Weight in [0.5, 1.5]: 0.5 facing the center, 1.5 facing directly away.

    ``phi_hat=None`` means the person sits on the center (weight 0.5).
    """
    theta = np.asarray(theta_hat, dtype=np.float64)
    if abs(np.linalg.norm(theta) - 1.0) > UNIT_TOL:
        raise ValueError(f"theta_hat {theta_hat} is not a unit vector")
    if phi_hat is None:
        return 0.5
    phi = np.asarray(phi_hat, dtype=np.float64)
    if abs(np.linalg.norm(phi) - 1.0) > UNIT_TOL:
        raise ValueError(f"phi_hat {phi_hat} is not a unit vector")
    # clip rounding on near-unit inputs so the weight stays in range
    return 1.0 - 0.5 * min(max(float(theta @ phi), -1.0), 1.0)


def modified_distance(p: PersonPoint, center) -> float:
    diff = np.asarray(center, dtype=np.float64) - np.asarray(p.position)
    dist = float(np.hypot(*diff))
    if dist == 0.0:
        return 0.0
    return orientation_coefficient(p.orientation, diff / dist) * dist


def modified_distance_matrix(P: np.ndarray, O: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """``(n, K)`` matrix of c * ||center - p||.

    c * dist = dist - 0.5 * theta . (center - p), which is exactly 0 at coincidence.
    """
    diff = centers[None, :, :] - P[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    facing = np.einsum("nd,nkd->nk", O, diff)
    return np.maximum(dist - 0.5 * facing, 0.0)


def _facing_and_distance(P, O, centers, assignments):
    diff = centers[assignments] - P
    dist = np.hypot(diff[:, 0], diff[:, 1])
    facing = np.ones(len(P))
    nz = dist > 0
    facing[nz] = np.einsum("nd,nd->n", O[nz], diff[nz]) / dist[nz]
    return facing, dist


def potential_arrays(P, O, centers, assignments, lam) -> float:
    facing, dist = _facing_and_distance(P, O, centers, assignments)
    return float(facing.sum() - lam * dist.sum())


def potential(clustering: Clustering, points: Sequence[PersonPoint], lam: float = 0.1) -> float:
    P, O = _arrays(points)
    return potential_arrays(P, O, clustering.centers, clustering.assignments, lam)


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------


def _means(P, assignments, K, centers):
    out = centers.copy()
    for k in range(K):
        members = assignments == k
        if members.any():
            out[k] = P[members].mean(axis=0)
    return out


def _repair_empty(P, O, centers, assignments, K):
    for k in range(K):
        if np.any(assignments == k):
            continue
        sizes = np.bincount(assignments, minlength=K)
        d = modified_distance_matrix(P, O, centers)[np.arange(len(P)), assignments]
        d[sizes[assignments] < 2] = -np.inf
        i = int(np.argmax(d))
        centers[k] = P[i]
        assignments[i] = k
    return centers, assignments


def lloyd_steps(P, O, centers, max_iters=100):
    """Generator over Lloyd iterations; yields ``(centers, assignments)`` after each assignment step.

    The yielded centers are the ones the assignment was computed against
    (before any empty-cluster repair).
    """
    centers = np.array(centers, dtype=np.float64)
    K = len(centers)
    prev = None
    for _ in range(max_iters):
        assignments = np.argmin(modified_distance_matrix(P, O, centers), axis=1)
        yield centers.copy(), assignments.copy()
        centers, assignments = _repair_empty(P, O, centers, assignments, K)
        if prev is not None and np.array_equal(assignments, prev):
            break
        prev = assignments
        centers = _means(P, assignments, K, centers)
    return


def _run_once(P, O, K, rng, max_iters):
    init = P[rng.choice(len(P), size=K, replace=False)]
    centers = init
    assignments = None
    for centers, assignments in lloyd_steps(P, O, init, max_iters):
        pass
    # re-apply the last repair so the result has no empty cluster
    centers, assignments = _repair_empty(P, O, centers.copy(), assignments.copy(), K)
    centers = _means(P, assignments, K, centers)
    total = float(modified_distance_matrix(P, O, centers)[np.arange(len(P)), assignments].sum())
    return assignments, centers, total


def _rounded(total: float) -> float:
    # totals equal up to float noise count as ties
    return round(total, 9)


def _singletons(assignments, K) -> int:
    return int(np.sum(np.bincount(assignments, minlength=K) == 1))


def restart_rng(seed: int, K: int, restart: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, K, restart])))


def kmeans_arrays(P, O, K, seed=0, restarts=5, max_iters=100, lam=0.1, return_all=False):
    n = len(P)
    if not 1 <= K <= n:
        raise ValueError(f"K must satisfy 1 <= K <= N={n}, got {K}")
    runs = [_run_once(P, O, K, restart_rng(seed, K, r), max_iters) for r in range(restarts)]
    best = min(range(restarts), key=lambda r: (_rounded(runs[r][2]), _singletons(runs[r][0], K), r))
    assignments, centers, total = runs[best]
    result = Clustering(assignments, centers, K,
                        potential_arrays(P, O, centers, assignments, lam), total)
    if return_all:
        return result, [r[2] for r in runs]
    return result


def weighted_kmeans(points: Sequence[PersonPoint], K: int, seed: int = 0, restarts: int = 5,
                    max_iters: int = 100, lam: float = 0.1) -> Clustering:
    """Best of ``restarts`` seeded Lloyd runs by total modified distance.

    Equal totals are resolved toward fewer singleton clusters, then the
    earlier restart.
    """
    P, O = _arrays(points)
    return kmeans_arrays(P, O, K, seed, restarts, max_iters, lam)


def select_k_arrays(P, O, cfg: GroupingConfig = GroupingConfig(), seed: int = 0,
                    return_candidates: bool = False):
    n = len(P)
    if n < 1:
        raise ValueError("need at least one person")
    candidates = [kmeans_arrays(P, O, K, seed, cfg.restarts, cfg.max_iters, cfg.lam)
                  for K in cfg.k_range(n)]
    cap = n // 3
    survivors = [c for c in candidates if c.n_singletons <= cap] or candidates
    # max() keeps the first maximum, i.e. the smaller K on ties
    best = max(survivors, key=lambda c: c.potential)
    if return_candidates:
        return best, candidates
    return best


def select_k(points: Sequence[PersonPoint], cfg: GroupingConfig = GroupingConfig(),
             seed: int = 0) -> Clustering:
    P, O = _arrays(points)
    return select_k_arrays(P, O, cfg, seed)


def group_features(clustering: Optional[Clustering], points: Sequence[PersonPoint]) -> np.ndarray:
    """[K, mean size, max size, singletons, mean distance to center, mean facing]."""
    if clustering is None or len(points) == 0:
        return np.zeros(6)
    P, O = _arrays(points)
    sizes = clustering.sizes
    sizes = sizes[sizes > 0]
    facing, dist = _facing_and_distance(P, O, clustering.centers, clustering.assignments)
    return np.array([
        float(clustering.K),
        float(sizes.mean()),
        float(sizes.max()),
        float(np.sum(sizes == 1)),
        float(dist.mean()),
        float(facing.mean()),
    ])


class OrientationWeightedKMeans(BaseEstimator, ClusterMixin):
    """k-means on ``X = [x, z, theta_x, theta_z]`` rows with orientation-weighted distance.

    ``n_clusters="auto"`` selects the count by the potential criterion with a
    singleton cap of floor(N / 3).
    """

    def __init__(self, n_clusters="auto", lam=0.1, k_min=1, k_max=None, restarts=5,
                 max_iter=100, random_state=0):
        self.n_clusters = n_clusters
        self.lam = lam
        self.k_min = k_min
        self.k_max = k_max
        self.restarts = restarts
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 4:
            raise ValueError("X must have columns [x, z, theta_x, theta_z]")
        P, O = X[:, :2], X[:, 2:]
        if np.any(np.abs(np.hypot(O[:, 0], O[:, 1]) - 1.0) > UNIT_TOL):
            raise ValueError("orientation columns must be unit vectors")
        if self.n_clusters == "auto":
            cfg = GroupingConfig(lam=self.lam, k_min=self.k_min, k_max=self.k_max,
                                 restarts=self.restarts, max_iters=self.max_iter)
            result = select_k_arrays(P, O, cfg, int(self.random_state))
        else:
            result = kmeans_arrays(P, O, int(self.n_clusters), int(self.random_state),
                                   self.restarts, self.max_iter, self.lam)
        self.clustering_ = result
        self.labels_ = result.assignments
        self.cluster_centers_ = result.centers
        self.n_clusters_ = result.K
        self.inertia_ = result.total_distance
        self.potential_ = result.potential
        self.n_features_in_ = 4
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        X = check_array(X, dtype=np.float64)
        return np.argmin(modified_distance_matrix(X[:, :2], X[:, 2:], self.cluster_centers_), axis=1)
