"""Texture-driven importance weights for the weighted SPIHT coder.

Pipeline for the clustering route: per-tree features -> seeded k-means ->
two-state mixture EM refinement -> per-cluster entropy and non-zero counts ->
ranked importance weights. The threshold route (``crossband_mask``) keeps
detail triples whose three orientations all clear a threshold taken from the
LL band.

A "tree" is the descendant set of one LL coefficient that has offspring,
together with that root. Trees are numbered by the row-major order of their
roots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalUnderflow
from .metrics import entropy
from .spiht import spatial_tree
from .wavelet import WaveletPyramid, band_slices, ll_mask

VAR_FLOOR = 1e-6
BANDS = ("LH", "HL", "HH")


def tree_index_map(shape: tuple[int, int], levels: int) -> np.ndarray:
    """Tree id of every coefficient; -1 for the childless LL corners."""
    tree = spatial_tree(tuple(shape), levels)
    H, W = shape
    tmap = np.full(H * W, -1, dtype=np.int64)
    roots = tree.roots
    tmap[roots] = np.arange(roots.size)
    frontier = roots
    while frontier.size:
        c = tree.child0[frontier]
        ids = tmap[frontier]
        nxt = np.concatenate([c, c + 1, c + W, c + W + 1])
        tmap[nxt] = np.tile(ids, 4)
        frontier = nxt[tree.child0[nxt] >= 0]
    return tmap.reshape(H, W)


def extract_features(pyr: WaveletPyramid) -> np.ndarray:
    """Feature matrix of shape ``(n_trees, 3 * levels)``.

    Row ``t`` holds, for levels 1..L and orientations LH, HL, HH, the mean
    magnitude of the coefficients lying under tree ``t``'s spatial footprint.
    The three trees grown from one 2x2 LL group share a footprint and
    therefore a feature vector, so clustering follows image regions rather
    than orientation.
    """
    L = pyr.levels
    hL, wL = pyr.ll_shape()
    gh, gw = hL // 2, wL // 2
    mags = np.abs(pyr.coeffs)
    cols = []
    for level in range(1, L + 1):
        block = 1 << (L - level + 1)
        for band in BANDS:
            sub = mags[band_slices(pyr.shape, L, band, level)]
            cols.append(sub.reshape(gh, block, gw, block).mean(axis=(1, 3)))
    group_feats = np.stack(cols, axis=-1)
    tree = spatial_tree(pyr.shape, L)
    ri, rj = np.divmod(tree.roots, pyr.width)
    return group_feats[ri // 2, rj // 2]


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    objective: list[float]
    n_iter: int


def kmeans(features: np.ndarray, k: int, max_iter: int = 100, seed: int = 0) -> KMeansResult:
    """Lloyd's algorithm seeded with ``k`` distinct points drawn by ``seed``.

    ``objective[t]`` is the within-cluster sum of squared distances after the
    assignment step of iteration ``t``. An emptied cluster keeps its previous
    centroid.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if k < 1 or k > n:
        raise ArgumentError(f"k={k} must lie in 1..{n}")
    rng = np.random.default_rng(seed)
    centroids = X[rng.choice(n, size=k, replace=False)].copy()
    assign = None
    history: list[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new].sum()))
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(k):
            members = X[assign == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    return KMeansResult(assign, centroids, history, it)


def kmeans_objective(features: np.ndarray, assignments: np.ndarray, centroids: np.ndarray) -> float:
    X = np.asarray(features, dtype=np.float64).reshape(len(assignments), -1)
    return float(((X - centroids[assignments]) ** 2).sum())


@dataclass
class MixtureModel:
    """Mixture of M texture components over D-dimensional tree features.

    Each component models every feature dimension independently as a
    zero-mean two-state Gaussian mixture: a high-variance state with prior
    ``p_high`` and a low-variance state.
    """

    alpha: np.ndarray     # (M,)
    var_high: np.ndarray  # (M, D)
    var_low: np.ndarray   # (M, D)
    p_high: np.ndarray    # (M, D)

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        self.var_high = np.atleast_2d(np.asarray(self.var_high, dtype=np.float64))
        self.var_low = np.atleast_2d(np.asarray(self.var_low, dtype=np.float64))
        self.p_high = np.atleast_2d(np.asarray(self.p_high, dtype=np.float64))
        if np.any(self.alpha < 0) or abs(self.alpha.sum() - 1.0) > 1e-12:
            raise ValueError("mixing coefficients must be non-negative and sum to 1")
        if np.any(self.var_high <= 0) or np.any(self.var_low <= 0):
            raise ValueError("variances must be positive")

    @property
    def M(self) -> int:
        return self.alpha.size


def _log_normal0(x2: np.ndarray, var: np.ndarray) -> np.ndarray:
    return -0.5 * (np.log(2 * np.pi * var) + x2 / var)


def _state_terms(X: np.ndarray, model: MixtureModel):
    x2 = (X ** 2)[:, None, :]
    with np.errstate(divide="ignore"):
        lh = np.log(model.p_high)[None] + _log_normal0(x2, model.var_high[None])
        ll = np.log1p(-model.p_high)[None] + _log_normal0(x2, model.var_low[None])
    return lh, ll, np.logaddexp(lh, ll)


def component_log_likelihood(features: np.ndarray, model: MixtureModel) -> np.ndarray:
    """``log P(w_t | component j)`` as an ``(N, M)`` array."""
    X = np.asarray(features, dtype=np.float64).reshape(len(features), -1)
    return _state_terms(X, model)[2].sum(axis=2)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        return np.squeeze(top, axis) + np.log(np.sum(np.exp(a - top), axis=axis))


def responsibilities(log_lik: np.ndarray, alpha: np.ndarray) -> tuple[np.ndarray, float]:
    """Bayes posteriors ``P_j(t)`` and the total data log-likelihood."""
    with np.errstate(divide="ignore"):
        joint = np.log(np.asarray(alpha, dtype=np.float64))[None, :] + log_lik
    norm = _logsumexp(joint, axis=1)
    if not np.all(np.isfinite(norm)):
        bad = np.flatnonzero(~np.isfinite(norm))
        raise NumericalUnderflow(f"zero total likelihood for trees {bad[:5].tolist()}")
    return np.exp(joint - norm[:, None]), float(norm.sum())


def log_likelihood(features: np.ndarray, model: MixtureModel) -> float:
    return responsibilities(component_log_likelihood(features, model), model.alpha)[1]


def em_step(features: np.ndarray, model: MixtureModel) -> MixtureModel:
    """One EM iteration over components and their hidden high/low states."""
    X = np.asarray(features, dtype=np.float64).reshape(len(features), -1)
    N = X.shape[0]
    lh, ll, lmix = _state_terms(X, model)
    post, _ = responsibilities(lmix.sum(axis=2), model.alpha)
    alpha = post.sum(axis=0) / N
    alpha = alpha / alpha.sum()

    r_high = np.exp(lh - lmix)                      # (N, M, D)
    w_high = post[:, :, None] * r_high
    w_low = post[:, :, None] * (1.0 - r_high)
    x2 = (X ** 2)[:, None, :]
    mass = post.sum(axis=0)[:, None]                # (M, 1)
    sh, sl = w_high.sum(axis=0), w_low.sum(axis=0)  # (M, D)

    with np.errstate(invalid="ignore", divide="ignore"):
        p_high = np.where(mass > 0, sh / mass, model.p_high)
        var_high = np.where(sh > 0, (w_high * x2).sum(axis=0) / sh, model.var_high)
        var_low = np.where(sl > 0, (w_low * x2).sum(axis=0) / sl, model.var_low)
    return MixtureModel(alpha, np.maximum(var_high, VAR_FLOOR),
                        np.maximum(var_low, VAR_FLOOR), np.clip(p_high, 0.0, 1.0))


def init_mixture(features: np.ndarray, assignments: np.ndarray, k: int) -> MixtureModel:
    """Starting model from a hard clustering (e.g. k-means)."""
    X = np.asarray(features, dtype=np.float64).reshape(len(features), -1)
    D = X.shape[1]
    alpha = np.bincount(assignments, minlength=k).astype(np.float64) / len(X)
    overall = np.maximum((X ** 2).mean(axis=0), VAR_FLOOR)
    var_high = np.empty((k, D))
    var_low = np.empty((k, D))
    for c in range(k):
        members = X[assignments == c]
        s2 = (members ** 2).mean(axis=0) if len(members) else overall
        s2 = np.maximum(s2, VAR_FLOOR)
        var_high[c], var_low[c] = 2.0 * s2, np.maximum(0.25 * s2, VAR_FLOOR)
    return MixtureModel(alpha, var_high, var_low, np.full((k, D), 0.5))


def segment_trees(pyr: WaveletPyramid, k: int = 2, seed: int = 0, em_iters: int = 10,
                  max_iter: int = 100):
    """Cluster the trees of ``pyr``: k-means, then EM, then MAP labels.

    Returns ``(assignments, model, features)``.
    """
    feats = extract_features(pyr)
    km = kmeans(feats, k, max_iter=max_iter, seed=seed)
    model = init_mixture(feats, km.assignments, k)
    assign = km.assignments
    if em_iters > 0:
        for _ in range(em_iters):
            model = em_step(feats, model)
        post, _ = responsibilities(component_log_likelihood(feats, model), model.alpha)
        assign = np.argmax(post, axis=1)
    return assign, model, feats


@dataclass
class ClusterStats:
    cluster_id: int
    size: int            # trees in the cluster
    entropy_bits: float
    nonzero_count: int
    empty: bool = False

    @property
    def score(self) -> float:
        return self.entropy_bits * self.nonzero_count


def cluster_entropy(pyr: WaveletPyramid, assignments: np.ndarray, k: int | None = None) -> list[ClusterStats]:
    """Entropy (integer-rounded magnitudes) and non-zero count of each cluster.

    A cluster covers every coefficient of its trees. Empty clusters report
    zero entropy and count and are flagged ``empty``.
    """
    assignments = np.asarray(assignments)
    k = int(assignments.max()) + 1 if k is None else k
    tmap = tree_index_map(pyr.shape, pyr.levels)
    mags = np.rint(np.abs(pyr.coeffs))
    in_tree = tmap >= 0
    coef_cluster = np.full(pyr.shape, -1)
    coef_cluster[in_tree] = assignments[tmap[in_tree]]
    out = []
    for c in range(k):
        vals = mags[coef_cluster == c]
        size = int(np.sum(assignments == c))
        if vals.size == 0:
            out.append(ClusterStats(c, size, 0.0, 0, empty=True))
            continue
        out.append(ClusterStats(c, size, entropy(vals), int(np.count_nonzero(vals))))
    return out


def default_score(stats: list[ClusterStats]) -> np.ndarray:
    """Cluster relevance: entropy times non-zero count."""
    return np.array([s.score for s in stats], dtype=np.float64)


@dataclass(frozen=True)
class WeightMap:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def mask(self) -> np.ndarray:
        return self.weights > 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @classmethod
    def ones(cls, shape: tuple[int, int]) -> "WeightMap":
        return cls(np.ones(shape))


def _resolve_m(m, relevance: np.ndarray) -> int:
    total = relevance.size
    if m is None:
        top = relevance.max()
        return int(np.count_nonzero(relevance == top)) if top >= 0 else 0
    if isinstance(m, float):
        if not 0.0 <= m <= 1.0:
            raise ArgumentError(f"fraction m={m} outside [0, 1]")
        return int(round(m * total))
    m = int(m)
    if not 0 <= m <= total:
        raise ArgumentError(f"m={m} outside 0..{total}")
    return m


def importance_weights(pyr: WaveletPyramid, assignments: np.ndarray, cluster_scores,
                       m=None, lam: float = 4.0) -> WeightMap:
    """Ranked importance weights.

    Every coefficient inherits the score of its tree's cluster. Coefficients
    are ranked by score, then magnitude, then row-major position; the top
    ``m`` get ``max(1, lam * gamma - 1)`` where ``gamma`` is the score divided
    by the largest score, all others get 0. The LL band is always kept with
    weight at least 1.

    ``m`` may be a count, a fraction in (0, 1], or None to keep exactly the
    coefficients of the highest-scoring cluster.
    """
    if lam < 0:
        raise ArgumentError("lambda must be non-negative")
    scores = np.asarray(cluster_scores, dtype=np.float64)
    tmap = tree_index_map(pyr.shape, pyr.levels).ravel()
    assignments = np.asarray(assignments)
    relevance = np.full(tmap.size, -1.0)
    in_tree = tmap >= 0
    relevance[in_tree] = scores[assignments[tmap[in_tree]]]
    m = _resolve_m(m, relevance)

    mags = np.abs(pyr.coeffs).ravel()
    order = np.lexsort((np.arange(tmap.size), -mags, -relevance))
    top = scores.max() if scores.size else 0.0
    gamma = np.clip(relevance, 0, None) / top if top > 0 else np.zeros(tmap.size)
    weights = np.zeros(tmap.size)
    chosen = order[:m]
    weights[chosen] = np.maximum(1.0, -1.0 + lam * np.abs(gamma[chosen]))
    weights = weights.reshape(pyr.shape)
    ll = ll_mask(pyr.shape, pyr.levels)
    weights[ll] = np.maximum(weights[ll], 1.0)
    return WeightMap(weights)


def rescale(pyr: WaveletPyramid, weights: WeightMap, scale_shift: int) -> WaveletPyramid:
    """Zero blocked coefficients and multiply weight > 1 ones by ``2**scale_shift``."""
    if scale_shift < 0:
        raise ArgumentError("scale_shift must be >= 0")
    w = weights.weights
    out = np.where(w > 0, pyr.coeffs, 0.0)
    out = np.where(w > 1, out * (1 << scale_shift), out)
    return pyr.replace(out)


def unscale(pyr: WaveletPyramid, weights: WeightMap, scale_shift: int) -> WaveletPyramid:
    """Inverse of :func:`rescale` on the weight support."""
    w = weights.weights
    out = np.where(w > 1, pyr.coeffs / (1 << scale_shift), pyr.coeffs)
    return pyr.replace(np.where(w > 0, out, 0.0))


def crossband_mask(pyr: WaveletPyramid, u0: int = 1, policy: str = "all") -> WeightMap:
    """Binary mask keeping detail triples that clear an LL-derived threshold.

    ``T = 2**(floor(log2 max|LL|) - u0)``. At each level and position the
    LH/HL/HH coefficients are kept together when all three (``"all"``) or at
    least one (``"any"``) have magnitude >= T. LL is always kept.
    """
    if u0 < 0:
        raise ArgumentError("u0 must be >= 0")
    policy = policy.lower()
    if policy not in ("all", "any"):
        raise ArgumentError(f"unknown policy {policy!r}")
    L = pyr.levels
    mags = np.abs(pyr.coeffs)
    ll = ll_mask(pyr.shape, L)
    top = mags[ll].max()
    exponent = int(np.floor(np.log2(top))) if top > 0 else 0
    T = 2.0 ** (exponent - u0)
    mask = ll.copy()
    for level in range(1, L + 1):
        tests = np.stack([mags[band_slices(pyr.shape, L, b, level)] >= T for b in BANDS])
        keep = tests.all(axis=0) if policy == "all" else tests.any(axis=0)
        for b in BANDS:
            mask[band_slices(pyr.shape, L, b, level)] = keep
    return WeightMap(mask.astype(np.float64))


def selection_cost(pyr: WaveletPyramid, weights: WeightMap, lam: float) -> float:
    """Diagnostic value of the selection cost with an identity regressor.

    Targets are the original coefficients and the approximation keeps the
    supported ones, so only blocked coefficients contribute:
    ``(1 + lam) * sum(blocked c**2) / N``.
    """
    c = pyr.coeffs
    kept = np.where(weights.mask, c, 0.0)
    err = (c - kept) ** 2
    return float(((lam * err) + err).mean())


def case2_weights(pyr: WaveletPyramid, k: int = 2, seed: int = 0, em_iters: int = 10,
                  m=None, lam: float = 4.0):
    """Clustering route end to end; returns ``(WeightMap, stats, assignments)``."""
    assign, _, _ = segment_trees(pyr, k=k, seed=seed, em_iters=em_iters)
    stats = cluster_entropy(pyr, assign, k)
    weights = importance_weights(pyr, assign, default_score(stats), m=m, lam=lam)
    return weights, stats, assign


def label_image(assignments: np.ndarray, shape: tuple[int, int], levels: int, k: int) -> np.ndarray:
    """Per-pixel cluster map scaled to ``cluster * floor(255 / (k - 1))``."""
    tree = spatial_tree(tuple(shape), levels)
    ri, rj = np.divmod(tree.roots, shape[1])
    hL, wL = shape[0] >> levels, shape[1] >> levels
    groups = np.zeros((hL // 2, wL // 2), dtype=np.int64)
    groups[ri // 2, rj // 2] = assignments
    block = 1 << (levels + 1)
    labels = np.kron(groups, np.ones((block, block), dtype=np.int64))
    step = 255 // (k - 1) if k > 1 else 0
    return (labels * step).astype(np.uint8)
