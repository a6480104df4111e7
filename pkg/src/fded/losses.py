"""Patch reconstruction loss, edge-guided contrastive ranking loss and a toy
affine per-patch stylizer trained by full-batch gradient descent."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NumericError(ArithmeticError):
    pass


_EPS = 1e-12


@dataclass
class PatchSet:
    """Non-overlapping ``P x P`` tiles; each row of ``data`` is a tile
    flattened in ``(row, col, channel)`` order."""

    data: np.ndarray
    edge_flags: np.ndarray
    patch_px: int
    grid: tuple[int, int]
    padded: bool = False

    @property
    def n(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class LossParams:
    delta: float = 0.1
    negatives_per_anchor: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.negatives_per_anchor < 1:
            raise ValueError("negatives_per_anchor must be >= 1")


def _tiles(img: np.ndarray, p: int) -> tuple[np.ndarray, tuple[int, int], bool]:
    # img is (H, W, C); replicate-pad to a multiple of p.
    h, w = img.shape[:2]
    ph, pw = (-h) % p, (-w) % p
    padded = bool(ph or pw)
    if padded:
        img = np.pad(img, ((0, ph), (0, pw), (0, 0)), mode="edge")
    rows, cols = img.shape[0] // p, img.shape[1] // p
    t = img.reshape(rows, p, cols, p, -1).transpose(0, 2, 1, 3, 4)
    return t.reshape(rows * cols, -1), (rows, cols), padded


def patchify(image: np.ndarray, e: np.ndarray | None, patch_px: int = 8) -> PatchSet:
    """Tile a ``(3, H, W)`` image row-major; a tile is edge-flagged when its
    footprint holds at least one pixel of ``e``."""
    img = np.moveaxis(np.asarray(image, dtype=np.float64), 0, -1)
    data, grid, padded = _tiles(img, patch_px)
    if e is None:
        flags = np.zeros(len(data), dtype=bool)
    else:
        # Padding copies border pixels, so count only the original footprint.
        em = np.zeros((grid[0] * patch_px, grid[1] * patch_px), dtype=bool)
        em[: e.shape[0], : e.shape[1]] = e
        flags = em.reshape(grid[0], patch_px, grid[1], patch_px).any(axis=(1, 3)).reshape(-1)
    return PatchSet(data, flags, patch_px, grid, padded)


def edge_tiles(e: np.ndarray, patch_px: int = 8) -> np.ndarray:
    """Edge map tiled like :func:`patchify`, one ``P*P`` row per tile."""
    data, _, _ = _tiles(np.asarray(e, dtype=np.float64)[..., None], patch_px)
    return data


def _arr(v) -> np.ndarray:
    return np.asarray(v.data if isinstance(v, PatchSet) else v, dtype=np.float64)


def recon_loss(y, x) -> float:
    y, x = _arr(y), _arr(x)
    if y.shape != x.shape:
        raise ValueError(f"patch sets differ in shape: {y.shape} vs {x.shape}")
    return float(np.sum((y - x) ** 2))


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < _EPS or nb < _EPS:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def _cos_rows(a: np.ndarray, b: np.ndarray):
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na >= _EPS) & (nb >= _EPS)
    den = np.where(ok, na * nb, 1.0)
    c = np.where(ok, np.einsum("ij,ij->i", a, b) / den, 0.0)
    return np.clip(c, -1.0, 1.0), na, nb, ok


def sample_pairs(flags: np.ndarray, k: int, seed: int, iteration: int = 0) -> np.ndarray:
    """``(anchor, negative)`` index pairs: for every edge-flagged anchor, up to
    ``k`` other edge-flagged patches drawn uniformly without replacement."""
    anchors = np.flatnonzero(flags)
    if len(anchors) < 2:
        return np.zeros((0, 2), dtype=np.int64)
    rng = np.random.default_rng([seed, iteration])
    m = len(anchors)
    # Random keys with the anchor itself pushed last; the k smallest keys of
    # each row are a uniform draw without replacement from the other anchors.
    keys = rng.random((m, m))
    np.fill_diagonal(keys, np.inf)
    kk = min(k, m - 1)
    neg = np.argsort(keys, axis=1, kind="stable")[:, :kk]
    return np.column_stack([np.repeat(anchors, kk), anchors[neg].ravel()]).astype(np.int64)


def _hinge_terms(y, x, pairs, delta):
    j, k = pairs[:, 0], pairs[:, 1]
    pos, *_ = _cos_rows(y[j], x[j])
    neg, *_ = _cos_rows(y[j], x[k])
    return neg - pos + delta


def contrastive_loss(y, x, flags, params: LossParams | None = None, iteration: int = 0, diagnostics: bool = False):
    """Summed hinge over sampled ``(anchor, negative)`` pairs. With
    ``diagnostics`` also returns ``{"pairs": n, "degenerate": bool}``, where
    degenerate means fewer than two edge patches (loss 0)."""
    params = params or LossParams()
    y, x = _arr(y), _arr(x)
    if y.shape != x.shape:
        raise ValueError(f"patch sets differ in shape: {y.shape} vs {x.shape}")
    pairs = sample_pairs(flags, params.negatives_per_anchor, params.rng_seed, iteration)
    loss = float(np.maximum(_hinge_terms(y, x, pairs, params.delta), 0.0).sum()) if len(pairs) else 0.0
    if diagnostics:
        return loss, {"pairs": len(pairs), "degenerate": len(pairs) == 0}
    return loss


def total_loss(y, x, flags, params: LossParams | None = None, iteration: int = 0) -> float:
    return recon_loss(y, x) + contrastive_loss(y, x, flags, params, iteration)


def _cos_grad(a, b):
    """d cos(a, b) / d a, row-wise; zero where either norm vanishes."""
    c, na, nb, ok = _cos_rows(a, b)
    na_ = np.where(ok, na, 1.0)[:, None]
    nb_ = np.where(ok, nb, 1.0)[:, None]
    g = b / (na_ * nb_) - c[:, None] * a / na_**2
    return np.where(ok[:, None], g, 0.0)


def loss_gradients(y, x, flags, params: LossParams | None = None, iteration: int = 0, contrastive: bool = True) -> np.ndarray:
    """Gradient of ``total_loss`` with respect to every component of ``y``.

    Inactive hinges and hinges exactly at the kink contribute nothing.
    """
    params = params or LossParams()
    y, x = _arr(y), _arr(x)
    grad = 2.0 * (y - x)
    if not contrastive:
        return grad
    pairs = sample_pairs(flags, params.negatives_per_anchor, params.rng_seed, iteration)
    if len(pairs) == 0:
        return grad
    _add_hinge_grad(grad, y, x, pairs[_hinge_terms(y, x, pairs, params.delta) > 0])
    return grad


def _add_hinge_grad(grad, y, x, active_pairs):
    j, k = active_pairs[:, 0], active_pairs[:, 1]
    np.add.at(grad, j, _cos_grad(y[j], x[k]) - _cos_grad(y[j], x[j]))


@dataclass
class ToyStylizer:
    """Affine map from a ``(Z tile, edge tile)`` vector to an output tile."""

    weights: np.ndarray  # (P*P*3, P*P*4)
    bias: np.ndarray  # (P*P*3,)

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        return inputs @ self.weights.T + self.bias


def stylizer_inputs(z_patches, e_patches) -> np.ndarray:
    return np.hstack([_arr(z_patches), np.asarray(e_patches, dtype=np.float64)])


def max_stable_lr(inputs: np.ndarray) -> float:
    """``1 / L`` where ``L`` is the largest curvature of the reconstruction
    loss in the affine model's parameters (bias included)."""
    a = np.hstack([inputs, np.ones((len(inputs), 1))])
    return 1.0 / (2.0 * np.linalg.eigvalsh(a.T @ a)[-1])


def train_toy(
    z_patches,
    e_patches,
    x_patches,
    flags,
    params: LossParams | None = None,
    lr: float = 1e-5,
    iters: int = 100,
    use_contrastive: bool = True,
    seed: int = 0,
) -> tuple[ToyStylizer, list[float]]:
    """Full-batch gradient descent; returns the model and the reconstruction
    loss before every update. Negatives are resampled each iteration."""
    if lr < 0:
        raise ValueError("lr must be >= 0")
    params = params or LossParams()
    inputs = stylizer_inputs(z_patches, e_patches)
    x = _arr(x_patches)
    rng = np.random.default_rng(seed)
    model = ToyStylizer(rng.uniform(-0.01, 0.01, (x.shape[1], inputs.shape[1])), np.zeros(x.shape[1]))
    history = []
    # Divergence is reported as NumericError below, not as overflow warnings.
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(iters):
            y = model(inputs)
            rec = recon_loss(y, x)
            g = 2.0 * (y - x)
            total = rec
            if use_contrastive:
                pairs = sample_pairs(flags, params.negatives_per_anchor, params.rng_seed, it)
                if len(pairs):
                    hinge = _hinge_terms(y, x, pairs, params.delta)
                    total += float(np.maximum(hinge, 0.0).sum())
                    _add_hinge_grad(g, y, x, pairs[hinge > 0])
            if not np.isfinite(total):
                raise NumericError(f"non-finite loss at iteration {it}")
            history.append(rec)
            model.weights -= lr * (g.T @ inputs)
            model.bias -= lr * g.sum(axis=0)
    return model, history
