"""Low-level segmentation producing pixel-segments (graph nodes).

Mean-shift is the primary method: each pixel's joint (row, col, L, u, v)
vector is shifted to its density mode under a flat kernel, adjacent pixels
with close modes are fused, and undersized regions are merged away. SLIC
is the alternative for grid-like superpixels of roughly equal size.

Deliberate over-segmentation is fine here; the graph stage only needs
segment boundaries to include the true object boundary.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvalidK
from .imgio import Image


@dataclass
class SegmentMap:
    """Per-pixel segment labels in 0..n_segments-1, each id 4-connected."""

    labels: np.ndarray
    n_segments: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ValueError(f"expected (H, W) label array, got shape {lab.shape}")
        self.labels = lab.astype(np.int32)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass
class MeanShiftParams:
    hs: float = 8.0        # spatial bandwidth, pixels
    hr: float = 8.0        # range bandwidth, Luv units
    min_size: int = 50     # smallest surviving region, pixels
    eps: float = 0.1       # joint-space displacement convergence threshold
    max_iter: int = 50

    def __post_init__(self):
        if self.hs <= 0 or self.hr <= 0:
            raise ValueError("hs and hr must be positive")
        if self.min_size < 1:
            raise ValueError("min_size must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


# sRGB (D65) -> XYZ linear transform
_RGB2XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XN, _YN, _ZN = 0.95047, 1.0, 1.08883
_UN = 4.0 * _XN / (_XN + 15.0 * _YN + 3.0 * _ZN)
_VN = 9.0 * _YN / (_XN + 15.0 * _YN + 3.0 * _ZN)
_CIE_EPS = (6.0 / 29.0) ** 3
_CIE_KAPPA = (29.0 / 3.0) ** 3


def rgb_to_luv(pixels: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (8-bit) to CIE L*u*v*, D65 white point."""
    c = pixels.astype(np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB2XYZ.T
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    yr = y / _YN
    lum = np.where(yr > _CIE_EPS, 116.0 * np.cbrt(yr) - 16.0, _CIE_KAPPA * yr)
    denom = x + 15.0 * y + 3.0 * z
    safe = denom > 0
    up = np.where(safe, 4.0 * x / np.where(safe, denom, 1.0), _UN)
    vp = np.where(safe, 9.0 * y / np.where(safe, denom, 1.0), _VN)
    u = 13.0 * lum * (up - _UN)
    v = 13.0 * lum * (vp - _VN)
    return np.stack([lum, u, v], axis=-1)


def _window_offsets(hs: float) -> np.ndarray:
    """Offsets around a rounded center that can reach a float center's hs-ball.

    The true center lies within 0.5 of the rounded one per axis, so an
    offset is a candidate iff its distance lower bound is within hs.
    """
    w = int(np.ceil(hs)) + 1
    dy, dx = np.mgrid[-w:w + 1, -w:w + 1]
    lower = np.hypot(np.maximum(np.abs(dy) - 0.5, 0.0), np.maximum(np.abs(dx) - 0.5, 0.0))
    keep = lower <= hs
    return np.stack([dy[keep], dx[keep]], axis=1)


def meanshift_filter(image: Image, params: MeanShiftParams) -> np.ndarray:
    """Converged joint-domain mode per pixel, shape (H, W, 5): row, col, L, u, v.

    Flat kernel: the updated mode is the plain mean of all pixels within
    spatial radius hs AND range radius hr of the current mode (Euclidean in
    both subspaces). Candidates are gathered from the spatial window around
    the rounded mode position, which is a superset of the hs-ball, so the
    restriction never changes the result. Iteration per pixel stops when the
    joint displacement drops below eps or after max_iter updates.
    """
    h, w = image.height, image.width
    n = h * w
    luv = rgb_to_luv(image.pixels).reshape(n, 3)
    rr, cc = np.mgrid[0:h, 0:w]
    modes = np.concatenate(
        [rr.reshape(n, 1), cc.reshape(n, 1), luv], axis=1
    ).astype(np.float64)

    hs2 = params.hs * params.hs
    hr2 = params.hr * params.hr
    offsets = _window_offsets(params.hs)

    active = np.arange(n)
    for _ in range(params.max_iter):
        if active.size == 0:
            break
        cur = modes[active]
        mr, mc = cur[:, 0], cur[:, 1]
        mluv = cur[:, 2:5]
        cr = np.rint(mr).astype(np.int64)
        ccol = np.rint(mc).astype(np.int64)
        fr = cr - mr    # rounded-center minus float-center, per axis
        fc = ccol - mc

        cnt = np.zeros(active.size)
        acc = np.zeros((active.size, 5))
        for dy, dx in offsets:
            r = cr + dy
            c = ccol + dx
            inb = (r >= 0) & (r < h) & (c >= 0) & (c < w)
            flat = np.clip(r, 0, h - 1) * w + np.clip(c, 0, w - 1)
            pix = luv[flat]
            sd2 = (fr + dy) ** 2 + (fc + dx) ** 2
            rd2 = ((pix - mluv) ** 2).sum(axis=1)
            ok = inb & (sd2 <= hs2) & (rd2 <= hr2)
            okf = ok.astype(np.float64)
            cnt += okf
            acc[:, 0] += r * okf
            acc[:, 1] += c * okf
            acc[:, 2:5] += pix * okf[:, None]

        nonempty = cnt > 0
        new = cur.copy()
        new[nonempty] = acc[nonempty] / cnt[nonempty, None]
        disp = np.sqrt(((new - cur) ** 2).sum(axis=1))
        modes[active] = new
        active = active[(disp >= params.eps) & nonempty]

    return modes.reshape(h, w, 5)


def _compact_labels(comp: np.ndarray, n_comp: int) -> tuple[np.ndarray, int]:
    """Relabel components to 0..n-1 in order of first row-major occurrence."""
    first = np.full(n_comp, comp.size, dtype=np.int64)
    np.minimum.at(first, comp, np.arange(comp.size))
    remap = np.empty(n_comp, dtype=np.int64)
    remap[np.argsort(first, kind="stable")] = np.arange(n_comp)
    return remap[comp], n_comp


def _grid_components(h: int, w: int, link_right: np.ndarray, link_down: np.ndarray) -> tuple[np.ndarray, int]:
    """Connected components over the pixel grid given 4-neighbor link masks.

    link_right has shape (H, W-1); link_down has shape (H-1, W).
    Returns flat component labels compacted in row-major first-occurrence order.
    """
    n = h * w
    idx = np.arange(n).reshape(h, w)
    src = np.concatenate([idx[:, :-1][link_right].ravel(), idx[:-1, :][link_down].ravel()])
    dst = np.concatenate([idx[:, 1:][link_right].ravel(), idx[1:, :][link_down].ravel()])
    adj = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    n_comp, comp = connected_components(adj, directed=False)
    return _compact_labels(comp, n_comp)


def _merge_small_regions(
    labels: np.ndarray,
    n_regions: int,
    region_color: np.ndarray,
    region_area: np.ndarray,
    min_size: int,
) -> tuple[np.ndarray, int]:
    """Fuse undersized regions into their most similar 4-adjacent neighbor.

    Smallest region first (ties by id); target is the live neighbor with the
    closest mean color (ties by id). Stops rather than dropping below two
    regions. Label array is relabeled and compacted at the end.
    """
    h, w = labels.shape
    area = region_area.astype(np.int64).copy()
    color_sum = region_color * region_area[:, None]

    adj: list[set[int]] = [set() for _ in range(n_regions)]
    lr = labels[:, :-1] != labels[:, 1:]
    ld = labels[:-1, :] != labels[1:, :]
    pairs = np.concatenate([
        np.stack([labels[:, :-1][lr], labels[:, 1:][lr]], axis=1),
        np.stack([labels[:-1, :][ld], labels[1:, :][ld]], axis=1),
    ])
    for a, b in np.unique(pairs, axis=0):
        adj[a].add(int(b))
        adj[b].add(int(a))

    parent = np.arange(n_regions)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    alive = n_regions
    dead = np.zeros(n_regions, dtype=bool)
    heap = [(int(area[i]), i) for i in range(n_regions) if area[i] < min_size]
    heapq.heapify(heap)

    while heap and alive > 2:
        a, r = heapq.heappop(heap)
        if dead[r] or area[r] != a or area[r] >= min_size:
            continue
        mean_r = color_sum[r] / area[r]
        best: tuple[float, int] | None = None
        for nb in sorted(adj[r]):
            if dead[nb]:
                continue
            d = float(np.sqrt(((color_sum[nb] / area[nb] - mean_r) ** 2).sum()))
            if best is None or (d, nb) < best:
                best = (d, nb)
        if best is None:
            continue
        nb = best[1]
        # fold r into nb
        area[nb] += area[r]
        color_sum[nb] += color_sum[r]
        dead[r] = True
        alive -= 1
        parent[r] = nb
        for other in adj[r]:
            if other == nb:
                continue
            adj[other].discard(r)
            if not dead[other]:
                adj[other].add(nb)
                adj[nb].add(other)
        adj[nb].discard(r)
        if area[nb] < min_size:
            heapq.heappush(heap, (int(area[nb]), nb))

    roots = np.array([find(i) for i in range(n_regions)])
    flat = roots[labels.ravel()]
    # compact surviving roots by first occurrence
    uniq, inv = np.unique(flat, return_inverse=True)
    compacted, n_final = _compact_labels(inv, len(uniq))
    return compacted.reshape(h, w), n_final


def meanshift_segment(image: Image, params: MeanShiftParams) -> SegmentMap:
    """Mean-shift pixel-segments: filter, fuse close modes, absorb small regions."""
    h, w = image.height, image.width
    modes = meanshift_filter(image, params)
    pos = modes[:, :, :2]
    rng = modes[:, :, 2:]

    hs2 = params.hs * params.hs
    hr2 = params.hr * params.hr

    def close(a_pos, b_pos, a_rng, b_rng):
        sd2 = ((a_pos - b_pos) ** 2).sum(axis=-1)
        rd2 = ((a_rng - b_rng) ** 2).sum(axis=-1)
        return (sd2 <= hs2) & (rd2 <= hr2)

    link_right = close(pos[:, :-1], pos[:, 1:], rng[:, :-1], rng[:, 1:])
    link_down = close(pos[:-1, :], pos[1:, :], rng[:-1, :], rng[1:, :])
    comp, n_comp = _grid_components(h, w, link_right, link_down)
    labels = comp.reshape(h, w)

    flat_modes = rng.reshape(-1, 3)
    region_area = np.bincount(comp, minlength=n_comp).astype(np.float64)
    region_color = np.zeros((n_comp, 3))
    for k in range(3):
        region_color[:, k] = np.bincount(comp, weights=flat_modes[:, k], minlength=n_comp)
    region_color /= region_area[:, None]

    labels, n_final = _merge_small_regions(labels, n_comp, region_color, region_area, params.min_size)
    return SegmentMap(labels, n_final)


def slic_segment(image: Image, k: int, compactness: float = 10.0) -> SegmentMap:
    """SLIC superpixels: grid seeds, 10 joint-space assignment/update rounds.

    Distance is d_color^2 + (d_spatial/S)^2 * m^2 in (L, u, v, row, col) with
    step S = sqrt(H*W/k); each cluster searches a 2Sx2S window. Disconnected
    fragments are then folded into their dominant 4-neighbor label so every
    output segment is 4-connected.
    """
    h, w = image.height, image.width
    if not (1 <= k <= h * w):
        raise InvalidK(f"k must be in [1, {h * w}], got {k}")
    luv = rgb_to_luv(image.pixels)
    step = np.sqrt(h * w / k)

    if k == 1:
        seeds = [(h / 2.0, w / 2.0)]
    else:
        n_rows = max(1, int(round(h / step)))
        n_cols = max(1, int(round(w / step)))
        seeds = [
            ((i + 0.5) * h / n_rows, (j + 0.5) * w / n_cols)
            for i in range(n_rows)
            for j in range(n_cols)
        ]
    centers = np.zeros((len(seeds), 5))
    for ci, (sr, sc) in enumerate(seeds):
        r, c = min(h - 1, int(sr)), min(w - 1, int(sc))
        centers[ci] = [luv[r, c, 0], luv[r, c, 1], luv[r, c, 2], sr, sc]

    rr, cc = np.mgrid[0:h, 0:w]
    m2_s2 = (compactness * compactness) / (step * step)

    lab = np.zeros((h, w), dtype=np.int64)
    for _ in range(10):
        dist = np.full((h, w), np.inf)
        lab.fill(-1)
        for ci in range(len(centers)):
            lum, u, v, crow, ccol = centers[ci]
            r0 = max(0, int(crow - step))
            r1 = min(h, int(crow + step) + 1)
            c0 = max(0, int(ccol - step))
            c1 = min(w, int(ccol + step) + 1)
            if r0 >= r1 or c0 >= c1:
                continue
            dc2 = ((luv[r0:r1, c0:c1] - [lum, u, v]) ** 2).sum(axis=-1)
            ds2 = (rr[r0:r1, c0:c1] - crow) ** 2 + (cc[r0:r1, c0:c1] - ccol) ** 2
            d = dc2 + ds2 * m2_s2
            win_dist = dist[r0:r1, c0:c1]
            win_lab = lab[r0:r1, c0:c1]
            upd = d < win_dist
            win_dist[upd] = d[upd]
            win_lab[upd] = ci

        if (lab == -1).any():
            # corner pixels can fall outside every drifted window
            miss_r, miss_c = np.nonzero(lab == -1)
            pts = np.stack([miss_r, miss_c], axis=1).astype(np.float64)
            d2 = ((pts[:, None, :] - centers[None, :, 3:5]) ** 2).sum(axis=-1)
            lab[miss_r, miss_c] = np.argmin(d2, axis=1)

        flat_lab = lab.ravel()
        counts = np.bincount(flat_lab, minlength=len(centers)).astype(np.float64)
        feats = np.concatenate(
            [luv.reshape(-1, 3), rr.reshape(-1, 1), cc.reshape(-1, 1)], axis=1
        )
        for dim in range(5):
            sums = np.bincount(flat_lab, weights=feats[:, dim], minlength=len(centers))
            nz = counts > 0
            centers[nz, dim] = sums[nz] / counts[nz]

    lab = _enforce_connectivity(lab)
    uniq, inv = np.unique(lab.ravel(), return_inverse=True)
    compacted, n_final = _compact_labels(inv, len(uniq))
    return SegmentMap(compacted.reshape(h, w), n_final)


def _enforce_connectivity(lab: np.ndarray, max_passes: int = 64) -> np.ndarray:
    """Reassign disconnected fragments to their dominant 4-neighbor label.

    Each label keeps its largest fragment (ties: earliest pixel); every other
    fragment adopts the most frequent adjacent foreign label. Fragments are
    processed in deterministic order and passes repeat until stable.
    """
    h, w = lab.shape
    lab = lab.copy()
    for _ in range(max_passes):
        link_right = lab[:, :-1] == lab[:, 1:]
        link_down = lab[:-1, :] == lab[1:, :]
        comp, n_comp = _grid_components(h, w, link_right, link_down)
        flat_lab = lab.ravel()

        sizes = np.bincount(comp, minlength=n_comp)
        comp_label = np.zeros(n_comp, dtype=np.int64)
        comp_label[comp] = flat_lab  # constant within a component
        first_px = np.full(n_comp, comp.size, dtype=np.int64)
        np.minimum.at(first_px, comp, np.arange(comp.size))

        # main component per label: largest, earliest on ties
        main: dict[int, int] = {}
        order = sorted(range(n_comp), key=lambda c: (-sizes[c], first_px[c]))
        for c in order:
            main.setdefault(int(comp_label[c]), c)
        orphan_comps = [c for c in range(n_comp) if main[int(comp_label[c])] != c]
        if not orphan_comps:
            return lab

        comp_grid = comp.reshape(h, w)
        for c in sorted(orphan_comps, key=lambda c: first_px[c]):
            frag = comp_grid == c
            own = int(comp_label[c])
            votes: dict[int, int] = {}
            fr, fc = np.nonzero(frag)
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                nr, nc = fr + dr, fc + dc
                ok = (nr >= 0) & (nr < h) & (nc >= 0) & (nc < w)
                for lbl in lab[nr[ok], nc[ok]]:
                    if lbl != own:
                        votes[int(lbl)] = votes.get(int(lbl), 0) + 1
            if votes:
                best = max(votes.items(), key=lambda kv: (kv[1], -kv[0]))[0]
                lab[frag] = best
    return lab
