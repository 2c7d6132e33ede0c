"""HTTP session API around the interactive loop.

Sessions live in process memory and evict after an idle timeout. Strokes
arrive as polylines plus a brush radius and are rasterized server-side, so
every client gets identical brush semantics and a stroke log can be
replayed bit-exactly.
"""

from __future__ import annotations

import base64
import io
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from PIL import Image as _PILImage
from pydantic import BaseModel, Field

from . import pipeline
from .errors import ConflictError, DecodeError, EmptySeeds, SeedConflict, SingleSegment
from .imgio import Image, Scribbles, image_png_bytes, mask_png_bytes
from .pipeline import EngineConfig, SessionState


class StrokeModel(BaseModel):
    cls: str = Field(pattern="^(fg|bg)$")
    points: list[tuple[int, int]] = Field(min_length=1)  # (row, col)
    radius: int = Field(default=2, ge=0, le=256)


class ScribbleBatch(BaseModel):
    strokes: list[StrokeModel] = Field(default_factory=list)
    bbox: tuple[int, int, int, int] | None = None


class CreateSessionJson(BaseModel):
    image_b64: str
    bins: int | None = None
    lam: float | None = None
    measure: str | None = None
    lowlevel: str | None = None
    connectivity: int | None = None
    overlay_alpha: float | None = None


def _disc_offsets(radius: int) -> np.ndarray:
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dy * dy + dx * dx <= r * r
    return np.stack([dy[keep], dx[keep]], axis=1)


def rasterize_strokes(strokes: list[dict] | list[StrokeModel], height: int, width: int) -> Scribbles:
    """Stamp a round brush along each polyline at <= 1 px spacing.

    Out-of-bounds brush pixels are clipped. Raises ConflictError if the
    batch itself paints a pixel in both classes.
    """
    sets: dict[str, set[tuple[int, int]]] = {"fg": set(), "bg": set()}
    for stroke in strokes:
        if isinstance(stroke, StrokeModel):
            cls, points, radius = stroke.cls, stroke.points, stroke.radius
        else:
            cls, points, radius = stroke["cls"], stroke["points"], stroke.get("radius", 2)
        offsets = _disc_offsets(radius)
        stamped: list[np.ndarray] = []
        pts = [np.array(p, dtype=np.float64) for p in points]
        for a, b in zip(pts, pts[1:] or [pts[0]]):
            steps = max(1, int(np.ceil(np.hypot(*(b - a)))))
            for t in range(steps + 1):
                center = np.rint(a + (b - a) * (t / steps)).astype(np.int64)
                stamped.append(center + offsets)
        px = np.concatenate(stamped)
        ok = (px[:, 0] >= 0) & (px[:, 0] < height) & (px[:, 1] >= 0) & (px[:, 1] < width)
        px = px[ok]
        sets[cls].update(zip(px[:, 0].tolist(), px[:, 1].tolist()))
    overlap = sets["fg"] & sets["bg"]
    if overlap:
        raise ConflictError(min(overlap))
    return Scribbles(fg_pixels=frozenset(sets["fg"]), bg_pixels=frozenset(sets["bg"]))


def _decode_upload(data: bytes) -> Image:
    try:
        pil = _PILImage.open(io.BytesIO(data))
        pil.load()
    except Exception as exc:
        raise DecodeError(f"upload is not a decodable image: {exc}") from exc
    if pil.mode == "P":
        pil = pil.convert("RGB")
    if pil.mode == "RGBA":
        arr = np.asarray(pil)[:, :, :3]
    elif pil.mode == "RGB":
        arr = np.asarray(pil)
    elif pil.mode in ("L", "1", "LA"):
        arr = np.asarray(pil.convert("L"))
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    else:
        raise DecodeError(f"unsupported image mode {pil.mode!r}")
    return Image(np.ascontiguousarray(arr, dtype=np.uint8))


def _labels_png_b64(labels: np.ndarray) -> str:
    """Label map as 16-bit grayscale PNG (enough for 65k segments)."""
    arr = labels.astype(np.uint16)
    buf = io.BytesIO()
    _PILImage.fromarray(arr).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


@dataclass
class _Entry:
    session: SessionState
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)
    created_at: float = field(default_factory=time.time)


class SessionStore:
    """Process-local session registry with lazy idle eviction."""

    def __init__(self, ttl_seconds: float = 1800.0):
        self.ttl = ttl_seconds
        self._entries: dict[str, _Entry] = {}
        self._lock = threading.Lock()

    def _evict_idle(self) -> None:
        now = time.monotonic()
        for sid in [s for s, e in self._entries.items() if now - e.last_access > self.ttl]:
            del self._entries[sid]

    def put(self, session: SessionState) -> str:
        sid = secrets.token_hex(16)
        with self._lock:
            self._evict_idle()
            self._entries[sid] = _Entry(session=session)
        return sid

    def get(self, sid: str) -> _Entry:
        with self._lock:
            self._evict_idle()
            entry = self._entries.get(sid)
            if entry is None:
                raise KeyError(sid)
            entry.last_access = time.monotonic()
            return entry

    def delete(self, sid: str) -> None:
        with self._lock:
            if sid not in self._entries:
                raise KeyError(sid)
            del self._entries[sid]

    def __len__(self) -> int:
        return len(self._entries)


def create_app(
    config: EngineConfig | None = None,
    max_pixels: int = 4_000_000,
    session_ttl: float = 1800.0,
) -> FastAPI:
    base_config = config or EngineConfig()
    store = SessionStore(ttl_seconds=session_ttl)
    app = FastAPI(title="scribbleseg")
    app.state.store = store

    def _get(sid: str) -> _Entry:
        try:
            return store.get(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")

    @app.post("/sessions", status_code=201)
    async def create_session_endpoint(request: Request):
        content_type = request.headers.get("content-type", "")
        overrides: dict = {}
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("image")
            if upload is None:
                raise HTTPException(status_code=400, detail="missing 'image' field")
            data = await upload.read()
        else:
            try:
                body = CreateSessionJson.model_validate_json(await request.body())
            except Exception as exc:
                raise HTTPException(status_code=400, detail=f"bad request body: {exc}")
            try:
                data = base64.b64decode(body.image_b64, validate=True)
            except Exception:
                raise HTTPException(status_code=400, detail="image_b64 is not valid base64")
            overrides = body.model_dump(exclude_none=True, exclude={"image_b64"})

        try:
            image = _decode_upload(data)
        except DecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if image.width * image.height > max_pixels:
            raise HTTPException(status_code=413, detail=f"image exceeds {max_pixels} pixels")

        cfg = _apply_overrides(base_config, overrides)
        session = pipeline.create_session(image, cfg)
        sid = store.put(session)
        return {
            "id": sid,
            "n_segments": session.segmap.n_segments,
            "width": image.width,
            "height": image.height,
            "revision": session.revision,
            "labels_png_b64": _labels_png_b64(session.segmap.labels),
        }

    @app.get("/sessions/{sid}/segments")
    def get_segments(sid: str):
        entry = _get(sid)
        session = entry.session
        return {
            "n_segments": session.segmap.n_segments,
            "labels_png_b64": _labels_png_b64(session.segmap.labels),
        }

    @app.post("/sessions/{sid}/scribbles")
    def post_scribbles(sid: str, batch: ScribbleBatch):
        entry = _get(sid)
        with entry.lock:
            session = entry.session
            try:
                delta = rasterize_strokes(batch.strokes, session.image.height, session.image.width)
                if batch.bbox is not None:
                    delta = delta.union(Scribbles(bbox=batch.bbox))
                pipeline.add_scribbles(session, delta)
            except ConflictError as exc:
                raise HTTPException(status_code=409, detail={
                    "error": "scribble conflict",
                    "pixel": list(exc.pixel),
                })
            except ValueError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            return {"revision": session.revision,
                    "fg_pixels": len(session.scribbles.fg_pixels),
                    "bg_pixels": len(session.scribbles.bg_pixels)}

    @app.post("/sessions/{sid}/cut")
    def post_cut(sid: str):
        entry = _get(sid)
        with entry.lock:
            session = entry.session
            start = time.perf_counter()
            try:
                mask, overlay, cut = pipeline.run_cut(session)
            except EmptySeeds as exc:
                raise HTTPException(status_code=422, detail=f"no {exc.missing} seeds; scribble both classes")
            except (SeedConflict, SingleSegment) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            elapsed = time.perf_counter() - start
            u, v, w = cut.removed_edge
            return {
                "revision": session.revision,
                "mask_png_b64": base64.b64encode(mask_png_bytes(mask)).decode("ascii"),
                "overlay_png_b64": base64.b64encode(image_png_bytes(overlay)).decode("ascii"),
                "removed_edge": {"u": u, "v": v, "weight": w},
                "seconds": elapsed,
            }

    @app.post("/sessions/{sid}/reset")
    def post_reset(sid: str):
        entry = _get(sid)
        with entry.lock:
            pipeline.reset_scribbles(entry.session)
            return {"revision": entry.session.revision}

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        try:
            store.delete(sid)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return Response(status_code=204)

    return app


def _apply_overrides(base: EngineConfig, overrides: dict) -> EngineConfig:
    if not overrides:
        return base
    sim = base.similarity
    try:
        sim = type(sim)(
            bins=overrides.get("bins", sim.bins),
            lam=overrides.get("lam", sim.lam),
            measure=overrides.get("measure", sim.measure),
        )
        return EngineConfig(
            similarity=sim,
            lowlevel=overrides.get("lowlevel", base.lowlevel),
            meanshift=base.meanshift,
            slic_k=base.slic_k,
            slic_compactness=base.slic_compactness,
            connectivity=overrides.get("connectivity", base.connectivity),
            beta_sq=base.beta_sq,
            overlay_alpha=overrides.get("overlay_alpha", base.overlay_alpha),
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"bad config override: {exc}")


app = create_app()
