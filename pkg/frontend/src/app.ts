/**
 * Canvas scribble client: draw foreground/background strokes (plus an
 * optional bounding box), run cuts, inspect the translucent overlay, refine,
 * export the mask. All stroke geometry goes to the server as polylines;
 * local drawing is preview only.
 */

import { SegmentationClient, Stroke, StrokeClass, base64ToBytes } from "./api.js";
import { compositeOverlay } from "./blend.js";
import { UiSession, isConflict, isMissingSeeds } from "./session.js";

const API_BASE = (window as { SCRIBBLESEG_API?: string }).SCRIBBLESEG_API ?? "";

type Tool = "brush" | "bbox";

interface AppState {
    session: UiSession | null;
    image: ImageBitmap | null;
    maskGray: Uint8ClampedArray | null;
    tool: Tool;
    brushClass: StrokeClass;
    radius: number;
    alpha: number;
    pendingRequest: boolean;
    showOutlines: boolean;
    outlines: ImageData | null;
    currentPath: [number, number][];
    bboxDrag: { start: [number, number]; end: [number, number] } | null;
}

const state: AppState = {
    session: null,
    image: null,
    maskGray: null,
    tool: "brush",
    brushClass: "fg",
    radius: 3,
    alpha: 0.6,
    pendingRequest: false,
    showOutlines: false,
    outlines: null,
    currentPath: [],
    bboxDrag: null,
};

function el<T extends HTMLElement>(id: string): T {
    const found = document.getElementById(id);
    if (!found) throw new Error(`missing element #${id}`);
    return found as T;
}

const canvas = el<HTMLCanvasElement>("canvas");
const ctx = canvas.getContext("2d")!;
const status = el<HTMLSpanElement>("status");
const client = new SegmentationClient(API_BASE);

function setStatus(text: string, isError = false): void {
    status.textContent = text;
    status.className = isError ? "error" : "";
}

function setBusy(busy: boolean): void {
    state.pendingRequest = busy;
    for (const id of ["cut", "undo", "reset", "export"]) {
        (el<HTMLButtonElement>(id)).disabled = busy || !state.session;
    }
}

async function decodePng(bytes: Uint8Array): Promise<ImageBitmap> {
    return createImageBitmap(new Blob([bytes.slice().buffer], { type: "image/png" }));
}

/** Gray values of a decoded mask PNG, via an offscreen canvas. */
async function pngToGray(bytes: Uint8Array, width: number, height: number): Promise<Uint8ClampedArray> {
    const bitmap = await decodePng(bytes);
    const off = new OffscreenCanvas(width, height);
    const octx = off.getContext("2d")!;
    octx.drawImage(bitmap, 0, 0);
    const data = octx.getImageData(0, 0, width, height).data;
    const gray = new Uint8ClampedArray(width * height);
    for (let p = 0; p < gray.length; p++) {
        gray[p] = data[p * 4]!;
    }
    return gray;
}

/** Segment outlines from the label map: mark pixels whose right/down neighbor differs. */
async function computeOutlines(labelsPngB64: string, width: number, height: number): Promise<ImageData> {
    const gray = await pngToGray(base64ToBytes(labelsPngB64), width, height);
    const out = new ImageData(width, height);
    for (let r = 0; r < height; r++) {
        for (let c = 0; c < width; c++) {
            const p = r * width + c;
            const right = c + 1 < width && gray[p] !== gray[p + 1];
            const down = r + 1 < height && gray[p] !== gray[p + width];
            if (right || down) {
                out.data[p * 4] = 255;
                out.data[p * 4 + 3] = 170;   // translucent red outline
            }
        }
    }
    return out;
}

async function redraw(): Promise<void> {
    if (!state.image || !state.session) return;
    const { width, height } = state.session;
    canvas.width = width;
    canvas.height = height;
    ctx.drawImage(state.image, 0, 0);

    if (state.maskGray) {
        const frame = ctx.getImageData(0, 0, width, height);
        compositeOverlay(frame.data, state.maskGray, state.alpha);
        ctx.putImageData(frame, 0, 0);
    }
    if (state.showOutlines && state.outlines) {
        const overlayCanvas = new OffscreenCanvas(width, height);
        overlayCanvas.getContext("2d")!.putImageData(state.outlines, 0, 0);
        ctx.drawImage(overlayCanvas, 0, 0);
    }
    drawStrokePreviews();
    if (state.bboxDrag) {
        const [r0, c0] = state.bboxDrag.start;
        const [r1, c1] = state.bboxDrag.end;
        ctx.strokeStyle = "#ffaa00";
        ctx.lineWidth = 1;
        ctx.strokeRect(Math.min(c0, c1), Math.min(r0, r1), Math.abs(c1 - c0), Math.abs(r1 - r0));
    } else if (state.session.pendingBbox) {
        const [r0, c0, r1, c1] = state.session.pendingBbox;
        ctx.strokeStyle = "#ffaa00";
        ctx.strokeRect(c0, r0, c1 - c0, r1 - r0);
    }
}

function drawStrokePreviews(): void {
    if (!state.session) return;
    const paths: { points: [number, number][]; cls: StrokeClass; radius: number }[] =
        state.session.strokeLog.map((s) => ({ points: s.points, cls: s.cls, radius: s.radius }));
    if (state.currentPath.length > 0) {
        paths.push({ points: state.currentPath, cls: state.brushClass, radius: state.radius });
    }
    for (const path of paths) {
        ctx.strokeStyle = path.cls === "fg" ? "rgba(255,0,0,0.8)" : "rgba(0,0,255,0.8)";
        ctx.lineWidth = Math.max(1, path.radius * 2);
        ctx.lineCap = "round";
        ctx.lineJoin = "round";
        ctx.beginPath();
        const first = path.points[0]!;
        ctx.moveTo(first[1], first[0]);
        for (const [r, c] of path.points.slice(1)) {
            ctx.lineTo(c, r);
        }
        ctx.stroke();
    }
}

function eventToImageCoords(event: PointerEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    const col = Math.round((event.clientX - rect.left) * (canvas.width / rect.width));
    const row = Math.round((event.clientY - rect.top) * (canvas.height / rect.height));
    return [
        Math.max(0, Math.min(canvas.height - 1, row)),
        Math.max(0, Math.min(canvas.width - 1, col)),
    ];
}

async function finishStroke(): Promise<void> {
    if (!state.session || state.currentPath.length === 0) return;
    const stroke: Stroke = {
        cls: state.brushClass,
        points: state.currentPath,
        radius: state.radius,
    };
    state.currentPath = [];
    setBusy(true);
    try {
        const revision = await state.session.addStroke(stroke);
        setStatus(`stroke acknowledged (revision ${revision})`);
    } catch (error) {
        if (isConflict(error)) {
            // not logged, so the local undo is implicit; just surface it
            setStatus("stroke conflicts with the other class there; undone", true);
        } else {
            setStatus(String(error), true);
        }
    } finally {
        setBusy(false);
        void redraw();
    }
}

async function onCut(): Promise<void> {
    if (!state.session) return;
    setBusy(true);
    try {
        const cut = await state.session.runCut();
        state.maskGray = await pngToGray(cut.maskPng, state.session.width, state.session.height);
        setStatus(`cut done in ${cut.seconds.toFixed(2)}s; removed edge weight ${cut.removedEdgeWeight.toFixed(4)}`);
    } catch (error) {
        if (isMissingSeeds(error)) {
            setStatus(`need scribbles on both classes: ${JSON.stringify((error as { detail?: unknown }).detail ?? "")}`, true);
        } else {
            setStatus(String(error), true);
        }
    } finally {
        setBusy(false);
        void redraw();
    }
}

async function onUndo(): Promise<void> {
    if (!state.session) return;
    setBusy(true);
    try {
        await state.session.undoLastStroke();
        state.maskGray = null;
        setStatus("last stroke removed (log replayed)");
    } catch (error) {
        setStatus(String(error), true);
    } finally {
        setBusy(false);
        void redraw();
    }
}

async function onReset(): Promise<void> {
    if (!state.session) return;
    setBusy(true);
    try {
        state.session.strokeLog.length = 0;
        await state.session.replayLog();
        state.maskGray = null;
        setStatus("scribbles cleared");
    } finally {
        setBusy(false);
        void redraw();
    }
}

function onExport(): void {
    if (!state.session?.lastCut) {
        setStatus("run a cut before exporting", true);
        return;
    }
    const bytes = state.session.exportMask();
    const url = URL.createObjectURL(new Blob([bytes.slice().buffer], { type: "image/png" }));
    const link = document.createElement("a");
    link.href = url;
    link.download = "mask.png";
    link.click();
    URL.revokeObjectURL(url);
}

async function onFile(file: File): Promise<void> {
    const bytes = new Uint8Array(await file.arrayBuffer());
    setBusy(true);
    setStatus("segmenting...");
    try {
        state.session = await UiSession.open(client, bytes);
        state.image = await decodePng(bytes);
        state.maskGray = null;
        state.outlines = await computeOutlines(
            state.session.labelsPngB64, state.session.width, state.session.height);
        setStatus(`session ready: ${state.session.nSegments} segments`);
    } catch (error) {
        setStatus(`upload failed: ${String(error)}`, true);
        state.session = null;
    } finally {
        setBusy(false);
        void redraw();
    }
}

export function wireUp(): void {
    el<HTMLInputElement>("file").addEventListener("change", (ev) => {
        const file = (ev.target as HTMLInputElement).files?.[0];
        if (file) void onFile(file);
    });

    canvas.addEventListener("pointerdown", (ev) => {
        if (!state.session || state.pendingRequest) return;
        canvas.setPointerCapture(ev.pointerId);
        const pt = eventToImageCoords(ev);
        if (state.tool === "bbox") {
            state.bboxDrag = { start: pt, end: pt };
        } else {
            state.currentPath = [pt];
        }
    });
    canvas.addEventListener("pointermove", (ev) => {
        if (state.bboxDrag) {
            state.bboxDrag.end = eventToImageCoords(ev);
            void redraw();
        } else if (state.currentPath.length > 0) {
            state.currentPath.push(eventToImageCoords(ev));
            void redraw();
        }
    });
    canvas.addEventListener("pointerup", () => {
        if (state.bboxDrag && state.session) {
            const { start, end } = state.bboxDrag;
            state.session.setBbox([
                Math.min(start[0], end[0]), Math.min(start[1], end[1]),
                Math.max(start[0], end[0]), Math.max(start[1], end[1]),
            ]);
            state.bboxDrag = null;
            setStatus("bounding box staged; it rides along with the next stroke");
            void redraw();
        } else if (state.currentPath.length > 0) {
            void finishStroke();
        }
    });

    el<HTMLButtonElement>("cut").addEventListener("click", () => void onCut());
    el<HTMLButtonElement>("undo").addEventListener("click", () => void onUndo());
    el<HTMLButtonElement>("reset").addEventListener("click", () => void onReset());
    el<HTMLButtonElement>("export").addEventListener("click", onExport);

    el<HTMLInputElement>("alpha").addEventListener("input", (ev) => {
        state.alpha = Number((ev.target as HTMLInputElement).value);
        void redraw();
    });
    el<HTMLInputElement>("radius").addEventListener("input", (ev) => {
        state.radius = Number((ev.target as HTMLInputElement).value);
    });
    el<HTMLSelectElement>("brush-class").addEventListener("change", (ev) => {
        state.brushClass = (ev.target as HTMLSelectElement).value as StrokeClass;
    });
    el<HTMLSelectElement>("tool").addEventListener("change", (ev) => {
        state.tool = (ev.target as HTMLSelectElement).value as Tool;
    });
    el<HTMLInputElement>("outlines").addEventListener("change", (ev) => {
        state.showOutlines = (ev.target as HTMLInputElement).checked;
        void redraw();
    });
}

if (typeof document !== "undefined" && document.getElementById("canvas")) {
    wireUp();
}
