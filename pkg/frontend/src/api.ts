/**
 * Typed client for the segmentation session API.
 *
 * Wire format mirrors the server exactly: strokes travel as polylines in
 * (row, col) image coordinates plus a brush radius; the server rasterizes.
 * The client never rasterizes strokes for submission.
 */

export type StrokeClass = "fg" | "bg";

export interface Stroke {
    cls: StrokeClass;
    /** Polyline vertices as [row, col]; a single point stamps one disc. */
    points: [number, number][];
    radius: number;
}

export type BBox = [number, number, number, number]; // row0, col0, row1, col1 inclusive

export interface CreateSessionResponse {
    id: string;
    n_segments: number;
    width: number;
    height: number;
    revision: number;
    labels_png_b64: string;
}

export interface ScribbleResponse {
    revision: number;
    fg_pixels: number;
    bg_pixels: number;
}

export interface CutResponse {
    revision: number;
    mask_png_b64: string;
    overlay_png_b64: string;
    removed_edge: { u: number; v: number; weight: number };
    seconds: number;
}

export interface SegmentsResponse {
    n_segments: number;
    labels_png_b64: string;
}

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly detail: unknown,
    ) {
        super(`API error ${status}: ${JSON.stringify(detail)}`);
        this.name = "ApiError";
    }
}

async function parseDetail(response: Response): Promise<unknown> {
    try {
        const body = (await response.json()) as { detail?: unknown };
        return body.detail ?? body;
    } catch {
        return response.statusText;
    }
}

export function bytesToBase64(bytes: Uint8Array): string {
    let binary = "";
    const step = 0x8000;
    for (let i = 0; i < bytes.length; i += step) {
        binary += String.fromCharCode(...bytes.subarray(i, i + step));
    }
    return btoa(binary);
}

export function base64ToBytes(b64: string): Uint8Array {
    const binary = atob(b64);
    const out = new Uint8Array(binary.length);
    for (let i = 0; i < binary.length; i++) {
        out[i] = binary.charCodeAt(i);
    }
    return out;
}

export class SegmentationClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchImpl: typeof fetch = fetch,
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        if (!response.ok) {
            throw new ApiError(response.status, await parseDetail(response));
        }
        if (response.status === 204) {
            return undefined as T;
        }
        return (await response.json()) as T;
    }

    createSession(imagePngBytes: Uint8Array): Promise<CreateSessionResponse> {
        return this.request<CreateSessionResponse>("/sessions", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ image_b64: bytesToBase64(imagePngBytes) }),
        });
    }

    addScribbles(id: string, strokes: Stroke[], bbox?: BBox | null): Promise<ScribbleResponse> {
        const payload: { strokes: Stroke[]; bbox?: BBox } = { strokes };
        if (bbox) {
            payload.bbox = bbox;
        }
        return this.request<ScribbleResponse>(`/sessions/${id}/scribbles`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
        });
    }

    runCut(id: string): Promise<CutResponse> {
        return this.request<CutResponse>(`/sessions/${id}/cut`, { method: "POST" });
    }

    reset(id: string): Promise<{ revision: number }> {
        return this.request<{ revision: number }>(`/sessions/${id}/reset`, { method: "POST" });
    }

    deleteSession(id: string): Promise<void> {
        return this.request<void>(`/sessions/${id}`, { method: "DELETE" });
    }

    getSegments(id: string): Promise<SegmentsResponse> {
        return this.request<SegmentsResponse>(`/sessions/${id}/segments`);
    }
}
