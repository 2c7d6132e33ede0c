/**
 * UI-side session state: the stroke log is the single source of truth.
 *
 * Strokes are appended only after the server acknowledges them, so a 409
 * conflict never pollutes the log. Undo rebuilds the server session by
 * resetting it and replaying the remaining log, which keeps the server API
 * minimal and makes "replay the log" reproduce the displayed result
 * byte-exactly.
 */

import {
    ApiError,
    BBox,
    CutResponse,
    SegmentationClient,
    Stroke,
    base64ToBytes,
} from "./api.js";

export interface LoggedStroke extends Stroke {
    ordinal: number;
    /** bbox that rode along with this stroke's batch, if any */
    bbox: BBox | null;
}

export interface CutArtifacts {
    maskPng: Uint8Array;
    overlayPng: Uint8Array;
    removedEdgeWeight: number;
    seconds: number;
    revision: number;
}

export class UiSession {
    readonly strokeLog: LoggedStroke[] = [];
    revision: number;
    lastCut: CutArtifacts | null = null;
    /** bbox staged to be sent with the next stroke batch */
    pendingBbox: BBox | null = null;

    private constructor(
        private readonly client: SegmentationClient,
        readonly id: string,
        readonly width: number,
        readonly height: number,
        readonly nSegments: number,
        readonly labelsPngB64: string,
        revision: number,
    ) {
        this.revision = revision;
    }

    static async open(client: SegmentationClient, imagePngBytes: Uint8Array): Promise<UiSession> {
        const created = await client.createSession(imagePngBytes);
        return new UiSession(
            client, created.id, created.width, created.height,
            created.n_segments, created.labels_png_b64, created.revision,
        );
    }

    setBbox(bbox: BBox | null): void {
        this.pendingBbox = bbox;
    }

    /**
     * Send one stroke (with any staged bbox). On success it joins the log;
     * on a 409 conflict nothing is logged and the error is rethrown for the
     * UI to surface.
     */
    async addStroke(stroke: Stroke): Promise<number> {
        const bbox = this.pendingBbox;
        const ack = await this.client.addScribbles(this.id, [stroke], bbox);
        this.strokeLog.push({ ...stroke, ordinal: this.strokeLog.length, bbox });
        this.pendingBbox = null;
        this.revision = ack.revision;
        return ack.revision;
    }

    /** Drop the last stroke: reset the server session and replay the rest. */
    async undoLastStroke(): Promise<void> {
        if (this.strokeLog.length === 0) {
            return;
        }
        this.strokeLog.pop();
        await this.replayLog();
    }

    /** Reset the server session and re-post the entire stroke log in order. */
    async replayLog(): Promise<void> {
        const reset = await this.client.reset(this.id);
        this.revision = reset.revision;
        this.lastCut = null;
        for (const logged of this.strokeLog) {
            const { ordinal: _ordinal, bbox, ...stroke } = logged;
            const ack = await this.client.addScribbles(this.id, [stroke], bbox);
            this.revision = ack.revision;
        }
    }

    async runCut(): Promise<CutArtifacts> {
        const cut: CutResponse = await this.client.runCut(this.id);
        this.revision = cut.revision;
        this.lastCut = {
            maskPng: base64ToBytes(cut.mask_png_b64),
            overlayPng: base64ToBytes(cut.overlay_png_b64),
            removedEdgeWeight: cut.removed_edge.weight,
            seconds: cut.seconds,
            revision: cut.revision,
        };
        return this.lastCut;
    }

    /** Mask bytes exactly as the server produced them. */
    exportMask(): Uint8Array {
        if (!this.lastCut) {
            throw new Error("no cut to export; run a cut first");
        }
        return this.lastCut.maskPng;
    }

    async close(): Promise<void> {
        await this.client.deleteSession(this.id);
    }
}

/** True when the error is the scribble-conflict response. */
export function isConflict(error: unknown): error is ApiError {
    return error instanceof ApiError && error.status === 409;
}

/** True when the cut was refused for missing seeds on one side. */
export function isMissingSeeds(error: unknown): error is ApiError {
    return error instanceof ApiError && error.status === 422;
}
