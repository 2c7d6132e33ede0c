import { describe, expect, it } from "vitest";

import { ApiError, SegmentationClient, Stroke } from "../src/api.js";
import { UiSession, isConflict } from "../src/session.js";

/** In-memory stand-in recording the call sequence the server would see. */
class FakeClient {
    calls: string[] = [];
    revision = 0;
    conflictOnPixel: [number, number] | null = null;

    createSession() {
        this.calls.push("create");
        return Promise.resolve({
            id: "s1", n_segments: 4, width: 40, height: 30, revision: 0,
            labels_png_b64: "",
        });
    }

    addScribbles(_id: string, strokes: Stroke[], bbox?: unknown) {
        const first = strokes[0]!.points[0]!;
        if (this.conflictOnPixel &&
            first[0] === this.conflictOnPixel[0] && first[1] === this.conflictOnPixel[1]) {
            return Promise.reject(new ApiError(409, { error: "scribble conflict", pixel: first }));
        }
        this.calls.push(`scribbles:${strokes[0]!.cls}@${first[0]},${first[1]}` + (bbox ? ":bbox" : ""));
        this.revision += 1;
        return Promise.resolve({ revision: this.revision, fg_pixels: 1, bg_pixels: 1 });
    }

    runCut(_id: string) {
        this.calls.push("cut");
        return Promise.resolve({
            revision: this.revision,
            mask_png_b64: "bWFzaw==",      // "mask"
            overlay_png_b64: "b3ZlcmxheQ==",
            removed_edge: { u: 0, v: 1, weight: 0.25 },
            seconds: 0.01,
        });
    }

    reset(_id: string) {
        this.calls.push("reset");
        this.revision += 1;
        return Promise.resolve({ revision: this.revision });
    }

    deleteSession(_id: string) {
        this.calls.push("delete");
        return Promise.resolve(undefined);
    }

    getSegments(_id: string) {
        return Promise.resolve({ n_segments: 4, labels_png_b64: "" });
    }
}

function fakePair(): [UiSession extends never ? never : Promise<UiSession>, FakeClient] {
    const fake = new FakeClient();
    return [UiSession.open(fake as unknown as SegmentationClient, new Uint8Array([1])), fake];
}

const FG: Stroke = { cls: "fg", points: [[1, 2]], radius: 2 };
const BG: Stroke = { cls: "bg", points: [[9, 9]], radius: 2 };

describe("UiSession", () => {
    it("logs strokes only after acknowledgement", async () => {
        const [open, fake] = fakePair();
        const session = await open;
        await session.addStroke(FG);
        expect(session.strokeLog.length).toBe(1);
        expect(session.revision).toBe(1);
        expect(fake.calls).toEqual(["create", "scribbles:fg@1,2"]);
    });

    it("keeps a conflicting stroke out of the log", async () => {
        const [open, fake] = fakePair();
        const session = await open;
        fake.conflictOnPixel = [9, 9];
        await session.addStroke(FG);
        await expect(session.addStroke(BG)).rejects.toSatisfy(isConflict);
        expect(session.strokeLog.length).toBe(1);
        expect(session.strokeLog[0]!.cls).toBe("fg");
    });

    it("undo resets and replays the remaining log", async () => {
        const [open, fake] = fakePair();
        const session = await open;
        await session.addStroke(FG);
        await session.addStroke(BG);
        fake.calls.length = 0;
        await session.undoLastStroke();
        expect(fake.calls).toEqual(["reset", "scribbles:fg@1,2"]);
        expect(session.strokeLog.length).toBe(1);
    });

    it("stages bbox with exactly the next stroke", async () => {
        const [open, fake] = fakePair();
        const session = await open;
        session.setBbox([0, 0, 29, 19]);
        await session.addStroke(FG);
        await session.addStroke(BG);
        expect(fake.calls).toEqual(["create", "scribbles:fg@1,2:bbox", "scribbles:bg@9,9"]);
        expect(session.pendingBbox).toBeNull();
    });

    it("replay reposts bbox with the stroke it rode along with", async () => {
        const [open, fake] = fakePair();
        const session = await open;
        session.setBbox([0, 0, 29, 19]);
        await session.addStroke(FG);
        await session.addStroke(BG);
        fake.calls.length = 0;
        await session.replayLog();
        expect(fake.calls).toEqual(["reset", "scribbles:fg@1,2:bbox", "scribbles:bg@9,9"]);
    });

    it("export returns the exact mask bytes from the last cut", async () => {
        const [open] = fakePair();
        const session = await open;
        await session.addStroke(FG);
        await session.runCut();
        expect([...session.exportMask()]).toEqual([...new TextEncoder().encode("mask")]);
    });

    it("export before any cut is an error", async () => {
        const [open] = fakePair();
        const session = await open;
        expect(() => session.exportMask()).toThrow(/no cut/);
    });
});
