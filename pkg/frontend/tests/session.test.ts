import { describe, expect, it } from "vitest";

import {
  addPoint,
  AnnotationSession,
  commitPolyline,
  EmptySession,
  exportTrajectories,
  exportTrajectoriesJSON,
  importTrajectories,
  loadSession,
  MetadataMismatch,
  PointOutOfBounds,
  redo,
  restoreSession,
  saveSession,
  SessionMetadata,
  TooFewPoints,
  undo,
} from "../src/session.js";

const META: SessionMetadata = {
  rig_id: "cam0",
  image: "cam0_birdseye.png",
  meters_per_pixel: 0.1,
  extent: { x_min: -20, x_max: 20, z_min: 4, z_max: 64 },
  height: 600,
  width: 400,
};
const IMAGE = { width: 400, height: 600 };

function fresh(): AnnotationSession {
  return loadSession(IMAGE, META);
}

function snapshot(session: AnnotationSession) {
  return JSON.stringify({ draft: session.draft, committed: session.committed });
}

describe("loadSession", () => {
  it("starts empty on a valid pair", () => {
    const s = fresh();
    expect(s.draft).toEqual([]);
    expect(s.committed).toEqual([]);
  });

  it("rejects image/metadata size disagreement", () => {
    expect(() => loadSession({ width: 400, height: 601 }, META)).toThrow(
      MetadataMismatch,
    );
  });

  it("rejects extent implying a different raster size", () => {
    const bad = { ...META, extent: { ...META.extent, x_max: 30 } };
    expect(() => loadSession({ width: 400, height: 600 }, bad)).toThrow(
      MetadataMismatch,
    );
  });
});

describe("drawing and undo", () => {
  it("rejects out-of-bounds points", () => {
    const s = fresh();
    expect(() => addPoint(s, [-1, 10])).toThrow(PointOutOfBounds);
    expect(() => addPoint(s, [10, 600.5])).toThrow(PointOutOfBounds);
    addPoint(s, [0, 0]);
    addPoint(s, [400, 600]); // inclusive far edge
    expect(s.draft.length).toBe(2);
  });

  it("refuses to commit a single point", () => {
    const s = fresh();
    addPoint(s, [5, 5]);
    expect(() => commitPolyline(s)).toThrow(TooFewPoints);
  });

  it("commit then undo restores the exact prior state", () => {
    const s = fresh();
    addPoint(s, [10, 20]);
    addPoint(s, [10, 120]);
    const before = snapshot(s);
    commitPolyline(s);
    expect(s.committed.length).toBe(1);
    expect(s.draft).toEqual([]);
    expect(undo(s)).toBe(true);
    expect(snapshot(s)).toBe(before);
  });

  it("redo is the inverse of undo", () => {
    const s = fresh();
    addPoint(s, [10, 20]);
    addPoint(s, [10, 120]);
    commitPolyline(s);
    const after = snapshot(s);
    undo(s);
    expect(redo(s)).toBe(true);
    expect(snapshot(s)).toBe(after);
    expect(redo(s)).toBe(false);
  });

  it("three commits and one undo leaves two", () => {
    const s = fresh();
    for (const col of [50, 150, 250]) {
      addPoint(s, [col, 30]);
      addPoint(s, [col, 500]);
      commitPolyline(s);
    }
    undo(s);
    expect(s.committed.length).toBe(2);
    expect(s.draft).toEqual([[250, 30], [250, 500]]);
  });

  it("undo on an empty stack is a no-op", () => {
    const s = fresh();
    expect(undo(s)).toBe(false);
  });
});

describe("export", () => {
  it("rejects an empty session", () => {
    expect(() => exportTrajectories(fresh())).toThrow(EmptySession);
  });

  it("anchors pixel (0,0) at the extent origin", () => {
    const s = fresh();
    addPoint(s, [0, 0]);
    addPoint(s, [100, 0]);
    commitPolyline(s);
    const out = exportTrajectories(s);
    expect(out.polylines[0][0]).toEqual([-20, 4]);
    expect(out.polylines[0][1][0]).toBeCloseTo(-10, 12);
  });

  it("keeps every exported point inside the extent", () => {
    const s = fresh();
    let seed = 42;
    const next = () => {
      // small LCG; the values just need to span the raster
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let line = 0; line < 20; line++) {
      for (let i = 0; i < 5; i++) addPoint(s, [next() * 400, next() * 600]);
      commitPolyline(s);
    }
    const { extent } = META;
    for (const line of exportTrajectories(s).polylines) {
      for (const [x, z] of line) {
        expect(x).toBeGreaterThanOrEqual(extent.x_min);
        expect(x).toBeLessThanOrEqual(extent.x_max);
        expect(z).toBeGreaterThanOrEqual(extent.z_min);
        expect(z).toBeLessThanOrEqual(extent.z_max);
      }
    }
  });

  it("export -> import -> export is byte-stable", () => {
    const s = fresh();
    addPoint(s, [12.34, 56.78]);
    addPoint(s, [300.1, 512.9]);
    addPoint(s, [399.5, 42.0]);
    commitPolyline(s);
    const first = exportTrajectoriesJSON(s);

    const imported = fresh();
    importTrajectories(imported, JSON.parse(first));
    expect(exportTrajectoriesJSON(imported)).toBe(first);
  });

  it("import rejects polylines outside the raster", () => {
    const s = fresh();
    expect(() =>
      importTrajectories(s, { polylines: [[[-25, 10], [-25, 30]]] }),
    ).toThrow(PointOutOfBounds);
    expect(() =>
      importTrajectories(s, { polylines: [[[0, 10]]] }),
    ).toThrow(TooFewPoints);
  });
});

describe("session files", () => {
  it("reload restores polylines identically", () => {
    const s = fresh();
    addPoint(s, [10, 20]);
    addPoint(s, [14.5, 220.25]);
    commitPolyline(s);
    importTrajectories(s, { polylines: [[[-5, 10], [5, 40]]] });
    addPoint(s, [33, 44]); // in-progress draft survives too
    const restored = restoreSession(IMAGE, saveSession(s));
    expect(snapshot(restored)).toBe(snapshot(s));
    // imported ground values still export verbatim after the reload
    expect(exportTrajectoriesJSON(restored)).toBe(exportTrajectoriesJSON(s));
  });

  it("stored sessions are validated on load", () => {
    const s = fresh();
    addPoint(s, [10, 20]);
    addPoint(s, [10, 120]);
    commitPolyline(s);
    const text = saveSession(s).replace("120", "1200");
    expect(() => restoreSession(IMAGE, text)).toThrow(PointOutOfBounds);
  });
});
