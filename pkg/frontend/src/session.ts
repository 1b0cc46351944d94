/** Annotation session state and the trajectory export contract.
 *
 * The session tracks an in-progress polyline plus the committed ones,
 * all in pixel coordinates of the birdseye raster. Exports convert to
 * ground meters; polylines that came in from a trajectory file keep
 * their original ground values so export -> import -> export is
 * byte-stable regardless of float rounding in the pixel conversion.
 */

import {
  GroundExtent,
  GroundPoint,
  PixelPoint,
  groundToPixel,
  pixelToGround,
  rasterShape,
} from "./transform.js";

export class MetadataMismatch extends Error {}
export class TooFewPoints extends Error {}
export class EmptySession extends Error {}
export class PointOutOfBounds extends Error {}

export interface SessionMetadata {
  rig_id: string;
  image: string;
  meters_per_pixel: number;
  extent: GroundExtent;
  height: number;
  width: number;
}

export interface ImageInfo {
  width: number;
  height: number;
}

export interface Polyline {
  points: PixelPoint[];
  /** verbatim ground values when the polyline came from an import */
  ground?: GroundPoint[];
}

interface UndoEntry {
  kind: "commit";
  polyline: Polyline;
}

export interface AnnotationSession {
  metadata: SessionMetadata;
  draft: PixelPoint[];
  committed: Polyline[];
  undoStack: UndoEntry[];
  redoStack: UndoEntry[];
}

function checkMetadata(meta: SessionMetadata): void {
  const implied = rasterShape(meta.extent, meta.meters_per_pixel);
  if (implied.width !== meta.width || implied.height !== meta.height) {
    throw new MetadataMismatch(
      `extent ${JSON.stringify(meta.extent)} at ${meta.meters_per_pixel} m/px ` +
        `implies ${implied.width}x${implied.height}, metadata says ` +
        `${meta.width}x${meta.height}`,
    );
  }
}

export function loadSession(
  image: ImageInfo,
  metadata: SessionMetadata,
): AnnotationSession {
  if (image.width !== metadata.width || image.height !== metadata.height) {
    throw new MetadataMismatch(
      `image is ${image.width}x${image.height}, metadata declares ` +
        `${metadata.width}x${metadata.height}`,
    );
  }
  checkMetadata(metadata);
  return {
    metadata,
    draft: [],
    committed: [],
    undoStack: [],
    redoStack: [],
  };
}

function checkBounds(session: AnnotationSession, p: PixelPoint): void {
  const { width, height } = session.metadata;
  if (!(p[0] >= 0 && p[0] <= width && p[1] >= 0 && p[1] <= height)) {
    throw new PointOutOfBounds(
      `point (${p[0]}, ${p[1]}) outside ${width}x${height} raster`,
    );
  }
}

export function addPoint(session: AnnotationSession, p: PixelPoint): void {
  checkBounds(session, p);
  session.draft.push([p[0], p[1]]);
}

export function commitPolyline(session: AnnotationSession): void {
  if (session.draft.length < 2) {
    throw new TooFewPoints(
      `a trajectory needs at least 2 points, draft has ${session.draft.length}`,
    );
  }
  const polyline: Polyline = { points: session.draft };
  session.committed.push(polyline);
  session.draft = [];
  session.undoStack.push({ kind: "commit", polyline });
  session.redoStack = [];
}

/** Reverse exactly one commit, restoring its points as the draft. */
export function undo(session: AnnotationSession): boolean {
  const entry = session.undoStack.pop();
  if (!entry) return false;
  session.committed.pop();
  session.draft = entry.polyline.points;
  session.redoStack.push(entry);
  return true;
}

export function redo(session: AnnotationSession): boolean {
  const entry = session.redoStack.pop();
  if (!entry) return false;
  session.committed.push(entry.polyline);
  session.draft = [];
  session.undoStack.push(entry);
  return true;
}

export interface TrajectoryFile {
  polylines: GroundPoint[][];
}

export function exportTrajectories(session: AnnotationSession): TrajectoryFile {
  if (session.committed.length === 0) {
    throw new EmptySession("no committed polylines to export");
  }
  const { extent, meters_per_pixel } = session.metadata;
  return {
    polylines: session.committed.map(
      (line) =>
        line.ground ??
        line.points.map((p) => pixelToGround(p, extent, meters_per_pixel)),
    ),
  };
}

export function exportTrajectoriesJSON(session: AnnotationSession): string {
  return JSON.stringify(exportTrajectories(session), null, 2) + "\n";
}

/** Add a trajectory file's polylines as committed lines of this session. */
export function importTrajectories(
  session: AnnotationSession,
  file: TrajectoryFile,
): void {
  const { extent, meters_per_pixel } = session.metadata;
  for (const ground of file.polylines) {
    if (ground.length < 2) {
      throw new TooFewPoints(
        `imported polyline has ${ground.length} point(s)`,
      );
    }
    const points = ground.map((g) =>
      groundToPixel(g, extent, meters_per_pixel),
    );
    for (const p of points) checkBounds(session, p);
    session.committed.push({
      points,
      ground: ground.map((g) => [g[0], g[1]] as GroundPoint),
    });
  }
}

export interface SessionFile {
  metadata: SessionMetadata;
  draft: PixelPoint[];
  committed: Polyline[];
}

export function saveSession(session: AnnotationSession): string {
  const file: SessionFile = {
    metadata: session.metadata,
    draft: session.draft,
    committed: session.committed,
  };
  return JSON.stringify(file, null, 2) + "\n";
}

export function restoreSession(
  image: ImageInfo,
  text: string,
): AnnotationSession {
  const file = JSON.parse(text) as SessionFile;
  const session = loadSession(image, file.metadata);
  for (const p of file.draft) addPoint(session, p);
  for (const line of file.committed) {
    if (line.points.length < 2) {
      throw new TooFewPoints(
        `stored polyline has ${line.points.length} point(s)`,
      );
    }
    for (const p of line.points) checkBounds(session, p);
    session.committed.push(line);
  }
  return session;
}
