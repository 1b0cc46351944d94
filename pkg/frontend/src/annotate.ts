/** Headless driver: apply scripted strokes to a birdseye session.
 *
 *   node dist/annotate.js --metadata rig_birdseye.json \
 *     --strokes strokes.json --out trajectories.json
 *
 * The strokes file holds pixel-space polylines in the same shape as the
 * trajectory export ({"polylines": [[[px, py], ...], ...]}). This is
 * the scriptable path the integration tests use; interactive drawing
 * lives in the browser client.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { dirname, isAbsolute, join } from "node:path";

import {
  addPoint,
  commitPolyline,
  exportTrajectoriesJSON,
  loadSession,
  SessionMetadata,
} from "./session.js";
import { PixelPoint } from "./transform.js";

function pngDimensions(path: string): { width: number; height: number } {
  const buf = readFileSync(path);
  if (
    buf.length < 24 ||
    buf.readUInt32BE(0) !== 0x89504e47 ||
    buf.toString("latin1", 12, 16) !== "IHDR"
  ) {
    throw new Error(`${path} is not a PNG file`);
  }
  return { width: buf.readUInt32BE(16), height: buf.readUInt32BE(20) };
}

function parseArgs(argv: string[]): Map<string, string> {
  const args = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag.startsWith("--") || value === undefined) {
      throw new Error(`malformed arguments near '${flag}'`);
    }
    args.set(flag.slice(2), value);
  }
  for (const required of ["metadata", "strokes", "out"]) {
    if (!args.has(required)) throw new Error(`missing --${required}`);
  }
  return args;
}

export function run(argv: string[]): void {
  const args = parseArgs(argv);
  const metadataPath = args.get("metadata")!;
  const metadata = JSON.parse(
    readFileSync(metadataPath, "utf8"),
  ) as SessionMetadata;
  const imagePath = isAbsolute(metadata.image)
    ? metadata.image
    : join(dirname(metadataPath), metadata.image);
  const session = loadSession(pngDimensions(imagePath), metadata);

  const strokes = JSON.parse(readFileSync(args.get("strokes")!, "utf8")) as {
    polylines: PixelPoint[][];
  };
  for (const stroke of strokes.polylines) {
    for (const p of stroke) addPoint(session, p);
    commitPolyline(session);
  }
  writeFileSync(args.get("out")!, exportTrajectoriesJSON(session));
  console.log(
    `committed ${session.committed.length} polylines for ${metadata.rig_id}`,
  );
}

try {
  run(process.argv.slice(2));
} catch (err) {
  console.error(`annotate: error: ${err instanceof Error ? err.message : err}`);
  process.exit(2);
}
