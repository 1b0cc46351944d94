/** Browser client: canvas drawing over the birdseye image.
 *
 * Click to add vertices, double-click (or Enter) to commit the line,
 * Ctrl+Z / Ctrl+Y for undo/redo. Wheel zooms about the cursor, middle
 * drag pans. Clicks near an existing endpoint snap to it so lanes can
 * be chained. Everything stays client-side: the image and metadata are
 * opened from disk and the trajectory JSON is downloaded back out.
 */

import {
  addPoint,
  AnnotationSession,
  commitPolyline,
  exportTrajectoriesJSON,
  importTrajectories,
  loadSession,
  PointOutOfBounds,
  redo,
  restoreSession,
  saveSession,
  SessionMetadata,
  TooFewPoints,
  undo,
} from "./session.js";
import { PixelPoint } from "./transform.js";

const SNAP_RADIUS_PX = 8;

class AnnotatorApp {
  private canvas: HTMLCanvasElement;
  private status: HTMLElement;
  private image: HTMLImageElement | null = null;
  private session: AnnotationSession | null = null;
  private scale = 1;
  private panX = 0;
  private panY = 0;
  private panning: { startX: number; startY: number } | null = null;

  constructor(canvas: HTMLCanvasElement, status: HTMLElement) {
    this.canvas = canvas;
    this.status = status;
    canvas.addEventListener("click", (e) => this.onClick(e));
    canvas.addEventListener("dblclick", (e) => this.onCommit(e));
    canvas.addEventListener("wheel", (e) => this.onWheel(e), {
      passive: false,
    });
    canvas.addEventListener("mousedown", (e) => {
      if (e.button === 1) {
        this.panning = { startX: e.offsetX - this.panX, startY: e.offsetY - this.panY };
        e.preventDefault();
      }
    });
    canvas.addEventListener("mousemove", (e) => {
      if (this.panning) {
        this.panX = e.offsetX - this.panning.startX;
        this.panY = e.offsetY - this.panning.startY;
        this.draw();
      }
    });
    window.addEventListener("mouseup", () => (this.panning = null));
    window.addEventListener("keydown", (e) => this.onKey(e));
  }

  async open(imageFile: File, metadataFile: File): Promise<void> {
    const metadata = JSON.parse(await metadataFile.text()) as SessionMetadata;
    const image = new Image();
    image.src = URL.createObjectURL(imageFile);
    await image.decode();
    this.session = loadSession(
      { width: image.naturalWidth, height: image.naturalHeight },
      metadata,
    );
    this.image = image;
    this.scale = 4;
    this.panX = 0;
    this.panY = 0;
    this.say(`loaded ${metadata.rig_id} (${metadata.width}x${metadata.height})`);
    this.draw();
  }

  async openSessionFile(file: File): Promise<void> {
    if (!this.image) {
      this.say("open the birdseye image first");
      return;
    }
    this.session = restoreSession(
      { width: this.image.naturalWidth, height: this.image.naturalHeight },
      await file.text(),
    );
    this.say(`restored ${this.session.committed.length} polylines`);
    this.draw();
  }

  async openTrajectoryFile(file: File): Promise<void> {
    if (!this.session) return;
    importTrajectories(this.session, JSON.parse(await file.text()));
    this.say(`imported, now ${this.session.committed.length} polylines`);
    this.draw();
  }

  exportTrajectories(): void {
    if (!this.session) return;
    try {
      this.download(
        exportTrajectoriesJSON(this.session),
        `${this.session.metadata.rig_id}_trajectories.json`,
      );
    } catch (err) {
      this.say(String(err));
    }
  }

  saveSessionFile(): void {
    if (!this.session) return;
    this.download(
      saveSession(this.session),
      `${this.session.metadata.rig_id}_session.json`,
    );
  }

  private download(text: string, name: string): void {
    const a = document.createElement("a");
    a.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
    a.download = name;
    a.click();
  }

  private toPixel(e: MouseEvent): PixelPoint {
    return [
      (e.offsetX - this.panX) / this.scale,
      (e.offsetY - this.panY) / this.scale,
    ];
  }

  private snap(p: PixelPoint): PixelPoint {
    if (!this.session) return p;
    const radius = SNAP_RADIUS_PX / this.scale;
    let best: PixelPoint = p;
    let bestDist = radius;
    for (const line of this.session.committed) {
      for (const q of [line.points[0], line.points[line.points.length - 1]]) {
        const d = Math.hypot(q[0] - p[0], q[1] - p[1]);
        if (d < bestDist) {
          bestDist = d;
          best = q;
        }
      }
    }
    return best;
  }

  private onClick(e: MouseEvent): void {
    if (!this.session || e.detail > 1) return; // double-click handled below
    try {
      addPoint(this.session, this.snap(this.toPixel(e)));
      this.draw();
    } catch (err) {
      if (err instanceof PointOutOfBounds) this.say("outside the raster");
      else throw err;
    }
  }

  private onCommit(e: MouseEvent): void {
    if (!this.session) return;
    e.preventDefault();
    try {
      commitPolyline(this.session);
      this.say(`${this.session.committed.length} polylines committed`);
    } catch (err) {
      if (err instanceof TooFewPoints) this.say("need at least 2 points");
      else throw err;
    }
    this.draw();
  }

  private onWheel(e: WheelEvent): void {
    if (!this.session) return;
    e.preventDefault();
    const factor = e.deltaY < 0 ? 1.25 : 0.8;
    const next = Math.min(32, Math.max(0.5, this.scale * factor));
    // keep the point under the cursor fixed while zooming
    this.panX = e.offsetX - ((e.offsetX - this.panX) / this.scale) * next;
    this.panY = e.offsetY - ((e.offsetY - this.panY) / this.scale) * next;
    this.scale = next;
    this.draw();
  }

  private onKey(e: KeyboardEvent): void {
    if (!this.session) return;
    if (e.key === "Enter") {
      try {
        commitPolyline(this.session);
      } catch {
        /* too few points: ignore */
      }
      this.draw();
    } else if (e.ctrlKey && e.key.toLowerCase() === "z") {
      undo(this.session);
      this.draw();
    } else if (e.ctrlKey && e.key.toLowerCase() === "y") {
      redo(this.session);
      this.draw();
    }
  }

  private say(message: string): void {
    this.status.textContent = message;
  }

  private draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.image || !this.session) return;
    ctx.setTransform(1, 0, 0, 1, 0, 0);
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.setTransform(this.scale, 0, 0, this.scale, this.panX, this.panY);
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(this.image, 0, 0);

    ctx.lineWidth = 2 / this.scale;
    ctx.strokeStyle = "#18c37d";
    for (const line of this.session.committed) {
      this.strokePath(ctx, line.points);
    }
    ctx.strokeStyle = "#ffb020";
    this.strokePath(ctx, this.session.draft);
    ctx.fillStyle = "#ffb020";
    for (const p of this.session.draft) {
      ctx.beginPath();
      ctx.arc(p[0], p[1], 3 / this.scale, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  private strokePath(ctx: CanvasRenderingContext2D, pts: PixelPoint[]): void {
    if (pts.length < 2) return;
    ctx.beginPath();
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
    ctx.stroke();
  }
}

function fileInput(id: string): HTMLInputElement {
  return document.getElementById(id) as HTMLInputElement;
}

export function boot(): void {
  const canvas = document.getElementById("view") as HTMLCanvasElement;
  const status = document.getElementById("status") as HTMLElement;
  const app = new AnnotatorApp(canvas, status);

  fileInput("open-pair").addEventListener("change", (e) => {
    const files = Array.from((e.target as HTMLInputElement).files ?? []);
    const image = files.find((f) => f.name.endsWith(".png"));
    const meta = files.find((f) => f.name.endsWith(".json"));
    if (image && meta) void app.open(image, meta);
    else status.textContent = "select the birdseye .png and its .json together";
  });
  fileInput("open-session").addEventListener("change", (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (file) void app.openSessionFile(file);
  });
  fileInput("open-traj").addEventListener("change", (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (file) void app.openTrajectoryFile(file);
  });
  document.getElementById("export")!.addEventListener("click", () =>
    app.exportTrajectories(),
  );
  document.getElementById("save-session")!.addEventListener("click", () =>
    app.saveSessionFile(),
  );
}

if (typeof document !== "undefined") boot();
