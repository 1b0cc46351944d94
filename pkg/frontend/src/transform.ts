/** Pixel <-> ground conversions for birdseye rasters.
 *
 * Mirrors the exporter's convention: pixel (0, 0) sits at the extent
 * origin (x_min, z_min) and one pixel step is meters_per_pixel on both
 * axes. Columns grow with ground x, rows with ground z.
 */

export interface GroundExtent {
  x_min: number;
  x_max: number;
  z_min: number;
  z_max: number;
}

export type GroundPoint = [number, number]; // (x, z) meters
export type PixelPoint = [number, number]; // (col, row) sub-pixel

export function rasterShape(
  extent: GroundExtent,
  metersPerPixel: number,
): { width: number; height: number } {
  if (metersPerPixel <= 0) {
    throw new Error(`meters_per_pixel must be positive, got ${metersPerPixel}`);
  }
  const width = Math.max(1, Math.round((extent.x_max - extent.x_min) / metersPerPixel));
  const height = Math.max(1, Math.round((extent.z_max - extent.z_min) / metersPerPixel));
  return { width, height };
}

export function pixelToGround(
  p: PixelPoint,
  extent: GroundExtent,
  metersPerPixel: number,
): GroundPoint {
  const x = extent.x_min + p[0] * metersPerPixel;
  const z = extent.z_min + p[1] * metersPerPixel;
  // raster edges can overshoot the extent by a rounding sliver; exported
  // points are promised to stay inside it
  return [
    Math.min(Math.max(x, extent.x_min), extent.x_max),
    Math.min(Math.max(z, extent.z_min), extent.z_max),
  ];
}

export function groundToPixel(
  g: GroundPoint,
  extent: GroundExtent,
  metersPerPixel: number,
): PixelPoint {
  return [
    (g[0] - extent.x_min) / metersPerPixel,
    (g[1] - extent.z_min) / metersPerPixel,
  ];
}
