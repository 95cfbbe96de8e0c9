/** Screen-space selection geometry: lasso polygons and drag rectangles. */

export interface Point2 {
  x: number;
  y: number;
}

/**
 * Ray-crossing point-in-polygon test. Points exactly on an edge count as
 * inside often enough for picking; the polygon is implicitly closed.
 */
export function pointInPolygon(p: Point2, polygon: Point2[]): boolean {
  if (polygon.length < 3) return false;
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const crosses = a.y > p.y !== b.y > p.y;
    if (crosses && p.x < ((b.x - a.x) * (p.y - a.y)) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

export function rectToPolygon(a: Point2, b: Point2): Point2[] {
  return [
    { x: Math.min(a.x, b.x), y: Math.min(a.y, b.y) },
    { x: Math.max(a.x, b.x), y: Math.min(a.y, b.y) },
    { x: Math.max(a.x, b.x), y: Math.max(a.y, b.y) },
    { x: Math.min(a.x, b.x), y: Math.max(a.y, b.y) },
  ];
}

/**
 * Display indices of the projected points falling inside the polygon.
 * screenXY holds per-point [x, y] screen coordinates, NaN for points
 * behind the camera (those never select).
 */
export function selectInPolygon(
  screenXY: Float32Array,
  count: number,
  polygon: Point2[],
): number[] {
  if (polygon.length < 3) return [];
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const v of polygon) {
    minX = Math.min(minX, v.x);
    maxX = Math.max(maxX, v.x);
    minY = Math.min(minY, v.y);
    maxY = Math.max(maxY, v.y);
  }
  const hits: number[] = [];
  const p: Point2 = { x: 0, y: 0 };
  for (let i = 0; i < count; i++) {
    const x = screenXY[2 * i];
    const y = screenXY[2 * i + 1];
    if (Number.isNaN(x) || x < minX || x > maxX || y < minY || y > maxY) continue;
    p.x = x;
    p.y = y;
    if (pointInPolygon(p, polygon)) hits.push(i);
  }
  return hits;
}

/** Total path length; short paths are treated as clicks, not lassos. */
export function pathLength(path: Point2[]): number {
  let total = 0;
  for (let i = 1; i < path.length; i++) {
    total += Math.hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  return total;
}
