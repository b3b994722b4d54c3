/** Canvas renderer for the top-down scene view.
 *
 * Pure coordinate/color helpers are exported for tests; `render` itself
 * just draws the latest state — grid, blocked cells, labeled object
 * markers, pulsing beacon rings, and facing wedges for user and guide.
 */

import type { GridInfo, Vec3 } from "./protocol.js";
import type { ClientState } from "./state.js";
import { awaitingGrab, markers } from "./state.js";

export interface Camera {
  scale: number; // pixels per meter
  padX: number;
  padY: number;
  originX: number;
  originZ: number;
  heightPx: number;
}

/** Fit the walk grid into a canvas with uniform scale and padding. */
export function cameraFor(
  grid: GridInfo,
  widthPx: number,
  heightPx: number,
  pad = 24,
): Camera {
  const worldW = grid.width * grid.cell_size;
  const worldH = grid.height * grid.cell_size;
  const scale = Math.min((widthPx - 2 * pad) / worldW,
                         (heightPx - 2 * pad) / worldH);
  return {
    scale,
    padX: pad + (widthPx - 2 * pad - worldW * scale) / 2,
    padY: pad + (heightPx - 2 * pad - worldH * scale) / 2,
    originX: grid.origin[0],
    originZ: grid.origin[2],
    heightPx,
  };
}

/** World (x, z) → canvas pixels, +z pointing up the screen. */
export function worldToCanvas(
  cam: Camera,
  x: number,
  z: number,
): [number, number] {
  return [
    cam.padX + (x - cam.originX) * cam.scale,
    cam.heightPx - cam.padY - (z - cam.originZ) * cam.scale,
  ];
}

const NAMED_COLORS: Record<string, string> = {
  red: "#d64545",
  yellow: "#d4b106",
  blue: "#3b6fd4",
  green: "#3f9e4d",
  orange: "#e08a2e",
  purple: "#8a4fd0",
  brown: "#8a5a36",
  white: "#e8e8e8",
  black: "#2b2b2b",
  gray: "#888888",
  grey: "#888888",
};

/** Stable display color for a color tag; hashes unknown tags to a hue. */
export function colorForTag(tag: string): string {
  const named = NAMED_COLORS[tag.toLowerCase()];
  if (named !== undefined) {
    return named;
  }
  let hash = 0;
  for (const ch of tag) {
    hash = (hash * 31 + ch.codePointAt(0)!) >>> 0;
  }
  return `hsl(${hash % 360} 55% 45%)`;
}

function drawWedge(
  ctx: CanvasRenderingContext2D,
  cam: Camera,
  pos: Vec3,
  yaw: number,
  color: string,
  dashed: boolean,
): void {
  const [px, py] = worldToCanvas(cam, pos[0], pos[2]);
  const dirX = Math.sin(yaw);
  const dirY = -Math.cos(yaw); // +z is up the screen
  const size = 9;
  ctx.save();
  ctx.beginPath();
  ctx.moveTo(px + dirX * size * 1.4, py + dirY * size * 1.4);
  ctx.lineTo(px - dirY * size * 0.7 - dirX * size * 0.5,
             py + dirX * size * 0.7 + dirY * size * 0.5);
  ctx.lineTo(px + dirY * size * 0.7 - dirX * size * 0.5,
             py - dirX * size * 0.7 + dirY * size * 0.5);
  ctx.closePath();
  if (dashed) {
    ctx.setLineDash([3, 3]);
    ctx.strokeStyle = color;
    ctx.lineWidth = 2;
    ctx.stroke();
  } else {
    ctx.fillStyle = color;
    ctx.fill();
  }
  ctx.restore();
}

export function render(
  ctx: CanvasRenderingContext2D,
  state: ClientState,
  nowMs: number,
): void {
  const canvas = ctx.canvas;
  ctx.fillStyle = "#11131a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (state.scene === null) {
    ctx.fillStyle = "#9aa3b5";
    ctx.font = "14px system-ui, sans-serif";
    ctx.fillText("waiting for scene…", 16, 28);
    return;
  }
  const grid = state.scene.grid;
  const cam = cameraFor(grid, canvas.width, canvas.height);
  const cell = grid.cell_size * cam.scale;

  ctx.strokeStyle = "#232736";
  ctx.lineWidth = 1;
  for (let col = 0; col <= grid.width; col += 1) {
    const [px, pyTop] = worldToCanvas(
      cam, cam.originX + col * grid.cell_size,
      cam.originZ + grid.height * grid.cell_size);
    const [, pyBot] = worldToCanvas(cam, cam.originX, cam.originZ);
    ctx.beginPath();
    ctx.moveTo(px, pyTop);
    ctx.lineTo(px, pyBot);
    ctx.stroke();
  }
  for (let row = 0; row <= grid.height; row += 1) {
    const [pxLeft, py] = worldToCanvas(
      cam, cam.originX, cam.originZ + row * grid.cell_size);
    const [pxRight] = worldToCanvas(
      cam, cam.originX + grid.width * grid.cell_size, cam.originZ);
    ctx.beginPath();
    ctx.moveTo(pxLeft, py);
    ctx.lineTo(pxRight, py);
    ctx.stroke();
  }
  ctx.fillStyle = "#2e3347";
  for (const [col, row] of grid.blocked) {
    const [px, py] = worldToCanvas(
      cam, cam.originX + col * grid.cell_size,
      cam.originZ + (row + 1) * grid.cell_size);
    ctx.fillRect(px, py, cell, cell);
  }

  ctx.font = "12px system-ui, sans-serif";
  ctx.textAlign = "center";
  for (const marker of markers(state)) {
    const [px, py] = worldToCanvas(cam, marker.pos[0], marker.pos[2]);
    const radius = Math.max(4, marker.radius * cam.scale);
    if (marker.beacon) {
      const pulse = 4 + 3 * (1 + Math.sin(nowMs / 180));
      ctx.beginPath();
      ctx.arc(px, py, radius + pulse, 0, Math.PI * 2);
      ctx.strokeStyle = "#e8d44d";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(px, py, radius, 0, Math.PI * 2);
    ctx.fillStyle = colorForTag(marker.color);
    ctx.fill();
    ctx.fillStyle = "#cfd6e4";
    ctx.fillText(marker.label, px, py + radius + 14);
  }

  const snap = state.snapshot;
  if (snap !== null) {
    if (snap.guide.visible) {
      drawWedge(ctx, cam, snap.guide.pos, snap.guide.yaw, "#57d98a", false);
    } else {
      drawWedge(ctx, cam, snap.guide.pos, snap.guide.yaw, "#57d98a", true);
    }
    if (awaitingGrab(state)) {
      const [px, py] = worldToCanvas(cam, snap.guide.pos[0],
                                     snap.guide.pos[2]);
      ctx.fillStyle = "#e8d44d";
      ctx.fillText("grab me (G)", px, py - 16);
    }
    drawWedge(ctx, cam, snap.user.pos, snap.user.yaw, "#5aa7e8", false);
  }
  ctx.textAlign = "left";
}
