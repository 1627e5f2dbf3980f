/**
 * Canvas scene painter: a side view of the workspace in the episode's reset
 * frame. The peg is drawn at the streamed relative pose, the contact wrench
 * as an arrow scaled by magnitude, and a banner flashes on success. Painting
 * is pure: everything comes from the frame message and the flash flag.
 */

import { FrameMsg } from "./protocol.js";

/** Structural subset of CanvasRenderingContext2D used here (stubable in tests). */
export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(rad: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface ViewConfig {
  width: number;
  height: number;
  metersAcross: number;   // world meters spanned by the canvas width
  resetHeight: number;    // nominal tip height above the board at reset
  pegWidth: number;
  pegLength: number;
  newtonsPerPixelArrow: number;
}

export const DEFAULT_VIEW: ViewConfig = {
  width: 480,
  height: 360,
  metersAcross: 0.24,
  resetHeight: 0.05,
  pegWidth: 0.01,
  pegLength: 0.03,
  newtonsPerPixelArrow: 0.25,
};

export interface DrawSummary {
  forceArrowDrawn: boolean;
  rewardFlashDrawn: boolean;
  pegScreenX: number;
  pegScreenY: number;
}

function scale(view: ViewConfig): number {
  return view.width / view.metersAcross;
}

/** Reset-frame coordinates -> screen pixels (origin centered, y up). */
export function toScreen(view: ViewConfig, x: number, y: number): [number, number] {
  const s = scale(view);
  return [view.width / 2 + x * s, view.height * 0.45 - y * s];
}

export function renderFrame(
  ctx: Ctx2D,
  frame: FrameMsg,
  view: ViewConfig = DEFAULT_VIEW,
  rewardFlash = false,
): DrawSummary {
  const s = scale(view);
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.fillStyle = "#10131a";
  ctx.fillRect(0, 0, view.width, view.height);

  // nominal board line (the surface sits resetHeight below the reset tip)
  const [, boardY] = toScreen(view, 0, -view.resetHeight);
  ctx.fillStyle = "#3a4152";
  ctx.fillRect(0, boardY, view.width, view.height - boardY);

  // reset-frame origin crosshair
  const [ox, oy] = toScreen(view, 0, 0);
  ctx.strokeStyle = "#5a647a";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(ox - 8, oy);
  ctx.lineTo(ox + 8, oy);
  ctx.moveTo(ox, oy - 8);
  ctx.lineTo(ox, oy + 8);
  ctx.stroke();

  const rel = frame.rel_pose ?? [0, 0, 0];
  const [px, py] = toScreen(view, rel[0], rel[1]);

  // the peg: TCP at the top-center of a rectangle, rotated by theta
  ctx.save();
  ctx.translate(px, py);
  ctx.rotate(-rel[2]);
  ctx.fillStyle = frame.mode === "correcting" ? "#e8a33d" : frame.mode === "demo" ? "#4db6ac" : "#c7d0e0";
  ctx.fillRect((-view.pegWidth / 2) * s, 0, view.pegWidth * s, view.pegLength * s);
  ctx.restore();

  // wrench arrow, scaled by force magnitude; zero wrench draws nothing
  const [fx, fy] = frame.wrench;
  const mag = Math.hypot(fx, fy);
  let forceArrowDrawn = false;
  if (mag > 1e-9) {
    forceArrowDrawn = true;
    const axPix = fx / view.newtonsPerPixelArrow;
    const ayPix = -fy / view.newtonsPerPixelArrow;
    ctx.strokeStyle = "#e5534b";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + axPix, py + ayPix);
    ctx.stroke();
    ctx.fillStyle = "#e5534b";
    ctx.beginPath();
    ctx.arc(px + axPix, py + ayPix, 3, 0, 2 * Math.PI);
    ctx.fill();
  }

  // HUD text
  ctx.fillStyle = "#9aa5b8";
  ctx.font = "12px monospace";
  ctx.fillText(`ep ${frame.episode_id}  tick ${frame.tick}  mode ${frame.mode}`, 8, 16);
  ctx.fillText(`|f| ${mag.toFixed(2)} N`, 8, 32);

  let rewardFlashDrawn = false;
  if (rewardFlash) {
    rewardFlashDrawn = true;
    ctx.fillStyle = "#2e7d32";
    ctx.fillRect(0, 0, view.width, 6);
    ctx.fillStyle = "#7bd88f";
    ctx.font = "16px monospace";
    ctx.fillText("SUCCESS", view.width / 2 - 34, 24);
  }

  return { forceArrowDrawn, rewardFlashDrawn, pegScreenX: px, pegScreenY: py };
}
