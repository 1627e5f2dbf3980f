import { describe, expect, it } from "vitest";
import { Ctx2D, DEFAULT_VIEW, renderFrame, toScreen } from "../src/render.js";
import { FrameMsg } from "../src/protocol.js";

/** Records draw calls instead of painting. */
class RecordingCtx implements Ctx2D {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 0;
  font = "";
  calls: string[] = [];
  clearRect(): void { this.calls.push("clearRect"); }
  fillRect(): void { this.calls.push("fillRect"); }
  beginPath(): void { this.calls.push("beginPath"); }
  moveTo(): void { this.calls.push("moveTo"); }
  lineTo(): void { this.calls.push("lineTo"); }
  stroke(): void { this.calls.push("stroke"); }
  arc(): void { this.calls.push("arc"); }
  fill(): void { this.calls.push("fill"); }
  save(): void { this.calls.push("save"); }
  restore(): void { this.calls.push("restore"); }
  translate(): void { this.calls.push("translate"); }
  rotate(): void { this.calls.push("rotate"); }
  fillText(text: string): void { this.calls.push(`fillText:${text}`); }
}

function frame(over: Partial<FrameMsg> = {}): FrameMsg {
  return {
    type: "frame",
    tick: 3,
    episode_id: 1,
    mode: "observe",
    rel_pose: [0.01, -0.02, 0.1],
    twist: [0, 0, 0],
    wrench: [0, 0, 0],
    ...over,
  };
}

describe("renderFrame", () => {
  it("zero wrench draws no force arrow", () => {
    const ctx = new RecordingCtx();
    const summary = renderFrame(ctx, frame());
    expect(summary.forceArrowDrawn).toBe(false);
  });

  it("a contact wrench draws the arrow", () => {
    const ctx = new RecordingCtx();
    const summary = renderFrame(ctx, frame({ wrench: [1.5, -4.0, 0] }));
    expect(summary.forceArrowDrawn).toBe(true);
    expect(ctx.calls.filter((c) => c === "arc")).toHaveLength(1);
  });

  it("success flash is drawn when requested", () => {
    const ctx = new RecordingCtx();
    const summary = renderFrame(ctx, frame(), DEFAULT_VIEW, true);
    expect(summary.rewardFlashDrawn).toBe(true);
    expect(ctx.calls).toContain("fillText:SUCCESS");
  });

  it("peg lands at the projected relative pose", () => {
    const ctx = new RecordingCtx();
    const summary = renderFrame(ctx, frame({ rel_pose: [0.02, -0.03, 0] }));
    const [ex, ey] = toScreen(DEFAULT_VIEW, 0.02, -0.03);
    expect(summary.pegScreenX).toBeCloseTo(ex, 9);
    expect(summary.pegScreenY).toBeCloseTo(ey, 9);
  });

  it("hidden pose (pure-vision modality) draws at the origin", () => {
    const ctx = new RecordingCtx();
    const summary = renderFrame(ctx, frame({ rel_pose: null }));
    const [ex, ey] = toScreen(DEFAULT_VIEW, 0, 0);
    expect(summary.pegScreenX).toBeCloseTo(ex, 9);
    expect(summary.pegScreenY).toBeCloseTo(ey, 9);
  });
});
