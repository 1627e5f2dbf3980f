/**
 * Device input -> velocity command mapping.
 *
 * Keyboard: arrows translate, Q/E rotate. Gamepad: left stick translates,
 * shoulder triggers rotate. Axes are normalized to [-1, 1], opposing keys
 * cancel, and the final command is scaled into the current action bounds so
 * it can never exceed what the server will accept.
 */

export type Vec3 = [number, number, number];

export interface InputMapping {
  bounds: Vec3; // per-axis velocity magnitudes (m/s, m/s, rad/s)
}

export const DEFAULT_MAPPING: InputMapping = { bounds: [0.05, 0.05, 0.3] };

export interface KeyboardState {
  pressed: Set<string>;
}

export function newKeyboardState(): KeyboardState {
  return { pressed: new Set() };
}

export function keyDown(state: KeyboardState, code: string): void {
  state.pressed.add(code);
}

export function keyUp(state: KeyboardState, code: string): void {
  state.pressed.delete(code);
}

/** Normalized axes from held keys; opposing keys cancel exactly. */
export function keyboardAxes(state: KeyboardState): Vec3 {
  const p = state.pressed;
  const axis = (neg: string, pos: string) => (p.has(pos) ? 1 : 0) - (p.has(neg) ? 1 : 0);
  return [axis("ArrowLeft", "ArrowRight"), axis("ArrowDown", "ArrowUp"), axis("KeyE", "KeyQ")];
}

export interface GamepadLike {
  axes: ReadonlyArray<number>;
  buttons: ReadonlyArray<{ value: number }>;
}

const STICK_DEADZONE = 0.1;

export function gamepadAxes(pad: GamepadLike): Vec3 {
  const dz = (v: number) => (Math.abs(v) < STICK_DEADZONE ? 0 : v);
  const x = dz(pad.axes[0] ?? 0);
  const y = dz(-(pad.axes[1] ?? 0)); // stick up = positive y
  const rot = (pad.buttons[6]?.value ?? 0) - (pad.buttons[7]?.value ?? 0);
  return [clamp(x, -1, 1), clamp(y, -1, 1), clamp(rot, -1, 1)];
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, v));
}

/** Scale normalized axes into the action bounds, clamping defensively. */
export function axesToAction(axes: Vec3, mapping: InputMapping): Vec3 {
  return [0, 1, 2].map((i) => {
    const b = Math.abs(mapping.bounds[i]);
    return clamp(axes[i], -1, 1) * b;
  }) as Vec3;
}

export function combineAxes(a: Vec3, b: Vec3): Vec3 {
  return [0, 1, 2].map((i) => clamp(a[i] + b[i], -1, 1)) as Vec3;
}
