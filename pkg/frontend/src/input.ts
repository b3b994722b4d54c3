/** Keyboard → command mapping. Pure: the page feeds in the relevant
 * state, this decides the command (or null for keys we don't own).
 *
 * WASD / vertical arrows move, horizontal arrows turn, G toggles
 * grab/release. Movement distances are per keypress; the engine clamps
 * illegal steps and ignores movement while grabbed.
 */

import type { ClientCommand } from "./protocol.js";

export const MOVE_STEP = 0.2; // meters per keypress
export const TURN_STEP = Math.PI / 8; // radians per keypress

export interface InputContext {
  grabbed: boolean;
  pending: boolean;
}

export function commandForKey(
  key: string,
  ctx: InputContext,
): ClientCommand | null {
  switch (key.length === 1 ? key.toLowerCase() : key) {
    case "w":
    case "ArrowUp":
      return { kind: "move", forward: MOVE_STEP, strafe: 0 };
    case "s":
    case "ArrowDown":
      return { kind: "move", forward: -MOVE_STEP, strafe: 0 };
    case "a":
      return { kind: "move", forward: 0, strafe: -MOVE_STEP };
    case "d":
      return { kind: "move", forward: 0, strafe: MOVE_STEP };
    case "ArrowLeft":
      return { kind: "turn_by", radians: -TURN_STEP };
    case "ArrowRight":
      return { kind: "turn_by", radians: TURN_STEP };
    case "g":
      return ctx.grabbed ? { kind: "release" } : { kind: "grab" };
    default:
      return null;
  }
}

/** Build a query command from chat input; null when blank or mid-query. */
export function queryCommand(
  text: string,
  ctx: InputContext,
): ClientCommand | null {
  const trimmed = text.trim();
  if (trimmed === "" || ctx.pending) {
    return null;
  }
  return { kind: "query", text: trimmed };
}

export function personaCommand(persona: string): ClientCommand {
  return { kind: "switch_persona", persona };
}
