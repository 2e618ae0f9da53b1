// Robot avatar: a stylized front-facing humanoid (head, eye lamps, torso,
// two arms). The robot faces the operator, so its right hand is on the
// viewer's left. Each gesture has a distinct pose; eye lamps show the
// commanded RGB exactly.

import { DrawCmd, rgb } from "./draw";
import { Gesture } from "./protocol";

const BODY = "#8d99ae";
const OUTLINE = "#2b2d42";

export type AvatarBox = { x: number; y: number; size: number };

export function drawAvatar(
  gesture: Gesture,
  eyeRgb: [number, number, number],
  box: AvatarBox,
): DrawCmd[] {
  const s = box.size;
  const cx = box.x + s / 2;
  const headR = s * 0.16;
  const headShake = gesture === "HEAD_SHAKE";
  const headX = cx + (headShake ? s * 0.06 : 0);
  const headY = box.y + s * 0.22;
  const shoulderY = box.y + s * 0.42;
  const torsoW = s * 0.34;
  const armLen = s * 0.3;
  const cmds: DrawCmd[] = [];

  // torso and head
  cmds.push({
    kind: "rect",
    x: cx - torsoW / 2,
    y: shoulderY,
    w: torsoW,
    h: s * 0.36,
    fill: BODY,
    stroke: OUTLINE,
  });
  cmds.push({ kind: "circle", x: headX, y: headY, r: headR, fill: BODY, stroke: OUTLINE });

  // eye lamps carry the commanded color verbatim
  const eyeFill = rgb(eyeRgb);
  const eyeDx = headR * 0.45;
  cmds.push({ kind: "circle", x: headX - eyeDx, y: headY - headR * 0.1, r: headR * 0.22, fill: eyeFill });
  cmds.push({ kind: "circle", x: headX + eyeDx, y: headY - headR * 0.1, r: headR * 0.22, fill: eyeFill });

  // arms: raised = up at ~45 degrees, lowered = down along the torso;
  // the robot's RIGHT arm is on the viewer's LEFT
  const leftShoulder = { x: cx - torsoW / 2, y: shoulderY + s * 0.04 };
  const rightShoulder = { x: cx + torsoW / 2, y: shoulderY + s * 0.04 };
  const rightArmUp = gesture === "RIGHT_HAND" || gesture === "BOTH_HANDS";
  const leftArmUp = gesture === "LEFT_HAND" || gesture === "BOTH_HANDS";
  cmds.push(arm(leftShoulder, -1, rightArmUp, armLen));
  cmds.push(arm(rightShoulder, +1, leftArmUp, armLen));

  if (headShake) {
    // motion arcs beside the head
    cmds.push({
      kind: "line",
      x1: headX - headR * 1.7,
      y1: headY - headR * 0.5,
      x2: headX - headR * 1.2,
      y2: headY - headR * 0.9,
      stroke: OUTLINE,
      width: 2,
    });
    cmds.push({
      kind: "line",
      x1: headX + headR * 1.2,
      y1: headY - headR * 0.9,
      x2: headX + headR * 1.7,
      y2: headY - headR * 0.5,
      stroke: OUTLINE,
      width: 2,
    });
  }
  return cmds;
}

function arm(
  shoulder: { x: number; y: number },
  side: -1 | 1,
  raised: boolean,
  length: number,
): DrawCmd {
  const dx = side * length * 0.7;
  const dy = raised ? -length * 0.7 : length * 0.85;
  return {
    kind: "line",
    x1: shoulder.x,
    y1: shoulder.y,
    x2: shoulder.x + dx,
    y2: shoulder.y + dy,
    stroke: BODY,
    width: 6,
  };
}
