// Dumb interpreter of the retained draw list onto a 2D canvas context.

import { DrawCmd } from "./draw";

export function paint(ctx: CanvasRenderingContext2D, cmds: DrawCmd[]): void {
  for (const cmd of cmds) {
    switch (cmd.kind) {
      case "clear":
        ctx.fillStyle = cmd.color;
        ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
        break;
      case "rect":
        if (cmd.fill) {
          ctx.fillStyle = cmd.fill;
          ctx.fillRect(cmd.x, cmd.y, cmd.w, cmd.h);
        }
        if (cmd.stroke) {
          ctx.strokeStyle = cmd.stroke;
          ctx.strokeRect(cmd.x, cmd.y, cmd.w, cmd.h);
        }
        break;
      case "circle":
        ctx.beginPath();
        ctx.arc(cmd.x, cmd.y, cmd.r, 0, Math.PI * 2);
        if (cmd.fill) {
          ctx.fillStyle = cmd.fill;
          ctx.fill();
        }
        if (cmd.stroke) {
          ctx.strokeStyle = cmd.stroke;
          ctx.lineWidth = cmd.width ?? 2;
          ctx.stroke();
        }
        break;
      case "line":
        ctx.beginPath();
        ctx.moveTo(cmd.x1, cmd.y1);
        ctx.lineTo(cmd.x2, cmd.y2);
        ctx.strokeStyle = cmd.stroke;
        ctx.lineWidth = cmd.width;
        ctx.stroke();
        break;
      case "text":
        ctx.fillStyle = cmd.fill;
        ctx.font = `${cmd.size}px system-ui, sans-serif`;
        ctx.textAlign = cmd.align ?? "left";
        ctx.fillText(cmd.text, cmd.x, cmd.y);
        break;
    }
  }
}
