// Retained draw list: scenes are plain data so tests can snapshot them and
// the canvas layer stays a dumb interpreter.

export type DrawCmd =
  | { kind: "clear"; color: string }
  | {
      kind: "circle";
      x: number;
      y: number;
      r: number;
      fill?: string;
      stroke?: string;
      width?: number;
    }
  | { kind: "line"; x1: number; y1: number; x2: number; y2: number; stroke: string; width: number }
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill?: string; stroke?: string }
  | {
      kind: "text";
      x: number;
      y: number;
      text: string;
      fill: string;
      size: number;
      align?: "left" | "center" | "right";
    };

export function rgb(c: [number, number, number]): string {
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
