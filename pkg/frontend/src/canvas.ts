/** Canvas 2D implementation of the renderer's draw surface. */

import type { Surface } from "./renderer.js";
import type { Vec2 } from "./protocol.js";

export class CanvasSurface implements Surface {
  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  get width(): number {
    return this.ctx.canvas.width;
  }

  get height(): number {
    return this.ctx.canvas.height;
  }

  clear(color: string): void {
    this.ctx.fillStyle = color;
    this.ctx.fillRect(0, 0, this.width, this.height);
  }

  circle([x, y]: Vec2, radius: number, color: string, _tag: string): void {
    this.ctx.beginPath();
    this.ctx.arc(x, y, radius, 0, 2 * Math.PI);
    this.ctx.fillStyle = color;
    this.ctx.fill();
  }

  rect(x: number, y: number, w: number, h: number, color: string, _tag: string): void {
    this.ctx.fillStyle = color;
    this.ctx.fillRect(x, y, w, h);
  }

  polyline(points: Vec2[], color: string, _tag: string): void {
    if (points.length < 2) return;
    this.ctx.beginPath();
    this.ctx.moveTo(points[0][0], points[0][1]);
    for (const [x, y] of points.slice(1)) this.ctx.lineTo(x, y);
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = 1.5;
    this.ctx.stroke();
  }

  text(s: string, x: number, y: number, color: string, _tag: string): void {
    this.ctx.fillStyle = color;
    this.ctx.font = "14px system-ui, sans-serif";
    this.ctx.fillText(s, x, y);
  }
}
