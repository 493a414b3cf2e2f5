/**
 * Render loop decoupled from the server tick.
 *
 * Frames draw as fast as the frame scheduler allows (requestAnimationFrame
 * in a browser, a short timer in headless tests) regardless of the 20 Hz
 * state stream, so the view stays smooth and the FPS counter measures the
 * UI, not the network.
 */

export type FrameScheduler = (cb: () => void) => void;

export class RenderLoop {
  frames = 0;
  private running = false;
  private windowStart = 0;
  private windowFrames = 0;
  private lastFps = 0;

  constructor(
    private readonly schedule: FrameScheduler,
    private readonly draw: () => void,
    private readonly now: () => number = () => Date.now(),
  ) {}

  start(): void {
    if (this.running) return;
    this.running = true;
    this.windowStart = this.now();
    this.windowFrames = 0;
    this.schedule(this.frame);
  }

  stop(): void {
    this.running = false;
  }

  /** Frames per second over the last completed one-second window. */
  fps(): number {
    return this.lastFps;
  }

  private frame = (): void => {
    if (!this.running) return;
    this.draw();
    this.frames += 1;
    this.windowFrames += 1;
    const t = this.now();
    if (t - this.windowStart >= 1000) {
      this.lastFps = (this.windowFrames * 1000) / (t - this.windowStart);
      this.windowStart = t;
      this.windowFrames = 0;
    }
    this.schedule(this.frame);
  };
}
