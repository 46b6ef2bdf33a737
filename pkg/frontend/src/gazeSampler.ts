export type GazeEmit = (x: number, y: number) => void;
export type FrameScheduler = (flush: () => void) => void;

// Pointer-to-gaze funnel: however many pointermove events the browser
// delivers, at most one gaze message goes out per animation frame, and
// coordinates are clamped to the canvas so a pointer exiting the
// window never interrupts the stream with out-of-range values.
export class GazeSampler {
  private pending: [number, number] | null = null;
  private scheduled = false;

  constructor(
    private readonly size: number,
    private readonly emit: GazeEmit,
    private readonly schedule: FrameScheduler = (flush) =>
      requestAnimationFrame(flush),
  ) {}

  clamp(v: number): number {
    return Math.min(Math.max(v, 0), this.size - 1);
  }

  pointerMove(x: number, y: number): void {
    this.pending = [this.clamp(x), this.clamp(y)];
    if (this.scheduled) return;
    this.scheduled = true;
    this.schedule(() => this.flush());
  }

  private flush(): void {
    this.scheduled = false;
    if (this.pending === null) return;
    const [x, y] = this.pending;
    this.pending = null;
    this.emit(x, y);
  }
}
