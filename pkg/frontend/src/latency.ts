// Pointer-move -> frame-paint latency, reported as a running median
// for the debug overlay. Samples pair the most recent pointer
// timestamp with the next paint; paints without a preceding move
// (e.g. the first frame of a trial) are ignored.
export class LatencyMeter {
  private samples: number[] = [];
  private lastPointer: number | null = null;

  constructor(private readonly window = 120) {}

  pointerMoved(t: number): void {
    this.lastPointer = t;
  }

  framePainted(t: number): void {
    if (this.lastPointer === null) return;
    this.samples.push(t - this.lastPointer);
    this.lastPointer = null;
    if (this.samples.length > this.window) this.samples.shift();
  }

  get count(): number {
    return this.samples.length;
  }

  median(): number | null {
    if (this.samples.length === 0) return null;
    const sorted = [...this.samples].sort((a, b) => a - b);
    const mid = Math.floor(sorted.length / 2);
    return sorted.length % 2
      ? sorted[mid]
      : (sorted[mid - 1] + sorted[mid]) / 2;
  }
}
