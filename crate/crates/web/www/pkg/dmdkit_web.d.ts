/* tslint:disable */
/* eslint-disable */

export class Membrane {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs the decomposition and returns the number of mode groups.
     */
    decompose(stack: number): number;
    dt(): number;
    /**
     * Signed grey levels of snapshot `k`, row-major over the grid.
     */
    framePixels(k: number): Uint8Array;
    frames(): number;
    grid(): number;
    /**
     * Non-negative frequency of each group, strongest first.
     */
    groupFrequencies(): Float64Array;
    groupMagnitudes(): Float64Array;
    /**
     * `|mode|` grey levels of group `i`.
     */
    groupPixels(i: number): Uint8Array;
    groupPowers(): Float64Array;
    /**
     * Nearest analytic frequency for each group, 0 where none is within
     * 5%.
     */
    nearestAnalytic(): Float64Array;
    /**
     * Simulates a unit-speed membrane on a `grid`-point square from a
     * Gaussian bump at (`cx`, `cy`).
     */
    constructor(grid: number, gamma: number, cx: number, cy: number, samples: number, t_end: number);
}

export function analyticFrequency(m: number, n: number): number;

/**
 * `|sin(m pi x) sin(n pi y)|` grey levels on a `grid`-point square.
 */
export function analyticPixels(m: number, n: number, grid: number): Uint8Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_membrane_free: (a: number, b: number) => void;
    readonly analyticFrequency: (a: number, b: number) => number;
    readonly analyticPixels: (a: number, b: number, c: number) => [number, number, number, number];
    readonly membrane_decompose: (a: number, b: number) => [number, number, number];
    readonly membrane_dt: (a: number) => number;
    readonly membrane_framePixels: (a: number, b: number) => [number, number, number, number];
    readonly membrane_frames: (a: number) => number;
    readonly membrane_grid: (a: number) => number;
    readonly membrane_groupFrequencies: (a: number) => [number, number];
    readonly membrane_groupMagnitudes: (a: number) => [number, number];
    readonly membrane_groupPixels: (a: number, b: number) => [number, number, number, number];
    readonly membrane_groupPowers: (a: number) => [number, number];
    readonly membrane_nearestAnalytic: (a: number) => [number, number];
    readonly membrane_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
