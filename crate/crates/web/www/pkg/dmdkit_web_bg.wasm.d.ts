/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_membrane_free: (a: number, b: number) => void;
export const analyticFrequency: (a: number, b: number) => number;
export const analyticPixels: (a: number, b: number, c: number) => [number, number, number, number];
export const membrane_decompose: (a: number, b: number) => [number, number, number];
export const membrane_dt: (a: number) => number;
export const membrane_framePixels: (a: number, b: number) => [number, number, number, number];
export const membrane_frames: (a: number) => number;
export const membrane_grid: (a: number) => number;
export const membrane_groupFrequencies: (a: number) => [number, number];
export const membrane_groupMagnitudes: (a: number) => [number, number];
export const membrane_groupPixels: (a: number, b: number) => [number, number, number, number];
export const membrane_groupPowers: (a: number) => [number, number];
export const membrane_nearestAnalytic: (a: number) => [number, number];
export const membrane_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
