/* tslint:disable */
/* eslint-disable */

export function carCurve(preset: string, noise: string, pl_scale: number, gate_ns: number, powers: Float64Array): Float64Array;

export function equalCar(preset: string, noise: string, pl_scale: number, reference_power: number): number;

export function noiseCurves(preset: string, powers: Float64Array): Float64Array;

export function powers(p_min: number, p_max: number, points: number): Float64Array;

export function reductions(from_nm: number, to_nm: number, x_from: number, x_to: number): Float64Array;

export function resonanceCurve(lambdas_nm: Float64Array): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly carCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly equalCar: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly noiseCurves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly powers: (a: number, b: number, c: number) => [number, number, number, number];
    readonly reductions: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly resonanceCurve: (a: number, b: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
