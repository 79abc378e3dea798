/* tslint:disable */
/* eslint-disable */

/**
 * Myopic and perturbed-myopic prices on one shared shock path.
 */
export class EpisodePair {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly a: number;
    readonly b: number;
    readonly myopicRegret: Float64Array;
    readonly myopic: Float64Array;
    readonly oracle: Float64Array;
    readonly perturbedRegret: Float64Array;
    readonly perturbed: Float64Array;
    readonly quantile: number;
}

export function dkwTable(alpha: number, half_width: number, reps: number, seed: number): Float64Array;

export function pairedEpisode(seed: number, customers: number, horizon: number, rho: number): EpisodePair;

export function revenueCurve(c: number, a: number, b: number, q: number, points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_episodepair_free: (a: number, b: number) => void;
    readonly dkwTable: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly episodepair_a: (a: number) => number;
    readonly episodepair_b: (a: number) => number;
    readonly episodepair_myopic: (a: number) => [number, number];
    readonly episodepair_myopicRegret: (a: number) => [number, number];
    readonly episodepair_oracle: (a: number) => [number, number];
    readonly episodepair_perturbed: (a: number) => [number, number];
    readonly episodepair_perturbedRegret: (a: number) => [number, number];
    readonly episodepair_quantile: (a: number) => number;
    readonly pairedEpisode: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly revenueCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
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
