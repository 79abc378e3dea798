/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_episodepair_free: (a: number, b: number) => void;
export const dkwTable: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const episodepair_a: (a: number) => number;
export const episodepair_b: (a: number) => number;
export const episodepair_myopic: (a: number) => [number, number];
export const episodepair_myopicRegret: (a: number) => [number, number];
export const episodepair_oracle: (a: number) => [number, number];
export const episodepair_perturbed: (a: number) => [number, number];
export const episodepair_perturbedRegret: (a: number) => [number, number];
export const episodepair_quantile: (a: number) => number;
export const pairedEpisode: (a: number, b: number, c: number, d: number) => [number, number, number];
export const revenueCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
