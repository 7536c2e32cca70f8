/* tslint:disable */
/* eslint-disable */

/**
 * Decodes a reading order from a JSON pairwise score matrix and a JSON list
 * of `[x0, y0, x1, y1]` boxes. Returns the decoded order next to the purely
 * geometric one.
 */
export function decode_order(matrix_json: string, boxes_json: string): string;

/**
 * Validates OTSL text and renders it as an HTML table. `structure_only`
 * selects the token-only dialect.
 */
export function otsl_to_html(text: string, structure_only: boolean): string;

/**
 * Resize plans for a `width`×`height` crop under the S, M and L tiers.
 */
export function plan_tiers(width: number, height: number, merge_factor: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly decode_order: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly otsl_to_html: (a: number, b: number, c: number) => [number, number, number, number];
    readonly plan_tiers: (a: number, b: number, c: number) => [number, number, number, number];
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
