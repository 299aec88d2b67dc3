/* tslint:disable */
/* eslint-disable */

/**
 * `(α, λ_α, u_α(0))` for log-spaced `α` in `[alpha_min, alpha_max]`.
 */
export function bifurcation_curve(n: number, alpha_min: number, alpha_max: number, points: number): string;

/**
 * Exterior solution `u(x)` on `|x| ≥ 1` for `N`, `α`, `λ`.
 */
export function exterior_solution(n: number, alpha: number, lambda: number): string;

/**
 * The heteroclinic orbit `(v₁, v₂)(s)` and its box-bound report.
 */
export function phase_orbit(n: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bifurcation_curve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly exterior_solution: (a: number, b: number, c: number) => [number, number, number, number];
    readonly phase_orbit: (a: number) => [number, number, number, number];
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
