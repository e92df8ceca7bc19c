/* tslint:disable */
/* eslint-disable */

export class AlphaDraws {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    accept_rate: number;
    mean: number;
    samples: Float64Array;
    step_size: number;
}

export class Deformed {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Row-major `SIZE x SIZE` intensities.
     */
    image: Float64Array;
    max_displacement: number;
    min_jacobian: number;
    size: number;
    template: Float64Array;
}

export class OperatorProfile {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Integer frequencies `0..=EXTENT/2` along the first axis.
     */
    frequency: Float64Array;
    k: Float64Array;
    l: Float64Array;
}

/**
 * The template pushed through the geodesic of a prior draw at `alpha`,
 * scaled by `magnitude`.
 */
export function deform(alpha: number, magnitude: number, seed: number): Deformed;

/**
 * `L(xi)` and `K(xi) = 1 / L(xi)` along the first frequency axis.
 */
export function operator_profile(alpha: number): OperatorProfile;

/**
 * HMC draws of `alpha` for a velocity drawn from the prior at
 * `alpha_true`, under a Gamma(k, beta) hyperprior. The chain starts at
 * the posterior mode; with an unscaled draw it should sit near
 * `alpha_true`.
 */
export function sample_alpha(alpha_true: number, k: number, beta: number, draws: number, seed: number): AlphaDraws;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_alphadraws_free: (a: number, b: number) => void;
    readonly __wbg_deformed_free: (a: number, b: number) => void;
    readonly __wbg_get_alphadraws_accept_rate: (a: number) => number;
    readonly __wbg_get_alphadraws_mean: (a: number) => number;
    readonly __wbg_get_alphadraws_samples: (a: number) => [number, number];
    readonly __wbg_get_alphadraws_step_size: (a: number) => number;
    readonly __wbg_get_deformed_image: (a: number) => [number, number];
    readonly __wbg_get_deformed_max_displacement: (a: number) => number;
    readonly __wbg_get_deformed_min_jacobian: (a: number) => number;
    readonly __wbg_get_deformed_size: (a: number) => number;
    readonly __wbg_get_deformed_template: (a: number) => [number, number];
    readonly __wbg_get_operatorprofile_frequency: (a: number) => [number, number];
    readonly __wbg_get_operatorprofile_k: (a: number) => [number, number];
    readonly __wbg_get_operatorprofile_l: (a: number) => [number, number];
    readonly __wbg_operatorprofile_free: (a: number, b: number) => void;
    readonly __wbg_set_alphadraws_accept_rate: (a: number, b: number) => void;
    readonly __wbg_set_alphadraws_mean: (a: number, b: number) => void;
    readonly __wbg_set_alphadraws_samples: (a: number, b: number, c: number) => void;
    readonly __wbg_set_alphadraws_step_size: (a: number, b: number) => void;
    readonly __wbg_set_deformed_image: (a: number, b: number, c: number) => void;
    readonly __wbg_set_deformed_max_displacement: (a: number, b: number) => void;
    readonly __wbg_set_deformed_min_jacobian: (a: number, b: number) => void;
    readonly __wbg_set_deformed_size: (a: number, b: number) => void;
    readonly __wbg_set_deformed_template: (a: number, b: number, c: number) => void;
    readonly __wbg_set_operatorprofile_frequency: (a: number, b: number, c: number) => void;
    readonly __wbg_set_operatorprofile_k: (a: number, b: number, c: number) => void;
    readonly __wbg_set_operatorprofile_l: (a: number, b: number, c: number) => void;
    readonly deform: (a: number, b: number, c: number) => [number, number, number];
    readonly operator_profile: (a: number) => [number, number, number];
    readonly sample_alpha: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
