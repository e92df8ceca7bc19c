/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_alphadraws_free: (a: number, b: number) => void;
export const __wbg_deformed_free: (a: number, b: number) => void;
export const __wbg_get_alphadraws_accept_rate: (a: number) => number;
export const __wbg_get_alphadraws_mean: (a: number) => number;
export const __wbg_get_alphadraws_samples: (a: number) => [number, number];
export const __wbg_get_alphadraws_step_size: (a: number) => number;
export const __wbg_get_deformed_image: (a: number) => [number, number];
export const __wbg_get_deformed_max_displacement: (a: number) => number;
export const __wbg_get_deformed_min_jacobian: (a: number) => number;
export const __wbg_get_deformed_size: (a: number) => number;
export const __wbg_get_deformed_template: (a: number) => [number, number];
export const __wbg_get_operatorprofile_frequency: (a: number) => [number, number];
export const __wbg_get_operatorprofile_k: (a: number) => [number, number];
export const __wbg_get_operatorprofile_l: (a: number) => [number, number];
export const __wbg_operatorprofile_free: (a: number, b: number) => void;
export const __wbg_set_alphadraws_accept_rate: (a: number, b: number) => void;
export const __wbg_set_alphadraws_mean: (a: number, b: number) => void;
export const __wbg_set_alphadraws_samples: (a: number, b: number, c: number) => void;
export const __wbg_set_alphadraws_step_size: (a: number, b: number) => void;
export const __wbg_set_deformed_image: (a: number, b: number, c: number) => void;
export const __wbg_set_deformed_max_displacement: (a: number, b: number) => void;
export const __wbg_set_deformed_min_jacobian: (a: number, b: number) => void;
export const __wbg_set_deformed_size: (a: number, b: number) => void;
export const __wbg_set_deformed_template: (a: number, b: number, c: number) => void;
export const __wbg_set_operatorprofile_frequency: (a: number, b: number, c: number) => void;
export const __wbg_set_operatorprofile_k: (a: number, b: number, c: number) => void;
export const __wbg_set_operatorprofile_l: (a: number, b: number, c: number) => void;
export const deform: (a: number, b: number, c: number) => [number, number, number];
export const operator_profile: (a: number) => [number, number, number];
export const sample_alpha: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_start: () => void;
