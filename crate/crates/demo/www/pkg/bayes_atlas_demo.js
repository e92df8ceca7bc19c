/* @ts-self-types="./bayes_atlas_demo.d.ts" */

export class AlphaDraws {
    static __wrap(ptr) {
        const obj = Object.create(AlphaDraws.prototype);
        obj.__wbg_ptr = ptr;
        AlphaDrawsFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        AlphaDrawsFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_alphadraws_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get accept_rate() {
        const ret = wasm.__wbg_get_alphadraws_accept_rate(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get mean() {
        const ret = wasm.__wbg_get_alphadraws_mean(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    get samples() {
        const ret = wasm.__wbg_get_alphadraws_samples(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get step_size() {
        const ret = wasm.__wbg_get_alphadraws_step_size(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} arg0
     */
    set accept_rate(arg0) {
        wasm.__wbg_set_alphadraws_accept_rate(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set mean(arg0) {
        wasm.__wbg_set_alphadraws_mean(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set samples(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_alphadraws_samples(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set step_size(arg0) {
        wasm.__wbg_set_alphadraws_step_size(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) AlphaDraws.prototype[Symbol.dispose] = AlphaDraws.prototype.free;

export class Deformed {
    static __wrap(ptr) {
        const obj = Object.create(Deformed.prototype);
        obj.__wbg_ptr = ptr;
        DeformedFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        DeformedFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_deformed_free(ptr, 0);
    }
    /**
     * Row-major `SIZE x SIZE` intensities.
     * @returns {Float64Array}
     */
    get image() {
        const ret = wasm.__wbg_get_deformed_image(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {number}
     */
    get max_displacement() {
        const ret = wasm.__wbg_get_deformed_max_displacement(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get min_jacobian() {
        const ret = wasm.__wbg_get_deformed_min_jacobian(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get size() {
        const ret = wasm.__wbg_get_deformed_size(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * @returns {Float64Array}
     */
    get template() {
        const ret = wasm.__wbg_get_deformed_template(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Row-major `SIZE x SIZE` intensities.
     * @param {Float64Array} arg0
     */
    set image(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_deformed_image(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {number} arg0
     */
    set max_displacement(arg0) {
        wasm.__wbg_set_deformed_max_displacement(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set min_jacobian(arg0) {
        wasm.__wbg_set_deformed_min_jacobian(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set size(arg0) {
        wasm.__wbg_set_deformed_size(this.__wbg_ptr, arg0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set template(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_deformed_template(this.__wbg_ptr, ptr0, len0);
    }
}
if (Symbol.dispose) Deformed.prototype[Symbol.dispose] = Deformed.prototype.free;

export class OperatorProfile {
    static __wrap(ptr) {
        const obj = Object.create(OperatorProfile.prototype);
        obj.__wbg_ptr = ptr;
        OperatorProfileFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        OperatorProfileFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_operatorprofile_free(ptr, 0);
    }
    /**
     * Integer frequencies `0..=EXTENT/2` along the first axis.
     * @returns {Float64Array}
     */
    get frequency() {
        const ret = wasm.__wbg_get_operatorprofile_frequency(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get k() {
        const ret = wasm.__wbg_get_operatorprofile_k(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get l() {
        const ret = wasm.__wbg_get_operatorprofile_l(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * Integer frequencies `0..=EXTENT/2` along the first axis.
     * @param {Float64Array} arg0
     */
    set frequency(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_operatorprofile_frequency(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set k(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_operatorprofile_k(this.__wbg_ptr, ptr0, len0);
    }
    /**
     * @param {Float64Array} arg0
     */
    set l(arg0) {
        const ptr0 = passArrayF64ToWasm0(arg0, wasm.__wbindgen_malloc);
        const len0 = WASM_VECTOR_LEN;
        wasm.__wbg_set_operatorprofile_l(this.__wbg_ptr, ptr0, len0);
    }
}
if (Symbol.dispose) OperatorProfile.prototype[Symbol.dispose] = OperatorProfile.prototype.free;

/**
 * The template pushed through the geodesic of a prior draw at `alpha`,
 * scaled by `magnitude`.
 * @param {number} alpha
 * @param {number} magnitude
 * @param {number} seed
 * @returns {Deformed}
 */
export function deform(alpha, magnitude, seed) {
    const ret = wasm.deform(alpha, magnitude, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Deformed.__wrap(ret[0]);
}

/**
 * `L(xi)` and `K(xi) = 1 / L(xi)` along the first frequency axis.
 * @param {number} alpha
 * @returns {OperatorProfile}
 */
export function operator_profile(alpha) {
    const ret = wasm.operator_profile(alpha);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return OperatorProfile.__wrap(ret[0]);
}

/**
 * HMC draws of `alpha` for a velocity drawn from the prior at
 * `alpha_true`, under a Gamma(k, beta) hyperprior. The chain starts at
 * the posterior mode; with an unscaled draw it should sit near
 * `alpha_true`.
 * @param {number} alpha_true
 * @param {number} k
 * @param {number} beta
 * @param {number} draws
 * @param {number} seed
 * @returns {AlphaDraws}
 */
export function sample_alpha(alpha_true, k, beta, draws, seed) {
    const ret = wasm.sample_alpha(alpha_true, k, beta, draws, seed);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return AlphaDraws.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg___wbindgen_throw_41e9ee4f547fc59a: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_generic_0000000000000001: function(arg0, arg1) {
            // Cast intrinsic for `Ref(String) -> Externref`.
            const ret = getStringFromWasm0(arg0, arg1);
            return ret;
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./bayes_atlas_demo_bg.js": import0,
    };
}

const AlphaDrawsFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_alphadraws_free(ptr, 1));
const DeformedFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_deformed_free(ptr, 1));
const OperatorProfileFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_operatorprofile_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function passArrayF64ToWasm0(arg, malloc) {
    const ptr = malloc(arg.length * 8, 8) >>> 0;
    getFloat64ArrayMemory0().set(arg, ptr / 8);
    WASM_VECTOR_LEN = arg.length;
    return ptr;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let WASM_VECTOR_LEN = 0;

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (!module.ok) {
            throw new Error(`failed to fetch Wasm: ${module.status} ${module.statusText} fetching '${module.url}'`);
        }

        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('bayes_atlas_demo_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
