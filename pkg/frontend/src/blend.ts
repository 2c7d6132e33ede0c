/**
 * Client-side overlay compositing for the alpha slider.
 *
 * Matches the server's convention exactly: foreground pixels verbatim,
 * background blended toward white as alpha*255 + (1-alpha)*v, rounded
 * half-up. The slider therefore previews alphas instantly without another
 * round trip, and alpha 0 shows the untouched image.
 */

export function blendChannel(value: number, alpha: number): number {
    return Math.floor(alpha * 255 + (1 - alpha) * value + 0.5);
}

/**
 * Composite in place: `rgba` is the image's RGBA buffer (e.g. ImageData
 * .data), `maskAlpha` holds the mask's decoded gray values (255 = fg) in
 * the same pixel order.
 */
export function compositeOverlay(
    rgba: Uint8ClampedArray,
    maskAlpha: Uint8ClampedArray | Uint8Array,
    alpha: number,
): void {
    if (rgba.length !== maskAlpha.length * 4) {
        throw new Error(`buffer mismatch: ${rgba.length} rgba bytes for ${maskAlpha.length} mask pixels`);
    }
    if (alpha < 0 || alpha > 1) {
        throw new Error(`alpha must be in [0, 1], got ${alpha}`);
    }
    for (let p = 0; p < maskAlpha.length; p++) {
        if (maskAlpha[p] === 0) {
            const o = p * 4;
            rgba[o] = blendChannel(rgba[o]!, alpha);
            rgba[o + 1] = blendChannel(rgba[o + 1]!, alpha);
            rgba[o + 2] = blendChannel(rgba[o + 2]!, alpha);
        }
    }
}
