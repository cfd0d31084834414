/**
 * Frame payload handling: base64 raw-RGB decode and nearest-neighbor
 * upscaling to an RGBA buffer suitable for a canvas ImageData surface.
 */

export class PixelError extends Error {}

function base64ToBytes(b64: string): Uint8Array {
  if (typeof atob === "function") {
    const bin = atob(b64);
    const out = new Uint8Array(bin.length);
    for (let i = 0; i < bin.length; i++) out[i] = bin.charCodeAt(i);
    return out;
  }
  // Node (tests)
  return new Uint8Array(Buffer.from(b64, "base64"));
}

export function bytesToBase64(bytes: Uint8Array): string {
  if (typeof btoa === "function") {
    let bin = "";
    for (let i = 0; i < bytes.length; i++) bin += String.fromCharCode(bytes[i]);
    return btoa(bin);
  }
  return Buffer.from(bytes).toString("base64");
}

/** Decode a frame's base64 payload into raw RGB bytes, checking the size. */
export function decodeFramePixels(
  b64: string,
  height: number,
  width: number,
): Uint8Array {
  const bytes = base64ToBytes(b64);
  const expected = height * width * 3;
  if (bytes.length !== expected) {
    throw new PixelError(
      `pixel payload is ${bytes.length} bytes, expected ${expected}`,
    );
  }
  return bytes;
}

/**
 * Nearest-neighbor upscale of an RGB raster by an integer factor, emitted
 * as an RGBA buffer (alpha 255) of shape [height*scale, width*scale].
 */
export function upscaleRgba(
  rgb: Uint8Array,
  height: number,
  width: number,
  scale: number,
): Uint8Array {
  if (!Number.isInteger(scale) || scale < 1) {
    throw new PixelError(`scale must be a positive integer, got ${scale}`);
  }
  if (rgb.length !== height * width * 3) {
    throw new PixelError("rgb buffer does not match height*width*3");
  }
  const oh = height * scale;
  const ow = width * scale;
  const out = new Uint8Array(oh * ow * 4);
  for (let y = 0; y < oh; y++) {
    const sy = Math.floor(y / scale);
    for (let x = 0; x < ow; x++) {
      const sx = Math.floor(x / scale);
      const si = (sy * width + sx) * 3;
      const di = (y * ow + x) * 4;
      out[di] = rgb[si];
      out[di + 1] = rgb[si + 1];
      out[di + 2] = rgb[si + 2];
      out[di + 3] = 255;
    }
  }
  return out;
}
