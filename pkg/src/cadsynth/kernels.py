"""Numba ray-tracing kernels.

Exactness contract: the nearest-hit logic here (ray generation, the
Möller–Trumbore test, the t/index tie rule) is mirrored expression-for-
expression by the brute-force numpy oracle in the test suite. Both sides
multiply by the reciprocal determinant, group additions left-to-right, and
accept boundary barycentrics (u ∈ [0,1], v ≥ 0, u+v ≤ 1), so nearest-hit
results agree bit-for-bit. Keep any edit to the intersection math in sync
with the oracle. numba's default fastmath=False is load-bearing: it keeps
LLVM from contracting mul+add into FMA, which would change rounding.

All kernels take a [y0, y1) row range and write only those rows, so a
parallel render (rows split across threads) runs the identical scalar code
path as a serial one and produces identical bytes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DET_EPS = 1e-12
T_MIN = 1e-9
SHADOW_BIAS = 1e-4
STACK_DEPTH = 128

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z = z + _U64_GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _hash01(a, b):
    return float(_mix64(np.uint64(a) * np.uint64(0x100000001B3) + np.uint64(b)) >> np.uint64(11)) * _INV_2_53


@njit(cache=True, nogil=True)
def _nearest_hit(ox, oy, oz, dx, dy, dz,
                 v0, v1, v2,
                 node_mins, node_maxs, node_right, node_start, node_count, prim_index,
                 stack):
    """Nearest triangle along the ray; ties in t go to the lowest triangle
    index, making the result independent of traversal order. Returns
    (t, triangle index or -1, bary u, bary v)."""
    best_t = np.inf
    best_idx = -1
    best_u = 0.0
    best_v = 0.0
    sp = 0
    stack[sp] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]

        # slab test against the padded node box; NaNs fall through as "hit"
        tmin = 0.0
        tmax = best_t
        ok = True
        b0 = node_mins[node, 0]
        b1 = node_maxs[node, 0]
        if dx != 0.0:
            inv = 1.0 / dx
            t0 = (b0 - ox) * inv
            t1 = (b1 - ox) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
        elif ox < b0 or ox > b1:
            ok = False
        if ok:
            b0 = node_mins[node, 1]
            b1 = node_maxs[node, 1]
            if dy != 0.0:
                inv = 1.0 / dy
                t0 = (b0 - oy) * inv
                t1 = (b1 - oy) * inv
                if t0 > t1:
                    t0, t1 = t1, t0
                if t0 > tmin:
                    tmin = t0
                if t1 < tmax:
                    tmax = t1
            elif oy < b0 or oy > b1:
                ok = False
        if ok:
            b0 = node_mins[node, 2]
            b1 = node_maxs[node, 2]
            if dz != 0.0:
                inv = 1.0 / dz
                t0 = (b0 - oz) * inv
                t1 = (b1 - oz) * inv
                if t0 > t1:
                    t0, t1 = t1, t0
                if t0 > tmin:
                    tmin = t0
                if t1 < tmax:
                    tmax = t1
            elif oz < b0 or oz > b1:
                ok = False
        if not ok or tmin > tmax:
            continue

        right = node_right[node]
        if right >= 0:
            stack[sp] = right
            sp += 1
            stack[sp] = node + 1
            sp += 1
            continue

        start = node_start[node]
        for k in range(start, start + node_count[node]):
            tri = prim_index[k]
            v0x = v0[tri, 0]
            v0y = v0[tri, 1]
            v0z = v0[tri, 2]
            e1x = v1[tri, 0] - v0x
            e1y = v1[tri, 1] - v0y
            e1z = v1[tri, 2] - v0z
            e2x = v2[tri, 0] - v0x
            e2y = v2[tri, 1] - v0y
            e2z = v2[tri, 2] - v0z
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if abs(det) < DET_EPS:
                continue
            inv_det = 1.0 / det
            tx = ox - v0x
            ty = oy - v0y
            tz = oz - v0z
            u = (tx * px + ty * py + tz * pz) * inv_det
            if u < 0.0 or u > 1.0:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            vv = (dx * qx + dy * qy + dz * qz) * inv_det
            if vv < 0.0 or u + vv > 1.0:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
            if t <= T_MIN:
                continue
            if t < best_t or (t == best_t and tri < best_idx):
                best_t = t
                best_idx = tri
                best_u = u
                best_v = vv
    return best_t, best_idx, best_u, best_v


@njit(cache=True, nogil=True)
def _any_hit(ox, oy, oz, dx, dy, dz, t_max,
             v0, v1, v2,
             node_mins, node_maxs, node_right, node_start, node_count, prim_index,
             stack):
    """True when any triangle blocks the ray within (T_MIN, t_max)."""
    sp = 0
    stack[sp] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        tmin = 0.0
        tmax = t_max
        ok = True
        b0 = node_mins[node, 0]
        b1 = node_maxs[node, 0]
        if dx != 0.0:
            inv = 1.0 / dx
            t0 = (b0 - ox) * inv
            t1 = (b1 - ox) * inv
            if t0 > t1:
                t0, t1 = t1, t0
            if t0 > tmin:
                tmin = t0
            if t1 < tmax:
                tmax = t1
        elif ox < b0 or ox > b1:
            ok = False
        if ok:
            b0 = node_mins[node, 1]
            b1 = node_maxs[node, 1]
            if dy != 0.0:
                inv = 1.0 / dy
                t0 = (b0 - oy) * inv
                t1 = (b1 - oy) * inv
                if t0 > t1:
                    t0, t1 = t1, t0
                if t0 > tmin:
                    tmin = t0
                if t1 < tmax:
                    tmax = t1
            elif oy < b0 or oy > b1:
                ok = False
        if ok:
            b0 = node_mins[node, 2]
            b1 = node_maxs[node, 2]
            if dz != 0.0:
                inv = 1.0 / dz
                t0 = (b0 - oz) * inv
                t1 = (b1 - oz) * inv
                if t0 > t1:
                    t0, t1 = t1, t0
                if t0 > tmin:
                    tmin = t0
                if t1 < tmax:
                    tmax = t1
            elif oz < b0 or oz > b1:
                ok = False
        if not ok or tmin > tmax:
            continue

        right = node_right[node]
        if right >= 0:
            stack[sp] = right
            sp += 1
            stack[sp] = node + 1
            sp += 1
            continue

        start = node_start[node]
        for k in range(start, start + node_count[node]):
            tri = prim_index[k]
            v0x = v0[tri, 0]
            v0y = v0[tri, 1]
            v0z = v0[tri, 2]
            e1x = v1[tri, 0] - v0x
            e1y = v1[tri, 1] - v0y
            e1z = v1[tri, 2] - v0z
            e2x = v2[tri, 0] - v0x
            e2y = v2[tri, 1] - v0y
            e2z = v2[tri, 2] - v0z
            px = dy * e2z - dz * e2y
            py = dz * e2x - dx * e2z
            pz = dx * e2y - dy * e2x
            det = e1x * px + e1y * py + e1z * pz
            if abs(det) < DET_EPS:
                continue
            inv_det = 1.0 / det
            tx = ox - v0x
            ty = oy - v0y
            tz = oz - v0z
            u = (tx * px + ty * py + tz * pz) * inv_det
            if u < 0.0 or u > 1.0:
                continue
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            vv = (dx * qx + dy * qy + dz * qz) * inv_det
            if vv < 0.0 or u + vv > 1.0:
                continue
            t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
            if T_MIN < t < t_max:
                return True
    return False


@njit(cache=True, nogil=True, inline="always")
def _tex_bilinear(tex_data, tex_off, tex_w, tex_h, ti, u, v):
    w = tex_w[ti]
    h = tex_h[ti]
    off = tex_off[ti]
    u = u - np.floor(u)
    v = v - np.floor(v)
    xf = u * w - 0.5
    yf = v * h - 0.5
    x0 = int(np.floor(xf))
    y0 = int(np.floor(yf))
    fx = xf - x0
    fy = yf - y0
    x0w = x0 % w
    x1w = (x0 + 1) % w
    y0w = y0 % h
    y1w = (y0 + 1) % h
    b00 = off + (y0w * w + x0w) * 3
    b01 = off + (y0w * w + x1w) * 3
    b10 = off + (y1w * w + x0w) * 3
    b11 = off + (y1w * w + x1w) * 3
    w00 = (1.0 - fx) * (1.0 - fy)
    w01 = fx * (1.0 - fy)
    w10 = (1.0 - fx) * fy
    w11 = fx * fy
    r = w00 * tex_data[b00] + w01 * tex_data[b01] + w10 * tex_data[b10] + w11 * tex_data[b11]
    g = w00 * tex_data[b00 + 1] + w01 * tex_data[b01 + 1] + w10 * tex_data[b10 + 1] + w11 * tex_data[b11 + 1]
    b = w00 * tex_data[b00 + 2] + w01 * tex_data[b01 + 2] + w10 * tex_data[b10 + 2] + w11 * tex_data[b11 + 2]
    return r, g, b


@njit(cache=True, nogil=True, inline="always")
def _srgb8(c):
    if c < 0.0:
        c = 0.0
    elif c > 1.0:
        c = 1.0
    if c <= 0.0031308:
        s = 12.92 * c
    else:
        s = 1.055 * c ** (1.0 / 2.4) - 0.055
    return np.uint8(np.floor(s * 255.0 + 0.5))


@njit(cache=True, nogil=True)
def mask_rows(y0, y1, width, origin, rot, f, cx, cy,
              v0, v1, v2, inst_id,
              node_mins, node_maxs, node_right, node_start, node_count, prim_index,
              out_mask):
    stack = np.empty(STACK_DEPTH, np.int32)
    ox = origin[0]
    oy = origin[1]
    oz = origin[2]
    r00 = rot[0, 0]
    r01 = rot[0, 1]
    r02 = rot[0, 2]
    r10 = rot[1, 0]
    r11 = rot[1, 1]
    r12 = rot[1, 2]
    r20 = rot[2, 0]
    r21 = rot[2, 1]
    r22 = rot[2, 2]
    for y in range(y0, y1):
        yn = (y + 0.5 - cy) / f
        for x in range(width):
            xn = (x + 0.5 - cx) / f
            dx = r00 * xn + r01 * yn + r02
            dy = r10 * xn + r11 * yn + r12
            dz = r20 * xn + r21 * yn + r22
            inv_len = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
            dx = dx * inv_len
            dy = dy * inv_len
            dz = dz * inv_len
            t, tri, bu, bv = _nearest_hit(
                ox, oy, oz, dx, dy, dz, v0, v1, v2,
                node_mins, node_maxs, node_right, node_start, node_count, prim_index,
                stack,
            )
            if tri >= 0:
                out_mask[y, x] = inst_id[tri]
            else:
                out_mask[y, x] = 0


@njit(cache=True, nogil=True)
def shade_rows(y0, y1, width, origin, rot, f, cx, cy,
               v0, v1, v2, inst_id,
               tri_color, tri_tex, uva, uvb, uvc,
               tex_data, tex_off, tex_w, tex_h,
               light_pos, light_int, light_radius, shadow_samples,
               node_mins, node_maxs, node_right, node_start, node_count, prim_index,
               out_rgb, out_mask):
    stack = np.empty(STACK_DEPTH, np.int32)
    ox = origin[0]
    oy = origin[1]
    oz = origin[2]
    r00 = rot[0, 0]
    r01 = rot[0, 1]
    r02 = rot[0, 2]
    r10 = rot[1, 0]
    r11 = rot[1, 1]
    r12 = rot[1, 2]
    r20 = rot[2, 0]
    r21 = rot[2, 1]
    r22 = rot[2, 2]
    n_lights = light_pos.shape[0]
    for y in range(y0, y1):
        yn = (y + 0.5 - cy) / f
        for x in range(width):
            xn = (x + 0.5 - cx) / f
            dx = r00 * xn + r01 * yn + r02
            dy = r10 * xn + r11 * yn + r12
            dz = r20 * xn + r21 * yn + r22
            inv_len = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
            dx = dx * inv_len
            dy = dy * inv_len
            dz = dz * inv_len
            t, tri, bu, bv = _nearest_hit(
                ox, oy, oz, dx, dy, dz, v0, v1, v2,
                node_mins, node_maxs, node_right, node_start, node_count, prim_index,
                stack,
            )
            if tri < 0:
                out_mask[y, x] = 0
                out_rgb[y, x, 0] = 0
                out_rgb[y, x, 1] = 0
                out_rgb[y, x, 2] = 0
                continue
            out_mask[y, x] = inst_id[tri]

            hx = ox + t * dx
            hy = oy + t * dy
            hz = oz + t * dz

            e1x = v1[tri, 0] - v0[tri, 0]
            e1y = v1[tri, 1] - v0[tri, 1]
            e1z = v1[tri, 2] - v0[tri, 2]
            e2x = v2[tri, 0] - v0[tri, 0]
            e2y = v2[tri, 1] - v0[tri, 1]
            e2z = v2[tri, 2] - v0[tri, 2]
            nx = e1y * e2z - e1z * e2y
            ny = e1z * e2x - e1x * e2z
            nz = e1x * e2y - e1y * e2x
            nlen = np.sqrt(nx * nx + ny * ny + nz * nz)
            if nlen == 0.0:
                out_rgb[y, x, 0] = 0
                out_rgb[y, x, 1] = 0
                out_rgb[y, x, 2] = 0
                continue
            nx = nx / nlen
            ny = ny / nlen
            nz = nz / nlen
            if nx * dx + ny * dy + nz * dz > 0.0:  # face the camera
                nx = -nx
                ny = -ny
                nz = -nz

            ar = tri_color[tri, 0]
            ag = tri_color[tri, 1]
            ab = tri_color[tri, 2]
            ti = tri_tex[tri]
            if ti >= 0:
                w0 = 1.0 - bu - bv
                uu = w0 * uva[tri, 0] + bu * uvb[tri, 0] + bv * uvc[tri, 0]
                vv = w0 * uva[tri, 1] + bu * uvb[tri, 1] + bv * uvc[tri, 1]
                tr, tg, tb = _tex_bilinear(tex_data, tex_off, tex_w, tex_h, ti, uu, vv)
                ar = ar * tr
                ag = ag * tg
                ab = ab * tb

            cr = 0.0
            cg = 0.0
            cb = 0.0
            pix = y * width + x
            for li in range(n_lights):
                radius = light_radius[li]
                ns = shadow_samples if radius > 0.0 else 1
                sr = 0.0
                sg = 0.0
                sb = 0.0
                for s in range(ns):
                    lx = light_pos[li, 0]
                    ly = light_pos[li, 1]
                    lz = light_pos[li, 2]
                    if radius > 0.0:
                        key = (pix * n_lights + li) * ns + s
                        u1 = _hash01(key, 0x51ED)
                        u2 = _hash01(key, 0xA511)
                        zz = 1.0 - 2.0 * u1
                        rr = np.sqrt(max(0.0, 1.0 - zz * zz))
                        ph = 6.283185307179586 * u2
                        lx = lx + radius * rr * np.cos(ph)
                        ly = ly + radius * rr * np.sin(ph)
                        lz = lz + radius * zz
                    wx = lx - hx
                    wy = ly - hy
                    wz = lz - hz
                    d2 = wx * wx + wy * wy + wz * wz
                    if d2 <= 0.0:
                        continue
                    dist = np.sqrt(d2)
                    wx = wx / dist
                    wy = wy / dist
                    wz = wz / dist
                    ndl = nx * wx + ny * wy + nz * wz
                    if ndl <= 0.0:
                        continue
                    sx = hx + nx * SHADOW_BIAS
                    sy = hy + ny * SHADOW_BIAS
                    sz = hz + nz * SHADOW_BIAS
                    if _any_hit(sx, sy, sz, wx, wy, wz, dist - SHADOW_BIAS,
                                v0, v1, v2,
                                node_mins, node_maxs, node_right, node_start, node_count,
                                prim_index, stack):
                        continue
                    w = ndl / d2
                    sr = sr + light_int[li, 0] * w
                    sg = sg + light_int[li, 1] * w
                    sb = sb + light_int[li, 2] * w
                inv_ns = 1.0 / ns
                cr = cr + ar * sr * inv_ns
                cg = cg + ag * sg * inv_ns
                cb = cb + ab * sb * inv_ns

            out_rgb[y, x, 0] = _srgb8(cr)
            out_rgb[y, x, 1] = _srgb8(cg)
            out_rgb[y, x, 2] = _srgb8(cb)
