"""numba kernels: ray traversal, shading, and the per-pixel RNG.

The RNG here mirrors rng.PixelStream bit for bit (same splitmix64
constants, same absorption order); test_renderer cross-checks the two
implementations.  All uint64 arithmetic is kept strictly in uint64 to
avoid numba's silent promotion to float64.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

U_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
U_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
U_MIX2 = np.uint64(0x94D049BB133111EB)
U30 = np.uint64(30)
U27 = np.uint64(27)
U31 = np.uint64(31)
U11 = np.uint64(11)
INV_2_53 = 1.0 / 9007199254740992.0

TIE_EPS = 1e-12
T_MIN = 1e-9
NORMAL_OFFSET = 1e-5
STACK_DEPTH = 64

PURPOSE_JITTER = np.uint64(0)
PURPOSE_SHADE = np.uint64(1)
PURPOSE_SHADOW = np.uint64(2)


@njit(cache=True, inline="always")
def _mix64(z):
    z = z + U_GOLDEN
    z = (z ^ (z >> U30)) * U_MIX1
    z = (z ^ (z >> U27)) * U_MIX2
    return z ^ (z >> U31)


@njit(cache=True, inline="always")
def _stream_state(seed, image_index, x, y, purpose):
    h = _mix64(seed)
    h = _mix64(h ^ image_index)
    h = _mix64(h ^ x)
    h = _mix64(h ^ y)
    h = _mix64(h ^ purpose)
    return h


@njit(cache=True, inline="always")
def _next_float(state):
    state = state + U_GOLDEN
    z = state
    z = (z ^ (z >> U30)) * U_MIX1
    z = (z ^ (z >> U27)) * U_MIX2
    z = z ^ (z >> U31)
    return state, np.float64(z >> U11) * INV_2_53


@njit(cache=True)
def stream_fill(seed, image_index, x, y, purpose, out):
    """Fill `out` with the float draws of one pixel stream (for tests)."""
    state = _stream_state(
        np.uint64(seed), np.uint64(image_index), np.uint64(x), np.uint64(y), np.uint64(purpose)
    )
    for i in range(out.shape[0]):
        state, u = _next_float(state)
        out[i] = u


@njit(cache=True)
def first_draw_grid(seed, image_index, width, height, purpose, out):
    """First uint64 draw of every pixel stream (collision testing)."""
    for y in range(height):
        for x in range(width):
            state = _stream_state(
                np.uint64(seed), np.uint64(image_index), np.uint64(x),
                np.uint64(y), np.uint64(purpose),
            )
            state = state + U_GOLDEN
            z = state
            z = (z ^ (z >> U30)) * U_MIX1
            z = (z ^ (z >> U27)) * U_MIX2
            out[y, x] = z ^ (z >> U31)


@njit(cache=True, inline="always")
def _ray_triangle(ox, oy, oz, dx, dy, dz, tv, tri):
    """Moller-Trumbore, two-sided.  Returns (hit, t, u, v)."""
    ax, ay, az = tv[tri, 0, 0], tv[tri, 0, 1], tv[tri, 0, 2]
    e1x = tv[tri, 1, 0] - ax
    e1y = tv[tri, 1, 1] - ay
    e1z = tv[tri, 1, 2] - az
    e2x = tv[tri, 2, 0] - ax
    e2y = tv[tri, 2, 1] - ay
    e2z = tv[tri, 2, 2] - az
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if abs(det) < 1e-12:
        return False, 0.0, 0.0, 0.0
    inv = 1.0 / det
    sx = ox - ax
    sy = oy - ay
    sz = oz - az
    u = (sx * px + sy * py + sz * pz) * inv
    if u < 0.0 or u > 1.0:
        return False, 0.0, 0.0, 0.0
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return False, 0.0, 0.0, 0.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return True, t, u, v


@njit(cache=True, inline="always")
def _slab_hit(ox, oy, oz, dx, dy, dz, nmin, nmax, node, t_limit):
    tmin = 0.0
    tmax = t_limit
    for axis in range(3):
        if axis == 0:
            o, d = ox, dx
        elif axis == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        lo = nmin[node, axis]
        hi = nmax[node, axis]
        if abs(d) < 1e-300:
            if o < lo or o > hi:
                return False
        else:
            inv = 1.0 / d
            t1 = (lo - o) * inv
            t2 = (hi - o) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
    return True


@njit(cache=True)
def _trace(nmin, nmax, left, right, start, count, prims,
           tv, t_row, t_local, ox, oy, oz, dx, dy, dz, root):
    """Nearest hit with the (t, instance, triangle) tie-break.

    Returns (gidx, t, u, v); gidx = -1 on miss.
    """
    best_g = -1
    best_t = np.inf
    best_row = 2147483647
    best_local = 2147483647
    best_u = 0.0
    best_v = 0.0
    if len(left) == 0:
        return best_g, best_t, best_u, best_v
    stack = np.empty(STACK_DEPTH, np.int32)
    stack[0] = root
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _slab_hit(ox, oy, oz, dx, dy, dz, nmin, nmax, node, best_t + TIE_EPS):
            continue
        if count[node] > 0:
            for i in range(start[node], start[node] + count[node]):
                tri = prims[i]
                hit, t, u, v = _ray_triangle(ox, oy, oz, dx, dy, dz, tv, tri)
                if not hit or t <= T_MIN:
                    continue
                row = t_row[tri]
                local = t_local[tri]
                if t < best_t - TIE_EPS:
                    best_g, best_t, best_row, best_local = tri, t, row, local
                    best_u, best_v = u, v
                elif t <= best_t + TIE_EPS:
                    if row < best_row or (row == best_row and local < best_local):
                        best_g, best_row, best_local = tri, row, local
                        best_u, best_v = u, v
                        if t < best_t:
                            best_t = t
        else:
            stack[sp] = right[node]
            stack[sp + 1] = left[node]
            sp += 2
    return best_g, best_t, best_u, best_v


@njit(cache=True)
def _any_hit(nmin, nmax, left, right, start, count, prims, tv,
             ox, oy, oz, dx, dy, dz, root):
    if len(left) == 0:
        return False
    stack = np.empty(STACK_DEPTH, np.int32)
    stack[0] = root
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _slab_hit(ox, oy, oz, dx, dy, dz, nmin, nmax, node, np.inf):
            continue
        if count[node] > 0:
            for i in range(start[node], start[node] + count[node]):
                hit, t, u, v = _ray_triangle(ox, oy, oz, dx, dy, dz, tv, prims[i])
                if hit and t > T_MIN:
                    return True
        else:
            stack[sp] = right[node]
            stack[sp + 1] = left[node]
            sp += 2
    return False


@njit(cache=True, inline="always")
def _env_lookup(env_pix, env_const, env_is_const, dx, dy, dz):
    if env_is_const:
        return env_const[0], env_const[1], env_const[2]
    h = env_pix.shape[0]
    w = env_pix.shape[1]
    up = -dy
    if up > 1.0:
        up = 1.0
    elif up < -1.0:
        up = -1.0
    v = math.acos(up) / math.pi
    u = math.atan2(dx, dz) / (2.0 * math.pi) + 0.5
    x = u * w - 0.5
    y = v * h - 0.5
    x0f = math.floor(x)
    y0f = math.floor(y)
    fx = x - x0f
    fy = y - y0f
    x0 = int(x0f) % w
    x1 = (int(x0f) + 1) % w
    if x0 < 0:
        x0 += w
    if x1 < 0:
        x1 += w
    y0 = int(y0f)
    y1 = y0 + 1
    if y1 < 0:
        y1 = 0
    elif y1 > h - 1:
        y1 = h - 1
    if y0 < 0:
        y0 = 0
    elif y0 > h - 1:
        y0 = h - 1
    r = (1 - fy) * ((1 - fx) * env_pix[y0, x0, 0] + fx * env_pix[y0, x1, 0]) + fy * (
        (1 - fx) * env_pix[y1, x0, 0] + fx * env_pix[y1, x1, 0]
    )
    g = (1 - fy) * ((1 - fx) * env_pix[y0, x0, 1] + fx * env_pix[y0, x1, 1]) + fy * (
        (1 - fx) * env_pix[y1, x0, 1] + fx * env_pix[y1, x1, 1]
    )
    b = (1 - fy) * ((1 - fx) * env_pix[y0, x0, 2] + fx * env_pix[y0, x1, 2]) + fy * (
        (1 - fx) * env_pix[y1, x0, 2] + fx * env_pix[y1, x1, 2]
    )
    return r, g, b


@njit(cache=True)
def env_eval(env_pix, env_const, env_is_const, dx, dy, dz, out):
    """Single lookup through the kernel path (for tests)."""
    r, g, b = _env_lookup(env_pix, env_const, env_is_const, dx, dy, dz)
    out[0] = r
    out[1] = g
    out[2] = b


@njit(cache=True, inline="always")
def _cosine_direction(nx, ny, nz, u1, u2):
    r = math.sqrt(u1)
    phi = 2.0 * math.pi * u2
    lx = r * math.cos(phi)
    ly = r * math.sin(phi)
    lz = math.sqrt(max(0.0, 1.0 - u1))
    # orthonormal basis around the normal
    if abs(nx) > 0.9:
        axx, axy, axz = 0.0, 1.0, 0.0
    else:
        axx, axy, axz = 1.0, 0.0, 0.0
    tx = axy * nz - axz * ny
    ty = axz * nx - axx * nz
    tz = axx * ny - axy * nx
    inv = 1.0 / math.sqrt(tx * tx + ty * ty + tz * tz)
    tx *= inv
    ty *= inv
    tz *= inv
    bx = ny * tz - nz * ty
    by = nz * tx - nx * tz
    bz = nx * ty - ny * tx
    wx = tx * lx + bx * ly + nx * lz
    wy = ty * lx + by * ly + ny * lz
    wz = tz * lx + bz * ly + nz * lz
    return wx, wy, wz


@njit(cache=True, parallel=True)
def render_kernel(
    fx, fy, cx, cy, width, height,
    g_nmin, g_nmax, g_left, g_right, g_start, g_count, g_prims,
    tv, tn, t_row, t_local,
    n_rows, i_nmin, i_nmax, i_left, i_right, i_start, i_count, i_prims, i_node_off,
    mat_color, mat_spec, mat_mirror,
    env_pix, env_const, env_is_const,
    pnx, pny, pnz, pd,
    spp, n_diff, n_shadow, enable_shadows, max_shadow,
    seed, image_index,
    color, depth, ids_row, shadow, iso_counts,
):
    for y in prange(height):
        uy = np.uint64(y)
        for x in range(width):
            ux = np.uint64(x)
            st_j = _stream_state(seed, image_index, ux, uy, PURPOSE_JITTER)
            st_s = _stream_state(seed, image_index, ux, uy, PURPOSE_SHADE)
            counts = np.zeros(n_rows, np.int32)
            hits = 0
            cr = 0.0
            cg = 0.0
            cb = 0.0
            dmin = np.inf
            for s in range(spp):
                st_j, ju = _next_float(st_j)
                st_j, jv = _next_float(st_j)
                px = x + ju - 0.5
                py = y + jv - 0.5
                dx = (px - cx) / fx
                dy = (py - cy) / fy
                dz = 1.0
                inv = 1.0 / math.sqrt(dx * dx + dy * dy + 1.0)
                dx *= inv
                dy *= inv
                dz *= inv
                # isolated per-instance coverage (as if each car were alone)
                for k in range(n_rows):
                    base = i_node_off[k]
                    if _any_hit(i_nmin, i_nmax, i_left, i_right, i_start, i_count,
                                i_prims, tv, 0.0, 0.0, 0.0, dx, dy, dz, base):
                        iso_counts[k, y, x] += 1
                gidx, t, bu, bv = _trace(g_nmin, g_nmax, g_left, g_right, g_start,
                                         g_count, g_prims, tv, t_row, t_local,
                                         0.0, 0.0, 0.0, dx, dy, dz, 0)
                if gidx < 0:
                    continue
                hits += 1
                row = t_row[gidx]
                counts[row] += 1
                z = t * dz
                if z < dmin:
                    dmin = z
                # interpolated shading normal, flipped against the ray
                w0 = 1.0 - bu - bv
                nx = w0 * tn[gidx, 0, 0] + bu * tn[gidx, 1, 0] + bv * tn[gidx, 2, 0]
                ny = w0 * tn[gidx, 0, 1] + bu * tn[gidx, 1, 1] + bv * tn[gidx, 2, 1]
                nz = w0 * tn[gidx, 0, 2] + bu * tn[gidx, 1, 2] + bv * tn[gidx, 2, 2]
                nlen = math.sqrt(nx * nx + ny * ny + nz * nz)
                if nlen < 1e-12:
                    nx, ny, nz = tn[gidx, 0, 0], tn[gidx, 0, 1], tn[gidx, 0, 2]
                else:
                    nx /= nlen
                    ny /= nlen
                    nz /= nlen
                if nx * dx + ny * dy + nz * dz > 0.0:
                    nx, ny, nz = -nx, -ny, -nz
                hx = t * dx + NORMAL_OFFSET * nx
                hy = t * dy + NORMAL_OFFSET * ny
                hz = t * dz + NORMAL_OFFSET * nz
                ar = 0.0
                ag = 0.0
                ab = 0.0
                for j in range(n_diff):
                    st_s, u1 = _next_float(st_s)
                    st_s, u2 = _next_float(st_s)
                    wx, wy, wz = _cosine_direction(nx, ny, nz, u1, u2)
                    if not _any_hit(g_nmin, g_nmax, g_left, g_right, g_start,
                                    g_count, g_prims, tv, hx, hy, hz, wx, wy, wz, 0):
                        er, eg, eb = _env_lookup(env_pix, env_const, env_is_const,
                                                 wx, wy, wz)
                        ar += er
                        ag += eg
                        ab += eb
                sr = mat_color[row, 0] * ar / n_diff
                sg = mat_color[row, 1] * ag / n_diff
                sb = mat_color[row, 2] * ab / n_diff
                if mat_mirror[row] != 0 and mat_spec[row] > 0.0:
                    ndd = dx * nx + dy * ny + dz * nz
                    mx = dx - 2.0 * ndd * nx
                    my = dy - 2.0 * ndd * ny
                    mz = dz - 2.0 * ndd * nz
                    if not _any_hit(g_nmin, g_nmax, g_left, g_right, g_start,
                                    g_count, g_prims, tv, hx, hy, hz, mx, my, mz, 0):
                        cosi = -ndd
                        if cosi < 0.0:
                            cosi = 0.0
                        elif cosi > 1.0:
                            cosi = 1.0
                        fres = 0.04 + 0.96 * (1.0 - cosi) ** 5
                        er, eg, eb = _env_lookup(env_pix, env_const, env_is_const,
                                                 mx, my, mz)
                        sr += mat_spec[row] * fres * er
                        sg += mat_spec[row] * fres * eg
                        sb += mat_spec[row] * fres * eb
                # clamp per sample so premultiplied color stays <= alpha
                cr += min(max(sr, 0.0), 1.0)
                cg += min(max(sg, 0.0), 1.0)
                cb += min(max(sb, 0.0), 1.0)
            color[y, x, 0] = cr / spp
            color[y, x, 1] = cg / spp
            color[y, x, 2] = cb / spp
            color[y, x, 3] = hits / spp
            if hits > 0:
                depth[y, x] = dmin
                best_c = 0
                best_k = 0
                for k in range(n_rows):
                    if counts[k] > best_c:
                        best_c = counts[k]
                        best_k = k
                ids_row[y, x] = best_k + 1
            else:
                depth[y, x] = np.inf
                ids_row[y, x] = 0
                if enable_shadows and n_rows > 0:
                    dx = (x - cx) / fx
                    dy = (y - cy) / fy
                    inv = 1.0 / math.sqrt(dx * dx + dy * dy + 1.0)
                    dx *= inv
                    dy *= inv
                    dz = inv
                    denom = dx * pnx + dy * pny + dz * pnz
                    if abs(denom) >= 1e-12:
                        tp = pd / denom
                        if tp > 0.0:
                            gidx, t, bu, bv = _trace(g_nmin, g_nmax, g_left, g_right,
                                                     g_start, g_count, g_prims, tv,
                                                     t_row, t_local,
                                                     0.0, 0.0, 0.0, dx, dy, dz, 0)
                            if gidx < 0 or t >= tp:
                                gx = tp * dx + NORMAL_OFFSET * pnx
                                gy = tp * dy + NORMAL_OFFSET * pny
                                gz = tp * dz + NORMAL_OFFSET * pnz
                                st_w = _stream_state(seed, image_index, ux, uy,
                                                     PURPOSE_SHADOW)
                                occ = 0
                                for j in range(n_shadow):
                                    st_w, u1 = _next_float(st_w)
                                    st_w, u2 = _next_float(st_w)
                                    wx, wy, wz = _cosine_direction(pnx, pny, pnz,
                                                                   u1, u2)
                                    if _any_hit(g_nmin, g_nmax, g_left, g_right,
                                                g_start, g_count, g_prims, tv,
                                                gx, gy, gz, wx, wy, wz, 0):
                                        occ += 1
                                sh = occ / n_shadow
                                if sh > max_shadow:
                                    sh = max_shadow
                                shadow[y, x] = sh


@njit(cache=True)
def trace_one(nmin, nmax, left, right, start, count, prims, tv, t_row, t_local,
              ox, oy, oz, dx, dy, dz):
    """Single-ray nearest hit (for the public trace wrapper and tests)."""
    return _trace(nmin, nmax, left, right, start, count, prims, tv, t_row,
                  t_local, ox, oy, oz, dx, dy, dz, 0)


@njit(cache=True)
def any_hit_one(nmin, nmax, left, right, start, count, prims, tv,
                ox, oy, oz, dx, dy, dz, root):
    return _any_hit(nmin, nmax, left, right, start, count, prims, tv,
                    ox, oy, oz, dx, dy, dz, root)


@njit(cache=True)
def scatter_blur(color, radii, out):
    """Spread each pixel's premultiplied RGBA over a uniform disc.

    Disc membership is dx*dx + dy*dy <= r*r on integer offsets; weights
    are renormalized over the in-bounds members so total energy is
    preserved at image edges. Radius below 1 degenerates to the center
    pixel alone, which makes zero-radius input a bit-exact pass-through.
    """
    h, w = radii.shape
    for y in range(h):
        for x in range(w):
            c0 = color[y, x, 0]
            c1 = color[y, x, 1]
            c2 = color[y, x, 2]
            c3 = color[y, x, 3]
            r = radii[y, x]
            if r < 1.0:
                out[y, x, 0] += c0
                out[y, x, 1] += c1
                out[y, x, 2] += c2
                out[y, x, 3] += c3
                continue
            if c0 == 0.0 and c1 == 0.0 and c2 == 0.0 and c3 == 0.0:
                continue
            ri = int(r)
            r2 = r * r
            members = 0
            for dy in range(-ri, ri + 1):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                dy2 = dy * dy
                for dx in range(-ri, ri + 1):
                    if dy2 + dx * dx <= r2 and 0 <= x + dx < w:
                        members += 1
            wgt = 1.0 / members
            for dy in range(-ri, ri + 1):
                yy = y + dy
                if yy < 0 or yy >= h:
                    continue
                dy2 = dy * dy
                for dx in range(-ri, ri + 1):
                    if dy2 + dx * dx <= r2:
                        xx = x + dx
                        if 0 <= xx < w:
                            out[yy, xx, 0] += c0 * wgt
                            out[yy, xx, 1] += c1 * wgt
                            out[yy, xx, 2] += c2 * wgt
                            out[yy, xx, 3] += c3 * wgt
