"""Independent reference implementations used only by the tests.

Everything here is written naively and separately from the package code:
rational-arithmetic IoU, an exhaustive matcher that walks the matching
rules literally, a minidom-based VOC reader, and an all-triangles numpy
ray caster that mirrors the renderer's arithmetic without its BVH.
"""

from __future__ import annotations

from fractions import Fraction
from xml.dom import minidom

import numpy as np

from cadsynth.geom import quat_to_matrix


def iou_fraction(a, b) -> Fraction:
    """Exact IoU of two half-open integer boxes."""
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return Fraction(0)
    inter = Fraction(ix * iy)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def brute_force_match(detections, gts, conf_threshold, iou_threshold):
    """Literal transcription of the matching rules.

    detections: list of (bbox tuple, score); gts: list of bbox tuples.
    Exact arithmetic throughout (Fractions for IoU comparisons).
    Returns (tp, fp, fn).
    """
    remaining = [i for i, (_, score) in enumerate(detections) if score > conf_threshold]
    gt_taken = [False] * len(gts)
    iou_gate = Fraction(iou_threshold)
    tp = 0
    fp = 0
    while remaining:
        # highest score first; ties keep the earliest input index
        best = remaining[0]
        for i in remaining[1:]:
            if detections[i][1] > detections[best][1]:
                best = i
        remaining.remove(best)
        box = detections[best][0]
        chosen = -1
        chosen_iou = iou_gate
        for j, gt in enumerate(gts):
            if gt_taken[j]:
                continue
            value = iou_fraction(box, gt)
            if value > chosen_iou:
                chosen_iou = value
                chosen = j
        if chosen >= 0:
            gt_taken[chosen] = True
            tp += 1
        else:
            fp += 1
    fn = gt_taken.count(False)
    return tp, fp, fn


def minimal_voc_read(data: bytes):
    """Second, independent VOC reader (minidom). Returns
    (filename, width, height, [(name, xmin, ymin, xmax, ymax, difficult)])
    with coordinates still in the file's own 1-based inclusive convention."""

    def text(node, tag):
        return node.getElementsByTagName(tag)[0].firstChild.data.strip()

    doc = minidom.parseString(data)
    root = doc.documentElement
    size = root.getElementsByTagName("size")[0]
    objects = []
    for obj in root.getElementsByTagName("object"):
        box = obj.getElementsByTagName("bndbox")[0]
        difficult_nodes = obj.getElementsByTagName("difficult")
        difficult = bool(int(difficult_nodes[0].firstChild.data)) if difficult_nodes else False
        objects.append((
            text(obj, "name"),
            int(text(box, "xmin")), int(text(box, "ymin")),
            int(text(box, "xmax")), int(text(box, "ymax")),
            difficult,
        ))
    return (text(root, "filename"), int(text(size, "width")), int(text(size, "height")),
            objects)


def brute_force_mask(compiled, camera):
    """All-triangles nearest-hit oracle: expression-for-expression the same
    arithmetic as the mask kernel, vectorized over pixels per triangle, with
    no acceleration structure."""
    w, h = camera.width, camera.height
    origin = np.asarray(camera.pose.translation, dtype=np.float64)
    rot = quat_to_matrix(camera.pose.rotation)
    f = float(camera.focal_px)
    cx = float(camera.principal[0])
    cy = float(camera.principal[1])

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    xn = (xs + 0.5 - cx) / f
    yn = (ys + 0.5 - cy) / f
    xng = np.broadcast_to(xn[None, :], (h, w))
    yng = np.broadcast_to(yn[:, None], (h, w))
    dx = rot[0, 0] * xng + rot[0, 1] * yng + rot[0, 2]
    dy = rot[1, 0] * xng + rot[1, 1] * yng + rot[1, 2]
    dz = rot[2, 0] * xng + rot[2, 1] * yng + rot[2, 2]
    inv_len = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
    dx = dx * inv_len
    dy = dy * inv_len
    dz = dz * inv_len

    ox, oy, oz = origin[0], origin[1], origin[2]
    best_t = np.full((h, w), np.inf)
    best_idx = np.full((h, w), -1, dtype=np.int64)

    v0, v1, v2 = compiled.v0, compiled.v1, compiled.v2
    for tri in range(v0.shape[0]):
        v0x, v0y, v0z = v0[tri, 0], v0[tri, 1], v0[tri, 2]
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
        good = np.abs(det) >= 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_det = 1.0 / det
            tx = ox - v0x
            ty = oy - v0y
            tz = oz - v0z
            u = (tx * px + ty * py + tz * pz) * inv_det
            good &= (u >= 0.0) & (u <= 1.0)
            qx = ty * e1z - tz * e1y
            qy = tz * e1x - tx * e1z
            qz = tx * e1y - ty * e1x
            vv = (dx * qx + dy * qy + dz * qz) * inv_det
            good &= (vv >= 0.0) & (u + vv <= 1.0)
            t = (e2x * qx + e2y * qy + e2z * qz) * inv_det
            good &= t > 1e-9
            good &= t < best_t  # ascending tri index: equal t keeps the lower index
        best_t = np.where(good, t, best_t)
        best_idx = np.where(good, tri, best_idx)

    mask = np.zeros((h, w), dtype=np.int32)
    hit = best_idx >= 0
    mask[hit] = compiled.inst_id[best_idx[hit]]
    return mask
