"""PASCAL VOC XML annotations (the LabelImg-compatible subset).

Internal boxes are half-open pixel rectangles; VOC files store 1-based
inclusive integer corners. The conversion is (xmin+1, ymin+1, xmax, ymax)
on write and its inverse on parse, which is the identity round-trip on
integer boxes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

from .boxes import BBox
from .errors import MalformedAnnotation


@dataclass(frozen=True)
class VocObject:
    name: str
    bbox: BBox
    difficult: bool = False


@dataclass(frozen=True)
class Annotation:
    filename: str
    width: int
    height: int
    objects: tuple[VocObject, ...] = field(default_factory=tuple)
    depth: int = 3

    def validate(self) -> None:
        if self.width < 1 or self.height < 1:
            raise MalformedAnnotation(f"bad image size {self.width}x{self.height}")
        for obj in self.objects:
            if not obj.name:
                raise MalformedAnnotation("object with empty class name")
            b = obj.bbox
            if any(int(v) != v for v in b.as_tuple()):
                raise MalformedAnnotation(f"box {b.as_tuple()} has non-integer coordinates")
            if not (0 <= b.xmin < b.xmax <= self.width and 0 <= b.ymin < b.ymax <= self.height):
                raise MalformedAnnotation(
                    f"box {b.as_tuple()} outside image {self.width}x{self.height}"
                )

    @property
    def stem(self) -> str:
        name = self.filename
        return name[: name.rfind(".")] if "." in name else name


def write_voc_xml(ann: Annotation) -> bytes:
    ann.validate()
    root = ET.Element("annotation")
    ET.SubElement(root, "folder").text = "images"
    ET.SubElement(root, "filename").text = ann.filename
    size = ET.SubElement(root, "size")
    ET.SubElement(size, "width").text = str(ann.width)
    ET.SubElement(size, "height").text = str(ann.height)
    ET.SubElement(size, "depth").text = str(ann.depth)
    ET.SubElement(root, "segmented").text = "0"
    for obj in ann.objects:
        node = ET.SubElement(root, "object")
        ET.SubElement(node, "name").text = obj.name
        ET.SubElement(node, "pose").text = "Unspecified"
        ET.SubElement(node, "truncated").text = "0"
        ET.SubElement(node, "difficult").text = "1" if obj.difficult else "0"
        box = ET.SubElement(node, "bndbox")
        # half-open internal -> 1-based inclusive VOC
        ET.SubElement(box, "xmin").text = str(int(obj.bbox.xmin) + 1)
        ET.SubElement(box, "ymin").text = str(int(obj.bbox.ymin) + 1)
        ET.SubElement(box, "xmax").text = str(int(obj.bbox.xmax))
        ET.SubElement(box, "ymax").text = str(int(obj.bbox.ymax))
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8")


def _require(parent: ET.Element, tag: str) -> ET.Element:
    node = parent.find(tag)
    if node is None:
        raise MalformedAnnotation(f"missing <{tag}> element")
    return node


def _int_text(parent: ET.Element, tag: str) -> int:
    text = (_require(parent, tag).text or "").strip()
    try:
        return int(text)
    except ValueError:
        raise MalformedAnnotation(f"<{tag}> must be an integer, got {text!r}") from None


def parse_voc_xml(data: bytes) -> Annotation:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedAnnotation(f"not well-formed XML: {exc}") from None
    if root.tag != "annotation":
        raise MalformedAnnotation(f"root element is <{root.tag}>, expected <annotation>")
    filename = (_require(root, "filename").text or "").strip()
    if not filename:
        raise MalformedAnnotation("empty <filename>")
    size = _require(root, "size")
    width = _int_text(size, "width")
    height = _int_text(size, "height")
    depth_node = size.find("depth")
    depth = int((depth_node.text or "3").strip()) if depth_node is not None else 3

    objects = []
    for node in root.findall("object"):
        name = (_require(node, "name").text or "").strip()
        box = _require(node, "bndbox")
        xmin = _int_text(box, "xmin") - 1  # VOC 1-based inclusive -> half-open
        ymin = _int_text(box, "ymin") - 1
        xmax = _int_text(box, "xmax")
        ymax = _int_text(box, "ymax")
        if xmin >= xmax or ymin >= ymax:
            raise MalformedAnnotation(
                f"degenerate bndbox ({xmin + 1},{ymin + 1},{xmax},{ymax}) for {name!r}"
            )
        difficult_node = node.find("difficult")
        difficult = (difficult_node is not None
                     and (difficult_node.text or "0").strip() not in ("0", ""))
        objects.append(VocObject(name=name, bbox=BBox(xmin, ymin, xmax, ymax), difficult=difficult))

    ann = Annotation(filename=filename, width=width, height=height,
                     objects=tuple(objects), depth=depth)
    ann.validate()
    return ann


def with_filename(ann: Annotation, filename: str) -> Annotation:
    return replace(ann, filename=filename)
